//! Bit-accurate unsigned array multiplier built from AND gates, half adders
//! and full-adder cells.
//!
//! The netlist is a flat list of placements in evaluation order over a wire
//! vector. Wire 0 is constant zero, wires `1..=width` carry operand `a` (LSB
//! first) and the next `width` wires carry operand `b`.
//!
//! Full-adder cells are wired as `a = partial sum in`, `b = partial product`,
//! `cin = carry`. Half adders have no approximate counterpart in the cell
//! library and are always exact. A full-adder cell is approximate when its sum
//! output lands in a result column below `approx_columns`.

use std::fmt::{self, Write as _};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::cells::{AdderCellKind, AdderCellSpec};
use crate::error::{Error, Result};

pub type WireId = u32;

/// Constant-zero wire.
pub const ZERO_WIRE: WireId = 0;

/// Largest operand width the evaluator accepts (products must fit in `u32`).
pub const MAX_WIDTH: u32 = 16;

/// How partial-product rows are accumulated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ArrayTopology {
    /// Each row is a ripple-carry adder adding the next partial-product row to
    /// the running sum: one half adder at the row LSB, full adders above it.
    #[default]
    RippleRows,
    /// Carry-save rows (carries move diagonally to the next row) followed by
    /// a ripple-carry merge row.
    CarrySave,
}

impl ArrayTopology {
    pub fn name(self) -> &'static str {
        match self {
            ArrayTopology::RippleRows => "ripple-rows",
            ArrayTopology::CarrySave => "carry-save",
        }
    }
}

impl fmt::Display for ArrayTopology {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ArrayTopology {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ripple-rows" | "ripple" => Ok(ArrayTopology::RippleRows),
            "carry-save" | "braun" => Ok(ArrayTopology::CarrySave),
            other => Err(Error::Config(format!(
                "unknown topology '{other}' (expected 'ripple-rows' or 'carry-save')"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MultiplierConfig {
    pub width: u32,
    pub approx_columns: u32,
    pub cell_kind: AdderCellKind,
    #[serde(default)]
    pub topology: ArrayTopology,
}

impl MultiplierConfig {
    /// 8x8 AMA5 multiplier with the nine low result columns approximated.
    pub fn baseline() -> Self {
        MultiplierConfig {
            width: 8,
            approx_columns: 9,
            cell_kind: AdderCellKind::Ama5,
            topology: ArrayTopology::RippleRows,
        }
    }

    pub fn exact(width: u32) -> Self {
        MultiplierConfig {
            width,
            approx_columns: 0,
            cell_kind: AdderCellKind::Exact,
            topology: ArrayTopology::RippleRows,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(2..=MAX_WIDTH).contains(&self.width) {
            return Err(Error::Config(format!(
                "width {} outside [2, {MAX_WIDTH}]",
                self.width
            )));
        }
        if self.approx_columns > 2 * self.width {
            return Err(Error::Config(format!(
                "approx_columns {} outside [0, {}]",
                self.approx_columns,
                2 * self.width
            )));
        }
        Ok(())
    }

    pub fn max_operand(&self) -> u32 {
        (1u32 << self.width) - 1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlacementKind {
    And,
    HalfAdder,
    FullAdder(AdderCellKind),
}

/// One gate or cell in the array. `inputs` holds `[x, y, _]` for AND gates
/// and half adders and `[a, b, cin]` for full adders; `outputs[1]` is unused
/// for AND gates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Placement {
    pub kind: PlacementKind,
    pub row: u32,
    pub column: u32,
    pub inputs: [WireId; 3],
    pub outputs: [WireId; 2],
}

impl Placement {
    pub fn is_approximate(&self) -> bool {
        matches!(self.kind, PlacementKind::FullAdder(k) if k != AdderCellKind::Exact)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct CellCensus {
    pub exact_cells: usize,
    pub approx_cells: usize,
    pub half_adders: usize,
    pub and_gates: usize,
}

#[derive(Debug, Clone)]
pub struct MultiplierNetlist {
    config: MultiplierConfig,
    placements: Vec<Placement>,
    wire_count: u32,
    result: Vec<WireId>,
    specs: [AdderCellSpec; 2],
}

struct Builder {
    config: MultiplierConfig,
    placements: Vec<Placement>,
    next_wire: WireId,
}

impl Builder {
    fn new(config: MultiplierConfig) -> Self {
        Builder {
            config,
            placements: Vec::new(),
            next_wire: 1 + 2 * config.width,
        }
    }

    fn wire(&mut self) -> WireId {
        let w = self.next_wire;
        self.next_wire += 1;
        w
    }

    fn and(&mut self, i: u32, j: u32) -> WireId {
        // p(i, j) = a(j) & b(i), lands in column i + j.
        let out = self.wire();
        self.placements.push(Placement {
            kind: PlacementKind::And,
            row: i,
            column: i + j,
            inputs: [1 + j, 1 + self.config.width + i, ZERO_WIRE],
            outputs: [out, ZERO_WIRE],
        });
        out
    }

    fn half(&mut self, row: u32, column: u32, x: WireId, y: WireId) -> (WireId, WireId) {
        let (s, c) = (self.wire(), self.wire());
        self.placements.push(Placement {
            kind: PlacementKind::HalfAdder,
            row,
            column,
            inputs: [x, y, ZERO_WIRE],
            outputs: [s, c],
        });
        (s, c)
    }

    fn full(
        &mut self,
        row: u32,
        column: u32,
        a: WireId,
        b: WireId,
        cin: WireId,
    ) -> (WireId, WireId) {
        let kind = if column < self.config.approx_columns {
            self.config.cell_kind
        } else {
            AdderCellKind::Exact
        };
        let (s, c) = (self.wire(), self.wire());
        self.placements.push(Placement {
            kind: PlacementKind::FullAdder(kind),
            row,
            column,
            inputs: [a, b, cin],
            outputs: [s, c],
        });
        (s, c)
    }

    fn ripple_rows(&mut self) -> Vec<WireId> {
        let n = self.config.width;
        let mut acc: Vec<WireId> = vec![ZERO_WIRE; (2 * n) as usize];
        for j in 0..n {
            acc[j as usize] = self.and(0, j);
        }
        for i in 1..n {
            let pps: Vec<WireId> = (0..n).map(|j| self.and(i, j)).collect();
            let mut carry = ZERO_WIRE;
            for j in 0..n {
                let col = i + j;
                let x = acc[col as usize];
                let (s, c) = if j == 0 {
                    self.half(i, col, x, pps[0])
                } else {
                    self.full(i, col, x, pps[j as usize], carry)
                };
                acc[col as usize] = s;
                carry = c;
            }
            acc[(i + n) as usize] = carry;
        }
        acc
    }

    fn carry_save(&mut self) -> Vec<WireId> {
        let n = self.config.width;
        let cols = (2 * n) as usize;
        let mut result = vec![ZERO_WIRE; cols];
        let mut sums: Vec<Option<WireId>> = vec![None; cols];
        let mut carries: Vec<Option<WireId>> = vec![None; cols + 1];
        for j in 0..n {
            sums[j as usize] = Some(self.and(0, j));
        }
        result[0] = sums[0].unwrap();
        for i in 1..n {
            let pps: Vec<WireId> = (0..n).map(|j| self.and(i, j)).collect();
            let mut next_sums = vec![None; cols];
            let mut next_carries = vec![None; cols + 1];
            for j in 0..n {
                let col = (i + j) as usize;
                let y = pps[j as usize];
                let (s, c) = match (sums[col], carries[col]) {
                    (None, None) => {
                        next_sums[col] = Some(y);
                        continue;
                    }
                    (Some(x), None) if i == 1 => self.half(i, col as u32, x, y),
                    (x, c) => self.full(
                        i,
                        col as u32,
                        x.unwrap_or(ZERO_WIRE),
                        y,
                        c.unwrap_or(ZERO_WIRE),
                    ),
                };
                next_sums[col] = Some(s);
                next_carries[col + 1] = Some(c);
            }
            result[i as usize] = next_sums[i as usize].unwrap();
            sums = next_sums;
            carries = next_carries;
        }
        let mut carry: Option<WireId> = None;
        for col in n..(2 * n - 1) {
            let x = sums[col as usize].unwrap_or(ZERO_WIRE);
            let y = carries[col as usize].unwrap_or(ZERO_WIRE);
            let (s, c) = match carry {
                None => self.half(n, col, x, y),
                Some(cin) => self.full(n, col, x, y, cin),
            };
            result[col as usize] = s;
            carry = Some(c);
        }
        result[cols - 1] = carry.unwrap_or(ZERO_WIRE);
        result
    }
}

/// Builds the array for `config`. Deterministic for a given config.
pub fn build_netlist(config: MultiplierConfig) -> Result<MultiplierNetlist> {
    config.validate()?;
    let mut b = Builder::new(config);
    let result = match config.topology {
        ArrayTopology::RippleRows => b.ripple_rows(),
        ArrayTopology::CarrySave => b.carry_save(),
    };
    Ok(MultiplierNetlist {
        config,
        placements: b.placements,
        wire_count: b.next_wire,
        result,
        specs: [AdderCellKind::Exact.spec(), AdderCellKind::Ama5.spec()],
    })
}

impl MultiplierNetlist {
    pub fn config(&self) -> &MultiplierConfig {
        &self.config
    }

    pub fn width(&self) -> u32 {
        self.config.width
    }

    pub fn placements(&self) -> &[Placement] {
        &self.placements
    }

    pub fn wire_count(&self) -> u32 {
        self.wire_count
    }

    pub fn result_wires(&self) -> &[WireId] {
        &self.result
    }

    fn spec(&self, kind: AdderCellKind) -> &AdderCellSpec {
        match kind {
            AdderCellKind::Exact => &self.specs[0],
            AdderCellKind::Ama5 => &self.specs[1],
        }
    }

    fn check(&self, v: u32) -> Result<()> {
        if v > self.config.max_operand() {
            return Err(Error::OperandOutOfRange {
                value: v,
                width: self.config.width,
            });
        }
        Ok(())
    }

    /// Evaluates up to 64 operand pairs in parallel bit lanes and writes the
    /// products into `out`. Operands must already be range-checked.
    fn eval_lanes(&self, a: &[u32], b: &[u32], wires: &mut Vec<u64>, out: &mut [u32]) {
        debug_assert!(a.len() == b.len() && a.len() <= 64 && out.len() == a.len());
        let n = self.config.width as usize;
        wires.clear();
        wires.resize(self.wire_count as usize, 0);
        for (lane, (&x, &y)) in a.iter().zip(b).enumerate() {
            for bit in 0..n {
                wires[1 + bit] |= (((x >> bit) & 1) as u64) << lane;
                wires[1 + n + bit] |= (((y >> bit) & 1) as u64) << lane;
            }
        }
        for p in &self.placements {
            let [i0, i1, i2] = p.inputs.map(|w| wires[w as usize]);
            match p.kind {
                PlacementKind::And => wires[p.outputs[0] as usize] = i0 & i1,
                PlacementKind::HalfAdder => {
                    wires[p.outputs[0] as usize] = i0 ^ i1;
                    wires[p.outputs[1] as usize] = i0 & i1;
                }
                PlacementKind::FullAdder(kind) => {
                    let (s, c) = self.spec(kind).eval_lanes(i0, i1, i2);
                    wires[p.outputs[0] as usize] = s;
                    wires[p.outputs[1] as usize] = c;
                }
            }
        }
        for (lane, slot) in out.iter_mut().enumerate() {
            *slot = self
                .result
                .iter()
                .enumerate()
                .map(|(bit, &w)| (((wires[w as usize] >> lane) & 1) as u32) << bit)
                .sum();
        }
    }

    /// Approximate product of `a` and `b`.
    pub fn multiply(&self, a: u32, b: u32) -> Result<u32> {
        self.check(a)?;
        self.check(b)?;
        let mut out = [0u32];
        self.eval_lanes(&[a], &[b], &mut Vec::new(), &mut out);
        Ok(out[0])
    }

    /// Multiplies element-wise; `a` and `b` must have the same length.
    pub fn multiply_many(&self, a: &[u32], b: &[u32]) -> Result<Vec<u32>> {
        if a.len() != b.len() {
            return Err(Error::Dimension(format!(
                "operand lists have lengths {} and {}",
                a.len(),
                b.len()
            )));
        }
        for &v in a.iter().chain(b) {
            self.check(v)?;
        }
        let mut out = vec![0u32; a.len()];
        let mut wires = Vec::new();
        for ((ca, cb), co) in a.chunks(64).zip(b.chunks(64)).zip(out.chunks_mut(64)) {
            self.eval_lanes(ca, cb, &mut wires, co);
        }
        Ok(out)
    }

    /// Products for every `b` with a fixed `a`, i.e. one row of the full
    /// product table.
    pub fn product_row(&self, a: u32) -> Result<Vec<u32>> {
        let n = 1u32 << self.config.width;
        let b: Vec<u32> = (0..n).collect();
        self.multiply_many(&vec![a; n as usize], &b)
    }

    /// Signed error distance `a*b - multiply(a, b)`.
    pub fn error_distance(&self, a: u32, b: u32) -> Result<i64> {
        let approx = self.multiply(a, b)?;
        Ok(a as i64 * b as i64 - approx as i64)
    }

    pub fn census(&self) -> CellCensus {
        let mut c = CellCensus::default();
        for p in &self.placements {
            match p.kind {
                PlacementKind::And => c.and_gates += 1,
                PlacementKind::HalfAdder => c.half_adders += 1,
                PlacementKind::FullAdder(AdderCellKind::Exact) => c.exact_cells += 1,
                PlacementKind::FullAdder(_) => c.approx_cells += 1,
            }
        }
        c
    }

    /// Line-oriented text dump, one placement per line.
    pub fn dump(&self) -> String {
        let c = &self.config;
        let mut s = String::new();
        let _ = writeln!(
            s,
            "# selfcomp netlist v1 width={} approx_columns={} cell={} topology={} wires={}",
            c.width, c.approx_columns, c.cell_kind, c.topology, self.wire_count
        );
        let _ = writeln!(s, "# kind row col inputs -> outputs");
        for p in &self.placements {
            let _ = match p.kind {
                PlacementKind::And => writeln!(
                    s,
                    "and {} {} {} {} -> {}",
                    p.row, p.column, p.inputs[0], p.inputs[1], p.outputs[0]
                ),
                PlacementKind::HalfAdder => writeln!(
                    s,
                    "ha {} {} {} {} -> {} {}",
                    p.row, p.column, p.inputs[0], p.inputs[1], p.outputs[0], p.outputs[1]
                ),
                PlacementKind::FullAdder(kind) => writeln!(
                    s,
                    "fa:{} {} {} {} {} {} -> {} {}",
                    kind,
                    p.row,
                    p.column,
                    p.inputs[0],
                    p.inputs[1],
                    p.inputs[2],
                    p.outputs[0],
                    p.outputs[1]
                ),
            };
        }
        let wires: Vec<String> = self.result.iter().map(|w| w.to_string()).collect();
        let _ = writeln!(s, "result {}", wires.join(" "));
        s
    }
}

/// Approximate product of `a` and `b`; see [`MultiplierNetlist::multiply`].
pub fn multiply(netlist: &MultiplierNetlist, a: u32, b: u32) -> Result<u32> {
    netlist.multiply(a, b)
}

pub fn error_distance(netlist: &MultiplierNetlist, a: u32, b: u32) -> Result<i64> {
    netlist.error_distance(a, b)
}

pub fn cell_census(netlist: &MultiplierNetlist) -> CellCensus {
    netlist.census()
}
