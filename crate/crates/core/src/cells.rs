//! One-bit full-adder cells described as truth tables.
//!
//! Each cell maps `(a, b, cin)` to `(sum, cout)`. The evaluator never looks at
//! the cell kind, only at the table, so adding another approximate variant is
//! a matter of adding a table.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Named full-adder variants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AdderCellKind {
    Exact,
    /// Approximate mirror adder 5: `sum = b`, `cout = a`.
    Ama5,
}

impl AdderCellKind {
    pub const ALL: [AdderCellKind; 2] = [AdderCellKind::Exact, AdderCellKind::Ama5];

    pub fn name(self) -> &'static str {
        match self {
            AdderCellKind::Exact => "exact",
            AdderCellKind::Ama5 => "ama5",
        }
    }

    pub fn spec(self) -> AdderCellSpec {
        AdderCellSpec::new(self)
    }
}

impl fmt::Display for AdderCellKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AdderCellKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "exact" => Ok(AdderCellKind::Exact),
            "ama5" => Ok(AdderCellKind::Ama5),
            other => Err(Error::Config(format!(
                "unknown cell kind '{other}' (expected 'exact' or 'ama5')"
            ))),
        }
    }
}

/// Input triple of a full-adder cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CellInputs {
    pub a: u8,
    pub b: u8,
    pub cin: u8,
}

impl CellInputs {
    fn from_row(row: usize) -> Self {
        CellInputs {
            a: ((row >> 2) & 1) as u8,
            b: ((row >> 1) & 1) as u8,
            cin: (row & 1) as u8,
        }
    }

    fn row(self) -> usize {
        ((self.a as usize) << 2) | ((self.b as usize) << 1) | self.cin as usize
    }
}

/// Truth table of a full-adder cell. Row index is `a << 2 | b << 1 | cin`,
/// entry is `(sum, cout)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AdderCellSpec {
    kind: AdderCellKind,
    table: [(u8, u8); 8],
    // Minterm masks per output, used by the bit-sliced evaluator.
    sum_rows: u8,
    cout_rows: u8,
}

impl AdderCellSpec {
    pub fn new(kind: AdderCellKind) -> Self {
        let mut table = [(0u8, 0u8); 8];
        for (row, entry) in table.iter_mut().enumerate() {
            let CellInputs { a, b, cin } = CellInputs::from_row(row);
            *entry = match kind {
                AdderCellKind::Exact => (a ^ b ^ cin, (a & b) | (a & cin) | (b & cin)),
                AdderCellKind::Ama5 => (b, a),
            };
        }
        Self::from_table(kind, table)
    }

    fn from_table(kind: AdderCellKind, table: [(u8, u8); 8]) -> Self {
        let mut sum_rows = 0u8;
        let mut cout_rows = 0u8;
        for (row, &(s, c)) in table.iter().enumerate() {
            sum_rows |= (s & 1) << row;
            cout_rows |= (c & 1) << row;
        }
        AdderCellSpec {
            kind,
            table,
            sum_rows,
            cout_rows,
        }
    }

    pub fn kind(&self) -> AdderCellKind {
        self.kind
    }

    /// All eight rows as `(inputs, (sum, cout))`, in row order.
    pub fn rows(&self) -> impl Iterator<Item = (CellInputs, (u8, u8))> + '_ {
        self.table
            .iter()
            .enumerate()
            .map(|(row, &out)| (CellInputs::from_row(row), out))
    }

    /// Looks up `(sum, cout)` for one input triple. Only the low bit of each
    /// argument is used.
    pub fn eval(&self, a: u8, b: u8, cin: u8) -> (u8, u8) {
        let inputs = CellInputs {
            a: a & 1,
            b: b & 1,
            cin: cin & 1,
        };
        self.table[inputs.row()]
    }

    /// Evaluates 64 independent lanes at once; bit `k` of each word is lane `k`.
    #[inline]
    pub fn eval_lanes(&self, a: u64, b: u64, cin: u64) -> (u64, u64) {
        let mut sum = 0u64;
        let mut cout = 0u64;
        for row in 0..8 {
            let bit = 1u8 << row;
            if (self.sum_rows | self.cout_rows) & bit == 0 {
                continue;
            }
            let pick = |x: u64, set: bool| if set { x } else { !x };
            let minterm = pick(a, row & 4 != 0) & pick(b, row & 2 != 0) & pick(cin, row & 1 != 0);
            if self.sum_rows & bit != 0 {
                sum |= minterm;
            }
            if self.cout_rows & bit != 0 {
                cout |= minterm;
            }
        }
        (sum, cout)
    }
}

/// Evaluates a cell for a single input triple.
pub fn eval_cell(spec: &AdderCellSpec, a: u8, b: u8, cin: u8) -> (u8, u8) {
    spec.eval(a, b, cin)
}

/// Input triples, in ascending `(a, b, cin)` order, where `spec` disagrees
/// with the exact full adder.
pub fn cell_error_rows(spec: &AdderCellSpec) -> Vec<CellInputs> {
    let exact = AdderCellSpec::new(AdderCellKind::Exact);
    spec.rows()
        .zip(exact.rows())
        .filter(|((_, out), (_, want))| out != want)
        .map(|((inputs, _), _)| inputs)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn all_triples() -> impl Iterator<Item = (u8, u8, u8)> {
        (0..8u8).map(|r| ((r >> 2) & 1, (r >> 1) & 1, r & 1))
    }

    #[test]
    fn exact_cell_is_binary_addition() {
        let spec = AdderCellKind::Exact.spec();
        for (a, b, c) in all_triples() {
            let (s, co) = eval_cell(&spec, a, b, c);
            assert_eq!(a + b + c, 2 * co + s, "row {a}{b}{c}");
        }
        assert_eq!(eval_cell(&spec, 1, 1, 1), (1, 1));
    }

    #[test]
    fn ama5_examples() {
        let spec = AdderCellKind::Ama5.spec();
        assert_eq!(eval_cell(&spec, 0, 0, 1), (0, 0));
        assert_eq!(eval_cell(&spec, 1, 0, 1), (0, 1));
        assert_eq!(eval_cell(&spec, 0, 0, 0), (0, 0));
        for (a, b, c) in all_triples() {
            assert_eq!(eval_cell(&spec, a, b, c), (b, a));
        }
    }

    #[test]
    fn table_is_total() {
        for kind in AdderCellKind::ALL {
            let rows: Vec<_> = kind.spec().rows().map(|(i, _)| i).collect();
            assert_eq!(rows.len(), 8);
            let mut sorted = rows.clone();
            sorted.sort();
            sorted.dedup();
            assert_eq!(sorted.len(), 8);
        }
    }

    #[test]
    fn error_rows() {
        assert!(cell_error_rows(&AdderCellKind::Exact.spec()).is_empty());

        // Oracle: enumerate rows where (b, a) differs from the exact (sum, cout).
        let want: Vec<CellInputs> = all_triples()
            .filter(|&(a, b, c)| (b, a) != (a ^ b ^ c, (a & b) | (a & c) | (b & c)))
            .map(|(a, b, cin)| CellInputs { a, b, cin })
            .collect();
        let got = cell_error_rows(&AdderCellKind::Ama5.spec());
        assert_eq!(got, want);
        assert!((1..=8).contains(&got.len()));
        assert!(got.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn lanes_agree_with_scalar() {
        for kind in AdderCellKind::ALL {
            let spec = kind.spec();
            // Lane k carries input triple k & 7.
            let (mut a, mut b, mut c) = (0u64, 0u64, 0u64);
            for lane in 0..64 {
                a |= ((lane >> 2) & 1) << lane;
                b |= ((lane >> 1) & 1) << lane;
                c |= (lane & 1) << lane;
            }
            let (s, co) = spec.eval_lanes(a, b, c);
            for lane in 0..64u64 {
                let r = lane & 7;
                let want = spec.eval((r >> 2) as u8, (r >> 1) as u8, r as u8);
                assert_eq!((((s >> lane) & 1) as u8, ((co >> lane) & 1) as u8), want);
            }
        }
    }

    #[test]
    fn parse_names() {
        assert_eq!(
            "exact".parse::<AdderCellKind>().unwrap(),
            AdderCellKind::Exact
        );
        assert_eq!(
            "AMA5".parse::<AdderCellKind>().unwrap(),
            AdderCellKind::Ama5
        );
        assert!("ama3".parse::<AdderCellKind>().is_err());
    }
}
