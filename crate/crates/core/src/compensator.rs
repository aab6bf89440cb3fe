//! Adds model predictions to approximate products, either per operation or
//! once per batch of lanes, and re-characterizes the result.

use std::fmt::{self, Write as _};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::learner::CompensationModel;
use crate::mularray::MultiplierNetlist;
use crate::persist;
use crate::profiler::{characterize_with, ErrorProfile, ErrorStats};

/// Where the compensation module sits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CompensationMode {
    Uncompensated,
    PerComponent,
    PerAccelerator,
}

impl CompensationMode {
    pub fn name(self) -> &'static str {
        match self {
            CompensationMode::Uncompensated => "uncompensated",
            CompensationMode::PerComponent => "per-component",
            CompensationMode::PerAccelerator => "per-accelerator",
        }
    }
}

impl fmt::Display for CompensationMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CompensationMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "uncompensated" | "none" => Ok(CompensationMode::Uncompensated),
            "per-component" | "component" => Ok(CompensationMode::PerComponent),
            "per-accelerator" | "accelerator" => Ok(CompensationMode::PerAccelerator),
            _ => Err(Error::Config(format!("unknown compensation mode '{s}'"))),
        }
    }
}

/// `lanes` operations share one accelerator-level compensation value. Zero
/// means the whole input is a single frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AcceleratorConfig {
    pub mode: CompensationMode,
    pub lanes: usize,
}

impl AcceleratorConfig {
    pub fn new(mode: CompensationMode, lanes: usize) -> Self {
        AcceleratorConfig { mode, lanes }
    }
}

/// Approximate multiplier with the compensation module attached.
#[derive(Debug, Clone)]
pub struct CompensatedMultiplier {
    netlist: MultiplierNetlist,
    model: CompensationModel,
    max_product: u32,
}

#[inline]
fn clamp_add(product: u32, comp: i32, max: u32) -> u32 {
    (product as i64 + comp as i64).clamp(0, max as i64) as u32
}

impl CompensatedMultiplier {
    pub fn new(netlist: MultiplierNetlist, model: CompensationModel) -> Result<Self> {
        let w = netlist.width();
        if model.quantizer().width() != w {
            return Err(Error::Config(format!(
                "model quantizes {}-bit operands, multiplier is {w}-bit",
                model.quantizer().width()
            )));
        }
        let max_product = ((1u64 << (2 * w)) - 1) as u32;
        Ok(CompensatedMultiplier {
            netlist,
            model,
            max_product,
        })
    }

    pub fn netlist(&self) -> &MultiplierNetlist {
        &self.netlist
    }

    pub fn model(&self) -> &CompensationModel {
        &self.model
    }

    /// Largest representable product, `2^(2w) - 1`.
    pub fn max_product(&self) -> u32 {
        self.max_product
    }

    pub fn multiply(&self, a: u32, b: u32) -> Result<u32> {
        let p = self.netlist.multiply(a, b)?;
        Ok(clamp_add(
            p,
            self.model.predict_unchecked(a, b),
            self.max_product,
        ))
    }

    pub fn multiply_many(&self, a: &[u32], b: &[u32]) -> Result<Vec<u32>> {
        let mut out = self.netlist.multiply_many(a, b)?;
        for ((p, &x), &y) in out.iter_mut().zip(a).zip(b) {
            *p = clamp_add(*p, self.model.predict_unchecked(x, y), self.max_product);
        }
        Ok(out)
    }

    /// One shared compensation value added to every lane.
    pub fn multiply_shared(&self, a: &[u32], b: &[u32]) -> Result<Vec<u32>> {
        let comp = accelerator_compensation(&self.model, a, b)?;
        let mut out = self.netlist.multiply_many(a, b)?;
        for p in &mut out {
            *p = clamp_add(*p, comp, self.max_product);
        }
        Ok(out)
    }

    /// Runs `a` and `b` through an accelerator configured by `acc`.
    pub fn run(&self, acc: AcceleratorConfig, a: &[u32], b: &[u32]) -> Result<Vec<u32>> {
        match acc.mode {
            CompensationMode::Uncompensated => self.netlist.multiply_many(a, b),
            CompensationMode::PerComponent => self.multiply_many(a, b),
            CompensationMode::PerAccelerator => {
                if a.len() != b.len() {
                    return Err(Error::Dimension(format!(
                        "operand lists have lengths {} and {}",
                        a.len(),
                        b.len()
                    )));
                }
                let lanes = if acc.lanes == 0 {
                    a.len().max(1)
                } else {
                    acc.lanes
                };
                let mut out = Vec::with_capacity(a.len());
                for (ca, cb) in a.chunks(lanes).zip(b.chunks(lanes)) {
                    out.extend(self.multiply_shared(ca, cb)?);
                }
                Ok(out)
            }
        }
    }
}

fn round_mean(values: &[u32]) -> u32 {
    let n = values.len() as u64;
    let s: u64 = values.iter().map(|&v| v as u64).sum();
    ((2 * s + n) / (2 * n)) as u32
}

/// Prediction at the clusters of the half-up rounded operand means.
pub fn accelerator_compensation(model: &CompensationModel, a: &[u32], b: &[u32]) -> Result<i32> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Empty("accelerator operand list"));
    }
    if a.len() != b.len() {
        return Err(Error::Dimension(format!(
            "operand lists have lengths {} and {}",
            a.len(),
            b.len()
        )));
    }
    model.predict_operands(round_mean(a), round_mean(b))
}

pub fn multiply_compensated(cm: &CompensatedMultiplier, a: u32, b: u32) -> Result<u32> {
    cm.multiply(a, b)
}

/// Exhaustive sweep over compensated outputs.
pub fn characterize_compensated(cm: &CompensatedMultiplier) -> Result<ErrorProfile> {
    let w = cm.netlist.width();
    characterize_with(w, |a| {
        let row = cm.netlist.product_row(a)?;
        Ok(row
            .into_iter()
            .enumerate()
            .map(|(b, p)| {
                clamp_add(p, cm.model.predict_unchecked(a, b as u32), cm.max_product) as i64
            })
            .collect())
    })
}

/// Compensated profile derived from an uncompensated one, without the
/// netlist: the approximate product of each pair is `a*b - ed`.
pub fn compensate_profile(
    profile: &ErrorProfile,
    model: &CompensationModel,
) -> Result<ErrorProfile> {
    let w = profile.width();
    if model.quantizer().width() != w {
        return Err(Error::Config(format!(
            "model quantizes {}-bit operands, profile is {w}-bit",
            model.quantizer().width()
        )));
    }
    let max = ((1u64 << (2 * w)) - 1) as u32;
    let ed = profile
        .iter()
        .map(|(a, b, e)| {
            let exact = a as i64 * b as i64;
            let approx = (exact - e as i64) as u32;
            (exact - clamp_add(approx, model.predict_unchecked(a, b), max) as i64) as i32
        })
        .collect();
    ErrorProfile::from_table(w, ed)
}

/// Statistics of one sweep before and after compensation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub config: RunConfig,
    pub before: ErrorStats,
    pub after: ErrorStats,
}

impl ComparisonReport {
    pub fn new(config: RunConfig, before: &ErrorProfile, after: &ErrorProfile) -> Result<Self> {
        if before.width() != after.width() {
            return Err(Error::Config(format!(
                "profiles have widths {} and {}",
                before.width(),
                after.width()
            )));
        }
        Ok(ComparisonReport {
            config,
            before: before.stats().clone(),
            after: after.stats().clone(),
        })
    }

    /// Relative reduction of mean `|ED|`, in percent.
    pub fn mean_reduction_pct(&self) -> f64 {
        pct_drop(self.before.mean_abs_ed, self.after.mean_abs_ed)
    }

    pub fn tail_reduction_pct(&self, threshold: u32) -> Option<f64> {
        let b = self.before.tail(threshold)? as f64;
        let a = self.after.tail(threshold)? as f64;
        Some(pct_drop(b, a))
    }

    fn rows(&self) -> Vec<(String, String, String)> {
        let (b, a) = (&self.before, &self.after);
        let mut rows = vec![
            (
                "total_pairs".into(),
                b.total_pairs.to_string(),
                a.total_pairs.to_string(),
            ),
            (
                "erroneous".into(),
                b.erroneous_count.to_string(),
                a.erroneous_count.to_string(),
            ),
            (
                "error_free".into(),
                b.error_free_count.to_string(),
                a.error_free_count.to_string(),
            ),
            (
                "error_rate".into(),
                format!("{:.6}", b.error_rate),
                format!("{:.6}", a.error_rate),
            ),
            (
                "min_abs_ed".into(),
                b.min_nonzero_abs_ed.to_string(),
                a.min_nonzero_abs_ed.to_string(),
            ),
            (
                "max_abs_ed".into(),
                b.max_abs_ed.to_string(),
                a.max_abs_ed.to_string(),
            ),
            (
                "mean_abs_ed".into(),
                format!("{:.4}", b.mean_abs_ed),
                format!("{:.4}", a.mean_abs_ed),
            ),
            (
                "mean_abs_ed_all".into(),
                format!("{:.4}", b.mean_abs_ed_all),
                format!("{:.4}", a.mean_abs_ed_all),
            ),
            (
                "distinct_abs_ed".into(),
                b.distinct_ed_count.to_string(),
                a.distinct_ed_count.to_string(),
            ),
        ];
        for (tb, ta) in b.tail_counts.iter().zip(&a.tail_counts) {
            rows.push((
                format!("tail_gt_{}", tb.threshold),
                tb.count.to_string(),
                ta.count.to_string(),
            ));
        }
        rows
    }

    pub fn to_csv(&self) -> String {
        let mut s = persist::header_line("comparison", &self.config);
        s.push_str("metric,before,after\n");
        for (m, b, a) in self.rows() {
            let _ = writeln!(s, "{m},{b},{a}");
        }
        s
    }

    pub fn to_json(&self) -> String {
        let mut s = persist::header_line("comparison", &self.config);
        s.push_str(&serde_json::to_string_pretty(self).expect("report serializes"));
        s.push('\n');
        s
    }

    /// Aligned two-column table for terminals.
    pub fn to_text(&self) -> String {
        let mut s = format!("{:<18}{:>14}{:>14}\n", "metric", "before", "after");
        for (m, b, a) in self.rows() {
            let _ = writeln!(s, "{m:<18}{b:>14}{a:>14}");
        }
        s
    }
}

fn pct_drop(before: f64, after: f64) -> f64 {
    if before == 0.0 {
        0.0
    } else {
        100.0 * (before - after) / before
    }
}
