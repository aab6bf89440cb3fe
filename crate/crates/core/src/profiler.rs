//! Exhaustive error-distance characterization of a multiplier.
//!
//! ED is stored signed (`exact - approximate`); every published statistic is
//! computed on `|ED|`.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::mularray::MultiplierNetlist;
use crate::persist;

/// Exhaustive sweeps are limited to this many total input bits.
pub const MAX_SWEEP_BITS: u32 = 16;

/// Thresholds reported in [`ErrorStats::tail_counts`].
pub const TAIL_THRESHOLDS: [u32; 3] = [300, 400, 500];

/// Bucket width of the histogram embedded in [`ErrorStats`].
pub const DEFAULT_BUCKET_WIDTH: u32 = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TailCount {
    pub threshold: u32,
    pub count: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bucket {
    /// Inclusive bounds on `|ED|`.
    pub lo: u32,
    pub hi: u32,
    pub count: u64,
}

/// `|ED|` histogram. Error-free pairs are kept in their own bin.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Histogram {
    pub bucket_width: u32,
    pub exact: u64,
    pub buckets: Vec<Bucket>,
}

impl Histogram {
    pub fn total(&self) -> u64 {
        self.exact + self.buckets.iter().map(|b| b.count).sum::<u64>()
    }

    /// Pairs whose `|ED|` falls in `[lo, hi]`, counted from whole buckets
    /// overlapping that range.
    pub fn count_overlapping(&self, lo: u32, hi: u32) -> u64 {
        let mut n = self
            .buckets
            .iter()
            .filter(|b| b.hi >= lo && b.lo <= hi)
            .map(|b| b.count)
            .sum();
        if lo == 0 {
            n += self.exact;
        }
        n
    }

    pub fn to_csv(&self, config: &RunConfig) -> String {
        let mut s = persist::header_line("histogram", config);
        s.push_str("bin,lo,hi,count\n");
        let _ = writeln!(s, "exact,0,0,{}", self.exact);
        for b in &self.buckets {
            let _ = writeln!(s, "error,{},{},{}", b.lo, b.hi, b.count);
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorStats {
    pub total_pairs: u64,
    pub erroneous_count: u64,
    pub error_free_count: u64,
    pub error_rate: f64,
    pub min_nonzero_abs_ed: u64,
    pub max_abs_ed: u64,
    /// Mean `|ED|` over erroneous pairs only.
    pub mean_abs_ed: f64,
    /// Mean `|ED|` over all pairs, error-free ones included.
    pub mean_abs_ed_all: f64,
    /// Distinct nonzero `|ED|` values.
    pub distinct_ed_count: u64,
    /// Distinct nonzero signed ED values.
    pub distinct_signed_ed_count: u64,
    /// Pairs where the approximate product exceeds the exact one.
    pub negative_count: u64,
    pub tail_counts: Vec<TailCount>,
    pub histogram: Histogram,
}

impl ErrorStats {
    pub fn from_eds(eds: &[i32]) -> Self {
        let total = eds.len() as u64;
        let mut erroneous = 0u64;
        let mut negative = 0u64;
        let mut min = u64::MAX;
        let mut max = 0u64;
        let mut sum = 0u64;
        let mut mags = BTreeSet::new();
        let mut signed = BTreeSet::new();
        for &e in eds {
            if e == 0 {
                continue;
            }
            let m = e.unsigned_abs() as u64;
            erroneous += 1;
            negative += u64::from(e < 0);
            min = min.min(m);
            max = max.max(m);
            sum += m;
            mags.insert(m);
            signed.insert(e);
        }
        let tail_counts = TAIL_THRESHOLDS
            .iter()
            .map(|&threshold| TailCount {
                threshold,
                count: eds.iter().filter(|e| e.unsigned_abs() > threshold).count() as u64,
            })
            .collect();
        ErrorStats {
            total_pairs: total,
            erroneous_count: erroneous,
            error_free_count: total - erroneous,
            error_rate: if total == 0 {
                0.0
            } else {
                erroneous as f64 / total as f64
            },
            min_nonzero_abs_ed: if erroneous == 0 { 0 } else { min },
            max_abs_ed: max,
            mean_abs_ed: if erroneous == 0 {
                0.0
            } else {
                sum as f64 / erroneous as f64
            },
            mean_abs_ed_all: if total == 0 {
                0.0
            } else {
                sum as f64 / total as f64
            },
            distinct_ed_count: mags.len() as u64,
            distinct_signed_ed_count: signed.len() as u64,
            negative_count: negative,
            tail_counts,
            histogram: histogram_of(eds, DEFAULT_BUCKET_WIDTH),
        }
    }

    pub fn tail(&self, threshold: u32) -> Option<u64> {
        self.tail_counts
            .iter()
            .find(|t| t.threshold == threshold)
            .map(|t| t.count)
    }
}

fn histogram_of(eds: &[i32], bucket_width: u32) -> Histogram {
    let w = bucket_width.max(1);
    let max = eds.iter().map(|e| e.unsigned_abs()).max().unwrap_or(0);
    let n = max.div_ceil(w) as usize;
    let mut buckets: Vec<Bucket> = (0..n as u32)
        .map(|k| Bucket {
            lo: k * w + 1,
            hi: (k + 1) * w,
            count: 0,
        })
        .collect();
    let mut exact = 0;
    for &e in eds {
        let m = e.unsigned_abs();
        if m == 0 {
            exact += 1;
        } else {
            buckets[((m - 1) / w) as usize].count += 1;
        }
    }
    Histogram {
        bucket_width: w,
        exact,
        buckets,
    }
}

/// Complete signed ED table of one multiplier, indexed by `(a << width) | b`.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorProfile {
    width: u32,
    ed: Vec<i32>,
    stats: ErrorStats,
}

impl ErrorProfile {
    /// Wraps a complete ED table and computes its statistics.
    pub fn from_table(width: u32, ed: Vec<i32>) -> Result<Self> {
        if 2 * width > MAX_SWEEP_BITS {
            return Err(Error::SweepTooLarge {
                width,
                max: MAX_SWEEP_BITS / 2,
            });
        }
        let want = 1usize << (2 * width);
        if ed.len() != want {
            return Err(Error::Dimension(format!(
                "ED table has {} entries, expected {want}",
                ed.len()
            )));
        }
        let stats = ErrorStats::from_eds(&ed);
        Ok(ErrorProfile { width, ed, stats })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn stats(&self) -> &ErrorStats {
        &self.stats
    }

    pub fn eds(&self) -> &[i32] {
        &self.ed
    }

    pub fn ed(&self, a: u32, b: u32) -> i32 {
        self.ed[((a as usize) << self.width) | b as usize]
    }

    /// Iterates `(a, b, ed)` in row-major order.
    pub fn iter(&self) -> impl Iterator<Item = (u32, u32, i32)> + '_ {
        let mask = (1usize << self.width) - 1;
        self.ed
            .iter()
            .enumerate()
            .map(move |(i, &e)| ((i >> self.width) as u32, (i & mask) as u32, e))
    }

    pub fn save(&self, path: &Path, config: &RunConfig) -> Result<()> {
        let mut s = persist::header_line("profile", config);
        let _ = writeln!(s, "# width={}", self.width);
        s.push_str("a,b,ed\n");
        for (a, b, e) in self.iter() {
            let _ = writeln!(s, "{a},{b},{e}");
        }
        persist::write_atomic(path, s.as_bytes())
    }

    /// Loads a profile written by [`ErrorProfile::save`] and recomputes its
    /// statistics. Returns the embedded run configuration as well.
    pub fn load(path: &Path) -> Result<(ErrorProfile, RunConfig)> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
        let config = persist::parse_header(path, lines.next(), "profile")?;
        let width = match lines.next() {
            Some((_, l)) if l.starts_with("# width=") => l["# width=".len()..]
                .trim()
                .parse::<u32>()
                .map_err(|e| Error::parse(path, 2, format!("bad width: {e}")))?,
            _ => return Err(Error::parse(path, 2, "expected '# width=<n>'")),
        };
        if 2 * width > MAX_SWEEP_BITS || width == 0 {
            return Err(Error::parse(path, 2, format!("unsupported width {width}")));
        }
        match lines.next() {
            Some((_, "a,b,ed")) => {}
            _ => return Err(Error::parse(path, 3, "expected column header 'a,b,ed'")),
        }
        let n = 1usize << (2 * width);
        let mut ed = vec![0i32; n];
        let mut seen = vec![false; n];
        let max = 1u32 << width;
        for (line, l) in lines {
            if l.is_empty() {
                continue;
            }
            let fields: Vec<&str> = l.split(',').collect();
            if fields.len() != 3 {
                return Err(Error::parse(path, line, "expected 3 fields"));
            }
            let num = |s: &str| {
                s.trim()
                    .parse::<i64>()
                    .map_err(|e| Error::parse(path, line, e.to_string()))
            };
            let (a, b, e) = (num(fields[0])?, num(fields[1])?, num(fields[2])?);
            if !(0..max as i64).contains(&a) || !(0..max as i64).contains(&b) {
                return Err(Error::parse(path, line, "operand out of range"));
            }
            let idx = ((a as usize) << width) | b as usize;
            if seen[idx] {
                return Err(Error::parse(
                    path,
                    line,
                    format!("duplicate pair ({a},{b})"),
                ));
            }
            seen[idx] = true;
            ed[idx] = i32::try_from(e).map_err(|_| Error::parse(path, line, "ED out of range"))?;
        }
        let missing = seen.iter().filter(|s| !**s).count();
        if missing > 0 {
            return Err(Error::parse(
                path,
                text.lines().count(),
                format!("profile incomplete: {missing} pairs missing"),
            ));
        }
        Ok((ErrorProfile::from_table(width, ed)?, config))
    }
}

/// Sweeps every operand pair through `netlist` and records the signed ED.
pub fn characterize(netlist: &MultiplierNetlist) -> Result<ErrorProfile> {
    let width = netlist.width();
    characterize_with(width, |a| {
        let row = netlist.product_row(a)?;
        Ok(row.into_iter().map(|p| p as i64).collect())
    })
}

/// Builds a profile from a per-row product function (`a` fixed, `b` swept).
/// Rows are computed in parallel and merged by index.
pub(crate) fn characterize_with<F>(width: u32, row: F) -> Result<ErrorProfile>
where
    F: Fn(u32) -> Result<Vec<i64>> + Sync,
{
    if 2 * width > MAX_SWEEP_BITS {
        return Err(Error::SweepTooLarge {
            width,
            max: MAX_SWEEP_BITS / 2,
        });
    }
    let n = 1u32 << width;
    let rows: Vec<Vec<i32>> = (0..n)
        .into_par_iter()
        .map(|a| {
            let products = row(a)?;
            Ok(products
                .into_iter()
                .enumerate()
                .map(|(b, p)| (a as i64 * b as i64 - p) as i32)
                .collect())
        })
        .collect::<Result<_>>()?;
    ErrorProfile::from_table(width, rows.concat())
}

/// Pairs with `|ED| > threshold`.
pub fn tail_count(profile: &ErrorProfile, threshold: u32) -> u64 {
    profile
        .eds()
        .iter()
        .filter(|e| e.unsigned_abs() > threshold)
        .count() as u64
}

pub fn histogram(profile: &ErrorProfile, bucket_width: u32) -> Histogram {
    histogram_of(profile.eds(), bucket_width)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cells::AdderCellKind;
    use crate::mularray::{build_netlist, ArrayTopology, MultiplierConfig};

    #[test]
    fn exact_profile_is_clean() {
        let net = build_netlist(MultiplierConfig::exact(8)).unwrap();
        let p = characterize(&net).unwrap();
        let s = p.stats();
        assert_eq!(s.total_pairs, 65536);
        assert_eq!(s.erroneous_count, 0);
        assert_eq!(s.error_rate, 0.0);
        assert_eq!(s.max_abs_ed, 0);
        assert_eq!(s.distinct_ed_count, 0);
        let h = histogram(&p, 10);
        assert_eq!(h.exact, 65536);
        assert!(h.buckets.is_empty());
        assert_eq!(tail_count(&p, 0), 0);
    }

    #[test]
    fn width_two_matches_brute_force() {
        // Oracle: the 2-bit array traced by hand. Row 0 gives bits a0b0, a1b0;
        // row 1 is an exact HA in column 1 and an AMA5 cell in column 2 whose
        // sum is the partial product a1b1 and whose carry is the missing
        // running-sum bit (always 0).
        let cfg = MultiplierConfig {
            width: 2,
            approx_columns: 3,
            cell_kind: AdderCellKind::Ama5,
            topology: ArrayTopology::RippleRows,
        };
        let p = characterize(&build_netlist(cfg).unwrap()).unwrap();
        for a in 0..4u32 {
            for b in 0..4u32 {
                let bit = |x: u32, i: u32| (x >> i) & 1;
                let c1 = bit(a, 1) & bit(b, 0);
                let c2 = bit(a, 0) & bit(b, 1);
                let approx =
                    (bit(a, 0) & bit(b, 0)) + ((c1 ^ c2) << 1) + ((bit(a, 1) & bit(b, 1)) << 2);
                assert_eq!(p.ed(a, b), (a * b) as i32 - approx as i32, "{a} x {b}");
            }
        }
        assert_eq!(p.stats().erroneous_count, 1);
        assert_eq!(p.ed(3, 3), 4);
    }

    #[test]
    fn tail_and_histogram_agree_with_table() {
        let net = build_netlist(MultiplierConfig::baseline()).unwrap();
        let p = characterize(&net).unwrap();
        let s = p.stats();
        for t in &s.tail_counts {
            assert_eq!(t.count, tail_count(&p, t.threshold));
        }
        assert_eq!(tail_count(&p, s.max_abs_ed as u32), 0);
        for w in [1, 7, 50, 100] {
            let h = histogram(&p, w);
            assert_eq!(h.total(), 65536);
            assert_eq!(h.exact, s.error_free_count);
            let last = h.buckets.last().unwrap();
            assert!(
                last.count > 0 && last.lo as u64 <= s.max_abs_ed && s.max_abs_ed <= last.hi as u64
            );
            assert_eq!(h.count_overlapping(0, u32::MAX), 65536);
        }
    }

    #[test]
    fn rejects_wide_sweep() {
        let net = build_netlist(MultiplierConfig::exact(9)).unwrap();
        assert!(matches!(
            characterize(&net),
            Err(Error::SweepTooLarge { .. })
        ));
    }
}
