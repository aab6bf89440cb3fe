use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::learner::Quantizer;
use crate::persist;
use crate::profiler::ErrorProfile;

/// `clusters x clusters` grid of signed compensation values, indexed by
/// 1-based cluster pairs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompensationTable {
    clusters: u32,
    values: Vec<i32>,
}

impl CompensationTable {
    pub fn new(clusters: u32, values: Vec<i32>) -> Result<Self> {
        if clusters == 0 || values.len() != (clusters * clusters) as usize {
            return Err(Error::Dimension(format!(
                "table of {} values does not form a {clusters}x{clusters} grid",
                values.len()
            )));
        }
        Ok(CompensationTable { clusters, values })
    }

    pub fn zeros(clusters: u32) -> Self {
        CompensationTable {
            clusters,
            values: vec![0; (clusters * clusters) as usize],
        }
    }

    pub fn clusters(&self) -> u32 {
        self.clusters
    }

    pub fn get(&self, i: u32, j: u32) -> Result<i32> {
        for k in [i, j] {
            if k == 0 || k > self.clusters {
                return Err(Error::ClusterOutOfRange {
                    index: k,
                    count: self.clusters,
                });
            }
        }
        Ok(self.values[((i - 1) * self.clusters + (j - 1)) as usize])
    }

    /// `(i, j, value)` for every cell, row-major.
    pub fn cells(&self) -> impl Iterator<Item = (u32, u32, i32)> + '_ {
        let n = self.clusters;
        self.values
            .iter()
            .enumerate()
            .map(move |(k, &v)| (k as u32 / n + 1, k as u32 % n + 1, v))
    }

    /// Row-major values, `input1` major.
    pub fn values(&self) -> &[i32] {
        &self.values
    }

    pub fn max_abs(&self) -> u32 {
        self.values
            .iter()
            .map(|v| v.unsigned_abs())
            .max()
            .unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0)
    }

    /// Rows are `input1` clusters, columns `input2` clusters.
    pub fn to_csv(&self, config: &RunConfig) -> String {
        let mut s = persist::header_line("table", config);
        s.push_str("input1");
        for j in 1..=self.clusters {
            let _ = write!(s, ",c{j}");
        }
        s.push('\n');
        for i in 1..=self.clusters {
            let _ = write!(s, "c{i}");
            for j in 1..=self.clusters {
                let _ = write!(
                    s,
                    ",{}",
                    self.values[((i - 1) * self.clusters + j - 1) as usize]
                );
            }
            s.push('\n');
        }
        s
    }
}

/// Rounded (half-up) mean signed ED of each cluster pair.
pub fn build_table(profile: &ErrorProfile, q: &Quantizer) -> Result<CompensationTable> {
    if q.width() != profile.width() {
        return Err(Error::Config(format!(
            "quantizer width {} does not match profile width {}",
            q.width(),
            profile.width()
        )));
    }
    let n = q.cluster_count() as usize;
    let mut sums = vec![0i64; n * n];
    let mut counts = vec![0i64; n * n];
    for (a, b, e) in profile.iter() {
        let k = (q.index(a) as usize - 1) * n + q.index(b) as usize - 1;
        sums[k] += e as i64;
        counts[k] += 1;
    }
    let values = sums
        .iter()
        .zip(&counts)
        .map(|(&s, &c)| {
            if c == 0 {
                0
            } else {
                // floor(s / c + 1/2)
                (2 * s + c).div_euclid(2 * c) as i32
            }
        })
        .collect();
    CompensationTable::new(q.cluster_count(), values)
}
