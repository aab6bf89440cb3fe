use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Maps an operand to one of `cluster_count` equal magnitude ranges, numbered
/// from 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Quantizer {
    cluster_count: u32,
    width: u32,
}

impl Quantizer {
    pub fn new(cluster_count: u32, width: u32) -> Result<Self> {
        if width == 0 || width > 16 {
            return Err(Error::Config(format!(
                "quantizer width {width} outside [1, 16]"
            )));
        }
        if cluster_count == 0 || cluster_count > (1 << width) {
            return Err(Error::Config(format!(
                "cluster count {cluster_count} outside [1, {}]",
                1u32 << width
            )));
        }
        Ok(Quantizer {
            cluster_count,
            width,
        })
    }

    pub fn cluster_count(&self) -> u32 {
        self.cluster_count
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn max_value(&self) -> u32 {
        (1u32 << self.width) - 1
    }

    /// `floor(value * clusters / 2^width) + 1`.
    pub fn quantize(&self, value: u32) -> Result<u32> {
        if value > self.max_value() {
            return Err(Error::QuantizerDomain {
                value,
                max: self.max_value(),
            });
        }
        Ok(self.index(value))
    }

    #[inline]
    pub(crate) fn index(&self, value: u32) -> u32 {
        ((value as u64 * self.cluster_count as u64) >> self.width) as u32 + 1
    }

    /// Inclusive value range of each cluster, in cluster order.
    pub fn ranges(&self) -> Vec<(u32, u32)> {
        let mut out: Vec<(u32, u32)> = Vec::with_capacity(self.cluster_count as usize);
        for v in 0..=self.max_value() {
            let k = self.index(v) as usize;
            if k > out.len() {
                out.push((v, v));
            } else {
                out[k - 1].1 = v;
            }
        }
        out
    }
}
