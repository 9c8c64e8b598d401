//! CQI evolution and the CQI to air-interface rate mapping.

use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};
use crate::rng::Substream;

pub const CQI_MIN: u8 = 1;
pub const CQI_MAX: u8 = 15;

/// Spectral efficiency (bits/s/Hz) of the 4-bit CQI table, index 0 = CQI 1.
pub const CQI_EFFICIENCY: [f64; 15] = [
    0.1523, 0.2344, 0.3770, 0.6016, 0.8770, 1.1758, 1.4766, 1.9141, 2.4063, 2.7305, 3.3223, 3.9023, 4.5234, 5.1152,
    5.5547,
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelParams {
    pub peak_rate_bps: f64,
    /// Probability per TTI that the CQI takes a ±1 step.
    pub walk_prob: f64,
    pub initial_cqi: Vec<u8>,
}

impl ChannelParams {
    pub fn validate(&self, ue_count: usize) -> Result<()> {
        if !(self.peak_rate_bps.is_finite() && self.peak_rate_bps > 0.0) {
            return Err(SimError::invalid("channel.peak_rate_bps", "must be positive"));
        }
        if !(0.0..=1.0).contains(&self.walk_prob) {
            return Err(SimError::invalid(
                "channel.walk_prob",
                format!("{} is not in [0, 1]", self.walk_prob),
            ));
        }
        if self.initial_cqi.len() != ue_count {
            return Err(SimError::invalid(
                "channel.initial_cqi",
                format!("{} entries for {} flows", self.initial_cqi.len(), ue_count),
            ));
        }
        for (i, &c) in self.initial_cqi.iter().enumerate() {
            if !(CQI_MIN..=CQI_MAX).contains(&c) {
                return Err(SimError::invalid(
                    format!("channel.initial_cqi[{i}]"),
                    format!("{c} is not in [1, 15]"),
                ));
            }
        }
        Ok(())
    }

    /// Long-run mean single-user rate. A moving walk is symmetric and
    /// reflecting, so its stationary CQI law is uniform over the table; a
    /// frozen channel keeps each UE at its initial CQI.
    pub fn expected_rate_bps(&self) -> f64 {
        if self.walk_prob > 0.0 {
            let mean_eff = CQI_EFFICIENCY.iter().sum::<f64>() / CQI_EFFICIENCY.len() as f64;
            self.peak_rate_bps * mean_eff / CQI_EFFICIENCY[14]
        } else if self.initial_cqi.is_empty() {
            0.0
        } else {
            let total: f64 = self.initial_cqi.iter().map(|&c| rate_of(c, self).unwrap_or(0.0)).sum();
            total / self.initial_cqi.len() as f64
        }
    }
}

/// Achievable rate for a CQI, normalized so CQI 15 equals the cell peak.
pub fn rate_of(cqi: u8, params: &ChannelParams) -> Result<f64> {
    if !(CQI_MIN..=CQI_MAX).contains(&cqi) {
        return Err(SimError::invalid("cqi", format!("{cqi} is not in [1, 15]")));
    }
    Ok(params.peak_rate_bps * CQI_EFFICIENCY[(cqi - 1) as usize] / CQI_EFFICIENCY[14])
}

/// One UE's CQI and the substream driving it.
#[derive(Debug, Clone)]
pub struct CqiState {
    cqi: u8,
    rng: Substream,
}

impl CqiState {
    pub fn new(cqi: u8, rng: Substream) -> Self {
        debug_assert!((CQI_MIN..=CQI_MAX).contains(&cqi));
        Self { cqi, rng }
    }

    pub fn cqi(&self) -> u8 {
        self.cqi
    }

    /// Advances one TTI. The step draw is taken only when the walk moves, and
    /// a step past either end of the table is clamped.
    pub fn step(&mut self, walk_prob: f64) -> u8 {
        if walk_prob > 0.0 && self.rng.uniform() < walk_prob {
            self.cqi = if self.rng.uniform() < 0.5 {
                self.cqi.saturating_sub(1).max(CQI_MIN)
            } else {
                (self.cqi + 1).min(CQI_MAX)
            };
        }
        self.cqi
    }
}
