//! QoE feedback: the per-UE satisfaction multiplier used by BCQQ and the
//! required-volume accounting used by the QoE fairness index.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};

pub const DEFAULT_Q_MAX: f64 = 100.0;

/// Maps a UE's window accounting to a priority multiplier `q >= 1`.
pub trait QoeModel: Send + Sync {
    fn q(&self, y_bits: u64, y_req_bits: u64) -> f64;
}

/// `q = y_req / max(y, 1)` clamped to `[1, q_max]`: the reciprocal of the
/// satisfaction ratio, so underserved users rise in priority.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnmetDemand {
    pub q_max: f64,
}

impl Default for UnmetDemand {
    fn default() -> Self {
        Self { q_max: DEFAULT_Q_MAX }
    }
}

impl QoeModel for UnmetDemand {
    fn q(&self, y_bits: u64, y_req_bits: u64) -> f64 {
        let ratio = y_req_bits as f64 / y_bits.max(1) as f64;
        ratio.clamp(1.0, self.q_max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QoeParams {
    #[serde(default = "default_q_max")]
    pub q_max: f64,
    /// TTIs between a UE computing its QoE and the scheduler seeing it.
    #[serde(default)]
    pub feedback_delay_tti: u32,
}

fn default_q_max() -> f64 {
    DEFAULT_Q_MAX
}

impl Default for QoeParams {
    fn default() -> Self {
        Self {
            q_max: DEFAULT_Q_MAX,
            feedback_delay_tti: 0,
        }
    }
}

impl QoeParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.q_max.is_finite() && self.q_max >= 1.0) {
            return Err(SimError::invalid("qoe.q_max", format!("{} is below 1", self.q_max)));
        }
        Ok(())
    }
}

/// Window accounting for one UE.
#[derive(Debug, Clone, PartialEq)]
pub struct QoeState {
    pub ue_id: u32,
    /// Bits delivered in the current window.
    pub y_bits: u64,
    /// Bits that had to be delivered in the current window.
    pub y_req_bits: u64,
    /// Multiplier the scheduler currently sees.
    pub q: f64,
    history: VecDeque<f64>,
}

impl QoeState {
    pub fn new(ue_id: u32) -> Self {
        Self {
            ue_id,
            y_bits: 0,
            y_req_bits: 0,
            q: 1.0,
            history: VecDeque::new(),
        }
    }

    pub fn update_requirement(&mut self, arrived_bits: u64) {
        self.y_req_bits += arrived_bits;
    }

    pub fn record_delivery(&mut self, bits: u64) {
        self.y_bits += bits;
    }

    /// Computes this TTI's QoE and publishes the value from `delay` TTIs ago.
    /// Until that much history exists the scheduler sees the neutral `q = 1`.
    pub fn refresh(&mut self, model: &dyn QoeModel, delay: u32) -> f64 {
        self.history.push_back(model.q(self.y_bits, self.y_req_bits));
        self.q = if self.history.len() > delay as usize {
            self.history.pop_front().unwrap_or(1.0)
        } else {
            1.0
        };
        self.q
    }

    /// `y / Y`, or `None` when nothing was required.
    pub fn satisfaction(&self) -> Option<f64> {
        (self.y_req_bits > 0).then(|| self.y_bits as f64 / self.y_req_bits as f64)
    }

    /// Starts a new window. Delayed feedback already in flight is kept.
    pub fn reset_window(&mut self) {
        self.y_bits = 0;
        self.y_req_bits = 0;
    }
}

/// Free-function form of the default model.
pub fn q_of(state: &QoeState, q_max: f64) -> f64 {
    UnmetDemand { q_max }.q(state.y_bits, state.y_req_bits)
}
