//! Per-TTI user selection.
//!
//! Every policy grants the whole slot to one UE with a non-empty buffer.
//! Priorities are pure functions of a [`UeSnapshot`]; ties go to the UE served
//! least recently (never-served first), then to the lowest `ue_id`.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::SimError;
use crate::TTI_SECONDS;

/// EMA horizon (in TTIs) of the served-rate average used by PF and M-LWDF.
pub const DEFAULT_EMA_TTI: f64 = 1000.0;
pub const AVG_RATE_FLOOR_BPS: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Policy {
    #[serde(rename = "BCQQ")]
    Bcqq,
    #[serde(rename = "MLWDF")]
    Mlwdf,
    #[serde(rename = "PF")]
    Pf,
    #[serde(rename = "RR")]
    Rr,
}

impl Policy {
    pub const ALL: [Policy; 4] = [Policy::Bcqq, Policy::Mlwdf, Policy::Pf, Policy::Rr];

    pub fn name(self) -> &'static str {
        match self {
            Policy::Bcqq => "BCQQ",
            Policy::Mlwdf => "MLWDF",
            Policy::Pf => "PF",
            Policy::Rr => "RR",
        }
    }

    pub fn priority(self, u: &UeSnapshot) -> f64 {
        match self {
            Policy::Bcqq => bcqq_priority(u),
            Policy::Mlwdf => mlwdf_priority(u),
            Policy::Pf => pf_priority(u),
            Policy::Rr => {
                if u.buffer_bits == 0 {
                    0.0
                } else {
                    1.0
                }
            }
        }
    }
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Policy {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_uppercase().as_str() {
            "BCQQ" => Ok(Policy::Bcqq),
            "MLWDF" | "M-LWDF" => Ok(Policy::Mlwdf),
            "PF" => Ok(Policy::Pf),
            "RR" => Ok(Policy::Rr),
            other => Err(SimError::invalid("policy", format!("unknown policy `{other}`"))),
        }
    }
}

/// Scheduler view of one UE at the start of a slot.
#[derive(Debug, Clone, PartialEq)]
pub struct UeSnapshot {
    pub ue_id: u32,
    pub buffer_bits: u64,
    pub buffersize_bits: u64,
    pub alpha: f64,
    pub beta_s: f64,
    pub q: f64,
    pub rate_bps: f64,
    /// Waiting time of the oldest queued packet.
    pub hol_delay_s: f64,
    /// EMA of the served rate, floored at 1 bps.
    pub avg_rate_bps: f64,
    pub last_served_tti: Option<u64>,
}

impl UeSnapshot {
    /// `-ln(alpha) / beta`: grows as the loss target or the delay bound tightens.
    pub fn qos_weight(&self) -> f64 {
        -self.alpha.ln() / self.beta_s
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchedDecision {
    pub selected_ue: Option<u32>,
    pub priority: f64,
    pub budget_bits: u64,
}

impl SchedDecision {
    pub fn idle() -> Self {
        Self {
            selected_ue: None,
            priority: 0.0,
            budget_bits: 0,
        }
    }
}

/// Buffer, CQI, QoS and QoE priority:
/// `L = (buffer / buffersize) * (-ln(alpha) / beta) * q * rate`.
pub fn bcqq_priority(u: &UeSnapshot) -> f64 {
    if u.buffer_bits == 0 {
        return 0.0;
    }
    let occupancy = u.buffer_bits as f64 / u.buffersize_bits as f64;
    occupancy * u.qos_weight() * u.q * u.rate_bps
}

/// Modified largest weighted delay first:
/// `P = (-ln(alpha) / beta) * hol_delay * rate / avg_rate`.
pub fn mlwdf_priority(u: &UeSnapshot) -> f64 {
    if u.buffer_bits == 0 {
        return 0.0;
    }
    u.qos_weight() * u.hol_delay_s * u.rate_bps / u.avg_rate_bps
}

/// Proportional fair: `P = rate / avg_rate`.
pub fn pf_priority(u: &UeSnapshot) -> f64 {
    if u.buffer_bits == 0 {
        return 0.0;
    }
    u.rate_bps / u.avg_rate_bps
}

/// Slot budget for a rate, floored to whole bits.
pub fn budget_bits(rate_bps: f64) -> u64 {
    (rate_bps * TTI_SECONDS).floor() as u64
}

/// `Less` when `a` wins the tie rule over `b`.
fn tie_order(a: &UeSnapshot, b: &UeSnapshot) -> Ordering {
    // None (never served) sorts before Some(_)
    a.last_served_tti.cmp(&b.last_served_tti).then(a.ue_id.cmp(&b.ue_id))
}

/// Index of the winning UE given precomputed priorities, skipping empty
/// buffers. `None` for an idle slot.
pub fn argmax(inputs: &[UeSnapshot], priorities: &[f64]) -> Option<usize> {
    debug_assert_eq!(inputs.len(), priorities.len());
    let mut best: Option<usize> = None;
    for (i, u) in inputs.iter().enumerate() {
        if u.buffer_bits == 0 {
            continue;
        }
        best = match best {
            None => Some(i),
            Some(b) => {
                let better = match priorities[i].partial_cmp(&priorities[b]).unwrap_or(Ordering::Equal) {
                    Ordering::Greater => true,
                    Ordering::Less => false,
                    Ordering::Equal => tie_order(u, &inputs[b]) == Ordering::Less,
                };
                if better {
                    Some(i)
                } else {
                    Some(b)
                }
            }
        };
    }
    best
}

pub fn priorities(inputs: &[UeSnapshot], policy: Policy) -> Vec<f64> {
    inputs.iter().map(|u| policy.priority(u)).collect()
}

pub fn select(inputs: &[UeSnapshot], policy: Policy) -> SchedDecision {
    let prio = priorities(inputs, policy);
    decide(inputs, &prio)
}

pub fn decide(inputs: &[UeSnapshot], priorities: &[f64]) -> SchedDecision {
    match argmax(inputs, priorities) {
        None => SchedDecision::idle(),
        Some(i) => SchedDecision {
            selected_ue: Some(inputs[i].ue_id),
            priority: priorities[i],
            budget_bits: budget_bits(inputs[i].rate_bps),
        },
    }
}

/// One EMA step of the served rate: `avg <- (1 - 1/tc) avg + (1/tc) served/TTI`.
pub fn update_avg_rate(avg_rate_bps: f64, served_bits: u64, ema_tti: f64) -> f64 {
    let inst = served_bits as f64 / TTI_SECONDS;
    let w = 1.0 / ema_tti;
    ((1.0 - w) * avg_rate_bps + w * inst).max(AVG_RATE_FLOOR_BPS)
}
