//! Throughput, delay, loss and fairness accounting.

use serde::{Deserialize, Serialize};

use crate::buffer::BufferCounters;
use crate::engine::AdjustmentEvent;
use crate::error::{Result, SimError};
use crate::scheduler::Policy;
use crate::traffic::TrafficClass;
use crate::TTI_SECONDS;

/// Jain's fairness index `(sum x)^2 / (n * sum x^2)`.
pub fn jfi(xs: &[f64]) -> Result<f64> {
    if xs.is_empty() {
        return Err(SimError::invalid("jfi", "empty input"));
    }
    if xs.iter().any(|&x| !x.is_finite() || x < 0.0) {
        return Err(SimError::invalid("jfi", "values must be finite and non-negative"));
    }
    let sum: f64 = xs.iter().sum();
    let sum_sq: f64 = xs.iter().map(|x| x * x).sum();
    if sum_sq == 0.0 {
        return Err(SimError::invalid("jfi", "all values are zero"));
    }
    Ok(sum * sum / (xs.len() as f64 * sum_sq))
}

/// QoE fairness index over `(y_i, Y_i)` pairs: the sum over ordered pairs
/// `i != j` of `|y_i/Y_i - y_j/Y_j|`. Zero means every user has the same
/// satisfaction ratio; smaller is fairer. Not normalized by `n`.
pub fn qoe_fi(pairs: &[(f64, f64)]) -> Result<f64> {
    if pairs.len() < 2 {
        return Err(SimError::invalid(
            "qoe_fi",
            format!("needs at least 2 users, got {}", pairs.len()),
        ));
    }
    if pairs.iter().any(|&(_, big_y)| big_y.is_nan() || big_y <= 0.0) {
        return Err(SimError::invalid("qoe_fi", "required volume must be positive"));
    }
    let ratios: Vec<f64> = pairs.iter().map(|&(y, big_y)| y / big_y).collect();
    let mut total = 0.0;
    for (i, ri) in ratios.iter().enumerate() {
        for (j, rj) in ratios.iter().enumerate() {
            if i != j {
                total += (ri - rj).abs();
            }
        }
    }
    Ok(total)
}

/// Nearest-rank percentile of an unsorted sample.
pub fn percentile(values: &[u64], pct: f64) -> Option<u64> {
    if values.is_empty() {
        return None;
    }
    let mut sorted = values.to_vec();
    sorted.sort_unstable();
    let rank = ((pct / 100.0) * sorted.len() as f64).ceil() as usize;
    Some(sorted[rank.clamp(1, sorted.len()) - 1])
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct UeWindow {
    pub y_bits: u64,
    pub y_req_bits: u64,
    pub sched_count: u64,
    pub delivered_packets: u64,
    pub delay_sum_tti: u64,
    pub dropped_overflow_bits: u64,
    pub dropped_deadline_bits: u64,
}

/// Accumulators for the current reporting window.
#[derive(Debug, Clone)]
pub struct MetricsWindow {
    pub index: u64,
    pub start_tti: u64,
    pub ues: Vec<UeWindow>,
}

/// What a closed window reports.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowRecord {
    pub index: u64,
    pub start_tti: u64,
    /// Exclusive.
    pub end_tti: u64,
    pub ue_ids: Vec<u32>,
    pub ues: Vec<UeWindow>,
    pub throughput_bps: Vec<f64>,
    pub total_throughput_bps: f64,
    pub jfi: Option<f64>,
    pub qoe_fi: Option<f64>,
    /// Cumulative buffer counters summed over UEs at close.
    pub cumulative: BufferCounters,
}

impl MetricsWindow {
    pub fn new(ue_count: usize, start_tti: u64) -> Self {
        Self {
            index: 0,
            start_tti,
            ues: vec![UeWindow::default(); ue_count],
        }
    }

    /// Emits the record for `[start_tti, end_tti)` and starts the next window.
    pub fn close(&mut self, end_tti: u64, ue_ids: &[u32], cumulative: BufferCounters) -> WindowRecord {
        let span_s = (end_tti - self.start_tti) as f64 * TTI_SECONDS;
        let throughput_bps: Vec<f64> = self.ues.iter().map(|u| u.y_bits as f64 / span_s).collect();
        let total_throughput_bps = throughput_bps.iter().sum();
        let ys: Vec<f64> = self.ues.iter().map(|u| u.y_bits as f64).collect();
        let pairs: Vec<(f64, f64)> = self
            .ues
            .iter()
            .filter(|u| u.y_req_bits > 0)
            .map(|u| (u.y_bits as f64, u.y_req_bits as f64))
            .collect();
        let record = WindowRecord {
            index: self.index,
            start_tti: self.start_tti,
            end_tti,
            ue_ids: ue_ids.to_vec(),
            ues: std::mem::replace(&mut self.ues, vec![UeWindow::default(); ue_ids.len()]),
            throughput_bps,
            total_throughput_bps,
            jfi: jfi(&ys).ok(),
            qoe_fi: qoe_fi(&pairs).ok(),
            cumulative,
        };
        self.index += 1;
        self.start_tti = end_tti;
        record
    }
}

/// Whole-run results for one UE.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UeReport {
    pub ue_id: u32,
    pub class: TrafficClass,
    pub arrived_bits: u64,
    pub delivered_bits: u64,
    pub dropped_overflow_bits: u64,
    pub dropped_deadline_bits: u64,
    pub buffered_bits: u64,
    pub throughput_bps: f64,
    /// Delivered over required bits for the run.
    pub satisfaction: Option<f64>,
    pub loss_rate: Option<f64>,
    pub delivered_packets: u64,
    pub mean_delay_ms: Option<f64>,
    pub p99_delay_ms: Option<f64>,
    pub sched_count: u64,
    pub adjustments: u64,
    pub final_offered_load_bps: f64,
}

/// Whole-run results for one (policy, seed).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub policy: Policy,
    pub seed: u64,
    pub scenario_fingerprint: String,
    pub duration_tti: u64,
    pub total_delivered_bits: u64,
    /// Sum of the per-UE throughputs.
    pub total_throughput_bps: f64,
    /// Jain's index over per-UE delivered bits.
    pub jfi: Option<f64>,
    /// QoE fairness index over (delivered, arrived) per UE.
    pub qoe_fi: Option<f64>,
    pub idle_ttis: u64,
    pub ues: Vec<UeReport>,
    #[serde(default)]
    pub adjustment_events: Vec<AdjustmentEvent>,
}

impl RunReport {
    pub fn totals(&self) -> BufferCounters {
        let mut c = BufferCounters::default();
        for u in &self.ues {
            c.arrived_bits += u.arrived_bits;
            c.delivered_bits += u.delivered_bits;
            c.dropped_overflow_bits += u.dropped_overflow_bits;
            c.dropped_deadline_bits += u.dropped_deadline_bits;
            c.occupied_bits += u.buffered_bits;
        }
        c
    }
}
