//! Scenario configuration: JSON ingestion, validation and the shipped
//! five-user default.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::channel::ChannelParams;
use crate::error::{Result, SimError};
use crate::qoe::QoeParams;
use crate::scheduler::Policy;
use crate::traffic::{video_load_for_rate, FlowSpec};

/// 5 MB per UE, in bits.
pub const DEFAULT_BUFFERSIZE_BITS: u64 = 40_000_000;
pub const DEFAULT_DURATION_TTI: u64 = 30_000;
pub const DEFAULT_LOAD_FACTOR: f64 = 1.2;
/// Fraction of the default scenario's offered load carried by the FTP users.
pub const DEFAULT_FTP_SHARE: f64 = 0.05;

/// Buffer-pressure trigger for service adjustment requests.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdjustmentParams {
    #[serde(default)]
    pub enabled: bool,
    #[serde(default = "default_threshold")]
    pub occupancy_threshold: f64,
    #[serde(default = "default_starvation")]
    pub starvation_tti: u64,
    #[serde(default = "default_factor")]
    pub factor: f64,
}

fn default_threshold() -> f64 {
    0.8
}
fn default_starvation() -> u64 {
    100
}
fn default_factor() -> f64 {
    0.75
}

impl Default for AdjustmentParams {
    fn default() -> Self {
        Self {
            enabled: false,
            occupancy_threshold: default_threshold(),
            starvation_tti: default_starvation(),
            factor: default_factor(),
        }
    }
}

/// Deployment facts that do not drive the model but are kept with it.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Annotations {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cell_count: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bs_count: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cell_radius_km: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub speed_kmh: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default = "default_name")]
    pub name: String,
    pub duration_tti: u64,
    #[serde(default = "default_tti_ms")]
    pub tti_ms: u32,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_policy")]
    pub policy: Policy,
    pub buffersize_bits: u64,
    pub channel: ChannelParams,
    #[serde(default)]
    pub qoe: QoeParams,
    #[serde(default)]
    pub adjustment: AdjustmentParams,
    /// Reporting window length; the whole run when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window_tti: Option<u64>,
    #[serde(default)]
    pub annotations: Annotations,
    pub flows: Vec<FlowSpec>,
}

fn default_name() -> String {
    "scenario".to_string()
}
fn default_tti_ms() -> u32 {
    1
}
fn default_policy() -> Policy {
    Policy::Bcqq
}

/// Parses and validates a scenario document.
pub fn parse_scenario(text: &str) -> Result<Scenario> {
    let scenario: Scenario = serde_json::from_str(text)?;
    scenario.validate()?;
    Ok(scenario)
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        if self.duration_tti < 1 {
            return Err(SimError::invalid("duration_tti", "must be at least 1"));
        }
        if self.tti_ms != 1 {
            return Err(SimError::invalid(
                "tti_ms",
                format!("{} is unsupported, only 1 ms slots", self.tti_ms),
            ));
        }
        if self.buffersize_bits == 0 {
            return Err(SimError::invalid("buffersize_bits", "must be positive"));
        }
        if self.flows.is_empty() {
            return Err(SimError::invalid("flows", "at least one flow is required"));
        }
        let mut seen = HashSet::new();
        for (i, flow) in self.flows.iter().enumerate() {
            let key = format!("flows[{i}]");
            flow.validate(&key)?;
            if !seen.insert(flow.ue_id) {
                return Err(SimError::invalid(
                    format!("{key}.ue_id"),
                    format!("duplicate ue_id {}", flow.ue_id),
                ));
            }
        }
        self.channel.validate(self.flows.len())?;
        self.qoe.validate()?;
        let adj = &self.adjustment;
        if !(adj.occupancy_threshold > 0.0 && adj.occupancy_threshold < 1.0) {
            return Err(SimError::invalid(
                "adjustment.occupancy_threshold",
                format!("{} is not in (0, 1)", adj.occupancy_threshold),
            ));
        }
        if adj.starvation_tti < 1 {
            return Err(SimError::invalid("adjustment.starvation_tti", "must be at least 1"));
        }
        if !(adj.factor > 0.0 && adj.factor <= 1.0) {
            return Err(SimError::invalid(
                "adjustment.factor",
                format!("{} is not in (0, 1]", adj.factor),
            ));
        }
        if self.window_tti == Some(0) {
            return Err(SimError::invalid("window_tti", "must be at least 1"));
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    pub fn ue_ids(&self) -> Vec<u32> {
        self.flows.iter().map(|f| f.ue_id).collect()
    }

    /// Stable 64-bit FNV-1a hash of the canonical JSON form, as hex.
    pub fn fingerprint(&self) -> String {
        let text = serde_json::to_string(self).expect("scenario serializes");
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for b in text.bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
        format!("{h:016x}")
    }

    /// Sum of the arrival rates the flows will actually produce.
    pub fn offered_rate_bps(&self) -> f64 {
        self.flows.iter().map(FlowSpec::expected_rate_bps).sum()
    }

    /// The five-user single-cell default: UEs 1-3 FTP download (loss target
    /// 1e-6, 300 ms, 0.5 Mb mean packets), UEs 4-5 live HD video (1e-6,
    /// 150 ms, 2 Mb packet cap), 6 Gbps peak, 5 MB buffers, 1 ms slots.
    ///
    /// The total offered rate is `load_factor` times the long-run single-user
    /// capacity of the channel; FTP carries [`DEFAULT_FTP_SHARE`] of it and the
    /// two video flows split the rest. Video emits one frame per slot so that
    /// its clamped sizes can carry that much traffic.
    pub fn table1(load_factor: f64) -> Scenario {
        let channel = ChannelParams {
            peak_rate_bps: 6e9,
            walk_prob: 0.1,
            initial_cqi: vec![13, 11, 9, 11, 13],
        };
        let offered = load_factor * channel.expected_rate_bps();
        let ftp_load = (offered * DEFAULT_FTP_SHARE / 3.0).round();
        let video_target = (offered - 3.0 * ftp_load) / 2.0;
        let video_load = video_load_for_rate(video_target, 2_000_000, 1)
            .expect("video target below the clamp ceiling")
            .round();
        let mut flows: Vec<FlowSpec> = (1..=3)
            .map(|ue| FlowSpec::ftp(ue, 1e-6, 300, 500_000, ftp_load))
            .collect();
        flows.extend((4..=5).map(|ue| FlowSpec::video(ue, 1e-6, 150, 2_000_000, 1, video_load)));
        Scenario {
            name: "table1".to_string(),
            duration_tti: DEFAULT_DURATION_TTI,
            tti_ms: 1,
            seed: 1,
            policy: Policy::Bcqq,
            buffersize_bits: DEFAULT_BUFFERSIZE_BITS,
            channel,
            qoe: QoeParams::default(),
            adjustment: AdjustmentParams::default(),
            window_tti: None,
            annotations: Annotations {
                cell_count: Some(1),
                bs_count: Some(1),
                cell_radius_km: Some(1.0),
                speed_kmh: Some(3.0),
            },
            flows,
        }
    }
}
