//! Packet arrival processes for the two downlink traffic classes.
//!
//! FTP downloads arrive as a Poisson process with exponentially distributed
//! packet sizes. Live HD video emits one frame packet per frame interval with
//! an exponential size clamped at the flow's maximum packet size.

use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};
use crate::rng::Substream;
use crate::TTI_SECONDS;

/// Adjusted loads never fall below this fraction of the flow's original load.
pub const ADJUSTMENT_FLOOR: f64 = 0.1;

pub const DEFAULT_FRAME_INTERVAL_MS: u32 = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TrafficClass {
    FtpDownload,
    LiveHdVideo,
}

/// One UE's traffic source and QoS targets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowSpec {
    pub ue_id: u32,
    pub class: TrafficClass,
    /// Target packet loss rate.
    pub alpha: f64,
    /// Acceptable delay.
    pub beta_ms: u32,
    /// FTP only: mean packet size.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean_packet_bits: Option<u64>,
    /// Video only: packet size cap.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_packet_bits: Option<u64>,
    /// Video only: spacing between frames. Defaults to 16 ms.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frame_interval_ms: Option<u32>,
    pub offered_load_bps: f64,
    #[serde(default)]
    pub adaptive: bool,
    /// Load before any adjustment; anchors the adjustment floor.
    #[serde(skip)]
    nominal_load_bps: Option<f64>,
}

/// A downlink packet. Sizes are in bits, times in TTIs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Packet {
    pub size_bits: u64,
    pub arrival_tti: u64,
    pub deadline_tti: u64,
}

impl FlowSpec {
    pub fn ftp(ue_id: u32, alpha: f64, beta_ms: u32, mean_packet_bits: u64, load_bps: f64) -> Self {
        Self {
            ue_id,
            class: TrafficClass::FtpDownload,
            alpha,
            beta_ms,
            mean_packet_bits: Some(mean_packet_bits),
            max_packet_bits: None,
            frame_interval_ms: None,
            offered_load_bps: load_bps,
            adaptive: false,
            nominal_load_bps: None,
        }
    }

    pub fn video(
        ue_id: u32,
        alpha: f64,
        beta_ms: u32,
        max_packet_bits: u64,
        frame_interval_ms: u32,
        load_bps: f64,
    ) -> Self {
        Self {
            ue_id,
            class: TrafficClass::LiveHdVideo,
            alpha,
            beta_ms,
            mean_packet_bits: None,
            max_packet_bits: Some(max_packet_bits),
            frame_interval_ms: Some(frame_interval_ms),
            offered_load_bps: load_bps,
            adaptive: false,
            nominal_load_bps: None,
        }
    }

    pub fn with_adaptive(mut self, adaptive: bool) -> Self {
        self.adaptive = adaptive;
        self
    }

    pub fn beta_seconds(&self) -> f64 {
        self.beta_ms as f64 * 1e-3
    }

    pub fn frame_interval(&self) -> u32 {
        self.frame_interval_ms.unwrap_or(DEFAULT_FRAME_INTERVAL_MS)
    }

    pub fn nominal_load_bps(&self) -> f64 {
        self.nominal_load_bps.unwrap_or(self.offered_load_bps)
    }

    /// Checks all invariants. `key` prefixes field names in diagnostics,
    /// e.g. `flows[2]`.
    pub fn validate(&self, key: &str) -> Result<()> {
        let field = |name: &str| format!("{key}.{name}");
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(SimError::invalid(
                field("alpha"),
                format!("{} is not in (0, 1)", self.alpha),
            ));
        }
        if self.beta_ms < 1 {
            return Err(SimError::invalid(field("beta_ms"), "must be at least 1 ms"));
        }
        if !(self.offered_load_bps.is_finite() && self.offered_load_bps > 0.0) {
            return Err(SimError::invalid(
                field("offered_load_bps"),
                format!("{} is not a positive rate", self.offered_load_bps),
            ));
        }
        match self.class {
            TrafficClass::FtpDownload => {
                match self.mean_packet_bits {
                    None => return Err(SimError::invalid(field("mean_packet_bits"), "required for FtpDownload")),
                    Some(0) => return Err(SimError::invalid(field("mean_packet_bits"), "must be positive")),
                    Some(_) => {}
                }
                if self.max_packet_bits.is_some() {
                    return Err(SimError::invalid(
                        field("max_packet_bits"),
                        "only valid for LiveHdVideo",
                    ));
                }
                if self.frame_interval_ms.is_some() {
                    return Err(SimError::invalid(
                        field("frame_interval_ms"),
                        "only valid for LiveHdVideo",
                    ));
                }
            }
            TrafficClass::LiveHdVideo => {
                match self.max_packet_bits {
                    None => return Err(SimError::invalid(field("max_packet_bits"), "required for LiveHdVideo")),
                    Some(0) => return Err(SimError::invalid(field("max_packet_bits"), "must be positive")),
                    Some(_) => {}
                }
                if self.mean_packet_bits.is_some() {
                    return Err(SimError::invalid(
                        field("mean_packet_bits"),
                        "only valid for FtpDownload",
                    ));
                }
                if self.frame_interval() == 0 {
                    return Err(SimError::invalid(field("frame_interval_ms"), "must be positive"));
                }
            }
        }
        Ok(())
    }

    /// Mean arrival rate this spec actually produces, in bits/s. Differs from
    /// `offered_load_bps` for video because frame sizes are clamped.
    pub fn expected_rate_bps(&self) -> f64 {
        match self.class {
            TrafficClass::FtpDownload => self.offered_load_bps,
            TrafficClass::LiveHdVideo => {
                let interval_s = self.frame_interval() as f64 * 1e-3;
                let mean = self.offered_load_bps * interval_s;
                truncated_exp_mean(mean, self.max_packet_bits.unwrap_or(u64::MAX) as f64) / interval_s
            }
        }
    }

    /// Scales the offered load by `factor`, never below 10% of the original
    /// load. Non-adaptive flows come back unchanged.
    pub fn apply_adjustment(&self, factor: f64) -> Result<FlowSpec> {
        if !(factor > 0.0 && factor <= 1.0) {
            return Err(SimError::invalid(
                "adjustment.factor",
                format!("{factor} is not in (0, 1]"),
            ));
        }
        if !self.adaptive {
            return Ok(self.clone());
        }
        let nominal = self.nominal_load_bps();
        let mut next = self.clone();
        next.nominal_load_bps = Some(nominal);
        next.offered_load_bps = (self.offered_load_bps * factor).max(nominal * ADJUSTMENT_FLOOR);
        Ok(next)
    }

    /// Arrivals for this flow in `tti`, dispatched on the traffic class.
    pub fn arrivals(&self, tti: u64, rng: &mut Substream) -> Vec<Packet> {
        match self.class {
            TrafficClass::FtpDownload => ftp_arrivals(self, tti, rng),
            TrafficClass::LiveHdVideo => video_arrivals(self, tti, rng),
        }
    }

    fn packet(&self, size_bits: u64, tti: u64) -> Packet {
        Packet {
            size_bits,
            arrival_tti: tti,
            deadline_tti: tti + self.beta_ms as u64,
        }
    }
}

/// Exponential inverse CDF: the size with cumulative probability `u`.
pub fn exp_size_from_uniform(mean_bits: f64, u: f64) -> u64 {
    let x = -mean_bits * (1.0 - u).ln();
    (x.ceil() as u64).max(1)
}

/// Mean of `min(X, cap)` for exponential `X` with the given mean.
pub fn truncated_exp_mean(mean: f64, cap: f64) -> f64 {
    mean * -(-cap / mean).exp_m1()
}

/// Offered load (the untruncated exponential rate) that makes a video flow's
/// clamped arrival rate equal `target_bps`. `None` if the target is at or
/// above the clamp ceiling `max_packet_bits / interval`.
pub fn video_load_for_rate(target_bps: f64, max_packet_bits: u64, frame_interval_ms: u32) -> Option<f64> {
    let interval_s = frame_interval_ms as f64 * 1e-3;
    let cap = max_packet_bits as f64;
    let target_mean = target_bps * interval_s;
    if !(target_mean > 0.0 && target_mean < cap) {
        return None;
    }
    let (mut lo, mut hi) = (target_mean, target_mean);
    while truncated_exp_mean(hi, cap) < target_mean {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if truncated_exp_mean(mid, cap) < target_mean {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi) / interval_s)
}

pub fn ftp_arrivals(spec: &FlowSpec, tti: u64, rng: &mut Substream) -> Vec<Packet> {
    debug_assert_eq!(spec.class, TrafficClass::FtpDownload);
    let mean_bits = spec.mean_packet_bits.expect("validated FTP spec") as f64;
    let lambda = spec.offered_load_bps / mean_bits * TTI_SECONDS;
    let count = Poisson::new(lambda)
        .expect("validated FTP spec has a positive rate")
        .sample(rng.rng()) as u64;
    (0..count)
        .map(|_| spec.packet(exp_size_from_uniform(mean_bits, rng.uniform()), tti))
        .collect()
}

pub fn video_arrivals(spec: &FlowSpec, tti: u64, rng: &mut Substream) -> Vec<Packet> {
    debug_assert_eq!(spec.class, TrafficClass::LiveHdVideo);
    let interval = spec.frame_interval() as u64;
    if !tti.is_multiple_of(interval) {
        return Vec::new();
    }
    let cap = spec.max_packet_bits.expect("validated video spec");
    let mean = spec.offered_load_bps * interval as f64 * 1e-3;
    let size = exp_size_from_uniform(mean, rng.uniform()).min(cap);
    vec![spec.packet(size, tti)]
}
