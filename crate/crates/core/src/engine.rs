//! The TTI loop.
//!
//! Each slot runs, in this order: arrivals and enqueue, deadline expiry, CQI
//! step, QoE update, priority computation and selection, drain of the winner,
//! EMA and metrics update, adjustment check. A run is single threaded and a
//! pure function of `(scenario, policy, seed)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::buffer::{BufferCounters, Delivery, UeBuffer};
use crate::channel::{rate_of, CqiState};
use crate::error::Result;
use crate::metrics::{self, MetricsWindow, RunReport, UeReport, WindowRecord};
use crate::qoe::{QoeModel, QoeState, UnmetDemand};
use crate::rng::{Purpose, Substream};
use crate::scenario::Scenario;
use crate::scheduler::{self, Policy, SchedDecision, UeSnapshot, AVG_RATE_FLOOR_BPS, DEFAULT_EMA_TTI};
use crate::traffic::FlowSpec;
use crate::TTI_SECONDS;

/// A service adjustment request sent to a flow's source.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdjustmentEvent {
    pub tti: u64,
    pub ue_id: u32,
    /// End-of-slot buffer occupancy ratio that triggered the request.
    pub occupancy: f64,
    /// Consecutive slots, including this one, the UE went unscheduled.
    pub idle_ttis: u64,
    pub old_load_bps: f64,
    pub new_load_bps: f64,
}

/// One `(tti, ue)` line of the per-slot trace.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub tti: u64,
    pub ue: u32,
    pub cqi: u8,
    pub rate_bps: f64,
    /// Occupancy at the end of the slot.
    pub buffer_bits: u64,
    pub q: f64,
    pub priority: f64,
    /// The UE granted this slot, `None` when idle.
    pub selected: Option<u32>,
    pub tx_bits: u64,
    pub dropped_deadline_bits: u64,
    pub dropped_overflow_bits: u64,
}

/// Everything a single slot produced.
#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub tti: u64,
    pub inputs: Vec<UeSnapshot>,
    pub priorities: Vec<f64>,
    pub decision: SchedDecision,
    pub tx_bits: u64,
    pub adjustments: Vec<AdjustmentEvent>,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub report: RunReport,
    pub windows: Vec<WindowRecord>,
    pub adjustments: Vec<AdjustmentEvent>,
    pub trace: Option<Vec<TraceRow>>,
}

struct UeState {
    flow: FlowSpec,
    traffic_rng: Substream,
    buffer: UeBuffer,
    cqi: CqiState,
    qoe: QoeState,
    avg_rate_bps: f64,
    last_served_tti: Option<u64>,
    idle_ttis: u64,
    last_adjustment_tti: Option<u64>,
    adjustments: u64,
    sched_count: u64,
    delays: Vec<u64>,
}

pub struct Engine {
    scenario: Scenario,
    policy: Policy,
    seed: u64,
    fingerprint: String,
    model: Box<dyn QoeModel>,
    ues: Vec<UeState>,
    ue_ids: Vec<u32>,
    tti: u64,
    idle_slots: u64,
    window: MetricsWindow,
    windows: Vec<WindowRecord>,
    adjustments: Vec<AdjustmentEvent>,
    trace: Option<Vec<TraceRow>>,
    deliveries: Vec<Delivery>,
}

impl Engine {
    pub fn new(scenario: &Scenario, policy: Policy, seed: u64) -> Result<Self> {
        scenario.validate()?;
        let ues = scenario
            .flows
            .iter()
            .zip(&scenario.channel.initial_cqi)
            .map(|(flow, &cqi)| UeState {
                flow: flow.clone(),
                traffic_rng: Substream::new(seed, flow.ue_id, Purpose::Traffic),
                buffer: UeBuffer::new(scenario.buffersize_bits),
                cqi: CqiState::new(cqi, Substream::new(seed, flow.ue_id, Purpose::Channel)),
                qoe: QoeState::new(flow.ue_id),
                avg_rate_bps: AVG_RATE_FLOOR_BPS,
                last_served_tti: None,
                idle_ttis: 0,
                last_adjustment_tti: None,
                adjustments: 0,
                sched_count: 0,
                delays: Vec::new(),
            })
            .collect::<Vec<_>>();
        Ok(Self {
            fingerprint: scenario.fingerprint(),
            model: Box::new(UnmetDemand {
                q_max: scenario.qoe.q_max,
            }),
            ue_ids: scenario.ue_ids(),
            window: MetricsWindow::new(ues.len(), 0),
            ues,
            scenario: scenario.clone(),
            policy,
            seed,
            tti: 0,
            idle_slots: 0,
            windows: Vec::new(),
            adjustments: Vec::new(),
            trace: None,
            deliveries: Vec::new(),
        })
    }

    pub fn with_qoe_model(mut self, model: Box<dyn QoeModel>) -> Self {
        self.model = model;
        self
    }

    pub fn with_trace(mut self, on: bool) -> Self {
        self.trace = on.then(Vec::new);
        self
    }

    pub fn tti(&self) -> u64 {
        self.tti
    }

    pub fn is_done(&self) -> bool {
        self.tti >= self.scenario.duration_tti
    }

    /// Cumulative buffer counters summed over UEs.
    pub fn totals(&self) -> BufferCounters {
        let mut c = BufferCounters::default();
        for u in &self.ues {
            let b = u.buffer.counters();
            c.arrived_bits += b.arrived_bits;
            c.delivered_bits += b.delivered_bits;
            c.dropped_overflow_bits += b.dropped_overflow_bits;
            c.dropped_deadline_bits += b.dropped_deadline_bits;
            c.occupied_bits += b.occupied_bits;
        }
        c
    }

    pub fn counters(&self) -> Vec<BufferCounters> {
        self.ues.iter().map(|u| u.buffer.counters()).collect()
    }

    pub fn windows(&self) -> &[WindowRecord] {
        &self.windows
    }

    pub fn flows(&self) -> impl Iterator<Item = &FlowSpec> {
        self.ues.iter().map(|u| &u.flow)
    }

    pub fn step(&mut self) -> StepOutcome {
        let tti = self.tti;
        let n = self.ues.len();
        let mut arrived = vec![0u64; n];
        let mut overflow = vec![0u64; n];
        let mut expired = vec![0u64; n];

        // 1. arrivals
        for (i, ue) in self.ues.iter_mut().enumerate() {
            for pkt in ue.flow.arrivals(tti, &mut ue.traffic_rng) {
                arrived[i] += pkt.size_bits;
                if !ue.buffer.enqueue(pkt) {
                    overflow[i] += pkt.size_bits;
                }
            }
        }
        // 2. deadline expiry
        for (i, ue) in self.ues.iter_mut().enumerate() {
            expired[i] = ue.buffer.expire(tti);
        }
        // 3. channel
        let walk_prob = self.scenario.channel.walk_prob;
        for ue in self.ues.iter_mut() {
            ue.cqi.step(walk_prob);
        }
        // 4. QoE
        let delay = self.scenario.qoe.feedback_delay_tti;
        for (i, ue) in self.ues.iter_mut().enumerate() {
            ue.qoe.update_requirement(arrived[i]);
            ue.qoe.refresh(self.model.as_ref(), delay);
        }
        // 5. select
        let inputs: Vec<UeSnapshot> = self
            .ues
            .iter()
            .map(|ue| UeSnapshot {
                ue_id: ue.flow.ue_id,
                buffer_bits: ue.buffer.occupied_bits(),
                buffersize_bits: ue.buffer.capacity_bits(),
                alpha: ue.flow.alpha,
                beta_s: ue.flow.beta_seconds(),
                q: ue.qoe.q,
                rate_bps: rate_of(ue.cqi.cqi(), &self.scenario.channel).expect("CQI stays in range"),
                hol_delay_s: ue.buffer.head_arrival().map_or(0.0, |a| (tti - a) as f64 * TTI_SECONDS),
                avg_rate_bps: ue.avg_rate_bps,
                last_served_tti: ue.last_served_tti,
            })
            .collect();
        let priorities = scheduler::priorities(&inputs, self.policy);
        let winner = scheduler::argmax(&inputs, &priorities);
        let decision = scheduler::decide(&inputs, &priorities);

        // 6. transmit
        let mut tx = vec![0u64; n];
        if let Some(w) = winner {
            let ue = &mut self.ues[w];
            self.deliveries.clear();
            tx[w] = ue.buffer.drain(decision.budget_bits, tti, &mut self.deliveries);
            ue.delays.extend(self.deliveries.iter().map(|d| d.delay_tti));
            let acc = &mut self.window.ues[w];
            acc.delivered_packets += self.deliveries.len() as u64;
            acc.delay_sum_tti += self.deliveries.iter().map(|d| d.delay_tti).sum::<u64>();
        } else {
            self.idle_slots += 1;
        }

        // 7. EMA, QoE delivery and metrics
        for (i, ue) in self.ues.iter_mut().enumerate() {
            ue.avg_rate_bps = scheduler::update_avg_rate(ue.avg_rate_bps, tx[i], DEFAULT_EMA_TTI);
            ue.qoe.record_delivery(tx[i]);
            if winner == Some(i) {
                ue.last_served_tti = Some(tti);
                ue.idle_ttis = 0;
                ue.sched_count += 1;
            } else {
                ue.idle_ttis += 1;
            }
            let acc = &mut self.window.ues[i];
            acc.y_bits += tx[i];
            acc.y_req_bits += arrived[i];
            acc.dropped_overflow_bits += overflow[i];
            acc.dropped_deadline_bits += expired[i];
            if winner == Some(i) {
                acc.sched_count += 1;
            }
        }
        if let Some(trace) = self.trace.as_mut() {
            for (i, ue) in self.ues.iter().enumerate() {
                trace.push(TraceRow {
                    tti,
                    ue: ue.flow.ue_id,
                    cqi: ue.cqi.cqi(),
                    rate_bps: inputs[i].rate_bps,
                    buffer_bits: ue.buffer.occupied_bits(),
                    q: inputs[i].q,
                    priority: priorities[i],
                    selected: decision.selected_ue,
                    tx_bits: tx[i],
                    dropped_deadline_bits: expired[i],
                    dropped_overflow_bits: overflow[i],
                });
            }
        }

        // 8. adjustment
        let adjustments = if self.scenario.adjustment.enabled {
            self.adjustment_check(tti)
        } else {
            Vec::new()
        };
        self.adjustments.extend(adjustments.iter().cloned());

        self.tti += 1;
        let window_end = self.scenario.window_tti.is_some_and(|w| self.tti.is_multiple_of(w)) || self.is_done();
        if window_end {
            let totals = self.totals();
            let record = self.window.close(self.tti, &self.ue_ids, totals);
            self.windows.push(record);
            for ue in self.ues.iter_mut() {
                ue.qoe.reset_window();
            }
        }

        StepOutcome {
            tti,
            inputs,
            priorities,
            decision,
            tx_bits: tx.iter().sum(),
            adjustments,
        }
    }

    /// Sends a service adjustment request to every UE whose buffer is above
    /// the occupancy threshold and that has gone `starvation_tti` slots
    /// without service, at most once per flow per `starvation_tti` slots.
    fn adjustment_check(&mut self, tti: u64) -> Vec<AdjustmentEvent> {
        let params = self.scenario.adjustment.clone();
        let mut events = Vec::new();
        for ue in self.ues.iter_mut() {
            let occupancy = ue.buffer.occupancy_ratio();
            let rate_limited = ue
                .last_adjustment_tti
                .is_some_and(|last| tti - last < params.starvation_tti);
            if occupancy > params.occupancy_threshold && ue.idle_ttis >= params.starvation_tti && !rate_limited {
                let old = ue.flow.offered_load_bps;
                ue.flow = ue
                    .flow
                    .apply_adjustment(params.factor)
                    .expect("validated adjustment factor");
                ue.last_adjustment_tti = Some(tti);
                ue.adjustments += 1;
                events.push(AdjustmentEvent {
                    tti,
                    ue_id: ue.flow.ue_id,
                    occupancy,
                    idle_ttis: ue.idle_ttis,
                    old_load_bps: old,
                    new_load_bps: ue.flow.offered_load_bps,
                });
            }
        }
        events
    }

    pub fn run_to_end(&mut self) {
        while !self.is_done() {
            self.step();
        }
    }

    pub fn finish(mut self) -> RunOutput {
        self.run_to_end();
        let duration_s = self.scenario.duration_tti as f64 * TTI_SECONDS;
        let ues: Vec<UeReport> = self
            .ues
            .iter()
            .map(|ue| {
                let c = ue.buffer.counters();
                let dropped = c.dropped_overflow_bits + c.dropped_deadline_bits;
                UeReport {
                    ue_id: ue.flow.ue_id,
                    class: ue.flow.class,
                    arrived_bits: c.arrived_bits,
                    delivered_bits: c.delivered_bits,
                    dropped_overflow_bits: c.dropped_overflow_bits,
                    dropped_deadline_bits: c.dropped_deadline_bits,
                    buffered_bits: c.occupied_bits,
                    throughput_bps: c.delivered_bits as f64 / duration_s,
                    satisfaction: (c.arrived_bits > 0).then(|| c.delivered_bits as f64 / c.arrived_bits as f64),
                    loss_rate: (c.arrived_bits > 0).then(|| dropped as f64 / c.arrived_bits as f64),
                    delivered_packets: ue.delays.len() as u64,
                    mean_delay_ms: (!ue.delays.is_empty())
                        .then(|| ue.delays.iter().sum::<u64>() as f64 / ue.delays.len() as f64),
                    p99_delay_ms: metrics::percentile(&ue.delays, 99.0).map(|d| d as f64),
                    sched_count: ue.sched_count,
                    adjustments: ue.adjustments,
                    final_offered_load_bps: ue.flow.offered_load_bps,
                }
            })
            .collect();
        let ys: Vec<f64> = ues.iter().map(|u| u.delivered_bits as f64).collect();
        let pairs: Vec<(f64, f64)> = ues
            .iter()
            .filter(|u| u.arrived_bits > 0)
            .map(|u| (u.delivered_bits as f64, u.arrived_bits as f64))
            .collect();
        let report = RunReport {
            policy: self.policy,
            seed: self.seed,
            scenario_fingerprint: self.fingerprint.clone(),
            duration_tti: self.scenario.duration_tti,
            total_delivered_bits: ues.iter().map(|u| u.delivered_bits).sum(),
            total_throughput_bps: ues.iter().map(|u| u.throughput_bps).sum(),
            jfi: metrics::jfi(&ys).ok(),
            qoe_fi: metrics::qoe_fi(&pairs).ok(),
            idle_ttis: self.idle_slots,
            ues,
            adjustment_events: self.adjustments.clone(),
        };
        RunOutput {
            report,
            windows: self.windows,
            adjustments: self.adjustments,
            trace: self.trace,
        }
    }
}

/// Runs one `(policy, seed)` of a scenario to completion.
pub fn run(scenario: &Scenario, policy: Policy, seed: u64, trace: bool) -> Result<RunOutput> {
    Ok(Engine::new(scenario, policy, seed)?.with_trace(trace).finish())
}

/// Runs every `(policy, seed)` combination in parallel. Results come back in
/// policy-major order regardless of scheduling.
pub fn run_sweep(scenario: &Scenario, policies: &[Policy], seeds: &[u64], trace: bool) -> Result<Vec<RunOutput>> {
    scenario.validate()?;
    let jobs: Vec<(Policy, u64)> = policies
        .iter()
        .flat_map(|&p| seeds.iter().map(move |&s| (p, s)))
        .collect();
    jobs.par_iter().map(|&(p, s)| run(scenario, p, s, trace)).collect()
}
