//! Per-UE downlink queue with exact bit accounting.
//!
//! Conservation holds after every operation:
//! `arrived = delivered + dropped_overflow + dropped_deadline + occupied`.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::traffic::Packet;

#[derive(Debug, Clone, Copy)]
struct Queued {
    packet: Packet,
    remaining_bits: u64,
}

/// Cumulative bit counters of one buffer.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BufferCounters {
    pub arrived_bits: u64,
    pub delivered_bits: u64,
    pub dropped_overflow_bits: u64,
    pub dropped_deadline_bits: u64,
    pub occupied_bits: u64,
}

impl BufferCounters {
    pub fn conserved(&self) -> bool {
        self.arrived_bits
            == self.delivered_bits + self.dropped_overflow_bits + self.dropped_deadline_bits + self.occupied_bits
    }
}

/// A packet whose last bit left the buffer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Delivery {
    pub arrival_tti: u64,
    pub delay_tti: u64,
}

#[derive(Debug, Clone)]
pub struct UeBuffer {
    capacity_bits: u64,
    queue: VecDeque<Queued>,
    counters: BufferCounters,
}

impl UeBuffer {
    pub fn new(capacity_bits: u64) -> Self {
        Self {
            capacity_bits,
            queue: VecDeque::new(),
            counters: BufferCounters::default(),
        }
    }

    pub fn capacity_bits(&self) -> u64 {
        self.capacity_bits
    }

    pub fn occupied_bits(&self) -> u64 {
        self.counters.occupied_bits
    }

    pub fn occupancy_ratio(&self) -> f64 {
        self.counters.occupied_bits as f64 / self.capacity_bits as f64
    }

    pub fn is_empty(&self) -> bool {
        self.queue.is_empty()
    }

    pub fn counters(&self) -> BufferCounters {
        self.counters
    }

    /// Arrival TTI of the head-of-line packet.
    pub fn head_arrival(&self) -> Option<u64> {
        self.queue.front().map(|q| q.packet.arrival_tti)
    }

    /// Appends the whole packet if it fits, otherwise tail-drops all of it.
    /// Returns whether the packet was accepted.
    pub fn enqueue(&mut self, pkt: Packet) -> bool {
        debug_assert!(pkt.size_bits > 0);
        self.counters.arrived_bits += pkt.size_bits;
        if self.counters.occupied_bits + pkt.size_bits <= self.capacity_bits {
            self.counters.occupied_bits += pkt.size_bits;
            self.queue.push_back(Queued {
                packet: pkt,
                remaining_bits: pkt.size_bits,
            });
            true
        } else {
            self.counters.dropped_overflow_bits += pkt.size_bits;
            false
        }
    }

    /// Drops every packet whose deadline is at or before `now_tti`, including
    /// the untransmitted rest of partially sent packets. Returns the bits
    /// dropped.
    pub fn expire(&mut self, now_tti: u64) -> u64 {
        let before = self.queue.len();
        let mut dropped = 0;
        self.queue.retain(|q| {
            if q.packet.deadline_tti <= now_tti {
                dropped += q.remaining_bits;
                false
            } else {
                true
            }
        });
        if self.queue.len() != before {
            self.counters.occupied_bits -= dropped;
            self.counters.dropped_deadline_bits += dropped;
        }
        dropped
    }

    /// Sends up to `budget_bits` from the head, splitting packets as needed.
    /// Completed packets are appended to `delivered`.
    pub fn drain(&mut self, budget_bits: u64, now_tti: u64, delivered: &mut Vec<Delivery>) -> u64 {
        let mut left = budget_bits;
        while left > 0 {
            let Some(head) = self.queue.front_mut() else { break };
            if head.remaining_bits <= left {
                left -= head.remaining_bits;
                delivered.push(Delivery {
                    arrival_tti: head.packet.arrival_tti,
                    delay_tti: now_tti - head.packet.arrival_tti,
                });
                self.queue.pop_front();
            } else {
                head.remaining_bits -= left;
                left = 0;
            }
        }
        let tx = budget_bits - left;
        self.counters.occupied_bits -= tx;
        self.counters.delivered_bits += tx;
        tx
    }
}
