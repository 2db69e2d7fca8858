use serde::{Deserialize, Serialize};
use std::fmt;

use super::config::{slot_offsets, BackhaulConfig, DutyCycleConfig, SimConfig};
use crate::nullsearch::NodeId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Phase {
    PowerMeasurement,
    Level(usize),
    Linear,
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Phase::PowerMeasurement => f.write_str("power"),
            Phase::Level(l) => write!(f, "level-{l}"),
            Phase::Linear => f.write_str("linear"),
        }
    }
}

/// What is transmitted in one test slot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SlotLabel {
    Antenna(usize),
    Config(NodeId),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum EventKind {
    PhaseStart { phase: Phase },
    CycleStart { cycle: usize },
    TestSlot { phase: Phase, slot: SlotLabel },
    FeedbackSent { phase: Phase },
    FeedbackReceived { phase: Phase },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub t_us: u64,
    pub seq: u64,
    #[serde(flatten)]
    pub kind: EventKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseSummary {
    pub phase: Phase,
    pub start_us: u64,
    pub end_us: u64,
    pub tested: usize,
    pub per_cycle: usize,
    pub cycles: usize,
    /// Backhaul latency charged to this phase; zero when its report rides along
    /// with a later one.
    pub feedback_us: u64,
}

impl PhaseSummary {
    pub fn duration_us(&self) -> u64 {
        self.end_us - self.start_us
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SimTimeline {
    pub events: Vec<Event>,
    pub phases: Vec<PhaseSummary>,
    pub total_delay_us: u64,
}

impl SimTimeline {
    pub fn total_delay_ms(&self) -> f64 {
        self.total_delay_us as f64 / 1000.0
    }

    pub fn phase_us(&self, pred: impl Fn(&Phase) -> bool) -> u64 {
        self.phases
            .iter()
            .filter(|p| pred(&p.phase))
            .map(|p| p.duration_us())
            .sum()
    }

    pub fn tested(&self) -> usize {
        self.phases
            .iter()
            .filter(|p| p.phase != Phase::PowerMeasurement)
            .map(|p| p.tested)
            .sum()
    }

    /// Appends `other`, shifted to start where this timeline ends.
    pub fn append(&mut self, other: &SimTimeline) {
        let offset = self.total_delay_us;
        let seq0 = self.events.len() as u64;
        let cycle0 = self
            .events
            .iter()
            .filter(|e| matches!(e.kind, EventKind::CycleStart { .. }))
            .count();
        for e in &other.events {
            let mut e = e.clone();
            e.t_us += offset;
            e.seq += seq0;
            if let EventKind::CycleStart { cycle } = &mut e.kind {
                *cycle += cycle0;
            }
            self.events.push(e);
        }
        for p in &other.phases {
            let mut p = p.clone();
            p.start_us += offset;
            p.end_us += offset;
            self.phases.push(p);
        }
        self.total_delay_us += other.total_delay_us;
    }
}

/// Lays slots out over CSAT cycles and charges backhaul feedback.
pub struct TimelineBuilder<'a> {
    dc: &'a DutyCycleConfig,
    backhaul: &'a BackhaulConfig,
    offsets: Vec<u64>,
    now: u64,
    cycle: usize,
    out: SimTimeline,
}

impl<'a> TimelineBuilder<'a> {
    pub fn new(dc: &'a DutyCycleConfig, backhaul: &'a BackhaulConfig, sim: &SimConfig) -> Self {
        Self {
            dc,
            backhaul,
            offsets: slot_offsets(dc, sim),
            now: 0,
            cycle: 0,
            out: SimTimeline::default(),
        }
    }

    fn push(&mut self, t_us: u64, kind: EventKind) {
        let seq = self.out.events.len() as u64;
        self.out.events.push(Event { t_us, seq, kind });
    }

    /// Transmits `slots` in order, at most `cap` per cycle, then optionally sends
    /// the phase's feedback over the backhaul. The next phase begins once the
    /// feedback has arrived.
    pub fn phase(&mut self, phase: Phase, slots: Vec<SlotLabel>, cap: usize, feedback: bool) {
        let per_cycle = cap.min(self.offsets.len()).max(1);
        let start = self.now;
        self.push(start, EventKind::PhaseStart { phase });
        let tested = slots.len();
        let mut cycles = 0;
        for chunk in slots.chunks(per_cycle) {
            let cycle_start = self.now;
            self.push(cycle_start, EventKind::CycleStart { cycle: self.cycle });
            for (slot, off) in chunk.iter().zip(&self.offsets.clone()) {
                self.push(
                    cycle_start + off,
                    EventKind::TestSlot {
                        phase,
                        slot: slot.clone(),
                    },
                );
            }
            self.cycle += 1;
            cycles += 1;
            self.now += self.dc.t_csat_us();
        }
        let mut feedback_us = 0;
        if feedback {
            feedback_us = self.backhaul.delay_us();
            self.push(self.now, EventKind::FeedbackSent { phase });
            self.now += feedback_us;
            self.push(self.now, EventKind::FeedbackReceived { phase });
        }
        self.out.phases.push(PhaseSummary {
            phase,
            start_us: start,
            end_us: self.now,
            tested,
            per_cycle,
            cycles,
            feedback_us,
        });
        self.out.total_delay_us = self.now;
    }

    pub fn finish(self) -> SimTimeline {
        self.out
    }
}
