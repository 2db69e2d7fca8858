//! CSAT duty-cycle timing: test slots, power measurement, backhaul feedback and
//! end-to-end reconfiguration delay.

mod config;
mod sim;
mod timeline;

pub use config::{
    configs_per_cycle, slot_offsets, slots_per_cycle, BackhaulConfig, DutyCycleConfig, SimConfig, ALLOWED_T_CSAT_MS,
    MIN_PUNCTURE_MS, PUNCTURE_WINDOW_MS, SAMPLE_RATE_RANGE_HZ,
};
pub use sim::{
    linear_timeline, simulate_linear_search, simulate_multi_user, simulate_power_measurement, simulate_sequential,
    simulate_tree_search,
};
pub use timeline::{Event, EventKind, Phase, PhaseSummary, SimTimeline, SlotLabel, TimelineBuilder};
