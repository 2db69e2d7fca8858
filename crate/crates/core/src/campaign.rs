//! Batches of protocol runs. Runs are independent and execute in parallel; the
//! returned records are always in run order.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coexsim::SimTimeline;
use crate::error::{Error, Result};
use crate::protocol::{run_protocol, run_protocol_with_timeline};
use crate::results::RunRecord;
use crate::scenario::{Mode, Scenario};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CampaignMode {
    Tree,
    Linear,
    Multiuser,
    Sequential,
    /// Scenario mode over the `[sweep]` grid of backhaul delay and duty.
    Sweep,
}

impl CampaignMode {
    pub fn search_mode(&self, scenario: &Scenario) -> Mode {
        match self {
            CampaignMode::Tree => Mode::Tree,
            CampaignMode::Linear => Mode::Linear,
            CampaignMode::Multiuser => Mode::Multiuser,
            CampaignMode::Sequential => Mode::Sequential,
            CampaignMode::Sweep => scenario.mode,
        }
    }
}

impl From<Mode> for CampaignMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Tree => CampaignMode::Tree,
            Mode::Linear => CampaignMode::Linear,
            Mode::Multiuser => CampaignMode::Multiuser,
            Mode::Sequential => CampaignMode::Sequential,
        }
    }
}

impl std::str::FromStr for CampaignMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "sweep" {
            return Ok(CampaignMode::Sweep);
        }
        s.parse::<Mode>()
            .map(CampaignMode::from)
            .map_err(|_| Error::validation("unknown_mode", format!("unknown campaign mode {s:?}")))
    }
}

/// Scenarios for every run of a campaign, in output order. Repeat `r` uses seed
/// `seed + r`; a sweep repeats every grid point, backhaul delay varying fastest.
pub fn campaign_runs(scenario: &Scenario, repeats: usize, mode: CampaignMode) -> Result<Vec<(Scenario, Mode)>> {
    if repeats == 0 {
        return Err(Error::validation("zero_repeats", "repeats must be at least 1"));
    }
    scenario.validate()?;
    let search = mode.search_mode(scenario);
    let mut out = Vec::new();
    for r in 0..repeats {
        let s = scenario.with_seed(scenario.seed.wrapping_add(r as u64));
        if mode == CampaignMode::Sweep {
            for &duty in &scenario.sweep.duty {
                for &delay in &scenario.sweep.backhaul_ms {
                    out.push((s.with_timing(duty, delay), search));
                }
            }
        } else {
            out.push((s, search));
        }
    }
    for (s, _) in &out {
        s.validate()?;
    }
    Ok(out)
}

pub fn run_campaign(scenario: &Scenario, repeats: usize, mode: CampaignMode) -> Result<Vec<RunRecord>> {
    let runs = campaign_runs(scenario, repeats, mode)?;
    runs.par_iter()
        .enumerate()
        .map(|(i, (s, m))| run_protocol(s, *m, i))
        .collect()
}

/// Like [`run_campaign`], also returning each run's event timeline.
pub fn run_campaign_traced(
    scenario: &Scenario,
    repeats: usize,
    mode: CampaignMode,
) -> Result<Vec<(RunRecord, SimTimeline)>> {
    let runs = campaign_runs(scenario, repeats, mode)?;
    runs.par_iter()
        .enumerate()
        .map(|(i, (s, m))| run_protocol_with_timeline(s, *m, i))
        .collect()
}
