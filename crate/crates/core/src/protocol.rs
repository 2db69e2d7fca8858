//! End-to-end run of one scenario: channel draw, baseline measurement, optional
//! per-antenna power measurement, null search under the duty cycle and a final
//! measurement with the selected configuration applied.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::beamforming::{finalize_weights, lcmv_weights, PathPowerReport, WeightVector};
use crate::channel::{
    channel_response, from_db, path_power_report, rx_power, sampled_inr, to_db, ChannelModel, ChannelResponse,
    InrReport,
};
use crate::coexsim::{
    linear_timeline, simulate_linear_search, simulate_multi_user, simulate_sequential, simulate_tree_search, Phase,
    SimTimeline,
};
use crate::error::Result;
use crate::nullsearch::{merge_nulls, NullConfig, SearchTree, Visit};
use crate::results::{RunRecord, UserResult, VisitRow};
use crate::scenario::{random_user_angle, Mode, NoiseSetting, Resolved, Scenario};

/// One WiFi node's channel, with the noise floor already fixed.
#[derive(Debug, Clone)]
pub struct UserChannel {
    pub angle_deg: f64,
    pub model: ChannelModel,
    pub response: ChannelResponse,
}

/// Everything a run needs, drawn from the scenario seed.
pub struct Context {
    pub scenario: Scenario,
    pub resolved: Resolved,
    pub users: Vec<UserChannel>,
    rng: ChaCha8Rng,
}

/// Stream of the measurement noise generator; channel draws use stream 0.
const MEASUREMENT_STREAM: u64 = 1;

impl Context {
    pub fn new(scenario: &Scenario) -> Result<Self> {
        let resolved = scenario.resolve()?;
        let mut draw = ChaCha8Rng::seed_from_u64(scenario.seed);
        let ue = scenario.search.ue_angle_deg;
        let baseline = lcmv_weights(&resolved.geometry, ue, &[])?;
        let baseline = finalize_weights(&baseline, None, &resolved.map, resolved.lte.n_rrb())?;
        let mut users = Vec::with_capacity(scenario.users.len());
        for spec in &scenario.users {
            let angle = match spec.angle_deg {
                Some(a) => a,
                None => random_user_angle(ue, &mut draw),
            };
            // unit noise is a placeholder until the floor is calibrated below
            let model = match &spec.paths {
                Some(paths) => {
                    let paths = paths.iter().map(|p| p.to_path()).collect::<Result<Vec<_>>>()?;
                    ChannelModel::geometric(paths, 1.0)?
                }
                None => scenario.channel.preset.model(angle, 1.0, &mut draw)?,
            };
            let response = channel_response(&model, &resolved.geometry, &resolved.wifi);
            let noise = match resolved.noise {
                NoiseSetting::Fixed(n) => n,
                NoiseSetting::BaselineInrDb(db) => {
                    let p = rx_power(&response, &baseline, &resolved.map, resolved.bs.tx_power)?;
                    let mean = p.iter().sum::<f64>() / p.len() as f64;
                    mean / (from_db(db) - 1.0)
                }
            };
            let model = model.with_noise_power(noise)?;
            users.push(UserChannel {
                angle_deg: angle,
                model,
                response,
            });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(scenario.seed);
        rng.set_stream(MEASUREMENT_STREAM);
        Ok(Self {
            scenario: scenario.clone(),
            resolved,
            users,
            rng,
        })
    }

    /// Averaged INR at `user` while `weights` are applied.
    pub fn measure(
        &mut self,
        user: usize,
        weights: &WeightVector,
        report: Option<&PathPowerReport>,
    ) -> Result<InrReport> {
        let r = &self.resolved;
        let w = finalize_weights(weights, report, &r.map, r.lte.n_rrb())?;
        let u = &self.users[user];
        sampled_inr(
            &u.response,
            &w,
            &r.map,
            r.bs.tx_power,
            &u.model,
            &r.sim.measurement(),
            &mut self.rng,
        )
    }

    pub fn baseline_weights(&self) -> Result<WeightVector> {
        lcmv_weights(&self.resolved.geometry, self.scenario.search.ue_angle_deg, &[])
    }

    pub fn tree(&self) -> Result<SearchTree> {
        self.resolved.tree(&self.scenario)
    }
}

struct Finished {
    timeline: SimTimeline,
    visits: Vec<Visit>,
    /// Weights applied at the end and whether power correction is in effect.
    applied: WeightVector,
    report: Option<PathPowerReport>,
    nulls_used: usize,
    per_user_nulls: Vec<usize>,
}

fn search(ctx: &mut Context, mode: Mode) -> Result<Finished> {
    let n_users = ctx.users.len();
    let ue = ctx.scenario.search.ue_angle_deg;
    let geom = ctx.resolved.geometry;
    let dc = ctx.resolved.duty_cycle;
    let bh = ctx.resolved.backhaul;
    let sim = ctx.resolved.sim;
    match mode {
        Mode::Tree => {
            let tree = ctx.tree()?;
            let report = if ctx.scenario.search.power_correction {
                Some(path_power_report(&ctx.users[0].response)?)
            } else {
                None
            };
            let power = report.as_ref().map(|_| geom.k_antennas());
            let rep = report.clone();
            let mut eval = |u: usize, c: &NullConfig| ctx.measure(u, &c.weights, rep.as_ref());
            let (timeline, outcome) = simulate_tree_search(&tree, &dc, &bh, &sim, power, &mut eval)?;
            Ok(Finished {
                timeline,
                visits: outcome.visits,
                nulls_used: outcome.best.null_angles.len(),
                per_user_nulls: vec![outcome.best.null_angles.len()],
                applied: outcome.best.weights,
                report,
            })
        }
        Mode::Linear => {
            let grid = ctx.resolved.linear_grid.clone();
            let mut eval = |u: usize, c: &NullConfig| ctx.measure(u, &c.weights, None);
            let (timeline, outcome) = simulate_linear_search(&geom, &grid, ue, &dc, &bh, &sim, &mut eval)?;
            Ok(Finished {
                timeline,
                visits: outcome.visits,
                nulls_used: 1,
                per_user_nulls: vec![1],
                applied: outcome.best.weights,
                report: None,
            })
        }
        Mode::Multiuser => {
            let tree = ctx.tree()?;
            let mut eval = |u: usize, c: &NullConfig| ctx.measure(u, &c.weights, None);
            let (timeline, plan) = simulate_multi_user(n_users, &tree, &dc, &bh, &sim, &mut eval)?;
            Ok(Finished {
                timeline,
                visits: plan.visits,
                nulls_used: plan.joint_nulls.len(),
                per_user_nulls: plan.per_user_best.iter().map(|c| c.null_angles.len()).collect(),
                applied: lcmv_weights(&geom, ue, &plan.joint_nulls)?,
                report: None,
            })
        }
        Mode::Sequential => {
            let tree = ctx.tree()?;
            let mut eval = |u: usize, c: &NullConfig| ctx.measure(u, &c.weights, None);
            let (timeline, outcomes) = simulate_sequential(n_users, &tree, &dc, &bh, &sim, &mut eval)?;
            let best: Vec<Vec<f64>> = outcomes.iter().map(|o| o.best.null_angles.clone()).collect();
            let leaves: Vec<Vec<f64>> = outcomes
                .iter()
                .map(|o| {
                    let leaf = tree.find(o.chosen.last().expect("non-empty")).expect("tree node");
                    tree.config(leaf).null_angles.clone()
                })
                .collect();
            let joint = merge_nulls(&best, &leaves, tree.k_antennas() - 2)?;
            Ok(Finished {
                timeline,
                visits: outcomes.into_iter().flat_map(|o| o.visits).collect(),
                nulls_used: joint.len(),
                per_user_nulls: best.iter().map(Vec::len).collect(),
                applied: lcmv_weights(&geom, ue, &joint)?,
                report: None,
            })
        }
    }
}

/// Runs `scenario` once in its own mode with its own seed.
pub fn run_full_protocol(scenario: &Scenario) -> Result<RunRecord> {
    run_protocol(scenario, scenario.mode, 0)
}

pub fn run_protocol(scenario: &Scenario, mode: Mode, run: usize) -> Result<RunRecord> {
    let (record, _) = run_protocol_with_timeline(scenario, mode, run)?;
    Ok(record)
}

pub fn run_protocol_with_timeline(scenario: &Scenario, mode: Mode, run: usize) -> Result<(RunRecord, SimTimeline)> {
    let mut ctx = Context::new(scenario)?;
    let n_users = ctx.users.len();
    let baseline = ctx.baseline_weights()?;
    let base: Vec<f64> = (0..n_users)
        .map(|u| ctx.measure(u, &baseline, None).map(|r| to_db(r.aggregate)))
        .collect::<Result<_>>()?;

    let finished = search(&mut ctx, mode)?;

    let mut users = Vec::with_capacity(n_users);
    for (u, &base_db) in base.iter().enumerate() {
        let final_db = to_db(ctx.measure(u, &finished.applied, finished.report.as_ref())?.aggregate);
        users.push(UserResult {
            user: u,
            angle_deg: ctx.users[u].angle_deg,
            baseline_inr_db: base_db,
            final_inr_db: final_db,
            delta_inr_db: base_db - final_db,
            nulls_used: *finished.per_user_nulls.get(u).unwrap_or(&finished.nulls_used),
        });
    }
    let mean = |f: fn(&UserResult) -> f64| users.iter().map(f).sum::<f64>() / users.len() as f64;
    let timeline = finished.timeline;
    let power_us = timeline.phase_us(|p| *p == Phase::PowerMeasurement);
    let r = &ctx.resolved;
    let linear = linear_timeline(r.linear_grid.len(), &r.duty_cycle, &r.backhaul, &r.sim)?;
    let record = RunRecord {
        scenario_hash: scenario.hash(),
        run,
        seed: scenario.seed,
        mode,
        k_antennas: r.geometry.k_antennas(),
        t_csat_ms: r.duty_cycle.t_csat_ms(),
        duty: r.duty_cycle.duty(),
        backhaul_ms: r.backhaul.delay_ms(),
        power_correction: finished.report.is_some(),
        baseline_inr_db: mean(|u| u.baseline_inr_db),
        final_inr_db: mean(|u| u.final_inr_db),
        delta_inr_db: mean(|u| u.delta_inr_db),
        nulls_used: finished.nulls_used,
        power_phase_ms: power_us as f64 / 1000.0,
        search_phase_ms: (timeline.total_delay_us - power_us) as f64 / 1000.0,
        total_delay_ms: timeline.total_delay_ms(),
        linear_delay_ms: linear.total_delay_ms(),
        tested_configs: timeline.tested(),
        users,
        visits: finished
            .visits
            .iter()
            .map(|v| VisitRow {
                user: v.user,
                level: v.level,
                node: v.node.to_string(),
                null_angles: v.null_angles.clone(),
                inr_db: to_db(v.inr),
            })
            .collect(),
    };
    Ok((record, timeline))
}
