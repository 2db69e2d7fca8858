use super::config::{configs_per_cycle, slots_per_cycle, BackhaulConfig, DutyCycleConfig, SimConfig};
use super::timeline::{Phase, SimTimeline, SlotLabel, TimelineBuilder};
use crate::beamforming::ArrayGeometry;
use crate::error::Result;
use crate::nullsearch::{
    linear_search, multi_user_search, tree_search, Evaluator, MultiUserPlan, SearchOutcome, SearchTree, Visit,
};

fn antenna_slots(k: usize) -> Vec<SlotLabel> {
    (0..k).map(SlotLabel::Antenna).collect()
}

/// Distinct configurations per level, in first-transmission order.
fn level_slots(visits: &[Visit], levels: usize) -> Vec<Vec<SlotLabel>> {
    let mut out = vec![Vec::new(); levels];
    for v in visits {
        let label = SlotLabel::Config(v.node.clone());
        let level = &mut out[v.level - 1];
        if !level.contains(&label) {
            level.push(label);
        }
    }
    out
}

/// Per-antenna transmissions, packed into whole on phases, followed by one report.
pub fn simulate_power_measurement(
    k: usize,
    dc: &DutyCycleConfig,
    backhaul: &BackhaulConfig,
    sim: &SimConfig,
) -> Result<SimTimeline> {
    let slots = slots_per_cycle(dc, sim)?;
    let mut b = TimelineBuilder::new(dc, backhaul, sim);
    b.phase(Phase::PowerMeasurement, antenna_slots(k), slots, true);
    Ok(b.finish())
}

/// Tree search under the duty cycle. With `power_antennas` set, a per-antenna power
/// measurement runs first and its report is delivered with the level-1 feedback.
pub fn simulate_tree_search(
    tree: &SearchTree,
    dc: &DutyCycleConfig,
    backhaul: &BackhaulConfig,
    sim: &SimConfig,
    power_antennas: Option<usize>,
    eval: &mut dyn Evaluator,
) -> Result<(SimTimeline, SearchOutcome)> {
    let slots = slots_per_cycle(dc, sim)?;
    let cap = configs_per_cycle(dc, sim, tree.fanout())?;
    let outcome = tree_search(tree, 0, eval)?;
    let mut b = TimelineBuilder::new(dc, backhaul, sim);
    if let Some(k) = power_antennas {
        b.phase(Phase::PowerMeasurement, antenna_slots(k), slots, false);
    }
    for (l, labels) in level_slots(&outcome.visits, outcome.tested_per_level.len())
        .into_iter()
        .enumerate()
    {
        b.phase(Phase::Level(l + 1), labels, cap, true);
    }
    Ok((b.finish(), outcome))
}

/// Timing of a linear scan over `n` configurations with a single report at the end.
/// The scan has no fanout, so every usable slot of a cycle is filled.
pub fn linear_timeline(
    n: usize,
    dc: &DutyCycleConfig,
    backhaul: &BackhaulConfig,
    sim: &SimConfig,
) -> Result<SimTimeline> {
    let slots = slots_per_cycle(dc, sim)?;
    let mut b = TimelineBuilder::new(dc, backhaul, sim);
    let labels = (0..n)
        .map(|i| SlotLabel::Config(crate::nullsearch::NodeId::Grid(i)))
        .collect();
    b.phase(Phase::Linear, labels, slots, true);
    Ok(b.finish())
}

pub fn simulate_linear_search(
    geom: &ArrayGeometry,
    grid: &[f64],
    beam_angle: f64,
    dc: &DutyCycleConfig,
    backhaul: &BackhaulConfig,
    sim: &SimConfig,
    eval: &mut dyn Evaluator,
) -> Result<(SimTimeline, SearchOutcome)> {
    slots_per_cycle(dc, sim)?;
    let outcome = linear_search(geom, grid, beam_angle, 0, eval)?;
    let timeline = linear_timeline(grid.len(), dc, backhaul, sim)?;
    Ok((timeline, outcome))
}

/// Parallel search for several WiFi nodes. Each level transmits the union of the
/// users' frontiers and ends with one aggregated report. A single user falls back
/// to the fanout-capped single-user schedule.
pub fn simulate_multi_user(
    users: usize,
    tree: &SearchTree,
    dc: &DutyCycleConfig,
    backhaul: &BackhaulConfig,
    sim: &SimConfig,
    eval: &mut dyn Evaluator,
) -> Result<(SimTimeline, MultiUserPlan)> {
    let slots = slots_per_cycle(dc, sim)?;
    let cap = if users == 1 {
        configs_per_cycle(dc, sim, tree.fanout())?
    } else {
        slots
    };
    let plan = multi_user_search(tree, users, eval)?;
    let mut b = TimelineBuilder::new(dc, backhaul, sim);
    for (l, labels) in level_slots(&plan.visits, plan.tested_per_level.len())
        .into_iter()
        .enumerate()
    {
        b.phase(Phase::Level(l + 1), labels, cap, true);
    }
    Ok((b.finish(), plan))
}

/// Independent single-user searches run back to back.
pub fn simulate_sequential(
    users: usize,
    tree: &SearchTree,
    dc: &DutyCycleConfig,
    backhaul: &BackhaulConfig,
    sim: &SimConfig,
    eval: &mut dyn Evaluator,
) -> Result<(SimTimeline, Vec<SearchOutcome>)> {
    let cap = configs_per_cycle(dc, sim, tree.fanout())?;
    let mut total = SimTimeline::default();
    let mut outcomes = Vec::with_capacity(users);
    for u in 0..users {
        let outcome = tree_search(tree, u, eval)?;
        let mut b = TimelineBuilder::new(dc, backhaul, sim);
        for (l, labels) in level_slots(&outcome.visits, outcome.tested_per_level.len())
            .into_iter()
            .enumerate()
        {
            b.phase(Phase::Level(l + 1), labels, cap, true);
        }
        total.append(&b.finish());
        outcomes.push(outcome);
    }
    Ok((total, outcomes))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::InrReport;
    use crate::coexsim::timeline::EventKind;
    use crate::nullsearch::{build_tree, default_nulls_per_level, NullConfig};
    use crate::Error;

    fn dc(duty: f64) -> DutyCycleConfig {
        DutyCycleConfig::new(40, duty, 2).unwrap()
    }

    fn bh(ms: f64) -> BackhaulConfig {
        BackhaulConfig::new(ms).unwrap()
    }

    fn tree(k: usize) -> SearchTree {
        let g = ArrayGeometry::with_antennas(k).unwrap();
        build_tree(&g, 3, 4, &default_nulls_per_level(k, 4).unwrap(), -40.5).unwrap()
    }

    fn eval_for(rays: Vec<f64>) -> impl FnMut(usize, &NullConfig) -> Result<InrReport> {
        move |u, c: &NullConfig| {
            let d = c
                .null_angles
                .iter()
                .map(|a| (a - rays[u]).abs())
                .fold(f64::MAX, f64::min);
            let v = 1.0 + d + 10.0 * c.null_angles.len() as f64;
            Ok(InrReport {
                per_subcarrier: vec![v],
                aggregate: v,
                config_id: None,
            })
        }
    }

    #[test]
    fn power_phase_packing() {
        let sim = SimConfig::default();
        let t = simulate_power_measurement(4, &dc(0.2), &bh(5.0), &sim).unwrap();
        assert_eq!(t.total_delay_us, 40_000 + 5_000);
        let t = simulate_power_measurement(4, &dc(0.05), &bh(5.0), &sim).unwrap();
        assert_eq!(t.total_delay_us, 4 * 40_000 + 5_000);
        let t = simulate_power_measurement(1, &dc(0.05), &bh(0.0), &sim).unwrap();
        assert_eq!(t.total_delay_us, 40_000);
    }

    #[test]
    fn tree_delays() {
        let sim = SimConfig::default();
        let t = tree(8);
        let run = |duty, delay| {
            simulate_tree_search(&t, &dc(duty), &bh(delay), &sim, Some(8), &mut eval_for(vec![1.0]))
                .unwrap()
                .0
                .total_delay_ms()
        };
        assert_eq!(run(0.2, 5.0), 260.0);
        assert_eq!(run(0.2, 105.0), 660.0);
        assert_eq!(run(0.05, 105.0), 1220.0);
    }

    #[test]
    fn linear_delays() {
        let sim = SimConfig::default();
        assert_eq!(
            linear_timeline(165, &dc(0.05), &bh(105.0), &sim)
                .unwrap()
                .total_delay_us,
            6_705_000
        );
        assert_eq!(
            linear_timeline(1, &dc(0.05), &bh(7.0), &sim).unwrap().total_delay_us,
            47_000
        );
        // four slots per cycle at 20 %
        assert_eq!(
            linear_timeline(165, &dc(0.2), &bh(0.0), &sim).unwrap().total_delay_us,
            42 * 40_000
        );
    }

    #[test]
    fn single_user_multi_equals_tree() {
        let sim = SimConfig::default();
        let t = tree(8);
        let (a, _) = simulate_tree_search(&t, &dc(0.2), &bh(50.0), &sim, None, &mut eval_for(vec![20.0])).unwrap();
        let (b, _) = simulate_multi_user(1, &t, &dc(0.2), &bh(50.0), &sim, &mut eval_for(vec![20.0])).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn co_located_users_cost_single_delay() {
        let sim = SimConfig::default();
        let t = tree(8);
        for duty in [0.05, 0.2, 1.0] {
            let (one, _) = simulate_multi_user(1, &t, &dc(duty), &bh(50.0), &sim, &mut eval_for(vec![20.0])).unwrap();
            let (four, _) =
                simulate_multi_user(4, &t, &dc(duty), &bh(50.0), &sim, &mut eval_for(vec![20.0; 4])).unwrap();
            assert_eq!(one.total_delay_us, four.total_delay_us);
        }
    }

    #[test]
    fn parallel_beats_sequential() {
        let sim = SimConfig::default();
        let t = tree(8);
        let rays = vec![13.0, 13.5, 16.0, -60.0];
        let (par, _) = simulate_multi_user(4, &t, &dc(0.05), &bh(50.0), &sim, &mut eval_for(rays.clone())).unwrap();
        let (seq, _) = simulate_sequential(4, &t, &dc(0.05), &bh(50.0), &sim, &mut eval_for(rays)).unwrap();
        assert_eq!(seq.total_delay_us, 4 * 680_000);
        assert!(par.total_delay_us < seq.total_delay_us);
    }

    #[test]
    fn events_ordered_and_total_is_last() {
        let sim = SimConfig::default();
        let t = tree(4);
        let (tl, _) = simulate_tree_search(&t, &dc(0.05), &bh(105.0), &sim, Some(4), &mut eval_for(vec![3.0])).unwrap();
        assert!(tl
            .events
            .windows(2)
            .all(|w| (w[0].t_us, w[0].seq) < (w[1].t_us, w[1].seq)));
        assert_eq!(tl.events.last().unwrap().t_us, tl.total_delay_us);
        let slots = tl
            .events
            .iter()
            .filter(|e| matches!(e.kind, EventKind::TestSlot { .. }))
            .count();
        assert_eq!(slots, 4 + 12);
    }

    #[test]
    fn slot_too_long_is_an_error() {
        let sim = SimConfig::new(4.0, 50_000.0, crate::channel::Measurement::default(), 0).unwrap();
        let err = simulate_power_measurement(4, &dc(0.05), &bh(5.0), &sim).unwrap_err();
        assert!(matches!(
            err,
            Error::Validation {
                rule: "test_slot_exceeds_on_phase",
                ..
            }
        ));
    }
}
