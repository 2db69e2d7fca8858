use super::search::{tree_search, Evaluator, SearchState, Visit};
use super::tree::{NullConfig, SearchTree};
use crate::error::{Error, Result};

/// Outcome of a parallel search on behalf of several WiFi nodes.
#[derive(Debug, Clone)]
pub struct MultiUserPlan {
    /// Best configuration found for each user.
    pub per_user_best: Vec<NullConfig>,
    pub per_user_best_inr: Vec<f64>,
    /// Distinct nodes tested per level.
    pub tested_per_level: Vec<usize>,
    pub visits: Vec<Visit>,
    /// Union of the per-user null angles, in user order.
    pub joint_nulls: Vec<f64>,
}

impl MultiUserPlan {
    pub fn tested_total(&self) -> usize {
        self.tested_per_level.iter().sum()
    }
}

fn push_unique(into: &mut Vec<f64>, angles: &[f64]) {
    for &a in angles {
        if !into.contains(&a) {
            into.push(a);
        }
    }
}

/// Merges per-user null sets into one configuration with at most `limit` nulls.
/// Users are served in order. A user keeps its best configuration only if the
/// leaf nulls of every later user still fit; otherwise it falls back to the single
/// null of its final leaf. Users that still do not fit are reported in a
/// [`Error::DofExhausted`].
pub fn merge_nulls(best: &[Vec<f64>], leaves: &[Vec<f64>], limit: usize) -> Result<Vec<f64>> {
    let mut joint: Vec<f64> = Vec::new();
    let mut accommodated = Vec::new();
    let mut rejected = Vec::new();
    for (u, (b, l)) in best.iter().zip(leaves).enumerate() {
        let with = |set: &[f64]| {
            let mut trial = joint.clone();
            push_unique(&mut trial, set);
            trial
        };
        let reserved = |trial: &[f64]| {
            let mut later: Vec<f64> = Vec::new();
            for leaf in &leaves[u + 1..] {
                push_unique(&mut later, leaf);
            }
            later.iter().filter(|a| !trial.contains(a)).count()
        };
        let keep_best = with(b);
        let fallback = with(l);
        if keep_best.len() + reserved(&keep_best) <= limit {
            joint = keep_best;
            accommodated.push(u);
        } else if fallback.len() <= limit {
            joint = fallback;
            accommodated.push(u);
        } else {
            rejected.push(u);
        }
    }
    if rejected.is_empty() {
        Ok(joint)
    } else {
        Err(Error::DofExhausted {
            limit,
            accommodated,
            rejected,
        })
    }
}

/// Expands every user's winning subtree level by level. A node on several users'
/// frontiers is transmitted once and measured by each of those users.
pub fn multi_user_search(tree: &SearchTree, users: usize, eval: &mut dyn Evaluator) -> Result<MultiUserPlan> {
    if users == 0 {
        return Err(Error::validation(
            "no_users",
            "multi-user search needs at least one user",
        ));
    }
    let limit = tree.k_antennas() - 2;
    if users == 1 {
        let out = tree_search(tree, 0, eval)?;
        let leaf_node = tree.find(out.chosen.last().expect("non-empty")).expect("tree node");
        let leaf = tree.config(leaf_node).null_angles.clone();
        let joint_nulls = merge_nulls(std::slice::from_ref(&out.best.null_angles), &[leaf], limit)?;
        return Ok(MultiUserPlan {
            per_user_best: vec![out.best],
            per_user_best_inr: vec![out.best_inr],
            tested_per_level: out.tested_per_level,
            visits: out.visits,
            joint_nulls,
        });
    }

    let mut states: Vec<SearchState> = (0..users).map(|_| SearchState::start(tree)).collect();
    let mut visits = Vec::new();
    let mut tested_per_level = Vec::new();
    let mut leaves: Vec<Vec<f64>> = vec![Vec::new(); users];
    while states.iter().any(|s| !s.is_terminated()) {
        let mut union: Vec<usize> = states.iter().flat_map(|s| s.frontier().iter().copied()).collect();
        union.sort_unstable();
        union.dedup();
        for &node in &union {
            let cfg = tree.config(node);
            for (u, s) in states.iter_mut().enumerate() {
                let Some(pos) = s.frontier().iter().position(|&n| n == node) else {
                    continue;
                };
                let mut report = eval.evaluate(u, cfg)?;
                report.config_id = Some(cfg.id.clone());
                visits.push(Visit {
                    user: u,
                    node: cfg.id.clone(),
                    level: s.level(),
                    null_angles: cfg.null_angles.clone(),
                    inr: report.aggregate,
                });
                s.record(pos, report)?;
            }
        }
        tested_per_level.push(union.len());
        for (u, s) in states.iter_mut().enumerate() {
            if s.is_terminated() {
                continue;
            }
            let pick = s.round_argmin().expect("every frontier node was tested");
            let node = s.frontier()[pick];
            if tree.is_leaf(node) {
                leaves[u] = tree.config(node).null_angles.clone();
            }
            s.advance(tree, pick)?;
        }
    }

    let mut per_user_best = Vec::with_capacity(users);
    let mut per_user_best_inr = Vec::with_capacity(users);
    for s in &states {
        let (node, r) = s.best().expect("tested");
        per_user_best.push(tree.config(node).clone());
        per_user_best_inr.push(r.aggregate);
    }
    let best_sets: Vec<Vec<f64>> = per_user_best.iter().map(|c| c.null_angles.clone()).collect();
    let joint_nulls = merge_nulls(&best_sets, &leaves, limit)?;
    Ok(MultiUserPlan {
        per_user_best,
        per_user_best_inr,
        tested_per_level,
        visits,
        joint_nulls,
    })
}
