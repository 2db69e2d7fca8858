use serde::{Deserialize, Serialize};

use super::tree::{NodeId, NullConfig, SearchTree};
use crate::beamforming::ArrayGeometry;
use crate::channel::InrReport;
use crate::error::{Error, Result};

/// Measures the INR a WiFi node sees while a configuration is applied.
pub trait Evaluator {
    fn evaluate(&mut self, user: usize, config: &NullConfig) -> Result<InrReport>;
}

impl<F> Evaluator for F
where
    F: FnMut(usize, &NullConfig) -> Result<InrReport>,
{
    fn evaluate(&mut self, user: usize, config: &NullConfig) -> Result<InrReport> {
        self(user, config)
    }
}

/// One tested configuration in visit order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Visit {
    pub user: usize,
    pub node: NodeId,
    pub level: usize,
    pub null_angles: Vec<f64>,
    pub inr: f64,
}

/// Feedback-driven walk down a [`SearchTree`].
#[derive(Debug, Clone)]
pub struct SearchState {
    level: usize,
    frontier: Vec<usize>,
    round: Vec<Option<InrReport>>,
    tested: Vec<(usize, InrReport)>,
    best: Option<usize>,
    terminated: bool,
}

impl SearchState {
    pub fn start(tree: &SearchTree) -> Self {
        let frontier = tree.children(None).to_vec();
        Self {
            level: 1,
            round: vec![None; frontier.len()],
            frontier,
            tested: Vec::new(),
            best: None,
            terminated: false,
        }
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn frontier(&self) -> &[usize] {
        &self.frontier
    }

    pub fn tested(&self) -> &[(usize, InrReport)] {
        &self.tested
    }

    pub fn is_terminated(&self) -> bool {
        self.terminated
    }

    /// Tree node and report of the lowest INR seen so far, over every level.
    pub fn best(&self) -> Option<(usize, &InrReport)> {
        self.best.map(|i| (self.tested[i].0, &self.tested[i].1))
    }

    /// Stores the measurement for frontier position `pos`.
    pub fn record(&mut self, pos: usize, report: InrReport) -> Result<()> {
        if self.terminated {
            return Err(Error::SearchTerminated);
        }
        let node = *self.frontier.get(pos).ok_or(Error::IndexOutOfRange {
            what: "frontier",
            index: pos,
            len: self.frontier.len(),
        })?;
        let improves = match self.best {
            Some(b) => report.aggregate < self.tested[b].1.aggregate,
            None => true,
        };
        if improves {
            self.best = Some(self.tested.len());
        }
        self.round[pos] = Some(report.clone());
        self.tested.push((node, report));
        Ok(())
    }

    /// Frontier position with the lowest INR this round, lowest position on ties.
    pub fn round_argmin(&self) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for (pos, r) in self.round.iter().enumerate() {
            if let Some(r) = r {
                if best.is_none_or(|(_, v)| r.aggregate < v) {
                    best = Some((pos, r.aggregate));
                }
            }
        }
        best.map(|(p, _)| p)
    }

    /// Descends into the frontier node at position `feedback`. Reporting a leaf
    /// ends the search.
    pub fn advance(&mut self, tree: &SearchTree, feedback: usize) -> Result<()> {
        if self.terminated {
            return Err(Error::SearchTerminated);
        }
        let node = match (self.frontier.get(feedback), self.round.get(feedback)) {
            (Some(&n), Some(Some(_))) => n,
            _ => {
                let label = self
                    .frontier
                    .get(feedback)
                    .map(|&n| tree.config(n).id.to_string())
                    .unwrap_or_else(|| format!("position {feedback}"));
                return Err(Error::UntestedFeedback(label));
            }
        };
        if tree.is_leaf(node) {
            self.terminated = true;
            self.frontier.clear();
            self.round.clear();
        } else {
            self.frontier = tree.children(Some(node)).to_vec();
            self.round = vec![None; self.frontier.len()];
            self.level += 1;
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SearchOutcome {
    pub best: NullConfig,
    pub best_inr: f64,
    /// Configurations tested per level (one entry for a linear search).
    pub tested_per_level: Vec<usize>,
    /// Node reported as the per-level winner, root to leaf.
    pub chosen: Vec<NodeId>,
    pub visits: Vec<Visit>,
}

impl SearchOutcome {
    pub fn tested_total(&self) -> usize {
        self.tested_per_level.iter().sum()
    }
}

/// Runs the single-user tree search to termination.
pub fn tree_search(tree: &SearchTree, user: usize, eval: &mut dyn Evaluator) -> Result<SearchOutcome> {
    let mut state = SearchState::start(tree);
    let mut visits = Vec::new();
    let mut tested_per_level = Vec::new();
    let mut chosen = Vec::new();
    while !state.is_terminated() {
        let frontier = state.frontier().to_vec();
        for (pos, &node) in frontier.iter().enumerate() {
            let cfg = tree.config(node);
            let mut report = eval.evaluate(user, cfg)?;
            report.config_id = Some(cfg.id.clone());
            visits.push(Visit {
                user,
                node: cfg.id.clone(),
                level: state.level(),
                null_angles: cfg.null_angles.clone(),
                inr: report.aggregate,
            });
            state.record(pos, report)?;
        }
        tested_per_level.push(frontier.len());
        let pick = state.round_argmin().expect("frontier is never empty");
        chosen.push(tree.config(frontier[pick]).id.clone());
        state.advance(tree, pick)?;
    }
    let (node, report) = state.best().expect("at least one level tested");
    Ok(SearchOutcome {
        best: tree.config(node).clone(),
        best_inr: report.aggregate,
        tested_per_level,
        chosen,
        visits,
    })
}

pub const DEFAULT_LINEAR_SPAN_DEG: f64 = 82.0;
pub const DEFAULT_LINEAR_STEP_DEG: f64 = 1.0;

/// Integer-degree grid over [-82°, 82°]: 165 angles.
pub fn default_linear_grid() -> Vec<f64> {
    let n = (2.0 * DEFAULT_LINEAR_SPAN_DEG / DEFAULT_LINEAR_STEP_DEG).round() as usize + 1;
    (0..n)
        .map(|i| -DEFAULT_LINEAR_SPAN_DEG + DEFAULT_LINEAR_STEP_DEG * i as f64)
        .collect()
}

/// Tests a single-null configuration at every grid angle and keeps the lowest INR,
/// preferring the smaller angle on ties.
pub fn linear_search(
    geom: &ArrayGeometry,
    grid: &[f64],
    beam_angle: f64,
    user: usize,
    eval: &mut dyn Evaluator,
) -> Result<SearchOutcome> {
    if grid.is_empty() {
        return Err(Error::validation("empty_linear_grid", "linear search grid is empty"));
    }
    let mut best: Option<(NullConfig, f64)> = None;
    let mut visits = Vec::with_capacity(grid.len());
    for (i, &angle) in grid.iter().enumerate() {
        let cfg = NullConfig::new(NodeId::Grid(i), geom, beam_angle, vec![angle], (angle, angle))?;
        let report = eval.evaluate(user, &cfg)?;
        visits.push(Visit {
            user,
            node: cfg.id.clone(),
            level: 1,
            null_angles: vec![angle],
            inr: report.aggregate,
        });
        let replace = match &best {
            None => true,
            Some((b, v)) => report.aggregate < *v || (report.aggregate == *v && angle < b.null_angles[0]),
        };
        if replace {
            best = Some((cfg, report.aggregate));
        }
    }
    let (best, best_inr) = best.expect("grid is non-empty");
    Ok(SearchOutcome {
        chosen: vec![best.id.clone()],
        best,
        best_inr,
        tested_per_level: vec![grid.len()],
        visits,
    })
}
