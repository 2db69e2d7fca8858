use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::fmt;
use std::str::FromStr;

use crate::beamforming::{lcmv_weights, ArrayGeometry, WeightVector};
use crate::error::{Error, Result};

/// Identity of a tested configuration: a path of child indices from the tree root,
/// or a position in a linear-search grid.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NodeId {
    Tree(Vec<usize>),
    Grid(usize),
}

impl NodeId {
    /// Tree depth of the node, starting at 1 for the root's children. Grid entries
    /// count as level 1.
    pub fn level(&self) -> usize {
        match self {
            NodeId::Tree(path) => path.len(),
            NodeId::Grid(_) => 1,
        }
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NodeId::Tree(path) => {
                f.write_str("t:")?;
                for (i, c) in path.iter().enumerate() {
                    if i > 0 {
                        f.write_str(".")?;
                    }
                    write!(f, "{c}")?;
                }
                Ok(())
            }
            NodeId::Grid(i) => write!(f, "g:{i}"),
        }
    }
}

impl FromStr for NodeId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Parse {
            line: None,
            message: format!("invalid node id {s:?}"),
        };
        if let Some(rest) = s.strip_prefix("t:") {
            if rest.is_empty() {
                return Ok(NodeId::Tree(Vec::new()));
            }
            rest.split('.')
                .map(|p| p.parse::<usize>().map_err(|_| bad()))
                .collect::<Result<Vec<_>>>()
                .map(NodeId::Tree)
        } else if let Some(rest) = s.strip_prefix("g:") {
            rest.parse().map(NodeId::Grid).map_err(|_| bad())
        } else {
            Err(bad())
        }
    }
}

impl Serialize for NodeId {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for NodeId {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// One precoding choice: a unit-gain beam toward the UE plus a set of nulls.
#[derive(Debug, Clone, PartialEq)]
pub struct NullConfig {
    pub id: NodeId,
    pub beam_angle: f64,
    pub null_angles: Vec<f64>,
    pub sector: (f64, f64),
    pub weights: WeightVector,
}

impl NullConfig {
    pub fn new(
        id: NodeId,
        geom: &ArrayGeometry,
        beam_angle: f64,
        null_angles: Vec<f64>,
        sector: (f64, f64),
    ) -> Result<Self> {
        let weights = lcmv_weights(geom, beam_angle, &null_angles)?;
        Ok(Self {
            id,
            beam_angle,
            null_angles,
            sector,
            weights,
        })
    }
}

#[derive(Debug, Clone)]
struct Node {
    config: NullConfig,
    children: Vec<usize>,
}

/// Precomputed null-configuration tree. Nodes live in an arena; index order is
/// breadth-first with children in ascending angle.
#[derive(Debug, Clone)]
pub struct SearchTree {
    fanout: usize,
    depth: usize,
    nulls_per_level: Vec<usize>,
    beam_angle: f64,
    k_antennas: usize,
    nodes: Vec<Node>,
    top: Vec<usize>,
}

pub const DEFAULT_FANOUT: usize = 3;
pub const DEFAULT_DEPTH: usize = 4;
const BASE_SCHEDULE: [usize; 4] = [6, 4, 2, 1];

/// Per-level null counts for the default depth-4 tree, capped at `K − 2`.
/// K = 8 gives [6, 4, 2, 1]; K = 4 gives [2, 2, 2, 1].
pub fn default_nulls_per_level(k_antennas: usize, depth: usize) -> Result<Vec<usize>> {
    if depth != DEFAULT_DEPTH {
        return Err(Error::validation(
            "nulls_per_level_required",
            format!("no default null schedule for depth {depth}; list nulls_per_level explicitly"),
        ));
    }
    if k_antennas < 3 {
        return Err(Error::validation(
            "nulls_exceed_dof",
            format!("a search tree needs K >= 3, got K={k_antennas}"),
        ));
    }
    Ok(BASE_SCHEDULE.iter().map(|&n| n.min(k_antennas - 2)).collect())
}

fn check_schedule(k: usize, fanout: usize, depth: usize, npl: &[usize]) -> Result<()> {
    if fanout < 2 {
        return Err(Error::validation(
            "fanout_too_small",
            format!("fanout must be >= 2, got {fanout}"),
        ));
    }
    if depth < 1 {
        return Err(Error::validation("depth_too_small", "depth must be >= 1"));
    }
    if npl.len() != depth {
        return Err(Error::validation(
            "nulls_per_level_length",
            format!("{} null counts for depth {depth}", npl.len()),
        ));
    }
    if npl.windows(2).any(|w| w[1] > w[0]) {
        return Err(Error::validation(
            "nulls_per_level_increasing",
            format!("null counts must be non-increasing: {npl:?}"),
        ));
    }
    if npl.last() != Some(&1) {
        return Err(Error::validation(
            "nulls_per_level_last",
            format!("leaf level must carry exactly one null: {npl:?}"),
        ));
    }
    if let Some(&n) = npl.iter().find(|&&n| n + 2 > k) {
        return Err(Error::validation(
            "nulls_exceed_dof",
            format!("{n} nulls on K={k} antennas; at most K-2 are allowed"),
        ));
    }
    Ok(())
}

/// `n` angles evenly spread over `[a, b]`, inset by half a step from each edge.
pub fn sector_nulls(a: f64, b: f64, n: usize) -> Vec<f64> {
    let step = (b - a) / n as f64;
    (0..n).map(|i| a + step * (i as f64 + 0.5)).collect()
}

/// Parent arena index, child path and sector of a node still to be built.
type Pending = (Option<usize>, Vec<usize>, (f64, f64));

pub fn build_tree(
    geom: &ArrayGeometry,
    fanout: usize,
    depth: usize,
    nulls_per_level: &[usize],
    beam_angle: f64,
) -> Result<SearchTree> {
    check_schedule(geom.k_antennas(), fanout, depth, nulls_per_level)?;
    let mut nodes: Vec<Node> = Vec::new();
    let mut level: Vec<Pending> = vec![(None, Vec::new(), (-90.0, 90.0))];
    let mut top = Vec::new();
    for npl in nulls_per_level {
        let mut next = Vec::new();
        for (parent, path, (a, b)) in level {
            let width = (b - a) / fanout as f64;
            for c in 0..fanout {
                let lo = a + width * c as f64;
                let hi = if c + 1 == fanout { b } else { a + width * (c + 1) as f64 };
                let mut child_path = path.clone();
                child_path.push(c);
                let config = NullConfig::new(
                    NodeId::Tree(child_path.clone()),
                    geom,
                    beam_angle,
                    sector_nulls(lo, hi, *npl),
                    (lo, hi),
                )?;
                let idx = nodes.len();
                nodes.push(Node {
                    config,
                    children: Vec::new(),
                });
                match parent {
                    Some(p) => nodes[p].children.push(idx),
                    None => top.push(idx),
                }
                next.push((Some(idx), child_path, (lo, hi)));
            }
        }
        level = next;
    }
    Ok(SearchTree {
        fanout,
        depth,
        nulls_per_level: nulls_per_level.to_vec(),
        beam_angle,
        k_antennas: geom.k_antennas(),
        nodes,
        top,
    })
}

impl SearchTree {
    pub fn fanout(&self) -> usize {
        self.fanout
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn nulls_per_level(&self) -> &[usize] {
        &self.nulls_per_level
    }

    pub fn beam_angle(&self) -> f64 {
        self.beam_angle
    }

    pub fn k_antennas(&self) -> usize {
        self.k_antennas
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn config(&self, node: usize) -> &NullConfig {
        &self.nodes[node].config
    }

    /// Children of `node`, or the level-1 nodes for `None`.
    pub fn children(&self, node: Option<usize>) -> &[usize] {
        match node {
            Some(n) => &self.nodes[n].children,
            None => &self.top,
        }
    }

    pub fn is_leaf(&self, node: usize) -> bool {
        self.nodes[node].children.is_empty()
    }

    pub fn leaves(&self) -> Vec<usize> {
        (0..self.nodes.len()).filter(|&n| self.is_leaf(n)).collect()
    }

    pub fn find(&self, id: &NodeId) -> Option<usize> {
        let NodeId::Tree(path) = id else {
            return None;
        };
        let mut cur: Option<usize> = None;
        for &c in path {
            cur = Some(*self.children(cur).get(c)?);
        }
        cur
    }
}
