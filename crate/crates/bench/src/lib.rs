//! Shared fixtures for the criterion benchmarks.

use ctin_core::beamforming::ArrayGeometry;
use ctin_core::nullsearch::{build_tree, default_nulls_per_level, SearchTree};

pub const BEAM_ANGLE: f64 = -40.5;

pub fn default_tree(k: usize) -> SearchTree {
    let geom = ArrayGeometry::with_antennas(k).expect("valid geometry");
    let npl = default_nulls_per_level(k, 4).expect("default schedule");
    build_tree(&geom, 3, 4, &npl, BEAM_ANGLE).expect("tree builds")
}
