//! LTE resource-block and WiFi subcarrier grids sharing one 20 MHz channel, and the
//! nearest-centre mapping between them.
//!
//! All frequencies are integer hertz. Grid constructors reject spacings whose
//! half-step offsets would not land on whole hertz, so every comparison in the
//! mapping is exact.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_CENTER_FREQ_HZ: i64 = 2_412_000_000;
pub const DEFAULT_N_RRB: usize = 100;
pub const DEFAULT_RRB_BANDWIDTH_HZ: i64 = 180_000;
pub const DEFAULT_N_SC: usize = 64;
pub const DEFAULT_SC_BANDWIDTH_HZ: i64 = 312_500;

/// Centre of element `index` in an evenly spaced grid of `n` elements, symmetric
/// about `center`.
fn element_center(center: i64, n: usize, spacing: i64, index: usize) -> i64 {
    // (2i - (n-1)) * spacing / 2, exact because constructors check parity
    center + ((2 * index as i64 - (n as i64 - 1)) * spacing) / 2
}

fn check_grid(what: &'static str, n: usize, spacing: i64) -> Result<()> {
    if n == 0 {
        return Err(Error::validation(
            "empty_grid",
            format!("{what} needs at least one element"),
        ));
    }
    if spacing <= 0 {
        return Err(Error::validation(
            "non_positive_bandwidth",
            format!("{what} spacing must be positive, got {spacing} Hz"),
        ));
    }
    if ((n as i64 - 1) * spacing) % 2 != 0 {
        return Err(Error::validation(
            "grid_not_integer_hz",
            format!("{what}: {n} elements at {spacing} Hz do not have integer-hertz centres"),
        ));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LteGrid {
    center_freq_hz: i64,
    n_rrb: usize,
    rrb_bandwidth_hz: i64,
}

impl LteGrid {
    pub fn new(center_freq_hz: i64, n_rrb: usize, rrb_bandwidth_hz: i64) -> Result<Self> {
        check_grid("LTE grid", n_rrb, rrb_bandwidth_hz)?;
        Ok(Self {
            center_freq_hz,
            n_rrb,
            rrb_bandwidth_hz,
        })
    }

    pub fn center_freq_hz(&self) -> i64 {
        self.center_freq_hz
    }

    pub fn n_rrb(&self) -> usize {
        self.n_rrb
    }

    pub fn rrb_bandwidth_hz(&self) -> i64 {
        self.rrb_bandwidth_hz
    }

    /// Centre frequency of resource block `r`.
    pub fn rrb_center_freq(&self, r: usize) -> Result<i64> {
        if r >= self.n_rrb {
            return Err(Error::IndexOutOfRange {
                what: "RRB",
                index: r,
                len: self.n_rrb,
            });
        }
        Ok(element_center(
            self.center_freq_hz,
            self.n_rrb,
            self.rrb_bandwidth_hz,
            r,
        ))
    }

    fn span(&self) -> (i64, i64) {
        let half = self.n_rrb as i64 * self.rrb_bandwidth_hz / 2;
        (self.center_freq_hz - half, self.center_freq_hz + half)
    }
}

impl Default for LteGrid {
    fn default() -> Self {
        Self {
            center_freq_hz: DEFAULT_CENTER_FREQ_HZ,
            n_rrb: DEFAULT_N_RRB,
            rrb_bandwidth_hz: DEFAULT_RRB_BANDWIDTH_HZ,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WifiGrid {
    center_freq_hz: i64,
    n_sc: usize,
    sc_bandwidth_hz: i64,
    /// Subcarriers never chosen as the representative of an RRB (e.g. DC, guards).
    excluded: Vec<usize>,
}

impl WifiGrid {
    pub fn new(center_freq_hz: i64, n_sc: usize, sc_bandwidth_hz: i64) -> Result<Self> {
        check_grid("WiFi grid", n_sc, sc_bandwidth_hz)?;
        Ok(Self {
            center_freq_hz,
            n_sc,
            sc_bandwidth_hz,
            excluded: Vec::new(),
        })
    }

    /// Excludes the listed subcarriers from the RRB mapping.
    pub fn with_excluded(mut self, mut excluded: Vec<usize>) -> Result<Self> {
        excluded.sort_unstable();
        excluded.dedup();
        if let Some(&bad) = excluded.iter().find(|&&s| s >= self.n_sc) {
            return Err(Error::IndexOutOfRange {
                what: "subcarrier",
                index: bad,
                len: self.n_sc,
            });
        }
        if excluded.len() == self.n_sc {
            return Err(Error::validation(
                "all_subcarriers_excluded",
                "at least one subcarrier must remain eligible for mapping",
            ));
        }
        self.excluded = excluded;
        Ok(self)
    }

    pub fn center_freq_hz(&self) -> i64 {
        self.center_freq_hz
    }

    pub fn n_sc(&self) -> usize {
        self.n_sc
    }

    pub fn sc_bandwidth_hz(&self) -> i64 {
        self.sc_bandwidth_hz
    }

    pub fn excluded(&self) -> &[usize] {
        &self.excluded
    }

    pub fn is_excluded(&self, s: usize) -> bool {
        self.excluded.binary_search(&s).is_ok()
    }

    /// Centre frequency of subcarrier `s`.
    pub fn sc_center_freq(&self, s: usize) -> Result<i64> {
        if s >= self.n_sc {
            return Err(Error::IndexOutOfRange {
                what: "subcarrier",
                index: s,
                len: self.n_sc,
            });
        }
        Ok(element_center(self.center_freq_hz, self.n_sc, self.sc_bandwidth_hz, s))
    }

    /// All subcarrier centre frequencies, in index order.
    pub fn sc_center_freqs(&self) -> Vec<i64> {
        (0..self.n_sc)
            .map(|s| element_center(self.center_freq_hz, self.n_sc, self.sc_bandwidth_hz, s))
            .collect()
    }

    fn span(&self) -> (i64, i64) {
        let half = self.n_sc as i64 * self.sc_bandwidth_hz / 2;
        (self.center_freq_hz - half, self.center_freq_hz + half)
    }
}

impl Default for WifiGrid {
    fn default() -> Self {
        Self {
            center_freq_hz: DEFAULT_CENTER_FREQ_HZ,
            n_sc: DEFAULT_N_SC,
            sc_bandwidth_hz: DEFAULT_SC_BANDWIDTH_HZ,
            excluded: Vec::new(),
        }
    }
}

/// Mapping from each RRB to the WiFi subcarrier with the closest centre frequency,
/// plus the inverse nearest-RRB lookup used when evaluating received power per
/// subcarrier.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RbScMap {
    rb_to_sc: Vec<usize>,
    sc_to_rb: Vec<usize>,
}

impl RbScMap {
    pub fn n_rrb(&self) -> usize {
        self.rb_to_sc.len()
    }

    pub fn n_sc(&self) -> usize {
        self.sc_to_rb.len()
    }

    /// Subcarrier representing RRB `r`.
    pub fn subcarrier(&self, r: usize) -> Result<usize> {
        self.rb_to_sc.get(r).copied().ok_or(Error::IndexOutOfRange {
            what: "RRB",
            index: r,
            len: self.rb_to_sc.len(),
        })
    }

    /// RRB whose centre is nearest to subcarrier `s`.
    pub fn rrb_for_subcarrier(&self, s: usize) -> Result<usize> {
        self.sc_to_rb.get(s).copied().ok_or(Error::IndexOutOfRange {
            what: "subcarrier",
            index: s,
            len: self.sc_to_rb.len(),
        })
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.rb_to_sc
    }

    pub fn inverse(&self) -> &[usize] {
        &self.sc_to_rb
    }
}

/// Index of the nearest element to `f` in an evenly spaced grid, skipping entries for
/// which `skip` is true. Ties go to the lower index.
fn nearest_index(f: i64, center: i64, n: usize, spacing: i64, skip: impl Fn(usize) -> bool) -> Option<usize> {
    let first = element_center(center, n, spacing, 0);
    // last element whose centre is <= f, clamped into the grid
    let below = if f < first {
        None
    } else {
        Some((((f - first) / spacing) as usize).min(n - 1))
    };
    let lower = below.and_then(|b| (0..=b).rev().find(|&i| !skip(i)));
    let upper_start = below.map_or(0, |b| b + 1);
    let upper = (upper_start..n).find(|&i| !skip(i));
    match (lower, upper) {
        (Some(lo), Some(hi)) => {
            let d_lo = (f - element_center(center, n, spacing, lo)).abs();
            let d_hi = (element_center(center, n, spacing, hi) - f).abs();
            Some(if d_hi < d_lo { hi } else { lo })
        }
        (lo, hi) => lo.or(hi),
    }
}

/// Maps every RRB to the subcarrier with the closest centre frequency (ties toward the
/// lower subcarrier index) and every subcarrier to its nearest RRB.
pub fn build_rb_sc_map(lte: &LteGrid, wifi: &WifiGrid) -> Result<RbScMap> {
    let (l_lo, l_hi) = lte.span();
    let (w_lo, w_hi) = wifi.span();
    if l_hi <= w_lo || w_hi <= l_lo {
        return Err(Error::NonOverlappingGrids);
    }

    let rb_to_sc = (0..lte.n_rrb)
        .map(|r| {
            let f = element_center(lte.center_freq_hz, lte.n_rrb, lte.rrb_bandwidth_hz, r);
            nearest_index(f, wifi.center_freq_hz, wifi.n_sc, wifi.sc_bandwidth_hz, |s| {
                wifi.is_excluded(s)
            })
            .expect("at least one eligible subcarrier")
        })
        .collect();
    let sc_to_rb = (0..wifi.n_sc)
        .map(|s| {
            let f = element_center(wifi.center_freq_hz, wifi.n_sc, wifi.sc_bandwidth_hz, s);
            nearest_index(f, lte.center_freq_hz, lte.n_rrb, lte.rrb_bandwidth_hz, |_| false).expect("non-empty grid")
        })
        .collect();

    Ok(RbScMap { rb_to_sc, sc_to_rb })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Exhaustive scan over every eligible subcarrier.
    fn brute_force_map(lte: &LteGrid, wifi: &WifiGrid) -> Vec<usize> {
        (0..lte.n_rrb())
            .map(|r| {
                let fr = lte.rrb_center_freq(r).unwrap();
                let mut best: Option<(i64, usize)> = None;
                for s in 0..wifi.n_sc() {
                    if wifi.is_excluded(s) {
                        continue;
                    }
                    let d = (fr - wifi.sc_center_freq(s).unwrap()).abs();
                    if best.is_none_or(|(bd, _)| d < bd) {
                        best = Some((d, s));
                    }
                }
                best.unwrap().1
            })
            .collect()
    }

    #[test]
    fn middle_rrb_of_odd_grid_is_center() {
        let g = LteGrid::new(2_412_000_000, 5, 180_000).unwrap();
        assert_eq!(g.rrb_center_freq(2).unwrap(), 2_412_000_000);
    }

    #[test]
    fn rrb_edges_equidistant_and_spaced() {
        let g = LteGrid::default();
        let c = g.center_freq_hz();
        let lo = g.rrb_center_freq(0).unwrap();
        let hi = g.rrb_center_freq(99).unwrap();
        assert_eq!(c - lo, hi - c);
        assert_eq!(g.rrb_center_freq(1).unwrap() - lo, 180_000);
        assert!(g.rrb_center_freq(100).is_err());
    }

    #[test]
    fn subcarrier_frequencies() {
        let w = WifiGrid::new(2_412_000_000, 63, 312_500).unwrap();
        assert_eq!(w.sc_center_freq(31).unwrap(), 2_412_000_000);
        let w = WifiGrid::default();
        assert_eq!(w.sc_center_freq(1).unwrap() - w.sc_center_freq(0).unwrap(), 312_500);
        assert!(matches!(w.sc_center_freq(64), Err(Error::IndexOutOfRange { .. })));
    }

    #[test]
    fn odd_half_step_rejected() {
        let err = LteGrid::new(0, 2, 3).unwrap_err();
        assert_eq!(err.rule(), Some("grid_not_integer_hz"));
    }

    #[test]
    fn single_element_grids() {
        let lte = LteGrid::new(1_000_000, 1, 180_000).unwrap();
        let wifi = WifiGrid::new(1_000_000, 1, 312_500).unwrap();
        let map = build_rb_sc_map(&lte, &wifi).unwrap();
        assert_eq!(map.as_slice(), &[0]);
        assert_eq!(map.inverse(), &[0]);
    }

    #[test]
    fn default_map_matches_brute_force() {
        let lte = LteGrid::default();
        let wifi = WifiGrid::default();
        let map = build_rb_sc_map(&lte, &wifi).unwrap();
        assert_eq!(map.as_slice(), brute_force_map(&lte, &wifi).as_slice());
        // co-centred: RRB 50 sits at +90 kHz, nearest subcarrier is 32 at +156.25 kHz
        assert_eq!(map.subcarrier(50).unwrap(), 32);
        assert_eq!(map.subcarrier(49).unwrap(), 31);
        assert!(map.as_slice().windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn inverse_map_is_nearest_rrb() {
        let lte = LteGrid::default();
        let wifi = WifiGrid::default();
        let map = build_rb_sc_map(&lte, &wifi).unwrap();
        for s in 0..wifi.n_sc() {
            let f = wifi.sc_center_freq(s).unwrap();
            let r = map.rrb_for_subcarrier(s).unwrap();
            let d = (f - lte.rrb_center_freq(r).unwrap()).abs();
            for r2 in 0..lte.n_rrb() {
                let d2 = (f - lte.rrb_center_freq(r2).unwrap()).abs();
                assert!(d < d2 || (d == d2 && r <= r2));
            }
        }
        // outermost subcarriers fall outside the LTE span and clamp to the edge RRBs
        assert_eq!(map.rrb_for_subcarrier(0).unwrap(), 0);
        assert_eq!(map.rrb_for_subcarrier(63).unwrap(), 99);
    }

    #[test]
    fn exclusion_list_respected() {
        let lte = LteGrid::default();
        let wifi = WifiGrid::default().with_excluded(vec![31, 32, 0, 63]).unwrap();
        let map = build_rb_sc_map(&lte, &wifi).unwrap();
        assert!(map.as_slice().iter().all(|s| ![0, 31, 32, 63].contains(s)));
        assert_eq!(map.as_slice(), brute_force_map(&lte, &wifi).as_slice());
    }

    #[test]
    fn non_overlapping_grids() {
        let lte = LteGrid::new(2_412_000_000, 100, 180_000).unwrap();
        let wifi = WifiGrid::new(5_180_000_000, 64, 312_500).unwrap();
        assert_eq!(build_rb_sc_map(&lte, &wifi), Err(Error::NonOverlappingGrids));
    }

    proptest! {
        #[test]
        fn map_is_exact_argmin(
            n_rrb in 1usize..120,
            n_sc in 1usize..80,
            rb_half in 1i64..200_000,
            sc_half in 1i64..400_000,
            offset in -500_000i64..500_000,
        ) {
            let lte = LteGrid::new(2_412_000_000, n_rrb, 2 * rb_half).unwrap();
            let wifi = WifiGrid::new(2_412_000_000 + offset, n_sc, 2 * sc_half).unwrap();
            if let Ok(map) = build_rb_sc_map(&lte, &wifi) {
                let expected = brute_force_map(&lte, &wifi);
                prop_assert_eq!(map.as_slice(), expected.as_slice());
            }
        }

        #[test]
        fn co_centered_map_is_mirror_symmetric(n_rrb in 1usize..120, n_sc in 1usize..80) {
            let lte = LteGrid::new(2_412_000_000, n_rrb, 180_000).unwrap();
            let wifi = WifiGrid::new(2_412_000_000, n_sc, 312_500).unwrap();
            let map = build_rb_sc_map(&lte, &wifi).unwrap();
            let m = map.as_slice();
            for r in 0..n_rrb {
                let mirrored = n_sc - 1 - m[n_rrb - 1 - r];
                let fr = lte.rrb_center_freq(r).unwrap();
                let d_own = (fr - wifi.sc_center_freq(m[r]).unwrap()).abs();
                let d_mir = (fr - wifi.sc_center_freq(mirrored).unwrap()).abs();
                // equal unless a tie was broken toward the lower index
                prop_assert!(m[r] == mirrored || d_own == d_mir);
            }
        }
    }
}
