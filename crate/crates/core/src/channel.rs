//! Ray-based channel between the BS array and a single-antenna WiFi node, received
//! power under a precoding matrix, and INR measurement.
//!
//! Each path contributes `gain · exp(j2π(d/λ)k·sin θ) · exp(−j2π·f_c(s)·τ)` to the
//! response of antenna `k` on subcarrier `s`. A single zero-delay path is frequency
//! flat (the over-the-cable case); several delayed paths give frequency-selective
//! fading.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::beamforming::{check_angle, steering_vector, ArrayGeometry, PathPowerReport, WeightMatrix};
use crate::error::{Error, Result};
use crate::nullsearch::NodeId;
use crate::phy_grid::{RbScMap, WifiGrid};

pub fn to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

pub fn from_db(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Path {
    pub angle_deg: f64,
    pub gain: Complex64,
    pub excess_delay_s: f64,
}

impl Path {
    pub fn new(angle_deg: f64, gain: Complex64, excess_delay_s: f64) -> Result<Self> {
        check_angle(angle_deg)?;
        if !(gain.norm() > 0.0) || !gain.norm().is_finite() {
            return Err(Error::validation("zero_path_gain", "path gain must be non-zero"));
        }
        if !(excess_delay_s.is_finite() && excess_delay_s >= 0.0) {
            return Err(Error::validation(
                "negative_path_delay",
                format!("excess delay must be >= 0, got {excess_delay_s}"),
            ));
        }
        Ok(Self {
            angle_deg,
            gain,
            excess_delay_s,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ChannelMode {
    Flat,
    Geometric,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelModel {
    mode: ChannelMode,
    paths: Vec<Path>,
    noise_power: f64,
}

fn check_noise(noise_power: f64) -> Result<()> {
    if noise_power.is_finite() && noise_power > 0.0 {
        Ok(())
    } else {
        Err(Error::validation(
            "non_positive_noise",
            format!("noise power must be positive, got {noise_power}"),
        ))
    }
}

impl ChannelModel {
    /// Single zero-delay ray.
    pub fn flat(angle_deg: f64, gain: Complex64, noise_power: f64) -> Result<Self> {
        check_noise(noise_power)?;
        Ok(Self {
            mode: ChannelMode::Flat,
            paths: vec![Path::new(angle_deg, gain, 0.0)?],
            noise_power,
        })
    }

    pub fn geometric(paths: Vec<Path>, noise_power: f64) -> Result<Self> {
        check_noise(noise_power)?;
        if paths.is_empty() {
            return Err(Error::validation(
                "no_paths",
                "geometric channel needs at least one path",
            ));
        }
        for p in &paths {
            Path::new(p.angle_deg, p.gain, p.excess_delay_s)?;
        }
        Ok(Self {
            mode: ChannelMode::Geometric,
            paths,
            noise_power,
        })
    }

    pub fn mode(&self) -> ChannelMode {
        self.mode
    }

    pub fn paths(&self) -> &[Path] {
        &self.paths
    }

    pub fn noise_power(&self) -> f64 {
        self.noise_power
    }

    pub fn with_noise_power(mut self, noise_power: f64) -> Result<Self> {
        check_noise(noise_power)?;
        self.noise_power = noise_power;
        Ok(self)
    }

    /// Multiplies every path gain by `c`.
    pub fn scaled(&self, c: Complex64) -> Result<Self> {
        let mut out = self.clone();
        for p in &mut out.paths {
            p.gain *= c;
        }
        Ok(out)
    }
}

/// Complex gain `h[k][s]` of every antenna on every WiFi subcarrier.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelResponse {
    k: usize,
    n_sc: usize,
    h: Vec<Complex64>,
}

impl ChannelResponse {
    pub fn k_antennas(&self) -> usize {
        self.k
    }

    pub fn n_sc(&self) -> usize {
        self.n_sc
    }

    pub fn get(&self, antenna: usize, subcarrier: usize) -> Complex64 {
        self.h[antenna * self.n_sc + subcarrier]
    }

    /// Gains of all antennas on subcarrier `s`.
    pub fn column(&self, s: usize) -> Vec<Complex64> {
        (0..self.k).map(|k| self.get(k, s)).collect()
    }
}

pub fn channel_response(model: &ChannelModel, geom: &ArrayGeometry, wifi: &WifiGrid) -> ChannelResponse {
    let k = geom.k_antennas();
    let freqs = wifi.sc_center_freqs();
    let n_sc = freqs.len();
    let mut h = vec![Complex64::new(0.0, 0.0); k * n_sc];
    for path in &model.paths {
        let a = steering_vector(geom, path.angle_deg).expect("path angles validated");
        let delay_phase: Vec<Complex64> = freqs
            .iter()
            .map(|&f| Complex64::from_polar(1.0, -2.0 * PI * f as f64 * path.excess_delay_s))
            .collect();
        for (ant, ak) in a.iter().enumerate() {
            let g = path.gain * ak;
            for (s, d) in delay_phase.iter().enumerate() {
                h[ant * n_sc + s] += g * d;
            }
        }
    }
    ChannelResponse { k, n_sc, h }
}

/// What the WiFi node measures while the BS transmits on one antenna at a time.
pub fn path_power_report(response: &ChannelResponse) -> Result<PathPowerReport> {
    PathPowerReport::new(
        response.k,
        response.n_sc,
        response.h.iter().map(|c| c.norm_sqr()).collect(),
    )
}

/// Received LTE power on each subcarrier, `P·|W[:, r(s)]ᴴ h[:, s]|²`.
pub fn rx_power(response: &ChannelResponse, weights: &WeightMatrix, map: &RbScMap, tx_power: f64) -> Result<Vec<f64>> {
    if weights.k_antennas() != response.k {
        return Err(Error::DimensionMismatch(format!(
            "weights for {} antennas, channel has {}",
            weights.k_antennas(),
            response.k
        )));
    }
    if map.n_sc() != response.n_sc || map.n_rrb() != weights.n_rrb() {
        return Err(Error::DimensionMismatch(format!(
            "map is {}x{}, weights have {} RRBs and channel {} subcarriers",
            map.n_rrb(),
            map.n_sc(),
            weights.n_rrb(),
            response.n_sc
        )));
    }
    (0..response.n_sc)
        .map(|s| {
            let r = map.rrb_for_subcarrier(s)?;
            let w = weights.column(r).as_slice();
            let y: Complex64 = (0..response.k).map(|k| w[k].conj() * response.get(k, s)).sum();
            Ok(tx_power * y.norm_sqr())
        })
        .collect()
}

/// INR from the power measured during the on phase and the noise measured while the
/// LTE transmitter is off.
pub fn measure_inr(p_on: f64, p_off: f64) -> Result<f64> {
    if !(p_off > 0.0) {
        return Err(Error::validation(
            "non_positive_noise",
            format!("off-phase power must be positive, got {p_off}"),
        ));
    }
    Ok(p_on / p_off)
}

/// Averaging applied by the WiFi node for one tested configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Measurement {
    pub sample_count: usize,
    /// Standard deviation of the per-sample noise power, relative to the noise floor.
    pub noise_jitter: f64,
}

impl Default for Measurement {
    fn default() -> Self {
        Self {
            sample_count: 100,
            noise_jitter: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InrReport {
    pub per_subcarrier: Vec<f64>,
    /// Band-wide INR, the mean over subcarriers.
    pub aggregate: f64,
    pub config_id: Option<NodeId>,
}

impl InrReport {
    pub fn aggregate_db(&self) -> f64 {
        to_db(self.aggregate)
    }
}

/// Averages `sample_count` INR samples. Each sample sees the interference plus one
/// noise realisation `N·(1 + σz)`; the off-phase reference is the noise floor `N`.
pub fn sampled_inr<R: Rng + ?Sized>(
    response: &ChannelResponse,
    weights: &WeightMatrix,
    map: &RbScMap,
    tx_power: f64,
    model: &ChannelModel,
    measurement: &Measurement,
    rng: &mut R,
) -> Result<InrReport> {
    if measurement.sample_count == 0 {
        return Err(Error::validation("zero_sample_count", "sample_count must be >= 1"));
    }
    let interference = rx_power(response, weights, map, tx_power)?;
    let noise = model.noise_power;
    let n = measurement.sample_count as f64;
    let per_subcarrier = interference
        .iter()
        .map(|&p| {
            let mut acc = 0.0;
            for _ in 0..measurement.sample_count {
                let z: f64 = if measurement.noise_jitter > 0.0 {
                    rng.sample(StandardNormal)
                } else {
                    0.0
                };
                let p_on = (p + noise * (1.0 + measurement.noise_jitter * z)).max(f64::MIN_POSITIVE);
                acc += measure_inr(p_on, noise)?;
            }
            Ok(acc / n)
        })
        .collect::<Result<Vec<f64>>>()?;
    let aggregate = per_subcarrier.iter().sum::<f64>() / per_subcarrier.len() as f64;
    Ok(InrReport {
        per_subcarrier,
        aggregate,
        config_id: None,
    })
}

/// Named channel shapes selectable from scenario files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ChannelPreset {
    /// One zero-delay unit-gain ray toward the node.
    Flat,
    /// Line of sight plus one equal-magnitude reflection delayed by 100 ns, arriving
    /// from a uniformly drawn angle with a uniformly drawn phase.
    TwoRay,
    /// Line of sight plus 2 to 4 reflections. Reflection `p` (from 0) has amplitude
    /// `0.4·e^{-0.3p}·U(0.5, 1)`, uniform phase, uniform angle over [-90°, 90°] and a
    /// delay drawn from U(20 ns, 250 ns). The strongest antenna path then fades by
    /// about 12 dB across the band on average.
    OrbitLike,
}

pub const TWO_RAY_DELAY_S: f64 = 100e-9;
pub const ORBIT_REFLECTIONS: (usize, usize) = (2, 4);
pub const ORBIT_FIRST_AMPLITUDE: f64 = 0.4;
pub const ORBIT_AMPLITUDE_DECAY: f64 = 0.3;
pub const ORBIT_DELAY_RANGE_S: (f64, f64) = (20e-9, 250e-9);

impl ChannelPreset {
    /// Draws the paths for a node at `node_angle`. Only the random presets consume
    /// entropy from `rng`.
    pub fn paths<R: Rng + ?Sized>(&self, node_angle: f64, rng: &mut R) -> Result<Vec<Path>> {
        let los = Path::new(node_angle, Complex64::new(1.0, 0.0), 0.0)?;
        let random_phase = |rng: &mut R| Complex64::from_polar(1.0, rng.random_range(0.0..2.0 * PI));
        match self {
            ChannelPreset::Flat => Ok(vec![los]),
            ChannelPreset::TwoRay => {
                let angle = rng.random_range(-90.0..=90.0);
                let gain = random_phase(rng);
                Ok(vec![los, Path::new(angle, gain, TWO_RAY_DELAY_S)?])
            }
            ChannelPreset::OrbitLike => {
                let n = rng.random_range(ORBIT_REFLECTIONS.0..=ORBIT_REFLECTIONS.1);
                let mut paths = vec![los];
                for p in 0..n {
                    let amp =
                        ORBIT_FIRST_AMPLITUDE * (-ORBIT_AMPLITUDE_DECAY * p as f64).exp() * rng.random_range(0.5..1.0);
                    let gain = random_phase(rng) * amp;
                    let angle = rng.random_range(-90.0..=90.0);
                    let delay = rng.random_range(ORBIT_DELAY_RANGE_S.0..ORBIT_DELAY_RANGE_S.1);
                    paths.push(Path::new(angle, gain, delay)?);
                }
                Ok(paths)
            }
        }
    }

    pub fn model<R: Rng + ?Sized>(&self, node_angle: f64, noise_power: f64, rng: &mut R) -> Result<ChannelModel> {
        let paths = self.paths(node_angle, rng)?;
        match self {
            ChannelPreset::Flat => ChannelModel::flat(node_angle, paths[0].gain, noise_power),
            _ => ChannelModel::geometric(paths, noise_power),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::beamforming::{build_weight_matrix, finalize_weights, lcmv_weights, WeightVector};
    use crate::phy_grid::{build_rb_sc_map, LteGrid};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn setup() -> (ArrayGeometry, WifiGrid, RbScMap) {
        let wifi = WifiGrid::default();
        let map = build_rb_sc_map(&LteGrid::default(), &wifi).unwrap();
        (ArrayGeometry::with_antennas(4).unwrap(), wifi, map)
    }

    #[test]
    fn flat_broadside_unit_response() {
        let (g, wifi, _) = setup();
        let m = ChannelModel::flat(0.0, Complex64::new(1.0, 0.0), 1.0).unwrap();
        let h = channel_response(&m, &g, &wifi);
        for k in 0..4 {
            for s in 0..64 {
                assert!((h.get(k, s) - Complex64::new(1.0, 0.0)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn zero_delay_is_not_frequency_selective() {
        let (g, wifi, _) = setup();
        let m = ChannelModel::geometric(vec![Path::new(33.0, Complex64::new(0.3, -0.7), 0.0).unwrap()], 1.0).unwrap();
        let h = channel_response(&m, &g, &wifi);
        let c0 = h.column(0);
        for s in 1..64 {
            assert_eq!(h.column(s), c0);
        }
    }

    #[test]
    fn two_ray_spread_matches_closed_form() {
        // two unit rays, second delayed 100 ns: |1 + e^{-j(2πfτ + φ)}|² with φ the
        // array phase difference on antenna k
        let (g, wifi, _) = setup();
        let one = Complex64::new(1.0, 0.0);
        let m = ChannelModel::geometric(
            vec![
                Path::new(10.0, one, 0.0).unwrap(),
                Path::new(-40.0, one, 100e-9).unwrap(),
            ],
            1.0,
        )
        .unwrap();
        let h = channel_response(&m, &g, &wifi);
        let rho = g.spacing_wavelengths();
        let freqs = wifi.sc_center_freqs();
        for k in 0..4 {
            let mut powers = Vec::new();
            for (s, &f) in freqs.iter().enumerate() {
                let phi = 2.0 * PI * rho * k as f64 * ((-40f64).to_radians().sin() - 10f64.to_radians().sin())
                    - 2.0 * PI * f as f64 * 100e-9;
                let expected = 2.0 + 2.0 * phi.cos();
                assert!((h.get(k, s).norm_sqr() - expected).abs() < 1e-9);
                powers.push(expected);
            }
            let max = powers.iter().cloned().fold(f64::MIN, f64::max);
            let min = powers.iter().cloned().fold(f64::MAX, f64::min);
            // 100 ns over 20 MHz covers two full fading periods
            assert!(to_db(max) - to_db(min) > 20.0);
        }
    }

    #[test]
    fn matched_filter_coherent_gain() {
        let (g, wifi, map) = setup();
        let m = ChannelModel::flat(25.0, Complex64::new(1.0, 0.0), 1.0).unwrap();
        let h = channel_response(&m, &g, &wifi);
        let w = build_weight_matrix(&g, 25.0, &[], None, &map, 100).unwrap();
        for p in rx_power(&h, &w, &map, 2.0).unwrap() {
            assert!((p - 2.0 * 4.0).abs() < 1e-9);
        }
    }

    #[test]
    fn exact_null_kills_flat_channel() {
        let (g, wifi, map) = setup();
        let m = ChannelModel::flat(25.0, Complex64::new(1.0, 0.0), 1.0).unwrap();
        let h = channel_response(&m, &g, &wifi);
        let w = build_weight_matrix(&g, -30.0, &[25.0], None, &map, 100).unwrap();
        for p in rx_power(&h, &w, &map, 3.0).unwrap() {
            assert!(p < 1e-18 * 3.0);
        }
    }

    #[test]
    fn rx_power_matches_scalar_recomputation() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let g = ArrayGeometry::with_antennas(2).unwrap();
        let wifi = WifiGrid::default();
        let map = build_rb_sc_map(&LteGrid::default(), &wifi).unwrap();
        let m = ChannelModel::geometric(ChannelPreset::OrbitLike.paths(12.0, &mut rng).unwrap(), 1.0).unwrap();
        let h = channel_response(&m, &g, &wifi);
        let cols: Vec<WeightVector> = (0..100)
            .map(|_| {
                WeightVector::new(vec![
                    Complex64::new(rng.random(), rng.random()),
                    Complex64::new(rng.random(), rng.random()),
                ])
            })
            .collect();
        let w = WeightMatrix::from_columns(cols).unwrap();
        let p = rx_power(&h, &w, &map, 1.5).unwrap();
        let lte = LteGrid::default();
        for (s, &ps) in p.iter().enumerate() {
            // nearest RRB by direct scan
            let f = wifi.sc_center_freq(s).unwrap();
            let r = (0..100)
                .min_by_key(|&r| ((lte.rrb_center_freq(r).unwrap() - f).abs(), r))
                .unwrap();
            let wc = w.column(r).as_slice();
            let re = wc[0].re * h.get(0, s).re
                + wc[0].im * h.get(0, s).im
                + wc[1].re * h.get(1, s).re
                + wc[1].im * h.get(1, s).im;
            let im = wc[0].re * h.get(0, s).im - wc[0].im * h.get(0, s).re + wc[1].re * h.get(1, s).im
                - wc[1].im * h.get(1, s).re;
            assert!((ps - 1.5 * (re * re + im * im)).abs() < 1e-12 * ps.max(1.0));
        }
    }

    #[test]
    fn rx_power_dimension_mismatch() {
        let (g, wifi, map) = setup();
        let m = ChannelModel::flat(0.0, Complex64::new(1.0, 0.0), 1.0).unwrap();
        let h = channel_response(&m, &g, &wifi);
        let w = build_weight_matrix(&ArrayGeometry::with_antennas(2).unwrap(), 0.0, &[], None, &map, 100).unwrap();
        assert!(matches!(rx_power(&h, &w, &map, 1.0), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn inr_examples() {
        assert_eq!(measure_inr(3.0, 3.0).unwrap(), 1.0);
        assert!((to_db(measure_inr(100.0, 1.0).unwrap()) - 20.0).abs() < 1e-12);
        assert!(measure_inr(1.0, 0.0).is_err());
    }

    #[test]
    fn noiseless_sampling_equals_single_shot() {
        let (g, wifi, map) = setup();
        let m = ChannelModel::flat(12.0, Complex64::new(0.5, 0.5), 0.01).unwrap();
        let h = channel_response(&m, &g, &wifi);
        let w = build_weight_matrix(&g, -30.0, &[], None, &map, 100).unwrap();
        let meas = Measurement {
            sample_count: 100,
            noise_jitter: 0.0,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let rep = sampled_inr(&h, &w, &map, 1.0, &m, &meas, &mut rng).unwrap();
        let p = rx_power(&h, &w, &map, 1.0).unwrap();
        for (s, &v) in rep.per_subcarrier.iter().enumerate() {
            let single = measure_inr(p[s] + 0.01, 0.01).unwrap();
            assert!((v - single).abs() < 1e-9 * single);
        }
    }

    #[test]
    fn averaging_variance_shrinks_with_sample_count() {
        // flat exact null: INR samples are 1 + σz, so the average has variance σ²/n
        let (g, wifi, map) = setup();
        let m = ChannelModel::flat(12.0, Complex64::new(1.0, 0.0), 1.0).unwrap();
        let h = channel_response(&m, &g, &wifi);
        let w = lcmv_weights(&g, -30.0, &[12.0]).unwrap();
        let w = finalize_weights(&w, None, &map, 100).unwrap();
        let var_for = |n: usize| {
            let meas = Measurement {
                sample_count: n,
                noise_jitter: 0.1,
            };
            let vals: Vec<f64> = (0..1000u64)
                .map(|seed| {
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    sampled_inr(&h, &w, &map, 1.0, &m, &meas, &mut rng)
                        .unwrap()
                        .per_subcarrier[0]
                })
                .collect();
            let mean = vals.iter().sum::<f64>() / vals.len() as f64;
            vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (vals.len() - 1) as f64
        };
        let v10 = var_for(10);
        let v100 = var_for(100);
        assert!((v10 / (0.01 / 10.0) - 1.0).abs() < 0.15, "v10={v10}");
        assert!((v100 / (0.01 / 100.0) - 1.0).abs() < 0.15, "v100={v100}");
        assert!((v10 / v100 - 10.0).abs() < 2.0);
    }

    #[test]
    fn scaling_gains_scales_power() {
        let (g, wifi, map) = setup();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let m = ChannelPreset::OrbitLike.model(-15.0, 1.0, &mut rng).unwrap();
        let c = Complex64::new(0.3, -1.2);
        let h1 = channel_response(&m, &g, &wifi);
        let h2 = channel_response(&m.scaled(c).unwrap(), &g, &wifi);
        let w = build_weight_matrix(&g, 40.0, &[-60.0], None, &map, 100).unwrap();
        let p1 = rx_power(&h1, &w, &map, 1.0).unwrap();
        let p2 = rx_power(&h2, &w, &map, 1.0).unwrap();
        for (a, b) in p1.iter().zip(&p2) {
            assert!((b - a * c.norm_sqr()).abs() < 1e-9 * b.max(1e-12));
        }
    }

    #[test]
    fn orbit_like_preset_is_frequency_selective() {
        // mean over an ensemble of the strongest per-antenna max/min spread
        let g = ArrayGeometry::with_antennas(4).unwrap();
        let wifi = WifiGrid::default();
        let mut spreads = Vec::new();
        for seed in 0..27u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let m = ChannelPreset::OrbitLike.model(5.0, 1.0, &mut rng).unwrap();
            let h = channel_response(&m, &g, &wifi);
            let spread = (0..4)
                .map(|k| {
                    let p: Vec<f64> = (0..64).map(|s| to_db(h.get(k, s).norm_sqr())).collect();
                    p.iter().cloned().fold(f64::MIN, f64::max) - p.iter().cloned().fold(f64::MAX, f64::min)
                })
                .fold(f64::MIN, f64::max);
            spreads.push(spread);
        }
        let mean = spreads.iter().sum::<f64>() / spreads.len() as f64;
        assert!(mean >= 10.0, "mean spread {mean} dB");
    }

    #[test]
    fn path_validation() {
        assert!(Path::new(91.0, Complex64::new(1.0, 0.0), 0.0).is_err());
        assert!(Path::new(0.0, Complex64::new(0.0, 0.0), 0.0).is_err());
        assert!(Path::new(0.0, Complex64::new(1.0, 0.0), -1e-9).is_err());
        assert!(ChannelModel::geometric(vec![], 1.0).is_err());
        assert!(ChannelModel::flat(0.0, Complex64::new(1.0, 0.0), 0.0).is_err());
    }
}
