//! Scenario files: a TOML description of one experiment. Every section and key is
//! optional; unknown keys are rejected.
//!
//! ```toml
//! seed = 7
//! mode = "tree"            # tree | linear | multiuser | sequential
//! repeats = 1
//!
//! [array]
//! antennas = 8
//!
//! [channel]
//! preset = "flat"          # flat | two-ray | orbit-like
//! baseline_inr_db = 30.0   # or noise_power = 1e-3
//!
//! [[users]]
//! angle_deg = 0.0          # omit to draw uniformly from [-60, 60]
//!
//! [search]
//! ue_angle_deg = -40.5
//! power_correction = true
//!
//! [timing]
//! t_csat_ms = 40
//! duty = 0.2
//! backhaul_ms = 5.0
//! ```

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::Path as FsPath;

use crate::beamforming::{check_angle, ArrayGeometry, BsConfig, DEFAULT_CARRIER_HZ, DEFAULT_SPACING_M};
use crate::channel::{ChannelPreset, Measurement, Path};
use crate::coexsim::{slots_per_cycle, BackhaulConfig, DutyCycleConfig, SimConfig};
use crate::error::{Error, Result};
use crate::nullsearch::{build_tree, default_linear_grid, default_nulls_per_level, SearchTree};
use crate::phy_grid::{
    build_rb_sc_map, LteGrid, RbScMap, WifiGrid, DEFAULT_CENTER_FREQ_HZ, DEFAULT_N_RRB, DEFAULT_N_SC,
    DEFAULT_RRB_BANDWIDTH_HZ, DEFAULT_SC_BANDWIDTH_HZ,
};

pub const DEFAULT_UE_ANGLE_DEG: f64 = -40.5;
pub const DEFAULT_USER_ANGLE_DEG: f64 = 0.0;
pub const DEFAULT_BASELINE_INR_DB: f64 = 30.0;
/// Range and minimum separation from the UE beam for randomly placed users.
pub const RANDOM_USER_RANGE_DEG: f64 = 60.0;
pub const RANDOM_USER_MIN_SEPARATION_DEG: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Tree,
    Linear,
    Multiuser,
    Sequential,
}

impl Mode {
    pub fn as_str(&self) -> &'static str {
        match self {
            Mode::Tree => "tree",
            Mode::Linear => "linear",
            Mode::Multiuser => "multiuser",
            Mode::Sequential => "sequential",
        }
    }
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tree" => Ok(Mode::Tree),
            "linear" => Ok(Mode::Linear),
            "multiuser" => Ok(Mode::Multiuser),
            "sequential" => Ok(Mode::Sequential),
            _ => Err(Error::validation("unknown_mode", format!("unknown mode {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ArraySpec {
    pub antennas: usize,
    pub spacing_m: f64,
    pub carrier_hz: f64,
    pub tx_power: f64,
}

impl Default for ArraySpec {
    fn default() -> Self {
        Self {
            antennas: 4,
            spacing_m: DEFAULT_SPACING_M,
            carrier_hz: DEFAULT_CARRIER_HZ,
            tx_power: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSpec {
    pub lte_center_hz: i64,
    pub n_rrb: usize,
    pub rrb_bandwidth_hz: i64,
    pub wifi_center_hz: i64,
    pub n_sc: usize,
    pub sc_bandwidth_hz: i64,
    pub excluded_subcarriers: Vec<usize>,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            lte_center_hz: DEFAULT_CENTER_FREQ_HZ,
            n_rrb: DEFAULT_N_RRB,
            rrb_bandwidth_hz: DEFAULT_RRB_BANDWIDTH_HZ,
            wifi_center_hz: DEFAULT_CENTER_FREQ_HZ,
            n_sc: DEFAULT_N_SC,
            sc_bandwidth_hz: DEFAULT_SC_BANDWIDTH_HZ,
            excluded_subcarriers: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChannelSpec {
    pub preset: ChannelPreset,
    /// Fixed noise floor. Mutually exclusive with `baseline_inr_db`.
    pub noise_power: Option<f64>,
    /// Noise floor chosen so that the un-nulled INR equals this value.
    pub baseline_inr_db: Option<f64>,
}

impl Default for ChannelSpec {
    fn default() -> Self {
        Self {
            preset: ChannelPreset::Flat,
            noise_power: None,
            baseline_inr_db: None,
        }
    }
}

/// Explicit ray, overriding the preset draw for one user.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathSpec {
    pub angle_deg: f64,
    #[serde(default)]
    pub gain_db: f64,
    #[serde(default)]
    pub phase_deg: f64,
    #[serde(default)]
    pub delay_ns: f64,
}

impl PathSpec {
    pub fn to_path(&self) -> Result<Path> {
        let amp = 10f64.powf(self.gain_db / 20.0);
        Path::new(
            self.angle_deg,
            Complex64::from_polar(amp, self.phase_deg.to_radians()),
            self.delay_ns * 1e-9,
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct UserSpec {
    pub angle_deg: Option<f64>,
    pub paths: Option<Vec<PathSpec>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SearchSpec {
    pub ue_angle_deg: f64,
    pub fanout: usize,
    pub depth: usize,
    pub nulls_per_level: Option<Vec<usize>>,
    pub power_correction: bool,
    pub linear_grid: Option<Vec<f64>>,
}

impl Default for SearchSpec {
    fn default() -> Self {
        Self {
            ue_angle_deg: DEFAULT_UE_ANGLE_DEG,
            fanout: 3,
            depth: 4,
            nulls_per_level: None,
            power_correction: true,
            linear_grid: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TimingSpec {
    pub t_csat_ms: u32,
    pub duty: f64,
    pub puncture_ms: u32,
    pub backhaul_ms: f64,
    pub test_slot_ms: f64,
    pub sample_rate_hz: f64,
    pub sample_count: usize,
    pub noise_jitter: f64,
}

impl Default for TimingSpec {
    fn default() -> Self {
        let m = Measurement::default();
        Self {
            t_csat_ms: 40,
            duty: 0.2,
            puncture_ms: 2,
            backhaul_ms: 5.0,
            test_slot_ms: 2.0,
            sample_rate_hz: 50_000.0,
            sample_count: m.sample_count,
            noise_jitter: m.noise_jitter,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSpec {
    pub backhaul_ms: Vec<f64>,
    pub duty: Vec<f64>,
}

impl Default for SweepSpec {
    fn default() -> Self {
        Self {
            backhaul_ms: vec![5.0, 50.0, 105.0],
            duty: vec![0.05, 0.2],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Scenario {
    pub seed: u64,
    pub mode: Mode,
    pub repeats: usize,
    pub array: ArraySpec,
    pub grid: GridSpec,
    pub channel: ChannelSpec,
    pub users: Vec<UserSpec>,
    pub search: SearchSpec,
    pub timing: TimingSpec,
    pub sweep: SweepSpec,
}

impl Default for Scenario {
    fn default() -> Self {
        Self {
            seed: 0,
            mode: Mode::Tree,
            repeats: 1,
            array: ArraySpec::default(),
            grid: GridSpec::default(),
            channel: ChannelSpec::default(),
            users: vec![UserSpec {
                angle_deg: Some(DEFAULT_USER_ANGLE_DEG),
                paths: None,
            }],
            search: SearchSpec::default(),
            timing: TimingSpec::default(),
            sweep: SweepSpec::default(),
        }
    }
}

/// Validated objects built from a scenario.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub geometry: ArrayGeometry,
    pub bs: BsConfig,
    pub lte: LteGrid,
    pub wifi: WifiGrid,
    pub map: RbScMap,
    pub duty_cycle: DutyCycleConfig,
    pub backhaul: BackhaulConfig,
    pub sim: SimConfig,
    pub nulls_per_level: Vec<usize>,
    pub linear_grid: Vec<f64>,
    pub noise: NoiseSetting,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseSetting {
    Fixed(f64),
    BaselineInrDb(f64),
}

fn line_of(src: &str, offset: usize) -> usize {
    src[..offset.min(src.len())].bytes().filter(|&b| b == b'\n').count() + 1
}

pub const PRESET_NAMES: [&str; 4] = ["fig7-cable", "fig8-powercorr", "fig9-delay", "fig10-multiuser"];

/// Scenario text shipped with the crate under `scenarios/`.
pub fn preset_source(name: &str) -> Option<&'static str> {
    match name {
        "fig7-cable" => Some(include_str!("../scenarios/fig7-cable.toml")),
        "fig8-powercorr" => Some(include_str!("../scenarios/fig8-powercorr.toml")),
        "fig9-delay" => Some(include_str!("../scenarios/fig9-delay.toml")),
        "fig10-multiuser" => Some(include_str!("../scenarios/fig10-multiuser.toml")),
        _ => None,
    }
}

impl Scenario {
    /// Parses and validates scenario text.
    pub fn from_toml_str(src: &str) -> Result<Self> {
        let scenario: Scenario = toml::from_str(src).map_err(|e| Error::Parse {
            line: e.span().map(|s| line_of(src, s.start)),
            message: e.message().to_string(),
        })?;
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn load(path: impl AsRef<FsPath>) -> Result<Self> {
        let src = std::fs::read_to_string(path.as_ref())
            .map_err(|e| Error::Io(format!("{}: {e}", path.as_ref().display())))?;
        Self::from_toml_str(&src)
    }

    pub fn preset(name: &str) -> Result<Self> {
        let src = preset_source(name).ok_or_else(|| {
            Error::validation(
                "unknown_preset",
                format!("unknown preset {name:?}; available: {}", PRESET_NAMES.join(", ")),
            )
        })?;
        Self::from_toml_str(src)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("scenario serializes")
    }

    /// SHA-256 over the canonical JSON form of the fully defaulted scenario.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("scenario serializes");
        hex::encode(Sha256::digest(canonical.as_bytes()))
    }

    pub fn validate(&self) -> Result<()> {
        self.resolve().map(|_| ())
    }

    pub fn resolve(&self) -> Result<Resolved> {
        let geometry = ArrayGeometry::new(self.array.antennas, self.array.spacing_m, self.array.carrier_hz)?;
        let bs = BsConfig::new(self.array.tx_power, geometry)?;
        let g = &self.grid;
        let lte = LteGrid::new(g.lte_center_hz, g.n_rrb, g.rrb_bandwidth_hz)?;
        let wifi = WifiGrid::new(g.wifi_center_hz, g.n_sc, g.sc_bandwidth_hz)?
            .with_excluded(g.excluded_subcarriers.clone())?;
        let map = build_rb_sc_map(&lte, &wifi)?;

        let t = &self.timing;
        let duty_cycle = DutyCycleConfig::new(t.t_csat_ms, t.duty, t.puncture_ms)?;
        let backhaul = BackhaulConfig::new(t.backhaul_ms)?;
        let measurement = Measurement {
            sample_count: t.sample_count,
            noise_jitter: t.noise_jitter,
        };
        let sim = SimConfig::new(t.test_slot_ms, t.sample_rate_hz, measurement, self.seed)?;
        slots_per_cycle(&duty_cycle, &sim)?;
        for &duty in &self.sweep.duty {
            let dc = DutyCycleConfig::new(t.t_csat_ms, duty, t.puncture_ms)?;
            slots_per_cycle(&dc, &sim)?;
        }
        for &b in &self.sweep.backhaul_ms {
            BackhaulConfig::new(b)?;
        }

        if self.repeats == 0 {
            return Err(Error::validation("zero_repeats", "repeats must be >= 1"));
        }
        if self.users.is_empty() {
            return Err(Error::validation("no_users", "at least one user is required"));
        }
        for u in &self.users {
            if let Some(a) = u.angle_deg {
                check_angle(a)?;
            }
            if let Some(paths) = &u.paths {
                if paths.is_empty() {
                    return Err(Error::validation("no_paths", "an explicit path list must not be empty"));
                }
                for p in paths {
                    p.to_path()?;
                }
            }
        }

        let noise = match (self.channel.noise_power, self.channel.baseline_inr_db) {
            (Some(_), Some(_)) => {
                return Err(Error::validation(
                    "noise_overdetermined",
                    "set either noise_power or baseline_inr_db, not both",
                ))
            }
            (Some(n), None) => {
                if !(n.is_finite() && n > 0.0) {
                    return Err(Error::validation(
                        "non_positive_noise",
                        format!("noise_power must be > 0, got {n}"),
                    ));
                }
                NoiseSetting::Fixed(n)
            }
            (None, b) => {
                let b = b.unwrap_or(DEFAULT_BASELINE_INR_DB);
                if !(b.is_finite() && b > 0.0) {
                    return Err(Error::validation(
                        "non_positive_baseline_inr",
                        format!("baseline_inr_db must be > 0 dB, got {b}"),
                    ));
                }
                NoiseSetting::BaselineInrDb(b)
            }
        };

        let s = &self.search;
        check_angle(s.ue_angle_deg)?;
        let nulls_per_level = match &s.nulls_per_level {
            Some(v) => v.clone(),
            None => default_nulls_per_level(self.array.antennas, s.depth)?,
        };
        build_tree(&geometry, s.fanout, s.depth, &nulls_per_level, s.ue_angle_deg)?;
        let linear_grid = s.linear_grid.clone().unwrap_or_else(default_linear_grid);
        if linear_grid.is_empty() {
            return Err(Error::validation("empty_linear_grid", "linear_grid must not be empty"));
        }
        for &a in &linear_grid {
            check_angle(a)?;
        }

        Ok(Resolved {
            geometry,
            bs,
            lte,
            wifi,
            map,
            duty_cycle,
            backhaul,
            sim,
            nulls_per_level,
            linear_grid,
            noise,
        })
    }

    /// Copy with a different duty cycle and backhaul latency.
    pub fn with_timing(&self, duty: f64, backhaul_ms: f64) -> Self {
        let mut s = self.clone();
        s.timing.duty = duty;
        s.timing.backhaul_ms = backhaul_ms;
        s
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        let mut s = self.clone();
        s.seed = seed;
        s
    }
}

impl Resolved {
    pub fn tree(&self, scenario: &Scenario) -> Result<SearchTree> {
        build_tree(
            &self.geometry,
            scenario.search.fanout,
            scenario.search.depth,
            &self.nulls_per_level,
            scenario.search.ue_angle_deg,
        )
    }
}

/// Uniform angle in `[-60°, 60°]`, redrawn until at least 5° away from the UE.
pub fn random_user_angle<R: Rng + ?Sized>(ue_angle: f64, rng: &mut R) -> f64 {
    loop {
        let a = rng.random_range(-RANDOM_USER_RANGE_DEG..=RANDOM_USER_RANGE_DEG);
        if (a - ue_angle).abs() >= RANDOM_USER_MIN_SEPARATION_DEG {
            return a;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let s = Scenario::from_toml_str("").unwrap();
        assert_eq!(s.array.antennas, 4);
        assert_eq!(s.timing.t_csat_ms, 40);
        assert_eq!(s.channel.preset, ChannelPreset::Flat);
        assert_eq!(s.users.len(), 1);
        assert_eq!(s.users[0].angle_deg, Some(0.0));
        let r = s.resolve().unwrap();
        assert_eq!(r.nulls_per_level, vec![2, 2, 2, 1]);
        assert_eq!(r.linear_grid.len(), 165);
        assert_eq!(r.noise, NoiseSetting::BaselineInrDb(30.0));
    }

    #[test]
    fn slot_longer_than_on_phase() {
        let err =
            Scenario::from_toml_str("[timing]\nduty = 0.05\ntest_slot_ms = 4.0\nsample_count = 10\n").unwrap_err();
        assert_eq!(err.rule(), Some("test_slot_exceeds_on_phase"));
        assert!(err.is_validation());
    }

    #[test]
    fn sweep_duty_checked_too() {
        let err = Scenario::from_toml_str("[timing]\ntest_slot_ms = 4.0\nsample_count = 10\n[sweep]\nduty = [0.05]\n")
            .unwrap_err();
        assert_eq!(err.rule(), Some("test_slot_exceeds_on_phase"));
    }

    #[test]
    fn duty_out_of_range() {
        for d in ["0.0", "1.5", "-0.2"] {
            let err = Scenario::from_toml_str(&format!("[timing]\nduty = {d}\n")).unwrap_err();
            assert_eq!(err.rule(), Some("duty_out_of_range"));
        }
    }

    #[test]
    fn unknown_key_reports_line() {
        let err = Scenario::from_toml_str("seed = 1\n\n[timing]\ndutty = 0.2\n").unwrap_err();
        match err {
            Error::Parse { line, message } => {
                assert_eq!(line, Some(4));
                assert!(message.contains("dutty"), "{message}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn schedule_rules_surface() {
        let err = Scenario::from_toml_str("[search]\nnulls_per_level = [3, 2, 2, 1]\n").unwrap_err();
        assert_eq!(err.rule(), Some("nulls_exceed_dof"));
        let err = Scenario::from_toml_str("[search]\ndepth = 3\n").unwrap_err();
        assert_eq!(err.rule(), Some("nulls_per_level_required"));
        assert!(Scenario::from_toml_str("[search]\ndepth = 3\nnulls_per_level = [2, 2, 1]\n").is_ok());
    }

    #[test]
    fn noise_rules() {
        let err = Scenario::from_toml_str("[channel]\nnoise_power = 1.0\nbaseline_inr_db = 20.0\n").unwrap_err();
        assert_eq!(err.rule(), Some("noise_overdetermined"));
        let err = Scenario::from_toml_str("[channel]\nbaseline_inr_db = 0.0\n").unwrap_err();
        assert_eq!(err.rule(), Some("non_positive_baseline_inr"));
    }

    #[test]
    fn explicit_paths_and_users() {
        let src = "[[users]]\nangle_deg = 10.0\npaths = [{ angle_deg = 10.0 }, { angle_deg = -20.0, gain_db = -6.0, delay_ns = 80.0 }]\n[[users]]\n";
        let s = Scenario::from_toml_str(src).unwrap();
        assert_eq!(s.users.len(), 2);
        let p = s.users[0].paths.as_ref().unwrap()[1].to_path().unwrap();
        assert!((p.gain.norm() - 10f64.powf(-0.3)).abs() < 1e-12);
        assert!(Scenario::from_toml_str("[[users]]\nangle_deg = 95.0\n").is_err());
        assert!(Scenario::from_toml_str("users = []\n").is_err());
    }

    #[test]
    fn hash_is_stable_and_input_sensitive() {
        let a = Scenario::from_toml_str("seed = 3\n").unwrap();
        let b = Scenario::from_toml_str("seed = 3\n[array]\nantennas = 4\n").unwrap();
        assert_eq!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
        assert_ne!(a.hash(), a.with_seed(4).hash());
    }

    #[test]
    fn toml_round_trip() {
        for name in PRESET_NAMES {
            let s = Scenario::preset(name).unwrap();
            let back = Scenario::from_toml_str(&s.to_toml_string()).unwrap();
            assert_eq!(s, back);
        }
        assert_eq!(Scenario::preset("fig11").unwrap_err().rule(), Some("unknown_preset"));
    }

    #[test]
    fn random_angles_avoid_the_ue() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..1000 {
            let a = random_user_angle(-40.5, &mut rng);
            assert!((-60.0..=60.0).contains(&a));
            assert!((a + 40.5).abs() >= 5.0);
        }
    }
}
