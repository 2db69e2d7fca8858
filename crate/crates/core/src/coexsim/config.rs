use serde::{Deserialize, Serialize};

use crate::channel::Measurement;
use crate::error::{Error, Result};

pub const ALLOWED_T_CSAT_MS: [u32; 3] = [40, 80, 160];
pub const PUNCTURE_WINDOW_MS: u32 = 20;
pub const MIN_PUNCTURE_MS: u32 = 2;
pub const SAMPLE_RATE_RANGE_HZ: (f64, f64) = (5_000.0, 50_000.0);

pub(crate) fn ms_to_us(ms: f64) -> u64 {
    (ms * 1000.0).round() as u64
}

/// CSAT duty cycle: `T_on = duty·T_csat`, with a transmission gap of `puncture_ms`
/// closing every 20 ms window of the on phase.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DutyCycleConfig {
    t_csat_ms: u32,
    duty: f64,
    puncture_ms: u32,
}

impl DutyCycleConfig {
    pub fn new(t_csat_ms: u32, duty: f64, puncture_ms: u32) -> Result<Self> {
        if !ALLOWED_T_CSAT_MS.contains(&t_csat_ms) {
            return Err(Error::validation(
                "t_csat_not_allowed",
                format!("T_csat must be one of {ALLOWED_T_CSAT_MS:?} ms, got {t_csat_ms}"),
            ));
        }
        if !(duty > 0.0 && duty <= 1.0) {
            return Err(Error::validation(
                "duty_out_of_range",
                format!("duty must lie in (0, 1], got {duty}"),
            ));
        }
        if !(MIN_PUNCTURE_MS..PUNCTURE_WINDOW_MS).contains(&puncture_ms) {
            return Err(Error::validation(
                "puncture_out_of_range",
                format!("puncturing must be in [{MIN_PUNCTURE_MS}, {PUNCTURE_WINDOW_MS}) ms, got {puncture_ms}"),
            ));
        }
        Ok(Self {
            t_csat_ms,
            duty,
            puncture_ms,
        })
    }

    pub fn t_csat_ms(&self) -> u32 {
        self.t_csat_ms
    }

    pub fn duty(&self) -> f64 {
        self.duty
    }

    pub fn puncture_ms(&self) -> u32 {
        self.puncture_ms
    }

    pub fn t_csat_us(&self) -> u64 {
        u64::from(self.t_csat_ms) * 1000
    }

    pub fn t_on_us(&self) -> u64 {
        (self.duty * self.t_csat_us() as f64).round() as u64
    }

    pub fn t_off_us(&self) -> u64 {
        self.t_csat_us() - self.t_on_us()
    }

    /// Transmission intervals of the on phase, as offsets from the cycle start.
    /// The gap sits at the end of each 20 ms window; a truncated final window only
    /// loses the part of the gap it actually overlaps.
    pub fn on_segments(&self) -> Vec<(u64, u64)> {
        let window = u64::from(PUNCTURE_WINDOW_MS) * 1000;
        let gap = u64::from(self.puncture_ms) * 1000;
        let t_on = self.t_on_us();
        let mut out = Vec::new();
        let mut start = 0;
        while start < t_on {
            let end = (start + window - gap).min(t_on);
            if end > start {
                out.push((start, end));
            }
            start += window;
        }
        out
    }

    pub fn effective_on_us(&self) -> u64 {
        self.on_segments().iter().map(|(a, b)| b - a).sum()
    }
}

impl Default for DutyCycleConfig {
    fn default() -> Self {
        Self {
            t_csat_ms: 40,
            duty: 0.2,
            puncture_ms: MIN_PUNCTURE_MS,
        }
    }
}

/// One-way latency of the wired control link.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BackhaulConfig {
    delay_ms: f64,
}

impl BackhaulConfig {
    pub fn new(delay_ms: f64) -> Result<Self> {
        if !(delay_ms.is_finite() && delay_ms >= 0.0) {
            return Err(Error::validation(
                "negative_backhaul_delay",
                format!("backhaul delay must be >= 0, got {delay_ms}"),
            ));
        }
        Ok(Self { delay_ms })
    }

    pub fn delay_ms(&self) -> f64 {
        self.delay_ms
    }

    pub fn delay_us(&self) -> u64 {
        ms_to_us(self.delay_ms)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    test_slot_ms: f64,
    sample_rate_hz: f64,
    measurement: Measurement,
    seed: u64,
}

impl SimConfig {
    pub fn new(test_slot_ms: f64, sample_rate_hz: f64, measurement: Measurement, seed: u64) -> Result<Self> {
        if !(test_slot_ms.is_finite() && ms_to_us(test_slot_ms) > 0) {
            return Err(Error::validation(
                "non_positive_test_slot",
                format!("test slot must be positive, got {test_slot_ms} ms"),
            ));
        }
        let (lo, hi) = SAMPLE_RATE_RANGE_HZ;
        if !(sample_rate_hz >= lo && sample_rate_hz <= hi) {
            return Err(Error::validation(
                "sample_rate_out_of_range",
                format!("sample rate must lie in [{lo}, {hi}] Hz, got {sample_rate_hz}"),
            ));
        }
        if measurement.sample_count == 0 {
            return Err(Error::validation("zero_sample_count", "sample_count must be >= 1"));
        }
        if !(measurement.noise_jitter.is_finite() && measurement.noise_jitter >= 0.0) {
            return Err(Error::validation(
                "negative_noise_jitter",
                format!("noise jitter must be >= 0, got {}", measurement.noise_jitter),
            ));
        }
        let capacity = (sample_rate_hz * test_slot_ms / 1000.0 + 1e-9).floor() as usize;
        if measurement.sample_count > capacity {
            return Err(Error::validation(
                "samples_exceed_test_slot",
                format!(
                    "{} samples at {sample_rate_hz} Hz do not fit a {test_slot_ms} ms slot (max {capacity})",
                    measurement.sample_count
                ),
            ));
        }
        Ok(Self {
            test_slot_ms,
            sample_rate_hz,
            measurement,
            seed,
        })
    }

    pub fn test_slot_ms(&self) -> f64 {
        self.test_slot_ms
    }

    pub fn test_slot_us(&self) -> u64 {
        ms_to_us(self.test_slot_ms)
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.sample_rate_hz
    }

    pub fn measurement(&self) -> Measurement {
        self.measurement
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            test_slot_ms: 2.0,
            sample_rate_hz: 50_000.0,
            measurement: Measurement::default(),
            seed: 0,
        }
    }
}

/// Offsets of every test slot that fits the on phase, in transmission order. Slots
/// never straddle a puncture gap.
pub fn slot_offsets(dc: &DutyCycleConfig, sim: &SimConfig) -> Vec<u64> {
    let tau = sim.test_slot_us();
    dc.on_segments()
        .into_iter()
        .flat_map(|(a, b)| (0..(b - a) / tau).map(move |i| a + i * tau))
        .collect()
}

/// Test slots per CSAT cycle, without any fanout cap.
pub fn slots_per_cycle(dc: &DutyCycleConfig, sim: &SimConfig) -> Result<usize> {
    let n = slot_offsets(dc, sim).len();
    if n == 0 {
        return Err(Error::validation(
            "test_slot_exceeds_on_phase",
            format!(
                "a {} ms test slot does not fit the {} ms usable on phase",
                sim.test_slot_ms(),
                dc.effective_on_us() as f64 / 1000.0
            ),
        ));
    }
    Ok(n)
}

/// Configurations tested per cycle: `min(fanout, ⌊T_on,eff/τ_s⌋)`.
pub fn configs_per_cycle(dc: &DutyCycleConfig, sim: &SimConfig, fanout: usize) -> Result<usize> {
    Ok(slots_per_cycle(dc, sim)?.min(fanout))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dc(duty: f64) -> DutyCycleConfig {
        DutyCycleConfig::new(40, duty, 2).unwrap()
    }

    #[test]
    fn cycle_counts() {
        let sim = SimConfig::default();
        assert_eq!(configs_per_cycle(&dc(0.05), &sim, 3).unwrap(), 1);
        assert_eq!(configs_per_cycle(&dc(0.2), &sim, 3).unwrap(), 3);
        assert_eq!(slots_per_cycle(&dc(0.2), &sim).unwrap(), 4);
        assert_eq!(configs_per_cycle(&dc(1.0), &sim, 3).unwrap(), 3);
        assert_eq!(slots_per_cycle(&dc(1.0), &sim).unwrap(), 18);
    }

    #[test]
    fn segments() {
        assert_eq!(dc(0.05).on_segments(), vec![(0, 2000)]);
        assert_eq!(dc(0.5).on_segments(), vec![(0, 18000)]);
        assert_eq!(dc(1.0).on_segments(), vec![(0, 18000), (20000, 38000)]);
        // 30 ms on: the second window ends at 30 ms, before its gap would start
        let d = DutyCycleConfig::new(40, 0.75, 2).unwrap();
        assert_eq!(d.on_segments(), vec![(0, 18000), (20000, 30000)]);
        assert_eq!(d.t_on_us() + d.t_off_us(), 40000);
    }

    #[test]
    fn slot_exceeds_on_phase() {
        let sim = SimConfig::new(4.0, 50_000.0, Measurement::default(), 0).unwrap();
        let err = configs_per_cycle(&dc(0.05), &sim, 3).unwrap_err();
        assert_eq!(err.rule(), Some("test_slot_exceeds_on_phase"));
    }

    #[test]
    fn hundred_samples_fill_a_two_ms_slot() {
        assert!(SimConfig::new(2.0, 50_000.0, Measurement::default(), 0).is_ok());
        let m = Measurement {
            sample_count: 101,
            noise_jitter: 0.1,
        };
        assert_eq!(
            SimConfig::new(2.0, 50_000.0, m, 0).unwrap_err().rule(),
            Some("samples_exceed_test_slot")
        );
        let m = Measurement {
            sample_count: 10,
            noise_jitter: 0.1,
        };
        assert!(SimConfig::new(2.0, 5_000.0, m, 0).is_ok());
    }

    #[test]
    fn config_rules() {
        let rule = |r: Result<DutyCycleConfig>| r.unwrap_err().rule();
        assert_eq!(rule(DutyCycleConfig::new(50, 0.2, 2)), Some("t_csat_not_allowed"));
        assert_eq!(rule(DutyCycleConfig::new(40, 0.0, 2)), Some("duty_out_of_range"));
        assert_eq!(rule(DutyCycleConfig::new(40, 1.01, 2)), Some("duty_out_of_range"));
        assert_eq!(rule(DutyCycleConfig::new(40, 0.2, 1)), Some("puncture_out_of_range"));
        assert!(BackhaulConfig::new(-1.0).is_err());
        assert!(SimConfig::new(2.0, 60_000.0, Measurement::default(), 0).is_err());
    }

    #[test]
    fn usable_time_grows_with_duty() {
        let mut prev = 0;
        for pct in 1..=100 {
            let e = dc(pct as f64 / 100.0).effective_on_us();
            assert!(e >= prev);
            prev = e;
        }
    }
}
