//! Uniform linear array response, LCMV beam-plus-nulls precoding, per-RRB antenna power
//! correction and Frobenius normalisation.
//!
//! Angles are in degrees, broadside is 0°, and the valid range is [-90°, 90°].
//! Element `k` of the steering vector is `exp(j·2π·(d/λ)·k·sin θ)`. A weight vector
//! `w` produces the far-field response `wᴴa(θ)`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::phy_grid::RbScMap;

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
pub const DEFAULT_SPACING_M: f64 = 0.0718;
pub const DEFAULT_CARRIER_HZ: f64 = 2.412e9;

/// Singular values below this fraction of the largest one make a constraint set
/// degenerate.
pub const RANK_TOLERANCE: f64 = 1e-9;

/// Default floor applied to measured per-antenna powers.
pub const DEFAULT_POWER_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArrayGeometry {
    k_antennas: usize,
    spacing_m: f64,
    carrier_freq_hz: f64,
}

impl ArrayGeometry {
    pub fn new(k_antennas: usize, spacing_m: f64, carrier_freq_hz: f64) -> Result<Self> {
        if k_antennas < 2 {
            return Err(Error::validation(
                "too_few_antennas",
                format!("a ULA needs at least 2 antennas, got {k_antennas}"),
            ));
        }
        if !(spacing_m.is_finite() && spacing_m > 0.0) {
            return Err(Error::validation(
                "non_positive_spacing",
                format!("antenna spacing must be positive, got {spacing_m} m"),
            ));
        }
        if !(carrier_freq_hz.is_finite() && carrier_freq_hz > 0.0) {
            return Err(Error::validation(
                "non_positive_carrier",
                format!("carrier frequency must be positive, got {carrier_freq_hz} Hz"),
            ));
        }
        Ok(Self {
            k_antennas,
            spacing_m,
            carrier_freq_hz,
        })
    }

    /// Default 7.18 cm spacing at 2.412 GHz with `k` elements.
    pub fn with_antennas(k: usize) -> Result<Self> {
        Self::new(k, DEFAULT_SPACING_M, DEFAULT_CARRIER_HZ)
    }

    pub fn k_antennas(&self) -> usize {
        self.k_antennas
    }

    pub fn spacing_m(&self) -> f64 {
        self.spacing_m
    }

    pub fn carrier_freq_hz(&self) -> f64 {
        self.carrier_freq_hz
    }

    /// Element spacing in wavelengths, d/λ.
    pub fn spacing_wavelengths(&self) -> f64 {
        self.spacing_m * self.carrier_freq_hz / SPEED_OF_LIGHT
    }
}

impl Default for ArrayGeometry {
    fn default() -> Self {
        Self {
            k_antennas: 4,
            spacing_m: DEFAULT_SPACING_M,
            carrier_freq_hz: DEFAULT_CARRIER_HZ,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BsConfig {
    pub tx_power: f64,
    pub geometry: ArrayGeometry,
}

impl BsConfig {
    pub fn new(tx_power: f64, geometry: ArrayGeometry) -> Result<Self> {
        if !(tx_power.is_finite() && tx_power > 0.0) {
            return Err(Error::validation(
                "non_positive_tx_power",
                format!("transmit power must be positive, got {tx_power}"),
            ));
        }
        Ok(Self { tx_power, geometry })
    }
}

pub(crate) fn check_angle(theta: f64) -> Result<()> {
    if theta.is_finite() && (-90.0..=90.0).contains(&theta) {
        Ok(())
    } else {
        Err(Error::AngleOutOfRange(theta))
    }
}

/// Array response toward `theta` degrees.
pub fn steering_vector(geom: &ArrayGeometry, theta: f64) -> Result<Vec<Complex64>> {
    check_angle(theta)?;
    let phase = 2.0 * PI * geom.spacing_wavelengths() * theta.to_radians().sin();
    Ok((0..geom.k_antennas)
        .map(|k| Complex64::from_polar(1.0, phase * k as f64))
        .collect())
}

/// Precoding weights for one resource block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightVector(Vec<Complex64>);

impl WeightVector {
    pub fn new(w: Vec<Complex64>) -> Self {
        Self(w)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<Complex64> {
        self.0
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `wᴴx`
    pub fn response(&self, x: &[Complex64]) -> Complex64 {
        self.0.iter().zip(x).map(|(w, a)| w.conj() * a).sum()
    }
}

/// Minimum-norm weights with unit gain toward `beam` and zero gain toward each angle
/// in `nulls` (LCMV with identity covariance).
pub fn lcmv_weights(geom: &ArrayGeometry, beam: f64, nulls: &[f64]) -> Result<WeightVector> {
    let k = geom.k_antennas;
    let m = nulls.len() + 1;

    let mut columns = Vec::with_capacity(m * k);
    columns.extend(steering_vector(geom, beam)?);
    for &theta in nulls {
        columns.extend(steering_vector(geom, theta)?);
    }
    let c = DMatrix::from_column_slice(k, m, &columns);

    let sv = c.clone().singular_values();
    let sigma_max = sv.max();
    let sigma_min = if m > k { 0.0 } else { sv.min() };
    if m > k || sigma_min < RANK_TOLERANCE * sigma_max {
        return Err(Error::DegenerateConstraints {
            constraints: m,
            antennas: k,
            sigma_min,
            sigma_max,
        });
    }

    // C = QR, constraints Cᴴw = f, minimum-norm w = Q·R⁻ᴴ·f
    let qr = c.qr();
    let (q, r) = (qr.q(), qr.r());
    let mut f = DVector::<Complex64>::zeros(m);
    f[0] = Complex64::new(1.0, 0.0);
    let y = r
        .adjoint()
        .solve_lower_triangular(&f)
        .ok_or(Error::DegenerateConstraints {
            constraints: m,
            antennas: k,
            sigma_min,
            sigma_max,
        })?;
    let w = q * y;
    Ok(WeightVector(w.iter().copied().collect()))
}

/// Measured receive power `|h^k_s|²` of each antenna path on each WiFi subcarrier.
#[derive(Debug, Clone, PartialEq)]
pub struct PathPowerReport {
    k: usize,
    n_sc: usize,
    power: Vec<f64>,
}

impl PathPowerReport {
    /// Builds a report from row-major `[antenna][subcarrier]` powers, flooring each
    /// entry at [`DEFAULT_POWER_FLOOR`].
    pub fn new(k: usize, n_sc: usize, power: Vec<f64>) -> Result<Self> {
        Self::with_floor(k, n_sc, power, DEFAULT_POWER_FLOOR)
    }

    pub fn with_floor(k: usize, n_sc: usize, mut power: Vec<f64>, floor: f64) -> Result<Self> {
        if power.len() != k * n_sc {
            return Err(Error::DimensionMismatch(format!(
                "power report has {} entries, expected {k}x{n_sc}",
                power.len()
            )));
        }
        if !(floor > 0.0) {
            return Err(Error::validation("non_positive_floor", "power floor must be positive"));
        }
        for (i, p) in power.iter_mut().enumerate() {
            if !p.is_finite() || *p < 0.0 {
                return Err(Error::NonPositivePower {
                    antenna: i / n_sc,
                    subcarrier: i % n_sc,
                    value: *p,
                });
            }
            *p = p.max(floor);
        }
        Ok(Self { k, n_sc, power })
    }

    pub fn k_antennas(&self) -> usize {
        self.k
    }

    pub fn n_sc(&self) -> usize {
        self.n_sc
    }

    pub fn get(&self, antenna: usize, subcarrier: usize) -> f64 {
        self.power[antenna * self.n_sc + subcarrier]
    }

    /// Multiplies every entry by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        Self {
            k: self.k,
            n_sc: self.n_sc,
            power: self.power.iter().map(|p| p * c).collect(),
        }
    }
}

/// Rescales antenna `k` by `sqrt(P₀/P_k)` at the subcarrier mapped to RRB `r`, so every
/// antenna path delivers the same power as the reference antenna.
pub fn power_correct(w: &WeightVector, report: &PathPowerReport, map: &RbScMap, r: usize) -> Result<WeightVector> {
    if report.k != w.len() {
        return Err(Error::DimensionMismatch(format!(
            "report has {} antennas, weights have {}",
            report.k,
            w.len()
        )));
    }
    if map.n_sc() != report.n_sc {
        return Err(Error::DimensionMismatch(format!(
            "map covers {} subcarriers, report {}",
            map.n_sc(),
            report.n_sc
        )));
    }
    let s = map.subcarrier(r)?;
    let p0 = report.get(0, s);
    w.0.iter()
        .enumerate()
        .map(|(k, wk)| {
            let pk = report.get(k, s);
            for (antenna, value) in [(0, p0), (k, pk)] {
                if !(value > 0.0) {
                    return Err(Error::NonPositivePower {
                        antenna,
                        subcarrier: s,
                        value,
                    });
                }
            }
            Ok(wk * (p0 / pk).sqrt())
        })
        .collect::<Result<Vec<_>>>()
        .map(WeightVector)
}

pub fn normalize(w: &WeightVector) -> Result<WeightVector> {
    let n = w.norm();
    if !(n > 0.0) || !n.is_finite() {
        return Err(Error::ZeroNorm);
    }
    Ok(WeightVector(w.0.iter().map(|c| c / n).collect()))
}

/// Per-RRB precoding matrix; column `r` holds the weights for resource block `r`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMatrix {
    k: usize,
    columns: Vec<WeightVector>,
}

impl WeightMatrix {
    pub fn from_columns(columns: Vec<WeightVector>) -> Result<Self> {
        let k = columns.first().map(WeightVector::len).unwrap_or(0);
        if columns.iter().any(|c| c.len() != k) {
            return Err(Error::DimensionMismatch("columns of unequal length".into()));
        }
        Ok(Self { k, columns })
    }

    pub fn k_antennas(&self) -> usize {
        self.k
    }

    pub fn n_rrb(&self) -> usize {
        self.columns.len()
    }

    pub fn column(&self, r: usize) -> &WeightVector {
        &self.columns[r]
    }

    pub fn columns(&self) -> &[WeightVector] {
        &self.columns
    }
}

/// Expands a precomputed weight vector into a per-RRB matrix: power-corrected when a
/// report is available, then normalised column by column.
pub fn finalize_weights(
    w: &WeightVector,
    report: Option<&PathPowerReport>,
    map: &RbScMap,
    n_rrb: usize,
) -> Result<WeightMatrix> {
    if map.n_rrb() != n_rrb {
        return Err(Error::DimensionMismatch(format!(
            "map covers {} RRBs, requested {n_rrb}",
            map.n_rrb()
        )));
    }
    let columns = match report {
        Some(report) => (0..n_rrb)
            .map(|r| normalize(&power_correct(w, report, map, r)?))
            .collect::<Result<Vec<_>>>()?,
        None => vec![normalize(w)?; n_rrb],
    };
    Ok(WeightMatrix { k: w.len(), columns })
}

pub fn build_weight_matrix(
    geom: &ArrayGeometry,
    beam: f64,
    nulls: &[f64],
    report: Option<&PathPowerReport>,
    map: &RbScMap,
    n_rrb: usize,
) -> Result<WeightMatrix> {
    let w = lcmv_weights(geom, beam, nulls)?;
    finalize_weights(&w, report, map, n_rrb)
}
