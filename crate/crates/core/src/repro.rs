//! Plot-ready tables for the shipped figure presets.

use serde::{Serialize, Serializer};

use crate::campaign::{run_campaign, CampaignMode};
use crate::error::{Error, Result};
use crate::results::{quantize, Format, RunRecord, PRECISION};
use crate::scenario::{Mode, Scenario, UserSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Figure {
    Cable,
    PowerCorrection,
    Delay,
    MultiUser,
}

impl Figure {
    pub const ALL: [Figure; 4] = [Figure::Cable, Figure::PowerCorrection, Figure::Delay, Figure::MultiUser];

    pub fn preset(&self) -> &'static str {
        match self {
            Figure::Cable => "fig7-cable",
            Figure::PowerCorrection => "fig8-powercorr",
            Figure::Delay => "fig9-delay",
            Figure::MultiUser => "fig10-multiuser",
        }
    }
}

impl std::str::FromStr for Figure {
    type Err = Error;

    /// Accepts the preset name or its short form (`fig7`).
    fn from_str(s: &str) -> Result<Self> {
        Figure::ALL
            .into_iter()
            .find(|f| f.preset() == s || f.preset().split('-').next() == Some(s))
            .ok_or_else(|| {
                Error::validation(
                    "unknown_figure",
                    format!("unknown figure {s:?}; use fig7, fig8, fig9 or fig10"),
                )
            })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Text(String),
    Int(u64),
    Num(f64),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Text(s) => s.clone(),
            Cell::Int(i) => i.to_string(),
            Cell::Num(x) => format!("{:.PRECISION$}", quantize(*x)),
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Cell::Int(i) => Some(*i as f64),
            Cell::Num(x) => Some(*x),
            Cell::Text(_) => None,
        }
    }
}

impl Serialize for Cell {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Cell::Text(t) => s.serialize_str(t),
            Cell::Int(i) => s.serialize_u64(*i),
            Cell::Num(x) => s.serialize_f64(quantize(*x)),
        }
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

impl From<usize> for Cell {
    fn from(i: usize) -> Self {
        Cell::Int(i as u64)
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table {
    pub figure: String,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    fn new(figure: Figure, columns: &[&'static str]) -> Self {
        Self {
            figure: figure.preset().to_string(),
            columns: columns.to_vec(),
            rows: Vec::new(),
        }
    }

    fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| *c == name)
    }

    /// Row whose first cell is the text `key`.
    pub fn row(&self, key: &str) -> Option<&[Cell]> {
        self.rows
            .iter()
            .find(|r| matches!(r.first(), Some(Cell::Text(t)) if t == key))
            .map(Vec::as_slice)
    }

    pub fn get(&self, key: &str, column: &str) -> Option<f64> {
        self.row(key)?.get(self.column(column)?)?.as_f64()
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let err = |e: csv::Error| Error::Io(e.to_string());
        w.write_record(&self.columns).map_err(err)?;
        for r in &self.rows {
            w.write_record(r.iter().map(Cell::render)).map_err(err)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn to_json_string(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self).map_err(|e| Error::Io(e.to_string()))?;
        s.push('\n');
        Ok(s)
    }

    pub fn render(&self, format: Format) -> Result<String> {
        match format {
            Format::Csv => self.to_csv_string(),
            Format::Json => self.to_json_string(),
        }
    }
}

fn preset(figure: Figure, seed: Option<u64>) -> Result<Scenario> {
    let s = Scenario::preset(figure.preset())?;
    Ok(match seed {
        Some(seed) => s.with_seed(seed),
        None => s,
    })
}

/// Tree and linear search on the single-ray flat channel.
pub fn cable(seed: Option<u64>) -> Result<Table> {
    let s = preset(Figure::Cable, seed)?;
    let mut t = Table::new(
        Figure::Cable,
        &[
            "search",
            "baseline_inr_db",
            "final_inr_db",
            "delta_inr_db",
            "nulls_used",
            "tested_configs",
            "total_delay_ms",
        ],
    );
    for mode in [CampaignMode::Tree, CampaignMode::Linear] {
        let r = &run_campaign(&s, 1, mode)?[0];
        t.push(vec![
            r.mode.as_str().into(),
            r.baseline_inr_db.into(),
            r.final_inr_db.into(),
            r.delta_inr_db.into(),
            r.nulls_used.into(),
            r.tested_configs.into(),
            r.total_delay_ms.into(),
        ]);
    }
    Ok(t)
}

/// Per-channel results of the ensemble with and without power correction.
#[derive(Debug, Clone)]
pub struct PowerCorrectionEnsemble {
    pub corrected: Vec<RunRecord>,
    pub uncorrected: Vec<RunRecord>,
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    sum / n as f64
}

impl PowerCorrectionEnsemble {
    pub fn mean_delta_corrected(&self) -> f64 {
        mean(self.corrected.iter().map(|r| r.delta_inr_db))
    }

    pub fn mean_delta_uncorrected(&self) -> f64 {
        mean(self.uncorrected.iter().map(|r| r.delta_inr_db))
    }

    pub fn gap_db(&self) -> f64 {
        self.mean_delta_corrected() - self.mean_delta_uncorrected()
    }

    pub fn mean_nulls_corrected(&self) -> f64 {
        mean(self.corrected.iter().map(|r| r.nulls_used as f64))
    }

    pub fn mean_nulls_uncorrected(&self) -> f64 {
        mean(self.uncorrected.iter().map(|r| r.nulls_used as f64))
    }
}

pub fn power_correction_ensemble(scenario: &Scenario) -> Result<PowerCorrectionEnsemble> {
    let mut on = scenario.clone();
    on.search.power_correction = true;
    let mut off = scenario.clone();
    off.search.power_correction = false;
    Ok(PowerCorrectionEnsemble {
        corrected: run_campaign(&on, scenario.repeats, CampaignMode::Tree)?,
        uncorrected: run_campaign(&off, scenario.repeats, CampaignMode::Tree)?,
    })
}

pub fn power_correction(seed: Option<u64>) -> Result<Table> {
    let e = power_correction_ensemble(&preset(Figure::PowerCorrection, seed)?)?;
    let mut t = Table::new(
        Figure::PowerCorrection,
        &[
            "channel",
            "seed",
            "angle_deg",
            "delta_corrected_db",
            "delta_uncorrected_db",
            "nulls_corrected",
            "nulls_uncorrected",
        ],
    );
    for (on, off) in e.corrected.iter().zip(&e.uncorrected) {
        t.push(vec![
            on.run.to_string().as_str().into(),
            Cell::Int(on.seed),
            on.users[0].angle_deg.into(),
            on.delta_inr_db.into(),
            off.delta_inr_db.into(),
            on.nulls_used.into(),
            off.nulls_used.into(),
        ]);
    }
    t.push(vec![
        "mean".into(),
        Cell::Text(String::new()),
        Cell::Text(String::new()),
        e.mean_delta_corrected().into(),
        e.mean_delta_uncorrected().into(),
        e.mean_nulls_corrected().into(),
        e.mean_nulls_uncorrected().into(),
    ]);
    Ok(t)
}

/// Tree and linear reconfiguration delay over the sweep grid.
pub fn delay(seed: Option<u64>) -> Result<Table> {
    let s = preset(Figure::Delay, seed)?;
    let rows = run_campaign(&s, 1, CampaignMode::Sweep)?;
    let mut t = Table::new(
        Figure::Delay,
        &[
            "point",
            "duty",
            "backhaul_ms",
            "power_phase_ms",
            "tree_delay_ms",
            "linear_delay_ms",
            "speedup",
        ],
    );
    for r in &rows {
        t.push(vec![
            format!("duty={}/backhaul={}", r.duty, r.backhaul_ms).as_str().into(),
            r.duty.into(),
            r.backhaul_ms.into(),
            r.power_phase_ms.into(),
            r.total_delay_ms.into(),
            r.linear_delay_ms.into(),
            (r.linear_delay_ms / r.total_delay_ms).into(),
        ]);
    }
    Ok(t)
}

/// Multi-user delay: one user, four co-located users, and the preset layout
/// searched in parallel and one user after another.
pub fn multi_user(seed: Option<u64>) -> Result<Table> {
    let s = preset(Figure::MultiUser, seed)?;
    let mut single = s.clone();
    single.users.truncate(1);
    let mut colocated = s.clone();
    colocated.users = vec![
        UserSpec {
            angle_deg: s.users[0].angle_deg,
            paths: None,
        };
        s.users.len()
    ];
    let cases = [
        ("single", &single, Mode::Multiuser),
        ("co-located", &colocated, Mode::Multiuser),
        ("parallel", &s, Mode::Multiuser),
        ("sequential", &s, Mode::Sequential),
    ];
    let mut t = Table::new(
        Figure::MultiUser,
        &[
            "case",
            "users",
            "tested_configs",
            "total_delay_ms",
            "mean_delta_inr_db",
            "min_delta_inr_db",
            "nulls_used",
        ],
    );
    for (name, scenario, mode) in cases {
        let r = &run_campaign(scenario, 1, mode.into())?[0];
        let min = r.users.iter().map(|u| u.delta_inr_db).fold(f64::INFINITY, f64::min);
        t.push(vec![
            name.into(),
            r.users.len().into(),
            r.tested_configs.into(),
            r.total_delay_ms.into(),
            r.delta_inr_db.into(),
            min.into(),
            r.nulls_used.into(),
        ]);
    }
    Ok(t)
}

pub fn reproduce(figure: Figure, seed: Option<u64>) -> Result<Table> {
    match figure {
        Figure::Cable => cable(seed),
        Figure::PowerCorrection => power_correction(seed),
        Figure::Delay => delay(seed),
        Figure::MultiUser => multi_user(seed),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn figure_names() {
        assert_eq!("fig9".parse::<Figure>().unwrap(), Figure::Delay);
        assert_eq!("fig10-multiuser".parse::<Figure>().unwrap(), Figure::MultiUser);
        assert_eq!("fig1".parse::<Figure>().unwrap_err().rule(), Some("unknown_figure"));
    }

    #[test]
    fn delay_table() {
        let t = delay(None).unwrap();
        assert_eq!(t.rows.len(), 6);
        assert_eq!(t.get("duty=0.2/backhaul=5", "tree_delay_ms"), Some(260.0));
        assert_eq!(t.get("duty=0.2/backhaul=105", "tree_delay_ms"), Some(660.0));
        assert_eq!(t.get("duty=0.05/backhaul=105", "tree_delay_ms"), Some(1220.0));
        assert_eq!(t.get("duty=0.05/backhaul=105", "linear_delay_ms"), Some(6705.0));
        let csv = t.to_csv_string().unwrap();
        assert!(csv.starts_with("point,duty,backhaul_ms,"));
        assert!(csv.contains("1220.000000"));
    }

    #[test]
    fn multi_user_table() {
        let t = multi_user(None).unwrap();
        let d = |k| t.get(k, "total_delay_ms").unwrap();
        assert_eq!(d("single"), d("co-located"));
        assert!(d("parallel") < 0.75 * d("sequential"));
    }

    #[test]
    fn json_keeps_column_order() {
        let t = cable(None).unwrap();
        let j = t.to_json_string().unwrap();
        let v: serde_json::Value = serde_json::from_str(&j).unwrap();
        assert_eq!(v["columns"][0], "search");
        assert_eq!(v["rows"][1][0], "linear");
    }
}
