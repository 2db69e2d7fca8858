//! Result records and their CSV / JSON forms.
//!
//! Units: INR values and ΔINR in dB, delays in ms, angles in degrees. Floats are
//! rounded to [`PRECISION`] decimals before export, so a file loads back into the
//! exact records that produced it.

use serde::{Deserialize, Serialize};
use std::path::Path;

use crate::error::{Error, Result};
use crate::scenario::Mode;

pub const PRECISION: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

impl std::str::FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            _ => Err(Error::validation(
                "unknown_format",
                format!("unknown format {s:?}; use csv or json"),
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserResult {
    pub user: usize,
    pub angle_deg: f64,
    pub baseline_inr_db: f64,
    pub final_inr_db: f64,
    pub delta_inr_db: f64,
    /// Nulls in the user's best configuration.
    pub nulls_used: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VisitRow {
    pub user: usize,
    pub level: usize,
    pub node: String,
    pub null_angles: Vec<f64>,
    pub inr_db: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub scenario_hash: String,
    pub run: usize,
    pub seed: u64,
    pub mode: Mode,
    pub k_antennas: usize,
    pub t_csat_ms: u32,
    pub duty: f64,
    pub backhaul_ms: f64,
    pub power_correction: bool,
    /// Means over users for multi-user runs.
    pub baseline_inr_db: f64,
    pub final_inr_db: f64,
    pub delta_inr_db: f64,
    /// Nulls in the configuration finally applied.
    pub nulls_used: usize,
    pub power_phase_ms: f64,
    pub search_phase_ms: f64,
    pub total_delay_ms: f64,
    /// Delay a linear scan over the scenario's grid would take under the same timing.
    pub linear_delay_ms: f64,
    pub tested_configs: usize,
    pub users: Vec<UserResult>,
    pub visits: Vec<VisitRow>,
}

pub fn quantize(x: f64) -> f64 {
    let q: f64 = format!("{x:.PRECISION$}").parse().expect("formatted float parses");
    if q == 0.0 {
        0.0
    } else {
        q
    }
}

impl RunRecord {
    /// Copy with every float rounded to the export precision.
    pub fn quantized(&self) -> Self {
        let mut r = self.clone();
        for x in [
            &mut r.duty,
            &mut r.backhaul_ms,
            &mut r.baseline_inr_db,
            &mut r.final_inr_db,
            &mut r.delta_inr_db,
            &mut r.power_phase_ms,
            &mut r.search_phase_ms,
            &mut r.total_delay_ms,
            &mut r.linear_delay_ms,
        ] {
            *x = quantize(*x);
        }
        for u in &mut r.users {
            for x in [
                &mut u.angle_deg,
                &mut u.baseline_inr_db,
                &mut u.final_inr_db,
                &mut u.delta_inr_db,
            ] {
                *x = quantize(*x);
            }
        }
        for v in &mut r.visits {
            v.inr_db = quantize(v.inr_db);
            for a in &mut v.null_angles {
                *a = quantize(*a);
            }
        }
        r
    }
}

pub const CSV_COLUMNS: [&str; 25] = [
    "kind",
    "scenario_hash",
    "run",
    "seed",
    "mode",
    "user",
    "angle_deg",
    "level",
    "node",
    "null_angles",
    "inr_db",
    "k_antennas",
    "t_csat_ms",
    "duty",
    "backhaul_ms",
    "power_correction",
    "baseline_inr_db",
    "final_inr_db",
    "delta_inr_db",
    "nulls_used",
    "power_phase_ms",
    "search_phase_ms",
    "total_delay_ms",
    "linear_delay_ms",
    "tested_configs",
];

fn f(x: f64) -> String {
    format!("{:.PRECISION$}", quantize(x))
}

fn col(name: &str) -> usize {
    CSV_COLUMNS.iter().position(|c| *c == name).expect("known column")
}

/// CSV with one `run` row per record followed by its `user` and `visit` rows.
pub fn to_csv_string(records: &[RunRecord]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_COLUMNS).map_err(csv_err)?;
    for r in records {
        let mut row = vec![String::new(); CSV_COLUMNS.len()];
        let mut set = |name: &str, v: String| row[col(name)] = v;
        set("kind", "run".into());
        set("scenario_hash", r.scenario_hash.clone());
        set("run", r.run.to_string());
        set("seed", r.seed.to_string());
        set("mode", r.mode.as_str().into());
        set("k_antennas", r.k_antennas.to_string());
        set("t_csat_ms", r.t_csat_ms.to_string());
        set("duty", f(r.duty));
        set("backhaul_ms", f(r.backhaul_ms));
        set("power_correction", r.power_correction.to_string());
        set("baseline_inr_db", f(r.baseline_inr_db));
        set("final_inr_db", f(r.final_inr_db));
        set("delta_inr_db", f(r.delta_inr_db));
        set("nulls_used", r.nulls_used.to_string());
        set("power_phase_ms", f(r.power_phase_ms));
        set("search_phase_ms", f(r.search_phase_ms));
        set("total_delay_ms", f(r.total_delay_ms));
        set("linear_delay_ms", f(r.linear_delay_ms));
        set("tested_configs", r.tested_configs.to_string());
        w.write_record(&row).map_err(csv_err)?;

        for u in &r.users {
            let mut row = vec![String::new(); CSV_COLUMNS.len()];
            let mut set = |name: &str, v: String| row[col(name)] = v;
            set("kind", "user".into());
            set("scenario_hash", r.scenario_hash.clone());
            set("run", r.run.to_string());
            set("user", u.user.to_string());
            set("angle_deg", f(u.angle_deg));
            set("baseline_inr_db", f(u.baseline_inr_db));
            set("final_inr_db", f(u.final_inr_db));
            set("delta_inr_db", f(u.delta_inr_db));
            set("nulls_used", u.nulls_used.to_string());
            w.write_record(&row).map_err(csv_err)?;
        }
        for v in &r.visits {
            let mut row = vec![String::new(); CSV_COLUMNS.len()];
            let mut set = |name: &str, val: String| row[col(name)] = val;
            set("kind", "visit".into());
            set("scenario_hash", r.scenario_hash.clone());
            set("run", r.run.to_string());
            set("user", v.user.to_string());
            set("level", v.level.to_string());
            set("node", v.node.clone());
            set(
                "null_angles",
                v.null_angles.iter().map(|a| f(*a)).collect::<Vec<_>>().join(";"),
            );
            set("inr_db", f(v.inr_db));
            w.write_record(&row).map_err(csv_err)?;
        }
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn csv_err(e: csv::Error) -> Error {
    let line = e.position().map(|p| p.line() as usize);
    Error::Parse {
        line,
        message: e.to_string(),
    }
}

pub fn to_json_string(records: &[RunRecord]) -> Result<String> {
    let q: Vec<RunRecord> = records.iter().map(RunRecord::quantized).collect();
    let mut s = serde_json::to_string_pretty(&q).map_err(|e| Error::Io(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

pub fn render(records: &[RunRecord], format: Format) -> Result<String> {
    match format {
        Format::Csv => to_csv_string(records),
        Format::Json => to_json_string(records),
    }
}

pub fn export_results(records: &[RunRecord], format: Format, path: impl AsRef<Path>) -> Result<()> {
    let text = render(records, format)?;
    std::fs::write(path.as_ref(), text).map_err(|e| Error::Io(format!("{}: {e}", path.as_ref().display())))
}

fn parse_field<T: std::str::FromStr>(row: &csv::StringRecord, name: &str, line: usize) -> Result<T> {
    let raw = row.get(col(name)).unwrap_or("");
    raw.parse().map_err(|_| Error::Parse {
        line: Some(line),
        message: format!("bad value {raw:?} in column {name}"),
    })
}

pub fn from_csv_str(text: &str) -> Result<Vec<RunRecord>> {
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let header = rdr.headers().map_err(csv_err)?.clone();
    if header.iter().ne(CSV_COLUMNS.iter().copied()) {
        return Err(Error::Parse {
            line: Some(1),
            message: "unexpected CSV header".into(),
        });
    }
    let mut out: Vec<RunRecord> = Vec::new();
    for row in rdr.records() {
        let row = row.map_err(csv_err)?;
        let line = row.position().map(|p| p.line() as usize).unwrap_or(0);
        let orphan = || Error::Parse {
            line: Some(line),
            message: "row precedes its run row".into(),
        };
        match row.get(0).unwrap_or("") {
            "run" => {
                let mode: String = parse_field(&row, "mode", line)?;
                out.push(RunRecord {
                    scenario_hash: parse_field(&row, "scenario_hash", line)?,
                    run: parse_field(&row, "run", line)?,
                    seed: parse_field(&row, "seed", line)?,
                    mode: mode.parse()?,
                    k_antennas: parse_field(&row, "k_antennas", line)?,
                    t_csat_ms: parse_field(&row, "t_csat_ms", line)?,
                    duty: parse_field(&row, "duty", line)?,
                    backhaul_ms: parse_field(&row, "backhaul_ms", line)?,
                    power_correction: parse_field(&row, "power_correction", line)?,
                    baseline_inr_db: parse_field(&row, "baseline_inr_db", line)?,
                    final_inr_db: parse_field(&row, "final_inr_db", line)?,
                    delta_inr_db: parse_field(&row, "delta_inr_db", line)?,
                    nulls_used: parse_field(&row, "nulls_used", line)?,
                    power_phase_ms: parse_field(&row, "power_phase_ms", line)?,
                    search_phase_ms: parse_field(&row, "search_phase_ms", line)?,
                    total_delay_ms: parse_field(&row, "total_delay_ms", line)?,
                    linear_delay_ms: parse_field(&row, "linear_delay_ms", line)?,
                    tested_configs: parse_field(&row, "tested_configs", line)?,
                    users: Vec::new(),
                    visits: Vec::new(),
                });
            }
            "user" => {
                let u = UserResult {
                    user: parse_field(&row, "user", line)?,
                    angle_deg: parse_field(&row, "angle_deg", line)?,
                    baseline_inr_db: parse_field(&row, "baseline_inr_db", line)?,
                    final_inr_db: parse_field(&row, "final_inr_db", line)?,
                    delta_inr_db: parse_field(&row, "delta_inr_db", line)?,
                    nulls_used: parse_field(&row, "nulls_used", line)?,
                };
                out.last_mut().ok_or_else(orphan)?.users.push(u);
            }
            "visit" => {
                let raw = row.get(col("null_angles")).unwrap_or("");
                let null_angles = if raw.is_empty() {
                    Vec::new()
                } else {
                    raw.split(';')
                        .map(|a| {
                            a.parse().map_err(|_| Error::Parse {
                                line: Some(line),
                                message: format!("bad null angle {a:?}"),
                            })
                        })
                        .collect::<Result<Vec<f64>>>()?
                };
                let v = VisitRow {
                    user: parse_field(&row, "user", line)?,
                    level: parse_field(&row, "level", line)?,
                    node: parse_field(&row, "node", line)?,
                    null_angles,
                    inr_db: parse_field(&row, "inr_db", line)?,
                };
                out.last_mut().ok_or_else(orphan)?.visits.push(v);
            }
            other => {
                return Err(Error::Parse {
                    line: Some(line),
                    message: format!("unknown row kind {other:?}"),
                })
            }
        }
    }
    Ok(out)
}

pub fn from_json_str(text: &str) -> Result<Vec<RunRecord>> {
    serde_json::from_str(text).map_err(|e| Error::Parse {
        line: Some(e.line()),
        message: e.to_string(),
    })
}

/// Loads a results file, choosing the format from its first non-blank character.
pub fn load_results(path: impl AsRef<Path>) -> Result<Vec<RunRecord>> {
    let text =
        std::fs::read_to_string(path.as_ref()).map_err(|e| Error::Io(format!("{}: {e}", path.as_ref().display())))?;
    if text.trim_start().starts_with('[') {
        from_json_str(&text)
    } else {
        from_csv_str(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn sample() -> RunRecord {
        RunRecord {
            scenario_hash: "ab".repeat(32),
            run: 3,
            seed: 11,
            mode: Mode::Tree,
            k_antennas: 8,
            t_csat_ms: 40,
            duty: 0.2,
            backhaul_ms: 5.0,
            power_correction: true,
            baseline_inr_db: 30.000000123,
            final_inr_db: 0.0413,
            delta_inr_db: 1.0 / 3.0 * 89.0,
            nulls_used: 1,
            power_phase_ms: 40.0,
            search_phase_ms: 220.0,
            total_delay_ms: 260.0,
            linear_delay_ms: 1745.0,
            tested_configs: 12,
            users: vec![UserResult {
                user: 0,
                angle_deg: 1.0,
                baseline_inr_db: 30.0,
                final_inr_db: 0.0413,
                delta_inr_db: 29.9587,
                nulls_used: 1,
            }],
            visits: vec![
                VisitRow {
                    user: 0,
                    level: 1,
                    node: "t:0".into(),
                    null_angles: vec![-85.0, -75.0, -65.0, -55.0, -45.0, -35.0],
                    inr_db: 29.1234567891,
                },
                VisitRow {
                    user: 0,
                    level: 4,
                    node: "t:1.1.1.1".into(),
                    null_angles: vec![2.0 / 3.0],
                    inr_db: -0.0000001,
                },
            ],
        }
    }

    #[test]
    fn empty_set_is_header_only() {
        let csv = to_csv_string(&[]).unwrap();
        assert_eq!(csv.lines().count(), 1);
        assert_eq!(csv.trim_end(), CSV_COLUMNS.join(","));
        assert_eq!(from_csv_str(&csv).unwrap(), vec![]);
        assert_eq!(from_json_str(&to_json_string(&[]).unwrap()).unwrap(), vec![]);
    }

    #[test]
    fn json_then_csv_round_trip() {
        let recs = vec![sample(), RunRecord { run: 4, ..sample() }];
        let from_json = from_json_str(&to_json_string(&recs).unwrap()).unwrap();
        let expected: Vec<RunRecord> = recs.iter().map(RunRecord::quantized).collect();
        assert_eq!(from_json, expected);
        let from_csv = from_csv_str(&to_csv_string(&from_json).unwrap()).unwrap();
        assert_eq!(from_csv, expected);
        assert_eq!(to_csv_string(&from_csv).unwrap(), to_csv_string(&recs).unwrap());
    }

    #[test]
    fn fixed_precision_in_csv() {
        let csv = to_csv_string(&[sample()]).unwrap();
        assert!(csv.contains(",30.000000,"));
        assert!(csv.contains(",29.123457,"));
        assert!(csv.contains("0.666667"));
        assert!(!csv.contains("-0.000000"));
    }

    #[test]
    fn file_round_trip_and_bad_path() {
        let dir = tempfile::tempdir().unwrap();
        for (fmt, name) in [(Format::Csv, "r.csv"), (Format::Json, "r.json")] {
            let p = dir.path().join(name);
            export_results(&[sample()], fmt, &p).unwrap();
            assert_eq!(load_results(&p).unwrap(), vec![sample().quantized()]);
        }
        let bad = dir.path().join("missing").join("r.csv");
        assert!(matches!(
            export_results(&[sample()], Format::Csv, bad),
            Err(Error::Io(_))
        ));
    }

    #[test]
    fn malformed_csv_is_a_parse_error() {
        let mut csv = to_csv_string(&[sample()]).unwrap();
        csv = csv.replacen(",tree,", ",bogus,", 1);
        assert!(from_csv_str(&csv).is_err());
        let orphan = format!(
            "{}\nvisit{}\n",
            CSV_COLUMNS.join(","),
            ",".repeat(CSV_COLUMNS.len() - 1)
        );
        assert!(matches!(from_csv_str(&orphan), Err(Error::Parse { .. })));
    }
}
