//! CSV and JSON files: signal curves, fringe profiles, fluence-count data
//! and run metadata.
//!
//! Every CSV starts with a `# otima <version> scenario_sha256=<hex>` comment
//! line when it was produced from a scenario; readers skip `#` lines.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::analysis::FluencePoint;
use crate::error::{Error, Result};
use crate::interferometer::{SignalCurve, SignalRecord};
use crate::scenario::{serialize_scenario, Derived, Scenario};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

const NS: f64 = 1e-9;
const PER_CM2: f64 = 1e4;

/// SHA-256 of the canonical TOML form.
pub fn scenario_hash(scenario: &Scenario) -> String {
    hex::encode(Sha256::digest(serialize_scenario(scenario).as_bytes()))
}

fn comment_line(hash: Option<&str>) -> String {
    match hash {
        Some(h) => format!("# otima {VERSION} scenario_sha256={h}\n"),
        None => format!("# otima {VERSION}\n"),
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

fn fmt(v: f64) -> String {
    format!("{v:.12e}")
}

/// One or more curves; a `model` column is added when labels are given.
pub fn write_signal_csv<W: Write>(
    mut out: W,
    curves: &[(Option<&str>, &SignalCurve)],
    hash: Option<&str>,
) -> Result<()> {
    out.write_all(comment_line(hash).as_bytes())
        .map_err(|e| Error::io("<csv>", e))?;
    let labelled = curves.iter().any(|(label, _)| label.is_some());
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["tau_ns", "S_res", "S_off", "S_N", "sigma_SN"];
    if labelled {
        header.push("model");
    }
    w.write_record(&header)?;
    for (label, curve) in curves {
        for r in curve.records() {
            let mut row = vec![fmt(r.tau / NS), fmt(r.s_res), fmt(r.s_off), fmt(r.s_n), fmt(r.sigma_sn)];
            if labelled {
                row.push(label.unwrap_or("").to_string());
            }
            w.write_record(&row)?;
        }
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

pub fn write_signal_csv_file(path: &Path, curves: &[(Option<&str>, &SignalCurve)], hash: Option<&str>) -> Result<()> {
    write_signal_csv(create(path)?, curves, hash).map_err(|e| relabel(e, path))
}

fn relabel(e: Error, path: &Path) -> Error {
    match e {
        Error::Io { source, .. } => Error::io(path, source),
        other => other,
    }
}

fn parse_error(path: &str, line: u64, reason: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_string(),
        line,
        reason: reason.into(),
    }
}

fn reader<R: Read>(input: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(input)
}

fn column(headers: &csv::StringRecord, name: &str, path: &str) -> Result<usize> {
    headers
        .iter()
        .position(|h| h == name)
        .ok_or_else(|| parse_error(path, 1, format!("missing column `{name}`")))
}

fn field(record: &csv::StringRecord, index: usize, name: &str, path: &str) -> Result<f64> {
    let line = record.position().map_or(0, |p| p.line());
    let text = record
        .get(index)
        .ok_or_else(|| parse_error(path, line, format!("missing value for `{name}`")))?;
    text.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| parse_error(path, line, format!("`{name}`: expected a number, got `{text}`")))
}

fn csv_error(e: csv::Error, path: &str) -> Error {
    let line = e.position().map_or(0, |p| p.line());
    parse_error(path, line, e.to_string())
}

/// Signal curve; with a `model` column, `model` selects which rows to keep.
pub fn read_signal_csv<R: Read>(input: R, path: &str, model: Option<&str>) -> Result<SignalCurve> {
    let mut rdr = reader(input);
    let headers = rdr.headers().map_err(|e| csv_error(e, path))?.clone();
    let idx: Vec<usize> = ["tau_ns", "S_res", "S_off", "S_N", "sigma_SN"]
        .iter()
        .map(|name| column(&headers, name, path))
        .collect::<Result<_>>()?;
    let model_col = headers.iter().position(|h| h == "model");
    let mut records = Vec::new();
    let mut labels = std::collections::BTreeSet::new();
    for row in rdr.records() {
        let row = row.map_err(|e| csv_error(e, path))?;
        if let Some(c) = model_col {
            let label = row.get(c).unwrap_or("");
            labels.insert(label.to_string());
            if model.is_some_and(|m| m != label) {
                continue;
            }
        }
        let v = |i: usize, name: &str| field(&row, idx[i], name, path);
        records.push(SignalRecord {
            tau: v(0, "tau_ns")? * NS,
            s_res: v(1, "S_res")?,
            s_off: v(2, "S_off")?,
            s_n: v(3, "S_N")?,
            sigma_sn: v(4, "sigma_SN")?,
        });
    }
    if model.is_none() && labels.len() > 1 {
        return Err(parse_error(
            path,
            1,
            format!("file holds several models {labels:?}; select one"),
        ));
    }
    if records.is_empty() {
        return Err(parse_error(path, 1, "no data rows"));
    }
    SignalCurve::new(records)
}

pub fn read_signal_csv_file(path: &Path, model: Option<&str>) -> Result<SignalCurve> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_signal_csv(file, &path.display().to_string(), model)
}

/// Fluence-count data: columns `fluence_per_cm2`, `counts`; fluence is
/// converted to photons/m².
pub fn read_fluence_csv<R: Read>(input: R, path: &str) -> Result<Vec<FluencePoint>> {
    let mut rdr = reader(input);
    let headers = rdr.headers().map_err(|e| csv_error(e, path))?.clone();
    let f = column(&headers, "fluence_per_cm2", path)?;
    let c = column(&headers, "counts", path)?;
    let mut points = Vec::new();
    for row in rdr.records() {
        let row = row.map_err(|e| csv_error(e, path))?;
        let fluence = field(&row, f, "fluence_per_cm2", path)?;
        if fluence < 0.0 {
            let line = row.position().map_or(0, |p| p.line());
            return Err(parse_error(path, line, "fluence must be non-negative"));
        }
        points.push(FluencePoint {
            fluence: fluence * PER_CM2,
            counts: field(&row, c, "counts", path)?,
        });
    }
    Ok(points)
}

pub fn read_fluence_csv_file(path: &Path) -> Result<Vec<FluencePoint>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_fluence_csv(file, &path.display().to_string())
}

pub fn write_fluence_csv<W: Write>(out: W, points: &[FluencePoint]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["fluence_per_cm2", "counts"])?;
    for p in points {
        w.write_record([fmt(p.fluence / PER_CM2), fmt(p.counts)])?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

/// Signal over static grating displacement: `delta_x_nm, S, model`.
pub fn write_profile_csv<W: Write>(mut out: W, profiles: &[(&str, &[(f64, f64)])], hash: Option<&str>) -> Result<()> {
    out.write_all(comment_line(hash).as_bytes())
        .map_err(|e| Error::io("<csv>", e))?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["delta_x_nm", "S", "model"])?;
    for (label, rows) in profiles {
        for (dx, s) in rows.iter() {
            w.write_record([fmt(dx / NS), fmt(*s), label.to_string()])?;
        }
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

/// Flags for every approximation that shaped an output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApproximationFlags {
    pub near_resonant_series: bool,
    pub g1_absorptive: bool,
    pub gaussian_momentum_distribution: bool,
    pub speed_quadrature_nodes: usize,
    pub coherent_transmission: bool,
}

impl ApproximationFlags {
    pub fn for_scenario(scenario: &Scenario) -> Self {
        ApproximationFlags {
            near_resonant_series: true,
            g1_absorptive: scenario.g1_absorptive,
            gaussian_momentum_distribution: true,
            speed_quadrature_nodes: if scenario.beam.relative_speed_spread > 0.0 {
                11
            } else {
                1
            },
            coherent_transmission: true,
        }
    }
}

/// JSON sidecar written next to every output.
#[derive(Debug, Clone, Serialize)]
pub struct Metadata {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub scenario_sha256: String,
    pub scenario: Scenario,
    pub derived: Derived,
    pub approximations: ApproximationFlags,
    /// seconds since the Unix epoch; the only non-deterministic field
    pub created_unix: u64,
    #[serde(skip_serializing_if = "serde_json::Value::is_null")]
    pub extra: serde_json::Value,
}

impl Metadata {
    pub fn new(command: impl Into<String>, scenario: &Scenario) -> Result<Self> {
        Ok(Metadata {
            tool: "otima",
            version: VERSION,
            command: command.into(),
            scenario_sha256: scenario_hash(scenario),
            scenario: scenario.clone(),
            derived: scenario.derived()?,
            approximations: ApproximationFlags::for_scenario(scenario),
            created_unix: std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map_or(0, |d| d.as_secs()),
            extra: serde_json::Value::Null,
        })
    }
}

/// `out.csv` → `out.meta.json`.
pub fn sidecar_path(path: &Path) -> std::path::PathBuf {
    path.with_extension("meta.json")
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interferometer::resonance_scan;
    use crate::scenario::load_scenario;

    fn argon() -> Scenario {
        load_scenario(include_str!("../scenarios/argon_n1.toml")).unwrap()
    }

    #[test]
    fn signal_round_trip() {
        let s = argon();
        let curve = resonance_scan(&s).unwrap();
        let mut buf = Vec::new();
        write_signal_csv(&mut buf, &[(None, &curve)], Some(&scenario_hash(&s))).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("# otima "));
        assert!(text.lines().nth(1).unwrap() == "tau_ns,S_res,S_off,S_N,sigma_SN");
        let back = read_signal_csv(text.as_bytes(), "mem", None).unwrap();
        for (a, b) in curve.records().iter().zip(back.records()) {
            assert!((a.tau - b.tau).abs() < 1e-20);
            assert!((a.s_n - b.s_n).abs() < 1e-12);
        }
    }

    #[test]
    fn model_column_selects_rows() {
        let s = argon();
        let q = resonance_scan(&s).unwrap();
        let mut buf = Vec::new();
        write_signal_csv(&mut buf, &[(Some("quantum"), &q), (Some("classical"), &q)], None).unwrap();
        assert!(read_signal_csv(buf.as_slice(), "mem", None).is_err());
        let back = read_signal_csv(buf.as_slice(), "mem", Some("classical")).unwrap();
        assert_eq!(back.len(), q.len());
    }

    #[test]
    fn parse_errors_carry_lines() {
        let text = "tau_ns,S_res,S_off,S_N,sigma_SN\n0,1,1,0,0\n10,1,1,oops,0\n";
        match read_signal_csv(text.as_bytes(), "data.csv", None) {
            Err(Error::Parse { path, line, reason }) => {
                assert_eq!(path, "data.csv");
                assert_eq!(line, 3);
                assert!(reason.contains("S_N"), "{reason}");
            }
            other => panic!("{other:?}"),
        }
        let missing = "tau_ns,S_res\n0,1\n";
        assert!(matches!(
            read_signal_csv(missing.as_bytes(), "m", None),
            Err(Error::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn fluence_units() {
        let text = "fluence_per_cm2,counts\n1e15,10\n2e15,18\n";
        let points = read_fluence_csv(text.as_bytes(), "f").unwrap();
        assert_eq!(points[0].fluence, 1e19);
        assert_eq!(points[1].counts, 18.0);
        let bad = "fluence_per_cm2,counts\n1e15,10\n-1,2\n";
        assert!(matches!(
            read_fluence_csv(bad.as_bytes(), "f"),
            Err(Error::Parse { line: 3, .. })
        ));
    }

    #[test]
    fn hash_tracks_the_canonical_form() {
        let s = argon();
        let h = scenario_hash(&s);
        assert_eq!(h.len(), 64);
        let mut t = s.clone();
        t.beam.speed = 601.0;
        assert_ne!(h, scenario_hash(&t));
        let reparsed = load_scenario(&serialize_scenario(&s)).unwrap();
        assert_eq!(h, scenario_hash(&reparsed));
    }
}
