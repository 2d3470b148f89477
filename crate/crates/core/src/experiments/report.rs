//! Run records written next to every output, and their aggregation into one report.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::capacity::{capacity_from_quadrature, EnergyQuadrature, QuadratureSpec};
use crate::covariance::CovarianceModel;
use crate::error::{Error, Result};
use crate::spectrum::power_law_spectrum;

use super::criteria::FINE_L_MAX;

/// File name of the record inside an output directory.
pub const RECORD_FILE: &str = "run.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub command: String,
    pub config_hash: String,
    pub seed: u64,
    pub version: String,
    /// Output file names relative to the record's directory.
    pub outputs: Vec<String>,
    pub timings: BTreeMap<String, f64>,
    #[serde(default)]
    pub summary: serde_json::Value,
}

impl RunRecord {
    pub fn new(command: &str, config_hash: &str, seed: u64) -> Self {
        RunRecord {
            command: command.to_string(),
            config_hash: config_hash.to_string(),
            seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
            outputs: Vec::new(),
            timings: BTreeMap::new(),
            summary: serde_json::Value::Null,
        }
    }

    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join(RECORD_FILE);
        std::fs::write(&path, serde_json::to_string_pretty(self)?)?;
        Ok(path)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| Error::Format(format!("{}: {e}", path.display())))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub runs: Vec<RunRecord>,
    /// Outputs listed in a record but absent on disk, as paths relative to the root.
    pub missing: Vec<String>,
}

/// Collects every `run.json` below `root`, sorted by (command, config hash, seed) so the
/// result does not depend on directory order.
pub fn aggregate(root: &Path) -> Result<Report> {
    if !root.is_dir() {
        return Err(Error::Io(std::io::Error::new(
            std::io::ErrorKind::NotFound,
            format!("{} is not a directory", root.display()),
        )));
    }
    let mut found = Vec::new();
    collect(root, &mut found)?;
    if found.is_empty() {
        return Err(Error::Format(format!(
            "no {RECORD_FILE} under {}; expected one per output directory written by a subcommand",
            root.display()
        )));
    }
    let mut runs = Vec::new();
    let mut missing = Vec::new();
    for path in found {
        let rec = RunRecord::read(&path)?;
        let dir = path.parent().unwrap_or(root);
        for out in &rec.outputs {
            if !dir.join(out).exists() {
                let rel = dir.join(out);
                missing.push(rel.strip_prefix(root).unwrap_or(&rel).display().to_string());
            }
        }
        runs.push(rec);
    }
    runs.sort_by(|a, b| (&a.command, &a.config_hash, a.seed).cmp(&(&b.command, &b.config_hash, b.seed)));
    missing.sort();
    Ok(Report { runs, missing })
}

fn collect(dir: &Path, out: &mut Vec<PathBuf>) -> Result<()> {
    let mut entries: Vec<_> = std::fs::read_dir(dir)?.collect::<std::io::Result<_>>()?;
    entries.sort_by_key(|e| e.path());
    for e in entries {
        let p = e.path();
        if p.is_dir() {
            collect(&p, out)?;
        } else if p.file_name().is_some_and(|n| n == RECORD_FILE) {
            out.push(p);
        }
    }
    Ok(())
}

/// Tables the `report` step merges across runs, by file name.
pub const TABLES: [&str; 3] = ["dimension.csv", "hitting.csv", "energy_trace.csv"];

/// Rewrites a headed CSV with leading `config_hash` and `seed` columns.
pub fn stamp_csv(path: &Path, config_hash: &str, seed: u64) -> Result<()> {
    let mut r = csv::Reader::from_path(path)?;
    let header = r.headers()?.clone();
    let rows: Vec<csv::StringRecord> = r.records().collect::<std::result::Result<_, _>>()?;
    let mut w = csv::Writer::from_path(path)?;
    let mut h = vec!["config_hash".to_string(), "seed".to_string()];
    h.extend(header.iter().map(str::to_string));
    w.write_record(&h)?;
    let seed = seed.to_string();
    for row in rows {
        let mut out = vec![config_hash, seed.as_str()];
        out.extend(row.iter());
        w.write_record(&out)?;
    }
    w.flush()?;
    Ok(())
}

/// Concatenates every run's copy of each table in [`TABLES`] into `out`, rows sorted, and
/// returns the written paths. Tables with differing headers are an error.
pub fn merge_tables(report: &Report, root: &Path, out: &Path) -> Result<Vec<PathBuf>> {
    let mut dirs = Vec::new();
    collect(root, &mut dirs)?;
    let mut written = Vec::new();
    for name in TABLES {
        let mut header: Option<csv::StringRecord> = None;
        let mut rows: Vec<Vec<String>> = Vec::new();
        for rec_path in &dirs {
            let dir = rec_path.parent().unwrap_or(root);
            if dir.starts_with(out) {
                continue;
            }
            let table = dir.join(name);
            if !table.exists() {
                continue;
            }
            let mut r = csv::Reader::from_path(&table)?;
            let h = r.headers()?.clone();
            match &header {
                Some(existing) if existing != &h => {
                    return Err(Error::Format(format!("{}: header differs from earlier {name}", table.display())));
                }
                Some(_) => {}
                None => header = Some(h),
            }
            for row in r.records() {
                rows.push(row?.iter().map(str::to_string).collect());
            }
        }
        if let Some(h) = header {
            rows.sort();
            std::fs::create_dir_all(out)?;
            let path = out.join(name);
            let mut w = csv::Writer::from_path(&path)?;
            w.write_record(&h)?;
            for row in &rows {
                w.write_record(row)?;
            }
            w.flush()?;
            written.push(path);
        }
    }
    if written.is_empty() {
        return Err(Error::Format(format!(
            "{} run records found but none wrote any of {}",
            report.runs.len(),
            TABLES.join(", ")
        )));
    }
    Ok(written)
}

/// Predictions for one `(α, d)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoryHeader {
    pub alpha: f64,
    pub d: usize,
    /// `4 − (α − 2)d`.
    pub criterion: f64,
    pub hitting_predicted: bool,
    /// `2 − (α − 2)d/2` when hitting is predicted.
    pub predicted_dimension: Option<f64>,
    /// Capacity lower bound of the cap of radius 0.1.
    pub capacity: f64,
}

/// Header rows for every `d` in `ds` at `α`. The capacity uses the power law of exponent `α`
/// at degree `2^20`, tail-corrected.
pub fn theory_header(alpha: f64, ds: &[usize]) -> Result<Vec<TheoryHeader>> {
    let model = CovarianceModel::with_tail_correction(power_law_spectrum(alpha, FINE_L_MAX)?);
    let q = EnergyQuadrature::new(&model, 0.1, &QuadratureSpec::for_model(&model))?;
    ds.iter()
        .map(|&d| {
            let criterion = 4.0 - (alpha - 2.0) * d as f64;
            let hitting = criterion > 0.0;
            Ok(TheoryHeader {
                alpha,
                d,
                criterion,
                hitting_predicted: hitting,
                predicted_dimension: hitting.then(|| 2.0 - (alpha - 2.0) * d as f64 / 2.0),
                capacity: capacity_from_quadrature(&q, d)?.value,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub config_hash: String,
    pub seed: u64,
    pub version: String,
    pub header: Vec<TheoryHeader>,
    pub criteria: Vec<super::criteria::CriterionResult>,
    /// Hard failures plus soft failures beyond twice the tolerance.
    pub blocking_failures: Vec<String>,
    pub warnings: Vec<String>,
}

impl VerifyReport {
    pub fn new(config_hash: &str, seed: u64, header: Vec<TheoryHeader>, criteria: Vec<super::criteria::CriterionResult>) -> Self {
        let mut blocking = Vec::new();
        let mut warnings = Vec::new();
        for c in criteria.iter().filter(|c| !c.passed) {
            if c.hard || c.severe {
                blocking.push(c.id.clone());
            } else {
                warnings.push(c.id.clone());
            }
        }
        VerifyReport {
            config_hash: config_hash.to_string(),
            seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
            header,
            criteria,
            blocking_failures: blocking,
            warnings,
        }
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["config_hash", "seed", "id", "name", "passed", "hard", "severe", "measured", "tolerance"])?;
        for c in &self.criteria {
            w.write_record([
                self.config_hash.clone(),
                self.seed.to_string(),
                c.id.clone(),
                c.name.clone(),
                c.passed.to_string(),
                c.hard.to_string(),
                c.severe.to_string(),
                c.measured.to_string(),
                c.tolerance.clone(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn aggregation_is_sorted_and_flags_missing_outputs() {
        let root = tempfile::tempdir().unwrap();
        for (name, seed) in [("b", 2u64), ("a", 1)] {
            let dir = root.path().join(name);
            std::fs::create_dir(&dir).unwrap();
            let mut r = RunRecord::new("simulate", "00ff", seed);
            r.outputs = vec!["field.bin".into()];
            if seed == 1 {
                std::fs::write(dir.join("field.bin"), b"x").unwrap();
            }
            r.write(&dir).unwrap();
        }
        let rep = aggregate(root.path()).unwrap();
        assert_eq!(rep.runs.iter().map(|r| r.seed).collect::<Vec<_>>(), vec![1, 2]);
        assert_eq!(rep.missing, vec![format!("b{}field.bin", std::path::MAIN_SEPARATOR)]);
    }

    #[test]
    fn merged_tables_ignore_input_order() {
        let make = |order: [u64; 3]| {
            let root = tempfile::tempdir().unwrap();
            for seed in order {
                let dir = root.path().join(format!("run{seed}"));
                std::fs::create_dir(&dir).unwrap();
                let t = dir.join("dimension.csv");
                std::fs::write(&t, format!("alpha,d,replicate,slope\n3,1,{seed},1.{seed}\n")).unwrap();
                stamp_csv(&t, "ab", seed).unwrap();
                let mut r = RunRecord::new("dimension", "ab", seed);
                r.outputs = vec!["dimension.csv".into()];
                r.write(&dir).unwrap();
            }
            let rep = aggregate(root.path()).unwrap();
            let out = root.path().join("report");
            let paths = merge_tables(&rep, root.path(), &out).unwrap();
            std::fs::read_to_string(&paths[0]).unwrap()
        };
        let a = make([1, 2, 3]);
        assert_eq!(a, make([3, 1, 2]));
        assert_eq!(a.lines().count(), 4);
        assert!(a.starts_with("config_hash,seed,alpha"));
    }

    #[test]
    fn header_predictions() {
        let h = theory_header(3.0, &[2, 4]).unwrap();
        assert_eq!(h[0].predicted_dimension, Some(1.0));
        assert!(h[0].capacity > 0.0);
        assert!(!h[1].hitting_predicted);
        assert_eq!(h[1].predicted_dimension, None);
        assert_eq!(h[1].capacity, 0.0);
    }

    #[test]
    fn empty_directory_is_an_error() {
        let root = tempfile::tempdir().unwrap();
        let e = aggregate(root.path()).unwrap_err().to_string();
        assert!(e.contains(RECORD_FILE), "{e}");
    }
}
