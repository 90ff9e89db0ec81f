//! `compare`: aligns the error curves of several runs on `N`.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::run::{Manifest, ERRORS_CSV, MANIFEST_JSON};
use crate::{fmt_f64, CliError};

pub const COMPARISON_CSV: &str = "comparison.csv";
pub const COMPARISON_DAT: &str = "comparison.dat";

#[derive(Debug, Clone)]
pub struct RunCurve {
    pub label: String,
    pub manifest: Manifest,
    /// `N → mean_sq_error`.
    pub mean_sq: BTreeMap<usize, f64>,
}

pub fn load_run(dir: &Path) -> Result<RunCurve, CliError> {
    let bad = |m: String| CliError::Input(format!("{}: {m}", dir.display()));
    let text = fs::read_to_string(dir.join(MANIFEST_JSON)).map_err(|e| bad(e.to_string()))?;
    let manifest: Manifest = serde_json::from_str(&text).map_err(|e| bad(e.to_string()))?;
    let csv = fs::read_to_string(dir.join(ERRORS_CSV)).map_err(|e| bad(e.to_string()))?;
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().ok_or_else(|| bad("empty errors.csv".into()))?.split(',').collect();
    let col = |name: &str| header.iter().position(|h| *h == name).ok_or_else(|| bad(format!("missing column {name}")));
    let (cn, ce) = (col("N")?, col("mean_sq_error")?);
    let mut mean_sq = BTreeMap::new();
    for line in lines.filter(|l| !l.trim().is_empty()) {
        let f: Vec<&str> = line.split(',').collect();
        let n: usize = f.get(cn).and_then(|s| s.parse().ok()).ok_or_else(|| bad(format!("bad row '{line}'")))?;
        let e: f64 = f.get(ce).and_then(|s| s.parse().ok()).ok_or_else(|| bad(format!("bad row '{line}'")))?;
        mean_sq.insert(n, e);
    }
    Ok(RunCurve { label: manifest.method.clone(), manifest, mean_sq })
}

/// Checks that all runs share mesh, distribution and test set.
pub fn check_compatible(runs: &[RunCurve]) -> Result<(), CliError> {
    let r0 = &runs[0].manifest;
    for r in &runs[1..] {
        let m = &r.manifest;
        let same = m.n_sub == r0.n_sub
            && m.alpha == r0.alpha
            && m.beta == r0.beta
            && m.test_seed == r0.test_seed
            && m.test_size == r0.test_size
            && m.config.norm == r0.config.norm;
        if !same {
            return Err(CliError::Input(format!(
                "runs '{}' and '{}' differ in mesh, distribution, norm or test set",
                runs[0].label, r.label
            )));
        }
    }
    Ok(())
}

/// Writes `comparison.csv` (per-`N` errors and ratios to the first run) and `comparison.dat`
/// (the same table, whitespace separated, for plotting tools).
pub fn compare(dirs: &[PathBuf], out: &Path) -> Result<Vec<RunCurve>, CliError> {
    if dirs.len() < 2 {
        return Err(CliError::Input("compare needs at least two run directories".into()));
    }
    let mut runs = dirs.iter().map(|d| load_run(d)).collect::<Result<Vec<_>, _>>()?;
    check_compatible(&runs)?;
    // Unique labels.
    let mut seen: BTreeMap<String, usize> = BTreeMap::new();
    for r in &mut runs {
        let k = seen.entry(r.label.clone()).or_insert(0);
        *k += 1;
        if *k > 1 {
            r.label = format!("{}_{}", r.label, k);
        }
    }
    let ns: BTreeSet<usize> = runs.iter().flat_map(|r| r.mean_sq.keys().copied()).collect();
    let mut header = vec!["N".to_string()];
    header.extend(runs.iter().map(|r| format!("{}_mean_sq_error", r.label)));
    header.extend(runs.iter().map(|r| format!("ratio_{}", r.label)));
    let mut rows = Vec::new();
    for n in &ns {
        let base = runs[0].mean_sq.get(n).copied();
        let mut row: Vec<Option<f64>> = runs.iter().map(|r| r.mean_sq.get(n).copied()).collect();
        row.extend(runs.iter().map(|r| match (r.mean_sq.get(n), base) {
            (Some(e), Some(b)) if b != 0.0 => Some(e / b),
            (Some(e), Some(_)) if *e == 0.0 => Some(1.0),
            _ => None,
        }));
        rows.push((*n, row));
    }
    fs::create_dir_all(out)?;
    let mut csv = fs::File::create(out.join(COMPARISON_CSV))?;
    writeln!(csv, "{}", header.join(","))?;
    let mut dat = fs::File::create(out.join(COMPARISON_DAT))?;
    writeln!(dat, "# {}", header.join(" "))?;
    for (n, row) in rows {
        let cells: Vec<String> = row.iter().map(|v| v.map(fmt_f64).unwrap_or_default()).collect();
        writeln!(csv, "{n},{}", cells.join(","))?;
        let cells: Vec<String> = row.iter().map(|v| v.map(fmt_f64).unwrap_or_else(|| "nan".into())).collect();
        writeln!(dat, "{n} {}", cells.join(" "))?;
    }
    Ok(runs)
}
