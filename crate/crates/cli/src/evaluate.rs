//! `evaluate`: reduced solutions and compliance outputs for a list of parameters.

use std::fs;
use std::io::Write;
use std::path::Path;

use nalgebra::DVector;
use wrom::rb::{read_archive, ReducedBasis};
use wrom::reduced_solve;

use crate::{fmt_f64, CliError};

pub const EVALUATIONS_CSV: &str = "evaluations.csv";

/// Reads a CSV whose header names the parameter columns (`y_1..y_K`); extra columns are ignored.
pub fn read_parameters(path: &Path, k: usize) -> Result<Vec<Vec<f64>>, CliError> {
    let text = fs::read_to_string(path)?;
    let bad = |m: String| CliError::Input(format!("{}: {m}", path.display()));
    let mut lines = text.lines().filter(|l| !l.starts_with('#') && !l.trim().is_empty());
    let header: Vec<&str> = lines.next().ok_or_else(|| bad("empty file".into()))?.split(',').collect();
    let idx: Vec<usize> = (1..=k)
        .map(|i| {
            let name = format!("y_{i}");
            header.iter().position(|h| h.trim() == name).ok_or_else(|| bad(format!("missing column {name}")))
        })
        .collect::<Result<_, _>>()?;
    lines
        .map(|line| {
            let f: Vec<&str> = line.split(',').collect();
            idx.iter()
                .map(|&i| f.get(i).and_then(|s| s.trim().parse().ok()).ok_or_else(|| bad(format!("bad row '{line}'"))))
                .collect()
        })
        .collect()
}

pub fn load_archive(path: &Path) -> Result<ReducedBasis, CliError> {
    Ok(read_archive(std::io::BufReader::new(fs::File::open(path)?))?)
}

/// Writes `y_1..y_K, N, output, estimator, u_1..u_N` per parameter.
pub fn evaluate(archive: &Path, params: &Path, n: Option<usize>, out: &Path) -> Result<usize, CliError> {
    let mut rb = load_archive(archive)?;
    if let Some(n) = n {
        rb = rb.truncated(n)?;
    }
    let ys = read_parameters(params, rb.n_params)?;
    fs::create_dir_all(out)?;
    let mut w = std::io::BufWriter::new(fs::File::create(out.join(EVALUATIONS_CSV))?);
    let mut header: Vec<String> = (1..=rb.n_params).map(|i| format!("y_{i}")).collect();
    header.extend(["N".into(), "output".into(), "estimator".into()]);
    header.extend((1..=rb.n()).map(|i| format!("u_{i}")));
    writeln!(w, "{}", header.join(","))?;
    for y in &ys {
        let u_n: DVector<f64> = reduced_solve(&rb, y)?;
        let output = rb.reduced_load(y).dot(&u_n);
        let est = rb.estimator.as_ref().map(|e| fmt_f64(e.estimate(y, &u_n))).unwrap_or_default();
        let mut cells: Vec<String> = y.iter().map(|v| fmt_f64(*v)).collect();
        cells.extend([rb.n().to_string(), fmt_f64(output), est]);
        cells.extend(u_n.iter().map(|v| fmt_f64(*v)));
        writeln!(w, "{}", cells.join(","))?;
    }
    w.flush()?;
    Ok(ys.len())
}
