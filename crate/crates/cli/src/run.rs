//! `build`: one configuration → ROM archive, error curve, logs and manifest.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;
use std::time::Instant;

use log::{info, warn};
use serde::{Deserialize, Serialize};
use wrom::fem::{assemble_affine, Lame, TruthSpace};
use wrom::online::TestSet;
use wrom::pod::{pod_build, RANGE_TOL};
use wrom::rb::{greedy_build, write_archive, GreedyOptions, ReducedBasis, StopReason, DEPENDENCE_TOL};
use wrom::RomError;

use crate::config::{ExperimentConfig, Norm};
use crate::{fmt_f64, CliError};

pub const ERRORS_CSV: &str = "errors.csv";
pub const MANIFEST_JSON: &str = "manifest.json";
pub const ARCHIVE_BIN: &str = "rom.bin";
pub const TRAINING_CSV: &str = "training.csv";
pub const GREEDY_LOG_CSV: &str = "greedy_log.csv";
pub const SPECTRUM_CSV: &str = "spectrum.csv";
pub const CONFIG_TOML: &str = "config.toml";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Breakdown {
    /// Basis size at which the reduced system was singular.
    pub n: usize,
    pub y: Vec<f64>,
    pub cond: f64,
    /// `offline` (during the greedy sweep) or `evaluation` (on the test set).
    pub stage: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub eps_tol: f64,
    pub n_max: usize,
    pub dependence_tol: f64,
    pub singular_cond_limit: f64,
    pub correlation_range_tol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WallTimes {
    pub training_set: f64,
    pub offline: f64,
    pub test_truth: f64,
    pub evaluation: f64,
    pub total: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub method: String,
    pub weight: String,
    pub n_sub: usize,
    pub n_dof: usize,
    pub alpha: f64,
    pub beta: f64,
    pub training_seed: Option<u64>,
    pub training_provenance: String,
    pub training_size: usize,
    pub training_weight_sum: f64,
    pub test_seed: u64,
    pub test_size: usize,
    pub tolerances: Tolerances,
    pub alpha_bar: Option<f64>,
    pub gamma_bar: Option<f64>,
    pub n_built: usize,
    pub n_curve: usize,
    pub stop: String,
    pub breakdown: Option<Breakdown>,
    pub wall_time_s: WallTimes,
    pub config: ExperimentConfig,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub manifest: Manifest,
    pub rb: ReducedBasis,
}

impl RunOutcome {
    pub fn exit_code(&self) -> i32 {
        if self.manifest.breakdown.is_some() { crate::EXIT_BREAKDOWN } else { 0 }
    }
}

fn csv_file(path: &Path) -> Result<BufWriter<File>, CliError> {
    Ok(BufWriter::new(File::create(path)?))
}

fn stop_tag(s: &StopReason) -> &'static str {
    match s {
        StopReason::Tolerance => "tolerance",
        StopReason::MaxSize => "max_size",
        StopReason::Exhausted => "training_set_exhausted",
        StopReason::Breakdown { .. } => "breakdown",
    }
}

/// Builds the reduced model described by `cfg` and writes all artifacts into `out`.
///
/// A singular reduced system is not an error here: the curve is cut at the last good `N` and
/// the manifest carries the breakdown; [`RunOutcome::exit_code`] reports it.
pub fn run(cfg: &ExperimentConfig, out: &Path) -> Result<RunOutcome, CliError> {
    cfg.validate()?;
    let plan = cfg.plan()?;
    let t_total = Instant::now();
    fs::create_dir_all(out)?;
    fs::write(out.join(CONFIG_TOML), cfg.to_toml())?;

    let mut space = TruthSpace::elasticity(cfg.n_sub)?;
    let ops = assemble_affine(&space, Lame::benchmark())?;
    if cfg.norm == Norm::Energy {
        space.set_inner_product(ops.reference_operator())?;
    }
    let dist = cfg.distribution();

    let t = Instant::now();
    let training = cfg.training_set()?;
    training.write_csv(csv_file(&out.join(TRAINING_CSV))?)?;
    let t_training = t.elapsed().as_secs_f64();
    info!("{}: {} training nodes ({})", cfg.method.tag(), training.len(), training.provenance);

    let t = Instant::now();
    let mut breakdown = None;
    let (mut rb, stop) = if cfg.method.is_greedy() {
        let opts = GreedyOptions {
            weight: plan.weight,
            eps_tol: cfg.eps_tol,
            n_max: cfg.n_max,
            first_pick: cfg.first_pick,
            cond_limit: cfg.singular_cond_limit,
        };
        let outcome = greedy_build(&ops, &space, &training, &dist, &opts)?;
        if let StopReason::Breakdown { n, y, cond } = &outcome.stop {
            breakdown = Some(Breakdown { n: *n, y: y.clone(), cond: *cond, stage: "offline".into() });
        }
        write_greedy_log(&outcome.rb, &out.join(GREEDY_LOG_CSV))?;
        let tag = stop_tag(&outcome.stop);
        (outcome.rb, tag.to_string())
    } else {
        let mut rb = pod_build(&ops, &space, &training, cfg.eps_tol, cfg.n_max)?;
        rb.cond_limit = cfg.singular_cond_limit;
        write_spectrum(&rb, &out.join(SPECTRUM_CSV))?;
        let tag = if rb.n() >= cfg.n_max { "max_size" } else { "energy" };
        (rb, tag.to_string())
    };
    let t_offline = t.elapsed().as_secs_f64();
    rb.meta.method = cfg.method.tag().into();
    rb.meta.weight = plan.weight.tag().into();
    if cfg.uses_training_seed() {
        rb.meta.seeds.insert("training".into(), cfg.training_seed);
    }
    rb.meta.seeds.insert("test".into(), cfg.test_seed);
    let n_built = rb.n();

    let t = Instant::now();
    let test = TestSet::draw(&ops, &space, &dist, cfg.test_size, cfg.test_seed)?;
    let t_test = t.elapsed().as_secs_f64();

    let t = Instant::now();
    let mut w = csv_file(&out.join(ERRORS_CSV))?;
    writeln!(w, "method,alpha,beta,N,mean_sq_error,max_error,estimator_mean_sq,seed")?;
    let mut n_curve = 0;
    for n in 1..=n_built {
        let sub = rb.truncated(n)?;
        match test.errors(&sub, &space) {
            Ok(s) => {
                writeln!(
                    w,
                    "{},{},{},{},{},{},{},{}",
                    cfg.method.tag(),
                    cfg.alpha,
                    cfg.beta,
                    n,
                    fmt_f64(s.mean_sq),
                    fmt_f64(s.max_sq),
                    s.estimator_mean_sq.map(fmt_f64).unwrap_or_default(),
                    cfg.test_seed
                )?;
                n_curve = n;
            }
            Err(RomError::SingularReducedSystem { n, y, cond }) => {
                warn!("singular reduced system on the test set at N = {n}, y = {y:?}");
                if breakdown.is_none() {
                    breakdown = Some(Breakdown { n, y, cond, stage: "evaluation".into() });
                }
                break;
            }
            Err(e) => return Err(e.into()),
        }
    }
    w.flush()?;
    let t_eval = t.elapsed().as_secs_f64();
    let rb = rb.truncated(n_curve)?;
    write_archive(BufWriter::new(File::create(out.join(ARCHIVE_BIN))?), &rb)?;

    let stop = if breakdown.is_some() { "breakdown".to_string() } else { stop };
    let manifest = Manifest {
        method: cfg.method.tag().into(),
        weight: plan.weight.tag().into(),
        n_sub: cfg.n_sub,
        n_dof: space.n_dof,
        alpha: cfg.alpha,
        beta: cfg.beta,
        training_seed: cfg.uses_training_seed().then_some(cfg.training_seed),
        training_provenance: training.provenance.clone(),
        training_size: training.len(),
        training_weight_sum: training.weight_sum(),
        test_seed: cfg.test_seed,
        test_size: cfg.test_size,
        tolerances: Tolerances {
            eps_tol: cfg.eps_tol,
            n_max: cfg.n_max,
            dependence_tol: DEPENDENCE_TOL,
            singular_cond_limit: cfg.singular_cond_limit,
            correlation_range_tol: RANGE_TOL,
        },
        alpha_bar: rb.estimator.as_ref().map(|e| e.coercivity.alpha_bar),
        gamma_bar: rb.estimator.as_ref().map(|e| e.coercivity.gamma_bar),
        n_built,
        n_curve,
        stop,
        breakdown,
        wall_time_s: WallTimes {
            training_set: t_training,
            offline: t_offline,
            test_truth: t_test,
            evaluation: t_eval,
            total: t_total.elapsed().as_secs_f64(),
        },
        config: cfg.clone(),
    };
    let json = serde_json::to_string_pretty(&manifest).map_err(|e| CliError::Input(e.to_string()))?;
    fs::write(out.join(MANIFEST_JSON), json + "\n")?;
    Ok(RunOutcome { manifest, rb })
}

fn write_greedy_log(rb: &ReducedBasis, path: &Path) -> Result<(), CliError> {
    let mut w = csv_file(path)?;
    let k = rb.n_params;
    let ys: Vec<String> = (1..=k).map(|i| format!("y_{i}")).collect();
    writeln!(w, "iteration,N,{},max_weighted_estimator", ys.join(","))?;
    for (i, s) in rb.history.iter().enumerate() {
        let y: Vec<String> = s.next.iter().map(|v| fmt_f64(*v)).collect();
        writeln!(w, "{},{},{},{}", i + 1, s.n, y.join(","), fmt_f64(s.max_estimate))?;
    }
    w.flush()?;
    Ok(())
}

fn write_spectrum(rb: &ReducedBasis, path: &Path) -> Result<(), CliError> {
    let mut w = csv_file(path)?;
    writeln!(w, "k,lambda,energy")?;
    if let Some(s) = &rb.spectrum {
        for (k, (l, e)) in s.eigenvalues.iter().zip(&s.energy).enumerate() {
            writeln!(w, "{},{},{}", k + 1, fmt_f64(*l), fmt_f64(*e))?;
        }
    }
    w.flush()?;
    Ok(())
}
