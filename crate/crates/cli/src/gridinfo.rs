//! `gridinfo`: writes the training nodes and weights of a configuration.

use std::fs;
use std::path::Path;

use wrom::quadrature::TrainingSet;

use crate::config::ExperimentConfig;
use crate::run::TRAINING_CSV;
use crate::CliError;

pub fn gridinfo(cfg: &ExperimentConfig, out: &Path) -> Result<TrainingSet, CliError> {
    let set = cfg.training_set()?;
    fs::create_dir_all(out)?;
    set.write_csv(std::io::BufWriter::new(fs::File::create(out.join(TRAINING_CSV))?))?;
    Ok(set)
}
