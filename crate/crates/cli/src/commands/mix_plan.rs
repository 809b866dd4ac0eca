//! `rgbdn mix-plan`: deterministic minibatch schedule as CSV.

use std::io::Write;
use std::path::PathBuf;

use clap::Args;

use rgbdn_core::mix::build_mix_plan;
use rgbdn_core::{Error, Result};

use crate::config::RunConfig;

#[derive(Args, Debug)]
pub struct MixPlanArgs {
    /// JSON config carrying "mix", "dataset_sizes", and optionally
    /// "n_batches"
    #[arg(long)]
    pub config: PathBuf,

    /// Number of batches to schedule (overrides the config)
    #[arg(long)]
    pub n_batches: Option<usize>,

    /// Seed override
    #[arg(long)]
    pub seed: Option<u64>,

    /// Output CSV path; stdout when omitted
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn run(args: &MixPlanArgs) -> Result<()> {
    let cfg = RunConfig::load(Some(&args.config))?;
    let mut spec = cfg
        .mix
        .ok_or_else(|| Error::config("config lacks a \"mix\" section"))?;
    let sizes = cfg
        .dataset_sizes
        .ok_or_else(|| Error::config("config lacks \"dataset_sizes\""))?;
    let n_batches = args
        .n_batches
        .or(cfg.n_batches)
        .ok_or_else(|| Error::config("pass --n-batches or set \"n_batches\" in the config"))?;
    if let Some(seed) = args.seed {
        spec.seed = seed;
    }
    let plan = build_mix_plan(&spec, &sizes, n_batches)?;
    match &args.out {
        Some(path) => {
            let file = std::fs::File::create(path)?;
            plan.write_csv(std::io::BufWriter::new(file))?;
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            // A closed pipe (e.g. `| head`) is not a failure.
            match plan.write_csv(&mut lock).and_then(|_| lock.flush()) {
                Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => {}
                other => other?,
            }
        }
    }
    Ok(())
}
