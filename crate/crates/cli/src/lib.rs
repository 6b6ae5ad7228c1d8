//! Command-line front end: flag and config-file handling, run manifests,
//! and the drivers behind each subcommand.
//!
//! Exit codes: 0 success, 1 output write failure, 2 bad flags or config,
//! 3 model backend unavailable, 4 bad input data.

pub mod args;
pub mod error;
pub mod manifest;
pub mod run;
pub mod settings;

use std::path::PathBuf;

use args::{Cli, Command, FileConfig, Merge};
pub use error::CliError;
use manifest::{timestamp, RunManifest};
use settings::Job;

/// Resolves flags and config into a job and its output directory.
pub fn resolve(cli: Cli) -> Result<(Job, PathBuf, Option<usize>), CliError> {
    let file = match &cli.global.config {
        Some(p) => FileConfig::load(p)?,
        None => FileConfig::default(),
    };
    let g = cli.global.merge(file.global.clone());
    let name = cli.command.name();
    let (job, dir) = match cli.command {
        Command::Augment(a) => settings::augment_job(&g, a.merge(file.section(name)?))?,
        Command::Train(a) => settings::train_job(&g, a.merge(file.section(name)?))?,
        Command::Filter(a) => settings::filter_job(&g, a.merge(file.section(name)?))?,
        Command::Compare(a) => settings::compare_job(&g, a.merge(file.section(name)?))?,
        Command::Curve(a) => settings::curve_job(&g, a.merge(file.section(name)?))?,
        Command::Tsne(a) => settings::tsne_job(&g, a.merge(file.section(name)?))?,
        Command::Bench(a) => settings::bench_job(&g, a.merge(file.section(name)?))?,
        Command::Synth(a) => settings::synth_job(&g, a.merge(file.section(name)?))?,
        Command::Replay(r) => {
            let m = RunManifest::load(&r.manifest)?;
            let dir = g
                .out_dir
                .clone()
                .ok_or_else(|| CliError::Usage("replay needs --out-dir".into()))?;
            let dir = std::path::absolute(&dir).map_err(|e| CliError::Usage(e.to_string()))?;
            (m.job, dir)
        }
    };
    if g.jobs == Some(0) {
        return Err(CliError::Usage("--jobs must be at least 1".into()));
    }
    Ok((job, dir, g.jobs))
}

/// Runs a job on a pool of `jobs` threads and writes its manifest.
pub fn execute(job: Job, dir: PathBuf, jobs: Option<usize>) -> Result<RunManifest, CliError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.unwrap_or(0))
        .build()
        .map_err(|e| CliError::Usage(format!("thread pool: {e}")))?;
    let started_at = timestamp();
    let outcome = pool.install(|| run::execute(&job, &dir))?;
    let manifest = RunManifest {
        tool: "augtext".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        global_seed: job.global_seed(),
        backends: outcome.backends,
        outputs: outcome.outputs,
        started_at,
        finished_at: timestamp(),
        job,
    };
    manifest.save(&dir.join(manifest.job.manifest_name()))?;
    Ok(manifest)
}

pub fn run(cli: Cli) -> Result<RunManifest, CliError> {
    let (job, dir, jobs) = resolve(cli)?;
    execute(job, dir, jobs)
}
