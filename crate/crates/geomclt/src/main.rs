use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use geomclt::cli::{execute, RunOptions};
use geomclt::Error;

/// Simulation and verification toolkit for central limit behavior of
/// stabilizing geometric functionals on random point sets.
#[derive(Parser)]
#[command(name = "geomclt", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// JSON experiment config; its `experiment` tag must match the subcommand.
    #[arg(long)]
    config: PathBuf,
    /// Override the config's master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads: 1 runs sequentially, 0 uses every core.
    #[arg(long, default_value_t = 0)]
    threads: usize,
    /// Output directory for data files and the manifest.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Record measured wall times in records.csv instead of zeros.
    /// Timed files are no longer byte-identical across reruns.
    #[arg(long)]
    timings: bool,
}

impl RunArgs {
    fn options(&self) -> RunOptions {
        RunOptions {
            config_path: self.config.clone(),
            seed_override: self.seed,
            threads: self.threads,
            out_dir: self.out.clone(),
            timings: self.timings,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Draw one point cloud and write it as CSV.
    Sample(RunArgs),
    /// Betti numbers of the ball complex of a fixed point set.
    Betti(RunArgs),
    /// CLT run over homogeneous Poisson samples on growing cubes.
    CltHomogeneous(RunArgs),
    /// Variance of the defect between the full cube and lattice-block sums.
    CltBlocks(RunArgs),
    /// CLT run for the rescaled inhomogeneous Poisson process, with the
    /// per-level variance table and the additivity prediction.
    CltPoisson(RunArgs),
    /// Paired binomial and Poissonized runs: variance comparison, the
    /// de-Poissonization identity, and (for Betti functionals) the SLLN
    /// table plus the percolation gate.
    CltBinomial(RunArgs),
    /// Add-one-cost traces over nested windows with the injection probe.
    Stabilization(RunArgs),
    /// Critical continuum-percolation radius from torus spanning curves.
    Percolation(RunArgs),
    /// Frequency of exact agreement under the maximal coupling of two
    /// Poisson processes against its closed form.
    CouplingCheck(RunArgs),
}

impl Command {
    fn split(&self) -> (&'static str, &RunArgs) {
        match self {
            Command::Sample(a) => ("sample", a),
            Command::Betti(a) => ("betti", a),
            Command::CltHomogeneous(a) => ("clt-homogeneous", a),
            Command::CltBlocks(a) => ("clt-blocks", a),
            Command::CltPoisson(a) => ("clt-poisson", a),
            Command::CltBinomial(a) => ("clt-binomial", a),
            Command::Stabilization(a) => ("stabilization", a),
            Command::Percolation(a) => ("percolation", a),
            Command::CouplingCheck(a) => ("coupling-check", a),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (name, args) = cli.command.split();
    match execute(&args.options(), name) {
        Ok(report) => {
            for line in &report.lines {
                println!("{line}");
            }
            println!("outputs in {}", report.out_dir.display());
            ExitCode::SUCCESS
        }
        Err(err) => {
            eprintln!("error: {err}");
            match err {
                Error::Config(_) | Error::Json(_) => ExitCode::from(2),
                _ => ExitCode::FAILURE,
            }
        }
    }
}
