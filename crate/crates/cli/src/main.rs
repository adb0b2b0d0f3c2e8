use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use css_cli::{CliError, Registry, RunConfig};

/// Ground states of the radial Chern-Simons-Schrodinger equation.
#[derive(Debug, Parser)]
#[command(name = "css", version)]
struct Args {
    /// JSON configuration; flags below override its keys.
    #[arg(long)]
    config: Option<PathBuf>,
    /// solve, continuation, sweep or audit.
    #[arg(long)]
    mode: Option<String>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    r_max: Option<f64>,
    #[arg(long)]
    n: Option<usize>,
    /// Power grading exponent of the mesh.
    #[arg(long)]
    grading: Option<f64>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long)]
    eps_min: Option<f64>,
    /// Profile CSV for audit mode.
    #[arg(long)]
    profile: Option<PathBuf>,
    /// Comma-separated exponents for sweep mode.
    #[arg(long, value_delimiter = ',')]
    p_values: Option<Vec<f64>>,
    /// Comma-separated seeds for sweep mode.
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    /// Print the available modes and exit.
    #[arg(long)]
    list_modes: bool,
}

fn build_config(a: Args) -> Result<RunConfig, CliError> {
    let mut c = match &a.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(v) = a.mode {
        c.mode = v;
    }
    if let Some(v) = a.out {
        c.output.dir = v;
    }
    if let Some(v) = a.seed {
        c.seed = v;
    }
    if let Some(v) = a.p {
        c.model.p = v;
    }
    if let Some(v) = a.eps {
        c.model.eps = v;
    }
    if a.alpha.is_some() {
        c.model.alpha = a.alpha;
    }
    if let Some(v) = a.r_max {
        c.grid.r_max = v;
    }
    if let Some(v) = a.n {
        c.grid.n = v;
    }
    if let Some(v) = a.grading {
        c.grid.grading = v;
    }
    if let Some(v) = a.tol {
        c.solver.tol = v;
    }
    if let Some(v) = a.max_iter {
        c.solver.max_iter = v;
    }
    if let Some(v) = a.eps_min {
        c.schedule.eps_min = v;
    }
    if a.profile.is_some() {
        c.output.profile = a.profile;
    }
    if let Some(v) = a.p_values {
        c.sweep.p_values = v;
    }
    if let Some(v) = a.seeds {
        c.sweep.seeds = v;
    }
    Ok(c)
}

fn main() -> ExitCode {
    let args = Args::parse();
    if args.list_modes {
        let reg = Registry::standard();
        for name in reg.names() {
            let mode = reg.get(name).expect("registered");
            println!("{name}\t{}", mode.describe());
        }
        return ExitCode::SUCCESS;
    }
    let result = build_config(args).and_then(|c| css_cli::run(&c));
    match result {
        Ok(summary) => {
            println!("{}", summary.report.display());
            for f in &summary.files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
