use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use hyplab::cache::Cache;
use hyplab::config::ExperimentConfig;
use hyplab::experiments::{criterion_experiment, run, EXPERIMENTS};
use hyplab::report::Report;

/// Experiments on metric structures of free groups.
///
/// Defaults: rank 2, comparison generators {a, b, ab}±, simple random walk,
/// Tmax 12, T 10, h 0.05, l 5,6, delta 4.25, kmax 20000, seed 0, trials 200.
/// Radii default per experiment: ball 12, classes 8, green 5,
/// hyperbolicity 4, certificates 8.
#[derive(Parser, Debug)]
#[command(name = "hyplab", version)]
struct Cli {
    /// JSON config file; flags override its fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Free group rank.
    #[arg(long, global = true)]
    rank: Option<usize>,
    /// Generating-set file for the comparison word metric.
    #[arg(long, global = true)]
    gens: Option<PathBuf>,
    /// Step-law file of the random walk.
    #[arg(long, global = true)]
    measure: Option<PathBuf>,
    /// Ball radius.
    #[arg(long, global = true)]
    radius: Option<usize>,
    /// Range of the counting data.
    #[arg(long, global = true)]
    tmax: Option<f64>,
    /// Comma-separated thickened-sphere radii.
    #[arg(long, global = true, value_delimiter = ',')]
    l: Option<Vec<usize>>,
    /// Thickening width of the spheres S_l.
    #[arg(long, global = true)]
    delta: Option<f64>,
    /// Cap on Green series terms.
    #[arg(long, global = true)]
    kmax: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Monte Carlo trials for drift estimates.
    #[arg(long, global = true)]
    trials: Option<usize>,
    /// Directory for cached tables; caching is off without it.
    #[arg(long, global = true)]
    cache_dir: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Out::Json)]
    out: Out,
    /// Worker threads; defaults to the number of cores.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Out {
    Json,
    Csv,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Enumerate the ball; sphere counts and growth.
    Ball,
    /// Enumerate conjugacy classes by core length.
    Classes,
    /// δ and strong-hyperbolicity defects.
    Hyperbolicity,
    /// Green metric of the walk on the ball.
    Green,
    /// Manhattan curves.
    Manhattan,
    /// Mean distortion by two routes.
    Distortion,
    /// Bowen averages of the comparison metric.
    Lambda,
    /// Dilations, Δ and the strong distance.
    Moduli,
    /// Inequality certificates.
    Certificates,
    /// Green metrics of thickened-sphere walks.
    GreenDensity,
    /// Entropy over drift by the distortion route.
    Fundamental,
    /// Run the experiment behind acceptance criterion N (1 to 9).
    Criterion { n: usize },
    /// Run every experiment.
    All,
}

impl Cmd {
    fn experiments(&self) -> Result<Vec<&'static str>> {
        Ok(match self {
            Cmd::Ball => vec!["ball"],
            Cmd::Classes => vec!["classes"],
            Cmd::Hyperbolicity => vec!["hyperbolicity"],
            Cmd::Green => vec!["green"],
            Cmd::Manhattan => vec!["manhattan"],
            Cmd::Distortion => vec!["distortion"],
            Cmd::Lambda => vec!["lambda"],
            Cmd::Moduli => vec!["moduli"],
            Cmd::Certificates => vec!["certificates"],
            Cmd::GreenDensity => vec!["green-density"],
            Cmd::Fundamental => vec!["fundamental"],
            Cmd::Criterion { n } => match criterion_experiment(*n) {
                Some(e) => vec![e],
                None => bail!("criterion must be 1 to 9, got {n}"),
            },
            Cmd::All => EXPERIMENTS.to_vec(),
        })
    }
}

fn config(cli: &Cli) -> Result<ExperimentConfig> {
    let mut c = match &cli.config {
        Some(p) => ExperimentConfig::from_file(p)?,
        None => ExperimentConfig::default(),
    };
    macro_rules! set {
        ($($f:ident),*) => { $( if let Some(v) = &cli.$f { c.$f = v.clone(); } )* };
    }
    set!(rank, delta, kmax, seed, trials, l);
    macro_rules! set_opt {
        ($($f:ident),*) => { $( if cli.$f.is_some() { c.$f = cli.$f.clone(); } )* };
    }
    set_opt!(gens, measure, radius, tmax, threads, cache_dir);
    c.validate()?;
    Ok(c)
}

fn execute(cli: &Cli) -> Result<Vec<Report>> {
    let cfg = config(cli)?;
    let cache = match &cfg.cache_dir {
        Some(d) => Cache::at(d)?,
        None => Cache::disabled(),
    };
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cfg.threads {
        builder = builder.num_threads(n);
    }
    let pool = builder.build().context("building the worker pool")?;
    let mut reports = Vec::new();
    for name in cli.cmd.experiments()? {
        let start = Instant::now();
        let rep = pool.install(|| run(name, &cfg, &cache))?;
        eprintln!("{} ({:.2} s)", rep.summary(), start.elapsed().as_secs_f64());
        reports.push(rep);
    }
    Ok(reports)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(reports) => {
            for r in &reports {
                match cli.out {
                    Out::Json => print!("{}", r.to_json()),
                    Out::Csv => print!("{}", r.to_csv()),
                }
            }
            let code = reports.iter().map(Report::exit_code).max().unwrap_or(0);
            ExitCode::from(code as u8)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
