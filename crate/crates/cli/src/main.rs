use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use scenery_core::experiments::{load_suite, run, ExperimentConfig, Format, ResultBundle};
use scenery_core::Error;

#[derive(Parser)]
#[command(name = "scenery", version, about = "Scenery-flow experiments on digit-defined invariant measures")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Scenery experiments: invariance, dimension, diffeo_shift, equidistribution, scenery.
    Scenery(Args),
    /// Spectral scan and prediction-measure experiments.
    Spectrum(Args),
    /// Phase trichotomy, pushforward phase and mixture experiments.
    Phase(Args),
    /// Cross-base overlap profiles.
    Singularity(Args),
    /// Slope detection and cross-base rigidity.
    Rigidity(Args),
    /// Every `*.toml` in a directory.
    Suite(Args),
}

#[derive(clap::Args)]
struct Args {
    /// Config file, or a directory for `suite`.
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `[output].dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides `[experiment].seed`.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    threads: Option<usize>,
    /// Overrides `[output].format`.
    #[arg(long, value_enum)]
    format: Option<OutFormat>,
}

#[derive(Clone, Copy, ValueEnum)]
enum OutFormat {
    Csv,
    Json,
}

impl From<OutFormat> for Format {
    fn from(f: OutFormat) -> Self {
        match f {
            OutFormat::Csv => Format::Csv,
            OutFormat::Json => Format::Json,
        }
    }
}

fn group(cmd: &Command) -> Option<(&'static str, &'static [&'static str])> {
    match cmd {
        Command::Scenery(_) => {
            Some(("scenery", &["invariance", "dimension", "diffeo_shift", "equidistribution", "scenery"]))
        }
        Command::Spectrum(_) => Some(("spectrum", &["spectrum", "prediction"])),
        Command::Phase(_) => Some(("phase", &["phase_trichotomy", "pushforward_phase", "mixture"])),
        Command::Singularity(_) => Some(("singularity", &["cross_base"])),
        Command::Rigidity(_) => Some(("rigidity", &["slope_detection", "cross_base"])),
        Command::Suite(_) => None,
    }
}

fn config_error(e: &Error) -> ExitCode {
    match e {
        Error::Config(list) => {
            for msg in list {
                eprintln!("config error: {msg}");
            }
        }
        other => eprintln!("config error: {other}"),
    }
    ExitCode::from(2)
}

fn out_dir(args: &Args, cfg: &ExperimentConfig) -> PathBuf {
    args.out
        .clone()
        .or_else(|| cfg.output.dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("results"))
}

fn report(b: &ResultBundle) {
    println!("{} {} ({:.2}s)", if b.passed { "PASS" } else { "FAIL" }, b.experiment, b.runtime_secs);
    for c in b.checks.iter().filter(|c| !c.passed) {
        println!("  failed {}: {} vs {}", c.name, c.value, c.threshold);
    }
}

fn execute(args: &Args, configs: Vec<ExperimentConfig>) -> ExitCode {
    let outcomes: Vec<_> = configs.par_iter().map(|c| (c, run(c))).collect();
    let mut all_passed = true;
    for (cfg, outcome) in outcomes {
        match outcome {
            Ok(b) => {
                report(&b);
                all_passed &= b.passed;
                let format = args.format.map(Format::from).unwrap_or(cfg.output.format);
                if let Err(e) = b.emit(&out_dir(args, cfg), format) {
                    eprintln!("{}: {e}", cfg.experiment.name);
                    all_passed = false;
                }
            }
            Err(e @ Error::Config(_)) => return config_error(&e),
            Err(e) => {
                println!("FAIL {} ({e})", cfg.experiment.name);
                all_passed = false;
            }
        }
    }
    if all_passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn load(path: &Path, suite: bool) -> scenery_core::Result<Vec<ExperimentConfig>> {
    if suite {
        load_suite(path)
    } else {
        ExperimentConfig::load(path).map(|c| vec![c])
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let group = group(&cli.command);
    let args = match &cli.command {
        Command::Scenery(a)
        | Command::Spectrum(a)
        | Command::Phase(a)
        | Command::Singularity(a)
        | Command::Rigidity(a)
        | Command::Suite(a) => a,
    };
    if let Some(n) = args.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("thread pool: {e}");
            return ExitCode::from(2);
        }
    }
    let mut configs = match load(&args.config, group.is_none()) {
        Ok(c) => c,
        Err(e) => return config_error(&e),
    };
    if let Some((cmd, names)) = group {
        let name = &configs[0].experiment.name;
        if !names.contains(&name.as_str()) {
            return config_error(&Error::Config(vec![format!(
                "experiment.name: `{name}` is not a `{cmd}` experiment (expected one of {})",
                names.join(", ")
            )]));
        }
    }
    if let Some(seed) = args.seed {
        for c in &mut configs {
            c.experiment.seed = seed;
        }
    }
    execute(args, configs)
}
