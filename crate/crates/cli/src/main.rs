use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::Parser;
use imdd::experiment::{run_experiment, write_artifacts, ExperimentConfig};
use imdd::link::list_presets;

/// Simulate 112 Gb/s IM/DD links (DMT, Nyquist PAM4, partial-response PAM4).
#[derive(Debug, Parser)]
#[command(name = "imdd", version, args_conflicts_with_subcommands = true)]
struct Cli {
    /// Print the built-in channel presets and exit.
    #[arg(long)]
    list_presets: bool,

    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Debug, clap::Subcommand)]
enum Command {
    /// Run the experiment described by a config file.
    Run(RunArgs),
}

#[derive(Debug, clap::Args)]
struct RunArgs {
    /// Experiment config (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; defaults to `output_dir` from the config, then `out/<name>`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Base seed, replacing the one in the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; defaults to the machine parallelism.
    #[arg(long)]
    jobs: Option<usize>,
    /// Channel preset, replacing the one in the config.
    #[arg(long)]
    preset: Option<String>,
    /// List the built-in channel presets and exit.
    #[arg(long)]
    list_presets: bool,
}

const EXIT_CONFIG: u8 = 1;
const EXIT_PIPELINE: u8 = 2;

fn print_presets() {
    for p in list_presets() {
        println!("{:<12} {}", p.name, p.summary);
    }
}

fn load_config(args: &RunArgs) -> Result<ExperimentConfig, String> {
    let text = std::fs::read_to_string(&args.config)
        .map_err(|e| format!("cannot read {}: {e}", args.config.display()))?;
    let mut cfg = ExperimentConfig::parse(&text).map_err(|e| e.to_string())?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(p) = &args.preset {
        cfg.channel.preset = p.clone();
        cfg.validate().map_err(|e| e.to_string())?;
    }
    Ok(cfg)
}

fn run(args: RunArgs) -> ExitCode {
    let cfg = match load_config(&args) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("config error in {}:", args.config.display());
            for line in e.lines() {
                eprintln!("  {line}");
            }
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let out = args
        .out
        .or_else(|| cfg.output_dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out").join(&cfg.name));
    let jobs = args
        .jobs
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
        .max(1);

    let start = Instant::now();
    let result = match run_experiment(&cfg, jobs, |n| {
        eprintln!("{}: {} point(s) on {jobs} thread(s)", cfg.name, n);
    }) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("pipeline error: {e}");
            return ExitCode::from(EXIT_PIPELINE);
        }
    };
    eprintln!("finished in {:.1} s", start.elapsed().as_secs_f64());

    match write_artifacts(&result, &out) {
        Ok(paths) => {
            for p in paths {
                eprintln!("wrote {}", p.display());
            }
        }
        Err(e) => {
            eprintln!("cannot write artifacts to {}: {e}", out.display());
            return ExitCode::from(EXIT_PIPELINE);
        }
    }
    let mut failed = false;
    for p in result.failed() {
        failed = true;
        if let Err(e) = &p.outcome {
            eprintln!("point {} (rop {} dBm) failed: {e}", p.index, p.param.rop_dbm);
        }
    }
    if failed {
        ExitCode::from(EXIT_PIPELINE)
    } else {
        ExitCode::SUCCESS
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Some(Command::Run(args)) if args.list_presets => {
            print_presets();
            ExitCode::SUCCESS
        }
        Some(Command::Run(args)) => run(args),
        None if cli.list_presets => {
            print_presets();
            ExitCode::SUCCESS
        }
        None => {
            eprintln!("nothing to do; try `imdd run --config FILE` or `imdd --list-presets`");
            ExitCode::from(EXIT_CONFIG)
        }
    }
}
