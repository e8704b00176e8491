use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;
use timesplit_cli::commands;
use timesplit_cli::config::{Command, RunConfig};
use timesplit_cli::error::{CliError, CliResult};
use timesplit_cli::synth::{generate_synthetic, SyntheticSpec};

#[derive(Parser)]
#[command(name = "timesplit", version, about = "Time-split versus random-split evaluation of compound classifiers")]
struct Cli {
    /// Worker threads; defaults to the number of cores.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Sub,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Overrides `output_dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides `base_seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Print the effective configuration and exit.
    #[arg(long)]
    explain: bool,
}

#[derive(Subcommand)]
enum Sub {
    /// Train every dataset × learner × target cell under both splits and compare.
    Evaluate(RunArgs),
    /// Permutation feature importance on the time split.
    Importance(RunArgs),
    /// Distance, fingerprint, PCA and PMFG summaries of train versus test compounds.
    Chemspace(RunArgs),
    /// Publication-lag test for the most important features.
    Leakage(RunArgs),
    /// Write a seeded synthetic benchmark and a config that runs on it.
    Synth {
        #[arg(long)]
        out: PathBuf,
        /// JSON generator settings; defaults apply to missing keys.
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn run_analysis(command: Command, args: RunArgs) -> CliResult<()> {
    let mut cfg = RunConfig::load(&args.config)?;
    cfg.apply_overrides(args.seed, args.out);
    if args.explain {
        println!("{}", serde_json::to_string_pretty(&cfg).map_err(CliError::runtime)?);
        return Ok(());
    }
    let dir = commands::run(command, &cfg)?;
    println!("{}", json!({"status": "ok", "output_dir": dir}));
    Ok(())
}

fn run_synth(out: PathBuf, spec: Option<PathBuf>, seed: Option<u64>) -> CliResult<()> {
    let mut s: SyntheticSpec = match spec {
        Some(p) => {
            let text = std::fs::read_to_string(&p)
                .map_err(|e| CliError::config(format!("cannot read spec {}: {e}", p.display())))?;
            serde_json::from_str(&text).map_err(|e| CliError::config(format!("{}: {e}", p.display())))?
        }
        None => SyntheticSpec::default(),
    };
    if let Some(seed) = seed {
        s.seed = seed;
    }
    generate_synthetic(&s)?.write(&out)?;
    println!("{}", json!({"status": "ok", "output_dir": out}));
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(j) = cli.jobs {
        pool = pool.num_threads(j.max(1));
    }
    let result = pool.build().map_err(CliError::runtime).and_then(|pool| {
        pool.install(|| match cli.command {
            Sub::Evaluate(a) => run_analysis(Command::Evaluate, a),
            Sub::Importance(a) => run_analysis(Command::Importance, a),
            Sub::Chemspace(a) => run_analysis(Command::Chemspace, a),
            Sub::Leakage(a) => run_analysis(Command::Leakage, a),
            Sub::Synth { out, spec, seed } => run_synth(out, spec, seed),
        })
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
