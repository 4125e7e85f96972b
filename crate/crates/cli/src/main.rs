use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use wodlab::harness::{self, RunInfo, ScenarioConfig, ScenarioKind};

#[derive(Parser)]
#[command(name = "wodlab", version, about = "Heavy-tailed sums under dependence: scans, ruin and diagnostics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every scenario in a config file.
    Run(RunArgs),
    /// Run only the diagnostics and condition-check scenarios.
    Diagnose(RunArgs),
    /// Run only the dominating-coefficient scenarios.
    EstimateG(RunArgs),
    /// Validate a config file and list its scenarios.
    ListScenarios {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Scenario file (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Replace every scenario's seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; results do not depend on it.
    #[arg(long)]
    threads: Option<usize>,
    /// Multiply sample and replication counts (quick runs).
    #[arg(long, default_value_t = 1.0)]
    samples_scale: f64,
}

fn load(path: &PathBuf) -> Result<(String, Vec<ScenarioConfig>), String> {
    let text = fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    let configs = harness::parse_config(&text).map_err(|e| format!("{}:\n{e}", path.display()))?;
    Ok((text, configs))
}

fn run(args: &RunArgs, keep: impl Fn(ScenarioKind) -> bool) -> Result<bool, String> {
    if !(args.samples_scale > 0.0 && args.samples_scale.is_finite()) {
        return Err(format!("--samples-scale must be positive, got {}", args.samples_scale));
    }
    let (text, configs) = load(&args.config)?;
    let configs: Vec<ScenarioConfig> = configs
        .into_iter()
        .filter(|c| keep(c.kind))
        .map(|mut c| {
            if let Some(seed) = args.seed {
                c.seed = seed;
            }
            c.scaled(args.samples_scale)
        })
        .collect();
    if configs.is_empty() {
        eprintln!("no matching scenarios in {}", args.config.display());
    }
    let threads = match args.threads {
        Some(t) => t,
        None => std::thread::available_parallelism().map_or(1, |n| n.get()),
    };
    let outcomes = harness::run_scenarios(&configs, threads).map_err(|e| e.to_string())?;
    let info = RunInfo {
        config_sha256: harness::config_hash(&text),
        seed_override: args.seed,
        samples_scale: args.samples_scale,
        threads,
    };
    harness::emit_outputs(&outcomes, &info, &args.out).map_err(|e| e.to_string())?;
    let mut ok = true;
    for o in &outcomes {
        println!("{:<28} {:<20} {:<14} {:>9.2}s", o.config.id, o.config.kind, o.verdict(), o.wall_seconds);
        if let Err(e) = &o.result {
            ok = false;
            eprintln!("  {}: {e}", o.config.id);
        }
    }
    println!("outputs in {}", args.out.display());
    Ok(ok)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(a) => run(a, |_| true),
        Command::Diagnose(a) => run(a, |k| matches!(k, ScenarioKind::Diagnostics | ScenarioKind::ConditionCheck)),
        Command::EstimateG(a) => run(a, |k| k == ScenarioKind::DominatingEstimate),
        Command::ListScenarios { config } => load(config).map(|(_, configs)| {
            for c in &configs {
                let samples = c.samples.map_or("-".to_string(), |s| s.to_string());
                println!("{:<28} {:<20} seed={:<8} samples={samples}", c.id, c.kind, c.seed);
            }
            true
        }),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
