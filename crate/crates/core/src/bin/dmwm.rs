use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use dmwm_core::harness::{run_episode, run_experiment, Experiment, TrafficPairing};
use dmwm_core::report::{self, write_file};
use dmwm_core::scenario::{BuiltinScenario, ConfigError, RolloutRewardMode, ScenarioConfig};
use dmwm_core::PolicyKind;

#[derive(Parser)]
#[command(name = "dmwm", version, about = "Dual-mind access scheduling on a slotted network digital twin")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one policy on one scenario for several seeded runs.
    Run(RunArgs),
    /// Run every built-in scenario against every policy.
    Campaign(CampaignArgs),
    /// Export the dual-mind schedule heatmap, model error and decision trace of one run.
    Trace(TraceArgs),
    /// Scenario utilities.
    Scenario {
        #[command(subcommand)]
        command: ScenarioCommand,
    },
}

#[derive(Subcommand)]
enum ScenarioCommand {
    /// Print a resolved scenario as JSON.
    Show { name: String },
}

#[derive(Args)]
struct OutDir {
    /// Output directory.
    #[arg(long, env = "DMWM_OUT_DIR", default_value = "out")]
    out: PathBuf,
}

#[derive(Args)]
struct RunArgs {
    /// Built-in scenario name or path to a JSON scenario file.
    #[arg(long, default_value = "default")]
    scenario: String,
    #[arg(long, default_value = "dmwm")]
    policy: PolicyKind,
    #[arg(long, default_value_t = 30, value_parser = clap::value_parser!(u32).range(1..))]
    runs: u32,
    #[arg(long)]
    steps: Option<u32>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    horizon: Option<usize>,
    /// literal | served
    #[arg(long)]
    rollout_reward: Option<RolloutRewardMode>,
    /// Give each policy its own traffic instead of sharing arrivals across policies.
    #[arg(long)]
    independent_traffic: bool,
    #[command(flatten)]
    out: OutDir,
}

#[derive(Args)]
struct CampaignArgs {
    #[arg(long, default_value_t = dmwm_core::scenario::DEFAULT_BASE_SEED)]
    seed: u64,
    #[arg(long, default_value_t = 30, value_parser = clap::value_parser!(u32).range(1..))]
    runs: u32,
    #[arg(long)]
    independent_traffic: bool,
    #[command(flatten)]
    out: OutDir,
}

#[derive(Args)]
struct TraceArgs {
    #[arg(long, default_value = "default")]
    scenario: String,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = 0)]
    run_index: u32,
    #[command(flatten)]
    out: OutDir,
}

fn load_scenario(spec: &str) -> Result<ScenarioConfig> {
    if let Ok(b) = spec.parse::<BuiltinScenario>() {
        return Ok(ScenarioConfig::builtin(b));
    }
    let path = Path::new(spec);
    if !path.exists() {
        return Err(ConfigError::UnknownScenario(spec.to_owned()).into());
    }
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut cfg = ScenarioConfig::from_json(&text)?;
    if cfg.name.is_empty() {
        cfg.name = path.file_stem().map_or_else(|| "custom".into(), |s| s.to_string_lossy().into_owned());
    }
    Ok(cfg)
}

fn pairing(independent: bool) -> TrafficPairing {
    if independent {
        TrafficPairing::Independent
    } else {
        TrafficPairing::Paired
    }
}

fn write_all(dir: &Path, files: &[(&str, String)]) -> Result<()> {
    for (name, body) in files {
        write_file(dir, name, body).with_context(|| format!("writing {}", dir.join(name).display()))?;
    }
    Ok(())
}

fn cmd_run(args: RunArgs) -> Result<()> {
    let mut cfg = load_scenario(&args.scenario)?;
    if let Some(t) = args.steps {
        cfg.steps = t;
    }
    if let Some(s) = args.seed {
        cfg.base_seed = s;
    }
    if let Some(h) = args.horizon {
        cfg.horizon = h;
    }
    if let Some(m) = args.rollout_reward {
        cfg.rollout_reward_mode = m;
    }
    let cfg = cfg.validate()?;
    let reports = run_experiment(&Experiment {
        scenarios: vec![cfg],
        policies: vec![args.policy],
        runs: args.runs,
        pairing: pairing(args.independent_traffic),
    });
    write_all(
        &args.out.out,
        &[
            ("runs.csv", report::runs_csv(&reports)),
            ("summary.csv", report::summary_csv(&reports)),
            ("summary.json", report::summary_json(&reports)),
        ],
    )?;
    let r = &reports[0];
    println!(
        "{} / {}: throughput {} +- {}, queue {}, delay {}, violations {}, drops {}",
        r.scenario,
        r.policy,
        report::fmt_real(r.throughput.mean),
        report::fmt_real(r.throughput.std),
        report::fmt_real(r.queue.mean),
        report::fmt_real(r.delay.mean),
        report::fmt_real(r.violations.mean),
        report::fmt_real(r.drops.mean)
    );
    Ok(())
}

fn cmd_campaign(args: CampaignArgs) -> Result<()> {
    let scenarios = BuiltinScenario::ALL
        .into_iter()
        .map(|b| {
            let mut cfg = ScenarioConfig::builtin(b);
            cfg.base_seed = args.seed;
            cfg.validate()
        })
        .collect::<Result<Vec<_>, _>>()?;
    let reports = run_experiment(&Experiment {
        scenarios,
        policies: PolicyKind::ALL.to_vec(),
        runs: args.runs,
        pairing: pairing(args.independent_traffic),
    });
    write_all(
        &args.out.out,
        &[
            ("summary.csv", report::summary_csv(&reports)),
            ("summary.json", report::summary_json(&reports)),
            ("runs.csv", report::runs_csv(&reports)),
        ],
    )?;
    println!("{} rows written to {}", reports.len(), args.out.out.display());
    Ok(())
}

fn cmd_trace(args: TraceArgs) -> Result<()> {
    let mut cfg = load_scenario(&args.scenario)?;
    if let Some(s) = args.seed {
        cfg.base_seed = s;
    }
    let cfg = cfg.validate()?;
    let res = run_episode(&cfg, PolicyKind::Dmwm, args.run_index, TrafficPairing::Paired);
    write_all(
        &args.out.out,
        &[
            ("schedule.csv", report::schedule_csv(&res.twin.schedule_matrix)),
            ("model_error.csv", report::integer_matrix_csv(&res.twin.model_error_matrix)),
            ("queue_lengths.csv", report::integer_matrix_csv(&res.twin.queue_length_timeseries)),
            ("decisions.csv", report::trace_csv(&res.trace)),
        ],
    )?;
    let slow = res
        .trace
        .iter()
        .filter(|d| d.provenance == dmwm_core::Provenance::SlowMind)
        .count();
    println!(
        "{} slots traced ({} slow-mind, {} fast-mind) in {}",
        res.trace.len(),
        slow,
        res.trace.len() - slow,
        args.out.out.display()
    );
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Campaign(a) => cmd_campaign(a),
        Command::Trace(a) => cmd_trace(a),
        Command::Scenario { command: ScenarioCommand::Show { name } } => {
            let cfg = load_scenario(&name)?.validate()?;
            println!("{}", cfg.to_json_pretty());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

