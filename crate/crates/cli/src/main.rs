use std::fs::{self, File};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use log::info;

use occlusion_core::agent::AgentKind;
use occlusion_core::harness::{
    ablation_sweep, bench_latency, compare_agents, run_episode, write_jsonl, write_table_csv, ExperimentConfig,
    MetricsSummary, SweepAxis, SweepResult,
};
use occlusion_core::world::BehaviorMode;

#[derive(Parser)]
#[command(name = "occlusion", version, about = "Occluded-pedestrian driving experiments")]
struct Cli {
    /// TOML file overriding default settings.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one episode and optionally log its trajectory.
    Run(RunArgs),
    /// Sweep the injection ratio or the initial presence belief.
    Ablate(AblateArgs),
    /// Compare agents on every behaviour mode.
    Compare(CompareArgs),
    /// Time one agent step over a particle/candidate grid.
    Bench(BenchArgs),
    /// Print the full default configuration as TOML.
    Defaults,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, default_value = "ours")]
    agent: AgentKind,
    #[arg(long, default_value = "hesitant")]
    mode: BehaviorMode,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write per-step JSONL here.
    #[arg(long)]
    log: Option<PathBuf>,
    #[arg(long)]
    log_belief: bool,
    #[arg(long)]
    log_plan: bool,
    /// Remove the pedestrian from the scene.
    #[arg(long)]
    no_pedestrian: bool,
}

#[derive(Args)]
struct GridArgs {
    /// Comma-separated modes, or `all`.
    #[arg(long, default_value = "all")]
    modes: String,
    #[arg(long)]
    n_per_cell: Option<usize>,
    #[arg(long, default_value = "results")]
    out: PathBuf,
}

#[derive(Args)]
struct AblateArgs {
    #[arg(long)]
    axis: SweepAxis,
    #[arg(long, value_delimiter = ',', required = true)]
    values: Vec<f64>,
    #[command(flatten)]
    grid: GridArgs,
}

#[derive(Args)]
struct CompareArgs {
    #[arg(long, value_delimiter = ',', default_value = "reactive,rule,ours")]
    agents: Vec<AgentKind>,
    #[command(flatten)]
    grid: GridArgs,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, value_delimiter = ',', default_value = "100,200,300,500")]
    n: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "100,200,400")]
    m: Vec<usize>,
    #[arg(long, default_value_t = 10)]
    repeats: usize,
    #[arg(long, default_value_t = 100)]
    loops: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_modes(s: &str) -> Result<Vec<BehaviorMode>> {
    if s.trim().eq_ignore_ascii_case("all") {
        return Ok(BehaviorMode::ALL.to_vec());
    }
    s.split(',')
        .map(|m| m.parse::<BehaviorMode>().map_err(anyhow::Error::msg))
        .collect()
}

fn load_config(path: Option<&Path>) -> Result<ExperimentConfig> {
    match path {
        Some(p) => ExperimentConfig::load(p).with_context(|| format!("loading {}", p.display())),
        None => Ok(ExperimentConfig::<f64>::default()),
    }
}

fn fmt_opt(m: Option<occlusion_core::harness::MeanSe>) -> String {
    m.map_or_else(|| "-".to_string(), |x| format!("{:.3} ± {:.3}", x.mean, x.se))
}

fn print_metrics(label: &str, mode: &str, m: &MetricsSummary) {
    println!(
        "{label:>10} {mode:>18}  PR {:.3} ± {:.3}  CR {:.3} ± {:.3}  PT {}  MD {}  TTC {}",
        m.pass_rate.mean,
        m.pass_rate.se,
        m.collision_rate.mean,
        m.collision_rate.se,
        fmt_opt(m.pass_time),
        fmt_opt(m.min_distance),
        fmt_opt(m.min_ttc),
    );
}

fn emit_table(result: &SweepResult, out: &Path, name: &str) -> Result<()> {
    fs::create_dir_all(out)?;
    let path = out.join(name);
    write_table_csv(&result.rows, File::create(&path)?)?;
    for row in &result.rows {
        print_metrics(&row.label, row.mode.map_or("pooled", |m| m.name()), &row.metrics);
    }
    info!("wrote {}", path.display());
    Ok(())
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let mut cfg = load_config(cli.config.as_deref())?;

    match cli.command {
        Command::Run(args) => {
            cfg.agent.kind = args.agent;
            cfg.env.ped_present = !args.no_pedestrian;
            cfg.harness.log_belief = args.log_belief;
            cfg.harness.log_plan = args.log_plan;
            cfg.validate()?;
            let rec = run_episode(&cfg.agent, args.mode, args.seed, &cfg.env, &cfg.harness)?;
            let outcome = rec.outcome(cfg.env.collision_radius);
            println!(
                "{} {} seed {}: {:?} at t = {:.1} s, min distance {}",
                args.agent,
                args.mode,
                args.seed,
                outcome.status,
                outcome.time,
                outcome.min_distance.map_or("-".into(), |d| format!("{d:.2} m"))
            );
            if let Some(path) = args.log {
                write_jsonl(&[rec], File::create(&path)?)?;
                info!("wrote {}", path.display());
            }
        }
        Command::Ablate(args) => {
            let modes = parse_modes(&args.grid.modes)?;
            let n = args.grid.n_per_cell.unwrap_or(cfg.harness.episodes_per_cell);
            let result = ablation_sweep(&cfg, args.axis, &args.values, &modes, n)?;
            emit_table(&result, &args.grid.out, &format!("ablation_{}.csv", args.axis))?;
        }
        Command::Compare(args) => {
            if args.agents.is_empty() {
                bail!("no agents given");
            }
            let modes = parse_modes(&args.grid.modes)?;
            let n = args.grid.n_per_cell.unwrap_or(cfg.harness.episodes_per_cell);
            let result = compare_agents(&cfg, &args.agents, &modes, n)?;
            emit_table(&result, &args.grid.out, "comparison.csv")?;
        }
        Command::Bench(args) => {
            let rows = bench_latency(&cfg.agent, &cfg.env, &args.n, &args.m, args.repeats, args.loops)?;
            for r in &rows {
                println!(
                    "N={:<5} M={:<5} {:.3} ± {:.3} ms",
                    r.n_particles, r.m_candidates, r.latency_ms.mean, r.latency_ms.se
                );
            }
            if let Some(path) = args.out {
                let mut w = csv_writer(&path)?;
                use std::io::Write;
                writeln!(w, "n_particles,m_candidates,latency_ms,latency_ms_se")?;
                for r in &rows {
                    writeln!(
                        w,
                        "{},{},{},{}",
                        r.n_particles, r.m_candidates, r.latency_ms.mean, r.latency_ms.se
                    )?;
                }
            }
        }
        Command::Defaults => {
            print!("{}", toml::to_string(&ExperimentConfig::<f64>::default())?);
        }
    }
    Ok(())
}

fn csv_writer(path: &Path) -> Result<std::io::BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    Ok(std::io::BufWriter::new(File::create(path)?))
}
