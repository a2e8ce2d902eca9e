//! Episode execution, metrics, sweeps and timing.

mod bench;
mod io;
mod metrics;
mod sweep;

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::agent::{Agent, AgentConfig, AgentKind};
use crate::belief::BeliefSummary;
use crate::error::{ensure, Result};
use crate::geometry::Vec2;
use crate::planner::PlanSummary;
use crate::scalar::Scalar;
use crate::world::{BehaviorMode, Env, EnvConfig, KinematicState, Observation, ScenarioParams, Status};

pub use bench::{bench_latency, BenchRow};
pub use io::{read_jsonl, write_jsonl, write_table_csv};
pub use metrics::{compute_metrics, min_ttc, time_to_collision, EpisodeOutcome, MeanSe, MetricsSummary, TTC_CAP};
pub use sweep::{ablation_sweep, compare_agents, run_batch, sweep_groups, Job, SweepAxis, SweepResult, TableRow};

/// Environment variable overriding the worker count.
pub const WORKERS_ENV: &str = "OCCLUSION_WORKERS";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HarnessConfig {
    pub episodes_per_cell: usize,
    pub base_seed: u64,
    /// `None` uses the environment variable, then the available parallelism.
    pub workers: Option<usize>,
    pub log_belief: bool,
    pub log_plan: bool,
}

impl Default for HarnessConfig {
    fn default() -> Self {
        Self {
            episodes_per_cell: 120,
            base_seed: 0,
            workers: None,
            log_belief: false,
            log_plan: false,
        }
    }
}

impl HarnessConfig {
    pub fn resolved_workers(&self) -> usize {
        std::env::var(WORKERS_ENV)
            .ok()
            .and_then(|v| v.trim().parse::<usize>().ok())
            .filter(|&w| w > 0)
            .or(self.workers)
            .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
    }
}

/// Every tunable of an experiment; each section falls back to its defaults.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, bound = "S: Scalar")]
pub struct ExperimentConfig<S: Scalar = f64> {
    pub env: EnvConfig<S>,
    pub agent: AgentConfig<S>,
    pub harness: HarnessConfig,
}

impl<S: Scalar> ExperimentConfig<S> {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        self.env.validate()?;
        self.agent.validate()?;
        ensure(self.harness.episodes_per_cell >= 1, || {
            "episodes_per_cell must be >= 1".into()
        })
    }
}

/// One line of a trajectory log.
///
/// Each record holds the state at time `t`, the observation taken there, the
/// action chosen from it and the resulting belief. The terminal record has
/// no action.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct StepRecord<S: Scalar = f64> {
    pub agent: AgentKind,
    pub mode: BehaviorMode,
    pub seed: u64,
    pub step: usize,
    pub t: S,
    pub ego: KinematicState<S>,
    pub ped: Option<KinematicState<S>>,
    pub obs: Observation<S>,
    pub action: Option<Vec2<S>>,
    pub belief_zp: Option<S>,
    pub status: Status,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub belief: Option<BeliefSummary<S>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plan: Option<PlanSummary<S>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct EpisodeRecord<S: Scalar = f64> {
    pub agent: AgentKind,
    pub mode: BehaviorMode,
    pub seed: u64,
    pub steps: Vec<StepRecord<S>>,
}

impl<S: Scalar> EpisodeRecord<S> {
    pub fn status(&self) -> Status {
        self.steps.last().map_or(Status::Running, |s| s.status)
    }

    pub fn outcome(&self, collision_radius: S) -> EpisodeOutcome {
        EpisodeOutcome::from_record(self, collision_radius)
    }
}

/// Runs a closed-loop episode with a scenario sampled from `seed`.
pub fn run_episode<S: Scalar>(
    agent: &AgentConfig<S>,
    mode: BehaviorMode,
    seed: u64,
    env: &EnvConfig<S>,
    logging: &HarnessConfig,
) -> Result<EpisodeRecord<S>> {
    let env_cfg = EnvConfig { seed, ..env.clone() };
    let (world, obs) = Env::new(env_cfg, mode)?;
    drive(world, obs, agent, mode, seed, logging)
}

/// Runs an episode on a fixed scenario.
pub fn run_scripted<S: Scalar>(
    agent: &AgentConfig<S>,
    params: ScenarioParams<S>,
    seed: u64,
    env: &EnvConfig<S>,
    logging: &HarnessConfig,
) -> Result<EpisodeRecord<S>> {
    let env_cfg = EnvConfig { seed, ..env.clone() };
    let mode = params.mode;
    let (world, obs) = Env::with_params(env_cfg, params)?;
    drive(world, obs, agent, mode, seed, logging)
}

fn drive<S: Scalar>(
    mut world: Env<S>,
    mut obs: Observation<S>,
    agent_cfg: &AgentConfig<S>,
    mode: BehaviorMode,
    seed: u64,
    logging: &HarnessConfig,
) -> Result<EpisodeRecord<S>> {
    let mut agent = Agent::new(agent_cfg, world.config(), seed)?;
    let mut steps = Vec::with_capacity(world.config().max_steps + 1);
    let ped_present = world.config().ped_present;
    let snapshot = |world: &Env<S>, obs: &Observation<S>| StepRecord {
        agent: agent_cfg.kind,
        mode,
        seed,
        step: world.step_index(),
        t: world.time(),
        ego: *world.ego(),
        ped: if ped_present { world.ped().copied() } else { None },
        obs: *obs,
        action: None,
        belief_zp: None,
        status: world.status(),
        belief: None,
        plan: None,
    };
    loop {
        let mut rec = snapshot(&world, &obs);
        if world.status().is_terminal() {
            steps.push(rec);
            break;
        }
        let out = agent.act(&obs, world.ego());
        rec.action = Some(out.action);
        rec.belief_zp = out.belief.as_ref().map(|b| b.b_zp);
        if logging.log_belief {
            rec.belief = out.belief;
        }
        if logging.log_plan {
            rec.plan = Some(out.plan.summary());
        }
        steps.push(rec);
        let (next, _) = world.step(out.action)?;
        obs = next;
    }
    Ok(EpisodeRecord {
        agent: agent_cfg.kind,
        mode,
        seed,
        steps,
    })
}
