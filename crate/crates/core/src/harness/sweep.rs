use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{compute_metrics, EpisodeOutcome, MetricsSummary};
use super::{run_episode, ExperimentConfig, HarnessConfig};
use crate::agent::{AgentConfig, AgentKind};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::world::{BehaviorMode, EnvConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    RhoH,
    B0,
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SweepAxis::RhoH => "rho_h",
            SweepAxis::B0 => "b0",
        })
    }
}

impl FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "rho_h" | "rho-h" | "rho" => Ok(SweepAxis::RhoH),
            "b0" | "b_0" => Ok(SweepAxis::B0),
            other => Err(Error::InvalidConfig(format!("unknown sweep axis `{other}`"))),
        }
    }
}

impl SweepAxis {
    pub fn apply<S: Scalar>(self, agent: &mut AgentConfig<S>, value: S) {
        match self {
            SweepAxis::RhoH => agent.planner.rho_h = value,
            SweepAxis::B0 => agent.belief.b0_zp = value,
        }
    }
}

/// One episode to run.
#[derive(Debug, Clone)]
pub struct Job<S: Scalar = f64> {
    pub cell: usize,
    pub agent: AgentConfig<S>,
    pub mode: BehaviorMode,
    pub seed: u64,
}

/// Runs jobs on up to `workers` threads; output order follows input order.
pub fn run_batch<S: Scalar>(jobs: &[Job<S>], env: &EnvConfig<S>, workers: usize) -> Result<Vec<EpisodeOutcome>> {
    let quiet = HarnessConfig::default();
    let run = |job: &Job<S>| -> Result<EpisodeOutcome> {
        let rec = run_episode(&job.agent, job.mode, job.seed, env, &quiet)?;
        Ok(rec.outcome(env.collision_radius))
    };
    if workers <= 1 {
        return jobs.iter().map(run).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidConfig(format!("cannot build worker pool: {e}")))?;
    pool.install(|| jobs.par_iter().map(run).collect())
}

/// One row of a results table; `mode == None` marks the pooled row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub label: String,
    pub mode: Option<BehaviorMode>,
    pub metrics: MetricsSummary,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub rows: Vec<TableRow>,
    /// Outcomes grouped by cell, in seed order.
    pub cells: Vec<(String, BehaviorMode, Vec<EpisodeOutcome>)>,
}

impl SweepResult {
    pub fn pooled(&self, label: &str) -> Option<&MetricsSummary> {
        self.rows
            .iter()
            .find(|r| r.mode.is_none() && r.label == label)
            .map(|r| &r.metrics)
    }

    pub fn cell(&self, label: &str, mode: BehaviorMode) -> Option<&MetricsSummary> {
        self.rows
            .iter()
            .find(|r| r.mode == Some(mode) && r.label == label)
            .map(|r| &r.metrics)
    }
}

/// Runs every labelled agent on every mode, `n_per_cell` episodes per cell,
/// each cell on its own block of seeds.
pub fn sweep_groups<S: Scalar>(
    cfg: &ExperimentConfig<S>,
    groups: Vec<(String, AgentConfig<S>)>,
    modes: &[BehaviorMode],
    n_per_cell: usize,
) -> Result<SweepResult> {
    cfg.validate()?;
    if groups.is_empty() || modes.is_empty() || n_per_cell == 0 {
        return Err(Error::InvalidConfig("sweep needs values, modes and episodes".into()));
    }
    for (_, a) in &groups {
        a.validate()?;
    }
    let mut jobs = Vec::with_capacity(groups.len() * modes.len() * n_per_cell);
    let mut cell = 0usize;
    for (_, agent) in &groups {
        for &mode in modes {
            // disjoint seed block per cell
            let start = cfg.harness.base_seed + (cell * n_per_cell) as u64;
            jobs.extend((0..n_per_cell as u64).map(|i| Job {
                cell,
                agent: agent.clone(),
                mode,
                seed: start + i,
            }));
            cell += 1;
        }
    }
    let outcomes = run_batch(&jobs, &cfg.env, cfg.harness.resolved_workers())?;

    let mut rows = Vec::new();
    let mut cells = Vec::new();
    let mut chunks = outcomes.chunks(n_per_cell);
    for (label, _) in &groups {
        let mut pooled = Vec::with_capacity(modes.len() * n_per_cell);
        for &mode in modes {
            let chunk = chunks.next().expect("one chunk per cell").to_vec();
            rows.push(TableRow {
                label: label.clone(),
                mode: Some(mode),
                metrics: compute_metrics(&chunk)?,
            });
            pooled.extend_from_slice(&chunk);
            cells.push((label.clone(), mode, chunk));
        }
        rows.push(TableRow {
            label: label.clone(),
            mode: None,
            metrics: compute_metrics(&pooled)?,
        });
    }
    Ok(SweepResult { rows, cells })
}

/// Sweeps one agent parameter over `values` for every mode in `modes`.
pub fn ablation_sweep<S: Scalar>(
    cfg: &ExperimentConfig<S>,
    axis: SweepAxis,
    values: &[S],
    modes: &[BehaviorMode],
    n_per_cell: usize,
) -> Result<SweepResult> {
    let groups = values
        .iter()
        .map(|&v| {
            let mut agent = cfg.agent.clone();
            axis.apply(&mut agent, v);
            (format!("{v}"), agent)
        })
        .collect();
    sweep_groups(cfg, groups, modes, n_per_cell)
}

/// Runs each agent kind on every mode with otherwise identical settings.
pub fn compare_agents<S: Scalar>(
    cfg: &ExperimentConfig<S>,
    agents: &[AgentKind],
    modes: &[BehaviorMode],
    n_per_cell: usize,
) -> Result<SweepResult> {
    let groups = agents
        .iter()
        .map(|&kind| {
            (
                kind.name().to_string(),
                AgentConfig {
                    kind,
                    ..cfg.agent.clone()
                },
            )
        })
        .collect();
    sweep_groups(cfg, groups, modes, n_per_cell)
}
