use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::metrics::MeanSe;
use crate::agent::{Agent, AgentConfig, AgentKind};
use crate::error::{ensure, Result};
use crate::scalar::Scalar;
use crate::world::{EnvConfig, Observation};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub n_particles: usize,
    pub m_candidates: usize,
    /// Milliseconds per agent step (belief update + plan).
    pub latency_ms: MeanSe,
}

/// Wall-clock latency of one agent step over an `N × M` grid.
///
/// Each of `repeats` repetitions averages `loops` steps taken from the same
/// starting belief, with an empty observation.
pub fn bench_latency<S: Scalar>(
    agent: &AgentConfig<S>,
    env: &EnvConfig<S>,
    n_values: &[usize],
    m_values: &[usize],
    repeats: usize,
    loops: usize,
) -> Result<Vec<BenchRow>> {
    ensure(repeats >= 1 && loops >= 1, || "repeats and loops must be >= 1".into())?;
    ensure(!n_values.is_empty() && !m_values.is_empty(), || "empty bench grid".into())?;
    let obs = Observation::unseen(false);
    let mut rows = Vec::new();
    for &n in n_values {
        for &m in m_values {
            let mut cfg = agent.clone();
            cfg.kind = AgentKind::Ours;
            cfg.belief.n_particles = n;
            cfg.planner.m = m;
            let base = Agent::new(&cfg, env, 0)?;
            let mut warm = base.clone();
            warm.act(&obs, &env.ego_init);
            let mut samples = Vec::with_capacity(repeats);
            for r in 0..repeats {
                let mut a = warm.clone();
                let start = Instant::now();
                for _ in 0..loops {
                    let out = a.act(&obs, &env.ego_init);
                    std::hint::black_box(out.action);
                }
                let ms = start.elapsed().as_secs_f64() * 1e3 / loops as f64;
                log::debug!("bench n={n} m={m} repeat={r}: {ms:.3} ms");
                samples.push(ms);
            }
            rows.push(BenchRow {
                n_particles: n,
                m_candidates: m,
                latency_ms: MeanSe::of(&samples).expect("repeats >= 1"),
            });
        }
    }
    Ok(rows)
}
