//! Policy search minimizing expected free energy.
//!
//! Each planning call copies the belief, injects counterfactual manoeuvres
//! into a fraction of the existing particles, then runs a few rounds of the
//! cross-entropy method over open-loop acceleration sequences. The executed
//! action is the first step of the MPPI average of the last round.

mod efe;
mod rollout;

use rand::seq::index;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::belief::{Belief, Maneuver};
use crate::error::{ensure, Error, Result};
use crate::geometry::{Occluder, Vec2};
use crate::scalar::Scalar;
use crate::world::{ActionBounds, KinematicState};

pub use efe::{bernoulli_entropy, efe, efe_from_masses, mppi_weights, Preference};
pub use rollout::{ego_trajectory, rollout, RolloutParticle, RolloutSet, RolloutTrace};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar", default, deny_unknown_fields)]
pub struct PlannerConfig<S: Scalar = f64> {
    /// Candidate policies per CEM round.
    pub m: usize,
    /// Horizon in steps.
    pub horizon: usize,
    pub cem_iters: usize,
    pub elite_frac: S,
    pub lambda: S,
    pub gamma: S,
    pub rho_h: S,
    pub preference: Preference<S>,
    pub init_std: Vec2<S>,
    pub std_floor: S,
}

impl<S: Scalar> Default for PlannerConfig<S> {
    fn default() -> Self {
        Self {
            m: 100,
            horizon: 40,
            cem_iters: 8,
            elite_frac: S::lit(0.2),
            lambda: S::one(),
            gamma: S::lit(0.99),
            rho_h: S::lit(0.3),
            preference: Preference::default(),
            init_std: Vec2::new(S::lit(1.5), S::lit(0.75)),
            std_floor: S::lit(0.05),
        }
    }
}

impl<S: Scalar> PlannerConfig<S> {
    pub fn validate(&self) -> Result<()> {
        ensure(self.m >= 1, || "m must be at least 1".into())?;
        ensure(self.horizon >= 1, || "horizon must be at least 1".into())?;
        ensure(self.cem_iters >= 1, || "cem_iters must be at least 1".into())?;
        ensure(self.elite_frac > S::zero() && self.elite_frac <= S::one(), || {
            format!("elite_frac must lie in (0, 1], got {}", self.elite_frac)
        })?;
        ensure(self.lambda > S::zero(), || "lambda must be positive".into())?;
        ensure(self.gamma > S::zero() && self.gamma <= S::one(), || {
            format!("gamma must lie in (0, 1], got {}", self.gamma)
        })?;
        if !(self.rho_h >= S::zero() && self.rho_h <= S::one()) {
            return Err(Error::InvalidProbability {
                name: "rho_h",
                value: self.rho_h.to_f64_lossy(),
            });
        }
        ensure(self.std_floor > S::zero(), || "std_floor must be positive".into())?;
        ensure(
            self.init_std.x >= self.std_floor && self.init_std.y >= self.std_floor,
            || "init_std must not be below std_floor".into(),
        )?;
        self.preference.validate()
    }

    pub fn elite_count(&self) -> usize {
        let k = (self.elite_frac * S::lit(self.m as f64)).ceil().to_usize().unwrap_or(1);
        k.clamp(1, self.m)
    }
}

/// Everything about the world the planner needs besides the belief.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct PlanningContext<S: Scalar = f64> {
    pub occluder: Occluder<S>,
    pub dt: S,
    pub collision_radius: S,
    pub bounds: ActionBounds<S>,
}

impl<S: Scalar> Default for PlanningContext<S> {
    fn default() -> Self {
        Self {
            occluder: Occluder::default(),
            dt: S::lit(0.1),
            collision_radius: S::one(),
            bounds: ActionBounds::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct Policy<S: Scalar = f64> {
    pub actions: Vec<Vec2<S>>,
}

impl<S: Scalar> Policy<S> {
    pub fn constant(action: Vec2<S>, horizon: usize) -> Self {
        Self {
            actions: vec![action; horizon],
        }
    }

    pub fn horizon(&self) -> usize {
        self.actions.len()
    }
}

/// Independent Gaussian per step and axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct PolicyDistribution<S: Scalar = f64> {
    pub mean: Vec<Vec2<S>>,
    pub std: Vec<Vec2<S>>,
}

impl<S: Scalar> PolicyDistribution<S> {
    pub fn new(horizon: usize, std: Vec2<S>) -> Self {
        Self {
            mean: vec![Vec2::zero(); horizon],
            std: vec![std; horizon],
        }
    }

    pub fn mean_policy(&self, bounds: &ActionBounds<S>) -> Policy<S> {
        Policy {
            actions: self.mean.iter().map(|&a| bounds.clamp(a)).collect(),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, bounds: &ActionBounds<S>, rng: &mut R) -> Policy<S> {
        let actions = self
            .mean
            .iter()
            .zip(&self.std)
            .map(|(m, s)| {
                let zx: f64 = StandardNormal.sample(rng);
                let zy: f64 = StandardNormal.sample(rng);
                bounds.clamp(Vec2::new(m.x + s.x * S::lit(zx), m.y + s.y * S::lit(zy)))
            })
            .collect();
        Policy { actions }
    }

    /// Refit to a set of elite policies, flooring the spread.
    pub fn refit(&mut self, elites: &[&Policy<S>], floor: S) {
        let n = S::lit(elites.len() as f64);
        for k in 0..self.mean.len() {
            let mean = elites
                .iter()
                .fold(Vec2::zero(), |acc, p| acc + p.actions[k])
                * (S::one() / n);
            let var = elites.iter().fold(Vec2::zero(), |acc: Vec2<S>, p| {
                let d = p.actions[k] - mean;
                acc + Vec2::new(d.x * d.x, d.y * d.y)
            }) * (S::one() / n);
            self.mean[k] = mean;
            self.std[k] = Vec2::new(var.x.sqrt().max(floor), var.y.sqrt().max(floor));
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct InjectionCounts {
    pub surge: usize,
    pub reverse: usize,
    pub freeze: usize,
}

impl InjectionCounts {
    pub fn total(&self) -> usize {
        self.surge + self.reverse + self.freeze
    }

    pub fn of<S: Scalar>(belief: &Belief<S>) -> Self {
        let mut c = Self::default();
        for p in &belief.particles {
            match p.maneuver {
                Maneuver::Surge => c.surge += 1,
                Maneuver::Reverse => c.reverse += 1,
                Maneuver::Freeze => c.freeze += 1,
                Maneuver::Nominal => {}
            }
        }
        c
    }
}

/// Planning copy of the belief with `round(ρ_H · N)` existing particles
/// (capped at the number that exist) set to a random counterfactual manoeuvre.
pub fn inject_hypotheses<S: Scalar, R: Rng + ?Sized>(belief: &Belief<S>, rho_h: S, rng: &mut R) -> Belief<S> {
    let mut copy = belief.clone();
    let existing: Vec<usize> = (0..copy.particles.len()).filter(|&i| copy.particles[i].exists).collect();
    let target = (rho_h * S::lit(copy.particles.len() as f64))
        .round()
        .to_usize()
        .unwrap_or(0)
        .min(existing.len());
    if target == 0 {
        return copy;
    }
    for j in index::sample(rng, existing.len(), target) {
        copy.particles[existing[j]].maneuver = match rng.random_range(0..3) {
            0 => Maneuver::Surge,
            1 => Maneuver::Reverse,
            _ => Maneuver::Freeze,
        };
    }
    copy
}

/// Compact per-call summary suitable for trajectory logs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct PlanSummary<S: Scalar = f64> {
    pub g_min: S,
    pub g_mean: S,
    pub p_vis: Vec<S>,
    pub injected: InjectionCounts,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct PlanDiagnostics<S: Scalar = f64> {
    pub g_min: S,
    /// Mean over finite costs of the final round.
    pub g_mean: S,
    pub candidate_g: Vec<S>,
    /// Lowest cost seen up to and including each round.
    pub best_so_far: Vec<S>,
    pub final_distribution: PolicyDistribution<S>,
    pub policy: Policy<S>,
    /// Predicted visibility mass along the executed policy.
    pub p_vis: Vec<S>,
    pub injected: InjectionCounts,
    pub degenerate: bool,
}

impl<S: Scalar> PlanDiagnostics<S> {
    pub fn summary(&self) -> PlanSummary<S> {
        PlanSummary {
            g_min: self.g_min,
            g_mean: self.g_mean,
            p_vis: self.p_vis.clone(),
            injected: self.injected,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Plan<S: Scalar = f64> {
    pub action: Vec2<S>,
    pub diagnostics: PlanDiagnostics<S>,
}

/// Scores candidate policies against a fixed particle set.
pub struct Scorer<'a, S: Scalar> {
    set: &'a RolloutSet<S>,
    ego: &'a KinematicState<S>,
    ctx: &'a PlanningContext<S>,
    config: &'a PlannerConfig<S>,
    scratch: Vec<(Vec2<S>, Vec2<S>, bool)>,
    collision: Vec<S>,
    visible: Vec<S>,
}

impl<'a, S: Scalar> Scorer<'a, S> {
    pub fn new(
        set: &'a RolloutSet<S>,
        ego: &'a KinematicState<S>,
        ctx: &'a PlanningContext<S>,
        config: &'a PlannerConfig<S>,
    ) -> Self {
        Self {
            set,
            ego,
            ctx,
            config,
            scratch: Vec::with_capacity(set.particles.len()),
            collision: Vec::new(),
            visible: Vec::new(),
        }
    }

    pub fn score(&mut self, policy: &Policy<S>) -> S {
        let traj = ego_trajectory(self.ego, policy, self.ctx);
        self.collision.resize(traj.len(), S::zero());
        self.visible.resize(traj.len(), S::zero());
        rollout::rollout_masses(
            self.set,
            &traj,
            self.ctx,
            &mut self.scratch,
            &mut self.collision,
            &mut self.visible,
        );
        efe_from_masses(
            &traj,
            &self.collision,
            &self.visible,
            &self.config.preference,
            self.config.gamma,
        )
    }

    /// Visibility mass per step, as used by the epistemic term.
    pub fn visibility_profile(&mut self, policy: &Policy<S>) -> Vec<S> {
        self.score(policy);
        self.visible.clone()
    }
}

/// MPPI average of `candidates` weighted by `weights`.
pub fn weighted_policy<S: Scalar>(candidates: &[Policy<S>], weights: &[S]) -> Policy<S> {
    let horizon = candidates.first().map_or(0, Policy::horizon);
    let mut actions = vec![Vec2::zero(); horizon];
    for (p, &w) in candidates.iter().zip(weights) {
        if w == S::zero() {
            continue;
        }
        for (acc, &a) in actions.iter_mut().zip(&p.actions) {
            *acc += a * w;
        }
    }
    Policy { actions }
}

/// CEM + MPPI planner holding the warm-started sampling distribution.
#[derive(Debug, Clone)]
pub struct Planner<S: Scalar = f64> {
    config: PlannerConfig<S>,
    distribution: PolicyDistribution<S>,
}

impl<S: Scalar> Planner<S> {
    pub fn new(config: PlannerConfig<S>) -> Result<Self> {
        config.validate()?;
        let distribution = PolicyDistribution::new(config.horizon, config.init_std);
        Ok(Self { config, distribution })
    }

    pub fn config(&self) -> &PlannerConfig<S> {
        &self.config
    }

    pub fn distribution(&self) -> &PolicyDistribution<S> {
        &self.distribution
    }

    pub fn reset(&mut self) {
        self.distribution = PolicyDistribution::new(self.config.horizon, self.config.init_std);
    }

    pub fn plan<R: Rng + ?Sized>(
        &mut self,
        belief: &Belief<S>,
        ego: &KinematicState<S>,
        ctx: &PlanningContext<S>,
        rng: &mut R,
    ) -> Plan<S> {
        let cfg = &self.config;
        let planning = inject_hypotheses(belief, cfg.rho_h, rng);
        let injected = InjectionCounts::of(&planning);
        let set = RolloutSet::from_belief(&planning);
        let mut scorer = Scorer::new(&set, ego, ctx, cfg);

        let mut dist = self.distribution.clone();
        // sampling restarts from the initial spread around the warm-started mean
        for s in dist.std.iter_mut() {
            *s = cfg.init_std;
        }
        let n_elite = cfg.elite_count();
        let mut best = S::infinity();
        let mut best_so_far = Vec::with_capacity(cfg.cem_iters);
        let mut candidates: Vec<Policy<S>> = Vec::with_capacity(cfg.m);
        let mut costs: Vec<S> = Vec::with_capacity(cfg.m);
        for iter in 0..cfg.cem_iters {
            candidates.clear();
            costs.clear();
            for i in 0..cfg.m {
                let p = if i == 0 && cfg.m >= 2 {
                    dist.mean_policy(&ctx.bounds)
                } else {
                    dist.sample(&ctx.bounds, rng)
                };
                costs.push(scorer.score(&p));
                candidates.push(p);
            }
            for &g in &costs {
                if g.is_finite() && g < best {
                    best = g;
                }
            }
            best_so_far.push(best);
            if iter + 1 < cfg.cem_iters {
                let mut order: Vec<usize> = (0..cfg.m).collect();
                order.sort_by(|&a, &b| {
                    let (ga, gb) = (costs[a], costs[b]);
                    match (ga.is_finite(), gb.is_finite()) {
                        (true, true) => ga.partial_cmp(&gb).unwrap_or(std::cmp::Ordering::Equal),
                        (true, false) => std::cmp::Ordering::Less,
                        (false, true) => std::cmp::Ordering::Greater,
                        (false, false) => std::cmp::Ordering::Equal,
                    }
                });
                let elites: Vec<&Policy<S>> = order[..n_elite]
                    .iter()
                    .filter(|&&i| costs[i].is_finite())
                    .map(|&i| &candidates[i])
                    .collect();
                if !elites.is_empty() {
                    dist.refit(&elites, cfg.std_floor);
                }
            }
        }

        let finite: Vec<S> = costs.iter().copied().filter(|g| g.is_finite()).collect();
        let (policy, degenerate) = match mppi_weights(&costs, cfg.lambda) {
            Some(w) => (weighted_policy(&candidates, &w), false),
            None => {
                log::error!("every candidate policy has a non-finite cost; commanding zero acceleration");
                (Policy::constant(Vec2::zero(), cfg.horizon), true)
            }
        };
        let p_vis = if degenerate {
            Vec::new()
        } else {
            scorer.visibility_profile(&policy)
        };
        let action = ctx.bounds.clamp(policy.actions[0]);

        self.distribution.mean = policy.actions[1..]
            .iter()
            .copied()
            .chain(std::iter::once(Vec2::zero()))
            .collect();
        self.distribution.std = dist.std.clone();

        let g_min = finite.iter().copied().fold(S::infinity(), S::min);
        let g_mean = if finite.is_empty() {
            S::nan()
        } else {
            finite.iter().copied().sum::<S>() / S::lit(finite.len() as f64)
        };
        Plan {
            action,
            diagnostics: PlanDiagnostics {
                g_min,
                g_mean,
                candidate_g: costs,
                best_so_far,
                final_distribution: dist,
                policy,
                p_vis,
                injected,
                degenerate,
            },
        }
    }
}
