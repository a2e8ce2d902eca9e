//! Hybrid belief over pedestrian existence and kinematics.
//!
//! A Rao-Blackwellized particle filter: each particle samples the discrete
//! part (existence, behavioural hypothesis) and carries a Kalman filter over
//! position and velocity. Particles whose predicted occlusion is unresolved
//! while nothing is seen snap back to their initial anchor, which keeps the
//! existence belief from decaying through mere non-observation.

mod kalman;
mod resample;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};
use crate::geometry::{is_visible, Occluder, Vec2};
use crate::scalar::Scalar;
use crate::world::{ClippedGaussian, KinematicState, Observation};

pub use kalman::{floor_eigenvalues, symmetric_eigen, symmetric_eigenvalues, GaussianBelief, Mat4};
pub use resample::{effective_sample_size, systematic_indices};

/// Behavioural hypothesis carried by one particle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct Hypothesis<S: Scalar = f64> {
    pub d_act: S,
    pub v_target: S,
    pub a_cap: S,
}

impl<S: Scalar> Hypothesis<S> {
    /// Lateral control input of the nominal crossing model.
    #[inline]
    pub fn crossing_accel(&self, vy: S, dt: S) -> S {
        ((self.v_target - vy) / dt).clamp_to(-self.a_cap, self.a_cap)
    }

    /// Nominal control: inert until the ego's longitudinal gap drops below `d_act`.
    #[inline]
    pub fn nominal_accel(&self, ped_x: S, ped_vy: S, ego_x: S, dt: S) -> S {
        if ped_x - ego_x < self.d_act {
            self.crossing_accel(ped_vy, dt)
        } else {
            S::zero()
        }
    }
}

/// Counterfactual manoeuvre, only ever set on planning copies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Maneuver {
    #[default]
    Nominal,
    Surge,
    Reverse,
    Freeze,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct Particle<S: Scalar = f64> {
    pub weight: S,
    pub exists: bool,
    pub kinematics: GaussianBelief<S>,
    /// Initial kinematic hypothesis; never modified after initialisation.
    pub anchor: GaussianBelief<S>,
    pub hypothesis: Hypothesis<S>,
    pub maneuver: Maneuver,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct Belief<S: Scalar = f64> {
    pub particles: Vec<Particle<S>>,
    pub step: usize,
}

/// Predicted observation flags for one particle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct PredictedFlags {
    /// Particle's pedestrian would be in line of sight.
    pub visible: bool,
    /// Visible, or the particle's anchor is in line of sight.
    pub resolved: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct Range<S: Scalar = f64> {
    pub lo: S,
    pub hi: S,
}

impl<S: Scalar> Range<S> {
    pub fn new(lo: f64, hi: f64) -> Self {
        Self {
            lo: S::lit(lo),
            hi: S::lit(hi),
        }
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> S {
        let u: f64 = rng.random();
        self.lo + (self.hi - self.lo) * S::lit(u)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct HypothesisPrior<S: Scalar = f64> {
    pub d_act: Range<S>,
    pub v_target: Range<S>,
    pub a_cap: Range<S>,
}

impl<S: Scalar> Default for HypothesisPrior<S> {
    fn default() -> Self {
        Self {
            d_act: Range::new(10.0, 25.0),
            v_target: Range::new(4.0, 8.0),
            a_cap: Range::new(4.0, 8.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, bound = "S: Scalar")]
pub struct BeliefConfig<S: Scalar = f64> {
    pub n_particles: usize,
    /// Prior probability that a pedestrian hides behind the occluder.
    pub b0_zp: S,
    /// Missed-detection probability.
    pub eps_fn: S,
    /// False-alarm probability when the hypothesised spot is in view.
    pub eps_fp: S,
    /// Collision-flag error probability.
    pub eps_c: S,
    /// Measurement density of a detection when no pedestrian exists (1/m²).
    pub clutter_density: S,
    /// Per-second process noise variances for (x, y, vx, vy).
    pub process_noise: [S; 4],
    pub measurement_std: Vec2<S>,
    pub anchor_position_std: Vec2<S>,
    pub anchor_velocity_std: Vec2<S>,
    pub hypothesis_prior: HypothesisPrior<S>,
    /// Resample when `N_eff < ess_threshold * N`.
    pub ess_threshold: S,
    pub conditional_reset: bool,
}

impl<S: Scalar> Default for BeliefConfig<S> {
    fn default() -> Self {
        Self {
            n_particles: 100,
            b0_zp: S::lit(0.8),
            eps_fn: S::lit(0.01),
            eps_fp: S::lit(0.01),
            eps_c: S::lit(0.01),
            clutter_density: S::lit(1.0 / 400.0),
            process_noise: [0.01, 0.01, 0.25, 0.25].map(S::lit),
            measurement_std: Vec2::new(S::lit(0.05), S::lit(0.05)),
            anchor_position_std: Vec2::new(S::lit(0.5), S::lit(1.0)),
            anchor_velocity_std: Vec2::new(S::lit(0.5), S::lit(1.0)),
            hypothesis_prior: HypothesisPrior::default(),
            ess_threshold: S::lit(0.5),
            conditional_reset: true,
        }
    }
}

fn check_probability<S: Scalar>(name: &'static str, p: S) -> Result<()> {
    if p >= S::zero() && p <= S::one() {
        Ok(())
    } else {
        Err(Error::InvalidProbability {
            name,
            value: p.to_f64_lossy(),
        })
    }
}

impl<S: Scalar> BeliefConfig<S> {
    pub fn validate(&self) -> Result<()> {
        ensure(self.n_particles >= 1, || "n_particles must be >= 1".into())?;
        check_probability("b0_zp", self.b0_zp)?;
        check_probability("eps_fn", self.eps_fn)?;
        check_probability("eps_fp", self.eps_fp)?;
        check_probability("eps_c", self.eps_c)?;
        check_probability("ess_threshold", self.ess_threshold)?;
        ensure(self.clutter_density > S::zero(), || {
            "clutter_density must be > 0".into()
        })?;
        ensure(
            self.measurement_std.x >= S::zero() && self.measurement_std.y >= S::zero(),
            || "measurement std must be >= 0".into(),
        )?;
        ensure(self.process_noise.iter().all(|&q| q >= S::zero()), || {
            "process noise must be >= 0".into()
        })
    }

    pub fn measurement_variance(&self) -> [S; 2] {
        [
            self.measurement_std.x * self.measurement_std.x,
            self.measurement_std.y * self.measurement_std.y,
        ]
    }

    fn anchor_variances(&self) -> [S; 4] {
        let sq = |v: S| v * v;
        [
            sq(self.anchor_position_std.x),
            sq(self.anchor_position_std.y),
            sq(self.anchor_velocity_std.x),
            sq(self.anchor_velocity_std.y),
        ]
    }
}

/// Scene geometry the filter needs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterContext<S: Scalar = f64> {
    pub occluder: Occluder<S>,
    pub dt: S,
    pub collision_radius: S,
}

/// Per-step record of what the update did.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct UpdateReport {
    pub resets: usize,
    pub resampled: bool,
    pub degenerate: bool,
}

/// Compact per-step summary written to episode logs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct BeliefSummary<S: Scalar = f64> {
    pub b_zp: S,
    pub mean_position: Option<Vec2<S>>,
    pub cov_trace: S,
    pub n_eff: S,
}

impl<S: Scalar> Belief<S> {
    /// Samples the initial particle set.
    pub fn init<R: Rng + ?Sized>(
        config: &BeliefConfig<S>,
        anchor_prior: &ClippedGaussian<S>,
        occluder: &Occluder<S>,
        rng: &mut R,
    ) -> Result<Self> {
        config.validate()?;
        let n = config.n_particles;
        let w = S::one() / S::lit(n as f64);
        let variances = config.anchor_variances();
        let b0 = config.b0_zp.to_f64_lossy();
        let particles = (0..n)
            .map(|_| {
                let exists = rng.random::<f64>() < b0;
                let anchor = GaussianBelief::new(
                    anchor_prior.sample(occluder, rng),
                    Vec2::zero(),
                    variances,
                );
                let prior = &config.hypothesis_prior;
                let hypothesis = Hypothesis {
                    d_act: prior.d_act.sample(rng),
                    v_target: prior.v_target.sample(rng),
                    a_cap: prior.a_cap.sample(rng),
                };
                Particle {
                    weight: w,
                    exists,
                    kinematics: anchor,
                    anchor,
                    hypothesis,
                    maneuver: Maneuver::Nominal,
                }
            })
            .collect();
        Ok(Self { particles, step: 0 })
    }

    pub fn from_particles(particles: Vec<Particle<S>>) -> Result<Self> {
        ensure(!particles.is_empty(), || "belief needs at least one particle".into())?;
        let mut b = Self { particles, step: 0 };
        b.normalize();
        Ok(b)
    }

    pub fn len(&self) -> usize {
        self.particles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.particles.is_empty()
    }

    /// Existence belief `Σ w ẑ_p`.
    pub fn existence_probability(&self) -> S {
        self.particles
            .iter()
            .filter(|p| p.exists)
            .map(|p| p.weight)
            .sum()
    }

    pub fn weight_sum(&self) -> S {
        self.particles.iter().map(|p| p.weight).sum()
    }

    pub fn effective_sample_size(&self) -> S {
        effective_sample_size(self.particles.iter().map(|p| p.weight))
    }

    fn normalize(&mut self) {
        let total = self.weight_sum();
        if total > S::zero() && total.is_finite() {
            for p in &mut self.particles {
                p.weight = p.weight / total;
            }
        } else {
            let w = S::one() / S::lit(self.particles.len() as f64);
            for p in &mut self.particles {
                p.weight = w;
            }
        }
    }

    pub fn summary(&self) -> BeliefSummary<S> {
        let b_zp = self.existence_probability();
        let mut mean_position = None;
        let mut cov_trace = S::zero();
        if b_zp > S::zero() {
            let mut m = Vec2::zero();
            for p in self.particles.iter().filter(|p| p.exists) {
                m += p.kinematics.position() * p.weight;
                cov_trace = cov_trace + p.weight * p.kinematics.trace();
            }
            mean_position = Some(m * (S::one() / b_zp));
            cov_trace = cov_trace / b_zp;
        }
        BeliefSummary {
            b_zp,
            mean_position,
            cov_trace,
            n_eff: self.effective_sample_size(),
        }
    }
}

/// Predicted occlusion flags for a particle given the ego position.
pub fn predicted_flags<S: Scalar>(particle: &Particle<S>, ego: Vec2<S>, occ: &Occluder<S>) -> PredictedFlags {
    let visible = is_visible(ego, particle.kinematics.position(), occ);
    let resolved = visible || is_visible(ego, particle.anchor.position(), occ);
    PredictedFlags { visible, resolved }
}

/// Propagates every particle through its nominal motion model.
///
/// Weights carry over unchanged. Returns the prior and per-particle flags.
pub fn predict<S: Scalar>(
    belief: &Belief<S>,
    ego_next: &KinematicState<S>,
    config: &BeliefConfig<S>,
    ctx: &FilterContext<S>,
) -> (Belief<S>, Vec<PredictedFlags>) {
    let mut prior = belief.clone();
    prior.step += 1;
    let flags = prior
        .particles
        .iter_mut()
        .map(|p| {
            if p.exists {
                let k = &p.kinematics;
                let accel = p
                    .hypothesis
                    .nominal_accel(k.mean[0], k.mean[3], ego_next.position.x, ctx.dt);
                p.kinematics = k.predict(accel, ctx.dt, &config.process_noise);
            }
            predicted_flags(p, ego_next.position, &ctx.occluder)
        })
        .collect();
    (prior, flags)
}

/// Reverts kinematics to the anchor when nothing is seen and the particle's
/// occlusion is unresolved. Returns the updated particle and whether it reset.
pub fn conditional_reset<S: Scalar>(particle: &Particle<S>, observed: bool, resolved: bool) -> (Particle<S>, bool) {
    let mut out = *particle;
    let reset = !observed && !resolved;
    if reset {
        out.kinematics = out.anchor;
    }
    (out, reset)
}

/// Existence likelihood `P_exist(o_p | ẑ_p, ō_r)`.
pub fn existence_likelihood<S: Scalar>(
    observed: bool,
    exists: bool,
    resolved: bool,
    config: &BeliefConfig<S>,
) -> S {
    match (observed, resolved, exists) {
        (true, _, false) => config.eps_fn,
        (true, _, true) => S::one() - config.eps_fn,
        (false, true, false) => S::one() - config.eps_fp,
        (false, true, true) => config.eps_fp,
        (false, false, _) => S::one(),
    }
}

/// Log of the full per-particle observation likelihood.
pub fn log_likelihood<S: Scalar>(
    particle: &Particle<S>,
    obs: &Observation<S>,
    resolved: bool,
    ego: Vec2<S>,
    config: &BeliefConfig<S>,
    ctx: &FilterContext<S>,
) -> S {
    let mut ll = existence_likelihood(obs.ped_visible, particle.exists, resolved, config).ln();
    if let (true, Some(z)) = (obs.ped_visible, obs.ped_position) {
        let overlap = particle.exists && ego.distance(particle.kinematics.position()) < ctx.collision_radius;
        let p_collision = if overlap == obs.collision {
            S::one() - config.eps_c
        } else {
            config.eps_c
        };
        let p_position = if particle.exists {
            particle
                .kinematics
                .measurement_log_likelihood(z, config.measurement_variance())
        } else {
            config.clutter_density.ln()
        };
        ll = ll + p_position + p_collision.ln();
    }
    ll
}

/// Multiplies weights by the observation likelihood and renormalizes.
///
/// `resolved` holds the flags recomputed after the conditional reset. When
/// every particle has the same likelihood the weights are left bit-identical.
/// A set with zero total likelihood falls back to uniform weights.
pub fn reweight<S: Scalar>(
    particles: &mut [Particle<S>],
    obs: &Observation<S>,
    resolved: &[bool],
    ego: Vec2<S>,
    config: &BeliefConfig<S>,
    ctx: &FilterContext<S>,
) -> bool {
    let lls: Vec<S> = particles
        .iter()
        .zip(resolved)
        .map(|(p, &r)| log_likelihood(p, obs, r, ego, config, ctx))
        .collect();
    if lls.iter().all(|&l| l == lls[0]) && lls[0].is_finite() {
        return false;
    }
    let max = lls
        .iter()
        .zip(particles.iter())
        .filter(|(_, p)| p.weight > S::zero())
        .map(|(&l, _)| l)
        .fold(S::neg_infinity(), S::max);
    let mut total = S::zero();
    if max.is_finite() {
        for (p, &l) in particles.iter_mut().zip(&lls) {
            p.weight = p.weight * (l - max).exp();
            total = total + p.weight;
        }
    }
    let n = S::lit(particles.len() as f64);
    if total > S::zero() && total.is_finite() {
        for p in particles.iter_mut() {
            p.weight = p.weight / total;
        }
        false
    } else {
        log::warn!("all particles have zero likelihood; resetting weights to uniform");
        for p in particles.iter_mut() {
            p.weight = S::one() / n;
        }
        true
    }
}

/// Kalman position update of an existing particle.
pub fn kf_correct<S: Scalar>(particle: &Particle<S>, z: Vec2<S>, r: [S; 2]) -> Particle<S> {
    let mut out = *particle;
    if out.exists {
        out.kinematics = out.kinematics.correct(z, r);
    }
    out
}

/// Systematic resampling gated on the effective sample size.
///
/// Returns whether a resample took place.
pub fn systematic_resample<S: Scalar, R: Rng + ?Sized>(
    belief: &mut Belief<S>,
    ess_threshold: S,
    rng: &mut R,
) -> bool {
    let n = belief.particles.len();
    let n_eff = belief.effective_sample_size();
    if n_eff >= ess_threshold * S::lit(n as f64) {
        return false;
    }
    let weights: Vec<S> = belief.particles.iter().map(|p| p.weight).collect();
    let w = S::one() / S::lit(n as f64);
    belief.particles = systematic_indices(&weights, n, rng)
        .into_iter()
        .map(|i| Particle {
            weight: w,
            ..belief.particles[i]
        })
        .collect();
    true
}

/// Correction half of the update: reset, reweight, Kalman update, resample.
pub fn correct<S: Scalar, R: Rng + ?Sized>(
    prior: Belief<S>,
    flags: &[PredictedFlags],
    obs: &Observation<S>,
    ego: &KinematicState<S>,
    config: &BeliefConfig<S>,
    ctx: &FilterContext<S>,
    rng: &mut R,
) -> (Belief<S>, UpdateReport) {
    let mut report = UpdateReport::default();
    let mut posterior = prior;
    let mut resolved = Vec::with_capacity(posterior.particles.len());
    for (p, f) in posterior.particles.iter_mut().zip(flags) {
        if config.conditional_reset {
            let (q, did_reset) = conditional_reset(p, obs.ped_visible, f.resolved);
            if did_reset {
                *p = q;
                report.resets += 1;
                resolved.push(predicted_flags(p, ego.position, &ctx.occluder).resolved);
                continue;
            }
        }
        resolved.push(f.resolved);
    }

    report.degenerate = reweight(
        &mut posterior.particles,
        obs,
        &resolved,
        ego.position,
        config,
        ctx,
    );

    if let (true, Some(z)) = (obs.ped_visible, obs.ped_position) {
        let r = config.measurement_variance();
        for p in &mut posterior.particles {
            *p = kf_correct(p, z, r);
        }
    }

    report.resampled = systematic_resample(&mut posterior, config.ess_threshold, rng);
    (posterior, report)
}

/// Full belief update `B_{t-1} → B_t` for the ego state after the previous action.
pub fn update<S: Scalar, R: Rng + ?Sized>(
    belief: &Belief<S>,
    obs: &Observation<S>,
    ego: &KinematicState<S>,
    config: &BeliefConfig<S>,
    ctx: &FilterContext<S>,
    rng: &mut R,
) -> (Belief<S>, UpdateReport) {
    let (prior, flags) = predict(belief, ego, config, ctx);
    correct(prior, &flags, obs, ego, config, ctx, rng)
}

/// Folds in an observation without a motion step (used for the very first frame).
pub fn absorb<S: Scalar, R: Rng + ?Sized>(
    belief: &Belief<S>,
    obs: &Observation<S>,
    ego: &KinematicState<S>,
    config: &BeliefConfig<S>,
    ctx: &FilterContext<S>,
    rng: &mut R,
) -> (Belief<S>, UpdateReport) {
    let flags: Vec<PredictedFlags> = belief
        .particles
        .iter()
        .map(|p| predicted_flags(p, ego.position, &ctx.occluder))
        .collect();
    correct(belief.clone(), &flags, obs, ego, config, ctx, rng)
}
