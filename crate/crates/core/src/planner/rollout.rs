//! Deterministic forward simulation of particles under a candidate policy.

use std::collections::HashMap;

use crate::belief::{Belief, Hypothesis, Maneuver};
use crate::geometry::{is_visible, Vec2};
use crate::scalar::Scalar;
use crate::world::{step_ego, KinematicState};

use super::{Policy, PlanningContext};

/// Existing-particle summary used inside rollouts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RolloutParticle<S: Scalar = f64> {
    pub weight: S,
    pub position: Vec2<S>,
    pub velocity: Vec2<S>,
    pub hypothesis: Hypothesis<S>,
    pub maneuver: Maneuver,
}

impl<S: Scalar> RolloutParticle<S> {
    /// State at the start of the rollout after applying the manoeuvre's initial change.
    pub fn initial_velocity(&self) -> Vec2<S> {
        match self.maneuver {
            Maneuver::Nominal | Maneuver::Surge => self.velocity,
            Maneuver::Reverse => Vec2::new(self.velocity.x, -self.velocity.y),
            Maneuver::Freeze => Vec2::zero(),
        }
    }

    /// One semi-implicit step given the ego's longitudinal position after its own step.
    #[inline]
    pub fn advance(&self, pos: &mut Vec2<S>, vel: &mut Vec2<S>, ego_x: S, dt: S) {
        let accel = match self.maneuver {
            Maneuver::Nominal => self.hypothesis.nominal_accel(pos.x, vel.y, ego_x, dt),
            Maneuver::Surge => self.hypothesis.crossing_accel(vel.y, dt),
            Maneuver::Reverse | Maneuver::Freeze => S::zero(),
        };
        vel.y = vel.y + accel * dt;
        *pos += *vel * dt;
    }
}

/// Planning view of a belief: existing particles merged by identical state.
#[derive(Debug, Clone, PartialEq)]
pub struct RolloutSet<S: Scalar = f64> {
    pub particles: Vec<RolloutParticle<S>>,
    /// Weight of particles with no pedestrian; they never collide nor become visible.
    pub absent_mass: S,
}

impl<S: Scalar> RolloutSet<S> {
    pub fn from_belief(belief: &Belief<S>) -> Self {
        let mut index: HashMap<[u64; 8], usize> = HashMap::new();
        let mut particles: Vec<RolloutParticle<S>> = Vec::new();
        let mut absent_mass = S::zero();
        for p in &belief.particles {
            if !p.exists {
                absent_mass = absent_mass + p.weight;
                continue;
            }
            let m = &p.kinematics.mean;
            let h = &p.hypothesis;
            let key = [
                m[0].to_f64_lossy().to_bits(),
                m[1].to_f64_lossy().to_bits(),
                m[2].to_f64_lossy().to_bits(),
                m[3].to_f64_lossy().to_bits(),
                h.d_act.to_f64_lossy().to_bits(),
                h.v_target.to_f64_lossy().to_bits(),
                h.a_cap.to_f64_lossy().to_bits(),
                p.maneuver as u64,
            ];
            match index.get(&key) {
                Some(&i) => particles[i].weight = particles[i].weight + p.weight,
                None => {
                    index.insert(key, particles.len());
                    particles.push(RolloutParticle {
                        weight: p.weight,
                        position: p.kinematics.position(),
                        velocity: p.kinematics.velocity(),
                        hypothesis: p.hypothesis,
                        maneuver: p.maneuver,
                    });
                }
            }
        }
        Self {
            particles,
            absent_mass,
        }
    }
}

/// Ego trajectory `ō_e` for steps `1..=T`.
pub fn ego_trajectory<S: Scalar>(
    ego: &KinematicState<S>,
    policy: &Policy<S>,
    ctx: &PlanningContext<S>,
) -> Vec<KinematicState<S>> {
    let mut state = *ego;
    policy
        .actions
        .iter()
        .map(|&a| {
            state = step_ego(&state, a, ctx.dt, &ctx.bounds);
            state
        })
        .collect()
}

/// Per-step, per-particle predicted observations.
#[derive(Debug, Clone, PartialEq)]
pub struct RolloutTrace<S: Scalar = f64> {
    pub ego: Vec<KinematicState<S>>,
    /// `visible[k][n]`
    pub visible: Vec<Vec<bool>>,
    /// `collision[k][n]`
    pub collision: Vec<Vec<bool>>,
    pub particles: Vec<RolloutParticle<S>>,
    pub pedestrian: Vec<Vec<Vec2<S>>>,
}

/// Full rollout keeping every predicted observation.
///
/// A collision ends an episode, so once a particle's pedestrian touches the
/// ego its collision outcome stays on for the rest of the horizon.
///
/// Particles without a pedestrian are omitted; they contribute `ō_p = 0`
/// and `ō_c = 0` at every step.
pub fn rollout<S: Scalar>(
    set: &RolloutSet<S>,
    ego: &KinematicState<S>,
    policy: &Policy<S>,
    ctx: &PlanningContext<S>,
) -> RolloutTrace<S> {
    let ego_traj = ego_trajectory(ego, policy, ctx);
    let n = set.particles.len();
    let mut pos: Vec<Vec2<S>> = set.particles.iter().map(|p| p.position).collect();
    let mut vel: Vec<Vec2<S>> = set.particles.iter().map(|p| p.initial_velocity()).collect();
    let mut visible = Vec::with_capacity(ego_traj.len());
    let mut collision = Vec::with_capacity(ego_traj.len());
    let mut pedestrian = Vec::with_capacity(ego_traj.len());
    let mut hit = vec![false; n];
    for e in &ego_traj {
        let mut vis_k = Vec::with_capacity(n);
        let mut col_k = Vec::with_capacity(n);
        for (i, p) in set.particles.iter().enumerate() {
            p.advance(&mut pos[i], &mut vel[i], e.position.x, ctx.dt);
            vis_k.push(is_visible(e.position, pos[i], &ctx.occluder));
            hit[i] |= e.position.distance(pos[i]) < ctx.collision_radius;
            col_k.push(hit[i]);
        }
        visible.push(vis_k);
        collision.push(col_k);
        pedestrian.push(pos.clone());
    }
    RolloutTrace {
        ego: ego_traj,
        visible,
        collision,
        particles: set.particles.clone(),
        pedestrian,
    }
}

/// Weighted collision and visibility mass per step, without storing the trace.
pub(crate) fn rollout_masses<S: Scalar>(
    set: &RolloutSet<S>,
    ego_traj: &[KinematicState<S>],
    ctx: &PlanningContext<S>,
    scratch: &mut Vec<(Vec2<S>, Vec2<S>, bool)>,
    collision_mass: &mut [S],
    visible_mass: &mut [S],
) {
    collision_mass.iter_mut().for_each(|c| *c = S::zero());
    visible_mass.iter_mut().for_each(|v| *v = S::zero());
    scratch.clear();
    scratch.extend(set.particles.iter().map(|p| (p.position, p.initial_velocity(), false)));
    let r2 = ctx.collision_radius * ctx.collision_radius;
    for (k, e) in ego_traj.iter().enumerate() {
        let (mut col, mut vis) = (S::zero(), S::zero());
        for (p, (pos, vel, hit)) in set.particles.iter().zip(scratch.iter_mut()) {
            p.advance(pos, vel, e.position.x, ctx.dt);
            *hit |= (e.position - *pos).norm_sq() < r2;
            if *hit {
                col = col + p.weight;
            }
            if is_visible(e.position, *pos, &ctx.occluder) {
                vis = vis + p.weight;
            }
        }
        collision_mass[k] = col;
        visible_mass[k] = vis;
    }
}
