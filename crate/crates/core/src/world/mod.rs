//! Ground-truth simulation of the ego vehicle, the occluder and one pedestrian.

mod env;
mod pedestrian;
mod scenario;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{ensure, Result};
use crate::geometry::{is_visible, Occluder, Vec2};
use crate::scalar::Scalar;

pub use env::{Env, Status};
pub use pedestrian::{braking_speed, step_pedestrian, HesitantPhase, PedMemory};
pub use scenario::{sample_scenario, BehaviorMode, ClippedGaussian, ModeParams, ScenarioParams};

/// Position, velocity and acceleration of a point agent.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct KinematicState<S: Scalar = f64> {
    pub position: Vec2<S>,
    pub velocity: Vec2<S>,
    pub acceleration: Vec2<S>,
}

impl<S: Scalar> KinematicState<S> {
    pub fn at_rest(position: Vec2<S>) -> Self {
        Self {
            position,
            ..Self::default()
        }
    }

    pub fn is_finite(&self) -> bool {
        self.position.is_finite() && self.velocity.is_finite() && self.acceleration.is_finite()
    }
}

/// Per-axis acceleration limits for the ego.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct ActionBounds<S: Scalar = f64> {
    pub lon_min: S,
    pub lon_max: S,
    pub lat_min: S,
    pub lat_max: S,
}

impl<S: Scalar> Default for ActionBounds<S> {
    fn default() -> Self {
        Self {
            lon_min: S::lit(-6.0),
            lon_max: S::lit(4.0),
            lat_min: S::lit(-3.0),
            lat_max: S::lit(3.0),
        }
    }
}

impl<S: Scalar> ActionBounds<S> {
    #[inline]
    pub fn clamp(&self, a: Vec2<S>) -> Vec2<S> {
        Vec2::new(
            a.x.clamp_to(self.lon_min, self.lon_max),
            a.y.clamp_to(self.lat_min, self.lat_max),
        )
    }

    pub fn contains(&self, a: Vec2<S>) -> bool {
        a.x >= self.lon_min && a.x <= self.lon_max && a.y >= self.lat_min && a.y <= self.lat_max
    }
}

/// What the ego perceives at one step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct Observation<S: Scalar = f64> {
    pub ped_visible: bool,
    pub ped_position: Option<Vec2<S>>,
    pub collision: bool,
}

impl<S: Scalar> Observation<S> {
    pub fn unseen(collision: bool) -> Self {
        Self {
            ped_visible: false,
            ped_position: None,
            collision,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, bound = "S: Scalar")]
pub struct EnvConfig<S: Scalar = f64> {
    pub dt: S,
    pub max_steps: usize,
    pub ego_init: KinematicState<S>,
    pub occluder: Occluder<S>,
    pub collision_radius: S,
    pub goal_x: S,
    pub action_bounds: ActionBounds<S>,
    pub obs_noise_std: Vec2<S>,
    pub seed: u64,
    /// Whether a pedestrian exists at all in this episode.
    pub ped_present: bool,
    /// Emergence-point prior shared with the agent's belief initialisation.
    pub ped_prior: ClippedGaussian<S>,
    /// Lateral speed during a hesitant reversal, as a fraction of `v_max`.
    pub hesitant_reverse_factor: S,
}

impl<S: Scalar> Default for EnvConfig<S> {
    fn default() -> Self {
        Self {
            dt: S::lit(0.1),
            max_steps: 150,
            ego_init: KinematicState {
                position: Vec2::new(S::lit(-25.0), S::zero()),
                velocity: Vec2::new(S::lit(10.0), S::zero()),
                acceleration: Vec2::zero(),
            },
            occluder: Occluder::default(),
            collision_radius: S::one(),
            goal_x: S::lit(30.0),
            action_bounds: ActionBounds::default(),
            obs_noise_std: Vec2::zero(),
            seed: 0,
            ped_present: true,
            ped_prior: ClippedGaussian::default(),
            hesitant_reverse_factor: S::lit(0.5),
        }
    }
}

impl<S: Scalar> EnvConfig<S> {
    pub fn validate(&self) -> Result<()> {
        ensure(self.dt > S::zero(), || format!("dt must be > 0, got {}", self.dt))?;
        ensure(self.max_steps > 0, || "max_steps must be > 0".into())?;
        ensure(self.collision_radius > S::zero(), || {
            "collision_radius must be > 0".into()
        })?;
        let b = &self.action_bounds;
        ensure(b.lon_min < b.lon_max && b.lat_min < b.lat_max, || {
            format!("action bounds need min < max per axis, got {b:?}")
        })?;
        ensure(
            self.occluder.length > S::zero() && self.occluder.width > S::zero(),
            || "occluder length and width must be > 0".into(),
        )?;
        ensure(
            self.obs_noise_std.x >= S::zero() && self.obs_noise_std.y >= S::zero(),
            || "observation noise std must be >= 0".into(),
        )?;
        ensure(self.ego_init.is_finite(), || "ego_init must be finite".into())
    }
}

/// Semi-implicit Euler step of the ego double integrator.
///
/// The action is clamped to `bounds` and the longitudinal speed never goes negative.
pub fn step_ego<S: Scalar>(
    state: &KinematicState<S>,
    action: Vec2<S>,
    dt: S,
    bounds: &ActionBounds<S>,
) -> KinematicState<S> {
    let a = bounds.clamp(action);
    let mut v = state.velocity + a * dt;
    if v.x < S::zero() {
        v.x = S::zero();
    }
    KinematicState {
        position: state.position + v * dt,
        velocity: v,
        acceleration: a,
    }
}

#[inline]
pub fn check_collision<S: Scalar>(ego: &KinematicState<S>, ped: &KinematicState<S>, radius: S) -> bool {
    ego.position.distance(ped.position) < radius
}

/// Generates the ego's observation of the pedestrian.
pub fn observe<S: Scalar, R: Rng + ?Sized>(
    ego: &KinematicState<S>,
    ped: &KinematicState<S>,
    ped_present: bool,
    occ: &Occluder<S>,
    collision: bool,
    noise_std: Vec2<S>,
    rng: &mut R,
) -> Observation<S> {
    if !ped_present || !is_visible(ego.position, ped.position, occ) {
        return Observation::unseen(collision);
    }
    let mut noisy = |std: S| -> S {
        if std > S::zero() {
            S::lit(
                Normal::new(0.0, std.to_f64_lossy())
                    .expect("finite std")
                    .sample(rng),
            )
        } else {
            S::zero()
        }
    };
    let noise = Vec2::new(noisy(noise_std.x), noisy(noise_std.y));
    Observation {
        ped_visible: true,
        ped_position: Some(ped.position + noise),
        collision,
    }
}
