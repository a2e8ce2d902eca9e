//! Pedestrian scenario parameters and their sampling distributions.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::geometry::{Occluder, Vec2};
use crate::scalar::Scalar;

/// The five pedestrian behaviour families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BehaviorMode {
    Hesitant,
    DeceptiveAccelerating,
    TurningBack,
    SuddenStop,
    SuddenAppearance,
}

impl BehaviorMode {
    pub const ALL: [BehaviorMode; 5] = [
        BehaviorMode::Hesitant,
        BehaviorMode::DeceptiveAccelerating,
        BehaviorMode::TurningBack,
        BehaviorMode::SuddenStop,
        BehaviorMode::SuddenAppearance,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BehaviorMode::Hesitant => "hesitant",
            BehaviorMode::DeceptiveAccelerating => "deceptive_accelerating",
            BehaviorMode::TurningBack => "turning_back",
            BehaviorMode::SuddenStop => "sudden_stop",
            BehaviorMode::SuddenAppearance => "sudden_appearance",
        }
    }

    /// Activation distance range in meters.
    pub fn d_act_range(self) -> (f64, f64) {
        match self {
            BehaviorMode::SuddenStop => (15.0, 20.0),
            BehaviorMode::SuddenAppearance => (10.0, 15.0),
            _ => (15.0, 25.0),
        }
    }
}

impl std::fmt::Display for BehaviorMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for BehaviorMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.trim().to_ascii_lowercase().replace('-', "_");
        Self::ALL
            .into_iter()
            .find(|m| m.name() == norm || m.name().split('_').next() == Some(norm.as_str()))
            .ok_or_else(|| format!("unknown pedestrian mode `{s}`"))
    }
}

/// Mode-specific latent parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", bound = "S: Scalar")]
pub enum ModeParams<S: Scalar = f64> {
    Hesitant { t_h: S, t_m: S },
    Deceptive { v_slow: S, d_trig_acc: S },
    TurningBack { d_trig_ret: S, x_lat_turn: S },
    SuddenStop { x_lat_stop: S },
    SuddenAppearance,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct ScenarioParams<S: Scalar = f64> {
    pub mode: BehaviorMode,
    pub ped_initial_position: Vec2<S>,
    pub v_max: S,
    pub a_max: S,
    pub d_act: S,
    pub specific: ModeParams<S>,
}

/// Gaussian over the pedestrian's emergence point, projected onto the occluder footprint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct ClippedGaussian<S: Scalar = f64> {
    pub mean: Vec2<S>,
    pub std: Vec2<S>,
}

impl<S: Scalar> Default for ClippedGaussian<S> {
    fn default() -> Self {
        let s = S::lit(2.0 / 3.0);
        Self {
            mean: Vec2::new(S::lit(12.0), S::lit(-4.0)),
            std: Vec2::new(s, s),
        }
    }
}

impl<S: Scalar> ClippedGaussian<S> {
    pub fn sample<R: Rng + ?Sized>(&self, occ: &Occluder<S>, rng: &mut R) -> Vec2<S> {
        let draw = |mean: S, std: S, rng: &mut R| -> S {
            let std = std.to_f64_lossy();
            let mean = mean.to_f64_lossy();
            if std <= 0.0 {
                return S::lit(mean);
            }
            S::lit(Normal::new(mean, std).expect("finite std").sample(rng))
        };
        let x = draw(self.mean.x, self.std.x, rng);
        let y = draw(self.mean.y, self.std.y, rng);
        occ.clip(Vec2::new(x, y))
    }
}

pub(crate) fn uniform<S: Scalar, R: Rng + ?Sized>(rng: &mut R, lo: f64, hi: f64) -> S {
    let u: f64 = rng.random();
    S::lit(lo + (hi - lo) * u)
}

/// Draws one episode's latent pedestrian parameters.
pub fn sample_scenario<S: Scalar, R: Rng + ?Sized>(
    mode: BehaviorMode,
    prior: &ClippedGaussian<S>,
    occ: &Occluder<S>,
    rng: &mut R,
) -> ScenarioParams<S> {
    let ped_initial_position = prior.sample(occ, rng);
    let v_max = uniform(rng, 4.0, 8.0);
    let a_max = uniform(rng, 4.0, 8.0);
    let (lo, hi) = mode.d_act_range();
    let d_act = uniform(rng, lo, hi);
    let specific = match mode {
        BehaviorMode::Hesitant => ModeParams::Hesitant {
            t_h: uniform(rng, 0.0, 1.0),
            t_m: uniform(rng, 1.5, 2.5),
        },
        BehaviorMode::DeceptiveAccelerating => ModeParams::Deceptive {
            v_slow: uniform(rng, 1.5, 4.0),
            d_trig_acc: uniform(rng, 4.0, 8.0),
        },
        BehaviorMode::TurningBack => ModeParams::TurningBack {
            d_trig_ret: uniform(rng, 4.0, 8.0),
            x_lat_turn: uniform(rng, 2.0, 6.0),
        },
        BehaviorMode::SuddenStop => ModeParams::SuddenStop {
            x_lat_stop: uniform(rng, 0.0, 4.0),
        },
        BehaviorMode::SuddenAppearance => ModeParams::SuddenAppearance,
    };
    ScenarioParams {
        mode,
        ped_initial_position,
        v_max,
        a_max,
        d_act,
        specific,
    }
}
