//! Expected free energy of a policy, approximated over belief particles.
//!
//! With deterministic rollouts the per-step EFE reduces to a pragmatic part
//! (negative log preference of the predicted outcomes, averaged over particles)
//! minus an epistemic part: the entropy of the predicted visibility mixture.
//! Visibility is the only observation channel whose predicted outcome depends
//! on the hidden state in a cheap, discrete way, so it carries the information
//! gain term.

use serde::{Deserialize, Serialize};

use crate::error::{ensure, Result};
use crate::scalar::Scalar;
use crate::world::KinematicState;

use super::rollout::RolloutTrace;

/// Preference over outcomes, `log P_d` up to a constant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar", default)]
pub struct Preference<S: Scalar = f64> {
    pub kappa_c: S,
    pub v_des: S,
    pub sigma_v: S,
    pub sigma_y: S,
    pub w_eps: S,
}

impl<S: Scalar> Default for Preference<S> {
    fn default() -> Self {
        Self {
            kappa_c: S::lit(50.0),
            v_des: S::lit(10.0),
            sigma_v: S::lit(2.0),
            sigma_y: S::lit(1.5),
            w_eps: S::one(),
        }
    }
}

impl<S: Scalar> Preference<S> {
    pub fn validate(&self) -> Result<()> {
        ensure(self.kappa_c >= S::zero(), || "kappa_c must be non-negative".into())?;
        ensure(self.sigma_v > S::zero() && self.sigma_y > S::zero(), || {
            "preference widths must be positive".into()
        })?;
        ensure(self.w_eps >= S::zero(), || "w_eps must be non-negative".into())
    }

    /// `-log P_d` terms that depend only on the ego.
    #[inline]
    pub fn ego_cost(&self, ego: &KinematicState<S>) -> S {
        let two = S::lit(2.0);
        let dv = ego.velocity.x - self.v_des;
        let y = ego.position.y;
        dv * dv / (two * self.sigma_v * self.sigma_v) + y * y / (two * self.sigma_y * self.sigma_y)
    }
}

/// Entropy in nats of a Bernoulli variable; zero at the endpoints.
#[inline]
pub fn bernoulli_entropy<S: Scalar>(p: S) -> S {
    let p = p.clamp_to(S::zero(), S::one());
    let term = |q: S| if q > S::zero() { -q * q.ln() } else { S::zero() };
    term(p) + term(S::one() - p)
}

/// Discounted EFE from per-step collision and visibility mass.
pub fn efe_from_masses<S: Scalar>(
    ego: &[KinematicState<S>],
    collision_mass: &[S],
    visible_mass: &[S],
    pref: &Preference<S>,
    gamma: S,
) -> S {
    let mut discount = S::one();
    let mut total = S::zero();
    for ((e, &c), &v) in ego.iter().zip(collision_mass).zip(visible_mass) {
        discount = discount * gamma;
        let step = pref.kappa_c * c + pref.ego_cost(e) - pref.w_eps * bernoulli_entropy(v);
        total = total + discount * step;
    }
    total
}

/// `G(π)` from a full rollout trace. Particle weights must be normalized over
/// the whole belief, including particles without a pedestrian.
pub fn efe<S: Scalar>(trace: &RolloutTrace<S>, pref: &Preference<S>, gamma: S) -> S {
    let mass = |flags: &Vec<bool>| -> S {
        flags
            .iter()
            .zip(&trace.particles)
            .filter(|(&f, _)| f)
            .map(|(_, p)| p.weight)
            .sum()
    };
    let collision: Vec<S> = trace.collision.iter().map(mass).collect();
    let visible: Vec<S> = trace.visible.iter().map(mass).collect();
    efe_from_masses(&trace.ego, &collision, &visible, pref, gamma)
}

/// Softmax weights `exp(-(G - G_min) / λ)`, normalized.
///
/// Non-finite costs get zero weight; `None` when no cost is finite.
pub fn mppi_weights<S: Scalar>(costs: &[S], lambda: S) -> Option<Vec<S>> {
    let g_min = costs
        .iter()
        .copied()
        .filter(|g| g.is_finite())
        .fold(None, |acc: Option<S>, g| Some(acc.map_or(g, |a| a.min(g))))?;
    let raw: Vec<S> = costs
        .iter()
        .map(|&g| {
            if g.is_finite() {
                (-(g - g_min) / lambda).exp()
            } else {
                S::zero()
            }
        })
        .collect();
    let sum: S = raw.iter().copied().sum();
    Some(raw.into_iter().map(|w| w / sum).collect())
}
