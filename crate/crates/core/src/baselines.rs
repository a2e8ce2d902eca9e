//! Comparison agents: a purely reactive sampling planner and a rule-based
//! slow-down wrapper around it.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::belief::{Belief, GaussianBelief, Hypothesis, Maneuver, Particle};
use crate::error::{ensure, Result};
use crate::geometry::Vec2;
use crate::planner::{Plan, Planner, PlannerConfig, PlanningContext};
use crate::scalar::Scalar;
use crate::world::{ActionBounds, KinematicState, Observation};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, bound = "S: Scalar")]
pub struct RuleConfig<S: Scalar = f64> {
    pub caution_zone_start: S,
    pub caution_zone_end: S,
    pub v_caution: S,
    /// Proportional gain on the speed error, 1/s.
    pub gain: S,
}

impl<S: Scalar> Default for RuleConfig<S> {
    fn default() -> Self {
        Self {
            caution_zone_start: S::lit(-15.0),
            caution_zone_end: S::lit(10.0),
            // gives a pedestrian-free pass time of about 7.7 s
            v_caution: S::lit(5.2),
            gain: S::lit(2.0),
        }
    }
}

impl<S: Scalar> RuleConfig<S> {
    pub fn validate(&self) -> Result<()> {
        ensure(self.caution_zone_start < self.caution_zone_end, || {
            "caution zone start must precede its end".into()
        })?;
        ensure(self.v_caution > S::zero(), || "v_caution must be positive".into())?;
        ensure(self.gain > S::zero(), || "rule gain must be positive".into())
    }

    pub fn in_zone(&self, x: S) -> bool {
        x >= self.caution_zone_start && x <= self.caution_zone_end
    }
}

/// Copy of `config` with injection and the epistemic term switched off.
pub fn reactive_config<S: Scalar>(config: &PlannerConfig<S>) -> PlannerConfig<S> {
    let mut c = config.clone();
    c.rho_h = S::zero();
    c.preference.w_eps = S::zero();
    c
}

/// Belief holding only what is currently seen: one existing particle at the
/// observed state moving at constant velocity, or a single empty particle.
pub fn degenerate_belief<S: Scalar>(seen: Option<(Vec2<S>, Vec2<S>)>) -> Belief<S> {
    let (exists, pos, vel) = match seen {
        Some((p, v)) => (true, p, v),
        None => (false, Vec2::zero(), Vec2::zero()),
    };
    let g = GaussianBelief::new(pos, vel, [S::zero(); 4]);
    Belief {
        particles: vec![Particle {
            weight: S::one(),
            exists,
            kinematics: g,
            anchor: g,
            hypothesis: Hypothesis {
                d_act: S::zero(),
                v_target: S::zero(),
                a_cap: S::zero(),
            },
            maneuver: Maneuver::Nominal,
        }],
        step: 0,
    }
}

/// Planner that only accounts for a pedestrian while it is visible.
///
/// Velocity is a finite difference of consecutive sightings; a first sighting
/// is treated as standing still.
#[derive(Debug, Clone)]
pub struct ReactivePlanner<S: Scalar = f64> {
    planner: Planner<S>,
    last_seen: Option<Vec2<S>>,
}

impl<S: Scalar> ReactivePlanner<S> {
    pub fn new(config: &PlannerConfig<S>) -> Result<Self> {
        Ok(Self {
            planner: Planner::new(reactive_config(config))?,
            last_seen: None,
        })
    }

    pub fn planner(&self) -> &Planner<S> {
        &self.planner
    }

    /// Tracks the visible state from a new observation.
    pub fn observe(&mut self, obs: &Observation<S>, dt: S) -> Option<(Vec2<S>, Vec2<S>)> {
        let seen = match (obs.ped_visible, obs.ped_position) {
            (true, Some(z)) => {
                let v = self.last_seen.map_or(Vec2::zero(), |prev| (z - prev) * (S::one() / dt));
                Some((z, v))
            }
            _ => None,
        };
        self.last_seen = seen.map(|(z, _)| z);
        seen
    }

    pub fn plan<R: Rng + ?Sized>(
        &mut self,
        obs: &Observation<S>,
        ego: &KinematicState<S>,
        ctx: &PlanningContext<S>,
        rng: &mut R,
    ) -> Plan<S> {
        let seen = self.observe(obs, ctx.dt);
        reactive_plan(&mut self.planner, seen, ego, ctx, rng)
    }
}

/// One reactive planning step given the currently visible pedestrian state.
pub fn reactive_plan<S: Scalar, R: Rng + ?Sized>(
    planner: &mut Planner<S>,
    seen: Option<(Vec2<S>, Vec2<S>)>,
    ego: &KinematicState<S>,
    ctx: &PlanningContext<S>,
    rng: &mut R,
) -> Plan<S> {
    planner.plan(&degenerate_belief(seen), ego, ctx, rng)
}

/// Overrides the longitudinal command inside the caution zone.
pub fn rule_based_action<S: Scalar>(
    ego: &KinematicState<S>,
    rule: &RuleConfig<S>,
    inner: Vec2<S>,
    bounds: &ActionBounds<S>,
) -> Vec2<S> {
    if !rule.in_zone(ego.position.x) {
        return inner;
    }
    let lon = rule.gain * (rule.v_caution - ego.velocity.x);
    bounds.clamp(Vec2::new(lon, inner.y))
}

/// Rule-based agent: reactive planning plus the caution-zone speed rule.
pub fn rule_based_plan<S: Scalar, R: Rng + ?Sized>(
    ego: &KinematicState<S>,
    rule: &RuleConfig<S>,
    inner: &mut ReactivePlanner<S>,
    obs: &Observation<S>,
    ctx: &PlanningContext<S>,
    rng: &mut R,
) -> Plan<S> {
    let mut plan = inner.plan(obs, ego, ctx, rng);
    plan.action = rule_based_action(ego, rule, plan.action, &ctx.bounds);
    plan
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Stream};

    fn ego(x: f64, v: f64) -> KinematicState<f64> {
        KinematicState {
            position: Vec2::new(x, 0.0),
            velocity: Vec2::new(v, 0.0),
            acceleration: Vec2::zero(),
        }
    }

    fn cfg() -> PlannerConfig<f64> {
        PlannerConfig {
            m: 32,
            horizon: 20,
            cem_iters: 3,
            ..Default::default()
        }
    }

    #[test]
    fn rule_saturates_far_above_caution_speed() {
        let rule = RuleConfig::default();
        let b = ActionBounds::default();
        let a = rule_based_action(&ego(-2.5, 10.0), &rule, Vec2::new(1.0, 0.3), &b);
        assert_eq!(a, Vec2::new(-6.0, 0.3));
    }

    #[test]
    fn rule_is_neutral_at_caution_speed() {
        let rule = RuleConfig::default();
        let a = rule_based_action(&ego(0.0, rule.v_caution), &rule, Vec2::new(1.0, -0.2), &ActionBounds::default());
        assert_eq!(a, Vec2::new(0.0, -0.2));
    }

    #[test]
    fn rule_delegates_outside_zone() {
        let rule = RuleConfig::default();
        let inner = Vec2::new(0.7, -0.1);
        assert_eq!(rule_based_action(&ego(-20.0, 10.0), &rule, inner, &ActionBounds::default()), inner);
        assert_eq!(rule_based_action(&ego(12.0, 3.0), &rule, inner, &ActionBounds::default()), inner);
    }

    #[test]
    fn reactive_turns_off_injection_and_curiosity() {
        let c = reactive_config(&PlannerConfig::<f64>::default());
        assert_eq!(c.rho_h, 0.0);
        assert_eq!(c.preference.w_eps, 0.0);
    }

    #[test]
    fn finite_difference_velocity() {
        let mut r = ReactivePlanner::new(&cfg()).unwrap();
        let seen = |x: f64, y: f64| Observation {
            ped_visible: true,
            ped_position: Some(Vec2::new(x, y)),
            collision: false,
        };
        assert_eq!(r.observe(&seen(10.0, -2.0), 0.1), Some((Vec2::new(10.0, -2.0), Vec2::zero())));
        let (_, v) = r.observe(&seen(10.0, -1.5), 0.1).unwrap();
        assert!((v - Vec2::new(0.0, 5.0)).norm() < 1e-12);
        assert_eq!(r.observe(&Observation::unseen(false), 0.1), None);
        let (_, v) = r.observe(&seen(10.0, -1.0), 0.1).unwrap();
        assert_eq!(v, Vec2::zero());
    }

    #[test]
    fn unseen_matches_pedestrian_free_planning() {
        let ctx = PlanningContext::default();
        let e = ego(-25.0, 10.0);
        let mut a = ReactivePlanner::new(&cfg()).unwrap();
        let mut b = ReactivePlanner::new(&cfg()).unwrap();
        let pa = a.plan(&Observation::unseen(false), &e, &ctx, &mut stream(1, Stream::Planner));
        let mut free = Planner::new(reactive_config(&cfg())).unwrap();
        let pf = free.plan(&degenerate_belief(None), &e, &ctx, &mut stream(1, Stream::Planner));
        assert_eq!(pa.action, pf.action);
        let pb = b.plan(&Observation::unseen(false), &e, &ctx, &mut stream(1, Stream::Planner));
        assert_eq!(pa.action, pb.action);
    }

    #[test]
    fn visible_obstacle_ahead_forces_braking() {
        let ctx = PlanningContext::default();
        let mut r = ReactivePlanner::new(&cfg()).unwrap();
        let obs = Observation {
            ped_visible: true,
            ped_position: Some(Vec2::new(-13.0, 0.0)),
            collision: false,
        };
        let plan = r.plan(&obs, &ego(-25.0, 10.0), &ctx, &mut stream(2, Stream::Planner));
        assert!(plan.action.x < 0.0, "{:?}", plan.action);
    }
}
