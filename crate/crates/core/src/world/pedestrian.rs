//! Per-mode pedestrian automata.
//!
//! The pedestrian only moves laterally (+y crosses the road). It stays put
//! until the ego's longitudinal gap drops below `d_act`, then follows its
//! mode logic while respecting `v_max` and `a_max`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::scenario::{ModeParams, ScenarioParams};
use super::KinematicState;
use crate::geometry::Vec2;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum HesitantPhase {
    Moving,
    Stopped,
    Reversing,
}

/// Episode-local automaton state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct PedMemory<S: Scalar = f64> {
    pub activated: bool,
    /// Lateral position at episode start.
    pub y0: S,
    pub phase: HesitantPhase,
    pub phase_remaining: S,
    /// Deceptive acceleration or turning-back trigger has fired.
    pub triggered: bool,
    pub halted: bool,
}

impl<S: Scalar> PedMemory<S> {
    pub fn new(initial: &KinematicState<S>) -> Self {
        Self {
            activated: false,
            y0: initial.position.y,
            phase: HesitantPhase::Moving,
            phase_remaining: S::zero(),
            triggered: false,
            halted: false,
        }
    }
}

/// Largest speed from which repeated decelerations of `a_max * dt` stop the
/// pedestrian within `remaining` meters under semi-implicit integration.
pub fn braking_speed<S: Scalar>(remaining: S, a_max: S, dt: S) -> S {
    if remaining <= S::zero() {
        return S::zero();
    }
    let delta = a_max * dt;
    let two = S::lit(2.0);
    let steps = (-S::one() + (S::one() + S::lit(8.0) * remaining / (dt * delta)).sqrt()) / two;
    (steps * delta).min(remaining / dt)
}

const ARRIVAL_TOL: f64 = 1e-6;

/// Advances the pedestrian one step given the ego state after its own update.
pub fn step_pedestrian<S: Scalar, R: Rng + ?Sized>(
    ped: &KinematicState<S>,
    params: &ScenarioParams<S>,
    ego: &KinematicState<S>,
    memory: &PedMemory<S>,
    dt: S,
    reverse_factor: S,
    rng: &mut R,
) -> (KinematicState<S>, PedMemory<S>) {
    let mut mem = *memory;
    let gap = ped.position.x - ego.position.x;
    let (v_max, a_max) = (params.v_max, params.a_max);

    if !mem.activated {
        if gap < params.d_act {
            mem.activated = true;
            if let ModeParams::Hesitant { t_m, .. } = params.specific {
                mem.phase = HesitantPhase::Moving;
                mem.phase_remaining = t_m;
            }
        } else {
            let idle = KinematicState::at_rest(ped.position);
            return (idle, mem);
        }
    }

    let y = ped.position.y;
    let vy = ped.velocity.y;
    let desired = match params.specific {
        ModeParams::Hesitant { t_h, t_m } => {
            if mem.phase_remaining <= S::zero() {
                if mem.phase == HesitantPhase::Moving {
                    mem.phase = if rng.random::<bool>() {
                        HesitantPhase::Stopped
                    } else {
                        HesitantPhase::Reversing
                    };
                    mem.phase_remaining = t_h;
                } else {
                    mem.phase = HesitantPhase::Moving;
                    mem.phase_remaining = t_m;
                }
            }
            mem.phase_remaining = mem.phase_remaining - dt;
            match mem.phase {
                HesitantPhase::Moving => v_max,
                HesitantPhase::Stopped => S::zero(),
                HesitantPhase::Reversing => -reverse_factor * v_max,
            }
        }
        ModeParams::Deceptive { v_slow, d_trig_acc } => {
            if gap < d_trig_acc {
                mem.triggered = true;
            }
            if mem.triggered {
                v_max
            } else {
                v_slow.min(v_max)
            }
        }
        ModeParams::TurningBack {
            d_trig_ret,
            x_lat_turn,
        } => {
            if y - mem.y0 >= x_lat_turn || gap < d_trig_ret {
                mem.triggered = true;
            }
            if mem.triggered {
                -braking_speed(y - mem.y0, a_max, dt).min(v_max)
            } else {
                v_max
            }
        }
        ModeParams::SuddenStop { x_lat_stop } => {
            if mem.halted {
                return (KinematicState::at_rest(ped.position), mem);
            }
            let remaining = x_lat_stop - y;
            if remaining <= S::lit(ARRIVAL_TOL) && vy.abs() <= a_max * dt + S::lit(ARRIVAL_TOL) {
                mem.halted = true;
                let stopped = KinematicState {
                    position: ped.position,
                    velocity: Vec2::zero(),
                    acceleration: Vec2::new(S::zero(), -vy / dt),
                };
                return (stopped, mem);
            }
            braking_speed(remaining, a_max, dt).min(v_max)
        }
        ModeParams::SuddenAppearance => v_max,
    };

    let accel = ((desired - vy) / dt).clamp_to(-a_max, a_max);
    let new_vy = (vy + accel * dt).clamp_to(-v_max, v_max);
    let velocity = Vec2::new(S::zero(), new_vy);
    let next = KinematicState {
        position: ped.position + velocity * dt,
        velocity,
        acceleration: Vec2::new(S::zero(), (new_vy - vy) / dt),
    };
    (next, mem)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Stream};
    use crate::world::BehaviorMode;

    fn params(mode: BehaviorMode, specific: ModeParams<f64>) -> ScenarioParams<f64> {
        ScenarioParams {
            mode,
            ped_initial_position: Vec2::new(10.0, -4.0),
            v_max: 6.0,
            a_max: 5.0,
            d_act: 15.0,
            specific,
        }
    }

    fn ego_at(x: f64) -> KinematicState<f64> {
        KinematicState::at_rest(Vec2::new(x, 0.0))
    }

    #[test]
    fn inert_before_activation() {
        let modes = [
            (BehaviorMode::Hesitant, ModeParams::Hesitant { t_h: 0.5, t_m: 2.0 }),
            (
                BehaviorMode::DeceptiveAccelerating,
                ModeParams::Deceptive {
                    v_slow: 2.0,
                    d_trig_acc: 5.0,
                },
            ),
            (
                BehaviorMode::TurningBack,
                ModeParams::TurningBack {
                    d_trig_ret: 5.0,
                    x_lat_turn: 3.0,
                },
            ),
            (BehaviorMode::SuddenStop, ModeParams::SuddenStop { x_lat_stop: 1.0 }),
            (BehaviorMode::SuddenAppearance, ModeParams::SuddenAppearance),
        ];
        let mut rng = stream(0, Stream::Pedestrian);
        for (mode, specific) in modes {
            let p = params(mode, specific);
            let ped = KinematicState::at_rest(p.ped_initial_position);
            let mem = PedMemory::new(&ped);
            // gap = d_act + 5
            let (next, mem2) = step_pedestrian(&ped, &p, &ego_at(10.0 - 20.0), &mem, 0.1, 0.5, &mut rng);
            assert_eq!(next.velocity, Vec2::zero(), "{mode}");
            assert_eq!(next.position, ped.position);
            assert!(!mem2.activated);
        }
    }

    #[test]
    fn deceptive_trigger_accelerates() {
        let p = params(
            BehaviorMode::DeceptiveAccelerating,
            ModeParams::Deceptive {
                v_slow: 2.0,
                d_trig_acc: 6.0,
            },
        );
        let ped = KinematicState {
            position: Vec2::new(10.0, -3.0),
            velocity: Vec2::new(0.0, 2.0),
            acceleration: Vec2::zero(),
        };
        let mut mem = PedMemory::new(&ped);
        mem.activated = true;
        let ego = ego_at(10.0 - (6.0 - 0.1));
        let mut rng = stream(0, Stream::Pedestrian);
        let (next, _) = step_pedestrian(&ped, &p, &ego, &mem, 0.1, 0.5, &mut rng);
        let expected = (2.0f64 + 5.0 * 0.1).min(6.0);
        assert!((next.velocity.y - expected).abs() < 1e-12);
    }

    #[test]
    fn sudden_stop_halts_for_good() {
        let p = params(BehaviorMode::SuddenStop, ModeParams::SuddenStop { x_lat_stop: 1.5 });
        let mut ped = KinematicState::at_rest(p.ped_initial_position);
        let mut mem = PedMemory::new(&ped);
        let ego = ego_at(0.0);
        let mut rng = stream(0, Stream::Pedestrian);
        let mut reached_at = None;
        for k in 0..200 {
            let (n, m) = step_pedestrian(&ped, &p, &ego, &mem, 0.1, 0.5, &mut rng);
            assert!(n.velocity.norm() <= p.v_max + 1e-6);
            assert!(n.acceleration.norm() <= p.a_max + 1e-6, "step {k}: {:?}", n);
            ped = n;
            mem = m;
            if reached_at.is_none() && ped.position.y >= 1.5 - 1e-6 {
                reached_at = Some(k);
            }
            if let Some(r) = reached_at {
                if k > r {
                    assert_eq!(ped.velocity, Vec2::zero(), "k={k} r={r} y={}", ped.position.y);
                }
            }
        }
        assert!(reached_at.is_some());
        assert!(mem.halted);
        assert!((ped.position.y - 1.5).abs() < 1e-6);
    }

    #[test]
    fn turning_back_returns_to_sidewalk() {
        let p = params(
            BehaviorMode::TurningBack,
            ModeParams::TurningBack {
                d_trig_ret: 4.0,
                x_lat_turn: 3.0,
            },
        );
        let mut ped = KinematicState::at_rest(p.ped_initial_position);
        let mut mem = PedMemory::new(&ped);
        let ego = ego_at(-4.0);
        let mut rng = stream(0, Stream::Pedestrian);
        let mut peak = f64::MIN;
        for _ in 0..150 {
            let (n, m) = step_pedestrian(&ped, &p, &ego, &mem, 0.1, 0.5, &mut rng);
            assert!(n.acceleration.norm() <= p.a_max + 1e-6);
            ped = n;
            mem = m;
            peak = peak.max(ped.position.y);
        }
        assert!(mem.triggered);
        assert!(peak >= -4.0 + 3.0 - 1e-9);
        assert!((ped.position.y - (-4.0)).abs() < 1e-3, "{:?}", ped);
    }

    #[test]
    fn braking_speed_is_consistent() {
        assert_eq!(braking_speed(0.0, 5.0, 0.1), 0.0);
        assert_eq!(braking_speed(-1.0, 5.0, 0.1), 0.0);
        // n = 3 decrements of 0.5: distance 0.1 * 0.5 * 6 = 0.3
        assert!((braking_speed(0.3f64, 5.0, 0.1) - 1.5).abs() < 1e-12);
    }
}
