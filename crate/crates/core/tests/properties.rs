use proptest::prelude::*;
use rand::Rng as _;

use occlusion_core::belief::{conditional_reset, update, Belief, BeliefConfig, FilterContext};
use occlusion_core::geometry::{is_visible, Occluder, Vec2};
use occlusion_core::rng::{stream, Stream};
use occlusion_core::world::{BehaviorMode, Env, EnvConfig, KinematicState, Observation, Status};

const CAP_TOL: f64 = 1e-6;

fn point() -> impl Strategy<Value = Vec2<f64>> {
    (-30.0..30.0f64, -12.0..8.0f64).prop_map(|(x, y)| Vec2::new(x, y))
}

fn mode() -> impl Strategy<Value = BehaviorMode> {
    prop::sample::select(BehaviorMode::ALL.to_vec())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn visibility_is_symmetric(a in point(), b in point()) {
        let occ = Occluder::default();
        prop_assert_eq!(is_visible(a, b, &occ), is_visible(b, a, &occ));
    }

    /// Pulling a visible target toward the ego along the sight line keeps it visible.
    #[test]
    fn visible_targets_stay_visible_when_pulled_in(a in point(), b in point(), t in 0.0..1.0f64) {
        let occ = Occluder::default();
        prop_assume!(is_visible(a, b, &occ));
        let nearer = a + (b - a) * t;
        prop_assert!(is_visible(a, nearer, &occ));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    /// Random ego inputs: the pedestrian never moves before activation, never
    /// exceeds its caps, and the collision status matches a direct distance check.
    #[test]
    fn world_step_invariants(mode in mode(), seed in 0u64..10_000, drive in 0.0..1.0f64) {
        let cfg = EnvConfig::<f64> { seed, ..Default::default() };
        let radius = cfg.collision_radius;
        let (mut env, _) = Env::new(cfg, mode).unwrap();
        let params = *env.params();
        let start = env.ped().copied().unwrap();
        let mut rng = stream(seed, Stream::Planner);
        let mut activated = false;
        while !env.status().is_terminal() {
            let action = Vec2::new(rng.random_range(-6.0..4.0) * drive, rng.random_range(-3.0..3.0) * drive);
            let gap_before = start.position.x - env.ego().position.x;
            let (_, status) = env.step(action).unwrap();
            let ped = *env.ped().unwrap();
            let ego = *env.ego();
            if !activated && gap_before >= params.d_act && ped.position.x - ego.position.x >= params.d_act {
                prop_assert_eq!(ped.position, start.position);
            }
            activated |= ped.position != start.position;
            prop_assert!(ped.velocity.norm() <= params.v_max + CAP_TOL, "speed {}", ped.velocity.norm());
            prop_assert!(ped.acceleration.norm() <= params.a_max + CAP_TOL, "accel {}", ped.acceleration.norm());
            let touching = ego.position.distance(ped.position) < radius;
            prop_assert_eq!(status == Status::Collision, touching);
        }
    }

    /// Random observation streams keep weights normalised and anchors fixed.
    #[test]
    fn belief_update_invariants(seed in 0u64..10_000, b0 in 0.0..=1.0f64, seen in prop::collection::vec(any::<bool>(), 1..30)) {
        let env = EnvConfig::<f64>::default();
        let config = BeliefConfig { n_particles: 40, b0_zp: b0, ..Default::default() };
        let ctx = FilterContext { occluder: env.occluder, dt: env.dt, collision_radius: env.collision_radius };
        let mut belief = Belief::init(&config, &env.ped_prior, &env.occluder, &mut stream(seed, Stream::BeliefInit)).unwrap();
        let mut rng = stream(seed, Stream::Belief);
        for (k, &visible) in seen.iter().enumerate() {
            let ego = KinematicState {
                position: Vec2::new(-25.0 + k as f64, 0.0),
                velocity: Vec2::new(10.0, 0.0),
                acceleration: Vec2::zero(),
            };
            let obs = if visible {
                Observation { ped_visible: true, ped_position: Some(Vec2::new(10.0, -1.5 + 0.1 * k as f64)), collision: false }
            } else {
                Observation::unseen(false)
            };
            let anchors: Vec<_> = belief.particles.iter().map(|p| (p.anchor, p.hypothesis)).collect();
            let (next, report) = update(&belief, &obs, &ego, &config, &ctx, &mut rng);
            prop_assert!((next.weight_sum() - 1.0).abs() < 1e-9);
            prop_assert!(next.particles.iter().all(|p| (0.0..=1.0).contains(&p.weight)));
            // resampling copies anchors along with their particles
            prop_assert!(next.particles.iter().all(|p| anchors.contains(&(p.anchor, p.hypothesis))));
            if !report.resampled {
                for (p, q) in belief.particles.iter().zip(&next.particles) {
                    prop_assert_eq!(p.anchor, q.anchor);
                }
            }
            for p in &next.particles {
                for (observed, resolved) in [(false, false), (false, true), (true, false)] {
                    let once = conditional_reset(p, observed, resolved).0;
                    prop_assert_eq!(conditional_reset(&once, observed, resolved).0, once);
                }
            }
            belief = next;
        }
    }
}
