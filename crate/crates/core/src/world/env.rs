use serde::{Deserialize, Serialize};

use super::pedestrian::{step_pedestrian, PedMemory};
use super::scenario::{sample_scenario, BehaviorMode, ScenarioParams};
use super::{check_collision, observe, step_ego, EnvConfig, KinematicState, Observation};
use crate::error::{Error, Result};
use crate::geometry::Vec2;
use crate::rng::{stream, Rng, Stream};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Running,
    Collision,
    GoalReached,
    Timeout,
}

impl Status {
    pub fn is_terminal(self) -> bool {
        self != Status::Running
    }
}

/// One closed-loop episode of the occluded-crossing scenario.
#[derive(Debug, Clone)]
pub struct Env<S: Scalar = f64> {
    config: EnvConfig<S>,
    params: ScenarioParams<S>,
    ego: KinematicState<S>,
    ped: KinematicState<S>,
    memory: PedMemory<S>,
    step: usize,
    status: Status,
    ped_rng: Rng,
    noise_rng: Rng,
}

impl<S: Scalar> Env<S> {
    /// Samples a scenario of `mode` from the config seed and returns the initial observation.
    pub fn new(config: EnvConfig<S>, mode: BehaviorMode) -> Result<(Self, Observation<S>)> {
        config.validate()?;
        let mut rng = stream(config.seed, Stream::Scenario);
        let params = sample_scenario(mode, &config.ped_prior, &config.occluder, &mut rng);
        Self::with_params(config, params)
    }

    pub fn with_params(
        config: EnvConfig<S>,
        params: ScenarioParams<S>,
    ) -> Result<(Self, Observation<S>)> {
        config.validate()?;
        let ped = KinematicState::at_rest(params.ped_initial_position);
        let mut env = Self {
            memory: PedMemory::new(&ped),
            ego: config.ego_init,
            ped,
            params,
            step: 0,
            status: Status::Running,
            ped_rng: stream(config.seed, Stream::Pedestrian),
            noise_rng: stream(config.seed, Stream::ObservationNoise),
            config,
        };
        let collision = env.collided();
        let obs = env.make_observation(collision);
        Ok((env, obs))
    }

    /// Advances ego then pedestrian by one `dt`.
    pub fn step(&mut self, action: Vec2<S>) -> Result<(Observation<S>, Status)> {
        if self.status.is_terminal() {
            return Err(Error::EpisodeTerminated(self.status));
        }
        let cfg = &self.config;
        self.ego = step_ego(&self.ego, action, cfg.dt, &cfg.action_bounds);
        if cfg.ped_present {
            let (ped, mem) = step_pedestrian(
                &self.ped,
                &self.params,
                &self.ego,
                &self.memory,
                cfg.dt,
                cfg.hesitant_reverse_factor,
                &mut self.ped_rng,
            );
            self.ped = ped;
            self.memory = mem;
        }
        self.step += 1;

        let collision = self.collided();
        self.status = if collision {
            Status::Collision
        } else if self.ego.position.x >= self.config.goal_x {
            Status::GoalReached
        } else if self.step >= self.config.max_steps {
            Status::Timeout
        } else {
            Status::Running
        };
        Ok((self.make_observation(collision), self.status))
    }

    fn collided(&self) -> bool {
        self.config.ped_present
            && check_collision(&self.ego, &self.ped, self.config.collision_radius)
    }

    fn make_observation(&mut self, collision: bool) -> Observation<S> {
        observe(
            &self.ego,
            &self.ped,
            self.config.ped_present,
            &self.config.occluder,
            collision,
            self.config.obs_noise_std,
            &mut self.noise_rng,
        )
    }

    pub fn config(&self) -> &EnvConfig<S> {
        &self.config
    }

    pub fn params(&self) -> &ScenarioParams<S> {
        &self.params
    }

    pub fn ego(&self) -> &KinematicState<S> {
        &self.ego
    }

    /// True pedestrian state, `None` when the episode has no pedestrian.
    pub fn ped(&self) -> Option<&KinematicState<S>> {
        self.config.ped_present.then_some(&self.ped)
    }

    pub fn memory(&self) -> &PedMemory<S> {
        &self.memory
    }

    pub fn step_index(&self) -> usize {
        self.step
    }

    pub fn time(&self) -> S {
        S::lit(self.step as f64) * self.config.dt
    }

    pub fn status(&self) -> Status {
        self.status
    }
}
