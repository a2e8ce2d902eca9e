use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::baselines::{rule_based_plan, ReactivePlanner, RuleConfig};
use crate::belief::{absorb, update, Belief, BeliefConfig, BeliefSummary, FilterContext, UpdateReport};
use crate::error::{Error, Result};
use crate::geometry::Vec2;
use crate::planner::{PlanDiagnostics, Planner, PlannerConfig, PlanningContext};
use crate::rng::{stream, Rng, Stream};
use crate::scalar::Scalar;
use crate::world::{EnvConfig, KinematicState, Observation};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgentKind {
    #[default]
    Ours,
    Reactive,
    Rule,
}

impl AgentKind {
    pub const ALL: [AgentKind; 3] = [AgentKind::Reactive, AgentKind::Rule, AgentKind::Ours];

    pub fn name(self) -> &'static str {
        match self {
            AgentKind::Ours => "ours",
            AgentKind::Reactive => "reactive",
            AgentKind::Rule => "rule",
        }
    }
}

impl fmt::Display for AgentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AgentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "ours" | "active" | "aif" => Ok(AgentKind::Ours),
            "reactive" => Ok(AgentKind::Reactive),
            "rule" | "rule-based" | "rule_based" => Ok(AgentKind::Rule),
            other => Err(Error::InvalidConfig(format!("unknown agent `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, bound = "S: Scalar")]
pub struct AgentConfig<S: Scalar = f64> {
    pub kind: AgentKind,
    pub belief: BeliefConfig<S>,
    pub planner: PlannerConfig<S>,
    pub rule: RuleConfig<S>,
}

impl<S: Scalar> Default for AgentConfig<S> {
    fn default() -> Self {
        Self {
            kind: AgentKind::Ours,
            belief: BeliefConfig::default(),
            planner: PlannerConfig::default(),
            rule: RuleConfig::default(),
        }
    }
}

impl<S: Scalar> AgentConfig<S> {
    pub fn validate(&self) -> Result<()> {
        self.belief.validate()?;
        self.planner.validate()?;
        self.rule.validate()
    }
}

/// What the agent did on one step.
#[derive(Debug, Clone)]
pub struct StepOutput<S: Scalar = f64> {
    pub action: Vec2<S>,
    pub belief: Option<BeliefSummary<S>>,
    pub update: Option<UpdateReport>,
    pub plan: PlanDiagnostics<S>,
}

#[derive(Debug, Clone)]
enum Inner<S: Scalar> {
    Ours { belief: Belief<S>, planner: Planner<S> },
    Reactive(ReactivePlanner<S>),
    Rule(ReactivePlanner<S>, RuleConfig<S>),
}

/// Closed-loop decision maker: filters observations (when it keeps a belief)
/// and plans one action per call.
#[derive(Debug, Clone)]
pub struct Agent<S: Scalar = f64> {
    inner: Inner<S>,
    belief_config: BeliefConfig<S>,
    filter: FilterContext<S>,
    planning: PlanningContext<S>,
    belief_rng: Rng,
    planner_rng: Rng,
    started: bool,
}

impl<S: Scalar> Agent<S> {
    /// Builds an agent for one episode. All agent randomness derives from `seed`.
    pub fn new(config: &AgentConfig<S>, env: &EnvConfig<S>, seed: u64) -> Result<Self> {
        config.validate()?;
        env.validate()?;
        let inner = match config.kind {
            AgentKind::Ours => Inner::Ours {
                belief: Belief::init(
                    &config.belief,
                    &env.ped_prior,
                    &env.occluder,
                    &mut stream(seed, Stream::BeliefInit),
                )?,
                planner: Planner::new(config.planner.clone())?,
            },
            AgentKind::Reactive => Inner::Reactive(ReactivePlanner::new(&config.planner)?),
            AgentKind::Rule => Inner::Rule(ReactivePlanner::new(&config.planner)?, config.rule),
        };
        Ok(Self {
            inner,
            belief_config: config.belief.clone(),
            filter: FilterContext {
                occluder: env.occluder,
                dt: env.dt,
                collision_radius: env.collision_radius,
            },
            planning: PlanningContext {
                occluder: env.occluder,
                dt: env.dt,
                collision_radius: env.collision_radius,
                bounds: env.action_bounds,
            },
            belief_rng: stream(seed, Stream::Belief),
            planner_rng: stream(seed, Stream::Planner),
            started: false,
        })
    }

    pub fn kind(&self) -> AgentKind {
        match self.inner {
            Inner::Ours { .. } => AgentKind::Ours,
            Inner::Reactive(_) => AgentKind::Reactive,
            Inner::Rule(..) => AgentKind::Rule,
        }
    }

    pub fn belief(&self) -> Option<&Belief<S>> {
        match &self.inner {
            Inner::Ours { belief, .. } => Some(belief),
            _ => None,
        }
    }

    /// Consumes the observation taken at the ego state `ego` and returns the next action.
    pub fn act(&mut self, obs: &Observation<S>, ego: &KinematicState<S>) -> StepOutput<S> {
        let first = !self.started;
        self.started = true;
        match &mut self.inner {
            Inner::Ours { belief, planner } => {
                let (next, report) = if first {
                    absorb(belief, obs, ego, &self.belief_config, &self.filter, &mut self.belief_rng)
                } else {
                    update(belief, obs, ego, &self.belief_config, &self.filter, &mut self.belief_rng)
                };
                *belief = next;
                let plan = planner.plan(belief, ego, &self.planning, &mut self.planner_rng);
                StepOutput {
                    action: plan.action,
                    belief: Some(belief.summary()),
                    update: Some(report),
                    plan: plan.diagnostics,
                }
            }
            Inner::Reactive(r) => {
                let plan = r.plan(obs, ego, &self.planning, &mut self.planner_rng);
                StepOutput {
                    action: plan.action,
                    belief: None,
                    update: None,
                    plan: plan.diagnostics,
                }
            }
            Inner::Rule(r, rule) => {
                let plan = rule_based_plan(ego, rule, r, obs, &self.planning, &mut self.planner_rng);
                StepOutput {
                    action: plan.action,
                    belief: None,
                    update: None,
                    plan: plan.diagnostics,
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_agent_names() {
        assert_eq!("rule-based".parse::<AgentKind>().unwrap(), AgentKind::Rule);
        assert_eq!("Ours".parse::<AgentKind>().unwrap(), AgentKind::Ours);
        assert!("ppo".parse::<AgentKind>().is_err());
    }

    #[test]
    fn only_ours_keeps_a_belief() {
        let env = EnvConfig::<f64>::default();
        for kind in AgentKind::ALL {
            let cfg = AgentConfig {
                kind,
                ..Default::default()
            };
            let agent = Agent::new(&cfg, &env, 3).unwrap();
            assert_eq!(agent.kind(), kind);
            assert_eq!(agent.belief().is_some(), kind == AgentKind::Ours);
        }
    }
}
