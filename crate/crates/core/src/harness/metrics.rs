use serde::{Deserialize, Serialize};

use super::EpisodeRecord;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::world::{BehaviorMode, KinematicState, Status};

/// Upper cap on time-to-collision, seconds.
pub const TTC_CAP: f64 = 10.0;

/// Range-rate time to collision between two discs of combined radius `radius`.
///
/// `None` when the pair is not closing.
pub fn time_to_collision<S: Scalar>(ego: &KinematicState<S>, ped: &KinematicState<S>, radius: S) -> Option<f64> {
    let rel = ped.position - ego.position;
    let dist = rel.norm().to_f64_lossy();
    if dist <= 0.0 {
        return Some(0.0);
    }
    let closing = -(rel.dot(ped.velocity - ego.velocity)).to_f64_lossy() / dist;
    if closing <= 0.0 {
        return None;
    }
    let gap = (dist - radius.to_f64_lossy()).max(0.0);
    Some((gap / closing).min(TTC_CAP))
}

/// Smallest TTC along a run, capped; the cap if the pair never closes.
pub fn min_ttc<S: Scalar>(states: impl IntoIterator<Item = (KinematicState<S>, KinematicState<S>)>, radius: S) -> f64 {
    states
        .into_iter()
        .filter_map(|(e, p)| time_to_collision(&e, &p, radius))
        .fold(TTC_CAP, f64::min)
}

/// Per-episode scalars the summary statistics are computed from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpisodeOutcome {
    pub mode: BehaviorMode,
    pub seed: u64,
    pub status: Status,
    /// Simulated time at termination.
    pub time: f64,
    /// `None` without a pedestrian.
    pub min_distance: Option<f64>,
    pub min_ttc: Option<f64>,
}

impl EpisodeOutcome {
    pub fn from_record<S: Scalar>(record: &EpisodeRecord<S>, collision_radius: S) -> Self {
        let pairs: Vec<_> = record
            .steps
            .iter()
            .filter_map(|s| s.ped.map(|p| (s.ego, p)))
            .collect();
        let min_distance = pairs
            .iter()
            .map(|(e, p)| e.position.distance(p.position).to_f64_lossy())
            .fold(None, |acc: Option<f64>, d| Some(acc.map_or(d, |a| a.min(d))));
        let min_ttc = (!pairs.is_empty()).then(|| min_ttc(pairs.iter().copied(), collision_radius));
        Self {
            mode: record.mode,
            seed: record.seed,
            status: record.status(),
            time: record.steps.last().map_or(0.0, |s| s.t.to_f64_lossy()),
            min_distance,
            min_ttc,
        }
    }
}

/// Sample mean with its standard error `s / √n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanSe {
    pub mean: f64,
    pub se: f64,
    pub n: usize,
    /// Set when `n < 2`; `se` is then reported as 0.
    pub se_undefined: bool,
}

impl MeanSe {
    pub fn of(values: &[f64]) -> Option<Self> {
        let n = values.len();
        if n == 0 {
            return None;
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        if n < 2 {
            return Some(Self {
                mean,
                se: 0.0,
                n,
                se_undefined: true,
            });
        }
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        Some(Self {
            mean,
            se: (var / n as f64).sqrt(),
            n,
            se_undefined: false,
        })
    }

    /// Normal-approximation 95% interval.
    pub fn ci95(&self) -> (f64, f64) {
        (self.mean - 1.96 * self.se, self.mean + 1.96 * self.se)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsSummary {
    pub n_episodes: usize,
    pub pass_rate: MeanSe,
    pub collision_rate: MeanSe,
    pub timeout_rate: f64,
    /// Conditional on reaching the goal; absent when no run did.
    pub pass_time: Option<MeanSe>,
    pub min_distance: Option<MeanSe>,
    pub min_ttc: Option<MeanSe>,
}

pub fn compute_metrics(outcomes: &[EpisodeOutcome]) -> Result<MetricsSummary> {
    if outcomes.is_empty() {
        return Err(Error::EmptyRecords);
    }
    let indicator = |s: Status| -> Vec<f64> {
        outcomes
            .iter()
            .map(|o| if o.status == s { 1.0 } else { 0.0 })
            .collect()
    };
    let pass = MeanSe::of(&indicator(Status::GoalReached)).expect("non-empty");
    let collision = MeanSe::of(&indicator(Status::Collision)).expect("non-empty");
    let success: Vec<&EpisodeOutcome> = outcomes.iter().filter(|o| o.status == Status::GoalReached).collect();
    let times: Vec<f64> = success.iter().map(|o| o.time).collect();
    let dists: Vec<f64> = success.iter().filter_map(|o| o.min_distance).collect();
    let ttcs: Vec<f64> = success.iter().filter_map(|o| o.min_ttc).collect();
    Ok(MetricsSummary {
        n_episodes: outcomes.len(),
        timeout_rate: 1.0 - pass.mean - collision.mean,
        pass_rate: pass,
        collision_rate: collision,
        pass_time: MeanSe::of(&times),
        min_distance: MeanSe::of(&dists),
        min_ttc: MeanSe::of(&ttcs),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Vec2;

    fn outcome(status: Status, time: f64) -> EpisodeOutcome {
        EpisodeOutcome {
            mode: BehaviorMode::Hesitant,
            seed: 0,
            status,
            time,
            min_distance: Some(2.0),
            min_ttc: Some(TTC_CAP),
        }
    }

    #[test]
    fn rates_from_statuses() {
        let m = compute_metrics(&[
            outcome(Status::Collision, 3.0),
            outcome(Status::GoalReached, 8.0),
            outcome(Status::GoalReached, 10.0),
        ])
        .unwrap();
        assert!((m.collision_rate.mean - 1.0 / 3.0).abs() < 1e-15);
        assert!((m.pass_rate.mean - 2.0 / 3.0).abs() < 1e-15);
        assert!(m.timeout_rate.abs() < 1e-15);
        let pt = m.pass_time.unwrap();
        assert_eq!(pt.mean, 9.0);
        // sample std of {8, 10} is √2, so SE = 1
        assert!((pt.se - 1.0).abs() < 1e-12);
    }

    #[test]
    fn empty_input_is_an_error() {
        assert!(matches!(compute_metrics(&[]), Err(Error::EmptyRecords)));
    }

    #[test]
    fn no_success_leaves_conditionals_absent() {
        let m = compute_metrics(&[outcome(Status::Collision, 1.0)]).unwrap();
        assert!(m.pass_time.is_none());
        assert!(m.collision_rate.se_undefined);
        assert_eq!(m.collision_rate.se, 0.0);
    }

    #[test]
    fn ttc_head_on() {
        let ego = KinematicState {
            position: Vec2::new(0.0, 0.0),
            velocity: Vec2::new(10.0, 0.0),
            acceleration: Vec2::zero(),
        };
        let ped = KinematicState::at_rest(Vec2::new(21.0, 0.0));
        assert!((time_to_collision(&ego, &ped, 1.0).unwrap() - 2.0).abs() < 1e-12);
        let away = KinematicState {
            velocity: Vec2::new(-10.0, 0.0),
            ..ego
        };
        assert_eq!(time_to_collision(&away, &ped, 1.0), None);
        assert_eq!(min_ttc(vec![(away, ped); 5], 1.0), TTC_CAP);
    }
}
