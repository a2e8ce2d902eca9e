use std::collections::HashSet;

use approx::assert_abs_diff_eq;

use occlusion_core::agent::AgentKind;
use occlusion_core::harness::{
    bench_latency, compare_agents, compute_metrics, read_jsonl, run_batch, run_episode, write_jsonl, write_table_csv, EpisodeOutcome,
    ExperimentConfig, HarnessConfig, Job,
};
use occlusion_core::world::{BehaviorMode, Status};

fn small_config() -> ExperimentConfig<f64> {
    let mut cfg = ExperimentConfig::<f64>::default();
    cfg.agent.belief.n_particles = 32;
    cfg.agent.planner.m = 16;
    cfg.agent.planner.horizon = 20;
    cfg.agent.planner.cem_iters = 2;
    cfg.harness.workers = Some(1);
    cfg
}

#[test]
fn jsonl_round_trip_preserves_metrics() {
    let cfg = small_config();
    let logging = HarnessConfig {
        log_belief: true,
        log_plan: true,
        ..Default::default()
    };
    let records: Vec<_> = [(AgentKind::Ours, BehaviorMode::Hesitant), (AgentKind::Rule, BehaviorMode::SuddenAppearance)]
        .into_iter()
        .enumerate()
        .map(|(i, (kind, mode))| {
            let mut agent = cfg.agent.clone();
            agent.kind = kind;
            run_episode(&agent, mode, i as u64, &cfg.env, &logging).unwrap()
        })
        .collect();

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("episodes.jsonl");
    write_jsonl(&records, std::fs::File::create(&path).unwrap()).unwrap();
    let back = read_jsonl::<f64>(&path).unwrap();
    assert_eq!(back, records);

    let r = cfg.env.collision_radius;
    let before: Vec<EpisodeOutcome> = records.iter().map(|e| e.outcome(r)).collect();
    let after: Vec<EpisodeOutcome> = back.iter().map(|e| e.outcome(r)).collect();
    assert_eq!(compute_metrics(&before).unwrap(), compute_metrics(&after).unwrap());
}

#[test]
fn comparison_table_is_consistent() {
    let mut cfg = small_config();
    cfg.harness.base_seed = 100;
    let modes = [BehaviorMode::SuddenStop, BehaviorMode::SuddenAppearance];
    let n = 3;
    let result = compare_agents(&cfg, &[AgentKind::Reactive, AgentKind::Rule], &modes, n).unwrap();

    // one row per cell plus a pooled row per agent
    assert_eq!(result.rows.len(), 2 * (modes.len() + 1));
    assert_eq!(result.cells.len(), 4);

    // seed blocks never overlap between cells
    let mut seen = HashSet::new();
    for (_, _, outcomes) in &result.cells {
        assert_eq!(outcomes.len(), n);
        for o in outcomes {
            assert!(o.seed >= 100);
            assert!(seen.insert(o.seed), "seed {} reused", o.seed);
        }
    }

    // with equal cell sizes the pooled rates are the mean of the per-mode rates
    for label in ["reactive", "rule"] {
        let pooled = result.pooled(label).unwrap();
        let mean = |f: fn(&occlusion_core::harness::MetricsSummary) -> f64| {
            modes.iter().map(|&m| f(result.cell(label, m).unwrap())).sum::<f64>() / modes.len() as f64
        };
        assert_abs_diff_eq!(pooled.collision_rate.mean, mean(|m| m.collision_rate.mean), epsilon = 1e-12);
        assert_abs_diff_eq!(pooled.pass_rate.mean, mean(|m| m.pass_rate.mean), epsilon = 1e-12);
        assert_eq!(pooled.n_episodes, n * modes.len());
    }

    let mut buf = Vec::new();
    write_table_csv(&result.rows, &mut buf).unwrap();
    let mut reader = csv::Reader::from_reader(buf.as_slice());
    let headers = reader.headers().unwrap().clone();
    assert_eq!(&headers[0], "value");
    assert!(headers.iter().any(|h| h == "collision_rate_se"));
    let rows: Vec<_> = reader.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), result.rows.len());
    assert_eq!(rows.iter().filter(|r| &r[1] == "pooled").count(), 2);
}

#[test]
fn single_episode_cells_flag_undefined_se() {
    let cfg = small_config();
    let result = compare_agents(&cfg, &[AgentKind::Rule], &[BehaviorMode::Hesitant], 1).unwrap();
    let cell = result.cell("rule", BehaviorMode::Hesitant).unwrap();
    assert!(cell.collision_rate.se_undefined);
    assert_eq!(cell.collision_rate.se, 0.0);
}

#[test]
fn worker_count_does_not_change_results() {
    let cfg = small_config();
    let jobs: Vec<Job> = BehaviorMode::ALL
        .iter()
        .enumerate()
        .map(|(i, &mode)| Job {
            cell: i,
            agent: cfg.agent.clone(),
            mode,
            seed: 7 + i as u64,
        })
        .collect();
    let serial = run_batch(&jobs, &cfg.env, 1).unwrap();
    let parallel = run_batch(&jobs, &cfg.env, 3).unwrap();
    assert_eq!(serial, parallel);
}

#[test]
fn every_agent_reaches_the_goal_without_a_pedestrian() {
    let mut cfg = small_config();
    cfg.env.ped_present = false;
    for kind in [AgentKind::Ours, AgentKind::Reactive, AgentKind::Rule] {
        let mut agent = cfg.agent.clone();
        agent.kind = kind;
        let rec = run_episode(&agent, BehaviorMode::Hesitant, 3, &cfg.env, &HarnessConfig::default()).unwrap();
        assert_eq!(rec.status(), Status::GoalReached, "{kind}");
        assert!(rec.steps.iter().all(|s| s.ped.is_none()));
        assert_eq!(rec.outcome(cfg.env.collision_radius).min_distance, None);
    }
}

#[test]
fn rule_agent_holds_caution_speed_in_the_zone() {
    let mut cfg = small_config();
    cfg.env.ped_present = false;
    cfg.agent.kind = AgentKind::Rule;
    let rule = cfg.agent.rule;
    let rec = run_episode(&cfg.agent, BehaviorMode::Hesitant, 0, &cfg.env, &HarnessConfig::default()).unwrap();
    let entered = rec
        .steps
        .iter()
        .find(|s| rule.in_zone(s.ego.position.x))
        .expect("ego enters the zone")
        .t;
    let settled: Vec<_> = rec
        .steps
        .iter()
        .filter(|s| rule.in_zone(s.ego.position.x) && s.t >= entered + 3.0)
        .collect();
    assert!(!settled.is_empty());
    for s in settled {
        let speed = s.ego.velocity.norm();
        assert!((speed - rule.v_caution).abs() <= 0.5, "speed {speed} at t = {}", s.t);
    }
}

#[test]
fn toml_overrides_and_validation() {
    let cfg = ExperimentConfig::<f64>::from_toml_str(
        r#"
        [env]
        dt = 0.05
        [agent]
        kind = "rule"
        [agent.rule]
        v_caution = 4.0
        [harness]
        episodes_per_cell = 10
        "#,
    )
    .unwrap();
    assert_eq!(cfg.env.dt, 0.05);
    assert_eq!(cfg.agent.kind, AgentKind::Rule);
    assert_eq!(cfg.agent.rule.v_caution, 4.0);
    assert_eq!(cfg.harness.episodes_per_cell, 10);
    // untouched sections keep their defaults
    assert_eq!(cfg.agent.planner, ExperimentConfig::<f64>::default().agent.planner);

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("exp.toml");
    std::fs::write(&path, toml::to_string(&cfg).unwrap()).unwrap();
    assert_eq!(ExperimentConfig::<f64>::load(&path).unwrap(), cfg);

    for bad in [
        "[harness]\nepisodes_per_cell = 0",
        "[agent.rule]\nv_caution = -1.0",
        "[agent.belief]\nn_particles = 0",
        "[env]\nno_such_field = 1",
        "[agent]\nkind = \"telepathic\"",
    ] {
        assert!(ExperimentConfig::<f64>::from_toml_str(bad).is_err(), "accepted {bad:?}");
    }
}

#[test]
fn latency_bench_covers_the_grid() {
    let cfg = small_config();
    let rows = bench_latency(&cfg.agent, &cfg.env, &[16, 32, 48, 80], &[4, 8, 16], 1, 1).unwrap();
    assert_eq!(rows.len(), 12);
    assert!(rows.iter().all(|r| r.latency_ms.mean > 0.0 && r.latency_ms.se_undefined));
    assert!(bench_latency(&cfg.agent, &cfg.env, &[16], &[4], 0, 1).is_err());
}
