use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use super::sweep::TableRow;
use super::{EpisodeRecord, StepRecord};
use crate::error::Result;
use crate::scalar::Scalar;

/// Writes every step of every record as one JSON object per line.
pub fn write_jsonl<S: Scalar, W: Write>(records: &[EpisodeRecord<S>], out: W) -> Result<()> {
    let mut out = BufWriter::new(out);
    for rec in records {
        for step in &rec.steps {
            serde_json::to_writer(&mut out, step)?;
            out.write_all(b"\n")?;
        }
    }
    out.flush()?;
    Ok(())
}

/// Reads a trajectory log back, splitting episodes on `(agent, mode, seed)` changes
/// and on step indices that restart.
pub fn read_jsonl<S: Scalar>(path: impl AsRef<Path>) -> Result<Vec<EpisodeRecord<S>>> {
    let reader = BufReader::new(File::open(path)?);
    let mut episodes: Vec<EpisodeRecord<S>> = Vec::new();
    for line in reader.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let step: StepRecord<S> = serde_json::from_str(&line)?;
        let same = episodes.last().is_some_and(|e| {
            e.agent == step.agent
                && e.mode == step.mode
                && e.seed == step.seed
                && e.steps.last().is_some_and(|s| s.step < step.step)
        });
        if same {
            episodes.last_mut().expect("checked").steps.push(step);
        } else {
            episodes.push(EpisodeRecord {
                agent: step.agent,
                mode: step.mode,
                seed: step.seed,
                steps: vec![step],
            });
        }
    }
    Ok(episodes)
}

#[derive(Serialize)]
struct CsvRow<'a> {
    value: &'a str,
    mode: &'a str,
    n: usize,
    pass_rate: f64,
    pass_rate_se: f64,
    collision_rate: f64,
    collision_rate_se: f64,
    timeout_rate: f64,
    pass_time: Option<f64>,
    pass_time_se: Option<f64>,
    min_distance: Option<f64>,
    min_distance_se: Option<f64>,
    min_ttc: Option<f64>,
    min_ttc_se: Option<f64>,
    se_undefined: bool,
}

/// One CSV row per cell, pooled rows labelled `pooled`.
pub fn write_table_csv<W: Write>(rows: &[TableRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        let m = &r.metrics;
        let mode = r.mode.map_or("pooled", |m| m.name());
        w.serialize(CsvRow {
            value: &r.label,
            mode,
            n: m.n_episodes,
            pass_rate: m.pass_rate.mean,
            pass_rate_se: m.pass_rate.se,
            collision_rate: m.collision_rate.mean,
            collision_rate_se: m.collision_rate.se,
            timeout_rate: m.timeout_rate,
            pass_time: m.pass_time.map(|x| x.mean),
            pass_time_se: m.pass_time.map(|x| x.se),
            min_distance: m.min_distance.map(|x| x.mean),
            min_distance_se: m.min_distance.map(|x| x.se),
            min_ttc: m.min_ttc.map(|x| x.mean),
            min_ttc_se: m.min_ttc.map(|x| x.se),
            se_undefined: m.collision_rate.se_undefined,
        })?;
    }
    w.flush()?;
    Ok(())
}
