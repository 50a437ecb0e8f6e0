use std::path::Path;

use serde::Serialize;

use super::config::{ExperimentConfig, Method};
use super::output::{write_csv, write_manifest, write_run};
use super::run::{run_method, MetricsRow, RunOutput};
use crate::error::Result;
use crate::stats;

pub const THRESHOLDS: [f64; 3] = [0.5, 0.8, 0.9];

/// Across-seed statistics of one method at one eval point.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AggregateRow {
    pub method: &'static str,
    pub env_steps: u64,
    pub seeds: usize,
    pub median: f64,
    pub mean: f64,
    pub std: f64,
}

/// Steps until a success threshold was first held; `seed` is `None` on the
/// across-seed median row.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ThresholdRow {
    pub method: &'static str,
    pub threshold: f64,
    pub seed: Option<u64>,
    pub env_steps: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct SuiteResult {
    pub runs: Vec<RunOutput>,
    pub aggregate: Vec<AggregateRow>,
    pub thresholds: Vec<ThresholdRow>,
}

impl SuiteResult {
    pub fn runs_of(&self, method: Method) -> impl Iterator<Item = &RunOutput> {
        self.runs.iter().filter(move |r| r.method == method)
    }

    pub fn median_steps_to(&self, method: Method, threshold: f64) -> Option<f64> {
        self.thresholds
            .iter()
            .find(|r| r.method == method.tag() && r.threshold == threshold && r.seed.is_none())
            .and_then(|r| r.env_steps)
    }
}

/// First eval point from which success stays at or above `threshold` for
/// `sustain` consecutive rows (or until the end of the run).
pub fn steps_to_threshold(rows: &[MetricsRow], threshold: f64, sustain: usize) -> Option<u64> {
    (0..rows.len()).find_map(|i| {
        let window = &rows[i..(i + sustain).min(rows.len())];
        window
            .iter()
            .all(|r| r.success_rate >= threshold)
            .then_some(rows[i].env_steps)
    })
}

/// Median where a missing value ranks above every present one.
pub fn median_steps(values: &[Option<u64>]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by_key(|x| x.unwrap_or(u64::MAX));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2].map(|x| x as f64)
    } else {
        Some((v[n / 2 - 1]? as f64 + v[n / 2]? as f64) / 2.0)
    }
}

/// Per-eval-point median, mean and sample deviation of success across runs.
pub fn aggregate(method: Method, runs: &[&RunOutput]) -> Vec<AggregateRow> {
    let points = runs.iter().map(|r| r.metrics.len()).min().unwrap_or(0);
    (0..points)
        .map(|i| {
            let xs: Vec<f64> = runs.iter().map(|r| r.metrics[i].success_rate).collect();
            AggregateRow {
                method: method.tag(),
                env_steps: runs[0].metrics[i].env_steps,
                seeds: xs.len(),
                median: stats::median(&xs),
                mean: stats::mean(&xs),
                std: if xs.len() > 1 {
                    stats::std_dev(&xs)
                } else {
                    0.0
                },
            }
        })
        .collect()
}

pub fn threshold_table(method: Method, runs: &[&RunOutput], sustain: usize) -> Vec<ThresholdRow> {
    let mut out = Vec::new();
    for t in THRESHOLDS {
        let steps: Vec<Option<u64>> = runs
            .iter()
            .map(|r| steps_to_threshold(&r.metrics, t, sustain))
            .collect();
        for (r, s) in runs.iter().zip(&steps) {
            out.push(ThresholdRow {
                method: method.tag(),
                threshold: t,
                seed: Some(r.seed),
                env_steps: s.map(|x| x as f64),
            });
        }
        out.push(ThresholdRow {
            method: method.tag(),
            threshold: t,
            seed: None,
            env_steps: median_steps(&steps),
        });
    }
    out
}

fn summarize(config: &ExperimentConfig, methods: &[Method], runs: Vec<RunOutput>) -> SuiteResult {
    let mut agg = Vec::new();
    let mut thresholds = Vec::new();
    for &m in methods {
        let of: Vec<&RunOutput> = runs.iter().filter(|r| r.method == m).collect();
        if of.is_empty() {
            continue;
        }
        agg.extend(aggregate(m, &of));
        thresholds.extend(threshold_table(m, &of, config.experiment.sustain_evals));
    }
    SuiteResult {
        runs,
        aggregate: agg,
        thresholds,
    }
}

fn write_summary(dir: &Path, result: &SuiteResult) -> Result<()> {
    write_csv(&dir.join("aggregate.csv"), &result.aggregate)?;
    write_csv(&dir.join("thresholds.csv"), &result.thresholds)
}

/// Runs every `(method, seed)` pair in order. Files of finished runs, and a
/// summary over them, stay on disk if a later run fails.
pub fn run_suite_methods(
    config: &ExperimentConfig,
    methods: &[Method],
    out: Option<&Path>,
) -> Result<SuiteResult> {
    config.validate()?;
    if let Some(dir) = out {
        write_manifest(dir, config)?;
    }
    let mut runs = Vec::new();
    for &method in methods {
        for &seed in &config.experiment.seeds {
            match run_method(config, method, seed) {
                Ok(run) => {
                    if let Some(dir) = out {
                        write_run(dir, config, &run)?;
                    }
                    runs.push(run);
                }
                Err(e) => {
                    if let Some(dir) = out {
                        write_summary(dir, &summarize(config, methods, runs))?;
                    }
                    return Err(e);
                }
            }
        }
    }
    let result = summarize(config, methods, runs);
    if let Some(dir) = out {
        write_summary(dir, &result)?;
    }
    Ok(result)
}

/// Curriculum and uniform baseline over all configured seeds.
pub fn run_suite(config: &ExperimentConfig, out: &Path) -> Result<SuiteResult> {
    run_suite_methods(config, &Method::ALL, Some(out))
}
