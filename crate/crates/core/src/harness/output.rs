use std::fs::{self, File};
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::{EnvKind, ExperimentConfig, Method};
use super::run::{GoalSnapshot, RunOutput};
use crate::ddf::{BinPredictor, DdfModel};
use crate::domain::goal_distance;
use crate::envs::GoalEnv;
use crate::error::{Error, Result};
use crate::goalgen::{generate_goal, goal_difficulty_report, GoalSample};
use crate::nn::Mlp;
use crate::replay::StatePool;
use crate::rng::{streams, RngHandle};

pub const ARTIFACT_NAME: &str = env!("CARGO_PKG_NAME");
pub const ARTIFACT_VERSION: &str = env!("CARGO_PKG_VERSION");

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

/// Resolved config prefixed with the artifact name and version.
pub fn manifest_text(config: &ExperimentConfig) -> String {
    format!(
        "artifact = \"{ARTIFACT_NAME}\"\nversion = \"{ARTIFACT_VERSION}\"\n\n{}",
        config.to_toml()
    )
}

pub fn write_manifest(dir: &Path, config: &ExperimentConfig) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("manifest.toml"), manifest_text(config))?;
    Ok(())
}

pub fn run_stem(method: Method, seed: u64) -> String {
    format!("{}_{seed}", method.tag())
}

pub fn write_snapshot(path: &Path, snapshot: &GoalSnapshot) -> Result<()> {
    write_snapshot_to(File::create(path)?, snapshot)
}

/// One row per goal: source, predicted bin, candidate count, coordinates and
/// start-to-goal distance.
pub fn write_snapshot_to(out: impl std::io::Write, snapshot: &GoalSnapshot) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let goal_dim = snapshot.samples.first().map_or(0, |s| s.goal.len());
    let mut header = vec![
        "index".to_string(),
        "source".into(),
        "predicted_bin".into(),
        "candidates".into(),
    ];
    header.extend((0..goal_dim).map(|i| format!("goal_{i}")));
    header.push("distance".into());
    w.write_record(&header)?;
    for (i, (s, d)) in snapshot.samples.iter().zip(&snapshot.distances).enumerate() {
        let mut rec = vec![
            i.to_string(),
            s.source.to_string(),
            s.predicted_bin.map(|b| b.to_string()).unwrap_or_default(),
            s.candidate_count_in_bin.to_string(),
        ];
        rec.extend(s.goal.iter().map(|g| g.to_string()));
        rec.push(d.to_string());
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes `run_<method>_<seed>.csv`, the per-episode telemetry, goal
/// snapshots and a checkpoint directory under `dir`.
pub fn write_run(dir: &Path, config: &ExperimentConfig, run: &RunOutput) -> Result<()> {
    fs::create_dir_all(dir)?;
    let stem = run_stem(run.method, run.seed);
    write_csv(&dir.join(format!("run_{stem}.csv")), &run.metrics)?;
    write_csv(&dir.join(format!("episodes_{stem}.csv")), &run.episodes)?;
    if !run.snapshots.is_empty() {
        let snap_dir = dir.join(format!("snapshots_{stem}"));
        fs::create_dir_all(&snap_dir)?;
        for s in &run.snapshots {
            write_snapshot(&snap_dir.join(format!("goals_{}.csv", s.env_steps)), s)?;
        }
    }
    write_checkpoint(&dir.join(format!("checkpoint_{stem}")), config, run)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CheckpointMeta {
    version: String,
    method: Method,
    seed: u64,
    env_steps: u64,
    networks: Vec<String>,
}

pub fn write_checkpoint(dir: &Path, config: &ExperimentConfig, run: &RunOutput) -> Result<()> {
    fs::create_dir_all(dir)?;
    let meta = CheckpointMeta {
        version: ARTIFACT_VERSION.into(),
        method: run.method,
        seed: run.seed,
        env_steps: run.metrics.last().map_or(0, |r| r.env_steps),
        networks: run.networks.iter().map(|(n, _)| n.clone()).collect(),
    };
    fs::write(
        dir.join("checkpoint.toml"),
        toml::to_string(&meta).expect("plain struct"),
    )?;
    let mut config = config.clone();
    if let Some(map) = &config.env.map {
        fs::copy(map, dir.join("env.map"))?;
        config.env.map = Some(PathBuf::from("env.map"));
    }
    fs::write(dir.join("config.toml"), config.to_toml())?;
    if let Some(ddf) = &run.ddf {
        ddf.write_to(&mut BufWriter::new(File::create(dir.join("ddf.bin"))?))?;
    }
    for (name, net) in &run.networks {
        net.write_to(&mut BufWriter::new(File::create(
            dir.join(format!("{name}.bin")),
        )?))?;
    }
    let mut w = csv::Writer::from_path(dir.join("candidates.csv"))?;
    if let Some((s, g)) = run.state_pool.first() {
        let mut header: Vec<String> = (0..s.len()).map(|i| format!("state_{i}")).collect();
        header.extend((0..g.len()).map(|i| format!("goal_{i}")));
        w.write_record(&header)?;
    }
    for (s, g) in &run.state_pool {
        w.write_record(s.iter().chain(g).map(|v| v.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

/// A checkpoint read back from disk.
#[derive(Clone, Debug)]
pub struct Checkpoint {
    pub dir: PathBuf,
    pub config: ExperimentConfig,
    pub method: Method,
    pub seed: u64,
    pub env_steps: u64,
    pub ddf: Option<DdfModel>,
    pub networks: Vec<(String, Mlp)>,
    pub pool: StatePool,
}

pub fn load_checkpoint(dir: &Path) -> Result<Checkpoint> {
    let meta_text = fs::read_to_string(dir.join("checkpoint.toml"))?;
    let meta: CheckpointMeta =
        toml::from_str(&meta_text).map_err(|e| Error::Format(e.to_string()))?;
    let config =
        ExperimentConfig::from_toml_str(&fs::read_to_string(dir.join("config.toml"))?, Some(dir))?;
    let ddf_path = dir.join("ddf.bin");
    let ddf = if ddf_path.exists() {
        Some(DdfModel::read_from(&mut BufReader::new(File::open(
            ddf_path,
        )?))?)
    } else {
        None
    };
    let mut networks = Vec::new();
    for name in &meta.networks {
        let net = Mlp::read_from(&mut BufReader::new(File::open(
            dir.join(format!("{name}.bin")),
        )?))?;
        networks.push((name.clone(), net));
    }
    let mut r = csv::Reader::from_path(dir.join("candidates.csv"))?;
    let header = r.headers()?.clone();
    let state_dim = header.iter().filter(|h| h.starts_with("state_")).count();
    let mut states = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let values: Vec<f64> = rec
            .iter()
            .map(|v| {
                v.parse::<f64>()
                    .map_err(|e| Error::Format(format!("candidates.csv: {e}")))
            })
            .collect::<Result<_>>()?;
        let (s, g) = values.split_at(state_dim);
        states.push((s.to_vec(), g.to_vec()));
    }
    Ok(Checkpoint {
        dir: dir.to_path_buf(),
        config,
        method: meta.method,
        seed: meta.seed,
        env_steps: meta.env_steps,
        ddf,
        networks,
        pool: StatePool { states },
    })
}

fn sample_goals<E: GoalEnv>(env: &E, ck: &Checkpoint, n: usize, seed: u64) -> Result<GoalSnapshot> {
    let s0 = env.start_state();
    let mut rng = RngHandle::new(seed, streams::SNAPSHOT);
    // the pool is all that survives of the buffer, so it gates warm-up by itself
    let mut goalgen = ck.config.goalgen.clone();
    goalgen.min_buffer_steps = goalgen.min_buffer_steps.min(ck.pool.states.len());
    let samples: Vec<GoalSample> = (0..n)
        .map(|_| {
            generate_goal(
                &s0,
                &ck.pool,
                ck.ddf.as_ref().map(|m| m as &dyn BinPredictor),
                env,
                &goalgen,
                &mut rng,
            )
        })
        .collect::<Result<_>>()?;
    let distances = match env.as_grid() {
        Some(grid) => goal_difficulty_report(&samples, grid, &s0)?
            .distances
            .into_iter()
            .map(|d| d as f64)
            .collect(),
        None => {
            let origin = env.achieved_goal(&s0);
            samples
                .iter()
                .map(|s| goal_distance(&origin, &s.goal))
                .collect::<Result<_>>()?
        }
    };
    Ok(GoalSnapshot {
        env_steps: ck.env_steps,
        samples,
        distances,
    })
}

/// Regenerates `n` goals from a saved distance model and state pool.
pub fn inspect_goals(ck: &Checkpoint, n: usize, seed: u64) -> Result<GoalSnapshot> {
    match ck.config.env.kind {
        EnvKind::GridNav => sample_goals(&ck.config.grid_env()?, ck, n, seed),
        EnvKind::PointReach => sample_goals(&ck.config.point_env()?, ck, n, seed),
    }
}
