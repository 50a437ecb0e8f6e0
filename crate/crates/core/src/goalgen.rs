//! Curriculum goal generation.
//!
//! At the start of each episode the generator draws a batch of visited states,
//! asks the distance model how far each one is from the initial state, and
//! hands out the achieved goal of a state from the furthest predicted bins.
//! Early in training the furthest visited states are still close to the start;
//! they move outward as the policy improves.

use std::collections::BTreeMap;
use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::ddf::BinPredictor;
use crate::envs::{Cell, GoalEnv, GridNavEnv};
use crate::error::{Error, Result};
use crate::replay::StateSource;
use crate::rng::RngHandle;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GoalGenConfig {
    /// Candidate states drawn from the buffer per request.
    pub candidate_batch_size: usize,
    /// How many of the top predicted bins count as "furthest".
    pub target_bins: usize,
    /// Widen the selection one occupied bin at a time until it holds at
    /// least this many candidates (or bin 1 is reached).
    pub min_bin_candidates: usize,
    /// Probability of bypassing the generator with a uniform goal.
    pub uniform_mix_prob: f64,
    /// Below this many stored transitions, goals are always uniform.
    pub min_buffer_steps: usize,
}

impl Default for GoalGenConfig {
    fn default() -> Self {
        Self {
            candidate_batch_size: 256,
            target_bins: 1,
            min_bin_candidates: 4,
            uniform_mix_prob: 0.2,
            min_buffer_steps: 2000,
        }
    }
}

impl GoalGenConfig {
    pub fn validate(&self, num_bins: usize) -> Result<()> {
        if self.candidate_batch_size == 0 {
            return Err(Error::Config(
                "goalgen.candidate_batch_size must be positive".into(),
            ));
        }
        if self.target_bins == 0 || self.target_bins > num_bins {
            return Err(Error::Config(format!(
                "goalgen.target_bins must lie in [1, {num_bins}]"
            )));
        }
        if !(0.0..=1.0).contains(&self.uniform_mix_prob) {
            return Err(Error::Config(
                "goalgen.uniform_mix_prob must lie in [0, 1]".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GoalSource {
    Curriculum,
    UniformFallback,
    UniformMix,
    Warmup,
    /// Plain uniform sampling of the baseline method.
    Uniform,
}

impl GoalSource {
    pub const ALL: [GoalSource; 5] = [
        GoalSource::Curriculum,
        GoalSource::UniformFallback,
        GoalSource::UniformMix,
        GoalSource::Warmup,
        GoalSource::Uniform,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            GoalSource::Curriculum => "curriculum",
            GoalSource::UniformFallback => "uniform_fallback",
            GoalSource::UniformMix => "uniform_mix",
            GoalSource::Warmup => "warmup",
            GoalSource::Uniform => "uniform",
        }
    }
}

impl fmt::Display for GoalSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GoalSample {
    pub goal: Vec<f64>,
    pub source: GoalSource,
    /// Predicted bin of the chosen candidate; set iff `source` is curriculum.
    pub predicted_bin: Option<usize>,
    /// Size of the candidate set the goal was drawn from.
    pub candidate_count_in_bin: usize,
}

impl GoalSample {
    fn uniform<E: GoalEnv>(env: &E, source: GoalSource, rng: &mut RngHandle) -> Self {
        Self {
            goal: env.sample_uniform_goal(rng),
            source,
            predicted_bin: None,
            candidate_count_in_bin: 0,
        }
    }
}

/// Picks the next training goal relative to the initial state `s0`.
///
/// `model` is `None` until the first distance model has been trained, which
/// keeps the generator in its warm-up branch.
pub fn generate_goal<E: GoalEnv>(
    s0: &[f64],
    source: &impl StateSource,
    model: Option<&dyn BinPredictor>,
    env: &E,
    config: &GoalGenConfig,
    rng: &mut RngHandle,
) -> Result<GoalSample> {
    let Some(model) = model else {
        return Ok(GoalSample::uniform(env, GoalSource::Warmup, rng));
    };
    if source.stored_steps() == 0 || source.stored_steps() < config.min_buffer_steps {
        return Ok(GoalSample::uniform(env, GoalSource::Warmup, rng));
    }
    if rng.gen::<f64>() < config.uniform_mix_prob {
        return Ok(GoalSample::uniform(env, GoalSource::UniformMix, rng));
    }

    let candidates = source.sample_states(config.candidate_batch_size.max(1), rng)?;
    let states: Vec<Vec<f64>> = candidates.iter().map(|(s, _)| s.clone()).collect();
    let bins = model.predict_bins(s0, &states)?;
    let top = *bins.iter().max().expect("at least one candidate");

    let mut counts = BTreeMap::new();
    for b in &bins {
        *counts.entry(*b).or_insert(0usize) += 1;
    }
    // occupied bins, furthest first
    let occupied: Vec<usize> = counts.keys().rev().copied().collect();
    let mut floor = top.saturating_sub(config.target_bins - 1).max(1);
    let in_selection = |floor: usize| counts.range(floor..).map(|(_, c)| *c).sum::<usize>();
    while in_selection(floor) < config.min_bin_candidates {
        match occupied.iter().find(|&&b| b < floor) {
            Some(&next) => floor = next,
            None => break,
        }
    }

    let mut pool: Vec<usize> = (0..bins.len()).filter(|&i| bins[i] >= floor).collect();
    let pool_size = pool.len();
    while !pool.is_empty() {
        let pick = pool.swap_remove(rng.gen_range(0..pool.len()));
        if let Ok(goal) = env.check_goal(&candidates[pick].1) {
            return Ok(GoalSample {
                goal,
                source: GoalSource::Curriculum,
                predicted_bin: Some(bins[pick]),
                candidate_count_in_bin: pool_size,
            });
        }
    }
    Ok(GoalSample::uniform(env, GoalSource::UniformFallback, rng))
}

/// Shortest-path statistics of a set of goals relative to one start cell.
#[derive(Clone, Debug, PartialEq)]
pub struct DifficultyReport {
    pub count: usize,
    pub mean: f64,
    pub min: usize,
    pub max: usize,
    /// Goals per predicted bin; key 0 collects goals without a prediction.
    pub predicted_bin_histogram: BTreeMap<usize, usize>,
    /// Oracle distance of each goal, in input order.
    pub distances: Vec<usize>,
}

pub fn goal_difficulty_report(
    goals: &[GoalSample],
    env: &GridNavEnv,
    s0: &[f64],
) -> Result<DifficultyReport> {
    let origin: Cell = env.decode(s0)?;
    let dist = env.distances_from(origin)?;
    let mut distances = Vec::with_capacity(goals.len());
    let mut histogram = BTreeMap::new();
    for g in goals {
        let cell = env
            .decode(&g.goal)
            .map_err(|_| Error::InvalidGoal(format!("{:?} is not a free grid cell", g.goal)))?;
        let d = dist[cell.y * env.width() + cell.x]
            .ok_or_else(|| Error::InvalidGoal(format!("{cell} is unreachable")))?;
        distances.push(d);
        *histogram.entry(g.predicted_bin.unwrap_or(0)).or_insert(0) += 1;
    }
    let count = distances.len();
    Ok(DifficultyReport {
        count,
        mean: if count == 0 {
            0.0
        } else {
            distances.iter().sum::<usize>() as f64 / count as f64
        },
        min: distances.iter().copied().min().unwrap_or(0),
        max: distances.iter().copied().max().unwrap_or(0),
        predicted_bin_histogram: histogram,
        distances,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ddf::BinSpec;
    use crate::replay::StatePool;

    /// Predicts from a fixed table keyed by the candidate's first coordinate.
    struct Table(Vec<(f64, usize)>);

    impl BinPredictor for Table {
        fn num_bins(&self) -> usize {
            5
        }
        fn predict_bins(&self, _: &[f64], states: &[Vec<f64>]) -> Result<Vec<usize>> {
            Ok(states
                .iter()
                .map(|s| self.0.iter().find(|(x, _)| *x == s[0]).unwrap().1)
                .collect())
        }
    }

    /// Exact bins from BFS distances.
    struct Oracle<'a> {
        env: &'a GridNavEnv,
        bins: BinSpec,
    }

    impl BinPredictor for Oracle<'_> {
        fn num_bins(&self) -> usize {
            self.bins.num_bins()
        }
        fn predict_bins(&self, origin: &[f64], states: &[Vec<f64>]) -> Result<Vec<usize>> {
            let from = self.env.decode(origin)?;
            states
                .iter()
                .map(|s| {
                    let d = self
                        .env
                        .oracle_distance(from, self.env.decode(s)?)?
                        .unwrap();
                    self.bins.bin_of(d.min(self.bins.horizon()))
                })
                .collect()
        }
    }

    fn grid() -> GridNavEnv {
        GridNavEnv::new(10, 10, &[], Cell::new(0, 0), 50).unwrap()
    }

    fn pool(env: &GridNavEnv, cells: &[Cell]) -> StatePool {
        StatePool {
            states: cells
                .iter()
                .map(|c| (env.encode(*c), env.encode(*c)))
                .collect(),
        }
    }

    /// Hands out its states in order, so the candidate batch is known exactly.
    struct Fixed(StatePool);

    impl StateSource for Fixed {
        fn stored_steps(&self) -> usize {
            self.0.states.len()
        }
        fn sample_states(&self, n: usize, _: &mut RngHandle) -> Result<Vec<(Vec<f64>, Vec<f64>)>> {
            Ok(self.0.states.iter().cycle().take(n).cloned().collect())
        }
    }

    fn cfg() -> GoalGenConfig {
        GoalGenConfig {
            candidate_batch_size: 64,
            min_buffer_steps: 0,
            uniform_mix_prob: 0.0,
            ..GoalGenConfig::default()
        }
    }

    #[test]
    fn warmup_without_data_or_model() {
        let env = grid();
        let empty = StatePool::default();
        let mut rng = RngHandle::new(0, 0);
        let table = Table(vec![]);
        let config = GoalGenConfig {
            min_buffer_steps: 1000,
            ..GoalGenConfig::default()
        };
        let g = generate_goal(
            &env.start_state(),
            &empty,
            Some(&table),
            &env,
            &config,
            &mut rng,
        )
        .unwrap();
        assert_eq!(g.source, GoalSource::Warmup);
        assert!(g.predicted_bin.is_none());
        let full = pool(&env, &[Cell::new(1, 1)]);
        let g = generate_goal(&env.start_state(), &full, None, &env, &cfg(), &mut rng).unwrap();
        assert_eq!(g.source, GoalSource::Warmup);
    }

    #[test]
    fn picks_the_single_furthest_candidate() {
        let env = grid();
        let cells: Vec<Cell> = (1..=5).map(|x| Cell::new(x, 0)).collect();
        let src = Fixed(pool(&env, &cells));
        let bins = [1, 1, 3, 3, 5];
        let table = Table(
            cells
                .iter()
                .zip(bins)
                .map(|(c, b)| (env.encode(*c)[0], b))
                .collect(),
        );
        let config = GoalGenConfig {
            min_bin_candidates: 1,
            candidate_batch_size: 5,
            ..cfg()
        };
        let mut rng = RngHandle::new(1, 0);
        for _ in 0..20 {
            let g = generate_goal(
                &env.start_state(),
                &src,
                Some(&table),
                &env,
                &config,
                &mut rng,
            )
            .unwrap();
            assert_eq!(g.source, GoalSource::Curriculum);
            assert_eq!(g.predicted_bin, Some(5));
            assert_eq!(g.candidate_count_in_bin, 1);
            assert_eq!(env.decode(&g.goal).unwrap(), Cell::new(5, 0));
        }
    }

    #[test]
    fn sparse_top_bin_widens_downward() {
        let env = grid();
        let cells: Vec<Cell> = (1..=5).map(|x| Cell::new(x, 0)).collect();
        let src = Fixed(pool(&env, &cells));
        let bins = [1, 1, 3, 3, 5];
        let table = Table(
            cells
                .iter()
                .zip(bins)
                .map(|(c, b)| (env.encode(*c)[0], b))
                .collect(),
        );
        let config = GoalGenConfig {
            min_bin_candidates: 4,
            candidate_batch_size: 5,
            ..cfg()
        };
        let mut rng = RngHandle::new(2, 0);
        let mut seen = std::collections::BTreeSet::new();
        for _ in 0..200 {
            let g = generate_goal(
                &env.start_state(),
                &src,
                Some(&table),
                &env,
                &config,
                &mut rng,
            )
            .unwrap();
            assert!(g.candidate_count_in_bin >= 4);
            seen.insert(g.predicted_bin.unwrap());
        }
        assert!(seen.contains(&5));
        assert!(seen.contains(&3));
    }

    #[test]
    fn all_easy_candidates_still_yield_curriculum_goals() {
        let env = grid();
        let cells = [Cell::new(0, 1), Cell::new(1, 0), Cell::new(1, 1)];
        let src = pool(&env, &cells);
        let table = Table(vec![(0.0, 1), (1.0 / 9.0, 1)]);
        let mut rng = RngHandle::new(3, 0);
        let g = generate_goal(
            &env.start_state(),
            &src,
            Some(&table),
            &env,
            &cfg(),
            &mut rng,
        )
        .unwrap();
        assert_eq!(g.source, GoalSource::Curriculum);
        assert_eq!(g.predicted_bin, Some(1));
        assert!(cells.contains(&env.decode(&g.goal).unwrap()));
    }

    #[test]
    fn invalid_candidates_fall_back_to_uniform() {
        let env = GridNavEnv::new(10, 10, &[Cell::new(5, 5)], Cell::new(0, 0), 50).unwrap();
        let wall = env.encode(Cell::new(5, 5));
        let src = StatePool {
            states: vec![(wall.clone(), wall.clone())],
        };
        let table = Table(vec![(wall[0], 2)]);
        let mut rng = RngHandle::new(4, 0);
        let g = generate_goal(
            &env.start_state(),
            &src,
            Some(&table),
            &env,
            &cfg(),
            &mut rng,
        )
        .unwrap();
        assert_eq!(g.source, GoalSource::UniformFallback);
        assert!(env.check_goal(&g.goal).is_ok());
    }

    #[test]
    fn oracle_model_always_returns_top_bin_candidate() {
        let env = GridNavEnv::default_two_rooms();
        let bins = BinSpec::new(50, 5).unwrap();
        let oracle = Oracle {
            env: &env,
            bins: bins.clone(),
        };
        let mut rng = RngHandle::new(5, 0);
        let src = StatePool {
            states: env
                .free_cells()
                .iter()
                .map(|c| (env.encode(*c), env.encode(*c)))
                .collect(),
        };
        let config = GoalGenConfig {
            min_bin_candidates: 1,
            ..cfg()
        };
        let s0 = env.start_state();
        for _ in 0..200 {
            let mut probe = rng.clone();
            let _coin: f64 = probe.gen();
            let g = generate_goal(&s0, &src, Some(&oracle), &env, &config, &mut rng).unwrap();
            // replay the candidate draw to learn the top occupied bin
            let cands = src
                .sample_states(config.candidate_batch_size, &mut probe)
                .unwrap();
            let states: Vec<Vec<f64>> = cands.into_iter().map(|c| c.0).collect();
            let top = *oracle
                .predict_bins(&s0, &states)
                .unwrap()
                .iter()
                .max()
                .unwrap();
            let d = env
                .oracle_distance(env.start(), env.decode(&g.goal).unwrap())
                .unwrap()
                .unwrap();
            assert_eq!(bins.bin_of(d).unwrap(), top);
        }
    }

    #[test]
    fn full_mixing_is_uniform() {
        let env = grid();
        let src = pool(&env, &[Cell::new(3, 3)]);
        let table = Table(vec![(env.encode(Cell::new(3, 3))[0], 1)]);
        let config = GoalGenConfig {
            uniform_mix_prob: 1.0,
            ..cfg()
        };
        let mut rng = RngHandle::new(6, 0);
        let mut counts = vec![0usize; 100];
        for _ in 0..20_000 {
            let g = generate_goal(
                &env.start_state(),
                &src,
                Some(&table),
                &env,
                &config,
                &mut rng,
            )
            .unwrap();
            assert_eq!(g.source, GoalSource::UniformMix);
            let c = env.decode(&g.goal).unwrap();
            counts[c.y * 10 + c.x] += 1;
        }
        let p = crate::stats::chi_square_uniform_p(&counts);
        assert!(p > 0.001, "p = {p}");
    }

    #[test]
    fn deterministic_given_rng_state() {
        let env = grid();
        let cells: Vec<Cell> = (0..10).map(|x| Cell::new(x, 3)).collect();
        let src = pool(&env, &cells);
        let table = Table(
            cells
                .iter()
                .map(|c| (env.encode(*c)[0], 1 + c.x / 2))
                .collect(),
        );
        let a = generate_goal(
            &env.start_state(),
            &src,
            Some(&table),
            &env,
            &cfg(),
            &mut RngHandle::new(7, 1),
        )
        .unwrap();
        let b = generate_goal(
            &env.start_state(),
            &src,
            Some(&table),
            &env,
            &cfg(),
            &mut RngHandle::new(7, 1),
        )
        .unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn difficulty_report_examples() {
        let env = grid();
        let s0 = env.encode(Cell::new(2, 2));
        let at = |c: Cell| GoalSample {
            goal: env.encode(c),
            source: GoalSource::Uniform,
            predicted_bin: None,
            candidate_count_in_bin: 0,
        };
        let r = goal_difficulty_report(&vec![at(Cell::new(2, 2)); 3], &env, &s0).unwrap();
        assert_eq!(r.mean, 0.0);
        let r =
            goal_difficulty_report(&[at(Cell::new(3, 2)), at(Cell::new(4, 3))], &env, &s0).unwrap();
        assert_eq!(r.mean, 2.0);
        assert_eq!((r.min, r.max), (1, 3));
        assert_eq!(r.predicted_bin_histogram.get(&0), Some(&2));
        let bad = GoalSample {
            goal: vec![2.0, 0.0],
            ..at(Cell::new(0, 0))
        };
        assert!(matches!(
            goal_difficulty_report(&[bad], &env, &s0),
            Err(Error::InvalidGoal(_))
        ));
    }
}
