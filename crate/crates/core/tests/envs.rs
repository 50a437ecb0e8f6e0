mod common;

use std::collections::HashMap;

use rand::Rng;

use common::{bfs_on_map, grid_from, random_grid};
use ddf_curriculum::domain::Action;
use ddf_curriculum::envs::{Cell, GoalEnv, GridNavEnv, PointReachEnv};
use ddf_curriculum::rng::RngHandle;
use ddf_curriculum::stats::chi_square_uniform_p;

#[test]
fn oracle_distance_matches_independent_bfs() {
    let mut rng = RngHandle::new(7, 0);
    for _ in 0..100 {
        let (w, h) = (rng.gen_range(2..12), rng.gen_range(2..12));
        let map = random_grid(&mut rng, w, h, 0.25);
        let env = grid_from(&map);
        let free = env.free_cells().to_vec();
        for _ in 0..20 {
            let a = free[rng.gen_range(0..free.len())];
            let b = free[rng.gen_range(0..free.len())];
            let expected = bfs_on_map(&map, (a.x, a.y), (b.x, b.y));
            assert_eq!(env.oracle_distance(a, b).unwrap(), expected, "{map}");
            assert_eq!(env.oracle_distance(b, a).unwrap(), expected);
        }
    }
}

#[test]
fn oracle_distance_rejects_walls() {
    let env = grid_from("S#\n..\n");
    assert!(env
        .oracle_distance(Cell::new(1, 0), Cell::new(0, 0))
        .is_err());
    assert_eq!(
        env.oracle_distance(Cell::new(0, 0), Cell::new(1, 1))
            .unwrap(),
        Some(2)
    );
}

#[test]
fn uniform_goals_cover_free_cells_evenly() {
    // 10x10 with exactly 20 walls, none cutting off any free cell
    let mut map = vec![vec!['.'; 10]; 10];
    map[2].fill('#');
    map[7].fill('#');
    map[2][5] = '.';
    map[7][5] = '.';
    map[2][0] = '#';
    map[7][0] = '#';
    map[0][9] = '#';
    map[9][9] = '#';
    map[0][0] = 'S';
    let text: String = map
        .iter()
        .map(|r| r.iter().collect::<String>() + "\n")
        .collect();
    let env = GridNavEnv::from_map(&text, 50).unwrap();
    assert_eq!(env.free_cells().len(), 80);

    let mut rng = RngHandle::new(11, 0);
    let mut counts: HashMap<Cell, usize> = env.free_cells().iter().map(|c| (*c, 0)).collect();
    for _ in 0..100_000 {
        let g = env.sample_uniform_goal(&mut rng);
        *counts.get_mut(&env.decode(&g).unwrap()).expect("free cell") += 1;
    }
    let counts: Vec<usize> = counts.into_values().collect();
    let p = chi_square_uniform_p(&counts);
    assert!(p > 0.001, "p = {p}");
}

#[test]
fn two_cell_grid_is_a_fair_coin() {
    let env = grid_from("S.\n");
    let mut rng = RngHandle::new(12, 0);
    let left = (0..10_000)
        .filter(|_| env.decode(&env.sample_uniform_goal(&mut rng)).unwrap() == Cell::new(0, 0))
        .count();
    assert!((left as f64 / 10_000.0 - 0.5).abs() < 0.02);
}

/// Kolmogorov-Smirnov distance of a sample from U(0, 1).
fn ks_uniform(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, x)| (x - i as f64 / n).abs().max(((i + 1) as f64 / n - x).abs()))
        .fold(0.0, f64::max)
}

#[test]
fn point_goals_are_uniform_on_the_square() {
    let env = PointReachEnv::default();
    let mut rng = RngHandle::new(13, 0);
    let goals: Vec<Vec<f64>> = (0..20_000)
        .map(|_| env.sample_uniform_goal(&mut rng))
        .collect();
    // critical value at the 0.1% level, as for the chi-square test above
    let crit = 1.95 / (goals.len() as f64).sqrt();
    for axis in 0..2 {
        let d = ks_uniform(goals.iter().map(|g| g[axis]).collect());
        assert!(d < crit, "axis {axis}: D = {d}");
    }
}

#[test]
fn rollouts_never_exceed_horizon() {
    let mut rng = RngHandle::new(14, 0);
    let mut env = GridNavEnv::default_two_rooms();
    for _ in 0..50 {
        let goal = env.sample_uniform_goal(&mut rng);
        env.reset(&goal).unwrap();
        let mut steps = 0;
        loop {
            let s = env.step(&Action::Discrete(rng.gen_range(0..4))).unwrap();
            steps += 1;
            if s.done {
                break;
            }
        }
        assert!(steps <= env.spec().horizon);
    }
}
