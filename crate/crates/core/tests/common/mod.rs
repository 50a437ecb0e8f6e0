#![allow(dead_code)]

use std::collections::VecDeque;

use rand::Rng;

use ddf_curriculum::domain::{Action, Episode, Transition};
use ddf_curriculum::envs::{GoalEnv, GridNavEnv};
use ddf_curriculum::nn::Mlp;
use ddf_curriculum::rng::RngHandle;

/// Breadth-first search over the raw map text, sharing no code with the
/// environment. Returns steps or `None` if unreachable.
pub fn bfs_on_map(map: &str, from: (usize, usize), to: (usize, usize)) -> Option<usize> {
    let rows: Vec<&[u8]> = map.lines().map(str::as_bytes).collect();
    let h = rows.len();
    let w = rows[0].len();
    let open = |x: usize, y: usize| rows[y][x] != b'#';
    let mut seen = vec![vec![false; w]; h];
    let mut queue = VecDeque::from([(from, 0)]);
    seen[from.1][from.0] = true;
    while let Some(((x, y), d)) = queue.pop_front() {
        if (x, y) == to {
            return Some(d);
        }
        let mut next = Vec::new();
        if x > 0 {
            next.push((x - 1, y));
        }
        if y > 0 {
            next.push((x, y - 1));
        }
        if x + 1 < w {
            next.push((x + 1, y));
        }
        if y + 1 < h {
            next.push((x, y + 1));
        }
        for (nx, ny) in next {
            if open(nx, ny) && !seen[ny][nx] {
                seen[ny][nx] = true;
                queue.push_back(((nx, ny), d + 1));
            }
        }
    }
    None
}

/// Largest relative error between `analytic` and central differences of `f`
/// over every coordinate of `params`.
pub fn max_relative_error(
    params: &[f64],
    analytic: &[f64],
    h: f64,
    mut f: impl FnMut(&[f64]) -> f64,
) -> f64 {
    let mut p = params.to_vec();
    let mut worst: f64 = 0.0;
    for i in 0..p.len() {
        let orig = p[i];
        p[i] = orig + h;
        let up = f(&p);
        p[i] = orig - h;
        let down = f(&p);
        p[i] = orig;
        let numeric = (up - down) / (2.0 * h);
        let scale = analytic[i].abs().max(numeric.abs()).max(1e-6);
        worst = worst.max((analytic[i] - numeric).abs() / scale);
    }
    worst
}

pub fn random_mlp(rng: &mut RngHandle, input: usize, output: usize) -> Mlp {
    let depth = rng.gen_range(1..=3);
    let mut sizes = vec![input];
    for _ in 0..depth {
        sizes.push(rng.gen_range(2..=12));
    }
    sizes.push(output);
    let mut net = Mlp::new(&sizes, rng).unwrap();
    // zero biases put whole layers exactly on the ReLU kink when an earlier
    // layer is dead; jitter moves the check to a generic point
    for p in net.params_mut() {
        *p += rng.gen_range(-0.1..0.1);
    }
    net
}

pub fn random_rows(rng: &mut RngHandle, n: usize, dim: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect())
        .collect()
}

/// Random-policy episodes toward uniform goals; the few that stumble onto
/// their goal end early.
pub fn random_walks<E: GoalEnv>(env: &E, episodes: usize, rng: &mut RngHandle) -> Vec<Episode> {
    let mut env = env.clone();
    let num_actions = match &env.spec().action_space {
        ddf_curriculum::domain::ActionSpace::Discrete { count } => *count,
        _ => panic!("discrete environments only"),
    };
    (0..episodes)
        .map(|_| {
            let goal = env.sample_uniform_goal(rng);
            let mut state = env.reset(&goal).unwrap();
            let mut ts = Vec::new();
            loop {
                let action = Action::Discrete(rng.gen_range(0..num_actions));
                let step = env.step(&action).unwrap();
                ts.push(Transition {
                    state: std::mem::replace(&mut state, step.next_state.clone()),
                    action,
                    next_state: step.next_state,
                    achieved_goal: step.achieved_goal,
                    desired_goal: goal.clone(),
                    reward: step.reward,
                    done: step.done,
                });
                if step.done {
                    break;
                }
            }
            Episode::new(ts).unwrap()
        })
        .collect()
}

/// Random grid of the given size with roughly `wall_fraction` walls; cells
/// not connected to the start are walled off so the result is valid.
pub fn random_grid(rng: &mut RngHandle, w: usize, h: usize, wall_fraction: f64) -> String {
    let mut cells: Vec<Vec<u8>> = (0..h)
        .map(|_| {
            (0..w)
                .map(|_| {
                    if rng.gen::<f64>() < wall_fraction {
                        b'#'
                    } else {
                        b'.'
                    }
                })
                .collect()
        })
        .collect();
    let (sx, sy) = (rng.gen_range(0..w), rng.gen_range(0..h));
    cells[sy][sx] = b'S';
    let text: String = cells
        .iter()
        .map(|r| String::from_utf8(r.clone()).unwrap() + "\n")
        .collect();
    for y in 0..h {
        for x in 0..w {
            if cells[y][x] == b'.' && bfs_on_map(&text, (sx, sy), (x, y)).is_none() {
                cells[y][x] = b'#';
            }
        }
    }
    cells
        .iter()
        .map(|r| String::from_utf8(r.clone()).unwrap() + "\n")
        .collect()
}

pub fn grid_from(map: &str) -> GridNavEnv {
    GridNavEnv::from_map(map, 50).unwrap()
}

/// Random-policy episodes on the default two-room layout, each starting from
/// a uniformly drawn free cell so the whole map is covered.
pub fn two_room_walks(episodes: usize, rng: &mut RngHandle) -> Vec<Episode> {
    let base = GridNavEnv::default_two_rooms();
    let free = base.free_cells().to_vec();
    (0..episodes)
        .flat_map(|_| {
            let start = free[rng.gen_range(0..free.len())];
            random_walks(&base.with_start(start).unwrap(), 1, rng)
        })
        .collect()
}

/// Every action sequence of length `len` on a 1x4 corridor, as episodes.
pub fn corridor_episodes(len: usize) -> Vec<Episode> {
    let base = GridNavEnv::from_map("S...\n", 50).unwrap();
    let far = base.encode(ddf_curriculum::envs::Cell::new(3, 0));
    let mut out = Vec::new();
    for code in 0..4usize.pow(len as u32) {
        let mut env = base.clone();
        let mut state = env.reset(&far).unwrap();
        let mut ts = Vec::new();
        let mut c = code;
        for _ in 0..len {
            let action = Action::Discrete(c % 4);
            c /= 4;
            let step = env.step(&action).unwrap();
            ts.push(Transition {
                state: std::mem::replace(&mut state, step.next_state.clone()),
                action,
                next_state: step.next_state,
                achieved_goal: step.achieved_goal,
                desired_goal: far.clone(),
                reward: step.reward,
                done: step.done,
            });
            if step.done {
                break;
            }
        }
        out.push(Episode::new(ts).unwrap());
    }
    out
}
