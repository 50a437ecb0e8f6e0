use rand::Rng;

use super::{check_batch, value_floor, Agent, UpdateLosses};
use crate::domain::{concat, Action, Transition};
use crate::error::{Error, Result};
use crate::nn::{Adam, Mlp};
use crate::rng::RngHandle;

#[derive(Clone, Debug, PartialEq)]
pub struct QConfig {
    pub hidden: Vec<usize>,
    pub gamma: f64,
    pub learning_rate: f64,
    /// Soft target-update rate.
    pub tau: f64,
    pub eps_start: f64,
    pub eps_end: f64,
    /// Share of training over which exploration anneals linearly.
    pub eps_anneal_fraction: f64,
}

impl Default for QConfig {
    fn default() -> Self {
        Self {
            hidden: vec![64, 64],
            gamma: 0.98,
            learning_rate: 1e-3,
            tau: 0.005,
            eps_start: 1.0,
            eps_end: 0.05,
            eps_anneal_fraction: 0.3,
        }
    }
}

/// Goal-conditioned Q-learning over a discrete action set.
#[derive(Clone, Debug)]
pub struct QAgent {
    critic: Mlp,
    target: Mlp,
    adam: Adam,
    config: QConfig,
    state_dim: usize,
    goal_dim: usize,
    explore_rate: f64,
}

impl QAgent {
    pub fn new(
        state_dim: usize,
        goal_dim: usize,
        num_actions: usize,
        config: QConfig,
        rng: &mut RngHandle,
    ) -> Result<Self> {
        if !(0.0..1.0).contains(&config.gamma) {
            return Err(Error::Config("agent.gamma must lie in [0, 1)".into()));
        }
        let mut sizes = vec![state_dim + goal_dim];
        sizes.extend_from_slice(&config.hidden);
        sizes.push(num_actions);
        let critic = Mlp::new(&sizes, rng)?;
        Ok(Self {
            target: critic.clone(),
            adam: Adam::new(critic.num_params(), config.learning_rate),
            critic,
            explore_rate: config.eps_start,
            config,
            state_dim,
            goal_dim,
        })
    }

    /// Replaces the critic (and its target) with given weights.
    pub fn with_critic(mut self, critic: Mlp) -> Result<Self> {
        if critic.sizes() != self.critic.sizes() {
            return Err(Error::Spec("critic shape mismatch".into()));
        }
        self.target = critic.clone();
        self.critic = critic;
        Ok(self)
    }

    pub fn critic(&self) -> &Mlp {
        &self.critic
    }

    pub fn target(&self) -> &Mlp {
        &self.target
    }

    pub fn num_actions(&self) -> usize {
        self.critic.output_dim()
    }

    pub fn explore_rate(&self) -> f64 {
        self.explore_rate
    }

    pub fn set_explore_rate(&mut self, rate: f64) {
        self.explore_rate = rate;
    }

    pub fn config(&self) -> &QConfig {
        &self.config
    }

    fn input(&self, state: &[f64], goal: &[f64]) -> Result<Vec<f64>> {
        if state.len() != self.state_dim {
            return Err(Error::Dimension {
                expected: self.state_dim,
                got: state.len(),
            });
        }
        if goal.len() != self.goal_dim {
            return Err(Error::Dimension {
                expected: self.goal_dim,
                got: goal.len(),
            });
        }
        Ok(concat(&[state, goal]))
    }

    pub fn q_values(&self, state: &[f64], goal: &[f64]) -> Result<Vec<f64>> {
        self.critic.forward(&self.input(state, goal)?)
    }

    /// Bellman targets `r + gamma * max_a' Q_target(s', g, a')`, cut at
    /// success and clamped to the attainable value band.
    pub fn targets(&self, batch: &[Transition]) -> Result<Vec<f64>> {
        let n = batch.len();
        let mut next = Vec::with_capacity(n * self.critic.input_dim());
        for t in batch {
            next.extend(self.input(&t.next_state, &t.desired_goal)?);
        }
        let q_next = self.target.forward_batch(&next, n);
        let floor = value_floor(self.config.gamma);
        Ok(batch
            .iter()
            .zip(q_next.chunks_exact(self.num_actions()))
            .map(|(t, q)| {
                if t.is_success() {
                    t.reward
                } else {
                    let best = q.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                    (t.reward + self.config.gamma * best).clamp(floor, 0.0)
                }
            })
            .collect())
    }
}

fn argmax(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in xs.iter().enumerate() {
        if *x > xs[best] {
            best = i;
        }
    }
    best
}

impl Agent for QAgent {
    fn act(
        &self,
        state: &[f64],
        goal: &[f64],
        explore: bool,
        rng: &mut RngHandle,
    ) -> Result<Action> {
        let q = self.q_values(state, goal)?;
        if explore && rng.gen::<f64>() < self.explore_rate {
            return Ok(Action::Discrete(rng.gen_range(0..self.num_actions())));
        }
        Ok(Action::Discrete(argmax(&q)))
    }

    fn update(&mut self, batch: &[Transition]) -> Result<UpdateLosses> {
        check_batch(batch)?;
        let n = batch.len();
        let k = self.num_actions();
        let y = self.targets(batch)?;
        let mut inputs = Vec::with_capacity(n * self.critic.input_dim());
        let mut actions = Vec::with_capacity(n);
        for t in batch {
            inputs.extend(self.input(&t.state, &t.desired_goal)?);
            match t.action {
                Action::Discrete(a) if a < k => actions.push(a),
                ref other => return Err(Error::InvalidAction(format!("{other:?}"))),
            }
        }
        let cache = self.critic.forward_cached(&inputs, n)?;
        let mut grad_out = vec![0.0; n * k];
        let mut loss = 0.0;
        for (i, (&a, &yi)) in actions.iter().zip(&y).enumerate() {
            let err = cache.output()[i * k + a] - yi;
            loss += err * err;
            grad_out[i * k + a] = 2.0 * err / n as f64;
        }
        let (grads, _) = self.critic.backward(&cache, &grad_out);
        self.adam.step(self.critic.params_mut(), &grads)?;
        self.critic
            .soft_update_into(&mut self.target, self.config.tau);
        Ok(UpdateLosses {
            critic: loss / n as f64,
            actor: None,
        })
    }

    fn set_progress(&mut self, fraction: f64) {
        let c = &self.config;
        let t = if c.eps_anneal_fraction > 0.0 {
            (fraction / c.eps_anneal_fraction).clamp(0.0, 1.0)
        } else {
            1.0
        };
        self.explore_rate = c.eps_start + t * (c.eps_end - c.eps_start);
    }

    fn networks(&self) -> Vec<(&'static str, &Mlp)> {
        vec![("critic", &self.critic), ("critic_target", &self.target)]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agents::evaluate;
    use crate::envs::{Cell, GoalEnv, GridNavEnv};
    use crate::replay::{HerConfig, ReplayBuffer};

    fn agent(rng: &mut RngHandle) -> QAgent {
        QAgent::new(2, 2, 4, QConfig::default(), rng).unwrap()
    }

    #[test]
    fn greedy_action_is_argmax() {
        // a 4-input linear critic whose biases are the Q-values
        let mut rng = RngHandle::new(0, 0);
        let mut params = vec![0.0; 4 * 4];
        params.extend([0.1, 0.9, 0.3, 0.2]);
        let critic = Mlp::from_params(&[4, 4], params).unwrap();
        let cfg = QConfig {
            hidden: vec![],
            ..QConfig::default()
        };
        let a = QAgent::new(2, 2, 4, cfg, &mut rng)
            .unwrap()
            .with_critic(critic)
            .unwrap();
        assert_eq!(
            a.act(&[0.0, 0.0], &[1.0, 1.0], false, &mut rng).unwrap(),
            Action::Discrete(1)
        );
    }

    #[test]
    fn full_exploration_is_uniform() {
        let mut rng = RngHandle::new(1, 0);
        let mut a = agent(&mut rng);
        a.set_explore_rate(1.0);
        let mut counts = [0usize; 4];
        for _ in 0..10_000 {
            let Action::Discrete(i) = a.act(&[0.5, 0.5], &[0.0, 0.0], true, &mut rng).unwrap()
            else {
                unreachable!()
            };
            counts[i] += 1;
        }
        assert!(
            crate::stats::chi_square_uniform_p(&counts) > 0.001,
            "{counts:?}"
        );
    }

    #[test]
    fn exploration_schedule_anneals() {
        let mut rng = RngHandle::new(2, 0);
        let mut a = agent(&mut rng);
        a.set_progress(0.0);
        assert_eq!(a.explore_rate(), 1.0);
        a.set_progress(0.15);
        assert!((a.explore_rate() - 0.525).abs() < 1e-12);
        a.set_progress(0.9);
        assert!((a.explore_rate() - 0.05).abs() < 1e-12);
    }

    fn tr(r: f64) -> Transition {
        Transition {
            state: vec![0.1, 0.2],
            action: Action::Discrete(2),
            next_state: vec![0.3, 0.4],
            achieved_goal: vec![0.3, 0.4],
            desired_goal: vec![0.3, 0.4],
            reward: r,
            done: r == 0.0,
        }
    }

    #[test]
    fn success_targets_are_exactly_zero() {
        let mut rng = RngHandle::new(3, 0);
        let a = agent(&mut rng);
        assert!(a
            .targets(&vec![tr(0.0); 8])
            .unwrap()
            .iter()
            .all(|y| *y == 0.0));
    }

    #[test]
    fn zero_discount_regresses_on_reward() {
        let mut rng = RngHandle::new(4, 0);
        let cfg = QConfig {
            gamma: 0.0,
            ..QConfig::default()
        };
        let a = QAgent::new(2, 2, 4, cfg, &mut rng).unwrap();
        let y = a.targets(&[tr(-1.0), tr(0.0)]).unwrap();
        assert_eq!(y, vec![-1.0, 0.0]);
    }

    #[test]
    fn targets_stay_in_value_band() {
        let mut rng = RngHandle::new(5, 0);
        let mut a = agent(&mut rng);
        // push the target network towards large positive values
        for p in a.target.params_mut() {
            *p = 3.0;
        }
        let y = a.targets(&vec![tr(-1.0); 4]).unwrap();
        assert!(y.iter().all(|v| *v <= 0.0 && *v >= -50.0));
        for p in a.target.params_mut() {
            *p = -100.0;
        }
        let y = a.targets(&vec![tr(-1.0); 4]).unwrap();
        assert!(y.iter().all(|v| (*v - (-50.0)).abs() < 1e-9));
    }

    #[test]
    fn update_errors() {
        let mut rng = RngHandle::new(6, 0);
        let mut a = agent(&mut rng);
        assert!(matches!(a.update(&[]), Err(Error::EmptyBatch)));
        let mut bad = tr(-1.0);
        bad.action = Action::Discrete(7);
        assert!(a.update(&[bad]).is_err());
        assert!(matches!(
            a.act(&[0.0], &[0.0, 0.0], false, &mut rng),
            Err(Error::Dimension { .. })
        ));
    }

    #[test]
    fn evaluate_has_no_side_effects_and_start_goal_succeeds() {
        let mut rng = RngHandle::new(7, 0);
        let a = agent(&mut rng);
        let env = GridNavEnv::new(5, 5, &[], Cell::new(2, 2), 20).unwrap();
        let before = a.critic().clone();
        let r = evaluate(&a, &env, &[env.start_state()]).unwrap();
        assert_eq!(r.success_rate, 1.0);
        let r = evaluate(&a, &env, &[env.encode(Cell::new(3, 2))]).unwrap();
        assert!((0.0..=1.0).contains(&r.success_rate));
        assert_eq!(&before, a.critic());
    }

    #[test]
    fn learns_a_three_cell_corridor() {
        let env = GridNavEnv::new(3, 1, &[], Cell::new(0, 0), 10).unwrap();
        let mut rng = RngHandle::new(8, 0);
        let cfg = QConfig {
            hidden: vec![32, 32],
            learning_rate: 3e-3,
            tau: 0.05,
            ..QConfig::default()
        };
        let mut agent = QAgent::new(2, 2, 4, cfg, &mut rng).unwrap();
        let mut buffer = ReplayBuffer::new(10_000, 10);
        let mut env_rng = RngHandle::new(8, 1);
        let total = 3000;
        let mut steps = 0;
        while steps < total {
            let goal = env.sample_uniform_goal(&mut env_rng);
            let mut e = env.clone();
            let mut s = e.reset(&goal).unwrap();
            let mut ts = Vec::new();
            loop {
                agent.set_progress(steps as f64 / total as f64);
                let a = agent.act(&s, &goal, true, &mut rng).unwrap();
                let st = e.step(&a).unwrap();
                ts.push(Transition {
                    state: s.clone(),
                    action: a,
                    next_state: st.next_state.clone(),
                    achieved_goal: st.achieved_goal.clone(),
                    desired_goal: goal.clone(),
                    reward: st.reward,
                    done: st.done,
                });
                s = st.next_state;
                steps += 1;
                if buffer.len() > 64 {
                    let batch = buffer
                        .sample_her_batch(64, HerConfig::default(), env.spec().epsilon, &mut rng)
                        .unwrap();
                    let batch: Vec<Transition> = batch.into_iter().map(|h| h.transition).collect();
                    agent.update(&batch).unwrap();
                }
                if st.done {
                    break;
                }
            }
            buffer
                .push_episode(crate::domain::Episode::new(ts).unwrap())
                .unwrap();
        }
        // greedy policy reaches every cell in exactly the oracle distance
        for cell in env.free_cells() {
            let goal = env.encode(*cell);
            let optimal = env.oracle_distance(env.start(), *cell).unwrap().unwrap();
            let mut e = env.clone();
            let mut s = e.reset(&goal).unwrap();
            let mut taken = 0;
            if optimal > 0 {
                loop {
                    let a = agent.act(&s, &goal, false, &mut rng).unwrap();
                    let st = e.step(&a).unwrap();
                    taken += 1;
                    s = st.next_state;
                    if st.done {
                        assert_eq!(st.reward, 0.0, "failed to reach {cell}");
                        break;
                    }
                }
            }
            assert_eq!(taken, optimal, "goal {cell}");
        }
    }
}
