use rand_distr::{Distribution, Normal};

use super::{check_batch, value_floor, Agent, UpdateLosses};
use crate::domain::{concat, Action, Transition};
use crate::error::{Error, Result};
use crate::nn::{Adam, Mlp};
use crate::rng::RngHandle;

#[derive(Clone, Debug, PartialEq)]
pub struct AcConfig {
    pub hidden: Vec<usize>,
    pub gamma: f64,
    pub actor_learning_rate: f64,
    pub critic_learning_rate: f64,
    pub tau: f64,
    /// Exploration noise standard deviation as a fraction of the action range.
    pub noise_scale: f64,
}

impl Default for AcConfig {
    fn default() -> Self {
        Self {
            hidden: vec![64, 64],
            gamma: 0.98,
            actor_learning_rate: 1e-3,
            critic_learning_rate: 1e-3,
            tau: 0.005,
            noise_scale: 0.1,
        }
    }
}

/// Deterministic actor with a Q critic (DDPG-style).
///
/// The actor emits `tanh` pre-activations mapped affinely onto the action
/// box; the critic sees the normalized action in `[-1, 1]`.
#[derive(Clone, Debug)]
pub struct AcAgent {
    actor: Mlp,
    critic: Mlp,
    actor_target: Mlp,
    critic_target: Mlp,
    actor_adam: Adam,
    critic_adam: Adam,
    low: Vec<f64>,
    high: Vec<f64>,
    state_dim: usize,
    goal_dim: usize,
    config: AcConfig,
}

impl AcAgent {
    pub fn new(
        state_dim: usize,
        goal_dim: usize,
        low: Vec<f64>,
        high: Vec<f64>,
        config: AcConfig,
        rng: &mut RngHandle,
    ) -> Result<Self> {
        if !(0.0..1.0).contains(&config.gamma) {
            return Err(Error::Config("agent.gamma must lie in [0, 1)".into()));
        }
        if low.is_empty() || low.len() != high.len() || low.iter().zip(&high).any(|(l, h)| !(l < h))
        {
            return Err(Error::Spec("malformed action bounds".into()));
        }
        let act_dim = low.len();
        let mut actor_sizes = vec![state_dim + goal_dim];
        actor_sizes.extend_from_slice(&config.hidden);
        actor_sizes.push(act_dim);
        let mut critic_sizes = vec![state_dim + goal_dim + act_dim];
        critic_sizes.extend_from_slice(&config.hidden);
        critic_sizes.push(1);
        let actor = Mlp::new(&actor_sizes, rng)?;
        let critic = Mlp::new(&critic_sizes, rng)?;
        Ok(Self {
            actor_target: actor.clone(),
            critic_target: critic.clone(),
            actor_adam: Adam::new(actor.num_params(), config.actor_learning_rate),
            critic_adam: Adam::new(critic.num_params(), config.critic_learning_rate),
            actor,
            critic,
            low,
            high,
            state_dim,
            goal_dim,
            config,
        })
    }

    pub fn actor(&self) -> &Mlp {
        &self.actor
    }

    pub fn critic(&self) -> &Mlp {
        &self.critic
    }

    pub fn action_dim(&self) -> usize {
        self.low.len()
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

    fn to_env(&self, unit: &[f64]) -> Vec<f64> {
        unit.iter()
            .zip(self.low.iter().zip(&self.high))
            .map(|(u, (l, h))| l + 0.5 * (u + 1.0) * (h - l))
            .collect()
    }

    fn to_unit(&self, action: &[f64]) -> Vec<f64> {
        action
            .iter()
            .zip(self.low.iter().zip(&self.high))
            .map(|(a, (l, h))| (2.0 * (a - l) / (h - l) - 1.0).clamp(-1.0, 1.0))
            .collect()
    }

    /// Critic estimate for an environment-space action.
    pub fn q_value(&self, state: &[f64], goal: &[f64], action: &[f64]) -> Result<f64> {
        let x = concat(&[&self.input(state, goal)?, &self.to_unit(action)]);
        Ok(self.critic.forward(&x)?[0])
    }
}

impl Agent for AcAgent {
    fn act(
        &self,
        state: &[f64],
        goal: &[f64],
        explore: bool,
        rng: &mut RngHandle,
    ) -> Result<Action> {
        let unit: Vec<f64> = self
            .actor
            .forward(&self.input(state, goal)?)?
            .into_iter()
            .map(f64::tanh)
            .collect();
        let mut action = self.to_env(&unit);
        if explore {
            for (a, (l, h)) in action.iter_mut().zip(self.low.iter().zip(&self.high)) {
                let sigma = self.config.noise_scale * (h - l);
                if sigma > 0.0 {
                    let noise = Normal::new(0.0, sigma).expect("positive sigma");
                    *a = (*a + noise.sample(rng)).clamp(*l, *h);
                }
            }
        }
        Ok(Action::Continuous(action))
    }

    fn update(&mut self, batch: &[Transition]) -> Result<UpdateLosses> {
        check_batch(batch)?;
        let n = batch.len();
        let ad = self.action_dim();
        let sg = self.state_dim + self.goal_dim;
        let floor = value_floor(self.config.gamma);

        let mut obs = Vec::with_capacity(n * sg);
        let mut next_obs = Vec::with_capacity(n * sg);
        let mut critic_in = Vec::with_capacity(n * (sg + ad));
        for t in batch {
            let a = match &t.action {
                Action::Continuous(a) if a.len() == ad => a,
                other => return Err(Error::InvalidAction(format!("{other:?}"))),
            };
            let o = self.input(&t.state, &t.desired_goal)?;
            critic_in.extend_from_slice(&o);
            critic_in.extend(self.to_unit(a));
            obs.extend(o);
            next_obs.extend(self.input(&t.next_state, &t.desired_goal)?);
        }

        // critic
        let next_unit: Vec<f64> = self
            .actor_target
            .forward_batch(&next_obs, n)
            .into_iter()
            .map(f64::tanh)
            .collect();
        let mut next_in = Vec::with_capacity(n * (sg + ad));
        for i in 0..n {
            next_in.extend_from_slice(&next_obs[i * sg..(i + 1) * sg]);
            next_in.extend_from_slice(&next_unit[i * ad..(i + 1) * ad]);
        }
        let q_next = self.critic_target.forward_batch(&next_in, n);
        let cache = self.critic.forward_cached(&critic_in, n)?;
        let mut critic_loss = 0.0;
        let grad_out: Vec<f64> = batch
            .iter()
            .zip(&q_next)
            .zip(cache.output())
            .map(|((t, qn), q)| {
                let y = if t.is_success() {
                    t.reward
                } else {
                    (t.reward + self.config.gamma * qn).clamp(floor, 0.0)
                };
                critic_loss += (q - y) * (q - y);
                2.0 * (q - y) / n as f64
            })
            .collect();
        let (grads, _) = self.critic.backward(&cache, &grad_out);
        self.critic_adam.step(self.critic.params_mut(), &grads)?;

        // actor: ascend Q(s, g, tanh(actor(s, g)))
        let actor_cache = self.actor.forward_cached(&obs, n)?;
        let unit: Vec<f64> = actor_cache.output().iter().map(|z| z.tanh()).collect();
        let mut in_pi = Vec::with_capacity(n * (sg + ad));
        for i in 0..n {
            in_pi.extend_from_slice(&obs[i * sg..(i + 1) * sg]);
            in_pi.extend_from_slice(&unit[i * ad..(i + 1) * ad]);
        }
        let q_cache = self.critic.forward_cached(&in_pi, n)?;
        let actor_loss = -q_cache.output().iter().sum::<f64>() / n as f64;
        let (_, d_in) = self.critic.backward(&q_cache, &vec![-1.0 / n as f64; n]);
        let mut d_pre = vec![0.0; n * ad];
        for i in 0..n {
            for j in 0..ad {
                let u = unit[i * ad + j];
                d_pre[i * ad + j] = d_in[i * (sg + ad) + sg + j] * (1.0 - u * u);
            }
        }
        let (actor_grads, _) = self.actor.backward(&actor_cache, &d_pre);
        self.actor_adam
            .step(self.actor.params_mut(), &actor_grads)?;

        self.critic
            .soft_update_into(&mut self.critic_target, self.config.tau);
        self.actor
            .soft_update_into(&mut self.actor_target, self.config.tau);
        Ok(UpdateLosses {
            critic: critic_loss / n as f64,
            actor: Some(actor_loss),
        })
    }

    fn set_progress(&mut self, _fraction: f64) {}

    fn networks(&self) -> Vec<(&'static str, &Mlp)> {
        vec![
            ("actor", &self.actor),
            ("critic", &self.critic),
            ("actor_target", &self.actor_target),
            ("critic_target", &self.critic_target),
        ]
    }
}
