use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::mlp::Mlp;
use super::optim::Adam;
use super::replay::{ReplayBuffer, Transition};
use super::RlError;

/// TD3 hyperparameters and the outer training schedule.
///
/// Noise scales are fractions of each action dimension's half-width.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Td3Config {
    pub gamma: f64,
    pub tau: f64,
    pub policy_delay: u64,
    pub sigma_explore: f64,
    pub sigma_smooth: f64,
    pub clip_c: f64,
    pub lr_actor: f64,
    pub lr_critic: f64,
    pub batch: usize,
    pub buffer_capacity: usize,
    pub hidden: Vec<usize>,
    /// Random-action steps before learning starts.
    pub initial_steps: usize,
    pub epochs: usize,
    /// Environment steps per epoch.
    pub rollout_steps: usize,
    /// Gradient updates after each environment step.
    pub update_steps: usize,
}

impl Default for Td3Config {
    fn default() -> Self {
        Self {
            gamma: 0.99,
            tau: 0.005,
            policy_delay: 2,
            sigma_explore: 0.1,
            sigma_smooth: 0.2,
            clip_c: 0.5,
            lr_actor: 1e-3,
            lr_critic: 1e-3,
            batch: 128,
            buffer_capacity: 100_000,
            hidden: vec![64, 64],
            initial_steps: 1000,
            epochs: 10,
            rollout_steps: 1000,
            update_steps: 1,
        }
    }
}

impl Td3Config {
    pub fn validate(&self) -> Result<(), RlError> {
        let bad = |m: &str| Err(RlError::Config(m.to_string()));
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return bad("gamma must lie in (0, 1)");
        }
        if !(self.tau > 0.0 && self.tau <= 1.0) {
            return bad("tau must lie in (0, 1]");
        }
        if self.policy_delay == 0 {
            return bad("policy_delay must be at least 1");
        }
        if self.batch == 0 || self.buffer_capacity < self.batch {
            return bad("batch must be positive and fit in the buffer");
        }
        if [self.sigma_explore, self.sigma_smooth, self.clip_c]
            .iter()
            .any(|s| !(*s >= 0.0))
        {
            return bad("noise scales must be non-negative");
        }
        if !(self.lr_actor > 0.0 && self.lr_critic > 0.0) {
            return bad("learning rates must be positive");
        }
        Ok(())
    }
}

/// `r + γ·(1 − done)·min(q1, q2)`.
pub fn td_target(r: f64, done: bool, gamma: f64, q1: f64, q2: f64) -> f64 {
    if done {
        r
    } else {
        r + gamma * q1.min(q2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UpdateStats {
    /// Mean squared TD error, averaged over both critics.
    pub critic_loss: f64,
    /// Mean `Q1(s, π(s))` over the batch, on actor-update steps.
    pub actor_objective: Option<f64>,
}

/// Actor, twin critics and their target copies.
#[derive(Debug, Clone)]
pub struct Td3 {
    pub actor: Mlp,
    pub actor_target: Mlp,
    pub critics: [Mlp; 2],
    pub critic_targets: [Mlp; 2],
    pub action_box: Vec<[f64; 2]>,
    actor_opt: Adam,
    critic_opts: [Adam; 2],
    updates: u64,
}

impl Td3 {
    pub fn new<R: Rng + ?Sized>(
        obs_dim: usize,
        action_box: &[[f64; 2]],
        config: &Td3Config,
        rng: &mut R,
    ) -> Result<Self, RlError> {
        config.validate()?;
        let actor = Mlp::actor(obs_dim, &config.hidden, action_box, rng)?;
        let q_in = obs_dim + action_box.len();
        let critics = [
            Mlp::critic(q_in, &config.hidden, rng)?,
            Mlp::critic(q_in, &config.hidden, rng)?,
        ];
        Ok(Self {
            actor_target: actor.clone(),
            critic_targets: critics.clone(),
            actor_opt: Adam::new(actor.n_params(), config.lr_actor),
            critic_opts: [
                Adam::new(critics[0].n_params(), config.lr_critic),
                Adam::new(critics[1].n_params(), config.lr_critic),
            ],
            actor,
            critics,
            action_box: action_box.to_vec(),
            updates: 0,
        })
    }

    /// Critic updates performed so far.
    pub fn updates(&self) -> u64 {
        self.updates
    }

    fn half_width(&self, j: usize) -> f64 {
        0.5 * (self.action_box[j][1] - self.action_box[j][0])
    }

    /// Maps an action into `[-1, 1]` per dimension for the critic input.
    fn critic_input(&self, s: &[f64], a: &[f64]) -> Vec<f64> {
        let mut x = s.to_vec();
        x.extend(
            a.iter()
                .zip(&self.action_box)
                .map(|(a, [lo, hi])| (2.0 * a - lo - hi) / (hi - lo)),
        );
        x
    }

    /// Adds clipped Gaussian noise in half-width units, then clips to the box.
    fn perturb<R: Rng + ?Sized>(&self, a: &mut [f64], sigma: f64, clip: Option<f64>, rng: &mut R) {
        if sigma <= 0.0 {
            return;
        }
        let normal = Normal::new(0.0, sigma).expect("positive sigma");
        for (j, x) in a.iter_mut().enumerate() {
            let mut e: f64 = normal.sample(rng);
            if let Some(c) = clip {
                e = e.clamp(-c, c);
            }
            let [lo, hi] = self.action_box[j];
            *x = (*x + e * self.half_width(j)).clamp(lo, hi);
        }
    }

    pub fn act(&self, s: &[f64]) -> Result<Vec<f64>, RlError> {
        self.actor.forward(s)
    }

    /// Deterministic action plus exploration noise.
    pub fn explore<R: Rng + ?Sized>(
        &self,
        s: &[f64],
        sigma: f64,
        rng: &mut R,
    ) -> Result<Vec<f64>, RlError> {
        let mut a = self.act(s)?;
        self.perturb(&mut a, sigma, None, rng);
        Ok(a)
    }

    pub fn q(&self, k: usize, s: &[f64], a: &[f64]) -> Result<f64, RlError> {
        Ok(self.critics[k].forward(&self.critic_input(s, a))?[0])
    }

    /// Clipped double-Q targets with target-policy smoothing.
    pub fn critic_targets<R: Rng + ?Sized>(
        &self,
        batch: &[&Transition],
        config: &Td3Config,
        rng: &mut R,
    ) -> Result<Vec<f64>, RlError> {
        batch
            .iter()
            .map(|t| {
                if t.done {
                    return Ok(t.r);
                }
                let mut a = self.actor_target.forward(&t.s_next)?;
                self.perturb(&mut a, config.sigma_smooth, Some(config.clip_c), rng);
                let x = self.critic_input(&t.s_next, &a);
                let q1 = self.critic_targets[0].forward(&x)?[0];
                let q2 = self.critic_targets[1].forward(&x)?[0];
                Ok(td_target(t.r, false, config.gamma, q1, q2))
            })
            .collect()
    }

    /// One critic regression step on a uniform batch; every `policy_delay`
    /// steps also one actor ascent step and a soft update of all targets.
    pub fn update<R: Rng + ?Sized>(
        &mut self,
        buffer: &ReplayBuffer,
        config: &Td3Config,
        rng: &mut R,
    ) -> Result<UpdateStats, RlError> {
        let idx = buffer
            .sample_indices(config.batch, rng)
            .ok_or(RlError::InsufficientData {
                have: buffer.len(),
                need: config.batch,
            })?;
        let batch: Vec<&Transition> = idx.iter().map(|&i| buffer.get(i)).collect();
        let y = self.critic_targets(&batch, config, rng)?;
        let scale = 1.0 / batch.len() as f64;

        let mut critic_loss = 0.0;
        for k in 0..2 {
            let net = &self.critics[k];
            let mut grads = vec![0.0; net.n_params()];
            for (t, y) in batch.iter().zip(&y) {
                let trace = net.trace(&self.critic_input(&t.s, &t.a))?;
                let err = trace.output[0] - y;
                critic_loss += 0.5 * scale * err * err;
                let (g, _) = net.backward(&trace, &[2.0 * err * scale])?;
                grads.iter_mut().zip(&g).for_each(|(a, b)| *a += b);
            }
            self.critic_opts[k].step(&mut self.critics[k].params, &grads);
        }
        self.updates += 1;

        let mut actor_objective = None;
        if self.updates.is_multiple_of(config.policy_delay) {
            let obs_dim = self.actor.n_in();
            let mut grads = vec![0.0; self.actor.n_params()];
            let mut objective = 0.0;
            for t in &batch {
                let a_trace = self.actor.trace(&t.s)?;
                let q_trace = self.critics[0].trace(&self.critic_input(&t.s, &a_trace.output))?;
                objective += scale * q_trace.output[0];
                // ascend Q: the loss is −Q
                let (_, dq_dx) = self.critics[0].backward(&q_trace, &[-scale])?;
                let dq_da: Vec<f64> = dq_dx[obs_dim..]
                    .iter()
                    .enumerate()
                    .map(|(j, g)| g / self.half_width(j))
                    .collect();
                let (g, _) = self.actor.backward(&a_trace, &dq_da)?;
                grads.iter_mut().zip(&g).for_each(|(a, b)| *a += b);
            }
            self.actor_opt.step(&mut self.actor.params, &grads);
            self.actor_target.soft_update_from(&self.actor, config.tau);
            for k in 0..2 {
                self.critic_targets[k].soft_update_from(&self.critics[k], config.tau);
            }
            actor_objective = Some(objective);
        }
        if self
            .actor
            .params
            .iter()
            .chain(&self.critics[0].params)
            .any(|p| !p.is_finite())
        {
            return Err(RlError::NonFinite);
        }
        Ok(UpdateStats {
            critic_loss,
            actor_objective,
        })
    }
}
