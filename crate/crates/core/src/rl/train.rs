use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::env::TrainEnv;
use super::mlp::Mlp;
use super::replay::{ReplayBuffer, Transition};
use super::td3::{Td3, Td3Config};
use super::RlError;

/// One learning-curve row, written when an episode ends.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurvePoint {
    /// Environment steps taken so far.
    pub step: usize,
    /// Summed reward of the episode, averaged over agents.
    pub episode_return: f64,
    /// Mean critic loss over the episode's updates; NaN before learning starts.
    pub critic_loss: f64,
    /// Mean actor objective over the episode's actor updates; NaN if none.
    pub actor_objective: f64,
}

pub const CURVE_HEADER: &str = "step,episode_return,critic_loss,actor_objective";

pub fn curve_csv(curve: &[CurvePoint]) -> String {
    let mut out = format!("{CURVE_HEADER}\n");
    for p in curve {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            p.step, p.episode_return, p.critic_loss, p.actor_objective
        );
    }
    out
}

#[derive(Debug, Clone)]
pub struct TrainOutput {
    pub agent: Td3,
    pub curve: Vec<CurvePoint>,
    pub buffer_len: usize,
    pub env_steps: usize,
}

impl TrainOutput {
    pub fn actor(&self) -> &Mlp {
        &self.agent.actor
    }
}

#[derive(Default)]
struct Running {
    returns: Vec<f64>,
    critic: (f64, usize),
    actor: (f64, usize),
}

impl Running {
    fn mean((sum, n): (f64, usize)) -> f64 {
        if n == 0 {
            f64::NAN
        } else {
            sum / n as f64
        }
    }

    fn close(&mut self, step: usize) -> CurvePoint {
        let n = self.returns.len().max(1) as f64;
        let p = CurvePoint {
            step,
            episode_return: self.returns.iter().sum::<f64>() / n,
            critic_loss: Self::mean(self.critic),
            actor_objective: Self::mean(self.actor),
        };
        *self = Running::default();
        p
    }
}

/// Random exploration for `initial_steps`, then `epochs × rollout_steps`
/// noisy policy steps, each followed by `update_steps` TD3 updates. Every
/// agent of the environment feeds the one buffer and acts with the one
/// actor. Deterministic for a given seed.
pub fn train<E: TrainEnv>(
    env: &mut E,
    config: &Td3Config,
    seed: u64,
) -> Result<TrainOutput, RlError> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let action_box = env.action_box();
    let mut agent = Td3::new(env.obs_dim(), &action_box, config, &mut rng)?;
    let mut buffer = ReplayBuffer::new(config.buffer_capacity);
    let mut curve = Vec::new();

    let total = config.initial_steps + config.epochs * config.rollout_steps;
    let mut obs = env.reset(&mut rng)?;
    let mut run = Running {
        returns: vec![0.0; obs.len()],
        ..Running::default()
    };
    let mut live = vec![true; obs.len()];
    for step in 0..total {
        let learning = step >= config.initial_steps;
        let actions = obs
            .iter()
            .map(|o| {
                if learning {
                    agent.explore(o, config.sigma_explore, &mut rng)
                } else {
                    Ok(action_box
                        .iter()
                        .map(|[lo, hi]| rng.random_range(*lo..=*hi))
                        .collect())
                }
            })
            .collect::<Result<Vec<_>, _>>()?;
        let out = env.step(&actions)?;
        for (i, s) in out.agents.into_iter().enumerate() {
            let Some(s) = s else { continue };
            if !live[i] {
                continue;
            }
            run.returns[i] += s.reward;
            buffer.push(Transition {
                s: std::mem::replace(&mut obs[i], s.obs.clone()),
                a: actions[i].clone(),
                r: s.reward,
                s_next: s.obs,
                done: s.terminal,
            });
            live[i] = !s.terminal;
        }
        if learning && buffer.len() >= config.batch {
            for _ in 0..config.update_steps {
                let stats = agent.update(&buffer, config, &mut rng)?;
                run.critic.0 += stats.critic_loss;
                run.critic.1 += 1;
                if let Some(j) = stats.actor_objective {
                    run.actor.0 += j;
                    run.actor.1 += 1;
                }
            }
        }
        if out.episode_over {
            let point = run.close(step + 1);
            if (curve.len() + 1) % 50 == 0 {
                log::info!(
                    "step {} episode {} return {:.3} critic loss {:.4}",
                    point.step,
                    curve.len() + 1,
                    point.episode_return,
                    point.critic_loss
                );
            }
            curve.push(point);
            obs = env.reset(&mut rng)?;
            run.returns = vec![0.0; obs.len()];
            live = vec![true; obs.len()];
        }
    }
    Ok(TrainOutput {
        agent,
        curve,
        buffer_len: buffer.len(),
        env_steps: total,
    })
}
