//! Constrained deep Q-learning: one shared network decides a dwell level
//! for every live target, and a Lagrange multiplier prices the time budget.

use rand::Rng;

use crate::comms::lagrangian_reward;
use crate::config::{OptimizerKind, RunConfig};
use crate::env::{Environment, Phase, Snapshot};
use crate::error::{IsacError, Result};
use crate::metrics::{EpisodeMetrics, SlotRecord};
use crate::qnet::{layer_dims, Experience, Optimizer, QNet, ReplayBuffer};
use crate::rng::{stream, SimRng, Stream};
use crate::scenario::Scenario;

/// Dwell fractions the agent may pick, ascending from 0 to 1.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionSpace {
    levels: Vec<f64>,
}

impl ActionSpace {
    /// `{0, 0.1, …, 1}`.
    pub fn tenths() -> Self {
        Self {
            levels: (0..=10).map(|i| i as f64 / 10.0).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    pub fn level(&self, action: usize) -> f64 {
        self.levels[action]
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }
}

/// Observation of one deciding task.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentState {
    pub azimuth_vars: Vec<f64>,
    pub prev_dwells: Vec<f64>,
    pub lambda_prev: f64,
    /// Absent when the identifier is omitted.
    pub agent_onehot: Option<Vec<f64>>,
}

impl AgentState {
    pub fn feature_len(n_targets: usize, omit_agent_id: bool) -> usize {
        if omit_agent_id {
            2 * n_targets + 1
        } else {
            3 * n_targets + 1
        }
    }

    /// Raw layout: variances, dwells, λ, then the identifier.
    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(3 * self.azimuth_vars.len() + 1);
        v.extend_from_slice(&self.azimuth_vars);
        v.extend_from_slice(&self.prev_dwells);
        v.push(self.lambda_prev);
        if let Some(id) = &self.agent_onehot {
            v.extend_from_slice(id);
        }
        v
    }

    /// Network input: the raw layout with variances mapped to
    /// `ln(1 + var / var_ref)` and λ divided by `lambda_ref`.
    pub fn encode(&self, var_ref: f64, lambda_ref: f64) -> Vec<f64> {
        let mut v = self.to_vec();
        let n = self.azimuth_vars.len();
        for x in &mut v[..n] {
            *x = (*x / var_ref).ln_1p();
        }
        v[2 * n] /= lambda_ref;
        v
    }
}

/// Assembles the observation of task `agent` from last slot's snapshot.
pub fn build_state(snapshot: &Snapshot, lambda_prev: f64, agent: usize, omit_agent_id: bool) -> Result<AgentState> {
    let n = snapshot.azimuth_vars.len();
    if agent >= n {
        return Err(IsacError::IndexOutOfRange { index: agent, len: n });
    }
    let agent_onehot = (!omit_agent_id).then(|| {
        let mut id = vec![0.0; n];
        id[agent] = 1.0;
        id
    });
    Ok(AgentState {
        azimuth_vars: snapshot.azimuth_vars.clone(),
        prev_dwells: snapshot.prev_dwells.clone(),
        lambda_prev,
        agent_onehot,
    })
}

/// Index of the largest value; the lowest index wins ties.
pub fn greedy_action(q: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in q.iter().enumerate() {
        if v > q[best] {
            best = i;
        }
    }
    best
}

/// ε-greedy choice over the network's outputs for `input`.
pub fn select_action<R: Rng + ?Sized>(net: &QNet, input: &[f64], epsilon: f64, rng: &mut R) -> Result<usize> {
    if epsilon > 0.0 && rng.random::<f64>() < epsilon {
        return Ok(rng.random_range(0..net.n_actions()));
    }
    Ok(greedy_action(&net.forward(input)?))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualState {
    pub lambda: f64,
    pub alpha: f64,
}

/// Projected ascent on the budget violation.
pub fn dual_update(d: DualState, dwell_sum: f64, t0: f64) -> DualState {
    DualState {
        lambda: (d.lambda + d.alpha * (dwell_sum - t0)).max(0.0),
        alpha: d.alpha,
    }
}

/// Stand-in for the network: maps (agent index, state) to an action index.
pub type ForcedPolicy<'a> = dyn FnMut(usize, &AgentState) -> usize + 'a;

/// Online learner: environment, shared network, replay memory and dual
/// variable, advanced one slot at a time.
pub struct Trainer {
    cfg: RunConfig,
    env: Environment,
    actions: ActionSpace,
    net: QNet,
    target: QNet,
    optimizer: Optimizer,
    buffer: ReplayBuffer,
    dual: DualState,
    lambda_prev: f64,
    train_steps: u64,
    explore_rng: SimRng,
    replay_rng: SimRng,
}

impl Trainer {
    /// A trainer on the random scenario described by `cfg`.
    pub fn new(cfg: &RunConfig) -> Result<Self> {
        Self::with_scenario(cfg, Scenario::Random(cfg.scenario()))
    }

    pub fn with_scenario(cfg: &RunConfig, scenario: Scenario) -> Result<Self> {
        cfg.validate()?;
        let actions = ActionSpace::tenths();
        let dims = layer_dims(
            AgentState::feature_len(cfg.max_targets, cfg.omit_agent_id),
            actions.len(),
        );
        let net = QNet::new(&dims, &mut stream(cfg.seed, Stream::NetworkInit));
        let optimizer = match cfg.optimizer {
            OptimizerKind::Sgd => Optimizer::sgd(cfg.learning_rate),
            OptimizerKind::Adam => Optimizer::adam(cfg.learning_rate),
        };
        Ok(Self {
            env: Environment::new(cfg, scenario, Phase::Training, cfg.seed)?,
            actions,
            target: net.clone(),
            net,
            optimizer,
            buffer: ReplayBuffer::new(cfg.buffer_capacity),
            dual: DualState {
                lambda: cfg.lambda0,
                alpha: cfg.alpha,
            },
            lambda_prev: cfg.lambda0,
            train_steps: 0,
            explore_rng: stream(cfg.seed, Stream::Exploration),
            replay_rng: stream(cfg.seed, Stream::Replay),
            cfg: cfg.clone(),
        })
    }

    pub fn net(&self) -> &QNet {
        &self.net
    }

    pub fn dual(&self) -> DualState {
        self.dual
    }

    pub fn env(&self) -> &Environment {
        &self.env
    }

    pub fn buffer(&self) -> &ReplayBuffer {
        &self.buffer
    }

    pub fn train_steps(&self) -> u64 {
        self.train_steps
    }

    /// One slot with ε-greedy actions from the shared network.
    pub fn step(&mut self) -> Result<SlotRecord> {
        self.advance(None)
    }

    /// One slot whose actions come from `policy(agent, state)` instead of the
    /// network; everything else, learning included, proceeds as usual.
    pub fn step_forced(&mut self, policy: &mut ForcedPolicy<'_>) -> Result<SlotRecord> {
        self.advance(Some(policy))
    }

    fn advance(&mut self, mut forced: Option<&mut ForcedPolicy<'_>>) -> Result<SlotRecord> {
        let cfg = &self.cfg;
        let (var_ref, lambda_ref) = (cfg.feature_var_ref, cfg.feature_lambda_ref);
        let live = self.env.live_indices();
        let snapshot = self.env.snapshot().clone();
        let mut fractions = vec![0.0; self.env.n_slots()];
        let mut decisions = Vec::with_capacity(live.len());
        for &i in &live {
            let state = build_state(&snapshot, self.lambda_prev, i, cfg.omit_agent_id)?;
            let input = state.encode(var_ref, lambda_ref);
            let action = match forced.as_mut() {
                Some(policy) => policy(i, &state),
                None => select_action(&self.net, &input, cfg.epsilon, &mut self.explore_rng)?,
            };
            if action >= self.actions.len() {
                return Err(IsacError::IndexOutOfRange {
                    index: action,
                    len: self.actions.len(),
                });
            }
            fractions[i] = self.actions.level(action);
            decisions.push((i, input, action));
        }

        let lambda = self.dual.lambda;
        let outcome = self.env.step(&fractions)?;
        let reward = lagrangian_reward(outcome.reward_rate, lambda, outcome.dwell_sum, cfg.t0);
        let next = self.env.snapshot();
        for (i, state, action) in decisions {
            let next_state = build_state(next, lambda, i, cfg.omit_agent_id)?.encode(var_ref, lambda_ref);
            self.buffer.push(Experience {
                state,
                action,
                reward: reward / cfg.reward_scale,
                next_state,
            });
        }

        if self.buffer.len() >= cfg.batch_size {
            for _ in 0..live.len() {
                let batch = self.buffer.sample_batch(cfg.batch_size, &mut self.replay_rng)?;
                self.net.train_step(&self.target, &batch, cfg.gamma, &mut self.optimizer)?;
                self.train_steps += 1;
                if self.train_steps.is_multiple_of(cfg.target_period) {
                    self.target.clone_from(&self.net);
                }
            }
        }

        let t0 = cfg.t0;
        let dwell_sum = outcome.dwell_sum;
        self.lambda_prev = lambda;
        self.dual = dual_update(self.dual, dwell_sum, t0);
        Ok(SlotRecord::new(outcome, reward, lambda))
    }
}

/// Result of a full training run.
#[derive(Debug, Clone)]
pub struct TrainingRun {
    pub net: QNet,
    pub dual: DualState,
    pub metrics: EpisodeMetrics,
}

/// Trains for `cfg.t_max_slots` slots on the configured random scenario.
pub fn run_training(cfg: &RunConfig) -> Result<TrainingRun> {
    let mut trainer = Trainer::new(cfg)?;
    let mut records = Vec::with_capacity(cfg.t_max_slots as usize);
    for _ in 0..cfg.t_max_slots {
        records.push(trainer.step()?);
    }
    Ok(TrainingRun {
        net: trainer.net,
        dual: trainer.dual,
        metrics: EpisodeMetrics { records },
    })
}
