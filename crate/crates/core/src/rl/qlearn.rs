use std::collections::BTreeMap;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::space::{Action, StateSpace, NUM_ACTIONS};
use crate::error::{Error, Result};
use crate::seed::{self, Rng};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RlConfig {
    pub alpha: f64,
    pub gamma: f64,
    pub epsilon_start: f64,
    pub epsilon_decay: f64,
    pub epsilon_floor: f64,
    pub episodes: usize,
    pub steps_per_episode: usize,
    pub seed: u64,
}

impl Default for RlConfig {
    fn default() -> Self {
        RlConfig {
            alpha: 0.1,
            gamma: 0.9,
            epsilon_start: 1.0,
            epsilon_decay: 0.97,
            epsilon_floor: 0.05,
            episodes: 200,
            steps_per_episode: 50,
            seed: 42,
        }
    }
}

impl RlConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::ConfigInvalid(m));
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return bad(format!("alpha {} outside (0, 1]", self.alpha));
        }
        if !(self.gamma >= 0.0 && self.gamma < 1.0) {
            return bad(format!("gamma {} outside [0, 1)", self.gamma));
        }
        for (name, v) in [
            ("epsilon_start", self.epsilon_start),
            ("epsilon_decay", self.epsilon_decay),
            ("epsilon_floor", self.epsilon_floor),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return bad(format!("{name} {v} outside [0, 1]"));
            }
        }
        Ok(())
    }

    /// Exploration rate for a 0-based episode index.
    pub fn epsilon_at(&self, episode: usize) -> f64 {
        let decayed = self.epsilon_start * self.epsilon_decay.powi(episode.min(i32::MAX as usize) as i32);
        decayed.max(self.epsilon_floor)
    }
}

/// Dense Q(s, a) table over state indices, zero-initialized.
#[derive(Debug, Clone, PartialEq)]
pub struct QTable {
    values: Vec<[f64; NUM_ACTIONS]>,
}

impl QTable {
    pub fn new(num_states: usize) -> Self {
        QTable {
            values: vec![[0.0; NUM_ACTIONS]; num_states],
        }
    }

    pub fn num_states(&self) -> usize {
        self.values.len()
    }

    pub fn get(&self, state: usize, action: Action) -> f64 {
        self.values[state][action.index()]
    }

    pub fn set(&mut self, state: usize, action: Action, value: f64) {
        self.values[state][action.index()] = value;
    }

    pub fn row(&self, state: usize) -> &[f64; NUM_ACTIONS] {
        &self.values[state]
    }

    pub fn max_value(&self, state: usize) -> f64 {
        self.values[state].iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// First action attaining the row maximum (Retain, SetAllow, SetDeny, SetAsk order).
    pub fn greedy(&self, state: usize) -> Action {
        let row = &self.values[state];
        let mut best = 0;
        for i in 1..NUM_ACTIONS {
            if row[i] > row[best] {
                best = i;
            }
        }
        Action::from_index(best)
    }

    pub fn max_abs(&self) -> f64 {
        self.values
            .iter()
            .flat_map(|r| r.iter())
            .fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().flat_map(|r| r.iter()).all(|v| v.is_finite())
    }

    pub fn to_document(&self, space: &StateSpace) -> QTableDocument {
        let q = (0..self.num_states())
            .map(|i| (space.key(&space.state(i)), self.values[i]))
            .collect();
        QTableDocument {
            format_version: QTABLE_FORMAT_VERSION,
            contexts: space.contexts.clone(),
            permissions: space.permissions.clone(),
            q,
        }
    }

    pub fn from_document(doc: &QTableDocument) -> Result<(StateSpace, QTable)> {
        if doc.format_version != QTABLE_FORMAT_VERSION {
            return Err(Error::Model(format!("unsupported q-table version {}", doc.format_version)));
        }
        let space = StateSpace {
            contexts: doc.contexts.clone(),
            permissions: doc.permissions.clone(),
        };
        let mut table = QTable::new(space.len());
        if doc.q.len() != space.len() {
            return Err(Error::Model(format!("{} rows for {} states", doc.q.len(), space.len())));
        }
        for (key, row) in &doc.q {
            let s = space.parse_key(key)?;
            table.values[space.index(&s)] = *row;
        }
        Ok((space, table))
    }
}

pub const QTABLE_FORMAT_VERSION: u32 = 1;

/// JSON form: state key `context|permission|setting|bucket` to the four action values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QTableDocument {
    pub format_version: u32,
    pub contexts: Vec<String>,
    pub permissions: Vec<String>,
    pub q: BTreeMap<String, [f64; NUM_ACTIONS]>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition {
    pub state: usize,
    pub action: Action,
    pub reward: f64,
    pub next_state: usize,
}

/// Q(s,a) <- Q(s,a) + alpha * (r + gamma * max_a' Q(s',a') - Q(s,a))
pub fn q_update(q: &mut QTable, t: &Transition, alpha: f64, gamma: f64) {
    let current = q.get(t.state, t.action);
    let target = t.reward + gamma * q.max_value(t.next_state);
    q.set(t.state, t.action, current + alpha * (target - current));
}

pub fn epsilon_greedy(q: &QTable, state: usize, epsilon: f64, rng: &mut Rng) -> Action {
    if epsilon > 0.0 && rng.random::<f64>() < epsilon {
        Action::from_index(rng.random_range(0..NUM_ACTIONS))
    } else {
        q.greedy(state)
    }
}

/// An episodic environment over dense state indices.
pub trait Environment {
    fn num_states(&self) -> usize;

    /// Start state for an episode.
    fn reset(&mut self, rng: &mut Rng) -> usize;

    /// Apply `action` in `state`; returns (next state, reward).
    fn step(&mut self, state: usize, action: Action, rng: &mut Rng) -> (usize, f64);
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub episode: usize,
    pub reward: f64,
    pub steps: usize,
    pub epsilon: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EpisodeLog {
    pub episodes: Vec<EpisodeRecord>,
    pub cumulative_reward: Vec<f64>,
}

impl EpisodeLog {
    pub fn len(&self) -> usize {
        self.episodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.episodes.is_empty()
    }

    pub fn push(&mut self, record: EpisodeRecord) {
        let prev = self.cumulative_reward.last().copied().unwrap_or(0.0);
        self.cumulative_reward.push(prev + record.reward);
        self.episodes.push(record);
    }

    pub fn rewards(&self) -> Vec<f64> {
        self.episodes.iter().map(|e| e.reward).collect()
    }

    /// `episode,reward,cumulative_reward,epsilon`, episodes numbered from 1.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("episode,reward,cumulative_reward,epsilon\n");
        for (e, c) in self.episodes.iter().zip(&self.cumulative_reward) {
            out.push_str(&format!(
                "{},{},{},{}\n",
                e.episode + 1,
                crate::data::format_number(e.reward),
                crate::data::format_number(*c),
                crate::data::format_number(e.epsilon)
            ));
        }
        out
    }
}

/// Tabular Q-learning with epsilon-greedy exploration. Episode `e` draws all of
/// its randomness from the stream `(cfg.seed, "train_q", e)`.
pub fn train_q<E: Environment + ?Sized>(env: &mut E, cfg: &RlConfig) -> Result<(QTable, EpisodeLog)> {
    cfg.validate()?;
    let mut q = QTable::new(env.num_states());
    let mut log = EpisodeLog::default();
    for episode in 0..cfg.episodes {
        let mut rng = seed::stream(cfg.seed, "train_q", &[episode as u64]);
        let epsilon = cfg.epsilon_at(episode);
        let mut state = env.reset(&mut rng);
        let mut total = 0.0;
        for _ in 0..cfg.steps_per_episode {
            let action = epsilon_greedy(&q, state, epsilon, &mut rng);
            let (next_state, reward) = env.step(state, action, &mut rng);
            q_update(
                &mut q,
                &Transition {
                    state,
                    action,
                    reward,
                    next_state,
                },
                cfg.alpha,
                cfg.gamma,
            );
            total += reward;
            state = next_state;
        }
        log.push(EpisodeRecord {
            episode,
            reward: total,
            steps: cfg.steps_per_episode,
            epsilon,
        });
    }
    if !q.is_finite() {
        return Err(Error::Invariant("non-finite Q value after training".into()));
    }
    Ok((q, log))
}
