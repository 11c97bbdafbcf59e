use std::collections::VecDeque;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lidar::AgentState;
use crate::world::N_ACTIONS;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub state: AgentState,
    pub action: usize,
    pub reward: f64,
    pub next_state: AgentState,
    pub done: bool,
}

impl Transition {
    pub fn new(state: AgentState, action: usize, reward: f64, next_state: AgentState, done: bool) -> Result<Self> {
        if action >= N_ACTIONS {
            return Err(Error::InvalidAction(action));
        }
        Ok(Self {
            state,
            action,
            reward,
            next_state,
            done,
        })
    }
}

pub const DEFAULT_CAPACITY: usize = 1_000_000;

/// FIFO experience store with uniform sampling. Memory grows with use; the
/// capacity is only an upper bound.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    capacity: usize,
    items: VecDeque<Transition>,
    rng: ChaCha8Rng,
}

impl ReplayBuffer {
    pub fn new(capacity: usize, seed: u64) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::config("memory_size", "must be positive"));
        }
        Ok(Self {
            capacity,
            items: VecDeque::new(),
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// Append, evicting the oldest entry when full.
    pub fn push(&mut self, t: Transition) {
        if self.items.len() == self.capacity {
            self.items.pop_front();
        }
        self.items.push_back(t);
    }

    /// Entry `i`, oldest first.
    pub fn get(&self, i: usize) -> Option<&Transition> {
        self.items.get(i)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Transition> {
        self.items.iter()
    }

    /// `n` distinct indices drawn uniformly.
    pub fn sample_indices(&mut self, n: usize) -> Result<Vec<usize>> {
        if n == 0 {
            return Err(Error::EmptyBatch);
        }
        if n > self.items.len() {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: self.items.len(),
            });
        }
        Ok(rand::seq::index::sample(&mut self.rng, self.items.len(), n).into_vec())
    }

    pub fn sample(&mut self, n: usize) -> Result<Vec<Transition>> {
        Ok(self.sample_indices(n)?.into_iter().map(|i| self.items[i]).collect())
    }
}
