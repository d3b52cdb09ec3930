use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub input: Vec<f64>,
    pub target: [f64; 2],
}

/// Bounded FIFO of transitions. Once full, each push overwrites the oldest
/// entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplayBuffer {
    capacity: usize,
    items: Vec<Transition>,
    /// Slot that the next push writes once the buffer is full.
    cursor: usize,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::param("capacity", "must be positive"));
        }
        Ok(ReplayBuffer {
            capacity,
            items: Vec::new(),
            cursor: 0,
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

    pub fn push(&mut self, t: Transition) {
        if self.items.len() < self.capacity {
            self.items.push(t);
        } else {
            self.items[self.cursor] = t;
            self.cursor = (self.cursor + 1) % self.capacity;
        }
    }

    pub fn get(&self, i: usize) -> Option<&Transition> {
        self.items.get(i)
    }

    /// Transitions from oldest to newest.
    pub fn iter_oldest_first(&self) -> impl Iterator<Item = &Transition> {
        let (newer, older) = self.items.split_at(self.cursor);
        older.iter().chain(newer)
    }

    /// `n` distinct indices drawn uniformly, or `None` when fewer than `n`
    /// transitions are stored.
    pub fn sample_indices<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Option<Vec<usize>> {
        if n == 0 || n > self.items.len() {
            return None;
        }
        Some(index::sample(rng, self.items.len(), n).into_vec())
    }

    pub fn validate(&self, input_dim: usize) -> Result<()> {
        if self.capacity == 0 || self.items.len() > self.capacity {
            return Err(Error::param("capacity", "buffer holds more than its capacity"));
        }
        let full = self.items.len() == self.capacity;
        if (!full && self.cursor != 0) || (full && self.cursor >= self.capacity) {
            return Err(Error::param("cursor", "inconsistent with buffer length"));
        }
        for t in &self.items {
            if t.input.len() != input_dim {
                return Err(Error::Shape {
                    expected: input_dim,
                    got: t.input.len(),
                });
            }
            if !t.input.iter().chain(&t.target).all(|v| v.is_finite()) {
                return Err(Error::param("transition", "non-finite value"));
            }
        }
        Ok(())
    }
}
