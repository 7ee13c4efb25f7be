//! Fixed-capacity transition store with FIFO eviction and uniform
//! sampling.

use crate::env::Transition;
use rand::Rng;

pub struct ReplayMemory {
    capacity: usize,
    buffer: Vec<Transition>,
    cursor: usize,
}

impl ReplayMemory {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0);
        Self {
            capacity,
            buffer: Vec::with_capacity(capacity),
            cursor: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.buffer.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buffer.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    /// Append, overwriting the oldest slot once full.
    pub fn push(&mut self, t: Transition) {
        if self.buffer.len() < self.capacity {
            self.buffer.push(t);
        } else {
            self.buffer[self.cursor] = t;
        }
        self.cursor = (self.cursor + 1) % self.capacity;
    }

    pub fn get(&self, idx: usize) -> &Transition {
        &self.buffer[idx]
    }

    /// `n` independent uniform draws (with replacement).
    pub fn sample_indices(&self, n: usize, rng: &mut impl Rng) -> Vec<usize> {
        assert!(!self.buffer.is_empty());
        (0..n).map(|_| rng.gen_range(0..self.buffer.len())).collect()
    }
}
