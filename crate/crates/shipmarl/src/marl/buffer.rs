//! Joint-transition replay buffer with FIFO eviction.

use rand::Rng;
use std::collections::HashSet;

/// One joint transition. Observations and actions are the concatenation
/// over all agents, in agent order; rewards stay per-agent.
#[derive(Clone, Debug, PartialEq)]
pub struct Experience {
    pub s: Vec<f64>,
    pub a: Vec<f64>,
    pub r: Vec<f64>,
    pub s2: Vec<f64>,
    /// True terminal (goals reached / dynamics failure), not a time-limit
    /// cutoff; controls bootstrap masking.
    pub terminal: bool,
}

impl Experience {
    pub fn is_finite(&self) -> bool {
        self.s
            .iter()
            .chain(&self.a)
            .chain(&self.r)
            .chain(&self.s2)
            .all(|v| v.is_finite())
    }
}

/// Ring storage: when full, each push evicts the oldest item.
#[derive(Clone, Debug)]
pub struct ReplayBuffer {
    data: Vec<Experience>,
    capacity: usize,
    head: usize,
    len: usize,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "replay buffer capacity must be positive");
        Self {
            data: Vec::new(),
            capacity,
            head: 0,
            len: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    /// Stores a transition; non-finite values are refused.
    pub fn push(&mut self, exp: Experience) -> bool {
        if !exp.is_finite() {
            log::warn!("replay buffer: dropping non-finite experience");
            return false;
        }
        if self.len < self.capacity {
            self.data.push(exp);
            self.len += 1;
        } else {
            self.data[self.head] = exp;
            self.head = (self.head + 1) % self.capacity;
        }
        true
    }

    /// Logical indexing, oldest first.
    pub fn get(&self, idx: usize) -> &Experience {
        assert!(idx < self.len);
        &self.data[(self.head + idx) % self.len.max(1)]
    }

    /// Uniform sample of distinct indices (Floyd's algorithm), resolved
    /// to experiences.
    pub fn sample_indices<R: Rng>(&self, batch: usize, rng: &mut R) -> Vec<usize> {
        let n = self.len;
        assert!(batch <= n, "batch {batch} larger than buffer {n}");
        let mut chosen = HashSet::with_capacity(batch);
        let mut out = Vec::with_capacity(batch);
        for i in (n - batch)..n {
            let j = rng.random_range(0..=i);
            if chosen.insert(j) {
                out.push(j);
            } else {
                chosen.insert(i);
                out.push(i);
            }
        }
        out
    }

    pub fn sample<'a, R: Rng>(&'a self, batch: usize, rng: &mut R) -> Vec<&'a Experience> {
        self.sample_indices(batch, rng)
            .into_iter()
            .map(|i| self.get(i))
            .collect()
    }
}
