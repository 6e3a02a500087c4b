use ndarray::{Array1, Array2};
use rand::Rng;

#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub state: Vec<f64>,
    pub action: Vec<f64>,
    pub reward: f64,
    pub next_state: Vec<f64>,
}

/// A sampled minibatch laid out row-wise.
#[derive(Debug, Clone, PartialEq)]
pub struct Batch {
    pub states: Array2<f64>,
    pub actions: Array2<f64>,
    pub rewards: Array1<f64>,
    pub next_states: Array2<f64>,
}

/// Ring buffer that overwrites the oldest transition once full.
#[derive(Debug, Clone)]
pub struct ReplayMemory {
    capacity: usize,
    items: Vec<Transition>,
    next: usize,
}

impl ReplayMemory {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "replay capacity must be positive");
        Self {
            capacity,
            items: Vec::with_capacity(capacity.min(1 << 16)),
            next: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn push(&mut self, t: Transition) {
        if self.items.len() < self.capacity {
            self.items.push(t);
        } else {
            self.items[self.next] = t;
        }
        self.next = (self.next + 1) % self.capacity;
    }

    /// Distinct uniformly chosen indices.
    pub fn sample_indices<R: Rng + ?Sized>(&self, batch: usize, rng: &mut R) -> Vec<usize> {
        let n = batch.min(self.items.len());
        rand::seq::index::sample(rng, self.items.len(), n).into_vec()
    }

    pub fn sample<R: Rng + ?Sized>(&self, batch: usize, rng: &mut R) -> Batch {
        let idx = self.sample_indices(batch, rng);
        let first = &self.items[idx[0]];
        let (sd, ad) = (first.state.len(), first.action.len());
        let n = idx.len();
        let mut b = Batch {
            states: Array2::zeros((n, sd)),
            actions: Array2::zeros((n, ad)),
            rewards: Array1::zeros(n),
            next_states: Array2::zeros((n, sd)),
        };
        for (row, &i) in idx.iter().enumerate() {
            let t = &self.items[i];
            b.states.row_mut(row).assign(&Array1::from(t.state.clone()));
            b.actions.row_mut(row).assign(&Array1::from(t.action.clone()));
            b.rewards[row] = t.reward;
            b.next_states.row_mut(row).assign(&Array1::from(t.next_state.clone()));
        }
        b
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn t(r: f64) -> Transition {
        Transition {
            state: vec![r],
            action: vec![r],
            reward: r,
            next_state: vec![r],
        }
    }

    #[test]
    fn ring_overwrites_oldest() {
        let mut m = ReplayMemory::new(3);
        for i in 0..5 {
            m.push(t(i as f64));
        }
        assert_eq!(m.len(), 3);
        let mut rewards: Vec<f64> = m.items.iter().map(|t| t.reward).collect();
        rewards.sort_by(f64::total_cmp);
        assert_eq!(rewards, vec![2.0, 3.0, 4.0]);
    }

    #[test]
    fn batch_indices_are_distinct() {
        let mut m = ReplayMemory::new(100);
        for i in 0..50 {
            m.push(t(i as f64));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..100 {
            let mut idx = m.sample_indices(32, &mut rng);
            idx.sort_unstable();
            idx.dedup();
            assert_eq!(idx.len(), 32);
        }
        assert_eq!(m.sample(32, &mut rng).rewards.len(), 32);
    }
}
