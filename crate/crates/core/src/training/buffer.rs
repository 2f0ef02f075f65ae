use std::collections::VecDeque;

use rand::Rng;

use super::Transition;

/// Bounded FIFO of transitions; the oldest entry is evicted first.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    capacity: usize,
    items: VecDeque<(u64, Transition)>,
    next_seq: u64,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "replay capacity must be positive");
        ReplayBuffer { capacity, items: VecDeque::with_capacity(capacity.min(1 << 20)), next_seq: 0 }
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

    /// Transitions ever pushed.
    pub fn total_pushed(&self) -> u64 {
        self.next_seq
    }

    /// Insert and return the sequence number given to `t`.
    pub fn push(&mut self, t: Transition) -> u64 {
        if self.items.len() == self.capacity {
            self.items.pop_front();
        }
        let seq = self.next_seq;
        self.next_seq += 1;
        self.items.push_back((seq, t));
        seq
    }

    /// Sequence numbers currently held, oldest first.
    pub fn sequence_numbers(&self) -> impl Iterator<Item = u64> + '_ {
        self.items.iter().map(|(s, _)| *s)
    }

    pub fn get(&self, i: usize) -> Option<&Transition> {
        self.items.get(i).map(|(_, t)| t)
    }

    /// `n` entries drawn uniformly with replacement.
    pub fn sample<'a, R: Rng>(&'a self, n: usize, rng: &mut R) -> Vec<&'a Transition> {
        if self.items.is_empty() {
            return Vec::new();
        }
        (0..n).map(|_| &self.items[rng.gen_range(0..self.items.len())].1).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn t(v: u64) -> Transition {
        Transition { param_version: v, ..Transition::default() }
    }

    #[test]
    fn evicts_oldest_first() {
        let mut b = ReplayBuffer::new(3);
        for v in 0..5 {
            b.push(t(v));
        }
        assert_eq!(b.len(), 3);
        assert_eq!(b.sequence_numbers().collect::<Vec<_>>(), vec![2, 3, 4]);
        assert_eq!(b.get(0).unwrap().param_version, 2);
        assert_eq!(b.total_pushed(), 5);
    }

    #[test]
    fn sampling_draws_from_the_buffer() {
        let mut b = ReplayBuffer::new(10);
        let mut rng = rand::thread_rng();
        assert!(b.sample(4, &mut rng).is_empty());
        for v in 0..10 {
            b.push(t(v));
        }
        let s = b.sample(100, &mut rng);
        assert_eq!(s.len(), 100);
        assert!(s.iter().all(|x| x.param_version < 10));
    }

    proptest! {
        #[test]
        fn never_exceeds_capacity(cap in 1usize..50, pushes in 0usize..200) {
            let mut b = ReplayBuffer::new(cap);
            for v in 0..pushes {
                b.push(t(v as u64));
                prop_assert!(b.len() <= cap);
            }
            let seqs: Vec<u64> = b.sequence_numbers().collect();
            let start = pushes.saturating_sub(cap) as u64;
            prop_assert_eq!(seqs, (start..pushes as u64).collect::<Vec<_>>());
        }
    }
}
