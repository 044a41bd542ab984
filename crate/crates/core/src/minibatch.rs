use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RngStream;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BatchMode {
    /// Each epoch walks a fresh permutation of `0..N`; the final batch may be short.
    #[default]
    ShuffledEpochs,
    /// Every index drawn i.i.d. uniformly.
    WithReplacement,
}

/// Endless stream of minibatch index sets.
#[derive(Clone, Debug)]
pub struct MinibatchSchedule {
    data_size: usize,
    batch_size: usize,
    mode: BatchMode,
    rng: RngStream,
    order: Vec<usize>,
    cursor: usize,
    epoch: u64,
    batch: Vec<usize>,
}

pub fn make_minibatch_schedule(
    data_size: usize,
    batch_size: usize,
    mode: BatchMode,
    rng: RngStream,
) -> Result<MinibatchSchedule> {
    MinibatchSchedule::new(data_size, batch_size, mode, rng)
}

impl MinibatchSchedule {
    pub fn new(data_size: usize, batch_size: usize, mode: BatchMode, rng: RngStream) -> Result<Self> {
        if batch_size == 0 || batch_size > data_size {
            return Err(Error::invalid(format!("batch size must lie in 1..={data_size}, got {batch_size}")));
        }
        Ok(Self {
            data_size,
            batch_size,
            mode,
            rng,
            order: (0..data_size).collect(),
            // forces a shuffle on first use
            cursor: data_size,
            epoch: 0,
            batch: Vec::with_capacity(batch_size),
        })
    }

    pub fn data_size(&self) -> usize {
        self.data_size
    }

    pub fn batch_size(&self) -> usize {
        self.batch_size
    }

    pub fn mode(&self) -> BatchMode {
        self.mode
    }

    /// Batches per epoch, `ceil(N / batch_size)`.
    pub fn batches_per_epoch(&self) -> usize {
        self.data_size.div_ceil(self.batch_size)
    }

    /// Number of completed or started epochs (shuffled mode only).
    pub fn epoch(&self) -> u64 {
        self.epoch
    }

    /// True when the next call to [`next_batch`](Self::next_batch) begins a new epoch.
    pub fn at_epoch_boundary(&self) -> bool {
        match self.mode {
            BatchMode::ShuffledEpochs => self.cursor >= self.data_size,
            BatchMode::WithReplacement => false,
        }
    }

    pub fn next_batch(&mut self) -> &[usize] {
        self.batch.clear();
        match self.mode {
            BatchMode::ShuffledEpochs => {
                if self.cursor >= self.data_size {
                    self.order.shuffle(&mut self.rng);
                    self.cursor = 0;
                    self.epoch += 1;
                }
                let end = (self.cursor + self.batch_size).min(self.data_size);
                self.batch.extend_from_slice(&self.order[self.cursor..end]);
                self.cursor = end;
            }
            BatchMode::WithReplacement => {
                for _ in 0..self.batch_size {
                    let i = self.rng.index(self.data_size);
                    self.batch.push(i);
                }
            }
        }
        &self.batch
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn schedule(n: usize, b: usize, mode: BatchMode) -> MinibatchSchedule {
        make_minibatch_schedule(n, b, mode, RngStream::new(5, 0)).unwrap()
    }

    #[test]
    fn rejects_bad_batch_sizes() {
        assert!(MinibatchSchedule::new(4, 0, BatchMode::default(), RngStream::new(0, 0)).is_err());
        assert!(MinibatchSchedule::new(4, 5, BatchMode::default(), RngStream::new(0, 0)).is_err());
    }

    #[test]
    fn full_batch_is_permutation() {
        let mut s = schedule(4, 4, BatchMode::ShuffledEpochs);
        for _ in 0..20 {
            let mut b = s.next_batch().to_vec();
            b.sort_unstable();
            assert_eq!(b, vec![0, 1, 2, 3]);
        }
    }

    #[test]
    fn a9a_sized_epoch() {
        let mut s = schedule(32561, 10, BatchMode::ShuffledEpochs);
        assert_eq!(s.batches_per_epoch(), 3257);
        let mut seen = vec![0u8; 32561];
        let mut sizes = Vec::new();
        for _ in 0..3257 {
            let b = s.next_batch();
            sizes.push(b.len());
            for &i in b {
                seen[i] += 1;
            }
        }
        assert!(seen.iter().all(|&c| c == 1));
        assert!(sizes[..3256].iter().all(|&l| l == 10));
        assert_eq!(sizes[3256], 1);
        assert!(s.at_epoch_boundary());
        assert_eq!(s.epoch(), 1);
    }

    #[test]
    fn with_replacement_is_uniform() {
        let mut s = schedule(5, 5, BatchMode::WithReplacement);
        let mut counts = [0usize; 5];
        let batches = 100_000;
        for _ in 0..batches {
            let b = s.next_batch();
            assert_eq!(b.len(), 5);
            for &i in b {
                counts[i] += 1;
            }
        }
        let total = (batches * 5) as f64;
        for c in counts {
            let f = c as f64 / total;
            assert!((f - 0.2).abs() < 0.01, "frequency {f}");
        }
    }

    #[test]
    fn same_seed_same_batches() {
        let mut a = schedule(50, 7, BatchMode::ShuffledEpochs);
        let mut b = schedule(50, 7, BatchMode::ShuffledEpochs);
        for _ in 0..30 {
            assert_eq!(a.next_batch(), b.next_batch());
        }
    }
}
