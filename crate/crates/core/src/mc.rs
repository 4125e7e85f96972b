//! Replication-parallel Monte Carlo with a deterministic reduction.
//!
//! Replications `0..samples` are cut into fixed chunks of [`CHUNK`]
//! replications. Chunks run in parallel on the current rayon pool; each chunk
//! accumulates its replications in index order, and chunk results are merged
//! by a fixed-shape pairwise tree. The chunking does not depend on the thread
//! count, so the result is bit-identical for any pool size.

use rayon::prelude::*;

use crate::error::Result;

pub const CHUNK: u64 = 2048;

pub trait Merge: Sized {
    fn merge(self, other: Self) -> Self;
}

/// Runs `body(replication, scratch, acc)` for every replication.
pub fn run_replications<A, S, IA, IS, F>(samples: u64, init: IA, scratch: IS, body: F) -> Result<A>
where
    A: Merge + Send,
    IA: Fn() -> A + Sync,
    IS: Fn() -> S + Sync,
    F: Fn(u64, &mut S, &mut A) -> Result<()> + Sync,
{
    let chunks = samples.div_ceil(CHUNK);
    let parts = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut acc = init();
            let mut s = scratch();
            let end = ((c + 1) * CHUNK).min(samples);
            for rep in c * CHUNK..end {
                body(rep, &mut s, &mut acc)?;
            }
            Ok(acc)
        })
        .collect::<Vec<Result<A>>>()
        .into_iter()
        .collect::<Result<Vec<A>>>()?;
    Ok(pairwise(parts).unwrap_or_else(init))
}

/// Fixed-shape pairwise reduction: neighbours are merged level by level.
pub fn pairwise<A: Merge>(mut level: Vec<A>) -> Option<A> {
    while level.len() > 1 {
        let mut next = Vec::with_capacity(level.len().div_ceil(2));
        let mut it = level.into_iter();
        while let Some(a) = it.next() {
            next.push(match it.next() {
                Some(b) => a.merge(b),
                None => a,
            });
        }
        level = next;
    }
    level.pop()
}

/// Per-metric running sums over replications.
#[derive(Debug, Clone, PartialEq)]
pub struct Tally {
    pub reps: u64,
    pub sum: Vec<f64>,
    pub sumsq: Vec<f64>,
    pub hits: Vec<u64>,
}

impl Tally {
    pub fn new(metrics: usize) -> Self {
        Self {
            reps: 0,
            sum: vec![0.0; metrics],
            sumsq: vec![0.0; metrics],
            hits: vec![0; metrics],
        }
    }

    #[inline]
    pub fn add(&mut self, metric: usize, value: f64) {
        self.sum[metric] += value;
        self.sumsq[metric] += value * value;
        if value != 0.0 {
            self.hits[metric] += 1;
        }
    }

    #[inline]
    pub fn indicator(&mut self, metric: usize, hit: bool) {
        if hit {
            self.sum[metric] += 1.0;
            self.sumsq[metric] += 1.0;
            self.hits[metric] += 1;
        }
    }

    pub fn mean(&self, metric: usize) -> f64 {
        if self.reps == 0 {
            return f64::NAN;
        }
        self.sum[metric] / self.reps as f64
    }

    /// Sample standard deviation divided by sqrt(reps).
    pub fn stderr(&self, metric: usize) -> f64 {
        let n = self.reps as f64;
        if self.reps < 2 {
            return f64::NAN;
        }
        let mean = self.sum[metric] / n;
        let var = ((self.sumsq[metric] - n * mean * mean) / (n - 1.0)).max(0.0);
        (var / n).sqrt()
    }
}

impl Merge for Tally {
    fn merge(mut self, other: Self) -> Self {
        self.reps += other.reps;
        for (a, b) in self.sum.iter_mut().zip(&other.sum) {
            *a += b;
        }
        for (a, b) in self.sumsq.iter_mut().zip(&other.sumsq) {
            *a += b;
        }
        for (a, b) in self.hits.iter_mut().zip(&other.hits) {
            *a += b;
        }
        self
    }
}

impl<T> Merge for Vec<T> {
    fn merge(mut self, mut other: Self) -> Self {
        self.append(&mut other);
        self
    }
}

impl Merge for () {
    fn merge(self, _: Self) -> Self {}
}

impl<A: Merge, B: Merge> Merge for (A, B) {
    fn merge(self, other: Self) -> Self {
        (self.0.merge(other.0), self.1.merge(other.1))
    }
}

/// Elementwise-summed event counters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Counts(pub Vec<u64>);

impl Counts {
    pub fn new(len: usize) -> Self {
        Counts(vec![0; len])
    }
}

impl Merge for Counts {
    fn merge(mut self, other: Self) -> Self {
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a += b;
        }
        self
    }
}

impl Merge for u64 {
    fn merge(self, other: Self) -> Self {
        self + other
    }
}
