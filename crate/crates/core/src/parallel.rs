//! Deterministic parallel Monte Carlo.
//!
//! A sample budget is cut into fixed-size partitions. Partition `i` draws from
//! the ChaCha stream `(seed, i)`, so its samples do not depend on which worker
//! runs it, and partial sums are merged in partition order. Results are
//! therefore bit-identical for any thread count.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// Samples per partition.
pub const PARTITION_SIZE: usize = 4096;

/// Environment variable capping the worker count (`0` = automatic).
pub const THREADS_ENV: &str = "SHELLQUAD_THREADS";

/// RNG for partition `index` of a run seeded with `seed`.
pub fn stream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Running sums of a complex-valued estimator.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Accumulator {
    pub count: u64,
    pub sum: Complex64,
    /// Sum of `|x|^2`.
    pub sum_sq: f64,
}

impl Accumulator {
    #[inline]
    pub fn push(&mut self, x: Complex64) {
        self.count += 1;
        self.sum += x;
        self.sum_sq += x.norm_sqr();
    }

    pub fn merge(mut self, other: &Accumulator) -> Self {
        self.count += other.count;
        self.sum += other.sum;
        self.sum_sq += other.sum_sq;
        self
    }

    pub fn mean(&self) -> Complex64 {
        if self.count == 0 {
            Complex64::new(0.0, 0.0)
        } else {
            self.sum / self.count as f64
        }
    }

    /// Standard error of the mean (real and imaginary variances combined).
    pub fn stderr(&self) -> f64 {
        if self.count < 2 {
            return 0.0;
        }
        let n = self.count as f64;
        let mean = self.mean();
        let var = ((self.sum_sq - n * mean.norm_sqr()) / (n - 1.0)).max(0.0);
        (var / n).sqrt()
    }
}

/// Partial result of one partition, merged associatively in partition order.
pub trait Partial: Default + Send {
    fn merge(self, other: &Self) -> Self;
}

impl Partial for Accumulator {
    fn merge(self, other: &Self) -> Self {
        Accumulator::merge(self, other)
    }
}

impl<const N: usize> Partial for [Accumulator; N]
where
    [Accumulator; N]: Default,
{
    fn merge(mut self, other: &Self) -> Self {
        for (a, b) in self.iter_mut().zip(other) {
            *a = a.merge(b);
        }
        self
    }
}

/// Runs `body(rng, count, partial)` over every partition of `budget` samples
/// and merges the partials in partition order.
pub fn run<A, F>(budget: usize, seed: u64, body: F) -> A
where
    A: Partial,
    F: Fn(&mut ChaCha8Rng, usize, &mut A) + Sync,
{
    let partitions = budget.div_ceil(PARTITION_SIZE);
    let partials: Vec<A> = (0..partitions)
        .into_par_iter()
        .map(|i| {
            let count = PARTITION_SIZE.min(budget - i * PARTITION_SIZE);
            let mut rng = stream(seed, i as u64);
            let mut acc = A::default();
            body(&mut rng, count, &mut acc);
            acc
        })
        .collect();
    partials.iter().fold(A::default(), |a, b| a.merge(b))
}

/// Derives an independent seed for sub-run `index` of a run seeded with `seed`.
pub fn subseed(seed: u64, index: u64) -> u64 {
    // splitmix64 finalizer
    let mut z = seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Worker count requested through [`THREADS_ENV`], if any.
pub fn threads_from_env() -> Option<usize> {
    std::env::var(THREADS_ENV).ok()?.trim().parse().ok().filter(|&n| n > 0)
}
