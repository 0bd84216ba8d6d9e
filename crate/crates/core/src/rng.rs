//! Seeded random source.
//!
//! Draws come from ChaCha8 keyed by `master_seed` with `stream_id` selecting
//! one of 2⁶⁴ independent keystreams, so a `(master_seed, stream_id)` pair
//! reproduces the same sequence on every platform. Gaussian variates use the
//! ziggurat sampler of `rand_distr::StandardNormal`; sphere points are
//! normalised Gaussian vectors.

use rand::seq::index;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::DenseVector;

#[derive(Debug, Clone)]
pub struct RandomSource {
    master_seed: u64,
    stream_id: u64,
    rng: ChaCha8Rng,
}

impl RandomSource {
    pub fn new(master_seed: u64, stream_id: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
        rng.set_stream(stream_id);
        Self {
            master_seed,
            stream_id,
            rng,
        }
    }

    /// Source for trial `index` of a run seeded with `master_seed`.
    pub fn for_trial(master_seed: u64, index: u64) -> Self {
        Self::new(derive_seed(master_seed, index), 0)
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// Independent child source on a different stream of the same key.
    pub fn split(&self, stream_id: u64) -> Self {
        Self::new(self.master_seed, stream_id)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    /// Uniform on `[0, 1)`.
    pub fn unit(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    pub fn gaussian(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }

    pub fn gaussian_vec(&mut self, n: usize) -> Result<DenseVector> {
        if n == 0 {
            return Err(Error::invalid("gaussian vector length must be positive"));
        }
        Ok(DenseVector::from_vec_unchecked(
            (0..n).map(|_| self.gaussian()).collect(),
        ))
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> Result<f64> {
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::invalid(format!("uniform needs lo < hi, got [{lo}, {hi}]")));
        }
        Ok(lo + (hi - lo) * self.unit())
    }

    /// Uniform point on the unit sphere `S^{n−1}`.
    pub fn sphere(&mut self, n: usize) -> Result<DenseVector> {
        if n == 0 {
            return Err(Error::invalid("sphere dimension must be positive"));
        }
        loop {
            let g = self.gaussian_vec(n)?;
            // A zero Gaussian vector has probability zero; redraw if it happens.
            if let Ok(u) = g.normalize() {
                return Ok(u);
            }
        }
    }

    pub fn bernoulli(&mut self, p: f64) -> Result<bool> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::invalid(format!("bernoulli probability {p} outside [0, 1]")));
        }
        Ok(self.bernoulli_unchecked(p))
    }

    #[inline]
    pub(crate) fn bernoulli_unchecked(&mut self, p: f64) -> bool {
        self.unit() < p
    }

    /// Fair random sign.
    pub fn sign(&mut self) -> f64 {
        if self.rng.next_u32() & 1 == 0 {
            1.0
        } else {
            -1.0
        }
    }

    /// `m` distinct indices from `0..n`, uniformly without replacement,
    /// returned in ascending order.
    pub fn sample_indices(&mut self, n: usize, m: usize) -> Result<Vec<usize>> {
        if m > n {
            return Err(Error::invalid(format!("cannot choose {m} of {n} indices")));
        }
        let mut idx = index::sample(&mut self.rng, n, m).into_vec();
        idx.sort_unstable();
        Ok(idx)
    }

    /// Index drawn with probability proportional to `weights`.
    pub(crate) fn categorical(&mut self, cumulative: &[f64]) -> usize {
        let u = self.unit();
        cumulative
            .iter()
            .position(|c| u < *c)
            .unwrap_or(cumulative.len() - 1)
    }
}

/// SplitMix64 finaliser applied to a `(master, index)` pair.
pub fn derive_seed(master_seed: u64, index: u64) -> u64 {
    splitmix64(master_seed ^ splitmix64(index.wrapping_add(0x9E37_79B9_7F4A_7C15)))
}

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
