//! Noise models and their `(σ, B)` parameters.
//!
//! `σ` caps the per-entry standard deviation and `B` caps the entry
//! magnitude (or its tail). The ratio `B / (σ√(n/ln³n))` is below one in
//! the regime where the concentration bounds are informative.

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::rng::RandomSource;

/// Multiplier in `B = C_B·σ·√(ln n)` for Gaussian noise.
pub const GAUSSIAN_B_CONSTANT: f64 = 5.0;

/// Default range of the per-entry Gaussian standard deviations.
pub const GAUSSIAN_SIGMA_RANGE: (f64, f64) = (0.7, 1.0);

const PROB_SUM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseParams {
    pub sigma: f64,
    pub b: f64,
    /// `B / (σ√(n/ln³n))`; NaN when `n < 3`.
    pub regime_ratio: f64,
}

impl NoiseParams {
    pub fn new(sigma: f64, b: f64, n: usize) -> Self {
        let regime_ratio = if n >= 3 {
            regime_ratio(sigma, b, n as f64)
        } else {
            f64::NAN
        };
        Self {
            sigma,
            b,
            regime_ratio,
        }
    }
}

/// Returns `B/(σ√(n/ln³n))`; values below one satisfy the growth condition.
pub fn regime_check(params: &NoiseParams, n: usize) -> Result<f64> {
    if n < 3 {
        return Err(Error::invalid("regime check needs n >= 3"));
    }
    Ok(regime_ratio(params.sigma, params.b, n as f64))
}

fn regime_ratio(sigma: f64, b: f64, n: f64) -> f64 {
    if b == 0.0 {
        return 0.0;
    }
    let ln = n.ln();
    b / (sigma * (n / (ln * ln * ln)).sqrt())
}

/// Finite zero-mean distribution `{(value, prob)}`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteDist {
    support: Vec<(f64, f64)>,
    cumulative: Vec<f64>,
    sigma2: f64,
    b: f64,
}

impl DiscreteDist {
    pub fn new(support: Vec<(f64, f64)>) -> Result<Self> {
        if support.is_empty() {
            return Err(Error::invalid("empty support"));
        }
        if support
            .iter()
            .any(|(v, p)| !v.is_finite() || !p.is_finite() || *p < 0.0)
        {
            return Err(Error::invalid("support values must be finite, probabilities non-negative"));
        }
        let total: f64 = support.iter().map(|(_, p)| p).sum();
        if (total - 1.0).abs() > PROB_SUM_TOL {
            return Err(Error::invalid(format!("probabilities sum to {total}, not 1")));
        }
        let b = support.iter().fold(0.0f64, |m, (v, _)| m.max(v.abs()));
        let mean: f64 = support.iter().map(|(v, p)| v * p).sum();
        if mean.abs() > PROB_SUM_TOL * b.max(1.0) {
            return Err(Error::invalid(format!("distribution has mean {mean}, not 0")));
        }
        let sigma2 = support.iter().map(|(v, p)| p * v * v).sum();
        let mut acc = 0.0;
        let cumulative = support
            .iter()
            .map(|(_, p)| {
                acc += p;
                acc
            })
            .collect();
        Ok(Self {
            support,
            cumulative,
            sigma2,
            b,
        })
    }

    /// `±1` with probability one half each.
    pub fn rademacher() -> Self {
        Self::new(vec![(-1.0, 0.5), (1.0, 0.5)]).expect("valid")
    }

    /// `{−2, 0, 2}` with probabilities `{¼, ½, ¼}`.
    pub fn three_point() -> Self {
        Self::new(vec![(-2.0, 0.25), (0.0, 0.5), (2.0, 0.25)]).expect("valid")
    }

    pub fn point_mass_at_zero() -> Self {
        Self::new(vec![(0.0, 1.0)]).expect("valid")
    }

    pub fn support(&self) -> &[(f64, f64)] {
        &self.support
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    pub fn sigma(&self) -> f64 {
        self.sigma2.sqrt()
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    /// Whether the law is invariant under `v ↦ −v`.
    pub fn is_symmetric(&self) -> bool {
        let mass_at = |x: f64| -> f64 {
            self.support
                .iter()
                .filter(|(v, _)| (v - x).abs() <= 1e-12 * self.b.max(1.0))
                .map(|(_, p)| p)
                .sum()
        };
        self.support
            .iter()
            .all(|(v, _)| (mass_at(*v) - mass_at(-*v)).abs() <= PROB_SUM_TOL)
    }

    pub fn sample(&self, src: &mut RandomSource) -> f64 {
        self.support[src.categorical(&self.cumulative)].0
    }
}

#[derive(Debug, Clone)]
pub enum NoiseModel {
    /// `H_ij ~ N(0, σ_ij²)` with `σ_ij` uniform on `[sigma_lo, sigma_hi]`.
    GaussianHetero { sigma_lo: f64, sigma_hi: f64 },
    /// Entrywise sampling of a signal with observation probability `obs_prob`.
    CompletionMask { m_star: DenseMatrix, obs_prob: f64 },
    /// `A_ij ~ Bernoulli(P_ij)`, noise `A − P`.
    BernoulliNetwork { p: DenseMatrix },
    /// I.i.d. entries from a finite law.
    DiscreteIid(DiscreteDist),
}

#[derive(Debug, Clone)]
pub struct NoiseSpec {
    pub model: NoiseModel,
    /// Demand that every entry be symmetric about zero.
    pub symmetric: bool,
    /// Sample the upper triangle and mirror it, giving a symmetric `W`.
    pub mirror: bool,
}

impl NoiseSpec {
    pub fn new(model: NoiseModel, symmetric: bool) -> Result<Self> {
        let spec = Self {
            model,
            symmetric,
            mirror: false,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn mirrored(mut self) -> Self {
        self.mirror = true;
        self
    }

    fn validate(&self) -> Result<()> {
        match &self.model {
            NoiseModel::GaussianHetero { sigma_lo, sigma_hi } => {
                if !(*sigma_lo > 0.0 && sigma_lo <= sigma_hi && sigma_hi.is_finite()) {
                    return Err(Error::invalid("gaussian sigma range must satisfy 0 < lo <= hi"));
                }
            }
            NoiseModel::CompletionMask { obs_prob, .. } => {
                check_obs_prob(*obs_prob)?;
                if self.symmetric && *obs_prob < 1.0 {
                    return Err(Error::invalid("completion noise is not symmetric about zero"));
                }
            }
            NoiseModel::BernoulliNetwork { p } => {
                check_probabilities(p)?;
                if self.symmetric {
                    return Err(Error::invalid("network noise is not symmetric about zero"));
                }
            }
            NoiseModel::DiscreteIid(dist) => {
                if self.symmetric && !dist.is_symmetric() {
                    return Err(Error::invalid("support is not closed under negation"));
                }
            }
        }
        Ok(())
    }

    /// Draws one `n × n` noise matrix.
    pub fn sample(&self, n: usize, src: &mut RandomSource) -> Result<DenseMatrix> {
        let h = match &self.model {
            NoiseModel::GaussianHetero { sigma_lo, sigma_hi } => {
                gaussian_hetero(n, *sigma_lo, *sigma_hi, src)?.0
            }
            NoiseModel::CompletionMask { m_star, obs_prob } => {
                check_order(m_star, n)?;
                sample_completion(m_star, *obs_prob, src)?.noise
            }
            NoiseModel::BernoulliNetwork { p } => {
                check_order(p, n)?;
                sample_network(p, src)?.noise
            }
            NoiseModel::DiscreteIid(dist) => sample_discrete(n, dist, src, self.symmetric)?.0,
        };
        Ok(if self.mirror { symmetrize(&h)? } else { h })
    }

    pub fn params(&self, n: usize) -> NoiseParams {
        match &self.model {
            NoiseModel::GaussianHetero { sigma_hi, .. } => gaussian_params(*sigma_hi, n),
            NoiseModel::CompletionMask { m_star, obs_prob } => completion_params(m_star, *obs_prob),
            NoiseModel::BernoulliNetwork { p } => network_params(p),
            NoiseModel::DiscreteIid(dist) => NoiseParams::new(dist.sigma(), dist.b(), n),
        }
    }
}

fn check_order(m: &DenseMatrix, n: usize) -> Result<()> {
    if m.rows() != n || m.cols() != n {
        return Err(Error::DimensionMismatch {
            op: "NoiseSpec::sample",
            expected: n,
            found: m.rows(),
        });
    }
    Ok(())
}

fn gaussian_params(sigma: f64, n: usize) -> NoiseParams {
    let log_n = (n as f64).ln().max(1.0);
    NoiseParams::new(sigma, GAUSSIAN_B_CONSTANT * sigma * log_n.sqrt(), n)
}

/// Heteroskedastic Gaussian noise with `σ_ij ~ U[0.7, 1]`, reported `σ = 1`.
pub fn sample_gaussian_hetero(n: usize, src: &mut RandomSource) -> Result<(DenseMatrix, NoiseParams)> {
    let (lo, hi) = GAUSSIAN_SIGMA_RANGE;
    gaussian_hetero(n, lo, hi, src)
}

pub fn gaussian_hetero(
    n: usize,
    sigma_lo: f64,
    sigma_hi: f64,
    src: &mut RandomSource,
) -> Result<(DenseMatrix, NoiseParams)> {
    if n == 0 {
        return Err(Error::invalid("n must be positive"));
    }
    if !(sigma_lo > 0.0 && sigma_lo <= sigma_hi) {
        return Err(Error::invalid("gaussian sigma range must satisfy 0 < lo <= hi"));
    }
    let width = sigma_hi - sigma_lo;
    let data = (0..n * n)
        .map(|_| {
            let s = sigma_lo + width * src.unit();
            s * src.gaussian()
        })
        .collect();
    Ok((
        DenseMatrix::from_vec_unchecked(n, n, data),
        gaussian_params(sigma_hi, n),
    ))
}

/// Observed matrix, its noise `M − M*`, and the noise parameters.
#[derive(Debug, Clone)]
pub struct CompletionSample {
    pub observed: DenseMatrix,
    pub noise: DenseMatrix,
    pub params: NoiseParams,
}

fn check_obs_prob(p: f64) -> Result<()> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::invalid(format!("obs_prob {p} outside (0, 1]")));
    }
    Ok(())
}

/// Keeps each `M*_ij/p` with probability `p`, zero otherwise.
///
/// Parameters follow the rank-one calculation generalised through
/// `max|M*_ij|`: `B = max|M*_ij|/p` and `σ = max|M*_ij|/√p`.
pub fn sample_completion(
    m_star: &DenseMatrix,
    obs_prob: f64,
    src: &mut RandomSource,
) -> Result<CompletionSample> {
    let observed = observe_completion(m_star, obs_prob, src)?;
    let noise = observed.sub(m_star)?;
    Ok(CompletionSample {
        observed,
        noise,
        params: completion_params(m_star, obs_prob),
    })
}

/// The observed matrix of [`sample_completion`] alone.
pub fn observe_completion(m_star: &DenseMatrix, obs_prob: f64, src: &mut RandomSource) -> Result<DenseMatrix> {
    check_obs_prob(obs_prob)?;
    let inv = 1.0 / obs_prob;
    let observed: Vec<f64> = m_star
        .as_slice()
        .iter()
        .map(|m| {
            if src.bernoulli_unchecked(obs_prob) {
                m * inv
            } else {
                0.0
            }
        })
        .collect();
    Ok(DenseMatrix::from_vec_unchecked(m_star.rows(), m_star.cols(), observed))
}

fn completion_params(m_star: &DenseMatrix, obs_prob: f64) -> NoiseParams {
    let peak = m_star.entrywise_inf_norm();
    NoiseParams::new(peak / obs_prob.sqrt(), peak / obs_prob, m_star.rows())
}

#[derive(Debug, Clone)]
pub struct NetworkSample {
    pub adjacency: DenseMatrix,
    pub noise: DenseMatrix,
    pub params: NoiseParams,
}

fn check_probabilities(p: &DenseMatrix) -> Result<()> {
    if let Some(bad) = p.as_slice().iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(Error::invalid(format!("probability {bad} outside [0, 1]")));
    }
    Ok(())
}

/// Independent `A_ij ~ Bernoulli(P_ij)`; `B = 1`, `σ = √max P_ij`.
pub fn sample_network(p: &DenseMatrix, src: &mut RandomSource) -> Result<NetworkSample> {
    let adjacency = draw_adjacency(p, src)?;
    let noise = adjacency.sub(p)?;
    Ok(NetworkSample {
        adjacency,
        noise,
        params: network_params(p),
    })
}

/// The adjacency matrix of [`sample_network`] alone.
pub fn draw_adjacency(p: &DenseMatrix, src: &mut RandomSource) -> Result<DenseMatrix> {
    check_probabilities(p)?;
    let adjacency: Vec<f64> = p
        .as_slice()
        .iter()
        .map(|pij| if src.bernoulli_unchecked(*pij) { 1.0 } else { 0.0 })
        .collect();
    Ok(DenseMatrix::from_vec_unchecked(p.rows(), p.cols(), adjacency))
}

fn network_params(p: &DenseMatrix) -> NoiseParams {
    NoiseParams::new(p.entrywise_inf_norm().sqrt(), 1.0, p.rows())
}

/// I.i.d. entries from `dist`; `symmetric` demands a law symmetric about zero.
pub fn sample_discrete(
    n: usize,
    dist: &DiscreteDist,
    src: &mut RandomSource,
    symmetric: bool,
) -> Result<(DenseMatrix, NoiseParams)> {
    if n == 0 {
        return Err(Error::invalid("n must be positive"));
    }
    if symmetric && !dist.is_symmetric() {
        return Err(Error::invalid("support is not closed under negation"));
    }
    let data = (0..n * n).map(|_| dist.sample(src)).collect();
    Ok((
        DenseMatrix::from_vec_unchecked(n, n, data),
        NoiseParams::new(dist.sigma(), dist.b(), n),
    ))
}

/// Mirrors the upper triangle (diagonal included) into a symmetric matrix.
pub fn symmetrize(h: &DenseMatrix) -> Result<DenseMatrix> {
    if !h.is_square() {
        return Err(Error::DimensionMismatch {
            op: "symmetrize",
            expected: h.rows(),
            found: h.cols(),
        });
    }
    let mut w = h.clone();
    for i in 0..h.rows() {
        for j in 0..i {
            w[(i, j)] = h[(j, i)];
        }
    }
    Ok(w)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_entry_mean_is_small() {
        let mut src = RandomSource::new(1, 0);
        let (h, params) = sample_gaussian_hetero(200, &mut src).unwrap();
        let mean = h.as_slice().iter().sum::<f64>() / (200.0 * 200.0);
        assert!(mean.abs() <= 0.02, "mean {mean}");
        assert_eq!(params.sigma, 1.0);
        assert!((params.b - 5.0 * 200f64.ln().sqrt()).abs() < 1e-12);
    }

    #[test]
    fn gaussian_entry_variance_in_range() {
        // Each entry's variance σ_ij² is itself random on [0.49, 1].
        let mut src = RandomSource::new(2, 0);
        let trials = 10_000;
        let mut sum2 = 0.0;
        for _ in 0..trials {
            let (h, _) = sample_gaussian_hetero(2, &mut src).unwrap();
            sum2 += h[(0, 1)] * h[(0, 1)];
        }
        let var = sum2 / trials as f64;
        assert!((0.49 / 1.1..=1.0 * 1.1).contains(&var), "var {var}");
    }

    #[test]
    fn completion_examples() {
        let mut src = RandomSource::new(3, 0);
        let m_star = DenseMatrix::from_fn(3, 3, |i, j| (i + 2 * j) as f64 - 2.5).unwrap();
        let full = sample_completion(&m_star, 1.0, &mut src).unwrap();
        assert_eq!(full.observed, m_star);
        assert!(full.noise.as_slice().iter().all(|v| *v == 0.0));

        let s = sample_completion(&m_star, 0.3, &mut src).unwrap();
        assert!((s.params.b / s.params.sigma - 1.0 / 0.3f64.sqrt()).abs() < 1e-12);
        for (o, m) in s.observed.as_slice().iter().zip(m_star.as_slice()) {
            assert!(*o == 0.0 || *o == m / 0.3);
        }
        assert_eq!(s.noise.add(&m_star).unwrap(), s.observed);
        assert!(sample_completion(&m_star, 0.0, &mut src).is_err());
        assert!(sample_completion(&m_star, 1.5, &mut src).is_err());
    }

    #[test]
    fn completion_is_unbiased() {
        let mut src = RandomSource::new(4, 0);
        let m_star = DenseMatrix::from_rows(&[vec![0.8, -0.4], vec![0.2, 1.0]]).unwrap();
        let p = 0.25;
        let trials = 10_000;
        let mut sum = 0.0;
        for _ in 0..trials {
            sum += sample_completion(&m_star, p, &mut src).unwrap().observed[(0, 0)];
        }
        let mean = sum / trials as f64;
        let se = 0.8 * ((1.0 - p) / p).sqrt() / (trials as f64).sqrt();
        assert!((mean - 0.8).abs() <= 3.0 * se, "mean {mean}, se {se}");
    }

    #[test]
    fn network_examples() {
        let mut src = RandomSource::new(5, 0);
        let zeros = DenseMatrix::zeros(4, 4);
        let s = sample_network(&zeros, &mut src).unwrap();
        assert_eq!(s.adjacency, zeros);
        assert_eq!(s.noise, zeros);

        let ones = DenseMatrix::from_fn(4, 4, |_, _| 1.0).unwrap();
        let s = sample_network(&ones, &mut src).unwrap();
        assert_eq!(s.adjacency, ones);
        assert!(s.noise.as_slice().iter().all(|v| *v == 0.0));

        let quarter = DenseMatrix::from_fn(4, 4, |i, j| if i == j { 0.25 } else { 0.1 }).unwrap();
        let s = sample_network(&quarter, &mut src).unwrap();
        assert_eq!(s.params.sigma, 0.5);
        assert_eq!(s.params.b, 1.0);

        let bad = DenseMatrix::from_fn(2, 2, |_, _| 1.5).unwrap();
        assert!(sample_network(&bad, &mut src).is_err());
    }

    #[test]
    fn discrete_examples() {
        let r = DiscreteDist::rademacher();
        assert_eq!((r.sigma(), r.b()), (1.0, 1.0));
        let t = DiscreteDist::three_point();
        assert_eq!((t.sigma2(), t.b()), (2.0, 2.0));

        // Not closed under negation, and not even centred.
        assert!(DiscreteDist::new(vec![(-1.0, 0.25), (3.0, 0.25), (0.0, 0.5)]).is_err());
        // Centred but skewed: allowed, yet rejected when symmetry is demanded.
        let skew = DiscreteDist::new(vec![(-1.0, 2.0 / 3.0), (2.0, 1.0 / 3.0)]).unwrap();
        assert!(!skew.is_symmetric());
        let mut src = RandomSource::new(6, 0);
        assert!(sample_discrete(3, &skew, &mut src, true).is_err());
        assert!(sample_discrete(3, &skew, &mut src, false).is_ok());
        assert!(DiscreteDist::new(vec![(1.0, 0.5), (-1.0, 0.4)]).is_err());
    }

    #[test]
    fn symmetric_discrete_odd_moments_vanish() {
        let mut src = RandomSource::new(7, 0);
        let dist = DiscreteDist::three_point();
        let trials = 10_000;
        let draws: Vec<f64> = (0..trials)
            .map(|_| sample_discrete(2, &dist, &mut src, true).unwrap().0[(1, 0)])
            .collect();
        for power in [1, 3] {
            let vals: Vec<f64> = draws.iter().map(|x| x.powi(power)).collect();
            let mean = vals.iter().sum::<f64>() / trials as f64;
            let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (trials - 1) as f64;
            let se = (var / trials as f64).sqrt();
            assert!(mean.abs() <= 4.0 * se, "power {power}: mean {mean}, se {se}");
        }
    }

    #[test]
    fn symmetrize_examples() {
        let sym = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 3.0]]).unwrap();
        assert_eq!(symmetrize(&sym).unwrap(), sym);
        let h = DenseMatrix::from_rows(&[vec![0.0, 1.0], vec![9.0, 0.0]]).unwrap();
        let w = symmetrize(&h).unwrap();
        assert_eq!(w, DenseMatrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap());
        assert_eq!(w.max_asymmetry(), 0.0);
        assert!(symmetrize(&DenseMatrix::zeros(2, 3)).is_err());
    }

    #[test]
    fn regime_examples() {
        let n = 50;
        let p = NoiseParams::new(2.0, 2.0, n);
        let ln = (n as f64).ln();
        let expected = (ln.powi(3) / n as f64).sqrt();
        assert!((regime_check(&p, n).unwrap() - expected).abs() < 1e-12);
        // With natural logs, ln³n ≥ n on 7..=93, so σ = B only enters the
        // regime from n = 94 on.
        assert!((expected - 1.094_251_367_298_758_8).abs() < 1e-12);
        for m in [94usize, 200, 10_000] {
            assert!(regime_check(&NoiseParams::new(1.0, 1.0, m), m).unwrap() < 1.0);
        }
        assert!(regime_check(&NoiseParams::new(1.0, 1.0, 93), 93).unwrap() >= 1.0);
        assert_eq!(regime_check(&NoiseParams::new(1.0, 0.0, n), n).unwrap(), 0.0);

        // Network with ρ = ln n / n at n = 10⁴: the ratio collapses to ln n.
        let n = 10_000;
        let rho = (n as f64).ln() / n as f64;
        let p = NoiseParams::new(rho.sqrt(), 1.0, n);
        let ratio = regime_check(&p, n).unwrap();
        assert!((ratio - 9.210_340_371_976_184).abs() < 1e-9, "ratio {ratio}");
        assert!(regime_check(&p, 2).is_err());
    }

    #[test]
    fn per_entry_means_are_centred() {
        // |Ê H_ij| ≤ 4σ/√trials for a fixed entry, every model.
        let trials = 10_000usize;
        let m_star = DenseMatrix::from_rows(&[vec![0.5, 0.3], vec![0.3, 0.2]]).unwrap();
        let p = DenseMatrix::from_rows(&[vec![0.4, 0.1], vec![0.7, 0.2]]).unwrap();
        let specs = [
            NoiseSpec::new(NoiseModel::GaussianHetero { sigma_lo: 0.7, sigma_hi: 1.0 }, true).unwrap(),
            NoiseSpec::new(NoiseModel::CompletionMask { m_star: m_star.clone(), obs_prob: 0.3 }, false).unwrap(),
            NoiseSpec::new(NoiseModel::BernoulliNetwork { p: p.clone() }, false).unwrap(),
            NoiseSpec::new(NoiseModel::DiscreteIid(DiscreteDist::three_point()), true).unwrap(),
        ];
        for (k, spec) in specs.iter().enumerate() {
            let mut src = RandomSource::new(8, k as u64);
            let sigma = spec.params(2).sigma;
            let mean = (0..trials)
                .map(|_| spec.sample(2, &mut src).unwrap()[(0, 1)])
                .sum::<f64>()
                / trials as f64;
            assert!(mean.abs() <= 4.0 * sigma / (trials as f64).sqrt(), "model {k}: mean {mean}");
        }
    }

    #[test]
    fn spec_validation() {
        let skew = DiscreteDist::new(vec![(-1.0, 2.0 / 3.0), (2.0, 1.0 / 3.0)]).unwrap();
        assert!(NoiseSpec::new(NoiseModel::DiscreteIid(skew), true).is_err());
        let p = DenseMatrix::zeros(2, 2);
        assert!(NoiseSpec::new(NoiseModel::BernoulliNetwork { p }, true).is_err());
        let mirrored = NoiseSpec::new(NoiseModel::DiscreteIid(DiscreteDist::rademacher()), true)
            .unwrap()
            .mirrored();
        let mut src = RandomSource::new(9, 0);
        assert_eq!(mirrored.sample(5, &mut src).unwrap().max_asymmetry(), 0.0);
    }
}
