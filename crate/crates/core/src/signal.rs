//! Low-rank symmetric signals `M* = U* Λ* U*ᵀ` with controlled coherence.

use crate::error::{Error, Result};
use crate::linalg::{DenseMatrix, DenseVector};
use crate::rng::RandomSource;

/// Largest tolerated `‖U*ᵀU* − I‖` (measured in Frobenius norm).
const ORTHONORMAL_TOL: f64 = 1e-10;

/// Rank-`r` spectral data of a symmetric signal.
#[derive(Debug, Clone)]
pub struct SignalSpec {
    lambda_star: Vec<f64>,
    u_star: DenseMatrix,
}

impl SignalSpec {
    /// Validates the pair and orders it by descending `|λ*|`, carrying the
    /// columns of `U*` along.
    pub fn new(lambda_star: Vec<f64>, u_star: DenseMatrix) -> Result<Self> {
        if lambda_star.len() != u_star.cols() {
            return Err(Error::DimensionMismatch {
                op: "SignalSpec::new",
                expected: u_star.cols(),
                found: lambda_star.len(),
            });
        }
        if lambda_star.iter().any(|l| *l == 0.0 || !l.is_finite()) {
            return Err(Error::invalid("signal eigenvalues must be finite and nonzero"));
        }
        if u_star.cols() > u_star.rows() {
            return Err(Error::invalid("rank exceeds dimension"));
        }
        check_orthonormal(&u_star)?;

        let mut order: Vec<usize> = (0..lambda_star.len()).collect();
        order.sort_by(|&a, &b| lambda_star[b].abs().partial_cmp(&lambda_star[a].abs()).unwrap());
        let lambda: Vec<f64> = order.iter().map(|&j| lambda_star[j]).collect();
        let u = DenseMatrix::from_fn(u_star.rows(), u_star.cols(), |i, j| u_star[(i, order[j])])?;
        Ok(Self {
            lambda_star: lambda,
            u_star: u,
        })
    }

    pub fn rank_one(lambda_star: f64, u_star: &DenseVector) -> Result<Self> {
        Self::new(vec![lambda_star], DenseMatrix::from_columns(std::slice::from_ref(u_star))?)
    }

    pub fn n(&self) -> usize {
        self.u_star.rows()
    }

    pub fn rank(&self) -> usize {
        self.lambda_star.len()
    }

    pub fn lambda_star(&self) -> &[f64] {
        &self.lambda_star
    }

    pub fn u_star(&self) -> &DenseMatrix {
        &self.u_star
    }

    pub fn eigenvector(&self, j: usize) -> DenseVector {
        self.u_star.column(j)
    }

    pub fn lambda_max(&self) -> f64 {
        self.lambda_star[0].abs()
    }

    pub fn lambda_min(&self) -> f64 {
        self.lambda_star[self.rank() - 1].abs()
    }

    /// `κ = λ*_max / λ*_min`.
    pub fn kappa(&self) -> f64 {
        self.lambda_max() / self.lambda_min()
    }

    /// `M* = Σⱼ λ*ⱼ u*ⱼ u*ⱼᵀ`, symmetric by construction.
    pub fn matrix(&self) -> DenseMatrix {
        let n = self.n();
        let mut m = DenseMatrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let v: f64 = (0..self.rank())
                    .map(|k| self.lambda_star[k] * self.u_star[(i, k)] * self.u_star[(j, k)])
                    .sum();
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        m
    }

    pub fn coherence(&self) -> CoherenceReport {
        let mut report = coherence_unchecked(&self.u_star);
        report.kappa = Some(self.kappa());
        report
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoherenceReport {
    /// `n‖U*‖²_∞`, in `[1, n]`.
    pub mu: f64,
    /// `(n/r)‖U*‖²_{2,∞}`, in `[1, n/r]`.
    pub mu0: f64,
    /// Condition number of the attached eigenvalues, when known.
    pub kappa: Option<f64>,
}

/// Coherence statistics of an orthonormal block `U*`.
pub fn coherence(u_star: &DenseMatrix) -> Result<CoherenceReport> {
    check_orthonormal(u_star)?;
    Ok(coherence_unchecked(u_star))
}

/// Coherence `μ` of a single unit vector.
pub fn vector_coherence(u: &DenseVector) -> f64 {
    let inf = u.inf_norm();
    u.len() as f64 * inf * inf
}

fn coherence_unchecked(u_star: &DenseMatrix) -> CoherenceReport {
    let n = u_star.rows() as f64;
    let r = u_star.cols() as f64;
    let inf = u_star.entrywise_inf_norm();
    let row = u_star.row_two_inf_norm();
    CoherenceReport {
        mu: n * inf * inf,
        mu0: n / r * row * row,
        kappa: None,
    }
}

fn check_orthonormal(u: &DenseMatrix) -> Result<()> {
    let gram = u.transpose().matmul(u)?;
    let dev = gram.sub(&DenseMatrix::identity(u.cols()))?.frobenius_norm();
    if dev > ORTHONORMAL_TOL {
        return Err(Error::invalid(format!(
            "columns are not orthonormal (‖UᵀU − I‖_F = {dev:e})"
        )));
    }
    Ok(())
}

/// Support size `m = ⌊n/μ⌋` used by both generation schemes.
pub fn support_size(n: usize, mu_target: f64) -> Result<usize> {
    if n == 0 || !(1.0..=n as f64).contains(&mu_target) {
        return Err(Error::invalid(format!(
            "mu_target {mu_target} must lie in [1, {n}]"
        )));
    }
    Ok(((n as f64 / mu_target).floor() as usize).clamp(1, n))
}

/// Random `m`-sparse unit vector whose nonzero block is uniform on `S^{m−1}`.
pub fn scheme_one(n: usize, mu_target: f64, src: &mut RandomSource) -> Result<DenseVector> {
    let m = support_size(n, mu_target)?;
    let support = src.sample_indices(n, m)?;
    let block = src.sphere(m)?;
    let mut u = DenseVector::zeros(n);
    for (idx, val) in support.iter().zip(block.iter()) {
        u[*idx] = *val;
    }
    Ok(u)
}

/// Mixing weights of the sparse-plus-dense generator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchemeTwoWeights {
    pub sparse: f64,
    pub dense: f64,
}

impl Default for SchemeTwoWeights {
    fn default() -> Self {
        Self {
            sparse: 0.7,
            dense: 0.3,
        }
    }
}

/// `normalize(0.7 v¹ + 0.3 v²)` where `v¹` is `m`-sparse with entries
/// `±1/√m` and `v²` is uniform on `S^{n−1}`.
pub fn scheme_two(n: usize, mu_target: f64, src: &mut RandomSource) -> Result<DenseVector> {
    scheme_two_weighted(n, mu_target, SchemeTwoWeights::default(), src)
}

pub fn scheme_two_weighted(
    n: usize,
    mu_target: f64,
    weights: SchemeTwoWeights,
    src: &mut RandomSource,
) -> Result<DenseVector> {
    let m = support_size(n, mu_target)?;
    let support = src.sample_indices(n, m)?;
    let level = 1.0 / (m as f64).sqrt();
    let mut sparse = DenseVector::zeros(n);
    for idx in support {
        sparse[idx] = src.sign() * level;
    }
    let dense = src.sphere(n)?;
    sparse
        .scaled(weights.sparse)
        .add_scaled(weights.dense, &dense)?
        .normalize()
}

/// Materialises `M*` for the given spectrum and eigenvectors.
pub fn make_signal(lambda_star: Vec<f64>, u_star: DenseMatrix) -> Result<(SignalSpec, DenseMatrix)> {
    let spec = SignalSpec::new(lambda_star, u_star)?;
    let m = spec.matrix();
    Ok((spec, m))
}

/// Eigen-gap `Δ*ₗ = min_{k≠l} |λ*ₗ − λ*ₖ|` for zero-based `l`; infinite at rank one.
pub fn eigen_gap(lambda_star: &[f64], l: usize) -> Result<f64> {
    if l >= lambda_star.len() {
        return Err(Error::invalid(format!(
            "eigen index {l} out of range for rank {}",
            lambda_star.len()
        )));
    }
    Ok(lambda_star
        .iter()
        .enumerate()
        .filter(|(k, _)| *k != l)
        .map(|(_, v)| (lambda_star[l] - v).abs())
        .fold(f64::INFINITY, f64::min))
}

/// Modified Gram–Schmidt; fails when the vectors are numerically dependent.
pub fn orthonormalize(vectors: &[DenseVector]) -> Result<DenseMatrix> {
    let mut basis: Vec<DenseVector> = Vec::with_capacity(vectors.len());
    for v in vectors {
        let mut w = v.clone();
        // Two passes keep the basis orthonormal to working precision.
        for _ in 0..2 {
            for b in &basis {
                let c = w.dot(b)?;
                w = w.add_scaled(-c, b)?;
            }
        }
        if w.norm2() < 1e-10 * v.norm2().max(f64::MIN_POSITIVE) {
            return Err(Error::invalid("vectors are linearly dependent"));
        }
        basis.push(w.normalize()?);
    }
    DenseMatrix::from_columns(&basis)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coherence_examples() {
        let e1 = DenseMatrix::from_columns(&[DenseVector::basis(4, 0)]).unwrap();
        let c = coherence(&e1).unwrap();
        assert_eq!((c.mu, c.mu0), (4.0, 4.0));

        let flat = DenseVector::new(vec![1.0; 9]).unwrap().normalize().unwrap();
        let c = coherence(&DenseMatrix::from_columns(&[flat]).unwrap()).unwrap();
        assert!((c.mu - 1.0).abs() < 1e-12);

        let s = 1.0 / 3f64.sqrt();
        let second = DenseVector::new(vec![0.0, s, s, s]).unwrap();
        let u = DenseMatrix::from_columns(&[DenseVector::basis(4, 0), second]).unwrap();
        let c = coherence(&u).unwrap();
        assert!((c.mu - 4.0).abs() < 1e-12);
        assert!((c.mu0 - 2.0).abs() < 1e-12);
    }

    #[test]
    fn coherence_rejects_non_orthonormal() {
        let u = DenseMatrix::from_columns(&[DenseVector::new(vec![1.0, 1.0]).unwrap()]).unwrap();
        assert!(coherence(&u).is_err());
    }

    #[test]
    fn scheme_one_extremes() {
        let mut src = RandomSource::new(11, 0);
        let u = scheme_one(20, 20.0, &mut src).unwrap();
        assert_eq!(u.l0(), 1);
        assert!((u.inf_norm() - 1.0).abs() < 1e-15);
        assert!((vector_coherence(&u) - 20.0).abs() < 1e-12);

        let u = scheme_one(20, 1.0, &mut src).unwrap();
        assert_eq!(u.l0(), 20);

        let u = scheme_one(100, 10.0, &mut src).unwrap();
        assert_eq!(u.l0(), 10);
        assert!(u.inf_norm() >= 1.0 / 10f64.sqrt());
        assert!((u.norm2() - 1.0).abs() < 1e-12);

        assert!(scheme_one(10, 0.5, &mut src).is_err());
        assert!(scheme_one(10, 11.0, &mut src).is_err());
    }

    #[test]
    fn scheme_two_examples() {
        let mut src = RandomSource::new(12, 0);
        let u = scheme_two(50, 5.0, &mut src).unwrap();
        assert!((u.norm2() - 1.0).abs() < 1e-12);

        let pure = SchemeTwoWeights {
            sparse: 1.0,
            dense: 0.0,
        };
        let u = scheme_two_weighted(50, 5.0, pure, &mut src).unwrap();
        assert_eq!(u.l0(), 10);
        assert!((u.inf_norm() - 1.0 / 10f64.sqrt()).abs() < 1e-12);

        let degenerate = scheme_two_weighted(30, 30.0, pure, &mut src).unwrap();
        assert_eq!(degenerate.l0(), 1);
    }

    #[test]
    fn scheme_two_realised_coherence() {
        // Median of n‖u‖²∞ over 100 draws stays within [0.2, 5]·μ.
        let mut src = RandomSource::new(13, 0);
        let mut mus: Vec<f64> = (0..100)
            .map(|_| vector_coherence(&scheme_two(400, 20.0, &mut src).unwrap()))
            .collect();
        mus.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let median = 0.5 * (mus[49] + mus[50]);
        assert!((4.0..=100.0).contains(&median), "median {median}");
    }

    #[test]
    fn make_signal_examples() {
        let (_, m) = make_signal(vec![1.0], DenseMatrix::from_columns(&[DenseVector::basis(3, 0)]).unwrap()).unwrap();
        assert_eq!(m[(0, 0)], 1.0);
        assert_eq!(m.as_slice().iter().filter(|x| **x != 0.0).count(), 1);

        let s = 0.5f64.sqrt();
        let a = DenseVector::new(vec![s, s, 0.0]).unwrap();
        let b = DenseVector::new(vec![s, -s, 0.0]).unwrap();
        let (_, m) = make_signal(vec![2.0, -2.0], DenseMatrix::from_columns(&[a, b]).unwrap()).unwrap();
        assert!(m.trace().abs() < 1e-14);

        let u = DenseMatrix::from_columns(&[DenseVector::basis(4, 0), DenseVector::basis(4, 1)]).unwrap();
        let (_, m) = make_signal(vec![3.0, 1.0], u).unwrap();
        assert_eq!(m, DenseMatrix::diag(&[3.0, 1.0, 0.0, 0.0]).unwrap());

        let u = DenseMatrix::from_columns(&[DenseVector::basis(2, 0)]).unwrap();
        assert!(make_signal(vec![0.0], u).is_err());
    }

    #[test]
    fn spec_sorts_by_modulus() {
        let u = DenseMatrix::from_columns(&[DenseVector::basis(3, 0), DenseVector::basis(3, 1)]).unwrap();
        let spec = SignalSpec::new(vec![1.0, -4.0], u).unwrap();
        assert_eq!(spec.lambda_star(), &[-4.0, 1.0]);
        assert_eq!(spec.eigenvector(0), DenseVector::basis(3, 1));
        assert_eq!(spec.kappa(), 4.0);
    }

    #[test]
    fn eigen_gap_examples() {
        assert_eq!(eigen_gap(&[3.0], 0).unwrap(), f64::INFINITY);
        assert_eq!(eigen_gap(&[5.0, 3.0, 1.0], 1).unwrap(), 2.0);
        assert_eq!(eigen_gap(&[4.0, 4.0, 1.0], 0).unwrap(), 0.0);
        assert!(eigen_gap(&[1.0], 1).is_err());
    }
}
