//! Neumann-series expansion of perturbed eigenvectors and the magnitude-band
//! decomposition of unit vectors.
//!
//! For `M = M* + H` with `‖H‖ < |λ_l|`,
//! `u_l = Σ_j (λ*_j/λ_l)(u*_jᵀu_l) Σ_k λ_l^{-k} Hᵏ u*_j`.
//! The reconstruction here needs the true `(λ_l, u_l)` and is a check on the
//! identity, not an estimator.

use crate::error::{Error, Result};
use crate::linalg::{dot, DenseMatrix, DenseVector};
use crate::signal::SignalSpec;

const NORM_TOL: f64 = 1e-12;
const NORM_MAX_ITER: usize = 100_000;
const UNIT_TOL: f64 = 1e-10;

/// `values[k] = xᵀHᵏy` for `k = 0..=k_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerSequence {
    pub values: Vec<f64>,
    pub k_max: usize,
}

/// Computes `xᵀHᵏy` by repeated products `w ← Hw`, never forming `Hᵏ`.
pub fn bilinear_powers(
    h: &DenseMatrix,
    x: &DenseVector,
    y: &DenseVector,
    k_max: usize,
) -> Result<PowerSequence> {
    let n = h.rows();
    if !h.is_square() || x.len() != n || y.len() != n {
        return Err(Error::DimensionMismatch {
            op: "bilinear_powers",
            expected: n,
            found: if h.is_square() { x.len().max(y.len()) } else { h.cols() },
        });
    }
    let mut values = Vec::with_capacity(k_max + 1);
    values.push(dot(x.as_slice(), y.as_slice()));
    let mut w = y.as_slice().to_vec();
    let mut next = vec![0.0; n];
    for _ in 0..k_max {
        h.matvec_into(&w, &mut next);
        std::mem::swap(&mut w, &mut next);
        values.push(dot(x.as_slice(), &w));
    }
    Ok(PowerSequence { values, k_max })
}

/// Partial sums `S_0, …, S_K` of the eigenvector series, where `S_K` keeps
/// powers `H⁰ … Hᴷ`.
///
/// Fails unless `‖H‖ < |λ_l|` strictly.
pub fn neumann_partial_sums(
    h: &DenseMatrix,
    signal: &SignalSpec,
    lambda_l: f64,
    u_l: &DenseVector,
    k: usize,
) -> Result<Vec<DenseVector>> {
    let n = signal.n();
    if h.rows() != n || h.cols() != n || u_l.len() != n {
        return Err(Error::DimensionMismatch {
            op: "neumann_reconstruct",
            expected: n,
            found: if h.rows() != n { h.rows() } else { u_l.len() },
        });
    }
    let norm_h = h.operator_norm(NORM_TOL, NORM_MAX_ITER)?;
    if !(norm_h < lambda_l.abs()) {
        return Err(Error::Regime(format!(
            "series needs ‖H‖ < |λ_l|, got ‖H‖ = {norm_h}, |λ_l| = {}",
            lambda_l.abs()
        )));
    }

    let mut sum = vec![0.0; n];
    let mut sums = Vec::with_capacity(k + 1);
    // One running term t_j = (λ*_j/λ_l)(u*_jᵀu_l) λ_l^{-k} Hᵏ u*_j per signal direction.
    let mut terms: Vec<Vec<f64>> = (0..signal.rank())
        .map(|j| {
            let uj = signal.eigenvector(j);
            let c = signal.lambda_star()[j] / lambda_l * dot(uj.as_slice(), u_l.as_slice());
            uj.as_slice().iter().map(|v| c * v).collect()
        })
        .collect();
    let mut scratch = vec![0.0; n];
    for power in 0..=k {
        if power > 0 {
            for t in terms.iter_mut() {
                h.matvec_into(t, &mut scratch);
                for (ti, si) in t.iter_mut().zip(&scratch) {
                    *ti = si / lambda_l;
                }
            }
        }
        for t in &terms {
            for (s, ti) in sum.iter_mut().zip(t) {
                *s += ti;
            }
        }
        sums.push(DenseVector::from_vec_unchecked(sum.clone()));
    }
    Ok(sums)
}

/// The `K`-truncated series for `u_l`.
pub fn neumann_reconstruct(
    h: &DenseMatrix,
    signal: &SignalSpec,
    lambda_l: f64,
    u_l: &DenseVector,
    k: usize,
) -> Result<DenseVector> {
    let mut sums = neumann_partial_sums(h, signal, lambda_l, u_l, k)?;
    Ok(sums.pop().expect("at least one partial sum"))
}

/// Upper bound `C·q^{K+1}/(1 − q)` on the truncation error, with
/// `q = ‖H‖/|λ_l|` and `C = Σ_j |λ*_j/λ_l|`.
pub fn neumann_tail_bound(norm_h: f64, lambda_l: f64, lambda_star: &[f64], k: usize) -> Result<f64> {
    let q = norm_h / lambda_l.abs();
    if !(0.0..1.0).contains(&q) {
        return Err(Error::Regime(format!("ratio ‖H‖/|λ_l| = {q} is not in [0, 1)")));
    }
    let c: f64 = lambda_star.iter().map(|l| (l / lambda_l).abs()).sum();
    Ok(c * q.powi(k as i32 + 1) / (1.0 - q))
}

/// One non-empty magnitude band.
#[derive(Debug, Clone, PartialEq)]
pub struct Band {
    /// 1-based band index; `m + 1` is the final band.
    pub index: usize,
    /// Coordinates of the vector that fall in this band.
    pub support: Vec<usize>,
    /// The vector restricted to `support`, zero elsewhere.
    pub vector: DenseVector,
}

impl Band {
    /// `‖b‖∞·√‖b‖₀`.
    pub fn spread(&self) -> f64 {
        self.vector.inf_norm() * (self.vector.l0() as f64).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BandDecomposition {
    pub n: usize,
    /// Number of magnitude bands before the final one, `⌈ln n / 2⌉`.
    pub m: usize,
    /// Band index of every coordinate; 0 for zero entries, which belong to
    /// no band.
    pub assignment: Vec<usize>,
    pub bands: Vec<Band>,
}

impl BandDecomposition {
    pub fn band_count(&self) -> usize {
        self.bands.len()
    }

    /// Sum of the bands, which reproduces the input.
    pub fn reconstruct(&self) -> DenseVector {
        let mut out = vec![0.0; self.n];
        for band in &self.bands {
            for &i in &band.support {
                out[i] += band.vector[i];
            }
        }
        DenseVector::from_vec_unchecked(out)
    }
}

/// `⌈ln n / 2⌉`.
pub fn band_limit(n: usize) -> usize {
    ((n as f64).ln() / 2.0).ceil().max(0.0) as usize
}

/// Band of a magnitude `v ∈ [0, 1]`: `r` when `v ∈ (e^{-r}, e^{-r+1}]` and
/// `r ≤ m`, otherwise `m + 1`.
pub fn band_of(v: f64, m: usize) -> usize {
    let v = v.abs();
    if v <= (-(m as f64)).exp() {
        return m + 1;
    }
    let mut r = ((-v.ln()).floor() as i64 + 1).max(1) as usize;
    while v <= (-(r as f64)).exp() {
        r += 1;
    }
    while r > 1 && v > (-(r as f64 - 1.0)).exp() {
        r -= 1;
    }
    r.min(m + 1)
}

/// Splits a unit vector into bands of comparable magnitude.
pub fn band_decompose(x: &DenseVector) -> Result<BandDecomposition> {
    let norm = x.norm2();
    if (norm - 1.0).abs() > UNIT_TOL {
        return Err(Error::invalid(format!("band decomposition needs a unit vector, norm is {norm}")));
    }
    let n = x.len();
    let m = band_limit(n);
    let assignment: Vec<usize> = x
        .iter()
        .map(|v| if *v == 0.0 { 0 } else { band_of(*v, m) })
        .collect();
    let mut bands = Vec::new();
    for index in 1..=m + 1 {
        let support: Vec<usize> = (0..n).filter(|&i| assignment[i] == index).collect();
        if support.is_empty() {
            continue;
        }
        let mut v = vec![0.0; n];
        for &i in &support {
            v[i] = x[i];
        }
        bands.push(Band {
            index,
            support,
            vector: DenseVector::from_vec_unchecked(v),
        });
    }
    Ok(BandDecomposition {
        n,
        m,
        assignment,
        bands,
    })
}
