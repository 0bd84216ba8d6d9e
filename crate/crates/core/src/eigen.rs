//! Leading-eigenpair and full-spectrum solvers for dense real matrices.
//!
//! * [`leading_eigenpair`]: power iteration with a Rayleigh-quotient
//!   eigenvalue, the estimator used by the experiments.
//! * [`full_spectrum`]: balancing, Householder reduction to upper
//!   Hessenberg form and Francis double-shift QR. Eigenvectors of real
//!   eigenvalues come from inverse iteration on the original matrix.
//! * [`symmetric_spectrum`]: cyclic Jacobi rotations.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{dot, norm2, DenseMatrix, DenseVector};
use crate::rng::RandomSource;

/// `|Im λ| ≤ REALNESS_TOL·(1 + |λ|)` classifies an eigenvalue as real.
pub const REALNESS_TOL: f64 = 1e-8;

/// Relative deflation threshold for the QR sweep.
const DEFLATION_TOL: f64 = 1e-14;

/// Iterations allowed per eigenvalue before the QR sweep gives up.
const QR_ITERS_PER_EIGENVALUE: usize = 60;

/// Largest order accepted by the dense solvers.
pub const DENSE_LIMIT: usize = 2000;

const START_RETRIES: usize = 5;
const MIN_START_ALIGNMENT: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct EigenEstimate {
    /// Sorted by descending modulus; ties broken by real then imaginary part.
    pub eigenvalues: Vec<Complex64>,
    /// Unit eigenvector for every eigenvalue classified as real.
    pub eigenvectors: Vec<Option<DenseVector>>,
    /// `‖Au − λu‖₂` for every stored eigenvector.
    pub residuals: Vec<Option<f64>>,
}

impl EigenEstimate {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn is_real(&self, i: usize) -> bool {
        is_real(self.eigenvalues[i])
    }

    /// Real parts of all eigenvalues, in stored order.
    pub fn real_parts(&self) -> Vec<f64> {
        self.eigenvalues.iter().map(|z| z.re).collect()
    }
}

pub fn is_real(z: Complex64) -> bool {
    z.im.abs() <= REALNESS_TOL * (1.0 + z.norm())
}

/// Dominant eigenpair by power iteration.
///
/// The start vector is drawn uniformly from the sphere using `src`; a start
/// that `A` nearly annihilates is redrawn up to five times. Iteration stops
/// when `‖Au − λu‖₂ ≤ tol·|λ|` with `λ = uᵀAu`. The returned vector has its
/// first nonzero entry positive.
pub fn leading_eigenpair(
    a: &DenseMatrix,
    tol: f64,
    max_iter: usize,
    src: &mut RandomSource,
) -> Result<(f64, DenseVector)> {
    require_square(a, "leading_eigenpair")?;
    if !(tol > 0.0) {
        return Err(Error::invalid("tolerance must be positive"));
    }
    let n = a.rows();
    let scale = a.frobenius_norm();
    if scale == 0.0 {
        return Ok((0.0, DenseVector::basis(n, 0)));
    }

    let mut u = src.sphere(n)?.into_vec();
    let mut w = vec![0.0; n];
    a.matvec_into(&u, &mut w);
    let mut attempts = 1;
    while norm2(&w) < MIN_START_ALIGNMENT * scale && attempts < START_RETRIES {
        u = src.sphere(n)?.into_vec();
        a.matvec_into(&u, &mut w);
        attempts += 1;
    }

    let mut residual = f64::INFINITY;
    for _ in 0..max_iter {
        // Invariant: ‖u‖ = 1 and w = A u.
        let lambda = dot(&u, &w);
        residual = u
            .iter()
            .zip(&w)
            .map(|(ui, wi)| (wi - lambda * ui).powi(2))
            .sum::<f64>()
            .sqrt();
        if residual <= tol * lambda.abs() || residual == 0.0 {
            let mut v = DenseVector::from_vec_unchecked(u);
            fix_sign(&mut v);
            return Ok((lambda, v));
        }
        let nw = norm2(&w);
        if nw == 0.0 {
            break;
        }
        for (ui, wi) in u.iter_mut().zip(&w) {
            *ui = wi / nw;
        }
        a.matvec_into(&u, &mut w);
    }
    Err(Error::NoConvergence {
        what: "power iteration",
        iterations: max_iter,
        residual,
    })
}

/// All eigenvalues of a square matrix, with eigenvectors for the real ones.
pub fn full_spectrum(a: &DenseMatrix, tol: f64) -> Result<EigenEstimate> {
    let n = a.rows();
    spectrum_with_vectors(a, tol, n)
}

/// The `r` eigenvalues of largest modulus, with eigenvectors for the real ones.
pub fn top_r_real(a: &DenseMatrix, r: usize, tol: f64) -> Result<EigenEstimate> {
    if r == 0 || r > a.rows() {
        return Err(Error::invalid(format!(
            "r = {r} must lie in 1..={}",
            a.rows()
        )));
    }
    let mut est = spectrum_with_vectors(a, tol, r)?;
    est.eigenvalues.truncate(r);
    est.eigenvectors.truncate(r);
    est.residuals.truncate(r);
    Ok(est)
}

/// Eigenvalues of a square matrix, sorted by descending modulus.
pub fn eigenvalues(a: &DenseMatrix) -> Result<Vec<Complex64>> {
    require_square(a, "eigenvalues")?;
    if a.rows() > DENSE_LIMIT {
        return Err(Error::invalid(format!(
            "order {} exceeds dense limit {DENSE_LIMIT}",
            a.rows()
        )));
    }
    let mut h = a.clone();
    balance(&mut h);
    hessenberg(&mut h);
    let mut values = francis_qr(&mut h)?;
    merge_split_multiples(a, &mut values);
    sort_by_modulus(&mut values);
    Ok(values)
}

/// Clusters wider than this (relative to `‖A‖_F`) are left alone.
const CLUSTER_RADIUS: f64 = 1e-4;

/// Rounding splits a defective eigenvalue into a ring of `r` values of radius
/// about `ε^{1/r}‖A‖` (further copies may land on the centre exactly), while
/// the centre stays accurate to `ε`. A cluster is replaced by its centre `c`
/// when `c` is real, `A − cI` has a real null vector up to rounding, and the
/// deviations off the centre have nearly equal `r`-th powers within that
/// radius. If some members already sit on `c` the ring must be non-real,
/// since `c` is then an eigenvalue regardless and close real eigenvalues
/// around it are kept.
fn merge_split_multiples(a: &DenseMatrix, values: &mut [Complex64]) {
    let scale = a.frobenius_norm();
    if scale == 0.0 || values.len() < 2 {
        return;
    }
    let radius = CLUSTER_RADIUS * scale;
    let mut cluster_of: Vec<usize> = (0..values.len()).collect();
    // Single-link clustering; the spectra handled here are small.
    for i in 0..values.len() {
        for j in 0..i {
            if (values[i] - values[j]).norm() <= radius {
                let (from, to) = (cluster_of[i], cluster_of[j]);
                for c in cluster_of.iter_mut() {
                    if *c == from {
                        *c = to;
                    }
                }
            }
        }
    }
    for label in 0..values.len() {
        let members: Vec<usize> = (0..values.len()).filter(|&i| cluster_of[i] == label).collect();
        let k = members.len();
        if k < 2 {
            continue;
        }
        let centre = members.iter().map(|&i| values[i]).sum::<Complex64>() / k as f64;
        let exact = 1e3 * f64::EPSILON * scale;
        if centre.im.abs() > exact {
            continue;
        }
        let ring: Vec<Complex64> = members
            .iter()
            .map(|&i| values[i] - centre)
            .filter(|d| d.norm() > exact)
            .collect();
        let r = ring.len();
        if r < 2 || (r < k && ring.iter().any(|d| d.im.abs() <= exact)) {
            continue;
        }
        if ring.iter().any(|d| d.norm() > (1e3 * f64::EPSILON).powf(1.0 / r as f64) * scale) {
            continue;
        }
        let powers: Vec<Complex64> = ring.iter().map(|d| d.powi(r as i32)).collect();
        let mean_power = powers.iter().sum::<Complex64>() / r as f64;
        if powers.iter().any(|p| (p - mean_power).norm() > 0.1 * mean_power.norm()) {
            continue;
        }
        let Ok((_, res)) = inverse_iteration(a, centre.re, f64::EPSILON) else {
            continue;
        };
        if res <= exact {
            for &i in &members {
                values[i] = Complex64::new(centre.re, 0.0);
            }
        }
    }
}

fn spectrum_with_vectors(a: &DenseMatrix, tol: f64, count: usize) -> Result<EigenEstimate> {
    if !(tol > 0.0) {
        return Err(Error::invalid("tolerance must be positive"));
    }
    let values = eigenvalues(a)?;
    let mut vectors = Vec::with_capacity(values.len());
    let mut residuals = Vec::with_capacity(values.len());
    for (i, z) in values.iter().enumerate() {
        if i < count && is_real(*z) {
            let (v, res) = inverse_iteration(a, z.re, tol)?;
            vectors.push(Some(v));
            residuals.push(Some(res));
        } else {
            vectors.push(None);
            residuals.push(None);
        }
    }
    Ok(EigenEstimate {
        eigenvalues: values,
        eigenvectors: vectors,
        residuals,
    })
}

/// Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.
pub fn symmetric_spectrum(s: &DenseMatrix, tol: f64) -> Result<EigenEstimate> {
    require_square(s, "symmetric_spectrum")?;
    let scale = s.entrywise_inf_norm();
    let asym = s.max_asymmetry();
    if asym > 1e-12 * scale.max(1.0) {
        return Err(Error::NotSymmetric { asymmetry: asym });
    }
    if !(tol > 0.0) {
        return Err(Error::invalid("tolerance must be positive"));
    }
    let n = s.rows();
    let mut a = s.clone();
    // Symmetrise exactly so rounding in the input cannot bias the rotations.
    for i in 0..n {
        for j in (i + 1)..n {
            let m = 0.5 * (a[(i, j)] + a[(j, i)]);
            a[(i, j)] = m;
            a[(j, i)] = m;
        }
    }
    let mut v = DenseMatrix::identity(n);
    let frob = a.frobenius_norm();
    let threshold = tol.clamp(f64::EPSILON, 1e-14) * frob;

    let mut converged = n == 1 || frob == 0.0;
    for _sweep in 0..100 {
        if converged {
            break;
        }
        let off = off_diagonal_norm(&a);
        if off <= threshold {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let sn = t * c;
                rotate_columns(&mut a, p, q, c, sn);
                rotate_rows(&mut a, p, q, c, sn);
                rotate_columns(&mut v, p, q, c, sn);
                a[(p, q)] = 0.0;
                a[(q, p)] = 0.0;
            }
        }
    }
    if !converged {
        let off = off_diagonal_norm(&a);
        if off > threshold {
            return Err(Error::NoConvergence {
                what: "Jacobi sweep",
                iterations: 100,
                residual: off,
            });
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        let (x, y) = (a[(i, i)], a[(j, j)]);
        y.abs()
            .partial_cmp(&x.abs())
            .unwrap()
            .then(y.partial_cmp(&x).unwrap())
    });
    let mut eigenvalues = Vec::with_capacity(n);
    let mut eigenvectors = Vec::with_capacity(n);
    let mut residuals = Vec::with_capacity(n);
    for &i in &order {
        let lambda = a[(i, i)];
        let mut u = v.column(i);
        fix_sign(&mut u);
        let res = residual(s, lambda, &u);
        eigenvalues.push(Complex64::new(lambda, 0.0));
        eigenvectors.push(Some(u));
        residuals.push(Some(res));
    }
    Ok(EigenEstimate {
        eigenvalues,
        eigenvectors,
        residuals,
    })
}

fn off_diagonal_norm(a: &DenseMatrix) -> f64 {
    let n = a.rows();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += a[(i, j)] * a[(i, j)];
            }
        }
    }
    s.sqrt()
}

fn rotate_columns(a: &mut DenseMatrix, p: usize, q: usize, c: f64, s: f64) {
    for k in 0..a.rows() {
        let (akp, akq) = (a[(k, p)], a[(k, q)]);
        a[(k, p)] = c * akp - s * akq;
        a[(k, q)] = s * akp + c * akq;
    }
}

fn rotate_rows(a: &mut DenseMatrix, p: usize, q: usize, c: f64, s: f64) {
    for k in 0..a.cols() {
        let (apk, aqk) = (a[(p, k)], a[(q, k)]);
        a[(p, k)] = c * apk - s * aqk;
        a[(q, k)] = s * apk + c * aqk;
    }
}

/// `‖Au − λu‖₂`.
pub fn residual(a: &DenseMatrix, lambda: f64, u: &DenseVector) -> f64 {
    let n = a.rows();
    let mut w = vec![0.0; n];
    a.matvec_into(u.as_slice(), &mut w);
    w.iter()
        .zip(u.iter())
        .map(|(wi, ui)| (wi - lambda * ui).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// Makes the first entry that is nonzero at working precision positive.
pub(crate) fn fix_sign(u: &mut DenseVector) {
    let cutoff = 1e-12 * u.inf_norm();
    if let Some(first) = u.iter().copied().find(|x| x.abs() > cutoff) {
        if first < 0.0 {
            u.as_mut_slice().iter_mut().for_each(|x| *x = -*x);
        }
    }
}

fn sort_by_modulus(values: &mut [Complex64]) {
    values.sort_by(|a, b| {
        b.norm()
            .partial_cmp(&a.norm())
            .unwrap()
            .then(b.re.partial_cmp(&a.re).unwrap())
            .then(b.im.partial_cmp(&a.im).unwrap())
    });
}

fn require_square(a: &DenseMatrix, op: &'static str) -> Result<()> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch {
            op,
            expected: a.rows(),
            found: a.cols(),
        });
    }
    Ok(())
}

/// Diagonal similarity by powers of two so rows and columns have comparable
/// norms. Exact in floating point; eigenvalues are unchanged.
fn balance(a: &mut DenseMatrix) {
    const RADIX: f64 = 2.0;
    let n = a.rows();
    let sqrdx = RADIX * RADIX;
    let mut done = false;
    while !done {
        done = true;
        for i in 0..n {
            let mut r = 0.0;
            let mut c = 0.0;
            for j in 0..n {
                if j != i {
                    c += a[(j, i)].abs();
                    r += a[(i, j)].abs();
                }
            }
            if c != 0.0 && r != 0.0 {
                let mut g = r / RADIX;
                let mut f = 1.0;
                let s = c + r;
                while c < g {
                    f *= RADIX;
                    c *= sqrdx;
                }
                g = r * RADIX;
                while c > g {
                    f /= RADIX;
                    c /= sqrdx;
                }
                if (c + r) / f < 0.95 * s {
                    done = false;
                    let g = 1.0 / f;
                    for j in 0..n {
                        a[(i, j)] *= g;
                    }
                    for j in 0..n {
                        a[(j, i)] *= f;
                    }
                }
            }
        }
    }
}

/// In-place Householder reduction to upper Hessenberg form.
fn hessenberg(a: &mut DenseMatrix) {
    let n = a.rows();
    if n < 3 {
        return;
    }
    let mut v = vec![0.0; n];
    for k in 0..n - 2 {
        let len = n - k - 1;
        let x: Vec<f64> = (0..len).map(|i| a[(k + 1 + i, k)]).collect();
        let xnorm = norm2(&x);
        if xnorm == 0.0 {
            continue;
        }
        let alpha = if x[0] >= 0.0 { -xnorm } else { xnorm };
        v[..len].copy_from_slice(&x);
        v[0] -= alpha;
        let vnorm = norm2(&v[..len]);
        if vnorm == 0.0 {
            continue;
        }
        v[..len].iter_mut().for_each(|e| *e /= vnorm);
        let vk = &v[..len];

        // A ← (I − 2vvᵀ) A on rows k+1..n
        for j in k..n {
            let s: f64 = (0..len).map(|i| vk[i] * a[(k + 1 + i, j)]).sum();
            if s != 0.0 {
                for i in 0..len {
                    a[(k + 1 + i, j)] -= 2.0 * s * vk[i];
                }
            }
        }
        // A ← A (I − 2vvᵀ) on columns k+1..n
        for i in 0..n {
            let s: f64 = (0..len).map(|j| a[(i, k + 1 + j)] * vk[j]).sum();
            if s != 0.0 {
                for j in 0..len {
                    a[(i, k + 1 + j)] -= 2.0 * s * vk[j];
                }
            }
        }
        a[(k + 1, k)] = alpha;
        for i in (k + 2)..n {
            a[(i, k)] = 0.0;
        }
    }
}

/// Francis double-shift QR on an upper Hessenberg matrix, overwriting it.
fn francis_qr(a: &mut DenseMatrix) -> Result<Vec<Complex64>> {
    let n = a.rows();
    let mut out = vec![Complex64::new(0.0, 0.0); n];
    let mut anorm = 0.0;
    for i in 0..n {
        for j in i.saturating_sub(1)..n {
            anorm += a[(i, j)].abs();
        }
    }
    if anorm == 0.0 {
        return Ok(out);
    }

    let mut nn = n as isize - 1;
    let mut t = 0.0;
    let (mut p, mut q, mut r): (f64, f64, f64);
    let (mut x, mut y, mut z, mut w);
    while nn >= 0 {
        let mut its = 0;
        loop {
            let nu = nn as usize;
            // Look for a single small subdiagonal element.
            let mut l = nu;
            while l > 0 {
                let mut s = a[(l - 1, l - 1)].abs() + a[(l, l)].abs();
                if s == 0.0 {
                    s = anorm;
                }
                if a[(l, l - 1)].abs() <= DEFLATION_TOL * s {
                    a[(l, l - 1)] = 0.0;
                    break;
                }
                l -= 1;
            }
            x = a[(nu, nu)];
            if l == nu {
                out[nu] = Complex64::new(x + t, 0.0);
                nn -= 1;
                break;
            }
            y = a[(nu - 1, nu - 1)];
            w = a[(nu, nu - 1)] * a[(nu - 1, nu)];
            if l + 1 == nu {
                p = 0.5 * (y - x);
                q = p * p + w;
                z = q.abs().sqrt();
                x += t;
                if q >= 0.0 {
                    z = p + z.copysign(p);
                    out[nu - 1] = Complex64::new(x + z, 0.0);
                    out[nu] = out[nu - 1];
                    if z != 0.0 {
                        out[nu] = Complex64::new(x - w / z, 0.0);
                    }
                } else {
                    out[nu] = Complex64::new(x + p, -z);
                    out[nu - 1] = Complex64::new(x + p, z);
                }
                nn -= 2;
                break;
            }

            if its == QR_ITERS_PER_EIGENVALUE {
                return Err(Error::NoConvergence {
                    what: "Francis QR",
                    iterations: its,
                    residual: a[(nu, nu - 1)].abs(),
                });
            }
            if its > 0 && its % 10 == 0 {
                // Exceptional shift.
                t += x;
                for i in 0..=nu {
                    a[(i, i)] -= x;
                }
                let s = a[(nu, nu - 1)].abs() + a[(nu - 1, nu - 2)].abs();
                x = 0.75 * s;
                y = x;
                w = -0.4375 * s * s;
            }
            its += 1;

            // Look for two consecutive small subdiagonal elements.
            let mut m = nu - 2;
            loop {
                z = a[(m, m)];
                r = x - z;
                let s0 = y - z;
                p = (r * s0 - w) / a[(m + 1, m)] + a[(m, m + 1)];
                q = a[(m + 1, m + 1)] - z - r - s0;
                r = a[(m + 2, m + 1)];
                let s = p.abs() + q.abs() + r.abs();
                p /= s;
                q /= s;
                r /= s;
                if m == l {
                    break;
                }
                let u = a[(m, m - 1)].abs() * (q.abs() + r.abs());
                let v = p.abs() * (a[(m - 1, m - 1)].abs() + z.abs() + a[(m + 1, m + 1)].abs());
                if u <= f64::EPSILON * v {
                    break;
                }
                m -= 1;
            }
            for i in m..nu - 1 {
                a[(i + 2, i)] = 0.0;
                if i != m {
                    a[(i + 2, i - 1)] = 0.0;
                }
            }
            // Double QR step on rows l..=nn and columns m..=nn.
            let mut k = m;
            while k < nu {
                if k != m {
                    p = a[(k, k - 1)];
                    q = a[(k + 1, k - 1)];
                    r = 0.0;
                    if k + 1 != nu {
                        r = a[(k + 2, k - 1)];
                    }
                    x = p.abs() + q.abs() + r.abs();
                    if x != 0.0 {
                        p /= x;
                        q /= x;
                        r /= x;
                    }
                }
                let s = (p * p + q * q + r * r).sqrt().copysign(p);
                if s != 0.0 {
                    if k == m {
                        if l != m {
                            a[(k, k - 1)] = -a[(k, k - 1)];
                        }
                    } else {
                        a[(k, k - 1)] = -s * x;
                    }
                    p += s;
                    x = p / s;
                    y = q / s;
                    z = r / s;
                    q /= p;
                    r /= p;
                    for j in k..=nu {
                        p = a[(k, j)] + q * a[(k + 1, j)];
                        if k + 1 != nu {
                            p += r * a[(k + 2, j)];
                            a[(k + 2, j)] -= p * z;
                        }
                        a[(k + 1, j)] -= p * y;
                        a[(k, j)] -= p * x;
                    }
                    let mmin = if nu < k + 3 { nu } else { k + 3 };
                    for i in l..=mmin {
                        p = x * a[(i, k)] + y * a[(i, k + 1)];
                        if k + 1 != nu {
                            p += z * a[(i, k + 2)];
                            a[(i, k + 2)] -= p * r;
                        }
                        a[(i, k + 1)] -= p * q;
                        a[(i, k)] -= p;
                    }
                }
                k += 1;
            }
        }
    }
    Ok(out)
}

/// Unit eigenvector for a real eigenvalue estimate via shifted inverse
/// iteration on `a`. Returns the vector and its residual.
fn inverse_iteration(a: &DenseMatrix, lambda: f64, tol: f64) -> Result<(DenseVector, f64)> {
    let n = a.rows();
    let scale = a.frobenius_norm().max(1.0);
    // Nudge the shift off the eigenvalue so the factorisation stays finite.
    let shift = lambda + 16.0 * f64::EPSILON * scale;
    let mut m = a.clone();
    for i in 0..n {
        m[(i, i)] -= shift;
    }
    let lu = Lu::factor(m, scale);
    let mut x: Vec<f64> = (0..n)
        .map(|i| 1.0 + ((i as f64 + 1.0) * 0.754_877_666).fract())
        .collect();
    let mut best: Option<(DenseVector, f64)> = None;
    for _ in 0..6 {
        lu.solve_in_place(&mut x);
        let nx = norm2(&x);
        if !nx.is_finite() || nx == 0.0 {
            break;
        }
        x.iter_mut().for_each(|e| *e /= nx);
        let mut u = DenseVector::from_vec_unchecked(x.clone());
        fix_sign(&mut u);
        let res = residual(a, lambda, &u);
        let better = best.as_ref().is_none_or(|(_, r)| res < *r);
        if better {
            best = Some((u, res));
        }
        if res <= tol * lambda.abs().max(1.0) {
            break;
        }
    }
    best.ok_or(Error::NoConvergence {
        what: "inverse iteration",
        iterations: 6,
        residual: f64::INFINITY,
    })
}

/// LU factorisation with partial pivoting; zero pivots are replaced by a
/// tiny multiple of the matrix scale, as inverse iteration expects.
struct Lu {
    lu: DenseMatrix,
    perm: Vec<usize>,
}

impl Lu {
    fn factor(mut a: DenseMatrix, scale: f64) -> Self {
        let n = a.rows();
        let mut perm: Vec<usize> = (0..n).collect();
        let tiny = f64::EPSILON * scale;
        for k in 0..n {
            let mut piv = k;
            let mut best = a[(k, k)].abs();
            for i in (k + 1)..n {
                if a[(i, k)].abs() > best {
                    best = a[(i, k)].abs();
                    piv = i;
                }
            }
            if piv != k {
                perm.swap(k, piv);
                for j in 0..n {
                    let tmp = a[(k, j)];
                    a[(k, j)] = a[(piv, j)];
                    a[(piv, j)] = tmp;
                }
            }
            if a[(k, k)].abs() < tiny {
                a[(k, k)] = if a[(k, k)] < 0.0 { -tiny } else { tiny };
            }
            let pivot = a[(k, k)];
            for i in (k + 1)..n {
                let f = a[(i, k)] / pivot;
                a[(i, k)] = f;
                if f != 0.0 {
                    for j in (k + 1)..n {
                        a[(i, j)] -= f * a[(k, j)];
                    }
                }
            }
        }
        Self { lu: a, perm }
    }

    fn solve_in_place(&self, b: &mut [f64]) {
        let n = b.len();
        let mut y: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let s: f64 = (0..i).map(|j| self.lu[(i, j)] * y[j]).sum();
            y[i] -= s;
        }
        for i in (0..n).rev() {
            let s: f64 = ((i + 1)..n).map(|j| self.lu[(i, j)] * y[j]).sum();
            y[i] = (y[i] - s) / self.lu[(i, i)];
        }
        b.copy_from_slice(&y);
    }
}
