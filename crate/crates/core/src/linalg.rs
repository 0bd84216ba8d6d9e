//! Dense real vectors and matrices.
//!
//! Storage is row-major `f64`. Constructors reject empty shapes and
//! non-finite entries, so every value that escapes this module is a valid
//! operand for the rest of the crate.

use std::ops::{Index, IndexMut};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct DenseVector {
    data: Vec<f64>,
}

impl DenseVector {
    pub fn new(data: Vec<f64>) -> Result<Self> {
        if data.is_empty() {
            return Err(Error::invalid("vector must have at least one entry"));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("non-finite vector entry at {i}")));
        }
        Ok(Self { data })
    }

    /// Builds a vector without validation. Callers guarantee `n >= 1` and
    /// finite entries.
    pub(crate) fn from_vec_unchecked(data: Vec<f64>) -> Self {
        debug_assert!(!data.is_empty());
        Self { data }
    }

    pub fn zeros(n: usize) -> Self {
        assert!(n >= 1, "vector length must be positive");
        Self { data: vec![0.0; n] }
    }

    /// Standard basis vector `e_i` of length `n`.
    pub fn basis(n: usize, i: usize) -> Self {
        let mut v = Self::zeros(n);
        v.data[i] = 1.0;
        v
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn iter(&self) -> std::slice::Iter<'_, f64> {
        self.data.iter()
    }

    pub fn dot(&self, other: &DenseVector) -> Result<f64> {
        check_len("dot", self.len(), other.len())?;
        Ok(dot(&self.data, &other.data))
    }

    pub fn norm2(&self) -> f64 {
        norm2(&self.data)
    }

    pub fn inf_norm(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Number of nonzero entries.
    pub fn l0(&self) -> usize {
        self.data.iter().filter(|v| **v != 0.0).count()
    }

    pub fn normalize(&self) -> Result<DenseVector> {
        let nrm = self.norm2();
        if nrm == 0.0 {
            return Err(Error::invalid("cannot normalize the zero vector"));
        }
        Ok(Self::from_vec_unchecked(
            self.data.iter().map(|v| v / nrm).collect(),
        ))
    }

    pub fn scaled(&self, alpha: f64) -> DenseVector {
        Self::from_vec_unchecked(self.data.iter().map(|v| v * alpha).collect())
    }

    /// `self + alpha * other`
    pub fn add_scaled(&self, alpha: f64, other: &DenseVector) -> Result<DenseVector> {
        check_len("add_scaled", self.len(), other.len())?;
        Ok(Self::from_vec_unchecked(
            self.data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + alpha * b)
                .collect(),
        ))
    }

    pub fn sub(&self, other: &DenseVector) -> Result<DenseVector> {
        self.add_scaled(-1.0, other)
    }

    /// Euclidean distance to `other`.
    pub fn distance(&self, other: &DenseVector) -> Result<f64> {
        check_len("distance", self.len(), other.len())?;
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt())
    }

    /// `min(‖self − other‖, ‖self + other‖)`.
    pub fn sign_invariant_distance(&self, other: &DenseVector) -> Result<f64> {
        let minus = self.distance(other)?;
        let plus = self.add_scaled(1.0, other)?.norm2();
        Ok(minus.min(plus))
    }
}

impl Index<usize> for DenseVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.data[i]
    }
}

impl IndexMut<usize> for DenseVector {
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        &mut self.data[i]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::invalid("matrix dimensions must be positive"));
        }
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                op: "DenseMatrix::new",
                expected: rows * cols,
                found: data.len(),
            });
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!(
                "non-finite matrix entry at ({}, {})",
                i / cols,
                i % cols
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub(crate) fn from_vec_unchecked(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), rows * cols);
        Self { rows, cols, data }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n_rows = rows.len();
        let n_cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != n_cols) {
            return Err(Error::invalid("ragged rows"));
        }
        Self::new(n_rows, n_cols, rows.concat())
    }

    /// Parses the text format: a `rows cols` line, then one line of
    /// whitespace-separated decimals per row. Blank lines are ignored.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
        let header = lines.next().ok_or_else(|| Error::invalid("empty matrix file"))?;
        let dims: Vec<usize> = header
            .split_whitespace()
            .map(|t| t.parse::<usize>().map_err(|_| Error::invalid(format!("bad dimension '{t}'"))))
            .collect::<Result<_>>()?;
        let [rows, cols] = dims[..] else {
            return Err(Error::invalid("header must be 'rows cols'"));
        };
        let mut data = Vec::with_capacity(rows * cols);
        let mut seen = 0;
        for line in lines {
            let before = data.len();
            for t in line.split_whitespace() {
                data.push(t.parse::<f64>().map_err(|_| Error::invalid(format!("bad number '{t}'")))?);
            }
            if data.len() - before != cols {
                return Err(Error::invalid(format!("row {seen} has {} entries, expected {cols}", data.len() - before)));
            }
            seen += 1;
        }
        if seen != rows {
            return Err(Error::invalid(format!("found {seen} rows, expected {rows}")));
        }
        Self::new(rows, cols, data)
    }

    /// Inverse of [`DenseMatrix::from_text`]; values round-trip exactly.
    pub fn to_text(&self) -> String {
        let mut out = format!("{} {}\n", self.rows, self.cols);
        for i in 0..self.rows {
            let row: Vec<String> = self.data[i * self.cols..(i + 1) * self.cols].iter().map(|v| v.to_string()).collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
        out
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self::new(rows, cols, data)
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows >= 1 && cols >= 1, "matrix dimensions must be positive");
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn diag(values: &[f64]) -> Result<Self> {
        let n = values.len();
        Self::from_fn(n, n, |i, j| if i == j { values[i] } else { 0.0 })
    }

    /// Matrix whose columns are the given vectors.
    pub fn from_columns(cols: &[DenseVector]) -> Result<Self> {
        let n_cols = cols.len();
        let n_rows = cols.first().map_or(0, DenseVector::len);
        if cols.iter().any(|c| c.len() != n_rows) {
            return Err(Error::invalid("columns have different lengths"));
        }
        Self::from_fn(n_rows, n_cols, |i, j| cols[j][i])
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> DenseVector {
        DenseVector::from_vec_unchecked((0..self.rows).map(|i| self[(i, j)]).collect())
    }

    pub fn transpose(&self) -> DenseMatrix {
        let mut out = vec![0.0; self.data.len()];
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        Self::from_vec_unchecked(self.cols, self.rows, out)
    }

    pub fn matvec(&self, x: &DenseVector) -> Result<DenseVector> {
        check_len("matvec", self.cols, x.len())?;
        let mut y = vec![0.0; self.rows];
        self.matvec_into(x.as_slice(), &mut y);
        Ok(DenseVector::from_vec_unchecked(y))
    }

    /// `y ← A x` on raw slices; lengths are the caller's responsibility.
    pub(crate) fn matvec_into(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.cols);
        debug_assert_eq!(y.len(), self.rows);
        for (yi, row) in y.iter_mut().zip(self.data.chunks_exact(self.cols)) {
            *yi = dot(row, x);
        }
    }

    /// `y ← Aᵀ x` on raw slices.
    pub(crate) fn matvec_transpose_into(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.rows);
        debug_assert_eq!(y.len(), self.cols);
        y.iter_mut().for_each(|v| *v = 0.0);
        for (xi, row) in x.iter().zip(self.data.chunks_exact(self.cols)) {
            if *xi != 0.0 {
                for (yj, a) in y.iter_mut().zip(row) {
                    *yj += xi * a;
                }
            }
        }
    }

    pub fn matvec_transpose(&self, x: &DenseVector) -> Result<DenseVector> {
        check_len("matvec_transpose", self.rows, x.len())?;
        let mut y = vec![0.0; self.cols];
        self.matvec_transpose_into(x.as_slice(), &mut y);
        Ok(DenseVector::from_vec_unchecked(y))
    }

    pub fn matmul(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        check_len("matmul", self.cols, other.rows)?;
        let (n, m) = (self.rows, other.cols);
        let mut out = vec![0.0; n * m];
        for i in 0..n {
            let out_row = &mut out[i * m..(i + 1) * m];
            for (k, a) in self.row(i).iter().enumerate() {
                if *a == 0.0 {
                    continue;
                }
                for (o, b) in out_row.iter_mut().zip(other.row(k)) {
                    *o += a * b;
                }
            }
        }
        Ok(Self::from_vec_unchecked(n, m, out))
    }

    pub fn add(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        self.zip_with(other, "add", |a, b| a + b)
    }

    pub fn sub(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        self.zip_with(other, "sub", |a, b| a - b)
    }

    pub fn scaled(&self, alpha: f64) -> DenseMatrix {
        Self::from_vec_unchecked(
            self.rows,
            self.cols,
            self.data.iter().map(|v| v * alpha).collect(),
        )
    }

    fn zip_with(
        &self,
        other: &DenseMatrix,
        op: &'static str,
        f: impl Fn(f64, f64) -> f64,
    ) -> Result<DenseMatrix> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::DimensionMismatch {
                op,
                expected: self.data.len(),
                found: other.data.len(),
            });
        }
        Ok(Self::from_vec_unchecked(
            self.rows,
            self.cols,
            self.data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| f(*a, *b))
                .collect(),
        ))
    }

    /// Rank-one update `self + alpha * x yᵀ`.
    pub fn add_outer(&self, alpha: f64, x: &DenseVector, y: &DenseVector) -> Result<DenseMatrix> {
        check_len("add_outer", self.rows, x.len())?;
        check_len("add_outer", self.cols, y.len())?;
        let mut out = self.clone();
        for i in 0..self.rows {
            let xi = alpha * x[i];
            for (o, yj) in out.data[i * self.cols..(i + 1) * self.cols]
                .iter_mut()
                .zip(y.iter())
            {
                *o += xi * yj;
            }
        }
        Ok(out)
    }

    /// Largest absolute entry, `‖A‖_∞` in the entrywise sense.
    pub fn entrywise_inf_norm(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Largest row ℓ₂ norm, `‖A‖_{2,∞}`.
    pub fn row_two_inf_norm(&self) -> f64 {
        self.data
            .chunks_exact(self.cols)
            .map(norm2)
            .fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        norm2(&self.data)
    }

    pub fn trace(&self) -> f64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    /// `max |A_ij − A_ji|`; infinite for non-square input.
    pub fn max_asymmetry(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let n = self.rows;
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in (i + 1)..n {
                worst = worst.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        worst
    }

    /// Largest singular value by power iteration on `AᵀA`.
    ///
    /// The iteration stops once the singular-value estimate changes by less
    /// than `tol` relative to itself between sweeps. The estimate is a
    /// Rayleigh quotient and therefore never exceeds the true norm.
    pub fn operator_norm(&self, tol: f64, max_iter: usize) -> Result<f64> {
        if !(tol > 0.0) {
            return Err(Error::invalid("operator_norm tolerance must be positive"));
        }
        if self.entrywise_inf_norm() == 0.0 {
            return Ok(0.0);
        }
        // Deterministic start with no special alignment to any basis direction.
        let mut v: Vec<f64> = (0..self.cols)
            .map(|j| 1.0 + 0.5 * ((j as f64 + 1.0) * 0.618_033_988_75).fract())
            .collect();
        let nv = norm2(&v);
        v.iter_mut().for_each(|x| *x /= nv);

        let mut av = vec![0.0; self.rows];
        let mut atav = vec![0.0; self.cols];
        let mut estimate = 0.0;
        let mut change = f64::INFINITY;
        for _ in 0..max_iter {
            self.matvec_into(&v, &mut av);
            let next = norm2(&av);
            self.matvec_transpose_into(&av, &mut atav);
            let w = norm2(&atav);
            if next == 0.0 || w == 0.0 {
                // v landed in the null space; the Rayleigh value so far stands.
                return Ok(estimate);
            }
            change = (next - estimate).abs();
            estimate = next;
            if change <= tol * estimate {
                return Ok(estimate);
            }
            for (vi, wi) in v.iter_mut().zip(&atav) {
                *vi = wi / w;
            }
        }
        Err(Error::NoConvergence {
            what: "operator_norm",
            iterations: max_iter,
            residual: change / estimate.max(f64::MIN_POSITIVE),
        })
    }
}

impl Index<(usize, usize)> for DenseMatrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for DenseMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    // Four accumulators let the compiler vectorise the inner loop.
    let mut acc = [0.0f64; 4];
    let chunks = a.len() / 4;
    for c in 0..chunks {
        let i = 4 * c;
        acc[0] += a[i] * b[i];
        acc[1] += a[i + 1] * b[i + 1];
        acc[2] += a[i + 2] * b[i + 2];
        acc[3] += a[i + 3] * b[i + 3];
    }
    let mut tail = 0.0;
    for i in 4 * chunks..a.len() {
        tail += a[i] * b[i];
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

pub(crate) fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn check_len(op: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch {
            op,
            expected,
            found,
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[&[f64]]) -> DenseMatrix {
        DenseMatrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    fn v(xs: &[f64]) -> DenseVector {
        DenseVector::new(xs.to_vec()).unwrap()
    }

    #[test]
    fn matvec_examples() {
        assert_eq!(
            DenseMatrix::identity(3).matvec(&v(&[1.0, 2.0, 3.0])).unwrap(),
            v(&[1.0, 2.0, 3.0])
        );
        assert_eq!(
            DenseMatrix::zeros(2, 2).matvec(&v(&[5.0, 7.0])).unwrap(),
            v(&[0.0, 0.0])
        );
        assert_eq!(
            m(&[&[1.0, 2.0], &[3.0, 4.0]]).matvec(&v(&[1.0, 1.0])).unwrap(),
            v(&[3.0, 7.0])
        );
    }

    #[test]
    fn matvec_dimension_mismatch() {
        let err = DenseMatrix::identity(3).matvec(&v(&[1.0, 2.0])).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { .. }));
    }

    #[test]
    fn matmul_examples() {
        let a = m(&[&[1.0, 2.0], &[3.0, 4.0]]);
        assert_eq!(DenseMatrix::identity(2).matmul(&a).unwrap(), a);
        assert_eq!(a.matmul(&DenseMatrix::zeros(2, 2)).unwrap(), DenseMatrix::zeros(2, 2));
        let nil = m(&[&[0.0, 1.0], &[0.0, 0.0]]);
        assert_eq!(nil.matmul(&nil).unwrap(), DenseMatrix::zeros(2, 2));
        assert!(a.matmul(&DenseMatrix::zeros(3, 1)).is_err());
    }

    #[test]
    fn operator_norm_examples() {
        let d = DenseMatrix::diag(&[3.0, 1.0]).unwrap();
        assert!((d.operator_norm(1e-14, 1000).unwrap() - 3.0).abs() < 1e-12);
        let i = DenseMatrix::identity(5);
        assert!((i.operator_norm(1e-14, 1000).unwrap() - 1.0).abs() < 1e-12);
        let n = m(&[&[0.0, 2.0], &[0.0, 0.0]]);
        assert!((n.operator_norm(1e-14, 1000).unwrap() - 2.0).abs() < 1e-12);
        assert_eq!(DenseMatrix::zeros(3, 2).operator_norm(1e-12, 10).unwrap(), 0.0);
    }

    #[test]
    fn operator_norm_reports_non_convergence() {
        // Two nearly tied singular values converge slowly.
        let a = DenseMatrix::diag(&[1.0, 0.999_999]).unwrap();
        let err = a.operator_norm(1e-15, 3).unwrap_err();
        assert!(matches!(err, Error::NoConvergence { iterations: 3, .. }));
    }

    #[test]
    fn norms_and_normalize() {
        assert_eq!(m(&[&[-3.0, 1.0], &[2.0, 0.0]]).entrywise_inf_norm(), 3.0);
        assert_eq!(DenseMatrix::identity(2).row_two_inf_norm(), 1.0);
        let u = v(&[3.0, 4.0]).normalize().unwrap();
        assert!((u[0] - 0.6).abs() < 1e-15 && (u[1] - 0.8).abs() < 1e-15);
        assert!(v(&[0.0, 0.0]).normalize().is_err());
        assert_eq!(v(&[1.0, 2.0]).dot(&v(&[3.0, 4.0])).unwrap(), 11.0);
    }

    #[test]
    fn rejects_bad_construction() {
        assert!(DenseVector::new(vec![]).is_err());
        assert!(DenseVector::new(vec![f64::NAN]).is_err());
        assert!(DenseMatrix::new(0, 2, vec![]).is_err());
        assert!(DenseMatrix::new(2, 2, vec![1.0; 3]).is_err());
        assert!(DenseMatrix::new(1, 1, vec![f64::INFINITY]).is_err());
    }

    #[test]
    fn text_format_round_trip() {
        let a = DenseMatrix::from_rows(&[vec![5.0, 0.1], vec![-1e-300, 1.0 / 3.0]]).unwrap();
        let text = a.to_text();
        assert!(text.starts_with("2 2\n5 0.1\n"));
        assert_eq!(DenseMatrix::from_text(&text).unwrap(), a);
        assert!(DenseMatrix::from_text("2 2\n1 2\n3\n").is_err());
        assert!(DenseMatrix::from_text("2 2\n1 2\n").is_err());
        assert!(DenseMatrix::from_text("2 x\n").is_err());
        assert!(DenseMatrix::from_text("").is_err());
    }
}
