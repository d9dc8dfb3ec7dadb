//! Dense complex Hermitian kernels: Cholesky, Jacobi eigendecomposition,
//! Householder orthogonal complements and HPD solves.
//!
//! Matrices are small (N ≤ 64) so everything is plain row-major storage
//! without blocking.

use std::ops::{Index, IndexMut};

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::scalar::{Cx, Real};

/// Row-major dense complex matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct CMatrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<Cx<T>>,
}

impl<T: Real> CMatrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Cx::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Cx::one();
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Cx<T>) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<Cx<T>>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_real_diag(diag: &[T]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = Cx::new(d, T::zero());
        }
        m
    }

    /// Stacks equally sized column vectors side by side.
    pub fn from_columns(columns: &[Vec<Cx<T>>]) -> Result<Self> {
        let rows = columns.first().map_or(0, Vec::len);
        if columns.iter().any(|c| c.len() != rows) {
            return Err(Error::Dimension("ragged columns".into()));
        }
        Ok(Self::from_fn(rows, columns.len(), |i, j| columns[j][i]))
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

    pub fn as_slice(&self) -> &[Cx<T>] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[Cx<T>] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn col(&self, j: usize) -> Vec<Cx<T>> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn diag_real(&self) -> Vec<T> {
        (0..self.rows.min(self.cols))
            .map(|i| self[(i, i)].re)
            .collect()
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn scale(&self, s: T) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    pub fn scale_cx(&self, s: Cx<T>) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a - b)
    }

    fn zip_with(&self, other: &Self, f: impl Fn(Cx<T>, Cx<T>) -> Cx<T>) -> Self {
        assert_eq!(
            (self.rows, self.cols),
            (other.rows, other.cols),
            "shape mismatch"
        );
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    /// Matrix product; panics on inner-dimension mismatch.
    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "inner dimensions differ");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                let brow = other.row(k);
                let orow = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (o, &b) in orow.iter_mut().zip(brow) {
                    *o = *o + a * b;
                }
            }
        }
        out
    }

    pub fn mat_vec(&self, x: &[Cx<T>]) -> Vec<Cx<T>> {
        assert_eq!(
            self.cols,
            x.len(),
            "vector length differs from column count"
        );
        (0..self.rows)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(x)
                    .fold(Cx::zero(), |acc, (&a, &b)| acc + a * b)
            })
            .collect()
    }

    /// Copy of the block `rows r0..r1`, `cols c0..c1`.
    pub fn block(&self, r0: usize, r1: usize, c0: usize, c1: usize) -> Self {
        Self::from_fn(r1 - r0, c1 - c0, |i, j| self[(r0 + i, c0 + j)])
    }

    pub fn frobenius_norm(&self) -> T {
        self.data
            .iter()
            .fold(T::zero(), |acc, z| acc + z.norm_sqr())
            .sqrt()
    }

    pub fn trace(&self) -> Cx<T> {
        (0..self.rows.min(self.cols)).fold(Cx::zero(), |acc, i| acc + self[(i, i)])
    }

    /// ‖A − Aᴴ‖_F / ‖A‖_F (0 for the zero matrix).
    pub fn hermitian_residual(&self) -> T {
        if !self.is_square() {
            return T::infinity();
        }
        let norm = self.frobenius_norm();
        if norm.is_zero() {
            return T::zero();
        }
        self.sub(&self.adjoint()).frobenius_norm() / norm
    }

    /// Averages `A` with `Aᴴ`, removing rounding asymmetry.
    pub fn hermitian_part(&self) -> Self {
        let half = T::lit(0.5);
        Self::from_fn(self.rows, self.cols, |i, j| {
            (self[(i, j)] + self[(j, i)].conj()) * half
        })
    }

    /// Converts entries to another scalar type.
    pub fn cast<U: Real>(&self) -> CMatrix<U> {
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .map(|z| {
                    Cx::new(
                        U::from_f64(z.re.to_f64().unwrap_or(f64::NAN)).unwrap_or_else(U::nan),
                        U::from_f64(z.im.to_f64().unwrap_or(f64::NAN)).unwrap_or_else(U::nan),
                    )
                })
                .collect(),
        }
    }
}

impl<T> Index<(usize, usize)> for CMatrix<T> {
    type Output = Cx<T>;

    fn index(&self, (i, j): (usize, usize)) -> &Cx<T> {
        &self.data[i * self.cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for CMatrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Cx<T> {
        &mut self.data[i * self.cols + j]
    }
}

/// `aᴴb`.
pub fn dot<T: Real>(a: &[Cx<T>], b: &[Cx<T>]) -> Cx<T> {
    assert_eq!(a.len(), b.len(), "vector lengths differ");
    a.iter()
        .zip(b)
        .fold(Cx::zero(), |acc, (x, &y)| acc + x.conj() * y)
}

pub fn norm_sqr<T: Real>(a: &[Cx<T>]) -> T {
    a.iter().fold(T::zero(), |acc, z| acc + z.norm_sqr())
}

/// Lower-triangular factor `L` with positive real diagonal, `L·Lᴴ = A`.
#[derive(Clone, Debug, PartialEq)]
pub struct LowerFactor<T> {
    l: CMatrix<T>,
}

impl<T: Real> LowerFactor<T> {
    /// Wraps a lower-triangular matrix; rejects upper entries or a non-positive diagonal.
    pub fn from_lower(l: CMatrix<T>) -> Result<Self> {
        if !l.is_square() {
            return Err(Error::Dimension("factor must be square".into()));
        }
        for i in 0..l.rows() {
            let d = l[(i, i)];
            if !(d.re > T::zero()) || !d.im.is_zero() {
                return Err(Error::InvalidArgument(format!(
                    "diagonal entry {i} is not positive real"
                )));
            }
            if (i + 1..l.cols()).any(|j| !l[(i, j)].is_zero()) {
                return Err(Error::InvalidArgument(
                    "factor is not lower triangular".into(),
                ));
            }
        }
        Ok(Self { l })
    }

    pub fn dim(&self) -> usize {
        self.l.rows()
    }

    pub fn matrix(&self) -> &CMatrix<T> {
        &self.l
    }

    pub fn into_matrix(self) -> CMatrix<T> {
        self.l
    }

    /// `L·Lᴴ`.
    pub fn reconstruct(&self) -> CMatrix<T> {
        self.l.matmul(&self.l.adjoint())
    }

    /// `L·u`, exploiting the triangular structure.
    pub fn apply(&self, u: &[Cx<T>]) -> Vec<Cx<T>> {
        let n = self.dim();
        assert_eq!(u.len(), n);
        (0..n)
            .map(|i| {
                self.l.row(i)[..=i]
                    .iter()
                    .zip(u)
                    .fold(Cx::zero(), |acc, (&a, &b)| acc + a * b)
            })
            .collect()
    }

    /// Solves `L·y = b` by forward substitution.
    pub fn solve_lower(&self, b: &[Cx<T>]) -> Vec<Cx<T>> {
        let n = self.dim();
        assert_eq!(b.len(), n);
        let mut y = b.to_vec();
        for i in 0..n {
            let row = self.l.row(i);
            let mut s = y[i];
            for k in 0..i {
                s = s - row[k] * y[k];
            }
            y[i] = s / row[i].re;
        }
        y
    }

    /// Solves `Lᴴ·x = y` by back substitution.
    pub fn solve_upper_adjoint(&self, y: &[Cx<T>]) -> Vec<Cx<T>> {
        let n = self.dim();
        assert_eq!(y.len(), n);
        let mut x = y.to_vec();
        for i in (0..n).rev() {
            let mut s = x[i];
            for (k, &xk) in x.iter().enumerate().skip(i + 1) {
                s = s - self.l[(k, i)].conj() * xk;
            }
            x[i] = s / self.l[(i, i)].re;
        }
        x
    }

    /// Solves `L·Lᴴ·x = b`.
    pub fn solve(&self, b: &[Cx<T>]) -> Vec<Cx<T>> {
        self.solve_upper_adjoint(&self.solve_lower(b))
    }

    /// `L⁻¹·B` column by column.
    pub fn solve_lower_mat(&self, b: &CMatrix<T>) -> CMatrix<T> {
        let cols: Vec<_> = (0..b.cols()).map(|j| self.solve_lower(&b.col(j))).collect();
        CMatrix::from_columns(&cols).expect("uniform columns")
    }

    /// `L⁻ᴴ·B` column by column.
    pub fn solve_upper_adjoint_mat(&self, b: &CMatrix<T>) -> CMatrix<T> {
        let cols: Vec<_> = (0..b.cols())
            .map(|j| self.solve_upper_adjoint(&b.col(j)))
            .collect();
        CMatrix::from_columns(&cols).expect("uniform columns")
    }

    /// `log det(L·Lᴴ)`.
    pub fn log_det(&self) -> T {
        (0..self.dim()).fold(T::zero(), |acc, i| acc + self.l[(i, i)].re.ln()) * T::lit(2.0)
    }
}

/// Lower Cholesky factor of a Hermitian positive-definite matrix.
///
/// Only the lower triangle of `a` is read. A pivot that is not strictly
/// positive (or not finite) is reported with its index; no jitter is added.
pub fn chol<T: Real>(a: &CMatrix<T>) -> Result<LowerFactor<T>> {
    if !a.is_square() {
        return Err(Error::Dimension(format!(
            "chol of a {}x{} matrix",
            a.rows(),
            a.cols()
        )));
    }
    let n = a.rows();
    let mut l = CMatrix::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)].re;
        for k in 0..j {
            d = d - l[(j, k)].norm_sqr();
        }
        if !(d > T::zero()) || !d.is_finite() {
            return Err(Error::NotPositiveDefinite {
                index: j,
                value: d.to_f64().unwrap_or(f64::NAN),
            });
        }
        let djj = d.sqrt();
        l[(j, j)] = Cx::new(djj, T::zero());
        for i in j + 1..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s = s - l[(i, k)] * l[(j, k)].conj();
            }
            l[(i, j)] = s / djj;
        }
    }
    Ok(LowerFactor { l })
}

/// Eigen-decomposition of a Hermitian matrix: `A = U·diag(values)·Uᴴ`,
/// eigenvalues sorted in descending order.
#[derive(Clone, Debug, PartialEq)]
pub struct EigPair<T> {
    pub values: Vec<T>,
    pub vectors: CMatrix<T>,
}

impl<T: Real> EigPair<T> {
    pub fn reconstruct(&self) -> CMatrix<T> {
        let n = self.values.len();
        let scaled = CMatrix::from_fn(n, n, |i, j| self.vectors[(i, j)] * self.values[j]);
        scaled.matmul(&self.vectors.adjoint())
    }
}

/// Hermitian eigendecomposition by cyclic complex Jacobi rotations.
///
/// Jacobi is slower than tridiagonal QR but gives eigenvectors that are
/// orthonormal to working precision and small eigenvalues with high relative
/// accuracy, which matters for ill-conditioned clutter covariances.
pub fn heig<T: Real>(a: &CMatrix<T>) -> Result<EigPair<T>> {
    if !a.is_square() {
        return Err(Error::Dimension(format!(
            "heig of a {}x{} matrix",
            a.rows(),
            a.cols()
        )));
    }
    let n = a.rows();
    let mut m = a.hermitian_part();
    let mut v = CMatrix::identity(n);
    let scale = m.frobenius_norm();
    let tiny = T::epsilon() * T::epsilon();
    let threshold = T::epsilon() * scale;

    for _sweep in 0..100 {
        let off = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .fold(T::zero(), |acc, (i, j)| acc + m[(i, j)].norm_sqr())
            .sqrt();
        if off <= threshold || scale.is_zero() {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[(p, q)];
                let mag = apq.norm();
                if mag <= tiny * scale {
                    continue;
                }
                let phase = apq / mag;
                let app = m[(p, p)].re;
                let aqq = m[(q, q)].re;
                let theta = (aqq - app) / (T::lit(2.0) * mag);
                let t = if theta >= T::zero() {
                    T::one() / (theta + (theta * theta + T::one()).sqrt())
                } else {
                    -T::one() / (-theta + (theta * theta + T::one()).sqrt())
                };
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;
                // J = diag(1, conj(phase)) · [[c, s], [-s, c]]
                let jpp = Cx::new(c, T::zero());
                let jpq = Cx::new(s, T::zero());
                let jqp = phase.conj() * (-s);
                let jqq = phase.conj() * c;

                for k in 0..n {
                    let akp = m[(k, p)];
                    let akq = m[(k, q)];
                    m[(k, p)] = akp * jpp + akq * jqp;
                    m[(k, q)] = akp * jpq + akq * jqq;
                }
                for k in 0..n {
                    let apk = m[(p, k)];
                    let aqk = m[(q, k)];
                    m[(p, k)] = jpp.conj() * apk + jqp.conj() * aqk;
                    m[(q, k)] = jpq.conj() * apk + jqq.conj() * aqk;
                }
                m[(p, q)] = Cx::zero();
                m[(q, p)] = Cx::zero();
                m[(p, p)] = Cx::new(m[(p, p)].re, T::zero());
                m[(q, q)] = Cx::new(m[(q, q)].re, T::zero());
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = vkp * jpp + vkq * jqp;
                    v[(k, q)] = vkp * jpq + vkq * jqq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        m[(j, j)]
            .re
            .partial_cmp(&m[(i, i)].re)
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let values = order.iter().map(|&i| m[(i, i)].re).collect();
    let vectors = CMatrix::from_fn(n, n, |i, j| v[(i, order[j])]);
    Ok(EigPair { values, vectors })
}

/// Semi-unitary `V⊥` (n × (n−1)) with `V⊥ᴴV⊥ = I` and `V⊥ᴴv = 0`.
///
/// Built from the Householder reflector that maps `v` onto a unit-modulus
/// multiple of the last canonical basis vector; `V⊥` is its first `n − 1`
/// columns, so the result is a deterministic function of `v`.
pub fn ortho_complement<T: Real>(v: &[Cx<T>]) -> Result<CMatrix<T>> {
    let n = v.len();
    if n < 2 {
        return Err(Error::Dimension(
            "orthogonal complement needs n >= 2".into(),
        ));
    }
    let norm = norm_sqr(v).sqrt();
    if (norm - T::one()).abs() > T::tol(1e-10) {
        return Err(Error::InvalidArgument(format!(
            "vector norm {norm} is not 1"
        )));
    }
    let last = v[n - 1];
    let last_abs = last.norm();
    let phase = if last_abs > T::zero() {
        last / last_abs
    } else {
        Cx::one()
    };
    // w = v + phase·e_n, so H·v = −phase·e_n with H = I − 2wwᴴ/(wᴴw).
    let mut w = v.to_vec();
    w[n - 1] = w[n - 1] + phase;
    let wnorm = norm_sqr(&w);
    let two = T::lit(2.0);
    Ok(CMatrix::from_fn(n, n - 1, |i, j| {
        let delta = if i == j {
            Cx::<T>::one()
        } else {
            Cx::<T>::zero()
        };
        delta - w[i] * w[j].conj() * (two / wnorm)
    }))
}

/// Solves `A·X = B` for HPD `A` through its Cholesky factor.
pub fn solve_hpd<T: Real>(a: &CMatrix<T>, b: &CMatrix<T>) -> Result<CMatrix<T>> {
    if a.rows() != b.rows() {
        return Err(Error::Dimension(format!(
            "A has {} rows, B has {}",
            a.rows(),
            b.rows()
        )));
    }
    let l = chol(a)?;
    let cols: Vec<_> = (0..b.cols()).map(|j| l.solve(&b.col(j))).collect();
    CMatrix::from_columns(&cols)
}

/// Hermitian positive square root `U·diag(√λ)·Uᴴ`.
pub fn hermitian_sqrt<T: Real>(a: &CMatrix<T>) -> Result<CMatrix<T>> {
    let eig = heig(a)?;
    if let Some((i, &l)) = eig
        .values
        .iter()
        .enumerate()
        .find(|(_, &l)| !(l > T::zero()))
    {
        return Err(Error::NotPositiveDefinite {
            index: i,
            value: l.to_f64().unwrap_or(f64::NAN),
        });
    }
    let roots: Vec<T> = eig.values.iter().map(|l| l.sqrt()).collect();
    let n = roots.len();
    let scaled = CMatrix::from_fn(n, n, |i, j| eig.vectors[(i, j)] * roots[j]);
    Ok(scaled.matmul(&eig.vectors.adjoint()))
}
