//! Ambient linear algebra: subspaces stored by orthonormal bases, principal
//! angles, the max-angle metric on the Grassmannian, projections and
//! distances to affine flats.
//!
//! The max principal angle is the canonical distance between equal-dimension
//! subspaces throughout the crate. Its sine equals the operator norm of the
//! difference of the orthogonal projectors; both routes are exposed so they
//! can be checked against each other.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

/// Tolerance on `|B^T B - I|` accepted for a stored basis.
pub const ORTHONORMAL_TOL: f64 = 1e-12;

/// Spanning sets whose condition number exceeds this are rejected.
pub const MAX_CONDITION: f64 = 1e8;

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[inline]
pub fn dist_sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

#[inline]
pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    dist_sq(a, b).sqrt()
}

#[inline]
pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// Angle between two nonzero vectors, accurate for nearly parallel and nearly
/// antiparallel inputs.
pub fn vector_angle(a: &[f64], b: &[f64]) -> f64 {
    let na = norm(a);
    let nb = norm(b);
    let mut diff = 0.0;
    let mut sum = 0.0;
    for (x, y) in a.iter().zip(b) {
        let (u, v) = (x / na, y / nb);
        diff += (u - v) * (u - v);
        sum += (u + v) * (u + v);
    }
    2.0 * diff.sqrt().atan2(sum.sqrt())
}

/// A linear subspace of `R^d`, held as a `d x k` matrix with orthonormal
/// columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Subspace {
    basis: DMatrix<f64>,
}

impl Subspace {
    /// The trivial subspace `{0}`.
    pub fn zero(ambient_dim: usize) -> Self {
        Self {
            basis: DMatrix::zeros(ambient_dim, 0),
        }
    }

    pub fn full(ambient_dim: usize) -> Self {
        Self {
            basis: DMatrix::identity(ambient_dim, ambient_dim),
        }
    }

    /// Wraps a matrix whose columns are already orthonormal.
    pub fn from_orthonormal_columns(basis: DMatrix<f64>) -> Result<Self> {
        if basis.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite);
        }
        let (d, k) = basis.shape();
        if k > d {
            return Err(Error::UnsupportedDimension { dim: k, ambient: d });
        }
        let gram = basis.transpose() * &basis;
        let deviation = (gram - DMatrix::<f64>::identity(k, k)).amax();
        if deviation > ORTHONORMAL_TOL {
            return Err(Error::NotOrthonormal { deviation });
        }
        Ok(Self { basis })
    }

    /// Orthonormalizes a spanning set. Nearly dependent inputs (condition
    /// number above [`MAX_CONDITION`]) are rejected rather than truncated.
    pub fn span(ambient_dim: usize, vectors: &[&[f64]]) -> Result<Self> {
        if vectors.is_empty() {
            return Ok(Self::zero(ambient_dim));
        }
        for v in vectors {
            if v.len() != ambient_dim {
                return Err(Error::DimensionMismatch {
                    expected: ambient_dim,
                    found: v.len(),
                });
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::NonFinite);
            }
        }
        let k = vectors.len();
        if k > ambient_dim {
            return Err(Error::IllConditioned {
                condition: f64::INFINITY,
            });
        }
        let a = DMatrix::from_fn(ambient_dim, k, |i, j| vectors[j][i]);
        let sv = a.clone().svd(false, false).singular_values;
        let smax = sv.max();
        let smin = sv.min();
        let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
        if !(condition <= MAX_CONDITION) {
            return Err(Error::IllConditioned { condition });
        }
        Ok(Self {
            basis: gram_schmidt(a),
        })
    }

    pub fn ambient_dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    pub fn basis_vector(&self, j: usize) -> &[f64] {
        let d = self.ambient_dim();
        &self.basis.as_slice()[j * d..(j + 1) * d]
    }

    pub fn projector(&self) -> DMatrix<f64> {
        &self.basis * self.basis.transpose()
    }

    /// Coordinates `B^T v` of the orthogonal projection in the stored basis.
    pub fn coordinates(&self, v: &[f64]) -> Vec<f64> {
        (0..self.dim()).map(|j| dot(self.basis_vector(j), v)).collect()
    }

    /// Orthogonal projection `P v`, in ambient coordinates.
    pub fn project(&self, v: &[f64]) -> Vec<f64> {
        let c = self.coordinates(v);
        let mut out = vec![0.0; self.ambient_dim()];
        for (j, cj) in c.iter().enumerate() {
            for (o, b) in out.iter_mut().zip(self.basis_vector(j)) {
                *o += cj * b;
            }
        }
        out
    }

    /// `|v - P v|`, without allocating for small subspaces.
    pub fn residual_norm(&self, v: &[f64]) -> f64 {
        let d = self.ambient_dim();
        let k = self.dim();
        if k == 0 {
            return norm(v);
        }
        let b = self.basis.as_slice();
        let mut stack = [0.0; 8];
        let mut heap = Vec::new();
        let c: &mut [f64] = if k <= stack.len() {
            &mut stack[..k]
        } else {
            heap.resize(k, 0.0);
            &mut heap
        };
        for (j, cj) in c.iter_mut().enumerate() {
            *cj = dot(&b[j * d..(j + 1) * d], v);
        }
        let mut s = 0.0;
        for (i, vi) in v.iter().enumerate() {
            let mut r = *vi;
            for (j, cj) in c.iter().enumerate() {
                r -= b[j * d + i] * cj;
            }
            s += r * r;
        }
        s.sqrt()
    }

    /// `|P v|`.
    pub fn projection_norm(&self, v: &[f64]) -> f64 {
        (0..self.dim())
            .map(|j| {
                let c = dot(self.basis_vector(j), v);
                c * c
            })
            .sum::<f64>()
            .sqrt()
    }

    pub fn contains(&self, v: &[f64], tol: f64) -> bool {
        self.residual_norm(v) <= tol
    }

    /// Orthonormal basis of the orthogonal complement.
    pub fn orthogonal_complement(&self) -> Subspace {
        let d = self.ambient_dim();
        let mut cols: Vec<Vec<f64>> = (0..self.dim())
            .map(|j| self.basis_vector(j).to_vec())
            .collect();
        let mut extra = Vec::new();
        while cols.len() < d {
            // Pick the standard basis vector that is least represented so far.
            let mut best: Option<(f64, Vec<f64>)> = None;
            for i in 0..d {
                let mut e = vec![0.0; d];
                e[i] = 1.0;
                for _ in 0..2 {
                    for c in &cols {
                        let t = dot(c, &e);
                        for (x, y) in e.iter_mut().zip(c) {
                            *x -= t * y;
                        }
                    }
                }
                let n = norm(&e);
                if best.as_ref().is_none_or(|(bn, _)| n > *bn) {
                    best = Some((n, e));
                }
            }
            let (n, mut e) = best.expect("ambient dimension is positive");
            e.iter_mut().for_each(|x| *x /= n);
            cols.push(e.clone());
            extra.push(e);
        }
        let k = extra.len();
        Subspace {
            basis: DMatrix::from_fn(d, k, |i, j| extra[j][i]),
        }
    }

    fn check_pair(&self, other: &Subspace) -> Result<()> {
        if self.ambient_dim() != other.ambient_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.ambient_dim(),
                found: other.ambient_dim(),
            });
        }
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        if self.dim() == 0 {
            return Err(Error::ZeroDimensional);
        }
        Ok(())
    }
}

/// Modified Gram-Schmidt with one reorthogonalization pass.
fn gram_schmidt(mut a: DMatrix<f64>) -> DMatrix<f64> {
    let k = a.ncols();
    for j in 0..k {
        for _ in 0..2 {
            for i in 0..j {
                let t = a.column(i).dot(&a.column(j));
                let ci = a.column(i).clone_owned();
                a.column_mut(j).axpy(-t, &ci, 1.0);
            }
        }
        let n = a.column(j).norm();
        a.column_mut(j).unscale_mut(n);
    }
    a
}

/// Principal angles between equal-dimension subspaces, ascending, in radians.
///
/// Cosines come from the singular values of `A^T B` and sines from those of
/// `B - A A^T B`; pairing them through `atan2` keeps both tiny and nearly
/// orthogonal angles accurate.
pub fn principal_angles(a: &Subspace, b: &Subspace) -> Result<Vec<f64>> {
    a.check_pair(b)?;
    let m = a.basis.transpose() * &b.basis;
    let r = &b.basis - &a.basis * &m;
    let mut cos: Vec<f64> = m.svd(false, false).singular_values.iter().copied().collect();
    let mut sin: Vec<f64> = r.svd(false, false).singular_values.iter().copied().collect();
    cos.sort_by(|x, y| y.total_cmp(x));
    sin.sort_by(|x, y| x.total_cmp(y));
    Ok(cos
        .iter()
        .zip(&sin)
        .map(|(c, s)| s.clamp(0.0, 1.0).atan2(c.clamp(0.0, 1.0)))
        .collect())
}

/// The max principal angle, the metric used on `Grass(k, R^d)`.
pub fn grassmann_angle(a: &Subspace, b: &Subspace) -> Result<f64> {
    a.check_pair(b)?;
    let (k, d) = (a.dim(), a.ambient_dim());
    if k >= d {
        return Err(Error::UnsupportedDimension { dim: k, ambient: d });
    }
    Ok(max_angle_unchecked(a, b))
}

/// Max principal angle without argument validation. Closed forms for lines
/// and planes; SVD otherwise.
pub(crate) fn max_angle_unchecked(a: &Subspace, b: &Subspace) -> f64 {
    let d = a.ambient_dim();
    match a.dim() {
        1 => {
            let (u, v) = (a.basis_vector(0), b.basis_vector(0));
            let c = dot(u, v);
            let s: f64 = (0..d).map(|i| (v[i] - c * u[i]).powi(2)).sum::<f64>().sqrt();
            s.min(1.0).atan2(c.abs().min(1.0))
        }
        2 => {
            let (a0, a1) = (a.basis_vector(0), a.basis_vector(1));
            let (b0, b1) = (b.basis_vector(0), b.basis_vector(1));
            let m = [[dot(a0, b0), dot(a0, b1)], [dot(a1, b0), dot(a1, b1)]];
            // Largest singular value of the 2x2 cosine matrix, then the
            // smallest from the determinant.
            let p = m[0][0] * m[0][0] + m[1][0] * m[1][0];
            let q = m[0][0] * m[0][1] + m[1][0] * m[1][1];
            let r = m[0][1] * m[0][1] + m[1][1] * m[1][1];
            let cmax = sym2_max_eigenvalue(p, q, r).sqrt();
            let det = (m[0][0] * m[1][1] - m[0][1] * m[1][0]).abs();
            let cmin = if cmax > 0.0 { det / cmax } else { 0.0 };
            // Sines: largest singular value of B - A M.
            let mut r0 = 0.0;
            let mut r01 = 0.0;
            let mut r1 = 0.0;
            for i in 0..d {
                let x = b0[i] - a0[i] * m[0][0] - a1[i] * m[1][0];
                let y = b1[i] - a0[i] * m[0][1] - a1[i] * m[1][1];
                r0 += x * x;
                r01 += x * y;
                r1 += y * y;
            }
            let smax = sym2_max_eigenvalue(r0, r01, r1).sqrt();
            smax.min(1.0).atan2(cmin.min(1.0))
        }
        _ => {
            let m = a.basis.transpose() * &b.basis;
            let r = &b.basis - &a.basis * &m;
            let cmin = m.svd(false, false).singular_values.min();
            let smax = r.svd(false, false).singular_values.max();
            smax.clamp(0.0, 1.0).atan2(cmin.clamp(0.0, 1.0))
        }
    }
}

fn sym2_max_eigenvalue(p: f64, q: f64, r: f64) -> f64 {
    let mean = 0.5 * (p + r);
    let dev = (0.25 * (p - r) * (p - r) + q * q).sqrt();
    (mean + dev).max(0.0)
}

/// `sin` of the max principal angle.
pub fn grassmann_sine_distance(a: &Subspace, b: &Subspace) -> Result<f64> {
    Ok(grassmann_angle(a, b)?.sin())
}

/// Operator 2-norm of `P_A - P_B`; equals [`grassmann_sine_distance`] for
/// equal dimensions and serves as the independent route.
pub fn projector_distance(a: &Subspace, b: &Subspace) -> Result<f64> {
    if a.ambient_dim() != b.ambient_dim() {
        return Err(Error::DimensionMismatch {
            expected: a.ambient_dim(),
            found: b.ambient_dim(),
        });
    }
    let diff = a.projector() - b.projector();
    let eig = SymmetricEigen::new(diff);
    Ok(eig.eigenvalues.iter().fold(0.0_f64, |m, x| m.max(x.abs())))
}

/// Euclidean distance from `q` to the affine flat `base + t`.
pub fn dist_to_affine(q: &[f64], base: &[f64], t: &Subspace) -> Result<f64> {
    for len in [q.len(), base.len()] {
        if len != t.ambient_dim() {
            return Err(Error::DimensionMismatch {
                expected: t.ambient_dim(),
                found: len,
            });
        }
    }
    Ok(t.residual_norm(&sub(q, base)))
}

/// Angle between a nonzero vector and a subspace, in `[0, pi/2]`.
pub fn angle_vector_to_subspace(v: &[f64], t: &Subspace) -> Result<f64> {
    if v.len() != t.ambient_dim() {
        return Err(Error::DimensionMismatch {
            expected: t.ambient_dim(),
            found: v.len(),
        });
    }
    if norm(v) == 0.0 {
        return Err(Error::ZeroVector);
    }
    Ok(t.residual_norm(v).atan2(t.projection_norm(v)))
}

/// A linear map `R^n -> R^m`, stored as an `m x n` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearMap(DMatrix<f64>);

impl LinearMap {
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        if matrix.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self(matrix))
    }

    pub fn zeros(codomain_dim: usize, domain_dim: usize) -> Self {
        Self(DMatrix::zeros(codomain_dim, domain_dim))
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn domain_dim(&self) -> usize {
        self.0.ncols()
    }

    pub fn codomain_dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn operator_norm(&self) -> f64 {
        operator_norm(&self.0)
    }

    /// The graph `{(x, F x)}` as an `n`-dimensional subspace of `R^{n+m}`.
    pub fn graph_subspace(&self) -> Subspace {
        let (m, n) = self.0.shape();
        let stacked = DMatrix::from_fn(n + m, n, |i, j| {
            if i < n {
                if i == j {
                    1.0
                } else {
                    0.0
                }
            } else {
                self.0[(i - n, j)]
            }
        });
        Subspace {
            basis: gram_schmidt(stacked),
        }
    }
}

pub(crate) fn operator_norm(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    match m.shape() {
        (1, _) | (_, 1) => m.norm(),
        _ => m.clone().svd(false, false).singular_values.max(),
    }
}
