//! Finitely generated convex cones.
//!
//! A cone is stored as the conic hull of unit generators. Membership and
//! projection go through nonnegative least squares; the polar (dual) cone
//! `{x : <a, x> <= 0 for all a in A}` is enumerated with the double
//! description method after splitting off its lineality space.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::linalg::{dot, norm};

/// Default membership tolerance for unit-scale inputs.
pub const MEMBERSHIP_TOL: f64 = 1e-9;

/// Largest ambient dimension for which the dual is enumerated.
pub const MAX_DUAL_DIM: usize = 8;

const RANK_TOL: f64 = 1e-9;
const TIGHT_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct PolyhedralCone {
    dim: usize,
    generators: Vec<Vec<f64>>,
}

impl PolyhedralCone {
    /// Conic hull of `generators`, each normalized to unit length. An empty
    /// list gives the trivial cone `{0}`.
    pub fn new(dim: usize, generators: &[Vec<f64>]) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter("ambient dimension must be positive".into()));
        }
        let mut gens = Vec::with_capacity(generators.len());
        for g in generators {
            if g.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: g.len(),
                });
            }
            if g.iter().any(|x| !x.is_finite()) {
                return Err(Error::NonFinite);
            }
            let n = norm(g);
            if n == 0.0 {
                return Err(Error::ZeroVector);
            }
            gens.push(g.iter().map(|x| x / n).collect());
        }
        Ok(Self {
            dim,
            generators: gens,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn generators(&self) -> &[Vec<f64>] {
        &self.generators
    }

    fn matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.dim, self.generators.len(), |i, j| self.generators[j][i])
    }

    /// Nearest point of the cone to `v`.
    pub fn project(&self, v: &[f64]) -> Vec<f64> {
        if self.generators.is_empty() {
            return vec![0.0; self.dim];
        }
        let a = self.matrix();
        let (x, _) = nnls(&a, &DVector::from_column_slice(v));
        (a * x).iter().copied().collect()
    }

    /// Euclidean distance from `v` to the cone.
    pub fn distance(&self, v: &[f64]) -> f64 {
        let p = self.project(v);
        v.iter().zip(&p).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
    }

    /// Smallest angle between `v` and a nonzero element of the cone;
    /// infinite for the trivial cone.
    pub fn angle_to(&self, v: &[f64]) -> Result<f64> {
        self.check_dim(v)?;
        let n = norm(v);
        if n == 0.0 {
            return Err(Error::ZeroVector);
        }
        if self.generators.is_empty() {
            return Ok(f64::INFINITY);
        }
        let unit: Vec<f64> = v.iter().map(|x| x / n).collect();
        let p = self.project(&unit);
        let pn = norm(&p);
        if pn > 1e-14 {
            let r: f64 = unit.iter().zip(&p).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
            return Ok(r.atan2(pn));
        }
        // The cone lies in the closed half-space opposite to v, where the
        // best direction is always one of the generators.
        let best = self
            .generators
            .iter()
            .map(|g| dot(g, &unit))
            .fold(f64::NEG_INFINITY, f64::max);
        Ok(best.clamp(-1.0, 1.0).acos())
    }

    fn check_dim(&self, v: &[f64]) -> Result<()> {
        if v.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: v.len(),
            });
        }
        Ok(())
    }

    /// Rank of the generator matrix, i.e. the dimension of the linear span.
    pub fn span_dim(&self) -> usize {
        numerical_rank(&self.generators, self.dim)
    }
}

/// Whether `v` lies within distance `tol` of the cone.
pub fn cone_contains(c: &PolyhedralCone, v: &[f64], tol: f64) -> bool {
    v.len() == c.dim && c.distance(v) <= tol
}

/// Whether every generator of `inner` belongs to `outer`.
pub fn cone_subset(inner: &PolyhedralCone, outer: &PolyhedralCone, tol: f64) -> bool {
    inner.generators.iter().all(|g| cone_contains(outer, g, tol))
}

/// The polar cone `{x : <a, x> <= 0 for all a in C}`.
pub fn dual_cone(c: &PolyhedralCone) -> Result<PolyhedralCone> {
    if c.dim > MAX_DUAL_DIM {
        return Err(Error::DualBudgetExceeded {
            dim: c.dim,
            max: MAX_DUAL_DIM,
        });
    }
    PolyhedralCone::new(c.dim, &polar_generators(c.dim, &c.generators))
}

/// `(true, k)` when the cone is a `k`-dimensional linear subspace, i.e. when
/// it contains the negation of each generator. The second entry is the span
/// dimension either way.
pub fn is_vector_space(c: &PolyhedralCone, tol: f64) -> (bool, usize) {
    let symmetric = c.generators.iter().all(|g| {
        let neg: Vec<f64> = g.iter().map(|x| -x).collect();
        cone_contains(c, &neg, tol)
    });
    (symmetric, c.span_dim())
}

/// Whether `v` makes an angle less than `eps` with some nonzero vector of the
/// cone.
pub fn thickened_contains(c: &PolyhedralCone, eps: f64, v: &[f64]) -> Result<bool> {
    if !(0.0..=std::f64::consts::PI).contains(&eps) {
        return Err(Error::InvalidParameter(format!(
            "thickening angle {eps} outside [0, pi]"
        )));
    }
    Ok(c.angle_to(v)? < eps)
}

/// Sine of the largest angle from a unit vector of `k` to the cone `c`,
/// capped at 1: `max { d(x, c) : x in k, |x| = 1 }`, or 0 for trivial `k`.
///
/// The squared distance is continuously differentiable, so a maximizer lies
/// in the relative interior of a face `F` of `k` and is a stationary point on
/// the unit sphere of `span(F)`. Writing the face of `c` that receives its
/// projection as `T`, stationarity makes it a singular vector of
/// `Q_F^T Q_T`. All such candidates are enumerated over pairs of faces and
/// scored exactly. The
/// value 1 (a direction of `k` polar to all of `c`) is detected separately by
/// intersecting `k` with the polar of `c`.
pub fn max_sine_to_cone(k: &PolyhedralCone, c: &PolyhedralCone) -> Result<f64> {
    if k.dim != c.dim {
        return Err(Error::DimensionMismatch {
            expected: k.dim,
            found: c.dim,
        });
    }
    if k.generators.is_empty() {
        return Ok(0.0);
    }
    if c.generators.is_empty() {
        return Ok(1.0);
    }
    // k meets the polar of c iff the polar of (polar(k) + c) is nontrivial.
    let polar_k = dual_cone(k)?.generators;
    let mut h = polar_k.clone();
    h.extend(c.generators.iter().cloned());
    if !polar_generators(k.dim, &h).is_empty() {
        return Ok(1.0);
    }
    let subsets_k = face_bases(&k.generators, &polar_k, k.dim);
    let subsets_c = face_bases(&c.generators, &dual_cone(c)?.generators, c.dim);
    let mut best = k
        .generators
        .iter()
        .map(|g| c.distance(g))
        .fold(0.0, f64::max);
    for qs in &subsets_k {
        for qt in &subsets_c {
            let m = qs.transpose() * qt;
            let svd = m.svd(true, false);
            let u = svd.u.expect("left singular vectors requested");
            for j in 0..qs.ncols() {
                let sigma = if j < svd.singular_values.len() {
                    svd.singular_values[j]
                } else {
                    0.0
                };
                let predicted = (1.0 - sigma * sigma).max(0.0).sqrt();
                if predicted <= best || j >= u.ncols() {
                    continue;
                }
                let x: Vec<f64> = (qs * u.column(j)).iter().copied().collect();
                for sign in [1.0, -1.0] {
                    let xs: Vec<f64> = x.iter().map(|v| sign * v).collect();
                    if cone_contains(k, &xs, 1e-10) {
                        best = best.max(c.distance(&xs));
                    }
                }
            }
        }
    }
    Ok(best.min(1.0))
}

/// Whether every nonzero vector of `x` makes an angle less than `eps` with
/// `y`, for `eps` in `(0, pi/2]`.
pub fn cone_within_thickening(x: &PolyhedralCone, y: &PolyhedralCone, eps: f64) -> Result<bool> {
    if !(eps > 0.0 && eps <= std::f64::consts::FRAC_PI_2) {
        return Err(Error::InvalidParameter(format!(
            "thickening angle {eps} outside (0, pi/2]"
        )));
    }
    Ok(max_sine_to_cone(x, y)? < eps.sin())
}

fn numerical_rank(vectors: &[Vec<f64>], dim: usize) -> usize {
    if vectors.is_empty() {
        return 0;
    }
    let m = DMatrix::from_fn(dim, vectors.len(), |i, j| vectors[j][i]);
    let sv = m.svd(false, false).singular_values;
    let smax = sv.max();
    sv.iter().filter(|&&s| s > RANK_TOL * smax.max(1.0)).count()
}

/// Orthonormal bases of the spans of the nonzero faces of `cone(gens)`.
/// Every face is cut out by the polar generators vanishing on it, so the
/// faces are the intersections of the zero sets of the polar generators.
fn face_bases(gens: &[Vec<f64>], polar: &[Vec<f64>], dim: usize) -> Vec<DMatrix<f64>> {
    let full: Vec<bool> = vec![true; gens.len()];
    let zero_sets: Vec<Vec<bool>> = polar
        .iter()
        .map(|h| gens.iter().map(|g| dot(h, g).abs() <= TIGHT_TOL * 10.0).collect())
        .collect();
    let mut faces = vec![full];
    let mut next = 0;
    while next < faces.len() {
        let face = faces[next].clone();
        next += 1;
        for z in &zero_sets {
            let sub: Vec<bool> = face.iter().zip(z).map(|(a, b)| *a && *b).collect();
            if sub.iter().any(|&b| b) && !faces.contains(&sub) {
                faces.push(sub);
            }
        }
    }
    faces
        .iter()
        .map(|face| {
            let mut basis: Vec<Vec<f64>> = Vec::new();
            for (g, _) in gens.iter().zip(face).filter(|(_, &on)| on) {
                let mut r = g.clone();
                for _ in 0..2 {
                    for b in &basis {
                        let t = dot(b, &r);
                        r.iter_mut().zip(b).for_each(|(x, y)| *x -= t * y);
                    }
                }
                let n = norm(&r);
                if n > RANK_TOL {
                    basis.push(r.into_iter().map(|x| x / n).collect());
                }
            }
            DMatrix::from_fn(dim, basis.len(), |a, b| basis[b][a])
        })
        .collect()
}

/// Generators of `{x : <a_i, x> <= 0}` for unit constraint normals `a_i`.
fn polar_generators(dim: usize, normals: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut out = Vec::new();
    if normals.is_empty() {
        for i in 0..dim {
            for s in [1.0, -1.0] {
                let mut e = vec![0.0; dim];
                e[i] = s;
                out.push(e);
            }
        }
        return out;
    }
    // Split R^d into W = span(normals) and its complement, the lineality
    // space of the polar. Inside W the polar is pointed.
    let g = DMatrix::from_fn(dim, normals.len(), |i, j| normals[j][i]);
    let svd = g.svd(true, false);
    let u = svd.u.expect("left singular vectors requested");
    let smax = svd.singular_values.max().max(1.0);
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]).then(a.cmp(&b)));
    let w_cols: Vec<Vec<f64>> = order
        .into_iter()
        .filter(|&c| svd.singular_values[c] > RANK_TOL * smax)
        .map(|c| u.column(c).iter().copied().collect())
        .collect();
    // The complement of W, read off the projector onto it.
    let mut proj = DMatrix::<f64>::identity(dim, dim);
    for w in &w_cols {
        let wv = DVector::from_column_slice(w);
        proj -= &wv * wv.transpose();
    }
    let eig = SymmetricEigen::new(proj);
    let mut l_idx: Vec<usize> = (0..dim).filter(|&c| eig.eigenvalues[c] > 0.5).collect();
    l_idx.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    let l_cols: Vec<Vec<f64>> = l_idx
        .into_iter()
        .map(|c| eig.eigenvectors.column(c).iter().copied().collect())
        .collect();
    for l in &l_cols {
        out.push(l.clone());
        out.push(l.iter().map(|x| -x).collect());
    }
    let r = w_cols.len();
    let a: Vec<Vec<f64>> = normals
        .iter()
        .map(|n| {
            let c: Vec<f64> = w_cols.iter().map(|w| dot(w, n)).collect();
            let cn = norm(&c);
            c.into_iter().map(|x| x / cn).collect()
        })
        .collect();
    for ray in pointed_extreme_rays(r, &a) {
        let mut v = vec![0.0; dim];
        for (coef, w) in ray.iter().zip(&w_cols) {
            v.iter_mut().zip(w).for_each(|(x, y)| *x += coef * y);
        }
        let n = norm(&v);
        out.push(v.into_iter().map(|x| x / n).collect());
    }
    out
}

/// Double description: extreme rays of the pointed cone `{x in R^r : A x <= 0}`
/// where the rows of `A` span `R^r`.
fn pointed_extreme_rays(r: usize, a: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let m = a.len();
    // Initial simplicial cone from r independent constraints, chosen greedily
    // by largest residual.
    let mut chosen: Vec<usize> = Vec::with_capacity(r);
    let mut basis: Vec<Vec<f64>> = Vec::new();
    while chosen.len() < r {
        let mut best: Option<(f64, usize, Vec<f64>)> = None;
        for (i, ai) in a.iter().enumerate() {
            if chosen.contains(&i) {
                continue;
            }
            let mut res = ai.clone();
            for _ in 0..2 {
                for b in &basis {
                    let t = dot(b, &res);
                    res.iter_mut().zip(b).for_each(|(x, y)| *x -= t * y);
                }
            }
            let n = norm(&res);
            if best.as_ref().is_none_or(|(bn, _, _)| n > *bn) {
                best = Some((n, i, res));
            }
        }
        let (n, i, res) = best.expect("constraints span the space");
        chosen.push(i);
        basis.push(res.into_iter().map(|x| x / n).collect());
    }
    let a0 = DMatrix::from_fn(r, r, |i, j| a[chosen[i]][j]);
    let inv = a0
        .try_inverse()
        .expect("initial constraints are independent");
    let mut processed = vec![false; m];
    for &i in &chosen {
        processed[i] = true;
    }
    let mut rays: Vec<Vec<f64>> = Vec::new();
    let mut zeros: Vec<Vec<bool>> = Vec::new();
    for j in 0..r {
        let v: Vec<f64> = (0..r).map(|i| -inv[(i, j)]).collect();
        let n = norm(&v);
        rays.push(v.into_iter().map(|x| x / n).collect());
        let mut z = vec![false; m];
        for (k, &c) in chosen.iter().enumerate() {
            z[c] = k != j;
        }
        zeros.push(z);
    }
    for c in 0..m {
        if processed[c] {
            continue;
        }
        let vals: Vec<f64> = rays.iter().map(|ray| dot(&a[c], ray)).collect();
        let pos: Vec<usize> = (0..rays.len()).filter(|&i| vals[i] > TIGHT_TOL).collect();
        let neg: Vec<usize> = (0..rays.len()).filter(|&i| vals[i] < -TIGHT_TOL).collect();
        let mut next_rays = Vec::new();
        let mut next_zeros = Vec::new();
        for i in 0..rays.len() {
            if vals[i] <= TIGHT_TOL {
                let mut z = zeros[i].clone();
                z[c] = vals[i] >= -TIGHT_TOL;
                next_rays.push(rays[i].clone());
                next_zeros.push(z);
            }
        }
        for &p in &pos {
            for &q in &neg {
                let common: Vec<bool> = (0..m).map(|k| zeros[p][k] && zeros[q][k]).collect();
                let count = common.iter().filter(|&&b| b).count();
                if count + 2 < r {
                    continue;
                }
                let adjacent = (0..rays.len()).all(|o| {
                    o == p || o == q || (0..m).any(|k| common[k] && !zeros[o][k])
                });
                if !adjacent {
                    continue;
                }
                let v: Vec<f64> = rays[q]
                    .iter()
                    .zip(&rays[p])
                    .map(|(y, x)| vals[p] * y - vals[q] * x)
                    .collect();
                let n = norm(&v);
                if n == 0.0 {
                    continue;
                }
                let mut z = common;
                z[c] = true;
                next_rays.push(v.into_iter().map(|x| x / n).collect());
                next_zeros.push(z);
            }
        }
        rays = next_rays;
        zeros = next_zeros;
        processed[c] = true;
    }
    rays
}

/// Lawson-Hanson nonnegative least squares: `min |A x - b|` over `x >= 0`.
/// Returns the minimizer and the residual norm.
pub fn nnls(a: &DMatrix<f64>, b: &DVector<f64>) -> (DVector<f64>, f64) {
    let n = a.ncols();
    let mut x = DVector::zeros(n);
    if n == 0 {
        return (x, b.norm());
    }
    let tol = 10.0 * f64::EPSILON * (n as f64) * b.norm().max(1.0);
    let mut passive = vec![false; n];
    let max_outer = 3 * n + 30;
    for _ in 0..max_outer {
        let w = a.transpose() * (b - a * &x);
        let cand = (0..n)
            .filter(|&j| !passive[j])
            .max_by(|&i, &j| w[i].total_cmp(&w[j]).then(j.cmp(&i)));
        let Some(j) = cand else { break };
        if w[j] <= tol {
            break;
        }
        passive[j] = true;
        let mut inner = 0;
        loop {
            inner += 1;
            let s = passive_solve(a, b, &passive);
            let feasible = (0..n).all(|k| !passive[k] || s[k] > 0.0);
            if feasible || inner > 3 * n + 30 {
                x = s.map(|v| v.max(0.0));
                break;
            }
            let mut alpha = f64::INFINITY;
            for k in 0..n {
                if passive[k] && s[k] <= 0.0 {
                    let denom = x[k] - s[k];
                    if denom > 0.0 {
                        alpha = alpha.min(x[k] / denom);
                    }
                }
            }
            if !alpha.is_finite() {
                alpha = 0.0;
            }
            x += (s - &x) * alpha;
            for k in 0..n {
                if passive[k] && x[k] <= tol {
                    passive[k] = false;
                    x[k] = 0.0;
                }
            }
        }
    }
    let r = (a * &x - b).norm();
    (x, r)
}

fn passive_solve(a: &DMatrix<f64>, b: &DVector<f64>, passive: &[bool]) -> DVector<f64> {
    let idx: Vec<usize> = (0..passive.len()).filter(|&k| passive[k]).collect();
    let sub = DMatrix::from_fn(a.nrows(), idx.len(), |i, j| a[(i, idx[j])]);
    let sol = sub
        .svd(true, true)
        .solve(b, 1e-13)
        .unwrap_or_else(|_| DVector::zeros(idx.len()));
    let mut s = DVector::zeros(passive.len());
    for (j, &k) in idx.iter().enumerate() {
        s[k] = sol[j];
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

    fn cone(d: usize, g: &[&[f64]]) -> PolyhedralCone {
        PolyhedralCone::new(d, &g.iter().map(|v| v.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    fn same_set(a: &PolyhedralCone, b: &PolyhedralCone) -> bool {
        cone_subset(a, b, 1e-8) && cone_subset(b, a, 1e-8)
    }

    #[test]
    fn membership_examples() {
        let q = cone(2, &[&[1.0, 0.0], &[0.0, 1.0]]);
        assert!(cone_contains(&q, &[1.0, 1.0], MEMBERSHIP_TOL));
        assert!(!cone_contains(&q, &[-1.0, 0.0], MEMBERSHIP_TOL));
        let ray = cone(2, &[&[1.0, 0.0]]);
        assert!(cone_contains(&ray, &[0.0, 0.0], MEMBERSHIP_TOL));
    }

    #[test]
    fn dual_examples() {
        let q = cone(2, &[&[1.0, 0.0], &[0.0, 1.0]]);
        assert!(same_set(&dual_cone(&q).unwrap(), &cone(2, &[&[-1.0, 0.0], &[0.0, -1.0]])));

        let axis = cone(2, &[&[1.0, 0.0], &[-1.0, 0.0]]);
        assert!(same_set(&dual_cone(&axis).unwrap(), &cone(2, &[&[0.0, 1.0], &[0.0, -1.0]])));

        let ray = cone(2, &[&[1.0, 0.0]]);
        let half = cone(2, &[&[-1.0, 0.0], &[0.0, 1.0], &[0.0, -1.0]]);
        assert!(same_set(&dual_cone(&ray).unwrap(), &half));
    }

    #[test]
    fn dual_of_trivial_and_full() {
        let zero = PolyhedralCone::new(3, &[]).unwrap();
        let full = dual_cone(&zero).unwrap();
        assert_eq!(is_vector_space(&full, MEMBERSHIP_TOL), (true, 3));
        let back = dual_cone(&full).unwrap();
        assert!(back.generators().is_empty());
    }

    #[test]
    fn dual_budget_is_enforced() {
        let c = PolyhedralCone::new(9, &[vec![1.0; 9]]).unwrap();
        assert!(matches!(dual_cone(&c), Err(Error::DualBudgetExceeded { .. })));
    }

    #[test]
    fn vector_space_examples() {
        assert!(!is_vector_space(&cone(2, &[&[1.0, 0.0]]), MEMBERSHIP_TOL).0);
        assert_eq!(
            is_vector_space(&cone(2, &[&[1.0, 0.0], &[-1.0, 0.0]]), MEMBERSHIP_TOL),
            (true, 1)
        );
        assert_eq!(
            is_vector_space(
                &cone(2, &[&[1.0, 0.0], &[0.0, 1.0], &[-1.0, 0.0], &[0.0, -1.0]]),
                MEMBERSHIP_TOL
            ),
            (true, 2)
        );
    }

    #[test]
    fn thickening_examples() {
        let ray = cone(2, &[&[1.0, 0.0]]);
        assert!(thickened_contains(&ray, 1e-3, &[2.0, 0.0]).unwrap());
        assert!(!thickened_contains(&ray, FRAC_PI_4, &[0.0, 1.0]).unwrap());
        assert!(thickened_contains(&ray, FRAC_PI_2 + 0.01, &[0.0, 1.0]).unwrap());
        assert!(thickened_contains(&ray, FRAC_PI_4 + 1e-6, &[1.0, 1.0]).unwrap());
        assert!(matches!(
            thickened_contains(&ray, 0.1, &[0.0, 0.0]),
            Err(Error::ZeroVector)
        ));
    }

    #[test]
    fn angle_beyond_right_angle() {
        let ray = cone(2, &[&[1.0, 0.0]]);
        let a = ray.angle_to(&[-1.0, 1.0]).unwrap();
        assert!((a - 3.0 * FRAC_PI_4).abs() < 1e-12);
    }

    #[test]
    fn containment_angle_can_peak_between_generators() {
        // Generators sit 45 degrees from the quarter plane, but their bisector
        // sits at atan(sqrt 2).
        let y = cone(3, &[&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0]]);
        let x = cone(3, &[&[1.0, 0.0, 1.0], &[0.0, 1.0, 1.0]]);
        let s = max_sine_to_cone(&x, &y).unwrap();
        let expected = (2.0_f64.sqrt()).atan().sin();
        assert!((s - expected).abs() < 1e-10, "{s} vs {expected}");
        assert!(!cone_within_thickening(&x, &y, 50f64.to_radians()).unwrap());
        assert!(cone_within_thickening(&x, &y, 56f64.to_radians()).unwrap());
    }

    /// Orthonormal bases of the spans of all independent generator subsets:
    /// a superset of the face spans, so scoring every pair of them is an
    /// exhaustive oracle for `max_sine_to_cone`.
    fn subset_bases(gens: &[Vec<f64>], dim: usize) -> Vec<DMatrix<f64>> {
        let mut out = Vec::new();
        for mask in 1u32..(1 << gens.len()) {
            let chosen: Vec<&Vec<f64>> = (0..gens.len()).filter(|i| mask >> i & 1 == 1).map(|i| &gens[i]).collect();
            if chosen.len() > dim || numerical_rank(&chosen.iter().map(|v| v.to_vec()).collect::<Vec<_>>(), dim) < chosen.len() {
                continue;
            }
            let m = DMatrix::from_fn(dim, chosen.len(), |a, b| chosen[b][a]);
            let q = m.qr().q();
            out.push(q.columns(0, chosen.len()).into_owned());
        }
        out
    }

    fn max_sine_exhaustive(k: &PolyhedralCone, c: &PolyhedralCone) -> f64 {
        let mut best = k.generators.iter().map(|g| c.distance(g)).fold(0.0, f64::max);
        for qs in subset_bases(&k.generators, k.dim) {
            for qt in subset_bases(&c.generators, c.dim) {
                let svd = (qs.transpose() * &qt).svd(true, false);
                let u = svd.u.unwrap();
                for j in 0..u.ncols() {
                    let x: Vec<f64> = (&qs * u.column(j)).iter().copied().collect();
                    for sign in [1.0, -1.0] {
                        let xs: Vec<f64> = x.iter().map(|v| sign * v).collect();
                        if cone_contains(k, &xs, 1e-10) {
                            best = best.max(c.distance(&xs));
                        }
                    }
                }
            }
        }
        best.min(1.0)
    }

    #[test]
    fn face_enumeration_matches_exhaustive_search() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        let mut compared = 0;
        for _ in 0..60 {
            let d = rng.random_range(2..=4);
            let mut gens = || -> Vec<Vec<f64>> {
                (0..rng.random_range(1..=d + 1))
                    .map(|_| (0..d).map(|_| rng.random_range(-1.0..1.0)).collect())
                    .collect()
            };
            let (gk, gc) = (gens(), gens());
            let (k, c) = (PolyhedralCone::new(d, &gk).unwrap(), PolyhedralCone::new(d, &gc).unwrap());
            let fast = max_sine_to_cone(&k, &c).unwrap();
            if fast < 1.0 {
                assert!((fast - max_sine_exhaustive(&k, &c)).abs() < 1e-9, "{gk:?} {gc:?}");
                compared += 1;
            }
        }
        assert!(compared > 10);
    }

    #[test]
    fn nnls_matches_known_solution() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1.0]);
        let b = DVector::from_vec(vec![2.0, -3.0]);
        let (x, r) = nnls(&a, &b);
        assert!((x[0] - 2.0).abs() < 1e-15 && x[1] == 0.0);
        assert!((r - 3.0).abs() < 1e-15);
    }
}
