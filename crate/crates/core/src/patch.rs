//! Local charts of a sampled manifold as graphs over a tangent space.
//!
//! Near a point `p`, a set of positive reach `R` is the graph of a map
//! `phi: T_p -> N_p`, so each sample is `q = p + x + phi(x)`. This module
//! extracts such a patch, fits `D phi` by local least squares, and checks the
//! quantitative statements about it: the Lipschitz constant of `D phi`, the
//! convexity of `x -> |x|^2/2 - r <v, phi(x)>`, and the angle between graphs
//! of nearby linear maps.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::cloud::PointCloud;
use crate::error::{Error, Result};
use crate::linalg::{self, dist, grassmann_angle, norm, operator_norm, LinearMap, Subspace};
use crate::spatial::KdTree;

/// Largest number of sample pairs visited by the convexity tests before
/// switching to a seeded random subset.
pub const MAX_CONVEXITY_PAIRS: usize = 200_000;

#[derive(Debug, Clone, PartialEq)]
pub struct PatchSample {
    /// Index of the source point in the cloud.
    pub index: usize,
    /// Tangent coordinates.
    pub x: Vec<f64>,
    /// Normal coordinates, `phi(x)`.
    pub phi: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct GraphPatch {
    pub base_index: usize,
    pub base: Vec<f64>,
    pub tangent: Subspace,
    pub normal: Subspace,
    pub samples: Vec<PatchSample>,
    /// Reach scale used for the selection.
    pub radius: f64,
    /// Tangent-coordinate distance below which two samples count as sharing
    /// a position.
    pub spacing: f64,
    /// `D phi` at each sample, once fitted.
    pub derivatives: Option<Vec<LinearMap>>,
    /// Largest residual of the local fits.
    pub fit_residual: f64,
    /// Residual of the local fit at each sample; empty before fitting.
    pub fit_residuals: Vec<f64>,
    /// Largest stencil radius used by the fits.
    pub stencil_radius: f64,
    pub warnings: Vec<String>,
}

impl GraphPatch {
    pub fn intrinsic_dim(&self) -> usize {
        self.tangent.dim()
    }

    pub fn codim(&self) -> usize {
        self.normal.dim()
    }

    /// `p + x + phi(x)` for sample `k`, in ambient coordinates.
    pub fn reconstruct(&self, k: usize) -> Vec<f64> {
        let s = &self.samples[k];
        let mut out = self.base.clone();
        for (j, c) in s.x.iter().enumerate() {
            out.iter_mut()
                .zip(self.tangent.basis_vector(j))
                .for_each(|(o, b)| *o += c * b);
        }
        for (j, c) in s.phi.iter().enumerate() {
            out.iter_mut()
                .zip(self.normal.basis_vector(j))
                .for_each(|(o, b)| *o += c * b);
        }
        out
    }

    /// Error bound on fitted derivatives: stencil radius over the reach
    /// scale. Zero before fitting.
    pub fn derivative_tolerance(&self) -> f64 {
        self.stencil_radius / self.radius
    }

    fn x_tree(&self) -> KdTree {
        let flat: Vec<f64> = self.samples.iter().flat_map(|s| s.x.iter().copied()).collect();
        KdTree::new(self.intrinsic_dim(), &flat)
    }

    fn inside(&self, alpha: f64) -> Vec<usize> {
        (0..self.samples.len())
            .filter(|&k| norm(&self.samples[k].x) < alpha)
            .collect()
    }
}

/// Samples `q` with `|q - p| < sqrt(2) R` and `|P_T (q - p)| < R`, written as
/// `(x, phi(x))` over the tangent space at `p`.
///
/// Fails with [`Error::ReachHypothesisViolated`] when two samples at
/// (nearly) the same tangent position lie on different sheets, detected as a
/// violation of `d(q', q + T_q) <= |q - q'|^2 / (2R)`.
pub fn extract_patch(cloud: &PointCloud, p: usize, r: f64, spacing: f64) -> Result<GraphPatch> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::InvalidParameter(format!("patch radius {r} must be positive")));
    }
    let tangent = cloud.tangent(p)?.clone();
    let n = tangent.dim();
    if n == 0 || n >= cloud.dim() {
        return Err(Error::UnsupportedDimension {
            dim: n,
            ambient: cloud.dim(),
        });
    }
    let normal = tangent.orthogonal_complement();
    let base = cloud.point(p).to_vec();
    let tree = cloud.kdtree();
    let mut samples = Vec::new();
    let mut warnings = Vec::new();
    for j in tree.within(&base, std::f64::consts::SQRT_2 * r, false) {
        let v = linalg::sub(cloud.point(j), &base);
        let x = tangent.coordinates(&v);
        if norm(&x) >= r {
            continue;
        }
        let phi = normal.coordinates(&v);
        if norm(&phi) > r {
            warnings.push(format!(
                "sample {j} has normal offset {:.6e} beyond the reach scale",
                norm(&phi)
            ));
        }
        samples.push(PatchSample { index: j, x, phi });
    }
    let patch = GraphPatch {
        base_index: p,
        base,
        tangent,
        normal,
        samples,
        radius: r,
        spacing,
        derivatives: None,
        fit_residual: 0.0,
        fit_residuals: Vec::new(),
        stencil_radius: 0.0,
        warnings,
    };
    check_injective(cloud, &patch)?;
    Ok(patch)
}

fn check_injective(cloud: &PointCloud, patch: &GraphPatch) -> Result<()> {
    let tree = patch.x_tree();
    for (a, s) in patch.samples.iter().enumerate() {
        for b in tree.within(&s.x, patch.spacing, true) {
            if b <= a {
                continue;
            }
            let (i, j) = (s.index, patch.samples[b].index);
            let (q, q2) = (cloud.point(i), cloud.point(j));
            let h = dist(q, q2);
            if h == 0.0 {
                continue;
            }
            let t = cloud.tangent(i).unwrap_or(&patch.tangent);
            let off = t.residual_norm(&linalg::sub(q2, q));
            if off > h * h / (2.0 * patch.radius) * (1.0 + 1e-6) + 1e-12 {
                return Err(Error::ReachHypothesisViolated(i.min(j), i.max(j)));
            }
        }
    }
    Ok(())
}

/// Default fitting neighbourhood, `3n + 3` samples.
pub fn default_neighborhood_size(n: usize) -> usize {
    3 * n + 3
}

/// Fits `D phi` at every sample as the linear part of a least-squares
/// quadratic fit of `phi` over its `k` nearest neighbours in tangent
/// coordinates (ties at the cutoff are kept). The quadratic terms keep the
/// derivative error second order on lopsided neighbourhoods, where an affine
/// fit is only first order.
pub fn fit_derivatives(mut patch: GraphPatch, k: usize) -> Result<GraphPatch> {
    let n = patch.intrinsic_dim();
    let m = patch.codim();
    let terms = 1 + n + n * (n + 1) / 2;
    if k + 1 < terms || patch.samples.len() < terms {
        return Err(Error::TooFewPoints {
            need: terms,
            got: (k + 1).min(patch.samples.len()),
        });
    }
    let tree = patch.x_tree();
    let fits = (0..patch.samples.len())
        .into_par_iter()
        .map(|a| -> Result<(LinearMap, f64, f64)> {
            let center = &patch.samples[a].x;
            let knn = tree.knn(center, k + 1);
            let cutoff = knn.last().map_or(0.0, |x| x.0);
            let stencil = tree.within(center, cutoff, true);
            let rows = stencil.len();
            if rows < terms || cutoff == 0.0 {
                return Err(Error::RankDeficient(patch.samples[a].index));
            }
            // Offsets scaled by the stencil radius keep the columns comparable.
            let design = DMatrix::from_fn(rows, terms, |r, c| {
                let y = &patch.samples[stencil[r]].x;
                let u = |i: usize| (y[i] - center[i]) / cutoff;
                if c == 0 {
                    1.0
                } else if c <= n {
                    u(c - 1)
                } else {
                    let (i, j) = quadratic_term(n, c - 1 - n);
                    u(i) * u(j)
                }
            });
            let svd = design.clone().svd(true, true);
            let smax = svd.singular_values.max();
            let smin = svd.singular_values.min();
            if !(smin > 1e-8 * smax) {
                return Err(Error::RankDeficient(patch.samples[a].index));
            }
            let mut jac = DMatrix::zeros(m, n);
            let mut residual: f64 = 0.0;
            for comp in 0..m {
                let rhs = DVector::from_fn(rows, |r, _| patch.samples[stencil[r]].phi[comp]);
                let coef = svd
                    .solve(&rhs, 0.0)
                    .map_err(|_| Error::RankDeficient(patch.samples[a].index))?;
                for c in 0..n {
                    jac[(comp, c)] = coef[c + 1] / cutoff;
                }
                residual = residual.max((&design * &coef - rhs).amax());
            }
            Ok((LinearMap::new(jac)?, residual, cutoff))
        })
        .collect::<Result<Vec<_>>>()?;
    patch.fit_residuals = fits.iter().map(|f| f.1).collect();
    patch.fit_residual = patch.fit_residuals.iter().copied().fold(0.0, f64::max);
    patch.stencil_radius = fits.iter().map(|f| f.2).fold(0.0, f64::max);
    patch.derivatives = Some(fits.into_iter().map(|f| f.0).collect());
    let base_slot = patch
        .samples
        .iter()
        .position(|s| s.index == patch.base_index)
        .expect("the base point belongs to its own patch");
    let d0 = patch.derivatives.as_ref().expect("just set")[base_slot].operator_norm();
    if d0 > patch.derivative_tolerance() {
        patch.warnings.push(format!(
            "fitted derivative at the base point has norm {d0:.3e}, above the fit tolerance {:.3e}",
            patch.derivative_tolerance()
        ));
    }
    Ok(patch)
}

/// The `t`-th pair `(i, j)`, `i <= j`, in row-major order.
fn quadratic_term(n: usize, t: usize) -> (usize, usize) {
    let mut t = t;
    for i in 0..n {
        let row = n - i;
        if t < row {
            return (i, i + t);
        }
        t -= row;
    }
    unreachable!("quadratic term index out of range")
}

/// Measured Lipschitz constant of `D phi` on the open tangent ball of
/// radius `alpha`, against the bound `1 / (rch_loc - epsilon)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LipschitzCheck {
    pub constant: f64,
    /// Cloud indices of the pair attaining it.
    pub pair: (usize, usize),
    pub bound: f64,
    /// Allowance for derivative fitting error, `bound * spacing / alpha`.
    pub tolerance: f64,
    pub pass: bool,
}

pub fn lipschitz_derivative_constant(
    patch: &GraphPatch,
    alpha: f64,
    rch_loc: f64,
    epsilon: f64,
) -> Result<LipschitzCheck> {
    let derivs = patch
        .derivatives
        .as_ref()
        .ok_or_else(|| Error::InvalidParameter("derivatives have not been fitted".into()))?;
    let inside = patch.inside(alpha);
    if inside.len() < 2 {
        return Err(Error::TooFewPoints {
            need: 2,
            got: inside.len(),
        });
    }
    let (constant, pair) = inside
        .par_iter()
        .enumerate()
        .map(|(ia, &a)| {
            let mut best = (0.0, (usize::MAX, usize::MAX));
            for &b in &inside[ia + 1..] {
                let dx = dist(&patch.samples[a].x, &patch.samples[b].x);
                if dx == 0.0 {
                    continue;
                }
                let diff = derivs[b].matrix() - derivs[a].matrix();
                let ratio = operator_norm(&diff) / dx;
                let key = (patch.samples[a].index, patch.samples[b].index);
                if ratio > best.0 || (ratio == best.0 && key < best.1) {
                    best = (ratio, key);
                }
            }
            best
        })
        .reduce(
            || (0.0, (usize::MAX, usize::MAX)),
            |x, y| if y.0 > x.0 || (y.0 == x.0 && y.1 < x.1) { y } else { x },
        );
    let bound = if rch_loc - epsilon > 0.0 {
        1.0 / (rch_loc - epsilon)
    } else {
        f64::INFINITY
    };
    let tolerance = bound * patch.spacing / alpha;
    Ok(LipschitzCheck {
        constant,
        pair,
        bound,
        tolerance,
        pass: constant <= bound + tolerance,
    })
}

/// `sqrt(epsilon R)`, the neighbourhood radius on which `D phi` is claimed to
/// be `1/(R - epsilon)`-Lipschitz, for `epsilon / R <= 1/2`.
pub fn alpha_bound(epsilon: f64, r: f64) -> Result<f64> {
    if !(epsilon > 0.0 && r > 0.0 && r.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "epsilon {epsilon} and R {r} must be positive"
        )));
    }
    if epsilon / r > 0.5 {
        return Err(Error::OutsideHypothesis(format!(
            "epsilon / R = {} exceeds 1/2",
            epsilon / r
        )));
    }
    Ok((epsilon * r).sqrt())
}

/// Discrete convexity of `g(x) = |x|^2 / 2 - r <v, phi(x)>` along one normal
/// direction.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvexityVerdict {
    pub direction: Vec<f64>,
    /// Largest `g(mid) - (g(y) + g(y'))/2` over tested pairs.
    pub midpoint_excess: f64,
    pub midpoint_witness: (usize, usize),
    /// Largest `g(y) + Dg(y)(y' - y) - g(y')` over tested pairs.
    pub taylor_excess: f64,
    pub taylor_witness: (usize, usize),
    pub slack: f64,
    pub pairs_tested: usize,
    pub pass: bool,
}

/// Normal basis vectors followed by `2 (d - n)` random unit combinations.
pub fn default_directions(patch: &GraphPatch, seed: u64) -> Vec<Vec<f64>> {
    let m = patch.codim();
    let mut out: Vec<Vec<f64>> = (0..m).map(|j| patch.normal.basis_vector(j).to_vec()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..2 * m {
        let coef: Vec<f64> = (0..m).map(|_| rng.random_range(-1.0..1.0)).collect();
        let c = norm(&coef);
        if c == 0.0 {
            continue;
        }
        let mut v = vec![0.0; patch.base.len()];
        for (j, cj) in coef.iter().enumerate() {
            v.iter_mut()
                .zip(patch.normal.basis_vector(j))
                .for_each(|(o, b)| *o += cj / c * b);
        }
        out.push(v);
    }
    out
}

/// Tests convexity of `g` on the open tangent ball of radius `alpha` for each
/// unit normal direction: the midpoint inequality (midpoint value from the
/// nearest sample, corrected to first order) and the first-order Taylor
/// inequality using the fitted derivatives.
///
/// Tolerance: `2 r e + spacing^2 / (2 (r - epsilon))`, where `e` is the
/// largest fit residual inside the ball, falling back to `spacing^2 / (2 r)`
/// in the second term when `r <= epsilon`.
pub fn semiconvexity_check(
    patch: &GraphPatch,
    r: f64,
    epsilon: f64,
    alpha: f64,
    directions: &[Vec<f64>],
    seed: u64,
) -> Result<Vec<ConvexityVerdict>> {
    let derivs = patch
        .derivatives
        .as_ref()
        .ok_or_else(|| Error::InvalidParameter("derivatives have not been fitted".into()))?;
    let n = patch.intrinsic_dim();
    let inside = patch.inside(alpha);
    if inside.len() < 2 {
        return Err(Error::TooFewPoints {
            need: 2,
            got: inside.len(),
        });
    }
    let denom = if r > epsilon { r - epsilon } else { r };
    let residual = inside.iter().map(|&k| patch.fit_residuals[k]).fold(0.0, f64::max);
    let slack = 2.0 * r * residual + patch.spacing * patch.spacing / (2.0 * denom);
    let pairs = convexity_pairs(inside.len(), seed);
    let tree = patch.x_tree();
    let mut out = Vec::with_capacity(directions.len());
    for v in directions {
        if v.len() != patch.base.len() {
            return Err(Error::DimensionMismatch {
                expected: patch.base.len(),
                found: v.len(),
            });
        }
        if (norm(v) - 1.0).abs() > 1e-9 || patch.normal.residual_norm(v) > 1e-9 {
            return Err(Error::InvalidParameter(
                "direction must be a unit vector of the normal space".into(),
            ));
        }
        let w = patch.normal.coordinates(v);
        let g = |k: usize| -> f64 {
            let s = &patch.samples[k];
            0.5 * linalg::dot(&s.x, &s.x) - r * linalg::dot(&w, &s.phi)
        };
        let grad = |k: usize| -> Vec<f64> {
            let s = &patch.samples[k];
            let jac = derivs[k].matrix();
            (0..n)
                .map(|c| s.x[c] - r * (0..w.len()).map(|comp| w[comp] * jac[(comp, c)]).sum::<f64>())
                .collect()
        };
        let gvals: Vec<f64> = (0..patch.samples.len()).map(g).collect();
        let grads: Vec<Vec<f64>> = (0..patch.samples.len()).map(grad).collect();
        let key = |a: usize, b: usize| (patch.samples[a].index, patch.samples[b].index);
        type Best = ((f64, (usize, usize)), (f64, (usize, usize)));
        let pick = |x: (f64, (usize, usize)), y: (f64, (usize, usize))| {
            if y.0 > x.0 || (y.0 == x.0 && y.1 < x.1) {
                y
            } else {
                x
            }
        };
        let none = (f64::NEG_INFINITY, (usize::MAX, usize::MAX));
        let (mid_best, taylor_best): Best = pairs
            .par_iter()
            .map(|&(ia, ib)| -> Best {
                let (a, b) = (inside[ia], inside[ib]);
                let (ya, yb) = (&patch.samples[a].x, &patch.samples[b].x);
                let m: Vec<f64> = ya.iter().zip(yb).map(|(p, q)| 0.5 * (p + q)).collect();
                let z = tree.knn(&m, 1)[0].1;
                let gz = gvals[z]
                    + grads[z]
                        .iter()
                        .zip(m.iter().zip(&patch.samples[z].x))
                        .map(|(gc, (mc, zc))| gc * (mc - zc))
                        .sum::<f64>();
                let mid_excess = gz - 0.5 * (gvals[a] + gvals[b]);
                let lin_ab: f64 = grads[a].iter().zip(yb.iter().zip(ya)).map(|(gc, (q, p))| gc * (q - p)).sum();
                let lin_ba: f64 = grads[b].iter().zip(ya.iter().zip(yb)).map(|(gc, (p, q))| gc * (p - q)).sum();
                let t_ab = (gvals[a] + lin_ab - gvals[b], key(a, b));
                let t_ba = (gvals[b] + lin_ba - gvals[a], key(b, a));
                ((mid_excess, key(a, b)), pick(t_ab, t_ba))
            })
            .reduce(|| (none, none), |x, y| (pick(x.0, y.0), pick(x.1, y.1)));
        out.push(ConvexityVerdict {
            direction: v.clone(),
            midpoint_excess: mid_best.0,
            midpoint_witness: mid_best.1,
            taylor_excess: taylor_best.0,
            taylor_witness: taylor_best.1,
            slack,
            pairs_tested: pairs.len(),
            pass: mid_best.0 <= slack && taylor_best.0 <= slack,
        });
    }
    Ok(out)
}

fn convexity_pairs(count: usize, seed: u64) -> Vec<(usize, usize)> {
    let total = count * (count - 1) / 2;
    if total <= MAX_CONVEXITY_PAIRS {
        let mut pairs = Vec::with_capacity(total);
        for a in 0..count {
            for b in a + 1..count {
                pairs.push((a, b));
            }
        }
        return pairs;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..MAX_CONVEXITY_PAIRS)
        .map(|_| loop {
            let a = rng.random_range(0..count);
            let b = rng.random_range(0..count);
            if a != b {
                break (a.min(b), a.max(b));
            }
        })
        .collect()
}

/// Graph-angle bound for linear maps: `2 sin(angle / 2) <= |F2 - F1|` where
/// the angle is between the graphs of `F1` and `F2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AngleBound {
    pub lhs: f64,
    pub rhs: f64,
    pub pass: bool,
}

pub fn operator_norm_angle_bound(f1: &LinearMap, f2: &LinearMap) -> Result<AngleBound> {
    if f1.matrix().shape() != f2.matrix().shape() {
        return Err(Error::DimensionMismatch {
            expected: f1.domain_dim() * f1.codomain_dim(),
            found: f2.domain_dim() * f2.codomain_dim(),
        });
    }
    if f1.domain_dim() == 0 || f1.codomain_dim() == 0 {
        return Err(Error::ZeroDimensional);
    }
    let angle = grassmann_angle(&f1.graph_subspace(), &f2.graph_subspace())?;
    let lhs = 2.0 * (angle / 2.0).sin();
    let rhs = operator_norm(&(f2.matrix() - f1.matrix()));
    Ok(AngleBound {
        lhs,
        rhs,
        pass: lhs <= rhs + 1e-12,
    })
}

/// Result of checking the graph-angle bound on random pairs of maps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AngleSweep {
    pub pairs: usize,
    pub failures: usize,
    /// Largest `lhs - rhs` seen.
    pub worst_excess: f64,
}

/// [`operator_norm_angle_bound`] on `pairs` random pairs of `m x n` maps with
/// `1 <= n, m <= max_dim` and Gaussian-like entries of random scale.
pub fn random_angle_bound_sweep(pairs: usize, max_dim: usize, seed: u64) -> Result<AngleSweep> {
    if max_dim == 0 {
        return Err(Error::ZeroDimensional);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failures = 0;
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..pairs {
        let n = rng.random_range(1..=max_dim);
        let m = rng.random_range(1..=max_dim);
        let scale = 10f64.powf(rng.random_range(-2.0..1.0));
        let f1 = DMatrix::from_fn(m, n, |_, _| scale * rng.random_range(-1.0..1.0));
        let near = rng.random_bool(0.5);
        let f2 = DMatrix::from_fn(m, n, |r, c| {
            let e = scale * rng.random_range(-1.0..1.0);
            if near {
                f1[(r, c)] + 1e-3 * e
            } else {
                e
            }
        });
        let b = operator_norm_angle_bound(&LinearMap::new(f1)?, &LinearMap::new(f2)?)?;
        if !b.pass {
            failures += 1;
        }
        worst = worst.max(b.lhs - b.rhs);
    }
    Ok(AngleSweep {
        pairs,
        failures,
        worst_excess: worst,
    })
}
