//! Reach estimators on finite samples.
//!
//! * [`federer_reach`]: `inf |p-q|^2 / (2 d(q, p + T_p))` over ordered pairs.
//! * [`distortion_reach`]: the smallest `r` for which intrinsic and chordal
//!   distances obey `d_S(p, q) <= 2r asin(|p-q| / 2r)`.
//! * [`global_reach`]: half the width of the narrowest bottleneck, a pair
//!   whose open midpoint ball misses the set.
//! * [`local_reach`]: the reach of the set cut down to small balls.
//!
//! Every pairwise sweep is a parallel reduction that breaks ties by the
//! lexicographically smallest index pair, so results do not depend on the
//! thread count.

use std::sync::atomic::{AtomicU64, Ordering};

use rayon::prelude::*;

use crate::cloud::PointCloud;
use crate::error::{Error, Result};
use crate::geodesics::IntrinsicMetric;
use crate::linalg::{dist, dist_sq, grassmann_angle};
use crate::spatial::KdTree;

/// An extremal value over point pairs with the pair attaining it, if any.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairExtremum {
    pub value: f64,
    pub pair: Option<(usize, usize)>,
}

impl PairExtremum {
    pub const NONE_MIN: Self = Self {
        value: f64::INFINITY,
        pair: None,
    };

    pub const NONE_MAX: Self = Self {
        value: 0.0,
        pair: None,
    };

    fn key(&self) -> (usize, usize) {
        self.pair.unwrap_or((usize::MAX, usize::MAX))
    }

    fn min(self, other: Self) -> Self {
        match self.value.total_cmp(&other.value) {
            std::cmp::Ordering::Less => self,
            std::cmp::Ordering::Greater => other,
            std::cmp::Ordering::Equal => {
                if other.key() < self.key() {
                    other
                } else {
                    self
                }
            }
        }
    }

    fn max(self, other: Self) -> Self {
        match self.value.total_cmp(&other.value) {
            std::cmp::Ordering::Greater => self,
            std::cmp::Ordering::Less => other,
            std::cmp::Ordering::Equal => {
                if other.key() < self.key() {
                    other
                } else {
                    self
                }
            }
        }
    }
}

fn require_pairs(cloud: &PointCloud) -> Result<()> {
    if cloud.len() < 2 {
        return Err(Error::TooFewPoints {
            need: 2,
            got: cloud.len(),
        });
    }
    Ok(())
}

fn require_tangents(cloud: &PointCloud) -> Result<()> {
    if !cloud.has_tangents() {
        return Err(Error::MissingTangent(0));
    }
    Ok(())
}

/// `inf |p - q|^2 / (2 d(q, p + T_p))` over ordered pairs `(p, q)`, `p != q`.
/// Pairs with `q` on the tangent flat of `p` impose no constraint.
pub fn federer_reach(cloud: &PointCloud) -> Result<PairExtremum> {
    require_pairs(cloud)?;
    require_tangents(cloud)?;
    let n = cloud.len();
    let d = cloud.dim();
    let tangents = cloud.tangents().expect("checked above");
    Ok((0..n)
        .into_par_iter()
        .map(|i| {
            let p = cloud.point(i);
            let t = &tangents[i];
            let mut diff = vec![0.0; d];
            let mut best = PairExtremum::NONE_MIN;
            for j in 0..n {
                if j == i {
                    continue;
                }
                let q = cloud.point(j);
                let mut h2 = 0.0;
                for k in 0..d {
                    diff[k] = q[k] - p[k];
                    h2 += diff[k] * diff[k];
                }
                if h2 == 0.0 {
                    continue;
                }
                let denom = 2.0 * t.residual_norm(&diff);
                if denom == 0.0 {
                    continue;
                }
                let ratio = h2 / denom;
                if ratio < best.value {
                    best = PairExtremum {
                        value: ratio,
                        pair: Some((i, j)),
                    };
                }
            }
            best
        })
        .reduce(|| PairExtremum::NONE_MIN, PairExtremum::min))
}

/// Solution of `ell = 2r asin(h / 2r)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistortionRadius {
    pub radius: f64,
    /// The path is longer than a half circle on the chord: no radius makes
    /// the relation tight and the pair only forces `r <= h/2`.
    pub semicircle_exceeded: bool,
}

/// `asin(x)/x - 1`, accurate for small `x`.
fn asin_excess(x: f64) -> f64 {
    if x < 1e-3 {
        let x2 = x * x;
        x2 * (1.0 / 6.0 + x2 * (3.0 / 40.0 + x2 * (5.0 / 112.0 + x2 * 35.0 / 1152.0)))
    } else {
        x.asin() / x - 1.0
    }
}

/// The radius `r >= h/2` with `2r asin(h / 2r) = ell`, for chord `h` and
/// intrinsic length `ell`. Equal lengths give infinity; paths longer than a
/// half circle give `h/2`.
pub fn distortion_radius(h: f64, ell: f64) -> Result<DistortionRadius> {
    if !(h > 0.0 && h.is_finite()) || ell.is_nan() {
        return Err(Error::InvalidParameter(format!(
            "chord {h} must be positive and finite"
        )));
    }
    let free = DistortionRadius {
        radius: f64::INFINITY,
        semicircle_exceeded: false,
    };
    if ell == f64::INFINITY {
        return Ok(free);
    }
    if ell < h * (1.0 - 1e-12) {
        return Err(Error::ShorterThanChord { chord: h, length: ell });
    }
    if ell <= h {
        return Ok(free);
    }
    let half_circle = std::f64::consts::FRAC_PI_2 * h;
    if ell >= half_circle {
        return Ok(DistortionRadius {
            radius: h / 2.0,
            semicircle_exceeded: ell > half_circle,
        });
    }
    // asin(x)/x is increasing on (0, 1]; solve for x = h / 2r by bisection on
    // the bit patterns of positive doubles, which bracket the root to an ulp.
    let target = (ell - h) / h;
    let mut lo = 0u64;
    let mut hi = 1.0f64.to_bits();
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if asin_excess(f64::from_bits(mid)) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let x = f64::from_bits(hi);
    Ok(DistortionRadius {
        radius: h / (2.0 * x),
        semicircle_exceeded: false,
    })
}

/// Whether a pair with chord `h` and intrinsic length `ell` yields a radius
/// strictly below `bound`.
fn may_beat(h: f64, ell: f64, bound: f64) -> bool {
    if !ell.is_finite() || ell <= h {
        return false;
    }
    if !bound.is_finite() {
        return true;
    }
    if h >= 2.0 * bound {
        return false;
    }
    ell > 2.0 * bound * (h / (2.0 * bound)).asin()
}

/// Smallest distortion radius over unordered pairs. Pairs at infinite
/// intrinsic distance impose no constraint.
pub fn distortion_reach(cloud: &PointCloud, metric: &IntrinsicMetric) -> Result<PairExtremum> {
    distortion_reach_below(cloud, metric, f64::INFINITY)
}

/// As [`distortion_reach`], but only pairs that can produce a radius below
/// `bound` are evaluated; returns infinity when none does.
fn distortion_reach_below(cloud: &PointCloud, metric: &IntrinsicMetric, bound: f64) -> Result<PairExtremum> {
    require_pairs(cloud)?;
    let n = cloud.len();
    (0..n)
        .into_par_iter()
        .map(|i| -> Result<PairExtremum> {
            let ell = metric.distances_from(cloud, i);
            let p = cloud.point(i);
            let mut best = PairExtremum::NONE_MIN;
            let mut cut = bound;
            for j in i + 1..n {
                let h = dist(p, cloud.point(j));
                if h == 0.0 || !may_beat(h, ell[j], cut) {
                    continue;
                }
                let r = distortion_radius(h, ell[j])?.radius;
                if r < best.value {
                    best = PairExtremum {
                        value: r,
                        pair: Some((i, j)),
                    };
                    cut = cut.min(r);
                }
            }
            Ok(best)
        })
        .try_reduce(|| PairExtremum::NONE_MIN, |a, b| Ok(a.min(b)))
}

/// Result of the bottleneck scan.
#[derive(Debug, Clone, PartialEq)]
pub struct GlobalReach {
    pub value: f64,
    /// Candidate pairs whose half-width is within 1% of the minimum.
    pub bottlenecks: Vec<(usize, usize)>,
}

/// Fraction of the half-circle length a bottleneck pair must be apart
/// intrinsically. Any path joining the two ends of a diameter outside the
/// open ball has length at least `pi r`; pairs far below that are
/// artefacts of the emptiness tolerance.
pub const BOTTLENECK_SEPARATION: f64 = 0.9;

/// The sample spacing (largest nearest-neighbour distance). Larger values
/// admit off-axis pairs whose balls the set enters only shallowly, biasing
/// the estimate low; smaller ones let sampling holes pass as bottlenecks.
pub fn default_emptiness_tol(cloud: &PointCloud, tree: &KdTree) -> f64 {
    cloud.spacing(tree)
}

/// `min |a-b|/2` over pairs with `|a-b|/2 > emptiness_tol` whose midpoint
/// ball, shrunk by `emptiness_tol`, contains no other sample and whose intrinsic distance is at least
/// [`BOTTLENECK_SEPARATION`] of a half circle on the chord. Infinite when
/// there is no such pair.
pub fn global_reach(cloud: &PointCloud, metric: &IntrinsicMetric, emptiness_tol: f64) -> Result<GlobalReach> {
    require_pairs(cloud)?;
    if !(emptiness_tol >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "emptiness tolerance {emptiness_tol} must be nonnegative"
        )));
    }
    let n = cloud.len();
    let d = cloud.dim();
    let tree = cloud.kdtree();
    let best_bits = AtomicU64::new(f64::INFINITY.to_bits());
    let window = 1.01;
    let mut found: Vec<(f64, usize, usize)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let a = cloud.point(i);
            let mut mid = vec![0.0; d];
            let mut empty = Vec::new();
            for j in i + 1..n {
                let b = cloud.point(j);
                let r = 0.5 * dist(a, b);
                // A ball no larger than the tolerance is empty by fiat.
                if r <= emptiness_tol {
                    continue;
                }
                let bound = f64::from_bits(best_bits.load(Ordering::Relaxed));
                if r > window * bound {
                    continue;
                }
                for k in 0..d {
                    mid[k] = 0.5 * (a[k] + b[k]);
                }
                if !tree.any_within_open(&mid, r - emptiness_tol, &[i, j]) {
                    empty.push((r, j));
                }
            }
            if empty.is_empty() {
                return Vec::new();
            }
            let reach = empty.iter().map(|&(r, _)| r).fold(0.0, f64::max);
            let limit = BOTTLENECK_SEPARATION * std::f64::consts::PI * reach;
            let ell: Vec<f64> = match metric {
                IntrinsicMetric::Graph(g) => g.distances_from_bounded(i, limit),
                IntrinsicMetric::Exact(_) => Vec::new(),
            };
            let mut kept = Vec::new();
            for (r, j) in empty {
                let l = match metric {
                    IntrinsicMetric::Graph(_) => ell[j],
                    IntrinsicMetric::Exact(a) => a.distance(cloud, i, j),
                };
                if l >= BOTTLENECK_SEPARATION * std::f64::consts::PI * r {
                    kept.push((r, i, j));
                }
            }
            if let Some(m) = kept.iter().map(|x| x.0).reduce(f64::min) {
                best_bits.fetch_min(m.to_bits(), Ordering::Relaxed);
            }
            kept
        })
        .flatten()
        .collect();
    let value = found.iter().map(|x| x.0).fold(f64::INFINITY, f64::min);
    found.retain(|x| x.0 <= window * value);
    found.sort_by(|x, y| x.0.total_cmp(&y.0).then((x.1, x.2).cmp(&(y.1, y.2))));
    Ok(GlobalReach {
        value,
        bottlenecks: found.into_iter().map(|x| (x.1, x.2)).collect(),
    })
}

/// Decreasing radii `spacing * [6, 4, 3, 2]`.
pub fn default_rho_grid(spacing: f64) -> Vec<f64> {
    [6.0, 4.0, 3.0, 2.0].iter().map(|m| m * spacing).collect()
}

/// Relative slack allowed when checking that local estimates do not
/// decrease as the ball shrinks.
pub const MONOTONE_SLACK: f64 = 0.01;

/// Reach of the sample cut down to balls of shrinking radius about one point.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalReachCurve {
    pub point: usize,
    pub rho: Vec<f64>,
    /// `None` where the ball held fewer than `n + 2` samples.
    pub values: Vec<Option<f64>>,
    /// Value at the smallest usable radius.
    pub estimate: f64,
    pub estimate_rho: f64,
    /// Largest relative drop of the estimate as the ball shrinks.
    pub worst_drop: f64,
    pub monotone: bool,
}

fn check_rho_grid(rho_grid: &[f64]) -> Result<()> {
    if rho_grid.is_empty() {
        return Err(Error::InvalidParameter("empty radius grid".into()));
    }
    if rho_grid.iter().any(|r| !(*r > 0.0 && r.is_finite())) {
        return Err(Error::InvalidParameter("radii must be positive and finite".into()));
    }
    if rho_grid.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidParameter("radius grid must be strictly decreasing".into()));
    }
    Ok(())
}

/// `min(federer, distortion)` on `S ∩ B(p, rho)` for each radius, with
/// intrinsic distances recomputed inside the ball.
pub fn local_reach_at(
    cloud: &PointCloud,
    tree: &KdTree,
    metric: &IntrinsicMetric,
    p: usize,
    rho_grid: &[f64],
) -> Result<LocalReachCurve> {
    check_rho_grid(rho_grid)?;
    require_tangents(cloud)?;
    let n = cloud.intrinsic_dim().unwrap_or(0);
    let need = n + 2;
    let mut values = Vec::with_capacity(rho_grid.len());
    for &rho in rho_grid {
        let nodes = tree.within(cloud.point(p), rho, true);
        if nodes.len() < need {
            values.push(None);
            continue;
        }
        let ball = cloud.subset(&nodes);
        let fed = federer_reach(&ball)?.value;
        let restricted = metric.restrict(&nodes);
        let dis = distortion_reach_below(&ball, &restricted, fed)?.value;
        values.push(Some(fed.min(dis)));
    }
    let usable: Vec<(f64, f64)> = rho_grid
        .iter()
        .zip(&values)
        .filter_map(|(&r, v)| v.map(|v| (r, v)))
        .collect();
    let Some(&(estimate_rho, estimate)) = usable.last() else {
        let min_usable_rho = tree
            .knn(cloud.point(p), need)
            .last()
            .map_or(f64::INFINITY, |x| x.0);
        return Err(Error::SparseBall {
            point: p,
            min_usable_rho,
        });
    };
    // A larger ball only adds constraints, so the estimate should not fall
    // as the ball shrinks.
    let mut worst_drop: f64 = 0.0;
    for w in usable.windows(2) {
        let (wide, narrow) = (w[0].1, w[1].1);
        let drop = if narrow.is_infinite() {
            0.0
        } else if wide.is_infinite() {
            f64::INFINITY
        } else {
            (wide - narrow) / wide
        };
        worst_drop = worst_drop.max(drop);
    }
    Ok(LocalReachCurve {
        point: p,
        rho: rho_grid.to_vec(),
        values,
        estimate,
        estimate_rho,
        worst_drop,
        monotone: worst_drop <= MONOTONE_SLACK,
    })
}

/// Local reach of the whole sample: the minimum of the per-point estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalReach {
    pub value: f64,
    pub argmin: usize,
    pub curves: Vec<LocalReachCurve>,
}

impl LocalReach {
    pub fn per_point(&self) -> Vec<f64> {
        self.curves.iter().map(|c| c.estimate).collect()
    }

    pub fn monotone(&self) -> bool {
        self.curves.iter().all(|c| c.monotone)
    }
}

pub fn local_reach(cloud: &PointCloud, metric: &IntrinsicMetric, rho_grid: &[f64]) -> Result<LocalReach> {
    require_pairs(cloud)?;
    let tree = cloud.kdtree();
    let curves = (0..cloud.len())
        .into_par_iter()
        .map(|p| local_reach_at(cloud, &tree, metric, p, rho_grid))
        .collect::<Result<Vec<_>>>()?;
    let (value, argmin) = curves
        .iter()
        .map(|c| (c.estimate, c.point))
        .fold((f64::INFINITY, 0), |a, b| if b.0 < a.0 { b } else { a });
    Ok(LocalReach {
        value,
        argmin,
        curves,
    })
}

/// Comparison of the reach against the smaller of its global and local parts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecompositionCheck {
    /// `min(rch_federer, rch_distortion)`.
    pub rch: f64,
    /// `min(rch_global, rch_local)`.
    pub split: f64,
    /// `|rch - split| / split`; zero when both are infinite, infinite when
    /// exactly one is.
    pub residual: f64,
    pub pass: bool,
}

pub fn decomposition_check(
    rch_federer: f64,
    rch_distortion: f64,
    rch_global: f64,
    rch_local: f64,
    tol: f64,
) -> DecompositionCheck {
    let rch = rch_federer.min(rch_distortion);
    let split = rch_global.min(rch_local);
    let residual = match (rch.is_finite(), split.is_finite()) {
        (false, false) => 0.0,
        (true, true) => (rch - split).abs() / split,
        _ => f64::INFINITY,
    };
    DecompositionCheck {
        rch,
        split,
        residual,
        pass: residual <= tol,
    }
}

/// `max ∠(T_p, T_q) / d_S(p, q)` over pairs at finite positive intrinsic
/// distance.
pub fn tangent_variation_sup(cloud: &PointCloud, metric: &IntrinsicMetric) -> Result<PairExtremum> {
    require_pairs(cloud)?;
    require_tangents(cloud)?;
    let tangents = cloud.tangents().expect("checked above");
    let n = cloud.len();
    (0..n)
        .into_par_iter()
        .map(|i| -> Result<PairExtremum> {
            let ell = metric.distances_from(cloud, i);
            let mut best = PairExtremum::NONE_MAX;
            for j in i + 1..n {
                let l = ell[j];
                if !(l > 0.0 && l.is_finite()) {
                    continue;
                }
                let ratio = grassmann_angle(&tangents[i], &tangents[j])? / l;
                if ratio > best.value {
                    best = PairExtremum {
                        value: ratio,
                        pair: Some((i, j)),
                    };
                }
            }
            Ok(best)
        })
        .try_reduce(|| PairExtremum::NONE_MAX, |a, b| Ok(a.max(b)))
}

/// Pairwise test of `sin ∠(q - p, T_p) <= |p - q| / (2 rch)` for
/// `|p - q| < rch`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChordAngleCheck {
    /// Largest `sin ∠ - |p-q| / (2 rch)`.
    pub max_excess: f64,
    /// Smallest `sin ∠ - |p-q| / (2 rch)`.
    pub min_excess: f64,
    /// The ordered pair attaining `max_excess`.
    pub witness: Option<(usize, usize)>,
    pub pairs_checked: usize,
    pub pass: bool,
}

pub fn chord_angle_check(cloud: &PointCloud, rch_value: f64, tol: f64) -> Result<ChordAngleCheck> {
    require_tangents(cloud)?;
    if !(rch_value > 0.0) {
        return Err(Error::InvalidParameter(format!("reach {rch_value} must be positive")));
    }
    let n = cloud.len();
    let d = cloud.dim();
    let tangents = cloud.tangents().expect("checked above");
    let limit2 = rch_value * rch_value;
    type Acc = (PairExtremum, f64, usize);
    let combine = |a: Acc, b: Acc| -> Acc { (a.0.max(b.0), a.1.min(b.1), a.2 + b.2) };
    let (max, min_excess, count) = (0..n)
        .into_par_iter()
        .map(|i| -> Acc {
            let p = cloud.point(i);
            let mut diff = vec![0.0; d];
            let mut acc: Acc = (
                PairExtremum {
                    value: f64::NEG_INFINITY,
                    pair: None,
                },
                f64::INFINITY,
                0,
            );
            for j in 0..n {
                if j == i {
                    continue;
                }
                let q = cloud.point(j);
                let h2 = dist_sq(p, q);
                if h2 == 0.0 || h2 >= limit2 {
                    continue;
                }
                for k in 0..d {
                    diff[k] = q[k] - p[k];
                }
                let h = h2.sqrt();
                let sin = tangents[i].residual_norm(&diff) / h;
                let excess = sin - h / (2.0 * rch_value);
                acc = combine(
                    acc,
                    (
                        PairExtremum {
                            value: excess,
                            pair: Some((i, j)),
                        },
                        excess,
                        1,
                    ),
                );
            }
            acc
        })
        .reduce(
            || {
                (
                    PairExtremum {
                        value: f64::NEG_INFINITY,
                        pair: None,
                    },
                    f64::INFINITY,
                    0,
                )
            },
            combine,
        );
    let max_excess = if count == 0 { 0.0 } else { max.value };
    Ok(ChordAngleCheck {
        max_excess,
        min_excess: if count == 0 { 0.0 } else { min_excess },
        witness: max.pair,
        pairs_checked: count,
        pass: max_excess <= tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geodesics::{build_graph, AnalyticGeodesic, GraphParams};
    use crate::linalg::Subspace;
    use std::f64::consts::{FRAC_PI_2, PI, TAU};

    fn circle(n: usize, r: f64) -> PointCloud {
        let mut pts = Vec::new();
        let mut tans = Vec::new();
        for i in 0..n {
            let t = TAU * i as f64 / n as f64;
            pts.push(vec![r * t.cos(), r * t.sin()]);
            tans.push(Subspace::span(2, &[&[-t.sin(), t.cos()]]).unwrap());
        }
        PointCloud::from_points(2, &pts).unwrap().with_tangents(tans).unwrap()
    }

    fn circle_metric(r: f64) -> IntrinsicMetric {
        IntrinsicMetric::Exact(AnalyticGeodesic::Sphere {
            center: vec![0.0, 0.0],
            radius: r,
        })
    }

    #[test]
    fn distortion_radius_examples() {
        assert!((distortion_radius(2.0, PI).unwrap().radius - 1.0).abs() < 1e-12);
        assert!(distortion_radius(1.0, 1.0).unwrap().radius.is_infinite());
        let q = distortion_radius(2.0_f64.sqrt(), FRAC_PI_2).unwrap();
        assert!((q.radius - 1.0).abs() < 1e-12, "{}", q.radius);
        assert!(!q.semicircle_exceeded);
        let long = distortion_radius(1.0, 2.0).unwrap();
        assert!(long.semicircle_exceeded && long.radius == 0.5);
        assert!(matches!(
            distortion_radius(1.0, 0.9),
            Err(Error::ShorterThanChord { .. })
        ));
    }

    #[test]
    fn distortion_radius_small_arcs() {
        for &theta in &[1e-4_f64, 1e-2, 0.5, 2.0, 3.0] {
            let r: f64 = 3.0;
            let h = 2.0 * r * (theta / 2.0).sin();
            let got = distortion_radius(h, r * theta).unwrap().radius;
            let tol = if theta < 1e-3 { 1e-5 } else { 1e-9 };
            assert!((got - r).abs() / r < tol, "theta {theta}: {got}");
        }
    }

    #[test]
    fn federer_on_circle_is_exact() {
        let c = circle(64, 1.0);
        let f = federer_reach(&c).unwrap();
        assert!((f.value - 1.0).abs() < 1e-12);
        assert!(f.pair.is_some());
    }

    #[test]
    fn federer_on_parallel_lines() {
        let h = 0.75;
        let mut pts = Vec::new();
        for k in 0..20 {
            let x = k as f64 * 0.1;
            pts.push(vec![x, -h]);
            pts.push(vec![x, h]);
        }
        let t = Subspace::span(2, &[&[1.0, 0.0]]).unwrap();
        let c = PointCloud::from_points(2, &pts)
            .unwrap()
            .with_tangents(vec![t; 40])
            .unwrap();
        let f = federer_reach(&c).unwrap();
        assert!((f.value - h).abs() < 1e-12);
        let (i, j) = f.pair.unwrap();
        assert!((c.point(i)[0] - c.point(j)[0]).abs() < 1e-12);
    }

    #[test]
    fn federer_needs_tangents_and_pairs() {
        let c = PointCloud::new(2, vec![0.0, 0.0, 1.0, 0.0]).unwrap();
        assert!(matches!(federer_reach(&c), Err(Error::MissingTangent(_))));
        let one = circle(1, 1.0);
        assert!(matches!(federer_reach(&one), Err(Error::TooFewPoints { .. })));
    }

    #[test]
    fn distortion_on_circle() {
        let c = circle(512, 1.0);
        let exact = distortion_reach(&c, &circle_metric(1.0)).unwrap();
        assert!((exact.value - 1.0).abs() < 1e-6);
        let g = build_graph(&c, GraphParams::Knn(2)).unwrap();
        let graph = distortion_reach(&c, &IntrinsicMetric::Graph(g)).unwrap();
        assert!(graph.value >= 1.0 - 1e-9 && graph.value < 1.0 + 1e-3);
    }

    #[test]
    fn straight_segment_has_no_constraints() {
        let pts: Vec<Vec<f64>> = (0..50).map(|k| vec![k as f64 / 49.0, 0.0]).collect();
        let c = PointCloud::from_points(2, &pts).unwrap();
        let metric = IntrinsicMetric::Exact(AnalyticGeodesic::Euclidean);
        assert!(distortion_reach(&c, &metric).unwrap().value.is_infinite());
        let g = global_reach(&c, &metric, default_emptiness_tol(&c, &c.kdtree())).unwrap();
        assert!(g.value.is_infinite());
        assert!(g.bottlenecks.is_empty());
    }

    #[test]
    fn circle_bottlenecks_are_antipodal() {
        let c = circle(128, 1.0);
        let tol = default_emptiness_tol(&c, &c.kdtree());
        let g = global_reach(&c, &circle_metric(1.0), tol).unwrap();
        // Near-antipodal pairs pass the shrunken emptiness test too, which
        // costs at most 1 - cos of the arc subtending the tolerance chord.
        assert!(g.value <= 1.0 + 1e-12 && g.value >= (2.0 * (tol / 2.0).asin()).cos() - 1e-12);
        for &(i, j) in &g.bottlenecks {
            assert!(dist(c.point(i), c.point(j)) > 1.98 - 1e-9);
        }
        assert!(g.bottlenecks.contains(&(0, 64)));
    }

    #[test]
    fn local_reach_of_circle() {
        let c = circle(256, 1.0);
        let tree = c.kdtree();
        let grid = default_rho_grid(c.spacing(&tree));
        let curve = local_reach_at(&c, &tree, &circle_metric(1.0), 5, &grid).unwrap();
        for v in curve.values.iter().flatten() {
            assert!((v - 1.0).abs() < 1e-6, "{v}");
        }
        assert!(curve.monotone);
    }

    #[test]
    fn sparse_ball_reports_usable_radius() {
        let c = circle(64, 1.0);
        let tree = c.kdtree();
        let err = local_reach_at(&c, &tree, &circle_metric(1.0), 0, &[1e-3]).unwrap_err();
        match err {
            Error::SparseBall { min_usable_rho, .. } => {
                assert!((min_usable_rho - 2.0 * (PI / 64.0).sin()).abs() < 1e-12)
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(local_reach_at(&c, &tree, &circle_metric(1.0), 0, &[0.1, 0.2]).is_err());
    }

    #[test]
    fn decomposition_conventions() {
        let both_inf = decomposition_check(f64::INFINITY, f64::INFINITY, f64::INFINITY, f64::INFINITY, 0.03);
        assert!(both_inf.pass && both_inf.residual == 0.0);
        let mixed = decomposition_check(1.0, f64::INFINITY, f64::INFINITY, f64::INFINITY, 0.03);
        assert!(!mixed.pass && mixed.residual.is_infinite());
        let ok = decomposition_check(0.5, 0.51, 1.0, 0.505, 0.03);
        assert!(ok.pass && (ok.residual - 0.01 / 1.01 * 1.0).abs() < 1e-2);
    }

    #[test]
    fn chord_angle_equality_on_circle() {
        let c = circle(128, 1.0);
        let check = chord_angle_check(&c, 1.0, 1e-9).unwrap();
        assert!(check.max_excess.abs() < 1e-12 && check.min_excess.abs() < 1e-12);
        let wrong = chord_angle_check(&c, 1.5, 1e-9).unwrap();
        assert!(!wrong.pass && wrong.witness.is_some());
    }

    #[test]
    fn tangent_variation_on_circle() {
        let c = circle(100, 2.0);
        let tv = tangent_variation_sup(&c, &circle_metric(2.0)).unwrap();
        assert!((tv.value - 0.5).abs() < 1e-9);
    }
}
