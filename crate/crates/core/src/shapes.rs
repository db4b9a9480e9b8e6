//! Synthetic shapes with exact tangents and closed-form reach quantities.
//!
//! Curves are sampled at equal arc length with no randomness. Surfaces use
//! area-weighted stratified sampling: one jittered stratum per point in the
//! first area coordinate and a golden-ratio sequence in the second, driven by
//! a seeded generator so that a given shape and seed always give the same
//! cloud.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cloud::PointCloud;
use crate::error::{Error, Result};
use crate::geodesics::{build_graph, AnalyticGeodesic, GraphParams, IntrinsicMetric};
use crate::linalg::Subspace;
use crate::reach;

/// Fractional part of the golden ratio.
const GOLDEN: f64 = 0.618_033_988_749_894_9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Shape {
    /// Circle of radius `radius` in the plane, centred at the origin.
    Circle { radius: f64 },
    /// Round 2-sphere in `R^3`, centred at the origin.
    Sphere { radius: f64 },
    /// Ellipse with semi-axes `a >= b` along `x` and `y`.
    Ellipse { a: f64, b: f64 },
    /// Torus of revolution about the `z` axis.
    Torus { major: f64, minor: f64 },
    /// Two spheres of radius `radius` whose surfaces are `2 * gap` apart
    /// along the `x` axis, so that the narrowest bottleneck has half-width
    /// `gap`. The sample count is per sphere.
    TwoSpheres { radius: f64, gap: f64 },
    /// Two straight legs of length `leg` meeting at interior angle `angle`,
    /// joined by a tangent circular arc of radius `rho`.
    FilletProfile { rho: f64, leg: f64, angle: f64 },
    /// The fillet profile crossed with `[0, width]` along `z`.
    FilletExtruded {
        rho: f64,
        leg: f64,
        angle: f64,
        width: f64,
    },
    /// Segment of length `length` on the `x` axis of the plane.
    Segment { length: f64 },
    /// Square of side `side` in the `z = 0` plane of `R^3`.
    PlanePatch { side: f64 },
}

/// Reach quantities of a shape; `f64::INFINITY` where unbounded.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroundTruth {
    pub rch: f64,
    pub rch_loc: f64,
    pub rch_glob: f64,
    pub tangent_variation_sup: f64,
}

impl GroundTruth {
    fn from_parts(rch_loc: f64, rch_glob: f64) -> Self {
        Self {
            rch: rch_loc.min(rch_glob),
            rch_loc,
            rch_glob,
            tangent_variation_sup: 1.0 / rch_loc,
        }
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            rch: self.rch * s,
            rch_loc: self.rch_loc * s,
            rch_glob: self.rch_glob * s,
            tangent_variation_sup: self.tangent_variation_sup / s,
        }
    }
}

/// A sampled shape.
#[derive(Debug, Clone)]
pub struct Sample {
    pub shape: Shape,
    pub cloud: PointCloud,
    /// Closed-form intrinsic distances, where available.
    pub geodesic: Option<AnalyticGeodesic>,
    pub ground_truth: GroundTruth,
}

impl Sample {
    /// The analytic intrinsic metric, or a default neighbourhood graph when
    /// the shape has none.
    pub fn metric(&self) -> Result<IntrinsicMetric> {
        match &self.geodesic {
            Some(g) => Ok(IntrinsicMetric::Exact(g.clone())),
            None => {
                let n = self.cloud.intrinsic_dim().unwrap_or(1);
                Ok(IntrinsicMetric::Graph(build_graph(&self.cloud, GraphParams::default_for(n))?))
            }
        }
    }
}

impl Shape {
    pub const NAMES: [&'static str; 9] = [
        "circle",
        "sphere",
        "ellipse",
        "torus",
        "two_spheres",
        "fillet",
        "fillet_extruded",
        "segment",
        "plane_patch",
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Self::Circle { .. } => "circle",
            Self::Sphere { .. } => "sphere",
            Self::Ellipse { .. } => "ellipse",
            Self::Torus { .. } => "torus",
            Self::TwoSpheres { .. } => "two_spheres",
            Self::FilletProfile { .. } => "fillet",
            Self::FilletExtruded { .. } => "fillet_extruded",
            Self::Segment { .. } => "segment",
            Self::PlanePatch { .. } => "plane_patch",
        }
    }

    /// Ambient and intrinsic dimension.
    pub fn dims(&self) -> (usize, usize) {
        match self {
            Self::Circle { .. } | Self::Ellipse { .. } | Self::FilletProfile { .. } | Self::Segment { .. } => (2, 1),
            _ => (3, 2),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!("{name} must be positive and finite, got {v}")))
            }
        };
        match *self {
            Self::Circle { radius } | Self::Sphere { radius } => positive("radius", radius),
            Self::Ellipse { a, b } => {
                positive("b", b)?;
                positive("a", a)?;
                if a < b {
                    return Err(Error::InvalidParameter(format!("ellipse needs a >= b, got a={a}, b={b}")));
                }
                Ok(())
            }
            Self::Torus { major, minor } => {
                positive("minor radius", minor)?;
                positive("major radius", major)?;
                if major <= minor {
                    return Err(Error::InvalidParameter(format!(
                        "torus needs R > r, got R={major}, r={minor}"
                    )));
                }
                Ok(())
            }
            Self::TwoSpheres { radius, gap } => {
                positive("radius", radius)?;
                positive("gap", gap)
            }
            Self::FilletProfile { rho, leg, angle } => check_fillet(rho, leg, angle),
            Self::FilletExtruded { rho, leg, angle, width } => {
                check_fillet(rho, leg, angle)?;
                positive("width", width)
            }
            Self::Segment { length } => positive("length", length),
            Self::PlanePatch { side } => positive("side", side),
        }
    }

    /// Closed-form reach quantities.
    ///
    /// Bottlenecks are double normals whose midpoint ball misses the set:
    /// the minor axis of the ellipse (half-width `b`), tube cross-sections of
    /// the torus (half-width `r`) and across its hole (`R - r`), the facing poles of the two spheres (half-width `gap`) and each
    /// sphere's own diameters. The fillet, segment and plane have none.
    pub fn ground_truth(&self) -> GroundTruth {
        match *self {
            Self::Circle { radius } | Self::Sphere { radius } => GroundTruth::from_parts(radius, radius),
            Self::Ellipse { a, b } => GroundTruth::from_parts(b * b / a, b),
            Self::Torus { major, minor } => GroundTruth::from_parts(minor, minor.min(major - minor)),
            Self::TwoSpheres { radius, gap } => GroundTruth::from_parts(radius, gap.min(radius)),
            Self::FilletProfile { rho, .. } | Self::FilletExtruded { rho, .. } => {
                GroundTruth::from_parts(rho, f64::INFINITY)
            }
            Self::Segment { .. } | Self::PlanePatch { .. } => GroundTruth::from_parts(f64::INFINITY, f64::INFINITY),
        }
    }

    /// Samples `n` points (per sphere for [`Shape::TwoSpheres`]).
    pub fn generate(&self, n: usize, seed: u64) -> Result<Sample> {
        self.validate()?;
        let min = match self {
            Self::Circle { .. } | Self::Ellipse { .. } => 3,
            _ => 2,
        };
        if n < min {
            return Err(Error::TooFewPoints { need: min, got: n });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (d, k) = self.dims();
        let mut pts: Vec<f64> = Vec::with_capacity(n * d);
        let mut frames: Vec<Subspace> = Vec::with_capacity(n);
        let geodesic = match *self {
            Self::Circle { radius } => {
                for i in 0..n {
                    let (c, s) = cos_sin_turn(i as f64 / n as f64);
                    pts.extend([radius * c, radius * s]);
                    frames.push(Subspace::span(2, &[&[-s, c]])?);
                }
                Some(AnalyticGeodesic::Sphere {
                    center: vec![0.0; 2],
                    radius,
                })
            }
            Self::Sphere { radius } => {
                sphere_points(n, radius, &[0.0; 3], &mut rng, &mut pts, &mut frames)?;
                Some(AnalyticGeodesic::Sphere {
                    center: vec![0.0; 3],
                    radius,
                })
            }
            Self::TwoSpheres { radius, gap } => {
                let left = [-(radius + gap), 0.0, 0.0];
                let right = [radius + gap, 0.0, 0.0];
                sphere_points(n, radius, &left, &mut rng, &mut pts, &mut frames)?;
                sphere_points(n, radius, &right, &mut rng, &mut pts, &mut frames)?;
                Some(AnalyticGeodesic::Spheres(vec![(left.to_vec(), radius), (right.to_vec(), radius)]))
            }
            Self::Ellipse { a, b } => {
                let table = EllipseArc::new(a, b);
                let mut arc = Vec::with_capacity(n);
                for i in 0..n {
                    let s = table.total * i as f64 / n as f64;
                    let t = table.param_at(s);
                    let (st, ct) = t.sin_cos();
                    pts.extend([a * ct, b * st]);
                    frames.push(Subspace::span(2, &[&[-a * st, b * ct]])?);
                    arc.push(s);
                }
                Some(AnalyticGeodesic::Unrolled {
                    coords: arc,
                    dim: 1,
                    period: Some(table.total),
                })
            }
            Self::Torus { major, minor } => {
                for i in 0..n {
                    let area = (i as f64 + rng.random::<f64>()) / n as f64;
                    let v = torus_inverse_cdf(major, minor, area);
                    let u = TAU * (i as f64 * GOLDEN).fract();
                    let (sv, cv) = v.sin_cos();
                    let (su, cu) = u.sin_cos();
                    let w = major + minor * cv;
                    pts.extend([w * cu, w * su, minor * sv]);
                    frames.push(Subspace::span(3, &[&[-su, cu, 0.0], &[-sv * cu, -sv * su, cv]])?);
                }
                None
            }
            Self::FilletProfile { rho, leg, angle } => {
                let f = Fillet::new(rho, leg, angle);
                let mut arc = Vec::with_capacity(n);
                for i in 0..n {
                    let s = f.length() * i as f64 / (n - 1) as f64;
                    let (p, t) = f.eval(s);
                    pts.extend(p);
                    frames.push(Subspace::span(2, &[&t])?);
                    arc.push(s);
                }
                Some(AnalyticGeodesic::Unrolled {
                    coords: arc,
                    dim: 1,
                    period: None,
                })
            }
            Self::FilletExtruded { rho, leg, angle, width } => {
                let f = Fillet::new(rho, leg, angle);
                let mut flat = Vec::with_capacity(2 * n);
                for i in 0..n {
                    let s = f.length() * (i as f64 + rng.random::<f64>()) / n as f64;
                    let z = width * (i as f64 * GOLDEN).fract();
                    let (p, t) = f.eval(s);
                    pts.extend([p[0], p[1], z]);
                    frames.push(Subspace::span(3, &[&[t[0], t[1], 0.0], &[0.0, 0.0, 1.0]])?);
                    flat.extend([s, z]);
                }
                Some(AnalyticGeodesic::Unrolled {
                    coords: flat,
                    dim: 2,
                    period: None,
                })
            }
            Self::Segment { length } => {
                for i in 0..n {
                    let x = length * (i as f64 / (n - 1) as f64 - 0.5);
                    pts.extend([x, 0.0]);
                    frames.push(Subspace::span(2, &[&[1.0, 0.0]])?);
                }
                Some(AnalyticGeodesic::Euclidean)
            }
            Self::PlanePatch { side } => {
                let t = Subspace::span(3, &[&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0]])?;
                for i in 0..n {
                    let x = side * ((i as f64 + rng.random::<f64>()) / n as f64 - 0.5);
                    let y = side * ((i as f64 * GOLDEN).fract() - 0.5);
                    pts.extend([x, y, 0.0]);
                    frames.push(t.clone());
                }
                Some(AnalyticGeodesic::Euclidean)
            }
        };
        let cloud = PointCloud::new(d, pts)?.with_intrinsic_dim(k)?.with_tangents(frames)?;
        Ok(Sample {
            shape: *self,
            cloud,
            geodesic,
            ground_truth: self.ground_truth(),
        })
    }

    /// The same shape with every length multiplied by `s`.
    pub fn scaled(&self, s: f64) -> Self {
        match *self {
            Self::Circle { radius } => Self::Circle { radius: radius * s },
            Self::Sphere { radius } => Self::Sphere { radius: radius * s },
            Self::Ellipse { a, b } => Self::Ellipse { a: a * s, b: b * s },
            Self::Torus { major, minor } => Self::Torus {
                major: major * s,
                minor: minor * s,
            },
            Self::TwoSpheres { radius, gap } => Self::TwoSpheres {
                radius: radius * s,
                gap: gap * s,
            },
            Self::FilletProfile { rho, leg, angle } => Self::FilletProfile {
                rho: rho * s,
                leg: leg * s,
                angle,
            },
            Self::FilletExtruded { rho, leg, angle, width } => Self::FilletExtruded {
                rho: rho * s,
                leg: leg * s,
                angle,
                width: width * s,
            },
            Self::Segment { length } => Self::Segment { length: length * s },
            Self::PlanePatch { side } => Self::PlanePatch { side: side * s },
        }
    }
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Shape parameters as given on a command line; unset fields take the
/// defaults documented on [`ShapeArgs::build`].
#[derive(Debug, Clone, Default)]
pub struct ShapeArgs {
    pub big_r: Option<f64>,
    pub small_r: Option<f64>,
    pub a: Option<f64>,
    pub b: Option<f64>,
    pub g: Option<f64>,
    pub rho: Option<f64>,
    pub extent: Option<f64>,
}

impl ShapeArgs {
    /// Builds a shape by name. Defaults: `R = 1` (circle, sphere, sphere
    /// radius of two_spheres) or `R = 2, r = 0.5` (torus); `a = 2, b = 1`;
    /// `g = 0.3`; `rho = 0.4`; `extent = 2` (fillet leg length, extrusion
    /// width, segment length, plane side).
    pub fn build(&self, name: &str) -> Result<Shape> {
        let extent = self.extent.unwrap_or(2.0);
        let shape = match Shape::from_str(name)? {
            Shape::Circle { .. } => Shape::Circle {
                radius: self.big_r.unwrap_or(1.0),
            },
            Shape::Sphere { .. } => Shape::Sphere {
                radius: self.big_r.unwrap_or(1.0),
            },
            Shape::Ellipse { .. } => Shape::Ellipse {
                a: self.a.unwrap_or(2.0),
                b: self.b.unwrap_or(1.0),
            },
            Shape::Torus { .. } => Shape::Torus {
                major: self.big_r.unwrap_or(2.0),
                minor: self.small_r.unwrap_or(0.5),
            },
            Shape::TwoSpheres { .. } => Shape::TwoSpheres {
                radius: self.big_r.unwrap_or(1.0),
                gap: self.g.unwrap_or(0.3),
            },
            Shape::FilletProfile { .. } => Shape::FilletProfile {
                rho: self.rho.unwrap_or(0.4),
                leg: extent,
                angle: PI / 2.0,
            },
            Shape::FilletExtruded { .. } => Shape::FilletExtruded {
                rho: self.rho.unwrap_or(0.4),
                leg: extent,
                angle: PI / 2.0,
                width: extent,
            },
            Shape::Segment { .. } => Shape::Segment { length: extent },
            Shape::PlanePatch { .. } => Shape::PlanePatch { side: extent },
        };
        shape.validate()?;
        Ok(shape)
    }
}

impl FromStr for Shape {
    type Err = Error;

    /// Parses a shape name into the shape with default parameters.
    fn from_str(s: &str) -> Result<Self> {
        let rho = 0.4;
        Ok(match s {
            "circle" => Self::Circle { radius: 1.0 },
            "sphere" => Self::Sphere { radius: 1.0 },
            "ellipse" => Self::Ellipse { a: 2.0, b: 1.0 },
            "torus" => Self::Torus { major: 2.0, minor: 0.5 },
            "two_spheres" => Self::TwoSpheres { radius: 1.0, gap: 0.3 },
            "fillet" | "fillet_profile" => Self::FilletProfile {
                rho,
                leg: 2.0,
                angle: PI / 2.0,
            },
            "fillet_extruded" => Self::FilletExtruded {
                rho,
                leg: 2.0,
                angle: PI / 2.0,
                width: 2.0,
            },
            "segment" => Self::Segment { length: 2.0 },
            "plane" | "plane_patch" => Self::PlanePatch { side: 2.0 },
            other => {
                return Err(Error::InvalidParameter(format!(
                    "unknown shape '{other}', expected one of {}",
                    Self::NAMES.join(", ")
                )))
            }
        })
    }
}

fn check_fillet(rho: f64, leg: f64, angle: f64) -> Result<()> {
    if !(rho > 0.0 && rho.is_finite() && leg > 0.0 && leg.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "fillet radius and leg length must be positive, got {rho} and {leg}"
        )));
    }
    if !(angle > 0.0 && angle < PI) {
        return Err(Error::InvalidParameter(format!(
            "fillet interior angle must lie in (0, pi), got {angle}"
        )));
    }
    Ok(())
}

/// `(cos, sin)` of `2 pi f`, exact at multiples of a quarter turn.
fn cos_sin_turn(f: f64) -> (f64, f64) {
    let q = (4.0 * f).floor();
    let (s, c) = ((4.0 * f - q) * PI / 2.0).sin_cos();
    match (q as i64).rem_euclid(4) {
        0 => (c, s),
        1 => (-s, c),
        2 => (-c, -s),
        _ => (s, -c),
    }
}

/// Jittered bands of equal area in `z`, golden-angle azimuths.
fn sphere_points(
    n: usize,
    radius: f64,
    center: &[f64; 3],
    rng: &mut ChaCha8Rng,
    pts: &mut Vec<f64>,
    frames: &mut Vec<Subspace>,
) -> Result<()> {
    for i in 0..n {
        let z = 1.0 - 2.0 * (i as f64 + rng.random::<f64>()) / n as f64;
        let theta = z.clamp(-1.0, 1.0).acos();
        let phi = TAU * (i as f64 * GOLDEN).fract();
        let (st, ct) = theta.sin_cos();
        let (sp, cp) = phi.sin_cos();
        pts.extend([
            center[0] + radius * st * cp,
            center[1] + radius * st * sp,
            center[2] + radius * ct,
        ]);
        frames.push(Subspace::span(3, &[&[ct * cp, ct * sp, -st], &[-sp, cp, 0.0]])?);
    }
    Ok(())
}

/// Inverse of the normalized area distribution `(R v + r sin v) / (2 pi R)`
/// of the tube angle `v` on `[0, 2 pi)`.
fn torus_inverse_cdf(major: f64, minor: f64, q: f64) -> f64 {
    let target = TAU * major * q;
    let f = |v: f64| major * v + minor * v.sin() - target;
    // The map is strictly increasing; Newton from the linear guess, kept
    // inside a bracket.
    let (mut lo, mut hi) = (0.0, TAU);
    let mut v = TAU * q;
    for _ in 0..60 {
        let fv = f(v);
        if fv == 0.0 {
            break;
        }
        if fv > 0.0 {
            hi = v;
        } else {
            lo = v;
        }
        let next = v - fv / (major + minor * v.cos());
        let next = if next >= lo && next <= hi { next } else { 0.5 * (lo + hi) };
        let done = (next - v).abs() < 1e-15 * TAU;
        v = next;
        if done {
            break;
        }
    }
    v
}

/// Arc length of `t -> (a cos t, b sin t)` by panelled Gauss-Legendre
/// quadrature, with inversion by Newton's method.
struct EllipseArc {
    a: f64,
    b: f64,
    /// Cumulative length at each panel boundary.
    cumulative: Vec<f64>,
    panel: f64,
    total: f64,
}

const GL5: [(f64, f64); 5] = [
    (0.0, 0.568_888_888_888_888_9),
    (-0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
    (0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
    (-0.906_179_845_938_664, 0.236_926_885_056_189_1),
    (0.906_179_845_938_664, 0.236_926_885_056_189_1),
];

impl EllipseArc {
    const PANELS: usize = 2048;

    fn new(a: f64, b: f64) -> Self {
        let panel = TAU / Self::PANELS as f64;
        let mut cumulative = Vec::with_capacity(Self::PANELS + 1);
        cumulative.push(0.0);
        let mut acc = 0.0;
        let mut me = Self {
            a,
            b,
            cumulative: Vec::new(),
            panel,
            total: 0.0,
        };
        for k in 0..Self::PANELS {
            acc += me.integrate(k as f64 * panel, (k + 1) as f64 * panel);
            cumulative.push(acc);
        }
        me.total = acc;
        me.cumulative = cumulative;
        me
    }

    fn speed(&self, t: f64) -> f64 {
        let (s, c) = t.sin_cos();
        (self.a * self.a * s * s + self.b * self.b * c * c).sqrt()
    }

    fn integrate(&self, t0: f64, t1: f64) -> f64 {
        let (mid, half) = (0.5 * (t0 + t1), 0.5 * (t1 - t0));
        GL5.iter().map(|&(x, w)| w * self.speed(mid + half * x)).sum::<f64>() * half
    }

    /// Parameter `t` at arc length `s` in `[0, total)`.
    fn param_at(&self, s: f64) -> f64 {
        let k = self.cumulative.partition_point(|&c| c <= s).saturating_sub(1).min(Self::PANELS - 1);
        let t0 = k as f64 * self.panel;
        let need = s - self.cumulative[k];
        let mut t = t0 + need / self.speed(t0 + 0.5 * self.panel);
        for _ in 0..20 {
            let step = (self.integrate(t0, t) - need) / self.speed(t);
            t -= step;
            if step.abs() < 1e-16 {
                break;
            }
        }
        t
    }
}

/// Line, tangent arc, line; parametrized by arc length from the free end of
/// the first leg.
struct Fillet {
    rho: f64,
    leg: f64,
    /// Unit directions of the two legs away from the corner.
    u1: [f64; 2],
    u2: [f64; 2],
    /// Distance from the corner to each tangency point.
    setback: f64,
    center: [f64; 2],
    start_angle: f64,
    /// Signed turning of the arc.
    sweep: f64,
}

impl Fillet {
    fn new(rho: f64, leg: f64, angle: f64) -> Self {
        let u1 = [1.0, 0.0];
        let u2 = [angle.cos(), angle.sin()];
        let setback = rho / (angle / 2.0).tan();
        let bis = [(angle / 2.0).cos(), (angle / 2.0).sin()];
        let c = rho / (angle / 2.0).sin();
        let center = [c * bis[0], c * bis[1]];
        let start = [setback * u1[0] - center[0], setback * u1[1] - center[1]];
        // Travelling towards the corner along the first leg, the arc turns
        // clockwise about a centre on the positive side of the bisector.
        Self {
            rho,
            leg,
            u1,
            u2,
            setback,
            center,
            start_angle: start[1].atan2(start[0]),
            sweep: -(PI - angle),
        }
    }

    fn arc_length(&self) -> f64 {
        self.rho * self.sweep.abs()
    }

    fn length(&self) -> f64 {
        2.0 * self.leg + self.arc_length()
    }

    /// Point and unit tangent at arc length `s`.
    fn eval(&self, s: f64) -> ([f64; 2], [f64; 2]) {
        let s = s.clamp(0.0, self.length());
        if s <= self.leg {
            let t = self.setback + self.leg - s;
            ([t * self.u1[0], t * self.u1[1]], [-self.u1[0], -self.u1[1]])
        } else if s < self.leg + self.arc_length() {
            let phi = self.start_angle + self.sweep.signum() * (s - self.leg) / self.rho;
            let (sp, cp) = phi.sin_cos();
            let sg = self.sweep.signum();
            (
                [self.center[0] + self.rho * cp, self.center[1] + self.rho * sp],
                [-sg * sp, sg * cp],
            )
        } else {
            let t = self.setback + s - self.leg - self.arc_length();
            ([t * self.u2[0], t * self.u2[1]], self.u2)
        }
    }
}

/// Estimator values at one sampling density.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleLevel {
    pub n: usize,
    pub values: GroundTruth,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleReport {
    pub levels: Vec<OracleLevel>,
    /// Values at the finest level.
    pub certified: GroundTruth,
    /// Change between the two finest levels, per quantity.
    pub slack: GroundTruth,
}

/// Brute-force reach quantities of `shape` at densities `2, 4, 8` times
/// `base_n`: the tangent-distance formula for `rch`, shrinking balls for
/// `rch_loc`, the bottleneck scan for `rch_glob`, and the tangent variation.
/// Intrinsic distances are analytic where the shape has them.
///
/// Certification is refused when a quantity's change between successive
/// levels grows by more than a factor two (beyond a `1e-9` relative floor),
/// or when a quantity is finite at some levels and infinite at others.
pub fn ground_truth_oracle(shape: &Shape, base_n: usize, seed: u64) -> Result<OracleReport> {
    let mut levels = Vec::new();
    for mult in [2, 4, 8] {
        let n = base_n * mult;
        let sample = shape.generate(n, seed)?;
        let metric = sample.metric()?;
        let cloud = &sample.cloud;
        let tree = cloud.kdtree();
        let spacing = cloud.spacing(&tree);
        let rch = reach::federer_reach(cloud)?.value;
        let rch_loc = reach::local_reach(cloud, &metric, &reach::default_rho_grid(spacing))?.value;
        let rch_glob = reach::global_reach(cloud, &metric, reach::default_emptiness_tol(cloud, &tree))?.value;
        let tv = reach::tangent_variation_sup(cloud, &metric)?.value;
        levels.push(OracleLevel {
            n,
            values: GroundTruth {
                rch,
                rch_loc,
                rch_glob,
                tangent_variation_sup: tv,
            },
        });
    }
    let pick: [fn(&GroundTruth) -> f64; 4] = [
        |g| g.rch,
        |g| g.rch_loc,
        |g| g.rch_glob,
        |g| g.tangent_variation_sup,
    ];
    let names = ["rch", "rch_loc", "rch_glob", "tangent_variation_sup"];
    let mut slack = [0.0; 4];
    for (q, f) in pick.iter().enumerate() {
        let v: Vec<f64> = levels.iter().map(|l| f(&l.values)).collect();
        if v.iter().all(|x| x.is_infinite()) {
            continue;
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::NotCertified(format!("{} is infinite at some densities: {v:?}", names[q])));
        }
        let (d1, d2) = ((v[1] - v[0]).abs(), (v[2] - v[1]).abs());
        if d2 > 2.0 * d1 + 1e-9 * v[2].abs() {
            return Err(Error::NotCertified(format!("{} does not settle: {v:?}", names[q])));
        }
        slack[q] = d2;
    }
    let certified = levels.last().expect("three levels").values;
    Ok(OracleReport {
        levels,
        certified,
        slack: GroundTruth {
            rch: slack[0],
            rch_loc: slack[1],
            rch_glob: slack[2],
            tangent_variation_sup: slack[3],
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{dist, dot, norm};

    fn all_shapes() -> Vec<Shape> {
        Shape::NAMES.iter().map(|n| n.parse().unwrap()).collect()
    }

    #[test]
    fn circle_of_four() {
        let s = Shape::Circle { radius: 1.0 }.generate(4, 0).unwrap();
        let expect = [[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]];
        for (i, e) in expect.iter().enumerate() {
            assert_eq!(s.cloud.point(i), e);
            let t = s.cloud.tangent(i).unwrap();
            assert!(dot(t.basis_vector(0), e).abs() < 1e-15);
        }
    }

    #[test]
    fn frames_are_orthonormal_and_normal_to_the_surface() {
        for shape in all_shapes() {
            let s = shape.generate(300, 5).unwrap();
            for i in 0..s.cloud.len() {
                let b = s.cloud.tangent(i).unwrap().basis();
                let gram = b.transpose() * b;
                let dev = (gram - nalgebra::DMatrix::identity(b.ncols(), b.ncols())).amax();
                assert!(dev < 1e-12, "{shape}: {dev}");
            }
        }
        // Radial normals on the spheres and torus.
        let s = Shape::Sphere { radius: 2.0 }.generate(500, 1).unwrap();
        for i in 0..500 {
            let p = s.cloud.point(i);
            assert!((norm(p) - 2.0).abs() < 1e-12);
            assert!(s.cloud.tangent(i).unwrap().projection_norm(p) < 1e-12);
        }
        let t = Shape::Torus { major: 2.0, minor: 0.5 }.generate(500, 1).unwrap();
        for i in 0..500 {
            let p = t.cloud.point(i);
            let rxy = (p[0] * p[0] + p[1] * p[1]).sqrt();
            let core = [2.0 * p[0] / rxy, 2.0 * p[1] / rxy, 0.0];
            let radial: Vec<f64> = p.iter().zip(core).map(|(a, b)| a - b).collect();
            assert!((norm(&radial) - 0.5).abs() < 1e-12);
            assert!(t.cloud.tangent(i).unwrap().projection_norm(&radial) < 1e-12);
        }
    }

    #[test]
    fn generation_is_deterministic() {
        for shape in all_shapes() {
            let a = shape.generate(200, 42).unwrap();
            let b = shape.generate(200, 42).unwrap();
            assert_eq!(a.cloud, b.cloud, "{shape}");
        }
        let a = Shape::Sphere { radius: 1.0 }.generate(200, 1).unwrap();
        let b = Shape::Sphere { radius: 1.0 }.generate(200, 2).unwrap();
        assert_ne!(a.cloud, b.cloud);
    }

    #[test]
    fn invalid_parameters() {
        assert!(Shape::Torus { major: 0.5, minor: 0.5 }.validate().is_err());
        assert!(Shape::Ellipse { a: 1.0, b: 2.0 }.validate().is_err());
        assert!(Shape::TwoSpheres { radius: 1.0, gap: 0.0 }.validate().is_err());
        assert!(Shape::Circle { radius: -1.0 }.generate(10, 0).is_err());
        assert!("blob".parse::<Shape>().is_err());
    }

    #[test]
    fn ground_truth_splits_into_local_and_global() {
        for shape in all_shapes() {
            let g = shape.ground_truth();
            assert_eq!(g.rch, g.rch_loc.min(g.rch_glob), "{shape}");
        }
        let t = Shape::Torus { major: 2.0, minor: 0.5 }.ground_truth();
        assert_eq!((t.rch, t.rch_loc, t.rch_glob), (0.5, 0.5, 0.5));
        let e = Shape::Ellipse { a: 2.0, b: 1.0 }.ground_truth();
        assert_eq!((e.rch_loc, e.rch_glob), (0.5, 1.0));
    }

    #[test]
    fn ellipse_samples_are_equally_spaced_in_arc_length() {
        let (a, b) = (2.0, 1.0);
        let table = EllipseArc::new(a, b);
        // Perimeter of the (2, 1) ellipse.
        assert!((table.total - 9.688_448_220_547_675).abs() < 1e-12);
        let s = Shape::Ellipse { a, b }.generate(400, 0).unwrap();
        let step = table.total / 400.0;
        // Chords between neighbours are slightly shorter than the arc step.
        for i in 0..400 {
            let c = dist(s.cloud.point(i), s.cloud.point((i + 1) % 400));
            assert!(c <= step && c > step * (1.0 - 1e-3), "{i}: {c} vs {step}");
        }
    }

    #[test]
    fn fillet_is_tangent_continuous() {
        let f = Fillet::new(0.4, 2.0, PI / 2.0);
        assert!((f.arc_length() - 0.4 * PI / 2.0).abs() < 1e-15);
        for s0 in [f.leg, f.leg + f.arc_length()] {
            let (pl, tl) = f.eval(s0 - 1e-13);
            let (pr, tr) = f.eval(s0 + 1e-13);
            assert!(dist(&pl, &pr) < 1e-12);
            assert!(dist(&tl, &tr) < 1e-12);
            // Finite-difference tangent on either side of the junction.
            let h = 1e-6;
            for side in [-1.0, 1.0] {
                let s = s0 + side * h;
                let (p0, t) = f.eval(s);
                let (p1, _) = f.eval(s + side * h * 1e-3);
                let fd: Vec<f64> = p1.iter().zip(p0).map(|(a, b)| side * (a - b) / (h * 1e-3)).collect();
                assert!(dist(&fd, &t) < 1e-6);
            }
        }
        // Arc points sit at distance rho from the centre.
        let (p, _) = f.eval(f.leg + 0.3 * f.arc_length());
        assert!((dist(&p, &f.center) - 0.4).abs() < 1e-15);
        // End points sit at the far ends of the legs.
        let (start, _) = f.eval(0.0);
        let (end, _) = f.eval(f.length());
        assert!(dist(&start, &[2.4, 0.0]) < 1e-15 && dist(&end, &[0.0, 2.4]) < 1e-14);
    }

    #[test]
    fn two_spheres_nearest_cross_pair() {
        let s = Shape::TwoSpheres { radius: 1.0, gap: 0.3 }.generate(2048, 7).unwrap();
        let c = &s.cloud;
        let mut best = f64::INFINITY;
        for i in 0..2048 {
            for j in 2048..4096 {
                best = best.min(dist(c.point(i), c.point(j)));
            }
        }
        // Band width near the facing poles is about 2 / sqrt(N).
        assert!(best >= 0.6 && best < 0.6 + 0.05, "{best}");
    }

    #[test]
    fn torus_area_weighting() {
        let major: f64 = 2.0;
        let minor: f64 = 0.5;
        for q in [0.0, 0.1, 0.37, 0.5, 0.9] {
            let v = torus_inverse_cdf(major, minor, q);
            let back = (major * v + minor * v.sin()) / (TAU * major);
            assert!((back - q).abs() < 1e-14, "{q} {v} {back}");
        }
        // Fraction of points on the outer half (|v| < pi/2) is
        // (pi R + 2r) / (2 pi R).
        let s = Shape::Torus { major, minor }.generate(4000, 3).unwrap();
        let outer = (0..4000)
            .filter(|&i| {
                let p = s.cloud.point(i);
                (p[0] * p[0] + p[1] * p[1]).sqrt() > major
            })
            .count() as f64
            / 4000.0;
        let expect = (PI * major + 2.0 * minor) / (TAU * major);
        assert!((outer - expect).abs() < 2e-3, "{outer} vs {expect}");
    }

    #[test]
    fn oracle_on_the_circle_is_exact() {
        let r = ground_truth_oracle(&Shape::Circle { radius: 1.0 }, 64, 0).unwrap();
        let c = r.certified;
        assert!((c.rch - 1.0).abs() < 1e-11, "{:?}", r.levels);
        assert!((c.rch_loc - 1.0).abs() < 1e-9);
        // Near-antipodal pairs pass the shrunken emptiness test, biasing
        // the bottleneck scan low by at most 1 - cos(tol).
        assert!(c.rch_glob <= 1.0 && c.rch_glob > 1.0 - 1e-3);
        assert!((c.tangent_variation_sup - 1.0).abs() < 1e-12);
    }

    #[test]
    fn oracle_on_the_segment_reports_no_constraint() {
        let r = ground_truth_oracle(&Shape::Segment { length: 2.0 }, 32, 0).unwrap();
        assert!(r.certified.rch.is_infinite());
        assert!(r.certified.rch_glob.is_infinite());
        assert_eq!(r.certified.tangent_variation_sup, 0.0);
    }
}
