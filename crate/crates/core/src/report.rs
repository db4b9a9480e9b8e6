//! End-to-end analysis of a point cloud and its JSON report.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde_json::{json, Map, Value};

use crate::cloud::{estimate_tangents, PointCloud};
use crate::error::{Error, Result};
use crate::geodesics::{
    build_graph, chord_bound_check_with, AnalyticGeodesic, GeodesicGraph, GraphParams, IntrinsicMetric, TURNING_REL_TOL};
use crate::io::{format_f64, ground_truth_json, json_f64};
use crate::patch::{
    alpha_bound, default_directions, default_neighborhood_size, extract_patch, fit_derivatives,
    lipschitz_derivative_constant, operator_norm_angle_bound, semiconvexity_check, GraphPatch,
};
use crate::reach::{self, GlobalReach, LocalReach};
use crate::shapes::GroundTruth;

/// Names of the verification checks, in report order.
pub const CHECK_NAMES: [&str; 9] = [
    "lemma_2_2",
    "theorem_2",
    "theorem_3",
    "lemma_7_5",
    "theorem_1_injectivity",
    "lemma_6_6",
    "lemma_6_7",
    "lemma_6_8",
    "lemma_6_10",
];

/// Per-check tolerances.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Absolute, on `sin(angle) - |p-q| / 2R`.
    pub lemma_2_2: f64,
    /// Relative, on `tangent_variation_sup * rch_local` against 1.
    pub theorem_2: f64,
    /// Relative decomposition residual.
    pub theorem_3: f64,
    /// Absolute, on the chord slack.
    pub lemma_7_5: f64,
    /// Absolute, added to the discretization slack of the convexity test.
    pub lemma_6_6: f64,
    /// Absolute, added to the fit allowance of the Lipschitz checks.
    pub lemma_6_7: f64,
    pub lemma_6_8: f64,
    pub lemma_6_10: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            lemma_2_2: 1e-6,
            theorem_2: 0.05,
            theorem_3: 0.03,
            lemma_7_5: 1e-6,
            lemma_6_6: 1e-12,
            lemma_6_7: 1e-9,
            lemma_6_8: 1e-12,
            lemma_6_10: 1e-9,
        }
    }
}

impl Tolerances {
    fn all(&self) -> [(&'static str, f64); 8] {
        [
            ("lemma_2_2", self.lemma_2_2),
            ("theorem_2", self.theorem_2),
            ("theorem_3", self.theorem_3),
            ("lemma_7_5", self.lemma_7_5),
            ("lemma_6_6", self.lemma_6_6),
            ("lemma_6_7", self.lemma_6_7),
            ("lemma_6_8", self.lemma_6_8),
            ("lemma_6_10", self.lemma_6_10),
        ]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisConfig {
    /// Neighbourhood graph; `None` for `k = max(2n, 6)`.
    pub graph: Option<GraphParams>,
    /// Closed-form intrinsic distances. When `None` the estimators use
    /// shortest paths in the neighbourhood graph.
    pub geodesic: Option<AnalyticGeodesic>,
    /// Strictly decreasing local-reach radii; `None` for a grid scaled by the
    /// sample spacing.
    pub rho_grid: Option<Vec<f64>>,
    /// `None` for the sample spacing.
    pub emptiness_tol: Option<f64>,
    pub epsilon: f64,
    /// Ball radius for the derivative-Lipschitz and convexity checks; `None`
    /// for half of `sqrt(epsilon R)`.
    pub alpha: Option<f64>,
    pub tolerances: Tolerances,
    /// Replace any tangent columns by PCA estimates.
    pub estimate_tangents: bool,
    /// Intrinsic dimension when the input carries no tangents.
    pub intrinsic_dim: Option<usize>,
    /// Reach value to verify against in place of the estimate.
    pub rch_value: Option<f64>,
    /// Number of base points for the patch checks.
    pub patch_points: usize,
    /// Number of sample geodesics for the chord bound.
    pub geodesics: usize,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            graph: None,
            geodesic: None,
            rho_grid: None,
            emptiness_tol: None,
            epsilon: 0.1,
            alpha: None,
            tolerances: Tolerances::default(),
            estimate_tangents: false,
            intrinsic_dim: None,
            rch_value: None,
            patch_points: 3,
            geodesics: 8,
        }
    }
}

impl AnalysisConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, t) in self.tolerances.all() {
            if !(t > 0.0 && t.is_finite()) {
                return Err(Error::InvalidParameter(format!("tolerance for {name} must be positive, got {t}")));
            }
        }
        if let Some(g) = &self.rho_grid {
            if g.is_empty() || g.iter().any(|r| !(*r > 0.0 && r.is_finite())) || g.windows(2).any(|w| w[1] >= w[0]) {
                return Err(Error::InvalidParameter(
                    "rho grid must be nonempty, positive and strictly decreasing".into(),
                ));
            }
        }
        if let Some(t) = self.emptiness_tol {
            if !(t >= 0.0 && t.is_finite()) {
                return Err(Error::InvalidParameter(format!("emptiness tolerance {t} must be nonnegative")));
            }
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::InvalidParameter(format!("epsilon {} must be positive", self.epsilon)));
        }
        if let Some(a) = self.alpha {
            if !(a > 0.0) {
                return Err(Error::InvalidParameter(format!("alpha {a} must be positive")));
            }
        }
        if let Some(r) = self.rch_value {
            if !(r > 0.0) {
                return Err(Error::InvalidParameter(format!("reach value {r} must be positive")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckStatus {
    Pass,
    Fail,
    /// Hypotheses not met or nothing to test; does not count as a failure.
    Skipped,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub status: CheckStatus,
    pub value: f64,
    pub bound: f64,
    pub witness: Option<Value>,
    pub note: Option<String>,
}

impl CheckResult {
    fn verdict(pass: bool, value: f64, bound: f64) -> Self {
        Self {
            status: if pass { CheckStatus::Pass } else { CheckStatus::Fail },
            value,
            bound,
            witness: None,
            note: None,
        }
    }

    fn skipped(note: impl Into<String>) -> Self {
        Self {
            status: CheckStatus::Skipped,
            value: f64::NAN,
            bound: f64::NAN,
            witness: None,
            note: Some(note.into()),
        }
    }

    fn failed(note: impl Into<String>) -> Self {
        Self {
            status: CheckStatus::Fail,
            value: f64::NAN,
            bound: f64::NAN,
            witness: None,
            note: Some(note.into()),
        }
    }

    fn with_witness(mut self, w: Value) -> Self {
        self.witness = Some(w);
        self
    }

    fn with_note(mut self, n: impl Into<String>) -> Self {
        self.note = Some(n.into());
        self
    }

    pub fn pass(&self) -> bool {
        self.status != CheckStatus::Fail
    }

    pub fn to_json(&self) -> Value {
        let mut v = json!({
            "pass": self.pass(),
            "status": match self.status {
                CheckStatus::Pass => "pass",
                CheckStatus::Fail => "fail",
                CheckStatus::Skipped => "skipped",
            },
            "value": json_f64(self.value),
            "bound": json_f64(self.bound),
        });
        if let Some(w) = &self.witness {
            v["witness"] = w.clone();
        }
        if let Some(n) = &self.note {
            v["note"] = Value::String(n.clone());
        }
        v
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReachReport {
    pub count: usize,
    pub d: usize,
    pub n: usize,
    pub estimated_frames: bool,
    pub rch_federer: f64,
    pub federer_pair: Option<(usize, usize)>,
    pub rch_distortion: f64,
    pub distortion_pair: Option<(usize, usize)>,
    pub rch: f64,
    pub rch_local: f64,
    pub local_argmin: usize,
    pub rch_global: f64,
    pub bottlenecks: Vec<(usize, usize)>,
    pub tangent_variation_sup: f64,
    pub tangent_variation_pair: Option<(usize, usize)>,
    pub decomposition_residual: f64,
    pub spacing: f64,
    pub graph: GraphParams,
    pub graph_components: usize,
    /// Whether intrinsic distances were closed-form rather than graph paths.
    pub exact_metric: bool,
    pub rho_grid: Vec<f64>,
    pub emptiness_tol: f64,
    pub checks: Vec<(&'static str, CheckResult)>,
    pub ground_truth: Option<GroundTruth>,
    pub warnings: Vec<String>,
}

impl ReachReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|(_, c)| c.pass())
    }

    pub fn check(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|(k, _)| *k == name).map(|(_, c)| c)
    }

    pub fn to_json(&self, config: &AnalysisConfig) -> Value {
        let pair = |p: Option<(usize, usize)>| p.map_or(Value::Null, |(i, j)| json!([i, j]));
        let mut checks = Map::new();
        for (k, c) in &self.checks {
            checks.insert((*k).to_string(), c.to_json());
        }
        let graph = match self.graph {
            GraphParams::Knn(k) => json!({"knn": k}),
            GraphParams::Radius(r) => json!({"radius": json_f64(r)}),
        };
        let tolerances: Map<String, Value> = config
            .tolerances
            .all()
            .iter()
            .map(|(k, t)| ((*k).to_string(), json_f64(*t)))
            .collect();
        let mut v = json!({
            "rch_federer": json_f64(self.rch_federer),
            "rch_distortion": json_f64(self.rch_distortion),
            "rch": json_f64(self.rch),
            "rch_local": json_f64(self.rch_local),
            "rch_global": json_f64(self.rch_global),
            "bottlenecks": self.bottlenecks.iter().map(|&(i, j)| json!([i, j])).collect::<Vec<_>>(),
            "tangent_variation_sup": json_f64(self.tangent_variation_sup),
            "decomposition_residual": json_f64(self.decomposition_residual),
            "checks": checks,
            "params": {
                "count": self.count,
                "d": self.d,
                "n": self.n,
                "frames": if self.estimated_frames { "estimated-frame" } else { "given" },
                "metric": if self.exact_metric { "exact" } else { "graph" },
                "graph": graph,
                "graph_components": self.graph_components,
                "spacing": json_f64(self.spacing),
                "rho_grid": self.rho_grid.iter().map(|r| json_f64(*r)).collect::<Vec<_>>(),
                "emptiness_tol": json_f64(self.emptiness_tol),
                "epsilon": json_f64(config.epsilon),
                "alpha": config.alpha.map_or(Value::Null, json_f64),
                "rch_value": config.rch_value.map_or(Value::Null, json_f64),
                "tolerances": tolerances,
            },
            "witnesses": {
                "federer_pair": pair(self.federer_pair),
                "distortion_pair": pair(self.distortion_pair),
                "tangent_variation_pair": pair(self.tangent_variation_pair),
                "local_argmin": self.local_argmin,
            },
            "warnings": self.warnings,
        });
        if let Some(g) = &self.ground_truth {
            v["ground_truth"] = ground_truth_json(g);
            let rel = |est: f64, truth: f64| {
                if est == truth {
                    0.0
                } else if truth.is_finite() && est.is_finite() {
                    (est - truth).abs() / truth.abs()
                } else {
                    f64::INFINITY
                }
            };
            v["ground_truth_relative_error"] = json!({
                "rch": json_f64(rel(self.rch, g.rch)),
                "rch_local": json_f64(rel(self.rch_local, g.rch_loc)),
                "rch_global": json_f64(rel(self.rch_global, g.rch_glob)),
                "tangent_variation_sup": json_f64(rel(self.tangent_variation_sup, g.tangent_variation_sup)),
            });
        }
        v
    }
}

/// Everything computed by [`analyze`].
#[derive(Debug, Clone)]
pub struct Analysis {
    pub report: ReachReport,
    /// The cloud analysed, with estimated tangents if they were requested.
    pub cloud: PointCloud,
    pub graph: GeodesicGraph,
    pub metric: IntrinsicMetric,
    pub local: LocalReach,
    pub global: GlobalReach,
}

/// Runs every estimator and check on `cloud`. Intrinsic distances come from
/// `config.geodesic` when given and from the neighbourhood graph otherwise;
/// sample geodesics for the chord bound are always graph paths.
pub fn analyze(cloud: &PointCloud, config: &AnalysisConfig, ground_truth: Option<GroundTruth>) -> Result<Analysis> {
    config.validate()?;
    let mut warnings = Vec::new();
    let (cloud, estimated) = prepare_cloud(cloud, config)?;
    let n = cloud.intrinsic_dim().expect("prepared clouds carry a dimension");
    if estimated {
        warnings.push("tangent spaces estimated by local PCA; tangent-dependent quantities are estimated-frame".into());
    }
    let params = config.graph.unwrap_or(GraphParams::default_for(n));
    let graph = build_graph(&cloud, params)?;
    if graph.component_count() > 1 {
        warnings.push(format!(
            "neighbourhood graph has {} components; intrinsic distances between components are infinite",
            graph.component_count()
        ));
    }
    let metric = match &config.geodesic {
        Some(g) => IntrinsicMetric::Exact(g.clone()),
        None => {
            if n >= 2 {
                warnings.push(
                    "graph shortest paths overstate distances on surfaces; distortion and local reach are biased low"
                        .into(),
                );
            }
            IntrinsicMetric::Graph(graph.clone())
        }
    };
    let tree = cloud.kdtree();
    let spacing = cloud.spacing(&tree);
    let rho_grid = config.rho_grid.clone().unwrap_or_else(|| reach::default_rho_grid(spacing));
    let emptiness_tol = config.emptiness_tol.unwrap_or(spacing);

    let fed = reach::federer_reach(&cloud)?;
    let dis = reach::distortion_reach(&cloud, &metric)?;
    let global = reach::global_reach(&cloud, &metric, emptiness_tol)?;
    let local = reach::local_reach(&cloud, &metric, &rho_grid)?;
    if !local.monotone() {
        let worst = local.curves.iter().map(|c| c.worst_drop).fold(0.0, f64::max);
        warnings.push(format!(
            "local reach decreases by up to {:.2}% as the ball shrinks",
            100.0 * worst
        ));
    }
    let tv = reach::tangent_variation_sup(&cloud, &metric)?;
    let tol = config.tolerances;
    let decomposition = reach::decomposition_check(fed.value, dis.value, global.value, local.value, tol.theorem_3);
    let rch = fed.value.min(dis.value);
    let rch_check = config.rch_value.unwrap_or(rch);
    let r_loc = config.rch_value.unwrap_or(local.value);

    let mut checks: Vec<(&'static str, CheckResult)> = Vec::new();

    let ca = reach::chord_angle_check(&cloud, rch_check, tol.lemma_2_2)?;
    let mut c = CheckResult::verdict(ca.pass, ca.max_excess, tol.lemma_2_2)
        .with_note(format!("{} pairs within the reach checked", ca.pairs_checked));
    if let Some((i, j)) = ca.witness {
        c = c.with_witness(json!([i, j]));
    }
    checks.push(("lemma_2_2", c));

    checks.push(("theorem_2", theorem_2_check(tv.value, local.value, tol.theorem_2, tv.pair)));

    let mut c = CheckResult::verdict(decomposition.pass, decomposition.residual, tol.theorem_3);
    c = c.with_note(format!(
        "min(federer, distortion) = {}, min(global, local) = {}",
        format_f64(decomposition.rch),
        format_f64(decomposition.split)
    ));
    checks.push(("theorem_3", c));

    checks.push(("lemma_7_5", chord_bound_on_geodesics(&cloud, &graph, r_loc, tol.lemma_7_5, config.geodesics)));

    let patch_checks = patch_checks(&cloud, config, r_loc, local.argmin, spacing);
    checks.extend(patch_checks);

    let report = ReachReport {
        count: cloud.len(),
        d: cloud.dim(),
        n,
        estimated_frames: estimated,
        rch_federer: fed.value,
        federer_pair: fed.pair,
        rch_distortion: dis.value,
        distortion_pair: dis.pair,
        rch,
        rch_local: local.value,
        local_argmin: local.argmin,
        rch_global: global.value,
        bottlenecks: global.bottlenecks.clone(),
        tangent_variation_sup: tv.value,
        tangent_variation_pair: tv.pair,
        decomposition_residual: decomposition.residual,
        spacing,
        graph: params,
        graph_components: graph.component_count(),
        exact_metric: config.geodesic.is_some(),
        rho_grid,
        emptiness_tol,
        checks,
        ground_truth,
        warnings,
    };
    Ok(Analysis {
        report,
        cloud,
        graph,
        metric,
        local,
        global,
    })
}

fn prepare_cloud(cloud: &PointCloud, config: &AnalysisConfig) -> Result<(PointCloud, bool)> {
    let declared = config.intrinsic_dim.or(cloud.intrinsic_dim());
    if let (Some(a), Some(b)) = (config.intrinsic_dim, cloud.intrinsic_dim()) {
        if a != b {
            return Err(Error::DimensionMismatch { expected: b, found: a });
        }
    }
    if cloud.has_tangents() && !config.estimate_tangents {
        return Ok((cloud.clone(), false));
    }
    let n = declared.ok_or_else(|| {
        Error::InvalidParameter("input has no tangent columns; declare the intrinsic dimension to estimate them".into())
    })?;
    Ok((estimate_tangents(cloud, n)?, true))
}

fn theorem_2_check(tv: f64, rch_local: f64, tol: f64, pair: Option<(usize, usize)>) -> CheckResult {
    let bound = 1.0 / rch_local;
    let pass = if rch_local.is_infinite() {
        tv <= tol
    } else {
        (tv * rch_local - 1.0).abs() <= tol
    };
    let c = CheckResult::verdict(pass, tv, bound);
    match pair {
        Some((i, j)) => c.with_witness(json!([i, j])),
        None => c,
    }
}

/// Chord bound along graph shortest paths from evenly spaced sources to the
/// farthest node within intrinsic distance `pi R` (or anywhere when `R` is
/// infinite). Passes when the bound holds on every path whose turning obeys
/// the hypothesis; paths that turn too fast are reported but do not fail.
fn chord_bound_on_geodesics(cloud: &PointCloud, graph: &GeodesicGraph, r: f64, tol: f64, count: usize) -> CheckResult {
    let r_eff = if r.is_finite() { r } else { 4.0 * bbox_diagonal(cloud).max(f64::MIN_POSITIVE) };
    let limit = if r.is_finite() { std::f64::consts::PI * r } else { f64::INFINITY };
    let n = cloud.len();
    let mut worst: Option<(f64, Value)> = None;
    let mut tested = 0;
    let mut vacuous = 0;
    for k in 0..count.min(n) {
        let src = k * n / count.min(n);
        let d = graph.distances_from(src);
        let Some(dst) = (0..n)
            .filter(|&j| j != src && d[j] <= limit && d[j].is_finite())
            .max_by(|&a, &b| d[a].total_cmp(&d[b]).then(b.cmp(&a)))
        else {
            continue;
        };
        let Ok((_, path)) = graph.shortest_path(cloud, src, dst) else {
            continue;
        };
        if path.len() < 2 {
            continue;
        }
        let max_edge = path.arc_lengths().windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
        let turning = TURNING_REL_TOL.max((max_edge / r_eff).powi(2) / 12.0);
        let v = match chord_bound_check_with(&path, r_eff, tol, turning) {
            Ok(v) => v,
            Err(e) => return CheckResult::failed(format!("geodesic {src}->{dst}: {e}")),
        };
        tested += 1;
        if !v.hypothesis_holds {
            vacuous += 1;
            continue;
        }
        let w = json!({
            "path": [src, dst],
            "vertices": [path.nodes()[v.witness.0], path.nodes()[v.witness.1]],
        });
        if worst.as_ref().is_none_or(|(s, _)| v.min_slack < *s) {
            worst = Some((v.min_slack, w));
        }
    }
    let note = format!("{tested} geodesics, {vacuous} turning faster than 1/R (hypothesis not met)");
    match worst {
        None if tested == 0 => CheckResult::skipped("no geodesic to test"),
        None => CheckResult::skipped(note),
        Some((slack, w)) => CheckResult::verdict(slack >= -tol, slack, -tol).with_witness(w).with_note(note),
    }
}

fn bbox_diagonal(cloud: &PointCloud) -> f64 {
    let d = cloud.dim();
    let mut lo = vec![f64::INFINITY; d];
    let mut hi = vec![f64::NEG_INFINITY; d];
    for i in 0..cloud.len() {
        for (k, x) in cloud.point(i).iter().enumerate() {
            lo[k] = lo[k].min(*x);
            hi[k] = hi[k].max(*x);
        }
    }
    lo.iter().zip(&hi).map(|(a, b)| (b - a) * (b - a)).sum::<f64>().sqrt()
}

/// Base points for the patch checks: the local-reach minimizer, then evenly
/// spaced indices.
fn patch_bases(len: usize, argmin: usize, count: usize) -> Vec<usize> {
    let mut out = vec![argmin];
    let mut k = 0;
    while out.len() < count.min(len) && k < len {
        let i = k * len / count.max(1);
        if !out.contains(&i) {
            out.push(i);
        }
        k += 1;
    }
    out
}

fn patch_checks(
    cloud: &PointCloud,
    config: &AnalysisConfig,
    r_loc: f64,
    argmin: usize,
    spacing: f64,
) -> Vec<(&'static str, CheckResult)> {
    let tol = config.tolerances;
    let eps = config.epsilon;
    let n = cloud.intrinsic_dim().unwrap_or(0);
    let mut out: Vec<(&'static str, CheckResult)> = Vec::new();
    if n == 0 || n >= cloud.dim() {
        for name in ["theorem_1_injectivity", "lemma_6_6", "lemma_6_7", "lemma_6_8", "lemma_6_10"] {
            out.push((name, CheckResult::skipped("patch checks need 0 < n < d")));
        }
        return out;
    }
    // Any finite radius is below an infinite reach.
    let r = if r_loc.is_finite() { r_loc } else { 4.0 * bbox_diagonal(cloud).max(f64::MIN_POSITIVE) };
    let bases = patch_bases(cloud.len(), argmin, config.patch_points);

    let mut patches: Vec<GraphPatch> = Vec::new();
    let mut injectivity = CheckResult::verdict(true, 0.0, 0.0).with_note(format!("{} base points", bases.len()));
    for &p in &bases {
        match extract_patch(cloud, p, r, spacing) {
            Ok(patch) => patches.push(patch),
            Err(Error::ReachHypothesisViolated(i, j)) => {
                injectivity = CheckResult::verdict(false, 1.0, 0.0)
                    .with_witness(json!({"base": p, "pair": [i, j]}))
                    .with_note("two samples over the same tangent position lie on different sheets");
                break;
            }
            Err(e) => {
                injectivity = CheckResult::failed(format!("patch at {p}: {e}"));
                break;
            }
        }
    }
    out.push(("theorem_1_injectivity", injectivity));

    let alpha10 = match alpha_bound(eps, r) {
        Ok(a) => Some(a),
        Err(Error::OutsideHypothesis(m)) => {
            out.push(("lemma_6_6", CheckResult::skipped(m.clone())));
            out.push(("lemma_6_7", CheckResult::skipped(m.clone())));
            out.push(("lemma_6_8", CheckResult::skipped(m.clone())));
            out.push(("lemma_6_10", CheckResult::skipped(m)));
            None
        }
        Err(e) => {
            for name in ["lemma_6_6", "lemma_6_7", "lemma_6_8", "lemma_6_10"] {
                out.push((name, CheckResult::failed(e.to_string())));
            }
            None
        }
    };
    let Some(alpha10) = alpha10 else {
        return out;
    };
    let alpha7 = config.alpha.unwrap_or(0.5 * alpha10);
    let k = default_neighborhood_size(n);
    let mut fitted = Vec::new();
    for patch in patches {
        match fit_derivatives(patch, k) {
            Ok(p) => fitted.push(p),
            Err(e) => {
                for name in ["lemma_6_6", "lemma_6_7", "lemma_6_8", "lemma_6_10"] {
                    out.push((name, CheckResult::failed(format!("derivative fit: {e}"))));
                }
                return out;
            }
        }
    }
    if fitted.is_empty() {
        for name in ["lemma_6_6", "lemma_6_7", "lemma_6_8", "lemma_6_10"] {
            out.push((name, CheckResult::skipped("no patch extracted")));
        }
        return out;
    }

    // Convexity of |x|^2/2 - (R - eps) <v, phi(x)> on the small ball.
    let mut convex: Option<CheckResult> = None;
    for patch in &fitted {
        match semiconvexity_check(patch, r - eps, eps, alpha7, &default_directions(patch, 0), 0) {
            Ok(verdicts) => {
                for v in verdicts {
                    let excess = v.midpoint_excess.max(v.taylor_excess);
                    let bound = v.slack + tol.lemma_6_6;
                    let c = CheckResult::verdict(excess <= bound, excess, bound).with_witness(json!({
                        "base": patch.base_index,
                        "midpoint_pair": [v.midpoint_witness.0, v.midpoint_witness.1],
                        "taylor_pair": [v.taylor_witness.0, v.taylor_witness.1],
                    }));
                    if convex.as_ref().is_none_or(|b| c.value - c.bound > b.value - b.bound) {
                        convex = Some(c);
                    }
                }
            }
            Err(Error::TooFewPoints { got, .. }) => {
                convex.get_or_insert(CheckResult::skipped(format!("{got} samples in the alpha ball")));
            }
            Err(e) => {
                convex = Some(CheckResult::failed(e.to_string()));
                break;
            }
        }
    }
    out.push((
        "lemma_6_6",
        convex.unwrap_or_else(|| CheckResult::skipped("no convexity test ran")),
    ));

    let lipschitz = |alpha: f64, extra: f64| -> CheckResult {
        let mut worst: Option<CheckResult> = None;
        for patch in &fitted {
            match lipschitz_derivative_constant(patch, alpha, r, eps) {
                Ok(l) => {
                    let bound = l.bound + l.tolerance + extra;
                    let c = CheckResult::verdict(l.constant <= bound, l.constant, bound)
                        .with_witness(json!({"base": patch.base_index, "pair": [l.pair.0, l.pair.1]}))
                        .with_note(format!("alpha = {}", format_f64(alpha)));
                    if worst.as_ref().is_none_or(|b| c.value - c.bound > b.value - b.bound) {
                        worst = Some(c);
                    }
                }
                Err(Error::TooFewPoints { got, .. }) => {
                    worst.get_or_insert(CheckResult::skipped(format!("{got} samples in the alpha ball")));
                }
                Err(e) => return CheckResult::failed(e.to_string()),
            }
        }
        worst.unwrap_or_else(|| CheckResult::skipped("no patch"))
    };
    out.push(("lemma_6_7", lipschitz(alpha7, tol.lemma_6_7)));

    // The graph-angle bound between the fitted derivative at the base and
    // at every other sample of the ball.
    let mut angle = CheckResult::verdict(true, f64::NEG_INFINITY, tol.lemma_6_8);
    'outer: for patch in &fitted {
        let derivs = patch.derivatives.as_ref().expect("fitted");
        let base = patch
            .samples
            .iter()
            .position(|s| s.index == patch.base_index)
            .expect("base sample");
        for (k, s) in patch.samples.iter().enumerate() {
            if crate::linalg::norm(&s.x) >= alpha10 || k == base {
                continue;
            }
            match operator_norm_angle_bound(&derivs[base], &derivs[k]) {
                Ok(b) => {
                    let excess = b.lhs - b.rhs;
                    if excess > angle.value {
                        angle = CheckResult::verdict(excess <= tol.lemma_6_8, excess, tol.lemma_6_8)
                            .with_witness(json!({"base": patch.base_index, "sample": s.index}));
                    }
                }
                Err(e) => {
                    angle = CheckResult::failed(e.to_string());
                    break 'outer;
                }
            }
        }
    }
    if angle.value == f64::NEG_INFINITY {
        angle = CheckResult::skipped("no sample pairs in the ball");
    }
    out.push(("lemma_6_8", angle));
    out.push(("lemma_6_10", lipschitz(alpha10, tol.lemma_6_10)));
    out
}

/// Writes the diagnostic CSVs: local-reach curves, bottleneck pairs and the
/// intrinsic-versus-chordal distances from a few sources.
pub fn write_plots(analysis: &Analysis, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut s = String::from("point,rho,rch_local\n");
    for c in &analysis.local.curves {
        for (rho, v) in c.rho.iter().zip(&c.values) {
            let _ = writeln!(
                s,
                "{},{},{}",
                c.point,
                format_f64(*rho),
                v.map_or("nan".to_string(), format_f64)
            );
        }
    }
    fs::write(dir.join("local_reach_curves.csv"), s)?;

    let cloud = &analysis.cloud;
    let mut s = String::from("i,j,half_width\n");
    for &(i, j) in &analysis.global.bottlenecks {
        let w = 0.5 * crate::linalg::dist(cloud.point(i), cloud.point(j));
        let _ = writeln!(s, "{i},{j},{}", format_f64(w));
    }
    fs::write(dir.join("bottlenecks.csv"), s)?;

    let mut s = String::from("i,j,chord,intrinsic\n");
    let n = cloud.len();
    let sources = 16.min(n);
    for k in 0..sources {
        let i = k * n / sources;
        let d = analysis.metric.distances_from(cloud, i);
        for (j, dj) in d.iter().enumerate() {
            if j == i {
                continue;
            }
            let h = crate::linalg::dist(cloud.point(i), cloud.point(j));
            let _ = writeln!(s, "{i},{j},{},{}", format_f64(h), format_f64(*dj));
        }
    }
    fs::write(dir.join("distortion_curve.csv"), s)?;
    Ok(())
}

/// One line per check: name, status, value, bound.
pub fn verdict_table(report: &ReachReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{:<24} {:<8} {:>24} {:>24}", "check", "status", "value", "bound");
    for (name, c) in &report.checks {
        let status = match c.status {
            CheckStatus::Pass => "pass",
            CheckStatus::Fail => "FAIL",
            CheckStatus::Skipped => "skipped",
        };
        let _ = writeln!(s, "{name:<24} {status:<8} {:>24} {:>24}", format_f64(c.value), format_f64(c.bound));
    }
    s
}
