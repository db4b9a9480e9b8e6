//! Intrinsic distances on a sample: neighbourhood graphs with Dijkstra
//! shortest paths, closed-form geodesic distances for model shapes, and the
//! straightness checks for geodesics of bounded turning.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use rayon::prelude::*;

use crate::cloud::PointCloud;
use crate::error::{Error, Result};
use crate::linalg::{self, dist, grassmann_angle, Subspace};

/// How the neighbourhood graph is built.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GraphParams {
    /// Symmetrized k nearest neighbours (union of the directed relations).
    Knn(usize),
    /// All pairs within the given distance.
    Radius(f64),
}

impl GraphParams {
    /// `max(2n, 6)` neighbours for intrinsic dimension `n`.
    pub fn default_for(intrinsic_dim: usize) -> Self {
        GraphParams::Knn((2 * intrinsic_dim).max(6))
    }

    fn scaled(self, s: f64) -> Self {
        match self {
            GraphParams::Knn(k) => GraphParams::Knn(k),
            GraphParams::Radius(r) => GraphParams::Radius(r * s),
        }
    }
}

/// A symmetric weighted graph over the points of a cloud, in compressed
/// adjacency form. Edge weights are Euclidean lengths.
#[derive(Debug, Clone)]
pub struct GeodesicGraph {
    offsets: Vec<usize>,
    targets: Vec<usize>,
    weights: Vec<f64>,
    params: GraphParams,
    components: Vec<usize>,
    component_count: usize,
}

#[derive(Clone, Copy, PartialEq)]
struct HeapEntry(f64, usize);

impl Eq for HeapEntry {}

impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0).then(self.1.cmp(&other.1))
    }
}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

pub fn build_graph(cloud: &PointCloud, params: GraphParams) -> Result<GeodesicGraph> {
    let n = cloud.len();
    if n == 0 {
        return Err(Error::TooFewPoints { need: 1, got: 0 });
    }
    let tree = cloud.kdtree();
    let directed: Vec<Vec<usize>> = match params {
        GraphParams::Knn(k) => {
            if k == 0 || k >= n {
                return Err(Error::InvalidParameter(format!(
                    "neighbour count {k} must lie in [1, {})",
                    n
                )));
            }
            (0..n)
                .into_par_iter()
                .map(|i| {
                    tree.knn(cloud.point(i), k + 1)
                        .into_iter()
                        .map(|(_, j)| j)
                        .filter(|&j| j != i)
                        .take(k)
                        .collect()
                })
                .collect()
        }
        GraphParams::Radius(r) => {
            if !(r > 0.0 && r.is_finite()) {
                return Err(Error::InvalidParameter(format!("graph radius {r} must be positive")));
            }
            (0..n)
                .into_par_iter()
                .map(|i| {
                    tree.within(cloud.point(i), r, true)
                        .into_iter()
                        .filter(|&j| j != i)
                        .collect()
                })
                .collect()
        }
    };
    let mut adjacency: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (i, nbrs) in directed.iter().enumerate() {
        for &j in nbrs {
            adjacency[i].push(j);
            adjacency[j].push(i);
        }
    }
    let mut offsets = Vec::with_capacity(n + 1);
    let mut targets = Vec::new();
    let mut weights = Vec::new();
    offsets.push(0);
    for (i, list) in adjacency.iter_mut().enumerate() {
        list.sort_unstable();
        list.dedup();
        for &j in list.iter() {
            targets.push(j);
            weights.push(dist(cloud.point(i), cloud.point(j)));
        }
        offsets.push(targets.len());
    }
    let mut graph = GeodesicGraph {
        offsets,
        targets,
        weights,
        params,
        components: Vec::new(),
        component_count: 0,
    };
    graph.label_components();
    Ok(graph)
}

impl GeodesicGraph {
    pub fn len(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn params(&self) -> GraphParams {
        self.params
    }

    pub fn edge_count(&self) -> usize {
        self.targets.len() / 2
    }

    /// `(neighbour, weight)` pairs of node `i`, neighbours ascending.
    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.offsets[i]..self.offsets[i + 1];
        self.targets[r.clone()]
            .iter()
            .copied()
            .zip(self.weights[r].iter().copied())
    }

    /// Component label per node; labels are numbered by smallest member.
    pub fn components(&self) -> &[usize] {
        &self.components
    }

    pub fn component_count(&self) -> usize {
        self.component_count
    }

    fn label_components(&mut self) {
        let n = self.len();
        let mut label = vec![usize::MAX; n];
        let mut next = 0;
        let mut stack = Vec::new();
        for s in 0..n {
            if label[s] != usize::MAX {
                continue;
            }
            label[s] = next;
            stack.push(s);
            while let Some(u) = stack.pop() {
                for t in self.offsets[u]..self.offsets[u + 1] {
                    let v = self.targets[t];
                    if label[v] == usize::MAX {
                        label[v] = next;
                        stack.push(v);
                    }
                }
            }
            next += 1;
        }
        self.components = label;
        self.component_count = next;
    }

    /// Single-source shortest path lengths; unreachable nodes get infinity.
    pub fn distances_from(&self, src: usize) -> Vec<f64> {
        self.dijkstra(src, f64::INFINITY).0
    }

    /// As [`distances_from`](Self::distances_from), but stops expanding
    /// beyond `max_dist`; farther nodes may be reported as infinite.
    pub fn distances_from_bounded(&self, src: usize, max_dist: f64) -> Vec<f64> {
        self.dijkstra(src, max_dist).0
    }

    fn dijkstra(&self, src: usize, max_dist: f64) -> (Vec<f64>, Vec<usize>) {
        let n = self.len();
        let mut d = vec![f64::INFINITY; n];
        let mut pred = vec![usize::MAX; n];
        let mut done = vec![false; n];
        let mut heap = BinaryHeap::new();
        d[src] = 0.0;
        heap.push(Reverse(HeapEntry(0.0, src)));
        while let Some(Reverse(HeapEntry(du, u))) = heap.pop() {
            if done[u] {
                continue;
            }
            done[u] = true;
            if du > max_dist {
                continue;
            }
            for t in self.offsets[u]..self.offsets[u + 1] {
                let v = self.targets[t];
                let nd = du + self.weights[t];
                if nd < d[v] {
                    d[v] = nd;
                    pred[v] = u;
                    heap.push(Reverse(HeapEntry(nd, v)));
                }
            }
        }
        (d, pred)
    }

    /// Length of a shortest path and the path itself. Disconnected pairs give
    /// an infinite length and an empty polyline.
    pub fn shortest_path(&self, cloud: &PointCloud, a: usize, b: usize) -> Result<(f64, Polyline)> {
        let n = self.len();
        if a >= n || b >= n {
            return Err(Error::InvalidParameter(format!("node index out of range (n = {n})")));
        }
        if a == b {
            return Ok((0.0, Polyline::from_nodes(cloud, vec![a])?));
        }
        let (d, pred) = self.dijkstra(a, f64::INFINITY);
        if !d[b].is_finite() {
            return Ok((f64::INFINITY, Polyline::empty(cloud.dim())));
        }
        let mut nodes = vec![b];
        let mut cur = b;
        while cur != a {
            cur = pred[cur];
            nodes.push(cur);
        }
        nodes.reverse();
        Ok((d[b], Polyline::from_nodes(cloud, nodes)?))
    }

    /// The subgraph induced on `nodes`, renumbered in the given order.
    pub fn induced_subgraph(&self, nodes: &[usize]) -> GeodesicGraph {
        let mut local = vec![usize::MAX; self.len()];
        for (k, &i) in nodes.iter().enumerate() {
            local[i] = k;
        }
        let mut offsets = Vec::with_capacity(nodes.len() + 1);
        let mut targets = Vec::new();
        let mut weights = Vec::new();
        offsets.push(0);
        for &i in nodes {
            let mut row: Vec<(usize, f64)> = self
                .neighbors(i)
                .filter(|&(j, _)| local[j] != usize::MAX)
                .map(|(j, w)| (local[j], w))
                .collect();
            row.sort_by_key(|x| x.0);
            for (j, w) in row {
                targets.push(j);
                weights.push(w);
            }
            offsets.push(targets.len());
        }
        let mut g = GeodesicGraph {
            offsets,
            targets,
            weights,
            params: self.params,
            components: Vec::new(),
            component_count: 0,
        };
        g.label_components();
        g
    }

    /// The same graph with every weight multiplied by `s`.
    pub fn scaled(&self, s: f64) -> GeodesicGraph {
        GeodesicGraph {
            weights: self.weights.iter().map(|w| w * s).collect(),
            params: self.params.scaled(s),
            ..self.clone()
        }
    }
}

/// Closed-form intrinsic distances for model shapes.
#[derive(Debug, Clone, PartialEq)]
pub enum AnalyticGeodesic {
    /// Convex sets: intrinsic and chordal distances coincide.
    Euclidean,
    /// A round sphere of any dimension (a circle in the plane).
    Sphere { center: Vec<f64>, radius: f64 },
    /// A disjoint union of round spheres; points on different spheres are at
    /// infinite distance.
    Spheres(Vec<(Vec<f64>, f64)>),
    /// Flat development of the sample: each point carries coordinates in a
    /// flat parameter domain (arc length, optionally with an extrusion
    /// coordinate), the first of which may be periodic.
    Unrolled {
        coords: Vec<f64>,
        dim: usize,
        period: Option<f64>,
    },
}

impl AnalyticGeodesic {
    pub fn scaled(&self, s: f64) -> Self {
        match self {
            Self::Euclidean => Self::Euclidean,
            Self::Sphere { center, radius } => Self::Sphere {
                center: center.iter().map(|x| x * s).collect(),
                radius: radius * s,
            },
            Self::Spheres(list) => Self::Spheres(
                list.iter()
                    .map(|(c, r)| (c.iter().map(|x| x * s).collect(), r * s))
                    .collect(),
            ),
            Self::Unrolled { coords, dim, period } => Self::Unrolled {
                coords: coords.iter().map(|x| x * s).collect(),
                dim: *dim,
                period: period.map(|p| p * s),
            },
        }
    }

    /// Restriction to the sample points `nodes` (renumbered in order).
    pub fn restrict(&self, nodes: &[usize]) -> Self {
        match self {
            Self::Unrolled { coords, dim, period } => Self::Unrolled {
                coords: nodes
                    .iter()
                    .flat_map(|&i| coords[i * dim..(i + 1) * dim].iter().copied())
                    .collect(),
                dim: *dim,
                period: *period,
            },
            other => other.clone(),
        }
    }

    fn sphere_arc(center: &[f64], radius: f64, p: &[f64], q: &[f64]) -> f64 {
        let u = linalg::sub(p, center);
        let v = linalg::sub(q, center);
        if u == v {
            return 0.0;
        }
        radius * linalg::vector_angle(&u, &v)
    }

    fn nearest_sphere(list: &[(Vec<f64>, f64)], p: &[f64]) -> usize {
        let mut best = (f64::INFINITY, 0);
        for (k, (c, r)) in list.iter().enumerate() {
            let e = (dist(p, c) - r).abs();
            if e < best.0 {
                best = (e, k);
            }
        }
        best.1
    }

    pub fn distance(&self, cloud: &PointCloud, i: usize, j: usize) -> f64 {
        if i == j {
            return 0.0;
        }
        let (p, q) = (cloud.point(i), cloud.point(j));
        match self {
            Self::Euclidean => dist(p, q),
            Self::Sphere { center, radius } => Self::sphere_arc(center, *radius, p, q),
            Self::Spheres(list) => {
                let (a, b) = (Self::nearest_sphere(list, p), Self::nearest_sphere(list, q));
                if a != b {
                    f64::INFINITY
                } else {
                    Self::sphere_arc(&list[a].0, list[a].1, p, q)
                }
            }
            Self::Unrolled { coords, dim, period } => {
                let (u, v) = (&coords[i * dim..(i + 1) * dim], &coords[j * dim..(j + 1) * dim]);
                let mut s = 0.0;
                for k in 0..*dim {
                    let mut delta = (u[k] - v[k]).abs();
                    if k == 0 {
                        if let Some(l) = period {
                            delta = delta.min(l - delta);
                        }
                    }
                    s += delta * delta;
                }
                s.sqrt()
            }
        }
    }
}

/// An intrinsic metric on a sample: graph shortest paths or a closed form.
#[derive(Debug, Clone)]
pub enum IntrinsicMetric {
    Graph(GeodesicGraph),
    Exact(AnalyticGeodesic),
}

impl IntrinsicMetric {
    /// Distances from node `i` to every node of `cloud`.
    pub fn distances_from(&self, cloud: &PointCloud, i: usize) -> Vec<f64> {
        match self {
            Self::Graph(g) => g.distances_from(i),
            Self::Exact(a) => (0..cloud.len()).map(|j| a.distance(cloud, i, j)).collect(),
        }
    }

    /// The metric on the sub-sample `nodes`. Graph distances are recomputed
    /// inside the induced subgraph, so paths may not leave the subset.
    pub fn restrict(&self, nodes: &[usize]) -> Self {
        match self {
            Self::Graph(g) => Self::Graph(g.induced_subgraph(nodes)),
            Self::Exact(a) => Self::Exact(a.restrict(nodes)),
        }
    }

    pub fn scaled(&self, s: f64) -> Self {
        match self {
            Self::Graph(g) => Self::Graph(g.scaled(s)),
            Self::Exact(a) => Self::Exact(a.scaled(s)),
        }
    }

    pub fn is_graph(&self) -> bool {
        matches!(self, Self::Graph(_))
    }
}

/// A piecewise-linear path with arc-length parameters at its nodes and unit
/// directions on its edges.
#[derive(Debug, Clone, PartialEq)]
pub struct Polyline {
    dim: usize,
    nodes: Vec<usize>,
    points: Vec<f64>,
    arc: Vec<f64>,
    directions: Vec<f64>,
}

impl Polyline {
    pub fn empty(dim: usize) -> Self {
        Self {
            dim,
            nodes: Vec::new(),
            points: Vec::new(),
            arc: Vec::new(),
            directions: Vec::new(),
        }
    }

    /// Path through the cloud points `nodes`, in order.
    pub fn from_nodes(cloud: &PointCloud, nodes: Vec<usize>) -> Result<Self> {
        let points: Vec<f64> = nodes
            .iter()
            .flat_map(|&i| cloud.point(i).iter().copied())
            .collect();
        Self::build(cloud.dim(), nodes, points)
    }

    /// Path through explicit vertices (row-major); node ids are positions.
    pub fn from_points(dim: usize, points: Vec<f64>) -> Result<Self> {
        if dim == 0 || points.len() % dim != 0 {
            return Err(Error::InvalidParameter("ragged polyline coordinates".into()));
        }
        let nodes = (0..points.len() / dim).collect();
        Self::build(dim, nodes, points)
    }

    fn build(dim: usize, nodes: Vec<usize>, points: Vec<f64>) -> Result<Self> {
        let m = nodes.len();
        let mut arc = Vec::with_capacity(m);
        let mut directions = Vec::with_capacity(m.saturating_sub(1) * dim);
        if m > 0 {
            arc.push(0.0);
        }
        for k in 1..m {
            let a = &points[(k - 1) * dim..k * dim];
            let b = &points[k * dim..(k + 1) * dim];
            let len = dist(a, b);
            if len <= 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "repeated vertex at polyline position {k}"
                )));
            }
            arc.push(arc[k - 1] + len);
            directions.extend(a.iter().zip(b).map(|(x, y)| (y - x) / len));
        }
        Ok(Self {
            dim,
            nodes,
            points,
            arc,
            directions,
        })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[usize] {
        &self.nodes
    }

    pub fn point(&self, k: usize) -> &[f64] {
        &self.points[k * self.dim..(k + 1) * self.dim]
    }

    /// Cumulative arc length at each vertex.
    pub fn arc_lengths(&self) -> &[f64] {
        &self.arc
    }

    pub fn length(&self) -> f64 {
        self.arc.last().copied().unwrap_or(0.0)
    }

    /// Unit direction of edge `k` (from vertex `k` to `k + 1`).
    pub fn direction(&self, k: usize) -> &[f64] {
        &self.directions[k * self.dim..(k + 1) * self.dim]
    }
}

/// Outcome of the chord-length bound along a geodesic.
#[derive(Debug, Clone, PartialEq)]
pub struct ChordBoundVerdict {
    /// Whether edge directions turn no faster than `1/R` per unit length.
    pub hypothesis_holds: bool,
    /// Largest `angle - separation/R` over edge pairs.
    pub hypothesis_excess: f64,
    pub hypothesis_witness: (usize, usize),
    /// Whether `|q - p| >= 2R sin(l / 2R) - tol` for every vertex pair.
    pub bound_holds: bool,
    /// Smallest `|q - p| - 2R sin(l / 2R)` over vertex pairs.
    pub min_slack: f64,
    pub witness: (usize, usize),
}

impl ChordBoundVerdict {
    pub fn pass(&self) -> bool {
        self.hypothesis_holds && self.bound_holds
    }
}

/// Relative allowance on the turning hypothesis, absorbing the gap between a
/// polyline inscribed in a curve and the curve itself.
pub const TURNING_REL_TOL: f64 = 1e-6;

/// Checks that a curve whose unit tangent is `1/R`-Lipschitz in arc length
/// satisfies `|q - p| >= 2R sin(l / 2R)` between any two of its points.
///
/// Edge directions stand in for the tangent, located at edge midpoints.
pub fn chord_bound_check(gamma: &Polyline, r: f64, tol: f64) -> Result<ChordBoundVerdict> {
    chord_bound_check_with(gamma, r, tol, TURNING_REL_TOL)
}

/// [`chord_bound_check`] with an explicit relative allowance on the turning
/// hypothesis. A polyline inscribed in a circle of radius `R` with edges of
/// length `h` turns faster than `1/R` by a factor of about `1 + h^2/(24 R^2)`.
pub fn chord_bound_check_with(gamma: &Polyline, r: f64, tol: f64, turning_rel_tol: f64) -> Result<ChordBoundVerdict> {
    if !(r > 0.0) {
        return Err(Error::InvalidParameter(format!("radius {r} must be positive")));
    }
    if gamma.len() < 2 {
        return Err(Error::TooFewPoints {
            need: 2,
            got: gamma.len(),
        });
    }
    let total = gamma.length();
    if total > std::f64::consts::TAU * r {
        return Err(Error::OutsideHypothesis(format!(
            "curve length {total} exceeds 2 pi R = {}",
            std::f64::consts::TAU * r
        )));
    }
    let edges = gamma.len() - 1;
    let mid: Vec<f64> = (0..edges)
        .map(|k| 0.5 * (gamma.arc[k] + gamma.arc[k + 1]))
        .collect();
    let (hyp_excess, hyp_witness) = (0..edges)
        .into_par_iter()
        .map(|i| {
            let mut best = (f64::NEG_INFINITY, (i, i));
            for j in i + 1..edges {
                let angle = linalg::vector_angle(gamma.direction(i), gamma.direction(j));
                let allowed = (mid[j] - mid[i]) / r;
                let excess = angle - allowed * (1.0 + turning_rel_tol);
                if excess > best.0 {
                    best = (excess, (i, j));
                }
            }
            best
        })
        .reduce(
            || (f64::NEG_INFINITY, (0, 0)),
            |a, b| if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) { b } else { a },
        );
    let (min_slack, witness) = (0..gamma.len())
        .into_par_iter()
        .map(|i| {
            let mut best = (f64::INFINITY, (i, i));
            for j in i + 1..gamma.len() {
                let l = gamma.arc[j] - gamma.arc[i];
                let chord = dist(gamma.point(i), gamma.point(j));
                let slack = chord - 2.0 * r * (l / (2.0 * r)).sin();
                if slack < best.0 {
                    best = (slack, (i, j));
                }
            }
            best
        })
        .reduce(
            || (f64::INFINITY, (0, 0)),
            |a, b| if b.0 < a.0 || (b.0 == a.0 && b.1 < a.1) { b } else { a },
        );
    Ok(ChordBoundVerdict {
        hypothesis_holds: edges < 2 || hyp_excess <= 0.0,
        hypothesis_excess: if edges < 2 { 0.0 } else { hyp_excess },
        hypothesis_witness: hyp_witness,
        bound_holds: min_slack >= -tol,
        min_slack,
        witness,
    })
}

/// `max ∠(T_i, T_j) / (s_j - s_i)` over vertex pairs of a path, with one
/// tangent space per vertex.
pub fn geodesic_tangent_variation(gamma: &Polyline, tangents: &[Subspace]) -> Result<(f64, (usize, usize))> {
    if tangents.len() < gamma.len() {
        return Err(Error::MissingTangent(tangents.len()));
    }
    let mut best = (0.0, (0, 0));
    for i in 0..gamma.len() {
        for j in i + 1..gamma.len() {
            let ds = gamma.arc[j] - gamma.arc[i];
            if ds <= 0.0 {
                continue;
            }
            let ratio = grassmann_angle(&tangents[i], &tangents[j])? / ds;
            if ratio > best.0 {
                best = (ratio, (i, j));
            }
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, PI, TAU};

    fn circle_cloud(n: usize, r: f64) -> PointCloud {
        let pts: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                let t = TAU * i as f64 / n as f64;
                vec![r * t.cos(), r * t.sin()]
            })
            .collect();
        PointCloud::from_points(2, &pts).unwrap()
    }

    fn arc_polyline(r: f64, angle: f64, m: usize) -> Polyline {
        let pts: Vec<f64> = (0..=m)
            .flat_map(|k| {
                let t = angle * k as f64 / m as f64;
                [r * t.cos(), r * t.sin()]
            })
            .collect();
        Polyline::from_points(2, pts).unwrap()
    }

    #[test]
    fn path_graph_distances() {
        let c = PointCloud::new(1, vec![0.0, 1.0, 2.0]).unwrap();
        let g = build_graph(&c, GraphParams::Knn(1)).unwrap();
        assert_eq!(g.distances_from(0)[2], 2.0);
        let (len, path) = g.shortest_path(&c, 0, 2).unwrap();
        assert_eq!(len, 2.0);
        assert_eq!(path.nodes(), &[0, 1, 2]);
        let (zero, single) = g.shortest_path(&c, 1, 1).unwrap();
        assert_eq!(zero, 0.0);
        assert_eq!(single.len(), 1);
    }

    #[test]
    fn knn_must_be_below_sample_size() {
        let c = PointCloud::new(1, vec![0.0, 1.0, 2.0]).unwrap();
        assert!(build_graph(&c, GraphParams::Knn(3)).is_err());
        assert!(build_graph(&c, GraphParams::Knn(0)).is_err());
    }

    #[test]
    fn circle_cycle_antipodal_distance() {
        let n = 64;
        let c = circle_cloud(n, 1.0);
        let g = build_graph(&c, GraphParams::Knn(2)).unwrap();
        assert_eq!(g.edge_count(), n);
        let expected = 32.0 * 2.0 * (PI / 64.0).sin();
        assert!((g.distances_from(0)[32] - expected).abs() < 1e-12);
    }

    #[test]
    fn separated_clusters_are_disconnected() {
        let c = PointCloud::new(1, vec![0.0, 0.1, 5.0, 5.1]).unwrap();
        let g = build_graph(&c, GraphParams::Radius(1.0)).unwrap();
        assert_eq!(g.component_count(), 2);
        assert!(g.distances_from(0)[2].is_infinite());
        let (len, path) = g.shortest_path(&c, 0, 3).unwrap();
        assert!(len.is_infinite() && path.is_empty());
    }

    #[test]
    fn straight_polyline_meets_bound_with_equality_in_limit() {
        let pts: Vec<f64> = (0..10).flat_map(|k| [k as f64 * 0.1, 0.0]).collect();
        let p = Polyline::from_points(2, pts).unwrap();
        let v = chord_bound_check(&p, 1.0, 1e-12).unwrap();
        assert!(v.pass());
        assert!(v.min_slack >= 0.0);
        assert!(v.hypothesis_excess <= 0.0);
    }

    #[test]
    fn quarter_arc_is_nearly_tight() {
        let p = arc_polyline(1.0, FRAC_PI_2, 512);
        let v = chord_bound_check(&p, 1.0, 1e-6).unwrap();
        assert!(v.pass(), "{v:?}");
        let end = dist(p.point(0), p.point(512));
        assert!((end - 2.0_f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn arc_fails_turning_hypothesis_for_larger_radius() {
        let p = arc_polyline(1.0, FRAC_PI_2, 128);
        let v = chord_bound_check(&p, 2.0, 1e-6).unwrap();
        assert!(!v.hypothesis_holds);
    }

    #[test]
    fn overlong_curve_is_rejected() {
        let p = arc_polyline(1.0, 7.0, 100);
        assert!(matches!(
            chord_bound_check(&p, 1.0, 0.0),
            Err(Error::OutsideHypothesis(_))
        ));
    }

    #[test]
    fn tangent_variation_of_line_and_circle() {
        let pts: Vec<f64> = (0..5).flat_map(|k| [k as f64, 0.0]).collect();
        let line = Polyline::from_points(2, pts).unwrap();
        let t = vec![Subspace::span(2, &[&[1.0, 0.0]]).unwrap(); 5];
        assert_eq!(geodesic_tangent_variation(&line, &t).unwrap().0, 0.0);

        let r = 2.0;
        let arc = arc_polyline(r, 1.0, 200);
        let tangents: Vec<Subspace> = (0..=200)
            .map(|k| {
                let th = k as f64 / 200.0;
                Subspace::span(2, &[&[-th.sin(), th.cos()]]).unwrap()
            })
            .collect();
        let (ratio, _) = geodesic_tangent_variation(&arc, &tangents).unwrap();
        // Inscribed chords are slightly shorter than the arc.
        assert!(ratio >= 1.0 / r && ratio < 1.0 / r * (1.0 + 1e-5));
        assert!(geodesic_tangent_variation(&arc, &tangents[..3]).is_err());
    }

    #[test]
    fn analytic_sphere_distance() {
        let c = circle_cloud(4, 1.0);
        let g = AnalyticGeodesic::Sphere {
            center: vec![0.0, 0.0],
            radius: 1.0,
        };
        assert!((g.distance(&c, 0, 2) - PI).abs() < 1e-15);
        assert!((g.distance(&c, 0, 1) - FRAC_PI_2).abs() < 1e-15);
    }
}
