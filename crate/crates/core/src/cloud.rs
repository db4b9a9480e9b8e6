//! Finite point samples with optional tangent frames.

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::Subspace;
use crate::spatial::KdTree;

/// A finite sample of a closed set in `R^d`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    dim: usize,
    coords: Vec<f64>,
    tangents: Option<Vec<Subspace>>,
    intrinsic_dim: Option<usize>,
}

impl PointCloud {
    pub fn new(dim: usize, coords: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter("ambient dimension must be positive".into()));
        }
        if coords.len() % dim != 0 {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: coords.len() % dim,
            });
        }
        if coords.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self {
            dim,
            coords,
            tangents: None,
            intrinsic_dim: None,
        })
    }

    pub fn from_points(dim: usize, points: &[Vec<f64>]) -> Result<Self> {
        let mut coords = Vec::with_capacity(points.len() * dim);
        for p in points {
            if p.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: p.len(),
                });
            }
            coords.extend_from_slice(p);
        }
        Self::new(dim, coords)
    }

    /// Attaches one tangent space per point. All must share a dimension,
    /// which becomes the intrinsic dimension.
    pub fn with_tangents(mut self, tangents: Vec<Subspace>) -> Result<Self> {
        if tangents.len() != self.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                found: tangents.len(),
            });
        }
        let n = tangents.first().map(Subspace::dim);
        for t in &tangents {
            if t.ambient_dim() != self.dim {
                return Err(Error::DimensionMismatch {
                    expected: self.dim,
                    found: t.ambient_dim(),
                });
            }
            if Some(t.dim()) != n {
                return Err(Error::DimensionMismatch {
                    expected: n.unwrap_or(0),
                    found: t.dim(),
                });
            }
        }
        if let (Some(declared), Some(n)) = (self.intrinsic_dim, n) {
            if declared != n {
                return Err(Error::DimensionMismatch {
                    expected: declared,
                    found: n,
                });
            }
        }
        self.intrinsic_dim = n.or(self.intrinsic_dim);
        self.tangents = Some(tangents);
        Ok(self)
    }

    pub fn with_intrinsic_dim(mut self, n: usize) -> Result<Self> {
        if n > self.dim {
            return Err(Error::UnsupportedDimension {
                dim: n,
                ambient: self.dim,
            });
        }
        if let Some(t) = self.tangents.as_ref().and_then(|t| t.first()) {
            if t.dim() != n {
                return Err(Error::DimensionMismatch {
                    expected: t.dim(),
                    found: n,
                });
            }
        }
        self.intrinsic_dim = Some(n);
        Ok(self)
    }

    pub fn without_tangents(mut self) -> Self {
        self.tangents = None;
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    #[inline]
    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn intrinsic_dim(&self) -> Option<usize> {
        self.intrinsic_dim
    }

    pub fn has_tangents(&self) -> bool {
        self.tangents.is_some()
    }

    pub fn tangents(&self) -> Option<&[Subspace]> {
        self.tangents.as_deref()
    }

    pub fn tangent(&self, i: usize) -> Result<&Subspace> {
        self.tangents
            .as_ref()
            .and_then(|t| t.get(i))
            .ok_or(Error::MissingTangent(i))
    }

    /// Every coordinate multiplied by `s`; tangent spaces are unchanged.
    pub fn scaled(&self, s: f64) -> Self {
        Self {
            dim: self.dim,
            coords: self.coords.iter().map(|x| x * s).collect(),
            tangents: self.tangents.clone(),
            intrinsic_dim: self.intrinsic_dim,
        }
    }

    /// The sub-sample at `indices`, in the given order.
    pub fn subset(&self, indices: &[usize]) -> Self {
        let mut coords = Vec::with_capacity(indices.len() * self.dim);
        for &i in indices {
            coords.extend_from_slice(self.point(i));
        }
        Self {
            dim: self.dim,
            coords,
            tangents: self
                .tangents
                .as_ref()
                .map(|t| indices.iter().map(|&i| t[i].clone()).collect()),
            intrinsic_dim: self.intrinsic_dim,
        }
    }

    pub fn kdtree(&self) -> KdTree {
        KdTree::new(self.dim, &self.coords)
    }

    /// Distance from every point to its nearest other sample.
    pub fn nearest_neighbor_distances(&self, tree: &KdTree) -> Vec<f64> {
        (0..self.len())
            .into_par_iter()
            .map(|i| {
                tree.knn(self.point(i), 2)
                    .into_iter()
                    .find(|&(_, j)| j != i)
                    .map_or(f64::INFINITY, |(d, _)| d)
            })
            .collect()
    }

    /// Sample spacing: the largest nearest-neighbour distance.
    pub fn spacing(&self, tree: &KdTree) -> f64 {
        if self.len() < 2 {
            return 0.0;
        }
        self.nearest_neighbor_distances(tree)
            .into_iter()
            .fold(0.0, f64::max)
    }
}

/// Number of neighbours used to estimate a tangent space of dimension `n`.
pub fn pca_neighbourhood_size(n: usize) -> usize {
    (3 * n).max(10)
}

/// Replaces the tangent frames by local PCA estimates: the top `n`
/// eigenvectors of the covariance of each point's nearest neighbours.
pub fn estimate_tangents(cloud: &PointCloud, n: usize) -> Result<PointCloud> {
    let d = cloud.dim();
    if n == 0 || n >= d {
        return Err(Error::UnsupportedDimension { dim: n, ambient: d });
    }
    let k = pca_neighbourhood_size(n);
    if cloud.len() <= k {
        return Err(Error::TooFewPoints {
            need: k + 1,
            got: cloud.len(),
        });
    }
    let tree = cloud.kdtree();
    let tangents = (0..cloud.len())
        .into_par_iter()
        .map(|i| {
            let nbrs = tree.knn(cloud.point(i), k + 1);
            let m = nbrs.len() as f64;
            let mut mean = vec![0.0; d];
            for &(_, j) in &nbrs {
                for (a, x) in mean.iter_mut().zip(cloud.point(j)) {
                    *a += x / m;
                }
            }
            let mut cov = DMatrix::<f64>::zeros(d, d);
            for &(_, j) in &nbrs {
                let p = cloud.point(j);
                for r in 0..d {
                    for c in 0..d {
                        cov[(r, c)] += (p[r] - mean[r]) * (p[c] - mean[c]);
                    }
                }
            }
            let eig = SymmetricEigen::new(cov);
            let mut order: Vec<usize> = (0..d).collect();
            order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
            let cols: Vec<Vec<f64>> = order[..n]
                .iter()
                .map(|&c| eig.eigenvectors.column(c).iter().copied().collect())
                .collect();
            let refs: Vec<&[f64]> = cols.iter().map(Vec::as_slice).collect();
            Subspace::span(d, &refs).map_err(|_| Error::RankDeficient(i))
        })
        .collect::<Result<Vec<_>>>()?;
    cloud
        .clone()
        .without_tangents()
        .with_intrinsic_dim(n)?
        .with_tangents(tangents)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::grassmann_angle;

    fn circle(n: usize) -> PointCloud {
        let pts: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                let t = std::f64::consts::TAU * i as f64 / n as f64;
                vec![t.cos(), t.sin()]
            })
            .collect();
        PointCloud::from_points(2, &pts).unwrap()
    }

    #[test]
    fn rejects_non_finite() {
        assert!(matches!(
            PointCloud::new(2, vec![0.0, f64::NAN]),
            Err(Error::NonFinite)
        ));
        assert!(PointCloud::new(2, vec![0.0, 1.0, 2.0]).is_err());
    }

    #[test]
    fn spacing_of_regular_circle() {
        let c = circle(100);
        let s = c.spacing(&c.kdtree());
        let chord = 2.0 * (std::f64::consts::PI / 100.0).sin();
        assert!((s - chord).abs() < 1e-12);
    }

    #[test]
    fn pca_recovers_circle_tangents() {
        let c = circle(400);
        let est = estimate_tangents(&c, 1).unwrap();
        for i in (0..400).step_by(37) {
            let p = c.point(i);
            let exact = Subspace::span(2, &[&[-p[1], p[0]]]).unwrap();
            let err = grassmann_angle(est.tangent(i).unwrap(), &exact).unwrap();
            assert!(err < 1e-10, "angle error {err}");
        }
    }

    #[test]
    fn tangent_count_must_match() {
        let c = circle(4);
        let t = vec![Subspace::span(2, &[&[1.0, 0.0]]).unwrap()];
        assert!(c.with_tangents(t).is_err());
    }
}
