//! A static kd-tree over points of runtime dimension.
//!
//! Queries return results in a canonical order (by distance, then index) so
//! callers stay deterministic no matter how the tree happens to be shaped.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::linalg::dist_sq;

const LEAF_SIZE: usize = 16;

#[derive(Debug, Clone)]
enum Node {
    Leaf { start: usize, end: usize },
    Split { axis: usize, value: f64, left: usize, right: usize },
}

#[derive(Debug, Clone)]
pub struct KdTree {
    dim: usize,
    coords: Vec<f64>,
    order: Vec<usize>,
    nodes: Vec<Node>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Candidate {
    dist_sq: f64,
    index: usize,
}

impl Eq for Candidate {}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.dist_sq
            .total_cmp(&other.dist_sq)
            .then(self.index.cmp(&other.index))
    }
}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl KdTree {
    /// Builds a tree over `coords`, a flat row-major array of `dim`-vectors.
    pub fn new(dim: usize, coords: &[f64]) -> Self {
        assert!(dim > 0, "kd-tree needs a positive dimension");
        assert_eq!(coords.len() % dim, 0, "coordinate array is ragged");
        let n = coords.len() / dim;
        let mut tree = Self {
            dim,
            coords: coords.to_vec(),
            order: (0..n).collect(),
            nodes: Vec::new(),
        };
        if n > 0 {
            tree.build(0, n);
        }
        tree
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    fn build(&mut self, start: usize, end: usize) -> usize {
        let id = self.nodes.len();
        if end - start <= LEAF_SIZE {
            self.nodes.push(Node::Leaf { start, end });
            return id;
        }
        // Split on the axis of largest spread.
        let mut axis = 0;
        let mut best_spread = -1.0;
        for a in 0..self.dim {
            let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
            for &i in &self.order[start..end] {
                let x = self.coords[i * self.dim + a];
                lo = lo.min(x);
                hi = hi.max(x);
            }
            if hi - lo > best_spread {
                best_spread = hi - lo;
                axis = a;
            }
        }
        let mid = (start + end) / 2;
        let dim = self.dim;
        let coords = &self.coords;
        self.order[start..end].select_nth_unstable_by(mid - start, |&i, &j| {
            coords[i * dim + axis]
                .total_cmp(&coords[j * dim + axis])
                .then(i.cmp(&j))
        });
        let value = self.coords[self.order[mid] * dim + axis];
        self.nodes.push(Node::Leaf { start: 0, end: 0 });
        let left = self.build(start, mid);
        let right = self.build(mid, end);
        self.nodes[id] = Node::Split {
            axis,
            value,
            left,
            right,
        };
        id
    }

    /// The `k` nearest points to `q` as `(distance, index)`, ascending.
    pub fn knn(&self, q: &[f64], k: usize) -> Vec<(f64, usize)> {
        if k == 0 || self.is_empty() {
            return Vec::new();
        }
        let mut heap = BinaryHeap::with_capacity(k + 1);
        self.knn_rec(0, q, k, &mut heap);
        let mut out: Vec<Candidate> = heap.into_vec();
        out.sort();
        out.into_iter().map(|c| (c.dist_sq.sqrt(), c.index)).collect()
    }

    fn knn_rec(&self, node: usize, q: &[f64], k: usize, heap: &mut BinaryHeap<Candidate>) {
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                for &i in &self.order[start..end] {
                    let c = Candidate {
                        dist_sq: dist_sq(q, self.point(i)),
                        index: i,
                    };
                    if heap.len() < k {
                        heap.push(c);
                    } else if c < *heap.peek().expect("heap is full") {
                        heap.pop();
                        heap.push(c);
                    }
                }
            }
            Node::Split {
                axis,
                value,
                left,
                right,
            } => {
                let delta = q[axis] - value;
                let (near, far) = if delta < 0.0 { (left, right) } else { (right, left) };
                self.knn_rec(near, q, k, heap);
                if heap.len() < k || delta * delta <= heap.peek().expect("heap is full").dist_sq {
                    self.knn_rec(far, q, k, heap);
                }
            }
        }
    }

    /// Indices of all points within distance `r` of `q` (closed ball when
    /// `inclusive`, open otherwise), sorted ascending.
    pub fn within(&self, q: &[f64], r: f64, inclusive: bool) -> Vec<usize> {
        let mut out = Vec::new();
        if self.is_empty() || r < 0.0 || (!inclusive && r <= 0.0) {
            return out;
        }
        let r2 = r * r;
        self.visit_ball(0, q, r2, &mut |i, d2| {
            if d2 < r2 || (inclusive && d2 == r2) {
                out.push(i);
            }
            true
        });
        out.sort_unstable();
        out
    }

    /// Whether any point other than those in `skip` lies in the open ball
    /// of radius `r` about `q`. Stops at the first hit.
    pub fn any_within_open(&self, q: &[f64], r: f64, skip: &[usize]) -> bool {
        if self.is_empty() || r <= 0.0 {
            return false;
        }
        let r2 = r * r;
        let mut found = false;
        self.visit_ball(0, q, r2, &mut |i, d2| {
            if d2 < r2 && !skip.contains(&i) {
                found = true;
                return false;
            }
            true
        });
        found
    }

    /// Calls `f(index, dist_sq)` for every point possibly inside the ball;
    /// `f` returns `false` to stop early. Returns `false` if stopped.
    fn visit_ball(&self, node: usize, q: &[f64], r2: f64, f: &mut dyn FnMut(usize, f64) -> bool) -> bool {
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                for &i in &self.order[start..end] {
                    if !f(i, dist_sq(q, self.point(i))) {
                        return false;
                    }
                }
                true
            }
            Node::Split {
                axis,
                value,
                left,
                right,
            } => {
                let delta = q[axis] - value;
                let (near, far) = if delta < 0.0 { (left, right) } else { (right, left) };
                if !self.visit_ball(near, q, r2, f) {
                    return false;
                }
                if delta * delta <= r2 {
                    return self.visit_ball(far, q, r2, f);
                }
                true
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn brute_knn(coords: &[f64], dim: usize, q: &[f64], k: usize) -> Vec<(f64, usize)> {
        let mut all: Vec<(f64, usize)> = coords
            .chunks(dim)
            .enumerate()
            .map(|(i, p)| (dist_sq(q, p), i))
            .collect();
        all.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        all.truncate(k);
        all.into_iter().map(|(d, i)| (d.sqrt(), i)).collect()
    }

    #[test]
    fn knn_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for dim in 1..5 {
            let coords: Vec<f64> = (0..500 * dim).map(|_| rng.random_range(-1.0..1.0)).collect();
            let tree = KdTree::new(dim, &coords);
            for _ in 0..20 {
                let q: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.2..1.2)).collect();
                assert_eq!(tree.knn(&q, 7), brute_knn(&coords, dim, &q, 7));
            }
        }
    }

    #[test]
    fn knn_breaks_ties_by_index() {
        // Four points at equal distance from the origin.
        let coords = [1.0, 0.0, 0.0, 1.0, -1.0, 0.0, 0.0, -1.0];
        let tree = KdTree::new(2, &coords);
        let got: Vec<usize> = tree.knn(&[0.0, 0.0], 2).into_iter().map(|x| x.1).collect();
        assert_eq!(got, vec![0, 1]);
    }

    #[test]
    fn ball_queries() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let coords: Vec<f64> = (0..3000).map(|_| rng.random_range(0.0..1.0)).collect();
        let tree = KdTree::new(3, &coords);
        let q = [0.5, 0.5, 0.5];
        let r = 0.2;
        let expected: Vec<usize> = coords
            .chunks(3)
            .enumerate()
            .filter(|(_, p)| dist_sq(&q, p) < r * r)
            .map(|(i, _)| i)
            .collect();
        assert_eq!(tree.within(&q, r, false), expected);
        assert!(tree.any_within_open(&q, r, &[]));
        assert!(!tree.any_within_open(&q, r, &expected));
    }

    #[test]
    fn closed_ball_includes_boundary() {
        let coords = [0.0, 1.0, 2.0];
        let tree = KdTree::new(1, &coords);
        assert_eq!(tree.within(&[1.0], 1.0, true), vec![0, 1, 2]);
        assert_eq!(tree.within(&[1.0], 1.0, false), vec![1]);
        assert!(!tree.any_within_open(&[1.0], 1.0, &[1]));
    }
}
