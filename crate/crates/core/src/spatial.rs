//! Exact 3-D k-d tree for nearest-neighbour and fixed-radius queries.
//!
//! Distances are squared Euclidean, computed as `dx² + dy² + dz²` in that
//! order so results match a brute-force loop bit for bit. Pruning only
//! discards a subtree when the split-plane distance alone already exceeds
//! the bound, which is conservative under IEEE rounding.

use nalgebra::Vector3;

const LEAF_SIZE: usize = 8;

#[derive(Debug, Clone)]
enum Node {
    Leaf {
        start: usize,
        end: usize,
    },
    Split {
        axis: usize,
        value: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone)]
pub struct KdTree {
    points: Vec<[f64; 3]>,
    /// Original index of each reordered point.
    order: Vec<usize>,
    nodes: Vec<Node>,
}

#[inline]
pub fn squared_distance(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    let dz = a[2] - b[2];
    dx * dx + dy * dy + dz * dz
}

impl KdTree {
    pub fn new<'a, I>(positions: I) -> Self
    where
        I: IntoIterator<Item = &'a Vector3<f64>>,
    {
        let mut entries: Vec<([f64; 3], usize)> = positions
            .into_iter()
            .enumerate()
            .map(|(i, p)| ([p.x, p.y, p.z], i))
            .collect();
        let mut nodes = Vec::new();
        if !entries.is_empty() {
            let n = entries.len();
            build(&mut entries, 0, n, &mut nodes);
        }
        let (points, order) = entries.into_iter().unzip();
        Self { points, order, nodes }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Nearest point to `query`: `(original index, squared distance)`. Ties go
    /// to the lowest original index.
    pub fn nearest(&self, query: &Vector3<f64>) -> Option<(usize, f64)> {
        if self.nodes.is_empty() {
            return None;
        }
        let q = [query.x, query.y, query.z];
        let mut best = (usize::MAX, f64::INFINITY);
        self.nearest_rec(0, &q, &mut best);
        Some(best)
    }

    fn nearest_rec(&self, node: usize, q: &[f64; 3], best: &mut (usize, f64)) {
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                for i in start..end {
                    let d = squared_distance(&self.points[i], q);
                    let idx = self.order[i];
                    if d < best.1 || (d == best.1 && idx < best.0) {
                        *best = (idx, d);
                    }
                }
            }
            Node::Split {
                axis,
                value,
                left,
                right,
            } => {
                let diff = q[axis] - value;
                let (near, far) = if diff < 0.0 { (left, right) } else { (right, left) };
                self.nearest_rec(near, q, best);
                if diff * diff <= best.1 {
                    self.nearest_rec(far, q, best);
                }
            }
        }
    }

    /// Whether any point lies within the closed ball of radius `radius`.
    pub fn any_within(&self, query: &Vector3<f64>, radius: f64) -> bool {
        if self.nodes.is_empty() {
            return false;
        }
        let q = [query.x, query.y, query.z];
        self.any_rec(0, &q, radius * radius)
    }

    fn any_rec(&self, node: usize, q: &[f64; 3], r2: f64) -> bool {
        match self.nodes[node] {
            Node::Leaf { start, end } => (start..end).any(|i| squared_distance(&self.points[i], q) <= r2),
            Node::Split {
                axis,
                value,
                left,
                right,
            } => {
                let diff = q[axis] - value;
                let (near, far) = if diff < 0.0 { (left, right) } else { (right, left) };
                self.any_rec(near, q, r2) || (diff * diff <= r2 && self.any_rec(far, q, r2))
            }
        }
    }

    /// Original indices of all points within the closed ball, ascending.
    pub fn within_radius(&self, query: &Vector3<f64>, radius: f64) -> Vec<usize> {
        let mut out = Vec::new();
        if !self.nodes.is_empty() {
            let q = [query.x, query.y, query.z];
            self.within_rec(0, &q, radius * radius, &mut out);
        }
        out.sort_unstable();
        out
    }

    fn within_rec(&self, node: usize, q: &[f64; 3], r2: f64, out: &mut Vec<usize>) {
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                out.extend(
                    (start..end)
                        .filter(|&i| squared_distance(&self.points[i], q) <= r2)
                        .map(|i| self.order[i]),
                );
            }
            Node::Split {
                axis,
                value,
                left,
                right,
            } => {
                let diff = q[axis] - value;
                if diff < 0.0 || diff * diff <= r2 {
                    self.within_rec(left, q, r2, out);
                }
                if diff >= 0.0 || diff * diff <= r2 {
                    self.within_rec(right, q, r2, out);
                }
            }
        }
    }
}

// Points left of a split have coordinate <= value, right >= value.
fn build(entries: &mut [([f64; 3], usize)], start: usize, end: usize, nodes: &mut Vec<Node>) -> usize {
    let id = nodes.len();
    if end - start <= LEAF_SIZE {
        nodes.push(Node::Leaf { start, end });
        return id;
    }
    let slice = &mut entries[start..end];
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for (p, _) in slice.iter() {
        for k in 0..3 {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    let axis = (0..3)
        .max_by(|&a, &b| (hi[a] - lo[a]).total_cmp(&(hi[b] - lo[b])))
        .unwrap();
    if hi[axis] - lo[axis] == 0.0 {
        // all points coincide
        nodes.push(Node::Leaf { start, end });
        return id;
    }
    let mid = slice.len() / 2;
    slice.select_nth_unstable_by(mid, |a, b| a.0[axis].total_cmp(&b.0[axis]));
    let value = slice[mid].0[axis];
    nodes.push(Node::Leaf { start, end });
    let left = build(entries, start, start + mid, nodes);
    let right = build(entries, start + mid, end, nodes);
    nodes[id] = Node::Split {
        axis,
        value,
        left,
        right,
    };
    id
}
