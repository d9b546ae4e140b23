//! Nodal Lagrange basis of degree `p` on the reference triangle.
//!
//! Nodes sit on the equispaced barycentric lattice `{(i, j) / p : i + j <= p}`
//! and the basis functions are evaluated in product form (Silvester), so no
//! Vandermonde inverse is involved.

use crate::geometry::LOCAL_EDGES;
use crate::scalar::{Point2, Real};

/// Where a reference node lives.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeKind {
    Vertex(usize),
    /// `t`-th node (1-based) walking local edge `edge` from its first to its second vertex.
    Edge { edge: usize, t: usize },
    Interior(usize),
}

#[derive(Debug, Clone)]
pub struct LagrangeBasis {
    degree: usize,
    /// Lattice indices `(i, j, k)` with `i + j + k = p`, paired with `lambda_1, lambda_2, lambda_0`.
    lattice: Vec<[usize; 3]>,
    kinds: Vec<NodeKind>,
}

/// Values and reference gradients of all basis functions at one point.
#[derive(Debug, Clone)]
pub struct BasisEval<T> {
    pub values: Vec<T>,
    pub grads: Vec<Point2<T>>,
}

impl LagrangeBasis {
    pub fn new(degree: usize) -> Self {
        assert!(degree >= 1, "Lagrange basis needs degree >= 1");
        let p = degree;
        let vertex_lattice = [[0, 0], [p, 0], [0, p]];
        let mut lattice = Vec::new();
        let mut kinds = Vec::new();
        let mut push = |i: usize, j: usize, kind: NodeKind| {
            lattice.push([i, j, p - i - j]);
            kinds.push(kind);
        };
        for (a, v) in vertex_lattice.iter().enumerate() {
            push(v[0], v[1], NodeKind::Vertex(a));
        }
        for (l, [a, b]) in LOCAL_EDGES.iter().enumerate() {
            let (va, vb) = (vertex_lattice[*a], vertex_lattice[*b]);
            for t in 1..p {
                let i = (va[0] * (p - t) + vb[0] * t) / p;
                let j = (va[1] * (p - t) + vb[1] * t) / p;
                push(i, j, NodeKind::Edge { edge: l, t });
            }
        }
        let mut idx = 0;
        for j in 1..p {
            for i in 1..p {
                if i + j < p {
                    push(i, j, NodeKind::Interior(idx));
                    idx += 1;
                }
            }
        }
        Self { degree, lattice, kinds }
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    /// `(p + 1)(p + 2) / 2`.
    pub fn len(&self) -> usize {
        self.lattice.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lattice.is_empty()
    }

    pub fn kinds(&self) -> &[NodeKind] {
        &self.kinds
    }

    pub fn num_interior(&self) -> usize {
        let p = self.degree;
        if p < 3 {
            0
        } else {
            (p - 1) * (p - 2) / 2
        }
    }

    /// Reference coordinates of node `i`.
    pub fn node<T: Real>(&self, i: usize) -> Point2<T> {
        let p = T::from_usize_lossy(self.degree);
        let [a, b, _] = self.lattice[i];
        [T::from_usize_lossy(a) / p, T::from_usize_lossy(b) / p]
    }

    pub fn nodes<T: Real>(&self) -> Vec<Point2<T>> {
        (0..self.len()).map(|i| self.node(i)).collect()
    }

    /// Values and reference gradients at `xi`.
    pub fn eval<T: Real>(&self, xi: Point2<T>) -> BasisEval<T> {
        let n = self.len();
        let mut values = Vec::with_capacity(n);
        let mut grads = Vec::with_capacity(n);
        let f = self.factors(xi);
        for node in &self.lattice {
            let (a, b, c) = (f[1][node[0]], f[2][node[1]], f[0][node[2]]);
            values.push(a[0] * b[0] * c[0]);
            grads.push([
                a[1] * b[0] * c[0] - a[0] * b[0] * c[1],
                a[0] * b[1] * c[0] - a[0] * b[0] * c[1],
            ]);
        }
        BasisEval { values, grads }
    }

    /// Reference Hessians `[d_xx, d_xy, d_yy]` at `xi`.
    pub fn hessians<T: Real>(&self, xi: Point2<T>) -> Vec<[T; 3]> {
        let f = self.factors(xi);
        let two = T::lit(2.0);
        self.lattice
            .iter()
            .map(|node| {
                let (a, b, c) = (f[1][node[0]], f[2][node[1]], f[0][node[2]]);
                let xx = a[2] * b[0] * c[0] - two * a[1] * b[0] * c[1] + a[0] * b[0] * c[2];
                let xy = a[1] * b[1] * c[0] - a[1] * b[0] * c[1] - a[0] * b[1] * c[1] + a[0] * b[0] * c[2];
                let yy = a[0] * b[2] * c[0] - two * a[0] * b[1] * c[1] + a[0] * b[0] * c[2];
                [xx, xy, yy]
            })
            .collect()
    }

    /// `factors[c][m] = (P_m, P_m', P_m'')` of barycentric coordinate `c`,
    /// where `P_m(s) = prod_{l < m} (p s - l) / (l + 1)`.
    fn factors<T: Real>(&self, xi: Point2<T>) -> [Vec<[T; 3]>; 3] {
        let p = self.degree;
        let pf = T::from_usize_lossy(p);
        let lambda = [T::one() - xi[0] - xi[1], xi[0], xi[1]];
        lambda.map(|s| {
            let mut out = Vec::with_capacity(p + 1);
            let mut cur = [T::one(), T::zero(), T::zero()];
            out.push(cur);
            for l in 0..p {
                let lf = T::from_usize_lossy(l);
                let den = lf + T::one();
                let g = (pf * s - lf) / den;
                let dg = pf / den;
                cur = [cur[0] * g, cur[1] * g + cur[0] * dg, cur[2] * g + T::lit(2.0) * cur[1] * dg];
                out.push(cur);
            }
            out
        })
    }
}
