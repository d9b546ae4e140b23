//! Conforming triangulations of polygonal domains.
//!
//! Besides vertices and elements, a [`Mesh`] carries the oriented edge data the
//! gradient-jump penalty needs: every interior edge records an *owner* (the
//! adjacent element with the larger global label) and a unit normal pointing
//! out of the owner, so that `[v] = v|owner - v|neighbor`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::sync::atomic::{AtomicU64, Ordering};

use crate::error::{Error, Result};
use crate::scalar::{dot, norm, sub, Point2, Real};

static NEXT_MESH_ID: AtomicU64 = AtomicU64::new(1);

/// Local edge `l` joins these two local vertices (it is the edge opposite vertex `l`).
pub const LOCAL_EDGES: [[usize; 2]; 3] = [[1, 2], [2, 0], [0, 1]];

/// Affine triangle `x = origin + jacobian * xi` over the reference triangle
/// with vertices (0,0), (1,0), (0,1).
#[derive(Debug, Clone)]
pub struct Element<T> {
    pub vertices: [usize; 3],
    pub origin: Point2<T>,
    /// Row-major; columns are the two edge vectors leaving vertex 0.
    pub jacobian: [[T; 2]; 2],
    pub inverse: [[T; 2]; 2],
    pub det: T,
    /// Diameter `h_K` (longest edge).
    pub diameter: T,
    /// Global edge index of each local edge.
    pub edges: [usize; 3],
}

impl<T: Real> Element<T> {
    pub fn area(&self) -> T {
        self.det * T::lit(0.5)
    }

    /// Reference point to physical point.
    #[inline]
    pub fn map(&self, xi: Point2<T>) -> Point2<T> {
        let j = &self.jacobian;
        [
            self.origin[0] + j[0][0] * xi[0] + j[0][1] * xi[1],
            self.origin[1] + j[1][0] * xi[0] + j[1][1] * xi[1],
        ]
    }

    /// Physical point to reference point.
    #[inline]
    pub fn pullback(&self, x: Point2<T>) -> Point2<T> {
        let d = sub(x, self.origin);
        let m = &self.inverse;
        [m[0][0] * d[0] + m[0][1] * d[1], m[1][0] * d[0] + m[1][1] * d[1]]
    }

    /// Reference gradient to physical gradient, `J^{-T} g`.
    #[inline]
    pub fn push_gradient(&self, g: Point2<T>) -> Point2<T> {
        let m = &self.inverse;
        [m[0][0] * g[0] + m[1][0] * g[1], m[0][1] * g[0] + m[1][1] * g[1]]
    }

    /// Reference Hessian `[h_xx, h_xy, h_yy]` to physical Hessian, `J^{-T} H J^{-1}`.
    pub fn push_hessian(&self, h: [T; 3]) -> [T; 3] {
        let m = &self.inverse;
        // rows of J^{-1}: m[0], m[1]; physical H_ab = sum_ij m[i][a] H_ij m[j][b]
        let href = [[h[0], h[1]], [h[1], h[2]]];
        let mut out = [[T::zero(); 2]; 2];
        for (a, row) in out.iter_mut().enumerate() {
            for (b, o) in row.iter_mut().enumerate() {
                let mut s = T::zero();
                for (i, hi) in href.iter().enumerate() {
                    for (j, hij) in hi.iter().enumerate() {
                        s += m[i][a] * *hij * m[j][b];
                    }
                }
                *o = s;
            }
        }
        [out[0][0], out[0][1], out[1][1]]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeKind {
    Interior(usize),
    Boundary(usize),
}

/// Global edge record, sorted by its (ascending) vertex pair.
#[derive(Debug, Clone)]
pub struct Edge {
    pub vertices: [usize; 2],
    pub kind: EdgeKind,
}

#[derive(Debug, Clone)]
pub struct InteriorEdge<T> {
    /// Ascending global vertex ids.
    pub vertices: [usize; 2],
    /// Adjacent element with the larger global label.
    pub owner: usize,
    pub neighbor: usize,
    pub owner_local: usize,
    pub neighbor_local: usize,
    /// Unit normal pointing out of `owner`.
    pub normal: Point2<T>,
    pub length: T,
}

#[derive(Debug, Clone)]
pub struct BoundaryEdge<T> {
    pub vertices: [usize; 2],
    pub element: usize,
    pub local: usize,
    /// Outward unit normal of the domain.
    pub normal: Point2<T>,
    pub length: T,
}

/// Immutable conforming triangulation.
#[derive(Debug, Clone)]
pub struct Mesh<T> {
    id: u64,
    pub vertices: Vec<Point2<T>>,
    pub elements: Vec<Element<T>>,
    pub edges: Vec<Edge>,
    pub interior_edges: Vec<InteriorEdge<T>>,
    pub boundary_edges: Vec<BoundaryEdge<T>>,
    /// `max_K h_K`.
    pub h: T,
}

/// Strict star-shapedness witness: `(x - center) . n >= c` on the boundary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StarCenter<T> {
    pub center: Point2<T>,
    pub c: T,
}

impl<T: Real> StarCenter<T> {
    /// Rellich multiplier `alpha(x) = x - x_Omega`.
    #[inline]
    pub fn alpha(&self, x: Point2<T>) -> Point2<T> {
        sub(x, self.center)
    }
}

impl<T: Real> Mesh<T> {
    /// Structured mesh of the unit square with `n x n` cells, each split along
    /// its lower-left to upper-right diagonal.
    pub fn unit_square(n: usize) -> Result<Self> {
        Self::structured_square(n, [T::zero(), T::zero()], T::one())
    }

    /// Same layout as [`Mesh::unit_square`] on `[x0, x0 + side]^2`.
    pub fn structured_square(n: usize, lower_left: Point2<T>, side: T) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("mesh subdivisions must be >= 1".into()));
        }
        if !(side > T::zero()) {
            return Err(Error::InvalidParameter("square side must be positive".into()));
        }
        let nf = T::from_usize_lossy(n);
        let mut vertices = Vec::with_capacity((n + 1) * (n + 1));
        for j in 0..=n {
            for i in 0..=n {
                vertices.push([
                    lower_left[0] + side * T::from_usize_lossy(i) / nf,
                    lower_left[1] + side * T::from_usize_lossy(j) / nf,
                ]);
            }
        }
        let id = |i: usize, j: usize| j * (n + 1) + i;
        let mut triangles = Vec::with_capacity(2 * n * n);
        for j in 0..n {
            for i in 0..n {
                let (v00, v10, v11, v01) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
                triangles.push([v00, v10, v11]);
                triangles.push([v00, v11, v01]);
            }
        }
        Self::from_triangles(vertices, triangles)
    }

    /// Builds a mesh from raw vertex/triangle lists. Clockwise triangles are
    /// reoriented; element labels follow the order of `triangles`.
    pub fn from_triangles(vertices: Vec<Point2<T>>, triangles: Vec<[usize; 3]>) -> Result<Self> {
        if triangles.is_empty() {
            return Err(Error::InvalidMesh("no elements".into()));
        }
        let nv = vertices.len();
        let mut elements = Vec::with_capacity(triangles.len());
        for (t, tri) in triangles.iter().enumerate() {
            let mut v = *tri;
            if let Some(&bad) = v.iter().find(|&&i| i >= nv) {
                return Err(Error::InvalidMesh(format!("element {t} references vertex {bad} of {nv}")));
            }
            if v[0] == v[1] || v[1] == v[2] || v[0] == v[2] {
                return Err(Error::InvalidMesh(format!("element {t} has repeated vertices")));
            }
            let mut el = affine_element(&vertices, v);
            if el.det < T::zero() {
                v.swap(1, 2);
                el = affine_element(&vertices, v);
            }
            if !(el.det > T::zero()) {
                return Err(Error::InvalidMesh(format!("element {t} is degenerate")));
            }
            elements.push(el);
        }

        // (sorted vertex pair) -> adjacent (element, local edge)
        let mut adjacency: BTreeMap<[usize; 2], Vec<(usize, usize)>> = BTreeMap::new();
        for (t, el) in elements.iter().enumerate() {
            for (l, [a, b]) in LOCAL_EDGES.iter().enumerate() {
                let (ga, gb) = (el.vertices[*a], el.vertices[*b]);
                adjacency.entry([ga.min(gb), ga.max(gb)]).or_default().push((t, l));
            }
        }

        let mut edges = Vec::with_capacity(adjacency.len());
        let mut interior_edges = Vec::new();
        let mut boundary_edges = Vec::new();
        for (gidx, (key, adj)) in adjacency.iter().enumerate() {
            let length = norm(sub(vertices[key[1]], vertices[key[0]]));
            let kind = match adj.as_slice() {
                [(t, l)] => {
                    boundary_edges.push(BoundaryEdge {
                        vertices: *key,
                        element: *t,
                        local: *l,
                        normal: outward_normal(&vertices, &elements[*t], *l),
                        length,
                    });
                    EdgeKind::Boundary(boundary_edges.len() - 1)
                }
                [(t0, l0), (t1, l1)] => {
                    let ((owner, ol), (neighbor, nl)) =
                        if t0 > t1 { ((*t0, *l0), (*t1, *l1)) } else { ((*t1, *l1), (*t0, *l0)) };
                    interior_edges.push(InteriorEdge {
                        vertices: *key,
                        owner,
                        neighbor,
                        owner_local: ol,
                        neighbor_local: nl,
                        normal: outward_normal(&vertices, &elements[owner], ol),
                        length,
                    });
                    EdgeKind::Interior(interior_edges.len() - 1)
                }
                _ => {
                    return Err(Error::InvalidMesh(format!(
                        "edge {:?} is shared by {} elements",
                        key,
                        adj.len()
                    )))
                }
            };
            for &(t, l) in adj {
                elements[t].edges[l] = gidx;
            }
            edges.push(Edge { vertices: *key, kind });
        }

        // A hanging node shows up as a vertex strictly inside a "boundary" edge.
        for be in &boundary_edges {
            let (a, b) = (vertices[be.vertices[0]], vertices[be.vertices[1]]);
            let t = sub(b, a);
            let len2 = dot(t, t);
            let tol = T::epsilon() * T::lit(64.0);
            for (iv, &x) in vertices.iter().enumerate() {
                if iv == be.vertices[0] || iv == be.vertices[1] {
                    continue;
                }
                let d = sub(x, a);
                let s = dot(d, t) / len2;
                let cross = (d[0] * t[1] - d[1] * t[0]).abs() / len2.sqrt();
                if s > tol && s < T::one() - tol && cross <= tol * len2.sqrt() {
                    return Err(Error::InvalidMesh(format!(
                        "hanging node {iv} on edge {:?}",
                        be.vertices
                    )));
                }
            }
        }

        let h = elements.iter().map(|e| e.diameter).fold(T::zero(), T::max);
        Ok(Self {
            id: NEXT_MESH_ID.fetch_add(1, Ordering::Relaxed),
            vertices,
            elements,
            edges,
            interior_edges,
            boundary_edges,
            h,
        })
    }

    /// Identity used to check that spaces, penalties and vectors share a mesh.
    pub fn id(&self) -> u64 {
        self.id
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_elements(&self) -> usize {
        self.elements.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    /// Same geometry with element `i` relabelled as `perm[i]`.
    pub fn relabel_elements(&self, perm: &[usize]) -> Result<Self> {
        let m = self.elements.len();
        let mut seen = vec![false; m];
        if perm.len() != m || perm.iter().any(|&p| p >= m || std::mem::replace(&mut seen[p], true)) {
            return Err(Error::InvalidParameter("relabelling is not a permutation".into()));
        }
        let mut triangles = vec![[0usize; 3]; m];
        for (i, el) in self.elements.iter().enumerate() {
            triangles[perm[i]] = el.vertices;
        }
        Self::from_triangles(self.vertices.clone(), triangles)
    }

    /// Largest `c` with `(x - center) . n >= c` on the boundary. Since every
    /// boundary edge is straight, `(x - center) . n` is affine along it and the
    /// minimum is attained at edge endpoints.
    pub fn verify_star_shaped(&self, center: Point2<T>) -> Result<StarCenter<T>> {
        let mut min = T::infinity();
        for be in &self.boundary_edges {
            for &v in &be.vertices {
                min = min.min(dot(sub(self.vertices[v], center), be.normal));
            }
        }
        let scale = self.vertices.iter().map(|&x| norm(sub(x, center))).fold(T::zero(), T::max);
        if min <= T::epsilon() * T::lit(16.0) * scale {
            return Err(Error::NotStarShaped { min: min.as_f64() });
        }
        Ok(StarCenter { center, c: min })
    }

    /// Sum of element areas.
    pub fn area(&self) -> T {
        self.elements.iter().map(|e| e.area()).sum()
    }

    /// Line-oriented text dump (see README for the layout).
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# cipfem mesh v1");
        let _ = writeln!(s, "vertices {}", self.vertices.len());
        for v in &self.vertices {
            let _ = writeln!(s, "{:.17e} {:.17e}", v[0].as_f64(), v[1].as_f64());
        }
        let _ = writeln!(s, "elements {}", self.elements.len());
        for e in &self.elements {
            let _ = writeln!(s, "{} {} {}", e.vertices[0], e.vertices[1], e.vertices[2]);
        }
        let _ = writeln!(s, "interior_edges {}", self.interior_edges.len());
        for e in &self.interior_edges {
            let _ = writeln!(
                s,
                "{} {} {} {} {:.17e} {:.17e} {:.17e}",
                e.vertices[0],
                e.vertices[1],
                e.owner,
                e.neighbor,
                e.normal[0].as_f64(),
                e.normal[1].as_f64(),
                e.length.as_f64()
            );
        }
        let _ = writeln!(s, "boundary_edges {}", self.boundary_edges.len());
        for e in &self.boundary_edges {
            let _ = writeln!(
                s,
                "{} {} {} {:.17e} {:.17e} {:.17e}",
                e.vertices[0],
                e.vertices[1],
                e.element,
                e.normal[0].as_f64(),
                e.normal[1].as_f64(),
                e.length.as_f64()
            );
        }
        s
    }
}

fn affine_element<T: Real>(vertices: &[Point2<T>], v: [usize; 3]) -> Element<T> {
    let (x0, x1, x2) = (vertices[v[0]], vertices[v[1]], vertices[v[2]]);
    let e1 = sub(x1, x0);
    let e2 = sub(x2, x0);
    let det = e1[0] * e2[1] - e2[0] * e1[1];
    let jacobian = [[e1[0], e2[0]], [e1[1], e2[1]]];
    let inverse = [[e2[1] / det, -e2[0] / det], [-e1[1] / det, e1[0] / det]];
    let diameter = norm(e1).max(norm(e2)).max(norm(sub(x2, x1)));
    Element { vertices: v, origin: x0, jacobian, inverse, det, diameter, edges: [usize::MAX; 3] }
}

fn outward_normal<T: Real>(vertices: &[Point2<T>], el: &Element<T>, local: usize) -> Point2<T> {
    let [a, b] = LOCAL_EDGES[local];
    let t = sub(vertices[el.vertices[b]], vertices[el.vertices[a]]);
    let len = norm(t);
    // counter-clockwise element: the outward side is to the right of the tangent
    [t[1] / len, -t[0] / len]
}
