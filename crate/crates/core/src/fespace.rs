//! Continuous degree-`p` Lagrange space `V_h` and its broken counterpart `W_h`.
//!
//! Global numbering: vertex dofs first (by vertex id), then `p - 1` dofs per
//! edge in the global edge order, then `(p - 1)(p - 2) / 2` interior dofs per
//! element. Edge dofs are enumerated from the endpoint with the smaller global
//! vertex id, so both elements sharing an edge agree on them.

use std::sync::Arc;

use num_complex::Complex;

use crate::basis::{BasisEval, LagrangeBasis, NodeKind};
use crate::error::{Error, Result};
use crate::geometry::{Mesh, LOCAL_EDGES};
use crate::scalar::{Point2, Real};

#[derive(Debug, Clone)]
pub struct FeSpace<T> {
    mesh: Arc<Mesh<T>>,
    basis: LagrangeBasis,
    /// Flattened `[element][local node] -> global dof`.
    element_dofs: Vec<usize>,
    dof_count: usize,
    dof_points: Vec<Point2<T>>,
}

/// Coefficients of a `V_h` function.
#[derive(Debug, Clone, PartialEq)]
pub struct DofVector<T> {
    mesh_id: u64,
    pub values: Vec<Complex<T>>,
}

/// Discontinuous piecewise polynomials on the same mesh: `W_h`.
#[derive(Debug, Clone)]
pub struct BrokenSpace<T> {
    mesh: Arc<Mesh<T>>,
    basis: LagrangeBasis,
}

/// Element-local nodal coefficients of a `W_h` function, element-major.
#[derive(Debug, Clone, PartialEq)]
pub struct BrokenVector<T> {
    mesh_id: u64,
    degree: usize,
    pub values: Vec<Complex<T>>,
}

impl<T: Real> DofVector<T> {
    pub fn zeros(space: &FeSpace<T>) -> Self {
        Self { mesh_id: space.mesh.id(), values: vec![Complex::new(T::zero(), T::zero()); space.dof_count] }
    }

    pub fn from_values(space: &FeSpace<T>, values: Vec<Complex<T>>) -> Result<Self> {
        if values.len() != space.dof_count {
            return Err(Error::DimensionMismatch { expected: space.dof_count, got: values.len() });
        }
        Ok(Self { mesh_id: space.mesh.id(), values })
    }

    pub(crate) fn with_mesh_id(mesh_id: u64, values: Vec<Complex<T>>) -> Self {
        Self { mesh_id, values }
    }

    pub fn mesh_id(&self) -> u64 {
        self.mesh_id
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

impl<T: Real> BrokenVector<T> {
    pub fn from_values(space: &BrokenSpace<T>, values: Vec<Complex<T>>) -> Result<Self> {
        if values.len() != space.len() {
            return Err(Error::DimensionMismatch { expected: space.len(), got: values.len() });
        }
        Ok(Self { mesh_id: space.mesh.id(), degree: space.basis.degree(), values })
    }

    pub fn mesh_id(&self) -> u64 {
        self.mesh_id
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    /// Coefficients on element `t`.
    pub fn element(&self, t: usize, per_element: usize) -> &[Complex<T>] {
        &self.values[t * per_element..(t + 1) * per_element]
    }
}

impl<T: Real> BrokenSpace<T> {
    pub fn new(mesh: Arc<Mesh<T>>, degree: usize) -> Result<Self> {
        if degree < 1 {
            return Err(Error::InvalidParameter("polynomial degree must be >= 1".into()));
        }
        Ok(Self { mesh, basis: LagrangeBasis::new(degree) })
    }

    pub fn mesh(&self) -> &Arc<Mesh<T>> {
        &self.mesh
    }

    pub fn basis(&self) -> &LagrangeBasis {
        &self.basis
    }

    pub fn dofs_per_element(&self) -> usize {
        self.basis.len()
    }

    pub fn len(&self) -> usize {
        self.basis.len() * self.mesh.num_elements()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Element-wise nodal interpolation of `f`, which may depend on the element.
    pub fn interpolate(&self, f: impl Fn(usize, Point2<T>) -> Complex<T>) -> BrokenVector<T> {
        let nodes = self.basis.nodes::<T>();
        let mut values = Vec::with_capacity(self.len());
        for (t, el) in self.mesh.elements.iter().enumerate() {
            for &xi in &nodes {
                values.push(f(t, el.map(xi)));
            }
        }
        BrokenVector { mesh_id: self.mesh.id(), degree: self.basis.degree(), values }
    }
}

impl<T: Real> FeSpace<T> {
    pub fn new(mesh: Arc<Mesh<T>>, degree: usize) -> Result<Self> {
        if degree < 1 {
            return Err(Error::InvalidParameter("polynomial degree must be >= 1".into()));
        }
        let p = degree;
        let basis = LagrangeBasis::new(p);
        let (nv, ne, nt) = (mesh.num_vertices(), mesh.num_edges(), mesh.num_elements());
        let n_int = basis.num_interior();
        let edge_offset = nv;
        let interior_offset = nv + (p - 1) * ne;
        let dof_count = interior_offset + n_int * nt;
        let nloc = basis.len();

        let mut element_dofs = Vec::with_capacity(nloc * nt);
        for (t, el) in mesh.elements.iter().enumerate() {
            for kind in basis.kinds() {
                let dof = match *kind {
                    NodeKind::Vertex(a) => el.vertices[a],
                    NodeKind::Edge { edge, t: pos } => {
                        let [a, b] = LOCAL_EDGES[edge];
                        let forward = el.vertices[a] < el.vertices[b];
                        let k = if forward { pos - 1 } else { p - 1 - pos };
                        edge_offset + el.edges[edge] * (p - 1) + k
                    }
                    NodeKind::Interior(i) => interior_offset + t * n_int + i,
                };
                element_dofs.push(dof);
            }
        }

        let mut dof_points = vec![[T::zero(), T::zero()]; dof_count];
        let nodes = basis.nodes::<T>();
        for (t, el) in mesh.elements.iter().enumerate() {
            for (i, &xi) in nodes.iter().enumerate() {
                dof_points[element_dofs[t * nloc + i]] = el.map(xi);
            }
        }

        Ok(Self { mesh, basis, element_dofs, dof_count, dof_points })
    }

    pub fn mesh(&self) -> &Arc<Mesh<T>> {
        &self.mesh
    }

    pub fn degree(&self) -> usize {
        self.basis.degree()
    }

    pub fn basis(&self) -> &LagrangeBasis {
        &self.basis
    }

    pub fn dof_count(&self) -> usize {
        self.dof_count
    }

    pub fn dofs_per_element(&self) -> usize {
        self.basis.len()
    }

    /// Global dofs of element `t`, in reference-node order.
    pub fn element_dofs(&self, t: usize) -> &[usize] {
        let n = self.basis.len();
        &self.element_dofs[t * n..(t + 1) * n]
    }

    /// Physical location of every nodal dof.
    pub fn dof_points(&self) -> &[Point2<T>] {
        &self.dof_points
    }

    pub fn broken(&self) -> BrokenSpace<T> {
        BrokenSpace { mesh: self.mesh.clone(), basis: self.basis.clone() }
    }

    pub(crate) fn check_vector(&self, v: &DofVector<T>) -> Result<()> {
        if v.mesh_id != self.mesh.id() {
            return Err(Error::MeshMismatch);
        }
        if v.values.len() != self.dof_count {
            return Err(Error::DimensionMismatch { expected: self.dof_count, got: v.values.len() });
        }
        Ok(())
    }

    pub(crate) fn check_broken(&self, w: &BrokenVector<T>) -> Result<()> {
        if w.mesh_id != self.mesh.id() || w.degree != self.degree() {
            return Err(Error::MeshMismatch);
        }
        Ok(())
    }

    /// Basis values and reference gradients on element `element` at reference points.
    pub fn eval_basis(&self, element: usize, ref_points: &[Point2<T>]) -> Result<Vec<BasisEval<T>>> {
        if element >= self.mesh.num_elements() {
            return Err(Error::OutOfRange { index: element, len: self.mesh.num_elements() });
        }
        Ok(ref_points.iter().map(|&xi| self.basis.eval(xi)).collect())
    }

    /// Nodal interpolant of `f`.
    pub fn interpolate(&self, f: impl Fn(Point2<T>) -> Complex<T>) -> DofVector<T> {
        DofVector { mesh_id: self.mesh.id(), values: self.dof_points.iter().map(|&x| f(x)).collect() }
    }

    /// Local coefficients of `v` on element `t`.
    pub fn gather(&self, v: &DofVector<T>, t: usize) -> Vec<Complex<T>> {
        self.element_dofs(t).iter().map(|&d| v.values[d]).collect()
    }

    /// `V_h` viewed inside `W_h`.
    pub fn embed(&self, v: &DofVector<T>) -> Result<BrokenVector<T>> {
        self.check_vector(v)?;
        Ok(BrokenVector {
            mesh_id: self.mesh.id(),
            degree: self.degree(),
            values: self.element_dofs.iter().map(|&d| v.values[d]).collect(),
        })
    }

    /// Value and physical gradient of the local expansion `coeffs` on element `t` at `xi`.
    pub fn eval_local(&self, t: usize, coeffs: &[Complex<T>], xi: Point2<T>) -> (Complex<T>, [Complex<T>; 2]) {
        let e = self.basis.eval(xi);
        combine(&self.mesh.elements[t], coeffs, &e)
    }
}

/// `sum_i c_i phi_i` and its physical gradient from a basis evaluation.
pub(crate) fn combine<T: Real>(
    el: &crate::geometry::Element<T>,
    coeffs: &[Complex<T>],
    e: &BasisEval<T>,
) -> (Complex<T>, [Complex<T>; 2]) {
    let zero = Complex::new(T::zero(), T::zero());
    let mut v = zero;
    let mut g = [zero, zero];
    for ((c, &phi), &gr) in coeffs.iter().zip(&e.values).zip(&e.grads) {
        let gp = el.push_gradient(gr);
        v += *c * phi;
        g[0] += *c * gp[0];
        g[1] += *c * gp[1];
    }
    (v, g)
}
