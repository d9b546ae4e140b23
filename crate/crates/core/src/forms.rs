//! Assembly of the CIP-FEM blocks
//!
//! ```text
//! A = S + i Jr - k^2 M + i k B        (plus Jre when the penalty has a real part)
//! b_i = (f, phi_i) + <g, phi_i>
//! ```
//!
//! `S`, `M` are the volume stiffness and mass matrices, `B` the boundary mass
//! matrix, and `Jr` the gradient-jump block
//! `sum_e gamma_e h_e / p^2 <[d_n u], [d_n v]>_e` over interior edges.
//!
//! Element and edge contributions are computed in parallel, collected in
//! element (resp. edge) index order, and reduced by a stable sort of the
//! triplet list; the assembled values are therefore bit-identical from run to run.

use std::sync::Arc;

use num_complex::Complex;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fespace::FeSpace;
use crate::geometry::Mesh;
use crate::quadrature::QuadratureRule;
use crate::scalar::{imag, re, Point2, Real};
use crate::sparse::{complex_combination, CsrMatrix};

pub type ScalarField<T> = Arc<dyn Fn(Point2<T>) -> Complex<T> + Send + Sync>;
/// Boundary datum `g(x, n)`; the outward normal is passed since data such as
/// `d_n u + i k u` depend on it.
pub type BoundaryField<T> = Arc<dyn Fn(Point2<T>, Point2<T>) -> Complex<T> + Send + Sync>;

/// Penalty parameters `gamma_e >= 0`, one per interior edge. The scheme uses
/// `i gamma_e`; an optional real part `rho_e` turns the parameter into
/// `rho_e + i gamma_e`.
#[derive(Debug, Clone, PartialEq)]
pub struct PenaltyProfile<T> {
    mesh_id: u64,
    gamma: Vec<T>,
    real_part: Option<Vec<T>>,
}

impl<T: Real> PenaltyProfile<T> {
    pub fn constant(mesh: &Mesh<T>, gamma: T) -> Result<Self> {
        Self::from_values(mesh, vec![gamma; mesh.interior_edges.len()])
    }

    pub fn zero(mesh: &Mesh<T>) -> Self {
        Self { mesh_id: mesh.id(), gamma: vec![T::zero(); mesh.interior_edges.len()], real_part: None }
    }

    pub fn from_values(mesh: &Mesh<T>, gamma: Vec<T>) -> Result<Self> {
        if gamma.len() != mesh.interior_edges.len() {
            return Err(Error::DimensionMismatch { expected: mesh.interior_edges.len(), got: gamma.len() });
        }
        if let Some(g) = gamma.iter().find(|g| !(**g >= T::zero()) || !g.is_finite()) {
            return Err(Error::InvalidParameter(format!("penalty parameters must be finite and >= 0, got {g}")));
        }
        Ok(Self { mesh_id: mesh.id(), gamma, real_part: None })
    }

    /// Complex penalty `rho + i gamma_e` with a constant real part.
    pub fn with_real_part(mut self, rho: T) -> Self {
        self.real_part = if rho == T::zero() { None } else { Some(vec![rho; self.gamma.len()]) };
        self
    }

    pub fn mesh_id(&self) -> u64 {
        self.mesh_id
    }

    pub fn gamma(&self) -> &[T] {
        &self.gamma
    }

    pub fn real_part(&self) -> Option<&[T]> {
        self.real_part.as_deref()
    }

    pub fn max(&self) -> T {
        self.gamma.iter().fold(T::zero(), |m, &g| m.max(g))
    }

    /// True when the scheme is the plain Galerkin FEM.
    pub fn is_zero(&self) -> bool {
        self.gamma.iter().all(|&g| g == T::zero()) && self.real_part.is_none()
    }

    pub fn scaled(&self, s: T) -> Result<Self> {
        let mut out = self.clone();
        if !(s >= T::zero()) {
            return Err(Error::InvalidParameter("penalty scale must be >= 0".into()));
        }
        out.gamma.iter_mut().for_each(|g| *g *= s);
        Ok(out)
    }
}

/// `-Laplace u - k^2 u = f` in the domain, `d_n u + i k u = g` on its boundary.
#[derive(Clone)]
pub struct HelmholtzProblem<T> {
    pub k: T,
    pub f: ScalarField<T>,
    pub g: BoundaryField<T>,
    pub penalty: PenaltyProfile<T>,
}

impl<T: Real> HelmholtzProblem<T> {
    pub fn new(k: T, f: ScalarField<T>, g: BoundaryField<T>, penalty: PenaltyProfile<T>) -> Result<Self> {
        if !(k > T::zero()) || !k.is_finite() {
            return Err(Error::InvalidParameter(format!("wave number must be positive, got {k}")));
        }
        Ok(Self { k, f, g, penalty })
    }

    /// Zero source and boundary data.
    pub fn homogeneous(k: T, penalty: PenaltyProfile<T>) -> Result<Self> {
        let zero = Complex::new(T::zero(), T::zero());
        Self::new(k, Arc::new(move |_| zero), Arc::new(move |_, _| zero), penalty)
    }
}

impl<T> std::fmt::Debug for HelmholtzProblem<T>
where
    T: std::fmt::Debug,
{
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("HelmholtzProblem").field("k", &self.k).field("penalty", &self.penalty).finish()
    }
}

/// All blocks of the discrete problem.
#[derive(Debug, Clone)]
pub struct SesquilinearSystem<T> {
    mesh_id: u64,
    pub k: T,
    pub stiffness: CsrMatrix<T>,
    /// `Jr`; the scheme uses `i Jr`.
    pub jump: CsrMatrix<T>,
    /// Real-part penalty block, present only with a complex penalty.
    pub jump_real: Option<CsrMatrix<T>>,
    pub mass: CsrMatrix<T>,
    pub boundary_mass: CsrMatrix<T>,
    pub matrix: CsrMatrix<Complex<T>>,
    pub rhs: Vec<Complex<T>>,
}

impl<T: Real> SesquilinearSystem<T> {
    pub fn mesh_id(&self) -> u64 {
        self.mesh_id
    }

    pub fn dof_count(&self) -> usize {
        self.rhs.len()
    }

    /// `S + (rho) + i Jr + sign * i k B`: the matrix of the elliptic projection
    /// form `a_h(u, v) + i k <u, v>` (sign = +1) or its adjoint variant (sign = -1).
    pub fn elliptic_matrix(&self, sign: T) -> CsrMatrix<Complex<T>> {
        let one = re(T::one());
        let mut parts = vec![(&self.stiffness, one), (&self.jump, imag(sign)), (&self.boundary_mass, imag(sign * self.k))];
        if let Some(jre) = &self.jump_real {
            parts.push((jre, one));
        }
        complex_combination(&parts)
    }
}

struct RefTable<T> {
    values: Vec<Vec<T>>,
    grads: Vec<Vec<Point2<T>>>,
}

fn ref_table<T: Real>(space: &FeSpace<T>, quad: &QuadratureRule<T>) -> RefTable<T> {
    let evals: Vec<_> = quad.points.iter().map(|&xi| space.basis().eval(xi)).collect();
    RefTable {
        values: evals.iter().map(|e| e.values.clone()).collect(),
        grads: evals.into_iter().map(|e| e.grads).collect(),
    }
}

fn check_quadrature<T: Real>(space: &FeSpace<T>, quad: &QuadratureRule<T>) -> Result<()> {
    if quad.exactness < 2 * space.degree() {
        return Err(Error::InvalidParameter(format!(
            "quadrature exactness {} below 2p = {}",
            quad.exactness,
            2 * space.degree()
        )));
    }
    Ok(())
}

/// Volume stiffness and mass matrices.
pub fn assemble_stiffness_mass<T: Real>(
    space: &FeSpace<T>,
    quad: &QuadratureRule<T>,
) -> Result<(CsrMatrix<T>, CsrMatrix<T>)> {
    check_quadrature(space, quad)?;
    let table = ref_table(space, quad);
    let nloc = space.dofs_per_element();
    let mesh = space.mesh();
    let locals: Vec<(Vec<T>, Vec<T>)> = (0..mesh.num_elements())
        .into_par_iter()
        .map(|t| {
            let el = &mesh.elements[t];
            let mut s = vec![T::zero(); nloc * nloc];
            let mut m = vec![T::zero(); nloc * nloc];
            for (q, &w) in quad.weights.iter().enumerate() {
                let wq = w * el.det;
                let phys: Vec<Point2<T>> = table.grads[q].iter().map(|&g| el.push_gradient(g)).collect();
                let vals = &table.values[q];
                for i in 0..nloc {
                    for j in 0..nloc {
                        s[i * nloc + j] += wq * (phys[i][0] * phys[j][0] + phys[i][1] * phys[j][1]);
                        m[i * nloc + j] += wq * vals[i] * vals[j];
                    }
                }
            }
            (s, m)
        })
        .collect();
    let n = space.dof_count();
    let mut ts = Vec::with_capacity(locals.len() * nloc * nloc);
    let mut tm = Vec::with_capacity(locals.len() * nloc * nloc);
    for (t, (s, m)) in locals.iter().enumerate() {
        let dofs = space.element_dofs(t);
        for i in 0..nloc {
            for j in 0..nloc {
                ts.push((dofs[i], dofs[j], s[i * nloc + j]));
                tm.push((dofs[i], dofs[j], m[i * nloc + j]));
            }
        }
    }
    Ok((CsrMatrix::from_triplets(n, n, ts), CsrMatrix::from_triplets(n, n, tm)))
}

/// Boundary mass matrix `<u, v>_Gamma`.
pub fn assemble_boundary_mass<T: Real>(space: &FeSpace<T>, quad: &QuadratureRule<T>) -> Result<CsrMatrix<T>> {
    check_quadrature(space, quad)?;
    let mesh = space.mesh();
    let nloc = space.dofs_per_element();
    let mut trip = Vec::with_capacity(mesh.boundary_edges.len() * nloc * nloc);
    for be in &mesh.boundary_edges {
        let el = &mesh.elements[be.element];
        let (a, b) = (mesh.vertices[be.vertices[0]], mesh.vertices[be.vertices[1]]);
        let mut loc = vec![T::zero(); nloc * nloc];
        for (&s, &w) in quad.edge_points.iter().zip(&quad.edge_weights) {
            let x = lerp(a, b, s);
            let vals = space.basis().eval(el.pullback(x)).values;
            let wq = w * be.length;
            for i in 0..nloc {
                for j in 0..nloc {
                    loc[i * nloc + j] += wq * vals[i] * vals[j];
                }
            }
        }
        let dofs = space.element_dofs(be.element);
        for i in 0..nloc {
            for j in 0..nloc {
                trip.push((dofs[i], dofs[j], loc[i * nloc + j]));
            }
        }
    }
    let n = space.dof_count();
    Ok(CsrMatrix::from_triplets(n, n, trip))
}

/// Jump block for edge weights `weights[e]`:
/// `sum_e weights[e] h_e / p^2 <[d_n u], [d_n v]>_e`.
fn assemble_jump_weighted<T: Real>(space: &FeSpace<T>, weights: &[T], quad: &QuadratureRule<T>) -> CsrMatrix<T> {
    let mesh = space.mesh();
    let nloc = space.dofs_per_element();
    let p2 = T::from_usize_lossy(space.degree() * space.degree());
    let locals: Vec<Option<Vec<T>>> = mesh
        .interior_edges
        .par_iter()
        .enumerate()
        .map(|(e, ie)| {
            let weight = weights[e];
            if weight == T::zero() {
                return None;
            }
            let (owner, neighbor) = (&mesh.elements[ie.owner], &mesh.elements[ie.neighbor]);
            let (a, b) = (mesh.vertices[ie.vertices[0]], mesh.vertices[ie.vertices[1]]);
            let n = ie.normal;
            let scale = weight * ie.length / p2;
            let mut loc = vec![T::zero(); 4 * nloc * nloc];
            let mut jump = vec![T::zero(); 2 * nloc];
            for (&s, &w) in quad.edge_points.iter().zip(&quad.edge_weights) {
                let x = lerp(a, b, s);
                let go = space.basis().eval(owner.pullback(x)).grads;
                let gn = space.basis().eval(neighbor.pullback(x)).grads;
                for i in 0..nloc {
                    let po = owner.push_gradient(go[i]);
                    let pn = neighbor.push_gradient(gn[i]);
                    jump[i] = po[0] * n[0] + po[1] * n[1];
                    jump[nloc + i] = -(pn[0] * n[0] + pn[1] * n[1]);
                }
                let wq = scale * w * ie.length;
                for i in 0..2 * nloc {
                    for j in 0..2 * nloc {
                        loc[i * 2 * nloc + j] += wq * jump[i] * jump[j];
                    }
                }
            }
            Some(loc)
        })
        .collect();
    let mut trip = Vec::new();
    for (e, loc) in locals.iter().enumerate() {
        let Some(loc) = loc else { continue };
        let ie = &mesh.interior_edges[e];
        let dofs: Vec<usize> =
            space.element_dofs(ie.owner).iter().chain(space.element_dofs(ie.neighbor)).copied().collect();
        for i in 0..2 * nloc {
            for j in 0..2 * nloc {
                trip.push((dofs[i], dofs[j], loc[i * 2 * nloc + j]));
            }
        }
    }
    let nd = space.dof_count();
    CsrMatrix::from_triplets(nd, nd, trip)
}

/// Gradient-jump block `Jr` (the scheme's `J = i Jr`).
pub fn assemble_jump<T: Real>(space: &FeSpace<T>, penalty: &PenaltyProfile<T>) -> Result<CsrMatrix<T>> {
    let quad = QuadratureRule::for_degree(space.degree())?;
    assemble_jump_with(space, penalty, &quad)
}

pub fn assemble_jump_with<T: Real>(
    space: &FeSpace<T>,
    penalty: &PenaltyProfile<T>,
    quad: &QuadratureRule<T>,
) -> Result<CsrMatrix<T>> {
    if penalty.mesh_id != space.mesh().id() {
        return Err(Error::MeshMismatch);
    }
    check_quadrature(space, quad)?;
    Ok(assemble_jump_weighted(space, &penalty.gamma, quad))
}

/// Load vector `(f, phi_i) + <g, phi_i>`.
pub fn assemble_rhs<T: Real>(problem: &HelmholtzProblem<T>, space: &FeSpace<T>) -> Result<Vec<Complex<T>>> {
    let quad = QuadratureRule::for_degree(space.degree())?;
    assemble_rhs_with(problem, space, &quad)
}

pub fn assemble_rhs_with<T: Real>(
    problem: &HelmholtzProblem<T>,
    space: &FeSpace<T>,
    quad: &QuadratureRule<T>,
) -> Result<Vec<Complex<T>>> {
    if problem.penalty.mesh_id != space.mesh().id() {
        return Err(Error::MeshMismatch);
    }
    let mesh = space.mesh();
    let nloc = space.dofs_per_element();
    let table = ref_table(space, quad);
    let zero = Complex::new(T::zero(), T::zero());
    let volume: Vec<Vec<Complex<T>>> = (0..mesh.num_elements())
        .into_par_iter()
        .map(|t| {
            let el = &mesh.elements[t];
            let mut loc = vec![zero; nloc];
            for (q, (&xi, &w)) in quad.points.iter().zip(&quad.weights).enumerate() {
                let fx = (problem.f)(el.map(xi)) * (w * el.det);
                for (l, &phi) in loc.iter_mut().zip(&table.values[q]) {
                    *l += fx * phi;
                }
            }
            loc
        })
        .collect();
    let mut b = vec![zero; space.dof_count()];
    for (t, loc) in volume.iter().enumerate() {
        for (&d, &v) in space.element_dofs(t).iter().zip(loc) {
            b[d] += v;
        }
    }
    for be in &mesh.boundary_edges {
        let el = &mesh.elements[be.element];
        let (a, bb) = (mesh.vertices[be.vertices[0]], mesh.vertices[be.vertices[1]]);
        let dofs = space.element_dofs(be.element);
        for (&s, &w) in quad.edge_points.iter().zip(&quad.edge_weights) {
            let x = lerp(a, bb, s);
            let gx = (problem.g)(x, be.normal) * (w * be.length);
            let vals = space.basis().eval(el.pullback(x)).values;
            for (&d, &phi) in dofs.iter().zip(&vals) {
                b[d] += gx * phi;
            }
        }
    }
    Ok(b)
}

/// Assembles every block with the default `2p + 2` quadrature.
pub fn assemble_system<T: Real>(problem: &HelmholtzProblem<T>, space: &FeSpace<T>) -> Result<SesquilinearSystem<T>> {
    let quad = QuadratureRule::for_degree(space.degree())?;
    assemble_system_with(problem, space, &quad)
}

pub fn assemble_system_with<T: Real>(
    problem: &HelmholtzProblem<T>,
    space: &FeSpace<T>,
    quad: &QuadratureRule<T>,
) -> Result<SesquilinearSystem<T>> {
    if !(problem.k > T::zero()) {
        return Err(Error::InvalidParameter("wave number must be positive".into()));
    }
    if problem.penalty.mesh_id != space.mesh().id() {
        return Err(Error::MeshMismatch);
    }
    let k = problem.k;
    let (stiffness, mass) = assemble_stiffness_mass(space, quad)?;
    let boundary_mass = assemble_boundary_mass(space, quad)?;
    let jump = assemble_jump_with(space, &problem.penalty, quad)?;
    let jump_real = problem.penalty.real_part.as_ref().map(|rho| assemble_jump_weighted(space, rho, quad));
    let mut parts = vec![
        (&stiffness, re(T::one())),
        (&jump, imag(T::one())),
        (&mass, re(-k * k)),
        (&boundary_mass, imag(k)),
    ];
    if let Some(jre) = &jump_real {
        parts.push((jre, re(T::one())));
    }
    let matrix = complex_combination(&parts);
    let rhs = assemble_rhs_with(problem, space, quad)?;
    Ok(SesquilinearSystem { mesh_id: space.mesh().id(), k, stiffness, jump, jump_real, mass, boundary_mass, matrix, rhs })
}

#[inline]
pub(crate) fn lerp<T: Real>(a: Point2<T>, b: Point2<T>, s: T) -> Point2<T> {
    [a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])]
}
