//! Norms, error reports, exact solutions and the Rellich identity checks.
//!
//! ```text
//! ||v||_{1,h}^2 = ||grad v||^2 + sum_e gamma_e h_e / p^2 ||[d_n v]||_e^2
//! |||v|||^2     = ||v||_{1,h}^2 + k ||v||_Gamma^2
//! ```
//!
//! All integrals use the quadrature rule of exactness `2p + 2` unless a rule
//! is passed explicitly. Element sums are computed in parallel and reduced in
//! element order.

mod exact;
mod rellich;

use num_complex::Complex;
use rayon::prelude::*;
use serde::Serialize;

pub use exact::{plane_wave, polynomial, sine_product, ExactSolution};
pub use rellich::{boundary_flux_sums, rellich_residuals, RellichResidual};

use crate::error::{Error, Result};
use crate::fespace::{combine, BrokenVector, DofVector, FeSpace};
use crate::forms::{lerp, HelmholtzProblem, PenaltyProfile};
use crate::geometry::{Mesh, LOCAL_EDGES};
use crate::projections::SmoothField;
use crate::quadrature::QuadratureRule;
use crate::scalar::{Point2, Real};

/// Squared norms of one field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SquaredNorms<T> {
    pub l2: T,
    pub h1_semi: T,
    /// `sum_e gamma_e h_e / p^2 ||[d_n v]||_e^2`.
    pub jump: T,
    pub boundary: T,
}

impl<T: Real> SquaredNorms<T> {
    pub fn one_h(&self) -> T {
        self.h1_semi + self.jump
    }

    pub fn energy(&self, k: T) -> T {
        self.one_h() + k * self.boundary
    }
}

/// Errors of a discrete solution against an exact one. Serialized with the
/// flat keys shown in the `serde` attributes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorReport<T> {
    pub k: T,
    pub h: T,
    pub p: usize,
    /// Largest penalty parameter.
    pub gamma: T,
    #[serde(rename = "err_L2")]
    pub err_l2: T,
    #[serde(rename = "err_H1semi")]
    pub err_h1_semi: T,
    pub err_jump: T,
    pub err_1h: T,
    pub err_energy: T,
    #[serde(rename = "err_bnd_L2")]
    pub err_bnd_l2: T,
    #[serde(rename = "rel_L2")]
    pub rel_l2: T,
    #[serde(rename = "rel_H1semi")]
    pub rel_h1_semi: T,
    /// Relative to `|u|_{H^1}`, since the exact solution has no jumps.
    pub rel_jump: T,
    pub rel_1h: T,
    pub rel_energy: T,
    #[serde(rename = "rel_bnd_L2")]
    pub rel_bnd_l2: T,
    /// `(1 + gamma + k h / p)^{1/2}`.
    pub c_err: T,
}

/// Squared norms of `u - v_h`, either part optional (absent means zero).
/// The jump term only sees `v_h`: exact fields are continuously differentiable.
pub fn squared_norms<T: Real>(
    space: &FeSpace<T>,
    v: Option<&DofVector<T>>,
    u: Option<&SmoothField<T>>,
    penalty: &PenaltyProfile<T>,
    quad: &QuadratureRule<T>,
) -> Result<SquaredNorms<T>> {
    if let Some(v) = v {
        space.check_vector(v)?;
    }
    if penalty.mesh_id() != space.mesh().id() {
        return Err(Error::MeshMismatch);
    }
    let mesh = space.mesh();
    let zero = Complex::new(T::zero(), T::zero());
    let local = |t: usize| -> Vec<Complex<T>> {
        match v {
            Some(v) => space.gather(v, t),
            None => vec![zero; space.dofs_per_element()],
        }
    };
    let evals: Vec<_> = quad.points.iter().map(|&xi| space.basis().eval(xi)).collect();
    let volume: Vec<(T, T)> = (0..mesh.num_elements())
        .into_par_iter()
        .map(|t| {
            let el = &mesh.elements[t];
            let c = local(t);
            let (mut l2, mut h1) = (T::zero(), T::zero());
            for (q, (&xi, &w)) in quad.points.iter().zip(&quad.weights).enumerate() {
                let (vh, gh) = combine(el, &c, &evals[q]);
                let (ue, ge) = match u {
                    Some(u) => {
                        let x = el.map(xi);
                        ((u.u)(x), (u.grad)(x))
                    }
                    None => (zero, [zero, zero]),
                };
                let wq = w * el.det;
                l2 += wq * (ue - vh).norm_sqr();
                h1 += wq * ((ge[0] - gh[0]).norm_sqr() + (ge[1] - gh[1]).norm_sqr());
            }
            (l2, h1)
        })
        .collect();
    let l2 = volume.iter().map(|v| v.0).sum();
    let h1_semi = volume.iter().map(|v| v.1).sum();

    let p2 = T::from_usize_lossy(space.degree() * space.degree());
    let mut jump = T::zero();
    if v.is_some() {
        for (e, ie) in mesh.interior_edges.iter().enumerate() {
            let gamma = penalty.gamma()[e];
            if gamma == T::zero() {
                continue;
            }
            let (co, cn) = (local(ie.owner), local(ie.neighbor));
            let (owner, neighbor) = (&mesh.elements[ie.owner], &mesh.elements[ie.neighbor]);
            let (a, b) = (mesh.vertices[ie.vertices[0]], mesh.vertices[ie.vertices[1]]);
            let n = ie.normal;
            let mut s = T::zero();
            for (&sq, &w) in quad.edge_points.iter().zip(&quad.edge_weights) {
                let x = lerp(a, b, sq);
                let (_, go) = space.eval_local(ie.owner, &co, owner.pullback(x));
                let (_, gn) = space.eval_local(ie.neighbor, &cn, neighbor.pullback(x));
                let jn = (go[0] - gn[0]) * n[0] + (go[1] - gn[1]) * n[1];
                s += w * ie.length * jn.norm_sqr();
            }
            jump += gamma * ie.length / p2 * s;
        }
    }

    let mut boundary = T::zero();
    for be in &mesh.boundary_edges {
        let c = local(be.element);
        let el = &mesh.elements[be.element];
        let (a, b) = (mesh.vertices[be.vertices[0]], mesh.vertices[be.vertices[1]]);
        for (&sq, &w) in quad.edge_points.iter().zip(&quad.edge_weights) {
            let x = lerp(a, b, sq);
            let (vh, _) = space.eval_local(be.element, &c, el.pullback(x));
            let ue = u.map_or(zero, |u| (u.u)(x));
            boundary += w * be.length * (ue - vh).norm_sqr();
        }
    }
    Ok(SquaredNorms { l2, h1_semi, jump, boundary })
}

/// Squared norms of a discrete function.
pub fn discrete_norms<T: Real>(space: &FeSpace<T>, v: &DofVector<T>, penalty: &PenaltyProfile<T>) -> Result<SquaredNorms<T>> {
    let quad = QuadratureRule::for_degree(space.degree())?;
    squared_norms(space, Some(v), None, penalty, &quad)
}

/// `(1 + gamma + k h / p)^{1/2}`.
pub fn c_err<T: Real>(k: T, h: T, p: usize, gamma: T) -> T {
    (T::one() + gamma + k * h / T::from_usize_lossy(p)).sqrt()
}

/// `1 + (gamma p^4 / h^2 + p^6 C_p^2 / (gamma h^2)) / k` with `C_p = p^{-1/2}`;
/// `None` for `gamma = 0`.
pub fn c_sta<T: Real>(k: T, h: T, p: usize, gamma: T) -> Option<T> {
    if !(gamma > T::zero()) {
        return None;
    }
    let pf = T::from_usize_lossy(p);
    let cp2 = T::one() / pf;
    Some(T::one() + (gamma * pf.powi(4) / (h * h) + pf.powi(6) * cp2 / (gamma * h * h)) / k)
}

pub fn error_report<T: Real>(
    exact: &ExactSolution<T>,
    uh: &DofVector<T>,
    space: &FeSpace<T>,
    penalty: &PenaltyProfile<T>,
) -> Result<ErrorReport<T>> {
    let quad = QuadratureRule::for_degree(space.degree())?;
    error_report_with(exact, uh, space, penalty, &quad)
}

pub fn error_report_with<T: Real>(
    exact: &ExactSolution<T>,
    uh: &DofVector<T>,
    space: &FeSpace<T>,
    penalty: &PenaltyProfile<T>,
    quad: &QuadratureRule<T>,
) -> Result<ErrorReport<T>> {
    let field = exact.field();
    let e = squared_norms(space, Some(uh), Some(&field), penalty, quad)?;
    let u = squared_norms(space, None, Some(&field), penalty, quad)?;
    let k = exact.k;
    let ratio = |a: T, b: T| if b > T::zero() { (a / b).sqrt() } else { a.sqrt() };
    let p = space.degree();
    let h = space.mesh().h;
    let gamma = penalty.max();
    Ok(ErrorReport {
        k,
        h,
        p,
        gamma,
        err_l2: e.l2.sqrt(),
        err_h1_semi: e.h1_semi.sqrt(),
        err_jump: e.jump.sqrt(),
        err_1h: e.one_h().sqrt(),
        err_energy: e.energy(k).sqrt(),
        err_bnd_l2: e.boundary.sqrt(),
        rel_l2: ratio(e.l2, u.l2),
        rel_h1_semi: ratio(e.h1_semi, u.h1_semi),
        rel_jump: ratio(e.jump, u.h1_semi),
        rel_1h: ratio(e.one_h(), u.one_h()),
        rel_energy: ratio(e.energy(k), u.energy(k)),
        rel_bnd_l2: ratio(e.boundary, u.boundary),
        c_err: c_err(k, h, p, gamma),
    })
}

/// `||f||_{L^2} + ||g||_{L^2(Gamma)}`, used in place of the `H^{1/2}(Gamma)`
/// data norm.
pub fn data_norm<T: Real>(problem: &HelmholtzProblem<T>, mesh: &Mesh<T>, quad: &QuadratureRule<T>) -> T {
    let mut f2 = T::zero();
    for el in &mesh.elements {
        for (&xi, &w) in quad.points.iter().zip(&quad.weights) {
            f2 += w * el.det * (problem.f)(el.map(xi)).norm_sqr();
        }
    }
    let mut g2 = T::zero();
    for be in &mesh.boundary_edges {
        let (a, b) = (mesh.vertices[be.vertices[0]], mesh.vertices[be.vertices[1]]);
        for (&s, &w) in quad.edge_points.iter().zip(&quad.edge_weights) {
            g2 += w * be.length * (problem.g)(lerp(a, b, s), be.normal).norm_sqr();
        }
    }
    f2.sqrt() + g2.sqrt()
}

/// Both sides of the imaginary part of the scheme tested with `u_h` itself:
/// `(sum_e gamma_e h_e / p^2 ||[d_n u_h]||_e^2 + k ||u_h||_Gamma^2, Im((f, u_h) + <g, u_h>))`.
pub fn im_identity<T: Real>(uh: &DofVector<T>, space: &FeSpace<T>, problem: &HelmholtzProblem<T>) -> Result<(T, T)> {
    let quad = QuadratureRule::for_degree(space.degree())?;
    let n = squared_norms(space, Some(uh), None, &problem.penalty, &quad)?;
    let lhs = n.jump + problem.k * n.boundary;
    let mesh = space.mesh();
    let mut rhs = Complex::new(T::zero(), T::zero());
    for (t, el) in mesh.elements.iter().enumerate() {
        let c = space.gather(uh, t);
        for (&xi, &w) in quad.points.iter().zip(&quad.weights) {
            let (v, _) = space.eval_local(t, &c, xi);
            rhs += (problem.f)(el.map(xi)) * v.conj() * (w * el.det);
        }
    }
    for be in &mesh.boundary_edges {
        let c = space.gather(uh, be.element);
        let el = &mesh.elements[be.element];
        let (a, b) = (mesh.vertices[be.vertices[0]], mesh.vertices[be.vertices[1]]);
        for (&s, &w) in quad.edge_points.iter().zip(&quad.edge_weights) {
            let x = lerp(a, b, s);
            let (v, _) = space.eval_local(be.element, &c, el.pullback(x));
            rhs += (problem.g)(x, be.normal) * v.conj() * (w * be.length);
        }
    }
    Ok((lhs, rhs.im))
}

/// Per-element `||w||_{L^2(K)}` of a broken function.
pub fn broken_l2_norms<T: Real>(w: &BrokenVector<T>, space: &FeSpace<T>) -> Result<Vec<T>> {
    space.check_broken(w)?;
    let quad = QuadratureRule::for_degree(space.degree())?;
    let nloc = space.dofs_per_element();
    let vals: Vec<Vec<T>> = quad.points.iter().map(|&xi| space.basis().eval(xi).values).collect();
    Ok(space
        .mesh()
        .elements
        .iter()
        .enumerate()
        .map(|(t, el)| {
            let c = w.element(t, nloc);
            let mut s = T::zero();
            for (q, &wq) in quad.weights.iter().enumerate() {
                let v: Complex<T> = c.iter().zip(&vals[q]).map(|(ci, &phi)| *ci * phi).sum();
                s += wq * el.det * v.norm_sqr();
            }
            s.sqrt()
        })
        .collect())
}

/// Per-interior-edge `||[w]||_{L^2(e)}` of a broken function.
pub fn broken_value_jumps<T: Real>(w: &BrokenVector<T>, space: &FeSpace<T>) -> Result<Vec<T>> {
    space.check_broken(w)?;
    let quad = QuadratureRule::for_degree(space.degree())?;
    let mesh = space.mesh();
    let nloc = space.dofs_per_element();
    Ok(mesh
        .interior_edges
        .iter()
        .map(|ie| {
            let (a, b) = (mesh.vertices[ie.vertices[0]], mesh.vertices[ie.vertices[1]]);
            let mut s = T::zero();
            for (&sq, &wq) in quad.edge_points.iter().zip(&quad.edge_weights) {
                let x = lerp(a, b, sq);
                let vo = eval_broken(space, w, ie.owner, nloc, x);
                let vn = eval_broken(space, w, ie.neighbor, nloc, x);
                s += wq * ie.length * (vo - vn).norm_sqr();
            }
            s.sqrt()
        })
        .collect())
}

fn eval_broken<T: Real>(space: &FeSpace<T>, w: &BrokenVector<T>, t: usize, nloc: usize, x: Point2<T>) -> Complex<T> {
    let el = &space.mesh().elements[t];
    let vals = space.basis().eval(el.pullback(x)).values;
    w.element(t, nloc).iter().zip(&vals).map(|(c, &phi)| *c * phi).sum()
}

/// Interior edges on the boundary of each element.
pub fn element_interior_edges<T: Real>(mesh: &Mesh<T>) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new(); mesh.num_elements()];
    for (e, ie) in mesh.interior_edges.iter().enumerate() {
        out[ie.owner].push(e);
        out[ie.neighbor].push(e);
    }
    out
}

/// Outward unit normal and length of local edge `l` of element `t`.
pub(crate) fn local_edge<T: Real>(mesh: &Mesh<T>, t: usize, l: usize) -> (Point2<T>, Point2<T>, Point2<T>, T) {
    let el = &mesh.elements[t];
    let [a, b] = LOCAL_EDGES[l];
    let (pa, pb) = (mesh.vertices[el.vertices[a]], mesh.vertices[el.vertices[b]]);
    let d = [pb[0] - pa[0], pb[1] - pa[1]];
    let len = (d[0] * d[0] + d[1] * d[1]).sqrt();
    (pa, pb, [d[1] / len, -d[0] / len], len)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Arc;

    fn space(n: usize, p: usize) -> FeSpace<f64> {
        FeSpace::new(Arc::new(Mesh::unit_square(n).unwrap()), p).unwrap()
    }

    #[test]
    fn interpolant_of_polynomial_has_no_error() {
        let sp = space(3, 2);
        let u = polynomial(2.0, vec![(2, 0, Complex::new(1.0, 0.5)), (1, 1, Complex::new(-2.0, 0.0))]).unwrap();
        let uh = sp.interpolate(|x| (u.u)(x));
        let pen = PenaltyProfile::constant(sp.mesh(), 0.1).unwrap();
        let r = error_report(&u, &uh, &sp, &pen).unwrap();
        for e in [r.err_l2, r.err_h1_semi, r.err_jump, r.err_1h, r.err_energy, r.err_bnd_l2] {
            assert!(e < 1e-10, "{r:?}");
        }
    }

    #[test]
    fn zero_discrete_solution_gives_norm_of_u() {
        let sp = space(4, 2);
        let u = sine_product(1.0).unwrap();
        let pen = PenaltyProfile::zero(sp.mesh());
        let r = error_report(&u, &DofVector::zeros(&sp), &sp, &pen).unwrap();
        assert!((r.err_l2 - 0.5).abs() < 1e-10);
        assert!((r.rel_l2 - 1.0).abs() < 1e-14);
        assert!((r.err_h1_semi - std::f64::consts::PI / 2.0f64.sqrt()).abs() < 1e-10);
    }

    #[test]
    fn report_invariants() {
        let sp = space(4, 1);
        let u = plane_wave(6.0, [0.6, 0.8]).unwrap();
        let uh = sp.interpolate(|x| (u.u)(x));
        let pen = PenaltyProfile::constant(sp.mesh(), 0.3).unwrap();
        let r = error_report(&u, &uh, &sp, &pen).unwrap();
        assert!(r.err_jump > 0.0);
        let rel = |a: f64, b: f64| (a - b).abs() / b;
        assert!(rel(r.err_1h.powi(2), r.err_h1_semi.powi(2) + r.err_jump.powi(2)) < 1e-10);
        assert!(rel(r.err_energy.powi(2), r.err_1h.powi(2) + 6.0 * r.err_bnd_l2.powi(2)) < 1e-10);
        let json = serde_json::to_value(&r).unwrap();
        for key in ["err_L2", "err_H1semi", "err_jump", "err_1h", "err_energy", "err_bnd_L2", "c_err", "rel_energy"] {
            assert!(json.get(key).is_some(), "{key}");
        }
    }

    #[test]
    fn stability_constant_needs_positive_gamma() {
        assert!(c_sta(10.0, 0.1, 2, 0.0).is_none());
        let v: f64 = c_sta(10.0, 0.5, 1, 1.0).unwrap();
        assert!((v - (1.0 + (4.0 + 4.0) / 10.0)).abs() < 1e-14);
        assert!((c_err(4.0, 0.5, 2, 1.0) - 3.0f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn broken_jumps_vanish_for_continuous_functions() {
        let sp = space(3, 2);
        let v = sp.interpolate(|x| Complex::new(x[0] * x[1], 1.0));
        let w = sp.embed(&v).unwrap();
        assert!(broken_value_jumps(&w, &sp).unwrap().iter().all(|j| *j < 1e-14));
        let w = sp.broken().interpolate(|t, _| Complex::new(t as f64, 0.0));
        let j = broken_value_jumps(&w, &sp).unwrap();
        let mesh = sp.mesh();
        for (e, ie) in mesh.interior_edges.iter().enumerate() {
            let want = (ie.owner as f64 - ie.neighbor as f64).abs() * ie.length.sqrt();
            assert!((j[e] - want).abs() < 1e-12);
        }
    }

    #[test]
    fn local_edge_normals_point_outward() {
        let mesh = Mesh::<f64>::unit_square(2).unwrap();
        for (t, el) in mesh.elements.iter().enumerate() {
            let c = el.map([1.0 / 3.0, 1.0 / 3.0]);
            for l in 0..3 {
                let (a, _, n, _) = local_edge(&mesh, t, l);
                assert!((a[0] - c[0]) * n[0] + (a[1] - c[1]) * n[1] > 0.0);
            }
        }
    }
}
