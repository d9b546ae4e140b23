//! Local Rellich identities with the multiplier `alpha = x - x_Omega` (d = 2):
//!
//! ```text
//! 2 ||v||_K^2 + 2 Re (v, alpha.grad v)_K = int_{dK} alpha.n |v|^2
//! 2 Re (grad v, grad(alpha.grad v))_K   = int_{dK} alpha.n |grad v|^2
//! ```
//!
//! with `grad(alpha.grad v) = grad v + H(v) alpha`.

use num_complex::Complex;
use serde::Serialize;

use super::local_edge;
use crate::error::Result;
use crate::fespace::{BrokenSpace, BrokenVector, DofVector, FeSpace};
use crate::forms::lerp;
use crate::geometry::StarCenter;
use crate::quadrature::QuadratureRule;
use crate::scalar::{dot, Point2, Real};

/// Absolute residuals of both identities on one element, with the sum of the
/// magnitudes of their terms as scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RellichResidual<T> {
    pub r1: T,
    pub r2: T,
    pub scale1: T,
    pub scale2: T,
}

impl<T: Real> RellichResidual<T> {
    /// Largest residual relative to its scale (0 when both sides vanish).
    pub fn relative(&self) -> T {
        let rel = |r: T, s: T| if s > T::zero() { r / s } else { r };
        rel(self.r1, self.scale1).max(rel(self.r2, self.scale2))
    }
}

struct Local<T> {
    value: Complex<T>,
    grad: [Complex<T>; 2],
    hess: [Complex<T>; 3],
}

fn eval<T: Real>(space: &BrokenSpace<T>, t: usize, c: &[Complex<T>], xi: Point2<T>) -> Local<T> {
    let el = &space.mesh().elements[t];
    let e = space.basis().eval(xi);
    let hs = space.basis().hessians(xi);
    let zero = Complex::new(T::zero(), T::zero());
    let mut out = Local { value: zero, grad: [zero; 2], hess: [zero; 3] };
    for (i, ci) in c.iter().enumerate() {
        let g = el.push_gradient(e.grads[i]);
        let h = el.push_hessian(hs[i]);
        out.value += *ci * e.values[i];
        out.grad[0] += *ci * g[0];
        out.grad[1] += *ci * g[1];
        for (o, hv) in out.hess.iter_mut().zip(h) {
            *o += *ci * hv;
        }
    }
    out
}

/// Residuals of both identities on every element.
pub fn rellich_residuals<T: Real>(
    v: &BrokenVector<T>,
    space: &BrokenSpace<T>,
    center: &StarCenter<T>,
) -> Result<Vec<RellichResidual<T>>> {
    if v.mesh_id() != space.mesh().id() || v.degree() != space.basis().degree() {
        return Err(crate::error::Error::MeshMismatch);
    }
    let quad = QuadratureRule::for_degree(space.basis().degree())?;
    let mesh = space.mesh();
    let nloc = space.dofs_per_element();
    let two = T::lit(2.0);
    Ok((0..mesh.num_elements())
        .map(|t| {
            let el = &mesh.elements[t];
            let c = v.element(t, nloc);
            let (mut mass, mut cross1, mut grad2, mut cross2) = (T::zero(), T::zero(), T::zero(), T::zero());
            for (&xi, &w) in quad.points.iter().zip(&quad.weights) {
                let x = el.map(xi);
                let a = center.alpha(x);
                let l = eval(space, t, c, xi);
                let wq = w * el.det;
                let adv = l.grad[0] * a[0] + l.grad[1] * a[1];
                mass += wq * l.value.norm_sqr();
                cross1 += wq * (l.value * adv.conj()).re;
                let ha = [l.hess[0] * a[0] + l.hess[1] * a[1], l.hess[1] * a[0] + l.hess[2] * a[1]];
                grad2 += wq * (l.grad[0].norm_sqr() + l.grad[1].norm_sqr());
                cross2 += wq * (l.grad[0] * ha[0].conj() + l.grad[1] * ha[1].conj()).re;
            }
            let (mut flux1, mut flux2) = (T::zero(), T::zero());
            let (mut aflux1, mut aflux2) = (T::zero(), T::zero());
            for le in 0..3 {
                let (pa, pb, n, len) = local_edge(mesh, t, le);
                for (&s, &w) in quad.edge_points.iter().zip(&quad.edge_weights) {
                    let x = lerp(pa, pb, s);
                    let l = eval(space, t, c, el.pullback(x));
                    let an = dot(center.alpha(x), n) * w * len;
                    flux1 += an * l.value.norm_sqr();
                    flux2 += an * (l.grad[0].norm_sqr() + l.grad[1].norm_sqr());
                    aflux1 += an.abs() * l.value.norm_sqr();
                    aflux2 += an.abs() * (l.grad[0].norm_sqr() + l.grad[1].norm_sqr());
                }
            }
            let lhs1 = two * mass + two * cross1;
            let lhs2 = two * grad2 + two * cross2;
            RellichResidual {
                r1: (lhs1 - flux1).abs(),
                r2: (lhs2 - flux2).abs(),
                scale1: two * mass + two * cross1.abs() + aflux1,
                scale2: two * grad2 + two * cross2.abs() + aflux2,
            }
        })
        .collect())
}

/// `(sum_K int_{dK} alpha.n_K |v|^2, int_Gamma alpha.n |v|^2)` for continuous
/// `v`; interior contributions cancel, so the two agree.
pub fn boundary_flux_sums<T: Real>(v: &DofVector<T>, space: &FeSpace<T>, center: &StarCenter<T>) -> Result<(T, T)> {
    space.check_vector(v)?;
    let quad = QuadratureRule::for_degree(space.degree())?;
    let mesh = space.mesh();
    let mut elementwise = T::zero();
    for t in 0..mesh.num_elements() {
        let c = space.gather(v, t);
        let el = &mesh.elements[t];
        for le in 0..3 {
            let (pa, pb, n, len) = local_edge(mesh, t, le);
            for (&s, &w) in quad.edge_points.iter().zip(&quad.edge_weights) {
                let x = lerp(pa, pb, s);
                let (val, _) = space.eval_local(t, &c, el.pullback(x));
                elementwise += dot(center.alpha(x), n) * w * len * val.norm_sqr();
            }
        }
    }
    let mut boundary = T::zero();
    for be in &mesh.boundary_edges {
        let c = space.gather(v, be.element);
        let el = &mesh.elements[be.element];
        let (pa, pb) = (mesh.vertices[be.vertices[0]], mesh.vertices[be.vertices[1]]);
        for (&s, &w) in quad.edge_points.iter().zip(&quad.edge_weights) {
            let x = lerp(pa, pb, s);
            let (val, _) = space.eval_local(be.element, &c, el.pullback(x));
            boundary += dot(center.alpha(x), be.normal) * w * be.length * val.norm_sqr();
        }
    }
    Ok((elementwise, boundary))
}
