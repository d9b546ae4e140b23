//! Elliptic projections `u_h^+-`, the `L^2` projection `Q_h` and Oswald
//! averaging `I_Os`.
//!
//! The elliptic projections solve
//!
//! ```text
//! a_h^+-(u_h, v_h) +- i k <u_h, v_h> = (grad u, grad v_h) +- i k <u, v_h>     for all v_h in V_h
//! ```
//!
//! with `a_h^+-(u, v) = (grad u, grad v) +- i sum_e gamma_e h_e / p^2 <[d_n u], [d_n v]>_e`.
//! For smooth `u` the gradient jumps vanish, so only the volume and boundary
//! terms of the right-hand side are formed.

use std::sync::Arc;

use num_complex::Complex;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fespace::{BrokenVector, DofVector, FeSpace};
use crate::forms::{
    assemble_boundary_mass, assemble_jump_with, assemble_stiffness_mass, lerp, PenaltyProfile, ScalarField,
};
use crate::linalg;
use crate::quadrature::QuadratureRule;
use crate::scalar::{imag, re, Point2, Real};
use crate::sparse::{complex_combination, CsrMatrix};

pub type VectorField<T> = Arc<dyn Fn(Point2<T>) -> [Complex<T>; 2] + Send + Sync>;

/// A function together with its gradient.
#[derive(Clone)]
pub struct SmoothField<T> {
    pub u: ScalarField<T>,
    pub grad: VectorField<T>,
}

impl<T> std::fmt::Debug for SmoothField<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("SmoothField")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn value<T: Real>(self) -> T {
        match self {
            Sign::Plus => T::one(),
            Sign::Minus => -T::one(),
        }
    }
}

/// Left-hand side `S +- i Jr +- i k B` (plus the real penalty part, if any).
pub fn elliptic_matrix<T: Real>(
    space: &FeSpace<T>,
    penalty: &PenaltyProfile<T>,
    k: T,
    sign: Sign,
    quad: &QuadratureRule<T>,
) -> Result<CsrMatrix<Complex<T>>> {
    if !(k > T::zero()) || !k.is_finite() {
        return Err(Error::InvalidParameter(format!("wave number must be positive, got {k}")));
    }
    let s = sign.value::<T>();
    let (stiff, _) = assemble_stiffness_mass(space, quad)?;
    let bmass = assemble_boundary_mass(space, quad)?;
    let jump = assemble_jump_with(space, penalty, quad)?;
    let mut parts = vec![(&stiff, re(T::one())), (&jump, imag(s)), (&bmass, imag(s * k))];
    let jre = match penalty.real_part() {
        Some(rho) => Some(assemble_jump_with(space, &PenaltyProfile::from_values(space.mesh(), rho.to_vec())?, quad)?),
        None => None,
    };
    if let Some(j) = &jre {
        parts.push((j, re(T::one())));
    }
    Ok(complex_combination(&parts))
}

/// Elliptic projection of a smooth field.
pub fn elliptic_projection<T: Real>(
    u: &SmoothField<T>,
    space: &FeSpace<T>,
    penalty: &PenaltyProfile<T>,
    k: T,
    sign: Sign,
) -> Result<DofVector<T>> {
    let quad = QuadratureRule::for_degree(space.degree())?;
    elliptic_projection_with(u, space, penalty, k, sign, &quad)
}

pub fn elliptic_projection_with<T: Real>(
    u: &SmoothField<T>,
    space: &FeSpace<T>,
    penalty: &PenaltyProfile<T>,
    k: T,
    sign: Sign,
    quad: &QuadratureRule<T>,
) -> Result<DofVector<T>> {
    let a = elliptic_matrix(space, penalty, k, sign, quad)?;
    let b = elliptic_rhs(u, space, k, sign, quad);
    let (x, _) = linalg::solve_matrix(&a, &b)?;
    DofVector::from_values(space, x)
}

/// Elliptic projection of a `V_h` function; the right-hand side carries the
/// full form, jump terms included.
pub fn elliptic_projection_discrete<T: Real>(
    v: &DofVector<T>,
    space: &FeSpace<T>,
    penalty: &PenaltyProfile<T>,
    k: T,
    sign: Sign,
) -> Result<DofVector<T>> {
    space.check_vector(v)?;
    let quad = QuadratureRule::for_degree(space.degree())?;
    let a = elliptic_matrix(space, penalty, k, sign, &quad)?;
    let b = a.mul_vec(&v.values);
    let (x, _) = linalg::solve_matrix(&a, &b)?;
    DofVector::from_values(space, x)
}

/// `(grad u, grad phi_i) +- i k <u, phi_i>`.
pub fn elliptic_rhs<T: Real>(
    u: &SmoothField<T>,
    space: &FeSpace<T>,
    k: T,
    sign: Sign,
    quad: &QuadratureRule<T>,
) -> Vec<Complex<T>> {
    let mesh = space.mesh();
    let nloc = space.dofs_per_element();
    let zero = Complex::new(T::zero(), T::zero());
    let ref_grads: Vec<Vec<Point2<T>>> = quad.points.iter().map(|&xi| space.basis().eval(xi).grads).collect();
    let locals: Vec<Vec<Complex<T>>> = (0..mesh.num_elements())
        .into_par_iter()
        .map(|t| {
            let el = &mesh.elements[t];
            let mut loc = vec![zero; nloc];
            for (q, (&xi, &w)) in quad.points.iter().zip(&quad.weights).enumerate() {
                let gu = (u.grad)(el.map(xi));
                let wq = w * el.det;
                for (l, &gr) in loc.iter_mut().zip(&ref_grads[q]) {
                    let g = el.push_gradient(gr);
                    *l += (gu[0] * g[0] + gu[1] * g[1]) * wq;
                }
            }
            loc
        })
        .collect();
    let mut b = vec![zero; space.dof_count()];
    for (t, loc) in locals.iter().enumerate() {
        for (&d, &v) in space.element_dofs(t).iter().zip(loc) {
            b[d] += v;
        }
    }
    let coef = imag(sign.value::<T>() * k);
    for be in &mesh.boundary_edges {
        let el = &mesh.elements[be.element];
        let (pa, pb) = (mesh.vertices[be.vertices[0]], mesh.vertices[be.vertices[1]]);
        let dofs = space.element_dofs(be.element);
        for (&s, &w) in quad.edge_points.iter().zip(&quad.edge_weights) {
            let x = lerp(pa, pb, s);
            let ux = coef * (u.u)(x) * (w * be.length);
            let vals = space.basis().eval(el.pullback(x)).values;
            for (&d, &phi) in dofs.iter().zip(&vals) {
                b[d] += ux * phi;
            }
        }
    }
    b
}

/// `L^2(Omega)` projection of a broken function onto `V_h`.
pub fn l2_project<T: Real>(w: &BrokenVector<T>, space: &FeSpace<T>) -> Result<DofVector<T>> {
    space.check_broken(w)?;
    let quad = QuadratureRule::for_degree(space.degree())?;
    let (_, mass) = assemble_stiffness_mass(space, &quad)?;
    let nloc = space.dofs_per_element();
    let local_mass = reference_mass(space, &quad);
    let zero = Complex::new(T::zero(), T::zero());
    let mut r = vec![zero; space.dof_count()];
    for (t, el) in space.mesh().elements.iter().enumerate() {
        let wt = w.element(t, nloc);
        for (i, &d) in space.element_dofs(t).iter().enumerate() {
            let mut s = zero;
            for (j, &wj) in wt.iter().enumerate() {
                s += wj * (local_mass[i * nloc + j] * el.det);
            }
            r[d] += s;
        }
    }
    if r.iter().all(|z| *z == zero) {
        return Ok(DofVector::zeros(space));
    }
    let m = complex_combination(&[(&mass, re(T::one()))]);
    let (x, _) = linalg::solve_matrix(&m, &r)?;
    DofVector::from_values(space, x)
}

/// Reference-element mass matrix, row-major.
fn reference_mass<T: Real>(space: &FeSpace<T>, quad: &QuadratureRule<T>) -> Vec<T> {
    let nloc = space.dofs_per_element();
    let mut m = vec![T::zero(); nloc * nloc];
    for (&xi, &w) in quad.points.iter().zip(&quad.weights) {
        let v = space.basis().eval(xi).values;
        for i in 0..nloc {
            for j in 0..nloc {
                m[i * nloc + j] += w * v[i] * v[j];
            }
        }
    }
    m
}

/// Oswald averaging: every global dof receives the arithmetic mean of the
/// local nodal values of `w` over the elements sharing it.
pub fn oswald<T: Real>(w: &BrokenVector<T>, space: &FeSpace<T>) -> Result<DofVector<T>> {
    space.check_broken(w)?;
    let nloc = space.dofs_per_element();
    let mut sum = vec![Complex::new(T::zero(), T::zero()); space.dof_count()];
    let mut count = vec![0usize; space.dof_count()];
    for t in 0..space.mesh().num_elements() {
        for (&d, &v) in space.element_dofs(t).iter().zip(w.element(t, nloc)) {
            sum[d] += v;
            count[d] += 1;
        }
    }
    let values = sum.into_iter().zip(count).map(|(s, c)| s / T::from_usize_lossy(c.max(1))).collect();
    DofVector::from_values(space, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Mesh;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(x: f64) -> Complex<f64> {
        Complex::new(x, 0.0)
    }

    fn space(n: usize, p: usize) -> FeSpace<f64> {
        FeSpace::new(Arc::new(Mesh::unit_square(n).unwrap()), p).unwrap()
    }

    fn max_diff(a: &[Complex<f64>], b: &[Complex<f64>]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
    }

    #[test]
    fn discrete_input_reproduced() {
        let sp = space(4, 3);
        let pen = PenaltyProfile::constant(sp.mesh(), 0.2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let v: Vec<_> = (0..sp.dof_count()).map(|_| Complex::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
        let v = DofVector::from_values(&sp, v).unwrap();
        for sign in [Sign::Plus, Sign::Minus] {
            let u = elliptic_projection_discrete(&v, &sp, &pen, 7.0, sign).unwrap();
            assert!(max_diff(&u.values, &v.values) < 1e-10);
        }
    }

    #[test]
    fn quadratic_reproduced() {
        let sp = space(3, 2);
        let pen = PenaltyProfile::constant(sp.mesh(), 0.5).unwrap();
        let field = SmoothField::<f64> {
            u: Arc::new(|x: Point2<f64>| c(x[0] * x[0])),
            grad: Arc::new(|x: Point2<f64>| [c(2.0 * x[0]), c(0.0)]),
        };
        for sign in [Sign::Plus, Sign::Minus] {
            let u = elliptic_projection(&field, &sp, &pen, 3.0, sign).unwrap();
            let want = sp.interpolate(|x| c(x[0] * x[0]));
            assert!(max_diff(&u.values, &want.values) < 1e-10);
        }
    }

    #[test]
    fn nonpositive_k_rejected() {
        let sp = space(2, 1);
        let pen = PenaltyProfile::zero(sp.mesh());
        let field = SmoothField::<f64> { u: Arc::new(|_| c(1.0)), grad: Arc::new(|_| [c(0.0), c(0.0)]) };
        assert!(elliptic_projection(&field, &sp, &pen, 0.0, Sign::Plus).is_err());
    }

    #[test]
    fn oswald_two_elements() {
        let sp = space(1, 1);
        let broken = sp.broken();
        let w = broken.interpolate(|t, _| c(if t == 0 { 1.0 } else { 0.0 }));
        let o = oswald(&w, &sp).unwrap();
        // element 0 = (v0, v1, v3), element 1 = (v0, v3, v2)
        let want = [c(0.5), c(1.0), c(0.0), c(0.5)];
        assert!(max_diff(&o.values, &want) < 1e-15);
    }

    #[test]
    fn continuous_inputs_fixed() {
        let sp = space(3, 3);
        let v = sp.interpolate(|x| Complex::new((3.0 * x[0]).sin(), x[1] * x[1]));
        let w = sp.embed(&v).unwrap();
        assert!(max_diff(&oswald(&w, &sp).unwrap().values, &v.values) < 1e-12);
        assert!(max_diff(&l2_project(&w, &sp).unwrap().values, &v.values) < 1e-12);
        let zero = sp.broken().interpolate(|_, _| c(0.0));
        assert!(l2_project(&zero, &sp).unwrap().values.iter().all(|z| *z == c(0.0)));
    }

    #[test]
    fn l2_projection_matches_normal_equations() {
        // p = 1 on two triangles of area 1/2: local mass area/12 * (1 + delta_ij)
        let sp = space(1, 1);
        let w = sp.broken().interpolate(|t, _| c(if t == 0 { 1.0 } else { 0.0 }));
        let q = l2_project(&w, &sp).unwrap();
        let mut g = [[0.0f64; 4]; 4];
        let mut r = [0.0f64; 4];
        for (t, tri) in [[0usize, 1, 3], [0, 3, 2]].iter().enumerate() {
            for &i in tri {
                for &j in tri {
                    g[i][j] += 0.5 / 12.0 * if i == j { 2.0 } else { 1.0 };
                }
                if t == 0 {
                    r[i] += 0.5 / 3.0;
                }
            }
        }
        // dense Gaussian elimination
        for col in 0..4 {
            for row in col + 1..4 {
                let f = g[row][col] / g[col][col];
                for k in col..4 {
                    g[row][k] -= f * g[col][k];
                }
                r[row] -= f * r[col];
            }
        }
        let mut x = [0.0; 4];
        for row in (0..4).rev() {
            let s: f64 = (row + 1..4).map(|k| g[row][k] * x[k]).sum();
            x[row] = (r[row] - s) / g[row][row];
        }
        for (a, b) in q.values.iter().zip(&x) {
            assert!((a.re - b).abs() < 1e-13 && a.im.abs() < 1e-15);
        }
    }

    #[test]
    fn mismatched_broken_vector_rejected() {
        let sp = space(2, 2);
        let other = space(2, 2);
        let w = other.broken().interpolate(|_, _| c(1.0));
        assert!(matches!(oswald(&w, &sp), Err(Error::MeshMismatch)));
        assert!(matches!(l2_project(&w, &sp), Err(Error::MeshMismatch)));
    }
}
