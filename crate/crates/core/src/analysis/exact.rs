//! Exact solutions `u` of `-Laplace u - k^2 u = f`, `d_n u + i k u = g`.

use std::sync::Arc;

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::forms::{BoundaryField, HelmholtzProblem, PenaltyProfile, ScalarField};
use crate::projections::{SmoothField, VectorField};
use crate::scalar::{imag, Point2, Real};

/// `u`, its gradient, and the data `f`, `g` it induces for wave number `k`.
#[derive(Clone)]
pub struct ExactSolution<T> {
    pub k: T,
    pub u: ScalarField<T>,
    pub grad: VectorField<T>,
    pub f: ScalarField<T>,
    pub g: BoundaryField<T>,
}

impl<T: std::fmt::Debug> std::fmt::Debug for ExactSolution<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ExactSolution").field("k", &self.k).finish_non_exhaustive()
    }
}

impl<T: Real> ExactSolution<T> {
    /// Builds `f` and `g` from `u`, its gradient and its Laplacian.
    pub fn from_parts(
        k: T,
        u: ScalarField<T>,
        grad: VectorField<T>,
        laplacian: ScalarField<T>,
    ) -> Result<Self> {
        check_k(k)?;
        let (uf, lf) = (u.clone(), laplacian);
        let f: ScalarField<T> = Arc::new(move |x| -lf(x) - uf(x) * (k * k));
        let (ug, gg) = (u.clone(), grad.clone());
        let g: BoundaryField<T> = Arc::new(move |x, n| {
            let d = gg(x);
            d[0] * n[0] + d[1] * n[1] + imag(k) * ug(x)
        });
        Ok(Self { k, u, grad, f, g })
    }

    pub fn field(&self) -> SmoothField<T> {
        SmoothField { u: self.u.clone(), grad: self.grad.clone() }
    }

    pub fn problem(&self, penalty: PenaltyProfile<T>) -> Result<HelmholtzProblem<T>> {
        HelmholtzProblem::new(self.k, self.f.clone(), self.g.clone(), penalty)
    }

    /// Largest relative defect of the PDE and of the boundary relation at
    /// `points`, with derivatives of `u` taken by sixth-order central
    /// differences. Each point is paired with the normal used for `g`.
    pub fn consistency_defect(&self, points: &[(Point2<T>, Point2<T>)]) -> T {
        let h = T::lit(0.02) / self.k.max(T::one());
        let c2 = [1.0 / 90.0, -3.0 / 20.0, 1.5, -49.0 / 18.0, 1.5, -3.0 / 20.0, 1.0 / 90.0].map(T::lit);
        let c1 = [-1.0 / 60.0, 3.0 / 20.0, -0.75, 0.0, 0.75, -3.0 / 20.0, 1.0 / 60.0].map(T::lit);
        let mut worst = T::zero();
        for &(x, n) in points {
            let mut lap = Complex::new(T::zero(), T::zero());
            let mut grad = [lap, lap];
            for axis in 0..2 {
                for (j, (&a, &b)) in c2.iter().zip(&c1).enumerate() {
                    let mut y = x;
                    y[axis] += h * (T::from_usize_lossy(j) - T::lit(3.0));
                    let uy = (self.u)(y);
                    lap += uy * (a / (h * h));
                    grad[axis] += uy * (b / h);
                }
            }
            let ux = (self.u)(x);
            let scale = T::one() + ux.norm() * self.k * self.k;
            let pde = (-lap - ux * (self.k * self.k) - (self.f)(x)).norm() / scale;
            let bscale = T::one() + ux.norm() * self.k;
            let bnd = (grad[0] * n[0] + grad[1] * n[1] + imag(self.k) * ux - (self.g)(x, n)).norm() / bscale;
            let exact_grad = (self.grad)(x);
            let gdef = ((exact_grad[0] - grad[0]).norm() + (exact_grad[1] - grad[1]).norm()) / bscale;
            worst = worst.max(pde).max(bnd).max(gdef);
        }
        worst
    }
}

fn check_k<T: Real>(k: T) -> Result<()> {
    if !(k > T::zero()) || !k.is_finite() {
        return Err(Error::InvalidParameter(format!("wave number must be positive, got {k}")));
    }
    Ok(())
}

/// Plane wave `u = exp(i k d.x)`: `f = 0`, `g = i k (d.n + 1) u`.
pub fn plane_wave<T: Real>(k: T, d: Point2<T>) -> Result<ExactSolution<T>> {
    check_k(k)?;
    let len = (d[0] * d[0] + d[1] * d[1]).sqrt();
    if !((len - T::one()).abs() <= T::lit(1e-12).max(T::epsilon() * T::lit(16.0))) {
        return Err(Error::InvalidParameter(format!("direction must have unit length, got |d| = {len}")));
    }
    let u: ScalarField<T> = Arc::new(move |x: Point2<T>| {
        let phase = k * (d[0] * x[0] + d[1] * x[1]);
        Complex::new(phase.cos(), phase.sin())
    });
    let uu = u.clone();
    let grad: VectorField<T> = Arc::new(move |x| {
        let v = imag(k) * uu(x);
        [v * d[0], v * d[1]]
    });
    let ug = u.clone();
    let zero = Complex::new(T::zero(), T::zero());
    Ok(ExactSolution {
        k,
        u,
        grad,
        f: Arc::new(move |_| zero),
        g: Arc::new(move |x, n| imag(k) * (d[0] * n[0] + d[1] * n[1] + T::one()) * ug(x)),
    })
}

/// `u = sin(pi x) sin(pi y)`.
pub fn sine_product<T: Real>(k: T) -> Result<ExactSolution<T>> {
    let pi = T::PI();
    let c = |v: T| Complex::new(v, T::zero());
    ExactSolution::from_parts(
        k,
        Arc::new(move |x: Point2<T>| c((pi * x[0]).sin() * (pi * x[1]).sin())),
        Arc::new(move |x: Point2<T>| {
            [c(pi * (pi * x[0]).cos() * (pi * x[1]).sin()), c(pi * (pi * x[0]).sin() * (pi * x[1]).cos())]
        }),
        Arc::new(move |x: Point2<T>| c(-T::lit(2.0) * pi * pi * (pi * x[0]).sin() * (pi * x[1]).sin())),
    )
}

/// `u = sum_j c_j x^a_j y^b_j` for the given terms `(a_j, b_j, c_j)`.
pub fn polynomial<T: Real>(k: T, terms: Vec<(usize, usize, Complex<T>)>) -> Result<ExactSolution<T>> {
    let terms = Arc::new(terms);
    let pow = |v: T, e: usize| if e == 0 { T::one() } else { v.powi(e as i32) };
    let (t0, t1, t2) = (terms.clone(), terms.clone(), terms);
    let zero = Complex::new(T::zero(), T::zero());
    ExactSolution::from_parts(
        k,
        Arc::new(move |x: Point2<T>| t0.iter().fold(zero, |s, &(a, b, c)| s + c * (pow(x[0], a) * pow(x[1], b)))),
        Arc::new(move |x: Point2<T>| {
            t1.iter().fold([zero, zero], |[gx, gy], &(a, b, c)| {
                let dx = if a == 0 { T::zero() } else { T::from_usize_lossy(a) * pow(x[0], a - 1) * pow(x[1], b) };
                let dy = if b == 0 { T::zero() } else { T::from_usize_lossy(b) * pow(x[0], a) * pow(x[1], b - 1) };
                [gx + c * dx, gy + c * dy]
            })
        }),
        Arc::new(move |x: Point2<T>| {
            t2.iter().fold(zero, |s, &(a, b, c)| {
                let dxx = if a < 2 { T::zero() } else { T::from_usize_lossy(a * (a - 1)) * pow(x[0], a - 2) * pow(x[1], b) };
                let dyy = if b < 2 { T::zero() } else { T::from_usize_lossy(b * (b - 1)) * pow(x[0], a) * pow(x[1], b - 2) };
                s + c * (dxx + dyy)
            })
        }),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn samples() -> Vec<(Point2<f64>, Point2<f64>)> {
        vec![
            ([0.3, 0.7], [1.0, 0.0]),
            ([0.0, 0.4], [-1.0, 0.0]),
            ([0.9, 1.0], [0.0, 1.0]),
            ([0.5, 0.0], [0.0, -1.0]),
            ([0.21, 0.83], [0.6, 0.8]),
        ]
    }

    #[test]
    fn plane_wave_data() {
        let k = 7.0;
        let pw = plane_wave(k, [1.0, 0.0]).unwrap();
        let x = [0.3, 0.2];
        assert_eq!((pw.f)(x), Complex::new(0.0, 0.0));
        let u = (pw.u)(x);
        assert!(((pw.g)(x, [1.0, 0.0]) - Complex::new(0.0, 2.0 * k) * u).norm() < 1e-14);
        assert!(((pw.g)(x, [0.0, 1.0]) - Complex::new(0.0, k) * u).norm() < 1e-14);
        assert!((pw.g)(x, [-1.0, 0.0]).norm() < 1e-14);
    }

    #[test]
    fn plane_wave_needs_unit_direction() {
        assert!(plane_wave(1.0, [1.0, 1.0]).is_err());
        assert!(plane_wave(0.0, [1.0, 0.0]).is_err());
        let s = 0.5f64.sqrt();
        assert!(plane_wave(1.0, [s, s]).is_ok());
    }

    #[test]
    fn data_consistent_with_u() {
        let s = 0.5f64.sqrt();
        for k in [1.0, 5.0, 50.0] {
            assert!(plane_wave(k, [s, -s]).unwrap().consistency_defect(&samples()) < 1e-8);
            assert!(sine_product(k).unwrap().consistency_defect(&samples()) < 1e-8);
        }
        let poly = polynomial(3.0, vec![(2, 1, Complex::new(1.0, -2.0)), (0, 3, Complex::new(0.5, 0.0)), (0, 0, Complex::new(1.0, 1.0))]).unwrap();
        assert!(poly.consistency_defect(&samples()) < 1e-8);
    }

    #[test]
    fn inconsistent_data_detected() {
        let mut pw = plane_wave(4.0, [1.0, 0.0]).unwrap();
        pw.f = Arc::new(|_| Complex::new(1.0, 0.0));
        assert!(pw.consistency_defect(&samples()) > 1e-3);
    }
}
