//! Gauss rules on the reference edge `[0, 1]` and the reference triangle.
//!
//! Triangle rules are collapsed (Duffy) tensor products of Gauss-Legendre
//! rules, which gives positive weights and arbitrary exactness.

use crate::error::{Error, Result};
use crate::scalar::{Point2, Real};

/// Largest exactness degree the rule builder accepts.
pub const MAX_EXACTNESS: usize = 60;

#[derive(Debug, Clone)]
pub struct QuadratureRule<T> {
    pub exactness: usize,
    /// Points on the reference triangle (0,0), (1,0), (0,1).
    pub points: Vec<Point2<T>>,
    pub weights: Vec<T>,
    /// Points on the reference edge `[0, 1]`.
    pub edge_points: Vec<T>,
    pub edge_weights: Vec<T>,
}

impl<T: Real> QuadratureRule<T> {
    /// Rule exact for bivariate polynomials of total degree `<= degree` on the
    /// triangle and univariate polynomials of degree `<= degree` on the edge.
    pub fn new(degree: usize) -> Result<Self> {
        if degree > MAX_EXACTNESS {
            return Err(Error::QuadratureUnavailable { requested: degree, max: MAX_EXACTNESS });
        }
        let (edge_x, edge_w) = gauss_legendre_unit(degree / 2 + 1);
        // the collapsed direction carries an extra (1 - v) factor
        let m = (degree + 3) / 2;
        let (gx, gw) = gauss_legendre_unit(m);
        let mut points = Vec::with_capacity(m * m);
        let mut weights = Vec::with_capacity(m * m);
        for (&v, &wv) in gx.iter().zip(&gw) {
            for (&u, &wu) in gx.iter().zip(&gw) {
                points.push([T::lit(u * (1.0 - v)), T::lit(v)]);
                weights.push(T::lit(wu * wv * (1.0 - v)));
            }
        }
        Ok(Self {
            exactness: degree,
            points,
            weights,
            edge_points: edge_x.into_iter().map(T::lit).collect(),
            edge_weights: edge_w.into_iter().map(T::lit).collect(),
        })
    }

    /// Default exactness `2p + 2` for degree-`p` elements.
    pub fn for_degree(p: usize) -> Result<Self> {
        Self::new(2 * p + 2)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// `m`-point Gauss-Legendre nodes and weights mapped to `[0, 1]`, computed in
/// double precision by Newton iteration on `P_m`.
pub fn gauss_legendre_unit(m: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; m];
    let mut w = vec![0.0; m];
    let mf = m as f64;
    for i in 0..m.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (mf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(m, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(m, z);
        if d != 0.0 {
            dp = d;
        }
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        // map [-1, 1] -> [0, 1]
        x[i] = 0.5 * (1.0 - z);
        x[m - 1 - i] = 0.5 * (1.0 + z);
        w[i] = 0.5 * wi;
        w[m - 1 - i] = 0.5 * wi;
    }
    (x, w)
}

fn legendre_with_derivative(m: usize, z: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, z);
    if m == 0 {
        return (1.0, 0.0);
    }
    for j in 2..=m {
        let jf = j as f64;
        let p2 = ((2.0 * jf - 1.0) * z * p1 - (jf - 1.0) * p0) / jf;
        p0 = p1;
        p1 = p2;
    }
    let d = m as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn factorial(n: usize) -> f64 {
        (1..=n).map(|i| i as f64).product()
    }

    /// Closed form of the reference-triangle monomial integral: a! b! / (a+b+2)!.
    fn monomial_exact(a: usize, b: usize) -> f64 {
        factorial(a) * factorial(b) / factorial(a + b + 2)
    }

    #[test]
    fn reference_values() {
        let q = QuadratureRule::<f64>::new(4).unwrap();
        let area: f64 = q.weights.iter().sum();
        assert!((area - 0.5).abs() < 1e-14);
        let xy: f64 = q.points.iter().zip(&q.weights).map(|(p, w)| p[0] * p[1] * w).sum();
        assert!((xy - 1.0 / 24.0).abs() < 1e-14);
        let x2: f64 = q.edge_points.iter().zip(&q.edge_weights).map(|(x, w)| x * x * w).sum();
        assert!((x2 - 1.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn exact_on_all_monomials() {
        for d in 0..=20 {
            let q = QuadratureRule::<f64>::new(d).unwrap();
            assert!(q.weights.iter().all(|&w| w > 0.0));
            assert!(q.edge_weights.iter().all(|&w| w > 0.0));
            for a in 0..=d {
                for b in 0..=d - a {
                    let s: f64 = q
                        .points
                        .iter()
                        .zip(&q.weights)
                        .map(|(p, w)| p[0].powi(a as i32) * p[1].powi(b as i32) * w)
                        .sum();
                    let e = monomial_exact(a, b);
                    assert!((s - e).abs() <= 1e-13 * e.max(1e-3), "d={d} a={a} b={b}: {s} vs {e}");
                }
                let s: f64 =
                    q.edge_points.iter().zip(&q.edge_weights).map(|(x, w)| x.powi(a as i32) * w).sum();
                assert!((s - 1.0 / (a as f64 + 1.0)).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn too_high_degree_rejected() {
        assert!(matches!(
            QuadratureRule::<f64>::new(MAX_EXACTNESS + 1),
            Err(Error::QuadratureUnavailable { .. })
        ));
    }

    #[test]
    fn single_precision_rule() {
        let q = QuadratureRule::<f32>::new(6).unwrap();
        let area: f32 = q.weights.iter().sum();
        assert!((area - 0.5).abs() < 1e-6);
    }
}
