//! Discrete wavenumber of FEM and CIP-FEM on a uniform 1D grid.
//!
//! Scaled by the element length `h`, one element contributes `K - t^2 M`
//! (`t = kh`, reference stiffness and mass on `[0, 1]`) and every node adds
//! `(c / p^2) [u'][v']` with reference derivatives, where `c = i gamma` (or
//! `rho + i gamma` with the complex switch). A Bloch wave `u_{j+1} = e^{i theta} u_j`
//! solves the discrete equations iff `theta = omega h` is a root of the
//! dispersion relation.
//!
//! Without penalty the element-interior unknowns are condensed, leaving the
//! two-by-two vertex matrix `[[a, b], [b, a]]` and `cos theta = -a / b`. The
//! root is evaluated as `theta = 2 asin(sqrt((a + b) / (2 b)))` with `a + b`
//! formed from the constant row sums, which avoids the cancellation in
//! `1 + a / b`. With a penalty the jump couples neighboring elements; `theta` then solves
//! `det T(e^{i theta}) = 0` for the `p x p` Bloch symbol `T(z) = sum_m A_m z^m`
//! and is tracked by Newton's method while the penalty is switched on.

use num_complex::Complex;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::quadrature::gauss_legendre_unit;
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DispersionResult<T> {
    pub p: usize,
    pub kh: T,
    /// Imaginary part of the penalty.
    pub gamma: T,
    /// Real part of the penalty (0 unless the complex switch is used).
    pub rho: T,
    /// `Re(omega h)`.
    pub omega_h: T,
    /// `-Im(omega h)` on the branch with `Re(omega h) >= 0`: decay per
    /// element of the outgoing wave `exp(-i omega x)`.
    pub attenuation: T,
    /// `|kh - Re(omega h)| = h |k - omega|`.
    pub phase_error: T,
}

impl<T: Real> DispersionResult<T> {
    /// `|k - omega|` for the wave number `k` (so `h = kh / k`).
    pub fn wavenumber_error(&self, k: T) -> T {
        self.phase_error * k / self.kh
    }
}

/// Reference element data on `[0, 1]`: nodes 0 and 1 first, then the
/// interior nodes `i / p`.
struct Reference<T> {
    n: usize,
    stiffness: Vec<Vec<T>>,
    mass: Vec<Vec<T>>,
    /// Basis derivatives at the left and right end points.
    d_left: Vec<T>,
    d_right: Vec<T>,
}

fn nodes<T: Real>(p: usize) -> Vec<T> {
    let pf = T::from_usize_lossy(p);
    let mut x = vec![T::zero(), T::one()];
    x.extend((1..p).map(|i| T::from_usize_lossy(i) / pf));
    x
}

/// Values and derivatives of all Lagrange basis functions at `x`.
fn lagrange<T: Real>(nodes: &[T], x: T) -> (Vec<T>, Vec<T>) {
    let n = nodes.len();
    let mut v = vec![T::one(); n];
    let mut d = vec![T::zero(); n];
    for i in 0..n {
        for j in (0..n).filter(|&j| j != i) {
            let denom = nodes[i] - nodes[j];
            // product rule: d(prod) = sum over the factor being differentiated
            d[i] = d[i] * (x - nodes[j]) / denom + v[i] / denom;
            v[i] = v[i] * (x - nodes[j]) / denom;
        }
    }
    (v, d)
}

impl<T: Real> Reference<T> {
    fn new(p: usize) -> Self {
        let xs = nodes::<T>(p);
        let n = p + 1;
        let (qx, qw) = gauss_legendre_unit(p + 1);
        let mut stiffness = vec![vec![T::zero(); n]; n];
        let mut mass = vec![vec![T::zero(); n]; n];
        for (&x, &w) in qx.iter().zip(&qw) {
            let (v, d) = lagrange(&xs, T::lit(x));
            let w = T::lit(w);
            for i in 0..n {
                for j in 0..n {
                    stiffness[i][j] += w * d[i] * d[j];
                    mass[i][j] += w * v[i] * v[j];
                }
            }
        }
        let d_left = lagrange(&xs, T::zero()).1;
        let d_right = lagrange(&xs, T::one()).1;
        Self { n, stiffness, mass, d_left, d_right }
    }
}

fn check_args<T: Real>(p: usize, kh: T) -> Result<()> {
    if p < 1 {
        return Err(Error::InvalidParameter("polynomial degree must be >= 1".into()));
    }
    if !(kh > T::zero()) || !kh.is_finite() {
        return Err(Error::InvalidParameter(format!("kh must be positive, got {kh}")));
    }
    Ok(())
}

/// Principal root `theta in [0, pi]` of the unpenalized relation, or `None`
/// in a stop band.
fn principal_root<T: Real>(r: &Reference<T>, t: T) -> Option<T> {
    let n = r.n;
    let t2 = t * t;
    let a = |i: usize, j: usize| r.stiffness[i][j] - t2 * r.mass[i][j];
    let ni = n - 2;
    // A_II^{-1} [A_I1 | r_I]
    let mut sys: Vec<Vec<T>> = (0..ni)
        .map(|i| {
            let mut row: Vec<T> = (0..ni).map(|j| a(2 + i, 2 + j)).collect();
            let rsum: T = (0..n).map(|j| r.mass[2 + i][j]).sum::<T>() * (-t2);
            row.extend([a(2 + i, 1), rsum]);
            row
        })
        .collect();
    solve_dense(&mut sys, ni)?;
    let col = |c: usize| -> Vec<T> { sys.iter().map(|row| row[ni + c]).collect() };
    let (x1, xr) = (col(0), col(1));
    let dot_v0 = |x: &[T]| -> T { (0..ni).map(|i| a(0, 2 + i) * x[i]).sum() };
    let b = a(0, 1) - dot_v0(&x1);
    let rv: T = (0..n).map(|j| r.mass[0][j]).sum::<T>() * (-t2);
    let a_plus_b = rv - dot_v0(&xr);
    let arg = a_plus_b / (T::lit(2.0) * b);
    if !(arg >= T::zero() && arg <= T::one()) {
        return None;
    }
    Some(T::lit(2.0) * arg.sqrt().asin())
}

/// Gaussian elimination with partial pivoting on `[A | B]` (A is `m x m`);
/// leaves the solution in the `B` columns. `None` if `A` is singular.
fn solve_dense<T: Real>(rows: &mut [Vec<T>], m: usize) -> Option<()> {
    let width = rows.first().map_or(0, |r| r.len());
    for c in 0..m {
        let piv = (c..m).max_by(|&i, &j| rows[i][c].abs().partial_cmp(&rows[j][c].abs()).unwrap())?;
        if rows[piv][c] == T::zero() {
            return None;
        }
        rows.swap(c, piv);
        for r in 0..m {
            if r != c {
                let f = rows[r][c] / rows[c][c];
                if f != T::zero() {
                    for k in c..width {
                        let v = rows[c][k];
                        rows[r][k] -= f * v;
                    }
                }
            }
        }
    }
    for (c, row) in rows.iter_mut().enumerate().take(m) {
        let d = row[c];
        for v in row.iter_mut().skip(m) {
            *v /= d;
        }
    }
    Some(())
}

/// Unwraps `theta` onto the branch `2 pi m +- theta` nearest to `previous`.
fn nearest_branch<T: Real>(theta: T, previous: T) -> T {
    let two_pi = T::TAU();
    let m = (previous / two_pi).round();
    let mut best = theta;
    let mut dist = T::infinity();
    for dm in [-1.0, 0.0, 1.0] {
        for s in [T::one(), -T::one()] {
            let cand = two_pi * (m + T::lit(dm)) + s * theta;
            if (cand - previous).abs() < dist {
                dist = (cand - previous).abs();
                best = cand;
            }
        }
    }
    best
}

/// Real root continued from `theta ~ kh` at small `kh`. Across stop bands
/// the branch is predicted with unit slope from the last propagating step.
fn continued_root<T: Real>(r: &Reference<T>, kh: T) -> Result<T> {
    let step = T::lit(0.05);
    let (mut theta, mut t_last) = (T::zero(), T::zero());
    let mut t = T::zero();
    while t + step < kh {
        t += step;
        if let Some(th) = principal_root(r, t) {
            theta = nearest_branch(th, theta + (t - t_last));
            t_last = t;
        }
    }
    match principal_root(r, kh) {
        Some(th) => Ok(nearest_branch(th, theta + (kh - t_last))),
        None => Err(Error::Evanescent { kh: kh.as_f64() }),
    }
}

/// Discrete wavenumber of the scheme with penalty `i gamma`.
pub fn discrete_wavenumber<T: Real>(p: usize, kh: T, gamma: T) -> Result<DispersionResult<T>> {
    discrete_wavenumber_complex(p, kh, Complex::new(T::zero(), gamma))
}

/// Discrete wavenumber with the general penalty `c = rho + i gamma`.
pub fn discrete_wavenumber_complex<T: Real>(p: usize, kh: T, c: Complex<T>) -> Result<DispersionResult<T>> {
    check_args(p, kh)?;
    if !(c.im >= T::zero()) || !c.re.is_finite() || !c.im.is_finite() {
        return Err(Error::InvalidParameter(format!("penalty must be finite with nonnegative imaginary part, got {c}")));
    }
    let r = Reference::<T>::new(p);
    let theta0 = continued_root(&r, kh)?;
    let theta = if c == Complex::new(T::zero(), T::zero()) {
        Complex::new(theta0, T::zero())
    } else {
        penalized_root(&r, p, kh, c, theta0)?
    };
    Ok(DispersionResult {
        p,
        kh,
        gamma: c.im,
        rho: c.re,
        omega_h: theta.re,
        attenuation: T::zero() - theta.im,
        phase_error: (kh - theta.re).abs(),
    })
}

/// Blocks `A_m`, `m = -2..=2`, of the Bloch symbol; cell unknowns are the
/// left vertex followed by the element-interior nodes.
fn bloch_blocks<T: Real>(r: &Reference<T>, p: usize, t: T, c: Complex<T>) -> Vec<Vec<Vec<Complex<T>>>> {
    let n = r.n;
    let zero = Complex::new(T::zero(), T::zero());
    let mut blocks = vec![vec![vec![zero; p]; p]; 5];
    // (cell offset, index within cell) of each local node of element 0
    let slot = |i: usize| -> (i32, usize) {
        match i {
            0 => (0, 0),
            1 => (1, 0),
            _ => (0, i - 1),
        }
    };
    let t2 = t * t;
    for i in 0..n {
        for j in 0..n {
            let (ci, ii) = slot(i);
            let (cj, jj) = slot(j);
            let v = r.stiffness[i][j] - t2 * r.mass[i][j];
            blocks[(cj - ci + 2) as usize][ii][jj] += Complex::new(v, T::zero());
        }
    }
    // jump at node 0: derivative from element -1 at its right end minus
    // derivative from element 0 at its left end
    let mut jump: Vec<((i32, usize), T)> = Vec::new();
    for i in 0..n {
        let (ci, ii) = slot(i);
        jump.push(((ci - 1, ii), r.d_right[i]));
        jump.push(((ci, ii), -r.d_left[i]));
    }
    let scale = c / T::from_usize_lossy(p * p);
    for &((ca, ia), va) in &jump {
        for &((cb, ib), vb) in &jump {
            blocks[(cb - ca + 2) as usize][ia][ib] += scale * (va * vb);
        }
    }
    blocks
}

fn symbol_det<T: Real>(blocks: &[Vec<Vec<Complex<T>>>], theta: Complex<T>) -> Complex<T> {
    let p = blocks[0].len();
    let i = Complex::new(T::zero(), T::one());
    let z: Vec<Complex<T>> = (-2i32..=2).map(|m| (i * theta * T::from_i32(m).unwrap()).exp()).collect();
    let mut a: Vec<Vec<Complex<T>>> =
        (0..p).map(|r| (0..p).map(|s| (0..5).map(|m| blocks[m][r][s] * z[m]).sum()).collect()).collect();
    complex_det(&mut a)
}

fn complex_det<T: Real>(a: &mut [Vec<Complex<T>>]) -> Complex<T> {
    let n = a.len();
    let mut det = Complex::new(T::one(), T::zero());
    for c in 0..n {
        let piv = (c..n).max_by(|&i, &j| a[i][c].norm().partial_cmp(&a[j][c].norm()).unwrap()).unwrap();
        if a[piv][c].norm() == T::zero() {
            return Complex::new(T::zero(), T::zero());
        }
        if piv != c {
            a.swap(c, piv);
            det = -det;
        }
        det *= a[c][c];
        for r in c + 1..n {
            let f = a[r][c] / a[c][c];
            for k in c..n {
                let v = a[c][k];
                a[r][k] -= f * v;
            }
        }
    }
    det
}

/// Newton iteration on `det T(e^{i theta})`, continued in the penalty from 0
/// to `c` starting at the unpenalized root `theta0`.
fn penalized_root<T: Real>(r: &Reference<T>, p: usize, kh: T, c: Complex<T>, theta0: T) -> Result<Complex<T>> {
    const STEPS: usize = 32;
    let mut theta = Complex::new(theta0, T::zero());
    for s in 1..=STEPS {
        let cs = c * (T::from_usize_lossy(s) / T::from_usize_lossy(STEPS));
        let blocks = bloch_blocks(r, p, kh, cs);
        let f = |th: Complex<T>| symbol_det(&blocks, th);
        let mut converged = false;
        for _ in 0..60 {
            let fx = f(theta);
            let delta = T::lit(1e-6) * (T::one() + theta.norm());
            let dx = Complex::new(delta, T::zero());
            let df = (f(theta + dx) - f(theta - dx)) / (dx * T::lit(2.0));
            if df.norm() == T::zero() || !df.norm().is_finite() {
                break;
            }
            let step = fx / df;
            theta -= step;
            if step.norm() <= T::lit(1e-13) * (T::one() + theta.norm()) {
                converged = true;
                break;
            }
        }
        if !converged && s == STEPS {
            return Err(Error::NoConvergence(format!("dispersion root for p = {p}, kh = {kh}, c = {c}")));
        }
    }
    // the relation is even in theta; report the branch with Re theta >= 0
    if theta.re < T::zero() {
        theta = -theta;
    }
    Ok(theta)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn closed_form_p1(kh: f64) -> f64 {
        ((1.0 - kh * kh / 3.0) / (1.0 + kh * kh / 6.0)).acos()
    }

    #[test]
    fn linear_closed_form() {
        for kh in [0.05, 0.1, 0.3, 0.7, 1.2, 2.0] {
            let r = discrete_wavenumber(1, kh, 0.0).unwrap();
            assert!((r.omega_h - closed_form_p1(kh)).abs() < 1e-10, "kh = {kh}");
        }
    }

    #[test]
    fn linear_elements_stop_band() {
        // cos theta < -1 once kh^2 > 12
        assert!(matches!(discrete_wavenumber(1, 3.6f64, 0.0), Err(Error::Evanescent { .. })));
        assert!(discrete_wavenumber(1, 3.4f64, 0.0).is_ok());
    }

    #[test]
    fn consistency_as_kh_vanishes() {
        for p in 1..=4 {
            let r = discrete_wavenumber(p, 1e-3f64, 0.0).unwrap();
            assert!((r.omega_h / 1e-3 - 1.0).abs() < 1e-7, "p = {p}");
        }
    }

    #[test]
    fn condensed_and_bloch_roots_agree() {
        // the penalized path at a tiny penalty must land on the condensed root
        for p in 1..=3 {
            let a = discrete_wavenumber(p, 0.8f64, 0.0).unwrap();
            let b = discrete_wavenumber_complex(p, 0.8f64, Complex::new(1e-12, 0.0)).unwrap();
            assert!((a.omega_h - b.omega_h).abs() < 1e-9, "p = {p}");
        }
    }

    #[test]
    fn real_penalty_minus_one_twelfth_is_fourth_order_for_p1() {
        let e0 = |kh: f64| discrete_wavenumber(1, kh, 0.0).unwrap().phase_error;
        let e1 = |kh: f64| discrete_wavenumber_complex(1, kh, Complex::new(-1.0 / 12.0, 0.0)).unwrap().phase_error;
        let slope = |e: &dyn Fn(f64) -> f64| (e(0.2) / e(0.1)).ln() / 2f64.ln();
        assert!((slope(&e0) - 3.0).abs() < 0.05);
        assert!((slope(&e1) - 5.0).abs() < 0.1);
    }

    #[test]
    fn imaginary_penalty_attenuates() {
        let r = discrete_wavenumber(2, 0.5f64, 0.1).unwrap();
        assert!(r.attenuation > 0.0);
        assert!(discrete_wavenumber(2, 0.5f64, -0.1).is_err());
    }

    #[test]
    fn large_kh_follows_branch() {
        // p = 3 resolves kh = 4 with a small relative phase error
        let r = discrete_wavenumber(3, 4.0f64, 0.0).unwrap();
        assert!(r.omega_h > 3.5 && r.phase_error / 4.0 < 0.05, "{r:?}");
    }

    #[test]
    fn rejects_bad_input() {
        assert!(discrete_wavenumber(0, 0.5f64, 0.0).is_err());
        assert!(discrete_wavenumber(1, 0.0f64, 0.0).is_err());
    }
}
