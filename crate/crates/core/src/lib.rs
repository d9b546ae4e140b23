//! hp continuous interior penalty finite elements (CIP-FEM) for the Helmholtz
//! equation with an impedance boundary condition,
//!
//! ```text
//! -Laplace u - k^2 u = f   in Omega,      d_n u + i k u = g   on Gamma,
//! ```
//!
//! on polygonal domains, together with the tooling used to study its
//! pre-asymptotic behavior: error norms, elliptic projections, Oswald
//! averaging, Rellich identities, 1D dispersion analysis and batch studies.
//!
//! Numerical code is generic over [`Real`] (`f32` or `f64`); the `*64`
//! aliases below fix the working precision used by the studies.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod analysis;
pub mod basis;
pub mod dispersion;
pub mod error;
pub mod fespace;
pub mod forms;
pub mod geometry;
pub mod linalg;
pub mod projections;
pub mod quadrature;
pub mod scalar;
pub mod sparse;
pub mod study;

pub use error::{Error, Result};
pub use scalar::{Point2, Real};

pub type Mesh64 = geometry::Mesh<f64>;
pub type StarCenter64 = geometry::StarCenter<f64>;
pub type FeSpace64 = fespace::FeSpace<f64>;
pub type BrokenSpace64 = fespace::BrokenSpace<f64>;
pub type DofVector64 = fespace::DofVector<f64>;
pub type BrokenVector64 = fespace::BrokenVector<f64>;
pub type QuadratureRule64 = quadrature::QuadratureRule<f64>;
pub type PenaltyProfile64 = forms::PenaltyProfile<f64>;
pub type HelmholtzProblem64 = forms::HelmholtzProblem<f64>;
pub type SesquilinearSystem64 = forms::SesquilinearSystem<f64>;
pub type ExactSolution64 = analysis::ExactSolution<f64>;
pub type ErrorReport64 = analysis::ErrorReport<f64>;
pub type DispersionResult64 = dispersion::DispersionResult<f64>;

pub type Mesh32 = geometry::Mesh<f32>;
pub type FeSpace32 = fespace::FeSpace<f32>;
pub type QuadratureRule32 = quadrature::QuadratureRule<f32>;
