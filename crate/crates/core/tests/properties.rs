use std::sync::Arc;

use cipfem::analysis::{
    boundary_flux_sums, discrete_norms, error_report, im_identity, plane_wave, squared_norms,
};
use cipfem::fespace::{DofVector, FeSpace};
use cipfem::forms::{assemble_system, PenaltyProfile};
use cipfem::geometry::Mesh;
use cipfem::linalg;
use cipfem::quadrature::QuadratureRule;
use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type C = Complex<f64>;

fn random_vector(space: &FeSpace<f64>, r: &mut ChaCha8Rng) -> DofVector<f64> {
    let v = (0..space.dof_count()).map(|_| C::new(r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0))).collect();
    DofVector::from_values(space, v).unwrap()
}

#[test]
fn imaginary_part_of_solution_identity() {
    let mesh = Arc::new(Mesh::unit_square(6).unwrap());
    for p in 1..=3 {
        let space = FeSpace::new(mesh.clone(), p).unwrap();
        for gamma in [0.0, 0.05, 1.0] {
            let penalty = PenaltyProfile::constant(&mesh, gamma).unwrap();
            let problem = plane_wave(9.0f64, [0.6, -0.8]).unwrap().problem(penalty).unwrap();
            let (uh, _) = linalg::solve(&assemble_system(&problem, &space).unwrap()).unwrap();
            let (lhs, rhs) = im_identity(&uh, &space, &problem).unwrap();
            assert!((lhs - rhs).abs() <= 1e-10 * lhs.abs().max(1.0), "p={p} gamma={gamma}: {lhs} vs {rhs}");
        }
    }
}

#[test]
fn element_fluxes_sum_to_boundary_flux() {
    let mesh = Arc::new(Mesh::unit_square(5).unwrap());
    let center = mesh.verify_star_shaped([0.4, 0.55]).unwrap();
    let mut r = ChaCha8Rng::seed_from_u64(5);
    for p in 1..=3 {
        let space = FeSpace::new(mesh.clone(), p).unwrap();
        for _ in 0..5 {
            let v = random_vector(&space, &mut r);
            let (elementwise, boundary) = boundary_flux_sums(&v, &space, &center).unwrap();
            assert!((elementwise - boundary).abs() <= 1e-11 * boundary.abs(), "{elementwise} vs {boundary}");
            assert!(boundary > 0.0);
        }
    }
}

#[test]
fn solution_independent_of_element_labels() {
    let mesh = Arc::new(Mesh::unit_square(4).unwrap());
    let mut perm: Vec<usize> = (0..mesh.num_elements()).collect();
    perm.reverse();
    perm.swap(3, 11);
    let relabeled = Arc::new(mesh.relabel_elements(&perm).unwrap());
    let ex = plane_wave(6.0, [0.8, 0.6]).unwrap();
    let report = |m: &Arc<Mesh<f64>>| {
        let space = FeSpace::new(m.clone(), 2).unwrap();
        let penalty = PenaltyProfile::constant(m, 0.3).unwrap();
        let (uh, _) = linalg::solve(&assemble_system(&ex.problem(penalty.clone()).unwrap(), &space).unwrap()).unwrap();
        error_report(&ex, &uh, &space, &penalty).unwrap()
    };
    let (a, b) = (report(&mesh), report(&relabeled));
    for (x, y) in [(a.err_l2, b.err_l2), (a.err_h1_semi, b.err_h1_semi), (a.err_jump, b.err_jump), (a.err_energy, b.err_energy)] {
        assert!((x - y).abs() <= 1e-10 * x, "{x} vs {y}");
    }
}

#[test]
fn interpolation_rates() {
    let k: f64 = 4.0;
    let field = plane_wave(k, [0.6, 0.8]).unwrap().field();
    let penalty_free = |m: &Mesh<f64>| PenaltyProfile::zero(m);
    for p in 1..=3 {
        let mut prev: Option<(f64, f64, f64)> = None;
        for n in [4, 8, 16] {
            let mesh = Arc::new(Mesh::<f64>::unit_square(n).unwrap());
            let space = FeSpace::new(mesh.clone(), p).unwrap();
            let iu = space.interpolate(|x| (field.u)(x));
            let quad = QuadratureRule::for_degree(p).unwrap();
            let e = squared_norms(&space, Some(&iu), Some(&field), &penalty_free(&mesh), &quad).unwrap();
            let (l2, h1) = (e.l2.sqrt(), e.h1_semi.sqrt());
            if let Some((h0, l20, h10)) = prev {
                let lh = (h0 / mesh.h).ln();
                let (el2, eh1) = ((l20 / l2).ln() / lh, (h10 / h1).ln() / lh);
                if n == 16 {
                    assert!((el2 - (p + 1) as f64).abs() < 0.2, "p={p}: L2 rate {el2}");
                    assert!((eh1 - p as f64).abs() < 0.15, "p={p}: H1 rate {eh1}");
                }
            }
            prev = Some((mesh.h, l2, h1));
        }
    }
}

/// `||v||_{dK}^2 <= (p + 1)(p + 2) / 2 |dK| / |K| ||v||_K^2` for polynomials
/// of degree `p` on a triangle.
#[test]
fn polynomial_trace_inequality() {
    let mut r = ChaCha8Rng::seed_from_u64(9);
    for scale in [1.0, 0.1, 0.01] {
        let tri = vec![[0.0, 0.0], [scale, 0.1 * scale], [0.3 * scale, 0.8 * scale]];
        let mesh = Arc::new(Mesh::from_triangles(tri, vec![[0, 1, 2]]).unwrap());
        let perimeter: f64 = mesh.boundary_edges.iter().map(|e| e.length).sum();
        let area = mesh.area();
        for p in 1..=4 {
            let space = FeSpace::new(mesh.clone(), p).unwrap();
            let bound = ((p + 1) * (p + 2)) as f64 / 2.0 * perimeter / area;
            let mut worst: f64 = 0.0;
            for _ in 0..20 {
                let v = random_vector(&space, &mut r);
                let s = discrete_norms(&space, &v, &PenaltyProfile::zero(&mesh)).unwrap();
                worst = worst.max(s.boundary / s.l2);
            }
            assert!(worst <= bound, "p={p} scale={scale}: {worst} > {bound}");
            assert!(worst >= 0.1 * bound, "p={p} scale={scale}: bound far from sharp ({worst} vs {bound})");
        }
    }
}

#[test]
fn fem_solution_converges_to_plane_wave() {
    // Galerkin error versus best approximation at a resolved k: the ratio to
    // the interpolation error stays moderate.
    let ex = plane_wave(5.0, [1.0, 0.0]).unwrap();
    let mesh = Arc::new(Mesh::unit_square(16).unwrap());
    let space = FeSpace::new(mesh.clone(), 2).unwrap();
    let penalty = PenaltyProfile::zero(&mesh);
    let (uh, _) = linalg::solve(&assemble_system(&ex.problem(penalty.clone()).unwrap(), &space).unwrap()).unwrap();
    let fe = error_report(&ex, &uh, &space, &penalty).unwrap();
    let iu = space.interpolate(|x| (ex.u)(x));
    let interp = error_report(&ex, &iu, &space, &penalty).unwrap();
    assert!(fe.err_h1_semi <= 1.5 * interp.err_h1_semi, "{} vs {}", fe.err_h1_semi, interp.err_h1_semi);
}
