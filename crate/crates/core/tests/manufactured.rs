use std::f64::consts::PI;

use cutdg::linalg::{condition_number_dense, condition_number_iterative, relative_residual};
use cutdg::manufactured::{compute_errors, interpolate, log_log_slope, ExactSolution};
use cutdg::vec2::{self, Point};
use cutdg::{
    AssembledSystem, BackgroundMesh, BoundingBox, Circle, CircleProblem, Discretization, LevelSet, StabilizationParams,
};

const COEFFS: [(f64, f64); 3] = [(1.0, 1.0), (2.0, 0.5), (0.3, 1.7)];

fn on_circle(c: &Circle, theta: f64) -> Point {
    vec2::add(c.center, [c.radius * theta.cos(), c.radius * theta.sin()])
}

fn angles(n: usize) -> impl Iterator<Item = f64> {
    (0..n).map(move |k| 2.0 * PI * (k as f64 + 0.37) / n as f64)
}

fn discretization(level: usize) -> Discretization {
    let mesh = BackgroundMesh::structured(BoundingBox::centered_square(1.1).unwrap(), 8 << level).unwrap();
    Discretization::new(mesh, &Circle::unit()).unwrap()
}

#[test]
fn coupling_condition_holds_on_the_circle() {
    for (cb, cs) in COEFFS {
        let pb = CircleProblem::new(cb, cs).unwrap();
        for theta in angles(1000) {
            let x = on_circle(&pb.circle, theta);
            let n = pb.circle.normal(x).unwrap();
            let flux = vec2::dot(n, pb.grad_bulk(x));
            let residual = flux + cb * pb.u_bulk(x) - cs * pb.u_surf(x).unwrap();
            assert!(residual.abs() < 1e-8, "theta {theta}: {residual}");
        }
    }
}

#[test]
fn bulk_data_matches_finite_difference_laplacian() {
    let pb = CircleProblem::new(1.0, 1.0).unwrap();
    let s = 1e-3;
    for i in 0..40 {
        for j in 0..25 {
            let x = [-1.0 + 2.0 * i as f64 / 39.0, -1.0 + 2.0 * j as f64 / 24.0];
            let u = |dx: f64, dy: f64| pb.u_bulk([x[0] + dx, x[1] + dy]);
            let stencil = |s: f64| (u(s, 0.0) + u(-s, 0.0) + u(0.0, s) + u(0.0, -s) - 4.0 * u(0.0, 0.0)) / (s * s);
            // Richardson extrapolation removes the O(s^2) term
            let lap = (4.0 * stencil(s) - stencil(2.0 * s)) / 3.0;
            assert!((pb.f_bulk(x) - (-lap + u(0.0, 0.0))).abs() < 1e-6, "at {x:?}");
        }
    }
}

#[test]
fn surface_data_matches_arc_length_finite_differences() {
    for (cb, cs) in COEFFS {
        let pb = CircleProblem::new(cb, cs).unwrap();
        let r = pb.circle.radius;
        let s = 1e-3;
        for theta in angles(1000) {
            let u = |t: f64| pb.u_surf_at(t);
            let second = |s: f64| (u(theta + s) - 2.0 * u(theta) + u(theta - s)) / (r * r * s * s);
            let lb = (4.0 * second(s) - second(2.0 * s)) / 3.0;
            let x = on_circle(&pb.circle, theta);
            let dn = vec2::dot(pb.circle.normal(x).unwrap(), pb.grad_bulk(x));
            let expected = -lb + u(theta) + dn;
            assert!((pb.f_surf_at(theta) - expected).abs() < 1e-6, "theta {theta}");
            assert!((pb.f_surf(x).unwrap() - pb.f_surf_at(theta)).abs() < 1e-12);
        }
    }
}

#[test]
fn analytic_derivatives_match_central_differences() {
    let pb = CircleProblem::new(2.0, 0.5).unwrap();
    let s = 1e-5;
    let points = [[0.3, -0.2], [-0.7, 0.5], [0.9, 0.1], [0.05, 1.02], [-0.6, -0.95]];
    for x in points {
        let g = pb.grad_bulk(x);
        let fd = [
            (pb.u_bulk([x[0] + s, x[1]]) - pb.u_bulk([x[0] - s, x[1]])) / (2.0 * s),
            (pb.u_bulk([x[0], x[1] + s]) - pb.u_bulk([x[0], x[1] - s])) / (2.0 * s),
        ];
        assert!(vec2::distance(g, fd) < 1e-6);
        let h = pb.hessian_bulk(x);
        for k in 0..2 {
            let e = if k == 0 { [s, 0.0] } else { [0.0, s] };
            let dg = vec2::scale(vec2::sub(pb.grad_bulk(vec2::add(x, e)), pb.grad_bulk(vec2::sub(x, e))), 0.5 / s);
            assert!((dg[0] - h[0][k]).abs() < 1e-6 && (dg[1] - h[1][k]).abs() < 1e-6);
        }
        let gs = pb.grad_surf(x).unwrap();
        let us = |y: Point| pb.u_surf(y).unwrap();
        let fd = [
            (us([x[0] + s, x[1]]) - us([x[0] - s, x[1]])) / (2.0 * s),
            (us([x[0], x[1] + s]) - us([x[0], x[1] - s])) / (2.0 * s),
        ];
        assert!(vec2::distance(gs, fd) < 1e-6, "{gs:?} vs {fd:?}");
    }
    for theta in angles(50) {
        let [_, g1, g2] = pb.surface_profile(theta);
        let fd1 = (pb.u_surf_at(theta + s) - pb.u_surf_at(theta - s)) / (2.0 * s);
        let fd2 = (pb.surface_profile(theta + s)[1] - pb.surface_profile(theta - s)[1]) / (2.0 * s);
        assert!((g1 - fd1).abs() < 1e-6 && (g2 - fd2).abs() < 1e-6);
    }
}

#[test]
fn interpolation_errors_converge_at_optimal_rates() {
    let pb = CircleProblem::new(1.0, 1.0).unwrap();
    let mut h = Vec::new();
    let mut errors: Vec<[f64; 4]> = Vec::new();
    for level in 0..4 {
        let d = discretization(level);
        h.push(d.h());
        errors.push(compute_errors(&d, &interpolate(&d, &pb).unwrap(), &pb).unwrap().as_array());
    }
    for (k, min_slope) in [(0, 0.9), (1, 1.9), (2, 0.9), (3, 1.9)] {
        let e: Vec<f64> = errors.iter().map(|r| r[k]).collect();
        let slope = log_log_slope(&h, &e).unwrap();
        assert!(slope >= min_slope, "norm {k}: slope {slope}");
    }
}

#[test]
fn manufactured_system_solves_to_tolerance() {
    let d = discretization(2);
    let p = StabilizationParams::default();
    let pb = CircleProblem::new(p.c_bulk, p.c_surf).unwrap();
    let system = AssembledSystem::new(&d, &p, pb.rhs(&d, &p).unwrap()).unwrap();
    let (u, _) = system.solve(1e-10).unwrap();
    assert!(relative_residual(&system.matrix, &u, &system.rhs) <= 1e-10);
}

#[test]
fn dense_and_iterative_condition_numbers_agree() {
    let d = discretization(0);
    let system = AssembledSystem::new(&d, &StabilizationParams::default(), vec![0.0; d.n_dofs()]).unwrap();
    let a = system.rescaled_matrix(Default::default());
    let dense = condition_number_dense(&a, 1e-12).unwrap();
    let iterative = condition_number_iterative(&a, 1e-10).unwrap();
    assert!((iterative.kappa / dense.kappa - 1.0).abs() < 0.05, "{} vs {}", iterative.kappa, dense.kappa);
}
