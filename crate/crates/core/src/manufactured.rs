//! Manufactured solutions of the coupled problem on a circle, error norms
//! and experimental orders of convergence.
//!
//! Strong form: `-Δu_Ω + u_Ω = f_Ω` in Ω, `∂_n u_Ω = c_Γ u_Γ - c_Ω u_Ω` on Γ,
//! `-Δ_Γ u_Γ + u_Γ + ∂_n u_Ω = f_Γ` on Γ.

use crate::error::{Error, Result};
use crate::forms::{self, Discretization, StabilizationParams, Trace};
use crate::levelset::{Circle, LevelSet};
use crate::quadrature::{clip_element_rule, surface_segment_rule, DATA_DEGREE};
use crate::space::P1Element;
use crate::vec2::{self, Point};

/// Exact pair `(u_Ω, u_Γ)`; the surface part is evaluated through its
/// extension off the surface.
pub trait ExactSolution {
    fn u_bulk(&self, x: Point) -> f64;
    fn grad_bulk(&self, x: Point) -> Point;
    fn u_surf(&self, x: Point) -> Result<f64>;
    fn grad_surf(&self, x: Point) -> Result<Point>;
}

/// `u_Ω = c_Γ exp(q)` with `q = -x(x-1) y(y-1)`; `u_Γ` is fixed by the coupling
/// condition and the data by the two differential equations.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CircleProblem {
    pub c_bulk: f64,
    pub c_surf: f64,
    pub circle: Circle,
}

/// First, second and third derivatives of `u_Ω` at a point.
#[derive(Clone, Copy, Debug)]
struct Jet {
    u: f64,
    grad: [f64; 2],
    hess: [[f64; 2]; 2],
    third: [[[f64; 2]; 2]; 2],
}

impl Jet {
    fn hess_form(&self, a: Point, b: Point) -> f64 {
        let mut s = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                s += self.hess[i][j] * a[i] * b[j];
            }
        }
        s
    }

    fn third_form(&self, a: Point, b: Point, c: Point) -> f64 {
        let mut s = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    s += self.third[i][j][k] * a[i] * b[j] * c[k];
                }
            }
        }
        s
    }
}

impl CircleProblem {
    pub fn new(c_bulk: f64, c_surf: f64) -> Result<Self> {
        Self::with_circle(c_bulk, c_surf, Circle::unit())
    }

    pub fn with_circle(c_bulk: f64, c_surf: f64, circle: Circle) -> Result<Self> {
        if !(c_bulk > 0.0 && c_surf > 0.0) {
            return Err(Error::Configuration("coupling coefficients must be positive".into()));
        }
        Ok(Self { c_bulk, c_surf, circle })
    }

    fn jet(&self, x: Point) -> Jet {
        let (a, da) = (x[0] * x[0] - x[0], 2.0 * x[0] - 1.0);
        let (b, db) = (x[1] * x[1] - x[1], 2.0 * x[1] - 1.0);
        let q1 = [-da * b, -a * db];
        let q2 = [[-2.0 * b, -da * db], [-da * db, -2.0 * a]];
        // q_xxx = q_yyy = 0, q_xxy = -2 B', q_xyy = -2 A'
        let q3 = |i: usize, j: usize, k: usize| match i + j + k {
            1 => -2.0 * db,
            2 => -2.0 * da,
            _ => 0.0,
        };
        let u = self.c_surf * (-(a * b)).exp();
        let grad = [u * q1[0], u * q1[1]];
        let mut hess = [[0.0; 2]; 2];
        let mut third = [[[0.0; 2]; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                hess[i][j] = u * (q2[i][j] + q1[i] * q1[j]);
                for k in 0..2 {
                    third[i][j][k] = u
                        * (q3(i, j, k)
                            + q2[i][j] * q1[k]
                            + q2[i][k] * q1[j]
                            + q2[j][k] * q1[i]
                            + q1[i] * q1[j] * q1[k]);
                }
            }
        }
        Jet { u, grad, hess, third }
    }

    pub fn hessian_bulk(&self, x: Point) -> [[f64; 2]; 2] {
        self.jet(x).hess
    }

    pub fn laplacian_bulk(&self, x: Point) -> f64 {
        let h = self.jet(x).hess;
        h[0][0] + h[1][1]
    }

    pub fn f_bulk(&self, x: Point) -> f64 {
        -self.laplacian_bulk(x) + self.u_bulk(x)
    }

    fn on_circle(&self, theta: f64) -> (Point, Point, Point) {
        let n = [theta.cos(), theta.sin()];
        let t = [-n[1], n[0]];
        (vec2::add(self.circle.center, vec2::scale(n, self.circle.radius)), n, t)
    }

    /// `∂_n u_Ω` at angle `theta` on the circle.
    pub fn normal_derivative(&self, theta: f64) -> f64 {
        let (x, n, _) = self.on_circle(theta);
        vec2::dot(n, self.jet(x).grad)
    }

    /// `u_Γ` and its first two derivatives with respect to the angle.
    pub fn surface_profile(&self, theta: f64) -> [f64; 3] {
        let r = self.circle.radius;
        let (x, n, t) = self.on_circle(theta);
        let j = self.jet(x);
        let (dn, dt) = (vec2::dot(n, j.grad), vec2::dot(t, j.grad));
        let cb = self.c_bulk;
        let g = (dn + cb * j.u) / self.c_surf;
        let g1 = (dt + r * j.hess_form(n, t) + cb * r * dt) / self.c_surf;
        let g2 = (-dn + 2.0 * r * j.hess_form(t, t) - r * j.hess_form(n, n)
            + r * r * j.third_form(n, t, t)
            + cb * (-r * dn + r * r * j.hess_form(t, t)))
            / self.c_surf;
        [g, g1, g2]
    }

    pub fn u_surf_at(&self, theta: f64) -> f64 {
        self.surface_profile(theta)[0]
    }

    pub fn laplace_beltrami_surf(&self, theta: f64) -> f64 {
        let r = self.circle.radius;
        self.surface_profile(theta)[2] / (r * r)
    }

    pub fn f_surf_at(&self, theta: f64) -> f64 {
        -self.laplace_beltrami_surf(theta) + self.u_surf_at(theta) + self.normal_derivative(theta)
    }

    /// `f_Γ ∘ p`, defined in the tubular neighborhood.
    pub fn f_surf(&self, x: Point) -> Result<f64> {
        self.circle.closest_point(x)?;
        Ok(self.f_surf_at(self.circle.angle(x)))
    }

    /// Standard load vector `l^h`.
    pub fn rhs(&self, d: &Discretization, p: &StabilizationParams) -> Result<Vec<f64>> {
        forms::assemble_rhs(d, p, DATA_DEGREE, |x| self.f_bulk(x), |x| self.f_surf(x))
    }
}

impl ExactSolution for CircleProblem {
    fn u_bulk(&self, x: Point) -> f64 {
        self.jet(x).u
    }

    fn grad_bulk(&self, x: Point) -> Point {
        self.jet(x).grad
    }

    fn u_surf(&self, x: Point) -> Result<f64> {
        self.circle.closest_point(x)?;
        Ok(self.u_surf_at(self.circle.angle(x)))
    }

    /// Gradient of the extension `u_Γ ∘ p`.
    fn grad_surf(&self, x: Point) -> Result<Point> {
        let t = vec2::normalize({
            let n = self.circle.normal(x)?;
            [-n[1], n[0]]
        });
        let r = vec2::distance(x, self.circle.center);
        let g1 = self.surface_profile(self.circle.angle(x))[1];
        Ok(vec2::scale(t, g1 / r))
    }
}

/// Globally affine pair `u_Ω = a.x + b`, `u_Γ = g.x + e`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AffineProblem {
    pub bulk_gradient: Point,
    pub bulk_offset: f64,
    pub surf_gradient: Point,
    pub surf_offset: f64,
}

impl ExactSolution for AffineProblem {
    fn u_bulk(&self, x: Point) -> f64 {
        vec2::dot(self.bulk_gradient, x) + self.bulk_offset
    }

    fn grad_bulk(&self, _: Point) -> Point {
        self.bulk_gradient
    }

    fn u_surf(&self, x: Point) -> Result<f64> {
        Ok(vec2::dot(self.surf_gradient, x) + self.surf_offset)
    }

    fn grad_surf(&self, _: Point) -> Result<Point> {
        Ok(self.surf_gradient)
    }
}

impl AffineProblem {
    /// Right-hand side `A^h(u, v)` evaluated by integrating by parts on every
    /// cut element and surface segment, so that the affine pair solves the
    /// discrete problem on the polygonal geometry:
    ///
    /// - bulk: `(u_Ω, v)_{Ω^h} + (a.n^h, v)_{Γ^h}`,
    /// - surface: `(u_Γ, v)_{Γ^h} + sum_E g.(n_E^+ + n_E^-) {v}(E)`,
    /// - coupling: `(c_Ω u_Ω - c_Γ u_Γ, c_Ω v_Ω - c_Γ v_Γ)_{Γ^h}`.
    pub fn consistent_rhs(&self, d: &Discretization, p: &StabilizationParams) -> Result<Vec<f64>> {
        let deg = DATA_DEGREE;
        let mass = forms::load_bulk(d, deg, |x| self.u_bulk(x))?;
        let flux = forms::load_on_surface(d, deg, Trace::Bulk, |_, s| Ok(vec2::dot(self.bulk_gradient, s.normal)))?;
        let surf_mass = forms::load_on_surface(d, deg, Trace::Surface, |x, _| self.u_surf(x))?;
        let edges = forms::load_surface_edges(d, |e| {
            let w = 0.5 * vec2::dot(self.surf_gradient, vec2::add(e.conormals[0], e.conormals[1]));
            [w, w]
        })?;
        let mismatch = |x: Point| p.c_bulk * self.u_bulk(x) - p.c_surf * self.u_surf(x).unwrap_or(0.0);
        let cpl_bulk = forms::load_on_surface(d, deg, Trace::Bulk, |x, _| Ok(p.c_bulk * mismatch(x)))?;
        let cpl_surf = forms::load_on_surface(d, deg, Trace::Surface, |x, _| Ok(-p.c_surf * mismatch(x)))?;
        Ok((0..d.n_dofs())
            .map(|i| p.c_bulk * (mass[i] + flux[i]) + p.c_surf * (surf_mass[i] + edges[i]) + cpl_bulk[i] + cpl_surf[i])
            .collect())
    }
}

/// Discrete errors `u_h - u`.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct ErrorReport {
    /// `(‖∇e‖² + ‖e‖²)^{1/2}` on `Ω^h`, element-wise gradients.
    pub h1_bulk: f64,
    pub l2_bulk: f64,
    /// `(‖P^h ∇e‖² + ‖e‖²)^{1/2}` on `Γ^h`.
    pub h1_surf: f64,
    pub l2_surf: f64,
}

impl ErrorReport {
    pub fn as_array(&self) -> [f64; 4] {
        [self.h1_bulk, self.l2_bulk, self.h1_surf, self.l2_surf]
    }
}

/// Error norms of the coefficient vector `coeffs` against `exact`, using
/// cut quadrature of degree 4.
pub fn compute_errors(d: &Discretization, coeffs: &[f64], exact: &dyn ExactSolution) -> Result<ErrorReport> {
    if coeffs.len() != d.n_dofs() {
        return Err(Error::Configuration(format!(
            "coefficient vector has length {}, expected {}",
            coeffs.len(),
            d.n_dofs()
        )));
    }
    let (bulk, surf) = d.dofs.split(coeffs);
    let (mut l2b, mut h1b, mut l2s, mut h1s) = (0.0, 0.0, 0.0, 0.0);
    for &e in &d.topo.active_bulk {
        let el = P1Element::new(&d.mesh, e);
        let c = d.dofs.bulk.element_coeffs(e, bulk).expect("active element");
        let grad = el.interpolant_gradient(c);
        for (x, w) in clip_element_rule(&d.mesh, &d.levelset, e, DATA_DEGREE)?.iter() {
            let err = el.evaluate(c, x) - exact.u_bulk(x);
            let ge = vec2::sub(grad, exact.grad_bulk(x));
            l2b += w * err * err;
            h1b += w * vec2::dot(ge, ge);
        }
    }
    for seg in &d.topo.segments {
        let el = P1Element::new(&d.mesh, seg.element);
        let c = d.dofs.surface.element_coeffs(seg.element, surf).expect("active element");
        let grad = el.interpolant_gradient(c);
        let t = seg.tangent();
        for (x, w) in surface_segment_rule(seg, DATA_DEGREE)?.iter() {
            let err = el.evaluate(c, x) - exact.u_surf(x)?;
            let ge = vec2::dot(t, vec2::sub(grad, exact.grad_surf(x)?));
            l2s += w * err * err;
            h1s += w * ge * ge;
        }
    }
    Ok(ErrorReport {
        h1_bulk: (h1b + l2b).sqrt(),
        l2_bulk: l2b.sqrt(),
        h1_surf: (h1s + l2s).sqrt(),
        l2_surf: l2s.sqrt(),
    })
}

/// Nodal interpolant of the exact pair on the active meshes.
pub fn interpolate(d: &Discretization, exact: &dyn ExactSolution) -> Result<Vec<f64>> {
    let bad = std::cell::Cell::new(None);
    let v = d.dofs.interpolate_nodal(
        &d.mesh,
        |x| exact.u_bulk(x),
        |x| {
            exact.u_surf(x).unwrap_or_else(|e| {
                bad.set(Some(e));
                f64::NAN
            })
        },
    );
    match bad.into_inner() {
        Some(e) => Err(e),
        None => Ok(v),
    }
}

/// `EOC_k = log2(E_{k-1} / E_k)` for successive halvings of `h`.
pub fn eoc(errors: &[f64]) -> Result<Vec<f64>> {
    if errors.len() < 2 {
        return Err(Error::InsufficientLevels { needed: 2, got: errors.len() });
    }
    if let Some(e) = errors.iter().find(|e| !(**e > 0.0) || !e.is_finite()) {
        return Err(Error::UndefinedEoc(*e));
    }
    Ok(errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect())
}

/// Least-squares slope of `log y` against `log x`.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::InsufficientLevels { needed: 2, got: x.len().min(y.len()) });
    }
    if let Some(v) = x.iter().chain(y).find(|v| !(**v > 0.0) || !v.is_finite()) {
        return Err(Error::UndefinedEoc(*v));
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    Ok(sxy / sxx)
}
