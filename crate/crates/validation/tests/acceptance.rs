//! Acceptance run: one PASS/FAIL line per criterion, non-zero exit if any fails.

use std::time::Instant;

use cutdg::linalg;
use cutdg::manufactured::{compute_errors, log_log_slope};
use cutdg::quadrature::clip_triangle;
use cutdg::vec2::{self, Point};
use cutdg::{AffineProblem, AssembledSystem, Circle, Discretization, Rescaling, StabilizationParams};
use cutdg_study::condition::{run_condition_scaling, run_condition_sweep, SweepConfig, DEGENERATE_KAPPA};
use cutdg_study::convergence::run_convergence;
use cutdg_study::geometry::run_geometry_check;
use cutdg_study::properties::{run_property_suite, summarize};
use cutdg_study::{background_mesh, spread, sweep_deltas};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const N0: usize = 8;
const LEVELS: usize = 5;
const SOLVER_TOL: f64 = 1e-10;

struct Verdict {
    pass: bool,
    detail: String,
}

fn criterion_1() -> Verdict {
    let study = run_convergence(LEVELS, N0, &StabilizationParams::default(), SOLVER_TOL).expect("convergence study");
    if !study.failures.is_empty() || study.rows.len() != LEVELS {
        return Verdict { pass: false, detail: format!("solver failures {:?}", study.failures) };
    }
    let last: Vec<[Option<f64>; 4]> = study.rows[LEVELS - 2..].iter().map(|r| r.eocs()).collect();
    let mean = |i: usize| (last[0][i].unwrap() + last[1][i].unwrap()) / 2.0;
    let m = [mean(0), mean(1), mean(2), mean(3)];
    let h1 = |v: f64| (0.85..=1.15).contains(&v);
    let l2 = |v: f64| (1.8..=2.2).contains(&v);
    Verdict {
        pass: h1(m[0]) && l2(m[1]) && h1(m[2]) && l2(m[3]),
        detail: format!(
            "mean of last two EOCs: H1(bulk) {:.3}, L2(bulk) {:.3}, H1(surf) {:.3}, L2(surf) {:.3}",
            m[0], m[1], m[2], m[3]
        ),
    }
}

fn criterion_2() -> Verdict {
    let params = StabilizationParams::default().ablated();
    let study = run_convergence(LEVELS, N0, &params, SOLVER_TOL).expect("ablated study");
    let eocs = study.all_eocs();
    let min = eocs.iter().fold(f64::INFINITY, |m, v| m.min(*v));
    let non_positive = eocs.iter().any(|e| *e <= 0.0);
    Verdict {
        pass: non_positive || !study.failures.is_empty(),
        detail: format!(
            "smallest EOC {min:.3}; solver failures at levels {:?}",
            study.failures.iter().map(|f| f.level).collect::<Vec<_>>()
        ),
    }
}

fn criterion_3() -> Verdict {
    let rows = run_condition_scaling(N0, 4, &StabilizationParams::default(), Rescaling::Symmetric).expect("scaling");
    let h: Vec<f64> = rows.iter().map(|r| r.h).collect();
    let k: Vec<f64> = rows.iter().map(|r| r.kappa).collect();
    let slope = log_log_slope(&h, &k).unwrap();
    Verdict {
        pass: (-2.5..=-1.6).contains(&slope),
        detail: format!(
            "slope of log kappa vs log h over levels 0..3: {slope:.3} (kappa {})",
            k.iter().map(|v| format!("{v:.3e}")).collect::<Vec<_>>().join(" ")
        ),
    }
}

fn criterion_4() -> Verdict {
    let deltas = sweep_deltas(101).unwrap();
    let rows =
        run_condition_sweep(N0, 1, &deltas, &SweepConfig::ALL, &StabilizationParams::default(), Rescaling::Symmetric)
            .expect("sweep");
    let mut pass = true;
    let mut parts = Vec::new();
    for c in SweepConfig::ALL {
        let k: Vec<f64> = rows.iter().filter(|r| r.config == c.name()).map(|r| r.kappa).collect();
        let s = spread(&k);
        let ok = if c == SweepConfig::Full { s <= 10.0 } else { s >= 1e2 };
        pass &= ok;
        parts.push(format!("{} {:.3e}{}", c.name(), s, if ok { "" } else { " (out of band)" }));
    }
    Verdict { pass, detail: format!("max/min kappa over 101 positions: {}", parts.join(", ")) }
}

fn criterion_5() -> Verdict {
    let g = run_geometry_check(N0, 4).expect("geometry");
    let h: Vec<f64> = g.iter().map(|l| l.h).collect();
    let dist: Vec<f64> = g.iter().map(|l| l.row.sup_dist).collect();
    let normal: Vec<f64> = g.iter().map(|l| l.row.sup_normal_dev).collect();
    let length: Vec<f64> = g.iter().map(|l| (l.surface_length - 2.0 * std::f64::consts::PI).abs()).collect();
    let (sd, sn, sl) =
        (log_log_slope(&h, &dist).unwrap(), log_log_slope(&h, &normal).unwrap(), log_log_slope(&h, &length).unwrap());
    Verdict {
        pass: sd >= 1.8 && sn >= 0.8 && sl >= 1.8,
        detail: format!("slopes: sup distance {sd:.3}, sup normal deviation {sn:.3}, length error {sl:.3}"),
    }
}

/// Integral of `x^a y^b` over `{x in T : rho(x) < 0}` with `rho` linear,
/// by slicing in `x` between all polygon breakpoints: Gauss points in `x`
/// and the exact `y` antiderivative between the half-plane bounds.
fn sliced_oracle(tri: [Point; 3], rho: [f64; 3], a: i32, b: i32) -> f64 {
    let area2 = vec2::signed_area(tri[0], tri[1], tri[2]) * 2.0;
    let grad = {
        let g = |i: usize| {
            let (j, k) = ((i + 1) % 3, (i + 2) % 3);
            [(tri[j][1] - tri[k][1]) / area2, (tri[k][0] - tri[j][0]) / area2]
        };
        let (g0, g1, g2) = (g(0), g(1), g(2));
        [rho[0] * g0[0] + rho[1] * g1[0] + rho[2] * g2[0], rho[0] * g0[1] + rho[1] * g1[1] + rho[2] * g2[1]]
    };
    let rho_at = |p: Point| rho[0] + vec2::dot(grad, vec2::sub(p, tri[0]));
    // half-planes c0 + c1 x + c2 y <= 0: the three edges (interior side) and rho
    let mut planes: Vec<[f64; 3]> = Vec::new();
    let s = area2.signum();
    for i in 0..3 {
        let (p, q) = (tri[i], tri[(i + 1) % 3]);
        // interior is to the left for positive orientation: cross(q-p, x-p) >= 0
        let (ex, ey) = (q[0] - p[0], q[1] - p[1]);
        planes.push([s * (ex * p[1] - ey * p[0]), s * ey, -s * ex]);
    }
    planes.push([rho_at([0.0, 0.0]), grad[0], grad[1]]);
    let mut breaks: Vec<f64> = tri.iter().map(|p| p[0]).collect();
    for i in 0..3 {
        let (p, q) = (tri[i], tri[(i + 1) % 3]);
        let (rp, rq) = (rho_at(p), rho_at(q));
        if (rp < 0.0) != (rq < 0.0) {
            breaks.push(vec2::lerp(p, q, rp / (rp - rq))[0]);
        }
    }
    breaks.sort_by(f64::total_cmp);
    let gauss = [
        (-0.906_179_845_938_664, 0.236_926_885_056_189),
        (-0.538_469_310_105_683, 0.478_628_670_499_366),
        (0.0, 0.568_888_888_888_889),
        (0.538_469_310_105_683, 0.478_628_670_499_366),
        (0.906_179_845_938_664, 0.236_926_885_056_189),
    ];
    let mut total = 0.0;
    for w in breaks.windows(2) {
        let (x0, x1) = (w[0], w[1]);
        if x1 - x0 <= 0.0 {
            continue;
        }
        for (t, wt) in gauss {
            let x = 0.5 * (x0 + x1) + 0.5 * (x1 - x0) * t;
            let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
            for [c0, c1, c2] in &planes {
                let r = -(c0 + c1 * x);
                if *c2 > 0.0 {
                    hi = hi.min(r / c2);
                } else if *c2 < 0.0 {
                    lo = lo.max(r / c2);
                } else if r < 0.0 {
                    hi = lo;
                }
            }
            if hi > lo {
                let inner = (hi.powi(b + 1) - lo.powi(b + 1)) / (b + 1) as f64;
                total += 0.5 * (x1 - x0) * wt * x.powi(a) * inner;
            }
        }
    }
    total
}

fn criterion_6() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(20_241_016);
    let mut worst = 0.0f64;
    let mut tested = 0;
    while tested < 50 {
        let tri: [Point; 3] = std::array::from_fn(|_| [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)]);
        let area = vec2::signed_area(tri[0], tri[1], tri[2]).abs();
        let rho: [f64; 3] = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
        let negatives = rho.iter().filter(|r| **r < 0.0).count();
        if area < 0.05 || negatives == 0 || negatives == 3 {
            continue;
        }
        tested += 1;
        let rule = clip_triangle(tri, rho, [0, 1, 2], 2).unwrap();
        for a in 0..=2 {
            for b in 0..=(2 - a) {
                let q = rule.integrate(|p| p[0].powi(a) * p[1].powi(b));
                let o = sliced_oracle(tri, rho, a, b);
                let scale = sliced_oracle(tri, rho, 0, 0).max(1e-12);
                worst = worst.max((q - o).abs() / o.abs().max(scale));
            }
        }
    }
    let g = run_geometry_check(N0, 4).expect("geometry");
    let h: Vec<f64> = g.iter().map(|l| l.h).collect();
    let err: Vec<f64> = g.iter().map(|l| (l.bulk_area - std::f64::consts::PI).abs()).collect();
    let slope = log_log_slope(&h, &err).unwrap();
    Verdict {
        pass: worst <= 1e-6 && slope >= 1.8,
        detail: format!(
            "worst relative monomial error {worst:.2e} over 50 cut triangles; disk area error slope {slope:.3}"
        ),
    }
}

fn criterion_7() -> Verdict {
    let deltas = sweep_deltas(101).unwrap();
    let samples = run_property_suite(N0, 1, &deltas, &StabilizationParams::default()).expect("properties");
    let s = summarize(&samples);
    let coercive = samples.iter().all(|p| p.coercivity > 0.0);
    let stable = s[..3].iter().all(|(_, v)| v.pass);
    let ablation = s[3..].iter().any(|(_, v)| v.pass);
    let parts: Vec<String> =
        s.iter().map(|(n, v)| format!("{n} {:.3}{}", v.spread, if v.pass { "" } else { " (out of band)" })).collect();
    let unbounded = samples.iter().filter(|p| p.poincare_off >= DEGENERATE_KAPPA).count();
    Verdict {
        pass: coercive && stable && ablation,
        detail: format!(
            "min coercivity {:.3}; max/min over 101 positions: {}; poincare_no_ghost unbounded at {unbounded} positions",
            samples.iter().map(|p| p.coercivity).fold(f64::INFINITY, f64::min),
            parts.join(", ")
        ),
    }
}

fn criterion_8() -> Verdict {
    let exact =
        AffineProblem { bulk_gradient: [0.7, -0.4], bulk_offset: 0.3, surf_gradient: [-0.2, 0.5], surf_offset: 1.1 };
    let mut worst = 0.0f64;
    for params in
        [StabilizationParams::default(), StabilizationParams { c_bulk: 1.7, c_surf: 0.6, ..Default::default() }]
    {
        for level in 0..LEVELS {
            let d = Discretization::new(background_mesh(N0, level).unwrap(), &Circle::unit()).unwrap();
            let rhs = exact.consistent_rhs(&d, &params).unwrap();
            let system = AssembledSystem::new(&d, &params, rhs).unwrap();
            let u = linalg::direct_solve(&system.matrix, &system.rhs).unwrap();
            let e = compute_errors(&d, &u, &exact).unwrap();
            worst = e.as_array().iter().fold(worst, |m, v| m.max(*v));
        }
    }
    Verdict {
        pass: worst <= 1e-9,
        detail: format!("largest error over levels 0..4 and two coefficient pairs: {worst:.2e}"),
    }
}

type Check = fn() -> Verdict;

fn main() {
    let criteria: [(&str, Check); 8] = [
        ("convergence rates", criterion_1),
        ("ablation deteriorates", criterion_2),
        ("condition number scaling", criterion_3),
        ("condition number robustness", criterion_4),
        ("geometry assumptions", criterion_5),
        ("quadrature oracle", criterion_6),
        ("stability constants", criterion_7),
        ("affine exactness", criterion_8),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let v = run();
        failed += usize::from(!v.pass);
        println!(
            "criterion {}: {} [{}] {} ({:.1}s)",
            i + 1,
            if v.pass { "PASS" } else { "FAIL" },
            name,
            v.detail,
            start.elapsed().as_secs_f64()
        );
    }
    println!("acceptance: {} of {} criteria pass", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
