//! Stability constants over a sweep of surface positions: coercivity with
//! respect to the energy norm, ghost-penalty norm equivalence and the
//! discrete Poincaré inequality, with and without ghost penalties.

use cutdg::forms::{energy_gram, ghost_equivalence_grams, poincare_grams};
use cutdg::linalg::{generalized_bounds_on_range, generalized_extremes_spd, GeneralizedBounds};
use cutdg::{AssembledSystem, Discretization, NormVariant, StabilizationParams};
use serde::Serialize;

use crate::condition::DEGENERATE_KAPPA;
use crate::{background_mesh, spread, swept_circle, Result};

/// Relative eigenvalue threshold separating the kernel of a Gram matrix.
pub const KERNEL_THRESHOLD: f64 = 1e-12;

/// Kernel leak above which a constant is reported as unbounded.
pub const LEAK_THRESHOLD: f64 = 1e-8;

/// Allowed variation of stabilized constants across the sweep.
pub const STABLE_FACTOR: f64 = 2.0;

/// Minimal variation that marks an unstabilized constant as position dependent.
pub const UNSTABLE_FACTOR: f64 = 1e2;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PropertySample {
    pub delta: f64,
    /// `λ_min(A, G)` with `G` the total energy-norm Gram matrix.
    pub coercivity: f64,
    /// Largest generalized eigenvalue of the full-element gradient Gram
    /// against the cut gradient Gram plus `j_Ω`.
    pub ghost_equivalence: f64,
    /// Same, without `j_Ω`.
    pub ghost_equivalence_off: f64,
    /// Discrete Poincaré constant with `j_Γ`.
    pub poincare: f64,
    /// Same, without `j_Γ`.
    pub poincare_off: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PropertyRow {
    pub name: String,
    pub constant: f64,
    /// Empty for rows summarizing the whole sweep.
    pub delta: Option<f64>,
    pub pass: bool,
}

fn bounded_max(b: GeneralizedBounds) -> f64 {
    if b.kernel_leak > LEAK_THRESHOLD {
        DEGENERATE_KAPPA
    } else {
        b.max
    }
}

/// `λ_min(A, G_total)`.
pub fn coercivity_constant(d: &Discretization, p: &StabilizationParams) -> Result<f64> {
    let a = AssembledSystem::new(d, p, vec![0.0; d.n_dofs()])?.matrix.to_dense();
    let g = energy_gram(d, p, NormVariant::Total)?.to_dense();
    match generalized_extremes_spd(&a, &g) {
        Ok((lo, _)) => Ok(lo),
        Err(_) => Ok(generalized_bounds_on_range(&a, &g, KERNEL_THRESHOLD)?.min),
    }
}

pub fn ghost_equivalence_constant(d: &Discretization, p: &StabilizationParams) -> Result<f64> {
    let (active, cut) = ghost_equivalence_grams(d, p)?;
    Ok(bounded_max(generalized_bounds_on_range(&active.to_dense(), &cut.to_dense(), KERNEL_THRESHOLD)?))
}

pub fn poincare_constant(d: &Discretization, p: &StabilizationParams) -> Result<f64> {
    let (num, den) = poincare_grams(d, p)?;
    Ok(bounded_max(generalized_bounds_on_range(&num, &den.to_dense(), KERNEL_THRESHOLD)?))
}

pub fn measure(d: &Discretization, p: &StabilizationParams, delta: f64) -> Result<PropertySample> {
    Ok(PropertySample {
        delta,
        coercivity: coercivity_constant(d, p)?,
        ghost_equivalence: ghost_equivalence_constant(d, p)?,
        ghost_equivalence_off: ghost_equivalence_constant(d, &p.without_bulk_ghost())?,
        poincare: poincare_constant(d, p)?,
        poincare_off: poincare_constant(d, &p.without_surface_ghost())?,
    })
}

pub fn run_property_suite(
    n0: usize,
    level: usize,
    deltas: &[f64],
    params: &StabilizationParams,
) -> Result<Vec<PropertySample>> {
    let mesh = background_mesh(n0, level)?;
    deltas
        .iter()
        .map(|&delta| {
            let d = Discretization::new(mesh.clone(), &swept_circle(&mesh, delta))?;
            measure(&d, params, delta)
        })
        .collect()
}

/// Verdict on one constant across the sweep.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Summary {
    pub reference: f64,
    pub spread: f64,
    pub pass: bool,
}

fn stable(values: &[f64], positive: bool) -> Summary {
    let reference = values[0];
    let within = |v: f64| v >= reference / STABLE_FACTOR && v <= reference * STABLE_FACTOR;
    let pass = values.iter().all(|v| within(*v) && (!positive || *v > 0.0) && *v < DEGENERATE_KAPPA);
    Summary { reference, spread: spread(values), pass }
}

fn unstable(values: &[f64]) -> Summary {
    let s = spread(values);
    Summary { reference: values[0], spread: s, pass: s >= UNSTABLE_FACTOR }
}

/// Summaries in the order coercivity, equivalence, Poincaré, equivalence
/// without `j_Ω`, Poincaré without `j_Γ`.
pub fn summarize(samples: &[PropertySample]) -> [(&'static str, Summary); 5] {
    let col = |f: fn(&PropertySample) -> f64| samples.iter().map(f).collect::<Vec<_>>();
    [
        ("coercivity", stable(&col(|s| s.coercivity), true)),
        ("ghost_equivalence", stable(&col(|s| s.ghost_equivalence), true)),
        ("poincare", stable(&col(|s| s.poincare), true)),
        ("ghost_equivalence_no_ghost", unstable(&col(|s| s.ghost_equivalence_off))),
        ("poincare_no_ghost", unstable(&col(|s| s.poincare_off))),
    ]
}

/// CSV rows: one per constant and position, then one `<name>_spread` row per constant.
pub fn property_rows(samples: &[PropertySample]) -> Vec<PropertyRow> {
    let summaries = summarize(samples);
    let mut rows = Vec::new();
    for s in samples {
        let values = [s.coercivity, s.ghost_equivalence, s.poincare, s.ghost_equivalence_off, s.poincare_off];
        for ((name, sum), v) in summaries.iter().zip(values) {
            let pass = if name.ends_with("no_ghost") {
                true
            } else {
                v >= sum.reference / STABLE_FACTOR && v <= sum.reference * STABLE_FACTOR
            };
            rows.push(PropertyRow { name: (*name).into(), constant: v, delta: Some(s.delta), pass });
        }
    }
    for (name, sum) in summaries {
        rows.push(PropertyRow { name: format!("{name}_spread"), constant: sum.spread, delta: None, pass: sum.pass });
    }
    rows
}
