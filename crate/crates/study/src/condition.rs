//! Condition numbers of the rescaled system matrix over surface positions and levels.

use std::fmt;
use std::str::FromStr;

use cutdg::linalg::{condition_number, ConditionEstimate};
use cutdg::{forms, AssembledSystem, Discretization, Error, Rescaling, StabilizationParams};
use serde::Serialize;

use crate::{background_mesh, swept_circle, Result, StudyError};

/// Recorded in place of `kappa` when the matrix has no usable spectrum.
pub const DEGENERATE_KAPPA: f64 = 1e300;

/// Eigenvalue moduli below this fraction of the largest count as zero.
pub const ZERO_THRESHOLD: f64 = 1e-12;

/// Which ghost penalties are active in a sweep.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum SweepConfig {
    Full,
    NoSurface,
    NoBulk,
    None,
}

impl SweepConfig {
    pub const ALL: [SweepConfig; 4] = [Self::Full, Self::NoSurface, Self::NoBulk, Self::None];

    pub fn apply(self, p: StabilizationParams) -> StabilizationParams {
        match self {
            Self::Full => p,
            Self::NoSurface => p.without_surface_ghost(),
            Self::NoBulk => p.without_bulk_ghost(),
            Self::None => p.without_ghost(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Full => "full",
            Self::NoSurface => "no-surface",
            Self::NoBulk => "no-bulk",
            Self::None => "none",
        }
    }
}

impl fmt::Display for SweepConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SweepConfig {
    type Err = StudyError;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|c| c.name() == s.trim())
            .ok_or_else(|| StudyError::Config(format!("unknown stabilization config {s:?}")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConditionRow {
    pub delta: f64,
    pub kappa: f64,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub config: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConditionScalingRow {
    pub level: usize,
    pub h: f64,
    pub kappa: f64,
    pub lambda_min: f64,
    pub lambda_max: f64,
}

/// Condition number of the rescaled system matrix of one discretization.
pub fn rescaled_condition(
    d: &Discretization,
    params: &StabilizationParams,
    rescaling: Rescaling,
) -> Result<ConditionEstimate> {
    let system = AssembledSystem::new(d, params, vec![0.0; d.n_dofs()])?;
    Ok(condition_number(&system.rescaled_matrix(rescaling), ZERO_THRESHOLD)?)
}

/// Condition numbers over the translated circles `delta` at a fixed level.
/// A degenerate spectrum is recorded with `kappa = DEGENERATE_KAPPA`.
pub fn run_condition_sweep(
    n0: usize,
    level: usize,
    deltas: &[f64],
    configs: &[SweepConfig],
    params: &StabilizationParams,
    rescaling: Rescaling,
) -> Result<Vec<ConditionRow>> {
    let mesh = background_mesh(n0, level)?;
    let mut rows = Vec::new();
    for &config in configs {
        let p = config.apply(*params);
        for &delta in deltas {
            let d = Discretization::new(mesh.clone(), &swept_circle(&mesh, delta))?;
            let row = match rescaled_condition(&d, &p, rescaling) {
                Ok(c) => ConditionRow {
                    delta,
                    kappa: c.kappa,
                    lambda_min: c.lambda_min,
                    lambda_max: c.lambda_max,
                    config: config.name().into(),
                },
                Err(StudyError::Core(Error::DegenerateMatrix)) => ConditionRow {
                    delta,
                    kappa: DEGENERATE_KAPPA,
                    lambda_min: 0.0,
                    lambda_max: 0.0,
                    config: config.name().into(),
                },
                Err(e) => return Err(e),
            };
            rows.push(row);
        }
    }
    Ok(rows)
}

/// Condition numbers on levels `0..levels` for the centered circle.
pub fn run_condition_scaling(
    n0: usize,
    levels: usize,
    params: &StabilizationParams,
    rescaling: Rescaling,
) -> Result<Vec<ConditionScalingRow>> {
    let mut rows = Vec::new();
    for level in 0..levels {
        let mesh = background_mesh(n0, level)?;
        let d = Discretization::new(mesh, &cutdg::Circle::unit())?;
        let c = rescaled_condition(&d, params, rescaling)?;
        rows.push(ConditionScalingRow {
            level,
            h: d.h(),
            kappa: c.kappa,
            lambda_min: c.lambda_min,
            lambda_max: c.lambda_max,
        });
    }
    Ok(rows)
}

/// Number of CG iterations for the fully stabilized system with a unit load.
pub fn cg_iterations(d: &Discretization, params: &StabilizationParams, tolerance: f64) -> Result<usize> {
    let rhs = forms::load_bulk(d, 2, |_| 1.0)?;
    let system = AssembledSystem::new(d, params, rhs)?;
    let (_, stats) = cutdg::linalg::conjugate_gradient(&system.matrix, &system.rhs, tolerance, 20 * system.matrix.n)?;
    Ok(stats.iterations)
}
