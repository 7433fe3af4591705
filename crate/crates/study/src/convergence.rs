//! Errors and EOCs of the manufactured circle problem under uniform refinement.

use cutdg::manufactured::{self, compute_errors, ErrorReport};
use cutdg::{AssembledSystem, CircleProblem, Discretization, Error, StabilizationParams};
use serde::Serialize;

use crate::{background_mesh, Result, StudyError};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub level: usize,
    pub h: f64,
    pub err_h1_bulk: f64,
    pub eoc_h1_bulk: Option<f64>,
    pub err_l2_bulk: f64,
    pub eoc_l2_bulk: Option<f64>,
    pub err_h1_surf: f64,
    pub eoc_h1_surf: Option<f64>,
    pub err_l2_surf: f64,
    pub eoc_l2_surf: Option<f64>,
}

impl ConvergenceRow {
    pub fn errors(&self) -> [f64; 4] {
        [self.err_h1_bulk, self.err_l2_bulk, self.err_h1_surf, self.err_l2_surf]
    }

    pub fn eocs(&self) -> [Option<f64>; 4] {
        [self.eoc_h1_bulk, self.eoc_l2_bulk, self.eoc_h1_surf, self.eoc_l2_surf]
    }
}

/// A level whose linear system could not be solved.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SolverFailure {
    pub level: usize,
    pub reason: String,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ConvergenceStudy {
    pub rows: Vec<ConvergenceRow>,
    pub failures: Vec<SolverFailure>,
}

impl ConvergenceStudy {
    pub fn all_eocs(&self) -> Vec<f64> {
        self.rows.iter().flat_map(|r| r.eocs()).flatten().collect()
    }
}

/// Assembles and solves the circle problem on one level, returning the errors.
pub fn solve_level(
    n0: usize,
    level: usize,
    params: &StabilizationParams,
    tolerance: f64,
) -> Result<(Discretization, ErrorReport)> {
    let problem = CircleProblem::new(params.c_bulk, params.c_surf)?;
    let d = Discretization::new(background_mesh(n0, level)?, &problem.circle)?;
    let system = AssembledSystem::new(&d, params, problem.rhs(&d, params)?)?;
    let (u, _) = system.solve(tolerance)?;
    let errors = compute_errors(&d, &u, &problem)?;
    Ok((d, errors))
}

/// Runs `levels` refinement levels. Solver breakdowns are recorded per level;
/// EOCs are only formed between consecutive successful levels.
pub fn run_convergence(
    levels: usize,
    n0: usize,
    params: &StabilizationParams,
    tolerance: f64,
) -> Result<ConvergenceStudy> {
    if levels < 2 {
        return Err(Error::InsufficientLevels { needed: 2, got: levels }.into());
    }
    let mut study = ConvergenceStudy::default();
    let mut previous: Option<(usize, ErrorReport)> = None;
    for level in 0..levels {
        match solve_level(n0, level, params, tolerance) {
            Ok((d, e)) => {
                let eoc = |i: usize| {
                    previous
                        .filter(|(l, _)| l + 1 == level)
                        .and_then(|(_, p)| manufactured::eoc(&[p.as_array()[i], e.as_array()[i]]).ok().map(|v| v[0]))
                };
                study.rows.push(ConvergenceRow {
                    level,
                    h: d.h(),
                    err_h1_bulk: e.h1_bulk,
                    eoc_h1_bulk: eoc(0),
                    err_l2_bulk: e.l2_bulk,
                    eoc_l2_bulk: eoc(1),
                    err_h1_surf: e.h1_surf,
                    eoc_h1_surf: eoc(2),
                    err_l2_surf: e.l2_surf,
                    eoc_l2_surf: eoc(3),
                });
                previous = Some((level, e));
            }
            Err(StudyError::Core(e @ (Error::NotConverged { .. } | Error::LinearAlgebra(_)))) => {
                study.failures.push(SolverFailure { level, reason: e.to_string() });
            }
            Err(e) => return Err(e),
        }
    }
    Ok(study)
}
