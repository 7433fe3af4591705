//! Distance and normal deviation of the discrete surface under refinement.

use cutdg::levelset::check_geometry_assumptions;
use cutdg::{Circle, Discretization};
use serde::Serialize;

use crate::{background_mesh, Result};

/// Sample points per surface segment.
pub const SAMPLES_PER_SEGMENT: usize = 9;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GeometryRow {
    pub level: usize,
    pub sup_dist: f64,
    pub sup_normal_dev: f64,
}

/// Geometry row plus the quantities not written to the CSV.
#[derive(Clone, Debug, PartialEq)]
pub struct GeometryLevel {
    pub row: GeometryRow,
    pub h: f64,
    pub surface_length: f64,
    pub bulk_area: f64,
}

pub fn run_geometry_check(n0: usize, levels: usize) -> Result<Vec<GeometryLevel>> {
    let circle = Circle::unit();
    let mut out = Vec::new();
    for level in 0..levels {
        let d = Discretization::new(background_mesh(n0, level)?, &circle)?;
        let dev = check_geometry_assumptions(&circle, &d.topo, SAMPLES_PER_SEGMENT)?;
        let mut bulk_area = 0.0;
        for &e in &d.topo.active_bulk {
            bulk_area += cutdg::quadrature::clip_element_rule(&d.mesh, &d.levelset, e, 1)?.total_weight();
        }
        out.push(GeometryLevel {
            row: GeometryRow { level, sup_dist: dev.sup_distance, sup_normal_dev: dev.sup_normal_deviation },
            h: d.h(),
            surface_length: d.topo.surface_length(),
            bulk_area,
        });
    }
    Ok(out)
}
