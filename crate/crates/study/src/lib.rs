//! Numerical studies for the cut DG bulk-surface solver: convergence under
//! refinement, conditioning over surface translations, geometry checks and
//! stability constants. Results are plain row structs written as CSV.

pub mod condition;
pub mod config;
pub mod convergence;
pub mod geometry;
pub mod output;
pub mod properties;

use cutdg::{BackgroundMesh, BoundingBox, Circle, Discretization};

pub use config::StudyConfig;

/// Half width of the square background domain around the unit circle.
pub const BOX_HALF_WIDTH: f64 = 1.1;

#[derive(Debug, thiserror::Error)]
pub enum StudyError {
    #[error(transparent)]
    Core(#[from] cutdg::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, StudyError>;

/// Structured background mesh of refinement level `level` starting from `n0` cells per axis.
pub fn background_mesh(n0: usize, level: usize) -> Result<BackgroundMesh> {
    let bbox = BoundingBox::centered_square(BOX_HALF_WIDTH)?;
    Ok(BackgroundMesh::structured(bbox, n0 << level)?)
}

/// Center of the unit circle for sweep position `delta ∈ [0, 1]`: a diagonal
/// shift by `(delta - 1/2)` cell widths, so `delta = 0` and `delta = 1` differ
/// by exactly one cell.
pub fn swept_circle(mesh: &BackgroundMesh, delta: f64) -> Circle {
    let s = (delta - 0.5) * mesh.cell_width();
    Circle::new([s, s], 1.0)
}

/// Sweep positions `l / (positions - 1)`, `l = 0..positions`.
pub fn sweep_deltas(positions: usize) -> Result<Vec<f64>> {
    if positions < 2 {
        return Err(StudyError::Config("a sweep needs at least two positions".into()));
    }
    Ok((0..positions).map(|l| l as f64 / (positions - 1) as f64).collect())
}

pub fn swept_discretization(n0: usize, level: usize, delta: f64) -> Result<Discretization> {
    let mesh = background_mesh(n0, level)?;
    let circle = swept_circle(&mesh, delta);
    Ok(Discretization::new(mesh, &circle)?)
}

/// `max / min` of a list of positive values.
pub fn spread(values: &[f64]) -> f64 {
    let max = values.iter().fold(f64::NEG_INFINITY, |m, v| m.max(*v));
    let min = values.iter().fold(f64::INFINITY, |m, v| m.min(*v));
    max / min
}
