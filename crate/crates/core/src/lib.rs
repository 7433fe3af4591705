//! Stabilized cut discontinuous Galerkin discretization of a coupled
//! bulk-surface diffusion-reaction problem on unfitted triangle meshes.
//!
//! The bulk domain is the negative side of a level set; both the bulk and the
//! surface unknowns live on discontinuous piecewise linear spaces over the
//! active background elements, with ghost penalties on faces near the cut.

pub mod error;
pub mod forms;
pub mod levelset;
pub mod linalg;
pub mod manufactured;
pub mod mesh;
pub mod quadrature;
pub mod space;
pub mod vec2;

pub use error::{Error, Result};
pub use forms::{AssembledSystem, Discretization, NormVariant, Rescaling, StabilizationParams};
pub use levelset::{Circle, CutTopology, DiscreteLevelSet, HalfPlane, LevelSet};
pub use linalg::{ConditionEstimate, CsrMatrix, Triplets};
pub use manufactured::{AffineProblem, CircleProblem, ErrorReport, ExactSolution};
pub use mesh::{BackgroundMesh, BoundingBox};
pub use space::CombinedDofMap;
