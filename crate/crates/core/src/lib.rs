//! Global-local crack propagation: a partition-of-unity elasticity solver
//! coupled to moving bond-based peridynamic boxes.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// Node loops index several parallel arrays at once.
#![allow(clippy::needless_range_loop)]

pub mod coupling;
pub mod crack;
pub mod error;
pub mod geom;
pub mod geometry;
pub mod global_solver;
pub mod io;
pub mod material;
pub mod pd_model;
pub mod pd_solver;

pub use coupling::{run_coupled, BoxPolicy, CoupledReport, CoupledSetup, CouplingSchedule, InnerScheme};
pub use crack::CrackPath;
pub use error::{Error, Result};
pub use geom::{vec2, Circle, Rect, Vec2};
pub use geometry::{build_case, CaseId, CaseSpec, DomainSpec};
pub use io::{parse_config, RunConfig, Specimen};
pub use material::MaterialParams;
pub use pd_model::HorizonGeometry;
pub use pd_solver::{PDBox, PDState};
