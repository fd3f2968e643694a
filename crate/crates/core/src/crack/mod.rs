//! Crack paths and their extraction from peridynamic damage fields.

mod centerline;
mod contour;
mod path;

pub use centerline::{centerline, extension_points, update_crack, ExtractionParams};
pub use contour::{iso_contour, resample_damage, resample_nodal, Contour, DamageGrid};
pub use path::{is_simple, CrackPath, ON_CRACK_TOL};

use crate::error::Result;
use crate::pd_solver::PDState;

/// Damage grid, iso-contours and centerline in one pass.
pub fn extract_crack(
    state: &PDState,
    damage: &[f64],
    previous: &CrackPath,
    params: &ExtractionParams,
) -> Result<CrackPath> {
    let grid = resample_nodal(&state.positions, damage, params.grid_spacing)?;
    let contours = iso_contour(&grid, params.threshold);
    centerline(&contours, &grid, previous, params)
}
