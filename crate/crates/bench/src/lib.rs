//! Fixtures shared by the benchmarks: a desk-scale box at the Case I notch
//! tip and the matching global discretization.

use pumpd_core::global_solver::{build_cover, discretize, BoundaryConditions, Cover, EnrichedSpace, Supports};
use pumpd_core::pd_solver::generate_nodes;
use pumpd_core::{build_case, CaseId, DomainSpec, PDBox, PDState, Rect};
use std::sync::Arc;

pub const H_PD: f64 = 0.001984375;
pub const DELTA: f64 = 8.0 * H_PD;
pub const H_PUM: f64 = 0.00396875;

pub fn domain() -> DomainSpec {
    build_case(CaseId::I)
}

/// Box of side `side` centered on the notch tip, nodes generated.
pub fn notch_box(side: f64) -> PDState {
    let d = domain();
    let crack = d.initial_crack_path();
    let rect = Rect::from_center(crack.tip(), side, side).intersection(&d.beam_rect());
    let pd_box = PDBox::new(rect, H_PD, DELTA).expect("valid box");
    generate_nodes(&pd_box, &d, &crack).expect("nodes")
}

pub fn cracked_space() -> (Arc<Cover>, Arc<EnrichedSpace>) {
    let d = domain();
    let cover = Arc::new(build_cover(&d, H_PUM, 1.3).expect("cover"));
    discretize(cover, Some(&d.initial_crack_path()))
}

pub fn bending() -> BoundaryConditions {
    BoundaryConditions::ThreePointBending {
        force: 9e5,
        supports: Supports::PinRoller,
    }
}
