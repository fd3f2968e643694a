//! Linear elasticity on a partition-of-unity cover with bilinear local
//! spaces and a crack step enrichment.

mod assembly;
mod cover;
mod enrich;
mod quadrature;

pub use assembly::{assemble, Assembled, DofMap, NITSCHE};
pub use cover::{build_cover, Cover, Patch, Pu1d};
pub use enrich::{enrich_cracked_patches, EnrichedSpace, LocalSpace, StepEnrichment, MIN_SIDE_FRACTION};
pub use quadrature::MAX_DEPTH;

use crate::crack::CrackPath;
use crate::error::{Error, Result};
use crate::geom::{vec2, Vec2};
use crate::material::MaterialParams;
use nalgebra::Matrix2;
use std::sync::Arc;

/// Default ratio of patch width to patch spacing.
pub const DEFAULT_ALPHA: f64 = 1.3;
/// Default penalty factor: support springs get stiffness `penalty * E`.
pub const DEFAULT_PENALTY: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Supports {
    /// Pin on the left support, vertical roller on the right.
    PinRoller,
    /// Both supports pinned; keeps the problem mirror symmetric.
    PinPin,
}

impl std::fmt::Display for Supports {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Supports::PinRoller => "pin-roller",
            Supports::PinPin => "pin-pin",
        })
    }
}

impl std::str::FromStr for Supports {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "pin-roller" => Ok(Supports::PinRoller),
            "pin-pin" => Ok(Supports::PinPin),
            _ => Err(Error::param(
                "supports",
                format!("expected pin-roller or pin-pin, got `{s}`"),
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum BoundaryConditions {
    /// Point supports and a downward midspan load `force` (N per unit
    /// thickness) spread over a top strip of width `2 h_pum`.
    ThreePointBending { force: f64, supports: Supports },
    /// `u = u0 + grad x` imposed on the outer boundary by Nitsche's method;
    /// holes carry the matching traction.
    LinearField { u0: Vec2, grad: Matrix2<f64> },
}

/// Assembled and solved system for one crack configuration. Solutions for
/// other load factors are scaled copies.
pub struct GlobalSystem {
    cover: Arc<Cover>,
    space: Arc<EnrichedSpace>,
    dofs: Arc<DofMap>,
    unit: Vec<f64>,
    pub generic_cells: usize,
    pub quadrature_points: usize,
}

impl GlobalSystem {
    pub fn new(
        cover: Arc<Cover>,
        space: Arc<EnrichedSpace>,
        mat: &MaterialParams,
        bcs: &BoundaryConditions,
        penalty: f64,
    ) -> Result<GlobalSystem> {
        let asm = assemble(&cover, &space, mat, bcs, penalty)?;
        let unit = asm.solve(&cover, &space)?;
        log::debug!(
            "global system: {} DOFs, {} cut cells, {} quadrature points",
            asm.dofs.n_dofs,
            asm.generic_cells,
            asm.quadrature_points
        );
        Ok(GlobalSystem {
            cover,
            space,
            dofs: Arc::new(asm.dofs),
            unit,
            generic_cells: asm.generic_cells,
            quadrature_points: asm.quadrature_points,
        })
    }

    pub fn n_dofs(&self) -> usize {
        self.dofs.n_dofs
    }

    pub fn solution(&self, load_factor: f64) -> Result<GlobalSolution> {
        if !(0.0..=1.0).contains(&load_factor) {
            return Err(Error::param(
                "load_factor",
                format!("must lie in [0, 1], got {load_factor}"),
            ));
        }
        Ok(GlobalSolution {
            cover: self.cover.clone(),
            space: self.space.clone(),
            dofs: self.dofs.clone(),
            coefficients: self.unit.iter().map(|v| v * load_factor).collect(),
            load_factor,
        })
    }
}

/// Galerkin solution: coefficients of every patch function.
#[derive(Debug, Clone)]
pub struct GlobalSolution {
    cover: Arc<Cover>,
    space: Arc<EnrichedSpace>,
    dofs: Arc<DofMap>,
    pub coefficients: Vec<f64>,
    pub load_factor: f64,
}

impl GlobalSolution {
    /// Solution with given coefficients, for probing the basis.
    pub fn from_coefficients(cover: Arc<Cover>, space: Arc<EnrichedSpace>, coefficients: Vec<f64>) -> Result<Self> {
        let dofs = DofMap::new(&space);
        if coefficients.len() != dofs.n_dofs {
            return Err(Error::param(
                "coefficients",
                format!("expected {} values, got {}", dofs.n_dofs, coefficients.len()),
            ));
        }
        Ok(GlobalSolution {
            cover,
            space,
            dofs: Arc::new(dofs),
            coefficients,
            load_factor: 1.0,
        })
    }

    pub fn crack(&self) -> Option<&CrackPath> {
        self.space.crack()
    }

    pub fn cover(&self) -> &Cover {
        &self.cover
    }

    pub fn space(&self) -> &EnrichedSpace {
        &self.space
    }

    pub fn dofs(&self) -> &DofMap {
        &self.dofs
    }

    /// Displacement at `p`. `side` selects the limit when `p` lies on the
    /// crack; it is ignored elsewhere.
    pub fn displacement(&self, p: &Vec2, side: Option<f64>) -> Result<Vec2> {
        let h = self.cover.h;
        let mut u = Vec2::zeros();
        for (k, phi, _) in self.cover.weights(p)? {
            let patch = &self.cover.patches[k];
            let (xi, eta) = ((p.x - patch.center.x) / h, (p.y - patch.center.y) / h);
            let off = self.dofs.offsets[k];
            let c = &self.coefficients[off..];
            let mut local =
                vec2(c[0], c[1]) + vec2(c[2], c[3]) * xi + vec2(c[4], c[5]) * eta + vec2(c[6], c[7]) * (xi * eta);
            for (t, &e) in self.space.spaces[k].enrichments.iter().enumerate() {
                let step = &self.space.enrichments[e];
                let (v, _) = match step.eval(p, None) {
                    Some(v) => v,
                    None => match side {
                        Some(s) => step.eval(p, Some(s.signum())).expect("explicit sign"),
                        None => return Err(Error::OnCrack { x: p.x, y: p.y }),
                    },
                };
                let base = 2 * (LocalSpace::POLY + t);
                local += vec2(c[base], c[base + 1]) * v;
            }
            u += local * phi;
        }
        Ok(u)
    }
}

/// Crack-aware discretization: cover plus local spaces.
pub fn discretize(cover: Arc<Cover>, crack: Option<&CrackPath>) -> (Arc<Cover>, Arc<EnrichedSpace>) {
    let space = Arc::new(enrich_cracked_patches(&cover, crack));
    (cover, space)
}

/// Assembles, factorizes and solves for one load factor.
pub fn assemble_and_solve(
    cover: Arc<Cover>,
    space: Arc<EnrichedSpace>,
    mat: &MaterialParams,
    bcs: &BoundaryConditions,
    penalty: f64,
    load_factor: f64,
) -> Result<GlobalSolution> {
    GlobalSystem::new(cover, space, mat, bcs, penalty)?.solution(load_factor)
}

pub fn evaluate_displacement(solution: &GlobalSolution, points: &[Vec2]) -> Result<Vec<Vec2>> {
    points.iter().map(|p| solution.displacement(p, None)).collect()
}

/// Like [`evaluate_displacement`] with a per-point side hint for points
/// on the crack.
pub fn evaluate_displacement_with_sides(
    solution: &GlobalSolution,
    points: &[Vec2],
    sides: &[Option<f64>],
) -> Result<Vec<Vec2>> {
    if sides.len() != points.len() {
        return Err(Error::param("sides", "one hint per point"));
    }
    points
        .iter()
        .zip(sides)
        .map(|(p, s)| solution.displacement(p, *s))
        .collect()
}

#[cfg(test)]
mod tests;
