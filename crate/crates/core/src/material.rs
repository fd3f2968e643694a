//! Material constants and the closed-form maps between engineering
//! constants and the bond-based softening model.

use crate::error::{Error, Result};
use std::f64::consts::PI;

/// Poisson's ratio admissible for bond-based peridynamics in plane strain.
pub const POISSON_RATIO: f64 = 1.0 / 3.0;

/// Elastic and fracture constants plus the derived model constants.
///
/// Immutable after construction; Poisson's ratio is pinned to 1/3.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaterialParams {
    /// Young's modulus (Pa).
    pub young: f64,
    /// Poisson's ratio, always 1/3.
    pub poisson: f64,
    /// Critical energy release rate (J/m²).
    pub fracture_energy: f64,
    /// Mass density (kg/m³).
    pub density: f64,
    /// Amplitude of the double-well potential (J/m²).
    pub c: f64,
    /// Softening exponent (1/m).
    pub beta: f64,
    /// First Lamé constant (Pa).
    pub lambda: f64,
    /// Shear modulus (Pa).
    pub mu: f64,
}

impl MaterialParams {
    pub fn new(young: f64, poisson: f64, fracture_energy: f64, density: f64) -> Result<Self> {
        if poisson != POISSON_RATIO {
            return Err(Error::param(
                "poisson",
                format!("bond-based plane strain requires 1/3, got {poisson}"),
            ));
        }
        if !(density > 0.0) || !density.is_finite() {
            return Err(Error::param("density", format!("must be positive, got {density}")));
        }
        let (c, beta) = derive_pd_constants(young, fracture_energy)?;
        let (lambda, mu) = lame_constants(young, poisson)?;
        Ok(MaterialParams {
            young,
            poisson,
            fracture_energy,
            density,
            c,
            beta,
            lambda,
            mu,
        })
    }

    /// PMMA-like constants used by the shipped configurations. These are
    /// not measured values for the benchmark specimens.
    pub fn pmma() -> Self {
        MaterialParams::new(3.2e9, POISSON_RATIO, 300.0, 1190.0).expect("valid constants")
    }
}

/// Returns `(C, beta)` for the given Young's modulus and energy release
/// rate with Poisson's ratio fixed at 1/3.
pub fn derive_pd_constants(young: f64, fracture_energy: f64) -> Result<(f64, f64)> {
    if !(young > 0.0) || !young.is_finite() {
        return Err(Error::param("young", format!("must be positive, got {young}")));
    }
    if !(fracture_energy > 0.0) || !fracture_energy.is_finite() {
        return Err(Error::param(
            "fracture_energy",
            format!("must be positive, got {fracture_energy}"),
        ));
    }
    let nu = POISSON_RATIO;
    let c = PI * fracture_energy / 4.0;
    let beta = 4.0 * young * nu / (c * (1.0 - nu) * (1.0 - 2.0 * nu));
    Ok((c, beta))
}

/// Isotropic conversion to `(lambda, mu)`.
pub fn lame_constants(young: f64, poisson: f64) -> Result<(f64, f64)> {
    if !(young > 0.0) || !young.is_finite() {
        return Err(Error::param("young", format!("must be positive, got {young}")));
    }
    if !(poisson > 0.0 && poisson < 0.5) {
        return Err(Error::param("poisson", format!("must lie in (0, 1/2), got {poisson}")));
    }
    let lambda = young * poisson / ((1.0 + poisson) * (1.0 - 2.0 * poisson));
    let mu = young / (2.0 * (1.0 + poisson));
    Ok((lambda, mu))
}

/// Inverse of [`lame_constants`]: `(E, nu)` from `(lambda, mu)`.
pub fn young_poisson_from_lame(lambda: f64, mu: f64) -> (f64, f64) {
    let young = mu * (3.0 * lambda + 2.0 * mu) / (lambda + mu);
    let poisson = lambda / (2.0 * (lambda + mu));
    (young, poisson)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn unit_amplitude_from_energy_release_rate() {
        let (c, _) = derive_pd_constants(123.0, 4.0 / PI).unwrap();
        assert_relative_eq!(c, 1.0, max_relative = 1e-15);
    }

    #[test]
    fn beta_hand_value() {
        // beta = 4 E (1/3) / (C (2/3)(1/3)) = 6 E / C with E = C = 1
        let (_, beta) = derive_pd_constants(1.0, 4.0 / PI).unwrap();
        assert_relative_eq!(beta, 6.0, max_relative = 1e-14);
    }

    #[test]
    fn non_positive_inputs_rejected() {
        assert!(matches!(
            derive_pd_constants(0.0, 1.0),
            Err(Error::InvalidParameter { name: "young", .. })
        ));
        assert!(derive_pd_constants(1.0, -1.0).is_err());
        assert!(MaterialParams::new(1.0, POISSON_RATIO, 1.0, 0.0).is_err());
    }

    #[test]
    fn lame_hand_values() {
        let (l, m) = lame_constants(1.0, 1.0 / 3.0).unwrap();
        assert_relative_eq!(l, 0.75, max_relative = 1e-14);
        assert_relative_eq!(m, 0.375, max_relative = 1e-14);
        for nu in [0.1, 0.25, 0.4] {
            let (_, m) = lame_constants(2.0 * (1.0 + nu), nu).unwrap();
            assert_relative_eq!(m, 1.0, max_relative = 1e-15);
        }
        assert!(lame_constants(1.0, 0.5).is_err());
    }

    #[test]
    fn poisson_other_than_one_third_rejected() {
        assert!(MaterialParams::new(1.0, 0.3, 1.0, 1.0).is_err());
        let m = MaterialParams::pmma();
        assert_eq!(m.poisson, POISSON_RATIO);
    }

    proptest! {
        #[test]
        fn lame_round_trip(young in 1e-3f64..1e12, poisson in 0.01f64..0.49) {
            let (l, m) = lame_constants(young, poisson).unwrap();
            let (e, nu) = young_poisson_from_lame(l, m);
            prop_assert!(((e - young) / young).abs() < 1e-12);
            prop_assert!(((nu - poisson) / poisson).abs() < 1e-12);
        }

        #[test]
        fn beta_times_c_is_six_e(young in 1e-3f64..1e12, gc in 1e-3f64..1e6) {
            let (c, beta) = derive_pd_constants(young, gc).unwrap();
            prop_assert!(((beta * c - 6.0 * young) / (6.0 * young)).abs() < 1e-12);
        }
    }
}
