//! Constitutive kernels of the bond-based softening model.
//!
//! All functions are pure. Forces are pairwise force densities per unit
//! volume squared; multiply by the partner's nodal volume to get a nodal
//! force density.

use crate::error::{Error, Result};
use crate::geom::Vec2;
use crate::material::MaterialParams;
use std::f64::consts::PI;

/// Interaction radius and the area of the 2D horizon disc.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HorizonGeometry {
    pub delta: f64,
    pub measure: f64,
}

impl HorizonGeometry {
    pub fn new(delta: f64) -> Result<Self> {
        if !(delta > 0.0) || !delta.is_finite() {
            return Err(Error::param("delta", format!("must be positive, got {delta}")));
        }
        Ok(HorizonGeometry {
            delta,
            measure: PI * delta * delta,
        })
    }

    /// `delta * |B_delta(0)|`, the normalization of the force potential.
    #[inline]
    pub fn normalization(&self) -> f64 {
        self.delta * self.measure
    }
}

/// Reference bond with its softening history.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bond {
    pub dx: Vec2,
    pub length: f64,
    pub softened: bool,
}

impl Bond {
    pub fn new(dx: Vec2) -> Result<Self> {
        let length = dx.norm();
        if !(length > 0.0) {
            return Err(Error::DegenerateBond);
        }
        Ok(Bond {
            dx,
            length,
            softened: false,
        })
    }

    pub fn reversed(&self) -> Bond {
        Bond { dx: -self.dx, ..*self }
    }
}

pub fn unit_bond_vector(dx: &Vec2) -> Result<Vec2> {
    let n = dx.norm();
    if !(n > 0.0) {
        return Err(Error::DegenerateBond);
    }
    Ok(dx / n)
}

/// Relative elongation of the bond projected on its reference direction.
pub fn bond_stretch(dx: &Vec2, du: &Vec2) -> Result<f64> {
    let len2 = dx.norm_squared();
    if !(len2 > 0.0) {
        return Err(Error::DegenerateBond);
    }
    Ok(du.dot(dx) / len2)
}

/// Piecewise constant influence function, 1 on `[0, delta)`.
#[inline]
pub fn influence(r: f64, horizon: &HorizonGeometry) -> f64 {
    if (0.0..horizon.delta).contains(&r) {
        1.0
    } else {
        0.0
    }
}

/// `g(r) = C (1 - exp(-beta r))`.
#[inline]
pub fn double_well(r: f64, c: f64, beta: f64) -> f64 {
    c * -(-beta * r).exp_m1()
}

/// Derivative of the pair potential with respect to the stretch.
pub fn potential_derivative(bond: &Bond, stretch: f64, mat: &MaterialParams, horizon: &HorizonGeometry) -> f64 {
    potential_derivative_raw(bond.length, stretch, mat.c, mat.beta, horizon)
}

#[inline]
pub(crate) fn potential_derivative_raw(length: f64, stretch: f64, c: f64, beta: f64, horizon: &HorizonGeometry) -> f64 {
    let j = influence(length, horizon);
    if j == 0.0 {
        return 0.0;
    }
    j * 2.0 * c * beta * length * stretch * (-beta * length * stretch * stretch).exp() / horizon.normalization()
}

/// Pairwise force density acting on the bond's origin, directed along the
/// reference bond.
pub fn pair_force_density(bond: &Bond, du: &Vec2, mat: &MaterialParams, horizon: &HorizonGeometry) -> Result<Vec2> {
    let e = unit_bond_vector(&bond.dx)?;
    let s = bond_stretch(&bond.dx, du)?;
    let ds = potential_derivative(bond, s, mat, horizon);
    Ok(e * (ds / bond.length))
}

/// Stretch at which the pair force magnitude peaks: `1 / sqrt(2 beta L)`.
#[inline]
pub fn critical_stretch(length: f64, beta: f64) -> f64 {
    1.0 / (2.0 * beta * length).sqrt()
}

/// Fraction of softened bonds.
pub fn node_damage(bonds: &[Bond]) -> Result<f64> {
    if bonds.is_empty() {
        return Err(Error::UndefinedDamage { node: usize::MAX });
    }
    let softened = bonds.iter().filter(|b| b.softened).count();
    Ok(softened as f64 / bonds.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::vec2;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    /// C = 1, beta = 6: Gc = 4/pi and E = 1.
    fn unit_material() -> MaterialParams {
        MaterialParams::new(1.0, crate::material::POISSON_RATIO, 4.0 / PI, 1.0).unwrap()
    }

    #[test]
    fn unit_vectors() {
        assert_eq!(unit_bond_vector(&vec2(2.0, 0.0)).unwrap(), vec2(1.0, 0.0));
        let e = unit_bond_vector(&vec2(1.0, 1.0)).unwrap();
        assert_relative_eq!(e.x, 0.5f64.sqrt(), epsilon = 1e-15);
        assert_relative_eq!(e.y, 0.5f64.sqrt(), epsilon = 1e-15);
        assert!(matches!(unit_bond_vector(&vec2(0.0, 0.0)), Err(Error::DegenerateBond)));
    }

    #[test]
    fn stretch_examples() {
        let dx = vec2(1.0, 0.0);
        assert_relative_eq!(bond_stretch(&dx, &vec2(0.02, 0.0)).unwrap(), 0.02);
        assert_eq!(bond_stretch(&dx, &vec2(0.0, 0.02)).unwrap(), 0.0);
        let u = vec2(0.3, -0.7);
        assert_eq!(bond_stretch(&dx, &(u - u)).unwrap(), 0.0);
        assert!(bond_stretch(&vec2(0.0, 0.0), &dx).is_err());
    }

    #[test]
    fn influence_cutoff_is_strict() {
        let h = HorizonGeometry::new(2.0).unwrap();
        assert_eq!(influence(1.0, &h), 1.0);
        assert_eq!(influence(0.0, &h), 1.0);
        assert_eq!(influence(2.0, &h), 0.0);
        assert_eq!(influence(2.2, &h), 0.0);
        assert_relative_eq!(h.measure, PI * 4.0, max_relative = 1e-12);
    }

    #[test]
    fn double_well_examples() {
        assert_eq!(double_well(0.0, 3.0, 2.0), 0.0);
        assert!((double_well(22.0, 1.0, 1.0) - 1.0).abs() < 1e-9);
        // 1 - e^{-1} to 17 digits
        assert_relative_eq!(
            double_well(1.0, 1.0, 1.0),
            0.632_120_558_828_557_7,
            max_relative = 1e-15
        );
    }

    #[test]
    fn potential_derivative_hand_value() {
        let mat = unit_material();
        let h = HorizonGeometry::new(1.0).unwrap();
        let bond = Bond::new(vec2(1.0 / 12.0, 0.0)).unwrap();
        assert_eq!(potential_derivative(&bond, 0.0, &mat, &h), 0.0);
        // beta |dx| S^2 = 1/2, bracket = 2*6*(1/12)*e^{-1/2}
        let expect = (-0.5f64).exp() / PI;
        assert_relative_eq!(potential_derivative(&bond, 1.0, &mat, &h), expect, max_relative = 1e-14);
        assert_relative_eq!(expect, 0.193_064, max_relative = 1e-5);
        let long = Bond::new(vec2(1.5, 0.0)).unwrap();
        assert_eq!(potential_derivative(&long, 0.3, &mat, &h), 0.0);
    }

    #[test]
    fn pair_force_hand_value() {
        let mat = unit_material();
        let h = HorizonGeometry::new(1.0).unwrap();
        let bond = Bond::new(vec2(1.0 / 12.0, 0.0)).unwrap();
        // S = 1 requires du = dx
        let f = pair_force_density(&bond, &vec2(1.0 / 12.0, 0.0), &mat, &h).unwrap();
        assert_relative_eq!(f.x, 12.0 * (-0.5f64).exp() / PI, max_relative = 1e-14);
        assert_relative_eq!(f.x, 2.316_77, max_relative = 1e-5);
        assert_eq!(f.y, 0.0);
        let zero = pair_force_density(&bond, &vec2(0.0, 0.0), &mat, &h).unwrap();
        assert_eq!(zero, vec2(0.0, 0.0));
    }

    /// Golden-section maximization of `S -> |f(S)|` as an independent
    /// check of the closed-form critical stretch.
    fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
        let g = (5f64.sqrt() - 1.0) / 2.0;
        let mut c = b - g * (b - a);
        let mut d = a + g * (b - a);
        while (b - a).abs() > 1e-13 * b.abs().max(1.0) {
            if f(c) > f(d) {
                b = d;
            } else {
                a = c;
            }
            c = b - g * (b - a);
            d = a + g * (b - a);
        }
        0.5 * (a + b)
    }

    #[test]
    fn critical_stretch_examples() {
        assert_relative_eq!(critical_stretch(0.5, 1.0), 1.0, max_relative = 1e-15);
        assert_relative_eq!(critical_stretch(1.0, 2.0), 0.5, max_relative = 1e-15);
    }

    #[test]
    fn critical_stretch_matches_golden_section() {
        let mat = MaterialParams::pmma();
        let h = HorizonGeometry::new(0.004).unwrap();
        for len in [0.0005, 0.001, 0.002, 0.0039] {
            let bond = Bond::new(vec2(len, 0.0)).unwrap();
            let sc = critical_stretch(len, mat.beta);
            let mag = |s: f64| pair_force_density(&bond, &vec2(s * len, 0.0), &mat, &h).unwrap().norm();
            let s_star = golden_max(mag, 0.0, 5.0 * sc);
            assert!((s_star - sc).abs() < 1e-8, "len {len}: {s_star} vs {sc}");
        }
    }

    #[test]
    fn softening_branch_is_strictly_decreasing() {
        let mat = MaterialParams::pmma();
        let h = HorizonGeometry::new(0.004).unwrap();
        let len = 0.002;
        let bond = Bond::new(vec2(0.0, len)).unwrap();
        let sc = critical_stretch(len, mat.beta);
        let mut prev = f64::INFINITY;
        for k in 1..200 {
            let s = sc * (1.0 + 0.02 * k as f64);
            let m = pair_force_density(&bond, &vec2(0.0, s * len), &mat, &h).unwrap().norm();
            assert!(m < prev);
            prev = m;
        }
    }

    #[test]
    fn damage_counts_softened_bonds() {
        let mut bonds: Vec<Bond> = (1..=8).map(|k| Bond::new(vec2(k as f64, 1.0)).unwrap()).collect();
        assert_eq!(node_damage(&bonds).unwrap(), 0.0);
        for b in bonds.iter_mut().take(3) {
            b.softened = true;
        }
        assert_eq!(node_damage(&bonds).unwrap(), 0.375);
        for b in bonds.iter_mut() {
            b.softened = true;
        }
        assert_eq!(node_damage(&bonds).unwrap(), 1.0);
        assert!(matches!(node_damage(&[]), Err(Error::UndefinedDamage { .. })));
    }

    proptest! {
        #[test]
        fn reversal_flips_force_exactly(
            dx in (-1e-2f64..1e-2, -1e-2f64..1e-2),
            du in (-1e-5f64..1e-5, -1e-5f64..1e-5),
        ) {
            prop_assume!(dx.0.abs() + dx.1.abs() > 1e-6);
            let mat = MaterialParams::pmma();
            let h = HorizonGeometry::new(0.02).unwrap();
            let bond = Bond::new(vec2(dx.0, dx.1)).unwrap();
            let du = vec2(du.0, du.1);
            let f = pair_force_density(&bond, &du, &mat, &h).unwrap();
            let g = pair_force_density(&bond.reversed(), &-du, &mat, &h).unwrap();
            prop_assert_eq!(f, -g);
        }

        #[test]
        fn translation_leaves_force_unchanged(
            ui in (-1i64 << 30..1i64 << 30, -1i64 << 30..1i64 << 30),
            uj in (-1i64 << 30..1i64 << 30, -1i64 << 30..1i64 << 30),
            shift in (-1i64 << 20..1i64 << 20, -1i64 << 20..1i64 << 20),
        ) {
            // Dyadic values keep every sum exact, so invariance is bitwise.
            let q = |k: i64, e: i32| k as f64 * 2f64.powi(e);
            let mat = MaterialParams::pmma();
            let h = HorizonGeometry::new(0.02).unwrap();
            let bond = Bond::new(vec2(0.003, -0.004)).unwrap();
            let ui = vec2(q(ui.0, -40), q(ui.1, -40));
            let uj = vec2(q(uj.0, -40), q(uj.1, -40));
            let t = vec2(q(shift.0, -20), q(shift.1, -20));
            let a = pair_force_density(&bond, &(uj - ui), &mat, &h).unwrap();
            let b = pair_force_density(&bond, &((uj + t) - (ui + t)), &mat, &h).unwrap();
            prop_assert_eq!(a, b);
        }

        #[test]
        fn small_strain_tangent(len_frac in 0.05f64..0.99, frac in 1e-6f64..1e-4) {
            let mat = MaterialParams::pmma();
            let h = HorizonGeometry::new(0.004).unwrap();
            let len = len_frac * h.delta;
            let bond = Bond::new(vec2(len, 0.0)).unwrap();
            let s = frac * critical_stretch(len, mat.beta);
            let f = pair_force_density(&bond, &vec2(s * len, 0.0), &mat, &h).unwrap();
            let tangent = 2.0 * mat.c * mat.beta * s / (h.delta * h.measure);
            prop_assert!(((f.norm() - tangent) / tangent).abs() < 1e-6);
        }

        #[test]
        fn bonds_beyond_horizon_carry_nothing(factor in 1.0f64..3.0, s in -1e-2f64..1e-2) {
            let mat = MaterialParams::pmma();
            let h = HorizonGeometry::new(0.004).unwrap();
            let bond = Bond::new(vec2(0.0, factor * h.delta)).unwrap();
            let du = vec2(0.0, s * bond.length);
            prop_assert_eq!(pair_force_density(&bond, &du, &mat, &h).unwrap(), vec2(0.0, 0.0));
        }
    }
}
