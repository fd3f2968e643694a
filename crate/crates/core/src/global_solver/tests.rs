use super::*;
use crate::geometry::{build_case, CaseId, DomainSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn mat() -> MaterialParams {
    MaterialParams::pmma()
}

fn stretch() -> BoundaryConditions {
    BoundaryConditions::LinearField {
        u0: Vec2::zeros(),
        grad: Matrix2::new(1.0, 0.0, 0.0, 0.0),
    }
}

fn random_points(domain: &DomainSpec, n: usize, seed: u64) -> Vec<Vec2> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let beam = domain.beam_rect();
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let p = vec2(
            rng.gen_range(beam.min.x..=beam.max.x),
            rng.gen_range(beam.min.y..=beam.max.y),
        );
        if domain.contains(&p) {
            out.push(p);
        }
    }
    out
}

fn patch_test_error(domain: &DomainSpec, h: f64, bcs: &BoundaryConditions) -> f64 {
    let cover = Arc::new(build_cover(domain, h, DEFAULT_ALPHA).unwrap());
    let (cover, space) = discretize(cover, None);
    let sol = assemble_and_solve(cover, space, &mat(), bcs, DEFAULT_PENALTY, 1.0).unwrap();
    let BoundaryConditions::LinearField { u0, grad } = bcs else {
        unreachable!()
    };
    let pts = random_points(domain, 500, 3);
    let scale = pts.iter().map(|p| (u0 + grad * p).norm()).fold(0.0, f64::max);
    pts.iter()
        .map(|p| (sol.displacement(p, None).unwrap() - (u0 + grad * p)).norm() / scale)
        .fold(0.0, f64::max)
}

#[test]
fn patch_test_unit_square() {
    let d = super::cover::tests::square(1.0);
    let err = patch_test_error(&d, 0.25, &stretch());
    assert!(err < 1e-10, "relative error {err:e}");
}

#[test]
fn patch_test_beam_with_holes() {
    for id in CaseId::ALL {
        let d = build_case(id);
        let err = patch_test_error(&d, 0.0079375, &stretch());
        assert!(err < 1e-10, "case {id}: relative error {err:e}");
    }
}

#[test]
fn patch_test_general_linear_field() {
    let d = build_case(CaseId::III);
    let bcs = BoundaryConditions::LinearField {
        u0: vec2(1e-4, -2e-4),
        grad: Matrix2::new(1e-3, 2e-3, -5e-4, 3e-3),
    };
    let err = patch_test_error(&d, 0.0079375, &bcs);
    assert!(err < 1e-10, "relative error {err:e}");
}

#[test]
fn halving_h_keeps_exact_reproduction() {
    let d = build_case(CaseId::II);
    for h in [0.015875, 0.0079375, 0.00396875] {
        let err = patch_test_error(&d, h, &stretch());
        assert!(err < 1e-10, "h = {h}: relative error {err:e}");
    }
}

fn bending(supports: Supports) -> BoundaryConditions {
    BoundaryConditions::ThreePointBending { force: 9e5, supports }
}

#[test]
fn zero_load_gives_zero_solution() {
    let d = build_case(CaseId::I);
    let cover = Arc::new(build_cover(&d, 0.015875, DEFAULT_ALPHA).unwrap());
    let (cover, space) = discretize(cover, Some(&d.initial_crack_path()));
    let sys = GlobalSystem::new(cover, space, &mat(), &bending(Supports::PinRoller), DEFAULT_PENALTY).unwrap();
    let sol = sys.solution(0.0).unwrap();
    assert!(sol.coefficients.iter().all(|&c| c == 0.0));
    for p in random_points(&d, 100, 1) {
        assert_eq!(sol.displacement(&p, None).unwrap(), Vec2::zeros());
    }
    assert!(sys.solution(1.5).is_err());
}

#[test]
fn bending_deflects_downward_and_scales_linearly() {
    let d = build_case(CaseId::I);
    let cover = Arc::new(build_cover(&d, 0.015875, DEFAULT_ALPHA).unwrap());
    let (cover, space) = discretize(cover, None);
    let sys = GlobalSystem::new(cover, space, &mat(), &bending(Supports::PinRoller), DEFAULT_PENALTY).unwrap();
    let full = sys.solution(1.0).unwrap();
    let half = sys.solution(0.5).unwrap();
    let p = vec2(0.0, 0.0);
    let u1 = full.displacement(&p, None).unwrap();
    let u2 = half.displacement(&p, None).unwrap();
    assert!(u1.y < 0.0);
    assert!((u1 - 2.0 * u2).norm() <= 1e-15 * u1.norm());
    // Euler-Bernoulli midspan deflection F L^3 / (48 E' I) per unit thickness,
    // loose bound: the beam is deep, so shear adds to it.
    let span = d.length - 2.0 * d.support_inset;
    let e_plane = mat().young / (1.0 - mat().poisson * mat().poisson);
    let inertia = d.height.powi(3) / 12.0;
    let eb = 9e5 * span.powi(3) / (48.0 * e_plane * inertia);
    assert!(-u1.y > 0.8 * eb && -u1.y < 2.0 * eb, "{} vs {eb}", -u1.y);
}

#[test]
fn stiffness_is_symmetric_and_semidefinite() {
    let d = super::cover::tests::square(1.0);
    let cover = build_cover(&d, 0.25, DEFAULT_ALPHA).unwrap();
    let crack = CrackPath::new(vec![vec2(0.1, -0.5), vec2(0.05, 0.1)]).unwrap();
    let space = enrich_cracked_patches(&cover, Some(&crack));
    assert!(space.n_enriched() > 0);
    let asm = assemble(&cover, &space, &mat(), &bending(Supports::PinRoller), 0.0).unwrap();
    let n = asm.dofs.n_dofs;
    let mut k = nalgebra::DMatrix::zeros(n, n);
    for (r, c, v) in asm.triplets(&cover, &space) {
        k[(r, c)] = v;
    }
    let norm = k.amax();
    assert!((&k - k.transpose()).amax() <= 1e-12 * norm);
    let eig = nalgebra::SymmetricEigen::new(0.5 * (&k + k.transpose()));
    let min = eig.eigenvalues.min();
    assert!(min > -1e-10 * norm, "min eigenvalue {min:e}");
    // Exactly three rigid modes without supports.
    let zero = eig.eigenvalues.iter().filter(|&&l| l.abs() < 1e-10 * norm).count();
    assert_eq!(zero, 3);
}

#[test]
fn missing_supports_are_reported_as_singular() {
    let d = build_case(CaseId::I);
    let cover = Arc::new(build_cover(&d, 0.015875, DEFAULT_ALPHA).unwrap());
    let (cover, space) = discretize(cover, None);
    let r = GlobalSystem::new(cover.clone(), space.clone(), &mat(), &bending(Supports::PinRoller), 0.0);
    assert!(matches!(r, Err(Error::SingularSystem { null_dim: 3 })));
    let r = GlobalSystem::new(cover, space, &mat(), &bending(Supports::PinRoller), 1e-14);
    assert!(matches!(r, Err(Error::SingularSystem { .. })));
}

#[test]
fn partition_of_unity_with_enrichment() {
    let d = build_case(CaseId::II);
    let cover = Arc::new(build_cover(&d, 0.0079375, DEFAULT_ALPHA).unwrap());
    let crack = reference_like_crack(&d);
    let (cover, space) = discretize(cover, Some(&crack));
    assert!(space.n_enriched() > 0);
    let dofs = DofMap::new(&space);
    let mut coeffs = vec![0.0; dofs.n_dofs];
    for &off in &dofs.offsets {
        coeffs[off] = 1.0;
    }
    let sol = GlobalSolution::from_coefficients(cover, space, coeffs).unwrap();
    for p in random_points(&d, 10_000, 8) {
        let u = sol.displacement(&p, None).unwrap();
        assert!((u.x - 1.0).abs() < 1e-12 && u.y == 0.0);
    }
}

fn reference_like_crack(d: &DomainSpec) -> CrackPath {
    let [a, b] = d.initial_crack;
    CrackPath::new(vec![a, b, b + vec2(0.01, 0.03), b + vec2(0.025, 0.05)]).unwrap()
}

#[test]
fn enrichment_jumps_across_crack_and_not_ahead_of_tip() {
    let d = build_case(CaseId::I);
    let cover = Arc::new(build_cover(&d, 0.0079375, DEFAULT_ALPHA).unwrap());
    let crack = reference_like_crack(&d);
    let (cover, space) = discretize(cover, Some(&crack));
    let sys = GlobalSystem::new(cover, space, &mat(), &bending(Supports::PinRoller), DEFAULT_PENALTY).unwrap();
    let sol = sys.solution(1.0).unwrap();
    // Mirrored points across the first segment, well behind the tip.
    let [a, b] = d.initial_crack;
    let mid = 0.5 * (a + b);
    let e = 1e-7;
    let left = sol.displacement(&(mid - vec2(e, 0.0)), None).unwrap();
    let right = sol.displacement(&(mid + vec2(e, 0.0)), None).unwrap();
    let scale = left.norm().max(right.norm());
    assert!((left - right).norm() > 1e-3 * scale, "no jump: {left:?} {right:?}");
    // Mirrored points across the tip extension line, ahead of the tip.
    let tip = crack.tip();
    let t = crack.tip_direction();
    let n = vec2(-t.y, t.x);
    for ahead in [1e-4, 1e-3, 4e-3] {
        for off in [1e-9, 1e-6, 1e-4] {
            let p = tip + t * ahead + n * off;
            let q = tip + t * ahead - n * off;
            let (up, uq) = (sol.displacement(&p, None).unwrap(), sol.displacement(&q, None).unwrap());
            let grad_bound = 2.0 * off * 1e3 * scale;
            assert!(
                (up - uq).norm() <= grad_bound + 1e-10 * scale,
                "ahead {ahead} off {off}"
            );
        }
    }
    // The enrichment itself agrees exactly at mirrored points ahead of the tip.
    let step = &sol.space().enrichments[0];
    for ahead in [1e-9, 1e-6, 1e-3] {
        let p = tip + t * ahead + n * 1e-5;
        let q = tip + t * ahead - n * 1e-5;
        assert_eq!(step.eval(&p, None), step.eval(&q, None));
    }
}

#[test]
fn point_on_crack_needs_side_hint() {
    let d = build_case(CaseId::I);
    let cover = Arc::new(build_cover(&d, 0.015875, DEFAULT_ALPHA).unwrap());
    let crack = d.initial_crack_path();
    let (cover, space) = discretize(cover, Some(&crack));
    let sys = GlobalSystem::new(cover, space, &mat(), &bending(Supports::PinRoller), DEFAULT_PENALTY).unwrap();
    let sol = sys.solution(1.0).unwrap();
    let on = 0.5 * (crack.start() + crack.tip());
    assert!(matches!(sol.displacement(&on, None), Err(Error::OnCrack { .. })));
    let l = sol.displacement(&on, Some(1.0)).unwrap();
    let r = sol.displacement(&on, Some(-1.0)).unwrap();
    let e = 1e-9;
    let l2 = sol.displacement(&(on - vec2(e, 0.0)), None).unwrap();
    let r2 = sol.displacement(&(on + vec2(e, 0.0)), None).unwrap();
    assert!((l - l2).norm() < 1e-6 * l.norm());
    assert!((r - r2).norm() < 1e-6 * r.norm());
    assert!(matches!(
        sol.displacement(&vec2(1.0, 0.0), None),
        Err(Error::OutOfDomain { .. })
    ));
    let hole_free = build_case(CaseId::II);
    let c = hole_free.holes[0].center;
    let cover = Arc::new(build_cover(&hole_free, 0.015875, DEFAULT_ALPHA).unwrap());
    assert!(matches!(cover.weights(&c), Err(Error::OutOfDomain { .. })));
}

#[test]
fn symmetric_problem_gives_antisymmetric_horizontal_displacement() {
    let mut d = build_case(CaseId::I);
    let bottom = d.initial_crack[0].y;
    d.initial_crack = [vec2(0.0, bottom), vec2(0.0, bottom + 0.0254)];
    let cover = Arc::new(build_cover(&d, 0.0079375, DEFAULT_ALPHA).unwrap());
    let (cover, space) = discretize(cover, Some(&d.initial_crack_path()));
    let sys = GlobalSystem::new(cover, space, &mat(), &bending(Supports::PinPin), DEFAULT_PENALTY).unwrap();
    let sol = sys.solution(1.0).unwrap();
    let mut scale: f64 = 0.0;
    let mut worst: f64 = 0.0;
    for p in random_points(&d, 400, 4) {
        if p.x.abs() < 1e-6 {
            continue;
        }
        let q = vec2(-p.x, p.y);
        let (up, uq) = (sol.displacement(&p, None).unwrap(), sol.displacement(&q, None).unwrap());
        scale = scale.max(up.norm());
        worst = worst.max((up.x + uq.x).abs()).max((up.y - uq.y).abs());
    }
    assert!(worst <= 1e-8 * scale, "asymmetry {worst:e} vs {scale:e}");
}
