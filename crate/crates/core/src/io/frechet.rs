use crate::geom::Vec2;

/// Discrete Fréchet distance between two vertex sequences.
pub fn frechet_distance(a: &[Vec2], b: &[Vec2]) -> f64 {
    assert!(!a.is_empty() && !b.is_empty(), "paths need at least one vertex");
    let m = b.len();
    let mut prev = vec![0.0f64; m];
    let mut cur = vec![0.0; m];
    for (i, p) in a.iter().enumerate() {
        for (j, q) in b.iter().enumerate() {
            let d = (p - q).norm();
            cur[j] = match (i, j) {
                (0, 0) => d,
                (0, _) => cur[j - 1].max(d),
                (_, 0) => prev[0].max(d),
                _ => prev[j].min(prev[j - 1]).min(cur[j - 1]).max(d),
            };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[m - 1]
}

/// Fréchet distance after inserting vertices so that no segment is
/// longer than `step`; approaches the continuous distance as `step`
/// shrinks.
pub fn densified_frechet(a: &[Vec2], b: &[Vec2], step: f64) -> f64 {
    frechet_distance(&densify(a, step), &densify(b, step))
}

pub fn densify(points: &[Vec2], step: f64) -> Vec<Vec2> {
    let mut out = vec![points[0]];
    for w in points.windows(2) {
        let n = ((w[1] - w[0]).norm() / step).ceil().max(1.0) as usize;
        for k in 1..=n {
            out.push(w[0] + (w[1] - w[0]) * (k as f64 / n as f64));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::vec2;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn hand_values() {
        let a = [vec2(0.0, 0.0), vec2(1.0, 0.0)];
        let b = [vec2(0.0, 1.0), vec2(1.0, 1.0)];
        assert_eq!(frechet_distance(&a, &b), 1.0);
        assert_eq!(frechet_distance(&a, &a), 0.0);
        assert_eq!(frechet_distance(&[vec2(0.0, 0.0)], &[vec2(3.0, 4.0)]), 5.0);
    }

    fn random_path(rng: &mut ChaCha8Rng) -> Vec<Vec2> {
        let n = rng.gen_range(1..8);
        (0..n)
            .map(|_| vec2(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect()
    }

    #[test]
    fn triangle_inequality() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let (a, b, c) = (random_path(&mut rng), random_path(&mut rng), random_path(&mut rng));
            let ab = frechet_distance(&a, &b);
            let bc = frechet_distance(&b, &c);
            let ac = frechet_distance(&a, &c);
            assert!(ac <= ab + bc + 1e-12);
        }
    }

    proptest! {
        #[test]
        fn symmetric_and_zero_iff_equal(seed in 0u64..10_000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = random_path(&mut rng);
            let b = random_path(&mut rng);
            let ab = frechet_distance(&a, &b);
            prop_assert_eq!(ab, frechet_distance(&b, &a));
            prop_assert!(ab >= 0.0);
            prop_assert_eq!(frechet_distance(&a, &a), 0.0);
            if ab == 0.0 {
                let dedup = |p: &[Vec2]| { let mut v = p.to_vec(); v.dedup(); v };
                prop_assert_eq!(dedup(&a), dedup(&b));
            }
        }
    }
}
