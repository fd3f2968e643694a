use crate::geom::Vec2;

#[inline]
pub(crate) fn within(a: &Vec2, b: &Vec2, delta: f64) -> bool {
    let r = (b - a).norm();
    r > 0.0 && r < delta
}

/// All pairs closer than `delta` via a uniform grid of cell size `delta`.
/// Each list is sorted by neighbor index.
pub fn build_neighbor_lists(positions: &[Vec2], delta: f64) -> Vec<Vec<usize>> {
    let n = positions.len();
    if n == 0 {
        return Vec::new();
    }
    let (mut lo, mut hi) = (positions[0], positions[0]);
    for p in positions {
        lo = lo.inf(p);
        hi = hi.sup(p);
    }
    let cell = |v: f64, o: f64| ((v - o) / delta).floor() as usize;
    let nx = cell(hi.x, lo.x) + 1;
    let ny = cell(hi.y, lo.y) + 1;
    let mut head = vec![0usize; nx * ny + 1];
    let key = |p: &Vec2| cell(p.y, lo.y).min(ny - 1) * nx + cell(p.x, lo.x).min(nx - 1);
    for p in positions {
        head[key(p) + 1] += 1;
    }
    for k in 0..nx * ny {
        head[k + 1] += head[k];
    }
    let mut fill = head.clone();
    let mut members = vec![0usize; n];
    for (i, p) in positions.iter().enumerate() {
        let k = key(p);
        members[fill[k]] = i;
        fill[k] += 1;
    }
    positions
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let cx = cell(p.x, lo.x).min(nx - 1);
            let cy = cell(p.y, lo.y).min(ny - 1);
            let mut out = Vec::new();
            for gy in cy.saturating_sub(1)..=(cy + 1).min(ny - 1) {
                for gx in cx.saturating_sub(1)..=(cx + 1).min(nx - 1) {
                    let k = gy * nx + gx;
                    for &j in &members[head[k]..head[k + 1]] {
                        if j != i && within(p, &positions[j], delta) {
                            out.push(j);
                        }
                    }
                }
            }
            out.sort_unstable();
            out
        })
        .collect()
}

#[cfg(test)]
pub(crate) fn brute_force_neighbors(positions: &[Vec2], delta: f64) -> Vec<Vec<usize>> {
    (0..positions.len())
        .map(|i| {
            (0..positions.len())
                .filter(|&j| j != i && within(&positions[i], &positions[j], delta))
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::vec2;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn pair_inside_and_at_horizon() {
        let d = 0.3;
        let l = build_neighbor_lists(&[vec2(0.0, 0.0), vec2(0.15, 0.0)], d);
        assert_eq!(l, vec![vec![1], vec![0]]);
        let l = build_neighbor_lists(&[vec2(0.0, 0.0), vec2(0.25, 0.0)], 0.25);
        assert_eq!(l, vec![Vec::<usize>::new(), Vec::new()]);
    }

    #[test]
    fn random_clouds_match_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let pts: Vec<Vec2> = (0..200)
                .map(|_| vec2(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                .collect();
            let delta = rng.gen_range(0.05..0.5);
            assert_eq!(build_neighbor_lists(&pts, delta), brute_force_neighbors(&pts, delta));
        }
    }

    #[test]
    fn lattice_at_exact_horizon() {
        // Integer lattice with delta = 3: pairs at distance exactly 3 are excluded.
        let pts: Vec<Vec2> = (0..100).map(|k| vec2((k % 10) as f64, (k / 10) as f64)).collect();
        let l = build_neighbor_lists(&pts, 3.0);
        assert_eq!(l, brute_force_neighbors(&pts, 3.0));
        assert!(!l[0].contains(&3));
        assert!(l[0].contains(&22));
    }

    proptest! {
        #[test]
        fn symmetric_adjacency(seed in 0u64..1000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let pts: Vec<Vec2> = (0..60)
                .map(|_| vec2(rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0)))
                .collect();
            let l = build_neighbor_lists(&pts, 0.2);
            for (i, ns) in l.iter().enumerate() {
                for &j in ns {
                    prop_assert!(l[j].binary_search(&i).is_ok());
                }
            }
        }
    }
}
