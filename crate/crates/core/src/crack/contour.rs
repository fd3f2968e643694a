use crate::error::{Error, Result};
use crate::geom::{vec2, Vec2};
use crate::pd_solver::PDState;

/// Damage sampled on a regular grid. `values[j * nx + i]` belongs to the
/// point `origin + spacing * (i, j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DamageGrid {
    pub origin: Vec2,
    pub spacing: f64,
    pub nx: usize,
    pub ny: usize,
    pub values: Vec<f64>,
}

impl DamageGrid {
    pub fn new(origin: Vec2, spacing: f64, nx: usize, ny: usize, values: Vec<f64>) -> Result<Self> {
        if !(spacing > 0.0) {
            return Err(Error::param("spacing", "must be positive"));
        }
        if values.len() != nx * ny || nx < 2 || ny < 2 {
            return Err(Error::param("values", "grid needs at least 2x2 points"));
        }
        if values.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::param("values", "damage must lie in [0, 1]"));
        }
        Ok(DamageGrid {
            origin,
            spacing,
            nx,
            ny,
            values,
        })
    }

    /// Grid filled from a function of position.
    pub fn from_fn(origin: Vec2, spacing: f64, nx: usize, ny: usize, f: impl Fn(Vec2) -> f64) -> Result<Self> {
        let values = (0..nx * ny)
            .map(|k| f(origin + vec2((k % nx) as f64, (k / nx) as f64) * spacing))
            .collect();
        DamageGrid::new(origin, spacing, nx, ny, values)
    }

    #[inline]
    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[j * self.nx + i]
    }

    #[inline]
    pub fn point(&self, i: usize, j: usize) -> Vec2 {
        self.origin + vec2(i as f64, j as f64) * self.spacing
    }

    /// Bilinear interpolation, zero outside the grid.
    pub fn sample(&self, p: &Vec2) -> f64 {
        let s = (p - self.origin) / self.spacing;
        if !(s.x >= 0.0 && s.y >= 0.0) {
            return 0.0;
        }
        let (i, j) = (s.x.floor() as usize, s.y.floor() as usize);
        if i + 1 >= self.nx || j + 1 >= self.ny {
            return 0.0;
        }
        let (fx, fy) = (s.x - i as f64, s.y - j as f64);
        let v00 = self.value(i, j);
        let v10 = self.value(i + 1, j);
        let v01 = self.value(i, j + 1);
        let v11 = self.value(i + 1, j + 1);
        (v00 * (1.0 - fx) + v10 * fx) * (1.0 - fy) + (v01 * (1.0 - fx) + v11 * fx) * fy
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }
}

/// Inverse-distance average of nodal damage over nodes within one grid
/// spacing of each grid point. Points without nearby nodes get zero.
pub fn resample_damage(state: &PDState, spacing: f64) -> Result<DamageGrid> {
    let damage = state.damage()?;
    resample_nodal(&state.positions, &damage, spacing)
}

pub fn resample_nodal(positions: &[Vec2], damage: &[f64], spacing: f64) -> Result<DamageGrid> {
    if positions.is_empty() {
        return Err(Error::EmptyDomain);
    }
    if !(spacing > 0.0) {
        return Err(Error::param("spacing", "must be positive"));
    }
    let (mut lo, mut hi) = (positions[0], positions[0]);
    for p in positions {
        lo = lo.inf(p);
        hi = hi.sup(p);
    }
    let nx = ((hi.x - lo.x) / spacing).ceil() as usize + 1;
    let ny = ((hi.y - lo.y) / spacing).ceil() as usize + 1;
    let (nx, ny) = (nx.max(2), ny.max(2));
    // Bucket nodes by the grid cell containing them.
    let mut buckets: Vec<Vec<usize>> = vec![Vec::new(); nx * ny];
    for (k, p) in positions.iter().enumerate() {
        let i = (((p.x - lo.x) / spacing).floor() as usize).min(nx - 1);
        let j = (((p.y - lo.y) / spacing).floor() as usize).min(ny - 1);
        buckets[j * nx + i].push(k);
    }
    let mut values = vec![0.0; nx * ny];
    for j in 0..ny {
        for i in 0..nx {
            let g = lo + vec2(i as f64, j as f64) * spacing;
            let (mut wsum, mut vsum) = (0.0, 0.0);
            let mut exact = None;
            for bj in j.saturating_sub(1)..=(j + 1).min(ny - 1) {
                for bi in i.saturating_sub(1)..=(i + 1).min(nx - 1) {
                    for &k in &buckets[bj * nx + bi] {
                        let d = (positions[k] - g).norm();
                        if d < 1e-12 * spacing {
                            exact = Some(damage[k]);
                        } else if d < spacing {
                            wsum += 1.0 / d;
                            vsum += damage[k] / d;
                        }
                    }
                }
            }
            values[j * nx + i] = match exact {
                Some(v) => v,
                None if wsum > 0.0 => (vsum / wsum).clamp(0.0, 1.0),
                None => 0.0,
            };
        }
    }
    DamageGrid::new(lo, spacing, nx, ny, values)
}

/// Iso-line polyline. Closed contours repeat no vertex; the closing
/// segment is implied.
#[derive(Debug, Clone, PartialEq)]
pub struct Contour {
    pub points: Vec<Vec2>,
    pub closed: bool,
}

const NONE: usize = usize::MAX;

/// Marching squares at `threshold`. Saddle cells are resolved by the cell
/// average: when it exceeds the threshold the above-threshold corners are
/// joined.
pub fn iso_contour(grid: &DamageGrid, threshold: f64) -> Vec<Contour> {
    let (nx, ny) = (grid.nx, grid.ny);
    let n_h = (nx - 1) * ny;
    let h_edge = |i: usize, j: usize| j * (nx - 1) + i;
    let v_edge = |i: usize, j: usize| n_h + j * nx + i;
    let above = |i: usize, j: usize| grid.value(i, j) > threshold;
    let interp = |a: Vec2, b: Vec2, va: f64, vb: f64| a + (b - a) * ((threshold - va) / (vb - va));
    let edge_point = |e: usize| -> Vec2 {
        if e < n_h {
            let (i, j) = (e % (nx - 1), e / (nx - 1));
            interp(
                grid.point(i, j),
                grid.point(i + 1, j),
                grid.value(i, j),
                grid.value(i + 1, j),
            )
        } else {
            let k = e - n_h;
            let (i, j) = (k % nx, k / nx);
            interp(
                grid.point(i, j),
                grid.point(i, j + 1),
                grid.value(i, j),
                grid.value(i, j + 1),
            )
        }
    };

    let mut segments: Vec<[usize; 2]> = Vec::new();
    for j in 0..ny - 1 {
        for i in 0..nx - 1 {
            let bottom = h_edge(i, j);
            let top = h_edge(i, j + 1);
            let left = v_edge(i, j);
            let right = v_edge(i + 1, j);
            let c = [above(i, j), above(i + 1, j), above(i + 1, j + 1), above(i, j + 1)];
            let code = c[0] as u8 | (c[1] as u8) << 1 | (c[2] as u8) << 2 | (c[3] as u8) << 3;
            match code {
                0 | 15 => {}
                1 | 14 => segments.push([left, bottom]),
                2 | 13 => segments.push([bottom, right]),
                3 | 12 => segments.push([left, right]),
                4 | 11 => segments.push([right, top]),
                6 | 9 => segments.push([bottom, top]),
                7 | 8 => segments.push([left, top]),
                5 | 10 => {
                    let avg = 0.25
                        * (grid.value(i, j) + grid.value(i + 1, j) + grid.value(i + 1, j + 1) + grid.value(i, j + 1));
                    // Either cut off corners (1,0) and (0,1) or (0,0) and (1,1).
                    let cut_off_diagonal = (code == 5) == (avg > threshold);
                    if cut_off_diagonal {
                        segments.push([bottom, right]);
                        segments.push([left, top]);
                    } else {
                        segments.push([left, bottom]);
                        segments.push([right, top]);
                    }
                }
                _ => unreachable!(),
            }
        }
    }

    let n_edges = n_h + nx * (ny - 1);
    let mut adj = vec![[NONE; 2]; n_edges];
    for (s, seg) in segments.iter().enumerate() {
        for &e in seg {
            let slot = if adj[e][0] == NONE { 0 } else { 1 };
            adj[e][slot] = s;
        }
    }
    let mut used = vec![false; segments.len()];
    let mut out = Vec::new();
    let walk = |start_seg: usize, start_edge: usize, used: &mut Vec<bool>| -> (Vec<usize>, bool) {
        let mut edges = vec![start_edge];
        let mut seg = start_seg;
        let mut edge = start_edge;
        loop {
            used[seg] = true;
            let next_edge = if segments[seg][0] == edge {
                segments[seg][1]
            } else {
                segments[seg][0]
            };
            if next_edge == start_edge {
                return (edges, true);
            }
            edges.push(next_edge);
            edge = next_edge;
            let [a, b] = adj[edge];
            let next = if a == seg { b } else { a };
            if next == NONE || used[next] {
                return (edges, false);
            }
            seg = next;
        }
    };
    // Open chains first, starting from edges used by a single segment.
    for e in 0..n_edges {
        let [a, b] = adj[e];
        if a != NONE && b == NONE && !used[a] {
            let (edges, _) = walk(a, e, &mut used);
            out.push((edges, false));
        }
    }
    for s in 0..segments.len() {
        if !used[s] {
            let (edges, closed) = walk(s, segments[s][0], &mut used);
            out.push((edges, closed));
        }
    }
    out.into_iter()
        .filter_map(|(edges, closed)| {
            let mut pts: Vec<Vec2> = Vec::with_capacity(edges.len());
            for e in edges {
                let p = edge_point(e);
                if pts.last() != Some(&p) {
                    pts.push(p);
                }
            }
            if closed && pts.len() > 1 && pts.first() == pts.last() {
                pts.pop();
            }
            (pts.len() >= 2).then_some(Contour { points: pts, closed })
        })
        .collect()
}
