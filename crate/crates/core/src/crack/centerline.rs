use super::contour::{Contour, DamageGrid};
use super::path::{is_simple, CrackPath};
use crate::error::{Error, Result};
use crate::geom::{douglas_peucker, segments_intersect, vec2, Vec2};
use std::cmp::Reverse;
use std::collections::BinaryHeap;

/// Knobs of the extraction pipeline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtractionParams {
    /// Iso-level of the damage band.
    pub threshold: f64,
    /// Spacing of the resampled damage grid.
    pub grid_spacing: f64,
    /// Peridynamic horizon.
    pub delta: f64,
    /// Peridynamic node spacing.
    pub h_pd: f64,
}

/// Extends `previous` by the centerline of the damage band attached to
/// its tip. Without contours the previous path is returned unchanged.
pub fn centerline(
    contours: &[Contour],
    grid: &DamageGrid,
    previous: &CrackPath,
    params: &ExtractionParams,
) -> Result<CrackPath> {
    if contours.is_empty() {
        return Ok(previous.clone());
    }
    let ext = extension_points(contours, grid, previous, params)?;
    update_crack(previous, &ext, params.h_pd)
}

fn resample_contour(c: &Contour, step: f64) -> Vec<Vec2> {
    let mut pts = c.points.clone();
    if c.closed {
        pts.push(c.points[0]);
    }
    let mut out = vec![pts[0]];
    let mut carry = 0.0;
    for w in pts.windows(2) {
        let (a, b) = (w[0], w[1]);
        let len = (b - a).norm();
        let mut s = step - carry;
        while s < len {
            out.push(a + (b - a) * (s / len));
            s += step;
        }
        carry = len - (s - step);
    }
    if c.closed {
        if out.len() > 1 && (out[out.len() - 1] - out[0]).norm() < 0.5 * step {
            out.pop();
        }
    } else if *out.last().unwrap() != *pts.last().unwrap() {
        out.push(*pts.last().unwrap());
    }
    out
}

fn contour_distance(c: &Contour, p: &Vec2) -> f64 {
    let n = c.points.len();
    let m = if c.closed { n } else { n - 1 };
    (0..m)
        .map(|k| crate::geom::point_segment_distance(p, &c.points[k], &c.points[(k + 1) % n]))
        .fold(f64::INFINITY, f64::min)
}

/// Geodesic distance from `junction` through grid points above the
/// threshold, 8-connected. Unreachable points get infinity.
fn band_distance(grid: &DamageGrid, threshold: f64, junction: &Vec2, seed_radius: f64) -> Vec<f64> {
    let (nx, ny) = (grid.nx, grid.ny);
    let mut dist = vec![f64::INFINITY; nx * ny];
    let mut heap = BinaryHeap::new();
    let key = |d: f64| Reverse(d.to_bits());
    for j in 0..ny {
        for i in 0..nx {
            let d = (grid.point(i, j) - junction).norm();
            if d <= seed_radius && grid.value(i, j) > threshold {
                dist[j * nx + i] = d;
                heap.push((key(d), j * nx + i));
            }
        }
    }
    let h = grid.spacing;
    while let Some((Reverse(bits), k)) = heap.pop() {
        let d = f64::from_bits(bits);
        if d > dist[k] {
            continue;
        }
        let (i, j) = ((k % nx) as i64, (k / nx) as i64);
        for (di, dj) in [(-1, 0), (1, 0), (0, -1), (0, 1), (-1, -1), (1, -1), (-1, 1), (1, 1)] {
            let (a, b) = (i + di, j + dj);
            if a < 0 || b < 0 || a >= nx as i64 || b >= ny as i64 {
                continue;
            }
            let m = b as usize * nx + a as usize;
            if grid.values[m] <= threshold {
                continue;
            }
            let nd = d + if di != 0 && dj != 0 {
                std::f64::consts::SQRT_2 * h
            } else {
                h
            };
            if nd < dist[m] {
                dist[m] = nd;
                heap.push((key(nd), m));
            }
        }
    }
    dist
}

fn geodesic_at(grid: &DamageGrid, dist: &[f64], p: &Vec2) -> f64 {
    let s = (p - grid.origin) / grid.spacing;
    let (ci, cj) = (s.x.round() as i64, s.y.round() as i64);
    let mut best = f64::INFINITY;
    for j in cj - 1..=cj + 1 {
        for i in ci - 1..=ci + 1 {
            if i < 0 || j < 0 || i >= grid.nx as i64 || j >= grid.ny as i64 {
                continue;
            }
            let k = j as usize * grid.nx + i as usize;
            if dist[k].is_finite() {
                best = best.min(dist[k] + (grid.point(i as usize, j as usize) - p).norm());
            }
        }
    }
    best
}

/// Centerline vertices of the band attached to the tip of `previous`,
/// starting at that tip. Empty when no band touches the tip.
pub fn extension_points(
    contours: &[Contour],
    grid: &DamageGrid,
    previous: &CrackPath,
    params: &ExtractionParams,
) -> Result<Vec<Vec2>> {
    let junction = previous.tip();
    let dir = previous.tip_direction();
    let step = 0.5 * grid.spacing;
    let near: Vec<&Contour> = contours
        .iter()
        .filter(|c| contour_distance(c, &junction) <= params.delta)
        .collect();
    if near.is_empty() {
        return Ok(Vec::new());
    }
    let samples: Vec<Vec<Vec2>> = near.iter().map(|c| resample_contour(c, step)).collect();
    let all: Vec<Vec2> = samples.iter().flatten().copied().collect();
    let cone = std::f64::consts::FRAC_1_SQRT_2;
    let mut pairs: Vec<(Vec2, f64)> = Vec::new();
    for (c, pts) in near.iter().zip(&samples) {
        let n = pts.len();
        for k in 0..n {
            let (prev, next) = if c.closed {
                (pts[(k + n - 1) % n], pts[(k + 1) % n])
            } else {
                (pts[k.saturating_sub(1)], pts[(k + 1).min(n - 1)])
            };
            let t = next - prev;
            if t.norm() == 0.0 {
                continue;
            }
            let normal = vec2(-t.y, t.x).normalize();
            let p = pts[k];
            let plus = grid.sample(&(p + normal * step));
            let minus = grid.sample(&(p - normal * step));
            if plus == minus {
                continue;
            }
            let inward = if plus > minus { normal } else { -normal };
            let mut best: Option<(f64, Vec2)> = None;
            for q in &all {
                let w = q - p;
                let r = w.norm();
                if r <= 1e-12 || w.dot(&inward) < cone * r {
                    continue;
                }
                if best.is_none_or(|(b, _)| r < b) {
                    best = Some((r, *q));
                }
            }
            if let Some((r, q)) = best {
                pairs.push((0.5 * (p + q), r));
            }
        }
    }
    if pairs.is_empty() {
        return Ok(Vec::new());
    }
    let mut widths: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    widths.sort_by(f64::total_cmp);
    let median = widths[widths.len() / 2];
    if median > 10.0 * params.delta {
        return Err(Error::AmbiguousBand { width: median });
    }
    let dist = band_distance(grid, params.threshold, &junction, params.delta);
    let bin = grid.spacing;
    let mut bins: std::collections::BTreeMap<u64, (Vec2, usize)> = Default::default();
    for (m, w) in pairs {
        if w > 2.0 * median || (m - junction).dot(&dir) < 0.0 {
            continue;
        }
        let g = geodesic_at(grid, &dist, &m);
        if !g.is_finite() {
            continue;
        }
        let e = bins.entry((g / bin).floor() as u64).or_insert((Vec2::zeros(), 0));
        e.0 += m;
        e.1 += 1;
    }
    let mut poly = vec![junction];
    for (_, (sum, count)) in bins {
        let p = sum / count as f64;
        if (p - poly.last().unwrap()).norm() > 1e-12 {
            poly.push(p);
        }
    }
    if poly.len() < 2 {
        return Ok(Vec::new());
    }
    let poly = douglas_peucker(&poly, grid.spacing);
    Ok(truncate_at_self_intersection(&poly))
}

/// Longest prefix that stays simple.
fn truncate_at_self_intersection(points: &[Vec2]) -> Vec<Vec2> {
    let mut out: Vec<Vec2> = points.iter().take(2).copied().collect();
    for &p in points.iter().skip(2) {
        let a = *out.last().unwrap();
        let m = out.len() - 1;
        let hits = (0..m.saturating_sub(1)).any(|k| segments_intersect(&out[k], &out[k + 1], &a, &p));
        let fold = {
            let d1 = a - out[m - 1];
            let d2 = p - a;
            crate::geom::cross(&d1, &d2) == 0.0 && d1.dot(&d2) < 0.0
        };
        if hits || fold {
            break;
        }
        out.push(p);
    }
    out
}

/// Appends `extension` to `previous`. The extension must start within
/// `2 h_pd` of the tip; its first vertex is snapped onto the tip. The
/// junction region is simplified with tolerance `h_pd / 4` and any part of
/// the extension that would make the path self-intersect is dropped.
pub fn update_crack(previous: &CrackPath, extension: &[Vec2], h_pd: f64) -> Result<CrackPath> {
    if extension.len() < 2 {
        return Ok(previous.clone());
    }
    let tip = previous.tip();
    let gap = (extension[0] - tip).norm();
    if gap > 2.0 * h_pd {
        return Err(Error::CrackGap { gap });
    }
    let prev = previous.points();
    let n = prev.len();
    let mut local = vec![prev[n - 2], tip];
    for p in &extension[1..] {
        if (p - local.last().unwrap()).norm() > 1e-12 {
            local.push(*p);
        }
    }
    if local.len() == 2 {
        return Ok(previous.clone());
    }
    let local = douglas_peucker(&local, 0.25 * h_pd);
    let mut out: Vec<Vec2> = prev[..n - 2].to_vec();
    out.push(local[0]);
    for &p in &local[1..] {
        let a = *out.last().unwrap();
        let m = out.len() - 1;
        let crosses = (0..m.saturating_sub(1)).any(|k| segments_intersect(&out[k], &out[k + 1], &a, &p));
        let fold = m >= 1 && {
            let d1 = a - out[m - 1];
            let d2 = p - a;
            crate::geom::cross(&d1, &d2) == 0.0 && d1.dot(&d2) < 0.0
        };
        if crosses || fold {
            break;
        }
        out.push(p);
    }
    if out.len() < 2 || !is_simple(&out) {
        return Ok(previous.clone());
    }
    let candidate = CrackPath::new(out)?;
    if candidate.arc_length() < previous.arc_length() {
        return Ok(previous.clone());
    }
    Ok(candidate)
}
