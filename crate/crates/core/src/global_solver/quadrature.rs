use super::cover::{Cover, Pu1d};
use crate::crack::CrackPath;
use crate::geom::{gauss_legendre, vec2, Overlap, Rect, Vec2};
use std::sync::OnceLock;

/// Quad-tree depth limit for cells cut by a hole boundary or the crack.
pub const MAX_DEPTH: usize = 6;

/// Gauss points per subinterval where two patches overlap and the
/// partition is rational.
const OVERLAP_POINTS: usize = 6;
/// Subintervals per overlap zone width.
const OVERLAP_SUBDIVISIONS: f64 = 8.0;
/// Gauss points where a single patch is active and the integrand is a
/// low-order polynomial.
const FLAT_POINTS: usize = 4;

fn rule(n: usize) -> &'static (Vec<f64>, Vec<f64>) {
    static RULES: OnceLock<Vec<(Vec<f64>, Vec<f64>)>> = OnceLock::new();
    &RULES.get_or_init(|| (0..=12).map(|k| gauss_legendre(k.max(1))).collect())[n]
}

fn push_gauss(a: f64, b: f64, n: usize, out: &mut Vec<(f64, f64)>) {
    let (x, w) = rule(n);
    let (m, s) = (0.5 * (a + b), 0.5 * (b - a));
    out.extend(x.iter().zip(w).map(|(xi, wi)| (m + s * xi, s * wi)));
}

/// Composite Gauss rule on `[a, b]` inside cell `i`, split at the
/// partition breakpoints. `refine` multiplies the subdivision density in
/// overlap zones.
pub fn interval_rule(pu: &Pu1d, i: usize, a: f64, b: f64, refine: f64, out: &mut Vec<(f64, f64)>) {
    let mut cuts = vec![a];
    cuts.extend(pu.breakpoints(i).into_iter().filter(|&x| x > a && x < b));
    cuts.push(b);
    let width = (2.0 * pu.r - pu.h).max(1e-300);
    for w in cuts.windows(2) {
        let (p, q) = (w[0], w[1]);
        if q <= p {
            continue;
        }
        if pu.is_overlap(i, 0.5 * (p + q)) {
            let m = (refine * OVERLAP_SUBDIVISIONS * (q - p) / width).ceil().max(1.0) as usize;
            for k in 0..m {
                let s0 = p + (q - p) * k as f64 / m as f64;
                let s1 = p + (q - p) * (k + 1) as f64 / m as f64;
                push_gauss(s0, s1, OVERLAP_POINTS, out);
            }
        } else {
            push_gauss(p, q, FLAT_POINTS, out);
        }
    }
}

/// Integrals over one cell of the four 1D functions
/// `phi_a * ((x - c_a) / h)^p`, `a` in {i, i+1}, `p` in {0, 1},
/// indexed `2 (a - i) + p`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Table1d {
    /// `int f_k f_l`
    pub m: [[f64; 4]; 4],
    /// `int f_k' f_l`
    pub d: [[f64; 4]; 4],
    /// `int f_k' f_l'`
    pub s: [[f64; 4]; 4],
}

pub fn functions_1d(pu: &Pu1d, i: usize, x: f64) -> ([f64; 4], [f64; 4]) {
    let (w, n) = pu.eval_in_cell(i, x);
    let mut v = [0.0; 4];
    let mut dv = [0.0; 4];
    for &(a, phi, dphi) in &w[..n] {
        let k = a - i;
        let xi = (x - pu.center(a)) / pu.h;
        v[2 * k] = phi;
        dv[2 * k] = dphi;
        v[2 * k + 1] = phi * xi;
        dv[2 * k + 1] = dphi * xi + phi / pu.h;
    }
    (v, dv)
}

pub fn table_1d(pu: &Pu1d, i: usize) -> Table1d {
    let (a, b) = pu.cell_bounds(i);
    let mut pts = Vec::new();
    interval_rule(pu, i, a, b, 2.0, &mut pts);
    let mut t = Table1d {
        m: [[0.0; 4]; 4],
        d: [[0.0; 4]; 4],
        s: [[0.0; 4]; 4],
    };
    for &(x, w) in &pts {
        let (v, dv) = functions_1d(pu, i, x);
        for k in 0..4 {
            for l in 0..4 {
                t.m[k][l] += w * v[k] * v[l];
                t.d[k][l] += w * dv[k] * v[l];
                t.s[k][l] += w * dv[k] * dv[l];
            }
        }
    }
    t
}

/// Per-axis tables: one for a full-width cell, shared by all of them,
/// plus one for the clipped last cell when it is narrower.
#[derive(Debug, Clone)]
pub struct AxisTables {
    full: Table1d,
    last: Table1d,
    n_cells: usize,
}

impl AxisTables {
    pub fn new(pu: &Pu1d) -> AxisTables {
        let full = table_1d(pu, 0);
        let last = table_1d(pu, pu.n_cells - 1);
        AxisTables {
            full,
            last,
            n_cells: pu.n_cells,
        }
    }

    pub fn get(&self, i: usize) -> &Table1d {
        if i + 1 == self.n_cells {
            &self.last
        } else {
            &self.full
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QPoint {
    pub p: Vec2,
    pub w: f64,
    /// Side of the crack imposed on the whole leaf the point belongs to.
    pub sign: Option<f64>,
}

/// Straight piece of the discretized boundary with its outward normal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub a: Vec2,
    pub b: Vec2,
    pub normal: Vec2,
}

/// Quadrature of one cell cut by holes or the crack.
#[derive(Debug, Default, Clone)]
pub struct CellQuadrature {
    pub points: Vec<QPoint>,
    /// Staircase edges facing a hole.
    pub hole_edges: Vec<Edge>,
}

pub struct CellContext<'a> {
    pub cover: &'a Cover,
    pub i: usize,
    pub j: usize,
    pub crack: Option<&'a CrackPath>,
    pub want_edges: bool,
}

impl CellContext<'_> {
    /// Recursive subdivision: leaves inside a hole are dropped, leaves cut
    /// by a hole or the crack are split down to [`MAX_DEPTH`]. At that
    /// depth a hole-cut leaf is kept when its center is in the material
    /// and a crack-cut leaf takes the side of its center.
    pub fn quadrature(&self) -> CellQuadrature {
        let mut q = CellQuadrature::default();
        let rect = self.cover.cell_rect(self.i, self.j);
        self.refine(&rect, 0, &mut q);
        q
    }

    fn refine(&self, rect: &Rect, depth: usize, q: &mut CellQuadrature) {
        let domain = &self.cover.domain;
        let mut hole_cut = false;
        for h in &domain.holes {
            match h.classify(rect) {
                Overlap::Inside => {
                    if self.want_edges {
                        self.staircase_edges(rect, q);
                    }
                    return;
                }
                Overlap::Cut => hole_cut = true,
                Overlap::Outside => {}
            }
        }
        let crack_cut = self.crack.is_some_and(|c| c.intersects_rect(rect));
        if (hole_cut || crack_cut) && depth < MAX_DEPTH {
            let c = rect.center();
            for (lo, hi) in [
                (rect.min, c),
                (vec2(c.x, rect.min.y), vec2(rect.max.x, c.y)),
                (vec2(rect.min.x, c.y), vec2(c.x, rect.max.y)),
                (c, rect.max),
            ] {
                self.refine(&Rect::new(lo, hi), depth + 1, q);
            }
            return;
        }
        let center = rect.center();
        if hole_cut && domain.in_hole(&center) {
            if self.want_edges {
                self.staircase_edges(rect, q);
            }
            return;
        }
        let sign = if crack_cut {
            Some(self.crack.and_then(|c| c.side(&center)).unwrap_or(1.0))
        } else {
            None
        };
        let refine = 1.0;
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        interval_rule(&self.cover.px, self.i, rect.min.x, rect.max.x, refine, &mut xs);
        interval_rule(&self.cover.py, self.j, rect.min.y, rect.max.y, refine, &mut ys);
        for &(y, wy) in &ys {
            for &(x, wx) in &xs {
                q.points.push(QPoint {
                    p: vec2(x, y),
                    w: wx * wy,
                    sign,
                });
            }
        }
    }

    /// Sides of an excluded leaf that border material, in pieces of the
    /// finest leaf size. A finest-size square is material exactly when its
    /// center is outside every hole, whatever leaf it belongs to.
    fn staircase_edges(&self, rect: &Rect, q: &mut CellQuadrature) {
        let domain = &self.cover.domain;
        let beam = domain.beam_rect();
        let cell = self.cover.cell_rect(self.i, self.j);
        let fine = 2f64.powi(MAX_DEPTH as i32);
        let (sx, sy) = (cell.width() / fine, cell.height() / fine);
        let nx = (rect.width() / sx).round().max(1.0) as usize;
        let ny = (rect.height() / sy).round().max(1.0) as usize;
        let mut emit = |a: Vec2, b: Vec2, dir: Vec2, step: f64| {
            let neighbor = 0.5 * (a + b) + dir * (0.5 * step);
            if beam.contains(&neighbor) && !domain.in_hole(&neighbor) {
                q.hole_edges.push(Edge { a, b, normal: -dir });
            }
        };
        for k in 0..ny {
            let y0 = rect.min.y + rect.height() * k as f64 / ny as f64;
            let y1 = rect.min.y + rect.height() * (k + 1) as f64 / ny as f64;
            emit(vec2(rect.min.x, y0), vec2(rect.min.x, y1), vec2(-1.0, 0.0), sx);
            emit(vec2(rect.max.x, y0), vec2(rect.max.x, y1), vec2(1.0, 0.0), sx);
        }
        for k in 0..nx {
            let x0 = rect.min.x + rect.width() * k as f64 / nx as f64;
            let x1 = rect.min.x + rect.width() * (k + 1) as f64 / nx as f64;
            emit(vec2(x0, rect.min.y), vec2(x1, rect.min.y), vec2(0.0, -1.0), sy);
            emit(vec2(x0, rect.max.y), vec2(x1, rect.max.y), vec2(0.0, 1.0), sy);
        }
    }
}

/// Gauss points along an axis-aligned edge lying in cell `(i, j)`.
pub fn edge_rule(cover: &Cover, i: usize, j: usize, edge: &Edge) -> Vec<(Vec2, f64)> {
    let mut out = Vec::new();
    let mut pts = Vec::new();
    if edge.a.y == edge.b.y {
        let (x0, x1) = (edge.a.x.min(edge.b.x), edge.a.x.max(edge.b.x));
        interval_rule(&cover.px, i, x0, x1, 1.0, &mut pts);
        out.extend(pts.iter().map(|&(x, w)| (vec2(x, edge.a.y), w)));
    } else {
        let (y0, y1) = (edge.a.y.min(edge.b.y), edge.a.y.max(edge.b.y));
        interval_rule(&cover.py, j, y0, y1, 1.0, &mut pts);
        out.extend(pts.iter().map(|&(y, w)| (vec2(edge.a.x, y), w)));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_case, CaseId};
    use crate::global_solver::cover::{build_cover, tests::square};

    #[test]
    fn interval_rule_integrates_partition() {
        let cover = build_cover(&square(1.0), 0.25, 1.3).unwrap();
        let pu = &cover.px;
        for i in 0..pu.n_cells {
            let (a, b) = pu.cell_bounds(i);
            let mut pts = Vec::new();
            interval_rule(pu, i, a, b, 1.0, &mut pts);
            let len: f64 = pts.iter().map(|p| p.1).sum();
            assert!((len - (b - a)).abs() < 1e-15);
            let t = table_1d(pu, i);
            let sum: f64 = (0..4).map(|k| t.m[0][k] + t.m[2][k]).sum::<f64>();
            let direct: f64 = pts
                .iter()
                .map(|&(x, w)| {
                    let (v, _) = functions_1d(pu, i, x);
                    w * (v[0] + v[2]) * (v[0] + v[1] + v[2] + v[3])
                })
                .sum();
            assert!((sum - direct).abs() < 1e-13);
            // Derivative of the constant 1 = phi_i + phi_{i+1} integrates to zero.
            assert!((t.d[0][0] + t.d[2][0] + t.d[0][2] + t.d[2][2]).abs() < 1e-14);
        }
    }

    #[test]
    fn hole_cells_lose_the_hole_area() {
        let d = build_case(CaseId::III);
        let cover = build_cover(&d, 0.00396875, 1.3).unwrap();
        let hole = d.holes[1];
        let (i0, j0) = (
            cover.px.cell_of(hole.center.x - hole.radius),
            cover.py.cell_of(hole.center.y - hole.radius),
        );
        let (i1, j1) = (
            cover.px.cell_of(hole.center.x + hole.radius),
            cover.py.cell_of(hole.center.y + hole.radius),
        );
        let mut area = 0.0;
        let mut cells = 0.0;
        let mut perimeter = Vec2::zeros();
        let mut length = 0.0;
        for j in j0..=j1 {
            for i in i0..=i1 {
                let ctx = CellContext {
                    cover: &cover,
                    i,
                    j,
                    crack: None,
                    want_edges: true,
                };
                let q = ctx.quadrature();
                area += q.points.iter().map(|p| p.w).sum::<f64>();
                cells += cover.cell_rect(i, j).area();
                for e in &q.hole_edges {
                    let l = (e.b - e.a).norm();
                    perimeter += e.normal * l;
                    length += l;
                }
            }
        }
        let hole_area = std::f64::consts::PI * hole.radius * hole.radius;
        assert!(((cells - area) - hole_area).abs() < 0.01 * hole_area);
        // A closed staircase has zero net normal and a perimeter of 8 r.
        assert!(perimeter.norm() < 1e-12);
        assert!((length - 8.0 * hole.radius).abs() < 0.02 * length);
    }
}
