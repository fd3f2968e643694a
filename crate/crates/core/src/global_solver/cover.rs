use crate::error::{Error, Result};
use crate::geom::{vec2, Overlap, Rect, Vec2};
use crate::geometry::DomainSpec;

/// Cubic B-spline bump with support `[-r, r]` and knots every `r/2`,
/// scaled to 1 at the center. Returns value and derivative.
fn bump(t: f64, r: f64) -> (f64, f64) {
    let s = 2.0 * t / r;
    let a = s.abs();
    let (v, dv) = if a >= 2.0 {
        (0.0, 0.0)
    } else if a >= 1.0 {
        let u = 2.0 - a;
        (u * u * u / 6.0, -0.5 * u * u * s.signum())
    } else {
        (2.0 / 3.0 - a * a + 0.5 * a * a * a, -2.0 * s + 1.5 * a * s)
    };
    (1.5 * v, 1.5 * dv * 2.0 / r)
}

/// One-dimensional Shepard partition over equally spaced centers. The
/// two-dimensional partition is the tensor product of two of these.
#[derive(Debug, Clone, PartialEq)]
pub struct Pu1d {
    pub lo: f64,
    pub hi: f64,
    pub h: f64,
    /// Patch half-width, `alpha * h / 2`.
    pub r: f64,
    pub n_centers: usize,
    pub n_cells: usize,
}

impl Pu1d {
    fn new(lo: f64, hi: f64, h: f64, alpha: f64) -> Pu1d {
        let r = 0.5 * alpha * h;
        let n_cells = (((hi - lo) / h) - 1e-9).ceil().max(1.0) as usize;
        let last = lo + n_cells as f64 * h;
        let n_centers = if last - r < hi { n_cells + 1 } else { n_cells };
        Pu1d {
            lo,
            hi,
            h,
            r,
            n_centers,
            n_cells,
        }
    }

    pub fn center(&self, a: usize) -> f64 {
        self.lo + a as f64 * self.h
    }

    /// Cell index containing `x`, clamped to the valid range.
    pub fn cell_of(&self, x: f64) -> usize {
        let k = ((x - self.lo) / self.h).floor();
        if k < 0.0 {
            0
        } else {
            (k as usize).min(self.n_cells - 1)
        }
    }

    pub fn cell_bounds(&self, i: usize) -> (f64, f64) {
        let a = self.center(i);
        let b = if i + 1 == self.n_cells {
            self.hi
        } else {
            self.center(i + 1)
        };
        (a, b)
    }

    /// Interior breakpoints of the partition inside cell `i`: where the
    /// second patch switches on, where the first switches off, and the
    /// spline knots.
    pub fn breakpoints(&self, i: usize) -> Vec<f64> {
        let (a, b) = self.cell_bounds(i);
        let c0 = self.center(i);
        let c1 = self.center(i + 1);
        let mut v: Vec<f64> = [c1 - self.r, c0 + self.r, c0 + 0.5 * self.r, c1 - 0.5 * self.r]
            .into_iter()
            .filter(|&x| x > a && x < b)
            .collect();
        v.sort_by(f64::total_cmp);
        v.dedup();
        v
    }

    /// Whether both patches of cell `i` are active on the open interval
    /// around `x`.
    pub fn is_overlap(&self, i: usize, x: f64) -> bool {
        i + 1 < self.n_centers && x > self.center(i + 1) - self.r && x < self.center(i) + self.r
    }

    /// `(patch index, phi, dphi)` for the patches of the cell containing
    /// `x`. Patches with zero weight at `x` are omitted.
    pub fn eval(&self, x: f64) -> ([(usize, f64, f64); 2], usize) {
        let i = self.cell_of(x);
        self.eval_in_cell(i, x)
    }

    pub fn eval_in_cell(&self, i: usize, x: f64) -> ([(usize, f64, f64); 2], usize) {
        let mut w = [(0usize, 0.0, 0.0); 2];
        let mut n = 0;
        for a in i..(i + 2).min(self.n_centers) {
            let (v, dv) = bump(x - self.center(a), self.r);
            if v > 0.0 {
                w[n] = (a, v, dv);
                n += 1;
            }
        }
        let s: f64 = w[..n].iter().map(|e| e.1).sum();
        let ds: f64 = w[..n].iter().map(|e| e.2).sum();
        for e in w[..n].iter_mut() {
            let (v, dv) = (e.1, e.2);
            e.1 = v / s;
            e.2 = (dv * s - v * ds) / (s * s);
        }
        (w, n)
    }
}

/// A patch of the cover.
#[derive(Debug, Clone, PartialEq)]
pub struct Patch {
    pub ix: usize,
    pub iy: usize,
    pub center: Vec2,
    /// Support rectangle, not clipped to the beam.
    pub rect: Rect,
}

/// Uniform grid of overlapping square patches with a tensor-product
/// Shepard partition of unity.
#[derive(Debug, Clone, PartialEq)]
pub struct Cover {
    pub h: f64,
    pub alpha: f64,
    pub px: Pu1d,
    pub py: Pu1d,
    pub patches: Vec<Patch>,
    pub(crate) index: Vec<Option<usize>>,
    pub domain: DomainSpec,
}

impl Cover {
    pub fn len(&self) -> usize {
        self.patches.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patches.is_empty()
    }

    pub fn patch_at(&self, ix: usize, iy: usize) -> Option<usize> {
        if ix >= self.px.n_centers || iy >= self.py.n_centers {
            return None;
        }
        self.index[iy * self.px.n_centers + ix]
    }

    pub fn n_cells(&self) -> (usize, usize) {
        (self.px.n_cells, self.py.n_cells)
    }

    pub fn cell_rect(&self, i: usize, j: usize) -> Rect {
        let (x0, x1) = self.px.cell_bounds(i);
        let (y0, y1) = self.py.cell_bounds(j);
        Rect::new(vec2(x0, y0), vec2(x1, y1))
    }

    /// Patches with positive weight at `p`: `(patch, phi, grad phi)`.
    /// Errors outside the beam or inside a hole.
    pub fn weights(&self, p: &Vec2) -> Result<Vec<(usize, f64, Vec2)>> {
        if !self.domain.contains(p) {
            return Err(Error::OutOfDomain { x: p.x, y: p.y });
        }
        let (i, j) = (self.px.cell_of(p.x), self.py.cell_of(p.y));
        Ok(self.weights_in_cell(i, j, p))
    }

    pub(crate) fn weights_in_cell(&self, i: usize, j: usize, p: &Vec2) -> Vec<(usize, f64, Vec2)> {
        let (wx, nx) = self.px.eval_in_cell(i, p.x);
        let (wy, ny) = self.py.eval_in_cell(j, p.y);
        let mut out = Vec::with_capacity(4);
        for &(b, fy, dfy) in &wy[..ny] {
            for &(a, fx, dfx) in &wx[..nx] {
                if let Some(k) = self.patch_at(a, b) {
                    out.push((k, fx * fy, vec2(dfx * fy, fx * dfy)));
                }
            }
        }
        out
    }
}

/// Uniform cover of the beam by squares of side `alpha * h_pum` centered
/// on a grid of spacing `h_pum` anchored at the lower-left beam corner.
/// Patches whose support lies inside a hole are dropped.
pub fn build_cover(domain: &DomainSpec, h_pum: f64, alpha: f64) -> Result<Cover> {
    if !(h_pum > 0.0 && h_pum.is_finite()) {
        return Err(Error::param("h_pum", format!("must be positive, got {h_pum}")));
    }
    if !(alpha > 1.0 && alpha < 2.0) {
        return Err(Error::param("alpha", format!("must lie in (1, 2), got {alpha}")));
    }
    let beam = domain.beam_rect();
    let px = Pu1d::new(beam.min.x, beam.max.x, h_pum, alpha);
    let py = Pu1d::new(beam.min.y, beam.max.y, h_pum, alpha);
    let r = px.r;
    let mut patches = Vec::new();
    let mut index = vec![None; px.n_centers * py.n_centers];
    for iy in 0..py.n_centers {
        for ix in 0..px.n_centers {
            let center = vec2(px.center(ix), py.center(iy));
            let rect = Rect::from_center(center, 2.0 * r, 2.0 * r);
            if domain.holes.iter().any(|h| h.classify(&rect) == Overlap::Inside) {
                continue;
            }
            index[iy * px.n_centers + ix] = Some(patches.len());
            patches.push(Patch { ix, iy, center, rect });
        }
    }
    Ok(Cover {
        h: h_pum,
        alpha,
        px,
        py,
        patches,
        index,
        domain: domain.clone(),
    })
}
