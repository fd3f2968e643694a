use super::cover::Cover;
use super::enrich::{EnrichedSpace, LocalSpace};
use super::quadrature::{edge_rule, AxisTables, CellContext, Edge};
use super::{BoundaryConditions, Supports};
use crate::error::{Error, Result};
use crate::geom::{vec2, Overlap, Vec2};
use crate::material::MaterialParams;
use faer::prelude::*;
use faer::sparse::SparseColMat;
use faer::Side;
use nalgebra::{DMatrix, Matrix2};
use rayon::prelude::*;

/// First global degree of freedom of every patch; each patch owns two
/// consecutive DOFs (x then y) per local function.
#[derive(Debug, Clone, PartialEq)]
pub struct DofMap {
    pub offsets: Vec<usize>,
    pub n_dofs: usize,
}

impl DofMap {
    pub fn new(space: &EnrichedSpace) -> DofMap {
        let mut offsets = Vec::with_capacity(space.spaces.len());
        let mut n = 0;
        for s in &space.spaces {
            offsets.push(n);
            n += 2 * s.n_functions();
        }
        DofMap { offsets, n_dofs: n }
    }
}

#[derive(Debug, Clone, Copy)]
enum Kind {
    Poly(usize),
    Enr(usize),
}

#[derive(Debug, Clone, Copy)]
struct LocalFn {
    patch: usize,
    /// Position of the patch in the 2x2 block of the cell.
    sx: usize,
    sy: usize,
    /// Index of the function within its patch's local space.
    fidx: usize,
    kind: Kind,
}

#[derive(Debug, Clone, Copy)]
struct Spring {
    p: Vec2,
    comps: [bool; 2],
    k: f64,
}

struct CellMatrix {
    funcs: Vec<LocalFn>,
    k: Vec<f64>,
    f: Vec<f64>,
    generic: bool,
    points: usize,
}

/// Assembled operator in patch-pair blocks plus the load vector for a
/// unit load factor.
pub struct Assembled {
    pub dofs: DofMap,
    blocks: Vec<Option<Vec<f64>>>,
    pub rhs: Vec<f64>,
    pub null_dim: usize,
    pub generic_cells: usize,
    pub quadrature_points: usize,
}

struct Problem<'a> {
    cover: &'a Cover,
    space: &'a EnrichedSpace,
    lambda: f64,
    mu: f64,
    gamma: f64,
    bcs: &'a BoundaryConditions,
    springs: Vec<Spring>,
    tx: AxisTables,
    ty: AxisTables,
}

const POLY_EXP: [(usize, usize); 4] = [(0, 0), (1, 0), (0, 1), (1, 1)];

fn slot(cover: &Cover, p: usize, q: usize) -> usize {
    let (a, b) = (&cover.patches[p], &cover.patches[q]);
    let dx = (b.ix as isize - a.ix as isize + 1) as usize;
    let dy = (b.iy as isize - a.iy as isize + 1) as usize;
    3 * dx + dy
}

impl Problem<'_> {
    fn cell_functions(&self, i: usize, j: usize) -> Vec<LocalFn> {
        let mut out = Vec::new();
        for sy in 0..2 {
            for sx in 0..2 {
                let Some(patch) = self.cover.patch_at(i + sx, j + sy) else {
                    continue;
                };
                for q in 0..LocalSpace::POLY {
                    out.push(LocalFn {
                        patch,
                        sx,
                        sy,
                        fidx: q,
                        kind: Kind::Poly(q),
                    });
                }
                for (t, &e) in self.space.spaces[patch].enrichments.iter().enumerate() {
                    out.push(LocalFn {
                        patch,
                        sx,
                        sy,
                        fidx: LocalSpace::POLY + t,
                        kind: Kind::Enr(e),
                    });
                }
            }
        }
        out
    }

    /// Values and gradients of the cell's functions at `p`.
    fn eval(&self, i: usize, j: usize, funcs: &[LocalFn], p: &Vec2, sign: Option<f64>) -> (Vec<f64>, Vec<Vec2>) {
        let cover = self.cover;
        let (wx, nx) = cover.px.eval_in_cell(i, p.x);
        let (wy, ny) = cover.py.eval_in_cell(j, p.y);
        let mut fx = [(0.0, 0.0); 2];
        let mut fy = [(0.0, 0.0); 2];
        for &(a, v, dv) in &wx[..nx] {
            fx[a - i] = (v, dv);
        }
        for &(b, v, dv) in &wy[..ny] {
            fy[b - j] = (v, dv);
        }
        let h = cover.h;
        let mut vals = Vec::with_capacity(funcs.len());
        let mut grads = Vec::with_capacity(funcs.len());
        for f in funcs {
            let (vx, dx) = fx[f.sx];
            let (vy, dy) = fy[f.sy];
            let phi = vx * vy;
            let dphi = vec2(dx * vy, vx * dy);
            let (psi, dpsi) = match f.kind {
                Kind::Poly(q) => {
                    let c = cover.patches[f.patch].center;
                    let (xi, eta) = ((p.x - c.x) / h, (p.y - c.y) / h);
                    match q {
                        0 => (1.0, Vec2::zeros()),
                        1 => (xi, vec2(1.0 / h, 0.0)),
                        2 => (eta, vec2(0.0, 1.0 / h)),
                        _ => (xi * eta, vec2(eta / h, xi / h)),
                    }
                }
                Kind::Enr(e) => {
                    let step = &self.space.enrichments[e];
                    step.eval(p, sign)
                        .or_else(|| step.eval(p, Some(1.0)))
                        .expect("explicit sign always evaluates")
                }
            };
            vals.push(phi * psi);
            grads.push(dphi * psi + dpsi * phi);
        }
        (vals, grads)
    }

    fn separable(&self, i: usize, j: usize, funcs: &[LocalFn]) -> Option<f64> {
        let rect = self.cover.cell_rect(i, j);
        if self
            .cover
            .domain
            .holes
            .iter()
            .any(|h| h.classify(&rect) != Overlap::Outside)
        {
            return None;
        }
        if !funcs.iter().any(|f| matches!(f.kind, Kind::Enr(_))) {
            return Some(0.0);
        }
        let step = &self.space.enrichments[0];
        if step.crack.intersects_rect(&rect) || !step.fully_behind(&rect) {
            return None;
        }
        step.crack.side(&rect.center())
    }

    fn cell(&self, i: usize, j: usize) -> Option<CellMatrix> {
        let funcs = self.cell_functions(i, j);
        if funcs.is_empty() {
            return None;
        }
        let n = funcs.len();
        let mut pm = vec![[0.0f64; 4]; n * n];
        let mut hole_edges = Vec::new();
        let mut generic = false;
        let mut points = 0;
        match self.separable(i, j, &funcs) {
            Some(sign) => {
                let (tx, ty) = (self.tx.get(i), self.ty.get(j));
                let map: Vec<(usize, usize, f64)> = funcs
                    .iter()
                    .map(|f| match f.kind {
                        Kind::Poly(q) => (2 * f.sx + POLY_EXP[q].0, 2 * f.sy + POLY_EXP[q].1, 1.0),
                        Kind::Enr(_) => (2 * f.sx, 2 * f.sy, sign),
                    })
                    .collect();
                for (a, &(fx, fy, sf)) in map.iter().enumerate() {
                    for (b, &(gx, gy, sg)) in map.iter().enumerate() {
                        let s = sf * sg;
                        pm[a * n + b] = [
                            s * tx.s[fx][gx] * ty.m[fy][gy],
                            s * tx.d[fx][gx] * ty.d[gy][fy],
                            s * tx.d[gx][fx] * ty.d[fy][gy],
                            s * tx.m[fx][gx] * ty.s[fy][gy],
                        ];
                    }
                }
            }
            None => {
                generic = true;
                let ctx = CellContext {
                    cover: self.cover,
                    i,
                    j,
                    crack: self.space.crack(),
                    want_edges: matches!(self.bcs, BoundaryConditions::LinearField { .. }),
                };
                let quad = ctx.quadrature();
                points = quad.points.len();
                for q in &quad.points {
                    let (_, g) = self.eval(i, j, &funcs, &q.p, q.sign);
                    for a in 0..n {
                        let ga = g[a] * q.w;
                        for b in a..n {
                            let e = &mut pm[a * n + b];
                            e[0] += ga.x * g[b].x;
                            e[1] += ga.x * g[b].y;
                            e[2] += ga.y * g[b].x;
                            e[3] += ga.y * g[b].y;
                        }
                    }
                }
                for a in 0..n {
                    for b in 0..a {
                        let e = pm[b * n + a];
                        pm[a * n + b] = [e[0], e[2], e[1], e[3]];
                    }
                }
                hole_edges = quad.hole_edges;
            }
        }
        let m = 2 * n;
        let mut k = vec![0.0; m * m];
        let (lambda, mu) = (self.lambda, self.mu);
        for a in 0..n {
            for b in 0..n {
                let p = pm[a * n + b];
                let pab = [[p[0], p[1]], [p[2], p[3]]];
                let tr = p[0] + p[3];
                for c in 0..2 {
                    for d in 0..2 {
                        let delta = if c == d { tr } else { 0.0 };
                        k[(2 * a + c) * m + 2 * b + d] = lambda * pab[c][d] + mu * (delta + pab[d][c]);
                    }
                }
            }
        }
        let mut f = vec![0.0; m];
        self.boundary_terms(i, j, &funcs, &hole_edges, &mut k, &mut f);
        Some(CellMatrix {
            funcs,
            k,
            f,
            generic,
            points,
        })
    }

    fn boundary_terms(&self, i: usize, j: usize, funcs: &[LocalFn], hole_edges: &[Edge], k: &mut [f64], f: &mut [f64]) {
        let cover = self.cover;
        let rect = cover.cell_rect(i, j);
        let beam = cover.domain.beam_rect();
        let n = funcs.len();
        let m = 2 * n;
        match self.bcs {
            BoundaryConditions::LinearField { u0, grad } => {
                let sigma = stress(grad, self.lambda, self.mu);
                let mut outer = Vec::new();
                if i == 0 {
                    outer.push(Edge {
                        a: rect.min,
                        b: vec2(rect.min.x, rect.max.y),
                        normal: vec2(-1.0, 0.0),
                    });
                }
                if i + 1 == cover.px.n_cells {
                    outer.push(Edge {
                        a: vec2(rect.max.x, rect.min.y),
                        b: rect.max,
                        normal: vec2(1.0, 0.0),
                    });
                }
                if j == 0 {
                    outer.push(Edge {
                        a: rect.min,
                        b: vec2(rect.max.x, rect.min.y),
                        normal: vec2(0.0, -1.0),
                    });
                }
                if j + 1 == cover.py.n_cells {
                    outer.push(Edge {
                        a: vec2(rect.min.x, rect.max.y),
                        b: rect.max,
                        normal: vec2(0.0, 1.0),
                    });
                }
                for e in &outer {
                    for (p, w) in edge_rule(cover, i, j, e) {
                        let (v, g) = self.eval(i, j, funcs, &p, None);
                        let target = u0 + grad * p;
                        let nn = e.normal;
                        let trac = |a: usize, c: usize| -> [f64; 2] {
                            let gr = g[a];
                            let t = |b: usize| {
                                let d = if b == c { gr.dot(&nn) } else { 0.0 };
                                self.lambda * gr[c] * nn[b] + self.mu * (d + gr[b] * nn[c])
                            };
                            [t(0), t(1)]
                        };
                        for a in 0..n {
                            for c in 0..2 {
                                let ta = trac(a, c);
                                let row = 2 * a + c;
                                f[row] += w * (-(ta[0] * target.x + ta[1] * target.y) + self.gamma * target[c] * v[a]);
                                for b in 0..n {
                                    for d in 0..2 {
                                        let tb = trac(b, d);
                                        let same = if c == d { self.gamma * v[a] * v[b] } else { 0.0 };
                                        k[row * m + 2 * b + d] += w * (-ta[d] * v[b] - tb[c] * v[a] + same);
                                    }
                                }
                            }
                        }
                    }
                }
                for e in hole_edges {
                    let t = sigma * e.normal;
                    for (p, w) in edge_rule(cover, i, j, e) {
                        let (v, _) = self.eval(i, j, funcs, &p, None);
                        for a in 0..n {
                            f[2 * a] += w * t.x * v[a];
                            f[2 * a + 1] += w * t.y * v[a];
                        }
                    }
                }
            }
            BoundaryConditions::ThreePointBending { force, .. } => {
                let half = cover.h;
                if j + 1 == cover.py.n_cells {
                    let (x0, x1) = (rect.min.x.max(-half), rect.max.x.min(half));
                    if x1 > x0 {
                        let e = Edge {
                            a: vec2(x0, beam.max.y),
                            b: vec2(x1, beam.max.y),
                            normal: vec2(0.0, 1.0),
                        };
                        let q = -force / (2.0 * half);
                        for (p, w) in edge_rule(cover, i, j, &e) {
                            let (v, _) = self.eval(i, j, funcs, &p, None);
                            for a in 0..n {
                                f[2 * a + 1] += w * q * v[a];
                            }
                        }
                    }
                }
                for s in &self.springs {
                    if cover.px.cell_of(s.p.x) != i || cover.py.cell_of(s.p.y) != j {
                        continue;
                    }
                    let (v, _) = self.eval(i, j, funcs, &s.p, None);
                    for c in 0..2 {
                        if !s.comps[c] {
                            continue;
                        }
                        for a in 0..n {
                            for b in 0..n {
                                k[(2 * a + c) * m + 2 * b + c] += s.k * v[a] * v[b];
                            }
                        }
                    }
                }
            }
        }
    }
}

fn stress(grad: &Matrix2<f64>, lambda: f64, mu: f64) -> Matrix2<f64> {
    Matrix2::identity() * (lambda * grad.trace()) + (grad + grad.transpose()) * mu
}

fn springs(cover: &Cover, bcs: &BoundaryConditions, k: f64) -> Vec<Spring> {
    match bcs {
        BoundaryConditions::ThreePointBending { supports, .. } => {
            let (left, right) = cover.domain.supports();
            let right_comps = match supports {
                Supports::PinRoller => [false, true],
                Supports::PinPin => [true, true],
            };
            vec![
                Spring {
                    p: left,
                    comps: [true, true],
                    k,
                },
                Spring {
                    p: right,
                    comps: right_comps,
                    k,
                },
            ]
        }
        BoundaryConditions::LinearField { .. } => Vec::new(),
    }
}

/// Rigid-body modes left unconstrained by the point springs, judged on
/// the spring stiffness relative to the Young's modulus.
fn rigid_null_dim(cover: &Cover, springs: &[Spring], young: f64) -> usize {
    let beam = cover.domain.beam_rect();
    let (c, l) = (beam.center(), beam.width().max(beam.height()));
    let mut rows = Vec::new();
    for s in springs {
        let r = (s.p - c) / l;
        let scale = (s.k / young).max(0.0).sqrt();
        if s.comps[0] {
            rows.extend([scale, 0.0, -r.y * scale]);
        }
        if s.comps[1] {
            rows.extend([0.0, scale, r.x * scale]);
        }
    }
    if rows.is_empty() {
        return 3;
    }
    let a = DMatrix::from_row_slice(rows.len() / 3, 3, &rows);
    let sv = a.singular_values();
    3 - sv.iter().filter(|&&s| s * s > 1e-10).count()
}

/// Nitsche stabilization `gamma = NITSCHE * E / h_pum` for weakly imposed
/// boundary displacements. Large enough for coercivity, small enough to
/// keep the system well conditioned.
pub const NITSCHE: f64 = 100.0;

/// Diagonal shifts tried in turn on the scaled matrix.
const SHIFTS: [f64; 3] = [0.0, 1e-12, 1e-10];
/// Largest relative residual accepted from a shifted factorization.
const SHIFT_RESIDUAL: f64 = 1e-6;

/// Cells processed per parallel batch before their matrices are
/// scattered in a fixed order.
const BATCH: usize = 256;

pub fn assemble(
    cover: &Cover,
    space: &EnrichedSpace,
    mat: &MaterialParams,
    bcs: &BoundaryConditions,
    penalty: f64,
) -> Result<Assembled> {
    if !(penalty >= 0.0 && penalty.is_finite()) {
        return Err(Error::param("penalty", format!("must be non-negative, got {penalty}")));
    }
    let springs = springs(cover, bcs, penalty * mat.young);
    let null_dim = match bcs {
        BoundaryConditions::ThreePointBending { .. } => rigid_null_dim(cover, &springs, mat.young),
        BoundaryConditions::LinearField { .. } => 0,
    };
    let problem = Problem {
        cover,
        space,
        lambda: mat.lambda,
        mu: mat.mu,
        gamma: NITSCHE * mat.young / cover.h,
        bcs,
        springs,
        tx: AxisTables::new(&cover.px),
        ty: AxisTables::new(&cover.py),
    };
    let dofs = DofMap::new(space);
    let n_patches = cover.len();
    let mut blocks: Vec<Option<Vec<f64>>> = vec![None; 9 * n_patches];
    let mut rhs = vec![0.0; dofs.n_dofs];
    let (ncx, ncy) = cover.n_cells();
    let cells: Vec<(usize, usize)> = (0..ncy).flat_map(|j| (0..ncx).map(move |i| (i, j))).collect();
    let mut generic_cells = 0;
    let mut quadrature_points = 0;
    for batch in cells.chunks(BATCH) {
        let mats: Vec<Option<CellMatrix>> = batch.par_iter().map(|&(i, j)| problem.cell(i, j)).collect();
        for cm in mats.into_iter().flatten() {
            generic_cells += cm.generic as usize;
            quadrature_points += cm.points;
            let m = 2 * cm.funcs.len();
            for (a, fa) in cm.funcs.iter().enumerate() {
                let na = 2 * space.spaces[fa.patch].n_functions();
                for c in 0..2 {
                    rhs[dofs.offsets[fa.patch] + 2 * fa.fidx + c] += cm.f[2 * a + c];
                }
                for (b, fb) in cm.funcs.iter().enumerate() {
                    let nb = 2 * space.spaces[fb.patch].n_functions();
                    let block = blocks[9 * fa.patch + slot(cover, fa.patch, fb.patch)]
                        .get_or_insert_with(|| vec![0.0; na * nb]);
                    for c in 0..2 {
                        for d in 0..2 {
                            block[(2 * fa.fidx + c) * nb + 2 * fb.fidx + d] += cm.k[(2 * a + c) * m + 2 * b + d];
                        }
                    }
                }
            }
        }
    }
    Ok(Assembled {
        dofs,
        blocks,
        rhs,
        null_dim,
        generic_cells,
        quadrature_points,
    })
}

impl Assembled {
    /// Nonzero entries `(row, col, value)` of the full matrix.
    pub fn triplets(&self, cover: &Cover, space: &EnrichedSpace) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::new();
        for p in 0..cover.len() {
            let np = 2 * space.spaces[p].n_functions();
            let (pix, piy) = (cover.patches[p].ix as isize, cover.patches[p].iy as isize);
            for dx in -1..=1isize {
                for dy in -1..=1isize {
                    let (qx, qy) = (pix + dx, piy + dy);
                    if qx < 0 || qy < 0 {
                        continue;
                    }
                    let Some(q) = cover.patch_at(qx as usize, qy as usize) else {
                        continue;
                    };
                    let Some(block) = &self.blocks[9 * p + slot(cover, p, q)] else {
                        continue;
                    };
                    let nq = 2 * space.spaces[q].n_functions();
                    for r in 0..np {
                        for c in 0..nq {
                            let v = block[r * nq + c];
                            if v != 0.0 {
                                out.push((self.dofs.offsets[p] + r, self.dofs.offsets[q] + c, v));
                            }
                        }
                    }
                }
            }
        }
        out
    }

    /// Solves with Jacobi scaling and a sparse Cholesky factorization.
    /// DOFs whose functions have no support in the material are pinned.
    pub fn solve(&self, cover: &Cover, space: &EnrichedSpace) -> Result<Vec<f64>> {
        if self.null_dim > 0 {
            return Err(Error::SingularSystem {
                null_dim: self.null_dim,
            });
        }
        let n = self.dofs.n_dofs;
        let full = self.triplets(cover, space);
        let mut diag = vec![0.0; n];
        for &(r, c, v) in &full {
            if r == c {
                diag[r] = v;
            }
        }
        let scale: Vec<f64> = diag
            .iter()
            .map(|&d| if d > 0.0 { 1.0 / d.sqrt() } else { 1.0 })
            .collect();
        let mut lower: Vec<(usize, usize, f64)> = full
            .iter()
            .filter(|&&(r, c, _)| r >= c)
            .map(|&(r, c, v)| (r, c, v * scale[r] * scale[c]))
            .collect();
        let pinned: Vec<usize> = (0..n).filter(|&i| !(diag[i] > 0.0)).collect();
        if !pinned.is_empty() {
            log::debug!("pinned {} DOFs without material support", pinned.len());
            lower.retain(|&(r, c, _)| diag[r] > 0.0 && diag[c] > 0.0);
            lower.extend(pinned.iter().map(|&i| (i, i, 1.0)));
        }
        // Nearly parallel enrichments can leave a round-off negative pivot
        // in an otherwise definite matrix; retry with a tiny shift of the
        // (unit) scaled diagonal before giving up.
        let mut chol = None;
        for shift in SHIFTS {
            let mut entries = lower.clone();
            if shift > 0.0 {
                entries.extend((0..n).map(|i| (i, i, shift)));
            }
            let a = SparseColMat::<usize, f64>::try_new_from_triplets(n, n, &entries)
                .map_err(|_| Error::SingularSystem { null_dim: 1 })?;
            if let Ok(c) = a.as_ref().sp_cholesky(Side::Lower) {
                if shift > 0.0 {
                    log::warn!("global matrix needed a diagonal shift of {shift:e} to factorize");
                }
                chol = Some((c, shift));
                break;
            }
        }
        let (chol, shift) = chol.ok_or(Error::SingularSystem { null_dim: 1 })?;
        let b = faer::Col::<f64>::from_fn(n, |i| if diag[i] > 0.0 { self.rhs[i] * scale[i] } else { 0.0 });
        let y = chol.solve(b.as_ref());
        if shift > 0.0 {
            let mut r: Vec<f64> = (0..n).map(|i| b.read(i)).collect();
            for &(i, j, v) in &lower {
                r[i] -= v * y.read(j);
                if i != j {
                    r[j] -= v * y.read(i);
                }
            }
            let norm = |v: &mut dyn Iterator<Item = f64>| v.map(|x| x * x).sum::<f64>().sqrt();
            let rel = norm(&mut r.iter().copied()) / norm(&mut (0..n).map(|i| b.read(i))).max(f64::MIN_POSITIVE);
            if !(rel < SHIFT_RESIDUAL) {
                return Err(Error::SingularSystem { null_dim: 1 });
            }
        }
        let x: Vec<f64> = (0..n).map(|i| y.read(i) * scale[i]).collect();
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::SingularSystem { null_dim: 1 });
        }
        Ok(x)
    }
}
