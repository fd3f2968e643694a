//! Meshfree discretization of a peridynamic box and explicit time
//! integration under a ramped Dirichlet boundary layer.

mod neighbors;

pub use neighbors::build_neighbor_lists;

use crate::crack::CrackPath;
use crate::error::{Error, Result};
use crate::geom::{vec2, Rect, Vec2};
use crate::geometry::DomainSpec;
use crate::material::MaterialParams;
use crate::pd_model::{critical_stretch, influence, HorizonGeometry};
use rayon::prelude::*;

/// Rectangular peridynamic region with its node spacing and the width of
/// the Dirichlet layer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PDBox {
    pub rect: Rect,
    pub h_pd: f64,
    pub layer_width: f64,
}

impl PDBox {
    pub fn new(rect: Rect, h_pd: f64, layer_width: f64) -> Result<Self> {
        if !(rect.area() > 0.0) {
            return Err(Error::param("box", "rectangle must have positive area"));
        }
        if !(h_pd > 0.0) {
            return Err(Error::param("h_pd", format!("must be positive, got {h_pd}")));
        }
        if !(layer_width > 0.0) {
            return Err(Error::param("layer_width", "must be positive"));
        }
        Ok(PDBox {
            rect,
            h_pd,
            layer_width,
        })
    }
}

/// Bonds in compressed row form. Entries `offsets[i]..offsets[i + 1]`
/// belong to node `i`; every bond is stored once per endpoint.
#[derive(Debug, Clone, PartialEq)]
pub struct BondList {
    pub offsets: Vec<usize>,
    pub neighbor: Vec<usize>,
    pub dx: Vec<Vec2>,
    pub length: Vec<f64>,
    pub softened: Vec<bool>,
}

impl BondList {
    fn from_lists(positions: &[Vec2], lists: &[Vec<usize>]) -> BondList {
        let total: usize = lists.iter().map(Vec::len).sum();
        let mut b = BondList {
            offsets: Vec::with_capacity(lists.len() + 1),
            neighbor: Vec::with_capacity(total),
            dx: Vec::with_capacity(total),
            length: Vec::with_capacity(total),
            softened: vec![false; total],
        };
        b.offsets.push(0);
        for (i, l) in lists.iter().enumerate() {
            for &j in l {
                let dx = positions[j] - positions[i];
                b.neighbor.push(j);
                b.dx.push(dx);
                b.length.push(dx.norm());
            }
            b.offsets.push(b.neighbor.len());
        }
        b
    }

    pub fn range(&self, i: usize) -> std::ops::Range<usize> {
        self.offsets[i]..self.offsets[i + 1]
    }

    pub fn count(&self, i: usize) -> usize {
        self.offsets[i + 1] - self.offsets[i]
    }

    /// Number of undirected bonds.
    pub fn pair_count(&self) -> usize {
        self.neighbor.len() / 2
    }
}

/// Boundary-layer ramp: targets reached at `total_time`.
#[derive(Debug, Clone, PartialEq)]
pub struct Ramp {
    pub targets: Vec<Vec2>,
    pub total_time: f64,
}

/// Node cloud of one local solve.
#[derive(Debug, Clone, PartialEq)]
pub struct PDState {
    pub positions: Vec<Vec2>,
    pub displacement: Vec<Vec2>,
    pub velocity: Vec<Vec2>,
    pub acceleration: Vec<Vec2>,
    pub body_force: Vec<Vec2>,
    pub volume: Vec<f64>,
    pub bonds: BondList,
    /// Indices of Dirichlet-controlled nodes, ascending.
    pub boundary_layer: Vec<usize>,
    pub time: f64,
    /// Mass-proportional damping coefficient (1/s).
    pub damping: f64,
    pub ramp: Option<Ramp>,
    layer_mask: Vec<bool>,
}

impl PDState {
    /// State from explicit positions with uniform volume and no crack.
    pub fn from_positions(positions: Vec<Vec2>, volume: f64, delta: f64) -> PDState {
        let lists = build_neighbor_lists(&positions, delta);
        let bonds = BondList::from_lists(&positions, &lists);
        PDState::assemble(positions, volume, bonds)
    }

    fn assemble(positions: Vec<Vec2>, volume: f64, bonds: BondList) -> PDState {
        let n = positions.len();
        PDState {
            displacement: vec![Vec2::zeros(); n],
            velocity: vec![Vec2::zeros(); n],
            acceleration: vec![Vec2::zeros(); n],
            body_force: vec![Vec2::zeros(); n],
            volume: vec![volume; n],
            bonds,
            boundary_layer: Vec::new(),
            time: 0.0,
            damping: 0.0,
            ramp: None,
            layer_mask: vec![false; n],
            positions,
        }
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn set_boundary_layer(&mut self, mut nodes: Vec<usize>) {
        nodes.sort_unstable();
        nodes.dedup();
        self.layer_mask = vec![false; self.len()];
        for &i in &nodes {
            self.layer_mask[i] = true;
        }
        self.boundary_layer = nodes;
    }

    pub fn is_layer(&self, i: usize) -> bool {
        self.layer_mask[i]
    }

    /// Fraction of softened bonds per node.
    pub fn damage(&self) -> Result<Vec<f64>> {
        (0..self.len())
            .map(|i| {
                let r = self.bonds.range(i);
                if r.is_empty() {
                    return Err(Error::UndefinedDamage { node: i });
                }
                let s = self.bonds.softened[r.clone()].iter().filter(|&&b| b).count();
                Ok(s as f64 / r.len() as f64)
            })
            .collect()
    }

    pub fn total_momentum(&self, density: f64) -> Vec2 {
        self.velocity
            .iter()
            .zip(&self.volume)
            .fold(Vec2::zeros(), |acc, (v, vol)| acc + v * (density * vol))
    }

    /// Largest step size satisfying the linearized stability bound of the
    /// central difference scheme.
    pub fn stable_time_step(&self, mat: &MaterialParams, horizon: &HorizonGeometry) -> f64 {
        let k0 = 2.0 * mat.c * mat.beta / horizon.normalization();
        (0..self.len())
            .map(|i| {
                let stiff: f64 = self
                    .bonds
                    .range(i)
                    .map(|e| k0 * self.volume[self.bonds.neighbor[e]] / self.bonds.length[e])
                    .sum();
                if stiff > 0.0 {
                    (2.0 * mat.density / stiff).sqrt()
                } else {
                    f64::INFINITY
                }
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Removes every bond for which `cut(x_i, x_j)` holds.
    pub fn remove_bonds(&mut self, cut: impl Fn(&Vec2, &Vec2) -> bool) {
        let b = &self.bonds;
        let mut out = BondList {
            offsets: vec![0],
            neighbor: Vec::with_capacity(b.neighbor.len()),
            dx: Vec::with_capacity(b.neighbor.len()),
            length: Vec::with_capacity(b.neighbor.len()),
            softened: Vec::with_capacity(b.neighbor.len()),
        };
        for i in 0..self.positions.len() {
            for e in b.range(i) {
                let j = b.neighbor[e];
                // Evaluate on the ordered pair so both directions agree.
                let (p, q) = if i < j { (i, j) } else { (j, i) };
                if cut(&self.positions[p], &self.positions[q]) {
                    continue;
                }
                out.neighbor.push(j);
                out.dx.push(b.dx[e]);
                out.length.push(b.length[e]);
                out.softened.push(b.softened[e]);
            }
            out.offsets.push(out.neighbor.len());
        }
        self.bonds = out;
    }
}

/// Uniform node grid inside `box ∩ beam`, holes excluded, with bonds cut
/// by the crack or passing through a hole removed.
///
/// Node columns sit half a spacing off the first crack vertex so the
/// crack line runs between two columns; rows sit half a spacing above the
/// beam's bottom edge.
pub fn generate_nodes(pd_box: &PDBox, domain: &DomainSpec, crack: &CrackPath) -> Result<PDState> {
    let beam = domain.beam_rect();
    let region = pd_box.rect.intersection(&beam);
    if region.is_empty() {
        return Err(Error::EmptyDomain);
    }
    let h = pd_box.h_pd;
    let x0 = crack.start().x;
    let y0 = beam.min.y;
    let kx = ((region.min.x - x0) / h - 0.5).ceil() as i64;
    let ky = ((region.min.y - y0) / h - 0.5).ceil() as i64;
    let mut positions = Vec::new();
    let mut j = ky;
    loop {
        let y = y0 + (j as f64 + 0.5) * h;
        if y > region.max.y {
            break;
        }
        let mut i = kx;
        loop {
            let x = x0 + (i as f64 + 0.5) * h;
            if x > region.max.x {
                break;
            }
            let p = vec2(x, y);
            if region.contains(&p) && !domain.in_hole(&p) {
                positions.push(p);
            }
            i += 1;
        }
        j += 1;
    }
    if positions.is_empty() {
        return Err(Error::EmptyDomain);
    }
    let delta = pd_box.layer_width;
    // Lattice pairs at exactly the horizon are excluded regardless of
    // rounding in the node coordinates.
    let mut state = PDState::from_positions(positions, h * h, delta * (1.0 - 1e-9));
    let holes: Vec<_> = domain
        .holes
        .iter()
        .filter(|c| c.classify(&region.expand(delta)) != crate::geom::Overlap::Outside)
        .copied()
        .collect();
    state.remove_bonds(|a, b| crack.crosses_segment(a, b) || holes.iter().any(|c| c.crosses_segment(a, b)));
    let layer = identify_boundary_layer(&state, pd_box, domain);
    state.set_boundary_layer(layer);
    Ok(state)
}

/// Nodes closer than the layer width to a box edge that is not part of
/// the beam's outer boundary.
pub fn identify_boundary_layer(state: &PDState, pd_box: &PDBox, domain: &DomainSpec) -> Vec<usize> {
    let beam = domain.beam_rect();
    let r = pd_box.rect.intersection(&beam);
    let w = pd_box.layer_width;
    let open = [
        r.min.x > beam.min.x,
        r.max.x < beam.max.x,
        r.min.y > beam.min.y,
        r.max.y < beam.max.y,
    ];
    state
        .positions
        .iter()
        .enumerate()
        .filter(|(_, p)| {
            (open[0] && p.x - r.min.x < w)
                || (open[1] && r.max.x - p.x < w)
                || (open[2] && p.y - r.min.y < w)
                || (open[3] && r.max.y - p.y < w)
        })
        .map(|(i, _)| i)
        .collect()
}

/// Sets layer nodes to `(t / T) * target` with velocity `target / T` and
/// records the ramp for subsequent steps.
pub fn apply_dirichlet_ramp(state: &mut PDState, targets: &[Vec2], t: f64, total: f64) -> Result<()> {
    if !(total > 0.0) {
        return Err(Error::InvalidSchedule(format!(
            "ramp time must be positive, got {total}"
        )));
    }
    if !(0.0..=total).contains(&t) {
        return Err(Error::InvalidSchedule(format!("time {t} outside [0, {total}]")));
    }
    if targets.len() != state.boundary_layer.len() {
        return Err(Error::param(
            "targets",
            format!(
                "expected {} layer targets, got {}",
                state.boundary_layer.len(),
                targets.len()
            ),
        ));
    }
    state.ramp = Some(Ramp {
        targets: targets.to_vec(),
        total_time: total,
    });
    state.time = t;
    impose_ramp(state, t);
    Ok(())
}

fn impose_ramp(state: &mut PDState, t: f64) {
    let Some(ramp) = &state.ramp else { return };
    let s = (t / ramp.total_time).min(1.0);
    let rate = if t <= ramp.total_time {
        1.0 / ramp.total_time
    } else {
        0.0
    };
    for (k, &i) in state.boundary_layer.iter().enumerate() {
        let target = ramp.targets[k];
        state.displacement[i] = target * s;
        state.velocity[i] = target * rate;
        state.acceleration[i] = Vec2::zeros();
    }
}

/// Per-bond constants of the force law, fixed for a run.
struct BondCoefficients {
    /// `2 C beta V_j / (delta |B| L)`, zero outside the horizon.
    scale: Vec<f64>,
    /// `beta L`.
    beta_len: Vec<f64>,
    /// Squared critical stretch.
    critical2: Vec<f64>,
    inv_len2: Vec<f64>,
}

impl BondCoefficients {
    fn new(state: &PDState, mat: &MaterialParams, horizon: &HorizonGeometry) -> Self {
        let b = &state.bonds;
        let n = b.neighbor.len();
        let mut k = BondCoefficients {
            scale: Vec::with_capacity(n),
            beta_len: Vec::with_capacity(n),
            critical2: Vec::with_capacity(n),
            inv_len2: Vec::with_capacity(n),
        };
        for e in 0..n {
            let len = b.length[e];
            let slope = influence(len, horizon) * 2.0 * mat.c * mat.beta * len / horizon.normalization();
            k.scale.push(slope / len * state.volume[b.neighbor[e]] / len);
            k.beta_len.push(mat.beta * len);
            k.critical2.push(critical_stretch(len, mat.beta).powi(2));
            k.inv_len2.push(1.0 / (len * len));
        }
        k
    }
}

/// Internal force density per node; marks bonds whose stretch magnitude
/// exceeds the critical stretch.
fn internal_forces(state: &mut PDState, k: &BondCoefficients) -> Vec<Vec2> {
    let PDState {
        displacement, bonds, ..
    } = state;
    let BondList {
        offsets,
        neighbor,
        dx,
        softened,
        ..
    } = bonds;
    let n = displacement.len();
    let mut flags: Vec<&mut [bool]> = Vec::with_capacity(n);
    let mut rest: &mut [bool] = softened;
    for i in 0..n {
        let (head, tail) = rest.split_at_mut(offsets[i + 1] - offsets[i]);
        flags.push(head);
        rest = tail;
    }
    flags
        .into_par_iter()
        .enumerate()
        .map(|(i, soft)| {
            let ui = displacement[i];
            let mut f = Vec2::zeros();
            for (m, e) in (offsets[i]..offsets[i + 1]).enumerate() {
                let dx = dx[e];
                let du = displacement[neighbor[e]] - ui;
                let s = du.dot(&dx) * k.inv_len2[e];
                let s2 = s * s;
                if s2 > k.critical2[e] {
                    soft[m] = true;
                }
                f += dx * (k.scale[e] * s * (-k.beta_len[e] * s2).exp());
            }
            f
        })
        .collect()
}

/// One velocity Verlet step. Layer nodes follow the active ramp; free
/// nodes integrate `rho a = f + b - rho * damping * v`.
pub fn step_central_difference(
    state: &mut PDState,
    mat: &MaterialParams,
    horizon: &HorizonGeometry,
    dt: f64,
) -> Result<()> {
    let k = BondCoefficients::new(state, mat, horizon);
    step_with(state, mat, &k, dt)
}

fn step_with(state: &mut PDState, mat: &MaterialParams, k: &BondCoefficients, dt: f64) -> Result<()> {
    if !(dt > 0.0) {
        return Err(Error::InvalidSchedule(format!("time step must be positive, got {dt}")));
    }
    let n = state.len();
    for i in 0..n {
        if state.layer_mask[i] {
            continue;
        }
        state.velocity[i] += state.acceleration[i] * (0.5 * dt);
        state.displacement[i] += state.velocity[i] * dt;
    }
    let t_new = state.time + dt;
    if state.ramp.is_some() {
        impose_ramp(state, t_new);
    } else {
        for &i in &state.boundary_layer {
            state.velocity[i] = Vec2::zeros();
            state.acceleration[i] = Vec2::zeros();
        }
    }
    let forces = internal_forces(state, k);
    let inv_rho = 1.0 / mat.density;
    let damp = 1.0 / (1.0 + 0.5 * dt * state.damping);
    for i in 0..n {
        if state.layer_mask[i] {
            continue;
        }
        let f = forces[i] + state.body_force[i];
        let v_half = state.velocity[i];
        let v_new = (v_half + f * (0.5 * dt * inv_rho)) * damp;
        state.acceleration[i] = f * inv_rho - v_new * state.damping;
        state.velocity[i] = v_new;
    }
    state.time = t_new;
    if let Some(i) = (0..n).find(|&i| {
        let (u, v) = (state.displacement[i], state.velocity[i]);
        !(u.x.is_finite() && u.y.is_finite() && v.x.is_finite() && v.y.is_finite())
    }) {
        return Err(Error::Divergence { step: 0, node: i });
    }
    Ok(())
}

/// Runs `steps` explicit steps from the current state. The ramp recorded
/// in the state must end no later than `steps * dt`; the layer is then
/// held at its targets.
pub fn run_local(
    mut state: PDState,
    mat: &MaterialParams,
    horizon: &HorizonGeometry,
    steps: usize,
    dt: f64,
) -> Result<(PDState, Vec<f64>)> {
    if steps == 0 {
        let damage = state.damage()?;
        return Ok((state, damage));
    }
    if let Some(ramp) = &state.ramp {
        let t_end = state.time + steps as f64 * dt;
        if t_end < ramp.total_time * (1.0 - 1e-9) {
            return Err(Error::InvalidSchedule(format!(
                "{steps} steps of {dt} s end at {t_end} s, ramp ends at {} s",
                ramp.total_time
            )));
        }
    }
    let k = BondCoefficients::new(&state, mat, horizon);
    // Initial accelerations for the first half step.
    let forces = internal_forces(&mut state, &k);
    for i in 0..state.len() {
        if !state.layer_mask[i] {
            state.acceleration[i] = (forces[i] + state.body_force[i]) / mat.density - state.velocity[i] * state.damping;
        }
    }
    for step in 1..=steps {
        step_with(&mut state, mat, &k, dt).map_err(|e| match e {
            Error::Divergence { node, .. } => Error::Divergence { step, node },
            other => other,
        })?;
    }
    let damage = state.damage()?;
    Ok((state, damage))
}

/// Largest absolute stretch over all bonds.
pub fn max_abs_stretch(state: &PDState) -> f64 {
    let b = &state.bonds;
    (0..state.len())
        .flat_map(|i| b.range(i).map(move |e| (i, e)))
        .map(|(i, e)| {
            let du = state.displacement[b.neighbor[e]] - state.displacement[i];
            (du.dot(&b.dx[e]) / (b.length[e] * b.length[e])).abs()
        })
        .fold(0.0, f64::max)
}
