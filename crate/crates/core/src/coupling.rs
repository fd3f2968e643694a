//! The global-local cycle: load stepping, global solves, transfer of the
//! global displacement to a moving peridynamic box, local solves and crack
//! updates.

use crate::crack::{extension_points, iso_contour, resample_nodal, update_crack, CrackPath, ExtractionParams};
use crate::error::{Error, Result};
use crate::geom::{Rect, Vec2};
use crate::geometry::DomainSpec;
use crate::global_solver::{
    build_cover, discretize, BoundaryConditions, Cover, GlobalSolution, GlobalSystem, Supports,
};
use crate::io::{format_number, write_pd_snapshot};
use crate::material::MaterialParams;
use crate::pd_model::HorizonGeometry;
use crate::pd_solver::{apply_dirichlet_ramp, generate_nodes, run_local, PDBox, PDState};
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;
use std::sync::Arc;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InnerScheme {
    /// One local solve per exchange.
    SinglePass,
    /// Repeat local solves within the load step until the tip stops moving.
    SchemeB,
}

impl fmt::Display for InnerScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            InnerScheme::SinglePass => "single-pass",
            InnerScheme::SchemeB => "scheme-b",
        })
    }
}

impl FromStr for InnerScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "single-pass" | "single" => Ok(InnerScheme::SinglePass),
            "scheme-b" | "b" => Ok(InnerScheme::SchemeB),
            _ => Err(Error::InvalidSchedule(format!("unknown inner scheme `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CouplingSchedule {
    pub n_load_steps: usize,
    /// Load increments between two exchanges.
    pub exchange_every: usize,
    pub inner_scheme: InnerScheme,
    /// Tip advance below which scheme B stops iterating.
    pub inner_advance_tol: f64,
    /// Upper bound on local solves per exchange under scheme B.
    pub inner_max_iterations: usize,
    /// The run ends once the tip heads into a free surface closer than
    /// this; the remaining ligament is taken as broken.
    pub surface_distance: f64,
}

impl CouplingSchedule {
    pub fn new(n_load_steps: usize, exchange_every: usize, inner_scheme: InnerScheme, h_pd: f64, delta: f64) -> Self {
        CouplingSchedule {
            n_load_steps,
            exchange_every,
            inner_scheme,
            inner_advance_tol: h_pd,
            inner_max_iterations: 10,
            surface_distance: delta,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_load_steps == 0 {
            return Err(Error::InvalidSchedule("n_load_steps must be at least 1".into()));
        }
        if self.exchange_every == 0 {
            return Err(Error::InvalidSchedule("exchange_every must be at least 1".into()));
        }
        if !(self.inner_advance_tol > 0.0) || !self.inner_advance_tol.is_finite() {
            return Err(Error::InvalidSchedule(format!(
                "inner_advance_tol must be positive, got {}",
                self.inner_advance_tol
            )));
        }
        if self.inner_max_iterations == 0 {
            return Err(Error::InvalidSchedule("inner_max_iterations must be at least 1".into()));
        }
        if !(self.surface_distance >= 0.0) || !self.surface_distance.is_finite() {
            return Err(Error::InvalidSchedule(format!(
                "surface_distance must be non-negative, got {}",
                self.surface_distance
            )));
        }
        Ok(())
    }

    pub fn is_exchange_step(&self, step: usize) -> bool {
        step.is_multiple_of(self.exchange_every)
    }

    pub fn exchange_count(&self) -> usize {
        self.n_load_steps / self.exchange_every
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoxPolicy {
    pub initial_size: f64,
    /// Minimum clearance between the tip and an interior box edge.
    pub margin: f64,
    pub growth: f64,
    pub max_size: f64,
}

impl BoxPolicy {
    /// 64 node spacings wide, clearance of two horizons, growth up to
    /// twice the initial size.
    pub fn for_discretization(h_pd: f64, delta: f64) -> Self {
        BoxPolicy {
            initial_size: 64.0 * h_pd,
            margin: 2.0 * delta,
            growth: 1.25,
            max_size: 128.0 * h_pd,
        }
    }

    pub fn validate(&self, delta: f64) -> Result<()> {
        let bad = |name: &'static str, reason: String| Err(Error::param(name, reason));
        if !(self.margin >= 2.0 * delta * (1.0 - 1e-12)) {
            return bad(
                "margin",
                format!("{} is below twice the horizon {}", self.margin, 2.0 * delta),
            );
        }
        if !(self.initial_size > 2.0 * self.margin) {
            return bad(
                "initial_size",
                format!(
                    "{} must exceed twice the margin {}",
                    self.initial_size,
                    2.0 * self.margin
                ),
            );
        }
        if !(self.growth >= 1.0) || !self.growth.is_finite() {
            return bad("growth", format!("must be at least 1, got {}", self.growth));
        }
        if !(self.max_size >= self.initial_size) || !self.max_size.is_finite() {
            return bad(
                "max_size",
                format!("{} is smaller than initial_size {}", self.max_size, self.initial_size),
            );
        }
        Ok(())
    }
}

/// A box in progress. `nominal` is the unclipped square the policy moves
/// around; the simulated region is its intersection with the beam.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxState {
    pub nominal: Rect,
    /// Set when the nominal box had to be clipped by the beam outline.
    pub clipped: bool,
}

impl BoxState {
    pub fn region(&self, domain: &DomainSpec) -> Rect {
        self.nominal.intersection(&domain.beam_rect())
    }

    pub fn pd_box(&self, domain: &DomainSpec, h_pd: f64, delta: f64) -> Result<PDBox> {
        PDBox::new(self.region(domain), h_pd, delta)
    }
}

fn exceeds(inner: &Rect, outer: &Rect) -> bool {
    inner.min.x < outer.min.x || inner.min.y < outer.min.y || inner.max.x > outer.max.x || inner.max.y > outer.max.y
}

/// Square of side `initial_size` centered on the crack tip.
pub fn make_initial_box(crack: &CrackPath, domain: &DomainSpec, policy: &BoxPolicy) -> Result<BoxState> {
    let tip = crack.tip();
    if !domain.beam_rect().contains(&tip) {
        return Err(Error::OutOfDomain { x: tip.x, y: tip.y });
    }
    let nominal = Rect::from_center(tip, policy.initial_size, policy.initial_size);
    Ok(BoxState {
        nominal,
        clipped: exceeds(&nominal, &domain.beam_rect()),
    })
}

/// Moves and grows the box so the tip keeps its clearance.
///
/// An edge of the nominal box that lies strictly inside the beam is open.
/// When the tip is closer than `margin` to an open edge the box shifts on
/// that axis until the clearance is `2 margin`. When the damage zone comes
/// within `margin` of two opposite edges the box grows by `growth`, capped
/// at `max_size`. Finally the box is stretched to hold both tips.
pub fn adapt_box(
    current: &BoxState,
    crack: &CrackPath,
    previous_tip: &Vec2,
    damage_zone: Option<&Rect>,
    domain: &DomainSpec,
    policy: &BoxPolicy,
) -> BoxState {
    let beam = domain.beam_rect();
    let tip = crack.tip();
    let mut r = current.nominal;
    let m = policy.margin;

    if let Some(z) = damage_zone {
        let spans_x = z.min.x - r.min.x < m && r.max.x - z.max.x < m;
        let spans_y = z.min.y - r.min.y < m && r.max.y - z.max.y < m;
        let size = r.width().max(r.height());
        if (spans_x || spans_y) && size < policy.max_size {
            let grown = (size * policy.growth).min(policy.max_size);
            r = Rect::from_center(r.center(), grown, grown);
        }
    }

    let mut shift = Vec2::zeros();
    for axis in 0..2 {
        let (lo, hi) = (r.min[axis], r.max[axis]);
        let (open_lo, open_hi) = (lo > beam.min[axis], hi < beam.max[axis]);
        let (c_lo, c_hi) = (tip[axis] - lo, hi - tip[axis]);
        let need_lo = open_lo && c_lo < m;
        let need_hi = open_hi && c_hi < m;
        shift[axis] = match (need_lo, need_hi) {
            (true, true) => tip[axis] - 0.5 * (lo + hi),
            (true, false) => -(2.0 * m - c_lo).min(hi - tip[axis]).max(0.0),
            (false, true) => (2.0 * m - c_hi).min(tip[axis] - lo).max(0.0),
            (false, false) => 0.0,
        };
    }
    r = r.translate(shift);

    // Slide back inside the beam where the size allows it.
    let mut back = Vec2::zeros();
    for axis in 0..2 {
        if r.max[axis] - r.min[axis] <= beam.max[axis] - beam.min[axis] {
            if r.min[axis] < beam.min[axis] && r.max[axis] - (beam.min[axis] - r.min[axis]) >= tip[axis] {
                back[axis] = beam.min[axis] - r.min[axis];
            } else if r.max[axis] > beam.max[axis] && r.min[axis] + (r.max[axis] - beam.max[axis]) <= tip[axis] {
                back[axis] = beam.max[axis] - r.max[axis];
            }
        }
    }
    // Only slide when the tip keeps its clearance to the edge that becomes open.
    for axis in 0..2 {
        if back[axis] != 0.0 {
            let (lo, hi) = (r.min[axis] + back[axis], r.max[axis] + back[axis]);
            let ok = (lo <= beam.min[axis] || tip[axis] - lo >= m) && (hi >= beam.max[axis] || hi - tip[axis] >= m);
            if !ok {
                back[axis] = 0.0;
            }
        }
    }
    r = r.translate(back);

    for p in [previous_tip, &tip] {
        r = r.union_point(p);
    }
    let clipped = exceeds(&r, &beam);
    if clipped && r != current.nominal {
        log::warn!(
            "PD box [{:.4}, {:.4}] x [{:.4}, {:.4}] extends past the beam and is clipped",
            r.min.x,
            r.max.x,
            r.min.y,
            r.max.y
        );
    }
    BoxState { nominal: r, clipped }
}

/// Global displacement at every boundary-layer node, in layer order.
/// Nodes on the crack line take the limit from the positive side.
pub fn transfer_global_to_pd(solution: &GlobalSolution, state: &PDState) -> Result<Vec<Vec2>> {
    state
        .boundary_layer
        .iter()
        .map(|&i| solution.displacement(&state.positions[i], Some(1.0)))
        .collect()
}

/// Gives every node the velocity `u_global / T` of the ramp. Starting the
/// interior at rest while the layer moves would launch a stress wave of
/// strain `v / c`, which for the rigid part of the beam motion is already
/// close to the critical stretch.
pub fn start_with_global_velocity(state: &mut PDState, solution: &GlobalSolution, total: f64) -> Result<()> {
    for (p, v) in state.positions.iter().zip(state.velocity.iter_mut()) {
        *v = solution.displacement(p, Some(1.0))? / total;
    }
    Ok(())
}

/// Everything a coupled run needs besides the geometry.
#[derive(Debug, Clone, PartialEq)]
pub struct CoupledSetup {
    pub domain: DomainSpec,
    pub material: MaterialParams,
    pub h_pd: f64,
    pub delta: f64,
    pub h_pum: f64,
    pub alpha: f64,
    pub penalty: f64,
    /// Midspan force per unit thickness at load factor 1.
    pub force: f64,
    pub supports: Supports,
    pub t_n: usize,
    pub t_s: f64,
    /// Time over which the layer is ramped to the global field; at most
    /// `t_n * t_s`, after which the layer is held.
    pub ramp_time: f64,
    pub damping: f64,
    pub threshold: f64,
    pub schedule: CouplingSchedule,
    pub policy: BoxPolicy,
    /// Where PD snapshots go; every `snapshot_every`-th local solve is
    /// written. Zero disables snapshots.
    pub snapshot_dir: Option<PathBuf>,
    pub snapshot_every: usize,
}

impl CoupledSetup {
    pub fn validate(&self) -> Result<()> {
        self.domain.validate()?;
        self.schedule.validate()?;
        self.policy.validate(self.delta)?;
        if !(self.h_pd > 0.0) || !(self.delta > self.h_pd) {
            return Err(Error::param("delta", "need 0 < h_pd < delta"));
        }
        if self.t_n == 0 || !(self.t_s > 0.0) {
            return Err(Error::InvalidSchedule("t_n and t_s must be positive".into()));
        }
        let run = self.t_n as f64 * self.t_s;
        if !(self.ramp_time > 0.0 && self.ramp_time <= run * (1.0 + 1e-9)) {
            return Err(Error::InvalidSchedule(format!(
                "ramp time {} must lie in (0, t_n * t_s = {run}]",
                self.ramp_time
            )));
        }
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return Err(Error::param(
                "threshold",
                format!("must lie in (0, 1), got {}", self.threshold),
            ));
        }
        if !(self.damping >= 0.0) {
            return Err(Error::param("damping", "must be non-negative"));
        }
        Ok(())
    }

    fn extraction(&self) -> ExtractionParams {
        ExtractionParams {
            threshold: self.threshold,
            grid_spacing: self.h_pd,
            delta: self.delta,
            h_pd: self.h_pd,
        }
    }

    fn system(&self, cover: &Arc<Cover>, crack: &CrackPath) -> Result<GlobalSystem> {
        let (cover, space) = discretize(cover.clone(), Some(crack));
        let bcs = BoundaryConditions::ThreePointBending {
            force: self.force,
            supports: self.supports,
        };
        GlobalSystem::new(cover, space, &self.material, &bcs, self.penalty)
    }
}

/// State after one load step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub step: usize,
    pub load_factor: f64,
    pub tip: Vec2,
    pub arc_length: f64,
    /// Region of the last local solve, if any happened so far.
    pub pd_box: Option<Rect>,
    /// Largest nodal damage of the last local solve.
    pub max_damage: f64,
    /// Local solves performed during this step.
    pub local_solves: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoupledReport {
    pub initial: CrackPath,
    pub crack: CrackPath,
    pub steps: Vec<StepRecord>,
    /// Distinct regions simulated, in order.
    pub boxes: Vec<Rect>,
    pub exchanges: usize,
    pub local_solves: usize,
    pub global_solves: usize,
    /// Number of boxes that had to be clipped by the beam outline.
    pub clipped_boxes: usize,
    /// Load step at which the crack broke through to a free surface.
    pub broke_through: Option<usize>,
}

impl CoupledReport {
    pub fn grew(&self) -> bool {
        self.crack != self.initial
    }

    /// One line per load step.
    /// Vertices grown during the run, starting at the initial tip.
    pub fn grown_path(&self) -> Vec<Vec2> {
        self.crack.beyond(self.initial.arc_length())
    }

    pub fn diagnostics_csv(&self) -> String {
        let mut out = String::from(
            "step,load_factor,tip_x,tip_y,arc_length,box_min_x,box_min_y,box_max_x,box_max_y,max_damage,local_solves\n",
        );
        for s in &self.steps {
            let b = s.pd_box.map_or_else(
                || ",,,".to_string(),
                |r| [r.min.x, r.min.y, r.max.x, r.max.y].map(format_number).join(","),
            );
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                s.step,
                format_number(s.load_factor),
                format_number(s.tip.x),
                format_number(s.tip.y),
                format_number(s.arc_length),
                b,
                format_number(s.max_damage),
                s.local_solves
            ));
        }
        out
    }

    pub fn write_diagnostics(&self, file: &std::path::Path) -> Result<()> {
        std::fs::write(file, self.diagnostics_csv())?;
        Ok(())
    }
}

/// Bounding rectangle of the nodes whose damage exceeds `threshold`.
pub fn damage_zone(state: &PDState, damage: &[f64], threshold: f64) -> Option<Rect> {
    state
        .positions
        .iter()
        .zip(damage)
        .filter(|(_, &d)| d > threshold)
        .fold(None, |acc: Option<Rect>, (p, _)| {
            Some(acc.map_or(Rect::new(*p, *p), |r| r.union_point(p)))
        })
}

/// Share of the margin next to open edges where damage is ignored.
pub const UNTRUSTED_SHARE: f64 = 0.75;

/// Part of the box where damage is taken at face value. Open edges are
/// pulled in by `UNTRUSTED_SHARE * margin`, which covers the Dirichlet layer
/// and the band next to it where layer data and local solution disagree.
/// A tip stopped there is closer than `margin` to the edge, so the next
/// exchange moves the box.
pub fn trusted_region(region: &Rect, domain: &DomainSpec, margin: f64) -> Rect {
    let margin = UNTRUSTED_SHARE * margin;
    let beam = domain.beam_rect();
    let mut r = *region;
    for axis in 0..2 {
        if r.min[axis] > beam.min[axis] {
            r.min[axis] += margin;
        }
        if r.max[axis] < beam.max[axis] {
            r.max[axis] -= margin;
        }
    }
    r
}

/// Largest angle between an extension segment and the incoming tip
/// direction.
pub const MAX_TURN: f64 = std::f64::consts::FRAC_PI_3;

/// Extension points cut where they leave `trusted`, at the first segment
/// that deviates from `incoming` (the tip direction of the crack being
/// extended) by more than `MAX_TURN`, or at the first reversal.
pub fn trim_extension(points: &[Vec2], incoming: &Vec2, trusted: &Rect) -> Vec<Vec2> {
    let mut out: Vec<Vec2> = Vec::with_capacity(points.len());
    for &p in points {
        let n = out.len();
        let back = n > 0 && {
            let d = p - out[n - 1];
            incoming.dot(&d) < MAX_TURN.cos() * d.norm() || (n > 1 && (out[n - 1] - out[n - 2]).dot(&d) < 0.0)
        };
        if back {
            break;
        }
        if !trusted.contains(&p) {
            if let Some(&a) = out.last() {
                let t = exit_parameter(&a, &p, trusted);
                if t > 0.0 {
                    out.push(a + (p - a) * t);
                }
            }
            break;
        }
        out.push(p);
    }
    out
}

/// Largest `t` in `[0, 1]` with `a + t (b - a)` inside `r`, for `a` in `r`.
fn exit_parameter(a: &Vec2, b: &Vec2, r: &Rect) -> f64 {
    let mut t: f64 = 1.0;
    for axis in 0..2 {
        let d = b[axis] - a[axis];
        if d > 0.0 {
            t = t.min((r.max[axis] - a[axis]) / d);
        } else if d < 0.0 {
            t = t.min((r.min[axis] - a[axis]) / d);
        }
    }
    t.max(0.0)
}

/// Crack extraction restricted to the trusted part of the box.
pub fn extract_in_box(
    state: &PDState,
    damage: &[f64],
    previous: &CrackPath,
    params: &ExtractionParams,
    trusted: &Rect,
) -> Result<CrackPath> {
    let grid = resample_nodal(&state.positions, damage, params.grid_spacing)?;
    let contours = iso_contour(&grid, params.threshold);
    if contours.is_empty() {
        return Ok(previous.clone());
    }
    let ext = extension_points(&contours, &grid, previous, params)?;
    update_crack(
        previous,
        &trim_extension(&ext, &previous.tip_direction(), trusted),
        params.h_pd,
    )
}

struct LocalOutcome {
    crack: CrackPath,
    zone: Option<Rect>,
    max_damage: f64,
}

/// Fills the box, ramps the layer to the global field and integrates.
fn simulate_box(
    setup: &CoupledSetup,
    horizon: &HorizonGeometry,
    region: &BoxState,
    crack: &CrackPath,
    solution: &GlobalSolution,
) -> Result<(PDBox, PDState, Vec<f64>)> {
    let pd_box = region.pd_box(&setup.domain, setup.h_pd, setup.delta)?;
    let mut state = generate_nodes(&pd_box, &setup.domain, crack)?;
    state.damping = setup.damping;
    let targets = transfer_global_to_pd(solution, &state)?;
    start_with_global_velocity(&mut state, solution, setup.ramp_time)?;
    apply_dirichlet_ramp(&mut state, &targets, 0.0, setup.ramp_time)?;
    let (state, damage) = run_local(state, &setup.material, horizon, setup.t_n, setup.t_s)?;
    Ok((pd_box, state, damage))
}

fn local_solve(
    setup: &CoupledSetup,
    horizon: &HorizonGeometry,
    region: &BoxState,
    crack: &CrackPath,
    solution: &GlobalSolution,
    index: usize,
) -> Result<LocalOutcome> {
    let (pd_box, state, damage) = simulate_box(setup, horizon, region, crack, solution)?;
    if let Some(dir) = &setup.snapshot_dir {
        if setup.snapshot_every > 0 && index.is_multiple_of(setup.snapshot_every) {
            std::fs::create_dir_all(dir)?;
            write_pd_snapshot(&state, &damage, &dir.join(format!("pd_{index:04}.csv")))?;
        }
    }
    let trusted = trusted_region(&pd_box.rect, &setup.domain, setup.policy.margin);
    let next = extract_in_box(&state, &damage, crack, &setup.extraction(), &trusted)?;
    Ok(LocalOutcome {
        crack: next,
        zone: damage_zone(&state, &damage, setup.threshold),
        max_damage: damage.iter().copied().fold(0.0, f64::max),
    })
}

/// Elastic solution for the initial crack at `load_factor`.
pub fn single_global_solve(setup: &CoupledSetup, load_factor: f64) -> Result<GlobalSolution> {
    setup.validate()?;
    let cover = Arc::new(build_cover(&setup.domain, setup.h_pum, setup.alpha)?);
    setup
        .system(&cover, &setup.domain.initial_crack_path())?
        .solution(load_factor)
}

/// Result of one stand-alone local solve.
pub struct LocalRun {
    pub pd_box: Rect,
    pub state: PDState,
    pub damage: Vec<f64>,
    pub crack: CrackPath,
}

/// One local solve in the initial box around the notch tip, driven by the
/// elastic solution at `load_factor`.
pub fn single_local_solve(setup: &CoupledSetup, load_factor: f64) -> Result<LocalRun> {
    let solution = single_global_solve(setup, load_factor)?;
    let horizon = HorizonGeometry::new(setup.delta)?;
    let initial = setup.domain.initial_crack_path();
    let region = make_initial_box(&initial, &setup.domain, &setup.policy)?;
    let (pd_box, state, damage) = simulate_box(setup, &horizon, &region, &initial, &solution)?;
    let trusted = trusted_region(&pd_box.rect, &setup.domain, setup.policy.margin);
    let crack = extract_in_box(&state, &damage, &initial, &setup.extraction(), &trusted)?;
    Ok(LocalRun {
        pd_box: pd_box.rect,
        state,
        damage,
        crack,
    })
}

/// Runs the global-local cycle from the domain's initial crack.
pub fn run_coupled(setup: &CoupledSetup) -> Result<CoupledReport> {
    setup.validate()?;
    let horizon = HorizonGeometry::new(setup.delta)?;
    let cover = Arc::new(build_cover(&setup.domain, setup.h_pum, setup.alpha)?);
    let initial = setup.domain.initial_crack_path();
    let mut crack = initial.clone();
    let mut system = setup.system(&cover, &crack).map_err(|e| at_step(0, e))?;
    let mut report = CoupledReport {
        initial: initial.clone(),
        crack: initial.clone(),
        steps: Vec::with_capacity(setup.schedule.n_load_steps),
        boxes: Vec::new(),
        exchanges: 0,
        local_solves: 0,
        global_solves: 1,
        clipped_boxes: 0,
        broke_through: None,
    };
    let mut region: Option<BoxState> = None;
    let mut prev_tip = crack.tip();
    let mut zone: Option<Rect> = None;
    let mut max_damage = 0.0;
    let n = setup.schedule.n_load_steps;

    for step in 1..=n {
        let load_factor = step as f64 / n as f64;
        let mut local_solves = 0;
        if setup.schedule.is_exchange_step(step) {
            report.exchanges += 1;
            let mut solution = system.solution(load_factor).map_err(|e| at_step(step, e))?;
            loop {
                let next_region = match &region {
                    None => make_initial_box(&crack, &setup.domain, &setup.policy),
                    Some(r) => Ok(adapt_box(
                        r,
                        &crack,
                        &prev_tip,
                        zone.as_ref(),
                        &setup.domain,
                        &setup.policy,
                    )),
                }
                .map_err(|e| at_step(step, e))?;
                let simulated = next_region.region(&setup.domain);
                if report.boxes.last() != Some(&simulated) {
                    report.boxes.push(simulated);
                    if next_region.clipped {
                        report.clipped_boxes += 1;
                    }
                }
                let out = local_solve(
                    setup,
                    &horizon,
                    &next_region,
                    &crack,
                    &solution,
                    report.local_solves + 1,
                )
                .map_err(|e| at_step(step, e))?;
                region = Some(next_region);
                local_solves += 1;
                report.local_solves += 1;
                zone = out.zone;
                max_damage = out.max_damage;
                let advance = (out.crack.tip() - crack.tip()).norm();
                if out.crack != crack {
                    log::info!(
                        "step {step}: tip ({:.5}, {:.5}) -> ({:.5}, {:.5})",
                        crack.tip().x,
                        crack.tip().y,
                        out.crack.tip().x,
                        out.crack.tip().y
                    );
                    prev_tip = crack.tip();
                    crack = out.crack;
                    if let Some(clipped) = clip_at_surface(&crack, &setup.domain) {
                        crack = clipped;
                        report.broke_through = Some(step);
                        log::info!(
                            "step {step}: crack enters a free surface at ({:.5}, {:.5})",
                            crack.tip().x,
                            crack.tip().y
                        );
                        break;
                    }
                    if let Some(hit) = breakthrough(&crack, &setup.domain, setup.schedule.surface_distance) {
                        let mut points = crack.into_points();
                        points.push(hit);
                        crack = CrackPath::new(points).map_err(|e| at_step(step, e))?;
                        report.broke_through = Some(step);
                        log::info!("step {step}: crack reaches the surface at ({:.5}, {:.5})", hit.x, hit.y);
                        break;
                    }
                    system = setup.system(&cover, &crack).map_err(|e| at_step(step, e))?;
                    report.global_solves += 1;
                    solution = system.solution(load_factor).map_err(|e| at_step(step, e))?;
                }
                let done = match setup.schedule.inner_scheme {
                    InnerScheme::SinglePass => true,
                    InnerScheme::SchemeB => {
                        advance < setup.schedule.inner_advance_tol
                            || local_solves >= setup.schedule.inner_max_iterations
                    }
                };
                if done {
                    break;
                }
            }
        }
        report.steps.push(StepRecord {
            step,
            load_factor,
            tip: crack.tip(),
            arc_length: crack.arc_length(),
            pd_box: region.as_ref().map(|r| r.region(&setup.domain)),
            max_damage,
            local_solves,
        });
        if report.broke_through.is_some() {
            break;
        }
    }
    report.crack = crack;
    Ok(report)
}

/// First point where the ray from the tip along the tip direction meets the
/// beam outline or a hole, if it lies within `reach`.
pub fn breakthrough(crack: &CrackPath, domain: &DomainSpec, reach: f64) -> Option<Vec2> {
    let (p, d) = (crack.tip(), crack.tip_direction());
    let beam = domain.beam_rect();
    let mut t = f64::INFINITY;
    for axis in 0..2 {
        if d[axis] > 0.0 {
            t = t.min((beam.max[axis] - p[axis]) / d[axis]);
        } else if d[axis] < 0.0 {
            t = t.min((beam.min[axis] - p[axis]) / d[axis]);
        }
    }
    for hole in &domain.holes {
        // |p + t d - c|^2 = r^2 with |d| = 1.
        let w = p - hole.center;
        let b = w.dot(&d);
        let disc = b * b - (w.norm_squared() - hole.radius * hole.radius);
        if disc >= 0.0 {
            let near = -b - disc.sqrt();
            if near > 0.0 {
                t = t.min(near);
            }
        }
    }
    (t > 0.0 && t <= reach).then(|| p + d * t)
}

/// Path cut at the first point where a segment leaves the material, either
/// into a hole or through the beam outline. `None` if it stays inside.
pub fn clip_at_surface(crack: &CrackPath, domain: &DomainSpec) -> Option<CrackPath> {
    let beam = domain.beam_rect();
    let pts = crack.points();
    for (k, (a, b)) in crack.segments().enumerate() {
        let d = b - a;
        let mut t = f64::INFINITY;
        for hole in &domain.holes {
            let w = a - hole.center;
            let (qa, qb, qc) = (
                d.norm_squared(),
                w.dot(&d),
                w.norm_squared() - hole.radius * hole.radius,
            );
            let disc = qb * qb - qa * qc;
            if disc >= 0.0 && qa > 0.0 {
                let near = (-qb - disc.sqrt()) / qa;
                if near > 0.0 && near <= 1.0 {
                    t = t.min(near);
                }
            }
        }
        if !beam.contains(&b) {
            for axis in 0..2 {
                if b[axis] > beam.max[axis] {
                    t = t.min((beam.max[axis] - a[axis]) / d[axis]);
                } else if b[axis] < beam.min[axis] {
                    t = t.min((beam.min[axis] - a[axis]) / d[axis]);
                }
            }
        }
        if t.is_finite() {
            let mut out = pts[..=k].to_vec();
            out.push(a + d * t);
            return CrackPath::new(out).ok();
        }
    }
    None
}

fn at_step(step: usize, source: Error) -> Error {
    Error::Step {
        step,
        source: Box::new(source),
    }
}
