//! Run configuration: INI-style `key = value` lines grouped in sections.
//!
//! ```text
//! case = I
//! force = 900000
//!
//! [discretization]
//! h_pd = 0.001984375
//!
//! [schedule]
//! n_load_steps = 100
//! ```
//!
//! Top-level keys describe the specimen and load. Omitted keys take the
//! benchmark defaults; unknown sections and keys are errors.

use crate::coupling::{BoxPolicy, CoupledSetup, CouplingSchedule, InnerScheme};
use crate::error::{Error, Result};
use crate::geometry::{build_case, inches, CaseId, DomainSpec};
use crate::global_solver::{Supports, DEFAULT_ALPHA, DEFAULT_PENALTY};
use crate::material::{MaterialParams, POISSON_RATIO};
use ini::{Ini, ParseOption};
use std::collections::HashMap;
use std::fmt::{self, Write as _};
use std::path::{Path, PathBuf};
use std::str::FromStr;

pub const DEFAULT_H_PD: f64 = 0.00049609375;
pub const DEFAULT_H_PUM: f64 = 0.00396875;
pub const DEFAULT_DELTA_FACTOR: f64 = 8.0;
pub const DEFAULT_T_N: usize = 50_000;
pub const DEFAULT_T_S: f64 = 2e-7;
pub const DEFAULT_FINAL_TIME: f64 = 1e-3;
pub const DEFAULT_FORCE: f64 = 9e5;
pub const DEFAULT_THRESHOLD: f64 = 0.35;
pub const DEFAULT_LOAD_STEPS: usize = 20;

/// Allowed keys per section; `""` holds the top-level keys.
const KEYS: &[(&str, &[&str])] = &[
    ("", &["case", "force", "supports", "thickness"]),
    ("material", &["young", "fracture_energy", "density"]),
    (
        "discretization",
        &[
            "h_pd",
            "h_pum",
            "delta_factor",
            "alpha",
            "penalty",
            "t_n",
            "t_s",
            "final_time",
            "damping",
        ],
    ),
    (
        "schedule",
        &[
            "n_load_steps",
            "exchange_every",
            "inner_scheme",
            "inner_advance_tol",
            "inner_max_iterations",
            "surface_distance",
            "damage_threshold",
        ],
    ),
    ("box", &["initial_size", "margin", "growth", "max_size"]),
    ("output", &["directory", "snapshot_every"]),
];

/// Specimen to simulate: one of the benchmark cases, or a notch at
/// midspan which makes the problem mirror symmetric.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Specimen {
    Case(CaseId),
    Midspan,
}

impl Specimen {
    pub fn domain(self) -> DomainSpec {
        match self {
            Specimen::Case(id) => build_case(id),
            Specimen::Midspan => DomainSpec::three_point_bending(1.0, 0.0, false).expect("valid midspan specimen"),
        }
    }

    pub fn reference_case(self) -> Option<CaseId> {
        match self {
            Specimen::Case(id) => Some(id),
            Specimen::Midspan => None,
        }
    }
}

impl fmt::Display for Specimen {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Specimen::Case(id) => write!(f, "{id}"),
            Specimen::Midspan => f.write_str("midspan"),
        }
    }
}

impl FromStr for Specimen {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.trim().eq_ignore_ascii_case("midspan") {
            Ok(Specimen::Midspan)
        } else {
            s.parse().map(Specimen::Case)
        }
    }
}

/// Everything a coupled run needs, with defaults resolved.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub specimen: Specimen,
    /// Midspan load in N per unit thickness.
    pub force: f64,
    pub supports: Supports,
    pub thickness: f64,
    pub material: MaterialParams,
    pub h_pd: f64,
    pub h_pum: f64,
    pub delta_factor: f64,
    pub alpha: f64,
    pub penalty: f64,
    pub t_n: usize,
    pub t_s: f64,
    /// Ramp time of the boundary layer.
    pub final_time: f64,
    pub damping: f64,
    pub schedule: CouplingSchedule,
    pub threshold: f64,
    pub policy: BoxPolicy,
    pub output_dir: PathBuf,
    /// Write every n-th local solve's nodal field; 0 disables snapshots.
    pub snapshot_every: usize,
}

impl RunConfig {
    /// Benchmark defaults for `specimen`. Case III exchanges every step
    /// with inner iterations; the others every fifth step, single pass.
    pub fn defaults(specimen: Specimen) -> RunConfig {
        let h_pd = DEFAULT_H_PD;
        let delta = DEFAULT_DELTA_FACTOR * h_pd;
        let (every, scheme) = match specimen {
            Specimen::Case(CaseId::III) => (1, InnerScheme::SchemeB),
            _ => (5, InnerScheme::SinglePass),
        };
        RunConfig {
            specimen,
            force: DEFAULT_FORCE,
            supports: match specimen {
                Specimen::Midspan => Supports::PinPin,
                Specimen::Case(_) => Supports::PinRoller,
            },
            thickness: inches(1.0),
            material: MaterialParams::pmma(),
            h_pd,
            h_pum: DEFAULT_H_PUM,
            delta_factor: DEFAULT_DELTA_FACTOR,
            alpha: DEFAULT_ALPHA,
            penalty: DEFAULT_PENALTY,
            t_n: DEFAULT_T_N,
            t_s: DEFAULT_T_S,
            final_time: DEFAULT_FINAL_TIME,
            damping: 0.0,
            schedule: CouplingSchedule::new(DEFAULT_LOAD_STEPS, every, scheme, h_pd, delta),
            threshold: DEFAULT_THRESHOLD,
            policy: BoxPolicy::for_discretization(h_pd, delta),
            output_dir: PathBuf::from("out"),
            snapshot_every: 0,
        }
    }

    pub fn delta(&self) -> f64 {
        self.delta_factor * self.h_pd
    }

    /// Duration of each local solve, `t_n * t_s`.
    pub fn run_time(&self) -> f64 {
        self.t_n as f64 * self.t_s
    }

    pub fn domain(&self) -> DomainSpec {
        let mut d = self.specimen.domain();
        d.thickness = self.thickness;
        d
    }

    pub fn setup(&self) -> CoupledSetup {
        CoupledSetup {
            domain: self.domain(),
            material: self.material,
            h_pd: self.h_pd,
            delta: self.delta(),
            h_pum: self.h_pum,
            alpha: self.alpha,
            penalty: self.penalty,
            force: self.force,
            supports: self.supports,
            t_n: self.t_n,
            t_s: self.t_s,
            ramp_time: self.final_time,
            damping: self.damping,
            threshold: self.threshold,
            schedule: self.schedule.clone(),
            policy: self.policy.clone(),
            snapshot_dir: (self.snapshot_every > 0).then(|| self.output_dir.join("snapshots")),
            snapshot_every: self.snapshot_every,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |key: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::config(key, format!("must be positive, got {v}")))
            }
        };
        positive("force", self.force)?;
        positive("thickness", self.thickness)?;
        positive("discretization.h_pd", self.h_pd)?;
        positive("discretization.h_pum", self.h_pum)?;
        if !(self.delta_factor > 1.0) || !self.delta_factor.is_finite() {
            return Err(Error::config(
                "discretization.delta_factor",
                format!("the horizon must span more than one spacing, got {}", self.delta_factor),
            ));
        }
        if !(self.alpha > 1.0 && self.alpha < 2.0) {
            return Err(Error::config(
                "discretization.alpha",
                format!("must lie in (1, 2), got {}", self.alpha),
            ));
        }
        positive("discretization.penalty", self.penalty)?;
        if self.t_n == 0 {
            return Err(Error::config("discretization.t_n", "must be at least 1"));
        }
        positive("discretization.t_s", self.t_s)?;
        positive("discretization.final_time", self.final_time)?;
        if self.final_time > self.run_time() * (1.0 + 1e-9) {
            return Err(Error::config(
                "discretization.final_time",
                format!(
                    "ramp of {} s outlasts t_n * t_s = {} s",
                    self.final_time,
                    self.run_time()
                ),
            ));
        }
        if !(self.damping >= 0.0) || !self.damping.is_finite() {
            return Err(Error::config("discretization.damping", "must be non-negative"));
        }
        let s = &self.schedule;
        if s.n_load_steps == 0 {
            return Err(Error::config("schedule.n_load_steps", "must be at least 1"));
        }
        if s.exchange_every == 0 || s.exchange_every > s.n_load_steps {
            return Err(Error::config(
                "schedule.exchange_every",
                format!(
                    "must lie in [1, n_load_steps = {}], got {}",
                    s.n_load_steps, s.exchange_every
                ),
            ));
        }
        positive("schedule.inner_advance_tol", s.inner_advance_tol)?;
        if s.inner_max_iterations == 0 {
            return Err(Error::config("schedule.inner_max_iterations", "must be at least 1"));
        }
        if !(s.surface_distance >= 0.0) || !s.surface_distance.is_finite() {
            return Err(Error::config("schedule.surface_distance", "must be non-negative"));
        }
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return Err(Error::config(
                "schedule.damage_threshold",
                format!("must lie in (0, 1), got {}", self.threshold),
            ));
        }
        self.policy.validate(self.delta()).map_err(|e| match e {
            Error::InvalidParameter { name, reason } => Error::config(format!("box.{name}"), reason),
            other => other,
        })?;
        self.setup().validate()
    }

    /// Canonical text form; parsing it gives back an equal config.
    pub fn to_config_string(&self) -> String {
        let mut s = String::new();
        let m = &self.material;
        let sc = &self.schedule;
        let p = &self.policy;
        let _ = writeln!(s, "case = {}", self.specimen);
        let _ = writeln!(s, "force = {}", num(self.force));
        let _ = writeln!(s, "supports = {}", self.supports);
        let _ = writeln!(s, "thickness = {}", num(self.thickness));
        let _ = writeln!(s, "\n[material]");
        let _ = writeln!(s, "young = {}", num(m.young));
        let _ = writeln!(s, "fracture_energy = {}", num(m.fracture_energy));
        let _ = writeln!(s, "density = {}", num(m.density));
        let _ = writeln!(s, "\n[discretization]");
        let _ = writeln!(s, "h_pd = {}", num(self.h_pd));
        let _ = writeln!(s, "h_pum = {}", num(self.h_pum));
        let _ = writeln!(s, "delta_factor = {}", num(self.delta_factor));
        let _ = writeln!(s, "alpha = {}", num(self.alpha));
        let _ = writeln!(s, "penalty = {}", num(self.penalty));
        let _ = writeln!(s, "t_n = {}", self.t_n);
        let _ = writeln!(s, "t_s = {}", num(self.t_s));
        let _ = writeln!(s, "final_time = {}", num(self.final_time));
        let _ = writeln!(s, "damping = {}", num(self.damping));
        let _ = writeln!(s, "\n[schedule]");
        let _ = writeln!(s, "n_load_steps = {}", sc.n_load_steps);
        let _ = writeln!(s, "exchange_every = {}", sc.exchange_every);
        let _ = writeln!(s, "inner_scheme = {}", sc.inner_scheme);
        let _ = writeln!(s, "inner_advance_tol = {}", num(sc.inner_advance_tol));
        let _ = writeln!(s, "inner_max_iterations = {}", sc.inner_max_iterations);
        let _ = writeln!(s, "surface_distance = {}", num(sc.surface_distance));
        let _ = writeln!(s, "damage_threshold = {}", num(self.threshold));
        let _ = writeln!(s, "\n[box]");
        let _ = writeln!(s, "initial_size = {}", num(p.initial_size));
        let _ = writeln!(s, "margin = {}", num(p.margin));
        let _ = writeln!(s, "growth = {}", num(p.growth));
        let _ = writeln!(s, "max_size = {}", num(p.max_size));
        let _ = writeln!(s, "\n[output]");
        let _ = writeln!(s, "directory = {}", self.output_dir.display());
        let _ = writeln!(s, "snapshot_every = {}", self.snapshot_every);
        s
    }
}

/// Shortest text that parses back to `v` exactly.
fn num(v: f64) -> String {
    if v != 0.0 && (v.abs() < 1e-3 || v.abs() >= 1e6) {
        format!("{v:e}")
    } else {
        format!("{v}")
    }
}

struct Entries(HashMap<(String, String), String>);

impl Entries {
    fn take<T: FromStr>(&mut self, section: &str, key: &str) -> Result<Option<T>>
    where
        T::Err: fmt::Display,
    {
        match self.0.remove(&(section.to_string(), key.to_string())) {
            None => Ok(None),
            Some(raw) => raw
                .trim()
                .parse()
                .map(Some)
                .map_err(|e| Error::config(key_path(section, key), format!("cannot parse `{raw}`: {e}"))),
        }
    }
}

fn key_path(section: &str, key: &str) -> String {
    if section.is_empty() {
        key.to_string()
    } else {
        format!("{section}.{key}")
    }
}

/// Parses and validates a configuration.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let opt = ParseOption {
        enabled_escape: false,
        ..ParseOption::default()
    };
    let ini = Ini::load_from_str_opt(text, opt).map_err(|e| Error::config("", e.to_string()))?;
    let mut raw = HashMap::new();
    for (section, props) in ini.iter() {
        let section = section.unwrap_or("");
        let Some((_, allowed)) = KEYS.iter().find(|(name, _)| *name == section) else {
            return Err(Error::config(section, "unknown section"));
        };
        for (key, value) in props.iter() {
            if !allowed.contains(&key) {
                return Err(Error::config(key_path(section, key), "unknown key"));
            }
            if raw
                .insert((section.to_string(), key.to_string()), value.to_string())
                .is_some()
            {
                return Err(Error::config(key_path(section, key), "given more than once"));
            }
        }
    }
    let mut e = Entries(raw);
    let specimen: Specimen = e
        .take("", "case")?
        .ok_or_else(|| Error::config("case", "missing; expected I, II, III or midspan"))?;
    let mut c = RunConfig::defaults(specimen);
    macro_rules! set {
        ($target:expr, $section:literal, $key:literal) => {
            if let Some(v) = e.take($section, $key)? {
                $target = v;
            }
        };
    }
    set!(c.force, "", "force");
    set!(c.supports, "", "supports");
    set!(c.thickness, "", "thickness");

    let (mut young, mut gc, mut rho) = (c.material.young, c.material.fracture_energy, c.material.density);
    set!(young, "material", "young");
    set!(gc, "material", "fracture_energy");
    set!(rho, "material", "density");
    c.material = MaterialParams::new(young, POISSON_RATIO, gc, rho).map_err(|err| match err {
        Error::InvalidParameter { name, reason } => Error::config(format!("material.{name}"), reason),
        other => other,
    })?;

    set!(c.h_pd, "discretization", "h_pd");
    set!(c.h_pum, "discretization", "h_pum");
    set!(c.delta_factor, "discretization", "delta_factor");
    set!(c.alpha, "discretization", "alpha");
    set!(c.penalty, "discretization", "penalty");
    set!(c.t_n, "discretization", "t_n");
    set!(c.t_s, "discretization", "t_s");
    set!(c.final_time, "discretization", "final_time");
    set!(c.damping, "discretization", "damping");

    // Defaults tied to the spacing follow the configured one.
    let delta = c.delta();
    c.schedule = CouplingSchedule::new(
        c.schedule.n_load_steps,
        c.schedule.exchange_every,
        c.schedule.inner_scheme,
        c.h_pd,
        delta,
    );
    c.policy = BoxPolicy::for_discretization(c.h_pd, delta);
    set!(c.schedule.n_load_steps, "schedule", "n_load_steps");
    set!(c.schedule.exchange_every, "schedule", "exchange_every");
    set!(c.schedule.inner_scheme, "schedule", "inner_scheme");
    set!(c.schedule.inner_advance_tol, "schedule", "inner_advance_tol");
    set!(c.schedule.inner_max_iterations, "schedule", "inner_max_iterations");
    set!(c.schedule.surface_distance, "schedule", "surface_distance");
    set!(c.threshold, "schedule", "damage_threshold");
    set!(c.policy.initial_size, "box", "initial_size");
    set!(c.policy.margin, "box", "margin");
    set!(c.policy.growth, "box", "growth");
    set!(c.policy.max_size, "box", "max_size");
    if let Some(dir) = e.take::<String>("output", "directory")? {
        c.output_dir = PathBuf::from(dir);
    }
    set!(c.snapshot_every, "output", "snapshot_every");
    debug_assert!(e.0.is_empty(), "every allowed key is consumed");
    c.validate()?;
    Ok(c)
}

pub fn read_config(file: &Path) -> Result<RunConfig> {
    parse_config(&std::fs::read_to_string(file)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_sections_give_the_table_defaults() {
        let c = parse_config("case = I\n[discretization]\n").unwrap();
        assert_eq!(c.h_pd, 0.00049609375);
        assert_eq!(c.h_pum, 0.00396875);
        assert_eq!(c.delta(), 8.0 * c.h_pd);
        assert_eq!(c.t_n, 50000);
        assert_eq!(c.t_s, 2e-7);
        assert_eq!(c.final_time, 1e-3);
        assert_eq!(c.force, 9e5);
        assert_eq!(c.schedule.n_load_steps, 20);
        assert_eq!(c.schedule.exchange_every, 5);
    }

    #[test]
    fn case_three_defaults_to_inner_iterations() {
        let c = parse_config("case = III").unwrap();
        assert_eq!(c.schedule.exchange_every, 1);
        assert_eq!(c.schedule.inner_scheme, InnerScheme::SchemeB);
    }

    #[test]
    fn zero_delta_factor_is_rejected() {
        let err = parse_config("case = I\n[discretization]\ndelta_factor = 0\n").unwrap_err();
        assert!(
            matches!(err, Error::Config { ref key, .. } if key == "discretization.delta_factor"),
            "{err}"
        );
    }

    #[test]
    fn ramp_must_fit_in_the_run() {
        let c = parse_config("case = I\n[discretization]\nt_n = 50000\nt_s = 2e-7\nfinal_time = 0.001\n").unwrap();
        assert_eq!(c.t_n, 50000);
        let c = parse_config("case = I\n[discretization]\nt_n = 1250\nt_s = 8e-7\n").unwrap();
        assert!((c.run_time() - c.final_time).abs() < 1e-18);
        let err = parse_config("case = I\n[discretization]\nt_n = 1000\nfinal_time = 0.001\n").unwrap_err();
        assert!(matches!(err, Error::Config { ref key, .. } if key == "discretization.final_time"));
    }

    #[test]
    fn unknown_keys_and_sections_are_rejected() {
        for text in [
            "case = I\ncolour = red",
            "case = I\n[box]\nsize = 1",
            "case = I\n[extras]\nx = 1",
        ] {
            assert!(matches!(parse_config(text), Err(Error::Config { .. })), "{text}");
        }
    }

    #[test]
    fn bad_values_name_their_key() {
        let err = parse_config("case = I\n[schedule]\nn_load_steps = many").unwrap_err();
        assert!(matches!(err, Error::Config { ref key, .. } if key == "schedule.n_load_steps"));
        let err = parse_config("case = I\n[box]\nmargin = 0.001").unwrap_err();
        assert!(
            matches!(err, Error::Config { ref key, .. } if key == "box.margin"),
            "{err}"
        );
        let err = parse_config("case = I\n[material]\nyoung = -1").unwrap_err();
        assert!(
            matches!(err, Error::Config { ref key, .. } if key.starts_with("material.")),
            "{err}"
        );
        assert!(matches!(parse_config("force = 1"), Err(Error::Config { ref key, .. }) if key == "case"));
    }

    #[test]
    fn spacing_dependent_defaults_follow_h_pd() {
        let c = parse_config("case = II\n[discretization]\nh_pd = 0.001984375").unwrap();
        assert_eq!(c.policy, BoxPolicy::for_discretization(c.h_pd, c.delta()));
        assert_eq!(c.schedule.surface_distance, c.delta());
        assert_eq!(c.schedule.inner_advance_tol, c.h_pd);
    }

    #[test]
    fn canonical_text_round_trips() {
        for spec in ["I", "II", "III", "midspan"] {
            let c = parse_config(&format!("case = {spec}")).unwrap();
            let text = c.to_config_string();
            let again = parse_config(&text).unwrap();
            assert_eq!(again, c);
            assert_eq!(again.to_config_string(), text);
        }
    }

    #[test]
    fn midspan_specimen_is_symmetric() {
        let c = parse_config("case = midspan").unwrap();
        assert_eq!(c.supports, Supports::PinPin);
        let d = c.domain();
        assert_eq!(d.initial_crack[0].x, 0.0);
        assert!(d.holes.is_empty());
    }
}
