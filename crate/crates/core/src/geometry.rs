//! Three-point-bending beam geometry and the benchmark cases.
//!
//! Beam coordinates are used everywhere: `x` from midspan (negative to the
//! left), `y` from mid-height, both in meters.

use crate::crack::CrackPath;
use crate::error::{Error, Result};
use crate::geom::{vec2, Circle, Rect, Vec2};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

pub const INCH: f64 = 0.0254;

pub fn inches(v: f64) -> f64 {
    v * INCH
}

pub fn to_inches(m: f64) -> f64 {
    m / INCH
}

/// Benchmark specimen identifiers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CaseId {
    I,
    II,
    III,
}

impl CaseId {
    pub const ALL: [CaseId; 3] = [CaseId::I, CaseId::II, CaseId::III];

    pub fn number(self) -> usize {
        match self {
            CaseId::I => 1,
            CaseId::II => 2,
            CaseId::III => 3,
        }
    }
}

impl fmt::Display for CaseId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CaseId::I => "I",
            CaseId::II => "II",
            CaseId::III => "III",
        })
    }
}

impl FromStr for CaseId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "I" | "1" | "CASE1" | "CASEI" => Ok(CaseId::I),
            "II" | "2" | "CASE2" | "CASEII" => Ok(CaseId::II),
            "III" | "3" | "CASE3" | "CASEIII" => Ok(CaseId::III),
            _ => Err(Error::UnknownCase(s.to_string())),
        }
    }
}

/// One row of the specimen table: crack length `a` and offset `b` from
/// midspan (inches), and the number of holes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CaseSpec {
    pub id: CaseId,
    pub a: f64,
    pub b: f64,
    pub n_holes: usize,
}

impl CaseSpec {
    pub fn of(id: CaseId) -> CaseSpec {
        match id {
            CaseId::I => CaseSpec {
                id,
                a: 1.0,
                b: 6.0,
                n_holes: 0,
            },
            CaseId::II => CaseSpec {
                id,
                a: 1.0,
                b: 6.0,
                n_holes: 3,
            },
            CaseId::III => CaseSpec {
                id,
                a: 1.5,
                b: 5.0,
                n_holes: 3,
            },
        }
    }
}

/// Beam outline, supports, holes and the initial edge crack.
#[derive(Debug, Clone, PartialEq)]
pub struct DomainSpec {
    pub length: f64,
    pub height: f64,
    /// Distance of each support from its beam end.
    pub support_inset: f64,
    /// Out-of-plane thickness. The solvers work per unit thickness; this is
    /// only used to report total forces.
    pub thickness: f64,
    pub holes: Vec<Circle>,
    /// Bottom and top vertex of the initial crack.
    pub initial_crack: [Vec2; 2],
}

impl DomainSpec {
    /// 20 in x 8 in beam with an edge crack of length `a` at `x = -b`
    /// (inches) and optionally the three holes of cases II and III.
    pub fn three_point_bending(a: f64, b: f64, with_holes: bool) -> Result<DomainSpec> {
        if !(a > 0.0 && a < 8.0) {
            return Err(Error::param(
                "a",
                format!("crack length must lie in (0, 8) in, got {a}"),
            ));
        }
        if !(b.abs() < 9.0) {
            return Err(Error::param(
                "b",
                format!("crack must lie between the supports, got {b}"),
            ));
        }
        let height = inches(8.0);
        let bottom = -0.5 * height;
        let holes = if with_holes {
            [2.75, 0.75, -1.25]
                .iter()
                .map(|&y| Circle {
                    center: vec2(inches(-4.0), inches(y)),
                    radius: inches(0.25),
                })
                .collect()
        } else {
            Vec::new()
        };
        let x = inches(-b);
        let domain = DomainSpec {
            length: inches(20.0),
            height,
            support_inset: inches(1.0),
            thickness: inches(1.0),
            holes,
            initial_crack: [vec2(x, bottom), vec2(x, bottom + inches(a))],
        };
        domain.validate()?;
        Ok(domain)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.length > 0.0 && self.height > 0.0 && self.thickness > 0.0) {
            return Err(Error::param("domain", "dimensions must be positive"));
        }
        let beam = self.beam_rect();
        for h in &self.holes {
            if !(h.radius > 0.0) || !beam.contains(&h.center) {
                return Err(Error::param("holes", "holes must lie inside the beam"));
            }
            let c = h.center;
            let clearance = (c.x - beam.min.x)
                .min(beam.max.x - c.x)
                .min(c.y - beam.min.y)
                .min(beam.max.y - c.y);
            if clearance <= h.radius {
                return Err(Error::param("holes", "holes must lie inside the beam"));
            }
        }
        let [p, q] = self.initial_crack;
        if p.y != beam.min.y {
            return Err(Error::param("initial_crack", "crack must start on the bottom edge"));
        }
        if self.holes.iter().any(|h| h.crosses_segment(&p, &q)) {
            return Err(Error::param("initial_crack", "crack intersects a hole"));
        }
        Ok(())
    }

    pub fn beam_rect(&self) -> Rect {
        Rect::from_center(vec2(0.0, 0.0), self.length, self.height)
    }

    pub fn in_hole(&self, p: &Vec2) -> bool {
        self.holes.iter().any(|h| h.contains(p))
    }

    /// Closed beam rectangle minus the open hole discs.
    pub fn contains(&self, p: &Vec2) -> bool {
        self.beam_rect().contains(p) && !self.in_hole(p)
    }

    /// Pin (left) and roller (right) support points on the bottom edge.
    pub fn supports(&self) -> (Vec2, Vec2) {
        let x = 0.5 * self.length - self.support_inset;
        let y = -0.5 * self.height;
        (vec2(-x, y), vec2(x, y))
    }

    /// Midspan point of the top edge where the load acts.
    pub fn load_point(&self) -> Vec2 {
        vec2(0.0, 0.5 * self.height)
    }

    pub fn initial_crack_path(&self) -> CrackPath {
        CrackPath::new(self.initial_crack.to_vec()).expect("validated initial crack")
    }

    /// Distance from `p` to the nearest free surface (beam edge or hole).
    pub fn distance_to_free_surface(&self, p: &Vec2) -> f64 {
        let r = self.beam_rect();
        let edge = (p.x - r.min.x).min(r.max.x - p.x).min(p.y - r.min.y).min(r.max.y - p.y);
        self.holes
            .iter()
            .map(|h| h.distance_to_boundary(p))
            .fold(edge, f64::min)
    }
}

pub fn build_case(id: CaseId) -> DomainSpec {
    let spec = CaseSpec::of(id);
    DomainSpec::three_point_bending(spec.a, spec.b, spec.n_holes > 0).expect("tabulated case")
}

const REFERENCE_CSV: [&str; 3] = [
    include_str!("../data/case1_reference.csv"),
    include_str!("../data/case2_reference.csv"),
    include_str!("../data/case3_reference.csv"),
];

pub fn reference_file_name(id: CaseId) -> String {
    format!("case{}_reference.csv", id.number())
}

/// Bundled reference crack path of the experiment for a case.
pub fn reference_path(id: CaseId) -> CrackPath {
    crate::io::parse_crack_csv(REFERENCE_CSV[id.number() - 1]).expect("bundled reference parses")
}

/// Reads `case<N>_reference.csv` from `dir`.
pub fn load_reference_path(dir: &Path, id: CaseId) -> Result<CrackPath> {
    crate::io::read_crack_csv(&dir.join(reference_file_name(id)))
}
