use crate::error::{Error, Result};
use crate::geom::{closest_on_segment, cross, polyline_length, segments_intersect, Rect, Vec2};

/// Distance below which a point counts as lying on the crack.
pub const ON_CRACK_TOL: f64 = 1e-12;

/// Simple polyline from the crack mouth to the tip (last vertex).
#[derive(Debug, Clone, PartialEq)]
pub struct CrackPath {
    points: Vec<Vec2>,
}

impl CrackPath {
    pub fn new(points: Vec<Vec2>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::InvalidPath(format!(
                "need at least 2 vertices, got {}",
                points.len()
            )));
        }
        if let Some(p) = points.iter().find(|p| !(p.x.is_finite() && p.y.is_finite())) {
            return Err(Error::InvalidPath(format!("non-finite vertex ({}, {})", p.x, p.y)));
        }
        if let Some(k) = points.windows(2).position(|w| w[0] == w[1]) {
            return Err(Error::InvalidPath(format!("repeated vertex at index {}", k + 1)));
        }
        if !is_simple(&points) {
            return Err(Error::InvalidPath("polyline intersects itself".into()));
        }
        Ok(CrackPath { points })
    }

    pub fn points(&self) -> &[Vec2] {
        &self.points
    }

    pub fn into_points(self) -> Vec<Vec2> {
        self.points
    }

    pub fn start(&self) -> Vec2 {
        self.points[0]
    }

    pub fn tip(&self) -> Vec2 {
        *self.points.last().unwrap()
    }

    /// Unit direction of the last segment.
    pub fn tip_direction(&self) -> Vec2 {
        let n = self.points.len();
        (self.points[n - 1] - self.points[n - 2]).normalize()
    }

    pub fn arc_length(&self) -> f64 {
        polyline_length(&self.points)
    }

    pub fn segments(&self) -> impl Iterator<Item = (Vec2, Vec2)> + '_ {
        self.points.windows(2).map(|w| (w[0], w[1]))
    }

    pub fn bounding_rect(&self) -> Rect {
        let mut r = Rect::new(self.points[0], self.points[0]);
        for p in &self.points[1..] {
            r = r.union_point(p);
        }
        r
    }

    /// Whether the closed segment `a`-`b` meets the polyline. Touching
    /// counts as crossing.
    pub fn crosses_segment(&self, a: &Vec2, b: &Vec2) -> bool {
        let (lo_x, hi_x) = (a.x.min(b.x), a.x.max(b.x));
        let (lo_y, hi_y) = (a.y.min(b.y), a.y.max(b.y));
        self.segments().any(|(p, q)| {
            if p.x.max(q.x) < lo_x || p.x.min(q.x) > hi_x || p.y.max(q.y) < lo_y || p.y.min(q.y) > hi_y {
                return false;
            }
            segments_intersect(a, b, &p, &q)
        })
    }

    pub fn intersects_rect(&self, r: &Rect) -> bool {
        self.segments().any(|(p, q)| r.intersects_segment(&p, &q))
    }

    /// Nearest point on the polyline: `(distance, segment index, parameter)`.
    pub fn nearest(&self, p: &Vec2) -> (f64, usize, f64) {
        let mut best = (f64::INFINITY, 0, 0.0);
        for (k, (a, b)) in self.segments().enumerate() {
            let (q, t) = closest_on_segment(p, &a, &b);
            let d = (p - q).norm();
            if d < best.0 {
                best = (d, k, t);
            }
        }
        best
    }

    pub fn distance(&self, p: &Vec2) -> f64 {
        self.nearest(p).0
    }

    /// Side of the polyline, `+1` on the left of the direction of travel
    /// and `-1` on the right. `None` within [`ON_CRACK_TOL`] of the crack.
    ///
    /// Points closest to an interior vertex use the averaged tangent of
    /// the two adjacent segments. Points exactly on the tip extension line
    /// get `+1`.
    pub fn side(&self, p: &Vec2) -> Option<f64> {
        let (d, k, t) = self.nearest(p);
        if d < ON_CRACK_TOL {
            return None;
        }
        let pts = &self.points;
        let n = pts.len();
        let (tangent, origin) = if t > 0.0 && t < 1.0 {
            (pts[k + 1] - pts[k], pts[k])
        } else {
            let v = if t == 0.0 { k } else { k + 1 };
            let tangent = if v == 0 {
                pts[1] - pts[0]
            } else if v == n - 1 {
                pts[n - 1] - pts[n - 2]
            } else {
                (pts[v] - pts[v - 1]).normalize() + (pts[v + 1] - pts[v]).normalize()
            };
            (tangent, pts[v])
        };
        let s = cross(&tangent, &(p - origin));
        Some(if s < 0.0 { -1.0 } else { 1.0 })
    }

    /// Path truncated to the given arc length from the start.
    pub fn truncated(&self, length: f64) -> CrackPath {
        let mut out = vec![self.points[0]];
        let mut acc = 0.0;
        for (a, b) in self.segments() {
            let l = (b - a).norm();
            if acc + l >= length {
                let f = ((length - acc) / l).clamp(0.0, 1.0);
                let q = a + (b - a) * f;
                if q != *out.last().unwrap() {
                    out.push(q);
                }
                break;
            }
            acc += l;
            out.push(b);
        }
        if out.len() < 2 {
            return CrackPath {
                points: self.points[..2].to_vec(),
            };
        }
        CrackPath { points: out }
    }

    /// Vertices of the part beyond arc length `length`, starting with the
    /// point at that arc length. Just the tip when `length` covers the
    /// whole path.
    pub fn beyond(&self, length: f64) -> Vec<Vec2> {
        let mut acc = 0.0;
        for (k, (a, b)) in self.segments().enumerate() {
            let l = (b - a).norm();
            if acc + l > length {
                let f = ((length - acc) / l).clamp(0.0, 1.0);
                let first = a + (b - a) * f;
                let mut out = vec![first];
                out.extend(self.points[k + 1..].iter().filter(|&&p| p != first));
                return out;
            }
            acc += l;
        }
        vec![self.tip()]
    }
}

/// No two non-adjacent segments meet and no adjacent pair folds back.
pub fn is_simple(points: &[Vec2]) -> bool {
    let m = points.len().saturating_sub(1);
    for i in 0..m {
        let (a, b) = (points[i], points[i + 1]);
        if i + 1 < m {
            let c = points[i + 2];
            let d1 = b - a;
            let d2 = c - b;
            if cross(&d1, &d2) == 0.0 && d1.dot(&d2) < 0.0 {
                return false;
            }
        }
        for j in i + 2..m {
            if segments_intersect(&a, &b, &points[j], &points[j + 1]) {
                return false;
            }
        }
    }
    true
}
