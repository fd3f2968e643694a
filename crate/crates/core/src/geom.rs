//! Planar geometry shared by the solvers: points, rectangles, circles and
//! segment predicates.

use nalgebra::Vector2;

pub type Vec2 = Vector2<f64>;

#[inline]
pub fn vec2(x: f64, y: f64) -> Vec2 {
    Vec2::new(x, y)
}

#[inline]
pub fn cross(a: &Vec2, b: &Vec2) -> f64 {
    a.x * b.y - a.y * b.x
}

/// Axis-aligned rectangle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub min: Vec2,
    pub max: Vec2,
}

impl Rect {
    pub fn new(min: Vec2, max: Vec2) -> Self {
        Rect { min, max }
    }

    pub fn from_center(center: Vec2, width: f64, height: f64) -> Self {
        let half = vec2(0.5 * width, 0.5 * height);
        Rect::new(center - half, center + half)
    }

    pub fn width(&self) -> f64 {
        self.max.x - self.min.x
    }

    pub fn height(&self) -> f64 {
        self.max.y - self.min.y
    }

    pub fn area(&self) -> f64 {
        self.width().max(0.0) * self.height().max(0.0)
    }

    pub fn center(&self) -> Vec2 {
        0.5 * (self.min + self.max)
    }

    pub fn is_empty(&self) -> bool {
        !(self.max.x > self.min.x && self.max.y > self.min.y)
    }

    /// Closed containment.
    pub fn contains(&self, p: &Vec2) -> bool {
        p.x >= self.min.x && p.x <= self.max.x && p.y >= self.min.y && p.y <= self.max.y
    }

    pub fn intersection(&self, other: &Rect) -> Rect {
        Rect::new(
            vec2(self.min.x.max(other.min.x), self.min.y.max(other.min.y)),
            vec2(self.max.x.min(other.max.x), self.max.y.min(other.max.y)),
        )
    }

    pub fn intersects(&self, other: &Rect) -> bool {
        self.min.x <= other.max.x && other.min.x <= self.max.x && self.min.y <= other.max.y && other.min.y <= self.max.y
    }

    pub fn union_point(&self, p: &Vec2) -> Rect {
        Rect::new(
            vec2(self.min.x.min(p.x), self.min.y.min(p.y)),
            vec2(self.max.x.max(p.x), self.max.y.max(p.y)),
        )
    }

    pub fn translate(&self, d: Vec2) -> Rect {
        Rect::new(self.min + d, self.max + d)
    }

    pub fn expand(&self, by: f64) -> Rect {
        Rect::new(self.min - vec2(by, by), self.max + vec2(by, by))
    }

    /// Scales width and height about the center.
    pub fn scale(&self, factor: f64) -> Rect {
        Rect::from_center(self.center(), self.width() * factor, self.height() * factor)
    }

    /// Whether the closed segment `a`-`b` touches the closed rectangle.
    pub fn intersects_segment(&self, a: &Vec2, b: &Vec2) -> bool {
        if self.contains(a) || self.contains(b) {
            return true;
        }
        let seg_box = Rect::new(vec2(a.x.min(b.x), a.y.min(b.y)), vec2(a.x.max(b.x), a.y.max(b.y)));
        if !self.intersects(&seg_box) {
            return false;
        }
        let c = [
            self.min,
            vec2(self.max.x, self.min.y),
            self.max,
            vec2(self.min.x, self.max.y),
        ];
        (0..4).any(|k| segments_intersect(a, b, &c[k], &c[(k + 1) % 4]))
    }
}

/// Circular hole.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Circle {
    pub center: Vec2,
    pub radius: f64,
}

impl Circle {
    pub fn contains(&self, p: &Vec2) -> bool {
        (p - self.center).norm() < self.radius
    }

    pub fn distance_to_boundary(&self, p: &Vec2) -> f64 {
        ((p - self.center).norm() - self.radius).abs()
    }

    /// Whether the segment passes through the open disc.
    pub fn crosses_segment(&self, a: &Vec2, b: &Vec2) -> bool {
        point_segment_distance(&self.center, a, b) < self.radius
    }

    /// Classifies the rectangle against the disc: fully inside, fully
    /// outside, or cut by the circle.
    pub fn classify(&self, r: &Rect) -> Overlap {
        let nearest = vec2(
            self.center.x.clamp(r.min.x, r.max.x),
            self.center.y.clamp(r.min.y, r.max.y),
        );
        if (nearest - self.center).norm() >= self.radius {
            return Overlap::Outside;
        }
        let far = vec2(
            if (self.center.x - r.min.x).abs() > (self.center.x - r.max.x).abs() {
                r.min.x
            } else {
                r.max.x
            },
            if (self.center.y - r.min.y).abs() > (self.center.y - r.max.y).abs() {
                r.min.y
            } else {
                r.max.y
            },
        );
        if (far - self.center).norm() < self.radius {
            Overlap::Inside
        } else {
            Overlap::Cut
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Overlap {
    Inside,
    Outside,
    Cut,
}

#[inline]
fn orient(a: &Vec2, b: &Vec2, c: &Vec2) -> f64 {
    cross(&(b - a), &(c - a))
}

#[inline]
fn on_segment(a: &Vec2, b: &Vec2, p: &Vec2) -> bool {
    p.x >= a.x.min(b.x) && p.x <= a.x.max(b.x) && p.y >= a.y.min(b.y) && p.y <= a.y.max(b.y)
}

/// Closed segment intersection by orientation tests; touching counts.
pub fn segments_intersect(p1: &Vec2, p2: &Vec2, q1: &Vec2, q2: &Vec2) -> bool {
    let d1 = orient(q1, q2, p1);
    let d2 = orient(q1, q2, p2);
    let d3 = orient(p1, p2, q1);
    let d4 = orient(p1, p2, q2);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0)) {
        return true;
    }
    (d1 == 0.0 && on_segment(q1, q2, p1))
        || (d2 == 0.0 && on_segment(q1, q2, p2))
        || (d3 == 0.0 && on_segment(p1, p2, q1))
        || (d4 == 0.0 && on_segment(p1, p2, q2))
}

/// Intersection parameter `t` along `p1 + t (p2 - p1)` for properly
/// crossing or touching segments.
pub fn segment_intersection_param(p1: &Vec2, p2: &Vec2, q1: &Vec2, q2: &Vec2) -> Option<f64> {
    let r = p2 - p1;
    let s = q2 - q1;
    let denom = cross(&r, &s);
    if denom.abs() < 1e-300 {
        return None;
    }
    let t = cross(&(q1 - p1), &s) / denom;
    let u = cross(&(q1 - p1), &r) / denom;
    ((0.0..=1.0).contains(&t) && (0.0..=1.0).contains(&u)).then_some(t)
}

/// Closest point on the segment and its parameter in `[0, 1]`.
pub fn closest_on_segment(p: &Vec2, a: &Vec2, b: &Vec2) -> (Vec2, f64) {
    let ab = b - a;
    let len2 = ab.norm_squared();
    if len2 == 0.0 {
        return (*a, 0.0);
    }
    let t = ((p - a).dot(&ab) / len2).clamp(0.0, 1.0);
    (a + ab * t, t)
}

pub fn point_segment_distance(p: &Vec2, a: &Vec2, b: &Vec2) -> f64 {
    (p - closest_on_segment(p, a, b).0).norm()
}

pub fn polyline_length(points: &[Vec2]) -> f64 {
    points.windows(2).map(|w| (w[1] - w[0]).norm()).sum()
}

/// Douglas–Peucker simplification; endpoints are always kept.
pub fn douglas_peucker(points: &[Vec2], tol: f64) -> Vec<Vec2> {
    if points.len() < 3 {
        return points.to_vec();
    }
    let mut keep = vec![false; points.len()];
    keep[0] = true;
    keep[points.len() - 1] = true;
    let mut stack = vec![(0usize, points.len() - 1)];
    while let Some((lo, hi)) = stack.pop() {
        if hi <= lo + 1 {
            continue;
        }
        let (mut worst, mut worst_d) = (lo, -1.0);
        for k in lo + 1..hi {
            let d = point_segment_distance(&points[k], &points[lo], &points[hi]);
            if d > worst_d {
                worst = k;
                worst_d = d;
            }
        }
        if worst_d > tol {
            keep[worst] = true;
            stack.push((lo, worst));
            stack.push((worst, hi));
        }
    }
    points.iter().zip(keep).filter_map(|(p, k)| k.then_some(*p)).collect()
}

/// Gauss–Legendre nodes and weights on `[-1, 1]` by Newton iteration on
/// the Legendre recurrence.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n > 0);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, 0.0);
            for j in 0..n {
                let p2 = p1;
                p1 = p0;
                p0 = ((2 * j + 1) as f64 * z * p1 - j as f64 * p2) / (j + 1) as f64;
            }
            dp = n as f64 * (z * p0 - p1) / (z * z - 1.0);
            let dz = p0 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_rules_integrate_polynomials() {
        for n in 1..=10 {
            let (x, w) = gauss_legendre(n);
            for deg in 0..2 * n {
                let num: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32)).sum();
                let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
                assert!((num - exact).abs() < 1e-14, "n={n} deg={deg}");
            }
        }
    }

    #[test]
    fn touching_segments_intersect() {
        let a = vec2(0.0, 0.0);
        let b = vec2(1.0, 0.0);
        assert!(segments_intersect(&a, &b, &vec2(1.0, 0.0), &vec2(1.0, 1.0)));
        assert!(segments_intersect(&a, &b, &vec2(0.5, -1.0), &vec2(0.5, 1.0)));
        assert!(!segments_intersect(&a, &b, &vec2(0.5, 0.1), &vec2(0.5, 1.0)));
        // collinear overlap
        assert!(segments_intersect(&a, &b, &vec2(0.5, 0.0), &vec2(2.0, 0.0)));
        assert!(!segments_intersect(&a, &b, &vec2(1.5, 0.0), &vec2(2.0, 0.0)));
    }

    #[test]
    fn circle_classification() {
        let c = Circle {
            center: vec2(0.0, 0.0),
            radius: 1.0,
        };
        let inside = Rect::new(vec2(-0.1, -0.1), vec2(0.1, 0.1));
        let outside = Rect::new(vec2(2.0, 2.0), vec2(3.0, 3.0));
        let cut = Rect::new(vec2(0.5, 0.5), vec2(1.5, 1.5));
        assert_eq!(c.classify(&inside), Overlap::Inside);
        assert_eq!(c.classify(&outside), Overlap::Outside);
        assert_eq!(c.classify(&cut), Overlap::Cut);
    }

    #[test]
    fn douglas_peucker_drops_collinear_vertices() {
        let pts: Vec<Vec2> = (0..10).map(|i| vec2(i as f64, 0.0)).collect();
        let s = douglas_peucker(&pts, 1e-6);
        assert_eq!(s, vec![pts[0], pts[9]]);
    }
}
