use crate::crack::CrackPath;
use crate::error::{Error, Result};
use crate::geom::{Rect, Vec2};
use crate::geometry::DomainSpec;
use std::fmt::Write as _;
use std::path::Path;

const COLORS: [&str; 6] = ["#d62728", "#000000", "#1f77b4", "#2ca02c", "#9467bd", "#ff7f0e"];
const PX_PER_M: f64 = 2000.0;
const MARGIN: f64 = 20.0;

/// SVG drawing of the beam, its holes, the initial crack (dashed), the
/// given boxes with increasing opacity and one polyline per labeled path.
pub fn render_svg(paths: &[(String, CrackPath)], domain: &DomainSpec, boxes: &[Rect]) -> Result<String> {
    if paths.is_empty() {
        return Err(Error::param("paths", "nothing to plot"));
    }
    let beam = domain.beam_rect();
    let map = |p: &Vec2| {
        (
            (p.x - beam.min.x) * PX_PER_M + MARGIN,
            (beam.max.y - p.y) * PX_PER_M + MARGIN,
        )
    };
    let width = beam.width() * PX_PER_M + 2.0 * MARGIN;
    let legend = 18.0 * paths.len() as f64 + 10.0;
    let height = beam.height() * PX_PER_M + 2.0 * MARGIN + legend;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.1}" height="{height:.1}" viewBox="0 0 {width:.1} {height:.1}">"#
    );
    let (x0, y0) = map(&crate::geom::vec2(beam.min.x, beam.max.y));
    let _ = writeln!(
        s,
        r#"<rect x="{x0:.2}" y="{y0:.2}" width="{:.2}" height="{:.2}" fill="white" stroke="black"/>"#,
        beam.width() * PX_PER_M,
        beam.height() * PX_PER_M
    );
    for h in &domain.holes {
        let (cx, cy) = map(&h.center);
        let _ = writeln!(
            s,
            r#"<circle cx="{cx:.2}" cy="{cy:.2}" r="{:.2}" fill="none" stroke="black"/>"#,
            h.radius * PX_PER_M
        );
    }
    let n = boxes.len();
    for (k, b) in boxes.iter().enumerate() {
        let (bx, by) = map(&crate::geom::vec2(b.min.x, b.max.y));
        let opacity = if n > 1 {
            0.1 + 0.5 * k as f64 / (n - 1) as f64
        } else {
            0.35
        };
        let _ = writeln!(
            s,
            r##"<rect x="{bx:.2}" y="{by:.2}" width="{:.2}" height="{:.2}" fill="#6baed6" fill-opacity="{opacity:.3}" stroke="none"/>"##,
            b.width() * PX_PER_M,
            b.height() * PX_PER_M
        );
    }
    let [c0, c1] = domain.initial_crack;
    let (ax, ay) = map(&c0);
    let (bx, by) = map(&c1);
    let _ = writeln!(
        s,
        r#"<line x1="{ax:.2}" y1="{ay:.2}" x2="{bx:.2}" y2="{by:.2}" stroke="black" stroke-dasharray="4 3"/>"#
    );
    for (k, (label, path)) in paths.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        let pts: Vec<String> = path
            .points()
            .iter()
            .map(|p| {
                let (x, y) = map(p);
                format!("{x:.2},{y:.2}")
            })
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#,
            pts.join(" ")
        );
        let ly = beam.height() * PX_PER_M + 2.0 * MARGIN + 14.0 + 18.0 * k as f64;
        let _ = writeln!(
            s,
            r#"<text x="{MARGIN:.1}" y="{ly:.1}" font-family="sans-serif" font-size="13" fill="{color}">{}</text>"#,
            escape(label)
        );
    }
    s.push_str("</svg>\n");
    Ok(s)
}

pub fn plot_comparison(paths: &[(String, CrackPath)], domain: &DomainSpec, boxes: &[Rect], file: &Path) -> Result<()> {
    std::fs::write(file, render_svg(paths, domain, boxes)?)?;
    Ok(())
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
