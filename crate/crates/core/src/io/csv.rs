use crate::crack::CrackPath;
use crate::error::{Error, Result};
use crate::geom::{vec2, Vec2};
use crate::pd_solver::PDState;
use std::fmt::Write as _;
use std::path::Path;

/// Nine significant digits, shortest decimal form, no exponent.
pub fn format_number(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return if v.is_nan() {
            "nan".into()
        } else if v.is_infinite() {
            format!("{v}")
        } else {
            "0".into()
        };
    }
    let rounded: f64 = format!("{v:.8e}").parse().expect("formatted float parses");
    format!("{rounded}")
}

pub fn crack_csv_string(path: &CrackPath) -> String {
    let mut s = String::from("x,y\n");
    for p in path.points() {
        let _ = writeln!(s, "{},{}", format_number(p.x), format_number(p.y));
    }
    s
}

pub fn write_crack_csv(path: &CrackPath, file: &Path) -> Result<()> {
    std::fs::write(file, crack_csv_string(path))?;
    Ok(())
}

pub fn parse_crack_csv(text: &str) -> Result<CrackPath> {
    let mut lines = text.lines().map(str::trim).enumerate().filter(|(_, l)| !l.is_empty());
    match lines.next() {
        Some((_, "x,y")) => {}
        _ => return Err(Error::InvalidPath("missing `x,y` header".into())),
    }
    let mut pts = Vec::new();
    for (n, line) in lines {
        let mut it = line.split(',');
        let parse = |s: Option<&str>| -> Result<f64> {
            s.and_then(|v| v.trim().parse::<f64>().ok())
                .ok_or_else(|| Error::InvalidPath(format!("line {}: expected two numbers", n + 1)))
        };
        let x = parse(it.next())?;
        let y = parse(it.next())?;
        if it.next().is_some() {
            return Err(Error::InvalidPath(format!("line {}: too many columns", n + 1)));
        }
        pts.push(vec2(x, y));
    }
    CrackPath::new(pts)
}

pub fn read_crack_csv(file: &Path) -> Result<CrackPath> {
    parse_crack_csv(&std::fs::read_to_string(file)?)
}

/// `x,y,ux,uy,damage` per node.
pub fn write_pd_snapshot(state: &PDState, damage: &[f64], file: &Path) -> Result<()> {
    let mut s = String::from("x,y,ux,uy,damage\n");
    for (i, p) in state.positions.iter().enumerate() {
        let u = state.displacement[i];
        let _ = writeln!(
            s,
            "{},{},{},{},{}",
            format_number(p.x),
            format_number(p.y),
            format_number(u.x),
            format_number(u.y),
            format_number(damage[i])
        );
    }
    std::fs::write(file, s)?;
    Ok(())
}

/// `x,y,ux,uy` for sampled displacements.
pub fn write_displacement_samples(points: &[Vec2], values: &[Vec2], file: &Path) -> Result<()> {
    let mut s = String::from("x,y,ux,uy\n");
    for (p, u) in points.iter().zip(values) {
        let _ = writeln!(
            s,
            "{},{},{},{}",
            format_number(p.x),
            format_number(p.y),
            format_number(u.x),
            format_number(u.y)
        );
    }
    std::fs::write(file, s)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_case, CaseId};

    #[test]
    fn number_format() {
        assert_eq!(format_number(-0.1524), "-0.1524");
        assert_eq!(format_number(0.0), "0");
        assert_eq!(format_number(-0.0), "0");
        assert_eq!(format_number(1.0 / 3.0), "0.333333333");
        assert_eq!(format_number(123456789.4), "123456789");
        assert_eq!(format_number(2e-7), "0.0000002");
    }

    #[test]
    fn two_point_file() {
        let c = build_case(CaseId::I).initial_crack_path();
        let s = crack_csv_string(&c);
        assert_eq!(s.lines().count(), 3);
        assert!(s.ends_with('\n') && !s.contains('\r'));
        let first = s.lines().nth(1).unwrap();
        assert_eq!(first, "-0.1524,-0.1016");
    }

    #[test]
    fn round_trip_bytes() {
        let c = CrackPath::new(vec![
            vec2(-0.15240000001, -0.0762),
            vec2(-0.1491234567891, -0.05),
            vec2(-0.14, 0.012345678912),
        ])
        .unwrap();
        let once = crack_csv_string(&c);
        let twice = crack_csv_string(&parse_crack_csv(&once).unwrap());
        assert_eq!(once, twice);
        let dir = tempfile::tempdir().unwrap();
        let f = dir.path().join("c.csv");
        write_crack_csv(&c, &f).unwrap();
        let back = read_crack_csv(&f).unwrap();
        write_crack_csv(&back, &f).unwrap();
        assert_eq!(std::fs::read_to_string(&f).unwrap(), once);
    }

    #[test]
    fn malformed_input() {
        assert!(parse_crack_csv("a,b\n0,0\n1,1\n").is_err());
        assert!(parse_crack_csv("x,y\n0,0\n1\n").is_err());
        assert!(parse_crack_csv("x,y\n0,0\n1,1,1\n").is_err());
        assert!(parse_crack_csv("x,y\n0,0\n").is_err());
    }
}
