//! Scenario text format, version 1.
//!
//! ```text
//! fmmlab-scenario 1
//! <name>
//! <nx> <ny>
//! <x_min> <y_min> <dx> <dy>
//! <start_ix> <start_iy>
//! <goal_ix> <goal_iy>
//! <ny rows of nx τ values, row 0 at y_min>
//! ```
//!
//! Tokens are whitespace separated, `#` starts a comment, blank lines are
//! ignored.

use std::fmt::Write as _;

use super::{CostGrid, GridError, GridGeometry, Scenario};

pub const FORMAT_HEADER: &str = "fmmlab-scenario 1";

/// Shortest decimal that reads back to the same binary64; integral values
/// below 2^53 are written without a fraction.
pub fn format_number(v: f64) -> String {
    if v.fract() == 0.0 && v.abs() < 9007199254740992.0 {
        format!("{}", v as i64)
    } else {
        format!("{v:?}")
    }
}

fn parse_err(line: usize, reason: impl Into<String>) -> GridError {
    GridError::Parse { line, reason: reason.into() }
}

fn fields<T: std::str::FromStr>(line: usize, text: &str, count: usize, what: &str) -> Result<Vec<T>, GridError> {
    let toks: Vec<&str> = text.split_whitespace().collect();
    if toks.len() != count {
        return Err(parse_err(line, format!("expected {count} {what}, found {}", toks.len())));
    }
    toks.iter()
        .map(|t| t.parse::<T>().map_err(|_| parse_err(line, format!("bad {what} '{t}'"))))
        .collect()
}

pub fn load_scenario(text: &str) -> Result<Scenario, GridError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());
    let mut next = |what: &str| lines.next().ok_or_else(|| parse_err(text.lines().count() + 1, format!("missing {what}")));

    let (n, header) = next("header")?;
    if header.split_whitespace().collect::<Vec<_>>() != ["fmmlab-scenario", "1"] {
        return Err(parse_err(n, "expected 'fmmlab-scenario 1'"));
    }
    let (_, name) = next("name")?;
    let name = name.to_string();
    let (n, dims) = next("dimensions")?;
    let dims: Vec<usize> = fields(n, dims, 2, "node counts")?;
    let (n, geo) = next("geometry")?;
    let geo: Vec<f64> = fields(n, geo, 4, "geometry values")?;
    let geometry = GridGeometry { nx: dims[0], ny: dims[1], x_min: geo[0], y_min: geo[1], dx: geo[2], dy: geo[3] };
    geometry.validate().map_err(|_| parse_err(n, "invalid geometry"))?;
    let (n, s) = next("start")?;
    let s: Vec<usize> = fields(n, s, 2, "start indices")?;
    let (n, g) = next("goal")?;
    let g: Vec<usize> = fields(n, g, 2, "goal indices")?;

    let mut tau = Vec::with_capacity(geometry.len());
    for row in 0..geometry.ny {
        let (n, text) = next(&format!("cost row {row}"))?;
        let vals: Vec<f64> = fields(n, text, geometry.nx, "cost values")?;
        tau.extend(vals);
    }
    if let Some((n, _)) = lines.next() {
        return Err(parse_err(n, "trailing content"));
    }
    let grid = CostGrid::new(geometry, tau)?;
    Scenario::new(name, grid, (s[0], s[1]), (g[0], g[1]))
}

pub fn write_scenario(s: &Scenario) -> String {
    let g = s.geometry();
    let name: String = s.name.trim().chars().map(|c| if c == '#' || c.is_control() { '_' } else { c }).collect();
    let name = if name.is_empty() { "unnamed".to_string() } else { name };
    let mut out = String::new();
    let _ = writeln!(out, "{FORMAT_HEADER}");
    let _ = writeln!(out, "{name}");
    let _ = writeln!(out, "{} {}", g.nx, g.ny);
    let geo = [g.x_min, g.y_min, g.dx, g.dy].map(format_number).join(" ");
    let _ = writeln!(out, "{geo}");
    let _ = writeln!(out, "{} {}", s.start.0, s.start.1);
    let _ = writeln!(out, "{} {}", s.goal.0, s.goal.1);
    for row in s.grid.tau.chunks(g.nx) {
        let _ = writeln!(out, "{}", row.iter().map(|v| format_number(*v)).collect::<Vec<_>>().join(" "));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const TINY: &str = "fmmlab-scenario 1\ntiny\n2 2\n0 0 1 1\n0 0\n1 1\n1 1\n1 1\n";

    #[test]
    fn tiny_example() {
        let s = load_scenario(TINY).unwrap();
        assert_eq!(s.name, "tiny");
        assert_eq!((s.geometry().nx, s.geometry().ny), (2, 2));
        assert_eq!(s.grid.tau, vec![1.0; 4]);
        assert_eq!(write_scenario(&s), TINY);
    }

    #[test]
    fn comments_and_blank_lines() {
        let text = "# leading comment\nfmmlab-scenario 1 # v1\n\ntiny\n2 2\n0 0 0.5 0.25\n0 0\n1 1\n1 2.5\n3 1e-3 # last row\n";
        let s = load_scenario(text).unwrap();
        assert_eq!(s.grid.tau, vec![1.0, 2.5, 3.0, 1e-3]);
        assert_eq!(s.geometry().dy, 0.25);
        assert_eq!(load_scenario(&write_scenario(&s)).unwrap(), s);
    }

    #[test]
    fn errors() {
        let bad_cost = TINY.replace("1 1\n1 1\n1 1\n", "1 1\n1 0.0\n1 1\n");
        assert_eq!(load_scenario(&bad_cost).unwrap_err(), GridError::InvalidCost);
        let bad_end = TINY.replace("\n1 1\n1 1\n1 1\n", "\n2 1\n1 1\n1 1\n");
        assert_eq!(load_scenario(&bad_end).unwrap_err(), GridError::InvalidEndpoint);
        match load_scenario(&TINY.replace("fmmlab-scenario 1", "fmmlab-scenario 2")) {
            Err(GridError::Parse { line: 1, .. }) => {}
            other => panic!("{other:?}"),
        }
        match load_scenario(&TINY.replace("0 0 1 1", "0 0 1")) {
            Err(GridError::Parse { line: 4, .. }) => {}
            other => panic!("{other:?}"),
        }
        match load_scenario(&format!("{TINY}7\n")) {
            Err(GridError::Parse { line: 9, .. }) => {}
            other => panic!("{other:?}"),
        }
        assert!(matches!(load_scenario("fmmlab-scenario 1\nx\n2 2\n"), Err(GridError::Parse { .. })));
    }

    #[test]
    fn unnamed_and_number_format() {
        let mut s = load_scenario(TINY).unwrap();
        s.name = String::new();
        assert!(write_scenario(&s).lines().nth(1) == Some("unnamed"));
        assert_eq!(format_number(0.005), "0.005");
        assert_eq!(format_number(-3.0), "-3");
        assert_eq!(format_number(0.1 + 0.2), "0.30000000000000004");
        assert_eq!(format_number(1e-300), "1e-300");
        for v in [0.1, 1.0 / 3.0, 1e22, 5e-324, 123456.789] {
            assert_eq!(format_number(v).parse::<f64>().unwrap(), v);
        }
    }
}
