use std::fmt::Write as _;

use super::grid::{DiscretePath, Grid};
use super::pw::PwPath;
use super::time_change::TimeChange;
use crate::error::{Error, Result};

/// Formats a float with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn header(dim: usize) -> String {
    let mut h = String::from("time");
    for c in 1..=dim {
        write!(h, ",v{c}").unwrap();
    }
    h
}

/// CSV with header `time,v1,...,vd`, one row per grid node.
pub fn path_to_csv(path: &DiscretePath) -> String {
    let mut out = header(path.dim());
    out.push('\n');
    for k in 0..=path.grid().steps() {
        out.push_str(&fmt_f64(path.grid().time(k)));
        for v in path.node(k) {
            out.push(',');
            out.push_str(&fmt_f64(*v));
        }
        out.push('\n');
    }
    out
}

/// CSV of a piecewise path: one row per knot (right values), plus a final row
/// at `horizon`.
pub fn pw_to_csv(path: &PwPath, horizon: f64) -> String {
    let mut out = header(path.dim());
    out.push('\n');
    let mut times: Vec<f64> = path.knots().iter().copied().filter(|&k| k <= horizon).collect();
    if times.last().is_none_or(|&l| l < horizon) {
        times.push(horizon);
    }
    for t in times {
        out.push_str(&fmt_f64(t));
        for v in path.eval(t) {
            out.push(',');
            out.push_str(&fmt_f64(v));
        }
        out.push('\n');
    }
    out
}

/// Parses a path CSV written by [`path_to_csv`]; times must form a uniform grid.
pub fn path_from_csv(text: &str) -> Result<DiscretePath> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let head = lines.next().ok_or_else(|| Error::Parse("empty path csv".into()))?;
    let cols: Vec<&str> = head.split(',').map(str::trim).collect();
    if cols.first() != Some(&"time") || cols.len() < 2 {
        return Err(Error::Parse("path csv header must start with time,v1".into()));
    }
    let dim = cols.len() - 1;
    let mut times = Vec::new();
    let mut values = Vec::new();
    for (i, line) in lines.enumerate() {
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != dim + 1 {
            return Err(Error::Parse(format!("row {} has {} fields, expected {}", i + 2, fields.len(), dim + 1)));
        }
        let mut nums = fields.iter().map(|f| f.parse::<f64>().map_err(|e| Error::Parse(format!("row {}: {e}", i + 2))));
        times.push(nums.next().unwrap()?);
        for n in nums {
            values.push(n?);
        }
    }
    if times.len() < 2 {
        return Err(Error::Parse("path csv needs at least two rows".into()));
    }
    let steps = times.len() - 1;
    let grid = Grid::new(*times.last().unwrap(), steps)?;
    for (k, &t) in times.iter().enumerate() {
        if (t - grid.time(k)).abs() > 1e-9 * grid.step() {
            return Err(Error::Parse(format!("time {t} breaks the uniform grid")));
        }
    }
    DiscretePath::new(grid, dim, values)
}

/// CSV `input,output` of all knots on `[0, t]`.
pub fn time_change_to_csv(l: &TimeChange) -> String {
    let mut out = String::from("input,output\n");
    for &(x, y) in l.knots() {
        writeln!(out, "{},{}", fmt_f64(x), fmt_f64(y)).unwrap();
    }
    out
}

pub fn time_change_from_csv(text: &str) -> Result<TimeChange> {
    let mut rows = Vec::new();
    for (i, line) in text.lines().skip(1).filter(|l| !l.trim().is_empty()).enumerate() {
        let mut it = line.split(',').map(|f| f.trim().parse::<f64>());
        match (it.next(), it.next(), it.next()) {
            (Some(Ok(x)), Some(Ok(y)), None) => rows.push((x, y)),
            _ => return Err(Error::Parse(format!("bad knot row {}", i + 2))),
        }
    }
    if rows.len() < 2 {
        return Err(Error::Parse("time-change csv needs both endpoints".into()));
    }
    let (t, s) = *rows.last().unwrap();
    TimeChange::new(t, s, &rows[1..rows.len() - 1])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn path_round_trip_is_exact() {
        let g = Grid::new(1.0, 16).unwrap();
        let p = DiscretePath::from_fn(g, 2, |s| vec![(7.0 * s).sin() / 3.0, s * s]).unwrap();
        let csv = path_to_csv(&p);
        assert!(csv.starts_with("time,v1,v2\n"));
        let q = path_from_csv(&csv).unwrap();
        assert_eq!(p.values(), q.values());
    }

    #[test]
    fn time_change_round_trip() {
        let l = TimeChange::new(0.6, 0.5, &[(0.2, 0.1), (0.4, 0.35)]).unwrap();
        let back = time_change_from_csv(&time_change_to_csv(&l)).unwrap();
        assert_eq!(l, back);
    }

    #[test]
    fn malformed_rows_are_reported() {
        assert!(matches!(path_from_csv("time,v1\n0,0\n1,x\n"), Err(Error::Parse(_))));
    }
}
