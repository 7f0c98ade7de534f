//! Plain-text field snapshots.
//!
//! ```text
//! field-snapshot v1 name=u t=1.5e0 dim=2 nx=4 ny=3
//! <ny lines of nx values, row-major, 17 significant digits>
//! ```
//!
//! Grid lengths are not stored; the reader supplies the grid.

use crate::grid::{Field, Grid};
use std::fmt::Write as _;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SnapshotError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("malformed snapshot: {0}")]
    Format(String),
    #[error("snapshot is {found:?} cells but the grid has {expected:?}")]
    Shape { expected: (usize, usize), found: (usize, usize) },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub name: String,
    pub t: f64,
    pub field: Field,
}

pub fn render_snapshot(name: &str, t: f64, field: &Field) -> String {
    let g = field.grid();
    let mut out = format!("field-snapshot v1 name={name} t={t:.16e} dim={} nx={} ny={}\n", g.dim(), g.nx(), g.ny());
    for row in field.values().chunks(g.nx()) {
        for (i, x) in row.iter().enumerate() {
            if i > 0 {
                out.push(' ');
            }
            let _ = write!(out, "{x:.16e}");
        }
        out.push('\n');
    }
    out
}

pub fn write_snapshot(path: &Path, name: &str, t: f64, field: &Field) -> Result<(), SnapshotError> {
    std::fs::write(path, render_snapshot(name, t, field))?;
    Ok(())
}

pub fn parse_snapshot(text: &str, grid: &Grid) -> Result<Snapshot, SnapshotError> {
    let bad = |m: &str| SnapshotError::Format(m.to_string());
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| bad("empty file"))?;
    let mut words = header.split_whitespace();
    if words.next() != Some("field-snapshot") || words.next() != Some("v1") {
        return Err(bad("missing `field-snapshot v1` header"));
    }
    let (mut name, mut t, mut dim, mut nx, mut ny) = (None, None, None, None, None);
    for w in words {
        let (k, v) = w.split_once('=').ok_or_else(|| bad("header entries must be key=value"))?;
        match k {
            "name" => name = Some(v.to_string()),
            "t" => t = v.parse::<f64>().ok(),
            "dim" => dim = v.parse::<usize>().ok(),
            "nx" => nx = v.parse::<usize>().ok(),
            "ny" => ny = v.parse::<usize>().ok(),
            _ => return Err(bad(&format!("unknown header key `{k}`"))),
        }
    }
    let (Some(name), Some(t), Some(dim), Some(nx), Some(ny)) = (name, t, dim, nx, ny) else {
        return Err(bad("header needs name, t, dim, nx and ny"));
    };
    if dim != grid.dim() || nx != grid.nx() || ny != grid.ny() {
        return Err(SnapshotError::Shape { expected: (grid.nx(), grid.ny()), found: (nx, ny) });
    }
    let values: Vec<f64> = lines
        .flat_map(str::split_whitespace)
        .map(|w| w.parse::<f64>().map_err(|_| bad(&format!("bad value `{w}`"))))
        .collect::<Result<_, _>>()?;
    let field = Field::from_values(grid, values).map_err(|e| bad(&e.to_string()))?;
    Ok(Snapshot { name, t, field })
}

pub fn read_snapshot(path: &Path, grid: &Grid) -> Result<Snapshot, SnapshotError> {
    parse_snapshot(&std::fs::read_to_string(path)?, grid)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_bitwise() {
        let grid = Grid::rect(5, 4, 1.0, 2.0).unwrap();
        let f = Field::from_fn(&grid, |x, y| (x * 7.1).sin() + y / 3.0 + 1e-300);
        let text = render_snapshot("v", 0.1, &f);
        let s = parse_snapshot(&text, &grid).unwrap();
        assert_eq!(s.name, "v");
        assert_eq!(s.t, 0.1);
        assert_eq!(s.field, f);
    }

    #[test]
    fn rejects_wrong_shape() {
        let grid = Grid::line(6, 1.0).unwrap();
        let text = render_snapshot("u", 0.0, &Field::zeros(&grid));
        let other = Grid::line(8, 1.0).unwrap();
        assert!(matches!(parse_snapshot(&text, &other), Err(SnapshotError::Shape { .. })));
    }
}
