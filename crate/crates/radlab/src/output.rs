//! Deterministic plain-text outputs. Floats are written with 17 significant digits.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use radlab_core::model::{Model, ALPHA, ENERGY, F0, MOM, RHO};
use radlab_core::solver::FieldState;

use crate::error::CliError;

/// `x` with 17 significant digits, round-trip exact.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// Comma-separated table built in memory and written in one go.
#[derive(Debug, Clone, Default)]
pub struct Table {
    text: String,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        let mut t = Self::default();
        t.text.push_str(&header.join(","));
        t.text.push('\n');
        t
    }

    pub fn with_header(header: Vec<String>) -> Self {
        Self { text: header.join(",") + "\n" }
    }

    pub fn row(&mut self, fields: &[String]) {
        self.text.push_str(&fields.join(","));
        self.text.push('\n');
    }

    pub fn numbers(&mut self, values: &[f64]) {
        let fields: Vec<String> = values.iter().map(|x| num(*x)).collect();
        self.row(&fields);
    }

    pub fn comment(&mut self, line: &str) {
        let _ = writeln!(self.text, "# {line}");
    }

    pub fn rows(&self) -> usize {
        self.text.lines().filter(|l| !l.starts_with('#')).count().saturating_sub(1)
    }

    pub fn as_str(&self) -> &str {
        &self.text
    }

    pub fn write(&self, dir: &Path, name: &str) -> Result<PathBuf, CliError> {
        write_text(dir, name, &self.text)
    }
}

pub fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|source| CliError::Io { path: dir.to_path_buf(), source })
}

pub fn write_text(dir: &Path, name: &str, text: &str) -> Result<PathBuf, CliError> {
    ensure_dir(dir)?;
    let path = dir.join(name);
    std::fs::write(&path, text).map_err(|source| CliError::Io { path: path.clone(), source })?;
    Ok(path)
}

/// Snapshot columns `(x, rho, v, E, theta, f0, alpha, f2..fN)`; one row per cell.
pub fn snapshot_table(model: &Model, s: &FieldState) -> Result<Table, CliError> {
    let mut header: Vec<String> = ["x", "rho", "v", "E", "theta", "f0", "alpha"].iter().map(|h| h.to_string()).collect();
    header.extend((2..=s.n).map(|k| format!("f{k}")));
    let mut t = Table::with_header(header);
    for i in 0..s.cells() {
        let u = s.cell(i);
        let theta = model.theta(u)?.theta;
        let mut row = vec![s.grid.x(i), u[RHO], u[MOM] / u[RHO], u[ENERGY] / u[RHO], theta, u[F0], u[ALPHA]];
        row.extend_from_slice(&u[ALPHA + 1..]);
        t.numbers(&row);
    }
    Ok(t)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_significant_digits_round_trip() {
        for x in [0.1, -1.0 / 3.0, 6.02214076e23, 5e-324, 0.0] {
            let s = num(x);
            assert_eq!(s.parse::<f64>().unwrap(), x, "{s}");
        }
        assert_eq!(num(0.5), "5.0000000000000000e-1");
    }

    #[test]
    fn table_rows_skip_comments() {
        let mut t = Table::new(&["a", "b"]);
        t.numbers(&[1.0, 2.0]);
        t.comment("note");
        t.row(&["x".into(), "y".into()]);
        assert_eq!(t.rows(), 2);
        assert!(t.as_str().ends_with("# note\nx,y\n"));
    }
}
