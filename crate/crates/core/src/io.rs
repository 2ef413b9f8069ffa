//! Plain-text exports. Floats use `{:.16e}` (17 significant digits), which
//! round-trips every `f64`.

use std::fmt::Write as _;
use std::path::Path;

use crate::linalg::CMat;
use crate::oracle::Root;
use crate::resolvent::{CircleReport, RayScan};
use crate::spectra::{CountingReport, EigenSolution};

pub fn sci(x: f64) -> String {
    format!("{x:.16e}")
}

/// A small CSV table of preformatted cells.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Csv {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert!(self.header.is_empty() || row.len() == self.header.len());
        self.rows.push(row);
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        if !self.header.is_empty() {
            let _ = writeln!(s, "{}", self.header.join(","));
        }
        for r in &self.rows {
            let _ = writeln!(s, "{}", r.join(","));
        }
        s
    }

    pub fn write(&self, path: &Path) -> std::io::Result<()> {
        std::fs::write(path, self.render())
    }
}

/// Columns `re, im, multiplicity, chain_length, residual, trusted`.
pub fn eigenvalue_csv(sol: &EigenSolution) -> Csv {
    let mut t = Csv::new(&["re", "im", "multiplicity", "chain_length", "residual", "trusted"]);
    for e in &sol.eigenvalues {
        t.push(vec![
            sci(e.lambda.re),
            sci(e.lambda.im),
            e.multiplicity.to_string(),
            e.chain_length().to_string(),
            sci(e.residual),
            e.trusted.to_string(),
        ]);
    }
    t
}

/// Columns `t, count, discrete_bound, schatten_bound` (last empty when absent).
pub fn counting_csv(rep: &CountingReport) -> Csv {
    let mut t = Csv::new(&["t", "count", "discrete_bound", "schatten_bound"]);
    for (i, &tv) in rep.t_values.iter().enumerate() {
        t.push(vec![
            sci(tv),
            rep.counts[i].to_string(),
            sci(rep.bound_values[i]),
            rep.schatten_bound.as_ref().map(|s| sci(s[i])).unwrap_or_default(),
        ]);
    }
    t
}

pub fn ray_csv(scan: &RayScan) -> Csv {
    let mut t = Csv::new(&["radius", "norm"]);
    for (r, n) in scan.radii.iter().zip(&scan.norms) {
        t.push(vec![sci(*r), sci(*n)]);
    }
    t
}

pub fn circle_csv(rep: &CircleReport) -> Csv {
    let mut t = Csv::new(&["radius", "max_log_norm", "min_pole_distance"]);
    for r in &rep.rows {
        t.push(vec![sci(r.radius), sci(r.max_log_norm), sci(r.min_pole_distance)]);
    }
    t
}

pub fn roots_csv(roots: &[Root]) -> Csv {
    let mut t = Csv::new(&["re", "im", "multiplicity", "newton_residual"]);
    for r in roots {
        t.push(vec![
            sci(r.lambda.re),
            sci(r.lambda.im),
            r.multiplicity.to_string(),
            sci(r.newton_residual),
        ]);
    }
    t
}

/// Row-major dense layout without header: each line holds one matrix row as
/// `re₀,im₀,re₁,im₁,…`.
pub fn matrix_csv(m: &CMat) -> Csv {
    let mut t = Csv::default();
    for i in 0..m.nrows() {
        t.push(
            (0..m.ncols())
                .flat_map(|j| [sci(m[(i, j)].re), sci(m[(i, j)].im)])
                .collect(),
        );
    }
    t
}

/// Inverse of [`matrix_csv`].
pub fn parse_matrix_csv(text: &str) -> Result<CMat, String> {
    let rows: Vec<Vec<f64>> = text
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            l.split(',')
                .map(|c| c.trim().parse::<f64>().map_err(|e| format!("{c:?}: {e}")))
                .collect()
        })
        .collect::<Result<_, _>>()?;
    let n = rows.len();
    let m = rows.first().map_or(0, |r| r.len());
    if m % 2 != 0 || rows.iter().any(|r| r.len() != m) {
        return Err("rows must have the same even number of entries".into());
    }
    Ok(CMat::from_fn(n, m / 2, |i, j| {
        crate::C64::new(rows[i][2 * j], rows[i][2 * j + 1])
    }))
}
