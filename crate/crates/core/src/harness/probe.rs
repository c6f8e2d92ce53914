//! Evaluation of the retarded representations at user points after a run.

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::retarded_evaluator::{phi_retarded, representation_terms, ConeHistory, ConeQuadrature};
use crate::vec2::V2;

pub const PROBE_HEADER: &str =
    "t,x1,x2,phi_grid,phi_retarded,dphi_t_rep,dphi_x1_rep,dphi_x2_rep,dphi_t_fd,dphi_x1_fd,dphi_x2_fd,status";

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeRow {
    pub t: f64,
    pub x: V2,
    pub phi_grid: f64,
    pub phi_retarded: f64,
    pub rep: [f64; 3],
    pub fd: [f64; 3],
    /// `ok`, or the class of the first error met at this point.
    pub status: String,
}

impl ProbeRow {
    pub fn is_ok(&self) -> bool {
        self.status == "ok"
    }

    pub fn csv_row(&self) -> String {
        let mut s = String::new();
        for v in [self.t, self.x[0], self.x[1], self.phi_grid, self.phi_retarded] {
            let _ = write!(s, "{v:e},");
        }
        for v in self.rep.iter().chain(&self.fd) {
            let _ = write!(s, "{v:e},");
        }
        s.push_str(&self.status);
        s
    }
}

/// Parses probe points: one `t x1 x2` triple per line, separated by commas or
/// whitespace, `#` comments allowed.
pub fn parse_points(text: &str) -> Result<Vec<(f64, V2)>> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let vals: Vec<f64> = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|s| !s.is_empty())
            .map(|s| s.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::Config(format!("points line {}: not a number", n + 1)))?;
        if vals.len() != 3 {
            return Err(Error::Config(format!("points line {}: expected `t x1 x2`", n + 1)));
        }
        out.push((vals[0], [vals[1], vals[2]]));
    }
    Ok(out)
}

/// Derivatives of `phi_retarded` by second-order differences with step `h`.
/// The time difference is one-sided where `t +- h` leaves `[0, t_max]`.
pub fn phi_retarded_differences(hist: &ConeHistory, t: f64, x: V2, h: f64, q: &ConeQuadrature) -> Result<[f64; 3]> {
    let f = |t: f64, x: V2| phi_retarded(hist, t, x, q);
    let t_max = hist.t_max().unwrap_or(0.0);
    let dt = if t - h >= 0.0 && t + h <= t_max + 1e-12 {
        (f(t + h, x)? - f(t - h, x)?) / (2.0 * h)
    } else if t - 2.0 * h >= 0.0 {
        (3.0 * f(t, x)? - 4.0 * f(t - h, x)? + f(t - 2.0 * h, x)?) / (2.0 * h)
    } else {
        (-3.0 * f(t, x)? + 4.0 * f(t + h, x)? - f(t + 2.0 * h, x)?) / (2.0 * h)
    };
    let dx1 = (f(t, [x[0] + h, x[1]])? - f(t, [x[0] - h, x[1]])?) / (2.0 * h);
    let dx2 = (f(t, [x[0], x[1] + h])? - f(t, [x[0], x[1] - h])?) / (2.0 * h);
    Ok([dt, dx1, dx2])
}

/// Evaluates one probe row. `fd_step` is the difference step.
pub fn probe_point(hist: &ConeHistory, t: f64, x: V2, q: &ConeQuadrature, fd_step: f64) -> ProbeRow {
    let mut row = ProbeRow { t, x, phi_grid: f64::NAN, phi_retarded: f64::NAN, rep: [f64::NAN; 3], fd: [f64::NAN; 3], status: "ok".into() };
    let fail = |e: Error, row: &mut ProbeRow| {
        if row.status == "ok" {
            row.status = e.class().into();
        }
    };
    match hist.phi_at(t, x) {
        Ok(v) => row.phi_grid = v,
        Err(e) => fail(e, &mut row),
    }
    match phi_retarded(hist, t, x, q) {
        Ok(v) => row.phi_retarded = v,
        Err(e) => fail(e, &mut row),
    }
    match representation_terms(hist, t, x, q) {
        Ok(r) => row.rep = r.total(),
        Err(e) => fail(e, &mut row),
    }
    match phi_retarded_differences(hist, t, x, fd_step, q) {
        Ok(d) => row.fd = d,
        Err(e) => fail(e, &mut row),
    }
    row
}

/// Probe rows for all points, evaluated in parallel, in input order.
pub fn probe_all(hist: &ConeHistory, points: &[(f64, V2)], q: &ConeQuadrature, fd_step: f64) -> Vec<ProbeRow> {
    points.par_iter().map(|&(t, x)| probe_point(hist, t, x, q, fd_step)).collect()
}

pub fn probe_csv(rows: &[ProbeRow]) -> String {
    let mut s = String::from(PROBE_HEADER);
    s.push('\n');
    for r in rows {
        s.push_str(&r.csv_row());
        s.push('\n');
    }
    s
}
