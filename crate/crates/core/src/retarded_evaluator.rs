//! Field values from the retarded (light-cone) integral representations,
//! independent of the grid leapfrog solver.
//!
//! Cone integrals `int_0^t int_{|y-x|<t-tau} g(tau, y) / sqrt((t-tau)^2 - |y-x|^2) dy dtau`
//! are evaluated after the substitution `y = x + (t - tau) sin(theta) omega`,
//! which turns the measure into `(t - tau) sin(theta) dtheta dalpha dtau` and
//! removes the square-root singularity.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use crate::characteristics::FieldSample;
use crate::error::{Error, Result};
use crate::grid::{Axis, Grid2};
use crate::phase_geometry::{field_kernels_unchecked, Derivative, Momentum2};
use crate::profiles::Profile;
use crate::quadrature::{composite_gauss, periodic_trapezoid, Rule};
use crate::vec2::{self, V2};

/// Panel counts of the cone quadrature. `tau` and `theta` use composite
/// Gauss-Legendre panels of `order` points; the azimuth uses `alpha` equispaced
/// points.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConeQuadrature {
    pub tau_panels: usize,
    pub theta_panels: usize,
    pub alpha: usize,
    pub order: usize,
}

impl ConeQuadrature {
    pub fn new(tau_panels: usize, theta_panels: usize, alpha: usize) -> Self {
        ConeQuadrature { tau_panels, theta_panels, alpha, order: 4 }
    }

    /// Twice the panels in every direction.
    pub fn refined(self) -> Self {
        ConeQuadrature {
            tau_panels: 2 * self.tau_panels,
            theta_panels: 2 * self.theta_panels,
            alpha: 2 * self.alpha,
            order: self.order,
        }
    }

    fn check(&self) -> Result<()> {
        if self.tau_panels == 0 || self.theta_panels == 0 || self.alpha == 0 || self.order == 0 {
            return Err(Error::InvalidArgument("quadrature counts must be positive".into()));
        }
        Ok(())
    }

    fn theta_rule(&self) -> Rule {
        composite_gauss(0.0, FRAC_PI_2, self.theta_panels, self.order)
    }

    fn alpha_rule(&self) -> Rule {
        periodic_trapezoid(TAU, self.alpha, 0.0)
    }

    fn tau_rule(&self, t: f64) -> Rule {
        composite_gauss(0.0, t, self.tau_panels, self.order)
    }
}

/// `int_0^t int_{|y-x|<t-tau} g(tau, y) / sqrt((t-tau)^2 - |y-x|^2) dy dtau`.
pub fn cone_quadrature(g: &dyn Fn(f64, V2) -> Result<f64>, t: f64, x: V2, q: &ConeQuadrature) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(Error::InvalidArgument(format!("query time {t} is negative")));
    }
    q.check()?;
    if t == 0.0 {
        return Ok(0.0);
    }
    let (tr, th, al) = (q.tau_rule(t), q.theta_rule(), q.alpha_rule());
    let dirs: Vec<V2> = al.nodes.iter().map(|&a| vec2::unit(a)).collect();
    let mut total = 0.0;
    for (&tau, &wt) in tr.nodes.iter().zip(&tr.weights) {
        let r = t - tau;
        let mut inner = 0.0;
        for (&theta, &wth) in th.nodes.iter().zip(&th.weights) {
            let s = theta.sin();
            let mut ring = 0.0;
            for (d, &wa) in dirs.iter().zip(&al.weights) {
                ring += wa * g(tau, vec2::axpy(x, r * s, *d))?;
            }
            inner += wth * s * ring;
        }
        total += wt * r * inner;
    }
    Ok(total)
}

/// Angular moments of a profile over the disc of radius `t` around `x`,
/// the building blocks of the Poisson formula and its derivatives.
struct DiscMoments {
    /// `int int g sin`
    g1: f64,
    /// `int int (grad g . omega) sin^2`
    dg2: f64,
    /// `int int omega^T H omega sin^3`
    h3: f64,
    /// `int int grad g sin`
    grad1: V2,
    /// `int int H omega sin^2`
    hw2: V2,
}

fn disc_moments(g: &Profile, t: f64, x: V2, q: &ConeQuadrature) -> DiscMoments {
    let (th, al) = (q.theta_rule(), q.alpha_rule());
    let mut m = DiscMoments { g1: 0.0, dg2: 0.0, h3: 0.0, grad1: [0.0; 2], hw2: [0.0; 2] };
    for (&a, &wa) in al.nodes.iter().zip(&al.weights) {
        let w = vec2::unit(a);
        for (&theta, &wth) in th.nodes.iter().zip(&th.weights) {
            let s = theta.sin();
            let (v, gr, h) = g.eval(vec2::axpy(x, t * s, w));
            let c = wa * wth;
            let hw = [h[0][0] * w[0] + h[0][1] * w[1], h[1][0] * w[0] + h[1][1] * w[1]];
            m.g1 += c * v * s;
            m.dg2 += c * vec2::dot(gr, w) * s * s;
            m.h3 += c * vec2::dot(hw, w) * s * s * s;
            m.grad1 = vec2::axpy(m.grad1, c * s, gr);
            m.hw2 = vec2::axpy(m.hw2, c * s * s, hw);
        }
    }
    m
}

/// Solution of the homogeneous wave equation with data `(phi0, phi1)`:
/// `(M[phi1] + d_t M[phi0]) / 2 pi` with `M[g] = int_{|y-x|<t} g / sqrt(t^2 - |y-x|^2) dy`.
pub fn phi_hom(phi0: &Profile, phi1: &Profile, t: f64, x: V2, q: &ConeQuadrature) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(Error::InvalidArgument(format!("query time {t} is negative")));
    }
    q.check()?;
    if t == 0.0 {
        return Ok(phi0.value(x));
    }
    let m1 = disc_moments(phi1, t, x, q);
    let m0 = disc_moments(phi0, t, x, q);
    // M = t g1, d_t M = g1 + t dg2.
    Ok((t * m1.g1 + m0.g1 + t * m0.dg2) / (2.0 * PI))
}

/// `(d_t, d_x1, d_x2)` of [`phi_hom`], by differentiating the substituted
/// integrals analytically.
pub fn dphi_hom(phi0: &Profile, phi1: &Profile, t: f64, x: V2, q: &ConeQuadrature) -> Result<[f64; 3]> {
    if !(t >= 0.0) {
        return Err(Error::InvalidArgument(format!("query time {t} is negative")));
    }
    q.check()?;
    if t == 0.0 {
        let g = phi0.grad(x);
        return Ok([phi1.value(x), g[0], g[1]]);
    }
    let m1 = disc_moments(phi1, t, x, q);
    let m0 = disc_moments(phi0, t, x, q);
    // d_t M = g1 + t dg2, d_tt M = 2 dg2 + t h3,
    // grad M = t grad1, grad d_t M = grad1 + t hw2.
    let c = 1.0 / (2.0 * PI);
    Ok([
        c * (m1.g1 + t * m1.dg2 + 2.0 * m0.dg2 + t * m0.h3),
        c * (t * m1.grad1[0] + m0.grad1[0] + t * m0.hw2[0]),
        c * (t * m1.grad1[1] + m0.grad1[1] + t * m0.hw2[1]),
    ])
}

/// Momentum slices of `f` on a rectangular block of spatial nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct CroppedDistribution {
    pub i1: (usize, usize),
    pub i2: (usize, usize),
    pub data: Vec<f64>,
}

impl CroppedDistribution {
    /// Keeps the smallest block of spatial nodes containing every nonzero value.
    pub fn from_full(f: &crate::vlasov_solver::DistributionGrid) -> Self {
        let nx = f.grid.x.n;
        let s = f.grid.slice_len();
        let (mut a1, mut b1, mut a2, mut b2) = (usize::MAX, 0, usize::MAX, 0);
        for (k, c) in f.data.chunks(s).enumerate() {
            if c.iter().any(|&v| v != 0.0) {
                let (i, j) = (k / nx, k % nx);
                a1 = a1.min(i);
                b1 = b1.max(i);
                a2 = a2.min(j);
                b2 = b2.max(j);
            }
        }
        if a1 == usize::MAX {
            return CroppedDistribution { i1: (1, 0), i2: (1, 0), data: Vec::new() };
        }
        let mut data = Vec::with_capacity((b1 - a1 + 1) * (b2 - a2 + 1) * s);
        for i in a1..=b1 {
            for j in a2..=b2 {
                data.extend_from_slice(f.slice(i, j));
            }
        }
        CroppedDistribution { i1: (a1, b1), i2: (a2, b2), data }
    }

    #[inline]
    fn slice(&self, i: usize, j: usize, s: usize) -> Option<&[f64]> {
        if i < self.i1.0 || i > self.i1.1 || j < self.i2.0 || j > self.i2.1 {
            return None;
        }
        let w = self.i2.1 - self.i2.0 + 1;
        let k = (i - self.i1.0) * w + (j - self.i2.0);
        Some(&self.data[k * s..(k + 1) * s])
    }
}

/// Stored quantities at one time level.
#[derive(Debug, Clone)]
pub struct HistoryLevel {
    pub t: f64,
    pub mu0: Vec<f64>,
    pub phi: Vec<f64>,
    pub phi_t: Vec<f64>,
    pub phi_x1: Vec<f64>,
    pub phi_x2: Vec<f64>,
    pub f: Option<CroppedDistribution>,
}

/// Time history of a run as consumed by the cone integrals. Interpolation is
/// bilinear in space and linear in time; sources vanish outside the box.
#[derive(Debug, Clone)]
pub struct ConeHistory {
    pub grid: Grid2,
    pub paxis: Option<Axis>,
    pub phi0: Profile,
    pub phi1: Profile,
    /// Largest accepted spacing between consecutive levels.
    pub max_gap: f64,
    levels: Vec<HistoryLevel>,
}

impl ConeHistory {
    pub fn new(grid: Grid2, paxis: Option<Axis>, phi0: Profile, phi1: Profile, max_gap: f64) -> Self {
        ConeHistory { grid, paxis, phi0, phi1, max_gap, levels: Vec::new() }
    }

    pub fn push(&mut self, level: HistoryLevel) -> Result<()> {
        if let Some(last) = self.levels.last() {
            if !(level.t > last.t) {
                return Err(Error::InvalidArgument(format!("history time {} does not increase past {}", level.t, last.t)));
            }
        }
        let n = self.grid.len();
        if [&level.mu0, &level.phi, &level.phi_t, &level.phi_x1, &level.phi_x2].iter().any(|v| v.len() != n) {
            return Err(Error::InvalidArgument("history level does not match the grid".into()));
        }
        if level.f.is_some() && self.paxis.is_none() {
            return Err(Error::InvalidArgument("distribution stored without a momentum axis".into()));
        }
        self.levels.push(level);
        Ok(())
    }

    pub fn levels(&self) -> &[HistoryLevel] {
        &self.levels
    }

    pub fn t_max(&self) -> Option<f64> {
        self.levels.last().map(|l| l.t)
    }

    /// Checks that `[0, t]` is covered without oversized gaps.
    pub fn check_coverage(&self, t: f64) -> Result<()> {
        let first = self.levels.first().ok_or(Error::InsufficientHistory { from: 0.0, to: t })?;
        if first.t > 1e-12 {
            return Err(Error::InsufficientHistory { from: 0.0, to: first.t });
        }
        let last = self.levels.last().unwrap();
        if t > last.t + 1e-9 * (1.0 + last.t) {
            return Err(Error::InsufficientHistory { from: last.t, to: t });
        }
        for w in self.levels.windows(2) {
            if w[0].t >= t {
                break;
            }
            if w[1].t - w[0].t > self.max_gap * (1.0 + 1e-9) {
                return Err(Error::InsufficientHistory { from: w[0].t, to: w[1].t });
            }
        }
        Ok(())
    }

    /// Level index `k` and weight `lam` with `tau = (1 - lam) t_k + lam t_{k+1}`.
    #[inline]
    fn bracket(&self, tau: f64) -> Result<(usize, f64)> {
        let n = self.levels.len();
        if n == 0 {
            return Err(Error::InsufficientHistory { from: tau, to: tau });
        }
        if n == 1 || tau <= self.levels[0].t {
            if (tau - self.levels[0].t).abs() <= 1e-12 {
                return Ok((0, 0.0));
            }
            if n == 1 || tau < self.levels[0].t {
                return Err(Error::InsufficientHistory { from: tau, to: self.levels[0].t });
            }
        }
        let last = self.levels[n - 1].t;
        if tau > last + 1e-9 * (1.0 + last) {
            return Err(Error::InsufficientHistory { from: last, to: tau });
        }
        let k = self.levels.partition_point(|l| l.t <= tau).clamp(1, n - 1) - 1;
        let (a, b) = (self.levels[k].t, self.levels[k + 1].t);
        Ok((k, ((tau - a) / (b - a)).clamp(0.0, 1.0)))
    }

    fn interp(&self, tau: f64, y: V2, pick: impl Fn(&HistoryLevel) -> &[f64]) -> Result<f64> {
        let (k, lam) = self.bracket(tau)?;
        let Some((idx, w)) = self.grid.bilinear_stencil(y) else {
            return Ok(0.0);
        };
        let at = |d: &[f64]| w[0] * d[idx[0]] + w[1] * d[idx[1]] + w[2] * d[idx[2]] + w[3] * d[idx[3]];
        let u = at(pick(&self.levels[k]));
        if lam == 0.0 {
            return Ok(u);
        }
        Ok((1.0 - lam) * u + lam * at(pick(&self.levels[k + 1])))
    }

    /// `mu0(tau, y)`; zero outside the box.
    pub fn mu0_at(&self, tau: f64, y: V2) -> Result<f64> {
        self.interp(tau, y, |l| &l.mu0)
    }

    /// Potential at `(tau, y)`, bicubic in space.
    pub fn phi_at(&self, tau: f64, y: V2) -> Result<f64> {
        let (k, lam) = self.bracket(tau)?;
        let out = || Error::OutsideSampler { s: tau, x: y };
        let u = self.grid.bicubic(&self.levels[k].phi, y).ok_or_else(out)?;
        if lam == 0.0 {
            return Ok(u);
        }
        let v = self.grid.bicubic(&self.levels[k + 1].phi, y).ok_or_else(out)?;
        Ok((1.0 - lam) * u + lam * v)
    }

    /// Field derivatives at `(tau, y)`; zero outside the box.
    pub fn field_at(&self, tau: f64, y: V2) -> Result<FieldSample> {
        Ok(FieldSample {
            phi: self.interp(tau, y, |l| &l.phi)?,
            phi_t: self.interp(tau, y, |l| &l.phi_t)?,
            grad: [self.interp(tau, y, |l| &l.phi_x1)?, self.interp(tau, y, |l| &l.phi_x2)?],
        })
    }

    /// Writes `f(tau, y, .)` into `buf`; returns `false` when it vanishes.
    fn f_slice_at(&self, tau: f64, y: V2, buf: &mut [f64]) -> Result<bool> {
        let paxis = self.paxis.ok_or_else(|| Error::InvalidArgument("history has no momentum axis".into()))?;
        let s = paxis.n * paxis.n;
        let (k, lam) = self.bracket(tau)?;
        let Some((idx, w)) = self.grid.bilinear_stencil(y) else {
            return Ok(false);
        };
        let n = self.grid.n();
        let mut any = false;
        buf.iter_mut().for_each(|v| *v = 0.0);
        for (lvl, lw) in [(k, 1.0 - lam), (k + 1, lam)] {
            if lw == 0.0 {
                continue;
            }
            let f = self.levels[lvl].f.as_ref().ok_or(Error::InsufficientHistory { from: self.levels[lvl].t, to: self.levels[lvl].t })?;
            for c in 0..4 {
                let cw = lw * w[c];
                if cw == 0.0 {
                    continue;
                }
                if let Some(sl) = f.slice(idx[c] / n, idx[c] % n, s) {
                    any = true;
                    for (b, &v) in buf.iter_mut().zip(sl) {
                        *b += cw * v;
                    }
                }
            }
        }
        Ok(any)
    }
}

/// `phi(t, x) = phi_hom - 2 int int mu0 / sqrt(...)` over the backward cone.
pub fn phi_retarded(hist: &ConeHistory, t: f64, x: V2, q: &ConeQuadrature) -> Result<f64> {
    hist.check_coverage(t)?;
    let hom = phi_hom(&hist.phi0, &hist.phi1, t, x, q)?;
    let src = cone_quadrature(&|tau, y| hist.mu0_at(tau, y), t, x, q)?;
    Ok(hom - 2.0 * src)
}

/// Individual contributions to the derivative representations, each as
/// `[d_t, d_x1, d_x2]`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RepresentationTerms {
    pub hom: [f64; 3],
    pub data: [f64; 3],
    pub a_term: [f64; 3],
    pub bc_term: [f64; 3],
}

impl RepresentationTerms {
    pub fn total(&self) -> [f64; 3] {
        let mut out = [0.0; 3];
        for k in 0..3 {
            out[k] = self.hom[k] + self.data[k] + self.a_term[k] + self.bc_term[k];
        }
        out
    }
}

/// Momentum nodes with their kernels at one cone direction `xi`.
struct KernelTable {
    idx: Vec<usize>,
    vhat: Vec<V2>,
    /// `1 / (gamma D)` times the trapezoid weight
    data_k: Vec<f64>,
    a: Vec<[f64; 3]>,
    /// full `S(phi)` weight of the `d_t` representation, times the weight
    b: Vec<f64>,
    c: Vec<V2>,
}

/// Evaluates all terms of the `d_t`, `d_x1`, `d_x2` representations:
/// the homogeneous part, the initial-slice data term with kernel
/// `(1 or xi_i) / (gamma D)`, the `a`-kernel term (its `1 / (t - tau)` weight
/// cancels against the cone measure), and the `b`/`c` terms with
/// `S(phi) = phi_t + p^ . grad phi` and `grad phi` from the history.
///
/// The `S(phi)` weight is `b + b_extra` (see `phase_geometry::FieldKernelSet`).
pub fn representation_terms(hist: &ConeHistory, t: f64, x: V2, q: &ConeQuadrature) -> Result<RepresentationTerms> {
    hist.check_coverage(t)?;
    let paxis = hist.paxis.ok_or_else(|| Error::InvalidArgument("representation needs the stored distribution".into()))?;
    let mut out = RepresentationTerms { hom: dphi_hom(&hist.phi0, &hist.phi1, t, x, q)?, ..Default::default() };
    if t == 0.0 {
        return Ok(out);
    }
    let np = paxis.n;
    let slice_len = np * np;

    // Momentum nodes that are ever occupied.
    let mut occupied = vec![false; slice_len];
    for l in hist.levels.iter().take_while(|l| l.t <= t + 1e-9) {
        let f = l.f.as_ref().ok_or(Error::InsufficientHistory { from: l.t, to: l.t })?;
        for c in f.data.chunks(slice_len) {
            for (o, &v) in occupied.iter_mut().zip(c) {
                *o |= v != 0.0;
            }
        }
    }
    let pw = |j: usize| paxis.weight(j / np) * paxis.weight(j % np);
    let moms: Vec<(usize, Momentum2)> = (0..slice_len)
        .filter(|&j| occupied[j])
        .map(|j| (j, Momentum2::new_unchecked([paxis.node(j / np), paxis.node(j % np)])))
        .collect();

    let (tr, th, al) = (q.tau_rule(t), q.theta_rule(), q.alpha_rule());
    let mut buf = vec![0.0; slice_len];
    let mut table = KernelTable {
        idx: Vec::with_capacity(moms.len()),
        vhat: Vec::with_capacity(moms.len()),
        data_k: Vec::with_capacity(moms.len()),
        a: Vec::with_capacity(moms.len()),
        b: Vec::with_capacity(moms.len()),
        c: Vec::with_capacity(moms.len()),
    };
    for (&alpha, &wa) in al.nodes.iter().zip(&al.weights) {
        let omega = vec2::unit(alpha);
        for (&theta, &wth) in th.nodes.iter().zip(&th.weights) {
            let s = theta.sin();
            let xi = vec2::scale(s, omega);
            table.idx.clear();
            table.vhat.clear();
            table.data_k.clear();
            table.a.clear();
            table.b.clear();
            table.c.clear();
            for (j, m) in &moms {
                let k = field_kernels_unchecked(xi, m);
                let w = pw(*j);
                let d = crate::phase_geometry::cone_denominator(xi, m);
                table.idx.push(*j);
                table.vhat.push(m.vhat);
                table.data_k.push(w / (m.gamma * d));
                table.a.push([w * k.a_t, w * k.a_x[0], w * k.a_x[1]]);
                table.b.push(w * (k.b_t + k.b_t_extra));
                table.c.push([w * k.c_t[0], w * k.c_t[1]]);
            }
            let ang = wa * wth * s;
            let xw = [1.0, xi[0], xi[1]];

            // Initial slice over the cone of radius t.
            if hist.f_slice_at(0.0, vec2::axpy(x, t * s, omega), &mut buf)? {
                let mut acc = 0.0;
                for (j, &kd) in table.idx.iter().zip(&table.data_k) {
                    acc += buf[*j] * kd;
                }
                for w in 0..3 {
                    out.data[w] -= 2.0 * t * ang * xw[w] * acc;
                }
            }

            for (&tau, &wt) in tr.nodes.iter().zip(&tr.weights) {
                let r = t - tau;
                let y = vec2::axpy(x, r * s, omega);
                if !hist.f_slice_at(tau, y, &mut buf)? {
                    continue;
                }
                let fs = hist.field_at(tau, y)?;
                let mut acc_a = [0.0; 3];
                let mut acc_bc = 0.0;
                for n in 0..table.idx.len() {
                    let v = buf[table.idx[n]];
                    if v == 0.0 {
                        continue;
                    }
                    let sphi = fs.phi_t + vec2::dot(table.vhat[n], fs.grad);
                    let a = &table.a[n];
                    acc_a[0] += v * a[0];
                    acc_a[1] += v * a[1];
                    acc_a[2] += v * a[2];
                    acc_bc += v * (table.b[n] * sphi + vec2::dot(table.c[n], fs.grad));
                }
                out.a_term[0] += 2.0 * wt * ang * acc_a[0];
                out.a_term[1] -= 2.0 * wt * ang * acc_a[1];
                out.a_term[2] -= 2.0 * wt * ang * acc_a[2];
                for w in 0..3 {
                    out.bc_term[w] -= 2.0 * wt * r * ang * xw[w] * acc_bc;
                }
            }
        }
    }
    Ok(out)
}

/// One of `d_t phi`, `d_x1 phi`, `d_x2 phi` from the retarded representation.
pub fn dphi_representation(hist: &ConeHistory, t: f64, x: V2, which: Derivative, q: &ConeQuadrature) -> Result<f64> {
    let all = representation_terms(hist, t, x, q)?.total();
    Ok(match which {
        Derivative::T => all[0],
        Derivative::X1 => all[1],
        Derivative::X2 => all[2],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field_solver::{field_grid, Boundary};

    fn q(n: usize) -> ConeQuadrature {
        ConeQuadrature::new(n, n, 4 * n)
    }

    fn static_history(mu: f64, keep_f: bool) -> ConeHistory {
        let grid = field_grid(3.0, 13, Boundary::DirichletZero);
        let pa = Axis::closed(-1.0, 1.0, 5);
        let mut h = ConeHistory::new(grid, Some(pa), Profile::Zero, Profile::Zero, 0.5);
        for k in 0..5 {
            let z = vec![0.0; grid.len()];
            let f = keep_f.then(|| CroppedDistribution { i1: (1, 0), i2: (1, 0), data: Vec::new() });
            h.push(HistoryLevel { t: 0.25 * k as f64, mu0: vec![mu; grid.len()], phi: z.clone(), phi_t: z.clone(), phi_x1: z.clone(), phi_x2: z, f }).unwrap();
        }
        h
    }

    #[test]
    fn cone_quadrature_analytic_cases() {
        let one = cone_quadrature(&|_, _| Ok(1.0), 1.0, [0.0, 0.0], &q(8)).unwrap();
        assert!((one - PI).abs() < 1e-12);
        let t = 0.7;
        let v = cone_quadrature(&|_, _| Ok(1.0), t, [0.3, -2.0], &q(4)).unwrap();
        assert!((v - PI * t * t).abs() < 1e-12);
        assert_eq!(cone_quadrature(&|_, _| Ok(0.0), 1.0, [0.0, 0.0], &q(4)).unwrap(), 0.0);
        assert!(cone_quadrature(&|_, _| Ok(1.0), -1.0, [0.0, 0.0], &q(4)).is_err());
    }

    #[test]
    fn cone_quadrature_converges_on_smooth_integrands() {
        // g = tau: exact value int_0^t 2 pi (t - tau) tau dtau = pi t^3 / 3.
        let g = |tau: f64, y: V2| Ok(tau * (1.0 + 0.0 * y[0]));
        let v = cone_quadrature(&g, 1.0, [0.0, 0.0], &q(8)).unwrap();
        assert!((v - PI / 3.0).abs() < 1e-12);
        // g = |y|^2 about the origin: 2 pi int (t-tau) int_0^{pi/2} (t-tau)^2 sin^3 = 2 pi (2/3) t^4 / 4.
        let g = |_tau: f64, y: V2| Ok(vec2::norm2(y));
        let v = cone_quadrature(&g, 1.0, [0.0, 0.0], &q(16)).unwrap();
        assert!((v - PI / 3.0).abs() < 1e-12);
    }

    #[test]
    fn phi_hom_analytic_cases() {
        let qq = q(8);
        let v = phi_hom(&Profile::Zero, &Profile::Constant(1.0), 1.0, [0.2, 0.1], &qq).unwrap();
        assert!((v - 1.0).abs() < 1e-12);
        let v = phi_hom(&Profile::Constant(2.5), &Profile::Zero, 0.8, [0.2, 0.1], &qq).unwrap();
        assert!((v - 2.5).abs() < 1e-12);
        let s = Profile::Sine { amp: 1.0, k: [1.0, 0.0], phase: 0.0 };
        for (t, x) in [(0.5, [0.3, 0.0]), (1.7, [-1.1, 0.4])] {
            let v = phi_hom(&s, &Profile::Zero, t, x, &qq).unwrap();
            assert!((v - x[0].sin() * t.cos()).abs() < 1e-9);
            let d = dphi_hom(&s, &Profile::Zero, t, x, &qq).unwrap();
            assert!((d[0] + x[0].sin() * t.sin()).abs() < 1e-9);
            assert!((d[1] - x[0].cos() * t.cos()).abs() < 1e-9);
            assert!(d[2].abs() < 1e-9);
        }
        assert_eq!(phi_hom(&s, &Profile::Zero, 0.0, [0.4, 0.0], &qq).unwrap(), 0.4f64.sin());
    }

    #[test]
    fn dphi_hom_matches_differences() {
        let p0 = Profile::Bump { center: [0.2, 0.0], radius: 1.0, amp: 0.5 };
        let p1 = Profile::Bump { center: [-0.1, 0.3], radius: 0.8, amp: -0.3 };
        let qq = q(32);
        let (t, x) = (0.6, [0.3, 0.2]);
        let d = dphi_hom(&p0, &p1, t, x, &qq).unwrap();
        let h = 1e-4;
        let f = |t: f64, x: V2| phi_hom(&p0, &p1, t, x, &qq).unwrap();
        let fd = [
            (f(t + h, x) - f(t - h, x)) / (2.0 * h),
            (f(t, [x[0] + h, x[1]]) - f(t, [x[0] - h, x[1]])) / (2.0 * h),
            (f(t, [x[0], x[1] + h]) - f(t, [x[0], x[1] - h])) / (2.0 * h),
        ];
        for k in 0..3 {
            assert!((d[k] - fd[k]).abs() < 1e-6, "{k}: {} vs {}", d[k], fd[k]);
        }
    }

    #[test]
    fn retarded_with_unit_source() {
        let h = static_history(1.0, false);
        let v = phi_retarded(&h, 1.0, [0.0, 0.0], &q(8)).unwrap();
        assert!((v + 2.0 * PI).abs() < 1e-10);
        let z = static_history(0.0, false);
        assert_eq!(phi_retarded(&z, 1.0, [0.0, 0.0], &q(8)).unwrap(), 0.0);
    }

    #[test]
    fn missing_history_is_reported() {
        let h = static_history(1.0, false);
        match phi_retarded(&h, 1.5, [0.0, 0.0], &q(4)) {
            Err(Error::InsufficientHistory { from, to }) => assert!(from == 1.0 && to == 1.5),
            other => panic!("unexpected {other:?}"),
        }
        let mut gappy = ConeHistory::new(h.grid, None, Profile::Zero, Profile::Zero, 0.3);
        for t in [0.0, 0.25, 0.75] {
            let z = vec![0.0; h.grid.len()];
            gappy.push(HistoryLevel { t, mu0: z.clone(), phi: z.clone(), phi_t: z.clone(), phi_x1: z.clone(), phi_x2: z, f: None }).unwrap();
        }
        assert!(matches!(phi_retarded(&gappy, 0.7, [0.0, 0.0], &q(4)), Err(Error::InsufficientHistory { from, .. }) if from == 0.25));
        assert!(representation_terms(&gappy, 0.2, [0.0, 0.0], &q(4)).is_err());
    }

    #[test]
    fn vacuum_representation_is_homogeneous_part() {
        let mut h = static_history(0.0, true);
        h.phi0 = Profile::Sine { amp: 1.0, k: [1.0, 0.5], phase: 0.2 };
        let qq = q(8);
        let terms = representation_terms(&h, 0.9, [0.1, -0.2], &qq).unwrap();
        assert_eq!(terms.data, [0.0; 3]);
        assert_eq!(terms.a_term, [0.0; 3]);
        assert_eq!(terms.total(), dphi_hom(&h.phi0, &h.phi1, 0.9, [0.1, -0.2], &qq).unwrap());
    }
}
