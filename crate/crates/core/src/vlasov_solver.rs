//! Semi-Lagrangian transport of `f(t, x, p)` on a 2+2 dimensional tensor grid.
//!
//! One step traces each node backward along the characteristics over
//! `[t, t + dt]`, interpolates `f` at the foot with tensor-product cubics, and
//! applies the conformal factor `exp(3 (phi(t + dt, x) - phi(t, X_foot)))`.

use rayon::prelude::*;

use crate::characteristics::{rk4_step, CharState, FieldSampler};
use crate::error::{Error, Result};
use crate::grid::{cubic_weights, Axis};
use crate::phase_geometry::{cone_denominator, ConeCoordinate, Momentum2};
use crate::vec2::{norm2, V2};

/// Tensor grid `x-axis^2 x p-axis^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseGrid {
    pub x: Axis,
    pub p: Axis,
}

impl PhaseGrid {
    #[inline]
    pub fn len(&self) -> usize {
        self.x.n * self.x.n * self.p.n * self.p.n
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn slice_len(&self) -> usize {
        self.p.n * self.p.n
    }

    /// Flat index; layout `[x1][x2][p1][p2]` with `p2` fastest.
    #[inline]
    pub fn idx(&self, i1: usize, i2: usize, j1: usize, j2: usize) -> usize {
        ((i1 * self.x.n + i2) * self.p.n + j1) * self.p.n + j2
    }

    /// Phase-space cell volume `h_x^2 h_p^2`.
    pub fn cell_volume(&self) -> f64 {
        self.x.h * self.x.h * self.p.h * self.p.h
    }

    /// Half-width of the momentum box.
    pub fn p_half_width(&self) -> f64 {
        self.p.hi().abs().max(self.p.lo.abs())
    }
}

/// `f` sampled on a [`PhaseGrid`] at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct DistributionGrid {
    pub grid: PhaseGrid,
    pub t: f64,
    pub data: Vec<f64>,
}

impl DistributionGrid {
    pub fn zeros(grid: PhaseGrid, t: f64) -> Self {
        DistributionGrid { grid, t, data: vec![0.0; grid.len()] }
    }

    pub fn from_fn(grid: PhaseGrid, t: f64, f: impl Fn(V2, V2) -> f64 + Sync) -> Self {
        let mut data = vec![0.0; grid.len()];
        let (nx, np) = (grid.x.n, grid.p.n);
        data.par_chunks_mut(np * np).enumerate().for_each(|(k, chunk)| {
            let x = [grid.x.node(k / nx), grid.x.node(k % nx)];
            for j1 in 0..np {
                for j2 in 0..np {
                    chunk[j1 * np + j2] = f(x, [grid.p.node(j1), grid.p.node(j2)]);
                }
            }
        });
        DistributionGrid { grid, t, data }
    }

    /// Momentum slice at spatial node `(i1, i2)`.
    pub fn slice(&self, i1: usize, i2: usize) -> &[f64] {
        let s = self.grid.slice_len();
        let k = i1 * self.grid.x.n + i2;
        &self.data[k * s..(k + 1) * s]
    }

    pub fn sup(&self) -> f64 {
        self.data.iter().fold(0.0, |a, &b| a.max(b))
    }

    /// Trapezoid integral over phase space.
    pub fn mass(&self) -> f64 {
        let g = &self.grid;
        let (nx, np) = (g.x.n, g.p.n);
        let mut pw = vec![0.0; np * np];
        for j1 in 0..np {
            for j2 in 0..np {
                pw[j1 * np + j2] = g.p.weight(j1) * g.p.weight(j2);
            }
        }
        let mut total = 0.0;
        for (k, chunk) in self.data.chunks(np * np).enumerate() {
            let wx = g.x.weight(k / nx) * g.x.weight(k % nx);
            let s: f64 = chunk.iter().zip(&pw).map(|(a, b)| a * b).sum();
            total += wx * s;
        }
        total
    }

    /// Tensor-product cubic interpolation; stencil nodes outside the grid
    /// count as zero.
    #[inline]
    pub fn interpolate(&self, x: V2, p: V2) -> f64 {
        let g = &self.grid;
        if let (Some((i0, wa)), Some((k0, wb)), Some((j0, wc)), Some((l0, wd))) =
            (inner_stencil(&g.x, x[0]), inner_stencil(&g.x, x[1]), inner_stencil(&g.p, p[0]), inner_stencil(&g.p, p[1]))
        {
            let (nx, np) = (g.x.n, g.p.n);
            let mut total = 0.0;
            for (a, &wa) in wa.iter().enumerate() {
                let mut sa = 0.0;
                for (b, &wb) in wb.iter().enumerate() {
                    let off = (((i0 + a) * nx + k0 + b) * np + j0) * np + l0;
                    let blk = &self.data[off..off + 3 * np + 4];
                    let mut sb = 0.0;
                    for (c, &wc) in wc.iter().enumerate() {
                        let r = &blk[c * np..c * np + 4];
                        sb += wc * (wd[0] * r[0] + wd[1] * r[1] + wd[2] * r[2] + wd[3] * r[3]);
                    }
                    sa += wb * sb;
                }
                total += wa * sa;
            }
            return total;
        }
        let (ia, wa) = axis_stencil(&g.x, x[0]);
        let (ib, wb) = axis_stencil(&g.x, x[1]);
        let (ja, wc) = axis_stencil(&g.p, p[0]);
        let (jb, wd) = axis_stencil(&g.p, p[1]);
        let (nx, np) = (g.x.n, g.p.n);
        let mut total = 0.0;
        for a in 0..4 {
            if wa[a] == 0.0 {
                continue;
            }
            let mut sa = 0.0;
            for b in 0..4 {
                if wb[b] == 0.0 {
                    continue;
                }
                let base = (ia[a] * nx + ib[b]) * np;
                let mut sb = 0.0;
                for c in 0..4 {
                    if wc[c] == 0.0 {
                        continue;
                    }
                    let row = &self.data[(base + ja[c]) * np..(base + ja[c] + 1) * np];
                    sb += wc[c] * (wd[0] * row[jb[0]] + wd[1] * row[jb[1]] + wd[2] * row[jb[2]] + wd[3] * row[jb[3]]);
                }
                sa += wb[b] * sb;
            }
            total += wa[a] * sa;
        }
        total
    }
}

/// First index and weights of a stencil lying wholly inside a closed axis.
#[inline]
fn inner_stencil(axis: &Axis, x: f64) -> Option<(usize, [f64; 4])> {
    let (i, u) = axis.cell(x);
    if axis.periodic || i < 1 || i + 2 >= axis.n as isize {
        return None;
    }
    Some(((i - 1) as usize, cubic_weights(u + 1.0)))
}

/// Four stencil indices and weights; out-of-range nodes get weight zero.
#[inline]
fn axis_stencil(axis: &Axis, x: f64) -> ([usize; 4], [f64; 4]) {
    let (i, u) = axis.cell(x);
    let mut w = cubic_weights(u + 1.0);
    let mut idx = [0usize; 4];
    for k in 0..4 {
        match axis.wrap(i - 1 + k as isize) {
            Some(j) => idx[k] = j,
            None => w[k] = 0.0,
        }
    }
    (idx, w)
}

/// Support bookkeeping thresholds for a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupportGuard {
    /// Values at or below this are treated as numerical dust.
    pub threshold: f64,
    /// Overflow when support reaches this fraction of the momentum half-width.
    pub overflow_fraction: f64,
}

impl SupportGuard {
    /// Threshold `1e-12 sup f_in` and overflow at 90% of the momentum box.
    pub fn for_initial(sup_f_in: f64) -> Self {
        SupportGuard { threshold: 1e-12 * sup_f_in, overflow_fraction: 0.9 }
    }
}

/// Per-step bookkeeping from [`sl_step`].
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StepStats {
    /// Phase-space integral of the negative undershoots removed by clipping.
    pub clipped_mass: f64,
    /// Nodes that were traced.
    pub active_nodes: usize,
    /// Phase-space integral of the positive values removed as dust: those at
    /// or below the support threshold, and interpolated values at feet beyond
    /// the momentum support of the previous level.
    pub dust_mass: f64,
}

fn dilate(mask: &[bool], n: usize, r: usize) -> Vec<bool> {
    let mut rows = vec![false; n * n];
    for i in 0..n {
        for j in 0..n {
            if mask[i * n + j] {
                for jj in j.saturating_sub(r)..(j + r + 1).min(n) {
                    rows[i * n + jj] = true;
                }
            }
        }
    }
    let mut out = vec![false; n * n];
    for i in 0..n {
        for j in 0..n {
            if rows[i * n + j] {
                for ii in i.saturating_sub(r)..(i + r + 1).min(n) {
                    out[ii * n + j] = true;
                }
            }
        }
    }
    out
}

/// Advances `f` from `t` to `t + dt`. `field` must cover `[t, t + dt]` on the
/// traced region. Feet beyond the momentum support radius of `f` give zero.
/// Negative interpolation undershoots are clipped and values at or below the
/// support threshold are zeroed. Anything above the threshold in
/// the two outermost momentum shells, or beyond the overflow fraction of the
/// momentum box, aborts the step.
pub fn sl_step<S: FieldSampler + ?Sized>(
    f: &DistributionGrid,
    field: &S,
    dt: f64,
    guard: &SupportGuard,
) -> Result<(DistributionGrid, StepStats)> {
    let g = f.grid;
    if !(dt > 0.0 && dt <= g.x.h * (1.0 + 1e-12)) {
        return Err(Error::InvalidArgument(format!("step {dt} must lie in (0, h_x = {}]", g.x.h)));
    }
    let (nx, np) = (g.x.n, g.p.n);
    let slice = np * np;
    let t0 = f.t;
    let t1 = f.t + dt;

    let mut xmask = vec![false; nx * nx];
    let mut pmask = vec![false; slice];
    // Squared radius of the momentum support of `f`. The exact solution
    // vanishes beyond it along every characteristic foot, so feet outside are
    // not interpolated; otherwise the cubic stencil spreads dust outward by up
    // to two cells per step.
    let mut r2: f64 = -1.0;
    for (k, chunk) in f.data.chunks(slice).enumerate() {
        for (j, &v) in chunk.iter().enumerate() {
            if v != 0.0 {
                xmask[k] = true;
                pmask[j] = true;
            }
            if v > guard.threshold {
                r2 = r2.max(norm2([g.p.node(j / np), g.p.node(j % np)]));
            }
        }
    }
    let r2_cut = r2 * (1.0 + 1e-12);
    let rx = (dt / g.x.h).ceil() as usize + 2;
    let xact = dilate(&xmask, nx, rx);

    // Momentum drift bound from the field over the active spatial region.
    let pmax = g.p_half_width() * std::f64::consts::SQRT_2;
    let mut fmax: f64 = 0.0;
    for i1 in 0..nx {
        for i2 in 0..nx {
            if !xact[i1 * nx + i2] {
                continue;
            }
            let x = [g.x.node(i1), g.x.node(i2)];
            for s in [t0, t1] {
                let fs = field.sample(s, x).map_err(|e| match e {
                    Error::OutsideSampler { s, x } => Error::OutOfDomain { s, x, p: [0.0; 2] },
                    other => other,
                })?;
                let gr = fs.grad[0].hypot(fs.grad[1]);
                fmax = fmax.max((fs.phi_t.abs() + gr) * pmax + gr);
            }
        }
    }
    let rp = (1.5 * fmax * dt / g.p.h).ceil() as usize + 2;
    let mut pact = dilate(&pmask, np, rp);
    // Nodes whose feet cannot reach back inside the support radius stay zero.
    let reach = if r2 < 0.0 { -1.0 } else { r2_cut.sqrt() + 1.5 * fmax * dt };
    for (j, a) in pact.iter_mut().enumerate() {
        let p = [g.p.node(j / np), g.p.node(j % np)];
        *a = *a && norm2(p) <= reach * reach.abs();
    }

    let mut out = vec![0.0; g.len()];
    let row_len = nx * slice;
    let results: Vec<Result<(f64, f64, usize)>> = out
        .par_chunks_mut(row_len)
        .enumerate()
        .map(|(i1, row)| {
            let mut clipped = 0.0;
            let mut cut = 0.0;
            let mut active = 0usize;
            for i2 in 0..nx {
                if !xact[i1 * nx + i2] {
                    continue;
                }
                let x = [g.x.node(i1), g.x.node(i2)];
                let phi_new = field.potential(t1, x)?;
                let dst = &mut row[i2 * slice..(i2 + 1) * slice];
                for j1 in 0..np {
                    for j2 in 0..np {
                        if !pact[j1 * np + j2] {
                            continue;
                        }
                        active += 1;
                        let p = [g.p.node(j1), g.p.node(j2)];
                        let st = CharState { s: t1, x, p };
                        let foot = rk4_step(&st, -dt, field).map_err(|e| match e {
                            Error::OutsideSampler { .. } => Error::OutOfDomain { s: t1, x, p },
                            other => other,
                        })?;
                        let v = f.interpolate(foot.x, foot.p);
                        if v == 0.0 {
                            continue;
                        }
                        if norm2(foot.p) > r2_cut {
                            cut += v.max(0.0);
                            continue;
                        }
                        let w = (3.0 * (phi_new - field.potential(t0, foot.x)?)).exp();
                        let val = v * w;
                        if val < 0.0 {
                            clipped -= val;
                        } else {
                            dst[j1 * np + j2] = val;
                        }
                    }
                }
            }
            Ok((clipped, cut, active))
        })
        .collect();

    let mut stats = StepStats::default();
    let mut dust = 0.0;
    for r in results {
        let (c, d, a) = r?;
        stats.clipped_mass += c;
        dust += d;
        stats.active_nodes += a;
    }
    stats.clipped_mass *= g.cell_volume();

    let limit = guard.overflow_fraction * g.p_half_width();
    for chunk in out.chunks_mut(slice) {
        for j1 in 0..np {
            for j2 in 0..np {
                let k = j1 * np + j2;
                let v = chunk[k];
                if v == 0.0 {
                    continue;
                }
                if v <= guard.threshold {
                    dust += v;
                    chunk[k] = 0.0;
                    continue;
                }
                let p_inf = g.p.node(j1).abs().max(g.p.node(j2).abs());
                let shell = j1 < 2 || j2 < 2 || j1 + 2 >= np || j2 + 2 >= np;
                if shell || p_inf > limit {
                    return Err(Error::SupportOverflow { t: t1, value: v, p_inf, limit });
                }
            }
        }
    }
    stats.dust_mass = dust * g.cell_volume();
    Ok((DistributionGrid { grid: g, t: t1, data: out }, stats))
}

/// `P(t)` and `bar P(t)` with the other per-level sup diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupportReport {
    pub p_t: f64,
    pub bar_p_t: f64,
    pub sup_f: f64,
    pub mass: f64,
}

/// Running suprema of `|p|` and `e^phi |p|` over the support seen so far.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RunningSupport {
    pub p: f64,
    pub bar_p: f64,
}

/// `P_t = max(running, max{|p| : f > threshold}) + 3`, and `bar P_t` the same
/// with `|p|` weighted by `e^{phi(t, x)}`. `phi` is sampled on the spatial grid.
/// Also returns the updated running suprema.
pub fn support(f: &DistributionGrid, running: RunningSupport, threshold: f64, phi: &[f64]) -> Result<(SupportReport, RunningSupport)> {
    let g = &f.grid;
    let (nx, np) = (g.x.n, g.p.n);
    if phi.len() != nx * nx {
        return Err(Error::InvalidArgument("potential does not match the spatial grid".into()));
    }
    let mut pabs = vec![0.0; np * np];
    for j1 in 0..np {
        for j2 in 0..np {
            pabs[j1 * np + j2] = g.p.node(j1).hypot(g.p.node(j2));
        }
    }
    let mut pm: f64 = 0.0;
    let mut bpm: f64 = 0.0;
    for (k, chunk) in f.data.chunks(np * np).enumerate() {
        let mut local: f64 = 0.0;
        for (j, &v) in chunk.iter().enumerate() {
            if v > threshold {
                local = local.max(pabs[j]);
            }
        }
        if local > 0.0 {
            pm = pm.max(local);
            bpm = bpm.max(phi[k].exp() * local);
        }
    }
    let next = RunningSupport { p: running.p.max(pm), bar_p: running.bar_p.max(bpm) };
    Ok((
        SupportReport { p_t: next.p + 3.0, bar_p_t: next.bar_p + 3.0, sup_f: f.sup(), mass: f.mass() },
        next,
    ))
}

/// `sup e^{-3 phi} f` over the grid.
pub fn conformal_sup(f: &DistributionGrid, phi: &[f64]) -> f64 {
    let s = f.grid.slice_len();
    f.data
        .chunks(s)
        .zip(phi)
        .map(|(c, &ph)| c.iter().fold(0.0f64, |a, &b| a.max(b)) * (-3.0 * ph).exp())
        .fold(0.0, f64::max)
}

/// `int f / (gamma (1 + xi . p^)) dp` for one momentum slice, by the
/// trapezoid rule on `paxis^2`.
pub fn sigma_bc(slice: &[f64], paxis: &Axis, xi: &ConeCoordinate) -> Result<f64> {
    if xi.xi[0].hypot(xi.xi[1]) > 1.0 + 1e-14 || !(xi.xi[0].is_finite() && xi.xi[1].is_finite()) {
        return Err(Error::Domain(format!("|xi| > 1 for xi = {:?}", xi.xi)));
    }
    let np = paxis.n;
    if slice.len() != np * np {
        return Err(Error::InvalidArgument("slice does not match the momentum grid".into()));
    }
    let mut s = 0.0;
    for j1 in 0..np {
        for j2 in 0..np {
            let v = slice[j1 * np + j2];
            if v == 0.0 {
                continue;
            }
            let m = Momentum2::new_unchecked([paxis.node(j1), paxis.node(j2)]);
            s += paxis.weight(j1) * paxis.weight(j2) * v / (m.gamma * cone_denominator(xi.xi, &m));
        }
    }
    Ok(s)
}

/// Least-squares fit `log sup f = a + rate t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrowthFit {
    pub rate: f64,
    pub intercept: f64,
    /// Root-mean-square residual of the fit in `log sup f`.
    pub residual: f64,
}

/// Fits an exponential rate to `(t, sup f)` samples. Nonpositive sups are
/// skipped; with fewer than two usable samples the rate is reported as zero.
pub fn sup_norm_growth_check(times: &[f64], sups: &[f64]) -> Result<GrowthFit> {
    if times.len() != sups.len() || times.len() < 10 {
        return Err(Error::InvalidArgument("need at least 10 matching samples".into()));
    }
    let pts: Vec<(f64, f64)> = times.iter().zip(sups).filter(|(_, &s)| s > 0.0).map(|(&t, &s)| (t, s.ln())).collect();
    if pts.len() < 2 {
        return Ok(GrowthFit { rate: 0.0, intercept: 0.0, residual: 0.0 });
    }
    let n = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let stt: f64 = pts.iter().map(|p| (p.0 - mt).powi(2)).sum();
    let sty: f64 = pts.iter().map(|p| (p.0 - mt) * (p.1 - my)).sum();
    let rate = if stt > 0.0 { sty / stt } else { 0.0 };
    let intercept = my - rate * mt;
    let residual = (pts.iter().map(|p| (p.1 - intercept - rate * p.0).powi(2)).sum::<f64>() / n).sqrt();
    Ok(GrowthFit { rate, intercept, residual })
}
