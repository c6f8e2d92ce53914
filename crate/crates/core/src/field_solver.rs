//! Grid solver for `phi_tt - lap phi = -4 pi mu0` and the energy bookkeeping.
//!
//! `phi` lives at integer time levels. `phi_t` at level `n` is the centered
//! difference `(phi^{n+1} - phi^{n-1}) / 2dt`, which, since `phi^{n+1}` is
//! given by the leapfrog update, equals
//! `(phi^n - phi^{n-1}) / dt + dt/2 (lap phi^n + s^n)` and so needs only data
//! at levels `n` and `n - 1`.

use rayon::prelude::*;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::grid::{Axis, Grid2};
use crate::vlasov_solver::DistributionGrid;

/// Largest allowed `dt / h`.
pub const CFL_LIMIT: f64 = 0.45;

/// Zero Dirichlet edges, or periodic wrap.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Boundary {
    DirichletZero,
    Periodic,
}

/// Square field grid on `[-L, L]^2` (closed) or `[-L, L)^2` (periodic).
pub fn field_grid(half_width: f64, n: usize, boundary: Boundary) -> Grid2 {
    match boundary {
        Boundary::DirichletZero => Grid2::new(Axis::closed(-half_width, half_width, n)),
        Boundary::Periodic => Grid2::new(Axis::periodic(-half_width, 2.0 * half_width, n)),
    }
}

/// Field at one time level.
#[derive(Debug, Clone)]
pub struct FieldState {
    pub grid: Grid2,
    pub t: f64,
    pub dt: f64,
    pub phi: Vec<f64>,
    /// `phi` one step earlier (a fictitious level before the first step).
    pub phi_prev: Vec<f64>,
    pub phi_t: Vec<f64>,
}

pub fn check_cfl(dt: f64, h: f64) -> Result<()> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::Config(format!("dt = {dt} must be positive")));
    }
    if dt > CFL_LIMIT * h * (1.0 + 1e-12) {
        return Err(Error::Config(format!("dt = {dt} exceeds {CFL_LIMIT} h = {}", CFL_LIMIT * h)));
    }
    Ok(())
}

fn boundary_of(grid: &Grid2) -> Boundary {
    if grid.axis.periodic {
        Boundary::Periodic
    } else {
        Boundary::DirichletZero
    }
}

/// Five-point Laplacian; zero on Dirichlet edges.
pub fn laplacian(grid: &Grid2, phi: &[f64]) -> Vec<f64> {
    let n = grid.n();
    let inv_h2 = 1.0 / (grid.h() * grid.h());
    let periodic = grid.axis.periodic;
    let mut out = vec![0.0; grid.len()];
    out.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
        if !periodic && (i == 0 || i + 1 == n) {
            return;
        }
        let im = if i == 0 { n - 1 } else { i - 1 };
        let ip = if i + 1 == n { 0 } else { i + 1 };
        for j in 0..n {
            if !periodic && (j == 0 || j + 1 == n) {
                continue;
            }
            let jm = if j == 0 { n - 1 } else { j - 1 };
            let jp = if j + 1 == n { 0 } else { j + 1 };
            let c = phi[i * n + j];
            row[j] = (phi[im * n + j] + phi[ip * n + j] + phi[i * n + jm] + phi[i * n + jp] - 4.0 * c) * inv_h2;
        }
    });
    out
}

fn zero_dirichlet_edges(grid: &Grid2, v: &mut [f64]) {
    if grid.axis.periodic {
        return;
    }
    let n = grid.n();
    for k in 0..n {
        v[k] = 0.0;
        v[(n - 1) * n + k] = 0.0;
        v[k * n] = 0.0;
        v[k * n + n - 1] = 0.0;
    }
}

impl FieldState {
    /// Level 0 from `phi(0) = phi0`, `phi_t(0) = phi1` and the source
    /// `s^0 = -4 pi mu0(0)`. The level before is set by the Taylor expansion
    /// `phi0 - dt phi1 + dt^2 / 2 (lap phi0 + s^0)`.
    pub fn initial(grid: Grid2, phi0: Vec<f64>, phi1: Vec<f64>, source: &[f64], dt: f64) -> Result<Self> {
        check_cfl(dt, grid.h())?;
        if phi0.len() != grid.len() || phi1.len() != grid.len() || source.len() != grid.len() {
            return Err(Error::InvalidArgument("initial data does not match the grid".into()));
        }
        let lap = laplacian(&grid, &phi0);
        let mut prev: Vec<f64> = (0..grid.len())
            .map(|k| phi0[k] - dt * phi1[k] + 0.5 * dt * dt * (lap[k] + source[k]))
            .collect();
        zero_dirichlet_edges(&grid, &mut prev);
        Ok(FieldState { grid, t: 0.0, dt, phi: phi0, phi_prev: prev, phi_t: phi1 })
    }

    pub fn boundary(&self) -> Boundary {
        boundary_of(&self.grid)
    }

    /// Recomputes `phi_t` with the source at the current level.
    pub fn refine_phi_t(&mut self, source: &[f64]) {
        let lap = laplacian(&self.grid, &self.phi);
        let dt = self.dt;
        self.phi_t = (0..self.grid.len())
            .map(|k| (self.phi[k] - self.phi_prev[k]) / dt + 0.5 * dt * (lap[k] + source[k]))
            .collect();
        zero_dirichlet_edges(&self.grid, &mut self.phi_t);
    }
}

/// Advances one leapfrog step with the source `s^n = -4 pi mu0^n` at the
/// current level. `phi_t` of the result uses `s^n` in place of the not yet
/// known `s^{n+1}`; [`FieldState::refine_phi_t`] corrects it.
pub fn leapfrog_step(state: &FieldState, source: &[f64], dt: f64) -> Result<FieldState> {
    check_cfl(dt, state.grid.h())?;
    if (dt - state.dt).abs() > 1e-12 * state.dt {
        return Err(Error::InvalidArgument(format!("step {dt} differs from the state's step {}", state.dt)));
    }
    if source.len() != state.grid.len() {
        return Err(Error::InvalidArgument("source does not match the grid".into()));
    }
    let lap = laplacian(&state.grid, &state.phi);
    let dt2 = dt * dt;
    let mut next: Vec<f64> = (0..state.grid.len())
        .map(|k| 2.0 * state.phi[k] - state.phi_prev[k] + dt2 * (lap[k] + source[k]))
        .collect();
    zero_dirichlet_edges(&state.grid, &mut next);
    let mut out = FieldState {
        grid: state.grid,
        t: state.t + dt,
        dt,
        phi: next,
        phi_prev: state.phi.clone(),
        phi_t: Vec::new(),
    };
    out.refine_phi_t(source);
    Ok(out)
}

/// `phi_t`, `phi_x1`, `phi_x2` on the grid at one level.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub phi_t: Vec<f64>,
    pub phi_x1: Vec<f64>,
    pub phi_x2: Vec<f64>,
}

/// Spatial derivative along one axis: centered inside, second-order one-sided
/// at closed edges.
fn axis_derivative(grid: &Grid2, phi: &[f64], along_first: bool) -> Vec<f64> {
    let n = grid.n();
    let h = grid.h();
    let periodic = grid.axis.periodic;
    let at = |a: usize, b: usize| if along_first { phi[a * n + b] } else { phi[b * n + a] };
    let mut out = vec![0.0; grid.len()];
    for b in 0..n {
        for a in 0..n {
            let d = if periodic {
                let am = (a + n - 1) % n;
                let ap = (a + 1) % n;
                (at(ap, b) - at(am, b)) / (2.0 * h)
            } else if a == 0 {
                (-3.0 * at(0, b) + 4.0 * at(1, b) - at(2, b)) / (2.0 * h)
            } else if a + 1 == n {
                (3.0 * at(n - 1, b) - 4.0 * at(n - 2, b) + at(n - 3, b)) / (2.0 * h)
            } else {
                (at(a + 1, b) - at(a - 1, b)) / (2.0 * h)
            };
            let k = if along_first { a * n + b } else { b * n + a };
            out[k] = d;
        }
    }
    out
}

pub fn gradients(state: &FieldState) -> Result<Gradients> {
    if state.grid.n() < 3 {
        return Err(Error::InvalidArgument("gradients need at least 3 nodes per axis".into()));
    }
    Ok(Gradients {
        phi_t: state.phi_t.clone(),
        phi_x1: axis_derivative(&state.grid, &state.phi, true),
        phi_x2: axis_derivative(&state.grid, &state.phi, false),
    })
}

/// Momentum moments of `f` on the spatial grid.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentFields {
    /// `int f / gamma dp`
    pub mu0: Vec<f64>,
    /// `int gamma f dp`
    pub mu_e: Vec<f64>,
    /// `int p f dp`, components 1 and 2
    pub mu_p: [Vec<f64>; 2],
}

impl MomentFields {
    pub fn zeros(len: usize) -> Self {
        MomentFields { mu0: vec![0.0; len], mu_e: vec![0.0; len], mu_p: [vec![0.0; len], vec![0.0; len]] }
    }

    /// Wave-equation source `-4 pi mu0`.
    pub fn source(&self) -> Vec<f64> {
        self.mu0.iter().map(|m| -4.0 * PI * m).collect()
    }
}

/// Trapezoid moments over the momentum grid. Fails if `f` is nonzero on the
/// outermost momentum nodes.
pub fn moments(f: &DistributionGrid) -> Result<MomentFields> {
    let g = &f.grid;
    let np = g.p.n;
    let nx = g.x.n;
    let slice = np * np;
    for chunk in f.data.chunks(slice) {
        for j1 in 0..np {
            for j2 in 0..np {
                if (j1 == 0 || j2 == 0 || j1 + 1 == np || j2 + 1 == np) && chunk[j1 * np + j2] != 0.0 {
                    let p = [g.p.node(j1), g.p.node(j2)];
                    return Err(Error::SupportOverflow {
                        t: f.t,
                        value: chunk[j1 * np + j2],
                        p_inf: p[0].abs().max(p[1].abs()),
                        limit: g.p.hi(),
                    });
                }
            }
        }
    }
    let w = |j: usize| g.p.weight(j);
    let mut gam = vec![0.0; slice];
    let mut pw = vec![[0.0; 2]; slice];
    let mut wt = vec![0.0; slice];
    for j1 in 0..np {
        for j2 in 0..np {
            let p = [g.p.node(j1), g.p.node(j2)];
            gam[j1 * np + j2] = (1.0 + p[0] * p[0] + p[1] * p[1]).sqrt();
            pw[j1 * np + j2] = p;
            wt[j1 * np + j2] = w(j1) * w(j2);
        }
    }
    let per_node: Vec<[f64; 4]> = f
        .data
        .par_chunks(slice)
        .map(|chunk| {
            let mut m = [0.0; 4];
            for (k, &v) in chunk.iter().enumerate() {
                if v == 0.0 {
                    continue;
                }
                let wv = wt[k] * v;
                m[0] += wv / gam[k];
                m[1] += wv * gam[k];
                m[2] += wv * pw[k][0];
                m[3] += wv * pw[k][1];
            }
            m
        })
        .collect();
    let mut out = MomentFields::zeros(nx * nx);
    for (k, m) in per_node.iter().enumerate() {
        out.mu0[k] = m[0];
        out.mu_e[k] = m[1];
        out.mu_p[0][k] = m[2];
        out.mu_p[1][k] = m[3];
    }
    Ok(out)
}

/// `e = 4 pi mu_e + (phi_t^2 + |grad phi|^2) / 2`.
pub fn energy_density(moments: &MomentFields, grads: &Gradients) -> Result<Vec<f64>> {
    let n = moments.mu_e.len();
    if grads.phi_t.len() != n || grads.phi_x1.len() != n || grads.phi_x2.len() != n {
        return Err(Error::InvalidArgument("moment and gradient grids differ".into()));
    }
    Ok((0..n)
        .map(|k| {
            4.0 * PI * moments.mu_e[k]
                + 0.5 * (grads.phi_t[k].powi(2) + grads.phi_x1[k].powi(2) + grads.phi_x2[k].powi(2))
        })
        .collect())
}

/// Moments and field derivatives at one time level.
#[derive(Debug, Clone)]
pub struct EnergyLevel {
    pub grid: Grid2,
    pub moments: MomentFields,
    pub grads: Gradients,
}

impl EnergyLevel {
    pub fn density(&self) -> Result<Vec<f64>> {
        energy_density(&self.moments, &self.grads)
    }

    pub fn total(&self) -> Result<f64> {
        Ok(self.grid.integrate(&self.density()?))
    }
}

/// Max over interior nodes of the discrete
/// `d_t e + div(-phi_t grad phi + 4 pi mu_p)` at the middle of three levels
/// spaced `dt` apart, centered in time and space.
pub fn energy_identity_residual(levels: [&EnergyLevel; 3], dt: f64, h: f64) -> Result<f64> {
    let grid = levels[0].grid;
    if levels.iter().any(|l| l.grid != grid) {
        return Err(Error::InvalidArgument("energy levels live on different grids".into()));
    }
    if (grid.h() - h).abs() > 1e-12 * h {
        return Err(Error::InvalidArgument("spacing does not match the grid".into()));
    }
    let e0 = levels[0].density()?;
    let e2 = levels[2].density()?;
    let mid = levels[1];
    let n = grid.n();
    let flux = |k: usize, c: usize| -> f64 {
        let g = if c == 0 { mid.grads.phi_x1[k] } else { mid.grads.phi_x2[k] };
        -mid.grads.phi_t[k] * g + 4.0 * PI * mid.moments.mu_p[c][k]
    };
    let periodic = grid.axis.periodic;
    let range = if periodic { 0..n } else { 1..n - 1 };
    let mut worst: f64 = 0.0;
    for i in range.clone() {
        let im = (i + n - 1) % n;
        let ip = (i + 1) % n;
        for j in range.clone() {
            let jm = (j + n - 1) % n;
            let jp = (j + 1) % n;
            let k = i * n + j;
            let de = (e2[k] - e0[k]) / (2.0 * dt);
            let div = (flux(ip * n + j, 0) - flux(im * n + j, 0)) / (2.0 * h)
                + (flux(i * n + jp, 1) - flux(i * n + jm, 1)) / (2.0 * h);
            worst = worst.max((de + div).abs());
        }
    }
    Ok(worst)
}

/// Both sides of the boundary-flux identity
/// `e + w.(-phi_t grad phi + 4 pi mu_p)
///   = (w ^ grad phi)^2 / 2 + (phi_t - grad phi . w)^2 / 2 + 4 pi int gamma (1 + p^ . w) f dp`
/// for one point with a discrete momentum distribution `(p_k, f_k weight)`.
pub fn boundary_flux_sides(phi_t: f64, grad: [f64; 2], omega: [f64; 2], particles: &[([f64; 2], f64)]) -> (f64, f64) {
    let mut mu_e = 0.0;
    let mut mu_p = [0.0; 2];
    let mut rhs_matter = 0.0;
    for &(p, f) in particles {
        let g = (1.0 + p[0] * p[0] + p[1] * p[1]).sqrt();
        mu_e += g * f;
        mu_p[0] += p[0] * f;
        mu_p[1] += p[1] * f;
        rhs_matter += g * (1.0 + (p[0] * omega[0] + p[1] * omega[1]) / g) * f;
    }
    let e = 4.0 * PI * mu_e + 0.5 * (phi_t * phi_t + grad[0] * grad[0] + grad[1] * grad[1]);
    let lhs = e + omega[0] * (-phi_t * grad[0] + 4.0 * PI * mu_p[0]) + omega[1] * (-phi_t * grad[1] + 4.0 * PI * mu_p[1]);
    let w = omega[0] * grad[1] - omega[1] * grad[0];
    let gw = grad[0] * omega[0] + grad[1] * omega[1];
    let rhs = 0.5 * w * w + 0.5 * (phi_t - gw).powi(2) + 4.0 * PI * rhs_matter;
    (lhs, rhs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Axis;
    use crate::vlasov_solver::{DistributionGrid, PhaseGrid};
    use proptest::prelude::*;

    fn periodic_grid(n: usize) -> Grid2 {
        field_grid(PI, n, Boundary::Periodic)
    }

    fn standing_wave_error(n: usize, t_end: f64) -> f64 {
        let g = periodic_grid(n);
        let dt = 0.4 * g.h();
        let steps = (t_end / dt).ceil() as usize;
        let dt = t_end / steps as f64;
        let zero = vec![0.0; g.len()];
        let mut st = FieldState::initial(g, g.sample(|x| x[0].sin()), zero.clone(), &zero, dt).unwrap();
        for _ in 0..steps {
            st = leapfrog_step(&st, &zero, dt).unwrap();
        }
        let exact = g.sample(|x| x[0].sin() * t_end.cos());
        st.phi.iter().zip(&exact).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }

    #[test]
    fn zero_stays_zero() {
        let g = field_grid(2.0, 17, Boundary::DirichletZero);
        let z = vec![0.0; g.len()];
        let mut st = FieldState::initial(g, z.clone(), z.clone(), &z, 0.1).unwrap();
        for _ in 0..5 {
            st = leapfrog_step(&st, &z, 0.1).unwrap();
        }
        assert!(st.phi.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn standing_wave_second_order() {
        let e1 = standing_wave_error(32, 1.0);
        let e2 = standing_wave_error(64, 1.0);
        let order = (e1 / e2).log2();
        assert!((order - 2.0).abs() < 0.3, "order {order}");
    }

    #[test]
    fn uniform_source_gives_parabola() {
        let g = periodic_grid(16);
        let dt = 0.1;
        let z = vec![0.0; g.len()];
        let s = vec![0.8; g.len()];
        let mut st = FieldState::initial(g, z.clone(), z, &s, dt).unwrap();
        for _ in 0..10 {
            st = leapfrog_step(&st, &s, dt).unwrap();
        }
        assert!((st.phi[5] - 0.4).abs() < 1e-12);
        assert!((st.phi_t[5] - 0.8).abs() < 1e-12);
    }

    #[test]
    fn cfl_violation_is_config_error() {
        let g = field_grid(1.0, 11, Boundary::DirichletZero);
        let z = vec![0.0; g.len()];
        assert!(matches!(FieldState::initial(g, z.clone(), z.clone(), &z, 0.1), Err(Error::Config(_))));
    }

    #[test]
    fn gradient_cases() {
        let g = field_grid(1.0, 21, Boundary::DirichletZero);
        let z = vec![0.0; g.len()];
        let st = |phi: Vec<f64>| FieldState { grid: g, t: 0.0, dt: 0.01, phi, phi_prev: z.clone(), phi_t: z.clone() };
        let c = gradients(&st(vec![3.0; g.len()])).unwrap();
        assert!(c.phi_x1.iter().chain(&c.phi_x2).all(|v| v.abs() < 1e-12));
        let l = gradients(&st(g.sample(|x| x[0]))).unwrap();
        assert!(l.phi_x1.iter().all(|v| (v - 1.0).abs() < 1e-12));
        let err = |n: usize| {
            let g = field_grid(1.0, n, Boundary::DirichletZero);
            let z = vec![0.0; g.len()];
            let s = FieldState { grid: g, t: 0.0, dt: 0.001, phi: g.sample(|x| (x[0] + 2.0 * x[1]).sin()), phi_prev: z.clone(), phi_t: z };
            let d = gradients(&s).unwrap();
            let ex = g.sample(|x| 2.0 * (x[0] + 2.0 * x[1]).cos());
            d.phi_x2.iter().zip(&ex).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
        };
        let order = (err(21) / err(41)).log2();
        assert!(order > 1.8, "order {order}");
    }

    fn bump_distribution(nx: usize, np: usize) -> DistributionGrid {
        let grid = PhaseGrid { x: Axis::closed(-1.0, 1.0, nx), p: Axis::closed(-1.0, 1.0, np) };
        DistributionGrid::from_fn(grid, 0.0, |x, p| {
            let r = (p[0] * p[0] + p[1] * p[1]) / 0.04;
            let q = x[0] * x[0] + x[1] * x[1];
            if r < 1.0 && q < 0.5 {
                (1.0 - r).powi(4)
            } else {
                0.0
            }
        })
    }

    #[test]
    fn moments_of_narrow_even_bump() {
        let f = bump_distribution(5, 81);
        let m = moments(&f).unwrap();
        let c = f.grid.x.n / 2;
        let k = c * 5 + c;
        // int (1 - r^2/a^2)^4 over the disc of radius a = 0.2 is pi a^2 / 5.
        let mass = PI * 0.04 / 5.0;
        assert!((m.mu_e[k] - mass).abs() < 0.02 * mass);
        assert!((m.mu0[k] - mass).abs() < 0.02 * mass);
        assert!(m.mu_e[k] >= m.mu0[k]);
        assert!(m.mu_p[0][k].abs() < 1e-15 && m.mu_p[1][k].abs() < 1e-15);
        let z = DistributionGrid::zeros(f.grid, 0.0);
        let mz = moments(&z).unwrap();
        assert!(mz.mu0.iter().chain(&mz.mu_e).all(|&v| v == 0.0));
    }

    #[test]
    fn moments_detect_boundary_support() {
        let grid = PhaseGrid { x: Axis::closed(-1.0, 1.0, 3), p: Axis::closed(-1.0, 1.0, 9) };
        let f = DistributionGrid::from_fn(grid, 0.0, |_, _| 1.0);
        assert!(matches!(moments(&f), Err(Error::SupportOverflow { .. })));
    }

    #[test]
    fn vacuum_standing_wave_energy_is_conserved() {
        let g = periodic_grid(64);
        let dt = 0.4 * g.h();
        let z = vec![0.0; g.len()];
        let mut st = FieldState::initial(g, g.sample(|x| x[0].sin()), z.clone(), &z, dt).unwrap();
        let energy = |s: &FieldState| {
            let lvl = EnergyLevel { grid: g, moments: MomentFields::zeros(g.len()), grads: gradients(s).unwrap() };
            lvl.total().unwrap()
        };
        let e0 = energy(&st);
        // centered differences see cos(x1) scaled by sin(h) / h
        let damp = g.h().sin() / g.h();
        assert!((e0 - PI * PI * damp * damp).abs() < 1e-9, "e0 {e0}");
        let mut drift: f64 = 0.0;
        for _ in 0..100 {
            st = leapfrog_step(&st, &z, dt).unwrap();
            drift = drift.max((energy(&st) - e0).abs() / e0);
        }
        let elapsed = 100.0 * dt;
        assert!(drift < 1e-3 * elapsed, "drift {drift} over {elapsed}");
    }

    fn wave_residual(n: usize) -> f64 {
        let g = periodic_grid(n);
        let dt = 0.4 * g.h();
        let mk = |t: f64| {
            let s = FieldState {
                grid: g,
                t,
                dt,
                phi: g.sample(|x| x[0].sin() * t.cos()),
                phi_prev: vec![0.0; g.len()],
                phi_t: g.sample(|x| -x[0].sin() * t.sin()),
            };
            EnergyLevel { grid: g, moments: MomentFields::zeros(g.len()), grads: gradients(&s).unwrap() }
        };
        let (a, b, c) = (mk(0.5 - dt), mk(0.5), mk(0.5 + dt));
        energy_identity_residual([&a, &b, &c], dt, g.h()).unwrap()
    }

    #[test]
    fn energy_residual_cases() {
        let g = periodic_grid(16);
        let z = EnergyLevel { grid: g, moments: MomentFields::zeros(g.len()), grads: Gradients { phi_t: vec![0.0; g.len()], phi_x1: vec![0.0; g.len()], phi_x2: vec![0.0; g.len()] } };
        assert_eq!(energy_identity_residual([&z, &z, &z], 0.1, g.h()).unwrap(), 0.0);
        let order = (wave_residual(32) / wave_residual(64)).log2();
        assert!((order - 2.0).abs() < 0.3, "order {order}");
        let other = EnergyLevel { grid: periodic_grid(8), ..z.clone() };
        assert!(energy_identity_residual([&z, &other, &z], 0.1, g.h()).is_err());
    }

    proptest! {
        #[test]
        fn boundary_flux_identity(phi_t in -2.0f64..2.0, g in prop::array::uniform2(-2.0f64..2.0), a in 0.0f64..6.3,
                                  ps in prop::collection::vec((prop::array::uniform2(-5.0f64..5.0), 0.0f64..1.0), 0..6)) {
            let (l, r) = boundary_flux_sides(phi_t, g, [a.cos(), a.sin()], &ps);
            prop_assert!((l - r).abs() < 1e-11 * (1.0 + l.abs()));
        }

        #[test]
        fn energy_density_nonnegative(mu in prop::collection::vec(0.0f64..3.0, 4), gr in prop::collection::vec(-3.0f64..3.0, 12)) {
            let m = MomentFields { mu0: mu.iter().map(|v| v * 0.5).collect(), mu_e: mu.clone(), mu_p: [vec![0.0; 4], vec![0.0; 4]] };
            let g = Gradients { phi_t: gr[0..4].to_vec(), phi_x1: gr[4..8].to_vec(), phi_x2: gr[8..12].to_vec() };
            prop_assert!(energy_density(&m, &g).unwrap().iter().all(|&e| e >= 0.0));
        }
    }
}
