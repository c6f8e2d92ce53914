//! The coupled time loop.
//!
//! Per step `n -> n + 1`: moments of `f^n` give the source, the leapfrog step
//! gives `phi^{n+1}`, gradients are taken, `f` is traced over `[t_n, t_{n+1}]`
//! in the grid field between the two levels, and `phi_t^{n+1}` is then
//! recomputed with the source of `f^{n+1}`.

use std::collections::VecDeque;
use std::fs;
use std::io::Write;
use std::path::Path;

use crate::characteristics::{FieldLevel, GridFieldSampler};
use crate::error::{Error, Result};
use crate::field_solver::{energy_identity_residual, gradients, leapfrog_step, moments, EnergyLevel, FieldState, Gradients, MomentFields};
use crate::retarded_evaluator::{ConeHistory, CroppedDistribution, HistoryLevel};
use crate::snapshot::{write_snapshot, Snapshot};
use crate::vlasov_solver::{conformal_sup, sl_step, support, DistributionGrid, RunningSupport, SupportGuard, SupportReport};

use super::config::RunConfig;

pub const DIAGNOSTICS_HEADER: &str = "t,total_energy,energy_residual,P_t,barP_t,sup_f,conformal_drift,mass,clipped_mass";

/// One row of the diagnostics CSV.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub total_energy: f64,
    /// Centered energy-identity residual; rows at either end reuse the
    /// nearest centered triple of levels.
    pub energy_residual: f64,
    pub p_t: f64,
    pub bar_p_t: f64,
    pub sup_f: f64,
    /// `|sup e^{-3 phi} f - its initial value| / initial value`, 0 in vacuum.
    pub conformal_drift: f64,
    pub mass: f64,
    /// Mass removed by clipping so far.
    pub clipped_mass: f64,
}

impl DiagnosticsRecord {
    pub fn csv_row(&self) -> String {
        [
            self.t,
            self.total_energy,
            self.energy_residual,
            self.p_t,
            self.bar_p_t,
            self.sup_f,
            self.conformal_drift,
            self.mass,
            self.clipped_mass,
        ]
        .iter()
        .map(|v| format!("{v:e}"))
        .collect::<Vec<_>>()
        .join(",")
    }
}

pub fn diagnostics_csv(records: &[DiagnosticsRecord]) -> String {
    let mut s = String::from(DIAGNOSTICS_HEADER);
    s.push('\n');
    for r in records {
        s.push_str(&r.csv_row());
        s.push('\n');
    }
    s
}

/// State of a finished run.
#[derive(Debug)]
pub struct RunOutput {
    pub records: Vec<DiagnosticsRecord>,
    pub history: ConeHistory,
    pub field: FieldState,
    pub grads: Gradients,
    pub f: DistributionGrid,
    pub dt: f64,
    pub steps: usize,
}

/// An aborted run: the failing step, the error and the rows completed so far.
#[derive(Debug)]
pub struct RunFailure {
    pub step: usize,
    pub error: Error,
    pub records: Vec<DiagnosticsRecord>,
}

/// Called at every level with the step index, field, gradients and distribution.
pub type LevelHook<'a> = dyn FnMut(usize, &FieldState, &Gradients, &DistributionGrid) -> Result<()> + 'a;

struct Loop<'c> {
    cfg: &'c RunConfig,
    dt: f64,
    guard: SupportGuard,
    running: RunningSupport,
    conformal0: f64,
    clipped: f64,
    records: Vec<DiagnosticsRecord>,
    energy: VecDeque<EnergyLevel>,
    history: ConeHistory,
}

impl Loop<'_> {
    fn level(&mut self, n: usize, field: &FieldState, grads: &Gradients, m: &MomentFields, f: &DistributionGrid) -> Result<()> {
        let (report, next): (SupportReport, RunningSupport) = support(f, self.running, self.guard.threshold, &field.phi)?;
        self.running = next;
        let conf = conformal_sup(f, &field.phi);
        if n == 0 {
            self.conformal0 = conf;
        }
        let drift = if self.conformal0 > 0.0 { (conf - self.conformal0).abs() / self.conformal0 } else { 0.0 };
        let el = EnergyLevel { grid: field.grid, moments: m.clone(), grads: grads.clone() };
        self.records.push(DiagnosticsRecord {
            t: field.t,
            total_energy: el.total()?,
            energy_residual: f64::NAN,
            p_t: report.p_t,
            bar_p_t: report.bar_p_t,
            sup_f: report.sup_f,
            conformal_drift: drift,
            mass: report.mass,
            clipped_mass: self.clipped,
        });
        self.energy.push_back(el);
        if self.energy.len() > 3 {
            self.energy.pop_front();
        }
        if self.energy.len() == 3 {
            let r = energy_identity_residual([&self.energy[0], &self.energy[1], &self.energy[2]], self.dt, field.grid.h())?;
            self.records[n - 1].energy_residual = r;
            if n == 2 {
                self.records[0].energy_residual = r;
            }
        }
        if n % self.cfg.history_stride == 0 || n == self.cfg.steps() {
            self.history.push(HistoryLevel {
                t: field.t,
                mu0: m.mu0.clone(),
                phi: field.phi.clone(),
                phi_t: grads.phi_t.clone(),
                phi_x1: grads.phi_x1.clone(),
                phi_x2: grads.phi_x2.clone(),
                f: self.cfg.history_keep_distribution.then(|| CroppedDistribution::from_full(f)),
            })?;
        }
        Ok(())
    }
}

fn field_level<'a>(s: &'a FieldState, g: &'a Gradients) -> FieldLevel<'a> {
    FieldLevel { t: s.t, phi: &s.phi, phi_t: &g.phi_t, phi_x1: &g.phi_x1, phi_x2: &g.phi_x2 }
}

/// Runs the coupled system in memory.
pub fn simulate(cfg: &RunConfig, hook: &mut LevelHook<'_>) -> std::result::Result<RunOutput, RunFailure> {
    let fail0 = |error| RunFailure { step: 0, error, records: Vec::new() };
    cfg.validate().map_err(fail0)?;
    let data = cfg.initial_data();
    let grid = cfg.field_grid();
    let phase = cfg.phase_grid();
    let dt = cfg.effective_dt();
    let steps = cfg.steps();

    let f0 = DistributionGrid::from_fn(phase, 0.0, |x, p| data.f_in.value(x, p));
    let m0 = moments(&f0).map_err(fail0)?;
    let phi0 = grid.sample(|x| data.phi0.value(x));
    let phi1 = grid.sample(|x| data.phi1.value(x));
    let mut field = FieldState::initial(grid, phi0, phi1, &m0.source(), dt).map_err(fail0)?;
    let mut grads = gradients(&field).map_err(fail0)?;

    let r0 = data.f_in.p_support_radius();
    let mut lp = Loop {
        cfg,
        dt,
        guard: SupportGuard::for_initial(f0.sup()),
        running: RunningSupport::default(),
        conformal0: 0.0,
        clipped: 0.0,
        records: Vec::with_capacity(steps + 1),
        energy: VecDeque::new(),
        history: ConeHistory::new(grid, Some(phase.p), data.phi0.clone(), data.phi1.clone(), cfg.history_stride as f64 * dt),
    };
    // The sup defining P(0) runs over the exact support, whose edge |p| = R0 is
    // not a grid node; seed the running maxima with it.
    if r0 > 0.0 {
        let slice = phase.slice_len();
        let phi_max = f0
            .data
            .chunks(slice)
            .zip(&field.phi)
            .filter(|(c, _)| c.iter().any(|&v| v > 0.0))
            .map(|(_, &p)| p)
            .fold(f64::NEG_INFINITY, f64::max);
        lp.running = RunningSupport { p: r0, bar_p: r0 * phi_max.exp() };
    }

    let mut f = f0;
    let mut m = m0;
    let mut n = 0;
    let result = (|| -> Result<()> {
        lp.level(0, &field, &grads, &m, &f)?;
        hook(0, &field, &grads, &f)?;
        while n < steps {
            n += 1;
            let t_next = n as f64 * dt;
            let mut next = leapfrog_step(&field, &m.source(), dt)?;
            next.t = t_next;
            let provisional = gradients(&next)?;
            let (f_next, stats) = {
                let sampler = GridFieldSampler::new(grid, field_level(&field, &grads), field_level(&next, &provisional));
                sl_step(&f, &sampler, dt, &lp.guard)?
            };
            let mut f_next = f_next;
            f_next.t = t_next;
            let m_next = moments(&f_next)?;
            next.refine_phi_t(&m_next.source());
            let g_next = gradients(&next)?;
            lp.clipped += stats.clipped_mass;
            field = next;
            grads = g_next;
            f = f_next;
            m = m_next;
            lp.level(n, &field, &grads, &m, &f)?;
            hook(n, &field, &grads, &f)?;
        }
        Ok(())
    })();
    if let Err(error) = result {
        return Err(RunFailure { step: n, error, records: lp.records });
    }
    let last = lp.records.len() - 1;
    lp.records[last].energy_residual = lp.records[last - 1].energy_residual;
    Ok(RunOutput { records: lp.records, history: lp.history, field, grads, f, dt, steps })
}

/// Writes `phi`, `phi_t` and (when `with_f`) `f` snapshots for step `n`.
pub fn write_level_snapshots(dir: &Path, n: usize, field: &FieldState, f: Option<&DistributionGrid>) -> Result<()> {
    let nx = field.grid.n();
    write_snapshot(&dir.join(format!("phi_{n:06}.bin")), &Snapshot::new(vec![nx, nx], field.phi.clone())?)?;
    write_snapshot(&dir.join(format!("phi_t_{n:06}.bin")), &Snapshot::new(vec![nx, nx], field.phi_t.clone())?)?;
    if let Some(f) = f {
        let np = f.grid.p.n;
        write_snapshot(&dir.join(format!("f_{n:06}.bin")), &Snapshot::new(vec![nx, nx, np, np], f.data.clone())?)?;
    }
    Ok(())
}

/// `run` subcommand: simulates and writes `diagnostics.csv`, `config.txt` and
/// snapshots into `out`. Returns the process exit code.
pub fn run_command(cfg: &RunConfig, out: &Path, stderr: &mut dyn Write) -> i32 {
    if let Err(e) = fs::create_dir_all(out) {
        let _ = writeln!(stderr, "error[io]: cannot create {}: {e}", out.display());
        return super::EXIT_RUNTIME;
    }
    if let Err(e) = fs::write(out.join("config.txt"), cfg.to_text()) {
        let _ = writeln!(stderr, "error[io]: {e}");
        return super::EXIT_RUNTIME;
    }
    let stride = cfg.snapshot_stride;
    let mut hook = |n: usize, field: &FieldState, _: &Gradients, f: &DistributionGrid| -> Result<()> {
        if stride > 0 && n % stride == 0 {
            write_level_snapshots(out, n, field, Some(f))?;
        }
        Ok(())
    };
    let (records, code) = match simulate(cfg, &mut hook) {
        Ok(o) => (o.records, super::EXIT_OK),
        Err(fail) => {
            let _ = writeln!(
                stderr,
                "error[{}]: run aborted at step {}: {}\nconfig:\n{}",
                fail.error.class(),
                fail.step,
                fail.error,
                cfg.to_text()
            );
            let code = if matches!(fail.error, Error::Config(_)) { super::EXIT_CONFIG } else { super::EXIT_RUNTIME };
            (fail.records, code)
        }
    };
    if let Err(e) = fs::write(out.join("diagnostics.csv"), diagnostics_csv(&records)) {
        let _ = writeln!(stderr, "error[io]: {e}");
        return super::EXIT_RUNTIME;
    }
    code
}
