//! Run configuration: flat `key = value` text, `#` comments, every key required.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::field_solver::{check_cfl, field_grid, Boundary};
use crate::grid::{Axis, Grid2};
use crate::profiles::{Distribution, Profile};
use crate::retarded_evaluator::ConeQuadrature;
use crate::vlasov_solver::PhaseGrid;

/// Named initial data.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    /// One quartic bump in `x` and `p` at rest, with a matching bump in `phi0`.
    GaussianBump,
    /// Two bumps streaming towards each other along `x1`.
    TwoBump,
    /// No matter; the lowest Dirichlet standing wave of the box.
    VacuumWave,
    /// All data zero.
    Zero,
}

impl Preset {
    pub fn name(self) -> &'static str {
        match self {
            Preset::GaussianBump => "gaussian-bump",
            Preset::TwoBump => "two-bump",
            Preset::VacuumWave => "vacuum-wave",
            Preset::Zero => "zero",
        }
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian-bump" => Ok(Preset::GaussianBump),
            "two-bump" => Ok(Preset::TwoBump),
            "vacuum-wave" => Ok(Preset::VacuumWave),
            "zero" => Ok(Preset::Zero),
            _ => Err(Error::Config(format!("unknown preset `{s}`"))),
        }
    }
}

pub const KEYS: [&str; 20] = [
    "box_half_width",
    "n_x",
    "n_p",
    "dt",
    "t_final",
    "preset",
    "data_amplitude",
    "data_x_radius",
    "data_p_radius",
    "field_amplitude",
    "output_dir",
    "snapshot_stride",
    "history_stride",
    "history_keep_distribution",
    "quad_n_tau",
    "quad_n_theta",
    "quad_n_alpha",
    "verify_order_studies",
    "verify_tolerance_scale",
    "seed",
];

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub box_half_width: f64,
    pub n_x: usize,
    pub n_p: usize,
    pub dt: f64,
    pub t_final: f64,
    pub preset: Preset,
    pub data_amplitude: f64,
    pub data_x_radius: f64,
    pub data_p_radius: f64,
    pub field_amplitude: f64,
    pub output_dir: PathBuf,
    /// Write snapshots every this many steps; 0 disables them.
    pub snapshot_stride: usize,
    pub history_stride: usize,
    pub history_keep_distribution: bool,
    pub quad_n_tau: usize,
    pub quad_n_theta: usize,
    pub quad_n_alpha: usize,
    pub verify_order_studies: bool,
    pub verify_tolerance_scale: f64,
    pub seed: u64,
}

fn parse_value<T: FromStr>(key: &str, raw: &str) -> Result<T> {
    raw.parse().map_err(|_| Error::Config(format!("cannot parse `{raw}` for `{key}`")))
}

fn parse_bool(key: &str, raw: &str) -> Result<bool> {
    match raw {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(Error::Config(format!("cannot parse `{raw}` for `{key}` as a boolean"))),
    }
}

/// Splits `key = value`, ignoring blank lines and `#` comments.
fn split_line(line: &str, lineno: usize) -> Result<Option<(String, String)>> {
    let line = line.split('#').next().unwrap_or("").trim();
    if line.is_empty() {
        return Ok(None);
    }
    let (k, v) = line.split_once('=').ok_or_else(|| Error::Config(format!("line {lineno}: expected `key = value`")))?;
    let (k, v) = (k.trim(), v.trim());
    if k.is_empty() || v.is_empty() {
        return Err(Error::Config(format!("line {lineno}: expected `key = value`")));
    }
    Ok(Some((k.to_string(), v.to_string())))
}

impl RunConfig {
    /// Parses config text, then applies `key=value` overrides, then validates.
    pub fn parse(text: &str, overrides: &[String]) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (n, line) in text.lines().enumerate() {
            if let Some((k, v)) = split_line(line, n + 1)? {
                if !KEYS.contains(&k.as_str()) {
                    return Err(Error::Config(format!("line {}: unknown key `{k}`", n + 1)));
                }
                if map.insert(k.clone(), v).is_some() {
                    return Err(Error::Config(format!("line {}: duplicate key `{k}`", n + 1)));
                }
            }
        }
        for o in overrides {
            let (k, v) = split_line(o, 0)
                .ok()
                .flatten()
                .ok_or_else(|| Error::Config(format!("override `{o}` is not `key=value`")))?;
            if !KEYS.contains(&k.as_str()) {
                return Err(Error::Config(format!("override of unknown key `{k}`")));
            }
            map.insert(k, v);
        }
        let missing: Vec<&str> = KEYS.iter().copied().filter(|k| !map.contains_key(*k)).collect();
        if !missing.is_empty() {
            return Err(Error::Config(format!("missing keys: {}", missing.join(", "))));
        }
        let get = |k: &str| map[k].as_str();
        let cfg = RunConfig {
            box_half_width: parse_value("box_half_width", get("box_half_width"))?,
            n_x: parse_value("n_x", get("n_x"))?,
            n_p: parse_value("n_p", get("n_p"))?,
            dt: parse_value("dt", get("dt"))?,
            t_final: parse_value("t_final", get("t_final"))?,
            preset: get("preset").parse()?,
            data_amplitude: parse_value("data_amplitude", get("data_amplitude"))?,
            data_x_radius: parse_value("data_x_radius", get("data_x_radius"))?,
            data_p_radius: parse_value("data_p_radius", get("data_p_radius"))?,
            field_amplitude: parse_value("field_amplitude", get("field_amplitude"))?,
            output_dir: PathBuf::from(get("output_dir")),
            snapshot_stride: parse_value("snapshot_stride", get("snapshot_stride"))?,
            history_stride: parse_value("history_stride", get("history_stride"))?,
            history_keep_distribution: parse_bool("history_keep_distribution", get("history_keep_distribution"))?,
            quad_n_tau: parse_value("quad_n_tau", get("quad_n_tau"))?,
            quad_n_theta: parse_value("quad_n_theta", get("quad_n_theta"))?,
            quad_n_alpha: parse_value("quad_n_alpha", get("quad_n_alpha"))?,
            verify_order_studies: parse_bool("verify_order_studies", get("verify_order_studies"))?,
            verify_tolerance_scale: parse_value("verify_tolerance_scale", get("verify_tolerance_scale"))?,
            seed: parse_value("seed", get("seed"))?,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// The config as parseable text, keys in canonical order.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let mut put = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        put("box_half_width", self.box_half_width.to_string());
        put("n_x", self.n_x.to_string());
        put("n_p", self.n_p.to_string());
        put("dt", self.dt.to_string());
        put("t_final", self.t_final.to_string());
        put("preset", self.preset.name().to_string());
        put("data_amplitude", self.data_amplitude.to_string());
        put("data_x_radius", self.data_x_radius.to_string());
        put("data_p_radius", self.data_p_radius.to_string());
        put("field_amplitude", self.field_amplitude.to_string());
        put("output_dir", self.output_dir.display().to_string());
        put("snapshot_stride", self.snapshot_stride.to_string());
        put("history_stride", self.history_stride.to_string());
        put("history_keep_distribution", self.history_keep_distribution.to_string());
        put("quad_n_tau", self.quad_n_tau.to_string());
        put("quad_n_theta", self.quad_n_theta.to_string());
        put("quad_n_alpha", self.quad_n_alpha.to_string());
        put("verify_order_studies", self.verify_order_studies.to_string());
        put("verify_tolerance_scale", self.verify_tolerance_scale.to_string());
        put("seed", self.seed.to_string());
        s
    }

    /// Checks the numerical constraints without allocating any grid data.
    pub fn validate(&self) -> Result<()> {
        let cfg = |m: String| Err(Error::Config(m));
        if !(self.box_half_width > 0.0 && self.box_half_width.is_finite()) {
            return cfg(format!("box_half_width = {} must be positive", self.box_half_width));
        }
        if self.n_x < 4 {
            return cfg(format!("n_x = {} must be at least 4", self.n_x));
        }
        if self.n_p < 5 {
            return cfg(format!("n_p = {} must be at least 5", self.n_p));
        }
        if !(self.t_final > 0.0 && self.t_final.is_finite()) {
            return cfg(format!("t_final = {} must be positive", self.t_final));
        }
        check_cfl(self.dt, self.field_grid().h())?;
        if self.steps() < 2 {
            return cfg("the run must take at least two steps".into());
        }
        for (k, v) in [("data_x_radius", self.data_x_radius), ("data_p_radius", self.data_p_radius)] {
            if !(v > 0.0 && v.is_finite()) {
                return cfg(format!("{k} = {v} must be positive"));
            }
        }
        if !(self.data_amplitude >= 0.0 && self.data_amplitude.is_finite()) {
            return cfg(format!("data_amplitude = {} must be nonnegative", self.data_amplitude));
        }
        if !self.field_amplitude.is_finite() {
            return cfg("field_amplitude must be finite".into());
        }
        if self.history_stride == 0 {
            return cfg("history_stride must be at least 1".into());
        }
        if self.quad_n_tau == 0 || self.quad_n_theta == 0 || self.quad_n_alpha == 0 {
            return cfg("quadrature counts must be positive".into());
        }
        if !(self.verify_tolerance_scale > 0.0 && self.verify_tolerance_scale.is_finite()) {
            return cfg("verify_tolerance_scale must be positive".into());
        }
        if self.preset != Preset::VacuumWave {
            let r = self.data_radius();
            let need = r + self.t_final + 1.0;
            if self.box_half_width < need {
                return cfg(format!(
                    "box_half_width = {} is below data radius {r} + t_final {} + 1 = {need}",
                    self.box_half_width, self.t_final
                ));
            }
        }
        Ok(())
    }

    /// Number of steps; the step is shortened to `t_final / steps`.
    pub fn steps(&self) -> usize {
        (self.t_final / self.dt - 1e-9).ceil().max(1.0) as usize
    }

    pub fn effective_dt(&self) -> f64 {
        self.t_final / self.steps() as f64
    }

    pub fn field_grid(&self) -> Grid2 {
        field_grid(self.box_half_width, self.n_x, Boundary::DirichletZero)
    }

    pub fn initial_data(&self) -> InitialData {
        let (a, rx, rp, b) = (self.data_amplitude, self.data_x_radius, self.data_p_radius, self.field_amplitude);
        let field_bump = |amp: f64| if amp == 0.0 { Profile::Zero } else { Profile::Bump { center: [0.0, 0.0], radius: rx, amp } };
        match self.preset {
            Preset::GaussianBump => InitialData {
                f_in: Distribution::Bump { amp: a, x_center: [0.0, 0.0], x_radius: rx, p_center: [0.0, 0.0], p_radius: rp },
                phi0: field_bump(b),
                phi1: Profile::Zero,
            },
            Preset::TwoBump => InitialData {
                f_in: Distribution::Sum(vec![
                    Distribution::Bump { amp: a, x_center: [-0.5 * rx, 0.0], x_radius: 0.5 * rx, p_center: [0.5 * rp, 0.0], p_radius: 0.5 * rp },
                    Distribution::Bump { amp: a, x_center: [0.5 * rx, 0.0], x_radius: 0.5 * rx, p_center: [-0.5 * rp, 0.0], p_radius: 0.5 * rp },
                ]),
                phi0: field_bump(b),
                phi1: Profile::Zero,
            },
            Preset::VacuumWave => InitialData {
                f_in: Distribution::Zero,
                phi0: Profile::BoxMode { amp: b, half_width: self.box_half_width },
                phi1: Profile::Zero,
            },
            Preset::Zero => InitialData { f_in: Distribution::Zero, phi0: Profile::Zero, phi1: Profile::Zero },
        }
    }

    /// Radius of a disc about the origin containing the support of all data.
    pub fn data_radius(&self) -> f64 {
        match self.preset {
            Preset::Zero => 0.0,
            _ => self.data_x_radius,
        }
    }

    /// Momentum box half-width: 1.5 times the initial momentum support radius.
    pub fn momentum_half_width(&self) -> f64 {
        let r0 = self.initial_data().f_in.p_support_radius();
        if r0 > 0.0 {
            1.5 * r0
        } else {
            1.0
        }
    }

    pub fn phase_grid(&self) -> PhaseGrid {
        let w = self.momentum_half_width();
        PhaseGrid { x: self.field_grid().axis, p: Axis::closed(-w, w, self.n_p) }
    }

    pub fn quadrature(&self) -> ConeQuadrature {
        ConeQuadrature::new(self.quad_n_tau, self.quad_n_theta, self.quad_n_alpha)
    }

    /// Period of the vacuum standing wave.
    pub fn vacuum_period(&self) -> f64 {
        2.0 * PI / (PI / (2.0 * self.box_half_width) * 2f64.sqrt())
    }
}

/// Initial distribution and field data.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialData {
    pub f_in: Distribution,
    pub phi0: Profile,
    pub phi1: Profile,
}

/// A valid small configuration, used as a template by tests and examples.
pub fn example_config() -> String {
    "\
# coupled single bump
box_half_width = 3
n_x = 32
n_p = 16
dt = 0.08
t_final = 0.4
preset = gaussian-bump
data_amplitude = 0.05
data_x_radius = 1
data_p_radius = 1
field_amplitude = 0.02
output_dir = out
snapshot_stride = 0
history_stride = 1
history_keep_distribution = true
quad_n_tau = 8
quad_n_theta = 8
quad_n_alpha = 32
verify_order_studies = false
verify_tolerance_scale = 1
seed = 7
"
    .to_string()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn example_parses_and_round_trips() {
        let c = RunConfig::parse(&example_config(), &[]).unwrap();
        assert_eq!(c.preset, Preset::GaussianBump);
        assert_eq!(c.n_x, 32);
        assert_eq!(RunConfig::parse(&c.to_text(), &[]).unwrap(), c);
    }

    #[test]
    fn overrides_apply() {
        let c = RunConfig::parse(&example_config(), &["n_p=20".into(), "preset = two-bump".into()]).unwrap();
        assert_eq!(c.n_p, 20);
        assert_eq!(c.preset, Preset::TwoBump);
    }

    #[test]
    fn rejects_bad_configs() {
        let base = example_config();
        let drop = base.lines().filter(|l| !l.starts_with("seed")).collect::<Vec<_>>().join("\n");
        assert!(matches!(RunConfig::parse(&drop, &[]), Err(Error::Config(m)) if m.contains("seed")));
        assert!(RunConfig::parse(&format!("{base}colour = red\n"), &[]).is_err());
        assert!(RunConfig::parse(&format!("{base}seed = 8\n"), &[]).is_err());
        for o in ["dt=0.2", "box_half_width=2", "preset=plasma", "n_x=abc", "n_x=3", "history_stride=0", "nokey", "t_final=0.05"] {
            assert!(matches!(RunConfig::parse(&base, &[o.into()]), Err(Error::Config(_))), "{o}");
        }
        assert!(RunConfig::parse(&base, &["unknown=1".into()]).is_err());
    }

    #[test]
    fn vacuum_wave_needs_no_margin() {
        let c = RunConfig::parse(&example_config(), &["preset=vacuum-wave".into(), "box_half_width=1".into(), "dt=0.01".into()]).unwrap();
        assert!(c.initial_data().f_in.is_zero());
        assert!((c.vacuum_period() - 2.0 * 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn effective_step_divides_the_run() {
        let c = RunConfig::parse(&example_config(), &["dt=0.07".into()]).unwrap();
        assert_eq!(c.steps(), 6);
        assert!((c.effective_dt() * 6.0 - 0.4).abs() < 1e-15);
        assert_eq!(c.momentum_half_width(), 1.5);
    }
}
