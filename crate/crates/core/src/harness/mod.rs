//! Command-line orchestration: configuration, the coupled run, the property
//! suite and probing.

pub mod config;
pub mod probe;
pub mod run;
pub mod verify;

use std::fs;
use std::io::Write;
use std::path::Path;

pub use config::{Preset, RunConfig};
pub use run::{simulate, DiagnosticsRecord, RunFailure, RunOutput};

use crate::error::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

/// Reads and parses a config file with overrides.
pub fn load_config(path: &Path, overrides: &[String]) -> Result<RunConfig, Error> {
    let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    RunConfig::parse(&text, overrides)
}

/// `verify`: prints one line per property; nonzero exit if any fails.
pub fn verify_command(cfg: &RunConfig, stdout: &mut dyn Write) -> i32 {
    let checks = verify::run_suite(cfg);
    for c in &checks {
        let _ = writeln!(stdout, "{c}");
    }
    let failed = checks.iter().filter(|c| !c.pass).count();
    let _ = writeln!(stdout, "{} of {} properties passed", checks.len() - failed, checks.len());
    if failed == 0 {
        EXIT_OK
    } else {
        EXIT_FAILED
    }
}

/// `probe`: runs the configuration, then writes `probe.csv` into `out`.
/// Rows that cannot be evaluated carry an error class and make the exit code
/// nonzero.
pub fn probe_command(cfg: &RunConfig, points_text: &str, out: &Path, stderr: &mut dyn Write) -> i32 {
    let points = match probe::parse_points(points_text) {
        Ok(p) => p,
        Err(e) => {
            let _ = writeln!(stderr, "error[{}]: {e}", e.class());
            return EXIT_CONFIG;
        }
    };
    let output = match simulate(cfg, &mut |_, _, _, _| Ok(())) {
        Ok(o) => o,
        Err(fail) => {
            let _ = writeln!(stderr, "error[{}]: run aborted at step {}: {}", fail.error.class(), fail.step, fail.error);
            return if matches!(fail.error, Error::Config(_)) { EXIT_CONFIG } else { EXIT_RUNTIME };
        }
    };
    let h = 0.5 * cfg.field_grid().h();
    let rows = probe::probe_all(&output.history, &points, &cfg.quadrature(), h);
    let write = fs::create_dir_all(out).and_then(|_| fs::write(out.join("probe.csv"), probe::probe_csv(&rows)));
    if let Err(e) = write {
        let _ = writeln!(stderr, "error[io]: {e}");
        return EXIT_RUNTIME;
    }
    let bad = rows.iter().filter(|r| !r.is_ok()).count();
    if bad > 0 {
        let _ = writeln!(stderr, "error[probe]: {bad} of {} points could not be evaluated", rows.len());
        return EXIT_RUNTIME;
    }
    EXIT_OK
}
