//! Stratified random sampling of `(xi, p)` pairs for the kernel property checks.
//!
//! The inequalities on `1 + xi . vhat` are tightest when `|xi| -> 1` with
//! `vhat` antiparallel to `xi`, so three strata are cycled: uniform `|xi|`,
//! `|xi| = 1 - 10^-k`, and near-boundary `|xi|` with an antiparallel momentum.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::TAU;

use crate::vec2::{self, V2};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSample {
    pub xi: V2,
    /// Unit direction of `xi`, also defined when `xi = 0`.
    pub omega: V2,
    pub p: V2,
}

#[derive(Debug, Clone)]
pub struct StratifiedSampler {
    rng: ChaCha8Rng,
    xi_max: f64,
    p_max: f64,
    k_max: u32,
    counter: u64,
}

impl StratifiedSampler {
    /// `xi_max` caps `|xi|`, `p_max` caps `|p|`; `1 - 10^-k` strata use
    /// `k = 1..=k_max`.
    pub fn new(seed: u64, xi_max: f64, p_max: f64, k_max: u32) -> Self {
        StratifiedSampler {
            rng: ChaCha8Rng::seed_from_u64(seed),
            xi_max: xi_max.min(1.0),
            p_max,
            k_max: k_max.max(1),
            counter: 0,
        }
    }

    fn log_uniform_p(&mut self) -> f64 {
        let hi = self.p_max.log10();
        let lo = hi.min(-3.0);
        10f64.powf(self.rng.gen_range(lo..=hi))
    }

    fn boundary_radius(&mut self) -> f64 {
        let k = self.rng.gen_range(1..=self.k_max);
        (1.0 - 10f64.powi(-(k as i32))).min(self.xi_max)
    }

    pub fn next_sample(&mut self) -> KernelSample {
        let stratum = self.counter % 3;
        self.counter += 1;
        let omega = vec2::unit(self.rng.gen_range(0.0..TAU));
        let (r, pdir) = match stratum {
            0 => (self.rng.gen_range(0.0..=self.xi_max), vec2::unit(self.rng.gen_range(0.0..TAU))),
            1 => (self.boundary_radius(), vec2::unit(self.rng.gen_range(0.0..TAU))),
            _ => {
                let r = self.boundary_radius();
                let a = self.rng.gen_range(-1e-3..1e-3) * 10f64.powf(self.rng.gen_range(-3.0..0.0));
                let (s, c) = a.sin_cos();
                let back = [-omega[0], -omega[1]];
                (r, [c * back[0] - s * back[1], s * back[0] + c * back[1]])
            }
        };
        let pm = self.log_uniform_p();
        KernelSample { xi: vec2::scale(r, omega), omega, p: vec2::scale(pm, pdir) }
    }
}

impl Iterator for StratifiedSampler {
    type Item = KernelSample;
    fn next(&mut self) -> Option<KernelSample> {
        Some(self.next_sample())
    }
}
