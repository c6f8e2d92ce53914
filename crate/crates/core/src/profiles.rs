//! Closed-form initial data: scalar profiles for the field and momentum-space
//! bumps for the distribution.

use crate::vec2::{self, V2};

/// Scalar profile on the plane with analytic first and second derivatives.
#[derive(Debug, Clone, PartialEq)]
pub enum Profile {
    Zero,
    Constant(f64),
    /// `amp (1 - |x - center|^2 / radius^2)^4` inside the disc, zero outside.
    Bump { center: V2, radius: f64, amp: f64 },
    /// `amp sin(k . x + phase)`
    Sine { amp: f64, k: V2, phase: f64 },
    /// `amp sin(pi (x1 + l) / 2l) sin(pi (x2 + l) / 2l)`, the lowest Dirichlet
    /// mode of the box `[-l, l]^2`.
    BoxMode { amp: f64, half_width: f64 },
    Sum(Vec<Profile>),
}

impl Profile {
    pub fn value(&self, x: V2) -> f64 {
        self.eval(x).0
    }

    pub fn grad(&self, x: V2) -> V2 {
        self.eval(x).1
    }

    pub fn hessian(&self, x: V2) -> [[f64; 2]; 2] {
        self.eval(x).2
    }

    /// Value, gradient and Hessian.
    pub fn eval(&self, x: V2) -> (f64, V2, [[f64; 2]; 2]) {
        const Z: [[f64; 2]; 2] = [[0.0; 2]; 2];
        match self {
            Profile::Zero => (0.0, [0.0; 2], Z),
            Profile::Constant(c) => (*c, [0.0; 2], Z),
            Profile::Bump { center, radius, amp } => {
                let d = vec2::sub(x, *center);
                let r2 = radius * radius;
                let q = vec2::norm2(d) / r2;
                if q >= 1.0 {
                    return (0.0, [0.0; 2], Z);
                }
                let s = 1.0 - q;
                let val = amp * s.powi(4);
                let g = -8.0 * amp * s.powi(3) / r2;
                let c2 = 48.0 * amp * s * s / (r2 * r2);
                let mut h = Z;
                for i in 0..2 {
                    for j in 0..2 {
                        h[i][j] = c2 * d[i] * d[j] + if i == j { g } else { 0.0 };
                    }
                }
                (val, [g * d[0], g * d[1]], h)
            }
            Profile::Sine { amp, k, phase } => {
                let (s, c) = (vec2::dot(*k, x) + phase).sin_cos();
                (
                    amp * s,
                    [amp * c * k[0], amp * c * k[1]],
                    [
                        [-amp * s * k[0] * k[0], -amp * s * k[0] * k[1]],
                        [-amp * s * k[1] * k[0], -amp * s * k[1] * k[1]],
                    ],
                )
            }
            Profile::BoxMode { amp, half_width } => {
                let k = std::f64::consts::PI / (2.0 * half_width);
                let (s1, c1) = (k * (x[0] + half_width)).sin_cos();
                let (s2, c2) = (k * (x[1] + half_width)).sin_cos();
                (
                    amp * s1 * s2,
                    [amp * k * c1 * s2, amp * k * s1 * c2],
                    [
                        [-amp * k * k * s1 * s2, amp * k * k * c1 * c2],
                        [amp * k * k * c1 * c2, -amp * k * k * s1 * s2],
                    ],
                )
            }
            Profile::Sum(parts) => {
                let mut acc = (0.0, [0.0; 2], Z);
                for p in parts {
                    let (v, g, h) = p.eval(x);
                    acc.0 += v;
                    acc.1 = vec2::add(acc.1, g);
                    for i in 0..2 {
                        for j in 0..2 {
                            acc.2[i][j] += h[i][j];
                        }
                    }
                }
                acc
            }
        }
    }
}

/// Initial distribution: sums of products of quartic bumps in `x` and `p`.
#[derive(Debug, Clone, PartialEq)]
pub enum Distribution {
    Zero,
    Bump { amp: f64, x_center: V2, x_radius: f64, p_center: V2, p_radius: f64 },
    Sum(Vec<Distribution>),
}

fn quartic(d2: f64) -> f64 {
    if d2 >= 1.0 {
        0.0
    } else {
        (1.0 - d2).powi(4)
    }
}

impl Distribution {
    pub fn value(&self, x: V2, p: V2) -> f64 {
        match self {
            Distribution::Zero => 0.0,
            Distribution::Bump { amp, x_center, x_radius, p_center, p_radius } => {
                let qx = vec2::norm2(vec2::sub(x, *x_center)) / (x_radius * x_radius);
                let qp = vec2::norm2(vec2::sub(p, *p_center)) / (p_radius * p_radius);
                amp * quartic(qx) * quartic(qp)
            }
            Distribution::Sum(parts) => parts.iter().map(|d| d.value(x, p)).sum(),
        }
    }

    /// Radius of a centred disc containing the `x`-support.
    pub fn x_support_radius(&self) -> f64 {
        match self {
            Distribution::Zero => 0.0,
            Distribution::Bump { x_center, x_radius, .. } => vec2::norm(*x_center) + x_radius,
            Distribution::Sum(parts) => parts.iter().map(Self::x_support_radius).fold(0.0, f64::max),
        }
    }

    /// Radius of a centred disc containing the `p`-support.
    pub fn p_support_radius(&self) -> f64 {
        match self {
            Distribution::Zero => 0.0,
            Distribution::Bump { p_center, p_radius, .. } => vec2::norm(*p_center) + p_radius,
            Distribution::Sum(parts) => parts.iter().map(Self::p_support_radius).fold(0.0, f64::max),
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Distribution::Zero => true,
            Distribution::Bump { amp, .. } => *amp == 0.0,
            Distribution::Sum(parts) => parts.iter().all(Self::is_zero),
        }
    }
}
