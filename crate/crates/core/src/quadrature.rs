//! One-dimensional quadrature rules.

use std::f64::consts::PI;

/// Nodes and weights of a rule on a fixed interval.
#[derive(Debug, Clone, PartialEq)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate(&self, mut f: impl FnMut(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }
}

/// `(P_n(z), P_n'(z))` from the three-term recurrence.
fn legendre(n: usize, z: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, 0.0);
    for j in 0..n {
        let p2 = p1;
        p1 = p0;
        p0 = ((2 * j + 1) as f64 * z * p1 - j as f64 * p2) / (j + 1) as f64;
    }
    (p0, n as f64 * (z * p0 - p1) / (z * z - 1.0))
}

/// Gauss-Legendre nodes and weights on `[-1, 1]` by Newton iteration.
pub fn gauss_legendre(n: usize) -> Rule {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre(n, z);
            let dz = p / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp) = legendre(n, z);
        let w = 2.0 / ((1.0 - z * z) * dp * dp);
        nodes[i] = -z;
        nodes[n - 1 - i] = z;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    Rule { nodes, weights }
}

/// Composite Gauss-Legendre rule with `panels` equal panels of `order` points
/// on `[a, b]`.
pub fn composite_gauss(a: f64, b: f64, panels: usize, order: usize) -> Rule {
    let base = gauss_legendre(order);
    let h = (b - a) / panels as f64;
    let mut nodes = Vec::with_capacity(panels * order);
    let mut weights = Vec::with_capacity(panels * order);
    for k in 0..panels {
        let lo = a + k as f64 * h;
        for (x, w) in base.nodes.iter().zip(&base.weights) {
            nodes.push(lo + 0.5 * h * (x + 1.0));
            weights.push(0.5 * h * w);
        }
    }
    Rule { nodes, weights }
}

/// Trapezoid rule for a `period`-periodic integrand over one period, with
/// `n` equispaced nodes starting at `offset`.
pub fn periodic_trapezoid(period: f64, n: usize, offset: f64) -> Rule {
    let h = period / n as f64;
    Rule {
        nodes: (0..n).map(|k| offset + k as f64 * h).collect(),
        weights: vec![h; n],
    }
}

/// `int_0^pi dtheta / (1 - a cos theta)` for `|a| < 1`, by the trapezoid rule.
/// The integrand extends to a smooth even periodic function, so the rule
/// converges geometrically.
pub fn angular_integral(a: f64, n: usize) -> f64 {
    let h = PI / n as f64;
    let mut s = 0.5 * (1.0 / (1.0 - a) + 1.0 / (1.0 + a));
    for k in 1..n {
        s += 1.0 / (1.0 - a * (k as f64 * h).cos());
    }
    s * h
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        for n in 1..12 {
            let r = gauss_legendre(n);
            assert!((r.weights.iter().sum::<f64>() - 2.0).abs() < 1e-14);
            for deg in 0..(2 * n) {
                let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
                let q = r.integrate(|x| x.powi(deg as i32));
                assert!((q - exact).abs() < 1e-13, "n={n} deg={deg}");
            }
        }
    }

    #[test]
    fn composite_rule_on_interval() {
        let r = composite_gauss(0.0, PI / 2.0, 3, 4);
        assert!((r.integrate(f64::sin) - 1.0).abs() < 1e-10);
        assert_eq!(r.len(), 12);
    }

    #[test]
    fn periodic_trapezoid_is_spectral() {
        let r = periodic_trapezoid(2.0 * PI, 16, 0.0);
        assert!((r.integrate(|a| a.cos().powi(2)) - PI).abs() < 1e-14);
    }

    #[test]
    fn angular_integral_closed_form() {
        for a in [0.0f64, 0.5, 0.9, 0.99] {
            let exact = PI / (1.0 - a * a).sqrt();
            assert!(((angular_integral(a, 400) - exact) / exact).abs() < 1e-12);
        }
    }
}
