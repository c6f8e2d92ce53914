//! Relativistic momentum, light-cone coordinates and the integral kernels of the
//! field representations.
//!
//! Everything here is a pure function of its arguments. The cone variable is
//! `xi = (y - x) / (t - tau)` with `|xi| <= 1`, and the recurring denominator is
//! `D = 1 + xi . vhat`, which stays strictly positive because `|vhat| < 1`.

use std::ops::{Add, Div, Mul, Neg, Sub};

use twofloat::TwoFloat;

use crate::error::{Error, Result};
use crate::vec2::{self, dot, norm2, V2};

/// Slack allowed on `|xi| <= 1` for points produced by `sin(theta) * omega`.
const XI_SLACK: f64 = 8.0 * f64::EPSILON;

/// Below this value `D` is recomputed from a cancellation-free form.
const SMALL_DENOMINATOR: f64 = 1e-6;

/// Momentum with derived Lorentz factor and velocity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Momentum2 {
    pub p: V2,
    pub gamma: f64,
    pub vhat: V2,
}

impl Momentum2 {
    /// Same as [`relativize`] for inputs already known to be finite.
    #[inline]
    pub fn new_unchecked(p: V2) -> Self {
        let gamma = (1.0 + norm2(p)).sqrt();
        Momentum2 { p, gamma, vhat: [p[0] / gamma, p[1] / gamma] }
    }
}

pub fn relativize(p: V2) -> Result<Momentum2> {
    if !vec2::is_finite(p) {
        return Err(Error::InvalidArgument(format!("non-finite momentum {p:?}")));
    }
    Ok(Momentum2::new_unchecked(p))
}

/// `v1 w2 - v2 w1`
#[inline]
pub fn wedge(v: V2, w: V2) -> f64 {
    v[0] * w[1] - v[1] * w[0]
}

/// `(-w2, w1)`
#[inline]
pub fn perp(w: V2) -> V2 {
    [-w[1], w[0]]
}

/// Backward light-cone direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConeCoordinate {
    pub xi: V2,
    pub omega: V2,
    pub omega_perp: V2,
}

impl ConeCoordinate {
    /// Builds the coordinate from `xi`, taking `omega = xi / |xi|`.
    /// `xi = 0` is rejected because the direction is undefined there.
    pub fn new(xi: V2) -> Result<Self> {
        check_xi(xi)?;
        let r = vec2::norm(xi);
        if r == 0.0 {
            return Err(Error::Domain("omega is undefined at xi = 0".into()));
        }
        let omega = [xi[0] / r, xi[1] / r];
        Ok(ConeCoordinate { xi, omega, omega_perp: perp(omega) })
    }

    /// `xi = s * omega` for a unit `omega` and `0 <= s <= 1`. The direction is
    /// kept even when `s = 0`.
    pub fn from_polar(s: f64, omega: V2) -> Result<Self> {
        if !(s.is_finite() && (0.0..=1.0 + XI_SLACK).contains(&s)) {
            return Err(Error::Domain(format!("cone radius {s} outside [0, 1]")));
        }
        if !vec2::is_finite(omega) || (norm2(omega) - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidArgument(format!("omega {omega:?} is not a unit vector")));
        }
        Ok(ConeCoordinate { xi: [s * omega[0], s * omega[1]], omega, omega_perp: perp(omega) })
    }

    #[inline]
    pub fn xi_norm(&self) -> f64 {
        vec2::norm(self.xi)
    }
}

fn check_xi(xi: V2) -> Result<()> {
    if !vec2::is_finite(xi) {
        return Err(Error::InvalidArgument(format!("non-finite xi {xi:?}")));
    }
    if norm2(xi) > 1.0 + XI_SLACK {
        return Err(Error::Domain(format!("|xi| = {} exceeds 1", vec2::norm(xi))));
    }
    Ok(())
}

/// Scalar arithmetic shared by the `f64` kernels and their double-double
/// counterparts used to check the kernel identities below `f64` rounding.
pub trait Real:
    Copy + PartialOrd + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Div<Output = Self> + Neg<Output = Self>
{
    fn of(x: f64) -> Self;
    fn sqrt(self) -> Self;
    fn to_f64(self) -> f64;
}

impl Real for f64 {
    #[inline]
    fn of(x: f64) -> Self {
        x
    }
    #[inline]
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    #[inline]
    fn to_f64(self) -> f64 {
        self
    }
}

impl Real for TwoFloat {
    fn of(x: f64) -> Self {
        TwoFloat::from(x)
    }
    fn sqrt(self) -> Self {
        TwoFloat::sqrt(self)
    }
    fn to_f64(self) -> f64 {
        self.into()
    }
}

#[inline]
fn dot_in<R: Real>(a: [R; 2], b: [R; 2]) -> R {
    a[0] * b[0] + a[1] * b[1]
}

/// `(gamma, vhat)` of `p` in the scalar type `R`.
#[inline]
pub fn momentum_in<R: Real>(p: [R; 2]) -> (R, [R; 2]) {
    let g = (R::of(1.0) + dot_in(p, p)).sqrt();
    (g, [p[0] / g, p[1] / g])
}

/// `D = 1 + xi . vhat`.
///
/// Near the degenerate direction (vhat nearly antiparallel to a unit xi) the
/// direct sum cancels. There we use
/// `gamma D (gamma - xi.p) = 1 + |p|^2 (1 - |xi|^2) + (xi ^ p)^2`,
/// whose right side is a sum of nonnegative terms.
#[inline]
pub fn cone_denominator(xi: V2, m: &Momentum2) -> f64 {
    cone_denominator_in(xi, m.p, m.gamma, m.vhat)
}

#[inline]
pub fn cone_denominator_in<R: Real>(xi: [R; 2], p: [R; 2], gamma: R, vhat: [R; 2]) -> R {
    let one = R::of(1.0);
    let d = one + dot_in(xi, vhat);
    if d >= R::of(SMALL_DENOMINATOR) {
        return d;
    }
    let xp = dot_in(xi, p);
    let w = xi[0] * p[1] - xi[1] * p[0];
    let rest = one - dot_in(xi, xi);
    let rest = if rest > R::of(0.0) { rest } else { R::of(0.0) };
    let num = one + dot_in(p, p) * rest + w * w;
    num / (gamma * (gamma - xp))
}

/// Kernels of the two-dimensional Vlasov-Maxwell field representation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VMKernelSet<R = f64> {
    pub et: [R; 2],
    pub es: [R; 2],
    pub bt: R,
    pub bs: R,
}

pub fn eval_vm_kernels(xi: &ConeCoordinate, m: &Momentum2) -> Result<VMKernelSet> {
    check_xi(xi.xi)?;
    Ok(vm_kernels_in(xi.xi, m.p, m.gamma, m.vhat))
}

pub fn vm_kernels_in<R: Real>(x: [R; 2], p: [R; 2], gamma: R, vhat: [R; 2]) -> VMKernelSet<R> {
    let d = cone_denominator_in(x, p, gamma, vhat);
    let g2 = R::of(1.0) + dot_in(p, p);
    let w = [x[0] + vhat[0], x[1] + vhat[1]];
    let cross = x[0] * vhat[1] - x[1] * vhat[0];
    let t_den = g2 * d * d;
    VMKernelSet { et: [w[0] / t_den, w[1] / t_den], es: [w[0] / d, w[1] / d], bt: cross / t_den, bs: cross / d }
}

/// Kernels of the retarded representations of `d_t phi`, `d_x1 phi` and
/// `d_x2 phi`.
///
/// Index `i` of `a_x`, `b_x`, `c_x` selects the `x_{i+1}` representation;
/// `c_x[i]` is a 2-vector contracted with `grad phi`.
///
/// The `x2` set follows from the `d_x2` row of the operator split (see
/// [`operator_coefficients`]): with the roles of the two axes exchanged the `x1` numerator
/// `(xi1 + vhat1) - vhat2 (xi1 vhat2 - xi2 vhat1)` becomes
/// `(xi2 + vhat2) - vhat1 (xi2 vhat1 - xi1 vhat2)`, so
/// `a_x2 = gamma (et2 + vhat1 bt)`, and as for `x1` the `b`, `c` kernels pick up
/// the factor `xi2`.
///
/// `b_t_extra` is the part of the `S(phi)` weight that the momentum integration
/// by parts produces on top of `b_t`:
/// `(|p|^2 - (xi.p)^2) / (gamma^3 D^2)`. The representation uses
/// `b + b_extra`; see `retarded_evaluator`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldKernelSet<R = f64> {
    pub a_t: R,
    pub b_t: R,
    pub c_t: [R; 2],
    pub a_x: [R; 2],
    pub b_x: [R; 2],
    pub c_x: [[R; 2]; 2],
    pub b_t_extra: R,
    pub b_x_extra: [R; 2],
}

pub fn eval_field_kernels(xi: &ConeCoordinate, m: &Momentum2) -> Result<FieldKernelSet> {
    check_xi(xi.xi)?;
    Ok(field_kernels_unchecked(xi.xi, m))
}

/// Kernel evaluation without argument checks, for hot quadrature loops.
#[inline]
pub fn field_kernels_unchecked(x: V2, m: &Momentum2) -> FieldKernelSet {
    field_kernels_in(x, m.p, m.gamma, m.vhat)
}

#[inline]
pub fn field_kernels_in<R: Real>(x: [R; 2], p: [R; 2], g: R, v: [R; 2]) -> FieldKernelSet<R> {
    let d = cone_denominator_in(x, p, g, v);
    let d2 = d * d;
    let w = [x[0] + v[0], x[1] + v[1]];
    let cross = x[0] * v[1] - x[1] * v[0];
    let g_d2 = g * d2;
    let g3_d2 = g * g * g_d2;

    let a_t = dot_in(v, w) / g_d2;
    let b_t = R::of(1.0) / g;
    let c_t = [w[0] / g3_d2, w[1] / g3_d2];
    let a_x1 = (w[0] - v[1] * cross) / g_d2;
    let a_x2 = (w[1] + v[0] * cross) / g_d2;
    let xp = dot_in(x, p);
    let b_t_extra = (dot_in(p, p) - xp * xp) / g3_d2;

    FieldKernelSet {
        a_t,
        b_t,
        c_t,
        a_x: [a_x1, a_x2],
        b_x: [x[0] / g, x[1] / g],
        c_x: [
            [x[0] * w[0] / g3_d2, x[0] * w[1] / g3_d2],
            [x[1] * w[0] / g3_d2, x[1] * w[1] / g3_d2],
        ],
        b_t_extra,
        b_x_extra: [x[0] * b_t_extra, x[1] * b_t_extra],
    }
}

/// Which coordinate derivative to decompose or represent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Derivative {
    T,
    X1,
    X2,
}

impl Derivative {
    pub const ALL: [Derivative; 3] = [Derivative::T, Derivative::X1, Derivative::X2];

    pub fn name(self) -> &'static str {
        match self {
            Derivative::T => "t",
            Derivative::X1 => "x1",
            Derivative::X2 => "x2",
        }
    }
}

/// Coordinate derivative written as `coef_s S + sqrt(1 - |xi|^2) coef_t . (T1, T2)`
/// with `S = d_t + vhat . grad` and `T_k = (d_k - xi_k d_t) / sqrt(1 - |xi|^2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivativeDecomposition {
    pub coef_s: f64,
    pub coef_t: V2,
}

pub fn operator_coefficients(
    which: Derivative,
    xi: &ConeCoordinate,
    m: &Momentum2,
) -> Result<DerivativeDecomposition> {
    check_xi(xi.xi)?;
    let x = xi.xi;
    if norm2(x) >= 1.0 {
        return Err(Error::Domain("T_k is singular at |xi| = 1".into()));
    }
    let v = m.vhat;
    let d = cone_denominator(x, m);
    let (s, t) = match which {
        Derivative::T => (1.0, [-v[0], -v[1]]),
        Derivative::X1 => (x[0], [1.0 + x[1] * v[1], -x[0] * v[1]]),
        Derivative::X2 => (x[1], [-x[1] * v[0], 1.0 + x[0] * v[0]]),
    };
    Ok(DerivativeDecomposition { coef_s: s / d, coef_t: [t[0] / d, t[1] / d] })
}

/// `S g` from the space-time gradient of `g`.
#[inline]
pub fn s_operator(g_t: f64, g_x: V2, m: &Momentum2) -> f64 {
    g_t + dot(m.vhat, g_x)
}

/// `(T1 g, T2 g)` from the space-time gradient of `g`. Requires `|xi| < 1`.
#[inline]
pub fn t_operators(g_t: f64, g_x: V2, xi: V2) -> V2 {
    let q = (1.0 - norm2(xi)).sqrt();
    [(g_x[0] - xi[0] * g_t) / q, (g_x[1] - xi[1] * g_t) / q]
}

impl DerivativeDecomposition {
    /// Applies the decomposition to given values of `S g` and `(T1 g, T2 g)`.
    pub fn apply(&self, s_g: f64, t_g: V2, xi: V2) -> f64 {
        let q = (1.0 - norm2(xi)).sqrt();
        self.coef_s * s_g + q * dot(self.coef_t, t_g)
    }
}

/// `F_i(g, h) = xi_i D^2 (g + vhat . h) + xi_i (xi + vhat) . h / (1 + |p|^2)`.
pub fn script_f(i: usize, xi: V2, m: &Momentum2, g: f64, h: V2) -> f64 {
    let d = cone_denominator(xi, m);
    let w = vec2::add(xi, m.vhat);
    xi[i] * d * d * (g + dot(m.vhat, h)) + xi[i] * dot(w, h) / (1.0 + norm2(m.p))
}

/// Coefficients of `F_i` in the orthogonal basis `(0, omega_perp)`,
/// `(1, omega)`, `(-1, omega)` of `R x R^2`.
pub fn decompose_f(i: usize, xi: &ConeCoordinate, m: &Momentum2) -> Result<(f64, f64, f64)> {
    if i > 1 {
        return Err(Error::InvalidArgument(format!("component index {i} out of range")));
    }
    check_xi(xi.xi)?;
    if norm2(xi.xi) == 0.0 {
        return Err(Error::Domain("omega is undefined at xi = 0".into()));
    }
    let a1 = script_f(i, xi.xi, m, 0.0, xi.omega_perp);
    let a2 = 0.5 * script_f(i, xi.xi, m, 1.0, xi.omega);
    let a3 = 0.5 * script_f(i, xi.xi, m, -1.0, xi.omega);
    Ok((a1, a2, a3))
}

/// Reassembles `F_i(g, h)` from its basis coefficients.
pub fn recompose_f(coeffs: (f64, f64, f64), omega: V2, g: f64, h: V2) -> f64 {
    let (a1, a2, a3) = coeffs;
    let op = perp(omega);
    a1 * dot(op, h) + a2 * (g + dot(omega, h)) + a3 * (-g + dot(omega, h))
}

/// `2 D - 1 / (1 + |p|^2)`; nonnegative on the admissible domain.
pub fn inverse_energy_margin(xi: V2, m: &Momentum2) -> f64 {
    2.0 * cone_denominator(xi, m) - 1.0 / (1.0 + norm2(m.p))
}

/// `2 D - (vhat ^ omega)^2`; nonnegative on the admissible domain.
pub fn transverse_velocity_margin(xi: V2, omega: V2, m: &Momentum2) -> f64 {
    let w = wedge(m.vhat, omega);
    2.0 * cone_denominator(xi, m) - w * w
}

/// Residual of `gamma D = gamma + xi . p`, both sides evaluated directly.
pub fn denominator_identity_residual(xi: V2, m: &Momentum2) -> f64 {
    let lhs = m.gamma * (1.0 + dot(xi, m.vhat));
    let rhs = m.gamma + dot(xi, m.p);
    (lhs - rhs).abs() / m.gamma
}

/// `(|a_t| + |a_xi|) D^{3/2} (1 + |p|^2) / (1 + |p|)`, the a-kernel size
/// relative to its expected envelope.
pub fn a_kernel_envelope_ratio(i: usize, xi: V2, m: &Momentum2) -> f64 {
    let k = field_kernels_unchecked(xi, m);
    let d = cone_denominator(xi, m);
    (k.a_t.abs() + k.a_x[i].abs()) * d.powf(1.5) * (1.0 + norm2(m.p)) / (1.0 + vec2::norm(m.p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn relativize_examples() {
        let m = relativize([0.0, 0.0]).unwrap();
        assert_eq!(m.gamma, 1.0);
        assert_eq!(m.vhat, [0.0, 0.0]);
        let m = relativize([3.0, 0.0]).unwrap();
        assert!(close(m.gamma, 10f64.sqrt(), 1e-15));
        assert!(close(m.vhat[0], 3.0 / 10f64.sqrt(), 1e-15));
        let m = relativize([3.0, 4.0]).unwrap();
        assert!(close(m.gamma * m.gamma - 25.0, 1.0, 1e-13));
        assert!(relativize([f64::NAN, 0.0]).is_err());
    }

    #[test]
    fn wedge_examples() {
        assert_eq!(wedge([1.0, 0.0], [0.0, 1.0]), 1.0);
        assert_eq!(wedge([2.0, 1.0], [3.0, 5.0]), 7.0);
        assert_eq!(wedge([0.3, -1.7], [0.3, -1.7]), 0.0);
    }

    #[test]
    fn vm_kernels_examples() {
        let m0 = relativize([0.0, 0.0]).unwrap();
        let k = eval_vm_kernels(&ConeCoordinate::from_polar(0.0, [1.0, 0.0]).unwrap(), &m0).unwrap();
        assert_eq!(k.et, [0.0, 0.0]);
        assert_eq!(k.es, [0.0, 0.0]);
        assert_eq!(k.bt, 0.0);
        let k = eval_vm_kernels(&ConeCoordinate::new([0.5, 0.0]).unwrap(), &m0).unwrap();
        assert!(close(k.et[0], 0.5, 1e-15) && close(k.es[0], 0.5, 1e-15));
        assert_eq!(k.bt, 0.0);
        assert_eq!(k.bs, 0.0);
    }

    #[test]
    fn field_kernels_at_rest() {
        let m0 = relativize([0.0, 0.0]).unwrap();
        let c = ConeCoordinate::new([0.3, -0.4]).unwrap();
        let k = eval_field_kernels(&c, &m0).unwrap();
        assert_eq!(k.a_t, 0.0);
        assert_eq!(k.b_t, 1.0);
        assert!(close(k.c_t[0], 0.3, 1e-15) && close(k.c_t[1], -0.4, 1e-15));
    }

    #[test]
    fn cone_coordinate_rejects_bad_input() {
        assert!(matches!(ConeCoordinate::new([0.0, 0.0]), Err(Error::Domain(_))));
        assert!(matches!(ConeCoordinate::new([0.8, 0.8]), Err(Error::Domain(_))));
        let bad = ConeCoordinate { xi: [1.5, 0.0], omega: [1.0, 0.0], omega_perp: [0.0, 1.0] };
        let m = relativize([0.1, 0.2]).unwrap();
        assert!(eval_vm_kernels(&bad, &m).is_err());
        assert!(eval_field_kernels(&bad, &m).is_err());
        assert!(decompose_f(0, &ConeCoordinate::from_polar(0.0, [1.0, 0.0]).unwrap(), &m).is_err());
    }

    #[test]
    fn operator_coefficients_examples() {
        let m = relativize([0.7, -0.2]).unwrap();
        let c = ConeCoordinate::from_polar(0.0, [1.0, 0.0]).unwrap();
        let d = operator_coefficients(Derivative::T, &c, &m).unwrap();
        assert!(close(d.coef_s, 1.0, 1e-15));
        assert!(close(d.coef_t[0], -m.vhat[0], 1e-15) && close(d.coef_t[1], -m.vhat[1], 1e-15));
        let m0 = relativize([0.0, 0.0]).unwrap();
        let c = ConeCoordinate::new([0.3, 0.5]).unwrap();
        let d = operator_coefficients(Derivative::X1, &c, &m0).unwrap();
        assert!(close(d.coef_s, 0.3, 1e-15));
        assert_eq!(d.coef_t, [1.0, 0.0]);
        let edge = ConeCoordinate::new([1.0, 0.0]).unwrap();
        assert!(operator_coefficients(Derivative::T, &edge, &m).is_err());
    }

    #[test]
    fn operator_rows_reproduce_gradient() {
        // Any space-time gradient must be reproduced exactly by the three rows.
        let m = relativize([1.3, -0.6]).unwrap();
        let c = ConeCoordinate::new([-0.35, 0.52]).unwrap();
        let (gt, gx) = (0.7, [-1.1, 2.3]);
        let s = s_operator(gt, gx, &m);
        let t = t_operators(gt, gx, c.xi);
        let want = [gt, gx[0], gx[1]];
        for (k, w) in Derivative::ALL.iter().zip(want) {
            let d = operator_coefficients(*k, &c, &m).unwrap();
            assert!(close(d.apply(s, t, c.xi), w, 1e-13), "{k:?}");
        }
    }

    #[test]
    fn stable_denominator_matches_direct_form() {
        let m = relativize([-40.0, 0.0]).unwrap();
        let xi = [1.0 - 1e-7, 0.0];
        let direct = 1.0 + dot(xi, m.vhat);
        let stable = cone_denominator(xi, &m);
        assert!(stable > 0.0);
        assert!((direct - stable).abs() < 1e-9);
        // Exact value for this configuration: (gamma - |p| (1 - 1e-7)) / gamma.
        let exact = (m.gamma - 40.0 * (1.0 - 1e-7)) / m.gamma;
        assert!(((stable - exact) / exact).abs() < 1e-9);
    }

    #[test]
    fn envelope_ratio_is_bounded() {
        let m = relativize([-300.0, 10.0]).unwrap();
        let c = ConeCoordinate::new([0.99999, -0.0001]).unwrap();
        assert!(a_kernel_envelope_ratio(0, c.xi, &m) < 3.0);
    }

    fn xi_strategy() -> impl Strategy<Value = V2> {
        (0.0f64..1.0, 0.0f64..std::f64::consts::TAU).prop_map(|(r, a)| vec2::scale(r, vec2::unit(a)))
    }

    fn p_strategy() -> impl Strategy<Value = V2> {
        (-3.0f64..3.0, 0.0f64..std::f64::consts::TAU)
            .prop_map(|(l, a)| vec2::scale(10f64.powf(l), vec2::unit(a)))
    }

    proptest! {
        #[test]
        fn momentum_invariants(p in p_strategy()) {
            let m = relativize(p).unwrap();
            prop_assert!(vec2::norm(m.vhat) < 1.0);
            prop_assert!(m.gamma >= 1.0);
            prop_assert!(((m.gamma * m.gamma - norm2(p)) - 1.0).abs() <= 1e-15 * m.gamma * m.gamma);
        }

        #[test]
        fn denominator_positive(xi in xi_strategy(), p in p_strategy()) {
            let m = relativize(p).unwrap();
            prop_assert!(cone_denominator(xi, &m) > 0.0);
        }

        #[test]
        fn orthogonal_basis_identities(a in 0.0f64..6.3, z in prop::array::uniform2(-5.0f64..5.0)) {
            let w = vec2::unit(a);
            let wp = perp(w);
            let back = vec2::add(vec2::scale(dot(w, z), w), vec2::scale(wedge(w, z), wp));
            prop_assert!((back[0] - z[0]).abs() < 1e-13 && (back[1] - z[1]).abs() < 1e-13);
            prop_assert!((dot(z, wp) - wedge(w, z)).abs() < 1e-13);
            prop_assert!((wedge(z, wp) - dot(w, z)).abs() < 1e-13);
        }

        #[test]
        fn kernel_cross_identities(xi in xi_strategy(), p in p_strategy()) {
            let m = relativize(p).unwrap();
            let c = ConeCoordinate::from_polar(vec2::norm(xi), if vec2::norm(xi) > 0.0 { vec2::scale(1.0 / vec2::norm(xi), xi) } else { [1.0, 0.0] }).unwrap();
            let vm = eval_vm_kernels(&c, &m).unwrap();
            let k = eval_field_kernels(&c, &m).unwrap();
            let scale = 1.0 + k.a_t.abs() + k.a_x[0].abs() + k.a_x[1].abs();
            prop_assert!((vm.bt * (1.0 + norm2(p)) * cone_denominator(c.xi, &m) - vm.bs).abs() <= 1e-12 * (1.0 + vm.bs.abs()));
            prop_assert!((k.a_t - dot(p, vm.et)).abs() <= 1e-12 * scale);
            prop_assert!((k.a_x[0] - m.gamma * (vm.et[0] - m.vhat[1] * vm.bt)).abs() <= 1e-12 * scale);
            prop_assert!((k.a_x[1] - m.gamma * (vm.et[1] + m.vhat[0] * vm.bt)).abs() <= 1e-12 * scale);
            for i in 0..2 {
                prop_assert!((k.b_x[i] - c.xi[i] * k.b_t).abs() <= 1e-15);
                prop_assert!((k.c_x[i][0] - c.xi[i] * k.c_t[0]).abs() <= 1e-12 * (1.0 + k.c_t[0].abs()));
                prop_assert!((k.c_x[i][1] - c.xi[i] * k.c_t[1]).abs() <= 1e-12 * (1.0 + k.c_t[1].abs()));
            }
        }

        #[test]
        fn script_f_reconstruction(xi in xi_strategy(), p in p_strategy(), g in -3.0f64..3.0, h in prop::array::uniform2(-3.0f64..3.0)) {
            prop_assume!(vec2::norm(xi) > 1e-9);
            let m = relativize(p).unwrap();
            let c = ConeCoordinate::new(xi).unwrap();
            for i in 0..2 {
                let co = decompose_f(i, &c, &m).unwrap();
                let direct = script_f(i, xi, &m, g, h);
                let back = recompose_f(co, c.omega, g, h);
                prop_assert!((direct - back).abs() <= 1e-12 * (1.0 + direct.abs()));
                let k = eval_field_kernels(&c, &m).unwrap();
                let d = cone_denominator(xi, &m);
                let lhs = k.b_x[i] * (g + dot(m.vhat, h)) + dot(k.c_x[i], h);
                let rhs = direct / (m.gamma * d * d);
                prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()));
            }
        }

        #[test]
        fn inequality_margins(xi in xi_strategy(), p in p_strategy()) {
            prop_assume!(vec2::norm(xi) > 0.0);
            let m = relativize(p).unwrap();
            let c = ConeCoordinate::new(xi).unwrap();
            prop_assert!(inverse_energy_margin(xi, &m) >= 0.0);
            prop_assert!(transverse_velocity_margin(xi, c.omega, &m) >= -1e-15);
            prop_assert!(denominator_identity_residual(xi, &m) <= 1e-14 * (1.0 + vec2::norm(p)));
        }
    }
}
