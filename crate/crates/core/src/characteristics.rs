//! Characteristic curves of the Vlasov equation,
//! `dX/ds = P^`, `dP/ds = -F(s, X, P)`, with
//! `F = S(phi) p + grad phi / sqrt(1 + |p|^2)` and `S = d_t + p^ . grad`.
//!
//! Along these curves `e^{-3 phi} f` is constant and
//! `d/ds (e^{2 phi} |P|^2) = -2 e^{2 phi} P^ . grad phi`.

use std::io::Write;

use crate::error::{Error, Result};
use crate::grid::Grid2;
use crate::phase_geometry::Momentum2;
use crate::vec2::{self, dot, V2};

/// Point on a characteristic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CharState {
    pub s: f64,
    pub x: V2,
    pub p: V2,
}

/// Field values at one space-time point.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FieldSample {
    pub phi: f64,
    pub phi_t: f64,
    pub grad: V2,
}

/// Read-only access to `(phi, d_t phi, grad phi)` at arbitrary `(s, x)`.
pub trait FieldSampler: Sync {
    fn sample(&self, s: f64, x: V2) -> Result<FieldSample>;

    /// Potential alone. Grid samplers may interpolate it more accurately than
    /// the derivatives.
    fn potential(&self, s: f64, x: V2) -> Result<f64> {
        Ok(self.sample(s, x)?.phi)
    }
}

/// `phi = 0`.
#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroField;

impl FieldSampler for ZeroField {
    fn sample(&self, _s: f64, _x: V2) -> Result<FieldSample> {
        Ok(FieldSample::default())
    }
}

/// `phi = alpha s`, uniform in space.
#[derive(Debug, Clone, Copy)]
pub struct UniformRamp {
    pub alpha: f64,
}

impl FieldSampler for UniformRamp {
    fn sample(&self, s: f64, _x: V2) -> Result<FieldSample> {
        Ok(FieldSample { phi: self.alpha * s, phi_t: self.alpha, grad: [0.0; 2] })
    }
}

/// Closed-form field given by a closure.
pub struct AnalyticField<F>(pub F);

impl<F> FieldSampler for AnalyticField<F>
where
    F: Fn(f64, V2) -> FieldSample + Sync,
{
    fn sample(&self, s: f64, x: V2) -> Result<FieldSample> {
        Ok((self.0)(s, x))
    }
}

/// Field values on a grid at one time level.
#[derive(Debug, Clone, Copy)]
pub struct FieldLevel<'a> {
    pub t: f64,
    pub phi: &'a [f64],
    pub phi_t: &'a [f64],
    pub phi_x1: &'a [f64],
    pub phi_x2: &'a [f64],
}

/// Grid field between two stored levels: bilinear in space, linear in time.
/// The potential alone is interpolated bicubically, because it enters the
/// transport law through `exp(3 phi)` rather than through the trajectory.
#[derive(Debug, Clone)]
pub struct GridFieldSampler<'a> {
    pub grid: Grid2,
    pub levels: [FieldLevel<'a>; 2],
    /// Per node: `phi, phi_t, phi_x1, phi_x2` of the first level followed by
    /// their increments to the second, so one stencil read serves a sample.
    packed: Vec<[f64; 8]>,
}

impl<'a> GridFieldSampler<'a> {
    pub fn new(grid: Grid2, a: FieldLevel<'a>, b: FieldLevel<'a>) -> Self {
        let packed = (0..grid.len())
            .map(|k| {
                let (u, v) = ([a.phi[k], a.phi_t[k], a.phi_x1[k], a.phi_x2[k]], [b.phi[k], b.phi_t[k], b.phi_x1[k], b.phi_x2[k]]);
                [u[0], u[1], u[2], u[3], v[0] - u[0], v[1] - u[1], v[2] - u[2], v[3] - u[3]]
            })
            .collect();
        GridFieldSampler { grid, levels: [a, b], packed }
    }

    /// Frozen field: the same level at all times.
    pub fn frozen(grid: Grid2, a: FieldLevel<'a>) -> Self {
        Self::new(grid, a, a)
    }

    #[inline]
    fn time_weight(&self, s: f64, x: V2) -> Result<f64> {
        let (t0, t1) = (self.levels[0].t, self.levels[1].t);
        if t1 == t0 {
            return Ok(0.0);
        }
        let tol = 1e-9 * (t1 - t0).abs();
        if s < t0.min(t1) - tol || s > t0.max(t1) + tol {
            return Err(Error::OutsideSampler { s, x });
        }
        Ok(((s - t0) / (t1 - t0)).clamp(0.0, 1.0))
    }
}

impl FieldSampler for GridFieldSampler<'_> {
    fn sample(&self, s: f64, x: V2) -> Result<FieldSample> {
        let lam = self.time_weight(s, x)?;
        let (k, w) = self.grid.bilinear_stencil(x).ok_or(Error::OutsideSampler { s, x })?;
        let mut v = [0.0; 4];
        for (&k, &w) in k.iter().zip(&w) {
            let n = &self.packed[k];
            for c in 0..4 {
                v[c] += w * (n[c] + lam * n[c + 4]);
            }
        }
        Ok(FieldSample { phi: v[0], phi_t: v[1], grad: [v[2], v[3]] })
    }

    fn potential(&self, s: f64, x: V2) -> Result<f64> {
        let lam = self.time_weight(s, x)?;
        let out = || Error::OutsideSampler { s, x };
        let u = self.grid.bicubic(self.levels[0].phi, x).ok_or_else(out)?;
        if lam == 0.0 {
            return Ok(u);
        }
        let v = self.grid.bicubic(self.levels[1].phi, x).ok_or_else(out)?;
        Ok((1.0 - lam) * u + lam * v)
    }
}

/// `S(phi)` for a particle of momentum `m`.
#[inline]
pub fn s_phi(fs: &FieldSample, m: &Momentum2) -> f64 {
    fs.phi_t + dot(m.vhat, fs.grad)
}

/// `F = S(phi) p + grad phi / gamma`.
#[inline]
pub fn force(fs: &FieldSample, m: &Momentum2) -> V2 {
    let s = s_phi(fs, m);
    [s * m.p[0] + fs.grad[0] / m.gamma, s * m.p[1] + fs.grad[1] / m.gamma]
}

#[inline]
fn rhs_from_sample(fs: &FieldSample, p: V2) -> (V2, V2) {
    let m = Momentum2::new_unchecked(p);
    let f = force(fs, &m);
    (m.vhat, [-f[0], -f[1]])
}

/// Right-hand side `(dX/ds, dP/ds)` at `state`.
pub fn char_rhs(state: &CharState, field: &dyn FieldSampler) -> Result<(V2, V2)> {
    let fs = field.sample(state.s, state.x)?;
    if !(fs.phi.is_finite() && fs.phi_t.is_finite() && vec2::is_finite(fs.grad)) {
        return Err(Error::Numeric { what: "field sample".into(), s: state.s, x: state.x });
    }
    Ok(rhs_from_sample(&fs, state.p))
}

/// One classical fourth-order Runge-Kutta step of signed size `h`.
#[inline]
pub fn rk4_step<S: FieldSampler + ?Sized>(state: &CharState, h: f64, field: &S) -> Result<CharState> {
    let eval = |s: f64, x: V2, p: V2| -> Result<(V2, V2)> {
        let fs = field.sample(s, x)?;
        Ok(rhs_from_sample(&fs, p))
    };
    let CharState { s, x, p } = *state;
    let (k1x, k1p) = eval(s, x, p)?;
    let (k2x, k2p) = eval(s + 0.5 * h, vec2::axpy(x, 0.5 * h, k1x), vec2::axpy(p, 0.5 * h, k1p))?;
    let (k3x, k3p) = eval(s + 0.5 * h, vec2::axpy(x, 0.5 * h, k2x), vec2::axpy(p, 0.5 * h, k2p))?;
    let (k4x, k4p) = eval(s + h, vec2::axpy(x, h, k3x), vec2::axpy(p, h, k3p))?;
    let c = h / 6.0;
    let nx = [
        x[0] + c * (k1x[0] + 2.0 * k2x[0] + 2.0 * k3x[0] + k4x[0]),
        x[1] + c * (k1x[1] + 2.0 * k2x[1] + 2.0 * k3x[1] + k4x[1]),
    ];
    let np = [
        p[0] + c * (k1p[0] + 2.0 * k2p[0] + 2.0 * k3p[0] + k4p[0]),
        p[1] + c * (k1p[1] + 2.0 * k2p[1] + 2.0 * k3p[1] + k4p[1]),
    ];
    if !(vec2::is_finite(nx) && vec2::is_finite(np)) {
        return Err(Error::Numeric { what: "characteristic state".into(), s, x });
    }
    Ok(CharState { s: s + h, x: nx, p: np })
}

/// Integrates from `init` (at `s = from`) to `to` with fixed steps of size
/// `dt` and a final partial step, so the last state sits exactly at `to`.
/// Backward integration (`to < from`) is allowed.
pub fn integrate(from: f64, to: f64, init: CharState, field: &dyn FieldSampler, dt: f64) -> Result<Vec<CharState>> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidArgument(format!("step {dt} must be positive")));
    }
    if !(from.is_finite() && to.is_finite()) {
        return Err(Error::InvalidArgument("non-finite integration bounds".into()));
    }
    let span = to - from;
    let dir = span.signum();
    let full = ((span.abs() / dt) * (1.0 - 1e-12)).floor() as usize;
    let mut traj = Vec::with_capacity(full + 2);
    let mut cur = CharState { s: from, ..init };
    traj.push(cur);
    let lift = |e: Error, c: &CharState| match e {
        Error::OutsideSampler { .. } => Error::OutOfDomain { s: c.s, x: c.x, p: c.p },
        other => other,
    };
    for k in 0..full {
        let mut next = rk4_step(&cur, dir * dt, field).map_err(|e| lift(e, &cur))?;
        next.s = from + dir * dt * (k + 1) as f64;
        cur = next;
        traj.push(cur);
    }
    let rest = to - cur.s;
    if rest != 0.0 {
        let mut next = rk4_step(&cur, rest, field).map_err(|e| lift(e, &cur))?;
        next.s = to;
        traj.push(next);
    }
    Ok(traj)
}

/// `f(t, x, p) = f_in(X(0), P(0)) exp(3 phi(t, x) - 3 phi_0(X(0)))` for a
/// trajectory with one end at `s = 0`.
pub fn transported_density(
    traj: &[CharState],
    f_in: &dyn Fn(V2, V2) -> f64,
    phi0: &dyn Fn(V2) -> f64,
    phi_now: f64,
) -> Result<f64> {
    let anchor = match (traj.first(), traj.last()) {
        (Some(a), _) if a.s == 0.0 => a,
        (_, Some(b)) if b.s == 0.0 => b,
        _ => return Err(Error::InvalidArgument("trajectory is not anchored at s = 0".into())),
    };
    let v = f_in(anchor.x, anchor.p);
    if v == 0.0 {
        return Ok(0.0);
    }
    Ok(v * (3.0 * (phi_now - phi0(anchor.x))).exp())
}

/// Derivative at the middle node of three, exact for quadratics on uneven
/// spacing.
fn three_point_derivative(s: [f64; 3], q: [f64; 3]) -> f64 {
    let h1 = s[1] - s[0];
    let h2 = s[2] - s[1];
    (-h2 / (h1 * (h1 + h2))) * q[0] + ((h2 - h1) / (h1 * h2)) * q[1] + (h1 / (h2 * (h1 + h2))) * q[2]
}

/// Max over interior nodes of `|d/ds(e^{2 phi}|P|^2) + 2 e^{2 phi} P^ . grad phi|`,
/// the derivative taken by three-point differences.
pub fn conformal_momentum_residual(traj: &[CharState], field: &dyn FieldSampler) -> Result<f64> {
    if traj.len() < 3 {
        return Err(Error::InvalidArgument("need at least three states".into()));
    }
    let mut q = Vec::with_capacity(traj.len());
    let mut samples = Vec::with_capacity(traj.len());
    for st in traj {
        let fs = field.sample(st.s, st.x)?;
        q.push((2.0 * fs.phi).exp() * vec2::norm2(st.p));
        samples.push(fs);
    }
    let mut worst: f64 = 0.0;
    for j in 1..traj.len() - 1 {
        let dq = three_point_derivative([traj[j - 1].s, traj[j].s, traj[j + 1].s], [q[j - 1], q[j], q[j + 1]]);
        let m = Momentum2::new_unchecked(traj[j].p);
        let law = -2.0 * (2.0 * samples[j].phi).exp() * dot(m.vhat, samples[j].grad);
        worst = worst.max((dq - law).abs());
    }
    Ok(worst)
}

/// Centered-difference `div_p F` at momentum `p` with step `h`, field fixed.
pub fn momentum_divergence_fd(fs: &FieldSample, p: V2, h: f64) -> f64 {
    let f = |q: V2| force(fs, &Momentum2::new_unchecked(q));
    let d1 = (f([p[0] + h, p[1]])[0] - f([p[0] - h, p[1]])[0]) / (2.0 * h);
    let d2 = (f([p[0], p[1] + h])[1] - f([p[0], p[1] - h])[1]) / (2.0 * h);
    d1 + d2
}

/// Writes `s,X1,X2,P1,P2,phi,conserved_check`; the last column is `check`
/// applied to each state and its field sample.
pub fn write_trajectory_csv<W: Write>(
    mut w: W,
    traj: &[CharState],
    field: &dyn FieldSampler,
    check: &dyn Fn(&CharState, &FieldSample) -> f64,
) -> Result<()> {
    writeln!(w, "s,X1,X2,P1,P2,phi,conserved_check")?;
    for st in traj {
        let fs = field.sample(st.s, st.x)?;
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            st.s, st.x[0], st.x[1], st.p[0], st.p[1], fs.phi, check(st, &fs)
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn wavy() -> AnalyticField<impl Fn(f64, V2) -> FieldSample + Sync> {
        AnalyticField(|s: f64, x: V2| {
            let a = 0.3 * (x[0] + 0.5 * x[1] - 0.4 * s).sin();
            let c = 0.3 * (x[0] + 0.5 * x[1] - 0.4 * s).cos();
            FieldSample { phi: a, phi_t: -0.4 * c, grad: [c, 0.5 * c] }
        })
    }

    #[test]
    fn rhs_examples() {
        let st = CharState { s: 0.0, x: [0.1, 0.2], p: [0.6, -0.8] };
        let (dx, dp) = char_rhs(&st, &ZeroField).unwrap();
        assert_eq!(dp, [0.0, 0.0]);
        assert!((dx[0] - 0.6 / 2f64.sqrt()).abs() < 1e-15);
        let (_, dp) = char_rhs(&st, &UniformRamp { alpha: 0.7 }).unwrap();
        assert!((dp[0] + 0.7 * 0.6).abs() < 1e-15 && (dp[1] - 0.7 * 0.8).abs() < 1e-15);
        let g = AnalyticField(|_s: f64, _x: V2| FieldSample { phi: 0.0, phi_t: 0.4, grad: [0.3, -0.2] });
        let st0 = CharState { p: [0.0, 0.0], ..st };
        let (_, dp) = char_rhs(&st0, &g).unwrap();
        assert_eq!(dp, [-0.3, 0.2]);
        let bad = AnalyticField(|_s: f64, _x: V2| FieldSample { phi: f64::NAN, ..Default::default() });
        assert!(matches!(char_rhs(&st, &bad), Err(Error::Numeric { .. })));
    }

    #[test]
    fn free_streaming_is_exact() {
        let init = CharState { s: 0.0, x: [0.3, -0.1], p: [1.5, 0.4] };
        let traj = integrate(0.0, 1.3, init, &ZeroField, 0.1).unwrap();
        let last = traj.last().unwrap();
        assert_eq!(last.s, 1.3);
        let v = Momentum2::new_unchecked(init.p).vhat;
        assert!((last.x[0] - (0.3 + 1.3 * v[0])).abs() < 1e-14);
        assert!((last.x[1] - (-0.1 + 1.3 * v[1])).abs() < 1e-14);
        assert_eq!(last.p, init.p);
    }

    #[test]
    fn ramp_decay_is_fourth_order() {
        let alpha = 0.8;
        let init = CharState { s: 0.0, x: [0.0, 0.0], p: [2.0, 1.0] };
        let exact = vec2::norm(init.p) * (-alpha * 2.0f64).exp();
        let err = |dt: f64| {
            let t = integrate(0.0, 2.0, init, &UniformRamp { alpha }, dt).unwrap();
            (vec2::norm(t.last().unwrap().p) - exact).abs()
        };
        let order = (err(0.2) / err(0.1)).log2();
        assert!(order > 3.7 && order < 4.3, "order {order}");
    }

    #[test]
    fn round_trip_returns_to_start() {
        let f = wavy();
        let init = CharState { s: 0.0, x: [0.2, 0.1], p: [0.5, -1.0] };
        let mut errs = Vec::new();
        for dt in [0.2, 0.1] {
            let fwd = integrate(0.0, 1.0, init, &f, dt).unwrap();
            let back = integrate(1.0, 0.0, *fwd.last().unwrap(), &f, dt).unwrap();
            let e = back.last().unwrap();
            assert_eq!(e.s, 0.0);
            errs.push(vec2::norm(vec2::sub(e.x, init.x)) + vec2::norm(vec2::sub(e.p, init.p)));
        }
        assert!(errs[1] < errs[0] / 10.0, "{errs:?}");
    }

    #[test]
    fn partial_final_step_and_bad_step() {
        let init = CharState { s: 0.0, x: [0.0, 0.0], p: [0.0, 0.0] };
        let t = integrate(0.0, 0.25, init, &ZeroField, 0.1).unwrap();
        assert_eq!(t.len(), 4);
        assert_eq!(t.last().unwrap().s, 0.25);
        assert!(integrate(0.0, 1.0, init, &ZeroField, 0.0).is_err());
    }

    #[test]
    fn out_of_domain_carries_state() {
        struct Boxed;
        impl FieldSampler for Boxed {
            fn sample(&self, s: f64, x: V2) -> Result<FieldSample> {
                if x[0].abs() > 1.0 {
                    Err(Error::OutsideSampler { s, x })
                } else {
                    Ok(FieldSample::default())
                }
            }
        }
        let init = CharState { s: 0.0, x: [0.0, 0.0], p: [10.0, 0.0] };
        match integrate(0.0, 5.0, init, &Boxed, 0.1) {
            Err(Error::OutOfDomain { x, .. }) => assert!(x[0] <= 1.0 && x[0] > 0.8),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn transported_density_cases() {
        let init = CharState { s: 1.0, x: [0.1, 0.0], p: [0.3, 0.0] };
        let traj = integrate(1.0, 0.0, init, &ZeroField, 0.1).unwrap();
        let f_in = |x: V2, p: V2| (-(vec2::norm2(x) + vec2::norm2(p))).exp();
        let v = transported_density(&traj, &f_in, &|_| 0.0, 0.0).unwrap();
        let a = traj.last().unwrap();
        assert_eq!(v, f_in(a.x, a.p));
        assert_eq!(transported_density(&traj, &|_, _| 0.0, &|_| 0.0, 0.0).unwrap(), 0.0);
        assert!(transported_density(&traj[1..traj.len() - 1], &f_in, &|_| 0.0, 0.0).is_err());
    }

    #[test]
    fn conformal_residual_cases() {
        let init = CharState { s: 0.0, x: [0.0, 0.0], p: [0.9, 0.4] };
        let t = integrate(0.0, 1.0, init, &ZeroField, 0.1).unwrap();
        assert!(conformal_momentum_residual(&t, &ZeroField).unwrap() < 1e-14);
        let ramp = UniformRamp { alpha: 0.5 };
        let r = |dt| conformal_momentum_residual(&integrate(0.0, 1.0, init, &ramp, dt).unwrap(), &ramp).unwrap();
        assert!(r(0.05) < r(0.1));
        let f = wavy();
        let r = |dt| conformal_momentum_residual(&integrate(0.0, 1.0, init, &f, dt).unwrap(), &f).unwrap();
        let order = (r(0.1) / r(0.05)).log2();
        assert!(order > 1.7, "order {order}");
        assert!(conformal_momentum_residual(&t[..2], &ZeroField).is_err());
    }

    #[test]
    fn trajectory_csv_has_header_and_rows() {
        let init = CharState { s: 0.0, x: [0.0, 0.0], p: [0.9, 0.4] };
        let t = integrate(0.0, 0.3, init, &ZeroField, 0.1).unwrap();
        let mut buf = Vec::new();
        write_trajectory_csv(&mut buf, &t, &ZeroField, &|st, _| vec2::norm2(st.p)).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("s,X1,X2,P1,P2,phi,conserved_check\n"));
        assert_eq!(text.lines().count(), t.len() + 1);
    }

    #[test]
    fn grid_sampler_interpolates_in_space_and_time() {
        use crate::grid::Axis;
        let g = Grid2::new(Axis::closed(-1.0, 1.0, 21));
        let lin = |t: f64| g.sample(|x| 1.0 + 2.0 * x[0] - x[1] + t);
        let (p0, p1) = (lin(0.0), lin(0.5));
        let ones = vec![1.0; g.len()];
        let (gx, gy) = (vec![2.0; g.len()], vec![-1.0; g.len()]);
        let a = FieldLevel { t: 0.0, phi: &p0, phi_t: &ones, phi_x1: &gx, phi_x2: &gy };
        let b = FieldLevel { t: 0.5, phi: &p1, ..a };
        let s = GridFieldSampler::new(g, a, b);
        let fs = s.sample(0.2, [0.33, -0.41]).unwrap();
        assert!((fs.phi - (1.0 + 0.66 + 0.41 + 0.2)).abs() < 1e-13);
        assert!((s.potential(0.2, [0.33, -0.41]).unwrap() - fs.phi).abs() < 1e-13);
        assert_eq!(fs.grad, [2.0, -1.0]);
        assert!(matches!(s.sample(0.7, [0.0, 0.0]), Err(Error::OutsideSampler { .. })));
        assert!(matches!(s.sample(0.2, [1.5, 0.0]), Err(Error::OutsideSampler { .. })));
    }

    proptest! {
        #[test]
        fn steps_are_subluminal(p in prop::array::uniform2(-50.0f64..50.0), dt in 0.01f64..0.5) {
            let f = wavy();
            let init = CharState { s: 0.0, x: [0.0, 0.0], p };
            let traj = integrate(0.0, 2.0, init, &f, dt).unwrap();
            for w in traj.windows(2) {
                let step = (w[1].s - w[0].s).abs();
                prop_assert!(vec2::norm(vec2::sub(w[1].x, w[0].x)) <= step * (1.0 + 1e-12));
            }
        }

        #[test]
        fn divergence_of_force(p in prop::array::uniform2(-3.0f64..3.0)) {
            let fs = FieldSample { phi: 0.1, phi_t: -0.3, grad: [0.7, 0.2] };
            let m = Momentum2::new_unchecked(p);
            let e1 = (momentum_divergence_fd(&fs, p, 1e-2) - 2.0 * s_phi(&fs, &m)).abs();
            let e2 = (momentum_divergence_fd(&fs, p, 5e-3) - 2.0 * s_phi(&fs, &m)).abs();
            prop_assert!(e1 < 1e-3);
            prop_assert!(e2 <= e1 / 3.0 || e1 < 1e-10);
        }
    }
}
