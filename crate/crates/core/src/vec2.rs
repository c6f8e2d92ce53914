//! Plain `[f64; 2]` helpers.

pub type V2 = [f64; 2];

#[inline]
pub fn dot(a: V2, b: V2) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

#[inline]
pub fn norm(a: V2) -> f64 {
    a[0].hypot(a[1])
}

#[inline]
pub fn norm2(a: V2) -> f64 {
    a[0] * a[0] + a[1] * a[1]
}

#[inline]
pub fn add(a: V2, b: V2) -> V2 {
    [a[0] + b[0], a[1] + b[1]]
}

#[inline]
pub fn sub(a: V2, b: V2) -> V2 {
    [a[0] - b[0], a[1] - b[1]]
}

#[inline]
pub fn scale(s: f64, a: V2) -> V2 {
    [s * a[0], s * a[1]]
}

/// `a + s b`
#[inline]
pub fn axpy(a: V2, s: f64, b: V2) -> V2 {
    [a[0] + s * b[0], a[1] + s * b[1]]
}

#[inline]
pub fn is_finite(a: V2) -> bool {
    a[0].is_finite() && a[1].is_finite()
}

#[inline]
pub fn unit(angle: f64) -> V2 {
    let (s, c) = angle.sin_cos();
    [c, s]
}
