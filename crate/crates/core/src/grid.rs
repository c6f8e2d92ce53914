//! Uniform one- and two-dimensional grids with interpolation.

use crate::vec2::V2;

/// Uniform axis. A closed axis has nodes at both ends of `[lo, lo + (n-1) h]`;
/// a periodic axis has `n` nodes over one period `n h`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Axis {
    pub lo: f64,
    pub h: f64,
    pub n: usize,
    pub periodic: bool,
}

impl Axis {
    pub fn closed(lo: f64, hi: f64, n: usize) -> Self {
        assert!(n >= 2 && hi > lo);
        Axis { lo, h: (hi - lo) / (n - 1) as f64, n, periodic: false }
    }

    pub fn periodic(lo: f64, period: f64, n: usize) -> Self {
        assert!(n >= 1 && period > 0.0);
        Axis { lo, h: period / n as f64, n, periodic: true }
    }

    #[inline]
    pub fn node(&self, i: usize) -> f64 {
        self.lo + i as f64 * self.h
    }

    /// Last node of a closed axis; end of the period for a periodic one.
    pub fn hi(&self) -> f64 {
        if self.periodic {
            self.lo + self.n as f64 * self.h
        } else {
            self.node(self.n - 1)
        }
    }

    #[inline]
    pub fn contains(&self, x: f64) -> bool {
        self.periodic || (x >= self.lo - 1e-12 * self.h && x <= self.hi() + 1e-12 * self.h)
    }

    /// Cell index `floor((x - lo) / h)` and offset in `[0, 1)`, unclamped.
    #[inline]
    pub fn cell(&self, x: f64) -> (isize, f64) {
        let s = (x - self.lo) / self.h;
        let i = s.floor();
        (i as isize, s - i)
    }

    /// Maps an integer node index onto the axis: wraps when periodic,
    /// `None` when outside a closed axis.
    #[inline]
    pub fn wrap(&self, i: isize) -> Option<usize> {
        let n = self.n as isize;
        if self.periodic {
            Some(i.rem_euclid(n) as usize)
        } else if (0..n).contains(&i) {
            Some(i as usize)
        } else {
            None
        }
    }

    /// Trapezoid weight of node `i`.
    #[inline]
    pub fn weight(&self, i: usize) -> f64 {
        if !self.periodic && (i == 0 || i + 1 == self.n) {
            0.5 * self.h
        } else {
            self.h
        }
    }
}

/// Lagrange weights for nodes `0, 1, 2, 3` evaluated at `u`.
#[inline]
pub fn cubic_weights(u: f64) -> [f64; 4] {
    let (a, b, c, d) = (u, u - 1.0, u - 2.0, u - 3.0);
    [-b * c * d / 6.0, a * c * d / 2.0, -a * b * d / 2.0, a * b * c / 6.0]
}

/// Square grid `axis x axis`, row-major with the second index fastest.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid2 {
    pub axis: Axis,
}

impl Grid2 {
    pub fn new(axis: Axis) -> Self {
        Grid2 { axis }
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.axis.n
    }

    #[inline]
    pub fn h(&self) -> f64 {
        self.axis.h
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.axis.n * self.axis.n
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        i * self.axis.n + j
    }

    #[inline]
    pub fn node(&self, i: usize, j: usize) -> V2 {
        [self.axis.node(i), self.axis.node(j)]
    }

    #[inline]
    pub fn contains(&self, x: V2) -> bool {
        self.axis.contains(x[0]) && self.axis.contains(x[1])
    }

    pub fn sample(&self, f: impl Fn(V2) -> f64) -> Vec<f64> {
        let n = self.n();
        let mut out = Vec::with_capacity(self.len());
        for i in 0..n {
            for j in 0..n {
                out.push(f(self.node(i, j)));
            }
        }
        out
    }

    /// Trapezoid integral of grid data over the box (one period if periodic).
    pub fn integrate(&self, data: &[f64]) -> f64 {
        let n = self.n();
        let mut total = 0.0;
        for i in 0..n {
            let wi = self.axis.weight(i);
            let mut row = 0.0;
            for j in 0..n {
                row += self.axis.weight(j) * data[i * n + j];
            }
            total += wi * row;
        }
        total
    }

    /// Corner indices and bilinear weights for `x`; `None` outside a closed grid.
    #[inline]
    pub fn bilinear_stencil(&self, x: V2) -> Option<([usize; 4], [f64; 4])> {
        if !self.contains(x) {
            return None;
        }
        let a = &self.axis;
        let (mut i, mut u) = a.cell(x[0]);
        let (mut j, mut v) = a.cell(x[1]);
        if !a.periodic {
            let last = a.n as isize - 2;
            if i > last {
                u += (i - last) as f64;
                i = last;
            }
            if j > last {
                v += (j - last) as f64;
                j = last;
            }
            if i < 0 {
                u += i as f64;
                i = 0;
            }
            if j < 0 {
                v += j as f64;
                j = 0;
            }
        }
        let i0 = a.wrap(i)?;
        let i1 = a.wrap(i + 1)?;
        let j0 = a.wrap(j)?;
        let j1 = a.wrap(j + 1)?;
        let n = a.n;
        Some((
            [i0 * n + j0, i0 * n + j1, i1 * n + j0, i1 * n + j1],
            [(1.0 - u) * (1.0 - v), (1.0 - u) * v, u * (1.0 - v), u * v],
        ))
    }

    pub fn bilinear(&self, data: &[f64], x: V2) -> Option<f64> {
        let (k, w) = self.bilinear_stencil(x)?;
        Some(w[0] * data[k[0]] + w[1] * data[k[1]] + w[2] * data[k[2]] + w[3] * data[k[3]])
    }

    /// Four-point stencil start and Lagrange weights along one axis. On a
    /// closed axis the stencil is shifted inward near the ends.
    #[inline]
    fn cubic_axis(&self, x: f64) -> ([usize; 4], [f64; 4]) {
        let a = &self.axis;
        let (i, u) = a.cell(x);
        if a.periodic {
            let idx = [0, 1, 2, 3].map(|k| a.wrap(i - 1 + k).unwrap());
            return (idx, cubic_weights(u + 1.0));
        }
        let start = (i - 1).clamp(0, a.n as isize - 4);
        let local = (x - a.node(start as usize)) / a.h;
        let s = start as usize;
        ([s, s + 1, s + 2, s + 3], cubic_weights(local))
    }

    /// Tensor-product cubic Lagrange interpolation; needs `n >= 4`.
    pub fn bicubic(&self, data: &[f64], x: V2) -> Option<f64> {
        if !self.contains(x) || self.n() < 4 {
            return None;
        }
        let (ii, wi) = self.cubic_axis(x[0]);
        let (jj, wj) = self.cubic_axis(x[1]);
        let n = self.n();
        let mut s = 0.0;
        for a in 0..4 {
            let row = ii[a] * n;
            let mut r = 0.0;
            for b in 0..4 {
                r += wj[b] * data[row + jj[b]];
            }
            s += wi[a] * r;
        }
        Some(s)
    }
}
