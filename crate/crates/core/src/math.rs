//! Scalar helpers shared across modules.

use alloc::vec;
use alloc::vec::Vec;

pub use libm::{cosh, exp, fabs as abs, log, pow, sin, cos, sqrt, tgamma};

/// The focusing nonlinearity `f(u) = |u|^{p-1} u` and its potential
/// `F(u) = |u|^{p+1}/(p+1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Nonlinearity {
    pub p: f64,
}

/// `x^e` for `x >= 0`, by repeated multiplication when `e` is a small
/// non-negative integer.
#[inline]
fn abs_pow(x: f64, e: f64) -> f64 {
    if (0.0..=16.0).contains(&e) && e == libm::trunc(e) {
        let mut n = e as u32;
        let (mut base, mut acc) = (x, 1.0);
        while n > 0 {
            if n & 1 == 1 {
                acc *= base;
            }
            base *= base;
            n >>= 1;
        }
        acc
    } else {
        pow(x, e)
    }
}

impl Nonlinearity {
    pub fn new(p: f64) -> Self {
        Self { p }
    }

    #[inline]
    pub fn f(&self, u: f64) -> f64 {
        if u == 0.0 {
            return 0.0;
        }
        abs_pow(abs(u), self.p - 1.0) * u
    }

    /// `F(u) = |u|^{p+1}/(p+1)`.
    #[inline]
    pub fn potential(&self, u: f64) -> f64 {
        abs_pow(abs(u), self.p + 1.0) / (self.p + 1.0)
    }

    /// `f'(u) = p |u|^{p-1}`.
    #[inline]
    pub fn df(&self, u: f64) -> f64 {
        if u == 0.0 {
            return 0.0;
        }
        self.p * abs_pow(abs(u), self.p - 1.0)
    }

    /// `f''(u) = p (p-1) |u|^{p-3} u`.
    #[inline]
    pub fn d2f(&self, u: f64) -> f64 {
        if u == 0.0 {
            return 0.0;
        }
        self.p * (self.p - 1.0) * abs_pow(abs(u), self.p - 3.0) * u
    }

    /// `f'''(u) = p (p-1) (p-2) |u|^{p-3}`.
    #[inline]
    pub fn d3f(&self, u: f64) -> f64 {
        if u == 0.0 {
            return 0.0;
        }
        self.p * (self.p - 1.0) * (self.p - 2.0) * abs_pow(abs(u), self.p - 3.0)
    }

    /// Divided difference `[F(x) - F(y)] / (x - y)` together with its
    /// derivative in `x`.
    ///
    /// When `|x - y|` is small relative to the midpoint the quotient loses
    /// digits to cancellation, so the midpoint expansion
    /// `f(m) + f''(m) δ²/24` is used instead.
    pub fn divided_difference(&self, x: f64, y: f64) -> (f64, f64) {
        let delta = x - y;
        let mid = 0.5 * (x + y);
        if abs(delta) <= 1e-3 * abs(mid) || delta == 0.0 {
            let d2 = self.d2f(mid);
            let value = self.f(mid) + d2 * delta * delta / 24.0;
            let dx = 0.5 * self.df(mid) + d2 * delta / 12.0 + self.d3f(mid) * delta * delta / 48.0;
            (value, dx)
        } else {
            let value = (self.potential(x) - self.potential(y)) / delta;
            (value, (self.f(x) - value) / delta)
        }
    }
}

/// Surface area of the unit sphere `S^{d-1} ⊂ ℝ^d` (so `2` for `d = 1`).
pub fn sphere_area(d: usize) -> f64 {
    let half = d as f64 / 2.0;
    2.0 * pow(core::f64::consts::PI, half) / tgamma(half)
}

/// Fornberg finite-difference weights at `x0` from `nodes`; entry `[m][j]`
/// multiplies the value at `nodes[j]` in the `m`-th derivative.
pub fn fd_weights(x0: f64, nodes: &[f64], order: usize) -> Vec<Vec<f64>> {
    let n = nodes.len();
    let mut c = vec![vec![0.0f64; n]; order + 1];
    let mut c1 = 1.0;
    let mut c4 = nodes[0] - x0;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(order);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = nodes[i] - x0;
        for j in 0..i {
            let c3 = nodes[i] - nodes[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[k][i] = c1 * (k as f64 * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
                }
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
            }
            for k in (1..=mn).rev() {
                c[k][j] = (c4 * c[k][j] - k as f64 * c[k - 1][j]) / c3;
            }
            c[0][j] = c4 * c[0][j] / c3;
        }
        c1 = c2;
    }
    c
}

/// Trapezoid rule on a uniform grid.
pub fn trapezoid(values: &[f64], h: f64) -> f64 {
    match values.len() {
        0 | 1 => 0.0,
        n => {
            let inner: f64 = values[1..n - 1].iter().sum();
            h * (inner + 0.5 * (values[0] + values[n - 1]))
        }
    }
}

/// Least-squares line `y ≈ a + b x`; returns `(a, b)`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (xi, yi) in x.iter().zip(y) {
        sxx += (xi - mx) * (xi - mx);
        sxy += (xi - mx) * (yi - my);
    }
    let b = sxy / sxx;
    (my - b * mx, b)
}

/// Solve a small dense system in place by Gaussian elimination with partial
/// pivoting. Returns `None` for a (numerically) singular matrix.
pub fn solve_dense(a: &mut [f64], b: &mut [f64], n: usize) -> Option<()> {
    for col in 0..n {
        let mut piv = col;
        for row in col + 1..n {
            if abs(a[row * n + col]) > abs(a[piv * n + col]) {
                piv = row;
            }
        }
        if a[piv * n + col] == 0.0 {
            return None;
        }
        if piv != col {
            for k in 0..n {
                a.swap(col * n + k, piv * n + k);
            }
            b.swap(col, piv);
        }
        let d = a[col * n + col];
        for row in col + 1..n {
            let factor = a[row * n + col] / d;
            if factor != 0.0 {
                for k in col..n {
                    a[row * n + k] -= factor * a[col * n + k];
                }
                b[row] -= factor * b[col];
            }
        }
    }
    for row in (0..n).rev() {
        let mut s = b[row];
        for k in row + 1..n {
            s -= a[row * n + k] * b[k];
        }
        b[row] = s / a[row * n + row];
    }
    Some(())
}

/// Spectral condition number of a small symmetric positive semi-definite
/// matrix, estimated with cyclic Jacobi rotations.
pub fn symmetric_condition(a: &[f64], n: usize) -> f64 {
    let mut m = a.to_vec();
    for _sweep in 0..60 {
        let mut off = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    off += m[i * n + j] * m[i * n + j];
                }
            }
        }
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[p * n + q];
                if abs(apq) < 1e-300 {
                    continue;
                }
                let theta = (m[q * n + q] - m[p * n + p]) / (2.0 * apq);
                let t = theta.signum() / (abs(theta) + sqrt(theta * theta + 1.0));
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / sqrt(t * t + 1.0);
                let s = t * c;
                for k in 0..n {
                    let mkp = m[k * n + p];
                    let mkq = m[k * n + q];
                    m[k * n + p] = c * mkp - s * mkq;
                    m[k * n + q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[p * n + k];
                    let mqk = m[q * n + k];
                    m[p * n + k] = c * mpk - s * mqk;
                    m[q * n + k] = s * mpk + c * mqk;
                }
            }
        }
    }
    let mut lo = f64::INFINITY;
    let mut hi = 0.0f64;
    for i in 0..n {
        let e = abs(m[i * n + i]);
        lo = lo.min(e);
        hi = hi.max(e);
    }
    if lo == 0.0 {
        f64::INFINITY
    } else {
        hi / lo
    }
}
