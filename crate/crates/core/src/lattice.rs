//! The 1D field grid and soliton templates sampled on it.
//!
//! The field solver discretizes `-∂ₓ²` by the three-point Laplacian, whose
//! ground state differs from the continuum `Q` at order `h²`. Initial data
//! built from the continuum profile therefore carry an `O(h²)` seed of the
//! unstable direction. [`LatticeSoliton`] removes it: it is the even solution
//! of the lattice equation
//!
//! ```text
//! -(Q_{j+1} - 2Q_j + Q_{j-1})/h² + Q_j - f(Q_j) = 0,
//! ```
//!
//! together with the negative eigenpair of the lattice linearization. Shifts by
//! non-integer multiples of `h` use a 12-point Lagrange interpolant.

use alloc::vec;
use alloc::vec::Vec;

use crate::groundstate::GroundStateProfile;
use crate::math::{abs, fd_weights, sqrt, Nonlinearity};
use crate::spectrum::SpectralData;
use crate::tridiag::SymTridiagonal;
use crate::{Error, Result};

/// Uniform nodes `x_i = -L + i h`, `i = 0..=n`, with Dirichlet ends.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub half_length: f64,
    pub h: f64,
    pub n: usize,
}

impl Grid {
    pub fn new(half_length: f64, h: f64) -> Result<Self> {
        if !(h > 0.0) || !(half_length > 0.0) {
            return Err(Error::InvalidParams("grid needs h > 0 and L > 0"));
        }
        let cells = 2.0 * half_length / h;
        let n = libm::round(cells) as usize;
        if abs(cells - n as f64) > 1e-8 * cells || n < 4 {
            return Err(Error::InvalidParams("2L/h must be an integer of at least 4"));
        }
        Ok(Self { half_length, h, n })
    }

    pub fn len(&self) -> usize {
        self.n + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn x(&self, i: usize) -> f64 {
        -self.half_length + i as f64 * self.h
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.x(i)).collect()
    }

    /// `Σ a_i b_i h`; both arrays vanish at the ends.
    pub fn inner(&self, a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>() * self.h
    }

    /// `‖a‖²_{H¹}` with forward differences.
    pub fn h1_squared(&self, a: &[f64]) -> f64 {
        let grad: f64 = a.windows(2).map(|w| (w[1] - w[0]) * (w[1] - w[0])).sum::<f64>() / self.h;
        grad + self.inner(a, a)
    }
}

/// Samples of `Q(x - z)` and friends on the nodes of a [`Grid`].
#[derive(Debug, Clone, PartialEq)]
pub struct Shifted {
    pub z: f64,
    pub q: Vec<f64>,
    pub dq: Vec<f64>,
    pub d2q: Vec<f64>,
    pub y: Vec<f64>,
}

/// A soliton profile with its unstable eigenfunction.
pub trait Template {
    fn nu0(&self) -> f64;

    /// `(Q, Q', Q'', Y)` at `x`.
    fn eval(&self, x: f64) -> [f64; 4];

    fn sample(&self, grid: &Grid, z: f64) -> Shifted {
        let n = grid.len();
        let mut out = Shifted { z, q: vec![0.0; n], dq: vec![0.0; n], d2q: vec![0.0; n], y: vec![0.0; n] };
        for i in 1..n - 1 {
            let [q, dq, d2q, y] = self.eval(grid.x(i) - z);
            out.q[i] = q;
            out.dq[i] = dq;
            out.d2q[i] = d2q;
            out.y[i] = y;
        }
        out
    }
}

/// Continuum profile and eigenfunction, interpolated from their radial grids.
#[derive(Debug, Clone, Copy)]
pub struct ContinuumTemplate<'a> {
    pub profile: &'a GroundStateProfile,
    pub spectral: &'a SpectralData,
}

impl Template for ContinuumTemplate<'_> {
    fn nu0(&self) -> f64 {
        self.spectral.nu0
    }

    fn eval(&self, x: f64) -> [f64; 4] {
        let (q, dq, d2q) = self.profile.evaluate_radial(x);
        let sign = if x < 0.0 { -1.0 } else { 1.0 };
        [q, sign * dq, d2q, self.spectral.value(x)]
    }
}

const POINTS: usize = 12;

/// Even lattice ground state and its negative eigenpair on `j h`,
/// `|j| <= m`, with `Q_{±m} = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeSoliton {
    pub h: f64,
    pub p: f64,
    /// `Q_j` for `j = 0..=m`.
    pub q: Vec<f64>,
    /// `Y_j` for `j = 0..=m`, `Σ_{|j|<=m} Y_j² h = 1`, `Y_0 > 0`.
    pub y: Vec<f64>,
    pub nu0: f64,
    /// Max-norm residual of the lattice equation.
    pub residual: f64,
    pub newton_steps: usize,
}

/// Symmetrized even-sector matrix of `-Δ_h + 1 - V` on `j = 0..m-1`.
///
/// With `Q_{-1} = Q_1` the first row couples to `Q_1` with weight `2/h²`;
/// scaling row/column `j >= 1` by `√2` makes the matrix symmetric.
fn even_operator(h: f64, potential: &[f64]) -> SymTridiagonal {
    let m = potential.len();
    let k = 1.0 / (h * h);
    let diag: Vec<f64> = potential.iter().map(|v| 2.0 * k + 1.0 - v).collect();
    let mut off = vec![-k; m - 1];
    off[0] = -core::f64::consts::SQRT_2 * k;
    SymTridiagonal::new(diag, off)
}

fn weight(j: usize) -> f64 {
    if j == 0 {
        1.0
    } else {
        core::f64::consts::SQRT_2
    }
}

impl LatticeSoliton {
    /// Newton iteration on the even lattice equation starting from the
    /// continuum profile (`d = 1`).
    pub fn solve(profile: &GroundStateProfile, h: f64, half_width: f64) -> Result<Self> {
        if profile.params.d != 1 {
            return Err(Error::InvalidParams("lattice soliton is one-dimensional"));
        }
        if !(h > 0.0 && h <= 0.2) || half_width < 20.0 {
            return Err(Error::InvalidParams("lattice needs 0 < h <= 0.2 and half width >= 20"));
        }
        let f = profile.params.nonlinearity();
        let m = libm::round(half_width / h) as usize;
        let mut q: Vec<f64> = (0..m).map(|j| profile.value(j as f64 * h)).collect();
        let mut residual = f64::INFINITY;
        let mut steps = 0;
        let mut last_change = f64::INFINITY;
        for it in 0..40 {
            let res = lattice_residual(&q, h, &f);
            residual = res.iter().fold(0.0f64, |a, v| a.max(abs(*v)));
            let potential: Vec<f64> = q.iter().map(|&v| f.df(v)).collect();
            let op = even_operator(h, &potential);
            let rhs: Vec<f64> = res.iter().enumerate().map(|(j, r)| -weight(j) * r).collect();
            let delta = op.solve_shifted(0.0, &rhs);
            let mut change = 0.0f64;
            for (j, (qj, dj)) in q.iter_mut().zip(&delta).enumerate() {
                let step = dj / weight(j);
                *qj += step;
                change = change.max(abs(step));
            }
            steps = it + 1;
            // Stop once the update reaches the rounding floor.
            if change <= 1e-14 * q[0] || (change < 1e-10 && change >= 0.5 * last_change) {
                residual = lattice_residual(&q, h, &f).iter().fold(0.0f64, |a, v| a.max(abs(*v)));
                break;
            }
            last_change = change;
        }
        if !(residual < 1e-9) {
            return Err(Error::ToleranceNotMet { achieved: residual, requested: 1e-9 });
        }
        let potential: Vec<f64> = q.iter().map(|&v| f.df(v)).collect();
        let op = even_operator(h, &potential);
        let count = op.sturm_count(0.0);
        if count != 1 {
            return Err(Error::MultipleNegative { count });
        }
        let lambda = op.eigenvalue(0);
        let w = op.eigenvector(lambda);
        // Σ_{|j|<=m} Y_j² = Y_0² + 2Σ_{j>=1} Y_j² = Σ w_j².
        let norm = sqrt(w.iter().map(|v| v * v).sum::<f64>() * h);
        let sign = if w[0] < 0.0 { -1.0 } else { 1.0 };
        let mut y: Vec<f64> = w.iter().enumerate().map(|(j, v)| sign * v / (norm * weight(j))).collect();
        q.push(0.0);
        y.push(0.0);
        Ok(Self { h, p: f.p, q, y, nu0: sqrt(-lambda), residual, newton_steps: steps })
    }

    pub fn half_width(&self) -> f64 {
        (self.q.len() - 1) as f64 * self.h
    }

    #[inline]
    fn node(values: &[f64], j: isize) -> f64 {
        values.get(j.unsigned_abs()).copied().unwrap_or(0.0)
    }

    /// Interpolates both lattice functions at `s = x/h` with the stencil
    /// starting at `base`, given precomputed weights.
    fn apply(&self, base: isize, w: &[Vec<f64>]) -> [f64; 4] {
        let mut out = [0.0; 4];
        for k in 0..POINTS {
            let j = base + k as isize;
            let q = Self::node(&self.q, j);
            out[0] += w[0][k] * q;
            out[1] += w[1][k] * q;
            out[2] += w[2][k] * q;
            out[3] += w[0][k] * Self::node(&self.y, j);
        }
        out[1] /= self.h;
        out[2] /= self.h * self.h;
        out
    }

    fn stencil(s: f64) -> (isize, Vec<Vec<f64>>) {
        let fl = libm::floor(s);
        let base = fl as isize - (POINTS as isize / 2 - 1);
        let nodes: Vec<f64> = (0..POINTS).map(|k| k as f64).collect();
        let offset = s - fl + (POINTS / 2 - 1) as f64;
        (base, fd_weights(offset, &nodes, 2))
    }
}

fn lattice_residual(q: &[f64], h: f64, f: &Nonlinearity) -> Vec<f64> {
    let m = q.len();
    let k = 1.0 / (h * h);
    (0..m)
        .map(|j| {
            let left = if j == 0 { q[1] } else { q[j - 1] };
            let right = if j + 1 < m { q[j + 1] } else { 0.0 };
            -k * ((left + right) - 2.0 * q[j]) + q[j] - f.f(q[j])
        })
        .collect()
}

impl Template for LatticeSoliton {
    fn nu0(&self) -> f64 {
        self.nu0
    }

    fn eval(&self, x: f64) -> [f64; 4] {
        let s = x / self.h;
        if abs(s) > (self.q.len() + POINTS) as f64 {
            return [0.0; 4];
        }
        let (base, w) = Self::stencil(s);
        self.apply(base, &w)
    }

    /// All nodes share the fractional offset of `(x_i - z)/h`, so one set of
    /// weights serves the whole grid when the spacings agree.
    fn sample(&self, grid: &Grid, z: f64) -> Shifted {
        let n = grid.len();
        let mut out = Shifted { z, q: vec![0.0; n], dq: vec![0.0; n], d2q: vec![0.0; n], y: vec![0.0; n] };
        if abs(grid.h - self.h) > 1e-14 * self.h {
            for i in 1..n - 1 {
                let [q, dq, d2q, y] = self.eval(grid.x(i) - z);
                out.q[i] = q;
                out.dq[i] = dq;
                out.d2q[i] = d2q;
                out.y[i] = y;
            }
            return out;
        }
        let s0 = (grid.x(0) - z) / self.h;
        let (base0, w) = Self::stencil(s0);
        let reach = (self.q.len() + POINTS) as isize;
        for i in 1..n - 1 {
            let base = base0 + i as isize;
            if base > reach || base + (POINTS as isize) < -reach {
                continue;
            }
            let [q, dq, d2q, y] = self.apply(base, &w);
            out.q[i] = q;
            out.dq[i] = dq;
            out.d2q[i] = d2q;
            out.y[i] = y;
        }
        out
    }
}
