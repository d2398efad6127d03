//! Adaptive Dormand–Prince 5(4) integrator.
//!
//! Steps forward or backward in time, with error control on the mixed
//! absolute/relative norm `|e_i| / (atol + rtol max(|y_i|, |y_i'|))`. The
//! last accepted step is kept so callers can locate events by cubic Hermite
//! interpolation.

use alloc::vec;
use alloc::vec::Vec;

use crate::math::{abs, pow, sqrt};
use crate::{Error, Result};

/// First-order system `dy/dt = f(t, y)`.
pub trait OdeSystem {
    fn dim(&self) -> usize;
    fn rhs(&self, t: f64, y: &[f64], dydt: &mut [f64]);
}

/// Adapter turning a closure into an [`OdeSystem`].
pub struct FnSystem<F> {
    dim: usize,
    f: F,
}

impl<F: Fn(f64, &[f64], &mut [f64])> FnSystem<F> {
    pub fn new(dim: usize, f: F) -> Self {
        Self { dim, f }
    }
}

impl<F: Fn(f64, &[f64], &mut [f64])> OdeSystem for FnSystem<F> {
    fn dim(&self) -> usize {
        self.dim
    }
    fn rhs(&self, t: f64, y: &[f64], dydt: &mut [f64]) {
        (self.f)(t, y, dydt)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub rtol: f64,
    pub atol: f64,
}

impl Tolerances {
    pub fn uniform(tol: f64) -> Self {
        Self { rtol: tol, atol: tol }
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Stats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
// Difference between the 5th- and 4th-order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

pub struct DormandPrince<S> {
    sys: S,
    tol: Tolerances,
    t: f64,
    y: Vec<f64>,
    f: Vec<f64>,
    h: f64,
    t_prev: f64,
    y_prev: Vec<f64>,
    f_prev: Vec<f64>,
    k: [Vec<f64>; 7],
    scratch: Vec<f64>,
    stats: Stats,
    max_step: f64,
}

impl<S: OdeSystem> DormandPrince<S> {
    pub fn new(sys: S, t0: f64, y0: &[f64], tol: Tolerances) -> Self {
        let n = sys.dim();
        assert_eq!(y0.len(), n, "state dimension mismatch");
        let mut f = vec![0.0; n];
        sys.rhs(t0, y0, &mut f);
        let mut solver = Self {
            sys,
            tol,
            t: t0,
            y: y0.to_vec(),
            f: f.clone(),
            h: 0.0,
            t_prev: t0,
            y_prev: y0.to_vec(),
            f_prev: f,
            k: core::array::from_fn(|_| vec![0.0; n]),
            scratch: vec![0.0; n],
            stats: Stats { evaluations: 1, ..Stats::default() },
            max_step: f64::INFINITY,
        };
        solver.h = solver.initial_step();
        solver
    }

    /// Caps the magnitude of every step.
    pub fn with_max_step(mut self, max_step: f64) -> Self {
        self.max_step = max_step;
        self.h = self.h.min(max_step);
        self
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn dydt(&self) -> &[f64] {
        &self.f
    }

    pub fn t_prev(&self) -> f64 {
        self.t_prev
    }

    pub fn y_prev(&self) -> &[f64] {
        &self.y_prev
    }

    pub fn stats(&self) -> Stats {
        self.stats
    }

    pub fn system(&self) -> &S {
        &self.sys
    }

    fn weight(&self, a: f64, b: f64) -> f64 {
        self.tol.atol + self.tol.rtol * abs(a).max(abs(b))
    }

    fn initial_step(&mut self) -> f64 {
        let n = self.y.len();
        let mut d0 = 0.0;
        let mut d1 = 0.0;
        for i in 0..n {
            let w = self.weight(self.y[i], self.y[i]);
            d0 += (self.y[i] / w) * (self.y[i] / w);
            d1 += (self.f[i] / w) * (self.f[i] / w);
        }
        let d0 = sqrt(d0 / n as f64);
        let d1 = sqrt(d1 / n as f64);
        let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
        for i in 0..n {
            self.scratch[i] = self.y[i] + h0 * self.f[i];
        }
        let mut f1 = vec![0.0; n];
        self.sys.rhs(self.t + h0, &self.scratch, &mut f1);
        self.stats.evaluations += 1;
        let mut d2 = 0.0;
        for i in 0..n {
            let w = self.weight(self.y[i], self.y[i]);
            d2 += ((f1[i] - self.f[i]) / w) * ((f1[i] - self.f[i]) / w);
        }
        let d2 = sqrt(d2 / n as f64) / h0;
        let h1 = if d1.max(d2) <= 1e-15 {
            (h0 * 1e-3).max(1e-6)
        } else {
            pow(0.01 / d1.max(d2), 0.2)
        };
        (100.0 * h0).min(h1)
    }

    /// Takes one accepted step towards `t_stop` without passing it.
    pub fn step(&mut self, t_stop: f64) -> Result<()> {
        let span = t_stop - self.t;
        if span == 0.0 {
            return Ok(());
        }
        let dir = span.signum();
        let n = self.y.len();
        let mut h = self.h.min(self.max_step).min(abs(span));
        loop {
            if h < 1e-14 * abs(self.t).max(1.0) {
                return Err(Error::StepSizeUnderflow { t: self.t });
            }
            let last = h >= abs(t_stop - self.t) * (1.0 - 1e-12);
            let hs = if last { t_stop - self.t } else { dir * h };
            self.k[0].copy_from_slice(&self.f);
            for s in 1..7 {
                for i in 0..n {
                    let mut acc = self.y[i];
                    for j in 0..s {
                        acc += hs * A[s][j] * self.k[j][i];
                    }
                    self.scratch[i] = acc;
                }
                let (done, rest) = self.k.split_at_mut(s);
                let _ = done;
                self.sys.rhs(self.t + C[s] * hs, &self.scratch, &mut rest[0]);
            }
            self.stats.evaluations += 6;
            // Stage 7 is evaluated at the 5th-order solution (FSAL), which
            // is exactly `scratch` after the loop above.
            let mut err = 0.0f64;
            for i in 0..n {
                let mut e = 0.0;
                for s in 0..7 {
                    e += E[s] * self.k[s][i];
                }
                let w = self.weight(self.y[i], self.scratch[i]);
                err = err.max(abs(hs * e) / w);
            }
            if err <= 1.0 {
                self.t_prev = self.t;
                core::mem::swap(&mut self.y_prev, &mut self.y);
                core::mem::swap(&mut self.f_prev, &mut self.f);
                self.y.copy_from_slice(&self.scratch);
                self.f.copy_from_slice(&self.k[6]);
                self.t = if last { t_stop } else { self.t + hs };
                self.stats.accepted += 1;
                let factor = if err == 0.0 { 5.0 } else { (0.9 * pow(err, -0.2)).clamp(0.2, 5.0) };
                // Do not let a short final step shrink the next one.
                self.h = if last { self.h.max(h) } else { h * factor };
                return Ok(());
            }
            self.stats.rejected += 1;
            h *= (0.9 * pow(err, -0.2)).clamp(0.1, 1.0);
        }
    }

    /// Steps until `t == t_stop`.
    pub fn advance_to(&mut self, t_stop: f64) -> Result<()> {
        while self.t != t_stop {
            self.step(t_stop)?;
        }
        Ok(())
    }

    /// Cubic Hermite interpolant over the last accepted step.
    pub fn interpolate(&self, t: f64, out: &mut [f64]) {
        let h = self.t - self.t_prev;
        if h == 0.0 {
            out.copy_from_slice(&self.y);
            return;
        }
        let s = (t - self.t_prev) / h;
        let h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
        let h10 = s * (1.0 - s) * (1.0 - s);
        let h01 = s * s * (3.0 - 2.0 * s);
        let h11 = s * s * (s - 1.0);
        for i in 0..out.len() {
            out[i] = h00 * self.y_prev[i]
                + h10 * h * self.f_prev[i]
                + h01 * self.y[i]
                + h11 * h * self.f[i];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_oscillator_period() {
        let sys = FnSystem::new(2, |_t, y: &[f64], dy: &mut [f64]| {
            dy[0] = y[1];
            dy[1] = -y[0];
        });
        let mut dp = DormandPrince::new(sys, 0.0, &[1.0, 0.0], Tolerances::uniform(1e-12));
        let period = 2.0 * core::f64::consts::PI;
        dp.advance_to(10.0 * period).unwrap();
        assert!((dp.y()[0] - 1.0).abs() < 1e-9);
        assert!(dp.y()[1].abs() < 1e-9);
    }

    #[test]
    fn backward_integration_and_interpolation() {
        let sys = FnSystem::new(1, |_t, y: &[f64], dy: &mut [f64]| dy[0] = y[0]);
        let mut dp = DormandPrince::new(sys, 1.0, &[1.0], Tolerances::uniform(1e-12));
        dp.advance_to(-1.0).unwrap();
        assert!((dp.y()[0] - libm::exp(-2.0)).abs() < 1e-11);
        let mut out = [0.0];
        let tm = 0.5 * (dp.t_prev() + dp.t());
        dp.interpolate(tm, &mut out);
        assert!((out[0] - libm::exp(tm - 1.0)).abs() < 1e-8);
    }
}
