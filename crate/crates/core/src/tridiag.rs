//! Symmetric tridiagonal eigenproblems: Sturm counts, bisection for single
//! eigenvalues and inverse iteration for eigenvectors.

use alloc::vec;
use alloc::vec::Vec;

use crate::math::{abs, sqrt};

/// Symmetric tridiagonal matrix with diagonal `diag` and off-diagonal `off`
/// (`off[i]` couples rows `i` and `i + 1`).
#[derive(Debug, Clone, PartialEq)]
pub struct SymTridiagonal {
    pub diag: Vec<f64>,
    pub off: Vec<f64>,
}

impl SymTridiagonal {
    pub fn new(diag: Vec<f64>, off: Vec<f64>) -> Self {
        assert_eq!(off.len() + 1, diag.len().max(1));
        Self { diag, off }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    /// Number of eigenvalues strictly below `lambda`.
    pub fn sturm_count(&self, lambda: f64) -> usize {
        let n = self.diag.len();
        let mut count = 0;
        let mut q = 1.0;
        for i in 0..n {
            let coupling = if i == 0 { 0.0 } else { self.off[i - 1] * self.off[i - 1] };
            let prev = if abs(q) < 1e-300 { 1e-300_f64.copysign(q) } else { q };
            q = self.diag[i] - lambda - if i == 0 { 0.0 } else { coupling / prev };
            if q < 0.0 {
                count += 1;
            }
        }
        count
    }

    pub fn gershgorin(&self) -> (f64, f64) {
        let n = self.diag.len();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let r = if i > 0 { abs(self.off[i - 1]) } else { 0.0 }
                + if i + 1 < n { abs(self.off[i]) } else { 0.0 };
            lo = lo.min(self.diag[i] - r);
            hi = hi.max(self.diag[i] + r);
        }
        (lo, hi)
    }

    /// The `k`-th smallest eigenvalue (0-based) by bisection on the Sturm count.
    pub fn eigenvalue(&self, k: usize) -> f64 {
        let (mut lo, mut hi) = self.gershgorin();
        lo -= 1.0;
        hi += 1.0;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.sturm_count(mid) > k {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }

    pub fn matvec(&self, x: &[f64], out: &mut [f64]) {
        let n = self.diag.len();
        for i in 0..n {
            let mut s = self.diag[i] * x[i];
            if i > 0 {
                s += self.off[i - 1] * x[i - 1];
            }
            if i + 1 < n {
                s += self.off[i] * x[i + 1];
            }
            out[i] = s;
        }
    }

    /// Solves `(T - shift) x = rhs` by Gaussian elimination with partial
    /// pivoting (LAPACK `gtsv` style); exact zero pivots are perturbed.
    pub fn solve_shifted(&self, shift: f64, rhs: &[f64]) -> Vec<f64> {
        let n = self.diag.len();
        let mut d: Vec<f64> = self.diag.iter().map(|v| v - shift).collect();
        let mut dl: Vec<f64> = self.off.clone();
        let mut du: Vec<f64> = self.off.clone();
        let mut du2 = vec![0.0; n.saturating_sub(2)];
        let mut b = rhs.to_vec();
        let tiny = 1e-300;
        for i in 0..n.saturating_sub(1) {
            if abs(d[i]) >= abs(dl[i]) {
                if d[i] == 0.0 {
                    d[i] = tiny;
                }
                let fact = dl[i] / d[i];
                d[i + 1] -= fact * du[i];
                b[i + 1] -= fact * b[i];
                dl[i] = 0.0;
            } else {
                let fact = d[i] / dl[i];
                d[i] = dl[i];
                let tmp = d[i + 1];
                d[i + 1] = du[i] - fact * tmp;
                if i + 2 < n {
                    dl[i] = du[i + 1];
                    du[i + 1] = -fact * dl[i];
                    du2[i] = dl[i];
                    dl[i] = 0.0;
                }
                du[i] = tmp;
                b.swap(i, i + 1);
                b[i + 1] -= fact * b[i];
            }
        }
        if n > 0 && d[n - 1] == 0.0 {
            d[n - 1] = tiny;
        }
        let mut x = vec![0.0; n];
        for i in (0..n).rev() {
            let mut s = b[i];
            if i + 1 < n {
                s -= du[i] * x[i + 1];
            }
            if i + 2 < n {
                s -= du2[i] * x[i + 2];
            }
            x[i] = s / d[i];
        }
        x
    }

    /// Eigenvector for an (accurately known) eigenvalue by inverse iteration,
    /// normalized to unit Euclidean norm.
    pub fn eigenvector(&self, lambda: f64) -> Vec<f64> {
        let n = self.diag.len();
        let scale = self.gershgorin().1.abs().max(1.0);
        let shift = lambda + 1e-13 * scale;
        let mut x = vec![1.0 / sqrt(n as f64); n];
        for _ in 0..4 {
            let mut y = self.solve_shifted(shift, &x);
            let norm = sqrt(y.iter().map(|v| v * v).sum::<f64>());
            for v in &mut y {
                *v /= norm;
            }
            x = y;
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplacian(n: usize) -> SymTridiagonal {
        SymTridiagonal::new(vec![2.0; n], vec![-1.0; n - 1])
    }

    #[test]
    fn discrete_laplacian_spectrum() {
        let n = 50;
        let t = laplacian(n);
        for k in 0..n {
            let exact = 2.0 - 2.0 * libm::cos((k + 1) as f64 * core::f64::consts::PI / (n + 1) as f64);
            assert!((t.eigenvalue(k) - exact).abs() < 1e-12, "k = {k}");
        }
        assert_eq!(t.sturm_count(0.0), 0);
        assert_eq!(t.sturm_count(4.0), n);
    }

    #[test]
    fn inverse_iteration_recovers_sine_mode() {
        let n = 40;
        let t = laplacian(n);
        let lam = t.eigenvalue(0);
        let v = t.eigenvector(lam);
        let sign = v[0].signum();
        let norm = libm::sqrt(2.0 / (n + 1) as f64);
        for (i, vi) in v.iter().enumerate() {
            let exact = norm * libm::sin((i + 1) as f64 * core::f64::consts::PI / (n + 1) as f64);
            assert!((sign * vi - exact).abs() < 1e-10);
        }
    }

    #[test]
    fn pivoted_solve_matches_matvec() {
        let t = SymTridiagonal::new(vec![0.0, 1.0, -2.0, 3.0], vec![2.0, 1.0, 0.5]);
        let x = [1.0, -1.0, 2.0, 0.5];
        let mut b = [0.0; 4];
        t.matvec(&x, &mut b);
        let sol = t.solve_shifted(0.0, &b);
        for i in 0..4 {
            assert!((sol[i] - x[i]).abs() < 1e-13);
        }
    }
}
