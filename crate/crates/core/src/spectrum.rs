//! The linearized operator `L = -Δ + 1 - pQ^{p-1}` restricted to the radial
//! (`ℓ = 0`) and first angular (`ℓ = 1`) sectors.
//!
//! Each sector is discretized on the cell-centred grid `r_i = (i - 1/2) h`
//! in flux form, then symmetrized by `w = r^{(d-1)/2} u` so that the matrix is
//! symmetric tridiagonal with the flat measure.

use alloc::vec;
use alloc::vec::Vec;

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};

use crate::groundstate::GroundStateProfile;
use crate::math::{abs, exp, pow, sphere_area, sqrt};
use crate::tridiag::SymTridiagonal;
use crate::{Error, Result};

/// Discretized sector of `L`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialOperator {
    pub d: usize,
    pub sector: usize,
    pub h: f64,
    pub r: Vec<f64>,
    /// `1 - pQ^{p-1} + ℓ(ℓ+d-2)/r²`.
    pub potential: Vec<f64>,
    /// `pQ^{p-1}` samples, used to split off the free part `-Δ + 1`.
    pub attractive: Vec<f64>,
    pub matrix: SymTridiagonal,
}

impl RadialOperator {
    pub fn assemble(profile: &GroundStateProfile, sector: usize, h: f64, r_max: f64) -> Result<Self> {
        if h > 0.02 {
            return Err(Error::GridTooCoarse { h });
        }
        if sector > 1 {
            return Err(Error::InvalidParams("only sectors 0 and 1 are supported"));
        }
        if r_max < 30.0 {
            return Err(Error::InvalidParams("r_max must be at least 30"));
        }
        let d = profile.params.d;
        let p = profile.params.p;
        let n = libm::round(r_max / h) as usize;
        let r: Vec<f64> = (1..=n).map(|i| (i as f64 - 0.5) * h).collect();
        let l = sector as f64;
        let centrifugal = l * (l + d as f64 - 2.0);
        let attractive: Vec<f64> = r.iter().map(|&ri| p * pow(profile.value(ri), p - 1.0)).collect();
        let potential: Vec<f64> =
            r.iter().zip(&attractive).map(|(&ri, a)| 1.0 - a + centrifugal / (ri * ri)).collect();
        Ok(Self::from_potential(d, sector, h, r, potential, attractive))
    }

    /// Builds the symmetrized matrix for an arbitrary potential sampled on
    /// the cell centres `(i - 1/2) h`.
    pub fn from_potential(d: usize, sector: usize, h: f64, r: Vec<f64>, potential: Vec<f64>, attractive: Vec<f64>) -> Self {
        let n = r.len();
        let m = d as f64 - 1.0;
        let weight = |x: f64| pow(x, m);
        let h2 = h * h;
        let mut diag = vec![0.0; n];
        let mut off = vec![0.0; n.saturating_sub(1)];
        for i in 0..n {
            let left = if d == 1 { 1.0 } else { weight(r[i] - 0.5 * h) };
            let right = weight(r[i] + 0.5 * h);
            let wi = weight(r[i]);
            // Ghost value at r = -h/2: even for ℓ = 0, odd for ℓ = 1. In d >= 2
            // the face weight vanishes and the ghost is irrelevant.
            let left_term = if i == 0 {
                if d == 1 && sector == 1 {
                    2.0 * left
                } else {
                    0.0
                }
            } else {
                left
            };
            diag[i] = (left_term + right) / (h2 * wi) + potential[i];
            if i + 1 < n {
                off[i] = -right / (h2 * sqrt(wi * weight(r[i + 1])));
            }
        }
        Self { d, sector, h, r, potential, attractive, matrix: SymTridiagonal::new(diag, off) }
    }

    pub fn len(&self) -> usize {
        self.r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r.is_empty()
    }

    /// Symmetrized vector `w = r^{(d-1)/2} u`.
    pub fn symmetrize(&self, u: &[f64]) -> Vec<f64> {
        let m = (self.d as f64 - 1.0) / 2.0;
        self.r.iter().zip(u).map(|(&r, v)| pow(r, m) * v).collect()
    }

    pub fn desymmetrize(&self, w: &[f64]) -> Vec<f64> {
        let m = (self.d as f64 - 1.0) / 2.0;
        self.r.iter().zip(w).map(|(&r, v)| v / pow(r, m)).collect()
    }

    /// `∫ f g` over `ℝ^d` for symmetrized radial samples in this sector,
    /// including the angular factor (`|S^{d-1}|` for ℓ = 0, `|S^{d-1}|/d`
    /// for `u(r) x_j/r`).
    pub fn inner(&self, a: &[f64], b: &[f64]) -> f64 {
        let s: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
        let angular = sphere_area(self.d) / if self.sector == 1 { self.d as f64 } else { 1.0 };
        angular * self.h * s
    }

    /// `(⟨Lε, ε⟩, ‖ε‖²_{H¹})` for symmetrized `w`.
    pub fn quadratic_forms(&self, w: &[f64]) -> (f64, f64) {
        let mut tw = vec![0.0; w.len()];
        self.matrix.matvec(w, &mut tw);
        let lw = self.inner(&tw, w);
        let pw: f64 = w.iter().zip(&self.attractive).map(|(x, a)| a * x * x).sum::<f64>();
        let angular = sphere_area(self.d) / if self.sector == 1 { self.d as f64 } else { 1.0 };
        (lw, lw + angular * self.h * pw)
    }

    /// `⟨Lε, ε⟩ / ‖ε‖²_{H¹}`.
    pub fn rayleigh_quotient(&self, w: &[f64]) -> f64 {
        let (num, den) = self.quadratic_forms(w);
        num / den
    }
}

/// Unstable eigenpair of `L` and derived quantities.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralData {
    pub d: usize,
    pub h: f64,
    pub r: Vec<f64>,
    /// Radial samples of the eigenfunction, `‖Y‖_{L²(ℝ^d)} = 1`, `Y(0) > 0`.
    pub y: Vec<f64>,
    pub nu0: f64,
    pub beta: f64,
    /// Second-lowest radial eigenvalue.
    pub second_eigenvalue: f64,
    pub kernel_residual: f64,
    /// Fitted `C` in `|Y(r)| <= C e^{-sqrt(1+ν₀²) r}` over `[5, 20]`.
    pub decay_constant: f64,
}

/// Result of [`negative_eigenpair`].
#[derive(Debug, Clone, PartialEq)]
pub struct Eigenpair {
    pub nu0: f64,
    /// Radial samples `u` (not symmetrized), normalized in `L²(ℝ^d)`.
    pub y: Vec<f64>,
    pub second_eigenvalue: f64,
}

/// Unique negative eigenvalue `-ν₀²` of a radial sector and its eigenfunction.
pub fn negative_eigenpair(op: &RadialOperator) -> Result<Eigenpair> {
    if op.sector != 0 {
        return Err(Error::InvalidParams("the negative eigenpair lives in sector 0"));
    }
    let count = op.matrix.sturm_count(0.0);
    if count != 1 {
        return Err(Error::MultipleNegative { count });
    }
    let lambda = op.matrix.eigenvalue(0);
    let second = op.matrix.eigenvalue(1);
    let mut w = op.matrix.eigenvector(lambda);
    let norm = sqrt(op.inner(&w, &w));
    let sign = if w[0] < 0.0 { -1.0 } else { 1.0 };
    for v in &mut w {
        *v *= sign / norm;
    }
    Ok(Eigenpair { nu0: sqrt(-lambda), y: op.desymmetrize(&w), second_eigenvalue: second })
}

/// Translation-kernel check in the `ℓ = 1` sector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelCheck {
    /// `‖L q'‖ / ‖q'‖`.
    pub residual: f64,
    /// Eigenvalue of smallest modulus.
    pub eigenvalue: f64,
}

pub fn kernel_check(profile: &GroundStateProfile, h: f64, r_max: f64) -> Result<KernelCheck> {
    let op = RadialOperator::assemble(profile, 1, h, r_max)?;
    let dq: Vec<f64> = op.r.iter().map(|&r| profile.evaluate_radial(r).1).collect();
    let w = op.symmetrize(&dq);
    let mut lw = vec![0.0; w.len()];
    op.matrix.matvec(&w, &mut lw);
    let residual = sqrt(op.inner(&lw, &lw) / op.inner(&w, &w));
    let k = op.matrix.sturm_count(0.0);
    let above = op.matrix.eigenvalue(k);
    let eigenvalue = if k > 0 {
        let below = op.matrix.eigenvalue(k - 1);
        if abs(below) < abs(above) {
            below
        } else {
            above
        }
    } else {
        above
    };
    Ok(KernelCheck { residual, eigenvalue })
}

/// Eigenpair, kernel check and decay fit on a common grid.
pub fn spectral_data(profile: &GroundStateProfile, h: f64, r_max: f64) -> Result<SpectralData> {
    let op = RadialOperator::assemble(profile, 0, h, r_max)?;
    let pair = negative_eigenpair(&op)?;
    let kernel = kernel_check(profile, h, r_max)?;
    let rate = sqrt(1.0 + pair.nu0 * pair.nu0);
    let decay_constant = op
        .r
        .iter()
        .zip(&pair.y)
        .filter(|(&r, _)| (5.0..=20.0).contains(&r))
        .map(|(&r, y)| abs(*y) * exp(rate * r))
        .fold(0.0, f64::max);
    Ok(SpectralData {
        d: profile.params.d,
        h,
        r: op.r,
        y: pair.y,
        nu0: pair.nu0,
        beta: -1.0 / (2.0 * pair.nu0),
        second_eigenvalue: pair.second_eigenvalue,
        kernel_residual: kernel.residual,
        decay_constant,
    })
}

impl SpectralData {
    /// `Y` at radius `r` by cubic Lagrange interpolation (even extension
    /// through the origin, zero beyond the grid).
    pub fn value(&self, r: f64) -> f64 {
        let r = abs(r);
        let h = self.h;
        let n = self.y.len();
        let x = r / h + 0.5;
        let base = libm::floor(x) as isize - 1;
        if base + 2 >= n as isize {
            return 0.0;
        }
        let s = x - libm::floor(x);
        let sample = |j: isize| -> f64 {
            // Node j sits at (j - 1/2) h; index 0 mirrors node 1.
            let idx = if j <= 0 { (1 - j) as usize } else { j as usize };
            self.y[idx - 1]
        };
        let (y0, y1, y2, y3) = (sample(base), sample(base + 1), sample(base + 2), sample(base + 3));
        let t = s;
        y0 * (-t * (t - 1.0) * (t - 2.0) / 6.0) + y1 * ((t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0)
            + y2 * (-(t + 1.0) * t * (t - 2.0) / 2.0)
            + y3 * ((t + 1.0) * t * (t - 1.0) / 6.0)
    }
}

/// Outcome of the Rayleigh-quotient sampling.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoercivityEstimate {
    pub c_est: f64,
    pub radial_min: f64,
    pub angular_min: f64,
    pub samples: usize,
}

fn smoothed_noise(rng: &mut ChaCha8Rng, r: &[f64]) -> Vec<f64> {
    // Gaussian values on a coarse lattice of random spacing, smoothed by
    // nearest-neighbour averaging and interpolated linearly onto the grid.
    // The spacing sets the band limit; the envelope width localizes the
    // sample so that both the potential well and the far field are probed.
    let spacing: f64 = Uniform::new(0.05, 1.5).unwrap().sample(rng);
    let width: f64 = Uniform::new(0.5, 10.0).unwrap().sample(rng);
    let r_end = r.last().copied().unwrap_or(0.0);
    let knots = libm::ceil(r_end / spacing) as usize + 2;
    let mut c: Vec<f64> = (0..knots).map(|_| StandardNormal.sample(rng)).collect();
    for _ in 0..3 {
        let prev = c.clone();
        for i in 0..knots {
            let a = if i > 0 { prev[i - 1] } else { prev[i] };
            let b = if i + 1 < knots { prev[i + 1] } else { 0.0 };
            c[i] = (a + prev[i] + b) / 3.0;
        }
    }
    r.iter()
        .map(|&ri| {
            let x = ri / spacing;
            let k = (libm::floor(x) as usize).min(knots - 2);
            let s = x - k as f64;
            let v = (1.0 - s) * c[k] + s * c[k + 1];
            v * exp(-0.5 * (ri / width) * (ri / width))
        })
        .collect()
}

fn project_out(op: &RadialOperator, w: &mut [f64], direction: &[f64]) {
    let c = op.inner(w, direction) / op.inner(direction, direction);
    for (a, b) in w.iter_mut().zip(direction) {
        *a -= c * b;
    }
}

/// Rayleigh quotient of one random sample in the given sector, after
/// projecting out the sector's distinguished direction.
pub fn coercivity_sample(op: &RadialOperator, direction: &[f64], seed: u64, index: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    let u = smoothed_noise(&mut rng, &op.r);
    let mut w = op.symmetrize(&u);
    project_out(op, &mut w, direction);
    op.rayleigh_quotient(&w)
}

/// Minimum projected Rayleigh quotient `⟨Lε, ε⟩/‖ε‖²_{H¹}` over random
/// samples, split evenly between the radial sector (orthogonal to `Y`) and
/// the first angular sector (orthogonal to `∂_j Q`). Sectors `ℓ >= 2` carry a
/// larger centrifugal term than `ℓ = 1`, whose form is nonnegative, so the two
/// sampled sectors bound the constant.
pub fn coercivity_constant(
    profile: &GroundStateProfile,
    spec: &SpectralData,
    n_samples: usize,
    seed: u64,
) -> Result<CoercivityEstimate> {
    if n_samples < 200 {
        return Err(Error::InvalidParams("at least 200 samples are required"));
    }
    let r_max = spec.r.len() as f64 * spec.h;
    let radial = RadialOperator::assemble(profile, 0, spec.h, r_max)?;
    let angular = RadialOperator::assemble(profile, 1, spec.h, r_max)?;
    let y_dir = radial.symmetrize(&spec.y);
    // The discrete translation mode: ℓ = 1 eigenvector closest to zero.
    let kernel = kernel_check(profile, spec.h, r_max)?;
    let dq_dir = angular.matrix.eigenvector(kernel.eigenvalue);

    let mut radial_min = f64::INFINITY;
    let mut angular_min = f64::INFINITY;
    for i in 0..n_samples {
        let index = i as u64;
        let q = if i % 2 == 0 {
            let q = coercivity_sample(&radial, &y_dir, seed, index);
            radial_min = radial_min.min(q);
            q
        } else {
            let q = coercivity_sample(&angular, &dq_dir, seed, index);
            angular_min = angular_min.min(q);
            q
        };
        if q < -1e-8 {
            return Err(Error::NegativeQuotient { quotient: q });
        }
    }
    Ok(CoercivityEstimate { c_est: radial_min.min(angular_min), radial_min, angular_min, samples: n_samples })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn free_operator_is_bounded_below_by_one() {
        let h = 0.01;
        let r: Vec<f64> = (1..=3000).map(|i| (i as f64 - 0.5) * h).collect();
        for d in 1..=5 {
            let op = RadialOperator::from_potential(d, 0, h, r.clone(), vec![1.0; r.len()], vec![0.0; r.len()]);
            let lowest = op.matrix.eigenvalue(0);
            assert!(lowest >= 1.0 - 1e-6, "d = {d}: {lowest}");
            // Dirichlet ball of radius 30: 1 + (j/30)² with j the first Bessel zero.
            assert!(lowest < 1.05);
        }
    }

    #[test]
    fn harmonic_oscillator_levels() {
        // -u'' + x² u on the half-line: even states 1, 5, 9; odd states 3, 7.
        let h = 0.005;
        let r: Vec<f64> = (1..=2000).map(|i| (i as f64 - 0.5) * h).collect();
        let v: Vec<f64> = r.iter().map(|x| x * x).collect();
        let even = RadialOperator::from_potential(1, 0, h, r.clone(), v.clone(), vec![0.0; r.len()]);
        let odd = RadialOperator::from_potential(1, 1, h, r.clone(), v, vec![0.0; r.len()]);
        assert!((even.matrix.eigenvalue(0) - 1.0).abs() < 1e-4);
        assert!((even.matrix.eigenvalue(1) - 5.0).abs() < 1e-4);
        assert!((odd.matrix.eigenvalue(0) - 3.0).abs() < 1e-4);
    }

    #[test]
    fn three_dimensional_harmonic_oscillator() {
        // -Δ + |x|² in ℝ³: ℓ = 0 ground level 3, ℓ = 1 ground level 5.
        let h = 0.005;
        let r: Vec<f64> = (1..=2000).map(|i| (i as f64 - 0.5) * h).collect();
        let v0: Vec<f64> = r.iter().map(|x| x * x).collect();
        let v1: Vec<f64> = r.iter().map(|x| x * x + 2.0 / (x * x)).collect();
        let s0 = RadialOperator::from_potential(3, 0, h, r.clone(), v0, vec![0.0; r.len()]);
        let s1 = RadialOperator::from_potential(3, 1, h, r.clone(), v1, vec![0.0; r.len()]);
        assert!((s0.matrix.eigenvalue(0) - 3.0).abs() < 1e-4);
        assert!((s1.matrix.eigenvalue(0) - 5.0).abs() < 1e-3);
    }
}
