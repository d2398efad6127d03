//! Interaction between two ground states `Q_k = Q(· - z_k)`: the constants
//! `c₁ = ‖∂₁Q‖²`, `g₀ = c₁⁻¹ ∫ Q^p e^{-x₁}`, the attraction law `g = g₀ q`, the
//! fields `G = f(Q₁+Q₂) - f(Q₁) - f(Q₂)` and `D = -Σ (ℓ_k·∇)² Q_k`, and
//! quadratures of the projections and overlaps that control the reduced
//! dynamics.

use alloc::vec;
use alloc::vec::Vec;

use crate::groundstate::GroundStateProfile;
use crate::math::{abs, cos, exp, log, pow, sin, sphere_area, sqrt, Nonlinearity};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InteractionConstants {
    pub c1: f64,
    pub g0: f64,
    pub kappa: f64,
}

impl InteractionConstants {
    /// Attraction law `g(r) = g₀ q(r)`.
    pub fn attraction(&self, profile: &GroundStateProfile, r: f64) -> f64 {
        self.g0 * profile.value(r)
    }

    /// Width `g₀ q(r) / r` of the band within which the true attraction is
    /// known to lie around [`attraction`](Self::attraction).
    pub fn attraction_band(&self, profile: &GroundStateProfile, r: f64) -> f64 {
        self.g0 * profile.value(r) / r
    }
}

/// `g(r) = g₀ q(r)`.
pub fn attraction_g(constants: &InteractionConstants, profile: &GroundStateProfile, r: f64) -> f64 {
    constants.attraction(profile, r)
}

/// Two soliton centres and velocities in `ℝ^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct PairConfiguration {
    pub z1: Vec<f64>,
    pub z2: Vec<f64>,
    pub l1: Vec<f64>,
    pub l2: Vec<f64>,
}

impl PairConfiguration {
    pub fn new(z1: Vec<f64>, z2: Vec<f64>, l1: Vec<f64>, l2: Vec<f64>) -> Result<Self> {
        let config = Self { z1, z2, l1, l2 };
        let sep = config.separation();
        if !(sep > 1.0) {
            return Err(Error::SeparationFloor { separation: sep });
        }
        Ok(config)
    }

    /// At rest on the first axis with `z = z₁ - z₂ = r e₁`, centred at the origin.
    pub fn collinear(d: usize, r: f64) -> Result<Self> {
        let mut z1 = vec![0.0; d];
        let mut z2 = vec![0.0; d];
        z1[0] = 0.5 * r;
        z2[0] = -0.5 * r;
        Self::new(z1, z2, vec![0.0; d], vec![0.0; d])
    }

    pub fn dim(&self) -> usize {
        self.z1.len()
    }

    pub fn separation(&self) -> f64 {
        sqrt(self.z1.iter().zip(&self.z2).map(|(a, b)| (a - b) * (a - b)).sum())
    }

    pub fn swapped(&self) -> Self {
        Self { z1: self.z2.clone(), z2: self.z1.clone(), l1: self.l2.clone(), l2: self.l1.clone() }
    }
}

/// `Σ_k (ℓ·∇)² Q` at offset `y` from the centre: `q'' (ℓ·ŷ)² + q'/r (|ℓ|² - (ℓ·ŷ)²)`.
fn directional_hessian(profile: &GroundStateProfile, y: &[f64], l: &[f64]) -> f64 {
    let r = sqrt(y.iter().map(|v| v * v).sum());
    let l2: f64 = l.iter().map(|v| v * v).sum();
    let (_, dq, d2q) = profile.evaluate_radial(r);
    if r == 0.0 {
        return d2q * l2;
    }
    let ly: f64 = l.iter().zip(y).map(|(a, b)| a * b).sum::<f64>() / r;
    d2q * ly * ly + dq / r * (l2 - ly * ly)
}

/// `G = f(Q₁ + Q₂) - f(Q₁) - f(Q₂)` at `points` (row-major, `d` coordinates each).
pub fn g_field(profile: &GroundStateProfile, config: &PairConfiguration, points: &[f64]) -> Vec<f64> {
    let d = config.dim();
    let f = profile.params.nonlinearity();
    let mut y = vec![0.0; d];
    points
        .chunks_exact(d)
        .map(|x| {
            for i in 0..d {
                y[i] = x[i] - config.z1[i];
            }
            let q1 = profile.value(norm(&y));
            for i in 0..d {
                y[i] = x[i] - config.z2[i];
            }
            let q2 = profile.value(norm(&y));
            f.f(q1 + q2) - f.f(q1) - f.f(q2)
        })
        .collect()
}

/// `D = -Σ_k (ℓ_k·∇)² Q_k` at `points`.
pub fn d_field(profile: &GroundStateProfile, config: &PairConfiguration, points: &[f64]) -> Vec<f64> {
    let d = config.dim();
    let mut y = vec![0.0; d];
    points
        .chunks_exact(d)
        .map(|x| {
            let mut total = 0.0;
            for (z, l) in [(&config.z1, &config.l1), (&config.z2, &config.l2)] {
                if l.iter().all(|v| *v == 0.0) {
                    continue;
                }
                for i in 0..d {
                    y[i] = x[i] - z[i];
                }
                total -= directional_hessian(profile, &y, l);
            }
            total
        })
        .collect()
}

fn norm(v: &[f64]) -> f64 {
    sqrt(v.iter().map(|a| a * a).sum())
}

/// Largest quadrature spacing used for interaction integrals.
const SPACING: f64 = 0.05;

/// Composite Simpson rule on `[a, b]` with an even number of panels.
fn simpson(a: f64, b: f64, panels: usize, f: impl Fn(f64) -> f64) -> f64 {
    let n = panels + panels % 2;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + i as f64 * h);
    }
    s * h / 3.0
}

/// `∫_{S^{d-1}} e^{-r ω₁} dω`.
fn spherical_exponential(d: usize, r: f64) -> f64 {
    match d {
        1 => 2.0 * libm::cosh(r),
        2 | 4 => {
            // Smooth periodic integrand in θ: the trapezoid rule is spectral.
            let n = 400;
            let h = core::f64::consts::PI / n as f64;
            let mut s = 0.0;
            for i in 0..=n {
                let th = i as f64 * h;
                let w = if i == 0 || i == n { 0.5 } else { 1.0 };
                s += w * exp(-r * cos(th)) * pow(sin(th), d as f64 - 2.0);
            }
            sphere_area(d - 1) * s * h
        }
        _ => {
            // ∫_{-1}^{1} e^{-rt} (1 - t²)^{(d-3)/2} dt, a smooth integrand for odd d.
            let m = (d as f64 - 3.0) / 2.0;
            sphere_area(d - 1) * simpson(-1.0, 1.0, 8000, |t| exp(-r * t) * pow(1.0 - t * t, m))
        }
    }
}

/// `c₁` and `g₀`. Tensor trapezoid over the box `[-r_max, r_max]^d` for
/// `d <= 2`; for `d >= 3` the integrals are reduced to radial quadratures
/// (`c₁ = |S^{d-1}|/d ∫ q'² r^{d-1}`, angular factor of `e^{-x₁}` in closed
/// form or by a one-dimensional rule).
pub fn compute_constants(profile: &GroundStateProfile) -> Result<InteractionConstants> {
    let d = profile.params.d;
    let p = profile.params.p;
    let r_max = profile.r_max();
    let n = libm::ceil(2.0 * r_max / SPACING) as usize;
    let h = 2.0 * r_max / n as f64;
    let coord = |i: usize| -r_max + i as f64 * h;
    let weight = |i: usize| if i == 0 || i == n { 0.5 } else { 1.0 };

    let peak_c1 = {
        let probe = 1.0;
        let (_, dq, _) = profile.evaluate_radial(probe);
        dq * dq
    };
    let peak_g0 = pow(profile.q0(), p);
    let check = |boundary: f64, peak: f64| -> Result<()> {
        let ratio = boundary / peak;
        if ratio >= 1e-12 {
            Err(Error::QuadratureDivergence { boundary_ratio: ratio })
        } else {
            Ok(())
        }
    };

    let (c1, integral) = match d {
        1 => {
            let mut c1 = 0.0;
            let mut gi = 0.0;
            for i in 0..=n {
                let x = coord(i);
                let (q, dq, _) = profile.evaluate_radial(x);
                c1 += weight(i) * dq * dq;
                gi += weight(i) * pow(q, p) * exp(-x);
            }
            let (qb, dqb, _) = profile.evaluate_radial(r_max);
            check(dqb * dqb, peak_c1)?;
            check(pow(qb, p) * exp(r_max), peak_g0)?;
            (c1 * h, gi * h)
        }
        2 => {
            let mut c1 = 0.0;
            let mut gi = 0.0;
            for i in 0..=n {
                let x1 = coord(i);
                let mut row_c = 0.0;
                let mut row_g = 0.0;
                for j in 0..=n {
                    let x2 = coord(j);
                    let r = sqrt(x1 * x1 + x2 * x2);
                    let (q, dq, _) = profile.evaluate_radial(r);
                    let d1 = if r == 0.0 { 0.0 } else { dq * x1 / r };
                    row_c += weight(j) * d1 * d1;
                    row_g += weight(j) * pow(q, p);
                }
                c1 += weight(i) * row_c;
                gi += weight(i) * row_g * exp(-x1);
            }
            let (qb, dqb, _) = profile.evaluate_radial(r_max);
            check(dqb * dqb, peak_c1)?;
            check(pow(qb, p) * exp(r_max), peak_g0)?;
            (c1 * h * h, gi * h * h)
        }
        _ => {
            let panels = libm::ceil(r_max / 0.005) as usize;
            let area = sphere_area(d);
            let m = d as f64 - 1.0;
            let c1 = area / d as f64
                * simpson(0.0, r_max, panels, |r| {
                    let dq = profile.evaluate_radial(r).1;
                    dq * dq * pow(r, m)
                });
            let gi = simpson(0.0, r_max, panels, |r| {
                pow(profile.value(r), p) * pow(r, m) * spherical_exponential(d, r)
            });
            let (qb, dqb, _) = profile.evaluate_radial(r_max);
            check(dqb * dqb * pow(r_max, m), peak_c1)?;
            check(pow(qb, p) * pow(r_max, m) * spherical_exponential(d, r_max), peak_g0)?;
            (c1, gi)
        }
    };
    Ok(InteractionConstants { c1, g0: integral / c1, kappa: profile.kappa })
}

/// Integral over `ℝ^d` of a function of `(x₁, |x'|)`, with `x₁` on
/// `[a, b]` and `|x'| <= rho_max`, by the trapezoid rule with weight
/// `|S^{d-2}| ρ^{d-2}` (plain 1D rule for `d = 1`).
pub fn axisymmetric_integral(
    d: usize,
    a: f64,
    b: f64,
    rho_max: f64,
    spacing: f64,
    f: impl Fn(f64, f64) -> f64,
) -> f64 {
    let nx = libm::ceil((b - a) / spacing) as usize;
    let hx = (b - a) / nx as f64;
    let wx = |i: usize| if i == 0 || i == nx { 0.5 } else { 1.0 };
    if d == 1 {
        return hx * (0..=nx).map(|i| wx(i) * f(a + i as f64 * hx, 0.0)).sum::<f64>();
    }
    let nr = libm::ceil(rho_max / spacing) as usize;
    let hr = rho_max / nr as f64;
    let m = d as f64 - 2.0;
    let mut total = 0.0;
    for i in 0..=nx {
        let x1 = a + i as f64 * hx;
        let mut row = 0.0;
        for j in 0..=nr {
            let rho = j as f64 * hr;
            let wr = if j == 0 || j == nr { 0.5 } else { 1.0 };
            let radial_weight = if m == 0.0 { 1.0 } else { pow(rho, m) };
            row += wr * radial_weight * f(x1, rho);
        }
        // Euler-Maclaurin end correction at ρ = 0, where ρ^{d-2} F is not
        // even for odd d.
        row *= hr;
        if d % 2 == 1 {
            let f0 = f(x1, 0.0);
            let f2 = (f(x1, hr) - f0) / (hr * hr);
            match d {
                3 => row += hr * hr / 12.0 * f0 - pow(hr, 4.0) / 120.0 * f2,
                _ => row -= pow(hr, 4.0) / 120.0 * f0,
            }
        }
        total += wx(i) * row;
    }
    // For d = 2 the transverse variable covers ℝ: |S⁰| = 2 half-lines.
    sphere_area(d - 1) * total * hx
}

/// One row of the projection-asymptotics table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectionRow {
    pub separation: f64,
    /// `⟨G, ∂₁Q₁⟩`.
    pub lhs: f64,
    /// `⟨G, ∂₁Q₂⟩`.
    pub lhs_partner: f64,
    /// `c₁ g(|z|)`.
    pub model: f64,
    pub abs_err: f64,
    pub rel_err: f64,
}

/// Quadrature of `⟨G, ∂₁Q_k⟩` for `z = r e₁` against the model `c₁ g(r)`.
pub fn projection_asymptotics(
    profile: &GroundStateProfile,
    constants: &InteractionConstants,
    separations: &[f64],
) -> Vec<ProjectionRow> {
    separations.iter().map(|&r| projection_row(profile, constants, r)).collect()
}

pub fn projection_row(profile: &GroundStateProfile, constants: &InteractionConstants, r: f64) -> ProjectionRow {
    let d = profile.params.d;
    let f = profile.params.nonlinearity();
    let extent = profile.r_max().min(40.0);
    let spacing = if d == 1 { 0.01 } else { SPACING };
    let project = |x1: f64, rho: f64, sign: f64| -> f64 {
        let y1 = x1 - 0.5 * r;
        let y2 = x1 + 0.5 * r;
        let r1 = sqrt(y1 * y1 + rho * rho);
        let r2 = sqrt(y2 * y2 + rho * rho);
        let (q1, dq1, _) = profile.evaluate_radial(r1);
        let (q2, dq2, _) = profile.evaluate_radial(r2);
        let g = f.f(q1 + q2) - f.f(q1) - f.f(q2);
        let grad = if sign > 0.0 {
            if r1 == 0.0 { 0.0 } else { dq1 * y1 / r1 }
        } else if r2 == 0.0 {
            0.0
        } else {
            dq2 * y2 / r2
        };
        g * grad
    };
    let a = -0.5 * r - extent;
    let b = 0.5 * r + extent;
    let lhs = axisymmetric_integral(d, a, b, extent, spacing, |x, rho| project(x, rho, 1.0));
    let lhs_partner = axisymmetric_integral(d, a, b, extent, spacing, |x, rho| project(x, rho, -1.0));
    let model = constants.c1 * constants.attraction(profile, r);
    let abs_err = abs(lhs - model);
    ProjectionRow { separation: r, lhs, lhs_partner, model, abs_err, rel_err: abs_err / abs(model) }
}

fn pair_integral(profile: &GroundStateProfile, r: f64, integrand: impl Fn(f64, f64) -> f64) -> f64 {
    let d = profile.params.d;
    let extent = profile.r_max().min(40.0);
    let spacing = if d == 1 { 0.01 } else { SPACING };
    axisymmetric_integral(d, -0.5 * r - extent, 0.5 * r + extent, extent, spacing, |x1, rho| {
        let y1 = x1 - 0.5 * r;
        let y2 = x1 + 0.5 * r;
        let q1 = profile.value(sqrt(y1 * y1 + rho * rho));
        let q2 = profile.value(sqrt(y2 * y2 + rho * rho));
        integrand(q1, q2)
    })
}

/// `∫ |Q₁ Q₂|^m` at separation `r`.
pub fn overlap_integral(profile: &GroundStateProfile, r: f64, m: f64) -> f64 {
    pair_integral(profile, r, |a, b| pow(abs(a * b), m))
}

/// `∫ |Q₁| |Q₂|^{1+m}` at separation `r`.
pub fn one_sided_overlap(profile: &GroundStateProfile, r: f64, m: f64) -> f64 {
    pair_integral(profile, r, |a, b| abs(a) * pow(abs(b), 1.0 + m))
}

/// `|∫ F(R) - F(Q₁) - F(Q₂) - f(Q₁)Q₂ - f(Q₂)Q₁|` with `R = Q₁ + Q₂`.
pub fn potential_expansion_error(profile: &GroundStateProfile, r: f64) -> f64 {
    let f = Nonlinearity::new(profile.params.p);
    abs(pair_integral(profile, r, |a, b| {
        f.potential(a + b) - f.potential(a) - f.potential(b) - f.f(a) * b - f.f(b) * a
    }))
}

/// Slope of the least-squares line through `(x, log|y|)`.
pub fn log_linear_slope(x: &[f64], y: &[f64]) -> f64 {
    let ly: Vec<f64> = y.iter().map(|v| log(abs(*v))).collect();
    crate::math::linear_fit(x, &ly).1
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spherical_exponential_closed_forms() {
        let r: f64 = 3.0;
        let pi = core::f64::consts::PI;
        // d = 3: 4π sinh(r)/r.
        assert!((spherical_exponential(3, r) / (4.0 * pi * libm::sinh(r) / r) - 1.0).abs() < 1e-10);
        // d = 2: 2π I₀(r), I₀(3) = 4.880792585865024.
        assert!((spherical_exponential(2, r) / (2.0 * pi * 4.880792585865024) - 1.0).abs() < 1e-12);
        // Small r limit is the sphere area.
        for d in 2..=5 {
            assert!((spherical_exponential(d, 1e-9) / sphere_area(d) - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn axisymmetric_integral_of_gaussian() {
        let pi = core::f64::consts::PI;
        for d in 1..=5 {
            let v = axisymmetric_integral(d, -10.0, 10.0, 10.0, 0.05, |x, rho| exp(-(x * x + rho * rho)));
            let exact = pow(pi, d as f64 / 2.0);
            let tol = 1e-8;
            assert!((v / exact - 1.0).abs() < tol, "d = {d}: {v} vs {exact}");
        }
    }
}
