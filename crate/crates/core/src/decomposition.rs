//! Modulation of a 1D field around one or two solitons.
//!
//! ```text
//! u = Σ_k Q(x - z_k) + ε,   v = -Σ_k ℓ_k Q'(x - z_k) + η,
//! ⟨ε, Q'_k⟩ = ⟨η, Q'_k⟩ = 0,
//! a_k^± = ±ν₀⟨ε, Y_k⟩ + ⟨η, Y_k⟩.
//! ```
//!
//! Inner products are trapezoid sums on the field grid, with templates
//! sampled on the same nodes.

use alloc::vec;
use alloc::vec::Vec;

use crate::interaction::InteractionConstants;
use crate::lattice::{Grid, Shifted, Template};
use crate::math::{abs, log, solve_dense, sqrt, symmetric_condition, Nonlinearity};
use crate::reduced::{terminal_data, ModulationState};
use crate::{Error, Result};

/// Field pair `(u, ∂ₜu)` on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldState {
    pub grid: Grid,
    pub t: f64,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

impl FieldState {
    pub fn zeros(grid: Grid, t: f64) -> Self {
        Self { grid, t, u: vec![0.0; grid.len()], v: vec![0.0; grid.len()] }
    }

    /// Ratio of the largest boundary-adjacent amplitude to the interior
    /// maximum (the localization check).
    pub fn boundary_ratio(&self) -> f64 {
        let n = self.u.len();
        let interior = self.u.iter().chain(&self.v).fold(0.0f64, |a, v| a.max(abs(*v)));
        let edge = [self.u[1], self.u[n - 2], self.v[1], self.v[n - 2]].iter().fold(0.0f64, |a, v| a.max(abs(*v)));
        if interior == 0.0 {
            0.0
        } else {
            edge / interior
        }
    }

    pub fn is_finite(&self) -> bool {
        self.u.iter().chain(&self.v).all(|v| v.is_finite())
    }

    /// `x -> -x`.
    pub fn reflected(&self) -> Self {
        let mut u = self.u.clone();
        let mut v = self.v.clone();
        u.reverse();
        v.reverse();
        Self { grid: self.grid, t: self.t, u, v }
    }
}

/// Result of [`modulate`].
#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    pub t: f64,
    pub z: Vec<f64>,
    pub l: Vec<f64>,
    pub eps: Vec<f64>,
    pub eta: Vec<f64>,
    pub a_minus: Vec<f64>,
    pub a_plus: Vec<f64>,
    /// `‖ε̄‖_E = (‖ε‖²_{H¹} + ‖η‖²)^{1/2}`.
    pub energy_norm: f64,
    /// Largest `|⟨ε, Q'_k⟩|`, `|⟨η, Q'_k⟩|`.
    pub orthogonality: f64,
    pub newton_steps: usize,
    pub templates: Vec<Shifted>,
}

impl Decomposition {
    /// Parameters as a [`ModulationState`] (two solitons only).
    pub fn params(&self) -> Option<ModulationState> {
        if self.z.len() != 2 {
            return None;
        }
        Some(ModulationState { t: self.t, z1: vec![self.z[0]], z2: vec![self.z[1]], l1: vec![self.l[0]], l2: vec![self.l[1]] })
    }

    pub fn separation(&self) -> f64 {
        if self.z.len() == 2 {
            abs(self.z[0] - self.z[1])
        } else {
            f64::INFINITY
        }
    }
}

fn template_sum(grid: &Grid, shifted: &[Shifted]) -> Vec<f64> {
    let mut r = vec![0.0; grid.len()];
    for s in shifted {
        for (ri, qi) in r.iter_mut().zip(&s.q) {
            *ri += qi;
        }
    }
    r
}

/// `a_k^± = ±ν₀⟨ε, Y_k⟩ + ⟨η, Y_k⟩` for each sampled `Y_k`.
pub fn unstable_coordinates(grid: &Grid, eps: &[f64], eta: &[f64], ys: &[&[f64]], nu0: f64) -> (Vec<f64>, Vec<f64>) {
    let mut minus = Vec::with_capacity(ys.len());
    let mut plus = Vec::with_capacity(ys.len());
    for y in ys {
        let ey = grid.inner(eps, y);
        let hy = grid.inner(eta, y);
        minus.push(-nu0 * ey + hy);
        plus.push(nu0 * ey + hy);
    }
    (minus, plus)
}

const MAX_NEWTON: usize = 25;
const MAX_CONDITION: f64 = 1e8;
const MIN_SEPARATION: f64 = 2.0;

/// Newton on the centres, then a linear solve for the velocities.
///
/// `guess` holds one centre per soliton (one or two).
pub fn modulate_centres<T: Template>(field: &FieldState, guess: &[f64], template: &T, tol: f64) -> Result<Decomposition> {
    let k = guess.len();
    if !(1..=2).contains(&k) {
        return Err(Error::InvalidParams("modulation supports one or two solitons"));
    }
    if k == 2 && abs(guess[0] - guess[1]) < MIN_SEPARATION {
        return Err(Error::IllConditioned { condition: f64::INFINITY });
    }
    let grid = &field.grid;
    let mut z = guess.to_vec();
    let mut steps = 0;
    let (shifted, eps) = loop {
        let shifted: Vec<Shifted> = z.iter().map(|&zk| template.sample(grid, zk)).collect();
        let r = template_sum(grid, &shifted);
        let eps: Vec<f64> = field.u.iter().zip(&r).map(|(u, r)| u - r).collect();
        let residual: Vec<f64> = shifted.iter().map(|s| grid.inner(&eps, &s.dq)).collect();
        let worst = residual.iter().fold(0.0f64, |a, v| a.max(abs(*v)));
        let scale = sqrt(grid.h1_squared(&eps));
        if worst <= tol * scale + 1e-14 {
            break (shifted, eps);
        }
        if steps == MAX_NEWTON {
            return Err(Error::OutsideTube { residual: worst });
        }
        // ∂F_i/∂z_j = ⟨Q'_j, Q'_i⟩ - δ_ij ⟨ε, Q''_i⟩.
        let mut jac = vec![0.0; k * k];
        for i in 0..k {
            for j in 0..k {
                jac[i * k + j] = grid.inner(&shifted[j].dq, &shifted[i].dq);
            }
            jac[i * k + i] -= grid.inner(&eps, &shifted[i].d2q);
        }
        let mut delta: Vec<f64> = residual.iter().map(|v| -v).collect();
        solve_dense(&mut jac, &mut delta, k).ok_or(Error::OutsideTube { residual: worst })?;
        for (zi, di) in z.iter_mut().zip(&delta) {
            *zi += di;
        }
        if z.iter().any(|v| !v.is_finite()) || (k == 2 && abs(z[0] - z[1]) < MIN_SEPARATION) {
            return Err(Error::OutsideTube { residual: worst });
        }
        steps += 1;
    };
    let mut gram = vec![0.0; k * k];
    for i in 0..k {
        for j in 0..k {
            gram[i * k + j] = grid.inner(&shifted[i].dq, &shifted[j].dq);
        }
    }
    let condition = symmetric_condition(&gram, k);
    if !(condition <= MAX_CONDITION) {
        return Err(Error::IllConditioned { condition });
    }
    let mut l: Vec<f64> = shifted.iter().map(|s| -grid.inner(&field.v, &s.dq)).collect();
    solve_dense(&mut gram, &mut l, k).ok_or(Error::IllConditioned { condition })?;
    let mut eta = field.v.clone();
    for (s, lk) in shifted.iter().zip(&l) {
        for (e, dq) in eta.iter_mut().zip(&s.dq) {
            *e += lk * dq;
        }
    }
    let orthogonality = shifted
        .iter()
        .flat_map(|s| [grid.inner(&eps, &s.dq), grid.inner(&eta, &s.dq)])
        .fold(0.0f64, |a, v| a.max(abs(v)));
    let ys: Vec<&[f64]> = shifted.iter().map(|s| s.y.as_slice()).collect();
    let (a_minus, a_plus) = unstable_coordinates(grid, &eps, &eta, &ys, template.nu0());
    let energy_norm = sqrt(grid.h1_squared(&eps) + grid.inner(&eta, &eta));
    Ok(Decomposition {
        t: field.t,
        z,
        l,
        eps,
        eta,
        a_minus,
        a_plus,
        energy_norm,
        orthogonality,
        newton_steps: steps,
        templates: shifted,
    })
}

/// Two-soliton modulation seeded by `guess` (1D states).
pub fn modulate<T: Template>(field: &FieldState, guess: &ModulationState, template: &T, tol: f64) -> Result<Decomposition> {
    if guess.dim() != 1 {
        return Err(Error::InvalidParams("field decomposition is one-dimensional"));
    }
    modulate_centres(field, &[guess.z1[0], guess.z2[0]], template, tol)
}

/// Which unstable coordinate a preparation sets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// Sets `a_k^-`, keeps `a_k^+ = 0`: `W̄ = (W, -ν₀W)`, `⟨W, Y_k⟩ = β a_k`.
    Stable,
    /// Sets `a_k^+`, keeps `a_k^- = 0`: `W̄ = (W, ν₀W)`, `⟨W, Y_k⟩ = -β a_k`.
    Unstable,
}

/// Linear preparation map for fixed centres.
#[derive(Debug, Clone, PartialEq)]
pub struct WMap {
    /// `B_k(e_j)`, row-major `K×K`.
    pub b: Vec<f64>,
    /// `V_k(e_j)`, row-major `K×K`.
    pub v: Vec<f64>,
    pub condition: f64,
    pub beta: f64,
    templates: Vec<Shifted>,
}

impl WMap {
    /// Solves the Gram system `⟨W, Q'_j⟩ = 0`, `⟨W, Y_j⟩ = β δ_ij` for each
    /// unit vector, with `W = Σ_k B_k Y_k + V_k Q'_k`.
    pub fn new<T: Template>(grid: &Grid, z: &[f64], template: &T) -> Result<Self> {
        let k = z.len();
        let templates: Vec<Shifted> = z.iter().map(|&zk| template.sample(grid, zk)).collect();
        let basis: Vec<&[f64]> =
            templates.iter().map(|s| s.y.as_slice()).chain(templates.iter().map(|s| s.dq.as_slice())).collect();
        let n = 2 * k;
        let mut gram = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                gram[i * n + j] = grid.inner(basis[i], basis[j]);
            }
        }
        let condition = symmetric_condition(&gram, n);
        if !(condition <= MAX_CONDITION) {
            return Err(Error::IllConditioned { condition });
        }
        let beta = -1.0 / (2.0 * template.nu0());
        let mut b = vec![0.0; k * k];
        let mut v = vec![0.0; k * k];
        for j in 0..k {
            let mut a = gram.clone();
            let mut rhs = vec![0.0; n];
            rhs[j] = beta;
            solve_dense(&mut a, &mut rhs, n).ok_or(Error::IllConditioned { condition })?;
            for i in 0..k {
                b[i * k + j] = rhs[i];
                v[i * k + j] = rhs[k + i];
            }
        }
        Ok(Self { b, v, condition, beta, templates })
    }

    /// `‖B - β Id‖` in the max norm.
    pub fn deviation(&self) -> f64 {
        let k = self.templates.len();
        (0..k * k)
            .map(|idx| abs(self.b[idx] - if idx / k == idx % k { self.beta } else { 0.0 }))
            .fold(0.0, f64::max)
    }

    /// The pair `W̄(a)` on the grid.
    pub fn apply(&self, grid: &Grid, a: &[f64], direction: Direction, nu0: f64) -> (Vec<f64>, Vec<f64>) {
        let k = self.templates.len();
        let sign = match direction {
            Direction::Stable => 1.0,
            Direction::Unstable => -1.0,
        };
        let mut w = vec![0.0; grid.len()];
        for i in 0..k {
            let bi: f64 = (0..k).map(|j| self.b[i * k + j] * a[j]).sum::<f64>() * sign;
            let vi: f64 = (0..k).map(|j| self.v[i * k + j] * a[j]).sum::<f64>() * sign;
            let s = &self.templates[i];
            for (wn, (y, dq)) in w.iter_mut().zip(s.y.iter().zip(&s.dq)) {
                *wn += bi * y + vi * dq;
            }
        }
        let vel = w.iter().map(|x| -sign * nu0 * x).collect();
        (w, vel)
    }
}

/// `W̄(a)` for centres `z`.
pub fn prepare_w<T: Template>(grid: &Grid, z: &[f64], a: &[f64], direction: Direction, template: &T) -> Result<(Vec<f64>, Vec<f64>)> {
    if a.len() != z.len() {
        return Err(Error::InvalidParams("one coefficient per soliton"));
    }
    let map = WMap::new(grid, z, template)?;
    Ok(map.apply(grid, a, direction, template.nu0()))
}

/// Solitons at `params` plus `W̄(a)`.
pub fn initial_data_from<T: Template>(
    grid: Grid,
    params: &ModulationState,
    a: &[f64],
    direction: Direction,
    template: &T,
) -> Result<FieldState> {
    if params.dim() != 1 {
        return Err(Error::InvalidParams("field data are one-dimensional"));
    }
    let z = [params.z1[0], params.z2[0]];
    let l = [params.l1[0], params.l2[0]];
    let (w, wv) = prepare_w(&grid, &z, a, direction, template)?;
    let mut state = FieldState { grid, t: params.t, u: w, v: wv };
    for (zk, lk) in z.iter().zip(&l) {
        let s = template.sample(&grid, *zk);
        for i in 0..grid.len() {
            state.u[i] += s.q[i];
            state.v[i] -= lk * s.dq[i];
        }
    }
    Ok(state)
}

/// Symmetric pair at separation `zbar` moving along the log-distance orbit,
/// plus `W̄(a)`; the field time is 0.
pub fn build_initial_data<T: Template>(
    grid: Grid,
    zbar: f64,
    a: &[f64],
    direction: Direction,
    constants: &InteractionConstants,
    template: &T,
) -> Result<FieldState> {
    if zbar < 10.0 {
        return Err(Error::InvalidParams("initial separation must be at least 10"));
    }
    let params = terminal_data(0.0, zbar, 1, constants);
    initial_data_from(grid, &params, a, direction, template)
}

/// The functionals `E`, `J`, `S` and `W = E + 2J - 2S`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FunctionalReport {
    pub e: f64,
    pub j: f64,
    pub s: f64,
    pub w: f64,
    /// `cutoff_scale / 8`: support radius of each `χ_k`.
    pub cutoff_radius: f64,
}

/// Degree-7 smoothstep cutoff: `1` on `[0, 1/10]`, `0` on `[1/8, ∞)`.
pub fn cutoff(s: f64) -> f64 {
    const A: f64 = 0.1;
    const B: f64 = 0.125;
    if s <= A {
        1.0
    } else if s >= B {
        0.0
    } else {
        let x = (s - A) / (B - A);
        let x4 = x * x * x * x;
        1.0 - x4 * (35.0 - 84.0 * x + 70.0 * x * x - 20.0 * x * x * x)
    }
}

/// Default cutoff scale `log t`.
pub fn default_cutoff_scale(t: f64) -> f64 {
    log(t)
}

pub fn functionals(dec: &Decomposition, grid: &Grid, nonlinearity: Nonlinearity, cutoff_scale: f64) -> FunctionalReport {
    let f = nonlinearity;
    let n = grid.len();
    let h = grid.h;
    let r = template_sum(grid, &dec.templates);
    let eps = &dec.eps;
    let eta = &dec.eta;
    let mut e = 0.0;
    for i in 0..n - 1 {
        let d = (eps[i + 1] - eps[i]) / h;
        e += d * d;
    }
    let mut j_total = 0.0;
    let mut s_total = 0.0;
    for i in 1..n - 1 {
        let (ri, ei) = (r[i], eps[i]);
        e += ei * ei + eta[i] * eta[i] - 2.0 * (f.potential(ri + ei) - f.potential(ri) - f.f(ri) * ei);
        let grad = (eps[i + 1] - eps[i - 1]) / (2.0 * h);
        let mut g = f.f(ri);
        let mut d = 0.0;
        for (s, lk) in dec.templates.iter().zip(&dec.l) {
            g -= f.f(s.q[i]);
            d -= lk * lk * s.d2q[i];
            let chi = cutoff(abs(grid.x(i) - s.z) / cutoff_scale);
            j_total += lk * grad * eta[i] * chi;
        }
        s_total += (g + d) * ei;
    }
    let (e, j, s) = (e * h, j_total * h, s_total * h);
    FunctionalReport { e, j, s, w: e + 2.0 * j - 2.0 * s, cutoff_radius: cutoff_scale / 8.0 }
}
