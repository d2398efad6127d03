//! Finite-dimensional modulation dynamics
//!
//! ```text
//! ż_k = ℓ_k,   ℓ̇_k = (-1)^k (z/|z|) g(|z|),   z = z₁ - z₂,
//! ```
//!
//! the scalar model `z̈ = -2e^{-z}`, and backward shooting from terminal data
//! at `T_n` onto the orbit with `|z(t)| ≈ 2 log t`.

use alloc::vec;
use alloc::vec::Vec;

use crate::groundstate::GroundStateProfile;
use crate::interaction::InteractionConstants;
use crate::math::{abs, exp, log, pow, sqrt};
use crate::ode::{DormandPrince, OdeSystem, Tolerances};
use crate::{Error, Result};

/// Attraction law entering the reduced equations.
pub trait Attraction {
    fn g(&self, r: f64) -> f64;
}

/// `g(r) = g₀ q(r)` from a computed profile.
#[derive(Debug, Clone, Copy)]
pub struct ProfileAttraction<'a> {
    pub profile: &'a GroundStateProfile,
    pub g0: f64,
}

impl<'a> ProfileAttraction<'a> {
    pub fn new(profile: &'a GroundStateProfile, constants: &InteractionConstants) -> Self {
        Self { profile, g0: constants.g0 }
    }
}

impl Attraction for ProfileAttraction<'_> {
    fn g(&self, r: f64) -> f64 {
        self.g0 * self.profile.value(r)
    }
}

/// `g(r) = e^{-r}`, which reduces the 1D system to the model ODE.
#[derive(Debug, Clone, Copy, Default)]
pub struct ExponentialAttraction;

impl Attraction for ExponentialAttraction {
    fn g(&self, r: f64) -> f64 {
        exp(-r)
    }
}

/// No coupling: straight-line motion.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoAttraction;

impl Attraction for NoAttraction {
    fn g(&self, _r: f64) -> f64 {
        0.0
    }
}

/// Soliton centres and velocity parameters at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModulationState {
    pub t: f64,
    pub z1: Vec<f64>,
    pub z2: Vec<f64>,
    pub l1: Vec<f64>,
    pub l2: Vec<f64>,
}

impl ModulationState {
    /// Symmetric state `(z/2, -z/2, ℓ/2, -ℓ/2)`.
    pub fn symmetric(t: f64, z: &[f64], l: &[f64]) -> Self {
        Self {
            t,
            z1: z.iter().map(|v| 0.5 * v).collect(),
            z2: z.iter().map(|v| -0.5 * v).collect(),
            l1: l.iter().map(|v| 0.5 * v).collect(),
            l2: l.iter().map(|v| -0.5 * v).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.z1.len()
    }

    pub fn z(&self) -> Vec<f64> {
        self.z1.iter().zip(&self.z2).map(|(a, b)| a - b).collect()
    }

    pub fn l(&self) -> Vec<f64> {
        self.l1.iter().zip(&self.l2).map(|(a, b)| a - b).collect()
    }

    pub fn separation(&self) -> f64 {
        sqrt(self.z1.iter().zip(&self.z2).map(|(a, b)| (a - b) * (a - b)).sum())
    }

    /// `|ℓ|` with `ℓ = ℓ₁ - ℓ₂`.
    pub fn relative_speed(&self) -> f64 {
        sqrt(self.l().iter().map(|v| v * v).sum())
    }

    pub fn is_symmetric(&self) -> bool {
        self.z1.iter().zip(&self.z2).all(|(a, b)| *a == -*b) && self.l1.iter().zip(&self.l2).all(|(a, b)| *a == -*b)
    }

    fn pack(&self) -> Vec<f64> {
        let mut y = Vec::with_capacity(4 * self.dim());
        y.extend_from_slice(&self.z1);
        y.extend_from_slice(&self.z2);
        y.extend_from_slice(&self.l1);
        y.extend_from_slice(&self.l2);
        y
    }

    fn unpack(t: f64, y: &[f64]) -> Self {
        let d = y.len() / 4;
        Self {
            t,
            z1: y[..d].to_vec(),
            z2: y[d..2 * d].to_vec(),
            l1: y[2 * d..3 * d].to_vec(),
            l2: y[3 * d..].to_vec(),
        }
    }
}

fn rhs_packed<A: Attraction>(attraction: &A, y: &[f64], dy: &mut [f64]) {
    let d = y.len() / 4;
    let mut sep2 = 0.0;
    for i in 0..d {
        let zi = y[i] - y[d + i];
        sep2 += zi * zi;
    }
    let sep = sqrt(sep2);
    let g = attraction.g(sep);
    for i in 0..d {
        dy[i] = y[2 * d + i];
        dy[d + i] = y[3 * d + i];
        let dir = (y[i] - y[d + i]) / sep;
        dy[2 * d + i] = -dir * g;
        dy[3 * d + i] = dir * g;
    }
}

/// Time derivative of the reduced system.
pub fn reduced_rhs<A: Attraction>(state: &ModulationState, attraction: &A) -> Result<ModulationState> {
    let sep = state.separation();
    if sep <= 1.0 {
        return Err(Error::SeparationFloor { separation: sep });
    }
    let y = state.pack();
    let mut dy = vec![0.0; y.len()];
    rhs_packed(attraction, &y, &mut dy);
    Ok(ModulationState::unpack(state.t, &dy))
}

struct ReducedSystem<'a, A> {
    dim: usize,
    attraction: &'a A,
}

impl<A: Attraction> OdeSystem for ReducedSystem<'_, A> {
    fn dim(&self) -> usize {
        self.dim
    }
    fn rhs(&self, _t: f64, y: &[f64], dy: &mut [f64]) {
        rhs_packed(self.attraction, y, dy)
    }
}

/// Accepted steps of an integration, possibly truncated.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub states: Vec<ModulationState>,
    /// Why the run stopped before the requested final time, if it did.
    pub stop: Option<Error>,
}

impl Trajectory {
    pub fn last(&self) -> &ModulationState {
        self.states.last().unwrap()
    }
}

const SEPARATION_FLOOR: f64 = 1.0;

/// Locates `t` in `[a, b]` inside the last step of `dp` where `phi` changes
/// sign, by bisection on the Hermite interpolant.
fn locate<S: OdeSystem>(dp: &DormandPrince<S>, mut a: f64, mut b: f64, phi: impl Fn(&[f64]) -> f64) -> (f64, Vec<f64>) {
    let mut y = vec![0.0; dp.y().len()];
    dp.interpolate(a, &mut y);
    let fa = phi(&y);
    for _ in 0..100 {
        let m = 0.5 * (a + b);
        dp.interpolate(m, &mut y);
        if (phi(&y) > 0.0) == (fa > 0.0) {
            a = m;
        } else {
            b = m;
        }
        if abs(b - a) <= 1e-14 * abs(b).max(1.0) {
            break;
        }
    }
    dp.interpolate(b, &mut y);
    (b, y)
}

/// First of a few sample times in the last step where `phi <= 0`; a long
/// step can pass through the floor and out again.
fn first_dip<S: OdeSystem>(dp: &DormandPrince<S>, phi: impl Fn(&[f64]) -> f64) -> Option<f64> {
    const SAMPLES: usize = 16;
    let mut y = vec![0.0; dp.y().len()];
    let (a, b) = (dp.t_prev(), dp.t());
    (1..=SAMPLES).map(|i| a + (b - a) * i as f64 / SAMPLES as f64).find(|&t| {
        dp.interpolate(t, &mut y);
        phi(&y) <= 0.0
    })
}

/// Integrates from `state0.t` to `t1` (forward or backward), recording every
/// accepted step. Runs that reach `|z| = 1` are truncated there.
pub fn integrate_reduced<A: Attraction>(state0: &ModulationState, t1: f64, tol: f64, attraction: &A) -> Result<Trajectory> {
    let sep = state0.separation();
    if sep <= SEPARATION_FLOOR {
        return Err(Error::SeparationFloor { separation: sep });
    }
    let d = state0.dim();
    let sys = ReducedSystem { dim: 4 * d, attraction };
    let mut dp = DormandPrince::new(sys, state0.t, &state0.pack(), Tolerances { rtol: tol, atol: tol * 1e-3 });
    let mut states = vec![state0.clone()];
    let separation = |y: &[f64]| -> f64 { sqrt((0..d).map(|i| (y[i] - y[d + i]) * (y[i] - y[d + i])).sum()) };
    while dp.t() != t1 {
        dp.step(t1)?;
        if let Some(b) = first_dip(&dp, |y| separation(y) - SEPARATION_FLOOR) {
            let (t, y) = locate(&dp, dp.t_prev(), b, |y| separation(y) - SEPARATION_FLOOR);
            states.push(ModulationState::unpack(t, &y));
            return Ok(Trajectory { states, stop: Some(Error::SeparationFloor { separation: SEPARATION_FLOOR }) });
        }
        states.push(ModulationState::unpack(dp.t(), dp.y()));
    }
    Ok(Trajectory { states, stop: None })
}

/// Reduced states at the requested (monotone) `times`.
pub fn sample_reduced<A: Attraction>(state0: &ModulationState, times: &[f64], tol: f64, attraction: &A) -> Result<Vec<ModulationState>> {
    let d = state0.dim();
    let sys = ReducedSystem { dim: 4 * d, attraction };
    let mut dp = DormandPrince::new(sys, state0.t, &state0.pack(), Tolerances { rtol: tol, atol: tol * 1e-3 });
    let mut out = Vec::with_capacity(times.len());
    for &t in times {
        dp.advance_to(t)?;
        out.push(ModulationState::unpack(t, dp.y()));
    }
    Ok(out)
}

/// Samples of the model ODE `z̈ = -2e^{-z}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelTrajectory {
    pub t: Vec<f64>,
    pub z: Vec<f64>,
    pub v: Vec<f64>,
    /// `Some(CollisionReached)` when `z` came back down through 0.
    pub stop: Option<Error>,
}

impl ModelTrajectory {
    /// `½ż² - 2e^{-z}` at every sample.
    pub fn first_integral(&self) -> Vec<f64> {
        self.z.iter().zip(&self.v).map(|(z, v)| model_first_integral(*z, *v)).collect()
    }
}

pub fn model_first_integral(z: f64, v: f64) -> f64 {
    0.5 * v * v - 2.0 * exp(-z)
}

struct ModelSystem;

impl OdeSystem for ModelSystem {
    fn dim(&self) -> usize {
        2
    }
    fn rhs(&self, _t: f64, y: &[f64], dy: &mut [f64]) {
        dy[0] = y[1];
        dy[1] = -2.0 * exp(-y[0]);
    }
}

/// Integrates `z̈ = -2e^{-z}` from `(z0, v0)` at `t0` to `t1`.
pub fn model_flow(z0: f64, v0: f64, t0: f64, t1: f64, tol: f64) -> Result<ModelTrajectory> {
    if t0 < 0.5 {
        return Err(Error::InvalidParams("model flow starts at t0 >= 1/2"));
    }
    let mut dp = DormandPrince::new(ModelSystem, t0, &[z0, v0], Tolerances { rtol: tol, atol: tol * 1e-2 });
    let mut out = ModelTrajectory { t: vec![t0], z: vec![z0], v: vec![v0], stop: None };
    while dp.t() != t1 {
        dp.step(t1)?;
        let y = dp.y();
        if y[0] < 0.0 && y[1] < 0.0 && dp.y_prev()[0] >= 0.0 {
            let (t, y) = locate(&dp, dp.t_prev(), dp.t(), |y| y[0]);
            out.t.push(t);
            out.z.push(y[0]);
            out.v.push(y[1]);
            out.stop = Some(Error::CollisionReached { t });
            return Ok(out);
        }
        out.t.push(dp.t());
        out.z.push(y[0]);
        out.v.push(y[1]);
    }
    Ok(out)
}

/// `ζ = (κg₀)^{-1/2} |z|^{(d-1)/4} e^{|z|/2}`.
pub fn zeta(separation: f64, d: usize, kappa_g0: f64) -> f64 {
    pow(separation, (d as f64 - 1.0) / 4.0) * exp(0.5 * separation) / sqrt(kappa_g0)
}

/// Inverse of [`zeta`] on `|z| > 1`.
pub fn separation_for_zeta(target: f64, d: usize, kappa_g0: f64) -> f64 {
    // log ζ = (d-1)/4 log r + r/2 - ½ log κg₀ is increasing for r > 0.
    let goal = log(target) + 0.5 * log(kappa_g0);
    let m = (d as f64 - 1.0) / 4.0;
    let mut r = (2.0 * goal).max(2.0);
    for _ in 0..60 {
        let phi = m * log(r) + 0.5 * r - goal;
        let dphi = m / r + 0.5;
        let step = phi / dphi;
        r -= step;
        if abs(step) <= 1e-15 * r {
            break;
        }
    }
    r
}

/// Half-width `t log^{-1/2} t` of the bootstrap band.
pub fn band_width(t: f64) -> f64 {
    t / sqrt(log(t))
}

/// Symmetric state at `T_n` with `|z| = zbar` along `e₁` and velocities
/// `ℓ_k = (-1)^{k+1} √(κg₀) zbar^{-(d-1)/4} e^{-zbar/2} e₁`.
pub fn terminal_data(tn: f64, zbar: f64, d: usize, constants: &InteractionConstants) -> ModulationState {
    let kg = constants.kappa * constants.g0;
    let speed = sqrt(kg) * pow(zbar, -(d as f64 - 1.0) / 4.0) * exp(-0.5 * zbar);
    let mut z1 = vec![0.0; d];
    let mut l1 = vec![0.0; d];
    z1[0] = 0.5 * zbar;
    l1[0] = speed;
    ModulationState { t: tn, z2: z1.iter().map(|v| -v).collect(), l2: l1.iter().map(|v| -v).collect(), z1, l1 }
}

/// Side of the band a backward run ends on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandExit {
    /// Sign of `ζ - t` at exit (or at `T_0` if the run stayed inside).
    pub side: f64,
    /// Exit time, `None` if the band held down to `T_0`.
    pub time: Option<f64>,
}

/// Backward run from `T_n` to `T_0` for one `ζ̂`.
#[derive(Debug, Clone, PartialEq)]
pub struct ShotRun {
    pub zeta_hat: f64,
    pub zbar: f64,
    pub exit: BandExit,
    pub trajectory: Trajectory,
}

/// Geometry and constants of a backward shooting problem.
#[derive(Debug, Clone, Copy)]
pub struct ShootingWindow<'a, A> {
    pub t0: f64,
    pub tn: f64,
    pub d: usize,
    pub constants: InteractionConstants,
    pub attraction: &'a A,
    pub tol: f64,
}

impl<A: Attraction> ShootingWindow<'_, A> {
    fn kappa_g0(&self) -> f64 {
        self.constants.kappa * self.constants.g0
    }

    /// `ζ(t) - t` along a state.
    pub fn deviation(&self, state: &ModulationState) -> f64 {
        zeta(state.separation(), self.d, self.kappa_g0()) - state.t
    }

    /// Terminal separation for `ζ(T_n) = T_n + ζ̂ T_n log^{-1/2} T_n`.
    pub fn zbar(&self, zeta_hat: f64) -> f64 {
        separation_for_zeta(self.tn + zeta_hat * band_width(self.tn), self.d, self.kappa_g0())
    }

    /// Integrates backward from `T_n`, stopping at the first band exit.
    pub fn run(&self, zeta_hat: f64) -> Result<ShotRun> {
        let zbar = self.zbar(zeta_hat);
        let state = terminal_data(self.tn, zbar, self.d, &self.constants);
        let sys = ReducedSystem { dim: 4 * self.d, attraction: self.attraction };
        let mut dp = DormandPrince::new(sys, self.tn, &state.pack(), Tolerances { rtol: self.tol, atol: self.tol * 1e-3 });
        let mut states = vec![state];
        while dp.t() > self.t0 {
            dp.step(self.t0)?;
            let s = ModulationState::unpack(dp.t(), dp.y());
            let dev = self.deviation(&s);
            let sep = s.separation();
            if sep <= SEPARATION_FLOOR || abs(dev) > band_width(s.t) {
                let side = if sep <= SEPARATION_FLOOR { -1.0 } else { dev.signum() };
                let time = s.t;
                states.push(s);
                return Ok(ShotRun {
                    zeta_hat,
                    zbar,
                    exit: BandExit { side, time: Some(time) },
                    trajectory: Trajectory { states, stop: None },
                });
            }
            states.push(s);
        }
        let dev = self.deviation(states.last().unwrap());
        Ok(ShotRun {
            zeta_hat,
            zbar,
            exit: BandExit { side: if dev >= 0.0 { 1.0 } else { -1.0 }, time: None },
            trajectory: Trajectory { states, stop: None },
        })
    }
}

/// Outcome of [`exceptional_shoot`].
#[derive(Debug, Clone, PartialEq)]
pub struct ShootResult {
    pub zeta_hat: f64,
    pub zbar: f64,
    pub iterations: usize,
    pub bracket: (f64, f64),
    pub run: ShotRun,
    /// Exits of the bracket end points `ζ̂ = ∓1`.
    pub lower_exit: BandExit,
    pub upper_exit: BandExit,
}

/// Bisection over `ζ̂ ∈ [-1, 1]` on the side of the band through which the
/// backward run leaves.
pub fn exceptional_shoot<A: Attraction>(window: &ShootingWindow<'_, A>, zeta_tol: f64) -> Result<ShootResult> {
    if window.tn / window.t0 < 10.0 {
        return Err(Error::InvalidParams("shooting needs T_n / T_0 >= 10"));
    }
    let mut lo = -1.0;
    let mut hi = 1.0;
    let lower = window.run(lo)?;
    let upper = window.run(hi)?;
    if lower.exit.side == upper.exit.side {
        return Err(Error::NoDichotomy);
    }
    let lo_side = lower.exit.side;
    let mut iterations = 0;
    while hi - lo > zeta_tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        iterations += 1;
        let run = window.run(mid)?;
        if run.exit.side == lo_side {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let zeta_hat = 0.5 * (lo + hi);
    let run = window.run(zeta_hat)?;
    Ok(ShootResult {
        zeta_hat,
        zbar: run.zbar,
        iterations,
        bracket: (lo, hi),
        run,
        lower_exit: lower.exit,
        upper_exit: upper.exit,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zeta_inverse_round_trip() {
        for d in 1..=5 {
            for &t in &[50.0, 1e3, 1e4] {
                let r = separation_for_zeta(t, d, 7.5);
                assert!((zeta(r, d, 7.5) / t - 1.0).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn exponential_attraction_gives_model_equation() {
        let state = ModulationState::symmetric(1.0, &[3.0], &[0.4]);
        let rate = reduced_rhs(&state, &ExponentialAttraction).unwrap();
        let zdd = rate.l1[0] - rate.l2[0];
        assert!((zdd + 2.0 * exp(-3.0)).abs() < 1e-16);
    }

    #[test]
    fn floor_is_enforced() {
        let state = ModulationState::symmetric(0.0, &[0.9], &[0.0]);
        assert!(matches!(reduced_rhs(&state, &NoAttraction), Err(Error::SeparationFloor { .. })));
        let state = ModulationState::symmetric(0.0, &[3.0], &[-1.0]);
        let traj = integrate_reduced(&state, 5.0, 1e-10, &NoAttraction).unwrap();
        assert!(matches!(traj.stop, Some(Error::SeparationFloor { .. })));
        assert!((traj.last().t - 2.0).abs() < 1e-10);
    }
}
