//! Energy-conserving finite differences for the 1D equation and the
//! PDE-level experiments built on them.
//!
//! ```text
//! (u^{n+1} - 2u^n + u^{n-1})/dt² = Δ_h u^n - u^n + [F(u^{n+1}) - F(u^{n-1})]/(u^{n+1} - u^{n-1})
//! ```
//!
//! Multiplying by `u^{n+1} - u^{n-1}` and summing shows that
//!
//! ```text
//! H^{n+1/2} = ½ Σ h [ (D_t u)² + D⁺u^{n+1} D⁺u^n + u^{n+1}u^n - F(u^{n+1}) - F(u^n) ]
//! ```
//!
//! is constant up to the accuracy of the per-node implicit solves.

use alloc::vec;
use alloc::vec::Vec;

use crate::decomposition::{initial_data_from, modulate_centres, unstable_coordinates, Decomposition, Direction, FieldState};
use crate::decomposition::{functionals, FunctionalReport};
use crate::lattice::{Grid, Template};
use crate::math::{abs, linear_fit, log, sqrt, Nonlinearity};
use crate::ode::{DormandPrince, OdeSystem, Tolerances};
use crate::reduced::ModulationState;
use crate::{Error, Result};

/// Largest admissible `dt/h`.
pub const MAX_CFL: f64 = 0.9;

/// Grid, step and horizon of a field run (homogeneous Dirichlet ends).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub half_length: f64,
    pub h: f64,
    pub dt: f64,
    pub p: f64,
    pub t_end: f64,
}

impl SolverConfig {
    pub fn grid(&self) -> Result<Grid> {
        Grid::new(self.half_length, self.h)
    }

    pub fn validate(&self) -> Result<()> {
        let ratio = self.dt / self.h;
        if !(ratio > 0.0 && ratio <= MAX_CFL) {
            return Err(Error::CflViolation { ratio });
        }
        if !(self.p > 2.0) {
            return Err(Error::InvalidParams("p must exceed 2"));
        }
        self.grid().map(|_| ())
    }

    pub fn nonlinearity(&self) -> Nonlinearity {
        Nonlinearity::new(self.p)
    }
}

/// Discrete energy and momentum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConservedQuantities {
    pub energy: f64,
    pub momentum: f64,
}

/// Energy and momentum at the half step between two consecutive levels.
///
/// `v = (u^{n+1} - u^n)/dt`; the momentum `½ Σ v D_h u h` uses the centred
/// difference of the level average.
pub fn conserved(prev: &[f64], next: &[f64], cfg: &SolverConfig) -> ConservedQuantities {
    let f = cfg.nonlinearity();
    let h = cfg.h;
    let n = prev.len();
    let mut energy = 0.0;
    for i in 0..n - 1 {
        energy += (next[i + 1] - next[i]) * (prev[i + 1] - prev[i]) / (h * h);
    }
    let mut momentum = 0.0;
    for i in 1..n - 1 {
        let v = (next[i] - prev[i]) / cfg.dt;
        energy += v * v + next[i] * prev[i] - f.potential(next[i]) - f.potential(prev[i]);
        let du = 0.5 * ((next[i + 1] + prev[i + 1]) - (next[i - 1] + prev[i - 1])) / (2.0 * h);
        momentum += v * du;
    }
    ConservedQuantities { energy: 0.5 * energy * h, momentum: 0.5 * momentum * h }
}

/// `Δ_h u - u` at interior node `i`, summed symmetrically so that mirrored
/// data give bitwise mirrored results.
#[inline]
fn linear_part(u: &[f64], i: usize, inv_h2: f64) -> f64 {
    ((u[i + 1] + u[i - 1]) - 2.0 * u[i]) * inv_h2 - u[i]
}

const NODE_NEWTON: usize = 50;

/// Two-level time stepper.
#[derive(Debug, Clone)]
pub struct Leapfrog {
    pub cfg: SolverConfig,
    grid: Grid,
    f: Nonlinearity,
    prev: Vec<f64>,
    curr: Vec<f64>,
    t: f64,
    steps: usize,
}

impl Leapfrog {
    /// Starts from `(u, v)` with the Taylor step
    /// `u¹ = u₀ + dt v₀ + dt²/2 (Δ_h u₀ - u₀ + f(u₀))`.
    pub fn new(state: &FieldState, cfg: SolverConfig) -> Result<Self> {
        cfg.validate()?;
        let grid = cfg.grid()?;
        if grid != state.grid || !state.is_finite() {
            return Err(Error::InvalidParams("state does not live on the configured grid"));
        }
        let f = cfg.nonlinearity();
        let dt = cfg.dt;
        let inv_h2 = 1.0 / (cfg.h * cfg.h);
        let u = &state.u;
        let mut next = vec![0.0; u.len()];
        for i in 1..u.len() - 1 {
            let acc = linear_part(u, i, inv_h2) + f.f(u[i]);
            next[i] = u[i] + dt * state.v[i] + 0.5 * dt * dt * acc;
        }
        let mut prev = u.clone();
        prev[0] = 0.0;
        *prev.last_mut().unwrap() = 0.0;
        Ok(Self { cfg, grid, f, prev, curr: next, t: state.t + dt, steps: 1 })
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn current(&self) -> &[f64] {
        &self.curr
    }

    pub fn previous(&self) -> &[f64] {
        &self.prev
    }

    fn next_level(&self) -> Result<Vec<f64>> {
        let dt2 = self.cfg.dt * self.cfg.dt;
        let inv_h2 = 1.0 / (self.cfg.h * self.cfg.h);
        let (u, um) = (&self.curr, &self.prev);
        let n = u.len();
        let mut out = vec![0.0; n];
        for i in 1..n - 1 {
            let y = um[i];
            let b = (2.0 * u[i] - y) + dt2 * linear_part(u, i, inv_h2);
            let mut x = b + dt2 * self.f.f(u[i]);
            let mut converged = false;
            for _ in 0..NODE_NEWTON {
                let (q, dq) = self.f.divided_difference(x, y);
                let res = x - dt2 * q - b;
                let step = res / (1.0 - dt2 * dq);
                x -= step;
                if !x.is_finite() {
                    break;
                }
                if abs(step) <= 4.0 * f64::EPSILON * abs(x).max(1e-300) || res == 0.0 {
                    converged = true;
                    break;
                }
            }
            if !converged {
                return Err(Error::NewtonDiverged { node: i });
            }
            out[i] = x;
        }
        Ok(out)
    }

    /// Advances one step.
    pub fn step(&mut self) -> Result<()> {
        let next = self.next_level()?;
        self.prev = core::mem::replace(&mut self.curr, next);
        self.t += self.cfg.dt;
        self.steps += 1;
        Ok(())
    }

    /// Steps until `t >= target - dt/2`.
    pub fn advance_to(&mut self, target: f64) -> Result<()> {
        while self.t < target - 0.5 * self.cfg.dt {
            self.step()?;
        }
        Ok(())
    }

    /// Current level with `v` from the centred difference against a
    /// tentative next level.
    pub fn state(&self) -> Result<FieldState> {
        let next = self.next_level()?;
        let v = next.iter().zip(&self.prev).map(|(a, b)| (a - b) / (2.0 * self.cfg.dt)).collect();
        Ok(FieldState { grid: self.grid, t: self.t, u: self.curr.clone(), v })
    }

    /// `H^{n-1/2}` and `P^{n-1/2}` from the two stored levels.
    pub fn conserved(&self) -> ConservedQuantities {
        conserved(&self.prev, &self.curr, &self.cfg)
    }
}

/// One step from `(u, v)` (bootstraps the two-level scheme).
pub fn step(state: &FieldState, cfg: SolverConfig) -> Result<FieldState> {
    Leapfrog::new(state, cfg)?.state()
}

/// The semi-discrete linearization `ε_t = η`, `η_t = Δ_h ε - ε + f'(Q)ε`
/// around a static profile, integrated with adaptive Dormand-Prince.
pub struct LinearizedFlow {
    pub grid: Grid,
    /// `f'(Q)` on the grid.
    pub potential: Vec<f64>,
}

impl OdeSystem for LinearizedFlow {
    fn dim(&self) -> usize {
        2 * self.grid.len()
    }

    fn rhs(&self, _t: f64, y: &[f64], dydt: &mut [f64]) {
        let n = self.grid.len();
        let inv_h2 = 1.0 / (self.grid.h * self.grid.h);
        let (eps, eta) = y.split_at(n);
        let (deps, deta) = dydt.split_at_mut(n);
        deps.copy_from_slice(eta);
        deps[0] = 0.0;
        deps[n - 1] = 0.0;
        deta[0] = 0.0;
        deta[n - 1] = 0.0;
        for i in 1..n - 1 {
            deta[i] = linear_part(eps, i, inv_h2) + self.potential[i] * eps[i];
        }
    }
}

/// Samples `a^±(t)` of the linearized flow around one soliton at rest.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearizedRun {
    pub t: Vec<f64>,
    pub a_minus: Vec<f64>,
    pub a_plus: Vec<f64>,
    pub nu0: f64,
}

pub fn linearized_run<T: Template>(
    grid: Grid,
    template: &T,
    p: f64,
    eps0: &[f64],
    eta0: &[f64],
    times: &[f64],
    tol: f64,
) -> Result<LinearizedRun> {
    let f = Nonlinearity::new(p);
    let s = template.sample(&grid, 0.0);
    let flow = LinearizedFlow { grid, potential: s.q.iter().map(|&q| f.df(q)).collect() };
    let n = grid.len();
    let mut y0 = eps0.to_vec();
    y0.extend_from_slice(eta0);
    let nu0 = template.nu0();
    let mut out = LinearizedRun { t: Vec::new(), a_minus: Vec::new(), a_plus: Vec::new(), nu0 };
    let mut dp = DormandPrince::new(flow, 0.0, &y0, Tolerances { rtol: tol, atol: tol * 1e-6 });
    for &t in times {
        dp.advance_to(t)?;
        let (eps, eta) = dp.y().split_at(n);
        let (m, pl) = unstable_coordinates(&grid, eps, eta, &[&s.y], nu0);
        out.t.push(t);
        out.a_minus.push(m[0]);
        out.a_plus.push(pl[0]);
    }
    Ok(out)
}

/// One row of a modulation time series.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesRow {
    pub t: f64,
    pub z: Vec<f64>,
    pub l: Vec<f64>,
    pub energy_norm: f64,
    pub a_minus: Vec<f64>,
    pub a_plus: Vec<f64>,
    pub functionals: Option<FunctionalReport>,
    pub conserved: ConservedQuantities,
    pub orthogonality: f64,
}

impl SeriesRow {
    fn from(dec: &Decomposition, functionals: Option<FunctionalReport>, conserved: ConservedQuantities) -> Self {
        Self {
            t: dec.t,
            z: dec.z.clone(),
            l: dec.l.clone(),
            energy_norm: dec.energy_norm,
            a_minus: dec.a_minus.clone(),
            a_plus: dec.a_plus.clone(),
            functionals,
            conserved,
            orthogonality: dec.orthogonality,
        }
    }
}

/// Why a monitored run stopped before `t_end`.
#[derive(Debug, Clone, PartialEq)]
pub enum Stop {
    Error(Error),
    /// `|a_k^+|` passed the ceiling; `sign` is the sign of the largest one.
    Unstable { t: f64, sign: f64 },
}

/// Modulation time series of a field run.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub rows: Vec<SeriesRow>,
    pub stop: Option<Stop>,
}

impl Series {
    /// Time of the last recorded row.
    pub fn lifetime(&self) -> f64 {
        match &self.stop {
            Some(Stop::Unstable { t, .. }) => *t,
            _ => self.rows.last().map_or(0.0, |r| r.t),
        }
    }

    pub fn column(&self, pick: impl Fn(&SeriesRow) -> f64) -> Vec<f64> {
        self.rows.iter().map(pick).collect()
    }
}

/// Stopping rules for [`evolve_monitored`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Monitor {
    pub snapshot_every: f64,
    /// Stop with `ExitedTube` once `‖ε̄‖_E` exceeds this.
    pub norm_ceiling: f64,
    /// Stop once some `|a_k^+|` exceeds this.
    pub unstable_ceiling: f64,
    /// Compute `E, J, S, W` at each snapshot (`cutoff_scale = |z|/2`).
    pub functionals: bool,
    pub modulation_tol: f64,
}

impl Default for Monitor {
    fn default() -> Self {
        Self {
            snapshot_every: 0.5,
            norm_ceiling: f64::INFINITY,
            unstable_ceiling: f64::INFINITY,
            functionals: false,
            modulation_tol: 1e-12,
        }
    }
}

/// Evolves `initial`, decomposing at snapshots with the previous centres as
/// the Newton guess.
pub fn evolve_monitored<T: Template>(
    initial: &FieldState,
    guess: &[f64],
    cfg: SolverConfig,
    template: &T,
    monitor: Monitor,
) -> Result<Series> {
    let mut solver = Leapfrog::new(initial, cfg)?;
    let f = cfg.nonlinearity();
    let mut rows = Vec::new();
    let mut z = guess.to_vec();
    let record = |state: &FieldState, z: &mut Vec<f64>, conserved: ConservedQuantities| -> Result<SeriesRow> {
        let dec = modulate_centres(state, z, template, monitor.modulation_tol)?;
        *z = dec.z.clone();
        let report = if monitor.functionals && dec.z.len() == 2 {
            Some(functionals(&dec, &state.grid, f, 0.5 * dec.separation()))
        } else {
            None
        };
        Ok(SeriesRow::from(&dec, report, conserved))
    };
    let first = record(initial, &mut z, conserved(&initial.u, solver.current(), &cfg))?;
    rows.push(first);
    let mut next = cfg.snapshot_time(monitor.snapshot_every, 1);
    let mut count = 1;
    let stop = loop {
        if next > cfg.t_end + 1e-9 {
            break None;
        }
        if let Err(e) = solver.advance_to(next) {
            break Some(Stop::Error(e));
        }
        let state = match solver.state() {
            Ok(s) => s,
            Err(e) => break Some(Stop::Error(e)),
        };
        let row = match record(&state, &mut z, solver.conserved()) {
            Ok(r) => r,
            Err(e) => break Some(Stop::Error(e)),
        };
        let norm = row.energy_norm;
        let worst = row.a_plus.iter().copied().fold(0.0f64, |a, v| if abs(v) > abs(a) { v } else { a });
        let t = row.t;
        rows.push(row);
        if norm > monitor.norm_ceiling {
            break Some(Stop::Error(Error::ExitedTube { t, norm }));
        }
        if abs(worst) > monitor.unstable_ceiling {
            break Some(Stop::Unstable { t, sign: if worst > 0.0 { 1.0 } else { -1.0 } });
        }
        count += 1;
        next = cfg.snapshot_time(monitor.snapshot_every, count);
    };
    Ok(Series { rows, stop })
}

impl SolverConfig {
    fn snapshot_time(&self, every: f64, k: usize) -> f64 {
        // Snapshots fall on whole steps.
        let per = libm::round(every / self.dt).max(1.0);
        k as f64 * per * self.dt
    }
}

/// Result of [`evolve_single_soliton`].
#[derive(Debug, Clone, PartialEq)]
pub struct SingleSolitonReport {
    pub series: Series,
    /// Slope of the centre trajectory over `[0, fit_until]`.
    pub velocity: f64,
    pub fit_until: f64,
    /// Log-linear fit of `|a^+|` over the samples inside `growth_window`.
    pub growth_rate: Option<f64>,
}

/// Boosted profile `Q(γ(x - x₀))`, `∂ₜ = -βγ Q'(γ(x - x₀))`, plus `δ(Y, ν₀Y)`.
pub fn boosted_soliton<T: Template>(grid: Grid, template: &T, beta: f64, x0: f64, seed: f64) -> Result<FieldState> {
    if !(abs(beta) <= 0.5) {
        return Err(Error::InvalidParams("boost must satisfy |beta| <= 1/2"));
    }
    let gamma = 1.0 / sqrt(1.0 - beta * beta);
    let nu0 = template.nu0();
    let mut state = FieldState::zeros(grid, 0.0);
    for i in 1..grid.len() - 1 {
        let x = grid.x(i) - x0;
        let [q, dq, _, _] = template.eval(gamma * x);
        let y = template.eval(x)[3];
        state.u[i] = q + seed * y;
        state.v[i] = -beta * gamma * dq + seed * nu0 * y;
    }
    Ok(state)
}

/// Drift of `a^+` that ends the velocity-fit window.
const QUIET_DRIFT: f64 = 1e-3;

/// `‖ε̄‖_E` beyond which a single-soliton run is stopped.
const SINGLE_TUBE: f64 = 0.5;

/// Evolves a boosted single soliton and tracks it by one-soliton modulation.
pub fn evolve_single_soliton<T: Template>(
    beta: f64,
    seed: f64,
    cfg: SolverConfig,
    template: &T,
    snapshot_every: f64,
    growth_window: (f64, f64),
) -> Result<SingleSolitonReport> {
    let grid = cfg.grid()?;
    let initial = boosted_soliton(grid, template, beta, 0.0, seed)?;
    let monitor = Monitor { snapshot_every, norm_ceiling: SINGLE_TUBE, ..Monitor::default() };
    let series = evolve_monitored(&initial, &[0.0], cfg, template, monitor)?;
    // Fit the centre only while the unstable coordinate sits at its initial
    // value; afterwards the soliton is leaving the static family.
    let a0 = series.rows.first().map_or(0.0, |r| r.a_plus[0]);
    let quiet: Vec<&SeriesRow> =
        series.rows.iter().take_while(|r| abs(r.a_plus[0] - a0) <= QUIET_DRIFT.max(seed * 1e3)).collect();
    let t: Vec<f64> = quiet.iter().map(|r| r.t).collect();
    let z: Vec<f64> = quiet.iter().map(|r| r.z[0]).collect();
    let velocity = if t.len() >= 2 { linear_fit(&t, &z).1 } else { f64::NAN };
    let fit_until = t.last().copied().unwrap_or(0.0);
    let (mut ft, mut fy) = (Vec::new(), Vec::new());
    for r in &series.rows {
        let a = abs(r.a_plus[0]);
        if a >= growth_window.0 && a <= growth_window.1 {
            ft.push(r.t);
            fy.push(log(a));
        }
    }
    let growth_rate = if ft.len() >= 3 { Some(linear_fit(&ft, &fy).1) } else { None };
    Ok(SingleSolitonReport { series, velocity, fit_until, growth_rate })
}

/// Evolves two-soliton data from `params`, decomposing at snapshots.
pub fn evolve_two_soliton<T: Template>(
    initial: &FieldState,
    params: &ModulationState,
    cfg: SolverConfig,
    template: &T,
    monitor: Monitor,
) -> Result<Series> {
    if params.dim() != 1 {
        return Err(Error::InvalidParams("field runs are one-dimensional"));
    }
    evolve_monitored(initial, &[params.z1[0], params.z2[0]], cfg, template, monitor)
}

/// One shooting evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct UnstableShot {
    pub a: f64,
    /// `+1`/`-1` for the sign of `a^+` at exit, `0` if the run reached `t_end`.
    pub side: f64,
    pub lifetime: f64,
    pub series: Series,
}

/// Result of [`shoot_unstable`].
#[derive(Debug, Clone, PartialEq)]
pub struct UnstableShootResult {
    pub a_star: f64,
    pub best: UnstableShot,
    pub unshot: UnstableShot,
    pub lower: UnstableShot,
    pub upper: UnstableShot,
    pub iterations: usize,
}

fn unstable_shot<T: Template>(
    params: &ModulationState,
    a: f64,
    cfg: SolverConfig,
    template: &T,
    monitor: Monitor,
) -> Result<UnstableShot> {
    let initial = initial_data_from(cfg.grid()?, params, &[a, a], Direction::Unstable, template)?;
    let series = evolve_two_soliton(&initial, params, cfg, template, monitor)?;
    let side = match &series.stop {
        Some(Stop::Unstable { sign, .. }) => *sign,
        Some(Stop::Error(_)) => {
            // Blow-up of the implicit solve or loss of the tube: classify by
            // the last recorded a^+.
            let last = series.rows.last().map_or(0.0, |r| r.a_plus[0]);
            if last >= 0.0 {
                1.0
            } else {
                -1.0
            }
        }
        None => 0.0,
    };
    Ok(UnstableShot { a, side, lifetime: series.lifetime(), series })
}

/// Forward shooting over the symmetric unstable coordinate `a₁^+ = a₂^+ = a`
/// of the initial data: bisection on the sign of `a^+` at exit, keeping the
/// longest-lived run.
pub fn shoot_unstable<T: Template>(
    params: &ModulationState,
    cfg: SolverConfig,
    template: &T,
    a_bracket: (f64, f64),
    monitor: Monitor,
    max_iterations: usize,
) -> Result<UnstableShootResult> {
    let shot = |a: f64| unstable_shot(params, a, cfg, template, monitor);
    let unshot = shot(0.0)?;
    let mut lower = shot(a_bracket.0)?;
    let mut upper = shot(a_bracket.1)?;
    if lower.side == upper.side || lower.side == 0.0 || upper.side == 0.0 {
        return Err(Error::NoDichotomy);
    }
    let mut best = if lower.lifetime >= upper.lifetime { lower.clone() } else { upper.clone() };
    let mut iterations = 0;
    while iterations < max_iterations {
        let mid = 0.5 * (lower.a + upper.a);
        if mid == lower.a || mid == upper.a {
            break;
        }
        let run = shot(mid)?;
        iterations += 1;
        if run.lifetime >= best.lifetime {
            best = run.clone();
        }
        if run.side == 0.0 {
            break;
        }
        if run.side == lower.side {
            lower = run;
        } else {
            upper = run;
        }
    }
    Ok(UnstableShootResult { a_star: best.a, best, unshot, lower, upper, iterations })
}
