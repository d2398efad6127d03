mod common;

use std::sync::OnceLock;

use common::*;
use nlkg_core::decomposition::*;
use nlkg_core::field::*;
use nlkg_core::lattice::{Grid, Template};
use nlkg_core::reduced::*;
use nlkg_core::{Error, ModulationState};
use proptest::prelude::*;

fn at_rest(half_length: f64) -> FieldState {
    let g = Grid::new(half_length, H_FIELD).unwrap();
    boosted_soliton(g, cubic_lattice(), 0.0, 0.0, 0.0).unwrap()
}

/// Shot run from the log-distance orbit at separation 12.
fn expanding_shot() -> &'static UnstableShootResult {
    static CELL: OnceLock<UnstableShootResult> = OnceLock::new();
    CELL.get_or_init(|| {
        let params = terminal_data(0.0, 12.0, 1, cubic_line_constants());
        let monitor = Monitor { snapshot_every: 0.5, unstable_ceiling: 1e-2, ..Monitor::default() };
        shoot_unstable(&params, field_config(25.0, 80.0), cubic_lattice(), (-1e-3, 1e-3), monitor, 60).unwrap()
    })
}

#[test]
fn zero_data_stay_zero() {
    let cfg = field_config(10.0, 5.0);
    let s = FieldState::zeros(cfg.grid().unwrap(), 0.0);
    let mut lf = Leapfrog::new(&s, cfg).unwrap();
    lf.advance_to(5.0).unwrap();
    assert!(lf.current().iter().all(|&u| u == 0.0));
}

/// Classical RK4 for `ü = -u + u³`.
fn scalar_oracle(u0: f64, t: f64) -> f64 {
    let n = 20000;
    let h = t / n as f64;
    let rhs = |y: [f64; 2]| [y[1], -y[0] + y[0].powi(3)];
    let mut y = [u0, 0.0];
    for _ in 0..n {
        let k1 = rhs(y);
        let k2 = rhs([y[0] + 0.5 * h * k1[0], y[1] + 0.5 * h * k1[1]]);
        let k3 = rhs([y[0] + 0.5 * h * k2[0], y[1] + 0.5 * h * k2[1]]);
        let k4 = rhs([y[0] + h * k3[0], y[1] + h * k3[1]]);
        for i in 0..2 {
            y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
    y[0]
}

#[test]
fn constant_data_follow_the_scalar_ode() {
    let cfg = field_config(20.0, 4.0);
    let g = cfg.grid().unwrap();
    let mut s = FieldState::zeros(g, 0.0);
    for i in 1..g.len() - 1 {
        s.u[i] = 0.3;
    }
    let mut lf = Leapfrog::new(&s, cfg).unwrap();
    lf.advance_to(4.0).unwrap();
    let centre = lf.current()[g.len() / 2];
    let exact = scalar_oracle(0.3, lf.t());
    // Second-order in dt = 0.025.
    assert!((centre - exact).abs() < 1e-4, "{centre} vs {exact}");
}

#[test]
fn energy_is_conserved_over_ten_thousand_steps() {
    let cfg = field_config(25.0, 250.0);
    let g = cfg.grid().unwrap();
    // Subcritical bump: disperses and reflects off the ends without blowing up.
    let mut s = FieldState::zeros(g, 0.0);
    for i in 1..g.len() - 1 {
        let x = g.x(i) + 3.0;
        s.u[i] = 0.8 * (-x * x).exp();
        s.v[i] = 0.5 * x * (-x * x).exp();
    }
    let mut lf = Leapfrog::new(&s, cfg).unwrap();
    let h0 = lf.conserved().energy;
    let mut worst: f64 = 0.0;
    for _ in 0..10_000 {
        lf.step().unwrap();
        worst = worst.max((lf.conserved().energy - h0).abs() / h0.abs());
    }
    assert!(worst <= 1e-9, "{worst}");
}

#[test]
fn momentum_vanishes_for_symmetric_data_and_flips_under_reflection() {
    let cfg = field_config(25.0, 10.0);
    let g = cfg.grid().unwrap();
    let params = ModulationState::symmetric(0.0, &[12.0], &[0.05]);
    let s = initial_data_from(g, &params, &[1e-4, 1e-4], Direction::Stable, cubic_lattice()).unwrap();
    let mut lf = Leapfrog::new(&s, cfg).unwrap();
    for _ in 0..200 {
        lf.step().unwrap();
        assert!(lf.conserved().momentum.abs() <= 1e-10);
    }
    let b = boosted_soliton(g, cubic_lattice(), 0.2, 1.0, 0.0).unwrap();
    let p = Leapfrog::new(&b, cfg).unwrap().conserved().momentum;
    let q = Leapfrog::new(&b.reflected(), cfg).unwrap().conserved().momentum;
    assert!(p.abs() > 1e-2);
    assert!((p + q).abs() <= 1e-12 * p.abs());
}

#[test]
fn reflection_commutes_with_evolution() {
    let cfg = field_config(20.0, 4.0);
    let s = boosted_soliton(cfg.grid().unwrap(), cubic_lattice(), 0.25, 2.3, 1e-4).unwrap();
    let mut a = Leapfrog::new(&s, cfg).unwrap();
    let mut b = Leapfrog::new(&s.reflected(), cfg).unwrap();
    a.advance_to(4.0).unwrap();
    b.advance_to(4.0).unwrap();
    let mut ra = a.current().to_vec();
    ra.reverse();
    assert_eq!(ra, b.current());
}

#[test]
fn ground_state_energy_is_constant_at_rest() {
    let cfg = field_config(25.0, 20.0);
    let mut lf = Leapfrog::new(&at_rest(25.0), cfg).unwrap();
    let h0 = lf.conserved().energy;
    // Lattice energy of the profile: 4/3 up to O(h²).
    assert!((h0 - 4.0 / 3.0).abs() < 5e-3, "{h0}");
    while lf.t() < 20.0 - 1e-9 {
        lf.step().unwrap();
        assert!((lf.conserved().energy - h0).abs() <= 1e-8 * h0);
    }
}

fn boosted_sech(grid: Grid, beta: f64, t: f64) -> (Vec<f64>, Vec<f64>) {
    let g = 1.0 / (1.0 - beta * beta).sqrt();
    let mut u = vec![0.0; grid.len()];
    let mut v = vec![0.0; grid.len()];
    for i in 1..grid.len() - 1 {
        let y = g * (grid.x(i) - beta * t);
        u[i] = cubic_q(y);
        v[i] = beta * g * SQRT2 * y.tanh() / y.cosh();
    }
    (u, v)
}

/// Max error against the exact boosted `√2 sech` at `t = 2` for each `h`.
fn convergence_errors(hs: &[f64]) -> Vec<f64> {
    hs.iter()
        .map(|&h| {
            let cfg = SolverConfig { half_length: 20.0, h, dt: 0.5 * h, p: 3.0, t_end: 2.0 };
            let grid = cfg.grid().unwrap();
            let (u, v) = boosted_sech(grid, 0.2, 0.0);
            let mut lf = Leapfrog::new(&FieldState { grid, t: 0.0, u, v }, cfg).unwrap();
            lf.advance_to(2.0).unwrap();
            let exact = boosted_sech(grid, 0.2, lf.t()).0;
            lf.current().iter().zip(&exact).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
        })
        .collect()
}

#[test]
fn halving_the_grid_quarters_the_error() {
    let e = convergence_errors(&[0.1, 0.05, 0.025]);
    for w in e.windows(2) {
        let r = w[0] / w[1];
        assert!((3.6..=4.4).contains(&r), "{e:?}");
    }
}

#[test]
fn linearized_coordinates_grow_and_decay_exponentially() {
    let g = Grid::new(25.0, H_FIELD).unwrap();
    let t = cubic_lattice();
    let eps0: Vec<f64> = (0..g.len()).map(|i| 1e-3 * (-(g.x(i) - 0.5).powi(2)).exp()).collect();
    let eta0: Vec<f64> = (0..g.len()).map(|i| 2e-3 * g.x(i) * (-(g.x(i)).powi(2)).exp()).collect();
    let mut eps0 = eps0;
    let n = g.len();
    eps0[0] = 0.0;
    eps0[n - 1] = 0.0;
    let run = linearized_run(g, t, 3.0, &eps0, &eta0, &[0.0, 1.0, 2.0, 3.0], 1e-10).unwrap();
    let nu0 = run.nu0;
    for (k, &tk) in run.t.iter().enumerate() {
        let plus = run.a_plus[0] * (nu0 * tk).exp();
        let minus = run.a_minus[0] * (-nu0 * tk).exp();
        assert!((run.a_plus[k] - plus).abs() <= 1e-7 * plus.abs());
        assert!((run.a_minus[k] - minus).abs() <= 1e-7 * run.a_minus[0].abs());
    }
}

#[test]
fn soliton_at_rest_stays_put() {
    let cfg = field_config(25.0, 10.0);
    let r = evolve_single_soliton(0.0, 0.0, cfg, cubic_lattice(), 0.5, (1e-6, 1e-2)).unwrap();
    let drift = r.series.rows.iter().map(|row| row.z[0].abs()).fold(0.0, f64::max);
    assert!(r.series.lifetime() >= 10.0 - 1e-9);
    assert!(drift <= 1e-6, "{drift}");
}

#[test]
fn boosted_soliton_moves_at_its_velocity() {
    let cfg = field_config(25.0, 30.0);
    let r = evolve_single_soliton(0.2, 0.0, cfg, cubic_lattice(), 0.5, (1e-6, 1e-2)).unwrap();
    // The contracted profile seeds a⁺, which ends the quiet window early.
    assert!(r.fit_until >= 1.5);
    assert!((r.velocity - 0.2).abs() <= 5e-3, "{}", r.velocity);
}

#[test]
fn seeded_instability_grows_at_nu0() {
    let cfg = field_config(25.0, 20.0);
    let t = cubic_lattice();
    let r = evolve_single_soliton(0.0, 1e-8, cfg, t, 0.25, (1e-6, 1e-2)).unwrap();
    let rate = r.growth_rate.unwrap();
    assert!((rate - t.nu0()).abs() <= 0.1 * t.nu0(), "{rate}");
}

#[test]
fn initial_acceleration_matches_the_interaction() {
    let c = cubic_line_constants();
    let params = ModulationState::symmetric(0.0, &[12.0], &[0.0]);
    let cfg = field_config(25.0, 1.0);
    let s = initial_data_from(cfg.grid().unwrap(), &params, &[0.0, 0.0], Direction::Stable, cubic_lattice()).unwrap();
    let monitor = Monitor { snapshot_every: 0.1, ..Monitor::default() };
    let series = evolve_two_soliton(&s, &params, cfg, cubic_lattice(), monitor).unwrap();
    let t = series.column(|r| r.t);
    let rel = series.column(|r| r.l[0] - r.l[1]);
    let slope = nlkg_core::math::linear_fit(&t, &rel).1;
    let g = ProfileAttraction::new(cubic_line(), c).g(12.0);
    assert!((slope + 2.0 * g).abs() <= 0.1 * 2.0 * g, "{slope} vs {}", -2.0 * g);
}

#[test]
fn attractive_collapse_follows_the_reduced_dynamics() {
    let c = cubic_line_constants();
    let params = ModulationState::symmetric(0.0, &[8.0], &[-0.1]);
    // Interaction forcing of a⁺ is O(q(|z|)) at these separations.
    let monitor = Monitor { snapshot_every: 0.25, unstable_ceiling: 0.1, ..Monitor::default() };
    let shot = shoot_unstable(&params, field_config(25.0, 40.0), cubic_lattice(), (-5e-2, 5e-2), monitor, 60).unwrap();
    let rows = &shot.best.series.rows;
    let times: Vec<f64> = rows.iter().map(|r| r.t).collect();
    let reduced = sample_reduced(&params, &times, 1e-12, &ProfileAttraction::new(cubic_line(), c)).unwrap();
    let mut reached = false;
    for (row, red) in rows.iter().zip(&reduced) {
        let sep = (row.z[0] - row.z[1]).abs();
        if sep < 6.0 {
            reached = true;
            break;
        }
        assert!((sep - red.separation()).abs() <= 0.05 * red.separation());
    }
    assert!(reached);
    let sep = rows.iter().map(|r| (r.z[0] - r.z[1]).abs()).collect::<Vec<_>>();
    assert!(sep.windows(2).take_while(|w| w[1] >= 6.0).all(|w| w[1] < w[0] + 1e-12));
}

#[test]
fn shot_run_expands_like_the_reduced_dynamics() {
    let shot = expanding_shot();
    let rows = &shot.best.series.rows;
    let params = terminal_data(0.0, 12.0, 1, cubic_line_constants());
    let times: Vec<f64> = rows.iter().map(|r| r.t).collect();
    let attraction = ProfileAttraction::new(cubic_line(), cubic_line_constants());
    let reduced = sample_reduced(&params, &times, 1e-12, &attraction).unwrap();
    for (row, red) in rows.iter().zip(&reduced).skip(1) {
        let grown = (row.z[0] - row.z[1]).abs() - 12.0;
        let expected = red.separation() - 12.0;
        assert!((grown - expected).abs() <= 0.05 * expected.abs(), "t = {}", row.t);
    }
}

#[test]
fn shooting_extends_the_lifetime() {
    let shot = expanding_shot();
    assert_eq!(shot.lower.side, -shot.upper.side);
    assert!(shot.best.lifetime >= 3.0 * shot.unshot.lifetime);
}

/// Largest ratio of `lhs` to `rhs` over the interior rows.
fn fitted_constant(lhs: &[f64], rhs: &[f64]) -> f64 {
    lhs.iter().zip(rhs).map(|(a, b)| a / b).fold(0.0, f64::max)
}

#[test]
fn modulation_and_stable_direction_bounds_hold_with_moderate_constants() {
    let shot = expanding_shot();
    let rows = &shot.best.series.rows;
    let nu0 = cubic_lattice().nu0();
    let (mut lhs_z, mut rhs_z, mut lhs_a, mut rhs_a) = (vec![], vec![], vec![], vec![]);
    for k in 1..rows.len() - 1 {
        let (a, r, b) = (&rows[k - 1], &rows[k], &rows[k + 1]);
        let dt = b.t - a.t;
        let zdot: f64 = (0..2).map(|i| ((b.z[i] - a.z[i]) / dt - r.l[i]).abs()).sum();
        lhs_z.push(zdot);
        rhs_z.push(r.energy_norm * (r.l[0].abs() + r.l[1].abs()));
        let adot = (b.a_minus[0] - a.a_minus[0]) / dt + nu0 * r.a_minus[0];
        let sep = (r.z[0] - r.z[1]).abs();
        lhs_a.push(adot.abs());
        rhs_a.push(r.energy_norm.powi(2) + r.l[0].powi(2) + r.l[1].powi(2) + cubic_line().value(sep));
    }
    let cz = fitted_constant(&lhs_z, &rhs_z);
    let ca = fitted_constant(&lhs_a, &rhs_a);
    assert!(cz.is_finite() && cz < 10.0, "{cz}");
    assert!(ca.is_finite() && ca < 10.0, "{ca}");
}

#[test]
fn cfl_is_enforced() {
    let cfg = SolverConfig { half_length: 10.0, h: 0.05, dt: 0.05, p: 3.0, t_end: 1.0 };
    let s = FieldState::zeros(cfg.grid().unwrap(), 0.0);
    assert!(matches!(Leapfrog::new(&s, cfg), Err(Error::CflViolation { .. })));
    assert!(matches!(step(&s, cfg), Err(Error::CflViolation { .. })));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn energy_is_conserved_for_random_bumps(amp in 0.1f64..1.2, width in 0.5f64..2.0, speed in -0.5f64..0.5) {
        let cfg = field_config(15.0, 5.0);
        let g = cfg.grid().unwrap();
        let mut s = FieldState::zeros(g, 0.0);
        for i in 1..g.len() - 1 {
            let x = g.x(i) / width;
            s.u[i] = amp * (-x * x).exp();
            s.v[i] = speed * 2.0 * x / width * amp * (-x * x).exp();
        }
        let mut lf = Leapfrog::new(&s, cfg).unwrap();
        let h0 = lf.conserved().energy;
        lf.advance_to(5.0).unwrap();
        prop_assert!((lf.conserved().energy - h0).abs() <= 1e-10 * h0.abs().max(1.0));
    }
}
