mod common;

use common::*;
use nlkg_core::decomposition::*;
use nlkg_core::lattice::{Grid, Template};
use nlkg_core::math::Nonlinearity;
use nlkg_core::{Error, ModulationState};
use proptest::prelude::*;

fn grid() -> Grid {
    Grid::new(30.0, H_FIELD).unwrap()
}

/// `Σ Q(x - z_k)` with velocities `-Σ ℓ_k Q'(x - z_k)`, plus `bump` in `u`.
fn pair(z: [f64; 2], l: [f64; 2], bump: impl Fn(f64) -> f64) -> FieldState {
    let g = grid();
    let t = cubic_lattice();
    let mut s = FieldState::zeros(g, 0.0);
    for (zk, lk) in z.iter().zip(&l) {
        let sh = t.sample(&g, *zk);
        for i in 0..g.len() {
            s.u[i] += sh.q[i];
            s.v[i] -= lk * sh.dq[i];
        }
    }
    for i in 1..g.len() - 1 {
        s.u[i] += bump(g.x(i));
    }
    s
}

#[test]
fn exact_pair_is_recovered() {
    let s = pair([6.3, -5.8], [0.01, -0.02], |_| 0.0);
    let d = modulate_centres(&s, &[6.0, -6.0], cubic_lattice(), 1e-12).unwrap();
    assert!((d.z[0] - 6.3).abs() < 1e-10 && (d.z[1] + 5.8).abs() < 1e-10);
    assert!((d.l[0] - 0.01).abs() < 1e-10 && (d.l[1] + 0.02).abs() < 1e-10);
    assert!(d.energy_norm < 1e-9);
    assert!(d.a_plus.iter().chain(&d.a_minus).all(|a| a.abs() < 1e-9));
}

#[test]
fn newton_converges_with_a_bump() {
    let s = pair([6.0, -6.0], [0.0, 0.0], |x| 1e-3 * (-(x - 1.0) * (x - 1.0)).exp());
    let d = modulate_centres(&s, &[6.2, -6.2], cubic_lattice(), 1e-12).unwrap();
    assert!(d.newton_steps <= 10);
    assert!(d.orthogonality <= 1e-12 * d.energy_norm + 1e-13);
}

#[test]
fn translation_is_covariant() {
    let bump = |x: f64| 1e-3 * (-(x * x)).exp();
    let s = pair([6.0, -6.0], [0.0, 0.0], bump);
    let shift = 20; // nodes
    let dx = shift as f64 * H_FIELD;
    let s2 = pair([6.0 + dx, -6.0 + dx], [0.0, 0.0], |x| bump(x - dx));
    let d1 = modulate_centres(&s, &[6.0, -6.0], cubic_lattice(), 1e-13).unwrap();
    let d2 = modulate_centres(&s2, &[6.0 + dx, -6.0 + dx], cubic_lattice(), 1e-13).unwrap();
    for k in 0..2 {
        assert!((d2.z[k] - d1.z[k] - dx).abs() < 1e-9);
        assert!((d2.a_plus[k] - d1.a_plus[k]).abs() < 1e-9);
    }
}

#[test]
fn symmetric_data_give_equal_coordinates() {
    let s = pair([7.0, -7.0], [-0.01, 0.01], |x| 1e-4 * (-(x * x)).exp());
    let d = modulate_centres(&s, &[7.0, -7.0], cubic_lattice(), 1e-13).unwrap();
    assert!((d.z[0] + d.z[1]).abs() < 1e-10);
    assert!((d.a_plus[0] - d.a_plus[1]).abs() < 1e-12);
    assert!((d.a_minus[0] - d.a_minus[1]).abs() < 1e-12);
}

#[test]
fn unstable_coordinates_of_the_eigenmode() {
    // ε̄ = (Y, ν₀Y) has a⁺ = 2ν₀, a⁻ = 0 for unit ‖Y‖.
    let g = grid();
    let t = cubic_lattice();
    let sh = t.sample(&g, 0.0);
    let nu0 = t.nu0();
    let eta: Vec<f64> = sh.y.iter().map(|y| nu0 * y).collect();
    let norm = g.inner(&sh.y, &sh.y);
    let (m, p) = unstable_coordinates(&g, &sh.y, &eta, &[&sh.y], nu0);
    assert!((p[0] - 2.0 * nu0 * norm).abs() < 1e-12);
    assert!(m[0].abs() < 1e-12);
    assert!((norm - 1.0).abs() < 1e-10);
}

#[test]
fn w_satisfies_its_constraints() {
    let g = grid();
    let t = cubic_lattice();
    let nu0 = t.nu0();
    let beta = -1.0 / (2.0 * nu0);
    let z = [6.0, -6.0];
    let a = [3e-4, -1e-4];
    for (dir, sign) in [(Direction::Stable, 1.0), (Direction::Unstable, -1.0)] {
        let (w, wv) = prepare_w(&g, &z, &a, dir, t).unwrap();
        for k in 0..2 {
            let sh = t.sample(&g, z[k]);
            assert!(g.inner(&w, &sh.dq).abs() < 1e-13);
            assert!((g.inner(&w, &sh.y) - sign * beta * a[k]).abs() < 1e-13);
        }
        for (x, y) in w.iter().zip(&wv) {
            assert!((y + sign * nu0 * x).abs() < 1e-15);
        }
        // The prepared coordinate is a, the other vanishes.
        let ys: Vec<Vec<f64>> = z.iter().map(|&zk| t.sample(&g, zk).y).collect();
        let refs: Vec<&[f64]> = ys.iter().map(|v| v.as_slice()).collect();
        let (m, p) = unstable_coordinates(&g, &w, &wv, &refs, nu0);
        let (set, other) = if dir == Direction::Stable { (m, p) } else { (p, m) };
        for k in 0..2 {
            assert!((set[k] - a[k]).abs() < 1e-10 * a[0].abs());
            assert!(other[k].abs() < 1e-15);
        }
    }
}

#[test]
fn w_map_approaches_beta_with_separation() {
    let g = grid();
    let devs: Vec<f64> = [10.0, 12.0, 14.0, 16.0]
        .iter()
        .map(|&s| WMap::new(&g, &[s / 2.0, -s / 2.0], cubic_lattice()).unwrap().deviation())
        .collect();
    assert!(devs.windows(2).all(|w| w[1] < w[0]));
    assert!(devs[3] < 1e-5);
}

#[test]
fn prepared_data_round_trip() {
    let g = grid();
    let c = cubic_line_constants();
    let a = [2e-5, 2e-5];
    let s = build_initial_data(g, 12.0, &a, Direction::Unstable, c, cubic_lattice()).unwrap();
    let params = nlkg_core::reduced::terminal_data(0.0, 12.0, 1, c);
    let d = modulate(&s, &params, cubic_lattice(), 1e-13).unwrap();
    assert!((d.z[0] - params.z1[0]).abs() < 1e-10);
    assert!((d.l[0] - params.l1[0]).abs() < 1e-10);
    assert!((d.a_plus[0] - a[0]).abs() < 1e-10 && d.a_minus[0].abs() < 1e-10);
    assert!(matches!(
        build_initial_data(g, 8.0, &a, Direction::Unstable, c, cubic_lattice()),
        Err(Error::InvalidParams(_))
    ));
}

#[test]
fn close_guesses_are_rejected() {
    let s = pair([6.0, -6.0], [0.0, 0.0], |_| 0.0);
    assert!(matches!(modulate_centres(&s, &[0.5, -0.5], cubic_lattice(), 1e-12), Err(Error::IllConditioned { .. })));
}

#[test]
fn cutoff_shape() {
    assert_eq!(cutoff(0.0), 1.0);
    assert_eq!(cutoff(0.1), 1.0);
    assert_eq!(cutoff(0.125), 0.0);
    assert_eq!(cutoff(3.0), 0.0);
    let mut prev = 1.0;
    for i in 0..=100 {
        let c = cutoff(0.1 + 0.025 * i as f64 / 100.0);
        assert!(c <= prev + 1e-15 && (0.0..=1.0).contains(&c));
        prev = c;
    }
    // Three vanishing derivatives at each end.
    let h = 1e-4;
    assert!((cutoff(0.1 + h) - 1.0).abs() < 1e-6);
    assert!(cutoff(0.125 - h).abs() < 1e-6);
}

fn report(s: &FieldState, guess: [f64; 2], scale: f64) -> FunctionalReport {
    let d = modulate_centres(s, &guess, cubic_lattice(), 1e-13).unwrap();
    functionals(&d, &s.grid, Nonlinearity::new(3.0), scale)
}

#[test]
fn functionals_of_a_bare_pair() {
    let s = pair([7.0, -7.0], [0.0, 0.0], |_| 0.0);
    let r = report(&s, [7.0, -7.0], 14.0);
    assert!(r.e.abs() < 1e-12 && r.j.abs() < 1e-12 && r.s.abs() < 1e-12 && r.w.abs() < 1e-12);
    assert!((r.cutoff_radius - 14.0 / 8.0).abs() < 1e-15);
}

#[test]
fn energy_functional_is_quadratic_for_small_perturbations() {
    let bump = |x: f64| (-(x - 0.5) * (x - 0.5)).exp();
    let e = |lam: f64| {
        let s = pair([7.0, -7.0], [0.0, 0.0], |x| lam * bump(x));
        report(&s, [7.0, -7.0], 14.0).e / (lam * lam)
    };
    let (a, b, c) = (e(2e-3), e(1e-3), e(5e-4));
    // The leading remainder halves with λ.
    let r = (a - b) / (b - c);
    assert!((r - 2.0).abs() < 0.1, "ratio {r}");
}

#[test]
fn combined_functional_identity() {
    let s = pair([7.0, -7.0], [-0.02, 0.02], |x| 1e-3 * (-(x * x)).exp() * (1.0 + 0.3 * x));
    let r = report(&s, [7.0, -7.0], 14.0);
    assert!((r.w - (r.e + 2.0 * r.j - 2.0 * r.s)).abs() < 1e-15);
    assert!(r.j != 0.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn energy_is_coercive_off_the_special_directions(
        amps in proptest::collection::vec(-1.0f64..1.0, 6),
        centre in -3.0f64..3.0,
    ) {
        // One soliton; ε is projected off Q' and Y, η off Q'.
        let g = grid();
        let t = cubic_lattice();
        let sh = t.sample(&g, 0.0);
        let mut eps: Vec<f64> = (0..g.len()).map(|i| {
            let x = g.x(i) - centre;
            let env = (-(x * x) / 4.0).exp();
            (amps[0] + amps[1] * x + amps[2] * x * x) * env * if i == 0 || i == g.len() - 1 { 0.0 } else { 1.0 }
        }).collect();
        let mut eta: Vec<f64> = (0..g.len()).map(|i| {
            let x = g.x(i) - centre;
            (amps[3] + amps[4] * x + amps[5] * x * x) * (-(x * x) / 4.0).exp()
        }).collect();
        for basis in [&sh.dq, &sh.y] {
            let c = g.inner(&eps, basis) / g.inner(basis, basis);
            for (e, b) in eps.iter_mut().zip(basis.iter()) { *e -= c * b; }
        }
        let c = g.inner(&eta, &sh.dq) / g.inner(&sh.dq, &sh.dq);
        for (e, b) in eta.iter_mut().zip(sh.dq.iter()) { *e -= c * b; }
        let lam = 1e-4;
        let mut s = FieldState::zeros(g, 0.0);
        for i in 1..g.len() - 1 {
            s.u[i] = sh.q[i] + lam * eps[i];
            s.v[i] = lam * eta[i];
        }
        let d = modulate_centres(&s, &[0.0], t, 1e-13).unwrap();
        let r = functionals(&d, &g, Nonlinearity::new(3.0), 10.0);
        prop_assert!(r.e >= 0.05 * d.energy_norm * d.energy_norm, "{} vs {}", r.e, d.energy_norm);
    }

    #[test]
    fn reflection_swaps_the_solitons(z in 5.0f64..9.0, bumpc in -2.0f64..2.0) {
        let s = pair([z, -z + 0.3], [0.0, 0.0], |x| 1e-4 * (-(x - bumpc) * (x - bumpc)).exp());
        let d = modulate_centres(&s, &[z, -z + 0.3], cubic_lattice(), 1e-13).unwrap();
        let r = modulate_centres(&s.reflected(), &[z - 0.3, -z], cubic_lattice(), 1e-13).unwrap();
        prop_assert!((r.z[0] + d.z[1]).abs() < 1e-9 && (r.z[1] + d.z[0]).abs() < 1e-9);
        prop_assert!((r.a_plus[0] - d.a_plus[1]).abs() < 1e-10);
    }

    #[test]
    fn params_round_trip(z in 5.0f64..9.0, l in -0.05f64..0.05) {
        let st = ModulationState::symmetric(0.0, &[2.0 * z], &[l]);
        let s = initial_data_from(grid(), &st, &[0.0, 0.0], Direction::Stable, cubic_lattice()).unwrap();
        let d = modulate(&s, &st, cubic_lattice(), 1e-13).unwrap();
        let back = d.params().unwrap();
        prop_assert!((back.separation() - st.separation()).abs() < 1e-9);
        prop_assert!((back.l1[0] - st.l1[0]).abs() < 1e-10);
    }
}
