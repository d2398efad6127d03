mod common;

use common::*;
use nlkg_core::groundstate::{linear_tail, solve_ground_state};
use nlkg_core::{Error, ProblemParams};
use proptest::prelude::*;

#[test]
fn cubic_line_profile_is_sech() {
    let g = cubic_line();
    assert!((g.q0() - SQRT2).abs() < 1e-7);
    assert!((g.kappa - 2.0 * SQRT2).abs() < 1e-5);
    assert!(g.residual_max <= 1e-8);
    for r in [0.1, 0.7, 1.5, 3.0, 6.0, 12.0, 25.0] {
        let exact = cubic_q(r);
        assert!((g.value(r) - exact).abs() <= 1e-8 * exact.max(1e-3), "r = {r}");
        let (_, dq, d2q) = g.evaluate_radial(r);
        assert!((dq + SQRT2 * r.tanh() / r.cosh()).abs() < 1e-7, "q' at {r}");
        let exact2 = SQRT2 / r.cosh() - 2.0 * SQRT2 / r.cosh().powi(3);
        assert!((d2q - exact2).abs() < 1e-7, "q'' at {r}");
    }
}

#[test]
fn tail_windows_agree() {
    let g = cubic_line();
    for (a, b) in [(10.0, 15.0), (15.0, 20.0)] {
        let fit = g.tail_amplitude(a, b).unwrap();
        assert!((fit.kappa - 2.0 * SQRT2).abs() < 1e-6, "{a}..{b}: {}", fit.kappa);
    }
    assert!(matches!(g.tail_amplitude(5.0, 15.0), Err(Error::InvalidParams(_))));
    assert!(matches!(g.tail_amplitude(10.0, 10.04), Err(Error::WindowTooNarrow { .. })));
}

/// Radial integral `|S^{d-1}| ∫ φ(r) r^{d-1} dr` by composite Simpson.
fn radial_integral(d: usize, r_max: f64, phi: impl Fn(f64) -> f64) -> f64 {
    let n = 40_000;
    let h = r_max / n as f64;
    let mut s = 0.0;
    for i in 0..=n {
        let r = i as f64 * h;
        let w = if i == 0 || i == n { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * phi(r) * r.powi(d as i32 - 1);
    }
    s * h / 3.0
}

#[test]
fn nehari_and_pohozaev_identities() {
    // ∫|∇Q|² + ∫Q² = ∫Q^{p+1} and (d-2)/2 ∫|∇Q|² + d/2 ∫Q² = d/(p+1) ∫Q^{p+1}.
    for (d, p) in [(2, 3.0), (3, 3.0), (3, 2.5), (4, 2.5)] {
        let g = solve_ground_state(ProblemParams::new(d, p).unwrap(), 30.0, 1e-9).unwrap();
        let grad = radial_integral(d, 30.0, |r| g.evaluate_radial(r).1.powi(2));
        let mass = radial_integral(d, 30.0, |r| g.value(r).powi(2));
        let pot = radial_integral(d, 30.0, |r| g.value(r).abs().powf(p + 1.0));
        let nehari = (grad + mass - pot) / pot;
        let df = d as f64;
        let pohozaev = ((df - 2.0) / 2.0 * grad + df / 2.0 * mass - df / (p + 1.0) * pot) / pot;
        assert!(nehari.abs() < 1e-6, "d={d} p={p}: {nehari}");
        assert!(pohozaev.abs() < 1e-6, "d={d} p={p}: {pohozaev}");
    }
}

#[test]
fn cubic_reference_values() {
    // Central values of the cubic ground state in d = 2 and d = 3.
    let g2 = solve_ground_state(ProblemParams::new(2, 3.0).unwrap(), 30.0, 1e-9).unwrap();
    let g3 = solve_ground_state(ProblemParams::new(3, 3.0).unwrap(), 30.0, 1e-9).unwrap();
    assert!((g2.q0() - 2.206200864650).abs() < 1e-7);
    assert!((g3.q0() - 4.337387679970).abs() < 1e-7);
    assert!((g3.kappa - 2.7128083609).abs() < 1e-6);
    assert!(g3.residual_max <= 1e-9);
}

#[test]
fn tail_matches_bessel_series() {
    // d = 3: q = κ e^{-r}/r exactly for the linear tail.
    let (v, dv) = linear_tail(3, 4.0);
    assert!((v - (-4.0f64).exp() / 4.0).abs() < 1e-15);
    assert!((dv + (-4.0f64).exp() * (1.0 / 4.0 + 1.0 / 16.0)).abs() < 1e-15);
    // d = 5: e^{-r} r^{-2} (1 + 1/r).
    let (v, _) = linear_tail(5, 4.0);
    assert!((v - (-4.0f64).exp() / 16.0 * 1.25).abs() < 1e-15);
}

#[test]
fn rejects_unsupported_parameters() {
    assert!(matches!(ProblemParams::new(6, 3.0), Err(Error::InvalidParams(_))));
    assert!(matches!(ProblemParams::new(1, 2.0), Err(Error::InvalidParams(_))));
    assert!(matches!(ProblemParams::new(3, 5.0), Err(Error::InvalidParams(_))));
    assert!(matches!(ProblemParams::new(4, 3.0), Err(Error::InvalidParams(_))));
    assert!(ProblemParams::new(2, 7.0).is_ok());
}

#[test]
fn profile_is_positive_and_decreasing() {
    let g = solve_ground_state(ProblemParams::new(3, 2.5).unwrap(), 30.0, 1e-9).unwrap();
    assert!(g.q.iter().all(|&q| q > 0.0));
    assert!(g.q.windows(2).all(|w| w[1] <= w[0]));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn line_profiles_match_closed_form(p in 2.2f64..6.0) {
        let g = solve_ground_state(ProblemParams::new(1, p).unwrap(), 40.0, 1e-9).unwrap();
        let q0 = line_ground_state(p, 0.0);
        prop_assert!((g.q0() - q0).abs() < 1e-7 * q0);
        for r in [0.5, 2.0, 5.0] {
            let exact = line_ground_state(p, r);
            prop_assert!((g.value(r) - exact).abs() < 1e-7 * exact, "r = {}", r);
        }
        // sech^a(b r) ~ 2^a e^{-ab r} with ab = 1.
        let kappa = q0 * 2f64.powf(2.0 / (p - 1.0));
        prop_assert!((g.kappa - kappa).abs() < 1e-5 * kappa);
    }
}
