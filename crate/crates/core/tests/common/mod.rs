#![allow(dead_code)]

use std::sync::OnceLock;

use nlkg_core::field::SolverConfig;
use nlkg_core::groundstate::solve_ground_state;
use nlkg_core::interaction::compute_constants;
use nlkg_core::lattice::LatticeSoliton;
use nlkg_core::spectrum::spectral_data;
use nlkg_core::{GroundStateProfile, InteractionConstants, ProblemParams, SpectralData};

pub const SQRT2: f64 = std::f64::consts::SQRT_2;
pub const H_FIELD: f64 = 0.05;

/// `Q(x) = √2 sech x` for `d = 1`, `p = 3`.
pub fn cubic_q(x: f64) -> f64 {
    SQRT2 / x.cosh()
}

/// `Q(x) = ((p+1)/2)^{1/(p-1)} sech^{2/(p-1)}((p-1)x/2)`, the 1D ground state.
pub fn line_ground_state(p: f64, x: f64) -> f64 {
    ((p + 1.0) / 2.0).powf(1.0 / (p - 1.0)) * (1.0 / ((p - 1.0) * x / 2.0).cosh()).powf(2.0 / (p - 1.0))
}

pub fn cubic_line() -> &'static GroundStateProfile {
    static CELL: OnceLock<GroundStateProfile> = OnceLock::new();
    CELL.get_or_init(|| solve_ground_state(ProblemParams::new(1, 3.0).unwrap(), 40.0, 1e-10).unwrap())
}

pub fn cubic_line_constants() -> &'static InteractionConstants {
    static CELL: OnceLock<InteractionConstants> = OnceLock::new();
    CELL.get_or_init(|| compute_constants(cubic_line()).unwrap())
}

pub fn cubic_line_spectrum() -> &'static SpectralData {
    static CELL: OnceLock<SpectralData> = OnceLock::new();
    CELL.get_or_init(|| spectral_data(cubic_line(), 0.005, 30.0).unwrap())
}

pub fn cubic_lattice() -> &'static LatticeSoliton {
    static CELL: OnceLock<LatticeSoliton> = OnceLock::new();
    CELL.get_or_init(|| LatticeSoliton::solve(cubic_line(), H_FIELD, 40.0).unwrap())
}

pub fn field_config(half_length: f64, t_end: f64) -> SolverConfig {
    SolverConfig { half_length, h: H_FIELD, dt: 0.5 * H_FIELD, p: 3.0, t_end }
}
