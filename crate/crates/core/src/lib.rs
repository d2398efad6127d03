//! Numerical toolkit for two same-sign solitary waves of the focusing
//! nonlinear Klein-Gordon equation
//!
//! ```text
//! u_tt - Δu + u - |u|^{p-1} u = 0,   x ∈ ℝ^d, 1 ≤ d ≤ 5, p > 2 (H¹-subcritical).
//! ```
//!
//! The crate is `no_std` (it needs `alloc`) and holds the pure numerics:
//!
//! * [`groundstate`]: radial ground state `q`, its tail amplitude `κ`.
//! * [`spectrum`]: the linearized operator `L = -Δ + 1 - pQ^{p-1}`, its
//!   negative eigenpair `(-ν₀², Y)`, translation kernel and coercivity.
//! * [`interaction`]: interaction constants `c₁`, `g₀`, the attraction law
//!   `g(r) = g₀ q(r)` and the fields `G`, `D`.
//! * [`reduced`]: finite-dimensional modulation dynamics, the model ODE
//!   `z̈ = -2e^{-z}` and backward shooting onto the log-distance orbit.
//! * [`decomposition`]: modulation of a 1D field around two solitons,
//!   unstable coordinates, the preparation map `W` and energy functionals.
//! * [`field`]: a discretely energy-conserving 1D solver and the PDE-level
//!   experiments built on it.
//!
//! File formats, the command line and plotting live in the `nlkg` crate.
#![cfg_attr(not(test), no_std)]
// `!(x <= bound)` also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod decomposition;
pub mod error;
pub mod field;
pub mod groundstate;
pub mod interaction;
pub mod lattice;
pub mod math;
pub mod ode;
pub mod reduced;
pub mod spectrum;
pub mod tridiag;

pub use error::{Error, Result};
pub use groundstate::{GroundStateProfile, ProblemParams};
pub use interaction::InteractionConstants;
pub use reduced::ModulationState;
pub use spectrum::SpectralData;
