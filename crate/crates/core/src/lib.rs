//! Periodic roll waves of the inclined shallow-water (St. Venant) equations
//! and viscous shocks of isentropic gas dynamics, with the gauge-weighted
//! energies and Floquet-Bloch diagnostics used to study their stability.
//!
//! The St. Venant system is written in Lagrangian mass coordinates, in a
//! frame moving with speed `c`:
//!
//! ```text
//! tau_t - c tau_x - u_x = 0
//! u_t - c u_x + ((2 F^2)^-1 tau^-2)_x = 1 - tau u^2 + nu (tau^-2 u_x)_x
//! ```
//!
//! Module map:
//!
//! * [`model`]: parameters, equilibria, constant-state dispersion.
//! * [`profile`]: periodic traveling waves by Fourier collocation and Newton.
//! * [`conditions`]: slope coefficient `alpha`, pointwise and averaged tests.
//! * [`gauge`]: weights `phi1, phi2, phi3`, energies, compensator search.
//! * [`bloch`]: Hill's method, stability classification, resolvent scans.
//! * [`evolution`]: linear, nonlinear and phase-modulated time stepping,
//!   damping fits, space-modulated distance.
//! * [`shock`]: isentropic gas shock profiles and their damping energy.
//! * [`sweep`]: (F, period) scans of the slope conditions and verdicts.

pub mod bloch;
pub mod conditions;
pub mod error;
pub mod evolution;
pub mod exec;
pub mod expr;
pub mod gauge;
pub mod linalg;
pub mod model;
pub mod profile;
pub mod shock;
pub mod spectral;
pub mod sweep;

pub use error::{Error, Result};
pub use model::{ModelParams, System};
pub use profile::WaveProfile;
