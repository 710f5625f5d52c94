//! Model constants, equilibria, the co-moving residual and the Fourier
//! symbol of the linearization about the reference equilibrium.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::PeriodicGrid;

/// Growth rates above this count as instability of a constant state.
pub const INSTABILITY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum System {
    #[default]
    StVenant,
    IsentropicGas,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub froude: f64,
    pub nu: f64,
    #[serde(default)]
    pub speed: f64,
    #[serde(default)]
    pub discharge: f64,
    #[serde(default)]
    pub system: System,
    #[serde(default = "default_gamma")]
    pub gas_gamma: f64,
    #[serde(default = "default_amp")]
    pub gas_amp: f64,
}

fn default_gamma() -> f64 {
    1.4
}

fn default_amp() -> f64 {
    1.0
}

impl ModelParams {
    pub fn st_venant(froude: f64, nu: f64) -> Self {
        Self {
            froude,
            nu,
            speed: 0.0,
            discharge: 0.0,
            system: System::StVenant,
            gas_gamma: default_gamma(),
            gas_amp: default_amp(),
        }
    }

    pub fn isentropic_gas(gamma: f64, amp: f64, nu: f64) -> Self {
        Self {
            froude: 1.0,
            nu,
            speed: 0.0,
            discharge: 0.0,
            system: System::IsentropicGas,
            gas_gamma: gamma,
            gas_amp: amp,
        }
    }

    pub fn with_speed(mut self, c: f64) -> Self {
        self.speed = c;
        self
    }

    pub fn with_discharge(mut self, q: f64) -> Self {
        self.discharge = q;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.froude > 0.0) || !self.froude.is_finite() {
            return Err(Error::Config(format!("froude must be positive, got {}", self.froude)));
        }
        if !(self.nu > 0.0) || !self.nu.is_finite() {
            return Err(Error::Config(format!("nu must be positive, got {}", self.nu)));
        }
        if !self.speed.is_finite() || !self.discharge.is_finite() {
            return Err(Error::Config("speed and discharge must be finite".into()));
        }
        if self.system == System::IsentropicGas {
            if !(self.gas_gamma >= 1.0) {
                return Err(Error::Config(format!("gas_gamma must be >= 1, got {}", self.gas_gamma)));
            }
            if !(self.gas_amp > 0.0) {
                return Err(Error::Config(format!("gas_amp must be positive, got {}", self.gas_amp)));
            }
        }
        Ok(())
    }

    /// Pressure-like flux `p(tau)`: `(2F^2)^-1 tau^-2` or `a tau^-gamma`.
    pub fn pressure(&self, tau: f64) -> f64 {
        match self.system {
            System::StVenant => 0.5 / (self.froude * self.froude * tau * tau),
            System::IsentropicGas => self.gas_amp * tau.powf(-self.gas_gamma),
        }
    }

    pub fn pressure_prime(&self, tau: f64) -> f64 {
        match self.system {
            System::StVenant => -1.0 / (self.froude * self.froude * tau.powi(3)),
            System::IsentropicGas => -self.gas_amp * self.gas_gamma * tau.powf(-self.gas_gamma - 1.0),
        }
    }

    /// Viscous coefficient `b(tau)` in `nu (b(tau) u_x)_x`.
    pub fn viscous_weight(&self, tau: f64) -> f64 {
        match self.system {
            System::StVenant => 1.0 / (tau * tau),
            System::IsentropicGas => 1.0 / tau,
        }
    }

    pub fn viscous_weight_prime(&self, tau: f64) -> f64 {
        match self.system {
            System::StVenant => -2.0 / tau.powi(3),
            System::IsentropicGas => -1.0 / (tau * tau),
        }
    }

    /// Zeroth-order source `1 - tau u^2` (St. Venant) or zero.
    pub fn source(&self, tau: f64, u: f64) -> f64 {
        match self.system {
            System::StVenant => 1.0 - tau * u * u,
            System::IsentropicGas => 0.0,
        }
    }
}

/// Velocity balancing friction and gravity at height `1/tau0` (positive root).
pub fn equilibrium_velocity(tau0: f64) -> Result<f64> {
    if !(tau0 > 0.0) || !tau0.is_finite() {
        return Err(Error::Domain(format!("tau0 must be positive, got {tau0}")));
    }
    Ok(tau0.powf(-0.5))
}

/// Pointwise residual of the co-moving system for fields on `grid`.
///
/// Returns `(tau_t - c tau_x - u_x, u_t - c u_x + p(tau)_x - S(tau,u) - nu (b(tau) u_x)_x)`.
pub fn comoving_residual(
    params: &ModelParams,
    grid: &PeriodicGrid,
    tau: &[f64],
    u: &[f64],
    tau_t: &[f64],
    u_t: &[f64],
) -> Result<(Vec<f64>, Vec<f64>)> {
    for f in [tau, u, tau_t, u_t] {
        grid.check(f)?;
    }
    if let Some(j) = tau.iter().position(|&t| !(t > 0.0)) {
        return Err(Error::Positivity(format!("tau = {} at grid index {j}", tau[j])));
    }
    let c = params.speed;
    let tau_x = grid.derivative(tau, 1);
    let u_x = grid.derivative(u, 1);
    let p: Vec<f64> = tau.iter().map(|&t| params.pressure(t)).collect();
    let p_x = grid.derivative(&p, 1);
    let flux: Vec<f64> = tau.iter().zip(&u_x).map(|(&t, &ux)| params.viscous_weight(t) * ux).collect();
    let visc = grid.derivative(&flux, 1);
    let r1 = (0..grid.n()).map(|j| tau_t[j] - c * tau_x[j] - u_x[j]).collect();
    let r2 = (0..grid.n())
        .map(|j| u_t[j] - c * u_x[j] + p_x[j] - params.source(tau[j], u[j]) - params.nu * visc[j])
        .collect();
    Ok((r1, r2))
}

/// Eigenvalues of the Fourier symbol of the linearization about `(1, 1)`
/// (St. Venant) or `(1, 0)` (gas), in the frame moving with `params.speed`.
///
/// With `lambda = i c k + mu`, St. Venant gives
/// `mu^2 + (nu k^2 + 2) mu + F^-2 k^2 + i k = 0`.
pub fn constant_state_spectrum(params: &ModelParams, k: f64) -> [Complex64; 2] {
    let i = Complex64::new(0.0, 1.0);
    let shift = i * params.speed * k;
    let (b, c0) = match params.system {
        System::StVenant => {
            let f2 = params.froude * params.froude;
            (params.nu * k * k + 2.0, Complex64::new(k * k / f2, k))
        }
        System::IsentropicGas => {
            let pp = params.pressure_prime(1.0);
            (params.nu * k * k, Complex64::new(-pp * k * k, 0.0))
        }
    };
    let disc = (Complex64::new(b * b, 0.0) - 4.0 * c0).sqrt();
    let m1 = 0.5 * (-b + disc);
    let m2 = 0.5 * (-b - disc);
    [shift + m1, shift + m2]
}

/// The 2x2 symbol itself, rows `(tau, u)`.
pub fn constant_state_symbol(params: &ModelParams, k: f64) -> [[Complex64; 2]; 2] {
    let i = Complex64::new(0.0, 1.0);
    let ick = i * params.speed * k;
    let ik = i * k;
    match params.system {
        System::StVenant => {
            let f2 = params.froude * params.froude;
            [[ick, ik], [ik / f2 - 1.0, ick - params.nu * k * k - 2.0]]
        }
        System::IsentropicGas => {
            let pp = params.pressure_prime(1.0);
            [[ick, ik], [-ik * pp, ick - params.nu * k * k]]
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InstabilityReport {
    pub unstable: bool,
    pub max_growth: f64,
    pub argmax_k: f64,
}

/// Wavenumbers used for the constant-state growth scan: log-spaced over
/// `[1e-4, 1e4]`.
pub fn default_wavenumbers(count: usize) -> Vec<f64> {
    let count = count.max(2);
    (0..count)
        .map(|j| 10f64.powf(-4.0 + 8.0 * j as f64 / (count - 1) as f64))
        .collect()
}

pub fn is_hydrodynamically_unstable(params: &ModelParams) -> InstabilityReport {
    instability_on(params, &default_wavenumbers(801))
}

pub fn instability_on(params: &ModelParams, ks: &[f64]) -> InstabilityReport {
    let mut best = f64::NEG_INFINITY;
    let mut arg = 0.0;
    for &k in ks {
        for lam in constant_state_spectrum(params, k) {
            if lam.re > best {
                best = lam.re;
                arg = k;
            }
        }
    }
    InstabilityReport { unstable: best > INSTABILITY_TOL, max_growth: best, argmax_k: arg }
}

/// Bisection on `F` for the change of the instability verdict, bracketed by
/// `[lo, hi]`. Returns the bracket midpoint after the width drops below `tol`.
pub fn instability_onset(base: &ModelParams, lo: f64, hi: f64, tol: f64, ks: &[f64]) -> Result<f64> {
    let at = |f: f64| instability_on(&ModelParams { froude: f, ..*base }, ks).unstable;
    let (mut a, mut b) = (lo, hi);
    let fa = at(a);
    if fa == at(b) {
        return Err(Error::Domain(format!("verdict does not change on [{lo}, {hi}]")));
    }
    while b - a > tol {
        let m = 0.5 * (a + b);
        if at(m) == fa {
            a = m;
        } else {
            b = m;
        }
    }
    Ok(0.5 * (a + b))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equilibria() {
        assert_eq!(equilibrium_velocity(1.0).unwrap(), 1.0);
        assert_eq!(equilibrium_velocity(4.0).unwrap(), 0.5);
        assert!((equilibrium_velocity(2.0).unwrap() - 0.7071067811865476).abs() < 1e-15);
        assert!(equilibrium_velocity(0.0).is_err());
        assert!(equilibrium_velocity(-1.0).is_err());
    }

    #[test]
    fn residual_vanishes_at_equilibrium() {
        let p = ModelParams::st_venant(3.0, 0.1).with_speed(0.4);
        let g = PeriodicGrid::new(16, 5.0).unwrap();
        let one = vec![1.0; 16];
        let zero = vec![0.0; 16];
        let (r1, r2) = comoving_residual(&p, &g, &one, &one, &zero, &zero).unwrap();
        assert!(r1.iter().chain(&r2).all(|v| v.abs() < 1e-14));
    }

    #[test]
    fn residual_rejects_bad_input() {
        let p = ModelParams::st_venant(3.0, 0.1);
        let g = PeriodicGrid::new(8, 1.0).unwrap();
        let ok = vec![1.0; 8];
        let short = vec![1.0; 7];
        assert!(comoving_residual(&p, &g, &ok, &short, &ok, &ok).is_err());
        let mut neg = ok.clone();
        neg[3] = -0.5;
        assert!(matches!(comoving_residual(&p, &g, &neg, &ok, &ok, &ok), Err(Error::Positivity(_))));
    }

    #[test]
    fn zero_wavenumber_spectrum() {
        let p = ModelParams::st_venant(3.0, 0.1);
        let [a, b] = constant_state_spectrum(&p, 0.0);
        assert!(a.norm() < 1e-15);
        assert!((b.re + 2.0).abs() < 1e-15);
    }

    #[test]
    fn roots_solve_symbol() {
        let p = ModelParams::st_venant(2.7, 0.05).with_speed(0.3);
        for &k in &[0.1, 1.0, 7.5, -3.0] {
            let m = constant_state_symbol(&p, k);
            for lam in constant_state_spectrum(&p, k) {
                let det = (m[0][0] - lam) * (m[1][1] - lam) - m[0][1] * m[1][0];
                assert!(det.norm() < 1e-10 * (1.0 + lam.norm_sqr()));
            }
        }
    }

    #[test]
    fn onset_at_two() {
        assert!(is_hydrodynamically_unstable(&ModelParams::st_venant(2.5, 0.1)).unstable);
        assert!(is_hydrodynamically_unstable(&ModelParams::st_venant(3.0, 0.1)).unstable);
        assert!(!is_hydrodynamically_unstable(&ModelParams::st_venant(1.5, 0.1)).unstable);
        assert!(!is_hydrodynamically_unstable(&ModelParams::st_venant(1.0, 0.1)).unstable);
        let f = instability_onset(&ModelParams::st_venant(2.0, 0.1), 1.0, 3.0, 1e-6, &default_wavenumbers(801)).unwrap();
        assert!((f - 2.0).abs() < 1e-2, "onset {f}");
    }

    #[test]
    fn params_json_keys() {
        let p = ModelParams::st_venant(3.0, 0.1).with_speed(0.3).with_discharge(1.3);
        let v: serde_json::Value = serde_json::to_value(p).unwrap();
        for key in ["froude", "nu", "speed", "discharge", "system", "gas_gamma", "gas_amp"] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
        let back: ModelParams = serde_json::from_value(v).unwrap();
        assert_eq!(back, p);
    }
}
