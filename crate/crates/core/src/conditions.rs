//! Slope coefficient `alpha` and the pointwise / averaged slope tests.
//!
//! For the St. Venant system
//!
//! ```text
//! alpha = tau_bar^-3 (F^-2 - 2 nu u_bar_x)
//! ```
//!
//! This sign is the one for which the linear operator annihilates the
//! translation mode `(tau_bar', u_bar')`; see `bloch` tests. Averages are
//! period means `<f> = (1/X) int_0^X f`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::profile::WaveProfile;

pub fn alpha_profile(profile: &WaveProfile) -> Vec<f64> {
    let p = &profile.params;
    let f2 = p.froude * p.froude;
    let ux = profile.u_x();
    profile
        .tau_bar
        .iter()
        .zip(&ux)
        .map(|(&t, &d)| (1.0 / f2 - 2.0 * p.nu * d) / (t * t * t))
        .collect()
}

/// `w = alpha tau_bar^2 / nu`, the rate appearing in the gauge equation.
pub fn slope_rate(profile: &WaveProfile) -> Vec<f64> {
    let nu = profile.params.nu;
    alpha_profile(profile)
        .iter()
        .zip(&profile.tau_bar)
        .map(|(a, t)| a * t * t / nu)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlopeReport {
    pub pointwise_margin: f64,
    pub pointwise_holds: bool,
    pub averaged_value: f64,
    pub averaged_holds: bool,
    pub alpha: Vec<f64>,
    pub worst_x: f64,
}

pub fn slope_report(profile: &WaveProfile) -> SlopeReport {
    let p = &profile.params;
    let f2 = p.froude * p.froude;
    let ux = profile.u_x();
    let (mut margin, mut worst) = (f64::INFINITY, 0usize);
    for (j, d) in ux.iter().enumerate() {
        let m = 1.0 / f2 - 2.0 * p.nu * d;
        if m < margin {
            margin = m;
            worst = j;
        }
    }
    let g = profile.grid();
    let averaged = g.mean(&slope_rate(profile));
    SlopeReport {
        pointwise_margin: margin,
        pointwise_holds: margin > 0.0,
        averaged_value: averaged,
        averaged_holds: averaged > 0.0,
        alpha: alpha_profile(profile),
        worst_x: worst as f64 * g.dx(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanIdentity {
    pub lhs: f64,
    pub rhs: f64,
    pub gap: f64,
}

/// `<g(tau) alpha>` against `F^-2 <g(tau) tau^-3>`.
pub fn weighted_mean_identity(profile: &WaveProfile, g: impl Fn(f64) -> f64) -> Result<MeanIdentity> {
    let grid = profile.grid();
    let gv: Vec<f64> = profile.tau_bar.iter().map(|&t| g(t)).collect();
    if let Some(j) = gv.iter().position(|v| !(*v > 0.0)) {
        return Err(Error::Domain(format!("weight is {} at tau = {}", gv[j], profile.tau_bar[j])));
    }
    let alpha = alpha_profile(profile);
    let f2 = profile.params.froude.powi(2);
    let lhs = grid.mean(&gv.iter().zip(&alpha).map(|(a, b)| a * b).collect::<Vec<_>>());
    let rhs = grid.mean(&gv.iter().zip(&profile.tau_bar).map(|(a, t)| a / (t * t * t)).collect::<Vec<_>>()) / f2;
    Ok(MeanIdentity { lhs, rhs, gap: (lhs - rhs).abs() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelParams;

    #[test]
    fn constant_state_values() {
        let p = ModelParams::st_venant(3.0, 0.2).with_speed(0.3);
        let w = WaveProfile::constant(p, 5.0, 16, 1.0, 1.0).unwrap();
        let a = alpha_profile(&w);
        assert!(a.iter().all(|v| (v - 1.0 / 9.0).abs() < 1e-15));
        let r = slope_report(&w);
        assert!((r.pointwise_margin - 1.0 / 9.0).abs() < 1e-15);
        assert!((r.averaged_value - 1.0 / 9.0 / 0.2).abs() < 1e-14);
        assert!(r.pointwise_holds && r.averaged_holds);
        let id = weighted_mean_identity(&w, |_| 1.0).unwrap();
        assert!((id.lhs - 1.0 / 9.0).abs() < 1e-15 && id.gap < 1e-15);
    }

    #[test]
    fn rejects_nonpositive_weight() {
        let p = ModelParams::st_venant(3.0, 0.2).with_speed(0.3);
        let w = WaveProfile::constant(p, 5.0, 16, 1.0, 1.0).unwrap();
        assert!(weighted_mean_identity(&w, |t| t - 2.0).is_err());
    }
}
