//! Fits of the damping inequality and of the sampled convolution bound.

use serde::{Deserialize, Serialize};

use super::EnergyTrace;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct FitOptions {
    /// Upper end of the admissible `eta` range.
    pub eta_max: f64,
    /// The constant may grow to `kappa` times its `eta = 0` value (plus the
    /// part absorbed by `E >= rho ||U||^2`, see [`damping_fit`]).
    pub kappa: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self { eta_max: 1e3, kappa: 2.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DampingFit {
    pub eta: f64,
    pub c: f64,
    pub violations: usize,
    /// `C(0) = max E' / ||U||^2`.
    pub c0: f64,
    /// `min E / ||U||^2`.
    pub rho: f64,
    pub samples: usize,
}

/// Fits `dE/dt <= -eta E + C ||U||^2` along a trace.
///
/// `dE/dt` is taken by centered differences at interior samples and
/// `||U||^2` is the squared `L^2` column plus, for modulated traces, the
/// squared forcing column. For fixed `eta` the smallest admissible constant
/// is `C(eta) = max_i (E'_i + eta E_i) / ||U_i||^2`, which grows without
/// bound in `eta`, so `eta` alone is meaningless. The fit caps the constant
/// at `C(eta) <= B0 + rho eta`, where `B0 = C0 + (kappa - 1)|C0|` and
/// `rho = min_i E_i / ||U_i||^2` (the slack that `E >= rho ||U||^2` makes
/// available for free), and returns the largest `eta <= eta_max` meeting
/// the cap. Samples with `||U_i|| = 0` impose `E'_i + eta E_i <= 0`.
pub fn damping_fit(trace: &EnergyTrace, opts: &FitOptions) -> Result<DampingFit> {
    let n = trace.len();
    if n < 3 {
        return Err(Error::Domain(format!("damping fit needs at least 3 samples, got {n}")));
    }
    if trace.energy.iter().any(|e| !e.is_finite()) {
        return Err(Error::Domain("trace has no energy column".into()));
    }
    let t = &trace.times;
    let mut pts = Vec::with_capacity(n - 2);
    for i in 1..n - 1 {
        let d = (trace.energy[i + 1] - trace.energy[i - 1]) / (t[i + 1] - t[i - 1]);
        let f = trace.forcing.as_ref().map_or(0.0, |f| f[i] * f[i]);
        pts.push((trace.energy[i], d, trace.l2[i] * trace.l2[i] + f));
    }
    let c_of = |eta: f64| {
        pts.iter().filter(|p| p.2 > 0.0).map(|&(e, d, u)| (d + eta * e) / u).fold(f64::NEG_INFINITY, f64::max)
    };
    let c0 = c_of(0.0);
    let c0 = if c0.is_finite() { c0 } else { 0.0 };
    let rho = pts.iter().filter(|p| p.2 > 0.0).map(|&(e, _, u)| e / u).fold(f64::INFINITY, f64::min);
    let rho = if rho.is_finite() { rho } else { 0.0 };
    let budget = c0 + (opts.kappa - 1.0) * c0.abs();
    let mut eta = opts.eta_max;
    for &(e, d, u) in &pts {
        // e' + eta e <= (budget + rho eta) u
        let (num, den) = if u > 0.0 { (budget * u - d, e - rho * u) } else { (-d, e) };
        if den > 0.0 {
            eta = eta.min(num / den);
        } else if num < 0.0 {
            eta = 0.0;
        }
    }
    let eta = eta.max(0.0);
    let mut c = c_of(eta);
    if !c.is_finite() {
        c = 0.0;
    }
    let c = c.max(0.0);
    let violations = pts
        .iter()
        .filter(|&&(e, d, u)| {
            let scale = d.abs() + eta * e.abs() + c * u;
            d + eta * e - c * u > 1e-10 * scale.max(f64::MIN_POSITIVE)
        })
        .count();
    Ok(DampingFit { eta, c, violations, c0, rho, samples: pts.len() })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvolutionFit {
    pub theta: f64,
    pub c: f64,
    /// Smallest relative slack `1 - y_i / (C rhs_i)` over the samples.
    pub max_gap: f64,
    pub c_at_zero: f64,
}

/// Fits `y(t) <= C e^{-theta t} y(0) + C int_0^t e^{-theta (t - s)} g(s) ds`.
///
/// `C(theta)` is the smallest constant for a given `theta`; it increases
/// with `theta`. The returned `theta` is the largest one (up to
/// `theta_max`) with `C(theta) <= kappa C(0)`, found by bisection. The
/// integral uses the trapezoid rule on the sample times. Samples where both
/// sides vanish are skipped.
pub fn convolution_fit(times: &[f64], y: &[f64], g: &[f64], kappa: f64, theta_max: f64) -> Result<ConvolutionFit> {
    let n = times.len();
    if n < 2 || y.len() != n || g.len() != n {
        return Err(Error::Domain("convolution fit needs matching series of length >= 2".into()));
    }
    let c_of = |theta: f64| -> f64 {
        let mut conv = 0.0;
        let mut worst: f64 = 0.0;
        for i in 0..n {
            if i > 0 {
                let h = times[i] - times[i - 1];
                let decay = (-theta * h).exp();
                conv = conv * decay + 0.5 * h * (g[i - 1] * decay + g[i]);
            }
            let rhs = (-theta * (times[i] - times[0])).exp() * y[0] + conv;
            if rhs > 0.0 {
                worst = worst.max(y[i] / rhs);
            } else if y[i] > 0.0 {
                return f64::INFINITY;
            }
        }
        worst
    };
    let c0 = c_of(0.0);
    if !c0.is_finite() {
        return Err(Error::Domain("right-hand side vanishes where the left-hand side does not".into()));
    }
    let cap = kappa * c0;
    let (mut lo, mut hi) = (0.0, theta_max);
    if c_of(hi) <= cap {
        lo = hi;
    } else {
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if c_of(mid) <= cap {
                lo = mid;
            } else {
                hi = mid;
            }
        }
    }
    let theta = lo;
    let c = c_of(theta);
    let mut conv = 0.0;
    let mut gap = f64::INFINITY;
    for i in 0..n {
        if i > 0 {
            let h = times[i] - times[i - 1];
            let decay = (-theta * h).exp();
            conv = conv * decay + 0.5 * h * (g[i - 1] * decay + g[i]);
        }
        let rhs = c * ((-theta * (times[i] - times[0])).exp() * y[0] + conv);
        if rhs > 0.0 {
            gap = gap.min(1.0 - y[i] / rhs);
        }
    }
    Ok(ConvolutionFit { theta, c, max_gap: gap, c_at_zero: c0 })
}

/// The sampled bound `||U(t)||_{H^1} <= C e^{-theta t} ||U(0)||_{H^1} + C int e^{-theta(t-s)} ||U(s)||_{L^2} ds`.
pub fn lemma_sample_check(trace: &EnergyTrace) -> Result<ConvolutionFit> {
    convolution_fit(&trace.times, &trace.h1, &trace.l2, 2.0, 1e3)
}
