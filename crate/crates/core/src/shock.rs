//! Viscous shock profiles of the isentropic gas system on a truncated line.
//!
//! In the frame of the shock the system reads
//!
//! ```text
//! tau_t - c tau_x - u_x = 0
//! u_t - c u_x + p(tau)_x = nu (u_x / tau)_x,      p(tau) = a tau^-gamma
//! ```
//!
//! Traveling waves satisfy `u = u0 - c tau` and the scalar ODE
//! `tau' = -(tau / (nu c)) (c^2 tau + p(tau) - q)`, `q = c^2 tau_+- + p(tau_+-)`.
//! The linearization is `L(tau, u) = (c tau_x + u_x, c u_x + (alpha tau)_x + nu (b u_x)_x)`
//! with `alpha = -p'(tau_bar) - nu u_bar_x / tau_bar^2` and `b = 1 / tau_bar`.
//! Derivatives are fourth-order finite differences; perturbations vanish at
//! `x = +-L`.

use std::io::Write;

use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolution::{DampingFit, EnergyTrace, FitOptions};
use crate::linalg::{matvec, RealLu};
use crate::model::{ModelParams, System};
use crate::profile::fmt;

/// Which form of the reduced profile equation to integrate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ShockOde {
    /// `c^2 tau + p - q = -nu c tau' / tau`.
    #[default]
    Viscous,
    /// `-c^2 tau - p + q = c u' / tau` with `u' = -c tau'`, no viscosity.
    Inviscid,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ShockProfile {
    pub params: ModelParams,
    pub half_width: f64,
    pub x: Vec<f64>,
    pub tau_bar: Vec<f64>,
    pub u_bar: Vec<f64>,
    pub speed: f64,
    pub tau_minus: f64,
    pub tau_plus: f64,
    pub q: f64,
    /// Smaller of the two fitted tail rates.
    pub decay_rate: f64,
    /// `(left, right)` rates from the endstate linearization.
    pub predicted_rates: (f64, f64),
    pub fitted_rates: (f64, f64),
    pub ode: ShockOde,
}

fn check_gas(params: &ModelParams) -> Result<()> {
    if params.system != System::IsentropicGas {
        return Err(Error::Config("shock profiles need the isentropic gas system".into()));
    }
    params.validate()
}

/// `c^2` from the Rankine-Hugoniot condition.
pub fn rankine_hugoniot_speed2(params: &ModelParams, tau_minus: f64, tau_plus: f64) -> f64 {
    -(params.pressure(tau_plus) - params.pressure(tau_minus)) / (tau_plus - tau_minus)
}

/// Rankine-Hugoniot residual `|c^2 (tau_+ - tau_-) + p(tau_+) - p(tau_-)|`.
pub fn rankine_hugoniot_residual(p: &ShockProfile) -> f64 {
    (p.speed * p.speed * (p.tau_plus - p.tau_minus) + p.params.pressure(p.tau_plus) - p.params.pressure(p.tau_minus)).abs()
}

struct Ode {
    params: ModelParams,
    c: f64,
    q: f64,
    form: ShockOde,
}

impl Ode {
    fn h(&self, t: f64) -> f64 {
        self.c * self.c * t + self.params.pressure(t) - self.q
    }

    fn rhs(&self, t: f64) -> f64 {
        match self.form {
            ShockOde::Viscous => -t / (self.params.nu * self.c) * self.h(t),
            ShockOde::Inviscid => t / (self.c * self.c) * self.h(t),
        }
    }

    /// `d rhs / d tau` at an endstate (where `h = 0`).
    fn slope_at_rest(&self, t: f64) -> f64 {
        let hp = self.c * self.c + self.params.pressure_prime(t);
        match self.form {
            ShockOde::Viscous => -t / (self.params.nu * self.c) * hp,
            ShockOde::Inviscid => t / (self.c * self.c) * hp,
        }
    }

    fn rk4(&self, mut t: f64, h: f64, steps: usize) -> f64 {
        for _ in 0..steps {
            let k1 = self.rhs(t);
            let k2 = self.rhs(t + 0.5 * h * k1);
            let k3 = self.rhs(t + 0.5 * h * k2);
            let k4 = self.rhs(t + h * k3);
            t += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        t
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ShockOptions {
    /// Grid points on `[-L, L]`, endpoints included.
    pub n: usize,
    /// Half-width `L`; `None` uses `20 / decay_rate`.
    pub half_width: Option<f64>,
    /// Allowed endstate mismatch at `+-L`, relative to `|tau_+ - tau_-|`.
    pub tail_tol: f64,
    pub ode: ShockOde,
    /// Velocity at `tau = 0` in `u = u0 - c tau`.
    pub u0: f64,
}

impl Default for ShockOptions {
    fn default() -> Self {
        Self { n: 801, half_width: None, tail_tol: 1e-6, ode: ShockOde::Viscous, u0: 0.0 }
    }
}

pub fn solve_shock_profile(params: &ModelParams, tau_minus: f64, tau_plus: f64, opts: &ShockOptions) -> Result<ShockProfile> {
    check_gas(params)?;
    if !(tau_minus > 0.0 && tau_plus > 0.0) || tau_minus == tau_plus {
        return Err(Error::Domain(format!("need distinct positive endstates, got {tau_minus}, {tau_plus}")));
    }
    if opts.n < 9 {
        return Err(Error::Config(format!("need at least 9 grid points, got {}", opts.n)));
    }
    let c2 = rankine_hugoniot_speed2(params, tau_minus, tau_plus);
    if !(c2 > 0.0) {
        return Err(Error::NoProfile(format!("Rankine-Hugoniot gives c^2 = {c2:.3e} <= 0")));
    }
    // tau increases across the viscous profile exactly when c > 0
    let c = match opts.ode {
        ShockOde::Viscous => c2.sqrt() * (tau_plus - tau_minus).signum(),
        ShockOde::Inviscid => c2.sqrt(),
    };
    let q = c2 * tau_minus + params.pressure(tau_minus);
    let ode = Ode { params: *params, c, q, form: opts.ode };
    for t in [tau_minus, tau_plus] {
        if (c2 + params.pressure_prime(t)).abs() < 1e-12 {
            return Err(Error::NoProfile(format!("characteristic endstate tau = {t}")));
        }
    }
    // the right side must carry tau from tau_- to tau_+ without stopping
    let dir = (tau_plus - tau_minus).signum();
    for j in 1..200 {
        let t = tau_minus + (tau_plus - tau_minus) * j as f64 / 200.0;
        if !(ode.rhs(t) * dir > 0.0) {
            return Err(Error::NoProfile(format!("profile equation stalls or reverses at tau = {t:.6}")));
        }
    }
    let r_left = ode.slope_at_rest(tau_minus);
    let r_right = -ode.slope_at_rest(tau_plus);
    if !(r_left > 0.0 && r_right > 0.0) {
        return Err(Error::NoProfile(format!("endstates are not attracting: rates {r_left:.3e}, {r_right:.3e}")));
    }
    let rate = r_left.min(r_right);
    let half_width = opts.half_width.unwrap_or(20.0 / rate);
    let n = opts.n;
    let dx = 2.0 * half_width / (n - 1) as f64;
    let x: Vec<f64> = (0..n).map(|j| -half_width + j as f64 * dx).collect();
    // integrate outward from the midpoint, which sits at x = 0 (n odd) or
    // half a cell from it
    let mid = 0.5 * (tau_minus + tau_plus);
    let sub = 32;
    let mut tau = vec![0.0; n];
    let centre = (n - 1) / 2;
    let offset = x[centre];
    let start = ode.rk4(mid, offset / sub as f64, if offset == 0.0 { 0 } else { sub });
    tau[centre] = start;
    for j in centre + 1..n {
        tau[j] = ode.rk4(tau[j - 1], dx / sub as f64, sub);
    }
    for j in (0..centre).rev() {
        tau[j] = ode.rk4(tau[j + 1], -dx / sub as f64, sub);
    }
    let amp = (tau_plus - tau_minus).abs();
    let miss = (tau[0] - tau_minus).abs().max((tau[n - 1] - tau_plus).abs());
    if miss > opts.tail_tol * amp {
        return Err(Error::Domain(format!(
            "half-width {half_width:.3} too small: endstate mismatch {miss:.3e} exceeds {:.3e}",
            opts.tail_tol * amp
        )));
    }
    let u_bar: Vec<f64> = tau.iter().map(|t| opts.u0 - c * t).collect();
    let fitted = (
        tail_rate(&x, &tau.iter().map(|t| t - tau_minus).collect::<Vec<_>>(), Side::Left),
        tail_rate(&x, &tau.iter().map(|t| t - tau_plus).collect::<Vec<_>>(), Side::Right),
    );
    Ok(ShockProfile {
        params: *params,
        half_width,
        x,
        tau_bar: tau,
        u_bar,
        speed: c,
        tau_minus,
        tau_plus,
        q,
        decay_rate: fitted.0.min(fitted.1),
        predicted_rates: (r_left, r_right),
        fitted_rates: fitted,
        ode: opts.ode,
    })
}

#[derive(Clone, Copy, PartialEq)]
enum Side {
    Left,
    Right,
}

/// Exponential rate of `|f| -> 0` on one tail, by least squares of
/// `log |f|` against `|x|` over the points where `|f|` lies between
/// `1e-10` and `1e-3` of its maximum.
fn tail_rate(x: &[f64], f: &[f64], side: Side) -> f64 {
    let top = f.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let pts: Vec<(f64, f64)> = x
        .iter()
        .zip(f)
        .filter(|(x, _)| if side == Side::Left { **x < 0.0 } else { **x > 0.0 })
        .filter(|(_, v)| v.abs() > 1e-10 * top && v.abs() < 1e-3 * top)
        .map(|(x, v)| (x.abs(), v.abs().ln()))
        .collect();
    if pts.len() < 3 {
        return f64::NAN;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    -sxy / sxx
}

impl ShockProfile {
    pub fn n(&self) -> usize {
        self.x.len()
    }

    pub fn dx(&self) -> f64 {
        self.x[1] - self.x[0]
    }

    pub fn derivative(&self, f: &[f64]) -> Vec<f64> {
        fd_derivative(f, self.dx())
    }

    /// Residual of the steady second-order system, sup over the interior
    /// points at least 2 cells from the ends.
    pub fn steady_residual(&self) -> f64 {
        let p = &self.params;
        let c = self.speed;
        let tx = self.derivative(&self.tau_bar);
        let ux = self.derivative(&self.u_bar);
        let pr: Vec<f64> = self.tau_bar.iter().map(|&t| p.pressure(t)).collect();
        let px = self.derivative(&pr);
        let flux: Vec<f64> = ux.iter().zip(&self.tau_bar).map(|(d, t)| d / t).collect();
        let fx = self.derivative(&flux);
        let n = self.n();
        (2..n - 2)
            .map(|j| (c * tx[j] + ux[j]).abs().max((c * ux[j] - px[j] + p.nu * fx[j]).abs()))
            .fold(0.0, f64::max)
    }

    pub fn is_monotone(&self) -> bool {
        let s = (self.tau_plus - self.tau_minus).signum();
        self.tau_bar.windows(2).all(|w| (w[1] - w[0]) * s >= 0.0)
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["x", "tau", "u"])?;
        for j in 0..self.n() {
            wr.write_record([fmt(self.x[j]), fmt(self.tau_bar[j]), fmt(self.u_bar[j])])?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Fourth-order first derivative with one-sided closures at both ends.
pub fn fd_derivative(f: &[f64], h: f64) -> Vec<f64> {
    let n = f.len();
    let mut d = vec![0.0; n];
    for (j, dj) in d.iter_mut().enumerate() {
        *dj = fd_row(n, j).iter().map(|&(k, w)| w * f[k]).sum::<f64>() / h;
    }
    d
}

/// Stencil `(index, weight)` of row `j`, without the `1/h`.
fn fd_row(n: usize, j: usize) -> Vec<(usize, f64)> {
    const E0: [f64; 5] = [-25.0 / 12.0, 4.0, -3.0, 4.0 / 3.0, -1.0 / 4.0];
    const E1: [f64; 5] = [-1.0 / 4.0, -5.0 / 6.0, 3.0 / 2.0, -1.0 / 2.0, 1.0 / 12.0];
    match j {
        0 => (0..5).map(|k| (k, E0[k])).collect(),
        1 => (0..5).map(|k| (k, E1[k])).collect(),
        _ if j == n - 1 => (0..5).map(|k| (n - 1 - k, -E0[k])).collect(),
        _ if j == n - 2 => (0..5).map(|k| (n - 1 - k, -E1[k])).collect(),
        _ => vec![(j - 2, 1.0 / 12.0), (j - 1, -2.0 / 3.0), (j + 1, 2.0 / 3.0), (j + 2, -1.0 / 12.0)],
    }
}

/// `alpha = -p'(tau_bar) - nu u_bar_x / tau_bar^2`.
pub fn shock_alpha(p: &ShockProfile) -> Vec<f64> {
    let ux = p.derivative(&p.u_bar);
    p.tau_bar
        .iter()
        .zip(&ux)
        .map(|(&t, &d)| -p.params.pressure_prime(t) - p.params.nu * d / (t * t))
        .collect()
}

/// `w = alpha / (nu b) = alpha tau_bar / nu`.
pub fn shock_rate(p: &ShockProfile) -> Vec<f64> {
    let nu = p.params.nu;
    shock_alpha(p).iter().zip(&p.tau_bar).map(|(a, t)| a * t / nu).collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Interpolant {
    pub values: Vec<f64>,
    pub width: f64,
    pub left: f64,
    pub right: f64,
    /// Fitted decay of `w - I` on each tail.
    pub fitted_rates: (f64, f64),
}

/// Tanh switch `I = w_- + (w_+ - w_-) (1 + tanh(x / l)) / 2` between the
/// endstate values of `w`. The width `l` is the profile thickness
/// `|tau_+ - tau_-| / max |tau_bar'|`, reduced if needed so that the switch
/// itself decays at least at rate `theta`.
pub fn build_interpolant(p: &ShockProfile, theta: f64) -> Result<Interpolant> {
    if !(theta > 0.0) || theta > p.decay_rate * (1.0 + 1e-9) {
        return Err(Error::Config(format!(
            "decay target {theta:.4} must lie in (0, {:.4}]",
            p.decay_rate
        )));
    }
    let nu = p.params.nu;
    let left = -p.params.pressure_prime(p.tau_minus) * p.tau_minus / nu;
    let right = -p.params.pressure_prime(p.tau_plus) * p.tau_plus / nu;
    let slope = p.derivative(&p.tau_bar).iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let thickness = (p.tau_plus - p.tau_minus).abs() / slope;
    let width = thickness.min(2.0 / theta);
    let values: Vec<f64> = p.x.iter().map(|&x| left + (right - left) * 0.5 * (1.0 + (x / width).tanh())).collect();
    let diff: Vec<f64> = shock_rate(p).iter().zip(&values).map(|(a, b)| a - b).collect();
    let fitted = (tail_rate(&p.x, &diff, Side::Left), tail_rate(&p.x, &diff, Side::Right));
    Ok(Interpolant { values, width, left, right, fitted_rates: fitted })
}

/// Which ODE defines `phi1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ShockGaugeOde {
    /// `(c/2) phi1' + (w - I) phi1 = 0`.
    #[default]
    Transport,
    /// `phi1' = -K (w - I) phi1` with a large constant `K`.
    Steep(f64),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ShockGauge {
    pub phi1: Vec<f64>,
    pub phi2: f64,
    pub phi3: Vec<f64>,
    /// `(c/2) phi1' + alpha phi3`, the coefficient of `tau_x^2` in `-dE/dt`.
    pub coercivity: Vec<f64>,
    pub coercivity_min: f64,
    /// `phi1 - alpha phi2 - nu b phi3`.
    pub cross: Vec<f64>,
    pub phi1_bounds: (f64, f64),
    /// `max |int_0^x (w - I)|`.
    pub exponent_sup: f64,
    pub ode: ShockGaugeOde,
}

/// Cumulative trapezoid integral from the middle of the grid.
fn integral_from_centre(x: &[f64], f: &[f64]) -> Vec<f64> {
    let n = x.len();
    let c = (n - 1) / 2;
    let mut out = vec![0.0; n];
    for j in c + 1..n {
        out[j] = out[j - 1] + 0.5 * (x[j] - x[j - 1]) * (f[j] + f[j - 1]);
    }
    for j in (0..c).rev() {
        out[j] = out[j + 1] - 0.5 * (x[j + 1] - x[j]) * (f[j] + f[j + 1]);
    }
    let shift = if x[c] == 0.0 { 0.0 } else { out[c] - 0.5 * (0.0 - x[c]) * f[c] };
    out.iter().map(|v| v - shift).collect()
}

/// Gauge on the line. `phi2 = None` picks the largest `2^-k` with
/// coercivity at least half of `min(I) min(phi1)`.
pub fn build_shock_gauge(p: &ShockProfile, interp: &Interpolant, phi2: Option<f64>, ode: ShockGaugeOde) -> Result<ShockGauge> {
    let w = shock_rate(p);
    let diff: Vec<f64> = w.iter().zip(&interp.values).map(|(a, b)| a - b).collect();
    let expo = integral_from_centre(&p.x, &diff);
    let k = match ode {
        ShockGaugeOde::Transport => 2.0 / p.speed,
        ShockGaugeOde::Steep(k) => k,
    };
    let phi1: Vec<f64> = expo.iter().map(|e| (-k * e).exp()).collect();
    let exponent_sup = expo.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let alpha = shock_alpha(p);
    let nu = p.params.nu;
    let b: Vec<f64> = p.tau_bar.iter().map(|t| 1.0 / t).collect();
    let dphi1 = p.derivative(&phi1);
    let build = |phi2: f64| {
        let phi3: Vec<f64> = (0..p.n()).map(|j| (phi1[j] - alpha[j] * phi2) / (nu * b[j])).collect();
        let coer: Vec<f64> = (0..p.n()).map(|j| 0.5 * p.speed * dphi1[j] + alpha[j] * phi3[j]).collect();
        let cross: Vec<f64> = (0..p.n()).map(|j| phi1[j] - alpha[j] * phi2 - nu * b[j] * phi3[j]).collect();
        (phi3, coer, cross)
    };
    let (lo, hi) = phi1.iter().fold((f64::INFINITY, 0.0f64), |(a, b), v| (a.min(*v), b.max(*v)));
    let imin = interp.values.iter().cloned().fold(f64::INFINITY, f64::min);
    let chosen = match phi2 {
        Some(v) => v,
        None => {
            let target = 0.5 * imin * lo;
            let mut pick = None;
            for j in 0..=40 {
                let v = 2f64.powi(-j);
                let (_, coer, _) = build(v);
                if coer.iter().cloned().fold(f64::INFINITY, f64::min) >= target {
                    pick = Some(v);
                    break;
                }
            }
            pick.ok_or_else(|| Error::Gauge("no phi2 = 2^-k, k <= 40, makes the shock gauge coercive".into()))?
        }
    };
    let (phi3, coer, cross) = build(chosen);
    let cmin = coer.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(ShockGauge {
        phi1,
        phi2: chosen,
        phi3,
        coercivity: coer,
        coercivity_min: cmin,
        cross,
        phi1_bounds: (lo, hi),
        exponent_sup,
        ode,
    })
}

fn trapezoid(x: &[f64], f: &[f64]) -> f64 {
    (1..x.len()).map(|j| 0.5 * (x[j] - x[j - 1]) * (f[j] + f[j - 1])).sum()
}

/// `int 1/2 phi1 tau_x^2 + 1/2 phi2 u_x^2 + phi3 tau u_x`.
pub fn shock_energy(p: &ShockProfile, g: &ShockGauge, tau: &[f64], u: &[f64]) -> f64 {
    let tx = p.derivative(tau);
    let ux = p.derivative(u);
    let dens: Vec<f64> = (0..p.n())
        .map(|j| 0.5 * g.phi1[j] * tx[j] * tx[j] + 0.5 * g.phi2 * ux[j] * ux[j] + g.phi3[j] * tau[j] * ux[j])
        .collect();
    trapezoid(&p.x, &dens)
}

/// Dense matrix of the linearization on the interior points, unknowns
/// ordered `(tau_1..tau_{n-2}, u_1..u_{n-2})`.
pub fn shock_operator(p: &ShockProfile) -> Mat<f64> {
    let n = p.n();
    let m = n - 2;
    let h = p.dx();
    let mut d = Mat::<f64>::zeros(n, n);
    for j in 0..n {
        for (k, w) in fd_row(n, j) {
            d[(j, k)] += w / h;
        }
    }
    let alpha = shock_alpha(p);
    let b: Vec<f64> = p.tau_bar.iter().map(|t| 1.0 / t).collect();
    let c = p.speed;
    let nu = p.params.nu;
    // (b u_x)_x = D diag(b) D u on the full grid, restricted to the interior
    let mut visc = Mat::<f64>::zeros(n, n);
    for i in 0..n {
        for (k, w) in fd_row(n, i) {
            let bw = b[k] * w / h;
            for (l, w2) in fd_row(n, k) {
                visc[(i, l)] += bw * w2 / h;
            }
        }
    }
    let mut a = Mat::<f64>::zeros(2 * m, 2 * m);
    for i in 1..n - 1 {
        for j in 1..n - 1 {
            let (r, s) = (i - 1, j - 1);
            a[(r, s)] = c * d[(i, j)];
            a[(r, m + s)] = d[(i, j)];
            a[(m + r, s)] = d[(i, j)] * alpha[j];
            a[(m + r, m + s)] = c * d[(i, j)] + nu * visc[(i, j)];
        }
    }
    a
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ShockEvolveConfig {
    pub dt: f64,
    pub t_final: f64,
    /// Fraction of the domain at each end watched for contamination.
    pub edge_fraction: f64,
    /// Largest tolerated share of the `L^2` mass inside the edge strips.
    pub edge_tol: f64,
}

impl Default for ShockEvolveConfig {
    fn default() -> Self {
        Self { dt: 0.01, t_final: 2.0, edge_fraction: 0.1, edge_tol: 1e-6 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ShockRun {
    pub trace: EnergyTrace,
    pub fit: DampingFit,
    pub edge_share: f64,
    pub final_tau: Vec<f64>,
    pub final_u: Vec<f64>,
}

/// Integrates the linearization with a two-stage L-stable SDIRK scheme
/// (one LU of `I - gamma dt L`) and fits the damping inequality to the
/// shock energy.
pub fn evolve_shock_linear(
    p: &ShockProfile,
    gauge: &ShockGauge,
    tau0: &[f64],
    u0: &[f64],
    cfg: &ShockEvolveConfig,
) -> Result<ShockRun> {
    let n = p.n();
    if tau0.len() != n || u0.len() != n {
        return Err(Error::GridMismatch { expected: n, got: tau0.len().min(u0.len()) });
    }
    if !(cfg.dt > 0.0 && cfg.t_final > 0.0) {
        return Err(Error::Config("need dt > 0 and T > 0".into()));
    }
    let m = n - 2;
    let a = shock_operator(p);
    let g = 1.0 - std::f64::consts::FRAC_1_SQRT_2;
    let shifted = Mat::<f64>::from_fn(2 * m, 2 * m, |i, j| if i == j { 1.0 } else { 0.0 } - g * cfg.dt * a[(i, j)]);
    let lu = RealLu::new(&shifted)?;
    let mut y: Vec<f64> = tau0[1..n - 1].iter().chain(&u0[1..n - 1]).copied().collect();
    let unpack = |y: &[f64]| -> (Vec<f64>, Vec<f64>) {
        let mut t = vec![0.0; n];
        let mut u = vec![0.0; n];
        t[1..n - 1].copy_from_slice(&y[..m]);
        u[1..n - 1].copy_from_slice(&y[m..]);
        (t, u)
    };
    let edge = (cfg.edge_fraction * n as f64).ceil() as usize;
    let mut trace = EnergyTrace { k: 1, ..Default::default() };
    let mut edge_share: f64 = 0.0;
    let mut record = |t: f64, y: &[f64], trace: &mut EnergyTrace| -> Result<()> {
        let (tt, uu) = unpack(y);
        let sq: Vec<f64> = tt.iter().zip(&uu).map(|(a, b)| a * a + b * b).collect();
        let l2 = trapezoid(&p.x, &sq);
        if !l2.is_finite() || l2.sqrt() > crate::evolution::OVERFLOW_GUARD {
            return Err(Error::Integration { time: t, reason: "overflow".into() });
        }
        let strip: f64 = sq[..edge].iter().chain(&sq[n - edge..]).sum::<f64>() * p.dx();
        if l2 > 0.0 {
            edge_share = edge_share.max(strip / l2);
        }
        let tx = p.derivative(&tt);
        let ux = p.derivative(&uu);
        let d1: Vec<f64> = (0..n).map(|j| sq[j] + tx[j] * tx[j] + ux[j] * ux[j]).collect();
        trace.times.push(t);
        trace.energy.push(shock_energy(p, gauge, &tt, &uu));
        trace.l2.push(l2.sqrt());
        let h1 = trapezoid(&p.x, &d1).sqrt();
        trace.h1.push(h1);
        trace.hk.push(h1);
        Ok(())
    };
    record(0.0, &y, &mut trace)?;
    let steps = (cfg.t_final / cfg.dt).round().max(1.0) as usize;
    for s in 1..=steps {
        let y1 = lu.solve(&y);
        let ly1 = matvec(a.as_ref(), &y1);
        let rhs: Vec<f64> = y.iter().zip(&ly1).map(|(a, b)| a + (1.0 - g) * cfg.dt * b).collect();
        y = lu.solve(&rhs);
        record(s as f64 * cfg.dt, &y, &mut trace)?;
    }
    if edge_share > cfg.edge_tol {
        return Err(Error::Integration {
            time: cfg.t_final,
            reason: format!("boundary contamination: {edge_share:.3e} of the L2 mass reached the edge strips"),
        });
    }
    let fit = trace.fit(&FitOptions::default())?;
    let (ft, fu) = unpack(&y);
    Ok(ShockRun { trace, fit, edge_share, final_tau: ft, final_u: fu })
}

/// Smooth bump `amp exp(-(x - x0)^2 / w^2)` for both components, with the
/// velocity part phase-shifted.
pub fn gaussian_perturbation(p: &ShockProfile, amp: f64, x0: f64, w: f64) -> (Vec<f64>, Vec<f64>) {
    let tau = p.x.iter().map(|x| amp * (-((x - x0) / w).powi(2)).exp()).collect();
    let u = p.x.iter().map(|x| -0.5 * amp * ((x - x0) / w) * (-((x - x0) / w).powi(2)).exp()).collect();
    (tau, u)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gas() -> ModelParams {
        ModelParams::isentropic_gas(5.0 / 3.0, 1.0, 0.5)
    }

    #[test]
    fn fd_exact_on_quartics() {
        let x: Vec<f64> = (0..20).map(|j| -1.0 + 0.1 * j as f64).collect();
        let f: Vec<f64> = x.iter().map(|x| x.powi(4) - 2.0 * x.powi(3) + x).collect();
        let d = fd_derivative(&f, 0.1);
        for (xj, dj) in x.iter().zip(&d) {
            let want = 4.0 * xj.powi(3) - 6.0 * xj * xj + 1.0;
            assert!((dj - want).abs() < 1e-10, "{dj} vs {want}");
        }
    }

    #[test]
    fn profile_basics() {
        let p = solve_shock_profile(&gas(), 1.0, 2.0, &ShockOptions::default()).unwrap();
        assert!(rankine_hugoniot_residual(&p) <= 1e-12);
        assert!(p.is_monotone());
        assert!(p.speed > 0.0);
        assert!((p.decay_rate / p.predicted_rates.0.min(p.predicted_rates.1) - 1.0).abs() < 0.05);
        assert!(p.steady_residual() < 1e-4, "{}", p.steady_residual());
    }

    #[test]
    fn rejects_bad_input() {
        assert!(solve_shock_profile(&gas(), 1.0, 1.0, &ShockOptions::default()).is_err());
        assert!(solve_shock_profile(&ModelParams::st_venant(3.0, 0.1), 1.0, 2.0, &ShockOptions::default()).is_err());
        let tight = ShockOptions { half_width: Some(1.0), ..Default::default() };
        assert!(matches!(solve_shock_profile(&gas(), 1.0, 2.0, &tight), Err(Error::Domain(_))));
        // the inviscid form only connects decreasing pairs
        let inv = ShockOptions { ode: ShockOde::Inviscid, ..Default::default() };
        assert!(matches!(solve_shock_profile(&gas(), 1.0, 2.0, &inv), Err(Error::NoProfile(_))));
        assert!(solve_shock_profile(&gas(), 2.0, 1.0, &inv).is_ok());
    }

    #[test]
    fn alpha_endstates() {
        let p = solve_shock_profile(&gas(), 1.0, 2.0, &ShockOptions::default()).unwrap();
        let a = shock_alpha(&p);
        let n = p.n();
        assert!((a[0] + p.params.pressure_prime(1.0)).abs() < 1e-6);
        assert!((a[n - 1] + p.params.pressure_prime(2.0)).abs() < 1e-6);
    }

    #[test]
    fn gauge_cross_term_vanishes() {
        let p = solve_shock_profile(&gas(), 1.0, 2.0, &ShockOptions::default()).unwrap();
        let i = build_interpolant(&p, 0.5 * p.decay_rate).unwrap();
        let g = build_shock_gauge(&p, &i, None, ShockGaugeOde::Transport).unwrap();
        assert!(g.cross.iter().all(|c| c.abs() < 1e-12 * g.phi1_bounds.1));
        assert!(g.coercivity_min > 0.0);
        assert!(build_interpolant(&p, 2.0 * p.decay_rate).is_err());
    }
}
