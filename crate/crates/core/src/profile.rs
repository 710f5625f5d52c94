//! Periodic traveling waves by Fourier collocation and damped Newton.
//!
//! With `u = q - c tau` the steady co-moving system collapses to one scalar
//! equation for `tau`, solved here in conservative form
//!
//! ```text
//! G(tau) = nu c (b(tau) tau')' + c^2 tau' + p(tau)' - S(tau, q - c tau) = 0
//! ```
//!
//! where `p`, `b`, `S` come from [`ModelParams`]. The scalar reduction in
//! non-conservative form is exposed separately by [`ReducedOde`] so the two
//! evaluations can be cross-checked.

use std::f64::consts::PI;
use std::io::Write;

use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{mat_from_rows, RealLu};
use crate::model::{comoving_residual, ModelParams, System};
use crate::spectral::PeriodicGrid;

pub const NEWTON_TOL: f64 = 1e-10;
pub const POSITIVITY_FLOOR: f64 = 1e-6;
pub const IDENTITY_TOL: f64 = 1e-8;

/// Which scalar closes the Newton system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Closure {
    /// `q` given, `c` solved for, integral phase condition.
    #[default]
    FixedDischarge,
    /// `c` given, `q` solved for, integral phase condition.
    FixedSpeed,
    /// `q` given, `c` and the period solved for, first Fourier
    /// coefficient pinned to `amplitude / 2` (real).
    FixedAmplitude { amplitude: f64 },
    /// `c` and `q` given, no phase condition.
    NoPhase,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveProfile {
    pub params: ModelParams,
    pub period: f64,
    pub n: usize,
    pub tau_bar: Vec<f64>,
    pub u_bar: Vec<f64>,
    pub speed: f64,
    pub residual_norm: f64,
    #[serde(default)]
    pub closure: Closure,
}

impl WaveProfile {
    /// Constant state `tau0` with the equilibrium velocity, speed `c`.
    pub fn constant(params: ModelParams, period: f64, n: usize, tau0: f64, u0: f64) -> Result<Self> {
        params.validate()?;
        PeriodicGrid::new(n, period)?;
        if !(tau0 > 0.0) {
            return Err(Error::Domain(format!("tau0 must be positive, got {tau0}")));
        }
        let c = params.speed;
        let params = ModelParams { discharge: u0 + c * tau0, ..params };
        let mut p = Self {
            params,
            period,
            n,
            tau_bar: vec![tau0; n],
            u_bar: vec![u0; n],
            speed: c,
            residual_norm: 0.0,
            closure: Closure::NoPhase,
        };
        p.residual_norm = p.full_residual()?.iter().fold(0.0, |m, v| m.max(v.abs()));
        Ok(p)
    }

    pub fn grid(&self) -> PeriodicGrid {
        PeriodicGrid::new(self.n, self.period).expect("profile grid validated on construction")
    }

    pub fn points(&self) -> Vec<f64> {
        self.grid().points()
    }

    pub fn froude(&self) -> f64 {
        self.params.froude
    }

    pub fn discharge(&self) -> f64 {
        self.params.discharge
    }

    pub fn tau_x(&self) -> Vec<f64> {
        self.grid().derivative(&self.tau_bar, 1)
    }

    pub fn u_x(&self) -> Vec<f64> {
        self.grid().derivative(&self.u_bar, 1)
    }

    pub fn amplitude(&self) -> f64 {
        let (lo, hi) = min_max(&self.tau_bar);
        hi - lo
    }

    pub fn tau_range(&self) -> (f64, f64) {
        min_max(&self.tau_bar)
    }

    /// Sup-norm of the steady co-moving residual (both equations).
    pub fn full_residual(&self) -> Result<Vec<f64>> {
        let grid = self.grid();
        let zero = vec![0.0; self.n];
        let params = self.params.with_speed(self.speed);
        let (r1, r2) = comoving_residual(&params, &grid, &self.tau_bar, &self.u_bar, &zero, &zero)?;
        Ok(r1.into_iter().zip(r2).map(|(a, b)| if a.abs() > b.abs() { a } else { b }).collect())
    }

    /// Residual of the profile interpolated onto an `m`-point grid.
    pub fn interpolated_residual(&self, m: usize) -> Result<f64> {
        let fine = self.resampled(m)?;
        Ok(fine.full_residual()?.iter().fold(0.0, |a, v| a.max(v.abs())))
    }

    /// Same wave on an `m`-point grid (no re-solve).
    pub fn resampled(&self, m: usize) -> Result<WaveProfile> {
        let grid = self.grid();
        let (_, tau) = grid.resample(&self.tau_bar, m)?;
        let q = self.discharge();
        let u = tau.iter().map(|t| q - self.speed * t).collect();
        Ok(WaveProfile { n: m, tau_bar: tau, u_bar: u, ..self.clone() })
    }

    /// Shift by `cells` grid points.
    pub fn translated(&self, cells: usize) -> WaveProfile {
        let g = self.grid();
        WaveProfile {
            tau_bar: g.shift(&self.tau_bar, cells),
            u_bar: g.shift(&self.u_bar, cells),
            ..self.clone()
        }
    }

    /// Spectral tail indicator of `tau_bar`.
    pub fn tail_ratio(&self) -> f64 {
        self.grid().tail_ratio(&self.tau_bar)
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["x", "tau_bar", "u_bar"])?;
        for ((x, t), u) in self.points().iter().zip(&self.tau_bar).zip(&self.u_bar) {
            wr.write_record([fmt(*x), fmt(*t), fmt(*u)])?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let p: WaveProfile = serde_json::from_str(s)?;
        p.params.validate()?;
        PeriodicGrid::new(p.n, p.period)?;
        if p.tau_bar.len() != p.n || p.u_bar.len() != p.n {
            return Err(Error::GridMismatch { expected: p.n, got: p.tau_bar.len().min(p.u_bar.len()) });
        }
        Ok(p)
    }
}

pub(crate) fn fmt(v: f64) -> String {
    format!("{v:.17e}")
}

pub(crate) fn min_max(v: &[f64]) -> (f64, f64) {
    v.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)))
}

/// Scalar second-order profile equation in non-conservative form:
///
/// `nu c (b(tau) tau')' = -S(tau, q - c tau) - c^2 tau' - p'(tau) tau'`
///
/// which for St. Venant reads
/// `nu c (tau^-2 tau')' = 1 - tau (q - c tau)^2 - c^2 tau' + F^-2 tau^-3 tau'`.
#[derive(Debug, Clone, Copy)]
pub struct ReducedOde {
    pub params: ModelParams,
    pub speed: f64,
    pub discharge: f64,
}

pub fn reduce_profile_ode(params: &ModelParams) -> Result<ReducedOde> {
    params.validate()?;
    if params.speed == 0.0 {
        return Err(Error::Degenerate("wave speed c = 0 forces u to be constant".into()));
    }
    Ok(ReducedOde { params: *params, speed: params.speed, discharge: params.discharge })
}

impl ReducedOde {
    pub fn velocity(&self, tau: &[f64]) -> Vec<f64> {
        tau.iter().map(|t| self.discharge - self.speed * t).collect()
    }

    /// `lhs - rhs` of the reduced equation on `grid`.
    pub fn residual(&self, grid: &PeriodicGrid, tau: &[f64]) -> Result<Vec<f64>> {
        grid.check(tau)?;
        let p = &self.params;
        let c = self.speed;
        let tx = grid.derivative(tau, 1);
        let flux: Vec<f64> = tau.iter().zip(&tx).map(|(&t, &d)| p.viscous_weight(t) * d).collect();
        let lhs = grid.derivative(&flux, 1);
        Ok((0..grid.n())
            .map(|j| {
                let t = tau[j];
                let u = self.discharge - c * t;
                p.nu * c * lhs[j] + p.source(t, u) * -1.0 + c * c * tx[j] + p.pressure_prime(t) * tx[j]
            })
            .collect())
    }
}

/// Newton controls.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct NewtonOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub max_halvings: usize,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self { tol: NEWTON_TOL, max_iter: 60, max_halvings: 30 }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SolveStats {
    pub iterations: usize,
    pub halvings: usize,
    pub residual: f64,
}

/// Collocation system for one closure.
struct System1 {
    params: ModelParams,
    n: usize,
    closure: Closure,
    /// Derivative matrix on the unit-period grid.
    d1: Mat<f64>,
    phase_row: Vec<f64>,
    cosines: Vec<f64>,
    sines: Vec<f64>,
}

/// Unknowns beyond the grid values.
#[derive(Debug, Clone, Copy)]
struct Scalars {
    c: f64,
    q: f64,
    period: f64,
}

impl System1 {
    fn new(params: ModelParams, n: usize, closure: Closure, reference: &[f64], period: f64) -> Result<Self> {
        let unit = PeriodicGrid::new(n, 1.0)?;
        let d1 = mat_from_rows(&unit.derivative_matrix());
        let grid = PeriodicGrid::new(n, period)?;
        let rx = grid.derivative(reference, 1);
        let phase_row = rx.iter().map(|v| v / n as f64).collect();
        let cosines = (0..n).map(|j| (2.0 * PI * j as f64 / n as f64).cos()).collect();
        let sines = (0..n).map(|j| (2.0 * PI * j as f64 / n as f64).sin()).collect();
        Ok(Self { params, n, closure, d1, phase_row, cosines, sines })
    }

    fn extras(&self) -> usize {
        match self.closure {
            Closure::FixedDischarge | Closure::FixedSpeed => 1,
            Closure::FixedAmplitude { .. } => 2,
            Closure::NoPhase => 0,
        }
    }

    fn apply_d(&self, f: &[f64], period: f64) -> Vec<f64> {
        let mut out = crate::linalg::matvec(self.d1.as_ref(), f);
        out.iter_mut().for_each(|v| *v /= period);
        out
    }

    /// Residual split into the grid part and the closure rows.
    fn residual(&self, tau: &[f64], s: Scalars) -> Vec<f64> {
        let p = &self.params;
        let (c, q, xi) = (s.c, s.q, s.period);
        let tx = self.apply_d(tau, xi);
        let flux: Vec<f64> = tau.iter().zip(&tx).map(|(&t, &d)| p.viscous_weight(t) * d).collect();
        let visc = self.apply_d(&flux, xi);
        let press: Vec<f64> = tau.iter().map(|&t| p.pressure(t)).collect();
        let px = self.apply_d(&press, xi);
        let mut r: Vec<f64> = (0..self.n)
            .map(|j| {
                let u = q - c * tau[j];
                p.nu * c * visc[j] + c * c * tx[j] + px[j] - p.source(tau[j], u)
            })
            .collect();
        match self.closure {
            Closure::FixedDischarge | Closure::FixedSpeed => {
                r.push(dot(&self.phase_row, tau));
            }
            Closure::FixedAmplitude { amplitude } => {
                r.push(dot(&self.cosines, tau) / self.n as f64 - 0.5 * amplitude);
                r.push(dot(&self.sines, tau) / self.n as f64);
            }
            Closure::NoPhase => {}
        }
        r
    }

    fn jacobian(&self, tau: &[f64], s: Scalars) -> Mat<f64> {
        let p = &self.params;
        let n = self.n;
        let m = n + self.extras();
        let (c, q, xi) = (s.c, s.q, s.period);
        let d = &self.d1;
        let tx1 = crate::linalg::matvec(d.as_ref(), tau);
        let b: Vec<f64> = tau.iter().map(|&t| p.viscous_weight(t)).collect();
        let bp: Vec<f64> = tau.iter().map(|&t| p.viscous_weight_prime(t)).collect();
        // inner operator of the viscous term on the unit grid:
        // v -> b D v + b'(tau) (D tau) v
        let inner = Mat::<f64>::from_fn(n, n, |i, j| b[i] * d[(i, j)] + if i == j { bp[i] * tx1[i] } else { 0.0 });
        let visc = d * &inner;
        let pp: Vec<f64> = tau.iter().map(|&t| p.pressure_prime(t)).collect();
        let mut jac = Mat::<f64>::zeros(m, m);
        let s2 = 1.0 / (xi * xi);
        let s1 = 1.0 / xi;
        for i in 0..n {
            for j in 0..n {
                jac[(i, j)] = p.nu * c * s2 * visc[(i, j)] + (c * c * d[(i, j)] + d[(i, j)] * pp[j]) * s1;
            }
            // d/dtau of -S(tau, q - c tau)
            let u = q - c * tau[i];
            let (ds_dtau, ds_du) = source_partials(p, tau[i], u);
            jac[(i, i)] -= ds_dtau - c * ds_du;
        }
        let flux: Vec<f64> = tau.iter().zip(&tx1).map(|(&t, &g)| p.viscous_weight(t) * g).collect();
        let visc_val = crate::linalg::matvec(d.as_ref(), &flux);
        let press: Vec<f64> = tau.iter().map(|&t| p.pressure(t)).collect();
        let px1 = crate::linalg::matvec(d.as_ref(), &press);
        let dc = |i: usize| {
            let u = q - c * tau[i];
            let (_, ds_du) = source_partials(p, tau[i], u);
            p.nu * s2 * visc_val[i] + 2.0 * c * s1 * tx1[i] + ds_du * tau[i]
        };
        let dq = |i: usize| {
            let u = q - c * tau[i];
            -source_partials(p, tau[i], u).1
        };
        let dxi = |i: usize| -2.0 * p.nu * c * s2 * s1 * visc_val[i] - (c * c * tx1[i] + px1[i]) * s2;
        match self.closure {
            Closure::FixedDischarge => {
                for i in 0..n {
                    jac[(i, n)] = dc(i);
                    jac[(n, i)] = self.phase_row[i];
                }
            }
            Closure::FixedSpeed => {
                for i in 0..n {
                    jac[(i, n)] = dq(i);
                    jac[(n, i)] = self.phase_row[i];
                }
            }
            Closure::FixedAmplitude { .. } => {
                for i in 0..n {
                    jac[(i, n)] = dc(i);
                    jac[(i, n + 1)] = dxi(i);
                    jac[(n, i)] = self.cosines[i] / n as f64;
                    jac[(n + 1, i)] = self.sines[i] / n as f64;
                }
            }
            Closure::NoPhase => {}
        }
        jac
    }

    fn unpack(&self, z: &[f64], s: Scalars) -> Scalars {
        let n = self.n;
        match self.closure {
            Closure::FixedDischarge => Scalars { c: z[n], ..s },
            Closure::FixedSpeed => Scalars { q: z[n], ..s },
            Closure::FixedAmplitude { .. } => Scalars { c: z[n], period: z[n + 1], ..s },
            Closure::NoPhase => s,
        }
    }

    fn pack(&self, tau: &[f64], s: Scalars) -> Vec<f64> {
        let mut z = tau.to_vec();
        match self.closure {
            Closure::FixedDischarge => z.push(s.c),
            Closure::FixedSpeed => z.push(s.q),
            Closure::FixedAmplitude { .. } => {
                z.push(s.c);
                z.push(s.period);
            }
            Closure::NoPhase => {}
        }
        z
    }
}

fn source_partials(p: &ModelParams, tau: f64, u: f64) -> (f64, f64) {
    match p.system {
        System::StVenant => (-u * u, -2.0 * tau * u),
        System::IsentropicGas => (0.0, 0.0),
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn sup(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Solve for a profile starting from `guess`.
///
/// `guess.params.discharge` and `guess.speed` seed the scalar unknowns; the
/// closure decides which of them stay fixed. The phase reference is the
/// guess itself.
pub fn solve_profile(guess: &WaveProfile, closure: Closure, opts: &NewtonOptions) -> Result<(WaveProfile, SolveStats)> {
    let params = guess.params;
    params.validate()?;
    if let Some(j) = guess.tau_bar.iter().position(|&t| !(t > 0.0)) {
        return Err(Error::Positivity(format!("guess has tau = {} at index {j}", guess.tau_bar[j])));
    }
    if closure != Closure::NoPhase && guess.speed == 0.0 {
        return Err(Error::Degenerate("wave speed c = 0 forces u to be constant".into()));
    }
    let sys = System1::new(params, guess.n, closure, &guess.tau_bar, guess.period)?;
    let mut s = Scalars { c: guess.speed, q: params.discharge, period: guess.period };
    let mut tau = guess.tau_bar.clone();
    let mut r = sys.residual(&tau, s);
    let mut rn = sup(&r);
    let mut stats = SolveStats { iterations: 0, halvings: 0, residual: rn };
    while rn > opts.tol {
        if stats.iterations >= opts.max_iter {
            return Err(Error::NoConvergence {
                iterations: stats.iterations,
                residual: rn,
                last_iterate: Box::new(sys.pack(&tau, s)),
            });
        }
        stats.iterations += 1;
        let jac = sys.jacobian(&tau, s);
        let step = RealLu::new(&jac)?.solve(&r);
        let z0 = sys.pack(&tau, s);
        let mut lam = 1.0;
        let mut accepted = false;
        let mut positivity_blocked = false;
        for _ in 0..=opts.max_halvings {
            let z: Vec<f64> = z0.iter().zip(&step).map(|(a, d)| a - lam * d).collect();
            let trial_tau = &z[..sys.n];
            let trial_s = sys.unpack(&z, s);
            let min_tau = trial_tau.iter().copied().fold(f64::INFINITY, f64::min);
            if !(min_tau >= POSITIVITY_FLOOR) || !(trial_s.period > 0.0) {
                positivity_blocked = true;
                lam *= 0.5;
                stats.halvings += 1;
                continue;
            }
            let tr = sys.residual(trial_tau, trial_s);
            let trn = sup(&tr);
            if trn.is_finite() && (trn < (1.0 - 1e-4 * lam) * rn || trn <= opts.tol) {
                tau = trial_tau.to_vec();
                s = trial_s;
                r = tr;
                rn = trn;
                accepted = true;
                break;
            }
            lam *= 0.5;
            stats.halvings += 1;
        }
        if !accepted {
            if positivity_blocked {
                return Err(Error::Positivity(format!(
                    "every damped step leaves tau below {POSITIVITY_FLOOR} (residual {rn:.3e})"
                )));
            }
            return Err(Error::NoConvergence {
                iterations: stats.iterations,
                residual: rn,
                last_iterate: Box::new(sys.pack(&tau, s)),
            });
        }
    }
    stats.residual = rn;
    let params = ModelParams { speed: s.c, discharge: s.q, ..params };
    let u = tau.iter().map(|t| s.q - s.c * t).collect();
    let mut out = WaveProfile {
        params,
        period: s.period,
        n: guess.n,
        tau_bar: tau,
        u_bar: u,
        speed: s.c,
        residual_norm: 0.0,
        closure,
    };
    let final_res = sys.residual(&out.tau_bar, s);
    out.residual_norm = sup(&final_res[..out.n]);
    Ok((out, stats))
}

/// How the discharge follows the Froude number along a branch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DischargeRule {
    /// `q = 1 + 1/F`, the discharge of the reference state in the frame of
    /// its neutral mode.
    HopfNormalized,
    Fixed(f64),
}

impl DischargeRule {
    pub fn discharge(&self, froude: f64) -> f64 {
        match self {
            DischargeRule::HopfNormalized => 1.0 + 1.0 / froude,
            DischargeRule::Fixed(q) => *q,
        }
    }
}

/// Period of the neutral mode of the reference state, `2 pi sqrt(nu / (F - 2))`.
pub fn hopf_period(params: &ModelParams) -> Result<f64> {
    if params.system != System::StVenant {
        return Err(Error::Domain("onset seeding is defined for the St. Venant system".into()));
    }
    if !(params.froude > 2.0) {
        return Err(Error::Domain(format!("no neutral wavenumber for F = {} <= 2", params.froude)));
    }
    Ok(2.0 * PI * (params.nu / (params.froude - 2.0)).sqrt())
}

/// Small-amplitude wave at the neutral wavenumber of the reference state,
/// with amplitude pinned to `amplitude` and the period solved for.
///
/// The cosine ansatz is only accurate for tiny amplitudes, so larger
/// targets are reached through a geometric amplitude ramp.
pub fn seed_at_onset(params: &ModelParams, amplitude: f64, n: usize, rule: DischargeRule) -> Result<WaveProfile> {
    params.validate()?;
    if !(amplitude > 0.0) {
        return Err(Error::Domain(format!("seed amplitude must be positive, got {amplitude}")));
    }
    let xi = hopf_period(params)?;
    let f = params.froude;
    let c = 1.0 / f;
    let q = rule.discharge(f);
    let start = amplitude.min(SEED_AMPLITUDE);
    let grid = PeriodicGrid::new(n, xi)?;
    let tau: Vec<f64> = grid.points().iter().map(|x| 1.0 + start * (2.0 * PI * x / xi).cos()).collect();
    let u = tau.iter().map(|t| q - c * t).collect();
    let guess = WaveProfile {
        params: ModelParams { speed: c, discharge: q, ..*params },
        period: xi,
        n,
        tau_bar: tau,
        u_bar: u,
        speed: c,
        residual_norm: f64::NAN,
        closure: Closure::FixedAmplitude { amplitude: start },
    };
    let opts = NewtonOptions::default();
    let mut wave = solve_profile(&guess, Closure::FixedAmplitude { amplitude: start }, &opts)?.0;
    let mut amp = start;
    while amp < amplitude {
        amp = (amp * 1.2).min(amplitude);
        wave = solve_profile(&wave, Closure::FixedAmplitude { amplitude: amp }, &opts)?.0;
    }
    Ok(wave)
}

const SEED_AMPLITUDE: f64 = 0.005;

/// Froude number whose neutral period is `0.9 * period`.
pub fn seed_froude(nu: f64, period: f64) -> f64 {
    let k = 2.0 * PI / (0.9 * period);
    2.0 + nu * k * k
}

/// Wave of the given period at `params.froude`, on the branch through the
/// onset wave.
///
/// The wave is born at the Froude number whose neutral period sits just
/// below `period`, grown in amplitude until its period reaches `period`,
/// and then continued in `F` at fixed period.
pub fn seed_profile(params: &ModelParams, period: f64, n: usize, rule: DischargeRule) -> Result<WaveProfile> {
    params.validate()?;
    let f_seed = seed_froude(params.nu, period);
    let born_at = if params.froude < f_seed { params.froude } else { f_seed };
    let seed_params = ModelParams { froude: born_at, ..*params };
    let xi_h = hopf_period(&seed_params)?;
    if period <= xi_h {
        return Err(Error::NoProfile(format!(
            "period {period} is not above the neutral period {xi_h:.4} at F = {}",
            params.froude
        )));
    }
    let mut amp = SEED_AMPLITUDE;
    let mut wave = seed_at_onset(&seed_params, amp, n, rule)?;
    let mut guard = 0;
    while wave.period < period {
        guard += 1;
        if guard > 400 {
            return Err(Error::NoProfile(format!("amplitude growth stalled at period {:.4}", wave.period)));
        }
        let prev = wave.clone();
        let mut factor = 1.2;
        loop {
            let trial_amp = amp * factor;
            let closure = Closure::FixedAmplitude { amplitude: trial_amp };
            match solve_profile(&prev, closure, &NewtonOptions::default()) {
                Ok((w, _)) if w.period > prev.period => {
                    amp = trial_amp;
                    wave = w;
                    break;
                }
                _ => {
                    factor = 1.0 + 0.5 * (factor - 1.0);
                    if factor < 1.0005 {
                        return Err(Error::NoProfile(format!(
                            "period stopped growing at {:.4} (amplitude {amp:.4})",
                            prev.period
                        )));
                    }
                }
            }
        }
    }
    let guess = WaveProfile { period, ..wave };
    let born = solve_profile(&guess, Closure::FixedDischarge, &NewtonOptions::default())?.0;
    if (born.froude() - params.froude).abs() <= 1e-12 {
        return Ok(born);
    }
    let run = continue_in_parameter(&born, params.froude, &StepControl::default(), rule, &[]);
    if run.failed {
        return Err(Error::NoProfile(format!(
            "continuation from F = {born_at:.4} stalled at F = {:.4}",
            run.last().froude()
        )));
    }
    Ok(run.last().clone())
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct StepControl {
    pub initial_step: f64,
    pub min_step: f64,
    pub max_step: f64,
    /// Largest accepted sup-norm change of `tau_bar` between neighbours.
    pub max_jump: f64,
    /// Smallest accepted ratio of new to old amplitude. Guards against
    /// Newton falling onto the constant state.
    pub min_amplitude_ratio: f64,
}

impl Default for StepControl {
    fn default() -> Self {
        Self { initial_step: 0.05, min_step: 1e-4, max_step: 0.1, max_jump: 0.5, min_amplitude_ratio: 0.5 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StepRecord {
    pub froude: f64,
    pub step: f64,
    pub iterations: usize,
    pub accepted: bool,
    pub reason: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ContinuationRun {
    pub path: Vec<f64>,
    pub profiles: Vec<WaveProfile>,
    pub steps: Vec<StepRecord>,
    pub failed: bool,
    pub rule: DischargeRule,
}

impl ContinuationRun {
    pub fn last(&self) -> &WaveProfile {
        self.profiles.last().expect("run holds the start profile")
    }
}

/// Continue `start` in `F` at fixed period up to `target_f`, landing exactly
/// on every value in `stops` along the way (and on `target_f`).
pub fn continue_in_parameter(
    start: &WaveProfile,
    target_f: f64,
    control: &StepControl,
    rule: DischargeRule,
    stops: &[f64],
) -> ContinuationRun {
    let mut run = ContinuationRun {
        path: vec![start.froude()],
        profiles: vec![start.clone()],
        steps: Vec::new(),
        failed: false,
        rule,
    };
    let dir = if target_f >= start.froude() { 1.0 } else { -1.0 };
    let mut marks: Vec<f64> = stops
        .iter()
        .copied()
        .filter(|f| (f - start.froude()) * dir > 1e-12 && (target_f - f) * dir > 1e-12)
        .collect();
    marks.push(target_f);
    marks.sort_by(|a, b| (a * dir).total_cmp(&(b * dir)));
    let mut h = control.initial_step.min(control.max_step);
    let mut current = start.clone();
    for mark in marks {
        while (mark - current.froude()) * dir > 1e-12 {
            let remaining = (mark - current.froude()).abs();
            let step = h.min(remaining);
            let f_new = if step >= remaining { mark } else { current.froude() + dir * step };
            let q = rule.discharge(f_new);
            let guess = WaveProfile {
                params: ModelParams { froude: f_new, discharge: q, ..current.params },
                ..current.clone()
            };
            let outcome = solve_profile(&guess, Closure::FixedDischarge, &NewtonOptions::default());
            let (accepted, iterations, reason) = match outcome {
                Ok((w, st)) => {
                    let jump = w
                        .tau_bar
                        .iter()
                        .zip(&current.tau_bar)
                        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
                    let ratio = w.amplitude() / current.amplitude();
                    if ratio < control.min_amplitude_ratio {
                        (false, st.iterations, Some(format!("amplitude ratio {ratio:.3e} below bound")))
                    } else if jump <= control.max_jump {
                        current = w;
                        (true, st.iterations, None)
                    } else {
                        (false, st.iterations, Some(format!("jump {jump:.3e} exceeds bound")))
                    }
                }
                Err(e) => (false, 0, Some(e.to_string())),
            };
            run.steps.push(StepRecord { froude: f_new, step, iterations, accepted, reason });
            if accepted {
                if step < remaining {
                    h = (h * 1.5).min(control.max_step);
                }
                run.path.push(current.froude());
                run.profiles.push(current.clone());
            } else {
                h = 0.5 * step;
                if h < control.min_step {
                    run.failed = true;
                    return run;
                }
            }
        }
    }
    run
}

/// `<f(tau) u_x>` over one period.
pub fn check_mean_identity(profile: &WaveProfile, f: impl Fn(f64) -> f64) -> f64 {
    let g = profile.grid();
    let ux = g.derivative(&profile.u_bar, 1);
    let prod: Vec<f64> = profile.tau_bar.iter().zip(&ux).map(|(&t, &d)| f(t) * d).collect();
    g.mean(&prod)
}

/// Re-solve on an `m`-point grid starting from the spectral interpolant.
pub fn refine(profile: &WaveProfile, m: usize) -> Result<WaveProfile> {
    let guess = profile.resampled(m)?;
    let closure = match profile.closure {
        Closure::FixedAmplitude { .. } => Closure::FixedDischarge,
        c => c,
    };
    Ok(solve_profile(&guess, closure, &NewtonOptions::default())?.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> ModelParams {
        ModelParams::st_venant(2.5, 0.1)
    }

    #[test]
    fn constant_state_is_trivial_branch() {
        let p = base().with_speed(0.4);
        let w = WaveProfile::constant(p, 6.0, 32, 1.0, 1.0).unwrap();
        assert!(w.residual_norm < 1e-14);
        let (s, st) = solve_profile(&w, Closure::NoPhase, &NewtonOptions::default()).unwrap();
        assert_eq!(st.iterations, 0);
        assert_eq!(s.tau_bar, w.tau_bar);
    }

    #[test]
    fn reduced_ode_on_equilibrium() {
        let p = base().with_speed(0.3).with_discharge(1.3);
        let ode = reduce_profile_ode(&p).unwrap();
        let g = PeriodicGrid::new(16, 4.0).unwrap();
        let r = ode.residual(&g, &[1.0; 16]).unwrap();
        assert!(sup(&r) < 1e-15);
        assert!(matches!(reduce_profile_ode(&base()), Err(Error::Degenerate(_))));
    }

    #[test]
    fn onset_seed_small_amplitude() {
        let p = ModelParams::st_venant(2.02, 0.1);
        let w = seed_at_onset(&p, 0.005, 32, DischargeRule::HopfNormalized).unwrap();
        assert!(w.residual_norm <= NEWTON_TOL);
        assert!((w.amplitude() - 0.01).abs() < 0.001, "amplitude {}", w.amplitude());
        assert!((w.period - hopf_period(&p).unwrap()).abs() / w.period < 0.05);
    }

    #[test]
    fn seeded_wave_satisfies_identities() {
        let p = base();
        let w = seed_profile(&p, 8.0, 128, DischargeRule::HopfNormalized).unwrap();
        assert!(w.residual_norm <= NEWTON_TOL);
        assert_eq!(w.period, 8.0);
        let q = w.discharge();
        for (t, u) in w.tau_bar.iter().zip(&w.u_bar) {
            assert!((u + w.speed * t - q).abs() < 1e-12);
        }
        for f in [|_t: f64| 1.0, |t: f64| t, |t: f64| t * t, |t: f64| t.powi(-3)] {
            assert!(check_mean_identity(&w, f).abs() < IDENTITY_TOL);
        }
        let ode = reduce_profile_ode(&w.params).unwrap();
        let reduced = ode.residual(&w.grid(), &w.tau_bar).unwrap();
        assert!(sup(&reduced) < 1e-8);
    }

    #[test]
    fn translation_keeps_residual() {
        let w = seed_profile(&base(), 8.0, 128, DischargeRule::HopfNormalized).unwrap();
        let r0 = sup(&w.full_residual().unwrap());
        let r1 = sup(&w.translated(11).full_residual().unwrap());
        assert!((r0 - r1).abs() < 1e-12);
    }

    #[test]
    fn continuation_trivial_and_halving() {
        let w = seed_profile(&base(), 8.0, 128, DischargeRule::HopfNormalized).unwrap();
        let run = continue_in_parameter(&w, w.froude(), &StepControl::default(), DischargeRule::HopfNormalized, &[]);
        assert_eq!(run.profiles.len(), 1);
        assert_eq!(run.profiles[0], w);
        let control = StepControl { initial_step: 5.0, max_step: 5.0, max_jump: 0.05, ..Default::default() };
        let run = continue_in_parameter(&w, 2.8, &control, DischargeRule::HopfNormalized, &[]);
        assert!(!run.failed);
        assert!(run.steps.iter().any(|s| !s.accepted));
        assert!((run.last().froude() - 2.8).abs() < 1e-12);
    }

    #[test]
    fn json_round_trip() {
        let w = seed_profile(&base(), 8.0, 32, DischargeRule::HopfNormalized).unwrap();
        let s = w.to_json().unwrap();
        let v: serde_json::Value = serde_json::from_str(&s).unwrap();
        for key in ["params", "period", "n", "tau_bar", "u_bar", "speed", "residual_norm"] {
            assert!(v.get(key).is_some());
        }
        assert_eq!(WaveProfile::from_json(&s).unwrap(), w);
    }
}
