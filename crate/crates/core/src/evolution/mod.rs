//! Time integration of the linearized, nonlinear and modulated systems.
//!
//! All three use the same second-order IMEX Runge-Kutta scheme (ARS(2,2,2)).
//! The implicit part is `nu b_ref u_xx` on the velocity, solved exactly in
//! Fourier space; `b_ref` bounds the viscous weight from above so that the
//! explicit remainder `nu ((b - b_ref) u_x)_x` stays benign. Everything else,
//! including transport, is explicit and pseudospectral.

mod distance;
mod fit;

use std::io::Write;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::conditions::alpha_profile;
use crate::error::{Error, Result};
use crate::expr::{Expr, Var};
use crate::gauge::{energy, GaugeTriple};
use crate::profile::{fmt, WaveProfile};
use crate::spectral::PeriodicGrid;

pub use distance::{space_modulated_distance, DeltaOptions, DeltaResult, NormSpace};
pub use fit::{convolution_fit, damping_fit, lemma_sample_check, ConvolutionFit, DampingFit, FitOptions};

/// Norms above this abort the run.
pub const OVERFLOW_GUARD: f64 = 1e12;

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct EvolveConfig {
    pub dt: f64,
    pub t_final: f64,
    /// Record norms every this many steps.
    pub sample_every: usize,
    /// Store a snapshot every this many steps; 0 keeps only the endpoints.
    pub snapshot_every: usize,
    /// Sobolev index of the `Hk` column.
    pub hk: u32,
}

impl Default for EvolveConfig {
    fn default() -> Self {
        Self { dt: 2e-3, t_final: 5.0, sample_every: 1, snapshot_every: 0, hk: 2 }
    }
}

impl EvolveConfig {
    fn steps(&self) -> Result<usize> {
        if !(self.dt > 0.0) || !(self.t_final > 0.0) || !self.dt.is_finite() || !self.t_final.is_finite() {
            return Err(Error::Config(format!("need dt > 0 and T > 0, got dt = {}, T = {}", self.dt, self.t_final)));
        }
        if self.sample_every == 0 {
            return Err(Error::Config("sample_every must be at least 1".into()));
        }
        Ok((self.t_final / self.dt).round().max(1.0) as usize)
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct EnergyTrace {
    pub times: Vec<f64>,
    pub energy: Vec<f64>,
    pub l2: Vec<f64>,
    pub h1: Vec<f64>,
    pub hk: Vec<f64>,
    pub k: u32,
    /// `||(psi_t, psi_x)||_{H^k}` for modulated runs.
    pub forcing: Option<Vec<f64>>,
    pub fitted_eta: Option<f64>,
    pub fitted_c: Option<f64>,
    pub violation_count: Option<usize>,
}

impl EnergyTrace {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Runs [`damping_fit`] and stores the result on the trace.
    pub fn fit(&mut self, opts: &FitOptions) -> Result<DampingFit> {
        let f = damping_fit(self, opts)?;
        self.fitted_eta = Some(f.eta);
        self.fitted_c = Some(f.c);
        self.violation_count = Some(f.violations);
        Ok(f)
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        let hk = format!("H{}", self.k);
        let mut head = vec!["t", "E", "L2", "H1", hk.as_str()];
        if self.forcing.is_some() {
            head.push("forcing");
        }
        wr.write_record(&head)?;
        for i in 0..self.len() {
            let mut row = vec![fmt(self.times[i]), fmt(self.energy[i]), fmt(self.l2[i]), fmt(self.h1[i]), fmt(self.hk[i])];
            if let Some(f) = &self.forcing {
                row.push(fmt(f[i]));
            }
            wr.write_record(&row)?;
        }
        wr.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub tau: Vec<Vec<f64>>,
    pub u: Vec<Vec<f64>>,
}

impl Trajectory {
    fn push(&mut self, t: f64, tau: &[f64], u: &[f64]) {
        self.times.push(t);
        self.tau.push(tau.to_vec());
        self.u.push(u.to_vec());
    }

    pub fn last(&self) -> Option<(f64, &[f64], &[f64])> {
        let i = self.times.len().checked_sub(1)?;
        Some((self.times[i], &self.tau[i], &self.u[i]))
    }

    /// Frames as long-format CSV `(t, x, tau, u)`.
    pub fn write_csv<W: Write>(&self, grid: &PeriodicGrid, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["t", "x", "tau", "u"])?;
        let x = grid.points();
        for (i, &t) in self.times.iter().enumerate() {
            for j in 0..x.len() {
                wr.write_record([fmt(t), fmt(x[j]), fmt(self.tau[i][j]), fmt(self.u[i][j])])?;
            }
        }
        wr.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub trace: EnergyTrace,
    pub trajectory: Trajectory,
    /// Warnings raised during the run (hypothesis violations and the like).
    pub flags: Vec<String>,
}

/// Splits `dU/dt = F(U, t)` into the implicit viscous part and the rest.
trait ExplicitPart {
    fn explicit(&self, tau: &[f64], u: &[f64], t: f64) -> Result<(Vec<f64>, Vec<f64>)>;
}

struct Imex {
    grid: PeriodicGrid,
    /// `nu b_ref`.
    diffusion: f64,
}

const GAMMA: f64 = 1.0 - std::f64::consts::FRAC_1_SQRT_2;

impl Imex {
    fn implicit(&self, u: &[f64]) -> Vec<f64> {
        let d = self.grid.derivative(u, 2);
        d.iter().map(|v| self.diffusion * v).collect()
    }

    /// Solves `(1 - h nu b_ref d_xx) y = r`.
    fn solve(&self, r: &[f64], h: f64) -> Vec<f64> {
        let mut c = self.grid.coefficients(r);
        for (j, cj) in c.iter_mut().enumerate() {
            let k = self.grid.wavenumber(j);
            *cj /= 1.0 + h * self.diffusion * k * k;
        }
        self.grid.synthesize(&c)
    }

    fn step(&self, rhs: &dyn ExplicitPart, tau: &[f64], u: &[f64], t: f64, dt: f64) -> Result<(Vec<f64>, Vec<f64>)> {
        let g = GAMMA;
        let delta = 1.0 - 1.0 / (2.0 * g);
        let n = tau.len();
        let (e0t, e0u) = rhs.explicit(tau, u, t)?;
        let t1: Vec<f64> = (0..n).map(|j| tau[j] + dt * g * e0t[j]).collect();
        let r1: Vec<f64> = (0..n).map(|j| u[j] + dt * g * e0u[j]).collect();
        let u1 = self.solve(&r1, g * dt);
        let (e1t, e1u) = rhs.explicit(&t1, &u1, t + g * dt)?;
        let i1 = self.implicit(&u1);
        let t2: Vec<f64> = (0..n).map(|j| tau[j] + dt * (delta * e0t[j] + (1.0 - delta) * e1t[j])).collect();
        let r2: Vec<f64> =
            (0..n).map(|j| u[j] + dt * (delta * e0u[j] + (1.0 - delta) * e1u[j] + (1.0 - g) * i1[j])).collect();
        let u2 = self.solve(&r2, g * dt);
        Ok((t2, u2))
    }
}

/// Coefficients of the linearized operator about a profile.
#[derive(Debug, Clone)]
pub struct LinearOperator {
    grid: PeriodicGrid,
    speed: f64,
    nu: f64,
    alpha: Vec<f64>,
    b: Vec<f64>,
    ubar2: Vec<f64>,
    cross: Vec<f64>,
}

impl LinearOperator {
    pub fn new(profile: &WaveProfile) -> Self {
        let p = &profile.params;
        Self {
            grid: profile.grid(),
            speed: profile.speed,
            nu: p.nu,
            alpha: alpha_profile(profile),
            b: profile.tau_bar.iter().map(|&t| p.viscous_weight(t)).collect(),
            ubar2: profile.u_bar.iter().map(|u| u * u).collect(),
            cross: profile.u_bar.iter().zip(&profile.tau_bar).map(|(u, t)| 2.0 * u * t).collect(),
        }
    }

    pub fn apply(&self, tau: &[f64], u: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let g = &self.grid;
        let c = self.speed;
        let tx = g.derivative(tau, 1);
        let ux = g.derivative(u, 1);
        let at: Vec<f64> = self.alpha.iter().zip(tau).map(|(a, t)| a * t).collect();
        let at_x = g.derivative(&at, 1);
        let flux: Vec<f64> = self.b.iter().zip(&ux).map(|(b, d)| b * d).collect();
        let visc = g.derivative(&flux, 1);
        let n = tau.len();
        let lt = (0..n).map(|j| c * tx[j] + ux[j]).collect();
        let lu = (0..n)
            .map(|j| c * ux[j] + at_x[j] + self.nu * visc[j] - self.ubar2[j] * tau[j] - self.cross[j] * u[j])
            .collect();
        (lt, lu)
    }

    fn b_max(&self) -> f64 {
        self.b.iter().cloned().fold(0.0, f64::max)
    }
}

struct LinearRhs<'a> {
    op: &'a LinearOperator,
    imex: &'a Imex,
}

impl ExplicitPart for LinearRhs<'_> {
    fn explicit(&self, tau: &[f64], u: &[f64], _t: f64) -> Result<(Vec<f64>, Vec<f64>)> {
        let (lt, mut lu) = self.op.apply(tau, u);
        let imp = self.imex.implicit(u);
        lu.iter_mut().zip(&imp).for_each(|(a, b)| *a -= b);
        Ok((lt, lu))
    }
}

fn check_initial(profile: &WaveProfile, tau: &[f64], u: &[f64]) -> Result<()> {
    for f in [tau, u] {
        if f.len() != profile.n {
            return Err(Error::GridMismatch { expected: profile.n, got: f.len() });
        }
        if f.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("initial data is not finite".into()));
        }
    }
    Ok(())
}

struct Recorder<'a> {
    grid: PeriodicGrid,
    profile: &'a WaveProfile,
    gauge: Option<&'a GaugeTriple>,
    k: u32,
    trace: EnergyTrace,
    trajectory: Trajectory,
}

impl<'a> Recorder<'a> {
    fn new(profile: &'a WaveProfile, gauge: Option<&'a GaugeTriple>, k: u32) -> Self {
        Self {
            grid: profile.grid(),
            profile,
            gauge,
            k,
            trace: EnergyTrace { k, ..Default::default() },
            trajectory: Trajectory::default(),
        }
    }

    /// Records norms of the perturbation `(dt, du)`; `weight` multiplies the
    /// energy density (the `1 - psi_x` factor of modulated runs).
    fn sample(&mut self, t: f64, dt: &[f64], du: &[f64], weight: Option<&[f64]>) -> Result<()> {
        let g = &self.grid;
        let pair = |s: u32| (g.sobolev_norm(dt, s).powi(2) + g.sobolev_norm(du, s).powi(2)).sqrt();
        let l2 = pair(0);
        if !l2.is_finite() || l2 > OVERFLOW_GUARD {
            return Err(Error::Integration { time: t, reason: format!("perturbation norm {l2:.3e} exceeded the overflow guard") });
        }
        let e = match (self.gauge, weight) {
            (None, _) => f64::NAN,
            (Some(gauge), None) => energy(dt, du, gauge, self.profile)?,
            (Some(gauge), Some(w)) => modulated_energy(dt, du, gauge, self.profile, w),
        };
        self.trace.times.push(t);
        self.trace.energy.push(e);
        self.trace.l2.push(l2);
        self.trace.h1.push(pair(1));
        self.trace.hk.push(pair(self.k));
        Ok(())
    }
}

/// `E_psi = int (1 - psi_x) (1/2 phi1 tau_x^2 + 1/2 phi2 a u_x^2 + phi3 tau u_x)`.
pub fn modulated_energy(tau: &[f64], u: &[f64], gauge: &GaugeTriple, profile: &WaveProfile, one_minus_psi_x: &[f64]) -> f64 {
    let g = profile.grid();
    let tx = g.derivative(tau, 1);
    let ux = g.derivative(u, 1);
    let a = gauge.weight.weights(&profile.tau_bar);
    let dens: Vec<f64> = (0..profile.n)
        .map(|j| {
            one_minus_psi_x[j]
                * (0.5 * gauge.phi1[j] * tx[j] * tx[j] + 0.5 * gauge.phi2 * a[j] * ux[j] * ux[j] + gauge.phi3[j] * tau[j] * ux[j])
        })
        .collect();
    g.integral(&dens)
}

/// Integrates `U_t = L U` from `(tau0, u0)`.
pub fn evolve_linear(
    profile: &WaveProfile,
    gauge: Option<&GaugeTriple>,
    tau0: &[f64],
    u0: &[f64],
    cfg: &EvolveConfig,
) -> Result<RunResult> {
    check_initial(profile, tau0, u0)?;
    let steps = cfg.steps()?;
    let op = LinearOperator::new(profile);
    let imex = Imex { grid: profile.grid(), diffusion: profile.params.nu * op.b_max() };
    let rhs = LinearRhs { op: &op, imex: &imex };
    let mut rec = Recorder::new(profile, gauge, cfg.hk);
    let (mut tau, mut u) = (tau0.to_vec(), u0.to_vec());
    rec.sample(0.0, &tau, &u, None)?;
    rec.trajectory.push(0.0, &tau, &u);
    for s in 1..=steps {
        let t = (s - 1) as f64 * cfg.dt;
        (tau, u) = imex.step(&rhs, &tau, &u, t, cfg.dt)?;
        let t = s as f64 * cfg.dt;
        if s % cfg.sample_every == 0 || s == steps {
            rec.sample(t, &tau, &u, None)?;
        }
        if s == steps || (cfg.snapshot_every > 0 && s % cfg.snapshot_every == 0) {
            rec.trajectory.push(t, &tau, &u);
        }
    }
    Ok(RunResult { trace: rec.trace, trajectory: rec.trajectory, flags: vec![] })
}

/// Sign of the `psi_x` correction inside the viscous flux of the modulated
/// system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ViscousPsiSign {
    /// `+ nu d_x((psi_x / (1 - psi_x)) b u_x)`, which follows from the change
    /// of variables.
    #[default]
    Derived,
    /// The opposite sign, kept for comparison runs.
    Flipped,
}

/// Prescribed phase `psi(x, t)` with its partial derivatives.
#[derive(Debug, Clone)]
pub struct ModulationInput {
    pub source: String,
    pub psi: Expr,
    pub psi_x: Expr,
    pub psi_t: Expr,
}

impl ModulationInput {
    pub fn new(psi: Expr, source: impl Into<String>) -> Self {
        let psi_x = psi.diff(Var::X);
        let psi_t = psi.diff(Var::T);
        Self { source: source.into(), psi, psi_x, psi_t }
    }

    pub fn parse(src: &str, constants: &std::collections::BTreeMap<String, f64>) -> Result<Self> {
        Ok(Self::new(Expr::parse_with(src, constants)?, src))
    }

    pub fn zero() -> Self {
        Self::new(Expr::Num(0.0), "0")
    }

    /// `(psi, psi_x, psi_t)` on the grid at time `t`.
    pub fn sample(&self, grid: &PeriodicGrid, t: f64) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let x = grid.points();
        let ev = |e: &Expr| x.iter().map(|&x| e.eval(x, t)).collect::<Vec<_>>();
        (ev(&self.psi), ev(&self.psi_x), ev(&self.psi_t))
    }

    /// `||(psi_t, psi_x)||_{H^k}` at time `t`.
    pub fn size(&self, grid: &PeriodicGrid, t: f64, k: u32) -> f64 {
        let (_, px, pt) = self.sample(grid, t);
        (grid.sobolev_norm(&px, k).powi(2) + grid.sobolev_norm(&pt, k).powi(2)).sqrt()
    }

    /// Rejects phases that are not periodic on the grid or that make the
    /// coordinate change `x -> x - psi` degenerate.
    pub fn validate(&self, grid: &PeriodicGrid, t: f64) -> Result<()> {
        let (p0, p1) = (self.psi.eval(0.0, t), self.psi.eval(grid.period(), t));
        if (p0 - p1).abs() > 1e-10 * (1.0 + p0.abs()) {
            return Err(Error::Domain(format!("psi is not periodic at t = {t}: {p0} vs {p1}")));
        }
        let (_, px, _) = self.sample(grid, t);
        let worst = px.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if !(1.0 - worst > 0.5) {
            return Err(Error::Domain(format!("invalid modulation: 1 - psi_x = {} <= 1/2 at t = {t}", 1.0 - worst)));
        }
        Ok(())
    }
}

/// Right-hand side of the co-moving system written in the coordinates
/// `x -> x - psi(x, t)`, evaluated at `W = (tau, u)`:
///
/// ```text
/// (1 - psi_x) W_t = (c tau_x + u_x, c u_x - p(tau)_x + nu (b u_x / (1 - psi_x))_x)
///                   - psi_t W_x + (0, (1 - psi_x) S(tau, u))
/// ```
///
/// With `psi = 0` this is the plain co-moving system. Nonlinear terms are
/// formed on a 3/2-padded grid.
struct FullRhs<'a> {
    profile: &'a WaveProfile,
    grid: PeriodicGrid,
    fine: PeriodicGrid,
    imex: &'a Imex,
    /// Base state subtracted from the unknowns; `None` for full-state runs.
    base: Option<(&'a [f64], &'a [f64])>,
    psi: Option<&'a ModulationInput>,
    sign: ViscousPsiSign,
}

impl FullRhs<'_> {
    fn up(&self, f: &[f64]) -> Vec<f64> {
        let c = self.grid.coefficients(f);
        self.fine.synthesize(&self.grid.transfer(&c, self.fine.n()))
    }

    fn down(&self, f: &[f64]) -> Vec<f64> {
        let c = self.fine.coefficients(f);
        self.grid.synthesize(&self.fine.transfer(&c, self.grid.n()))
    }

    fn field(&self, tau: &[f64], u: &[f64], t: f64) -> Result<(Vec<f64>, Vec<f64>)> {
        let p = &self.profile.params;
        let n = tau.len();
        if let Some(j) = tau.iter().position(|&v| !(v > 0.0)) {
            return Err(Error::Integration { time: t, reason: format!("tau = {} <= 0 at grid index {j}", tau[j]) });
        }
        let g = &self.grid;
        let c = self.profile.speed;
        let tx = g.derivative(tau, 1);
        let ux = g.derivative(u, 1);
        let (q, pt) = match self.psi {
            Some(m) => {
                let (_, px, pt) = m.sample(g, t);
                (px.iter().map(|d| 1.0 / (1.0 - d)).collect::<Vec<_>>(), pt)
            }
            None => (vec![1.0; n], vec![0.0; n]),
        };
        let tf = self.up(tau);
        if let Some(j) = tf.iter().position(|&v| !(v > 0.0)) {
            return Err(Error::Integration { time: t, reason: format!("padded tau = {} <= 0 at fine index {j}", tf[j]) });
        }
        let uf = self.up(u);
        let uxf = self.up(&ux);
        let flux_scale: Vec<f64> = match self.sign {
            ViscousPsiSign::Derived => q.clone(),
            ViscousPsiSign::Flipped => q.iter().map(|q| 2.0 - q).collect(),
        };
        let qf = self.up(&flux_scale);
        let pf: Vec<f64> = tf.iter().map(|&t| p.pressure(t)).collect();
        let sf: Vec<f64> = tf.iter().zip(&uf).map(|(&t, &u)| p.source(t, u)).collect();
        let ff: Vec<f64> = (0..tf.len()).map(|j| p.viscous_weight(tf[j]) * uxf[j] * qf[j]).collect();
        let px = g.derivative(&self.down(&pf), 1);
        let s = self.down(&sf);
        let visc = g.derivative(&self.down(&ff), 1);
        let ft = (0..n).map(|j| q[j] * (c * tx[j] + ux[j] - pt[j] * tx[j])).collect();
        let fu = (0..n).map(|j| q[j] * (c * ux[j] - px[j] + p.nu * visc[j] - pt[j] * ux[j]) + s[j]).collect();
        Ok((ft, fu))
    }
}

impl ExplicitPart for FullRhs<'_> {
    fn explicit(&self, tau: &[f64], u: &[f64], t: f64) -> Result<(Vec<f64>, Vec<f64>)> {
        let (ft, mut fu) = match self.base {
            None => self.field(tau, u, t)?,
            Some((bt, bu)) => {
                let wt: Vec<f64> = tau.iter().zip(bt).map(|(a, b)| a + b).collect();
                let wu: Vec<f64> = u.iter().zip(bu).map(|(a, b)| a + b).collect();
                self.field(&wt, &wu, t)?
            }
        };
        let imp = self.imex.implicit(u);
        fu.iter_mut().zip(&imp).for_each(|(a, b)| *a -= b);
        Ok((ft, fu))
    }
}

fn padded_grid(grid: &PeriodicGrid) -> Result<PeriodicGrid> {
    let m = 3 * grid.n() / 2;
    PeriodicGrid::new(m + m % 2, grid.period())
}

fn diffusion_bound(profile: &WaveProfile, tau: &[f64], extra: f64) -> f64 {
    let p = &profile.params;
    let b = tau.iter().chain(&profile.tau_bar).map(|&t| p.viscous_weight(t)).fold(0.0, f64::max);
    p.nu * b * extra
}

/// Integrates the full co-moving system from `(tau0, u0)` and records the
/// norms of the difference with the profile.
pub fn evolve_nonlinear(
    profile: &WaveProfile,
    gauge: Option<&GaugeTriple>,
    tau0: &[f64],
    u0: &[f64],
    cfg: &EvolveConfig,
) -> Result<RunResult> {
    check_initial(profile, tau0, u0)?;
    let steps = cfg.steps()?;
    let grid = profile.grid();
    let imex = Imex { grid: grid.clone(), diffusion: diffusion_bound(profile, tau0, 1.25) };
    let rhs = FullRhs {
        profile,
        grid: grid.clone(),
        fine: padded_grid(&grid)?,
        imex: &imex,
        base: None,
        psi: None,
        sign: ViscousPsiSign::Derived,
    };
    let mut rec = Recorder::new(profile, gauge, cfg.hk);
    let diff = |tau: &[f64], u: &[f64]| -> (Vec<f64>, Vec<f64>) {
        (
            tau.iter().zip(&profile.tau_bar).map(|(a, b)| a - b).collect(),
            u.iter().zip(&profile.u_bar).map(|(a, b)| a - b).collect(),
        )
    };
    let (mut tau, mut u) = (tau0.to_vec(), u0.to_vec());
    let (dt0, du0) = diff(&tau, &u);
    rec.sample(0.0, &dt0, &du0, None)?;
    rec.trajectory.push(0.0, &tau, &u);
    for s in 1..=steps {
        let t = (s - 1) as f64 * cfg.dt;
        (tau, u) = imex.step(&rhs, &tau, &u, t, cfg.dt)?;
        let t = s as f64 * cfg.dt;
        if s % cfg.sample_every == 0 || s == steps {
            let (a, b) = diff(&tau, &u);
            rec.sample(t, &a, &b, None)?;
        }
        if s == steps || (cfg.snapshot_every > 0 && s % cfg.snapshot_every == 0) {
            rec.trajectory.push(t, &tau, &u);
        }
    }
    Ok(RunResult { trace: rec.trace, trajectory: rec.trajectory, flags: vec![] })
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ModulatedOptions {
    pub sign: ViscousPsiSign,
    /// Smallness threshold for `||(psi_t, psi_x)||_{H^k}`; `None` uses
    /// `1e-2 ||U_bar||_{H^1}`.
    pub epsilon: Option<f64>,
}

impl Default for ModulatedOptions {
    fn default() -> Self {
        Self { sign: ViscousPsiSign::Derived, epsilon: None }
    }
}

/// Integrates the perturbation `V` of the modulated system with prescribed
/// `psi`. The trace energy is `E_psi` and the trace carries the forcing
/// column `||(psi_t, psi_x)||_{H^k}`.
pub fn evolve_modulated(
    profile: &WaveProfile,
    gauge: &GaugeTriple,
    v_tau0: &[f64],
    v_u0: &[f64],
    psi: &ModulationInput,
    cfg: &EvolveConfig,
    opts: &ModulatedOptions,
) -> Result<RunResult> {
    check_initial(profile, v_tau0, v_u0)?;
    let steps = cfg.steps()?;
    let grid = profile.grid();
    psi.validate(&grid, 0.0)?;
    let base_size = (grid.sobolev_norm(&profile.tau_bar, 1).powi(2) + grid.sobolev_norm(&profile.u_bar, 1).powi(2)).sqrt();
    let eps = opts.epsilon.unwrap_or(1e-2 * base_size);
    let mut flags = Vec::new();
    let sup = v_tau0.iter().chain(v_u0).fold(0.0f64, |m, v| m.max(v.abs()));
    if sup > eps {
        flags.push(format!("initial perturbation sup {sup:.3e} exceeds epsilon {eps:.3e}"));
        log::warn!("{}", flags.last().unwrap());
    }
    let (_, px0, _) = psi.sample(&grid, 0.0);
    let qmax = px0.iter().map(|d| 1.0 / (1.0 - d)).fold(1.0, f64::max);
    let w0: Vec<f64> = v_tau0.iter().zip(&profile.tau_bar).map(|(a, b)| a + b).collect();
    let imex = Imex { grid: grid.clone(), diffusion: diffusion_bound(profile, &w0, 1.25 * qmax) };
    let rhs = FullRhs {
        profile,
        grid: grid.clone(),
        fine: padded_grid(&grid)?,
        imex: &imex,
        base: Some((&profile.tau_bar, &profile.u_bar)),
        psi: Some(psi),
        sign: opts.sign,
    };
    let mut rec = Recorder::new(profile, Some(gauge), cfg.hk);
    let mut forcing = Vec::new();
    let mut exceeded = false;
    let mut record = |rec: &mut Recorder, t: f64, tau: &[f64], u: &[f64]| -> Result<()> {
        psi.validate(&grid, t)?;
        let (_, px, _) = psi.sample(&grid, t);
        let w: Vec<f64> = px.iter().map(|d| 1.0 - d).collect();
        rec.sample(t, tau, u, Some(&w))?;
        let f = psi.size(&grid, t, cfg.hk);
        if f > eps && !exceeded {
            exceeded = true;
            log::warn!("||(psi_t, psi_x)||_H{} = {f:.3e} exceeds epsilon {eps:.3e} at t = {t}", cfg.hk);
        }
        forcing.push(f);
        Ok(())
    };
    let (mut tau, mut u) = (v_tau0.to_vec(), v_u0.to_vec());
    record(&mut rec, 0.0, &tau, &u)?;
    rec.trajectory.push(0.0, &tau, &u);
    for s in 1..=steps {
        let t = (s - 1) as f64 * cfg.dt;
        (tau, u) = imex.step(&rhs, &tau, &u, t, cfg.dt)?;
        let t = s as f64 * cfg.dt;
        if s % cfg.sample_every == 0 || s == steps {
            record(&mut rec, t, &tau, &u)?;
        }
        if s == steps || (cfg.snapshot_every > 0 && s % cfg.snapshot_every == 0) {
            rec.trajectory.push(t, &tau, &u);
        }
    }
    if exceeded {
        flags.push(format!("phase size exceeded epsilon {eps:.3e}"));
    }
    rec.trace.forcing = Some(forcing);
    Ok(RunResult { trace: rec.trace, trajectory: rec.trajectory, flags })
}

/// `V(x) = U(x - psi(x, t)) - U_bar(x)` for a full state `U` given on the grid.
pub fn modulated_perturbation(
    profile: &WaveProfile,
    tau: &[f64],
    u: &[f64],
    psi: &ModulationInput,
    t: f64,
) -> (Vec<f64>, Vec<f64>) {
    let g = profile.grid();
    let (p, _, _) = psi.sample(&g, t);
    let at: Vec<f64> = g.points().iter().zip(&p).map(|(x, p)| x - p).collect();
    let ti = g.interpolate(tau, &at);
    let ui = g.interpolate(u, &at);
    (
        ti.iter().zip(&profile.tau_bar).map(|(a, b)| a - b).collect(),
        ui.iter().zip(&profile.u_bar).map(|(a, b)| a - b).collect(),
    )
}

/// Smooth random perturbation with Fourier modes `1..=modes` (physical
/// wavenumbers, so the same seed gives the same function on any grid),
/// amplitudes decaying like `1/(1 + m^2)`, scaled to the given `L^2` norm.
pub fn random_smooth_perturbation(grid: &PeriodicGrid, seed: u64, modes: usize, l2: f64) -> (Vec<f64>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = || -> Vec<Complex64> {
        (1..=modes)
            .map(|m| {
                let a: f64 = rng.random_range(-1.0..1.0);
                let b: f64 = rng.random_range(-1.0..1.0);
                Complex64::new(a, b) / (1.0 + (m * m) as f64)
            })
            .collect()
    };
    let ct = draw();
    let cu = draw();
    let x = grid.points();
    let w = 2.0 * std::f64::consts::PI / grid.period();
    let build = |c: &[Complex64]| -> Vec<f64> {
        x.iter()
            .map(|&x| c.iter().enumerate().map(|(i, cm)| 2.0 * (cm * Complex64::from_polar(1.0, w * (i + 1) as f64 * x)).re).sum())
            .collect()
    };
    let mut tau = build(&ct);
    let mut u = build(&cu);
    let norm = (grid.l2_norm(&tau).powi(2) + grid.l2_norm(&u).powi(2)).sqrt();
    tau.iter_mut().chain(u.iter_mut()).for_each(|v| *v *= l2 / norm);
    (tau, u)
}
