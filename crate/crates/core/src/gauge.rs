//! Gauge weights and the energies built from them.
//!
//! For a perturbation `U = (tau, u)` the energy is
//!
//! ```text
//! E(U) = int 1/2 phi1 tau_x^2 + 1/2 phi2 a u_x^2 + phi3 tau u_x
//! ```
//!
//! with `a = tau_bar^3` ([`EnergyWeight::Form`]) or `a = 1`
//! ([`EnergyWeight::Unit`]). Along the linearized flow, with viscous
//! coefficient `nu b`, `b = tau_bar^-2`, the leading terms of `dE/dt` are
//!
//! ```text
//! - int K_tau tau_x^2 - int K_u u_xx^2 + int K_cross tau_x u_xx
//! K_tau   = (c/2) phi1' + alpha phi3
//! K_u     = nu a b phi2
//! K_cross = phi1 - a alpha phi2 - nu b phi3
//! ```
//!
//! `phi3` is chosen to make `K_cross` vanish, and `phi1` solves
//! `(c/2) phi1' + (w - <w>) phi1 = 0`, `w = alpha / (nu b)`, so that
//! `K_tau = <w> phi1 - a alpha^2 phi2 / (nu b)`.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::conditions::alpha_profile;
use crate::error::{Error, Result};
use crate::linalg::{sym_eigenvalues, sym_min_eig2};
use crate::profile::{fmt, min_max, WaveProfile};
use crate::spectral::PeriodicGrid;
use faer::Mat;
use num_complex::Complex64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum EnergyWeight {
    /// `a = tau_bar^3` on the `u_x^2` term.
    #[default]
    Form,
    /// `a = 1`.
    Unit,
}

impl EnergyWeight {
    pub fn weights(&self, tau_bar: &[f64]) -> Vec<f64> {
        match self {
            EnergyWeight::Form => tau_bar.iter().map(|t| t * t * t).collect(),
            EnergyWeight::Unit => vec![1.0; tau_bar.len()],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phi2Choice {
    Fixed(f64),
    /// Largest `2^-k`, `k = 0..=40`, meeting the coercivity threshold.
    Auto,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaugeTriple {
    pub phi1: Vec<f64>,
    pub phi2: f64,
    pub phi3: Vec<f64>,
    pub coercivity_coeff: Vec<f64>,
    pub coercivity_min: f64,
    pub phi1_bounds: (f64, f64),
    pub weight: EnergyWeight,
    /// `<w>` with `w = alpha tau_bar^2 / nu`.
    pub mean_rate: f64,
    /// Relative mismatch `|phi1(X) - phi1(0)| / phi1(0)` after integrating the
    /// gauge ODE across one period with RK4 on the interpolated coefficient.
    pub periodicity_defect: f64,
}

/// Shared pieces of the construction: `w`, `phi1`, `a`, `alpha`, `nu b`.
struct Ingredients {
    alpha: Vec<f64>,
    rate: Vec<f64>,
    mean_rate: f64,
    phi1: Vec<f64>,
    a: Vec<f64>,
    nub: Vec<f64>,
}

fn ingredients(profile: &WaveProfile, weight: EnergyWeight) -> Result<Ingredients> {
    let c = profile.speed;
    if c == 0.0 {
        return Err(Error::Degenerate("gauge needs a nonzero wave speed".into()));
    }
    let grid = profile.grid();
    let nu = profile.params.nu;
    let alpha = alpha_profile(profile);
    let nub: Vec<f64> = profile.tau_bar.iter().map(|&t| nu * profile.params.viscous_weight(t)).collect();
    let rate: Vec<f64> = alpha.iter().zip(&nub).map(|(a, d)| a / d).collect();
    let (anti, mean_rate) = grid.antiderivative(&rate);
    let mut phi1: Vec<f64> = anti.iter().map(|v| (-2.0 / c * v).exp()).collect();
    let m = grid.mean(&phi1);
    phi1.iter_mut().for_each(|v| *v /= m);
    Ok(Ingredients { alpha, rate, mean_rate, phi1, a: weight.weights(&profile.tau_bar), nub })
}

fn assemble(ing: &Ingredients, phi2: f64, weight: EnergyWeight, defect: f64) -> GaugeTriple {
    let n = ing.phi1.len();
    let phi3: Vec<f64> = (0..n).map(|j| (ing.phi1[j] - ing.a[j] * ing.alpha[j] * phi2) / ing.nub[j]).collect();
    let coercivity: Vec<f64> = (0..n)
        .map(|j| ing.mean_rate * ing.phi1[j] - ing.a[j] * ing.alpha[j] * ing.alpha[j] * phi2 / ing.nub[j])
        .collect();
    let cmin = coercivity.iter().copied().fold(f64::INFINITY, f64::min);
    GaugeTriple {
        phi1: ing.phi1.clone(),
        phi2,
        phi3,
        coercivity_coeff: coercivity,
        coercivity_min: cmin,
        phi1_bounds: min_max(&ing.phi1),
        weight,
        mean_rate: ing.mean_rate,
        periodicity_defect: defect,
    }
}

/// Growth factor of `phi' = -(2/c)(w - <w>) phi` over one period, minus one.
/// The exponent is integrated with the trapezoid rule, which is spectrally
/// accurate for periodic integrands.
fn periodicity_defect(grid: &PeriodicGrid, rate: &[f64], mean: f64, c: f64) -> f64 {
    let shifted: Vec<f64> = rate.iter().map(|w| w - mean).collect();
    let exponent = -2.0 / c * grid.integral(&shifted);
    exponent.exp_m1().abs()
}

pub fn build_gauge(profile: &WaveProfile, phi2: Phi2Choice, weight: EnergyWeight) -> Result<GaugeTriple> {
    let ing = ingredients(profile, weight)?;
    let defect = periodicity_defect(&profile.grid(), &ing.rate, ing.mean_rate, profile.speed);
    match phi2 {
        Phi2Choice::Fixed(v) => {
            if !(v > 0.0) {
                return Err(Error::Domain(format!("phi2 must be positive, got {v}")));
            }
            Ok(assemble(&ing, v, weight, defect))
        }
        Phi2Choice::Auto => {
            if !(ing.mean_rate > 0.0) {
                return Err(Error::Gauge(format!("averaged rate <w> = {:.3e} is not positive", ing.mean_rate)));
            }
            let min_phi1 = ing.phi1.iter().copied().fold(f64::INFINITY, f64::min);
            let threshold = 0.5 * ing.mean_rate * min_phi1;
            for k in 0..=40 {
                let v = 0.5f64.powi(k);
                let g = assemble(&ing, v, weight, defect);
                if g.coercivity_min >= threshold {
                    return Ok(g);
                }
            }
            Err(Error::Gauge("no phi2 = 2^-k, k <= 40, reaches the coercivity threshold".into()))
        }
    }
}

impl GaugeTriple {
    pub fn write_csv<W: Write>(&self, profile: &WaveProfile, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["x", "phi1", "phi3", "coercivity_coeff"])?;
        for (j, x) in profile.points().iter().enumerate() {
            wr.write_record([fmt(*x), fmt(self.phi1[j]), fmt(self.phi3[j]), fmt(self.coercivity_coeff[j])])?;
        }
        wr.flush()?;
        Ok(())
    }
}

fn check_pair(profile: &WaveProfile, tau: usize, u: usize) -> Result<()> {
    if tau != profile.n {
        return Err(Error::GridMismatch { expected: profile.n, got: tau });
    }
    if u != profile.n {
        return Err(Error::GridMismatch { expected: profile.n, got: u });
    }
    Ok(())
}

/// `E(U)` by the trapezoid rule with spectral derivatives.
pub fn energy(tau: &[f64], u: &[f64], gauge: &GaugeTriple, profile: &WaveProfile) -> Result<f64> {
    check_pair(profile, tau.len(), u.len())?;
    let g = profile.grid();
    let tx = g.derivative(tau, 1);
    let ux = g.derivative(u, 1);
    let a = gauge.weight.weights(&profile.tau_bar);
    let integrand: Vec<f64> = (0..profile.n)
        .map(|j| 0.5 * gauge.phi1[j] * tx[j] * tx[j] + 0.5 * gauge.phi2 * a[j] * ux[j] * ux[j] + gauge.phi3[j] * tau[j] * ux[j])
        .collect();
    Ok(g.integral(&integrand))
}

/// Fold `xi` into `[-pi/X, pi/X)`.
pub fn fold_xi(xi: f64, period: f64) -> f64 {
    let w = 2.0 * std::f64::consts::PI / period;
    let half = 0.5 * w;
    let mut v = (xi + half).rem_euclid(w) - half;
    if v >= half {
        v -= w;
    }
    v
}

/// Bloch energy with `d/dx + i xi` in place of `d/dx` and
/// `Re <phi3 tau, (d/dx + i xi) u>` as the cross term.
pub fn bloch_energy(tau: &[Complex64], u: &[Complex64], xi: f64, gauge: &GaugeTriple, profile: &WaveProfile) -> Result<f64> {
    check_pair(profile, tau.len(), u.len())?;
    let folded = fold_xi(xi, profile.period);
    let xi = if (folded - xi).abs() > 1e-14 {
        log::warn!("Floquet exponent {xi} folded into the Brillouin zone as {folded}");
        folded
    } else {
        xi
    };
    let g = profile.grid();
    let i = Complex64::new(0.0, 1.0);
    let dt: Vec<Complex64> = g.derivative_complex(tau, 1).iter().zip(tau).map(|(d, v)| d + i * xi * v).collect();
    let du: Vec<Complex64> = g.derivative_complex(u, 1).iter().zip(u).map(|(d, v)| d + i * xi * v).collect();
    let a = gauge.weight.weights(&profile.tau_bar);
    let integrand: Vec<f64> = (0..profile.n)
        .map(|j| {
            0.5 * gauge.phi1[j] * dt[j].norm_sqr()
                + 0.5 * gauge.phi2 * a[j] * du[j].norm_sqr()
                + (gauge.phi3[j] * tau[j] * du[j].conj()).re
        })
        .collect();
    Ok(g.integral(&integrand))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DissipationCoefficients {
    pub coef_tau_x2: Vec<f64>,
    pub coef_uxx2: Vec<f64>,
    pub coef_cross: Vec<f64>,
    /// `max |coef_cross|` relative to `max |phi1|`.
    pub cross_relative: f64,
    /// `max |coef_tau_x2 - coercivity_coeff|` relative to `max |coercivity_coeff|`.
    pub coercivity_gap: f64,
}

/// Coefficients of `dE/dt` evaluated directly from the gauge (with a
/// spectral `phi1'`), independent of the closed forms used to build it.
pub fn dissipation_coefficients(gauge: &GaugeTriple, profile: &WaveProfile) -> DissipationCoefficients {
    let g = profile.grid();
    let c = profile.speed;
    let nu = profile.params.nu;
    let alpha = alpha_profile(profile);
    let a = gauge.weight.weights(&profile.tau_bar);
    let dphi1 = g.derivative(&gauge.phi1, 1);
    let n = profile.n;
    let nub: Vec<f64> = profile.tau_bar.iter().map(|&t| nu * profile.params.viscous_weight(t)).collect();
    let k_tau: Vec<f64> = (0..n).map(|j| 0.5 * c * dphi1[j] + alpha[j] * gauge.phi3[j]).collect();
    let k_u: Vec<f64> = (0..n).map(|j| a[j] * nub[j] * gauge.phi2).collect();
    let k_x: Vec<f64> = (0..n).map(|j| gauge.phi1[j] - a[j] * alpha[j] * gauge.phi2 - nub[j] * gauge.phi3[j]).collect();
    let scale = gauge.phi1.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let cscale = gauge.coercivity_coeff.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let gap = k_tau
        .iter()
        .zip(&gauge.coercivity_coeff)
        .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
    DissipationCoefficients {
        cross_relative: k_x.iter().fold(0.0f64, |m, v| m.max(v.abs())) / scale,
        coercivity_gap: gap / cscale.max(f64::MIN_POSITIVE),
        coef_tau_x2: k_tau,
        coef_uxx2: k_u,
        coef_cross: k_x,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceConstants {
    /// `M` in `E(U) + M ||U||^2 >= c0 (||tau_x||^2 + ||u_x||^2)`.
    pub m: f64,
    pub c0: f64,
    /// Smallest Rayleigh quotient `(E + M ||U||^2) / (||tau_x||^2 + ||u_x||^2)`
    /// over the trigonometric test space.
    pub rayleigh_min: f64,
    /// Largest Rayleigh quotient `E / (||tau_x||^2 + ||u_x||^2)`, an upper
    /// equivalence constant on the test space.
    pub rayleigh_max: f64,
    pub modes: usize,
}

/// Equivalence constants from Young's inequality
/// `|phi3 tau u_x| <= (a phi2 / 4) u_x^2 + phi3^2 / (a phi2) tau^2`, checked by
/// a Rayleigh quotient over `cos(k x), sin(k x)`, `k = 1..=modes`, in each
/// component.
pub fn equivalence_constants(gauge: &GaugeTriple, profile: &WaveProfile, modes: usize) -> Result<EquivalenceConstants> {
    let a = gauge.weight.weights(&profile.tau_bar);
    let n = profile.n;
    let m = (0..n).map(|j| gauge.phi3[j].powi(2) / (a[j] * gauge.phi2)).fold(0.0, f64::max);
    let c0 = (0.5 * gauge.phi1_bounds.0).min(0.25 * gauge.phi2 * a.iter().copied().fold(f64::INFINITY, f64::min));
    if 2 * modes >= n {
        return Err(Error::Resolution(format!("{modes} test modes need more than {n} grid points")));
    }
    let g = profile.grid();
    let x = g.points();
    let kw = 2.0 * std::f64::consts::PI / profile.period;
    // basis: (component, k, cos/sin) with values and derivatives on the grid
    let mut basis: Vec<(usize, Vec<f64>, Vec<f64>, f64)> = Vec::new();
    for comp in 0..2 {
        for k in 1..=modes {
            let kk = kw * k as f64;
            let cv: Vec<f64> = x.iter().map(|x| (kk * x).cos()).collect();
            let cd: Vec<f64> = x.iter().map(|x| -kk * (kk * x).sin()).collect();
            let sv: Vec<f64> = x.iter().map(|x| (kk * x).sin()).collect();
            let sd: Vec<f64> = x.iter().map(|x| kk * (kk * x).cos()).collect();
            basis.push((comp, cv, cd, kk));
            basis.push((comp, sv, sd, kk));
        }
    }
    let nb = basis.len();
    let bilinear = |p: &(usize, Vec<f64>, Vec<f64>, f64), q: &(usize, Vec<f64>, Vec<f64>, f64)| -> (f64, f64) {
        let mut e = 0.0;
        let mut l2 = 0.0;
        for j in 0..n {
            let (tp, tpx, up, upx) = if p.0 == 0 { (p.1[j], p.2[j], 0.0, 0.0) } else { (0.0, 0.0, p.1[j], p.2[j]) };
            let (tq, tqx, uq, uqx) = if q.0 == 0 { (q.1[j], q.2[j], 0.0, 0.0) } else { (0.0, 0.0, q.1[j], q.2[j]) };
            e += 0.5 * gauge.phi1[j] * tpx * tqx
                + 0.5 * gauge.phi2 * a[j] * upx * uqx
                + 0.5 * gauge.phi3[j] * (tp * uqx + tq * upx);
            l2 += tp * tq + up * uq;
        }
        (e * g.dx(), l2 * g.dx())
    };
    let mut lower = Mat::<f64>::zeros(nb, nb);
    let mut upper = Mat::<f64>::zeros(nb, nb);
    for i in 0..nb {
        for j in 0..=i {
            let (e, l2) = bilinear(&basis[i], &basis[j]);
            // the H1 seminorm Gram matrix is diagonal: k^2 X / 2
            let si = (basis[i].3 * basis[i].3 * profile.period * 0.5).sqrt();
            let sj = (basis[j].3 * basis[j].3 * profile.period * 0.5).sqrt();
            let lo = (e + m * l2) / (si * sj);
            let hi = e / (si * sj);
            lower[(i, j)] = lo;
            lower[(j, i)] = lo;
            upper[(i, j)] = hi;
            upper[(j, i)] = hi;
        }
    }
    let lo = sym_eigenvalues(&lower)?;
    let hi = sym_eigenvalues(&upper)?;
    Ok(EquivalenceConstants {
        m,
        c0,
        rayleigh_min: lo.iter().copied().fold(f64::INFINITY, f64::min),
        rayleigh_max: hi.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        modes,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompensatorResult {
    #[serde(rename = "A0")]
    pub a0: [[f64; 2]; 2],
    #[serde(rename = "K")]
    pub k: [[f64; 2]; 2],
    /// Smallest eigenvalue of `sym(A0 B + K A)`, normalized by
    /// `||A0||_F + |k|`.
    pub min_eig: f64,
    pub feasible: bool,
}

fn mul2(a: [[f64; 2]; 2], b: [[f64; 2]; 2]) -> [[f64; 2]; 2] {
    let mut c = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    c
}

fn compensator_parts(p: [f64; 4]) -> ([[f64; 2]; 2], [[f64; 2]; 2]) {
    let [l1, l2, l3, k] = p;
    let a0 = [[l1 * l1, l1 * l2], [l1 * l2, l2 * l2 + l3 * l3]];
    (a0, [[0.0, k], [-k, 0.0]])
}

/// Normalized objective of the compensator search at parameters
/// `(l1, l2, l3, k)`, `A0 = L L^T`, `L = [[l1, 0], [l2, l3]]`, `K = k J`.
pub fn compensator_objective(a: [[f64; 2]; 2], b: [[f64; 2]; 2], p: [f64; 4]) -> f64 {
    let (a0, k) = compensator_parts(p);
    let ab = mul2(a0, b);
    let ka = mul2(k, a);
    let s = [[ab[0][0] + ka[0][0], ab[0][1] + ka[0][1]], [ab[1][0] + ka[1][0], ab[1][1] + ka[1][1]]];
    let norm = (a0[0][0].powi(2) + 2.0 * a0[0][1].powi(2) + a0[1][1].powi(2)).sqrt() + p[3].abs();
    if norm == 0.0 {
        return f64::NEG_INFINITY;
    }
    sym_min_eig2(s) / norm
}

/// Coarse grid over `(l1, l2, l3, k)` followed by a compass search.
pub fn kawashima_compensator(a: [[f64; 2]; 2], b: [[f64; 2]; 2]) -> CompensatorResult {
    let logs: Vec<f64> = (0..9).map(|i| 10f64.powf(-2.0 + 0.5 * i as f64)).collect();
    let l2s: Vec<f64> = (-4..=4).map(|i| i as f64 * 0.75).collect();
    let mut ks: Vec<f64> = vec![0.0];
    for i in 0..13 {
        let v = 10f64.powf(-3.0 + 0.5 * i as f64);
        ks.push(v);
        ks.push(-v);
    }
    let mut best = [1.0, 0.0, 1.0, 0.0];
    let mut best_val = compensator_objective(a, b, best);
    for &l1 in &logs {
        for &l2 in &l2s {
            for &l3 in &logs {
                for &k in &ks {
                    let p = [l1, l2, l3, k];
                    let v = compensator_objective(a, b, p);
                    if v > best_val {
                        best_val = v;
                        best = p;
                    }
                }
            }
        }
    }
    let mut step = [best[0] * 0.5, 0.5, best[2] * 0.5, best[3].abs().max(1e-3) * 0.5];
    for _ in 0..200 {
        let mut improved = false;
        for d in 0..4 {
            for sgn in [1.0, -1.0] {
                let mut p = best;
                p[d] += sgn * step[d];
                if p[0] <= 0.0 || p[2] <= 0.0 {
                    continue;
                }
                let v = compensator_objective(a, b, p);
                if v > best_val {
                    best_val = v;
                    best = p;
                    improved = true;
                }
            }
        }
        if !improved {
            step.iter_mut().for_each(|s| *s *= 0.5);
            if step.iter().all(|s| *s < 1e-10) {
                break;
            }
        }
    }
    let (a0, k) = compensator_parts(best);
    CompensatorResult { a0, k, min_eig: best_val, feasible: best_val > 0.0 }
}

/// Frozen-coefficient matrices `(A, B)` of the linearized system at grid
/// index `j`, written as `U_t = A U_x + B U_xx + ...`.
pub fn frozen_matrices(profile: &WaveProfile, j: usize) -> ([[f64; 2]; 2], [[f64; 2]; 2]) {
    let alpha = alpha_profile(profile);
    let c = profile.speed;
    let b = profile.params.nu * profile.params.viscous_weight(profile.tau_bar[j]);
    ([[c, 1.0], [alpha[j], c]], [[0.0, 0.0], [0.0, b]])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelParams;

    fn constant() -> WaveProfile {
        let p = ModelParams::st_venant(3.0, 0.2).with_speed(0.4);
        WaveProfile::constant(p, 5.0, 32, 1.0, 1.0).unwrap()
    }

    #[test]
    fn constant_state_gauge() {
        let w = constant();
        let g = build_gauge(&w, Phi2Choice::Fixed(0.25), EnergyWeight::Unit).unwrap();
        let f2 = 9.0;
        for j in 0..w.n {
            assert!((g.phi1[j] - 1.0).abs() < 1e-14);
            assert!((g.phi3[j] - (1.0 - 0.25 / f2) / 0.2).abs() < 1e-12);
            let expect = (1.0 / f2) / 0.2 - (1.0 / f2).powi(2) / 0.2 * 0.25;
            assert!((g.coercivity_coeff[j] - expect).abs() < 1e-12);
        }
        assert!(g.periodicity_defect < 1e-14);
    }

    #[test]
    fn energy_simple_cases() {
        let w = constant();
        let g = build_gauge(&w, Phi2Choice::Auto, EnergyWeight::Form).unwrap();
        let zero = vec![0.0; w.n];
        assert_eq!(energy(&zero, &zero, &g, &w).unwrap(), 0.0);
        let tau: Vec<f64> = w.points().iter().map(|x| (2.0 * std::f64::consts::PI * x / 5.0).sin()).collect();
        let e = energy(&tau, &zero, &g, &w).unwrap();
        let k = 2.0 * std::f64::consts::PI / 5.0;
        assert!((e - 0.5 * k * k * 2.5).abs() < 1e-12);
        assert!(energy(&tau[..4], &zero, &g, &w).is_err());
    }

    #[test]
    fn bloch_single_mode() {
        let w = constant();
        let g = build_gauge(&w, Phi2Choice::Fixed(0.5), EnergyWeight::Unit).unwrap();
        let k = 2.0 * std::f64::consts::PI / 5.0;
        let xi = 0.3;
        let zero = vec![Complex64::new(0.0, 0.0); w.n];
        let u: Vec<Complex64> = w.points().iter().map(|x| Complex64::from_polar(1.0, k * x)).collect();
        let e = bloch_energy(&zero, &u, xi, &g, &w).unwrap();
        assert!((e - 0.5 * 0.5 * (k + xi).powi(2) * 5.0).abs() < 1e-12);
    }

    #[test]
    fn fold_into_zone() {
        let p = 2.0;
        let w = std::f64::consts::PI;
        assert!((fold_xi(w * 1.5, p) - (-w / 2.0)).abs() < 1e-14);
        assert!((fold_xi(-w / 2.0 + 0.1, p) - (-w / 2.0 + 0.1)).abs() < 1e-14);
        assert!((fold_xi(w / 2.0, p) + w / 2.0).abs() < 1e-14);
    }

    #[test]
    fn compensator_cases() {
        let r = kawashima_compensator([[0.3, 1.0], [0.5, 0.3]], [[0.0, 0.0], [0.0, 0.1]]);
        assert!(r.feasible && r.min_eig > 0.0);
        let r = kawashima_compensator([[0.0; 2]; 2], [[0.0; 2]; 2]);
        assert!(!r.feasible);
        let r = kawashima_compensator([[0.3, 1.0], [-0.5, 0.3]], [[0.0, 0.0], [0.0, 0.1]]);
        assert!(r.feasible);
        let r = kawashima_compensator([[0.3, 1.0], [0.0, 0.3]], [[0.0, 0.0], [0.0, 0.1]]);
        assert!(!r.feasible);
    }
}
