//! Hill's method for the Bloch symbols of the linearized operator
//!
//! ```text
//! L(tau, u) = (c tau_x + u_x,
//!              c u_x + (alpha tau)_x + nu (b u_x)_x - u_bar^2 tau - 2 u_bar tau_bar u)
//! ```
//!
//! with `b = tau_bar^-2`. `L_xi` is represented on Fourier modes
//! `-M..=M` with wavenumbers `k_p + xi`; multiplication by a periodic
//! coefficient becomes a Toeplitz block built from its Fourier coefficients.
//! Unknowns are ordered `(tau_{-M..M}, u_{-M..M})`.

use std::f64::consts::PI;
use std::io::Write;

use faer::{c64, Mat};
use serde::{Deserialize, Serialize};

use crate::conditions::{alpha_profile, slope_rate};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::linalg::{eigen_c, eigenvalues_c, inverse_c, inverse_norm, largest_singular_value, log_det, matvec_c, solve_real};
use crate::profile::{fmt, WaveProfile};

/// Coefficient energy beyond mode `M` above this fraction is rejected.
pub const COEFF_TAIL_TOL: f64 = 1e-3;

#[derive(Debug, Clone)]
pub struct BlochOperator {
    pub xi: f64,
    pub modes: usize,
    pub period: f64,
    pub matrix: Mat<c64>,
}

impl BlochOperator {
    pub fn dim(&self) -> usize {
        2 * (2 * self.modes + 1)
    }

    /// Wavenumber `2 pi p / X + xi` of Fourier slot `idx` (either component).
    pub fn wavenumber(&self, idx: usize) -> f64 {
        let m = 2 * self.modes + 1;
        let p = (idx % m) as f64 - self.modes as f64;
        2.0 * PI * p / self.period + self.xi
    }

    /// Fourier coefficients (slots `-M..=M`) of grid functions `(tau, u)`
    /// on the profile grid, after removing the Bloch phase `exp(i xi x)`.
    pub fn project(&self, profile: &WaveProfile, tau: &[c64], u: &[c64]) -> Vec<c64> {
        let g = profile.grid();
        let x = g.points();
        let m = self.modes as i64;
        let mut out = Vec::with_capacity(self.dim());
        for f in [tau, u] {
            let periodic: Vec<c64> = f.iter().zip(&x).map(|(v, x)| v * c64::from_polar(1.0, -self.xi * x)).collect();
            let c = g.coefficients_complex(&periodic);
            for p in -m..=m {
                let slot = p.rem_euclid(g.n() as i64) as usize;
                out.push(if (p.unsigned_abs() as usize) * 2 < g.n() { c[slot] } else { c64::new(0.0, 0.0) });
            }
        }
        out
    }
}

/// Fourier coefficient `d` of a grid function, zero beyond the grid's
/// resolved band and halved at Nyquist.
fn coeff_lookup(c: &[c64], n: usize, d: i64) -> c64 {
    let a = d.unsigned_abs() as usize;
    if 2 * a > n {
        return c64::new(0.0, 0.0);
    }
    let v = c[d.rem_euclid(n as i64) as usize];
    if 2 * a == n {
        v * 0.5
    } else {
        v
    }
}

fn tail_fraction(c: &[c64], n: usize, m: usize) -> f64 {
    let mut total = 0.0;
    let mut tail = 0.0;
    for (j, v) in c.iter().enumerate() {
        let mode = if j <= n / 2 { j } else { n - j };
        if mode == 0 {
            continue;
        }
        total += v.norm_sqr();
        if mode > m {
            tail += v.norm_sqr();
        }
    }
    if total == 0.0 {
        0.0
    } else {
        (tail / total).sqrt()
    }
}

pub fn assemble_bloch(profile: &WaveProfile, xi: f64, modes: usize) -> Result<BlochOperator> {
    if modes < 8 {
        return Err(Error::Domain(format!("Bloch truncation needs M >= 8, got {modes}")));
    }
    let g = profile.grid();
    let n = g.n();
    let nu = profile.params.nu;
    let c = profile.speed;
    let alpha = alpha_profile(profile);
    let ubar2: Vec<f64> = profile.u_bar.iter().map(|u| u * u).collect();
    let b: Vec<f64> = profile.tau_bar.iter().map(|&t| profile.params.viscous_weight(t)).collect();
    let ut: Vec<f64> = profile.u_bar.iter().zip(&profile.tau_bar).map(|(u, t)| 2.0 * u * t).collect();
    let ca = g.coefficients(&alpha);
    if tail_fraction(&ca, n, modes) > COEFF_TAIL_TOL {
        return Err(Error::Resolution(format!(
            "alpha has {:.2e} of its energy beyond mode {modes}",
            tail_fraction(&ca, n, modes)
        )));
    }
    let cu2 = g.coefficients(&ubar2);
    let cb = g.coefficients(&b);
    let cut = g.coefficients(&ut);
    let m = 2 * modes + 1;
    let kw = 2.0 * PI / profile.period;
    let kappa: Vec<f64> = (0..m).map(|i| kw * (i as f64 - modes as f64) + xi).collect();
    let i1 = c64::new(0.0, 1.0);
    let mut a = Mat::<c64>::zeros(2 * m, 2 * m);
    for p in 0..m {
        let ikp = i1 * kappa[p];
        a[(p, p)] = ikp * c;
        a[(p, m + p)] = ikp;
        a[(m + p, m + p)] = ikp * c;
        for r in 0..m {
            let d = p as i64 - r as i64;
            let ikr = i1 * kappa[r];
            a[(m + p, r)] = ikp * coeff_lookup(&ca, n, d) - coeff_lookup(&cu2, n, d);
            a[(m + p, m + r)] += ikp * ikr * nu * coeff_lookup(&cb, n, d) - coeff_lookup(&cut, n, d);
        }
    }
    Ok(BlochOperator { xi, modes, period: profile.period, matrix: a })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Eigenpair {
    pub re: f64,
    pub im: f64,
    pub residual: f64,
}

/// All eigenvalues with relative residuals `||(L - lambda) v|| / ||v||`.
pub fn spectrum(op: &BlochOperator) -> Result<Vec<Eigenpair>> {
    let (lam, v) = eigen_c(op.matrix.as_ref())?;
    let n = op.dim();
    let mut out = Vec::with_capacity(n);
    for (j, l) in lam.iter().enumerate() {
        let col: Vec<c64> = (0..n).map(|i| v[(i, j)]).collect();
        let lv = matvec_c(op.matrix.as_ref(), &col);
        let num: f64 = lv.iter().zip(&col).map(|(a, b)| (a - l * b).norm_sqr()).sum::<f64>().sqrt();
        let den: f64 = col.iter().map(|b| b.norm_sqr()).sum::<f64>().sqrt();
        out.push(Eigenpair { re: l.re, im: l.im, residual: num / den });
    }
    Ok(out)
}

pub fn eigenvalues(op: &BlochOperator) -> Result<Vec<c64>> {
    eigenvalues_c(op.matrix.as_ref())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct XiSpectrum {
    pub xi: f64,
    pub eigenvalues: Vec<Eigenpair>,
}

pub fn write_spectrum_csv<W: Write>(spectra: &[XiSpectrum], w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["xi", "re_lambda", "im_lambda", "residual"])?;
    for s in spectra {
        for e in &s.eigenvalues {
            wr.write_record([fmt(s.xi), fmt(e.re), fmt(e.im), fmt(e.residual)])?;
        }
    }
    wr.flush()?;
    Ok(())
}

/// `count` Floquet exponents covering `[-pi/X, pi/X)`: a uniform grid plus
/// a geometric cluster towards zero, symmetric, including zero.
pub fn brillouin_grid(period: f64, count: usize) -> Vec<f64> {
    let half = PI / period;
    let uniform = count / 2;
    let geometric = (count - uniform) / 2;
    let mut xs = vec![0.0];
    for j in 0..uniform {
        xs.push(-half + 2.0 * half * j as f64 / uniform as f64);
    }
    for j in 1..=geometric {
        let v = half * 10f64.powf(-2.0 * j as f64 / geometric as f64);
        xs.push(v);
        xs.push(-v);
    }
    xs.sort_by(f64::total_cmp);
    xs.dedup_by(|a, b| (*a - *b).abs() < 1e-14);
    xs
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ClassifyOptions {
    pub modes: usize,
    pub xi_points: usize,
    /// Real parts above this count as unstable.
    pub re_tol: f64,
    /// Radius of the circle around 0 used for the multiplicity count.
    pub zero_radius: f64,
    /// Minimal separation of the two critical slopes.
    pub slope_tol: f64,
    pub exec: Exec,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        Self { modes: 64, xi_points: 96, re_tol: 1e-6, zero_radius: 1e-3, slope_tol: 1e-6, exec: Exec::best() }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StabilityReport {
    pub d1: bool,
    pub d2: bool,
    pub d3: bool,
    pub h: bool,
    /// Largest `theta` with `Re lambda <= -theta xi^2` on the sampled grid.
    pub theta: f64,
    /// Least-squares `theta` of the two critical curves near `xi = 0`.
    pub theta_fit: f64,
    pub zero_multiplicity: i64,
    /// `d lambda / d(i xi)` at 0 for the two critical curves.
    pub critical_slopes: [f64; 2],
    /// Largest real part over the grid, excluding the zero group at `xi = 0`.
    pub max_re: f64,
    pub flags: Vec<String>,
    pub spectra: Vec<XiSpectrum>,
}

/// Number of zeros of `det(lambda - L_0)` inside `|lambda| = r`, by the
/// argument principle on `samples` points.
pub fn zero_multiplicity(op: &BlochOperator, r: f64, samples: usize) -> i64 {
    let n = op.dim();
    let mut total = 0.0;
    let mut prev = None;
    for j in 0..=samples {
        let z = c64::from_polar(r, 2.0 * PI * j as f64 / samples as f64);
        let m = Mat::<c64>::from_fn(n, n, |a, b| if a == b { z - op.matrix[(a, b)] } else { -op.matrix[(a, b)] });
        let (_, ph) = log_det(m.as_ref());
        if let Some(p) = prev {
            let mut d: f64 = ph - p;
            d = (d + PI).rem_euclid(2.0 * PI) - PI;
            total += d;
        }
        prev = Some(ph);
    }
    (total / (2.0 * PI)).round() as i64
}

fn two_nearest_zero(lam: &[c64]) -> (c64, c64, f64) {
    let mut v: Vec<c64> = lam.to_vec();
    v.sort_by(|a, b| a.norm().total_cmp(&b.norm()));
    let third = v.get(2).map_or(f64::INFINITY, |z| z.norm());
    (v[0], v[1], third)
}

pub fn classify_stability(profile: &WaveProfile, opts: &ClassifyOptions) -> Result<StabilityReport> {
    let xis = brillouin_grid(profile.period, opts.xi_points);
    let ops: Vec<Result<(f64, Vec<c64>)>> = opts.exec.map(&xis, |&xi| {
        let op = assemble_bloch(profile, xi, opts.modes)?;
        Ok((xi, eigenvalues(&op)?))
    });
    let mut spectra = Vec::with_capacity(xis.len());
    let mut flags = Vec::new();
    let mut max_re = f64::NEG_INFINITY;
    let mut theta = f64::INFINITY;
    let mut fit_pts: Vec<(f64, f64)> = Vec::new();
    let near = 0.2 * PI / profile.period;
    for r in ops {
        let (xi, lam) = r?;
        let mut top = f64::NEG_INFINITY;
        for z in &lam {
            if xi == 0.0 && z.norm() < opts.zero_radius {
                continue;
            }
            top = top.max(z.re);
        }
        max_re = max_re.max(top);
        if xi != 0.0 {
            theta = theta.min(-top / (xi * xi));
            if xi.abs() <= near {
                let (a, b, _) = two_nearest_zero(&lam);
                fit_pts.push((xi, a.re));
                fit_pts.push((xi, b.re));
            }
        }
        spectra.push(XiSpectrum {
            xi,
            eigenvalues: lam.iter().map(|z| Eigenpair { re: z.re, im: z.im, residual: f64::NAN }).collect(),
        });
    }
    // Re lambda ~ -theta xi^2 through the origin
    let (num, den) = fit_pts.iter().fold((0.0, 0.0), |(n, d), (x, y)| (n - y * x * x, d + x.powi(4)));
    let theta_fit = if den > 0.0 { num / den } else { f64::NAN };

    let op0 = assemble_bloch(profile, 0.0, opts.modes)?;
    let mult = zero_multiplicity(&op0, opts.zero_radius, 256);

    let h = 1e-3 * PI / profile.period;
    let oph = assemble_bloch(profile, h, opts.modes)?;
    let lam_h = eigenvalues(&oph)?;
    let (a, b, third) = two_nearest_zero(&lam_h);
    if third < 10.0 * b.norm() {
        flags.push(format!(
            "critical pair at xi = {h:.3e} not separated from the rest of the spectrum ({:.3e} vs {third:.3e})",
            b.norm()
        ));
    }
    let mut slopes = [a.im / h, b.im / h];
    slopes.sort_by(f64::total_cmp);
    if !(theta.is_finite()) {
        flags.push("no nonzero Floquet exponents sampled".into());
    }
    let d1 = max_re <= opts.re_tol;
    let d2 = d1 && theta > 0.0;
    let d3 = mult == 2;
    let hv = (slopes[0] - slopes[1]).abs() > opts.slope_tol;
    Ok(StabilityReport {
        d1,
        d2,
        d3,
        h: hv,
        theta,
        theta_fit,
        zero_multiplicity: mult,
        critical_slopes: slopes,
        max_re,
        flags,
        spectra,
    })
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct HfAsymptote {
    pub estimate: f64,
    /// `-<alpha tau_bar^2> / nu`.
    pub target: f64,
    pub relative_error: f64,
    pub count: usize,
    pub raw_mean: f64,
}

/// Real-part limit of the bounded-real-part eigenvalue family.
///
/// Eigenvalues are kept when `|Im lambda|` lies in `band` (fractions of
/// `|c| k_M`, `k_M = 2 pi M / X`) and their real part is above half the
/// slowest viscous decay `-nu min(b) (band.0 k_M)^2`. A least-squares fit
/// `Re lambda = a + b / (Im lambda)^2 + d / (Im lambda)^4` gives the estimate `a`.
pub fn hf_asymptote(profile: &WaveProfile, modes: usize, xi: f64, band: (f64, f64)) -> Result<HfAsymptote> {
    let op = assemble_bloch(profile, xi, modes)?;
    let lam = eigenvalues(&op)?;
    let km = 2.0 * PI * modes as f64 / profile.period;
    let scale = profile.speed.abs() * km;
    let bmin = profile.tau_bar.iter().map(|&t| profile.params.viscous_weight(t)).fold(f64::INFINITY, f64::min);
    let cut = -0.5 * profile.params.nu * bmin * (band.0 * km).powi(2);
    let pts: Vec<(f64, f64)> = lam
        .iter()
        .filter(|z| z.im.abs() >= band.0 * scale && z.im.abs() <= band.1 * scale && z.re > cut)
        .map(|z| (1.0 / (z.im * z.im), z.re))
        .collect();
    let target = -profile.grid().mean(&slope_rate(profile));
    if pts.len() < 4 {
        return Err(Error::Resolution(format!(
            "only {} eigenvalues in the far-field band at M = {modes}",
            pts.len()
        )));
    }
    let my = pts.iter().map(|p| p.1).sum::<f64>() / pts.len() as f64;
    let estimate = polyfit_intercept(&pts, 2)?;
    Ok(HfAsymptote {
        estimate,
        target,
        relative_error: ((estimate - target) / target).abs(),
        count: pts.len(),
        raw_mean: my,
    })
}

/// Constant term of the least-squares polynomial of degree `deg`.
fn polyfit_intercept(pts: &[(f64, f64)], deg: usize) -> Result<f64> {
    let scale = pts.iter().map(|p| p.0.abs()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let k = deg + 1;
    let mut ata = vec![vec![0.0; k]; k];
    let mut aty = vec![0.0; k];
    for &(x, y) in pts {
        let xs = x / scale;
        let row: Vec<f64> = (0..k).map(|j| xs.powi(j as i32)).collect();
        for i in 0..k {
            aty[i] += row[i] * y;
            for j in 0..k {
                ata[i][j] += row[i] * row[j];
            }
        }
    }
    let m = Mat::<f64>::from_fn(k, k, |i, j| ata[i][j]);
    Ok(solve_real(&m, &aty)?[0])
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResolventSample {
    pub xi: f64,
    pub lambda_re: f64,
    pub lambda_im: f64,
    pub norm: Option<f64>,
    pub skipped: bool,
    pub distance: f64,
}

/// `H^s_xi` weights `sqrt(sum_{j<=s} |k_p + xi|^{2j})` per slot.
pub fn sobolev_weights(op: &BlochOperator, s: u32) -> Vec<f64> {
    (0..op.dim())
        .map(|i| {
            let k = op.wavenumber(i);
            (0..=s).map(|j| k.abs().powi(2 * j as i32)).sum::<f64>().sqrt()
        })
        .collect()
}

/// `||(lambda - L_xi)^-1||` on `H^s_xi` for every `(xi, lambda)` pair.
/// Samples within `margin` of an eigenvalue of `L_xi` are skipped.
pub fn resolvent_norm_scan(
    profile: &WaveProfile,
    s: u32,
    lambdas: &[c64],
    xis: &[f64],
    modes: usize,
    margin: f64,
    exec: Exec,
) -> Result<Vec<ResolventSample>> {
    let per_xi: Vec<Result<(BlochOperator, Vec<c64>)>> = exec.map(xis, |&xi| {
        let op = assemble_bloch(profile, xi, modes)?;
        let ev = eigenvalues(&op)?;
        Ok((op, ev))
    });
    let mut jobs = Vec::new();
    let mut ops = Vec::new();
    for r in per_xi {
        ops.push(r?);
    }
    for (oi, _) in ops.iter().enumerate() {
        for &l in lambdas {
            jobs.push((oi, l));
        }
    }
    let out: Vec<Result<ResolventSample>> = exec.map(&jobs, |&(oi, l)| {
        let (op, ev) = &ops[oi];
        let dist = ev.iter().map(|z| (z - l).norm()).fold(f64::INFINITY, f64::min);
        let mut sample = ResolventSample { xi: op.xi, lambda_re: l.re, lambda_im: l.im, norm: None, skipped: false, distance: dist };
        if dist < margin {
            sample.skipped = true;
            return Ok(sample);
        }
        sample.norm = Some(weighted_resolvent_norm(op, l, s)?);
        Ok(sample)
    });
    out.into_iter().collect()
}

/// Resolvent norm from the weighted shifted operator `W (lambda - L) W^-1`.
pub fn weighted_resolvent_norm(op: &BlochOperator, l: c64, s: u32) -> Result<f64> {
    let n = op.dim();
    let w = sobolev_weights(op, s);
    let m = Mat::<c64>::from_fn(n, n, |a, b| {
        let v = if a == b { l - op.matrix[(a, b)] } else { -op.matrix[(a, b)] };
        v * (w[a] / w[b])
    });
    inverse_norm(m.as_ref(), 1e-9, 200)
}

/// Same quantity through an explicit inverse and a full SVD.
pub fn weighted_resolvent_norm_dense(op: &BlochOperator, l: c64, s: u32) -> Result<f64> {
    let n = op.dim();
    let shifted = Mat::<c64>::from_fn(n, n, |a, b| if a == b { l - op.matrix[(a, b)] } else { -op.matrix[(a, b)] });
    let inv = inverse_c(shifted.as_ref());
    let w = sobolev_weights(op, s);
    let scaled = Mat::<c64>::from_fn(n, n, |a, b| inv[(a, b)] * (w[a] / w[b]));
    largest_singular_value(scaled.as_ref())
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RegionSpec {
    pub eta: f64,
    pub radius: f64,
    pub rings: usize,
    pub angles: usize,
    pub xi_count: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RegionScan {
    pub spec: RegionSpec,
    pub modes: usize,
    pub sup: f64,
    pub argsup: (f64, f64, f64),
    pub skipped: usize,
    pub samples: Vec<ResolventSample>,
}

/// Points of `{R <= |lambda| <= 10 R, Re lambda >= -eta/2}`.
pub fn region_samples(spec: &RegionSpec) -> Vec<c64> {
    let mut out = Vec::new();
    for i in 0..spec.rings {
        let rho = spec.radius * 10f64.powf(i as f64 / (spec.rings.max(2) - 1) as f64);
        let tmax = (-spec.eta / (2.0 * rho)).max(-1.0).acos();
        for j in 0..spec.angles {
            let t = -tmax + 2.0 * tmax * j as f64 / (spec.angles.max(2) - 1) as f64;
            out.push(c64::from_polar(rho, t));
        }
    }
    out
}

/// Uniform Floquet exponents `-pi/X + (j + 1/2) 2 pi / (X count)`.
pub fn uniform_xis(period: f64, count: usize) -> Vec<f64> {
    let w = 2.0 * PI / period;
    (0..count).map(|j| -0.5 * w + (j as f64 + 0.5) * w / count as f64).collect()
}

/// `|c| k_M`, the largest transport frequency carried by `M` modes.
pub fn resolved_band(profile: &WaveProfile, modes: usize) -> f64 {
    profile.speed.abs() * 2.0 * PI * modes as f64 / profile.period
}

/// Radius beyond which the region contains no eigenvalue: twice the
/// largest modulus among eigenvalues with `Re lambda >= -3 eta / 4`,
/// over the given Floquet exponents. Eigenvalues beyond half the resolved
/// transport band `|c| k_M / 2` are truncation modes and are ignored.
pub fn default_radius(profile: &WaveProfile, eta: f64, modes: usize, xis: &[f64], exec: Exec) -> Result<f64> {
    let per: Vec<Result<f64>> = exec.map(xis, |&xi| {
        let op = assemble_bloch(profile, xi, modes)?;
        let ev = eigenvalues(&op)?;
        Ok(ev
            .iter()
            .filter(|z| z.re >= -0.75 * eta && z.im.abs() <= 0.5 * resolved_band(profile, modes))
            .map(|z| z.norm())
            .fold(0.0, f64::max))
    });
    let mut r: f64 = 0.0;
    for v in per {
        r = r.max(v?);
    }
    Ok(2.0 * r.max(0.5))
}

pub fn resolvent_region_sup(profile: &WaveProfile, s: u32, modes: usize, spec: &RegionSpec, exec: Exec) -> Result<RegionScan> {
    let xis = uniform_xis(profile.period, spec.xi_count);
    let lambdas = region_samples(spec);
    let margin = 1e-6 * spec.radius;
    let samples = resolvent_norm_scan(profile, s, &lambdas, &xis, modes, margin, exec)?;
    let mut sup = 0.0;
    let mut arg = (0.0, 0.0, 0.0);
    let mut skipped = 0;
    for smp in &samples {
        match smp.norm {
            Some(v) if v > sup => {
                sup = v;
                arg = (smp.xi, smp.lambda_re, smp.lambda_im);
            }
            None => skipped += 1,
            _ => {}
        }
    }
    Ok(RegionScan { spec: *spec, modes, sup, argsup: arg, skipped, samples })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{constant_state_spectrum, ModelParams};

    fn constant(f: f64) -> WaveProfile {
        let p = ModelParams::st_venant(f, 0.1).with_speed(0.3);
        WaveProfile::constant(p, 6.0, 32, 1.0, 1.0).unwrap()
    }

    #[test]
    fn constant_state_matches_symbol() {
        let w = constant(3.0);
        let xi = 0.2;
        let op = assemble_bloch(&w, xi, 8).unwrap();
        let mut got: Vec<c64> = eigenvalues(&op).unwrap();
        let mut want: Vec<c64> = Vec::new();
        for p in -8i64..=8 {
            let k = 2.0 * PI * p as f64 / 6.0 + xi;
            want.extend(constant_state_spectrum(&w.params, k));
        }
        let key = |z: &c64| (z.re * 1e6).round() as i64 * 1_000_000_000 + (z.im * 1e6).round() as i64;
        got.sort_by_key(key);
        want.sort_by_key(key);
        for (a, b) in got.iter().zip(&want) {
            assert!((a - b).norm() < 1e-8 * (1.0 + b.norm()), "{a} vs {b}");
        }
    }

    #[test]
    fn residuals_small() {
        let op = assemble_bloch(&constant(1.5), 0.1, 8).unwrap();
        for e in spectrum(&op).unwrap() {
            assert!(e.residual < 1e-10);
        }
    }

    #[test]
    fn rejects_small_truncation() {
        assert!(assemble_bloch(&constant(1.5), 0.0, 4).is_err());
    }

    #[test]
    fn grid_is_in_zone_and_has_zero() {
        let g = brillouin_grid(6.0, 64);
        assert!(g.contains(&0.0));
        assert!(g.iter().all(|x| *x >= -PI / 6.0 && *x < PI / 6.0 + 1e-15));
        assert!(g.len() >= 64);
    }

    #[test]
    fn stable_constant_state() {
        let w = constant(1.0);
        let opts = ClassifyOptions { modes: 8, xi_points: 32, ..Default::default() };
        let r = classify_stability(&w, &opts).unwrap();
        assert!(r.d1);
        let r = classify_stability(&constant(3.0), &opts).unwrap();
        assert!(!r.d1);
    }

    #[test]
    fn resolvent_estimate_matches_svd() {
        let p = ModelParams::st_venant(1.5, 0.1).with_speed(0.3);
        let mut w = WaveProfile::constant(p, 6.0, 32, 1.0, 1.0).unwrap();
        for (j, t) in w.tau_bar.iter_mut().enumerate() {
            *t += 0.1 * (2.0 * PI * j as f64 / 32.0).sin();
        }
        let op = assemble_bloch(&w, 0.3, 10).unwrap();
        for l in [c64::new(0.5, 2.0), c64::new(-0.1, 0.7)] {
            let a = weighted_resolvent_norm(&op, l, 1).unwrap();
            let b = weighted_resolvent_norm_dense(&op, l, 1).unwrap();
            assert!((a - b).abs() < 1e-6 * b, "{a} {b}");
        }
    }

    #[test]
    fn region_points_respect_half_plane() {
        let spec = RegionSpec { eta: 0.4, radius: 2.0, rings: 4, angles: 9, xi_count: 2 };
        for z in region_samples(&spec) {
            assert!(z.re >= -0.2 - 1e-12);
            assert!(z.norm() >= 2.0 - 1e-12 && z.norm() <= 20.0 + 1e-9);
        }
    }
}
