//! Fourier machinery on a uniform periodic grid.
//!
//! Grid points are `x_j = j * period / n`, `j = 0..n`. Coefficients follow
//! the convention `h(x) = sum_m c_m exp(i k_m x)` with `k_m = 2 pi m / period`
//! and `c_m = (1/n) sum_j h_j exp(-i k_m x_j)`, stored in FFT order.
//! For even `n` the Nyquist coefficient is treated as a cosine: it is
//! dropped by odd derivatives and split evenly between `+-n/2` when the
//! interpolant is evaluated off-grid.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

#[derive(Clone)]
pub struct PeriodicGrid {
    n: usize,
    period: f64,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for PeriodicGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PeriodicGrid")
            .field("n", &self.n)
            .field("period", &self.period)
            .finish()
    }
}

impl PeriodicGrid {
    pub fn new(n: usize, period: f64) -> Result<Self> {
        if n < 4 {
            return Err(Error::Domain(format!("grid needs at least 4 points, got {n}")));
        }
        if !(period > 0.0) || !period.is_finite() {
            return Err(Error::Domain(format!("period must be positive, got {period}")));
        }
        let mut planner = FftPlanner::new();
        Ok(Self {
            n,
            period,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn dx(&self) -> f64 {
        self.period / self.n as f64
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n).map(|j| j as f64 * self.dx()).collect()
    }

    /// Signed mode index of FFT slot `j`.
    pub fn mode(&self, j: usize) -> i64 {
        let n = self.n as i64;
        let j = j as i64;
        if j < (n + 1) / 2 {
            j
        } else {
            j - n
        }
    }

    pub fn is_nyquist(&self, j: usize) -> bool {
        self.n % 2 == 0 && j == self.n / 2
    }

    pub fn wavenumber(&self, j: usize) -> f64 {
        2.0 * PI * self.mode(j) as f64 / self.period
    }

    pub fn wavenumbers(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.wavenumber(j)).collect()
    }

    pub fn check(&self, f: &[f64]) -> Result<()> {
        if f.len() != self.n {
            return Err(Error::GridMismatch { expected: self.n, got: f.len() });
        }
        Ok(())
    }

    pub fn coefficients(&self, f: &[f64]) -> Vec<Complex64> {
        debug_assert_eq!(f.len(), self.n);
        let mut buf: Vec<Complex64> = f.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.forward.process(&mut buf);
        let scale = 1.0 / self.n as f64;
        buf.iter_mut().for_each(|c| *c *= scale);
        buf
    }

    pub fn coefficients_complex(&self, f: &[Complex64]) -> Vec<Complex64> {
        debug_assert_eq!(f.len(), self.n);
        let mut buf = f.to_vec();
        self.forward.process(&mut buf);
        let scale = 1.0 / self.n as f64;
        buf.iter_mut().for_each(|c| *c *= scale);
        buf
    }

    pub fn synthesize_complex(&self, coeffs: &[Complex64]) -> Vec<Complex64> {
        debug_assert_eq!(coeffs.len(), self.n);
        let mut buf = coeffs.to_vec();
        self.inverse.process(&mut buf);
        buf
    }

    pub fn synthesize(&self, coeffs: &[Complex64]) -> Vec<f64> {
        self.synthesize_complex(coeffs).into_iter().map(|c| c.re).collect()
    }

    /// Spectral derivative of order `order`.
    pub fn derivative(&self, f: &[f64], order: u32) -> Vec<f64> {
        if order == 0 {
            return f.to_vec();
        }
        let mut c = self.coefficients(f);
        self.apply_derivative(&mut c, order);
        self.synthesize(&c)
    }

    pub fn derivative_complex(&self, f: &[Complex64], order: u32) -> Vec<Complex64> {
        if order == 0 {
            return f.to_vec();
        }
        let mut c = self.coefficients_complex(f);
        self.apply_derivative(&mut c, order);
        self.synthesize_complex(&c)
    }

    fn apply_derivative(&self, c: &mut [Complex64], order: u32) {
        for (j, cj) in c.iter_mut().enumerate() {
            if self.is_nyquist(j) && order % 2 == 1 {
                *cj = Complex64::new(0.0, 0.0);
                continue;
            }
            let ik = Complex64::new(0.0, self.wavenumber(j));
            *cj *= ik.powu(order);
        }
    }

    /// Periodic antiderivative of the zero-mean part of `f`, pinned to zero at
    /// `x = 0`. Returns the antiderivative and the removed mean.
    pub fn antiderivative(&self, f: &[f64]) -> (Vec<f64>, f64) {
        let mut c = self.coefficients(f);
        let mean = c[0].re;
        c[0] = Complex64::new(0.0, 0.0);
        for (j, cj) in c.iter_mut().enumerate() {
            if j == 0 || self.is_nyquist(j) {
                *cj = Complex64::new(0.0, 0.0);
                continue;
            }
            *cj /= Complex64::new(0.0, self.wavenumber(j));
        }
        let mut g = self.synthesize(&c);
        let g0 = g[0];
        g.iter_mut().for_each(|v| *v -= g0);
        (g, mean)
    }

    /// Period average (trapezoid rule, spectrally accurate for periodic data).
    pub fn mean(&self, f: &[f64]) -> f64 {
        f.iter().sum::<f64>() / f.len() as f64
    }

    pub fn integral(&self, f: &[f64]) -> f64 {
        self.mean(f) * self.period
    }

    /// Dense first-derivative matrix, row-major `n x n`.
    ///
    /// Equivalent to [`PeriodicGrid::derivative`] with order 1: the Nyquist
    /// mode is annihilated.
    pub fn derivative_matrix(&self) -> Vec<Vec<f64>> {
        let n = self.n;
        let mut d = vec![vec![0.0; n]; n];
        for j in 0..n {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            let col = self.derivative(&e, 1);
            for i in 0..n {
                d[i][j] = col[i];
            }
        }
        d
    }

    /// Trigonometric interpolant of `f` evaluated at arbitrary points.
    pub fn interpolate(&self, f: &[f64], at: &[f64]) -> Vec<f64> {
        let c = self.coefficients(f);
        self.evaluate_coefficients(&c, at)
    }

    pub fn evaluate_coefficients(&self, c: &[Complex64], at: &[f64]) -> Vec<f64> {
        let w = 2.0 * PI / self.period;
        let n = self.n;
        // positive modes below Nyquist; their conjugate partners double them
        let top = (n - 1) / 2;
        at.iter()
            .map(|&x| {
                let base = Complex64::from_polar(1.0, w * x);
                let mut z = Complex64::new(1.0, 0.0);
                let mut acc = c[0].re;
                for cj in &c[1..=top] {
                    z *= base;
                    acc += 2.0 * (cj * z).re;
                }
                if n % 2 == 0 {
                    acc += c[n / 2].re * (w * (n / 2) as f64 * x).cos();
                }
                acc
            })
            .collect()
    }

    /// Resample onto a grid with `m` points by zero padding or truncation.
    pub fn resample(&self, f: &[f64], m: usize) -> Result<(PeriodicGrid, Vec<f64>)> {
        let target = PeriodicGrid::new(m, self.period)?;
        let c = self.coefficients(f);
        let d = self.transfer(&c, m);
        let out = target.synthesize(&d);
        Ok((target, out))
    }

    /// Move FFT-ordered coefficients onto an `m`-point layout. Nyquist
    /// coefficients are split into `+-n/2` halves first; modes that land on
    /// the target Nyquist slot are summed there, modes beyond it are dropped.
    pub fn transfer(&self, c: &[Complex64], m: usize) -> Vec<Complex64> {
        let mut d = vec![Complex64::new(0.0, 0.0); m];
        let mut place = |mode: i64, val: Complex64| {
            let a = mode.unsigned_abs() as usize;
            if 2 * a > m {
                return;
            }
            let slot = if mode >= 0 { mode as usize } else { (m as i64 + mode) as usize };
            d[slot % m] += val;
        };
        for (j, &cj) in c.iter().enumerate() {
            let mode = self.mode(j);
            if self.is_nyquist(j) {
                place(mode, cj * 0.5);
                place(-mode, cj * 0.5);
            } else {
                place(mode, cj);
            }
        }
        d
    }

    /// Largest coefficient modulus among the top quarter of resolved modes,
    /// relative to the largest nonzero-mode coefficient. Used as a
    /// resolution indicator.
    pub fn tail_ratio(&self, f: &[f64]) -> f64 {
        let c = self.coefficients(f);
        let kmax = self.n / 2;
        let mut head: f64 = 0.0;
        let mut tail: f64 = 0.0;
        for j in 1..self.n {
            let m = self.mode(j).unsigned_abs() as usize;
            let a = c[j].norm();
            head = head.max(a);
            if 4 * m >= 3 * kmax {
                tail = tail.max(a);
            }
        }
        if head == 0.0 {
            0.0
        } else {
            tail / head
        }
    }

    /// `||f||_{L^2(0, period)}`.
    pub fn l2_norm(&self, f: &[f64]) -> f64 {
        (self.integral(&f.iter().map(|v| v * v).collect::<Vec<_>>())).sqrt()
    }

    /// `(sum_{k<=s} ||d^k f||^2)^{1/2}` via Parseval.
    pub fn sobolev_norm(&self, f: &[f64], s: u32) -> f64 {
        let c = self.coefficients(f);
        let mut acc = 0.0;
        for (j, cj) in c.iter().enumerate() {
            let k = if self.is_nyquist(j) { 0.0 } else { self.wavenumber(j) };
            let w: f64 = (0..=s).map(|p| k.powi(2 * p as i32)).sum();
            // the Nyquist slot contributes only through its zeroth power
            let w = if self.is_nyquist(j) { 1.0 } else { w };
            acc += w * cj.norm_sqr();
        }
        (acc * self.period).sqrt()
    }

    /// `||d^s f||_{L^2}`.
    pub fn seminorm(&self, f: &[f64], s: u32) -> f64 {
        if s == 0 {
            return self.l2_norm(f);
        }
        let c = self.coefficients(f);
        let mut acc = 0.0;
        for (j, cj) in c.iter().enumerate() {
            if self.is_nyquist(j) {
                continue;
            }
            acc += self.wavenumber(j).powi(2 * s as i32) * cj.norm_sqr();
        }
        (acc * self.period).sqrt()
    }

    /// Product of two grid functions formed on a 3/2-padded grid and
    /// truncated back.
    pub fn dealiased_product(&self, a: &[f64], b: &[f64]) -> Vec<f64> {
        let m = 3 * self.n / 2 + (3 * self.n / 2) % 2;
        let (_, ap) = self.resample(a, m).expect("valid grid");
        let (fine, bp) = self.resample(b, m).expect("valid grid");
        let prod: Vec<f64> = ap.iter().zip(&bp).map(|(x, y)| x * y).collect();
        let (_, back) = fine.resample(&prod, self.n).expect("valid grid");
        back
    }

    /// Circular shift by `shift` grid cells (positive moves data right).
    pub fn shift(&self, f: &[f64], shift: usize) -> Vec<f64> {
        let n = self.n;
        (0..n).map(|j| f[(j + n - shift % n) % n]).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> PeriodicGrid {
        PeriodicGrid::new(32, 3.0).unwrap()
    }

    #[test]
    fn derivative_of_trig_polynomial_is_exact() {
        let g = grid();
        let k = 2.0 * PI / 3.0;
        let f: Vec<f64> = g.points().iter().map(|x| (3.0 * k * x).sin() + 0.5 * (k * x).cos()).collect();
        let df = g.derivative(&f, 1);
        for (x, d) in g.points().iter().zip(&df) {
            let exact = 3.0 * k * (3.0 * k * x).cos() - 0.5 * k * (k * x).sin();
            assert!((d - exact).abs() < 1e-12, "{d} vs {exact}");
        }
        let d2 = g.derivative(&f, 2);
        for (x, d) in g.points().iter().zip(&d2) {
            let exact = -9.0 * k * k * (3.0 * k * x).sin() - 0.5 * k * k * (k * x).cos();
            assert!((d - exact).abs() < 1e-10);
        }
    }

    #[test]
    fn matrix_matches_fft_derivative() {
        let g = grid();
        let f: Vec<f64> = g.points().iter().map(|x| (2.0 * PI * x / 3.0).sin().exp()).collect();
        let d = g.derivative_matrix();
        let df = g.derivative(&f, 1);
        for i in 0..g.n() {
            let row: f64 = d[i].iter().zip(&f).map(|(a, b)| a * b).sum();
            assert!((row - df[i]).abs() < 1e-11);
        }
    }

    #[test]
    fn antiderivative_inverts_derivative() {
        let g = grid();
        let f: Vec<f64> = g.points().iter().map(|x| 1.3 + (2.0 * PI * x / 3.0).cos().exp()).collect();
        let (anti, _mean) = g.antiderivative(&f);
        let back = g.derivative(&anti, 1);
        let fm = g.mean(&f);
        for (b, v) in back.iter().zip(&f) {
            assert!((b - (v - fm)).abs() < 1e-11);
        }
        assert_eq!(anti[0], 0.0);
    }

    #[test]
    fn interpolation_reproduces_smooth_function() {
        let g = PeriodicGrid::new(64, 2.0).unwrap();
        let f: Vec<f64> = g.points().iter().map(|x| (PI * x).sin().exp()).collect();
        let at = [0.123, 0.77, 1.999];
        let v = g.interpolate(&f, &at);
        for (x, y) in at.iter().zip(&v) {
            assert!((y - (PI * x).sin().exp()).abs() < 1e-12);
        }
    }

    #[test]
    fn resample_round_trip() {
        let g = PeriodicGrid::new(32, 5.0).unwrap();
        let f: Vec<f64> = g.points().iter().map(|x| (2.0 * PI * x / 5.0).cos().exp()).collect();
        let (fine, up) = g.resample(&f, 96).unwrap();
        let exact: Vec<f64> = fine.points().iter().map(|x| (2.0 * PI * x / 5.0).cos().exp()).collect();
        for (a, b) in up.iter().zip(&exact) {
            assert!((a - b).abs() < 1e-12);
        }
        let (_, down) = fine.resample(&up, 32).unwrap();
        for (a, b) in down.iter().zip(&f) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn sobolev_norm_of_single_mode() {
        let g = PeriodicGrid::new(16, 2.0 * PI).unwrap();
        let f: Vec<f64> = g.points().iter().map(|x| (3.0 * x).sin()).collect();
        // ||sin 3x||^2 = pi, ||3 cos 3x||^2 = 9 pi
        assert!((g.sobolev_norm(&f, 1) - (10.0 * PI).sqrt()).abs() < 1e-12);
        assert!((g.seminorm(&f, 1) - (9.0 * PI).sqrt()).abs() < 1e-12);
        assert!((g.l2_norm(&f) - PI.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_grid() {
        assert!(PeriodicGrid::new(2, 1.0).is_err());
        assert!(PeriodicGrid::new(8, 0.0).is_err());
    }
}
