//! Scans of the slope conditions along continuation branches.
//!
//! A branch is seeded at the first Froude number of the grid for each
//! period and continued through the remaining grid values. Each visited
//! profile becomes one [`ScanRow`]; failures are recorded in the row and
//! the scan moves on.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::bloch::{classify_stability, ClassifyOptions};
use crate::conditions::slope_report;
use crate::error::{Error, Result};
use crate::evolution::{evolve_linear, random_smooth_perturbation, EvolveConfig, FitOptions};
use crate::exec::Exec;
use crate::gauge::{build_gauge, EnergyWeight, Phi2Choice};
use crate::model::ModelParams;
use crate::profile::{continue_in_parameter, fmt, seed_profile, DischargeRule, StepControl, WaveProfile};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScanConfig {
    pub nu: f64,
    pub froude: Vec<f64>,
    pub periods: Vec<f64>,
    pub n: usize,
    pub rule: DischargeRule,
    /// Run the Bloch classification on every row.
    pub stability: Option<ClassifyOptions>,
    /// Fit the damping rate of one random linear run per row.
    pub damping: Option<EvolveConfig>,
    pub seed: u64,
    #[serde(skip, default)]
    pub exec: Exec,
}

impl Default for ScanConfig {
    fn default() -> Self {
        Self {
            nu: 0.1,
            froude: froude_grid(2.1, 4.5, 0.1),
            periods: vec![10.0],
            n: 128,
            rule: DischargeRule::HopfNormalized,
            stability: None,
            damping: None,
            seed: 1,
            exec: Exec::best(),
        }
    }
}

/// `start, start + step, ...` up to `end` inclusive, rounded to 1e-9.
pub fn froude_grid(start: f64, end: f64, step: f64) -> Vec<f64> {
    if !(step > 0.0) || end < start {
        return Vec::new();
    }
    let count = ((end - start) / step + 1e-9).floor() as usize;
    (0..=count).map(|i| ((start + i as f64 * step) * 1e9).round() / 1e9).collect()
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ScanRow {
    pub froude: f64,
    pub period: f64,
    pub discharge: f64,
    pub speed: f64,
    pub pointwise_margin: f64,
    pub pointwise_holds: bool,
    pub averaged_value: f64,
    pub averaged_holds: bool,
    pub stable: Option<bool>,
    pub max_re: Option<f64>,
    pub eta: Option<f64>,
    pub error: Option<String>,
}

impl ScanRow {
    fn failed(froude: f64, period: f64, err: String) -> Self {
        Self {
            froude,
            period,
            discharge: f64::NAN,
            speed: f64::NAN,
            pointwise_margin: f64::NAN,
            pointwise_holds: false,
            averaged_value: f64::NAN,
            averaged_holds: false,
            stable: None,
            max_re: None,
            eta: None,
            error: Some(err),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BranchSummary {
    pub period: f64,
    pub rows: usize,
    pub failures: usize,
    /// Interpolated zero of `pointwise_margin` at its first true-to-false flip.
    pub f_star: Option<f64>,
    /// Grid values on either side of the flip.
    pub bracket: Option<(f64, f64)>,
    pub averaged_positive: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScanSummary {
    pub branches: Vec<BranchSummary>,
    pub averaged_positive: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScanResult {
    pub rows: Vec<ScanRow>,
    pub summary: ScanSummary,
}

/// Profiles at every grid value of one branch, in grid order. Grid values
/// the continuation did not reach come back as errors.
pub fn branch_profiles(cfg: &ScanConfig, period: f64) -> Vec<(f64, Result<WaveProfile>)> {
    let Some(&first) = cfg.froude.first() else {
        return Vec::new();
    };
    let params = ModelParams::st_venant(first, cfg.nu);
    let start = match seed_profile(&params, period, cfg.n, cfg.rule) {
        Ok(w) => w,
        Err(e) => {
            let msg = e.to_string();
            return cfg.froude.iter().map(|&f| (f, Err(Error::NoProfile(msg.clone())))).collect();
        }
    };
    let last = *cfg.froude.last().unwrap();
    let run = continue_in_parameter(&start, last, &StepControl::default(), cfg.rule, &cfg.froude);
    cfg.froude
        .iter()
        .map(|&f| {
            let hit = run.profiles.iter().find(|w| (w.froude() - f).abs() < 1e-9).cloned();
            let res = hit.ok_or_else(|| {
                Error::NoProfile(format!("continuation stopped at F = {:.4} before {f}", run.last().froude()))
            });
            (f, res)
        })
        .collect()
}

fn evaluate(cfg: &ScanConfig, w: &WaveProfile, cell: u64) -> ScanRow {
    let r = slope_report(w);
    let mut row = ScanRow {
        froude: w.froude(),
        period: w.period,
        discharge: w.discharge(),
        speed: w.speed,
        pointwise_margin: r.pointwise_margin,
        pointwise_holds: r.pointwise_holds,
        averaged_value: r.averaged_value,
        averaged_holds: r.averaged_holds,
        stable: None,
        max_re: None,
        eta: None,
        error: None,
    };
    let mut errors = Vec::new();
    if let Some(opts) = &cfg.stability {
        let opts = ClassifyOptions { exec: Exec::Sequential, ..*opts };
        match classify_stability(w, &opts) {
            Ok(rep) => {
                row.stable = Some(rep.d1 && rep.d2 && rep.d3 && rep.h);
                row.max_re = Some(rep.max_re);
            }
            Err(e) => errors.push(format!("stability: {e}")),
        }
    }
    if let Some(ec) = &cfg.damping {
        let fit = || -> Result<f64> {
            let g = build_gauge(w, Phi2Choice::Auto, EnergyWeight::Form)?;
            let (t0, u0) = random_smooth_perturbation(&w.grid(), cfg.seed.wrapping_add(cell), 8, 1e-3);
            let mut run = evolve_linear(w, Some(&g), &t0, &u0, ec)?;
            Ok(run.trace.fit(&FitOptions::default())?.eta)
        };
        match fit() {
            Ok(eta) => row.eta = Some(eta),
            Err(e) => errors.push(format!("damping: {e}")),
        }
    }
    if !errors.is_empty() {
        row.error = Some(errors.join("; "));
    }
    row
}

pub fn validate_scan(cfg: &ScanConfig) -> Result<()> {
    if cfg.froude.is_empty() || cfg.periods.is_empty() {
        return Err(Error::Config("scan grid is empty".into()));
    }
    if cfg.froude.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Config("froude grid must be strictly increasing".into()));
    }
    if cfg.periods.iter().any(|p| !(*p > 0.0)) {
        return Err(Error::Config("periods must be positive".into()));
    }
    if !(cfg.nu > 0.0) {
        return Err(Error::Config(format!("nu must be positive, got {}", cfg.nu)));
    }
    Ok(())
}

/// Rows are ordered by period, then Froude number, whatever the executor.
pub fn run_scan(cfg: &ScanConfig) -> Result<ScanResult> {
    validate_scan(cfg)?;
    let branches: Vec<Vec<(f64, f64, Result<WaveProfile>)>> = cfg
        .exec
        .map(&cfg.periods, |&p| branch_profiles(cfg, p).into_iter().map(|(f, r)| (p, f, r)).collect());
    let cells: Vec<(usize, &(f64, f64, Result<WaveProfile>))> = branches.iter().flatten().enumerate().collect();
    let rows = cfg.exec.map(&cells, |(i, (p, f, res))| match res {
        Ok(w) => evaluate(cfg, w, *i as u64),
        Err(e) => ScanRow::failed(*f, *p, e.to_string()),
    });
    let summary = summarize(&rows, &cfg.periods);
    Ok(ScanResult { rows, summary })
}

pub fn summarize(rows: &[ScanRow], periods: &[f64]) -> ScanSummary {
    let branches: Vec<BranchSummary> = periods
        .iter()
        .map(|&p| {
            let mine: Vec<&ScanRow> = rows.iter().filter(|r| r.period == p).collect();
            let ok: Vec<&&ScanRow> = mine.iter().filter(|r| r.pointwise_margin.is_finite()).collect();
            let mut f_star = None;
            let mut bracket = None;
            for w in ok.windows(2) {
                if w[0].pointwise_holds && !w[1].pointwise_holds {
                    let (a, b) = (w[0].pointwise_margin, w[1].pointwise_margin);
                    f_star = Some(w[0].froude + (w[1].froude - w[0].froude) * a / (a - b));
                    bracket = Some((w[0].froude, w[1].froude));
                    break;
                }
            }
            BranchSummary {
                period: p,
                rows: mine.len(),
                failures: mine.len() - ok.len(),
                f_star,
                bracket,
                averaged_positive: !ok.is_empty() && ok.iter().all(|r| r.averaged_value > 0.0),
            }
        })
        .collect();
    let averaged_positive = branches.iter().all(|b| b.averaged_positive);
    ScanSummary { branches, averaged_positive }
}

fn opt(v: Option<f64>) -> String {
    v.map(fmt).unwrap_or_default()
}

pub fn write_rows_csv<W: Write>(rows: &[ScanRow], w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record([
        "F",
        "period",
        "q",
        "c",
        "pointwise_margin",
        "pointwise_holds",
        "averaged_value",
        "averaged_holds",
        "stable",
        "max_re",
        "eta",
        "error",
    ])?;
    for r in rows {
        wr.write_record([
            fmt(r.froude),
            fmt(r.period),
            fmt(r.discharge),
            fmt(r.speed),
            fmt(r.pointwise_margin),
            r.pointwise_holds.to_string(),
            fmt(r.averaged_value),
            r.averaged_holds.to_string(),
            r.stable.map(|b| b.to_string()).unwrap_or_default(),
            opt(r.max_re),
            opt(r.eta),
            r.error.clone().unwrap_or_default(),
        ])?;
    }
    wr.flush()?;
    Ok(())
}

/// Grid values of the test corpus: ten profiles on one branch spanning
/// `F` from 2.05 to 4.5.
pub const CORPUS_FROUDE: [f64; 10] = [2.05, 2.2, 2.5, 2.8, 3.1, 3.4, 3.7, 4.0, 4.2, 4.5];

/// The test corpus: `nu = 0.1`, period 10, discharge `1 + 1/F`, `n` points.
pub fn corpus(n: usize) -> Result<Vec<WaveProfile>> {
    let cfg = ScanConfig { froude: CORPUS_FROUDE.to_vec(), n, ..Default::default() };
    branch_profiles(&cfg, 10.0).into_iter().map(|(_, r)| r).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_is_inclusive() {
        let g = froude_grid(2.1, 4.5, 0.1);
        assert_eq!(g.len(), 25);
        assert_eq!(g[0], 2.1);
        assert_eq!(*g.last().unwrap(), 4.5);
        assert!(froude_grid(3.0, 2.0, 0.1).is_empty());
    }

    #[test]
    fn empty_grid_rejected() {
        let cfg = ScanConfig { froude: vec![], ..Default::default() };
        assert!(matches!(run_scan(&cfg), Err(Error::Config(_))));
    }

    #[test]
    fn summary_interpolates_flip() {
        let mk = |f: f64, m: f64| ScanRow {
            pointwise_margin: m,
            pointwise_holds: m > 0.0,
            averaged_value: 1.0,
            ..ScanRow::failed(f, 10.0, String::new())
        };
        let rows = vec![mk(3.0, 0.2), mk(3.5, 0.1), mk(4.0, -0.1)];
        let s = summarize(&rows, &[10.0]);
        let b = &s.branches[0];
        assert!((b.f_star.unwrap() - 3.75).abs() < 1e-12);
        assert_eq!(b.bracket, Some((3.5, 4.0)));
        assert!(s.averaged_positive);
    }
}
