//! `rollwave`: profiles, scans, spectra, evolution runs, gauges and shocks
//! from the command line.
//!
//! Every subcommand reads an optional JSON config (`--config`) whose keys
//! match the long flag names; flags given on the command line win.

use std::fs;
use std::io::{self, BufWriter};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use rollwave::bloch::{classify_stability, write_spectrum_csv, ClassifyOptions};
use rollwave::conditions::slope_report;
use rollwave::evolution::{
    evolve_linear, evolve_modulated, evolve_nonlinear, random_smooth_perturbation, EvolveConfig, FitOptions,
    ModulatedOptions, ModulationInput, ViscousPsiSign,
};
use rollwave::exec::{with_jobs, Exec};
use rollwave::gauge::{build_gauge, EnergyWeight, Phi2Choice};
use rollwave::profile::{continue_in_parameter, seed_profile, DischargeRule, StepControl, WaveProfile};
use rollwave::shock::{
    build_interpolant, build_shock_gauge, evolve_shock_linear, gaussian_perturbation, solve_shock_profile,
    ShockEvolveConfig, ShockGaugeOde, ShockOde, ShockOptions,
};
use rollwave::sweep::{froude_grid, run_scan, write_rows_csv, ScanConfig};
use rollwave::{Error, ModelParams};

#[derive(Parser)]
#[command(name = "rollwave", version, about = "Roll waves, viscous shocks and their stability diagnostics")]
struct Cli {
    /// JSON file with defaults for the subcommand's flags.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Worker threads; 1 runs sequentially, 0 uses all cores.
    #[arg(long, global = true, env = "ROLLWAVE_JOBS", default_value_t = 0)]
    jobs: usize,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Solve for a periodic roll wave, optionally continuing in F.
    Profile(ProfileFlags),
    /// Slope conditions and verdicts over an (F, period) grid.
    Scan(ScanFlags),
    /// Bloch spectrum and stability classification of a saved profile.
    Spectrum(SpectrumFlags),
    /// Time evolution of a perturbation of a saved profile.
    Evolve(EvolveFlags),
    /// Gauge weights of a saved profile.
    Gauge(GaugeFlags),
    /// Viscous shock profile, gauge and linear damping run.
    Shock(ShockFlags),
    /// Print the version.
    Version,
}

struct CliError {
    code: u8,
    kind: &'static str,
    message: String,
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let (code, kind) = if e.is_config() {
            (1, "config")
        } else if e.is_io() {
            (3, "io")
        } else {
            (2, "numerical")
        };
        Self { code, kind, message: e.to_string() }
    }
}

fn config_err(msg: impl Into<String>) -> CliError {
    CliError { code: 1, kind: "config", message: msg.into() }
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError { code: 3, kind: "io", message: format!("{}: {e}", path.display()) }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// Overlay the flags that were given onto the config object and decode.
fn merge<F: Serialize, C: DeserializeOwned>(config: &Option<Value>, flags: &F) -> CliResult<C> {
    let mut base = match config {
        Some(Value::Object(m)) => m.clone(),
        Some(_) => return Err(config_err("config file must hold a JSON object")),
        None => Map::new(),
    };
    if let Value::Object(m) = serde_json::to_value(flags).map_err(|e| config_err(e.to_string()))? {
        for (k, v) in m {
            if !v.is_null() {
                base.insert(k, v);
            }
        }
    }
    serde_json::from_value(Value::Object(base)).map_err(|e| config_err(e.to_string()))
}

fn read_config(path: &Option<PathBuf>) -> CliResult<Option<Value>> {
    let Some(p) = path else { return Ok(None) };
    let s = fs::read_to_string(p).map_err(|e| io_err(p, e))?;
    serde_json::from_str(&s).map(Some).map_err(|e| config_err(format!("{}: {e}", p.display())))
}

fn load_profile(path: &Path) -> CliResult<WaveProfile> {
    let s = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    WaveProfile::from_json(&s).map_err(|e| config_err(format!("{}: {e}", path.display())))
}

struct Out {
    dir: PathBuf,
}

impl Out {
    fn new(dir: &Path) -> CliResult<Self> {
        fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
        Ok(Self { dir: dir.to_path_buf() })
    }

    fn sub(&self, name: &str) -> CliResult<Self> {
        Self::new(&self.dir.join(name))
    }

    fn file(&self, name: &str) -> CliResult<BufWriter<fs::File>> {
        let p = self.dir.join(name);
        fs::File::create(&p).map(BufWriter::new).map_err(|e| io_err(&p, e))
    }

    fn json<T: Serialize>(&self, name: &str, v: &T) -> CliResult<()> {
        let p = self.dir.join(name);
        let s = serde_json::to_string_pretty(v).map_err(|e| io_err(&p, e))?;
        fs::write(&p, s + "\n").map_err(|e| io_err(&p, e))
    }
}

fn positive(name: &str, v: f64) -> CliResult<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(config_err(format!("{name} must be positive, got {v}")))
    }
}

// ---------------------------------------------------------------- profile

#[derive(Args, Serialize)]
struct ProfileFlags {
    #[arg(long, allow_negative_numbers = true)]
    froude: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    nu: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    period: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    n: Option<usize>,
    /// Fixed discharge; the default is `1 + 1/F`.
    #[arg(long, allow_negative_numbers = true)]
    discharge: Option<f64>,
    /// Continue the solved wave in F up to this value.
    #[arg(long, allow_negative_numbers = true)]
    continue_to: Option<f64>,
}

#[derive(Deserialize)]
#[serde(default, deny_unknown_fields)]
struct ProfileCfg {
    froude: f64,
    nu: f64,
    period: f64,
    n: usize,
    discharge: Option<f64>,
    continue_to: Option<f64>,
}

impl Default for ProfileCfg {
    fn default() -> Self {
        Self { froude: 2.05, nu: 0.1, period: 10.0, n: 128, discharge: None, continue_to: None }
    }
}

fn rule(discharge: Option<f64>) -> DischargeRule {
    discharge.map_or(DischargeRule::HopfNormalized, DischargeRule::Fixed)
}

fn cmd_profile(cfg: ProfileCfg, out: &Out) -> CliResult<Value> {
    positive("froude", cfg.froude)?;
    positive("period", cfg.period)?;
    let params = ModelParams::st_venant(cfg.froude, cfg.nu);
    let wave = seed_profile(&params, cfg.period, cfg.n, rule(cfg.discharge))?;
    wave.write_csv(out.file("profile.csv")?)?;
    out.json("profile.json", &wave)?;
    let mut summary = json!({
        "froude": wave.froude(),
        "period": wave.period,
        "speed": wave.speed,
        "discharge": wave.discharge(),
        "amplitude": wave.amplitude(),
        "residual": wave.residual_norm,
    });
    if let Some(target) = cfg.continue_to {
        let run = continue_in_parameter(&wave, target, &StepControl::default(), rule(cfg.discharge), &[]);
        let dir = out.sub("continuation")?;
        for (i, w) in run.profiles.iter().enumerate() {
            dir.json(&format!("profile_{i:03}.json"), w)?;
        }
        dir.json("steps.json", &run.steps)?;
        summary["continuation"] = json!({
            "reached": run.last().froude(),
            "profiles": run.profiles.len(),
            "failed": run.failed,
        });
        if run.failed {
            out.json("summary.json", &summary)?;
            return Err(CliError {
                code: 2,
                kind: "numerical",
                message: format!("continuation stalled at F = {:.4}", run.last().froude()),
            });
        }
    }
    Ok(summary)
}

// ---------------------------------------------------------------- scan

#[derive(Args, Serialize)]
struct ScanFlags {
    #[arg(long, allow_negative_numbers = true)]
    nu: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    f_start: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    f_end: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    f_step: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    periods: Option<Vec<f64>>,
    #[arg(long, allow_negative_numbers = true)]
    n: Option<usize>,
    #[arg(long, allow_negative_numbers = true)]
    discharge: Option<f64>,
    /// Classify Bloch stability on every row.
    #[arg(long, allow_negative_numbers = true)]
    stability: Option<bool>,
    /// Fit a linear damping rate on every row.
    #[arg(long, allow_negative_numbers = true)]
    damping: Option<bool>,
    #[arg(long, allow_negative_numbers = true)]
    modes: Option<usize>,
    #[arg(long, allow_negative_numbers = true)]
    xi_points: Option<usize>,
    #[arg(long, allow_negative_numbers = true)]
    t: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    dt: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    seed: Option<u64>,
}

#[derive(Deserialize)]
#[serde(default, deny_unknown_fields)]
struct ScanCfg {
    nu: f64,
    f_start: f64,
    f_end: f64,
    f_step: f64,
    periods: Vec<f64>,
    n: usize,
    discharge: Option<f64>,
    stability: bool,
    damping: bool,
    modes: usize,
    xi_points: usize,
    t: f64,
    dt: f64,
    seed: u64,
}

impl Default for ScanCfg {
    fn default() -> Self {
        Self {
            nu: 0.1,
            f_start: 2.1,
            f_end: 4.5,
            f_step: 0.1,
            periods: vec![10.0],
            n: 128,
            discharge: None,
            stability: false,
            damping: false,
            modes: 64,
            xi_points: 48,
            t: 2.0,
            dt: 2e-3,
            seed: 1,
        }
    }
}

fn cmd_scan(cfg: ScanCfg, exec: Exec, out: &Out) -> CliResult<Value> {
    let froude = froude_grid(cfg.f_start, cfg.f_end, cfg.f_step);
    let scan = ScanConfig {
        nu: cfg.nu,
        froude,
        periods: cfg.periods,
        n: cfg.n,
        rule: rule(cfg.discharge),
        stability: cfg
            .stability
            .then(|| ClassifyOptions { modes: cfg.modes, xi_points: cfg.xi_points, ..Default::default() }),
        damping: cfg.damping.then(|| EvolveConfig { dt: cfg.dt, t_final: cfg.t, ..Default::default() }),
        seed: cfg.seed,
        exec,
    };
    let res = run_scan(&scan)?;
    write_rows_csv(&res.rows, out.file("scan.csv")?)?;
    out.json("summary.json", &res.summary)?;
    Ok(serde_json::to_value(&res.summary).unwrap_or_default())
}

// ---------------------------------------------------------------- spectrum

#[derive(Args, Serialize)]
struct SpectrumFlags {
    #[arg(long, allow_negative_numbers = true)]
    profile: Option<PathBuf>,
    #[arg(long, allow_negative_numbers = true)]
    xi_points: Option<usize>,
    #[arg(long, allow_negative_numbers = true)]
    modes: Option<usize>,
}

#[derive(Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
struct SpectrumCfg {
    profile: Option<PathBuf>,
    xi_points: Option<usize>,
    modes: Option<usize>,
}

fn required(p: &Option<PathBuf>) -> CliResult<&Path> {
    p.as_deref().ok_or_else(|| config_err("--profile is required"))
}

fn cmd_spectrum(cfg: SpectrumCfg, exec: Exec, out: &Out) -> CliResult<Value> {
    let wave = load_profile(required(&cfg.profile)?)?;
    let d = ClassifyOptions::default();
    let opts = ClassifyOptions {
        modes: cfg.modes.unwrap_or(d.modes),
        xi_points: cfg.xi_points.unwrap_or(d.xi_points),
        exec,
        ..d
    };
    let rep = classify_stability(&wave, &opts)?;
    write_spectrum_csv(&rep.spectra, out.file("spectrum.csv")?)?;
    let mut v = serde_json::to_value(&rep).unwrap_or_default();
    if let Value::Object(m) = &mut v {
        m.remove("spectra");
    }
    out.json("stability.json", &v)?;
    Ok(v)
}

// ---------------------------------------------------------------- evolve

#[derive(Args, Serialize)]
struct EvolveFlags {
    #[arg(long, allow_negative_numbers = true)]
    profile: Option<PathBuf>,
    /// linear | nonlinear | modulated
    #[arg(long, allow_negative_numbers = true)]
    mode: Option<String>,
    /// Shorthand for `--mode linear`.
    #[arg(long, action = clap::ArgAction::SetTrue)]
    #[serde(skip_serializing_if = "std::ops::Not::not")]
    linear: bool,
    #[arg(long, allow_negative_numbers = true)]
    t: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    dt: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    seed: Option<u64>,
    /// `L^2` size of the random initial perturbation.
    #[arg(long, allow_negative_numbers = true)]
    amplitude: Option<f64>,
    /// Fourier modes of the random initial perturbation.
    #[arg(long, allow_negative_numbers = true)]
    perturbation_modes: Option<usize>,
    /// Phase `psi(x, t)` for modulated runs; `X` denotes the period.
    #[arg(long, allow_negative_numbers = true)]
    psi: Option<String>,
    #[arg(long, allow_negative_numbers = true)]
    phi2: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    hk: Option<u32>,
}

#[derive(Deserialize)]
#[serde(default, deny_unknown_fields)]
struct EvolveCfg {
    profile: Option<PathBuf>,
    mode: String,
    linear: bool,
    t: f64,
    dt: f64,
    seed: u64,
    amplitude: f64,
    perturbation_modes: usize,
    psi: Option<String>,
    phi2: Option<f64>,
    hk: u32,
}

impl Default for EvolveCfg {
    fn default() -> Self {
        Self {
            profile: None,
            mode: "linear".into(),
            linear: false,
            t: 5.0,
            dt: 2e-3,
            seed: 1,
            amplitude: 1e-3,
            perturbation_modes: 8,
            psi: None,
            phi2: None,
            hk: 2,
        }
    }
}

fn cmd_evolve(cfg: EvolveCfg, out: &Out) -> CliResult<Value> {
    let wave = load_profile(required(&cfg.profile)?)?;
    positive("t", cfg.t)?;
    positive("dt", cfg.dt)?;
    let phi2 = cfg.phi2.map_or(Phi2Choice::Auto, Phi2Choice::Fixed);
    let gauge = build_gauge(&wave, phi2, EnergyWeight::Form)?;
    let grid = wave.grid();
    let (t0, u0) = random_smooth_perturbation(&grid, cfg.seed, cfg.perturbation_modes, cfg.amplitude);
    let ec = EvolveConfig { dt: cfg.dt, t_final: cfg.t, hk: cfg.hk, ..Default::default() };
    let mode = if cfg.linear { "linear" } else { cfg.mode.as_str() };
    let mut run = match mode {
        "linear" => evolve_linear(&wave, Some(&gauge), &t0, &u0, &ec)?,
        "nonlinear" => evolve_nonlinear(&wave, Some(&gauge), &t0, &u0, &ec)?,
        "modulated" => {
            let src = cfg.psi.as_deref().ok_or_else(|| config_err("modulated runs need --psi"))?;
            let consts = [("X".to_string(), wave.period), ("pi".to_string(), std::f64::consts::PI)].into();
            let psi = ModulationInput::parse(src, &consts)?;
            let opts = ModulatedOptions { sign: ViscousPsiSign::Derived, epsilon: None };
            evolve_modulated(&wave, &gauge, &t0, &u0, &psi, &ec, &opts)?
        }
        other => return Err(config_err(format!("unknown mode {other:?}"))),
    };
    let fit = run.trace.fit(&FitOptions::default())?;
    run.trace.write_csv(out.file("trace.csv")?)?;
    let summary = json!({
        "mode": mode,
        "eta": fit.eta,
        "c": fit.c,
        "violations": fit.violations,
        "samples": fit.samples,
        "phi2": gauge.phi2,
        "flags": run.flags,
    });
    out.json("summary.json", &summary)?;
    Ok(summary)
}

// ---------------------------------------------------------------- gauge

#[derive(Args, Serialize)]
struct GaugeFlags {
    #[arg(long, allow_negative_numbers = true)]
    profile: Option<PathBuf>,
    #[arg(long, allow_negative_numbers = true)]
    phi2: Option<f64>,
    /// form | unit
    #[arg(long, allow_negative_numbers = true)]
    weight: Option<String>,
}

#[derive(Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
struct GaugeCfg {
    profile: Option<PathBuf>,
    phi2: Option<f64>,
    weight: EnergyWeight,
}

fn cmd_gauge(cfg: GaugeCfg, out: &Out) -> CliResult<Value> {
    let wave = load_profile(required(&cfg.profile)?)?;
    let g = build_gauge(&wave, cfg.phi2.map_or(Phi2Choice::Auto, Phi2Choice::Fixed), cfg.weight)?;
    g.write_csv(&wave, out.file("gauge.csv")?)?;
    out.json("gauge.json", &g)?;
    let slope = slope_report(&wave);
    let summary = json!({
        "phi2": g.phi2,
        "coercivity_min": g.coercivity_min,
        "phi1_bounds": g.phi1_bounds,
        "mean_rate": g.mean_rate,
        "periodicity_defect": g.periodicity_defect,
        "pointwise_holds": slope.pointwise_holds,
        "averaged_value": slope.averaged_value,
    });
    out.json("summary.json", &summary)?;
    Ok(summary)
}

// ---------------------------------------------------------------- shock

#[derive(Args, Serialize)]
struct ShockFlags {
    #[arg(long, allow_negative_numbers = true)]
    gamma: Option<f64>,
    /// Pressure constant in `p = a tau^-gamma`.
    #[arg(long, allow_negative_numbers = true)]
    pressure_amp: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    nu: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    tau_minus: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    tau_plus: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    n: Option<usize>,
    #[arg(long, allow_negative_numbers = true)]
    half_width: Option<f64>,
    /// viscous | inviscid
    #[arg(long, allow_negative_numbers = true)]
    ode: Option<String>,
    /// Decay target for the interpolant, as a fraction of the profile rate.
    #[arg(long, allow_negative_numbers = true)]
    theta_fraction: Option<f64>,
    /// Use `phi1' = -K (w - I) phi1` with this `K`.
    #[arg(long, allow_negative_numbers = true)]
    steep: Option<f64>,
    /// Width of the Gaussian initial perturbation.
    #[arg(long, allow_negative_numbers = true)]
    bump_width: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    t: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    dt: Option<f64>,
}

#[derive(Deserialize)]
#[serde(default, deny_unknown_fields)]
struct ShockCfg {
    gamma: f64,
    pressure_amp: f64,
    nu: f64,
    tau_minus: f64,
    tau_plus: f64,
    n: usize,
    half_width: Option<f64>,
    ode: ShockOde,
    theta_fraction: f64,
    steep: Option<f64>,
    bump_width: f64,
    t: f64,
    dt: f64,
}

impl Default for ShockCfg {
    fn default() -> Self {
        Self {
            gamma: 5.0 / 3.0,
            pressure_amp: 1.0,
            nu: 0.5,
            tau_minus: 1.0,
            tau_plus: 2.0,
            n: 801,
            half_width: Some(40.0),
            ode: ShockOde::Viscous,
            theta_fraction: 0.5,
            steep: None,
            bump_width: 1.0,
            t: 2.0,
            dt: 0.01,
        }
    }
}

fn cmd_shock(cfg: ShockCfg, out: &Out) -> CliResult<Value> {
    let params = ModelParams::isentropic_gas(cfg.gamma, cfg.pressure_amp, cfg.nu);
    let opts = ShockOptions { n: cfg.n, half_width: cfg.half_width, ode: cfg.ode, ..Default::default() };
    let prof = solve_shock_profile(&params, cfg.tau_minus, cfg.tau_plus, &opts)?;
    prof.write_csv(out.file("shock.csv")?)?;
    out.json("shock.json", &prof)?;
    let interp = build_interpolant(&prof, cfg.theta_fraction * prof.decay_rate)?;
    let ode = cfg.steep.map_or(ShockGaugeOde::Transport, ShockGaugeOde::Steep);
    let g = build_shock_gauge(&prof, &interp, None, ode)?;
    out.json("shock_gauge.json", &g)?;
    let (t0, u0) = gaussian_perturbation(&prof, 1e-3, 0.0, cfg.bump_width);
    let run = evolve_shock_linear(&prof, &g, &t0, &u0, &ShockEvolveConfig { dt: cfg.dt, t_final: cfg.t, ..Default::default() })?;
    run.trace.write_csv(out.file("trace.csv")?)?;
    let summary = json!({
        "speed": prof.speed,
        "half_width": prof.half_width,
        "decay_rate": prof.decay_rate,
        "predicted_rates": prof.predicted_rates,
        "interpolant_rates": interp.fitted_rates,
        "phi2": g.phi2,
        "coercivity_min": g.coercivity_min,
        "eta": run.fit.eta,
        "violations": run.fit.violations,
        "edge_share": run.edge_share,
    });
    out.json("summary.json", &summary)?;
    Ok(summary)
}

// ---------------------------------------------------------------- main

fn run(cli: Cli) -> CliResult<()> {
    let config = read_config(&cli.config)?;
    let exec = Exec::from_jobs(if cli.jobs == 0 { usize::MAX } else { cli.jobs });
    let jobs = cli.jobs;
    let summary = match &cli.cmd {
        Cmd::Version => {
            println!("rollwave {}", env!("CARGO_PKG_VERSION"));
            return Ok(());
        }
        Cmd::Profile(f) => {
            let cfg = merge(&config, f)?;
            cmd_profile(cfg, &Out::new(&cli.out)?)?
        }
        Cmd::Scan(f) => {
            let cfg = merge(&config, f)?;
            let out = Out::new(&cli.out)?;
            with_jobs(jobs, || cmd_scan(cfg, exec, &out))?
        }
        Cmd::Spectrum(f) => {
            let cfg = merge(&config, f)?;
            let out = Out::new(&cli.out)?;
            with_jobs(jobs, || cmd_spectrum(cfg, exec, &out))?
        }
        Cmd::Evolve(f) => cmd_evolve(merge(&config, f)?, &Out::new(&cli.out)?)?,
        Cmd::Gauge(f) => cmd_gauge(merge(&config, f)?, &Out::new(&cli.out)?)?,
        Cmd::Shock(f) => cmd_shock(merge(&config, f)?, &Out::new(&cli.out)?)?,
    };
    println!("{}", serde_json::to_string_pretty(&summary).unwrap_or_default());
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let err = json!({ "error": "config", "code": 1, "message": e.to_string().trim() });
            eprintln!("{err}");
            return ExitCode::from(1);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let err = json!({ "error": e.kind, "code": e.code, "message": e.message });
            let _ = io::Write::flush(&mut io::stdout());
            eprintln!("{err}");
            ExitCode::from(e.code)
        }
    }
}
