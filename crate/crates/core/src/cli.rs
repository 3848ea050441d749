//! Command-line front end: configuration loading, subcommand dispatch, and
//! reproducible on-disk artifacts (profile CSVs, JSON reports, resolved
//! config and versions stamp per run).

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::greens::green;
use crate::grid::RadialGrid;
use crate::model::{beta, lambda_alpha, Alpha, Params};
use crate::radial_ode::{OdeCtrl, RadialProfile};
use crate::shooting::{
    branch_point_json, branch_scan, ground_state_shoot, match_decay, pick_branch, scan_to_csv,
    solve_fixed_alpha, AlphaLabel, BranchPoint, Residuals, ShootControls,
};
use crate::variational::{
    minimize_ground_state, mountain_pass_probe, random_directions, state_from_profile,
    DiscreteState, MinimizeOpts,
};
use crate::verify::equivalence_report;
use crate::Result;

fn default_params() -> Params {
    Params { d: 2, sigma: 1.0, p: 3.0, lambda: 2.0, alpha: Alpha::Finite(0.0) }
}

/// Shooting controls as flat config keys.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ShootingCfg {
    pub resolution: usize,
    pub bisect_tol: f64,
    pub max_k: usize,
    pub r0: Option<f64>,
    pub rmax: Option<f64>,
    pub q_lo: f64,
    pub q_hi: f64,
    pub q_per_decade: usize,
    pub bracket_lo: Option<f64>,
    pub bracket_hi: Option<f64>,
    pub atol: f64,
    pub rtol: f64,
}

impl Default for ShootingCfg {
    fn default() -> Self {
        let c = ShootControls::default();
        ShootingCfg {
            resolution: c.resolution,
            bisect_tol: c.bisect_tol,
            max_k: c.max_k,
            r0: None,
            rmax: None,
            q_lo: c.q_lo,
            q_hi: c.q_hi,
            q_per_decade: c.q_per_decade,
            bracket_lo: None,
            bracket_hi: None,
            atol: c.ode.atol,
            rtol: c.ode.rtol,
        }
    }
}

impl ShootingCfg {
    pub fn to_controls(&self) -> Result<ShootControls> {
        let bracket = match (self.bracket_lo, self.bracket_hi) {
            (Some(lo), Some(hi)) => Some((lo, hi)),
            (None, None) => None,
            _ => {
                return Err(Error::Config(
                    "shooting.bracket_lo and shooting.bracket_hi must be set together".into(),
                ))
            }
        };
        let ctrl = ShootControls {
            bracket,
            resolution: self.resolution,
            bisect_tol: self.bisect_tol,
            max_k: self.max_k,
            r0: self.r0,
            rmax: self.rmax,
            q_lo: self.q_lo,
            q_hi: self.q_hi,
            q_per_decade: self.q_per_decade,
            ode: OdeCtrl { atol: self.atol, rtol: self.rtol, ..OdeCtrl::default() },
        };
        ctrl.validate()?;
        Ok(ctrl)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VariationalCfg {
    pub gtol: f64,
    pub max_iters: usize,
    pub step0: f64,
    /// Number of seeded probe directions for geometry runs.
    pub directions: usize,
    /// Sphere radii scanned for the small-sphere positivity probe.
    pub sphere_radii: Vec<f64>,
}

impl Default for VariationalCfg {
    fn default() -> Self {
        let o = MinimizeOpts::default();
        VariationalCfg {
            gtol: o.gtol,
            max_iters: o.max_iters,
            step0: o.step0,
            directions: 64,
            sphere_radii: vec![1e-3, 1e-2, 0.1, 0.3, 1.0],
        }
    }
}

impl VariationalCfg {
    pub fn to_opts(&self) -> MinimizeOpts {
        MinimizeOpts { gtol: self.gtol, max_iters: self.max_iters, step0: self.step0 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyCfg {
    /// Threshold on |q_fit - q_flux| / max(1, |q_fit|).
    pub q_agree_tol: f64,
    /// Threshold on the relation residual relative to max(1, |f(0)|).
    pub relation_tol: f64,
    /// Crosscheck threshold on the sup-norm discrepancy relative to sup|u|.
    pub sup_tol: f64,
    /// Crosscheck threshold on the relative action discrepancy.
    pub action_tol: f64,
}

impl Default for VerifyCfg {
    fn default() -> Self {
        VerifyCfg { q_agree_tol: 1e-3, relation_tol: 1e-6, sup_tol: 1e-3, action_tol: 1e-4 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputCfg {
    pub dir: String,
    pub seed: u64,
}

impl Default for OutputCfg {
    fn default() -> Self {
        OutputCfg { dir: "out".into(), seed: 0 }
    }
}

/// Fully resolved run configuration: problem data plus per-module controls.
/// Serialized next to every run's outputs.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_params")]
    pub params: Params,
    #[serde(default)]
    pub shooting: ShootingCfg,
    #[serde(default)]
    pub variational: VariationalCfg,
    #[serde(default)]
    pub verify: VerifyCfg,
    #[serde(default)]
    pub output: OutputCfg,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            params: default_params(),
            shooting: ShootingCfg::default(),
            variational: VariationalCfg::default(),
            verify: VerifyCfg::default(),
            output: OutputCfg::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }
}

fn parse_alpha(s: &str) -> std::result::Result<Alpha, String> {
    if s.eq_ignore_ascii_case("free") {
        return Ok(Alpha::Free);
    }
    s.parse::<f64>()
        .map(Alpha::Finite)
        .map_err(|_| format!("alpha must be a number or 'free', got {s:?}"))
}

#[derive(Debug, Parser)]
#[command(name = "pointint", version, about = "Singular radial solutions of (-Δ_α+λ)u = σ|u|^{p-1}u")]
pub struct Cli {
    /// Path to a TOML run configuration; flags below override its keys.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory (overrides output.dir).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Seed for randomized probe directions (overrides output.seed).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Space dimension, 2 or 3.
    #[arg(long, global = true)]
    pub dim: Option<u8>,
    /// Nonlinearity exponent p.
    #[arg(long, global = true)]
    pub p: Option<f64>,
    /// Frequency λ > 0.
    #[arg(long, global = true)]
    pub lambda: Option<f64>,
    /// Nonlinearity sign σ.
    #[arg(long, global = true)]
    pub sigma: Option<f64>,
    /// Point-interaction strength α (a number, or 'free').
    #[arg(long, global = true, value_parser = parse_alpha)]
    pub alpha: Option<Alpha>,
    #[command(subcommand)]
    pub cmd: Cmd,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Cmd {
    /// Report β_α(λ), the spectral threshold λ_α, and eigenfunction norms.
    Spectrum,
    /// Solve for a branch point and verify it.
    Solve {
        /// ground | nodal | fixed-q
        #[arg(long, default_value = "ground")]
        mode: String,
        /// Zero count for nodal / fixed-q modes.
        #[arg(long, default_value_t = 1)]
        k: usize,
        /// Charge for fixed-q mode.
        #[arg(long)]
        q: Option<f64>,
    },
    /// Tabulate a zero-count-k branch over a geometric q-grid.
    BranchScan {
        #[arg(long, default_value_t = 0)]
        k: usize,
        #[arg(long)]
        q_lo: Option<f64>,
        #[arg(long)]
        q_hi: Option<f64>,
    },
    /// Compare the shooting and variational ground states.
    Crosscheck,
    /// Probe the mountain-pass geometry with seeded random directions.
    ProbeGeometry,
    /// Re-verify a stored profile CSV against a given charge.
    Verify {
        /// Profile CSV with columns r,u,du,f.
        #[arg(long)]
        profile: PathBuf,
        /// Charge of the singular component.
        #[arg(long)]
        q: f64,
    },
}

/// Atomic file write: temp file in the target directory, then rename.
fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    fs::create_dir_all(dir)?;
    let tmp = dir.join(format!(
        ".{}.tmp",
        path.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
    ));
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

fn json_pretty<T: Serialize>(value: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(value)? + "\n")
}

/// Write the resolved config and a versions stamp into the run directory.
fn stamp_run(dir: &Path, config: &RunConfig) -> Result<()> {
    let resolved =
        toml::to_string_pretty(config).map_err(|e| Error::Config(e.to_string()))?;
    write_atomic(&dir.join("resolved_config.toml"), &resolved)?;
    let versions = serde_json::json!({
        "package": env!("CARGO_PKG_NAME"),
        "version": env!("CARGO_PKG_VERSION"),
    });
    write_atomic(&dir.join("versions.json"), &json_pretty(&versions)?)
}

fn resolve_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(d) = cli.dim {
        cfg.params.d = d;
    }
    if let Some(p) = cli.p {
        cfg.params.p = p;
    }
    if let Some(l) = cli.lambda {
        cfg.params.lambda = l;
    }
    if let Some(s) = cli.sigma {
        cfg.params.sigma = s;
    }
    if let Some(a) = cli.alpha {
        cfg.params.alpha = a;
    }
    if let Some(out) = &cli.out {
        cfg.output.dir = out.to_string_lossy().into_owned();
    }
    if let Some(seed) = cli.seed {
        cfg.output.seed = seed;
    }
    cfg.params.validate()?;
    Ok(cfg)
}

fn cmd_spectrum(cfg: &RunConfig, dir: &Path) -> Result<bool> {
    let params = &cfg.params;
    let b = beta(params, params.lambda)?;
    let la = lambda_alpha(params);
    // Normalized-eigenfunction data at the threshold: ‖𝒢_λ‖_2 when λ_α > 0.
    let l2 = if la > 0.0 { Some(crate::greens::green_norm(params.d, la, 2.0)?) } else { None };
    let report = serde_json::json!({
        "d": params.d,
        "alpha": params.alpha,
        "lambda": params.lambda,
        "beta": b,
        "lambda_alpha": la,
        "eigenfunction_l2_norm": l2,
        "lambda_above_threshold": params.lambda > la,
    });
    write_atomic(&dir.join("spectrum.json"), &json_pretty(&report)?)?;
    println!(
        "spectrum: beta({}) = {:.12e}, lambda_alpha = {:.12e}",
        params.lambda, b, la
    );
    Ok(true)
}

fn solve_point(cfg: &RunConfig, mode: &str, k: usize, q: Option<f64>) -> Result<BranchPoint> {
    let ctrl = cfg.shooting.to_controls()?;
    match mode {
        "ground" => ground_state_shoot(&cfg.params, &ctrl),
        "nodal" => solve_fixed_alpha(&cfg.params, k, &ctrl),
        "fixed-q" => {
            let q = q.ok_or_else(|| Error::Config("fixed-q mode requires --q".into()))?;
            let points = match_decay(&cfg.params, q, &ctrl)?;
            pick_branch(points, k).ok_or(Error::BranchNotFound {
                k,
                a_lo: f64::NAN,
                a_hi: f64::NAN,
                q_lo: q,
                q_hi: q,
            })
        }
        other => Err(Error::Config(format!(
            "unknown solve mode {other:?} (expected ground, nodal, or fixed-q)"
        ))),
    }
}

fn cmd_solve(cfg: &RunConfig, dir: &Path, mode: &str, k: usize, q: Option<f64>) -> Result<bool> {
    let mut point = solve_point(cfg, mode, k, q)?;
    write_atomic(&dir.join("profile.csv"), &point.profile.to_csv())?;
    point.profile_file = Some("profile.csv".into());
    write_atomic(&dir.join("solution.json"), &(branch_point_json(&point)? + "\n"))?;
    let report = equivalence_report(&point, &cfg.params)?;
    write_atomic(&dir.join("report.json"), &json_pretty(&report)?)?;
    println!("{}", report.summary());
    Ok(report.passed)
}

fn cmd_branch_scan(
    cfg: &RunConfig,
    dir: &Path,
    k: usize,
    q_lo: Option<f64>,
    q_hi: Option<f64>,
) -> Result<bool> {
    let ctrl = cfg.shooting.to_controls()?;
    let q_lo = q_lo.unwrap_or(cfg.shooting.q_lo);
    let q_hi = q_hi.unwrap_or(cfg.shooting.q_hi);
    let rows = branch_scan(&cfg.params, q_lo, q_hi, k, &ctrl)?;
    write_atomic(&dir.join("scan.csv"), &scan_to_csv(&rows))?;
    write_atomic(&dir.join("scan.json"), &json_pretty(&rows)?)?;
    let found = rows.iter().filter(|r| r.a.is_some()).count();
    println!("branch-scan: {}/{} grid points carry a zero-count-{k} branch", found, rows.len());
    Ok(true)
}

#[derive(Debug, Serialize)]
struct CrosscheckReport {
    q_shooting: f64,
    q_variational: f64,
    action_shooting: f64,
    action_variational: f64,
    sup_discrepancy: f64,
    action_discrepancy: f64,
    sup_tol: f64,
    action_tol: f64,
    passed: bool,
}

fn cmd_crosscheck(cfg: &RunConfig, dir: &Path) -> Result<bool> {
    let params = &cfg.params;
    let ctrl = cfg.shooting.to_controls()?;
    let point = ground_state_shoot(params, &ctrl)?;
    let action_shoot = point
        .action
        .ok_or_else(|| Error::InvalidParams("shooting action unavailable".into()))?;

    let grid = DiscreteState::default_grid(params.lambda)?;
    let sl = params.lambda.sqrt();
    let init = DiscreteState::new(
        grid.clone(),
        grid.radii.iter().map(|&r| (-sl * r).exp()).collect(),
        1.0,
    )?;
    let (state, report, _) = minimize_ground_state(params, &init, &cfg.variational.to_opts())?;
    // The minimizer is sign-symmetric; compare in the positive convention.
    let state = if state.q < 0.0 { state.scaled(-1.0) } else { state };

    // Shooting profile interpolated onto the variational grid, compared as
    // full solutions u = f + q𝒢.
    let shoot_on_grid = state_from_profile(&point.profile, grid.clone())?;
    let mut sup_diff = 0.0f64;
    let mut sup_u = 0.0f64;
    for i in 0..grid.len() {
        let g = green(params.d, params.lambda, grid.radii[i]);
        let us = shoot_on_grid.f[i] + point.q * g;
        let uv = state.f[i] + state.q * g;
        sup_diff = sup_diff.max((us - uv).abs());
        sup_u = sup_u.max(us.abs());
    }
    let sup_rel = sup_diff / sup_u.max(1e-300);
    let action_rel = (action_shoot - report.action).abs() / action_shoot.abs().max(1e-300);
    let passed = sup_rel <= cfg.verify.sup_tol && action_rel <= cfg.verify.action_tol;
    let out = CrosscheckReport {
        q_shooting: point.q,
        q_variational: state.q,
        action_shooting: action_shoot,
        action_variational: report.action,
        sup_discrepancy: sup_rel,
        action_discrepancy: action_rel,
        sup_tol: cfg.verify.sup_tol,
        action_tol: cfg.verify.action_tol,
        passed,
    };
    write_atomic(&dir.join("crosscheck.json"), &json_pretty(&out)?)?;
    println!(
        "crosscheck: {} sup={:.3e} action={:.3e}",
        if passed { "PASS" } else { "FAIL" },
        sup_rel,
        action_rel
    );
    Ok(passed)
}

fn cmd_probe_geometry(cfg: &RunConfig, dir: &Path) -> Result<bool> {
    let params = &cfg.params;
    let grid = DiscreteState::default_grid(params.lambda)?;
    let dirs =
        random_directions(params, &grid, cfg.variational.directions, cfg.output.seed)?;
    let report = mountain_pass_probe(params, &dirs, &cfg.variational.sphere_radii)?;
    write_atomic(&dir.join("geometry.json"), &json_pretty(&report)?)?;
    let rho_star = report
        .small_sphere_min
        .iter()
        .filter(|&&(_, s)| s > 0.0)
        .map(|&(rho, _)| rho)
        .fold(None::<f64>, |acc, rho| Some(acc.map_or(rho, |a| a.max(rho))));
    let all_negative = report.negative_radius.iter().all(|r| r.is_some());
    let passed = rho_star.is_some() && all_negative;
    println!(
        "probe-geometry: {} rho*={} escape_found={}/{} pass_level={}",
        if passed { "PASS" } else { "FAIL" },
        rho_star.map(|r| format!("{r:.3e}")).unwrap_or_else(|| "none".into()),
        report.negative_radius.iter().filter(|r| r.is_some()).count(),
        report.negative_radius.len(),
        report.pass_level.map(|l| format!("{l:.6e}")).unwrap_or_else(|| "none".into()),
    );
    Ok(passed)
}

/// Parse a profile CSV written by `to_csv` (header r,u,du,f).
pub fn profile_from_csv(text: &str, params: &Params, q: f64) -> Result<RadialProfile> {
    let mut radii = Vec::new();
    let mut u = Vec::new();
    let mut du = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if lineno == 0 {
            if line.trim() != "r,u,du,f" {
                return Err(Error::Config(format!(
                    "profile CSV header must be r,u,du,f, got {line:?}"
                )));
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 {
            return Err(Error::Config(format!("line {}: expected 4 fields", lineno + 1)));
        }
        let parse = |s: &str| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| Error::Config(format!("line {}: bad number {s:?}", lineno + 1)))
        };
        radii.push(parse(fields[0])?);
        u.push(parse(fields[1])?);
        du.push(parse(fields[2])?);
    }
    if radii.len() < 8 {
        return Err(Error::Config("profile CSV has fewer than 8 rows".into()));
    }
    if radii.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Config("profile radii must be strictly increasing".into()));
    }
    Ok(RadialProfile { grid: RadialGrid { radii }, u, du, q, meta: *params })
}

fn cmd_verify(cfg: &RunConfig, dir: &Path, profile_path: &Path, q: f64) -> Result<bool> {
    let text = fs::read_to_string(profile_path)?;
    let profile = profile_from_csv(&text, &cfg.params, q)?;
    let zero_count = profile.u.windows(2).filter(|w| w[0] * w[1] < 0.0).count();
    // A stored profile carries no matching data: the α-relation is skipped
    // and only profile-intrinsic checks run.
    let point = BranchPoint {
        q,
        a: f64::NAN,
        f0: None,
        zero_count,
        alpha: AlphaLabel::Unconstrained,
        action: None,
        residuals: Residuals { ode: f64::NAN, relation: f64::NAN, decay_margin: f64::NAN },
        certified: false,
        profile,
        profile_file: Some(profile_path.to_string_lossy().into_owned()),
    };
    let report = equivalence_report(&point, &cfg.params)?;
    write_atomic(&dir.join("verify.json"), &json_pretty(&report)?)?;
    println!("{}", report.summary());
    Ok(report.passed)
}

/// Run a parsed command line. Returns whether all enabled checks passed.
pub fn run(cli: &Cli) -> Result<bool> {
    let cfg = resolve_config(cli)?;
    let dir = PathBuf::from(&cfg.output.dir);
    fs::create_dir_all(&dir)?;
    stamp_run(&dir, &cfg)?;
    match &cli.cmd {
        Cmd::Spectrum => cmd_spectrum(&cfg, &dir),
        Cmd::Solve { mode, k, q } => cmd_solve(&cfg, &dir, mode, *k, *q),
        Cmd::BranchScan { k, q_lo, q_hi } => cmd_branch_scan(&cfg, &dir, *k, *q_lo, *q_hi),
        Cmd::Crosscheck => cmd_crosscheck(&cfg, &dir),
        Cmd::ProbeGeometry => cmd_probe_geometry(&cfg, &dir),
        Cmd::Verify { profile, q } => cmd_verify(&cfg, &dir, profile, *q),
    }
}

/// Process entry point: exit 0 only when all enabled checks pass.
pub fn main_exit_code() -> i32 {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_is_valid() {
        let cfg = RunConfig::default();
        assert!(cfg.params.validate().is_ok());
        assert!(cfg.shooting.to_controls().is_ok());
    }

    #[test]
    fn toml_roundtrip_overrides() {
        let text = r#"
[params]
d = 3
sigma = 1.0
p = 2.5
lambda = 1.5
alpha = 0.25

[shooting]
resolution = 64
max_k = 2

[output]
dir = "runs/x"
seed = 7
"#;
        let cfg = RunConfig::from_toml(text).unwrap();
        assert_eq!(cfg.params.d, 3);
        assert_eq!(cfg.params.p, 2.5);
        assert_eq!(cfg.params.alpha, Alpha::Finite(0.25));
        assert_eq!(cfg.shooting.resolution, 64);
        assert_eq!(cfg.shooting.max_k, 2);
        // Untouched sections keep their defaults.
        assert_eq!(cfg.shooting.q_per_decade, ShootingCfg::default().q_per_decade);
        assert_eq!(cfg.output.dir, "runs/x");
        assert_eq!(cfg.output.seed, 7);
        // Round trip through the resolved-config writer.
        let out = toml::to_string_pretty(&cfg).unwrap();
        let back = RunConfig::from_toml(&out).unwrap();
        assert_eq!(back.params, cfg.params);
        assert_eq!(back.output.seed, cfg.output.seed);
    }

    #[test]
    fn free_alpha_accepted_in_config() {
        let cfg = RunConfig::from_toml("[params]\nd = 2\nsigma = 1.0\np = 3.0\nlambda = 1.0\nalpha = \"free\"\n").unwrap();
        assert_eq!(cfg.params.alpha, Alpha::Free);
    }

    #[test]
    fn unknown_key_rejected_with_message() {
        let err = RunConfig::from_toml("[shooting]\nresolutio = 3\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("resolutio"), "message was: {msg}");
    }

    #[test]
    fn mismatched_bracket_halves_rejected() {
        let cfg = RunConfig::from_toml("[shooting]\nbracket_lo = -1.0\n").unwrap();
        assert!(cfg.shooting.to_controls().is_err());
    }

    #[test]
    fn profile_csv_roundtrip() {
        let params = default_params();
        let grid = RadialGrid::graded(1e-5, 5.0, 1.1, 0.1).unwrap();
        let u: Vec<f64> = grid.radii.iter().map(|&r| green(2, 2.0, r)).collect();
        let du: Vec<f64> =
            grid.radii.iter().map(|&r| crate::greens::green_deriv(2, 2.0, r)).collect();
        let profile = RadialProfile { grid, u, du, q: 1.0, meta: params };
        let text = profile.to_csv();
        let back = profile_from_csv(&text, &params, 1.0).unwrap();
        assert_eq!(back.grid.len(), profile.grid.len());
        for i in 0..back.grid.len() {
            assert!((back.u[i] - profile.u[i]).abs() <= 1e-16 * profile.u[i].abs().max(1.0));
        }
    }

    #[test]
    fn alpha_flag_parsing() {
        assert_eq!(parse_alpha("free").unwrap(), Alpha::Free);
        assert_eq!(parse_alpha("-0.5").unwrap(), Alpha::Finite(-0.5));
        assert!(parse_alpha("abc").is_err());
    }
}
