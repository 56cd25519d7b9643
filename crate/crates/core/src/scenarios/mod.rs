//! Named experiments driven by a flat JSON configuration.
//!
//! Each run writes its data files into an output directory together with a
//! `summary.json` holding the echoed inputs, monitor extrema and the
//! pass/fail state of the scenario's checks.

mod config;
mod oracle_diff;
mod transform;
mod tunneling;

use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::Serialize;
use serde_json::{json, Value};

pub use config::{MethodName, Range, ScenarioConfig, ScenarioName};
pub use oracle_diff::{oracle_comparison, second_moment_deviation, OracleComparison, OracleSetup};
pub use transform::{transform_csv, TransformTarget};
pub use tunneling::{
    cubic_barrier, effective_saddle, tunneling_initial_state, tunneling_run, tunneling_sweep,
    write_sweep_csv, Classification, SweepCell, TunnelingRun, TunnelingSetup, CUBIC_ENERGY,
    CUBIC_LAMBDA, CUBIC_T_MAX,
};

use crate::adiabatic::{compare_driven, AdiabaticModel, AdiabaticOrder};
use crate::casimir_darboux::{
    free_particle_s, lift_to_plane, to_darboux, u1, u1_spherical_limit, AngleField, PlaneState,
};
use crate::dynamics::{
    fmt_num, init_gaussian_with_casimir, integrate, solve, Admissibility, GaussianCasimir,
    MomentState, Trajectory,
};
use crate::effective_hamiltonian::{build_heff_shared, equations_of_motion, Potential, PolynomialPotential};
use crate::error::{Error, Result};
use crate::moment_algebra::build_bracket_table;
use crate::schrodinger_oracle::Grid;

/// One pass/fail criterion of a scenario.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub value: f64,
    pub threshold: f64,
}

impl Check {
    /// Passes when `value ≤ threshold`.
    pub fn at_most(name: &str, value: f64, threshold: f64) -> Self {
        Check {
            name: name.into(),
            passed: value <= threshold,
            value,
            threshold,
        }
    }

    /// Passes when `flag` holds; recorded as 1/0.
    pub fn holds(name: &str, flag: bool) -> Self {
        Check {
            name: name.into(),
            passed: flag,
            value: if flag { 1.0 } else { 0.0 },
            threshold: 1.0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Outcome {
    pub scenario: ScenarioName,
    pub summary: Value,
    pub checks: Vec<Check>,
    pub artifacts: Vec<PathBuf>,
}

impl Outcome {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// Largest distance of `x(t)` from its least-squares line.
pub fn linear_fit_residual(t: &[f64], x: &[f64]) -> f64 {
    let n = t.len() as f64;
    if t.len() < 2 {
        return 0.0;
    }
    let tm = t.iter().sum::<f64>() / n;
    let xm = x.iter().sum::<f64>() / n;
    let stt: f64 = t.iter().map(|a| (a - tm) * (a - tm)).sum();
    let stx: f64 = t.iter().zip(x).map(|(a, b)| (a - tm) * (b - xm)).sum();
    let slope = stx / stt;
    t.iter()
        .zip(x)
        .map(|(a, b)| (b - xm - slope * (a - tm)).abs())
        .fold(0.0, f64::max)
}

/// Drop unset fields from the echoed configuration.
fn echo(cfg: &ScenarioConfig) -> Result<Value> {
    let mut v = serde_json::to_value(cfg)?;
    if let Value::Object(map) = &mut v {
        map.retain(|_, x| !x.is_null());
    }
    Ok(v)
}

fn write_file(dir: &Path, name: &str, f: impl FnOnce(&mut BufWriter<fs::File>) -> Result<()>) -> Result<PathBuf> {
    let path = dir.join(name);
    let mut w = BufWriter::new(fs::File::create(&path)?);
    f(&mut w)?;
    use std::io::Write;
    w.flush()?;
    Ok(path)
}

fn monitor_summary(t: &Trajectory) -> Value {
    json!({
        "casimir_drift": t.casimir_drift(),
        "energy_drift": t.energy_drift(),
        "margin_min": t.margin_min(),
    })
}

struct Resolved {
    potential: Arc<dyn Potential>,
    mass: f64,
    hbar: f64,
    order: u32,
}

fn resolve_potential(cfg: &ScenarioConfig, default: impl FnOnce(f64) -> Result<PolynomialPotential>) -> Result<Resolved> {
    let mass = cfg.mass_or_default();
    let pot = match &cfg.potential {
        Some(c) => PolynomialPotential::new(c.clone(), mass)
            .map_err(|e| Error::config("potential", e.to_string()))?,
        None => default(mass)?,
    };
    Ok(Resolved {
        potential: Arc::new(pot),
        mass,
        hbar: cfg.hbar_or_default(),
        order: cfg.order.unwrap_or(2),
    })
}

fn initial_casimir(cfg: &ScenarioConfig, hbar: f64) -> f64 {
    let classical = cfg.classical.unwrap_or(false);
    cfg.casimir.unwrap_or(if classical {
        0.0
    } else {
        cfg.gaussian_casimir.unwrap_or_default().value(hbar)
    })
}

fn initial_state(cfg: &ScenarioConfig, r: &Resolved, q0: f64, sigma: f64) -> Result<MomentState> {
    let c = initial_casimir(cfg, r.hbar);
    let mode = if cfg.classical.unwrap_or(false) {
        Admissibility::Classical
    } else {
        Admissibility::Quantum
    };
    let s = init_gaussian_with_casimir(
        q0,
        cfg.p0.unwrap_or(0.0),
        sigma,
        cfg.p_s0.unwrap_or(0.0),
        r.hbar,
        r.order,
        c,
    )?
    .with_mode(mode);
    if s.margin() < -1e-12 {
        return Err(Error::config(
            "casimir",
            format!("C = {c} violates the uncertainty floor; set \"classical\": true to allow it"),
        ));
    }
    Ok(s)
}

/// Run a single scenario, writing artifacts into `out_dir`.
pub fn run(cfg: &ScenarioConfig, out_dir: &Path) -> Result<Outcome> {
    cfg.validate()?;
    fs::create_dir_all(out_dir)?;
    let name = cfg.scenario()?;
    let (results, checks, mut artifacts) = match name {
        ScenarioName::Free => run_free(cfg, out_dir)?,
        ScenarioName::Harmonic => run_harmonic(cfg, out_dir)?,
        ScenarioName::CubicTunneling => run_cubic(cfg, out_dir)?,
        ScenarioName::TwoDofLimit => run_two_dof(cfg)?,
        ScenarioName::AdiabaticCompare => run_adiabatic(cfg, out_dir)?,
        ScenarioName::BracketsDump => run_brackets(cfg, out_dir)?,
        ScenarioName::OracleDiff => run_oracle(cfg, out_dir)?,
    };
    finish(name, cfg, results, checks, &mut artifacts, out_dir)
}

fn finish(
    name: ScenarioName,
    cfg: &ScenarioConfig,
    results: Value,
    checks: Vec<Check>,
    artifacts: &mut Vec<PathBuf>,
    out_dir: &Path,
) -> Result<Outcome> {
    let passed = checks.iter().all(|c| c.passed);
    let summary = json!({
        "scenario": name.as_str(),
        "config": echo(cfg)?,
        "results": results,
        "checks": checks,
        "passed": passed,
    });
    let path = out_dir.join("summary.json");
    fs::write(&path, serde_json::to_string_pretty(&summary)? + "\n")?;
    artifacts.push(path);
    Ok(Outcome {
        scenario: name,
        summary,
        checks,
        artifacts: std::mem::take(artifacts),
    })
}

type Parts = (Value, Vec<Check>, Vec<PathBuf>);

fn run_free(cfg: &ScenarioConfig, out: &Path) -> Result<Parts> {
    let r = resolve_potential(cfg, PolynomialPotential::free)?;
    let sigma = cfg.sigma.unwrap_or(1.0);
    let state = initial_state(cfg, &r, cfg.q0.unwrap_or(0.0), sigma)?;
    let t_end = cfg.t_end.unwrap_or(10.0);
    let h = build_heff_shared(r.potential.clone(), r.order)?;
    let table = build_bracket_table(r.order, 1)?;
    let field = equations_of_motion(&h, &table)?.with_hbar(r.hbar);
    let icfg = cfg.integrator()?;
    let traj = integrate(&field, &state, (0.0, t_end), &icfg)?;

    // exact spreading; reduces to free_particle_s when p_s0 = 0
    let c = state.casimir();
    let p_s0 = cfg.p_s0.unwrap_or(0.0);
    let mut st_dev: f64 = 0.0;
    for (t, s) in traj.times.iter().zip(&traj.states) {
        let exact = if p_s0 == 0.0 {
            free_particle_s(*t, sigma, c, r.mass)
        } else {
            ((sigma + p_s0 * t / r.mass).powi(2) + c * t * t / (r.mass * r.mass * sigma * sigma)).sqrt()
        };
        st_dev = st_dev.max((s.moments()[0].sqrt() - exact).abs() / exact);
    }

    // lifted plane trajectory with the spurious angle integrated alongside
    let angle = AngleField { inner: &field };
    let mut y0 = state.to_vec();
    y0.push(0.0);
    let sol = solve(&angle, &y0, (0.0, t_end), &icfg, None)?;
    let mut plane: Vec<PlaneState> = Vec::with_capacity(sol.states.len());
    for y in &sol.states {
        let d = to_darboux(y[2], y[3], y[4])?;
        plane.push(lift_to_plane(&d, y[y.len() - 1])?);
    }
    let xs: Vec<f64> = plane.iter().map(|p| p.x).collect();
    let ys: Vec<f64> = plane.iter().map(|p| p.y).collect();
    let line_residual = linear_fit_residual(&sol.times, &xs).max(linear_fit_residual(&sol.times, &ys));
    let p_phi_drift = plane
        .iter()
        .map(|p| (p.angular_momentum() - c.sqrt()).abs())
        .fold(0.0, f64::max);

    let mut artifacts = vec![write_file(out, "trajectory.csv", |w| traj.write_csv(w))?];
    artifacts.push(write_file(out, "plane.csv", |w| {
        use std::io::Write;
        writeln!(w, "t,X,Y,p_X,p_Y,p_phi")?;
        for (t, p) in sol.times.iter().zip(&plane) {
            let row = [*t, p.x, p.y, p.p_x, p.p_y, p.angular_momentum()].map(fmt_num);
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    })?);
    let s_initial = state.moments()[0].sqrt();
    let s_final = traj.final_state().moments()[0].sqrt();
    let results = json!({
        "monitors": monitor_summary(&traj),
        "casimir": c,
        "max_relative_deviation_st": st_dev,
        "s_initial": s_initial,
        "s_final": s_final,
        "plane_line_residual": line_residual,
        "p_phi_drift": p_phi_drift,
        "steps": traj.steps,
    });
    let checks = vec![
        Check::at_most("spreading_matches_st", st_dev, 1e-8),
        Check::at_most("casimir_drift", traj.casimir_drift(), 1e-9),
        Check::at_most("energy_drift", traj.energy_drift(), 1e-8),
        Check::at_most("plane_line_residual", line_residual, 1e-8),
        Check::at_most("p_phi_conserved", p_phi_drift, 1e-9),
    ];
    Ok((results, checks, artifacts))
}

fn run_harmonic(cfg: &ScenarioConfig, out: &Path) -> Result<Parts> {
    let omega = cfg.omega.unwrap_or(1.0);
    let r = resolve_potential(cfg, |m| PolynomialPotential::harmonic(m, omega))?;
    let state = initial_state(cfg, &r, cfg.q0.unwrap_or(1.0), cfg.sigma.unwrap_or(1.0))?;
    let period = std::f64::consts::PI / omega;
    let t_end = cfg.t_end.unwrap_or(std::f64::consts::TAU / omega);
    let h = build_heff_shared(r.potential.clone(), r.order)?;
    let field = equations_of_motion(&h, &*build_bracket_table(r.order, 1)?)?.with_hbar(r.hbar);
    let icfg = cfg.integrator()?;
    let traj = integrate(&field, &state, (0.0, t_end), &icfg)?;
    let one_period = integrate(&field, &state, (0.0, period), &icfg.with_samples(period))?;
    let v0 = state.moments()[0];
    let period_dev = (one_period.final_state().moments()[0] - v0).abs() / v0;
    let artifacts = vec![write_file(out, "trajectory.csv", |w| traj.write_csv(w))?];
    let results = json!({
        "monitors": monitor_summary(&traj),
        "variance_period": period,
        "variance_period_deviation": period_dev,
        "steps": traj.steps,
    });
    let checks = vec![
        Check::at_most("casimir_drift", traj.casimir_drift(), 1e-9),
        Check::at_most("energy_drift", traj.energy_drift(), 1e-8),
        Check::at_most("variance_period", period_dev, 1e-8),
    ];
    Ok((results, checks, artifacts))
}

fn tunneling_setup(cfg: &ScenarioConfig) -> Result<TunnelingSetup> {
    if cfg.potential.is_some() {
        return Err(Error::config("potential", "cubic-tunneling is parametrized by lambda"));
    }
    let hbar = cfg.hbar_or_default();
    let c = initial_casimir(cfg, hbar);
    if !(c > 0.0) {
        return Err(Error::config("casimir", "the tunneling setup needs C > 0"));
    }
    let mut setup = TunnelingSetup::new(cfg.lambda.unwrap_or(CUBIC_LAMBDA), cfg.mass_or_default(), hbar, c);
    if let Some(t) = cfg.t_end {
        setup.t_max = t;
    }
    if cfg.order.is_some_and(|n| n != 2) {
        return Err(Error::config("order", "cubic-tunneling runs at second order"));
    }
    Ok(setup)
}

fn barrier_summary(setup: &TunnelingSetup) -> Result<Value> {
    let (q_b, v_b) = cubic_barrier(setup.lambda);
    let (q_s, u_s) = effective_saddle(setup.lambda, setup.mass, setup.casimir)?;
    Ok(json!({
        "barrier_position": q_b,
        "barrier_height": v_b,
        "effective_saddle_position": q_s,
        "effective_saddle_height": u_s,
    }))
}

fn run_cubic(cfg: &ScenarioConfig, out: &Path) -> Result<Parts> {
    let setup = tunneling_setup(cfg)?;
    let energy = cfg.energy.unwrap_or(CUBIC_ENERGY);
    let q0 = cfg.q0.unwrap_or(0.0);
    let run = tunneling_run(&setup, q0, energy, &cfg.integrator()?)?;
    let artifacts = vec![write_file(out, "trajectory.csv", |w| run.trajectory.write_csv(w))?];
    let (_, v_b) = cubic_barrier(setup.lambda);
    let results = json!({
        "monitors": monitor_summary(&run.trajectory),
        "barrier": barrier_summary(&setup)?,
        "energy": energy,
        "below_classical_barrier": energy < v_b,
        "classification": run.classification.as_str(),
        "t_cross": run.t_cross,
    });
    let checks = vec![
        Check::at_most("energy_drift", run.trajectory.energy_drift(), 1e-8),
        Check::at_most("casimir_drift", run.trajectory.casimir_drift(), 1e-8),
    ];
    Ok((results, checks, artifacts))
}

/// Classification grid over `sweep_q0 × sweep_energy` for the cubic barrier.
pub fn sweep(cfg: &ScenarioConfig, out_dir: &Path) -> Result<Outcome> {
    cfg.validate()?;
    let name = cfg.scenario()?;
    if name != ScenarioName::CubicTunneling {
        return Err(Error::config("scenario", "sweeps are defined for cubic-tunneling"));
    }
    let q0s = cfg
        .sweep_q0
        .ok_or_else(|| Error::config("sweep_q0", "missing sweep range"))?
        .values();
    let energies = cfg
        .sweep_energy
        .ok_or_else(|| Error::config("sweep_energy", "missing sweep range"))?
        .values();
    let setup = tunneling_setup(cfg)?;
    fs::create_dir_all(out_dir)?;
    let cells = tunneling_sweep(&setup, &q0s, &energies, &cfg.integrator()?);
    let mut artifacts = vec![write_file(out_dir, "sweep.csv", |w| write_sweep_csv(&cells, w))?];
    let count = |c: Classification| cells.iter().filter(|x| x.classification == c).count();
    let max_drift = cells.iter().filter_map(|c| c.energy_drift).fold(0.0, f64::max);
    let (bypassed, trapped, errors) = (
        count(Classification::Bypassed),
        count(Classification::Trapped),
        count(Classification::Error),
    );
    let results = json!({
        "barrier": barrier_summary(&setup)?,
        "cells": cells.len(),
        "bypassed": bypassed,
        "trapped": trapped,
        "errors": errors,
        "max_energy_drift": max_drift,
    });
    let checks = vec![
        Check::holds("trapped_region_nonempty", trapped > 0),
        Check::at_most("energy_drift", max_drift, 1e-8),
    ];
    finish(name, cfg, results, checks, &mut artifacts, out_dir)
}

#[derive(Clone, Debug, Serialize)]
pub struct LimitRow {
    pub epsilon: f64,
    pub deviation: Option<f64>,
    /// `deviation / ε`.
    pub k: Option<f64>,
    pub error: Option<String>,
}

/// Ratio `max K / min K` above which `K` is not considered stable.
pub const LIMIT_K_SPREAD: f64 = 2.0;

/// `|U₁(α, ε p_α, β, p_β, C₁, ε⁴C₂) − (p_β² + C₁/(2 sin²β))|` per `ε`.
pub fn spherical_limit_study(
    alpha: f64,
    p_alpha: f64,
    beta: f64,
    p_beta: f64,
    c1: f64,
    c2: f64,
    epsilons: &[f64],
) -> Vec<LimitRow> {
    epsilons
        .iter()
        .map(|&eps| {
            let limit = u1_spherical_limit(beta, p_beta, c1);
            match u1(alpha, eps * p_alpha, beta, p_beta, c1, eps.powi(4) * c2) {
                Ok(u) => {
                    let d = (u - limit).abs();
                    LimitRow {
                        epsilon: eps,
                        deviation: Some(d),
                        k: Some(d / eps),
                        error: None,
                    }
                }
                Err(e) => LimitRow {
                    epsilon: eps,
                    deviation: None,
                    k: None,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect()
}

/// `max K / min K` over the rows, infinite if any row failed.
pub fn k_spread(rows: &[LimitRow]) -> f64 {
    let ks: Vec<f64> = rows.iter().filter_map(|r| r.k).collect();
    if ks.len() != rows.len() || ks.is_empty() {
        return f64::INFINITY;
    }
    let max = ks.iter().cloned().fold(0.0, f64::max);
    let min = ks.iter().cloned().fold(f64::INFINITY, f64::min);
    if min > 0.0 {
        max / min
    } else {
        f64::INFINITY
    }
}

fn run_two_dof(cfg: &ScenarioConfig) -> Result<Parts> {
    let (alpha, p_alpha) = (cfg.alpha.unwrap_or(0.4), cfg.p_alpha.unwrap_or(0.3));
    let (beta, p_beta) = (cfg.beta.unwrap_or(std::f64::consts::FRAC_PI_3), cfg.p_beta.unwrap_or(1.0));
    let (c1, c2) = (cfg.c1.unwrap_or(2.0), cfg.c2.unwrap_or(0.5));
    let eps = cfg.epsilons.clone().unwrap_or_else(|| vec![1e-1, 1e-2, 1e-3]);
    if !(beta > 0.0 && beta < std::f64::consts::PI) {
        return Err(Error::config("beta", "must lie in (0, π)"));
    }
    let rows = spherical_limit_study(alpha, p_alpha, beta, p_beta, c1, c2, &eps);
    let spread = k_spread(&rows);
    let results = json!({
        "limit": u1_spherical_limit(beta, p_beta, c1),
        "rows": rows,
        "k_spread": if spread.is_finite() { json!(spread) } else { Value::Null },
    });
    let checks = vec![Check::at_most("k_stable", spread, LIMIT_K_SPREAD)];
    Ok((results, checks, Vec::new()))
}

/// `τ` values spanning one decade.
pub const ADIABATIC_TAUS: [f64; 3] = [10.0, 31.622_776_601_683_793, 100.0];

fn run_adiabatic(cfg: &ScenarioConfig, out: &Path) -> Result<Parts> {
    let eps = cfg.epsilon.unwrap_or(0.1);
    let omega = cfg.omega.unwrap_or(1.0);
    let r = resolve_potential(cfg, |m| PolynomialPotential::quartic(m, omega, eps))?;
    let c = initial_casimir(cfg, r.hbar);
    let model = AdiabaticModel::new(r.potential.clone(), c, AdiabaticOrder::Zero)
        .map_err(|e| Error::config("casimir", e.to_string()))?;
    let taus = cfg.tau.clone().unwrap_or_else(|| ADIABATIC_TAUS.to_vec());
    let force = cfg.force.unwrap_or(1.0);
    let q0 = cfg.q0.unwrap_or(0.0);
    let icfg = cfg.integrator()?;
    let mut artifacts = Vec::new();
    let mut rows = Vec::new();
    let mut checks = Vec::new();
    for (i, &tau) in taus.iter().enumerate() {
        let cmp = compare_driven(&model, q0, force, tau, r.hbar, &icfg)?;
        artifacts.push(write_file(out, &format!("adiabatic_{i}.csv"), |w| cmp.write_csv(w))?);
        checks.push(Check {
            name: format!("order1_improves_s_tau_{i}"),
            passed: cmp.max_s_error_order1 < cmp.max_s_error_order0,
            value: cmp.max_s_error_order1,
            threshold: cmp.max_s_error_order0,
        });
        rows.push(json!({
            "tau": tau,
            "max_q_deviation": cmp.max_q_deviation,
            "max_s_error_order0": cmp.max_s_error_order0,
            "max_s_error_order1": cmp.max_s_error_order1,
        }));
    }
    let mut order: Vec<(f64, f64)> = rows
        .iter()
        .map(|r| (r["tau"].as_f64().unwrap_or(0.0), r["max_q_deviation"].as_f64().unwrap_or(0.0)))
        .collect();
    order.sort_by(|a, b| a.0.total_cmp(&b.0));
    let monotone = order.windows(2).all(|w| w[1].1 < w[0].1);
    checks.insert(0, Check::holds("q_deviation_decreases_with_tau", monotone));
    let results = json!({ "casimir": c, "force": force, "runs": rows });
    Ok((results, checks, artifacts))
}

fn run_brackets(cfg: &ScenarioConfig, out: &Path) -> Result<Parts> {
    let order = cfg.order.unwrap_or(4);
    let pairs = cfg.pairs.unwrap_or(1);
    let table = build_bracket_table(order, pairs)?;
    let path = out.join("brackets.json");
    fs::write(&path, serde_json::to_string_pretty(&table.to_json())? + "\n")?;
    let mismatches = table.mismatches().len();
    let results = json!({
        "order": order,
        "pairs": pairs,
        "entries": table.entries().count(),
        "mismatches": mismatches,
    });
    let checks = vec![Check::at_most("oracle_mismatches", mismatches as f64, 0.0)];
    Ok((results, checks, vec![path]))
}

/// Named `oracle` presets: `harmonic` and `free`.
pub fn oracle_preset(name: &str) -> Result<ScenarioConfig> {
    let mut cfg = ScenarioConfig::named(ScenarioName::OracleDiff);
    match name {
        "harmonic" => {}
        "free" => {
            cfg.potential = Some(vec![0.0]);
            cfg.q0 = Some(0.0);
            cfg.grid_min = Some(-30.0);
            cfg.grid_max = Some(30.0);
            cfg.t_end = Some(5.0);
        }
        other => {
            return Err(Error::config(
                "scenario",
                format!("unknown oracle scenario {other:?}, expected harmonic or free"),
            ))
        }
    }
    Ok(cfg)
}

fn run_oracle(cfg: &ScenarioConfig, out: &Path) -> Result<Parts> {
    let omega = cfg.omega.unwrap_or(1.0);
    let r = resolve_potential(cfg, |m| PolynomialPotential::harmonic(m, omega))?;
    if r.order != 2 {
        return Err(Error::config("order", "oracle comparison runs at second order"));
    }
    if cfg.casimir.is_some() || cfg.classical == Some(true) || cfg.gaussian_casimir == Some(GaussianCasimir::HbarHalf) {
        return Err(Error::config("casimir", "wavefunctions carry C = ħ²/4"));
    }
    let quadratic = r.potential.degree().is_some_and(|d| d <= 2);
    let free = r.potential.coefficients().is_some_and(|c| c.iter().skip(1).all(|x| *x == 0.0));
    let dt = cfg.dt.unwrap_or(1e-3);
    let sample = cfg.sample_interval.unwrap_or(0.1);
    let setup = OracleSetup {
        potential: r.potential.clone(),
        q0: cfg.q0.unwrap_or(0.5),
        p0: cfg.p0.unwrap_or(0.0),
        sigma: cfg.sigma.unwrap_or(1.0),
        p_s0: cfg.p_s0.unwrap_or(0.0),
        hbar: r.hbar,
        grid: Grid::new(
            cfg.grid_min.unwrap_or(-8.0),
            cfg.grid_max.unwrap_or(8.0),
            cfg.grid_points.unwrap_or(4096),
        )?,
        dt,
        t_end: cfg.t_end.unwrap_or(std::f64::consts::TAU),
        sample_every: ((sample / dt).round() as usize).max(1),
    };
    let cmp = oracle_comparison(&setup)?;
    let oracle_traj = cmp.oracle_trajectory(r.potential.clone())?;
    let h = build_heff_shared(r.potential.clone(), 2)?;
    let moment_traj = Trajectory {
        times: cmp.times.clone(),
        states: cmp.moments.clone(),
        monitors: cmp
            .moments
            .iter()
            .map(|s| crate::dynamics::monitors(s, &h))
            .collect::<Result<Vec<_>>>()?,
        stopped: false,
        steps: 0,
    };
    let artifacts = vec![
        write_file(out, "oracle.csv", |w| oracle_traj.write_csv(w))?,
        write_file(out, "trajectory.csv", |w| moment_traj.write_csv(w))?,
    ];
    let mut checks = vec![
        Check::at_most("norm_drift", cmp.report.max_norm_drift, 1e-10),
        Check::holds("support_clear_of_walls", !cmp.report.boundary_contact),
    ];
    if quadratic {
        checks.push(Check::at_most("second_moments_match", cmp.max_deviation(), 1e-4));
    }
    let mut st_dev = Value::Null;
    if free && setup.p_s0 == 0.0 {
        let c = 0.25 * r.hbar * r.hbar;
        let d = cmp
            .times
            .iter()
            .zip(&cmp.oracle)
            .map(|(t, s)| {
                let exact = free_particle_s(*t, setup.sigma, c, r.mass);
                (s.moments()[0].sqrt() - exact).abs() / exact
            })
            .fold(0.0, f64::max);
        checks.push(Check::at_most("spreading_matches_st", d, 1e-4));
        st_dev = json!(d);
    }
    let results = json!({
        "monitors": monitor_summary(&moment_traj),
        "oracle_monitors": monitor_summary(&oracle_traj),
        "max_relative_deviation": cmp.max_relative_deviation,
        "max_imaginary_residue": cmp.max_imaginary_residue,
        "max_relative_deviation_st": st_dev,
        "evolution": cmp.report,
    });
    Ok((results, checks, artifacts))
}
