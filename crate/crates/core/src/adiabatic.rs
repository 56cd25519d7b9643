//! Adiabatic elimination of the fluctuation variable.
//!
//! At second order and in Casimir–Darboux variables the effective
//! Hamiltonian is `p²/2m + p_s²/2m + V(q) + ½V″(q)s² + C/(2ms²)`. When `s`
//! follows its equilibrium `s₀(q)` with `∂H/∂s = 0`, the remaining dynamics
//! of `q` sees the potential `V + √(C V″/m)` and the mass
//! `m(1 + s₀′(q)²)`. The first correction `δs` comes from linearizing
//! `ṗ_s = −∂H/∂s` around `s₀` and keeping the forcing `m s̈₀`:
//! `δs = −m s̈₀ / (V″ + 3C/(m s₀⁴))`.

use std::sync::Arc;

use serde::Serialize;

use crate::dynamics::{init_gaussian, solve, GaussianCasimir, IntegratorConfig, MomentState, VectorField};
use crate::effective_hamiltonian::{
    build_heff_shared, equations_of_motion, Drive, Potential,
};
use crate::error::{Error, Result};
use crate::moment_algebra::build_bracket_table;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum AdiabaticOrder {
    Zero,
    One,
}

#[derive(Clone, Debug)]
pub struct AdiabaticModel {
    pub potential: Arc<dyn Potential>,
    pub casimir: f64,
    pub order: AdiabaticOrder,
}

impl AdiabaticModel {
    pub fn new(potential: Arc<dyn Potential>, casimir: f64, order: AdiabaticOrder) -> Result<Self> {
        if !(casimir > 0.0 && casimir.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "Casimir must be positive, got {casimir}"
            )));
        }
        Ok(AdiabaticModel {
            potential,
            casimir,
            order,
        })
    }

    pub fn mass(&self) -> f64 {
        self.potential.mass()
    }

    fn curvature(&self, q: f64) -> Result<f64> {
        let v2 = self.potential.derivative(2, q);
        if !(v2 > 0.0) {
            return Err(Error::NoEquilibrium { q, curvature: v2 });
        }
        Ok(v2)
    }

    /// `(s₀, s₀′, s₀″)` at `q`.
    pub fn s0_derivatives(&self, q: f64) -> Result<(f64, f64, f64)> {
        let v2 = self.curvature(q)?;
        let v3 = self.potential.derivative(3, q);
        let v4 = self.potential.derivative(4, q);
        let k = (self.casimir / self.mass()).powf(0.25);
        let s0 = k * v2.powf(-0.25);
        let d1 = -0.25 * k * v2.powf(-1.25) * v3;
        let d2 = k * (5.0 / 16.0 * v2.powf(-2.25) * v3 * v3 - 0.25 * v2.powf(-1.25) * v4);
        Ok((s0, d1, d2))
    }

    /// `V(q) + √(C V″(q)/m)`.
    pub fn adiabatic_potential(&self, q: f64) -> Result<f64> {
        let v2 = self.curvature(q)?;
        Ok(self.potential.value(q) + (self.casimir * v2 / self.mass()).sqrt())
    }

    fn adiabatic_force(&self, q: f64) -> Result<f64> {
        let v2 = self.curvature(q)?;
        let v3 = self.potential.derivative(3, q);
        let root = (self.casimir / self.mass()).sqrt();
        Ok(-(self.potential.derivative(1, q) + 0.5 * root * v3 / v2.sqrt()))
    }
}

/// `s₀(q) = (C/(m V″(q)))^{1/4}`.
pub fn s0_of_q(model: &AdiabaticModel, q: f64) -> Result<f64> {
    model.s0_derivatives(q).map(|d| d.0)
}

/// `½ m q̇² (1 + s₀′²) + V(q) + √(C V″/m)`.
pub fn adiabatic_energy(model: &AdiabaticModel, q: f64, qdot: f64) -> Result<f64> {
    let (_, d1, _) = model.s0_derivatives(q)?;
    Ok(0.5 * model.mass() * qdot * qdot * (1.0 + d1 * d1) + model.adiabatic_potential(q)?)
}

/// `δs = −m s̈₀ / (V″ + 3C/(m s₀⁴))` with `s̈₀ = s₀″ q̇² + s₀′ q̈`.
pub fn delta_s_correction(model: &AdiabaticModel, q: f64, qdot: f64, qddot: f64) -> Result<f64> {
    if model.order != AdiabaticOrder::One {
        return Err(Error::InvalidParameter(
            "δs belongs to the first adiabatic order".into(),
        ));
    }
    let v2 = model.curvature(q)?;
    let (s0, d1, d2) = model.s0_derivatives(q)?;
    let m = model.mass();
    let s0_ddot = d2 * qdot * qdot + d1 * qddot;
    Ok(-m * s0_ddot / (v2 + 3.0 * model.casimir / (m * s0.powi(4))))
}

/// Order-zero equation `M q̈ + ½ M′ q̇² = −U′ + F(t)` on `[q, q̇]`, with
/// `M = m(1 + s₀′²)` and `U` the adiabatic potential.
pub struct AdiabaticField<'a> {
    pub model: &'a AdiabaticModel,
    pub drive: Option<Drive>,
}

impl AdiabaticField<'_> {
    pub fn acceleration(&self, t: f64, q: f64, qdot: f64) -> Result<f64> {
        let m = self.model.mass();
        let (_, d1, d2) = self.model.s0_derivatives(q)?;
        let mass = m * (1.0 + d1 * d1);
        let mass_prime = 2.0 * m * d1 * d2;
        let f = self.drive.as_ref().map_or(0.0, |d| d(t));
        Ok((self.model.adiabatic_force(q)? + f - 0.5 * mass_prime * qdot * qdot) / mass)
    }
}

impl VectorField for AdiabaticField<'_> {
    fn dim(&self) -> usize {
        2
    }

    fn eval(&self, t: f64, y: &[f64], dy: &mut [f64]) {
        dy[0] = y[1];
        dy[1] = self.acceleration(t, y[0], y[1]).unwrap_or(f64::NAN);
    }
}

/// Paired trajectories of the full second-order dynamics and the adiabatic
/// approximation under a slow drive `F(t) = F₀ sin²(πt/τ)`.
#[derive(Clone, Debug, Serialize)]
pub struct AdiabaticComparison {
    pub tau: f64,
    pub times: Vec<f64>,
    pub q_full: Vec<f64>,
    pub s_full: Vec<f64>,
    pub q_adiabatic: Vec<f64>,
    /// `s₀` along the adiabatic trajectory.
    pub s_order0: Vec<f64>,
    /// `s₀ + δs` along the adiabatic trajectory.
    pub s_order1: Vec<f64>,
    pub max_q_deviation: f64,
    pub max_s_error_order0: f64,
    pub max_s_error_order1: f64,
}

impl AdiabaticComparison {
    pub fn write_csv(&self, mut w: impl std::io::Write) -> Result<()> {
        use crate::dynamics::fmt_num;
        writeln!(w, "t,q_full,s_full,q_adiabatic,s_order0,s_order1")?;
        for i in 0..self.times.len() {
            let row = [
                self.times[i],
                self.q_full[i],
                self.s_full[i],
                self.q_adiabatic[i],
                self.s_order0[i],
                self.s_order1[i],
            ];
            let cells: Vec<String> = row.iter().map(|x| fmt_num(*x)).collect();
            writeln!(w, "{}", cells.join(","))?;
        }
        Ok(())
    }
}

/// Start at rest at `q0` with `s = s₀(q0)`, `p_s = 0`, and drive for one
/// period `τ`.
pub fn compare_driven(
    model: &AdiabaticModel,
    q0: f64,
    force: f64,
    tau: f64,
    hbar: f64,
    cfg: &IntegratorConfig,
) -> Result<AdiabaticComparison> {
    if !(tau > 0.0) {
        return Err(Error::InvalidParameter(format!("timescale must be positive, got {tau}")));
    }
    let model1 = AdiabaticModel {
        order: AdiabaticOrder::One,
        ..model.clone()
    };
    let drive: Drive = Arc::new(move |t: f64| force * (std::f64::consts::PI * t / tau).sin().powi(2));

    let h = build_heff_shared(model.potential.clone(), 2)?;
    let table = build_bracket_table(2, 1)?;
    let field = equations_of_motion(&h, &table)?
        .with_hbar(hbar)
        .with_drive(drive.clone());
    let s0 = s0_of_q(model, q0)?;
    // C/s₀² fixes Δ(p²); the Gaussian constructor with p_s0 = 0 does the rest
    let mut state: MomentState = init_gaussian(q0, 0.0, s0, 0.0, hbar, 2, GaussianCasimir::default())?;
    state.set(&crate::MomentIndex::single(0, 2), model.casimir / (s0 * s0))?;
    let full = solve(&field, &state.to_vec(), (0.0, tau), cfg, None)?;

    let ad_field = AdiabaticField {
        model,
        drive: Some(drive),
    };
    let ad = solve(&ad_field, &[q0, 0.0], (0.0, tau), cfg, None)?;
    if ad.times.len() != full.times.len() {
        return Err(Error::InvalidParameter("sample grids differ".into()));
    }

    let mut out = AdiabaticComparison {
        tau,
        times: full.times.clone(),
        q_full: Vec::new(),
        s_full: Vec::new(),
        q_adiabatic: Vec::new(),
        s_order0: Vec::new(),
        s_order1: Vec::new(),
        max_q_deviation: 0.0,
        max_s_error_order0: 0.0,
        max_s_error_order1: 0.0,
    };
    for (i, &t) in full.times.iter().enumerate() {
        let y = &full.states[i];
        let (q, qdot) = (ad.states[i][0], ad.states[i][1]);
        let qddot = ad_field.acceleration(t, q, qdot)?;
        let s_full = y[2].sqrt();
        let s0 = s0_of_q(model, q)?;
        let s1 = s0 + delta_s_correction(&model1, q, qdot, qddot)?;
        out.max_q_deviation = out.max_q_deviation.max((y[0] - q).abs());
        out.max_s_error_order0 = out.max_s_error_order0.max((s_full - s0).abs());
        out.max_s_error_order1 = out.max_s_error_order1.max((s_full - s1).abs());
        out.q_full.push(y[0]);
        out.s_full.push(s_full);
        out.q_adiabatic.push(q);
        out.s_order0.push(s0);
        out.s_order1.push(s1);
    }
    Ok(out)
}
