//! Cubic barrier `V = ½q² − λq³` at second order.

use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::adiabatic::{s0_of_q, AdiabaticModel, AdiabaticOrder};
use crate::dynamics::{integrate_until, IntegratorConfig, MomentState, Trajectory};
use crate::effective_hamiltonian::{build_heff, equations_of_motion, PolynomialPotential};
use crate::error::{Error, Result};
use crate::moment_algebra::build_bracket_table;
use crate::MomentIndex;

pub const CUBIC_LAMBDA: f64 = 0.1;
/// Below the classical barrier `1/(54λ²) ≈ 1.852` and above the lowered
/// saddle of the second-order effective potential.
pub const CUBIC_ENERGY: f64 = 1.3;
pub const CUBIC_T_MAX: f64 = 60.0;

/// Position and height of the classical barrier, `(1/(3λ), 1/(54λ²))`.
pub fn cubic_barrier(lambda: f64) -> (f64, f64) {
    let q = 1.0 / (3.0 * lambda);
    (q, q * q / 6.0)
}

/// Saddle of `V + ½V″s² + C/(2ms²)`, found as the maximum of the adiabatic
/// potential `V + √(C V″/m)` between the well and the inflection point.
pub fn effective_saddle(lambda: f64, mass: f64, casimir: f64) -> Result<(f64, f64)> {
    let pot = PolynomialPotential::cubic(lambda, mass)?;
    let model = AdiabaticModel::new(Arc::new(pot), casimir, AdiabaticOrder::Zero)?;
    let inflection = 1.0 / (6.0 * lambda);
    let (mut a, mut b) = (0.0, inflection * (1.0 - 1e-12));
    let u = |q: f64| model.adiabatic_potential(q);
    for _ in 0..200 {
        let m1 = a + (b - a) / 3.0;
        let m2 = b - (b - a) / 3.0;
        if u(m1)? < u(m2)? {
            a = m1;
        } else {
            b = m2;
        }
    }
    let q = 0.5 * (a + b);
    Ok((q, u(q)?))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Classification {
    Bypassed,
    Trapped,
    Error,
}

impl Classification {
    pub fn as_str(&self) -> &'static str {
        match self {
            Classification::Bypassed => "bypassed",
            Classification::Trapped => "trapped",
            Classification::Error => "error",
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct TunnelingSetup {
    pub lambda: f64,
    pub mass: f64,
    pub hbar: f64,
    /// Casimir of the initial state.
    pub casimir: f64,
    pub t_max: f64,
}

impl TunnelingSetup {
    pub fn new(lambda: f64, mass: f64, hbar: f64, casimir: f64) -> Self {
        TunnelingSetup {
            lambda,
            mass,
            hbar,
            casimir,
            t_max: CUBIC_T_MAX,
        }
    }
}

#[derive(Clone, Debug)]
pub struct TunnelingRun {
    pub classification: Classification,
    /// First sample with `q` beyond the barrier.
    pub t_cross: Option<f64>,
    pub trajectory: Trajectory,
}

/// Second-order state at `q0` with `s = s₀(q0)`, `p_s = 0` and `p0 > 0`
/// fixed by the effective energy.
pub fn tunneling_initial_state(setup: &TunnelingSetup, q0: f64, energy: f64) -> Result<MomentState> {
    let pot = PolynomialPotential::cubic(setup.lambda, setup.mass)?;
    let model = AdiabaticModel::new(Arc::new(pot.clone()), setup.casimir, AdiabaticOrder::Zero)?;
    let s0 = s0_of_q(&model, q0)?;
    let mut state = MomentState::new(q0, 0.0, 2, setup.hbar)?;
    state.set(&MomentIndex::single(2, 0), s0 * s0)?;
    state.set(&MomentIndex::single(0, 2), setup.casimir / (s0 * s0))?;
    let h = build_heff(pot, 2)?;
    let at_rest = h.evaluate(&state)?;
    if energy < at_rest {
        return Err(Error::Domain(format!(
            "energy {energy} below the effective potential {at_rest} at q0 = {q0}"
        )));
    }
    state.p = (2.0 * setup.mass * (energy - at_rest)).sqrt();
    Ok(state)
}

pub fn tunneling_run(setup: &TunnelingSetup, q0: f64, energy: f64, cfg: &IntegratorConfig) -> Result<TunnelingRun> {
    let state = tunneling_initial_state(setup, q0, energy)?;
    let pot = PolynomialPotential::cubic(setup.lambda, setup.mass)?;
    let h = build_heff(pot, 2)?;
    let table = build_bracket_table(2, 1)?;
    let field = equations_of_motion(&h, &table)?.with_hbar(setup.hbar);
    let (q_b, _) = cubic_barrier(setup.lambda);
    let mut stop = |_t: f64, s: &MomentState| s.q > q_b;
    let trajectory = integrate_until(&field, &state, (0.0, setup.t_max), cfg, Some(&mut stop))?;
    let t_cross = trajectory
        .times
        .iter()
        .zip(&trajectory.states)
        .find(|(_, s)| s.q > q_b)
        .map(|(t, _)| *t);
    Ok(TunnelingRun {
        classification: if t_cross.is_some() {
            Classification::Bypassed
        } else {
            Classification::Trapped
        },
        t_cross,
        trajectory,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepCell {
    pub q0: f64,
    pub energy: f64,
    pub classification: Classification,
    pub energy_drift: Option<f64>,
    pub t_cross: Option<f64>,
    pub message: Option<String>,
}

/// Classify every `(q0, energy)` pair in parallel. Cells whose initial state
/// cannot be formed are recorded as errors.
pub fn tunneling_sweep(
    setup: &TunnelingSetup,
    q0s: &[f64],
    energies: &[f64],
    cfg: &IntegratorConfig,
) -> Vec<SweepCell> {
    let cells: Vec<(f64, f64)> = q0s
        .iter()
        .flat_map(|&q| energies.iter().map(move |&e| (q, e)))
        .collect();
    cells
        .par_iter()
        .map(|&(q0, energy)| match tunneling_run(setup, q0, energy, cfg) {
            Ok(run) => SweepCell {
                q0,
                energy,
                classification: run.classification,
                energy_drift: Some(run.trajectory.energy_drift()),
                t_cross: run.t_cross,
                message: None,
            },
            Err(e) => SweepCell {
                q0,
                energy,
                classification: Classification::Error,
                energy_drift: None,
                t_cross: None,
                message: Some(e.to_string()),
            },
        })
        .collect()
}

pub fn write_sweep_csv(cells: &[SweepCell], mut w: impl std::io::Write) -> Result<()> {
    use crate::dynamics::fmt_num;
    writeln!(w, "q0,energy,classification,energy_drift,t_cross,message")?;
    for c in cells {
        let opt = |x: Option<f64>| x.map(fmt_num).unwrap_or_default();
        let msg = c.message.as_deref().unwrap_or("").replace([',', '\n'], ";");
        writeln!(
            w,
            "{},{},{},{},{},{}",
            fmt_num(c.q0),
            fmt_num(c.energy),
            c.classification.as_str(),
            opt(c.energy_drift),
            opt(c.t_cross),
            msg
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::effective_hamiltonian::Potential;

    #[test]
    fn barrier_of_default() {
        let (q, v) = cubic_barrier(CUBIC_LAMBDA);
        let pot = PolynomialPotential::cubic(CUBIC_LAMBDA, 1.0).unwrap();
        assert!(pot.derivative(1, q).abs() < 1e-12);
        assert!((pot.value(q) - v).abs() < 1e-12);
        assert!((v - 1.851_851_851_851_852).abs() < 1e-12);
    }

    #[test]
    fn lowered_saddle() {
        let (q, u) = effective_saddle(CUBIC_LAMBDA, 1.0, 0.25).unwrap();
        let (_, v) = cubic_barrier(CUBIC_LAMBDA);
        assert!(q > 0.0 && q < 5.0 / 3.0);
        assert!(u < v);
        assert!(CUBIC_ENERGY > u && CUBIC_ENERGY < v);
    }

    #[test]
    fn energy_too_low_is_an_error_cell() {
        let setup = TunnelingSetup::new(CUBIC_LAMBDA, 1.0, 1.0, 0.25);
        let cells = tunneling_sweep(&setup, &[0.0], &[0.1], &IntegratorConfig::default());
        assert_eq!(cells[0].classification, Classification::Error);
        assert!(cells[0].message.is_some());
    }
}
