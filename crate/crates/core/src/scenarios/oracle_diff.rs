//! Wavefunction evolution against second-order moment dynamics.

use std::sync::Arc;

use serde::Serialize;

use crate::dynamics::{
    init_gaussian, integrate, monitors, GaussianCasimir, IntegratorConfig, MomentState, Trajectory,
};
use crate::effective_hamiltonian::{build_heff_shared, equations_of_motion, Potential};
use crate::error::{Error, Result};
use crate::moment_algebra::build_bracket_table;
use crate::schrodinger_oracle::{
    correlated_wavepacket, evolve_observed, moments_from_wavefunction, EvolutionReport, Grid,
    Propagator,
};

#[derive(Clone, Debug)]
pub struct OracleSetup {
    pub potential: Arc<dyn Potential>,
    pub q0: f64,
    pub p0: f64,
    pub sigma: f64,
    pub p_s0: f64,
    pub hbar: f64,
    pub grid: Grid,
    pub dt: f64,
    pub t_end: f64,
    /// Steps between extracted samples.
    pub sample_every: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct OracleComparison {
    /// Largest relative deviation of `Δ(q²)`, `Δ(qp)`, `Δ(p²)`; each is
    /// measured against `max(|Δ|, √(Δ(q²)Δ(p²)))` of the moment solution.
    pub max_relative_deviation: [f64; 3],
    pub max_imaginary_residue: f64,
    pub report: EvolutionReport,
    #[serde(skip)]
    pub times: Vec<f64>,
    #[serde(skip)]
    pub oracle: Vec<MomentState>,
    #[serde(skip)]
    pub moments: Vec<MomentState>,
}

/// Relative deviation of second moments, scaled so that `Δ(qp)` passing
/// through zero does not blow up the measure.
pub fn second_moment_deviation(oracle: &MomentState, reference: &MomentState) -> [f64; 3] {
    let r = reference.moments();
    let o = oracle.moments();
    let scale = (r[0] * r[2]).abs().sqrt();
    let mut out = [0.0; 3];
    for i in 0..3 {
        out[i] = (o[i] - r[i]).abs() / r[i].abs().max(scale);
    }
    out
}

pub fn oracle_comparison(setup: &OracleSetup) -> Result<OracleComparison> {
    if setup.sample_every == 0 {
        return Err(Error::InvalidParameter("sample_every must be positive".into()));
    }
    let steps = (setup.t_end / setup.dt).round() as usize;
    let sample_dt = setup.dt * setup.sample_every as f64;

    let h = build_heff_shared(setup.potential.clone(), 2)?;
    let field = equations_of_motion(&h, &*build_bracket_table(2, 1)?)?.with_hbar(setup.hbar);
    let s0 = init_gaussian(
        setup.q0,
        setup.p0,
        setup.sigma,
        setup.p_s0,
        setup.hbar,
        2,
        GaussianCasimir::HbarSquaredQuarter,
    )?;
    let cfg = IntegratorConfig::default().with_samples(sample_dt);
    let traj = integrate(&field, &s0, (0.0, steps as f64 * setup.dt), &cfg)?;

    let prop = Propagator::new(&setup.grid, setup.potential.as_ref(), setup.dt, setup.hbar)?;
    let mut psi = correlated_wavepacket(&setup.grid, setup.q0, setup.p0, setup.sigma, setup.p_s0, setup.hbar)?;
    let mut out = OracleComparison {
        max_relative_deviation: [0.0; 3],
        max_imaginary_residue: 0.0,
        report: EvolutionReport::default(),
        times: Vec::new(),
        oracle: Vec::new(),
        moments: Vec::new(),
    };
    let report = evolve_observed(&prop, &mut psi, steps, setup.sample_every, |k, w| {
        let e = moments_from_wavefunction(w, 2, setup.hbar)?;
        let i = k / setup.sample_every;
        let reference = traj
            .states
            .get(i)
            .ok_or_else(|| Error::InvalidParameter(format!("no moment sample {i}")))?;
        let d = second_moment_deviation(&e.state, reference);
        for j in 0..3 {
            out.max_relative_deviation[j] = out.max_relative_deviation[j].max(d[j]);
        }
        out.max_imaginary_residue = out.max_imaginary_residue.max(e.imaginary_residue);
        out.times.push(k as f64 * setup.dt);
        out.oracle.push(e.state);
        out.moments.push(reference.clone());
        Ok(())
    })?;
    out.report = report;
    Ok(out)
}

impl OracleComparison {
    pub fn max_deviation(&self) -> f64 {
        self.max_relative_deviation.iter().cloned().fold(0.0, f64::max)
    }

    /// Extracted moments in the trajectory CSV schema.
    pub fn oracle_trajectory(&self, potential: Arc<dyn Potential>) -> Result<Trajectory> {
        let h = build_heff_shared(potential, 2)?;
        let monitors = self
            .oracle
            .iter()
            .map(|s| monitors(s, &h))
            .collect::<Result<Vec<_>>>()?;
        Ok(Trajectory {
            times: self.times.clone(),
            states: self.oracle.clone(),
            monitors,
            stopped: false,
            steps: self.report.steps as u64,
        })
    }
}
