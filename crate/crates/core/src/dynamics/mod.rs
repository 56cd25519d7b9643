//! Moment states, initial conditions, integration and conservation monitors.

mod integrator;
mod state;

use std::io::Write;

pub use integrator::{solve, IntegratorConfig, Method, Solution, VectorField, ZeroField};
pub use state::{
    init_gaussian, init_gaussian_with_casimir, state_indices, Admissibility, GaussianCasimir, MomentState,
};

use crate::effective_hamiltonian::{EffectiveHamiltonian, MomentField};
use crate::error::{Error, Result};

/// Per-sample diagnostics.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Monitors {
    pub energy: f64,
    pub casimir: f64,
    pub margin: f64,
}

pub fn monitors(state: &MomentState, h: &EffectiveHamiltonian) -> Result<Monitors> {
    Ok(Monitors {
        energy: h.evaluate(state)?,
        casimir: state.casimir(),
        margin: state.margin(),
    })
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<MomentState>,
    pub monitors: Vec<Monitors>,
    /// Integration ended early on the stop condition.
    pub stopped: bool,
    pub steps: u64,
}

/// Largest `|x_i − x_0| / scale`, with `scale = |x_0|` unless that is zero.
fn relative_drift(values: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = values.collect();
    let Some(&x0) = v.first() else { return 0.0 };
    let scale = if x0 != 0.0 { x0.abs() } else { 1.0 };
    v.iter().map(|x| (x - x0).abs() / scale).fold(0.0, f64::max)
}

impl Trajectory {
    pub fn final_state(&self) -> &MomentState {
        self.states.last().expect("trajectory has at least one sample")
    }

    pub fn energy_drift(&self) -> f64 {
        relative_drift(self.monitors.iter().map(|m| m.energy))
    }

    pub fn casimir_drift(&self) -> f64 {
        relative_drift(self.monitors.iter().map(|m| m.casimir))
    }

    pub fn margin_min(&self) -> f64 {
        self.monitors.iter().map(|m| m.margin).fold(f64::INFINITY, f64::min)
    }

    /// CSV with header `t,q,p,Delta_q2,...,energy,casimir,margin`, every
    /// number printed with 17 significant digits.
    pub fn write_csv(&self, mut w: impl Write) -> Result<()> {
        let order = self.final_state().order();
        let mut header = vec!["t".to_string(), "q".into(), "p".into()];
        header.extend(MomentState::moment_labels(order));
        header.extend(["energy".into(), "casimir".into(), "margin".into()]);
        writeln!(w, "{}", header.join(","))?;
        for ((t, s), m) in self.times.iter().zip(&self.states).zip(&self.monitors) {
            let mut row = vec![*t, s.q, s.p];
            row.extend_from_slice(s.moments());
            row.extend([m.energy, m.casimir, m.margin]);
            let cells: Vec<String> = row.iter().map(|x| fmt_num(*x)).collect();
            writeln!(w, "{}", cells.join(","))?;
        }
        Ok(())
    }
}

/// Fixed 17-significant-digit formatting used for every data file.
pub fn fmt_num(x: f64) -> String {
    format!("{x:.16e}")
}

/// Integrate Hamilton's equations from `state0` over `t_span`.
pub fn integrate(
    field: &MomentField,
    state0: &MomentState,
    t_span: (f64, f64),
    cfg: &IntegratorConfig,
) -> Result<Trajectory> {
    integrate_until(field, state0, t_span, cfg, None)
}

/// As [`integrate`], ending early once `stop` holds for an accepted state.
pub fn integrate_until(
    field: &MomentField,
    state0: &MomentState,
    t_span: (f64, f64),
    cfg: &IntegratorConfig,
    stop: Option<&mut dyn FnMut(f64, &MomentState) -> bool>,
) -> Result<Trajectory> {
    if state0.order() != field.order() {
        return Err(Error::InvalidParameter(format!(
            "state of order {} for a field of order {}",
            state0.order(),
            field.order()
        )));
    }
    if state0.hbar != field.hbar() {
        return Err(Error::InvalidParameter(format!(
            "state has hbar = {}, field has hbar = {}",
            state0.hbar,
            field.hbar()
        )));
    }
    let y0 = state0.to_vec();
    let sol = match stop {
        Some(f) => {
            let mut wrapped = |t: f64, y: &[f64]| f(t, &state0.with_values(y));
            solve(field, &y0, t_span, cfg, Some(&mut wrapped))?
        }
        None => solve(field, &y0, t_span, cfg, None)?,
    };
    let h = field.hamiltonian();
    let states: Vec<MomentState> = sol.states.iter().map(|y| state0.with_values(y)).collect();
    let monitors = states
        .iter()
        .map(|s| monitors(s, h))
        .collect::<Result<Vec<_>>>()?;
    Ok(Trajectory {
        times: sol.times,
        states,
        monitors,
        stopped: sol.stopped,
        steps: sol.steps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::effective_hamiltonian::{build_heff, equations_of_motion, PolynomialPotential};
    use crate::moment_algebra::build_bracket_table;

    fn harmonic_field() -> (MomentField, MomentState) {
        let h = build_heff(PolynomialPotential::harmonic(1.0, 1.0).unwrap(), 2).unwrap();
        let t = build_bracket_table(2, 1).unwrap();
        let f = equations_of_motion(&h, &t).unwrap();
        let s = init_gaussian(1.0, 0.0, 0.5, 0.2, 1.0, 2, GaussianCasimir::default()).unwrap();
        (f, s)
    }

    #[test]
    fn monitor_example() {
        let mut s = MomentState::new(0.0, 0.0, 2, 1.0).unwrap();
        s.set(&crate::MomentIndex::single(2, 0), 4.0).unwrap();
        s.set(&crate::MomentIndex::single(1, 1), 2.0).unwrap();
        s.set(&crate::MomentIndex::single(0, 2), 2.0).unwrap();
        let h = build_heff(PolynomialPotential::free(1.0).unwrap(), 2).unwrap();
        let m = monitors(&s, &h).unwrap();
        assert_eq!(m.casimir, 4.0);
        assert_eq!(m.margin, 3.75);
    }

    #[test]
    fn harmonic_variance_has_period_pi() {
        let (f, s) = harmonic_field();
        let cfg = IntegratorConfig::default().with_samples(std::f64::consts::PI);
        let traj = integrate(&f, &s, (0.0, 2.0 * std::f64::consts::PI), &cfg).unwrap();
        let v0 = s.moments()[0];
        for st in &traj.states {
            assert!((st.moments()[0] - v0).abs() < 1e-9);
        }
        assert!(traj.energy_drift() < 1e-9);
        assert!(traj.casimir_drift() < 1e-9);
    }

    #[test]
    fn csv_layout() {
        let (f, s) = harmonic_field();
        let cfg = IntegratorConfig::default().with_samples(0.5);
        let traj = integrate(&f, &s, (0.0, 1.0), &cfg).unwrap();
        let mut buf = Vec::new();
        traj.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "t,q,p,Delta_q2,Delta_qp,Delta_p2,energy,casimir,margin"
        );
        assert_eq!(lines.count(), 3);
        assert!(text.contains("5.0000000000000000e-1"));
    }

    #[test]
    fn mismatched_hbar_is_rejected() {
        let (f, s) = harmonic_field();
        let mut s = s;
        s.hbar = 0.5;
        assert!(integrate(&f, &s, (0.0, 1.0), &IntegratorConfig::default()).is_err());
    }
}
