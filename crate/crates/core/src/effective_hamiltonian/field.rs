use std::fmt;
use std::sync::Arc;

use super::EffectiveHamiltonian;
use crate::dynamics::{state_indices, VectorField};
use crate::error::{Error, Result};
use crate::index::factorial;
use crate::moment_algebra::BracketTable;
use crate::poly::{rat_to_f64, MomentPolynomial, MomentSymbol};

/// External force `F(t)` entering as `−F(t) q` in the Hamiltonian.
pub type Drive = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Polynomial in state slots with `ħ` kept as a separate power.
#[derive(Clone, Debug)]
struct CompiledPoly {
    terms: Vec<(f64, u32, Vec<(usize, i32)>)>,
}

impl CompiledPoly {
    fn compile(p: &MomentPolynomial, order: u32) -> Result<Self> {
        let indices = state_indices(order);
        let mut terms = Vec::with_capacity(p.len());
        for (m, c) in p.terms() {
            let mut hbar = 0;
            let mut factors = Vec::new();
            for (s, e) in m.factors() {
                match s {
                    MomentSymbol::Hbar => hbar = *e,
                    MomentSymbol::Q(0) => factors.push((0, *e as i32)),
                    MomentSymbol::P(0) => factors.push((1, *e as i32)),
                    MomentSymbol::Moment(idx) => {
                        let slot = indices
                            .binary_search(idx)
                            .map_err(|_| Error::UnknownSymbol(idx.to_string()))?;
                        factors.push((slot + 2, *e as i32));
                    }
                    other => return Err(Error::UnknownSymbol(format!("{other:?}"))),
                }
            }
            terms.push((rat_to_f64(c), hbar, factors));
        }
        Ok(CompiledPoly { terms })
    }

    fn eval(&self, y: &[f64], hbar: f64) -> f64 {
        self.terms
            .iter()
            .map(|(c, h, f)| {
                let mut v = *c * hbar.powi(*h as i32);
                for &(slot, e) in f {
                    v *= if e == 1 { y[slot] } else { y[slot].powi(e) };
                }
                v
            })
            .sum()
    }
}

/// Hamilton's equations `Ẋ = {X, H_eff}` over `[q, p, moments...]`.
///
/// Moment rates are `Σ_n {Δ_m, Δ_n} ∂H/∂Δ_n` with truncated table entries;
/// the basic variables obey `q̇ = p/m`, `ṗ = −∂H_eff/∂q (+ F(t))`.
#[derive(Clone)]
pub struct MomentField {
    h: EffectiveHamiltonian,
    order: u32,
    hbar: f64,
    /// Per moment slot: (coupling number, bracket with that coupling's moment).
    rows: Vec<Vec<(usize, CompiledPoly)>>,
    /// Slots of `Δ(q^a)` for the force term, with `a`.
    force_slots: Vec<(usize, u32)>,
    drive: Option<Drive>,
}

impl fmt::Debug for MomentField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MomentField")
            .field("order", &self.order)
            .field("hbar", &self.hbar)
            .field("driven", &self.drive.is_some())
            .finish()
    }
}

/// Equations of motion of `h` under the brackets of `table`, at `ħ = 1`
/// until [`MomentField::with_hbar`] says otherwise.
pub fn equations_of_motion(h: &EffectiveHamiltonian, table: &BracketTable) -> Result<MomentField> {
    let order = h.order();
    if table.truncation_order() < order {
        return Err(Error::InvalidParameter(format!(
            "bracket table of order {} cannot evolve a Hamiltonian of order {order}",
            table.truncation_order()
        )));
    }
    let indices = state_indices(order);
    let mut rows = Vec::with_capacity(indices.len());
    for m in indices.iter() {
        let mut row = Vec::new();
        for (j, (n, _)) in h.couplings().iter().enumerate() {
            let b = crate::moment_algebra::truncate(&table.moment_bracket(m, n)?, order);
            if !b.is_zero() {
                row.push((j, CompiledPoly::compile(&b, order)?));
            }
        }
        rows.push(row);
    }
    let force_slots = h
        .couplings()
        .iter()
        .filter_map(|(m, _)| {
            let (a, b) = m.pair(0);
            (b == 0).then(|| (indices.binary_search(m).expect("coupling in state") + 2, a))
        })
        .collect();
    Ok(MomentField {
        h: h.clone(),
        order,
        hbar: 1.0,
        rows,
        force_slots,
        drive: None,
    })
}

impl MomentField {
    pub fn with_hbar(mut self, hbar: f64) -> Self {
        self.hbar = hbar;
        self
    }

    pub fn with_drive(mut self, drive: Drive) -> Self {
        self.drive = Some(drive);
        self
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn hamiltonian(&self) -> &EffectiveHamiltonian {
        &self.h
    }

    pub fn drive(&self, t: f64) -> f64 {
        self.drive.as_ref().map_or(0.0, |f| f(t))
    }

    /// Moment rates as exact polynomials, for inspection.
    pub fn symbolic_rates(h: &EffectiveHamiltonian, table: &BracketTable) -> Result<Vec<MomentPolynomial>> {
        let hp = h.to_polynomial()?;
        let mut out = Vec::new();
        out.push(crate::moment_algebra::poisson_bracket(
            &MomentPolynomial::var(MomentSymbol::Q(0)),
            &hp,
            table,
        )?);
        out.push(crate::moment_algebra::poisson_bracket(
            &MomentPolynomial::var(MomentSymbol::P(0)),
            &hp,
            table,
        )?);
        for m in state_indices(h.order()).iter() {
            let r = crate::moment_algebra::poisson_bracket(&MomentPolynomial::moment(m), &hp, table)?;
            out.push(crate::moment_algebra::truncate(&r, h.order()));
        }
        Ok(out)
    }
}

impl VectorField for MomentField {
    fn dim(&self) -> usize {
        2 + self.rows.len()
    }

    fn eval(&self, t: f64, y: &[f64], dy: &mut [f64]) {
        let q = y[0];
        let pot = self.h.potential();
        let coupling: Vec<f64> = self
            .h
            .couplings()
            .iter()
            .map(|(_, c)| self.h.coupling_value(*c, q))
            .collect();
        dy[0] = y[1] / pot.mass();
        let mut force = -pot.derivative(1, q);
        for &(slot, a) in &self.force_slots {
            force -= pot.derivative(a + 1, q) / factorial(a) as f64 * y[slot];
        }
        dy[1] = force + self.drive(t);
        for (i, row) in self.rows.iter().enumerate() {
            dy[2 + i] = row
                .iter()
                .map(|(j, b)| coupling[*j] * b.eval(y, self.hbar))
                .sum();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{init_gaussian, GaussianCasimir};
    use crate::effective_hamiltonian::{build_heff, PolynomialPotential};
    use crate::moment_algebra::build_bracket_table;

    #[test]
    fn free_particle_rates() {
        let h = build_heff(PolynomialPotential::free(2.0).unwrap(), 2).unwrap();
        let t = build_bracket_table(2, 1).unwrap();
        let f = equations_of_motion(&h, &t).unwrap();
        let y = [0.3, 1.5, 1.0, 0.4, 0.7];
        let mut dy = [0.0; 5];
        f.eval(0.0, &y, &mut dy);
        assert_eq!(dy[0], 0.75);
        assert_eq!(dy[1], 0.0);
        assert!((dy[2] - 2.0 * 0.4 / 2.0).abs() < 1e-15);
        assert!((dy[3] - 0.7 / 2.0).abs() < 1e-15);
        assert_eq!(dy[4], 0.0);
    }

    #[test]
    fn cubic_force_includes_back_reaction() {
        let lambda = 0.1;
        let h = build_heff(PolynomialPotential::cubic(lambda, 1.0).unwrap(), 2).unwrap();
        let t = build_bracket_table(2, 1).unwrap();
        let f = equations_of_motion(&h, &t).unwrap();
        let y = [0.5, 0.0, 0.8, 0.1, 0.4];
        let mut dy = [0.0; 5];
        f.eval(0.0, &y, &mut dy);
        let v1 = 0.5 - 3.0 * lambda * 0.25;
        let v3 = -6.0 * lambda;
        assert!((dy[1] - (-v1 - 0.5 * v3 * 0.8)).abs() < 1e-15);
    }

    #[test]
    fn numeric_rates_match_symbolic_brackets() {
        let pot = PolynomialPotential::new(vec![0.0, 0.25, 0.5, -0.125, 0.0625], 1.5).unwrap();
        let h = build_heff(pot, 4).unwrap();
        let t = build_bracket_table(4, 1).unwrap();
        let f = equations_of_motion(&h, &t).unwrap().with_hbar(0.7);
        let s = init_gaussian(0.4, -0.3, 0.8, 0.2, 0.7, 4, GaussianCasimir::default()).unwrap();
        let y = s.to_vec();
        let mut dy = vec![0.0; y.len()];
        f.eval(0.0, &y, &mut dy);
        let sym = MomentField::symbolic_rates(&h, &t).unwrap();
        let idx = state_indices(4);
        for (k, r) in sym.iter().enumerate() {
            let v = r.eval_with(0.7, |s| match s {
                MomentSymbol::Q(_) => y[0],
                MomentSymbol::P(_) => y[1],
                MomentSymbol::Moment(m) => y[2 + idx.binary_search(m).unwrap()],
                MomentSymbol::Hbar => unreachable!(),
            });
            assert!((v - dy[k]).abs() < 1e-12 * (1.0 + v.abs()), "slot {k}: {v} vs {}", dy[k]);
        }
    }
}
