//! Effective Hamiltonian `⟨Ĥ⟩` for `Ĥ = p̂²/2m + V(q̂)` as a function of the
//! basic expectation values and the central moments.
//!
//! A Taylor expansion around the expectation values gives
//! `H_eff = p²/2m + V(q) + Δ(p²)/2m + Σ_{a=2}^{N} V^{(a)}(q)/a! Δ(q^a)`,
//! which is exact once `N` reaches the degree of a polynomial `V`.

mod field;
mod potential;

use std::sync::Arc;

use num_bigint::BigInt;

pub use field::{equations_of_motion, Drive, MomentField};
pub use potential::{CallbackPotential, PolynomialPotential, Potential};

use crate::dynamics::MomentState;
use crate::error::{Error, Result};
use crate::index::{binomial, factorial, MomentIndex};
use crate::poly::{rat_from_f64, MomentPolynomial, MomentSymbol, Rational};

/// Coefficient of a moment in `H_eff`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Coupling {
    Constant(f64),
    /// `V^{(a)}(q)/a!`.
    PotentialDerivative(u32),
}

#[derive(Clone, Debug)]
pub struct EffectiveHamiltonian {
    potential: Arc<dyn Potential>,
    order: u32,
    couplings: Vec<(MomentIndex, Coupling)>,
}

/// Effective Hamiltonian truncated at moment order `order`.
pub fn build_heff<P: Potential + 'static>(pot: P, order: u32) -> Result<EffectiveHamiltonian> {
    build_heff_shared(Arc::new(pot), order)
}

pub fn build_heff_shared(pot: Arc<dyn Potential>, order: u32) -> Result<EffectiveHamiltonian> {
    if order < 2 {
        return Err(Error::InvalidParameter(format!(
            "truncation order must be at least 2, got {order}"
        )));
    }
    let mut couplings = vec![(
        MomentIndex::single(0, 2),
        Coupling::Constant(0.5 / pot.mass()),
    )];
    let top = match pot.degree() {
        Some(d) => d.min(order),
        None => order,
    };
    for a in 2..=top {
        couplings.push((MomentIndex::single(a, 0), Coupling::PotentialDerivative(a)));
    }
    couplings.sort_by(|x, y| x.0.cmp(&y.0));
    Ok(EffectiveHamiltonian {
        potential: pot,
        order,
        couplings,
    })
}

impl EffectiveHamiltonian {
    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn mass(&self) -> f64 {
        self.potential.mass()
    }

    pub fn potential(&self) -> &Arc<dyn Potential> {
        &self.potential
    }

    pub fn couplings(&self) -> &[(MomentIndex, Coupling)] {
        &self.couplings
    }

    /// Coupling coefficient at position `q`.
    pub fn coupling_value(&self, c: Coupling, q: f64) -> f64 {
        match c {
            Coupling::Constant(v) => v,
            Coupling::PotentialDerivative(a) => {
                self.potential.derivative(a, q) / factorial(a) as f64
            }
        }
    }

    /// `p²/2m + V(q)`.
    pub fn classical(&self, q: f64, p: f64) -> f64 {
        0.5 * p * p / self.mass() + self.potential.value(q)
    }

    /// `H_eff` at a state.
    pub fn evaluate(&self, state: &MomentState) -> Result<f64> {
        if state.order() < self.order {
            return Err(Error::MissingMoment(format!(
                "state of order {} for a Hamiltonian of order {}",
                state.order(),
                self.order
            )));
        }
        let mut e = self.classical(state.q, state.p);
        for (m, c) in &self.couplings {
            let v = state
                .get(m)
                .ok_or_else(|| Error::MissingMoment(m.to_string()))?;
            e += self.coupling_value(*c, state.q) * v;
        }
        Ok(e)
    }

    /// `H_eff` as an exact polynomial in `q`, `p` and the moments, using the
    /// binary value of every floating coefficient.
    pub fn to_polynomial(&self) -> Result<MomentPolynomial> {
        let coeffs = self.potential.coefficients().ok_or_else(|| {
            Error::InvalidParameter("symbolic form needs a polynomial potential".into())
        })?;
        let c: Vec<Rational> = coeffs.iter().map(|&x| rat_from_f64(x)).collect();
        let inv2m = rat_from_f64(0.5 / self.mass());
        let q = MomentPolynomial::var(MomentSymbol::Q(0));
        let p = MomentPolynomial::var(MomentSymbol::P(0));
        let dp2 = MomentPolynomial::moment(&MomentIndex::single(0, 2));

        let mut h = (&p * &p).scale(&inv2m) + dp2.scale(&inv2m);
        for (k, ck) in c.iter().enumerate() {
            h = h + q.pow(k as u32).scale(ck);
        }
        for (m, coupling) in &self.couplings {
            if let Coupling::PotentialDerivative(a) = coupling {
                // V^{(a)}(q)/a! = Σ_k c_k C(k, a) q^{k−a}
                let mut d = MomentPolynomial::zero();
                for (k, ck) in c.iter().enumerate().skip(*a as usize) {
                    let w = Rational::from_integer(BigInt::from(binomial(k as u32, *a)));
                    d = d + q.pow(k as u32 - a).scale(&(ck * w));
                }
                h = h + &d * &MomentPolynomial::moment(m);
            }
        }
        Ok(h)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{init_gaussian, GaussianCasimir};
    use crate::poly::{int, rat};

    fn mom(a: u32, b: u32) -> MomentPolynomial {
        MomentPolynomial::moment(&MomentIndex::single(a, b))
    }

    #[test]
    fn free_particle_polynomial() {
        let h = build_heff(PolynomialPotential::free(1.0).unwrap(), 2).unwrap();
        let p = MomentPolynomial::var(MomentSymbol::P(0));
        let expected = (&p * &p).scale(&rat(1, 2)) + mom(0, 2).scale(&rat(1, 2));
        assert_eq!(h.to_polynomial().unwrap(), expected);
    }

    #[test]
    fn harmonic_adds_position_variance() {
        let h = build_heff(PolynomialPotential::harmonic(2.0, 3.0).unwrap(), 2).unwrap();
        let poly = h.to_polynomial().unwrap();
        let coeff = poly.coefficient(&crate::poly::Monomial::var(MomentSymbol::Moment(
            MomentIndex::single(2, 0),
        )));
        assert_eq!(coeff, int(9));
    }

    #[test]
    fn cubic_coupling_is_half_second_derivative() {
        let h = build_heff(PolynomialPotential::cubic(0.1, 1.0).unwrap(), 2).unwrap();
        assert_eq!(h.couplings().len(), 2);
        let q = 0.8;
        let c = h.coupling_value(Coupling::PotentialDerivative(2), q);
        assert!((c - 0.5 * (1.0 - 0.6 * q)).abs() < 1e-15);
    }

    #[test]
    fn free_energy_example() {
        let h = build_heff(PolynomialPotential::free(1.0).unwrap(), 2).unwrap();
        let mut s = MomentState::new(0.0, 2.0, 2, 1.0).unwrap();
        s.set(&MomentIndex::single(0, 2), 0.5).unwrap();
        assert_eq!(h.evaluate(&s).unwrap(), 2.25);
        let z = MomentState::new(0.0, 0.0, 2, 1.0).unwrap();
        assert_eq!(h.evaluate(&z).unwrap(), 0.0);
    }

    #[test]
    fn harmonic_ground_state_energy() {
        let h = build_heff(PolynomialPotential::harmonic(1.0, 1.0).unwrap(), 2).unwrap();
        let s = init_gaussian(0.0, 0.0, 0.5f64.sqrt(), 0.0, 1.0, 2, GaussianCasimir::default())
            .unwrap();
        assert!((h.evaluate(&s).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn linear_in_the_potential() {
        let v1 = PolynomialPotential::new(vec![0.0, 1.0, 0.5, -0.25], 1.0).unwrap();
        let v2 = PolynomialPotential::new(vec![1.0, 0.0, 2.0, 0.0, 0.125], 1.0).unwrap();
        let sum = v1.add(&v2).unwrap();
        let h1 = build_heff(v1, 4).unwrap().to_polynomial().unwrap();
        let h2 = build_heff(v2, 4).unwrap().to_polynomial().unwrap();
        let h12 = build_heff(sum, 4).unwrap().to_polynomial().unwrap();
        // the kinetic part is counted twice in h1 + h2
        let free = build_heff(PolynomialPotential::free(1.0).unwrap(), 4)
            .unwrap()
            .to_polynomial()
            .unwrap();
        assert_eq!(h1 + h2 - free, h12);
    }

    #[test]
    fn missing_moments() {
        let h = build_heff(PolynomialPotential::quartic(1.0, 1.0, 0.1).unwrap(), 4).unwrap();
        let s = MomentState::new(0.0, 0.0, 2, 1.0).unwrap();
        assert!(matches!(h.evaluate(&s), Err(Error::MissingMoment(_))));
    }
}
