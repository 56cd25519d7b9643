use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Sub};

use num_bigint::BigInt;

use super::coefficient::{Coefficient, CoefficientValue};
use crate::index::{binomial, factorial, MomentIndex};
use crate::poly::Rational;

/// Polynomial in centered canonical operators, kept in normal order: in every
/// pair all `(q̂−q)` factors stand left of all `(p̂−p)` factors. Monomials are
/// addressed by [`MomentIndex`]; zero coefficients are never stored.
#[derive(Clone, PartialEq, Eq, Default)]
pub struct OperatorPoly {
    terms: BTreeMap<MomentIndex, Coefficient>,
}

impl OperatorPoly {
    pub fn zero() -> Self {
        OperatorPoly::default()
    }

    pub fn one() -> Self {
        OperatorPoly::monomial(MomentIndex::zero())
    }

    /// The normal-ordered monomial `Π_i (q̂_i−q_i)^{a_i} (p̂_i−p_i)^{b_i}`.
    pub fn monomial(idx: MomentIndex) -> Self {
        OperatorPoly::term(idx, Coefficient::one())
    }

    pub fn term(idx: MomentIndex, c: Coefficient) -> Self {
        let mut p = OperatorPoly::zero();
        p.add_term(idx, &c);
        p
    }

    pub fn position(pair: usize) -> Self {
        OperatorPoly::monomial(MomentIndex::unit_q(pair))
    }

    pub fn momentum(pair: usize) -> Self {
        OperatorPoly::monomial(MomentIndex::unit_p(pair))
    }

    pub fn terms(&self) -> impl Iterator<Item = (&MomentIndex, &Coefficient)> {
        self.terms.iter()
    }

    pub fn coefficient(&self, idx: &MomentIndex) -> Coefficient {
        self.terms.get(idx).cloned().unwrap_or_default()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn degree(&self) -> u32 {
        self.terms.keys().map(MomentIndex::order).max().unwrap_or(0)
    }

    pub fn add_term(&mut self, idx: MomentIndex, c: &Coefficient) {
        if c.is_zero() {
            return;
        }
        let slot = self.terms.entry(idx.clone()).or_default();
        slot.add(c);
        if slot.is_zero() {
            self.terms.remove(&idx);
        }
    }

    pub fn scale(&self, c: &CoefficientValue) -> OperatorPoly {
        let mut out = OperatorPoly::zero();
        for (m, k) in &self.terms {
            out.add_term(m.clone(), &k.mul_value(c));
        }
        out
    }

    pub fn scale_rational(&self, r: &Rational) -> OperatorPoly {
        self.scale(&CoefficientValue::real(r.clone()))
    }

    /// Product in canonical form.
    ///
    /// Per pair, `(p̂−p)^b (q̂−q)^c = Σ_k k! C(b,k) C(c,k) (−iħ)^k
    /// (q̂−q)^{c−k} (p̂−p)^{b−k}`, the closed form of applying
    /// `(p̂−p)(q̂−q) = (q̂−q)(p̂−p) − iħ` until no momentum factor stands left of
    /// a position factor. Different pairs commute.
    pub fn multiply(&self, rhs: &OperatorPoly) -> OperatorPoly {
        let mut out = OperatorPoly::zero();
        for (m1, c1) in &self.terms {
            for (m2, c2) in &rhs.terms {
                let c12 = c1.mul(c2);
                for (m, w) in multiply_monomials(m1, m2) {
                    out.add_term(m, &c12.mul_value(&w));
                }
            }
        }
        out
    }

    pub fn commutator(&self, rhs: &OperatorPoly) -> OperatorPoly {
        &self.multiply(rhs) - &rhs.multiply(self)
    }

    /// Divide every coefficient by `iħ`, `None` if some term has no `ħ`.
    pub fn div_ihbar(&self) -> Option<OperatorPoly> {
        let mut out = OperatorPoly::zero();
        for (m, c) in &self.terms {
            out.add_term(m.clone(), &c.div_ihbar()?);
        }
        Some(out)
    }

    /// Move a single-pair polynomial into slot `pair`.
    pub(crate) fn place_in_pair(&self, pair: usize) -> OperatorPoly {
        let mut out = OperatorPoly::zero();
        for (m, c) in &self.terms {
            let mut exps = vec![(0, 0); pair + 1];
            exps[pair] = m.pair(0);
            out.add_term(MomentIndex::new(exps), c);
        }
        out
    }
}

fn multiply_monomials(m1: &MomentIndex, m2: &MomentIndex) -> Vec<(MomentIndex, CoefficientValue)> {
    let span = m1.span().max(m2.span());
    // (exponents so far, weight, number of contractions)
    let mut acc: Vec<(Vec<(u32, u32)>, u64, u32)> = vec![(Vec::new(), 1, 0)];
    for i in 0..span {
        let (a, b) = m1.pair(i);
        let (c, d) = m2.pair(i);
        let mut next = Vec::new();
        for (exps, w, k_tot) in &acc {
            for k in 0..=b.min(c) {
                let weight = factorial(k) * binomial(b, k) * binomial(c, k);
                let mut e = exps.clone();
                e.push((a + c - k, b + d - k));
                next.push((e, w * weight, k_tot + k));
            }
        }
        acc = next;
    }
    acc.into_iter()
        .map(|(exps, w, k)| {
            let r = Rational::from_integer(BigInt::from(w));
            // (−iħ)^k = ħ^k · i^{3k}
            (MomentIndex::new(exps), CoefficientValue::new(r, k, 3 * k as i64))
        })
        .collect()
}

impl Add for &OperatorPoly {
    type Output = OperatorPoly;
    fn add(self, rhs: &OperatorPoly) -> OperatorPoly {
        let mut out = self.clone();
        for (m, c) in &rhs.terms {
            out.add_term(m.clone(), c);
        }
        out
    }
}

impl Sub for &OperatorPoly {
    type Output = OperatorPoly;
    fn sub(self, rhs: &OperatorPoly) -> OperatorPoly {
        let mut out = self.clone();
        for (m, c) in &rhs.terms {
            out.add_term(m.clone(), &c.neg());
        }
        out
    }
}

impl fmt::Debug for OperatorPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self
            .terms
            .iter()
            .map(|(m, c)| format!("{c:?}·N[{}]", m.label(m.span())))
            .collect();
        write!(f, "{}", parts.join(" + "))
    }
}
