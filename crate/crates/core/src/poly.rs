//! Sparse commutative polynomials with exact rational coefficients.
//!
//! [`MomentPolynomial`] is the value type of moment brackets: a polynomial in
//! the basic expectation values, the central moments and the formal symbol
//! `ħ`. The generic [`Poly`] also backs the operator oracle, which works with
//! uncentered expectation values as its variables.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::index::MomentIndex;

pub type Rational = BigRational;

pub fn rat(n: i64, d: i64) -> Rational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

pub fn int(n: i64) -> Rational {
    BigRational::from_integer(BigInt::from(n))
}

/// Exact rational image of a finite float.
pub fn rat_from_f64(x: f64) -> Rational {
    BigRational::from_float(x).unwrap_or_else(Rational::zero)
}

pub fn rat_to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// Product of powers of variables, sorted by variable, zero powers absent.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Monomial<V: Ord>(Vec<(V, u32)>);

impl<V: Ord + Clone> Monomial<V> {
    pub fn one() -> Self {
        Monomial(Vec::new())
    }

    pub fn var(v: V) -> Self {
        Monomial(vec![(v, 1)])
    }

    pub fn pow(v: V, e: u32) -> Self {
        if e == 0 {
            Monomial::one()
        } else {
            Monomial(vec![(v, e)])
        }
    }

    pub fn factors(&self) -> &[(V, u32)] {
        &self.0
    }

    pub fn is_one(&self) -> bool {
        self.0.is_empty()
    }

    pub fn degree_in(&self, v: &V) -> u32 {
        self.0
            .binary_search_by(|(w, _)| w.cmp(v))
            .map(|i| self.0[i].1)
            .unwrap_or(0)
    }

    pub fn mul(&self, other: &Monomial<V>) -> Monomial<V> {
        let mut out = Vec::with_capacity(self.0.len() + other.0.len());
        let (mut i, mut j) = (0, 0);
        while i < self.0.len() && j < other.0.len() {
            match self.0[i].0.cmp(&other.0[j].0) {
                std::cmp::Ordering::Less => {
                    out.push(self.0[i].clone());
                    i += 1;
                }
                std::cmp::Ordering::Greater => {
                    out.push(other.0[j].clone());
                    j += 1;
                }
                std::cmp::Ordering::Equal => {
                    out.push((self.0[i].0.clone(), self.0[i].1 + other.0[j].1));
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&self.0[i..]);
        out.extend_from_slice(&other.0[j..]);
        Monomial(out)
    }

    /// `∂/∂v` as (multiplicity, reduced monomial).
    pub fn derivative(&self, v: &V) -> Option<(u32, Monomial<V>)> {
        let i = self.0.binary_search_by(|(w, _)| w.cmp(v)).ok()?;
        let e = self.0[i].1;
        let mut rest = self.0.clone();
        if e == 1 {
            rest.remove(i);
        } else {
            rest[i].1 = e - 1;
        }
        Some((e, Monomial(rest)))
    }
}

#[derive(Clone, PartialEq, Eq)]
pub struct Poly<V: Ord> {
    terms: BTreeMap<Monomial<V>, Rational>,
}

impl<V: Ord + Clone> Default for Poly<V> {
    fn default() -> Self {
        Poly::zero()
    }
}

impl<V: Ord + Clone> Poly<V> {
    pub fn zero() -> Self {
        Poly {
            terms: BTreeMap::new(),
        }
    }

    pub fn one() -> Self {
        Poly::constant(Rational::one())
    }

    pub fn constant(c: Rational) -> Self {
        Poly::term(Monomial::one(), c)
    }

    pub fn var(v: V) -> Self {
        Poly::term(Monomial::var(v), Rational::one())
    }

    pub fn term(m: Monomial<V>, c: Rational) -> Self {
        let mut p = Poly::zero();
        p.add_term(m, c);
        p
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial<V>, &Rational)> {
        self.terms.iter()
    }

    pub fn coefficient(&self, m: &Monomial<V>) -> Rational {
        self.terms.get(m).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn add_term(&mut self, m: Monomial<V>, c: Rational) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(m) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                *e.get_mut() += c;
                if e.get().is_zero() {
                    e.remove();
                }
            }
        }
    }

    pub fn add_scaled(&mut self, other: &Poly<V>, s: &Rational) {
        if s.is_zero() {
            return;
        }
        for (m, c) in &other.terms {
            self.add_term(m.clone(), c * s);
        }
    }

    pub fn scale(&self, s: &Rational) -> Poly<V> {
        if s.is_zero() {
            return Poly::zero();
        }
        Poly {
            terms: self.terms.iter().map(|(m, c)| (m.clone(), c * s)).collect(),
        }
    }

    pub fn mul_monomial(&self, m: &Monomial<V>, s: &Rational) -> Poly<V> {
        let mut out = Poly::zero();
        for (k, c) in &self.terms {
            out.add_term(k.mul(m), c * s);
        }
        out
    }

    pub fn pow(&self, e: u32) -> Poly<V> {
        let mut out = Poly::one();
        for _ in 0..e {
            out = &out * self;
        }
        out
    }

    /// Variables appearing anywhere, sorted.
    pub fn variables(&self) -> Vec<V> {
        let mut vs: Vec<V> = self
            .terms
            .keys()
            .flat_map(|m| m.0.iter().map(|(v, _)| v.clone()))
            .collect();
        vs.sort();
        vs.dedup();
        vs
    }

    pub fn derivative(&self, v: &V) -> Poly<V> {
        let mut out = Poly::zero();
        for (m, c) in &self.terms {
            if let Some((e, rest)) = m.derivative(v) {
                out.add_term(rest, c * Rational::from_integer(BigInt::from(e)));
            }
        }
        out
    }

    /// Replace every variable through `f`; `None` keeps it as is.
    pub fn substitute<W, F>(&self, mut f: F) -> Poly<W>
    where
        W: Ord + Clone,
        F: FnMut(&V) -> Poly<W>,
    {
        let mut cache: BTreeMap<(V, u32), Poly<W>> = BTreeMap::new();
        let mut out = Poly::zero();
        for (m, c) in &self.terms {
            let mut acc = Poly::constant(c.clone());
            for (v, e) in &m.0 {
                let key = (v.clone(), *e);
                if !cache.contains_key(&key) {
                    let p = f(v).pow(*e);
                    cache.insert(key.clone(), p);
                }
                acc = &acc * &cache[&key];
                if acc.is_zero() {
                    break;
                }
            }
            out = out + acc;
        }
        out
    }

    pub fn retain(&mut self, mut keep: impl FnMut(&Monomial<V>) -> bool) {
        self.terms.retain(|m, _| keep(m));
    }

    pub fn eval(&self, mut value: impl FnMut(&V) -> f64) -> f64 {
        self.terms
            .iter()
            .map(|(m, c)| {
                m.0.iter()
                    .fold(rat_to_f64(c), |acc, (v, e)| acc * value(v).powi(*e as i32))
            })
            .sum()
    }

    pub fn max_abs_coefficient(&self) -> Rational {
        self.terms
            .values()
            .map(|c| c.abs())
            .max()
            .unwrap_or_else(Rational::zero)
    }
}

impl<V: Ord + Clone> Add for Poly<V> {
    type Output = Poly<V>;
    fn add(mut self, rhs: Poly<V>) -> Poly<V> {
        for (m, c) in rhs.terms {
            self.add_term(m, c);
        }
        self
    }
}

impl<V: Ord + Clone> Add for &Poly<V> {
    type Output = Poly<V>;
    fn add(self, rhs: &Poly<V>) -> Poly<V> {
        self.clone() + rhs.clone()
    }
}

impl<V: Ord + Clone> Sub for Poly<V> {
    type Output = Poly<V>;
    fn sub(mut self, rhs: Poly<V>) -> Poly<V> {
        for (m, c) in rhs.terms {
            self.add_term(m, -c);
        }
        self
    }
}

impl<V: Ord + Clone> Sub for &Poly<V> {
    type Output = Poly<V>;
    fn sub(self, rhs: &Poly<V>) -> Poly<V> {
        self.clone() - rhs.clone()
    }
}

impl<V: Ord + Clone> Neg for Poly<V> {
    type Output = Poly<V>;
    fn neg(self) -> Poly<V> {
        Poly {
            terms: self.terms.into_iter().map(|(m, c)| (m, -c)).collect(),
        }
    }
}

impl<V: Ord + Clone> Mul for &Poly<V> {
    type Output = Poly<V>;
    fn mul(self, rhs: &Poly<V>) -> Poly<V> {
        let mut out = Poly::zero();
        for (m1, c1) in &self.terms {
            for (m2, c2) in &rhs.terms {
                out.add_term(m1.mul(m2), c1 * c2);
            }
        }
        out
    }
}

impl<V: Ord + Clone> Mul for Poly<V> {
    type Output = Poly<V>;
    fn mul(self, rhs: Poly<V>) -> Poly<V> {
        &self * &rhs
    }
}

/// Variables of a [`MomentPolynomial`].
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum MomentSymbol {
    /// The formal Planck constant.
    Hbar,
    /// Basic expectation value `⟨q̂_i⟩`.
    Q(usize),
    /// Basic expectation value `⟨p̂_i⟩`.
    P(usize),
    /// Central moment of order at least two.
    Moment(MomentIndex),
}

impl MomentSymbol {
    pub fn label(&self, pairs: usize) -> String {
        match self {
            MomentSymbol::Hbar => "hbar".to_string(),
            MomentSymbol::Q(i) if pairs <= 1 && *i == 0 => "q".to_string(),
            MomentSymbol::P(i) if pairs <= 1 && *i == 0 => "p".to_string(),
            MomentSymbol::Q(i) => format!("x{}", i + 1),
            MomentSymbol::P(i) => format!("p{}", i + 1),
            MomentSymbol::Moment(m) => format!("Delta_{}", m.label(pairs)),
        }
    }
}

pub type MomentPolynomial = Poly<MomentSymbol>;

impl Poly<MomentSymbol> {
    /// `Δ(m)` with the identities `Δ(1) = 1` and `Δ(q) = Δ(p) = 0` applied.
    pub fn moment(m: &MomentIndex) -> MomentPolynomial {
        match m.order() {
            0 => Poly::one(),
            1 => Poly::zero(),
            _ => Poly::var(MomentSymbol::Moment(m.clone())),
        }
    }

    pub fn hbar_pow(e: u32) -> MomentPolynomial {
        Poly::term(Monomial::pow(MomentSymbol::Hbar, e), Rational::one())
    }

    /// Twice the ħ-order of a monomial: a moment of order `k` counts `k`,
    /// an explicit `ħ^j` counts `2j`, basic variables count nothing.
    pub fn twice_hbar_order(m: &Monomial<MomentSymbol>) -> u32 {
        m.factors()
            .iter()
            .map(|(v, e)| match v {
                MomentSymbol::Hbar => 2 * e,
                MomentSymbol::Moment(idx) => idx.order() * e,
                _ => 0,
            })
            .sum()
    }

    /// Evaluate with `ħ` and all symbols supplied by `value`.
    pub fn eval_with(&self, hbar: f64, mut value: impl FnMut(&MomentSymbol) -> f64) -> f64 {
        self.eval(|s| match s {
            MomentSymbol::Hbar => hbar,
            other => value(other),
        })
    }

    /// JSON-friendly list of `(coefficient, factors)` pairs.
    pub fn to_json(&self, pairs: usize) -> serde_json::Value {
        let terms: Vec<_> = self
            .terms()
            .map(|(m, c)| {
                let factors: Vec<_> = m
                    .factors()
                    .iter()
                    .map(|(v, e)| serde_json::json!([v.label(pairs), e]))
                    .collect();
                serde_json::json!({ "coefficient": c.to_string(), "factors": factors })
            })
            .collect();
        serde_json::Value::Array(terms)
    }
}

impl<V: Ord + Clone + fmt::Debug> fmt::Debug for Poly<V> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (m, c) in &self.terms {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "{c}")?;
            for (v, e) in &m.0 {
                if *e == 1 {
                    write!(f, "·{v:?}")?;
                } else {
                    write!(f, "·{v:?}^{e}")?;
                }
            }
        }
        Ok(())
    }
}
