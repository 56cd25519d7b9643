use std::collections::HashMap;
use std::sync::{OnceLock, RwLock};

use num_bigint::BigInt;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::index::{binomial, factorial, MomentIndex};
use crate::poly::{Monomial, MomentPolynomial, MomentSymbol, Rational};
use crate::weyl_algebra::bracket_oracle;

/// `K^n_{abcd} = Σ_{m=0}^{n} (−1)^m m! (n−m)! C(a,m) C(b,n−m) C(c,n−m) C(d,m)`.
///
/// Defined for `1 <= n <= min(a+c, b+d, a+b, c+d)`.
pub fn kcoeff(n: u32, a: u32, b: u32, c: u32, d: u32) -> Result<Rational> {
    let max = (a + c).min(b + d).min(a + b).min(c + d);
    if n < 1 || n > max {
        return Err(Error::KOrderOutOfRange { n, max });
    }
    Ok(Rational::from_integer(k_raw(n, a, b, c, d)))
}

/// The same sum without range checks; `K^0 = 1`.
fn k_raw(n: u32, a: u32, b: u32, c: u32, d: u32) -> BigInt {
    let mut sum = BigInt::zero();
    for m in 0..=n {
        let t = BigInt::from(factorial(m))
            * BigInt::from(factorial(n - m))
            * BigInt::from(binomial(a, m))
            * BigInt::from(binomial(b, n - m))
            * BigInt::from(binomial(c, n - m))
            * BigInt::from(binomial(d, m));
        if m % 2 == 0 {
            sum += t;
        } else {
            sum -= t;
        }
    }
    sum
}

/// How the printed closed form is read.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Convention {
    /// Bilinear terms `+a·d·… − b·c·…` and every `n >= 1` in the `K` sum,
    /// with weight `(iħ/2)^{n−1}`. Even `n` then produce imaginary terms.
    Literal,
    /// Overall sign reversed and only odd total `n`: the reading that agrees
    /// with the operator oracle.
    Reconciled,
}

/// Closed-form bracket split into real and imaginary parts.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClosedForm {
    pub real: MomentPolynomial,
    pub imaginary: MomentPolynomial,
}

fn delta_product(
    x: Option<MomentIndex>,
    y: Option<MomentIndex>,
) -> MomentPolynomial {
    match (x, y) {
        (Some(x), Some(y)) => &MomentPolynomial::moment(&x) * &MomentPolynomial::moment(&y),
        _ => MomentPolynomial::zero(),
    }
}

/// Visit every tuple `(k_1, ..., k_P)` with `0 <= k_i <= cap_i`.
fn for_each_tuple(caps: &[u32], f: &mut dyn FnMut(&[u32])) {
    fn rec(caps: &[u32], buf: &mut Vec<u32>, f: &mut dyn FnMut(&[u32])) {
        if buf.len() == caps.len() {
            f(buf);
            return;
        }
        for k in 0..=caps[buf.len()] {
            buf.push(k);
            rec(caps, buf, f);
            buf.pop();
        }
    }
    rec(caps, &mut Vec::with_capacity(caps.len()), f);
}

/// Closed-form moment bracket `{Δ(m1), Δ(m2)}` for any number of pairs.
///
/// For several pairs the `K` factor becomes a product over pairs of
/// per-pair factors `K^{k_i}` with `n = Σ k_i`, and the bilinear terms are
/// summed over pairs. Both indices must have order at least two.
pub fn closed_form(m1: &MomentIndex, m2: &MomentIndex, convention: Convention) -> ClosedForm {
    let span = m1.span().max(m2.span());
    let mut real = MomentPolynomial::zero();
    let mut imaginary = MomentPolynomial::zero();

    for i in 0..span {
        let (a, b) = m1.pair(i);
        let (c, d) = m2.pair(i);
        if a > 0 && d > 0 {
            let t = delta_product(m1.lower_q(i), m2.lower_p(i));
            real.add_scaled(&t, &Rational::from_integer(BigInt::from(a * d)));
        }
        if b > 0 && c > 0 {
            let t = delta_product(m1.lower_p(i), m2.lower_q(i));
            real.add_scaled(&t, &-Rational::from_integer(BigInt::from(b * c)));
        }
    }

    let caps: Vec<u32> = (0..span)
        .map(|i| {
            let (a, b) = m1.pair(i);
            let (c, d) = m2.pair(i);
            (a + c).min(b + d).min(a + b).min(c + d)
        })
        .collect();
    let sum = m1.add(m2);
    let half = Rational::new(BigInt::one(), BigInt::from(2));
    for_each_tuple(&caps, &mut |ks| {
        let n: u32 = ks.iter().sum();
        if n == 0 {
            return;
        }
        if convention == Convention::Reconciled && n % 2 == 0 {
            return;
        }
        let mut k = BigInt::one();
        let mut lowered = Vec::with_capacity(span);
        for (i, &ki) in ks.iter().enumerate() {
            let (a, b) = m1.pair(i);
            let (c, d) = m2.pair(i);
            if ki > 0 {
                k *= k_raw(ki, a, b, c, d);
            }
            let (s, t) = sum.pair(i);
            lowered.push((s - ki, t - ki));
        }
        if k.is_zero() {
            return;
        }
        let target = MomentPolynomial::moment(&MomentIndex::new(lowered));
        if target.is_zero() {
            return;
        }
        // (iħ/2)^{n−1} = i^{n−1} ħ^{n−1} / 2^{n−1}
        let e = n - 1;
        let mut w = Rational::from_integer(k);
        for _ in 0..e {
            w *= &half;
        }
        if e % 4 == 2 || e % 4 == 3 {
            w = -w;
        }
        let h = Monomial::pow(MomentSymbol::Hbar, e);
        let term = target.mul_monomial(&h, &w);
        if e % 2 == 0 {
            real = std::mem::take(&mut real) + term;
        } else {
            imaginary = std::mem::take(&mut imaginary) + term;
        }
    });

    if convention == Convention::Reconciled {
        real = -real;
    }
    ClosedForm { real, imaginary }
}

/// Fast path for `{Δ(m1), Δ(m2)}` in the reconciled convention.
///
/// Order-one indices stand for the basic variables, whose brackets with
/// moments vanish and with each other are canonical.
pub fn closed_form_bracket(m1: &MomentIndex, m2: &MomentIndex) -> MomentPolynomial {
    match (m1.order(), m2.order()) {
        (0, _) | (_, 0) => MomentPolynomial::zero(),
        (1, 1) => basic_bracket(m1, m2),
        (1, _) | (_, 1) => MomentPolynomial::zero(),
        _ => closed_form(m1, m2, Convention::Reconciled).real,
    }
}

fn basic_bracket(m1: &MomentIndex, m2: &MomentIndex) -> MomentPolynomial {
    let i = m1.span() - 1;
    if m2.span() - 1 != i {
        return MomentPolynomial::zero();
    }
    match (m1.pair(i), m2.pair(i)) {
        ((1, 0), (0, 1)) => MomentPolynomial::one(),
        ((0, 1), (1, 0)) => -MomentPolynomial::one(),
        _ => MomentPolynomial::zero(),
    }
}

fn symbol_index(s: &MomentSymbol) -> Option<MomentIndex> {
    match s {
        MomentSymbol::Hbar => None,
        MomentSymbol::Q(i) => Some(MomentIndex::unit_q(*i)),
        MomentSymbol::P(i) => Some(MomentIndex::unit_p(*i)),
        MomentSymbol::Moment(m) => Some(m.clone()),
    }
}

fn cached_closed_form(a: &MomentIndex, b: &MomentIndex) -> MomentPolynomial {
    type Cache = RwLock<HashMap<(MomentIndex, MomentIndex), MomentPolynomial>>;
    static CACHE: OnceLock<Cache> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    let key = (a.clone(), b.clone());
    if let Some(hit) = cache.read().unwrap().get(&key) {
        return hit.clone();
    }
    let v = closed_form_bracket(a, b);
    cache.write().unwrap().insert(key, v.clone());
    v
}

/// Leibniz extension of the untruncated closed form to polynomials in
/// moments, basic variables and `ħ`. Unlike a bracket table this covers
/// moments of any order and pair count.
pub fn exact_poisson_bracket(f: &MomentPolynomial, g: &MomentPolynomial) -> MomentPolynomial {
    let fv: Vec<_> = f.variables().into_iter().filter_map(|s| symbol_index(&s).map(|i| (s, i))).collect();
    let gv: Vec<_> = g.variables().into_iter().filter_map(|s| symbol_index(&s).map(|i| (s, i))).collect();
    let dg: Vec<_> = gv.iter().map(|(y, _)| g.derivative(y)).collect();
    let mut out = MomentPolynomial::zero();
    for (x, xi) in &fv {
        let dfx = f.derivative(x);
        for ((_, yi), dgy) in gv.iter().zip(&dg) {
            let b = cached_closed_form(xi, yi);
            if b.is_zero() {
                continue;
            }
            out = out + &(&dfx * dgy) * &b;
        }
    }
    out
}

/// Closed form checked against [`bracket_oracle`]. A disagreement is
/// reported as [`Error::ConventionMismatch`] carrying both values.
pub fn checked_bracket(m1: &MomentIndex, m2: &MomentIndex) -> Result<MomentPolynomial> {
    let fast = closed_form_bracket(m1, m2);
    let exact = bracket_oracle(m1, m2)?;
    if fast != exact {
        return Err(Error::ConventionMismatch {
            left: format!("{fast:?}"),
            right: format!("{exact:?}"),
        });
    }
    Ok(fast)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::{int, rat};

    fn d(a: u32, b: u32) -> MomentIndex {
        MomentIndex::single(a, b)
    }

    fn mom(a: u32, b: u32) -> MomentPolynomial {
        MomentPolynomial::moment(&d(a, b))
    }

    #[test]
    fn k_values() {
        assert_eq!(kcoeff(1, 1, 1, 1, 1).unwrap(), int(0));
        assert_eq!(kcoeff(1, 2, 0, 0, 2).unwrap(), int(-4));
        assert_eq!(kcoeff(2, 2, 0, 0, 2).unwrap(), int(2));
        assert!(matches!(
            kcoeff(3, 2, 0, 0, 2),
            Err(Error::KOrderOutOfRange { n: 3, max: 2 })
        ));
        assert!(kcoeff(0, 2, 0, 0, 2).is_err());
    }

    #[test]
    fn literal_reading_has_wrong_sign_and_spurious_constant() {
        let lit = closed_form(&d(2, 0), &d(0, 2), Convention::Literal);
        assert_eq!(lit.real, mom(1, 1).scale(&int(-4)));
        assert_eq!(lit.imaginary, MomentPolynomial::hbar_pow(1));
    }

    #[test]
    fn reconciled_second_order() {
        assert_eq!(closed_form_bracket(&d(2, 0), &d(0, 2)), mom(1, 1).scale(&int(4)));
        assert_eq!(closed_form_bracket(&d(2, 0), &d(1, 1)), mom(2, 0).scale(&int(2)));
        assert_eq!(closed_form_bracket(&d(1, 1), &d(0, 2)), mom(0, 2).scale(&int(2)));
    }

    #[test]
    fn third_order_constant() {
        let got = closed_form_bracket(&d(3, 0), &d(0, 3));
        let expected = mom(2, 2).scale(&int(9))
            - (&mom(2, 0) * &mom(0, 2)).scale(&int(9))
            - MomentPolynomial::hbar_pow(2).scale(&rat(3, 2));
        assert_eq!(got, expected);
    }

    #[test]
    fn agrees_with_oracle_through_order_four() {
        for a in MomentIndex::range(1, 4, 1) {
            for b in MomentIndex::range(1, 4, 1) {
                checked_bracket(&a, &b).unwrap();
            }
        }
    }

    #[test]
    fn q2p_with_p2() {
        checked_bracket(&d(2, 1), &d(0, 2)).unwrap();
        assert_eq!(closed_form_bracket(&d(2, 1), &d(0, 2)), mom(1, 2).scale(&int(4)));
    }
}
