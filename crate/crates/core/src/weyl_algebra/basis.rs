//! Weyl-ordered basis and its triangular relation to the normal-ordered one.

use std::collections::{BTreeMap, HashMap};
use std::sync::{OnceLock, RwLock};

use num_bigint::BigInt;
use num_traits::One;

use super::coefficient::{Coefficient, CoefficientValue};
use super::operator::OperatorPoly;
use crate::error::{Error, Result};
use crate::index::{binomial, MomentIndex};
use crate::poly::{Monomial, MomentPolynomial, MomentSymbol, Poly, Rational};

type PairKey = (u32, u32);

fn symmetrized_cache() -> &'static RwLock<HashMap<PairKey, OperatorPoly>> {
    static CACHE: OnceLock<RwLock<HashMap<PairKey, OperatorPoly>>> = OnceLock::new();
    CACHE.get_or_init(Default::default)
}

fn inverse_cache() -> &'static RwLock<HashMap<PairKey, BTreeMap<PairKey, Coefficient>>> {
    static CACHE: OnceLock<RwLock<HashMap<PairKey, BTreeMap<PairKey, Coefficient>>>> =
        OnceLock::new();
    CACHE.get_or_init(Default::default)
}

/// Completely symmetric ordering of `(q̂−q)^a (p̂−p)^b` for one pair, in
/// normal-ordered form.
///
/// Averages over the `C(a+b, a)` distinct words; each word stands for
/// `a! b!` of the `(a+b)!` permutations, so the weights are uniform.
fn symmetrize_pair(a: u32, b: u32) -> OperatorPoly {
    if let Some(hit) = symmetrized_cache().read().unwrap().get(&(a, b)) {
        return hit.clone();
    }
    let len = a + b;
    let q = OperatorPoly::position(0);
    let p = OperatorPoly::momentum(0);
    let mut sum = OperatorPoly::zero();
    for_each_word(len, a, &mut |word| {
        let mut prod = OperatorPoly::one();
        for &is_q in word {
            prod = prod.multiply(if is_q { &q } else { &p });
        }
        sum = &sum + &prod;
    });
    let n_words = Rational::from_integer(BigInt::from(binomial(len, a)));
    let out = sum.scale_rational(&(Rational::one() / n_words));
    symmetrized_cache()
        .write()
        .unwrap()
        .insert((a, b), out.clone());
    out
}

fn for_each_word(len: u32, n_q: u32, f: &mut dyn FnMut(&[bool])) {
    fn rec(word: &mut Vec<bool>, len: u32, q_left: u32, f: &mut dyn FnMut(&[bool])) {
        let placed = word.len() as u32;
        if placed == len {
            f(word);
            return;
        }
        let slots = len - placed;
        if q_left > 0 {
            word.push(true);
            rec(word, len, q_left - 1, f);
            word.pop();
        }
        if slots > q_left {
            word.push(false);
            rec(word, len, q_left, f);
            word.pop();
        }
    }
    rec(&mut Vec::with_capacity(len as usize), len, n_q, f);
}

/// Weyl-ordered centered monomial for every pair, normal-ordered.
///
/// Factors of different pairs commute, so averaging over all orderings of
/// the whole word factorizes into a product of per-pair averages.
pub fn weyl_symmetrize(idx: &MomentIndex) -> OperatorPoly {
    let mut out = OperatorPoly::one();
    for (i, &(a, b)) in idx.exponents().iter().enumerate() {
        if a + b == 0 {
            continue;
        }
        out = out.multiply(&symmetrize_pair(a, b).place_in_pair(i));
    }
    out
}

/// Normal monomial `N_{ab}` of one pair as a combination of Weyl monomials.
fn normal_in_weyl_pair(a: u32, b: u32) -> BTreeMap<PairKey, Coefficient> {
    if let Some(hit) = inverse_cache().read().unwrap().get(&(a, b)) {
        return hit.clone();
    }
    // W_ab = N_ab + Σ_lower c_uv N_uv  ⇒  N_ab = W_ab − Σ_lower c_uv N_uv
    let w = symmetrize_pair(a, b);
    let mut out: BTreeMap<PairKey, Coefficient> = BTreeMap::new();
    out.insert((a, b), Coefficient::one());
    for (m, c) in w.terms() {
        let key = m.pair(0);
        if key == (a, b) {
            continue;
        }
        let minus_c = c.neg();
        for (k, ck) in normal_in_weyl_pair(key.0, key.1) {
            let slot = out.entry(k).or_default();
            slot.add(&minus_c.mul(&ck));
        }
    }
    out.retain(|_, c| !c.is_zero());
    inverse_cache()
        .write()
        .unwrap()
        .insert((a, b), out.clone());
    out
}

/// Rewrite a normal-ordered polynomial in the Weyl-ordered basis.
pub fn to_weyl_basis(op: &OperatorPoly) -> BTreeMap<MomentIndex, Coefficient> {
    let mut out: BTreeMap<MomentIndex, Coefficient> = BTreeMap::new();
    for (m, c) in op.terms() {
        let mut acc: Vec<(Vec<(u32, u32)>, Coefficient)> = vec![(Vec::new(), c.clone())];
        for &(a, b) in m.exponents() {
            let expansion = normal_in_weyl_pair(a, b);
            let mut next = Vec::with_capacity(acc.len() * expansion.len());
            for (exps, coeff) in &acc {
                for (k, ck) in &expansion {
                    let mut e = exps.clone();
                    e.push(*k);
                    next.push((e, coeff.mul(ck)));
                }
            }
            acc = next;
        }
        for (exps, coeff) in acc {
            out.entry(MomentIndex::new(exps)).or_default().add(&coeff);
        }
    }
    out.retain(|_, c| !c.is_zero());
    out
}

fn weyl_term(idx: &MomentIndex, v: &CoefficientValue) -> MomentPolynomial {
    let mono = Monomial::pow(MomentSymbol::Hbar, v.hbar_power);
    MomentPolynomial::moment(idx).mul_monomial(&mono, &v.rational)
}

/// Expectation value of a centered operator polynomial in terms of central
/// moments, split into real and imaginary parts.
pub fn expectation_complex(op: &OperatorPoly) -> (MomentPolynomial, MomentPolynomial) {
    let mut re = Poly::zero();
    let mut im = Poly::zero();
    for (idx, c) in to_weyl_basis(op) {
        for v in c.values() {
            let t = weyl_term(&idx, &v);
            if v.i_power == 0 {
                re = re + t;
            } else {
                im = im + t;
            }
        }
    }
    (re, im)
}

/// Expectation value of a Hermitian centered operator polynomial.
///
/// Each normal-ordered monomial is expanded in Weyl-ordered monomials and
/// `W(a, b) ↦ Δ(q^a p^b)`, with `Δ(1) = 1` and first-order moments zero.
/// A residual imaginary part is reported as [`Error::NonHermitian`].
pub fn expectation(op: &OperatorPoly) -> Result<MomentPolynomial> {
    let (re, im) = expectation_complex(op);
    if !im.is_zero() {
        return Err(Error::NonHermitian(format!("{im:?}")));
    }
    Ok(re)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::{int, rat};

    fn half_i_hbar(sign: i64) -> Coefficient {
        Coefficient::from_value(CoefficientValue::new(rat(sign, 2), 1, 1))
    }

    #[test]
    fn covariance_symmetrization() {
        let w = weyl_symmetrize(&MomentIndex::single(1, 1));
        let mut expected = OperatorPoly::monomial(MomentIndex::single(1, 1));
        expected.add_term(MomentIndex::zero(), &half_i_hbar(-1));
        assert_eq!(w, expected);
    }

    #[test]
    fn pure_powers_need_no_reordering() {
        assert_eq!(
            weyl_symmetrize(&MomentIndex::single(2, 0)),
            OperatorPoly::monomial(MomentIndex::single(2, 0))
        );
    }

    #[test]
    fn q2p_matches_three_word_average() {
        // (QQP + QPQ + PQQ) / 3, each word reduced with the multiplier
        let q = OperatorPoly::position(0);
        let p = OperatorPoly::momentum(0);
        let words = [
            q.multiply(&q).multiply(&p),
            q.multiply(&p).multiply(&q),
            p.multiply(&q).multiply(&q),
        ];
        let sum = &(&words[0] + &words[1]) + &words[2];
        let avg = sum.scale_rational(&rat(1, 3));
        assert_eq!(weyl_symmetrize(&MomentIndex::single(2, 1)), avg);
        // leading coefficient 1, correction −iħ (q̂−q)
        assert_eq!(
            avg.coefficient(&MomentIndex::single(1, 0)),
            Coefficient::from_value(CoefficientValue::new(int(-1), 1, 1))
        );
    }

    #[test]
    fn normal_qp_expectation_has_imaginary_constant() {
        let (re, im) = expectation_complex(&OperatorPoly::monomial(MomentIndex::single(1, 1)));
        assert_eq!(re, MomentPolynomial::moment(&MomentIndex::single(1, 1)));
        assert_eq!(im, MomentPolynomial::hbar_pow(1).scale(&rat(1, 2)));
        assert!(matches!(
            expectation(&OperatorPoly::monomial(MomentIndex::single(1, 1))),
            Err(Error::NonHermitian(_))
        ));
    }

    #[test]
    fn basis_round_trip() {
        let m = MomentIndex::single(2, 2);
        assert_eq!(
            expectation(&weyl_symmetrize(&m)).unwrap(),
            MomentPolynomial::moment(&m)
        );
        assert_eq!(
            expectation(&OperatorPoly::monomial(MomentIndex::single(2, 0))).unwrap(),
            MomentPolynomial::moment(&MomentIndex::single(2, 0))
        );
    }

    #[test]
    fn symmetrized_monomials_are_hermitian() {
        for m in MomentIndex::range(0, 8, 1) {
            let (_, im) = expectation_complex(&weyl_symmetrize(&m));
            assert!(im.is_zero(), "{m:?}");
        }
    }

    #[test]
    fn two_pair_symmetrization_factorizes() {
        let m = MomentIndex::new(vec![(1, 1), (0, 1)]);
        let w = weyl_symmetrize(&m);
        assert_eq!(w.coefficient(&m), Coefficient::one());
        assert_eq!(expectation(&w).unwrap(), MomentPolynomial::moment(&m));
    }
}
