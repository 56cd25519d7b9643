//! First-principles moment brackets.
//!
//! A central moment is expanded into uncentered Weyl-ordered expectation
//! values `E_u = ⟨W_u(q̂, p̂)⟩` and powers of the basic variables. Brackets of
//! expectation values come from commutators, `{⟨Â⟩, ⟨B̂⟩} = ⟨[Â, B̂]⟩/iħ`, and
//! the Leibniz rule extends them to polynomials. The result is mapped back to
//! central moments.

use std::collections::HashMap;
use std::sync::{OnceLock, RwLock};

use num_bigint::BigInt;

use super::basis::{to_weyl_basis, weyl_symmetrize};
use crate::error::{Error, Result};
use crate::index::MomentIndex;
use crate::poly::{Monomial, MomentPolynomial, MomentSymbol, Poly, Rational};

/// Variables of the uncentered expansion.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
enum ExpSymbol {
    Hbar,
    /// `⟨W_u⟩`; order one is a basic expectation value.
    E(MomentIndex),
}

type ExpPoly = Poly<ExpSymbol>;

fn elementary_cache() -> &'static RwLock<HashMap<(MomentIndex, MomentIndex), ExpPoly>> {
    static CACHE: OnceLock<RwLock<HashMap<(MomentIndex, MomentIndex), ExpPoly>>> =
        OnceLock::new();
    CACHE.get_or_init(Default::default)
}

fn e_var(u: &MomentIndex) -> ExpPoly {
    if u.is_zero() {
        ExpPoly::one()
    } else {
        ExpPoly::var(ExpSymbol::E(u.clone()))
    }
}

fn rational(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// `{E_u, E_v}` as a polynomial in expectation values and `ħ`.
fn elementary(u: &MomentIndex, v: &MomentIndex) -> Result<ExpPoly> {
    let key = (u.clone(), v.clone());
    if let Some(hit) = elementary_cache().read().unwrap().get(&key) {
        return Ok(hit.clone());
    }
    let comm = weyl_symmetrize(u).commutator(&weyl_symmetrize(v));
    let scaled = comm
        .div_ihbar()
        .ok_or_else(|| Error::NonHermitian(format!("[{u:?}, {v:?}] without ħ factor")))?;
    let mut out = ExpPoly::zero();
    for (w, c) in to_weyl_basis(&scaled) {
        if !c.is_real() {
            return Err(Error::NonHermitian(format!(
                "{{E{u:?}, E{v:?}}} has imaginary part {c:?}"
            )));
        }
        for val in c.values() {
            let h = Monomial::pow(ExpSymbol::Hbar, val.hbar_power);
            out = out + e_var(&w).mul_monomial(&h, &val.rational);
        }
    }
    elementary_cache().write().unwrap().insert(key, out.clone());
    Ok(out)
}

/// Product of basic variables `Π q_i^{a_i} p_i^{b_i}` with `var` supplying
/// the basic variable for a unit index.
fn basic_power<V: Ord + Clone>(k: &MomentIndex, var: &impl Fn(&MomentIndex) -> Poly<V>) -> Poly<V> {
    let mut out = Poly::one();
    for (i, &(a, b)) in k.exponents().iter().enumerate() {
        if a > 0 {
            out = &out * &var(&MomentIndex::unit_q(i)).pow(a);
        }
        if b > 0 {
            out = &out * &var(&MomentIndex::unit_p(i)).pow(b);
        }
    }
    out
}

/// `Δ_m = Σ_{u ≤ m} C(m,u) (−z)^{m−u} E_u`, or the basic variable itself for
/// an order-one index.
fn central_in_uncentered(m: &MomentIndex) -> ExpPoly {
    if m.order() <= 1 {
        return e_var(m);
    }
    let mut out = ExpPoly::zero();
    for u in m.sub_indices() {
        let rest = m.checked_sub(&u).expect("sub-index");
        let sign = if rest.order() % 2 == 0 { 1 } else { -1 };
        let coeff = rational(sign * m.binomial(&u) as i64);
        let term = &basic_power(&rest, &e_var) * &e_var(&u);
        out.add_scaled(&term, &coeff);
    }
    out
}

fn leibniz(f: &ExpPoly, g: &ExpPoly) -> Result<ExpPoly> {
    let vars = |p: &ExpPoly| -> Vec<MomentIndex> {
        p.variables()
            .into_iter()
            .filter_map(|s| match s {
                ExpSymbol::E(u) => Some(u),
                ExpSymbol::Hbar => None,
            })
            .collect()
    };
    let (fv, gv) = (vars(f), vars(g));
    let mut out = ExpPoly::zero();
    for u in &fv {
        let df = f.derivative(&ExpSymbol::E(u.clone()));
        for v in &gv {
            let e = elementary(u, v)?;
            if e.is_zero() {
                continue;
            }
            let dg = g.derivative(&ExpSymbol::E(v.clone()));
            out = out + &(&df * &dg) * &e;
        }
    }
    Ok(out)
}

fn basic_symbol(u: &MomentIndex) -> MomentPolynomial {
    let i = u.span() - 1;
    if u.pair(i).0 == 1 {
        MomentPolynomial::var(MomentSymbol::Q(i))
    } else {
        MomentPolynomial::var(MomentSymbol::P(i))
    }
}

/// `E_u = Σ_{v ≤ u} C(u,v) z^{u−v} Δ_v`.
fn uncentered_in_central(s: &ExpSymbol) -> MomentPolynomial {
    match s {
        ExpSymbol::Hbar => MomentPolynomial::hbar_pow(1),
        ExpSymbol::E(u) if u.order() == 1 => basic_symbol(u),
        ExpSymbol::E(u) => {
            let mut out = MomentPolynomial::zero();
            for v in u.sub_indices() {
                let dv = MomentPolynomial::moment(&v);
                if dv.is_zero() {
                    continue;
                }
                let rest = u.checked_sub(&v).expect("sub-index");
                let term = &basic_power(&rest, &basic_symbol) * &dv;
                out.add_scaled(&term, &rational(u.binomial(&v) as i64));
            }
            out
        }
    }
}

/// `{Δ(m1), Δ(m2)}` computed from commutators of operator polynomials.
///
/// Indices of order one stand for the basic expectation values `q_i`, `p_i`
/// rather than the vanishing first-order moments. The result is exact; it
/// contains neither basic variables (central moments are Poisson orthogonal
/// to them) nor imaginary parts, and either would be reported as an error.
pub fn bracket_oracle(m1: &MomentIndex, m2: &MomentIndex) -> Result<MomentPolynomial> {
    if m1.is_zero() || m2.is_zero() {
        return Ok(MomentPolynomial::zero());
    }
    let f = central_in_uncentered(m1);
    let g = central_in_uncentered(m2);
    let raw = leibniz(&f, &g)?;
    let out: MomentPolynomial = raw.substitute(uncentered_in_central);
    if m1.order() >= 2 || m2.order() >= 2 {
        let leaked = out.variables().into_iter().find(|s| {
            matches!(s, MomentSymbol::Q(_) | MomentSymbol::P(_))
        });
        if let Some(s) = leaked {
            return Err(Error::ConventionMismatch {
                left: format!("{m1:?}, {m2:?}"),
                right: format!("bracket depends on {s:?}"),
            });
        }
    }
    Ok(out)
}

/// Number of cached elementary brackets, for diagnostics.
pub fn oracle_cache_size() -> usize {
    elementary_cache().read().unwrap().len()
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
    fn second_order_block() {
        assert_eq!(bracket_oracle(&d(2, 0), &d(0, 2)).unwrap(), mom(1, 1).scale(&int(4)));
        assert_eq!(bracket_oracle(&d(2, 0), &d(1, 1)).unwrap(), mom(2, 0).scale(&int(2)));
        assert_eq!(bracket_oracle(&d(1, 1), &d(0, 2)).unwrap(), mom(0, 2).scale(&int(2)));
        assert!(bracket_oracle(&d(1, 1), &d(1, 1)).unwrap().is_zero());
    }

    #[test]
    fn basic_variables() {
        let one = bracket_oracle(&d(1, 0), &d(0, 1)).unwrap();
        assert_eq!(one, MomentPolynomial::one());
        for m in MomentIndex::range(2, 4, 1) {
            assert!(bracket_oracle(&d(1, 0), &m).unwrap().is_zero());
            assert!(bracket_oracle(&m, &d(0, 1)).unwrap().is_zero());
        }
    }

    #[test]
    fn third_order_carries_hbar_squared() {
        // 9Δ(q²p²) − 9Δ(q²)Δ(p²) − (3/2)ħ²
        let got = bracket_oracle(&d(3, 0), &d(0, 3)).unwrap();
        let expected = mom(2, 2).scale(&int(9))
            - (&mom(2, 0) * &mom(0, 2)).scale(&int(9))
            - MomentPolynomial::hbar_pow(2).scale(&rat(3, 2));
        assert_eq!(got, expected);
    }

    #[test]
    fn antisymmetric_through_order_four() {
        let idx = MomentIndex::range(2, 4, 1);
        for a in &idx {
            for b in &idx {
                let ab = bracket_oracle(a, b).unwrap();
                let ba = bracket_oracle(b, a).unwrap();
                assert!((ab + ba).is_zero(), "{a:?} {b:?}");
            }
        }
    }

    #[test]
    fn cross_pair_second_order() {
        let x1x1 = MomentIndex::new(vec![(2, 0)]);
        let p2p2 = MomentIndex::new(vec![(0, 0), (0, 2)]);
        let x1x2 = MomentIndex::new(vec![(1, 0), (1, 0)]);
        let x1p2 = MomentIndex::new(vec![(1, 0), (0, 1)]);
        assert!(bracket_oracle(&x1x1, &p2p2).unwrap().is_zero());
        assert_eq!(
            bracket_oracle(&x1x2, &p2p2).unwrap(),
            MomentPolynomial::moment(&x1p2).scale(&int(2))
        );
    }
}
