use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::{Arc, Mutex, OnceLock};

use rayon::prelude::*;

use super::closed_form::{checked_bracket, closed_form_bracket};
use crate::error::{Error, Result};
use crate::index::MomentIndex;
use crate::poly::{MomentPolynomial, MomentSymbol};
use crate::weyl_algebra::bracket_oracle;

/// Build options for [`BracketTable`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct TableOptions {
    /// Apply the ħ-order filter. Without it the table holds the exact
    /// brackets between all moments up to the truncation order.
    pub truncate: bool,
    /// Check every entry against the operator oracle.
    pub validate: bool,
    /// Largest accepted `order · pairs`.
    pub ceiling: u32,
}

impl Default for TableOptions {
    fn default() -> Self {
        TableOptions {
            truncate: true,
            validate: true,
            ceiling: 12,
        }
    }
}

/// Brackets between all moments of order `2..=N` over a number of pairs.
///
/// Entries are stored once per unordered pair, keyed with the smaller index
/// first; lookups in the other order flip the sign.
#[derive(Clone, Debug)]
pub struct BracketTable {
    order: u32,
    pairs: usize,
    options: TableOptions,
    indices: Vec<MomentIndex>,
    entries: BTreeMap<(MomentIndex, MomentIndex), MomentPolynomial>,
    validated: BTreeSet<(MomentIndex, MomentIndex)>,
    mismatches: Vec<(MomentIndex, MomentIndex)>,
}

type TableKey = (u32, usize, TableOptions);

fn table_cache() -> &'static Mutex<HashMap<TableKey, Arc<BracketTable>>> {
    static CACHE: OnceLock<Mutex<HashMap<TableKey, Arc<BracketTable>>>> = OnceLock::new();
    CACHE.get_or_init(Default::default)
}

/// Drop monomials beyond ħ-order `N/2`, then zero any single moment above
/// order `N`.
pub fn truncate(p: &MomentPolynomial, order: u32) -> MomentPolynomial {
    let mut out = p.clone();
    out.retain(|m| {
        MomentPolynomial::twice_hbar_order(m) <= order
            && m.factors().iter().all(|(s, _)| match s {
                MomentSymbol::Moment(idx) => idx.order() <= order,
                _ => true,
            })
    });
    out
}

/// Table of order `N` for `pairs` canonical pairs with default options,
/// cached per configuration.
pub fn build_bracket_table(order: u32, pairs: usize) -> Result<Arc<BracketTable>> {
    build_bracket_table_with(order, pairs, TableOptions::default())
}

pub fn build_bracket_table_with(
    order: u32,
    pairs: usize,
    options: TableOptions,
) -> Result<Arc<BracketTable>> {
    if order < 2 {
        return Err(Error::InvalidParameter(format!(
            "truncation order must be at least 2, got {order}"
        )));
    }
    if pairs == 0 {
        return Err(Error::InvalidParameter("at least one canonical pair".into()));
    }
    if order * pairs as u32 > options.ceiling {
        return Err(Error::ResourceLimit {
            order,
            pairs,
            ceiling: options.ceiling,
        });
    }
    let key = (order, pairs, options);
    if let Some(hit) = table_cache().lock().unwrap().get(&key) {
        return Ok(hit.clone());
    }
    let table = Arc::new(BracketTable::build(order, pairs, options)?);
    table_cache().lock().unwrap().insert(key, table.clone());
    Ok(table)
}

impl BracketTable {
    fn build(order: u32, pairs: usize, options: TableOptions) -> Result<Self> {
        let indices = MomentIndex::range(2, order, pairs);
        let mut keys = Vec::new();
        for (i, a) in indices.iter().enumerate() {
            for b in &indices[i + 1..] {
                keys.push((a.clone(), b.clone()));
            }
        }
        log::debug!(
            "building bracket table N={order} pairs={pairs}: {} entries",
            keys.len()
        );
        // Entries are ħ-homogeneous of order (|a|+|b|−2)/2, so the filter
        // keeps or drops each one as a whole; skip the dropped ones early.
        let computed: Vec<_> = keys
            .into_par_iter()
            .filter(|(a, b)| !options.truncate || a.order() + b.order() - 2 <= order)
            .map(|(a, b)| {
                let (value, status) = if options.validate {
                    match checked_bracket(&a, &b) {
                        Ok(v) => (v, Some(true)),
                        Err(Error::ConventionMismatch { left, right }) => {
                            log::warn!(
                                "closed form disagrees for {a:?}, {b:?}: {left} vs {right}"
                            );
                            (bracket_oracle(&a, &b)?, Some(false))
                        }
                        Err(e) => return Err(e),
                    }
                } else {
                    (closed_form_bracket(&a, &b), None)
                };
                let value = if options.truncate {
                    truncate(&value, order)
                } else {
                    value
                };
                Ok((a, b, value, status))
            })
            .collect::<Result<_>>()?;

        let mut entries = BTreeMap::new();
        let mut validated = BTreeSet::new();
        let mut mismatches = Vec::new();
        for (a, b, value, status) in computed {
            match status {
                Some(true) => {
                    validated.insert((a.clone(), b.clone()));
                }
                Some(false) => mismatches.push((a.clone(), b.clone())),
                None => {}
            }
            if !value.is_zero() {
                entries.insert((a, b), value);
            }
        }
        Ok(BracketTable {
            order,
            pairs,
            options,
            indices,
            entries,
            validated,
            mismatches,
        })
    }

    pub fn truncation_order(&self) -> u32 {
        self.order
    }

    pub fn pairs(&self) -> usize {
        self.pairs
    }

    pub fn options(&self) -> TableOptions {
        self.options
    }

    /// Moment indices covered, in canonical order.
    pub fn indices(&self) -> &[MomentIndex] {
        &self.indices
    }

    pub fn contains(&self, m: &MomentIndex) -> bool {
        let o = m.order();
        o >= 2 && o <= self.order && m.span() <= self.pairs
    }

    /// Nonzero stored entries, smaller index first.
    pub fn entries(&self) -> impl Iterator<Item = (&(MomentIndex, MomentIndex), &MomentPolynomial)> {
        self.entries.iter()
    }

    pub fn is_validated(&self, a: &MomentIndex, b: &MomentIndex) -> bool {
        let key = if a <= b {
            (a.clone(), b.clone())
        } else {
            (b.clone(), a.clone())
        };
        self.validated.contains(&key)
    }

    /// Entries where the closed form disagreed and the oracle value was used.
    pub fn mismatches(&self) -> &[(MomentIndex, MomentIndex)] {
        &self.mismatches
    }

    /// `{Δ(a), Δ(b)}` from the table.
    pub fn moment_bracket(&self, a: &MomentIndex, b: &MomentIndex) -> Result<MomentPolynomial> {
        for m in [a, b] {
            if !self.contains(m) {
                return Err(Error::UnknownSymbol(format!(
                    "{m:?} not in bracket table of order {} over {} pair(s)",
                    self.order, self.pairs
                )));
            }
        }
        if a == b {
            return Ok(MomentPolynomial::zero());
        }
        if a < b {
            Ok(self
                .entries
                .get(&(a.clone(), b.clone()))
                .cloned()
                .unwrap_or_default())
        } else {
            Ok(-self
                .entries
                .get(&(b.clone(), a.clone()))
                .cloned()
                .unwrap_or_default())
        }
    }

    /// Bracket of two polynomial variables: `ħ` is central, `{q_i, p_j} =
    /// δ_ij`, basic variables are orthogonal to moments.
    pub fn bracket(&self, x: &MomentSymbol, y: &MomentSymbol) -> Result<MomentPolynomial> {
        use MomentSymbol::*;
        let check_pair = |i: &usize| {
            if *i >= self.pairs {
                Err(Error::UnknownSymbol(format!(
                    "pair {} beyond table with {} pair(s)",
                    i + 1,
                    self.pairs
                )))
            } else {
                Ok(())
            }
        };
        match (x, y) {
            (Hbar, _) | (_, Hbar) => Ok(MomentPolynomial::zero()),
            (Q(i), P(j)) => {
                check_pair(i)?;
                check_pair(j)?;
                Ok(if i == j {
                    MomentPolynomial::one()
                } else {
                    MomentPolynomial::zero()
                })
            }
            (P(i), Q(j)) => {
                check_pair(i)?;
                check_pair(j)?;
                Ok(if i == j {
                    -MomentPolynomial::one()
                } else {
                    MomentPolynomial::zero()
                })
            }
            (Q(i), Q(j)) | (P(i), P(j)) => {
                check_pair(i)?;
                check_pair(j)?;
                Ok(MomentPolynomial::zero())
            }
            (Moment(m), Q(i) | P(i)) | (Q(i) | P(i), Moment(m)) => {
                check_pair(i)?;
                if !self.contains(m) {
                    return Err(Error::UnknownSymbol(format!("{m:?}")));
                }
                Ok(MomentPolynomial::zero())
            }
            (Moment(a), Moment(b)) => self.moment_bracket(a, b),
        }
    }

    /// JSON dump: one object per nonzero entry with both index labels,
    /// exponents and the value as a coefficient list.
    pub fn to_json(&self) -> serde_json::Value {
        let entries: Vec<_> = self
            .entries
            .iter()
            .map(|((a, b), v)| {
                serde_json::json!({
                    "left": a.label(self.pairs),
                    "right": b.label(self.pairs),
                    "left_exponents": a,
                    "right_exponents": b,
                    "validated": self.validated.contains(&(a.clone(), b.clone())),
                    "value": v.to_json(self.pairs),
                })
            })
            .collect();
        serde_json::json!({
            "truncation_order": self.order,
            "pairs": self.pairs,
            "truncated": self.options.truncate,
            "moments": self.indices.iter().map(|m| m.label(self.pairs)).collect::<Vec<_>>(),
            "mismatches": self.mismatches.len(),
            "entries": entries,
        })
    }
}

/// Leibniz extension of the table bracket to polynomials.
pub fn poisson_bracket(
    f: &MomentPolynomial,
    g: &MomentPolynomial,
    table: &BracketTable,
) -> Result<MomentPolynomial> {
    let fv: Vec<_> = f
        .variables()
        .into_iter()
        .filter(|s| *s != MomentSymbol::Hbar)
        .collect();
    let gv: Vec<_> = g
        .variables()
        .into_iter()
        .filter(|s| *s != MomentSymbol::Hbar)
        .collect();
    let dg: Vec<_> = gv.iter().map(|y| g.derivative(y)).collect();
    let mut out = MomentPolynomial::zero();
    for x in &fv {
        let dfx = f.derivative(x);
        for (y, dgy) in gv.iter().zip(&dg) {
            let b = table.bracket(x, y)?;
            if b.is_zero() {
                continue;
            }
            out = out + &(&dfx * dgy) * &b;
        }
    }
    Ok(out)
}
