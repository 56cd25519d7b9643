//! Multi-indices over canonical pairs.
//!
//! A [`MomentIndex`] stores one `(a, b)` exponent pair per canonical pair and
//! identifies the Weyl-ordered central moment `Δ(q^a p^b)`. The same shape is
//! reused for normal-ordered operator monomials and for uncentered Weyl
//! expectation values, so everything that walks exponent lattices lives here.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

/// Exponents `(a_i, b_i)` per canonical pair, trailing zero pairs trimmed.
#[derive(Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(from = "Vec<(u32, u32)>", into = "Vec<(u32, u32)>")]
pub struct MomentIndex {
    exps: Vec<(u32, u32)>,
}

impl From<Vec<(u32, u32)>> for MomentIndex {
    fn from(exps: Vec<(u32, u32)>) -> Self {
        MomentIndex::new(exps)
    }
}

impl From<MomentIndex> for Vec<(u32, u32)> {
    fn from(idx: MomentIndex) -> Self {
        idx.exps
    }
}

impl MomentIndex {
    pub fn new(exps: impl Into<Vec<(u32, u32)>>) -> Self {
        let mut exps = exps.into();
        while exps.last() == Some(&(0, 0)) {
            exps.pop();
        }
        MomentIndex { exps }
    }

    pub fn zero() -> Self {
        MomentIndex { exps: Vec::new() }
    }

    /// `Δ(q^a p^b)` for a single canonical pair.
    pub fn single(a: u32, b: u32) -> Self {
        MomentIndex::new(vec![(a, b)])
    }

    /// Unit index of the position of `pair`.
    pub fn unit_q(pair: usize) -> Self {
        let mut exps = vec![(0, 0); pair + 1];
        exps[pair] = (1, 0);
        MomentIndex::new(exps)
    }

    pub fn unit_p(pair: usize) -> Self {
        let mut exps = vec![(0, 0); pair + 1];
        exps[pair] = (0, 1);
        MomentIndex::new(exps)
    }

    pub fn exponents(&self) -> &[(u32, u32)] {
        &self.exps
    }

    /// Exponents of `pair`, `(0, 0)` beyond the stored length.
    pub fn pair(&self, pair: usize) -> (u32, u32) {
        self.exps.get(pair).copied().unwrap_or((0, 0))
    }

    /// Number of pairs up to the last one with a nonzero exponent.
    pub fn span(&self) -> usize {
        self.exps.len()
    }

    pub fn order(&self) -> u32 {
        self.exps.iter().map(|(a, b)| a + b).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.exps.is_empty()
    }

    pub fn add(&self, other: &MomentIndex) -> MomentIndex {
        let n = self.span().max(other.span());
        let exps = (0..n)
            .map(|i| {
                let (a, b) = self.pair(i);
                let (c, d) = other.pair(i);
                (a + c, b + d)
            })
            .collect::<Vec<_>>();
        MomentIndex::new(exps)
    }

    /// Componentwise difference, `None` if any exponent would go negative.
    pub fn checked_sub(&self, other: &MomentIndex) -> Option<MomentIndex> {
        if other.span() > self.span() {
            return None;
        }
        let mut exps = Vec::with_capacity(self.span());
        for i in 0..self.span() {
            let (a, b) = self.pair(i);
            let (c, d) = other.pair(i);
            exps.push((a.checked_sub(c)?, b.checked_sub(d)?));
        }
        Some(MomentIndex::new(exps))
    }

    /// Lower the position exponent of `pair` by one.
    pub fn lower_q(&self, pair: usize) -> Option<MomentIndex> {
        self.checked_sub(&MomentIndex::unit_q(pair))
    }

    pub fn lower_p(&self, pair: usize) -> Option<MomentIndex> {
        self.checked_sub(&MomentIndex::unit_p(pair))
    }

    /// Product of binomials `Π_i C(a_i, u_i) C(b_i, v_i)`.
    pub fn binomial(&self, sub: &MomentIndex) -> u64 {
        (0..self.span())
            .map(|i| {
                let (a, b) = self.pair(i);
                let (u, v) = sub.pair(i);
                binomial(a, u) * binomial(b, v)
            })
            .product()
    }

    /// Every `u` with `0 <= u <= self` componentwise, in canonical order.
    pub fn sub_indices(&self) -> Vec<MomentIndex> {
        let mut out = vec![Vec::<(u32, u32)>::new()];
        for &(a, b) in &self.exps {
            let mut next = Vec::with_capacity(out.len() * ((a + 1) * (b + 1)) as usize);
            for prefix in &out {
                for u in 0..=a {
                    for v in 0..=b {
                        let mut e = prefix.clone();
                        e.push((u, v));
                        next.push(e);
                    }
                }
            }
            out = next;
        }
        let mut out: Vec<_> = out.into_iter().map(MomentIndex::new).collect();
        out.sort();
        out
    }

    /// All indices of exactly `order` over `pairs` canonical pairs.
    pub fn of_order(order: u32, pairs: usize) -> Vec<MomentIndex> {
        let mut out = Vec::new();
        let mut buf = vec![0u32; 2 * pairs];
        compositions(order, 0, &mut buf, &mut |flat| {
            let exps = flat.chunks(2).map(|c| (c[0], c[1])).collect::<Vec<_>>();
            out.push(MomentIndex::new(exps));
        });
        out.sort();
        out
    }

    /// Indices with `min_order <= order <= max_order`, sorted canonically.
    pub fn range(min_order: u32, max_order: u32, pairs: usize) -> Vec<MomentIndex> {
        (min_order..=max_order)
            .flat_map(|o| MomentIndex::of_order(o, pairs))
            .collect()
    }

    /// Human-readable label used in CSV headers and JSON dumps.
    ///
    /// A single pair reads `q2`, `qp`, `p2`, `q2p`; several pairs read
    /// `x1^2`, `x1p2`, `p1^2`.
    pub fn label(&self, pairs: usize) -> String {
        if self.is_zero() {
            return "1".to_string();
        }
        let mut s = String::new();
        if pairs <= 1 && self.span() <= 1 {
            let (a, b) = self.pair(0);
            push_factor(&mut s, "q", a, "");
            push_factor(&mut s, "p", b, "");
        } else {
            for (i, &(a, b)) in self.exps.iter().enumerate() {
                let k = i + 1;
                push_factor(&mut s, &format!("x{k}"), a, "^");
                push_factor(&mut s, &format!("p{k}"), b, "^");
            }
        }
        s
    }
}

fn push_factor(s: &mut String, name: &str, e: u32, sep: &str) {
    match e {
        0 => {}
        1 => s.push_str(name),
        _ => {
            s.push_str(name);
            s.push_str(sep);
            s.push_str(&e.to_string());
        }
    }
}

fn compositions(remaining: u32, slot: usize, buf: &mut [u32], emit: &mut dyn FnMut(&[u32])) {
    if slot + 1 == buf.len() {
        buf[slot] = remaining;
        emit(buf);
        return;
    }
    for k in 0..=remaining {
        buf[slot] = k;
        compositions(remaining - k, slot + 1, buf, emit);
    }
}

pub(crate) fn binomial(n: u32, k: u32) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k) as u64;
    let n = n as u64;
    let mut r = 1u64;
    for i in 0..k {
        r = r * (n - i) / (i + 1);
    }
    r
}

pub(crate) fn factorial(n: u32) -> u64 {
    (1..=n as u64).product()
}

/// Total order first, then exponents `(a_1, b_1, a_2, ...)` in descending
/// lexicographic order, so one pair reads `q2, qp, p2, q3, q2p, ...`.
impl Ord for MomentIndex {
    fn cmp(&self, other: &Self) -> Ordering {
        self.order().cmp(&other.order()).then_with(|| {
            let n = self.span().max(other.span());
            for i in 0..n {
                let (a, b) = self.pair(i);
                let (c, d) = other.pair(i);
                match c.cmp(&a).then(d.cmp(&b)) {
                    Ordering::Equal => continue,
                    ord => return ord,
                }
            }
            Ordering::Equal
        })
    }
}

impl PartialOrd for MomentIndex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for MomentIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Δ({})", self.label(self.span()))
    }
}

impl fmt::Display for MomentIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Δ({})", self.label(self.span()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ordering_matches_csv_columns() {
        let labels: Vec<_> = MomentIndex::range(2, 3, 1)
            .iter()
            .map(|m| m.label(1))
            .collect();
        assert_eq!(labels, ["q2", "qp", "p2", "q3", "q2p", "qp2", "p3"]);
    }

    #[test]
    fn two_pair_second_order_has_ten_moments() {
        let idx = MomentIndex::of_order(2, 2);
        assert_eq!(idx.len(), 10);
        assert_eq!(idx[0].label(2), "x1^2");
        assert_eq!(idx[1].label(2), "x1p1");
        assert_eq!(idx[9].label(2), "p2^2");
    }

    #[test]
    fn trailing_zero_pairs_are_trimmed() {
        assert_eq!(MomentIndex::new(vec![(1, 1), (0, 0)]), MomentIndex::single(1, 1));
        assert!(MomentIndex::new(vec![(0, 0), (0, 0)]).is_zero());
    }

    #[test]
    fn sub_indices_cover_the_box() {
        let m = MomentIndex::single(2, 1);
        assert_eq!(m.sub_indices().len(), 6);
        assert_eq!(m.binomial(&MomentIndex::single(1, 1)), 2);
        assert_eq!(m.checked_sub(&MomentIndex::single(0, 2)), None);
    }

    #[test]
    fn binomials_and_factorials() {
        assert_eq!(binomial(6, 3), 20);
        assert_eq!(binomial(3, 5), 0);
        assert_eq!(factorial(5), 120);
    }
}
