use std::collections::HashMap;
use std::sync::{Arc, OnceLock, RwLock};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::index::MomentIndex;

/// Lower bound used for the uncertainty margin.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Admissibility {
    /// `C >= ħ²/4`.
    #[default]
    Quantum,
    /// `C >= 0`, for classical ensembles.
    Classical,
}

/// Casimir value assigned to Gaussian states.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GaussianCasimir {
    /// `C = ħ²/4`, saturating the uncertainty relation.
    #[default]
    HbarSquaredQuarter,
    /// `C = ħ/2`.
    HbarHalf,
}

impl GaussianCasimir {
    pub fn value(self, hbar: f64) -> f64 {
        match self {
            GaussianCasimir::HbarSquaredQuarter => 0.25 * hbar * hbar,
            GaussianCasimir::HbarHalf => 0.5 * hbar,
        }
    }
}

/// Moment indices `2..=order` of one canonical pair, shared per order.
pub fn state_indices(order: u32) -> Arc<Vec<MomentIndex>> {
    static CACHE: OnceLock<RwLock<HashMap<u32, Arc<Vec<MomentIndex>>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    if let Some(hit) = cache.read().unwrap().get(&order) {
        return hit.clone();
    }
    let v = Arc::new(MomentIndex::range(2, order, 1));
    cache.write().unwrap().insert(order, v.clone());
    v
}

/// Expectation values and central moments of one canonical pair.
///
/// Flattened as `[q, p, Δ(q²), Δ(qp), Δ(p²), Δ(q³), ...]`.
#[derive(Clone, Debug, PartialEq)]
pub struct MomentState {
    pub q: f64,
    pub p: f64,
    pub hbar: f64,
    pub mode: Admissibility,
    order: u32,
    moments: Vec<f64>,
}

impl MomentState {
    /// All moments zero.
    pub fn new(q: f64, p: f64, order: u32, hbar: f64) -> Result<Self> {
        if order < 2 {
            return Err(Error::InvalidParameter(format!(
                "truncation order must be at least 2, got {order}"
            )));
        }
        if !(hbar > 0.0 && hbar.is_finite()) {
            return Err(Error::InvalidParameter(format!("hbar must be positive, got {hbar}")));
        }
        let n = state_indices(order).len();
        Ok(MomentState {
            q,
            p,
            hbar,
            mode: Admissibility::Quantum,
            order,
            moments: vec![0.0; n],
        })
    }

    pub fn with_mode(mut self, mode: Admissibility) -> Self {
        self.mode = mode;
        self
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn indices(&self) -> Arc<Vec<MomentIndex>> {
        state_indices(self.order)
    }

    pub fn slot(&self, idx: &MomentIndex) -> Option<usize> {
        state_indices(self.order).binary_search(idx).ok()
    }

    pub fn get(&self, idx: &MomentIndex) -> Option<f64> {
        self.slot(idx).map(|i| self.moments[i])
    }

    /// `Δ(q^a p^b)`, with `Δ(1) = 1` and first-order moments zero.
    pub fn moment(&self, a: u32, b: u32) -> Result<f64> {
        match a + b {
            0 => Ok(1.0),
            1 => Ok(0.0),
            _ => self
                .get(&MomentIndex::single(a, b))
                .ok_or_else(|| Error::MissingMoment(MomentIndex::single(a, b).to_string())),
        }
    }

    pub fn set(&mut self, idx: &MomentIndex, value: f64) -> Result<()> {
        let i = self
            .slot(idx)
            .ok_or_else(|| Error::MissingMoment(idx.to_string()))?;
        self.moments[i] = value;
        Ok(())
    }

    pub fn moments(&self) -> &[f64] {
        &self.moments
    }

    pub fn dim(&self) -> usize {
        2 + self.moments.len()
    }

    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.dim());
        v.push(self.q);
        v.push(self.p);
        v.extend_from_slice(&self.moments);
        v
    }

    /// Same order, ħ and mode as `self`, values from a flat vector.
    pub fn with_values(&self, y: &[f64]) -> MomentState {
        debug_assert_eq!(y.len(), self.dim());
        MomentState {
            q: y[0],
            p: y[1],
            hbar: self.hbar,
            mode: self.mode,
            order: self.order,
            moments: y[2..].to_vec(),
        }
    }

    /// `C = Δ(q²)Δ(p²) − Δ(qp)²`.
    pub fn casimir(&self) -> f64 {
        let (a, b, c) = (self.moments[0], self.moments[1], self.moments[2]);
        a * c - b * b
    }

    /// Lower bound of `C` for the state's admissibility mode.
    pub fn casimir_floor(&self) -> f64 {
        match self.mode {
            Admissibility::Quantum => 0.25 * self.hbar * self.hbar,
            Admissibility::Classical => 0.0,
        }
    }

    /// `C` minus its floor.
    pub fn margin(&self) -> f64 {
        self.casimir() - self.casimir_floor()
    }

    /// Checks `Δ(q²), Δ(p²) >= 0` and `margin >= −tol`.
    pub fn check_admissible(&self, tol: f64) -> Result<()> {
        let (dq2, dp2) = (self.moments[0], self.moments[2]);
        if dq2 < -tol || dp2 < -tol {
            return Err(Error::Domain(format!(
                "negative variance: Δ(q²) = {dq2}, Δ(p²) = {dp2}"
            )));
        }
        let m = self.margin();
        if m < -tol {
            return Err(Error::Domain(format!(
                "uncertainty margin {m} below zero (C = {}, floor {})",
                self.casimir(),
                self.casimir_floor()
            )));
        }
        Ok(())
    }

    /// Column names `Delta_q2, Delta_qp, ...` in storage order.
    pub fn moment_labels(order: u32) -> Vec<String> {
        state_indices(order)
            .iter()
            .map(|m| format!("Delta_{}", m.label(1)))
            .collect()
    }
}

/// Central moment `E[x^a y^b]` of a zero-mean bivariate Gaussian.
fn gaussian_moment(a: u32, b: u32, sxx: f64, sxy: f64, syy: f64) -> f64 {
    if (a + b) % 2 == 1 {
        return 0.0;
    }
    if a == 0 && b == 0 {
        return 1.0;
    }
    if a == 0 {
        return (b - 1) as f64 * syy * gaussian_moment(0, b - 2, sxx, sxy, syy);
    }
    let mut out = 0.0;
    if a >= 2 {
        out += (a - 1) as f64 * sxx * gaussian_moment(a - 2, b, sxx, sxy, syy);
    }
    if b >= 1 {
        out += b as f64 * sxy * gaussian_moment(a - 1, b - 1, sxx, sxy, syy);
    }
    out
}

/// Gaussian state of width `sigma` and correlation `p_s0`.
///
/// Second moments are `Δ(q²) = σ²`, `Δ(qp) = σ p_s0`, `Δ(p²) = p_s0² + C/σ²`;
/// higher moments follow from Wick's rule, which holds for Weyl-ordered
/// moments because they are moments of the (Gaussian) Wigner function.
pub fn init_gaussian(
    q0: f64,
    p0: f64,
    sigma: f64,
    p_s0: f64,
    hbar: f64,
    order: u32,
    casimir: GaussianCasimir,
) -> Result<MomentState> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidParameter(format!("width must be positive, got {sigma}")));
    }
    init_gaussian_with_casimir(q0, p0, sigma, p_s0, hbar, order, casimir.value(hbar))
}

/// As [`init_gaussian`] with an explicit Casimir `c ≥ 0`, which may lie
/// below the quantum floor (classical ensembles).
pub fn init_gaussian_with_casimir(
    q0: f64,
    p0: f64,
    sigma: f64,
    p_s0: f64,
    hbar: f64,
    order: u32,
    c: f64,
) -> Result<MomentState> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidParameter(format!("width must be positive, got {sigma}")));
    }
    if !(c >= 0.0 && c.is_finite()) {
        return Err(Error::InvalidParameter(format!("Casimir must be non-negative, got {c}")));
    }
    let mut s = MomentState::new(q0, p0, order, hbar)?;
    let sxx = sigma * sigma;
    let sxy = sigma * p_s0;
    let syy = p_s0 * p_s0 + c / sxx;
    for (i, m) in state_indices(order).iter().enumerate() {
        let (a, b) = m.pair(0);
        s.moments[i] = gaussian_moment(a, b, sxx, sxy, syy);
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_gaussian() {
        let s = init_gaussian(0.0, 0.0, 1.0, 0.0, 1.0, 2, GaussianCasimir::default()).unwrap();
        assert_eq!(s.moments(), &[1.0, 0.0, 0.25]);
        assert_eq!(s.casimir(), 0.25);
        assert_eq!(s.margin(), 0.0);
    }

    #[test]
    fn fourth_order_wick() {
        let s = init_gaussian(0.0, 0.0, 1.0, 0.0, 1.0, 4, GaussianCasimir::default()).unwrap();
        assert_eq!(s.moment(4, 0).unwrap(), 3.0);
        assert_eq!(s.moment(2, 2).unwrap(), 0.25);
        assert_eq!(s.moment(3, 0).unwrap(), 0.0);
        assert_eq!(s.moment(0, 4).unwrap(), 3.0 * 0.0625);
    }

    #[test]
    fn correlated_gaussian_saturates() {
        let s = init_gaussian(1.0, -2.0, 0.7, 0.3, 0.5, 4, GaussianCasimir::default()).unwrap();
        assert!((s.casimir() - 0.0625).abs() < 1e-15);
        // Isserlis: E[x²y²] = Σxx Σyy + 2 Σxy²
        let (sxx, sxy, syy) = (0.49, 0.21, 0.09 + 0.0625 / 0.49);
        assert!((s.moment(2, 2).unwrap() - (sxx * syy + 2.0 * sxy * sxy)).abs() < 1e-14);
    }

    #[test]
    fn alternative_casimir_constant() {
        let s = init_gaussian(0.0, 0.0, 1.0, 0.0, 1.0, 2, GaussianCasimir::HbarHalf).unwrap();
        assert_eq!(s.casimir(), 0.5);
    }

    #[test]
    fn rejects_nonpositive_width() {
        assert!(init_gaussian(0.0, 0.0, 0.0, 0.0, 1.0, 2, GaussianCasimir::default()).is_err());
    }

    #[test]
    fn classical_floor() {
        let s = MomentState::new(0.0, 0.0, 2, 1.0).unwrap().with_mode(Admissibility::Classical);
        assert_eq!(s.margin(), 0.0);
        assert!(s.check_admissible(0.0).is_ok());
        let q = MomentState::new(0.0, 0.0, 2, 1.0).unwrap();
        assert!(q.check_admissible(1e-12).is_err());
    }

    #[test]
    fn labels() {
        assert_eq!(
            MomentState::moment_labels(3),
            ["Delta_q2", "Delta_qp", "Delta_p2", "Delta_q3", "Delta_q2p", "Delta_qp2", "Delta_p3"]
        );
    }
}
