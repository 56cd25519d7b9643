use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;
use num_traits::{One, Zero};

use crate::poly::{rat_to_f64, Rational};

/// A single exact scalar `rational · ħ^hbar_power · i^i_power`.
///
/// `i_power` is kept in `{0, 1}`: `i² = −1` is folded into the sign of the
/// rational part on construction.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct CoefficientValue {
    pub rational: Rational,
    pub hbar_power: u32,
    pub i_power: u8,
}

impl CoefficientValue {
    pub fn new(rational: Rational, hbar_power: u32, i_power: i64) -> Self {
        let mut ip = i_power.rem_euclid(4) as u8;
        let mut rational = rational;
        if ip >= 2 {
            rational = -rational;
            ip -= 2;
        }
        CoefficientValue {
            rational,
            hbar_power,
            i_power: ip,
        }
    }

    pub fn real(rational: Rational) -> Self {
        CoefficientValue::new(rational, 0, 0)
    }

    pub fn mul(&self, other: &CoefficientValue) -> CoefficientValue {
        CoefficientValue::new(
            &self.rational * &other.rational,
            self.hbar_power + other.hbar_power,
            (self.i_power + other.i_power) as i64,
        )
    }
}

/// Exact scalar in the ring of polynomials in `ħ` with Gaussian-rational
/// coefficients: a sum of [`CoefficientValue`]s, zero parts absent.
#[derive(Clone, PartialEq, Eq, Default)]
pub struct Coefficient {
    parts: BTreeMap<(u32, u8), Rational>,
}

impl Coefficient {
    pub fn zero() -> Self {
        Coefficient::default()
    }

    pub fn one() -> Self {
        Coefficient::from_value(CoefficientValue::real(Rational::one()))
    }

    pub fn from_value(v: CoefficientValue) -> Self {
        let mut c = Coefficient::zero();
        c.add_value(v);
        c
    }

    pub fn rational(r: Rational) -> Self {
        Coefficient::from_value(CoefficientValue::real(r))
    }

    pub fn add_value(&mut self, v: CoefficientValue) {
        if v.rational.is_zero() {
            return;
        }
        let key = (v.hbar_power, v.i_power);
        let slot = self.parts.entry(key).or_insert_with(Rational::zero);
        *slot += v.rational;
        if slot.is_zero() {
            self.parts.remove(&key);
        }
    }

    pub fn add(&mut self, other: &Coefficient) {
        for v in other.values() {
            self.add_value(v);
        }
    }

    pub fn values(&self) -> impl Iterator<Item = CoefficientValue> + '_ {
        self.parts.iter().map(|(&(h, i), r)| CoefficientValue {
            rational: r.clone(),
            hbar_power: h,
            i_power: i,
        })
    }

    pub fn mul(&self, other: &Coefficient) -> Coefficient {
        let mut out = Coefficient::zero();
        for a in self.values() {
            for b in other.values() {
                out.add_value(a.mul(&b));
            }
        }
        out
    }

    pub fn mul_value(&self, v: &CoefficientValue) -> Coefficient {
        let mut out = Coefficient::zero();
        for a in self.values() {
            out.add_value(a.mul(v));
        }
        out
    }

    pub fn neg(&self) -> Coefficient {
        self.mul_value(&CoefficientValue::real(-Rational::one()))
    }

    pub fn is_zero(&self) -> bool {
        self.parts.is_empty()
    }

    pub fn is_real(&self) -> bool {
        self.parts.keys().all(|&(_, i)| i == 0)
    }

    /// Divide by `iħ`; `None` if some part carries no factor of `ħ`.
    pub fn div_ihbar(&self) -> Option<Coefficient> {
        let mut out = Coefficient::zero();
        for v in self.values() {
            if v.hbar_power == 0 {
                return None;
            }
            out.add_value(CoefficientValue::new(
                v.rational,
                v.hbar_power - 1,
                v.i_power as i64 - 1,
            ));
        }
        Some(out)
    }

    /// Numeric value for a concrete `ħ`.
    pub fn to_complex(&self, hbar: f64) -> Complex64 {
        self.values()
            .map(|v| {
                let mag = rat_to_f64(&v.rational) * hbar.powi(v.hbar_power as i32);
                if v.i_power == 0 {
                    Complex64::new(mag, 0.0)
                } else {
                    Complex64::new(0.0, mag)
                }
            })
            .sum()
    }
}

impl fmt::Debug for Coefficient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.parts.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self
            .values()
            .map(|v| {
                let i = if v.i_power == 1 { "i" } else { "" };
                match v.hbar_power {
                    0 => format!("{}{}", v.rational, i),
                    1 => format!("{}{}ħ", v.rational, i),
                    h => format!("{}{}ħ^{}", v.rational, i, h),
                }
            })
            .collect();
        write!(f, "({})", parts.join(" + "))
    }
}
