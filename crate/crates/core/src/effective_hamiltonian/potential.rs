use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// One-dimensional potential with derivatives of every order.
pub trait Potential: Send + Sync + fmt::Debug {
    /// `d^k V / dq^k` at `q`; order 0 is the potential itself.
    fn derivative(&self, order: u32, q: f64) -> f64;

    fn mass(&self) -> f64;

    /// Polynomial degree, `None` if not a polynomial.
    fn degree(&self) -> Option<u32>;

    fn value(&self, q: f64) -> f64 {
        self.derivative(0, q)
    }

    /// Polynomial coefficients of `q^0..q^d`, if any.
    fn coefficients(&self) -> Option<&[f64]> {
        None
    }
}

/// `V(q) = Σ_k c_k q^k` with a particle mass.
#[derive(Clone, Debug, PartialEq)]
pub struct PolynomialPotential {
    coefficients: Vec<f64>,
    mass: f64,
}

impl PolynomialPotential {
    pub fn new(coefficients: Vec<f64>, mass: f64) -> Result<Self> {
        if !(mass > 0.0 && mass.is_finite()) {
            return Err(Error::InvalidParameter(format!("mass must be positive, got {mass}")));
        }
        if let Some(c) = coefficients.iter().find(|c| !c.is_finite()) {
            return Err(Error::InvalidParameter(format!("non-finite coefficient {c}")));
        }
        let mut coefficients = coefficients;
        while coefficients.last() == Some(&0.0) {
            coefficients.pop();
        }
        Ok(PolynomialPotential { coefficients, mass })
    }

    pub fn free(mass: f64) -> Result<Self> {
        PolynomialPotential::new(Vec::new(), mass)
    }

    /// `½ m ω² q²`.
    pub fn harmonic(mass: f64, omega: f64) -> Result<Self> {
        PolynomialPotential::new(vec![0.0, 0.0, 0.5 * mass * omega * omega], mass)
    }

    /// `½ q² − λ q³`, the default tunneling potential.
    pub fn cubic(lambda: f64, mass: f64) -> Result<Self> {
        PolynomialPotential::new(vec![0.0, 0.0, 0.5, -lambda], mass)
    }

    /// `½ m ω² q² + ε q⁴`.
    pub fn quartic(mass: f64, omega: f64, epsilon: f64) -> Result<Self> {
        PolynomialPotential::new(vec![0.0, 0.0, 0.5 * mass * omega * omega, 0.0, epsilon], mass)
    }

    pub fn coefficient_list(&self) -> &[f64] {
        &self.coefficients
    }

    /// Sum of two potentials for the same mass.
    pub fn add(&self, other: &PolynomialPotential) -> Result<PolynomialPotential> {
        if self.mass != other.mass {
            return Err(Error::InvalidParameter(format!(
                "masses differ: {} vs {}",
                self.mass, other.mass
            )));
        }
        let n = self.coefficients.len().max(other.coefficients.len());
        let c = (0..n)
            .map(|k| {
                self.coefficients.get(k).copied().unwrap_or(0.0)
                    + other.coefficients.get(k).copied().unwrap_or(0.0)
            })
            .collect();
        PolynomialPotential::new(c, self.mass)
    }

    pub fn into_shared(self) -> Arc<dyn Potential> {
        Arc::new(self)
    }
}

impl Potential for PolynomialPotential {
    fn derivative(&self, order: u32, q: f64) -> f64 {
        let k = order as usize;
        if k >= self.coefficients.len() {
            return 0.0;
        }
        // Horner on the k-th derivative: Σ_{j≥k} c_j j!/(j−k)! q^{j−k}
        let mut acc = 0.0;
        for j in (k..self.coefficients.len()).rev() {
            let falling: f64 = ((j - k + 1)..=j).map(|x| x as f64).product();
            acc = acc * q + self.coefficients[j] * falling;
        }
        acc
    }

    fn mass(&self) -> f64 {
        self.mass
    }

    fn degree(&self) -> Option<u32> {
        Some(self.coefficients.len().saturating_sub(1) as u32)
    }

    fn coefficients(&self) -> Option<&[f64]> {
        Some(&self.coefficients)
    }
}

type DerivativeFn = dyn Fn(u32, f64) -> f64 + Send + Sync;

/// Potential given by a user callback `(order, q) ↦ V^{(order)}(q)`.
///
/// The callback is checked against central finite differences of its own
/// lower derivatives on a set of sample points at construction.
pub struct CallbackPotential {
    f: Box<DerivativeFn>,
    mass: f64,
    max_order: u32,
}

impl fmt::Debug for CallbackPotential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CallbackPotential")
            .field("mass", &self.mass)
            .field("max_order", &self.max_order)
            .finish()
    }
}

impl CallbackPotential {
    /// Validates orders `1..=max_order` at `samples` with relative tolerance
    /// `tol` against a central difference with step `1e-4`.
    pub fn new(
        f: impl Fn(u32, f64) -> f64 + Send + Sync + 'static,
        mass: f64,
        max_order: u32,
        samples: &[f64],
        tol: f64,
    ) -> Result<Self> {
        if !(mass > 0.0 && mass.is_finite()) {
            return Err(Error::InvalidParameter(format!("mass must be positive, got {mass}")));
        }
        let h = 1e-4;
        for &q in samples {
            for k in 1..=max_order {
                let fd = (f(k - 1, q + h) - f(k - 1, q - h)) / (2.0 * h);
                let exact = f(k, q);
                let scale = exact.abs().max(fd.abs()).max(1.0);
                if !((fd - exact).abs() <= tol * scale) {
                    return Err(Error::InvalidParameter(format!(
                        "derivative of order {k} at q = {q} is {exact}, finite difference gives {fd}"
                    )));
                }
            }
        }
        Ok(CallbackPotential {
            f: Box::new(f),
            mass,
            max_order,
        })
    }
}

impl Potential for CallbackPotential {
    fn derivative(&self, order: u32, q: f64) -> f64 {
        if order > self.max_order {
            return 0.0;
        }
        (self.f)(order, q)
    }

    fn mass(&self) -> f64 {
        self.mass
    }

    fn degree(&self) -> Option<u32> {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_derivatives() {
        let v = PolynomialPotential::new(vec![1.0, 2.0, 3.0, 4.0], 1.0).unwrap();
        let q = 0.7_f64;
        assert!((v.value(q) - (1.0 + 2.0 * q + 3.0 * q * q + 4.0 * q.powi(3))).abs() < 1e-14);
        assert!((v.derivative(1, q) - (2.0 + 6.0 * q + 12.0 * q * q)).abs() < 1e-14);
        assert!((v.derivative(2, q) - (6.0 + 24.0 * q)).abs() < 1e-14);
        assert_eq!(v.derivative(3, q), 24.0);
        assert_eq!(v.derivative(4, q), 0.0);
        assert_eq!(v.degree(), Some(3));
    }

    #[test]
    fn rejects_bad_mass() {
        assert!(PolynomialPotential::free(0.0).is_err());
        assert!(PolynomialPotential::free(f64::NAN).is_err());
    }

    #[test]
    fn callback_validation() {
        let good = CallbackPotential::new(
            |k, q: f64| match k % 4 {
                0 => q.cos(),
                1 => -q.sin(),
                2 => -q.cos(),
                _ => q.sin(),
            },
            1.0,
            4,
            &[-1.0, 0.0, 0.5, 2.0],
            1e-6,
        );
        assert!(good.is_ok());
        let bad = CallbackPotential::new(
            |k, q: f64| if k == 0 { q * q } else { q },
            1.0,
            1,
            &[1.0],
            1e-6,
        );
        assert!(bad.is_err());
    }
}
