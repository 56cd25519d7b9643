//! Canonical coordinates for second-order moments.
//!
//! One pair of second-order moments is a Poisson manifold of rank two with
//! Casimir `C = Δ(q²)Δ(p²) − Δ(qp)²`. In the coordinates `(s, p_s)` with
//! `Δ(q²) = s²`, `Δ(qp) = s p_s`, `Δ(p²) = p_s² + C/s²` the bracket is
//! canonical, and `C/s²` reads as a centrifugal term of a particle moving in
//! an auxiliary plane with angular momentum `√C`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::dynamics::VectorField;
use crate::effective_hamiltonian::MomentField;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DarbouxState1D {
    pub s: f64,
    pub p_s: f64,
    pub c: f64,
}

pub fn to_darboux(dq2: f64, dqp: f64, dp2: f64) -> Result<DarbouxState1D> {
    if !(dq2 > 0.0) {
        return Err(Error::Singularity(format!(
            "Δ(q²) = {dq2}: fluctuation coordinate undefined"
        )));
    }
    let s = dq2.sqrt();
    Ok(DarbouxState1D {
        s,
        p_s: dqp / s,
        c: dq2 * dp2 - dqp * dqp,
    })
}

/// `(Δ(q²), Δ(qp), Δ(p²))`.
pub fn from_darboux(d: &DarbouxState1D) -> Result<(f64, f64, f64)> {
    if !(d.s > 0.0) {
        return Err(Error::Singularity(format!("s = {} must be positive", d.s)));
    }
    Ok((d.s * d.s, d.s * d.p_s, d.p_s * d.p_s + d.c / (d.s * d.s)))
}

/// `{Δ(q²), Δ(p²)}`, `{Δ(q²), Δ(qp)}`, `{Δ(qp), Δ(p²)}` from the chain rule,
/// treating `(s, p_s)` as canonical and `C` as constant.
pub fn second_order_brackets(d: &DarbouxState1D) -> [f64; 3] {
    let (s, ps, c) = (d.s, d.p_s, d.c);
    // gradients with respect to (s, p_s)
    let q2 = (2.0 * s, 0.0);
    let qp = (ps, s);
    let p2 = (-2.0 * c / (s * s * s), 2.0 * ps);
    let br = |a: (f64, f64), b: (f64, f64)| a.0 * b.1 - a.1 * b.0;
    [br(q2, p2), br(q2, qp), br(qp, p2)]
}

/// Point of the auxiliary plane with its momentum.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlaneState {
    pub x: f64,
    pub y: f64,
    pub p_x: f64,
    pub p_y: f64,
}

impl PlaneState {
    pub fn radius(&self) -> f64 {
        self.x.hypot(self.y)
    }

    /// `(X p_X + Y p_Y)/√(X² + Y²)`.
    pub fn radial_momentum(&self) -> f64 {
        (self.x * self.p_x + self.y * self.p_y) / self.radius()
    }

    /// `X p_Y − Y p_X`.
    pub fn angular_momentum(&self) -> f64 {
        self.x * self.p_y - self.y * self.p_x
    }

    pub fn kinetic_energy(&self, mass: f64) -> f64 {
        0.5 * (self.p_x * self.p_x + self.p_y * self.p_y) / mass
    }
}

/// Place the fluctuation at angle `phi` with radial momentum `p_s` and
/// angular momentum `p_φ = +√C`.
pub fn lift_to_plane(d: &DarbouxState1D, phi: f64) -> Result<PlaneState> {
    if !(d.s > 0.0) {
        return Err(Error::Singularity(format!("s = {} must be positive", d.s)));
    }
    if !(d.c >= 0.0) {
        return Err(Error::Domain(format!("Casimir C = {} is negative", d.c)));
    }
    let (sin, cos) = phi.sin_cos();
    let tangential = d.c.sqrt() / d.s;
    Ok(PlaneState {
        x: d.s * cos,
        y: d.s * sin,
        p_x: d.p_s * cos - tangential * sin,
        p_y: d.p_s * sin + tangential * cos,
    })
}

/// Inverse of [`lift_to_plane`]: the Darboux state and the angle.
pub fn plane_to_darboux(p: &PlaneState) -> Result<(DarbouxState1D, f64)> {
    let s = p.radius();
    if !(s > 0.0) {
        return Err(Error::Singularity("plane state at the origin".into()));
    }
    let l = p.angular_momentum();
    Ok((
        DarbouxState1D {
            s,
            p_s: p.radial_momentum(),
            c: l * l,
        },
        p.y.atan2(p.x),
    ))
}

/// Moment dynamics extended by the spurious angle, `φ̇ = √C/(m s²)`.
///
/// The state is `[q, p, Δ(q²), Δ(qp), Δ(p²), ..., φ]`.
pub struct AngleField<'a> {
    pub inner: &'a MomentField,
}

impl VectorField for AngleField<'_> {
    fn dim(&self) -> usize {
        self.inner.dim() + 1
    }

    fn eval(&self, t: f64, y: &[f64], dy: &mut [f64]) {
        let n = self.inner.dim();
        self.inner.eval(t, &y[..n], &mut dy[..n]);
        let (a, b, c) = (y[2], y[3], y[4]);
        let cas = (a * c - b * b).max(0.0);
        dy[n] = cas.sqrt() / (self.inner.hamiltonian().mass() * a);
    }
}

/// Angles along sampled second moments from the trapezoid rule on
/// `φ̇ = √C/(m s²)`, starting at `phi0`.
pub fn integrate_angle(times: &[f64], second: &[(f64, f64, f64)], mass: f64, phi0: f64) -> Vec<f64> {
    let rate = |&(a, b, c): &(f64, f64, f64)| (a * c - b * b).max(0.0).sqrt() / (mass * a);
    let mut out = Vec::with_capacity(times.len());
    let mut phi = phi0;
    for i in 0..times.len() {
        if i > 0 {
            phi += 0.5 * (times[i] - times[i - 1]) * (rate(&second[i - 1]) + rate(&second[i]));
        }
        out.push(phi);
    }
    out
}

/// `s(t) = s0 √(1 + C t²/(m² s0⁴))` for a free particle released at the
/// minimum of `s`.
pub fn free_particle_s(t: f64, s0: f64, c: f64, mass: f64) -> f64 {
    s0 * (1.0 + c * t * t / (mass * mass * s0.powi(4))).sqrt()
}

/// Canonical parameters of the second-order moments of two pairs.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwoDofCanonical {
    pub s1: f64,
    pub p_s1: f64,
    pub s2: f64,
    pub p_s2: f64,
    pub alpha: f64,
    pub p_alpha: f64,
    pub beta: f64,
    pub p_beta: f64,
    pub c1: f64,
    pub c2: f64,
}

fn check_beta(beta: f64) -> Result<()> {
    if !(beta > 0.0 && beta < PI) {
        return Err(Error::Singularity(format!("β = {beta} outside (0, π)")));
    }
    Ok(())
}

impl TwoDofCanonical {
    pub fn validate(&self) -> Result<()> {
        if !(self.s1 > 0.0 && self.s2 > 0.0) {
            return Err(Error::Singularity(format!(
                "s1 = {}, s2 = {} must be positive",
                self.s1, self.s2
            )));
        }
        check_beta(self.beta)
    }
}

/// `(Δ(x₁²), Δ(x₂²), Δ(x₁x₂)) = (s₁², s₂², s₁ s₂ cos β)`.
pub fn two_dof_position_moments(c: &TwoDofCanonical) -> Result<(f64, f64, f64)> {
    c.validate()?;
    Ok((c.s1 * c.s1, c.s2 * c.s2, c.s1 * c.s2 * c.beta.cos()))
}

/// `U₁ = (p_α − p_β)² + [(C₁ − 4p_α²) − √(C₂ − C₁² + (C₁ − 4p_α²)²) sin(α+β)] / (2 sin²β)`.
pub fn u1(alpha: f64, p_alpha: f64, beta: f64, p_beta: f64, c1: f64, c2: f64) -> Result<f64> {
    let sb = beta.sin();
    if sb == 0.0 || !(beta > 0.0 && beta < PI) {
        return Err(Error::Singularity(format!("sin β = 0 or β = {beta} outside (0, π)")));
    }
    let a2 = 4.0 * p_alpha * p_alpha;
    let k = c1 - a2;
    // C₂ − C₁² + (C₁ − a)² without the cancellation of the squares
    let radicand = c2 - a2 * (2.0 * c1 - a2);
    if radicand < 0.0 {
        return Err(Error::Domain(format!("negative radicand {radicand:e} in U₁")));
    }
    let dp = p_alpha - p_beta;
    Ok(dp * dp + (k - radicand.sqrt() * (alpha + beta).sin()) / (2.0 * sb * sb))
}

/// `Δ(p₁²) = p_{s₁}² + U₁/s₁²`.
pub fn delta_p1_sq(s1: f64, p_s1: f64, u1: f64) -> f64 {
    p_s1 * p_s1 + u1 / (s1 * s1)
}

/// `U₁` without `α`, `p_α` and `C₂`: `p_β² + C₁/(2 sin²β)`.
pub fn u1_spherical_limit(beta: f64, p_beta: f64, c1: f64) -> f64 {
    let sb = beta.sin();
    p_beta * p_beta + c1 / (2.0 * sb * sb)
}
