//! Crank–Nicolson propagation of a 1D wavefunction and extraction of
//! Weyl-ordered central moments from it.
//!
//! The grid has hard walls: amplitudes vanish just outside `[x_min, x_max]`.
//! The kinetic term uses the three-point Laplacian, so the propagator is a
//! complex tridiagonal solve per step.

use num_complex::Complex64;
use serde::Serialize;

use crate::dynamics::MomentState;
use crate::effective_hamiltonian::Potential;
use crate::error::{Error, Result};
use crate::weyl_algebra::weyl_symmetrize;
use crate::MomentIndex;

/// Moment order above which repeated three-point derivatives lose too much
/// accuracy on desk-scale grids.
pub const MAX_EXTRACTION_ORDER: u32 = 4;

/// Imaginary residue above which an extraction is reported as inaccurate.
pub const RESIDUE_WARNING: f64 = 1e-4;

/// Local phase error per step above which `dt` is flagged as too large.
pub const STEP_ERROR_WARNING: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Grid {
    pub x_min: f64,
    pub x_max: f64,
    pub n_points: usize,
}

impl Grid {
    pub fn new(x_min: f64, x_max: f64, n_points: usize) -> Result<Self> {
        if n_points < 64 {
            return Err(Error::Resolution(format!(
                "at least 64 grid points are needed, got {n_points}"
            )));
        }
        if !(x_max > x_min) || !x_min.is_finite() || !x_max.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "grid interval [{x_min}, {x_max}] is empty"
            )));
        }
        Ok(Grid {
            x_min,
            x_max,
            n_points,
        })
    }

    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / (self.n_points - 1) as f64
    }

    pub fn x(&self, j: usize) -> f64 {
        self.x_min + j as f64 * self.dx()
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_points).map(|j| self.x(j))
    }
}

#[derive(Clone, Debug)]
pub struct WaveFunction {
    grid: Grid,
    amplitudes: Vec<Complex64>,
}

impl WaveFunction {
    pub fn new(grid: Grid, amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.len() != grid.n_points {
            return Err(Error::InvalidParameter(format!(
                "{} amplitudes for {} grid points",
                amplitudes.len(),
                grid.n_points
            )));
        }
        Ok(WaveFunction { grid, amplitudes })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    /// `Σ |ψ_j|² dx`.
    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>() * self.grid.dx()
    }

    pub fn normalize(&mut self) {
        let s = self.norm().sqrt();
        for a in &mut self.amplitudes {
            *a /= s;
        }
    }

    /// `⟨x⟩` and `√Δ(x²)` from the position density.
    pub fn position_spread(&self) -> (f64, f64) {
        let n = self.norm() / self.grid.dx();
        let mean = self
            .amplitudes
            .iter()
            .enumerate()
            .map(|(j, a)| self.grid.x(j) * a.norm_sqr())
            .sum::<f64>()
            / n;
        let var = self
            .amplitudes
            .iter()
            .enumerate()
            .map(|(j, a)| (self.grid.x(j) - mean).powi(2) * a.norm_sqr())
            .sum::<f64>()
            / n;
        (mean, var.sqrt())
    }

    /// Distance from the walls to `⟨x⟩ ± 5√Δ(x²)`, negative when the packet
    /// reaches closer than that.
    pub fn boundary_clearance(&self) -> f64 {
        let (mean, s) = self.position_spread();
        (mean - 5.0 * s - self.grid.x_min).min(self.grid.x_max - mean - 5.0 * s)
    }
}

/// Normalized `ψ(x) ∝ exp(−(x−q0)²/(4σ²) + i p0 x/ħ)`.
pub fn gaussian_wavepacket(grid: &Grid, q0: f64, p0: f64, sigma: f64, hbar: f64) -> Result<WaveFunction> {
    correlated_wavepacket(grid, q0, p0, sigma, 0.0, hbar)
}

/// Gaussian with an extra chirp so that `Δ(qp) = σ p_s0` and
/// `Δ(p²) = p_s0² + ħ²/(4σ²)`.
pub fn correlated_wavepacket(
    grid: &Grid,
    q0: f64,
    p0: f64,
    sigma: f64,
    p_s0: f64,
    hbar: f64,
) -> Result<WaveFunction> {
    if !(sigma > 0.0 && hbar > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "width and hbar must be positive, got σ = {sigma}, ħ = {hbar}"
        )));
    }
    let per_sigma = sigma / grid.dx();
    if per_sigma < 8.0 {
        return Err(Error::Resolution(format!(
            "σ = {sigma} spans {per_sigma:.2} grid points, at least 8 are needed"
        )));
    }
    let chirp = p_s0 / (2.0 * sigma);
    let amplitudes = grid
        .points()
        .map(|x| {
            let d = x - q0;
            let phase = (p0 * x + chirp * d * d) / hbar;
            Complex64::from_polar((-d * d / (4.0 * sigma * sigma)).exp(), phase)
        })
        .collect();
    let mut psi = WaveFunction::new(grid.clone(), amplitudes)?;
    psi.normalize();
    if psi.boundary_clearance() < 0.0 {
        log::warn!("initial wavepacket reaches within 5σ of the grid walls");
    }
    Ok(psi)
}

/// Precomputed Crank–Nicolson step `(1 + iHdt/2ħ) ψ' = (1 − iHdt/2ħ) ψ`.
#[derive(Clone, Debug)]
pub struct Propagator {
    grid: Grid,
    dt: f64,
    hbar: f64,
    /// Diagonal of `H`.
    diag: Vec<f64>,
    /// Off-diagonal of `H`.
    off: f64,
    /// Thomas elimination of the left-hand matrix.
    c_prime: Vec<Complex64>,
    denom: Vec<Complex64>,
}

impl Propagator {
    pub fn new(grid: &Grid, potential: &dyn Potential, dt: f64, hbar: f64) -> Result<Self> {
        if !(dt > 0.0 && hbar > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "time step and hbar must be positive, got dt = {dt}, ħ = {hbar}"
            )));
        }
        let m = potential.mass();
        let dx = grid.dx();
        let kin = hbar * hbar / (m * dx * dx);
        let diag: Vec<f64> = grid.points().map(|x| kin + potential.value(x)).collect();
        let off = -0.5 * kin;
        let a = Complex64::new(0.0, 0.5 * dt / hbar);
        let lower = a * off;
        let n = grid.n_points;
        let mut c_prime = vec![Complex64::new(0.0, 0.0); n];
        let mut denom = vec![Complex64::new(0.0, 0.0); n];
        for j in 0..n {
            let b = Complex64::new(1.0, 0.0) + a * diag[j];
            denom[j] = if j == 0 { b } else { b - lower * c_prime[j - 1] };
            c_prime[j] = lower / denom[j];
        }
        Ok(Propagator {
            grid: grid.clone(),
            dt,
            hbar,
            diag,
            off,
            c_prime,
            denom,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    fn apply_h(&self, psi: &[Complex64], out: &mut [Complex64]) {
        let n = psi.len();
        for j in 0..n {
            let mut v = psi[j] * self.diag[j];
            if j > 0 {
                v += psi[j - 1] * self.off;
            }
            if j + 1 < n {
                v += psi[j + 1] * self.off;
            }
            out[j] = v;
        }
    }

    pub fn step(&self, psi: &mut WaveFunction) {
        let n = psi.amplitudes.len();
        let a = Complex64::new(0.0, 0.5 * self.dt / self.hbar);
        let lower = a * self.off;
        let mut hpsi = vec![Complex64::new(0.0, 0.0); n];
        self.apply_h(&psi.amplitudes, &mut hpsi);
        let rhs: Vec<Complex64> = psi.amplitudes.iter().zip(&hpsi).map(|(p, h)| p - a * h).collect();
        let amps = &mut psi.amplitudes;
        amps[0] = rhs[0] / self.denom[0];
        for j in 1..n {
            amps[j] = (rhs[j] - lower * amps[j - 1]) / self.denom[j];
        }
        for j in (0..n - 1).rev() {
            let next = amps[j + 1];
            amps[j] -= self.c_prime[j] * next;
        }
    }

    /// Leading phase error `θ³/12` of the Cayley form with
    /// `θ = dt ‖(H − ⟨H⟩)ψ‖ / ħ`.
    pub fn local_error_estimate(&self, psi: &WaveFunction) -> f64 {
        let n = psi.amplitudes.len();
        let mut hpsi = vec![Complex64::new(0.0, 0.0); n];
        self.apply_h(&psi.amplitudes, &mut hpsi);
        let norm: f64 = psi.amplitudes.iter().map(|a| a.norm_sqr()).sum();
        let mean: f64 = psi
            .amplitudes
            .iter()
            .zip(&hpsi)
            .map(|(p, h)| (p.conj() * h).re)
            .sum::<f64>()
            / norm;
        let spread: f64 = psi
            .amplitudes
            .iter()
            .zip(&hpsi)
            .map(|(p, h)| (h - p * mean).norm_sqr())
            .sum::<f64>()
            / norm;
        (self.dt * spread.sqrt() / self.hbar).powi(3) / 12.0
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }
}

/// Diagnostics of an evolution run.
#[derive(Clone, Debug, Default, Serialize)]
pub struct EvolutionReport {
    pub steps: usize,
    pub max_norm_drift: f64,
    pub min_boundary_clearance: f64,
    pub boundary_contact: bool,
    pub local_error_estimate: f64,
}

/// Steps between support checks.
const MONITOR_EVERY: usize = 10;

/// Evolve `psi` in place for `steps` steps, calling `observe(k, ψ)` every
/// `sample_every` steps (and at step 0).
pub fn evolve_observed(
    prop: &Propagator,
    psi: &mut WaveFunction,
    steps: usize,
    sample_every: usize,
    mut observe: impl FnMut(usize, &WaveFunction) -> Result<()>,
) -> Result<EvolutionReport> {
    if psi.grid != prop.grid {
        return Err(Error::InvalidParameter("wavefunction and propagator grids differ".into()));
    }
    let sample_every = sample_every.max(1);
    let norm0 = psi.norm();
    let mut report = EvolutionReport {
        min_boundary_clearance: psi.boundary_clearance(),
        local_error_estimate: prop.local_error_estimate(psi),
        ..Default::default()
    };
    if report.local_error_estimate > STEP_ERROR_WARNING {
        log::warn!(
            "dt = {} gives a local error estimate {:.2e} per step",
            prop.dt,
            report.local_error_estimate
        );
    }
    observe(0, psi)?;
    for k in 1..=steps {
        prop.step(psi);
        if k % MONITOR_EVERY == 0 || k == steps {
            report.max_norm_drift = report.max_norm_drift.max((psi.norm() - norm0).abs());
            let clearance = psi.boundary_clearance();
            report.min_boundary_clearance = report.min_boundary_clearance.min(clearance);
            if clearance < 0.0 && !report.boundary_contact {
                log::warn!("wavepacket within 5σ of the grid walls at step {k}");
                report.boundary_contact = true;
            }
        }
        if k % sample_every == 0 {
            observe(k, psi)?;
        }
    }
    report.steps = steps;
    Ok(report)
}

/// Evolve a copy of `psi0` under `potential` for `steps` steps of `dt`.
pub fn evolve(
    potential: &dyn Potential,
    psi0: &WaveFunction,
    dt: f64,
    steps: usize,
    hbar: f64,
) -> Result<(WaveFunction, EvolutionReport)> {
    let prop = Propagator::new(&psi0.grid, potential, dt, hbar)?;
    let mut psi = psi0.clone();
    let report = evolve_observed(&prop, &mut psi, steps, usize::MAX, |_, _| Ok(()))?;
    Ok((psi, report))
}

/// Moments recovered from a wavefunction.
#[derive(Clone, Debug)]
pub struct Extraction {
    pub state: MomentState,
    /// Largest imaginary part left over after Weyl symmetrization.
    pub imaginary_residue: f64,
}

/// `out = (−iħ D − p) ψ` with the centered first-derivative stencil.
fn apply_centered_momentum(psi: &[Complex64], p: f64, hbar: f64, dx: f64, out: &mut [Complex64]) {
    let n = psi.len();
    let zero = Complex64::new(0.0, 0.0);
    let c = Complex64::new(0.0, -hbar / (2.0 * dx));
    for j in 0..n {
        let right = if j + 1 < n { psi[j + 1] } else { zero };
        let left = if j > 0 { psi[j - 1] } else { zero };
        out[j] = c * (right - left) - psi[j] * p;
    }
}

/// Central moments up to `order` of the state `psi`.
///
/// Normal-ordered `⟨(q̂−q)^j (p̂−p)^k⟩` come from repeated centered
/// differences; each Weyl-ordered moment is then the corresponding
/// combination from [`weyl_symmetrize`] evaluated at numeric `ħ`.
pub fn moments_from_wavefunction(psi: &WaveFunction, order: u32, hbar: f64) -> Result<Extraction> {
    if !(2..=MAX_EXTRACTION_ORDER).contains(&order) {
        return Err(Error::InvalidParameter(format!(
            "extraction order must lie in 2..={MAX_EXTRACTION_ORDER}, got {order}"
        )));
    }
    let grid = &psi.grid;
    let dx = grid.dx();
    let amps = &psi.amplitudes;
    let n = amps.len();
    let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
    let (q, _) = psi.position_spread();

    let mut d = vec![Complex64::new(0.0, 0.0); n];
    apply_centered_momentum(amps, 0.0, hbar, dx, &mut d);
    let p = amps.iter().zip(&d).map(|(a, b)| (a.conj() * b).re).sum::<f64>() / norm;

    // powers[k] = (p̂ − p)^k ψ
    let mut powers = vec![amps.clone()];
    for k in 1..=order as usize {
        let mut next = vec![Complex64::new(0.0, 0.0); n];
        apply_centered_momentum(&powers[k - 1], p, hbar, dx, &mut next);
        powers.push(next);
    }
    let normal = |j: u32, k: u32| -> Complex64 {
        powers[k as usize]
            .iter()
            .zip(amps)
            .enumerate()
            .map(|(i, (pk, a))| a.conj() * pk * (grid.x(i) - q).powi(j as i32))
            .sum::<Complex64>()
            / norm
    };

    let mut state = MomentState::new(q, p, order, hbar)?;
    let mut residue: f64 = 0.0;
    for idx in state.indices().iter() {
        let w = weyl_symmetrize(idx);
        let mut value = Complex64::new(0.0, 0.0);
        for (m, c) in w.terms() {
            let (j, k) = m.pair(0);
            value += c.to_complex(hbar) * normal(j, k);
        }
        residue = residue.max(value.im.abs());
        state.set(idx, value.re)?;
    }
    if residue > RESIDUE_WARNING {
        log::warn!("moment extraction leaves an imaginary residue of {residue:.2e}");
    }
    Ok(Extraction {
        state,
        imaginary_residue: residue,
    })
}

/// `Δ(q^a p^b)` of an extraction, for convenience in comparisons.
pub fn extracted_moment(e: &Extraction, a: u32, b: u32) -> Result<f64> {
    e.state
        .get(&MomentIndex::single(a, b))
        .ok_or_else(|| Error::MissingMoment(MomentIndex::single(a, b).label(1)))
}
