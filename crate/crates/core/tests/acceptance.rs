//! Acceptance criteria, one line each. Exits nonzero if any criterion fails.

use std::collections::HashMap;
use std::f64::consts::{FRAC_PI_3, TAU};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use quasiclassical::adiabatic::{adiabatic_energy, s0_of_q, AdiabaticModel, AdiabaticOrder};
use quasiclassical::casimir_darboux::{free_particle_s, lift_to_plane, to_darboux, AngleField, DarbouxState1D};
use quasiclassical::dynamics::{
    init_gaussian, init_gaussian_with_casimir, integrate, solve, Admissibility, GaussianCasimir,
    IntegratorConfig,
};
use quasiclassical::effective_hamiltonian::{build_heff, equations_of_motion, PolynomialPotential};
use quasiclassical::moment_algebra::{build_bracket_table, closed_form_bracket, exact_poisson_bracket};
use quasiclassical::scenarios::{
    cubic_barrier, k_spread, linear_fit_residual, oracle_comparison, spherical_limit_study,
    tunneling_run, tunneling_sweep, Classification, OracleSetup, TunnelingSetup, CUBIC_ENERGY,
    CUBIC_LAMBDA, LIMIT_K_SPREAD,
};
use quasiclassical::schrodinger_oracle::{evolve, gaussian_wavepacket, Grid};
use quasiclassical::weyl_algebra::bracket_oracle;
use quasiclassical::{MomentIndex, MomentPolynomial, Rational};

struct Verdict {
    passed: bool,
    detail: String,
}

fn verdict(passed: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        passed,
        detail: detail.into(),
    }
}

fn d(a: u32, b: u32) -> MomentIndex {
    MomentIndex::single(a, b)
}

fn moment(m: &MomentIndex) -> MomentPolynomial {
    MomentPolynomial::moment(m)
}

fn bracket_oracle_equivalence() -> Verdict {
    let block = [
        (d(2, 0), d(0, 2), moment(&d(1, 1)).scale(&Rational::from_integer(4.into()))),
        (d(2, 0), d(1, 1), moment(&d(2, 0)).scale(&Rational::from_integer(2.into()))),
        (d(1, 1), d(0, 2), moment(&d(0, 2)).scale(&Rational::from_integer(2.into()))),
    ];
    for (a, b, expected) in &block {
        if closed_form_bracket(a, b) != *expected || bracket_oracle(a, b).ok().as_ref() != Some(expected) {
            return verdict(false, format!("second-order block entry {{{a:?}, {b:?}}} wrong"));
        }
    }
    let mut counts = Vec::new();
    for (order, pairs) in [(6u32, 1usize), (4, 2)] {
        let idx = MomentIndex::range(2, order, pairs);
        let jobs: Vec<(usize, usize)> = (0..idx.len())
            .flat_map(|i| (i..idx.len()).map(move |j| (i, j)))
            .collect();
        let bad: Vec<String> = jobs
            .par_iter()
            .filter_map(|&(i, j)| {
                let (a, b) = (&idx[i], &idx[j]);
                match bracket_oracle(a, b) {
                    Ok(exact) if exact == closed_form_bracket(a, b) => None,
                    Ok(_) => Some(format!("{a:?},{b:?} differ")),
                    Err(e) => Some(format!("{a:?},{b:?}: {e}")),
                }
            })
            .collect();
        if let Some(first) = bad.first() {
            return verdict(false, format!("{} mismatches, first {first}", bad.len()));
        }
        counts.push(jobs.len());
    }
    verdict(
        true,
        format!(
            "{} single-pair (order <= 6) and {} two-pair (order <= 4) entries equal the oracle",
            counts[0], counts[1]
        ),
    )
}

fn jacobi_identity() -> Verdict {
    let mut total = 0;
    for pairs in [1usize, 2] {
        let idx = MomentIndex::range(2, 4, pairs);
        let n = idx.len();
        let inner: HashMap<(usize, usize), MomentPolynomial> = (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .collect::<Vec<_>>()
            .into_par_iter()
            .map(|(i, j)| ((i, j), exact_poisson_bracket(&moment(&idx[i]), &moment(&idx[j]))))
            .collect();
        let triples: Vec<(usize, usize, usize)> = (0..n)
            .flat_map(|i| (i..n).flat_map(move |j| (j..n).map(move |k| (i, j, k))))
            .collect();
        let failures = triples
            .par_iter()
            .filter(|&&(i, j, k)| {
                let term = |a: usize, b: usize, c: usize| exact_poisson_bracket(&moment(&idx[a]), &inner[&(b, c)]);
                let sum = term(i, j, k) + term(j, k, i) + term(k, i, j);
                !sum.is_zero()
            })
            .count();
        if failures > 0 {
            return verdict(false, format!("{failures} triples violate Jacobi with {pairs} pair(s)"));
        }
        total += triples.len();
    }
    verdict(true, format!("{total} moment triples of order <= 4 (one and two pairs) satisfy Jacobi exactly"))
}

fn free_field() -> quasiclassical::effective_hamiltonian::MomentField {
    let h = build_heff(PolynomialPotential::free(1.0).unwrap(), 2).unwrap();
    equations_of_motion(&h, &build_bracket_table(2, 1).unwrap()).unwrap()
}

fn free_particle_spreading() -> Verdict {
    let field = free_field();
    let s = init_gaussian(0.0, 0.0, 1.0, 0.0, 1.0, 2, GaussianCasimir::HbarSquaredQuarter).unwrap();
    let cfg = IntegratorConfig::default().with_samples(0.01);
    let traj = integrate(&field, &s, (0.0, 10.0), &cfg).unwrap();
    let worst = traj
        .times
        .iter()
        .zip(&traj.states)
        .map(|(t, st)| {
            let exact = free_particle_s(*t, 1.0, 0.25, 1.0);
            (st.moments()[0].sqrt() - exact).abs() / exact
        })
        .fold(0.0, f64::max);
    verdict(
        worst <= 1e-8,
        format!("max relative error of s(t) on [0, 10] is {worst:.3e} (<= 1e-8)"),
    )
}

fn casimir_conservation() -> Verdict {
    // the third case is outside the scenario spans and only reported
    let cases: Vec<(&str, PolynomialPotential, f64, f64, f64, f64)> = vec![
        ("free", PolynomialPotential::free(1.0).unwrap(), 0.0, 1.0, 0.0, 10.0),
        ("harmonic", PolynomialPotential::harmonic(1.0, 1.0).unwrap(), 1.0, 1.0, 0.0, TAU),
        (
            "linear+quadratic",
            PolynomialPotential::new(vec![0.0, 0.3, 0.8], 1.5).unwrap(),
            -0.5,
            0.7,
            0.4,
            20.0,
        ),
    ];
    let mut worst: f64 = 0.0;
    let mut parts = Vec::new();
    for (name, pot, q0, sigma, p_s0, t_end) in cases {
        let h = build_heff(pot, 2).unwrap();
        let f = equations_of_motion(&h, &build_bracket_table(2, 1).unwrap()).unwrap();
        let s = init_gaussian(q0, 0.2, sigma, p_s0, 1.0, 2, GaussianCasimir::HbarSquaredQuarter).unwrap();
        let traj = integrate(&f, &s, (0.0, t_end), &IntegratorConfig::default()).unwrap();
        let c0 = s.casimir();
        let drift = traj
            .states
            .iter()
            .map(|x| (x.casimir() - c0).abs() / c0)
            .fold(0.0, f64::max);
        if name == "linear+quadratic" {
            println!("  note: linear+quadratic potential over t = 20 drifts {drift:.1e}");
            continue;
        }
        worst = worst.max(drift);
        parts.push(format!("{name} {drift:.1e}"));
    }
    verdict(
        worst <= 1e-9,
        format!("max |C(t)-C(0)|/C(0) over the scenario spans: {} (<= 1e-9)", parts.join(", ")),
    )
}

fn oracle_cross_validation() -> Verdict {
    let base = |pot: PolynomialPotential, q0: f64, lo: f64, hi: f64, t_end: f64| OracleSetup {
        potential: Arc::new(pot),
        q0,
        p0: 0.0,
        sigma: 1.0,
        p_s0: 0.0,
        hbar: 1.0,
        grid: Grid::new(lo, hi, 4096).unwrap(),
        dt: 1e-3,
        t_end,
        sample_every: 100,
    };
    let t0 = Instant::now();
    let harmonic = oracle_comparison(&base(PolynomialPotential::harmonic(1.0, 1.0).unwrap(), 0.5, -8.0, 8.0, TAU)).unwrap();
    let t_h = t0.elapsed();
    let t1 = Instant::now();
    let free = oracle_comparison(&base(PolynomialPotential::free(1.0).unwrap(), 0.0, -30.0, 30.0, 5.0)).unwrap();
    let t_f = t1.elapsed();
    let spread = free
        .times
        .iter()
        .zip(&free.oracle)
        .map(|(t, s)| {
            let exact = free_particle_s(*t, 1.0, 0.25, 1.0);
            (s.moments()[0].sqrt() - exact).abs() / exact
        })
        .fold(0.0, f64::max);
    let dh = harmonic.max_deviation();
    let limit = Duration::from_secs(120);
    let ok = dh <= 1e-4
        && spread <= 1e-4
        && t_h <= limit
        && t_f <= limit
        && !harmonic.report.boundary_contact
        && !free.report.boundary_contact;
    verdict(
        ok,
        format!(
            "harmonic second moments {dh:.2e}, free s(t) {spread:.2e} (<= 1e-4); runs {:.1} s and {:.1} s",
            t_h.as_secs_f64(),
            t_f.as_secs_f64()
        ),
    )
}

fn centrifugal_lift() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst: f64 = 0.0;
    for _ in 0..10_000 {
        let dstate = DarbouxState1D {
            s: rng.gen_range(0.05..20.0),
            p_s: rng.gen_range(-10.0..10.0),
            c: rng.gen_range(0.0..25.0),
        };
        let m = rng.gen_range(0.1..10.0);
        let phi = rng.gen_range(0.0..TAU);
        let plane = lift_to_plane(&dstate, phi).unwrap();
        let expected = dstate.p_s * dstate.p_s / (2.0 * m) + dstate.c / (2.0 * m * dstate.s * dstate.s);
        worst = worst.max((plane.kinetic_energy(m) - expected).abs() / expected);
    }

    let field = free_field();
    let s = init_gaussian(0.0, 0.0, 1.0, 0.0, 1.0, 2, GaussianCasimir::HbarSquaredQuarter).unwrap();
    let mut y0 = s.to_vec();
    y0.push(0.0);
    let sol = solve(&AngleField { inner: &field }, &y0, (0.0, 10.0), &IntegratorConfig::default(), None).unwrap();
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut p_phi: f64 = 0.0;
    for y in &sol.states {
        let p = lift_to_plane(&to_darboux(y[2], y[3], y[4]).unwrap(), y[5]).unwrap();
        xs.push(p.x);
        ys.push(p.y);
        p_phi = p_phi.max((p.angular_momentum() - 0.5).abs());
    }
    let residual = linear_fit_residual(&sol.times, &xs).max(linear_fit_residual(&sol.times, &ys));
    verdict(
        worst <= 1e-12 && residual <= 1e-8 && p_phi <= 1e-9,
        format!(
            "energy identity {worst:.1e} on 1e4 states (<= 1e-12); line residual {residual:.1e} (<= 1e-8); p_phi drift {p_phi:.1e}"
        ),
    )
}

fn tunneling_reproduction() -> Verdict {
    let t0 = Instant::now();
    let setup = TunnelingSetup::new(CUBIC_LAMBDA, 1.0, 1.0, 0.25);
    let cfg = IntegratorConfig::default();
    let (_, v_b) = cubic_barrier(CUBIC_LAMBDA);
    let run = tunneling_run(&setup, 0.0, CUBIC_ENERGY, &cfg).unwrap();
    let drift = run.trajectory.energy_drift();
    let bypass = run.classification == Classification::Bypassed && CUBIC_ENERGY < v_b && drift <= 1e-8;

    let axis = |a: f64, b: f64| (0..32).map(|i| a + (b - a) * i as f64 / 31.0).collect::<Vec<_>>();
    let cells = tunneling_sweep(&setup, &axis(-1.0, 1.5), &axis(0.4, 2.4), &cfg);
    let trapped = cells.iter().filter(|c| c.classification == Classification::Trapped).count();
    let below = cells
        .iter()
        .filter(|c| c.classification == Classification::Bypassed && c.energy < v_b)
        .count();
    let elapsed = t0.elapsed();
    verdict(
        bypass && trapped > 0 && elapsed <= Duration::from_secs(300),
        format!(
            "E = {CUBIC_ENERGY} < V_b = {v_b:.3} crosses at t = {:.2} with energy drift {drift:.1e}; 32x32 grid has {trapped} trapped and {below} sub-barrier bypass cells ({:.1} s)",
            run.t_cross.unwrap_or(f64::NAN),
            elapsed.as_secs_f64()
        ),
    )
}

fn two_dof_limit() -> Verdict {
    let eps = [1e-1, 1e-2, 1e-3];
    let (alpha, p_alpha, beta, p_beta, c1, c2) = (0.4, 0.3, FRAC_PI_3, 1.0, 2.0, 0.5);
    let rows = spherical_limit_study(alpha, p_alpha, beta, p_beta, c1, c2, &eps);
    let spread = k_spread(&rows);
    let cells: Vec<String> = rows
        .iter()
        .map(|r| match (&r.k, &r.error) {
            (Some(k), _) => format!("eps {:.0e}: K {k:.3e}", r.epsilon),
            (_, Some(e)) => format!("eps {:.0e}: {e}", r.epsilon),
            _ => unreachable!(),
        })
        .collect();

    // same limit with p_alpha = 0, where U1 is defined for every eps
    let rows0 = spherical_limit_study(alpha, 0.0, beta, p_beta, c1, c2, &eps);
    let quad: Vec<String> = rows0
        .iter()
        .map(|r| match r.deviation {
            Some(dev) => format!("{:.3e}", dev / (r.epsilon * r.epsilon)),
            None => "undefined".into(),
        })
        .collect();
    println!(
        "  note: with p_alpha = 0 the deviation divided by eps^2 is [{}]; dev/eps is not constant",
        quad.join(", ")
    );
    verdict(
        spread <= LIMIT_K_SPREAD,
        format!("K spread {spread:.3e} (<= {LIMIT_K_SPREAD}); {}", cells.join("; ")),
    )
}

fn adiabatic_ground_state() -> Verdict {
    let mut worst_w: f64 = 0.0;
    let mut worst_e: f64 = 0.0;
    for (m, omega) in [(1.0, 1.0), (2.0, 0.5), (0.7, 3.0)] {
        let hbar = 1.0;
        let pot = PolynomialPotential::harmonic(m, omega).unwrap();
        let model = AdiabaticModel::new(Arc::new(pot.clone()), 0.25 * hbar * hbar, AdiabaticOrder::Zero).unwrap();
        for q in [-1.0, 0.0, 0.8] {
            let s0 = s0_of_q(&model, q).unwrap();
            worst_w = worst_w.max((s0 - (hbar / (2.0 * m * omega)).sqrt()).abs());
            let shift = adiabatic_energy(&model, q, 0.0).unwrap() - 0.5 * m * omega * omega * q * q;
            worst_e = worst_e.max((shift - 0.5 * hbar * omega).abs());
        }
    }
    // the minimal Gaussian of width s0 is stationary under the Schrödinger evolution
    let g = Grid::new(-8.0, 8.0, 2048).unwrap();
    let psi = gaussian_wavepacket(&g, 0.0, 0.0, 0.5f64.sqrt(), 1.0).unwrap();
    let (out, _) = evolve(&PolynomialPotential::harmonic(1.0, 1.0).unwrap(), &psi, 1e-3, 2000, 1.0).unwrap();
    let oracle_width = out.position_spread().1;
    verdict(
        worst_w <= 1e-6 && worst_e <= 1e-6,
        format!(
            "width error {worst_w:.1e}, shift error {worst_e:.1e} (<= 1e-6); wavefunction width after t = 2: {oracle_width:.6} vs {:.6}",
            0.5f64.sqrt()
        ),
    )
}

fn classical_mode() -> Verdict {
    let field = free_field();
    let s = init_gaussian_with_casimir(0.0, 1.0, 1.3, 0.0, 1.0, 2, 0.0)
        .unwrap()
        .with_mode(Admissibility::Classical);
    let admissible = s.check_admissible(0.0).is_ok();
    let traj = integrate(&field, &s, (0.0, 10.0), &IntegratorConfig::default().with_samples(0.01)).unwrap();
    let s0 = 1.3;
    let worst = traj
        .states
        .iter()
        .map(|x| (x.moments()[0].sqrt() - s0).abs())
        .fold(0.0, f64::max);
    let quantum = free_particle_s(10.0, 1.0, 0.25, 1.0);
    verdict(
        admissible && worst <= 1e-10,
        format!("C = 0 keeps s(t) = s(0) to {worst:.1e} (<= 1e-10); the quantum state spreads to s(10) = {quantum:.3}"),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Verdict); 10] = [
        ("bracket oracle equivalence", bracket_oracle_equivalence),
        ("Jacobi identity", jacobi_identity),
        ("free particle vs s(t)", free_particle_spreading),
        ("Casimir conservation", casimir_conservation),
        ("oracle cross-validation", oracle_cross_validation),
        ("centrifugal-lift identity", centrifugal_lift),
        ("tunneling reproduction", tunneling_reproduction),
        ("two-DOF limit", two_dof_limit),
        ("adiabatic ground state", adiabatic_ground_state),
        ("classical-mode contrast", classical_mode),
    ];
    let filter: Option<usize> = std::env::args().skip(1).find_map(|a| a.parse().ok());
    let mut failed = 0;
    for (k, (name, f)) in criteria.iter().enumerate() {
        let n = k + 1;
        if filter.is_some_and(|x| x != n) {
            continue;
        }
        let t = Instant::now();
        let v = f();
        let tag = if v.passed { "PASS" } else { "FAIL" };
        println!(
            "ACCEPTANCE {n:>2} {tag} {name}: {} [{:.2} s]",
            v.detail,
            t.elapsed().as_secs_f64()
        );
        if !v.passed {
            failed += 1;
        }
    }
    if failed == 0 {
        println!("acceptance: all criteria pass");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {failed} criterion(s) failed");
        ExitCode::FAILURE
    }
}
