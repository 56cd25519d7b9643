use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Autonomous or time-dependent first-order system `ẏ = f(t, y)`.
pub trait VectorField: Sync {
    fn dim(&self) -> usize;
    fn eval(&self, t: f64, y: &[f64], dy: &mut [f64]);
}

/// The zero field.
#[derive(Clone, Copy, Debug)]
pub struct ZeroField(pub usize);

impl VectorField for ZeroField {
    fn dim(&self) -> usize {
        self.0
    }
    fn eval(&self, _t: f64, _y: &[f64], dy: &mut [f64]) {
        dy.fill(0.0);
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "kebab-case")]
pub enum Method {
    /// Classical fourth-order Runge–Kutta with a fixed step.
    Rk4 { step: f64 },
    /// Dormand–Prince 5(4) with error control on `atol + rtol·|y|`.
    Dopri5 { rtol: f64, atol: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntegratorConfig {
    #[serde(flatten)]
    pub method: Method,
    pub max_steps: u64,
    /// Spacing of recorded samples; the endpoint is always recorded.
    pub sample_interval: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig {
            method: Method::Dopri5 {
                rtol: 1e-10,
                atol: 1e-12,
            },
            max_steps: 10_000_000,
            sample_interval: 0.1,
        }
    }
}

impl IntegratorConfig {
    pub fn rk4(step: f64) -> Self {
        IntegratorConfig {
            method: Method::Rk4 { step },
            ..Default::default()
        }
    }

    pub fn dopri5(rtol: f64, atol: f64) -> Self {
        IntegratorConfig {
            method: Method::Dopri5 { rtol, atol },
            ..Default::default()
        }
    }

    pub fn with_samples(mut self, interval: f64) -> Self {
        self.sample_interval = interval;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str, v: f64| {
            Err(Error::InvalidParameter(format!("{what} must be positive, got {v}")))
        };
        match self.method {
            Method::Rk4 { step } if !(step > 0.0 && step.is_finite()) => return bad("step", step),
            Method::Dopri5 { rtol, .. } if !(rtol > 0.0 && rtol.is_finite()) => {
                return bad("rtol", rtol)
            }
            Method::Dopri5 { atol, .. } if !(atol >= 0.0 && atol.is_finite()) => {
                return bad("atol", atol)
            }
            _ => {}
        }
        if !(self.sample_interval > 0.0 && self.sample_interval.is_finite()) {
            return bad("sample interval", self.sample_interval);
        }
        if self.max_steps == 0 {
            return Err(Error::InvalidParameter("max_steps must be positive".into()));
        }
        Ok(())
    }
}

/// Raw solution samples.
#[derive(Clone, Debug, Default)]
pub struct Solution {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    /// Set when the stop predicate fired before the end of the span.
    pub stopped: bool,
    pub steps: u64,
}

/// Integrate from `t0` to `t1`, sampling every `cfg.sample_interval` and at
/// `t1`. Steps never straddle a sample time. If `stop` returns true for an
/// accepted state, that state is recorded and integration ends.
pub fn solve(
    field: &dyn VectorField,
    y0: &[f64],
    (t0, t1): (f64, f64),
    cfg: &IntegratorConfig,
    mut stop: Option<&mut dyn FnMut(f64, &[f64]) -> bool>,
) -> Result<Solution> {
    cfg.validate()?;
    if !(t1 >= t0) {
        return Err(Error::InvalidParameter(format!("empty time span [{t0}, {t1}]")));
    }
    let n = field.dim();
    if y0.len() != n {
        return Err(Error::InvalidParameter(format!(
            "state has {} components, field expects {n}",
            y0.len()
        )));
    }
    let mut sol = Solution {
        times: vec![t0],
        states: vec![y0.to_vec()],
        ..Default::default()
    };
    let n_samples = ((t1 - t0) / cfg.sample_interval).round().max(1.0) as u64;
    let sample_at = |k: u64| {
        if k >= n_samples {
            t1
        } else {
            t0 + k as f64 * cfg.sample_interval
        }
    };

    let mut stepper = Stepper::new(n, cfg.method);
    let mut t = t0;
    let mut y = y0.to_vec();
    let mut next = 1u64;
    while next <= n_samples {
        let target = sample_at(next);
        while t < target {
            if sol.steps >= cfg.max_steps {
                return Err(Error::StepsExhausted { t, steps: sol.steps });
            }
            let (t_new, accepted) = stepper.step(field, t, &mut y, target)?;
            sol.steps += 1;
            if !accepted {
                continue;
            }
            if y.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite { t });
            }
            t = t_new;
            if let Some(f) = stop.as_mut() {
                if f(t, &y) {
                    sol.times.push(t);
                    sol.states.push(y.clone());
                    sol.stopped = true;
                    return Ok(sol);
                }
            }
        }
        sol.times.push(target);
        sol.states.push(y.clone());
        next += 1;
    }
    Ok(sol)
}

struct Stepper {
    method: Method,
    k: [Vec<f64>; 7],
    tmp: Vec<f64>,
    y_new: Vec<f64>,
    h: Option<f64>,
    fsal: bool,
}

// Dormand–Prince 5(4) tableau
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

impl Stepper {
    fn new(n: usize, method: Method) -> Self {
        Stepper {
            method,
            k: std::array::from_fn(|_| vec![0.0; n]),
            tmp: vec![0.0; n],
            y_new: vec![0.0; n],
            h: None,
            fsal: false,
        }
    }

    /// One attempted step towards at most `t_max`. Returns the new time and
    /// whether the step was accepted (`y` is updated only then).
    fn step(
        &mut self,
        f: &dyn VectorField,
        t: f64,
        y: &mut [f64],
        t_max: f64,
    ) -> Result<(f64, bool)> {
        match self.method {
            Method::Rk4 { step } => {
                let h = step.min(t_max - t);
                // land exactly on t_max when the remainder is tiny
                let h = if t_max - (t + h) < 1e-12 * step { t_max - t } else { h };
                self.rk4(f, t, y, h);
                Ok((if h == t_max - t { t_max } else { t + h }, true))
            }
            Method::Dopri5 { rtol, atol } => self.dopri(f, t, y, t_max, rtol, atol),
        }
    }

    fn rk4(&mut self, f: &dyn VectorField, t: f64, y: &mut [f64], h: f64) {
        let n = y.len();
        let [k1, k2, k3, k4, ..] = &mut self.k;
        f.eval(t, y, k1);
        for i in 0..n {
            self.tmp[i] = y[i] + 0.5 * h * k1[i];
        }
        f.eval(t + 0.5 * h, &self.tmp, k2);
        for i in 0..n {
            self.tmp[i] = y[i] + 0.5 * h * k2[i];
        }
        f.eval(t + 0.5 * h, &self.tmp, k3);
        for i in 0..n {
            self.tmp[i] = y[i] + h * k3[i];
        }
        f.eval(t + h, &self.tmp, k4);
        for i in 0..n {
            y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }

    fn dopri(
        &mut self,
        f: &dyn VectorField,
        t: f64,
        y: &mut [f64],
        t_max: f64,
        rtol: f64,
        atol: f64,
    ) -> Result<(f64, bool)> {
        let n = y.len();
        if !self.fsal {
            f.eval(t, y, &mut self.k[0]);
            self.fsal = true;
        }
        let proposal = match self.h {
            Some(h) => h,
            None => initial_step(&self.k[0], y, rtol, atol),
        };
        let remaining = t_max - t;
        let clipped = proposal >= remaining;
        let h = if clipped { remaining } else { proposal };
        for s in 1..7 {
            for i in 0..n {
                let mut acc = y[i];
                for j in 0..s {
                    acc += h * A[s][j] * self.k[j][i];
                }
                self.tmp[i] = acc;
            }
            f.eval(t + C[s] * h, &self.tmp, &mut self.k[s]);
        }
        // stage 7 was evaluated at the 5th-order solution
        let mut err2 = 0.0;
        for i in 0..n {
            let mut y5 = y[i];
            let mut e = 0.0;
            for s in 0..7 {
                y5 += h * B5[s] * self.k[s][i];
                e += h * (B5[s] - B4[s]) * self.k[s][i];
            }
            self.y_new[i] = y5;
            let sc = atol + rtol * y[i].abs().max(y5.abs());
            err2 += (e / sc).powi(2);
        }
        let err = (err2 / n as f64).sqrt();
        if !err.is_finite() {
            self.h = Some(h * 0.2);
            if h * 0.2 < 1e-14 * t.abs().max(1.0) {
                return Err(Error::NonFinite { t });
            }
            return Ok((t, false));
        }
        let factor = if err == 0.0 {
            5.0
        } else {
            (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
        };
        if err <= 1.0 {
            y.copy_from_slice(&self.y_new);
            let k7 = std::mem::take(&mut self.k[6]);
            self.k[0] = k7;
            self.k[6] = vec![0.0; n];
            // a step shortened to hit a sample time does not shrink the proposal
            self.h = Some(if clipped { (h * factor).max(proposal) } else { h * factor });
            let t_new = if clipped { t_max } else { t + h };
            Ok((t_new, true))
        } else {
            self.h = Some(h * factor);
            if h * factor < 1e-14 * t.abs().max(1.0) {
                return Err(Error::NonFinite { t });
            }
            Ok((t, false))
        }
    }
}

fn initial_step(f0: &[f64], y0: &[f64], rtol: f64, atol: f64) -> f64 {
    let n = y0.len() as f64;
    let mut d0 = 0.0;
    let mut d1 = 0.0;
    for (y, f) in y0.iter().zip(f0) {
        let sc = atol + rtol * y.abs();
        d0 += (y / sc).powi(2);
        d1 += (f / sc).powi(2);
    }
    let (d0, d1) = ((d0 / n).sqrt(), (d1 / n).sqrt());
    let h = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    h.min(0.1)
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Oscillator;
    impl VectorField for Oscillator {
        fn dim(&self) -> usize {
            2
        }
        fn eval(&self, _t: f64, y: &[f64], dy: &mut [f64]) {
            dy[0] = y[1];
            dy[1] = -y[0];
        }
    }

    fn rk4_error(h: f64) -> f64 {
        let cfg = IntegratorConfig::rk4(h).with_samples(1.0);
        let s = solve(&Oscillator, &[1.0, 0.0], (0.0, 5.0), &cfg, None).unwrap();
        (s.states.last().unwrap()[0] - 5f64.cos()).abs()
    }

    #[test]
    fn rk4_is_fourth_order() {
        let ratio = rk4_error(0.1) / rk4_error(0.05);
        assert!((ratio - 16.0).abs() < 1.0, "{ratio}");
    }

    #[test]
    fn dopri_meets_tolerance() {
        let cfg = IntegratorConfig::dopri5(1e-10, 1e-12).with_samples(0.5);
        let s = solve(&Oscillator, &[1.0, 0.0], (0.0, 20.0), &cfg, None).unwrap();
        assert_eq!(s.times.len(), 41);
        assert_eq!(*s.times.last().unwrap(), 20.0);
        for (t, y) in s.times.iter().zip(&s.states) {
            assert!((y[0] - t.cos()).abs() < 1e-8, "t={t}");
        }
    }

    #[test]
    fn zero_field_is_stationary() {
        let cfg = IntegratorConfig::default();
        let y0 = [1.0, 2.0, 3.0];
        let s = solve(&ZeroField(3), &y0, (0.0, 1.0), &cfg, None).unwrap();
        assert!(s.states.iter().all(|y| y == &y0));
    }

    #[test]
    fn step_budget() {
        let cfg = IntegratorConfig {
            max_steps: 3,
            ..IntegratorConfig::rk4(0.01)
        };
        assert!(matches!(
            solve(&Oscillator, &[1.0, 0.0], (0.0, 1.0), &cfg, None),
            Err(Error::StepsExhausted { .. })
        ));
    }

    #[test]
    fn blow_up_is_reported() {
        struct Blow;
        impl VectorField for Blow {
            fn dim(&self) -> usize {
                1
            }
            fn eval(&self, _t: f64, y: &[f64], dy: &mut [f64]) {
                dy[0] = y[0] * y[0];
            }
        }
        let cfg = IntegratorConfig::rk4(0.01);
        assert!(matches!(
            solve(&Blow, &[1.0], (0.0, 2.0), &cfg, None),
            Err(Error::NonFinite { .. })
        ));
    }

    #[test]
    fn stop_predicate() {
        let cfg = IntegratorConfig::rk4(0.01);
        let mut stop = |_t: f64, y: &[f64]| y[0] < 0.0;
        let s = solve(&Oscillator, &[1.0, 0.0], (0.0, 10.0), &cfg, Some(&mut stop)).unwrap();
        assert!(s.stopped);
        assert!((s.times.last().unwrap() - std::f64::consts::FRAC_PI_2).abs() < 0.011);
    }
}
