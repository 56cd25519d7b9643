use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dynamics::{GaussianCasimir, IntegratorConfig, Method};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScenarioName {
    Free,
    Harmonic,
    CubicTunneling,
    TwoDofLimit,
    AdiabaticCompare,
    BracketsDump,
    OracleDiff,
}

impl ScenarioName {
    pub fn as_str(self) -> &'static str {
        match self {
            ScenarioName::Free => "free",
            ScenarioName::Harmonic => "harmonic",
            ScenarioName::CubicTunneling => "cubic-tunneling",
            ScenarioName::TwoDofLimit => "two-dof-limit",
            ScenarioName::AdiabaticCompare => "adiabatic-compare",
            ScenarioName::BracketsDump => "brackets-dump",
            ScenarioName::OracleDiff => "oracle-diff",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MethodName {
    Rk4,
    Dopri5,
}

/// `[min, max, count]`, inclusive on both ends.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Range(pub f64, pub f64, pub usize);

impl Range {
    pub fn values(&self) -> Vec<f64> {
        let Range(a, b, n) = *self;
        if n == 1 {
            return vec![a];
        }
        (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
    }
}

/// Flat scenario configuration. Every field except `scenario` is optional;
/// unset fields take the scenario's documented default.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub scenario: Option<ScenarioName>,

    /// Coefficients of `V(q) = Σ c_k q^k`; replaces the scenario potential.
    pub potential: Option<Vec<f64>>,
    pub mass: Option<f64>,
    pub hbar: Option<f64>,
    pub order: Option<u32>,
    pub omega: Option<f64>,
    /// Cubic coupling in `½q² − λq³`.
    pub lambda: Option<f64>,
    /// Quartic coupling in `½q² + εq⁴`.
    pub epsilon: Option<f64>,

    pub q0: Option<f64>,
    pub p0: Option<f64>,
    pub sigma: Option<f64>,
    pub p_s0: Option<f64>,
    /// Initial effective energy; fixes `p0 > 0` when given.
    pub energy: Option<f64>,
    pub gaussian_casimir: Option<GaussianCasimir>,
    /// Overrides the Gaussian Casimir value of the initial state.
    pub casimir: Option<f64>,
    /// Relax the admissibility floor to `C ≥ 0`.
    pub classical: Option<bool>,

    pub t_end: Option<f64>,
    pub method: Option<MethodName>,
    pub step: Option<f64>,
    pub rtol: Option<f64>,
    pub atol: Option<f64>,
    pub max_steps: Option<u64>,
    pub sample_interval: Option<f64>,

    pub sweep_q0: Option<Range>,
    pub sweep_energy: Option<Range>,

    pub tau: Option<Vec<f64>>,
    pub force: Option<f64>,

    pub alpha: Option<f64>,
    pub p_alpha: Option<f64>,
    pub beta: Option<f64>,
    pub p_beta: Option<f64>,
    pub c1: Option<f64>,
    pub c2: Option<f64>,
    pub epsilons: Option<Vec<f64>>,

    pub pairs: Option<usize>,

    pub grid_min: Option<f64>,
    pub grid_max: Option<f64>,
    pub grid_points: Option<usize>,
    pub dt: Option<f64>,

    pub output_dir: Option<PathBuf>,
}

fn positive(path: &str, v: Option<f64>) -> Result<()> {
    match v {
        Some(x) if !(x > 0.0 && x.is_finite()) => {
            Err(Error::config(path, format!("must be positive and finite, got {x}")))
        }
        _ => Ok(()),
    }
}

fn finite(path: &str, v: Option<f64>) -> Result<()> {
    match v {
        Some(x) if !x.is_finite() => Err(Error::config(path, format!("must be finite, got {x}"))),
        _ => Ok(()),
    }
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: ScenarioConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            Error::config(if path == "." { "<root>".into() } else { path }, e.into_inner().to_string())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config(path.display().to_string(), e.to_string()))?;
        Self::from_json(&text)
    }

    pub fn named(name: ScenarioName) -> Self {
        ScenarioConfig {
            scenario: Some(name),
            ..Default::default()
        }
    }

    pub fn scenario(&self) -> Result<ScenarioName> {
        self.scenario
            .ok_or_else(|| Error::config("scenario", "missing scenario name"))
    }

    pub fn validate(&self) -> Result<()> {
        self.scenario()?;
        for (path, v) in [
            ("mass", self.mass),
            ("hbar", self.hbar),
            ("omega", self.omega),
            ("lambda", self.lambda),
            ("sigma", self.sigma),
            ("t_end", self.t_end),
            ("step", self.step),
            ("rtol", self.rtol),
            ("sample_interval", self.sample_interval),
            ("force", self.force),
            ("c1", self.c1),
            ("dt", self.dt),
        ] {
            positive(path, v)?;
        }
        for (path, v) in [
            ("epsilon", self.epsilon),
            ("q0", self.q0),
            ("p0", self.p0),
            ("p_s0", self.p_s0),
            ("energy", self.energy),
            ("alpha", self.alpha),
            ("p_alpha", self.p_alpha),
            ("beta", self.beta),
            ("p_beta", self.p_beta),
            ("c2", self.c2),
            ("grid_min", self.grid_min),
            ("grid_max", self.grid_max),
        ] {
            finite(path, v)?;
        }
        if let Some(a) = self.atol {
            if !(a >= 0.0 && a.is_finite()) {
                return Err(Error::config("atol", format!("must be non-negative, got {a}")));
            }
        }
        if let Some(c) = self.casimir {
            if !(c >= 0.0 && c.is_finite()) {
                return Err(Error::config("casimir", format!("must be non-negative, got {c}")));
            }
        }
        if let Some(n) = self.order {
            if n < 2 {
                return Err(Error::config("order", format!("truncation order must be at least 2, got {n}")));
            }
        }
        if self.pairs == Some(0) {
            return Err(Error::config("pairs", "at least one canonical pair is needed"));
        }
        if self.max_steps == Some(0) {
            return Err(Error::config("max_steps", "must be positive"));
        }
        if let Some(n) = self.grid_points {
            if n < 64 {
                return Err(Error::config("grid_points", format!("at least 64 points are needed, got {n}")));
            }
        }
        if let Some(p) = &self.potential {
            if let Some(i) = p.iter().position(|c| !c.is_finite()) {
                return Err(Error::config(format!("potential[{i}]"), "coefficient must be finite"));
            }
        }
        for (path, r) in [("sweep_q0", self.sweep_q0), ("sweep_energy", self.sweep_energy)] {
            if let Some(Range(a, b, n)) = r {
                if n == 0 || !a.is_finite() || !b.is_finite() || b < a {
                    return Err(Error::config(path, format!("invalid range [{a}, {b}, {n}]")));
                }
            }
        }
        for (path, v) in [("tau", &self.tau), ("epsilons", &self.epsilons)] {
            if let Some(v) = v {
                if v.is_empty() {
                    return Err(Error::config(path, "list must not be empty"));
                }
                if let Some(i) = v.iter().position(|x| !(*x > 0.0 && x.is_finite())) {
                    return Err(Error::config(format!("{path}[{i}]"), "entries must be positive"));
                }
            }
        }
        if let (Some(a), Some(b)) = (self.grid_min, self.grid_max) {
            if b <= a {
                return Err(Error::config("grid_max", "must exceed grid_min"));
            }
        }
        Ok(())
    }

    pub fn mass_or_default(&self) -> f64 {
        self.mass.unwrap_or(1.0)
    }

    pub fn hbar_or_default(&self) -> f64 {
        self.hbar.unwrap_or(1.0)
    }

    pub fn integrator(&self) -> Result<IntegratorConfig> {
        let base = IntegratorConfig::default();
        let method = match self.method.unwrap_or(MethodName::Dopri5) {
            MethodName::Rk4 => Method::Rk4 {
                step: self.step.unwrap_or(1e-3),
            },
            MethodName::Dopri5 => Method::Dopri5 {
                rtol: self.rtol.unwrap_or(1e-10),
                atol: self.atol.unwrap_or(1e-12),
            },
        };
        let cfg = IntegratorConfig {
            method,
            max_steps: self.max_steps.unwrap_or(base.max_steps),
            sample_interval: self.sample_interval.unwrap_or(base.sample_interval),
        };
        cfg.validate()
            .map_err(|e| Error::config("method", e.to_string()))?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_flat_object() {
        let c = ScenarioConfig::from_json(r#"{"scenario": "cubic-tunneling", "lambda": 0.1, "sweep_q0": [-1, 1.5, 4]}"#).unwrap();
        assert_eq!(c.scenario().unwrap(), ScenarioName::CubicTunneling);
        assert_eq!(c.sweep_q0.unwrap().values().len(), 4);
    }

    #[test]
    fn errors_carry_field_paths() {
        let cases = [
            (r#"{"scenario": "free", "mass": -1}"#, "mass"),
            (r#"{"scenario": "free", "mass": "heavy"}"#, "mass"),
            (r#"{"scenario": "free", "bogus": 1}"#, "bogus"),
            (r#"{"scenario": "free", "order": 1}"#, "order"),
            (r#"{"scenario": "nope"}"#, "scenario"),
            (r#"{"mass": 1}"#, "scenario"),
            (r#"{"scenario": "free", "tau": [10, -1]}"#, "tau[1]"),
        ];
        for (text, path) in cases {
            match ScenarioConfig::from_json(text) {
                Err(Error::Config { path: p, .. }) => assert_eq!(p, path, "{text}"),
                other => panic!("{text}: {other:?}"),
            }
        }
    }

    #[test]
    fn range_values_are_inclusive() {
        assert_eq!(Range(0.0, 1.0, 3).values(), vec![0.0, 0.5, 1.0]);
        assert_eq!(Range(2.0, 2.0, 1).values(), vec![2.0]);
    }
}
