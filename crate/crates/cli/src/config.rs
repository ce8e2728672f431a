//! Experiment configuration: JSON on disk, validated before anything runs.

use qp_core::anosov_katok::AkParams;
use qp_core::arithmetic::{Frequency, FrequencySpec};
use qp_core::cocycle::PotentialSpec;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::Path;

/// A configuration problem; reported with exit code 2.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "config error: {}", self.0)
    }
}

fn bad<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError(msg.into()))
}

/// Log-spaced grid from `hi` down to `lo`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LogGrid {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

impl LogGrid {
    /// Strictly decreasing values `hi … lo`.
    pub fn values(&self) -> Vec<f64> {
        let (a, b) = (self.hi.ln(), self.lo.ln());
        (0..self.count).map(|i| (a + (b - a) * i as f64 / (self.count - 1) as f64).exp()).collect()
    }

    fn validate(&self, name: &str) -> Result<(), ConfigError> {
        if !(self.lo > 0.0 && self.hi > self.lo && self.hi.is_finite()) {
            return bad(format!("{name}: need 0 < lo < hi"));
        }
        if self.count < 2 {
            return bad(format!("{name}: count must be at least 2"));
        }
        let v = self.values();
        if v.windows(2).any(|w| !(w[1] < w[0])) {
            return bad(format!("{name}: grid is not strictly decreasing"));
        }
        Ok(())
    }
}

/// Uniform grid `lo … hi`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinGrid {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

impl LinGrid {
    pub fn values(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.lo];
        }
        (0..self.count).map(|i| self.lo + (self.hi - self.lo) * i as f64 / (self.count - 1) as f64).collect()
    }

    fn validate(&self, name: &str) -> Result<(), ConfigError> {
        if !(self.lo.is_finite() && self.hi.is_finite()) || self.count == 0 || (self.count > 1 && !(self.hi > self.lo)) {
            return bad(format!("{name}: need lo < hi and count >= 1"));
        }
        Ok(())
    }
}

/// Operator: either the almost Mathieu coupling or a general trigonometric potential.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum OperatorSpec {
    Amo { lambda: f64 },
    Potential { cos: Vec<f64>, #[serde(default)] sin: Vec<f64>, #[serde(default = "one")] h: f64 },
    Free,
}

fn one() -> f64 {
    1.0
}

impl OperatorSpec {
    pub fn potential(&self) -> PotentialSpec {
        match self {
            OperatorSpec::Amo { lambda } => PotentialSpec::amo(*lambda),
            OperatorSpec::Potential { cos, sin, h } => PotentialSpec { cos: cos.clone(), sin: sin.clone(), h: *h },
            OperatorSpec::Free => PotentialSpec::zero(),
        }
    }
}

/// How the energy of a single-energy experiment is chosen.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case", deny_unknown_fields)]
pub enum EnergyRule {
    Fixed { e: f64 },
    /// Edge of the plateau `N = kα mod 1`, located by bisection inside `bracket`.
    GapEdge { k: i64, bracket: [f64; 2], #[serde(default = "edge_tol")] tol: f64 },
}

fn edge_tol() -> f64 {
    1e-12
}

/// Scaling law used by `predict-f`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum LawSpec {
    Amo { lambda: f64, phase: f64, epsilon0: f64, k_max: i64 },
    General { h: f64, n: f64, big_n: Option<f64>, eta: Option<f64> },
    Ak { h: f64, delta: f64, ks: Vec<i64> },
}

/// Cocycle used by `detp-profile`, `lyapunov` and `rotation`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CocycleSpec {
    Schrodinger,
    /// Constant real matrix `[[a, b], [c, d]]`.
    Constant { m: [f64; 4] },
    /// `A_∞` of the Anosov–Katok construction with the `ak` parameters.
    Ak,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AkSpec {
    pub delta: f64,
    pub h: f64,
    pub h_prime: f64,
    pub stages: usize,
    #[serde(default = "one")]
    pub eps_budget: f64,
    pub seed_k: Option<i64>,
}

impl AkSpec {
    pub fn params(&self) -> AkParams {
        let mut p = AkParams::new(self.delta, self.h, self.h_prime, self.stages, self.eps_budget);
        if let Some(k) = self.seed_k {
            p.seed_k = k;
        }
        p
    }
}

fn golden_digits() -> Vec<u64> {
    vec![1; 8]
}

fn default_precision() -> u32 {
    256
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Free-form experiment name, used in file names.
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default = "golden_digits")]
    pub cf_digits: Vec<u64>,
    #[serde(default = "default_precision")]
    pub precision_bits: u32,
    #[serde(default)]
    pub operator: Option<OperatorSpec>,
    #[serde(default)]
    pub theta: f64,
    #[serde(default)]
    pub theta_probes: Option<usize>,
    #[serde(default)]
    pub energy: Option<EnergyRule>,
    #[serde(default)]
    pub energies: Option<LinGrid>,
    #[serde(default)]
    pub eps_grid: Option<LogGrid>,
    #[serde(default)]
    pub eta_ratio: Option<f64>,
    #[serde(default)]
    pub eta: Option<f64>,
    #[serde(default)]
    pub phase: Option<f64>,
    #[serde(default)]
    pub epsilon0: Option<f64>,
    #[serde(default)]
    pub k_max: Option<i64>,
    #[serde(default)]
    pub ratio: Option<f64>,
    #[serde(default)]
    pub size: Option<usize>,
    #[serde(default)]
    pub rotation_n: Option<usize>,
    #[serde(default)]
    pub iterations: Option<i64>,
    #[serde(default)]
    pub law: Option<LawSpec>,
    #[serde(default)]
    pub cocycle: Option<CocycleSpec>,
    #[serde(default)]
    pub ak: Option<AkSpec>,
    #[serde(default)]
    pub seed: u64,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| ConfigError(format!("{}: {e}", path.display())))
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.precision_bits < 64 {
            return bad("precision_bits must be at least 64");
        }
        if self.cf_digits.is_empty() || self.cf_digits.contains(&0) {
            return bad("cf_digits must be a non-empty list of positive integers");
        }
        if !self.theta.is_finite() {
            return bad("theta must be finite");
        }
        if let Some(g) = &self.eps_grid {
            g.validate("eps_grid")?;
            if g.hi >= 1.0 {
                return bad("eps_grid: hi must be below 1");
            }
        }
        if let Some(g) = &self.energies {
            g.validate("energies")?;
        }
        if let Some(OperatorSpec::Amo { lambda }) = &self.operator {
            if !(lambda.is_finite() && *lambda >= 0.0) {
                return bad("operator.lambda must be a finite non-negative number");
            }
        }
        if let Some(op) = &self.operator {
            op.potential().validate().map_err(|e| ConfigError(e.to_string()))?;
        }
        for (name, v) in [("eta_ratio", self.eta_ratio), ("eta", self.eta), ("epsilon0", self.epsilon0)] {
            if let Some(x) = v {
                if !(x > 0.0 && x.is_finite()) {
                    return bad(format!("{name} must be positive"));
                }
            }
        }
        if let Some(r) = self.ratio {
            if !(r > 1.0) {
                return bad("ratio must exceed 1");
            }
        }
        Ok(())
    }

    pub fn frequency(&self) -> Result<Frequency, ConfigError> {
        Frequency::from_spec(&FrequencySpec { cf_digits: self.cf_digits.clone(), precision_bits: self.precision_bits })
            .map_err(|e| ConfigError(e.to_string()))
    }

    pub fn operator(&self) -> Result<&OperatorSpec, ConfigError> {
        self.operator.as_ref().ok_or_else(|| ConfigError("missing field `operator`".into()))
    }

    pub fn need<T: Clone>(v: &Option<T>, name: &str) -> Result<T, ConfigError> {
        v.clone().ok_or_else(|| ConfigError(format!("missing field `{name}`")))
    }

    /// SHA-256 of the canonical JSON form, after command-line overrides.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(bytes))
    }
}
