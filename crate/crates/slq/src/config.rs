//! Tunable constants and backend selection.
//!
//! Every constant that the estimators depend on is surfaced here rather
//! than buried at a use site, so a run's parameters can be pinned in a
//! TOML file and reported alongside its results.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How the eigenvalue core is solved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    /// Deterministic classical solver; ledgers still carry the
    /// hypothetical power-query counts of the plan it replaces.
    #[default]
    Classical,
    /// Samples measurement outcomes from the analytic phase-estimation
    /// outcome distribution.
    Spectral,
    /// Full statevector simulation of the phase-estimation circuit.
    Dense,
}

impl FromStr for Backend {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "classical" => Ok(Backend::Classical),
            "spectral" => Ok(Backend::Spectral),
            "dense" => Ok(Backend::Dense),
            other => Err(Error::InvalidInput(format!(
                "unknown backend '{other}' (expected classical, spectral, or dense)"
            ))),
        }
    }
}

impl fmt::Display for Backend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Backend::Classical => "classical",
            Backend::Spectral => "spectral",
            Backend::Dense => "dense",
        })
    }
}

/// All pipeline constants. `Default` gives the calibrated values; any
/// subset can be overridden from a TOML file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PipelineConfig {
    /// Default backend when the caller does not pick one explicitly.
    pub backend: Backend,

    /// Discretization constant: the matrix dimension k is chosen as the
    /// smallest power-of-two-minus-one with c_disc/(k+1)^2 <= eta/2.
    pub c_disc: f64,

    /// Extra ancilla bits beyond ceil(log2(8 pi / eta)).
    pub guard_bits: u32,

    /// Repetition constant: r is the smallest odd integer at or above
    /// chernoff_c * ln(1/delta) + 1.
    pub chernoff_c: f64,

    /// Hard cap on the matrix dimension for backends that must
    /// materialize the matrix or its spectrum.
    pub k_cap: u64,

    /// Exponent of the bump profile (x(1-x))^alpha. Must exceed 2 so the
    /// profile stays twice continuously differentiable at the endpoints.
    pub bump_alpha: f64,

    /// Base of the logarithm in the modulation-scale formula
    /// c = eps / (M^2 log(1/eps)). Natural log by default.
    pub log_base: f64,

    /// Safety factor applied on top of `c_res` when clamping the
    /// modulation scale, so the quadratic residual never eats more than
    /// its share of the error budget.
    pub residual_safety_factor: f64,

    /// Calibrated bound on the quadratic-residual constant: the residual
    /// of the linearized eigenvalue readout is at most c_res * (c*M)^2.
    pub c_res: f64,

    /// Number of sample points used when spot-checking that a potential
    /// stays inside [0,1].
    pub admissibility_grid: usize,

    /// The dense backend refuses runs needing more than this many qubits
    /// (ancilla bits plus log2(k+1)).
    pub dense_qubit_cap: u32,

    /// Optional hard budget on bit queries per top-level call.
    pub bit_query_budget: Option<u64>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            backend: Backend::Classical,
            c_disc: 20.0,
            guard_bits: 2,
            chernoff_c: 8.0,
            k_cap: (1 << 24) - 1,
            bump_alpha: 3.0,
            log_base: std::f64::consts::E,
            residual_safety_factor: 2.0,
            c_res: 2.0,
            admissibility_grid: 4096,
            dense_qubit_cap: 24,
            bit_query_budget: None,
        }
    }
}

impl PipelineConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: PipelineConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_toml_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c_disc > 0.0) {
            return Err(Error::Config("c_disc must be positive".into()));
        }
        if !(self.chernoff_c > 0.0) {
            return Err(Error::Config("chernoff_c must be positive".into()));
        }
        if self.k_cap < 3 {
            return Err(Error::Config("k_cap must be at least 3".into()));
        }
        if !(self.bump_alpha > 2.0) {
            return Err(Error::Config(
                "bump_alpha must exceed 2 for endpoint smoothness".into(),
            ));
        }
        if !(self.log_base > 1.0) {
            return Err(Error::Config("log_base must exceed 1".into()));
        }
        if !(self.residual_safety_factor >= 1.0) {
            return Err(Error::Config(
                "residual_safety_factor must be at least 1".into(),
            ));
        }
        if !(self.c_res > 0.0) {
            return Err(Error::Config("c_res must be positive".into()));
        }
        if self.admissibility_grid < 16 {
            return Err(Error::Config("admissibility_grid too coarse".into()));
        }
        if self.dense_qubit_cap < 4 || self.dense_qubit_cap > 28 {
            return Err(Error::Config("dense_qubit_cap out of range [4, 28]".into()));
        }
        Ok(())
    }

    /// log(1/eps) in the configured base.
    pub fn log_inv(&self, eps: f64) -> f64 {
        -eps.ln() / self.log_base.ln()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        PipelineConfig::default().validate().unwrap();
    }

    #[test]
    fn toml_round_trip_overrides() {
        let cfg = PipelineConfig::from_toml_str(
            "backend = \"spectral\"\nc_disc = 10.0\nguard_bits = 3\n",
        )
        .unwrap();
        assert_eq!(cfg.backend, Backend::Spectral);
        assert_eq!(cfg.c_disc, 10.0);
        assert_eq!(cfg.guard_bits, 3);
        assert_eq!(cfg.chernoff_c, 8.0);
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(PipelineConfig::from_toml_str("mystery_knob = 1\n").is_err());
    }

    #[test]
    fn bad_values_rejected() {
        assert!(PipelineConfig::from_toml_str("bump_alpha = 2.0\n").is_err());
        assert!(PipelineConfig::from_toml_str("c_disc = -1.0\n").is_err());
    }

    #[test]
    fn backend_parsing() {
        assert_eq!("classical".parse::<Backend>().unwrap(), Backend::Classical);
        assert_eq!("dense".parse::<Backend>().unwrap(), Backend::Dense);
        assert!("quantum".parse::<Backend>().is_err());
        assert_eq!(Backend::Spectral.to_string(), "spectral");
    }

    #[test]
    fn log_base_override() {
        let cfg = PipelineConfig::from_toml_str("log_base = 2.0\n").unwrap();
        assert!((cfg.log_inv(0.25) - 2.0).abs() < 1e-12);
        let nat = PipelineConfig::default();
        assert!((nat.log_inv(0.25) - (4.0f64).ln()).abs() < 1e-12);
    }
}
