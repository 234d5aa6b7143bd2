//! Strict JSON experiment configuration.

use std::path::Path;

use serde::{Deserialize, Serialize};
use tsfactor::select::PenaltyParams;
use tsfactor::{BasisSpec, NoiseSpec, SmoothFactorSpec};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scenario {
    Unstructured,
    Periodic,
    Smooth,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SmoothConfig {
    pub beta: u32,
    /// Ellipsoid radius `L`.
    pub ell: f64,
    pub n_terms: usize,
    /// Bias constant entering the cutoff rule.
    #[serde(default = "default_c_beta_l")]
    pub c_beta_l: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grids {
    /// Horizons swept by `rate-check`.
    #[serde(default)]
    pub horizons: Vec<usize>,
    /// Candidate periods for `select`; a period equal to the horizon means no structure.
    #[serde(default)]
    pub taus: Vec<usize>,
    /// Candidate ranks for `select`.
    #[serde(default)]
    pub ranks: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PenaltyConfig {
    #[serde(default = "default_lambda")]
    pub lambda: f64,
    #[serde(default = "default_c_pen")]
    pub c_pen: f64,
    /// Known `||Sigma_e||_op`; estimated from the data when absent.
    #[serde(default)]
    pub noise_level: Option<f64>,
    #[serde(default = "default_s")]
    pub s: f64,
}

impl Default for PenaltyConfig {
    fn default() -> Self {
        Self {
            lambda: default_lambda(),
            c_pen: default_c_pen(),
            noise_level: None,
            s: default_s(),
        }
    }
}

impl PenaltyConfig {
    pub fn params(&self, noise_level: f64) -> tsfactor::Result<PenaltyParams> {
        PenaltyParams::new(self.lambda, self.c_pen, noise_level, self.s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateConfig {
    /// Allowed `|slope - 1|`.
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    /// Confidence parameter in the theoretical rate `k (d + tau + s) / (d T)`.
    #[serde(default = "default_s")]
    pub s: f64,
    /// Also fit the unstructured estimator on every replication.
    #[serde(default)]
    pub baseline: bool,
}

impl Default for RateConfig {
    fn default() -> Self {
        Self {
            tolerance: default_tolerance(),
            s: default_s(),
            baseline: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    pub d: usize,
    pub horizon: usize,
    /// Period of the periodic scenario.
    #[serde(default)]
    pub tau: Option<usize>,
    /// Fixed frequency cutoff for the smooth scenario (default: the optimal cutoff).
    #[serde(default)]
    pub n_freq: Option<usize>,
    pub k: usize,
    pub noise: NoiseSpec,
    #[serde(default = "default_replications")]
    pub replications: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub smooth: Option<SmoothConfig>,
    #[serde(default)]
    pub grids: Grids,
    #[serde(default)]
    pub penalty: PenaltyConfig,
    #[serde(default)]
    pub rate: RateConfig,
}

fn default_c_beta_l() -> f64 {
    1.0
}
fn default_lambda() -> f64 {
    PenaltyParams::DEFAULT_LAMBDA
}
fn default_c_pen() -> f64 {
    PenaltyParams::DEFAULT_C_PEN
}
fn default_s() -> f64 {
    PenaltyParams::DEFAULT_S
}
fn default_tolerance() -> f64 {
    0.15
}
fn default_replications() -> usize {
    1
}

impl ExperimentConfig {
    /// Parses and validates; errors name the offending field.
    pub fn from_json(text: &str) -> CliResult<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let config: Self = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let field = if path == "." { "<root>".to_string() } else { path };
            CliError::config(field, e.into_inner().to_string())
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_path(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn smooth_spec(&self) -> Option<SmoothFactorSpec> {
        self.smooth.as_ref().map(|s| SmoothFactorSpec {
            k: self.k,
            beta: s.beta,
            ell: s.ell,
            n_terms: s.n_terms,
        })
    }

    /// Basis of the true signal; `None` for the smooth scenario,
    /// whose signal is not in any finite basis.
    pub fn signal_basis(&self) -> Option<BasisSpec> {
        match self.scenario {
            Scenario::Unstructured => Some(BasisSpec::Identity),
            Scenario::Periodic => Some(BasisSpec::Periodic {
                tau: self.tau.expect("validated"),
            }),
            Scenario::Smooth => None,
        }
    }

    pub fn validate(&self) -> CliResult<()> {
        if self.d == 0 {
            return Err(CliError::config("d", "must be at least 1"));
        }
        if self.k == 0 {
            return Err(CliError::config("k", "must be at least 1"));
        }
        if self.replications == 0 {
            return Err(CliError::config("replications", "must be at least 1"));
        }
        match self.scenario {
            Scenario::Unstructured | Scenario::Periodic => {
                if self.smooth.is_some() {
                    return Err(CliError::config("smooth", "only allowed for the smooth scenario"));
                }
                if self.n_freq.is_some() {
                    return Err(CliError::config("n_freq", "only allowed for the smooth scenario"));
                }
            }
            Scenario::Smooth => {
                let spec = self
                    .smooth_spec()
                    .ok_or_else(|| CliError::config("smooth", "required for the smooth scenario"))?;
                spec.validate()
                    .map_err(|e| CliError::config("smooth", e.to_string()))?;
                if self.tau.is_some() {
                    return Err(CliError::config("tau", "not used by the smooth scenario"));
                }
                let c = self.smooth.as_ref().expect("checked").c_beta_l;
                if !(c > 0.0 && c.is_finite()) {
                    return Err(CliError::config("smooth.c_beta_l", format!("must be positive, got {c}")));
                }
            }
        }
        match self.scenario {
            Scenario::Unstructured => {
                if self.tau.is_some() {
                    return Err(CliError::config("tau", "not used by the unstructured scenario"));
                }
            }
            Scenario::Periodic => {
                let tau = self
                    .tau
                    .ok_or_else(|| CliError::config("tau", "required for the periodic scenario"))?;
                if tau == 0 {
                    return Err(CliError::config("tau", "must be at least 1"));
                }
            }
            Scenario::Smooth => {}
        }
        self.check_horizon("horizon", self.horizon)?;
        for (i, &h) in self.grids.horizons.iter().enumerate() {
            self.check_horizon(&format!("grids.horizons[{i}]"), h)?;
        }
        for (i, &tau) in self.grids.taus.iter().enumerate() {
            if tau == 0 || !self.horizon.is_multiple_of(tau) {
                return Err(CliError::config(
                    format!("grids.taus[{i}]"),
                    format!("{tau} does not divide horizon {}", self.horizon),
                ));
            }
        }
        if let Some(i) = self.grids.ranks.iter().position(|&k| k == 0) {
            return Err(CliError::config(format!("grids.ranks[{i}]"), "ranks must be positive"));
        }
        self.penalty
            .params(self.penalty.noise_level.unwrap_or(1.0))
            .map_err(|e| CliError::config("penalty", e.to_string()))?;
        if !(self.rate.tolerance > 0.0 && self.rate.tolerance.is_finite()) {
            return Err(CliError::config("rate.tolerance", "must be positive"));
        }
        if !(self.rate.s >= 0.0 && self.rate.s.is_finite()) {
            return Err(CliError::config("rate.s", "must be nonnegative"));
        }
        Ok(())
    }

    fn check_horizon(&self, field: &str, horizon: usize) -> CliResult<()> {
        if horizon < 2 {
            return Err(CliError::config(field, format!("horizon must be at least 2, got {horizon}")));
        }
        let tau = match self.scenario {
            Scenario::Unstructured => horizon,
            Scenario::Periodic => {
                let tau = self.tau.expect("checked");
                if !horizon.is_multiple_of(tau) {
                    return Err(CliError::config(
                        field,
                        format!("period tau = {tau} does not divide horizon {horizon}"),
                    ));
                }
                tau
            }
            Scenario::Smooth => {
                let n_terms = self.smooth.as_ref().expect("checked").n_terms;
                if horizon < 2 * n_terms + 2 {
                    return Err(CliError::config(
                        field,
                        format!("horizon {horizon} too small for n_terms = {n_terms} (need {})", 2 * n_terms + 2),
                    ));
                }
                match self.n_freq {
                    Some(n) if 2 * n >= horizon => {
                        return Err(CliError::config(
                            "n_freq",
                            format!("need 2 * n_freq < horizon, got n_freq = {n} and horizon {horizon}"),
                        ))
                    }
                    Some(n) => 2 * n + 1,
                    None => 3,
                }
            }
        };
        if self.k > self.d.min(tau) {
            return Err(CliError::config(
                "k",
                format!("rank {} exceeds min(d, tau) = {} at horizon {horizon}", self.k, self.d.min(tau)),
            ));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const PERIODIC: &str = r#"{
        "scenario": "periodic", "d": 6, "horizon": 24, "tau": 4, "k": 2,
        "noise": {"law": {"kind": "iid"}, "sigma": 0.5}, "seed": 3
    }"#;

    #[test]
    fn parses_with_defaults() {
        let c = ExperimentConfig::from_json(PERIODIC).unwrap();
        assert_eq!(c.replications, 1);
        assert_eq!(c.penalty, PenaltyConfig::default());
        assert_eq!(c.signal_basis(), Some(BasisSpec::Periodic { tau: 4 }));
    }

    fn field_of(text: &str) -> String {
        match ExperimentConfig::from_json(text).unwrap_err() {
            CliError::Config { field, .. } => field,
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn errors_name_the_field() {
        assert_eq!(field_of(&PERIODIC.replace("\"tau\": 4", "\"tau\": 5")), "horizon");
        assert_eq!(field_of(&PERIODIC.replace("\"k\": 2", "\"k\": 9")), "k");
        assert_eq!(field_of(&PERIODIC.replace("\"seed\": 3", "\"seed\": 3, \"extra\": 1")), "extra");
        assert_eq!(field_of(&PERIODIC.replace("\"sigma\": 0.5", "\"sigma\": -1")), "noise");
        assert_eq!(
            field_of(&PERIODIC.replace("\"seed\": 3", "\"seed\": 3, \"grids\": {\"taus\": [5]}")),
            "grids.taus[0]"
        );
        assert_eq!(
            field_of(&PERIODIC.replace("\"seed\": 3", "\"seed\": 3, \"penalty\": {\"lambda\": 2}")),
            "penalty"
        );
        assert_eq!(field_of(&PERIODIC.replace("\"tau\": 4,", "")), "tau");
    }

    #[test]
    fn smooth_needs_its_block() {
        let text = r#"{"scenario": "smooth", "d": 4, "horizon": 64, "k": 2,
            "noise": {"law": {"kind": "iid"}, "sigma": 1.0}}"#;
        assert_eq!(field_of(text), "smooth");
        let ok = text.replace("\"k\": 2", "\"k\": 2, \"smooth\": {\"beta\": 2, \"ell\": 5.0, \"n_terms\": 8}");
        let c = ExperimentConfig::from_json(&ok).unwrap();
        assert_eq!(c.smooth.unwrap().c_beta_l, 1.0);
        let small = ok.replace("\"horizon\": 64", "\"horizon\": 16");
        assert_eq!(field_of(&small), "horizon");
    }
}
