// SPDX-License-Identifier: Apache-2.0

//! Versioned JSON experiment configuration.

use std::path::{Path, PathBuf};

use cfl_attacks::AttackConfig;
use cfl_protocol::ProtocolSpec;
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Schema version accepted by this build.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    #[serde(default)]
    pub protocol: Option<ProtocolSpec>,
    #[serde(default)]
    pub seed: u64,
    /// Trials for the subcommand; `None` uses the subcommand's own default.
    #[serde(default)]
    pub trials: Option<u64>,
    /// Worker threads; `CFL_THREADS` takes precedence.
    #[serde(default)]
    pub threads: Option<usize>,
    /// Output directory; `--out` takes precedence.
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
    /// Add per-trial wall time to records. Off by default, since timings break
    /// byte-identical replay.
    #[serde(default)]
    pub record_timing: bool,
    /// Attack settings; the `nugget` subcommand reads `attack.nugget`.
    #[serde(default)]
    pub attack: AttackConfig,
    #[serde(default)]
    pub lapexp: LapExpConfig,
    #[serde(default)]
    pub martingale: MartingaleCheckConfig,
    #[serde(default)]
    pub lemmas: LemmaConfig,
}

impl ExperimentConfig {
    /// Parses `text`; relative `scripted:` paths resolve against `base_dir`.
    pub fn from_json(text: &str, base_dir: Option<&Path>) -> Result<Self, CliError> {
        let mut cfg: Self = serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        if cfg.schema_version != SCHEMA_VERSION {
            return Err(CliError::Config(format!(
                "schema_version {} is not supported (expected {SCHEMA_VERSION})",
                cfg.schema_version
            )));
        }
        if let Some(p) = cfg.protocol.as_mut() {
            p.base_dir = base_dir.map(Path::to_path_buf);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text, path.parent())
    }

    /// A configuration with every section at its default.
    pub fn new(protocol: Option<ProtocolSpec>) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            protocol,
            seed: 0,
            trials: None,
            threads: None,
            out_dir: None,
            record_timing: false,
            attack: AttackConfig::default(),
            lapexp: LapExpConfig::default(),
            martingale: MartingaleCheckConfig::default(),
            lemmas: LemmaConfig::default(),
        }
    }

    fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        if self.threads == Some(0) {
            return bad("threads must be at least 1".into());
        }
        let l = &self.lapexp;
        if l.r < 3 || !(l.gamma > 0.0) || !(0.0..=l.gamma).contains(&l.tsh) || !(0.0..=l.tsh).contains(&l.sigma) {
            return bad(format!("lapexp needs r ≥ 3 and 0 ≤ sigma ≤ tsh ≤ gamma with gamma > 0, got {l:?}"));
        }
        let m = &self.martingale;
        if m.r == 0 || !(m.delta >= 0.0) {
            return bad(format!("martingale needs r ≥ 1 and delta ≥ 0, got {m:?}"));
        }
        let lm = &self.lemmas;
        if lm.max_r == 0 || !(0.0..1.0).contains(&lm.max_eps) || lm.laplace_lambdas.iter().any(|&x| !(x > 0.0)) {
            return bad(format!("lemmas needs max_r ≥ 1, max_eps in [0,1) and positive lambdas, got {lm:?}"));
        }
        Ok(())
    }
}

/// Oblivious-sampling experiment on the adversarial instance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LapExpConfig {
    #[serde(default = "LapExpConfig::default_r")]
    pub r: usize,
    #[serde(default = "LapExpConfig::default_tsh")]
    pub tsh: f64,
    #[serde(default = "LapExpConfig::default_sigma")]
    pub sigma: f64,
    #[serde(default = "LapExpConfig::default_gamma")]
    pub gamma: f64,
    /// Noise scale; `None` is `γ/(4 log₂ r)`.
    #[serde(default)]
    pub lambda: Option<f64>,
    /// Selection probability; `None` is `1/n`.
    #[serde(default)]
    pub p: Option<f64>,
    /// Random tail distributions checked against the similarity-gap sums.
    #[serde(default = "LapExpConfig::default_tail_checks")]
    pub tail_checks: u64,
}

impl LapExpConfig {
    fn default_r() -> usize {
        100
    }
    fn default_tsh() -> f64 {
        0.15
    }
    fn default_sigma() -> f64 {
        0.1
    }
    fn default_gamma() -> f64 {
        0.2
    }
    fn default_tail_checks() -> u64 {
        1000
    }
}

impl Default for LapExpConfig {
    fn default() -> Self {
        Self {
            r: Self::default_r(),
            tsh: Self::default_tsh(),
            sigma: Self::default_sigma(),
            gamma: Self::default_gamma(),
            lambda: None,
            p: None,
            tail_checks: Self::default_tail_checks(),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Generator {
    #[default]
    MajorityDoob,
    Drifting,
    Constant,
}

/// Gap-theorem check on a generated ensemble.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MartingaleCheckConfig {
    #[serde(default = "MartingaleCheckConfig::default_r")]
    pub r: usize,
    #[serde(default)]
    pub generator: Generator,
    /// Weak-martingale slack `δ` used by the identity checks.
    #[serde(default)]
    pub delta: f64,
    /// Step drift and noise of the `drifting` generator.
    #[serde(default)]
    pub drift: f64,
    #[serde(default = "MartingaleCheckConfig::default_noise")]
    pub noise: f64,
    /// Replace this fraction of sequences with smooth ramps.
    #[serde(default)]
    pub corrupt_fraction: f64,
}

impl MartingaleCheckConfig {
    fn default_r() -> usize {
        11
    }
    fn default_noise() -> f64 {
        0.1
    }
}

impl Default for MartingaleCheckConfig {
    fn default() -> Self {
        Self {
            r: Self::default_r(),
            generator: Generator::default(),
            delta: 0.0,
            drift: 0.0,
            noise: Self::default_noise(),
            corrupt_fraction: 0.0,
        }
    }
}

/// Closed-form lemma checks.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LemmaConfig {
    /// Longest Bernoulli sequence drawn.
    #[serde(default = "LemmaConfig::default_max_r")]
    pub max_r: usize,
    /// Largest ratio deviation targeted when perturbing a sequence.
    #[serde(default = "LemmaConfig::default_max_eps")]
    pub max_eps: f64,
    /// Laplace samples per scale for the tail spot checks; 0 skips them.
    /// Tail points are in units of the scale: `Pr[Lap(λ) ≥ λx]`.
    #[serde(default = "LemmaConfig::default_laplace_samples")]
    pub laplace_samples: u64,
    #[serde(default = "LemmaConfig::default_lambdas")]
    pub laplace_lambdas: Vec<f64>,
    #[serde(default = "LemmaConfig::default_points")]
    pub laplace_points: Vec<f64>,
    /// Allowed absolute gap between empirical and closed-form tails.
    #[serde(default = "LemmaConfig::default_tolerance")]
    pub laplace_tolerance: f64,
    /// Random half-samples drawn for the Hoeffding check.
    #[serde(default = "LemmaConfig::default_subsamples")]
    pub hoeffding_subsamples: u64,
}

impl LemmaConfig {
    fn default_max_r() -> usize {
        10
    }
    fn default_max_eps() -> f64 {
        0.9
    }
    fn default_laplace_samples() -> u64 {
        1_000_000
    }
    fn default_lambdas() -> Vec<f64> {
        vec![0.1, 1.0]
    }
    fn default_points() -> Vec<f64> {
        vec![0.0, 0.5, 1.0, 2.0]
    }
    fn default_tolerance() -> f64 {
        3e-3
    }
    fn default_subsamples() -> u64 {
        20_000
    }
}

impl Default for LemmaConfig {
    fn default() -> Self {
        Self {
            max_r: Self::default_max_r(),
            max_eps: Self::default_max_eps(),
            laplace_samples: Self::default_laplace_samples(),
            laplace_lambdas: Self::default_lambdas(),
            laplace_points: Self::default_points(),
            laplace_tolerance: Self::default_tolerance(),
            hoeffding_subsamples: Self::default_subsamples(),
        }
    }
}
