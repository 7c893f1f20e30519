//! Experiment configuration: a TOML document that fully determines a study.
//!
//! Configs round-trip losslessly through [`ExperimentConfig::to_toml`] /
//! [`ExperimentConfig::from_toml`], and every field is validated before any
//! computation starts. All randomness in a study flows from `seed0`: training
//! run i uses seed0 + i, the evaluation set uses seed0 + 1_000_000, and proxy
//! reference runs use seed0 + 2_000_000 + k.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{Kernel, PairKernel};
use crate::losses::ActivatingLoss;
use crate::trainers::{CheckpointPolicy, StepSchedule};

/// Seed offset for the evaluation set, keeping it disjoint from training
/// streams (which use seed0 + run index).
pub const EVAL_SEED_OFFSET: u64 = 1_000_000;
/// Seed offset for long-run proxy reference training streams.
pub const PROXY_SEED_OFFSET: u64 = 2_000_000;

/// Which online algorithm a study trains.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Algorithm {
    /// Pointwise classification updates.
    #[serde(rename = "alg1", alias = "pointwise")]
    Pointwise,
    /// Pairwise updates over all past examples.
    #[serde(rename = "alg2", alias = "pairwise")]
    Pairwise,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LossConfig {
    /// One of `least_squares`, `logistic`, `qnorm`.
    pub name: String,
    /// Exponent for the `qnorm` family, in (1, 2].
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelConfig {
    /// One of `gaussian`, `linear`, `polynomial`.
    pub family: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bandwidth: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub degree: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub offset: Option<f64>,
    /// Sup of ‖x‖ over the experiment's domain; declared, not estimated.
    pub domain_radius: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleConfig {
    pub c: f64,
    pub theta: f64,
}

/// How the conditional label probability is derived from the planted
/// expansion h: `logistic` gives η(x) = 1/(1+e^{−h(x)}), `affine` gives
/// η(x) = (1+h(x))/2 (with ‖h‖_∞ < 1 enforced at construction).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Link {
    Logistic,
    Affine,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistributionConfig {
    pub link: Link,
    /// Number of kernel sections in the planted expansion.
    pub planted_centers: u32,
    /// Seed for the planted expansion (fixed across the whole study).
    pub planted_seed: u64,
    /// Target RKHS norm of the planted expansion (the affine link may clamp
    /// it down to keep η inside (0, 1)).
    pub planted_norm: f64,
}

impl Default for DistributionConfig {
    fn default() -> Self {
        DistributionConfig {
            link: Link::Logistic,
            planted_centers: 10,
            planted_seed: 10_007,
            planted_norm: 2.0,
        }
    }
}

/// What excess risk is measured against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReferenceKind {
    /// Resolve to `planted` when the loss/link pair makes the planted
    /// expansion the exact population minimizer, `proxy` otherwise.
    Auto,
    /// The planted expansion itself.
    Planted,
    /// A long-run trained hypothesis ("proxy reference" in outputs).
    Proxy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceConfig {
    pub kind: ReferenceKind,
    /// Proxy runs train for `proxy_t_multiplier × T` iterations.
    pub proxy_t_multiplier: u32,
    /// Number of independent proxy runs averaged into the reference risk.
    pub proxy_seeds: u32,
}

impl Default for ReferenceConfig {
    fn default() -> Self {
        ReferenceConfig { kind: ReferenceKind::Auto, proxy_t_multiplier: 4, proxy_seeds: 2 }
    }
}

/// A complete experiment description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub algorithm: Algorithm,
    /// Number of online iterations per run.
    #[serde(rename = "T")]
    pub t_max: u64,
    pub n_seeds: u32,
    pub seed0: u64,
    /// Evaluation-set size (0 disables risk columns).
    pub n_eval: u32,
    pub dimension: u32,
    /// δ used when reporting pairwise rate exponents.
    #[serde(default = "default_delta")]
    pub delta: f64,
    pub out_dir: String,
    pub loss: LossConfig,
    pub kernel: KernelConfig,
    pub schedule: ScheduleConfig,
    pub checkpoints: CheckpointPolicy,
    #[serde(default)]
    pub distribution: DistributionConfig,
    #[serde(default)]
    pub reference: ReferenceConfig,
}

fn default_delta() -> f64 {
    0.02
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig =
            toml::from_str(text).map_err(|e| Error::ConfigParse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::ConfigParse(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml(&text)
    }

    /// The loss the config describes.
    pub fn build_loss(&self) -> Result<ActivatingLoss> {
        ActivatingLoss::by_name(&self.loss.name, self.loss.q)
    }

    /// The base kernel the config describes.
    pub fn build_kernel(&self) -> Result<Kernel> {
        match self.kernel.family.as_str() {
            "gaussian" => {
                let bw = self.kernel.bandwidth.ok_or_else(|| {
                    Error::Config("gaussian kernel needs a bandwidth".into())
                })?;
                Kernel::gaussian(bw, self.kernel.domain_radius)
            }
            "linear" => Kernel::linear(self.kernel.domain_radius),
            "polynomial" => {
                let degree = self.kernel.degree.ok_or_else(|| {
                    Error::Config("polynomial kernel needs a degree".into())
                })?;
                Kernel::polynomial(
                    degree,
                    self.kernel.offset.unwrap_or(0.0),
                    self.kernel.domain_radius,
                )
            }
            other => Err(Error::Config(format!("unknown kernel family '{other}'"))),
        }
    }

    pub fn build_pair_kernel(&self) -> Result<PairKernel> {
        Ok(PairKernel::new(self.build_kernel()?))
    }

    pub fn build_schedule(&self) -> Result<StepSchedule> {
        StepSchedule::new(self.schedule.c, self.schedule.theta)
    }

    /// Whether the planted expansion is the exact population minimizer for
    /// this loss/link pair: the logistic loss under the logistic link, and
    /// the quadratic losses under the affine link.
    pub fn planted_is_exact_minimizer(&self) -> bool {
        if self.algorithm != Algorithm::Pointwise {
            return false;
        }
        match (self.loss.name.as_str(), self.distribution.link) {
            ("logistic", Link::Logistic) => true,
            ("least_squares", Link::Affine) => true,
            ("qnorm", Link::Affine) => self.loss.q == Some(2.0),
            _ => false,
        }
    }

    /// Resolves `auto` to a concrete reference kind.
    pub fn resolved_reference(&self) -> ReferenceKind {
        match self.reference.kind {
            ReferenceKind::Auto => {
                if self.planted_is_exact_minimizer() {
                    ReferenceKind::Planted
                } else {
                    ReferenceKind::Proxy
                }
            }
            other => other,
        }
    }

    /// Validates every field; no computation happens on a config that fails.
    pub fn validate(&self) -> Result<()> {
        self.build_loss()?;
        self.build_kernel()?;
        self.build_schedule()?;
        let min_t = match self.algorithm {
            Algorithm::Pointwise => 1,
            Algorithm::Pairwise => 2,
        };
        if self.t_max < min_t {
            return Err(Error::Config(format!(
                "T = {} is below the minimum {min_t} for this algorithm",
                self.t_max
            )));
        }
        if self.n_seeds < 1 {
            return Err(Error::Config("n_seeds must be at least 1".into()));
        }
        if self.dimension < 1 {
            return Err(Error::Config("dimension must be at least 1".into()));
        }
        if !(self.delta > 0.0 && self.delta < 0.5) {
            return Err(Error::Config(format!("delta must lie in (0, 0.5), got {}", self.delta)));
        }
        if self.out_dir.is_empty() {
            return Err(Error::Config("out_dir must be nonempty".into()));
        }
        if self.distribution.planted_centers < 1 {
            return Err(Error::Config("planted_centers must be at least 1".into()));
        }
        if !(self.distribution.planted_norm > 0.0 && self.distribution.planted_norm.is_finite()) {
            return Err(Error::Config(format!(
                "planted_norm must be positive, got {}",
                self.distribution.planted_norm
            )));
        }
        if self.reference.kind == ReferenceKind::Planted && !self.planted_is_exact_minimizer() {
            return Err(Error::Config(
                "reference kind 'planted' requires a loss/link pair whose population minimizer \
                 is the planted expansion (logistic+logistic, least_squares+affine, or \
                 qnorm(2)+affine) on the pointwise algorithm; use 'proxy'"
                    .into(),
            ));
        }
        if self.resolved_reference() == ReferenceKind::Proxy {
            if self.reference.proxy_t_multiplier < 2 {
                return Err(Error::Config("proxy_t_multiplier must be at least 2".into()));
            }
            if self.reference.proxy_seeds < 1 {
                return Err(Error::Config("proxy_seeds must be at least 1".into()));
            }
        }
        if let CheckpointPolicy::Explicit { points } = &self.checkpoints {
            if points.is_empty() {
                return Err(Error::Config("explicit checkpoint list must be nonempty".into()));
            }
            if points.iter().any(|&p| p > self.t_max) {
                return Err(Error::Config(format!(
                    "checkpoint beyond T = {}: {:?}",
                    self.t_max, points
                )));
            }
        }
        Ok(())
    }

    /// Training-stream seed of replicated run `index`.
    pub fn run_seed(&self, index: u32) -> u64 {
        self.seed0 + index as u64
    }

    pub fn eval_seed(&self) -> u64 {
        self.seed0 + EVAL_SEED_OFFSET
    }

    pub fn proxy_seed(&self, index: u32) -> u64 {
        self.seed0 + PROXY_SEED_OFFSET + index as u64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn sample_config() -> ExperimentConfig {
        ExperimentConfig {
            algorithm: Algorithm::Pointwise,
            t_max: 256,
            n_seeds: 4,
            seed0: 42,
            n_eval: 1000,
            dimension: 3,
            delta: 0.02,
            out_dir: "out/test".into(),
            loss: LossConfig { name: "logistic".into(), q: None },
            kernel: KernelConfig {
                family: "gaussian".into(),
                bandwidth: Some(1.0),
                degree: None,
                offset: None,
                domain_radius: 1.0,
            },
            schedule: ScheduleConfig { c: 0.5, theta: 2.0 / 3.0 },
            checkpoints: CheckpointPolicy::Geometric { start: 32 },
            distribution: DistributionConfig::default(),
            reference: ReferenceConfig::default(),
        }
    }

    #[test]
    fn round_trip_is_lossless() {
        let cfg = sample_config();
        let text = cfg.to_toml().unwrap();
        let back = ExperimentConfig::from_toml(&text).unwrap();
        assert_eq!(cfg, back);
    }

    #[test]
    fn round_trip_explicit_checkpoints_and_floats() {
        let mut cfg = sample_config();
        cfg.loss = LossConfig { name: "qnorm".into(), q: Some(1.5) };
        cfg.schedule = ScheduleConfig { c: 0.1 + 0.2, theta: 0.6180339887498949 };
        cfg.checkpoints = CheckpointPolicy::Explicit { points: vec![16, 32, 64, 128, 256] };
        cfg.reference =
            ReferenceConfig { kind: ReferenceKind::Proxy, proxy_t_multiplier: 4, proxy_seeds: 2 };
        let text = cfg.to_toml().unwrap();
        let back = ExperimentConfig::from_toml(&text).unwrap();
        assert_eq!(cfg, back);
    }

    #[test]
    fn algorithm_names_follow_the_wire_format() {
        let text = sample_config().to_toml().unwrap();
        assert!(text.contains("algorithm = \"alg1\""));
        let mut cfg = sample_config();
        cfg.algorithm = Algorithm::Pairwise;
        cfg.schedule = ScheduleConfig { c: 1.0, theta: 0.75 };
        assert!(cfg.to_toml().unwrap().contains("algorithm = \"alg2\""));
    }

    #[test]
    fn validation_rejects_bad_fields() {
        let mut cfg = sample_config();
        cfg.loss.name = "hinge".into();
        assert!(cfg.validate().is_err());

        let mut cfg = sample_config();
        cfg.loss = LossConfig { name: "qnorm".into(), q: Some(3.0) };
        assert!(cfg.validate().is_err());

        let mut cfg = sample_config();
        cfg.schedule.theta = 1.2;
        assert!(cfg.validate().is_err());

        let mut cfg = sample_config();
        cfg.kernel.family = "sigmoid".into();
        assert!(cfg.validate().is_err());

        let mut cfg = sample_config();
        cfg.algorithm = Algorithm::Pairwise;
        cfg.t_max = 1;
        assert!(cfg.validate().is_err());

        let mut cfg = sample_config();
        cfg.checkpoints = CheckpointPolicy::Explicit { points: vec![4096] };
        assert!(cfg.validate().is_err());

        // Planted reference is only exact for matching loss/link pairs.
        let mut cfg = sample_config();
        cfg.loss = LossConfig { name: "qnorm".into(), q: Some(1.5) };
        cfg.reference.kind = ReferenceKind::Planted;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let text = sample_config().to_toml().unwrap() + "\nunexpected_field = 3\n";
        assert!(ExperimentConfig::from_toml(&text).is_err());
    }

    #[test]
    fn reference_resolution() {
        let cfg = sample_config();
        assert_eq!(cfg.resolved_reference(), ReferenceKind::Planted);

        let mut cfg = sample_config();
        cfg.loss = LossConfig { name: "qnorm".into(), q: Some(1.5) };
        assert_eq!(cfg.resolved_reference(), ReferenceKind::Proxy);

        let mut cfg = sample_config();
        cfg.algorithm = Algorithm::Pairwise;
        assert_eq!(cfg.resolved_reference(), ReferenceKind::Proxy);

        let mut cfg = sample_config();
        cfg.loss = LossConfig { name: "least_squares".into(), q: None };
        cfg.distribution.link = Link::Affine;
        assert_eq!(cfg.resolved_reference(), ReferenceKind::Planted);
    }

    #[test]
    fn seed_derivation_is_counter_based() {
        let cfg = sample_config();
        assert_eq!(cfg.run_seed(0), 42);
        assert_eq!(cfg.run_seed(3), 45);
        assert_eq!(cfg.eval_seed(), 42 + EVAL_SEED_OFFSET);
        assert_eq!(cfg.proxy_seed(1), 42 + PROXY_SEED_OFFSET + 1);
    }
}
