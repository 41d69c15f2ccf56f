//! TOML experiment configuration.
//!
//! ```toml
//! [experiment]
//! algorithm = "tlucb"        # or "microlucb"
//! delta = 0.1
//! epsilon = 0.0
//! sigma = 1.0
//! n_trials = 500
//! base_seed = 42
//! max_rounds = 10000000      # optional
//! parallelism = 4            # optional, default 1
//!
//! [instance]
//! preset = "bai"             # bai | topk | thresholding | cpe | property_testing | linear | grid
//! means = [1.0, 0.0]         # Gaussian arms with standard deviation `sd` (default sigma)
//!
//! [microlucb]                # optional, default a_i = 1, b_i = 0
//! scale_shift = [[1.0, 0.0], [1.0, 0.0]]
//!
//! [output]                   # optional
//! dir = "results"
//! ```
//!
//! Preset parameters live in `[instance]`: `k` (topk), `theta`
//! (thresholding), `decision_class` (cpe), `property_sets` and
//! `membership_sets` (property_testing), `matrix` (linear) and `components`
//! (grid). Subsets are lists of 1-based source indices. Property sets are
//! lists of interval strings such as `"(0, inf)"` or `"[-1, 2]"`.
//! Instead of `means`, arms may be listed one by one:
//!
//! ```toml
//! [[instance.arms]]
//! distribution = "bernoulli"
//! p = 0.7
//! ```

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::complexity::Hardness;
use crate::env::{ArmDistribution, BanditEnv};
use crate::microlucb::validate_scale_shift;
use crate::presets::{linear_matrix, PresetSpec};
use crate::sim::{Algorithm, Instance, RunSettings};
use crate::tlucb::DEFAULT_MAX_ROUNDS;
use crate::transfer::{ComponentFunction, PropertySet, TransferFunction};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentSection,
    pub instance: InstanceSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub microlucb: Option<MicroLucbSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<OutputSection>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlgorithmName {
    Tlucb,
    Microlucb,
}

fn default_max_rounds() -> u64 {
    DEFAULT_MAX_ROUNDS
}

fn default_parallelism() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    pub algorithm: AlgorithmName,
    pub delta: f64,
    pub epsilon: f64,
    pub sigma: f64,
    pub n_trials: u64,
    pub base_seed: u64,
    #[serde(default = "default_max_rounds")]
    pub max_rounds: u64,
    #[serde(default = "default_parallelism")]
    pub parallelism: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PresetKind {
    Bai,
    Topk,
    Thresholding,
    Cpe,
    PropertyTesting,
    Linear,
    Grid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceSection {
    pub preset: PresetKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub means: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sd: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub arms: Option<Vec<ArmDistribution>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decision_class: Option<Vec<Vec<usize>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub property_sets: Option<Vec<PropertySet>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub membership_sets: Option<Vec<Vec<usize>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub components: Option<Vec<Vec<ComponentFunction>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MicroLucbSection {
    pub scale_shift: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
}

/// One violated constraint.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigIssue {
    pub path: String,
    pub message: String,
}

impl fmt::Display for ConfigIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

/// Every problem found in a config, or a single read/parse failure.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub issues: Vec<ConfigIssue>,
}

impl ConfigError {
    fn single(path: &str, message: impl Into<String>) -> Self {
        Self {
            issues: vec![ConfigIssue {
                path: path.to_owned(),
                message: message.into(),
            }],
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "invalid configuration ({} problem(s)):", self.issues.len())?;
        for issue in &self.issues {
            writeln!(f, "  {issue}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigError {}

/// A validated, ready-to-run experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct Experiment {
    pub instance: Instance,
    pub algorithm: Algorithm,
    pub settings: RunSettings,
    pub n_trials: u64,
    pub base_seed: u64,
    pub parallelism: usize,
    /// Used by Micro-LUCB, including in comparisons.
    pub scale_shift: Vec<(f64, f64)>,
    pub hardness: Vec<Hardness>,
    pub out_dir: Option<PathBuf>,
}

#[derive(Default)]
struct Issues(Vec<ConfigIssue>);

impl Issues {
    fn push(&mut self, path: impl Into<String>, message: impl Into<String>) {
        self.0.push(ConfigIssue {
            path: path.into(),
            message: message.into(),
        });
    }

    fn check(&mut self, ok: bool, path: &str, message: impl FnOnce() -> String) {
        if !ok {
            self.push(path, message());
        }
    }
}

fn to_zero_based(sets: &[Vec<usize>], path: &str, issues: &mut Issues) -> Vec<Vec<usize>> {
    sets.iter()
        .enumerate()
        .map(|(s, set)| {
            set.iter()
                .enumerate()
                .filter_map(|(j, &i)| {
                    if i == 0 {
                        issues.push(format!("{path}[{s}][{j}]"), "source indices are 1-based");
                        None
                    } else {
                        Some(i - 1)
                    }
                })
                .collect()
        })
        .collect()
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::single("config", e.to_string().trim_end().to_owned()))
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text =
            std::fs::read_to_string(path).map_err(|e| ConfigError::single("config", format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String, toml::ser::Error> {
        toml::to_string(self)
    }

    fn arms(&self, issues: &mut Issues) -> Option<Vec<ArmDistribution>> {
        let inst = &self.instance;
        match (&inst.means, &inst.arms) {
            (Some(_), Some(_)) => {
                issues.push("instance", "give either `means` or `arms`, not both");
                None
            }
            (None, None) => {
                issues.push("instance.means", "source arms are required (`means` or `arms`)");
                None
            }
            (Some(means), None) => {
                let sd = inst.sd.unwrap_or(self.experiment.sigma);
                Some(means.iter().map(|&mean| ArmDistribution::Gaussian { mean, sd }).collect())
            }
            (None, Some(arms)) => {
                if inst.sd.is_some() {
                    issues.push("instance.sd", "only used together with `means`");
                }
                Some(arms.clone())
            }
        }
    }

    fn preset_spec(&self, n: usize, issues: &mut Issues) -> Option<PresetSpec> {
        let inst = &self.instance;
        let required =
            |issues: &mut Issues, field: &str| issues.push(format!("instance.{field}"), format!("required for preset {:?}", inst.preset));
        Some(match inst.preset {
            PresetKind::Bai => PresetSpec::Bai { n },
            PresetKind::Topk => match inst.k {
                Some(k) => PresetSpec::TopK { n, k },
                None => {
                    required(issues, "k");
                    return None;
                }
            },
            PresetKind::Thresholding => match inst.theta {
                Some(theta) => PresetSpec::Thresholding { n, theta },
                None => {
                    required(issues, "theta");
                    return None;
                }
            },
            PresetKind::Cpe => match &inst.decision_class {
                Some(class) => PresetSpec::Cpe {
                    n,
                    decision_class: to_zero_based(class, "instance.decision_class", issues),
                },
                None => {
                    required(issues, "decision_class");
                    return None;
                }
            },
            PresetKind::PropertyTesting => match (&inst.property_sets, &inst.membership_sets) {
                (Some(sets), Some(members)) => {
                    if sets.len() != n {
                        issues.push(
                            "instance.property_sets",
                            format!("expected one set per source arm ({n}), got {}", sets.len()),
                        );
                        return None;
                    }
                    PresetSpec::PropertyTesting {
                        property_sets: sets.clone(),
                        membership_sets: to_zero_based(members, "instance.membership_sets", issues),
                    }
                }
                (sets, members) => {
                    if sets.is_none() {
                        required(issues, "property_sets");
                    }
                    if members.is_none() {
                        required(issues, "membership_sets");
                    }
                    return None;
                }
            },
            PresetKind::Linear | PresetKind::Grid => return None,
        })
    }

    fn transfer(&self, n: usize, issues: &mut Issues) -> Option<(TransferFunction, Vec<Hardness>)> {
        let inst = &self.instance;
        let eps = self.experiment.epsilon;
        let unused: &[(&str, bool)] = &[
            ("k", inst.k.is_some() && inst.preset != PresetKind::Topk),
            ("theta", inst.theta.is_some() && inst.preset != PresetKind::Thresholding),
            ("decision_class", inst.decision_class.is_some() && inst.preset != PresetKind::Cpe),
            (
                "property_sets",
                inst.property_sets.is_some() && inst.preset != PresetKind::PropertyTesting,
            ),
            (
                "membership_sets",
                inst.membership_sets.is_some() && inst.preset != PresetKind::PropertyTesting,
            ),
            ("matrix", inst.matrix.is_some() && inst.preset != PresetKind::Linear),
            ("components", inst.components.is_some() && inst.preset != PresetKind::Grid),
        ];
        for (field, bad) in unused {
            if *bad {
                issues.push(format!("instance.{field}"), format!("not used by preset {:?}", inst.preset));
            }
        }
        let built = match inst.preset {
            PresetKind::Linear => {
                let Some(matrix) = &inst.matrix else {
                    issues.push("instance.matrix", "required for preset Linear");
                    return None;
                };
                TransferFunction::from_matrix(matrix)
                    .map(|tf| {
                        (
                            tf,
                            vec![Hardness::Linear {
                                matrix: matrix.clone(),
                                epsilon: eps,
                            }],
                        )
                    })
                    .map_err(|e| issues.push("instance.matrix", e.to_string()))
                    .ok()?
            }
            PresetKind::Grid => {
                let Some(rows) = &inst.components else {
                    issues.push("instance.components", "required for preset Grid");
                    return None;
                };
                let tf = TransferFunction::new(rows.clone())
                    .map_err(|e| issues.push("instance.components", e.to_string()))
                    .ok()?;
                let hardness = linear_matrix(&tf)
                    .map(|matrix| Hardness::Linear { matrix, epsilon: eps })
                    .into_iter()
                    .collect();
                (tf, hardness)
            }
            _ => {
                let spec = self.preset_spec(n, issues)?;
                if let Err(e) = spec.check_epsilon(eps) {
                    issues.push("experiment.epsilon", e.to_string());
                }
                let tf = spec.build().map_err(|e| issues.push("instance", e.to_string())).ok()?;
                let hardness = spec.hardness(&tf, eps);
                (tf, hardness)
            }
        };
        let (mut tf, hardness) = built;
        if tf.n_source() != n {
            issues.push(
                "instance",
                format!("transfer function expects {} source arms, but {n} are given", tf.n_source()),
            );
            return None;
        }
        if tf.n_target() < 2 {
            issues.push("instance", format!("need at least two target arms, got {}", tf.n_target()));
        }
        if let Some(labels) = &inst.labels {
            match tf.clone().with_labels(labels.clone()) {
                Ok(t) => tf = t,
                Err(e) => issues.push("instance.labels", e.to_string()),
            }
        }
        Some((tf, hardness))
    }

    /// Checks every constraint, reporting all violations together.
    pub fn validate(&self) -> Result<Experiment, ConfigError> {
        let mut issues = Issues::default();
        let e = &self.experiment;
        issues.check(e.delta > 0.0 && e.delta < 1.0, "experiment.delta", || {
            format!("must lie in (0, 1), got {}", e.delta)
        });
        issues.check(e.epsilon >= 0.0 && e.epsilon.is_finite(), "experiment.epsilon", || {
            format!("must be finite and non-negative, got {}", e.epsilon)
        });
        issues.check(e.sigma > 0.0 && e.sigma.is_finite(), "experiment.sigma", || {
            format!("must be finite and positive, got {}", e.sigma)
        });
        issues.check(e.n_trials >= 1, "experiment.n_trials", || "must be at least 1".into());
        issues.check(e.max_rounds >= 1, "experiment.max_rounds", || "must be at least 1".into());
        issues.check(e.parallelism >= 1, "experiment.parallelism", || "must be at least 1".into());

        let arms = self.arms(&mut issues);
        let mut env = None;
        if let Some(arms) = arms {
            let mut ok = !arms.is_empty();
            if arms.is_empty() {
                issues.push("instance.means", "at least one source arm is required");
            }
            let list = if self.instance.means.is_some() {
                "instance.means"
            } else {
                "instance.arms"
            };
            for (i, arm) in arms.iter().enumerate() {
                if let Err(message) = arm.validate() {
                    issues.push(format!("{list}[{i}]"), message);
                    ok = false;
                } else if e.sigma > 0.0 && arm.sub_gaussian_scale() > e.sigma {
                    issues.push(
                        format!("{list}[{i}]"),
                        format!("sub-Gaussian scale {} exceeds sigma = {}", arm.sub_gaussian_scale(), e.sigma),
                    );
                    ok = false;
                }
            }
            if ok {
                env = BanditEnv::new(arms).map_err(|err| issues.push("instance", err.to_string())).ok();
            }
        }

        let transfer = env.as_ref().and_then(|env| self.transfer(env.n_arms(), &mut issues));

        let n = env.as_ref().map(BanditEnv::n_arms);
        let scale_shift = match (&self.microlucb, n) {
            (Some(section), Some(n)) => {
                if let Err(err) = validate_scale_shift(&section.scale_shift, n) {
                    issues.push("microlucb.scale_shift", err.to_string());
                }
                section.scale_shift.clone()
            }
            (None, Some(n)) => vec![(1.0, 0.0); n],
            _ => Vec::new(),
        };

        if !issues.0.is_empty() {
            return Err(ConfigError { issues: issues.0 });
        }
        let (env, (tf, hardness)) = (env.expect("checked"), transfer.expect("checked"));
        let instance = Instance::new(env, tf).map_err(|err| ConfigError::single("instance", err.to_string()))?;
        let algorithm = match e.algorithm {
            AlgorithmName::Tlucb => Algorithm::Tlucb,
            AlgorithmName::Microlucb => Algorithm::Microlucb {
                scale_shift: scale_shift.clone(),
            },
        };
        Ok(Experiment {
            instance,
            algorithm,
            settings: RunSettings {
                delta: e.delta,
                epsilon: e.epsilon,
                sigma: e.sigma,
                max_rounds: e.max_rounds,
            },
            n_trials: e.n_trials,
            base_seed: e.base_seed,
            parallelism: e.parallelism,
            scale_shift,
            hardness,
            out_dir: self.output.as_ref().map(|o| o.dir.clone()),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BAI: &str = r#"
[experiment]
algorithm = "tlucb"
delta = 0.1
epsilon = 0.0
sigma = 1.0
n_trials = 10
base_seed = 3

[instance]
preset = "bai"
means = [1.0, 0.0]
"#;

    #[test]
    fn minimal_config() {
        let cfg = ExperimentConfig::from_toml_str(BAI).unwrap();
        assert_eq!(cfg.experiment.max_rounds, DEFAULT_MAX_ROUNDS);
        assert_eq!(cfg.experiment.parallelism, 1);
        let exp = cfg.validate().unwrap();
        assert_eq!(exp.instance.source_means(), [1.0, 0.0]);
        assert_eq!(exp.hardness.len(), 2);
        assert_eq!(exp.scale_shift, vec![(1.0, 0.0); 2]);
    }

    #[test]
    fn round_trip() {
        let texts = [
            BAI.to_owned(),
            BAI.replace("preset = \"bai\"", "preset = \"property_testing\"\nproperty_sets = [[\"(0, inf)\"], [\"(-inf, -1] \", \"[2, 3)\"]]\nmembership_sets = [[], [1], [1, 2]]"),
            BAI.replace("preset = \"bai\"", "preset = \"grid\"\ncomponents = [[{ kind = \"linear\", coeff = 2.0 }, { kind = \"zero\" }], [{ kind = \"indicator\", set = [\"(0, inf)\"] }, { kind = \"zero\" }]]")
                .replace("algorithm = \"tlucb\"", "algorithm = \"microlucb\"")
                + "\n[microlucb]\nscale_shift = [[2.0, 0.5], [1.0, 0.0]]\n\n[output]\ndir = \"out\"\n",
        ];
        for text in texts {
            let cfg = ExperimentConfig::from_toml_str(&text).unwrap();
            let again = ExperimentConfig::from_toml_str(&cfg.to_toml_string().unwrap()).unwrap();
            assert_eq!(cfg, again);
        }
    }

    #[test]
    fn all_violations_reported() {
        let text = BAI
            .replace("delta = 0.1", "delta = 1.5")
            .replace("sigma = 1.0", "sigma = -1.0")
            .replace("n_trials = 10", "n_trials = 0");
        let err = ExperimentConfig::from_toml_str(&text).unwrap().validate().unwrap_err();
        let paths: Vec<&str> = err.issues.iter().map(|i| i.path.as_str()).collect();
        assert!(paths.contains(&"experiment.delta"));
        assert!(paths.contains(&"experiment.sigma"));
        assert!(paths.contains(&"experiment.n_trials"));
        assert!(err.to_string().contains("experiment.delta: must lie in (0, 1), got 1.5"));
    }

    #[test]
    fn preset_errors_have_paths() {
        let topk = BAI.replace("preset = \"bai\"", "preset = \"topk\"");
        let err = ExperimentConfig::from_toml_str(&topk).unwrap().validate().unwrap_err();
        assert_eq!(err.issues[0].path, "instance.k");

        let thr = BAI
            .replace("preset = \"bai\"", "preset = \"thresholding\"\ntheta = 0.5")
            .replace("epsilon = 0.0", "epsilon = 0.1");
        let err = ExperimentConfig::from_toml_str(&thr).unwrap().validate().unwrap_err();
        assert_eq!(err.issues[0].path, "experiment.epsilon");

        let cpe = BAI.replace("preset = \"bai\"", "preset = \"cpe\"\ndecision_class = [[0], [1]]");
        let err = ExperimentConfig::from_toml_str(&cpe).unwrap().validate().unwrap_err();
        assert_eq!(err.issues[0].path, "instance.decision_class[0][0]");

        let wide = BAI.replace("means = [1.0, 0.0]", "means = [1.0, 0.0]\nsd = 2.0");
        let err = ExperimentConfig::from_toml_str(&wide).unwrap().validate().unwrap_err();
        assert_eq!(err.issues.len(), 2);
        assert!(err.issues.iter().all(|i| i.path.starts_with("instance.means[")));

        let stray = BAI.replace("means = [1.0, 0.0]", "means = [1.0, 0.0]\ntheta = 1.0");
        let err = ExperimentConfig::from_toml_str(&stray).unwrap().validate().unwrap_err();
        assert_eq!(err.issues[0].path, "instance.theta");
    }

    #[test]
    fn parse_errors() {
        assert!(ExperimentConfig::from_toml_str("[experiment]\n").is_err());
        let unknown = BAI.replace("preset = \"bai\"", "preset = \"bai\"\nbogus = 1");
        assert!(ExperimentConfig::from_toml_str(&unknown).is_err());
        let bad_set = BAI.replace(
            "preset = \"bai\"",
            "preset = \"property_testing\"\nproperty_sets = [[\"(0, \"], [\"(0, 1)\"]]\nmembership_sets = [[1], [2]]",
        );
        assert!(ExperimentConfig::from_toml_str(&bad_set).is_err());
    }

    #[test]
    fn explicit_arms() {
        let text = BAI.replace(
            "means = [1.0, 0.0]",
            "\n[[instance.arms]]\ndistribution = \"bernoulli\"\np = 0.7\n\n[[instance.arms]]\ndistribution = \"uniform\"\nlo = -1.0\nhi = 1.0\n",
        );
        let exp = ExperimentConfig::from_toml_str(&text).unwrap().validate().unwrap();
        assert_eq!(exp.instance.source_means(), [0.7, 0.0]);
    }

    #[test]
    fn microlucb_scale_checked() {
        let text = BAI.to_owned() + "\n[microlucb]\nscale_shift = [[0.0, 0.0], [1.0, 0.0]]\n";
        let err = ExperimentConfig::from_toml_str(&text).unwrap().validate().unwrap_err();
        assert_eq!(err.issues[0].path, "microlucb.scale_shift");
    }
}
