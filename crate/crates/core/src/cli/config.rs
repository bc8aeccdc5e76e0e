use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::function_space::{GridGenerator, ModerateWeight};
use crate::schedule::{EpsSchedule, EpsVariant, InnerSumStart};
use crate::spaces::{BasisMode, WeightSequence, WeightedLpSpace};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Pipeline {
    Finite,
    Localized,
    Function,
    Gabor,
    Decomposition,
}

impl Pipeline {
    pub fn name(self) -> &'static str {
        match self {
            Pipeline::Finite => "finite",
            Pipeline::Localized => "localized",
            Pipeline::Function => "function",
            Pipeline::Gabor => "gabor",
            Pipeline::Decomposition => "decomposition",
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Optional here; the command line names the pipeline.
    pub pipeline: Option<Pipeline>,
    /// Number of family members.
    pub k: usize,
    /// Truncation index `N`, defaults to `k`.
    pub trunc: Option<usize>,
    /// Defaults to 1.5 times the relevant shift norm.
    pub lambda: Option<f64>,
    #[serde(default)]
    pub space: SpaceConfig,
    pub eps: EpsConfig,
    #[serde(default)]
    pub family: FamilyConfig,
    #[serde(default)]
    pub localized: LocalizedConfig,
    pub function: Option<FunctionConfig>,
    pub gabor: Option<GaborConfig>,
    pub decomposition: Option<DecompositionConfig>,
    #[serde(default)]
    pub diagnostics: DiagnosticsConfig,
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceConfig {
    #[serde(default = "two")]
    pub p: f64,
    #[serde(default = "WeightSequence::unit")]
    pub weights: WeightSequence,
    #[serde(default)]
    pub basis: BasisMode,
}

fn two() -> f64 {
    2.0
}

impl Default for SpaceConfig {
    fn default() -> Self {
        SpaceConfig {
            p: 2.0,
            weights: WeightSequence::unit(),
            basis: BasisMode::Canonical,
        }
    }
}

impl SpaceConfig {
    pub fn build(&self) -> Result<WeightedLpSpace> {
        WeightedLpSpace::new(self.p, self.weights.clone(), self.basis)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VariantName {
    #[default]
    Plain,
    Weighted,
    SequenceSpace,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EpsConfig {
    pub epsilon: f64,
    #[serde(default)]
    pub variant: VariantName,
}

impl EpsConfig {
    /// The weighted variants take `p` and the weights from the space.
    pub fn build(&self, space: &SpaceConfig) -> Result<EpsSchedule> {
        let variant = match self.variant {
            VariantName::Plain => EpsVariant::Plain,
            VariantName::Weighted => EpsVariant::Weighted {
                p: space.p,
                weights: space.weights.clone(),
            },
            VariantName::SequenceSpace => EpsVariant::SequenceSpace {
                p: space.p,
                weights: space.weights.clone(),
            },
        };
        EpsSchedule::new(variant, self.epsilon)
    }
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(tag = "generator", rename_all = "snake_case", deny_unknown_fields)]
pub enum FamilyConfig {
    /// `f_k = e_k`
    #[default]
    Canonical,
    /// `f_k = amplitude e^{-rate |j - k|}`, cut where below `cutoff`
    Localized {
        amplitude: f64,
        rate: f64,
        #[serde(default = "default_cutoff")]
        cutoff: f64,
    },
    /// random coefficients in `[-1, 1]` on `1..=max_support`
    Random {
        max_support: usize,
        #[serde(default = "half")]
        density: f64,
        seed: Option<u64>,
    },
    /// CSV with columns `k,j,value`
    File { path: PathBuf },
    /// inline `[[j, value], ...]` per member
    Explicit { vectors: Vec<Vec<(usize, f64)>> },
}

fn default_cutoff() -> f64 {
    1e-16
}

fn half() -> f64 {
    0.5
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LocalizedConfig {
    #[serde(default)]
    pub inner_sum: InnerSumStart,
}

/// Member of a function-space family: a generator or a CSV file.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum MemberSpec {
    File { file: PathBuf },
    Generator(GridGenerator),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FunctionConfig {
    /// Grid steps per unit length.
    pub q: usize,
    /// Domain `[0, length)`.
    pub length: f64,
    #[serde(default = "one")]
    pub p: f64,
    #[serde(default)]
    pub weight: ModerateWeight,
    /// Cutoff from which tail certificates are fitted.
    #[serde(default)]
    pub d0: f64,
    /// Defaults to the smallest fitted rate.
    pub mu: Option<f64>,
    /// Family members (function pipeline) or the window `g` (first entry,
    /// gabor pipeline).
    pub members: Vec<MemberSpec>,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaborConfig {
    pub a: f64,
    pub b: f64,
    pub m_max: u64,
    /// Defaults to enough columns for `k` members.
    pub n_max: Option<u64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecompositionConfig {
    /// Bounds of the unperturbed family.
    pub a: f64,
    pub b: f64,
    pub epsilon: f64,
    /// Coordinates kept for the singular-value check; defaults to `k`.
    pub dimension: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagnosticsConfig {
    /// Random trials for the sampled Riesz ratios; 0 skips them.
    #[serde(default)]
    pub riesz_trials: usize,
    #[serde(default = "fifty")]
    pub riesz_max_dim: usize,
}

fn fifty() -> usize {
    50
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// Reads the file and resolves relative paths against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::from_toml(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let FamilyConfig::File { path } = &mut cfg.family {
            fix(path);
        }
        if let Some(f) = &mut cfg.function {
            for m in &mut f.members {
                if let MemberSpec::File { file } = m {
                    fix(file);
                }
            }
        }
        if let Some(out) = &mut cfg.output {
            fix(out);
        }
        Ok(cfg)
    }

    /// Checks that do not need any computation.
    pub fn validate(&self, pipeline: Pipeline) -> Result<()> {
        if let Some(p) = self.pipeline {
            if p != pipeline {
                return Err(Error::Config(format!(
                    "config is for the {} pipeline, command asked for {}",
                    p.name(),
                    pipeline.name()
                )));
            }
        }
        if self.k == 0 {
            return Err(Error::Config("k must be at least 1".into()));
        }
        if let Some(n) = self.trunc {
            if n > self.k {
                return Err(Error::Config(format!("trunc = {n} exceeds k = {}", self.k)));
            }
        }
        if let Some(l) = self.lambda {
            if !(l > 0.0 && l.is_finite()) {
                return Err(Error::Config(format!("lambda must be positive, got {l}")));
            }
        }
        self.space.build()?;
        self.eps.build(&self.space)?;
        if let FamilyConfig::File { path } = &self.family {
            if !path.exists() {
                return Err(Error::Config(format!(
                    "family file {} not found",
                    path.display()
                )));
            }
        }
        match pipeline {
            Pipeline::Localized => {
                if !matches!(self.family, FamilyConfig::Localized { .. }) {
                    return Err(Error::Config(
                        "the localized pipeline needs family.generator = \"localized\"".into(),
                    ));
                }
            }
            Pipeline::Function | Pipeline::Gabor => {
                let f = self.function.as_ref().ok_or_else(|| {
                    Error::Config(format!(
                        "the {} pipeline needs a [function] section",
                        pipeline.name()
                    ))
                })?;
                if f.members.is_empty() {
                    return Err(Error::Config("function.members is empty".into()));
                }
                for m in &f.members {
                    if let MemberSpec::File { file } = m {
                        if !file.exists() {
                            return Err(Error::Config(format!(
                                "grid file {} not found",
                                file.display()
                            )));
                        }
                    }
                }
                if pipeline == Pipeline::Function && f.members.len() < self.k {
                    return Err(Error::Config(format!(
                        "k = {} but only {} function members are listed",
                        self.k,
                        f.members.len()
                    )));
                }
                if pipeline == Pipeline::Gabor && self.gabor.is_none() {
                    return Err(Error::Config(
                        "the gabor pipeline needs a [gabor] section".into(),
                    ));
                }
            }
            Pipeline::Decomposition => {
                let d = self.decomposition.as_ref().ok_or_else(|| {
                    Error::Config(
                        "the decomposition pipeline needs a [decomposition] section".into(),
                    )
                })?;
                crate::decomposition::perturbed_bounds(d.a, d.b, d.epsilon)?;
            }
            Pipeline::Finite => {}
        }
        Ok(())
    }
}
