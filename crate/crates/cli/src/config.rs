//! Configuration types shared by the subcommands.
//!
//! Each subcommand reads one TOML file; command-line flags override file
//! values. The effective configuration serializes back to a canonical TOML
//! form which is embedded as a comment header in every output file, so a
//! result file always carries the exact inputs that produced it.

use serde::{Deserialize, Serialize};
use splithmc::sampler::{ChainConfig, DurationMode};
use splithmc::schemes::SplittingScheme;
use splithmc::targets::{DemoTarget, GaussianTarget, ProductTarget};

use crate::CliError;

/// Splitting-scheme selector.
#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SchemeConfig {
    pub kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
}

impl Default for SchemeConfig {
    fn default() -> Self {
        SchemeConfig {
            kind: "velocity_verlet".into(),
            a: None,
            b: None,
            n: None,
        }
    }
}

impl SchemeConfig {
    pub fn build(&self) -> Result<SplittingScheme, CliError> {
        let need = |opt: Option<f64>, field: &str| {
            opt.ok_or_else(|| {
                CliError::Config(format!("scheme.{field}: required for kind '{}'", self.kind))
            })
        };
        match self.kind.as_str() {
            "lie_trotter" => Ok(SplittingScheme::lie_trotter()),
            "velocity_verlet" => Ok(SplittingScheme::velocity_verlet()),
            "position_verlet" => Ok(SplittingScheme::position_verlet()),
            "two_stage" => SplittingScheme::two_stage(need(self.b, "b")?)
                .map_err(|e| CliError::Config(format!("scheme.b: {e}"))),
            "three_stage" => SplittingScheme::three_stage(need(self.a, "a")?, need(self.b, "b")?)
                .map_err(|e| CliError::Config(format!("scheme: {e}"))),
            "blanes_two_stage" => Ok(SplittingScheme::blanes_two_stage()),
            "blanes_three_stage" => Ok(SplittingScheme::blanes_three_stage()),
            "verlet_concat" => {
                let n = self.n.ok_or_else(|| {
                    CliError::Config("scheme.n: required for kind 'verlet_concat'".into())
                })?;
                SplittingScheme::verlet_concat(n)
                    .map_err(|e| CliError::Config(format!("scheme.n: {e}")))
            }
            other => Err(CliError::Config(format!(
                "scheme.kind: unknown scheme '{other}'"
            ))),
        }
    }
}

/// Target-distribution selector.
#[derive(Clone, Debug, Default, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct TargetConfig {
    /// std_normal | gaussian | double_well | quartic | product
    pub kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    /// Stiffness matrix rows for `gaussian`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<Vec<Vec<f64>>>,
    /// Optional mass matrix rows for `gaussian`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mass: Option<Vec<Vec<f64>>>,
    /// Base kind for `product` (std_normal | double_well | quartic).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub base: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub copies: Option<usize>,
}

/// A target built from configuration.
#[derive(Debug)]
pub enum BuiltTarget {
    Gaussian(GaussianTarget),
    Demo(DemoTarget),
    ProductNormal(ProductTarget<GaussianTarget>),
    ProductDemo(ProductTarget<DemoTarget>),
}

impl BuiltTarget {
    pub fn as_system(&self) -> &dyn splithmc::integrators::SeparableSystem {
        match self {
            BuiltTarget::Gaussian(t) => t,
            BuiltTarget::Demo(t) => t,
            BuiltTarget::ProductNormal(t) => t,
            BuiltTarget::ProductDemo(t) => t,
        }
    }

    pub fn as_gaussian(&self) -> Option<&GaussianTarget> {
        match self {
            BuiltTarget::Gaussian(t) => Some(t),
            _ => None,
        }
    }
}

fn flatten(rows: &[Vec<f64>], field: &str) -> Result<(Vec<f64>, usize), CliError> {
    let d = rows.len();
    let mut flat = Vec::with_capacity(d * d);
    for row in rows {
        if row.len() != d {
            return Err(CliError::Config(format!(
                "target.{field}: must be square, got a row of length {} in a {d}-row matrix",
                row.len()
            )));
        }
        flat.extend_from_slice(row);
    }
    Ok((flat, d))
}

impl TargetConfig {
    pub fn std_normal(dim: usize) -> Self {
        TargetConfig {
            kind: "std_normal".into(),
            dim: Some(dim),
            ..TargetConfig::default()
        }
    }

    pub fn build(&self) -> Result<BuiltTarget, CliError> {
        match self.kind.as_str() {
            "std_normal" => {
                let dim = self.dim.unwrap_or(1);
                if dim == 0 {
                    return Err(CliError::Config("target.dim: must be at least 1".into()));
                }
                Ok(BuiltTarget::Gaussian(GaussianTarget::standard_normal(dim)))
            }
            "gaussian" => {
                let rows = self.k.as_ref().ok_or_else(|| {
                    CliError::Config("target.k: required for kind 'gaussian'".into())
                })?;
                let (k, d) = flatten(rows, "k")?;
                let mass = match &self.mass {
                    None => None,
                    Some(rows) => {
                        let (m, dm) = flatten(rows, "mass")?;
                        if dm != d {
                            return Err(CliError::Config(
                                "target.mass: dimension differs from target.k".into(),
                            ));
                        }
                        Some(m)
                    }
                };
                GaussianTarget::with_mass(k, mass, d)
                    .map(BuiltTarget::Gaussian)
                    .map_err(|e| CliError::Config(format!("target.k: {e}")))
            }
            "double_well" => Ok(BuiltTarget::Demo(DemoTarget::double_well())),
            "quartic" => Ok(BuiltTarget::Demo(DemoTarget::quartic())),
            "product" => {
                let copies = self.copies.ok_or_else(|| {
                    CliError::Config("target.copies: required for kind 'product'".into())
                })?;
                if copies == 0 {
                    return Err(CliError::Config("target.copies: must be at least 1".into()));
                }
                let base = self.base.as_deref().unwrap_or("std_normal");
                match base {
                    "std_normal" => Ok(BuiltTarget::ProductNormal(ProductTarget::new(
                        GaussianTarget::standard_normal(self.dim.unwrap_or(1)),
                        copies,
                    ))),
                    "double_well" => Ok(BuiltTarget::ProductDemo(ProductTarget::new(
                        DemoTarget::double_well(),
                        copies,
                    ))),
                    "quartic" => Ok(BuiltTarget::ProductDemo(ProductTarget::new(
                        DemoTarget::quartic(),
                        copies,
                    ))),
                    other => Err(CliError::Config(format!(
                        "target.base: unknown base '{other}'"
                    ))),
                }
            }
            other => Err(CliError::Config(format!(
                "target.kind: unknown target '{other}'"
            ))),
        }
    }
}

/// Chain parameters for the `sample` subcommand.
#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ChainSection {
    /// hmc | rhmc | uniform_h | ghmc | xhmc | mala | exact | exact_rhmc
    pub variant: String,
    pub lambda: f64,
    pub h: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phi: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub extra_chances: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub init: Option<Vec<f64>>,
}

impl Default for ChainSection {
    fn default() -> Self {
        ChainSection {
            variant: "hmc".into(),
            lambda: 1.0,
            h: 0.1,
            delta: None,
            phi: None,
            extra_chances: None,
            init: None,
        }
    }
}

impl ChainSection {
    pub fn chain_config(&self, seed: u64) -> Result<ChainConfig, CliError> {
        let mut cfg = ChainConfig::new(self.lambda, self.h, seed);
        match self.variant.as_str() {
            "mala" => {
                cfg.lambda = self.h;
            }
            "uniform_h" => {
                cfg.duration = DurationMode::UniformStep {
                    delta: self.delta.unwrap_or(0.1),
                };
            }
            "rhmc" => {
                cfg.duration = DurationMode::GeometricSteps;
            }
            "ghmc" => {
                cfg.ghmc_phi = self.phi.unwrap_or(std::f64::consts::PI / 2.0);
            }
            "xhmc" => {
                cfg.extra_chances = self.extra_chances.unwrap_or(1);
            }
            "hmc" | "exact" | "exact_rhmc" => {}
            other => {
                return Err(CliError::Config(format!(
                    "chain.variant: unknown variant '{other}'"
                )))
            }
        }
        cfg.validate()
            .map_err(|e| CliError::Config(format!("chain.{}: {}", e.field, e.message)))?;
        Ok(cfg)
    }
}

/// Full configuration of the `sample` subcommand.
#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SampleConfig {
    pub seed: u64,
    pub out: String,
    pub transitions: u64,
    #[serde(default = "one")]
    pub chains: u64,
    pub target: TargetConfig,
    #[serde(default)]
    pub scheme: SchemeConfig,
    pub chain: ChainSection,
}

fn one() -> u64 {
    1
}

/// Configuration of the `harmonic` subcommand.
#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct HarmonicConfig {
    #[serde(default)]
    pub seed: u64,
    pub out: String,
    #[serde(default)]
    pub scheme: SchemeConfig,
    pub h_max: f64,
    pub points: usize,
}

/// Configuration of the `phmc` subcommand.
#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct PhmcConfig {
    pub seed: u64,
    pub out: String,
    pub s_len: f64,
    /// Grid spacings to sweep (each must divide s_len into d+1 cells).
    pub ds: Vec<f64>,
    pub c: Vec<f64>,
    pub lambda: f64,
    pub transitions: u64,
    /// "prhmc" (geometric step counts) or "phmc" (fixed).
    #[serde(default = "default_mode")]
    pub mode: String,
    pub h_min: f64,
    pub h_max: f64,
    pub h_points: usize,
    /// Optional long-run variance study appended as a second table.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub variance_run: Option<VarianceRun>,
}

fn default_mode() -> String {
    "prhmc".into()
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct VarianceRun {
    pub c: f64,
    pub ds: f64,
    pub h: f64,
    pub transitions: u64,
}

/// Configuration of the `tune` subcommand.
#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct TuneConfig {
    pub seed: u64,
    pub out: String,
    pub target: TargetConfig,
    #[serde(default)]
    pub scheme: SchemeConfig,
    pub lambda: f64,
    /// Defaults to 0.651, the efficiency optimum for second-order schemes.
    #[serde(default = "default_target_acceptance")]
    pub target_acceptance: f64,
    #[serde(default = "default_pilot")]
    pub pilot_transitions: u64,
    #[serde(default = "default_h_init")]
    pub h_init: f64,
}

pub fn default_target_acceptance() -> f64 {
    0.651
}

fn default_pilot() -> u64 {
    2000
}

fn default_h_init() -> f64 {
    0.5
}

/// Configuration of the `scaling` subcommand.
#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ScalingConfig {
    pub seed: u64,
    pub out: String,
    pub target: TargetConfig,
    #[serde(default)]
    pub scheme: SchemeConfig,
    pub ell: f64,
    pub nu: u32,
    pub m_list: Vec<usize>,
    pub lambda: f64,
    pub transitions: u64,
}

/// Parse a TOML configuration, mapping failures to config errors that name
/// the offending field.
pub fn parse_config<T: for<'de> Deserialize<'de>>(text: &str) -> Result<T, CliError> {
    toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
}

/// Canonical serialized form of a configuration.
pub fn canonical<T: Serialize>(config: &T) -> String {
    toml::to_string(config).expect("configuration serializes to TOML")
}
