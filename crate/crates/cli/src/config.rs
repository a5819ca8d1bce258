//! Instance configuration: the JSON document that names a source, a channel,
//! and the transmission rate, plus optional sweep controls.

use crate::CliError;
use jscc::exponents::TransmissionRate;
use jscc::gallager::{RhoGrid, DEFAULT_RHO_STEP};
use jscc::hull::DistributionSet;
use jscc::prob::{ChannelSpec, InputDistribution, SourceSpec};
use serde::{Deserialize, Serialize};
use std::path::Path;

pub const SCHEMA_VERSION: u32 = 1;

const PRESET_6X4: &str = "example-6x4";
const PRESET_XI1: f64 = 0.065;
const PRESET_XI2: f64 = 0.01;

/// On-disk instance description. Unknown keys are rejected so a typo in a
/// probability vector fails loudly instead of being silently ignored.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceConfig {
    pub schema_version: u32,
    #[serde(default)]
    pub preset: Option<String>,
    #[serde(default)]
    pub xi1: Option<f64>,
    #[serde(default)]
    pub xi2: Option<f64>,
    #[serde(default)]
    pub channel: Option<Vec<Vec<f64>>>,
    pub source: Vec<f64>,
    pub t: f64,
    #[serde(default)]
    pub rho_step: Option<f64>,
    /// Restricts input distributions to this explicit list; the full simplex
    /// when absent.
    #[serde(default)]
    pub distributions: Option<Vec<Vec<f64>>>,
}

/// Config echoed into every result document, with all defaults filled in.
/// Feeding this echo back as a config file reproduces the document, so preset
/// instances keep their preset and xi values instead of an expanded matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolvedConfig {
    pub schema_version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub xi1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub xi2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub channel: Option<Vec<Vec<f64>>>,
    pub source: Vec<f64>,
    pub t: f64,
    pub rho_step: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub distributions: Option<Vec<Vec<f64>>>,
}

impl ResolvedConfig {
    /// An echo is itself a valid config document.
    pub fn to_instance(&self) -> Result<Instance, CliError> {
        let cfg = InstanceConfig {
            schema_version: self.schema_version,
            preset: self.preset.clone(),
            xi1: self.xi1,
            xi2: self.xi2,
            channel: self.channel.clone(),
            source: self.source.clone(),
            t: self.t,
            rho_step: Some(self.rho_step),
            distributions: self.distributions.clone(),
        };
        cfg.resolve()
    }
}

/// Validated instance ready for computation.
#[derive(Debug, Clone)]
pub struct Instance {
    pub source: SourceSpec,
    pub channel: ChannelSpec,
    pub t: TransmissionRate,
    pub set: DistributionSet,
    pub rho_step: f64,
    pub echo: ResolvedConfig,
}

impl Instance {
    pub fn unit_grid(&self) -> Result<RhoGrid, CliError> {
        RhoGrid::uniform(self.rho_step)
            .map_err(|e| CliError::ConfigInvalid(format!("rho_step: {e}")))
    }
}

pub fn load_instance(path: &Path) -> Result<Instance, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::ConfigParse(format!("{}: {e}", path.display())))?;
    let cfg: InstanceConfig = serde_json::from_str(&text)
        .map_err(|e| CliError::ConfigParse(format!("{}: {e}", path.display())))?;
    cfg.resolve()
}

impl InstanceConfig {
    pub fn resolve(self) -> Result<Instance, CliError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(CliError::ConfigInvalid(format!(
                "schema_version: expected {SCHEMA_VERSION}, got {}",
                self.schema_version
            )));
        }
        let channel = match (&self.preset, &self.channel) {
            (Some(name), None) => {
                if name != PRESET_6X4 {
                    return Err(CliError::ConfigInvalid(format!(
                        "preset: unknown preset {name:?} (available: {PRESET_6X4:?})"
                    )));
                }
                let xi1 = self.xi1.unwrap_or(PRESET_XI1);
                let xi2 = self.xi2.unwrap_or(PRESET_XI2);
                ChannelSpec::example_6x4(xi1, xi2)
                    .map_err(|e| CliError::ConfigInvalid(format!("preset: {e}")))?
            }
            (None, Some(rows)) => {
                if self.xi1.is_some() || self.xi2.is_some() {
                    return Err(CliError::ConfigInvalid(
                        "xi1/xi2: only meaningful together with a preset".into(),
                    ));
                }
                settle_channel(rows)
                    .map_err(|e| CliError::ConfigInvalid(format!("channel: {e}")))?
            }
            (Some(_), Some(_)) => {
                return Err(CliError::ConfigInvalid(
                    "channel: give either a preset or an explicit matrix, not both".into(),
                ))
            }
            (None, None) => {
                return Err(CliError::ConfigInvalid(
                    "channel: missing (give a matrix or a preset)".into(),
                ))
            }
        };
        let source = settle_source(&self.source)
            .map_err(|e| CliError::ConfigInvalid(format!("source: {e}")))?;
        let t = TransmissionRate::new(self.t)
            .map_err(|e| CliError::ConfigInvalid(format!("t: {e}")))?;
        let rho_step = self.rho_step.unwrap_or(DEFAULT_RHO_STEP);
        RhoGrid::uniform(rho_step)
            .map_err(|e| CliError::ConfigInvalid(format!("rho_step: {e}")))?;
        let mut members = Vec::new();
        let set = match &self.distributions {
            None => DistributionSet::AllSimplex,
            Some(rows) => {
                for (i, row) in rows.iter().enumerate() {
                    if row.len() != channel.num_inputs() {
                        return Err(CliError::ConfigInvalid(format!(
                            "distributions[{i}]: expected {} entries, got {}",
                            channel.num_inputs(),
                            row.len()
                        )));
                    }
                    members.push(settle_distribution(row).map_err(|e| {
                        CliError::ConfigInvalid(format!("distributions[{i}]: {e}"))
                    })?);
                }
                DistributionSet::explicit(members.clone())
                    .map_err(|e| CliError::ConfigInvalid(format!("distributions: {e}")))?
            }
        };
        let echo = ResolvedConfig {
            schema_version: SCHEMA_VERSION,
            xi1: self.preset.as_ref().map(|_| self.xi1.unwrap_or(PRESET_XI1)),
            xi2: self.preset.as_ref().map(|_| self.xi2.unwrap_or(PRESET_XI2)),
            channel: match self.preset {
                Some(_) => None,
                None => Some(channel.rows().to_vec()),
            },
            preset: self.preset,
            source: source.probs().to_vec(),
            t: t.get(),
            rho_step,
            distributions: self
                .distributions
                .is_some()
                .then(|| members.iter().map(|q| q.probs().to_vec()).collect()),
        };
        Ok(Instance {
            source,
            channel,
            t,
            set,
            rho_step,
            echo,
        })
    }
}

/// Renormalizes until the sum is exactly 1.0, so values echoed into a result
/// document come back bitwise identical when the echo is loaded as a config.
/// Division by an exact 1.0 is the identity, making the echo a fixed point.
fn fixed_point(mut row: Vec<f64>) -> Vec<f64> {
    for _ in 0..8 {
        let sum: f64 = row.iter().sum();
        if sum == 1.0 {
            break;
        }
        for v in &mut row {
            *v /= sum;
        }
    }
    row
}

fn settle_source(raw: &[f64]) -> jscc::Result<SourceSpec> {
    let first = SourceSpec::new(raw)?;
    SourceSpec::new(&fixed_point(first.probs().to_vec()))
}

fn settle_distribution(raw: &[f64]) -> jscc::Result<InputDistribution> {
    let first = InputDistribution::new(raw)?;
    InputDistribution::new(&fixed_point(first.probs().to_vec()))
}

fn settle_channel(raw_rows: &[Vec<f64>]) -> jscc::Result<ChannelSpec> {
    let first = ChannelSpec::new(raw_rows)?;
    let rows: Vec<Vec<f64>> = first
        .rows()
        .iter()
        .map(|r| fixed_point(r.clone()))
        .collect();
    ChannelSpec::new(&rows)
}
