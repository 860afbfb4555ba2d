//! The JSON experiment description.
//!
//! Every field has a default, so `{}` is a valid config. Unknown fields are
//! rejected so that typos surface as validation errors instead of silently
//! falling back to defaults.

use std::path::PathBuf;

use convgeom_core::{Activation, LayerSpec, PatchGeometry, WitnessKind};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Exact,
    Simulate,
    Scatter,
    GaussianCurve,
    Boundary,
    Concentration,
    Collapse,
    Witness,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Exact => "exact",
            Command::Simulate => "simulate",
            Command::Scatter => "scatter",
            Command::GaussianCurve => "gaussian-curve",
            Command::Boundary => "boundary",
            Command::Concentration => "concentration",
            Command::Collapse => "collapse",
            Command::Witness => "witness",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActivationConfig {
    Relu,
    Identity,
    Tanh,
    LeakyRelu(f64),
}

impl ActivationConfig {
    pub fn build(&self) -> Result<Activation, CliError> {
        Ok(match self {
            ActivationConfig::Relu => Activation::Relu,
            ActivationConfig::Identity => Activation::Identity,
            ActivationConfig::Tanh => Activation::tanh(),
            ActivationConfig::LeakyRelu(a) => Activation::leaky_relu(*a)?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeometryConfig {
    Standard,
    Centered,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LayerConfig {
    pub side: usize,
    /// Filter entry variance; the norm-preserving `1/(ν²_σ r²)` when absent.
    pub variance: Option<f64>,
    pub activation: ActivationConfig,
    pub geometry: GeometryConfig,
}

impl Default for LayerConfig {
    fn default() -> Self {
        Self {
            side: 3,
            variance: None,
            activation: ActivationConfig::Relu,
            geometry: GeometryConfig::Standard,
        }
    }
}

impl LayerConfig {
    pub fn build(&self) -> Result<LayerSpec, CliError> {
        let geometry = match self.geometry {
            GeometryConfig::Standard => PatchGeometry::Standard,
            GeometryConfig::Centered => PatchGeometry::Centered,
        };
        let activation = self.activation.build()?;
        Ok(match self.variance {
            Some(v) => LayerSpec::new(self.side, v, activation, geometry)?,
            None => LayerSpec::normalizing(self.side, activation, geometry)?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ImageModeConfig {
    Binary,
    Gray,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WitnessKindConfig {
    UpperBound,
    ZeroProduct,
    ExactEquality,
}

impl WitnessKindConfig {
    pub fn kind(self) -> WitnessKind {
        match self {
            WitnessKindConfig::UpperBound => WitnessKind::UpperBound,
            WitnessKindConfig::ZeroProduct => WitnessKind::ZeroProduct,
            WitnessKindConfig::ExactEquality => WitnessKind::ExactEquality,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            WitnessKindConfig::UpperBound => "upper_bound",
            WitnessKindConfig::ZeroProduct => "zero_product",
            WitnessKindConfig::ExactEquality => "exact_equality",
        }
    }
}

/// Where input pairs come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InputConfig {
    /// `pairs` correlated Gaussian pairs per entry of `rho`.
    Gaussian {
        n: usize,
        #[serde(default = "default_rho_grid")]
        rho: Vec<f64>,
    },
    /// `pairs` random scenes of `count` rectangles; even-indexed rectangles
    /// form the first image, odd-indexed the second.
    Rects {
        n: usize,
        count: usize,
        min_side: usize,
    },
    /// One explicit scene of `[row, col, height, width]` rectangles.
    Scene {
        n: usize,
        rects: Vec<[usize; 4]>,
    },
    /// `pairs` pairs drawn uniformly with replacement from `paths`.
    Images {
        paths: Vec<PathBuf>,
        mode: ImageModeConfig,
    },
    /// One witness pair per kind and parameter.
    Witness {
        #[serde(default = "all_witnesses")]
        kinds: Vec<WitnessKindConfig>,
        #[serde(default = "default_witness_rho")]
        rho: Vec<f64>,
    },
    RedGreen {
        n: usize,
    },
}

fn default_rho_grid() -> Vec<f64> {
    vec![-0.75, -0.5, -0.25, 0.0, 0.25, 0.5, 0.75]
}

fn all_witnesses() -> Vec<WitnessKindConfig> {
    vec![
        WitnessKindConfig::UpperBound,
        WitnessKindConfig::ZeroProduct,
        WitnessKindConfig::ExactEquality,
    ]
}

fn default_witness_rho() -> Vec<f64> {
    vec![0.1, 0.5, 0.9]
}

impl Default for InputConfig {
    fn default() -> Self {
        InputConfig::Gaussian {
            n: 16,
            rho: default_rho_grid(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    /// If present, must match the command given on the command line.
    pub command: Option<Command>,
    pub seed: u64,
    pub layer: LayerConfig,
    pub input: InputConfig,
    /// Filters per bank (per layer for `collapse`).
    pub filters: usize,
    pub pairs: usize,
    /// Bank sizes for `concentration`.
    pub ns: Vec<usize>,
    pub trials: usize,
    pub depth: usize,
    pub memory_cap_bytes: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            command: None,
            seed: 0,
            layer: LayerConfig::default(),
            input: InputConfig::default(),
            filters: 100,
            pairs: 200,
            ns: vec![100, 400, 1600, 6400],
            trials: 50,
            depth: 5,
            memory_cap_bytes: convgeom_core::DEFAULT_MEMORY_CAP,
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Validation(format!("invalid config: {e}")))
    }

    /// SHA-256 of the canonical serialisation; field order is fixed by the
    /// struct, so equal configs hash equally regardless of input layout.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_vec(self).expect("config serialises");
        hex::encode(Sha256::digest(canonical))
    }

    pub fn check_command(&self, cmd: Command) -> Result<(), CliError> {
        match self.command {
            Some(c) if c != cmd => Err(CliError::Validation(format!(
                "config is for `{}` but `{}` was requested",
                c.name(),
                cmd.name()
            ))),
            _ => Ok(()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_takes_defaults() {
        let c = ExperimentConfig::from_json("{}").unwrap();
        assert_eq!(c, ExperimentConfig::default());
        assert_eq!(c.layer.build().unwrap().variance(), 2.0 / 9.0);
    }

    #[test]
    fn hash_ignores_layout() {
        let a = ExperimentConfig::from_json(r#"{"seed": 3, "filters": 10}"#).unwrap();
        let b = ExperimentConfig::from_json("{\n  \"filters\": 10,\n  \"seed\": 3\n}").unwrap();
        assert_eq!(a.hash(), b.hash());
        let c = ExperimentConfig::from_json(r#"{"seed": 4, "filters": 10}"#).unwrap();
        assert_ne!(a.hash(), c.hash());
    }

    #[test]
    fn typed_inputs_parse() {
        let c = ExperimentConfig::from_json(
            r#"{"layer": {"activation": {"leaky_relu": 0.2}, "geometry": "centered"},
                "input": {"kind": "scene", "n": 8, "rects": [[0, 0, 2, 3]]}}"#,
        )
        .unwrap();
        assert_eq!(c.layer.activation, ActivationConfig::LeakyRelu(0.2));
        assert!(matches!(c.input, InputConfig::Scene { n: 8, .. }));
    }

    #[test]
    fn unknown_fields_are_rejected() {
        assert!(ExperimentConfig::from_json(r#"{"seeds": 3}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"layer": {"sides": 3}}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"input": {"kind": "nope"}}"#).is_err());
    }
}
