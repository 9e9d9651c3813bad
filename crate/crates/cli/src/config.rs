//! Training configuration: defaults by mode, then the JSON file, then flags.

use std::path::Path;

use loopmesh::geometry::Interval;
use loopmesh::train::{AdamConfig, TrainConfig, TrainMode};
use serde::Deserialize;

use crate::error::{CliError, CliResult};

/// Partial loss weights as they appear in a config file.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightsFile {
    pub chamfer: Option<f64>,
    pub repulsion: Option<f64>,
    pub interior: Option<f64>,
    pub epsilon: Option<f64>,
}

/// Config file mirroring `TrainConfig`; every field is optional.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub mode: Option<TrainMode>,
    pub clamp_y: Option<Interval>,
    pub nodes: Option<usize>,
    pub weights: Option<WeightsFile>,
    pub lr: Option<f64>,
    pub epochs: Option<usize>,
    pub seed: Option<u64>,
    pub hidden1: Option<usize>,
    pub hidden2: Option<usize>,
    pub upsample: Option<usize>,
    pub loop_size: Option<usize>,
    pub adam: Option<AdamConfig>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }
}

/// Command-line values that override the file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub mode: Option<TrainMode>,
    pub seed: Option<u64>,
    pub nodes: Option<usize>,
    pub ratio: Option<f64>,
    pub interior: Option<f64>,
    pub epochs: Option<usize>,
    pub lr: Option<f64>,
}

/// Build and validate a `TrainConfig`.
///
/// The interior-penalty default follows the resolved mode unless the file or
/// a flag sets it.
pub fn resolve(file: Option<&ConfigFile>, flags: &Overrides) -> CliResult<TrainConfig> {
    let empty = ConfigFile::default();
    let file = file.unwrap_or(&empty);
    let mode = flags.mode.or(file.mode).unwrap_or(TrainMode::Standardised);
    let mut cfg = TrainConfig::for_mode(mode);

    macro_rules! set {
        ($($field:ident),*) => {$(
            if let Some(v) = file.$field { cfg.$field = v; }
        )*};
    }
    set!(clamp_y, nodes, lr, epochs, seed, hidden1, hidden2, upsample, loop_size, adam);
    if let Some(w) = &file.weights {
        let wt = &mut cfg.weights;
        wt.chamfer = w.chamfer.unwrap_or(wt.chamfer);
        wt.repulsion = w.repulsion.unwrap_or(wt.repulsion);
        wt.interior = w.interior.unwrap_or(wt.interior);
        wt.epsilon = w.epsilon.unwrap_or(wt.epsilon);
    }

    if let Some(v) = flags.seed {
        cfg.seed = v;
    }
    if let Some(v) = flags.nodes {
        cfg.nodes = v;
    }
    if let Some(v) = flags.epochs {
        cfg.epochs = v;
    }
    if let Some(v) = flags.lr {
        cfg.lr = v;
    }
    if let Some(v) = flags.ratio {
        cfg.weights.repulsion = v;
    }
    if let Some(v) = flags.interior {
        cfg.weights.interior = v;
    }
    cfg.validate()
        .map_err(|e| CliError::Config(e.to_string()))?;
    Ok(cfg)
}
