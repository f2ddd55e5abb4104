use std::collections::BTreeMap;
use std::path::Path;

use serde::Deserialize;
use texmatch_core::search::FusionWeights;
use texmatch_core::{ExtractionConfig, GraphMatchParams, Variant};

use crate::io::read_text;
use crate::{CliError, CliResult};

/// Contents of `--params`. Every table is optional.
///
/// ```toml
/// [graph]
/// top_n = 200
/// [extraction]
/// patch_len = 64
/// [fusion]
/// e1 = 1.0
/// ```
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ParamsFile {
    pub graph: GraphMatchParams,
    pub extraction: ExtractionConfig,
    pub fusion: BTreeMap<Variant, f64>,
}

impl ParamsFile {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = read_text(path)?;
        let p: Self = toml::from_str(&text).map_err(|e| CliError::Malformed { path: path.into(), msg: e.to_string() })?;
        p.validate().map_err(|e| CliError::Contract(format!("{}: {e}", path.display())))?;
        Ok(p)
    }

    pub fn validate(&self) -> texmatch_core::Result<()> {
        self.graph.validate()?;
        self.extraction.validate()?;
        if let Some((v, w)) = self.fusion.iter().find(|(_, w)| !w.is_finite() || **w < 0.0) {
            return Err(texmatch_core::Error::InvalidParams(format!("fusion weight for {v} must be finite and >= 0, got {w}")));
        }
        Ok(())
    }

    pub fn weights(&self) -> FusionWeights {
        FusionWeights(self.fusion.clone())
    }
}
