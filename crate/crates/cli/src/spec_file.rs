//! JSON channel-spec ingestion.

use std::path::{Path, PathBuf};

use dispersionlab::{ChannelSpec, GpParams};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const BUILTIN_PREFIX: &str = "builtin:";
const STUCK_AT: &str = include_str!("../specs/stuck_at.json");

/// Auxiliary block: `Q` indexed `[s][u]`, `phi` indexed `[u][s]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AuxBlock {
    pub aux_size: usize,
    #[serde(rename = "Q")]
    pub q: Vec<Vec<f64>>,
    pub phi: Vec<Vec<usize>>,
}

/// On-disk channel description; `kernel` is indexed `[x][s][y]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpecFile {
    pub state_dist: Vec<f64>,
    pub kernel: Vec<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub aux: Option<AuxBlock>,
}

/// A spec given inline or by path (`builtin:stuck-at` names the bundled one).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SpecRef {
    Inline(SpecFile),
    Path(String),
}

impl SpecRef {
    /// Loads path references, resolving relative paths against `base`.
    pub fn resolve(&self, base: &Path) -> Result<SpecFile, CliError> {
        match self {
            SpecRef::Inline(s) => Ok(s.clone()),
            SpecRef::Path(p) if p.starts_with(BUILTIN_PREFIX) => load_spec(p),
            SpecRef::Path(p) => {
                let path = Path::new(p);
                let full: PathBuf = if path.is_absolute() { path.into() } else { base.join(path) };
                load_spec(&full.to_string_lossy())
            }
        }
    }
}

pub fn load_spec(source: &str) -> Result<SpecFile, CliError> {
    let text = match source.strip_prefix(BUILTIN_PREFIX) {
        Some("stuck-at") => STUCK_AT.to_string(),
        Some(other) => return Err(CliError::Ingestion(format!("unknown builtin spec '{other}' (available: stuck-at)"))),
        None => std::fs::read_to_string(source).map_err(|e| CliError::Ingestion(format!("{source}: {e}")))?,
    };
    parse_spec(&text).map_err(|e| match e {
        CliError::Ingestion(msg) => CliError::Ingestion(format!("{source}: {msg}")),
        other => other,
    })
}

pub fn parse_spec(text: &str) -> Result<SpecFile, CliError> {
    if text.trim().is_empty() {
        return Err(CliError::Ingestion("channel spec is empty".into()));
    }
    serde_json::from_str(text).map_err(|e| CliError::Ingestion(e.to_string()))
}

impl SpecFile {
    pub fn channel(&self) -> Result<ChannelSpec<f64>, CliError> {
        ChannelSpec::new(self.state_dist.clone(), self.kernel.clone())
            .map_err(|e| CliError::Ingestion(format!("fields state_dist/kernel: {e}")))
    }

    /// Parameters from the aux block, restricted to the states the channel keeps.
    pub fn params(&self, channel: &ChannelSpec<f64>) -> Result<Option<GpParams<f64>>, CliError> {
        let Some(aux) = &self.aux else { return Ok(None) };
        let bad = |msg: String| CliError::Ingestion(format!("field aux: {msg}"));
        if aux.phi.len() != aux.aux_size || aux.q.iter().any(|row| row.len() != aux.aux_size) {
            return Err(bad(format!("Q rows and phi must have aux_size = {} entries", aux.aux_size)));
        }
        if aux.q.len() != self.state_dist.len() || aux.phi.iter().any(|row| row.len() != self.state_dist.len()) {
            return Err(bad("Q and phi must cover every state in state_dist".into()));
        }
        let q = channel.retain_states(&aux.q).map_err(|e| bad(e.to_string()))?;
        let phi = aux
            .phi
            .iter()
            .map(|row| channel.retain_states(row))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| bad(e.to_string()))?;
        GpParams::new(q, phi).map(Some).map_err(|e| bad(e.to_string()))
    }

    pub fn require_params(&self, channel: &ChannelSpec<f64>) -> Result<GpParams<f64>, CliError> {
        self.params(channel)?
            .ok_or_else(|| CliError::Ingestion("this operation needs an aux block (Q and phi) in the spec".into()))
    }
}
