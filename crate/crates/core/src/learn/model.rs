use serde::{Deserialize, Serialize};

use super::{BootstrapConfig, SearchConfig, StrengthTable};
use crate::error::{Error, Result};
use crate::fit::FittedBn;
use crate::graph::Dag;

/// A saved structure with the settings that produced it. Stored as JSON
/// with a `version` field; readers refuse other versions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelDocument {
    pub version: u32,
    pub dag: Dag,
    #[serde(default)]
    pub strengths: Option<StrengthTable>,
    #[serde(default)]
    pub search: Option<SearchConfig>,
    #[serde(default)]
    pub bootstrap: Option<BootstrapConfig>,
    #[serde(default)]
    pub fitted: Option<FittedBn>,
}

impl ModelDocument {
    pub const VERSION: u32 = 1;

    pub fn new(dag: Dag) -> Self {
        ModelDocument {
            version: Self::VERSION,
            dag,
            strengths: None,
            search: None,
            bootstrap: None,
            fitted: None,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value = serde_json::from_str(text)?;
        let found = value
            .get("version")
            .and_then(serde_json::Value::as_u64)
            .ok_or_else(|| Error::invalid("model document has no version field"))?;
        if found != u64::from(Self::VERSION) {
            return Err(Error::Version {
                found: u32::try_from(found).unwrap_or(u32::MAX),
                expected: Self::VERSION,
            });
        }
        let doc: ModelDocument = serde_json::from_value(value)?;
        if let Some(bn) = &doc.fitted {
            if bn.dag != doc.dag {
                return Err(Error::invalid("fitted network does not match the document's graph"));
            }
        }
        Ok(doc)
    }
}
