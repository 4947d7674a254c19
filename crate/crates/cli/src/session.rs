//! Everything `edit` needs to pick up where `generate` stopped.

use cadenza_core::llm_bridge::ChatSession;
use cadenza_core::pipeline::{GenerationConfig, RenderCache};
use cadenza_core::schema::Composition;
use serde::{Deserialize, Serialize};

pub const SESSION_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
pub struct SessionFile {
    pub version: u32,
    pub seed: u64,
    #[serde(default)]
    pub config: GenerationConfig,
    /// Absent when the session started from a composition file.
    #[serde(default)]
    pub chat: Option<ChatSession>,
    /// Current composition as JSON text.
    pub composition: String,
    #[serde(default)]
    pub cache: RenderCache,
}

impl SessionFile {
    pub fn new(
        seed: u64,
        config: GenerationConfig,
        chat: Option<ChatSession>,
        composition: &Composition,
        cache: RenderCache,
    ) -> Self {
        SessionFile {
            version: SESSION_VERSION,
            seed,
            config,
            chat,
            composition: composition.to_json(),
            cache,
        }
    }

    pub fn from_json(text: &str) -> Result<Self, String> {
        let file: SessionFile = serde_json::from_str(text).map_err(|e| e.to_string())?;
        if file.version != SESSION_VERSION {
            return Err(format!("unsupported session version {}", file.version));
        }
        Ok(file)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("session serializes")
    }
}
