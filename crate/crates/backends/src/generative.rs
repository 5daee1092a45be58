use std::path::Path;

use base64::Engine;
use serde::{Deserialize, Serialize};
use unisim_core::MediaItem;

use crate::encoder::BackendError;

/// An instruction-following multi-modal model.
///
/// `images` are in slot order: the first `<image>` token in the instruction
/// refers to `images[0]`, and so on.
pub trait GenerativeBackend: Send + Sync {
    fn backend_id(&self) -> &str;

    fn answer(&self, instruction: &str, images: &[MediaItem]) -> Result<String, BackendError>;
}

impl<T: GenerativeBackend + ?Sized> GenerativeBackend for std::sync::Arc<T> {
    fn backend_id(&self) -> &str {
        (**self).backend_id()
    }
    fn answer(&self, instruction: &str, images: &[MediaItem]) -> Result<String, BackendError> {
        (**self).answer(instruction, images)
    }
}

/// Image reference sent to an external generative endpoint. `data` carries
/// the base64-encoded file bytes when the adapter inlines payloads.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImagePayload {
    pub uri: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub data: Option<String>,
}

/// Request body for external generative endpoints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerateRequest {
    pub instruction: String,
    pub images: Vec<ImagePayload>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerateResponse {
    pub text: String,
}

impl GenerateRequest {
    pub fn build(
        instruction: &str,
        images: &[MediaItem],
        inline: bool,
        media_root: Option<&Path>,
    ) -> Result<Self, BackendError> {
        let images = images
            .iter()
            .map(|item| {
                if !item.is_image() {
                    return Err(BackendError::Generate {
                        backend: String::new(),
                        message: format!("text item in image slot: {:?}", item.locator()),
                    });
                }
                let data = match item.image_path(media_root) {
                    Some(path) if inline => {
                        let bytes = std::fs::read(&path)
                            .map_err(|source| unisim_core::CoreError::Io { path, source })?;
                        Some(base64::engine::general_purpose::STANDARD.encode(bytes))
                    }
                    _ => None,
                };
                Ok(ImagePayload {
                    uri: item.locator().to_string(),
                    data,
                })
            })
            .collect::<Result<_, BackendError>>()?;
        Ok(Self {
            instruction: instruction.to_string(),
            images,
        })
    }
}
