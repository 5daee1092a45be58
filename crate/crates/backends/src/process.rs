//! Adapters that delegate to an external program speaking JSON over stdio.
//!
//! One process is spawned per request. The encoder protocol is
//!
//! ```text
//! stdin:  {"modality": "image" | "text", "items": [<media item>, ...]}
//! stdout: {"embeddings": [[f32, ...], ...]}
//! ```
//!
//! and the generative protocol sends a [`GenerateRequest`] and expects a
//! [`GenerateResponse`].

use std::io::Write;
use std::path::PathBuf;
use std::process::{Command, Stdio};

use serde::{Deserialize, Serialize};
use unisim_core::MediaItem;

use crate::encoder::{describe_items, BackendError, EncoderBackend};
use crate::generative::{GenerateRequest, GenerateResponse, GenerativeBackend};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EncodeRequest {
    pub modality: String,
    pub items: Vec<MediaItem>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EncodeResponse {
    pub embeddings: Vec<Vec<f32>>,
}

fn run_json(program: &str, args: &[String], input: &[u8]) -> Result<Vec<u8>, String> {
    let mut child = Command::new(program)
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .map_err(|e| format!("cannot spawn `{program}`: {e}"))?;
    child
        .stdin
        .take()
        .expect("stdin is piped")
        .write_all(input)
        .map_err(|e| format!("writing request: {e}"))?;
    let out = child.wait_with_output().map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!(
            "`{program}` exited with {}: {}",
            out.status,
            String::from_utf8_lossy(&out.stderr).trim()
        ));
    }
    Ok(out.stdout)
}

#[derive(Debug, Clone)]
pub struct CommandEncoder {
    pub id: String,
    pub dim: usize,
    pub program: String,
    pub args: Vec<String>,
}

impl CommandEncoder {
    fn call(&self, modality: &str, items: &[MediaItem]) -> Result<Vec<Vec<f32>>, BackendError> {
        let fail = |message: String| BackendError::Embed {
            backend: self.id.clone(),
            items: describe_items(items),
            message,
        };
        let req = EncodeRequest {
            modality: modality.into(),
            items: items.to_vec(),
        };
        let body = serde_json::to_vec(&req).expect("request serializes");
        let out = run_json(&self.program, &self.args, &body).map_err(fail)?;
        let resp: EncodeResponse =
            serde_json::from_slice(&out).map_err(|e| fail(format!("bad response: {e}")))?;
        Ok(resp.embeddings)
    }
}

impl EncoderBackend for CommandEncoder {
    fn backend_id(&self) -> &str {
        &self.id
    }
    fn dim(&self) -> usize {
        self.dim
    }
    fn embed_images(&self, items: &[MediaItem]) -> Result<Vec<Vec<f32>>, BackendError> {
        self.call("image", items)
    }
    fn embed_texts(&self, items: &[MediaItem]) -> Result<Vec<Vec<f32>>, BackendError> {
        self.call("text", items)
    }
}

#[derive(Debug, Clone)]
pub struct CommandGenerative {
    pub id: String,
    pub program: String,
    pub args: Vec<String>,
    /// Send image bytes (base64) rather than only their URIs.
    pub inline_images: bool,
    pub media_root: Option<PathBuf>,
}

impl GenerativeBackend for CommandGenerative {
    fn backend_id(&self) -> &str {
        &self.id
    }

    fn answer(&self, instruction: &str, images: &[MediaItem]) -> Result<String, BackendError> {
        let fail = |message: String| BackendError::Generate {
            backend: self.id.clone(),
            message,
        };
        let req = GenerateRequest::build(
            instruction,
            images,
            self.inline_images,
            self.media_root.as_deref(),
        )?;
        let body = serde_json::to_vec(&req).expect("request serializes");
        let out = run_json(&self.program, &self.args, &body).map_err(fail)?;
        let resp: GenerateResponse =
            serde_json::from_slice(&out).map_err(|e| fail(format!("bad response: {e}")))?;
        Ok(resp.text)
    }
}

#[cfg(all(test, unix))]
mod tests {
    use super::*;

    fn sh(script: &str) -> (String, Vec<String>) {
        ("sh".into(), vec!["-c".into(), script.into()])
    }

    #[test]
    fn command_encoder_round_trip() {
        let (program, args) = sh(r#"cat >/dev/null; echo '{"embeddings":[[1.0,2.0],[3.0,4.0]]}'"#);
        let enc = CommandEncoder {
            id: "cmd".into(),
            dim: 2,
            program,
            args,
        };
        let out = enc
            .embed_texts(&[MediaItem::text("a"), MediaItem::text("b")])
            .unwrap();
        assert_eq!(out, vec![vec![1.0, 2.0], vec![3.0, 4.0]]);
    }

    #[test]
    fn command_failure_names_items() {
        let (program, args) = sh("cat >/dev/null; echo boom >&2; exit 3");
        let enc = CommandEncoder {
            id: "cmd".into(),
            dim: 2,
            program,
            args,
        };
        let err = enc
            .embed_images(&[MediaItem::image("z.png")])
            .unwrap_err()
            .to_string();
        assert!(err.contains("z.png") && err.contains("boom"), "{err}");
    }

    #[test]
    fn command_generative_reads_text() {
        let (program, args) = sh(r#"grep -q '"instruction":"pick"' && echo '{"text":"(B)"}'"#);
        let g = CommandGenerative {
            id: "g".into(),
            program,
            args,
            inline_images: false,
            media_root: None,
        };
        assert_eq!(g.answer("pick", &[MediaItem::image("a")]).unwrap(), "(B)");
    }
}
