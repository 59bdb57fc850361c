//! Stage backends served by a child process over a JSON-lines protocol.
//!
//! Each request and response is one line of JSON on the child's stdin and
//! stdout. The first exchange is a `hello` handshake that must report
//! `protocol-version 1`. Images travel as base64 PNG; masks as 8-bit
//! grayscale PNG with 255 for set pixels.

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Read, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::Duration;

use base64::engine::general_purpose::STANDARD as B64;
use base64::Engine;
use serde::{Deserialize, Serialize};
use wait_timeout::ChildExt;

use crate::error::{Error, Result};
use crate::image::{decode_mask_png, decode_png, encode_mask_png, encode_png, BinaryMask, ImageF};

use super::semantic::{summary_request, StageBackends};

pub const PROTOCOL_VERSION: u32 = 1;
pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(120);
const STDERR_KEEP: usize = 2048;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRequest {
    pub id: u64,
    pub stage: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prompt: Option<String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub params: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct StageResponse {
    pub id: u64,
    pub ok: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mask: Option<String>,
    /// Optional ranked list; takes precedence over `mask` when present.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub masks: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

pub struct ExternalBackend {
    child: Child,
    stdin: Option<ChildStdin>,
    lines: Receiver<std::io::Result<String>>,
    stderr: Arc<Mutex<String>>,
    next_id: u64,
    timeout: Duration,
}

impl ExternalBackend {
    /// Launches `command` through the shell and performs the handshake.
    pub fn spawn(command: &str, timeout: Duration) -> Result<Self> {
        let mut child = Command::new("sh")
            .arg("-c")
            .arg(command)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::piped())
            .spawn()
            .map_err(|e| Error::backend("hello", format!("cannot launch {command:?}: {e}")))?;
        let stdout = child.stdout.take().expect("piped stdout");
        let mut stderr_pipe = child.stderr.take().expect("piped stderr");
        let (tx, rx) = mpsc::channel();
        thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                if tx.send(line).is_err() {
                    break;
                }
            }
        });
        let stderr = Arc::new(Mutex::new(String::new()));
        let sink = Arc::clone(&stderr);
        thread::spawn(move || {
            let mut buf = [0u8; 1024];
            while let Ok(n) = stderr_pipe.read(&mut buf) {
                if n == 0 {
                    break;
                }
                let mut s = sink.lock().unwrap_or_else(|e| e.into_inner());
                s.push_str(&String::from_utf8_lossy(&buf[..n]));
                if s.len() > STDERR_KEEP {
                    let mut cut = s.len() - STDERR_KEEP;
                    while !s.is_char_boundary(cut) {
                        cut += 1;
                    }
                    s.drain(..cut);
                }
            }
        });
        let mut backend = Self {
            stdin: child.stdin.take(),
            child,
            lines: rx,
            stderr,
            next_id: 0,
            timeout,
        };
        let resp = backend.exchange(StageRequest {
            id: 0,
            stage: "hello".into(),
            image: None,
            prompt: None,
            params: BTreeMap::new(),
        })?;
        let text = resp.text.unwrap_or_default();
        let version = text
            .trim()
            .trim_start_matches('<')
            .trim_end_matches('>')
            .strip_prefix("protocol-version")
            .and_then(|v| v.trim().parse::<u32>().ok());
        if version != Some(PROTOCOL_VERSION) {
            return Err(backend.failure("hello", format!("unsupported handshake {text:?}")));
        }
        backend.next_id = 1;
        Ok(backend)
    }

    fn failure(&mut self, stage: &str, message: String) -> Error {
        let _ = self.child.kill();
        let _ = self.child.wait_timeout(Duration::from_millis(200));
        let tail = self.stderr.lock().map(|s| s.trim().to_string()).unwrap_or_default();
        let message = if tail.is_empty() { message } else { format!("{message}; stderr: {tail}") };
        Error::backend(stage, message)
    }

    /// Sends one request and waits for its response line.
    fn exchange(&mut self, req: StageRequest) -> Result<StageResponse> {
        let stage = req.stage.clone();
        let line = serde_json::to_string(&req).map_err(|e| Error::backend(&stage, e.to_string()))?;
        let write = match self.stdin.as_mut() {
            Some(w) => writeln!(w, "{line}").and_then(|_| w.flush()),
            None => Err(std::io::Error::other("stdin closed")),
        };
        if let Err(e) = write {
            return Err(self.failure(&stage, format!("write failed: {e}")));
        }
        let raw = match self.lines.recv_timeout(self.timeout) {
            Ok(Ok(l)) => l,
            Ok(Err(e)) => return Err(self.failure(&stage, format!("read failed: {e}"))),
            Err(RecvTimeoutError::Timeout) => {
                return Err(self.failure(&stage, format!("timeout after {:?}", self.timeout)));
            }
            Err(RecvTimeoutError::Disconnected) => {
                return Err(self.failure(&stage, "backend closed its output".into()));
            }
        };
        let resp: StageResponse = match serde_json::from_str(&raw) {
            Ok(r) => r,
            Err(e) => return Err(self.failure(&stage, format!("malformed response: {e}"))),
        };
        if resp.id != req.id {
            return Err(self.failure(&stage, format!("response id {} for request {}", resp.id, req.id)));
        }
        if !resp.ok {
            let msg = resp.error.unwrap_or_else(|| "backend reported failure".into());
            return Err(Error::backend(&stage, msg));
        }
        Ok(resp)
    }

    fn call(&mut self, stage: &str, image: Option<&ImageF>, prompt: &str, params: BTreeMap<String, String>) -> Result<StageResponse> {
        let id = self.next_id;
        self.next_id += 1;
        self.exchange(StageRequest {
            id,
            stage: stage.into(),
            image: image.map(|i| B64.encode(encode_png(i))),
            prompt: Some(prompt.into()),
            params,
        })
    }
}

impl Drop for ExternalBackend {
    fn drop(&mut self) {
        self.stdin.take();
        if let Ok(None) = self.child.wait_timeout(Duration::from_secs(1)) {
            let _ = self.child.kill();
            let _ = self.child.wait();
        }
    }
}

fn decode_field(stage: &str, field: &str, value: Option<&str>) -> Result<Vec<u8>> {
    let v = value.ok_or_else(|| Error::backend(stage, format!("response missing `{field}`")))?;
    B64.decode(v.trim())
        .map_err(|e| Error::backend(stage, format!("bad base64 in `{field}`: {e}")))
}

impl StageBackends for ExternalBackend {
    fn caption(&mut self, img: &ImageF, questions: &[&str; 3]) -> Result<[String; 3]> {
        let mut out: [String; 3] = Default::default();
        for (slot, q) in out.iter_mut().zip(questions) {
            let resp = self.call("caption", Some(img), q, BTreeMap::new())?;
            *slot = resp
                .text
                .ok_or_else(|| Error::backend("caption", "response missing `text`"))?;
        }
        Ok(out)
    }

    fn segment(&mut self, img: &ImageF, phrase: &str) -> Result<Vec<BinaryMask>> {
        let resp = self.call("segment", Some(img), phrase, BTreeMap::new())?;
        let encoded: Vec<String> = match (resp.masks, resp.mask) {
            (Some(list), _) => list,
            (None, Some(m)) => vec![m],
            (None, None) => return Err(Error::backend("segment", "response missing `mask`")),
        };
        encoded
            .iter()
            .map(|m| {
                let bytes = decode_field("segment", "mask", Some(m))?;
                decode_mask_png(&bytes).map_err(|e| Error::backend("segment", e.to_string()))
            })
            .collect()
    }

    fn summarize(&mut self, answers: &[String; 3]) -> Result<String> {
        let resp = self.call("summarize", None, &summary_request(answers), BTreeMap::new())?;
        resp.text
            .ok_or_else(|| Error::backend("summarize", "response missing `text`"))
    }

    fn inpaint(&mut self, img: &ImageF, region: &BinaryMask, prompt: &str) -> Result<ImageF> {
        let mut params = BTreeMap::new();
        params.insert("mask".to_string(), B64.encode(encode_mask_png(region)));
        let resp = self.call("inpaint", Some(img), prompt, params)?;
        let bytes = decode_field("inpaint", "image", resp.image.as_deref())?;
        decode_png(&bytes).map_err(|e| Error::backend("inpaint", e.to_string()))
    }
}
