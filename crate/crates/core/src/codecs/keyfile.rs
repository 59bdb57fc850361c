//! Versioned plain-text key files.
//!
//! ```text
//! format wmlab-key
//! version 1
//! codec ring
//! seed 42
//! gamma 0.015
//! ```
//!
//! One `name value` pair per line; blank lines and `#` comments are ignored.

use std::collections::BTreeMap;

use crate::error::{Error, Result};

pub const KEY_FORMAT: &str = "wmlab-key";
pub const KEY_VERSION: u32 = 1;

/// Parsed key file: codec name plus its parameters as text.
#[derive(Debug, Clone, PartialEq)]
pub struct KeyFields {
    pub codec: String,
    fields: BTreeMap<String, String>,
}

impl KeyFields {
    pub fn new(codec: &str) -> Self {
        Self {
            codec: codec.to_string(),
            fields: BTreeMap::new(),
        }
    }

    pub fn with(mut self, name: &str, value: impl ToString) -> Self {
        self.fields.insert(name.to_string(), value.to_string());
        self
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("format {KEY_FORMAT}\nversion {KEY_VERSION}\ncodec {}\n", self.codec);
        // seed first, then parameters alphabetically
        if let Some(seed) = self.fields.get("seed") {
            out.push_str(&format!("seed {seed}\n"));
        }
        for (k, v) in self.fields.iter().filter(|(k, _)| *k != "seed") {
            out.push_str(&format!("{k} {v}\n"));
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut header: BTreeMap<&str, &str> = BTreeMap::new();
        let mut fields = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (name, value) = line
                .split_once(char::is_whitespace)
                .map(|(a, b)| (a, b.trim()))
                .ok_or_else(|| Error::KeyFormat(format!("line {}: expected `name value`", lineno + 1)))?;
            match name {
                "format" | "version" | "codec" => {
                    header.insert(name, value);
                }
                _ => {
                    if fields.insert(name.to_string(), value.to_string()).is_some() {
                        return Err(Error::KeyFormat(format!("duplicate field {name:?}")));
                    }
                }
            }
        }
        match header.get("format") {
            Some(&KEY_FORMAT) => {}
            Some(other) => return Err(Error::KeyFormat(format!("unknown format {other:?}"))),
            None => return Err(Error::KeyFormat("missing format line".into())),
        }
        let version: u32 = header
            .get("version")
            .ok_or_else(|| Error::KeyFormat("missing version line".into()))?
            .parse()
            .map_err(|_| Error::KeyFormat("version is not an integer".into()))?;
        if version != KEY_VERSION {
            return Err(Error::KeyFormat(format!("unsupported key version {version}")));
        }
        let codec = header
            .get("codec")
            .ok_or_else(|| Error::KeyFormat("missing codec line".into()))?
            .to_string();
        Ok(Self { codec, fields })
    }

    pub fn contains(&self, name: &str) -> bool {
        self.fields.contains_key(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.fields.keys().map(String::as_str)
    }

    pub fn expect_codec(&self, codec: &str) -> Result<()> {
        if self.codec == codec {
            Ok(())
        } else {
            Err(Error::KeyFormat(format!("expected a {codec} key, found {}", self.codec)))
        }
    }

    pub fn get<T: std::str::FromStr>(&self, name: &str) -> Result<T> {
        let raw = self
            .fields
            .get(name)
            .ok_or_else(|| Error::KeyFormat(format!("missing field {name:?}")))?;
        raw.parse()
            .map_err(|_| Error::KeyFormat(format!("field {name:?}: cannot parse {raw:?}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let k = KeyFields::new("ring").with("seed", 7u64).with("gamma", 0.025);
        let text = k.to_text();
        assert!(text.starts_with("format wmlab-key\nversion 1\ncodec ring\nseed 7\n"));
        let back = KeyFields::parse(&text).unwrap();
        assert_eq!(back, k);
        assert_eq!(back.get::<f64>("gamma").unwrap(), 0.025);
    }

    #[test]
    fn rejects_bad_headers() {
        assert!(KeyFields::parse("version 1\ncodec ring\n").is_err());
        assert!(KeyFields::parse("format other\nversion 1\ncodec ring\n").is_err());
        assert!(KeyFields::parse("format wmlab-key\nversion 2\ncodec ring\n").is_err());
        assert!(KeyFields::parse("format wmlab-key\nversion 1\n").is_err());
        assert!(KeyFields::parse("format wmlab-key\nversion 1\ncodec ring\nseed 1\nseed 2\n").is_err());
    }

    #[test]
    fn missing_and_bad_fields() {
        let k = KeyFields::parse("format wmlab-key\nversion 1\ncodec ring\nseed abc\n").unwrap();
        assert!(matches!(k.get::<u64>("seed"), Err(Error::KeyFormat(_))));
        assert!(matches!(k.get::<f64>("gamma"), Err(Error::KeyFormat(_))));
        assert!(k.expect_codec("spread").is_err());
    }
}
