//! Newline-delimited JSON framing shared by the server and the script
//! runner. See `docs/protocol.md` for the message reference.

use serde::Serialize;
use serde_json::Value;

use cuebot_core::session::{ErrorCode, Inbound, Outbound};

pub const PROTOCOL_VERSION: u64 = 1;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DecodeError {
    #[error("not valid JSON: {0}")]
    Json(String),
    #[error("invalid message: {0}")]
    Schema(String),
    #[error("expected \"version\": {PROTOCOL_VERSION}, found {0}")]
    Version(String),
}

impl DecodeError {
    pub fn code(&self) -> ErrorCode {
        match self {
            DecodeError::Version(_) => ErrorCode::VersionMismatch,
            _ => ErrorCode::ParseError,
        }
    }
}

/// Lines that carry no message: blank ones and `#` comments.
pub fn is_filler(line: &str) -> bool {
    let t = line.trim();
    t.is_empty() || t.starts_with('#')
}

/// Inbound side of one connection or script. The first message must carry
/// the protocol version; later ones may repeat it.
#[derive(Debug, Default)]
pub struct Decoder {
    greeted: bool,
}

impl Decoder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn decode(&mut self, line: &str) -> Result<Inbound, DecodeError> {
        let mut v: Value = serde_json::from_str(line).map_err(|e| DecodeError::Json(e.to_string()))?;
        let obj = v
            .as_object_mut()
            .ok_or_else(|| DecodeError::Schema("a message is a JSON object".into()))?;
        match obj.remove("version") {
            Some(Value::Number(n)) if n.as_u64() == Some(PROTOCOL_VERSION) => {}
            Some(other) => return Err(DecodeError::Version(other.to_string())),
            None if !self.greeted => return Err(DecodeError::Version("nothing".into())),
            None => {}
        }
        let msg = serde_json::from_value(v).map_err(|e| DecodeError::Schema(e.to_string()))?;
        self.greeted = true;
        Ok(msg)
    }
}

#[derive(Serialize)]
struct First<'a> {
    version: u64,
    #[serde(flatten)]
    msg: &'a Outbound,
}

/// One line, without the trailing newline. The first message of a session
/// (sequence number 1) also carries the version.
pub fn encode(msg: &Outbound) -> String {
    if msg.seq == 1 {
        serde_json::to_string(&First {
            version: PROTOCOL_VERSION,
            msg,
        })
    } else {
        serde_json::to_string(msg)
    }
    .expect("outbound messages serialize")
}

pub fn encode_inbound(msg: &Inbound, first: bool) -> String {
    let mut v = serde_json::to_value(msg).expect("inbound messages serialize");
    if first {
        if let Some(o) = v.as_object_mut() {
            o.insert("version".into(), Value::from(PROTOCOL_VERSION));
        }
    }
    v.to_string()
}
