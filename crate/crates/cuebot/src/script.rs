//! Headless runs: a file of inbound messages in, a transcript out.

use serde::Serialize;
use sha2::{Digest, Sha256};

use cuebot_core::session::{Inbound, Outbound, Session};
use cuebot_core::skill::KnowledgeBase;

use crate::domain::Domain;
use crate::protocol::{encode, is_filler, Decoder};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("line {line}: {message}")]
pub struct ScriptError {
    pub line: usize,
    pub message: String,
}

/// Decodes a whole script up front, so a bad line aborts before anything runs.
pub fn parse_script(text: &str) -> Result<Vec<(usize, Inbound)>, ScriptError> {
    let mut dec = Decoder::new();
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if is_filler(line) {
            continue;
        }
        let m = dec.decode(line).map_err(|e| ScriptError {
            line: i + 1,
            message: e.to_string(),
        })?;
        out.push((i + 1, m));
    }
    Ok(out)
}

/// SHA-256 over the phase, the world (facts and pose overrides) and the
/// rendered knowledge base.
pub fn state_digest(s: &Session) -> String {
    let mut h = Sha256::new();
    h.update(s.phase().name().as_bytes());
    h.update(b"\n");
    for l in s.world().facts() {
        h.update(l.to_string().as_bytes());
        h.update(b"\n");
    }
    for (id, p) in s.world().poses() {
        h.update(format!("pose {id} {:?} {:?}\n", p.x, p.y).as_bytes());
    }
    h.update(s.kb().render().as_bytes());
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Serialize)]
struct Final<'a> {
    #[serde(rename = "type")]
    ty: &'static str,
    phase: &'static str,
    seed: u64,
    messages: u64,
    skills: Vec<&'a str>,
    digest: String,
}

/// Closing transcript line.
pub fn final_line(s: &Session) -> String {
    let f = Final {
        ty: "final",
        phase: s.phase().name(),
        seed: s.config().seed,
        messages: s.seq(),
        skills: s.kb().names().map(|n| n.as_str()).collect(),
        digest: state_digest(s),
    };
    serde_json::to_string(&f).expect("final line serializes")
}

pub struct Transcript {
    pub outbound: Vec<Outbound>,
    /// Encoded outbound lines followed by the final line.
    pub lines: Vec<String>,
    pub session: Session,
}

impl Transcript {
    pub fn text(&self) -> String {
        let mut s = self.lines.join("\n");
        s.push('\n');
        s
    }
}

pub fn new_session(domain: &Domain, seed: u64, kb: Option<KnowledgeBase>) -> Session {
    let kb = kb.unwrap_or_else(|| KnowledgeBase::new(domain.tree.clone()));
    Session::new(domain.world.clone(), kb, domain.session_config(seed))
}

pub fn run_messages(mut session: Session, msgs: &[Inbound]) -> Transcript {
    let mut outbound = Vec::new();
    for m in msgs {
        outbound.extend(session.handle(m));
    }
    let mut lines: Vec<String> = outbound.iter().map(encode).collect();
    lines.push(final_line(&session));
    Transcript {
        outbound,
        lines,
        session,
    }
}

pub fn run_script(text: &str, domain: &Domain, seed: u64, kb: Option<KnowledgeBase>) -> Result<Transcript, ScriptError> {
    let msgs: Vec<Inbound> = parse_script(text)?.into_iter().map(|(_, m)| m).collect();
    Ok(run_messages(new_session(domain, seed, kb), &msgs))
}
