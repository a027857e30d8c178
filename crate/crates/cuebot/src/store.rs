//! Knowledge-base and episode files. JSON for round trips, plain text for
//! reading.

use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use cuebot_core::episodic::{ActionEvent, Episode};
use cuebot_core::skill::{KnowledgeBase, SkillError, SkillSchema};
use cuebot_core::world::{Literal, TypeTree, WorldError, WorldState};
use cuebot_core::Sym;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("cannot access {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("malformed file: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unsupported format version {0}")]
    Version(u32),
    #[error(transparent)]
    Skill(#[from] SkillError),
    #[error("episode `{id}`: {source}")]
    World { id: String, source: WorldError },
}

#[derive(Serialize, Deserialize)]
struct KbFile {
    version: u32,
    schemas: Vec<SkillSchema>,
}

pub fn kb_to_json(kb: &KnowledgeBase) -> String {
    let f = KbFile {
        version: FORMAT_VERSION,
        schemas: kb.schemas().cloned().collect(),
    };
    serde_json::to_string_pretty(&f).expect("schemas serialize")
}

/// Every schema is validated against `tree`.
pub fn kb_from_json(text: &str, tree: Arc<TypeTree>) -> Result<KnowledgeBase, StoreError> {
    let f: KbFile = serde_json::from_str(text)?;
    if f.version != FORMAT_VERSION {
        return Err(StoreError::Version(f.version));
    }
    let mut kb = KnowledgeBase::new(tree);
    for s in f.schemas {
        kb.insert(s)?;
    }
    Ok(kb)
}

#[derive(Serialize, Deserialize)]
struct EpisodeDoc {
    id: Sym,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    label: Option<String>,
    before: Vec<Literal>,
    events: Vec<ActionEvent>,
    after: Vec<Literal>,
}

#[derive(Serialize, Deserialize)]
struct EpisodeFile {
    version: u32,
    episodes: Vec<EpisodeDoc>,
}

/// Snapshots are stored as fact lists; pose overrides are not kept.
pub fn episodes_to_json(eps: &[Episode]) -> String {
    let f = EpisodeFile {
        version: FORMAT_VERSION,
        episodes: eps
            .iter()
            .map(|e| EpisodeDoc {
                id: e.id.clone(),
                label: e.label.clone(),
                before: e.before.facts().iter().cloned().collect(),
                events: e.events.clone(),
                after: e.after.facts().iter().cloned().collect(),
            })
            .collect(),
    };
    serde_json::to_string_pretty(&f).expect("episodes serialize")
}

/// Rebuilds snapshots against the registry of `world`.
pub fn episodes_from_json(text: &str, world: &WorldState) -> Result<Vec<Episode>, StoreError> {
    let f: EpisodeFile = serde_json::from_str(text)?;
    if f.version != FORMAT_VERSION {
        return Err(StoreError::Version(f.version));
    }
    let reg = world.registry_arc();
    f.episodes
        .into_iter()
        .map(|d| {
            let snap = |facts: Vec<Literal>| {
                WorldState::new(reg.clone(), facts.into_iter().collect()).map_err(|source| StoreError::World {
                    id: d.id.to_string(),
                    source,
                })
            };
            Ok(Episode {
                before: snap(d.before)?,
                after: snap(d.after)?,
                id: d.id.clone(),
                label: d.label,
                events: d.events,
            })
        })
        .collect()
}

pub fn render_episode(e: &Episode) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "episode {} \"{}\"", e.id, e.label.as_deref().unwrap_or(""));
    for ev in &e.events {
        let _ = writeln!(s, "  {}. {}", ev.index, ev.action);
    }
    if let Ok(d) = cuebot_core::world::diff_states(&e.before, &e.after) {
        for l in &d.added {
            let _ = writeln!(s, "  + {l}");
        }
        for l in &d.removed {
            let _ = writeln!(s, "  - {l}");
        }
    }
    s
}

pub fn read_file(path: &Path) -> Result<String, StoreError> {
    std::fs::read_to_string(path).map_err(|source| StoreError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn write_file(path: &Path, text: &str) -> Result<(), StoreError> {
    std::fs::write(path, text).map_err(|source| StoreError::Io {
        path: path.display().to_string(),
        source,
    })
}
