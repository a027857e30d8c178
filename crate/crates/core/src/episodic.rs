//! Demonstration recording: before snapshot, manipulation trace, after snapshot.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::sym::Sym;
use crate::world::{apply_action, tick_devices, ActionKind, Location, PrimitiveAction, WorldError, WorldState};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EpisodeError {
    #[error("a demonstration is already being recorded")]
    AlreadyRecording,
    #[error("no demonstration is being recorded")]
    NotRecording,
    #[error("illegal action: {0}")]
    IllegalAction(#[from] WorldError),
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ActionEvent {
    pub index: u32,
    pub actor: Sym,
    pub action: PrimitiveAction,
    /// Arguments plus the containers and contents the action acted on.
    pub touched: BTreeSet<Sym>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Episode {
    pub id: Sym,
    pub label: Option<String>,
    pub before: WorldState,
    pub events: Vec<ActionEvent>,
    pub after: WorldState,
}

impl Episode {
    /// No manipulation was recorded.
    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn involved_objects(&self) -> BTreeSet<Sym> {
        involved_objects(self)
    }

    /// Re-runs the trace from `before`, finishing with one device tick.
    pub fn replay(&self) -> Result<WorldState, WorldError> {
        let mut s = self.before.clone();
        for e in &self.events {
            s = apply_action(&s, &e.action)?;
        }
        Ok(tick_devices(&s))
    }

    /// The replay invariant: indices increase and replay reproduces `after`.
    pub fn is_consistent(&self) -> bool {
        let ordered = self.events.windows(2).all(|w| w[0].index < w[1].index);
        ordered && self.replay().is_ok_and(|s| s.facts() == self.after.facts())
    }
}

pub fn involved_objects(episode: &Episode) -> BTreeSet<Sym> {
    episode.events.iter().flat_map(|e| e.touched.iter().cloned()).collect()
}

/// Objects an action acts on, evaluated in the state it is applied to.
pub fn touched_by(state: &WorldState, action: &PrimitiveAction) -> BTreeSet<Sym> {
    let reg = state.registry();
    let mut out = BTreeSet::new();
    let with_contents = |id: &Sym, out: &mut BTreeSet<Sym>| {
        if reg.is_object(id) {
            out.insert(id.clone());
            out.extend(state.contents_deep(id));
        }
    };
    match action.kind {
        ActionKind::Pick => {
            with_contents(&action.args[0], &mut out);
            if let Some(Location::In(c)) = state.location(&action.args[0]) {
                out.insert(c);
            }
        }
        ActionKind::Place | ActionKind::Pour => {
            with_contents(&action.args[0], &mut out);
            with_contents(&action.args[1], &mut out);
        }
        ActionKind::Press => with_contents(&action.args[0], &mut out),
        ActionKind::Open | ActionKind::Close => {
            if reg.is_object(&action.args[0]) {
                out.insert(action.args[0].clone());
            }
        }
    }
    out
}

/// An in-progress demonstration.
#[derive(Clone, Debug)]
pub struct Recorder {
    before: WorldState,
    current: WorldState,
    events: Vec<ActionEvent>,
}

impl Recorder {
    pub fn begin(state: &WorldState) -> Self {
        Recorder {
            before: state.clone(),
            current: state.clone(),
            events: Vec::new(),
        }
    }

    pub fn before(&self) -> &WorldState {
        &self.before
    }

    pub fn current(&self) -> &WorldState {
        &self.current
    }

    pub fn events(&self) -> &[ActionEvent] {
        &self.events
    }

    /// Appends the action if it is legal in the simulated state.
    pub fn record(&mut self, action: &PrimitiveAction) -> Result<&ActionEvent, EpisodeError> {
        let next = apply_action(&self.current, action)?;
        let event = ActionEvent {
            index: self.events.len() as u32,
            actor: action.actor.clone(),
            action: action.clone(),
            touched: touched_by(&self.current, action),
        };
        self.current = next;
        self.events.push(event);
        Ok(self.events.last().expect("just pushed"))
    }

    pub fn finish(self, id: Sym, label: Option<String>) -> Episode {
        Episode {
            id,
            label,
            after: tick_devices(&self.current),
            before: self.before,
            events: self.events,
        }
    }
}

/// Episode store with at most one active recording.
#[derive(Clone, Debug, Default)]
pub struct EpisodicMemory {
    active: Option<Recorder>,
    episodes: Vec<Episode>,
}

impl EpisodicMemory {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn is_recording(&self) -> bool {
        self.active.is_some()
    }

    pub fn recorder(&self) -> Option<&Recorder> {
        self.active.as_ref()
    }

    pub fn begin(&mut self, state: &WorldState) -> Result<(), EpisodeError> {
        if self.active.is_some() {
            return Err(EpisodeError::AlreadyRecording);
        }
        self.active = Some(Recorder::begin(state));
        Ok(())
    }

    pub fn record(&mut self, action: &PrimitiveAction) -> Result<&ActionEvent, EpisodeError> {
        self.active.as_mut().ok_or(EpisodeError::NotRecording)?.record(action)
    }

    pub fn end(&mut self, label: &str) -> Result<Episode, EpisodeError> {
        let rec = self.active.take().ok_or(EpisodeError::NotRecording)?;
        let id = Sym::from(format!("ep{}", self.episodes.len() + 1));
        let label = (!label.is_empty()).then(|| String::from(label));
        let ep = rec.finish(id, label);
        self.episodes.push(ep.clone());
        Ok(ep)
    }

    /// Drops the active recording without storing it.
    pub fn abort(&mut self) {
        self.active = None;
    }

    pub fn episodes(&self) -> &[Episode] {
        &self.episodes
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::{fixtures, Literal, TempValue};

    fn set(ids: &[&str]) -> BTreeSet<Sym> {
        ids.iter().map(|s| Sym::new(s)).collect()
    }

    pub(crate) fn toast_episode() -> Episode {
        let mut m = EpisodicMemory::new();
        m.begin(&fixtures::kitchen_min()).unwrap();
        m.record(&PrimitiveAction::pick("human", "bread1")).unwrap();
        m.record(&PrimitiveAction::place("human", "bread1", "toaster1")).unwrap();
        m.record(&PrimitiveAction::press("human", "toaster1")).unwrap();
        m.end("toast bread").unwrap()
    }

    #[test]
    fn begin_snapshots_and_guards() {
        let s = fixtures::kitchen_min();
        let mut m = EpisodicMemory::new();
        m.begin(&s).unwrap();
        assert_eq!(m.recorder().unwrap().before(), &s);
        assert_eq!(m.begin(&s), Err(EpisodeError::AlreadyRecording));
    }

    #[test]
    fn empty_trace_is_degenerate() {
        let s = fixtures::kitchen_min();
        let mut m = EpisodicMemory::new();
        m.begin(&s).unwrap();
        let ep = m.end("noop").unwrap();
        assert!(ep.is_empty());
        assert_eq!(ep.before, ep.after);
        assert!(ep.involved_objects().is_empty());
        assert!(ep.is_consistent());
    }

    #[test]
    fn record_tracks_touched() {
        let mut m = EpisodicMemory::new();
        m.begin(&fixtures::kitchen_min()).unwrap();
        let e = m.record(&PrimitiveAction::pick("human", "bread1")).unwrap();
        assert_eq!(e.touched, set(&["bread1"]));
        let e = m.record(&PrimitiveAction::place("human", "bread1", "toaster1")).unwrap().clone();
        assert_eq!(e.touched, set(&["bread1", "toaster1"]));
        assert_eq!(e.index, 1);
    }

    #[test]
    fn illegal_event_rejected() {
        let mut m = EpisodicMemory::new();
        m.begin(&fixtures::kitchen_min()).unwrap();
        m.record(&PrimitiveAction::pick("human", "bread1")).unwrap();
        let e = m.record(&PrimitiveAction::pick("human", "bread1")).unwrap_err();
        assert!(matches!(e, EpisodeError::IllegalAction(_)));
        assert_eq!(m.recorder().unwrap().events().len(), 1);
    }

    #[test]
    fn toast_episode_replays() {
        let ep = toast_episode();
        assert!(ep.after.holds(&"toasted(bread1)".parse::<Literal>().unwrap()));
        assert!(ep.is_consistent());
        assert_eq!(ep.involved_objects(), set(&["bread1", "toaster1"]));
        assert_eq!(ep.label.as_deref(), Some("toast bread"));
    }

    #[test]
    fn heat_milk_episode() {
        let mut m = EpisodicMemory::new();
        m.begin(&fixtures::kitchen_min()).unwrap();
        for a in [
            PrimitiveAction::open("human", "microwave1"),
            PrimitiveAction::pick("human", "cup1"),
            PrimitiveAction::place("human", "cup1", "microwave1"),
            PrimitiveAction::close("human", "microwave1"),
            PrimitiveAction::press("human", "microwave1"),
        ] {
            m.record(&a).unwrap();
        }
        let ep = m.end("heat in microwave").unwrap();
        assert_eq!(ep.after.temp("milk1"), Some(TempValue::Hot));
        assert_eq!(ep.involved_objects(), set(&["cup1", "microwave1", "milk1"]));
        assert!(ep.is_consistent());
    }

    #[test]
    fn end_without_begin() {
        let mut m = EpisodicMemory::new();
        assert_eq!(m.end("x"), Err(EpisodeError::NotRecording));
    }
}
