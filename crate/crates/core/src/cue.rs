//! Explainability signals for the front-end.

use alloc::string::String;
use alloc::vec::Vec;

use crate::sym::Sym;
use crate::world::Point;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum CueKind {
    ObjectLabel,
    ActionLabel,
    Highlight,
    Particles,
    AvatarStep,
    Hologram,
    Speech,
    /// Where the robot looks; emitted on every phase change.
    RobotGaze,
}

impl CueKind {
    pub fn name(self) -> &'static str {
        match self {
            CueKind::ObjectLabel => "object_label",
            CueKind::ActionLabel => "action_label",
            CueKind::Highlight => "highlight",
            CueKind::Particles => "particles",
            CueKind::AvatarStep => "avatar_step",
            CueKind::Hologram => "hologram",
            CueKind::Speech => "speech",
            CueKind::RobotGaze => "robot_gaze",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Color {
    Red,
    Green,
}

/// One cue. The sequence number lives on the outbound envelope that carries it.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CueEvent {
    pub kind: CueKind,
    #[cfg_attr(feature = "serde", serde(default, skip_serializing_if = "Vec::is_empty"))]
    pub ids: Vec<Sym>,
    #[cfg_attr(feature = "serde", serde(default, skip_serializing_if = "Option::is_none"))]
    pub text: Option<String>,
    #[cfg_attr(feature = "serde", serde(default, skip_serializing_if = "Option::is_none"))]
    pub color: Option<Color>,
    #[cfg_attr(feature = "serde", serde(default, skip_serializing_if = "Option::is_none"))]
    pub step: Option<usize>,
    #[cfg_attr(feature = "serde", serde(default, skip_serializing_if = "Option::is_none"))]
    pub pose: Option<Point>,
}

impl CueEvent {
    pub fn new(kind: CueKind) -> Self {
        CueEvent {
            kind,
            ids: Vec::new(),
            text: None,
            color: None,
            step: None,
            pose: None,
        }
    }

    pub fn ids(mut self, ids: impl IntoIterator<Item = Sym>) -> Self {
        self.ids = ids.into_iter().collect();
        self
    }

    pub fn text(mut self, t: impl Into<String>) -> Self {
        self.text = Some(t.into());
        self
    }

    pub fn color(mut self, c: Color) -> Self {
        self.color = Some(c);
        self
    }

    pub fn step(mut self, i: usize) -> Self {
        self.step = Some(i);
        self
    }

    pub fn pose(mut self, p: Point) -> Self {
        self.pose = Some(p);
        self
    }

    pub fn speech(t: impl Into<String>) -> Self {
        CueEvent::new(CueKind::Speech).text(t)
    }
}
