//! The behavior engine: a state machine over teaching, questioning,
//! planning, validation and assistance that answers every inbound message
//! with cues, world updates, questions, plan proposals or errors.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::assist::{self, GoalLibrary, HumanModel};
use crate::cue::{Color, CueEvent, CueKind};
use crate::curiosity::{apply_answer, generate_hypotheses, pose_question, rank_hypotheses, Hypothesis, QuestionEvent};
use crate::episodic::{ActionEvent, EpisodicMemory};
use crate::operator::OperatorKey;
use crate::planner::{
    default_templates, execute_step, parse_goal, plan, replan_excluding, GoalTemplate, Plan, PlanDocument,
    PlanStatus, PlannerConfig, PlannerError,
};
use crate::skill::{generalize, induce_skill, KnowledgeBase};
use crate::sym::Sym;
use crate::world::{diff_states, step, tick_devices, Literal, Point, PrimitiveAction, WorldState};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Phase {
    Idle,
    Demonstrating,
    Questioning,
    Planning,
    AwaitingValidation,
    Executing,
    Assisting,
}

impl Phase {
    pub const ALL: [Phase; 7] = [
        Phase::Idle,
        Phase::Demonstrating,
        Phase::Questioning,
        Phase::Planning,
        Phase::AwaitingValidation,
        Phase::Executing,
        Phase::Assisting,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Phase::Idle => "idle",
            Phase::Demonstrating => "demonstrating",
            Phase::Questioning => "questioning",
            Phase::Planning => "planning",
            Phase::AwaitingValidation => "awaiting_validation",
            Phase::Executing => "executing",
            Phase::Assisting => "assisting",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum YesNo {
    Yes,
    No,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "verdict", rename_all = "snake_case"))]
pub enum Feedback {
    Approve,
    /// Zero-based step index of the current proposal.
    Reject { step: usize },
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "type", rename_all = "snake_case"))]
pub enum Inbound {
    /// Handshake; answered with a full world snapshot.
    Hello,
    Gaze { object: Sym },
    HandAction { action: PrimitiveAction },
    Speech { text: String },
    Answer { answer: YesNo },
    PlanFeedback { feedback: Feedback },
    Tick,
}

impl Inbound {
    pub fn type_name(&self) -> &'static str {
        match self {
            Inbound::Hello => "hello",
            Inbound::Gaze { .. } => "gaze",
            Inbound::HandAction { .. } => "hand_action",
            Inbound::Speech { .. } => "speech",
            Inbound::Answer { .. } => "answer",
            Inbound::PlanFeedback { .. } => "plan_feedback",
            Inbound::Tick => "tick",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum ErrorCode {
    IllegalTransition,
    UnknownObject,
    UnknownCommand,
    NoInstance,
    IllegalAction,
    BadStep,
    InductionFailed,
    Unsolvable,
    Timeout,
    ExecutionFailed,
    /// Raised by the wire layer for lines that do not decode.
    ParseError,
    /// Raised by the wire layer when the handshake version is missing or wrong.
    VersionMismatch,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PoseUpdate {
    pub id: Sym,
    pub pose: Point,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct WorldUpdate {
    /// What caused the change: `hello`, `hand_action`, `tick`, `step` or `intervention`.
    pub cause: String,
    #[cfg_attr(feature = "serde", serde(default, skip_serializing_if = "Option::is_none"))]
    pub step: Option<usize>,
    pub added: Vec<Literal>,
    pub removed: Vec<Literal>,
    /// Pose overrides that changed; facts alone do not carry them.
    #[cfg_attr(feature = "serde", serde(default, skip_serializing_if = "Vec::is_empty"))]
    pub poses: Vec<PoseUpdate>,
    /// Set when `added` lists the whole world rather than a change.
    #[cfg_attr(feature = "serde", serde(default, skip_serializing_if = "core::ops::Not::not"))]
    pub snapshot: bool,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "type", rename_all = "snake_case"))]
pub enum OutboundBody {
    Cue { cue: CueEvent },
    WorldUpdate { update: WorldUpdate },
    Question { question: QuestionEvent },
    PlanProposal { plan: PlanDocument },
    Error { code: ErrorCode, message: String },
}

/// One outbound message. `seq` counts from 1 without gaps over a session;
/// `phase` is the phase in force when the message was emitted.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Outbound {
    pub seq: u64,
    pub phase: Phase,
    #[cfg_attr(feature = "serde", serde(flatten))]
    pub body: OutboundBody,
}

impl Outbound {
    pub fn cue(&self) -> Option<&CueEvent> {
        match &self.body {
            OutboundBody::Cue { cue } => Some(cue),
            _ => None,
        }
    }

    pub fn type_name(&self) -> &'static str {
        match &self.body {
            OutboundBody::Cue { .. } => "cue",
            OutboundBody::WorldUpdate { .. } => "world_update",
            OutboundBody::Question { .. } => "question",
            OutboundBody::PlanProposal { .. } => "plan_proposal",
            OutboundBody::Error { .. } => "error",
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SessionError {
    #[error("unknown object `{0}`")]
    UnknownObject(String),
}

/// Everything assistance needs besides the world.
#[derive(Clone, Debug, PartialEq)]
pub struct AssistSetup {
    pub human: HumanModel,
    pub goals: GoalLibrary,
    /// Candidate cells for relocations.
    pub region: Vec<Point>,
    pub epsilon: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SessionConfig {
    pub planner: PlannerConfig,
    pub templates: Vec<GoalTemplate>,
    /// Questions asked after one demonstration.
    pub max_questions: u32,
    pub assist: Option<AssistSetup>,
    pub seed: u64,
}

impl Default for SessionConfig {
    fn default() -> Self {
        SessionConfig {
            planner: PlannerConfig::default(),
            templates: default_templates(),
            max_questions: 1,
            assist: None,
            seed: 0,
        }
    }
}

/// What the human did since assistance started.
#[derive(Clone, Debug, PartialEq)]
pub struct AssistTrace {
    pub start: WorldState,
    pub prefix: Vec<ActionEvent>,
}

#[derive(Clone, Debug)]
pub struct Session {
    phase: Phase,
    world: WorldState,
    kb: KnowledgeBase,
    memory: EpisodicMemory,
    label: Option<String>,
    pending_question: Option<Hypothesis>,
    questions_asked: u32,
    pending_plan: Option<Plan>,
    banned: BTreeSet<OperatorKey>,
    assist: Option<AssistTrace>,
    config: SessionConfig,
    seq: u64,
}

enum Speech {
    Teach(String),
    Done,
    Answer(bool),
    Assist,
    Stop,
    Other(String),
}

fn normalize(text: &str) -> String {
    let t = text.trim().trim_end_matches(['.', '!', '?']);
    let mut out = String::new();
    for w in t.split_whitespace() {
        if !out.is_empty() {
            out.push(' ');
        }
        out.push_str(&w.to_lowercase());
    }
    out
}

fn classify(text: &str) -> Speech {
    let n = normalize(text);
    for intro in ["i'll show you ", "i will show you ", "let me show you ", "watch me "] {
        if let Some(rest) = n.strip_prefix(intro) {
            let label = rest.strip_prefix("how to ").unwrap_or(rest).trim();
            return Speech::Teach(label.to_string());
        }
    }
    match n.as_str() {
        "done" | "i'm done" | "i am done" | "finished" | "that's it" => Speech::Done,
        "yes" | "yes you can" => Speech::Answer(true),
        "no" | "no you can't" => Speech::Answer(false),
        "assist me" | "help me" | "please assist me" => Speech::Assist,
        "stop" | "cancel" => Speech::Stop,
        _ => Speech::Other(text.trim().to_string()),
    }
}

struct Out<'a> {
    seq: &'a mut u64,
    phase: Phase,
    msgs: Vec<Outbound>,
}

impl Out<'_> {
    fn push(&mut self, body: OutboundBody) {
        *self.seq += 1;
        self.msgs.push(Outbound {
            seq: *self.seq,
            phase: self.phase,
            body,
        });
    }

    fn cue(&mut self, cue: CueEvent) {
        self.push(OutboundBody::Cue { cue });
    }

    fn error(&mut self, code: ErrorCode, message: impl Into<String>) {
        self.push(OutboundBody::Error {
            code,
            message: message.into(),
        });
    }

    fn update(&mut self, update: WorldUpdate) {
        self.push(OutboundBody::WorldUpdate { update });
    }
}

fn delta(cause: &str, before: &WorldState, after: &WorldState) -> WorldUpdate {
    let (added, removed) = match diff_states(before, after) {
        Ok(d) => (d.added.into_iter().collect(), d.removed.into_iter().collect()),
        Err(_) => (after.facts().iter().cloned().collect(), before.facts().iter().cloned().collect()),
    };
    let poses = after
        .poses()
        .iter()
        .filter(|(id, p)| before.poses().get(*id) != Some(*p))
        .map(|(id, p)| PoseUpdate { id: id.clone(), pose: *p })
        .collect();
    WorldUpdate {
        cause: cause.to_string(),
        step: None,
        added,
        removed,
        poses,
        snapshot: false,
    }
}

impl Session {
    pub fn new(world: WorldState, kb: KnowledgeBase, config: SessionConfig) -> Self {
        Session {
            phase: Phase::Idle,
            world,
            kb,
            memory: EpisodicMemory::new(),
            label: None,
            pending_question: None,
            questions_asked: 0,
            pending_plan: None,
            banned: BTreeSet::new(),
            assist: None,
            config,
            seq: 0,
        }
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    /// The live world; while demonstrating, the recorder's view of it.
    pub fn world(&self) -> &WorldState {
        match self.memory.recorder() {
            Some(r) => r.current(),
            None => &self.world,
        }
    }

    pub fn kb(&self) -> &KnowledgeBase {
        &self.kb
    }

    pub fn memory(&self) -> &EpisodicMemory {
        &self.memory
    }

    pub fn pending_question(&self) -> Option<&Hypothesis> {
        self.pending_question.as_ref()
    }

    pub fn pending_plan(&self) -> Option<&Plan> {
        self.pending_plan.as_ref()
    }

    pub fn assist_trace(&self) -> Option<&AssistTrace> {
        self.assist.as_ref()
    }

    pub fn config(&self) -> &SessionConfig {
        &self.config
    }

    /// Last sequence number handed out.
    pub fn seq(&self) -> u64 {
        self.seq
    }

    /// Emits one error message without touching the state machine; used by
    /// the wire layer for lines it cannot decode.
    pub fn reject_line(&mut self, code: ErrorCode, message: &str) -> Outbound {
        let mut out = Out {
            seq: &mut self.seq,
            phase: self.phase,
            msgs: Vec::new(),
        };
        out.error(code, message);
        out.msgs.pop().expect("just pushed")
    }

    /// Phase-dependent presence of the recorder, question and plan.
    pub fn check_invariants(&self) -> Result<(), &'static str> {
        if self.memory.is_recording() != (self.phase == Phase::Demonstrating) {
            return Err("recorder present iff demonstrating");
        }
        if self.pending_question.is_some() != (self.phase == Phase::Questioning) {
            return Err("question pending iff questioning");
        }
        let plan_phase = matches!(self.phase, Phase::AwaitingValidation | Phase::Executing);
        if self.pending_plan.is_some() != plan_phase {
            return Err("plan pending iff validating or executing");
        }
        if self.assist.is_some() != (self.phase == Phase::Assisting) {
            return Err("assist trace iff assisting");
        }
        Ok(())
    }

    /// Label cue naming the type of a gazed-at object.
    pub fn gaze_label(&self, object: &str) -> Result<CueEvent, SessionError> {
        let reg = self.world().registry();
        let ty = reg
            .type_of(object)
            .ok_or_else(|| SessionError::UnknownObject(object.to_string()))?;
        let id = reg.resolve(object).map_err(|_| SessionError::UnknownObject(object.to_string()))?;
        Ok(CueEvent::new(CueKind::ObjectLabel).ids([id]).text(ty.as_str()))
    }

    fn gaze_target(&self) -> Vec<Sym> {
        let from_plan = self
            .pending_plan
            .as_ref()
            .and_then(|p| p.steps.first())
            .and_then(|s| s.args.iter().find(|a| self.world().registry().is_object(a)).cloned());
        let target = match self.phase {
            Phase::Questioning => self
                .pending_question
                .as_ref()
                .and_then(|h| self.world().registry().instances_of(&h.candidate).next().cloned()),
            Phase::AwaitingValidation | Phase::Executing => from_plan,
            _ => None,
        };
        target
            .or_else(|| self.world().registry().agents.iter().find(|a| *a != "robot").cloned())
            .into_iter()
            .collect()
    }

    fn enter(&mut self, out: &mut Out<'_>, phase: Phase) {
        if self.phase == phase {
            return;
        }
        self.phase = phase;
        out.phase = phase;
        let cue = CueEvent::new(CueKind::RobotGaze).ids(self.gaze_target()).text(phase.name());
        out.cue(cue);
    }

    fn accepts(&self, m: &Inbound) -> bool {
        use Phase::*;
        match m {
            Inbound::Hello | Inbound::Gaze { .. } => true,
            Inbound::Tick => self.phase != Demonstrating,
            Inbound::HandAction { .. } => matches!(self.phase, Idle | Demonstrating | Assisting),
            Inbound::Answer { .. } => self.phase == Questioning,
            Inbound::PlanFeedback { .. } => self.phase == AwaitingValidation,
            Inbound::Speech { text } => match classify(text) {
                Speech::Teach(_) | Speech::Assist | Speech::Other(_) => self.phase == Idle,
                Speech::Done => self.phase == Demonstrating,
                Speech::Answer(_) => self.phase == Questioning,
                Speech::Stop => self.phase != Idle,
            },
        }
    }

    /// Processes one message. Rejected messages leave the state untouched
    /// apart from the sequence counter.
    pub fn handle(&mut self, m: &Inbound) -> Vec<Outbound> {
        let mut seq = self.seq;
        let mut out = Out {
            seq: &mut seq,
            phase: self.phase,
            msgs: Vec::new(),
        };
        if !self.accepts(m) {
            out.error(
                ErrorCode::IllegalTransition,
                format!("{} is not accepted while {}", m.type_name(), self.phase.name()),
            );
        } else {
            match m {
                Inbound::Hello => self.on_hello(&mut out),
                Inbound::Gaze { object } => match self.gaze_label(object) {
                    Ok(c) => out.cue(c),
                    Err(e) => out.error(ErrorCode::UnknownObject, e.to_string()),
                },
                Inbound::Tick => self.on_tick(&mut out),
                Inbound::HandAction { action } => self.on_hand(&mut out, action),
                Inbound::Answer { answer } => self.on_answer(&mut out, *answer == YesNo::Yes),
                Inbound::PlanFeedback { feedback } => self.on_feedback(&mut out, *feedback),
                Inbound::Speech { text } => match classify(text) {
                    Speech::Teach(label) => self.on_teach(&mut out, label),
                    Speech::Done => self.on_done(&mut out),
                    Speech::Answer(yes) => self.on_answer(&mut out, yes),
                    Speech::Assist => self.on_assist(&mut out),
                    Speech::Stop => self.on_stop(&mut out),
                    Speech::Other(cmd) => self.on_command(&mut out, &cmd),
                },
            }
        }
        let msgs = out.msgs;
        self.seq = seq;
        msgs
    }

    fn on_hello(&mut self, out: &mut Out<'_>) {
        let w = self.world();
        let poses = w
            .registry()
            .object_ids()
            .filter_map(|id| w.pose(id).map(|p| PoseUpdate { id: id.clone(), pose: p }))
            .collect();
        let update = WorldUpdate {
            cause: "hello".to_string(),
            step: None,
            added: w.facts().iter().cloned().collect(),
            removed: Vec::new(),
            poses,
            snapshot: true,
        };
        out.update(update);
    }

    fn on_tick(&mut self, out: &mut Out<'_>) {
        let next = tick_devices(&self.world);
        out.update(delta("tick", &self.world, &next));
        self.world = next;
        if self.phase == Phase::Assisting {
            self.assist_pipeline(out);
        }
    }

    /// Goal inference, next-step prediction and, when it pays off, a
    /// relocation announced by a hologram before the object moves.
    fn assist_pipeline(&mut self, out: &mut Out<'_>) {
        let (Some(setup), Some(trace)) = (self.config.assist.as_ref(), self.assist.as_ref()) else {
            return;
        };
        if trace.prefix.is_empty() {
            return;
        }
        let human = setup.human.agent.clone();
        let post = match assist::infer_goal(&trace.prefix, &setup.goals, &trace.start, &self.kb, &human, &self.config.planner) {
            Ok(p) => p,
            Err(e) => {
                out.cue(CueEvent::speech(format!("I cannot tell what you are doing: {e}")));
                return;
            }
        };
        let Ok(Some(next)) = assist::predict_next_action(&self.world, &post, &self.kb, &human, &self.config.planner) else {
            return;
        };
        let Some(p) = assist::propose_intervention(&self.world, &next, &setup.human, &setup.region, setup.epsilon) else {
            return;
        };
        let goal = post.map().map(|b| b.name.clone()).unwrap_or_default();
        out.cue(CueEvent::speech(format!("You seem to be doing \"{goal}\"; next you will {next}")));
        out.cue(p.announcement.clone());
        match assist::apply_intervention(&self.world, &p) {
            Ok(moved) => {
                out.update(delta("intervention", &self.world, &moved));
                self.world = moved;
            }
            Err(e) => out.error(ErrorCode::ExecutionFailed, e.to_string()),
        }
    }

    fn on_hand(&mut self, out: &mut Out<'_>, action: &PrimitiveAction) {
        let label = CueEvent::new(CueKind::ActionLabel)
            .ids(action.args.iter().cloned())
            .text(action.to_string());
        if self.phase == Phase::Demonstrating {
            let before = self.world().clone();
            match self.memory.record(action) {
                Ok(_) => {
                    out.cue(label);
                    let after = self.world().clone();
                    out.update(delta("hand_action", &before, &after));
                }
                Err(e) => out.error(ErrorCode::IllegalAction, e.to_string()),
            }
            return;
        }
        match step(&self.world, action) {
            Ok(next) => {
                out.cue(label);
                out.update(delta("hand_action", &self.world, &next));
                if let Some(trace) = self.assist.as_mut() {
                    let index = trace.prefix.len() as u32;
                    trace.prefix.push(ActionEvent {
                        index,
                        actor: action.actor.clone(),
                        action: action.clone(),
                        touched: crate::episodic::touched_by(&self.world, action),
                    });
                }
                self.world = next;
            }
            Err(e) => out.error(ErrorCode::IllegalAction, e.to_string()),
        }
    }

    fn on_teach(&mut self, out: &mut Out<'_>, label: String) {
        if label.is_empty() {
            out.error(ErrorCode::UnknownCommand, "tell me what you will show");
            return;
        }
        self.memory.begin(&self.world).expect("idle sessions do not record");
        self.enter(out, Phase::Demonstrating);
        out.cue(CueEvent::speech(format!("Okay, show me how to {label}.")));
        self.label = Some(label);
    }

    fn on_done(&mut self, out: &mut Out<'_>) {
        let label = self.label.take().unwrap_or_default();
        let before = self.world().clone();
        let ep = self.memory.end(&label).expect("demonstrating sessions record");
        self.world = ep.after.clone();
        // devices run once when the demonstration closes
        let closing = delta("tick", &before, &self.world);
        if !(closing.added.is_empty() && closing.removed.is_empty()) {
            out.update(closing);
        }
        let schema = match induce_skill(&ep, self.kb.tree()) {
            Ok(s) => s,
            Err(e) => {
                self.enter(out, Phase::Idle);
                out.error(ErrorCode::InductionFailed, e.to_string());
                return;
            }
        };
        let mut kb = self.kb.clone();
        let name = kb.insert(schema).expect("induced schemas are valid");
        self.kb = generalize(&kb);
        out.cue(CueEvent::speech(format!("I learned \"{name}\".")));
        self.questions_asked = 0;
        self.ask_next(out);
    }

    fn ask_next(&mut self, out: &mut Out<'_>) {
        let next = if self.questions_asked < self.config.max_questions {
            let ranked = rank_hypotheses(&generate_hypotheses(&self.kb, &self.world), &self.kb, &self.world);
            ranked
                .into_iter()
                .filter(|h| h.score > 0)
                .find_map(|h| pose_question(&h, &self.kb, &self.world).ok().map(|q| (h, q)))
        } else {
            None
        };
        match next {
            Some((h, q)) => {
                self.questions_asked += 1;
                self.pending_question = Some(h);
                if self.phase == Phase::Questioning {
                    out.cue(CueEvent::new(CueKind::Highlight).ids(q.highlight.iter().cloned()));
                    out.push(OutboundBody::Question { question: q });
                } else {
                    let highlight = CueEvent::new(CueKind::Highlight).ids(q.highlight.iter().cloned());
                    self.enter(out, Phase::Questioning);
                    out.cue(highlight);
                    out.push(OutboundBody::Question { question: q });
                }
            }
            None => {
                self.pending_question = None;
                self.enter(out, Phase::Idle);
            }
        }
    }

    fn on_answer(&mut self, out: &mut Out<'_>, yes: bool) {
        let h = self.pending_question.take().expect("questioning sessions hold a question");
        match apply_answer(&self.kb, &h, yes) {
            Ok((kb, _)) => self.kb = kb,
            Err(e) => out.error(ErrorCode::IllegalTransition, e.to_string()),
        }
        let ids: Vec<Sym> = self.world.registry().instances_of(&h.candidate).cloned().collect();
        out.cue(
            CueEvent::new(CueKind::Particles)
                .ids(ids)
                .color(if yes { Color::Green } else { Color::Red })
                .text(if yes { "yes" } else { "no" }),
        );
        self.ask_next(out);
    }

    fn on_assist(&mut self, out: &mut Out<'_>) {
        self.assist = Some(AssistTrace {
            start: self.world.clone(),
            prefix: Vec::new(),
        });
        self.enter(out, Phase::Assisting);
        let msg = if self.config.assist.is_some() {
            "I am watching and will help where I can."
        } else {
            "I am watching, but I have no model of you to help with."
        };
        out.cue(CueEvent::speech(msg));
    }

    fn on_stop(&mut self, out: &mut Out<'_>) {
        self.memory.abort();
        self.label = None;
        self.pending_question = None;
        self.pending_plan = None;
        self.banned.clear();
        self.assist = None;
        self.enter(out, Phase::Idle);
        out.cue(CueEvent::speech("Stopped."));
    }

    fn planner_error(&mut self, out: &mut Out<'_>, e: PlannerError) {
        let code = match e {
            PlannerError::UnknownCommand(_) => ErrorCode::UnknownCommand,
            PlannerError::NoInstance { .. } => ErrorCode::NoInstance,
            PlannerError::Unsolvable => ErrorCode::Unsolvable,
            PlannerError::Timeout { .. } => ErrorCode::Timeout,
            _ => ErrorCode::UnknownCommand,
        };
        self.pending_plan = None;
        self.banned.clear();
        self.enter(out, Phase::Idle);
        if matches!(code, ErrorCode::Unsolvable | ErrorCode::Timeout) {
            out.cue(CueEvent::speech("I could not find a way to do that."));
        }
        out.error(code, e.to_string());
    }

    fn on_command(&mut self, out: &mut Out<'_>, cmd: &str) {
        let goal = match parse_goal(cmd, &self.world, &self.config.templates) {
            Ok(g) => g,
            Err(e) => {
                let code = match e {
                    PlannerError::NoInstance { .. } => ErrorCode::NoInstance,
                    _ => ErrorCode::UnknownCommand,
                };
                out.error(code, e.to_string());
                return;
            }
        };
        self.enter(out, Phase::Planning);
        self.banned.clear();
        match plan(&self.world, &goal, &self.kb, &self.config.planner) {
            Ok(p) => self.propose(out, p),
            Err(e) => self.planner_error(out, e),
        }
    }

    fn propose(&mut self, out: &mut Out<'_>, p: Plan) {
        let doc = PlanDocument::from_plan(&p);
        self.pending_plan = Some(p);
        self.enter(out, Phase::AwaitingValidation);
        out.push(OutboundBody::PlanProposal { plan: doc.clone() });
        for s in &doc.steps {
            out.cue(
                CueEvent::new(CueKind::AvatarStep)
                    .ids(s.args.iter().cloned())
                    .step(s.index)
                    .text(s.operator.clone()),
            );
        }
        let text = if doc.steps.is_empty() {
            "That is already done. Approve to confirm.".to_string()
        } else {
            format!("This is my plan in {} steps. Do you approve?", doc.steps.len())
        };
        out.cue(CueEvent::speech(text));
    }

    fn on_feedback(&mut self, out: &mut Out<'_>, f: Feedback) {
        let p = self.pending_plan.clone().expect("validating sessions hold a plan");
        match f {
            Feedback::Reject { step } => {
                let Some(op) = p.steps.get(step) else {
                    out.error(ErrorCode::BadStep, format!("plan has {} steps, no step {step}", p.steps.len()));
                    return;
                };
                self.banned.insert(op.key());
                out.cue(CueEvent::speech(format!("Okay, without {op}.")));
                self.pending_plan = None;
                self.enter(out, Phase::Planning);
                match replan_excluding(&self.world, &p.goal, &self.kb, &self.config.planner, &self.banned) {
                    Ok(np) => self.propose(out, np),
                    Err(e) => self.planner_error(out, e),
                }
            }
            Feedback::Approve => {
                let mut p = p;
                p.status = PlanStatus::Approved;
                self.pending_plan = Some(p.clone());
                self.enter(out, Phase::Executing);
                for (i, op) in p.steps.iter().enumerate() {
                    match execute_step(&self.world, op) {
                        Ok((_, next)) => {
                            let mut u = delta("step", &self.world, &next);
                            u.step = Some(i);
                            out.update(u);
                            self.world = next;
                        }
                        Err(e) => {
                            self.pending_plan = None;
                            self.banned.clear();
                            self.enter(out, Phase::Idle);
                            out.error(ErrorCode::ExecutionFailed, format!("step {i} ({op}): {e}"));
                            return;
                        }
                    }
                }
                let reached = p.goal.holds_in(&self.world);
                self.pending_plan = None;
                self.banned.clear();
                self.enter(out, Phase::Idle);
                out.cue(CueEvent::speech(if reached {
                    format!("Done: {}.", p.goal)
                } else {
                    format!("I finished the plan but {} does not hold.", p.goal)
                }));
            }
        }
    }
}

/// Functional form of [`Session::handle`].
pub fn handle_message(s: &Session, m: &Inbound) -> (Session, Vec<Outbound>) {
    let mut next = s.clone();
    let out = next.handle(m);
    (next, out)
}
