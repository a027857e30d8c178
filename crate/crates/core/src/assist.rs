//! Goal recognition from observed human actions and ergonomic relocation of
//! the object the human is about to use.
//!
//! Goals are scored with a Boltzmann-rational observer: the extra cost a goal
//! needs when forced through the observed prefix, compared with its optimal
//! cost, discounted by `exp(-beta * delta)`.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::cue::{CueEvent, CueKind};
use crate::episodic::ActionEvent;
use crate::operator::GroundOperator;
use crate::planner::{optimal_cost, plan, Goal, PlannerConfig, PlannerError};
use crate::skill::KnowledgeBase;
use crate::sym::Sym;
use crate::world::{step, Location, Point, WorldError, WorldState};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AssistError {
    #[error("pose at distance {distance:.3} m is beyond max reach {max:.3} m")]
    Unreachable { distance: f64, max: f64 },
    #[error("invalid human model: {0}")]
    BadModel(&'static str),
    #[error("invalid goal library: {0}")]
    BadLibrary(String),
    #[error("prefix action {index} is illegal: {error}")]
    IllegalPrefix { index: usize, error: WorldError },
    #[error("observed actions are incompatible with every goal")]
    AllGoalsUnreachable,
    #[error("posterior has no mass")]
    Degenerate,
    #[error(transparent)]
    Planner(#[from] PlannerError),
    #[error("`{0}` moved since the proposal was made")]
    Stale(String),
}

/// Planar reach model of a seated person.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct HumanModel {
    pub agent: Sym,
    pub seat: Point,
    /// Comfortable reach radius, metres.
    pub r_c: f64,
    /// Maximum reach radius, metres.
    pub r_m: f64,
    /// Cost per metre of distance.
    pub w_d: f64,
    /// Cost per square metre of overreach.
    pub w_b: f64,
}

impl HumanModel {
    pub fn validate(&self) -> Result<(), AssistError> {
        if !(self.r_c > 0.0 && self.r_c < self.r_m) {
            return Err(AssistError::BadModel("need 0 < r_c < r_m"));
        }
        if !(self.w_d >= 0.0 && self.w_b >= 0.0) {
            return Err(AssistError::BadModel("weights must be non-negative"));
        }
        if !(self.seat.x.is_finite() && self.seat.y.is_finite() && self.r_m.is_finite()) {
            return Err(AssistError::BadModel("non-finite geometry"));
        }
        Ok(())
    }
}

/// `w_d * d + w_b * max(0, d - r_c)^2`, with `d` the distance from the seat.
pub fn ergonomic_cost(human: &HumanModel, pose: Point) -> Result<f64, AssistError> {
    let d = human.seat.distance(&pose);
    if d > human.r_m {
        return Err(AssistError::Unreachable { distance: d, max: human.r_m });
    }
    let over = (d - human.r_c).max(0.0);
    Ok(human.w_d * d + human.w_b * over * over)
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GoalEntry {
    pub name: String,
    pub goal: Goal,
    pub prior: f64,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GoalLibrary {
    pub entries: Vec<GoalEntry>,
    /// Rationality; larger means the human is assumed closer to optimal.
    pub beta: f64,
}

impl GoalLibrary {
    /// Equal priors over `goals`.
    pub fn uniform(goals: impl IntoIterator<Item = (String, Goal)>, beta: f64) -> Self {
        let mut entries: Vec<GoalEntry> = goals
            .into_iter()
            .map(|(name, goal)| GoalEntry { name, goal, prior: 0.0 })
            .collect();
        let n = entries.len() as f64;
        for e in &mut entries {
            e.prior = 1.0 / n;
        }
        GoalLibrary { entries, beta }
    }

    pub fn validate(&self) -> Result<(), AssistError> {
        if self.entries.is_empty() {
            return Err(AssistError::BadLibrary("no goals".to_string()));
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(AssistError::BadLibrary("beta must be positive".to_string()));
        }
        if let Some(e) = self.entries.iter().find(|e| !(e.prior >= 0.0 && e.prior.is_finite())) {
            return Err(AssistError::BadLibrary(alloc::format!("bad prior for `{}`", e.name)));
        }
        let total: f64 = self.entries.iter().map(|e| e.prior).sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(AssistError::BadLibrary(alloc::format!("priors sum to {total}")));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GoalBelief {
    pub name: String,
    pub goal: Goal,
    /// Extra cost forced by the prefix; `None` when the goal became unreachable.
    pub delta: Option<u32>,
    pub probability: f64,
}

/// Posterior over the library, in library order.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Posterior {
    pub beliefs: Vec<GoalBelief>,
}

impl Posterior {
    pub fn probabilities(&self) -> Vec<f64> {
        self.beliefs.iter().map(|b| b.probability).collect()
    }

    /// Most probable goal; the earliest library entry wins ties.
    pub fn map(&self) -> Option<&GoalBelief> {
        let mut best: Option<&GoalBelief> = None;
        for b in &self.beliefs {
            if b.probability > best.map_or(0.0, |x| x.probability) {
                best = Some(b);
            }
        }
        best
    }
}

fn human_config(human: &Sym, base: &PlannerConfig) -> PlannerConfig {
    PlannerConfig {
        actor: Some(human.clone()),
        ..base.clone()
    }
}

/// Posterior over the library after the human performed `prefix` from `state`.
pub fn infer_goal(
    prefix: &[ActionEvent],
    lib: &GoalLibrary,
    state: &WorldState,
    kb: &KnowledgeBase,
    human: &Sym,
    config: &PlannerConfig,
) -> Result<Posterior, AssistError> {
    lib.validate()?;
    let cfg = human_config(human, config);
    let mut after = state.clone();
    for (index, ev) in prefix.iter().enumerate() {
        after = step(&after, &ev.action).map_err(|error| AssistError::IllegalPrefix { index, error })?;
    }
    let mut deltas: Vec<Option<u32>> = Vec::with_capacity(lib.entries.len());
    for e in &lib.entries {
        let d = match optimal_cost(state, &e.goal, kb, &cfg)? {
            None => None,
            Some(base) => match optimal_cost(&after, &e.goal, kb, &cfg)? {
                None => None,
                Some(rest) => Some((prefix.len() as u32 + rest).saturating_sub(base)),
            },
        };
        deltas.push(d);
    }
    let Some(dmin) = deltas.iter().flatten().copied().min() else {
        return Err(AssistError::AllGoalsUnreachable);
    };
    let ties = deltas.iter().all(|d| *d == Some(dmin));
    let weights: Vec<f64> = if ties {
        // every goal pays the same: the observation carries no information
        lib.entries.iter().map(|e| e.prior).collect()
    } else {
        deltas
            .iter()
            .zip(&lib.entries)
            .map(|(d, e)| match d {
                Some(d) => e.prior * libm::exp(-lib.beta * f64::from(d - dmin)),
                None => 0.0,
            })
            .collect()
    };
    let total: f64 = if ties { 1.0 } else { weights.iter().sum() };
    if !(total > 0.0) {
        return Err(AssistError::AllGoalsUnreachable);
    }
    let beliefs = lib
        .entries
        .iter()
        .zip(deltas)
        .zip(weights)
        .map(|((e, delta), w)| GoalBelief {
            name: e.name.clone(),
            goal: e.goal.clone(),
            delta,
            probability: w / total,
        })
        .collect();
    Ok(Posterior { beliefs })
}

/// First step of an optimal plan towards the MAP goal; `None` when that goal
/// already holds.
pub fn predict_next_action(
    state: &WorldState,
    posterior: &Posterior,
    kb: &KnowledgeBase,
    human: &Sym,
    config: &PlannerConfig,
) -> Result<Option<GroundOperator>, AssistError> {
    let best = posterior.map().ok_or(AssistError::Degenerate)?;
    let p = plan(state, &best.goal, kb, &human_config(human, config))?;
    Ok(p.steps.into_iter().next())
}

/// Cells of an axis-aligned grid, x-major, both corners included.
pub fn grid(min: Point, max: Point, spacing: f64) -> Vec<Point> {
    let mut out = Vec::new();
    if !(spacing > 0.0) || max.x < min.x || max.y < min.y {
        return out;
    }
    let nx = libm::floor((max.x - min.x) / spacing + 1e-9) as usize;
    let ny = libm::floor((max.y - min.y) / spacing + 1e-9) as usize;
    // snap away accumulated float noise so cells print as typed
    let snap = |v: f64| libm::round(v * 1e9) / 1e9;
    for i in 0..=nx {
        for j in 0..=ny {
            out.push(Point::new(snap(min.x + i as f64 * spacing), snap(min.y + j as f64 * spacing)));
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct InterventionProposal {
    pub object: Sym,
    pub from: Point,
    pub to: Point,
    /// Infinite when the object starts beyond reach.
    pub cost_before: f64,
    pub cost_after: f64,
    pub announcement: CueEvent,
}

/// The object the predicted step will be applied to: its last argument that
/// is a movable, non-liquid object standing in a zone.
pub fn intervention_target(state: &WorldState, op: &GroundOperator) -> Option<Sym> {
    let reg = state.registry();
    op.args
        .iter()
        .rev()
        .find(|a| {
            reg.is_movable(a) && !reg.is_liquid(a) && matches!(state.location(a), Some(Location::Zone(_)))
        })
        .cloned()
}

/// Moves the predicted step's target to the cheapest cell of `region`. Cost
/// ties go to the cell nearest the current pose, then to region order.
/// Returns `None` unless the gain is at least `epsilon`.
pub fn propose_intervention(
    state: &WorldState,
    predicted: &GroundOperator,
    human: &HumanModel,
    region: &[Point],
    epsilon: f64,
) -> Option<InterventionProposal> {
    let object = intervention_target(state, predicted)?;
    let from = state.pose(&object)?;
    let cost_before = ergonomic_cost(human, from).unwrap_or(f64::INFINITY);
    let mut best: Option<(f64, f64, Point)> = None;
    for &cell in region {
        let Ok(c) = ergonomic_cost(human, cell) else {
            continue;
        };
        let near = cell.distance(&from);
        let better = match best {
            None => true,
            Some((bc, bn, _)) => c < bc - 1e-12 || ((c - bc).abs() <= 1e-12 && near < bn - 1e-12),
        };
        if better {
            best = Some((c, near, cell));
        }
    }
    let (cost_after, _, to) = best?;
    if !(cost_after <= cost_before - epsilon) {
        return None;
    }
    let announcement = CueEvent::new(CueKind::Hologram)
        .ids([object.clone()])
        .pose(to)
        .text(alloc::format!("I will move {object} closer to you"));
    Some(InterventionProposal {
        object,
        from,
        to,
        cost_before,
        cost_after,
        announcement,
    })
}

/// Puts the object at the proposed pose; every fact is kept.
pub fn apply_intervention(state: &WorldState, proposal: &InterventionProposal) -> Result<WorldState, AssistError> {
    let here = state.pose(&proposal.object);
    let still = matches!(state.location(&proposal.object), Some(Location::Zone(_)))
        && here.is_some_and(|p| p.distance(&proposal.from) <= 1e-9);
    if !still {
        return Err(AssistError::Stale(proposal.object.to_string()));
    }
    Ok(state.with_pose(&proposal.object, proposal.to))
}
