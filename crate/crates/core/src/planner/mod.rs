//! Forward best-first planning over primitives and learned skills.
//!
//! Both kinds of operator live in one pool. A step is instantiated against
//! the state it is taken in, so its add and delete lists are the exact fact
//! difference including device ticks.

mod doc;
mod goal;
mod relaxed;

use alloc::collections::{BTreeSet, BinaryHeap};
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::cmp::{Ordering, Reverse};

use hashbrown::HashMap;

pub use doc::{PlanDocument, StepDoc};
pub use goal::{default_templates, parse_goal, Goal, GoalTemplate};
use relaxed::{Combine, RelaxedModel, INF};

use crate::operator::{GroundOperator, OperatorKey, Origin};
use crate::skill::KnowledgeBase;
use crate::sym::Sym;
use crate::world::action::apply_unchecked;
use crate::world::{
    apply_action_traced, diff_states, tick_devices, ActionKind, Literal, PrimitiveAction, WorldError, WorldState,
};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PlannerError {
    #[error("unknown command `{0}`")]
    UnknownCommand(String),
    #[error("command `{template}` needs a `{ty}` but none is present")]
    NoInstance { template: String, ty: String },
    #[error("goal template `{0}` is malformed")]
    BadTemplate(String),
    #[error("goal is empty")]
    EmptyGoal,
    #[error("goal is unreachable")]
    Unsolvable,
    #[error("search gave up after expanding {expanded} nodes")]
    Timeout { expanded: usize },
    #[error("step {index} is infeasible: {literal} does not hold")]
    StepInfeasible { index: usize, literal: String },
    #[error("plan is {0}, expected proposed")]
    WrongStatus(&'static str),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum HeuristicMode {
    /// A* on LM-cut, preferring lower estimates on ties. Optimal.
    #[default]
    LmCut,
    /// A* on the max heuristic, additive heuristic as tie-break. Optimal.
    MaxThenAdd,
    /// Greedy-leaning best-first on g + additive heuristic. Not optimal.
    Additive,
}

#[derive(Clone, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct PlannerConfig {
    pub node_budget: usize,
    /// Agent that executes primitives; every agent when unset.
    pub actor: Option<Sym>,
    pub heuristic: HeuristicMode,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        PlannerConfig {
            node_budget: 200_000,
            actor: None,
            heuristic: HeuristicMode::default(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case", tag = "kind", content = "step"))]
pub enum PlanStatus {
    Proposed,
    Approved,
    Rejected(usize),
    Executed,
}

impl PlanStatus {
    pub fn name(self) -> &'static str {
        match self {
            PlanStatus::Proposed => "proposed",
            PlanStatus::Approved => "approved",
            PlanStatus::Rejected(_) => "rejected",
            PlanStatus::Executed => "executed",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Plan {
    pub goal: Goal,
    pub steps: Vec<GroundOperator>,
    /// `steps.len() + 1` states, starting with the initial one.
    pub trajectory: Vec<WorldState>,
    pub status: PlanStatus,
}

impl Plan {
    pub fn cost(&self) -> u32 {
        self.steps.iter().map(|s| s.cost).sum()
    }

    pub fn initial(&self) -> &WorldState {
        &self.trajectory[0]
    }

    pub fn last(&self) -> &WorldState {
        self.trajectory.last().expect("trajectory is never empty")
    }

    pub fn contains_key(&self, key: &OperatorKey) -> bool {
        self.steps.iter().any(|s| s.key() == *key)
    }
}

/// The primitive action a primitive operator stands for.
pub fn as_primitive(op: &GroundOperator) -> Option<PrimitiveAction> {
    if op.origin != Origin::Primitive || op.args.is_empty() {
        return None;
    }
    Some(PrimitiveAction {
        kind: ActionKind::from_name(&op.name)?,
        actor: op.args[0].clone(),
        args: op.args[1..].to_vec(),
    })
}

fn primitive_operator(state: &WorldState, action: &PrimitiveAction) -> Result<(GroundOperator, WorldState), WorldError> {
    let applied = apply_action_traced(state, action)?;
    let next = tick_devices(&applied.state);
    let diff = diff_states(state, &next)?;
    let mut args = alloc::vec![action.actor.clone()];
    args.extend(action.args.iter().cloned());
    let op = GroundOperator {
        name: Sym::new(action.kind.name()),
        args,
        preconds: applied.preconds,
        adds: diff.added,
        dels: diff.removed,
        cost: 1,
        origin: Origin::Primitive,
    };
    Ok((op, next))
}

/// Applies a skill grounding: STRIPS update, one device tick, invariants.
fn skill_transition(state: &WorldState, op: &GroundOperator) -> Result<(GroundOperator, WorldState), WorldError> {
    let next = tick_devices(&op.apply(state)?);
    next.check_invariants()?;
    let diff = diff_states(state, &next)?;
    let mut step = op.clone();
    step.adds = diff.added;
    step.dels = diff.removed;
    Ok((step, next))
}

/// Executes one plan step against `state`, re-deriving its effects there.
pub fn execute_step(state: &WorldState, op: &GroundOperator) -> Result<(GroundOperator, WorldState), WorldError> {
    match as_primitive(op) {
        Some(a) => primitive_operator(state, &a),
        None => skill_transition(state, op),
    }
}

/// Everything the planner may do from any state of one registry.
pub struct OperatorPool {
    actors: Vec<Sym>,
    skills: Vec<GroundOperator>,
    banned: BTreeSet<OperatorKey>,
}

impl OperatorPool {
    pub fn new(state: &WorldState, kb: &KnowledgeBase, config: &PlannerConfig, banned: &BTreeSet<OperatorKey>) -> Self {
        let reg = state.registry();
        let actors: Vec<Sym> = match &config.actor {
            Some(a) => reg.agents.iter().filter(|x| *x == a).cloned().collect(),
            None => reg.agents.iter().cloned().collect(),
        };
        let skills = kb
            .ground_all(state)
            .into_iter()
            .filter(|op| !banned.contains(&op.key()))
            .collect();
        OperatorPool {
            actors,
            skills,
            banned: banned.clone(),
        }
    }

    pub fn actors(&self) -> &[Sym] {
        &self.actors
    }

    pub fn skills(&self) -> &[GroundOperator] {
        &self.skills
    }

    fn primitive_candidates(&self, state: &WorldState) -> Vec<PrimitiveAction> {
        let reg = state.registry();
        let mut out = Vec::new();
        for a in &self.actors {
            match state.held_by(a) {
                None => {
                    for o in reg.object_ids() {
                        if reg.is_movable(o) && !reg.is_liquid(o) && state.holder_of(o).is_none() {
                            out.push(PrimitiveAction::new(ActionKind::Pick, a, &[o]));
                        }
                    }
                }
                Some(h) => {
                    for z in reg.zones.keys() {
                        out.push(PrimitiveAction::new(ActionKind::Place, a, &[h, z]));
                    }
                    for c in reg.object_ids().filter(|c| reg.is_container(c) && *c != h) {
                        out.push(PrimitiveAction::new(ActionKind::Place, a, &[h, c]));
                    }
                    if reg.is_container(h) {
                        for c in reg.object_ids().filter(|c| reg.is_container(c) && *c != h) {
                            out.push(PrimitiveAction::new(ActionKind::Pour, a, &[h, c]));
                        }
                    }
                }
            }
            for d in reg.object_ids().filter(|d| reg.is_device(d)) {
                if reg.has_door(d) {
                    let kind = if state.is_open(d) { ActionKind::Close } else { ActionKind::Open };
                    out.push(PrimitiveAction::new(kind, a, &[d]));
                }
                out.push(PrimitiveAction::new(ActionKind::Press, a, &[d]));
            }
        }
        out
    }

    fn moves(&self, state: &WorldState) -> Vec<(Move, WorldState)> {
        let mut out = Vec::new();
        for action in self.primitive_candidates(state) {
            if !self.banned.is_empty() {
                let mut args = alloc::vec![action.actor.clone()];
                args.extend(action.args.iter().cloned());
                let key = OperatorKey {
                    origin: Origin::Primitive,
                    name: Sym::new(action.kind.name()),
                    args,
                };
                if self.banned.contains(&key) {
                    continue;
                }
            }
            if let Ok(applied) = apply_unchecked(state, &action) {
                let next = tick_devices(&applied.state);
                if next.facts() != state.facts() {
                    out.push((Move::Primitive(action), next));
                }
            }
        }
        for (i, op) in self.skills.iter().enumerate() {
            if !op.applicable(state) {
                continue;
            }
            let Ok(applied) = op.apply(state) else { continue };
            let next = tick_devices(&applied);
            if next.facts() != state.facts() && next.check_invariants().is_ok() {
                out.push((Move::Skill(i), next));
            }
        }
        out
    }

    fn cost_of(&self, mv: &Move) -> u32 {
        match mv {
            Move::Primitive(_) => 1,
            Move::Skill(i) => self.skills[*i].cost,
        }
    }

    /// Re-derives the full operator for a move taken in `state`.
    fn operator(&self, state: &WorldState, mv: &Move) -> GroundOperator {
        let step = match mv {
            Move::Primitive(a) => primitive_operator(state, a),
            Move::Skill(i) => skill_transition(state, &self.skills[*i]),
        };
        step.expect("a generated move replays").0
    }

    /// Legal steps that change the state, primitives first, in a fixed order.
    pub fn successors(&self, state: &WorldState) -> Vec<(GroundOperator, WorldState)> {
        let mut out = Vec::new();
        for action in self.primitive_candidates(state) {
            if let Ok((op, next)) = primitive_operator(state, &action) {
                if next.facts() != state.facts() && !self.banned.contains(&op.key()) {
                    out.push((op, next));
                }
            }
        }
        for op in &self.skills {
            if !op.applicable(state) {
                continue;
            }
            if let Ok((step, next)) = skill_transition(state, op) {
                if next.facts() != state.facts() {
                    out.push((step, next));
                }
            }
        }
        out
    }
}

/// A step as the search stores it; the full operator is only built for the
/// returned plan.
enum Move {
    Primitive(PrimitiveAction),
    Skill(usize),
}

struct Node {
    state: WorldState,
    parent: Option<(usize, Move)>,
    g: u32,
}

#[derive(PartialEq, Eq)]
struct Entry {
    f: u32,
    tie: u32,
    order: usize,
    node: usize,
}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.f, self.tie, self.order).cmp(&(other.f, other.tie, other.order))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn search(
    state: &WorldState,
    goal: &Goal,
    kb: &KnowledgeBase,
    config: &PlannerConfig,
    banned: &BTreeSet<OperatorKey>,
) -> Result<Plan, PlannerError> {
    let pool = OperatorPool::new(state, kb, config, banned);
    let model = RelaxedModel::build(state, &pool.actors, &pool.skills, banned);
    let goal_lits: Vec<Literal> = goal.literals.iter().cloned().collect();
    let score = |s: &WorldState, g: u32| -> Option<(u32, u32)> {
        match config.heuristic {
            HeuristicMode::LmCut => {
                let h = model.lm_cut(s, &goal_lits);
                (h != INF).then(|| (g + h, h))
            }
            HeuristicMode::MaxThenAdd => {
                let (hm, ha) = model.estimate_both(s, &goal_lits);
                (hm != INF).then(|| (g + hm, ha))
            }
            HeuristicMode::Additive => {
                let ha = model.estimate(s, &goal_lits, Combine::Sum);
                (ha != INF).then(|| (g.saturating_add(ha), 0))
            }
        }
    };

    let mut nodes: Vec<Node> = alloc::vec![Node {
        state: state.clone(),
        parent: None,
        g: 0,
    }];
    // best g per fact set, and whether it has been expanded
    let mut seen: HashMap<BTreeSet<Literal>, (u32, bool)> = HashMap::new();
    seen.insert(state.facts().clone(), (0, false));
    let mut open = BinaryHeap::new();
    let mut order = 0usize;
    let Some((f, tie)) = score(state, 0) else {
        return Err(PlannerError::Unsolvable);
    };
    open.push(Reverse(Entry { f, tie, order, node: 0 }));
    let mut expanded = 0usize;

    while let Some(Reverse(entry)) = open.pop() {
        let idx = entry.node;
        let g = nodes[idx].g;
        let succ = {
            let cur = &nodes[idx].state;
            let mark = seen.get_mut(cur.facts()).expect("queued states are recorded");
            if mark.1 || mark.0 < g {
                continue;
            }
            if goal.holds_in(cur) {
                return Ok(unwind(&pool, &nodes, idx, goal));
            }
            mark.1 = true;
            expanded += 1;
            if expanded > config.node_budget {
                return Err(PlannerError::Timeout { expanded: expanded - 1 });
            }
            pool.moves(cur)
        };
        for (mv, next) in succ {
            let ng = g + pool.cost_of(&mv);
            // closed states are reopened on a cheaper path, since LM-cut is not consistent
            if seen.get(next.facts()).is_some_and(|&(b, _)| b <= ng) {
                continue;
            }
            let Some((f, tie)) = score(&next, ng) else {
                continue;
            };
            seen.insert(next.facts().clone(), (ng, false));
            nodes.push(Node {
                state: next,
                parent: Some((idx, mv)),
                g: ng,
            });
            order += 1;
            open.push(Reverse(Entry {
                f,
                tie,
                order,
                node: nodes.len() - 1,
            }));
        }
    }
    Err(PlannerError::Unsolvable)
}

fn unwind(pool: &OperatorPool, nodes: &[Node], mut idx: usize, goal: &Goal) -> Plan {
    let mut steps = Vec::new();
    let mut trajectory = alloc::vec![nodes[idx].state.clone()];
    while let Some((p, mv)) = &nodes[idx].parent {
        steps.push(pool.operator(&nodes[*p].state, mv));
        idx = *p;
        trajectory.push(nodes[idx].state.clone());
    }
    steps.reverse();
    trajectory.reverse();
    Plan {
        goal: goal.clone(),
        steps,
        trajectory,
        status: PlanStatus::Proposed,
    }
}

pub fn plan(state: &WorldState, goal: &Goal, kb: &KnowledgeBase, config: &PlannerConfig) -> Result<Plan, PlannerError> {
    search(state, goal, kb, config, &BTreeSet::new())
}

/// Plans without any operator whose key is banned.
pub fn replan_excluding(
    state: &WorldState,
    goal: &Goal,
    kb: &KnowledgeBase,
    config: &PlannerConfig,
    banned: &BTreeSet<OperatorKey>,
) -> Result<Plan, PlannerError> {
    search(state, goal, kb, config, banned)
}

/// Optimal plan cost, `None` if the goal is unreachable.
pub fn optimal_cost(
    state: &WorldState,
    goal: &Goal,
    kb: &KnowledgeBase,
    config: &PlannerConfig,
) -> Result<Option<u32>, PlannerError> {
    let mut cfg = config.clone();
    cfg.heuristic = HeuristicMode::MaxThenAdd;
    match plan(state, goal, kb, &cfg) {
        Ok(p) => Ok(Some(p.cost())),
        Err(PlannerError::Unsolvable) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Replays a proposed plan from `state`, rebuilding the trajectory.
pub fn simulate_plan(plan: &Plan, state: &WorldState) -> Result<Plan, PlannerError> {
    if plan.status != PlanStatus::Proposed {
        return Err(PlannerError::WrongStatus(plan.status.name()));
    }
    let mut out = Plan {
        goal: plan.goal.clone(),
        steps: Vec::with_capacity(plan.steps.len()),
        trajectory: alloc::vec![state.clone()],
        status: PlanStatus::Proposed,
    };
    for (index, op) in plan.steps.iter().enumerate() {
        let cur = out.last().clone();
        match execute_step(&cur, op) {
            Ok((step, next)) => {
                out.steps.push(step);
                out.trajectory.push(next);
            }
            Err(e) => {
                let literal = match e {
                    WorldError::PreconditionUnmet { literal, .. } => literal,
                    other => other.to_string(),
                };
                return Err(PlannerError::StepInfeasible { index, literal });
            }
        }
    }
    Ok(out)
}
