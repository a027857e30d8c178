//! Primitive manipulations and device dynamics.

use alloc::borrow::Cow;
use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use super::literal::{Literal, Pred, TempValue};
use super::state::{kinds, Location, WorldError, WorldState};
use crate::sym::Sym;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum ActionKind {
    Pick,
    Place,
    Open,
    Close,
    Press,
    Pour,
}

impl ActionKind {
    pub const ALL: [ActionKind; 6] = [
        ActionKind::Pick,
        ActionKind::Place,
        ActionKind::Open,
        ActionKind::Close,
        ActionKind::Press,
        ActionKind::Pour,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ActionKind::Pick => "pick",
            ActionKind::Place => "place",
            ActionKind::Open => "open",
            ActionKind::Close => "close",
            ActionKind::Press => "press",
            ActionKind::Pour => "pour",
        }
    }

    pub fn arity(self) -> usize {
        match self {
            ActionKind::Place | ActionKind::Pour => 2,
            _ => 1,
        }
    }

    pub fn from_name(s: &str) -> Option<ActionKind> {
        ActionKind::ALL.iter().copied().find(|k| k.name() == s)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PrimitiveAction {
    pub kind: ActionKind,
    pub actor: Sym,
    pub args: Vec<Sym>,
}

impl PrimitiveAction {
    pub fn new(kind: ActionKind, actor: &str, args: &[&str]) -> Self {
        PrimitiveAction {
            kind,
            actor: Sym::new(actor),
            args: args.iter().map(|a| Sym::new(a)).collect(),
        }
    }

    pub fn pick(actor: &str, obj: &str) -> Self {
        Self::new(ActionKind::Pick, actor, &[obj])
    }
    pub fn place(actor: &str, obj: &str, target: &str) -> Self {
        Self::new(ActionKind::Place, actor, &[obj, target])
    }
    pub fn open(actor: &str, dev: &str) -> Self {
        Self::new(ActionKind::Open, actor, &[dev])
    }
    pub fn close(actor: &str, dev: &str) -> Self {
        Self::new(ActionKind::Close, actor, &[dev])
    }
    pub fn press(actor: &str, dev: &str) -> Self {
        Self::new(ActionKind::Press, actor, &[dev])
    }
    pub fn pour(actor: &str, src: &str, dst: &str) -> Self {
        Self::new(ActionKind::Pour, actor, &[src, dst])
    }

    pub fn check_arity(&self) -> Result<(), WorldError> {
        if self.args.len() != self.kind.arity() {
            return Err(WorldError::ActionArity {
                kind: self.kind.name(),
                expected: self.kind.arity(),
                found: self.args.len(),
            });
        }
        Ok(())
    }
}

impl fmt::Display for PrimitiveAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({}", self.kind.name(), self.actor)?;
        for a in &self.args {
            write!(f, ", {a}")?;
        }
        f.write_str(")")
    }
}

/// Result of a primitive: the successor plus the positive literals the
/// built-in precondition (and any conditional effect) depended on.
#[derive(Clone, Debug)]
pub struct Applied {
    pub state: WorldState,
    pub preconds: BTreeSet<Literal>,
}

struct Ctx<'a> {
    action: &'a PrimitiveAction,
}

impl Ctx<'_> {
    fn unmet(&self, literal: impl Into<String>) -> WorldError {
        WorldError::PreconditionUnmet {
            action: self.action.to_string(),
            literal: literal.into(),
        }
    }
}

/// Applies a primitive. The input is never modified.
pub fn apply_action(state: &WorldState, action: &PrimitiveAction) -> Result<WorldState, WorldError> {
    apply_action_traced(state, action).map(|a| a.state)
}

pub fn apply_action_traced(state: &WorldState, action: &PrimitiveAction) -> Result<Applied, WorldError> {
    let applied = apply_unchecked(state, action)?;
    applied.state.check_invariants()?;
    Ok(applied)
}

/// The preconditions alone keep a valid state valid; the planner relies on
/// that to skip the full invariant pass.
pub(crate) fn apply_unchecked(state: &WorldState, action: &PrimitiveAction) -> Result<Applied, WorldError> {
    action.check_arity()?;
    let reg = state.registry();
    let ctx = Ctx { action };
    let actor = reg.resolve(&action.actor)?;
    if !reg.is_agent(&actor) {
        return Err(ctx.unmet(format!("agent({actor})")));
    }
    let args: Vec<Sym> = action.args.iter().map(|a| reg.resolve(a)).collect::<Result<_, _>>()?;
    // edits are recorded so failed candidates never copy the fact set
    let mut facts = Edits::default();
    let mut pre = BTreeSet::new();

    match action.kind {
        ActionKind::Pick => {
            let o = &args[0];
            if !reg.is_movable(o) || reg.is_liquid(o) {
                return Err(ctx.unmet(format!("movable({o})")));
            }
            if let Some(h) = state.held_by(&actor) {
                return Err(ctx.unmet(format!("not holding({actor}, {h})")));
            }
            match state.location(o) {
                Some(Location::Zone(z)) => {
                    let l = Literal::at(o, &z);
                    facts.remove(&l);
                    pre.insert(l);
                }
                Some(Location::In(c)) => {
                    if reg.has_door(&c) {
                        let open = Literal::open(&c);
                        if !state.holds(&open) {
                            return Err(ctx.unmet(open.to_string()));
                        }
                        pre.insert(open);
                    }
                    let l = Literal::inside(o, &c);
                    facts.remove(&l);
                    pre.insert(l);
                }
                Some(Location::Held(other)) => {
                    return Err(ctx.unmet(format!("not holding({other}, {o})")));
                }
                None => return Err(ctx.unmet(format!("located({o})"))),
            }
            facts.insert(Literal::holding(&actor, o));
        }
        ActionKind::Place => {
            let (o, target) = (&args[0], &args[1]);
            let held = Literal::holding(&actor, o);
            if !state.holds(&held) {
                return Err(ctx.unmet(held.to_string()));
            }
            facts.remove(&held);
            pre.insert(held);
            if reg.is_zone(target) {
                facts.insert(Literal::at(o, target));
            } else {
                require_receptacle(state, &ctx, target, 1, &mut pre)?;
                if target == o || state.is_within(target, o) {
                    return Err(ctx.unmet(format!("not within({target}, {o})")));
                }
                facts.insert(Literal::inside(o, target));
            }
        }
        ActionKind::Open | ActionKind::Close => {
            let d = &args[0];
            if !reg.has_door(d) {
                return Err(ctx.unmet(format!("door({d})")));
            }
            let open = Literal::open(d);
            if action.kind == ActionKind::Open {
                if state.holds(&open) {
                    return Err(ctx.unmet(format!("not {open}")));
                }
                facts.insert(open);
            } else {
                if !state.holds(&open) {
                    return Err(ctx.unmet(open.to_string()));
                }
                facts.remove(&open);
                pre.insert(open);
            }
        }
        ActionKind::Press => {
            let d = &args[0];
            if !reg.is_device(d) {
                return Err(ctx.unmet(format!("device({d})")));
            }
            if reg.is_a(d, kinds::TOASTER) {
                for x in state.contents(d) {
                    if !reg.is_liquid(&x) {
                        pre.insert(Literal::inside(&x, d));
                        facts.insert(Literal::toasted(&x));
                    }
                }
            } else {
                facts.insert(Literal::powered(d));
            }
        }
        ActionKind::Pour => {
            let (src, dst) = (&args[0], &args[1]);
            let held = Literal::holding(&actor, src);
            if !state.holds(&held) {
                return Err(ctx.unmet(held.to_string()));
            }
            pre.insert(held);
            if src == dst {
                return Err(ctx.unmet(format!("distinct({src}, {dst})")));
            }
            let portions: Vec<Sym> = state.contents(src).into_iter().filter(|x| reg.is_liquid(x)).collect();
            if portions.is_empty() {
                return Err(ctx.unmet(format!("in(?liquid, {src})")));
            }
            require_receptacle(state, &ctx, dst, portions.len(), &mut pre)?;
            for w in &portions {
                let from = Literal::inside(w, src);
                facts.remove(&from);
                pre.insert(from);
                facts.insert(Literal::inside(w, dst));
            }
        }
    }

    let mut next = state.facts().clone();
    for l in &facts.del {
        next.remove(l);
    }
    next.extend(facts.add);
    let next = state.with_facts(next);
    Ok(Applied {
        state: next,
        preconds: pre,
    })
}

#[derive(Default)]
struct Edits {
    del: Vec<Literal>,
    add: Vec<Literal>,
}

impl Edits {
    fn remove(&mut self, l: &Literal) {
        self.del.push(l.clone());
    }

    fn insert(&mut self, l: Literal) {
        self.add.push(l);
    }
}

fn require_receptacle(
    state: &WorldState,
    ctx: &Ctx<'_>,
    target: &Sym,
    incoming: usize,
    pre: &mut BTreeSet<Literal>,
) -> Result<(), WorldError> {
    let reg = state.registry();
    let Some(cap) = reg.capacity(target) else {
        return Err(ctx.unmet(format!("container({target})")));
    };
    if reg.has_door(target) {
        let open = Literal::open(target);
        if !state.holds(&open) {
            return Err(ctx.unmet(open.to_string()));
        }
        pre.insert(open);
    }
    if state.contents(target).len() + incoming > cap as usize {
        return Err(ctx.unmet(format!("has_room({target})")));
    }
    Ok(())
}

fn set_temp(facts: &mut Cow<'_, BTreeSet<Literal>>, x: &Sym, t: TempValue) {
    if facts.contains(&Literal::temp(x, t)) {
        return;
    }
    let f = facts.to_mut();
    for v in [TempValue::Cold, TempValue::Ambient, TempValue::Hot] {
        f.remove(&Literal::temp(x, v));
    }
    f.insert(Literal::temp(x, t));
}

/// One synchronous pass of the device rules, in the fixed order microwave,
/// fridge, kettle, then steeping. Heating and cooling reach transitive contents.
pub fn tick_devices(state: &WorldState) -> WorldState {
    let reg = state.registry();
    // rules never move things, so containment and doors can be read from `state`
    let ins: Vec<(&Sym, &Sym)> = state
        .facts()
        .iter()
        .filter(|l| l.pred == Pred::In)
        .map(|l| (&l.args[0], &l.args[1]))
        .collect();
    let deep = |c: &Sym| {
        let mut out: Vec<&Sym> = Vec::new();
        let mut frontier = alloc::vec![c];
        while let Some(x) = frontier.pop() {
            for (inner, _) in ins.iter().filter(|(_, outer)| *outer == x) {
                if !out.contains(inner) {
                    out.push(inner);
                    frontier.push(inner);
                }
            }
        }
        out
    };
    let mut facts = Cow::Borrowed(state.facts());

    for m in reg.instances_of(kinds::MICROWAVE) {
        if state.is_open(m) || !facts.contains(&Literal::powered(m)) {
            continue;
        }
        let contents = deep(m);
        if !contents.is_empty() {
            for x in contents {
                set_temp(&mut facts, x, TempValue::Hot);
            }
            facts.to_mut().remove(&Literal::powered(m));
        }
    }
    for f in reg.instances_of(kinds::FRIDGE) {
        if !state.is_open(f) {
            for x in deep(f) {
                set_temp(&mut facts, x, TempValue::Cold);
            }
        }
    }
    for k in reg.instances_of(kinds::KETTLE) {
        if !facts.contains(&Literal::powered(k)) {
            continue;
        }
        let contents = deep(k);
        if !contents.is_empty() {
            for x in contents {
                set_temp(&mut facts, x, TempValue::Hot);
            }
            facts.to_mut().remove(&Literal::powered(k));
        }
    }
    for c in reg.objects.values().filter(|o| o.capacity.is_some()) {
        if facts.contains(&Literal::brewed(&c.id)) {
            continue;
        }
        let inside = || ins.iter().filter(|(_, outer)| **outer == c.id).map(|(x, _)| *x);
        let bag = inside().any(|x| reg.is_a(x, kinds::TEABAG));
        let hot = inside().any(|x| reg.is_liquid(x) && facts.contains(&Literal::temp(x, TempValue::Hot)));
        if bag && hot {
            facts.to_mut().insert(Literal::brewed(&c.id));
        }
    }
    match facts {
        Cow::Borrowed(_) => state.clone(),
        Cow::Owned(f) => state.with_facts(f),
    }
}
