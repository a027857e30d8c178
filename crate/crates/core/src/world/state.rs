//! Object registry and closed-world fact snapshots.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec::Vec;

use super::literal::{Literal, LiteralError, Pred, TempValue};
use super::tree::{TreeError, TypeTree};
use crate::sym::Sym;

/// Type names the simulator attaches behaviour to.
pub mod kinds {
    pub const DEVICE: &str = "device";
    pub const APPLIANCE: &str = "appliance";
    pub const MICROWAVE: &str = "microwave";
    pub const FRIDGE: &str = "fridge";
    pub const KETTLE: &str = "kettle";
    pub const TOASTER: &str = "toaster";
    pub const LIQUID: &str = "liquid";
    pub const TEABAG: &str = "teabag";

    const ALL: [&str; 8] = [DEVICE, APPLIANCE, MICROWAVE, FRIDGE, KETTLE, TOASTER, LIQUID, TEABAG];

    /// Bit for a built-in kind name.
    pub fn bit(kind: &str) -> Option<u8> {
        ALL.iter().position(|k| *k == kind).map(|i| 1 << i)
    }

    /// Built-in kinds `ty` falls under, precomputed so hot paths skip the tree walk.
    pub fn mask(tree: &super::TypeTree, ty: &str) -> u8 {
        ALL.iter()
            .enumerate()
            .filter(|(_, k)| tree.is_a(ty, k))
            .fold(0, |m, (i, _)| m | 1 << i)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn distance(&self, other: &Point) -> f64 {
        libm::hypot(self.x - other.x, self.y - other.y)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ObjectInstance {
    pub id: Sym,
    pub ty: Sym,
    /// Present for containers and devices that hold things.
    pub capacity: Option<u32>,
    pub kinds: u8,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum WorldError {
    #[error("id `{0}` declared twice")]
    DuplicateId(String),
    #[error("object `{id}` has unknown type `{ty}`")]
    UnknownType { id: String, ty: String },
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error(transparent)]
    Literal(#[from] LiteralError),
    #[error("unknown id `{0}`")]
    UnknownId(String),
    #[error("invalid fact `{literal}`: {reason}")]
    InvalidFact { literal: String, reason: &'static str },
    #[error("functional violation on `{object}`: {detail}")]
    FunctionalViolation { object: String, detail: &'static str },
    #[error("container `{container}` holds {count} items, capacity {capacity}")]
    CapacityExceeded { container: String, count: usize, capacity: u32 },
    #[error("{action}: precondition unmet: {literal}")]
    PreconditionUnmet { action: String, literal: String },
    #[error("{kind} takes {expected} argument(s), found {found}")]
    ActionArity { kind: &'static str, expected: usize, found: usize },
    #[error("states do not share a registry")]
    RegistryMismatch,
}

/// Everything about a world that facts do not change.
#[derive(Clone, Debug, PartialEq)]
pub struct Registry {
    pub tree: Arc<TypeTree>,
    pub objects: BTreeMap<Sym, ObjectInstance>,
    pub agents: BTreeSet<Sym>,
    pub zones: BTreeMap<Sym, Point>,
}

impl Registry {
    pub fn object(&self, id: &str) -> Option<&ObjectInstance> {
        self.objects.get(id)
    }

    pub fn type_of(&self, id: &str) -> Option<&Sym> {
        self.objects.get(id).map(|o| &o.ty)
    }

    pub fn is_a(&self, id: &str, ty: &str) -> bool {
        let Some(o) = self.objects.get(id) else {
            return false;
        };
        match kinds::bit(ty) {
            Some(b) => o.kinds & b != 0,
            None => self.tree.is_a(&o.ty, ty),
        }
    }

    pub fn is_zone(&self, id: &str) -> bool {
        self.zones.contains_key(id)
    }

    pub fn is_agent(&self, id: &str) -> bool {
        self.agents.contains(id)
    }

    pub fn is_object(&self, id: &str) -> bool {
        self.objects.contains_key(id)
    }

    pub fn is_device(&self, id: &str) -> bool {
        self.is_a(id, kinds::DEVICE)
    }

    pub fn is_liquid(&self, id: &str) -> bool {
        self.is_a(id, kinds::LIQUID)
    }

    /// Appliances stay where they are installed.
    pub fn is_movable(&self, id: &str) -> bool {
        self.is_object(id) && !self.is_a(id, kinds::APPLIANCE)
    }

    pub fn is_container(&self, id: &str) -> bool {
        self.objects.get(id).is_some_and(|o| o.capacity.is_some())
    }

    pub fn capacity(&self, id: &str) -> Option<u32> {
        self.objects.get(id).and_then(|o| o.capacity)
    }

    pub fn has_door(&self, id: &str) -> bool {
        self.is_a(id, kinds::MICROWAVE) || self.is_a(id, kinds::FRIDGE)
    }

    pub fn object_ids(&self) -> impl Iterator<Item = &Sym> {
        self.objects.keys()
    }

    /// Objects whose type is `ty` or below it, in id order.
    pub fn instances_of<'a>(&'a self, ty: &'a str) -> impl Iterator<Item = &'a Sym> + 'a {
        let bit = kinds::bit(ty);
        self.objects
            .values()
            .filter(move |o| match bit {
                Some(b) => o.kinds & b != 0,
                None => self.tree.is_a(&o.ty, ty),
            })
            .map(|o| &o.id)
    }

    fn sym_of(&self, id: &str) -> Option<Sym> {
        self.objects
            .get_key_value(id)
            .map(|(k, _)| k.clone())
            .or_else(|| self.zones.get_key_value(id).map(|(k, _)| k.clone()))
            .or_else(|| self.agents.get(id).cloned())
    }

    /// Registry id symbol for any object, zone or agent.
    pub fn resolve(&self, id: &str) -> Result<Sym, WorldError> {
        self.sym_of(id).ok_or_else(|| WorldError::UnknownId(id.to_string()))
    }
}

/// Where a movable object currently is.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Location {
    Zone(Sym),
    In(Sym),
    Held(Sym),
}

/// Immutable world snapshot. Facts are closed-world: absent means false.
#[derive(Clone, Debug, PartialEq)]
pub struct WorldState {
    registry: Arc<Registry>,
    facts: BTreeSet<Literal>,
    poses: BTreeMap<Sym, Point>,
}

impl WorldState {
    /// Assembles a snapshot and validates every invariant.
    pub fn new(registry: Arc<Registry>, facts: BTreeSet<Literal>) -> Result<Self, WorldError> {
        let s = WorldState {
            registry,
            facts,
            poses: BTreeMap::new(),
        };
        s.check_invariants()?;
        Ok(s)
    }

    pub fn registry(&self) -> &Registry {
        &self.registry
    }

    pub fn registry_arc(&self) -> &Arc<Registry> {
        &self.registry
    }

    pub fn tree(&self) -> &TypeTree {
        &self.registry.tree
    }

    pub fn facts(&self) -> &BTreeSet<Literal> {
        &self.facts
    }

    pub fn holds(&self, lit: &Literal) -> bool {
        self.facts.contains(lit)
    }

    pub fn holds_all<'a>(&self, lits: impl IntoIterator<Item = &'a Literal>) -> bool {
        lits.into_iter().all(|l| self.facts.contains(l))
    }

    pub fn poses(&self) -> &BTreeMap<Sym, Point> {
        &self.poses
    }

    /// Returns a copy with `facts` replaced. Pose overrides of objects that
    /// are no longer at the same zone are dropped.
    pub fn with_facts(&self, facts: BTreeSet<Literal>) -> WorldState {
        let mut poses = self.poses.clone();
        poses.retain(|id, _| {
            let old = self.location(id);
            let new = location_in(&facts, id);
            old == new && matches!(new, Some(Location::Zone(_)))
        });
        WorldState {
            registry: self.registry.clone(),
            facts,
            poses,
        }
    }

    pub fn with_pose(&self, id: &Sym, p: Point) -> WorldState {
        let mut s = self.clone();
        s.poses.insert(id.clone(), p);
        s
    }

    pub fn same_registry(&self, other: &WorldState) -> bool {
        Arc::ptr_eq(&self.registry, &other.registry) || *self.registry == *other.registry
    }

    pub fn location(&self, id: &str) -> Option<Location> {
        location_in(&self.facts, id)
    }

    pub fn held_by(&self, agent: &str) -> Option<&Sym> {
        self.facts
            .iter()
            .find(|l| l.pred == Pred::Holding && l.args[0] == *agent)
            .map(|l| &l.args[1])
    }

    pub fn holder_of(&self, id: &str) -> Option<&Sym> {
        self.facts
            .iter()
            .find(|l| l.pred == Pred::Holding && l.args[1] == *id)
            .map(|l| &l.args[0])
    }

    /// Direct contents of a container, in id order.
    pub fn contents(&self, container: &str) -> Vec<Sym> {
        self.facts
            .iter()
            .filter(|l| l.pred == Pred::In && l.args[1] == *container)
            .map(|l| l.args[0].clone())
            .collect()
    }

    /// Transitive contents, in discovery order (breadth first, id order per level).
    pub fn contents_deep(&self, container: &str) -> Vec<Sym> {
        let mut out: Vec<Sym> = Vec::new();
        let mut frontier = self.contents(container);
        while !frontier.is_empty() {
            let mut next = Vec::new();
            for x in frontier {
                if out.contains(&x) {
                    continue;
                }
                next.extend(self.contents(&x));
                out.push(x);
            }
            frontier = next;
        }
        out
    }

    /// True if `inner` is (transitively) inside `outer`.
    pub fn is_within(&self, inner: &str, outer: &str) -> bool {
        let mut cur = Sym::new(inner);
        let mut guard = 0;
        while let Some(Location::In(c)) = location_ref(&self.facts, &cur) {
            if c == outer {
                return true;
            }
            cur = c;
            guard += 1;
            if guard > self.registry.objects.len() {
                return false;
            }
        }
        false
    }

    pub fn temp(&self, id: &str) -> Option<TempValue> {
        self.facts
            .iter()
            .find(|l| l.pred == Pred::Temp && l.args[0] == *id)
            .and_then(|l| TempValue::from_name(&l.args[1]))
    }

    pub fn is_open(&self, id: &Sym) -> bool {
        self.facts.contains(&Literal::open(id))
    }

    pub fn is_powered(&self, id: &Sym) -> bool {
        self.facts.contains(&Literal::powered(id))
    }

    /// Planar position: explicit override, else the zone's position; objects
    /// inside containers take the outermost container's position. Held objects
    /// have none.
    pub fn pose(&self, id: &str) -> Option<Point> {
        if let Some(p) = self.poses.get(id) {
            return Some(*p);
        }
        match self.location(id)? {
            Location::Zone(z) => self.registry.zones.get(&z).copied(),
            Location::In(c) => {
                if self.is_within(&c, id) {
                    None
                } else {
                    self.pose(&c)
                }
            }
            Location::Held(_) => None,
        }
    }

    /// Drops an object, its transitive contents and every fact mentioning them.
    pub fn remove_object(&self, id: &str) -> Result<WorldState, WorldError> {
        if !self.registry.is_object(id) {
            return Err(WorldError::UnknownId(id.to_string()));
        }
        let mut gone: BTreeSet<Sym> = self.contents_deep(id).into_iter().collect();
        gone.insert(self.registry.resolve(id)?);
        let mut reg = (*self.registry).clone();
        reg.objects.retain(|k, _| !gone.contains(k));
        let facts = self
            .facts
            .iter()
            .filter(|l| !l.args.iter().any(|a| gone.contains(a)))
            .cloned()
            .collect();
        let mut poses = self.poses.clone();
        poses.retain(|k, _| !gone.contains(k));
        let s = WorldState {
            registry: Arc::new(reg),
            facts,
            poses,
        };
        s.check_invariants()?;
        Ok(s)
    }

    /// Validates typing, functionality and capacity of the fact set.
    pub fn check_invariants(&self) -> Result<(), WorldError> {
        let reg = &*self.registry;
        let mut located: BTreeMap<&Sym, usize> = BTreeMap::new();
        let mut temps: BTreeMap<&Sym, usize> = BTreeMap::new();
        let mut holds: BTreeMap<&Sym, usize> = BTreeMap::new();
        let mut counts: BTreeMap<&Sym, usize> = BTreeMap::new();
        // first location fact per thing, as `location` would find it
        let mut first_loc: BTreeMap<&Sym, (Pred, &Sym)> = BTreeMap::new();
        for l in &self.facts {
            l.check_shape()?;
            let bad = |reason| WorldError::InvalidFact {
                literal: l.to_string(),
                reason,
            };
            let a0 = &l.args[0];
            match l.pred {
                Pred::At | Pred::In => {
                    first_loc.entry(a0).or_insert((l.pred, &l.args[1]));
                }
                Pred::Holding => {
                    first_loc.entry(&l.args[1]).or_insert((l.pred, a0));
                }
                _ => {}
            }
            match l.pred {
                Pred::At => {
                    if !reg.is_object(a0) {
                        return Err(bad("subject is not an object"));
                    }
                    if !reg.is_zone(&l.args[1]) {
                        return Err(bad("target is not a zone"));
                    }
                    if reg.is_liquid(a0) {
                        return Err(bad("liquids must be inside a container"));
                    }
                    *located.entry(a0).or_default() += 1;
                }
                Pred::In => {
                    let c = &l.args[1];
                    if !reg.is_object(a0) || !reg.is_object(c) {
                        return Err(bad("arguments must be objects"));
                    }
                    if !reg.is_container(c) {
                        return Err(bad("target has no capacity"));
                    }
                    if a0 == c {
                        return Err(bad("object inside itself"));
                    }
                    *located.entry(a0).or_default() += 1;
                    *counts.entry(c).or_default() += 1;
                }
                Pred::Holding => {
                    if !reg.is_agent(a0) {
                        return Err(bad("holder is not an agent"));
                    }
                    let o = &l.args[1];
                    if !reg.is_movable(o) || reg.is_liquid(o) {
                        return Err(bad("held thing is not a movable solid object"));
                    }
                    *located.entry(o).or_default() += 1;
                    *holds.entry(a0).or_default() += 1;
                }
                Pred::Open | Pred::Powered => {
                    if !reg.is_device(a0) {
                        return Err(bad("only devices can be open or powered"));
                    }
                }
                Pred::Temp => {
                    if !reg.is_object(a0) {
                        return Err(bad("subject is not an object"));
                    }
                    *temps.entry(a0).or_default() += 1;
                }
                Pred::Toasted | Pred::Brewed => {
                    if !reg.is_object(a0) {
                        return Err(bad("subject is not an object"));
                    }
                }
            }
        }
        for id in reg.objects.keys() {
            let n = located.get(id).copied().unwrap_or(0);
            if n > 1 {
                return Err(WorldError::FunctionalViolation {
                    object: id.to_string(),
                    detail: "more than one location",
                });
            }
            if n == 0 && reg.is_movable(id) {
                return Err(WorldError::FunctionalViolation {
                    object: id.to_string(),
                    detail: "movable object has no location",
                });
            }
            if temps.get(id).copied().unwrap_or(0) != 1 {
                return Err(WorldError::FunctionalViolation {
                    object: id.to_string(),
                    detail: "needs exactly one temperature",
                });
            }
            if cycles_back(&first_loc, id, reg.objects.len()) {
                return Err(WorldError::FunctionalViolation {
                    object: id.to_string(),
                    detail: "containment cycle",
                });
            }
        }
        for (a, n) in holds {
            if n > 1 {
                return Err(WorldError::FunctionalViolation {
                    object: a.to_string(),
                    detail: "agent holds more than one object",
                });
            }
        }
        for (c, n) in counts {
            let cap = reg.capacity(c).unwrap_or(0);
            if n > cap as usize {
                return Err(WorldError::CapacityExceeded {
                    container: c.to_string(),
                    count: n,
                    capacity: cap,
                });
            }
        }
        Ok(())
    }
}

fn location_ref(facts: &BTreeSet<Literal>, id: &str) -> Option<Location> {
    facts.iter().find_map(|l| match l.pred {
        Pred::At if l.args[0] == *id => Some(Location::Zone(l.args[1].clone())),
        Pred::In if l.args[0] == *id => Some(Location::In(l.args[1].clone())),
        Pred::Holding if l.args[1] == *id => Some(Location::Held(l.args[0].clone())),
        _ => None,
    })
}

/// Whether following containment up from `id` comes back to it.
fn cycles_back(first_loc: &BTreeMap<&Sym, (Pred, &Sym)>, id: &Sym, limit: usize) -> bool {
    let mut cur = id;
    for _ in 0..=limit {
        match first_loc.get(cur) {
            Some((Pred::In, c)) if *c == id => return true,
            Some((Pred::In, c)) => cur = c,
            _ => return false,
        }
    }
    false
}

fn location_in(facts: &BTreeSet<Literal>, id: &str) -> Option<Location> {
    location_ref(facts, id)
}

/// Added and removed facts between two snapshots of the same registry.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct FactDiff {
    pub added: BTreeSet<Literal>,
    pub removed: BTreeSet<Literal>,
}

impl FactDiff {
    pub fn is_empty(&self) -> bool {
        self.added.is_empty() && self.removed.is_empty()
    }
}

pub fn diff_states(before: &WorldState, after: &WorldState) -> Result<FactDiff, WorldError> {
    if !before.same_registry(after) {
        return Err(WorldError::RegistryMismatch);
    }
    Ok(FactDiff {
        added: after.facts.difference(&before.facts).cloned().collect(),
        removed: before.facts.difference(&after.facts).cloned().collect(),
    })
}

/// Incremental construction of a registry plus initial facts.
#[derive(Debug, Clone, Default)]
pub struct WorldBuilder {
    tree: TypeTree,
    objects: BTreeMap<Sym, ObjectInstance>,
    agents: BTreeSet<Sym>,
    zones: BTreeMap<Sym, Point>,
    facts: BTreeSet<Literal>,
    ids: BTreeSet<String>,
}

impl WorldBuilder {
    pub fn new(tree: TypeTree) -> Self {
        WorldBuilder {
            tree,
            ..Default::default()
        }
    }

    fn claim(&mut self, id: &str) -> Result<(), WorldError> {
        if !self.ids.insert(id.to_string()) {
            return Err(WorldError::DuplicateId(id.to_string()));
        }
        Ok(())
    }

    pub fn object(mut self, id: &str, ty: &str, capacity: Option<u32>) -> Result<Self, WorldError> {
        self.claim(id)?;
        let ty = self.tree.sym(ty).ok_or_else(|| WorldError::UnknownType {
            id: id.to_string(),
            ty: ty.to_string(),
        })?;
        let id = Sym::new(id);
        let kinds = kinds::mask(&self.tree, &ty);
        self.objects.insert(id.clone(), ObjectInstance { id, ty, capacity, kinds });
        Ok(self)
    }

    pub fn agent(mut self, id: &str) -> Result<Self, WorldError> {
        self.claim(id)?;
        self.agents.insert(Sym::new(id));
        Ok(self)
    }

    pub fn zone(mut self, id: &str, at: Point) -> Result<Self, WorldError> {
        self.claim(id)?;
        self.zones.insert(Sym::new(id), at);
        Ok(self)
    }

    pub fn fact(mut self, lit: Literal) -> Result<Self, WorldError> {
        lit.check_shape()?;
        self.facts.insert(lit);
        Ok(self)
    }

    pub fn fact_str(self, lit: &str) -> Result<Self, WorldError> {
        let lit: Literal = lit.parse()?;
        self.fact(lit)
    }

    /// Objects without a temperature fact start at ambient.
    pub fn build(self) -> Result<WorldState, WorldError> {
        let WorldBuilder {
            tree,
            objects,
            agents,
            zones,
            mut facts,
            ..
        } = self;
        let registry = Registry {
            tree: Arc::new(tree),
            objects,
            agents,
            zones,
        };
        // canonicalise ids to the registry's symbols
        let mut canon = BTreeSet::new();
        for l in facts.iter() {
            let mut args = l.args.clone();
            for a in args.iter_mut() {
                if let Some(s) = registry.sym_of(a) {
                    *a = s;
                } else if !(l.pred == Pred::Temp && TempValue::from_name(a).is_some()) {
                    return Err(WorldError::UnknownId(a.to_string()));
                }
            }
            canon.insert(Literal { pred: l.pred, args });
        }
        facts = canon;
        for id in registry.objects.keys() {
            if !facts.iter().any(|l| l.pred == Pred::Temp && l.args[0] == *id) {
                facts.insert(Literal::temp(id, TempValue::Ambient));
            }
        }
        WorldState::new(Arc::new(registry), facts)
    }
}
