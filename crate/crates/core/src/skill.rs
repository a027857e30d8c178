//! Skill induction from episodes, type generalization and the knowledge base.
//!
//! A skill is a lifted STRIPS operator. Induction keeps every fact about the
//! objects a demonstration touched: facts true before become preconditions,
//! the before/after difference becomes the add and delete lists. Each touched
//! object and each zone those facts mention is replaced by a typed variable.
//!
//! Generalization merges two skills whose effects are identical up to a
//! renaming of parameters. Parameter types move up to their least common
//! ancestor, admissible types are unioned and preconditions intersected.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use crate::episodic::{involved_objects, Episode};
use crate::operator::{GroundOperator, Origin};
use crate::sym::Sym;
use crate::world::{diff_states, LiftedLiteral, Literal, Pred, Term, TypeTree, WorldState};

/// Pseudo-type of zone parameters; zones are not part of the object tree.
pub const ZONE_TYPE: &str = "zone";

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SkillError {
    #[error("episode `{0}` changed nothing about the objects it touched")]
    DegenerateEpisode(String),
    #[error("skill `{skill}` is malformed: {reason}")]
    Malformed { skill: String, reason: String },
    #[error("unknown skill `{0}`")]
    UnknownSkill(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Param {
    pub var: Sym,
    /// Declared type: the least common ancestor of everything admitted.
    pub ty: Sym,
}

impl Param {
    pub fn is_zone(&self) -> bool {
        self.ty == ZONE_TYPE
    }
}

/// Admissible object types of one parameter.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TypeConstraint {
    pub allowed: BTreeSet<Sym>,
    pub excluded: BTreeSet<Sym>,
    /// Types actually seen in demonstrations.
    pub evidenced: BTreeSet<Sym>,
}

impl TypeConstraint {
    fn single(ty: &Sym) -> Self {
        let one: BTreeSet<Sym> = [ty.clone()].into_iter().collect();
        TypeConstraint {
            allowed: one.clone(),
            excluded: BTreeSet::new(),
            evidenced: one,
        }
    }

    /// Descendant-or-equal of an allowed type and of no excluded type.
    pub fn admits(&self, tree: &TypeTree, ty: &str) -> bool {
        self.allowed.iter().any(|a| tree.is_a(ty, a)) && !self.excluded.iter().any(|e| tree.is_a(ty, e))
    }

    /// True if `ty` lies inside the allowed set's subtrees.
    pub fn covers(&self, tree: &TypeTree, ty: &str) -> bool {
        self.allowed.iter().any(|a| tree.is_a(ty, a))
    }

    /// Drops allowed entries already implied by an ancestor in the set.
    pub(crate) fn normalize(&mut self, tree: &TypeTree) {
        let all = self.allowed.clone();
        self.allowed
            .retain(|t| !all.iter().any(|o| o != t && tree.is_a(t, o)));
        let allowed = &self.allowed;
        self.excluded.retain(|e| !allowed.contains(e));
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SkillSchema {
    pub name: Sym,
    pub params: Vec<Param>,
    pub preconds: BTreeSet<LiftedLiteral>,
    pub adds: BTreeSet<LiftedLiteral>,
    pub dels: BTreeSet<LiftedLiteral>,
    pub evidence: BTreeSet<Sym>,
    pub constraints: Vec<TypeConstraint>,
}

impl SkillSchema {
    pub fn param_index(&self, var: &str) -> Option<usize> {
        self.params.iter().position(|p| p.var == *var)
    }

    /// First word of the name, used as the verb in questions.
    pub fn verb(&self) -> &str {
        self.name.split_whitespace().next().unwrap_or(&self.name)
    }

    /// Checks the schema invariants against a type tree.
    pub fn validate(&self, tree: &TypeTree) -> Result<(), SkillError> {
        let bad = |reason: String| SkillError::Malformed {
            skill: self.name.to_string(),
            reason,
        };
        if self.constraints.len() != self.params.len() {
            return Err(bad("one constraint per parameter required".into()));
        }
        let vars: BTreeSet<&Sym> = self.params.iter().map(|p| &p.var).collect();
        if vars.len() != self.params.len() {
            return Err(bad("duplicate parameter".into()));
        }
        for l in self.preconds.iter().chain(&self.adds).chain(&self.dels) {
            if let Some(v) = l.vars().find(|v| !vars.contains(v)) {
                return Err(bad(format!("variable ?{v} is not a parameter")));
            }
        }
        if let Some(l) = self.adds.intersection(&self.dels).next() {
            return Err(bad(format!("{l} both added and deleted")));
        }
        for (p, c) in self.params.iter().zip(&self.constraints) {
            if !p.is_zone() && !tree.contains(&p.ty) {
                return Err(bad(format!("unknown type {}", p.ty)));
            }
            for t in c.allowed.iter().chain(&c.excluded).chain(&c.evidenced) {
                if !(p.is_zone() && t == ZONE_TYPE) && !tree.contains(t) {
                    return Err(bad(format!("unknown type {t}")));
                }
            }
            if let Some(t) = c.allowed.intersection(&c.excluded).next() {
                return Err(bad(format!("type {t} both allowed and excluded")));
            }
            if let Some(t) = c.evidenced.iter().find(|t| !(p.is_zone() || c.covers(tree, t))) {
                return Err(bad(format!("evidenced type {t} not allowed")));
            }
        }
        Ok(())
    }

    pub(crate) fn ground_with(&self, binding: &[Sym]) -> GroundOperator {
        let lookup = |v: &Sym| self.param_index(v).map(|i| binding[i].clone());
        let g = |set: &BTreeSet<LiftedLiteral>| -> BTreeSet<Literal> {
            set.iter().map(|l| l.ground(lookup).expect("validated schema")).collect()
        };
        GroundOperator {
            name: self.name.clone(),
            args: binding.to_vec(),
            preconds: g(&self.preconds),
            adds: g(&self.adds),
            dels: g(&self.dels),
            cost: 1,
            origin: Origin::LearnedSkill,
        }
    }
}

impl fmt::Display for SkillSchema {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "skill \"{}\"(", self.name)?;
        for (i, p) in self.params.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "?{}: {}", p.var, p.ty)?;
        }
        f.write_str(")\n")?;
        for (p, c) in self.params.iter().zip(&self.constraints) {
            if p.is_zone() {
                continue;
            }
            write!(f, "  ?{} allows {}", p.var, join(&c.allowed))?;
            if !c.excluded.is_empty() {
                write!(f, " except {}", join(&c.excluded))?;
            }
            f.write_str("\n")?;
        }
        for (tag, set) in [("pre", &self.preconds), ("add", &self.adds), ("del", &self.dels)] {
            write!(f, "  {tag}: ")?;
            for (i, l) in set.iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                write!(f, "{l}")?;
            }
            f.write_str("\n")?;
        }
        write!(f, "  evidence: {}", join(&self.evidence))
    }
}

fn join(set: &BTreeSet<Sym>) -> String {
    let v: Vec<&str> = set.iter().map(|s| s.as_str()).collect();
    v.join(", ")
}

/// Whether a ground fact is about the given objects only: every object
/// argument is in `scope`, agents never appear. Zones and temperature
/// values are free.
fn in_scope(state: &WorldState, scope: &BTreeSet<Sym>, l: &Literal) -> bool {
    let reg = state.registry();
    let mut mentions_object = false;
    for (i, a) in l.args.iter().enumerate() {
        if l.pred == Pred::Temp && i == 1 {
            continue;
        }
        if reg.is_object(a) {
            if !scope.contains(a) {
                return false;
            }
            mentions_object = true;
        } else if !reg.is_zone(a) {
            return false;
        }
    }
    mentions_object
}

fn restrict(state: &WorldState, scope: &BTreeSet<Sym>, facts: &BTreeSet<Literal>) -> BTreeSet<Literal> {
    facts.iter().filter(|l| in_scope(state, scope, l)).cloned().collect()
}

/// Lifts an episode into a skill schema.
pub fn induce_skill(episode: &Episode, tree: &TypeTree) -> Result<SkillSchema, SkillError> {
    let degenerate = || SkillError::DegenerateEpisode(episode.id.to_string());
    if episode.is_empty() {
        return Err(degenerate());
    }
    let scope = involved_objects(episode);
    let before = &episode.before;
    let diff = diff_states(before, &episode.after).map_err(|_| degenerate())?;
    let pre = restrict(before, &scope, before.facts());
    let adds = restrict(before, &scope, &diff.added);
    let dels = restrict(before, &scope, &diff.removed);
    if adds.is_empty() && dels.is_empty() {
        return Err(degenerate());
    }

    let reg = before.registry();
    let zones: BTreeSet<Sym> = pre
        .iter()
        .chain(&adds)
        .chain(&dels)
        .flat_map(|l| l.args.iter())
        .filter(|a| reg.is_zone(a))
        .cloned()
        .collect();

    let mut params = Vec::new();
    let mut constraints = Vec::new();
    let mut var_of: BTreeMap<Sym, Sym> = BTreeMap::new();
    let mut used: BTreeMap<String, usize> = BTreeMap::new();
    let mut fresh = |base: &str| -> Sym {
        let n = used.entry(base.to_string()).or_insert(0);
        *n += 1;
        if *n == 1 {
            Sym::new(base)
        } else {
            Sym::from(format!("{base}{n}"))
        }
    };
    for id in &scope {
        let ty = reg.type_of(id).expect("involved ids are objects").clone();
        let ty = tree.sym(&ty).unwrap_or(ty);
        let var = fresh(&ty);
        var_of.insert(id.clone(), var.clone());
        constraints.push(TypeConstraint::single(&ty));
        params.push(Param { var, ty });
    }
    for z in &zones {
        let var = fresh(ZONE_TYPE);
        var_of.insert(z.clone(), var.clone());
        constraints.push(TypeConstraint::single(&Sym::new(ZONE_TYPE)));
        params.push(Param {
            var,
            ty: Sym::new(ZONE_TYPE),
        });
    }

    let lift = |set: &BTreeSet<Literal>| -> BTreeSet<LiftedLiteral> {
        set.iter()
            .map(|l| {
                l.map(|a| match var_of.get(a) {
                    Some(v) => Term::Var(v.clone()),
                    None => Term::Const(a.clone()),
                })
            })
            .collect()
    };
    let name = match &episode.label {
        Some(l) if !l.trim().is_empty() => Sym::new(l.trim()),
        _ => Sym::from(format!("skill {}", episode.id)),
    };
    let schema = SkillSchema {
        name,
        params,
        preconds: lift(&pre),
        adds: lift(&adds),
        dels: lift(&dels),
        evidence: [episode.id.clone()].into_iter().collect(),
        constraints,
    };
    debug_assert!(schema.validate(tree).is_ok());
    Ok(schema)
}

/// Calls `f` for each injective, type-admissible binding, in lexicographic
/// order of the candidate lists.
fn for_each_binding(
    schema: &SkillSchema,
    state: &WorldState,
    objects: &[Sym],
    mut f: impl FnMut(&[Sym]),
) {
    let reg = state.registry();
    let tree = state.tree();
    let domains: Vec<Vec<Sym>> = schema
        .params
        .iter()
        .zip(&schema.constraints)
        .map(|(p, c)| {
            if p.is_zone() {
                reg.zones.keys().cloned().collect()
            } else {
                objects
                    .iter()
                    .filter(|o| reg.type_of(o).is_some_and(|t| c.admits(tree, t)))
                    .cloned()
                    .collect()
            }
        })
        .collect();
    let mut current: Vec<Sym> = Vec::with_capacity(domains.len());
    fn rec(domains: &[Vec<Sym>], current: &mut Vec<Sym>, f: &mut dyn FnMut(&[Sym])) {
        let i = current.len();
        if i == domains.len() {
            f(current);
            return;
        }
        for cand in &domains[i] {
            if current.contains(cand) {
                continue;
            }
            current.push(cand.clone());
            rec(domains, current, f);
            current.pop();
        }
    }
    rec(&domains, &mut current, &mut f);
}

/// One ground operator per type-correct injective tuple of present objects.
pub fn ground_skill(schema: &SkillSchema, state: &WorldState) -> Vec<GroundOperator> {
    let objects: Vec<Sym> = state.registry().object_ids().cloned().collect();
    let mut out = Vec::new();
    for_each_binding(schema, state, &objects, |b| out.push(schema.ground_with(b)));
    out
}

/// Soundness oracle: some binding over the episode's own objects makes the
/// schema applicable in `before` and reproduces `after` on those objects.
pub fn replay_check(schema: &SkillSchema, episode: &Episode) -> bool {
    let scope = involved_objects(episode);
    let before = &episode.before;
    let objects: Vec<Sym> = scope.iter().cloned().collect();
    let want = restrict(before, &scope, episode.after.facts());
    let mut ok = false;
    for_each_binding(schema, before, &objects, |b| {
        if ok {
            return;
        }
        let op = schema.ground_with(b);
        if let Ok(next) = op.apply(before) {
            if restrict(before, &scope, next.facts()) == want {
                ok = true;
            }
        }
    });
    ok
}

/// Flat set of skill schemas plus the type tree they are typed against.
#[derive(Clone, Debug, PartialEq)]
pub struct KnowledgeBase {
    tree: Arc<TypeTree>,
    schemas: BTreeMap<Sym, SkillSchema>,
}

impl KnowledgeBase {
    pub fn new(tree: Arc<TypeTree>) -> Self {
        KnowledgeBase {
            tree,
            schemas: BTreeMap::new(),
        }
    }

    pub fn tree(&self) -> &TypeTree {
        &self.tree
    }

    pub fn tree_arc(&self) -> &Arc<TypeTree> {
        &self.tree
    }

    pub fn len(&self) -> usize {
        self.schemas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.schemas.is_empty()
    }

    pub fn get(&self, name: &str) -> Option<&SkillSchema> {
        self.schemas.get(name)
    }

    /// Schemas in name order.
    pub fn schemas(&self) -> impl Iterator<Item = &SkillSchema> {
        self.schemas.values()
    }

    pub fn names(&self) -> impl Iterator<Item = &Sym> {
        self.schemas.keys()
    }

    /// Adds a schema, suffixing the name with ` (n)` if it is taken.
    /// Returns the stored name.
    pub fn insert(&mut self, mut schema: SkillSchema) -> Result<Sym, SkillError> {
        schema.validate(&self.tree)?;
        if self.schemas.contains_key(&schema.name) {
            let base = schema.name.clone();
            let mut n = 2;
            while self.schemas.contains_key(format!("{base} ({n})").as_str()) {
                n += 1;
            }
            schema.name = Sym::from(format!("{base} ({n})"));
        }
        let name = schema.name.clone();
        self.schemas.insert(name.clone(), schema);
        Ok(name)
    }

    /// Replaces an existing schema of the same name.
    pub fn replace(&mut self, schema: SkillSchema) -> Result<(), SkillError> {
        schema.validate(&self.tree)?;
        if !self.schemas.contains_key(&schema.name) {
            return Err(SkillError::UnknownSkill(schema.name.to_string()));
        }
        self.schemas.insert(schema.name.clone(), schema);
        Ok(())
    }

    pub fn remove(&mut self, name: &str) -> Option<SkillSchema> {
        self.schemas.remove(name)
    }

    /// Groundings of every schema, in schema-name order.
    pub fn ground_all(&self, state: &WorldState) -> Vec<GroundOperator> {
        self.schemas.values().flat_map(|s| ground_skill(s, state)).collect()
    }

    /// Human-readable dump, one block per schema in name order.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for s in self.schemas.values() {
            out.push_str(&s.to_string());
            out.push_str("\n\n");
        }
        out
    }
}

/// For each of `a`'s params, the index of the matching `b` param, such that
/// renaming `b` this way makes the effect sets identical. First match in
/// lexicographic permutation order.
pub fn effect_isomorphism(a: &SkillSchema, b: &SkillSchema) -> Option<Vec<usize>> {
    if a.params.len() != b.params.len() || a.adds.len() != b.adds.len() || a.dels.len() != b.dels.len() {
        return None;
    }
    let sig = |s: &BTreeSet<LiftedLiteral>| -> BTreeMap<(Pred, usize), usize> {
        let mut m = BTreeMap::new();
        for l in s {
            *m.entry((l.pred, l.args.len())).or_insert(0) += 1;
        }
        m
    };
    if sig(&a.adds) != sig(&b.adds) || sig(&a.dels) != sig(&b.dels) {
        return None;
    }
    let n = a.params.len();
    let mut perm: Vec<usize> = Vec::with_capacity(n);
    let mut used = alloc::vec![false; n];
    fn rec(
        a: &SkillSchema,
        b: &SkillSchema,
        perm: &mut Vec<usize>,
        used: &mut [bool],
    ) -> bool {
        let k = perm.len();
        if k == a.params.len() {
            return effects_match(a, b, perm);
        }
        for j in 0..b.params.len() {
            if used[j] || a.params[k].is_zone() != b.params[j].is_zone() {
                continue;
            }
            used[j] = true;
            perm.push(j);
            if rec(a, b, perm, used) {
                return true;
            }
            perm.pop();
            used[j] = false;
        }
        false
    }
    rec(a, b, &mut perm, &mut used).then_some(perm)
}

fn rename_b(a: &SkillSchema, b: &SkillSchema, perm: &[usize], set: &BTreeSet<LiftedLiteral>) -> BTreeSet<LiftedLiteral> {
    let mut to_a: BTreeMap<&Sym, &Sym> = BTreeMap::new();
    for (k, &j) in perm.iter().enumerate() {
        to_a.insert(&b.params[j].var, &a.params[k].var);
    }
    set.iter()
        .map(|l| {
            l.map(|t| match t {
                Term::Var(v) => Term::Var(to_a[v].clone()),
                c => c.clone(),
            })
        })
        .collect()
}

fn effects_match(a: &SkillSchema, b: &SkillSchema, perm: &[usize]) -> bool {
    rename_b(a, b, perm, &b.adds) == a.adds && rename_b(a, b, perm, &b.dels) == a.dels
}

fn merge(a: &SkillSchema, b: &SkillSchema, perm: &[usize], tree: &TypeTree) -> SkillSchema {
    let mut params = Vec::with_capacity(a.params.len());
    let mut constraints = Vec::with_capacity(a.params.len());
    for (k, &j) in perm.iter().enumerate() {
        let (pa, pb) = (&a.params[k], &b.params[j]);
        let ty = if pa.is_zone() {
            pa.ty.clone()
        } else {
            tree.lca(&pa.ty, &pb.ty).unwrap_or_else(|| Sym::new(crate::world::ROOT_TYPE))
        };
        params.push(Param {
            var: pa.var.clone(),
            ty,
        });
        let (ca, cb) = (&a.constraints[k], &b.constraints[j]);
        let mut c = TypeConstraint {
            allowed: ca.allowed.union(&cb.allowed).cloned().collect(),
            excluded: ca.excluded.union(&cb.excluded).cloned().collect(),
            evidenced: ca.evidenced.union(&cb.evidenced).cloned().collect(),
        };
        if !pa.is_zone() {
            c.normalize(tree);
        }
        constraints.push(c);
    }
    let b_pre = rename_b(a, b, perm, &b.preconds);
    SkillSchema {
        name: a.name.clone(),
        params,
        preconds: a.preconds.intersection(&b_pre).cloned().collect(),
        adds: a.adds.clone(),
        dels: a.dels.clone(),
        evidence: a.evidence.union(&b.evidence).cloned().collect(),
        constraints,
    }
}

/// Merges effect-isomorphic schemas until none remain; pairs are considered
/// in lexicographic name order.
pub fn generalize(kb: &KnowledgeBase) -> KnowledgeBase {
    let mut out = kb.clone();
    'outer: loop {
        let names: Vec<Sym> = out.schemas.keys().cloned().collect();
        for i in 0..names.len() {
            for j in i + 1..names.len() {
                let (a, b) = (&out.schemas[&names[i]], &out.schemas[&names[j]]);
                if let Some(perm) = effect_isomorphism(a, b) {
                    let merged = merge(a, b, &perm, &out.tree);
                    out.schemas.remove(&names[j]);
                    out.schemas.insert(merged.name.clone(), merged);
                    continue 'outer;
                }
            }
        }
        break;
    }
    out
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::episodic::EpisodicMemory;
    use crate::world::{fixtures, PrimitiveAction, Point, WorldBuilder};

    pub(crate) fn record(state: &WorldState, label: &str, actions: &[PrimitiveAction]) -> Episode {
        let mut m = EpisodicMemory::new();
        m.begin(state).unwrap();
        for a in actions {
            m.record(a).unwrap();
        }
        m.end(label).unwrap()
    }

    pub(crate) fn toast_episode() -> Episode {
        record(
            &fixtures::kitchen_min(),
            "toast bread",
            &[
                PrimitiveAction::pick("human", "bread1"),
                PrimitiveAction::place("human", "bread1", "toaster1"),
                PrimitiveAction::press("human", "toaster1"),
            ],
        )
    }

    /// A liquid in a cup heated in the microwave, with siblings present.
    pub(crate) fn heat_world(liquid: &str, other: &str) -> WorldState {
        WorldBuilder::new(fixtures::kitchen_tree())
            .agent("human")
            .and_then(|b| b.zone("counter", Point::new(0.0, 0.0)))
            .and_then(|b| b.object("cup1", "cup", Some(1)))
            .and_then(|b| b.object("cup2", "cup", Some(1)))
            .and_then(|b| b.object(&format!("{liquid}1"), liquid, None))
            .and_then(|b| b.object(&format!("{other}1"), other, None))
            .and_then(|b| b.object("microwave1", "microwave", Some(1)))
            .and_then(|b| b.fact_str("at(cup1, counter)"))
            .and_then(|b| b.fact_str("at(cup2, counter)"))
            .and_then(|b| b.fact_str("at(microwave1, counter)"))
            .and_then(|b| b.fact_str(&format!("in({liquid}1, cup1)")))
            .and_then(|b| b.fact_str(&format!("in({other}1, cup2)")))
            .and_then(WorldBuilder::build)
            .unwrap()
    }

    pub(crate) fn heat_actions() -> Vec<PrimitiveAction> {
        alloc::vec![
            PrimitiveAction::open("human", "microwave1"),
            PrimitiveAction::pick("human", "cup1"),
            PrimitiveAction::place("human", "cup1", "microwave1"),
            PrimitiveAction::close("human", "microwave1"),
            PrimitiveAction::press("human", "microwave1"),
        ]
    }

    fn lifted(s: &str) -> LiftedLiteral {
        s.parse().unwrap()
    }

    #[test]
    fn induce_toast() {
        let ep = toast_episode();
        let s = induce_skill(&ep, &fixtures::kitchen_tree()).unwrap();
        assert_eq!(s.name, "toast bread");
        let vars: Vec<(&str, &str)> = s.params.iter().map(|p| (p.var.as_str(), p.ty.as_str())).collect();
        assert_eq!(vars, [("bread", "bread"), ("toaster", "toaster"), ("zone", "zone")]);
        let adds: BTreeSet<_> = ["toasted(?bread)", "in(?bread, ?toaster)"].iter().map(|s| lifted(s)).collect();
        assert_eq!(s.adds, adds);
        assert_eq!(s.dels, [lifted("at(?bread, ?zone)")].into_iter().collect());
        assert!(s.preconds.contains(&lifted("at(?bread, ?zone)")));
        assert!(s.preconds.contains(&lifted("at(?toaster, ?zone)")));
        assert!(replay_check(&s, &ep));
    }

    #[test]
    fn induce_heat_milk() {
        let ep = record(&fixtures::kitchen_min(), "heat in microwave", &heat_actions_min());
        let s = induce_skill(&ep, &fixtures::kitchen_tree()).unwrap();
        assert!(s.adds.contains(&lifted("temp(?milk, hot)")));
        assert!(s.dels.contains(&lifted("temp(?milk, ambient)")));
        assert!(s.params.iter().any(|p| p.var == "microwave" && p.ty == "microwave"));
        assert!(replay_check(&s, &ep));
    }

    fn heat_actions_min() -> Vec<PrimitiveAction> {
        heat_actions()
    }

    #[test]
    fn empty_episode_is_degenerate() {
        let ep = record(&fixtures::kitchen_min(), "noop", &[]);
        assert!(matches!(
            induce_skill(&ep, &fixtures::kitchen_tree()),
            Err(SkillError::DegenerateEpisode(_))
        ));
        // a round trip with no net change is degenerate too
        let ep = record(
            &fixtures::kitchen_min(),
            "wiggle",
            &[
                PrimitiveAction::open("human", "microwave1"),
                PrimitiveAction::close("human", "microwave1"),
            ],
        );
        assert!(induce_skill(&ep, &fixtures::kitchen_tree()).is_err());
    }

    #[test]
    fn tampered_adds_fail_replay() {
        let ep = toast_episode();
        let mut s = induce_skill(&ep, &fixtures::kitchen_tree()).unwrap();
        s.adds.insert(lifted("brewed(?bread)"));
        assert!(!replay_check(&s, &ep));
    }

    fn heat_kb() -> (KnowledgeBase, Episode, Episode) {
        let tree = Arc::new(fixtures::kitchen_tree());
        let milk = record(&heat_world("milk", "water"), "heat milk", &heat_actions());
        let mut water = record(&heat_world("water", "milk"), "heat water", &heat_actions());
        water.id = Sym::new("ep2");
        let mut kb = KnowledgeBase::new(tree.clone());
        kb.insert(induce_skill(&milk, &tree).unwrap()).unwrap();
        kb.insert(induce_skill(&water, &tree).unwrap()).unwrap();
        (kb, milk, water)
    }

    #[test]
    fn generalize_milk_and_water() {
        let (kb, milk, water) = heat_kb();
        let g = generalize(&kb);
        assert_eq!(g.len(), 1);
        let s = g.get("heat milk").unwrap();
        let p = &s.params[s.param_index("milk").unwrap()];
        assert_eq!(p.ty, "liquid");
        assert_eq!(s.evidence.len(), 2);
        assert!(replay_check(s, &milk));
        assert!(replay_check(s, &water));
        assert!(s.validate(g.tree()).is_ok());
        assert_eq!(generalize(&g), g);
    }

    #[test]
    fn single_schema_and_non_isomorphic_untouched() {
        let tree = Arc::new(fixtures::kitchen_tree());
        let mut kb = KnowledgeBase::new(tree.clone());
        kb.insert(induce_skill(&toast_episode(), &tree).unwrap()).unwrap();
        assert_eq!(generalize(&kb), kb);
        let milk = record(&fixtures::kitchen_min(), "heat milk", &heat_actions());
        kb.insert(induce_skill(&milk, &tree).unwrap()).unwrap();
        assert_eq!(generalize(&kb).len(), 2);
    }

    #[test]
    fn grounding_counts() {
        let (kb, _, _) = heat_kb();
        let g = generalize(&kb);
        let s = g.get("heat milk").unwrap();
        // milk1 and water1, each with cup1 or cup2, one microwave, one zone
        let world = heat_world("milk", "water");
        let ops = ground_skill(s, &world);
        assert_eq!(ops.len(), 4);
        let liquids: BTreeSet<&str> = ops.iter().map(|o| o.args[s.param_index("milk").unwrap()].as_str()).collect();
        assert_eq!(liquids, ["milk1", "water1"].into_iter().collect());
    }

    #[test]
    fn grounding_respects_exclusion_and_absence() {
        let (kb, _, _) = heat_kb();
        let mut s = generalize(&kb).get("heat milk").unwrap().clone();
        let i = s.param_index("milk").unwrap();
        s.constraints[i].allowed = [Sym::new("liquid")].into_iter().collect();
        s.constraints[i].excluded = [Sym::new("juice")].into_iter().collect();
        let w = WorldBuilder::new(fixtures::kitchen_tree())
            .agent("human")
            .and_then(|b| b.zone("counter", Point::new(0.0, 0.0)))
            .and_then(|b| b.object("cup1", "cup", Some(1)))
            .and_then(|b| b.object("juice1", "juice", None))
            .and_then(|b| b.object("microwave1", "microwave", Some(1)))
            .and_then(|b| b.fact_str("at(cup1, counter)"))
            .and_then(|b| b.fact_str("at(microwave1, counter)"))
            .and_then(|b| b.fact_str("in(juice1, cup1)"))
            .and_then(WorldBuilder::build)
            .unwrap();
        assert!(ground_skill(&s, &w).is_empty());
        let no_mw = w.remove_object("microwave1").unwrap();
        s.constraints[i].excluded.clear();
        assert!(ground_skill(&s, &no_mw).is_empty());
        assert_eq!(ground_skill(&s, &w).len(), 1);
    }

    #[test]
    fn kb_insert_disambiguates() {
        let tree = Arc::new(fixtures::kitchen_tree());
        let mut kb = KnowledgeBase::new(tree.clone());
        let s = induce_skill(&toast_episode(), &tree).unwrap();
        assert_eq!(kb.insert(s.clone()).unwrap(), "toast bread");
        assert_eq!(kb.insert(s).unwrap(), "toast bread (2)");
        assert_eq!(generalize(&kb).len(), 1);
        assert!(kb.render().contains("skill \"toast bread\""));
    }
}
