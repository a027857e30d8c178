//! Curious questions: which sibling object types might a learned skill also
//! work on? Each hypothesis names one skill parameter and one candidate type.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::skill::{ground_skill, KnowledgeBase, SkillSchema, TypeConstraint};
use crate::sym::Sym;
use crate::world::{kinds, TypeTree, WorldState};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CuriosityError {
    #[error("hypothesis {0} was already answered")]
    AlreadyAnswered(String),
    #[error("no instance of `{0}` is present")]
    NoInstancePresent(String),
    #[error("unknown skill `{0}`")]
    UnknownSkill(String),
    #[error("skill `{skill}` has no parameter {index}")]
    UnknownParam { skill: String, index: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum HypothesisStatus {
    Open,
    Confirmed,
    Rejected,
}

#[derive(Clone, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Hypothesis {
    pub schema: Sym,
    pub param: usize,
    pub candidate: Sym,
    pub status: HypothesisStatus,
    /// New groundings a yes-answer would enable in the state it was scored on.
    pub score: u32,
}

impl Hypothesis {
    /// Stable textual id, e.g. `heat milk/0/water`.
    pub fn id(&self) -> String {
        format!("{}/{}/{}", self.schema, self.param, self.candidate)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct QuestionEvent {
    pub hypothesis: String,
    pub text: String,
    pub highlight: Vec<Sym>,
}

fn is_device_param(tree: &TypeTree, schema: &SkillSchema, i: usize) -> bool {
    tree.is_a(&schema.params[i].ty, kinds::DEVICE)
}

/// Parameters that questions may substitute: objects that are not devices.
fn askable(tree: &TypeTree, schema: &SkillSchema, i: usize) -> bool {
    !schema.params[i].is_zone() && !is_device_param(tree, schema, i)
}

fn excluded(tree: &TypeTree, c: &TypeConstraint, ty: &str) -> bool {
    c.excluded.iter().any(|e| tree.is_a(ty, e))
}

/// Open hypotheses in (schema, param, candidate) order.
pub fn generate_hypotheses(kb: &KnowledgeBase, state: &WorldState) -> Vec<Hypothesis> {
    let tree = kb.tree();
    let reg = state.registry();
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for schema in kb.schemas() {
        for (i, c) in schema.constraints.iter().enumerate() {
            if !askable(tree, schema, i) {
                continue;
            }
            for ev in &c.evidenced {
                for sib in tree.siblings(ev) {
                    if c.covers(tree, &sib) || excluded(tree, c, &sib) {
                        continue;
                    }
                    if reg.instances_of(&sib).next().is_none() {
                        continue;
                    }
                    if seen.insert((schema.name.clone(), i, sib.clone())) {
                        out.push(Hypothesis {
                            schema: schema.name.clone(),
                            param: i,
                            candidate: sib,
                            status: HypothesisStatus::Open,
                            score: 0,
                        });
                    }
                }
            }
        }
    }
    out
}

/// Adds `ty` to the allowed set and lifts to the parent while every child of
/// the parent is allowed.
fn confirm(tree: &TypeTree, c: &mut TypeConstraint, ty: &Sym) {
    c.allowed.insert(ty.clone());
    let mut cur = ty.clone();
    while let Some(parent) = tree.parent(&cur).cloned() {
        let kids = tree.children(&parent);
        if kids.iter().all(|k| c.allowed.contains(k)) {
            for k in &kids {
                c.allowed.remove(k);
            }
            c.allowed.insert(parent.clone());
            cur = parent;
        } else {
            break;
        }
    }
    c.normalize(tree);
}

fn with_answer(schema: &SkillSchema, tree: &TypeTree, h: &Hypothesis, yes: bool) -> SkillSchema {
    let mut s = schema.clone();
    let c = &mut s.constraints[h.param];
    if yes {
        confirm(tree, c, &h.candidate);
    } else {
        c.excluded.insert(h.candidate.clone());
        c.allowed.remove(&h.candidate);
    }
    s
}

/// Scores each hypothesis and sorts by descending score, then by
/// (schema, candidate, param).
pub fn rank_hypotheses(hyps: &[Hypothesis], kb: &KnowledgeBase, state: &WorldState) -> Vec<Hypothesis> {
    let tree = kb.tree();
    let mut out: Vec<Hypothesis> = hyps
        .iter()
        .map(|h| {
            let mut h = h.clone();
            h.score = match kb.get(&h.schema) {
                Some(s) if h.param < s.params.len() => {
                    let now = ground_skill(s, state).len();
                    let then = ground_skill(&with_answer(s, tree, &h, true), state).len();
                    then.saturating_sub(now) as u32
                }
                _ => 0,
            };
            h
        })
        .collect();
    out.sort_by(|a, b| {
        b.score
            .cmp(&a.score)
            .then_with(|| a.schema.cmp(&b.schema))
            .then_with(|| a.candidate.cmp(&b.candidate))
            .then_with(|| a.param.cmp(&b.param))
    });
    out
}

/// Renders "Can I <verb> <instance> in <device>?" and the objects to highlight.
pub fn pose_question(h: &Hypothesis, kb: &KnowledgeBase, state: &WorldState) -> Result<QuestionEvent, CuriosityError> {
    if h.status != HypothesisStatus::Open {
        return Err(CuriosityError::AlreadyAnswered(h.id()));
    }
    let schema = kb.get(&h.schema).ok_or_else(|| CuriosityError::UnknownSkill(h.schema.to_string()))?;
    let reg = state.registry();
    let tree = kb.tree();
    let instance = reg
        .instances_of(&h.candidate)
        .next()
        .cloned()
        .ok_or_else(|| CuriosityError::NoInstancePresent(h.candidate.to_string()))?;
    let mut devices = Vec::new();
    for (i, c) in schema.constraints.iter().enumerate() {
        if i == h.param || !is_device_param(tree, schema, i) {
            continue;
        }
        let found = reg
            .object_ids()
            .find(|id| !devices.contains(*id) && reg.type_of(id).is_some_and(|t| c.admits(tree, t)));
        if let Some(d) = found {
            devices.push(d.clone());
        }
    }
    let mut text = format!("Can I {} {}", schema.verb(), instance);
    if !devices.is_empty() {
        let names: Vec<&str> = devices.iter().map(|d| d.as_str()).collect();
        text.push_str(" in ");
        text.push_str(&names.join(" and "));
    }
    text.push('?');
    let mut highlight = alloc::vec![instance];
    highlight.extend(devices);
    Ok(QuestionEvent {
        hypothesis: h.id(),
        text,
        highlight,
    })
}

/// Folds a yes/no answer into the targeted parameter's constraint.
pub fn apply_answer(
    kb: &KnowledgeBase,
    h: &Hypothesis,
    yes: bool,
) -> Result<(KnowledgeBase, Hypothesis), CuriosityError> {
    if h.status != HypothesisStatus::Open {
        return Err(CuriosityError::AlreadyAnswered(h.id()));
    }
    let schema = kb.get(&h.schema).ok_or_else(|| CuriosityError::UnknownSkill(h.schema.to_string()))?;
    if h.param >= schema.params.len() {
        return Err(CuriosityError::UnknownParam {
            skill: h.schema.to_string(),
            index: h.param,
        });
    }
    let updated = with_answer(schema, kb.tree(), h, yes);
    let mut kb2 = kb.clone();
    kb2.replace(updated).expect("answers keep schemas valid");
    let mut h2 = h.clone();
    h2.status = if yes {
        HypothesisStatus::Confirmed
    } else {
        HypothesisStatus::Rejected
    };
    Ok((kb2, h2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::skill::tests::{heat_actions, heat_world, record, toast_episode};
    use crate::skill::induce_skill;
    use crate::world::{fixtures, Point, WorldBuilder};
    use alloc::sync::Arc;

    fn heat_milk_kb(world: &WorldState) -> KnowledgeBase {
        let tree = Arc::new(fixtures::kitchen_tree());
        let ep = record(world, "heat milk", &heat_actions());
        let mut kb = KnowledgeBase::new(tree.clone());
        kb.insert(induce_skill(&ep, &tree).unwrap()).unwrap();
        kb
    }

    fn liquid_param(kb: &KnowledgeBase) -> usize {
        kb.get("heat milk").unwrap().param_index("milk").unwrap()
    }

    #[test]
    fn milk_to_water() {
        let w = heat_world("milk", "water");
        let kb = heat_milk_kb(&w);
        let hyps = rank_hypotheses(&generate_hypotheses(&kb, &w), &kb, &w);
        assert_eq!(hyps.len(), 1);
        let h = &hyps[0];
        assert_eq!((h.schema.as_str(), h.candidate.as_str()), ("heat milk", "water"));
        assert_eq!(h.param, liquid_param(&kb));
        // water1 paired with either cup
        assert_eq!(h.score, 2);
        let q = pose_question(h, &kb, &w).unwrap();
        assert_eq!(q.text, "Can I heat water1 in microwave1?");
        assert_eq!(q.highlight, [Sym::new("water1"), Sym::new("microwave1")]);
    }

    #[test]
    fn yes_and_no() {
        let w = heat_world("milk", "water");
        let kb = heat_milk_kb(&w);
        let h = generate_hypotheses(&kb, &w).remove(0);
        let p = liquid_param(&kb);
        let water = |kb: &KnowledgeBase| {
            ground_skill(kb.get("heat milk").unwrap(), &w)
                .iter()
                .filter(|o| o.args[p] == "water1")
                .count()
        };
        assert_eq!(water(&kb), 0);
        let (yes, hy) = apply_answer(&kb, &h, true).unwrap();
        assert_eq!(hy.status, HypothesisStatus::Confirmed);
        assert_eq!(water(&yes), 2);
        assert!(generate_hypotheses(&yes, &w).is_empty());
        let (no, hn) = apply_answer(&kb, &h, false).unwrap();
        assert_eq!(hn.status, HypothesisStatus::Rejected);
        assert_eq!(water(&no), 0);
        assert!(generate_hypotheses(&no, &w).is_empty());
        assert!(matches!(apply_answer(&no, &hn, true), Err(CuriosityError::AlreadyAnswered(_))));
    }

    #[test]
    fn lift_to_parent() {
        let w = heat_world("milk", "water");
        let mut kb = heat_milk_kb(&w);
        let p = liquid_param(&kb);
        for ty in ["water", "juice"] {
            let h = Hypothesis {
                schema: Sym::new("heat milk"),
                param: p,
                candidate: Sym::new(ty),
                status: HypothesisStatus::Open,
                score: 0,
            };
            kb = apply_answer(&kb, &h, true).unwrap().0;
        }
        assert_eq!(kb.get("heat milk").unwrap().constraints[p].allowed.len(), 3);
        let h = Hypothesis {
            schema: Sym::new("heat milk"),
            param: p,
            candidate: Sym::new("tea"),
            status: HypothesisStatus::Open,
            score: 0,
        };
        let kb = apply_answer(&kb, &h, true).unwrap().0;
        let allowed: Vec<&str> = kb.get("heat milk").unwrap().constraints[p].allowed.iter().map(|s| s.as_str()).collect();
        assert_eq!(allowed, ["liquid"]);
    }

    #[test]
    fn no_sibling_instances() {
        let w = fixtures::kitchen_min();
        let ep = record(&w, "heat milk", &heat_actions());
        let tree = Arc::new(fixtures::kitchen_tree());
        let mut kb = KnowledgeBase::new(tree.clone());
        kb.insert(induce_skill(&ep, &tree).unwrap()).unwrap();
        // cup siblings (glass, jug, bottle) and milk siblings are absent
        assert!(generate_hypotheses(&kb, &w).is_empty());
        assert!(rank_hypotheses(&[], &kb, &w).is_empty());
    }

    #[test]
    fn toast_bun() {
        let tree = Arc::new(fixtures::kitchen_tree());
        let mut kb = KnowledgeBase::new(tree.clone());
        kb.insert(induce_skill(&toast_episode(), &tree).unwrap()).unwrap();
        let w = WorldBuilder::new(fixtures::kitchen_tree())
            .agent("human")
            .and_then(|b| b.zone("counter", Point::new(0.0, 0.0)))
            .and_then(|b| b.object("bun1", "bun", None))
            .and_then(|b| b.object("toaster1", "toaster", Some(1)))
            .and_then(|b| b.fact_str("at(bun1, counter)"))
            .and_then(|b| b.fact_str("at(toaster1, counter)"))
            .and_then(WorldBuilder::build)
            .unwrap();
        let hyps = rank_hypotheses(&generate_hypotheses(&kb, &w), &kb, &w);
        assert_eq!(hyps.len(), 1);
        assert_eq!(hyps[0].score, 1);
        let q = pose_question(&hyps[0], &kb, &w).unwrap();
        assert_eq!(q.text, "Can I toast bun1 in toaster1?");
        assert_eq!(q.highlight, [Sym::new("bun1"), Sym::new("toaster1")]);
        let gone = w.remove_object("bun1").unwrap();
        assert!(matches!(pose_question(&hyps[0], &kb, &gone), Err(CuriosityError::NoInstancePresent(_))));
    }

    #[test]
    fn ranking_prefers_coverage_then_name() {
        let w = heat_world("milk", "water");
        let kb = heat_milk_kb(&w);
        let p = liquid_param(&kb);
        let mk = |ty: &str| Hypothesis {
            schema: Sym::new("heat milk"),
            param: p,
            candidate: Sym::new(ty),
            status: HypothesisStatus::Open,
            score: 0,
        };
        // juice and tea have no instances: score 0, alphabetical after water
        let ranked = rank_hypotheses(&[mk("tea"), mk("juice"), mk("water")], &kb, &w);
        let order: Vec<&str> = ranked.iter().map(|h| h.candidate.as_str()).collect();
        assert_eq!(order, ["water", "juice", "tea"]);
        assert_eq!(ranked, rank_hypotheses(&ranked, &kb, &w));
    }
}
