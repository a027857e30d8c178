//! Goals and the spoken-command templates that produce them.

use alloc::collections::BTreeSet;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use super::PlannerError;
use crate::sym::Sym;
use crate::world::{LiftedLiteral, Literal, WorldState};

/// A conjunction of ground literals.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Goal {
    pub literals: BTreeSet<Literal>,
}

impl Goal {
    pub fn new(literals: impl IntoIterator<Item = Literal>) -> Result<Self, PlannerError> {
        let literals: BTreeSet<Literal> = literals.into_iter().collect();
        if literals.is_empty() {
            return Err(PlannerError::EmptyGoal);
        }
        Ok(Goal { literals })
    }

    pub fn holds_in(&self, state: &WorldState) -> bool {
        state.holds_all(&self.literals)
    }
}

impl fmt::Display for Goal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, l) in self.literals.iter().enumerate() {
            if i > 0 {
                f.write_str(" & ")?;
            }
            write!(f, "{l}")?;
        }
        Ok(())
    }
}

/// A command phrase bound to lifted goal literals over typed variables.
#[derive(Clone, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GoalTemplate {
    pub name: String,
    /// Accepted phrasings, compared after normalization.
    pub phrases: Vec<String>,
    /// `(variable, type)` pairs.
    pub params: Vec<(Sym, Sym)>,
    pub literals: Vec<LiftedLiteral>,
}

impl GoalTemplate {
    fn new(name: &str, phrases: &[&str], params: &[(&str, &str)], literals: &[&str]) -> Self {
        GoalTemplate {
            name: name.to_string(),
            phrases: phrases.iter().map(|p| p.to_string()).collect(),
            params: params.iter().map(|(v, t)| (Sym::new(v), Sym::new(t))).collect(),
            literals: literals.iter().map(|l| l.parse().expect("static template")).collect(),
        }
    }

    pub fn matches(&self, command: &str) -> bool {
        let c = normalize(command);
        self.phrases.iter().any(|p| normalize(p) == c)
    }

    /// Binds each variable to the first fitting instance; the tuple is
    /// injective and chosen in lexicographic order.
    pub fn instantiate(&self, state: &WorldState) -> Result<Goal, PlannerError> {
        let reg = state.registry();
        let domains: Vec<Vec<Sym>> = self
            .params
            .iter()
            .map(|(_, ty)| reg.instances_of(ty).cloned().collect())
            .collect();
        let mut pick: Vec<Sym> = Vec::new();
        fn first(domains: &[Vec<Sym>], pick: &mut Vec<Sym>) -> bool {
            let i = pick.len();
            if i == domains.len() {
                return true;
            }
            for c in &domains[i] {
                if pick.contains(c) {
                    continue;
                }
                pick.push(c.clone());
                if first(domains, pick) {
                    return true;
                }
                pick.pop();
            }
            false
        }
        if !first(&domains, &mut pick) {
            let ty = self
                .params
                .iter()
                .zip(&domains)
                .find(|(_, d)| d.is_empty())
                .map(|((_, t), _)| t.to_string())
                .unwrap_or_else(|| "distinct objects".to_string());
            return Err(PlannerError::NoInstance {
                template: self.name.clone(),
                ty,
            });
        }
        let lits = self.literals.iter().map(|l| {
            l.ground(|v| self.params.iter().position(|(p, _)| p == v).map(|i| pick[i].clone()))
                .ok_or_else(|| PlannerError::BadTemplate(self.name.clone()))
        });
        Goal::new(lits.collect::<Result<Vec<_>, _>>()?)
    }
}

fn normalize(s: &str) -> String {
    let trimmed = s.trim().trim_end_matches(['.', '!', '?']);
    let mut out = String::new();
    for w in trimmed.split_whitespace() {
        if !out.is_empty() {
            out.push(' ');
        }
        out.push_str(&w.to_lowercase());
    }
    out
}

/// Built-in command table used when a domain document brings none.
pub fn default_templates() -> Vec<GoalTemplate> {
    alloc::vec![
        GoalTemplate::new(
            "ice tea",
            &["prepare an ice tea", "prepare ice tea", "make ice tea", "make an ice tea"],
            &[("c", "cup")],
            &["brewed(?c)", "temp(?c, cold)"],
        ),
        GoalTemplate::new("toast", &["make toast", "toast the bread"], &[("b", "bread")], &["toasted(?b)"]),
        GoalTemplate::new("hot milk", &["heat the milk", "heat milk"], &[("m", "milk")], &["temp(?m, hot)"]),
        GoalTemplate::new(
            "pour beverage",
            &["pour a drink", "pour beverage", "pour a beverage"],
            &[("j", "juice"), ("g", "glass")],
            &["in(?j, ?g)"],
        ),
    ]
}

/// Resolves a command against the templates. A command made of literals
/// joined by `&` is accepted as an explicit goal.
pub fn parse_goal(command: &str, state: &WorldState, templates: &[GoalTemplate]) -> Result<Goal, PlannerError> {
    if let Some(t) = templates.iter().find(|t| t.matches(command)) {
        return t.instantiate(state);
    }
    if command.contains('(') {
        let lits: Result<Vec<Literal>, _> = command.split('&').map(|p| p.trim().parse::<Literal>()).collect();
        if let Ok(lits) = lits {
            for l in &lits {
                for a in &l.args {
                    if !(state.registry().resolve(a).is_ok() || crate::world::TempValue::from_name(a).is_some()) {
                        return Err(PlannerError::NoInstance {
                            template: command.trim().to_string(),
                            ty: a.to_string(),
                        });
                    }
                }
            }
            return Goal::new(lits);
        }
    }
    Err(PlannerError::UnknownCommand(command.trim().to_string()))
}
