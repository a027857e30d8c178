//! Ground STRIPS operators shared by skills and the planner.

use alloc::collections::BTreeSet;
use alloc::string::ToString;
use alloc::vec::Vec;
use core::fmt;

use crate::sym::Sym;
use crate::world::{Literal, WorldError, WorldState};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Origin {
    LearnedSkill,
    Primitive,
}

impl Origin {
    pub fn name(self) -> &'static str {
        match self {
            Origin::LearnedSkill => "learned_skill",
            Origin::Primitive => "primitive",
        }
    }
}

/// Identity of an operator independent of the state it was instantiated in.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct OperatorKey {
    pub origin: Origin,
    pub name: Sym,
    pub args: Vec<Sym>,
}

impl fmt::Display for OperatorKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.name)?;
        for (i, a) in self.args.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{a}")?;
        }
        f.write_str(")")
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct GroundOperator {
    pub name: Sym,
    pub args: Vec<Sym>,
    pub preconds: BTreeSet<Literal>,
    pub adds: BTreeSet<Literal>,
    pub dels: BTreeSet<Literal>,
    pub cost: u32,
    pub origin: Origin,
}

impl GroundOperator {
    pub fn key(&self) -> OperatorKey {
        OperatorKey {
            origin: self.origin,
            name: self.name.clone(),
            args: self.args.clone(),
        }
    }

    pub fn applicable(&self, state: &WorldState) -> bool {
        state.holds_all(&self.preconds)
    }

    /// STRIPS application: preconditions must hold; deletes then adds.
    pub fn apply(&self, state: &WorldState) -> Result<WorldState, WorldError> {
        if let Some(missing) = self.preconds.iter().find(|l| !state.holds(l)) {
            return Err(WorldError::PreconditionUnmet {
                action: self.key().to_string(),
                literal: missing.to_string(),
            });
        }
        let mut facts = state.facts().clone();
        for d in &self.dels {
            facts.remove(d);
        }
        facts.extend(self.adds.iter().cloned());
        Ok(state.with_facts(facts))
    }

    pub fn mentions(&self, id: &str) -> bool {
        self.args.iter().any(|a| a == id)
    }
}

impl fmt::Display for GroundOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(&self.key(), f)
    }
}
