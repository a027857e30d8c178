//! Typed-object kitchen world: fluents, primitive manipulations and devices.

pub(crate) mod action;
mod literal;
mod state;
mod tree;

pub use action::{apply_action, apply_action_traced, tick_devices, ActionKind, Applied, PrimitiveAction};
pub use literal::{Atom, LiftedLiteral, Literal, LiteralError, Pred, TempValue, Term, TEMP_VALUES};
pub use state::{
    diff_states, kinds, FactDiff, Location, ObjectInstance, Point, Registry, WorldBuilder, WorldError, WorldState,
};
pub use tree::{TreeError, TypeTree, ROOT_TYPE};

pub use crate::fixtures;

/// Applies a primitive and then lets devices run for one tick.
pub fn step(state: &WorldState, action: &PrimitiveAction) -> Result<WorldState, WorldError> {
    apply_action(state, action).map(|s| tick_devices(&s))
}
