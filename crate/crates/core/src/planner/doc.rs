//! The plan as shown to the user and printed by the command line.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::{Plan, PlanStatus};
use crate::operator::Origin;
use crate::sym::Sym;
use crate::world::{diff_states, Literal};

#[derive(Clone, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct StepDoc {
    pub index: usize,
    /// Display form, e.g. `pick(robot, jug1)`.
    pub operator: String,
    pub name: Sym,
    pub args: Vec<Sym>,
    pub origin: Origin,
    pub added: Vec<Literal>,
    pub removed: Vec<Literal>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PlanDocument {
    pub goal: String,
    pub cost: u32,
    pub status: PlanStatus,
    pub steps: Vec<StepDoc>,
}

impl PlanDocument {
    /// Per-step deltas come from the predicted trajectory, so device side
    /// effects show up on the step that caused them.
    pub fn from_plan(plan: &Plan) -> Self {
        let steps = plan
            .steps
            .iter()
            .enumerate()
            .map(|(index, op)| {
                let (added, removed) = match diff_states(&plan.trajectory[index], &plan.trajectory[index + 1]) {
                    Ok(d) => (d.added.into_iter().collect(), d.removed.into_iter().collect()),
                    Err(_) => (Vec::new(), Vec::new()),
                };
                StepDoc {
                    index,
                    operator: op.to_string(),
                    name: op.name.clone(),
                    args: op.args.clone(),
                    origin: op.origin,
                    added,
                    removed,
                }
            })
            .collect();
        PlanDocument {
            goal: plan.goal.to_string(),
            cost: plan.cost(),
            status: plan.status,
            steps,
        }
    }
}
