//! The TOML domain document: type tree, zones, objects, initial facts and
//! the optional assistance setup.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use cuebot_core::assist::{grid, GoalEntry, GoalLibrary, HumanModel};
use cuebot_core::fixtures;
use cuebot_core::planner::{default_templates, parse_goal, GoalTemplate, PlannerConfig, PlannerError};
use cuebot_core::session::{AssistSetup, SessionConfig};
use cuebot_core::world::{Point, TreeError, TypeTree, WorldBuilder, WorldError, WorldState, ROOT_TYPE};
use cuebot_core::Sym;

#[derive(Debug, thiserror::Error)]
pub enum DomainError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("malformed domain document: {0}")]
    Parse(#[from] toml::de::Error),
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error(transparent)]
    World(#[from] WorldError),
    #[error("goal `{name}`: {source}")]
    Goal { name: String, source: PlannerError },
    #[error("assistance setup: {0}")]
    Assist(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ZoneDoc {
    pub id: String,
    pub x: f64,
    pub y: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectDoc {
    pub id: String,
    #[serde(rename = "type")]
    pub ty: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub capacity: Option<u32>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HumanDoc {
    pub agent: String,
    pub seat: [f64; 2],
    pub r_c: f64,
    pub r_m: f64,
    pub w_d: f64,
    pub w_b: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GoalDoc {
    pub name: String,
    /// A command phrase or an explicit `lit & lit` conjunction.
    pub goal: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prior: Option<f64>,
}

fn default_beta() -> f64 {
    1.0
}
fn default_epsilon() -> f64 {
    0.05
}
fn default_spacing() -> f64 {
    0.1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AssistDoc {
    #[serde(default = "default_beta")]
    pub beta: f64,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default = "default_spacing")]
    pub grid_spacing: f64,
    /// Lower-left and upper-right corners of where the robot may put things.
    pub region_min: [f64; 2],
    pub region_max: [f64; 2],
}

fn default_budget() -> usize {
    PlannerConfig::default().node_budget
}
fn default_questions() -> u32 {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigDoc {
    #[serde(default = "default_budget")]
    pub node_budget: usize,
    #[serde(default = "default_questions")]
    pub max_questions: u32,
}

impl Default for ConfigDoc {
    fn default() -> Self {
        ConfigDoc {
            node_budget: default_budget(),
            max_questions: default_questions(),
        }
    }
}

/// On-disk form. Scalars and arrays come first so the document serializes
/// as valid TOML.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainDoc {
    #[serde(default)]
    pub agents: Vec<String>,
    #[serde(default)]
    pub facts: Vec<String>,
    /// `child = "parent"`; the built-in kitchen hierarchy when empty.
    #[serde(default)]
    pub types: BTreeMap<String, String>,
    #[serde(default)]
    pub zones: Vec<ZoneDoc>,
    #[serde(default)]
    pub objects: Vec<ObjectDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub human: Option<HumanDoc>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub goals: Vec<GoalDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub assist: Option<AssistDoc>,
    /// Command table; the built-in one when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub templates: Option<Vec<GoalTemplate>>,
    #[serde(default)]
    pub config: ConfigDoc,
}

/// A loaded, validated domain.
#[derive(Clone, Debug)]
pub struct Domain {
    pub tree: Arc<TypeTree>,
    pub world: WorldState,
    pub templates: Vec<GoalTemplate>,
    pub human: Option<HumanModel>,
    pub goals: Option<GoalLibrary>,
    pub region: Vec<Point>,
    doc: DomainDoc,
}

impl Domain {
    pub fn from_toml(text: &str) -> Result<Self, DomainError> {
        Self::from_doc(toml::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self, DomainError> {
        let text = std::fs::read_to_string(path).map_err(|source| DomainError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml(&text)
    }

    pub fn from_doc(doc: DomainDoc) -> Result<Self, DomainError> {
        let tree = if doc.types.is_empty() {
            fixtures::kitchen_tree()
        } else {
            TypeTree::from_edges(doc.types.iter().map(|(c, p)| (c.as_str(), p.as_str())))?
        };
        let mut b = WorldBuilder::new(tree);
        for a in &doc.agents {
            b = b.agent(a)?;
        }
        for z in &doc.zones {
            b = b.zone(&z.id, Point::new(z.x, z.y))?;
        }
        for o in &doc.objects {
            b = b.object(&o.id, &o.ty, o.capacity)?;
        }
        for f in &doc.facts {
            b = b.fact_str(f)?;
        }
        let world = b.build()?;
        let tree = world.registry().tree.clone();
        let templates = doc.templates.clone().unwrap_or_else(default_templates);

        let human = match &doc.human {
            Some(h) => {
                let m = HumanModel {
                    agent: Sym::new(&h.agent),
                    seat: Point::new(h.seat[0], h.seat[1]),
                    r_c: h.r_c,
                    r_m: h.r_m,
                    w_d: h.w_d,
                    w_b: h.w_b,
                };
                m.validate().map_err(|e| DomainError::Assist(e.to_string()))?;
                if !world.registry().is_agent(&m.agent) {
                    return Err(DomainError::Assist(format!("human `{}` is not a declared agent", m.agent)));
                }
                Some(m)
            }
            None => None,
        };

        let goals = if doc.goals.is_empty() {
            None
        } else {
            let beta = doc.assist.as_ref().map_or(default_beta(), |a| a.beta);
            let given = doc.goals.iter().filter(|g| g.prior.is_some()).count();
            if given != 0 && given != doc.goals.len() {
                return Err(DomainError::Assist("give a prior for every goal or for none".into()));
            }
            let uniform = 1.0 / doc.goals.len() as f64;
            let mut entries = Vec::new();
            for g in &doc.goals {
                let goal = parse_goal(&g.goal, &world, &templates).map_err(|source| DomainError::Goal {
                    name: g.name.clone(),
                    source,
                })?;
                entries.push(GoalEntry {
                    name: g.name.clone(),
                    goal,
                    prior: g.prior.unwrap_or(uniform),
                });
            }
            let lib = GoalLibrary { entries, beta };
            lib.validate().map_err(|e| DomainError::Assist(e.to_string()))?;
            Some(lib)
        };

        let region = match &doc.assist {
            Some(a) => {
                if !(a.grid_spacing > 0.0) {
                    return Err(DomainError::Assist("grid_spacing must be positive".into()));
                }
                let cells = grid(
                    Point::new(a.region_min[0], a.region_min[1]),
                    Point::new(a.region_max[0], a.region_max[1]),
                    a.grid_spacing,
                );
                if cells.is_empty() {
                    return Err(DomainError::Assist("robot region is empty".into()));
                }
                cells
            }
            None => Vec::new(),
        };

        Ok(Domain {
            tree,
            world,
            templates,
            human,
            goals,
            region,
            doc,
        })
    }

    /// Document describing the current world; facts sorted, types explicit.
    pub fn to_doc(&self) -> DomainDoc {
        let reg = self.world.registry();
        let mut doc = self.doc.clone();
        doc.agents = reg.agents.iter().map(|a| a.to_string()).collect();
        doc.facts = self.world.facts().iter().map(|l| l.to_string()).collect();
        doc.types = self
            .tree
            .edges()
            .filter(|(c, _)| c.as_str() != ROOT_TYPE)
            .map(|(c, p)| (c.to_string(), p.to_string()))
            .collect();
        doc.zones = reg
            .zones
            .iter()
            .map(|(id, p)| ZoneDoc {
                id: id.to_string(),
                x: p.x,
                y: p.y,
            })
            .collect();
        doc.objects = reg
            .objects
            .values()
            .map(|o| ObjectDoc {
                id: o.id.to_string(),
                ty: o.ty.to_string(),
                capacity: o.capacity,
            })
            .collect();
        doc
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(&self.to_doc()).expect("domain documents serialize")
    }

    pub fn config(&self) -> &ConfigDoc {
        &self.doc.config
    }

    pub fn planner_config(&self) -> PlannerConfig {
        PlannerConfig {
            node_budget: self.doc.config.node_budget,
            ..PlannerConfig::default()
        }
    }

    /// Session settings; assistance is enabled when the human, goals and
    /// robot region are all present.
    pub fn session_config(&self, seed: u64) -> SessionConfig {
        let assist = match (&self.human, &self.goals, &self.doc.assist) {
            (Some(human), Some(goals), Some(a)) => Some(AssistSetup {
                human: human.clone(),
                goals: goals.clone(),
                region: self.region.clone(),
                epsilon: a.epsilon,
            }),
            _ => None,
        };
        SessionConfig {
            planner: self.planner_config(),
            templates: self.templates.clone(),
            max_questions: self.doc.config.max_questions,
            assist,
            seed,
        }
    }
}
