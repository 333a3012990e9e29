//! Question programs: machine-checkable logical forms.
//!
//! A program is a chain of steps. The first step selects an entity class,
//! inner steps narrow the working set (attribute filters, relation
//! constraints), and an optional final step folds the set into a scalar
//! (count, attribute query, existence). Each step consumes the previous
//! step's result, so serialized records carry an explicit `input_step`
//! back-pointer even though the chain shape makes it `i - 1` everywhere.

use std::collections::{BTreeMap, BTreeSet};

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::geometry::{DistanceCategory, PlanarDirection};
use crate::scene::EntityClass;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    Vg,
    VqaWh,
    VqaCount,
}

impl TaskKind {
    pub const ALL: [TaskKind; 3] = [TaskKind::Vg, TaskKind::VqaWh, TaskKind::VqaCount];

    pub fn name(&self) -> &'static str {
        match self {
            TaskKind::Vg => "vg",
            TaskKind::VqaWh => "vqa_wh",
            TaskKind::VqaCount => "vqa_count",
        }
    }
}

/// Kinds of spatial edges the graph materializes: interaction labels
/// (`hoi`), gaze (`gaze`), and geometric relations among humans (`hhg`) or
/// between humans and other entities (`hog`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeKind {
    Hoi,
    Gaze,
    Hhg,
    Hog,
}

impl EdgeKind {
    pub fn name(&self) -> &'static str {
        match self {
            EdgeKind::Hoi => "hoi",
            EdgeKind::Gaze => "gaze",
            EdgeKind::Hhg => "hhg",
            EdgeKind::Hog => "hog",
        }
    }

    pub fn from_name(name: &str) -> Option<EdgeKind> {
        match name {
            "hoi" => Some(EdgeKind::Hoi),
            "gaze" => Some(EdgeKind::Gaze),
            "hhg" => Some(EdgeKind::Hhg),
            "hog" => Some(EdgeKind::Hog),
            _ => None,
        }
    }

    /// Interaction edges carry verbs; geometric edges carry angles and
    /// distances.
    pub fn is_interaction(&self) -> bool {
        matches!(self, EdgeKind::Hoi | EdgeKind::Gaze)
    }
}

/// Which side of an edge the working set sits on. `Out` keeps nodes with a
/// qualifying edge towards the reference, `In` keeps nodes the reference
/// points at (e.g. the object in "the cup that a woman is holding").
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum EdgeDirection {
    #[default]
    Out,
    In,
}

/// The entity role a relate step binds to, described inline: either a
/// concrete entity id (the robot, mostly) or any entity of a class matching
/// a set of attribute values.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReferenceSpec {
    Entity { id: String },
    Filtered {
        class: EntityClass,
        #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
        attrs: BTreeMap<String, String>,
    },
}

impl ReferenceSpec {
    pub fn robot() -> ReferenceSpec {
        ReferenceSpec::Entity { id: crate::scene::ROBOT_ID.to_string() }
    }

    /// Stable string form used to count distinct roles and deduplicate.
    pub fn canonical(&self) -> String {
        serde_json::to_string(self).expect("reference specs always serialize")
    }
}

/// Predicate on the payload of a candidate edge.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgePredicate {
    /// Interaction verb, e.g. `holding`.
    Verb(String),
    /// Egocentric sector of the geometric relation.
    Planar(PlanarDirection),
    /// Distance band of the geometric relation.
    Distance(DistanceCategory),
}

/// One program step. Slot qualifiers pin a condition to a specific time
/// slot: a qualified filter keeps an entity's nodes in *all* slots when the
/// entity satisfies the condition at the qualified slot, while an
/// unqualified filter tests each node in place.
#[derive(Debug, Clone, PartialEq)]
pub enum StepOp {
    Select {
        class: EntityClass,
    },
    Filter {
        attr: String,
        value: String,
        slot: Option<usize>,
    },
    Relate {
        kind: EdgeKind,
        predicate: EdgePredicate,
        reference: ReferenceSpec,
        direction: EdgeDirection,
        slot: Option<usize>,
    },
    Count,
    Query {
        attr: String,
        slot: Option<usize>,
    },
    Exist,
}

impl StepOp {
    pub fn op_name(&self) -> &'static str {
        match self {
            StepOp::Select { .. } => "select",
            StepOp::Filter { .. } => "filter",
            StepOp::Relate { .. } => "relate",
            StepOp::Count => "count",
            StepOp::Query { .. } => "query",
            StepOp::Exist => "exist",
        }
    }

    /// Terminal steps fold the working set into a scalar.
    pub fn is_terminal(&self) -> bool {
        matches!(self, StepOp::Count | StepOp::Query { .. } | StepOp::Exist)
    }
}

/// A complete question program: the task it serves, the slots it spans, and
/// the step chain.
#[derive(Debug, Clone, PartialEq)]
pub struct QuestionProgram {
    pub task: TaskKind,
    pub target_slots: BTreeSet<usize>,
    pub steps: Vec<StepOp>,
}

impl QuestionProgram {
    pub fn select_class(&self) -> Option<EntityClass> {
        match self.steps.first() {
            Some(StepOp::Select { class }) => Some(*class),
            _ => None,
        }
    }

    /// Stable serialized form, usable as a deduplication key.
    pub fn canonical(&self) -> String {
        serde_json::to_string(self).expect("programs always serialize")
    }
}

// ---------------------------------------------------------------------------
// Wire format: {op, args, input_step} records with a stable field order.

#[derive(Serialize, Deserialize)]
struct StepRecord {
    op: String,
    args: serde_json::Value,
    input_step: Option<usize>,
}

#[derive(Serialize, Deserialize)]
struct SelectArgs {
    class: EntityClass,
}

#[derive(Serialize, Deserialize)]
struct FilterArgs {
    attr: String,
    value: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    slot: Option<usize>,
}

#[derive(Serialize, Deserialize)]
struct RelateArgs {
    kind: EdgeKind,
    predicate: EdgePredicate,
    reference: ReferenceSpec,
    #[serde(default)]
    direction: EdgeDirection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    slot: Option<usize>,
}

#[derive(Serialize, Deserialize)]
struct QueryArgs {
    attr: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    slot: Option<usize>,
}

fn to_record(step: &StepOp, index: usize) -> StepRecord {
    let args = match step {
        StepOp::Select { class } => serde_json::to_value(SelectArgs { class: *class }),
        StepOp::Filter { attr, value, slot } => serde_json::to_value(FilterArgs {
            attr: attr.clone(),
            value: value.clone(),
            slot: *slot,
        }),
        StepOp::Relate { kind, predicate, reference, direction, slot } => {
            serde_json::to_value(RelateArgs {
                kind: *kind,
                predicate: predicate.clone(),
                reference: reference.clone(),
                direction: *direction,
                slot: *slot,
            })
        }
        StepOp::Count | StepOp::Exist => Ok(serde_json::Value::Object(Default::default())),
        StepOp::Query { attr, slot } => {
            serde_json::to_value(QueryArgs { attr: attr.clone(), slot: *slot })
        }
    }
    .expect("step arguments always serialize");
    StepRecord { op: step.op_name().to_string(), args, input_step: index.checked_sub(1) }
}

fn from_record(record: StepRecord, index: usize) -> Result<StepOp, String> {
    if record.input_step != index.checked_sub(1) {
        return Err(format!(
            "step {index} must consume step {:?}, found {:?}",
            index.checked_sub(1),
            record.input_step
        ));
    }
    let step = match record.op.as_str() {
        "select" => {
            let a: SelectArgs = parse_args(record.args)?;
            StepOp::Select { class: a.class }
        }
        "filter" => {
            let a: FilterArgs = parse_args(record.args)?;
            StepOp::Filter { attr: a.attr, value: a.value, slot: a.slot }
        }
        "relate" => {
            let a: RelateArgs = parse_args(record.args)?;
            StepOp::Relate {
                kind: a.kind,
                predicate: a.predicate,
                reference: a.reference,
                direction: a.direction,
                slot: a.slot,
            }
        }
        "count" => StepOp::Count,
        "query" => {
            let a: QueryArgs = parse_args(record.args)?;
            StepOp::Query { attr: a.attr, slot: a.slot }
        }
        "exist" => StepOp::Exist,
        other => return Err(format!("unknown op `{other}`")),
    };
    Ok(step)
}

fn parse_args<T: serde::de::DeserializeOwned>(value: serde_json::Value) -> Result<T, String> {
    serde_json::from_value(value).map_err(|e| e.to_string())
}

impl Serialize for QuestionProgram {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Wire<'a> {
            task: TaskKind,
            target_slots: &'a BTreeSet<usize>,
            steps: Vec<StepRecord>,
        }
        let steps =
            self.steps.iter().enumerate().map(|(i, s)| to_record(s, i)).collect();
        Wire { task: self.task, target_slots: &self.target_slots, steps }.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for QuestionProgram {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Wire {
            task: TaskKind,
            target_slots: BTreeSet<usize>,
            steps: Vec<StepRecord>,
        }
        let wire = Wire::deserialize(deserializer)?;
        let steps = wire
            .steps
            .into_iter()
            .enumerate()
            .map(|(i, r)| from_record(r, i).map_err(D::Error::custom))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(QuestionProgram { task: wire.task, target_slots: wire.target_slots, steps })
    }
}
