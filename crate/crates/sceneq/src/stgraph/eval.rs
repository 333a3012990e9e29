//! Program evaluation over the scene graph.
//!
//! Evaluation folds the step chain left to right. Entity steps shrink a
//! working set of nodes; a terminal step turns the set into a scalar. Every
//! intermediate set is recorded so callers can emit workflows and verify the
//! subset chain.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::program::{
    EdgeDirection, EdgeKind, EdgePredicate, QuestionProgram, ReferenceSpec, StepOp,
};
use super::{EdgePayload, NodeRef, SceneGraph, SpatialEdge};
use crate::scene::AttrKind;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EvalError {
    #[error("program is ill-formed: {0}")]
    IllFormed(String),
    /// A query step reached a working set holding several entities.
    #[error("query over a non-singleton result ({0} entities)")]
    AmbiguousQuery(usize),
    /// The queried attribute has no single value on the surviving entity.
    #[error("attribute `{0}` has no single value on the result")]
    AmbiguousValue(String),
}

/// Terminal result of a program.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Answer {
    /// Grounding tasks end on the surviving nodes.
    Entities(BTreeSet<NodeRef>),
    Count(u64),
    Value(String),
    Bool(bool),
}

/// Full evaluation trace: one node set per step (terminal steps record the
/// set they folded) plus the answer.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub steps: Vec<BTreeSet<NodeRef>>,
    pub answer: Answer,
}

impl Evaluation {
    /// Distinct entities in the final working set.
    pub fn final_entities(&self) -> BTreeSet<&str> {
        self.steps
            .last()
            .map(|s| s.iter().map(|n| n.entity.as_str()).collect())
            .unwrap_or_default()
    }
}

/// Result of applying one step.
#[derive(Debug, Clone, PartialEq)]
pub enum StepOutcome {
    Set(BTreeSet<NodeRef>),
    Terminal(Answer),
}

/// Structural and schema checks, run before any evaluation: the chain must
/// open with `select`, terminals may only close it, slot qualifiers must
/// point into the target slots, and every attribute, value and edge kind
/// must be declared by the scene's schema for the selected class.
pub fn validate_program(graph: &SceneGraph, program: &QuestionProgram) -> Result<(), EvalError> {
    let ill = |msg: String| Err(EvalError::IllFormed(msg));
    if program.steps.is_empty() {
        return ill("program has no steps".into());
    }
    let Some(class) = program.select_class() else {
        return ill("the first step must be a select".into());
    };
    if program.target_slots.is_empty() {
        return ill("program targets no slots".into());
    }
    if let Some(&max) = program.target_slots.iter().max() {
        if max >= graph.slots.len() {
            return ill(format!("target slot {max} is outside the graph"));
        }
    }

    let check_slot = |slot: &Option<usize>| match slot {
        Some(q) if !program.target_slots.contains(q) => {
            ill(format!("slot qualifier {q} is outside the target slots"))
        }
        _ => Ok(()),
    };
    let check_node_attr = |class: crate::scene::EntityClass,
                           attr: &str,
                           value: Option<&str>|
     -> Result<(), EvalError> {
        let Some(def) = graph.schema.def(class, attr) else {
            return ill(format!("attribute `{attr}` is not declared for {}", class.name()));
        };
        if def.kind == AttrKind::Relational {
            return ill(format!("`{attr}` is relational and cannot be used as a node attribute"));
        }
        if let Some(v) = value {
            if !def.values.iter().any(|d| d == v) {
                return ill(format!("value `{v}` is outside the domain of `{attr}`"));
            }
        }
        Ok(())
    };

    for (i, step) in program.steps.iter().enumerate() {
        if i > 0 && matches!(step, StepOp::Select { .. }) {
            return ill("select may only appear as the first step".into());
        }
        if step.is_terminal() && i + 1 != program.steps.len() {
            return ill(format!("terminal step `{}` must be last", step.op_name()));
        }
        match step {
            StepOp::Select { .. } => {}
            StepOp::Filter { attr, value, slot } => {
                check_slot(slot)?;
                check_node_attr(class, attr, Some(value))?;
            }
            StepOp::Relate { kind, predicate, reference, slot, .. } => {
                check_slot(slot)?;
                let licensed = graph
                    .schema
                    .relational(class)
                    .any(|d| d.name == kind.name());
                if !licensed {
                    return ill(format!(
                        "edge kind `{}` is not declared for {} questions",
                        kind.name(),
                        class.name()
                    ));
                }
                match (kind.is_interaction(), predicate) {
                    (true, EdgePredicate::Verb(_)) => {}
                    (false, EdgePredicate::Planar(_) | EdgePredicate::Distance(_)) => {}
                    _ => {
                        return ill(format!(
                            "predicate {predicate:?} does not fit edge kind `{}`",
                            kind.name()
                        ))
                    }
                }
                if let ReferenceSpec::Filtered { class: ref_class, attrs } = reference {
                    for (attr, value) in attrs {
                        check_node_attr(*ref_class, attr, Some(value))?;
                    }
                }
            }
            StepOp::Query { attr, slot } => {
                check_slot(slot)?;
                check_node_attr(class, attr, None)?;
            }
            StepOp::Count | StepOp::Exist => {}
        }
    }
    Ok(())
}

/// Entities matching a reference description at one slot. A concrete id
/// resolves only if that entity appears in the slot.
fn reference_set(graph: &SceneGraph, spec: &ReferenceSpec, slot: usize) -> BTreeSet<String> {
    match spec {
        ReferenceSpec::Entity { id } => {
            graph.node(slot, id).map(|n| n.entity.clone()).into_iter().collect()
        }
        ReferenceSpec::Filtered { class, attrs } => graph
            .nodes_at(slot)
            .filter(|n| {
                !n.is_robot
                    && n.class == *class
                    && attrs.iter().all(|(k, v)| n.attrs.get(k) == Some(v))
            })
            .map(|n| n.entity.clone())
            .collect(),
    }
}

fn edge_matches(edge: &SpatialEdge, kind: EdgeKind, predicate: &EdgePredicate) -> bool {
    if edge.kind != kind {
        return false;
    }
    match (predicate, &edge.payload) {
        (EdgePredicate::Verb(v), EdgePayload::Interaction(p)) => p.verb == *v,
        (EdgePredicate::Planar(d), EdgePayload::Geometric(g)) => g.relation.planar == *d,
        (EdgePredicate::Distance(c), EdgePayload::Geometric(g)) => g.distance_cat == *c,
        _ => false,
    }
}

/// Applies a single step to a working set. Callers that just want the whole
/// program evaluated should use [`evaluate_program`]; this is exposed so the
/// generator can grow programs incrementally under the same semantics.
pub fn apply_step(
    graph: &SceneGraph,
    target_slots: &BTreeSet<usize>,
    current: &BTreeSet<NodeRef>,
    step: &StepOp,
) -> Result<StepOutcome, EvalError> {
    match step {
        StepOp::Select { class } => {
            let set = graph
                .nodes
                .iter()
                .filter(|n| {
                    target_slots.contains(&n.slot) && n.class == *class && !n.is_robot
                })
                .map(|n| NodeRef::new(n.entity.clone(), n.slot))
                .collect();
            Ok(StepOutcome::Set(set))
        }
        StepOp::Filter { attr, value, slot } => {
            let set = current
                .iter()
                .filter(|n| {
                    let probe = slot.unwrap_or(n.slot);
                    graph.attr(probe, &n.entity, attr) == Some(value.as_str())
                })
                .cloned()
                .collect();
            Ok(StepOutcome::Set(set))
        }
        StepOp::Relate { kind, predicate, reference, direction, slot } => {
            let mut refs: BTreeMap<usize, BTreeSet<String>> = BTreeMap::new();
            let mut set = BTreeSet::new();
            for node in current {
                let probe = slot.unwrap_or(node.slot);
                let refs_at = refs
                    .entry(probe)
                    .or_insert_with(|| reference_set(graph, reference, probe));
                let edge_ids = match direction {
                    EdgeDirection::Out => graph.out(probe, &node.entity),
                    EdgeDirection::In => graph.incoming(probe, &node.entity),
                };
                let hit = edge_ids.iter().any(|&i| {
                    let edge = &graph.spatial_edges[i];
                    let other = match direction {
                        EdgeDirection::Out => &edge.to,
                        EdgeDirection::In => &edge.from,
                    };
                    edge_matches(edge, *kind, predicate) && refs_at.contains(other)
                });
                if hit {
                    set.insert(node.clone());
                }
            }
            Ok(StepOutcome::Set(set))
        }
        StepOp::Count => {
            let entities: BTreeSet<&str> = current.iter().map(|n| n.entity.as_str()).collect();
            Ok(StepOutcome::Terminal(Answer::Count(entities.len() as u64)))
        }
        StepOp::Exist => Ok(StepOutcome::Terminal(Answer::Bool(!current.is_empty()))),
        StepOp::Query { attr, slot } => {
            let entities: BTreeSet<&str> = current.iter().map(|n| n.entity.as_str()).collect();
            if entities.len() != 1 {
                return Err(EvalError::AmbiguousQuery(entities.len()));
            }
            let entity = entities.into_iter().next().expect("singleton");
            let values: BTreeSet<&str> = match slot {
                Some(q) => graph.attr(*q, entity, attr).into_iter().collect(),
                None => current
                    .iter()
                    .filter(|n| n.entity == entity)
                    .filter_map(|n| graph.attr(n.slot, &n.entity, attr))
                    .collect(),
            };
            if values.len() != 1 {
                return Err(EvalError::AmbiguousValue(attr.clone()));
            }
            let value = values.into_iter().next().expect("singleton");
            Ok(StepOutcome::Terminal(Answer::Value(value.to_string())))
        }
    }
}

/// Validates and evaluates a program, returning the per-step node sets and
/// the answer. Entity steps only ever narrow the set; a program without a
/// terminal step answers with its surviving nodes.
pub fn evaluate_program(
    graph: &SceneGraph,
    program: &QuestionProgram,
) -> Result<Evaluation, EvalError> {
    validate_program(graph, program)?;
    let mut steps: Vec<BTreeSet<NodeRef>> = Vec::with_capacity(program.steps.len());
    let mut current: BTreeSet<NodeRef> = BTreeSet::new();
    let mut answer = None;
    for (i, step) in program.steps.iter().enumerate() {
        match apply_step(graph, &program.target_slots, &current, step)? {
            StepOutcome::Set(next) => {
                debug_assert!(i == 0 || next.is_subset(&current), "steps must narrow");
                steps.push(next.clone());
                current = next;
            }
            StepOutcome::Terminal(a) => {
                steps.push(current.clone());
                answer = Some(a);
            }
        }
    }
    Ok(Evaluation { steps, answer: answer.unwrap_or(Answer::Entities(current)) })
}

/// Edge usage of a program: `spatial` counts distinct relation roles (one
/// per distinct kind / direction / reference / verb signature, so several
/// predicates over the same geometric edge count once), `slots` counts the
/// targeted slots, and `temporal` counts the hops between consecutive
/// targeted slots.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeCounts {
    pub spatial: u32,
    pub slots: u32,
    pub temporal: u32,
}

pub fn count_edges(
    graph: &SceneGraph,
    program: &QuestionProgram,
) -> Result<EdgeCounts, EvalError> {
    validate_program(graph, program)?;
    let mut signatures = BTreeSet::new();
    for step in &program.steps {
        if let StepOp::Relate { kind, predicate, reference, direction, .. } = step {
            let verb = match predicate {
                EdgePredicate::Verb(v) => v.as_str(),
                _ => "",
            };
            signatures.insert(format!(
                "{}|{:?}|{}|{}",
                kind.name(),
                direction,
                reference.canonical(),
                verb
            ));
        }
    }
    let slots = program.target_slots.len() as u32;
    Ok(EdgeCounts {
        spatial: signatures.len() as u32,
        slots,
        temporal: slots.saturating_sub(1),
    })
}
