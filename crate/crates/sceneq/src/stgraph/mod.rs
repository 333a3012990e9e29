//! The spatio-temporal scene graph.
//!
//! Nodes are entity-at-slot pairs sampled at each slot's representative
//! frame. Spatial edges connect nodes within a slot and come in two
//! families: geometric edges from every oriented entity (people and the
//! robot) to every other placed entity, and interaction edges lifted from
//! the scene's HOI labels. Temporal edges chain consecutive appearances of
//! the same entity across slots.
//!
//! The robot appears as a distinguished node per slot it has a pose for. It
//! is never selectable and carries no attributes, but edges reach it, so
//! programs can relate against it by id.

mod eval;
mod program;

use std::collections::{BTreeMap, HashMap};

use serde::Serialize;

use crate::geometry::{
    box_distance, box_surface_distance, classify_direction, classify_distance,
    directed_cloud_distance, cloud_distance, planar_angle, Box2D, Box3D, DistanceCategory,
    Pose2D, SpatialRelation, VerticalDirection,
};
use crate::scene::{AttributeSchema, EntityClass, SceneAnnotation, TimeSlot, ROBOT_ID};

pub use eval::{
    apply_step, count_edges, evaluate_program, validate_program, Answer, EdgeCounts, EvalError,
    Evaluation, StepOutcome,
};
pub use program::{
    EdgeDirection, EdgeKind, EdgePredicate, QuestionProgram, ReferenceSpec, StepOp, TaskKind,
};

/// Synthetic body for the robot node; poses only give a point and heading.
const ROBOT_DIMS: [f64; 3] = [0.5, 0.5, 1.2];

/// Parameters controlling edge materialization.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct RelationConfig {
    /// Vertical dead band in meters.
    pub tau_z: f64,
    /// Drop geometric edges longer than this, when set.
    pub distance_cutoff: Option<f64>,
    /// Interaction verbs that also materialize a gaze edge.
    pub gaze_verbs: std::collections::BTreeSet<String>,
    /// Measure human-human distance between box surfaces instead of centers.
    pub surface_distance: bool,
    /// Neighbours per query point for cloud distances.
    pub cloud_k: usize,
    /// Average both directions of the cloud distance.
    pub symmetric_cloud: bool,
    /// Resolve the vertical dead band to up/down, yielding 16 directions.
    pub force_vertical: bool,
}

impl Default for RelationConfig {
    fn default() -> Self {
        RelationConfig {
            tau_z: 0.5,
            distance_cutoff: None,
            gaze_verbs: ["looking_at".to_string()].into(),
            surface_distance: false,
            cloud_k: 1,
            symmetric_cloud: true,
            force_vertical: false,
        }
    }
}

/// Node identifier: an entity at a time slot.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, serde::Serialize, serde::Deserialize)]
pub struct NodeRef {
    pub entity: String,
    pub slot: usize,
}

impl NodeRef {
    pub fn new(entity: impl Into<String>, slot: usize) -> Self {
        NodeRef { entity: entity.into(), slot }
    }
}

/// An entity pinned to a slot together with its image-plane box, the unit
/// ground truth for grounding tasks.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct GroundedEntity {
    pub entity: String,
    pub slot: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub box2d: Option<Box2D>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GraphNode {
    pub entity: String,
    pub slot: usize,
    pub class: EntityClass,
    pub is_robot: bool,
    /// Static attributes plus dynamic ones sampled at the slot's
    /// representative frame.
    pub attrs: BTreeMap<String, String>,
    pub box2d: Option<Box2D>,
    pub box3d: Option<Box3D>,
}

/// Payload of a geometric edge: the raw angle and distance plus their
/// classifications.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GeomPayload {
    pub theta_deg: f64,
    pub distance_m: f64,
    pub relation: SpatialRelation,
    pub distance_cat: DistanceCategory,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HoiPayload {
    pub verb: String,
    pub category: String,
    pub difficulty: u8,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgePayload {
    Geometric(GeomPayload),
    Interaction(HoiPayload),
}

/// Directed edge between two nodes of the same slot.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpatialEdge {
    pub slot: usize,
    pub from: String,
    pub to: String,
    pub kind: EdgeKind,
    pub payload: EdgePayload,
}

/// Link between consecutive appearances of one entity.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TemporalEdge {
    pub entity: String,
    pub from_slot: usize,
    pub to_slot: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct SceneGraph {
    pub scene_id: String,
    pub schema: AttributeSchema,
    pub slots: Vec<TimeSlot>,
    pub nodes: Vec<GraphNode>,
    pub spatial_edges: Vec<SpatialEdge>,
    pub temporal_edges: Vec<TemporalEdge>,
    #[serde(skip_serializing)]
    node_index: HashMap<(usize, String), usize>,
    #[serde(skip_serializing)]
    out_edges: Vec<Vec<usize>>,
    #[serde(skip_serializing)]
    in_edges: Vec<Vec<usize>>,
}

impl SceneGraph {
    pub fn node(&self, slot: usize, entity: &str) -> Option<&GraphNode> {
        self.node_index.get(&(slot, entity.to_string())).map(|&i| &self.nodes[i])
    }

    pub fn nodes_at(&self, slot: usize) -> impl Iterator<Item = &GraphNode> {
        self.nodes.iter().filter(move |n| n.slot == slot)
    }

    /// Indices into `spatial_edges` leaving the node, empty if absent.
    pub fn out(&self, slot: usize, entity: &str) -> &[usize] {
        self.node_index
            .get(&(slot, entity.to_string()))
            .map(|&i| self.out_edges[i].as_slice())
            .unwrap_or(&[])
    }

    /// Indices into `spatial_edges` arriving at the node.
    pub fn incoming(&self, slot: usize, entity: &str) -> &[usize] {
        self.node_index
            .get(&(slot, entity.to_string()))
            .map(|&i| self.in_edges[i].as_slice())
            .unwrap_or(&[])
    }

    pub fn attr(&self, slot: usize, entity: &str, name: &str) -> Option<&str> {
        self.node(slot, entity)?.attrs.get(name).map(String::as_str)
    }

    pub fn grounded(&self, node: &NodeRef) -> GroundedEntity {
        GroundedEntity {
            entity: node.entity.clone(),
            slot: node.slot,
            box2d: self.node(node.slot, &node.entity).and_then(|n| n.box2d),
        }
    }

    pub fn has_temporal_edge(&self, entity: &str, from_slot: usize, to_slot: usize) -> bool {
        self.temporal_edges
            .iter()
            .any(|e| e.entity == entity && e.from_slot == from_slot && e.to_slot == to_slot)
    }
}

fn oriented_pose(node: &GraphNode) -> Option<Pose2D> {
    let b = node.box3d.as_ref()?;
    let heading = b.heading?;
    Some(Pose2D::new(b.center[0], b.center[1], heading))
}

/// Builds the graph for a scene already cut into slots. The scene is
/// assumed valid (see [`crate::scene::load_scene`]); geometry degeneracies
/// that validation cannot rule out (coincident centers) simply drop the
/// affected edge.
pub fn build_graph(
    scene: &SceneAnnotation,
    slots: &[TimeSlot],
    cfg: &RelationConfig,
) -> SceneGraph {
    let mut nodes = Vec::new();

    for slot in slots {
        let rep = slot.rep_frame;
        for entity in &scene.entities {
            let Some(fb) = scene.frame_box(&entity.id, rep) else { continue };
            let mut attrs = entity.static_attrs.clone();
            if let Some(dynamic) = entity.dynamic_attrs.get(&rep) {
                for (k, v) in dynamic {
                    attrs.insert(k.clone(), v.clone());
                }
            }
            nodes.push(GraphNode {
                entity: entity.id.clone(),
                slot: slot.index,
                class: entity.class,
                is_robot: false,
                attrs,
                box2d: fb.box2d,
                box3d: fb.box3d,
            });
        }
        if let Some(pose) = scene.robot_pose(rep) {
            nodes.push(GraphNode {
                entity: ROBOT_ID.to_string(),
                slot: slot.index,
                class: EntityClass::Object,
                is_robot: true,
                attrs: BTreeMap::new(),
                box2d: None,
                box3d: Some(Box3D::new(pose.position, ROBOT_DIMS, Some(pose.heading))),
            });
        }
    }

    let node_index: HashMap<(usize, String), usize> = nodes
        .iter()
        .enumerate()
        .map(|(i, n)| ((n.slot, n.entity.clone()), i))
        .collect();

    let mut spatial_edges = Vec::new();
    for slot in slots {
        let at_slot: Vec<usize> =
            (0..nodes.len()).filter(|&i| nodes[i].slot == slot.index).collect();
        for &ai in &at_slot {
            let Some(pose) = oriented_pose(&nodes[ai]) else { continue };
            for &bi in &at_slot {
                if ai == bi {
                    continue;
                }
                let Some(edge) = geometric_edge(scene, cfg, &nodes[ai], &nodes[bi], &pose)
                else {
                    continue;
                };
                spatial_edges.push(edge);
            }
        }
        for hoi in &scene.hoi {
            if !hoi.covers(slot.rep_frame) {
                continue;
            }
            let from = (slot.index, hoi.human.clone());
            let to = (slot.index, hoi.object.clone());
            if !node_index.contains_key(&from) || !node_index.contains_key(&to) {
                continue;
            }
            let payload = HoiPayload {
                verb: hoi.verb.clone(),
                category: hoi.category.clone(),
                difficulty: hoi.difficulty,
            };
            spatial_edges.push(SpatialEdge {
                slot: slot.index,
                from: hoi.human.clone(),
                to: hoi.object.clone(),
                kind: EdgeKind::Hoi,
                payload: EdgePayload::Interaction(payload.clone()),
            });
            if cfg.gaze_verbs.contains(&hoi.verb) {
                spatial_edges.push(SpatialEdge {
                    slot: slot.index,
                    from: hoi.human.clone(),
                    to: hoi.object.clone(),
                    kind: EdgeKind::Gaze,
                    payload: EdgePayload::Interaction(payload),
                });
            }
        }
    }

    // Consecutive appearances of each entity, skipping slots it is absent
    // from.
    let mut temporal_edges = Vec::new();
    let mut appearances: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for node in &nodes {
        appearances.entry(node.entity.as_str()).or_default().push(node.slot);
    }
    for (entity, mut slots_seen) in appearances {
        slots_seen.sort_unstable();
        for w in slots_seen.windows(2) {
            temporal_edges.push(TemporalEdge {
                entity: entity.to_string(),
                from_slot: w[0],
                to_slot: w[1],
            });
        }
    }

    let mut out_edges = vec![Vec::new(); nodes.len()];
    let mut in_edges = vec![Vec::new(); nodes.len()];
    for (i, edge) in spatial_edges.iter().enumerate() {
        let from = node_index[&(edge.slot, edge.from.clone())];
        let to = node_index[&(edge.slot, edge.to.clone())];
        out_edges[from].push(i);
        in_edges[to].push(i);
    }

    SceneGraph {
        scene_id: scene.scene_id.clone(),
        schema: scene.schema.clone(),
        slots: slots.to_vec(),
        nodes,
        spatial_edges,
        temporal_edges,
        node_index,
        out_edges,
        in_edges,
    }
}

fn geometric_edge(
    scene: &SceneAnnotation,
    cfg: &RelationConfig,
    from: &GraphNode,
    to: &GraphNode,
    pose: &Pose2D,
) -> Option<SpatialEdge> {
    let fb = from.box3d.as_ref()?;
    let tb = to.box3d.as_ref()?;
    let theta_deg = planar_angle(pose, [tb.center[0], tb.center[1]]).ok()?;
    let dz = tb.center[2] - fb.center[2];

    let both_human = !from.is_robot
        && !to.is_robot
        && from.class == EntityClass::Human
        && to.class == EntityClass::Human;
    let distance_m = if both_human {
        if cfg.surface_distance {
            box_surface_distance(fb, tb)
        } else {
            box_distance(fb, tb)
        }
    } else {
        match (entity_world_cloud(scene, from, fb), entity_world_cloud(scene, to, tb)) {
            (Some(a), Some(b)) => {
                let d = if cfg.symmetric_cloud {
                    cloud_distance(&a, &b, cfg.cloud_k)
                } else {
                    directed_cloud_distance(&a, &b, cfg.cloud_k)
                };
                d.expect("clouds validated non-empty")
            }
            _ => box_distance(fb, tb),
        }
    };
    if let Some(cutoff) = cfg.distance_cutoff {
        if distance_m > cutoff {
            return None;
        }
    }

    let mut relation = classify_direction(theta_deg, dz, cfg.tau_z);
    if cfg.force_vertical && relation.vertical == VerticalDirection::None {
        relation.vertical =
            if dz >= 0.0 { VerticalDirection::Up } else { VerticalDirection::Down };
    }
    let kind = if both_human { EdgeKind::Hhg } else { EdgeKind::Hog };
    Some(SpatialEdge {
        slot: from.slot,
        from: from.entity.clone(),
        to: to.entity.clone(),
        kind,
        payload: EdgePayload::Geometric(GeomPayload {
            theta_deg,
            distance_m,
            relation,
            distance_cat: classify_distance(distance_m),
        }),
    })
}

/// The entity's cloud shifted to its position at the node's slot. Robot
/// nodes have no cloud.
fn entity_world_cloud(
    scene: &SceneAnnotation,
    node: &GraphNode,
    b: &Box3D,
) -> Option<crate::geometry::PointCloud> {
    if node.is_robot {
        return None;
    }
    let cloud = scene.entity(&node.entity)?.cloud.as_ref()?;
    Some(cloud.translated(b.center))
}
