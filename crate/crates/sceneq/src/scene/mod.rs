//! Scene annotation data model: entities with attributes, per-frame boxes,
//! human-object interaction labels, robot poses, and the attribute schema
//! that closes the vocabulary.
//!
//! A scene file is a single JSON document; [`load_scene`] parses one and
//! rejects it unless [`validate`] comes back clean, so any scene obtained
//! through the loader is safe to feed to the rest of the crate. Video scenes
//! are cut into [`TimeSlot`]s by [`segment_slots`].
//!
//! Angles are degrees, lengths are meters, frame indices are 0-based, and
//! frame ranges are half-open `[start, end)`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::geometry::{Box2D, Box3D, PointCloud};

mod load;
mod slots;
mod validate;

pub use load::{load_scene, scene_from_str, LoadError};
pub use slots::{segment_slots, SlotError, SlotPolicy, TimeSlot};
pub use validate::{validate, ValidationReport, Violation, ViolationCode};

/// Entity id reserved for the data-collecting robot. The robot is described
/// by the `robot` pose track, never by an entry in `entities`.
pub const ROBOT_ID: &str = "robot";

/// The closed set of human-object interaction categories.
pub const HOI_CATEGORIES: [&str; 4] =
    ["pose_based", "observational", "physical", "manipulative"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Modality {
    Image,
    Video,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntityClass {
    Human,
    Object,
    Surface,
}

impl EntityClass {
    pub const ALL: [EntityClass; 3] =
        [EntityClass::Human, EntityClass::Object, EntityClass::Surface];

    pub fn name(&self) -> &'static str {
        match self {
            EntityClass::Human => "human",
            EntityClass::Object => "object",
            EntityClass::Surface => "surface",
        }
    }
}

/// How an attribute behaves over time. Static attributes hold for the whole
/// scene, dynamic ones are annotated per frame, relational ones name edge
/// kinds rather than node features.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttrKind {
    Static,
    Dynamic,
    Relational,
}

/// Declaration of one attribute: its temporal kind, the closed value
/// domain (empty for relational kinds), and whether every entity of the
/// class must carry it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributeDef {
    pub name: String,
    pub kind: AttrKind,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub values: Vec<String>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub required: bool,
}

/// Per-class attribute declarations. Everything the generator filters on or
/// relates through must be declared here; values outside a declared domain
/// fail validation.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct AttributeSchema {
    pub classes: BTreeMap<EntityClass, Vec<AttributeDef>>,
}

impl AttributeSchema {
    /// All declarations for a class, in declaration order.
    pub fn defs(&self, class: EntityClass) -> &[AttributeDef] {
        self.classes.get(&class).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn def(&self, class: EntityClass, name: &str) -> Option<&AttributeDef> {
        self.defs(class).iter().find(|d| d.name == name)
    }

    /// Static and dynamic declarations (the ones entities carry as values).
    pub fn node_attrs(&self, class: EntityClass) -> impl Iterator<Item = &AttributeDef> {
        self.defs(class).iter().filter(|d| d.kind != AttrKind::Relational)
    }

    pub fn relational(&self, class: EntityClass) -> impl Iterator<Item = &AttributeDef> {
        self.defs(class).iter().filter(|d| d.kind == AttrKind::Relational)
    }
}

/// One tracked instance. Dynamic attributes are keyed by frame index, then
/// by attribute name. A point cloud, when present, is stored relative to
/// the entity's 3D box center.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Entity {
    pub id: String,
    pub class: EntityClass,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub static_attrs: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub dynamic_attrs: BTreeMap<u32, BTreeMap<String, String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cloud: Option<PointCloud>,
}

/// Placement of one entity in one frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameBox {
    pub entity: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub box2d: Option<Box2D>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub box3d: Option<Box3D>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Frame {
    pub index: u32,
    #[serde(default)]
    pub boxes: Vec<FrameBox>,
}

/// A human-object interaction over a half-open frame range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HoiLabel {
    pub human: String,
    pub object: String,
    pub verb: String,
    pub category: String,
    /// Annotator-assigned difficulty: 1 easy, 2 medium, 3 hard.
    pub difficulty: u8,
    pub frames: [u32; 2],
}

impl HoiLabel {
    pub fn covers(&self, frame: u32) -> bool {
        frame >= self.frames[0] && frame < self.frames[1]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobotPose {
    pub frame: u32,
    pub position: [f64; 3],
    pub heading: f64,
}

/// One fully annotated scene as stored on disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneAnnotation {
    pub scene_id: String,
    pub modality: Modality,
    pub schema: AttributeSchema,
    #[serde(default)]
    pub entities: Vec<Entity>,
    #[serde(default)]
    pub frames: Vec<Frame>,
    #[serde(default)]
    pub hoi: Vec<HoiLabel>,
    #[serde(default)]
    pub robot: Vec<RobotPose>,
    /// Optional hand-authored slot boundaries, each `[start, end)`. Only
    /// consulted under [`SlotPolicy::Authored`].
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub slots: Vec<[u32; 2]>,
}

impl SceneAnnotation {
    pub fn entity(&self, id: &str) -> Option<&Entity> {
        self.entities.iter().find(|e| e.id == id)
    }

    pub fn frame(&self, index: u32) -> Option<&Frame> {
        self.frames.iter().find(|f| f.index == index)
    }

    /// Annotated frame indices, sorted and de-duplicated.
    pub fn frame_indices(&self) -> Vec<u32> {
        let mut idx: Vec<u32> = self.frames.iter().map(|f| f.index).collect();
        idx.sort_unstable();
        idx.dedup();
        idx
    }

    /// Half-open range spanned by the annotated frames.
    pub fn frame_range(&self) -> Option<(u32, u32)> {
        let idx = self.frame_indices();
        match (idx.first(), idx.last()) {
            (Some(&lo), Some(&hi)) => Some((lo, hi + 1)),
            _ => None,
        }
    }

    pub fn frame_box(&self, entity: &str, frame: u32) -> Option<&FrameBox> {
        self.frame(frame)?.boxes.iter().find(|b| b.entity == entity)
    }

    pub fn box2d(&self, entity: &str, frame: u32) -> Option<&Box2D> {
        self.frame_box(entity, frame)?.box2d.as_ref()
    }

    pub fn box3d(&self, entity: &str, frame: u32) -> Option<&Box3D> {
        self.frame_box(entity, frame)?.box3d.as_ref()
    }

    pub fn robot_pose(&self, frame: u32) -> Option<&RobotPose> {
        self.robot.iter().find(|p| p.frame == frame)
    }

    /// Attribute value of an entity at a frame; static values win over
    /// dynamic ones (the schema keeps the two name sets disjoint).
    pub fn attr_at<'a>(&self, entity: &'a Entity, frame: u32, name: &str) -> Option<&'a str> {
        if let Some(v) = entity.static_attrs.get(name) {
            return Some(v);
        }
        entity.dynamic_attrs.get(&frame)?.get(name).map(String::as_str)
    }

    /// Whether the entity has any box in the given frame.
    pub fn present(&self, entity: &str, frame: u32) -> bool {
        self.frame_box(entity, frame).is_some()
    }
}
