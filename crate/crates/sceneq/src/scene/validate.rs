//! Structural validation of scene annotations.
//!
//! [`validate`] never fails early; it walks the whole scene and reports
//! every violation it can find, so annotation tooling can show them all at
//! once. The loader refuses scenes with a non-empty report.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{
    AttrKind, EntityClass, Modality, SceneAnnotation, HOI_CATEGORIES, ROBOT_ID,
};

/// The edge kinds the graph builder knows how to materialize. Relational
/// schema entries outside this set could never produce an edge, so they are
/// rejected up front.
pub(crate) const EDGE_KINDS: [&str; 4] = ["hoi", "gaze", "hhg", "hog"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationCode {
    // Schema table.
    DuplicateAttributeDef,
    EmptyValueDomain,
    UnsupportedRelationalKind,
    // Entities.
    DuplicateEntityId,
    ReservedEntityId,
    UnknownAttribute,
    AttributeKindMisuse,
    ValueOutsideDomain,
    MissingRequiredAttribute,
    UnknownDynamicFrame,
    EmptyPointCloud,
    // Frames and boxes.
    NoFrames,
    ModalityFrameCount,
    DuplicateFrameIndex,
    DuplicateBoxEntity,
    UnknownBoxEntity,
    InvalidBoxGeometry,
    InvalidHeading,
    // Interactions.
    UnknownHoiEntity,
    HoiClassMismatch,
    UnknownHoiCategory,
    InvalidHoiDifficulty,
    InvalidHoiFrameRange,
    // Robot track.
    DuplicateRobotFrame,
    InvalidRobotPose,
    // Authored slots.
    InvalidSlotRange,
    UnorderedSlots,
    OverlappingSlots,
}

impl ViolationCode {
    /// Violations caused by ids or frame keys that fail to resolve.
    pub fn is_reference(&self) -> bool {
        matches!(
            self,
            ViolationCode::UnknownBoxEntity
                | ViolationCode::UnknownHoiEntity
                | ViolationCode::HoiClassMismatch
                | ViolationCode::UnknownDynamicFrame
        )
    }

    /// Violations of the attribute schema or its closed vocabularies.
    pub fn is_schema(&self) -> bool {
        matches!(
            self,
            ViolationCode::DuplicateAttributeDef
                | ViolationCode::EmptyValueDomain
                | ViolationCode::UnsupportedRelationalKind
                | ViolationCode::UnknownAttribute
                | ViolationCode::AttributeKindMisuse
                | ViolationCode::ValueOutsideDomain
                | ViolationCode::MissingRequiredAttribute
                | ViolationCode::UnknownHoiCategory
                | ViolationCode::InvalidHoiDifficulty
        )
    }

    pub fn name(&self) -> &'static str {
        match self {
            ViolationCode::DuplicateAttributeDef => "duplicate_attribute_def",
            ViolationCode::EmptyValueDomain => "empty_value_domain",
            ViolationCode::UnsupportedRelationalKind => "unsupported_relational_kind",
            ViolationCode::DuplicateEntityId => "duplicate_entity_id",
            ViolationCode::ReservedEntityId => "reserved_entity_id",
            ViolationCode::UnknownAttribute => "unknown_attribute",
            ViolationCode::AttributeKindMisuse => "attribute_kind_misuse",
            ViolationCode::ValueOutsideDomain => "value_outside_domain",
            ViolationCode::MissingRequiredAttribute => "missing_required_attribute",
            ViolationCode::UnknownDynamicFrame => "unknown_dynamic_frame",
            ViolationCode::EmptyPointCloud => "empty_point_cloud",
            ViolationCode::NoFrames => "no_frames",
            ViolationCode::ModalityFrameCount => "modality_frame_count",
            ViolationCode::DuplicateFrameIndex => "duplicate_frame_index",
            ViolationCode::DuplicateBoxEntity => "duplicate_box_entity",
            ViolationCode::UnknownBoxEntity => "unknown_box_entity",
            ViolationCode::InvalidBoxGeometry => "invalid_box_geometry",
            ViolationCode::InvalidHeading => "invalid_heading",
            ViolationCode::UnknownHoiEntity => "unknown_hoi_entity",
            ViolationCode::HoiClassMismatch => "hoi_class_mismatch",
            ViolationCode::UnknownHoiCategory => "unknown_hoi_category",
            ViolationCode::InvalidHoiDifficulty => "invalid_hoi_difficulty",
            ViolationCode::InvalidHoiFrameRange => "invalid_hoi_frame_range",
            ViolationCode::DuplicateRobotFrame => "duplicate_robot_frame",
            ViolationCode::InvalidRobotPose => "invalid_robot_pose",
            ViolationCode::InvalidSlotRange => "invalid_slot_range",
            ViolationCode::UnorderedSlots => "unordered_slots",
            ViolationCode::OverlappingSlots => "overlapping_slots",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub code: ViolationCode,
    /// What the violation is about, e.g. `entity p3` or `hoi[2]`.
    pub subject: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}] {}: {}", self.code.name(), self.subject, self.message)
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn len(&self) -> usize {
        self.violations.len()
    }

    pub fn has(&self, code: ViolationCode) -> bool {
        self.violations.iter().any(|v| v.code == code)
    }

    fn push(&mut self, code: ViolationCode, subject: impl Into<String>, message: impl Into<String>) {
        self.violations.push(Violation { code, subject: subject.into(), message: message.into() });
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

fn heading_ok(h: f64) -> bool {
    h.is_finite() && h > -180.0 && h <= 180.0
}

/// Checks a scene against its own schema and the structural rules of the
/// format. A clean report means every id resolves, every attribute value is
/// inside its declared domain, and every geometric quantity is usable.
pub fn validate(scene: &SceneAnnotation) -> ValidationReport {
    let mut report = ValidationReport::default();
    check_schema(scene, &mut report);
    check_frames(scene, &mut report);
    check_entities(scene, &mut report);
    check_hoi(scene, &mut report);
    check_robot(scene, &mut report);
    check_slots(scene, &mut report);
    report
}

fn check_schema(scene: &SceneAnnotation, report: &mut ValidationReport) {
    for (&class, defs) in &scene.schema.classes {
        let mut seen = BTreeSet::new();
        for def in defs {
            let subject = format!("schema {}.{}", class.name(), def.name);
            if !seen.insert(def.name.clone()) {
                report.push(
                    ViolationCode::DuplicateAttributeDef,
                    &subject,
                    "attribute declared more than once for this class",
                );
            }
            match def.kind {
                AttrKind::Relational => {
                    if !EDGE_KINDS.contains(&def.name.as_str()) {
                        report.push(
                            ViolationCode::UnsupportedRelationalKind,
                            &subject,
                            format!(
                                "relational attribute must be one of {}",
                                EDGE_KINDS.join(", ")
                            ),
                        );
                    }
                }
                _ => {
                    if def.values.is_empty() {
                        report.push(
                            ViolationCode::EmptyValueDomain,
                            &subject,
                            "node attribute needs a non-empty value domain",
                        );
                    }
                }
            }
        }
    }
}

fn check_frames(scene: &SceneAnnotation, report: &mut ValidationReport) {
    if scene.frames.is_empty() {
        report.push(ViolationCode::NoFrames, "frames", "scene has no annotated frames");
    }
    if scene.modality == Modality::Image && scene.frames.len() != 1 {
        report.push(
            ViolationCode::ModalityFrameCount,
            "frames",
            format!("image scenes carry exactly one frame, found {}", scene.frames.len()),
        );
    }
    let ids: BTreeSet<&str> = scene.entities.iter().map(|e| e.id.as_str()).collect();
    let mut seen_frames = BTreeSet::new();
    for frame in &scene.frames {
        let fsub = format!("frame {}", frame.index);
        if !seen_frames.insert(frame.index) {
            report.push(ViolationCode::DuplicateFrameIndex, &fsub, "frame index repeats");
        }
        let mut seen_entities = BTreeSet::new();
        for b in &frame.boxes {
            let subject = format!("{fsub}, entity {}", b.entity);
            if !seen_entities.insert(b.entity.as_str()) {
                report.push(
                    ViolationCode::DuplicateBoxEntity,
                    &subject,
                    "entity boxed twice in one frame",
                );
            }
            if !ids.contains(b.entity.as_str()) {
                report.push(
                    ViolationCode::UnknownBoxEntity,
                    &subject,
                    "box refers to an entity the scene does not declare",
                );
            }
            if let Some(b2) = &b.box2d {
                let finite = [b2.x, b2.y, b2.w, b2.h].iter().all(|v| v.is_finite());
                if !finite || b2.w <= 0.0 || b2.h <= 0.0 {
                    report.push(
                        ViolationCode::InvalidBoxGeometry,
                        &subject,
                        "2D box needs finite coordinates and positive extent",
                    );
                }
            }
            if let Some(b3) = &b.box3d {
                let finite = b3.center.iter().chain(b3.dims.iter()).all(|v| v.is_finite());
                if !finite || b3.dims.iter().any(|&d| d <= 0.0) {
                    report.push(
                        ViolationCode::InvalidBoxGeometry,
                        &subject,
                        "3D box needs finite coordinates and positive dimensions",
                    );
                }
                if let Some(h) = b3.heading {
                    if !heading_ok(h) {
                        report.push(
                            ViolationCode::InvalidHeading,
                            &subject,
                            format!("heading {h} is outside (-180, 180]"),
                        );
                    }
                }
            }
        }
    }
}

fn check_entities(scene: &SceneAnnotation, report: &mut ValidationReport) {
    let frame_set: BTreeSet<u32> = scene.frames.iter().map(|f| f.index).collect();
    let mut seen = BTreeSet::new();
    for entity in &scene.entities {
        let subject = format!("entity {}", entity.id);
        if !seen.insert(entity.id.as_str()) {
            report.push(ViolationCode::DuplicateEntityId, &subject, "entity id repeats");
        }
        if entity.id == ROBOT_ID {
            report.push(
                ViolationCode::ReservedEntityId,
                &subject,
                "the robot is described by the `robot` pose track, not an entity",
            );
        }
        for (name, value) in &entity.static_attrs {
            check_attr_value(scene, entity.class, name, value, AttrKind::Static, &subject, report);
        }
        for (&frame, attrs) in &entity.dynamic_attrs {
            if !frame_set.contains(&frame) {
                report.push(
                    ViolationCode::UnknownDynamicFrame,
                    format!("{subject}, frame {frame}"),
                    "dynamic attribute keyed by a frame the scene does not annotate",
                );
            }
            for (name, value) in attrs {
                check_attr_value(
                    scene,
                    entity.class,
                    name,
                    value,
                    AttrKind::Dynamic,
                    &format!("{subject}, frame {frame}"),
                    report,
                );
            }
        }
        for def in scene.schema.defs(entity.class) {
            if !def.required {
                continue;
            }
            match def.kind {
                AttrKind::Static => {
                    if !entity.static_attrs.contains_key(&def.name) {
                        report.push(
                            ViolationCode::MissingRequiredAttribute,
                            &subject,
                            format!("required static attribute `{}` is missing", def.name),
                        );
                    }
                }
                AttrKind::Dynamic => {
                    for frame in &scene.frames {
                        let present = frame.boxes.iter().any(|b| b.entity == entity.id);
                        let has = entity
                            .dynamic_attrs
                            .get(&frame.index)
                            .is_some_and(|m| m.contains_key(&def.name));
                        if present && !has {
                            report.push(
                                ViolationCode::MissingRequiredAttribute,
                                format!("{subject}, frame {}", frame.index),
                                format!("required dynamic attribute `{}` is missing", def.name),
                            );
                        }
                    }
                }
                AttrKind::Relational => {}
            }
        }
        if let Some(cloud) = &entity.cloud {
            if cloud.is_empty() {
                report.push(
                    ViolationCode::EmptyPointCloud,
                    &subject,
                    "a declared point cloud must contain at least one point",
                );
            }
        }
    }
}

fn check_attr_value(
    scene: &SceneAnnotation,
    class: EntityClass,
    name: &str,
    value: &str,
    expected_kind: AttrKind,
    subject: &str,
    report: &mut ValidationReport,
) {
    match scene.schema.def(class, name) {
        None => report.push(
            ViolationCode::UnknownAttribute,
            subject,
            format!("attribute `{name}` is not declared for class {}", class.name()),
        ),
        Some(def) if def.kind != expected_kind => report.push(
            ViolationCode::AttributeKindMisuse,
            subject,
            format!(
                "attribute `{name}` is declared {:?} but used as {:?}",
                def.kind, expected_kind
            ),
        ),
        Some(def) => {
            if !def.values.iter().any(|v| v == value) {
                report.push(
                    ViolationCode::ValueOutsideDomain,
                    subject,
                    format!("value `{value}` is outside the domain of `{name}`"),
                );
            }
        }
    }
}

fn check_hoi(scene: &SceneAnnotation, report: &mut ValidationReport) {
    for (i, hoi) in scene.hoi.iter().enumerate() {
        let subject = format!("hoi[{i}]");
        match scene.entity(&hoi.human) {
            None => report.push(
                ViolationCode::UnknownHoiEntity,
                &subject,
                format!("human id `{}` does not resolve", hoi.human),
            ),
            Some(e) if e.class != EntityClass::Human => report.push(
                ViolationCode::HoiClassMismatch,
                &subject,
                format!("`{}` is not a human", hoi.human),
            ),
            Some(_) => {}
        }
        if hoi.object == ROBOT_ID {
            if scene.robot.is_empty() {
                report.push(
                    ViolationCode::UnknownHoiEntity,
                    &subject,
                    "interaction targets the robot but the scene has no robot track",
                );
            }
        } else {
            match scene.entity(&hoi.object) {
                None => report.push(
                    ViolationCode::UnknownHoiEntity,
                    &subject,
                    format!("object id `{}` does not resolve", hoi.object),
                ),
                Some(e) if e.class != EntityClass::Object => report.push(
                    ViolationCode::HoiClassMismatch,
                    &subject,
                    format!("`{}` is not an object", hoi.object),
                ),
                Some(_) => {}
            }
        }
        if !HOI_CATEGORIES.contains(&hoi.category.as_str()) {
            report.push(
                ViolationCode::UnknownHoiCategory,
                &subject,
                format!("category `{}` is not one of {}", hoi.category, HOI_CATEGORIES.join(", ")),
            );
        }
        if !(1..=3).contains(&hoi.difficulty) {
            report.push(
                ViolationCode::InvalidHoiDifficulty,
                &subject,
                format!("difficulty {} is outside 1..=3", hoi.difficulty),
            );
        }
        if hoi.frames[0] >= hoi.frames[1] {
            report.push(
                ViolationCode::InvalidHoiFrameRange,
                &subject,
                format!("frame range [{}, {}) is empty", hoi.frames[0], hoi.frames[1]),
            );
        }
    }
}

fn check_robot(scene: &SceneAnnotation, report: &mut ValidationReport) {
    let mut seen = BTreeSet::new();
    for (i, pose) in scene.robot.iter().enumerate() {
        let subject = format!("robot[{i}]");
        if !seen.insert(pose.frame) {
            report.push(ViolationCode::DuplicateRobotFrame, &subject, "pose frame repeats");
        }
        if !pose.position.iter().all(|v| v.is_finite()) || !heading_ok(pose.heading) {
            report.push(
                ViolationCode::InvalidRobotPose,
                &subject,
                "pose needs finite position and heading in (-180, 180]",
            );
        }
    }
}

fn check_slots(scene: &SceneAnnotation, report: &mut ValidationReport) {
    for (i, s) in scene.slots.iter().enumerate() {
        if s[0] >= s[1] {
            report.push(
                ViolationCode::InvalidSlotRange,
                format!("slots[{i}]"),
                format!("slot range [{}, {}) is empty", s[0], s[1]),
            );
        }
    }
    for (i, pair) in scene.slots.windows(2).enumerate() {
        if pair[1][0] < pair[0][0] {
            report.push(
                ViolationCode::UnorderedSlots,
                format!("slots[{}]", i + 1),
                "authored slots must be sorted by start frame",
            );
        } else if pair[1][0] < pair[0][1] {
            report.push(
                ViolationCode::OverlappingSlots,
                format!("slots[{}]", i + 1),
                format!(
                    "slot [{}, {}) overlaps the previous slot [{}, {})",
                    pair[1][0], pair[1][1], pair[0][0], pair[0][1]
                ),
            );
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::{AttributeDef, Entity};
    use crate::synth;

    #[test]
    fn demo_scene_is_clean() {
        let report = validate(&synth::demo_scene());
        assert!(report.is_empty(), "unexpected violations:\n{report}");
    }

    #[test]
    fn synthetic_scenes_are_clean() {
        for seed in 0..20 {
            let scene = synth::synth_scene(&synth::SynthSpec::default(), seed);
            let report = validate(&scene);
            assert!(report.is_empty(), "seed {seed}:\n{report}");
        }
    }

    #[test]
    fn value_outside_domain_is_flagged() {
        let mut scene = synth::demo_scene();
        scene.entities[0].static_attrs.insert("gender".into(), "unknown".into());
        let report = validate(&scene);
        assert!(report.has(ViolationCode::ValueOutsideDomain), "{report}");
    }

    #[test]
    fn undeclared_attribute_is_flagged() {
        let mut scene = synth::demo_scene();
        scene.entities[0].static_attrs.insert("mood".into(), "cheerful".into());
        assert!(validate(&scene).has(ViolationCode::UnknownAttribute));
    }

    #[test]
    fn static_attr_used_dynamically_is_flagged() {
        let mut scene = synth::demo_scene();
        scene.entities[0]
            .dynamic_attrs
            .entry(0)
            .or_default()
            .insert("gender".into(), "female".into());
        assert!(validate(&scene).has(ViolationCode::AttributeKindMisuse));
    }

    #[test]
    fn missing_required_attribute_is_flagged() {
        let mut scene = synth::demo_scene();
        scene.entities[0].static_attrs.remove("gender");
        assert!(validate(&scene).has(ViolationCode::MissingRequiredAttribute));
    }

    #[test]
    fn missing_required_dynamic_attribute_is_flagged() {
        let mut scene = synth::demo_scene();
        for def in scene.schema.classes.get_mut(&EntityClass::Human).unwrap() {
            if def.name == "action" {
                def.required = true;
            }
        }
        let p1 = scene.entities.iter_mut().find(|e| e.id == "p1").unwrap();
        p1.dynamic_attrs.get_mut(&0).unwrap().remove("action");
        assert!(validate(&scene).has(ViolationCode::MissingRequiredAttribute));
    }

    #[test]
    fn dangling_box_entity_is_a_reference_violation() {
        let mut scene = synth::demo_scene();
        scene.frames[0].boxes[0].entity = "p99".into();
        let report = validate(&scene);
        assert!(report.has(ViolationCode::UnknownBoxEntity));
        assert!(report
            .violations
            .iter()
            .any(|v| v.code == ViolationCode::UnknownBoxEntity && v.code.is_reference()));
    }

    #[test]
    fn hoi_difficulty_and_category_are_closed() {
        let mut scene = synth::demo_scene();
        scene.hoi[0].difficulty = 4;
        scene.hoi[0].category = "telepathic".into();
        let report = validate(&scene);
        assert!(report.has(ViolationCode::InvalidHoiDifficulty));
        assert!(report.has(ViolationCode::UnknownHoiCategory));
    }

    #[test]
    fn hoi_with_human_as_object_is_flagged() {
        let mut scene = synth::demo_scene();
        scene.hoi[0].object = "p2".into();
        assert!(validate(&scene).has(ViolationCode::HoiClassMismatch));
    }

    #[test]
    fn hoi_against_missing_robot_track_is_flagged() {
        let mut scene = synth::demo_scene();
        scene.robot.clear();
        // demo_scene has a gaze interaction targeting the robot.
        assert!(validate(&scene).has(ViolationCode::UnknownHoiEntity));
    }

    #[test]
    fn reserved_robot_id_is_flagged() {
        let mut scene = synth::demo_scene();
        scene.entities.push(Entity {
            id: ROBOT_ID.into(),
            class: EntityClass::Object,
            static_attrs: [("category".to_string(), "cup".to_string())].into(),
            dynamic_attrs: Default::default(),
            cloud: None,
        });
        assert!(validate(&scene).has(ViolationCode::ReservedEntityId));
    }

    #[test]
    fn image_scene_with_two_frames_is_flagged() {
        let mut scene = synth::demo_scene();
        let mut extra = scene.frames[0].clone();
        extra.index = 1;
        scene.frames.push(extra);
        let report = validate(&scene);
        assert!(report.has(ViolationCode::ModalityFrameCount));
    }

    #[test]
    fn overlapping_authored_slots_are_flagged() {
        let mut scene = synth::synth_scene(
            &synth::SynthSpec { frames: 30, ..synth::SynthSpec::video() },
            5,
        );
        scene.slots = vec![[0, 20], [10, 30]];
        assert!(validate(&scene).has(ViolationCode::OverlappingSlots));
        scene.slots = vec![[10, 20], [0, 10]];
        assert!(validate(&scene).has(ViolationCode::UnorderedSlots));
        scene.slots = vec![[5, 5]];
        assert!(validate(&scene).has(ViolationCode::InvalidSlotRange));
        scene.slots = vec![[0, 15], [15, 30]];
        assert!(validate(&scene).is_empty());
    }

    #[test]
    fn bad_heading_and_degenerate_boxes_are_flagged() {
        let mut scene = synth::demo_scene();
        {
            let b = scene.frames[0].boxes.first_mut().unwrap();
            b.box3d.as_mut().unwrap().heading = Some(-180.0);
        }
        assert!(validate(&scene).has(ViolationCode::InvalidHeading));

        let mut scene = synth::demo_scene();
        scene.frames[0].boxes[0].box2d.as_mut().unwrap().w = 0.0;
        assert!(validate(&scene).has(ViolationCode::InvalidBoxGeometry));
    }

    #[test]
    fn dynamic_attr_on_unannotated_frame_is_flagged() {
        let mut scene = synth::demo_scene();
        scene.entities[0]
            .dynamic_attrs
            .entry(7)
            .or_default()
            .insert("action".into(), "walking".into());
        assert!(validate(&scene).has(ViolationCode::UnknownDynamicFrame));
    }

    #[test]
    fn relational_names_outside_the_edge_set_are_flagged() {
        let mut scene = synth::demo_scene();
        scene.schema.classes.get_mut(&EntityClass::Human).unwrap().push(AttributeDef {
            name: "telepathy".into(),
            kind: AttrKind::Relational,
            values: vec![],
            required: false,
        });
        assert!(validate(&scene).has(ViolationCode::UnsupportedRelationalKind));
    }

    #[test]
    fn empty_cloud_is_flagged() {
        let mut scene = synth::demo_scene();
        scene.entities[0].cloud = Some(crate::geometry::PointCloud(vec![]));
        assert!(validate(&scene).has(ViolationCode::EmptyPointCloud));
    }
}
