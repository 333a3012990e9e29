//! Shared oracles for the integration suites.
//!
//! The centerpiece is a naive interpreter that answers question programs by
//! rescanning the raw annotation: no scene graph, no edge indices, no
//! KD-tree, and its own reading of the direction and distance tables. The
//! suites hold the library to byte-agreement with it.

use std::collections::BTreeSet;

use sceneq::config::GenConfig;
use sceneq::scene::{segment_slots, Entity, EntityClass, SceneAnnotation, TimeSlot, ROBOT_ID};
use sceneq::stgraph::{
    Answer, EdgeDirection, EdgeKind, EdgePredicate, NodeRef, QuestionProgram, ReferenceSpec,
    StepOp,
};

/// Independent reading of the direction table. Bands close on the side the
/// table prints them: front owns both 30-degree boundaries, the left chain
/// owns its upper bounds, the right chain its lower bounds.
pub fn sector(theta: f64) -> &'static str {
    if (-30.0..=30.0).contains(&theta) {
        "front"
    } else if theta > 30.0 && theta <= 45.0 {
        "front_left"
    } else if theta > 45.0 && theta <= 135.0 {
        "left"
    } else if theta > 135.0 && theta <= 145.0 {
        "back_left"
    } else if theta >= -45.0 && theta < -30.0 {
        "front_right"
    } else if theta >= -135.0 && theta < -45.0 {
        "right"
    } else if theta >= -145.0 && theta < -135.0 {
        "back_right"
    } else {
        "back"
    }
}

/// Independent reading of the distance bands.
pub fn distance_band(d: f64) -> &'static str {
    if d < 0.5 {
        "very_close"
    } else if d < 1.5 {
        "close"
    } else if d < 5.0 {
        "moderate"
    } else if d < 10.0 {
        "far"
    } else {
        "very_far"
    }
}

/// Wraps into `(-180, 180]` and folds `-0.0` away.
pub fn wrap_deg(angle: f64) -> f64 {
    let mut a = angle % 360.0;
    if a <= -180.0 {
        a += 360.0;
    } else if a > 180.0 {
        a -= 360.0;
    }
    a + 0.0
}

pub fn dist3(a: [f64; 3], b: [f64; 3]) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    let dz = a[2] - b[2];
    (dx * dx + dy * dy + dz * dz).sqrt()
}

/// All-pairs directed cloud distance: per point of `a`, the mean of its
/// `min(k, |b|)` smallest distances into `b`. One flat accumulator in
/// ascending order per query, so the sum rounds the same way however the
/// neighbours were found.
pub fn brute_directed(a: &[[f64; 3]], b: &[[f64; 3]], k: usize) -> f64 {
    let per = k.min(b.len());
    let mut sum = 0.0;
    for &p in a {
        let mut ds: Vec<f64> = b.iter().map(|&q| dist3(p, q)).collect();
        ds.sort_by(f64::total_cmp);
        for &d in &ds[..per] {
            sum += d;
        }
    }
    sum / (a.len() * per) as f64
}

pub fn brute_symmetric(a: &[[f64; 3]], b: &[[f64; 3]], k: usize) -> f64 {
    (brute_directed(a, b, k) + brute_directed(b, a, k)) / 2.0
}

/// [`Answer`] over plain `(entity, slot)` pairs.
#[derive(Debug, Clone, PartialEq)]
pub enum NaiveAnswer {
    Entities(BTreeSet<(String, usize)>),
    Count(u64),
    Value(String),
    Bool(bool),
}

pub struct NaiveResult {
    pub sets: Vec<BTreeSet<(String, usize)>>,
    pub answer: NaiveAnswer,
}

pub fn to_pairs(set: &BTreeSet<NodeRef>) -> BTreeSet<(String, usize)> {
    set.iter().map(|n| (n.entity.clone(), n.slot)).collect()
}

pub fn answer_to_naive(answer: &Answer) -> NaiveAnswer {
    match answer {
        Answer::Entities(set) => NaiveAnswer::Entities(to_pairs(set)),
        Answer::Count(n) => NaiveAnswer::Count(*n),
        Answer::Value(v) => NaiveAnswer::Value(v.clone()),
        Answer::Bool(b) => NaiveAnswer::Bool(*b),
    }
}

struct Ctx<'a> {
    scene: &'a SceneAnnotation,
    cfg: &'a GenConfig,
    slots: Vec<TimeSlot>,
}

impl Ctx<'_> {
    fn rep(&self, slot: usize) -> u32 {
        self.slots[slot].rep_frame
    }

    fn entity(&self, id: &str) -> Option<&Entity> {
        self.scene.entity(id)
    }

    fn present(&self, id: &str, slot: usize) -> bool {
        if id == ROBOT_ID {
            self.scene.robot_pose(self.rep(slot)).is_some()
        } else {
            self.scene.frame_box(id, self.rep(slot)).is_some()
        }
    }

    fn attr(&self, id: &str, slot: usize, name: &str) -> Option<String> {
        if !self.present(id, slot) {
            return None;
        }
        let e = self.entity(id)?;
        if let Some(v) = e.static_attrs.get(name) {
            return Some(v.clone());
        }
        e.dynamic_attrs.get(&self.rep(slot))?.get(name).cloned()
    }

    fn center(&self, id: &str, slot: usize) -> Option<[f64; 3]> {
        if id == ROBOT_ID {
            return self.scene.robot_pose(self.rep(slot)).map(|p| p.position);
        }
        Some(self.scene.frame_box(id, self.rep(slot))?.box3d.as_ref()?.center)
    }

    fn heading(&self, id: &str, slot: usize) -> Option<f64> {
        if id == ROBOT_ID {
            return self.scene.robot_pose(self.rep(slot)).map(|p| p.heading);
        }
        self.scene.frame_box(id, self.rep(slot))?.box3d.as_ref()?.heading
    }

    fn is_human(&self, id: &str) -> bool {
        id != ROBOT_ID && self.entity(id).is_some_and(|e| e.class == EntityClass::Human)
    }

    fn theta(&self, from: &str, to: &str, slot: usize) -> Option<f64> {
        let h = wrap_deg(self.heading(from, slot)?).to_radians();
        let fc = self.center(from, slot)?;
        let tc = self.center(to, slot)?;
        let (dx, dy) = (tc[0] - fc[0], tc[1] - fc[1]);
        if dx == 0.0 && dy == 0.0 {
            return None;
        }
        let (fx, fy) = (h.cos(), h.sin());
        Some(wrap_deg((fx * dy - fy * dx).atan2(fx * dx + fy * dy).to_degrees()))
    }

    fn world_cloud(&self, id: &str, slot: usize) -> Option<Vec<[f64; 3]>> {
        if id == ROBOT_ID {
            return None;
        }
        let cloud = self.entity(id)?.cloud.as_ref()?;
        let c = self.center(id, slot)?;
        Some(cloud.0.iter().map(|p| [p[0] + c[0], p[1] + c[1], p[2] + c[2]]).collect())
    }

    fn distance(&self, from: &str, to: &str, slot: usize) -> Option<f64> {
        let fc = self.center(from, slot)?;
        let tc = self.center(to, slot)?;
        if self.is_human(from) && self.is_human(to) {
            assert!(
                !self.cfg.relations.surface_distance,
                "the oracle only mirrors center distances"
            );
            return Some(dist3(fc, tc));
        }
        match (self.world_cloud(from, slot), self.world_cloud(to, slot)) {
            (Some(a), Some(b)) => {
                let k = self.cfg.relations.cloud_k;
                Some(if self.cfg.relations.symmetric_cloud {
                    brute_symmetric(&a, &b, k)
                } else {
                    brute_directed(&a, &b, k)
                })
            }
            _ => Some(dist3(fc, tc)),
        }
    }

    fn geometric_matches(
        &self,
        from: &str,
        to: &str,
        slot: usize,
        kind: EdgeKind,
        predicate: &EdgePredicate,
    ) -> bool {
        if from == to || !self.present(from, slot) || !self.present(to, slot) {
            return false;
        }
        let both_human = self.is_human(from) && self.is_human(to);
        let expected = if both_human { EdgeKind::Hhg } else { EdgeKind::Hog };
        if kind != expected {
            return false;
        }
        let Some(theta) = self.theta(from, to, slot) else { return false };
        let Some(d) = self.distance(from, to, slot) else { return false };
        if let Some(cutoff) = self.cfg.relations.distance_cutoff {
            if d > cutoff {
                return false;
            }
        }
        match predicate {
            EdgePredicate::Planar(dir) => sector(theta) == dir.name(),
            EdgePredicate::Distance(cat) => distance_band(d) == cat.name(),
            EdgePredicate::Verb(_) => false,
        }
    }

    fn interaction_matches(
        &self,
        from: &str,
        to: &str,
        slot: usize,
        kind: EdgeKind,
        predicate: &EdgePredicate,
    ) -> bool {
        let EdgePredicate::Verb(verb) = predicate else { return false };
        if !self.present(from, slot) || !self.present(to, slot) {
            return false;
        }
        self.scene.hoi.iter().any(|h| {
            h.human == from
                && h.object == to
                && h.covers(self.rep(slot))
                && h.verb == *verb
                && match kind {
                    EdgeKind::Hoi => true,
                    EdgeKind::Gaze => self.cfg.relations.gaze_verbs.contains(&h.verb),
                    _ => false,
                }
        })
    }

    fn reference_matches(&self, spec: &ReferenceSpec, id: &str, slot: usize) -> bool {
        if !self.present(id, slot) {
            return false;
        }
        match spec {
            ReferenceSpec::Entity { id: want } => want == id,
            ReferenceSpec::Filtered { class, attrs } => {
                id != ROBOT_ID
                    && self.entity(id).is_some_and(|e| e.class == *class)
                    && attrs.iter().all(|(k, v)| self.attr(id, slot, k).as_deref() == Some(v))
            }
        }
    }
}

/// Evaluates a program against the raw annotation, mirroring the published
/// step semantics. Assumes a program the library's validator accepts.
pub fn naive_eval(
    scene: &SceneAnnotation,
    cfg: &GenConfig,
    program: &QuestionProgram,
) -> NaiveResult {
    let slots = segment_slots(scene, &cfg.slot_policy).expect("segmentable scene");
    let ctx = Ctx { scene, cfg, slots };

    let mut ids: Vec<&str> = scene.entities.iter().map(|e| e.id.as_str()).collect();
    ids.push(ROBOT_ID);

    let mut sets: Vec<BTreeSet<(String, usize)>> = Vec::new();
    let mut current: BTreeSet<(String, usize)> = BTreeSet::new();
    let mut answer: Option<NaiveAnswer> = None;

    for step in &program.steps {
        match step {
            StepOp::Select { class } => {
                current = scene
                    .entities
                    .iter()
                    .filter(|e| e.class == *class)
                    .flat_map(|e| {
                        program
                            .target_slots
                            .iter()
                            .filter(|&&s| ctx.present(&e.id, s))
                            .map(|&s| (e.id.clone(), s))
                            .collect::<Vec<_>>()
                    })
                    .collect();
                sets.push(current.clone());
            }
            StepOp::Filter { attr, value, slot } => {
                current.retain(|(id, node_slot)| {
                    let probe = slot.unwrap_or(*node_slot);
                    ctx.attr(id, probe, attr).as_deref() == Some(value)
                });
                sets.push(current.clone());
            }
            StepOp::Relate { kind, predicate, reference, direction, slot } => {
                current.retain(|(id, node_slot)| {
                    let probe = slot.unwrap_or(*node_slot);
                    ids.iter().any(|&other| {
                        if other == id || !ctx.reference_matches(reference, other, probe) {
                            return false;
                        }
                        let (from, to) = match direction {
                            EdgeDirection::Out => (id.as_str(), other),
                            EdgeDirection::In => (other, id.as_str()),
                        };
                        if kind.is_interaction() {
                            ctx.interaction_matches(from, to, probe, *kind, predicate)
                        } else {
                            ctx.geometric_matches(from, to, probe, *kind, predicate)
                        }
                    })
                });
                sets.push(current.clone());
            }
            StepOp::Count => {
                let entities: BTreeSet<&str> =
                    current.iter().map(|(id, _)| id.as_str()).collect();
                answer = Some(NaiveAnswer::Count(entities.len() as u64));
                sets.push(current.clone());
            }
            StepOp::Exist => {
                answer = Some(NaiveAnswer::Bool(!current.is_empty()));
                sets.push(current.clone());
            }
            StepOp::Query { attr, slot } => {
                let entities: BTreeSet<&str> =
                    current.iter().map(|(id, _)| id.as_str()).collect();
                assert_eq!(entities.len(), 1, "query over a non-singleton set");
                let id = entities.into_iter().next().unwrap();
                let values: BTreeSet<String> = match slot {
                    Some(q) => ctx.attr(id, *q, attr).into_iter().collect(),
                    None => current
                        .iter()
                        .filter(|(e, _)| e == id)
                        .filter_map(|(e, s)| ctx.attr(e, *s, attr))
                        .collect(),
                };
                assert_eq!(values.len(), 1, "query over an unstable attribute");
                answer = Some(NaiveAnswer::Value(values.into_iter().next().unwrap()));
                sets.push(current.clone());
            }
        }
    }

    NaiveResult { sets, answer: answer.unwrap_or(NaiveAnswer::Entities(current)) }
}
