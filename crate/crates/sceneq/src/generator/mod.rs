//! The question generation engine.
//!
//! Generation is search under constraints: an abstract question shape (an
//! attribute combination plus relation slots) is sampled, grounded against
//! the scene graph with observed values so the question is guaranteed
//! answerable, and then verified end to end by re-evaluating the assembled
//! program. Questions that fail verification, resolve to nothing, or miss
//! their intended complexity are discarded and the attempt repeats within a
//! budget.

mod grammar;

pub use grammar::Grammar;

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::complexity::{complexity_of, Complexity, DifficultyTier};
use crate::config::{GenConfig, Preferences, Scope, SubjectFocus};
use crate::scene::{
    segment_slots, validate, AttrKind, AttributeSchema, EntityClass, SceneAnnotation, SlotError,
    ValidationReport,
};
use crate::stgraph::{
    build_graph, evaluate_program, Answer, EdgeDirection, EdgeKind, EdgePayload, EdgePredicate,
    Evaluation, GroundedEntity, QuestionProgram, ReferenceSpec, SceneGraph, StepOp, TaskKind,
};

#[derive(Debug, Error)]
pub enum GenError {
    #[error("scene `{scene}` failed validation with {} violation(s)", report.violations.len())]
    Scene { scene: String, report: ValidationReport },
    #[error(transparent)]
    Slots(#[from] SlotError),
    #[error("the schema and preferences admit no question shapes")]
    NoShapes,
    #[error("grammar: {0}")]
    Grammar(String),
}

/// What a relate step binds to, before a concrete entity is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RefKind {
    Robot,
    Class(EntityClass),
}

/// Abstract relation slot: edge kind, which side the target sits on, and
/// the kind of reference at the other end.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RelationShape {
    pub kind: EdgeKind,
    pub direction: EdgeDirection,
    pub reference: RefKind,
}

/// An abstract question shape: the target class, which attributes to pin,
/// which relations to require, and (for wh questions) which attribute to
/// read off the answer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AttributeCombination {
    pub class: EntityClass,
    /// Attribute names to constrain, in schema declaration order.
    pub attrs: Vec<String>,
    /// Pair scope: all slots share one reference. Clique scope: each slot
    /// gets its own, pairwise distinct reference.
    pub relations: Vec<RelationShape>,
    pub query_attr: Option<String>,
}

/// k-subsets of `0..n` in lexicographic order.
fn index_combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if k == 0 || k > n {
        return out;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        out.push(idx.clone());
        let mut i = k;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if idx[i] != i + n - k {
                break;
            }
        }
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Subsets of the attribute list up to `max` elements, empty set first,
/// then by size, preserving declaration order inside each subset.
fn attr_subsets(attrs: &[String], max: usize) -> Vec<Vec<String>> {
    let mut out = vec![Vec::new()];
    for k in 1..=max.min(attrs.len()) {
        for combo in index_combinations(attrs.len(), k) {
            out.push(combo.into_iter().map(|i| attrs[i].clone()).collect());
        }
    }
    out
}

/// Relation slots the schema licenses for questions about `class`. Humans
/// sit on the source side of every edge they declare; objects are reached
/// through incoming human edges.
fn relation_shapes(schema: &AttributeSchema, class: EntityClass) -> Vec<RelationShape> {
    let mut shapes = Vec::new();
    for def in schema.relational(class) {
        let Some(kind) = EdgeKind::from_name(&def.name) else { continue };
        match class {
            EntityClass::Human => {
                let refs: &[RefKind] = match kind {
                    EdgeKind::Hhg => &[RefKind::Class(EntityClass::Human)],
                    _ => &[RefKind::Class(EntityClass::Object), RefKind::Robot],
                };
                for &reference in refs {
                    shapes.push(RelationShape { kind, direction: EdgeDirection::Out, reference });
                }
            }
            EntityClass::Object | EntityClass::Surface => {
                shapes.push(RelationShape {
                    kind,
                    direction: EdgeDirection::In,
                    reference: RefKind::Class(EntityClass::Human),
                });
            }
        }
    }
    shapes
}

/// Multisets of `k` shapes, non-decreasing in pool order, with at most one
/// robot reference (there is only one robot to bind).
fn shape_multisets(pool: &[RelationShape], k: usize) -> Vec<Vec<RelationShape>> {
    fn rec(
        pool: &[RelationShape],
        k: usize,
        start: usize,
        cur: &mut Vec<RelationShape>,
        out: &mut Vec<Vec<RelationShape>>,
    ) {
        if k == 0 {
            if cur.iter().filter(|s| s.reference == RefKind::Robot).count() <= 1 {
                out.push(cur.clone());
            }
            return;
        }
        for i in start..pool.len() {
            cur.push(pool[i]);
            rec(pool, k - 1, i, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(pool, k, 0, &mut Vec::new(), &mut out);
    out
}

fn relation_sets(
    schema: &AttributeSchema,
    class: EntityClass,
    prefs: &Preferences,
    cfg: &GenConfig,
) -> Vec<Vec<RelationShape>> {
    match prefs.spatial_scope {
        Scope::Single => vec![Vec::new()],
        Scope::Pair => {
            let shapes = relation_shapes(schema, class);
            let mut refs: Vec<RefKind> = Vec::new();
            for s in &shapes {
                if !refs.contains(&s.reference) {
                    refs.push(s.reference);
                }
            }
            let mut out = Vec::new();
            for reference in refs {
                let pool: Vec<RelationShape> =
                    shapes.iter().filter(|s| s.reference == reference).copied().collect();
                for k in 1..=cfg.max_pair_relations.min(pool.len()) {
                    for combo in index_combinations(pool.len(), k) {
                        out.push(combo.into_iter().map(|i| pool[i]).collect());
                    }
                }
            }
            out
        }
        Scope::Clique => {
            let shapes = relation_shapes(schema, class);
            let k = prefs.clique_size.saturating_sub(1);
            if k == 0 || shapes.is_empty() {
                return Vec::new();
            }
            shape_multisets(&shapes, k)
        }
    }
}

/// Enumerates every abstract question shape the schema and preferences
/// admit, deterministically ordered.
pub fn enumerate_combinations(
    schema: &AttributeSchema,
    cfg: &GenConfig,
) -> Vec<AttributeCombination> {
    let prefs = &cfg.preferences;
    let classes: &[EntityClass] = match prefs.subject {
        SubjectFocus::Human => &[EntityClass::Human],
        SubjectFocus::Object => &[EntityClass::Object],
        SubjectFocus::Both => &[EntityClass::Human, EntityClass::Object],
    };
    let mut out = Vec::new();
    for &class in classes {
        let attrs: Vec<String> = schema.node_attrs(class).map(|d| d.name.clone()).collect();
        let subsets = attr_subsets(&attrs, cfg.max_node_attrs);
        let rel_sets = relation_sets(schema, class, prefs, cfg);
        for subset in &subsets {
            for rels in &rel_sets {
                match prefs.task {
                    // Bare class counts are valid questions.
                    TaskKind::VqaCount => out.push(AttributeCombination {
                        class,
                        attrs: subset.clone(),
                        relations: rels.clone(),
                        query_attr: None,
                    }),
                    // Grounding needs at least one constraint.
                    TaskKind::Vg => {
                        if subset.is_empty() && rels.is_empty() {
                            continue;
                        }
                        out.push(AttributeCombination {
                            class,
                            attrs: subset.clone(),
                            relations: rels.clone(),
                            query_attr: None,
                        });
                    }
                    // Wh questions pick the queried attribute out of the
                    // remaining ones and also need a constraint.
                    TaskKind::VqaWh => {
                        for q in &attrs {
                            if subset.contains(q) {
                                continue;
                            }
                            if subset.is_empty() && rels.is_empty() {
                                continue;
                            }
                            out.push(AttributeCombination {
                                class,
                                attrs: subset.clone(),
                                relations: rels.clone(),
                                query_attr: Some(q.clone()),
                            });
                        }
                    }
                }
            }
        }
    }
    out
}

/// SplitMix64 finalizer over seed and question index: questions get
/// independent streams and any prefix of a batch is stable.
pub(crate) fn mix(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// One emitted question with everything needed to pose, ground, and score
/// it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratedQuestion {
    pub id: String,
    pub scene_id: String,
    pub task: TaskKind,
    pub question: String,
    pub program: QuestionProgram,
    pub workflow: Vec<WorkflowStep>,
    pub answer: AnswerValue,
    pub complexity: ComplexityInfo,
    pub seed: u64,
    pub preferences: Preferences,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkflowStep {
    pub index: usize,
    pub op: String,
    pub description: String,
    pub result: StepResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepResult {
    Entities(Vec<GroundedEntity>),
    Count(u64),
    Value(String),
    Bool(bool),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnswerValue {
    Boxes(Vec<GroundedEntity>),
    Count(u64),
    Value(String),
    Bool(bool),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComplexityInfo {
    pub s: u32,
    pub r: u32,
    pub t: u32,
    pub d: u32,
    pub tier: DifficultyTier,
    pub temporal_hops: u32,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenerationReport {
    pub requested: usize,
    pub generated: usize,
    pub unsatisfiable: usize,
    pub deduplicated: usize,
    pub per_tier: BTreeMap<String, usize>,
}

struct Draft {
    program: QuestionProgram,
    eval: Evaluation,
    complexity: Complexity,
    seed: u64,
}

pub struct Engine {
    cfg: GenConfig,
    graph: SceneGraph,
    combos: Vec<AttributeCombination>,
    grammar: Grammar,
}

impl Engine {
    pub fn new(scene: &SceneAnnotation, cfg: GenConfig) -> Result<Engine, GenError> {
        let report = validate(scene);
        if !report.violations.is_empty() {
            return Err(GenError::Scene { scene: scene.scene_id.clone(), report });
        }
        let slots = segment_slots(scene, &cfg.slot_policy)?;
        let graph = build_graph(scene, &slots, &cfg.relations);
        let combos = enumerate_combinations(&scene.schema, &cfg);
        if combos.is_empty() {
            return Err(GenError::NoShapes);
        }
        let grammar = match &cfg.grammar_path {
            Some(path) => Grammar::from_path(path).map_err(GenError::Grammar)?,
            None => Grammar::default(),
        };
        Ok(Engine { cfg, graph, combos, grammar })
    }

    pub fn graph(&self) -> &SceneGraph {
        &self.graph
    }

    pub fn grammar(&self) -> &Grammar {
        &self.grammar
    }

    pub fn combinations(&self) -> &[AttributeCombination] {
        &self.combos
    }

    /// Generates up to `count` questions. Failed seeds count as
    /// unsatisfiable instead of stalling the batch, so
    /// `generated + unsatisfiable + deduplicated == requested`.
    pub fn generate(&self, seed: u64, count: usize) -> (Vec<GeneratedQuestion>, GenerationReport) {
        let drafts: Vec<Option<Draft>> =
            (0..count).map(|i| self.generate_one(mix(seed, i as u64))).collect();
        self.finalize(count, drafts)
    }

    /// Same output as [`Engine::generate`], computed across threads.
    pub fn generate_parallel(
        &self,
        seed: u64,
        count: usize,
    ) -> (Vec<GeneratedQuestion>, GenerationReport) {
        let drafts: Vec<Option<Draft>> = (0..count)
            .into_par_iter()
            .map(|i| self.generate_one(mix(seed, i as u64)))
            .collect();
        self.finalize(count, drafts)
    }

    fn finalize(
        &self,
        requested: usize,
        drafts: Vec<Option<Draft>>,
    ) -> (Vec<GeneratedQuestion>, GenerationReport) {
        let mut report = GenerationReport { requested, ..GenerationReport::default() };
        let mut seen = BTreeSet::new();
        let mut questions = Vec::new();
        for draft in drafts {
            let Some(draft) = draft else {
                report.unsatisfiable += 1;
                continue;
            };
            if self.cfg.dedupe && !seen.insert(draft.program.canonical()) {
                report.deduplicated += 1;
                continue;
            }
            match self.realize(draft, questions.len()) {
                Ok(q) => {
                    *report.per_tier.entry(q.complexity.tier.name().to_string()).or_default() += 1;
                    questions.push(q);
                }
                Err(_) => report.unsatisfiable += 1,
            }
        }
        report.generated = questions.len();
        (questions, report)
    }

    fn generate_one(&self, qseed: u64) -> Option<Draft> {
        let mut rng = ChaCha8Rng::seed_from_u64(qseed);
        for _ in 0..self.cfg.attempt_budget.max(1) {
            if let Some(mut draft) = self.attempt(&mut rng) {
                draft.seed = qseed;
                return Some(draft);
            }
        }
        None
    }

    fn attempt(&self, rng: &mut ChaCha8Rng) -> Option<Draft> {
        let prefs = &self.cfg.preferences;
        let combo = self.combos.choose(rng)?;

        let want = match prefs.temporal_scope {
            Scope::Single => 1,
            Scope::Pair => 2,
            Scope::Clique => prefs.clique_size.max(1),
        };
        let len = want.min(self.graph.slots.len());
        if len == 0 {
            return None;
        }
        let start = rng.random_range(0..=self.graph.slots.len() - len);
        let window: Vec<usize> = (start..start + len).collect();

        // The target must be present through the whole window.
        let candidates: Vec<&str> = self
            .graph
            .nodes_at(window[0])
            .filter(|n| !n.is_robot && n.class == combo.class)
            .map(|n| n.entity.as_str())
            .filter(|e| window.iter().all(|&q| self.graph.node(q, e).is_some()))
            .collect();
        let &target = candidates.choose(rng)?;

        let mut steps = vec![StepOp::Select { class: combo.class }];
        for attr in &combo.attrs {
            let def = self.graph.schema.def(combo.class, attr)?;
            if def.kind == AttrKind::Dynamic && window.len() > 1 {
                // Pin the observed value at every slot; the values may
                // differ, which is what makes the question temporal.
                for &q in &window {
                    let value = self.graph.attr(q, target, attr)?.to_string();
                    steps.push(StepOp::Filter { attr: attr.clone(), value, slot: Some(q) });
                }
            } else {
                let value = self.graph.attr(window[0], target, attr)?.to_string();
                steps.push(StepOp::Filter { attr: attr.clone(), value, slot: None });
            }
        }

        let built = self.build_relations(rng, combo, target, &window)?;
        steps.extend(built.steps);

        match prefs.task {
            TaskKind::Vg => {}
            TaskKind::VqaCount => steps.push(StepOp::Count),
            TaskKind::VqaWh => {
                let attr = combo.query_attr.clone()?;
                let slot = if window.len() > 1 { window.last().copied() } else { None };
                steps.push(StepOp::Query { attr, slot });
            }
        }

        let program = QuestionProgram {
            task: prefs.task,
            target_slots: window.iter().copied().collect(),
            steps,
        };
        let eval = evaluate_program(&self.graph, &program).ok()?;

        let final_entities = eval.final_entities();
        match prefs.task {
            TaskKind::Vg | TaskKind::VqaWh => {
                if final_entities.is_empty() {
                    return None;
                }
                if prefs.unique_target && final_entities.len() != 1 {
                    return None;
                }
            }
            TaskKind::VqaCount => {
                if let Answer::Count(n) = eval.answer {
                    if n == 0 && !self.cfg.count_allow_zero {
                        return None;
                    }
                }
            }
        }

        // The instantiated program must land exactly on the complexity its
        // shape promises; reference collisions or deduped relations retry.
        let intended_refs = match prefs.spatial_scope {
            Scope::Single => 0,
            Scope::Pair => usize::from(!combo.relations.is_empty()),
            Scope::Clique => combo.relations.len(),
        };
        let complexity = complexity_of(&self.graph, &program).ok()?;
        let expected = Complexity::new(
            1 + intended_refs as u32,
            combo.relations.len() as u32,
            window.len() as u32,
        );
        if complexity != expected {
            return None;
        }

        if self.cfg.strict_clique
            && prefs.spatial_scope == Scope::Clique
            && !self.clique_connected(&built.endpoints, &window)
        {
            return None;
        }

        Some(Draft { program, eval, complexity, seed: 0 })
    }

    fn build_relations(
        &self,
        rng: &mut ChaCha8Rng,
        combo: &AttributeCombination,
        target: &str,
        window: &[usize],
    ) -> Option<BuiltRelations> {
        if combo.relations.is_empty() {
            return Some(BuiltRelations::default());
        }
        match self.cfg.preferences.spatial_scope {
            Scope::Single => Some(BuiltRelations::default()),
            Scope::Pair => {
                // One endpoint must carry edges for every required shape.
                let mut shared: Option<BTreeSet<String>> = None;
                for shape in &combo.relations {
                    let pool = self.endpoint_pool(target, shape, window);
                    shared = Some(match shared {
                        None => pool,
                        Some(s) => s.intersection(&pool).cloned().collect(),
                    });
                }
                let shared: Vec<String> = shared.unwrap_or_default().into_iter().collect();
                let endpoint = shared.choose(rng)?.clone();
                let spec = self.reference_spec(rng, &endpoint, window)?;
                let mut steps = Vec::new();
                for shape in &combo.relations {
                    steps.push(self.relate_step(rng, target, &endpoint, shape, spec.clone(), window)?);
                }
                Some(BuiltRelations { steps, endpoints: vec![endpoint] })
            }
            Scope::Clique => {
                let mut used = BTreeSet::new();
                let mut canonicals = BTreeSet::new();
                let mut steps = Vec::new();
                let mut endpoints = Vec::new();
                for shape in &combo.relations {
                    let pool: Vec<String> = self
                        .endpoint_pool(target, shape, window)
                        .into_iter()
                        .filter(|e| !used.contains(e))
                        .collect();
                    let endpoint = pool.choose(rng)?.clone();
                    let spec = self.reference_spec(rng, &endpoint, window)?;
                    // Distinct entities must stay distinct on the surface.
                    if !canonicals.insert(spec.canonical()) {
                        return None;
                    }
                    steps.push(self.relate_step(rng, target, &endpoint, shape, spec, window)?);
                    used.insert(endpoint.clone());
                    endpoints.push(endpoint);
                }
                Some(BuiltRelations { steps, endpoints })
            }
        }
    }

    /// Entities reachable from the target through a matching edge somewhere
    /// in the window.
    fn endpoint_pool(
        &self,
        target: &str,
        shape: &RelationShape,
        window: &[usize],
    ) -> BTreeSet<String> {
        let mut pool = BTreeSet::new();
        for &q in window {
            let ids = match shape.direction {
                EdgeDirection::Out => self.graph.out(q, target),
                EdgeDirection::In => self.graph.incoming(q, target),
            };
            for &i in ids {
                let edge = &self.graph.spatial_edges[i];
                if edge.kind != shape.kind {
                    continue;
                }
                let other = match shape.direction {
                    EdgeDirection::Out => &edge.to,
                    EdgeDirection::In => &edge.from,
                };
                let Some(node) = self.graph.node(q, other) else { continue };
                let eligible = match shape.reference {
                    RefKind::Robot => node.is_robot,
                    RefKind::Class(c) => !node.is_robot && node.class == c,
                };
                if eligible {
                    pool.insert(other.clone());
                }
            }
        }
        pool
    }

    /// Describes a chosen endpoint: the robot by id, anything else by class
    /// plus sometimes one observed static attribute.
    fn reference_spec(
        &self,
        rng: &mut ChaCha8Rng,
        endpoint: &str,
        window: &[usize],
    ) -> Option<ReferenceSpec> {
        let node = self.graph.node(window[0], endpoint)?;
        if node.is_robot {
            return Some(ReferenceSpec::robot());
        }
        let mut attrs = BTreeMap::new();
        let described: Vec<(&str, &str)> = self
            .graph
            .schema
            .defs(node.class)
            .iter()
            .filter(|d| d.kind == AttrKind::Static)
            .filter_map(|d| node.attrs.get(&d.name).map(|v| (d.name.as_str(), v.as_str())))
            .collect();
        if !described.is_empty() && rng.random_bool(0.5) {
            let &(k, v) = described.choose(rng)?;
            attrs.insert(k.to_string(), v.to_string());
        }
        Some(ReferenceSpec::Filtered { class: node.class, attrs })
    }

    fn relate_step(
        &self,
        rng: &mut ChaCha8Rng,
        target: &str,
        endpoint: &str,
        shape: &RelationShape,
        reference: ReferenceSpec,
        window: &[usize],
    ) -> Option<StepOp> {
        let mut edges = Vec::new();
        for &q in window {
            let ids = match shape.direction {
                EdgeDirection::Out => self.graph.out(q, target),
                EdgeDirection::In => self.graph.incoming(q, target),
            };
            for &i in ids {
                let edge = &self.graph.spatial_edges[i];
                let other = match shape.direction {
                    EdgeDirection::Out => &edge.to,
                    EdgeDirection::In => &edge.from,
                };
                if edge.kind == shape.kind && other == endpoint {
                    edges.push(edge);
                }
            }
        }
        let edge = edges.choose(rng)?;
        let predicate = match &edge.payload {
            EdgePayload::Interaction(p) => EdgePredicate::Verb(p.verb.clone()),
            EdgePayload::Geometric(g) => {
                if rng.random_bool(0.5) {
                    EdgePredicate::Planar(g.relation.planar)
                } else {
                    EdgePredicate::Distance(g.distance_cat)
                }
            }
        };
        Some(StepOp::Relate {
            kind: shape.kind,
            predicate,
            reference,
            direction: shape.direction,
            slot: None,
        })
    }

    /// Every pair of clique references must share a spatial edge somewhere
    /// in the window.
    fn clique_connected(&self, endpoints: &[String], window: &[usize]) -> bool {
        for i in 0..endpoints.len() {
            for j in i + 1..endpoints.len() {
                let connected = window.iter().any(|&q| {
                    let forward = self
                        .graph
                        .out(q, &endpoints[i])
                        .iter()
                        .any(|&k| self.graph.spatial_edges[k].to == endpoints[j]);
                    let backward = self
                        .graph
                        .out(q, &endpoints[j])
                        .iter()
                        .any(|&k| self.graph.spatial_edges[k].to == endpoints[i]);
                    forward || backward
                });
                if !connected {
                    return false;
                }
            }
        }
        true
    }

    fn realize(&self, draft: Draft, index: usize) -> Result<GeneratedQuestion, String> {
        let question = self.grammar.render_question(&draft.program)?;
        let mut workflow = Vec::new();
        for (i, step) in draft.program.steps.iter().enumerate() {
            let description = self.grammar.describe_step(&draft.program, i)?;
            let result = if step.is_terminal() {
                match &draft.eval.answer {
                    Answer::Count(n) => StepResult::Count(*n),
                    Answer::Value(v) => StepResult::Value(v.clone()),
                    Answer::Bool(b) => StepResult::Bool(*b),
                    Answer::Entities(set) => {
                        StepResult::Entities(set.iter().map(|n| self.graph.grounded(n)).collect())
                    }
                }
            } else {
                StepResult::Entities(
                    draft.eval.steps[i].iter().map(|n| self.graph.grounded(n)).collect(),
                )
            };
            workflow.push(WorkflowStep {
                index: i,
                op: step.op_name().to_string(),
                description,
                result,
            });
        }
        let answer = match &draft.eval.answer {
            Answer::Entities(set) => {
                AnswerValue::Boxes(set.iter().map(|n| self.graph.grounded(n)).collect())
            }
            Answer::Count(n) => AnswerValue::Count(*n),
            Answer::Value(v) => AnswerValue::Value(v.clone()),
            Answer::Bool(b) => AnswerValue::Bool(*b),
        };
        let c = draft.complexity;
        Ok(GeneratedQuestion {
            id: format!("{}:q{index:05}", self.graph.scene_id),
            scene_id: self.graph.scene_id.clone(),
            task: draft.program.task,
            question,
            program: draft.program,
            workflow,
            answer,
            complexity: ComplexityInfo {
                s: c.s,
                r: c.r,
                t: c.t,
                d: c.difficulty(),
                tier: c.tier(),
                temporal_hops: c.temporal_hops(),
            },
            seed: draft.seed,
            preferences: self.cfg.preferences.clone(),
        })
    }
}

#[derive(Default)]
struct BuiltRelations {
    steps: Vec<StepOp>,
    endpoints: Vec<String>,
}
