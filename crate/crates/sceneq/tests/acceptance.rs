//! Acceptance gate: one test per shipping criterion. Every test ends by
//! printing `acceptance <name>: pass`, so a `--nocapture` run reads as a
//! checklist. Tolerances and time budgets are pinned here, next to the
//! assertions that use them.

mod common;

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use sceneq::complexity::complexity_of;
use sceneq::config::{GenConfig, Scope, SubjectFocus};
use sceneq::eval::{
    ground_truth_predictions, score, score_grounding, Prediction, StepScoring,
};
use sceneq::generator::{AnswerValue, Engine, GeneratedQuestion, StepResult};
use sceneq::geometry::{
    classify_direction, classify_distance, cloud_distance, iou_2d, Box2D, KdTree, PointCloud,
};
use sceneq::scene::{segment_slots, EntityClass, SceneAnnotation, SlotPolicy};
use sceneq::stgraph::{
    build_graph, evaluate_program, Answer, EdgeDirection, EdgeKind, EdgePredicate, NodeRef,
    QuestionProgram, ReferenceSpec, StepOp, TaskKind,
};
use sceneq::synth::{demo_scene, synth_scene, SynthSpec};

use common::*;

/// Boundary probes sit this far to either side of each band edge.
const EDGE_EPS: f64 = 1e-9;
/// KD-tree results must match brute force at least this tightly.
const KD_TOL: f64 = 1e-9;
/// Scores that must be 1.0 up to floating-point summation.
const UNIT_TOL: f64 = 1e-12;

struct Batch {
    scene: SceneAnnotation,
    cfg: GenConfig,
    questions: Vec<GeneratedQuestion>,
}

/// Deterministic stream of (scene, config, questions) batches cycling tasks,
/// scopes, subjects, modalities, and relation settings, until at least
/// `total` questions have accumulated.
fn mixed_batches(total: usize) -> Vec<Batch> {
    let tasks = [TaskKind::Vg, TaskKind::VqaCount, TaskKind::VqaWh];
    let scopes = [Scope::Single, Scope::Pair, Scope::Clique];
    let subjects = [SubjectFocus::Both, SubjectFocus::Human, SubjectFocus::Object];
    let mut out: Vec<Batch> = Vec::new();
    let mut produced = 0usize;
    let mut i = 0u64;
    while produced < total {
        let n = i as usize;
        let video = i % 2 == 1;
        let base = if video { SynthSpec::video() } else { SynthSpec::default() };
        let spec = SynthSpec {
            humans: 5 + n % 4,
            objects: 2 + n % 3,
            cloud_points: if i % 3 == 0 { 0 } else { 10 },
            ..base
        };
        let scene = synth_scene(&spec, 1000 + i);

        let mut cfg = GenConfig::default();
        cfg.preferences.task = tasks[n % tasks.len()];
        cfg.preferences.spatial_scope = scopes[(n / 3) % scopes.len()];
        cfg.preferences.temporal_scope =
            if video && i % 4 == 1 { Scope::Pair } else { Scope::Single };
        cfg.preferences.subject = subjects[n % subjects.len()];
        cfg.relations.symmetric_cloud = i % 2 == 0;
        cfg.relations.cloud_k = 1 + n % 3;
        cfg.relations.tau_z = [0.5, 0.2, 0.8][n % 3];
        cfg.relations.distance_cutoff = if i % 5 == 4 { Some(9.0) } else { None };
        if video {
            cfg.slot_policy = SlotPolicy::FixedWindow { frames: [3, 4, 6][n % 3] };
        }

        let engine = Engine::new(&scene, cfg.clone()).expect("synthetic scenes validate");
        let (questions, _) = engine.generate(i, 40);
        produced += questions.len();
        if !questions.is_empty() {
            out.push(Batch { scene, cfg, questions });
        }
        i += 1;
    }
    out
}

fn graph_of(batch: &Batch) -> sceneq::stgraph::SceneGraph {
    let slots = segment_slots(&batch.scene, &batch.cfg.slot_policy).expect("segmentable");
    build_graph(&batch.scene, &slots, &batch.cfg.relations)
}

/// Every direction and distance label: the fixed fixture hits each band's
/// midpoint and both sides of every boundary, then a seeded fuzz sweep
/// checks the bands partition the whole input range.
#[test]
fn table1_exactness() {
    let t0 = Instant::now();

    let mut cases: Vec<(f64, &str)> = vec![
        (0.0, "front"),
        (37.5, "front_left"),
        (90.0, "left"),
        (140.0, "back_left"),
        (180.0, "back"),
        (-140.0, "back_right"),
        (-90.0, "right"),
        (-37.5, "front_right"),
    ];
    // (edge, on the edge, just below, just above)
    let boundaries = [
        (30.0, "front", "front", "front_left"),
        (45.0, "front_left", "front_left", "left"),
        (135.0, "left", "left", "back_left"),
        (145.0, "back_left", "back_left", "back"),
        (-30.0, "front", "front_right", "front"),
        (-45.0, "front_right", "right", "front_right"),
        (-135.0, "right", "back_right", "right"),
        (-145.0, "back_right", "back", "back_right"),
    ];
    for (edge, on, below, above) in boundaries {
        cases.push((edge, on));
        cases.push((edge - EDGE_EPS, below));
        cases.push((edge + EDGE_EPS, above));
    }
    assert_eq!(cases.len(), 32);
    for (theta, want) in &cases {
        let got = classify_direction(*theta, 0.0, 0.5).planar.name();
        assert_eq!(got, *want, "theta {theta}");
        assert_eq!(sector(*theta), *want, "oracle disagrees at {theta}");
    }

    let distances = [
        (0.3, "very_close"),
        (0.5 - EDGE_EPS, "very_close"),
        (0.5, "close"),
        (1.5 - EDGE_EPS, "close"),
        (1.5, "moderate"),
        (5.0 - EDGE_EPS, "moderate"),
        (5.0, "far"),
        (10.0 - EDGE_EPS, "far"),
        (10.0, "very_far"),
        (12.0, "very_far"),
    ];
    assert_eq!(distances.len(), 10);
    for (d, want) in distances {
        assert_eq!(classify_distance(d).name(), want, "distance {d}");
        assert_eq!(distance_band(d), want, "oracle disagrees at {d}");
    }

    // Fuzz: every angle lands in exactly one band and the classifier picks
    // that band; same for distances; the vertical component obeys the dead
    // band.
    let memberships = |theta: f64| {
        let mut hits = Vec::new();
        if (-30.0..=30.0).contains(&theta) {
            hits.push("front");
        }
        if theta > 30.0 && theta <= 45.0 {
            hits.push("front_left");
        }
        if theta > 45.0 && theta <= 135.0 {
            hits.push("left");
        }
        if theta > 135.0 && theta <= 145.0 {
            hits.push("back_left");
        }
        if (-45.0..-30.0).contains(&theta) {
            hits.push("front_right");
        }
        if (-135.0..-45.0).contains(&theta) {
            hits.push("right");
        }
        if (-145.0..-135.0).contains(&theta) {
            hits.push("back_right");
        }
        if theta > 145.0 || theta < -145.0 {
            hits.push("back");
        }
        hits
    };
    let mut rng = ChaCha8Rng::seed_from_u64(0x7AB1);
    for _ in 0..100_000 {
        let mut theta = rng.random_range(-180.0..180.0);
        if theta == -180.0 {
            theta = 180.0;
        }
        let hits = memberships(theta);
        assert_eq!(hits.len(), 1, "bands overlap or leave a gap at {theta}");
        let dz = rng.random_range(-2.0..2.0);
        let tau = rng.random_range(0.1..1.0);
        let rel = classify_direction(theta, dz, tau);
        assert_eq!(rel.planar.name(), hits[0], "theta {theta}");
        let want_vertical = if dz > tau {
            "up"
        } else if dz < -tau {
            "down"
        } else {
            "none"
        };
        assert_eq!(rel.vertical.name(), want_vertical, "dz {dz} tau {tau}");

        let d = rng.random_range(0.0..25.0);
        assert_eq!(classify_distance(d).name(), distance_band(d), "distance {d}");
    }

    let elapsed = t0.elapsed();
    assert!(elapsed < Duration::from_secs(1), "took {elapsed:?}");
    println!("acceptance table1_exactness: pass");
}

/// The complexity triple stored on every generated question is reproducible
/// from its program alone, the difficulty is the sum, and the tier mapping
/// agrees.
#[test]
fn complexity_closure() {
    let t0 = Instant::now();
    let batches = mixed_batches(1000);
    let mut seen = 0usize;
    let mut tiers = BTreeSet::new();
    for batch in &batches {
        let graph = graph_of(batch);
        for q in &batch.questions {
            let c = complexity_of(&graph, &q.program).expect("stored programs evaluate");
            assert_eq!(
                (c.s, c.r, c.t),
                (q.complexity.s, q.complexity.r, q.complexity.t),
                "{}",
                q.id
            );
            assert_eq!(c.difficulty(), q.complexity.d, "{}", q.id);
            assert_eq!(q.complexity.d, c.s + c.r + c.t, "{}", q.id);
            assert_eq!(c.tier(), q.complexity.tier, "{}", q.id);
            assert_eq!(c.temporal_hops(), q.complexity.temporal_hops, "{}", q.id);
            tiers.insert(q.complexity.tier.name());
            seen += 1;
        }
    }
    assert!(seen >= 1000, "only {seen} questions");
    for tier in ["d1", "d2", "d3"] {
        assert!(tiers.contains(tier), "no {tier} questions in the mix");
    }
    let elapsed = t0.elapsed();
    assert!(elapsed < Duration::from_secs(30), "took {elapsed:?}");
    println!("acceptance complexity_closure: pass ({seen} questions)");
}

/// The graph evaluator and the annotation-rescanning interpreter agree on
/// every intermediate set and every answer, over generated programs and
/// their exist-variants.
#[test]
fn oracle_equivalence() {
    let batches = mixed_batches(1000);
    let mut pairs = 0usize;
    let mut answer_kinds = BTreeSet::new();

    let check = |batch: &Batch,
                 graph: &sceneq::stgraph::SceneGraph,
                 program: &QuestionProgram,
                 id: &str| {
        let lib = evaluate_program(graph, program).expect("stored programs evaluate");
        let naive = naive_eval(&batch.scene, &batch.cfg, program);
        assert_eq!(lib.steps.len(), naive.sets.len(), "{id}: step count");
        for (i, (ls, ns)) in lib.steps.iter().zip(&naive.sets).enumerate() {
            assert_eq!(&to_pairs(ls), ns, "{id}: step {i}");
        }
        let lib_answer = answer_to_naive(&lib.answer);
        assert_eq!(lib_answer, naive.answer, "{id}: answer");
        lib_answer
    };

    for batch in &batches {
        let graph = graph_of(batch);
        for q in &batch.questions {
            let answer = check(batch, &graph, &q.program, &q.id);
            answer_kinds.insert(match answer {
                NaiveAnswer::Entities(_) => "entities",
                NaiveAnswer::Count(_) => "count",
                NaiveAnswer::Value(_) => "value",
                NaiveAnswer::Bool(_) => "bool",
            });
            pairs += 1;

            // Counting programs double as existence probes.
            if matches!(q.program.steps.last(), Some(StepOp::Count)) {
                let mut variant = q.program.clone();
                *variant.steps.last_mut().expect("non-empty") = StepOp::Exist;
                check(batch, &graph, &variant, &q.id);
                answer_kinds.insert("bool");
                pairs += 1;
            }
        }
    }
    assert!(pairs >= 1000, "only {pairs} pairs");
    for kind in ["entities", "count", "value", "bool"] {
        assert!(answer_kinds.contains(kind), "no {kind}-valued programs in the mix");
    }
    println!("acceptance oracle_equivalence: pass ({pairs} scene/program pairs)");
}

/// Nearest-neighbour queries and cloud distances match an all-pairs brute
/// force on random clouds.
#[test]
fn kdtree_exactness() {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5EED);
    let point = |rng: &mut ChaCha8Rng| {
        [
            rng.random_range(-5.0..5.0),
            rng.random_range(-5.0..5.0),
            rng.random_range(-5.0..5.0),
        ]
    };

    let mut prev: Option<PointCloud> = None;
    for case in 0..1000 {
        let n = rng.random_range(1..=500usize);
        let cloud = PointCloud((0..n).map(|_| point(&mut rng)).collect());
        let tree = KdTree::build(&cloud).expect("non-empty cloud");
        let query = point(&mut rng);
        let k = rng.random_range(1..=8usize);

        let hits = tree.knn(query, k);
        let mut brute: Vec<f64> = cloud.0.iter().map(|&p| dist3(query, p)).collect();
        brute.sort_by(f64::total_cmp);
        assert_eq!(hits.len(), k.min(n), "case {case}: result count");
        for (h, want) in hits.iter().zip(&brute) {
            assert!((h.distance - want).abs() <= KD_TOL, "case {case}: {} vs {want}", h.distance);
            let direct = dist3(query, cloud.0[h.index]);
            assert!((h.distance - direct).abs() <= KD_TOL, "case {case}: stale index");
        }
        for w in hits.windows(2) {
            assert!(w[0].distance <= w[1].distance, "case {case}: unsorted result");
        }

        if let Some(other) = prev {
            let kd = cloud_distance(&cloud, &other, k).expect("non-empty clouds");
            let bf = brute_symmetric(&cloud.0, &other.0, k);
            assert!((kd - bf).abs() <= KD_TOL, "case {case}: {kd} vs {bf}");
        }
        prev = Some(cloud);
    }

    let elapsed = t0.elapsed();
    assert!(elapsed < Duration::from_secs(10), "took {elapsed:?}");
    println!("acceptance kdtree_exactness: pass");
}

/// The same scene, config, and seed produce byte-identical batches, whether
/// generated twice, by a fresh engine, or in parallel.
#[test]
fn generation_determinism() {
    let scene = synth_scene(&SynthSpec::video(), 7);
    let combos = [
        (TaskKind::Vg, Scope::Single),
        (TaskKind::VqaCount, Scope::Pair),
        (TaskKind::VqaWh, Scope::Single),
        (TaskKind::VqaCount, Scope::Clique),
    ];
    for (task, scope) in combos {
        let mut cfg = GenConfig::default();
        cfg.preferences.task = task;
        cfg.preferences.spatial_scope = scope;
        cfg.slot_policy = SlotPolicy::FixedWindow { frames: 4 };

        let engine = Engine::new(&scene, cfg.clone()).expect("scene validates");
        let (a, report_a) = engine.generate(42, 60);
        let (b, report_b) = engine.generate(42, 60);
        let json_a = serde_json::to_string(&a).expect("serializable");
        assert_eq!(json_a, serde_json::to_string(&b).expect("serializable"));
        assert_eq!(report_a, report_b);
        assert!(!a.is_empty(), "{task:?}/{scope:?} generated nothing");

        let (c, report_c) = engine.generate_parallel(42, 60);
        assert_eq!(json_a, serde_json::to_string(&c).expect("serializable"));
        assert_eq!(report_a, report_c);

        let fresh = Engine::new(&scene, cfg.clone()).expect("scene validates");
        let (d, _) = fresh.generate(42, 60);
        assert_eq!(json_a, serde_json::to_string(&d).expect("serializable"));

        let (e, _) = engine.generate(43, 60);
        assert_ne!(json_a, serde_json::to_string(&e).expect("serializable"), "seed ignored");
    }
    println!("acceptance generation_determinism: pass");
}

/// Workflows narrow monotonically, re-evaluating the stored program
/// reproduces every stored step set and the answer bit-exactly, and a
/// hand-enumerated counting pipeline over the fixed lab scene comes out
/// exactly as enumerated.
#[test]
fn workflow_soundness() {
    let batches = mixed_batches(1000);
    let mut seen = 0usize;
    for batch in &batches {
        let graph = graph_of(batch);
        for q in &batch.questions {
            assert_eq!(q.workflow.len(), q.program.steps.len(), "{}", q.id);
            for (i, ws) in q.workflow.iter().enumerate() {
                assert_eq!(ws.index, i, "{}", q.id);
                assert_eq!(ws.op, q.program.steps[i].op_name(), "{}", q.id);
            }

            let entity_sets: Vec<BTreeSet<(String, usize)>> = q
                .workflow
                .iter()
                .filter_map(|s| match &s.result {
                    StepResult::Entities(v) => {
                        Some(v.iter().map(|g| (g.entity.clone(), g.slot)).collect())
                    }
                    _ => None,
                })
                .collect();
            for w in entity_sets.windows(2) {
                assert!(w[1].is_subset(&w[0]), "{}: a step grew the working set", q.id);
            }

            let eval = evaluate_program(&graph, &q.program).expect("stored programs evaluate");
            assert_eq!(eval.steps.len(), q.workflow.len(), "{}", q.id);
            for (i, (computed, stored)) in eval.steps.iter().zip(&q.workflow).enumerate() {
                if let StepResult::Entities(v) = &stored.result {
                    let stored_set: BTreeSet<(String, usize)> =
                        v.iter().map(|g| (g.entity.clone(), g.slot)).collect();
                    assert_eq!(to_pairs(computed), stored_set, "{}: step {i}", q.id);
                    for g in v {
                        let node = graph.node(g.slot, &g.entity).expect("grounded node exists");
                        assert_eq!(g.box2d, node.box2d, "{}: step {i} box", q.id);
                    }
                }
            }
            match (&q.answer, &eval.answer) {
                (AnswerValue::Boxes(v), Answer::Entities(set)) => {
                    let stored: BTreeSet<(String, usize)> =
                        v.iter().map(|g| (g.entity.clone(), g.slot)).collect();
                    assert_eq!(to_pairs(set), stored, "{}", q.id);
                }
                (AnswerValue::Count(a), Answer::Count(b)) => assert_eq!(a, b, "{}", q.id),
                (AnswerValue::Value(a), Answer::Value(b)) => assert_eq!(a, b, "{}", q.id),
                (AnswerValue::Bool(a), Answer::Bool(b)) => assert_eq!(a, b, "{}", q.id),
                (stored, computed) => {
                    panic!("{}: answer kinds diverge: {stored:?} vs {computed:?}", q.id)
                }
            }
            seen += 1;
        }
    }
    assert!(seen >= 1000, "only {seen} questions");

    // Hand count over the fixed lab scene: four people; two women; one of
    // them (p2) looking at the robot.
    let scene = demo_scene();
    let cfg = GenConfig::default();
    let slots = segment_slots(&scene, &cfg.slot_policy).expect("segmentable");
    let graph = build_graph(&scene, &slots, &cfg.relations);
    let program = QuestionProgram {
        task: TaskKind::VqaCount,
        target_slots: [0].into(),
        steps: vec![
            StepOp::Select { class: EntityClass::Human },
            StepOp::Filter { attr: "gender".into(), value: "female".into(), slot: None },
            StepOp::Relate {
                kind: EdgeKind::Gaze,
                predicate: EdgePredicate::Verb("looking_at".into()),
                reference: ReferenceSpec::Entity { id: "robot".into() },
                direction: EdgeDirection::Out,
                slot: None,
            },
            StepOp::Count,
        ],
    };
    let eval = evaluate_program(&graph, &program).expect("golden program evaluates");
    let at = |ids: &[&str]| -> BTreeSet<NodeRef> {
        ids.iter().map(|id| NodeRef::new(*id, 0)).collect()
    };
    assert_eq!(eval.steps[0], at(&["p1", "p2", "p3", "p4"]));
    assert_eq!(eval.steps[1], at(&["p1", "p2"]));
    assert_eq!(eval.steps[2], at(&["p2"]));
    assert_eq!(eval.steps[3], at(&["p2"]));
    assert_eq!(eval.answer, Answer::Count(1));

    println!("acceptance workflow_soundness: pass ({seen} questions)");
}

/// Feeding the ground truth back as predictions scores perfectly in every
/// tier and along every step curve; an overlap of exactly one half is not a
/// hit.
#[test]
fn metric_closure() {
    let questions: Vec<GeneratedQuestion> =
        mixed_batches(300).into_iter().flat_map(|b| b.questions).collect();
    let tiers: BTreeSet<&str> =
        questions.iter().map(|q| q.complexity.tier.name()).collect();
    for tier in ["d1", "d2", "d3"] {
        assert!(tiers.contains(tier), "no {tier} questions in the mix");
    }

    let predictions = ground_truth_predictions(&questions);
    for mode in [StepScoring::Independent, StepScoring::Conditioned] {
        let report = score(&questions, &predictions, mode).expect("well-formed predictions");
        assert_eq!(report.overall.questions, questions.len());
        assert_eq!(report.overall.answered, questions.len());
        assert_eq!(report.overall.correct, questions.len());
        assert_eq!(report.overall.accuracy, 1.0);
        if let Some(iou) = report.overall.mean_iou {
            assert!((iou - 1.0).abs() <= UNIT_TOL, "overall mean IoU {iou}");
        }
        for (tier, t) in &report.per_tier {
            assert_eq!(t.accuracy, 1.0, "tier {tier}");
            assert_eq!(t.correct, t.questions, "tier {tier}");
            assert_eq!(t.answered, t.questions, "tier {tier}");
            if let Some(iou) = t.mean_iou {
                assert!((iou - 1.0).abs() <= UNIT_TOL, "tier {tier} mean IoU {iou}");
            }
        }
        let curve = report.step_curve.expect("ground truth carries step boxes");
        assert!(!curve.is_empty());
        for (i, v) in curve.iter().enumerate() {
            assert!((v - 1.0).abs() <= UNIT_TOL, "step {i} scored {v} under {mode:?}");
        }
    }

    // Exactly-threshold overlap: half the area shared is not a hit.
    let gt = Box2D::new(0.0, 0.0, 2.0, 2.0);
    let pred = Box2D::new(0.0, 0.0, 2.0, 1.0);
    assert_eq!(iou_2d(&gt, &pred), 0.5);
    assert!(!score_grounding(&[gt], &[pred]).correct);

    let mut half = questions
        .iter()
        .find(|q| matches!(&q.answer, AnswerValue::Boxes(v) if v.len() == 1))
        .expect("a single-box grounding question exists")
        .clone();
    if let AnswerValue::Boxes(v) = &mut half.answer {
        v[0].box2d = Some(gt);
    }
    let p = Prediction {
        question_id: half.id.clone(),
        boxes: Some(vec![pred]),
        ..Prediction::default()
    };
    let report =
        score(std::slice::from_ref(&half), &[p], StepScoring::Independent).expect("scorable");
    assert_eq!(report.overall.answered, 1);
    assert_eq!(report.overall.correct, 0, "IoU exactly 0.5 must not count");
    assert_eq!(report.overall.mean_iou, Some(0.5));

    println!("acceptance metric_closure: pass");
}

/// A single process turns a 30-entity scene into ten thousand questions
/// inside the time budget.
#[test]
fn throughput() {
    let spec = SynthSpec { humans: 24, objects: 6, ..SynthSpec::default() };
    let scene = synth_scene(&spec, 11);
    assert_eq!(scene.entities.len(), 30);

    let t0 = Instant::now();
    let engine = Engine::new(&scene, GenConfig::default()).expect("scene validates");
    let (questions, report) = engine.generate(1, 10_000);
    let elapsed = t0.elapsed();

    assert_eq!(report.generated, questions.len());
    assert!(
        questions.len() >= 10_000,
        "generated {} of 10000 ({} unsatisfiable)",
        questions.len(),
        report.unsatisfiable
    );
    assert!(elapsed < Duration::from_secs(60), "took {elapsed:?}");
    println!(
        "acceptance throughput: pass ({} questions in {:.2}s)",
        questions.len(),
        elapsed.as_secs_f64()
    );
}
