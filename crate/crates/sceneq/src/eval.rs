//! Scoring predictions against generated ground truth.
//!
//! Grounding answers are scored by box IoU with strict greedy one-to-one
//! matching; textual and numeric answers by normalized exact match. A
//! prediction may also carry per-step boxes, which are scored against the
//! workflow's intermediate sets to localize where a model's reasoning
//! breaks.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::generator::{AnswerValue, GeneratedQuestion, StepResult};
use crate::geometry::{iou_2d, Box2D};
use crate::stgraph::TaskKind;

/// A predicted box counts only above this overlap, never at it.
pub const IOU_THRESHOLD: f64 = 0.5;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ScoreError {
    #[error("duplicate prediction for question `{0}`")]
    DuplicatePrediction(String),
    #[error("question `{id}` expects a {expected} answer, the prediction gives {got}")]
    KindMismatch { id: String, expected: &'static str, got: &'static str },
    #[error("question `{id}` grounds {expected} steps but the prediction has {got}")]
    StepMismatch { id: String, expected: usize, got: usize },
}

/// One model output for one question. Exactly one of the answer carriers
/// should be set: `box2d`/`boxes` for grounding, `answer` for VQA. `steps`
/// optionally adds per-step boxes following the question's workflow.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Prediction {
    pub question_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub box2d: Option<Box2D>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub boxes: Option<Vec<Box2D>>,
    /// A JSON number for counts, string for wh answers, bool for existence.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub answer: Option<serde_json::Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps: Option<Vec<Vec<Box2D>>>,
}

/// How per-step boxes are credited.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepScoring {
    /// Each step is scored against its own ground truth in isolation.
    Independent,
    /// A step earns credit only while every earlier step was fully correct,
    /// exposing error propagation along the chain.
    Conditioned,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuestionScore {
    pub question_id: String,
    pub task: TaskKind,
    pub tier: String,
    pub answered: bool,
    pub correct: bool,
    /// Mean matched IoU over ground-truth boxes; grounding questions only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iou: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TierReport {
    pub questions: usize,
    pub answered: usize,
    pub correct: usize,
    pub accuracy: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean_iou: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub overall: TierReport,
    pub per_tier: BTreeMap<String, TierReport>,
    /// Position-wise mean step score over predictions that carried steps.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step_curve: Option<Vec<f64>>,
    pub questions: Vec<QuestionScore>,
}

/// Greedy one-to-one matching by descending IoU. Returns the matched IoU
/// per ground-truth box, zero when unmatched.
pub fn greedy_match(gt: &[Box2D], pred: &[Box2D]) -> Vec<f64> {
    let mut pairs = Vec::new();
    for (gi, g) in gt.iter().enumerate() {
        for (pi, p) in pred.iter().enumerate() {
            let iou = iou_2d(g, p);
            if iou > 0.0 {
                pairs.push((iou, gi, pi));
            }
        }
    }
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut matched = vec![0.0; gt.len()];
    let mut gt_used = vec![false; gt.len()];
    let mut pred_used = vec![false; pred.len()];
    for (iou, gi, pi) in pairs {
        if gt_used[gi] || pred_used[pi] {
            continue;
        }
        gt_used[gi] = true;
        pred_used[pi] = true;
        matched[gi] = iou;
    }
    matched
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroundingScore {
    pub correct: bool,
    pub mean_iou: Option<f64>,
}

/// Correct iff every ground-truth box is matched strictly above the
/// threshold. Surplus predictions are ignored; an empty ground truth is
/// vacuously correct.
pub fn score_grounding(gt: &[Box2D], pred: &[Box2D]) -> GroundingScore {
    let matched = greedy_match(gt, pred);
    let correct = matched.iter().all(|&iou| iou > IOU_THRESHOLD);
    let mean_iou = if gt.is_empty() {
        None
    } else {
        Some(matched.iter().sum::<f64>() / gt.len() as f64)
    };
    GroundingScore { correct, mean_iou }
}

fn normalize(text: &str) -> String {
    let folded = text.to_lowercase().replace('_', " ");
    folded.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn answer_kind(answer: &AnswerValue) -> &'static str {
    match answer {
        AnswerValue::Boxes(_) => "boxes",
        AnswerValue::Count(_) => "count",
        AnswerValue::Value(_) => "value",
        AnswerValue::Bool(_) => "bool",
    }
}

fn json_kind(value: &serde_json::Value) -> &'static str {
    match value {
        serde_json::Value::Null => "null",
        serde_json::Value::Bool(_) => "bool",
        serde_json::Value::Number(_) => "count",
        serde_json::Value::String(_) => "value",
        serde_json::Value::Array(_) | serde_json::Value::Object(_) => "structure",
    }
}

fn score_vqa(q: &GeneratedQuestion, answer: &serde_json::Value) -> Result<bool, ScoreError> {
    match (&q.answer, answer) {
        (AnswerValue::Count(gt), serde_json::Value::Number(n)) => Ok(n.as_u64() == Some(*gt)),
        (AnswerValue::Value(gt), serde_json::Value::String(s)) => {
            Ok(normalize(s) == normalize(gt))
        }
        (AnswerValue::Bool(gt), serde_json::Value::Bool(b)) => Ok(b == gt),
        (gt, v) => Err(ScoreError::KindMismatch {
            id: q.id.clone(),
            expected: answer_kind(gt),
            got: json_kind(v),
        }),
    }
}

fn gt_boxes(entities: &[crate::stgraph::GroundedEntity]) -> Vec<Box2D> {
    entities.iter().filter_map(|e| e.box2d).collect()
}

fn score_one(
    q: &GeneratedQuestion,
    p: &Prediction,
) -> Result<(bool, bool, Option<f64>), ScoreError> {
    match &q.answer {
        AnswerValue::Boxes(gt) => {
            let predicted = match (&p.boxes, p.box2d) {
                (Some(boxes), _) => Some(boxes.clone()),
                (None, Some(b)) => Some(vec![b]),
                (None, None) => None,
            };
            match predicted {
                Some(boxes) => {
                    let s = score_grounding(&gt_boxes(gt), &boxes);
                    Ok((true, s.correct, s.mean_iou))
                }
                None => {
                    if let Some(answer) = &p.answer {
                        return Err(ScoreError::KindMismatch {
                            id: q.id.clone(),
                            expected: "boxes",
                            got: json_kind(answer),
                        });
                    }
                    Ok((false, false, Some(0.0)))
                }
            }
        }
        scalar => match &p.answer {
            Some(answer) => Ok((true, score_vqa(q, answer)?, None)),
            None => {
                if p.box2d.is_some() || p.boxes.is_some() {
                    return Err(ScoreError::KindMismatch {
                        id: q.id.clone(),
                        expected: answer_kind(scalar),
                        got: "boxes",
                    });
                }
                Ok((false, false, None))
            }
        },
    }
}

/// Ground-truth boxes of every entity-valued workflow step, in step order.
fn workflow_step_boxes(q: &GeneratedQuestion) -> Vec<Vec<Box2D>> {
    q.workflow
        .iter()
        .filter_map(|s| match &s.result {
            StepResult::Entities(entities) => Some(gt_boxes(entities)),
            _ => None,
        })
        .collect()
}

fn step_curve_for(
    q: &GeneratedQuestion,
    steps: &[Vec<Box2D>],
    mode: StepScoring,
) -> Result<Vec<f64>, ScoreError> {
    let gt = workflow_step_boxes(q);
    if gt.len() != steps.len() {
        return Err(ScoreError::StepMismatch {
            id: q.id.clone(),
            expected: gt.len(),
            got: steps.len(),
        });
    }
    let mut curve = Vec::with_capacity(gt.len());
    let mut chain_intact = true;
    for (g, p) in gt.iter().zip(steps) {
        let s = score_grounding(g, p);
        let value = if g.is_empty() { 1.0 } else { s.mean_iou.unwrap_or(0.0) };
        match mode {
            StepScoring::Independent => curve.push(value),
            StepScoring::Conditioned => {
                curve.push(if chain_intact { value } else { 0.0 });
                chain_intact = chain_intact && s.correct;
            }
        }
    }
    Ok(curve)
}

fn tally<'a>(scores: impl Iterator<Item = &'a QuestionScore>) -> TierReport {
    let mut report = TierReport::default();
    let mut iou_sum = 0.0;
    let mut iou_count = 0usize;
    for s in scores {
        report.questions += 1;
        report.answered += usize::from(s.answered);
        report.correct += usize::from(s.correct);
        if let Some(iou) = s.iou {
            iou_sum += iou;
            iou_count += 1;
        }
    }
    if report.questions > 0 {
        report.accuracy = report.correct as f64 / report.questions as f64;
    }
    if iou_count > 0 {
        report.mean_iou = Some(iou_sum / iou_count as f64);
    }
    report
}

/// Scores a prediction set against its questions. Every question counts:
/// questions without a prediction are marked unanswered and incorrect.
pub fn score(
    questions: &[GeneratedQuestion],
    predictions: &[Prediction],
    step_mode: StepScoring,
) -> Result<EvalReport, ScoreError> {
    let mut by_id: BTreeMap<&str, &Prediction> = BTreeMap::new();
    for p in predictions {
        if by_id.insert(&p.question_id, p).is_some() {
            return Err(ScoreError::DuplicatePrediction(p.question_id.clone()));
        }
    }

    let mut scores = Vec::with_capacity(questions.len());
    let mut curves: Vec<Vec<f64>> = Vec::new();
    for q in questions {
        let (answered, correct, iou) = match by_id.get(q.id.as_str()) {
            Some(p) => {
                if let Some(steps) = &p.steps {
                    curves.push(step_curve_for(q, steps, step_mode)?);
                }
                score_one(q, p)?
            }
            None => {
                let iou = matches!(q.answer, AnswerValue::Boxes(_)).then_some(0.0);
                (false, false, iou)
            }
        };
        scores.push(QuestionScore {
            question_id: q.id.clone(),
            task: q.task,
            tier: q.complexity.tier.name().to_string(),
            answered,
            correct,
            iou,
        });
    }

    let overall = tally(scores.iter());
    let mut per_tier = BTreeMap::new();
    let tiers: std::collections::BTreeSet<&str> =
        scores.iter().map(|s| s.tier.as_str()).collect();
    for tier in tiers {
        per_tier
            .insert(tier.to_string(), tally(scores.iter().filter(|s| s.tier == tier)));
    }

    let step_curve = if curves.is_empty() {
        None
    } else {
        let mut sums: Vec<(f64, usize)> = Vec::new();
        for curve in &curves {
            for (i, v) in curve.iter().enumerate() {
                if sums.len() <= i {
                    sums.push((0.0, 0));
                }
                sums[i].0 += v;
                sums[i].1 += 1;
            }
        }
        Some(sums.into_iter().map(|(sum, n)| sum / n as f64).collect())
    };

    Ok(EvalReport { overall, per_tier, step_curve, questions: scores })
}

/// Turns the ground truth itself into predictions. Feeding these back
/// through [`score`] must yield perfect accuracy; the scorer's unit tests
/// and the command line round-trip both rely on it.
pub fn ground_truth_predictions(questions: &[GeneratedQuestion]) -> Vec<Prediction> {
    questions
        .iter()
        .map(|q| {
            let mut p = Prediction { question_id: q.id.clone(), ..Prediction::default() };
            match &q.answer {
                AnswerValue::Boxes(entities) => p.boxes = Some(gt_boxes(entities)),
                AnswerValue::Count(n) => p.answer = Some(serde_json::json!(n)),
                AnswerValue::Value(v) => p.answer = Some(serde_json::json!(v)),
                AnswerValue::Bool(b) => p.answer = Some(serde_json::json!(b)),
            }
            p.steps = Some(workflow_step_boxes(q));
            p
        })
        .collect()
}

/// Parses a JSON array or JSON-lines stream of predictions.
pub fn predictions_from_str(text: &str) -> Result<Vec<Prediction>, String> {
    parse_array_or_lines(text)
}

/// Parses a JSON array or JSON-lines stream of questions.
pub fn questions_from_str(text: &str) -> Result<Vec<GeneratedQuestion>, String> {
    parse_array_or_lines(text)
}

fn parse_array_or_lines<T: serde::de::DeserializeOwned>(text: &str) -> Result<Vec<T>, String> {
    if text.trim_start().starts_with('[') {
        return serde_json::from_str(text).map_err(|e| e.to_string());
    }
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(|l| serde_json::from_str(l).map_err(|e| e.to_string()))
        .collect()
}
