//! Template grammar turning programs into English questions and workflow
//! step descriptions.
//!
//! The grammar is data: a JSON file maps task kinds to sentence templates,
//! attributes to surface roles (prenominal adjective, relative clause, or
//! head-noun replacement), and relation payloads to phrases. A built-in
//! English grammar is embedded; custom files follow the same shape.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::geometry::{DistanceCategory, PlanarDirection};
use crate::scene::{EntityClass, ROBOT_ID};
use crate::stgraph::{
    EdgeDirection, EdgePredicate, QuestionProgram, ReferenceSpec, StepOp, TaskKind,
};

const DEFAULT_GRAMMAR: &str = include_str!("../../assets/grammar/english.json");

/// How a noun phrase names its head: indefinite or definite singular, or
/// bare plural.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Number {
    Indefinite,
    Definite,
    Plural,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ClassNouns {
    noun: String,
    plural: String,
}

/// Surface role of an attribute inside a noun phrase.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "role", rename_all = "snake_case", deny_unknown_fields)]
enum AttrStyle {
    /// Prenominal adjective; lower ranks sit further from the noun.
    Adjective { rank: u32 },
    /// Relative clause with `{value}` (and optionally `{attr}`) holes.
    Clause { singular: String, plural: String },
    /// The value replaces the class noun ("a cup", not "a cup object").
    Noun,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NumberedTemplate {
    singular: String,
    plural: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RelationTemplates {
    verb_out: String,
    verb_in: String,
    geometric_out: String,
    geometric_in: String,
}

/// Phrase pair for a geometric label: attached to the target ("with X to
/// the right") or anchored on the reference ("to the right of X").
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RelationPhrase {
    #[serde(rename = "with")]
    with_target: String,
    of: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ReferencePhrases {
    robot: String,
    entity: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct StepTemplates {
    select: String,
    filter: String,
    relate: String,
    count: String,
    query: String,
    exist: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grammar {
    tasks: BTreeMap<String, String>,
    classes: BTreeMap<String, ClassNouns>,
    attributes: BTreeMap<String, AttrStyle>,
    /// Used for attributes the grammar does not know and for slot-qualified
    /// conditions that cannot stay adjectives.
    fallback_clause: NumberedTemplate,
    relations: RelationTemplates,
    directions: BTreeMap<String, RelationPhrase>,
    distances: BTreeMap<String, RelationPhrase>,
    references: ReferencePhrases,
    /// Display names for queried attributes; defaults to the raw name.
    #[serde(default)]
    attr_names: BTreeMap<String, String>,
    steps: StepTemplates,
    slot_suffix: String,
    ordinals: Vec<String>,
}

impl Grammar {
    pub fn parse(text: &str) -> Result<Grammar, String> {
        let grammar: Grammar = serde_json::from_str(text).map_err(|e| e.to_string())?;
        grammar.check()?;
        Ok(grammar)
    }

    pub fn from_path(path: &Path) -> Result<Grammar, String> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("{}: {e}", path.display()))?;
        Grammar::parse(&text)
    }

    /// A grammar must cover every task, class and relation label so that
    /// rendering never fails mid-generation.
    fn check(&self) -> Result<(), String> {
        for task in TaskKind::ALL {
            if !self.tasks.contains_key(task.name()) {
                return Err(format!("no sentence template for task `{}`", task.name()));
            }
        }
        for class in EntityClass::ALL {
            if !self.classes.contains_key(class.name()) {
                return Err(format!("no nouns for class `{}`", class.name()));
            }
        }
        for dir in PlanarDirection::ALL {
            if !self.directions.contains_key(dir.name()) {
                return Err(format!("no phrase for direction `{}`", dir.name()));
            }
        }
        for dist in DistanceCategory::ALL {
            if !self.distances.contains_key(dist.name()) {
                return Err(format!("no phrase for distance `{}`", dist.name()));
            }
        }
        Ok(())
    }

    /// Renders the full question sentence for a program.
    pub fn render_question(&self, program: &QuestionProgram) -> Result<String, String> {
        let class = program
            .select_class()
            .ok_or_else(|| "program does not open with a select".to_string())?;
        let slot_order: Vec<usize> = program.target_slots.iter().copied().collect();
        let number = match program.task {
            TaskKind::Vg => Number::Indefinite,
            TaskKind::VqaWh => Number::Definite,
            TaskKind::VqaCount => Number::Plural,
        };

        let mut filters = Vec::new();
        let mut relate_clauses = Vec::new();
        let mut query: Option<(&str, Option<usize>)> = None;
        for step in &program.steps {
            match step {
                StepOp::Select { .. } | StepOp::Count | StepOp::Exist => {}
                StepOp::Filter { attr, value, slot } => {
                    filters.push((attr.as_str(), value.as_str(), *slot));
                }
                StepOp::Relate { predicate, reference, direction, slot, .. } => {
                    relate_clauses.push(self.relation_clause(
                        predicate,
                        reference,
                        *direction,
                        *slot,
                        &slot_order,
                    )?);
                }
                StepOp::Query { attr, slot } => query = Some((attr.as_str(), *slot)),
            }
        }

        let np = self.noun_phrase(class, &filters, &relate_clauses, number, &slot_order)?;
        let template = self
            .tasks
            .get(program.task.name())
            .ok_or_else(|| format!("no sentence template for task `{}`", program.task.name()))?;
        let mut text = template.replace("{np}", &np);
        if let Some((attr, slot)) = query {
            let name = self.attr_names.get(attr).cloned().unwrap_or_else(|| display(attr));
            text = text.replace("{attr}", &format!("{name}{}", self.suffix(slot, &slot_order)));
        }
        Ok(text)
    }

    /// One workflow line per step, in imperative style.
    pub fn describe_step(&self, program: &QuestionProgram, index: usize) -> Result<String, String> {
        let slot_order: Vec<usize> = program.target_slots.iter().copied().collect();
        let step = program
            .steps
            .get(index)
            .ok_or_else(|| format!("program has no step {index}"))?;
        Ok(match step {
            StepOp::Select { class } => {
                let nouns = self.nouns(*class)?;
                self.steps.select.replace("{plural}", &nouns.plural)
            }
            StepOp::Filter { attr, value, slot } => self
                .steps
                .filter
                .replace("{attr}", &display(attr))
                .replace("{value}", &display(value))
                .replace("{suffix}", &self.suffix(*slot, &slot_order)),
            StepOp::Relate { predicate, reference, direction, slot, .. } => {
                let clause =
                    self.relation_clause(predicate, reference, *direction, *slot, &slot_order)?;
                self.steps.relate.replace("{clause}", &clause)
            }
            StepOp::Count => self.steps.count.clone(),
            StepOp::Query { attr, slot } => self
                .steps
                .query
                .replace("{attr}", &display(attr))
                .replace("{suffix}", &self.suffix(*slot, &slot_order)),
            StepOp::Exist => self.steps.exist.clone(),
        })
    }

    fn nouns(&self, class: EntityClass) -> Result<&ClassNouns, String> {
        self.classes
            .get(class.name())
            .ok_or_else(|| format!("no nouns for class `{}`", class.name()))
    }

    fn suffix(&self, slot: Option<usize>, slot_order: &[usize]) -> String {
        let Some(q) = slot else { return String::new() };
        let pos = slot_order.iter().position(|&s| s == q).unwrap_or(q);
        let ordinal = self
            .ordinals
            .get(pos)
            .cloned()
            .unwrap_or_else(|| format!("{}th", pos + 1));
        self.slot_suffix.replace("{ordinal}", &ordinal)
    }

    fn noun_phrase(
        &self,
        class: EntityClass,
        filters: &[(&str, &str, Option<usize>)],
        relate_clauses: &[String],
        number: Number,
        slot_order: &[usize],
    ) -> Result<String, String> {
        let nouns = self.nouns(class)?;
        let mut adjectives: Vec<(u32, &str, String)> = Vec::new();
        let mut noun_override: Option<String> = None;
        let mut clauses: Vec<String> = Vec::new();

        let clause_of = |template: &str, attr: &str, value: &str| {
            template.replace("{value}", &display(value)).replace("{attr}", &display(attr))
        };
        for &(attr, value, slot) in filters {
            let style = self.attributes.get(attr);
            // Slot-qualified conditions need a clause to carry the suffix.
            if slot.is_some() {
                let template = match style {
                    Some(AttrStyle::Clause { singular, plural }) => match number {
                        Number::Plural => plural,
                        _ => singular,
                    },
                    _ => match number {
                        Number::Plural => &self.fallback_clause.plural,
                        _ => &self.fallback_clause.singular,
                    },
                };
                clauses
                    .push(format!("{}{}", clause_of(template, attr, value), self.suffix(slot, slot_order)));
                continue;
            }
            match style {
                Some(AttrStyle::Adjective { rank }) => {
                    adjectives.push((*rank, attr, display(value)));
                }
                Some(AttrStyle::Clause { singular, plural }) => {
                    let template = match number {
                        Number::Plural => plural,
                        _ => singular,
                    };
                    clauses.push(clause_of(template, attr, value));
                }
                Some(AttrStyle::Noun) => noun_override = Some(display(value)),
                None => {
                    let template = match number {
                        Number::Plural => &self.fallback_clause.plural,
                        _ => &self.fallback_clause.singular,
                    };
                    clauses.push(clause_of(template, attr, value));
                }
            }
        }
        clauses.extend(relate_clauses.iter().cloned());
        adjectives.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.cmp(b.1)));

        let noun = match number {
            Number::Plural => noun_override.map(|n| pluralize(&n)).unwrap_or_else(|| nouns.plural.clone()),
            _ => noun_override.unwrap_or_else(|| nouns.noun.clone()),
        };
        let mut words: Vec<String> = adjectives.into_iter().map(|(_, _, v)| v).collect();
        words.push(noun);
        let head = words.join(" ");
        let mut np = match number {
            Number::Indefinite => format!("{} {head}", article(&head)),
            Number::Definite => format!("the {head}"),
            Number::Plural => head,
        };
        if !clauses.is_empty() {
            np = format!("{np} {}", clauses.join(" and "));
        }
        Ok(np)
    }

    fn relation_clause(
        &self,
        predicate: &EdgePredicate,
        reference: &ReferenceSpec,
        direction: EdgeDirection,
        slot: Option<usize>,
        slot_order: &[usize],
    ) -> Result<String, String> {
        let reference_np = self.reference_np(reference)?;
        let core = match predicate {
            EdgePredicate::Verb(verb) => {
                let template = match direction {
                    EdgeDirection::Out => &self.relations.verb_out,
                    EdgeDirection::In => &self.relations.verb_in,
                };
                template.replace("{verb}", &display(verb)).replace("{reference}", &reference_np)
            }
            EdgePredicate::Planar(d) => {
                self.geometric_clause(&self.directions, d.name(), direction, &reference_np)?
            }
            EdgePredicate::Distance(c) => {
                self.geometric_clause(&self.distances, c.name(), direction, &reference_np)?
            }
        };
        Ok(format!("{core}{}", self.suffix(slot, slot_order)))
    }

    fn geometric_clause(
        &self,
        phrases: &BTreeMap<String, RelationPhrase>,
        label: &str,
        direction: EdgeDirection,
        reference_np: &str,
    ) -> Result<String, String> {
        let phrase = phrases.get(label).ok_or_else(|| format!("no phrase for `{label}`"))?;
        Ok(match direction {
            EdgeDirection::Out => self
                .relations
                .geometric_out
                .replace("{phrase}", &phrase.with_target)
                .replace("{reference}", reference_np),
            EdgeDirection::In => self
                .relations
                .geometric_in
                .replace("{phrase}", &phrase.of)
                .replace("{reference}", reference_np),
        })
    }

    fn reference_np(&self, spec: &ReferenceSpec) -> Result<String, String> {
        match spec {
            ReferenceSpec::Entity { id } if id == ROBOT_ID => Ok(self.references.robot.clone()),
            ReferenceSpec::Entity { id } => Ok(self.references.entity.replace("{id}", id)),
            ReferenceSpec::Filtered { class, attrs } => {
                let filters: Vec<(&str, &str, Option<usize>)> =
                    attrs.iter().map(|(k, v)| (k.as_str(), v.as_str(), None)).collect();
                self.noun_phrase(*class, &filters, &[], Number::Indefinite, &[])
            }
        }
    }
}

impl Default for Grammar {
    fn default() -> Self {
        Grammar::parse(DEFAULT_GRAMMAR).expect("the embedded grammar is valid")
    }
}

fn display(raw: &str) -> String {
    raw.replace('_', " ")
}

fn article(np: &str) -> &'static str {
    match np.chars().next().map(|c| c.to_ascii_lowercase()) {
        Some('a' | 'e' | 'i' | 'o' | 'u') => "an",
        _ => "a",
    }
}

fn pluralize(noun: &str) -> String {
    if noun.ends_with('s')
        || noun.ends_with('x')
        || noun.ends_with('z')
        || noun.ends_with("ch")
        || noun.ends_with("sh")
    {
        return format!("{noun}es");
    }
    if let Some(stem) = noun.strip_suffix('y') {
        let penultimate = stem.chars().last();
        if penultimate.map_or(false, |c| !"aeiou".contains(c.to_ascii_lowercase())) {
            return format!("{stem}ies");
        }
    }
    format!("{noun}s")
}
