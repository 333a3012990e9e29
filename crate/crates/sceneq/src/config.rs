//! Generation configuration.
//!
//! A [`GenConfig`] gathers everything the engine needs besides the scene:
//! user preferences steering what kind of questions come out, relation
//! thresholds for graph construction, the slot policy, and search limits.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::scene::SlotPolicy;
use crate::stgraph::{RelationConfig, TaskKind};

/// Which entity class questions should target.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SubjectFocus {
    Human,
    Object,
    #[default]
    Both,
}

/// Breadth of a question along one axis. Spatially: how many entities are
/// involved (the target alone, target plus one reference, or a clique of
/// references). Temporally: how many consecutive slots it spans.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scope {
    #[default]
    Single,
    Pair,
    Clique,
}

/// User-facing steering knobs, echoed into every generated question.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Preferences {
    pub task: TaskKind,
    pub subject: SubjectFocus,
    pub spatial_scope: Scope,
    pub temporal_scope: Scope,
    /// Entities in a clique-scoped question (target included); also the
    /// slot-window length of a clique temporal scope.
    pub clique_size: usize,
    /// Grounding and wh questions must resolve to exactly one entity.
    pub unique_target: bool,
}

impl Default for Preferences {
    fn default() -> Self {
        Preferences {
            task: TaskKind::Vg,
            subject: SubjectFocus::Both,
            spatial_scope: Scope::Single,
            temporal_scope: Scope::Single,
            clique_size: 3,
            unique_target: true,
        }
    }
}

/// Full engine configuration. Every field has a default so a config file
/// may specify only what it overrides.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GenConfig {
    pub preferences: Preferences,
    pub relations: RelationConfig,
    pub slot_policy: SlotPolicy,
    /// Instantiation attempts per question before giving up.
    pub attempt_budget: u32,
    /// Surface-form grammar to load; `None` uses the built-in English one.
    pub grammar_path: Option<PathBuf>,
    /// Drop questions whose program already appeared in the batch.
    pub dedupe: bool,
    /// Admit counting questions whose answer is zero.
    pub count_allow_zero: bool,
    /// Most node attributes a single question may constrain.
    pub max_node_attrs: usize,
    /// Most relation uses a pair-scoped question may stack on its reference.
    pub max_pair_relations: usize,
    /// Clique questions must also relate every pair of references.
    pub strict_clique: bool,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            preferences: Preferences::default(),
            relations: RelationConfig::default(),
            slot_policy: SlotPolicy::default(),
            attempt_budget: 100,
            grammar_path: None,
            dedupe: false,
            count_allow_zero: false,
            max_node_attrs: 3,
            max_pair_relations: 2,
            strict_clique: false,
        }
    }
}
