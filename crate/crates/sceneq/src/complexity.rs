//! Question complexity scoring.
//!
//! A program's complexity is the size of the scene-graph footprint its
//! evaluation touches: `s` entities (the target plus every distinct
//! reference), `r` relation uses, and `t` time slots. Their sum is the
//! difficulty score, bucketed into tiers for reporting and curricula.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::stgraph::{count_edges, EvalError, QuestionProgram, SceneGraph, StepOp};

/// Footprint counts for one program. `s >= 1` (the target is always
/// mentioned) and `t >= 1` (a question targets at least one slot).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Complexity {
    pub s: u32,
    pub r: u32,
    pub t: u32,
}

impl Complexity {
    pub fn new(s: u32, r: u32, t: u32) -> Self {
        assert!(s >= 1, "a question mentions at least its target");
        assert!(t >= 1, "a question targets at least one slot");
        Complexity { s, r, t }
    }

    pub fn difficulty(&self) -> u32 {
        self.s + self.r + self.t
    }

    /// Hops between consecutive targeted slots.
    pub fn temporal_hops(&self) -> u32 {
        self.t - 1
    }

    pub fn tier(&self) -> DifficultyTier {
        match (self.s, self.r, self.t) {
            (1, 0, 1) => DifficultyTier::D1,
            (2, r, 1) if r >= 1 => DifficultyTier::D2,
            (3, r, 1) if r >= 2 => DifficultyTier::D3,
            _ => DifficultyTier::Beyond,
        }
    }
}

impl fmt::Display for Complexity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(s={}, r={}, t={})", self.s, self.r, self.t)
    }
}

/// Difficulty buckets. The named tiers cover single-slot questions of
/// increasing relational depth; everything larger or temporal is `Beyond`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DifficultyTier {
    D1,
    D2,
    D3,
    Beyond,
}

impl DifficultyTier {
    pub const ALL: [DifficultyTier; 4] =
        [DifficultyTier::D1, DifficultyTier::D2, DifficultyTier::D3, DifficultyTier::Beyond];

    pub fn name(&self) -> &'static str {
        match self {
            DifficultyTier::D1 => "d1",
            DifficultyTier::D2 => "d2",
            DifficultyTier::D3 => "d3",
            DifficultyTier::Beyond => "beyond",
        }
    }
}

impl fmt::Display for DifficultyTier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DifficultyTier {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "d1" => Ok(DifficultyTier::D1),
            "d2" => Ok(DifficultyTier::D2),
            "d3" => Ok(DifficultyTier::D3),
            "beyond" => Ok(DifficultyTier::Beyond),
            other => Err(format!("unknown difficulty tier `{other}`")),
        }
    }
}

/// Measures a program against a graph. The entity count is one for the
/// target plus one per distinct relate reference; relation and slot counts
/// come from the edge footprint.
pub fn complexity_of(
    graph: &SceneGraph,
    program: &QuestionProgram,
) -> Result<Complexity, EvalError> {
    let counts = count_edges(graph, program)?;
    let mut references = BTreeSet::new();
    for step in &program.steps {
        if let StepOp::Relate { reference, .. } = step {
            references.insert(reference.canonical());
        }
    }
    Ok(Complexity::new(1 + references.len() as u32, counts.spatial, counts.slots))
}
