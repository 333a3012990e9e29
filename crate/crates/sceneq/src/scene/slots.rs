//! Segmentation of a scene's frame range into time slots.
//!
//! A slot is a half-open frame range plus a representative frame (the middle
//! annotated frame of the range); node attributes and boxes are sampled at
//! the representative frame. Image scenes always form exactly one slot.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{Modality, SceneAnnotation};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TimeSlot {
    pub index: usize,
    pub start: u32,
    /// Exclusive end frame.
    pub end: u32,
    /// The annotated frame the slot is sampled at.
    pub rep_frame: u32,
}

impl TimeSlot {
    pub fn contains(&self, frame: u32) -> bool {
        frame >= self.start && frame < self.end
    }
}

/// How video scenes are cut into slots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "snake_case")]
pub enum SlotPolicy {
    /// Windows of a fixed number of frames; the last window may be shorter.
    FixedWindow { frames: u32 },
    /// A new slot starts wherever any entity's dynamic attributes change
    /// between consecutive annotated frames.
    ChangePoint,
    /// Use the scene's own `slots` list verbatim.
    Authored,
}

impl Default for SlotPolicy {
    fn default() -> Self {
        SlotPolicy::FixedWindow { frames: 100 }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SlotError {
    #[error("scene has no annotated frames")]
    NoFrames,
    #[error("fixed window length must be positive")]
    ZeroWindow,
    #[error("authored slot policy needs a non-empty `slots` list in the scene")]
    NoAuthoredSlots,
}

/// Cuts the scene into time slots. Ranges are disjoint, ordered, and every
/// slot contains at least one annotated frame (ranges that would contain
/// none are dropped).
pub fn segment_slots(
    scene: &SceneAnnotation,
    policy: &SlotPolicy,
) -> Result<Vec<TimeSlot>, SlotError> {
    let frames = scene.frame_indices();
    if frames.is_empty() {
        return Err(SlotError::NoFrames);
    }
    let lo = frames[0];
    let hi = *frames.last().expect("non-empty") + 1;

    if scene.modality == Modality::Image {
        return Ok(vec![TimeSlot { index: 0, start: lo, end: hi, rep_frame: frames[0] }]);
    }

    let ranges: Vec<(u32, u32)> = match policy {
        SlotPolicy::FixedWindow { frames: w } => {
            if *w == 0 {
                return Err(SlotError::ZeroWindow);
            }
            let mut ranges = Vec::new();
            let mut start = lo;
            while start < hi {
                let end = hi.min(start.saturating_add(*w));
                ranges.push((start, end));
                start = end;
            }
            ranges
        }
        SlotPolicy::ChangePoint => {
            let mut bounds = vec![lo];
            for pair in frames.windows(2) {
                if dynamic_state_changed(scene, pair[0], pair[1]) {
                    bounds.push(pair[1]);
                }
            }
            bounds.push(hi);
            bounds.windows(2).map(|b| (b[0], b[1])).collect()
        }
        SlotPolicy::Authored => {
            if scene.slots.is_empty() {
                return Err(SlotError::NoAuthoredSlots);
            }
            scene.slots.iter().map(|s| (s[0], s[1])).collect()
        }
    };

    let mut slots = Vec::new();
    for (start, end) in ranges {
        let covered: Vec<u32> =
            frames.iter().copied().filter(|&f| f >= start && f < end).collect();
        if covered.is_empty() {
            continue;
        }
        slots.push(TimeSlot {
            index: slots.len(),
            start,
            end,
            rep_frame: covered[covered.len() / 2],
        });
    }
    Ok(slots)
}

/// Whether any entity's dynamic attribute map differs between two annotated
/// frames.
fn dynamic_state_changed(scene: &SceneAnnotation, a: u32, b: u32) -> bool {
    scene.entities.iter().any(|e| {
        let at_a = e.dynamic_attrs.get(&a);
        let at_b = e.dynamic_attrs.get(&b);
        at_a != at_b
    })
}
