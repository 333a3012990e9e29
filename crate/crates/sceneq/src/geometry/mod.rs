//! Geometric primitives: egocentric direction and distance classification,
//! box metrics, and exact k-nearest-neighbour queries over point clouds.
//!
//! Conventions used throughout the crate:
//!
//! * The world frame is right-handed with `+z` up; planar work happens in the
//!   `x`/`y` plane. Lengths are meters, angles are degrees.
//! * A heading is the direction an entity faces, measured counter-clockwise
//!   from the `+x` axis and normalized to `(-180, 180]`.
//! * The planar angle from an oriented entity to another point is the signed
//!   angle from the facing vector to the connecting vector, counter-clockwise
//!   positive, in `(-180, 180]`. Left of the entity is positive.

use serde::{Deserialize, Serialize};
use thiserror::Error;

mod kdtree;

pub use kdtree::{KdTree, Neighbor};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GeomError {
    /// The two centers coincide in the plane, so no direction is defined.
    /// Callers treat this as an "overlapping" condition.
    #[error("positions coincide in the x/y plane; direction is undefined")]
    CoincidentCenters,
    #[error("point cloud is empty")]
    EmptyCloud,
}

/// Axis-aligned image-plane box, `(x, y)` top-left corner plus extent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Box2D {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

impl Box2D {
    pub fn new(x: f64, y: f64, w: f64, h: f64) -> Self {
        Box2D { x, y, w, h }
    }

    pub fn area(&self) -> f64 {
        self.w * self.h
    }
}

/// Oriented 3D bounding box. `heading` is only meaningful for entities with
/// a facing direction (people, the robot) and is `None` otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Box3D {
    pub center: [f64; 3],
    pub dims: [f64; 3],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub heading: Option<f64>,
}

impl Box3D {
    pub fn new(center: [f64; 3], dims: [f64; 3], heading: Option<f64>) -> Self {
        Box3D { center, dims, heading }
    }
}

/// Ordered list of 3D points, in meters.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PointCloud(pub Vec<[f64; 3]>);

impl PointCloud {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// The same cloud shifted by `offset`, used to place an entity-relative
    /// cloud at the entity's world position.
    pub fn translated(&self, offset: [f64; 3]) -> PointCloud {
        PointCloud(
            self.0
                .iter()
                .map(|p| [p[0] + offset[0], p[1] + offset[1], p[2] + offset[2]])
                .collect(),
        )
    }
}

/// Planar position plus facing direction of an oriented entity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose2D {
    pub position: [f64; 2],
    pub heading_deg: f64,
}

impl Pose2D {
    pub fn new(x: f64, y: f64, heading_deg: f64) -> Self {
        Pose2D { position: [x, y], heading_deg: normalize_deg(heading_deg) }
    }
}

/// One of the eight egocentric compass sectors around an oriented entity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlanarDirection {
    Front,
    FrontLeft,
    Left,
    BackLeft,
    Back,
    BackRight,
    Right,
    FrontRight,
}

impl PlanarDirection {
    pub const ALL: [PlanarDirection; 8] = [
        PlanarDirection::Front,
        PlanarDirection::FrontLeft,
        PlanarDirection::Left,
        PlanarDirection::BackLeft,
        PlanarDirection::Back,
        PlanarDirection::BackRight,
        PlanarDirection::Right,
        PlanarDirection::FrontRight,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            PlanarDirection::Front => "front",
            PlanarDirection::FrontLeft => "front_left",
            PlanarDirection::Left => "left",
            PlanarDirection::BackLeft => "back_left",
            PlanarDirection::Back => "back",
            PlanarDirection::BackRight => "back_right",
            PlanarDirection::Right => "right",
            PlanarDirection::FrontRight => "front_right",
        }
    }
}

/// Vertical offset class relative to the observer, gated by a dead band.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VerticalDirection {
    None,
    Up,
    Down,
}

impl VerticalDirection {
    pub fn name(&self) -> &'static str {
        match self {
            VerticalDirection::None => "none",
            VerticalDirection::Up => "up",
            VerticalDirection::Down => "down",
        }
    }
}

/// Full egocentric direction: one of eight planar sectors, optionally
/// refined by a vertical component (16 directions when the vertical part
/// is forced to resolve).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SpatialRelation {
    pub planar: PlanarDirection,
    pub vertical: VerticalDirection,
}

/// Named distance band between two entities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistanceCategory {
    VeryClose,
    Close,
    Moderate,
    Far,
    VeryFar,
}

impl DistanceCategory {
    pub const ALL: [DistanceCategory; 5] = [
        DistanceCategory::VeryClose,
        DistanceCategory::Close,
        DistanceCategory::Moderate,
        DistanceCategory::Far,
        DistanceCategory::VeryFar,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            DistanceCategory::VeryClose => "very_close",
            DistanceCategory::Close => "close",
            DistanceCategory::Moderate => "moderate",
            DistanceCategory::Far => "far",
            DistanceCategory::VeryFar => "very_far",
        }
    }
}

/// Wraps an angle in degrees into `(-180, 180]`. Negative zero folds into
/// positive zero so formatted angles never read `-0`.
pub fn normalize_deg(angle: f64) -> f64 {
    let mut a = angle % 360.0;
    if a <= -180.0 {
        a += 360.0;
    } else if a > 180.0 {
        a -= 360.0;
    }
    a + 0.0
}

/// Signed angle in degrees from `target`'s facing vector to the vector
/// connecting `target` to `other`, counter-clockwise positive, in
/// `(-180, 180]`.
///
/// Errors with [`GeomError::CoincidentCenters`] when the two positions are
/// identical in the plane.
pub fn planar_angle(target: &Pose2D, other: [f64; 2]) -> Result<f64, GeomError> {
    let dx = other[0] - target.position[0];
    let dy = other[1] - target.position[1];
    if dx == 0.0 && dy == 0.0 {
        return Err(GeomError::CoincidentCenters);
    }
    let h = target.heading_deg.to_radians();
    let (fx, fy) = (h.cos(), h.sin());
    let cross = fx * dy - fy * dx;
    let dot = fx * dx + fy * dy;
    Ok(normalize_deg(cross.atan2(dot).to_degrees()))
}

/// Maps a planar angle and a vertical offset onto an egocentric direction.
///
/// Sector bands are evaluated top to bottom; every angle in `(-180, 180]`
/// lands in exactly one:
///
/// | sector      | band                  |
/// |-------------|-----------------------|
/// | front       | `-30 <= θ <= 30`      |
/// | front_left  | `30 < θ <= 45`        |
/// | left        | `45 < θ <= 135`       |
/// | back_left   | `135 < θ <= 145`      |
/// | front_right | `-45 <= θ < -30`      |
/// | right       | `-135 <= θ < -45`     |
/// | back_right  | `-145 <= θ < -135`    |
/// | back        | otherwise             |
///
/// The vertical component is `up` when `dz > tau_z`, `down` when
/// `dz < -tau_z`, and `none` inside the dead band.
pub fn classify_direction(theta_deg: f64, dz: f64, tau_z: f64) -> SpatialRelation {
    debug_assert!(theta_deg > -180.0 - 1e-12 && theta_deg <= 180.0 + 1e-12);
    let planar = if (-30.0..=30.0).contains(&theta_deg) {
        PlanarDirection::Front
    } else if theta_deg > 30.0 && theta_deg <= 45.0 {
        PlanarDirection::FrontLeft
    } else if theta_deg > 45.0 && theta_deg <= 135.0 {
        PlanarDirection::Left
    } else if theta_deg > 135.0 && theta_deg <= 145.0 {
        PlanarDirection::BackLeft
    } else if (-45.0..-30.0).contains(&theta_deg) {
        PlanarDirection::FrontRight
    } else if (-135.0..-45.0).contains(&theta_deg) {
        PlanarDirection::Right
    } else if (-145.0..-135.0).contains(&theta_deg) {
        PlanarDirection::BackRight
    } else {
        PlanarDirection::Back
    };
    let vertical = if dz > tau_z {
        VerticalDirection::Up
    } else if dz < -tau_z {
        VerticalDirection::Down
    } else {
        VerticalDirection::None
    };
    SpatialRelation { planar, vertical }
}

/// Buckets a non-negative distance in meters into a named band:
/// `[0, 0.5)` very close, `[0.5, 1.5)` close, `[1.5, 5)` moderate,
/// `[5, 10)` far, `[10, ∞)` very far.
pub fn classify_distance(d: f64) -> DistanceCategory {
    assert!(d >= 0.0, "distance must be non-negative, got {d}");
    if d < 0.5 {
        DistanceCategory::VeryClose
    } else if d < 1.5 {
        DistanceCategory::Close
    } else if d < 5.0 {
        DistanceCategory::Moderate
    } else if d < 10.0 {
        DistanceCategory::Far
    } else {
        DistanceCategory::VeryFar
    }
}

/// Euclidean distance between two box centers.
pub fn box_distance(a: &Box3D, b: &Box3D) -> f64 {
    let dx = a.center[0] - b.center[0];
    let dy = a.center[1] - b.center[1];
    let dz = a.center[2] - b.center[2];
    (dx * dx + dy * dy + dz * dz).sqrt()
}

/// Distance between the faces of two boxes treated as axis-aligned (the
/// headings are ignored). Zero when the boxes overlap on every axis.
pub fn box_surface_distance(a: &Box3D, b: &Box3D) -> f64 {
    let mut sum = 0.0;
    for axis in 0..3 {
        let gap = (a.center[axis] - b.center[axis]).abs()
            - (a.dims[axis] + b.dims[axis]) / 2.0;
        if gap > 0.0 {
            sum += gap * gap;
        }
    }
    sum.sqrt()
}

/// Intersection over union of two image-plane boxes. Both boxes must have
/// positive extent. Edge sums round, so the raw ratio can land a few ulps
/// outside `[0, 1]` for near-identical boxes; the result is clamped.
pub fn iou_2d(a: &Box2D, b: &Box2D) -> f64 {
    let ix = overlap(a.x, a.w, b.x, b.w);
    let iy = overlap(a.y, a.h, b.y, b.h);
    let inter = ix * iy;
    let union = a.area() + b.area() - inter;
    if union <= 0.0 {
        return 0.0;
    }
    (inter / union).clamp(0.0, 1.0)
}

fn overlap(a0: f64, aw: f64, b0: f64, bw: f64) -> f64 {
    let lo = a0.max(b0);
    let hi = (a0 + aw).min(b0 + bw);
    (hi - lo).max(0.0)
}

/// Mean distance from each point of `a` to its `min(k, |b|)` nearest
/// neighbours in `b`. A fresh KD-tree over `b` answers the queries exactly.
pub fn directed_cloud_distance(
    a: &PointCloud,
    b: &PointCloud,
    k: usize,
) -> Result<f64, GeomError> {
    assert!(k >= 1, "k must be at least 1");
    if a.is_empty() {
        return Err(GeomError::EmptyCloud);
    }
    let tree = KdTree::build(b)?;
    let per_query = k.min(b.len());
    let mut sum = 0.0;
    for &p in &a.0 {
        for n in tree.knn(p, per_query) {
            sum += n.distance;
        }
    }
    Ok(sum / (a.len() * per_query) as f64)
}

/// Symmetric cloud distance: the mean of the two directed distances.
pub fn cloud_distance(a: &PointCloud, b: &PointCloud, k: usize) -> Result<f64, GeomError> {
    let ab = directed_cloud_distance(a, b, k)?;
    let ba = directed_cloud_distance(b, a, k)?;
    Ok((ab + ba) / 2.0)
}
