//! Planar primitives: vectors, rigid poses, oriented boxes, polygons, BEV grids.

mod grid;
mod obb;
mod polygon;
mod pose;
mod vec2;

pub use grid::{rasterize_box, GridSpec};
pub use obb::{obb_overlap, OrientedBox};
pub use polygon::{
    convex_hull, point_segment_distance, polygon_min_distance, segment_intersection_point,
    segment_segment_distance, segments_intersect, Polygon,
};
pub use pose::{normalize_angle, se2_apply, Pose2};
pub use vec2::Vec2;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GeometryError {
    #[error("non-finite coordinate")]
    NonFinite,
    #[error("box dimensions must satisfy length >= width > 0 (got {length} x {width})")]
    InvalidBox { length: f64, width: f64 },
    #[error("polygon needs at least 3 vertices, got {0}")]
    TooFewVertices(usize),
    #[error("polygon has zero area")]
    ZeroArea,
    #[error("polygon is self-intersecting")]
    SelfIntersecting,
    #[error("grid extents must be positive multiples of the cell size")]
    InvalidGrid,
}
