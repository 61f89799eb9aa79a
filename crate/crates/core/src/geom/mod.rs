//! Planar primitives shared by every stage of the pipeline: points, segment
//! predicates, polylines, polygons, hulls and straight-line graphs.
//!
//! Predicates are tolerance based (see [`EPS`]); no exact arithmetic.

mod graph;
mod polygon;
mod primitives;

pub(crate) use graph::UnionFind;
pub use graph::{is_tree, minimum_spanning_tree, PlaneGraph};
pub use polygon::{
    convex_hull, convex_hull_indices, is_simple_polygon, point_in_or_on_polygon, point_in_polygon,
    point_to_polyline_distance, shoelace_area, signed_area, Polyline, SimplePolygon,
};
pub use primitives::{orientation, segment_intersect, IntersectionKind, Point, Segment, EPS};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GeomError {
    #[error("empty geometry")]
    Empty,
    #[error("need at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("non-finite coordinate")]
    NonFinite,
    #[error("all points are collinear; hull is degenerate")]
    DegenerateHull,
    #[error("polygon is not simple")]
    NotSimple,
    #[error("edge ({u}, {v}) out of range for {n} vertices")]
    EdgeOutOfRange { u: usize, v: usize, n: usize },
    #[error("self-loop at vertex {0}")]
    SelfLoop(usize),
    #[error("duplicate edge ({0}, {1})")]
    DuplicateEdge(usize, usize),
}
