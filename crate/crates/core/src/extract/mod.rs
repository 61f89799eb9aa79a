//! Recover squares, trees and polygons from raster images.

mod graph;
mod shape;
mod square;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use graph::{detect_nodes, edge_coverage, extract_graph, extract_polygon, ExtractedPolygon, Node};
pub use shape::{components, contour_area, largest_component, min_area_rect, trace_contour, Component, RotatedRect};
pub use square::{extract_square, snap_square, Quad, SnapParams};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExtractError {
    #[error("no foreground shape found")]
    NoShape,
    #[error("degenerate quadrilateral")]
    Degenerate,
    #[error("need at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("no simple cycle through all points")]
    NoCycle,
    #[error("invalid thresholds: {0}")]
    BadThresholds(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExtractionThresholds {
    /// Intensities at or above this count as white.
    pub binarize_white: u8,
    /// Intensities at or below this count as black.
    pub binarize_black: u8,
    pub edge_fraction: f64,
    pub snap_radius: f64,
    pub close_vertex_dist: f64,
    pub collinear_angle: f64,
    /// Line pixels this close to an endpoint are not sampled.
    pub endpoint_exclusion: f64,
}

impl Default for ExtractionThresholds {
    fn default() -> Self {
        Self {
            binarize_white: 192,
            binarize_black: 64,
            edge_fraction: 0.7,
            snap_radius: 3.0,
            close_vertex_dist: 5.0,
            collinear_angle: 0.12,
            endpoint_exclusion: 3.0,
        }
    }
}

impl ExtractionThresholds {
    pub fn validate(&self) -> Result<(), ExtractError> {
        if !(self.edge_fraction > 0.0 && self.edge_fraction <= 1.0) {
            return Err(ExtractError::BadThresholds("edge_fraction must be in (0, 1]"));
        }
        if self.snap_radius < 0.0
            || self.close_vertex_dist < 0.0
            || self.collinear_angle < 0.0
            || self.endpoint_exclusion < 0.0
        {
            return Err(ExtractError::BadThresholds("distances and angles must be non-negative"));
        }
        Ok(())
    }
}
