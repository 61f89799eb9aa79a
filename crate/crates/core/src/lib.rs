//! Pixel-space pipeline for three geometric problems: inscribed squares on
//! Jordan curves, Euclidean Steiner minimal trees and maximum-area
//! polygonization. Covers instance generation, exact and heuristic solvers,
//! rasterization, structure extraction from images, and evaluation metrics.

pub mod curvegen;
pub mod dataset;
pub mod evaluate;
pub mod extract;
pub mod generate;
pub mod geom;
pub mod maxap;
pub mod metrics;
pub mod raster;
pub mod sampling;
pub mod seeds;
pub mod steiner;
