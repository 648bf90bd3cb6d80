//! Offline coverage path planning for robotic line-scan surface inspection.
//!
//! The pipeline turns a workpiece point cloud into an ordered list of
//! straight scan segments:
//!
//! 1. [`cloudio`] loads or samples the cloud and estimates normals and
//!    Gaussian/mean curvature per point.
//! 2. [`segmentation`] peels off planes with RANSAC, then clusters the rest
//!    with a curvature-aware K-means that grows the cluster count until every
//!    cluster is tight enough.
//! 3. [`localpath`] splits each region into three slabs along its longest
//!    axis and places a pair of viewpoints over each slab.
//! 4. [`planner`] orders the scan segments and picks their directions to
//!    minimize total motion time, using particle swarm optimization.
//! 5. [`coverage`] sweeps the scanner's field-of-view box along each segment
//!    and reports which points were seen.
//!
//! [`pipeline`] chains the stages under a [`config::PlanConfig`], and
//! [`plan_file`] reads and writes the resulting plans as JSON or CSV.

// `!(x > 0.0)` also rejects NaN, which is the point
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cloudio;
pub mod config;
pub mod coverage;
pub mod error;
pub mod geometry;
pub mod localpath;
pub mod pipeline;
pub mod plan_file;
pub mod planner;
pub mod segmentation;
pub mod spatial;
pub mod synthetic;

pub use error::{Error, Result};
