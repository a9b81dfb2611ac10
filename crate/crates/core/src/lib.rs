//! Library for reconstructing per-country retweet and URL co-sharing
//! networks from normalized event logs, detecting stance-labeled
//! communities via hierarchical clustering, and quantifying polarization,
//! echo-chamber alignment, and cross-border information flows.
//!
//! The modules follow the data flow:
//!
//! - [`ingest`]: event-log parsing, keyword filtering, time windowing
//! - [`geolocate`]: profile-string geolocation and country eligibility
//! - [`graph`]: retweet and co-sharing network construction and reduction
//! - [`cluster`]: agglomerative dendrograms, cuts, modularity, selection
//! - [`annotate`]: labeling samples, agreement, stance classification
//! - [`polarization`]: random-walk controversy and partition NMI
//! - [`flows`]: country-level cross-border flow matrices
//! - [`lowcred`]: low-credibility domain lists and URL statistics
//! - [`cohorts`]: per-cohort behavior and suspension statistics
//! - [`synth`]: ground-truth generators used as verification oracles

pub mod annotate;
pub mod cluster;
pub mod cohorts;
pub mod error;
pub mod flows;
pub mod geolocate;
pub mod graph;
pub mod ingest;
pub mod lowcred;
pub mod polarization;
pub mod synth;

pub use error::{Error, Result};
