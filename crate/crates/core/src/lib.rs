//! Localize dominant objects as spatio-temporal tubes in an unlabeled video
//! collection.
//!
//! The pipeline alternates two steps over pre-extracted features:
//!
//! * **discovery** retrieves, for every key frame, its `k` best-matching key
//!   frames in *other* videos using probabilistic Hough matching between
//!   region proposals ([`appearance`]);
//! * **tracking** re-localizes the object inside every video by maximizing
//!   a chain objective of foreground confidence (appearance standout plus
//!   motion coherence, [`motion`]) and temporal consistency
//!   ([`consistency`]) with dynamic programming ([`solver`]).
//!
//! [`discovery::run_discovery`] drives the loop, [`evaluation`] scores the
//! result, and [`synth`] generates planted collections together with
//! brute-force oracles.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod appearance;
pub mod config;
pub mod consistency;
pub mod discovery;
pub mod error;
pub mod evaluation;
pub mod io;
pub mod model;
pub mod motion;
pub mod scores;
pub mod solver;
pub mod synth;

pub use config::{Config, HoughParams};
pub use discovery::{run_discovery, DiscoveryOutput, NeighborGraph};
pub use error::{Error, Result};
pub use model::{
    BBox, Collection, Descriptor, Frame, GroundTruth, Proposal, Track, Tube, TubeRegion, Video,
};
