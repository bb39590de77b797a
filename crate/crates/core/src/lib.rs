//! Intersection accident scenario generation, BEV motion encoding, and
//! accident-prediction evaluation with multi-agent (V2X) perception.

pub mod bev;
pub mod dataset;
pub mod eval;
pub mod geometry;
pub mod io;
pub mod metrics;
pub mod rng;
pub mod scenario;
pub mod sim;
pub mod v2x;
