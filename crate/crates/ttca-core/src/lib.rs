//! Lane-change planning against a slower lead vehicle.
//!
//! A potential field (attractive goal, road edges and dividers, an elliptic
//! obstacle bump) is descended to get raw waypoints. The TTC-aware planner
//! then refits those waypoints with a cubic that is held inside the target
//! lane over a window derived from the time to collision, and both paths are
//! tracked with a linear bicycle model to compare ride metrics.
//!
//! The crate is `no_std` and only needs `alloc`.
#![no_std]

extern crate alloc;

pub mod error;
pub mod field;
pub mod fit;
pub mod linalg;
pub mod plan;
pub mod qp;
pub mod sim;
pub mod ttc;

pub use error::{Error, Result};
