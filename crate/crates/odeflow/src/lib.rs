//! Distributed grid state, benchmark systems, snapshot and report formats,
//! and the experiment drivers behind the `odeflow` command line tool.
//!
//! The steppers themselves live in [`odeflow_core`], re-exported here as
//! [`core`].

pub use odeflow_core as core;

pub mod baseline;
pub mod distributed;
pub mod experiments;
pub mod grayscott;
pub mod report;
pub mod transport;
pub mod vtk;

pub use distributed::{DistributedState, GridError, Layout, RankLayout};
pub use grayscott::{grayscott_partition, GrayScott};
