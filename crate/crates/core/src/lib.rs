//! Explicit time steppers expressed once against an abstract state algebra.
//!
//! A stepper never touches the elements of a state directly. Everything it
//! needs (temporaries, linear combinations, norms) goes through the [`State`]
//! trait, so any container implementing that trait, including one whose data
//! is spread over several workers, gets every stepper in this crate for free.
//!
//! The crate is `no_std` (with `alloc`) when the default `std` feature is
//! turned off. IO, threads and file formats live in the companion `odeflow`
//! crate.

#![cfg_attr(not(feature = "std"), no_std)]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod adaptive;
pub mod algebra;
pub mod conformance;
pub mod models;
pub mod multistep;
pub mod partition;
pub mod state;
pub mod stepper;
pub mod symplectic;
pub mod tableau;

pub use adaptive::{Controlled, ControllerConfig, TryStep};
pub use algebra::{AlgebraError, Operand, Pointwise, State, MAX_ARITY};
pub use partition::{GridPartition, PartitionError};
pub use state::StateVector;
pub use stepper::{integrate_const, RhsError, StepError, Stepper, StepperKind, System};
pub use tableau::ButcherTableau;
