//! A Classic DEVS simulation kernel.
//!
//! The crate is layered:
//!
//! - [`time`], [`event`]: the vocabulary types — non-negative (possibly
//!   infinite) durations and instants, ports, and event values.
//! - [`atomic`], [`coupled`]: model *specifications*. An [`AtomicSpec`] packages
//!   a behavior (transition functions, time advance, output function) behind a
//!   type-erased interface; a [`CoupledSpec`] wires child components together
//!   with couplings and a tie-breaking priority order.
//! - [`kernel`]: the abstract simulator. Every model element gets a solver
//!   (atomic simulator or coordinator) and the tree is driven by a
//!   [`RootCoordinator`] exchanging synchronization messages.
//! - [`flatten`]: closure under coupling. Any coupled model can be compiled
//!   into a single behaviorally-equivalent atomic model.
//! - [`trace`]: structured event/transition recording and the I/O-equivalence
//!   comparator used to cross-check the two execution strategies.
//! - [`models`], [`experiment`]: ready-made example models (traffic light,
//!   queueing network) and the experiment runner used by the `devs` binary.

pub mod atomic;
pub mod coupled;
pub mod event;
pub mod experiment;
pub mod flatten;
pub mod kernel;
pub mod models;
pub mod time;
pub mod trace;

pub use atomic::{AtomicModel, AtomicSpec, DynState, ModelError};
pub use coupled::{Component, CoupledSpec, Coupling, ModelRef, ValidationReport, Violation};
pub use event::{Direction, Event, EventValue, ModelPath, PortId};
pub use flatten::{flatten, FlatModel, FlatState, FlattenError};
pub use kernel::{MessageKind, RootCoordinator, SimFault, Simulator, SyncMessage};
pub use time::{Duration, Instant, TimeError};
pub use trace::{io_equivalent, Trace, TraceEntry, TraceKind, TraceLevel};

// Compiles the workspace README's code examples as doctests so they cannot
// drift from the real API.
#[cfg(doctest)]
#[doc = include_str!("../../../README.md")]
pub struct ReadmeDoctests;
