//! Atomic model contract.
//!
//! A Classic DEVS atomic model is the tuple ⟨X, Y, S, q_init, δ_int, δ_ext,
//! λ, ta⟩. Model authors implement the strongly typed [`AtomicModel`] trait;
//! [`AtomicSpec`] erases the state type so that heterogeneous models can be
//! wired into one coupled structure and driven by one kernel.
//!
//! Transition functions are written functionally: they consume the old state
//! and return the new one. The output function `λ` and time advance `ta`
//! receive a shared reference only — they must not (and cannot) mutate state,
//! which the kernel relies on when it evaluates the output of the state
//! *being left* before applying the internal transition.

use std::any::Any;
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::event::Event;
use crate::time::Duration;

/// A fault raised by a model's own transition logic, e.g. a queue receiving
/// a finished-signal from a processor it believes is idle. The kernel wraps
/// it with the model's path and aborts the simulation.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{message}")]
pub struct ModelError {
    pub message: String,
}

impl ModelError {
    pub fn new(message: impl Into<String>) -> ModelError {
        ModelError {
            message: message.into(),
        }
    }
}

/// Strongly typed atomic model behaviour.
pub trait AtomicModel: Send + Sync + 'static {
    type State: Send + 'static;

    /// `q_init`: the initial total state `(s, e)`. The elapsed component `e`
    /// must satisfy `0 ≤ e ≤ ta(s)`; the kernel checks this at
    /// initialization.
    fn initial(&self) -> (Self::State, Duration);

    /// `ta(s)`: how long the model rests in `s` absent external input.
    fn time_advance(&self, state: &Self::State) -> Duration;

    /// `δ_int(s)`: state reached when `ta(s)` expires.
    fn internal(&self, state: Self::State) -> Result<Self::State, ModelError>;

    /// `δ_ext((s, e), x)`: state reached when event `x` arrives after the
    /// model has spent `elapsed` in `s` (`0 ≤ elapsed ≤ ta(s)`, boundaries
    /// inclusive).
    fn external(
        &self,
        state: Self::State,
        elapsed: Duration,
        input: &Event,
    ) -> Result<Self::State, ModelError>;

    /// `λ(s)`: the output emitted on leaving `s` through an internal
    /// transition; `None` is the silent output φ.
    fn output(&self, state: &Self::State) -> Option<Event>;

    /// Canonical text form of a state, used by full traces. Must be
    /// deterministic; documented per bundled model.
    fn render_state(&self, state: &Self::State) -> String;
}

/// Type-erased model state. Owned by a simulator or embedded in a flattened
/// composite state; inspect it with [`DynState::downcast_ref`].
pub struct DynState(Box<dyn Any + Send>);

impl DynState {
    pub fn new<S: Send + 'static>(state: S) -> DynState {
        DynState(Box::new(state))
    }

    pub fn downcast_ref<S: 'static>(&self) -> Option<&S> {
        self.0.downcast_ref::<S>()
    }

    pub fn downcast<S: 'static>(self) -> Result<S, DynState> {
        match self.0.downcast::<S>() {
            Ok(boxed) => Ok(*boxed),
            Err(inner) => Err(DynState(inner)),
        }
    }

    /// Placeholder left behind when a transition consumes a state and then
    /// fails; a faulted simulator is never stepped again.
    pub(crate) fn vacant() -> DynState {
        DynState(Box::new(()))
    }
}

impl fmt::Debug for DynState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("DynState(..)")
    }
}

/// Object-safe mirror of [`AtomicModel`] over [`DynState`].
pub(crate) trait ErasedModel: Send + Sync {
    fn initial(&self) -> (DynState, Duration);
    fn time_advance(&self, state: &DynState) -> Duration;
    fn internal(&self, state: DynState) -> Result<DynState, ModelError>;
    fn external(
        &self,
        state: DynState,
        elapsed: Duration,
        input: &Event,
    ) -> Result<DynState, ModelError>;
    fn output(&self, state: &DynState) -> Option<Event>;
    fn render_state(&self, state: &DynState) -> String;
}

struct Erase<M: AtomicModel>(M);

impl<M: AtomicModel> Erase<M> {
    fn type_check<'s>(&self, state: &'s DynState) -> &'s M::State {
        state.downcast_ref::<M::State>().expect(
            "state type mismatch: simulator drove a model with a foreign state (kernel bug)",
        )
    }
}

impl<M: AtomicModel> ErasedModel for Erase<M> {
    fn initial(&self) -> (DynState, Duration) {
        let (s, e) = self.0.initial();
        (DynState::new(s), e)
    }

    fn time_advance(&self, state: &DynState) -> Duration {
        self.0.time_advance(self.type_check(state))
    }

    fn internal(&self, state: DynState) -> Result<DynState, ModelError> {
        let s = state
            .downcast::<M::State>()
            .unwrap_or_else(|_| panic!("state type mismatch in internal transition (kernel bug)"));
        Ok(DynState::new(self.0.internal(s)?))
    }

    fn external(
        &self,
        state: DynState,
        elapsed: Duration,
        input: &Event,
    ) -> Result<DynState, ModelError> {
        let s = state
            .downcast::<M::State>()
            .unwrap_or_else(|_| panic!("state type mismatch in external transition (kernel bug)"));
        Ok(DynState::new(self.0.external(s, elapsed, input)?))
    }

    fn output(&self, state: &DynState) -> Option<Event> {
        self.0.output(self.type_check(state))
    }

    fn render_state(&self, state: &DynState) -> String {
        self.0.render_state(self.type_check(state))
    }
}

/// An atomic model specification: name, port sets, and erased behaviour.
///
/// Immutable once built; cloning shares the behaviour. Safe to send across
/// threads and to instantiate any number of simulators from.
#[derive(Clone)]
pub struct AtomicSpec {
    name: String,
    inputs: Vec<String>,
    outputs: Vec<String>,
    behavior: Arc<dyn ErasedModel>,
}

impl AtomicSpec {
    /// Builds a spec from a typed model and its port sets.
    pub fn new<M: AtomicModel>(
        name: &str,
        inputs: impl IntoIterator<Item = impl Into<String>>,
        outputs: impl IntoIterator<Item = impl Into<String>>,
        model: M,
    ) -> AtomicSpec {
        AtomicSpec {
            name: name.to_string(),
            inputs: inputs.into_iter().map(Into::into).collect(),
            outputs: outputs.into_iter().map(Into::into).collect(),
            behavior: Arc::new(Erase(model)),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn input_ports(&self) -> &[String] {
        &self.inputs
    }

    pub fn output_ports(&self) -> &[String] {
        &self.outputs
    }

    pub fn has_input(&self, port: &str) -> bool {
        self.inputs.iter().any(|p| p == port)
    }

    pub fn has_output(&self, port: &str) -> bool {
        self.outputs.iter().any(|p| p == port)
    }

    /// `q_init` in erased form.
    pub fn initial(&self) -> (DynState, Duration) {
        self.behavior.initial()
    }

    pub(crate) fn behavior(&self) -> &Arc<dyn ErasedModel> {
        &self.behavior
    }
}

impl fmt::Debug for AtomicSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AtomicSpec")
            .field("name", &self.name)
            .field("inputs", &self.inputs)
            .field("outputs", &self.outputs)
            .finish_non_exhaustive()
    }
}
