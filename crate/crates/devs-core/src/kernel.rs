//! The abstract simulator: one simulator per atomic model, one coordinator
//! per coupled model, one root coordinator driving the whole tree.
//!
//! Five synchronization message kinds travel the tree:
//!
//! * `i`    — initialize (downward)
//! * `*`    — execute your imminent internal transition (downward)
//! * `x`    — an input event (downward)
//! * `y`    — an output event (upward)
//! * `done` — transition complete, next event at `t_n` (upward)
//!
//! Message passing is realized as synchronous nested invocation: delivering
//! a message to a child returns the child's ordered replies, which the
//! coordinator feeds back through its own handler. The observable protocol
//! (who receives what, in which order) is exactly the asynchronous one.
//!
//! Simulators keep their model's last event time `t_l` and next event time
//! `t_n`; coordinators aggregate them (`t_l = max`, `t_n = min` over
//! children). All time comparisons are exact — two events are simultaneous
//! only when their times are bit-equal.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::atomic::{AtomicSpec, DynState, ModelError};
use crate::coupled::validate_atomic_spec;
use crate::coupled::{Component, CoupledSpec, Coupling, ModelRef, ValidationReport};
use crate::event::{Direction, Event, ModelPath, PortId};
use crate::time::Instant;
use crate::trace::{Trace, TraceDisorder, TraceEntry, TraceKind};

/// Ceiling on consecutive rounds executed at one unchanged instant before
/// the root declares a suspected algebraic (zero-delay) loop.
pub const DEFAULT_LIVELOCK_LIMIT: u64 = 1_000_000;

/// Kind plus kind-specific payload of a synchronization message.
#[derive(Debug, Clone, PartialEq)]
pub enum MessageKind {
    /// `i`: initialize.
    Init,
    /// `*`: fire the imminent internal transition.
    Star,
    /// `x`: an input event crossing into the receiver.
    Input(Event),
    /// `y`: an output event crossing out of the sender.
    Output(Event),
    /// `done`: transition handled; sender's next event is at the instant.
    Done(Instant),
}

/// A synchronization message: kind, sending model, simulated send time.
#[derive(Debug, Clone, PartialEq)]
pub struct SyncMessage {
    pub kind: MessageKind,
    pub source: ModelPath,
    pub time: Instant,
}

impl SyncMessage {
    pub fn init(source: ModelPath, time: Instant) -> SyncMessage {
        SyncMessage {
            kind: MessageKind::Init,
            source,
            time,
        }
    }

    pub fn star(source: ModelPath, time: Instant) -> SyncMessage {
        SyncMessage {
            kind: MessageKind::Star,
            source,
            time,
        }
    }

    pub fn input(source: ModelPath, time: Instant, event: Event) -> SyncMessage {
        SyncMessage {
            kind: MessageKind::Input(event),
            source,
            time,
        }
    }

    pub fn output(source: ModelPath, time: Instant, event: Event) -> SyncMessage {
        SyncMessage {
            kind: MessageKind::Output(event),
            source,
            time,
        }
    }

    pub fn done(source: ModelPath, time: Instant, next: Instant) -> SyncMessage {
        SyncMessage {
            kind: MessageKind::Done(next),
            source,
            time,
        }
    }
}

/// A simulation abort. Faults are loud by design: a message outside its
/// legal window or a structural impossibility means the run's results would
/// be meaningless.
#[derive(Debug, Clone, Error)]
pub enum SimFault {
    #[error("{model}: bad synchronization: {detail}")]
    BadSynchronization { model: ModelPath, detail: String },
    #[error("{model}: unexpected message: {detail}")]
    UnexpectedMessage { model: ModelPath, detail: String },
    #[error("{model}: dangling coupling: output on unwired port '{port}'")]
    DanglingCoupling { model: ModelPath, port: String },
    #[error("livelock suspected: {rounds} consecutive rounds at t={at} (limit {limit})")]
    LivelockSuspected {
        at: Instant,
        rounds: u64,
        limit: u64,
    },
    #[error("{model}: {source}")]
    Model {
        model: ModelPath,
        source: ModelError,
    },
    #[error(transparent)]
    Trace(#[from] TraceDisorder),
}

fn bad_sync(model: &ModelPath, detail: impl Into<String>) -> SimFault {
    SimFault::BadSynchronization {
        model: model.clone(),
        detail: detail.into(),
    }
}

/// Simulator for one atomic model: owns its current state and the
/// `(t_l, t_n)` pair, and realizes the atomic half of the protocol.
pub struct AtomicSimulator {
    path: ModelPath,
    spec: AtomicSpec,
    state: Option<DynState>,
    t_last: Instant,
    t_next: Instant,
}

impl AtomicSimulator {
    fn new(spec: &AtomicSpec, path: ModelPath) -> AtomicSimulator {
        AtomicSimulator {
            path,
            spec: spec.clone(),
            state: None,
            t_last: Instant::ZERO,
            t_next: Instant::INFINITY,
        }
    }

    pub fn path(&self) -> &ModelPath {
        &self.path
    }

    pub fn spec(&self) -> &AtomicSpec {
        &self.spec
    }

    /// Current state; `None` before initialization.
    pub fn state(&self) -> Option<&DynState> {
        self.state.as_ref()
    }

    fn state_mut(&mut self) -> Result<DynState, SimFault> {
        self.state
            .take()
            .ok_or_else(|| bad_sync(&self.path, "message before initialization"))
    }

    fn model_fault(&self, source: ModelError) -> SimFault {
        SimFault::Model {
            model: self.path.clone(),
            source,
        }
    }

    fn trace_transition(
        &self,
        trace: &mut Trace,
        time: Instant,
        kind: TraceKind,
        event: Option<&Event>,
        direction: Direction,
    ) -> Result<(), SimFault> {
        if !trace.wants_transitions() {
            return Ok(());
        }
        let state_text = if trace.wants_state() {
            self.state
                .as_ref()
                .map(|s| self.spec.behavior().render_state(s))
        } else {
            None
        };
        trace.record(TraceEntry {
            time,
            model: self.path.clone(),
            kind,
            port: event.map(|e| PortId::new(self.path.clone(), &e.port, direction)),
            value: event.map(|e| e.value.render()),
            state: state_text,
        })?;
        Ok(())
    }

    /// Handles one downward message, returning the ordered upward replies
    /// (any `y` output first, the `done` last).
    pub fn handle(
        &mut self,
        msg: &SyncMessage,
        trace: &mut Trace,
    ) -> Result<Vec<SyncMessage>, SimFault> {
        let t = msg.time;
        match &msg.kind {
            MessageKind::Init => {
                let (state, elapsed) = self.spec.initial();
                let advance = self.spec.behavior().time_advance(&state);
                if elapsed > advance {
                    return Err(bad_sync(
                        &self.path,
                        format!("initial elapsed {elapsed} exceeds time advance {advance}"),
                    ));
                }
                // t_l ← t − e: the model's previous event lies before the start.
                self.t_last = t - elapsed;
                self.t_next = self.t_last + advance;
                self.state = Some(state);
                self.trace_transition(trace, t, TraceKind::Init, None, Direction::Input)?;
                Ok(vec![SyncMessage::done(self.path.clone(), t, self.t_next)])
            }
            MessageKind::Star => {
                if t != self.t_next {
                    return Err(bad_sync(
                        &self.path,
                        format!("(*, {t}) received but t_n = {}", self.t_next),
                    ));
                }
                let state = self.state_mut()?;
                // λ reads the state being left, before δ_int replaces it.
                let output = self.spec.behavior().output(&state);
                if let Some(event) = &output {
                    if !self.spec.has_output(&event.port) {
                        return Err(self.model_fault(ModelError::new(format!(
                            "output on undeclared port '{}'",
                            event.port
                        ))));
                    }
                }
                let next = self
                    .spec
                    .behavior()
                    .internal(state)
                    .map_err(|e| self.model_fault(e))?;
                self.t_last = t;
                self.t_next = t + self.spec.behavior().time_advance(&next);
                self.state = Some(next);
                self.trace_transition(
                    trace,
                    t,
                    TraceKind::Internal,
                    output.as_ref(),
                    Direction::Output,
                )?;
                let mut replies = Vec::with_capacity(2);
                if let Some(event) = output {
                    replies.push(SyncMessage::output(self.path.clone(), t, event));
                }
                replies.push(SyncMessage::done(self.path.clone(), t, self.t_next));
                Ok(replies)
            }
            MessageKind::Input(event) => {
                if t < self.t_last || t > self.t_next {
                    return Err(bad_sync(
                        &self.path,
                        format!("(x, {t}) outside window [{}, {}]", self.t_last, self.t_next),
                    ));
                }
                if !self.spec.has_input(&event.port) {
                    return Err(self.model_fault(ModelError::new(format!(
                        "input on undeclared port '{}'",
                        event.port
                    ))));
                }
                let state = self.state_mut()?;
                let elapsed = t
                    .duration_since(self.t_last)
                    .expect("window check guarantees t ≥ t_l");
                let next = self
                    .spec
                    .behavior()
                    .external(state, elapsed, event)
                    .map_err(|e| self.model_fault(e))?;
                self.t_last = t;
                self.t_next = t + self.spec.behavior().time_advance(&next);
                self.state = Some(next);
                self.trace_transition(
                    trace,
                    t,
                    TraceKind::External,
                    Some(event),
                    Direction::Input,
                )?;
                Ok(vec![SyncMessage::done(self.path.clone(), t, self.t_next)])
            }
            MessageKind::Output(_) | MessageKind::Done(_) => Err(SimFault::UnexpectedMessage {
                model: self.path.clone(),
                detail: "atomic simulator received an upward message".to_string(),
            }),
        }
    }
}

struct ChildSlot {
    name: String,
    sim: Simulator,
}

/// Coordinator for one coupled model: routes events along couplings and
/// aggregates child `(t_l, t_n)` pairs.
pub struct Coordinator {
    path: ModelPath,
    spec_inputs: Vec<String>,
    children: Vec<ChildSlot>,
    index: BTreeMap<String, usize>,
    couplings: Vec<Coupling>,
    /// coupling indices by (child name, output port), declaration order
    from_child: BTreeMap<(String, String), Vec<usize>>,
    /// coupling indices by own input port, declaration order
    from_self: BTreeMap<String, Vec<usize>>,
    priority: Vec<String>,
    /// Children with an outstanding reply, as delivery counts.
    active: BTreeMap<String, usize>,
    initialized: bool,
    t_last: Instant,
    t_next: Instant,
}

impl Coordinator {
    fn new(spec: &CoupledSpec, path: ModelPath) -> Coordinator {
        let children: Vec<ChildSlot> = spec
            .children()
            .map(|(name, component)| ChildSlot {
                name: name.to_string(),
                sim: Simulator::build(component, path.child(name)),
            })
            .collect();
        let index = children
            .iter()
            .enumerate()
            .map(|(i, c)| (c.name.clone(), i))
            .collect();
        let mut from_child: BTreeMap<(String, String), Vec<usize>> = BTreeMap::new();
        let mut from_self: BTreeMap<String, Vec<usize>> = BTreeMap::new();
        for (i, coupling) in spec.couplings().iter().enumerate() {
            match &coupling.source {
                ModelRef::Child(name) => from_child
                    .entry((name.clone(), coupling.source_port.clone()))
                    .or_default()
                    .push(i),
                ModelRef::Own => from_self
                    .entry(coupling.source_port.clone())
                    .or_default()
                    .push(i),
            }
        }
        Coordinator {
            path,
            spec_inputs: spec.input_ports().to_vec(),
            children,
            index,
            couplings: spec.couplings().to_vec(),
            from_child,
            from_self,
            priority: spec.priority().to_vec(),
            active: BTreeMap::new(),
            initialized: false,
            t_last: Instant::ZERO,
            t_next: Instant::INFINITY,
        }
    }

    pub fn path(&self) -> &ModelPath {
        &self.path
    }

    pub fn children(&self) -> impl Iterator<Item = (&str, &Simulator)> {
        self.children.iter().map(|c| (c.name.as_str(), &c.sim))
    }

    fn mark_active(&mut self, name: &str) {
        *self.active.entry(name.to_string()).or_insert(0) += 1;
    }

    /// Sends `msg` to child `idx` and feeds every reply back through this
    /// coordinator's own handler, accumulating upward messages in `out`.
    fn deliver(
        &mut self,
        idx: usize,
        msg: SyncMessage,
        trace: &mut Trace,
        out: &mut Vec<SyncMessage>,
    ) -> Result<(), SimFault> {
        let replies = self.children[idx].sim.handle(&msg, trace)?;
        for reply in replies {
            let ups = self.handle(&reply, trace)?;
            out.extend(ups);
        }
        Ok(())
    }

    /// Child slot a reply message came from: the path segment directly below
    /// this coordinator.
    fn reply_child(&self, msg: &SyncMessage) -> Result<usize, SimFault> {
        let depth = self.path.0.len();
        let name = msg
            .source
            .0
            .get(depth)
            .ok_or_else(|| SimFault::UnexpectedMessage {
                model: self.path.clone(),
                detail: format!(
                    "reply from '{}' which is not below this coordinator",
                    msg.source
                ),
            })?;
        self.index
            .get(name)
            .copied()
            .ok_or_else(|| SimFault::UnexpectedMessage {
                model: self.path.clone(),
                detail: format!("reply from unknown child '{name}'"),
            })
    }

    /// Routes one event along the couplings rooted at `source`: delivers
    /// translated `x` messages to child targets (in coupling declaration
    /// order) and emits translated `y` messages upward for boundary targets.
    fn route(
        &mut self,
        coupling_ids: Vec<usize>,
        value_of: &Event,
        t: Instant,
        trace: &mut Trace,
        out: &mut Vec<SyncMessage>,
    ) -> Result<(), SimFault> {
        // Mark every child target before the first delivery so the pending
        // count cannot drain to zero mid-route (which would emit a premature
        // done upward).
        let mut plan: Vec<(Option<usize>, Event)> = Vec::with_capacity(coupling_ids.len());
        for id in coupling_ids {
            let coupling = &self.couplings[id];
            let translated = coupling.translate(value_of.value.clone());
            match &coupling.target {
                ModelRef::Child(name) => {
                    let idx = *self
                        .index
                        .get(name)
                        .ok_or_else(|| SimFault::UnexpectedMessage {
                            model: self.path.clone(),
                            detail: format!(
                                "coupling targets unknown child '{name}' (unvalidated spec)"
                            ),
                        })?;
                    plan.push((Some(idx), Event::new(&coupling.target_port, translated)));
                }
                ModelRef::Own => {
                    plan.push((None, Event::new(&coupling.target_port, translated)));
                }
            }
        }
        for (target, _) in &plan {
            if let Some(idx) = target {
                let name = self.children[*idx].name.clone();
                self.mark_active(&name);
            }
        }
        for (target, event) in plan {
            match target {
                Some(idx) => {
                    let msg = SyncMessage::input(self.path.clone(), t, event);
                    self.deliver(idx, msg, trace, out)?;
                }
                None => out.push(SyncMessage::output(self.path.clone(), t, event)),
            }
        }
        Ok(())
    }

    /// Handles one message — downward (`i`, `*`, `x`) from the parent or
    /// upward (`y`, `done`) from a child — returning this coordinator's own
    /// upward replies.
    pub fn handle(
        &mut self,
        msg: &SyncMessage,
        trace: &mut Trace,
    ) -> Result<Vec<SyncMessage>, SimFault> {
        let t = msg.time;
        let mut out = Vec::new();
        match &msg.kind {
            MessageKind::Init => {
                self.initialized = true;
                for idx in 0..self.children.len() {
                    let name = self.children[idx].name.clone();
                    self.mark_active(&name);
                }
                for idx in 0..self.children.len() {
                    let msg = SyncMessage::init(self.path.clone(), t);
                    self.deliver(idx, msg, trace, &mut out)?;
                }
                Ok(out)
            }
            MessageKind::Star => {
                if !self.initialized {
                    return Err(bad_sync(&self.path, "star before initialization"));
                }
                if t != self.t_next {
                    return Err(bad_sync(
                        &self.path,
                        format!("(*, {t}) received but t_n = {}", self.t_next),
                    ));
                }
                // select: the highest-priority child among those imminent at t.
                let starred = self
                    .priority
                    .iter()
                    .filter_map(|name| self.index.get(name).copied())
                    .find(|&idx| self.children[idx].sim.t_next() == t);
                let idx = starred.ok_or_else(|| {
                    bad_sync(&self.path, format!("(*, {t}) but no child is imminent"))
                })?;
                let name = self.children[idx].name.clone();
                self.mark_active(&name);
                let msg = SyncMessage::star(self.path.clone(), t);
                self.deliver(idx, msg, trace, &mut out)?;
                Ok(out)
            }
            MessageKind::Input(event) => {
                if !self.initialized {
                    return Err(bad_sync(&self.path, "input before initialization"));
                }
                if t < self.t_last || t > self.t_next {
                    return Err(bad_sync(
                        &self.path,
                        format!("(x, {t}) outside window [{}, {}]", self.t_last, self.t_next),
                    ));
                }
                if !self.spec_inputs.iter().any(|p| p == &event.port) {
                    return Err(SimFault::Model {
                        model: self.path.clone(),
                        source: ModelError::new(format!(
                            "input on undeclared port '{}'",
                            event.port
                        )),
                    });
                }
                let ids = self.from_self.get(&event.port).cloned().unwrap_or_default();
                if ids.is_empty() {
                    // Input wired to nothing: every child keeps aging; the
                    // aggregate (t_l, t_n) is unchanged.
                    out.push(SyncMessage::done(self.path.clone(), t, self.t_next));
                    return Ok(out);
                }
                self.route(ids, event, t, trace, &mut out)?;
                Ok(out)
            }
            MessageKind::Output(event) => {
                let idx = self.reply_child(msg)?;
                let name = self.children[idx].name.clone();
                let ids = self
                    .from_child
                    .get(&(name.clone(), event.port.clone()))
                    .cloned()
                    .unwrap_or_default();
                if ids.is_empty() {
                    return Err(SimFault::DanglingCoupling {
                        model: self.path.child(&name),
                        port: event.port.clone(),
                    });
                }
                self.route(ids, event, t, trace, &mut out)?;
                Ok(out)
            }
            MessageKind::Done(reported_next) => {
                let idx = self.reply_child(msg)?;
                let name = self.children[idx].name.clone();
                debug_assert_eq!(*reported_next, self.children[idx].sim.t_next());
                let _ = reported_next;
                match self.active.get_mut(&name) {
                    None => {
                        return Err(SimFault::UnexpectedMessage {
                            model: self.path.clone(),
                            detail: format!(
                                "done from child '{name}' with no outstanding delivery"
                            ),
                        })
                    }
                    Some(count) => {
                        *count -= 1;
                        if *count == 0 {
                            self.active.remove(&name);
                        }
                    }
                }
                if self.active.is_empty() {
                    // Round complete: aggregate children.
                    self.t_last = self
                        .children
                        .iter()
                        .map(|c| c.sim.t_last())
                        .max()
                        .unwrap_or(Instant::ZERO);
                    self.t_next = self
                        .children
                        .iter()
                        .map(|c| c.sim.t_next())
                        .min()
                        .unwrap_or(Instant::INFINITY);
                    out.push(SyncMessage::done(self.path.clone(), t, self.t_next));
                }
                Ok(out)
            }
        }
    }
}

/// A node in the simulator tree.
pub enum Simulator {
    Atomic(AtomicSimulator),
    Coupled(Coordinator),
}

impl Simulator {
    /// Builds the simulator tree for a model. The model must be valid
    /// ([`RootCoordinator::new`] validates; direct callers are expected to).
    pub fn build(model: &Component, path: ModelPath) -> Simulator {
        match model {
            Component::Atomic(spec) => Simulator::Atomic(AtomicSimulator::new(spec, path)),
            Component::Coupled(spec) => Simulator::Coupled(Coordinator::new(spec, path)),
        }
    }

    pub fn handle(
        &mut self,
        msg: &SyncMessage,
        trace: &mut Trace,
    ) -> Result<Vec<SyncMessage>, SimFault> {
        match self {
            Simulator::Atomic(sim) => sim.handle(msg, trace),
            Simulator::Coupled(coord) => coord.handle(msg, trace),
        }
    }

    pub fn t_last(&self) -> Instant {
        match self {
            Simulator::Atomic(sim) => sim.t_last,
            Simulator::Coupled(coord) => coord.t_last,
        }
    }

    pub fn t_next(&self) -> Instant {
        match self {
            Simulator::Atomic(sim) => sim.t_next,
            Simulator::Coupled(coord) => coord.t_next,
        }
    }

    pub fn path(&self) -> &ModelPath {
        match self {
            Simulator::Atomic(sim) => sim.path(),
            Simulator::Coupled(coord) => coord.path(),
        }
    }

    /// Descends to a nested simulator by child names.
    pub fn find(&self, segments: &[&str]) -> Option<&Simulator> {
        match segments.split_first() {
            None => Some(self),
            Some((head, rest)) => match self {
                Simulator::Atomic(_) => None,
                Simulator::Coupled(coord) => coord
                    .children
                    .iter()
                    .find(|c| c.name == *head)
                    .and_then(|c| c.sim.find(rest)),
            },
        }
    }

    /// The atomic simulator inside, if this node is atomic.
    pub fn as_atomic(&self) -> Option<&AtomicSimulator> {
        match self {
            Simulator::Atomic(sim) => Some(sim),
            Simulator::Coupled(_) => None,
        }
    }
}

/// Error building a root coordinator from an invalid model.
#[derive(Debug, Clone, Error)]
#[error("model failed validation:\n{report}")]
pub struct InvalidModel {
    pub report: ValidationReport,
}

/// Drives the top of the tree: initializes at `t = 0`, then repeatedly
/// advances to the next event time and issues `*` until the termination
/// predicate holds or the model passivates.
pub struct RootCoordinator {
    top: Simulator,
    termination: Box<dyn FnMut(Instant, Instant) -> bool + Send>,
    trace: Trace,
    t: Instant,
    t_next: Instant,
    initialized: bool,
    livelock_limit: u64,
    rounds_at_t: u64,
}

impl RootCoordinator {
    /// Validates `model` and builds its simulator tree.
    ///
    /// The termination predicate receives `(t, t_n)`: the time of the last
    /// executed round and the pending next event time. The run stops when it
    /// returns true — before executing the round at `t_n` — or when
    /// `t_n = +∞`.
    pub fn new(
        model: &Component,
        termination: impl FnMut(Instant, Instant) -> bool + Send + 'static,
        trace: Trace,
    ) -> Result<RootCoordinator, InvalidModel> {
        let report = match model {
            Component::Atomic(spec) => validate_atomic_spec(spec),
            Component::Coupled(spec) => spec.validate(),
        };
        if !report.ok() {
            return Err(InvalidModel { report });
        }
        let path = ModelPath::root(model.name());
        Ok(RootCoordinator {
            top: Simulator::build(model, path),
            termination: Box::new(termination),
            trace,
            t: Instant::ZERO,
            t_next: Instant::INFINITY,
            initialized: false,
            livelock_limit: DEFAULT_LIVELOCK_LIMIT,
            rounds_at_t: 0,
        })
    }

    /// Stops when the next event would fall strictly beyond `horizon`;
    /// events at exactly `horizon` still fire.
    pub fn until(
        model: &Component,
        horizon: Instant,
        trace: Trace,
    ) -> Result<RootCoordinator, InvalidModel> {
        RootCoordinator::new(model, move |_t, t_next| t_next > horizon, trace)
    }

    pub fn with_livelock_limit(mut self, limit: u64) -> RootCoordinator {
        self.livelock_limit = limit;
        self
    }

    pub fn time(&self) -> Instant {
        self.t
    }

    pub fn next_time(&self) -> Instant {
        self.t_next
    }

    pub fn top(&self) -> &Simulator {
        &self.top
    }

    pub fn trace(&self) -> &Trace {
        &self.trace
    }

    pub fn into_trace(self) -> Trace {
        self.trace
    }

    /// Sends `(i, 0.0)` down the tree. Idempotent per run; called by
    /// [`RootCoordinator::step`] if needed.
    pub fn initialize(&mut self) -> Result<(), SimFault> {
        if self.initialized {
            return Ok(());
        }
        let msg = SyncMessage::init(ModelPath::default(), Instant::ZERO);
        let replies = self.top.handle(&msg, &mut self.trace)?;
        self.absorb_replies(replies, Instant::ZERO)?;
        self.initialized = true;
        Ok(())
    }

    fn absorb_replies(&mut self, replies: Vec<SyncMessage>, t: Instant) -> Result<(), SimFault> {
        for reply in replies {
            match reply.kind {
                MessageKind::Output(event) => {
                    if self.trace.wants_outputs() {
                        self.trace.record(TraceEntry {
                            time: t,
                            model: self.top.path().clone(),
                            kind: TraceKind::OutputTop,
                            port: Some(PortId::new(
                                self.top.path().clone(),
                                &event.port,
                                Direction::Output,
                            )),
                            value: Some(event.value.render()),
                            state: None,
                        })?;
                    }
                }
                MessageKind::Done(next) => self.t_next = next,
                _ => {
                    return Err(SimFault::UnexpectedMessage {
                        model: self.top.path().clone(),
                        detail: "root received a downward message kind".to_string(),
                    })
                }
            }
        }
        Ok(())
    }

    /// Executes one round: advances to the pending next event time and sends
    /// `*`. Returns the round's time, or `None` when the run is over
    /// (passivated or termination holds).
    pub fn step(&mut self) -> Result<Option<Instant>, SimFault> {
        self.initialize()?;
        if self.t_next.is_infinite() || (self.termination)(self.t, self.t_next) {
            return Ok(None);
        }
        // Livelock watchdog: unbounded rounds at one instant.
        if self.rounds_at_t > 0 && self.t_next == self.t {
            self.rounds_at_t += 1;
            if self.rounds_at_t > self.livelock_limit {
                return Err(SimFault::LivelockSuspected {
                    at: self.t,
                    rounds: self.rounds_at_t,
                    limit: self.livelock_limit,
                });
            }
        } else {
            self.rounds_at_t = 1;
        }
        self.t = self.t_next;
        let msg = SyncMessage::star(ModelPath::default(), self.t);
        let replies = self.top.handle(&msg, &mut self.trace)?;
        let t = self.t;
        self.absorb_replies(replies, t)?;
        debug_assert!(self.t_next >= self.t, "time must not regress");
        Ok(Some(t))
    }

    /// Runs to completion and returns the final time: the time of the last
    /// executed round (0 when nothing ever fired).
    pub fn run(&mut self) -> Result<Instant, SimFault> {
        while self.step()?.is_some() {}
        Ok(self.t)
    }
}
