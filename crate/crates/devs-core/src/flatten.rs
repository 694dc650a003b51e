//! Closure under coupling: collapsing a coupled model into one atomic model.
//!
//! [`flatten`] turns a valid [`CoupledSpec`] into an [`AtomicSpec`] with the
//! same boundary ports and the same top-level I/O behaviour. The composite
//! state is a [`FlatState`]: each child's state paired with its elapsed time
//! as of the flattened model's last event. The composed functions are:
//!
//! * time advance — the smallest remaining time `ta_i(s_i) − e_i` over all
//!   children;
//! * output — the selected imminent child's output, forwarded through the
//!   boundary coupling (if one exists) with its translation applied;
//! * internal transition — the selected child fires internally, events flow
//!   along internal couplings (one delivery per coupling, in declaration
//!   order), everyone else just ages;
//! * external transition — the incoming event flows along the couplings
//!   rooted at the matching boundary input port; unwired ports age everyone
//!   and change nothing, mirroring a coordinator routing to an empty
//!   influencee set.
//!
//! Nested coupled children are flattened first (post-order), so translation
//! functions on an event crossing several levels compose outermost-last —
//! exactly the order a coordinator chain applies them.

use std::collections::BTreeMap;
use std::sync::Arc;

use thiserror::Error;

use crate::atomic::{AtomicModel, AtomicSpec, DynState, ModelError};
use crate::coupled::{Component, CoupledSpec, ModelRef, ValidationReport, ZFn};
use crate::event::{Event, EventValue};
use crate::time::{fmt_time, Duration};

/// Why a spec could not be flattened.
#[derive(Debug, Clone, Error)]
pub enum FlattenError {
    /// The spec (or a nested child) violates a structural invariant.
    #[error("cannot flatten an invalid model:\n{0}")]
    Invalid(ValidationReport),
    /// A child output port is wired to more than one boundary output of the
    /// same coupled level. A flattened atomic emits at most one event per
    /// internal transition, so this fan-out is not expressible; keep such a
    /// model hierarchical.
    #[error("{coupled}: output '{emitter}' is wired to {count} boundary ports; a flattened model can emit it to at most one")]
    BoundaryFanOut {
        coupled: String,
        emitter: String,
        count: usize,
    },
}

#[derive(Clone)]
enum FlatTarget {
    /// (child index, input port)
    Child(usize, String),
    /// boundary output port
    Boundary(String),
}

#[derive(Clone)]
struct FlatRoute {
    target: FlatTarget,
    z: Option<ZFn>,
}

impl FlatRoute {
    fn translate(&self, value: EventValue) -> EventValue {
        match &self.z {
            Some(z) => z(value),
            None => value,
        }
    }
}

struct FlatChild {
    name: String,
    behavior: Arc<dyn crate::atomic::ErasedModel>,
}

/// One child's slice of the composite state.
#[derive(Debug)]
struct FlatEntry {
    state: DynState,
    /// Elapsed time as of the flattened model's own last event.
    elapsed: Duration,
}

/// Composite state of a flattened coupled model.
#[derive(Debug)]
pub struct FlatState {
    entries: Vec<FlatEntry>,
    names: Arc<[String]>,
}

impl FlatState {
    /// A child's state and elapsed time, by name.
    pub fn child(&self, name: &str) -> Option<(&DynState, Duration)> {
        let idx = self.names.iter().position(|n| n == name)?;
        let entry = &self.entries[idx];
        Some((&entry.state, entry.elapsed))
    }

    /// All children, in declaration order.
    pub fn children(&self) -> impl Iterator<Item = (&str, &DynState, Duration)> {
        self.names
            .iter()
            .zip(&self.entries)
            .map(|(n, e)| (n.as_str(), &e.state, e.elapsed))
    }
}

/// The behaviour of a flattened coupled model. Implements [`AtomicModel`]
/// over [`FlatState`]; obtain one via [`flatten`] (wrapped in an
/// [`AtomicSpec`]) or [`FlatModel::compile`] (bare, for direct inspection).
pub struct FlatModel {
    coupled_name: String,
    children: Vec<FlatChild>,
    names: Arc<[String]>,
    /// Child indices in select-priority order.
    priority: Vec<usize>,
    /// Routes by (source child, output port), coupling declaration order.
    from_child: BTreeMap<(usize, String), Vec<FlatRoute>>,
    /// Routes by boundary input port, coupling declaration order.
    from_self: BTreeMap<String, Vec<FlatRoute>>,
}

impl FlatModel {
    /// Compiles a flattened behaviour from a *valid* coupled spec, recursing
    /// into nested coupled children first.
    pub fn compile(spec: &CoupledSpec) -> Result<FlatModel, FlattenError> {
        let mut children = Vec::new();
        let mut index = BTreeMap::new();
        for (name, component) in spec.children() {
            let behavior = match component {
                Component::Atomic(atomic) => atomic.behavior().clone(),
                Component::Coupled(nested) => {
                    let flat = FlatModel::compile(nested)?;
                    // Wrap so the child behaves exactly like an atomic with
                    // the nested model's boundary ports.
                    let wrapped = AtomicSpec::new(
                        nested.name(),
                        nested.input_ports().to_vec(),
                        nested.output_ports().to_vec(),
                        flat,
                    );
                    wrapped.behavior().clone()
                }
            };
            index.insert(name.to_string(), children.len());
            children.push(FlatChild {
                name: name.to_string(),
                behavior,
            });
        }

        let priority = spec
            .priority()
            .iter()
            .map(|name| index[name])
            .collect::<Vec<_>>();

        let mut from_child: BTreeMap<(usize, String), Vec<FlatRoute>> = BTreeMap::new();
        let mut from_self: BTreeMap<String, Vec<FlatRoute>> = BTreeMap::new();
        for coupling in spec.couplings() {
            let target = match &coupling.target {
                ModelRef::Child(name) => {
                    FlatTarget::Child(index[name], coupling.target_port.clone())
                }
                ModelRef::Own => FlatTarget::Boundary(coupling.target_port.clone()),
            };
            let route = FlatRoute {
                target,
                z: coupling.map.clone(),
            };
            match &coupling.source {
                ModelRef::Child(name) => from_child
                    .entry((index[name], coupling.source_port.clone()))
                    .or_default()
                    .push(route),
                ModelRef::Own => from_self
                    .entry(coupling.source_port.clone())
                    .or_default()
                    .push(route),
            }
        }

        // λ can forward to at most one boundary port per source.
        for ((child, port), routes) in &from_child {
            let boundary = routes
                .iter()
                .filter(|r| matches!(r.target, FlatTarget::Boundary(_)))
                .count();
            if boundary > 1 {
                return Err(FlattenError::BoundaryFanOut {
                    coupled: spec.name().to_string(),
                    emitter: format!("{}.{}", children[*child].name, port),
                    count: boundary,
                });
            }
        }

        let names: Arc<[String]> = children
            .iter()
            .map(|c| c.name.clone())
            .collect::<Vec<_>>()
            .into();
        Ok(FlatModel {
            coupled_name: spec.name().to_string(),
            children,
            names,
            priority,
            from_child,
            from_self,
        })
    }

    /// Remaining time before child `idx` fires: `ta_i(s_i) − e_i`.
    fn sigma(&self, state: &FlatState, idx: usize) -> Duration {
        let entry = &state.entries[idx];
        let advance = self.children[idx].behavior.time_advance(&entry.state);
        advance.checked_sub(entry.elapsed).unwrap_or_else(|| {
            panic!(
                "{}: child '{}' time advance {} fell below its elapsed {} — non-deterministic ta?",
                self.coupled_name,
                self.children[idx].name,
                fmt_time(advance.as_f64()),
                fmt_time(entry.elapsed.as_f64()),
            )
        })
    }

    /// The child that fires next: the highest-priority member of the
    /// imminent set. Errors when every child is passive.
    pub fn imminent_child<'s>(&'s self, state: &FlatState) -> Result<&'s str, ModelError> {
        self.imminent_index(state)
            .map(|idx| self.children[idx].name.as_str())
    }

    fn imminent_index(&self, state: &FlatState) -> Result<usize, ModelError> {
        let advance = self.min_sigma(state);
        if advance.is_infinite() {
            return Err(ModelError::new(format!(
                "{}: no imminent child (all children passive)",
                self.coupled_name
            )));
        }
        self.priority
            .iter()
            .copied()
            .find(|&idx| self.sigma(state, idx) == advance)
            .ok_or_else(|| ModelError::new("imminent set empty at finite advance (kernel bug)"))
    }

    fn min_sigma(&self, state: &FlatState) -> Duration {
        (0..self.children.len())
            .map(|idx| self.sigma(state, idx))
            .min()
            .unwrap_or(Duration::INFINITY)
    }

    /// Applies the routed deliveries for `event` emitted by child `source`:
    /// one delivery per matching coupling, coupling declaration order.
    /// Boundary targets are skipped (`λ` handles them). Errors when the
    /// event is wired to nothing at all.
    fn route_internal(
        &self,
        entries: &mut [FlatEntry],
        source: usize,
        event: &Event,
    ) -> Result<(), ModelError> {
        let routes = self.from_child.get(&(source, event.port.clone()));
        let routes = match routes {
            Some(routes) if !routes.is_empty() => routes,
            _ => {
                return Err(ModelError::new(format!(
                    "dangling coupling: output on unwired port '{}' of '{}'",
                    event.port, self.children[source].name
                )))
            }
        };
        for route in routes {
            if let FlatTarget::Child(target, port) = &route.target {
                let x = Event::new(port, route.translate(event.value.clone()));
                self.deliver(entries, *target, &x)?;
            }
        }
        Ok(())
    }

    fn deliver(
        &self,
        entries: &mut [FlatEntry],
        target: usize,
        x: &Event,
    ) -> Result<(), ModelError> {
        let entry = &mut entries[target];
        let state = std::mem::replace(&mut entry.state, DynState::vacant());
        let next = self.children[target]
            .behavior
            .external(state, entry.elapsed, x)
            .map_err(|e| {
                ModelError::new(format!("{}: {}", self.children[target].name, e.message))
            })?;
        entry.state = next;
        entry.elapsed = Duration::ZERO;
        Ok(())
    }
}

impl AtomicModel for FlatModel {
    type State = FlatState;

    /// Composite `q_init`: every child starts in its own initial total
    /// state; the flattened model's initial elapsed is the smallest child
    /// elapsed, and each child's entry stores its elapsed relative to that
    /// epoch, so absolute event times are preserved.
    fn initial(&self) -> (FlatState, Duration) {
        let initials: Vec<(DynState, Duration)> =
            self.children.iter().map(|c| c.behavior.initial()).collect();
        let epoch = initials
            .iter()
            .map(|(_, e)| *e)
            .min()
            .unwrap_or(Duration::ZERO);
        let entries = initials
            .into_iter()
            .map(|(state, elapsed)| FlatEntry {
                state,
                elapsed: elapsed
                    .checked_sub(epoch)
                    .expect("epoch is the minimum child elapsed"),
            })
            .collect();
        (
            FlatState {
                entries,
                names: self.names.clone(),
            },
            epoch,
        )
    }

    fn time_advance(&self, state: &FlatState) -> Duration {
        self.min_sigma(state)
    }

    fn internal(&self, mut state: FlatState) -> Result<FlatState, ModelError> {
        let advance = self.min_sigma(&state);
        let starred = self.imminent_index(&state)?;
        // λ of the selected child, evaluated once against its pre-state.
        let emitted = self.children[starred]
            .behavior
            .output(&state.entries[starred].state);

        // Everyone ages to the transition instant first.
        for entry in &mut state.entries {
            entry.elapsed = entry.elapsed + advance;
        }

        // The selected child fires internally and resets.
        {
            let entry = &mut state.entries[starred];
            let current = std::mem::replace(&mut entry.state, DynState::vacant());
            let next = self.children[starred]
                .behavior
                .internal(current)
                .map_err(|e| {
                    ModelError::new(format!("{}: {}", self.children[starred].name, e.message))
                })?;
            entry.state = next;
            entry.elapsed = Duration::ZERO;
        }

        // Its output flows along the internal couplings.
        if let Some(event) = emitted {
            self.route_internal(&mut state.entries, starred, &event)?;
        }
        Ok(state)
    }

    fn external(
        &self,
        mut state: FlatState,
        elapsed: Duration,
        input: &Event,
    ) -> Result<FlatState, ModelError> {
        for entry in &mut state.entries {
            entry.elapsed = entry.elapsed + elapsed;
        }
        if let Some(routes) = self.from_self.get(&input.port) {
            for route in routes {
                if let FlatTarget::Child(target, port) = &route.target {
                    let x = Event::new(port, route.translate(input.value.clone()));
                    self.deliver(&mut state.entries, *target, &x)?;
                }
            }
        }
        Ok(state)
    }

    /// The selected imminent child's output, forwarded through its boundary
    /// coupling when one exists; φ otherwise.
    fn output(&self, state: &FlatState) -> Option<Event> {
        let starred = self.imminent_index(state).ok()?;
        let emitted = self.children[starred]
            .behavior
            .output(&state.entries[starred].state)?;
        let routes = self.from_child.get(&(starred, emitted.port.clone()))?;
        routes.iter().find_map(|route| match &route.target {
            FlatTarget::Boundary(port) => {
                Some(Event::new(port, route.translate(emitted.value.clone())))
            }
            FlatTarget::Child(..) => None,
        })
    }

    fn render_state(&self, state: &FlatState) -> String {
        let mut text = String::from("{");
        for (i, (child, entry)) in self.children.iter().zip(&state.entries).enumerate() {
            if i > 0 {
                text.push_str(", ");
            }
            text.push_str(&format!(
                "{}={}[e={}]",
                child.name,
                child.behavior.render_state(&entry.state),
                fmt_time(entry.elapsed.as_f64()),
            ));
        }
        text.push('}');
        text
    }
}

/// Flattens a coupled model into an atomic model with identical boundary
/// ports and identical top-level I/O behaviour. Validates first and reports
/// every violation on failure.
pub fn flatten(spec: &CoupledSpec) -> Result<AtomicSpec, FlattenError> {
    let report = spec.validate();
    if !report.ok() {
        return Err(FlattenError::Invalid(report));
    }
    let model = FlatModel::compile(spec)?;
    Ok(AtomicSpec::new(
        spec.name(),
        spec.input_ports().to_vec(),
        spec.output_ports().to_vec(),
        model,
    ))
}
