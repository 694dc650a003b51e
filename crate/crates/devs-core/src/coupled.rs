//! Coupled model contract: children, couplings, select priority, validation.
//!
//! A coupled model is the tuple ⟨X_self, Y_self, D, {M_i}, {I_i}, {Z_i,j},
//! select⟩. Influencees and translation functions are represented as
//! port-level couplings: a directed link from a source port (a child's
//! output, or one of the coupled model's own input ports) to a target port
//! (a child's input, or one of the coupled model's own output ports),
//! optionally carrying a translation function applied to every value that
//! crosses the link.
//!
//! Construction is permissive — illegal links are representable — and
//! [`CoupledSpec::validate`] reports every violation as data, so a caller
//! can display all problems at once instead of failing on the first.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::atomic::AtomicSpec;
use crate::event::EventValue;

/// Endpoint owner inside one coupled scope: a named child, or the coupled
/// model's own boundary (the formalism's "self").
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ModelRef {
    /// The coupled model's own ports.
    Own,
    /// A direct child, by name.
    Child(String),
}

impl ModelRef {
    pub fn child(name: &str) -> ModelRef {
        ModelRef::Child(name.to_string())
    }
}

impl fmt::Display for ModelRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelRef::Own => f.write_str("self"),
            ModelRef::Child(name) => f.write_str(name),
        }
    }
}

/// Event translation applied along a coupling (the formalism's `Z`).
pub type ZFn = Arc<dyn Fn(EventValue) -> EventValue + Send + Sync>;

/// One directed port-to-port link.
#[derive(Clone)]
pub struct Coupling {
    pub source: ModelRef,
    pub source_port: String,
    pub target: ModelRef,
    pub target_port: String,
    /// Optional translation; identity when absent.
    pub map: Option<ZFn>,
}

impl Coupling {
    pub fn new(
        source: ModelRef,
        source_port: &str,
        target: ModelRef,
        target_port: &str,
    ) -> Coupling {
        Coupling {
            source,
            source_port: source_port.to_string(),
            target,
            target_port: target_port.to_string(),
            map: None,
        }
    }

    pub fn with_map(
        mut self,
        z: impl Fn(EventValue) -> EventValue + Send + Sync + 'static,
    ) -> Coupling {
        self.map = Some(Arc::new(z));
        self
    }

    /// Applies the translation (identity when none).
    pub fn translate(&self, value: EventValue) -> EventValue {
        match &self.map {
            Some(z) => z(value),
            None => value,
        }
    }
}

impl fmt::Debug for Coupling {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}.{} -> {}.{}{}",
            self.source,
            self.source_port,
            self.target,
            self.target_port,
            if self.map.is_some() { " [z]" } else { "" }
        )
    }
}

/// A child model: atomic or (recursively) coupled.
#[derive(Debug, Clone)]
pub enum Component {
    Atomic(AtomicSpec),
    Coupled(CoupledSpec),
}

impl Component {
    pub fn name(&self) -> &str {
        match self {
            Component::Atomic(a) => a.name(),
            Component::Coupled(c) => c.name(),
        }
    }

    pub fn has_input(&self, port: &str) -> bool {
        match self {
            Component::Atomic(a) => a.has_input(port),
            Component::Coupled(c) => c.has_input(port),
        }
    }

    pub fn has_output(&self, port: &str) -> bool {
        match self {
            Component::Atomic(a) => a.has_output(port),
            Component::Coupled(c) => c.has_output(port),
        }
    }
}

impl From<AtomicSpec> for Component {
    fn from(spec: AtomicSpec) -> Component {
        Component::Atomic(spec)
    }
}

impl From<CoupledSpec> for Component {
    fn from(spec: CoupledSpec) -> Component {
        Component::Coupled(spec)
    }
}

/// Coupled model specification.
#[derive(Debug, Clone, Default)]
pub struct CoupledSpec {
    name: String,
    inputs: Vec<String>,
    outputs: Vec<String>,
    children: Vec<(String, Component)>,
    couplings: Vec<Coupling>,
    /// Total order used to break imminence ties; first entry wins. Defaults
    /// to child declaration order.
    priority: Vec<String>,
}

impl CoupledSpec {
    pub fn new(name: &str) -> CoupledSpec {
        CoupledSpec {
            name: name.to_string(),
            ..CoupledSpec::default()
        }
    }

    pub fn add_input(&mut self, port: &str) -> &mut Self {
        self.inputs.push(port.to_string());
        self
    }

    pub fn add_output(&mut self, port: &str) -> &mut Self {
        self.outputs.push(port.to_string());
        self
    }

    /// Adds a child; declaration order is also the default select priority.
    pub fn add_child(&mut self, name: &str, component: impl Into<Component>) -> &mut Self {
        self.children.push((name.to_string(), component.into()));
        self.priority.push(name.to_string());
        self
    }

    /// Internal coupling: child output → child input.
    pub fn couple(&mut self, src: &str, src_port: &str, dst: &str, dst_port: &str) -> &mut Self {
        self.couplings.push(Coupling::new(
            ModelRef::child(src),
            src_port,
            ModelRef::child(dst),
            dst_port,
        ));
        self
    }

    /// External input coupling: own input port → child input.
    pub fn couple_from_input(&mut self, own_port: &str, dst: &str, dst_port: &str) -> &mut Self {
        self.couplings.push(Coupling::new(
            ModelRef::Own,
            own_port,
            ModelRef::child(dst),
            dst_port,
        ));
        self
    }

    /// External output coupling: child output → own output port.
    pub fn couple_to_output(&mut self, src: &str, src_port: &str, own_port: &str) -> &mut Self {
        self.couplings.push(Coupling::new(
            ModelRef::child(src),
            src_port,
            ModelRef::Own,
            own_port,
        ));
        self
    }

    /// Adds an arbitrary (possibly invalid) coupling; validation will judge it.
    pub fn add_coupling(&mut self, coupling: Coupling) -> &mut Self {
        self.couplings.push(coupling);
        self
    }

    /// Replaces the select priority (must rank every child exactly once —
    /// checked by [`CoupledSpec::validate`]).
    pub fn set_priority(
        &mut self,
        order: impl IntoIterator<Item = impl Into<String>>,
    ) -> &mut Self {
        self.priority = order.into_iter().map(Into::into).collect();
        self
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

    pub fn children(&self) -> impl Iterator<Item = (&str, &Component)> {
        self.children.iter().map(|(n, c)| (n.as_str(), c))
    }

    pub fn child(&self, name: &str) -> Option<&Component> {
        self.children
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, c)| c)
    }

    pub fn couplings(&self) -> &[Coupling] {
        &self.couplings
    }

    pub fn priority(&self) -> &[String] {
        &self.priority
    }

    /// Everything this component influences: the set of endpoint owners that
    /// appear as coupling targets with `of` as the source owner.
    ///
    /// `of` may be a child or [`ModelRef::Own`]; an unknown child name is an
    /// error rather than an empty set, so typos surface.
    pub fn influencees(&self, of: &ModelRef) -> Result<BTreeSet<ModelRef>, InfluenceeError> {
        if let ModelRef::Child(name) = of {
            if self.child(name).is_none() {
                return Err(InfluenceeError::NoSuchChild {
                    coupled: self.name.clone(),
                    child: name.clone(),
                });
            }
        }
        Ok(self
            .couplings
            .iter()
            .filter(|c| &c.source == of)
            .map(|c| c.target.clone())
            .collect())
    }

    /// Checks every structural invariant of this spec and, recursively, of
    /// all nested children. Returns all violations found.
    pub fn validate(&self) -> ValidationReport {
        let mut report = ValidationReport::default();
        // Children are addressed by their slot name; the root by its own.
        self.validate_into(&mut vec![self.name.clone()], &mut report);
        report
    }

    fn validate_into(&self, path: &mut Vec<String>, report: &mut ValidationReport) {
        let here = path.join(".");

        if self.children.is_empty() {
            report.push(Violation::NoChildren {
                coupled: here.clone(),
            });
        }

        let mut seen = BTreeSet::new();
        for (name, _) in &self.children {
            if !seen.insert(name.clone()) {
                report.push(Violation::DuplicateChild {
                    coupled: here.clone(),
                    child: name.clone(),
                });
            }
        }

        check_port_uniqueness(&here, &self.inputs, &self.outputs, report);

        // Select priority must be a permutation of the child names.
        let child_names: BTreeSet<_> = self.children.iter().map(|(n, _)| n.clone()).collect();
        let mut ranked = BTreeSet::new();
        for name in &self.priority {
            if !child_names.contains(name) {
                report.push(Violation::PriorityUnknownChild {
                    coupled: here.clone(),
                    child: name.clone(),
                });
            }
            if !ranked.insert(name.clone()) {
                report.push(Violation::PriorityDuplicate {
                    coupled: here.clone(),
                    child: name.clone(),
                });
            }
        }
        for name in child_names.difference(&ranked) {
            report.push(Violation::PriorityMissingChild {
                coupled: here.clone(),
                child: name.clone(),
            });
        }

        for coupling in &self.couplings {
            self.validate_coupling(&here, coupling, report);
        }

        for (child_name, component) in &self.children {
            path.push(child_name.clone());
            match component {
                Component::Coupled(nested) => nested.validate_into(path, report),
                Component::Atomic(atomic) => validate_atomic(&path.join("."), atomic, report),
            }
            path.pop();
        }
    }

    fn validate_coupling(&self, here: &str, coupling: &Coupling, report: &mut ValidationReport) {
        let rendered = format!("{coupling:?}");

        // No self-influence: for every i in D ∪ {self}, i ∉ I_i.
        if coupling.source == coupling.target {
            report.push(Violation::SelfInfluence {
                coupled: here.to_string(),
                coupling: rendered.clone(),
            });
        }

        // Links stay in scope: I_i ⊆ D ∪ {self}. A name that is not a direct
        // child (a sibling's grandchild, a typo) escapes this scope.
        let mut endpoint_ok = |owner: &ModelRef, port: &str, end: &str, want_out: bool| {
            match owner {
                ModelRef::Own => {
                    // Source side uses own *input* ports, target side own *output* ports.
                    let ok = if want_out {
                        self.has_input(port)
                    } else {
                        self.has_output(port)
                    };
                    if !ok {
                        report.push(Violation::UnknownPort {
                            coupled: here.to_string(),
                            coupling: rendered.clone(),
                            endpoint: end.to_string(),
                            owner: "self".to_string(),
                            port: port.to_string(),
                        });
                    }
                }
                ModelRef::Child(name) => match self.child(name) {
                    None => report.push(Violation::LinkEscapesScope {
                        coupled: here.to_string(),
                        coupling: rendered.clone(),
                        missing: name.clone(),
                    }),
                    Some(component) => {
                        let ok = if want_out {
                            component.has_output(port)
                        } else {
                            component.has_input(port)
                        };
                        if !ok {
                            report.push(Violation::UnknownPort {
                                coupled: here.to_string(),
                                coupling: rendered.clone(),
                                endpoint: end.to_string(),
                                owner: name.clone(),
                                port: port.to_string(),
                            });
                        }
                    }
                },
            }
        };

        endpoint_ok(&coupling.source, &coupling.source_port, "source", true);
        endpoint_ok(&coupling.target, &coupling.target_port, "target", false);
    }
}

fn check_port_uniqueness(
    here: &str,
    inputs: &[String],
    outputs: &[String],
    report: &mut ValidationReport,
) {
    for (ports, which) in [(inputs, "input"), (outputs, "output")] {
        let mut seen = BTreeSet::new();
        for port in ports {
            if !seen.insert(port.clone()) {
                report.push(Violation::DuplicatePort {
                    model: here.to_string(),
                    direction: which.to_string(),
                    port: port.clone(),
                });
            }
        }
    }
}

fn validate_atomic(here: &str, atomic: &AtomicSpec, report: &mut ValidationReport) {
    check_port_uniqueness(here, atomic.input_ports(), atomic.output_ports(), report);
    // q_init must satisfy 0 ≤ e ≤ ta(s), with finite e.
    let (state, elapsed) = atomic.initial();
    let advance = atomic.behavior().time_advance(&state);
    if elapsed > advance || elapsed.is_infinite() {
        report.push(Violation::InitialElapsedExceedsAdvance {
            model: here.to_string(),
            elapsed,
            advance,
        });
    }
}

/// Standalone check of an atomic spec's own invariants (port uniqueness,
/// legal initial total state). Coupled validation calls this for every
/// atomic child; it is public for bare atomic tops.
pub fn validate_atomic_spec(atomic: &AtomicSpec) -> ValidationReport {
    let mut report = ValidationReport::default();
    validate_atomic(atomic.name(), atomic, &mut report);
    report
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum InfluenceeError {
    #[error("coupled model '{coupled}' has no child named '{child}'")]
    NoSuchChild { coupled: String, child: String },
}

/// One structural violation, carrying enough context to name the offender.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Violation {
    #[error("{coupled}: self-influence is illegal: {coupling}")]
    SelfInfluence { coupled: String, coupling: String },
    #[error("{coupled}: link escapes scope: no child named '{missing}' here: {coupling}")]
    LinkEscapesScope {
        coupled: String,
        coupling: String,
        missing: String,
    },
    #[error("{coupled}: {endpoint} of {coupling}: '{owner}' has no matching '{port}' port")]
    UnknownPort {
        coupled: String,
        coupling: String,
        endpoint: String,
        owner: String,
        port: String,
    },
    #[error("{coupled}: select priority ranks unknown child '{child}'")]
    PriorityUnknownChild { coupled: String, child: String },
    #[error("{coupled}: select priority ranks '{child}' more than once")]
    PriorityDuplicate { coupled: String, child: String },
    #[error("{coupled}: select priority does not rank child '{child}'")]
    PriorityMissingChild { coupled: String, child: String },
    #[error("{coupled}: coupled model has no children")]
    NoChildren { coupled: String },
    #[error("{coupled}: duplicate child name '{child}'")]
    DuplicateChild { coupled: String, child: String },
    #[error("{model}: duplicate {direction} port '{port}'")]
    DuplicatePort {
        model: String,
        direction: String,
        port: String,
    },
    #[error("{model}: initial elapsed {elapsed} exceeds time advance {advance}")]
    InitialElapsedExceedsAdvance {
        model: String,
        elapsed: crate::time::Duration,
        advance: crate::time::Duration,
    },
}

/// All violations found by a validation pass; empty means the spec is legal.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidationReport {
    violations: Vec<Violation>,
}

impl ValidationReport {
    fn push(&mut self, violation: Violation) {
        self.violations.push(violation);
    }

    pub fn ok(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn violations(&self) -> &[Violation] {
        &self.violations
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.ok() {
            return f.write_str("ok");
        }
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}
