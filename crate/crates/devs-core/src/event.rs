//! Ports, event values, and model paths — the vocabulary models exchange.

use std::fmt;

/// Whether a port receives events into a model or emits them out of it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Direction {
    Input,
    Output,
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::Input => "input",
            Direction::Output => "output",
        })
    }
}

/// Hierarchical model address, root first (`system.queue`).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct ModelPath(pub Vec<String>);

impl ModelPath {
    pub fn root(name: &str) -> ModelPath {
        ModelPath(vec![name.to_string()])
    }

    /// Extends the path with a child segment.
    pub fn child(&self, name: &str) -> ModelPath {
        let mut segments = self.0.clone();
        segments.push(name.to_string());
        ModelPath(segments)
    }

    /// Final segment: the model's own name.
    pub fn leaf(&self) -> &str {
        self.0.last().map(String::as_str).unwrap_or("")
    }
}

impl fmt::Display for ModelPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, seg) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(".")?;
            }
            f.write_str(seg)?;
        }
        Ok(())
    }
}

/// Fully qualified port identity: owning model, name, direction.
///
/// Trace entries and validation reports use this form; in-flight events carry
/// only the bare port name because the carrying message already names the
/// model.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PortId {
    pub owner: ModelPath,
    pub name: String,
    pub direction: Direction,
}

impl PortId {
    pub fn new(owner: ModelPath, name: &str, direction: Direction) -> PortId {
        PortId {
            owner,
            name: name.to_string(),
            direction,
        }
    }
}

impl fmt::Display for PortId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.owner, self.name)
    }
}

/// Immutable event payload.
///
/// A small closed vocabulary keeps values comparable for equality and
/// renderable to a canonical text form without trait objects. Models that
/// carry structured data (jobs) encode it as a [`EventValue::Record`].
#[derive(Debug, Clone, PartialEq)]
pub enum EventValue {
    /// Bare identifier-like token (`show_green`, `manual`).
    Symbol(String),
    Int(i64),
    Real(f64),
    /// Ordered key/value pairs; order is fixed by the encoder and significant
    /// for equality and rendering.
    Record(Vec<(String, EventValue)>),
}

impl EventValue {
    pub fn symbol(s: &str) -> EventValue {
        EventValue::Symbol(s.to_string())
    }

    /// Canonical text form. Deterministic; used in trace entries and when
    /// comparing top-level I/O behaviour of two simulations.
    pub fn render(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for EventValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EventValue::Symbol(s) => f.write_str(s),
            EventValue::Int(v) => write!(f, "{v}"),
            // {:?} keeps a trailing `.0` on integral floats, so Int(1) and
            // Real(1.0) stay distinguishable.
            EventValue::Real(v) => write!(f, "{v:?}"),
            EventValue::Record(fields) => {
                f.write_str("{")?;
                for (i, (k, v)) in fields.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{k}={v}")?;
                }
                f.write_str("}")
            }
        }
    }
}

/// An event on the wire: a bare port name plus payload.
#[derive(Debug, Clone, PartialEq)]
pub struct Event {
    pub port: String,
    pub value: EventValue,
}

impl Event {
    pub fn new(port: &str, value: EventValue) -> Event {
        Event {
            port: port.to_string(),
            value,
        }
    }
}

impl fmt::Display for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}!{}", self.port, self.value)
    }
}
