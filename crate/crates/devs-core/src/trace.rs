//! Simulation traces: what happened, when, to which model.
//!
//! The kernel feeds a [`Trace`] recorder while it runs. Recording enforces
//! the one property every consumer relies on — time never regresses — and
//! optionally mirrors each entry to a tab-separated text log.
//!
//! [`io_equivalent`] compares two traces by their top-level output behaviour
//! only, which is the observable a hierarchical model and its flattened
//! counterpart must agree on (their internal entries differ by construction:
//! flattening collapses the state space).

use std::fmt;
use std::io::Write;

use thiserror::Error;

use crate::event::{ModelPath, PortId};
use crate::time::{fmt_time, Instant};

/// What an entry records.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceKind {
    /// Model initialized (once per model, at simulation start).
    Init,
    /// Internal transition; carries the emitted output event, if any.
    Internal,
    /// External transition; carries the consumed input event.
    External,
    /// Output observed at the top of the hierarchy.
    OutputTop,
}

impl fmt::Display for TraceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TraceKind::Init => "init",
            TraceKind::Internal => "internal",
            TraceKind::External => "external",
            TraceKind::OutputTop => "output_top",
        })
    }
}

/// One recorded occurrence.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceEntry {
    pub time: Instant,
    pub model: ModelPath,
    pub kind: TraceKind,
    /// Port the associated event crossed, when there is one.
    pub port: Option<PortId>,
    /// Canonical text of the event value, when there is one.
    pub value: Option<String>,
    /// Canonical text of the post-transition state (full traces only).
    pub state: Option<String>,
}

impl TraceEntry {
    /// Text log form: `time<TAB>model<TAB>kind<TAB>port<TAB>value<TAB>state`,
    /// absent fields as `-`.
    pub fn render_line(&self) -> String {
        format!(
            "{}\t{}\t{}\t{}\t{}\t{}",
            fmt_time(self.time.as_f64()),
            self.model,
            self.kind,
            self.port
                .as_ref()
                .map_or("-".to_string(), |p| p.name.clone()),
            self.value.as_deref().unwrap_or("-"),
            self.state.as_deref().unwrap_or("-"),
        )
    }
}

/// How much the recorder keeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Default)]
pub enum TraceLevel {
    /// Record nothing.
    #[default]
    Off,
    /// Top-level outputs only.
    Events,
    /// Everything, including per-transition state text.
    Full,
}

/// Recording fault: an entry arrived with a time earlier than the previous
/// entry. This indicates a kernel bug and aborts the simulation.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("trace disorder: entry at {at} after entry at {previous}")]
pub struct TraceDisorder {
    pub at: Instant,
    pub previous: Instant,
}

/// Ordered trace recorder.
pub struct Trace {
    level: TraceLevel,
    entries: Vec<TraceEntry>,
    log: Option<Box<dyn Write + Send>>,
}

impl fmt::Debug for Trace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Trace")
            .field("level", &self.level)
            .field("entries", &self.entries.len())
            .field("log", &self.log.is_some())
            .finish()
    }
}

impl Trace {
    pub fn new(level: TraceLevel) -> Trace {
        Trace {
            level,
            entries: Vec::new(),
            log: None,
        }
    }

    /// Mirrors every recorded entry to `sink`, one line each.
    pub fn with_log(mut self, sink: Box<dyn Write + Send>) -> Trace {
        self.log = Some(sink);
        self
    }

    /// Raises the recording level to at least `level`, keeping entries and
    /// log sink. Lets a consumer that needs outputs recorded (say, to render
    /// a CSV afterwards) accept traces configured for less.
    pub fn at_least(mut self, level: TraceLevel) -> Trace {
        self.level = self.level.max(level);
        self
    }

    pub fn level(&self) -> TraceLevel {
        self.level
    }

    /// Whether transition-level entries are recorded at all (lets the kernel
    /// skip building them when tracing is off or events-only).
    pub fn wants_transitions(&self) -> bool {
        self.level >= TraceLevel::Full
    }

    /// Whether state text should be rendered into entries.
    pub fn wants_state(&self) -> bool {
        self.level >= TraceLevel::Full
    }

    pub fn wants_outputs(&self) -> bool {
        self.level >= TraceLevel::Events
    }

    /// Appends an entry, enforcing non-decreasing time over what was
    /// actually recorded. Entries at equal times are all kept, in insertion
    /// order.
    pub fn record(&mut self, entry: TraceEntry) -> Result<(), TraceDisorder> {
        if let Some(last) = self.entries.last() {
            if entry.time < last.time {
                return Err(TraceDisorder {
                    at: entry.time,
                    previous: last.time,
                });
            }
        }
        if let Some(log) = &mut self.log {
            let _ = writeln!(log, "{}", entry.render_line());
        }
        self.entries.push(entry);
        Ok(())
    }

    pub fn entries(&self) -> &[TraceEntry] {
        &self.entries
    }

    /// The top-level output events, in order.
    pub fn outputs(&self) -> impl Iterator<Item = &TraceEntry> {
        self.entries
            .iter()
            .filter(|e| e.kind == TraceKind::OutputTop)
    }
}

/// True when two traces describe the same top-level output behaviour:
/// identical sequences of (time, port name, value) triples. Model paths are
/// deliberately ignored — a flattened model has a different path shape.
pub fn io_equivalent(a: &Trace, b: &Trace) -> bool {
    let key = |e: &TraceEntry| {
        (
            e.time,
            e.port.as_ref().map(|p| p.name.clone()),
            e.value.clone(),
        )
    };
    let xs: Vec<_> = a.outputs().map(key).collect();
    let ys: Vec<_> = b.outputs().map(key).collect();
    xs == ys
}
