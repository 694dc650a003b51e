//! The policeman: an autonomous two-phase interrupt source.
//!
//! Works for `work` time units, then emits `manual` (arriving at the
//! intersection and taking over); rests for `rest` units, then emits
//! `automatic` (handing control back). No inputs — the policeman cannot be
//! interrupted.

use crate::atomic::{AtomicModel, AtomicSpec, ModelError};
use crate::event::{Event, EventValue};
use crate::time::Duration;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Duty {
    Working,
    Break,
}

pub struct Policeman {
    work: Duration,
    rest: Duration,
}

impl AtomicModel for Policeman {
    type State = Duty;

    fn initial(&self) -> (Duty, Duration) {
        (Duty::Working, Duration::ZERO)
    }

    fn time_advance(&self, duty: &Duty) -> Duration {
        match duty {
            Duty::Working => self.work,
            Duty::Break => self.rest,
        }
    }

    fn internal(&self, duty: Duty) -> Result<Duty, ModelError> {
        Ok(match duty {
            Duty::Working => Duty::Break,
            Duty::Break => Duty::Working,
        })
    }

    fn external(&self, _: Duty, _: Duration, input: &Event) -> Result<Duty, ModelError> {
        Err(ModelError::new(format!(
            "policeman has no inputs, but received one on '{}'",
            input.port
        )))
    }

    fn output(&self, duty: &Duty) -> Option<Event> {
        let command = match duty {
            Duty::Working => "manual",
            Duty::Break => "automatic",
        };
        Some(Event::new("action", EventValue::symbol(command)))
    }

    fn render_state(&self, duty: &Duty) -> String {
        format!("{duty:?}")
    }
}

/// The policeman as a wired spec: no inputs, output `action` (values
/// `manual`, `automatic`). Starts working.
pub fn policeman(work: Duration, rest: Duration) -> AtomicSpec {
    assert!(
        !work.is_zero() && !work.is_infinite() && !rest.is_zero() && !rest.is_infinite(),
        "work/rest spans must be positive and finite"
    );
    AtomicSpec::new(
        "policeman",
        Vec::<String>::new(),
        ["action"],
        Policeman { work, rest },
    )
}
