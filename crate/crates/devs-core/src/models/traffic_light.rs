//! The interruptable traffic light.
//!
//! Autonomous cycle Green → Yellow → Red → Green with configurable dwell
//! times, plus a manual mode: a `manual` event (on port `interrupt`) shuts
//! the light off, an `automatic` event turns it back on. Because outputs
//! happen only on internal transitions, the mode switches pass through the
//! zero-duration artificial phases [`Phase::ToManual`] / [`Phase::ToAutomatic`]
//! whose sole purpose is to emit `show_black` / `show_red` on the way.

use crate::atomic::{AtomicModel, AtomicSpec, ModelError};
use crate::event::{Event, EventValue};
use crate::time::Duration;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Green,
    Yellow,
    Red,
    /// Artificial: emits `show_black`, then rests in `Manual`.
    ToManual,
    /// Artificial: emits `show_red`, then resumes the cycle at `Red`.
    ToAutomatic,
    Manual,
}

pub struct TrafficLight {
    delay_green: Duration,
    delay_yellow: Duration,
    delay_red: Duration,
}

impl AtomicModel for TrafficLight {
    type State = Phase;

    fn initial(&self) -> (Phase, Duration) {
        (Phase::Green, Duration::ZERO)
    }

    fn time_advance(&self, phase: &Phase) -> Duration {
        match phase {
            Phase::Green => self.delay_green,
            Phase::Yellow => self.delay_yellow,
            Phase::Red => self.delay_red,
            Phase::ToManual | Phase::ToAutomatic => Duration::ZERO,
            Phase::Manual => Duration::INFINITY,
        }
    }

    fn internal(&self, phase: Phase) -> Result<Phase, ModelError> {
        Ok(match phase {
            Phase::Green => Phase::Yellow,
            Phase::Yellow => Phase::Red,
            Phase::Red => Phase::Green,
            Phase::ToManual => Phase::Manual,
            Phase::ToAutomatic => Phase::Red,
            Phase::Manual => {
                return Err(ModelError::new(
                    "internal transition fired in Manual, a passive phase",
                ))
            }
        })
    }

    fn external(
        &self,
        phase: Phase,
        _elapsed: Duration,
        input: &Event,
    ) -> Result<Phase, ModelError> {
        let command = match &input.value {
            EventValue::Symbol(s) => s.as_str(),
            other => {
                return Err(ModelError::new(format!(
                    "traffic light expects a symbol on '{}', got {other}",
                    input.port
                )))
            }
        };
        match (phase, command) {
            (Phase::Green | Phase::Yellow | Phase::Red, "manual") => Ok(Phase::ToManual),
            (Phase::Manual, "automatic") => Ok(Phase::ToAutomatic),
            _ => Err(ModelError::new(format!(
                "undefined external transition: ({phase:?}, {command})"
            ))),
        }
    }

    fn output(&self, phase: &Phase) -> Option<Event> {
        let shown = match phase {
            Phase::Green => "show_yellow",
            Phase::Yellow => "show_red",
            Phase::Red => "show_green",
            Phase::ToManual => "show_black",
            Phase::ToAutomatic => "show_red",
            Phase::Manual => return None,
        };
        Some(Event::new("observed", EventValue::symbol(shown)))
    }

    fn render_state(&self, phase: &Phase) -> String {
        format!("{phase:?}")
    }
}

/// The traffic light as a wired spec: input `interrupt` (values `manual`,
/// `automatic`), output `observed` (values `show_green`, `show_yellow`,
/// `show_red`, `show_black`). Starts a fresh cycle at `Green`.
pub fn traffic_light(
    delay_green: Duration,
    delay_yellow: Duration,
    delay_red: Duration,
) -> AtomicSpec {
    assert!(
        !delay_green.is_infinite() && !delay_yellow.is_infinite() && !delay_red.is_infinite(),
        "phase delays must be finite"
    );
    AtomicSpec::new(
        "light",
        ["interrupt"],
        ["observed"],
        TrafficLight {
            delay_green,
            delay_yellow,
            delay_red,
        },
    )
}
