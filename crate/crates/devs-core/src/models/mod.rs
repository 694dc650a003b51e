//! Bundled example models: the interruptable traffic light with its
//! policeman, and the generator/queue/processor/collector queueing system.

pub mod policeman;
pub mod queueing;
pub mod traffic_light;

pub use policeman::policeman;
pub use queueing::{
    processor_time, queueing_system, CollectorState, GeneratorState, Job, ProcessorState,
    QueueState, QueueingParams,
};
pub use traffic_light::{traffic_light, Phase};

use crate::coupled::CoupledSpec;
use crate::time::Duration;

/// The light under police control: `policeman.action → light.interrupt`,
/// with the light's `observed` output exposed at the boundary. At a shared
/// instant the policeman goes first, so an interrupt preempts a simultaneous
/// phase change.
pub fn police_controlled_light(
    delay_green: Duration,
    delay_yellow: Duration,
    delay_red: Duration,
    work: Duration,
    rest: Duration,
) -> CoupledSpec {
    let mut system = CoupledSpec::new("intersection");
    system
        .add_output("observed")
        .add_child("policeman", policeman(work, rest))
        .add_child("light", traffic_light(delay_green, delay_yellow, delay_red))
        .couple("policeman", "action", "light", "interrupt")
        .couple_to_output("light", "observed", "observed");
    system
}
