//! The queueing system: generator → queue → processors → collector.
//!
//! Jobs of random size arrive at random intervals, wait in a FIFO queue for
//! a free processor (longest-idle first), are processed for
//! `max(min_time, size / speed)`, and end at the collector, which records
//! how long each spent queueing.
//!
//! Wiring (n processors): `generator.out → queue.in`;
//! `queue.out_p → processor_p.in`; `processor_p.finished → queue.signal_in`;
//! `processor_p.job_out → collector.in`. Tie-breaking priority is
//! `[collector, processors…, queue, generator]` so that, at one instant,
//! deliveries drain downstream before new work is injected.
//!
//! A finishing processor must tell two parties — the queue (so it can be
//! re-dispatched) and the collector (handing over the job) — but an atomic
//! model emits at most one event per internal transition. It therefore
//! finishes in two zero-time steps: first `finished` to the queue, then the
//! job to the collector. The priority order above runs the second step
//! before the queue's re-dispatch reaches the processor, so a processor is
//! never handed a job mid-hand-off.
//!
//! # Time anchoring
//!
//! Each model tracks `current_time` by accumulating the elapsed times it is
//! handed, but a clock rebuilt from many small sums drifts by ULPs relative
//! to a clock built differently — the generator's (one sum per emitted job)
//! and the queue's (one sum per delivery) disagree on the last bit after a
//! few events, which would make "this job waited exactly zero" false by one
//! ULP and could even order `queue_exit` before `created`. Events therefore
//! carry their instant *as a value* — jobs their creation time, finished
//! signals the processor's completion time `queue_exit + span` — and the
//! queue re-anchors `current_time` to that value on every delivery. Every
//! stamped time is then derived from identical operands no matter how the
//! surrounding kernel sliced the elapsed times, waits are exactly zero when
//! no queueing happened, and `queue_exit ≥ created` holds exactly (no float
//! lies strictly between a rounded sum and its true value).

use std::collections::VecDeque;

use crate::atomic::{AtomicModel, AtomicSpec, ModelError};
use crate::coupled::CoupledSpec;
use crate::event::{Event, EventValue};
use crate::experiment::rng::RngState;
use crate::time::{Duration, Instant};

/// One unit of work flowing through the system.
#[derive(Debug, Clone, PartialEq)]
pub struct Job {
    pub id: u64,
    /// Indicative of processing effort; strictly positive.
    pub size: f64,
    pub created: Instant,
    /// Stamped by the queue's output function at dispatch.
    pub queue_exit: Option<Instant>,
    /// Stamped alongside `queue_exit`: which processor got the job.
    pub processor: Option<usize>,
}

impl Job {
    /// How long the job waited between arrival and dispatch.
    pub fn wait(&self) -> Option<Duration> {
        self.queue_exit?.duration_since(self.created)
    }

    /// Canonical event encoding; field order is part of the format.
    pub fn to_value(&self) -> EventValue {
        let mut fields = vec![
            ("id".to_string(), EventValue::Int(self.id as i64)),
            ("size".to_string(), EventValue::Real(self.size)),
            (
                "created".to_string(),
                EventValue::Real(self.created.as_f64()),
            ),
        ];
        if let Some(exit) = self.queue_exit {
            fields.push(("queue_exit".to_string(), EventValue::Real(exit.as_f64())));
        }
        if let Some(pid) = self.processor {
            fields.push(("processor".to_string(), EventValue::Int(pid as i64)));
        }
        EventValue::Record(fields)
    }

    pub fn from_value(value: &EventValue) -> Result<Job, ModelError> {
        let fields = match value {
            EventValue::Record(fields) => fields,
            other => {
                return Err(ModelError::new(format!(
                    "expected a job record, got {other}"
                )))
            }
        };
        let lookup = |key: &str| fields.iter().find(|(k, _)| k == key).map(|(_, v)| v);
        let int = |key: &str| match lookup(key) {
            Some(EventValue::Int(v)) if *v >= 0 => Ok(*v as u64),
            Some(other) => Err(ModelError::new(format!(
                "job field '{key}' is not a non-negative int: {other}"
            ))),
            None => Err(ModelError::new(format!("job record lacks field '{key}'"))),
        };
        let real = |key: &str| match lookup(key) {
            Some(EventValue::Real(v)) => Ok(*v),
            Some(other) => Err(ModelError::new(format!(
                "job field '{key}' is not a real: {other}"
            ))),
            None => Err(ModelError::new(format!("job record lacks field '{key}'"))),
        };
        let job = Job {
            id: int("id")?,
            size: real("size")?,
            created: Instant::new(real("created")?),
            queue_exit: lookup("queue_exit")
                .map(|_| real("queue_exit").map(Instant::new))
                .transpose()?,
            processor: lookup("processor")
                .map(|_| int("processor").map(|v| v as usize))
                .transpose()?,
        };
        if job.size <= 0.0 {
            return Err(ModelError::new(format!(
                "job {} has non-positive size {}",
                job.id, job.size
            )));
        }
        Ok(job)
    }
}

/// Processing span for a job: `max(min_time, size / speed)`.
pub fn processor_time(size: f64, speed: f64, min_time: f64) -> Duration {
    Duration::new(min_time.max(size / speed))
}

/// The finished-signal payload: which processor freed up, and when it
/// completed (`queue_exit + span` of the job it just handled — the instant
/// the queue re-anchors its clock to).
fn finished_value(pid: usize, at: Instant) -> EventValue {
    EventValue::Record(vec![
        ("pid".to_string(), EventValue::Int(pid as i64)),
        ("at".to_string(), EventValue::Real(at.as_f64())),
    ])
}

fn parse_finished(value: &EventValue) -> Result<(usize, Instant), ModelError> {
    let bad = || {
        ModelError::new(format!(
            "queue expects {{pid, at}} on 'signal_in', got {value}"
        ))
    };
    let EventValue::Record(fields) = value else {
        return Err(bad());
    };
    let lookup = |key: &str| fields.iter().find(|(k, _)| k == key).map(|(_, v)| v);
    match (lookup("pid"), lookup("at")) {
        (Some(EventValue::Int(pid)), Some(EventValue::Real(at))) if *pid >= 0 && !at.is_nan() => {
            Ok((*pid as usize, Instant::new(*at)))
        }
        _ => Err(bad()),
    }
}

// --- Generator --------------------------------------------------------

/// Emits `count` jobs with exponential(rate) inter-arrival times and
/// uniform(size_lo, size_hi] sizes, then passivates. The RNG stream lives
/// in the generator's state: arrivals are identical regardless of what the
/// rest of the system looks like. Per job, the size is drawn first, the
/// inter-arrival gap second.
pub struct Generator {
    rate: f64,
    size_lo: f64,
    size_hi: f64,
    count: u64,
    seed: u64,
}

#[derive(Debug, Clone)]
pub struct GeneratorState {
    /// Jobs still to emit, the pending one included.
    to_send: u64,
    current_time: Instant,
    /// Time until the pending job is emitted; +∞ once exhausted.
    remaining: Duration,
    next_size: f64,
    next_id: u64,
    rng: RngState,
}

impl GeneratorState {
    /// Jobs not yet emitted (the pending one included).
    pub fn to_send(&self) -> u64 {
        self.to_send
    }
}

impl Generator {
    fn draw(&self, rng: RngState) -> (f64, Duration, RngState) {
        let (size, rng) = rng.uniform(self.size_lo, self.size_hi);
        let (gap, rng) = rng.exponential(self.rate);
        (size, Duration::new(gap), rng)
    }
}

impl AtomicModel for Generator {
    type State = GeneratorState;

    fn initial(&self) -> (GeneratorState, Duration) {
        let rng = RngState::seed(self.seed);
        let (next_size, remaining, rng) = if self.count == 0 {
            (0.0, Duration::INFINITY, rng)
        } else {
            self.draw(rng)
        };
        (
            GeneratorState {
                to_send: self.count,
                current_time: Instant::ZERO,
                remaining,
                next_size,
                next_id: 0,
                rng,
            },
            Duration::ZERO,
        )
    }

    fn time_advance(&self, s: &GeneratorState) -> Duration {
        s.remaining
    }

    fn internal(&self, mut s: GeneratorState) -> Result<GeneratorState, ModelError> {
        s.current_time = s.current_time + s.remaining;
        s.to_send -= 1;
        s.next_id += 1;
        if s.to_send == 0 {
            s.remaining = Duration::INFINITY;
        } else {
            let (size, gap, rng) = self.draw(s.rng);
            s.next_size = size;
            s.remaining = gap;
            s.rng = rng;
        }
        Ok(s)
    }

    fn external(
        &self,
        _: GeneratorState,
        _: Duration,
        input: &Event,
    ) -> Result<GeneratorState, ModelError> {
        Err(ModelError::new(format!(
            "generator has no inputs, but received one on '{}'",
            input.port
        )))
    }

    fn output(&self, s: &GeneratorState) -> Option<Event> {
        if s.to_send == 0 {
            return None;
        }
        let job = Job {
            id: s.next_id,
            size: s.next_size,
            created: s.current_time + s.remaining,
            queue_exit: None,
            processor: None,
        };
        Some(Event::new("out", job.to_value()))
    }

    fn render_state(&self, s: &GeneratorState) -> String {
        format!("to_send={} next_id={} rng={}", s.to_send, s.next_id, s.rng)
    }
}

// --- Queue ------------------------------------------------------------

/// FIFO buffer plus dispatcher. Knows which processors are idle (head of
/// the list = idle the longest) and emits at most one job at a time on the
/// matching per-processor port.
pub struct Queue {
    n_processors: usize,
}

#[derive(Debug, Clone)]
pub struct QueueState {
    fifo: VecDeque<Job>,
    /// Idle processors, longest-idle first.
    idle: VecDeque<usize>,
    /// The job pending emission, if any.
    processing: Option<Job>,
    /// Time left before the pending job is emitted; +∞ iff none pending.
    /// Decremented explicitly on every external transition.
    remaining: Duration,
    current_time: Instant,
}

impl QueueState {
    pub fn fifo_len(&self) -> usize {
        self.fifo.len()
    }

    pub fn idle_processors(&self) -> impl Iterator<Item = usize> + '_ {
        self.idle.iter().copied()
    }

    pub fn pending(&self) -> Option<&Job> {
        self.processing.as_ref()
    }
}

impl AtomicModel for Queue {
    type State = QueueState;

    fn initial(&self) -> (QueueState, Duration) {
        (
            QueueState {
                fifo: VecDeque::new(),
                // All processors start idle; break the tie by id.
                idle: (0..self.n_processors).collect(),
                processing: None,
                remaining: Duration::INFINITY,
                current_time: Instant::ZERO,
            },
            Duration::ZERO,
        )
    }

    fn time_advance(&self, s: &QueueState) -> Duration {
        s.remaining
    }

    fn internal(&self, mut s: QueueState) -> Result<QueueState, ModelError> {
        if s.processing.is_none() || !s.remaining.is_zero() {
            return Err(ModelError::new(
                "spurious internal: queue has no due emission",
            ));
        }
        // The job just left on the port of the longest-idle processor, which
        // is therefore idle no longer.
        s.idle.pop_front().ok_or_else(|| {
            ModelError::new("queue emitted a job with no idle processor (kernel bug)")
        })?;
        s.processing = None;
        if !s.fifo.is_empty() && !s.idle.is_empty() {
            s.processing = s.fifo.pop_front();
            s.remaining = Duration::ZERO;
        } else {
            s.remaining = Duration::INFINITY;
        }
        Ok(s)
    }

    fn external(
        &self,
        mut s: QueueState,
        elapsed: Duration,
        input: &Event,
    ) -> Result<QueueState, ModelError> {
        s.current_time = s.current_time + elapsed;
        if s.processing.is_some() {
            s.remaining = s.remaining.checked_sub(elapsed).ok_or_else(|| {
                ModelError::new("elapsed exceeded the queue's remaining time (kernel bug)")
            })?;
        }
        match input.port.as_str() {
            "in" => {
                let job = Job::from_value(&input.value)?;
                // Re-anchor the clock to the arrival instant the job itself
                // carries (see "Time anchoring" above).
                s.current_time = job.created;
                if s.processing.is_none() && !s.idle.is_empty() {
                    s.processing = Some(job);
                    s.remaining = Duration::ZERO;
                } else {
                    s.fifo.push_back(job);
                }
            }
            "signal_in" => {
                let (pid, at) = parse_finished(&input.value)?;
                if pid >= self.n_processors {
                    return Err(ModelError::new(format!(
                        "queue got a finished signal from unknown processor {pid}"
                    )));
                }
                if s.idle.contains(&pid) {
                    return Err(ModelError::new(format!(
                        "protocol violation: processor {pid} signalled finished while already idle"
                    )));
                }
                s.current_time = at;
                s.idle.push_back(pid);
                if s.processing.is_none() && !s.fifo.is_empty() {
                    s.processing = s.fifo.pop_front();
                    s.remaining = Duration::ZERO;
                }
            }
            other => {
                return Err(ModelError::new(format!(
                    "queue has no input port '{other}'"
                )))
            }
        }
        Ok(s)
    }

    fn output(&self, s: &QueueState) -> Option<Event> {
        let job = s.processing.as_ref()?;
        let pid = *s.idle.front()?;
        let stamped = Job {
            queue_exit: Some(s.current_time + s.remaining),
            processor: Some(pid),
            ..job.clone()
        };
        Some(Event::new(&format!("out_{pid}"), stamped.to_value()))
    }

    fn render_state(&self, s: &QueueState) -> String {
        format!(
            "fifo={} idle={:?} pending={}",
            s.fifo.len(),
            s.idle,
            s.processing.as_ref().map_or(-1i64, |j| j.id as i64),
        )
    }
}

// --- Processor ----------------------------------------------------------

/// Works on one job at a time. A busy processor holds the job with
/// `remaining > 0`; when the span expires it emits `finished` (for the
/// queue) and drops to the zero-time hand-off sub-state `remaining = 0`,
/// from which it emits the job itself (for the collector) and goes idle.
pub struct Processor {
    pid: usize,
    speed: f64,
    min_time: f64,
}

#[derive(Debug, Clone)]
pub struct ProcessorState {
    current: Option<Job>,
    /// +∞ iff idle; 0 with a job iff hand-off pending.
    remaining: Duration,
    current_time: Instant,
}

impl ProcessorState {
    /// The job being worked on (or handed off), if any.
    pub fn current(&self) -> Option<&Job> {
        self.current.as_ref()
    }
}

impl AtomicModel for Processor {
    type State = ProcessorState;

    fn initial(&self) -> (ProcessorState, Duration) {
        (
            ProcessorState {
                current: None,
                remaining: Duration::INFINITY,
                current_time: Instant::ZERO,
            },
            Duration::ZERO,
        )
    }

    fn time_advance(&self, s: &ProcessorState) -> Duration {
        s.remaining
    }

    fn internal(&self, mut s: ProcessorState) -> Result<ProcessorState, ModelError> {
        s.current_time = s.current_time + s.remaining;
        if s.current.is_none() {
            return Err(ModelError::new(format!(
                "spurious internal: processor {} is idle",
                self.pid
            )));
        }
        if s.remaining.is_zero() {
            // Hand-off done: the job went to the collector.
            s.current = None;
            s.remaining = Duration::INFINITY;
        } else {
            // Processing done: `finished` went to the queue; hand off next.
            s.remaining = Duration::ZERO;
        }
        Ok(s)
    }

    fn external(
        &self,
        mut s: ProcessorState,
        elapsed: Duration,
        input: &Event,
    ) -> Result<ProcessorState, ModelError> {
        s.current_time = s.current_time + elapsed;
        if input.port != "in" {
            return Err(ModelError::new(format!(
                "processor {} has no input port '{}'",
                self.pid, input.port
            )));
        }
        if s.current.is_some() {
            return Err(ModelError::new(format!(
                "protocol violation: processor {} received a job while busy",
                self.pid
            )));
        }
        let job = Job::from_value(&input.value)?;
        if job.queue_exit.is_none() {
            // Jobs must arrive via the queue, which stamps them; the stamp is
            // also what the completion time is computed from.
            return Err(ModelError::new(format!(
                "protocol violation: processor {} received unstamped job {}",
                self.pid, job.id
            )));
        }
        let span = processor_time(job.size, self.speed, self.min_time);
        if span.is_zero() {
            // A zero span would collapse the busy and hand-off sub-states.
            return Err(ModelError::new(format!(
                "job {} has a zero processing span on processor {}",
                job.id, self.pid
            )));
        }
        s.current = Some(job);
        s.remaining = span;
        Ok(s)
    }

    fn output(&self, s: &ProcessorState) -> Option<Event> {
        let job = s.current.as_ref()?;
        if s.remaining.is_zero() {
            Some(Event::new("job_out", job.to_value()))
        } else {
            // Completion = dispatch instant + span, from the job's own
            // stamps — exact regardless of how elapsed times were sliced.
            let exit = job.queue_exit?; // enforced present on arrival
            let span = processor_time(job.size, self.speed, self.min_time);
            Some(Event::new(
                "finished",
                finished_value(self.pid, exit + span),
            ))
        }
    }

    fn render_state(&self, s: &ProcessorState) -> String {
        match (&s.current, s.remaining.is_zero()) {
            (None, _) => "idle".to_string(),
            (Some(job), false) => format!("busy job={}", job.id),
            (Some(job), true) => format!("handing-off job={}", job.id),
        }
    }
}

// --- Collector ----------------------------------------------------------

/// Terminal sink: remembers every job it receives, in arrival order.
pub struct Collector;

#[derive(Debug, Clone)]
pub struct CollectorState {
    records: Vec<Job>,
    current_time: Instant,
}

impl CollectorState {
    /// Completed jobs, in collection order.
    pub fn records(&self) -> &[Job] {
        &self.records
    }

    /// `(job id, wait)` pairs, in collection order.
    pub fn waits(&self) -> Vec<(u64, Duration)> {
        self.records
            .iter()
            .map(|job| (job.id, job.wait().expect("collected jobs carry stamps")))
            .collect()
    }
}

impl AtomicModel for Collector {
    type State = CollectorState;

    fn initial(&self) -> (CollectorState, Duration) {
        (
            CollectorState {
                records: Vec::new(),
                current_time: Instant::ZERO,
            },
            Duration::ZERO,
        )
    }

    fn time_advance(&self, _: &CollectorState) -> Duration {
        Duration::INFINITY
    }

    fn internal(&self, _: CollectorState) -> Result<CollectorState, ModelError> {
        Err(ModelError::new(
            "spurious internal: collector is always passive",
        ))
    }

    fn external(
        &self,
        mut s: CollectorState,
        elapsed: Duration,
        input: &Event,
    ) -> Result<CollectorState, ModelError> {
        s.current_time = s.current_time + elapsed;
        let job = Job::from_value(&input.value)?;
        match (job.queue_exit, job.wait()) {
            (None, _) => {
                return Err(ModelError::new(format!(
                    "job {} reached the collector without a queue-exit stamp",
                    job.id
                )))
            }
            (Some(exit), None) => {
                return Err(ModelError::new(format!(
                    "job {} has a negative wait: queue_exit {exit} precedes created {}",
                    job.id, job.created
                )))
            }
            (Some(_), Some(_)) => s.records.push(job),
        }
        Ok(s)
    }

    fn output(&self, _: &CollectorState) -> Option<Event> {
        None
    }

    fn render_state(&self, s: &CollectorState) -> String {
        format!("collected={}", s.records.len())
    }
}

// --- The wired system ---------------------------------------------------

/// Everything needed to instantiate the system; validated by the config
/// layer, re-checked here.
#[derive(Debug, Clone, PartialEq)]
pub struct QueueingParams {
    pub n_processors: usize,
    /// Arrival rate of the exponential inter-arrival distribution.
    pub gen_rate: f64,
    /// Uniform job-size bounds, `0 < size_lo ≤ size_hi`.
    pub size_lo: f64,
    pub size_hi: f64,
    /// Per-processor speeds, length `n_processors`.
    pub speeds: Vec<f64>,
    /// Per-processor minimum spans, length `n_processors`.
    pub min_times: Vec<f64>,
    pub n_jobs: u64,
    pub seed: u64,
}

/// Builds the coupled queueing system: children `generator`, `queue`,
/// `processor_0 … processor_{n−1}`, `collector`, wired as described in the
/// module docs. The system has no boundary ports — its observable result is
/// the collector's records.
pub fn queueing_system(params: &QueueingParams) -> Result<CoupledSpec, ModelError> {
    let n = params.n_processors;
    if n == 0 {
        return Err(ModelError::new("n_processors must be at least 1"));
    }
    for (list, what) in [(&params.speeds, "speeds"), (&params.min_times, "min_times")] {
        if list.len() != n {
            return Err(ModelError::new(format!(
                "{what} lists {} values for {n} processors",
                list.len()
            )));
        }
    }
    // NaN must fail every bound check, so the comparisons are phrased to
    // reject it explicitly.
    if params.gen_rate.is_nan() || params.gen_rate <= 0.0 {
        return Err(ModelError::new("gen_rate must be positive"));
    }
    if params.size_lo.is_nan()
        || params.size_hi.is_nan()
        || params.size_lo <= 0.0
        || params.size_lo > params.size_hi
    {
        return Err(ModelError::new(
            "job sizes must satisfy 0 < size_lo <= size_hi",
        ));
    }
    if params.speeds.iter().any(|s| s.is_nan() || *s <= 0.0) {
        return Err(ModelError::new("every speed must be positive"));
    }
    if params.min_times.iter().any(|m| m.is_nan() || *m < 0.0) {
        return Err(ModelError::new("every min_time must be non-negative"));
    }

    let mut system = CoupledSpec::new("queueing");

    system.add_child(
        "generator",
        AtomicSpec::new(
            "generator",
            Vec::<String>::new(),
            ["out"],
            Generator {
                rate: params.gen_rate,
                size_lo: params.size_lo,
                size_hi: params.size_hi,
                count: params.n_jobs,
                seed: params.seed,
            },
        ),
    );

    let queue_outputs: Vec<String> = (0..n).map(|p| format!("out_{p}")).collect();
    system.add_child(
        "queue",
        AtomicSpec::new(
            "queue",
            ["in", "signal_in"],
            queue_outputs,
            Queue { n_processors: n },
        ),
    );

    for p in 0..n {
        system.add_child(
            &format!("processor_{p}"),
            AtomicSpec::new(
                &format!("processor_{p}"),
                ["in"],
                ["finished", "job_out"],
                Processor {
                    pid: p,
                    speed: params.speeds[p],
                    min_time: params.min_times[p],
                },
            ),
        );
    }

    system.add_child(
        "collector",
        AtomicSpec::new("collector", ["in"], Vec::<String>::new(), Collector),
    );

    system.couple("generator", "out", "queue", "in");
    for p in 0..n {
        let processor = format!("processor_{p}");
        system.couple("queue", &format!("out_{p}"), &processor, "in");
        system.couple(&processor, "finished", "queue", "signal_in");
        system.couple(&processor, "job_out", "collector", "in");
    }

    let mut priority = vec!["collector".to_string()];
    priority.extend((0..n).map(|p| format!("processor_{p}")));
    priority.push("queue".to_string());
    priority.push("generator".to_string());
    system.set_priority(priority);

    Ok(system)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn job(id: u64, size: f64, created: f64) -> Job {
        Job {
            id,
            size,
            created: Instant::new(created),
            queue_exit: None,
            processor: None,
        }
    }

    #[test]
    fn processor_time_honors_both_regimes() {
        assert_eq!(processor_time(10.0, 2.0, 1.0), Duration::new(5.0));
        assert_eq!(processor_time(0.5, 2.0, 1.0), Duration::new(1.0));
        for s in [0.1, 1.0, 42.0] {
            assert_eq!(processor_time(s, 1.0, 0.0), Duration::new(s));
        }
    }

    #[test]
    fn job_round_trips_through_its_event_encoding() {
        let bare = job(3, 1.25, 10.0);
        assert_eq!(Job::from_value(&bare.to_value()).unwrap(), bare);

        let stamped = Job {
            queue_exit: Some(Instant::new(25.0)),
            processor: Some(1),
            ..bare.clone()
        };
        assert_eq!(Job::from_value(&stamped.to_value()).unwrap(), stamped);
        assert_eq!(stamped.wait(), Some(Duration::new(15.0)));
        assert_eq!(
            stamped.to_value().render(),
            "{id=3, size=1.25, created=10.0, queue_exit=25.0, processor=1}"
        );

        assert!(Job::from_value(&EventValue::symbol("nope")).is_err());
        assert!(Job::from_value(&job(0, -1.0, 0.0).to_value()).is_err());
    }

    fn queue_with(
        fifo: &[Job],
        idle: &[usize],
        processing: Option<Job>,
        remaining: Duration,
    ) -> QueueState {
        QueueState {
            fifo: fifo.iter().cloned().collect(),
            idle: idle.iter().copied().collect(),
            processing,
            remaining,
            current_time: Instant::ZERO,
        }
    }

    #[test]
    fn queue_dispatches_new_jobs_to_the_longest_idle_processor() {
        let queue = Queue { n_processors: 3 };
        let s = queue_with(&[], &[1, 2], None, Duration::INFINITY);
        let s = queue
            .external(
                s,
                Duration::ZERO,
                &Event::new("in", job(0, 1.0, 0.0).to_value()),
            )
            .unwrap();
        assert_eq!(s.pending().unwrap().id, 0);
        assert!(s.remaining.is_zero());

        // The emitted copy is stamped for processor 1, the idle head.
        let out = queue.output(&s).unwrap();
        assert_eq!(out.port, "out_1");
        let stamped = Job::from_value(&out.value).unwrap();
        assert_eq!(stamped.processor, Some(1));
        assert_eq!(stamped.queue_exit, Some(Instant::ZERO));
    }

    #[test]
    fn queue_buffers_when_no_processor_is_idle() {
        let queue = Queue { n_processors: 1 };
        let s = queue_with(&[], &[], None, Duration::INFINITY);
        let s = queue
            .external(
                s,
                Duration::new(2.0),
                &Event::new("in", job(7, 1.0, 0.0).to_value()),
            )
            .unwrap();
        assert_eq!(s.fifo_len(), 1);
        assert!(s.pending().is_none());
        assert!(s.remaining.is_infinite());
        assert!(queue.time_advance(&s).is_infinite());
    }

    #[test]
    fn queue_decrements_its_counter_on_unrelated_events() {
        // An emission pending in 5 ages by e = 2 when something unrelated
        // arrives: the counter is decremented explicitly.
        let queue = Queue { n_processors: 3 };
        let s = queue_with(&[], &[0], Some(job(1, 1.0, 0.0)), Duration::new(5.0));
        let s = queue
            .external(
                s,
                Duration::new(2.0),
                &Event::new("signal_in", finished_value(2, Instant::new(2.0))),
            )
            .unwrap();
        assert_eq!(s.remaining, Duration::new(3.0));
        assert_eq!(s.idle_processors().collect::<Vec<_>>(), [0, 2]);
    }

    #[test]
    fn queue_reanchors_its_clock_to_the_timestamps_events_carry() {
        // The accumulated clock sits one ULP above the true instant (0.1 +
        // 0.2 ≠ 0.3 in floats); the arriving job says 0.3. The stamp must be
        // exactly 0.3 — wait exactly zero — not the drifted sum.
        let queue = Queue { n_processors: 1 };
        let mut drifted = queue_with(&[], &[0], None, Duration::INFINITY);
        drifted.current_time = Instant::new(0.1 + 0.2);
        assert_ne!(drifted.current_time, Instant::new(0.3));

        let s = queue
            .external(
                drifted,
                Duration::ZERO,
                &Event::new("in", job(0, 1.0, 0.3).to_value()),
            )
            .unwrap();
        let stamped = Job::from_value(&queue.output(&s).unwrap().value).unwrap();
        assert_eq!(stamped.queue_exit, Some(Instant::new(0.3)));
        assert_eq!(stamped.wait(), Some(Duration::ZERO));
    }

    #[test]
    fn queue_faults_on_a_finished_signal_from_an_idle_processor() {
        let queue = Queue { n_processors: 2 };
        let s = queue_with(&[], &[1], None, Duration::INFINITY);
        let err = queue
            .external(
                s,
                Duration::ZERO,
                &Event::new("signal_in", finished_value(1, Instant::new(4.0))),
            )
            .unwrap_err();
        assert!(
            err.message.contains("protocol violation"),
            "{}",
            err.message
        );

        let s = queue_with(&[], &[1], None, Duration::INFINITY);
        let err = queue
            .external(
                s,
                Duration::ZERO,
                &Event::new("signal_in", EventValue::Int(1)),
            )
            .unwrap_err();
        assert!(err.message.contains("{pid, at}"), "{}", err.message);
    }

    #[test]
    fn queue_internal_follows_the_dispatch_table() {
        let queue = Queue { n_processors: 2 };

        // One idle processor, one queued job: after emission the job stays
        // queued because nobody is idle.
        let s = queue_with(
            &[job(2, 1.0, 0.0)],
            &[1],
            Some(job(1, 1.0, 0.0)),
            Duration::ZERO,
        );
        let s = queue.internal(s).unwrap();
        assert!(s.pending().is_none());
        assert_eq!(s.fifo_len(), 1);
        assert!(s.remaining.is_infinite());
        assert_eq!(s.idle_processors().count(), 0);

        // Two idle processors: back-to-back dispatch of the queued job.
        let s = queue_with(
            &[job(2, 1.0, 0.0)],
            &[1, 0],
            Some(job(1, 1.0, 0.0)),
            Duration::ZERO,
        );
        let s = queue.internal(s).unwrap();
        assert_eq!(s.pending().unwrap().id, 2);
        assert!(s.remaining.is_zero());
        assert_eq!(s.idle_processors().collect::<Vec<_>>(), [0]);

        // Nothing queued: passivate.
        let s = queue_with(&[], &[1, 0], Some(job(1, 1.0, 0.0)), Duration::ZERO);
        let s = queue.internal(s).unwrap();
        assert!(s.remaining.is_infinite());

        // No pending emission at all: spurious.
        let s = queue_with(&[], &[0], None, Duration::INFINITY);
        assert!(queue.internal(s).is_err());
    }

    #[test]
    fn processor_runs_the_two_step_finish() {
        let processor = Processor {
            pid: 1,
            speed: 2.0,
            min_time: 0.0,
        };
        let (s, _) = processor.initial();
        assert!(processor.time_advance(&s).is_infinite());

        // Only stamped jobs are accepted: unstamped means miswired.
        let raw = processor
            .external(
                s.clone(),
                Duration::ZERO,
                &Event::new("in", job(4, 10.0, 0.0).to_value()),
            )
            .unwrap_err();
        assert!(raw.message.contains("unstamped"), "{}", raw.message);

        // Accept a job of size 10 at speed 2 dispatched at t = 3: busy for 5.
        let dispatched = Job {
            queue_exit: Some(Instant::new(3.0)),
            processor: Some(1),
            ..job(4, 10.0, 0.0)
        };
        let s = processor
            .external(
                s,
                Duration::new(3.0),
                &Event::new("in", dispatched.to_value()),
            )
            .unwrap();
        assert_eq!(processor.time_advance(&s), Duration::new(5.0));

        // While busy: first output is the finished signal for the queue,
        // carrying the completion instant 3 + 5.
        let out = processor.output(&s).unwrap();
        assert_eq!(out.port, "finished");
        assert_eq!(out.value, finished_value(1, Instant::new(8.0)));

        // A second job while busy is a protocol violation.
        let again = processor
            .external(
                s.clone(),
                Duration::ZERO,
                &Event::new("in", job(5, 1.0, 0.0).to_value()),
            )
            .unwrap_err();
        assert!(again.message.contains("while busy"), "{}", again.message);

        // Hand-off: zero-time sub-state emitting the job itself.
        let s = processor.internal(s).unwrap();
        assert!(processor.time_advance(&s).is_zero());
        let out = processor.output(&s).unwrap();
        assert_eq!(out.port, "job_out");
        assert_eq!(Job::from_value(&out.value).unwrap().id, 4);

        // Then idle again.
        let s = processor.internal(s).unwrap();
        assert!(processor.time_advance(&s).is_infinite());
        assert!(processor.output(&s).is_none());
        assert!(processor.internal(s).is_err());
    }

    #[test]
    fn collector_records_waits_and_rejects_unstamped_jobs() {
        let collector = Collector;
        let (s, _) = collector.initial();
        let stamped = Job {
            queue_exit: Some(Instant::new(25.0)),
            processor: Some(0),
            ..job(9, 1.0, 10.0)
        };
        let s = collector
            .external(
                s,
                Duration::new(25.0),
                &Event::new("in", stamped.to_value()),
            )
            .unwrap();
        assert_eq!(s.waits(), [(9, Duration::new(15.0))]);

        let err = collector
            .external(
                s.clone(),
                Duration::ZERO,
                &Event::new("in", job(10, 1.0, 0.0).to_value()),
            )
            .unwrap_err();
        assert!(err.message.contains("queue-exit stamp"), "{}", err.message);

        // Exit before creation cannot happen with value-anchored stamps;
        // if it ever does, fault loudly instead of recording garbage.
        let skewed = Job {
            queue_exit: Some(Instant::new(9.0)),
            processor: Some(0),
            ..job(11, 1.0, 10.0)
        };
        let err = collector
            .external(s, Duration::ZERO, &Event::new("in", skewed.to_value()))
            .unwrap_err();
        assert!(err.message.contains("negative wait"), "{}", err.message);
    }

    #[test]
    fn system_wiring_matches_the_documented_shape() {
        let params = QueueingParams {
            n_processors: 2,
            gen_rate: 1.0,
            size_lo: 0.5,
            size_hi: 1.5,
            speeds: vec![400.0, 400.0],
            min_times: vec![0.0, 0.0],
            n_jobs: 10,
            seed: 42,
        };
        let system = queueing_system(&params).unwrap();
        assert_eq!(system.couplings().len(), 7); // 1 + 3·2
        assert_eq!(
            system.priority(),
            [
                "collector",
                "processor_0",
                "processor_1",
                "queue",
                "generator"
            ]
        );
        assert!(system.validate().ok(), "{}", system.validate());

        for n in 1..=5 {
            let mut p = params.clone();
            p.n_processors = n;
            p.speeds = vec![400.0; n];
            p.min_times = vec![0.0; n];
            assert!(queueing_system(&p).unwrap().validate().ok());
        }

        // Count mismatches and bad ranges are configuration errors.
        let mut bad = params.clone();
        bad.speeds = vec![400.0];
        assert!(queueing_system(&bad).is_err());
        let mut bad = params.clone();
        bad.size_lo = 0.0;
        assert!(queueing_system(&bad).is_err());
        let mut bad = params;
        bad.n_processors = 0;
        bad.speeds = vec![];
        bad.min_times = vec![];
        assert!(queueing_system(&bad).is_err());
    }

    /// One job, ample speed: it finds an idle processor immediately and its
    /// recorded wait is zero. Exercises the full four-model handshake
    /// through the real kernel.
    #[test]
    fn single_job_flows_through_with_zero_wait() {
        use crate::coupled::Component;
        use crate::kernel::RootCoordinator;
        use crate::trace::{Trace, TraceLevel};

        let params = QueueingParams {
            n_processors: 1,
            gen_rate: 1.0,
            size_lo: 0.5,
            size_hi: 1.5,
            speeds: vec![400.0],
            min_times: vec![0.0],
            n_jobs: 1,
            seed: 7,
        };
        let system = queueing_system(&params).unwrap();
        let mut root = RootCoordinator::new(
            &Component::Coupled(system),
            |_, _| false,
            Trace::new(TraceLevel::Off),
        )
        .unwrap();
        root.run().unwrap();

        let collector = root
            .top()
            .find(&["collector"])
            .and_then(|sim| sim.as_atomic())
            .and_then(|atomic| atomic.state())
            .and_then(|state| state.downcast_ref::<CollectorState>())
            .expect("collector state reachable");
        assert_eq!(collector.records().len(), 1);
        assert_eq!(collector.waits()[0].1, Duration::ZERO);
        let job = &collector.records()[0];
        assert_eq!(job.processor, Some(0));
        assert_eq!(job.queue_exit, Some(job.created));
    }
}
