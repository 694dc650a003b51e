//! Shared fixtures for the integration suites: two probe models with fully
//! deterministic rhythms, a seeded generator of random coupled specs, and
//! tree walkers asserting kernel invariants.
//!
//! All probe delays are dyadic rationals (multiples of 2⁻²), so every event
//! instant is exact in binary floating point and cross-run comparisons can
//! demand bit equality.

#![allow(dead_code)]

use devs_core::experiment::run::run_queueing;
use devs_core::experiment::RngState;
use devs_core::models::queueing::{CollectorState, GeneratorState, ProcessorState, QueueState};
use devs_core::models::{queueing_system, traffic_light, QueueingParams};
use devs_core::{
    flatten, io_equivalent, AtomicModel, AtomicSpec, Component, CoupledSpec, Coupling, Event,
    EventValue, FlatState, Instant, ModelError, ModelRef, RootCoordinator, Simulator, Trace,
    TraceKind, TraceLevel,
};

use devs_core::Duration;

// --- Pulser ---------------------------------------------------------------

/// Fires on a cyclic schedule of dyadic gaps, at most `life` times. Every
/// received input appends a tag to all future outputs and re-arms the phase
/// to fire immediately, so routing differences show up in both the times and
/// the values of later outputs.
///
/// Output values encode the full interaction history (`symbol`, accumulated
/// tags, firing count); the firing count is incremented by `δ_int` *after*
/// `λ` reads it, making the output-before-transition order observable.
pub struct Pulser {
    pub gaps: Vec<Duration>,
    pub symbol: String,
    pub life: u64,
}

#[derive(Debug, Clone)]
pub struct PulserState {
    index: usize,
    pending: Duration,
    fired: u64,
    tag: String,
}

impl AtomicModel for Pulser {
    type State = PulserState;

    fn initial(&self) -> (PulserState, Duration) {
        (
            PulserState {
                index: 0,
                pending: self.gaps[0],
                fired: 0,
                tag: String::new(),
            },
            Duration::ZERO,
        )
    }

    fn time_advance(&self, s: &PulserState) -> Duration {
        if s.fired >= self.life {
            Duration::INFINITY
        } else {
            s.pending
        }
    }

    fn internal(&self, mut s: PulserState) -> Result<PulserState, ModelError> {
        s.fired += 1;
        s.index = (s.index + 1) % self.gaps.len();
        s.pending = self.gaps[s.index];
        Ok(s)
    }

    fn external(
        &self,
        mut s: PulserState,
        elapsed: Duration,
        input: &Event,
    ) -> Result<PulserState, ModelError> {
        // The kernel must present a legal total state: 0 ≤ e ≤ ta(s).
        let advance = self.time_advance(&s);
        if elapsed > advance {
            return Err(ModelError::new(format!(
                "elapsed window violated: e = {elapsed} > ta = {advance}"
            )));
        }
        if let EventValue::Symbol(sym) = &input.value {
            s.tag.push('+');
            s.tag.push_str(sym);
        }
        if s.fired < self.life {
            s.pending = Duration::ZERO; // triggered: fire right now
        }
        Ok(s)
    }

    fn output(&self, s: &PulserState) -> Option<Event> {
        Some(Event::new(
            "out",
            EventValue::Symbol(format!("{}{}#{}", self.symbol, s.tag, s.fired)),
        ))
    }

    fn render_state(&self, s: &PulserState) -> String {
        format!("phase={} fired={} tag={}", s.index, s.fired, s.tag)
    }
}

// --- Echo -----------------------------------------------------------------

/// Passive until poked: holds the symbols it receives (order-sensitively
/// folded) and echoes the combination after a fixed dyadic delay.
pub struct Echo {
    pub delay: Duration,
}

#[derive(Debug, Clone)]
pub struct EchoState {
    held: Option<String>,
    pub seen: u64,
}

impl AtomicModel for Echo {
    type State = EchoState;

    fn initial(&self) -> (EchoState, Duration) {
        (
            EchoState {
                held: None,
                seen: 0,
            },
            Duration::ZERO,
        )
    }

    fn time_advance(&self, s: &EchoState) -> Duration {
        if s.held.is_some() {
            self.delay
        } else {
            Duration::INFINITY
        }
    }

    fn internal(&self, mut s: EchoState) -> Result<EchoState, ModelError> {
        if s.held.take().is_none() {
            return Err(ModelError::new("spurious internal: echo was idle"));
        }
        Ok(s)
    }

    fn external(
        &self,
        mut s: EchoState,
        elapsed: Duration,
        input: &Event,
    ) -> Result<EchoState, ModelError> {
        let advance = self.time_advance(&s);
        if elapsed > advance {
            return Err(ModelError::new(format!(
                "elapsed window violated: e = {elapsed} > ta = {advance}"
            )));
        }
        let sym = match &input.value {
            EventValue::Symbol(sym) => sym.clone(),
            other => other.render(),
        };
        s.held = Some(match s.held.take() {
            None => sym,
            Some(prev) => format!("{prev}|{sym}"),
        });
        s.seen += 1;
        Ok(s)
    }

    fn output(&self, s: &EchoState) -> Option<Event> {
        s.held
            .as_ref()
            .map(|v| Event::new("out", EventValue::Symbol(format!("~{v}"))))
    }

    fn render_state(&self, s: &EchoState) -> String {
        format!("held={:?} seen={}", s.held, s.seen)
    }
}

// --- Seeded picker ----------------------------------------------------------

/// Thin deterministic-choice helper over the crate's own SplitMix64.
pub struct Picker(RngState);

impl Picker {
    pub fn new(seed: u64) -> Picker {
        Picker(RngState::seed(seed))
    }

    /// Uniform-ish integer in `0..n` (modulo bias is irrelevant here).
    pub fn below(&mut self, n: usize) -> usize {
        let (u, next) = self.0.next();
        self.0 = next;
        (u % n as u64) as usize
    }

    pub fn chance(&mut self, num: usize, den: usize) -> bool {
        self.below(den) < num
    }

    /// A dyadic duration `q/4` with `q ∈ lo..=hi`.
    pub fn quarters(&mut self, lo: usize, hi: usize) -> Duration {
        Duration::new(0.25 * (lo + self.below(hi - lo + 1)) as f64)
    }

    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            items.swap(i, self.below(i + 1));
        }
    }
}

// --- Random coupled specs ---------------------------------------------------

fn random_atomic(r: &mut Picker, uid: usize) -> AtomicSpec {
    if r.chance(1, 3) {
        AtomicSpec::new(
            &format!("echo{uid}"),
            ["in"],
            ["out"],
            Echo {
                delay: r.quarters(1, 8),
            },
        )
    } else {
        let len = 1 + r.below(3);
        let gaps = (0..len)
            .map(|_| {
                if r.chance(1, 8) {
                    Duration::ZERO // transitory phase
                } else {
                    r.quarters(1, 12)
                }
            })
            .collect();
        AtomicSpec::new(
            &format!("pulse{uid}"),
            ["in"],
            ["out"],
            Pulser {
                gaps,
                symbol: format!("p{uid}"),
                life: 3 + r.below(8) as u64,
            },
        )
    }
}

/// Wires one coupled scope. Every child's `out` feeds at least one sink;
/// each source port gets at most one boundary-bound coupling, so a single
/// `λ` firing can never demand two simultaneous boundary events (which an
/// atomic model could not reproduce).
fn wire_level(r: &mut Picker, spec: &mut CoupledSpec, children: &[String], outputs: &[String]) {
    // Boundary feeders first, round-robin, one source per output port.
    let mut has_boundary = vec![false; children.len()];
    for (k, port) in outputs.iter().enumerate() {
        let feeder = k % children.len();
        has_boundary[feeder] = true;
        let coupling = Coupling::new(
            ModelRef::child(&children[feeder]),
            "out",
            ModelRef::Own,
            port,
        );
        spec.add_coupling(maybe_translated(r, coupling));
    }
    // Internal fan-out: 0–2 distinct peers per source, at least one sink
    // overall so no output port dangles.
    for (i, source) in children.iter().enumerate() {
        let mut peers: Vec<&String> = children
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .map(|(_, name)| name)
            .collect();
        r.shuffle(&mut peers);
        let mut fanout = r.below(3);
        if fanout == 0 && !has_boundary[i] {
            fanout = 1;
        }
        for peer in peers.into_iter().take(fanout) {
            let coupling =
                Coupling::new(ModelRef::child(source), "out", ModelRef::child(peer), "in");
            spec.add_coupling(maybe_translated(r, coupling));
        }
    }
}

/// With probability 1/3, attaches a symbol-suffixing translation (`Z`)
/// to the coupling; suffixes compose along multi-hop routes.
fn maybe_translated(r: &mut Picker, coupling: Coupling) -> Coupling {
    if !r.chance(1, 3) {
        return coupling;
    }
    let suffix = format!("'{}", (b'a' + r.below(26) as u8) as char);
    coupling.with_map(move |value| match value {
        EventValue::Symbol(s) => EventValue::Symbol(format!("{s}{suffix}")),
        other => other,
    })
}

fn nested_coupled(r: &mut Picker, slot: usize) -> CoupledSpec {
    let mut inner = CoupledSpec::new(&format!("nest{slot}"));
    inner.add_input("in").add_output("out");
    let n = 2 + r.below(2);
    let names: Vec<String> = (0..n).map(|i| format!("g{i}")).collect();
    for (i, name) in names.iter().enumerate() {
        inner.add_child(name, random_atomic(r, 10 + slot * 4 + i));
    }
    wire_level(r, &mut inner, &names, &["out".to_string()]);
    // Sometimes leave the boundary input dangling: events delivered there
    // must still age every child, with no transition anywhere.
    if r.chance(3, 4) {
        let target = r.below(n);
        inner.couple_from_input("in", &names[target], "in");
    }
    let mut order = names.clone();
    r.shuffle(&mut order);
    inner.set_priority(order);
    inner
}

/// A valid random system: 2–4 children (possibly one nested coupled child),
/// 1–2 boundary output ports, randomized wiring, translations, and select
/// priority — everything drawn from `seed`.
pub fn random_system(seed: u64) -> CoupledSpec {
    let mut r = Picker::new(seed);
    let mut sys = CoupledSpec::new("sys");
    let outputs: Vec<String> = (0..1 + r.below(2)).map(|k| format!("obs_{k}")).collect();
    for port in &outputs {
        sys.add_output(port);
    }
    let n_children = 2 + r.below(3);
    let nested_slot = if r.chance(1, 2) {
        Some(r.below(n_children))
    } else {
        None
    };
    let names: Vec<String> = (0..n_children).map(|i| format!("c{i}")).collect();
    for (i, name) in names.iter().enumerate() {
        if Some(i) == nested_slot {
            sys.add_child(name, nested_coupled(&mut r, i));
        } else {
            sys.add_child(name, random_atomic(&mut r, i));
        }
    }
    wire_level(&mut r, &mut sys, &names, &outputs);
    let mut order = names.clone();
    r.shuffle(&mut order);
    sys.set_priority(order);
    sys
}

// --- Runners ----------------------------------------------------------------

/// Runs `system` to `horizon` hierarchically and flattened, returning both
/// finished coordinators for comparison.
pub fn run_both(
    system: &CoupledSpec,
    horizon: f64,
    level: TraceLevel,
) -> (RootCoordinator, RootCoordinator) {
    let h = Instant::new(horizon);
    let mut hier =
        RootCoordinator::until(&Component::Coupled(system.clone()), h, Trace::new(level))
            .expect("generated spec must validate");
    hier.run().expect("hierarchical run");
    let flat = flatten(system).expect("generated spec must flatten");
    let mut flat_run = RootCoordinator::until(&Component::Atomic(flat), h, Trace::new(level))
        .expect("flattened spec must validate");
    flat_run.run().expect("flattened run");
    (hier, flat_run)
}

// --- Invariant walkers --------------------------------------------------------

/// Asserts, for every coordinator in the tree, that its next-event time is
/// the minimum of its children's. Returns the number of nodes checked.
pub fn check_tn_aggregation(sim: &Simulator) -> usize {
    match sim {
        Simulator::Atomic(_) => 0,
        Simulator::Coupled(coordinator) => {
            let min = coordinator
                .children()
                .map(|(_, child)| child.t_next())
                .min()
                .unwrap_or(Instant::INFINITY);
            assert_eq!(
                sim.t_next(),
                min,
                "coordinator '{}' aggregates t_n wrongly",
                sim.path()
            );
            1 + coordinator
                .children()
                .map(|(_, child)| check_tn_aggregation(child))
                .sum::<usize>()
        }
    }
}

/// Asserts `t_last ≤ t_next` (σ ≥ 0) for every node. Returns nodes checked.
pub fn check_sigma_nonnegative(sim: &Simulator) -> usize {
    assert!(
        sim.t_last() <= sim.t_next(),
        "negative remaining time at '{}': t_l = {}, t_n = {}",
        sim.path(),
        sim.t_last(),
        sim.t_next()
    );
    match sim {
        Simulator::Atomic(_) => 1,
        Simulator::Coupled(coordinator) => {
            1 + coordinator
                .children()
                .map(|(_, child)| check_sigma_nonnegative(child))
                .sum::<usize>()
        }
    }
}

/// Job-count bookkeeping of one queueing snapshot.
pub struct JobCensus {
    pub unsent: u64,
    pub queued: u64,
    pub in_service: u64,
    pub collected: u64,
}

impl JobCensus {
    pub fn total(&self) -> u64 {
        self.unsent + self.queued + self.in_service + self.collected
    }
}

/// Reads the queueing system's state out of a *hierarchical* simulator tree.
pub fn census_hierarchical(top: &Simulator, n_processors: usize) -> JobCensus {
    let state = |segments: &[&str]| {
        top.find(segments)
            .and_then(|sim| sim.as_atomic())
            .and_then(|atomic| atomic.state())
            .expect("queueing child state must be inspectable")
    };
    let generator = state(&["generator"])
        .downcast_ref::<GeneratorState>()
        .unwrap();
    let queue = state(&["queue"]).downcast_ref::<QueueState>().unwrap();
    let collector = state(&["collector"])
        .downcast_ref::<CollectorState>()
        .unwrap();
    let mut in_service = queue.pending().is_some() as u64;
    for p in 0..n_processors {
        let processor = state(&[&format!("processor_{p}")])
            .downcast_ref::<ProcessorState>()
            .unwrap();
        in_service += processor.current().is_some() as u64;
    }
    JobCensus {
        unsent: generator.to_send(),
        queued: queue.fifo_len() as u64,
        in_service,
        collected: collector.records().len() as u64,
    }
}

/// Default queueing parameters (matching the bundled example configs) with
/// the processor count, job count, and seed left to the caller.
pub fn queueing_params(n: usize, n_jobs: u64, seed: u64) -> QueueingParams {
    QueueingParams {
        n_processors: n,
        gen_rate: 1.0,
        size_lo: 0.5,
        size_hi: 1.5,
        speeds: vec![400.0; n],
        min_times: vec![0.0015; n],
        n_jobs,
        seed,
    }
}

/// Reads the same census out of a *flattened* queueing run's composite state.
pub fn census_flat(top: &Simulator, n_processors: usize) -> JobCensus {
    let composite = top
        .as_atomic()
        .and_then(|atomic| atomic.state())
        .and_then(|state| state.downcast_ref::<FlatState>())
        .expect("flat state must be inspectable");
    let child = |name: &str| {
        composite
            .child(name)
            .map(|(state, _elapsed)| state)
            .expect("flat composite must keep every child")
    };
    let generator = child("generator").downcast_ref::<GeneratorState>().unwrap();
    let queue = child("queue").downcast_ref::<QueueState>().unwrap();
    let collector = child("collector").downcast_ref::<CollectorState>().unwrap();
    let mut in_service = queue.pending().is_some() as u64;
    for p in 0..n_processors {
        let processor = child(&format!("processor_{p}"))
            .downcast_ref::<ProcessorState>()
            .unwrap();
        in_service += processor.current().is_some() as u64;
    }
    JobCensus {
        unsent: generator.to_send(),
        queued: queue.fifo_len() as u64,
        in_service,
        collected: collector.records().len() as u64,
    }
}

// --- Property suites ----------------------------------------------------------
//
// Each suite returns the number of individual checks it performed, so the
// acceptance gate can total them. All randomness is seeded: counts and
// outcomes are identical on every run.

/// Runs random systems hierarchically at full trace level plus two queueing
/// runs, counting external transitions. Every one of them was admitted by
/// the kernel's delivery window (`t_l ≤ t ≤ t_n`, i.e. `0 ≤ e ≤ ta`), and
/// the probe models re-check the window inside `δ_ext`.
pub fn suite_elapsed_window() -> usize {
    let mut cases = 0;
    for i in 0..60 {
        let sys = random_system(0xE1A5_0000 + i);
        let mut root = RootCoordinator::until(
            &Component::Coupled(sys),
            Instant::new(48.0),
            Trace::new(TraceLevel::Full),
        )
        .expect("generated spec must validate");
        root.run().expect("hierarchical run");
        cases += root
            .trace()
            .entries()
            .iter()
            .filter(|e| e.kind == TraceKind::External)
            .count();
    }
    for (n, jobs, seed) in [(2usize, 400u64, 9u64), (3, 400, 10)] {
        let run = run_queueing(
            &queueing_params(n, jobs, seed),
            Duration::INFINITY,
            Trace::new(TraceLevel::Full),
        )
        .expect("queueing run");
        cases += run
            .trace
            .entries()
            .iter()
            .filter(|e| e.kind == TraceKind::External)
            .count();
    }
    cases
}

/// Steps hierarchical and flattened runs of random systems round by round.
/// After every round: each coordinator's `t_n` equals the minimum of its
/// children's, and no node (the flattened composite included) has negative
/// remaining time. Returns `(tn_checks, sigma_checks)`.
pub fn suite_stepping_invariants(n_specs: u64) -> (usize, usize) {
    let mut tn = 0;
    let mut sigma = 0;
    for i in 0..n_specs {
        let sys = random_system(0x57E9_0000 + i);
        let mut root = RootCoordinator::until(
            &Component::Coupled(sys.clone()),
            Instant::new(48.0),
            Trace::new(TraceLevel::Off),
        )
        .expect("generated spec must validate");
        root.initialize().expect("init");
        loop {
            tn += check_tn_aggregation(root.top());
            sigma += check_sigma_nonnegative(root.top());
            if root.step().expect("step").is_none() {
                break;
            }
        }
        let flat = flatten(&sys).expect("flatten");
        let mut root = RootCoordinator::until(
            &Component::Atomic(flat),
            Instant::new(48.0),
            Trace::new(TraceLevel::Off),
        )
        .expect("flat spec must validate");
        root.initialize().expect("init");
        loop {
            sigma += check_sigma_nonnegative(root.top());
            if root.step().expect("step").is_none() {
                break;
            }
        }
    }
    (tn, sigma)
}

/// Lone pulsers observed at the boundary: `λ` is evaluated on the state
/// being *left*, so firing `k` must carry `#k` (the count `δ_int` is about
/// to increment). Returns outputs checked.
pub fn suite_output_before_transition(n_cases: u64) -> usize {
    let mut checked = 0;
    for i in 0..n_cases {
        let mut r = Picker::new(0x0B70_0000 + i);
        let gaps: Vec<Duration> = (0..1 + r.below(3)).map(|_| r.quarters(1, 12)).collect();
        let life = 1 + r.below(10) as u64;
        let mut sys = CoupledSpec::new("lone");
        sys.add_output("obs")
            .add_child(
                "p",
                AtomicSpec::new(
                    "p",
                    ["in"],
                    ["out"],
                    Pulser {
                        gaps,
                        symbol: "p".to_string(),
                        life,
                    },
                ),
            )
            .couple_to_output("p", "out", "obs");
        let mut root = RootCoordinator::new(
            &Component::Coupled(sys),
            |_, _| false,
            Trace::new(TraceLevel::Events),
        )
        .expect("lone pulser validates");
        root.run().expect("run to passivation");
        let values: Vec<String> = root
            .trace()
            .outputs()
            .map(|e| e.value.clone().unwrap())
            .collect();
        assert_eq!(values.len() as u64, life, "one output per firing");
        for (k, value) in values.iter().enumerate() {
            assert_eq!(
                value,
                &format!("p#{k}"),
                "λ must see the pre-transition state"
            );
            checked += 1;
        }
    }
    checked
}

/// Steps queueing runs — hierarchical and flattened — and takes a full job
/// census after every round: jobs are never created or destroyed. Returns
/// instants checked.
pub fn suite_job_conservation() -> usize {
    let mut cases = 0;
    for (n, jobs, seed) in [(2usize, 500u64, 11u64), (3, 300, 12)] {
        let params = queueing_params(n, jobs, seed);
        let system = queueing_system(&params).expect("valid params");
        let mut root = RootCoordinator::new(
            &Component::Coupled(system.clone()),
            |_, _| false,
            Trace::new(TraceLevel::Off),
        )
        .expect("queueing system validates");
        root.initialize().expect("init");
        loop {
            assert_eq!(
                census_hierarchical(root.top(), n).total(),
                jobs,
                "hierarchical job census must balance"
            );
            cases += 1;
            if root.step().expect("step").is_none() {
                break;
            }
        }
        let flat = flatten(&system).expect("flatten");
        let mut root = RootCoordinator::new(
            &Component::Atomic(flat),
            |_, _| false,
            Trace::new(TraceLevel::Off),
        )
        .expect("flat queueing validates");
        root.initialize().expect("init");
        loop {
            assert_eq!(
                census_flat(root.top(), n).total(),
                jobs,
                "flattened job census must balance"
            );
            cases += 1;
            if root.step().expect("step").is_none() {
                break;
            }
        }
    }
    cases
}

/// Random dyadic traffic lights cycle exactly: yellow at `g`, red at `g+y`,
/// green at `g+y+r`, twice over — with an event landing exactly on the
/// horizon. Returns events checked.
pub fn suite_traffic_cycle(n_cases: u64) -> usize {
    let mut checked = 0;
    for i in 0..n_cases {
        let mut r = Picker::new(0x7AFF_0000 + i);
        let (g, y, rd) = (r.quarters(1, 40), r.quarters(1, 40), r.quarters(1, 40));
        let cycle = g + y + rd;
        let horizon = Instant::ZERO + cycle + cycle;
        let mut root = RootCoordinator::until(
            &Component::Atomic(traffic_light(g, y, rd)),
            horizon,
            Trace::new(TraceLevel::Events),
        )
        .expect("light validates");
        root.run().expect("run");
        let outputs: Vec<(Instant, String)> = root
            .trace()
            .outputs()
            .map(|e| (e.time, e.value.clone().unwrap()))
            .collect();
        let at = |d: Duration| Instant::ZERO + d;
        let expected = [
            (at(g), "show_yellow"),
            (at(g + y), "show_red"),
            (at(cycle), "show_green"),
            (at(cycle + g), "show_yellow"),
            (at(cycle + g + y), "show_red"),
            (at(cycle + cycle), "show_green"),
        ];
        assert_eq!(outputs.len(), expected.len(), "two full cycles");
        for (got, (t, v)) in outputs.iter().zip(expected) {
            assert_eq!(got, &(t, v.to_string()), "cycle event out of place");
            checked += 1;
        }
    }
    checked
}

/// Runs one random system both ways and asserts boundary equivalence plus
/// equal final times. Returns the number of boundary events compared.
pub fn assert_flatten_equivalent(seed: u64) -> usize {
    let sys = random_system(seed);
    let (hier, flat) = run_both(&sys, 48.0, TraceLevel::Events);
    assert!(
        io_equivalent(hier.trace(), flat.trace()),
        "hierarchical and flattened runs diverged for spec seed {seed}"
    );
    assert_eq!(
        hier.time(),
        flat.time(),
        "final times differ for spec seed {seed}"
    );
    hier.trace().outputs().count()
}
