//! Discrete-event core: a TTI-granular virtual clock, a totally ordered
//! event queue and seeded per-stream randomness.
//!
//! Events are ordered by `(fire_time, priority, seq)`. `seq` is the insertion
//! counter, so two events scheduled for the same tick and priority fire in
//! the order they were scheduled. The simulator uses the fixed priority
//! bands in [`Band`].

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;
use std::fmt;
use std::io::{self, Write};

use rand_core::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256StarStar;
use serde::{Deserialize, Serialize};

/// Virtual time as a TTI index. One TTI is `tti_ms` of virtual time
/// (1 ms unless the scenario says otherwise).
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SimTime(pub u64);

impl SimTime {
    pub const ZERO: SimTime = SimTime(0);

    pub fn tti(self) -> u64 {
        self.0
    }

    pub fn plus(self, ttis: u64) -> SimTime {
        SimTime(self.0.saturating_add(ttis))
    }
}

impl fmt::Display for SimTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Intra-tick priority bands. Lower fires first.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[repr(u8)]
pub enum Band {
    /// Grant and evacuation commands, repository/controller messages.
    Control = 0,
    /// Sensing measurement and report ingestion.
    Sensing = 1,
    /// DCA, ICIC and handover decisions.
    Decision = 2,
    /// Per-TTI scheduling.
    Scheduling = 3,
    /// Demand generation, session arrivals and departures.
    Traffic = 4,
    /// KPI window flushes.
    Metrics = 5,
}

impl Band {
    pub fn priority(self) -> u8 {
        self as u8
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EventId(pub u64);

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum EngineError {
    #[error("cannot schedule at tti {requested}: clock is already at {now}")]
    SchedulingInPast { requested: SimTime, now: SimTime },
}

/// A dequeued event.
#[derive(Clone, Debug)]
pub struct Event<P> {
    pub fire_time: SimTime,
    pub priority: u8,
    pub seq: u64,
    pub payload: P,
}

impl<P> Event<P> {
    pub fn id(&self) -> EventId {
        EventId(self.seq)
    }

    fn key(&self) -> (SimTime, u8, u64) {
        (self.fire_time, self.priority, self.seq)
    }
}

impl<P> PartialEq for Event<P> {
    fn eq(&self, other: &Self) -> bool {
        self.key() == other.key()
    }
}

impl<P> Eq for Event<P> {}

impl<P> PartialOrd for Event<P> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<P> Ord for Event<P> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.key().cmp(&other.key())
    }
}

/// Min-ordered event queue plus the simulation clock.
pub struct EventQueue<P> {
    now: SimTime,
    next_seq: u64,
    heap: BinaryHeap<Reverse<Event<P>>>,
}

impl<P> Default for EventQueue<P> {
    fn default() -> Self {
        Self::new()
    }
}

impl<P> EventQueue<P> {
    pub fn new() -> Self {
        EventQueue {
            now: SimTime::ZERO,
            next_seq: 0,
            heap: BinaryHeap::new(),
        }
    }

    pub fn now(&self) -> SimTime {
        self.now
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }

    pub fn schedule(&mut self, time: SimTime, priority: u8, payload: P) -> Result<EventId, EngineError> {
        if time < self.now {
            return Err(EngineError::SchedulingInPast {
                requested: time,
                now: self.now,
            });
        }
        let seq = self.next_seq;
        self.next_seq += 1;
        self.heap.push(Reverse(Event {
            fire_time: time,
            priority,
            seq,
            payload,
        }));
        Ok(EventId(seq))
    }

    /// Fire time of the next pending event.
    pub fn peek_time(&self) -> Option<SimTime> {
        self.heap.peek().map(|Reverse(e)| e.fire_time)
    }

    /// Pops the next event if it fires at or before `t_end`, advancing the
    /// clock to its fire time.
    pub fn pop_due(&mut self, t_end: SimTime) -> Option<Event<P>> {
        match self.heap.peek() {
            Some(Reverse(e)) if e.fire_time <= t_end => {}
            _ => return None,
        }
        let Reverse(event) = self.heap.pop()?;
        self.now = event.fire_time;
        Some(event)
    }

    /// Moves the clock forward to `t` if it is behind.
    pub fn advance_to(&mut self, t: SimTime) {
        if t > self.now {
            self.now = t;
        }
    }

    /// Processes every event with `fire_time <= t_end` in total order.
    /// Handlers may schedule follow-up events; those inside the horizon are
    /// processed in the same call. Leaves the clock at `t_end`.
    pub fn run_until<F>(&mut self, t_end: SimTime, mut handler: F) -> u64
    where
        F: FnMut(&mut EventQueue<P>, Event<P>),
    {
        let mut processed = 0;
        while let Some(event) = self.pop_due(t_end) {
            handler(self, event);
            processed += 1;
        }
        self.advance_to(t_end);
        processed
    }
}

/// FNV-1a 64-bit hash of a stream label.
pub fn fnv1a64(label: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in label.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// A named, independently seeded random stream.
///
/// Algorithm (reimplementable bit-for-bit):
/// 1. `seed = master_seed XOR fnv1a64(stream_id)`
/// 2. state = xoshiro256** seeded by four successive SplitMix64 outputs of `seed`
/// 3. `uniform = (next_u64 >> 11) * 2^-53`, in `[0, 1)`
///
/// Exponential draws use `-mean * ln(1 - u)`; normal draws use Box-Muller
/// with `u1 = 1 - u_a`, `u2 = u_b`, returning the cosine branch.
#[derive(Clone, Debug)]
pub struct RngStream {
    id: String,
    rng: Xoshiro256StarStar,
}

impl RngStream {
    pub fn new(master_seed: u64, stream_id: &str) -> Self {
        let seed = master_seed ^ fnv1a64(stream_id);
        RngStream {
            id: stream_id.to_string(),
            rng: Xoshiro256StarStar::seed_from_u64(seed),
        }
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    pub fn next_uniform(&mut self) -> f64 {
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn next_exp(&mut self, mean: f64) -> f64 {
        -mean * (1.0 - self.next_uniform()).ln()
    }

    pub fn next_standard_normal(&mut self) -> f64 {
        let u1 = 1.0 - self.next_uniform();
        let u2 = self.next_uniform();
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    }

    /// Uniform in `[lo, hi)`.
    pub fn next_range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_uniform()
    }

    /// Uniform integer in `[0, n)`; `n` must be non-zero.
    pub fn next_index(&mut self, n: usize) -> usize {
        ((self.next_uniform() * n as f64) as usize).min(n - 1)
    }
}

/// Something that can be written to the event-log trace.
pub trait TraceRecord {
    fn kind(&self) -> &'static str;
    fn detail(&self) -> serde_json::Value;
}

/// Tab-separated event log: `tti  priority  seq  kind  detail-json`.
pub struct TraceWriter<W: Write> {
    out: W,
}

impl<W: Write> TraceWriter<W> {
    pub fn new(out: W) -> Self {
        TraceWriter { out }
    }

    pub fn write<P: TraceRecord>(&mut self, event: &Event<P>) -> io::Result<()> {
        writeln!(
            self.out,
            "{}\t{}\t{}\t{}\t{}",
            event.fire_time.0,
            event.priority,
            event.seq,
            event.payload.kind(),
            event.payload.detail()
        )
    }

    pub fn into_inner(self) -> W {
        self.out
    }
}
