//! Single-threaded discrete-event queue.
//!
//! Events dequeue in `(tick, sequence)` order, where `sequence` is assigned
//! at insertion. Equal-tick events therefore come out in insertion order.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use serde::Serialize;

/// Simulation time in ticks. One tick is one range unit of propagation.
pub type Tick = u64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Broadcast,
    Receive,
    Ack,
    Timeout,
    PingReq,
    PingResp,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimEvent<P> {
    pub tick: Tick,
    pub sequence: u64,
    pub kind: EventKind,
    pub payload: P,
}

struct Queued<P>(SimEvent<P>);

impl<P> PartialEq for Queued<P> {
    fn eq(&self, other: &Self) -> bool {
        self.key() == other.key()
    }
}

impl<P> Eq for Queued<P> {}

impl<P> PartialOrd for Queued<P> {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl<P> Ord for Queued<P> {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.key().cmp(&other.key())
    }
}

impl<P> Queued<P> {
    fn key(&self) -> (Tick, u64) {
        (self.0.tick, self.0.sequence)
    }
}

pub struct Scheduler<P> {
    now: Tick,
    next_sequence: u64,
    queue: BinaryHeap<Reverse<Queued<P>>>,
}

impl<P> Default for Scheduler<P> {
    fn default() -> Self {
        Self::new()
    }
}

impl<P> Scheduler<P> {
    pub fn new() -> Self {
        Self::starting_at(0)
    }

    pub fn starting_at(now: Tick) -> Self {
        Scheduler {
            now,
            next_sequence: 0,
            queue: BinaryHeap::new(),
        }
    }

    pub fn now(&self) -> Tick {
        self.now
    }

    pub fn is_empty(&self) -> bool {
        self.queue.is_empty()
    }

    pub fn len(&self) -> usize {
        self.queue.len()
    }

    /// Schedules `payload` `delay` ticks from now. Events can never land in
    /// the past.
    pub fn schedule_in(&mut self, delay: Tick, kind: EventKind, payload: P) -> u64 {
        let tick = self.now + delay;
        let sequence = self.next_sequence;
        self.next_sequence += 1;
        self.queue.push(Reverse(Queued(SimEvent {
            tick,
            sequence,
            kind,
            payload,
        })));
        sequence
    }

    pub fn peek_tick(&self) -> Option<Tick> {
        self.queue.peek().map(|Reverse(q)| q.0.tick)
    }

    /// Dequeues the next event and advances the clock to its tick.
    pub fn pop(&mut self) -> Option<SimEvent<P>> {
        let Reverse(Queued(ev)) = self.queue.pop()?;
        debug_assert!(ev.tick >= self.now);
        self.now = ev.tick;
        Some(ev)
    }

    /// Dequeues every event sharing the earliest pending tick, in insertion
    /// order.
    pub fn pop_tick(&mut self) -> Vec<SimEvent<P>> {
        let Some(tick) = self.peek_tick() else {
            return Vec::new();
        };
        let mut out = Vec::new();
        while self.peek_tick() == Some(tick) {
            out.extend(self.pop());
        }
        out
    }
}
