//! Synchronization-event accounting.
//!
//! One entry is recorded per global reduction over the tall dimension.  A
//! fused multi-output product (e.g. `[Q U]^T [U W]` computed in one pass)
//! counts as a single entry.

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Origin {
    Skeleton,
    Muscle,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    GlobalReduction,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Event {
    pub origin: Origin,
    pub kind: EventKind,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EventLog {
    events: Vec<Event>,
}

impl EventLog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record(&mut self, origin: Origin) {
        self.events.push(Event {
            origin,
            kind: EventKind::GlobalReduction,
        });
    }

    pub fn extend(&mut self, other: &EventLog) {
        self.events.extend_from_slice(&other.events);
    }

    pub fn count(&self, origin: Origin) -> usize {
        self.events.iter().filter(|e| e.origin == origin).count()
    }

    pub fn total(&self) -> usize {
        self.events.len()
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }
}
