use std::collections::BTreeMap;
use std::fmt;

use super::tables::ArcSlot;
use crate::domain::{Lattice, Substitution};
use crate::error::AnalysisError;
use crate::program::CallKey;

/// Pop order among events of the same class.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheduling {
    /// Oldest event first.
    Fifo,
    /// Newest event first (depth-first traversal).
    Lifo,
}

/// Where updated events rank relative to newcall and arc events.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UpdatedRank {
    Normal,
    Last,
    /// Updates with no dependent arcs at generation time rank above all else.
    RedundantFirst,
}

/// A queue-handling strategy: a total, deterministic event order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Strategy {
    id: &'static str,
    scheduling: Scheduling,
    updated: UpdatedRank,
}

/// Registered strategy ids, in registry order.
pub const STRATEGY_IDS: [&str; 4] = [
    "textual-fifo",
    "reverse-rules",
    "updated-last",
    "redundant-updates-first",
];

impl Strategy {
    /// Looks up a registered strategy by id.
    pub fn from_id(id: &str) -> Result<Strategy, AnalysisError> {
        let (scheduling, updated) = match id {
            "textual-fifo" => (Scheduling::Fifo, UpdatedRank::Normal),
            // Rules are enqueued in textual order, so LIFO pops them last to first
            // and processes each resulting update before the next rule.
            "reverse-rules" => (Scheduling::Lifo, UpdatedRank::Normal),
            "updated-last" => (Scheduling::Fifo, UpdatedRank::Last),
            "redundant-updates-first" => (Scheduling::Fifo, UpdatedRank::RedundantFirst),
            _ => return Err(AnalysisError::UnknownStrategy(id.to_string())),
        };
        let id = STRATEGY_IDS.iter().find(|s| **s == id).copied().unwrap();
        Ok(Strategy {
            id,
            scheduling,
            updated,
        })
    }

    pub fn all() -> Vec<Strategy> {
        STRATEGY_IDS.iter().map(|id| Strategy::from_id(id).unwrap()).collect()
    }

    pub fn id(&self) -> &'static str {
        self.id
    }

    pub fn scheduling(&self) -> Scheduling {
        self.scheduling
    }

    pub fn updated_rank(&self) -> UpdatedRank {
        self.updated
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id)
    }
}

/// A unit of analysis work.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Event<V> {
    NewCall(CallKey<V>),
    Arc(ArcEvent<V>),
    Updated(CallKey<V>),
}

/// A queued arc: the slot it belongs to, the program-point substitution
/// before the literal and the traversal count carried with it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArcEvent<V> {
    pub slot: ArcSlot<V>,
    pub cp: Substitution<V>,
    pub u: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
enum QueueKey<V> {
    NewCall(CallKey<V>),
    Arc(ArcSlot<V>),
    Updated(CallKey<V>),
}

type Priority = (u8, i64);

const CLASS_FIRST: u8 = 0;
const CLASS_NORMAL: u8 = 1;
const CLASS_LAST: u8 = 2;

/// Prioritized event queue with per-key deduplication.
///
/// A new arc for a queued slot replaces the queued one and is re-ranked as
/// if freshly added; duplicate newcall and updated events are absorbed.
#[derive(Debug)]
pub struct EventQueue<V> {
    strategy: Strategy,
    order: BTreeMap<Priority, Event<V>>,
    queued: BTreeMap<QueueKey<V>, Priority>,
    seq: i64,
}

impl<V: Lattice> EventQueue<V> {
    pub fn new(strategy: Strategy) -> Self {
        EventQueue {
            strategy,
            order: BTreeMap::new(),
            queued: BTreeMap::new(),
            seq: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    fn next_priority(&mut self, class: u8) -> Priority {
        self.seq += 1;
        match self.strategy.scheduling {
            Scheduling::Fifo => (class, self.seq),
            Scheduling::Lifo => (class, -self.seq),
        }
    }

    fn push(&mut self, key: QueueKey<V>, class: u8, event: Event<V>) {
        let prio = self.next_priority(class);
        self.queued.insert(key, prio);
        self.order.insert(prio, event);
    }

    pub fn push_newcall(&mut self, key: CallKey<V>) {
        let qk = QueueKey::NewCall(key.clone());
        if !self.queued.contains_key(&qk) {
            self.push(qk, CLASS_NORMAL, Event::NewCall(key));
        }
    }

    /// Queues `arc`, replacing a queued arc for the same slot. The
    /// replacement carries the lub of both call substitutions, so a relaunch
    /// from the DAT never discards a newer continuation.
    pub fn push_arc(&mut self, mut arc: ArcEvent<V>) {
        let qk = QueueKey::Arc(arc.slot.clone());
        if let Some(old) = self.queued.remove(&qk) {
            if let Some(Event::Arc(prev)) = self.order.remove(&old) {
                arc.cp = arc.cp.lub(&prev.cp);
            }
        }
        self.push(qk, CLASS_NORMAL, Event::Arc(arc));
    }

    /// `redundant` tells whether the key had no dependent arcs when the
    /// update was generated.
    pub fn push_updated(&mut self, key: CallKey<V>, redundant: bool) {
        let qk = QueueKey::Updated(key.clone());
        if self.queued.contains_key(&qk) {
            return;
        }
        let class = match self.strategy.updated {
            UpdatedRank::Normal => CLASS_NORMAL,
            UpdatedRank::Last => CLASS_LAST,
            UpdatedRank::RedundantFirst if redundant => CLASS_FIRST,
            UpdatedRank::RedundantFirst => CLASS_NORMAL,
        };
        self.push(qk, class, Event::Updated(key));
    }

    pub fn pop(&mut self) -> Option<Event<V>> {
        let (_, event) = self.order.pop_first()?;
        let qk = match &event {
            Event::NewCall(k) => QueueKey::NewCall(k.clone()),
            Event::Arc(a) => QueueKey::Arc(a.slot.clone()),
            Event::Updated(k) => QueueKey::Updated(k.clone()),
        };
        self.queued.remove(&qk);
        Some(event)
    }
}
