//! Heaps, stores and location allocation.
//!
//! A clock is a finite set of push channels. Each heap location carries its
//! clock inline, so the evaluation rules can consult `cl(l)` without touching
//! the store. A store is either a single later-heap `η_L`, or — while an
//! input is being consumed — a two-heap configuration `η_N ⟨κ↦v⟩ η_L` whose
//! now-heap only holds locations waiting on the channel `κ`.

use std::collections::BTreeMap;
use std::collections::BTreeSet;
use std::fmt;

use crate::syntax::{Name, Term};

/// A finite set of push channels.
pub type Clock = BTreeSet<Name>;

pub fn clock_from<I: IntoIterator<Item = Name>>(names: I) -> Clock {
    names.into_iter().collect()
}

/// A heap location. The clock is fixed at allocation time; ids are unique
/// within one machine run and never reused.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Location {
    pub id: u64,
    pub clock: Clock,
}

impl Location {
    pub fn new(id: u64, clock: Clock) -> Self {
        Location { id, clock }
    }
}

impl fmt::Debug for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "l{}", self.id)?;
        let names: Vec<_> = self.clock.iter().map(|n| n.as_str()).collect();
        write!(f, "{{{}}}", names.join(","))
    }
}

/// Allocates fresh locations from a monotone counter. The starting value is
/// the machine seed; ids are never reused, even after garbage collection.
#[derive(Debug, Clone)]
pub struct Allocator {
    next: u64,
}

impl Allocator {
    pub fn new(seed: u64) -> Self {
        Allocator { next: seed }
    }

    pub fn alloc(&mut self, clock: Clock) -> Location {
        let id = self.next;
        self.next += 1;
        Location::new(id, clock)
    }
}

/// A finite map from locations to (unevaluated) terms.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Heap {
    cells: BTreeMap<u64, (Location, Term)>,
}

impl Heap {
    pub fn new() -> Self {
        Heap::default()
    }

    pub fn insert(&mut self, loc: Location, term: Term) {
        self.cells.insert(loc.id, (loc, term));
    }

    pub fn get(&self, id: u64) -> Option<&Term> {
        self.cells.get(&id).map(|(_, t)| t)
    }

    pub fn contains(&self, id: u64) -> bool {
        self.cells.contains_key(&id)
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Location, &Term)> {
        self.cells.values().map(|(l, t)| (l, t))
    }

    pub fn locations(&self) -> impl Iterator<Item = &Location> {
        self.cells.values().map(|(l, _)| l)
    }

    /// Split into the part whose clocks contain `channel` (the now-part)
    /// and the rest (the later-part). The two parts reconstitute the heap.
    pub fn split(&self, channel: &Name) -> (Heap, Heap) {
        let mut now = Heap::new();
        let mut later = Heap::new();
        for (loc, term) in self.cells.values() {
            if loc.clock.contains(channel) {
                now.insert(loc.clone(), term.clone());
            } else {
                later.insert(loc.clone(), term.clone());
            }
        }
        (now, later)
    }

    /// True if every stored location's clock contains `channel`
    /// (membership in `Heaps_κ`).
    pub fn all_wait_on(&self, channel: &Name) -> bool {
        self.cells.values().all(|(l, _)| l.clock.contains(channel))
    }
}

/// A store: a single later-heap, or a two-heap configuration carrying the
/// current input `⟨κ ↦ v⟩`.
#[derive(Clone, Debug, PartialEq)]
pub enum Store {
    Single {
        later: Heap,
    },
    Two {
        now: Heap,
        channel: Name,
        value: Term,
        later: Heap,
    },
}

impl Store {
    pub fn empty() -> Store {
        Store::Single { later: Heap::new() }
    }

    pub fn single(later: Heap) -> Store {
        Store::Single { later }
    }

    /// Extend the later heap with a fresh binding (the `σ, l ↦ t` notation).
    pub fn bind_later(&mut self, loc: Location, term: Term) {
        match self {
            Store::Single { later } | Store::Two { later, .. } => later.insert(loc, term),
        }
    }

    pub fn later(&self) -> &Heap {
        match self {
            Store::Single { later } | Store::Two { later, .. } => later,
        }
    }

    pub fn now(&self) -> Option<&Heap> {
        match self {
            Store::Single { .. } => None,
            Store::Two { now, .. } => Some(now),
        }
    }

    /// Total number of live bindings.
    pub fn len(&self) -> usize {
        match self {
            Store::Single { later } => later.len(),
            Store::Two { now, later, .. } => now.len() + later.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// The garbage collection function: drop the now-heap and the current
    /// input, keep the later heap.
    pub fn gc(self) -> Store {
        match self {
            Store::Single { later } => Store::Single { later },
            Store::Two { later, .. } => Store::Single { later },
        }
    }
}
