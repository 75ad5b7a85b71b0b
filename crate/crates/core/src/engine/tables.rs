use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::domain::{Lattice, Pattern, Substitution};
use crate::program::CallKey;

/// Answer table: canonical call pattern to answer pattern.
pub type AnswerTable<V> = BTreeMap<CallKey<V>, Pattern<V>>;

/// Identity of a dependency arc: the calling rule's head pattern, the rule
/// id and the (1-based) body position.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ArcSlot<V> {
    pub head: CallKey<V>,
    pub rule: usize,
    pub pos: usize,
}

impl<V: fmt::Debug> fmt::Debug for ArcSlot<V> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}#{}.{}", self.head, self.rule, self.pos)
    }
}

impl<V: Lattice> fmt::Display for ArcSlot<V> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}#{}.{}", self.head, self.rule, self.pos)
    }
}

/// A stored dependency `H_k:CP0 => [CP1] B:CP2` with its traversal count.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DepArc<V> {
    pub cp: Substitution<V>,
    pub callee: CallKey<V>,
    pub u: u32,
    /// The callee answer this traversal consumed.
    pub seen: Pattern<V>,
}

/// Dependency arc table with at most one arc per slot, indexed by callee.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DepTable<V> {
    arcs: BTreeMap<ArcSlot<V>, DepArc<V>>,
    by_callee: BTreeMap<CallKey<V>, BTreeSet<ArcSlot<V>>>,
}

impl<V> Default for DepTable<V> {
    fn default() -> Self {
        DepTable {
            arcs: BTreeMap::new(),
            by_callee: BTreeMap::new(),
        }
    }
}

impl<V: Lattice> DepTable<V> {
    pub fn get(&self, slot: &ArcSlot<V>) -> Option<&DepArc<V>> {
        self.arcs.get(slot)
    }

    /// Stores `arc` at `slot`, replacing any previous arc there.
    pub fn insert(&mut self, slot: ArcSlot<V>, arc: DepArc<V>) {
        if let Some(old) = self.arcs.get(&slot) {
            if old.callee != arc.callee {
                let set = self.by_callee.get_mut(&old.callee).expect("indexed callee");
                set.remove(&slot);
                if set.is_empty() {
                    self.by_callee.remove(&old.callee);
                }
            }
        }
        self.by_callee
            .entry(arc.callee.clone())
            .or_default()
            .insert(slot.clone());
        self.arcs.insert(slot, arc);
    }

    /// Slots of arcs whose callee is `key` (the slice DAT|key).
    pub fn dependents(&self, key: &CallKey<V>) -> Vec<ArcSlot<V>> {
        self.by_callee
            .get(key)
            .map(|s| s.iter().cloned().collect())
            .unwrap_or_default()
    }

    pub fn has_dependents(&self, key: &CallKey<V>) -> bool {
        self.by_callee.contains_key(key)
    }

    pub fn len(&self) -> usize {
        self.arcs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.arcs.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&ArcSlot<V>, &DepArc<V>)> {
        self.arcs.iter()
    }

    pub fn max_u(&self) -> u32 {
        self.arcs.values().map(|a| a.u).max().unwrap_or(0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::TypeValue;
    use crate::program::PredKey;

    fn key(name: &str, v: TypeValue) -> CallKey<TypeValue> {
        CallKey::new(PredKey::new(name, 1), Pattern::new(vec![v]))
    }

    #[test]
    fn replacement_moves_the_callee_index() {
        let mut dat = DepTable::default();
        let slot = ArcSlot {
            head: key("p", TypeValue::Term),
            rule: 1,
            pos: 2,
        };
        let arc = |callee| DepArc {
            cp: Substitution::top(Vec::new()),
            callee,
            u: 1,
            seen: Pattern::bottom(),
        };
        dat.insert(slot.clone(), arc(key("q", TypeValue::Term)));
        dat.insert(slot.clone(), arc(key("q", TypeValue::Int)));
        assert_eq!(dat.len(), 1);
        assert!(!dat.has_dependents(&key("q", TypeValue::Term)));
        assert_eq!(dat.dependents(&key("q", TypeValue::Int)), vec![slot]);
    }
}
