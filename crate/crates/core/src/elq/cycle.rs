//! Run-time style cycle detection.
//!
//! Within one settling sequence (from an external change until the engine is
//! quiescent) every element keeps the state sets it has applied, each tagged
//! with a fingerprint of the element's outside context (its parent's box and
//! its ancestors' classes). Returning to a set already seen under the same
//! context, or changing state more than the round cap allows, is treated as
//! a cycle. This is conservative: a legitimate sequence that revisits a state
//! without its surroundings changing is flagged too.

use std::collections::BTreeMap;

use super::StateSet;
use crate::dom::NodeId;

pub const MAX_SETTLE_ROUNDS: usize = 10;

#[derive(Clone, Debug)]
pub struct CycleHistory {
    snapshots: BTreeMap<NodeId, Vec<(StateSet, u64)>>,
    rounds: BTreeMap<NodeId, usize>,
    max_rounds: usize,
}

impl Default for CycleHistory {
    fn default() -> Self {
        CycleHistory::new(MAX_SETTLE_ROUNDS)
    }
}

impl CycleHistory {
    pub fn new(max_rounds: usize) -> Self {
        CycleHistory { snapshots: BTreeMap::new(), rounds: BTreeMap::new(), max_rounds }
    }

    pub fn max_rounds(&self) -> usize {
        self.max_rounds
    }

    /// Rounds seen for `el` in the current sequence.
    pub fn settle_round(&self, el: NodeId) -> usize {
        self.rounds.get(&el).copied().unwrap_or(0)
    }

    pub fn history(&self, el: NodeId) -> Vec<&StateSet> {
        self.snapshots.get(&el).into_iter().flatten().map(|(s, _)| s).collect()
    }

    /// Opens the element's history with the set it currently shows, so that
    /// flipping straight back to it counts as a revisit.
    pub fn seed(&mut self, el: NodeId, current: &StateSet, context: u64) {
        let hist = self.snapshots.entry(el).or_default();
        if hist.is_empty() {
            hist.push((current.clone(), context));
        }
    }

    /// [`CycleHistory::detect_cycle_in`] for an element whose context never
    /// changes.
    pub fn detect_cycle(&mut self, el: NodeId, new_states: &StateSet) -> bool {
        self.detect_cycle_in(el, new_states, 0)
    }

    /// Returns true when `new_states` closes a cycle; otherwise records it.
    pub fn detect_cycle_in(&mut self, el: NodeId, new_states: &StateSet, context: u64) -> bool {
        let round = self.rounds.entry(el).or_insert(0);
        let this_round = *round;
        *round += 1;
        let hist = self.snapshots.entry(el).or_default();
        if this_round > self.max_rounds || hist.iter().any(|(s, c)| s == new_states && *c == context) {
            return true;
        }
        hist.push((new_states.clone(), context));
        false
    }

    /// Ends the settling sequence.
    pub fn clear(&mut self) {
        self.snapshots.clear();
        self.rounds.clear();
    }

    pub fn is_empty(&self) -> bool {
        self.snapshots.is_empty()
    }
}
