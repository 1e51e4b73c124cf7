//! Strategies and their dynamical bounds: the backwards recursion `B_g`,
//! the per-step chip-creation total, and gains of good strategies.
//!
//! A strategy is read as a sequence of firing choices taken backwards in
//! time from the all-zero state: the chosen vertex gains its out-degree,
//! every other vertex loses the incoming multiplicity (clamped at zero).
//! The running total of a bound never decreases, and for a primitive
//! sequence it freezes at step `P - 1`; that frozen total is the gain.

use thiserror::Error;

use crate::game::Configuration;
use crate::multigraph::{DirectedMultigraph, VertexId};
use crate::period::PeriodData;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BoundsError {
    #[error("sequence is not primitive: {0}")]
    NotPrimitive(String),
}

/// A finite prefix of a strategy.
pub type StrategyPrefix = [VertexId];

/// A length-`P` vertex sequence in which `v_i` occurs exactly `v_G(i)`
/// times. Repeated periodically it is a good strategy; its gain — the
/// bound total at step `P - 1` — upper-bounds the instability minimum,
/// and the minimum over all primitive sequences attains it.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PrimitiveSequence {
    seq: Vec<VertexId>,
}

impl PrimitiveSequence {
    /// Validates the multiplicity invariant against the period data.
    pub fn new(seq: Vec<VertexId>, period: &PeriodData) -> Result<Self, BoundsError> {
        if seq.len() != period.period_len() {
            return Err(BoundsError::NotPrimitive(format!(
                "length {} differs from period length {}",
                seq.len(),
                period.p
            )));
        }
        let mut counts = vec![0u64; period.v_g.len()];
        for &v in &seq {
            match counts.get_mut(v.index()) {
                Some(c) => *c += 1,
                None => {
                    return Err(BoundsError::NotPrimitive(format!(
                        "vertex index {} out of range",
                        v.index()
                    )))
                }
            }
        }
        if counts != period.v_g {
            return Err(BoundsError::NotPrimitive(format!(
                "multiplicities {counts:?} differ from period vector {:?}",
                period.v_g
            )));
        }
        Ok(PrimitiveSequence { seq })
    }

    /// For sequences that satisfy the multiplicity invariant by
    /// construction (enumeration, search).
    pub(crate) fn from_validated(seq: Vec<VertexId>) -> Self {
        PrimitiveSequence { seq }
    }

    /// The lexicographically smallest primitive sequence: each vertex in
    /// index order, repeated its period-vector multiplicity.
    pub fn canonical(period: &PeriodData) -> Self {
        let seq = period
            .v_g
            .iter()
            .enumerate()
            .flat_map(|(i, &m)| std::iter::repeat_n(VertexId(i as u32), m as usize))
            .collect();
        PrimitiveSequence { seq }
    }

    pub fn vertices(&self) -> &[VertexId] {
        &self.seq
    }

    pub fn len(&self) -> usize {
        self.seq.len()
    }

    pub fn is_empty(&self) -> bool {
        self.seq.is_empty()
    }
}

/// One step of the backwards recursion: the fired vertex gains `d^+(v)`,
/// every other `w` drops by `E(v, w)` clamped at zero.
pub fn bound_step(g: &DirectedMultigraph, b: &Configuration, v: VertexId) -> Configuration {
    let mut next: Vec<u64> = b.to_vec();
    for w in g.vertices() {
        if w == v {
            next[w.index()] += g.out_degree(v);
        } else {
            next[w.index()] = next[w.index()].saturating_sub(g.multiplicity(v, w));
        }
    }
    next.into()
}

/// Chips created by firing `v` backwards from state `b`:
/// `sum_w max(0, E(v, w) - b(w))`. Equals the increase of the bound total
/// in this step; the fired vertex itself always contributes zero.
pub fn delta_total(g: &DirectedMultigraph, b: &Configuration, v: VertexId) -> u64 {
    g.vertices()
        .map(|w| g.multiplicity(v, w).saturating_sub(b.get(w)))
        .sum()
}

/// The full state history of a bound run. The hot search paths keep a
/// rolling state instead; this is for inspection and property checks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoundTrace {
    /// `B(0), ..., B(n)` for a prefix of length `n`.
    pub states: Vec<Configuration>,
    /// Running totals, one per state; non-decreasing.
    pub totals: Vec<u64>,
}

impl BoundTrace {
    pub fn final_total(&self) -> u64 {
        *self.totals.last().expect("trace always holds the zero state")
    }
}

/// Iterates [`bound_step`] from the all-zero state along the prefix.
pub fn run_bound(g: &DirectedMultigraph, prefix: &StrategyPrefix) -> BoundTrace {
    let mut states = Vec::with_capacity(prefix.len() + 1);
    let mut totals = Vec::with_capacity(prefix.len() + 1);
    let mut current = Configuration::zero(g.vertex_count());
    totals.push(0);
    states.push(current.clone());
    for &v in prefix {
        current = bound_step(g, &current, v);
        totals.push(current.total());
        states.push(current.clone());
    }
    BoundTrace { states, totals }
}

/// The gain of the good strategy induced by a primitive sequence:
/// `sum_v B_sigma(P-1)(v)`. The bound total is frozen from step `P - 1`
/// on, so this is also the limit total of the periodic strategy.
pub fn gain_of_good(g: &DirectedMultigraph, sigma: &PrimitiveSequence) -> u64 {
    let mut current = Configuration::zero(g.vertex_count());
    for &v in &sigma.seq[..sigma.len().saturating_sub(1)] {
        current = bound_step(g, &current, v);
    }
    current.total()
}

/// Checks the window identity of the bound recursion:
/// `B(n+r)(v) = B(n)(v) + k d^+(v) - sum over non-v steps of
/// min(B(n+j)(v), E(g(n+j), v))`, where `k` counts the firings of `v` in
/// the window. Exists as a property-test hook; it holds for every trace.
pub fn check_evol_identity(
    g: &DirectedMultigraph,
    prefix: &StrategyPrefix,
    n: usize,
    r: usize,
    v: VertexId,
) -> bool {
    assert!(n + r <= prefix.len(), "prefix must cover the window");
    let trace = run_bound(g, prefix);
    let at = |step: usize| trace.states[step].get(v) as i128;
    let mut fired = 0i128;
    let mut absorbed = 0i128;
    for j in 0..r {
        let w = prefix[n + j];
        if w == v {
            fired += 1;
        } else {
            absorbed += at(n + j).min(g.multiplicity(w, v) as i128);
        }
    }
    at(n + r) == at(n) + fired * g.out_degree(v) as i128 - absorbed
}
