//! The legal-game engine: firing semantics, finite/infinite classification
//! and the brute-force instability oracle.

use std::collections::HashMap;
use std::ops::Deref;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::exec;
use crate::multigraph::{DirectedMultigraph, VertexId};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GameError {
    #[error("vertex {0} cannot fire: it holds fewer chips than its out-degree")]
    IllegalFire(String),
    #[error("no infinite configuration found with total at most {cap}")]
    CapExceeded { cap: u64 },
}

/// Chip counts per vertex. Total chips are conserved by every fire step.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Configuration(Vec<u64>);

impl Configuration {
    pub fn new(chips: Vec<u64>) -> Self {
        Configuration(chips)
    }

    pub fn zero(n: usize) -> Self {
        Configuration(vec![0; n])
    }

    pub fn total(&self) -> u64 {
        self.0.iter().sum()
    }

    pub fn get(&self, v: VertexId) -> u64 {
        self.0[v.index()]
    }

    pub fn into_inner(self) -> Vec<u64> {
        self.0
    }
}

impl Deref for Configuration {
    type Target = [u64];

    fn deref(&self) -> &[u64] {
        &self.0
    }
}

impl From<Vec<u64>> for Configuration {
    fn from(chips: Vec<u64>) -> Self {
        Configuration(chips)
    }
}

/// Verdict of a legal game. The finite/infinite split is independent of
/// the firing order, so the outcome of the deterministic policy decides it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GameOutcome {
    Finite {
        final_config: Configuration,
        steps: u64,
        firings: Vec<u64>,
    },
    Infinite {
        /// Step index at which the first revisited configuration was seen.
        entry: u64,
        cycle_length: u64,
    },
}

impl GameOutcome {
    pub fn is_infinite(&self) -> bool {
        matches!(self, GameOutcome::Infinite { .. })
    }
}

/// Which fireable vertex the simulation picks at each step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FiringPolicy {
    LowestIndex,
    HighestIndex,
    /// Uniform among the fireable vertices, seeded.
    Random(u64),
}

/// A vertex can fire iff it holds at least `d^+(v)` chips and `d^+(v) >= 1`.
/// A vertex with no outgoing edges never fires (its firing would move no
/// chips and every game would be vacuously infinite).
pub fn can_fire(g: &DirectedMultigraph, c: &Configuration, v: VertexId) -> bool {
    let d = g.out_degree(v);
    d >= 1 && c.get(v) >= d
}

/// Fires `v`: it loses `d^+(v)` chips and each other vertex `w` gains
/// `E(v, w)`.
pub fn fire(
    g: &DirectedMultigraph,
    c: &Configuration,
    v: VertexId,
) -> Result<Configuration, GameError> {
    if !can_fire(g, c, v) {
        return Err(GameError::IllegalFire(g.name(v).to_string()));
    }
    let mut next = c.0.clone();
    next[v.index()] -= g.out_degree(v);
    for w in g.vertices() {
        if w != v {
            next[w.index()] += g.multiplicity(v, w);
        }
    }
    Ok(Configuration(next))
}

/// Simulates the legal game under the lowest-index policy until it
/// stabilizes or revisits a configuration. Total chips are fixed, so the
/// state space is finite and one of the two always happens.
pub fn classify(g: &DirectedMultigraph, c0: &Configuration) -> GameOutcome {
    classify_with_policy(g, c0, FiringPolicy::LowestIndex)
}

pub fn classify_with_policy(
    g: &DirectedMultigraph,
    c0: &Configuration,
    policy: FiringPolicy,
) -> GameOutcome {
    let mut rng = match policy {
        FiringPolicy::Random(seed) => Some(ChaCha8Rng::seed_from_u64(seed)),
        _ => None,
    };
    let mut firings = vec![0u64; g.vertex_count()];
    let mut seen: HashMap<Configuration, u64> = HashMap::new();
    let mut current = c0.clone();
    let mut step = 0u64;
    loop {
        if let Some(&entry) = seen.get(&current) {
            return GameOutcome::Infinite { entry, cycle_length: step - entry };
        }
        let fireable: Vec<VertexId> =
            g.vertices().filter(|&v| can_fire(g, &current, v)).collect();
        let chosen = match (&mut rng, fireable.as_slice()) {
            (_, []) => {
                return GameOutcome::Finite { final_config: current, steps: step, firings };
            }
            (None, vs) => match policy {
                FiringPolicy::LowestIndex => vs[0],
                FiringPolicy::HighestIndex => *vs.last().unwrap(),
                FiringPolicy::Random(_) => unreachable!(),
            },
            (Some(rng), vs) => vs[rng.random_range(0..vs.len())],
        };
        seen.insert(current.clone(), step);
        firings[chosen.index()] += 1;
        current = fire(g, &current, chosen).expect("chosen vertex is fireable");
        step += 1;
    }
}

/// All configurations on `parts` vertices with the given total, in
/// lexicographic order.
pub fn compositions(total: u64, parts: usize) -> Vec<Configuration> {
    assert!(parts >= 1);
    let mut out = Vec::new();
    let mut current = vec![0u64; parts];
    fill(&mut out, &mut current, 0, total);
    return out;

    fn fill(out: &mut Vec<Configuration>, current: &mut [u64], pos: usize, remaining: u64) {
        if pos + 1 == current.len() {
            current[pos] = remaining;
            out.push(Configuration(current.to_vec()));
            return;
        }
        for x in 0..=remaining {
            current[pos] = x;
            fill(out, current, pos + 1, remaining - x);
        }
    }
}

/// True iff every configuration with the given total classifies finite.
pub fn all_finite_at_total(g: &DirectedMultigraph, total: u64) -> bool {
    minimal_infinite_at_total(g, total).is_none()
}

/// The lexicographically smallest configuration with the given total whose
/// game is infinite, if any. Every composition is classified (no early
/// exit), so the scan is deterministic in work and result.
pub fn minimal_infinite_at_total(
    g: &DirectedMultigraph,
    total: u64,
) -> Option<Configuration> {
    let candidates = compositions(total, g.vertex_count());
    exec::map_reduce(
        candidates,
        |c| classify(g, &c).is_infinite().then_some(c),
        |a, b| match (a, b) {
            (Some(x), Some(y)) => Some(x.min(y)),
            (x, None) => x,
            (None, y) => y,
        },
    )
    .flatten()
}

/// The instability minimum by brute force: the least total `t` for which
/// some configuration of total `t` classifies infinite, together with the
/// lexicographically smallest such witness. Termination without a cap is
/// guaranteed by the pigeonhole bound: any configuration with more than
/// `M - N` chips always has a fireable vertex.
///
/// For a single vertex the instability minimum is 0 by convention (no
/// vertex can ever fire), with no witness.
pub fn oracle_minimum(
    g: &DirectedMultigraph,
    cap: Option<u64>,
) -> Result<(u64, Option<Configuration>), GameError> {
    if g.vertex_count() == 1 {
        return Ok((0, None));
    }
    let natural_bound = g.total_edges() - g.vertex_count() as u64 + 1;
    let limit = cap.map_or(natural_bound, |c| c.min(natural_bound));
    for t in 1..=limit {
        if let Some(witness) = minimal_infinite_at_total(g, t) {
            return Ok((t, Some(witness)));
        }
    }
    match cap {
        Some(c) if c < natural_bound => Err(GameError::CapExceeded { cap: c }),
        _ => unreachable!("pigeonhole: total {natural_bound} always admits an infinite game"),
    }
}

/// [`oracle_minimum`] without the witness.
pub fn instability_oracle(g: &DirectedMultigraph, cap: Option<u64>) -> Result<u64, GameError> {
    oracle_minimum(g, cap).map(|(c, _)| c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::multigraph::DirectedMultigraph;

    fn g2() -> DirectedMultigraph {
        DirectedMultigraph::build(&[], &[("a", "b", 2), ("b", "a", 1)]).unwrap()
    }

    fn c3() -> DirectedMultigraph {
        DirectedMultigraph::build(&[], &[("a", "b", 1), ("b", "c", 1), ("c", "a", 1)]).unwrap()
    }

    fn d2() -> DirectedMultigraph {
        DirectedMultigraph::build(&[], &[("a", "b", 1), ("b", "a", 1)]).unwrap()
    }

    const A: VertexId = VertexId(0);
    const B: VertexId = VertexId(1);

    #[test]
    fn can_fire_threshold_is_out_degree() {
        // A vertex holding exactly d^+ chips fires.
        assert!(can_fire(&c3(), &vec![1, 0, 0].into(), A));
        assert!(!can_fire(&g2(), &vec![1, 0].into(), A));
        assert!(!can_fire(&g2(), &vec![0, 0].into(), A));
        assert!(!can_fire(&g2(), &vec![0, 0].into(), B));
    }

    #[test]
    fn zero_out_degree_never_fires() {
        let g = DirectedMultigraph::build(&["a"], &[]).unwrap();
        assert!(!can_fire(&g, &vec![100].into(), A));
    }

    #[test]
    fn fire_moves_chips() {
        assert_eq!(*fire(&g2(), &vec![2, 0].into(), A).unwrap(), [0, 2]);
        assert_eq!(*fire(&g2(), &vec![0, 2].into(), B).unwrap(), [1, 1]);
        assert_eq!(*fire(&d2(), &vec![1, 0].into(), A).unwrap(), [0, 1]);
    }

    #[test]
    fn fire_conserves_total() {
        let g = g2();
        let c: Configuration = vec![3, 1].into();
        assert_eq!(fire(&g, &c, A).unwrap().total(), c.total());
    }

    #[test]
    fn illegal_fire_is_rejected() {
        assert!(matches!(
            fire(&g2(), &vec![1, 0].into(), A),
            Err(GameError::IllegalFire(_))
        ));
    }

    #[test]
    fn classify_d2_cycle() {
        // (1,0) -> (0,1) -> (1,0): revisit of step 0 at step 2.
        let out = classify(&d2(), &vec![1, 0].into());
        assert_eq!(out, GameOutcome::Infinite { entry: 0, cycle_length: 2 });
    }

    #[test]
    fn classify_g2_stabilizes() {
        let out = classify(&g2(), &vec![0, 1].into());
        match out {
            GameOutcome::Finite { final_config, steps, firings } => {
                assert_eq!(*final_config, [1, 0]);
                assert_eq!(steps, 1);
                assert_eq!(firings, vec![0, 1]);
            }
            _ => panic!("expected finite game"),
        }
    }

    #[test]
    fn classify_zero_config() {
        let out = classify(&c3(), &Configuration::zero(3));
        match out {
            GameOutcome::Finite { steps, .. } => assert_eq!(steps, 0),
            _ => panic!("expected finite game"),
        }
    }

    #[test]
    fn compositions_are_lexicographic() {
        let all = compositions(2, 2);
        let flat: Vec<Vec<u64>> = all.into_iter().map(|c| c.into_inner()).collect();
        assert_eq!(flat, vec![vec![0, 2], vec![1, 1], vec![2, 0]]);
    }

    #[test]
    fn oracle_micro_instances() {
        assert_eq!(instability_oracle(&g2(), None).unwrap(), 2);
        assert_eq!(instability_oracle(&d2(), None).unwrap(), 1);
        assert_eq!(instability_oracle(&c3(), None).unwrap(), 1);
    }

    #[test]
    fn oracle_witness_is_infinite_and_minimal() {
        let g = g2();
        let (c, witness) = oracle_minimum(&g, None).unwrap();
        let witness = witness.unwrap();
        assert_eq!(c, 2);
        assert_eq!(witness.total(), 2);
        assert!(classify(&g, &witness).is_infinite());
        assert!(all_finite_at_total(&g, 1));
    }

    #[test]
    fn oracle_cap() {
        assert_eq!(
            instability_oracle(&g2(), Some(1)).unwrap_err(),
            GameError::CapExceeded { cap: 1 }
        );
        assert_eq!(instability_oracle(&g2(), Some(2)).unwrap(), 2);
    }

    #[test]
    fn oracle_single_vertex_convention() {
        let g = DirectedMultigraph::build(&["a"], &[]).unwrap();
        assert_eq!(oracle_minimum(&g, None).unwrap(), (0, None));
    }

    #[test]
    fn pigeonhole_bound_configs_are_infinite() {
        for g in [g2(), c3(), d2()] {
            let t = g.total_edges() - g.vertex_count() as u64 + 1;
            for c in compositions(t, g.vertex_count()) {
                assert!(classify(&g, &c).is_infinite(), "{c:?} on M={}", g.total_edges());
            }
        }
    }

    #[test]
    fn verdict_is_policy_independent() {
        let g = g2();
        for t in 1..=3 {
            for c in compositions(t, 2) {
                let low = classify_with_policy(&g, &c, FiringPolicy::LowestIndex).is_infinite();
                let high = classify_with_policy(&g, &c, FiringPolicy::HighestIndex).is_infinite();
                let rand = classify_with_policy(&g, &c, FiringPolicy::Random(7)).is_infinite();
                assert_eq!(low, high, "{c:?}");
                assert_eq!(low, rand, "{c:?}");
            }
        }
    }
}
