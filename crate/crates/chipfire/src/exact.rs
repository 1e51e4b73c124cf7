//! Exact instability minimum via the minimum gain over primitive
//! sequences, witness extraction from a good strategy's bound cycle, and
//! the classical feedback number for cross-checks.

use std::collections::HashMap;
use std::fmt;
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::bounds::{bound_step, gain_of_good, PrimitiveSequence};
use crate::exec;
use crate::game::{classify, Configuration, GameError};
use crate::multigraph::{DirectedMultigraph, VertexId};
use crate::period::{primitive_period_vector, PeriodError};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SearchError {
    #[error(transparent)]
    Period(#[from] PeriodError),
    #[error(transparent)]
    Game(#[from] GameError),
    #[error("search budget exceeded: {0}")]
    LimitExceeded(String),
    /// Signals an implementation bug: a result failed its own re-check
    /// through the game engine.
    #[error("internal verification failed: {0}")]
    VerificationFailed(String),
}

/// Which of the three exact routes produced a result.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Strategies,
    Extension,
    Oracle,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Strategies => "strategies",
            Method::Extension => "extension",
            Method::Oracle => "oracle",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SearchStats {
    /// Strategy search: bound steps; oracle: configurations classified;
    /// extension: orderings evaluated. Identical for every thread count.
    pub nodes: u64,
    pub elapsed: Duration,
}

/// The instability minimum together with how it was obtained.
///
/// When present, the witness has total exactly `c` and classifies
/// infinite, and the optimal sequence's gain equals `c`; both are
/// re-validated before being returned.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InstabilityResult {
    pub c: u64,
    pub method: Method,
    pub optimal_sequence: Option<PrimitiveSequence>,
    pub witness: Option<Configuration>,
    pub stats: SearchStats,
}

/// Budgets for the exact searches.
///
/// A search whose primitive-sequence count stays within `max_sequences`
/// runs to completion unconditionally. Larger searches are cut off once
/// the explored work exceeds `node_budget` and report `LimitExceeded`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SearchLimits {
    pub max_sequences: u64,
    pub node_budget: u64,
}

impl Default for SearchLimits {
    fn default() -> Self {
        SearchLimits { max_sequences: 1_000_000, node_budget: 100_000_000 }
    }
}

impl SearchLimits {
    pub fn with_node_budget(node_budget: u64) -> Self {
        SearchLimits { node_budget, ..Self::default() }
    }
}

/// `P! / prod v_G(i)!`, the number of primitive sequences; `None` when it
/// overflows u64.
pub fn sequence_count(v_g: &[u64]) -> Option<u64> {
    let mut result: u128 = 1;
    let mut placed: u128 = 0;
    for &m in v_g {
        for k in 1..=m as u128 {
            placed += 1;
            result = result.checked_mul(placed)? / k;
        }
    }
    u64::try_from(result).ok()
}

/// Streams every multiset permutation of `{v_i with multiplicity v_G(i)}`
/// exactly once, in lexicographic order.
pub fn enumerate_primitive_sequences(v_g: &[u64]) -> MultisetPermutations {
    let current = v_g
        .iter()
        .enumerate()
        .flat_map(|(i, &m)| std::iter::repeat_n(i as u32, m as usize))
        .collect();
    MultisetPermutations { current, started: false, done: false }
}

pub struct MultisetPermutations {
    current: Vec<u32>,
    started: bool,
    done: bool,
}

impl Iterator for MultisetPermutations {
    type Item = Vec<VertexId>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        if self.started && !next_permutation(&mut self.current) {
            self.done = true;
            return None;
        }
        self.started = true;
        Some(self.current.iter().map(|&i| VertexId(i)).collect())
    }
}

/// In-place step to the next lexicographic permutation; false at the last.
fn next_permutation(a: &mut [u32]) -> bool {
    if a.len() < 2 {
        return false;
    }
    let Some(i) = (0..a.len() - 1).rfind(|&i| a[i] < a[i + 1]) else {
        return false;
    };
    let j = (i + 1..a.len()).rfind(|&j| a[j] > a[i]).expect("a[i+1] qualifies");
    a.swap(i, j);
    a[i + 1..].reverse();
    true
}

const PARTITION_TARGET: usize = 64;

struct TaskResult {
    best: Option<(u64, Vec<u32>)>,
    nodes: u64,
    exceeded: bool,
}

/// The instability minimum as the minimum gain over primitive sequences,
/// by depth-first search over multiset-permutation prefixes.
///
/// Pruning rests on the monotonicity of bound totals: a prefix whose
/// running total already reaches the incumbent cannot complete to a
/// strictly smaller gain. Children are explored in lexicographic order
/// and the incumbent is replaced only on strict improvement, so the
/// reported optimal sequence is the lexicographically smallest one.
/// Subtrees are searched independently (each seeded with the gain of the
/// canonical sequence) and merged by `(gain, sequence)` order, which makes
/// the result and the node count independent of the thread count.
pub fn instability_by_strategies(
    g: &DirectedMultigraph,
    limits: &SearchLimits,
) -> Result<InstabilityResult, SearchError> {
    let start = Instant::now();
    let period = primitive_period_vector(g)?;
    if g.vertex_count() == 1 {
        // No vertex can ever fire; the instability minimum is 0 by convention.
        return Ok(InstabilityResult {
            c: 0,
            method: Method::Strategies,
            optimal_sequence: Some(PrimitiveSequence::canonical(&period)),
            witness: None,
            stats: SearchStats { nodes: 0, elapsed: start.elapsed() },
        });
    }
    let p = period.period_len();
    let count = sequence_count(&period.v_g);
    let budget = match count {
        Some(c) if c <= limits.max_sequences => u64::MAX,
        _ => limits.node_budget,
    };
    if p as u64 > limits.node_budget {
        return Err(SearchError::LimitExceeded(format!(
            "period length {p} exceeds the node budget"
        )));
    }

    let sigma0 = PrimitiveSequence::canonical(&period);
    let v0 = gain_of_good(g, &sigma0);
    let mut nodes = p as u64 - 1;

    let prefixes = expand_prefixes(&period.v_g, PARTITION_TARGET);
    let merged = exec::map_reduce(
        prefixes,
        |prefix| explore_subtree(g, &period.v_g, &prefix, v0, budget),
        |a, b| TaskResult {
            best: match (a.best, b.best) {
                (Some(x), Some(y)) => Some(x.min(y)),
                (x, None) => x,
                (None, y) => y,
            },
            nodes: a.nodes + b.nodes,
            exceeded: a.exceeded || b.exceeded,
        },
    )
    .expect("at least the empty prefix");
    nodes += merged.nodes;
    if merged.exceeded || nodes > budget {
        return Err(SearchError::LimitExceeded(format!(
            "strategy search passed {nodes} bound steps (budget {budget})"
        )));
    }

    let (c, sigma) = match merged.best {
        Some((value, seq)) => {
            let seq = seq.into_iter().map(VertexId).collect();
            (value, PrimitiveSequence::from_validated(seq))
        }
        None => (v0, sigma0),
    };
    let witness = extract_witness(g, &sigma)?;
    Ok(InstabilityResult {
        c,
        method: Method::Strategies,
        optimal_sequence: Some(sigma),
        witness: Some(witness),
        stats: SearchStats { nodes, elapsed: start.elapsed() },
    })
}

/// All feasible prefixes of the fixed depth at which the number of
/// subtrees first reaches `target` (never deeper than `P - 1`), in
/// lexicographic order. The depth depends only on the period vector.
fn expand_prefixes(v_g: &[u64], target: usize) -> Vec<Vec<u32>> {
    let p: u64 = v_g.iter().sum();
    let mut prefixes: Vec<Vec<u32>> = vec![Vec::new()];
    let mut depth = 0u64;
    while prefixes.len() < target && depth + 1 < p {
        let mut next = Vec::with_capacity(prefixes.len() * v_g.len());
        for prefix in &prefixes {
            let mut remaining = v_g.to_vec();
            for &v in prefix {
                remaining[v as usize] -= 1;
            }
            for (v, &r) in remaining.iter().enumerate() {
                if r > 0 {
                    let mut extended = prefix.clone();
                    extended.push(v as u32);
                    next.push(extended);
                }
            }
        }
        prefixes = next;
        depth += 1;
    }
    prefixes
}

/// Depth-first search below one prefix with a local incumbent seeded at
/// `seed_gain`. Returns the lexicographically first leaf of each strict
/// improvement, so the final `best` is the subtree's lexicographically
/// smallest argmin (or `None` when nothing beats the seed).
fn explore_subtree(
    g: &DirectedMultigraph,
    v_g: &[u64],
    prefix: &[u32],
    seed_gain: u64,
    budget: u64,
) -> TaskResult {
    let n = g.vertex_count();
    let p: usize = v_g.iter().sum::<u64>() as usize;
    let base = prefix.len();

    let mut remaining = v_g.to_vec();
    let mut states: Vec<Configuration> = Vec::with_capacity(p);
    states.push(Configuration::zero(n));
    let mut nodes = 0u64;
    for &v in prefix {
        remaining[v as usize] -= 1;
        let next = bound_step(g, states.last().unwrap(), VertexId(v));
        states.push(next);
        nodes += 1;
    }

    let mut incumbent = seed_gain;
    let mut best: Option<(u64, Vec<u32>)> = None;
    let mut seq: Vec<u32> = prefix.to_vec();
    let mut cursors = vec![0u32; p + 1];
    let mut depth = base;
    let mut exceeded = false;

    'search: loop {
        let total = states[depth].total();
        let prune = total >= incumbent;
        if !prune && depth == p - 1 {
            // One symbol left; it cannot change the total at step P-1.
            if total < incumbent {
                incumbent = total;
                let forced = remaining
                    .iter()
                    .position(|&r| r > 0)
                    .expect("exactly one symbol remains") as u32;
                let mut full = seq.clone();
                full.push(forced);
                best = Some((total, full));
            }
        } else if !prune {
            let mut advanced = false;
            while (cursors[depth] as usize) < n {
                let v = cursors[depth];
                cursors[depth] += 1;
                if remaining[v as usize] > 0 {
                    if nodes >= budget {
                        exceeded = true;
                        break 'search;
                    }
                    remaining[v as usize] -= 1;
                    seq.push(v);
                    let next = bound_step(g, &states[depth], VertexId(v));
                    states.truncate(depth + 1);
                    states.push(next);
                    nodes += 1;
                    depth += 1;
                    cursors[depth] = 0;
                    advanced = true;
                    break;
                }
            }
            if advanced {
                continue;
            }
        }
        // Backtrack; resume the sibling scan at the first depth with
        // untried children.
        loop {
            if depth == base {
                break 'search;
            }
            depth -= 1;
            let v = seq.pop().expect("seq covers the current depth");
            remaining[v as usize] += 1;
            if (cursors[depth] as usize) < n {
                break;
            }
        }
    }

    TaskResult { best, nodes, exceeded }
}

/// Extracts a verified witness configuration from a primitive sequence:
/// the bound of the induced periodic strategy is iterated past step
/// `P - 1`, where its total is frozen at the gain, until a state recurs.
/// Any recurring state starts an infinite legal game (the game replays
/// the bound cycle backwards).
pub fn extract_witness(
    g: &DirectedMultigraph,
    sigma: &PrimitiveSequence,
) -> Result<Configuration, SearchError> {
    if g.vertex_count() == 1 {
        return Err(SearchError::VerificationFailed(
            "a single vertex admits no infinite game".into(),
        ));
    }
    let p = sigma.len();
    let gain = gain_of_good(g, sigma);
    const HORIZON: usize = 10_000_000;

    let mut seen: HashMap<Configuration, usize> = HashMap::new();
    let mut state = Configuration::zero(g.vertex_count());
    for step in 0..HORIZON {
        if step >= p - 1 {
            if seen.contains_key(&state) {
                if state.total() != gain {
                    return Err(SearchError::VerificationFailed(format!(
                        "witness total {} differs from gain {gain}",
                        state.total()
                    )));
                }
                if !classify(g, &state).is_infinite() {
                    return Err(SearchError::VerificationFailed(format!(
                        "extracted configuration {state:?} stabilizes"
                    )));
                }
                return Ok(state);
            }
            seen.insert(state.clone(), step);
        }
        state = bound_step(g, &state, sigma.vertices()[step % p]);
    }
    Err(SearchError::VerificationFailed(
        "bound state did not recur within the horizon".into(),
    ))
}

/// The feedback number: the minimum number of edges (with multiplicity)
/// whose removal leaves the graph acyclic. Exact, as `M` minus the
/// maximum number of order-consistent edges over all vertex orderings;
/// the maximum is taken by dynamic programming over vertex subsets rather
/// than by listing the orderings. Intended for cross-checks at small `N`.
pub fn feedback_number(g: &DirectedMultigraph) -> u64 {
    let n = g.vertex_count();
    assert!(n <= 24, "feedback_number is exponential in the vertex count");
    // dp[s] = max edges kept inside the placed set s, edges pointing from
    // earlier to later placements. Adding v after the set s keeps all
    // edges from s into v.
    let mut dp = vec![0u64; 1 << n];
    for s in 1usize..(1 << n) {
        let mut best = 0;
        for v in 0..n {
            if s & (1 << v) == 0 {
                continue;
            }
            let prev = s & !(1 << v);
            let into_v: u64 = (0..n)
                .filter(|&u| prev & (1 << u) != 0)
                .map(|u| g.multiplicity(VertexId(u as u32), VertexId(v as u32)))
                .sum();
            best = best.max(dp[prev] + into_v);
        }
        dp[s] = best;
    }
    g.total_edges() - dp[(1 << n) - 1]
}

/// The oracle route packaged like the other methods: brute-force minimum
/// plus the lexicographically smallest witness, re-validated.
pub fn instability_by_oracle(
    g: &DirectedMultigraph,
    cap: Option<u64>,
) -> Result<InstabilityResult, SearchError> {
    let start = Instant::now();
    let (c, witness) = crate::game::oracle_minimum(g, cap)?;
    if let Some(w) = &witness {
        if !classify(g, w).is_infinite() {
            return Err(SearchError::VerificationFailed(format!(
                "oracle witness {w:?} stabilizes"
            )));
        }
    }
    // One node per configuration classified: all compositions of 1..=c.
    let n = g.vertex_count() as u64;
    let nodes: u64 = (1..=c).map(|t| binomial(t + n - 1, n - 1)).sum();
    Ok(InstabilityResult {
        c,
        method: Method::Oracle,
        optimal_sequence: None,
        witness,
        stats: SearchStats { nodes, elapsed: start.elapsed() },
    })
}

fn binomial(n: u64, k: u64) -> u64 {
    let k = k.min(n - k);
    let mut result: u128 = 1;
    for i in 1..=k as u128 {
        result = result * (n as u128 - k as u128 + i) / i;
    }
    result.try_into().unwrap_or(u64::MAX)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::instability_oracle;
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

    fn indices(seqs: Vec<Vec<VertexId>>) -> Vec<Vec<u32>> {
        seqs.into_iter().map(|s| s.into_iter().map(|v| v.0).collect()).collect()
    }

    #[test]
    fn enumeration_is_lexicographic_and_complete() {
        assert_eq!(indices(enumerate_primitive_sequences(&[1, 1]).collect()), [
            vec![0, 1],
            vec![1, 0]
        ]);
        assert_eq!(indices(enumerate_primitive_sequences(&[1, 2]).collect()), [
            vec![0, 1, 1],
            vec![1, 0, 1],
            vec![1, 1, 0]
        ]);
        assert_eq!(enumerate_primitive_sequences(&[1, 1, 1]).count(), 6);
    }

    #[test]
    fn sequence_counts() {
        assert_eq!(sequence_count(&[1, 1]), Some(2));
        assert_eq!(sequence_count(&[1, 2]), Some(3));
        assert_eq!(sequence_count(&[1, 1, 1]), Some(6));
        assert_eq!(sequence_count(&[3, 3, 3, 3]), Some(369_600));
        assert_eq!(sequence_count(&[40, 40]), None); // C(80, 40) > u64::MAX
    }

    #[test]
    fn enumeration_count_matches_formula() {
        for v_g in [vec![2, 2], vec![1, 2, 3], vec![2, 1, 1]] {
            let listed = enumerate_primitive_sequences(&v_g).count() as u64;
            assert_eq!(Some(listed), sequence_count(&v_g));
        }
    }

    #[test]
    fn strategies_micro_instances() {
        for (g, expected) in [(g2(), 2), (c3(), 1), (d2(), 1)] {
            let r = instability_by_strategies(&g, &SearchLimits::default()).unwrap();
            assert_eq!(r.c, expected);
            assert_eq!(instability_oracle(&g, None).unwrap(), expected);
            let sigma = r.optimal_sequence.unwrap();
            assert_eq!(gain_of_good(&g, &sigma), r.c);
            let witness = r.witness.unwrap();
            assert_eq!(witness.total(), r.c);
            assert!(classify(&g, &witness).is_infinite());
        }
    }

    #[test]
    fn strategies_reports_lexicographically_smallest_argmin() {
        // All three primitive sequences of G2 evaluate to 2, so the
        // canonical one must be reported.
        let r = instability_by_strategies(&g2(), &SearchLimits::default()).unwrap();
        let seq: Vec<u32> = r.optimal_sequence.unwrap().vertices().iter().map(|v| v.0).collect();
        assert_eq!(seq, vec![0, 1, 1]);
        // On C3 the minimum 1 is attained by (a,c,b) first.
        let r = instability_by_strategies(&c3(), &SearchLimits::default()).unwrap();
        let seq: Vec<u32> = r.optimal_sequence.unwrap().vertices().iter().map(|v| v.0).collect();
        assert_eq!(seq, vec![0, 2, 1]);
    }

    #[test]
    fn pruned_search_matches_plain_enumeration() {
        // Random period vectors are often huge; keep to instances where
        // plain enumeration is feasible.
        let mut checked = 0;
        for seed in 0.. {
            let g = crate::multigraph::random_strongly_connected(4, 2, 0.4, seed);
            let period = primitive_period_vector(&g).unwrap();
            if !sequence_count(&period.v_g).is_some_and(|c| c <= 10_000) {
                continue;
            }
            let brute = enumerate_primitive_sequences(&period.v_g)
                .map(|seq| gain_of_good(&g, &PrimitiveSequence::from_validated(seq)))
                .min()
                .unwrap();
            let searched = instability_by_strategies(&g, &SearchLimits::default()).unwrap();
            assert_eq!(searched.c, brute, "seed {seed}");
            checked += 1;
            if checked == 10 {
                break;
            }
        }
    }

    #[test]
    fn strategies_single_vertex_convention() {
        let g = DirectedMultigraph::build(&["a"], &[]).unwrap();
        let r = instability_by_strategies(&g, &SearchLimits::default()).unwrap();
        assert_eq!(r.c, 0);
        assert!(r.witness.is_none());
    }

    #[test]
    fn strategies_limit_exceeded() {
        let limits = SearchLimits { max_sequences: 1, node_budget: 2 };
        assert!(matches!(
            instability_by_strategies(&c3(), &limits),
            Err(SearchError::LimitExceeded(_))
        ));
    }

    #[test]
    fn witness_extraction_micro_instances() {
        for (g, seq, total) in [
            (g2(), vec![0u32, 1, 1], 2),
            (d2(), vec![0, 1], 1),
            (c3(), vec![0, 2, 1], 1),
        ] {
            let period = primitive_period_vector(&g).unwrap();
            let sigma =
                PrimitiveSequence::new(seq.into_iter().map(VertexId).collect(), &period).unwrap();
            let witness = extract_witness(&g, &sigma).unwrap();
            assert_eq!(witness.total(), total);
            assert!(classify(&g, &witness).is_infinite());
        }
    }

    #[test]
    fn feedback_numbers() {
        assert_eq!(feedback_number(&c3()), 1);
        assert_eq!(feedback_number(&g2()), 1);
        assert_eq!(feedback_number(&d2()), 1);
        let acyclic = DirectedMultigraph::build(&[], &[("a", "b", 3)]).unwrap();
        assert_eq!(feedback_number(&acyclic), 0);
    }

    #[test]
    fn oracle_method_packaging() {
        let r = instability_by_oracle(&g2(), None).unwrap();
        assert_eq!(r.c, 2);
        assert_eq!(r.witness.unwrap().total(), 2);
        // Totals 1 and 2 on two vertices: 2 + 3 compositions.
        assert_eq!(r.stats.nodes, 5);
    }
}
