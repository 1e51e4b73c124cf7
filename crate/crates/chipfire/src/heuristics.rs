//! Upper-bound sequence builders. Each heuristic emits a primitive
//! sequence; its gain is a certified upper bound on the instability
//! minimum because every primitive sequence's gain is one.

use std::fmt;

use crate::bounds::{bound_step, delta_total, gain_of_good, PrimitiveSequence};
use crate::game::Configuration;
use crate::multigraph::{DirectedMultigraph, VertexId};
use crate::period::PeriodData;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Heuristic {
    Greedy,
    Sort,
    PageRank,
}

impl fmt::Display for Heuristic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Heuristic::Greedy => "greedy",
            Heuristic::Sort => "sort",
            Heuristic::PageRank => "pagerank",
        })
    }
}

/// A heuristic's output: the sequence, its gain (an upper bound on the
/// instability minimum) and the bound after each improvement pass.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HeuristicReport {
    pub sequence: PrimitiveSequence,
    pub bound: u64,
    pub heuristic: Heuristic,
    pub trace: Vec<(u32, u64)>,
}

/// The gain of a primitive sequence; an upper bound on the instability
/// minimum.
pub fn evaluate(g: &DirectedMultigraph, sigma: &PrimitiveSequence) -> u64 {
    gain_of_good(g, sigma)
}

/// Builds a sequence position by position, picking the vertex that
/// creates the fewest chips in the bound; ties prefer the vertex whose
/// firing absorbs the most chips from the current state, then the lowest
/// index. Deterministic.
pub fn greedy_sequence(g: &DirectedMultigraph, period: &PeriodData) -> HeuristicReport {
    let p = period.period_len();
    let mut remaining = period.v_g.clone();
    let mut state = Configuration::zero(g.vertex_count());
    let mut seq = Vec::with_capacity(p);
    for _ in 0..p {
        let pick = g
            .vertices()
            .filter(|v| remaining[v.index()] > 0)
            .min_by_key(|&v| {
                let created = delta_total(g, &state, v);
                let absorbed: u64 = g
                    .vertices()
                    .map(|w| state.get(w).min(g.multiplicity(v, w)))
                    .sum();
                (created, std::cmp::Reverse(absorbed), v)
            })
            .expect("multiplicities left while positions remain");
        remaining[pick.index()] -= 1;
        state = bound_step(g, &state, pick);
        seq.push(pick);
    }
    let sequence =
        PrimitiveSequence::new(seq, period).expect("greedy respects the multiplicities");
    let bound = evaluate(g, &sequence);
    HeuristicReport { sequence, bound, heuristic: Heuristic::Greedy, trace: vec![(0, bound)] }
}

/// Insertion-sort improvement: repeated passes over the positions, each
/// removing the element there and reinserting it wherever the gain gets
/// strictly best (ties keep the leftmost insertion point), until a pass
/// changes nothing or `max_passes` is reached. The output gain never exceeds
/// the input gain.
pub fn sort_improve(
    g: &DirectedMultigraph,
    sigma0: &PrimitiveSequence,
    max_passes: u32,
) -> HeuristicReport {
    let period = period_of(g, sigma0);
    let mut current: Vec<VertexId> = sigma0.vertices().to_vec();
    let mut gain = evaluate(g, sigma0);
    let mut trace = vec![(0, gain)];
    let p = current.len();
    for pass in 1..=max_passes {
        let mut improved = false;
        for pos in 0..p {
            let element = current.remove(pos);
            let mut best: Option<(u64, usize)> = None;
            for ins in 0..p {
                current.insert(ins, element);
                let candidate = evaluate(
                    g,
                    &PrimitiveSequence::new(current.clone(), &period)
                        .expect("reinsertion preserves multiplicities"),
                );
                current.remove(ins);
                if best.is_none_or(|(b, _)| candidate < b) {
                    best = Some((candidate, ins));
                }
            }
            let (best_gain, best_ins) = best.expect("p >= 1");
            if best_gain < gain {
                current.insert(best_ins, element);
                gain = best_gain;
                improved = true;
            } else {
                current.insert(pos, element);
            }
        }
        trace.push((pass, gain));
        if !improved {
            break;
        }
    }
    let sequence =
        PrimitiveSequence::new(current, &period).expect("passes preserve multiplicities");
    HeuristicReport { sequence, bound: gain, heuristic: Heuristic::Sort, trace }
}

fn period_of(g: &DirectedMultigraph, sigma: &PrimitiveSequence) -> PeriodData {
    let mut v_g = vec![0u64; g.vertex_count()];
    for &v in sigma.vertices() {
        v_g[v.index()] += 1;
    }
    let p = sigma.len() as u64;
    PeriodData { v_g, p }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PageRankParams {
    pub damping: f64,
    pub tol: f64,
    pub max_iter: u32,
}

impl Default for PageRankParams {
    fn default() -> Self {
        PageRankParams { damping: 0.85, tol: 1e-10, max_iter: 100 }
    }
}

/// PageRank-guided builder. Runs PageRank on the line graph of the
/// distinct arcs (arc `(u,v)` feeds every arc `(v,w)`), accumulating the
/// scores per arc across rounds. Each round the arc with the highest
/// accumulated score is selected (ties lexicographic), its accumulator is
/// reset, and after `v_G(tail)` selections the arc leaves the line graph.
/// Selection stops once the selected tails cover the period multiplicities
/// or no arc is left. The sequence reads the selected tails in reverse
/// selection order (skipping exhausted vertices), pads with the leftover
/// multiplicities in index order, and takes one sort pass.
pub fn pagerank_sequence(
    g: &DirectedMultigraph,
    period: &PeriodData,
    params: &PageRankParams,
) -> HeuristicReport {
    let arcs: Vec<(VertexId, VertexId)> = g.arcs().map(|(u, v, _)| (u, v)).collect();
    let n_arcs = arcs.len();
    let mut eligible = vec![true; n_arcs];
    let mut times_selected = vec![0u64; n_arcs];
    let mut acc = vec![0f64; n_arcs];
    let mut tail_selections = vec![0u64; g.vertex_count()];
    let mut selections: Vec<usize> = Vec::new();

    let covered = |tails: &[u64]| -> bool {
        tails
            .iter()
            .zip(&period.v_g)
            .map(|(&t, &m)| t.min(m))
            .sum::<u64>()
            == period.p
    };

    while !covered(&tail_selections) && eligible.iter().any(|&e| e) {
        let scores = line_graph_pagerank(&arcs, &eligible, params);
        for a in 0..n_arcs {
            if eligible[a] {
                acc[a] += scores[a];
            }
        }
        let pick = (0..n_arcs)
            .filter(|&a| eligible[a])
            .max_by(|&a, &b| {
                acc[a].partial_cmp(&acc[b]).expect("scores are finite").then(
                    // Lexicographically smaller arc wins ties.
                    arcs[b].cmp(&arcs[a]),
                )
            })
            .expect("some arc is eligible");
        selections.push(pick);
        acc[pick] = 0.0;
        times_selected[pick] += 1;
        tail_selections[arcs[pick].0.index()] += 1;
        if times_selected[pick] == period.v_g[arcs[pick].0.index()] {
            eligible[pick] = false;
        }
    }

    let mut remaining = period.v_g.clone();
    let mut seq: Vec<VertexId> = Vec::with_capacity(period.period_len());
    for &a in selections.iter().rev() {
        let tail = arcs[a].0;
        if remaining[tail.index()] > 0 {
            remaining[tail.index()] -= 1;
            seq.push(tail);
        }
    }
    for v in g.vertices() {
        for _ in 0..remaining[v.index()] {
            seq.push(v);
        }
    }
    let raw =
        PrimitiveSequence::new(seq, period).expect("selection walk respects multiplicities");
    let raw_bound = evaluate(g, &raw);
    let polished = sort_improve(g, &raw, 1);
    HeuristicReport {
        sequence: polished.sequence,
        bound: polished.bound,
        heuristic: Heuristic::PageRank,
        trace: vec![(0, raw_bound), (1, polished.bound)],
    }
}

/// Power iteration with uniform teleport over the sub-line-graph induced
/// by the eligible arcs. Dangling mass is redistributed uniformly.
/// Ineligible arcs score zero.
fn line_graph_pagerank(
    arcs: &[(VertexId, VertexId)],
    eligible: &[bool],
    params: &PageRankParams,
) -> Vec<f64> {
    let nodes: Vec<usize> = (0..arcs.len()).filter(|&a| eligible[a]).collect();
    let n = nodes.len();
    let mut scores = vec![0f64; arcs.len()];
    if n == 0 {
        return scores;
    }
    let successors: Vec<Vec<usize>> = nodes
        .iter()
        .map(|&a| {
            let head = arcs[a].1;
            (0..n).filter(|&bi| arcs[nodes[bi]].0 == head).collect()
        })
        .collect();

    let uniform = 1.0 / n as f64;
    let mut pr = vec![uniform; n];
    let mut next = vec![0f64; n];
    for _ in 0..params.max_iter {
        let dangling: f64 =
            (0..n).filter(|&i| successors[i].is_empty()).map(|i| pr[i]).sum();
        let base = (1.0 - params.damping) * uniform + params.damping * dangling * uniform;
        next.fill(base);
        for i in 0..n {
            if !successors[i].is_empty() {
                let share = params.damping * pr[i] / successors[i].len() as f64;
                for &j in &successors[i] {
                    next[j] += share;
                }
            }
        }
        let delta: f64 = pr.iter().zip(&next).map(|(a, b)| (a - b).abs()).sum();
        std::mem::swap(&mut pr, &mut next);
        if delta < params.tol {
            break;
        }
    }
    for (i, &a) in nodes.iter().enumerate() {
        scores[a] = pr[i];
    }
    scores
}
