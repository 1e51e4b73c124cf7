//! The primitive extension and the instability minimum as a primitive
//! feedback number.
//!
//! The extension has `v_G(i)` copies of each vertex `v_i` and inherits
//! edge multiplicities through the projection `xi` back to the base
//! graph. The instability minimum equals `sum d^+(v_i) v_G(i) - a`,
//! where `a` is the largest number of extension edges that fit into an
//! acyclic subgraph respecting two degree caps: per source and base
//! class at most `E(xi(src), class)`, and per copy an in-degree of at
//! most `d^+(xi(copy))`.

use std::time::Instant;

use crate::bounds::{gain_of_good, PrimitiveSequence};
use crate::exact::{
    enumerate_primitive_sequences, extract_witness, sequence_count, InstabilityResult, Method,
    SearchError, SearchLimits, SearchStats,
};
use crate::exec;
use crate::multigraph::{DirectedMultigraph, VertexId};
use crate::period::{primitive_period_vector, PeriodData};

/// The primitive extension: `P` copies `v_{i,j}` (base `i`, copy
/// `j in 1..=v_G(i)`) with `E_hat(v_{i,j}, v_{k,l}) = E(v_i, v_k)`.
/// Same-base copies are never adjacent because the base is loop-free.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrimitiveExtension {
    /// Base vertex of each copy (`xi`), grouped by base in index order.
    base: Vec<u32>,
    /// 1-based copy index within the base class.
    copy_of: Vec<u32>,
    period: PeriodData,
}

impl PrimitiveExtension {
    /// `|V_hat| = P`.
    pub fn copy_count(&self) -> usize {
        self.base.len()
    }

    /// The projection `xi` back to the base graph.
    pub fn xi(&self, w: usize) -> VertexId {
        VertexId(self.base[w])
    }

    /// `(base vertex, copy index)` of a copy.
    pub fn copy_label(&self, w: usize) -> (VertexId, u32) {
        (VertexId(self.base[w]), self.copy_of[w])
    }

    /// `E_hat(w1, w2)`, inherited from the base multiplicities.
    pub fn multiplicity(&self, g: &DirectedMultigraph, w1: usize, w2: usize) -> u64 {
        g.multiplicity(self.xi(w1), self.xi(w2))
    }

    pub fn period(&self) -> &PeriodData {
        &self.period
    }
}

pub fn primitive_extension(g: &DirectedMultigraph, period: &PeriodData) -> PrimitiveExtension {
    assert_eq!(period.v_g.len(), g.vertex_count());
    let mut base = Vec::with_capacity(period.period_len());
    let mut copy_of = Vec::with_capacity(period.period_len());
    for (i, &m) in period.v_g.iter().enumerate() {
        for j in 1..=m {
            base.push(i as u32);
            copy_of.push(j as u32);
        }
    }
    PrimitiveExtension { base, copy_of, period: period.clone() }
}

/// The winning acyclic constrained subgraph: `a` kept edges, the ordering
/// of copies realizing it (kept edges run from later to earlier
/// positions) and the kept multiset as `(src copy, dst copy, mult)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConstrainedSubgraphResult {
    pub kept: u64,
    pub ordering: Vec<usize>,
    pub kept_edges: Vec<(usize, usize, u64)>,
}

/// Maximum multiplicity of extension edges keepable backwards along one
/// ordering (edge `w_m -> w_j` needs `m > j`) under the per-source class
/// caps and per-copy in-degree caps. The caps pair sources with sinks, so
/// the instance is an integral transportation problem; it is solved
/// exactly by augmenting-path max-flow. Only the base labels of the
/// ordering matter, so swapping copies of the same vertex never changes
/// the value.
pub fn ordering_max_kept(
    g: &DirectedMultigraph,
    ext: &PrimitiveExtension,
    ordering: &[usize],
) -> u64 {
    assert_eq!(ordering.len(), ext.copy_count());
    let labels: Vec<u32> = ordering.iter().map(|&w| ext.base[w]).collect();
    let mut scratch = FlowScratch::new(g.vertex_count(), ext.copy_count());
    scratch.max_kept(g, &labels)
}

/// Maximizes [`ordering_max_kept`] over the distinct orderings of the
/// copies. Copies of the same base vertex are interchangeable, so the
/// enumeration ranges over primitive sequences of base labels — every
/// acyclic kept subgraph is covered through a topological order. Ties go
/// to the lexicographically smallest label sequence.
pub fn max_constrained_acyclic(
    g: &DirectedMultigraph,
    ext: &PrimitiveExtension,
    limits: &SearchLimits,
) -> Result<ConstrainedSubgraphResult, SearchError> {
    let p = ext.copy_count();
    let count = sequence_count(&ext.period.v_g).unwrap_or(u64::MAX);
    let work = count.saturating_mul((p as u64).saturating_mul(p as u64));
    if count > limits.max_sequences && work > limits.node_budget {
        return Err(SearchError::LimitExceeded(format!(
            "{count} orderings of {p} copies exceed the budget"
        )));
    }

    let n = g.vertex_count();
    let all: Vec<Vec<u32>> = enumerate_primitive_sequences(&ext.period.v_g)
        .map(|seq| seq.into_iter().map(|v| v.0).collect())
        .collect();
    let (kept, labels) = exec::map_reduce_with(
        all,
        256,
        || (FlowScratch::new(n, p), 0u64),
        |(scratch, incumbent), labels| {
            // An ordering whose optimistic bound is strictly below the
            // local incumbent can be neither the maximum nor a tie at the
            // maximum; its placeholder value never survives the merge.
            let value = if scratch.upper_bound(g, &labels) < *incumbent {
                0
            } else {
                let v = scratch.max_kept(g, &labels);
                *incumbent = (*incumbent).max(v);
                v
            };
            (value, labels)
        },
        |a, b| {
            if a.0 > b.0 || (a.0 == b.0 && a.1 <= b.1) {
                a
            } else {
                b
            }
        },
    )
    .expect("at least one ordering");

    // Canonical copy assignment: copies of each base vertex appear in
    // increasing copy index. Re-run the flow once to read the kept edges.
    let class_start: Vec<usize> = ext
        .period
        .v_g
        .iter()
        .scan(0usize, |acc, &m| {
            let start = *acc;
            *acc += m as usize;
            Some(start)
        })
        .collect();
    let mut used = vec![0usize; n];
    let ordering: Vec<usize> = labels
        .iter()
        .map(|&l| {
            let w = class_start[l as usize] + used[l as usize];
            used[l as usize] += 1;
            w
        })
        .collect();

    let mut scratch = FlowScratch::new(n, p);
    let verify = scratch.max_kept(g, &labels);
    debug_assert_eq!(verify, kept);
    let kept_edges = scratch
        .kept_edges(&labels)
        .into_iter()
        .map(|(m, j, mult)| (ordering[m], ordering[j], mult))
        .collect();
    Ok(ConstrainedSubgraphResult { kept, ordering, kept_edges })
}

/// Checks a [`ConstrainedSubgraphResult`] from scratch: kept edges run
/// backwards along the ordering (hence acyclic), stay within the
/// extension multiplicities, and respect both cap families. Returns the
/// first violation as text.
pub fn validate_constrained(
    g: &DirectedMultigraph,
    ext: &PrimitiveExtension,
    result: &ConstrainedSubgraphResult,
) -> Result<(), String> {
    let p = ext.copy_count();
    let mut position = vec![usize::MAX; p];
    for (pos, &w) in result.ordering.iter().enumerate() {
        position[w] = pos;
    }
    if position.contains(&usize::MAX) {
        return Err("ordering is not a permutation of the copies".into());
    }
    let mut total = 0u64;
    let mut in_deg = vec![0u64; p];
    let mut class_out = vec![0u64; p * g.vertex_count()];
    for &(src, dst, mult) in &result.kept_edges {
        if mult == 0 {
            return Err("kept edge with zero multiplicity".into());
        }
        if position[src] <= position[dst] {
            return Err(format!("kept edge {src} -> {dst} does not go backwards"));
        }
        if mult > ext.multiplicity(g, src, dst) {
            return Err(format!("kept edge {src} -> {dst} exceeds extension multiplicity"));
        }
        total += mult;
        in_deg[dst] += mult;
        class_out[src * g.vertex_count() + ext.base[dst] as usize] += mult;
    }
    if total != result.kept {
        return Err(format!("kept count {} differs from edges total {total}", result.kept));
    }
    for w in 0..p {
        if in_deg[w] > g.out_degree(ext.xi(w)) {
            return Err(format!("copy {w} exceeds its in-degree cap"));
        }
        for v in g.vertices() {
            if class_out[w * g.vertex_count() + v.index()] > g.multiplicity(ext.xi(w), v) {
                return Err(format!("copy {w} exceeds its class cap into {}", g.name(v)));
            }
        }
    }
    Ok(())
}

/// The instability minimum as the primitive feedback number
/// `sum d^+(v_i) v_G(i) - a`. The ordering attaining `a` also yields an
/// optimal primitive sequence through `xi`, which is re-validated against
/// the gain and used to extract a witness.
pub fn instability_by_extension(
    g: &DirectedMultigraph,
    limits: &SearchLimits,
) -> Result<InstabilityResult, SearchError> {
    let start = Instant::now();
    let period = primitive_period_vector(g)?;
    let weighted_degree: u64 = g
        .vertices()
        .map(|v| g.out_degree(v) * period.v_g[v.index()])
        .sum();
    if g.vertex_count() == 1 {
        return Ok(InstabilityResult {
            c: 0,
            method: Method::Extension,
            optimal_sequence: Some(PrimitiveSequence::canonical(&period)),
            witness: None,
            stats: SearchStats { nodes: 1, elapsed: start.elapsed() },
        });
    }

    let ext = primitive_extension(g, &period);
    let best = max_constrained_acyclic(g, &ext, limits)?;
    let c = weighted_degree - best.kept;

    let seq: Vec<VertexId> = best.ordering.iter().map(|&w| ext.xi(w)).collect();
    let sigma = PrimitiveSequence::new(seq, &period)
        .map_err(|e| SearchError::VerificationFailed(e.to_string()))?;
    let gain = gain_of_good(g, &sigma);
    if gain != c {
        return Err(SearchError::VerificationFailed(format!(
            "optimal ordering's sequence has gain {gain}, but the feedback formula gives {c}"
        )));
    }
    let witness = extract_witness(g, &sigma)?;
    let nodes = sequence_count(&period.v_g).unwrap_or(u64::MAX);
    Ok(InstabilityResult {
        c,
        method: Method::Extension,
        optimal_sequence: Some(sigma),
        witness: Some(witness),
        stats: SearchStats { nodes, elapsed: start.elapsed() },
    })
}

/// Max-flow workspace reused across orderings. Node layout: 0 source,
/// 1 sink, `2 + j` for position `j`, then one node per (position, base
/// class) pair that has any earlier copy of that class.
struct FlowScratch {
    n: usize,
    p: usize,
    adj: Vec<Vec<u32>>,
    to: Vec<u32>,
    cap: Vec<u64>,
    parent_arc: Vec<u32>,
    queue: Vec<u32>,
}

const NO_ARC: u32 = u32::MAX;

impl FlowScratch {
    fn new(n: usize, p: usize) -> Self {
        let max_nodes = 2 + p + p * n;
        FlowScratch {
            n,
            p,
            adj: vec![Vec::new(); max_nodes],
            to: Vec::new(),
            cap: Vec::new(),
            parent_arc: vec![NO_ARC; max_nodes],
            queue: Vec::with_capacity(max_nodes),
        }
    }

    /// `min(sum of source caps, sum of sink caps)`; never below the true
    /// maximum.
    fn upper_bound(&self, g: &DirectedMultigraph, labels: &[u32]) -> u64 {
        let mut seen_class = vec![false; self.n];
        let mut from_sources = 0u64;
        let mut into_sinks = 0u64;
        for (m, &l) in labels.iter().enumerate() {
            into_sinks += g.out_degree(VertexId(l));
            if m > 0 {
                for (v, &seen) in seen_class.iter().enumerate() {
                    if seen {
                        from_sources += g.multiplicity(VertexId(l), VertexId(v as u32));
                    }
                }
            }
            seen_class[l as usize] = true;
        }
        from_sources.min(into_sinks)
    }

    fn add_arc(&mut self, from: u32, to: u32, cap: u64) -> usize {
        let idx = self.to.len();
        self.to.push(to);
        self.cap.push(cap);
        self.adj[from as usize].push(idx as u32);
        self.to.push(from);
        self.cap.push(0);
        self.adj[to as usize].push(idx as u32 + 1);
        idx
    }

    fn build(&mut self, g: &DirectedMultigraph, labels: &[u32]) {
        for a in &mut self.adj {
            a.clear();
        }
        self.to.clear();
        self.cap.clear();

        let mut class_seen = vec![false; self.n];
        for (j, &l) in labels.iter().enumerate() {
            self.add_arc(2 + j as u32, 1, g.out_degree(VertexId(l)));
            if j > 0 {
                // Source side of position j as an edge origin w_m, m = j.
                for (v, &seen) in class_seen.iter().enumerate() {
                    let cap = g.multiplicity(VertexId(l), VertexId(v as u32));
                    if !seen || cap == 0 {
                        continue;
                    }
                    let class_node = (2 + self.p + j * self.n + v) as u32;
                    self.add_arc(0, class_node, cap);
                    for (earlier, &le) in labels.iter().enumerate().take(j) {
                        if le as usize == v {
                            // Per-pair cap E_hat equals the class cap here;
                            // kept explicit as its own limit.
                            self.add_arc(class_node, 2 + earlier as u32, cap);
                        }
                    }
                }
            }
            class_seen[l as usize] = true;
        }
    }

    fn max_kept(&mut self, g: &DirectedMultigraph, labels: &[u32]) -> u64 {
        self.build(g, labels);
        let mut flow = 0u64;
        loop {
            let pushed = self.augment();
            if pushed == 0 {
                return flow;
            }
            flow += pushed;
        }
    }

    /// One BFS augmentation from source to sink, pushing the bottleneck.
    fn augment(&mut self) -> u64 {
        self.parent_arc.fill(NO_ARC);
        self.queue.clear();
        self.queue.push(0);
        let mut head = 0;
        let mut reached = false;
        'bfs: while head < self.queue.len() {
            let u = self.queue[head];
            head += 1;
            for &arc in &self.adj[u as usize] {
                let v = self.to[arc as usize];
                if self.cap[arc as usize] > 0 && v != 0 && self.parent_arc[v as usize] == NO_ARC {
                    self.parent_arc[v as usize] = arc;
                    if v == 1 {
                        reached = true;
                        break 'bfs;
                    }
                    self.queue.push(v);
                }
            }
        }
        if reached {
            self.push_path()
        } else {
            0
        }
    }

    fn push_path(&mut self) -> u64 {
        let mut bottleneck = u64::MAX;
        let mut v = 1u32;
        while v != 0 {
            let arc = self.parent_arc[v as usize] as usize;
            bottleneck = bottleneck.min(self.cap[arc]);
            v = self.to[arc ^ 1];
        }
        let mut v = 1u32;
        while v != 0 {
            let arc = self.parent_arc[v as usize] as usize;
            self.cap[arc] -= bottleneck;
            self.cap[arc ^ 1] += bottleneck;
            v = self.to[arc ^ 1];
        }
        bottleneck
    }

    /// Kept edges `(src position, dst position, mult)` read from the
    /// residual network after [`max_kept`].
    fn kept_edges(&self, labels: &[u32]) -> Vec<(usize, usize, u64)> {
        let mut kept = Vec::new();
        for m in 0..self.p {
            for v in 0..self.n {
                let class_node = 2 + self.p + m * self.n + v;
                for &arc in &self.adj[class_node] {
                    let arc = arc as usize;
                    // Forward arcs to positions carry flow in their
                    // reverse capacity.
                    if arc.is_multiple_of(2) && self.to[arc] >= 2 && (self.to[arc] as usize) < 2 + self.p {
                        let j = self.to[arc] as usize - 2;
                        let flow = self.cap[arc ^ 1];
                        if flow > 0 {
                            debug_assert_eq!(labels[j] as usize, v);
                            kept.push((m, j, flow));
                        }
                    }
                }
            }
        }
        kept
    }
}
