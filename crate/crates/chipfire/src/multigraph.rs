//! Directed loop-free multigraphs: construction, structural predicates,
//! degrees, the Laplacian, and a seeded random generator for test corpora.

use std::collections::VecDeque;
use std::fmt;

use num_bigint::BigInt;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// Index of a vertex in a graph's ordering. Indices are dense and stable
/// for the life of the graph; display names live in the graph's name table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VertexId(pub u32);

impl VertexId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for VertexId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "v{}", self.0)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("loop edge {0} -> {0} is not allowed")]
    LoopEdge(String),
    #[error("bad vertex name {0:?}: names must be non-empty, contain no whitespace and not start with '#'")]
    BadName(String),
    #[error("edge {src} -> {dst} has non-positive multiplicity {mult}")]
    NegativeMultiplicity { src: String, dst: String, mult: i64 },
}

/// A directed loop-free multigraph over vertices `v_0, ..., v_{N-1}`.
///
/// Edge multiplicities are kept in a dense `N x N` matrix: `E[i][j]` is the
/// number of edges `v_i -> v_j`. The diagonal is zero. Vertex ordering is
/// the insertion order of names; all indices elsewhere in the crate refer
/// to this ordering. Graphs are immutable after construction and safe to
/// share across threads.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DirectedMultigraph {
    names: Vec<String>,
    mult: Vec<u64>, // row-major N x N
    out_deg: Vec<u64>,
    in_deg: Vec<u64>,
}

fn valid_name(name: &str) -> bool {
    !name.is_empty() && !name.contains(char::is_whitespace) && !name.starts_with('#')
}

impl DirectedMultigraph {
    /// Builds a graph from declared vertex names and `(src, dst, mult)`
    /// edge lines. The vertex set is the union of declared names and edge
    /// endpoints, in order of first appearance; duplicate `(src, dst)`
    /// lines accumulate their multiplicities.
    pub fn build<S: AsRef<str>>(
        names: &[S],
        edges: &[(S, S, u64)],
    ) -> Result<Self, GraphError> {
        let mut table: Vec<String> = Vec::new();
        let intern = |name: &str, table: &mut Vec<String>| -> Result<usize, GraphError> {
            if !valid_name(name) {
                return Err(GraphError::BadName(name.to_string()));
            }
            match table.iter().position(|n| n == name) {
                Some(i) => Ok(i),
                None => {
                    table.push(name.to_string());
                    Ok(table.len() - 1)
                }
            }
        };

        for name in names {
            intern(name.as_ref(), &mut table)?;
        }
        let mut list = Vec::with_capacity(edges.len());
        for (src, dst, mult) in edges {
            let (src, dst) = (src.as_ref(), dst.as_ref());
            if *mult == 0 {
                return Err(GraphError::NegativeMultiplicity {
                    src: src.to_string(),
                    dst: dst.to_string(),
                    mult: 0,
                });
            }
            let s = intern(src, &mut table)?;
            let d = intern(dst, &mut table)?;
            if s == d {
                return Err(GraphError::LoopEdge(src.to_string()));
            }
            list.push((s, d, *mult));
        }

        let n = table.len();
        let mut mult = vec![0u64; n * n];
        for (s, d, m) in list {
            mult[s * n + d] += m;
        }
        Ok(Self::from_parts(table, mult))
    }

    fn from_parts(names: Vec<String>, mult: Vec<u64>) -> Self {
        let n = names.len();
        debug_assert_eq!(mult.len(), n * n);
        let out_deg = (0..n).map(|i| mult[i * n..(i + 1) * n].iter().sum()).collect();
        let in_deg = (0..n).map(|j| (0..n).map(|i| mult[i * n + j]).sum()).collect();
        DirectedMultigraph { names, mult, out_deg, in_deg }
    }

    /// Builds a graph directly from a multiplicity matrix (row `i`, column
    /// `j` = edges `v_i -> v_j`); vertices are named `v0, v1, ...`.
    /// Diagonal entries must be zero.
    pub fn from_matrix(mult: Vec<Vec<u64>>) -> Result<Self, GraphError> {
        let n = mult.len();
        let names: Vec<String> = (0..n).map(|i| format!("v{i}")).collect();
        let mut flat = vec![0u64; n * n];
        for (i, row) in mult.iter().enumerate() {
            assert_eq!(row.len(), n, "multiplicity matrix must be square");
            for (j, &m) in row.iter().enumerate() {
                if i == j && m != 0 {
                    return Err(GraphError::LoopEdge(names[i].clone()));
                }
                flat[i * n + j] = m;
            }
        }
        Ok(Self::from_parts(names, flat))
    }

    pub fn vertex_count(&self) -> usize {
        self.names.len()
    }

    pub fn vertices(&self) -> impl Iterator<Item = VertexId> + '_ {
        (0..self.names.len() as u32).map(VertexId)
    }

    pub fn name(&self, v: VertexId) -> &str {
        &self.names[v.index()]
    }

    pub fn vertex_by_name(&self, name: &str) -> Option<VertexId> {
        self.names.iter().position(|n| n == name).map(|i| VertexId(i as u32))
    }

    /// `E(u, v)`: the number of edges `u -> v`.
    pub fn multiplicity(&self, u: VertexId, v: VertexId) -> u64 {
        self.mult[u.index() * self.vertex_count() + v.index()]
    }

    /// `d^+(v)`: the number of outgoing edges counted with multiplicity.
    pub fn out_degree(&self, v: VertexId) -> u64 {
        self.out_deg[v.index()]
    }

    /// `d^-(v)`: the number of incoming edges counted with multiplicity.
    pub fn in_degree(&self, v: VertexId) -> u64 {
        self.in_deg[v.index()]
    }

    /// `M`: the total number of edges counted with multiplicity.
    pub fn total_edges(&self) -> u64 {
        self.out_deg.iter().sum()
    }

    /// Distinct arcs `(u, v, E(u, v))` with multiplicity at least one, in
    /// row-major order.
    pub fn arcs(&self) -> impl Iterator<Item = (VertexId, VertexId, u64)> + '_ {
        let n = self.vertex_count();
        (0..n).flat_map(move |i| {
            (0..n).filter_map(move |j| {
                let m = self.mult[i * n + j];
                (m > 0).then_some((VertexId(i as u32), VertexId(j as u32), m))
            })
        })
    }

    /// True iff every ordered pair of distinct vertices is joined by a
    /// directed path. A single vertex is strongly connected (the
    /// quantifier is vacuous).
    pub fn is_strongly_connected(&self) -> bool {
        let n = self.vertex_count();
        if n <= 1 {
            return true;
        }
        self.reaches_all(false) && self.reaches_all(true)
    }

    fn reaches_all(&self, reversed: bool) -> bool {
        let n = self.vertex_count();
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        let mut count = 1;
        while let Some(u) = queue.pop_front() {
            for (w, seen_w) in seen.iter_mut().enumerate() {
                let m = if reversed { self.mult[w * n + u] } else { self.mult[u * n + w] };
                if m > 0 && !std::mem::replace(seen_w, true) {
                    count += 1;
                    queue.push_back(w);
                }
            }
        }
        count == n
    }

    /// True iff `d^+(v) = d^-(v)` for every vertex.
    pub fn is_eulerian(&self) -> bool {
        self.out_deg == self.in_deg
    }

    /// The Laplacian matrix: `L[i][i] = d^+(v_i)` and `L[i][j] = -E(v_j, v_i)`
    /// for `i != j`. Every column sums to zero.
    pub fn laplacian(&self) -> IntMatrix {
        let n = self.vertex_count();
        let mut entries = vec![BigInt::ZERO; n * n];
        for i in 0..n {
            for j in 0..n {
                entries[i * n + j] = if i == j {
                    BigInt::from(self.out_deg[i])
                } else {
                    -BigInt::from(self.mult[j * n + i])
                };
            }
        }
        IntMatrix { n, entries }
    }
}

/// A square matrix of arbitrary-precision signed integers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntMatrix {
    n: usize,
    entries: Vec<BigInt>,
}

impl IntMatrix {
    pub fn size(&self) -> usize {
        self.n
    }

    pub fn get(&self, row: usize, col: usize) -> &BigInt {
        &self.entries[row * self.n + col]
    }

    pub fn column_sum(&self, col: usize) -> BigInt {
        (0..self.n).map(|row| self.get(row, col)).sum()
    }

    /// Matrix-vector product over exact integers.
    pub fn mul_vec(&self, u: &[BigInt]) -> Vec<BigInt> {
        assert_eq!(u.len(), self.n);
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.get(i, j) * &u[j]).sum())
            .collect()
    }
}

/// Generates a random strongly connected loop-free multigraph on `n >= 2`
/// vertices, deterministically for a fixed seed: a random directed
/// Hamiltonian cycle first (guaranteeing strong connectivity), then each
/// remaining ordered pair gets an extra arc with probability `density`.
/// Multiplicities are uniform in `1..=max_mult`.
pub fn random_strongly_connected(
    n: usize,
    max_mult: u64,
    density: f64,
    seed: u64,
) -> DirectedMultigraph {
    assert!(n >= 2, "need at least two vertices");
    assert!(max_mult >= 1, "need max_mult >= 1");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);

    let mut mult = vec![0u64; n * n];
    for k in 0..n {
        let (u, v) = (order[k], order[(k + 1) % n]);
        mult[u * n + v] = rng.random_range(1..=max_mult);
    }
    for u in 0..n {
        for v in 0..n {
            if u != v && mult[u * n + v] == 0 && rng.random::<f64>() < density {
                mult[u * n + v] = rng.random_range(1..=max_mult);
            }
        }
    }

    let names = (0..n).map(|i| format!("v{i}")).collect();
    DirectedMultigraph::from_parts(names, mult)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g2() -> DirectedMultigraph {
        DirectedMultigraph::build(&[], &[("a", "b", 2), ("b", "a", 1)]).unwrap()
    }

    fn c3() -> DirectedMultigraph {
        DirectedMultigraph::build(&[], &[("a", "b", 1), ("b", "c", 1), ("c", "a", 1)]).unwrap()
    }

    #[test]
    fn build_g2() {
        let g = g2();
        assert_eq!(g.vertex_count(), 2);
        assert_eq!(g.total_edges(), 3);
        assert_eq!(g.name(VertexId(0)), "a");
        assert_eq!(g.vertex_by_name("b"), Some(VertexId(1)));
    }

    #[test]
    fn build_accumulates_duplicates() {
        let g = DirectedMultigraph::build(&[], &[("a", "b", 1), ("a", "b", 2)]).unwrap();
        assert_eq!(g.multiplicity(VertexId(0), VertexId(1)), 3);
    }

    #[test]
    fn build_rejects_loop() {
        let err = DirectedMultigraph::build(&[], &[("a", "a", 1)]).unwrap_err();
        assert_eq!(err, GraphError::LoopEdge("a".into()));
    }

    #[test]
    fn build_rejects_bad_name() {
        assert!(matches!(
            DirectedMultigraph::build(&[], &[("a b", "c", 1)]),
            Err(GraphError::BadName(_))
        ));
        assert!(matches!(
            DirectedMultigraph::build(&[""], &[]),
            Err(GraphError::BadName(_))
        ));
    }

    #[test]
    fn build_rejects_zero_multiplicity() {
        assert!(matches!(
            DirectedMultigraph::build(&[], &[("a", "b", 0)]),
            Err(GraphError::NegativeMultiplicity { .. })
        ));
    }

    #[test]
    fn declared_vertices_join_endpoints() {
        let g = DirectedMultigraph::build(&["x"], &[("a", "b", 1)]).unwrap();
        assert_eq!(g.vertex_count(), 3);
        assert_eq!(g.name(VertexId(0)), "x");
    }

    #[test]
    fn degrees() {
        let g = g2();
        let (a, b) = (VertexId(0), VertexId(1));
        assert_eq!(g.out_degree(a), 2);
        assert_eq!(g.in_degree(a), 1);
        assert_eq!(g.out_degree(b), 1);
        assert_eq!(g.in_degree(b), 2);
        for v in c3().vertices() {
            assert_eq!(c3().out_degree(v), 1);
            assert_eq!(c3().in_degree(v), 1);
        }
    }

    #[test]
    fn strong_connectivity() {
        assert!(g2().is_strongly_connected());
        assert!(c3().is_strongly_connected());
        let one_way = DirectedMultigraph::build(&[], &[("a", "b", 1)]).unwrap();
        assert!(!one_way.is_strongly_connected());
        let single = DirectedMultigraph::build(&["a"], &[]).unwrap();
        assert!(single.is_strongly_connected());
    }

    #[test]
    fn eulerian() {
        assert!(c3().is_eulerian());
        assert!(!g2().is_eulerian());
        let d2 = DirectedMultigraph::build(&[], &[("a", "b", 1), ("b", "a", 1)]).unwrap();
        assert!(d2.is_eulerian());
    }

    #[test]
    fn laplacian_g2() {
        let l = g2().laplacian();
        let expect = [[2, -1], [-2, 1]];
        for (i, row) in expect.iter().enumerate() {
            for (j, &e) in row.iter().enumerate() {
                assert_eq!(*l.get(i, j), BigInt::from(e));
            }
        }
        assert_eq!(l.column_sum(0), BigInt::ZERO);
        assert_eq!(l.column_sum(1), BigInt::ZERO);
    }

    #[test]
    fn laplacian_c3_circulant() {
        let l = c3().laplacian();
        for i in 0..3 {
            for j in 0..3 {
                let expect = if i == j {
                    1
                } else if (j + 1) % 3 == i {
                    // edge v_j -> v_i exists exactly when i = j+1 cyclically
                    -1
                } else {
                    0
                };
                assert_eq!(*l.get(i, j), BigInt::from(expect));
            }
        }
    }

    #[test]
    fn laplacian_single_vertex() {
        let g = DirectedMultigraph::build(&["a"], &[]).unwrap();
        let l = g.laplacian();
        assert_eq!(l.size(), 1);
        assert_eq!(*l.get(0, 0), BigInt::ZERO);
    }

    #[test]
    fn random_two_cycle_backbone() {
        let g = random_strongly_connected(2, 1, 0.0, 11);
        assert_eq!(g.total_edges(), 2);
        assert_eq!(g.multiplicity(VertexId(0), VertexId(1)), 1);
        assert_eq!(g.multiplicity(VertexId(1), VertexId(0)), 1);
    }

    #[test]
    fn random_is_deterministic() {
        let a = random_strongly_connected(5, 3, 0.4, 99);
        let b = random_strongly_connected(5, 3, 0.4, 99);
        assert_eq!(a, b);
    }

    #[test]
    fn random_is_valid() {
        for seed in 0..20 {
            let g = random_strongly_connected(4, 2, 0.5, seed);
            assert!(g.is_strongly_connected(), "seed {seed}");
            for v in g.vertices() {
                assert_eq!(g.multiplicity(v, v), 0);
            }
            let m: u64 = g.vertices().map(|v| g.out_degree(v)).sum();
            assert_eq!(m, g.total_edges());
            let m_in: u64 = g.vertices().map(|v| g.in_degree(v)).sum();
            assert_eq!(m_in, m);
        }
    }
}
