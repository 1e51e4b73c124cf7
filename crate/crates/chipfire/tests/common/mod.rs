//! Shared corpora for the integration suites.

use chipfire::multigraph::{random_strongly_connected, DirectedMultigraph};
use chipfire::period::{primitive_period_vector, PeriodData};

pub fn g2() -> DirectedMultigraph {
    DirectedMultigraph::build(&[], &[("a", "b", 2), ("b", "a", 1)]).unwrap()
}

pub fn c3() -> DirectedMultigraph {
    DirectedMultigraph::build(&[], &[("a", "b", 1), ("b", "c", 1), ("c", "a", 1)]).unwrap()
}

pub fn d2() -> DirectedMultigraph {
    DirectedMultigraph::build(&[], &[("a", "b", 1), ("b", "a", 1)]).unwrap()
}

/// Every strongly connected loop-free multigraph with at most 3 vertices
/// and multiplicities at most 2; the single-vertex graph included.
pub fn exhaustive_corpus() -> Vec<DirectedMultigraph> {
    let mut out = vec![DirectedMultigraph::build::<&str>(&["a"], &[]).unwrap()];
    for e01 in 1..=2u64 {
        for e10 in 1..=2u64 {
            out.push(DirectedMultigraph::from_matrix(vec![vec![0, e01], vec![e10, 0]]).unwrap());
        }
    }
    let mut entries = [0u64; 6];
    loop {
        let [e01, e02, e10, e12, e20, e21] = entries;
        let g = DirectedMultigraph::from_matrix(vec![
            vec![0, e01, e02],
            vec![e10, 0, e12],
            vec![e20, e21, 0],
        ])
        .unwrap();
        if g.is_strongly_connected() {
            out.push(g);
        }
        // Odometer over the six off-diagonal entries.
        let mut pos = 0;
        loop {
            if pos == 6 {
                return out;
            }
            entries[pos] += 1;
            if entries[pos] <= 2 {
                break;
            }
            entries[pos] = 0;
            pos += 1;
        }
    }
}

/// 200 seeded random graphs with four vertices, multiplicities at most 2
/// and period length at most 12 (random period vectors are frequently
/// enormous; the filter keeps exhaustive cross-validation feasible).
pub fn random_corpus() -> Vec<(DirectedMultigraph, PeriodData)> {
    let densities = [0.15, 0.35, 0.55];
    let mut out = Vec::with_capacity(200);
    for seed in 0u64.. {
        let g = random_strongly_connected(4, 2, densities[(seed % 3) as usize], seed);
        let pd = primitive_period_vector(&g).expect("generator output is strongly connected");
        if pd.p <= 12 {
            out.push((g, pd));
            if out.len() == 200 {
                return out;
            }
        }
    }
    unreachable!()
}
