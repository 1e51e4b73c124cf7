//! The graph text format.
//!
//! Line oriented: blank lines and `# comment` lines are skipped,
//! `vertex NAME` declares a vertex (useful for isolated ones), and
//! `SRC DST MULT` adds `MULT` parallel edges. Duplicate arc lines
//! accumulate. Vertex order is order of first appearance.

use chipfire::{DirectedMultigraph, GraphError};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FormatError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("line {line}: {source}")]
    Graph { line: usize, source: GraphError },
}

fn check_name(name: &str, line: usize) -> Result<(), FormatError> {
    if name.starts_with('#') {
        return Err(FormatError::Graph {
            line,
            source: GraphError::BadName(name.to_string()),
        });
    }
    Ok(())
}

pub fn parse_graph(text: &str) -> Result<DirectedMultigraph, FormatError> {
    let mut names: Vec<String> = Vec::new();
    let mut edges: Vec<(String, String, u64)> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let tokens: Vec<&str> = trimmed.split_whitespace().collect();
        match tokens.as_slice() {
            ["vertex", name] => {
                check_name(name, line)?;
                names.push((*name).to_string());
            }
            [src, dst, mult] => {
                check_name(src, line)?;
                check_name(dst, line)?;
                if src == dst {
                    return Err(FormatError::Graph {
                        line,
                        source: GraphError::LoopEdge((*src).to_string()),
                    });
                }
                let mult: u64 = match mult.parse::<i64>() {
                    Ok(m) if m >= 1 => m as u64,
                    Ok(m) => {
                        return Err(FormatError::Graph {
                            line,
                            source: GraphError::NegativeMultiplicity {
                                src: (*src).to_string(),
                                dst: (*dst).to_string(),
                                mult: m,
                            },
                        })
                    }
                    Err(_) => {
                        return Err(FormatError::Parse {
                            line,
                            msg: format!("multiplicity {mult:?} is not a positive integer"),
                        })
                    }
                };
                edges.push(((*src).to_string(), (*dst).to_string(), mult));
            }
            _ => {
                return Err(FormatError::Parse {
                    line,
                    msg: format!(
                        "expected `vertex NAME` or `SRC DST MULT`, got {} token(s)",
                        tokens.len()
                    ),
                })
            }
        }
    }
    DirectedMultigraph::build(&names, &edges)
        .map_err(|source| FormatError::Graph { line: 0, source })
}

/// Emits a graph in the text format: every vertex declared in order, then
/// the arcs in row-major order. `parse_graph` on the output reconstructs
/// the graph exactly, including the vertex ordering.
pub fn write_graph(g: &DirectedMultigraph) -> String {
    let mut out = String::new();
    for v in g.vertices() {
        out.push_str(&format!("vertex {}\n", g.name(v)));
    }
    for (src, dst, mult) in g.arcs() {
        out.push_str(&format!("{} {} {}\n", g.name(src), g.name(dst), mult));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use chipfire::VertexId;

    #[test]
    fn parses_g2() {
        let g = parse_graph("a b 2\nb a 1\n").unwrap();
        assert_eq!(g.vertex_count(), 2);
        assert_eq!(g.total_edges(), 3);
    }

    #[test]
    fn comments_and_blanks_are_skipped() {
        let g = parse_graph("# c3\n\na b 1\nb c 1\nc a 1\n").unwrap();
        assert_eq!(g.vertex_count(), 3);
        assert_eq!(g.total_edges(), 3);
    }

    #[test]
    fn loop_edge_with_line_number() {
        let err = parse_graph("a a 1").unwrap_err();
        assert_eq!(err, FormatError::Graph { line: 1, source: GraphError::LoopEdge("a".into()) });
    }

    #[test]
    fn negative_multiplicity_with_line_number() {
        let err = parse_graph("a b 1\nb a -3\n").unwrap_err();
        assert!(matches!(
            err,
            FormatError::Graph { line: 2, source: GraphError::NegativeMultiplicity { .. } }
        ));
    }

    #[test]
    fn garbage_line_is_a_parse_error() {
        assert!(matches!(
            parse_graph("a b 1\nc d\n"),
            Err(FormatError::Parse { line: 2, .. })
        ));
        assert!(matches!(
            parse_graph("a b x\n"),
            Err(FormatError::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn duplicate_arcs_accumulate() {
        let g = parse_graph("a b 1\na b 2\nb a 1\n").unwrap();
        assert_eq!(g.multiplicity(VertexId(0), VertexId(1)), 3);
    }

    #[test]
    fn isolated_vertex_declaration() {
        let g = parse_graph("vertex x\na b 1\n").unwrap();
        assert_eq!(g.vertex_count(), 3);
        assert_eq!(g.name(VertexId(0)), "x");
    }

    #[test]
    fn write_then_parse_round_trips() {
        let g = parse_graph("vertex z\na b 2\nb a 1\n").unwrap();
        assert_eq!(parse_graph(&write_graph(&g)).unwrap(), g);
    }
}
