use std::fmt::Write as _;

use super::{DobrushinBoundary, DobrushinError, InvalidGraph, QuadGraph};

#[derive(Debug, thiserror::Error)]
pub enum GraphParseError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("vertex ids must be dense and primal-first")]
    VertexIds,
    #[error("quad ids must be dense from 0")]
    QuadIds,
    #[error("rotation of vertex {0} does not match the quads")]
    Rotation(usize),
    #[error(transparent)]
    Invalid(#[from] InvalidGraph),
    #[error(transparent)]
    Dobrushin(#[from] DobrushinError),
    #[error("ARC_P/ARC_D given without both A and B")]
    IncompleteBoundary,
}

/// Serializes a graph (and optional Dobrushin data) in the line-based text format.
pub fn write_graph(graph: &QuadGraph, boundary: Option<&DobrushinBoundary>) -> String {
    let mut s = String::new();
    for v in 0..graph.n_primal() {
        writeln!(s, "PV {v}").unwrap();
    }
    for v in graph.n_primal()..graph.n_vertices() {
        writeln!(s, "DV {v}").unwrap();
    }
    for (q, quad) in graph.quads().iter().enumerate() {
        writeln!(s, "QUAD {q} {} {} {} {}", quad[0], quad[1], quad[2], quad[3]).unwrap();
    }
    for v in 0..graph.n_vertices() {
        writeln!(s, "ROT {v} {}", join(&graph.fan(v).quads)).unwrap();
    }
    if let Some(b) = boundary {
        writeln!(s, "ARC_P {}", join(&b.primal_arc)).unwrap();
        writeln!(s, "ARC_D {}", join(&b.dual_arc)).unwrap();
        writeln!(s, "A {}", b.a).unwrap();
        writeln!(s, "B {}", b.b).unwrap();
    }
    s
}

fn join(ids: &[usize]) -> String {
    ids.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
}

/// Records of the embedding format that the graph reader skips.
const EMBEDDING_RECORDS: [&str; 3] = ["POS", "LIFT", "DELTA"];

/// Parses the text format. `ROT` and `ARC_*` records are checked against
/// the structure derived from the quads.
pub fn read_graph(text: &str) -> Result<(QuadGraph, Option<DobrushinBoundary>), GraphParseError> {
    let mut pv = Vec::new();
    let mut dv = Vec::new();
    let mut quads: Vec<(usize, [usize; 4])> = Vec::new();
    let mut rots: Vec<(usize, Vec<usize>)> = Vec::new();
    let mut arc_p = None;
    let mut arc_d = None;
    let (mut a, mut b) = (None, None);
    for (ln, raw) in text.lines().enumerate() {
        let line = ln + 1;
        let mut tok = raw.split_whitespace();
        let Some(tag) = tok.next() else { continue };
        if tag.starts_with('#') || EMBEDDING_RECORDS.contains(&tag) {
            continue;
        }
        let nums: Vec<usize> = tok
            .map(|t| t.parse::<usize>())
            .collect::<Result<_, _>>()
            .map_err(|e| GraphParseError::Syntax { line, msg: e.to_string() })?;
        let want = |n: usize| {
            if nums.len() == n {
                Ok(())
            } else {
                Err(GraphParseError::Syntax { line, msg: format!("{tag} expects {n} fields") })
            }
        };
        match tag {
            "PV" => {
                want(1)?;
                pv.push(nums[0]);
            }
            "DV" => {
                want(1)?;
                dv.push(nums[0]);
            }
            "QUAD" => {
                want(5)?;
                quads.push((nums[0], [nums[1], nums[2], nums[3], nums[4]]));
            }
            "ROT" => {
                if nums.is_empty() {
                    return Err(GraphParseError::Syntax { line, msg: "ROT needs a vertex".into() });
                }
                rots.push((nums[0], nums[1..].to_vec()));
            }
            "ARC_P" => arc_p = Some(nums),
            "ARC_D" => arc_d = Some(nums),
            "A" => {
                want(1)?;
                a = Some(nums[0]);
            }
            "B" => {
                want(1)?;
                b = Some(nums[0]);
            }
            other => return Err(GraphParseError::Syntax { line, msg: format!("unknown record {other}") }),
        }
    }
    pv.sort_unstable();
    dv.sort_unstable();
    let np = pv.len();
    if pv.iter().enumerate().any(|(k, &v)| k != v) || dv.iter().enumerate().any(|(k, &v)| np + k != v) {
        return Err(GraphParseError::VertexIds);
    }
    quads.sort_unstable_by_key(|q| q.0);
    if quads.iter().enumerate().any(|(k, q)| k != q.0) {
        return Err(GraphParseError::QuadIds);
    }
    let graph = QuadGraph::new(np, dv.len(), quads.into_iter().map(|q| q.1).collect())?;
    for (v, list) in rots {
        let fan = if v < graph.n_vertices() { &graph.fan(v).quads } else { return Err(GraphParseError::Rotation(v)) };
        let same = if graph.fan(v).complete && !list.is_empty() && list.len() == fan.len() {
            // a complete fan may start anywhere
            (0..fan.len()).any(|s| (0..fan.len()).all(|k| fan[(s + k) % fan.len()] == list[k]))
        } else {
            *fan == list
        };
        if !same {
            return Err(GraphParseError::Rotation(v));
        }
    }
    let boundary = match (a, b) {
        (Some(a), Some(b)) => {
            let d = DobrushinBoundary::new(&graph, a, b)?;
            if arc_p.as_ref().is_some_and(|p| *p != d.primal_arc) || arc_d.as_ref().is_some_and(|q| *q != d.dual_arc) {
                return Err(DobrushinError::ArcMismatch.into());
            }
            Some(d)
        }
        (None, None) if arc_p.is_none() && arc_d.is_none() => None,
        _ => return Err(GraphParseError::IncompleteBoundary),
    };
    Ok((graph, boundary))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadgraph::{build_rect_lattice, RectLayout};

    #[test]
    fn round_trip_preserves_everything() {
        let g = build_rect_lattice(3, 2);
        let lay = RectLayout::new(3, 2);
        let d = DobrushinBoundary::from_pairs(&g, (lay.id(0, 0), lay.id(1, 0)), (lay.id(2, 2), lay.id(3, 2))).unwrap();
        let text = write_graph(&g, Some(&d));
        let (g2, d2) = read_graph(&text).unwrap();
        assert_eq!(g2.quads(), g.quads());
        assert_eq!(g2.corners(), g.corners());
        for v in 0..g.n_vertices() {
            assert_eq!(g2.fan(v), g.fan(v));
        }
        assert_eq!(d2.as_ref(), Some(&d));
        assert_eq!(write_graph(&g2, d2.as_ref()), text);
    }

    #[test]
    fn tampered_rotation_is_rejected() {
        let g = build_rect_lattice(2, 2);
        let text = write_graph(&g, None);
        let centre = RectLayout::new(2, 2).id(1, 1);
        let mut fan = g.fan(centre).quads.clone();
        fan.swap(0, 1);
        let bad = text.replace(
            &format!("ROT {centre} {}\n", join(&g.fan(centre).quads)),
            &format!("ROT {centre} {}\n", join(&fan)),
        );
        assert!(matches!(read_graph(&bad), Err(GraphParseError::Rotation(_))));
    }

    #[test]
    fn unknown_record_is_a_syntax_error() {
        assert!(matches!(read_graph("PV 0\nEDGE 1 2\n"), Err(GraphParseError::Syntax { line: 2, .. })));
    }
}
