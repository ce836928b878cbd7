use std::fmt::Write as _;
use std::sync::Arc;

use super::{EmbeddingError, SEmbedding};
use crate::quadgraph::{read_graph, write_graph, DobrushinBoundary, GraphParseError};
use crate::C64;

#[derive(Debug, thiserror::Error)]
pub enum EmbeddingParseError {
    #[error(transparent)]
    Graph(#[from] GraphParseError),
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("vertex {0} has no POS record")]
    MissingPosition(usize),
    #[error("LIFT records must cover all vertices or none")]
    PartialLift,
    #[error("missing DELTA record")]
    MissingDelta,
    #[error(transparent)]
    Embedding(#[from] EmbeddingError),
}

/// Graph records followed by `POS`, `LIFT` and `DELTA` records.
pub fn write_embedding(emb: &SEmbedding, boundary: Option<&DobrushinBoundary>) -> String {
    let mut s = write_graph(emb.graph(), boundary);
    for v in 0..emb.graph().n_vertices() {
        writeln!(s, "POS {v} {:?} {:?}", emb.s(v).re, emb.s(v).im).unwrap();
    }
    for v in 0..emb.graph().n_vertices() {
        writeln!(s, "LIFT {v} {:?}", emb.q(v)).unwrap();
    }
    writeln!(s, "DELTA {:?}", emb.delta()).unwrap();
    s
}

/// Parses an embedding file. Without `LIFT` records Q is lifted from the
/// first dual vertex.
pub fn read_embedding(text: &str) -> Result<(SEmbedding, Option<DobrushinBoundary>), EmbeddingParseError> {
    let (graph, boundary) = read_graph(text)?;
    let n = graph.n_vertices();
    let mut pos: Vec<Option<C64>> = vec![None; n];
    let mut lift: Vec<Option<f64>> = vec![None; n];
    let mut delta = None;
    for (ln, raw) in text.lines().enumerate() {
        let line = ln + 1;
        let tok: Vec<&str> = raw.split_whitespace().collect();
        let syntax = |msg: &str| EmbeddingParseError::Syntax { line, msg: msg.to_string() };
        let vertex = |t: &str| t.parse::<usize>().ok().filter(|&v| v < n).ok_or_else(|| syntax("bad vertex id"));
        let float = |t: &str| t.parse::<f64>().map_err(|_| syntax("bad number"));
        match tok.first().copied() {
            Some("POS") if tok.len() == 4 => pos[vertex(tok[1])?] = Some(C64::new(float(tok[2])?, float(tok[3])?)),
            Some("LIFT") if tok.len() == 3 => lift[vertex(tok[1])?] = Some(float(tok[2])?),
            Some("DELTA") if tok.len() == 2 => delta = Some(float(tok[1])?),
            Some("POS" | "LIFT" | "DELTA") => return Err(syntax("wrong number of fields")),
            _ => {}
        }
    }
    let s: Vec<C64> = pos
        .iter()
        .enumerate()
        .map(|(v, p)| p.ok_or(EmbeddingParseError::MissingPosition(v)))
        .collect::<Result<_, _>>()?;
    let delta = delta.ok_or(EmbeddingParseError::MissingDelta)?;
    let graph = Arc::new(graph);
    let emb = if lift.iter().all(Option::is_none) {
        SEmbedding::from_positions(graph.clone(), s, graph.n_primal(), delta)?
    } else if lift.iter().all(Option::is_some) {
        SEmbedding::new(graph, s, lift.into_iter().map(Option::unwrap).collect(), delta)?
    } else {
        return Err(EmbeddingParseError::PartialLift);
    };
    Ok((emb, boundary))
}
