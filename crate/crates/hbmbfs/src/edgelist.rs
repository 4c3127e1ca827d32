//! Plain-text edge lists: one `src dst` pair per line, `#` comments, and an
//! optional `# vertices N` header.

use std::io::{self, BufRead, Write};

use hbmbfs_core::{EdgeList, VertexId};

#[derive(Debug, thiserror::Error)]
pub enum ParseError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("line {line}: expected `src dst`, got {text:?}")]
    Malformed { line: usize, text: String },
    #[error("line {line}: bad or repeated `# vertices` header")]
    Header { line: usize },
    #[error("line {line}: vertex {vertex} out of range for {num_vertices} vertices")]
    OutOfRange { line: usize, vertex: VertexId, num_vertices: u64 },
}

fn header(comment: &str) -> Option<Option<u64>> {
    let mut words = comment.trim_start_matches('#').split_whitespace();
    if words.next() != Some("vertices") {
        return None;
    }
    Some(match (words.next(), words.next()) {
        (Some(n), None) => n.parse().ok(),
        _ => None,
    })
}

/// Parses a text edge list. Without a header the vertex count is one past
/// the largest id.
pub fn parse_edge_list(reader: impl BufRead, directed: bool) -> Result<EdgeList, ParseError> {
    let mut edges = Vec::new();
    let mut declared: Option<u64> = None;
    // Largest id seen and the line it came from.
    let mut max_id: Option<(VertexId, usize)> = None;
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        let text = line.trim();
        if text.is_empty() {
            continue;
        }
        if text.starts_with('#') {
            match header(text) {
                None => {}
                Some(Some(n)) if declared.is_none() => declared = Some(n),
                Some(_) => return Err(ParseError::Header { line: line_no }),
            }
            continue;
        }
        let malformed = || ParseError::Malformed {
            line: line_no,
            text: text.to_string(),
        };
        let mut words = text.split_whitespace();
        let (u, v) = match (words.next(), words.next(), words.next()) {
            (Some(u), Some(v), None) => (
                u.parse::<VertexId>().map_err(|_| malformed())?,
                v.parse::<VertexId>().map_err(|_| malformed())?,
            ),
            _ => return Err(malformed()),
        };
        let top = u.max(v);
        if max_id.is_none_or(|(m, _)| top > m) {
            max_id = Some((top, line_no));
        }
        edges.push((u, v));
    }
    let num_vertices = match (declared, max_id) {
        (Some(n), Some((top, line))) if u64::from(top) >= n => {
            return Err(ParseError::OutOfRange {
                line,
                vertex: top,
                num_vertices: n,
            })
        }
        (Some(n), _) => n,
        (None, Some((top, _))) => u64::from(top) + 1,
        (None, None) => 0,
    };
    Ok(EdgeList {
        num_vertices,
        edges,
        directed,
    })
}

/// Writes `list` with a `# vertices` header so isolated trailing vertices
/// survive a round trip.
pub fn write_edge_list(mut w: impl Write, list: &EdgeList) -> io::Result<()> {
    writeln!(w, "# vertices {}", list.num_vertices)?;
    for (u, v) in &list.edges {
        writeln!(w, "{u} {v}")?;
    }
    w.flush()
}
