//! Little-endian binary graph file:
//!
//! ```text
//! magic "SBFS" | version u32 = 1 | n u64 | m u64
//! csr_offsets (n+1) x u64 | csr_edges m x u32
//! csc_offsets (n+1) x u64 | csc_edges m x u32
//! ```

use std::io::{self, Read, Write};

use hbmbfs_core::{Graph, GraphError, VertexId};

pub const MAGIC: [u8; 4] = *b"SBFS";
pub const VERSION: u32 = 1;
pub const HEADER_BYTES: u64 = 24;

#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("not a graph file (bad magic)")]
    BadMagic,
    #[error("unsupported format version {0}")]
    Version(u32),
    #[error("file is {actual} bytes, header implies {expected}")]
    Length { expected: u64, actual: u64 },
    #[error("invalid graph: {0}")]
    Graph(#[from] GraphError),
}

/// Exact file size for a graph with `n` vertices and `m` edges.
pub fn encoded_len(n: u64, m: u64) -> Option<u64> {
    let offsets = n.checked_add(1)?.checked_mul(16)?;
    HEADER_BYTES.checked_add(offsets)?.checked_add(m.checked_mul(8)?)
}

pub fn write_graph(mut w: impl Write, g: &Graph) -> io::Result<()> {
    w.write_all(&MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(g.num_vertices() as u64).to_le_bytes())?;
    w.write_all(&(g.num_edges() as u64).to_le_bytes())?;
    for (offsets, edges) in [(g.csr_offsets(), g.csr_edges()), (g.csc_offsets(), g.csc_edges())] {
        let mut buf = Vec::with_capacity(offsets.len() * 8 + edges.len() * 4);
        buf.extend(offsets.iter().flat_map(|o| o.to_le_bytes()));
        buf.extend(edges.iter().flat_map(|e| e.to_le_bytes()));
        w.write_all(&buf)?;
    }
    w.flush()
}

fn u64s(bytes: &[u8]) -> Vec<u64> {
    bytes.chunks_exact(8).map(|c| u64::from_le_bytes(c.try_into().unwrap())).collect()
}

fn u32s(bytes: &[u8]) -> Vec<VertexId> {
    bytes.chunks_exact(4).map(|c| u32::from_le_bytes(c.try_into().unwrap())).collect()
}

/// Reads and fully validates a graph file.
pub fn read_graph(mut r: impl Read) -> Result<Graph, FormatError> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    let actual = bytes.len() as u64;
    if actual < HEADER_BYTES {
        return Err(if bytes.len() >= 4 && bytes[..4] != MAGIC {
            FormatError::BadMagic
        } else {
            FormatError::Length {
                expected: HEADER_BYTES,
                actual,
            }
        });
    }
    if bytes[..4] != MAGIC {
        return Err(FormatError::BadMagic);
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != VERSION {
        return Err(FormatError::Version(version));
    }
    let n = u64::from_le_bytes(bytes[8..16].try_into().unwrap());
    let m = u64::from_le_bytes(bytes[16..24].try_into().unwrap());
    let expected = encoded_len(n, m).unwrap_or(u64::MAX);
    if expected != actual {
        return Err(FormatError::Length { expected, actual });
    }
    let (off_len, edge_len) = ((n as usize + 1) * 8, m as usize * 4);
    let mut at = HEADER_BYTES as usize;
    let mut take = |len: usize| {
        let s = &bytes[at..at + len];
        at += len;
        s
    };
    let csr_offsets = u64s(take(off_len));
    let csr_edges = u32s(take(edge_len));
    let csc_offsets = u64s(take(off_len));
    let csc_edges = u32s(take(edge_len));
    Ok(Graph::from_parts(csr_offsets, csr_edges, csc_offsets, csc_edges)?)
}
