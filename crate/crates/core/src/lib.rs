//! Software model of an HBM-attached FPGA breadth-first-search accelerator.
//!
//! The crate is `no_std` (it needs `alloc`) and holds every algorithmic piece:
//!
//! - [`graph`]: edge lists, CSR/CSC construction, undirected-to-directed conversion.
//! - [`rmat`]: deterministic Graph500-style Kronecker (RMAT) generation.
//! - [`partition`]: `VID % Q` vertex ownership and horizontal partitioning onto
//!   processing elements and memory pseudo channels.
//! - [`bfs`]: a queue BFS oracle and the three-bitmap push/pull engine with a
//!   hybrid mode scheduler.
//! - [`crossbar`]: full and multi-layer crossbar dispatch fabrics with FIFO
//!   backpressure and resource accounting.
//! - [`sim`]: a cycle-approximate simulator of processing groups, HBM readers,
//!   hybrid PEs and the vertex dispatcher.
//! - [`perf`]: the closed-form throughput and resource model.
//!
//! File formats, the CLI and anything touching the OS live in the companion
//! `hbmbfs` crate.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod bfs;
pub mod bitmap;
pub mod crossbar;
pub mod graph;
pub mod partition;
pub mod perf;
pub mod rmat;
pub mod sim;

pub use bfs::{bfs_oracle, run_bfs, BfsRun, BfsState, IterationStats, Mode, ModePolicy};
pub use bitmap::Bitmap;
pub use crossbar::{CrossbarTopology, DispatchMessage, Fabric, MessageKind};
pub use graph::{EdgeList, Graph, GraphError};
pub use partition::{owner_pe, PartitionPlan, Subgraph};
pub use perf::{PerfEstimate, PerfParams};
pub use rmat::RmatConfig;
pub use sim::{run_simulation, Placement, SimConfig, SimReport, SimRun};

/// Vertex identifier. 32 bits, matching the 32-bit vertex storage size used
/// by the accelerator.
pub type VertexId = u32;

/// BFS level value; [`UNREACHED`] marks vertices not reachable from the root.
pub type Level = u32;

/// Level sentinel for unreachable vertices.
pub const UNREACHED: Level = Level::MAX;
