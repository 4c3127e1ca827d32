//! Host-side companion to `hbmbfs-core`: graph files, root selection and
//! run reports.

pub mod binary;
pub mod edgelist;
pub mod report;
pub mod roots;

pub use binary::{read_graph, write_graph, FormatError};
pub use edgelist::{parse_edge_list, write_edge_list, ParseError};
pub use report::{CompareReport, RootRun, RunManifest, RunReport};
pub use roots::select_roots;
