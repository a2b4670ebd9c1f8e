//! Patch extraction and reassembly, similarity grouping, and the sparse-coding
//! dictionary.

mod dictionary;
mod grid;
mod kmeans;

pub use dictionary::{build_dictionary, Dictionary};
pub use grid::{extract, reassemble, PatchGrid};
pub use kmeans::{default_group_count, kmeans_group, PatchGrouping, KMEANS_MAX_ITER};
