//! Incremental global frontier detection over pose-graph SLAM submaps.
//!
//! - [`grid`]: occupancy grids, labels, inflation, PGM I/O
//! - [`frontier`]: local frontier detection on one grid
//! - [`submap_graph`]: posed submaps, stabbing queries, fusion, snapshots
//! - [`incremental`]: DFD, BFS and Direct global frontier maintenance
//! - [`clustering`]: navigation points from the global frontier
//! - [`sim`]: worlds, sensor, drift and the exploration loop
//! - [`bench`]: replay, strategy comparison, rendering, oracle checks
//! - [`oracle`]: brute-force references used by tests and `oracle-check`

// `!(x > 0.0)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bench;
pub mod clustering;
pub mod error;
pub mod frontier;
pub mod grid;
pub mod incremental;
pub mod oracle;
pub mod sim;
pub mod submap_graph;

pub use error::{Error, Result};

// Book chapters, compiled and run as doctests.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/grids.md")]
    mod grids {}
    #[doc = include_str!("../../../book/src/frontiers.md")]
    mod frontiers {}
    #[doc = include_str!("../../../book/src/submaps.md")]
    mod submaps {}
    #[doc = include_str!("../../../book/src/incremental.md")]
    mod incremental {}
    #[doc = include_str!("../../../book/src/navigation.md")]
    mod navigation {}
    #[doc = include_str!("../../../book/src/simulator.md")]
    mod simulator {}
    #[doc = include_str!("../../../book/src/benchmarking.md")]
    mod benchmarking {}
}
