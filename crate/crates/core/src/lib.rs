//! Estimating the number of communities in large sparse networks with a
//! subsampling-based modified BIC.
//!
//! The pipeline draws one node subsample, keeps the `N x n` matrix of edges
//! incident to it, and for every candidate `K` clusters the nodes
//! spectrally, estimates block connectivity, and scores the fit with a
//! penalized profile likelihood. The candidate with the highest score wins.
//!
//! ```
//! use smbic::prelude::*;
//!
//! let params = SbmParams::new(2, 400, 0.2, 0.1);
//! let (graph, _truth) = sample_sbm(&params, 7).unwrap();
//! let cfg = SelectionConfig {
//!     k_max: 5,
//!     subsample: SubsampleSize::explicit(200),
//!     ..SelectionConfig::default()
//! };
//! let report = select_k(&graph, &cfg).unwrap();
//! assert_eq!(report.k_hat, 2);
//! ```

pub mod bench;
pub mod criterion;
pub mod error;
pub mod graph;
pub mod rng;
pub mod selection;
pub mod spectral;
pub mod subsample;
pub mod synth;

pub use error::{Error, ErrorKind, Result};

/// The types most programs need.
pub mod prelude {
    pub use crate::criterion::{penalty, FitResult};
    pub use crate::error::{Error, Result};
    pub use crate::graph::{load_edge_list, Indexing, SparseGraph};
    pub use crate::selection::{select_k, select_k_from_subsample, RhoSource, SelectionConfig, SelectionReport, SubsampleSize};
    pub use crate::spectral::{Assignment, Labeling, Model};
    pub use crate::subsample::{extract_subadjacency, recommended_subsample_size, sample_nodes, NodeSet};
    pub use crate::synth::{sample_dcsbm, sample_gsbm_with_outliers, sample_sbm, DcsbmParams, OutlierParams, SbmParams};
}
