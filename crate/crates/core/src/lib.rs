//! Deterministic influence maximization on graphs.
//!
//! Influential nodes are chosen by greedily minimizing the posterior standard
//! deviation (the power function) of a Gaussian process whose covariance is a
//! graph-basis-function kernel, i.e. a function of the graph Laplacian. The
//! crate also ships the usual stochastic and centrality baselines
//! (Independent Cascade, PageRank, degree), cross-validated kernel tuning and
//! the `gbfim` command line tool.
//!
//! ```
//! use gbfim::graph::{Graph, LaplacianKind};
//! use gbfim::kernel::{GbfKernel, KernelFamily};
//! use gbfim::pgreedy::{select_nodes, SelectorConfig};
//! use gbfim::spectral::laplacian_spectrum;
//!
//! let g = Graph::new(4, [(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0)]).unwrap();
//! let spectrum = laplacian_spectrum(&g, LaplacianKind::Standard).unwrap();
//! let kernel = GbfKernel::new(KernelFamily::Diffusion { t: 1.0 }, &spectrum).unwrap();
//! let state = select_nodes(&spectrum, &kernel, &SelectorConfig::new(2)).unwrap();
//! assert_eq!(state.chosen().len(), 2);
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod cli;
pub mod error;
pub mod gpr;
pub mod graph;
pub mod kernel;
pub mod pgreedy;
pub mod report;
pub mod spectral;
pub mod tuning;

pub use error::{Error, Result};
