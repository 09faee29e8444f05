//! Filtered-graph hierarchical clustering.
//!
//! A dense similarity matrix is sparsified into a Triangulated Maximally
//! Filtered Graph (TMFG) by inserting vertices into triangular faces, several
//! per round when `prefix > 1`. The bubble tree of the TMFG is grown during
//! construction, its edges are directed in linear work, and the Directed
//! Bubble Hierarchy Tree (DBHT) procedure turns it into a dendrogram.
//!
//! ```
//! use tdbht::{matrix, pipeline};
//!
//! let s = matrix::SimMatrix::from_fn(8, |i, j| 1.0 / (1.0 + (i as f64 - j as f64).abs())).unwrap();
//! let d = matrix::to_dissimilarity(&s).unwrap();
//! let out = pipeline::run(&s, &d, &pipeline::PipelineConfig::new(2).unwrap()).unwrap();
//! assert_eq!(out.graph.edges().len(), 3 * 8 - 6);
//! let labels = out.dendrogram.cut(3).unwrap();
//! assert_eq!(labels.iter().max(), Some(&2));
//! ```

pub mod bubble;
pub mod dbht;
pub mod error;
pub mod fmt;
pub mod linkage;
pub mod matrix;
pub mod metrics;
pub mod pipeline;
pub mod synth;
pub mod tmfg;

pub use error::{Error, Result};
