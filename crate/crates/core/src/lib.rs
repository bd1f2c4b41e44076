//! Chain graphs over regular Gaussian distributions.
//!
//! The crate models mixed graphs without directed pseudocycles, decides
//! graphical separation by moralization, parameterizes the factorizing
//! regular Gaussians through per-component precision blocks, tests exact
//! conditional independence via partial correlations, verifies Markov
//! soundness and faithfulness by seeded Monte-Carlo runs, and decides
//! Markov equivalence through skeletons and complexes.
//!
//! With the default `parallel` feature the Monte-Carlo harness fans
//! samples out over a rayon pool; reports are bit-identical to the
//! sequential path because every sample draws from its own counter-derived
//! random stream.
//!
//! ```
//! use chaingauss::{ChainGraph, SampleConfig, SeparationQuery};
//! use chaingauss::{gaussian, independence, params, separation};
//!
//! // A collider: 1 -> 2 <- 3.
//! let g = ChainGraph::new(3, [], [(1, 2), (3, 2)])?;
//! assert!(g.validate().is_empty());
//!
//! // Graphically, 1 and 3 are separated marginally but not given 2.
//! let marginal = SeparationQuery::new(&g, &[1], &[3], &[])?;
//! let given_2 = SeparationQuery::new(&g, &[1], &[3], &[2])?;
//! assert!(separation::separated(&g, &marginal));
//! assert!(!separation::separated(&g, &given_2));
//!
//! // A sampled factorizing distribution shows the same pattern exactly.
//! let p = params::sample(&g, 7, &SampleConfig::default());
//! let joint = gaussian::build_joint(&g, &p)?;
//! assert!(independence::ci_test(&joint, 1, 3, &[], 1e-7)?.independent);
//! assert!(!independence::ci_test(&joint, 1, 3, &[2], 1e-7)?.independent);
//! # Ok::<(), Box<dyn std::error::Error>>(())
//! ```

mod digest;

pub mod equivalence;
pub mod faithfulness;
pub mod gaussian;
pub mod graph;
pub mod independence;
pub mod params;
pub mod parse;
pub mod separation;

pub use gaussian::{Gaussian, GaussianError, LinearConditional};
pub use graph::{ChainGraph, Complex, ComponentDecomposition, GraphError, GraphSummary, Vertex, Violation};
pub use params::{NdParameters, SampleConfig};
pub use separation::SeparationQuery;
