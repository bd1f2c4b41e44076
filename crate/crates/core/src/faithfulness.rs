//! Monte-Carlo verification that sampled factorizing distributions are
//! Markovian with respect to their graph and, generically, faithful to it.
//!
//! Each sample draws parameters from its own counter-derived random
//! stream, so a report depends only on `(graph, seed, n_samples, tol)` and
//! is bit-identical whether samples are evaluated sequentially or on a
//! rayon pool (the default `parallel` feature).

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
#[cfg(feature = "parallel")]
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gaussian::{build_joint, GaussianError};
use crate::graph::{ChainGraph, GraphSummary, Vertex};
use crate::independence::{ci_test, CiError, CONCLUSION_SLACK};
use crate::params::{self, NdParameters, SampleConfig};
use crate::separation::{separated, SeparationQuery};

/// Full triple enumeration is capped at this vertex count.
pub const MAX_VERTICES: usize = 8;
/// Above this vertex count the harness evaluates a random subset of
/// triples of this size instead of the full enumeration.
pub const SUBSAMPLE_VERTICES: usize = 7;
pub const SUBSAMPLE_TRIPLES: usize = 1000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HarnessError {
    #[error("triple enumeration is limited to {MAX_VERTICES} vertices, graph has {0}")]
    TooManyVertices(usize),
    #[error("at least one sample is required")]
    NoSamples,
    #[error(transparent)]
    Gaussian(#[from] GaussianError),
    #[error(transparent)]
    Ci(#[from] CiError),
}

/// Graph separation versus numeric independence for one triple of one
/// sampled distribution.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TripleVerdict {
    pub i: Vertex,
    pub j: Vertex,
    pub z: Vec<Vertex>,
    pub graph_separated: bool,
    pub numeric_independent: bool,
    pub partial_corr: f64,
}

impl TripleVerdict {
    /// Graphically separated yet numerically dependent.
    pub fn is_markov_violation(&self) -> bool {
        self.graph_separated && !self.numeric_independent
    }

    /// Graphically connected yet numerically independent.
    pub fn is_faithfulness_violation(&self) -> bool {
        !self.graph_separated && self.numeric_independent
    }
}

/// One entry of the flattened violation lists in a report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViolationRecord {
    pub sample: usize,
    pub i: Vertex,
    pub j: Vertex,
    #[serde(rename = "Z")]
    pub z: Vec<Vertex>,
    pub partial_corr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FaithfulnessReport {
    pub graph: GraphSummary,
    pub digest: String,
    pub d: usize,
    pub n_samples: usize,
    pub seed: u64,
    pub tol: f64,
    /// Number of triples each sample was checked against.
    pub triples_evaluated: usize,
    /// True when the triple set was randomly thinned for a large graph.
    pub subsampled: bool,
    pub faithful_fraction: f64,
    pub markov_violation_count: usize,
    /// Per-sample flag: no violation of either kind at the tolerance.
    pub faithful_flags: Vec<bool>,
    pub markov_violations: Vec<ViolationRecord>,
    pub faithfulness_violations: Vec<ViolationRecord>,
    /// Connected triples whose partial correlation lands within
    /// `CONCLUSION_SLACK` of the tolerance: near-unfaithful, reported
    /// separately rather than counted as violations.
    pub borderline: Vec<ViolationRecord>,
}

/// All `(i, j, Z)` triples with `i < j` and `Z` ranging over subsets of
/// the remaining vertices, in deterministic order. Pairwise triples
/// suffice because both separation and Gaussian independence reduce
/// pairwise.
pub fn enumerate_triples(g: &ChainGraph) -> Result<Vec<(Vertex, Vertex, Vec<Vertex>)>, HarnessError> {
    let n = g.vertex_count();
    if n > MAX_VERTICES {
        return Err(HarnessError::TooManyVertices(n));
    }
    let mut out = Vec::new();
    for i in 1..=n {
        for j in (i + 1)..=n {
            let rest: Vec<Vertex> = (1..=n).filter(|&v| v != i && v != j).collect();
            for mask in 0..(1usize << rest.len()) {
                let z: Vec<Vertex> = rest
                    .iter()
                    .enumerate()
                    .filter(|(b, _)| mask >> b & 1 == 1)
                    .map(|(_, &v)| v)
                    .collect();
                out.push((i, j, z));
            }
        }
    }
    Ok(out)
}

/// Build the joint for one parameter draw and compare every triple's
/// separation verdict against the exact independence test.
pub fn check_sample(
    g: &ChainGraph,
    params: &NdParameters,
    tol: f64,
) -> Result<Vec<TripleVerdict>, HarnessError> {
    let triples = enumerate_triples(g)?;
    let separations: Vec<bool> = triples
        .iter()
        .map(|(i, j, z)| {
            let q = SeparationQuery::new(g, &[*i], &[*j], z).expect("triples are disjoint");
            separated(g, &q)
        })
        .collect();
    check_sample_against(g, params, tol, &triples, &separations)
}

fn check_sample_against(
    g: &ChainGraph,
    params: &NdParameters,
    tol: f64,
    triples: &[(Vertex, Vertex, Vec<Vertex>)],
    separations: &[bool],
) -> Result<Vec<TripleVerdict>, HarnessError> {
    let joint = build_joint(g, params)?;
    let mut out = Vec::with_capacity(triples.len());
    for ((i, j, z), &graph_separated) in triples.iter().zip(separations) {
        let verdict = ci_test(&joint, *i, *j, z, tol)?;
        out.push(TripleVerdict {
            i: *i,
            j: *j,
            z: z.clone(),
            graph_separated,
            numeric_independent: verdict.independent,
            partial_corr: verdict.partial_corr,
        });
    }
    Ok(out)
}

/// Random chain graph for test fixtures: every vertex pair independently
/// receives no edge (probability `1 - edge_density`) or one of the three
/// edge kinds uniformly. Offending arrows are then repaired against a
/// random vertex order: arrows inside an undirected component become
/// undirected edges, arrows between components are redirected to follow
/// the order. Deterministic per seed; the output always validates.
pub fn random_cg(n: usize, edge_density: f64, seed: u64) -> ChainGraph {
    let density = edge_density.clamp(0.0, 1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut und: Vec<(Vertex, Vertex)> = Vec::new();
    let mut dir: Vec<(Vertex, Vertex)> = Vec::new();
    for a in 1..=n {
        for b in (a + 1)..=n {
            if rng.random_range(0.0..1.0) >= density {
                continue;
            }
            match rng.random_range(0..3u8) {
                0 => und.push((a, b)),
                1 => dir.push((a, b)),
                _ => dir.push((b, a)),
            }
        }
    }
    let mut order: Vec<Vertex> = (1..=n).collect();
    order.shuffle(&mut rng);
    let mut position = vec![0usize; n + 1];
    for (pos, &v) in order.iter().enumerate() {
        position[v] = pos;
    }
    let skeleton = ChainGraph::new(n, und.iter().copied(), []).expect("in-range pairs");
    let decomp = skeleton.components();
    let rank = |v: Vertex| -> usize {
        decomp.components()[decomp.component_of(v)]
            .iter()
            .map(|&w| position[w])
            .min()
            .expect("components are non-empty")
    };
    let mut fixed_dir: Vec<(Vertex, Vertex)> = Vec::new();
    for (t, h) in dir {
        if decomp.component_of(t) == decomp.component_of(h) {
            und.push((t.min(h), t.max(h)));
        } else if rank(t) <= rank(h) {
            fixed_dir.push((t, h));
        } else {
            fixed_dir.push((h, t));
        }
    }
    let g = ChainGraph::new(n, und, fixed_dir).expect("in-range pairs");
    debug_assert!(g.is_valid());
    g
}

/// Run `n_samples` independent parameter draws against the triple set and
/// aggregate the verdicts. Samples run on the rayon pool when the
/// `parallel` feature is enabled.
pub fn run_harness(
    g: &ChainGraph,
    n_samples: usize,
    seed: u64,
    tol: f64,
) -> Result<FaithfulnessReport, HarnessError> {
    run_with(g, n_samples, seed, tol, evaluate_samples)
}

/// Sequential twin of [`run_harness`]; the report is bit-identical.
pub fn run_harness_serial(
    g: &ChainGraph,
    n_samples: usize,
    seed: u64,
    tol: f64,
) -> Result<FaithfulnessReport, HarnessError> {
    run_with(g, n_samples, seed, tol, evaluate_samples_serial)
}

struct SampleJob<'a> {
    g: &'a ChainGraph,
    seed: u64,
    tol: f64,
    config: SampleConfig,
    triples: &'a [(Vertex, Vertex, Vec<Vertex>)],
    separations: &'a [bool],
}

impl SampleJob<'_> {
    fn eval(&self, index: usize) -> Result<Vec<TripleVerdict>, HarnessError> {
        let params = params::sample_indexed(self.g, self.seed, index as u64, &self.config);
        check_sample_against(self.g, &params, self.tol, self.triples, self.separations)
    }
}

#[cfg(feature = "parallel")]
fn evaluate_samples(job: &SampleJob<'_>, n: usize) -> Result<Vec<Vec<TripleVerdict>>, HarnessError> {
    (0..n).into_par_iter().map(|k| job.eval(k)).collect()
}

#[cfg(not(feature = "parallel"))]
fn evaluate_samples(job: &SampleJob<'_>, n: usize) -> Result<Vec<Vec<TripleVerdict>>, HarnessError> {
    evaluate_samples_serial(job, n)
}

fn evaluate_samples_serial(
    job: &SampleJob<'_>,
    n: usize,
) -> Result<Vec<Vec<TripleVerdict>>, HarnessError> {
    (0..n).map(|k| job.eval(k)).collect()
}

fn run_with(
    g: &ChainGraph,
    n_samples: usize,
    seed: u64,
    tol: f64,
    evaluate: impl Fn(&SampleJob<'_>, usize) -> Result<Vec<Vec<TripleVerdict>>, HarnessError>,
) -> Result<FaithfulnessReport, HarnessError> {
    if n_samples == 0 {
        return Err(HarnessError::NoSamples);
    }
    let mut triples = enumerate_triples(g)?;
    let mut subsampled = false;
    if g.vertex_count() >= SUBSAMPLE_VERTICES && triples.len() > SUBSAMPLE_TRIPLES {
        // Thin deterministically on a stream that no sample index uses.
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(u64::MAX);
        let mut indices: Vec<usize> = (0..triples.len()).collect();
        indices.shuffle(&mut rng);
        indices.truncate(SUBSAMPLE_TRIPLES);
        indices.sort_unstable();
        triples = indices.into_iter().map(|k| triples[k].clone()).collect();
        subsampled = true;
    }
    let separations: Vec<bool> = triples
        .iter()
        .map(|(i, j, z)| {
            let q = SeparationQuery::new(g, &[*i], &[*j], z).expect("triples are disjoint");
            separated(g, &q)
        })
        .collect();
    let job = SampleJob {
        g,
        seed,
        tol,
        config: SampleConfig::default(),
        triples: &triples,
        separations: &separations,
    };
    let per_sample = evaluate(&job, n_samples)?;

    let mut faithful_flags = Vec::with_capacity(n_samples);
    let mut markov_violations = Vec::new();
    let mut faithfulness_violations = Vec::new();
    let mut borderline = Vec::new();
    for (sample, verdicts) in per_sample.iter().enumerate() {
        let mut faithful = true;
        for v in verdicts {
            let record = ViolationRecord {
                sample,
                i: v.i,
                j: v.j,
                z: v.z.clone(),
                partial_corr: v.partial_corr,
            };
            if v.is_markov_violation() {
                faithful = false;
                markov_violations.push(record);
            } else if v.is_faithfulness_violation() {
                faithful = false;
                faithfulness_violations.push(record);
            } else if !v.graph_separated && v.partial_corr.abs() < CONCLUSION_SLACK * tol {
                borderline.push(record);
            }
        }
        faithful_flags.push(faithful);
    }
    let faithful = faithful_flags.iter().filter(|&&f| f).count();
    Ok(FaithfulnessReport {
        graph: g.summary(),
        digest: g.digest(),
        d: params::dimension(g),
        n_samples,
        seed,
        tol,
        triples_evaluated: triples.len(),
        subsampled,
        faithful_fraction: faithful as f64 / n_samples as f64,
        markov_violation_count: markov_violations.len(),
        faithful_flags,
        markov_violations,
        faithfulness_violations,
        borderline,
    })
}
