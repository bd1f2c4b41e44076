//! The free-parameter space of distributions factorizing over a chain
//! graph: a mean vector plus, per connectivity component, the precision
//! blocks over the component and over its parents. Off-block entries are
//! pinned to zero for non-adjacent vertex pairs and the within-component
//! block must be symmetric positive definite.

use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gaussian::{self, Gaussian, GaussianError};
use crate::graph::{ChainGraph, Vertex};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParamsError {
    #[error("parameter shape mismatch: {0}")]
    ShapeMismatch(String),
}

/// Constraint violation found by [`validate_params`].
#[derive(Debug, Clone, PartialEq)]
pub enum ParamViolation {
    /// Within-component block entry differs from its transpose.
    NotSymmetric { component: usize, row: Vertex, col: Vertex },
    /// Non-zero coupling between non-adjacent vertices of one component.
    NonzeroWithinComponent { component: usize, row: Vertex, col: Vertex, value: f64 },
    /// Non-zero coupling to a non-adjacent parent.
    NonzeroParentEntry { component: usize, row: Vertex, parent: Vertex, value: f64 },
    /// Within-component block fails the positive-definiteness check.
    NotPositiveDefinite { component: usize },
}

/// Per-component parameter blocks. `omega_bb` is indexed by `vertices`
/// (both axes), `omega_bp` by `vertices` x `parents`.
#[derive(Debug, Clone, PartialEq)]
pub struct ComponentParams {
    pub vertices: Vec<Vertex>,
    pub parents: Vec<Vertex>,
    pub omega_bb: DMatrix<f64>,
    pub omega_bp: DMatrix<f64>,
}

/// Mean vector plus per-component precision blocks, in component
/// well-order.
#[derive(Debug, Clone, PartialEq)]
pub struct NdParameters {
    mu: Vec<f64>,
    components: Vec<ComponentParams>,
}

impl NdParameters {
    /// Assemble parameters from raw blocks given in component well-order.
    /// Only shapes are checked here; constraint checking is
    /// [`validate_params`].
    pub fn from_blocks(
        g: &ChainGraph,
        mu: Vec<f64>,
        blocks: Vec<(DMatrix<f64>, DMatrix<f64>)>,
    ) -> Result<Self, ParamsError> {
        let decomp = g.components();
        if mu.len() != g.vertex_count() {
            return Err(ParamsError::ShapeMismatch(format!(
                "mean has length {}, graph has {} vertices",
                mu.len(),
                g.vertex_count()
            )));
        }
        if blocks.len() != decomp.len() {
            return Err(ParamsError::ShapeMismatch(format!(
                "{} block pairs for {} components",
                blocks.len(),
                decomp.len()
            )));
        }
        let mut components = Vec::with_capacity(blocks.len());
        for (members, (omega_bb, omega_bp)) in decomp.components().iter().zip(blocks) {
            let parents: Vec<Vertex> = g
                .parents_of_set(members)
                .expect("component members are in range")
                .into_iter()
                .collect();
            let (nb, np) = (members.len(), parents.len());
            if omega_bb.nrows() != nb || omega_bb.ncols() != nb {
                return Err(ParamsError::ShapeMismatch(format!(
                    "component {members:?}: omega_bb is {}x{}, want {nb}x{nb}",
                    omega_bb.nrows(),
                    omega_bb.ncols()
                )));
            }
            if omega_bp.nrows() != nb || omega_bp.ncols() != np {
                return Err(ParamsError::ShapeMismatch(format!(
                    "component {members:?}: omega_bp is {}x{}, want {nb}x{np}",
                    omega_bp.nrows(),
                    omega_bp.ncols()
                )));
            }
            components.push(ComponentParams {
                vertices: members.clone(),
                parents,
                omega_bb,
                omega_bp,
            });
        }
        Ok(NdParameters { mu, components })
    }

    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    pub fn components(&self) -> &[ComponentParams] {
        &self.components
    }

    /// Largest absolute difference across the mean and all blocks.
    pub fn max_abs_diff(&self, other: &NdParameters) -> f64 {
        let mut worst = 0.0f64;
        for (a, b) in self.mu.iter().zip(&other.mu) {
            worst = worst.max((a - b).abs());
        }
        if self.mu.len() != other.mu.len() || self.components.len() != other.components.len() {
            return f64::INFINITY;
        }
        for (ca, cb) in self.components.iter().zip(&other.components) {
            if ca.vertices != cb.vertices
                || ca.parents != cb.parents
                || ca.omega_bb.shape() != cb.omega_bb.shape()
                || ca.omega_bp.shape() != cb.omega_bp.shape()
            {
                return f64::INFINITY;
            }
            worst = worst.max(gaussian::max_abs(&(&ca.omega_bb - &cb.omega_bb)));
            if ca.omega_bp.ncols() > 0 {
                worst = worst.max(gaussian::max_abs(&(&ca.omega_bp - &cb.omega_bp)));
            }
        }
        worst
    }

    pub fn to_doc(&self) -> NdParametersDoc {
        NdParametersDoc {
            mean: self.mu.clone(),
            components: self
                .components
                .iter()
                .map(|c| ComponentParamsDoc {
                    vertices: c.vertices.clone(),
                    parents: c.parents.clone(),
                    omega_bb: matrix_rows(&c.omega_bb),
                    omega_bp: matrix_rows(&c.omega_bp),
                })
                .collect(),
        }
    }

    pub fn from_doc(doc: &NdParametersDoc) -> Result<Self, ParamsError> {
        let mut components = Vec::with_capacity(doc.components.len());
        for c in &doc.components {
            let omega_bb = rows_to_matrix(&c.omega_bb, c.vertices.len(), c.vertices.len())?;
            let omega_bp = rows_to_matrix(&c.omega_bp, c.vertices.len(), c.parents.len())?;
            components.push(ComponentParams {
                vertices: c.vertices.clone(),
                parents: c.parents.clone(),
                omega_bb,
                omega_bp,
            });
        }
        Ok(NdParameters { mu: doc.mean.clone(), components })
    }
}

/// Wire form: mean array plus dense blocks with explicit index maps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NdParametersDoc {
    pub mean: Vec<f64>,
    pub components: Vec<ComponentParamsDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentParamsDoc {
    pub vertices: Vec<usize>,
    pub parents: Vec<usize>,
    pub omega_bb: Vec<Vec<f64>>,
    pub omega_bp: Vec<Vec<f64>>,
}

fn matrix_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

fn rows_to_matrix(rows: &[Vec<f64>], nrows: usize, ncols: usize) -> Result<DMatrix<f64>, ParamsError> {
    if rows.len() != nrows || rows.iter().any(|r| r.len() != ncols) {
        return Err(ParamsError::ShapeMismatch(format!(
            "expected a {nrows}x{ncols} row-major matrix"
        )));
    }
    Ok(DMatrix::from_fn(nrows, ncols, |i, j| rows[i][j]))
}

/// Number of free parameters: twice the vertex count plus the edge count.
pub fn dimension(g: &ChainGraph) -> usize {
    2 * g.vertex_count() + g.edge_count()
}

/// Sampling window for the diagonally dominant generator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleConfig {
    /// Width of the open interval above `|B| - 1` that diagonal entries
    /// are drawn from.
    pub diag_range: f64,
}

impl Default for SampleConfig {
    fn default() -> Self {
        SampleConfig { diag_range: 2.0 }
    }
}

/// Draw a parameter set from the diagonally dominant region: diagonal
/// entries uniform in the open interval `(|B|-1, |B|-1+diag_range)`, all
/// free off-diagonal and parent-block entries uniform on `[-1, 1)`, the
/// mean uniform on `[-1, 1)`. Hermitian strict diagonal dominance with a
/// positive diagonal guarantees positive definiteness.
///
/// Deterministic per seed; two draws with equal seeds are bit-identical.
pub fn sample(g: &ChainGraph, seed: u64, config: &SampleConfig) -> NdParameters {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_with_rng(g, &mut rng, config)
}

/// Counter scheme for parallel sampling: sample `index` under seed `s`
/// uses the ChaCha stream `index` of the generator seeded with `s`, so
/// any subset of indices can be drawn independently and in any order.
pub fn sample_indexed(g: &ChainGraph, seed: u64, index: u64, config: &SampleConfig) -> NdParameters {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    sample_with_rng(g, &mut rng, config)
}

fn sample_with_rng(g: &ChainGraph, rng: &mut ChaCha8Rng, config: &SampleConfig) -> NdParameters {
    let n = g.vertex_count();
    let mu: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let decomp = g.components();
    let mut blocks = Vec::with_capacity(decomp.len());
    for members in decomp.components() {
        let nb = members.len();
        let lo = (nb - 1) as f64;
        let mut bb = DMatrix::zeros(nb, nb);
        for j in 0..nb {
            // Keep the interval open on the left so dominance is strict.
            bb[(j, j)] = loop {
                let draw = lo + rng.random_range(0.0..config.diag_range);
                if draw > lo {
                    break draw;
                }
            };
        }
        for row in 1..nb {
            for col in 0..row {
                if g.adjacent(members[row], members[col]) {
                    let x = rng.random_range(-1.0..1.0);
                    bb[(row, col)] = x;
                    bb[(col, row)] = x;
                }
            }
        }
        let parents: Vec<Vertex> = g
            .parents_of_set(members)
            .expect("component members are in range")
            .into_iter()
            .collect();
        let mut bp = DMatrix::zeros(nb, parents.len());
        for row in 0..nb {
            for (col, &pa) in parents.iter().enumerate() {
                if g.adjacent(members[row], pa) {
                    bp[(row, col)] = rng.random_range(-1.0..1.0);
                }
            }
        }
        blocks.push((bb, bp));
    }
    NdParameters::from_blocks(g, mu, blocks).expect("shapes follow the decomposition")
}

/// Check the constraint set exactly (symmetry and zero pattern) and
/// positive definiteness numerically. Shape or alignment problems are
/// errors, not violations.
pub fn validate_params(g: &ChainGraph, p: &NdParameters) -> Result<Vec<ParamViolation>, ParamsError> {
    let decomp = g.components();
    if p.mu.len() != g.vertex_count() {
        return Err(ParamsError::ShapeMismatch(format!(
            "mean has length {}, graph has {} vertices",
            p.mu.len(),
            g.vertex_count()
        )));
    }
    if p.components.len() != decomp.len() {
        return Err(ParamsError::ShapeMismatch(format!(
            "{} component blocks for {} components",
            p.components.len(),
            decomp.len()
        )));
    }
    let mut violations = Vec::new();
    for (idx, (comp, members)) in p.components.iter().zip(decomp.components()).enumerate() {
        if comp.vertices != *members {
            return Err(ParamsError::ShapeMismatch(format!(
                "component {idx} lists vertices {:?}, graph has {members:?}",
                comp.vertices
            )));
        }
        let parents: Vec<Vertex> = g
            .parents_of_set(members)
            .expect("component members are in range")
            .into_iter()
            .collect();
        if comp.parents != parents {
            return Err(ParamsError::ShapeMismatch(format!(
                "component {idx} lists parents {:?}, graph has {parents:?}",
                comp.parents
            )));
        }
        let nb = members.len();
        if comp.omega_bb.shape() != (nb, nb) || comp.omega_bp.shape() != (nb, parents.len()) {
            return Err(ParamsError::ShapeMismatch(format!(
                "component {idx}: blocks are {:?} and {:?}, want ({nb},{nb}) and ({nb},{})",
                comp.omega_bb.shape(),
                comp.omega_bp.shape(),
                parents.len()
            )));
        }
        for row in 0..nb {
            for col in (row + 1)..nb {
                if comp.omega_bb[(row, col)] != comp.omega_bb[(col, row)] {
                    violations.push(ParamViolation::NotSymmetric {
                        component: idx,
                        row: members[row],
                        col: members[col],
                    });
                }
                let value = comp.omega_bb[(row, col)];
                if value != 0.0 && !g.adjacent(members[row], members[col]) {
                    violations.push(ParamViolation::NonzeroWithinComponent {
                        component: idx,
                        row: members[row],
                        col: members[col],
                        value,
                    });
                }
            }
        }
        for (row, &member) in members.iter().enumerate() {
            for (col, &pa) in parents.iter().enumerate() {
                let value = comp.omega_bp[(row, col)];
                if value != 0.0 && !g.adjacent(member, pa) {
                    violations.push(ParamViolation::NonzeroParentEntry {
                        component: idx,
                        row: member,
                        parent: pa,
                        value,
                    });
                }
            }
        }
        if !gaussian::is_positive_definite(&comp.omega_bb) {
            violations.push(ParamViolation::NotPositiveDefinite { component: idx });
        }
    }
    Ok(violations)
}

/// Read the parameters back off a joint distribution: for each component,
/// invert the covariance submatrix over the component and its parents and
/// extract the two blocks. On a distribution assembled by
/// [`crate::gaussian::build_joint`] this inverts the construction; the
/// recovered blocks carry float noise at non-adjacent positions.
pub fn recover(g: &ChainGraph, joint: &Gaussian) -> Result<NdParameters, GaussianError> {
    let expect: Vec<Vertex> = g.vertices().collect();
    if joint.labels() != expect.as_slice() {
        return Err(GaussianError::ShapeMismatch(format!(
            "distribution indexes {:?}, graph has vertices 1..={}",
            joint.labels(),
            g.vertex_count()
        )));
    }
    let decomp = g.components();
    let mut blocks = Vec::with_capacity(decomp.len());
    for members in decomp.components() {
        let parents: Vec<Vertex> = g
            .parents_of_set(members)
            .expect("component members are in range")
            .into_iter()
            .collect();
        let mut scope: Vec<Vertex> = members.iter().chain(&parents).copied().collect();
        scope.sort_unstable();
        let local = gaussian::marginal(joint, &scope)?;
        let b_pos = local.positions_of(members)?;
        let pa_pos = local.positions_of(&parents)?;
        let omega_bb = gaussian::submatrix(local.precision(), &b_pos, &b_pos);
        let omega_bp = gaussian::submatrix(local.precision(), &b_pos, &pa_pos);
        blocks.push((omega_bb, omega_bp));
    }
    let mu: Vec<f64> = joint.mean().iter().copied().collect();
    NdParameters::from_blocks(g, mu, blocks)
        .map_err(|e| GaussianError::ShapeMismatch(e.to_string()))
}
