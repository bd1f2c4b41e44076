//! Dense symmetric linear algebra and the Gaussian conditioning and
//! composition calculus in precision form, up to assembling the joint
//! distribution identified by a parameter set.
//!
//! Conditioning a joint `N(mu, Omega^{-1})` over `I ∪ J` on `x_I` gives
//! `N(delta x_I + gamma, epsilon^{-1})` with
//! `delta = -(Omega_{J,J})^{-1} Omega_{J,I}`,
//! `gamma = mu_J + (Omega_{J,J})^{-1} Omega_{J,I} mu_I` and
//! `epsilon = Omega_{J,J}`. Composing a marginal `N(alpha, beta^{-1})`
//! with such a conditional yields the joint with mean
//! `(alpha, delta alpha + gamma)`, precision blocks
//! `[[beta + delta^T epsilon delta, -delta^T epsilon], [-epsilon delta, epsilon]]`
//! and covariance blocks
//! `[[beta^{-1}, beta^{-1} delta^T], [delta beta^{-1}, epsilon^{-1} + delta beta^{-1} delta^T]]`.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::graph::{ChainGraph, Vertex};
use crate::params::{NdParameters, ParamViolation, ParamsError};

/// Max-abs tolerance for the cached covariance * precision product,
/// relative to the product of the two matrix scales.
pub const INVERSE_RESIDUAL_TOL: f64 = 1e-10;
/// Relative pivot floor of the positive-definiteness factorization.
pub const PD_PIVOT_TOL: f64 = 1e-12;
/// Relative symmetry slack accepted before symmetrizing inputs.
pub const SYMMETRY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GaussianError {
    #[error("matrix is singular within tolerance")]
    Singular,
    #[error("matrix is not symmetric positive definite")]
    NotPositiveDefinite,
    #[error("{0}")]
    ShapeMismatch(String),
    #[error("labels must be strictly increasing and non-empty")]
    BadLabels,
    #[error("covariance/precision product deviates from identity by {0:.3e}")]
    IllConditioned(f64),
    #[error("vertex {0} is not an index of this distribution")]
    UnknownIndex(Vertex),
    #[error("parameters do not satisfy the block constraints: {0:?}")]
    InvalidParameters(Vec<ParamViolation>),
    #[error(transparent)]
    Params(#[from] ParamsError),
}

pub fn det(m: &DMatrix<f64>) -> f64 {
    m.determinant()
}

pub fn inverse(m: &DMatrix<f64>) -> Result<DMatrix<f64>, GaussianError> {
    m.clone().try_inverse().ok_or(GaussianError::Singular)
}

/// Inverse with one Newton correction step, `X' = X (2I - M X)`, which
/// squares the factorization residual. Worth the two extra multiplies
/// wherever an inverse feeds a tolerance-gated contract.
pub(crate) fn refined_inverse(m: &DMatrix<f64>) -> Result<DMatrix<f64>, GaussianError> {
    let x = inverse(m)?;
    let n = m.nrows();
    let correction = DMatrix::identity(n, n) * 2.0 - m * &x;
    Ok(&x * correction)
}

pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0f64, |acc, &x| acc.max(x.abs()))
}

fn max_asymmetry(m: &DMatrix<f64>) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..m.nrows() {
        for j in (i + 1)..m.ncols() {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}

/// Symmetric positive definiteness via a Cholesky factorization whose
/// pivots must exceed `PD_PIVOT_TOL` relative to the largest diagonal
/// entry. Asymmetric or non-finite input fails the check.
pub fn is_positive_definite(m: &DMatrix<f64>) -> bool {
    if !m.is_square() || m.iter().any(|x| !x.is_finite()) {
        return false;
    }
    let n = m.nrows();
    if n == 0 {
        return true;
    }
    let scale = (0..n).fold(0.0f64, |acc, i| acc.max(m[(i, i)].abs()));
    if max_asymmetry(m) > SYMMETRY_TOL * scale.max(1.0) {
        return false;
    }
    let floor = PD_PIVOT_TOL * scale;
    let mut l = vec![vec![0.0f64; n]; n];
    for j in 0..n {
        let mut pivot = m[(j, j)];
        for lk in &l[j][..j] {
            pivot -= lk * lk;
        }
        if pivot.is_nan() || pivot <= floor {
            return false;
        }
        let root = pivot.sqrt();
        l[j][j] = root;
        for i in (j + 1)..n {
            let value = m[(i, j)]
                - l[i][..j].iter().zip(&l[j][..j]).map(|(a, b)| a * b).sum::<f64>();
            l[i][j] = value / root;
        }
    }
    true
}

/// Regular Gaussian distribution over a sorted set of vertex labels, kept
/// in both precision and covariance form. Both matrices are fixed at
/// construction and consistent to `INVERSE_RESIDUAL_TOL`.
#[derive(Debug, Clone, PartialEq)]
pub struct Gaussian {
    labels: Vec<Vertex>,
    mean: DVector<f64>,
    precision: DMatrix<f64>,
    covariance: DMatrix<f64>,
}

impl Gaussian {
    pub fn from_precision(
        labels: Vec<Vertex>,
        mean: DVector<f64>,
        precision: DMatrix<f64>,
    ) -> Result<Self, GaussianError> {
        check_labels(&labels)?;
        check_shape(&labels, &mean, &precision)?;
        let precision = accept_symmetric(precision)?;
        let covariance = symmetrize(&refined_inverse(&precision)?);
        Self::from_parts(labels, mean, precision, covariance)
    }

    pub fn from_covariance(
        labels: Vec<Vertex>,
        mean: DVector<f64>,
        covariance: DMatrix<f64>,
    ) -> Result<Self, GaussianError> {
        check_labels(&labels)?;
        check_shape(&labels, &mean, &covariance)?;
        let covariance = accept_symmetric(covariance)?;
        let precision = symmetrize(&refined_inverse(&covariance)?);
        Self::from_parts(labels, mean, precision, covariance)
    }

    /// Internal constructor: verifies positive definiteness of the
    /// precision and the identity residual of the cached pair. The
    /// residual is scale-dependent, so the tolerance is taken relative to
    /// the product of the two matrix scales.
    pub(crate) fn from_parts(
        labels: Vec<Vertex>,
        mean: DVector<f64>,
        precision: DMatrix<f64>,
        covariance: DMatrix<f64>,
    ) -> Result<Self, GaussianError> {
        if !is_positive_definite(&precision) {
            return Err(GaussianError::NotPositiveDefinite);
        }
        let n = labels.len();
        let residual = max_abs(&(&covariance * &precision - DMatrix::identity(n, n)));
        let scale = (max_abs(&covariance) * max_abs(&precision)).max(1.0);
        if residual > INVERSE_RESIDUAL_TOL * scale {
            return Err(GaussianError::IllConditioned(residual / scale));
        }
        Ok(Gaussian { labels, mean, precision, covariance })
    }

    pub fn labels(&self) -> &[Vertex] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn precision(&self) -> &DMatrix<f64> {
        &self.precision
    }

    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.covariance
    }

    /// Row/column position of a vertex label.
    pub fn index_of(&self, v: Vertex) -> Result<usize, GaussianError> {
        self.labels.binary_search(&v).map_err(|_| GaussianError::UnknownIndex(v))
    }

    pub fn positions_of(&self, vs: &[Vertex]) -> Result<Vec<usize>, GaussianError> {
        vs.iter().map(|&v| self.index_of(v)).collect()
    }
}

fn check_labels(labels: &[Vertex]) -> Result<(), GaussianError> {
    if labels.is_empty() || labels.windows(2).any(|w| w[0] >= w[1]) {
        return Err(GaussianError::BadLabels);
    }
    Ok(())
}

fn check_shape(
    labels: &[Vertex],
    mean: &DVector<f64>,
    matrix: &DMatrix<f64>,
) -> Result<(), GaussianError> {
    let n = labels.len();
    if mean.len() != n || matrix.nrows() != n || matrix.ncols() != n {
        return Err(GaussianError::ShapeMismatch(format!(
            "expected {n} labels, mean of length {} and {}x{} matrix",
            mean.len(),
            matrix.nrows(),
            matrix.ncols()
        )));
    }
    Ok(())
}

fn accept_symmetric(m: DMatrix<f64>) -> Result<DMatrix<f64>, GaussianError> {
    let scale = max_abs(&m).max(1.0);
    if max_asymmetry(&m) > SYMMETRY_TOL * scale {
        return Err(GaussianError::NotPositiveDefinite);
    }
    Ok(symmetrize(&m))
}

pub fn submatrix(m: &DMatrix<f64>, rows: &[usize], cols: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), cols.len(), |i, j| m[(rows[i], cols[j])])
}

fn subvector(v: &DVector<f64>, idx: &[usize]) -> DVector<f64> {
    DVector::from_fn(idx.len(), |i, _| v[idx[i]])
}

/// Wire form: index labels, mean array and row-major precision matrix.
/// The covariance is re-derived on load.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct GaussianDoc {
    pub labels: Vec<Vertex>,
    pub mean: Vec<f64>,
    pub precision: Vec<Vec<f64>>,
}

impl Gaussian {
    pub fn to_doc(&self) -> GaussianDoc {
        GaussianDoc {
            labels: self.labels.clone(),
            mean: self.mean.iter().copied().collect(),
            precision: (0..self.precision.nrows())
                .map(|i| (0..self.precision.ncols()).map(|j| self.precision[(i, j)]).collect())
                .collect(),
        }
    }

    pub fn from_doc(doc: &GaussianDoc) -> Result<Self, GaussianError> {
        let n = doc.labels.len();
        if doc.precision.len() != n || doc.precision.iter().any(|r| r.len() != n) {
            return Err(GaussianError::ShapeMismatch(format!(
                "precision must be {n}x{n} row-major"
            )));
        }
        let precision = DMatrix::from_fn(n, n, |i, j| doc.precision[i][j]);
        Gaussian::from_precision(doc.labels.clone(), DVector::from_vec(doc.mean.clone()), precision)
    }
}

/// Conditional `x_target | x_rest` of a joint Gaussian as the matrix
/// triple `(delta, gamma, epsilon)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearConditional {
    given: Vec<Vertex>,
    target: Vec<Vertex>,
    delta: DMatrix<f64>,
    gamma: DVector<f64>,
    epsilon: DMatrix<f64>,
}

impl LinearConditional {
    pub fn new(
        given: Vec<Vertex>,
        target: Vec<Vertex>,
        delta: DMatrix<f64>,
        gamma: DVector<f64>,
        epsilon: DMatrix<f64>,
    ) -> Result<Self, GaussianError> {
        check_labels(&target)?;
        if !given.is_empty() {
            check_labels(&given)?;
        }
        if target.iter().any(|t| given.binary_search(t).is_ok()) {
            return Err(GaussianError::ShapeMismatch(
                "target overlaps conditioning set".to_string(),
            ));
        }
        let (j, i) = (target.len(), given.len());
        if delta.nrows() != j || delta.ncols() != i || gamma.len() != j {
            return Err(GaussianError::ShapeMismatch(format!(
                "delta must be {j}x{i} and gamma length {j}"
            )));
        }
        if epsilon.nrows() != j || epsilon.ncols() != j || !is_positive_definite(&epsilon) {
            return Err(GaussianError::NotPositiveDefinite);
        }
        Ok(LinearConditional { given, target, delta, gamma, epsilon })
    }

    pub fn given(&self) -> &[Vertex] {
        &self.given
    }

    pub fn target(&self) -> &[Vertex] {
        &self.target
    }

    pub fn delta(&self) -> &DMatrix<f64> {
        &self.delta
    }

    pub fn gamma(&self) -> &DVector<f64> {
        &self.gamma
    }

    pub fn epsilon(&self) -> &DMatrix<f64> {
        &self.epsilon
    }
}

/// Condition a joint distribution on everything outside `target`.
pub fn condition(joint: &Gaussian, target: &[Vertex]) -> Result<LinearConditional, GaussianError> {
    let target_sorted: Vec<Vertex> = {
        let mut t = target.to_vec();
        t.sort_unstable();
        t.dedup();
        t
    };
    if target_sorted.len() != target.len() {
        return Err(GaussianError::ShapeMismatch("duplicate target vertices".to_string()));
    }
    let t_pos = joint.positions_of(&target_sorted)?;
    let given: Vec<Vertex> = joint
        .labels()
        .iter()
        .copied()
        .filter(|v| target_sorted.binary_search(v).is_err())
        .collect();
    let g_pos = joint.positions_of(&given)?;

    let omega = joint.precision();
    let epsilon = submatrix(omega, &t_pos, &t_pos);
    let omega_ji = submatrix(omega, &t_pos, &g_pos);
    let eps_inv = inverse(&epsilon)?;
    let delta = -(&eps_inv * &omega_ji);
    let mu_j = subvector(joint.mean(), &t_pos);
    let mu_i = subvector(joint.mean(), &g_pos);
    let gamma = &mu_j - &delta * &mu_i;
    LinearConditional::new(given, target_sorted, delta, gamma, epsilon)
}

/// Multiply a marginal over the conditioning set with a conditional,
/// producing the joint over the union (labels merged into sorted order).
/// The covariance is assembled from its block form rather than by
/// inverting the precision.
pub fn compose(marginal: &Gaussian, cond: &LinearConditional) -> Result<Gaussian, GaussianError> {
    if marginal.labels() != cond.given() {
        return Err(GaussianError::ShapeMismatch(
            "marginal labels must equal the conditioning set".to_string(),
        ));
    }
    let beta = marginal.precision();
    let alpha = marginal.mean();
    let (delta, epsilon) = (cond.delta(), cond.epsilon());
    let ni = marginal.len();
    let nj = cond.target().len();
    let n = ni + nj;

    let eps_delta = epsilon * delta;
    let block_11 = symmetrize(&(beta + delta.transpose() * &eps_delta));
    let block_12 = -eps_delta.transpose();
    let cov_11 = marginal.covariance().clone();
    let cov_12 = &cov_11 * delta.transpose();
    let cov_22 = symmetrize(&(inverse(epsilon)? + delta * &cov_12));

    let mut precision = DMatrix::zeros(n, n);
    let mut covariance = DMatrix::zeros(n, n);
    precision.view_mut((0, 0), (ni, ni)).copy_from(&block_11);
    precision.view_mut((0, ni), (ni, nj)).copy_from(&block_12);
    precision.view_mut((ni, 0), (nj, ni)).copy_from(&block_12.transpose());
    precision.view_mut((ni, ni), (nj, nj)).copy_from(epsilon);
    covariance.view_mut((0, 0), (ni, ni)).copy_from(&cov_11);
    covariance.view_mut((0, ni), (ni, nj)).copy_from(&cov_12);
    covariance.view_mut((ni, 0), (nj, ni)).copy_from(&cov_12.transpose());
    covariance.view_mut((ni, ni), (nj, nj)).copy_from(&cov_22);

    let mut mean = DVector::zeros(n);
    mean.rows_mut(0, ni).copy_from(alpha);
    mean.rows_mut(ni, nj).copy_from(&(delta * alpha + cond.gamma()));

    // Stacked order is (given, target); permute everything into sorted
    // label order.
    let stacked: Vec<Vertex> = cond.given().iter().chain(cond.target()).copied().collect();
    let mut labels = stacked.clone();
    labels.sort_unstable();
    let perm: Vec<usize> = labels
        .iter()
        .map(|v| stacked.iter().position(|w| w == v).expect("same multiset"))
        .collect();
    let precision = DMatrix::from_fn(n, n, |i, j| precision[(perm[i], perm[j])]);
    let covariance = DMatrix::from_fn(n, n, |i, j| covariance[(perm[i], perm[j])]);
    let mean = DVector::from_fn(n, |i, _| mean[perm[i]]);
    Gaussian::from_parts(labels, mean, precision, covariance)
}

/// Marginal over a subset of the labels: restrict the mean and covariance,
/// re-derive the precision.
pub fn marginal(dist: &Gaussian, subset: &[Vertex]) -> Result<Gaussian, GaussianError> {
    let mut keep = subset.to_vec();
    keep.sort_unstable();
    keep.dedup();
    let pos = dist.positions_of(&keep)?;
    let covariance = symmetrize(&submatrix(dist.covariance(), &pos, &pos));
    let mean = subvector(dist.mean(), &pos);
    let precision = symmetrize(&refined_inverse(&covariance)?);
    Gaussian::from_parts(keep, mean, precision, covariance)
}

/// Assemble the joint distribution identified by a parameter set: walk the
/// components in their well-ordering, turn each block pair into a
/// conditional on the component's parents (zero-padded over unrelated
/// earlier vertices), and fold with [`compose`].
pub fn build_joint(g: &ChainGraph, params: &NdParameters) -> Result<Gaussian, GaussianError> {
    let violations = crate::params::validate_params(g, params)?;
    if !violations.is_empty() {
        return Err(GaussianError::InvalidParameters(violations));
    }
    let mut joint: Option<Gaussian> = None;
    for comp in params.components() {
        let mu_b = DVector::from_iterator(
            comp.vertices.len(),
            comp.vertices.iter().map(|&v| params.mu()[v - 1]),
        );
        let next = match joint {
            None => Gaussian::from_precision(comp.vertices.clone(), mu_b, comp.omega_bb.clone())?,
            Some(prev) => {
                let bb_inv = inverse(&comp.omega_bb)?;
                let delta = -(&bb_inv * &comp.omega_bp);
                let mu_pa = DVector::from_iterator(
                    comp.parents.len(),
                    comp.parents.iter().map(|&v| params.mu()[v - 1]),
                );
                let gamma = &mu_b - &delta * &mu_pa;
                // Zero-pad delta over earlier vertices that are not parents.
                let mut padded = DMatrix::zeros(comp.vertices.len(), prev.len());
                for (col, &pa) in comp.parents.iter().enumerate() {
                    let at = prev.index_of(pa)?;
                    padded.column_mut(at).copy_from(&delta.column(col));
                }
                let cond = LinearConditional::new(
                    prev.labels().to_vec(),
                    comp.vertices.clone(),
                    padded,
                    gamma,
                    comp.omega_bb.clone(),
                )?;
                compose(&prev, &cond)?
            }
        };
        joint = Some(next);
    }
    joint.ok_or_else(|| GaussianError::ShapeMismatch("graph has no vertices".to_string()))
}
