//! Exact conditional-independence decisions for regular Gaussians.
//!
//! Whether `i` and `j` are independent given `Z` is read off the inverse
//! of the covariance submatrix over `{i, j} ∪ Z`: the normalized partial
//! correlation `-P_ij / sqrt(P_ii P_jj)` vanishes exactly when the
//! conditional covariance does. The normalized form is dimensionless, so
//! one tolerance serves distributions of any scale.

use serde::Serialize;
use thiserror::Error;

use crate::gaussian::{self, Gaussian, GaussianError};
use crate::graph::Vertex;

/// Default decision threshold on `|partial_corr|`.
pub const DEFAULT_TOLERANCE: f64 = 1e-7;
/// Conclusions of axiom instances are only failed beyond this multiple of
/// the hypothesis tolerance, keeping float noise at the decision boundary
/// out of the violation list.
pub const CONCLUSION_SLACK: f64 = 10.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CiError {
    #[error(transparent)]
    Gaussian(#[from] GaussianError),
    #[error("query indices overlap: {0}")]
    Overlap(Vertex),
    #[error("axiom enumeration is limited to 6 variables, distribution has {0}")]
    TooManyVariables(usize),
}

/// Outcome of one conditional-independence test.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CiVerdict {
    pub i: Vertex,
    pub j: Vertex,
    #[serde(rename = "Z")]
    pub z: Vec<Vertex>,
    pub partial_corr: f64,
    pub independent: bool,
    #[serde(skip)]
    pub tolerance: f64,
}

/// Partial correlation of `i` and `j` given `Z`; independent iff its
/// magnitude stays below `tol`.
pub fn ci_test(
    dist: &Gaussian,
    i: Vertex,
    j: Vertex,
    z: &[Vertex],
    tol: f64,
) -> Result<CiVerdict, CiError> {
    if i == j {
        return Err(CiError::Overlap(i));
    }
    if let Some(&v) = z.iter().find(|&&v| v == i || v == j) {
        return Err(CiError::Overlap(v));
    }
    let mut z = z.to_vec();
    z.sort_unstable();
    z.dedup();
    let partial_corr = partial_correlation(dist, i, j, &z)?;
    Ok(CiVerdict { i, j, z, partial_corr, independent: partial_corr.abs() < tol, tolerance: tol })
}

fn partial_correlation(dist: &Gaussian, i: Vertex, j: Vertex, z: &[Vertex]) -> Result<f64, CiError> {
    let mut scope: Vec<Vertex> = z.to_vec();
    scope.push(i);
    scope.push(j);
    scope.sort_unstable();
    let pos = dist.positions_of(&scope)?;
    let sigma = gaussian::submatrix(dist.covariance(), &pos, &pos);
    let p = gaussian::inverse(&sigma)?;
    let pi = scope.binary_search(&i).expect("i in scope");
    let pj = scope.binary_search(&j).expect("j in scope");
    // The factored inverse need not be exactly symmetric; reading the
    // upper-triangle entry makes the verdict exactly symmetric in (i, j).
    // +0.0 keeps an exact zero from surfacing as -0.0 in records.
    let off = p[(pi.min(pj), pi.max(pj))];
    Ok(-off / (p[(pi, pi)] * p[(pj, pj)]).sqrt() + 0.0)
}

/// Block independence by pairwise reduction: `I` and `J` are independent
/// given `K` iff every cross pair is. Vacuously true when either side is
/// empty.
pub fn ci_test_sets(
    dist: &Gaussian,
    i_set: &[Vertex],
    j_set: &[Vertex],
    k_set: &[Vertex],
    tol: f64,
) -> Result<bool, CiError> {
    for &i in i_set {
        for &j in j_set {
            if !ci_test(dist, i, j, k_set, tol)?.independent {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Axiom {
    Symmetry,
    Decomposition,
    Intersection,
    WeakTransitivity,
}

/// Axiom instance whose hypotheses hold at the base tolerance while the
/// conclusion fails even at `CONCLUSION_SLACK` times that tolerance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AxiomViolation {
    pub axiom: Axiom,
    pub i: Vertex,
    pub j: Vertex,
    pub aux: Option<Vertex>,
    pub given: Vec<Vertex>,
}

/// Enumerate all instances of the regular-Gaussian independence axioms
/// (symmetry, decomposition, intersection, weak transitivity) over
/// singleton arguments and every conditioning subset, and report the
/// instances that fail numerically. Expected to come back empty.
pub fn axiom_check(dist: &Gaussian, tol: f64) -> Result<Vec<AxiomViolation>, CiError> {
    let vars = dist.labels().to_vec();
    if vars.len() > 6 {
        return Err(CiError::TooManyVariables(vars.len()));
    }
    let strict = tol;
    let loose = CONCLUSION_SLACK * tol;
    let mut out = Vec::new();
    let indep = |i: Vertex, j: Vertex, z: &[Vertex], at: f64| -> Result<bool, CiError> {
        Ok(partial_correlation(dist, i, j, z)?.abs() < at)
    };
    for (a, &i) in vars.iter().enumerate() {
        for &j in vars.iter().skip(a + 1) {
            let rest: Vec<Vertex> = vars.iter().copied().filter(|&v| v != i && v != j).collect();
            for k_mask in 0..(1usize << rest.len()) {
                let k: Vec<Vertex> = rest
                    .iter()
                    .enumerate()
                    .filter(|(b, _)| k_mask >> b & 1 == 1)
                    .map(|(_, &v)| v)
                    .collect();
                let others: Vec<Vertex> =
                    rest.iter().copied().filter(|v| !k.contains(v)).collect();

                if indep(i, j, &k, strict)? && !indep(j, i, &k, loose)? {
                    out.push(AxiomViolation { axiom: Axiom::Symmetry, i, j, aux: None, given: k.clone() });
                }
                for &u in &others {
                    // Decomposition: i ⊥ {j,u} | K implies i ⊥ j | K.
                    if ci_test_sets(dist, &[i], &[j, u], &k, strict)? && !indep(i, j, &k, loose)? {
                        out.push(AxiomViolation {
                            axiom: Axiom::Decomposition,
                            i,
                            j,
                            aux: Some(u),
                            given: k.clone(),
                        });
                    }
                    // Intersection: i ⊥ j | K∪{u} and i ⊥ u | K∪{j}
                    // imply i ⊥ {j,u} | K.
                    let mut k_u = k.clone();
                    k_u.push(u);
                    let mut k_j = k.clone();
                    k_j.push(j);
                    if indep(i, j, &k_u, strict)?
                        && indep(i, u, &k_j, strict)?
                        && !(indep(i, j, &k, loose)? && indep(i, u, &k, loose)?)
                    {
                        out.push(AxiomViolation {
                            axiom: Axiom::Intersection,
                            i,
                            j,
                            aux: Some(u),
                            given: k.clone(),
                        });
                    }
                    // Weak transitivity: i ⊥ j | K and i ⊥ j | K∪{u}
                    // imply i ⊥ u | K or u ⊥ j | K.
                    if indep(i, j, &k, strict)?
                        && indep(i, j, &k_u, strict)?
                        && !indep(i, u, &k, loose)?
                        && !indep(u, j, &k, loose)?
                    {
                        out.push(AxiomViolation {
                            axiom: Axiom::WeakTransitivity,
                            i,
                            j,
                            aux: Some(u),
                            given: k.clone(),
                        });
                    }
                }
            }
        }
    }
    Ok(out)
}
