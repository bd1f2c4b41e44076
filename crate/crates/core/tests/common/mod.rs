//! Shared helpers and independent oracles for the integration tests.
//! Everything here deliberately avoids the library's own code paths where
//! it serves as a cross-check.
//!
//! Each test binary compiles this module separately, so not every helper
//! is used by every binary.
#![allow(dead_code)]

use std::collections::BTreeSet;

use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use chaingauss::graph::{ChainGraph, Vertex};

/// Determinant by cofactor expansion along the first row. Exponential;
/// test oracle for matrices up to 5x5.
pub fn cofactor_det(m: &DMatrix<f64>) -> f64 {
    let n = m.nrows();
    assert!(n <= 6, "cofactor oracle is for tiny matrices");
    if n == 0 {
        return 1.0;
    }
    if n == 1 {
        return m[(0, 0)];
    }
    let mut acc = 0.0;
    for j in 0..n {
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        acc += sign * m[(0, j)] * cofactor_det(&minor(m, 0, j));
    }
    acc
}

/// Inverse via the adjugate: `(A^-1)_ij = (-1)^(i+j) det(minor(A, j, i)) / det(A)`.
pub fn cofactor_inverse(m: &DMatrix<f64>) -> DMatrix<f64> {
    let n = m.nrows();
    let d = cofactor_det(m);
    DMatrix::from_fn(n, n, |i, j| {
        let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
        sign * cofactor_det(&minor(m, j, i)) / d
    })
}

fn minor(m: &DMatrix<f64>, drop_row: usize, drop_col: usize) -> DMatrix<f64> {
    let n = m.nrows();
    DMatrix::from_fn(n - 1, n - 1, |i, j| {
        let r = if i < drop_row { i } else { i + 1 };
        let c = if j < drop_col { j } else { j + 1 };
        m[(r, c)]
    })
}

/// Well-conditioned random symmetric positive definite matrix (diagonal
/// dominance with margin).
pub fn random_spd(n: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..i {
            let x = rng.random_range(-1.0..1.0);
            m[(i, j)] = x;
            m[(j, i)] = x;
        }
        m[(i, i)] = n as f64 - 1.0 + rng.random_range(0.5..2.0);
    }
    m
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Exhaustive complex search by brute-force path enumeration: every
/// sequence of distinct vertices is tested directly against the induced
/// edge pattern. Quadratic in nothing but patience; fine for n <= 4.
pub fn brute_force_complexes(g: &ChainGraph) -> BTreeSet<(Vertex, Vec<Vertex>, Vertex)> {
    let n = g.vertex_count();
    let mut found = BTreeSet::new();
    let mut seq: Vec<Vertex> = Vec::new();
    let mut used = vec![false; n + 1];
    fn extend(
        g: &ChainGraph,
        seq: &mut Vec<Vertex>,
        used: &mut Vec<bool>,
        found: &mut BTreeSet<(Vertex, Vec<Vertex>, Vertex)>,
    ) {
        if seq.len() >= 3 && sequence_is_complex(g, seq) {
            let (left, right) = (seq[0], *seq.last().unwrap());
            let region: Vec<Vertex> = seq[1..seq.len() - 1].to_vec();
            if left < right {
                found.insert((left, region, right));
            } else {
                let mut rev = region;
                rev.reverse();
                found.insert((right, rev, left));
            }
        }
        if seq.len() == g.vertex_count() {
            return;
        }
        for v in 1..=g.vertex_count() {
            if !used[v] {
                used[v] = true;
                seq.push(v);
                extend(g, seq, used, found);
                seq.pop();
                used[v] = false;
            }
        }
    }
    extend(g, &mut seq, &mut used, &mut found);
    found
}

fn sequence_is_complex(g: &ChainGraph, seq: &[Vertex]) -> bool {
    let l = seq.len();
    if !g.has_directed(seq[0], seq[1]) || !g.has_directed(seq[l - 1], seq[l - 2]) {
        return false;
    }
    for k in 1..l - 2 {
        if !g.has_undirected(seq[k], seq[k + 1]) {
            return false;
        }
    }
    // No edges beyond the pattern: count adjacencies among the vertices.
    let mut actual = 0usize;
    for (a_idx, &a) in seq.iter().enumerate() {
        for &b in &seq[a_idx + 1..] {
            if g.has_undirected(a, b) {
                actual += 1;
            }
            if g.has_directed(a, b) {
                actual += 1;
            }
            if g.has_directed(b, a) {
                actual += 1;
            }
        }
    }
    // Pattern: two arrows plus l - 3 undirected region links. Any
    // reversed/undirected variant of a required edge was already
    // rejected above, so matching counts mean matching edge sets.
    actual == 2 + (l - 3)
}

