//! Gaussian quadrature rules computed by the Golub–Welsch eigenvalue method.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Nodes and weights of a one-dimensional quadrature rule.
#[derive(Debug, Clone)]
pub struct QuadratureRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `Σ_i w_i f(x_i)`.
    pub fn integrate(&self, mut f: impl FnMut(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(self.weights.iter())
            .map(|(&x, &w)| w * f(x))
            .sum()
    }
}

/// Builds a rule from the symmetric tridiagonal Jacobi matrix of an
/// orthogonal-polynomial family: eigenvalues are the nodes, and the squared
/// first components of the normalized eigenvectors (times the weight
/// function's total mass `mu0`) are the weights.
fn golub_welsch(n: usize, off_diagonal: impl Fn(usize) -> f64, mu0: f64) -> QuadratureRule {
    let mut jacobi = DMatrix::zeros(n, n);
    for i in 1..n {
        let b = off_diagonal(i);
        jacobi[(i - 1, i)] = b;
        jacobi[(i, i - 1)] = b;
    }
    let eig = jacobi.symmetric_eigen();
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|k| {
            let first = eig.eigenvectors[(0, k)];
            (eig.eigenvalues[k], mu0 * first * first)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));

    // Both families used here are symmetric about zero; enforce that exactly
    // so downstream consumers see bit-identical mirrored nodes.
    let mut nodes: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let mut weights: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    for i in 0..n / 2 {
        let j = n - 1 - i;
        let s = 0.5 * (nodes[j] - nodes[i]);
        nodes[i] = -s;
        nodes[j] = s;
        let w = 0.5 * (weights[i] + weights[j]);
        weights[i] = w;
        weights[j] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    let total: f64 = weights.iter().sum();
    let scale = mu0 / total;
    for w in &mut weights {
        *w *= scale;
    }
    QuadratureRule { nodes, weights }
}

/// Gauss–Hermite rule in the probabilists' normalization: for a standard
/// normal `Z`, `E[g(Z)] ≈ Σ_i w_i g(x_i)` with `Σ w_i = 1`.
///
/// Supports `1 ≤ n ≤ 64`; the rule is exact for polynomials up to degree
/// `2n − 1`. For `n = 3` the nodes are `−√3, 0, √3` with weights
/// `1/6, 2/3, 1/6`.
pub fn gauss_hermite(n: usize) -> Result<QuadratureRule> {
    if n == 0 || n > 64 {
        return Err(Error::input(format!(
            "gauss_hermite supports 1..=64 nodes, got {n}"
        )));
    }
    // Probabilists' Hermite recurrence He_{k+1} = x He_k − k He_{k−1}
    // gives off-diagonal entries √k and total mass 1.
    Ok(golub_welsch(n, |i| (i as f64).sqrt(), 1.0))
}

/// Gauss–Legendre rule on `[−1, 1]`: `∫_{−1}^{1} f ≈ Σ_i w_i f(x_i)` with
/// `Σ w_i = 2`, exact for polynomials up to degree `2n − 1`.
pub fn gauss_legendre(n: usize) -> Result<QuadratureRule> {
    if n == 0 || n > 1024 {
        return Err(Error::input(format!(
            "gauss_legendre supports 1..=1024 nodes, got {n}"
        )));
    }
    Ok(golub_welsch(
        n,
        |i| {
            let i = i as f64;
            i / (4.0 * i * i - 1.0).sqrt()
        },
        2.0,
    ))
}
