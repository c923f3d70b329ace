//! Gaussian quadrature rules, and moment-preserving reduction of discrete
//! measures on the line.

use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::measures::{AtomicMeasure, FiniteMeasure};

const NEWTON_TOL: f64 = 1e-15;
const NEWTON_MAX_ITER: usize = 100;

/// A quadrature rule: `∫ f dw ≈ Σ weights[i] f(nodes[i])`.
#[derive(Debug, Clone, PartialEq)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

/// Gauss–Legendre rule on `[-1, 1]`, nodes ascending.
pub fn gauss_legendre(n: usize) -> Rule {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let half = n.div_ceil(2);
    for i in 0..half {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..NEWTON_MAX_ITER {
            let (mut p1, mut p2) = (1.0, 0.0);
            for j in 1..=n {
                let p3 = p2;
                p2 = p1;
                p1 = ((2 * j - 1) as f64 * z * p2 - (j - 1) as f64 * p3) / j as f64;
            }
            dp = n as f64 * (z * p1 - p2) / (z * z - 1.0);
            let step = p1 / dp;
            z -= step;
            if step.abs() <= NEWTON_TOL {
                break;
            }
        }
        // recompute the derivative at the converged node
        let (mut p1, mut p2) = (1.0, 0.0);
        for j in 1..=n {
            let p3 = p2;
            p2 = p1;
            p1 = ((2 * j - 1) as f64 * z * p2 - (j - 1) as f64 * p3) / j as f64;
        }
        if z * z != 1.0 {
            dp = n as f64 * (z * p1 - p2) / (z * z - 1.0);
        }
        let w = 2.0 / ((1.0 - z * z) * dp * dp);
        nodes[i] = -z;
        nodes[n - 1 - i] = z;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    Rule { nodes, weights }
}

/// Gauss–Hermite rule for the standard normal weight: `∫ f(x) φ(x) dx`.
/// Weights sum to 1; nodes ascending.
///
/// Nodes start from the eigenvalues of the Jacobi matrix and are polished by
/// Newton steps on the orthonormal Hermite recurrence; weights come from the
/// derivative formula, so tail weights keep full relative accuracy.
pub fn gauss_hermite_normal(n: usize) -> Rule {
    assert!(n >= 1);
    // physicists' convention, x = √2 t afterwards
    let mut jacobi = DMatrix::zeros(n, n);
    for k in 1..n {
        let b = (k as f64 / 2.0).sqrt();
        jacobi[(k - 1, k)] = b;
        jacobi[(k, k - 1)] = b;
    }
    let mut guesses: Vec<f64> = SymmetricEigen::new(jacobi).eigenvalues.iter().copied().collect();
    guesses.sort_by(f64::total_cmp);

    let pim4 = PI.powf(-0.25);
    let nf = n as f64;
    // orthonormal h_n(z) and √(2n)·h_{n−1}(z)
    let eval = |z: f64| -> (f64, f64) {
        let (mut p1, mut p2) = (pim4, 0.0);
        for j in 1..=n {
            let jf = j as f64;
            let p3 = p2;
            p2 = p1;
            p1 = z * (2.0 / jf).sqrt() * p2 - ((jf - 1.0) / jf).sqrt() * p3;
        }
        (p1, (2.0 * nf).sqrt() * p2)
    };
    let mut nodes = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    let sqrt_pi = PI.sqrt();
    for (i, &g) in guesses.iter().enumerate() {
        let mut z = if n % 2 == 1 && i == n / 2 { 0.0 } else { g };
        for _ in 0..NEWTON_MAX_ITER {
            let (p, dp) = eval(z);
            let step = p / dp;
            z -= step;
            if step.abs() <= NEWTON_TOL * z.abs().max(1.0) {
                break;
            }
        }
        let (_, dp) = eval(z);
        nodes.push(z * std::f64::consts::SQRT_2);
        weights.push(2.0 / (dp * dp) / sqrt_pi);
    }
    // symmetrise away the last bits of round-off
    for i in 0..n / 2 {
        let x = 0.5 * (nodes[n - 1 - i] - nodes[i]);
        let w = 0.5 * (weights[i] + weights[n - 1 - i]);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    Rule { nodes, weights }
}

/// Replaces a one-dimensional measure by the `k`-point Gaussian rule of the
/// measure itself, which integrates every polynomial of degree `≤ 2k − 1`
/// exactly (so the first `2k − 1` moments are preserved). Measures with at
/// most `k` atoms are returned unchanged.
///
/// The recurrence coefficients come from the Rutishauser–Kahan–Pal–Walker
/// algorithm (Givens updates of the Jacobi matrix, one atom at a time),
/// truncated to the leading `k × k` block and run on centred and scaled
/// coordinates.
pub fn gauss_reduce(p: &FiniteMeasure, k: usize) -> FiniteMeasure {
    assert_eq!(p.dim(), 1, "gauss_reduce works on the line");
    if p.len() <= k {
        return p.clone();
    }
    let mass = p.total_mass();
    let w: Vec<f64> = p.weights().iter().map(|x| x / mass).collect();
    let raw: Vec<f64> = (0..p.len()).map(|i| p.point(i)[0]).collect();
    let mean: f64 = raw.iter().zip(&w).map(|(x, w)| x * w).sum();
    let var: f64 = raw.iter().zip(&w).map(|(x, w)| w * (x - mean).powi(2)).sum();
    let scale = if var > 0.0 { var.sqrt() } else { 1.0 };
    let x: Vec<f64> = raw.iter().map(|v| (v - mean) / scale).collect();

    // alpha[j] and squared off-diagonals beta[j] (beta[0] is the mass so far)
    let mut alpha: Vec<f64> = x[..k].to_vec();
    let mut beta = vec![0.0; k];
    beta[0] = w[0];
    for (i, (&lambda, &wi)) in x.iter().zip(&w).enumerate().skip(1) {
        let mut pn = wi;
        let (mut gam, mut sig, mut t) = (1.0, 0.0, 0.0);
        for j in 0..k.min(i + 1) {
            let rho = beta[j] + pn;
            let tmp = gam * rho;
            let tsig = sig;
            if rho <= 0.0 {
                gam = 1.0;
                sig = 0.0;
            } else {
                gam = beta[j] / rho;
                sig = pn / rho;
            }
            let tk = sig * (alpha[j] - lambda) - gam * t;
            alpha[j] -= tk - t;
            t = tk;
            pn = if sig <= 0.0 { tsig * beta[j] } else { t * t / sig };
            beta[j] = tmp;
        }
    }
    let beta: Vec<f64> = beta[1..].iter().map(|b| b.max(0.0).sqrt()).collect();

    let m = alpha.len();
    let mut jacobi = DMatrix::zeros(m, m);
    for i in 0..m {
        jacobi[(i, i)] = alpha[i];
        if i + 1 < m {
            jacobi[(i, i + 1)] = beta[i];
            jacobi[(i + 1, i)] = beta[i];
        }
    }
    let eig = SymmetricEigen::new(jacobi);
    let nodes: Vec<f64> = eig.eigenvalues.iter().map(|l| mean + scale * l).collect();
    let weights: Vec<f64> = (0..m)
        .map(|j| mass * eig.eigenvectors[(0, j)].powi(2))
        .collect();
    FiniteMeasure::from_flat(1, nodes, weights)
}
