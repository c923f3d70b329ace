//! Higher-order symmetric tensors on an exponential family: Amari–Chentsov
//! integrals of score products, symmetric powers of the Fisher metric, and
//! checks of the scaling law and of the odd-order vanishing argument.

use std::sync::Arc;

use nalgebra::DVector;

use crate::derived::{nef_distribution, nef_tangent_on};
use crate::error::{Error, Result};
use crate::expfam::{ExpFamily, Route};
use crate::measures::{radon_nikodym, AtomicMeasure};

/// Step for finite-difference third derivatives of `ψ`.
pub const THIRD_DERIVATIVE_STEP: f64 = 1e-3;

type TensorEval = dyn Fn(&ExpFamily, &[f64], &[Vec<f64>]) -> Result<f64> + Send + Sync;

/// An order-`k` tensor field `θ ↦ S_θ(a₁, …, a_k)` on a family.
#[derive(Clone)]
pub struct SymmetricTensorField {
    family: Arc<ExpFamily>,
    order: usize,
    label: String,
    eval: Arc<TensorEval>,
}

impl std::fmt::Debug for SymmetricTensorField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SymmetricTensorField")
            .field("family", &self.family.name())
            .field("order", &self.order)
            .field("label", &self.label)
            .finish()
    }
}

impl SymmetricTensorField {
    pub fn new<F>(family: Arc<ExpFamily>, order: usize, label: impl Into<String>, eval: F) -> Result<Self>
    where
        F: Fn(&ExpFamily, &[f64], &[Vec<f64>]) -> Result<f64> + Send + Sync + 'static,
    {
        if order < 2 {
            return Err(Error::Precondition(format!("tensor order must be ≥ 2, got {order}")));
        }
        Ok(Self { family, order, label: label.into(), eval: Arc::new(eval) })
    }

    /// `∫ Π_j a_j·(T − τ_θ) dP_θ`.
    pub fn amari_chentsov(family: Arc<ExpFamily>, order: usize) -> Result<Self> {
        Self::new(family, order, format!("amari_chentsov_{order}"), amari_chentsov)
    }

    /// `c·(g^F)^{k/2}`. For even `k` this is `c` times the average over all
    /// perfect matchings of the slots of the product of Fisher forms, which
    /// is symmetric, multilinear and equal to `c·g(a,a)^{k/2}` on the
    /// diagonal. For odd `k` it is `c·Π_j h^F(a_j)`: symmetric and positively
    /// homogeneous, with diagonal `c·h^F(a)^k`.
    pub fn fisher_power(family: Arc<ExpFamily>, c: f64, order: usize) -> Result<Self> {
        Self::new(family, order, format!("{c}*fisher^{order}/2"), move |f, theta, dirs| {
            let sigma = f.fisher_information(theta, Route::A)?;
            let g = |x: &[f64], y: &[f64]| {
                DVector::from_column_slice(x).dot(&(&sigma * DVector::from_column_slice(y)))
            };
            if order % 2 == 1 {
                return Ok(c * dirs.iter().map(|a| g(a, a).sqrt()).product::<f64>());
            }
            let matchings = perfect_matchings(order);
            let total: f64 = matchings
                .iter()
                .map(|m| m.iter().map(|&(i, j)| g(&dirs[i], &dirs[j])).product::<f64>())
                .sum();
            Ok(c * total / matchings.len() as f64)
        })
    }

    pub fn zero(family: Arc<ExpFamily>, order: usize) -> Result<Self> {
        Self::new(family, order, "zero", |_, _, _| Ok(0.0))
    }

    pub fn family(&self) -> &Arc<ExpFamily> {
        &self.family
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn eval(&self, theta: &[f64], dirs: &[Vec<f64>]) -> Result<f64> {
        if dirs.len() != self.order {
            return Err(Error::Dimension { expected: self.order, got: dirs.len() });
        }
        for a in dirs {
            if a.len() != self.family.order() {
                return Err(Error::Dimension { expected: self.family.order(), got: a.len() });
            }
        }
        (self.eval)(&self.family, theta, dirs)
    }

    /// `S_θ(a, …, a)`.
    pub fn diagonal(&self, theta: &[f64], a: &[f64]) -> Result<f64> {
        self.eval(theta, &vec![a.to_vec(); self.order])
    }
}

/// All perfect matchings of `{0, …, k−1}` (`k` even).
fn perfect_matchings(k: usize) -> Vec<Vec<(usize, usize)>> {
    fn rec(rest: &[usize], acc: &mut Vec<(usize, usize)>, out: &mut Vec<Vec<(usize, usize)>>) {
        let Some((&first, tail)) = rest.split_first() else {
            out.push(acc.clone());
            return;
        };
        for (pos, &partner) in tail.iter().enumerate() {
            let remaining: Vec<usize> = tail.iter().enumerate().filter(|(p, _)| *p != pos).map(|(_, &v)| v).collect();
            acc.push((first, partner));
            rec(&remaining, acc, out);
            acc.pop();
        }
    }
    let mut out = Vec::new();
    rec(&(0..k).collect::<Vec<_>>(), &mut Vec::new(), &mut out);
    out
}

/// All permutations of `0..k` in lexicographic order.
pub fn permutations(k: usize) -> Vec<Vec<usize>> {
    let mut perm: Vec<usize> = (0..k).collect();
    let mut out = vec![perm.clone()];
    loop {
        let Some(i) = (1..k).rev().find(|&i| perm[i - 1] < perm[i]) else {
            return out;
        };
        let j = (i..k).rev().find(|&j| perm[j] > perm[i - 1]).expect("pivot has a successor");
        perm.swap(i - 1, j);
        perm[i..].reverse();
        out.push(perm.clone());
    }
}

/// `∫ Π_j a_j·(T − τ_θ) dP_θ` as a finite sum over the base atoms.
pub fn amari_chentsov(family: &ExpFamily, theta: &[f64], dirs: &[Vec<f64>]) -> Result<f64> {
    if dirs.len() < 2 {
        return Err(Error::Precondition(format!("tensor order must be ≥ 2, got {}", dirs.len())));
    }
    let d = family.order();
    if let Some(a) = dirs.iter().find(|a| a.len() != d) {
        return Err(Error::Dimension { expected: d, got: a.len() });
    }
    let probs = family.probabilities(theta)?;
    let tau = family.mean_statistic(theta)?;
    Ok(probs
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let t = family.stat(i);
            p * dirs
                .iter()
                .map(|a| a.iter().zip(t.iter().zip(tau.iter())).map(|(a, (t, m))| a * (t - m)).sum::<f64>())
                .product::<f64>()
        })
        .sum())
}

/// Third directional derivative `d³/dt³ ψ(θ + t v)` at `t = 0` by the
/// seven-point central stencil (error `O(h⁴)`).
fn directional_third(family: &ExpFamily, theta: &[f64], v: &[f64], h: f64) -> Result<f64> {
    let at = |s: f64| -> Result<f64> {
        let p: Vec<f64> = theta.iter().zip(v).map(|(t, v)| t + s * h * v).collect();
        family.log_partition(&p)
    };
    let odd = |s: f64| -> Result<f64> { Ok(at(s)? - at(-s)?) };
    Ok((8.0 * odd(2.0)? - 13.0 * odd(1.0)? - odd(3.0)?) / (8.0 * h.powi(3)))
}

/// `D³ψ(θ)[v₁, v₂, v₃]` by finite differences and cubic polarization.
pub fn fd_third_derivative(family: &ExpFamily, theta: &[f64], dirs: &[Vec<f64>], h: f64) -> Result<f64> {
    if dirs.len() != 3 {
        return Err(Error::Dimension { expected: 3, got: dirs.len() });
    }
    polarize_diagonal(dirs, |v| directional_third(family, theta, v, h))
}

/// Recovers a symmetric multilinear form from its diagonal `q(v) = S(v,…,v)`:
/// `S(v₁,…,v_k) = (1/(k!·2^k)) Σ_{ε∈{±1}^k} ε₁⋯ε_k q(Σ ε_i v_i)`.
pub fn polarize_diagonal<Q>(dirs: &[Vec<f64>], mut q: Q) -> Result<f64>
where
    Q: FnMut(&[f64]) -> Result<f64>,
{
    let k = dirs.len();
    let d = dirs.first().map_or(0, Vec::len);
    let mut total = 0.0;
    for mask in 0..(1u32 << k) {
        let mut v = vec![0.0; d];
        let mut sign = 1.0;
        for (i, a) in dirs.iter().enumerate() {
            let e = if mask & (1 << i) != 0 { -1.0 } else { 1.0 };
            sign *= e;
            v.iter_mut().zip(a).for_each(|(x, y)| *x += e * y);
        }
        total += sign * q(&v)?;
    }
    let factorial: f64 = (1..=k).map(|i| i as f64).product();
    Ok(total / (factorial * 2f64.powi(k as i32)))
}

/// Order-`k` scaling of the score tensors between `𝓝_1` and `𝓝_n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingReport {
    /// `∫ (dA_n/dQ_n)^k dQ_n`.
    pub lhs: f64,
    /// `∫ (dA_1/dQ_1)^k dQ_1`.
    pub rhs: f64,
    /// `|lhs − n^{k/2}·rhs|`.
    pub residual: f64,
    /// `log_n(lhs/rhs)`; `None` for `n = 1` or when the ratio is not positive.
    pub exponent: Option<f64>,
}

fn score_power(family: &ExpFamily, theta: &[f64], a: &[f64], n: usize, k: usize) -> Result<f64> {
    let q = nef_distribution(family, theta, n)?;
    let tau = family.mean_statistic(theta)?;
    let t = nef_tangent_on(&q, &tau, a, n)?;
    let s = radon_nikodym(&t.direction, &q)?;
    Ok(q.weights().iter().zip(&s).map(|(w, s)| w * s.powi(k as i32)).sum())
}

pub fn higher_scaling_check(family: &ExpFamily, theta: &[f64], a: &[f64], n: usize, k: usize) -> Result<ScalingReport> {
    if k < 2 || n == 0 {
        return Err(Error::Precondition(format!("need k ≥ 2 and n ≥ 1, got k = {k}, n = {n}")));
    }
    let rhs = score_power(family, theta, a, 1, k)?;
    let lhs = if n == 1 { rhs } else { score_power(family, theta, a, n, k)? };
    let residual = (lhs - (n as f64).powf(k as f64 / 2.0) * rhs).abs();
    let ratio = lhs / rhs;
    let exponent = (n > 1 && ratio > 0.0 && ratio.is_finite()).then(|| ratio.ln() / (n as f64).ln());
    Ok(ScalingReport { lhs, rhs, residual, exponent })
}

/// `c′·[g(u,v)g(w,m) + g(u,w)g(v,m) + g(u,m)g(v,w)]` with `g` the Fisher form.
pub fn symmetric_power_eval(family: &ExpFamily, theta: &[f64], dirs: &[Vec<f64>], c: f64) -> Result<f64> {
    if dirs.len() != 4 {
        return Err(Error::Dimension { expected: 4, got: dirs.len() });
    }
    let sigma = family.fisher_information(theta, Route::A)?;
    let g = |i: usize, j: usize| {
        DVector::from_column_slice(&dirs[i]).dot(&(&sigma * DVector::from_column_slice(&dirs[j])))
    };
    Ok(c * (g(0, 1) * g(2, 3) + g(0, 2) * g(1, 3) + g(0, 3) * g(1, 2)))
}

/// Largest change of `S_θ(dirs)` over all orderings of `dirs`.
pub fn permutation_residual(field: &SymmetricTensorField, theta: &[f64], dirs: &[Vec<f64>]) -> Result<f64> {
    let base = field.eval(theta, dirs)?;
    let mut worst: f64 = 0.0;
    for p in permutations(dirs.len()) {
        let permuted: Vec<Vec<f64>> = p.iter().map(|&i| dirs[i].clone()).collect();
        worst = worst.max((field.eval(theta, &permuted)? - base).abs());
    }
    Ok(worst)
}

/// `max(|S(a,…,a) + S(−a,…,−a)|/2, |S(a,…,a)|)` for odd order: an invariant
/// order-`k` tensor is an odd function of the tangent vector while
/// `c·h(u)^k` is even, so both terms vanish exactly when `c = 0`.
pub fn odd_k_vanishing_check(field: &SymmetricTensorField, theta: &[f64], a: &[f64]) -> Result<f64> {
    if field.order() % 2 == 0 {
        return Err(Error::Precondition(format!("order {} is even", field.order())));
    }
    let plus = field.diagonal(theta, a)?;
    let neg: Vec<f64> = a.iter().map(|x| -x).collect();
    let minus = field.diagonal(theta, &neg)?;
    Ok(((plus + minus).abs() / 2.0).max(plus.abs()))
}
