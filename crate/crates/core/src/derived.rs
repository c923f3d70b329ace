//! IID extensions and natural exponential families.
//!
//! `Q_n` is the distribution of the mean of `n` independent copies of
//! `T(X)`, `X ~ P_θ`. It is computed by exact pairwise convolution of
//! `Q_1 = T_*P_θ` on the lattice of sums, then rescaled by `1/n`; the
//! product space `𝒳^n` is never built except by the explicit
//! [`product_measure`] helpers used for cross-checks at small `n`.
//!
//! For quadrature-discretised families the support of an exact convolution
//! grows geometrically, so after each convolution step the running sum is
//! replaced by its own Gaussian rule with as many nodes as the family
//! ([`crate::quadrature::gauss_reduce`]). That keeps every moment of degree
//! below `2·nodes` identical to the exact convolution.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::expfam::{BaseKind, ExpFamily, TangentCoord};
use crate::linalg::{require_positive_definite, sym_inv_sqrt};
use crate::measures::{point_key, AtomicMeasure, FiniteMeasure, SignedFiniteMeasure, TangentPair};
use crate::quadrature::gauss_reduce;

/// Largest support a convolution may produce before failing.
pub const DEFAULT_SUPPORT_CAP: usize = 2_000_000;

/// Invertible affine map `y ↦ M y + c` on `R^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineMap {
    m: DMatrix<f64>,
    c: DVector<f64>,
}

impl AffineMap {
    pub fn new(m: DMatrix<f64>, c: DVector<f64>) -> Result<Self> {
        if !m.is_square() || m.nrows() != c.len() {
            return Err(Error::Dimension {
                expected: m.nrows(),
                got: c.len(),
            });
        }
        let det = m.determinant();
        if !(det.abs() > 1e-12) {
            return Err(Error::Precondition(format!(
                "affine map is not invertible (det = {det:e})"
            )));
        }
        Ok(Self { m, c })
    }

    pub fn identity(d: usize) -> Self {
        Self {
            m: DMatrix::identity(d, d),
            c: DVector::zeros(d),
        }
    }

    pub fn linear(m: DMatrix<f64>) -> Result<Self> {
        let d = m.nrows();
        Self::new(m, DVector::zeros(d))
    }

    pub fn dim(&self) -> usize {
        self.c.len()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn offset(&self) -> &DVector<f64> {
        &self.c
    }

    pub fn apply(&self, y: &[f64]) -> Vec<f64> {
        (&self.m * DVector::from_column_slice(y) + &self.c)
            .iter()
            .copied()
            .collect()
    }

    pub fn inverse(&self) -> AffineMap {
        let m_inv = self
            .m
            .clone()
            .try_inverse()
            .expect("invertibility checked at construction");
        let c = -(&m_inv * &self.c);
        AffineMap { m: m_inv, c }
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &AffineMap) -> AffineMap {
        AffineMap {
            m: &self.m * &other.m,
            c: &self.m * &other.c + &self.c,
        }
    }

    pub fn push(&self, p: &FiniteMeasure) -> FiniteMeasure {
        p.push_forward(self.dim(), |y| self.apply(y))
    }

    pub fn push_signed(&self, a: &SignedFiniteMeasure) -> SignedFiniteMeasure {
        a.push_forward(self.dim(), |y| self.apply(y))
    }
}

/// `L_{**}(P, A) = (L_*P, L_*A)`.
pub fn affine_pushforward_pair(l: &AffineMap, t: &TangentPair) -> Result<TangentPair> {
    if t.base.dim() != l.dim() {
        return Err(Error::Dimension {
            expected: l.dim(),
            got: t.base.dim(),
        });
    }
    TangentPair::new(l.push(&t.base), l.push_signed(&t.direction))
}

/// `Q_1 = T_*P_θ`.
pub fn nef_base(family: &ExpFamily, theta: &[f64]) -> Result<FiniteMeasure> {
    family.statistic_distribution(theta)
}

/// `Q_n`, the distribution of the mean of `n` IID draws from `Q_1`.
pub fn nef_distribution(family: &ExpFamily, theta: &[f64], n: usize) -> Result<FiniteMeasure> {
    nef_distribution_capped(family, theta, n, DEFAULT_SUPPORT_CAP)
}

pub fn nef_distribution_capped(
    family: &ExpFamily,
    theta: &[f64],
    n: usize,
    cap: usize,
) -> Result<FiniteMeasure> {
    if n == 0 {
        return Err(Error::Precondition("n must be at least 1".into()));
    }
    let q1 = nef_base(family, theta)?;
    let add = |x: &FiniteMeasure, y: &FiniteMeasure| -> Result<FiniteMeasure> {
        let pairs = x.len().saturating_mul(y.len());
        // the merged support can be far smaller than the pair count on a
        // lattice, so only refuse pair counts that could not fit at all
        if pairs > cap.saturating_mul(8) {
            return Err(Error::SupportBlowup { size: pairs, cap });
        }
        let mut sum = x.convolve(y)?;
        if let BaseKind::Quadrature { nodes } = family.kind() {
            sum = gauss_reduce(&sum, nodes);
        }
        if sum.len() > cap {
            return Err(Error::SupportBlowup { size: sum.len(), cap });
        }
        Ok(sum)
    };
    // binary powering: the law of a sum of 2^j draws doubles up each round
    let mut sum: Option<FiniteMeasure> = None;
    let mut power = q1;
    let mut rest = n;
    loop {
        if rest & 1 == 1 {
            sum = Some(match sum {
                None => power.clone(),
                Some(s) => add(&s, &power)?,
            });
        }
        rest >>= 1;
        if rest == 0 {
            break;
        }
        power = add(&power, &power)?;
    }
    let sum = sum.expect("n ≥ 1");
    let scale = 1.0 / n as f64;
    Ok(sum.push_forward(family.order(), |y| y.iter().map(|v| v * scale).collect()))
}

/// `(Q_n, A_n)` with `dA_n/dQ_n (y) = n·a·(y − τ_θ)`.
pub fn nef_tangent(family: &ExpFamily, u: &TangentCoord, n: usize) -> Result<TangentPair> {
    if u.a.len() != family.order() {
        return Err(Error::Dimension {
            expected: family.order(),
            got: u.a.len(),
        });
    }
    let q = nef_distribution(family, &u.theta, n)?;
    let tau = family.mean_statistic(&u.theta)?;
    nef_tangent_on(&q, &tau, &u.a, n)
}

/// Builds `A_n` on an already computed `Q_n`.
pub fn nef_tangent_on(q: &FiniteMeasure, tau: &DVector<f64>, a: &[f64], n: usize) -> Result<TangentPair> {
    let nf = n as f64;
    let direction = q.scale_by(|_, y| {
        nf * y
            .iter()
            .zip(tau.iter())
            .zip(a)
            .map(|((yi, ti), ai)| ai * (yi - ti))
            .sum::<f64>()
    });
    TangentPair::new(q.clone(), direction)
}

/// `L(y) = √n Σ_θ^{-1/2} (y − τ_θ)`, which standardises `Q_n`.
pub fn standardizing_map(family: &ExpFamily, theta: &[f64], n: usize) -> Result<AffineMap> {
    let sigma = family.cov_statistic(theta)?;
    let tau = family.mean_statistic(theta)?;
    standardizing_map_from(&sigma, &tau, n)
}

pub fn standardizing_map_from(sigma: &DMatrix<f64>, tau: &DVector<f64>, n: usize) -> Result<AffineMap> {
    require_positive_definite(sigma)?;
    let m = sym_inv_sqrt(sigma) * (n as f64).sqrt();
    let c = -(&m * tau);
    AffineMap::new(m, c)
}

/// Fisher metric of the `n`-fold IID extension in `θ` coordinates, `n Σ_θ`.
pub fn iid_fisher(family: &ExpFamily, theta: &[f64], n: usize) -> Result<DMatrix<f64>> {
    if n == 0 {
        return Err(Error::Precondition("n must be at least 1".into()));
    }
    Ok(family.cov_statistic(theta)? * n as f64)
}

/// `P_θ^n` on `𝒳^n ⊂ R^{n·m}`, materialised. Only meant for small `n`.
pub fn product_measure(family: &ExpFamily, theta: &[f64], n: usize) -> Result<FiniteMeasure> {
    let p = family.density_measure(theta)?;
    let size = p.len().checked_pow(n as u32).unwrap_or(usize::MAX);
    if size > DEFAULT_SUPPORT_CAP {
        return Err(Error::SupportBlowup {
            size,
            cap: DEFAULT_SUPPORT_CAP,
        });
    }
    let m = p.dim();
    let mut coords = Vec::with_capacity(size * n * m);
    let mut weights = Vec::with_capacity(size);
    let mut idx = vec![0usize; n];
    for _ in 0..size {
        let mut w = 1.0;
        for &i in &idx {
            coords.extend_from_slice(p.point(i));
            w *= p.weights()[i];
        }
        weights.push(w);
        for slot in idx.iter_mut().rev() {
            *slot += 1;
            if *slot < p.len() {
                break;
            }
            *slot = 0;
        }
    }
    Ok(FiniteMeasure::from_flat(n * m, coords, weights))
}

/// Looks up `T(x)` for a sample point by its quantised coordinates.
fn statistic_lookup(family: &ExpFamily) -> HashMap<Vec<u64>, usize> {
    let base = family.base();
    (0..base.len()).map(|i| (point_key(base.point(i)), i)).collect()
}

/// `T_n(x_1..x_n) = (T(x_1) + … + T(x_n))/n` on a concatenated product point.
fn mean_statistic_of<'a>(
    family: &'a ExpFamily,
    lookup: &'a HashMap<Vec<u64>, usize>,
    n: usize,
) -> impl Fn(&[f64]) -> Vec<f64> + Copy + 'a {
    let m = family.base().dim();
    move |x: &[f64]| {
        let mut out = vec![0.0; family.order()];
        for block in x.chunks(m) {
            let i = lookup[&point_key(block)];
            for (o, t) in out.iter_mut().zip(family.stat(i)) {
                *o += t / n as f64;
            }
        }
        out
    }
}

/// `Q_n` obtained the other way, as `T_{n*} P_θ^n` on the materialised
/// product space.
pub fn nef_distribution_via_product(family: &ExpFamily, theta: &[f64], n: usize) -> Result<FiniteMeasure> {
    let pn = product_measure(family, theta, n)?;
    let lookup = statistic_lookup(family);
    Ok(pn.push_forward(family.order(), mean_statistic_of(family, &lookup, n)))
}

/// The tangent vector of the IID extension at `θ` in direction `a`:
/// `(P^n, A^n)` with `dA^n/dP^n = Σ_k a·(T(x_k) − τ_θ)`.
pub fn iid_tangent(family: &ExpFamily, u: &TangentCoord, n: usize) -> Result<TangentPair> {
    let pn = product_measure(family, &u.theta, n)?;
    let tau = family.mean_statistic(&u.theta)?;
    let lookup = statistic_lookup(family);
    let mean_stat = mean_statistic_of(family, &lookup, n);
    let nf = n as f64;
    let direction = pn.scale_by(|_, x| {
        mean_stat(x)
            .iter()
            .zip(tau.iter())
            .zip(&u.a)
            .map(|((t, m), a)| nf * a * (t - m))
            .sum()
    });
    TangentPair::new(pn, direction)
}
