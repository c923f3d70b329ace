//! Numerical checks of the invariance assumptions on a metric family and of
//! the steps that reduce any such metric to a multiple of the Fisher metric.
//!
//! - A1: the metric on the `n`-fold IID extension is `n` times the metric.
//! - A2: the metric on `𝓝_n` agrees with the IID-extension metric under the
//!   identification by the canonical statistic.
//! - A3: the norm functional `H` is affine invariant and, along the
//!   standardised chain `L_*Q_n`, constant in `n` (which is what weak
//!   continuity at the Gaussian limit needs).

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::derived::{
    affine_pushforward_pair, iid_fisher, iid_tangent, nef_distribution, nef_tangent_on,
    standardizing_map_from, AffineMap,
};
use crate::error::{Error, Result};
use crate::expfam::{BaseKind, ExpFamily, Route, TangentCoord};
use crate::geometry::{
    fisher_norm_functional, fisher_norm_gaussian_linear, norm_of_tangent, MetricField, NormFunctional, ScoreFn,
};
use crate::linalg::{householder_between, max_abs_diff, require_positive_definite, sym_sqrt};
use crate::measures::{ks_distance, moments, radon_nikodym, AtomicMeasure, GaussianReference};

/// Identity-check tolerance for exactly discrete families.
pub const DISCRETE_TOL: f64 = 1e-9;
/// Identity-check tolerance where quadrature families participate.
pub const QUADRATURE_TOL: f64 = 1e-6;
/// Largest `n` for which the IID extension is materialised as a cross-check.
pub const PRODUCT_CHECK_MAX_N: usize = 3;
/// Largest product support materialised for the cross-check.
pub const PRODUCT_CHECK_MAX_ATOMS: usize = 200_000;

pub fn default_tolerance(family: &ExpFamily) -> f64 {
    match family.kind() {
        BaseKind::Discrete => DISCRETE_TOL,
        BaseKind::Quadrature { .. } => QUADRATURE_TOL,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Axiom {
    A1,
    A2,
    A3Constancy,
    A3Affine,
}

impl fmt::Display for Axiom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Axiom::A1 => "A1",
            Axiom::A2 => "A2",
            Axiom::A3Constancy => "A3-constancy",
            Axiom::A3Affine => "A3-affine",
        })
    }
}

/// Outcome of one axiom check.
#[derive(Debug, Clone, PartialEq)]
pub struct AxiomReport {
    pub axiom: Axiom,
    pub family: String,
    pub theta: Vec<f64>,
    pub n_values: Vec<usize>,
    pub residual: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl AxiomReport {
    pub fn new(
        axiom: Axiom,
        family: &ExpFamily,
        theta: &[f64],
        n_values: Vec<usize>,
        residual: f64,
        tolerance: f64,
    ) -> Self {
        Self {
            axiom,
            family: family.name().to_string(),
            theta: theta.to_vec(),
            n_values,
            residual,
            tolerance,
            // NaN residuals fail
            pass: residual <= tolerance,
        }
    }
}

fn bilinear(m: &DMatrix<f64>, a: &[f64], b: &[f64]) -> f64 {
    DVector::from_column_slice(a).dot(&(m * DVector::from_column_slice(b)))
}

fn check_dims(family: &ExpFamily, u: &TangentCoord, v: &TangentCoord) -> Result<()> {
    u.same_base(v)?;
    for w in [u, v] {
        if w.a.len() != family.order() {
            return Err(Error::Dimension { expected: family.order(), got: w.a.len() });
        }
    }
    Ok(())
}

/// `∫ (dA/dP)(dB/dP) dP` for two tangent pairs on the same base.
fn score_inner(base: &crate::measures::FiniteMeasure, da: &[f64], db: &[f64]) -> f64 {
    base.weights().iter().zip(da.iter().zip(db)).map(|(w, (x, y))| w * x * y).sum()
}

/// A1 with the Fisher metric: `aᵀ(nΣ)b` against `n·aᵀΣb`, plus, for small
/// `n`, the same quantity recomputed as a score integral over the
/// materialised product space `𝒳^n`.
pub fn check_a1(family: &ExpFamily, u: &TangentCoord, v: &TangentCoord, n: usize) -> Result<AxiomReport> {
    check_a1_with_tol(family, u, v, n, default_tolerance(family))
}

pub fn check_a1_with_tol(
    family: &ExpFamily,
    u: &TangentCoord,
    v: &TangentCoord,
    n: usize,
    tol: f64,
) -> Result<AxiomReport> {
    check_dims(family, u, v)?;
    let sigma = family.cov_statistic(&u.theta)?;
    let lhs = bilinear(&iid_fisher(family, &u.theta, n)?, &u.a, &v.a);
    let rhs = n as f64 * bilinear(&sigma, &u.a, &v.a);
    let mut residual = (lhs - rhs).abs();

    if product_checkable(family, n) {
        let tu = iid_tangent(family, u, n)?;
        let tv = iid_tangent(family, v, n)?;
        let du = radon_nikodym(&tu.direction, &tu.base)?;
        let dv = radon_nikodym(&tv.direction, &tu.base)?;
        residual = residual.max((score_inner(&tu.base, &du, &dv) - rhs).abs());
    }
    Ok(AxiomReport::new(Axiom::A1, family, &u.theta, vec![n], residual, tol))
}

/// A2 with the Fisher metric: the invariant form on `𝓝_n`,
/// `∫ (dA_n/dQ_n)(dB_n/dQ_n) dQ_n`, against `aᵀ(nΣ)b`.
pub fn check_a2(family: &ExpFamily, u: &TangentCoord, v: &TangentCoord, n: usize) -> Result<AxiomReport> {
    check_a2_with_tol(family, u, v, n, default_tolerance(family))
}

pub fn check_a2_with_tol(
    family: &ExpFamily,
    u: &TangentCoord,
    v: &TangentCoord,
    n: usize,
    tol: f64,
) -> Result<AxiomReport> {
    check_dims(family, u, v)?;
    let q = nef_distribution(family, &u.theta, n)?;
    let tau = family.mean_statistic(&u.theta)?;
    let tu = nef_tangent_on(&q, &tau, &u.a, n)?;
    let tv = nef_tangent_on(&q, &tau, &v.a, n)?;
    let du = radon_nikodym(&tu.direction, &q)?;
    let dv = radon_nikodym(&tv.direction, &q)?;
    let g_n = score_inner(&q, &du, &dv);
    let g_iid = bilinear(&iid_fisher(family, &u.theta, n)?, &u.a, &v.a);
    Ok(AxiomReport::new(Axiom::A2, family, &u.theta, vec![n], (g_n - g_iid).abs(), tol))
}

/// Pieces of the standardised chain at one `(θ, n)`.
struct Standardised {
    pushed: crate::measures::FiniteMeasure,
    sigma: DMatrix<f64>,
    tau: DVector<f64>,
    map: AffineMap,
    q: crate::measures::FiniteMeasure,
}

fn standardised(family: &ExpFamily, theta: &[f64], n: usize) -> Result<Standardised> {
    let sigma = family.cov_statistic(theta)?;
    let tau = family.mean_statistic(theta)?;
    let q = nef_distribution(family, theta, n)?;
    let map = standardizing_map_from(&sigma, &tau, n)?;
    let pushed = map.push(&q);
    Ok(Standardised { pushed, sigma, tau, map, q })
}

/// `f(y) = (Σ_θ^{1/2} a)·y`.
fn chain_coefficients(sigma: &DMatrix<f64>, a: &[f64]) -> Vec<f64> {
    (sym_sqrt(sigma) * DVector::from_column_slice(a)).iter().copied().collect()
}

/// `H(L_*Q_n, f·L_*Q_n)` with `L` the standardising map and
/// `f(y) = (Σ_θ^{1/2} a)·y`.
pub fn chain_value(h: &NormFunctional, family: &ExpFamily, u: &TangentCoord, n: usize) -> Result<f64> {
    let s = standardised(family, &u.theta, n)?;
    let c = chain_coefficients(&s.sigma, &u.a);
    Ok(h.eval(&s.pushed, &ScoreFn::Linear(c)))
}

/// The chain value for the Fisher functional; equals `‖Σ_θ^{1/2} a‖` for
/// every `n`.
pub fn claim1_pipeline(family: &ExpFamily, u: &TangentCoord, n: usize) -> Result<f64> {
    chain_value(&fisher_norm_functional(), family, u, n)
}

/// `‖Σ_θ^{1/2} a‖`, the common value of the chain.
pub fn chain_limit(family: &ExpFamily, u: &TangentCoord) -> Result<f64> {
    let sigma = family.cov_statistic(&u.theta)?;
    Ok(fisher_norm_gaussian_linear(&chain_coefficients(&sigma, &u.a)))
}

/// Largest per-atom gap between `L_*A_n` and `√n·f·L_*Q_n`.
pub fn chain_commutation_residual(family: &ExpFamily, u: &TangentCoord, n: usize) -> Result<f64> {
    let s = standardised(family, &u.theta, n)?;
    let t = nef_tangent_on(&s.q, &s.tau, &u.a, n)?;
    let moved = affine_pushforward_pair(&s.map, &t)?;
    let c = chain_coefficients(&s.sigma, &u.a);
    let root_n = (n as f64).sqrt();
    let expected = s.pushed.scale_by(|_, y| root_n * y.iter().zip(&c).map(|(a, b)| a * b).sum::<f64>());
    if moved.base != s.pushed || moved.direction.len() != expected.len() {
        return Err(Error::Precondition("pushed supports differ".into()));
    }
    Ok(moved
        .direction
        .weights()
        .iter()
        .zip(expected.weights())
        .fold(0.0, |acc, (x, y)| acc.max((x - y).abs())))
}

/// A3 constancy: spread (max − min) of the chain value over `ns`.
pub fn check_a3_constancy(
    h: &NormFunctional,
    family: &ExpFamily,
    u: &TangentCoord,
    ns: &[usize],
    tol: f64,
) -> Result<AxiomReport> {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &n in ns {
        let v = chain_value(h, family, u, n)?;
        lo = lo.min(v);
        hi = hi.max(v);
    }
    Ok(AxiomReport::new(Axiom::A3Constancy, family, &u.theta, ns.to_vec(), hi - lo, tol))
}

/// A3 affine invariance on `T𝓝_n`: `|H(L_{**}(Q_n, A_n)) − H(Q_n, A_n)|`.
pub fn check_a3_affine(
    h: &NormFunctional,
    family: &ExpFamily,
    u: &TangentCoord,
    n: usize,
    map: &AffineMap,
    tol: f64,
) -> Result<AxiomReport> {
    let q = nef_distribution(family, &u.theta, n)?;
    let tau = family.mean_statistic(&u.theta)?;
    let t = nef_tangent_on(&q, &tau, &u.a, n)?;
    let moved = affine_pushforward_pair(map, &t)?;
    let residual = (h.eval_pair(&moved) - h.eval_pair(&t)).abs();
    Ok(AxiomReport::new(Axiom::A3Affine, family, &u.theta, vec![n], residual, tol))
}

/// Distance of `L_*Q_n` from the standard normal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CltDiagnostics {
    /// Largest deviation of a marginal's third or fourth standardised
    /// moment from 0 or 3.
    pub moment_gap: f64,
    /// Largest Kolmogorov–Smirnov distance of a marginal from `N(0,1)`.
    pub ks_max: f64,
}

pub fn clt_diagnostics(family: &ExpFamily, theta: &[f64], n: usize) -> Result<CltDiagnostics> {
    let s = standardised(family, theta, n)?;
    let mut moment_gap: f64 = 0.0;
    let mut ks_max: f64 = 0.0;
    for axis in 0..family.order() {
        let marginal = s.pushed.marginal(axis);
        let (mean, cov) = moments(&marginal);
        let sd = cov[(0, 0)].sqrt();
        let m3 = marginal.integrate(|y| ((y[0] - mean[0]) / sd).powi(3));
        let m4 = marginal.integrate(|y| ((y[0] - mean[0]) / sd).powi(4));
        moment_gap = moment_gap
            .max((m3 - GaussianReference::SKEWNESS).abs())
            .max((m4 - GaussianReference::KURTOSIS).abs());
        ks_max = ks_max.max(ks_distance(&marginal, GaussianReference::cdf));
    }
    Ok(CltDiagnostics { moment_gap, ks_max })
}

/// Result of the rotation step between two tangent vectors of equal
/// Fisher length.
#[derive(Debug, Clone, PartialEq)]
pub struct RotationCheck {
    /// `max(|H^F(Φ,eΦ) − H^F(Φ,fΦ)|, ‖M x − z‖_∞)`.
    pub residual: f64,
    /// The orthogonal map with `M Σ_θ^{1/2} a = Σ_φ^{1/2} b`.
    pub rotation: DMatrix<f64>,
    /// `‖M Mᵀ − I‖_∞`.
    pub orthogonality: f64,
}

/// Slack on `aᵀΣ_θ a = bᵀΣ_φ b` required before rotating.
pub const MATCHED_FORM_TOL: f64 = 1e-12;

pub fn claim2_rotation_check(family: &ExpFamily, u: &TangentCoord, v: &TangentCoord) -> Result<RotationCheck> {
    let sigma_u = family.cov_statistic(&u.theta)?;
    let sigma_v = family.cov_statistic(&v.theta)?;
    let form_u = bilinear(&sigma_u, &u.a, &u.a);
    let form_v = bilinear(&sigma_v, &v.a, &v.a);
    if (form_u - form_v).abs() >= MATCHED_FORM_TOL {
        return Err(Error::Precondition(format!(
            "quadratic forms differ: {form_u} vs {form_v}"
        )));
    }
    let x = sym_sqrt(&sigma_u) * DVector::from_column_slice(&u.a);
    let z = sym_sqrt(&sigma_v) * DVector::from_column_slice(&v.a);
    let rotation = householder_between(&x, &z);
    // e = f∘M⁻¹ has coefficient vector M x since M⁻¹ = Mᵀ
    let e: Vec<f64> = (&rotation * &x).iter().copied().collect();
    let f: Vec<f64> = x.iter().copied().collect();
    let norm_gap = (fisher_norm_gaussian_linear(&e) - fisher_norm_gaussian_linear(&f)).abs();
    let map_gap = (&rotation * &x - &z).amax();
    let d = family.order();
    let orthogonality = max_abs_diff(&(&rotation * rotation.transpose()), &DMatrix::identity(d, d));
    Ok(RotationCheck {
        residual: norm_gap.max(map_gap),
        rotation,
        orthogonality,
    })
}

/// `|H(L₁_*Q_{n1}, f·L₁_*Q_{n1}) − H(L₂_*Q_{n2}, f·L₂_*Q_{n2})|`.
pub fn uniqueness_residual(
    h: &NormFunctional,
    family: &ExpFamily,
    u: &TangentCoord,
    n1: usize,
    n2: usize,
) -> Result<f64> {
    if n1 == n2 {
        return Err(Error::Precondition("uniqueness residual needs n1 ≠ n2".into()));
    }
    Ok((chain_value(h, family, u, n1)? - chain_value(h, family, u, n2)?).abs())
}

/// Estimate of `c` in `g = c·g^F`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstantEstimate {
    pub c_hat: f64,
    pub spread: f64,
    pub ratios: Vec<f64>,
}

/// Compares `g(u,u)/g^F(u,u) = (h_G(u)/h^F(u))²` over `trials` tangent
/// vectors: `θ` cycles through the family grid, `a` is drawn uniformly from
/// the unit sphere. For `g = c·g^F` every ratio is `c`.
pub fn recover_constant(g: &MetricField, trials: usize, seed: u64) -> Result<ConstantEstimate> {
    let family = g.family().clone();
    let fisher = MetricField::fisher(family.clone());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ratios = Vec::with_capacity(trials);
    for t in 0..trials {
        let theta = family.grid()[t % family.grid().len()].clone();
        require_positive_definite(&g.matrix(&theta)?)?;
        let a = unit_vector(&mut rng, family.order());
        let u = TangentCoord::new(theta, a);
        ratios.push((norm_of_tangent(g, &u)? / norm_of_tangent(&fisher, &u)?).powi(2));
    }
    let c_hat = ratios.iter().sum::<f64>() / trials.max(1) as f64;
    let lo = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(ConstantEstimate { c_hat, spread: hi - lo, ratios })
}

/// Uniform direction on the unit sphere by rejection from the cube.
pub fn unit_vector(rng: &mut impl Rng, d: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-3 && norm <= 1.0 {
            return v.iter().map(|x| x / norm).collect();
        }
    }
}

/// `ḡ_θ = (1 + amplitude·sin θ₁)·Σ_θ`: positive definite for
/// `|amplitude| < 1`, but not a constant multiple of the Fisher metric.
pub fn sinusoidal_metric(family: Arc<ExpFamily>, amplitude: f64) -> MetricField {
    MetricField::new(family, format!("(1+{amplitude}*sin)*fisher"), move |f, theta| {
        Ok(f.fisher_information(theta, Route::A)? * (1.0 + amplitude * theta[0].sin()))
    })
}

/// A fixed, well-conditioned affine map used by the A3-affine row of the
/// suite runner.
pub fn reference_affine_map(d: usize) -> AffineMap {
    let m = DMatrix::from_fn(d, d, |i, j| match i.cmp(&j) {
        std::cmp::Ordering::Equal => 1.5 + 0.5 * i as f64,
        std::cmp::Ordering::Less => 0.3,
        std::cmp::Ordering::Greater => -0.2,
    });
    let c = DVector::from_fn(d, |i, _| 0.7 - 0.4 * i as f64);
    AffineMap::new(m, c).expect("diagonally dominant")
}

/// Whether the IID extension can be materialised for `n` at this family.
pub fn product_checkable(family: &ExpFamily, n: usize) -> bool {
    n <= PRODUCT_CHECK_MAX_N
        && family.base().len().checked_pow(n as u32).unwrap_or(usize::MAX) <= PRODUCT_CHECK_MAX_ATOMS
}
