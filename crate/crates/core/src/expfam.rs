//! Regular exponential families `p_θ(x) = exp(θ·T(x) − ψ(θ))` relative to a
//! finitely supported base measure.
//!
//! Continuous families are represented by a quadrature discretisation of
//! their base measure; everything downstream treats them as discrete.

use std::fmt;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::require_positive_definite;
use crate::measures::{moments, AtomicMeasure, FiniteMeasure, TangentPair};
use crate::quadrature::{gauss_hermite_normal, gauss_legendre};

/// Finite-difference step for the Hessian of `ψ`.
pub const HESSIAN_STEP: f64 = 1e-4;

/// Default node count for quadrature-discretised families.
pub const DEFAULT_NODES: usize = 201;

/// Axis-aligned box of admissible natural parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ThetaDomain {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl ThetaDomain {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() {
            return Err(Error::Dimension {
                expected: lo.len(),
                got: hi.len(),
            });
        }
        if lo.iter().zip(&hi).any(|(l, h)| !(l < h)) {
            return Err(Error::Precondition("theta domain needs lo < hi on every axis".into()));
        }
        Ok(Self { lo, hi })
    }

    pub fn cube(dim: usize, lo: f64, hi: f64) -> Self {
        Self {
            lo: vec![lo; dim],
            hi: vec![hi; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn contains(&self, theta: &[f64]) -> bool {
        theta.len() == self.dim()
            && theta
                .iter()
                .zip(self.lo.iter().zip(&self.hi))
                .all(|(t, (l, h))| *l <= *t && *t <= *h)
    }

    pub fn center(&self) -> Vec<f64> {
        self.lo.iter().zip(&self.hi).map(|(l, h)| 0.5 * (l + h)).collect()
    }
}

/// How the base measure was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaseKind {
    /// Exact counting-type measure on a finite set.
    Discrete,
    /// Quadrature discretisation of a continuous base measure on the line.
    Quadrature { nodes: usize },
}

/// The three independent ways of computing the Fisher matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Route {
    /// Covariance of the pushed-forward statistic `T_*P_θ`.
    A,
    /// Expected outer product of the coordinate scores on the sample space.
    B,
    /// Central-difference Hessian of the log-partition function.
    C,
}

impl std::str::FromStr for Route {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "A" => Ok(Route::A),
            "B" => Ok(Route::B),
            "C" => Ok(Route::C),
            other => Err(Error::Config(format!("unknown route `{other}` (expected A, B or C)"))),
        }
    }
}

/// A tangent vector `(θ, a)` to the natural parameter space.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentCoord {
    pub theta: Vec<f64>,
    pub a: Vec<f64>,
}

impl TangentCoord {
    pub fn new(theta: Vec<f64>, a: Vec<f64>) -> Self {
        Self { theta, a }
    }

    fn check_base(&self, other: &TangentCoord) -> Result<()> {
        if self.theta != other.theta {
            return Err(Error::BasePointMismatch);
        }
        Ok(())
    }

    pub fn add(&self, other: &TangentCoord) -> Result<TangentCoord> {
        self.check_base(other)?;
        Ok(TangentCoord::new(
            self.theta.clone(),
            self.a.iter().zip(&other.a).map(|(x, y)| x + y).collect(),
        ))
    }

    pub fn sub(&self, other: &TangentCoord) -> Result<TangentCoord> {
        self.add(&other.scale(-1.0))
    }

    pub fn scale(&self, alpha: f64) -> TangentCoord {
        TangentCoord::new(self.theta.clone(), self.a.iter().map(|x| alpha * x).collect())
    }

    pub fn same_base(&self, other: &TangentCoord) -> Result<()> {
        self.check_base(other)
    }
}

/// A regular exponential family of order `d` on a finite (or discretised)
/// sample space.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpFamily {
    name: String,
    base: FiniteMeasure,
    /// `T(x_i)` for every base atom, row-major `len × d`.
    stats: Vec<f64>,
    d: usize,
    domain: ThetaDomain,
    grid: Vec<Vec<f64>>,
    kind: BaseKind,
}

impl fmt::Display for ExpFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

impl ExpFamily {
    /// Builds a family and checks the full-rank condition at the centre of
    /// the domain.
    pub fn new<T>(
        name: impl Into<String>,
        base: FiniteMeasure,
        statistic: T,
        domain: ThetaDomain,
        kind: BaseKind,
    ) -> Result<Self>
    where
        T: Fn(&[f64]) -> Vec<f64>,
    {
        let d = domain.dim();
        let mut stats = Vec::with_capacity(base.len() * d);
        for i in 0..base.len() {
            let t = statistic(base.point(i));
            if t.len() != d {
                return Err(Error::Dimension { expected: d, got: t.len() });
            }
            stats.extend(t);
        }
        let grid = default_grid(&domain);
        let family = Self {
            name: name.into(),
            base,
            stats,
            d,
            domain,
            grid,
            kind,
        };
        family.cov_statistic(&family.domain.center())?;
        Ok(family)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Order of the family (dimension of `θ` and of `T`).
    pub fn order(&self) -> usize {
        self.d
    }

    pub fn base(&self) -> &FiniteMeasure {
        &self.base
    }

    pub fn domain(&self) -> &ThetaDomain {
        &self.domain
    }

    pub fn kind(&self) -> BaseKind {
        self.kind
    }

    /// Interior test points used by the verification suites.
    pub fn grid(&self) -> &[Vec<f64>] {
        &self.grid
    }

    pub fn stat(&self, i: usize) -> &[f64] {
        &self.stats[i * self.d..(i + 1) * self.d]
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn with_domain(mut self, domain: ThetaDomain) -> Result<Self> {
        if domain.dim() != self.d {
            return Err(Error::Dimension { expected: self.d, got: domain.dim() });
        }
        self.grid = default_grid(&domain);
        self.domain = domain;
        self.cov_statistic(&self.domain.center())?;
        Ok(self)
    }

    pub fn with_grid(mut self, grid: Vec<Vec<f64>>) -> Result<Self> {
        for theta in &grid {
            self.check_domain(theta)?;
        }
        self.grid = grid;
        Ok(self)
    }

    pub fn check_domain(&self, theta: &[f64]) -> Result<()> {
        if !self.domain.contains(theta) {
            return Err(Error::Domain {
                family: self.name.clone(),
                theta: theta.to_vec(),
            });
        }
        Ok(())
    }

    fn dot_stat(&self, theta: &[f64], i: usize) -> f64 {
        theta.iter().zip(self.stat(i)).map(|(a, b)| a * b).sum()
    }

    /// `ln w_i + θ·T(x_i)`, with `-∞` on zero-weight atoms.
    fn log_terms(&self, theta: &[f64]) -> Vec<f64> {
        (0..self.base.len())
            .map(|i| {
                let w = self.base.weights()[i];
                if w > 0.0 {
                    w.ln() + self.dot_stat(theta, i)
                } else {
                    f64::NEG_INFINITY
                }
            })
            .collect()
    }

    fn log_partition_unchecked(&self, theta: &[f64]) -> Result<f64> {
        let terms = self.log_terms(theta);
        let shift = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !shift.is_finite() {
            return Err(Error::Overflow { theta: theta.to_vec() });
        }
        let sum: f64 = terms.iter().map(|t| (t - shift).exp()).sum();
        let psi = shift + sum.ln();
        if !psi.is_finite() {
            return Err(Error::Overflow { theta: theta.to_vec() });
        }
        Ok(psi)
    }

    /// `ψ(θ) = log Σ_i w_i exp(θ·T(x_i))`, evaluated with a max shift.
    pub fn log_partition(&self, theta: &[f64]) -> Result<f64> {
        self.check_domain(theta)?;
        self.log_partition_unchecked(theta)
    }

    /// `p_θ(x_i) w_i` for each base atom.
    pub fn probabilities(&self, theta: &[f64]) -> Result<Vec<f64>> {
        let psi = self.log_partition(theta)?;
        Ok(self.log_terms(theta).iter().map(|t| (t - psi).exp()).collect())
    }

    /// The distribution `P_θ = p_θ μ` on the sample space.
    pub fn density_measure(&self, theta: &[f64]) -> Result<FiniteMeasure> {
        Ok(self.base.reweighted(self.probabilities(theta)?))
    }

    /// `T_*P_θ` as a measure on `R^d`.
    pub fn statistic_distribution(&self, theta: &[f64]) -> Result<FiniteMeasure> {
        let probs = self.probabilities(theta)?;
        Ok(FiniteMeasure::from_flat(self.d, self.stats.clone(), probs))
    }

    /// `τ_θ = ∫ T dP_θ`.
    pub fn mean_statistic(&self, theta: &[f64]) -> Result<DVector<f64>> {
        Ok(moments(&self.statistic_distribution(theta)?).0)
    }

    /// `Σ_θ`, the covariance of `T` under `P_θ`; errors if it is singular.
    pub fn cov_statistic(&self, theta: &[f64]) -> Result<DMatrix<f64>> {
        let (_, cov) = moments(&self.statistic_distribution(theta)?);
        require_positive_definite(&cov)?;
        Ok(cov)
    }

    /// Fisher information matrix at `θ` in natural coordinates.
    pub fn fisher_information(&self, theta: &[f64], route: Route) -> Result<DMatrix<f64>> {
        match route {
            Route::A => self.cov_statistic(theta),
            Route::B => self.fisher_by_scores(theta),
            Route::C => self.hessian_log_partition(theta, HESSIAN_STEP),
        }
    }

    /// `∫ (∂_i log p_θ)(∂_j log p_θ) dP_θ` with `∂_i log p_θ = T_i − τ_i`,
    /// summed over the sample space.
    fn fisher_by_scores(&self, theta: &[f64]) -> Result<DMatrix<f64>> {
        let probs = self.probabilities(theta)?;
        let d = self.d;
        let mut tau = vec![0.0; d];
        for (i, p) in probs.iter().enumerate() {
            for (k, t) in self.stat(i).iter().enumerate() {
                tau[k] += p * t;
            }
        }
        let mut g = DMatrix::zeros(d, d);
        for (i, p) in probs.iter().enumerate() {
            let score: Vec<f64> = self.stat(i).iter().zip(&tau).map(|(t, m)| t - m).collect();
            for r in 0..d {
                for c in 0..d {
                    g[(r, c)] += p * score[r] * score[c];
                }
            }
        }
        Ok(g)
    }

    fn shifted(theta: &[f64], moves: &[(usize, f64)]) -> Vec<f64> {
        let mut t = theta.to_vec();
        for &(axis, delta) in moves {
            t[axis] += delta;
        }
        t
    }

    /// Central-difference Hessian of `ψ`.
    pub fn hessian_log_partition(&self, theta: &[f64], h: f64) -> Result<DMatrix<f64>> {
        self.check_domain(theta)?;
        let d = self.d;
        let psi = |moves: &[(usize, f64)]| self.log_partition(&Self::shifted(theta, moves));
        let centre = psi(&[])?;
        let mut hess = DMatrix::zeros(d, d);
        for i in 0..d {
            hess[(i, i)] = (psi(&[(i, h)])? - 2.0 * centre + psi(&[(i, -h)])?) / (h * h);
            for j in 0..i {
                let v = (psi(&[(i, h), (j, h)])? - psi(&[(i, h), (j, -h)])?
                    - psi(&[(i, -h), (j, h)])?
                    + psi(&[(i, -h), (j, -h)])?)
                    / (4.0 * h * h);
                hess[(i, j)] = v;
                hess[(j, i)] = v;
            }
        }
        Ok(hess)
    }

    /// Central-difference gradient of `ψ`.
    pub fn gradient_log_partition(&self, theta: &[f64], h: f64) -> Result<DVector<f64>> {
        self.check_domain(theta)?;
        let mut grad = DVector::zeros(self.d);
        for i in 0..self.d {
            let up = self.log_partition(&Self::shifted(theta, &[(i, h)]))?;
            let down = self.log_partition(&Self::shifted(theta, &[(i, -h)]))?;
            grad[i] = (up - down) / (2.0 * h);
        }
        Ok(grad)
    }

    /// The statistical tangent vector `(P_θ, A)` with
    /// `dA/dP_θ = a·(T − τ_θ)`.
    pub fn model_tangent(&self, u: &TangentCoord) -> Result<TangentPair> {
        if u.a.len() != self.d {
            return Err(Error::Dimension { expected: self.d, got: u.a.len() });
        }
        let p = self.density_measure(&u.theta)?;
        let tau = self.mean_statistic(&u.theta)?;
        // density_measure keeps the base atom order, so stat(i) lines up
        let direction = p.scale_by(|i, _| {
            self.stat(i)
                .iter()
                .zip(tau.iter())
                .zip(&u.a)
                .map(|((t, m), a)| a * (t - m))
                .sum()
        });
        TangentPair::new(p, direction)
    }

    /// Same family with statistic `M T + c`. A parameter `θ` of `self`
    /// corresponds to `M^{-T} θ` of the result.
    pub fn affine_statistic(&self, m: &DMatrix<f64>, c: &DVector<f64>) -> Result<ExpFamily> {
        let d = self.d;
        if m.shape() != (d, d) || c.len() != d {
            return Err(Error::Dimension { expected: d, got: c.len() });
        }
        let m_inv_t = m
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::Precondition("statistic map is not invertible".into()))?
            .transpose();
        let mut stats = Vec::with_capacity(self.stats.len());
        for i in 0..self.base.len() {
            let t = DVector::from_column_slice(self.stat(i));
            stats.extend((m * t + c).iter());
        }
        // bounding box of the image of the old domain
        let corners = 1usize << d;
        let mut lo = vec![f64::INFINITY; d];
        let mut hi = vec![f64::NEG_INFINITY; d];
        for mask in 0..corners {
            let corner: Vec<f64> = (0..d)
                .map(|k| if mask >> k & 1 == 1 { self.domain.hi[k] } else { self.domain.lo[k] })
                .collect();
            let image = &m_inv_t * DVector::from_vec(corner);
            for k in 0..d {
                lo[k] = lo[k].min(image[k]);
                hi[k] = hi[k].max(image[k]);
            }
        }
        let grid = self
            .grid
            .iter()
            .map(|t| (&m_inv_t * DVector::from_column_slice(t)).iter().copied().collect())
            .collect();
        Ok(ExpFamily {
            name: format!("{}[affine]", self.name),
            base: self.base.clone(),
            stats,
            d,
            domain: ThetaDomain { lo, hi },
            grid,
            kind: self.kind,
        })
    }
}

/// Five interior points: the centre plus offsets `±0.5w`, `±w` spread over
/// the axes, with `w` a fifth of the half-width (capped at 2).
fn default_grid(domain: &ThetaDomain) -> Vec<Vec<f64>> {
    const STEPS: [f64; 5] = [-1.0, -0.5, 0.0, 0.5, 1.0];
    let centre = domain.center();
    (0..5)
        .map(|j| {
            (0..domain.dim())
                .map(|k| {
                    let half = 0.5 * (domain.hi[k] - domain.lo[k]);
                    let w = (0.2 * half).min(2.0);
                    centre[k] + w * STEPS[(j + k) % 5]
                })
                .collect()
        })
        .collect()
}

fn ln_factorial(x: usize) -> f64 {
    (1..=x).map(|k| (k as f64).ln()).sum()
}

fn ln_binomial(m: usize, x: usize) -> f64 {
    ln_factorial(m) - ln_factorial(x) - ln_factorial(m - x)
}

fn bad(family: &str, reason: impl Into<String>) -> Error {
    Error::BadParam {
        family: family.to_string(),
        reason: reason.into(),
    }
}

/// Names accepted by [`make_family`], with their parameter meaning.
pub const FAMILY_NAMES: [(&str, &str); 6] = [
    ("bernoulli", "none"),
    ("binomial", "m: number of trials (default 4)"),
    ("categorical", "k: number of categories (default 3)"),
    ("poisson_trunc", "N: largest count kept (default 50)"),
    ("gauss_known_var", "nodes: Gauss-Hermite nodes (default 201)"),
    ("exponential_dist", "nodes: Gauss-Legendre nodes (default 201)"),
];

/// Builds one of the built-in families.
///
/// | name | base measure | `T` | domain |
/// |---|---|---|---|
/// | `bernoulli` | counting on `{0,1}` | `x` | `[-10, 10]` |
/// | `binomial(m)` | `C(m,x)` on `{0..m}` | `x` | `[-10, 10]` |
/// | `categorical(k)` | counting on `{0..k-1}` | one-hot, first `k-1` coords | `[-10, 10]^{k-1}` |
/// | `poisson_trunc(N)` | `1/x!` on `{0..N}` | `x` | `[-5, 2]` |
/// | `gauss_known_var(nodes)` | `N(0,1)`, Gauss–Hermite | `x` | `[-3, 3]` |
/// | `exponential_dist(nodes)` | `e^{-x} dx` on `(0,∞)`, Gauss–Legendre in `t = x/(1+x)` | `x` | `[-2, 0.5]` |
///
/// `exponential_dist` at `θ` is the exponential distribution with rate
/// `1 − θ`; `gauss_known_var` at `θ` is `N(θ, 1)`.
pub fn make_family(name: &str, params: &[usize]) -> Result<ExpFamily> {
    let one_param = |default: usize| -> Result<usize> {
        match params {
            [] => Ok(default),
            [p] => Ok(*p),
            _ => Err(bad(name, format!("expected at most one parameter, got {}", params.len()))),
        }
    };
    match name {
        "bernoulli" => {
            if !params.is_empty() {
                return Err(bad(name, "takes no parameters"));
            }
            let base = FiniteMeasure::on_line(&[0.0, 1.0], vec![1.0, 1.0])?;
            ExpFamily::new(name, base, |x| vec![x[0]], ThetaDomain::cube(1, -10.0, 10.0), BaseKind::Discrete)
        }
        "binomial" => {
            let m = one_param(4)?;
            if m == 0 {
                return Err(bad(name, "m must be at least 1"));
            }
            let xs: Vec<f64> = (0..=m).map(|x| x as f64).collect();
            let ws = (0..=m).map(|x| ln_binomial(m, x).exp().round()).collect();
            let base = FiniteMeasure::on_line(&xs, ws)?;
            ExpFamily::new(format!("binomial({m})"), base, |x| vec![x[0]], ThetaDomain::cube(1, -10.0, 10.0), BaseKind::Discrete)
        }
        "categorical" => {
            let k = one_param(3)?;
            if k < 2 {
                return Err(bad(name, "k must be at least 2"));
            }
            let xs: Vec<f64> = (0..k).map(|x| x as f64).collect();
            let base = FiniteMeasure::on_line(&xs, vec![1.0; k])?;
            let stat = move |x: &[f64]| -> Vec<f64> {
                let c = x[0] as usize;
                (0..k - 1).map(|j| if j == c { 1.0 } else { 0.0 }).collect()
            };
            ExpFamily::new(format!("categorical({k})"), base, stat, ThetaDomain::cube(k - 1, -10.0, 10.0), BaseKind::Discrete)
        }
        "poisson_trunc" => {
            let n = one_param(50)?;
            if n == 0 {
                return Err(bad(name, "N must be at least 1"));
            }
            let xs: Vec<f64> = (0..=n).map(|x| x as f64).collect();
            let ws = (0..=n).map(|x| (-ln_factorial(x)).exp()).collect();
            let base = FiniteMeasure::on_line(&xs, ws)?;
            let family = ExpFamily::new(
                format!("poisson_trunc({n})"),
                base,
                |x| vec![x[0]],
                ThetaDomain::cube(1, -5.0, 2.0),
                BaseKind::Discrete,
            )?;
            family.with_grid(vec![vec![-1.0], vec![-0.5], vec![0.0], vec![0.5], vec![1.0]])
        }
        "gauss_known_var" => {
            let nodes = one_param(DEFAULT_NODES)?;
            if nodes < 2 {
                return Err(bad(name, "need at least 2 nodes"));
            }
            let rule = gauss_hermite_normal(nodes);
            let base = FiniteMeasure::on_line(&rule.nodes, rule.weights)?;
            ExpFamily::new(
                format!("gauss_known_var({nodes})"),
                base,
                |x| vec![x[0]],
                ThetaDomain::cube(1, -3.0, 3.0),
                BaseKind::Quadrature { nodes },
            )
        }
        "exponential_dist" => {
            let nodes = one_param(DEFAULT_NODES)?;
            if nodes < 2 {
                return Err(bad(name, "need at least 2 nodes"));
            }
            let rule = gauss_legendre(nodes);
            let mut xs = Vec::with_capacity(nodes);
            let mut ws = Vec::with_capacity(nodes);
            for (s, w) in rule.nodes.iter().zip(&rule.weights) {
                // s ∈ (-1,1) → t ∈ (0,1) → x = t/(1−t)
                let t = 0.5 * (s + 1.0);
                let x = t / (1.0 - t);
                let jacobian = 0.5 / ((1.0 - t) * (1.0 - t));
                xs.push(x);
                ws.push(w * jacobian * (-x).exp());
            }
            let base = FiniteMeasure::on_line(&xs, ws)?;
            let family = ExpFamily::new(
                format!("exponential_dist({nodes})"),
                base,
                |x| vec![x[0]],
                ThetaDomain::cube(1, -2.0, 0.5),
                BaseKind::Quadrature { nodes },
            )?;
            family.with_grid(vec![vec![-1.0], vec![-0.5], vec![0.0], vec![0.2], vec![0.4]])
        }
        other => Err(Error::UnknownFamily(other.to_string())),
    }
}

/// Every built-in family with default parameters.
pub fn builtin_families() -> Vec<ExpFamily> {
    FAMILY_NAMES
        .iter()
        .map(|(name, _)| make_family(name, &[]).expect("built-in family"))
        .collect()
}
