//! Metric fields on the natural parameter space and norm functionals on
//! `(P, f·P)` pairs.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::expfam::{ExpFamily, Route, TangentCoord};
use crate::linalg::max_abs_diff;
use crate::measures::{radon_nikodym, AtomicMeasure, FiniteMeasure, GaussianReference, TangentPair};

/// Symmetry slack for metric matrices.
pub const SYMMETRY_TOL: f64 = 1e-12;

type MatrixFn = dyn Fn(&ExpFamily, &[f64]) -> Result<DMatrix<f64>> + Send + Sync;

/// A Riemannian metric on `Θ`, given as `θ ↦ ḡ_θ`.
#[derive(Clone)]
pub struct MetricField {
    family: Arc<ExpFamily>,
    label: String,
    eval: Arc<MatrixFn>,
}

impl fmt::Debug for MetricField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MetricField")
            .field("family", &self.family.name())
            .field("label", &self.label)
            .finish()
    }
}

impl MetricField {
    pub fn new<F>(family: Arc<ExpFamily>, label: impl Into<String>, eval: F) -> Self
    where
        F: Fn(&ExpFamily, &[f64]) -> Result<DMatrix<f64>> + Send + Sync + 'static,
    {
        Self {
            family,
            label: label.into(),
            eval: Arc::new(eval),
        }
    }

    /// `ḡ^F_θ = Σ_θ`.
    pub fn fisher(family: Arc<ExpFamily>) -> Self {
        Self::new(family, "fisher", |f, theta| f.fisher_information(theta, Route::A))
    }

    /// `c·ḡ^F`.
    pub fn scaled_fisher(family: Arc<ExpFamily>, c: f64) -> Self {
        Self::new(family, format!("{c}*fisher"), move |f, theta| {
            Ok(f.fisher_information(theta, Route::A)? * c)
        })
    }

    pub fn family(&self) -> &Arc<ExpFamily> {
        &self.family
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// `ḡ_θ`; fails if the returned matrix is not symmetric.
    pub fn matrix(&self, theta: &[f64]) -> Result<DMatrix<f64>> {
        let g = (self.eval)(&self.family, theta)?;
        let d = self.family.order();
        if g.shape() != (d, d) {
            return Err(Error::Dimension { expected: d, got: g.nrows() });
        }
        let asym = max_abs_diff(&g, &g.transpose());
        if asym > SYMMETRY_TOL {
            return Err(Error::Precondition(format!("metric matrix asymmetric by {asym:e}")));
        }
        Ok(g)
    }
}

/// `g(u, v) = aᵀ ḡ_θ b`.
pub fn metric_eval(g: &MetricField, u: &TangentCoord, v: &TangentCoord) -> Result<f64> {
    u.same_base(v)?;
    let m = g.matrix(&u.theta)?;
    let a = DVector::from_column_slice(&u.a);
    let b = DVector::from_column_slice(&v.a);
    if a.len() != m.nrows() || b.len() != m.nrows() {
        return Err(Error::Dimension { expected: m.nrows(), got: a.len().max(b.len()) });
    }
    Ok(a.dot(&(m * b)))
}

/// `h(u) = √g(u, u)`.
pub fn norm_of_tangent(g: &MetricField, u: &TangentCoord) -> Result<f64> {
    Ok(metric_eval(g, u, u)?.max(0.0).sqrt())
}

/// Recovers `g(u, v)` from squared norms: `[h²(u+v) − h²(u−v)]/4`.
pub fn polarize<H>(h2: H, u: &TangentCoord, v: &TangentCoord) -> Result<f64>
where
    H: Fn(&TangentCoord) -> Result<f64>,
{
    let sum = u.add(v)?;
    let diff = u.sub(v)?;
    Ok((h2(&sum)? - h2(&diff)?) / 4.0)
}

/// The invariant form `∫ (dA/dP)(dB/dP) dP` of the Fisher metric, assembled
/// from the model tangents of `u` and `v` through Radon–Nikodym derivatives.
pub fn fisher_invariant_form(family: &ExpFamily, u: &TangentCoord, v: &TangentCoord) -> Result<f64> {
    u.same_base(v)?;
    let tu = family.model_tangent(u)?;
    let tv = family.model_tangent(v)?;
    let du = radon_nikodym(&tu.direction, &tu.base)?;
    let dv = radon_nikodym(&tv.direction, &tu.base)?;
    Ok(tu
        .base
        .weights()
        .iter()
        .zip(du.iter().zip(&dv))
        .map(|(w, (x, y))| w * x * y)
        .sum())
}

/// A function on the support of a measure: either linear, `y ↦ c·y`, or
/// given by its values at the atoms (in atom order).
#[derive(Debug, Clone, PartialEq)]
pub enum ScoreFn {
    Linear(Vec<f64>),
    Values(Vec<f64>),
}

impl ScoreFn {
    pub fn values_on(&self, p: &FiniteMeasure) -> Vec<f64> {
        match self {
            ScoreFn::Linear(c) => (0..p.len())
                .map(|i| p.point(i).iter().zip(c).map(|(y, c)| y * c).sum())
                .collect(),
            ScoreFn::Values(v) => {
                assert_eq!(v.len(), p.len(), "score values do not match the support");
                v.clone()
            }
        }
    }

    pub fn scaled(&self, alpha: f64) -> ScoreFn {
        match self {
            ScoreFn::Linear(c) => ScoreFn::Linear(c.iter().map(|x| alpha * x).collect()),
            ScoreFn::Values(v) => ScoreFn::Values(v.iter().map(|x| alpha * x).collect()),
        }
    }
}

type NormFn = dyn Fn(&FiniteMeasure, &ScoreFn) -> f64 + Send + Sync;

/// A candidate norm `H(P, f·P)` on tangent pairs over `R^d`.
#[derive(Clone)]
pub struct NormFunctional {
    label: String,
    eval: Arc<NormFn>,
}

impl fmt::Debug for NormFunctional {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("NormFunctional").field("label", &self.label).finish()
    }
}

fn l2_norm(p: &FiniteMeasure, f: &ScoreFn) -> f64 {
    let values = f.values_on(p);
    p.weights()
        .iter()
        .zip(&values)
        .map(|(w, v)| w * v * v)
        .sum::<f64>()
        .sqrt()
}

fn l1_norm(p: &FiniteMeasure, f: &ScoreFn) -> f64 {
    let values = f.values_on(p);
    p.weights().iter().zip(&values).map(|(w, v)| w * v.abs()).sum()
}

impl NormFunctional {
    pub fn new<F>(label: impl Into<String>, eval: F) -> Self
    where
        F: Fn(&FiniteMeasure, &ScoreFn) -> f64 + Send + Sync + 'static,
    {
        Self {
            label: label.into(),
            eval: Arc::new(eval),
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn eval(&self, p: &FiniteMeasure, f: &ScoreFn) -> f64 {
        (self.eval)(p, f)
    }

    /// `H(P, A)` for a tangent pair, through `f = dA/dP`.
    pub fn eval_pair(&self, t: &TangentPair) -> f64 {
        self.eval(&t.base, &ScoreFn::Values(t.score()))
    }

    /// `c·H`.
    pub fn scaled(&self, c: f64) -> NormFunctional {
        let inner = self.clone();
        NormFunctional::new(format!("{c}*{}", self.label), move |p, f| c * inner.eval(p, f))
    }
}

/// `H^F(P, f·P) = ‖f‖_{L²(P)}`.
pub fn fisher_norm_functional() -> NormFunctional {
    NormFunctional::new("fisher", l2_norm)
}

/// `H^F + ε·‖f‖_{L¹(P)}`: homogeneous and affine invariant, but not
/// constant along the standardised `Q_n` chain.
pub fn l1_perturbed_functional(eps: f64) -> NormFunctional {
    NormFunctional::new(format!("fisher+{eps}*l1"), move |p, f| l2_norm(p, f) + eps * l1_norm(p, f))
}

/// `H^F(Φ, f·Φ)` for linear `f(y) = c·y`, in closed form.
pub fn fisher_norm_gaussian_linear(c: &[f64]) -> f64 {
    GaussianReference::new(c.len()).linear_norm(c)
}
