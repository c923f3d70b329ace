//! Finitely supported measures on `R^m`.
//!
//! Every distribution in the crate, discrete or continuous, is carried as a
//! weighted point set. Continuous distributions arrive here already
//! discretised by a quadrature rule, so this module never integrates a
//! density: integrals are finite sums and Radon–Nikodym derivatives are
//! pointwise ratios of weights.
//!
//! Points are compared after rounding each coordinate to
//! [`QUANTIZE_DIGITS`] significant decimal digits. Two points that agree
//! after rounding are the same atom and their weights are merged. This keeps
//! lattice push-forwards (sums of integer statistics, for instance) exact in
//! the presence of floating-point noise.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

/// Significant decimal digits kept when deciding whether two points coincide.
pub const QUANTIZE_DIGITS: i32 = 12;

/// Slack allowed on the total mass of a probability measure.
pub const PROBABILITY_MASS_TOL: f64 = 1e-12;

/// Slack allowed on the total mass of a tangent direction.
pub const TANGENT_MASS_TOL: f64 = 1e-10;

/// Rounds `x` to [`QUANTIZE_DIGITS`] significant digits.
pub fn quantize(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        // folds -0.0 into 0.0
        return if x == 0.0 { 0.0 } else { x };
    }
    let exponent = x.abs().log10().floor() as i32;
    let shift = QUANTIZE_DIGITS - 1 - exponent;
    let mantissa = if shift >= 0 {
        (x * 10f64.powi(shift)).round()
    } else {
        (x / 10f64.powi(-shift)).round()
    };
    let q = if shift >= 0 {
        mantissa / 10f64.powi(shift)
    } else {
        mantissa * 10f64.powi(-shift)
    };
    if q == 0.0 {
        0.0
    } else {
        q
    }
}

/// Hashable identity of a point after quantisation.
pub(crate) fn point_key(point: &[f64]) -> Vec<u64> {
    point.iter().map(|&x| quantize(x).to_bits()).collect()
}

fn lex_cmp(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            std::cmp::Ordering::Equal => continue,
            other => return other,
        }
    }
    std::cmp::Ordering::Equal
}

/// Flat storage shared by signed and unsigned measures: `len` points of
/// dimension `dim`, row-major in `coords`.
#[derive(Debug, Clone, PartialEq)]
struct Atoms {
    dim: usize,
    coords: Vec<f64>,
    weights: Vec<f64>,
}

impl Atoms {
    fn len(&self) -> usize {
        self.weights.len()
    }

    fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    /// Sorts atoms by quantised coordinates and merges coinciding ones.
    /// Zero-weight atoms are kept so that supports stay predictable.
    fn canonical(dim: usize, coords: Vec<f64>, weights: Vec<f64>) -> Atoms {
        let n = weights.len();
        let keys: Vec<f64> = coords.iter().map(|&x| quantize(x)).collect();
        let key = |i: usize| &keys[i * dim..(i + 1) * dim];

        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| lex_cmp(key(i), key(j)));

        let mut out_coords = Vec::with_capacity(coords.len());
        let mut out_weights: Vec<f64> = Vec::with_capacity(n);
        let mut last: Option<usize> = None;
        for &i in &order {
            match last {
                Some(j) if key(j) == key(i) => {
                    *out_weights.last_mut().unwrap() += weights[i];
                }
                _ => {
                    out_coords.extend_from_slice(&coords[i * dim..(i + 1) * dim]);
                    out_weights.push(weights[i]);
                    last = Some(i);
                }
            }
        }
        Atoms {
            dim,
            coords: out_coords,
            weights: out_weights,
        }
    }

    fn from_points(dim: usize, points: &[Vec<f64>], weights: Vec<f64>) -> Result<Atoms> {
        if points.len() != weights.len() {
            return Err(Error::Dimension {
                expected: points.len(),
                got: weights.len(),
            });
        }
        let mut coords = Vec::with_capacity(points.len() * dim);
        for p in points {
            if p.len() != dim {
                return Err(Error::Dimension {
                    expected: dim,
                    got: p.len(),
                });
            }
            coords.extend_from_slice(p);
        }
        if coords.iter().chain(&weights).any(|v| !v.is_finite()) {
            return Err(Error::Precondition("non-finite point or weight".into()));
        }
        Ok(Atoms::canonical(dim, coords, weights))
    }

    fn push_forward<F>(&self, out_dim: usize, map: F) -> Atoms
    where
        F: Fn(&[f64]) -> Vec<f64>,
    {
        let mut coords = Vec::with_capacity(self.len() * out_dim);
        for i in 0..self.len() {
            let image = map(self.point(i));
            assert_eq!(image.len(), out_dim, "point map returned wrong dimension");
            coords.extend(image);
        }
        Atoms::canonical(out_dim, coords, self.weights.clone())
    }

    fn total_mass(&self) -> f64 {
        self.weights.iter().sum()
    }
}

/// Shared read access to the atoms of a finitely supported measure.
pub trait AtomicMeasure {
    fn dim(&self) -> usize;
    fn len(&self) -> usize;
    fn point(&self, i: usize) -> &[f64];
    fn weights(&self) -> &[f64];

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn total_mass(&self) -> f64 {
        self.weights().iter().sum()
    }

    fn points(&self) -> Vec<Vec<f64>> {
        (0..self.len()).map(|i| self.point(i).to_vec()).collect()
    }

    /// Integral of a function of the point against the measure.
    fn integrate<F: Fn(&[f64]) -> f64>(&self, f: F) -> f64 {
        (0..self.len())
            .map(|i| self.weights()[i] * f(self.point(i)))
            .sum()
    }
}

/// A non-negative measure with finite support.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteMeasure {
    atoms: Atoms,
}

/// A real-valued (possibly negative) measure with finite support.
#[derive(Debug, Clone, PartialEq)]
pub struct SignedFiniteMeasure {
    atoms: Atoms,
}

macro_rules! atomic_impl {
    ($ty:ty) => {
        impl AtomicMeasure for $ty {
            fn dim(&self) -> usize {
                self.atoms.dim
            }
            fn len(&self) -> usize {
                self.atoms.len()
            }
            fn point(&self, i: usize) -> &[f64] {
                self.atoms.point(i)
            }
            fn weights(&self) -> &[f64] {
                &self.atoms.weights
            }
            fn total_mass(&self) -> f64 {
                self.atoms.total_mass()
            }
        }
    };
}

atomic_impl!(FiniteMeasure);
atomic_impl!(SignedFiniteMeasure);

impl FiniteMeasure {
    pub fn new(dim: usize, points: &[Vec<f64>], weights: Vec<f64>) -> Result<Self> {
        if let Some(w) = weights.iter().find(|w| **w < 0.0) {
            return Err(Error::Precondition(format!(
                "negative weight {w} in a non-negative measure"
            )));
        }
        Ok(Self {
            atoms: Atoms::from_points(dim, points, weights)?,
        })
    }

    /// One-dimensional convenience constructor.
    pub fn on_line(points: &[f64], weights: Vec<f64>) -> Result<Self> {
        let pts: Vec<Vec<f64>> = points.iter().map(|&x| vec![x]).collect();
        Self::new(1, &pts, weights)
    }

    pub fn dirac(point: Vec<f64>) -> Self {
        let dim = point.len();
        Self {
            atoms: Atoms {
                dim,
                coords: point,
                weights: vec![1.0],
            },
        }
    }

    pub(crate) fn from_flat(dim: usize, coords: Vec<f64>, weights: Vec<f64>) -> Self {
        debug_assert!(weights.iter().all(|w| *w >= 0.0));
        Self {
            atoms: Atoms::canonical(dim, coords, weights),
        }
    }

    pub fn is_probability(&self) -> bool {
        (self.total_mass() - 1.0).abs() <= PROBABILITY_MASS_TOL
    }

    /// `φ_*P`: weights of atoms whose images coincide are summed.
    pub fn push_forward<F>(&self, out_dim: usize, map: F) -> FiniteMeasure
    where
        F: Fn(&[f64]) -> Vec<f64>,
    {
        FiniteMeasure {
            atoms: self.atoms.push_forward(out_dim, map),
        }
    }

    /// Measure with the same support and weights `f(x_i)·w_i`.
    pub fn scale_by<F: Fn(usize, &[f64]) -> f64>(&self, f: F) -> SignedFiniteMeasure {
        let weights = (0..self.len())
            .map(|i| f(i, self.point(i)) * self.atoms.weights[i])
            .collect();
        SignedFiniteMeasure {
            atoms: Atoms {
                dim: self.atoms.dim,
                coords: self.atoms.coords.clone(),
                weights,
            },
        }
    }

    /// Distribution of `x + y` for independent `x ~ self`, `y ~ other`.
    pub fn convolve(&self, other: &FiniteMeasure) -> Result<FiniteMeasure> {
        if self.dim() != other.dim() {
            return Err(Error::Dimension {
                expected: self.dim(),
                got: other.dim(),
            });
        }
        let dim = self.dim();
        let mut coords = Vec::with_capacity(self.len() * other.len() * dim);
        let mut weights = Vec::with_capacity(self.len() * other.len());
        for i in 0..self.len() {
            let (p, wp) = (self.point(i), self.atoms.weights[i]);
            for j in 0..other.len() {
                let q = other.point(j);
                coords.extend(p.iter().zip(q).map(|(a, b)| a + b));
                weights.push(wp * other.atoms.weights[j]);
            }
        }
        Ok(FiniteMeasure::from_flat(dim, coords, weights))
    }

    /// Same support and atom order, new weights.
    pub fn reweighted(&self, weights: Vec<f64>) -> FiniteMeasure {
        assert_eq!(weights.len(), self.len());
        debug_assert!(weights.iter().all(|w| *w >= 0.0));
        let mut out = self.clone();
        out.atoms.weights = weights;
        out
    }

    /// Projection onto one coordinate axis.
    pub fn marginal(&self, axis: usize) -> FiniteMeasure {
        self.push_forward(1, |x| vec![x[axis]])
    }

    /// Returns a copy rescaled to unit total mass.
    pub fn normalized(&self) -> FiniteMeasure {
        let total = self.total_mass();
        let mut out = self.clone();
        out.atoms.weights.iter_mut().for_each(|w| *w /= total);
        out
    }
}

impl SignedFiniteMeasure {
    pub fn new(dim: usize, points: &[Vec<f64>], weights: Vec<f64>) -> Result<Self> {
        Ok(Self {
            atoms: Atoms::from_points(dim, points, weights)?,
        })
    }

    pub fn on_line(points: &[f64], weights: Vec<f64>) -> Result<Self> {
        let pts: Vec<Vec<f64>> = points.iter().map(|&x| vec![x]).collect();
        Self::new(1, &pts, weights)
    }

    /// The zero measure carried on the support of `base`.
    pub fn zero_on(base: &FiniteMeasure) -> Self {
        base.scale_by(|_, _| 0.0)
    }

    pub fn push_forward<F>(&self, out_dim: usize, map: F) -> SignedFiniteMeasure
    where
        F: Fn(&[f64]) -> Vec<f64>,
    {
        SignedFiniteMeasure {
            atoms: self.atoms.push_forward(out_dim, map),
        }
    }

    pub fn scaled(&self, alpha: f64) -> SignedFiniteMeasure {
        let mut out = self.clone();
        out.atoms.weights.iter_mut().for_each(|w| *w *= alpha);
        out
    }
}

/// `(mean, covariance)` of a probability measure.
pub fn moments(p: &FiniteMeasure) -> (DVector<f64>, DMatrix<f64>) {
    let d = p.dim();
    let mut mean = DVector::zeros(d);
    for i in 0..p.len() {
        let w = p.weights()[i];
        for (k, x) in p.point(i).iter().enumerate() {
            mean[k] += w * x;
        }
    }
    let mut cov = DMatrix::zeros(d, d);
    let mut centered = vec![0.0; d];
    for i in 0..p.len() {
        let w = p.weights()[i];
        for (k, x) in p.point(i).iter().enumerate() {
            centered[k] = x - mean[k];
        }
        for r in 0..d {
            for c in r..d {
                cov[(r, c)] += w * centered[r] * centered[c];
            }
        }
    }
    for r in 0..d {
        for c in 0..r {
            cov[(r, c)] = cov[(c, r)];
        }
    }
    (mean, cov)
}

/// `dA/dP` evaluated at each support point of `p`, in `p`'s atom order.
pub fn radon_nikodym(a: &SignedFiniteMeasure, p: &FiniteMeasure) -> Result<Vec<f64>> {
    if a.dim() != p.dim() {
        return Err(Error::Dimension {
            expected: p.dim(),
            got: a.dim(),
        });
    }
    let index: HashMap<Vec<u64>, usize> = (0..p.len()).map(|i| (point_key(p.point(i)), i)).collect();
    let mut density = vec![0.0; p.len()];
    for j in 0..a.len() {
        let mass = a.weights()[j];
        match index.get(&point_key(a.point(j))) {
            Some(&i) if p.weights()[i] > 0.0 => density[i] += mass / p.weights()[i],
            _ if mass == 0.0 => {}
            _ => {
                return Err(Error::AbsoluteContinuity {
                    point: a.point(j).to_vec(),
                    mass,
                })
            }
        }
    }
    Ok(density)
}

/// A statistical tangent vector: base distribution plus a zero-mass signed
/// measure absolutely continuous with respect to it.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentPair {
    pub base: FiniteMeasure,
    pub direction: SignedFiniteMeasure,
}

impl TangentPair {
    pub fn new(base: FiniteMeasure, direction: SignedFiniteMeasure) -> Result<Self> {
        let mass = direction.total_mass();
        if mass.abs() > TANGENT_MASS_TOL {
            return Err(Error::Precondition(format!(
                "tangent direction has total mass {mass:e}"
            )));
        }
        radon_nikodym(&direction, &base)?;
        Ok(Self { base, direction })
    }

    /// `dA/dP` on the base support.
    pub fn score(&self) -> Vec<f64> {
        radon_nikodym(&self.direction, &self.base).expect("support checked at construction")
    }

    pub fn push_forward<F>(&self, out_dim: usize, map: F) -> TangentPair
    where
        F: Fn(&[f64]) -> Vec<f64> + Copy,
    {
        TangentPair {
            base: self.base.push_forward(out_dim, map),
            direction: self.direction.push_forward(out_dim, map),
        }
    }
}

/// The standard normal distribution on `R^d`, kept analytic.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GaussianReference {
    pub dim: usize,
}

impl GaussianReference {
    pub fn new(dim: usize) -> Self {
        Self { dim }
    }

    /// Marginal CDF, identical on every axis.
    pub fn cdf(x: f64) -> f64 {
        Normal::standard().cdf(x)
    }

    /// `L²(Φ)` norm of the linear function `y ↦ c·y`, which is `‖c‖`.
    pub fn linear_norm(&self, c: &[f64]) -> f64 {
        debug_assert_eq!(c.len(), self.dim);
        c.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    /// Standardised third and fourth moments of any marginal.
    pub const SKEWNESS: f64 = 0.0;
    pub const KURTOSIS: f64 = 3.0;
}

/// Kolmogorov–Smirnov distance between a one-dimensional finite measure and
/// a continuous CDF. Both one-sided limits of the step CDF are compared at
/// every atom.
pub fn ks_distance<F: Fn(f64) -> f64>(p: &FiniteMeasure, cdf: F) -> f64 {
    assert_eq!(p.dim(), 1, "KS distance needs a one-dimensional measure");
    // atoms are stored in ascending order
    let mut below = 0.0;
    let mut worst: f64 = 0.0;
    for i in 0..p.len() {
        let x = p.point(i)[0];
        let target = cdf(x);
        let above = below + p.weights()[i];
        worst = worst.max((below - target).abs()).max((above - target).abs());
        below = above;
    }
    worst
}
