//! One function per subcommand, each producing CSV rows.

use std::sync::Arc;

use expgeom::derived::AffineMap;
use expgeom::expfam::FAMILY_NAMES;
use expgeom::geometry::{fisher_norm_functional, l1_perturbed_functional, MetricField};
use expgeom::invariance::{
    chain_limit, check_a1_with_tol, check_a2_with_tol, check_a3_affine, check_a3_constancy, claim1_pipeline,
    clt_diagnostics, default_tolerance, recover_constant, reference_affine_map, sinusoidal_metric,
    uniqueness_residual,
};
use expgeom::tensors::{
    amari_chentsov, fd_third_derivative, higher_scaling_check, odd_k_vanishing_check, permutation_residual,
    polarize_diagonal, symmetric_power_eval, SymmetricTensorField, THIRD_DERIVATIVE_STEP,
};
use expgeom::expfam::BaseKind;
use expgeom::{make_family, Result, TangentCoord};

use crate::config::RunConfig;
use crate::report::Row;

const RECOVER_TRIALS: usize = 20;
const RECOVER_SCALE: f64 = 2.5;
const SINUSOIDAL_AMPLITUDE: f64 = 0.2;
const L1_WEIGHT: f64 = 0.1;
const FD_TOL: f64 = 1e-5;
const SYMMETRY_TOL: f64 = 1e-12;
const POLARIZATION_TOL: f64 = 1e-8;
const ODD_TOL: f64 = 1e-10;
const MONOTONE_SLACK: f64 = 1e-12;

/// Collects rows, turning numerical failures into failing NaN rows.
struct Rows<'a> {
    family: &'a str,
    rows: Vec<Row>,
}

impl<'a> Rows<'a> {
    fn new(family: &'a str) -> Self {
        Self { family, rows: Vec::new() }
    }

    fn push(&mut self, theta: &[f64], n: Option<usize>, quantity: &str, tol: Option<f64>, value: Result<f64>) {
        let row = match (value, tol) {
            (Ok(v), Some(t)) => Row::check(self.family, theta, n, quantity, v, t),
            (Ok(v), None) => Row::info(self.family, theta, n, quantity, v),
            (Err(e), t) => {
                eprintln!("{}: {quantity} at θ = {theta:?}, n = {n:?}: {e}", self.family);
                Row::check(self.family, theta, n, quantity, f64::NAN, t.unwrap_or(0.0))
            }
        };
        self.rows.push(row);
    }
}

/// Unit vector `(1, …, 1)/√d`.
fn diagonal_direction(d: usize) -> Vec<f64> {
    vec![1.0 / (d as f64).sqrt(); d]
}

/// The `j`-th fixed test direction: deterministic, not axis-aligned.
fn test_direction(d: usize, j: usize) -> Vec<f64> {
    (0..d).map(|i| ((1 + i + 3 * j) as f64).cos()).collect()
}

fn tolerance(cfg: &RunConfig) -> f64 {
    cfg.tol.unwrap_or_else(|| default_tolerance(&cfg.family))
}

/// Built-in families as CSV: name, parameter, order, domain, kind.
pub fn cmd_families() -> Result<String> {
    let mut out = String::from("family,parameter,order,theta_lo,theta_hi,kind\n");
    for (name, param) in FAMILY_NAMES {
        let f = make_family(name, &[])?;
        let join = |v: &[f64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(";");
        let kind = match f.kind() {
            BaseKind::Discrete => "discrete".to_string(),
            BaseKind::Quadrature { nodes } => format!("quadrature({nodes})"),
        };
        out.push_str(&format!(
            "{name},{param},{},{},{},{kind}\n",
            f.order(),
            join(&f.domain().lo),
            join(&f.domain().hi)
        ));
    }
    Ok(out)
}

pub fn cmd_fisher(cfg: &RunConfig) -> Vec<Row> {
    let f = &cfg.family;
    let mut rows = Rows::new(f.name());
    for theta in &cfg.thetas {
        eprintln!("fisher: {} θ = {theta:?}", f.name());
        match f.fisher_information(theta, cfg.route) {
            Ok(m) => {
                for i in 0..m.nrows() {
                    for j in 0..m.ncols() {
                        rows.push(theta, None, &format!("fisher_{:?}[{i}][{j}]", cfg.route), None, Ok(m[(i, j)]));
                    }
                }
            }
            Err(e) => rows.push(theta, None, &format!("fisher_{:?}", cfg.route), None, Err(e)),
        }
    }
    rows.rows
}

pub fn cmd_invariance(cfg: &RunConfig) -> Vec<Row> {
    let f = &cfg.family;
    let tol = tolerance(cfg);
    let h = fisher_norm_functional();
    let map: AffineMap = reference_affine_map(f.order());
    let mut rows = Rows::new(f.name());
    for theta in &cfg.thetas {
        let u = TangentCoord::new(theta.clone(), diagonal_direction(f.order()));
        let v = TangentCoord::new(theta.clone(), test_direction(f.order(), 0));
        for &n in &cfg.n_list {
            eprintln!("invariance: {} θ = {theta:?} n = {n}", f.name());
            rows.push(theta, Some(n), "A1", Some(tol), check_a1_with_tol(f, &u, &v, n, tol).map(|r| r.residual));
            rows.push(theta, Some(n), "A2", Some(tol), check_a2_with_tol(f, &u, &v, n, tol).map(|r| r.residual));
            rows.push(theta, Some(n), "A3-affine", Some(tol), check_a3_affine(&h, f, &u, n, &map, tol).map(|r| r.residual));
            let gap = claim1_pipeline(f, &u, n).and_then(|v| Ok((v - chain_limit(f, &u)?).abs()));
            rows.push(theta, Some(n), "chain_gap", Some(tol), gap);
        }
        let last = cfg.n_list.last().copied();
        let spread = check_a3_constancy(&h, f, &u, &cfg.n_list, tol).map(|r| r.residual);
        rows.push(theta, last, "A3-constancy", Some(tol), spread);
    }
    rows.rows
}

pub fn cmd_clt(cfg: &RunConfig) -> Vec<Row> {
    let f = &cfg.family;
    let mut rows = Rows::new(f.name());
    for theta in &cfg.thetas {
        let mut ks = Vec::new();
        for &n in &cfg.n_list {
            eprintln!("clt: {} θ = {theta:?} n = {n}", f.name());
            let diag = clt_diagnostics(f, theta, n);
            if let Ok(d) = &diag {
                ks.push(d.ks_max);
            }
            rows.push(theta, Some(n), "moment_gap", None, diag.as_ref().map(|d| d.moment_gap).map_err(Clone::clone));
            rows.push(theta, Some(n), "ks_max", None, diag.map(|d| d.ks_max));
        }
        if ks.len() == cfg.n_list.len() && ks.len() > 1 {
            let rise = ks.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
            // monotonicity is only expected for exactly discrete families
            let tol = (f.kind() == BaseKind::Discrete).then_some(MONOTONE_SLACK);
            rows.push(theta, None, "ks_max_increase", tol, Ok(rise));
        }
    }
    rows.rows
}

pub fn cmd_tensor(cfg: &RunConfig) -> Vec<Row> {
    let f = &cfg.family;
    let d = f.order();
    let tol = tolerance(cfg);
    let shared = Arc::new(f.clone());
    let mut rows = Rows::new(f.name());
    let a = diagonal_direction(d);
    let diag3 = vec![a.clone(); 3];
    let dirs4: Vec<Vec<f64>> = (0..4).map(|j| test_direction(d, j)).collect();
    let sym4 = SymmetricTensorField::new(shared.clone(), 4, "sym4", |fam, t, dirs| symmetric_power_eval(fam, t, dirs, 1.0));
    let ac3 = SymmetricTensorField::amari_chentsov(shared.clone(), 3);
    let zero3 = SymmetricTensorField::fisher_power(shared, 0.0, 3);
    for theta in &cfg.thetas {
        eprintln!("tensor: {} θ = {theta:?}", f.name());
        let ac = amari_chentsov(f, theta, &diag3);
        rows.push(theta, None, "amari_chentsov_3", None, ac.clone());
        let gap = ac.and_then(|ac| Ok((fd_third_derivative(f, theta, &diag3, THIRD_DERIVATIVE_STEP)? - ac).abs()));
        rows.push(theta, None, "amari_chentsov_3_fd_gap", Some(FD_TOL), gap);
        let perm = sym4.as_ref().map_err(Clone::clone).and_then(|s| permutation_residual(s, theta, &dirs4));
        rows.push(theta, None, "sym4_permutation", Some(SYMMETRY_TOL), perm);
        let polar = sym4.as_ref().map_err(Clone::clone).and_then(|s| {
            let direct = s.eval(theta, &dirs4)?;
            Ok((polarize_diagonal(&dirs4, |v| s.diagonal(theta, v))? - direct).abs())
        });
        rows.push(theta, None, "sym4_polarization_gap", Some(POLARIZATION_TOL), polar);
        let odd0 = zero3.as_ref().map_err(Clone::clone).and_then(|z| odd_k_vanishing_check(z, theta, &a));
        rows.push(theta, None, "odd3_c0_residual", Some(ODD_TOL), odd0);
        let odd_ac = ac3.as_ref().map_err(Clone::clone).and_then(|t| odd_k_vanishing_check(t, theta, &a));
        rows.push(theta, None, "odd3_amari_chentsov_residual", None, odd_ac);
        for &n in &cfg.n_list {
            let k2 = higher_scaling_check(f, theta, &a, n, 2);
            rows.push(theta, Some(n), "scaling_k2_residual", Some(tol * n as f64), k2.map(|r| r.residual));
            if n > 1 {
                for k in [2, 3, 4] {
                    let exponent = higher_scaling_check(f, theta, &a, n, k).map(|r| r.exponent.unwrap_or(f64::NAN));
                    rows.push(theta, Some(n), &format!("scaling_k{k}_exponent"), None, exponent);
                }
            }
        }
    }
    rows.rows
}

pub fn cmd_uniqueness(cfg: &RunConfig) -> Vec<Row> {
    let f = &cfg.family;
    let tol = tolerance(cfg);
    let fisher = fisher_norm_functional();
    let scaled = fisher.scaled(3.0);
    let perturbed = l1_perturbed_functional(L1_WEIGHT);
    let mut rows = Rows::new(f.name());
    let n1 = cfg.n_list[0];
    for theta in &cfg.thetas {
        let u = TangentCoord::new(theta.clone(), diagonal_direction(f.order()));
        for &n2 in &cfg.n_list[1..] {
            eprintln!("uniqueness: {} θ = {theta:?} n = {n1} vs {n2}", f.name());
            rows.push(theta, Some(n2), &format!("uniqueness_fisher_vs_n{n1}"), Some(tol), uniqueness_residual(&fisher, f, &u, n1, n2));
            rows.push(theta, Some(n2), &format!("uniqueness_3fisher_vs_n{n1}"), Some(tol), uniqueness_residual(&scaled, f, &u, n1, n2));
            rows.push(theta, Some(n2), &format!("uniqueness_l1_{L1_WEIGHT}_vs_n{n1}"), None, uniqueness_residual(&perturbed, f, &u, n1, n2));
        }
    }
    eprintln!("uniqueness: {} recovering constants (seed {})", f.name(), cfg.seed);
    match f.clone().with_grid(cfg.thetas.clone()) {
        Ok(g) => {
            let family = Arc::new(g);
            let est = recover_constant(&MetricField::scaled_fisher(family.clone(), RECOVER_SCALE), RECOVER_TRIALS, cfg.seed);
            rows.push(&[], None, "recover_constant_c_hat", None, est.as_ref().map(|e| e.c_hat).map_err(Clone::clone));
            rows.push(&[], None, "recover_constant_c_error", Some(tol), est.as_ref().map(|e| (e.c_hat - RECOVER_SCALE).abs()).map_err(Clone::clone));
            rows.push(&[], None, "recover_constant_spread", Some(tol), est.map(|e| e.spread));
            let sin = recover_constant(&sinusoidal_metric(family, SINUSOIDAL_AMPLITUDE), RECOVER_TRIALS, cfg.seed);
            rows.push(&[], None, "sinusoidal_spread", None, sin.map(|e| e.spread));
        }
        Err(e) => rows.push(&[], None, "recover_constant_c_hat", Some(tol), Err(e)),
    }
    rows.rows
}
