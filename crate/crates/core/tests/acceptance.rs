//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs as a plain binary (`harness = false`) so the verdict lines always
//! reach the test output. Exits non-zero if any criterion fails.

use std::process::ExitCode;
use std::sync::Arc;
use std::time::{Duration, Instant};

use expgeom::expfam::BaseKind;
use expgeom::geometry::{fisher_invariant_form, l1_perturbed_functional, MetricField};
use expgeom::invariance::{
    check_a1_with_tol, check_a2_with_tol, chain_limit, claim1_pipeline, claim2_rotation_check, clt_diagnostics,
    product_checkable, recover_constant, sinusoidal_metric, uniqueness_residual, unit_vector,
};
use expgeom::measures::GaussianReference;
use expgeom::tensors::{
    amari_chentsov, fd_third_derivative, odd_k_vanishing_check, permutation_residual, symmetric_power_eval,
    SymmetricTensorField, THIRD_DERIVATIVE_STEP,
};
use expgeom::{builtin_families, make_family, ExpFamily, Result, Route, TangentCoord};
use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const SEED: u64 = 42;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Result<Verdict> {
    Ok(Verdict { pass, detail: detail.into() })
}

fn discrete_families() -> Vec<ExpFamily> {
    builtin_families().into_iter().filter(|f| f.kind() == BaseKind::Discrete).collect()
}

fn quad_form(f: &ExpFamily, theta: &[f64], a: &[f64], b: &[f64], route: Route) -> Result<f64> {
    let m = f.fisher_information(theta, route)?;
    Ok(DVector::from_column_slice(a).dot(&(m * DVector::from_column_slice(b))))
}

fn criterion_1() -> Result<Verdict> {
    let mut worst_ab: f64 = 0.0;
    let mut worst_ac: f64 = 0.0;
    for f in builtin_families() {
        for theta in f.grid() {
            let a = f.fisher_information(theta, Route::A)?;
            let b = f.fisher_information(theta, Route::B)?;
            let c = f.fisher_information(theta, Route::C)?;
            worst_ab = worst_ab.max((&a - &b).amax());
            worst_ac = worst_ac.max((&a - &c).amax());
        }
    }
    let bern = make_family("bernoulli", &[])?.fisher_information(&[0.0], Route::A)?[(0, 0)];
    let pois = make_family("poisson_trunc", &[])?.fisher_information(&[0.0], Route::A)?[(0, 0)];
    // 51-term oracle: Var of the truncated Poisson(1)
    let (mut z, mut m1, mut m2) = (0.0, 0.0, 0.0);
    let mut term = 1.0;
    for x in 0..=50 {
        if x > 0 {
            term /= x as f64;
        }
        z += term;
        m1 += x as f64 * term;
        m2 += (x * x) as f64 * term;
    }
    let oracle = m2 / z - (m1 / z).powi(2);
    let pass = worst_ab <= 1e-10
        && worst_ac <= 1e-6
        && (bern - 0.25).abs() <= 1e-12
        && (pois - oracle).abs() <= 1e-12
        && (pois - 1.0).abs() <= 1e-9;
    verdict(
        pass,
        format!(
            "max|A−B| = {worst_ab:.2e} (≤ 1e-10), max|A−C| = {worst_ac:.2e} (≤ 1e-6), bernoulli(0) = {bern}, poisson_trunc(0) = {pois}"
        ),
    )
}

fn criterion_2() -> Result<Verdict> {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut worst: f64 = 0.0;
    let mut cross_checked = 0;
    for f in discrete_families() {
        for theta in f.grid() {
            let u = TangentCoord::new(theta.clone(), unit_vector(&mut rng, f.order()));
            let v = TangentCoord::new(theta.clone(), unit_vector(&mut rng, f.order()));
            for n in [1, 2, 4, 8, 16] {
                let r = check_a1_with_tol(&f, &u, &v, n, 1e-9)?;
                worst = worst.max(r.residual);
                cross_checked += usize::from(product_checkable(&f, n));
            }
        }
    }
    verdict(worst <= 1e-9, format!("max residual = {worst:.2e} (≤ 1e-9), {cross_checked} cells cross-checked on 𝒳^n"))
}

fn criterion_3() -> Result<Verdict> {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut worst: f64 = 0.0;
    for f in discrete_families() {
        for theta in f.grid() {
            let u = TangentCoord::new(theta.clone(), unit_vector(&mut rng, f.order()));
            let v = TangentCoord::new(theta.clone(), unit_vector(&mut rng, f.order()));
            for n in [1, 2, 4, 8, 16] {
                worst = worst.max(check_a2_with_tol(&f, &u, &v, n, 1e-9)?.residual);
            }
        }
    }
    verdict(worst <= 1e-9, format!("max residual = {worst:.2e} (≤ 1e-9)"))
}

fn criterion_4() -> Result<Verdict> {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut worst_spread: f64 = 0.0;
    let mut worst_limit: f64 = 0.0;
    for f in builtin_families() {
        for theta in f.grid() {
            let u = TangentCoord::new(theta.clone(), unit_vector(&mut rng, f.order()));
            let limit = chain_limit(&f, &u)?;
            let values = [1, 2, 4, 8, 16, 32]
                .iter()
                .map(|&n| claim1_pipeline(&f, &u, n))
                .collect::<Result<Vec<_>>>()?;
            let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
            worst_spread = worst_spread.max(hi - lo);
            worst_limit = worst_limit.max(values.iter().map(|v| (v - limit).abs()).fold(0.0, f64::max));
        }
    }
    verdict(
        worst_spread <= 1e-9 && worst_limit <= 1e-9,
        format!("max spread over n = {worst_spread:.2e}, max |value − ‖Σ^½a‖| = {worst_limit:.2e} (both ≤ 1e-9)"),
    )
}

/// `sup_x |F_n(x) − Φ(x)|` for the standardised Binomial(n, ½), from the
/// binomial pmf directly.
fn binomial_ks_oracle(n: usize) -> f64 {
    let mut pmf = vec![0.0; n + 1];
    let mut ln_c = 0.0;
    for (k, p) in pmf.iter_mut().enumerate() {
        if k > 0 {
            ln_c += ((n - k + 1) as f64).ln() - (k as f64).ln();
        }
        *p = (ln_c - n as f64 * 2f64.ln()).exp();
    }
    let sd = (n as f64 * 0.25).sqrt();
    let mut below = 0.0;
    let mut worst: f64 = 0.0;
    for (k, p) in pmf.iter().enumerate() {
        let z = (k as f64 - n as f64 * 0.5) / sd;
        let phi = GaussianReference::cdf(z);
        worst = worst.max((phi - below).abs());
        below += p;
        worst = worst.max((below - phi).abs());
    }
    worst
}

fn criterion_5() -> Result<Verdict> {
    let bern = make_family("bernoulli", &[])?;
    let ks100 = clt_diagnostics(&bern, &[0.0], 100)?.ks_max;
    let oracle = binomial_ks_oracle(100);
    let mut monotone = true;
    let mut violations = Vec::new();
    for f in discrete_families() {
        for theta in f.grid() {
            let ks = [1, 4, 16, 64]
                .iter()
                .map(|&n| Ok(clt_diagnostics(&f, theta, n)?.ks_max))
                .collect::<Result<Vec<_>>>()?;
            if ks.windows(2).any(|w| w[1] > w[0] + 1e-12) {
                monotone = false;
                violations.push(format!("{}@{:?}: {:?}", f.name(), theta, ks));
            }
        }
    }
    let pass = ks100 < 0.05 && (ks100 - oracle).abs() <= 1e-12 && monotone;
    let mut detail = format!("bernoulli ks(100) = {ks100:.6} (oracle {oracle:.6}, < 0.05), monotone over grid = {monotone}");
    if !violations.is_empty() {
        detail.push_str(&format!("; violations: {}", violations.join(", ")));
    }
    verdict(pass, detail)
}

fn criterion_6() -> Result<Verdict> {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut worst: f64 = 0.0;
    let mut pairs = 0;
    for f in builtin_families() {
        let grid = f.grid();
        for t in 0..20 {
            let theta = grid[t % grid.len()].clone();
            let phi = grid[(t * 3 + 1) % grid.len()].clone();
            let a = unit_vector(&mut rng, f.order());
            let b0 = unit_vector(&mut rng, f.order());
            let form_a = quad_form(&f, &theta, &a, &a, Route::A)?;
            let form_b = quad_form(&f, &phi, &b0, &b0, Route::A)?;
            let b: Vec<f64> = b0.iter().map(|x| x * (form_a / form_b).sqrt()).collect();
            let r = claim2_rotation_check(&f, &TangentCoord::new(theta, a), &TangentCoord::new(phi, b))?;
            worst = worst.max(r.residual).max(r.orthogonality);
            pairs += 1;
        }
    }
    verdict(worst <= 1e-12, format!("{pairs} matched pairs, max residual = {worst:.2e} (≤ 1e-12)"))
}

fn criterion_7() -> Result<Verdict> {
    let bern = Arc::new(make_family("bernoulli", &[])?);
    let scaled = recover_constant(&MetricField::scaled_fisher(bern.clone(), 2.5), 20, SEED)?;
    let u = TangentCoord::new(vec![0.0], vec![1.0]);
    let unique = uniqueness_residual(&l1_perturbed_functional(0.1), &bern, &u, 1, 4)?;
    let sinus = recover_constant(&sinusoidal_metric(bern, 0.2), 20, SEED)?;
    let pass = (scaled.c_hat - 2.5).abs() <= 1e-10
        && scaled.spread <= 1e-10
        && (unique - 0.0125).abs() <= 1e-12
        && sinus.spread > 0.05;
    verdict(
        pass,
        format!(
            "c_hat = {} (spread {:.2e}), perturbed uniqueness residual = {unique}, sinusoidal spread = {:.4}",
            scaled.c_hat, scaled.spread, sinus.spread
        ),
    )
}

fn criterion_8() -> Result<Verdict> {
    let bern = Arc::new(make_family("bernoulli", &[])?);
    let log3 = [3f64.ln()];
    let ones = vec![vec![1.0]; 3];
    let ac = amari_chentsov(&bern, &log3, &ones)?;
    let fd = fd_third_derivative(&bern, &log3, &ones, THIRD_DERIVATIVE_STEP)?;

    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut worst_fd: f64 = 0.0;
    let mut worst_perm: f64 = 0.0;
    let mut worst_odd: f64 = 0.0;
    for f in builtin_families() {
        let f = Arc::new(f);
        let sym4 = SymmetricTensorField::new(f.clone(), 4, "sym4", |fam, t, d| symmetric_power_eval(fam, t, d, 1.0))?;
        let odd: Vec<SymmetricTensorField> = [3, 5]
            .iter()
            .map(|&k| SymmetricTensorField::fisher_power(f.clone(), 0.0, k))
            .collect::<Result<_>>()?;
        for theta in f.grid() {
            let dirs3: Vec<Vec<f64>> = (0..3).map(|_| unit_vector(&mut rng, f.order())).collect();
            let exact = amari_chentsov(&f, theta, &dirs3)?;
            worst_fd = worst_fd.max((fd_third_derivative(&f, theta, &dirs3, THIRD_DERIVATIVE_STEP)? - exact).abs());
            let dirs4: Vec<Vec<f64>> = (0..4).map(|_| unit_vector(&mut rng, f.order())).collect();
            worst_perm = worst_perm.max(permutation_residual(&sym4, theta, &dirs4)?);
            let a = unit_vector(&mut rng, f.order());
            for field in &odd {
                worst_odd = worst_odd.max(odd_k_vanishing_check(field, theta, &a)?);
            }
        }
    }
    let pass = (ac + 0.09375).abs() <= 1e-12
        && (fd - ac).abs() <= 1e-5
        && worst_fd <= 1e-5
        && worst_perm <= 1e-12
        && worst_odd <= 1e-10;
    verdict(
        pass,
        format!(
            "AC3(log 3) = {ac}, |FD − AC3| = {:.2e}, grid max |FD − AC3| = {worst_fd:.2e}, k=4 permutation residual = {worst_perm:.2e}, odd-k residual = {worst_odd:.2e}",
            (fd - ac).abs()
        ),
    )
}

fn criterion_9() -> Result<Verdict> {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut worst: f64 = 0.0;
    for f in builtin_families() {
        for theta in f.grid() {
            let a = unit_vector(&mut rng, f.order());
            let b = unit_vector(&mut rng, f.order());
            let invariant = fisher_invariant_form(
                &f,
                &TangentCoord::new(theta.clone(), a.clone()),
                &TangentCoord::new(theta.clone(), b.clone()),
            )?;
            for route in [Route::A, Route::B] {
                worst = worst.max((invariant - quad_form(&f, theta, &a, &b, route)?).abs());
            }
        }
    }
    verdict(worst <= 1e-10, format!("max |invariant form − aᵀI(θ)b| = {worst:.2e} (≤ 1e-10)"))
}

type Criterion = (u32, &'static str, fn() -> Result<Verdict>, Duration);

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        (1, "Fisher route agreement", criterion_1, Duration::from_secs(5)),
        (2, "A1 IID scaling", criterion_2, Duration::from_secs(30)),
        (3, "A2 sufficiency isometry", criterion_3, Duration::from_secs(30)),
        (4, "standardised chain constancy", criterion_4, Duration::from_secs(60)),
        (5, "CLT diagnostics", criterion_5, Duration::MAX),
        (6, "rotation between equal-length tangents", criterion_6, Duration::MAX),
        (7, "uniqueness witness", criterion_7, Duration::MAX),
        (8, "Higher-order tensors", criterion_8, Duration::MAX),
        (9, "Invariant form equals matrix form", criterion_9, Duration::MAX),
    ];
    let mut failed = 0;
    for (id, title, run, budget) in criteria {
        let start = Instant::now();
        let outcome = run();
        let elapsed = start.elapsed();
        let (pass, detail) = match outcome {
            Ok(v) => (v.pass && elapsed <= budget, v.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        let budget_note = if budget == Duration::MAX { String::new() } else { format!(" / {}s", budget.as_secs()) };
        println!(
            "criterion {id} [{}] {title}: {detail} [{:.2}s{budget_note}]",
            if pass { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64()
        );
        failed += usize::from(!pass);
    }
    println!("acceptance: {} passed, {failed} failed", 9 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
