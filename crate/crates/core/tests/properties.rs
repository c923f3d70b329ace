//! Property tests over random measures, maps and tangent vectors, plus the
//! grid-wide invariants of each module.

use std::sync::Arc;

use approx::assert_abs_diff_eq;
use expgeom::derived::{
    affine_pushforward_pair, nef_distribution, nef_tangent, standardizing_map, AffineMap,
};
use expgeom::expfam::HESSIAN_STEP;
use expgeom::geometry::{
    fisher_invariant_form, fisher_norm_functional, l1_perturbed_functional, metric_eval, norm_of_tangent, polarize,
    MetricField, ScoreFn,
};
use expgeom::invariance::{chain_commutation_residual, uniqueness_residual, unit_vector};
use expgeom::measures::{moments, radon_nikodym, AtomicMeasure, FiniteMeasure, SignedFiniteMeasure};
use expgeom::tensors::{amari_chentsov, symmetric_power_eval, SymmetricTensorField};
use expgeom::{builtin_families, make_family, Route, TangentCoord};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn measure_1d() -> impl Strategy<Value = FiniteMeasure> {
    prop::collection::vec((-50.0f64..50.0, 0.01f64..5.0), 1..30).prop_map(|atoms| {
        let (xs, ws): (Vec<f64>, Vec<f64>) = atoms.into_iter().unzip();
        FiniteMeasure::on_line(&xs, ws).unwrap().normalized()
    })
}

fn measure_2d() -> impl Strategy<Value = FiniteMeasure> {
    prop::collection::vec(((-5.0f64..5.0, -5.0f64..5.0), 0.01f64..5.0), 3..25).prop_map(|atoms| {
        let points: Vec<Vec<f64>> = atoms.iter().map(|((x, y), _)| vec![*x, *y]).collect();
        let ws = atoms.iter().map(|(_, w)| *w).collect();
        FiniteMeasure::new(2, &points, ws).unwrap().normalized()
    })
}

/// Well-conditioned 2×2 affine maps.
fn affine_2d() -> impl Strategy<Value = AffineMap> {
    (0.5f64..2.0, 0.5f64..2.0, -0.4f64..0.4, -0.4f64..0.4, -3.0f64..3.0, -3.0f64..3.0).prop_map(
        |(a, d, b, c, s, t)| {
            AffineMap::new(DMatrix::from_row_slice(2, 2, &[a, b, c, d]), DVector::from_vec(vec![s, t])).unwrap()
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn push_forward_preserves_mass(p in measure_1d(), k in 1i32..4) {
        let q = p.push_forward(1, |x| vec![x[0].powi(k).round()]);
        prop_assert!((q.total_mass() - p.total_mass()).abs() <= 1e-14);
        let signed = SignedFiniteMeasure::on_line(
            &(0..p.len()).map(|i| p.point(i)[0]).collect::<Vec<_>>(),
            p.weights().iter().enumerate().map(|(i, w)| if i % 2 == 0 { *w } else { -*w }).collect(),
        ).unwrap();
        let pushed = signed.push_forward(1, |x| vec![x[0].abs().floor()]);
        prop_assert!((pushed.total_mass() - signed.total_mass()).abs() <= 1e-14);
    }

    #[test]
    fn affine_moment_law(p in measure_2d(), l in affine_2d()) {
        let (mean, cov) = moments(&p);
        let (mean2, cov2) = moments(&l.push(&p));
        let expected_mean = l.matrix() * &mean + l.offset();
        let expected_cov = l.matrix() * cov * l.matrix().transpose();
        prop_assert!((mean2 - expected_mean).amax() <= 1e-12);
        prop_assert!((cov2 - expected_cov).amax() <= 1e-12);
    }

    #[test]
    fn affine_push_is_invertible(p in measure_2d(), l in affine_2d()) {
        let back = l.inverse().push(&l.push(&p));
        prop_assert_eq!(back.len(), p.len());
        for i in 0..p.len() {
            for k in 0..2 {
                prop_assert!((back.point(i)[k] - p.point(i)[k]).abs() <= 1e-9);
            }
            prop_assert!((back.weights()[i] - p.weights()[i]).abs() <= 1e-15);
        }
    }

    #[test]
    fn radon_nikodym_integrates_to_mass(p in measure_1d(), scale in -3.0f64..3.0) {
        let a = p.scale_by(|i, x| scale * (x[0] + i as f64).sin());
        let density = radon_nikodym(&a, &p).unwrap();
        let integral: f64 = p.weights().iter().zip(&density).map(|(w, d)| w * d).sum();
        prop_assert!((integral - a.total_mass()).abs() <= 1e-12);
    }

    #[test]
    fn fisher_norm_is_affine_invariant(p in measure_2d(), l in affine_2d(), c0 in -2.0f64..2.0, c1 in -2.0f64..2.0) {
        // f(y) = c·y + k has f∘L⁻¹(z) = c·M⁻¹(z − t) + k
        let h = fisher_norm_functional();
        let values: Vec<f64> = (0..p.len()).map(|i| c0 * p.point(i)[0] + c1 * p.point(i)[1] - 0.3).collect();
        let before = h.eval(&p, &ScoreFn::Values(values.clone()));
        let moved = l.push(&p);
        let inv = l.inverse();
        let moved_values: Vec<f64> = (0..moved.len())
            .map(|i| {
                let y = inv.apply(moved.point(i));
                c0 * y[0] + c1 * y[1] - 0.3
            })
            .collect();
        let after = h.eval(&moved, &ScoreFn::Values(moved_values));
        prop_assert!((before - after).abs() <= 1e-12 * before.max(1.0));
    }

    #[test]
    fn norm_functionals_are_homogeneous(p in measure_1d(), alpha in -4.0f64..4.0) {
        let f = ScoreFn::Values((0..p.len()).map(|i| p.point(i)[0] - 1.0).collect());
        for h in [fisher_norm_functional(), l1_perturbed_functional(0.1)] {
            let base = h.eval(&p, &f);
            let scaled = h.eval(&p, &f.scaled(alpha));
            prop_assert!((scaled - alpha.abs() * base).abs() <= 1e-12 * base.max(1.0));
        }
    }

    #[test]
    fn reparameterisation_leaves_fisher_forms_invariant(
        a in 0.6f64..1.8, b in -0.3f64..0.3, c in -0.3f64..0.3, d in 0.6f64..1.8,
        s in -1.0f64..1.0, t in -1.0f64..1.0,
        dir in (-1.0f64..1.0, -1.0f64..1.0),
        slot in 0usize..5,
    ) {
        let f = make_family("categorical", &[3]).unwrap();
        let m = DMatrix::from_row_slice(2, 2, &[a, b, c, d]);
        let g = f.affine_statistic(&m, &DVector::from_vec(vec![s, t])).unwrap();
        let m_inv_t = m.clone().try_inverse().unwrap().transpose();
        let theta = DVector::from_column_slice(&f.grid()[slot]);
        let dir = DVector::from_vec(vec![dir.0, dir.1]);
        let theta2: Vec<f64> = (&m_inv_t * &theta).iter().copied().collect();
        let dir2 = &m_inv_t * &dir;
        let before = dir.dot(&(f.fisher_information(theta.as_slice(), Route::A).unwrap() * &dir));
        let after = dir2.dot(&(g.fisher_information(&theta2, Route::A).unwrap() * &dir2));
        prop_assert!((before - after).abs() <= 1e-9);
    }

    #[test]
    fn tensors_are_symmetric_and_multilinear(
        raw in prop::collection::vec(-1.0f64..1.0, 10),
        alpha in -2.0f64..2.0,
        slot in 0usize..5,
    ) {
        let f = Arc::new(make_family("categorical", &[3]).unwrap());
        let theta = f.grid()[slot].clone();
        let dirs: Vec<Vec<f64>> = raw.chunks(2).map(|c| c.to_vec()).collect();
        let fields = [
            SymmetricTensorField::amari_chentsov(f.clone(), 3).unwrap(),
            SymmetricTensorField::amari_chentsov(f.clone(), 4).unwrap(),
            SymmetricTensorField::fisher_power(f.clone(), 1.7, 4).unwrap(),
        ];
        for field in &fields {
            let k = field.order();
            let args: Vec<Vec<f64>> = dirs[..k].to_vec();
            let value = field.eval(&theta, &args).unwrap();
            let mut swapped = args.clone();
            swapped.swap(0, k - 1);
            prop_assert!((field.eval(&theta, &swapped).unwrap() - value).abs() <= 1e-12);
            // slot 0: S(αx + y, …) = α S(x, …) + S(y, …)
            let mut combo = args.clone();
            combo[0] = args[0].iter().zip(&dirs[4]).map(|(x, y)| alpha * x + y).collect();
            let mut other = args.clone();
            other[0] = dirs[4].clone();
            let lhs = field.eval(&theta, &combo).unwrap();
            let rhs = alpha * value + field.eval(&theta, &other).unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-12);
        }
    }
}

#[test]
fn route_agreement_and_gradient_on_grid() {
    for f in builtin_families() {
        for theta in f.grid() {
            let a = f.fisher_information(theta, Route::A).unwrap();
            let b = f.fisher_information(theta, Route::B).unwrap();
            let c = f.fisher_information(theta, Route::C).unwrap();
            assert!((&a - &b).amax() < 1e-10, "{} at {theta:?}", f.name());
            assert!((&a - &c).amax() < 1e-6, "{} at {theta:?}", f.name());
            let grad = f.gradient_log_partition(theta, HESSIAN_STEP).unwrap();
            let tau = f.mean_statistic(theta).unwrap();
            assert!((grad - tau).amax() < 1e-7, "{} at {theta:?}", f.name());
            assert_abs_diff_eq!(f.density_measure(theta).unwrap().total_mass(), 1.0, epsilon = 1e-12);
            let u = TangentCoord::new(theta.clone(), vec![0.7; f.order()]);
            assert!(f.model_tangent(&u).unwrap().direction.total_mass().abs() <= 1e-12);
        }
    }
}

#[test]
fn mean_statistic_distribution_moments_on_grid() {
    for f in builtin_families() {
        for theta in f.grid() {
            let tau = f.mean_statistic(theta).unwrap();
            let sigma = f.cov_statistic(theta).unwrap();
            for n in [1, 2, 4, 8, 16] {
                let q = nef_distribution(&f, theta, n).unwrap();
                let (mean, cov) = moments(&q);
                assert!((&mean - &tau).amax() <= 1e-10, "{} n={n}", f.name());
                assert!((cov - &sigma / n as f64).amax() <= 1e-10, "{} n={n}", f.name());
                let (m, c) = moments(&standardizing_map(&f, theta, n).unwrap().push(&q));
                assert!(m.amax() <= 1e-9);
                assert!((c - DMatrix::identity(f.order(), f.order())).amax() <= 1e-9);
            }
        }
    }
}

#[test]
fn nef_tangent_mass_and_homogeneity() {
    let f = make_family("binomial", &[3]).unwrap();
    for n in [1, 3, 5] {
        let t = nef_tangent(&f, &TangentCoord::new(vec![0.4], vec![1.3]), n).unwrap();
        let t2 = nef_tangent(&f, &TangentCoord::new(vec![0.4], vec![2.6]), n).unwrap();
        assert!(t.direction.total_mass().abs() <= 1e-10);
        for (x, y) in t.direction.weights().iter().zip(t2.direction.weights()) {
            assert_eq!(2.0 * x, *y);
        }
    }
}

#[test]
fn standardised_tangent_commutes_on_every_discrete_family() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for f in builtin_families() {
        for theta in f.grid() {
            let u = TangentCoord::new(theta.clone(), unit_vector(&mut rng, f.order()));
            for n in [1, 2, 4, 8] {
                let r = chain_commutation_residual(&f, &u, n).unwrap();
                assert!(r <= 1e-10, "{} at {theta:?}, n = {n}: {r:e}", f.name());
            }
        }
    }
}

#[test]
fn fisher_norm_on_standardised_measure_is_coefficient_norm() {
    let f = make_family("categorical", &[4]).unwrap();
    let theta = f.grid()[2].clone();
    let l = standardizing_map(&f, &theta, 3).unwrap();
    let p = l.push(&nef_distribution(&f, &theta, 3).unwrap());
    let c = [0.3, -1.2, 0.5];
    let norm = (c.iter().map(|x| x * x).sum::<f64>()).sqrt();
    assert_abs_diff_eq!(fisher_norm_functional().eval(&p, &ScoreFn::Linear(c.to_vec())), norm, epsilon = 1e-12);
}

#[test]
fn polarisation_consistency_per_family() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for f in builtin_families() {
        let g = MetricField::fisher(Arc::new(f.clone()));
        for t in 0..20 {
            let theta = f.grid()[t % f.grid().len()].clone();
            let u = TangentCoord::new(theta.clone(), unit_vector(&mut rng, f.order()));
            let v = TangentCoord::new(theta.clone(), unit_vector(&mut rng, f.order()));
            let direct = metric_eval(&g, &u, &v).unwrap();
            let polar = polarize(|w| Ok(norm_of_tangent(&g, w)?.powi(2)), &u, &v).unwrap();
            assert!((direct - polar).abs() <= 1e-10, "{}", f.name());
            assert!((fisher_invariant_form(&f, &u, &v).unwrap() - direct).abs() <= 1e-10);
        }
    }
}

#[test]
fn affine_tangent_push_preserves_fisher_norm() {
    let f = make_family("binomial", &[5]).unwrap();
    let t = nef_tangent(&f, &TangentCoord::new(vec![-0.5], vec![0.8]), 4).unwrap();
    let l = AffineMap::new(DMatrix::from_element(1, 1, -2.5), DVector::from_element(1, 7.0)).unwrap();
    let h = fisher_norm_functional();
    assert_abs_diff_eq!(h.eval_pair(&affine_pushforward_pair(&l, &t).unwrap()), h.eval_pair(&t), epsilon = 1e-12);
}

#[test]
fn uniqueness_residual_over_grid() {
    let h = fisher_norm_functional();
    let perturbed = l1_perturbed_functional(0.1);
    let mut largest: f64 = 0.0;
    for f in builtin_families() {
        for theta in f.grid() {
            let u = TangentCoord::new(theta.clone(), vec![1.0; f.order()]);
            assert!(uniqueness_residual(&h, &f, &u, 1, 4).unwrap() <= 1e-10, "{}", f.name());
            largest = largest.max(uniqueness_residual(&perturbed, &f, &u, 1, 4).unwrap());
        }
    }
    assert!(largest >= 1e-3);
}

#[test]
fn metric_ratio_is_scale_free() {
    let f = Arc::new(make_family("poisson_trunc", &[]).unwrap());
    let g = MetricField::scaled_fisher(f.clone(), 4.0);
    let fisher = MetricField::fisher(f);
    for s in [0.01, 1.0, 300.0] {
        let u = TangentCoord::new(vec![0.5], vec![s]);
        let ratio = norm_of_tangent(&g, &u).unwrap() / norm_of_tangent(&fisher, &u).unwrap();
        assert_abs_diff_eq!(ratio, 2.0, epsilon = 1e-12);
    }
}

#[test]
fn order_two_tensors_are_the_fisher_form() {
    let f = make_family("categorical", &[3]).unwrap();
    let theta = [0.3, -0.6];
    let dirs = vec![vec![1.0, -0.5], vec![0.2, 0.9]];
    let sigma = f.fisher_information(&theta, Route::A).unwrap();
    let expected = DVector::from_column_slice(&dirs[0]).dot(&(sigma * DVector::from_column_slice(&dirs[1])));
    assert_abs_diff_eq!(amari_chentsov(&f, &theta, &dirs).unwrap(), expected, epsilon = 1e-15);
    let four = vec![dirs[0].clone(); 4];
    let g = amari_chentsov(&f, &theta, &four[..2]).unwrap();
    assert_abs_diff_eq!(symmetric_power_eval(&f, &theta, &four, 1.0).unwrap(), 3.0 * g * g, epsilon = 1e-15);
}
