mod common;

use lipfit::admm::objective;
use lipfit::cv::fold_assignment;
use lipfit::losses::scalar_prox;
use lipfit::prox::{project_l2_ball, singular_values, slope_prox, soft_threshold, svt};
use lipfit::prox_grad::gradient_mapping_norm;
use lipfit::{admm_solve, prox_grad_solve, AdmmConfig, FistaConfig, LossKind, MatrixProblem, ObservationSet, Penalty, Sample, VectorProblem};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn loss_strategy() -> impl Strategy<Value = LossKind> {
    prop_oneof![
        Just(LossKind::Hinge),
        Just(LossKind::Logistic),
        (0.05f64..0.95).prop_map(|tau| LossKind::Quantile { tau }),
        Just(LossKind::Squared),
    ]
}

fn label_for(kind: LossKind, raw: f64) -> f64 {
    if kind.is_classification() {
        if raw >= 0.0 {
            1.0
        } else {
            -1.0
        }
    } else {
        raw
    }
}

fn matrix(rows: usize, cols: usize) -> impl Strategy<Value = DMatrix<f64>> {
    prop::collection::vec(-3.0f64..3.0, rows * cols).prop_map(move |v| DMatrix::from_vec(rows, cols, v))
}

fn sized_matrix() -> impl Strategy<Value = DMatrix<f64>> {
    (1usize..6, 1usize..6).prop_flat_map(|(r, c)| matrix(r, c))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn prox_is_a_local_minimum(kind in loss_strategy(), raw in -3.0f64..3.0, v in -5.0f64..5.0,
                               c in 0.01f64..10.0, bound in prop::option::of(0.5f64..3.0)) {
        let y = label_for(kind, raw);
        let tau = match kind { LossKind::Quantile { tau } => tau, _ => 0.5 };
        let t = scalar_prox(kind, v, y, c, bound).unwrap();
        let phi = |s: f64| common::loss(kind.name(), tau, s, y) + (s - v) * (s - v) / (2.0 * c);
        if let Some(b) = bound {
            prop_assert!(t.abs() <= b);
        }
        for h in [1e-3, 1e-5] {
            for s in [t - h, t + h] {
                if bound.is_none_or(|b| s.abs() <= b) {
                    prop_assert!(phi(t) <= phi(s) + 1e-12);
                }
            }
        }
    }

    #[test]
    fn soft_threshold_shrinks(v in -10.0f64..10.0, a in 0.0f64..5.0) {
        let s = soft_threshold(v, a);
        prop_assert!(s.abs() <= v.abs());
        prop_assert!(s == 0.0 || s.signum() == v.signum());
        prop_assert!((v - s).abs() <= a + 1e-15);
    }

    #[test]
    fn svt_shrinks_singular_values(m in sized_matrix(), a in 0.0f64..3.0) {
        let x = svt(&m, a).unwrap();
        let got = singular_values(&x).unwrap();
        let want = singular_values(&m).unwrap().map(|s| (s - a).max(0.0));
        prop_assert!((got - want).amax() < 1e-10);
    }

    #[test]
    fn svt_is_nonexpansive((a, b) in (1usize..5, 1usize..5).prop_flat_map(|(r, c)| (matrix(r, c), matrix(r, c))),
                           t in 0.0f64..2.0) {
        let d = (svt(&a, t).unwrap() - svt(&b, t).unwrap()).norm();
        prop_assert!(d <= (&a - &b).norm() + 1e-10);
    }

    #[test]
    fn slope_prox_matches_exhaustive_search(v in prop::collection::vec(-3.0f64..3.0, 1..5),
                                           raw in prop::collection::vec(0.0f64..2.0, 5)) {
        let mut w: Vec<f64> = raw[..v.len()].to_vec();
        w.sort_by(|a, b| b.total_cmp(a));
        let got = slope_prox(&DVector::from_vec(v.clone()), &w).unwrap();
        let want = common::slope_oracle(&v, &w);
        for (g, e) in got.iter().zip(&want) {
            prop_assert!((g - e).abs() < 1e-9);
        }
    }

    #[test]
    fn projection_stays_in_ball(v in prop::collection::vec(-10.0f64..10.0, 1..8), r in 0.1f64..5.0) {
        let t = project_l2_ball(&DVector::from_vec(v), r).unwrap();
        prop_assert!(t.norm() <= r + 1e-12);
    }

    #[test]
    fn folds_partition_the_samples(n in 2usize..200, k in 2usize..6, seed in any::<u64>()) {
        prop_assume!(k <= n);
        let folds = fold_assignment(n, k, seed).unwrap();
        prop_assert_eq!(folds.len(), k);
        let mut all: Vec<usize> = folds.concat();
        all.sort_unstable();
        prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
    }
}

fn completion_problem(kind: LossKind, raw: &[(usize, usize, f64)], rows: usize, cols: usize, lambda: f64) -> MatrixProblem {
    let samples = raw
        .iter()
        .map(|&(r, c, y)| Sample::new(r % rows, c % cols, label_for(kind, y)))
        .collect();
    let data = ObservationSet::new(rows, cols, samples).unwrap();
    let bound = (kind == LossKind::Hinge).then_some(1.0);
    MatrixProblem::new(data, kind, lambda, bound).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn admm_beats_the_zero_matrix(kind in loss_strategy(), rows in 1usize..5, cols in 1usize..5,
                                  raw in prop::collection::vec((0usize..8, 0usize..8, -2.0f64..2.0), 1..12),
                                  lambda in 0.001f64..0.5) {
        let problem = completion_problem(kind, &raw, rows, cols, lambda);
        let config = AdmmConfig { tol: 1e-12, max_iter: 100_000, ..AdmmConfig::default() };
        let fit = admm_solve(&problem, &config).unwrap();
        let at_fit = objective(&problem, &fit.estimate).unwrap();
        let at_zero = objective(&problem, &DMatrix::zeros(rows, cols)).unwrap();
        prop_assert!(at_fit <= at_zero + 1e-8);
        if let Some(b) = problem.box_bound {
            prop_assert!(fit.estimate.amax() <= b);
        }
        if fit.converged {
            prop_assert!(*fit.residual_trace.last().unwrap() <= config.tol);
        }
    }

    #[test]
    fn fista_trace_is_monotone(n in 3usize..20, p in 1usize..5, seed in any::<u64>(), lambda in 0.0f64..0.2,
                               radius in prop::option::of(0.1f64..3.0), slope in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = DMatrix::from_fn(n, p, |_, _| rng.random_range(-2.0..2.0));
        let y = DVector::from_fn(n, |_, _| if rng.random_bool(0.5) { 1.0 } else { -1.0 });
        let penalty = if slope {
            Penalty::Slope { lambda, weights: lipfit::prox::SlopeWeights::canonical(p).unwrap() }
        } else {
            Penalty::L1 { lambda }
        };
        let problem = VectorProblem::new(x, y, LossKind::Logistic, penalty, radius).unwrap();
        let fit = prox_grad_solve(&problem, &FistaConfig::default()).unwrap();
        for w in fit.objective_trace.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-12);
        }
        if let Some(r) = radius {
            prop_assert!(fit.estimate.norm() <= r + 1e-12);
        } else if fit.converged {
            let step = fit.final_step.unwrap();
            prop_assert!(gradient_mapping_norm(&problem, &fit.estimate, step).unwrap() <= 1e-5);
        }
    }
}

#[test]
fn unpenalized_least_squares_matches_normal_equations() {
    let x = DMatrix::from_fn(12, 3, |i, j| ((i * 7 + j * 3) as f64 * 0.71).sin() + 0.1 * j as f64);
    let y = DVector::from_fn(12, |i, _| (i as f64 * 0.4).cos());
    let problem = VectorProblem::new(x.clone(), y.clone(), LossKind::Squared, Penalty::L1 { lambda: 0.0 }, None).unwrap();
    let config = FistaConfig {
        tol: 1e-16,
        max_iter: 100_000,
        ..FistaConfig::default()
    };
    let fit = prox_grad_solve(&problem, &config).unwrap();
    let direct = (x.transpose() * &x).lu().solve(&(x.transpose() * &y)).unwrap();
    // objective-change stopping pins the value down much tighter than the argument
    let (f_fit, f_direct) = (problem.objective(&fit.estimate).unwrap(), problem.objective(&direct).unwrap());
    assert!(f_fit - f_direct <= 1e-13 * f_direct.max(1.0), "{f_fit} vs {f_direct}");
    let gap = (&fit.estimate - &direct).amax();
    assert!(gap < 1e-5, "gap {gap}");
}

#[test]
fn admm_objective_matches_oracle_on_tiny_problems() {
    let entries = [(0, 0, 1.0), (0, 1, -0.5), (1, 1, 1.5), (2, 0, -1.0), (1, 0, 0.5)];
    for kind in [LossKind::Hinge, LossKind::Logistic, LossKind::Quantile { tau: 0.3 }, LossKind::Squared] {
        let problem = completion_problem(kind, &entries, 3, 2, 0.05);
        let config = AdmmConfig {
            tol: 1e-12,
            feasibility_tol: Some(1e-12),
            max_iter: 200_000,
            ..AdmmConfig::default()
        };
        let fit = admm_solve(&problem, &config).unwrap();
        let got = objective(&problem, &fit.estimate).unwrap();
        let inst = common::Instance {
            rows: 3,
            cols: 2,
            entries: problem.data.iter().map(|s| (s.row, s.col, s.value)).collect(),
            kind: kind.name(),
            tau: 0.3,
            lambda: 0.05,
            bound: problem.box_bound,
        };
        let want = inst.oracle(20_000);
        assert!((got - want).abs() < 1e-4, "{kind:?}: {got} vs {want}");
        assert!(fit.split_gap.unwrap() < 1e-11);
    }
}

#[test]
fn fully_observed_least_squares_matches_closed_form() {
    // with every entry observed once the solution is svt(Y, N λ)
    let (rows, cols) = (4, 3);
    let y = DMatrix::from_fn(rows, cols, |i, j| ((i * 5 + j * 2) as f64 * 0.9).sin() * 2.0);
    let samples = (0..rows)
        .flat_map(|i| (0..cols).map(move |j| (i, j)))
        .map(|(i, j)| Sample::new(i, j, y[(i, j)]))
        .collect();
    let n = (rows * cols) as f64;
    let lambda = 0.05;
    let data = ObservationSet::new(rows, cols, samples).unwrap();
    let problem = MatrixProblem::new(data, LossKind::Squared, lambda, None).unwrap();
    let config = AdmmConfig {
        alpha: 1.0 / n,
        tol: 1e-14,
        max_iter: 100_000,
        ..AdmmConfig::default()
    };
    let fit = admm_solve(&problem, &config).unwrap();
    let closed = svt(&y, n * lambda).unwrap();
    let gap = objective(&problem, &fit.estimate).unwrap() - objective(&problem, &closed).unwrap();
    assert!(gap.abs() < 1e-6, "{gap}");
}

#[test]
fn rank_one_hinge_matches_oracle() {
    let u = [1.0, -1.0, 1.0];
    let v = [1.0, 1.0, -1.0];
    let entries: Vec<(usize, usize, f64)> = (0..3)
        .flat_map(|i| (0..3).map(move |j| (i, j, u[i] * v[j])))
        .collect();
    let problem = completion_problem(LossKind::Hinge, &entries, 3, 3, 0.05);
    let config = AdmmConfig {
        tol: 1e-12,
        max_iter: 200_000,
        ..AdmmConfig::default()
    };
    let fit = admm_solve(&problem, &config).unwrap();
    let inst = common::Instance {
        rows: 3,
        cols: 3,
        entries,
        kind: "hinge",
        tau: 0.5,
        lambda: 0.05,
        bound: Some(1.0),
    };
    let got = objective(&problem, &fit.estimate).unwrap();
    assert!((got - inst.oracle(50_000)).abs() < 1e-4);
}

#[test]
fn single_hinge_sample_reaches_box() {
    let data = ObservationSet::new(1, 1, vec![Sample::new(0, 0, 1.0)]).unwrap();
    let problem = MatrixProblem::new(data, LossKind::Hinge, 0.1, Some(1.0)).unwrap();
    let fit = admm_solve(&problem, &AdmmConfig::default()).unwrap();
    assert!((fit.estimate[(0, 0)] - 1.0).abs() < 1e-4);
}

#[test]
fn estimate_improves_on_gaussian_start() {
    for seed in 0..10 {
        for kind in [LossKind::Logistic, LossKind::Quantile { tau: 0.5 }, LossKind::Squared] {
            let entries: Vec<(usize, usize, f64)> = (0..10).map(|k| (k % 4, (k * 3) % 5, (k as f64 * 1.3).sin())).collect();
            let problem = completion_problem(kind, &entries, 4, 5, 0.02);
            let config = AdmmConfig {
                init: lipfit::AdmmInit::Gaussian { seed },
                ..AdmmConfig::default()
            };
            let start = lipfit::admm::initial_matrix(4, 5, &config.init).unwrap();
            let fit = admm_solve(&problem, &config).unwrap();
            assert!(objective(&problem, &fit.estimate).unwrap() <= objective(&problem, &start).unwrap());
        }
    }
}
