//! Cross-module behavior of the full fitting pipeline.

use jgsa::classify::{accuracy, knn1_classify};
use jgsa::data::{generate_synthetic, Dataset, SyntheticSpec};
use jgsa::jgsa::{assemble, fit, JgsaParams, Regularizer};
use jgsa::kernel::{Bandwidth, KernelSpec};
use jgsa::stats;
use jgsa_oracles as oracle;
use ndarray::{s, Array2, Axis};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

#[test]
fn zero_shift_recovers_source_labels_exactly() {
    // sanity data: well-separated clusters, light class-scatter weight
    let mut spec = SyntheticSpec::shifted_default(7);
    spec.source_scales = [0.15; 3];
    spec.target_scales = [0.15; 3];
    let (xs, _) = generate_synthetic(&spec).unwrap();
    let xt = xs.clone();
    let params = JgsaParams::new(2, 5, 0.01);
    let model = fit(&xs, &xt, &params).unwrap();
    let acc = accuracy(model.target_labels(), xs.labels().unwrap()).unwrap();
    assert_eq!(acc, 1.0, "identical domains must relabel perfectly");
}

#[test]
fn synthetic_adaptation_beats_raw_nearest_neighbor() {
    // the benchmark configuration: k = 2, T = 10, beta = 0.1; the floors
    // are pinned from a 10-seed calibration run (mean 0.906, min 0.873,
    // raw 0.333)
    let spec = SyntheticSpec::shifted_default(0);
    let (xs, xt) = generate_synthetic(&spec).unwrap();
    let raw_pred = knn1_classify(
        xs.features().view(),
        xs.labels().unwrap(),
        xt.features().view(),
    )
    .unwrap();
    let raw_acc = accuracy(&raw_pred, xt.labels().unwrap()).unwrap();

    let params = JgsaParams::new(2, 10, 0.1);
    let model = fit(&xs, &xt, &params).unwrap();
    let fit_acc = accuracy(model.target_labels(), xt.labels().unwrap()).unwrap();
    assert!(
        fit_acc >= 0.85,
        "adapted accuracy {fit_acc} below the pinned floor (raw {raw_acc})"
    );
    assert!(
        fit_acc >= raw_acc + 0.10,
        "adapted accuracy {fit_acc} does not clear raw {raw_acc} by 10 points"
    );

    // a lighter class-scatter weight reaches the 0.95 regime on this data
    let params = JgsaParams::new(2, 10, 0.01);
    let model = fit(&xs, &xt, &params).unwrap();
    let fit_acc = accuracy(model.target_labels(), xt.labels().unwrap()).unwrap();
    assert!(fit_acc >= 0.95, "beta = 0.01 accuracy {fit_acc} below 0.95");
}

#[test]
fn projections_are_h_orthonormal_at_the_final_pass() {
    let spec = SyntheticSpec::shifted_default(5);
    let (xs, xt) = generate_synthetic(&spec).unwrap();
    let params = JgsaParams::new(2, 4, 0.1);
    let model = fit(&xs, &xt, &params).unwrap();

    // rebuild the final denominator from the pseudo labels that produced
    // the last eigensolve (the entry before the final relabel)
    let history = &model.pseudo_history;
    let last_input = &history[history.len() - 2];
    let scatters = stats::scatter_set(&xs, &xt).unwrap();
    let mmd = stats::mmd_blocks(&xs, &xt, Some(last_input)).unwrap();
    let (_, h) = assemble(&scatters, &mmd, &params, Regularizer::Identity).unwrap();

    let d = xs.dim();
    let k = params.k;
    let mut w = Array2::zeros((2 * d, k));
    w.slice_mut(s![..d, ..]).assign(&model.projections.a);
    w.slice_mut(s![d.., ..]).assign(&model.projections.b);
    let gram = w.t().dot(&h).dot(&w);
    let mut err = 0.0f64;
    for i in 0..k {
        for j in 0..k {
            let want = if i == j { 1.0 } else { 0.0 };
            err += (gram[(i, j)] - want).powi(2);
        }
    }
    assert!(err.sqrt() <= 1e-6, "orthonormality defect {}", err.sqrt());
}

#[test]
fn eigenvalue_sum_is_the_trace_quotient_maximum() {
    // small instance: random search over H-orthonormal projections never
    // beats the solver's objective value
    let mut rng = ChaCha8Rng::seed_from_u64(61);
    let d = 4; // 2d = 8
    let n = 10;
    let xs_mat = Array2::from_shape_fn((d, n), |_| rng.random_range(-1.0..1.0));
    let xt_mat = Array2::from_shape_fn((d, n), |_| rng.random_range(-1.0..1.0));
    let labels: Vec<u32> = (0..n).map(|j| (j % 2) as u32 + 1).collect();
    let pseudo: Vec<u32> = (0..n).map(|j| ((j / 2) % 2) as u32 + 1).collect();
    let xs = Dataset::new(xs_mat, Some(labels), "s").unwrap();
    let xt = Dataset::new(xt_mat, None, "t").unwrap();

    let scatters = stats::scatter_set(&xs, &xt).unwrap();
    let mmd = stats::mmd_blocks(&xs, &xt, Some(&pseudo)).unwrap();
    let params = JgsaParams::new(2, 1, 0.3);
    let (g, h) = assemble(&scatters, &mmd, &params, Regularizer::Identity).unwrap();
    let eig = jgsa::geig::solve_definite_geig(&g, &h, params.k).unwrap();
    let best: f64 = eig.values.iter().sum();

    let mut exceeded = 0usize;
    for _ in 0..100_000 {
        let w0 = Array2::from_shape_fn((2 * d, params.k), |_| rng.random_range(-1.0..1.0));
        let Some(w) = oracle::h_orthonormalize(&w0, &h) else {
            continue;
        };
        let value = w.t().dot(&g).dot(&w).diag().sum();
        if value > best + 1e-9 {
            exceeded += 1;
        }
    }
    assert_eq!(exceeded, 0, "random search exceeded the solver objective");
}

#[test]
fn huge_subspace_weight_collapses_the_projections() {
    let spec = SyntheticSpec::shifted_default(13);
    let (xs, xt) = generate_synthetic(&spec).unwrap();
    let mut params = JgsaParams::new(2, 3, 0.1);
    params.lambda = 1e6;
    let model = fit(&xs, &xt, &params).unwrap();
    let diff = &model.projections.a - &model.projections.b;
    let diff_norm = diff.iter().map(|v| v * v).sum::<f64>().sqrt();
    let a_norm = model
        .projections
        .a
        .iter()
        .map(|v| v * v)
        .sum::<f64>()
        .sqrt();
    assert!(
        diff_norm / a_norm <= 0.01,
        "projections stay apart: {}",
        diff_norm / a_norm
    );
}

#[test]
fn permuting_target_columns_permutes_the_embedding() {
    let spec = SyntheticSpec::shifted_default(19);
    let (xs, xt) = generate_synthetic(&spec).unwrap();
    let params = JgsaParams::new(2, 4, 0.1);
    let base = fit(&xs, &xt, &params).unwrap();

    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut perm: Vec<usize> = (0..xt.len()).collect();
    perm.shuffle(&mut rng);
    let permuted = Dataset::new(
        xt.features().select(Axis(1), &perm),
        xt.labels().map(|l| perm.iter().map(|&j| l[j]).collect()),
        "permuted",
    )
    .unwrap();
    let shuffled = fit(&xs, &permuted, &params).unwrap();

    let scale = base
        .target_embedding
        .iter()
        .fold(0.0f64, |acc, v| acc.max(v.abs()));
    for (new_col, &old_col) in perm.iter().enumerate() {
        for r in 0..params.k {
            let a = base.target_embedding[(r, old_col)];
            let b = shuffled.target_embedding[(r, new_col)];
            assert!(
                (a - b).abs() <= 1e-9 * scale.max(1.0),
                "embedding mismatch at ({r}, {new_col})"
            );
        }
    }

    let base_acc = accuracy(base.target_labels(), xt.labels().unwrap()).unwrap();
    let perm_acc = accuracy(shuffled.target_labels(), permuted.labels().unwrap()).unwrap();
    assert_eq!(base_acc, perm_acc);
}

#[test]
fn kernelized_fit_runs_and_reports_bandwidth() {
    let mut spec = SyntheticSpec::shifted_default(23);
    spec.samples_per_class = 12; // keep the pencil small
    let (xs, xt) = generate_synthetic(&spec).unwrap();
    let params = JgsaParams::new(2, 3, 0.1).with_kernel(KernelSpec::Rbf(Bandwidth::Median));
    let model = fit(&xs, &xt, &params).unwrap();
    assert!(model.diagnostics.resolved_bandwidth.unwrap() > 0.0);
    assert_eq!(model.source_embedding.nrows(), 2);
    assert_eq!(model.source_embedding.ncols(), xs.len());
    // kernel-mode embeddings are Gram analogues of the primal map
    let z = model
        .transform(xt.features().view(), jgsa::Domain::Target)
        .unwrap();
    let gap = z
        .iter()
        .zip(model.target_embedding.iter())
        .fold(0.0f64, |acc, (a, b)| acc.max((a - b).abs()));
    assert!(gap <= 1e-10);
}

#[test]
fn fit_rejects_unlabeled_or_mismatched_inputs() {
    let spec = SyntheticSpec::shifted_default(29);
    let (xs, xt) = generate_synthetic(&spec).unwrap();
    let unlabeled = Dataset::new(xs.features().clone(), None, "u").unwrap();
    let params = JgsaParams::new(2, 2, 0.1);
    assert!(fit(&unlabeled, &xt, &params).is_err());

    let skinny = Dataset::new(Array2::zeros((2, 4)), None, "skinny").unwrap();
    assert!(fit(&xs, &skinny, &params).is_err());

    // k larger than the feature dimension in primal mode
    let params = JgsaParams::new(9, 2, 0.1);
    assert!(fit(&xs, &xt, &params).is_err());

    // a class id with no samples
    let mut labels = xs.labels().unwrap().to_vec();
    for y in labels.iter_mut() {
        if *y == 2 {
            *y = 3;
        }
    }
    let gappy = Dataset::new(xs.features().clone(), Some(labels), "gappy").unwrap();
    assert!(fit(&gappy, &xt, &JgsaParams::new(2, 2, 0.1)).is_err());
}
