//! End-to-end experiment execution.

use std::time::Instant;

use jgsa::classify::{accuracy, knn1_classify};
use jgsa::data::{
    generate_synthetic, load_dataset, normalize_unit_columns, save_dataset, subsample, Dataset,
    FileFormat, SyntheticSpec,
};
use jgsa::{classify, jgsa as solver};
use ndarray::{concatenate, Axis};

use crate::baselines::{pca_projection, subspace_alignment};
use crate::config::{DataSource, ExperimentConfig, Method};
use crate::report::{emit_report, RunReport};
use crate::HarnessError;

fn data_err(e: jgsa::Error) -> HarnessError {
    HarnessError::Data(e.to_string())
}

fn num_err(e: jgsa::Error) -> HarnessError {
    match e {
        jgsa::Error::InvalidParam(_) => HarnessError::Config(e.to_string()),
        other => HarnessError::Numerical(other.to_string()),
    }
}

/// Loads or generates the two domains exactly as the config describes.
/// The subsample seeds derive from the experiment seed (source: seed,
/// target: seed + 1).
pub fn prepare_datasets(cfg: &ExperimentConfig) -> Result<(Dataset, Dataset), HarnessError> {
    let (mut xs, mut xt) = match &cfg.data {
        DataSource::Synthetic { samples_per_class } => {
            let mut spec = SyntheticSpec::shifted_default(cfg.seed);
            spec.samples_per_class = *samples_per_class;
            generate_synthetic(&spec).map_err(data_err)?
        }
        DataSource::Files {
            source,
            target,
            format,
        } => {
            let xs = load_dataset(source, *format).map_err(data_err)?;
            let xt = load_dataset(target, *format).map_err(data_err)?;
            (xs, xt)
        }
    };
    if xs.labels().is_none() {
        return Err(HarnessError::Data(
            "source dataset carries no labels".into(),
        ));
    }
    if let Some(n) = cfg.subsample_source {
        xs = subsample(&xs, n, cfg.seed).map_err(data_err)?;
    }
    if let Some(n) = cfg.subsample_target {
        xt = subsample(&xt, n, cfg.seed.wrapping_add(1)).map_err(data_err)?;
    }
    if cfg.effective_normalize() {
        xs = normalize_unit_columns(&xs).map_err(data_err)?;
        xt = normalize_unit_columns(&xt).map_err(data_err)?;
    }
    Ok((xs, xt))
}

/// Outcome of one run: the report plus the fitted model when the adaptive
/// method ran.
pub struct RunOutcome {
    pub report: RunReport,
    pub model: Option<solver::JgsaModel>,
}

/// Runs the configured experiment and writes the report (and, for the
/// adaptive method, embeddings and per-pass metrics) when an output path
/// is set.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunOutcome, HarnessError> {
    let started = Instant::now();
    let (xs, xt) = prepare_datasets(cfg)?;
    let target_truth: Option<Vec<u32>> = xt.labels().map(<[u32]>::to_vec);

    let mut accuracies: Vec<(String, f64)> = Vec::new();
    let mut iteration_accuracy: Vec<f64> = Vec::new();
    let mmd_pre =
        classify::empirical_mmd(xs.features().view(), xt.features().view()).map_err(num_err)?;
    let mut mmd_post: Option<f64> = None;

    // the no-adaptation reference is always evaluated on the same samples
    let raw_pred = knn1_classify(
        xs.features().view(),
        xs.labels().expect("checked in prepare"),
        xt.features().view(),
    )
    .map_err(num_err)?;
    if let Some(truth) = &target_truth {
        accuracies.push(("raw".into(), accuracy(&raw_pred, truth).map_err(num_err)?));
    }

    let mut model = None;
    match cfg.method {
        Method::None => {}
        Method::Pca => {
            let pooled = concatenate(Axis(1), &[xs.features().view(), xt.features().view()])
                .expect("dims checked");
            let proj = pca_projection(pooled.view(), cfg.params.k)?;
            let zs = proj.t().dot(xs.features());
            let zt = proj.t().dot(xt.features());
            if let Some(truth) = &target_truth {
                let pred = knn1_classify(zs.view(), xs.labels().unwrap(), zt.view())
                    .map_err(num_err)?;
                accuracies.push(("pca".into(), accuracy(&pred, truth).map_err(num_err)?));
            }
            mmd_post = Some(classify::empirical_mmd(zs.view(), zt.view()).map_err(num_err)?);
        }
        Method::Sa => {
            let (zs, zt) =
                subspace_alignment(xs.features().view(), xt.features().view(), cfg.params.k)?;
            if let Some(truth) = &target_truth {
                let pred = knn1_classify(zs.view(), xs.labels().unwrap(), zt.view())
                    .map_err(num_err)?;
                accuracies.push(("sa".into(), accuracy(&pred, truth).map_err(num_err)?));
            }
            mmd_post = Some(classify::empirical_mmd(zs.view(), zt.view()).map_err(num_err)?);
        }
        Method::Jgsa => {
            let fitted = solver::fit(&xs, &xt, &cfg.params).map_err(num_err)?;
            if let Some(truth) = &target_truth {
                accuracies.push((
                    "jgsa".into(),
                    accuracy(fitted.target_labels(), truth).map_err(num_err)?,
                ));
                for pass in &fitted.pseudo_history {
                    iteration_accuracy.push(accuracy(pass, truth).map_err(num_err)?);
                }
            }
            mmd_post = Some(
                classify::empirical_mmd(
                    fitted.source_embedding.view(),
                    fitted.target_embedding.view(),
                )
                .map_err(num_err)?,
            );
            model = Some(fitted);
        }
    }

    let report = RunReport {
        library_version: jgsa::VERSION.to_string(),
        config_echo: cfg.echo(),
        accuracies,
        iteration_accuracy,
        mmd_pre,
        mmd_post,
        wall_clock_ms: started.elapsed().as_millis() as u64,
    };

    if let Some(out) = &cfg.out {
        emit_report(&report, out)?;
        if let Some(m) = &model {
            let stem = out.display().to_string();
            let zs = Dataset::new(
                m.source_embedding.clone(),
                xs.labels().map(<[u32]>::to_vec),
                "source-embedding",
            )
            .map_err(num_err)?;
            save_dataset(&zs, format!("{stem}.zs.rawmatrix"), FileFormat::RawMatrix)
                .map_err(|e| HarnessError::Data(e.to_string()))?;
            let zt = Dataset::new(
                m.target_embedding.clone(),
                Some(m.target_labels().to_vec()),
                "target-embedding",
            )
            .map_err(num_err)?;
            save_dataset(&zt, format!("{stem}.zt.rawmatrix"), FileFormat::RawMatrix)
                .map_err(|e| HarnessError::Data(e.to_string()))?;
            write_iteration_csv(m, &report, &format!("{stem}.iterations.csv"))?;
        }
    }

    Ok(RunOutcome { report, model })
}

/// Per-pass metrics as CSV: pass index, objective value, pseudo-label
/// accuracy when known.
fn write_iteration_csv(
    model: &solver::JgsaModel,
    report: &RunReport,
    path: &str,
) -> Result<(), HarnessError> {
    let mut text = String::from("pass,objective,pseudo_accuracy\n");
    for (idx, objective) in model.objective_history.iter().enumerate() {
        // pseudo_history has the initializer at index 0
        let acc = report
            .iteration_accuracy
            .get(idx + 1)
            .map_or(String::new(), |a| format!("{a:.4}"));
        text.push_str(&format!("{},{},{}\n", idx + 1, objective, acc));
    }
    std::fs::write(path, text)
        .map_err(|e| HarnessError::Data(format!("cannot write {path}: {e}")))
}
