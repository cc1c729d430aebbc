//! Coupled-projection domain alignment.
//!
//! Two projections are learned jointly, one per domain, so that in the
//! shared low-dimensional embedding the target variance and the source
//! between-class scatter are large while the domain divergence, the
//! source within-class scatter, and the distance between the two
//! projections are small. The trade-off is a trace ratio over the stacked
//! projection `W = [A; B]`, maximized in closed form by the `k` leading
//! eigenpairs of a symmetric-definite pencil. Target pseudo labels feed
//! the class-conditional divergence terms and are refined over a handful
//! of passes.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use ndarray::{s, Array2, ArrayView2, Axis, ShapeBuilder};

use crate::classify::{NearestNeighbor, PseudoLabeler};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::geig;
use crate::kernel::{self, Bandwidth, KernelSpec};
use crate::stats::{self, MmdBlocks, ScatterSet};

const MODEL_MAGIC: &[u8; 4] = b"JGSM";
const MODEL_VERSION: u32 = 1;

/// Hyperparameters of the alignment solver.
#[derive(Debug, Clone)]
pub struct JgsaParams {
    /// Subspace dimension.
    pub k: usize,
    /// Cap on pseudo-label refinement passes.
    pub t_max: usize,
    /// Weight of the source between/within-class scatter terms.
    pub beta: f64,
    /// Weight of the projection-divergence term.
    pub lambda: f64,
    /// Weight of the target-variance term.
    pub mu: f64,
    pub kernel: KernelSpec,
    /// Stop once at most this fraction of pseudo labels changes.
    pub convergence_tol: f64,
}

impl JgsaParams {
    /// `k`, `t_max`, and `beta` are task-specific; the remaining weights
    /// default to the fixed settings used everywhere.
    pub fn new(k: usize, t_max: usize, beta: f64) -> Self {
        JgsaParams {
            k,
            t_max,
            beta,
            lambda: 1.0,
            mu: 1.0,
            kernel: KernelSpec::Primal,
            convergence_tol: 1e-3,
        }
    }

    pub fn with_kernel(mut self, kernel: KernelSpec) -> Self {
        self.kernel = kernel;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::InvalidParam("subspace dimension must be >= 1".into()));
        }
        if self.t_max == 0 {
            return Err(Error::InvalidParam("iteration cap must be >= 1".into()));
        }
        if !(self.beta >= 0.0) || !self.beta.is_finite() {
            return Err(Error::InvalidParam(format!(
                "beta {} must be finite and nonnegative",
                self.beta
            )));
        }
        if !(self.lambda > 0.0) || !self.lambda.is_finite() {
            return Err(Error::InvalidParam(format!(
                "lambda {} must be finite and positive",
                self.lambda
            )));
        }
        if !(self.mu > 0.0) || !self.mu.is_finite() {
            return Err(Error::InvalidParam(format!(
                "mu {} must be finite and positive",
                self.mu
            )));
        }
        if !(self.convergence_tol >= 0.0) || !self.convergence_tol.is_finite() {
            return Err(Error::InvalidParam(format!(
                "convergence tolerance {} must be finite and nonnegative",
                self.convergence_tol
            )));
        }
        if let KernelSpec::Rbf(Bandwidth::Fixed(s)) = self.kernel {
            if !(s > 0.0) || !s.is_finite() {
                return Err(Error::InvalidParam(format!(
                    "rbf bandwidth {s} must be finite and positive"
                )));
            }
        }
        Ok(())
    }
}

/// Regularizer placed on the pencil diagonal: the identity in primal mode,
/// the pooled Gram matrix in kernel mode.
#[derive(Debug, Clone, Copy)]
pub enum Regularizer<'a> {
    Identity,
    Gram(&'a Array2<f64>),
}

/// Builds the numerator and denominator of the trace-ratio pencil.
///
/// Numerator: diag(beta * S_b, mu * S_t). Denominator: the assembled
/// divergence blocks plus lambda times [[R, -R], [-R, R]] plus
/// diag(beta * S_w, mu * R), with R the chosen regularizer.
pub fn assemble(
    scatters: &ScatterSet,
    mmd: &MmdBlocks,
    params: &JgsaParams,
    reg: Regularizer<'_>,
) -> Result<(Array2<f64>, Array2<f64>)> {
    params.validate()?;
    let d = scatters.dim();
    for (m, what) in [
        (&scatters.s_t, "target scatter"),
        (&scatters.s_b, "between-class scatter"),
        (&scatters.s_w, "within-class scatter"),
    ] {
        if m.nrows() != d || m.ncols() != d {
            return Err(Error::DimensionMismatch(format!(
                "{what} is {} x {}, expected {d} x {d}",
                m.nrows(),
                m.ncols()
            )));
        }
    }
    if mmd.dim() != d {
        return Err(Error::DimensionMismatch(format!(
            "divergence blocks have side {}, scatters {d}",
            mmd.dim()
        )));
    }
    let scale = mmd
        .m_st
        .iter()
        .fold(0.0f64, |acc, v| acc.max(v.abs()))
        .max(1.0);
    let ts_gap = mmd
        .m_ts
        .iter()
        .zip(mmd.m_st.t().iter())
        .fold(0.0f64, |acc, (a, b)| acc.max((a - b).abs()));
    if ts_gap > 1e-10 * scale {
        return Err(Error::InvalidData(format!(
            "cross blocks are not mutual transposes (gap {ts_gap:.3e})"
        )));
    }
    if let Regularizer::Gram(k) = reg {
        if k.nrows() != d || k.ncols() != d {
            return Err(Error::DimensionMismatch(format!(
                "Gram regularizer is {} x {}, expected {d} x {d}",
                k.nrows(),
                k.ncols()
            )));
        }
    }

    let mut g = Array2::zeros((2 * d, 2 * d));
    g.slice_mut(s![..d, ..d])
        .assign(&scatters.s_b.mapv(|v| params.beta * v));
    g.slice_mut(s![d.., d..])
        .assign(&scatters.s_t.mapv(|v| params.mu * v));

    // top-left: M_s + lambda R + beta S_w
    let mut top_left = mmd.m_s.clone();
    top_left.scaled_add(params.beta, &scatters.s_w);
    // top-right: M_st - lambda R
    let mut top_right = mmd.m_st.clone();
    // bottom-right: M_t + (lambda + mu) R
    let mut bottom_right = mmd.m_t.clone();
    match reg {
        Regularizer::Identity => {
            for i in 0..d {
                top_left[(i, i)] += params.lambda;
                top_right[(i, i)] -= params.lambda;
                bottom_right[(i, i)] += params.lambda + params.mu;
            }
        }
        Regularizer::Gram(k) => {
            top_left.scaled_add(params.lambda, k);
            top_right.scaled_add(-params.lambda, k);
            bottom_right.scaled_add(params.lambda + params.mu, k);
        }
    }

    let mut h = Array2::zeros((2 * d, 2 * d));
    h.slice_mut(s![..d, ..d]).assign(&top_left);
    h.slice_mut(s![..d, d..]).assign(&top_right);
    // the lower-left block is the exact transpose of the upper-right one,
    // keeping the assembled matrix bit-symmetric
    h.slice_mut(s![d.., ..d]).assign(&top_right.t());
    h.slice_mut(s![d.., d..]).assign(&bottom_right);

    Ok((g, h))
}

/// The coupled projections: `a` maps source samples, `b` target samples.
/// Rows are feature dimensions in primal mode and training samples in
/// kernel mode.
#[derive(Debug, Clone)]
pub struct ProjectionPair {
    pub a: Array2<f64>,
    pub b: Array2<f64>,
}

/// Numerical side notes from a fit: the diagonal jitter each eigensolve
/// needed, any rank warnings, and the resolved RBF bandwidth.
#[derive(Debug, Clone, Default)]
pub struct Diagnostics {
    pub jitters: Vec<f64>,
    pub warnings: Vec<String>,
    pub resolved_bandwidth: Option<f64>,
}

/// Which projection to apply to new samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Domain {
    Source,
    Target,
}

/// A fitted alignment model.
#[derive(Debug, Clone)]
pub struct JgsaModel {
    pub projections: ProjectionPair,
    /// k x n_s embedding of the source samples.
    pub source_embedding: Array2<f64>,
    /// k x n_t embedding of the target samples.
    pub target_embedding: Array2<f64>,
    /// Target pseudo labels: the initializer first, then one entry per
    /// refinement pass.
    pub pseudo_history: Vec<Vec<u32>>,
    /// Sum of the k leading eigenvalues per pass.
    pub objective_history: Vec<f64>,
    pub diagnostics: Diagnostics,
    kernel: KernelSpec,
    /// Pooled source|target training columns, retained in kernel mode for
    /// out-of-sample Gram evaluation.
    train_pool: Option<Array2<f64>>,
}

impl JgsaModel {
    pub fn kernel(&self) -> &KernelSpec {
        &self.kernel
    }

    /// Subspace dimension of the embeddings.
    pub fn subspace_dim(&self) -> usize {
        self.projections.a.ncols()
    }

    /// Final target pseudo labels.
    pub fn target_labels(&self) -> &[u32] {
        self.pseudo_history.last().expect("fit records history")
    }

    /// Embeds new samples through the projection of the chosen domain.
    pub fn transform(&self, x_new: ArrayView2<f64>, domain: Domain) -> Result<Array2<f64>> {
        let proj = match domain {
            Domain::Source => &self.projections.a,
            Domain::Target => &self.projections.b,
        };
        match &self.train_pool {
            None => {
                if x_new.nrows() != proj.nrows() {
                    return Err(Error::DimensionMismatch(format!(
                        "{} feature rows, projection expects {}",
                        x_new.nrows(),
                        proj.nrows()
                    )));
                }
                Ok(proj.t().dot(&x_new))
            }
            Some(pool) => {
                if x_new.nrows() != pool.nrows() {
                    return Err(Error::DimensionMismatch(format!(
                        "{} feature rows, training pool has {}",
                        x_new.nrows(),
                        pool.nrows()
                    )));
                }
                let cross = kernel::gram(&self.kernel, pool.view(), x_new)?;
                Ok(proj.t().dot(&cross))
            }
        }
    }

    /// Serializes projections, kernel choice, and (in kernel mode) the
    /// training pool. Histories and embeddings are not persisted.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let io = |source| Error::Io {
            path: path.to_path_buf(),
            source,
        };
        let d = self.projections.a.nrows();
        let k = self.subspace_dim();

        let mut payload: Vec<u8> = Vec::new();
        let push_matrix = |payload: &mut Vec<u8>, m: &Array2<f64>| {
            for col in m.axis_iter(Axis(1)) {
                for &v in col.iter() {
                    payload.extend_from_slice(&v.to_le_bytes());
                }
            }
        };
        push_matrix(&mut payload, &self.projections.a);
        push_matrix(&mut payload, &self.projections.b);
        if let Some(pool) = &self.train_pool {
            payload.extend_from_slice(&(pool.nrows() as u32).to_le_bytes());
            payload.extend_from_slice(&(pool.ncols() as u32).to_le_bytes());
            push_matrix(&mut payload, pool);
        }

        let (kind, bandwidth): (u8, f64) = match self.kernel {
            KernelSpec::Primal => (0, 0.0),
            KernelSpec::Linear => (1, 0.0),
            KernelSpec::Rbf(Bandwidth::Fixed(s)) => (2, s),
            KernelSpec::Rbf(Bandwidth::Median) => {
                return Err(Error::InvalidData(
                    "cannot persist an unresolved median bandwidth".into(),
                ))
            }
        };

        let file = File::create(path).map_err(io)?;
        let mut w = BufWriter::new(file);
        w.write_all(MODEL_MAGIC).map_err(io)?;
        w.write_all(&MODEL_VERSION.to_le_bytes()).map_err(io)?;
        w.write_all(&(d as u32).to_le_bytes()).map_err(io)?;
        w.write_all(&(k as u32).to_le_bytes()).map_err(io)?;
        w.write_all(&[kind]).map_err(io)?;
        w.write_all(&bandwidth.to_le_bytes()).map_err(io)?;
        w.write_all(&[u8::from(self.train_pool.is_some())])
            .map_err(io)?;
        w.write_all(&fnv1a64(&payload).to_le_bytes()).map_err(io)?;
        w.write_all(&payload).map_err(io)?;
        w.flush().map_err(io)
    }

    /// Reads a model back; histories and embeddings come back empty.
    pub fn load(path: impl AsRef<Path>) -> Result<JgsaModel> {
        let path = path.as_ref();
        let io = |source| Error::Io {
            path: path.to_path_buf(),
            source,
        };
        let mut bytes = Vec::new();
        BufReader::new(File::open(path).map_err(io)?)
            .read_to_end(&mut bytes)
            .map_err(io)?;
        let mut r = ByteCursor {
            bytes: &bytes,
            at: 0,
            path,
        };
        if r.take(4)? != MODEL_MAGIC {
            return Err(r.bad("bad magic, not a model file"));
        }
        let version = r.u32()?;
        if version != MODEL_VERSION {
            return Err(r.bad(&format!("unsupported model version {version}")));
        }
        let d = r.u32()? as usize;
        let k = r.u32()? as usize;
        let kind = r.take(1)?[0];
        let bandwidth = r.f64()?;
        let has_pool = match r.take(1)?[0] {
            0 => false,
            1 => true,
            other => return Err(r.bad(&format!("bad training-pool flag {other}"))),
        };
        let digest = r.u64()?;
        if fnv1a64(&bytes[r.at..]) != digest {
            return Err(r.bad("digest mismatch, model file is corrupt"));
        }

        let kernel = match kind {
            0 => KernelSpec::Primal,
            1 => KernelSpec::Linear,
            2 => KernelSpec::Rbf(Bandwidth::Fixed(bandwidth)),
            other => return Err(r.bad(&format!("unknown kernel kind {other}"))),
        };

        let a = r.matrix(d, k)?;
        let b = r.matrix(d, k)?;
        let train_pool = if has_pool {
            let rows = r.u32()? as usize;
            let cols = r.u32()? as usize;
            Some(r.matrix(rows, cols)?)
        } else {
            None
        };
        if r.at != bytes.len() {
            return Err(r.bad("trailing bytes after payload"));
        }

        Ok(JgsaModel {
            projections: ProjectionPair { a, b },
            source_embedding: Array2::zeros((k, 0)),
            target_embedding: Array2::zeros((k, 0)),
            pseudo_history: Vec::new(),
            objective_history: Vec::new(),
            diagnostics: Diagnostics::default(),
            kernel,
            train_pool,
        })
    }
}

/// Sequential little-endian reader over a model file's bytes.
struct ByteCursor<'a> {
    bytes: &'a [u8],
    at: usize,
    path: &'a Path,
}

impl<'a> ByteCursor<'a> {
    fn bad(&self, message: &str) -> Error {
        Error::Parse {
            path: self.path.to_path_buf(),
            line: 0,
            message: message.to_string(),
        }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.at + n > self.bytes.len() {
            return Err(self.bad("truncated model file"));
        }
        let out = &self.bytes[self.at..self.at + n];
        self.at += n;
        Ok(out)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn matrix(&mut self, rows: usize, cols: usize) -> Result<Array2<f64>> {
        let raw = self.take(rows * cols * 8)?;
        let values: Vec<f64> = raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Array2::from_shape_vec((rows, cols).f(), values)
            .map(|m| m.as_standard_layout().to_owned())
            .map_err(|e| self.bad(&format!("shape error: {e}")))
    }
}

fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash = 0xcbf2_9ce4_8422_2325u64;
    for &b in bytes {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

/// Fits with the default 1-nearest-neighbor pseudo labeler.
pub fn fit(xs: &Dataset, xt: &Dataset, params: &JgsaParams) -> Result<JgsaModel> {
    fit_with(xs, xt, params, &NearestNeighbor)
}

/// Fits the coupled projections, refining target pseudo labels with the
/// supplied labeler.
///
/// Each pass rebuilds the divergence blocks from the current pseudo
/// labels, solves the pencil for the `k` leading eigenpairs, splits the
/// stacked eigenvectors into the two projections, embeds both domains,
/// and relabels the target embedding with a labeler trained on the
/// embedded source. The loop stops when the fraction of changed labels
/// drops to the configured tolerance or the pass cap is reached.
pub fn fit_with(
    xs: &Dataset,
    xt: &Dataset,
    params: &JgsaParams,
    labeler: &dyn PseudoLabeler,
) -> Result<JgsaModel> {
    params.validate()?;
    let labels = xs
        .labels()
        .ok_or_else(|| Error::InvalidData("source dataset has no labels".into()))?;
    if xs.dim() != xt.dim() {
        return Err(Error::DimensionMismatch(format!(
            "source has {} dimensions, target {}",
            xs.dim(),
            xt.dim()
        )));
    }
    let n_classes = xs.num_classes().unwrap_or(0);
    for class in 1..=n_classes {
        if !labels.contains(&class) {
            return Err(Error::InvalidData(format!(
                "source class {class} of {n_classes} has no samples"
            )));
        }
    }

    let mut diagnostics = Diagnostics::default();

    // kernel-mode precomputation: pooled Gram matrix and its two blocks
    let kernel_data = if params.kernel.is_primal() {
        if params.k > xs.dim() {
            return Err(Error::InvalidParam(format!(
                "subspace dimension {} exceeds feature dimension {}",
                params.k,
                xs.dim()
            )));
        }
        None
    } else {
        let n = xs.len() + xt.len();
        if params.k > n {
            return Err(Error::InvalidParam(format!(
                "subspace dimension {} exceeds pooled sample count {n}",
                params.k
            )));
        }
        let mut pool = Array2::zeros((xs.dim(), n));
        pool.slice_mut(s![.., ..xs.len()]).assign(xs.features());
        pool.slice_mut(s![.., xs.len()..]).assign(xt.features());
        let resolved = params.kernel.resolve(pool.view())?;
        if let KernelSpec::Rbf(Bandwidth::Fixed(sigma)) = resolved {
            diagnostics.resolved_bandwidth = Some(sigma);
        }
        let mut full = kernel::gram(&resolved, pool.view(), pool.view())?;
        stats::symmetrize_inplace(&mut full);
        let gram_s = full.slice(s![.., ..xs.len()]).to_owned();
        let gram_t = full.slice(s![.., xs.len()..]).to_owned();
        Some((pool, resolved, full, gram_s, gram_t))
    };

    let scatters = match &kernel_data {
        None => stats::scatter_set(xs, xt)?,
        Some((_, _, full, gram_s, gram_t)) => {
            let (s_b, s_w) = stats::kernel_class_scatters(gram_s, labels)?;
            ScatterSet {
                s_t: stats::kernel_target_scatter(gram_t, full)?,
                s_b,
                s_w,
            }
        }
    };

    // pseudo labels start from a labeler trained on the original features
    let mut pseudo = labeler.fit_predict(xs.features().view(), labels, xt.features().view())?;
    validate_labeler_output(&pseudo, xt.len(), n_classes)?;
    let mut pseudo_history = vec![pseudo.clone()];
    let mut objective_history = Vec::new();
    let mut rank_warned = false;

    let mut projections: Option<ProjectionPair> = None;
    let mut embeddings: Option<(Array2<f64>, Array2<f64>)> = None;

    for _pass in 0..params.t_max {
        let mmd = match &kernel_data {
            None => stats::mmd_blocks(xs, xt, Some(&pseudo))?,
            Some((_, _, _, gram_s, gram_t)) => {
                stats::kernel_mmd_blocks(gram_s, labels, gram_t, Some(&pseudo))?
            }
        };
        let reg = match &kernel_data {
            None => Regularizer::Identity,
            Some((_, _, full, _, _)) => Regularizer::Gram(full),
        };
        let (g, h) = assemble(&scatters, &mmd, params, reg)?;
        let eig = geig::solve_definite_geig(&g, &h, params.k)?;
        diagnostics.jitters.push(eig.jitter);
        if !rank_warned {
            let lead = eig.values.first().copied().unwrap_or(0.0).max(0.0);
            let positive = eig.values.iter().filter(|&&v| v > 1e-12 * lead.max(1e-300)).count();
            if positive < params.k {
                diagnostics.warnings.push(format!(
                    "only {positive} of {} requested directions have positive objective value",
                    params.k
                ));
                rank_warned = true;
            }
        }
        objective_history.push(eig.values.iter().sum());

        let d = scatters.dim();
        let a = eig.vectors.slice(s![..d, ..]).to_owned();
        let b = eig.vectors.slice(s![d.., ..]).to_owned();
        let (z_s, z_t) = match &kernel_data {
            None => (a.t().dot(xs.features()), b.t().dot(xt.features())),
            Some((_, _, _, gram_s, gram_t)) => (a.t().dot(gram_s), b.t().dot(gram_t)),
        };

        let relabeled = labeler.fit_predict(z_s.view(), labels, z_t.view())?;
        validate_labeler_output(&relabeled, xt.len(), n_classes)?;
        let changed = relabeled
            .iter()
            .zip(pseudo.iter())
            .filter(|(a, b)| a != b)
            .count();
        let changed_fraction = changed as f64 / xt.len() as f64;

        pseudo_history.push(relabeled.clone());
        pseudo = relabeled;
        projections = Some(ProjectionPair { a, b });
        embeddings = Some((z_s, z_t));

        if changed_fraction <= params.convergence_tol {
            break;
        }
    }

    let projections = projections.expect("at least one pass ran");
    let (source_embedding, target_embedding) = embeddings.expect("at least one pass ran");
    Ok(JgsaModel {
        projections,
        source_embedding,
        target_embedding,
        pseudo_history,
        objective_history,
        diagnostics,
        kernel: kernel_data
            .as_ref()
            .map_or(KernelSpec::Primal, |(_, resolved, _, _, _)| *resolved),
        train_pool: kernel_data.map(|(pool, _, _, _, _)| pool),
    })
}

fn validate_labeler_output(pseudo: &[u32], n_t: usize, n_classes: u32) -> Result<()> {
    if pseudo.len() != n_t {
        return Err(Error::InvalidData(format!(
            "labeler returned {} labels for {n_t} target samples",
            pseudo.len()
        )));
    }
    if let Some(&bad) = pseudo.iter().find(|&&y| y == 0 || y > n_classes) {
        return Err(Error::InvalidData(format!(
            "labeler produced class {bad} outside 1..={n_classes}"
        )));
    }
    Ok(())
}
