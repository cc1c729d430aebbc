//! Scatter matrices and distribution-divergence (MMD) block matrices.
//!
//! Samples are columns. Every builder comes in a primal form that consumes
//! feature columns and a kernelized form that consumes Gram-matrix columns;
//! both share the same arithmetic because the kernelized construction
//! replaces each sample x_i by its kernel column k_i.
//!
//! The divergence matrices exploit the low-rank structure of the coefficient
//! matrices: each marginal or per-class term is an outer product of domain
//! or class means, accumulated in a fixed order so results are deterministic.

use ndarray::{Array1, Array2, ArrayView2, Axis};

use crate::data::Dataset;
use crate::error::{Error, Result};

/// The three scatter matrices of one adaptation problem: target scatter,
/// source between-class scatter, and source within-class scatter.
#[derive(Debug, Clone)]
pub struct ScatterSet {
    pub s_t: Array2<f64>,
    pub s_b: Array2<f64>,
    pub s_w: Array2<f64>,
}

impl ScatterSet {
    pub fn dim(&self) -> usize {
        self.s_t.nrows()
    }
}

/// The four divergence blocks built from current pseudo labels. The
/// assembled block matrix [[m_s, m_st], [m_ts, m_t]] is symmetric PSD,
/// and `m_ts` is the exact transpose of `m_st`.
#[derive(Debug, Clone)]
pub struct MmdBlocks {
    pub m_s: Array2<f64>,
    pub m_t: Array2<f64>,
    pub m_st: Array2<f64>,
    pub m_ts: Array2<f64>,
}

impl MmdBlocks {
    pub fn dim(&self) -> usize {
        self.m_s.nrows()
    }

    pub fn zeros(dim: usize) -> Self {
        MmdBlocks {
            m_s: Array2::zeros((dim, dim)),
            m_t: Array2::zeros((dim, dim)),
            m_st: Array2::zeros((dim, dim)),
            m_ts: Array2::zeros((dim, dim)),
        }
    }

    /// Stacks the four blocks into the full 2dim x 2dim matrix.
    pub fn assemble(&self) -> Array2<f64> {
        let d = self.dim();
        let mut full = Array2::zeros((2 * d, 2 * d));
        full.slice_mut(ndarray::s![..d, ..d]).assign(&self.m_s);
        full.slice_mut(ndarray::s![..d, d..]).assign(&self.m_st);
        full.slice_mut(ndarray::s![d.., ..d]).assign(&self.m_ts);
        full.slice_mut(ndarray::s![d.., d..]).assign(&self.m_t);
        full
    }
}

/// Averages a matrix with its transpose, removing round-off asymmetry.
pub(crate) fn symmetrize_inplace(m: &mut Array2<f64>) {
    let n = m.nrows();
    debug_assert_eq!(n, m.ncols());
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

fn column_mean(x: ArrayView2<f64>) -> Array1<f64> {
    x.mean_axis(Axis(1)).expect("at least one column")
}

/// m += scale * a b'
fn add_scaled_outer(m: &mut Array2<f64>, a: &Array1<f64>, b: &Array1<f64>, scale: f64) {
    for (i, &ai) in a.iter().enumerate() {
        let f = scale * ai;
        for (j, &bj) in b.iter().enumerate() {
            m[(i, j)] += f * bj;
        }
    }
}

/// Scatter of the columns of `x` about their mean: sum over samples of
/// (x_j - mean)(x_j - mean)'.
pub fn centered_scatter(x: ArrayView2<f64>) -> Array2<f64> {
    let mean = column_mean(x);
    let mut centered = x.to_owned();
    for mut col in centered.axis_iter_mut(Axis(1)) {
        col -= &mean;
    }
    let mut s = centered.dot(&centered.t());
    symmetrize_inplace(&mut s);
    s
}

/// Target-domain scatter matrix.
pub fn target_scatter(xt: &Dataset) -> Array2<f64> {
    centered_scatter(xt.features().view())
}

/// Kernelized target scatter from the target Gram block `gram_t` (n x n_t)
/// and the pooled Gram matrix `gram_full` (n x n).
///
/// The target columns are re-centered against all n training samples:
/// each entry of the centered block is
/// k[i, j] - colmean(gram_t)[j] - rowmean(gram_full)[i] + grandmean(gram_full),
/// and the scatter is the product of the centered block with its transpose.
pub fn kernel_target_scatter(gram_t: &Array2<f64>, gram_full: &Array2<f64>) -> Result<Array2<f64>> {
    let n = gram_full.nrows();
    if gram_full.ncols() != n {
        return Err(Error::DimensionMismatch(format!(
            "pooled Gram matrix is {} x {}",
            n,
            gram_full.ncols()
        )));
    }
    if gram_t.nrows() != n || gram_t.ncols() > n {
        return Err(Error::DimensionMismatch(format!(
            "target Gram block {} x {} inconsistent with {n} pooled samples",
            gram_t.nrows(),
            gram_t.ncols()
        )));
    }
    let col_means = gram_t.mean_axis(Axis(0)).expect("n >= 1");
    let row_means = gram_full.mean_axis(Axis(1)).expect("n >= 1");
    let grand_mean = gram_full.mean().expect("nonempty");
    let mut centered = gram_t.clone();
    for ((i, j), v) in centered.indexed_iter_mut() {
        *v += grand_mean - col_means[j] - row_means[i];
    }
    let mut s = centered.dot(&centered.t());
    symmetrize_inplace(&mut s);
    Ok(s)
}

/// Between-class and within-class scatter of labeled source columns.
pub fn source_class_scatters(xs: &Dataset) -> Result<(Array2<f64>, Array2<f64>)> {
    let labels = xs
        .labels()
        .ok_or_else(|| Error::InvalidData("source dataset has no labels".into()))?;
    Ok(class_scatters_impl(xs.features().view(), labels))
}

/// Kernelized between/within-class scatter from the source Gram block
/// (columns indexed by source samples).
pub fn kernel_class_scatters(
    gram_s: &Array2<f64>,
    labels: &[u32],
) -> Result<(Array2<f64>, Array2<f64>)> {
    if labels.len() != gram_s.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "{} labels for {} Gram columns",
            labels.len(),
            gram_s.ncols()
        )));
    }
    Ok(class_scatters_impl(gram_s.view(), labels))
}

fn class_indices(labels: &[u32], class: u32) -> Vec<usize> {
    labels
        .iter()
        .enumerate()
        .filter_map(|(j, &y)| (y == class).then_some(j))
        .collect()
}

fn class_scatters_impl(x: ArrayView2<f64>, labels: &[u32]) -> (Array2<f64>, Array2<f64>) {
    let d = x.nrows();
    let n_classes = labels.iter().copied().max().unwrap_or(0);
    let global_mean = column_mean(x);

    let mut within_centered = x.to_owned();
    let mut s_b = Array2::zeros((d, d));
    for class in 1..=n_classes {
        let idx = class_indices(labels, class);
        if idx.is_empty() {
            continue;
        }
        let class_block = x.select(Axis(1), &idx);
        let class_mean = column_mean(class_block.view());
        for &j in &idx {
            let mut col = within_centered.column_mut(j);
            col -= &class_mean;
        }
        let diff = &class_mean - &global_mean;
        add_scaled_outer(&mut s_b, &diff, &diff, idx.len() as f64);
    }
    let mut s_w = within_centered.dot(&within_centered.t());
    symmetrize_inplace(&mut s_w);
    symmetrize_inplace(&mut s_b);
    (s_b, s_w)
}

/// Convenience constructor for all three scatter matrices of the primal
/// problem.
pub fn scatter_set(xs: &Dataset, xt: &Dataset) -> Result<ScatterSet> {
    if xs.dim() != xt.dim() {
        return Err(Error::DimensionMismatch(format!(
            "source has {} dimensions, target {}",
            xs.dim(),
            xt.dim()
        )));
    }
    let (s_b, s_w) = source_class_scatters(xs)?;
    Ok(ScatterSet {
        s_t: target_scatter(xt),
        s_b,
        s_w,
    })
}

/// Divergence blocks between labeled source columns and target columns.
///
/// Without pseudo labels only the marginal term (difference of domain
/// means) enters. With pseudo labels one term per class is added, built
/// from the class means on each side; classes empty on either side are
/// skipped so every coefficient stays finite.
pub fn mmd_blocks(xs: &Dataset, xt: &Dataset, pseudo: Option<&[u32]>) -> Result<MmdBlocks> {
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
    mmd_blocks_impl(
        xs.features().view(),
        labels,
        xt.features().view(),
        pseudo,
        xt.len(),
    )
}

/// Kernelized divergence blocks from the source and target Gram blocks.
pub fn kernel_mmd_blocks(
    gram_s: &Array2<f64>,
    labels: &[u32],
    gram_t: &Array2<f64>,
    pseudo: Option<&[u32]>,
) -> Result<MmdBlocks> {
    if gram_s.nrows() != gram_t.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "Gram blocks have {} and {} rows",
            gram_s.nrows(),
            gram_t.nrows()
        )));
    }
    if labels.len() != gram_s.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "{} labels for {} source Gram columns",
            labels.len(),
            gram_s.ncols()
        )));
    }
    mmd_blocks_impl(gram_s.view(), labels, gram_t.view(), pseudo, gram_t.ncols())
}

fn mmd_blocks_impl(
    xs: ArrayView2<f64>,
    labels: &[u32],
    xt: ArrayView2<f64>,
    pseudo: Option<&[u32]>,
    n_t: usize,
) -> Result<MmdBlocks> {
    let d = xs.nrows();
    let n_classes = labels.iter().copied().max().unwrap_or(0);
    if let Some(p) = pseudo {
        if p.len() != n_t {
            return Err(Error::DimensionMismatch(format!(
                "{} pseudo labels for {n_t} target samples",
                p.len()
            )));
        }
        if let Some(&bad) = p.iter().find(|&&y| y == 0 || y > n_classes) {
            return Err(Error::InvalidData(format!(
                "pseudo label {bad} outside 1..={n_classes}"
            )));
        }
    }

    let mut blocks = MmdBlocks::zeros(d);
    let mean_s = column_mean(xs);
    let mean_t = column_mean(xt);
    add_scaled_outer(&mut blocks.m_s, &mean_s, &mean_s, 1.0);
    add_scaled_outer(&mut blocks.m_t, &mean_t, &mean_t, 1.0);
    add_scaled_outer(&mut blocks.m_st, &mean_s, &mean_t, -1.0);

    if let Some(p) = pseudo {
        for class in 1..=n_classes {
            let src = class_indices(labels, class);
            let tgt = class_indices(p, class);
            if src.is_empty() || tgt.is_empty() {
                continue;
            }
            let u = column_mean(xs.select(Axis(1), &src).view());
            let v = column_mean(xt.select(Axis(1), &tgt).view());
            add_scaled_outer(&mut blocks.m_s, &u, &u, 1.0);
            add_scaled_outer(&mut blocks.m_t, &v, &v, 1.0);
            add_scaled_outer(&mut blocks.m_st, &u, &v, -1.0);
        }
    }
    blocks.m_ts = blocks.m_st.t().to_owned();
    Ok(blocks)
}
