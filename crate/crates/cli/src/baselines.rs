//! Reference methods the experiments compare against: plain PCA and
//! subspace alignment.

use jgsa::geig::canonicalize_column_signs;
use jgsa::stats::centered_scatter;
use ndarray::{s, Array2, ArrayView2};
use ndarray_linalg::{Eigh, UPLO};

use crate::HarnessError;

/// Top-`k` eigenvectors (D x k, descending eigenvalue order, canonical
/// signs) of the scatter of the pooled columns.
pub fn pca_projection(x: ArrayView2<f64>, k: usize) -> Result<Array2<f64>, HarnessError> {
    let d = x.nrows();
    if k == 0 || k > d.min(x.ncols()) {
        return Err(HarnessError::Config(format!(
            "pca dimension {k} out of range for {d} x {} data",
            x.ncols()
        )));
    }
    let scatter = centered_scatter(x);
    let (_, vecs) = scatter
        .eigh(UPLO::Lower)
        .map_err(|e| HarnessError::Numerical(format!("pca eigensolve failed: {e}")))?;
    // eigh is ascending; keep the trailing k columns, leading first
    let mut proj = Array2::zeros((d, k));
    for (out_col, idx) in ((d - k)..d).rev().enumerate() {
        proj.column_mut(out_col).assign(&vecs.slice(s![.., idx]));
    }
    canonicalize_column_signs(&mut proj);
    Ok(proj)
}

/// Subspace alignment: source samples are projected through the source
/// basis mapped onto the target basis (M = A'B), target samples through
/// the target basis. Returns the two k-dimensional embeddings.
pub fn subspace_alignment(
    xs: ArrayView2<f64>,
    xt: ArrayView2<f64>,
    k: usize,
) -> Result<(Array2<f64>, Array2<f64>), HarnessError> {
    let a = pca_projection(xs, k)?;
    let b = pca_projection(xt, k)?;
    let m = a.t().dot(&b);
    let zs = m.t().dot(&a.t()).dot(&xs);
    let zt = b.t().dot(&xt);
    Ok((zs, zt))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn pca_recovers_an_exact_subspace() {
        // data confined to a 2-dimensional subspace of 4-space
        let mut rng = ChaCha8Rng::seed_from_u64(71);
        let basis = Array2::from_shape_fn((4, 2), |_| rng.random_range(-1.0..1.0));
        let coeffs = Array2::from_shape_fn((2, 30), |_| rng.random_range(-1.0..1.0));
        let x = basis.dot(&coeffs);
        let proj = pca_projection(x.view(), 2).unwrap();
        // reprojection must reproduce the centered data
        let mean = x.mean_axis(ndarray::Axis(1)).unwrap();
        let mut centered = x.clone();
        for mut col in centered.columns_mut() {
            col -= &mean;
        }
        let recon = proj.dot(&proj.t()).dot(&centered);
        let err = recon
            .iter()
            .zip(centered.iter())
            .fold(0.0f64, |acc, (a, b)| acc.max((a - b).abs()));
        assert!(err <= 1e-8, "reprojection error {err}");
    }

    #[test]
    fn alignment_of_identical_domains_is_the_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(73);
        let x = Array2::from_shape_fn((3, 25), |_| rng.random_range(-1.0..1.0));
        let (zs, zt) = subspace_alignment(x.view(), x.view(), 2).unwrap();
        let gap = zs
            .iter()
            .zip(zt.iter())
            .fold(0.0f64, |acc, (a, b)| acc.max((a - b).abs()));
        assert!(gap <= 1e-8, "embeddings differ by {gap}");
    }

    #[test]
    fn pca_rejects_oversized_k() {
        let x = Array2::<f64>::zeros((3, 5));
        assert!(pca_projection(x.view(), 4).is_err());
        assert!(pca_projection(x.view(), 0).is_err());
    }
}
