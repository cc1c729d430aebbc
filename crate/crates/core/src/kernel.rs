//! Kernel functions and Gram-matrix construction for the kernelized solver.

use ndarray::{Array1, Array2, ArrayView2, Axis};

use crate::error::{Error, Result};

/// RBF bandwidth: fixed, or resolved from data by the median
/// pairwise-distance heuristic at fit time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Bandwidth {
    Median,
    Fixed(f64),
}

/// Feature-map choice for the projection learner.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelSpec {
    /// Operate directly on input features (no kernel).
    Primal,
    /// Inner-product kernel k(x, y) = x'y.
    Linear,
    /// Gaussian kernel k(x, y) = exp(-|x - y|^2 / (2 sigma^2)).
    Rbf(Bandwidth),
}

impl KernelSpec {
    pub fn is_primal(&self) -> bool {
        matches!(self, KernelSpec::Primal)
    }

    /// Replaces a `Median` bandwidth with the heuristic value computed on
    /// `pooled`. Fixed bandwidths are validated and passed through.
    pub fn resolve(&self, pooled: ArrayView2<f64>) -> Result<KernelSpec> {
        match self {
            KernelSpec::Rbf(Bandwidth::Median) => {
                Ok(KernelSpec::Rbf(Bandwidth::Fixed(median_bandwidth(pooled)?)))
            }
            KernelSpec::Rbf(Bandwidth::Fixed(s)) => {
                if !(*s > 0.0) || !s.is_finite() {
                    return Err(Error::InvalidParam(format!(
                        "rbf bandwidth {s} must be positive and finite"
                    )));
                }
                Ok(*self)
            }
            other => Ok(*other),
        }
    }
}

impl std::fmt::Display for KernelSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            KernelSpec::Primal => write!(f, "primal"),
            KernelSpec::Linear => write!(f, "linear"),
            KernelSpec::Rbf(_) => write!(f, "rbf"),
        }
    }
}

fn squared_column_norms(x: ArrayView2<f64>) -> Array1<f64> {
    x.map_axis(Axis(0), |col| col.iter().map(|v| v * v).sum())
}

/// Pairwise squared distances between columns of `x` and `y`, computed by
/// the expanded form |x|^2 + |y|^2 - 2 x'y and clamped at zero.
fn squared_distances(x: ArrayView2<f64>, y: ArrayView2<f64>) -> Array2<f64> {
    let xn = squared_column_norms(x);
    let yn = squared_column_norms(y);
    let mut cross = x.t().dot(&y);
    for ((i, j), v) in cross.indexed_iter_mut() {
        *v = (xn[i] + yn[j] - 2.0 * *v).max(0.0);
    }
    cross
}

/// Cross Gram matrix between the columns of `x` (D x m) and `y` (D x p).
pub fn gram(spec: &KernelSpec, x: ArrayView2<f64>, y: ArrayView2<f64>) -> Result<Array2<f64>> {
    if x.nrows() != y.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "gram inputs have {} and {} rows",
            x.nrows(),
            y.nrows()
        )));
    }
    match spec {
        KernelSpec::Primal => Err(Error::InvalidParam(
            "the primal mode has no Gram matrix".into(),
        )),
        KernelSpec::Linear => Ok(x.t().dot(&y)),
        KernelSpec::Rbf(Bandwidth::Fixed(sigma)) => {
            if !(*sigma > 0.0) || !sigma.is_finite() {
                return Err(Error::InvalidParam(format!(
                    "rbf bandwidth {sigma} must be positive and finite"
                )));
            }
            let mut d2 = squared_distances(x, y);
            let denom = 2.0 * sigma * sigma;
            d2.mapv_inplace(|v| (-v / denom).exp());
            Ok(d2)
        }
        KernelSpec::Rbf(Bandwidth::Median) => Err(Error::InvalidParam(
            "median bandwidth must be resolved against data before Gram evaluation".into(),
        )),
    }
}

/// Median of the pairwise Euclidean distances between columns of `x`.
///
/// Falls back to the smallest nonzero distance when the median is zero;
/// errs when every pair coincides.
pub fn median_bandwidth(x: ArrayView2<f64>) -> Result<f64> {
    let n = x.ncols();
    if n < 2 {
        return Err(Error::InvalidParam(
            "median bandwidth needs at least two samples".into(),
        ));
    }
    let d2 = squared_distances(x, x);
    let mut dists = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            dists.push(d2[(i, j)].sqrt());
        }
    }
    dists.sort_unstable_by(|a, b| a.partial_cmp(b).expect("distances are finite"));
    let mid = dists.len() / 2;
    let median = if dists.len() % 2 == 1 {
        dists[mid]
    } else {
        0.5 * (dists[mid - 1] + dists[mid])
    };
    if median > 0.0 {
        return Ok(median);
    }
    match dists.iter().find(|&&d| d > 0.0) {
        Some(&d) => Ok(d),
        None => Err(Error::InvalidData(
            "all pairwise distances are zero; cannot pick a bandwidth".into(),
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array2};

    #[test]
    fn rbf_self_gram_has_unit_diagonal() {
        let x = array![[0.0, 1.0, -2.0], [3.0, 0.5, 0.25]];
        let k = gram(&KernelSpec::Rbf(Bandwidth::Fixed(0.7)), x.view(), x.view()).unwrap();
        for i in 0..3 {
            assert!((k[(i, i)] - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn rbf_flat_limit_approaches_one() {
        let x = array![[0.0, 1.0, -0.5], [0.3, -0.2, 0.9]];
        let k = gram(&KernelSpec::Rbf(Bandwidth::Fixed(1e9)), x.view(), x.view()).unwrap();
        for v in k.iter() {
            assert!((v - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn rbf_hand_value() {
        let x = array![[0.0]];
        let y = array![[2.0]];
        let k = gram(&KernelSpec::Rbf(Bandwidth::Fixed(1.0)), x.view(), y.view()).unwrap();
        assert!((k[(0, 0)] - (-2.0f64).exp()).abs() < 1e-12);
        assert!((k[(0, 0)] - 0.135335).abs() < 1e-6);
    }

    #[test]
    fn linear_gram_is_bilinear() {
        let x = array![[1.0, 2.0], [-0.5, 0.25]];
        let y = array![[0.3, 1.5, -2.0], [0.7, 0.1, 0.9]];
        let kx = gram(&KernelSpec::Linear, x.view(), y.view()).unwrap();
        let x2 = x.mapv(|v| 2.0 * v);
        let kx2 = gram(&KernelSpec::Linear, x2.view(), y.view()).unwrap();
        for (a, b) in kx.iter().zip(kx2.iter()) {
            assert!((2.0 * a - b).abs() <= 1e-12 * a.abs().max(1.0));
        }
    }

    #[test]
    fn gram_rejects_primal_and_mismatched_dims() {
        let x = array![[1.0], [2.0]];
        let y = array![[1.0]];
        assert!(gram(&KernelSpec::Primal, x.view(), x.view()).is_err());
        assert!(gram(&KernelSpec::Linear, x.view(), y.view()).is_err());
        assert!(gram(&KernelSpec::Rbf(Bandwidth::Median), x.view(), x.view()).is_err());
    }

    #[test]
    fn gram_matrices_are_psd() {
        use rand::prelude::*;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        let x = Array2::from_shape_fn((4, 12), |_| rng.random_range(-1.0..1.0));
        for spec in [
            KernelSpec::Linear,
            KernelSpec::Rbf(Bandwidth::Fixed(0.8)),
        ] {
            let k = gram(&spec, x.view(), x.view()).unwrap();
            let trace: f64 = k.diag().sum();
            let (vals, _) = jgsa_oracles::jacobi_eigh(&k);
            let min = vals.iter().copied().fold(f64::INFINITY, f64::min);
            assert!(min >= -1e-8 * trace, "{spec}: min eig {min}, trace {trace}");
        }
    }

    #[test]
    fn median_bandwidth_hand_cases() {
        let x = array![[0.0, 1.0, 3.0]];
        assert!((median_bandwidth(x.view()).unwrap() - 2.0).abs() < 1e-12);

        let two = array![[0.0, 3.0], [0.0, 4.0]];
        assert!((median_bandwidth(two.view()).unwrap() - 5.0).abs() < 1e-12);
    }

    #[test]
    fn median_bandwidth_skips_zero_distances() {
        // four copies of one point and a single distinct point: the median
        // pairwise distance is zero, so the smallest nonzero one is used
        let x = array![[1.0, 1.0, 1.0, 1.0, 2.0]];
        assert!((median_bandwidth(x.view()).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn median_bandwidth_rejects_degenerate_cloud() {
        let x = array![[1.0, 1.0, 1.0]];
        assert!(median_bandwidth(x.view()).is_err());
        let single = array![[1.0]];
        assert!(median_bandwidth(single.view()).is_err());
    }

    #[test]
    fn resolve_fills_in_median() {
        let x = array![[0.0, 1.0, 3.0]];
        let spec = KernelSpec::Rbf(Bandwidth::Median).resolve(x.view()).unwrap();
        assert_eq!(spec, KernelSpec::Rbf(Bandwidth::Fixed(2.0)));
        assert_eq!(
            KernelSpec::Linear.resolve(x.view()).unwrap(),
            KernelSpec::Linear
        );
    }
}
