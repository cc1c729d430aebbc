//! Nearest-neighbor classification and embedding-level metrics.

use ndarray::{ArrayView2, Axis};

use crate::error::{Error, Result};

/// Anything that can label query columns given labeled training columns.
/// The projection learner retrains one of these on each refinement pass.
pub trait PseudoLabeler {
    fn fit_predict(
        &self,
        train_x: ArrayView2<f64>,
        train_y: &[u32],
        query_x: ArrayView2<f64>,
    ) -> Result<Vec<u32>>;
}

/// The default labeler: plain 1-nearest-neighbor in Euclidean distance.
#[derive(Debug, Clone, Copy, Default)]
pub struct NearestNeighbor;

impl PseudoLabeler for NearestNeighbor {
    fn fit_predict(
        &self,
        train_x: ArrayView2<f64>,
        train_y: &[u32],
        query_x: ArrayView2<f64>,
    ) -> Result<Vec<u32>> {
        knn1_classify(train_x, train_y, query_x)
    }
}

/// Labels each query column with the label of its Euclidean-nearest
/// training column; exact ties resolve to the lowest training index.
///
/// Brute-force O(m q) search; distances use the expanded squared form with
/// negative round-off clamped at zero.
pub fn knn1_classify(
    train_x: ArrayView2<f64>,
    train_y: &[u32],
    query_x: ArrayView2<f64>,
) -> Result<Vec<u32>> {
    if train_x.ncols() == 0 {
        return Err(Error::InvalidData("empty training set".into()));
    }
    if train_x.nrows() != query_x.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "training columns have {} rows, queries {}",
            train_x.nrows(),
            query_x.nrows()
        )));
    }
    if train_y.len() != train_x.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "{} labels for {} training columns",
            train_y.len(),
            train_x.ncols()
        )));
    }
    let train_norms: Vec<f64> = train_x
        .axis_iter(Axis(1))
        .map(|c| c.iter().map(|v| v * v).sum())
        .collect();
    let query_norms: Vec<f64> = query_x
        .axis_iter(Axis(1))
        .map(|c| c.iter().map(|v| v * v).sum())
        .collect();
    let cross = train_x.t().dot(&query_x);

    let mut out = Vec::with_capacity(query_x.ncols());
    for j in 0..query_x.ncols() {
        let mut best = 0usize;
        let mut best_d = f64::INFINITY;
        for (i, &tn) in train_norms.iter().enumerate() {
            let d = (tn + query_norms[j] - 2.0 * cross[(i, j)]).max(0.0);
            if d < best_d {
                best_d = d;
                best = i;
            }
        }
        out.push(train_y[best]);
    }
    Ok(out)
}

/// Fraction of agreeing entries.
pub fn accuracy(predicted: &[u32], reference: &[u32]) -> Result<f64> {
    if predicted.len() != reference.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} predictions vs {} references",
            predicted.len(),
            reference.len()
        )));
    }
    if predicted.is_empty() {
        return Err(Error::InvalidData("accuracy of an empty prediction".into()));
    }
    let matches = predicted
        .iter()
        .zip(reference.iter())
        .filter(|(a, b)| a == b)
        .count();
    Ok(matches as f64 / predicted.len() as f64)
}

/// Squared Euclidean distance between the column means of two embeddings.
pub fn empirical_mmd(zs: ArrayView2<f64>, zt: ArrayView2<f64>) -> Result<f64> {
    if zs.nrows() != zt.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "embeddings have {} and {} rows",
            zs.nrows(),
            zt.nrows()
        )));
    }
    if zs.ncols() == 0 || zt.ncols() == 0 {
        return Err(Error::InvalidData("empty embedding".into()));
    }
    let ms = zs.mean_axis(Axis(1)).expect("nonempty");
    let mt = zt.mean_axis(Axis(1)).expect("nonempty");
    Ok(ms.iter().zip(mt.iter()).map(|(a, b)| (a - b) * (a - b)).sum())
}

/// Predictions paired with optional ground truth.
#[derive(Debug, Clone)]
pub struct LabeledPrediction {
    pub predicted: Vec<u32>,
    pub reference: Option<Vec<u32>>,
    pub accuracy: Option<f64>,
}

impl LabeledPrediction {
    pub fn new(predicted: Vec<u32>, reference: Option<Vec<u32>>) -> Result<Self> {
        let accuracy = match &reference {
            Some(r) => Some(accuracy(&predicted, r)?),
            None => None,
        };
        Ok(LabeledPrediction {
            predicted,
            reference,
            accuracy,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use jgsa_oracles as oracle;
    use ndarray::{array, Array2};
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn exact_match_takes_that_label() {
        let train = array![[0.0, 10.0], [1.0, -1.0]];
        let pred = knn1_classify(train.view(), &[7, 9], train.view()).unwrap();
        assert_eq!(pred, vec![7, 9]);
    }

    #[test]
    fn midpoint_split() {
        let train = array![[0.0, 10.0]];
        let query = array![[4.0, 6.0]];
        let pred = knn1_classify(train.view(), &[1, 2], query.view()).unwrap();
        assert_eq!(pred, vec![1, 2]);
    }

    #[test]
    fn ties_resolve_to_lowest_training_index() {
        let train = array![[-1.0, 1.0]];
        let query = array![[0.0]];
        let pred = knn1_classify(train.view(), &[4, 5], query.view()).unwrap();
        assert_eq!(pred, vec![4]);
    }

    #[test]
    fn rejects_empty_training_and_bad_dims() {
        let empty: Array2<f64> = Array2::zeros((2, 0));
        let query = array![[0.0], [0.0]];
        assert!(knn1_classify(empty.view(), &[], query.view()).is_err());
        let train = array![[0.0]];
        assert!(knn1_classify(train.view(), &[1], query.view()).is_err());
        assert!(knn1_classify(train.view(), &[1, 2], train.view()).is_err());
    }

    #[test]
    fn accuracy_counts_matches() {
        assert_eq!(accuracy(&[1, 2, 3], &[1, 2, 3]).unwrap(), 1.0);
        assert_eq!(accuracy(&[1, 1], &[2, 2]).unwrap(), 0.0);
        assert_eq!(accuracy(&[1, 2, 3, 4], &[1, 2, 3, 5]).unwrap(), 0.75);
        assert!(accuracy(&[1], &[1, 2]).is_err());
        assert!(accuracy(&[], &[]).is_err());
    }

    #[test]
    fn mmd_trivial_values() {
        let z = array![[1.0, 3.0], [0.0, 2.0]];
        assert_eq!(empirical_mmd(z.view(), z.view()).unwrap(), 0.0);
        let a = array![[0.0, 0.0]];
        let b = array![[3.0, 3.0]];
        assert_eq!(empirical_mmd(a.view(), b.view()).unwrap(), 9.0);
    }

    #[test]
    fn mmd_agrees_with_marginal_block_trace() {
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        let zs = Array2::from_shape_fn((3, 7), |_| rng.random_range(-1.0..1.0));
        let zt = Array2::from_shape_fn((3, 5), |_| rng.random_range(-1.0..1.0));
        let got = empirical_mmd(zs.view(), zt.view()).unwrap();
        // identity projections against the marginal coefficient matrices
        let labels = vec![1u32; 7];
        let (m_s, m_t, m_st, m_ts) =
            oracle::mmd_block_matrices_direct(zs.view(), &labels, zt.view(), None);
        let trace = (&m_s + &m_st + &m_ts + &m_t).diag().sum();
        assert!((got - trace).abs() <= 1e-10);
    }

    #[test]
    fn knn_is_rotation_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(27);
        let train = Array2::from_shape_fn((2, 20), |_| rng.random_range(-1.0..1.0));
        let labels: Vec<u32> = (0..20).map(|j| (j % 3) as u32 + 1).collect();
        let query = Array2::from_shape_fn((2, 9), |_| rng.random_range(-1.0..1.0));
        let theta: f64 = 0.83;
        let rot = array![
            [theta.cos(), -theta.sin()],
            [theta.sin(), theta.cos()]
        ];
        let base = knn1_classify(train.view(), &labels, query.view()).unwrap();
        let rotated = knn1_classify(
            rot.dot(&train).view(),
            &labels,
            rot.dot(&query).view(),
        )
        .unwrap();
        assert_eq!(base, rotated);
    }

    #[test]
    fn mmd_is_permutation_invariant_and_nonnegative() {
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        let zs = Array2::from_shape_fn((4, 11), |_| rng.random_range(-2.0..2.0));
        let zt = Array2::from_shape_fn((4, 13), |_| rng.random_range(-2.0..2.0));
        let v = empirical_mmd(zs.view(), zt.view()).unwrap();
        assert!(v >= 0.0);
        let mut perm: Vec<usize> = (0..11).collect();
        perm.shuffle(&mut rng);
        let zs_p = zs.select(Axis(1), &perm);
        let v_p = empirical_mmd(zs_p.view(), zt.view()).unwrap();
        assert!((v - v_p).abs() <= 1e-12 * v.max(1.0));
    }
}
