//! Symmetric-definite generalized eigensolver.
//!
//! Solves `G w = lambda H w` for symmetric `G` and symmetric
//! positive-definite `H` by reduction to a standard symmetric problem:
//! factor `H = L L'`, diagonalize `C = L^-1 G L^-T`, and back-transform
//! the eigenvectors as `W = L^-T V`. The returned vectors satisfy
//! `W' H W = I` and carry a deterministic sign so embeddings reproduce
//! across runs and platforms.
//!
//! When `H` is only semi-definite (rank-deficient Gram regularizers), the
//! factorization retries with an escalating diagonal jitter; the shift
//! that succeeded is reported alongside the result.

use ndarray::{Array2, Axis, s};
use ndarray_linalg::cholesky::Cholesky;
use ndarray_linalg::triangular::{Diag, SolveTriangular};
use ndarray_linalg::{Eigh, UPLO};

use crate::error::{Error, Result};

/// Leading eigenpairs of a symmetric-definite pencil.
#[derive(Debug, Clone)]
pub struct EigResult {
    /// Eigenvalues in descending order.
    pub values: Vec<f64>,
    /// Column-aligned eigenvectors, H-orthonormal.
    pub vectors: Array2<f64>,
    /// Diagonal shift added to `H` before factoring (0 when none was needed).
    pub jitter: f64,
}

/// Lower-triangular Cholesky factor of `h + jitter * I`.
#[derive(Debug, Clone)]
pub struct CholeskyFactor {
    pub l: Array2<f64>,
    pub jitter: f64,
}

/// Largest relative asymmetry tolerated before an input is rejected.
const SYMMETRY_TOL: f64 = 1e-8;
/// Jitter escalation: relative floor, growth factor, and retry budget.
const JITTER_RELATIVE_FLOOR: f64 = 1e-12;
const JITTER_GROWTH: f64 = 10.0;
const MAX_JITTER_ESCALATIONS: usize = 6;

fn check_square(m: &Array2<f64>, what: &str) -> Result<usize> {
    if m.nrows() != m.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "{what} is {} x {}, expected square",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(m.nrows())
}

/// Symmetrizes `m` in place after verifying the asymmetry is within
/// tolerance relative to the largest entry.
fn symmetrize_checked(m: &Array2<f64>, what: &str) -> Result<Array2<f64>> {
    let n = check_square(m, what)?;
    let scale = m.iter().fold(0.0f64, |acc, v| acc.max(v.abs())).max(1.0);
    let mut out = m.clone();
    for i in 0..n {
        for j in (i + 1)..n {
            let gap = (m[(i, j)] - m[(j, i)]).abs();
            if gap > SYMMETRY_TOL * scale {
                return Err(Error::InvalidData(format!(
                    "{what} is asymmetric at ({i}, {j}): |{} - {}| = {gap}",
                    m[(i, j)],
                    m[(j, i)]
                )));
            }
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            out[(i, j)] = v;
            out[(j, i)] = v;
        }
    }
    Ok(out)
}

/// Cholesky factorization with escalating diagonal jitter.
///
/// The first attempt uses the matrix as given. A pivot fails when the
/// factorization aborts on a non-positive value or when the smallest
/// pivot falls below the rank-revealing threshold sqrt(dim * eps) times
/// the largest one — such a factor would amplify round-off unboundedly
/// in the back-substitutions. On failure the diagonal is shifted by
/// `1e-12 * trace / dim` (with an absolute floor for traceless input)
/// and the shift grows tenfold per retry, at most six times.
pub fn cholesky_reduce(h: &Array2<f64>) -> Result<CholeskyFactor> {
    let dim = check_square(h, "cholesky input")?;
    let trace: f64 = h.diag().sum();
    let base = if trace > 0.0 {
        JITTER_RELATIVE_FLOOR * trace / dim as f64
    } else {
        JITTER_RELATIVE_FLOOR
    };
    let pivot_floor = (dim as f64 * f64::EPSILON).sqrt();

    let mut jitter = 0.0;
    let mut last_failure = String::new();
    for _attempt in 0..=MAX_JITTER_ESCALATIONS {
        let shifted = if jitter == 0.0 {
            h.clone()
        } else {
            let mut m = h.clone();
            for i in 0..dim {
                m[(i, i)] += jitter;
            }
            m
        };
        match shifted.cholesky(UPLO::Lower) {
            Ok(l) => {
                let max_pivot = l.diag().iter().copied().fold(0.0f64, f64::max);
                let min_pivot = l.diag().iter().copied().fold(f64::INFINITY, f64::min);
                if min_pivot > pivot_floor * max_pivot {
                    return Ok(CholeskyFactor { l, jitter });
                }
                last_failure = format!(
                    "pivot {min_pivot:.3e} below the rank threshold of largest pivot {max_pivot:.3e}"
                );
            }
            Err(e) => last_failure = e.to_string(),
        }
        jitter = if jitter == 0.0 {
            base
        } else {
            jitter * JITTER_GROWTH
        };
    }
    Err(Error::Conditioning(format!(
        "matrix is not positive definite even with jitter {:.3e}: {last_failure}",
        jitter / JITTER_GROWTH
    )))
}

/// Flips each column so its largest-magnitude entry is positive, ties
/// resolved toward the lowest row index.
pub fn canonicalize_column_signs(w: &mut Array2<f64>) {
    for mut col in w.axis_iter_mut(Axis(1)) {
        let mut lead = 0usize;
        let mut lead_abs = 0.0f64;
        for (i, &v) in col.iter().enumerate() {
            let a = v.abs();
            if a > lead_abs {
                lead_abs = a;
                lead = i;
            }
        }
        if col[lead] < 0.0 {
            col.mapv_inplace(|v| -v);
        }
    }
}

/// The `k` leading eigenpairs of the pencil `(g, h)`.
///
/// `g` and `h` may carry round-off asymmetry up to `1e-8` relative; they
/// are symmetrized internally. `h` must be positive definite up to the
/// jitter policy of [`cholesky_reduce`].
pub fn solve_definite_geig(g: &Array2<f64>, h: &Array2<f64>, k: usize) -> Result<EigResult> {
    let dim = check_square(g, "pencil numerator")?;
    let hdim = check_square(h, "pencil denominator")?;
    if dim != hdim {
        return Err(Error::DimensionMismatch(format!(
            "pencil blocks disagree: {dim} vs {hdim}"
        )));
    }
    if k == 0 || k > dim {
        return Err(Error::InvalidParam(format!(
            "requested {k} eigenpairs from a dimension-{dim} pencil"
        )));
    }
    let g_sym = symmetrize_checked(g, "pencil numerator")?;
    let h_sym = symmetrize_checked(h, "pencil denominator")?;

    let factor = cholesky_reduce(&h_sym)?;
    let lower = &factor.l;

    // C = L^-1 G L^-T, formed by two triangular solves.
    let y = lower
        .solve_triangular(UPLO::Lower, Diag::NonUnit, &g_sym)
        .map_err(|e| Error::Conditioning(format!("triangular solve failed: {e}")))?;
    let z = lower
        .solve_triangular(UPLO::Lower, Diag::NonUnit, &y.t().to_owned())
        .map_err(|e| Error::Conditioning(format!("triangular solve failed: {e}")))?;
    let mut reduced = z.t().to_owned();
    crate::stats::symmetrize_inplace(&mut reduced);

    let (vals, vecs) = reduced
        .eigh(UPLO::Lower)
        .map_err(|e| Error::Conditioning(format!("symmetric eigensolve failed: {e}")))?;

    // eigh returns ascending order; take the trailing k, largest first
    let mut values = Vec::with_capacity(k);
    let mut selected = Array2::zeros((dim, k));
    for (out_col, idx) in ((dim - k)..dim).rev().enumerate() {
        values.push(vals[idx]);
        selected
            .column_mut(out_col)
            .assign(&vecs.slice(s![.., idx]));
    }

    // back-transform: solve L' W = V
    let upper = lower.t().to_owned();
    let mut vectors = upper
        .solve_triangular(UPLO::Upper, Diag::NonUnit, &selected)
        .map_err(|e| Error::Conditioning(format!("back-transform failed: {e}")))?;
    canonicalize_column_signs(&mut vectors);

    Ok(EigResult {
        values,
        vectors,
        jitter: factor.jitter,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use jgsa_oracles as oracle;
    use ndarray::array;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn random_spd(rng: &mut ChaCha8Rng, n: usize, ridge: f64) -> Array2<f64> {
        let m = Array2::from_shape_fn((n, n), |_| rng.random_range(-1.0..1.0));
        let mut spd = m.t().dot(&m);
        for i in 0..n {
            spd[(i, i)] += ridge;
        }
        spd
    }

    fn random_sym(rng: &mut ChaCha8Rng, n: usize) -> Array2<f64> {
        let m = Array2::from_shape_fn((n, n), |_| rng.random_range(-1.0..1.0));
        let mut s = m.clone();
        s += &m.t();
        s
    }

    #[test]
    fn identity_denominator_reduces_to_standard_problem() {
        let g = array![[2.0, 0.0], [0.0, 1.0]];
        let h = Array2::eye(2);
        let r = solve_definite_geig(&g, &h, 2).unwrap();
        assert!((r.values[0] - 2.0).abs() < 1e-12);
        assert!((r.values[1] - 1.0).abs() < 1e-12);
        // canonical signs point the leading entries up
        assert!((r.vectors[(0, 0)] - 1.0).abs() < 1e-12);
        assert!((r.vectors[(1, 1)] - 1.0).abs() < 1e-12);
        assert_eq!(r.jitter, 0.0);
    }

    #[test]
    fn diagonal_pencil_hand_values() {
        let g = array![[2.0, 0.0], [0.0, 1.0]];
        let h = array![[1.0, 0.0], [0.0, 4.0]];
        let r = solve_definite_geig(&g, &h, 2).unwrap();
        assert!((r.values[0] - 2.0).abs() < 1e-12);
        assert!((r.values[1] - 0.25).abs() < 1e-12);
        assert!((r.vectors[(0, 0)] - 1.0).abs() < 1e-12);
        assert!((r.vectors[(1, 0)]).abs() < 1e-12);
        assert!((r.vectors[(0, 1)]).abs() < 1e-12);
        assert!((r.vectors[(1, 1)] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn random_pencil_matches_oracle_and_residuals_hold() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 12;
        let g = random_spd(&mut rng, n, 0.3);
        let h = random_spd(&mut rng, n, 0.5);
        let r = solve_definite_geig(&g, &h, n).unwrap();

        let want = oracle::pencil_eigenvalues(&g, &h);
        let scale = want[0].abs().max(1.0);
        for (a, b) in r.values.iter().zip(want.iter()) {
            assert!((a - b).abs() <= 1e-8 * scale, "{a} vs {b}");
        }

        let g_norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
        let h_norm = h.iter().map(|v| v * v).sum::<f64>().sqrt();
        for (idx, &lam) in r.values.iter().enumerate() {
            let w = r.vectors.column(idx).to_owned();
            let resid = &g.dot(&w) - &h.dot(&w).mapv(|v| lam * v);
            let norm = resid.iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!(norm <= 1e-8 * (g_norm + lam.abs() * h_norm));
        }
    }

    #[test]
    fn vectors_are_h_orthonormal() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let g = random_sym(&mut rng, 9);
        let h = random_spd(&mut rng, 9, 0.4);
        let r = solve_definite_geig(&g, &h, 4).unwrap();
        let gram = r.vectors.t().dot(&h).dot(&r.vectors);
        let mut err = 0.0f64;
        for i in 0..4 {
            for j in 0..4 {
                let want = if i == j { 1.0 } else { 0.0 };
                err += (gram[(i, j)] - want).powi(2);
            }
        }
        assert!(err.sqrt() <= 1e-8);
    }

    #[test]
    fn eigenvalues_are_congruence_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 8;
        let g = random_sym(&mut rng, n);
        let h = random_spd(&mut rng, n, 0.6);
        // random invertible transform (diagonally dominated to stay well
        // conditioned)
        let mut p = Array2::from_shape_fn((n, n), |_| rng.random_range(-0.3..0.3));
        for i in 0..n {
            p[(i, i)] += 1.5;
        }
        let gp = p.t().dot(&g).dot(&p);
        let hp = p.t().dot(&h).dot(&p);
        let a = solve_definite_geig(&g, &h, n).unwrap();
        let b = solve_definite_geig(&gp, &hp, n).unwrap();
        let scale = a.values[0].abs().max(1.0);
        for (x, y) in a.values.iter().zip(b.values.iter()) {
            assert!((x - y).abs() <= 1e-8 * scale);
        }
    }

    #[test]
    fn shifting_numerator_by_denominator_shifts_values() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let n = 10;
        let g = random_sym(&mut rng, n);
        let h = random_spd(&mut rng, n, 0.5);
        let shifted = &g + &h.mapv(|v| 3.0 * v);
        let a = solve_definite_geig(&g, &h, n).unwrap();
        let b = solve_definite_geig(&shifted, &h, n).unwrap();
        for (x, y) in a.values.iter().zip(b.values.iter()) {
            assert!((x + 3.0 - y).abs() <= 1e-8 * x.abs().max(1.0));
        }
    }

    #[test]
    fn cholesky_of_identity_needs_no_jitter() {
        let h: Array2<f64> = Array2::eye(3);
        let f = cholesky_reduce(&h).unwrap();
        assert_eq!(f.jitter, 0.0);
        for i in 0..3 {
            assert!((f.l[(i, i)] - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn cholesky_hand_factor() {
        let h = array![[4.0, 2.0], [2.0, 5.0]];
        let f = cholesky_reduce(&h).unwrap();
        let want = array![[2.0, 0.0], [1.0, 2.0]];
        for (a, b) in f.l.iter().zip(want.iter()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn cholesky_of_zero_matrix_succeeds_via_jitter() {
        let h: Array2<f64> = Array2::zeros((2, 2));
        let f = cholesky_reduce(&h).unwrap();
        assert!(f.jitter > 0.0, "zero matrix requires a reported jitter");
        let product = f.l.dot(&f.l.t());
        for i in 0..2 {
            assert!((product[(i, i)] - f.jitter).abs() <= 1e-18);
        }
    }

    #[test]
    fn rejects_bad_requests() {
        let g = Array2::eye(3);
        let h = Array2::eye(3);
        assert!(solve_definite_geig(&g, &h, 0).is_err());
        assert!(solve_definite_geig(&g, &h, 4).is_err());
        let asym = array![[1.0, 2.0], [0.0, 1.0]];
        assert!(solve_definite_geig(&asym, &Array2::eye(2), 1).is_err());
        let rect: Array2<f64> = Array2::zeros((2, 3));
        assert!(solve_definite_geig(&rect, &Array2::eye(2), 1).is_err());
    }
}
