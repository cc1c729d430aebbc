//! Brute-force reference computations backing the jgsa test suites.
//!
//! Everything here favors literal transcription of the defining formulas
//! over efficiency, and stays independent of the library's computational
//! paths: matrix products are naive triple loops (no BLAS), scatter and
//! divergence matrices are built by sandwiching dense centering or
//! coefficient matrices, and eigenvalues come from a hand-rolled cyclic
//! Jacobi solver rather than LAPACK.

use ndarray::{Array1, Array2, ArrayView2, Axis};

/// Naive matrix product.
pub fn matmul(a: ArrayView2<f64>, b: ArrayView2<f64>) -> Array2<f64> {
    assert_eq!(a.ncols(), b.nrows());
    let (m, inner) = (a.nrows(), a.ncols());
    let p = b.ncols();
    let mut out = Array2::zeros((m, p));
    for i in 0..m {
        for j in 0..p {
            let mut acc = 0.0;
            for t in 0..inner {
                acc += a[(i, t)] * b[(t, j)];
            }
            out[(i, j)] = acc;
        }
    }
    out
}

fn matvec(a: &Array2<f64>, x: &Array1<f64>) -> Array1<f64> {
    assert_eq!(a.ncols(), x.len());
    let mut out = Array1::zeros(a.nrows());
    for i in 0..a.nrows() {
        let mut acc = 0.0;
        for j in 0..a.ncols() {
            acc += a[(i, j)] * x[j];
        }
        out[i] = acc;
    }
    out
}

/// Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
///
/// Returns `(values, vectors)` with `vectors` column-aligned to `values`;
/// values are unordered. Accuracy is on the order of machine epsilon times
/// the Frobenius norm, which the small test matrices easily tolerate.
pub fn jacobi_eigh(a: &Array2<f64>) -> (Vec<f64>, Array2<f64>) {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "jacobi_eigh needs a square matrix");
    let mut m = a.clone();
    let mut v: Array2<f64> = Array2::eye(n);
    let total: f64 = a.iter().map(|x| x * x).sum();
    for _sweep in 0..200 {
        let mut off = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                off += m[(i, j)] * m[(i, j)];
            }
        }
        if off <= 1e-30 * total.max(f64::MIN_POSITIVE) {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (m[(q, q)] - m[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = c * mkp - s * mkq;
                    m[(k, q)] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = c * mpk - s * mqk;
                    m[(q, k)] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    let values: Vec<f64> = (0..n).map(|i| m[(i, i)]).collect();
    (values, v)
}

/// Eigenvalues (descending) of the pencil `g w = lambda h w` for symmetric
/// `g` and symmetric positive-definite `h`, via the spectral inverse square
/// root of `h`. This route shares nothing with a Cholesky-based solver.
pub fn pencil_eigenvalues(g: &Array2<f64>, h: &Array2<f64>) -> Vec<f64> {
    let n = g.nrows();
    let (hv, hq) = jacobi_eigh(h);
    let mut h_inv_sqrt: Array2<f64> = Array2::zeros((n, n));
    for (idx, &lam) in hv.iter().enumerate() {
        assert!(
            lam > 0.0,
            "pencil oracle needs a positive-definite second matrix, found eigenvalue {lam}"
        );
        let w = 1.0 / lam.sqrt();
        let q = hq.column(idx);
        for i in 0..n {
            for j in 0..n {
                h_inv_sqrt[(i, j)] += w * q[i] * q[j];
            }
        }
    }
    let mut s = matmul(matmul(h_inv_sqrt.view(), g.view()).view(), h_inv_sqrt.view());
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (s[(i, j)] + s[(j, i)]);
            s[(i, j)] = v;
            s[(j, i)] = v;
        }
    }
    let (mut vals, _) = jacobi_eigh(&s);
    vals.sort_by(|a, b| b.partial_cmp(a).expect("finite eigenvalues"));
    vals
}

fn column_mean(x: ArrayView2<f64>) -> Array1<f64> {
    let n = x.ncols() as f64;
    let mut mean = Array1::zeros(x.nrows());
    for col in x.axis_iter(Axis(1)) {
        for (i, &v) in col.iter().enumerate() {
            mean[i] += v;
        }
    }
    mean.mapv_inplace(|v| v / n);
    mean
}

fn indices_of(labels: &[u32], class: u32) -> Vec<usize> {
    labels
        .iter()
        .enumerate()
        .filter_map(|(j, &y)| (y == class).then_some(j))
        .collect()
}

/// Sum over samples of (x_j - mean)(x_j - mean)', written as the literal
/// sum of outer products.
pub fn scatter_about_mean(x: ArrayView2<f64>) -> Array2<f64> {
    let d = x.nrows();
    let mean = column_mean(x);
    let mut s = Array2::zeros((d, d));
    for col in x.axis_iter(Axis(1)) {
        for i in 0..d {
            for j in 0..d {
                s[(i, j)] += (col[i] - mean[i]) * (col[j] - mean[j]);
            }
        }
    }
    s
}

/// Between-class and within-class scatter, with the within part computed
/// by sandwiching an explicit dense centering matrix per class.
pub fn class_scatters_direct(x: ArrayView2<f64>, labels: &[u32]) -> (Array2<f64>, Array2<f64>) {
    assert_eq!(x.ncols(), labels.len());
    let d = x.nrows();
    let c_max = labels.iter().copied().max().unwrap_or(0);
    let global_mean = column_mean(x);
    let mut s_b = Array2::zeros((d, d));
    let mut s_w = Array2::zeros((d, d));
    for class in 1..=c_max {
        let idx = indices_of(labels, class);
        if idx.is_empty() {
            continue;
        }
        let nc = idx.len();
        let xc = x.select(Axis(1), &idx);
        let centering = Array2::eye(nc) - Array2::from_elem((nc, nc), 1.0 / nc as f64);
        let piece = matmul(matmul(xc.view(), centering.view()).view(), xc.t());
        s_w += &piece;
        let mc = column_mean(xc.view());
        for i in 0..d {
            for j in 0..d {
                s_b[(i, j)] += nc as f64 * (mc[i] - global_mean[i]) * (mc[j] - global_mean[j]);
            }
        }
    }
    (s_b, s_w)
}

/// The four divergence blocks, built by sandwiching explicit dense
/// coefficient matrices: marginal entries 1/n_s^2, 1/n_t^2, -1/(n_s n_t),
/// plus per-class entries 1/(n^c)^2 and -1/(n_s^c n_t^c) for classes
/// populated on both sides.
pub fn mmd_block_matrices_direct(
    xs: ArrayView2<f64>,
    labels: &[u32],
    xt: ArrayView2<f64>,
    pseudo: Option<&[u32]>,
) -> (Array2<f64>, Array2<f64>, Array2<f64>, Array2<f64>) {
    let n_s = xs.ncols();
    let n_t = xt.ncols();
    let mut l_s = Array2::from_elem((n_s, n_s), 1.0 / (n_s * n_s) as f64);
    let mut l_t = Array2::from_elem((n_t, n_t), 1.0 / (n_t * n_t) as f64);
    let mut l_st = Array2::from_elem((n_s, n_t), -1.0 / (n_s * n_t) as f64);
    let mut l_ts = Array2::from_elem((n_t, n_s), -1.0 / (n_s * n_t) as f64);
    if let Some(p) = pseudo {
        let c_max = labels.iter().copied().max().unwrap_or(0);
        for class in 1..=c_max {
            let si = indices_of(labels, class);
            let ti = indices_of(p, class);
            if si.is_empty() || ti.is_empty() {
                continue;
            }
            let nsc = si.len() as f64;
            let ntc = ti.len() as f64;
            for &i in &si {
                for &j in &si {
                    l_s[(i, j)] += 1.0 / (nsc * nsc);
                }
            }
            for &i in &ti {
                for &j in &ti {
                    l_t[(i, j)] += 1.0 / (ntc * ntc);
                }
            }
            for &i in &si {
                for &j in &ti {
                    l_st[(i, j)] -= 1.0 / (nsc * ntc);
                }
            }
            for &i in &ti {
                for &j in &si {
                    l_ts[(i, j)] -= 1.0 / (nsc * ntc);
                }
            }
        }
    }
    (
        matmul(matmul(xs, l_s.view()).view(), xs.t()),
        matmul(matmul(xt, l_t.view()).view(), xt.t()),
        matmul(matmul(xs, l_st.view()).view(), xt.t()),
        matmul(matmul(xt, l_ts.view()).view(), xs.t()),
    )
}

/// Squared distance between domain means plus, when pseudo labels are
/// given, the squared distances between class means populated on both
/// sides — evaluated literally on already-projected columns.
pub fn embedding_mmd_direct(
    zs: ArrayView2<f64>,
    labels: &[u32],
    zt: ArrayView2<f64>,
    pseudo: Option<&[u32]>,
) -> f64 {
    let ms = column_mean(zs);
    let mt = column_mean(zt);
    let mut total: f64 = ms.iter().zip(mt.iter()).map(|(a, b)| (a - b) * (a - b)).sum();
    if let Some(p) = pseudo {
        let c_max = labels.iter().copied().max().unwrap_or(0);
        for class in 1..=c_max {
            let si = indices_of(labels, class);
            let ti = indices_of(p, class);
            if si.is_empty() || ti.is_empty() {
                continue;
            }
            let mcs = column_mean(zs.select(Axis(1), &si).view());
            let mct = column_mean(zt.select(Axis(1), &ti).view());
            total += mcs
                .iter()
                .zip(mct.iter())
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>();
        }
    }
    total
}

/// Kernelized target scatter by the literal four-term centering of the
/// target Gram block against dense all-ones/n matrices.
pub fn target_gram_centering_direct(
    gram_t: ArrayView2<f64>,
    gram_full: ArrayView2<f64>,
) -> Array2<f64> {
    let n = gram_full.nrows();
    let n_t = gram_t.ncols();
    let ones_nn = Array2::from_elem((n, n), 1.0 / n as f64);
    let ones_nt = Array2::from_elem((n, n_t), 1.0 / n as f64);
    let centered = &gram_t.to_owned() - &matmul(ones_nn.view(), gram_t)
        - &matmul(gram_full, ones_nt.view())
        + &matmul(matmul(ones_nn.view(), gram_full).view(), ones_nt.view());
    matmul(centered.view(), centered.t())
}

/// Orthonormalizes the columns of `w` in the inner product defined by the
/// symmetric positive-definite matrix `h` (two passes of Gram-Schmidt).
/// Returns `None` when the columns are numerically dependent.
pub fn h_orthonormalize(w: &Array2<f64>, h: &Array2<f64>) -> Option<Array2<f64>> {
    let mut q = w.clone();
    let k = w.ncols();
    for _pass in 0..2 {
        for j in 0..k {
            for i in 0..j {
                let qi = q.column(i).to_owned();
                let h_qi = matvec(h, &qi);
                let proj: f64 = q.column(j).iter().zip(h_qi.iter()).map(|(a, b)| a * b).sum();
                let updated = &q.column(j) - &qi.mapv(|v| v * proj);
                q.column_mut(j).assign(&updated);
            }
            let qj = q.column(j).to_owned();
            let h_qj = matvec(h, &qj);
            let norm_sq: f64 = qj.iter().zip(h_qj.iter()).map(|(a, b)| a * b).sum();
            if !(norm_sq > 1e-24) {
                return None;
            }
            let inv = 1.0 / norm_sq.sqrt();
            q.column_mut(j).mapv_inplace(|v| v * inv);
        }
    }
    Some(q)
}
