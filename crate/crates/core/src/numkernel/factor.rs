use super::eig::hermitian_eig;
use super::matrix::{CMatrix, HermMatrix, C64, ONE, ZERO};
use crate::error::{Error, Result};

/// Default relative rank threshold (fraction of the largest eigenvalue).
pub const DEFAULT_RANK_TOL: f64 = 1e-9;

/// `B = G* G` where the columns of the `r x n` matrix `G` are the vectors
/// `b_alpha`.
#[derive(Clone, Debug)]
pub struct GramFactor {
    pub vectors: CMatrix,
    /// Eigenvalues of `B` that were kept, descending.
    pub kept: Vec<f64>,
    /// Largest discarded eigenvalue magnitude (0 if none).
    pub discarded: f64,
}

impl GramFactor {
    pub fn rank(&self) -> usize {
        self.vectors.rows()
    }

    pub fn column(&self, k: usize) -> Vec<C64> {
        self.vectors.column(k)
    }
}

/// Factor a PSD matrix through its eigendecomposition, keeping eigenvalues
/// above `rank_tol * lambda_max`.
pub fn gram_factor(b: &HermMatrix, rank_tol: f64) -> Result<GramFactor> {
    let n = b.n();
    let eig = hermitian_eig(b)?;
    let lmax = eig.max().max(0.0);
    let threshold = rank_tol * lmax;
    if eig.min() < -threshold && eig.min() < 0.0 {
        return Err(Error::NotPsd {
            min_eigenvalue: eig.min(),
            threshold,
        });
    }
    let keep: Vec<usize> = (0..n)
        .rev()
        .filter(|&k| lmax > 0.0 && eig.values[k] > threshold)
        .collect();
    let discarded = (0..n)
        .filter(|k| !keep.contains(k))
        .map(|k| eig.values[k].abs())
        .fold(0.0, f64::max);
    let mut g = CMatrix::zeros(keep.len(), n);
    for (row, &k) in keep.iter().enumerate() {
        let s = eig.values[k].sqrt();
        for j in 0..n {
            g[(row, j)] = eig.vectors[(j, k)].conj() * s;
        }
    }
    Ok(GramFactor {
        vectors: g,
        kept: keep.iter().map(|&k| eig.values[k]).collect(),
        discarded,
    })
}

/// Minimum-norm least-squares solution of `G X = Y` through the
/// eigendecomposition of `G* G`, discarding eigenvalues below
/// `rank_tol * lambda_max`.
pub fn pinv_apply(g: &CMatrix, y: &CMatrix, rank_tol: f64) -> Result<CMatrix> {
    assert_eq!(g.rows(), y.rows(), "pinv_apply: row mismatch");
    let gram = HermMatrix::new(g.adjoint_mul(g));
    let eig = hermitian_eig(&gram)?;
    let lmax = eig.max().max(0.0);
    let rhs = g.adjoint_mul(y);
    let n = g.cols();
    let mut out = CMatrix::zeros(n, y.cols());
    if lmax == 0.0 {
        return Ok(out);
    }
    let v = &eig.vectors;
    let coeffs = v.adjoint_mul(&rhs);
    for k in 0..n {
        let l = eig.values[k];
        if l <= rank_tol * lmax {
            continue;
        }
        for c in 0..y.cols() {
            let w = coeffs[(k, c)] / l;
            for i in 0..n {
                out[(i, c)] += v[(i, k)] * w;
            }
        }
    }
    Ok(out)
}

/// Solve `X G = Y` (unknown on the left) in the least-squares sense.
pub fn pinv_apply_right(g: &CMatrix, y: &CMatrix, rank_tol: f64) -> Result<CMatrix> {
    Ok(pinv_apply(&g.adjoint(), &y.adjoint(), rank_tol)?.adjoint())
}

/// LU factorization with partial pivoting, returning the solution of
/// `A X = B` and a pivot-ratio condition estimate.
pub fn lu_solve(a: &CMatrix, b: &CMatrix) -> Result<(CMatrix, f64)> {
    let n = a.rows();
    if !a.is_square() || b.rows() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: b.rows(),
        });
    }
    let mut lu = a.clone();
    let mut x = b.clone();
    let m = b.cols();
    let mut max_pivot: f64 = 0.0;
    let mut min_pivot = f64::INFINITY;
    for k in 0..n {
        let (piv, pmag) = (k..n)
            .map(|i| (i, lu[(i, k)].norm()))
            .fold((k, -1.0), |acc, v| if v.1 > acc.1 { v } else { acc });
        if pmag == 0.0 {
            return Err(Error::SingularState {
                condition: f64::INFINITY,
            });
        }
        max_pivot = max_pivot.max(pmag);
        min_pivot = min_pivot.min(pmag);
        if piv != k {
            for j in 0..n {
                let t = lu[(k, j)];
                lu[(k, j)] = lu[(piv, j)];
                lu[(piv, j)] = t;
            }
            for j in 0..m {
                let t = x[(k, j)];
                x[(k, j)] = x[(piv, j)];
                x[(piv, j)] = t;
            }
        }
        let inv = ONE / lu[(k, k)];
        for i in (k + 1)..n {
            let f = lu[(i, k)] * inv;
            if f == ZERO {
                continue;
            }
            lu[(i, k)] = f;
            for j in (k + 1)..n {
                let t = lu[(k, j)];
                lu[(i, j)] -= f * t;
            }
            for j in 0..m {
                let t = x[(k, j)];
                x[(i, j)] -= f * t;
            }
        }
    }
    for k in (0..n).rev() {
        for j in 0..m {
            let mut s = x[(k, j)];
            for i in (k + 1)..n {
                s -= lu[(k, i)] * x[(i, j)];
            }
            x[(k, j)] = s / lu[(k, k)];
        }
    }
    let cond = if n == 0 { 1.0 } else { max_pivot / min_pivot };
    Ok((x, cond))
}

/// Unitary polar factor `U (U*U)^{-1/2}`.
pub fn nearest_unitary(u: &CMatrix) -> Result<CMatrix> {
    let gram = HermMatrix::new(u.adjoint_mul(u));
    let eig = hermitian_eig(&gram)?;
    if eig.min() <= 1e-12 * eig.max().max(1.0) {
        return Err(Error::InvalidArgument(
            "matrix is numerically singular; no polar factor".into(),
        ));
    }
    let inv_sqrt = eig.reassemble(|l| 1.0 / l.sqrt());
    Ok(u.matmul(inv_sqrt.as_matrix()))
}

/// Orthonormal basis of the orthogonal complement of the span of the
/// (orthonormal) columns of `q`, built by pivoted Gram-Schmidt over the
/// standard basis. Ties are broken by index so the result is reproducible.
pub fn orthonormal_complement(q: &CMatrix) -> CMatrix {
    let m = q.rows();
    let k = q.cols();
    let mut basis: Vec<Vec<C64>> = (0..k).map(|j| q.column(j)).collect();
    let mut out: Vec<Vec<C64>> = Vec::with_capacity(m.saturating_sub(k));
    let mut candidates: Vec<usize> = (0..m).collect();
    while out.len() < m.saturating_sub(k) {
        let mut best: Option<(usize, Vec<C64>, f64)> = None;
        for (pos, &e) in candidates.iter().enumerate() {
            let mut v = vec![ZERO; m];
            v[e] = ONE;
            let v = orthogonalize(v, &basis);
            let nv = vec_norm(&v);
            if best.as_ref().is_none_or(|b| nv > b.2 + 1e-12) {
                best = Some((pos, v, nv));
            }
        }
        let Some((pos, v, nv)) = best else { break };
        if nv <= 1e-14 {
            break;
        }
        candidates.remove(pos);
        let v = orthogonalize(v, &basis);
        let nv2 = vec_norm(&v);
        let u: Vec<C64> = v.into_iter().map(|z| z / nv2).collect();
        basis.push(u.clone());
        out.push(u);
    }
    let mut c = CMatrix::zeros(m, out.len());
    for (j, v) in out.iter().enumerate() {
        c.set_column(j, v);
    }
    c
}

fn orthogonalize(mut v: Vec<C64>, basis: &[Vec<C64>]) -> Vec<C64> {
    for _ in 0..2 {
        for b in basis {
            let proj: C64 = b.iter().zip(&v).map(|(x, y)| x.conj() * y).sum();
            for (vi, bi) in v.iter_mut().zip(b) {
                *vi -= proj * bi;
            }
        }
    }
    v
}

pub fn vec_norm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}
