//! Cyclic Jacobi eigensolver for complex Hermitian matrices and the
//! spectral helpers built on it.

use super::matrix::{CMatrix, HermMatrix, C64, ZERO};
use crate::error::{Error, Result};

/// Stopping rule for the Jacobi sweeps.
#[derive(Clone, Copy, Debug)]
pub struct JacobiOptions {
    pub max_sweeps: usize,
    /// Stop once the off-diagonal Frobenius mass drops below
    /// `off_tol * |H|_F`.
    pub off_tol: f64,
}

impl Default for JacobiOptions {
    fn default() -> Self {
        Self {
            max_sweeps: 100,
            off_tol: 1e-14,
        }
    }
}

/// `H = V diag(values) V*` with `values` ascending.
#[derive(Clone, Debug)]
pub struct EigenDecomposition {
    pub values: Vec<f64>,
    pub vectors: CMatrix,
}

impl EigenDecomposition {
    pub fn min(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }

    pub fn max(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0)
    }

    /// Rebuild `V f(Λ) V*`.
    pub fn reassemble(&self, f: impl Fn(f64) -> f64) -> HermMatrix {
        let n = self.values.len();
        let w: Vec<f64> = self.values.iter().map(|&l| f(l)).collect();
        let mut out = CMatrix::zeros(n, n);
        for (k, &wk) in w.iter().enumerate() {
            if wk == 0.0 {
                continue;
            }
            for i in 0..n {
                let vik = self.vectors[(i, k)] * wk;
                if vik == ZERO {
                    continue;
                }
                for j in 0..n {
                    out[(i, j)] += vik * self.vectors[(j, k)].conj();
                }
            }
        }
        HermMatrix::new(out)
    }
}

pub fn hermitian_eig(h: &HermMatrix) -> Result<EigenDecomposition> {
    hermitian_eig_with(h, None, JacobiOptions::default())
}

/// Jacobi started from `V0* H V0`; converges in one or two sweeps when
/// `V0` nearly diagonalizes `H`.
pub fn hermitian_eig_warm(h: &HermMatrix, v0: &CMatrix) -> Result<EigenDecomposition> {
    hermitian_eig_with(h, Some(v0), JacobiOptions::default())
}

pub fn hermitian_eig_with(
    h: &HermMatrix,
    warm: Option<&CMatrix>,
    opts: JacobiOptions,
) -> Result<EigenDecomposition> {
    let n = h.n();
    let scale = h.frobenius_norm();
    let (mut a, mut v) = match warm {
        Some(v0) if v0.rows() == n && v0.cols() == n => {
            (v0.adjoint_mul(&h.as_matrix().matmul(v0)), v0.clone())
        }
        _ => (h.as_matrix().clone(), CMatrix::identity(n)),
    };
    if scale == 0.0 || n <= 1 {
        return Ok(finish(&a, v));
    }
    let threshold = opts.off_tol * scale;
    let mut sweeps = 0;
    loop {
        let off = off_diagonal_norm(&a);
        if off < threshold {
            break;
        }
        if sweeps >= opts.max_sweeps || !off.is_finite() {
            return Err(Error::NoConvergence {
                sweeps,
                off_norm: off,
                n,
            });
        }
        sweeps += 1;
        for p in 0..n {
            for q in (p + 1)..n {
                rotate(&mut a, &mut v, p, q);
            }
        }
    }
    Ok(finish(&a, v))
}

fn off_diagonal_norm(a: &CMatrix) -> f64 {
    let n = a.rows();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += a[(i, j)].norm_sqr();
            }
        }
    }
    s.sqrt()
}

#[inline]
fn rotate(a: &mut CMatrix, v: &mut CMatrix, p: usize, q: usize) {
    let n = a.rows();
    let b = a[(p, q)];
    let abs_b = b.norm();
    if abs_b == 0.0 || !abs_b.is_finite() {
        return;
    }
    let app = a[(p, p)].re;
    let aqq = a[(q, q)].re;
    // Rotation is negligible relative to the diagonal: zero it directly.
    if abs_b < f64::EPSILON * 1e-3 * (app.abs().min(aqq.abs())) {
        a[(p, q)] = ZERO;
        a[(q, p)] = ZERO;
        return;
    }
    let e = b / abs_b;
    let tau = (aqq - app) / (2.0 * abs_b);
    let t = if tau == 0.0 {
        1.0
    } else {
        tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt())
    };
    let c = 1.0 / (1.0 + t * t).sqrt();
    let s = t * c;
    // J = [[c, s e], [-s conj(e), c]] on the (p, q) plane.
    let jpq = e * s;
    let jqp = -e.conj() * s;
    let cc = C64::new(c, 0.0);

    for k in 0..n {
        let akp = a[(k, p)];
        let akq = a[(k, q)];
        a[(k, p)] = akp * cc + akq * jqp;
        a[(k, q)] = akp * jpq + akq * cc;
    }
    let jqp_c = jqp.conj();
    let jpq_c = jpq.conj();
    for k in 0..n {
        let apk = a[(p, k)];
        let aqk = a[(q, k)];
        a[(p, k)] = cc * apk + jqp_c * aqk;
        a[(q, k)] = jpq_c * apk + cc * aqk;
    }
    a[(p, p)] = C64::new(app - t * abs_b, 0.0);
    a[(q, q)] = C64::new(aqq + t * abs_b, 0.0);
    a[(p, q)] = ZERO;
    a[(q, p)] = ZERO;

    for k in 0..n {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = vkp * cc + vkq * jqp;
        v[(k, q)] = vkp * jpq + vkq * cc;
    }
}

fn finish(a: &CMatrix, v: CMatrix) -> EigenDecomposition {
    let n = a.rows();
    let mut order: Vec<usize> = (0..n).collect();
    let diag: Vec<f64> = (0..n).map(|i| a[(i, i)].re).collect();
    order.sort_by(|&i, &j| diag[i].total_cmp(&diag[j]));
    let values = order.iter().map(|&i| diag[i]).collect();
    let vectors = v.select_columns(&order);
    EigenDecomposition { values, vectors }
}

/// Frobenius-nearest PSD matrix: clamp negative eigenvalues to zero.
pub fn psd_project(h: &HermMatrix) -> Result<HermMatrix> {
    Ok(psd_project_warm(h, None)?.0)
}

/// PSD projection that also returns the eigenvectors used, for warm
/// starting the next projection of a nearby matrix.
pub fn psd_project_warm(h: &HermMatrix, warm: Option<&CMatrix>) -> Result<(HermMatrix, CMatrix)> {
    let eig = match warm {
        Some(v0) => hermitian_eig_warm(h, v0)?,
        None => hermitian_eig(h)?,
    };
    if eig.min() >= 0.0 {
        return Ok((h.clone(), eig.vectors));
    }
    let projected = eig.reassemble(|l| l.max(0.0));
    Ok((projected, eig.vectors))
}

/// Largest singular value.
pub fn operator_norm(m: &CMatrix) -> f64 {
    if m.rows() == 0 || m.cols() == 0 {
        return 0.0;
    }
    let gram = if m.rows() >= m.cols() {
        m.adjoint_mul(m)
    } else {
        m.matmul(&m.adjoint())
    };
    let gram = HermMatrix::new(gram);
    match hermitian_eig(&gram) {
        Ok(eig) => eig.max().max(0.0).sqrt(),
        // Power iteration fallback; Jacobi on a Gram matrix should not fail.
        Err(_) => power_norm(&gram).sqrt(),
    }
}

fn power_norm(h: &HermMatrix) -> f64 {
    let n = h.n();
    let mut x: Vec<C64> = (0..n)
        .map(|i| C64::new(1.0 + i as f64 * 0.1, 0.0))
        .collect();
    let mut lambda = 0.0;
    for _ in 0..500 {
        let y = h.as_matrix().mul_vec(&x);
        let norm = y.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return 0.0;
        }
        lambda = norm;
        x = y.into_iter().map(|z| z / norm).collect();
    }
    lambda
}

/// Smallest eigenvalue, or an error if Jacobi fails.
pub fn min_eigenvalue(h: &HermMatrix) -> Result<f64> {
    Ok(hermitian_eig(h)?.min())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn herm(rows: &[&[(f64, f64)]]) -> HermMatrix {
        let r: Vec<Vec<C64>> = rows
            .iter()
            .map(|row| row.iter().map(|&(a, b)| C64::new(a, b)).collect())
            .collect();
        HermMatrix::new(CMatrix::from_rows(&r).unwrap())
    }

    #[test]
    fn diagonal_input() {
        let e = hermitian_eig(&HermMatrix::diag_real(&[3.0, 1.0])).unwrap();
        assert_eq!(e.values, vec![1.0, 3.0]);
    }

    #[test]
    fn swap_matrix() {
        let e = hermitian_eig(&herm(&[
            &[(0.0, 0.0), (1.0, 0.0)],
            &[(1.0, 0.0), (0.0, 0.0)],
        ]))
        .unwrap();
        assert!((e.values[0] + 1.0).abs() < 1e-15);
        assert!((e.values[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn complex_two_by_two() {
        // characteristic polynomial l^2 - 4 l + 3
        let h = herm(&[&[(2.0, 0.0), (0.0, 1.0)], &[(0.0, -1.0), (2.0, 0.0)]]);
        let e = hermitian_eig(&h).unwrap();
        assert!((e.values[0] - 1.0).abs() < 1e-14);
        assert!((e.values[1] - 3.0).abs() < 1e-14);
        let hv = h.as_matrix().matmul(&e.vectors);
        let vl = e.vectors.matmul(&CMatrix::diag_real(&e.values));
        assert!((&hv - &vl).frobenius_norm() < 1e-13);
    }

    #[test]
    fn warm_start_matches_cold() {
        let h = herm(&[
            &[(4.0, 0.0), (1.0, 0.5), (0.0, 0.2)],
            &[(1.0, -0.5), (3.0, 0.0), (0.3, 0.0)],
            &[(0.0, -0.2), (0.3, 0.0), (-1.0, 0.0)],
        ]);
        let cold = hermitian_eig(&h).unwrap();
        let mut perturbed = h.clone();
        perturbed.axpy(1e-3, &HermMatrix::identity(3));
        let warm = hermitian_eig_warm(&perturbed, &cold.vectors).unwrap();
        for (a, b) in cold.values.iter().zip(&warm.values) {
            assert!((a + 1e-3 - b).abs() < 1e-12);
        }
    }

    #[test]
    fn operator_norm_examples() {
        assert!(
            (operator_norm(&CMatrix::from_real(&[&[0.0, 1.0], &[0.0, 0.0]])) - 1.0).abs() < 1e-15
        );
        assert_eq!(operator_norm(&CMatrix::zeros(3, 2)), 0.0);
        let m = CMatrix::from_real(&[&[0.5, 0.5], &[0.0, 0.5]]);
        let expected = (std::f64::consts::PI / 5.0).cos();
        assert!((operator_norm(&m) - expected).abs() < 1e-12);
    }

    #[test]
    fn psd_projection_examples() {
        let p = psd_project(&HermMatrix::diag_real(&[2.0, -1.0])).unwrap();
        assert!((p.as_matrix() - &CMatrix::diag_real(&[2.0, 0.0])).max_abs() < 1e-15);

        let pd = herm(&[&[(2.0, 0.0), (0.0, 1.0)], &[(0.0, -1.0), (2.0, 0.0)]]);
        let same = psd_project(&pd).unwrap();
        assert!((same.as_matrix() - pd.as_matrix()).max_abs() < 1e-12);

        let swap = herm(&[&[(0.0, 0.0), (1.0, 0.0)], &[(1.0, 0.0), (0.0, 0.0)]]);
        let half = psd_project(&swap).unwrap();
        let expected = CMatrix::from_real(&[&[0.5, 0.5], &[0.5, 0.5]]);
        assert!((half.as_matrix() - &expected).max_abs() < 1e-14);
    }

    #[test]
    fn sweep_cap_reports_non_convergence() {
        let h = herm(&[
            &[(1.0, 0.0), (2.0, 0.0), (3.0, 0.0)],
            &[(2.0, 0.0), (5.0, 0.0), (1.0, 0.0)],
            &[(3.0, 0.0), (1.0, 0.0), (0.0, 0.0)],
        ]);
        let opts = JacobiOptions {
            max_sweeps: 0,
            off_tol: 1e-14,
        };
        assert!(matches!(
            hermitian_eig_with(&h, None, opts),
            Err(Error::NoConvergence { .. })
        ));
    }
}
