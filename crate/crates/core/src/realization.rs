//! Unitary colligations built from sum-of-squares certificates, with their
//! transfer functions `phi(z) = A + B Z (I - D Z)^{-1} C`.

use serde::{Deserialize, Serialize};

use crate::cfcert::SosDecomposition;
use crate::error::{Error, Result};
use crate::lattice::IndexLattice;
use crate::numkernel::{
    hermitian_eig, lu_solve, matrix_from_json, matrix_to_json, nearest_unitary,
    orthonormal_complement, CMatrix, HermMatrix, MatrixJson, C64, ONE, ZERO,
};
use crate::poly::Poly;

/// Condition estimate above which `transfer_eval` refuses to answer.
pub const MAX_STATE_CONDITION: f64 = 1e12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Orientation {
    Direct,
    Adjoint,
    Transpose,
}

/// `U = [[A, B], [C, D]]` on `C^{1+m}` with `m = sum(partition)`.
#[derive(Clone, Debug)]
pub struct Colligation {
    u: CMatrix,
    partition: Vec<usize>,
}

impl Colligation {
    pub fn new(u: CMatrix, partition: Vec<usize>) -> Result<Self> {
        if partition.is_empty() {
            return Err(Error::InvalidArgument(
                "partition must have d >= 1 blocks".into(),
            ));
        }
        let m: usize = partition.iter().sum();
        if u.rows() != m + 1 || u.cols() != m + 1 {
            return Err(Error::DimensionMismatch {
                expected: m + 1,
                got: u.rows(),
            });
        }
        Ok(Self { u, partition })
    }

    pub fn dim(&self) -> usize {
        self.partition.len()
    }

    pub fn state_dim(&self) -> usize {
        self.u.rows() - 1
    }

    pub fn partition(&self) -> &[usize] {
        &self.partition
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.u
    }

    pub fn a(&self) -> C64 {
        self.u[(0, 0)]
    }

    /// Row `B` as a vector.
    pub fn b(&self) -> Vec<C64> {
        self.u.row(0)[1..].to_vec()
    }

    /// Column `C` as a vector.
    pub fn c(&self) -> Vec<C64> {
        (1..self.u.rows()).map(|i| self.u[(i, 0)]).collect()
    }

    pub fn d_block(&self) -> CMatrix {
        let m = self.state_dim();
        CMatrix::from_fn(m, m, |i, j| self.u[(i + 1, j + 1)])
    }

    /// `max(|U*U - I|, |UU* - I|)` entrywise.
    pub fn unitarity_residual(&self) -> f64 {
        let n = self.u.rows();
        let id = CMatrix::identity(n);
        let l = (&self.u.adjoint_mul(&self.u) - &id).max_abs();
        let r = (&self.u.matmul(&self.u.adjoint()) - &id).max_abs();
        l.max(r)
    }

    /// Axis of each state coordinate.
    fn axes(&self) -> Vec<usize> {
        self.partition
            .iter()
            .enumerate()
            .flat_map(|(j, &r)| std::iter::repeat_n(j, r))
            .collect()
    }

    pub fn to_json(&self) -> ColligationFile {
        ColligationFile {
            partition: self.partition.clone(),
            u: matrix_to_json(&self.u),
        }
    }

    pub fn from_json(file: &ColligationFile) -> Result<Self> {
        let u = matrix_from_json(&file.u)?;
        Self::new(u, file.partition.clone()).map_err(|e| Error::Format(e.to_string()))
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ColligationFile {
    pub partition: Vec<usize>,
    #[serde(rename = "U")]
    pub u: MatrixJson,
}

/// Lurking isometry: match `L_a = (delta_a0; a^j_{a-e_j})` to
/// `R_a = (p_a; a^j_a)` and complete to a unitary.
pub fn build_colligation(
    p: &Poly,
    sos: &SosDecomposition,
    tol: f64,
) -> Result<(Colligation, Orientation)> {
    let lattice = &sos.lattice;
    let d = lattice.dim();
    if p.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: p.dim(),
        });
    }
    let q = p.coefficient_vector(lattice)?;
    let ranks = sos.ranks();
    let m: usize = ranks.iter().sum();
    let n = lattice.len();
    let offsets: Vec<usize> = ranks
        .iter()
        .scan(1usize, |acc, &r| {
            let o = *acc;
            *acc += r;
            Some(o)
        })
        .collect();
    let mut left = CMatrix::zeros(m + 1, n);
    let mut right = CMatrix::zeros(m + 1, n);
    for k in 0..n {
        if k == 0 {
            left[(0, 0)] = ONE;
        }
        right[(0, k)] = q[k];
        for j in 0..d {
            let g = &sos.factors[j];
            for r in 0..ranks[j] {
                right[(offsets[j] + r, k)] = g[(r, k)];
                if let Some(km) = lattice.down(j, k) {
                    left[(offsets[j] + r, k)] = g[(r, km)];
                }
            }
        }
    }
    let gram_l = left.adjoint_mul(&left);
    let gram_r = right.adjoint_mul(&right);
    let mismatch = (&gram_l - &gram_r).max_abs();
    if mismatch > tol {
        return Err(Error::GramMismatch {
            residual: mismatch,
            tol,
        });
    }
    let eig = hermitian_eig(&HermMatrix::new(&gram_l + &gram_r).scale(0.5))?;
    let lmax = eig.max().max(0.0);
    let keep: Vec<usize> = (0..n)
        .filter(|&k| eig.values[k] > 1e-10 * lmax.max(1e-300))
        .collect();
    let w = eig.vectors.select_columns(&keep);
    let inv_sqrt: Vec<f64> = keep.iter().map(|&k| 1.0 / eig.values[k].sqrt()).collect();
    let ql = left.matmul(&w).matmul(&CMatrix::diag_real(&inv_sqrt));
    let qr = right.matmul(&w).matmul(&CMatrix::diag_real(&inv_sqrt));
    let pl = orthonormal_complement(&ql);
    let pr = orthonormal_complement(&qr);
    let mut u = qr.matmul(&ql.adjoint());
    if pl.cols() > 0 {
        u = &u + &pr.matmul(&pl.adjoint());
    }
    let u = nearest_unitary(&u)?;

    let candidates = [
        (Orientation::Direct, u.clone()),
        (Orientation::Adjoint, u.adjoint()),
        (Orientation::Transpose, u.transpose()),
    ];
    let order = lattice.order();
    let match_tol = tol.max(1e-6);
    let mut best = f64::INFINITY;
    for (orientation, cand) in candidates {
        let col = Colligation::new(cand, ranks.clone())?;
        let phi = transfer_taylor(&col, order)?;
        let err = phi.max_coeff_diff(p);
        if err <= match_tol {
            return Ok((col, orientation));
        }
        best = best.min(err);
    }
    Err(Error::TaylorMismatch { mismatch: best })
}

/// Taylor coefficients of `phi` through total degree `order`.
pub fn transfer_taylor(col: &Colligation, order: usize) -> Result<Poly> {
    let d = col.dim();
    let lattice = IndexLattice::new(d, order)?;
    let m = col.state_dim();
    let axes = col.axes();
    let b = col.b();
    let dmat = col.d_block();
    let mut h: Vec<Vec<C64>> = Vec::with_capacity(lattice.len());
    let mut terms = Vec::with_capacity(lattice.len());
    for (k, alpha) in lattice.members().iter().enumerate() {
        if k == 0 {
            h.push(col.c());
            terms.push((alpha.clone(), col.a()));
            continue;
        }
        // z_j P_j applied to h_{alpha - e_j}, summed over j
        let mut zh = vec![ZERO; m];
        for j in 0..d {
            if let Some(km) = lattice.down(j, k) {
                for i in 0..m {
                    if axes[i] == j {
                        zh[i] += h[km][i];
                    }
                }
            }
        }
        let phi: C64 = b.iter().zip(&zh).map(|(x, y)| x * y).sum();
        terms.push((alpha.clone(), phi));
        h.push(dmat.mul_vec(&zh));
    }
    Poly::from_terms(d, terms)
}

/// State `h(z) = (I - D Z)^{-1} C` and value `phi(z)`.
pub fn transfer_state(col: &Colligation, z: &[C64]) -> Result<(C64, Vec<C64>)> {
    if z.len() != col.dim() {
        return Err(Error::DimensionMismatch {
            expected: col.dim(),
            got: z.len(),
        });
    }
    let m = col.state_dim();
    let axes = col.axes();
    if m == 0 {
        return Ok((col.a(), Vec::new()));
    }
    let dmat = col.d_block();
    let sys = CMatrix::from_fn(m, m, |i, j| {
        let id = if i == j { ONE } else { ZERO };
        id - dmat[(i, j)] * z[axes[j]]
    });
    let rhs = CMatrix::from_fn(m, 1, |i, _| col.c()[i]);
    let (sol, cond) = lu_solve(&sys, &rhs)?;
    if !(cond <= MAX_STATE_CONDITION) {
        return Err(Error::SingularState { condition: cond });
    }
    let h: Vec<C64> = (0..m).map(|i| sol[(i, 0)]).collect();
    let b = col.b();
    let mut phi = col.a();
    for i in 0..m {
        phi += b[i] * z[axes[i]] * h[i];
    }
    Ok((phi, h))
}

pub fn transfer_eval(col: &Colligation, z: &[C64]) -> Result<C64> {
    Ok(transfer_state(col, z)?.0)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AglerReport {
    /// `max |1 - conj(phi(w)) phi(z) - sum_j (1 - conj(w_j) z_j) K_j(z,w)|`
    pub identity_residual: f64,
    /// `min_j K_j(z, z)` over the sampled points.
    pub kernel_min: f64,
    /// `max |phi|` over sampled interior points.
    pub max_modulus: f64,
    /// `max ||phi| - 1|` at radius 0.999.
    pub torus_deviation: f64,
    pub samples: usize,
}

/// Deterministic points `r e^{i theta}` spread over the torus.
pub fn torus_samples(d: usize, radius: f64, count: usize) -> Vec<Vec<C64>> {
    let steps: Vec<f64> = (0..d)
        .map(|j| {
            let primes = [2.0f64, 3.0, 5.0, 7.0, 11.0, 13.0, 17.0, 19.0];
            primes[j % primes.len()].sqrt().fract()
        })
        .collect();
    (0..count)
        .map(|k| {
            steps
                .iter()
                .map(|s| {
                    let theta = 2.0 * std::f64::consts::PI * ((k as f64 + 0.5) * s).fract();
                    C64::from_polar(radius, theta)
                })
                .collect()
        })
        .collect()
}

fn kernels(col: &Colligation, hz: &[C64], hw: &[C64]) -> Vec<C64> {
    let axes = col.axes();
    let mut k = vec![ZERO; col.dim()];
    for i in 0..hz.len() {
        k[axes[i]] += hw[i].conj() * hz[i];
    }
    k
}

pub fn check_agler_identity(
    col: &Colligation,
    pairs: &[(Vec<C64>, Vec<C64>)],
) -> Result<AglerReport> {
    let mut residual: f64 = 0.0;
    let mut kernel_min = f64::INFINITY;
    let mut max_modulus: f64 = 0.0;
    for (z, w) in pairs {
        let (pz, hz) = transfer_state(col, z)?;
        let (pw, hw) = transfer_state(col, w)?;
        let k = kernels(col, &hz, &hw);
        let mut rhs = ZERO;
        for j in 0..col.dim() {
            rhs += (ONE - w[j].conj() * z[j]) * k[j];
        }
        let lhs = ONE - pw.conj() * pz;
        residual = residual.max((lhs - rhs).norm());
        for (pt, h) in [(&pz, &hz), (&pw, &hw)] {
            for kj in kernels(col, h, h) {
                kernel_min = kernel_min.min(kj.re);
            }
            max_modulus = max_modulus.max(pt.norm());
        }
    }
    let mut torus_deviation: f64 = 0.0;
    for z in torus_samples(col.dim(), 0.999, 64) {
        match transfer_eval(col, &z) {
            Ok(v) => torus_deviation = torus_deviation.max((v.norm() - 1.0).abs()),
            Err(_) => torus_deviation = f64::INFINITY,
        }
    }
    if kernel_min == f64::INFINITY {
        kernel_min = 0.0;
    }
    Ok(AglerReport {
        identity_residual: residual,
        kernel_min,
        max_modulus,
        torus_deviation,
        samples: pairs.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cfcert::{build_X, certificate_to_sos, Certificate};
    use crate::numkernel::HermMatrix;

    fn mobius(c: f64) -> Colligation {
        let s = (1.0 - c * c).sqrt();
        Colligation::new(CMatrix::from_real(&[&[c, s], &[s, -c]]), vec![1]).unwrap()
    }

    fn pairs() -> Vec<(Vec<C64>, Vec<C64>)> {
        (0..100)
            .map(|k| {
                let a = 0.9 * ((k as f64 * 0.37).sin()).abs();
                let b = 0.9 * ((k as f64 * 0.61).cos()).abs();
                (
                    vec![C64::from_polar(a, k as f64 * 1.3)],
                    vec![C64::from_polar(b, k as f64 * 2.1)],
                )
            })
            .collect()
    }

    #[test]
    fn shift_colligation() {
        let col =
            Colligation::new(CMatrix::from_real(&[&[0.0, 1.0], &[1.0, 0.0]]), vec![1]).unwrap();
        let phi = transfer_taylor(&col, 4).unwrap();
        assert!(phi.max_coeff_diff(&Poly::variable(1, 1)) < 1e-15);
        let v = transfer_eval(&col, &[C64::new(0.5, 0.0)]).unwrap();
        assert!((v - C64::new(0.5, 0.0)).norm() < 1e-15);
        let r = check_agler_identity(&col, &pairs()).unwrap();
        assert!(r.identity_residual < 1e-14);
    }

    #[test]
    fn mobius_colligation() {
        let c = 0.4;
        let col = mobius(c);
        assert!(col.unitarity_residual() < 1e-15);
        let phi = transfer_taylor(&col, 3).unwrap();
        let s2 = 1.0 - c * c;
        let want = Poly::from_real_terms(
            1,
            &[(&[0], c), (&[1], s2), (&[2], -s2 * c), (&[3], s2 * c * c)],
        )
        .unwrap();
        assert!(phi.max_coeff_diff(&want) < 1e-14);
        assert!((transfer_eval(&col, &[ZERO]).unwrap() - C64::new(c, 0.0)).norm() < 1e-15);
        let r = check_agler_identity(&col, &pairs()).unwrap();
        assert!(r.identity_residual <= 1e-10);
        assert!(r.torus_deviation < 1e-2);
    }

    #[test]
    fn builds_from_constant_certificate() {
        let l = IndexLattice::new(1, 0).unwrap();
        let c = 0.6;
        let p = Poly::constant(1, C64::new(c, 0.0));
        let t = build_X(&p, &l).unwrap();
        let cert =
            Certificate::from_blocks(vec![HermMatrix::diag_real(&[1.0 - c * c])], &t).unwrap();
        let sos = certificate_to_sos(&cert, &l, 1e-9).unwrap();
        let (col, _) = build_colligation(&p, &sos, 1e-9).unwrap();
        assert!(col.unitarity_residual() < 1e-12);
        let z = C64::new(0.3, -0.2);
        let want = (C64::new(c, 0.0) + z) / (ONE + z * c);
        assert!((transfer_eval(&col, &[z]).unwrap() - want).norm() < 1e-12);
    }

    #[test]
    fn builds_from_shift_and_zero_certificates() {
        let l = IndexLattice::new(1, 1).unwrap();
        let p = Poly::variable(1, 1);
        let t = build_X(&p, &l).unwrap();
        let cert = Certificate::from_blocks(vec![HermMatrix::diag_real(&[1.0, 0.0])], &t).unwrap();
        let sos = certificate_to_sos(&cert, &l, 1e-9).unwrap();
        let (col, _) = build_colligation(&p, &sos, 1e-9).unwrap();
        let phi = transfer_taylor(&col, 1).unwrap();
        assert!(phi.max_coeff_diff(&p) < 1e-12);

        let p = Poly::zero(1);
        let t = build_X(&p, &l).unwrap();
        let cert = Certificate::from_blocks(vec![HermMatrix::identity(2)], &t).unwrap();
        let sos = certificate_to_sos(&cert, &l, 1e-9).unwrap();
        let (col, _) = build_colligation(&p, &sos, 1e-9).unwrap();
        let phi = transfer_taylor(&col, 1).unwrap();
        assert!(phi.max_coeff_abs() < 1e-12);
        for (z, _) in pairs() {
            assert!(transfer_eval(&col, &z).unwrap().norm() <= 1.0 + 1e-10);
        }
    }

    #[test]
    fn gram_mismatch_detected() {
        let l = IndexLattice::new(1, 1).unwrap();
        let p = Poly::variable(1, 1).scale_real(0.5);
        let t = build_X(&Poly::variable(1, 1), &l).unwrap();
        let cert = Certificate::from_blocks(vec![HermMatrix::diag_real(&[1.0, 0.0])], &t).unwrap();
        let sos = certificate_to_sos(&cert, &l, 1e-9).unwrap();
        assert!(matches!(
            build_colligation(&p, &sos, 1e-9),
            Err(Error::GramMismatch { .. })
        ));
    }

    #[test]
    fn json_round_trip() {
        let col = mobius(0.3);
        let s = serde_json::to_string(&col.to_json()).unwrap();
        let back = Colligation::from_json(&serde_json::from_str(&s).unwrap()).unwrap();
        assert_eq!(back.matrix(), col.matrix());
        assert!(s.contains("\"U\""));
    }
}
