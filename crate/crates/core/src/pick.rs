//! Finite-point Agler interpolation: Hadamard-weighted cone, certificates
//! and simultaneously diagonalizable witnesses.

use serde::{Deserialize, Serialize};

use crate::cfcert::Check;
use crate::conic::{self, ConditionedSeparator, ConeOperator, Outcome, SolverOptions};
use crate::error::{Error, Result};
use crate::niltuple::{OperatorTuple, TupleFile, TupleKind};
use crate::numkernel::{
    gram_factor, herm_from_json, hermitian_eig, matrix_to_json, operator_norm, pinv_apply_right,
    CMatrix, HermMatrix, MatrixJson, C64, DEFAULT_RANK_TOL, ONE,
};

/// Points closer than this (max-coordinate distance) count as equal.
pub const DISTINCT_TOL: f64 = 1e-12;

/// Points in the open polydisk with prescribed values.
#[derive(Clone, Debug, PartialEq)]
pub struct PickProblem {
    d: usize,
    points: Vec<Vec<C64>>,
    targets: Vec<C64>,
}

impl PickProblem {
    pub fn new(d: usize, points: Vec<Vec<C64>>, targets: Vec<C64>) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidArgument("dimension d must be >= 1".into()));
        }
        if points.is_empty() {
            return Err(Error::InvalidArgument(
                "at least one point is required".into(),
            ));
        }
        if points.len() != targets.len() {
            return Err(Error::DimensionMismatch {
                expected: points.len(),
                got: targets.len(),
            });
        }
        for (i, z) in points.iter().enumerate() {
            if z.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: z.len(),
                });
            }
            if z.iter().any(|c| !c.is_finite() || c.norm() >= 1.0) {
                return Err(Error::InvalidArgument(format!(
                    "point {i} is not inside the open polydisk"
                )));
            }
            for (k, w) in points[..i].iter().enumerate() {
                let dist = z
                    .iter()
                    .zip(w)
                    .map(|(a, b)| (a - b).norm())
                    .fold(0.0, f64::max);
                if dist <= DISTINCT_TOL {
                    return Err(Error::InvalidArgument(format!(
                        "points {k} and {i} coincide"
                    )));
                }
            }
        }
        if targets.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidArgument("targets must be finite".into()));
        }
        Ok(Self { d, points, targets })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Vec<C64>] {
        &self.points
    }

    pub fn targets(&self) -> &[C64] {
        &self.targets
    }

    /// Same points, targets divided by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        Self {
            d: self.d,
            points: self.points.clone(),
            targets: self.targets.iter().map(|t| t / c).collect(),
        }
    }

    pub fn to_json(&self) -> PickFile {
        PickFile {
            d: self.d,
            points: self
                .points
                .iter()
                .map(|z| z.iter().map(|c| [c.re, c.im]).collect())
                .collect(),
            targets: self.targets.iter().map(|c| [c.re, c.im]).collect(),
        }
    }

    pub fn from_json(file: &PickFile) -> Result<Self> {
        let points = file
            .points
            .iter()
            .map(|z| z.iter().map(|[a, b]| C64::new(*a, *b)).collect())
            .collect();
        let targets = file.targets.iter().map(|[a, b]| C64::new(*a, *b)).collect();
        Self::new(file.d, points, targets).map_err(|e| Error::Format(e.to_string()))
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PickFile {
    pub d: usize,
    pub points: Vec<Vec<[f64; 2]>>,
    pub targets: Vec<[f64; 2]>,
}

/// `Y_{zw} = 1 - conj(f(w)) f(z)`.
pub fn pick_target(problem: &PickProblem) -> HermMatrix {
    let f = problem.targets();
    let n = problem.len();
    HermMatrix::new(CMatrix::from_fn(n, n, |a, b| ONE - f[b].conj() * f[a]))
}

/// `D_j(z, w) = 1 - conj(w_j) z_j`.
pub fn pick_weights(problem: &PickProblem) -> Vec<CMatrix> {
    let s = problem.points();
    let n = problem.len();
    (0..problem.dim())
        .map(|j| CMatrix::from_fn(n, n, |a, b| ONE - s[b][j].conj() * s[a][j]))
        .collect()
}

fn check_blocks(blocks: &[HermMatrix], problem: &PickProblem) -> Result<()> {
    if blocks.len() != problem.dim() {
        return Err(Error::DimensionMismatch {
            expected: problem.dim(),
            got: blocks.len(),
        });
    }
    for b in blocks {
        if b.n() != problem.len() {
            return Err(Error::DimensionMismatch {
                expected: problem.len(),
                got: b.n(),
            });
        }
    }
    Ok(())
}

/// `sum_j D_j o A^j`.
pub fn pick_cone_map(blocks: &[HermMatrix], problem: &PickProblem) -> Result<HermMatrix> {
    check_blocks(blocks, problem)?;
    Ok(weighted_sum(blocks, &pick_weights(problem)))
}

fn weighted_sum(blocks: &[HermMatrix], weights: &[CMatrix]) -> HermMatrix {
    let n = weights[0].rows();
    let mut out = CMatrix::zeros(n, n);
    for (a, w) in blocks.iter().zip(weights) {
        out = &out + &w.hadamard(a.as_matrix());
    }
    HermMatrix::new(out)
}

/// Block `j` is `D_j o C` (adjoint under `tr(C B^T)`).
pub fn pick_cone_adjoint(c: &HermMatrix, problem: &PickProblem) -> Vec<HermMatrix> {
    pick_weights(problem)
        .iter()
        .map(|w| HermMatrix::new(w.hadamard(c.as_matrix())))
        .collect()
}

/// The weighted cone as a solver operator.
pub struct PickCone {
    weights: Vec<CMatrix>,
    conj_weights: Vec<CMatrix>,
    points: Vec<Vec<C64>>,
}

impl PickCone {
    pub fn new(problem: &PickProblem) -> Self {
        let weights = pick_weights(problem);
        let conj_weights = weights.iter().map(|w| w.conj()).collect();
        Self {
            weights,
            conj_weights,
            points: problem.points().to_vec(),
        }
    }
}

impl ConeOperator for PickCone {
    fn target_size(&self) -> usize {
        self.points.len()
    }
    fn num_blocks(&self) -> usize {
        self.weights.len()
    }
    fn block_size(&self, _: usize) -> usize {
        self.points.len()
    }
    fn apply(&self, blocks: &[HermMatrix]) -> HermMatrix {
        weighted_sum(blocks, &self.weights)
    }
    fn frobenius_adjoint(&self, r: &HermMatrix) -> Vec<HermMatrix> {
        self.conj_weights
            .iter()
            .map(|w| HermMatrix::new(w.hadamard(r.as_matrix())))
            .collect()
    }
    fn interior_weight(&self) -> HermMatrix {
        // conjugate of prod_j 1 / (1 - rho^2 conj(w_j) z_j)
        let max_abs = self
            .points
            .iter()
            .flatten()
            .map(|c| c.norm_sqr())
            .fold(0.0, f64::max);
        let rho2 = if max_abs > 0.0 {
            (0.5 * (1.0 + 1.0 / max_abs)).min(2.0)
        } else {
            2.0
        };
        let s = &self.points;
        let n = s.len();
        HermMatrix::new(CMatrix::from_fn(n, n, |a, b| {
            let mut v = ONE;
            for j in 0..s[a].len() {
                v /= ONE - s[b][j].conj() * s[a][j] * rho2;
            }
            v.conj()
        }))
    }
}

#[derive(Clone, Debug)]
pub struct PickCertificate {
    pub blocks: Vec<HermMatrix>,
    pub residual: f64,
}

impl PickCertificate {
    pub fn from_blocks(blocks: Vec<HermMatrix>, problem: &PickProblem) -> Result<Self> {
        let c = pick_cone_map(&blocks, problem)?;
        let residual = (&c - &pick_target(problem)).as_matrix().max_abs();
        Ok(Self { blocks, residual })
    }

    pub fn to_json(&self) -> PickCertificateFile {
        PickCertificateFile {
            d: self.blocks.len(),
            blocks: self
                .blocks
                .iter()
                .map(|b| matrix_to_json(b.as_matrix()))
                .collect(),
            residual: self.residual,
        }
    }

    pub fn from_json(file: &PickCertificateFile, problem: &PickProblem) -> Result<Self> {
        let blocks = file
            .blocks
            .iter()
            .map(herm_from_json)
            .collect::<Result<Vec<_>>>()?;
        check_blocks(&blocks, problem).map_err(|e| Error::Format(e.to_string()))?;
        Self::from_blocks(blocks, problem)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PickCertificateFile {
    pub d: usize,
    pub blocks: Vec<MatrixJson>,
    pub residual: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PickReport {
    pub psd: Check,
    pub identity: Check,
    pub passed: bool,
}

pub fn pick_verify(problem: &PickProblem, cert: &PickCertificate, tol: f64) -> PickReport {
    let failed = PickReport {
        psd: Check {
            passed: false,
            value: f64::NAN,
        },
        identity: Check {
            passed: false,
            value: f64::NAN,
        },
        passed: false,
    };
    let Ok(c) = pick_cone_map(&cert.blocks, problem) else {
        return failed;
    };
    let mut min_eig = f64::INFINITY;
    for b in &cert.blocks {
        match hermitian_eig(b) {
            Ok(e) => min_eig = min_eig.min(e.min()),
            Err(_) => return failed,
        }
    }
    let residual = (&c - &pick_target(problem)).as_matrix().max_abs();
    let psd = Check {
        passed: min_eig >= -tol,
        value: min_eig,
    };
    let identity = Check {
        passed: residual <= tol,
        value: residual,
    };
    PickReport {
        passed: psd.passed && identity.passed,
        psd,
        identity,
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PickSeparatorReport {
    pub psd: Check,
    pub adjoint_psd: Check,
    pub pairing: Check,
    pub passed: bool,
}

/// Scale-free separator checks under the pairing `tr(C B^T)`.
pub fn pick_verify_separator(
    problem: &PickProblem,
    b: &HermMatrix,
    tol: f64,
) -> PickSeparatorReport {
    let failed = PickSeparatorReport {
        psd: Check {
            passed: false,
            value: f64::NAN,
        },
        adjoint_psd: Check {
            passed: false,
            value: f64::NAN,
        },
        pairing: Check {
            passed: false,
            value: f64::NAN,
        },
        passed: false,
    };
    let scale = b.frobenius_norm();
    if b.n() != problem.len() || !(scale > 0.0) {
        return failed;
    }
    let bn = b.scale(1.0 / scale);
    let Ok(eig) = hermitian_eig(&bn) else {
        return failed;
    };
    let mut adj_min = f64::INFINITY;
    for blk in pick_cone_adjoint(&bn, problem) {
        match hermitian_eig(&blk) {
            Ok(e) => adj_min = adj_min.min(e.min()),
            Err(_) => return failed,
        }
    }
    let pairing_value = pick_target(problem).pairing(&bn);
    let psd = Check {
        passed: eig.min() >= -tol,
        value: eig.min(),
    };
    let adjoint_psd = Check {
        passed: adj_min >= -tol,
        value: adj_min,
    };
    let pairing = Check {
        passed: pairing_value < -tol,
        value: pairing_value,
    };
    PickSeparatorReport {
        passed: psd.passed && adjoint_psd.passed && pairing.passed,
        psd,
        adjoint_psd,
        pairing,
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DiagTupleReport {
    pub commutator: f64,
    /// `max(0, max_j |T_j| - 1)`
    pub contraction: f64,
    /// `max_j |prod_s (T_j - s I)| / prod_s (|T_j| + |s|)` over the
    /// distinct coordinate values `s`.
    pub spectral: f64,
    pub passed: bool,
}

pub fn diag_tuple_checks(t: &OperatorTuple, points: &[Vec<C64>], tol: f64) -> DiagTupleReport {
    let d = t.dim();
    let r = t.size();
    let mut commutator: f64 = 0.0;
    for i in 0..d {
        for j in (i + 1)..d {
            commutator = commutator.max(operator_norm(&t.matrix(i).commutator(t.matrix(j))));
        }
    }
    let mut contraction: f64 = 0.0;
    let mut spectral: f64 = 0.0;
    for j in 0..d {
        let tj = t.matrix(j);
        let norm = operator_norm(tj);
        contraction = contraction.max(norm - 1.0);
        let mut values: Vec<C64> = Vec::new();
        for z in points {
            if j < z.len() && !values.iter().any(|v| (v - z[j]).norm() <= DISTINCT_TOL) {
                values.push(z[j]);
            }
        }
        let mut prod = CMatrix::identity(r);
        let mut scale = 1.0;
        for s in &values {
            let mut shifted = tj.clone();
            for k in 0..r {
                shifted[(k, k)] -= *s;
            }
            prod = prod.matmul(&shifted);
            scale *= norm + s.norm();
        }
        if scale > 0.0 {
            spectral = spectral.max(operator_norm(&prod) / scale);
        }
    }
    DiagTupleReport {
        passed: commutator <= tol && contraction <= tol && spectral <= tol,
        commutator,
        contraction,
        spectral,
    }
}

#[derive(Clone, Debug)]
pub struct PickSeparator {
    /// Separator under `tr(C B^T)`, unit Frobenius norm.
    pub b: HermMatrix,
    pub margin: f64,
    pub witness: OperatorTuple,
    /// `f(T)`, defined by `f(T) b_z = f(z) b_z`.
    pub f_of_t: CMatrix,
    pub witness_norm: f64,
    pub checks: DiagTupleReport,
}

impl PickSeparator {
    pub fn to_json(&self) -> PickSeparatorFile {
        PickSeparatorFile {
            b: matrix_to_json(self.b.as_matrix()),
            margin: self.margin,
            witness: self.witness.to_json(),
            f_of_t: matrix_to_json(&self.f_of_t),
            witness_norm: self.witness_norm,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PickSeparatorFile {
    #[serde(rename = "B")]
    pub b: MatrixJson,
    pub margin: f64,
    pub witness: TupleFile,
    pub f_of_t: MatrixJson,
    pub witness_norm: f64,
}

/// Witness from a separator `B` (pairing `tr(C B^T)`): factor
/// `conj(B) = G*G` with columns `b_z` and solve `T_j G = G diag(z_j)`.
pub fn pick_separator_to_tuple(
    problem: &PickProblem,
    b: &HermMatrix,
    tol: f64,
) -> Result<(OperatorTuple, CMatrix, f64)> {
    let factor = gram_factor(&b.conj(), DEFAULT_RANK_TOL)?;
    let g = &factor.vectors;
    let bound = tol * (1.0 + g.frobenius_norm());
    let n = problem.len();
    let intertwine = |diag: Vec<C64>| -> Result<CMatrix> {
        let gd = g.matmul(&CMatrix::diag(&diag));
        let t = pinv_apply_right(g, &gd, DEFAULT_RANK_TOL)?;
        let residual = (&t.matmul(g) - &gd).frobenius_norm();
        if residual > bound {
            return Err(Error::WellDefinedness { residual, bound });
        }
        Ok(t)
    };
    let matrices = (0..problem.dim())
        .map(|j| intertwine((0..n).map(|k| problem.points()[k][j]).collect()))
        .collect::<Result<Vec<_>>>()?;
    let f = intertwine(problem.targets().to_vec())?;
    let tuple = OperatorTuple::new(matrices, TupleKind::Diagonalizable)?;
    let norm = operator_norm(&f);
    Ok((tuple, f, norm))
}

pub type PickOutcome = Outcome<PickCertificate, PickSeparator>;

pub fn pick_solve(problem: &PickProblem, opts: &SolverOptions) -> PickOutcome {
    let op = PickCone::new(problem);
    let y = pick_target(problem);
    let tol = opts.tol;
    let accept_cert = |blocks: &[HermMatrix]| -> Option<PickCertificate> {
        let cert = PickCertificate::from_blocks(blocks.to_vec(), problem).ok()?;
        pick_verify(problem, &cert, tol).passed.then_some(cert)
    };
    let accept_sep = |cs: &ConditionedSeparator| -> Option<PickSeparator> {
        let b = cs.b.conj();
        if !pick_verify_separator(problem, &b, tol).passed {
            return None;
        }
        let (witness, f_of_t, witness_norm) = pick_separator_to_tuple(problem, &b, 1e-8).ok()?;
        let checks = diag_tuple_checks(&witness, problem.points(), 1e-8);
        (checks.passed && witness_norm > 1.0 + tol).then(|| PickSeparator {
            margin: -y.pairing(&b),
            b,
            witness: witness.validated(None, 1e-8),
            f_of_t,
            witness_norm,
            checks,
        })
    };
    conic::solve(&op, &y, opts, accept_cert, accept_sep)
}

/// `((1 - conj(f(w)) f(z)) / (1 - conj(w) z))_{z,w}` for `d = 1`.
pub fn classical_pick_matrix(problem: &PickProblem) -> Result<HermMatrix> {
    if problem.dim() != 1 {
        return Err(Error::InvalidArgument(
            "the classical Pick matrix needs d = 1".into(),
        ));
    }
    let s = problem.points();
    let f = problem.targets();
    let n = problem.len();
    Ok(HermMatrix::new(CMatrix::from_fn(n, n, |a, b| {
        (ONE - f[b].conj() * f[a]) / (ONE - s[b][0].conj() * s[a][0])
    })))
}
