//! Truncated Agler test for polynomial coefficients: cone map, certificate
//! and separator verification, and witness extraction.
//!
//! Pairing convention: `<C, B> = sum C_ab B_ab = tr(C B^T)`. Stored
//! separators follow it. Internally the solver works with the Frobenius
//! dual direction, which is the entrywise conjugate.

use serde::{Deserialize, Serialize};

use crate::conic::{self, ConditionedSeparator, ConeOperator, Diagnostics, Outcome, SolverOptions};
use crate::error::{Error, Result};
use crate::lattice::{IndexLattice, MultiIndex};
use crate::niltuple::{apply_poly, tuple_from_gram, OperatorTuple, TupleDiagnostics, TupleFile};
use crate::numkernel::{
    gram_factor, herm_from_json, hermitian_eig, matrix_to_json, operator_norm, CMatrix, HermMatrix,
    MatrixJson, C64, ZERO,
};
use crate::poly::Poly;

/// Tolerance for the tuple residuals of an emitted witness.
pub const WITNESS_TUPLE_TOL: f64 = 1e-8;

/// `X_{ab} = delta_{0ab} - conj(p_a) p_b` on the lattice.
#[derive(Clone, Debug)]
pub struct TargetMatrix {
    pub x: HermMatrix,
    pub lattice: IndexLattice,
    pub poly: Poly,
    /// Coefficient vector `q` in lattice order.
    pub coeffs: Vec<C64>,
}

impl TargetMatrix {
    pub fn order(&self) -> usize {
        self.lattice.order()
    }

    pub fn dim(&self) -> usize {
        self.lattice.dim()
    }
}

#[allow(non_snake_case)]
pub fn build_X(p: &Poly, lattice: &IndexLattice) -> Result<TargetMatrix> {
    if p.dim() != lattice.dim() {
        return Err(Error::DimensionMismatch {
            expected: lattice.dim(),
            got: p.dim(),
        });
    }
    let q = p.coefficient_vector(lattice)?;
    let n = lattice.len();
    let x = CMatrix::from_fn(n, n, |a, b| {
        let delta = if a == 0 && b == 0 { 1.0 } else { 0.0 };
        C64::new(delta, 0.0) - q[a].conj() * q[b]
    });
    Ok(TargetMatrix {
        x: HermMatrix::new(x),
        lattice: lattice.clone(),
        poly: p.clone(),
        coeffs: q,
    })
}

fn check_blocks(blocks: &[HermMatrix], lattice: &IndexLattice) -> Result<()> {
    if blocks.len() != lattice.dim() {
        return Err(Error::DimensionMismatch {
            expected: lattice.dim(),
            got: blocks.len(),
        });
    }
    for b in blocks {
        if b.n() != lattice.len() {
            return Err(Error::DimensionMismatch {
                expected: lattice.len(),
                got: b.n(),
            });
        }
    }
    Ok(())
}

/// `C_ab = sum_j (A^j_ab - A^j_{a-e_j, b-e_j})`.
pub fn cone_map(blocks: &[HermMatrix], lattice: &IndexLattice) -> Result<HermMatrix> {
    check_blocks(blocks, lattice)?;
    Ok(cone_map_unchecked(blocks, lattice))
}

fn cone_map_unchecked(blocks: &[HermMatrix], lattice: &IndexLattice) -> HermMatrix {
    let n = lattice.len();
    let mut c = CMatrix::zeros(n, n);
    for (j, blk) in blocks.iter().enumerate() {
        let m = blk.as_matrix();
        for a in 0..n {
            let da = lattice.down(j, a);
            for b in 0..n {
                let mut v = m[(a, b)];
                if let (Some(x), Some(y)) = (da, lattice.down(j, b)) {
                    v -= m[(x, y)];
                }
                c[(a, b)] += v;
            }
        }
    }
    HermMatrix::new(c)
}

/// Block `j` is `C_ab - C_{a+e_j, b+e_j}`.
pub fn cone_adjoint(c: &HermMatrix, lattice: &IndexLattice) -> Vec<HermMatrix> {
    let n = lattice.len();
    let m = c.as_matrix();
    (0..lattice.dim())
        .map(|j| {
            HermMatrix::new(CMatrix::from_fn(n, n, |a, b| {
                let mut v = m[(a, b)];
                if let (Some(x), Some(y)) = (lattice.up(j, a), lattice.up(j, b)) {
                    v -= m[(x, y)];
                }
                v
            }))
        })
        .collect()
}

/// The lattice cone as a solver operator.
pub struct LatticeCone<'a> {
    pub lattice: &'a IndexLattice,
}

impl ConeOperator for LatticeCone<'_> {
    fn target_size(&self) -> usize {
        self.lattice.len()
    }
    fn num_blocks(&self) -> usize {
        self.lattice.dim()
    }
    fn block_size(&self, _: usize) -> usize {
        self.lattice.len()
    }
    fn apply(&self, blocks: &[HermMatrix]) -> HermMatrix {
        cone_map_unchecked(blocks, self.lattice)
    }
    fn frobenius_adjoint(&self, r: &HermMatrix) -> Vec<HermMatrix> {
        // real coefficients: identical to the bilinear adjoint
        cone_adjoint(r, self.lattice)
    }
    fn interior_weight(&self) -> HermMatrix {
        let top = self.lattice.order() + 1;
        let w: Vec<f64> = self
            .lattice
            .members()
            .iter()
            .map(|m| (top - m.degree()) as f64)
            .collect();
        HermMatrix::diag_real(&w)
    }
}

#[derive(Clone, Debug)]
pub struct Certificate {
    pub blocks: Vec<HermMatrix>,
    pub residual: f64,
    pub min_eigenvalue: f64,
}

impl Certificate {
    pub fn from_blocks(blocks: Vec<HermMatrix>, target: &TargetMatrix) -> Result<Self> {
        let c = cone_map(&blocks, &target.lattice)?;
        let residual = (&c - &target.x).frobenius_norm();
        let mut min_eigenvalue = f64::INFINITY;
        for b in &blocks {
            min_eigenvalue = min_eigenvalue.min(hermitian_eig(b)?.min());
        }
        Ok(Self {
            blocks,
            residual,
            min_eigenvalue,
        })
    }

    pub fn to_json(&self, lattice: &IndexLattice) -> CertificateFile {
        CertificateFile {
            d: lattice.dim(),
            order: lattice.order(),
            blocks: self
                .blocks
                .iter()
                .map(|b| matrix_to_json(b.as_matrix()))
                .collect(),
            residual: self.residual,
        }
    }

    /// Load blocks; the stored residual is informational only.
    pub fn from_json(file: &CertificateFile, target: &TargetMatrix) -> Result<Self> {
        if file.d != target.dim() || file.order != target.order() {
            return Err(Error::Format(format!(
                "certificate is for d={}, N={} but the target has d={}, N={}",
                file.d,
                file.order,
                target.dim(),
                target.order()
            )));
        }
        let blocks = file
            .blocks
            .iter()
            .map(herm_from_json)
            .collect::<Result<Vec<_>>>()?;
        check_blocks(&blocks, &target.lattice).map_err(|e| Error::Format(e.to_string()))?;
        Self::from_blocks(blocks, target)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CertificateFile {
    pub d: usize,
    #[serde(rename = "N")]
    pub order: usize,
    pub blocks: Vec<MatrixJson>,
    pub residual: f64,
}

/// One pass/fail line of a verification report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub passed: bool,
    pub value: f64,
}

impl Check {
    fn at_most(value: f64, bound: f64) -> Self {
        Self {
            passed: value <= bound,
            value,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CertificateReport {
    /// Smallest eigenvalue over all blocks (must be `>= -tol`).
    pub psd: Check,
    /// `max |L(A) - X|` entrywise.
    pub identity: Check,
    /// `lambda_max(sum_j A^j - sum_gamma shift_gamma(X))`.
    pub telescope: Check,
    pub passed: bool,
}

/// `shift_gamma(X)_{ab} = X_{a-gamma, b-gamma}` summed over the lattice.
pub fn telescoped_shift_sum(x: &HermMatrix, lattice: &IndexLattice) -> HermMatrix {
    let n = lattice.len();
    let m = x.as_matrix();
    let mut out = CMatrix::zeros(n, n);
    for gamma in lattice.members() {
        for a in 0..n {
            let Some(sa) = lattice.minus(a, gamma) else {
                continue;
            };
            for b in 0..n {
                if let Some(sb) = lattice.minus(b, gamma) {
                    out[(a, b)] += m[(sa, sb)];
                }
            }
        }
    }
    HermMatrix::new(out)
}

pub fn verify_certificate(
    target: &TargetMatrix,
    cert: &Certificate,
    tol: f64,
) -> CertificateReport {
    let failed = CertificateReport {
        psd: Check {
            passed: false,
            value: f64::NAN,
        },
        identity: Check {
            passed: false,
            value: f64::NAN,
        },
        telescope: Check {
            passed: false,
            value: f64::NAN,
        },
        passed: false,
    };
    if check_blocks(&cert.blocks, &target.lattice).is_err() {
        return failed;
    }
    let mut min_eig = f64::INFINITY;
    for b in &cert.blocks {
        match hermitian_eig(b) {
            Ok(e) => min_eig = min_eig.min(e.min()),
            Err(_) => return failed,
        }
    }
    let psd = Check {
        passed: min_eig >= -tol,
        value: min_eig,
    };
    let c = cone_map_unchecked(&cert.blocks, &target.lattice);
    let identity = Check::at_most((&c - &target.x).as_matrix().max_abs(), tol);
    let n = target.lattice.len();
    let mut sum = HermMatrix::zeros(n);
    for b in &cert.blocks {
        sum.axpy(1.0, b);
    }
    let gap = &sum - &telescoped_shift_sum(&target.x, &target.lattice);
    let telescope = match hermitian_eig(&gap) {
        Ok(e) => Check::at_most(e.max(), tol),
        Err(_) => Check {
            passed: false,
            value: f64::NAN,
        },
    };
    let passed = psd.passed && identity.passed && telescope.passed;
    CertificateReport {
        psd,
        identity,
        telescope,
        passed,
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SeparatorReport {
    /// `lambda_min(B) / |B|_F`
    pub psd: Check,
    /// Smallest eigenvalue over the adjoint blocks, relative to `|B|_F`.
    pub adjoint_psd: Check,
    /// `<X, B> / |B|_F`, must be `< -tol`.
    pub pairing: Check,
    pub passed: bool,
}

/// Scale-free checks on a dual direction `B` (paper pairing).
pub fn verify_separator(target: &TargetMatrix, b: &HermMatrix, tol: f64) -> SeparatorReport {
    let failed = SeparatorReport {
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
    if b.n() != target.lattice.len() {
        return failed;
    }
    let scale = b.frobenius_norm();
    if !(scale > 0.0) {
        return failed;
    }
    let bn = b.scale(1.0 / scale);
    let Ok(eig) = hermitian_eig(&bn) else {
        return failed;
    };
    let psd = Check {
        passed: eig.min() >= -tol,
        value: eig.min(),
    };
    let mut adj_min = f64::INFINITY;
    for blk in cone_adjoint(&bn, &target.lattice) {
        match hermitian_eig(&blk) {
            Ok(e) => adj_min = adj_min.min(e.min()),
            Err(_) => return failed,
        }
    }
    let adjoint_psd = Check {
        passed: adj_min >= -tol,
        value: adj_min,
    };
    let pairing_value = target.x.pairing(&bn);
    let pairing = Check {
        passed: pairing_value < -tol,
        value: pairing_value,
    };
    let passed = psd.passed && adjoint_psd.passed && pairing.passed;
    SeparatorReport {
        psd,
        adjoint_psd,
        pairing,
        passed,
    }
}

/// Dual direction with the violating tuple it produces.
#[derive(Clone, Debug)]
pub struct Separator {
    /// Paper-pairing separator, unit Frobenius norm.
    pub b: HermMatrix,
    /// `-<X, B>`
    pub margin: f64,
    pub witness: OperatorTuple,
    /// `|p(T)|`
    pub witness_norm: f64,
    /// `sqrt(1 + margin / B_00)`, guaranteed by the Gram construction.
    pub lower_bound: f64,
}

impl Separator {
    pub fn to_json(&self, lattice: &IndexLattice) -> SeparatorFile {
        SeparatorFile {
            d: lattice.dim(),
            order: lattice.order(),
            b: matrix_to_json(self.b.as_matrix()),
            margin: self.margin,
            witness: self.witness.to_json(),
            witness_norm: self.witness_norm,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SeparatorFile {
    pub d: usize,
    #[serde(rename = "N")]
    pub order: usize,
    #[serde(rename = "B")]
    pub b: MatrixJson,
    pub margin: f64,
    pub witness: TupleFile,
    pub witness_norm: f64,
}

/// Witness tuple from a separator together with its checks.
#[derive(Clone, Debug)]
pub struct WitnessTuple {
    pub tuple: OperatorTuple,
    pub witness_norm: f64,
    pub lower_bound: f64,
    pub diagnostics: TupleDiagnostics,
}

/// Factor `B = G*G`, form the shifts `T_j b_a = b_{a+e_j}` and evaluate
/// `|p(T)|`.
pub fn separator_to_tuple(
    b: &HermMatrix,
    p: &Poly,
    lattice: &IndexLattice,
    tol: f64,
) -> Result<WitnessTuple> {
    let gt = tuple_from_gram(b, lattice, tol)?;
    let tuple = gt.tuple;
    let diagnostics = *tuple.residuals().expect("validated by tuple_from_gram");
    let witness_norm = operator_norm(&apply_poly(p, &tuple)?);
    let target = build_X(p, lattice)?;
    let margin = -target.x.pairing(b);
    let b00 = b.as_matrix()[(0, 0)].re;
    let lower_bound = if b00 > 0.0 {
        (1.0 + margin / b00).max(0.0).sqrt()
    } else {
        0.0
    };
    Ok(WitnessTuple {
        tuple,
        witness_norm,
        lower_bound,
        diagnostics,
    })
}

pub type FeasibilityOutcome = Outcome<Certificate, Separator>;

/// Decide whether `X` lies in the cone, returning a verified certificate,
/// a separator with a checked witness tuple, or diagnostics.
pub fn solve_feasibility(target: &TargetMatrix, opts: &SolverOptions) -> FeasibilityOutcome {
    let op = LatticeCone {
        lattice: &target.lattice,
    };
    let tol = opts.tol;
    let accept_cert = |blocks: &[HermMatrix]| -> Option<Certificate> {
        let cert = Certificate::from_blocks(blocks.to_vec(), target).ok()?;
        verify_certificate(target, &cert, tol)
            .passed
            .then_some(cert)
    };
    let accept_sep = |cs: &ConditionedSeparator| -> Option<Separator> {
        let b = cs.b.conj();
        if !verify_separator(target, &b, tol).passed {
            return None;
        }
        let w = separator_to_tuple(&b, &target.poly, &target.lattice, WITNESS_TUPLE_TOL).ok()?;
        let ok = w.diagnostics.passed && w.witness_norm > 1.0 + tol;
        ok.then(|| Separator {
            margin: -target.x.pairing(&b),
            b,
            witness: w.tuple,
            witness_norm: w.witness_norm,
            lower_bound: w.lower_bound,
        })
    };
    conic::solve(&op, &target.x, opts, accept_cert, accept_sep)
}

/// Build the lattice and target, then solve; resource caps come back as
/// an undecided verdict.
pub fn solve_poly(p: &Poly, order: usize, opts: &SolverOptions) -> Result<FeasibilityOutcome> {
    let lattice = match IndexLattice::new(p.dim(), order) {
        Ok(l) => l,
        Err(e @ Error::ResourceCap { .. }) => {
            return Ok(Outcome::Undecided(Diagnostics {
                iterations: 0,
                residual: f64::NAN,
                history: Vec::new(),
                reason: e.to_string(),
            }))
        }
        Err(e) => return Err(e),
    };
    let target = build_X(p, &lattice)?;
    Ok(solve_feasibility(&target, opts))
}

/// Vector polynomials `A^j(z) = sum_a a^j_a z^a`; column `a` of
/// `factors[j]` is `a^j_a`.
#[derive(Clone, Debug)]
pub struct SosDecomposition {
    pub lattice: IndexLattice,
    pub factors: Vec<CMatrix>,
}

impl SosDecomposition {
    pub fn ranks(&self) -> Vec<usize> {
        self.factors.iter().map(|g| g.rows()).collect()
    }

    /// `a^j_a`, or the zero vector when `a` is outside the lattice.
    pub fn vector(&self, j: usize, alpha: &MultiIndex) -> Vec<C64> {
        let g = &self.factors[j];
        match self.lattice.position(alpha) {
            Some(k) => g.column(k),
            None => vec![ZERO; g.rows()],
        }
    }

    /// Evaluate `A^j(z)`.
    pub fn eval(&self, j: usize, z: &[C64]) -> Vec<C64> {
        let g = &self.factors[j];
        let mut out = vec![ZERO; g.rows()];
        for (k, alpha) in self.lattice.members().iter().enumerate() {
            let mut mono = C64::new(1.0, 0.0);
            for (zi, &e) in z.iter().zip(alpha.entries()) {
                mono *= zi.powu(e);
            }
            for (r, o) in out.iter_mut().enumerate() {
                *o += g[(r, k)] * mono;
            }
        }
        out
    }

    /// Largest coefficient error of
    /// `1 - conj(p(w)) p(z) = sum_j (1 - conj(w_j) z_j) <A^j(w), A^j(z)>`
    /// over all pairs in the lattice.
    pub fn identity_residual(&self, p: &Poly) -> Result<f64> {
        let target = build_X(p, &self.lattice)?;
        let n = self.lattice.len();
        let mut worst: f64 = 0.0;
        for a in 0..n {
            for b in 0..n {
                // coefficient of z^a conj(w)^b
                let mut rhs = ZERO;
                for (j, g) in self.factors.iter().enumerate() {
                    rhs += column_inner(g, b, a);
                    if let (Some(x), Some(y)) = (self.lattice.down(j, b), self.lattice.down(j, a)) {
                        rhs -= column_inner(g, x, y);
                    }
                }
                let lhs = target.x.as_matrix()[(b, a)];
                worst = worst.max((lhs - rhs).norm());
            }
        }
        Ok(worst)
    }
}

fn column_inner(g: &CMatrix, a: usize, b: usize) -> C64 {
    (0..g.rows()).map(|r| g[(r, a)].conj() * g[(r, b)]).sum()
}

/// Factor each certificate block as a Gram matrix of coefficient vectors.
pub fn certificate_to_sos(
    cert: &Certificate,
    lattice: &IndexLattice,
    rank_tol: f64,
) -> Result<SosDecomposition> {
    check_blocks(&cert.blocks, lattice)?;
    let factors = cert
        .blocks
        .iter()
        .map(|b| gram_factor(b, rank_tol).map(|f| f.vectors))
        .collect::<Result<Vec<_>>>()?;
    Ok(SosDecomposition {
        lattice: lattice.clone(),
        factors,
    })
}

/// Upper-triangular Toeplitz matrix of the coefficients of a one-variable
/// polynomial; returns `(norm <= 1, norm)`.
pub fn toeplitz_cf_check(p: &Poly, order: usize) -> Result<(bool, f64)> {
    let t = toeplitz_matrix(p, order)?;
    let norm = operator_norm(&t);
    Ok((norm <= 1.0, norm))
}

pub fn toeplitz_matrix(p: &Poly, order: usize) -> Result<CMatrix> {
    if p.dim() != 1 {
        return Err(Error::InvalidArgument(format!(
            "Toeplitz check needs d = 1, got d = {}",
            p.dim()
        )));
    }
    if p.degree() > order {
        return Err(Error::DegreeOverflow {
            degree: p.degree(),
            order,
        });
    }
    let coeff = |k: usize| p.coeff(&MultiIndex::new(vec![k as u32]).expect("d = 1"));
    Ok(CMatrix::from_fn(order + 1, order + 1, |i, j| {
        if j >= i {
            coeff(j - i)
        } else {
            ZERO
        }
    }))
}
