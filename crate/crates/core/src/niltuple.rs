//! Commuting matrix tuples, in particular simple `N`-nilpotent tuples
//! acting as multi-index shifts on a (possibly degenerate) spanning set.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::IndexLattice;
use crate::numkernel::{
    gram_factor, matrix_from_json, matrix_to_json, operator_norm, pinv_apply_right, CMatrix,
    GramFactor, HermMatrix, MatrixJson, DEFAULT_RANK_TOL, ONE,
};
use crate::poly::Poly;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TupleKind {
    CanonicalNilpotent,
    GramNilpotent,
    Diagonalizable,
    General,
}

impl std::fmt::Display for TupleKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            TupleKind::CanonicalNilpotent => "canonical-nilpotent",
            TupleKind::GramNilpotent => "gram-nilpotent",
            TupleKind::Diagonalizable => "diagonalizable",
            TupleKind::General => "general",
        };
        f.write_str(s)
    }
}

/// Residuals reported by [`validate_tuple`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TupleDiagnostics {
    /// `max_{i<j} |T_i T_j - T_j T_i|`
    pub commutator: f64,
    /// `max(0, max_j |T_j| - 1)`
    pub contraction: f64,
    /// `max_{|alpha| = N+1} |T^alpha|`, when an order was supplied.
    pub nilpotency: Option<f64>,
    pub passed: bool,
}

/// `d` commuting square matrices on `C^size`.
#[derive(Clone, Debug)]
pub struct OperatorTuple {
    matrices: Vec<CMatrix>,
    kind: TupleKind,
    residuals: Option<TupleDiagnostics>,
}

impl OperatorTuple {
    pub fn new(matrices: Vec<CMatrix>, kind: TupleKind) -> Result<Self> {
        let Some(first) = matrices.first() else {
            return Err(Error::InvalidArgument(
                "tuple must have d >= 1 matrices".into(),
            ));
        };
        let size = first.rows();
        for m in &matrices {
            if m.rows() != size || m.cols() != size {
                return Err(Error::DimensionMismatch {
                    expected: size,
                    got: if m.rows() != size { m.rows() } else { m.cols() },
                });
            }
        }
        Ok(Self {
            matrices,
            kind,
            residuals: None,
        })
    }

    pub fn dim(&self) -> usize {
        self.matrices.len()
    }

    pub fn size(&self) -> usize {
        self.matrices[0].rows()
    }

    pub fn matrices(&self) -> &[CMatrix] {
        &self.matrices
    }

    pub fn matrix(&self, j: usize) -> &CMatrix {
        &self.matrices[j]
    }

    pub fn kind(&self) -> TupleKind {
        self.kind
    }

    pub fn residuals(&self) -> Option<&TupleDiagnostics> {
        self.residuals.as_ref()
    }

    /// Run [`validate_tuple`] and attach the result.
    pub fn validated(mut self, order: Option<usize>, tol: f64) -> Self {
        self.residuals = Some(validate_tuple(&self, order, tol));
        self
    }

    /// Entrywise scaling of every matrix.
    pub fn scaled(&self, s: f64) -> Self {
        Self {
            matrices: self.matrices.iter().map(|m| m.scale_real(s)).collect(),
            kind: self.kind,
            residuals: None,
        }
    }

    pub fn to_json(&self) -> TupleFile {
        TupleFile {
            d: self.dim(),
            size: self.size(),
            matrices: self.matrices.iter().map(matrix_to_json).collect(),
            kind: self.kind,
        }
    }

    pub fn from_json(file: &TupleFile) -> Result<Self> {
        if file.matrices.len() != file.d {
            return Err(Error::Format(format!(
                "tuple declares d = {} but has {} matrices",
                file.d,
                file.matrices.len()
            )));
        }
        let matrices = file
            .matrices
            .iter()
            .map(matrix_from_json)
            .collect::<Result<Vec<_>>>()?;
        for m in &matrices {
            if m.rows() != file.size || m.cols() != file.size {
                return Err(Error::Format(format!(
                    "matrix is {}x{}, expected {}x{}",
                    m.rows(),
                    m.cols(),
                    file.size,
                    file.size
                )));
            }
        }
        if file.size == 0 {
            let matrices = vec![CMatrix::zeros(0, 0); file.d];
            return Self::new(matrices, file.kind).map_err(|e| Error::Format(e.to_string()));
        }
        Self::new(matrices, file.kind).map_err(|e| Error::Format(e.to_string()))
    }
}

/// On-disk tuple layout.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TupleFile {
    pub d: usize,
    pub size: usize,
    pub matrices: Vec<MatrixJson>,
    pub kind: TupleKind,
}

/// Matrix of the coordinate shift `e_alpha -> e_{alpha + e_j}` on the
/// lattice coordinate space (0 at the boundary); `j` is 0-based.
pub fn lattice_shift(lattice: &IndexLattice, j: usize) -> CMatrix {
    let n = lattice.len();
    let mut s = CMatrix::zeros(n, n);
    for k in 0..n {
        if let Some(t) = lattice.up(j, k) {
            s[(t, k)] = ONE;
        }
    }
    s
}

/// Shifts on an orthonormal basis indexed by `[N]`.
pub fn canonical_simple_nilpotent(d: usize, order: usize) -> Result<OperatorTuple> {
    let lattice = IndexLattice::new(d, order)?;
    let matrices = (0..d).map(|j| lattice_shift(&lattice, j)).collect();
    OperatorTuple::new(matrices, TupleKind::CanonicalNilpotent)
}

/// Tuple built from a Gram matrix together with its factorization.
#[derive(Clone, Debug)]
pub struct GramTuple {
    pub tuple: OperatorTuple,
    pub factor: GramFactor,
    /// `max_j |T_j G - G S_j|_F`
    pub well_definedness: f64,
}

/// Factor `B = G*G` (columns `b_alpha`) and solve `T_j G = G S_j` so that
/// `T_j b_alpha = b_{alpha+e_j}`.
pub fn tuple_from_gram(b: &HermMatrix, lattice: &IndexLattice, tol: f64) -> Result<GramTuple> {
    if b.n() != lattice.len() {
        return Err(Error::DimensionMismatch {
            expected: lattice.len(),
            got: b.n(),
        });
    }
    let factor = gram_factor(b, DEFAULT_RANK_TOL)?;
    let g = &factor.vectors;
    let bound = tol * (1.0 + g.frobenius_norm());
    let mut matrices = Vec::with_capacity(lattice.dim());
    let mut worst: f64 = 0.0;
    for j in 0..lattice.dim() {
        let gs = g.matmul(&lattice_shift(lattice, j));
        let t = pinv_apply_right(g, &gs, DEFAULT_RANK_TOL)?;
        let residual = (&t.matmul(g) - &gs).frobenius_norm();
        worst = worst.max(residual);
        matrices.push(t);
    }
    if worst > bound {
        return Err(Error::WellDefinedness {
            residual: worst,
            bound,
        });
    }
    let r = g.rows();
    let matrices = if r == 0 {
        vec![CMatrix::zeros(0, 0); lattice.dim()]
    } else {
        matrices
    };
    let tuple = OperatorTuple::new(matrices, TupleKind::GramNilpotent)?
        .validated(Some(lattice.order()), tol);
    Ok(GramTuple {
        tuple,
        factor,
        well_definedness: worst,
    })
}

/// All monomials `T^alpha` for `|alpha| <= order`, indexed by the lattice.
pub fn monomial_powers(t: &OperatorTuple, lattice: &IndexLattice) -> Vec<CMatrix> {
    let r = t.size();
    let mut powers: Vec<CMatrix> = Vec::with_capacity(lattice.len());
    for (k, alpha) in lattice.members().iter().enumerate() {
        if alpha.is_zero() {
            powers.push(CMatrix::identity(r));
            continue;
        }
        let j = alpha
            .entries()
            .iter()
            .position(|&a| a > 0)
            .expect("nonzero");
        let prev = lattice.down(j, k).expect("lowered index is in the lattice");
        let base = &powers[prev];
        let next = if base.max_abs() == 0.0 {
            CMatrix::zeros(r, r)
        } else {
            t.matrix(j).matmul(base)
        };
        powers.push(next);
    }
    powers
}

/// `p(T) = sum_alpha p_alpha T^alpha`.
pub fn apply_poly(p: &Poly, t: &OperatorTuple) -> Result<CMatrix> {
    if p.dim() != t.dim() {
        return Err(Error::DimensionMismatch {
            expected: t.dim(),
            got: p.dim(),
        });
    }
    let r = t.size();
    let mut out = CMatrix::zeros(r, r);
    if p.is_zero() {
        return Ok(out);
    }
    let lattice = IndexLattice::new(p.dim(), p.degree())?;
    let powers = monomial_powers(t, &lattice);
    for (alpha, c) in p.terms() {
        let k = lattice
            .position(alpha)
            .expect("term inside its degree lattice");
        out.axpy(*c, &powers[k]);
    }
    Ok(out)
}

/// `|p(T)|`
pub fn poly_norm_on(p: &Poly, t: &OperatorTuple) -> Result<f64> {
    Ok(operator_norm(&apply_poly(p, t)?))
}

/// Commutation, contraction and (optionally) nilpotency residuals.
pub fn validate_tuple(t: &OperatorTuple, order: Option<usize>, tol: f64) -> TupleDiagnostics {
    let d = t.dim();
    let mut commutator: f64 = 0.0;
    for i in 0..d {
        for j in (i + 1)..d {
            commutator = commutator.max(operator_norm(&t.matrix(i).commutator(t.matrix(j))));
        }
    }
    let contraction = t
        .matrices()
        .iter()
        .map(|m| operator_norm(m) - 1.0)
        .fold(0.0, f64::max);
    let nilpotency = order.map(|n| {
        if t.size() == 0 {
            return 0.0;
        }
        match IndexLattice::new(d, n + 1) {
            Ok(lattice) => {
                let powers = monomial_powers(t, &lattice);
                lattice
                    .members()
                    .iter()
                    .zip(&powers)
                    .filter(|(a, _)| a.degree() == n + 1)
                    .map(|(_, m)| operator_norm(m))
                    .fold(0.0, f64::max)
            }
            Err(_) => f64::INFINITY,
        }
    });
    let passed = commutator <= tol && contraction <= tol && nilpotency.is_none_or(|v| v <= tol);
    TupleDiagnostics {
        commutator,
        contraction,
        nilpotency,
        passed,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::MultiIndex;
    use crate::numkernel::{hermitian_eig, C64, ZERO};

    #[test]
    fn canonical_single_variable() {
        let t = canonical_simple_nilpotent(1, 2).unwrap();
        let expected = CMatrix::from_real(&[&[0.0, 0.0, 0.0], &[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0]]);
        assert_eq!(t.matrix(0), &expected);
        assert!((operator_norm(t.matrix(0)) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn canonical_two_variables_order_one() {
        let t = canonical_simple_nilpotent(2, 1).unwrap();
        // basis order (0,0), (1,0), (0,1)
        assert_eq!(t.size(), 3);
        assert_eq!(t.matrix(0).column(0), vec![ZERO, ONE, ZERO]);
        assert_eq!(t.matrix(0).column(2), vec![ZERO, ZERO, ZERO]);
    }

    #[test]
    fn canonical_three_variables_products_vanish() {
        let t = canonical_simple_nilpotent(3, 2).unwrap();
        assert_eq!(t.size(), 10);
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    let m = t.matrix(i).matmul(t.matrix(j)).matmul(t.matrix(k));
                    assert_eq!(m.max_abs(), 0.0);
                }
            }
        }
        let diag = validate_tuple(&t, Some(2), 0.0);
        assert_eq!(diag.commutator, 0.0);
        assert_eq!(diag.contraction, 0.0);
        assert_eq!(diag.nilpotency, Some(0.0));
        assert!(diag.passed);
    }

    #[test]
    fn canonical_monomials_shift_basis() {
        for d in 1..=3 {
            for order in 0..=3 {
                let t = canonical_simple_nilpotent(d, order).unwrap();
                let lattice = IndexLattice::new(d, order).unwrap();
                let powers = monomial_powers(&t, &lattice);
                for (ka, alpha) in lattice.members().iter().enumerate() {
                    for (kb, beta) in lattice.members().iter().enumerate() {
                        let col = powers[ka].column(kb);
                        let target = lattice.position(&alpha.add(beta));
                        for (i, v) in col.iter().enumerate() {
                            let want = if Some(i) == target { ONE } else { ZERO };
                            assert_eq!(*v, want);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn apply_poly_examples() {
        let t = canonical_simple_nilpotent(1, 2).unwrap();
        let z = Poly::variable(1, 1);
        assert_eq!(&apply_poly(&z, &t).unwrap(), t.matrix(0));
        let z3 = Poly::from_real_terms(1, &[(&[3], 1.0)]).unwrap();
        assert_eq!(apply_poly(&z3, &t).unwrap().max_abs(), 0.0);
        assert!(apply_poly(&Poly::variable(2, 1), &t).is_err());
    }

    #[test]
    fn validate_flags_noncommuting_and_noncontractive() {
        let t1 = CMatrix::from_real(&[&[0.0, 1.0], &[0.0, 0.0]]);
        let t2 = CMatrix::from_real(&[&[0.0, 0.0], &[1.0, 0.0]]);
        let t = OperatorTuple::new(vec![t1, t2], TupleKind::General).unwrap();
        let diag = validate_tuple(&t, None, 1e-12);
        assert!((diag.commutator - 1.0).abs() < 1e-14);
        assert!(!diag.passed);

        let big = canonical_simple_nilpotent(1, 2).unwrap().scaled(1.1);
        let diag = validate_tuple(&big, Some(2), 1e-12);
        assert!((diag.contraction - 0.1).abs() < 1e-12);
        assert!(!diag.passed);
    }

    #[test]
    fn identity_gram_recovers_canonical_norms() {
        let lattice = IndexLattice::new(1, 2).unwrap();
        let gt = tuple_from_gram(&HermMatrix::identity(3), &lattice, 1e-10).unwrap();
        let canon = canonical_simple_nilpotent(1, 2).unwrap();
        let p = Poly::from_real_terms(1, &[(&[0], 0.3), (&[1], -0.7), (&[2], 0.4)]).unwrap();
        let a = poly_norm_on(&p, &gt.tuple).unwrap();
        let b = poly_norm_on(&p, &canon).unwrap();
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn inconsistent_gram_is_rejected() {
        let lattice = IndexLattice::new(1, 1).unwrap();
        let ones = HermMatrix::rank_one(&[ONE, ONE]);
        assert!(matches!(
            tuple_from_gram(&ones, &lattice, 1e-8),
            Err(Error::WellDefinedness { .. })
        ));
    }

    #[test]
    fn kv_spanning_set_gram() {
        let lattice = IndexLattice::new(3, 2).unwrap();
        let s = 1.0 / 3f64.sqrt();
        // b_0 = e0, b_{e_i} = e_i, b_{e_i+e_j} = u_ij e4
        let mut g = CMatrix::zeros(5, lattice.len());
        for (k, alpha) in lattice.members().iter().enumerate() {
            let a = alpha.entries();
            match alpha.degree() {
                0 => g[(0, k)] = ONE,
                1 => {
                    let i = a.iter().position(|&x| x == 1).unwrap();
                    g[(i + 1, k)] = ONE;
                }
                _ => {
                    let u = if a.contains(&2) { s } else { -s };
                    g[(4, k)] = C64::new(u, 0.0);
                }
            }
        }
        let b = HermMatrix::new(g.adjoint_mul(&g));
        let gt = tuple_from_gram(&b, &lattice, 1e-10).unwrap();
        assert_eq!(gt.tuple.size(), 5);
        let diag = gt.tuple.residuals().unwrap();
        assert!(diag.commutator <= 1e-12, "{diag:?}");
        assert!(diag.contraction <= 1e-12, "{diag:?}");
        assert!(diag.nilpotency.unwrap() <= 1e-12);
    }

    #[test]
    fn nonsingular_gram_norm_two_ways() {
        // B positive definite: |p(T)| equals the B-weighted norm of p(S).
        let lattice = IndexLattice::new(2, 2).unwrap();
        let n = lattice.len();
        let m = CMatrix::from_fn(n, n, |i, j| {
            C64::new(
                ((i * 7 + j * 3) % 5) as f64 * 0.1,
                ((i + 2 * j) % 3) as f64 * 0.05,
            )
        });
        let mut b = HermMatrix::new(m.adjoint_mul(&m));
        b.axpy(0.5, &HermMatrix::identity(n));
        // make shifts contractive in the B-geometry is not required for
        // the similarity identity
        let gt = tuple_from_gram(&b, &lattice, 1e-8).unwrap();
        let p = Poly::from_real_terms(
            2,
            &[
                (&[0, 0], 0.2),
                (&[1, 0], 0.5),
                (&[1, 1], -0.3),
                (&[0, 2], 0.7),
            ],
        )
        .unwrap();
        let direct = poly_norm_on(&p, &gt.tuple).unwrap();

        // lattice coordinates: max_a (a* M* B M a) / (a* B a), M = p(S)
        let canon = canonical_simple_nilpotent(2, 2).unwrap();
        let ms = apply_poly(&p, &canon).unwrap();
        let eig = hermitian_eig(&b).unwrap();
        let inv_sqrt = eig.reassemble(|l| 1.0 / l.sqrt());
        let sqrt_b = eig.reassemble(f64::sqrt);
        let k = sqrt_b.as_matrix().matmul(&ms).matmul(inv_sqrt.as_matrix());
        let weighted = operator_norm(&k);
        assert!((direct - weighted).abs() < 1e-8, "{direct} vs {weighted}");
    }

    #[test]
    fn higher_coefficients_are_invisible() {
        let t = canonical_simple_nilpotent(2, 2).unwrap();
        let p = Poly::from_real_terms(2, &[(&[1, 0], 1.0), (&[0, 2], 0.5)]).unwrap();
        let q = p
            .add(&Poly::from_real_terms(2, &[(&[2, 1], 3.0), (&[0, 4], -1.0)]).unwrap())
            .unwrap();
        let a = apply_poly(&p, &t).unwrap();
        let b = apply_poly(&q, &t).unwrap();
        assert!((&a - &b).max_abs() < 1e-12);
        let _ = MultiIndex::zero(2);
    }

    #[test]
    fn json_round_trip() {
        let t = canonical_simple_nilpotent(2, 1).unwrap();
        let s = serde_json::to_string(&t.to_json()).unwrap();
        let back = OperatorTuple::from_json(&serde_json::from_str(&s).unwrap()).unwrap();
        assert_eq!(back.matrices(), t.matrices());
        assert_eq!(back.kind(), TupleKind::CanonicalNilpotent);
        assert!(s.contains("\"kind\":\"canonical-nilpotent\""));
    }
}
