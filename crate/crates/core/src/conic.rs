//! Least-distance solver for `X in L(PSD^d)` shared by the Taylor and the
//! finite-point problems.
//!
//! Everything in this module uses the Frobenius inner product
//! `<A, B> = Re tr(A* B)`. Callers translate to their own pairing.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::numkernel::{hermitian_eig, psd_project_warm, CMatrix, HermMatrix, C64};

/// Linear map from `d` Hermitian blocks to one Hermitian matrix, with a
/// strictly feasible dual point.
pub trait ConeOperator {
    /// Size of the target matrix.
    fn target_size(&self) -> usize;
    /// Number of PSD blocks.
    fn num_blocks(&self) -> usize;
    /// Size of block `j`.
    fn block_size(&self, j: usize) -> usize;
    fn apply(&self, blocks: &[HermMatrix]) -> HermMatrix;
    /// Adjoint under the Frobenius inner product.
    fn frobenius_adjoint(&self, r: &HermMatrix) -> Vec<HermMatrix>;
    /// Positive definite `W` whose adjoint blocks are positive definite.
    fn interior_weight(&self) -> HermMatrix;
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Target residual and verification tolerance.
    pub tol: f64,
    pub max_iters: usize,
    /// Iterations between certificate / separator attempts.
    pub check_every: usize,
    /// Stagnation window in iterations.
    pub stagnation_window: usize,
    /// Relative objective decrease below which the window counts as stagnant.
    pub stagnation_rel: f64,
    /// Relative residual below which face polishing is attempted.
    pub polish_below: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iters: 200_000,
            check_every: 100,
            stagnation_window: 500,
            stagnation_rel: 1e-12,
            polish_below: 1e-3,
        }
    }
}

/// Why a solve ended without a verdict.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Diagnostics {
    pub iterations: usize,
    pub residual: f64,
    /// Residual `|L(A) - X|_F` at every check, oldest first.
    pub history: Vec<f64>,
    pub reason: String,
}

#[derive(Clone, Debug)]
pub enum Outcome<C, S> {
    Feasible(C),
    Infeasible(S),
    Undecided(Diagnostics),
}

impl<C, S> Outcome<C, S> {
    pub fn verdict(&self) -> &'static str {
        match self {
            Outcome::Feasible(_) => "feasible",
            Outcome::Infeasible(_) => "infeasible",
            Outcome::Undecided(_) => "undecided",
        }
    }
}

/// Dual candidate `B = L(A) - X + eta W`, scaled to unit Frobenius norm.
#[derive(Clone, Debug)]
pub struct ConditionedSeparator {
    pub b: HermMatrix,
    /// `-<X, B>`
    pub margin: f64,
    pub eta: f64,
}

pub fn blocks_norm(a: &[HermMatrix]) -> f64 {
    a.iter()
        .map(|m| m.frobenius_norm().powi(2))
        .sum::<f64>()
        .sqrt()
}

pub fn blocks_inner(a: &[HermMatrix], b: &[HermMatrix]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.frobenius_inner(y)).sum()
}

fn blocks_scaled(a: &[HermMatrix], s: f64) -> Vec<HermMatrix> {
    a.iter().map(|m| m.scale(s)).collect()
}

/// Largest eigenvalue of `L^T L`, by power iteration from a fixed start.
pub fn lipschitz_estimate<O: ConeOperator + ?Sized>(op: &O) -> f64 {
    let mut x: Vec<HermMatrix> = (0..op.num_blocks())
        .map(|j| {
            let n = op.block_size(j);
            HermMatrix::new(CMatrix::from_fn(n, n, |a, b| {
                if a == b {
                    C64::new(1.0 + 0.1 * ((a + j) % 7) as f64, 0.0)
                } else {
                    C64::new(0.01 / (1.0 + (a + b) as f64), 0.0)
                }
            }))
        })
        .collect();
    let mut lambda = 0.0;
    for _ in 0..60 {
        let norm = blocks_norm(&x);
        if norm == 0.0 {
            return 1.0;
        }
        x = blocks_scaled(&x, 1.0 / norm);
        let y = op.frobenius_adjoint(&op.apply(&x));
        lambda = blocks_norm(&y);
        x = y;
    }
    if lambda > 0.0 {
        lambda
    } else {
        1.0
    }
}

struct Weight {
    w: HermMatrix,
    lambda_min: f64,
    lambda_max: f64,
    adjoint_min: f64,
}

impl Weight {
    fn new<O: ConeOperator + ?Sized>(op: &O) -> Result<Self> {
        let w = op.interior_weight();
        let eig = hermitian_eig(&w)?;
        let mut adjoint_min = f64::INFINITY;
        for blk in op.frobenius_adjoint(&w) {
            adjoint_min = adjoint_min.min(hermitian_eig(&blk)?.min());
        }
        Ok(Self {
            lambda_min: eig.min(),
            lambda_max: eig.max(),
            w,
            adjoint_min,
        })
    }
}

/// Turn a raw dual direction into a strictly feasible one by adding a
/// multiple of the interior weight, keeping at least half the margin.
fn condition_separator<O: ConeOperator + ?Sized>(
    op: &O,
    x: &HermMatrix,
    raw: &HermMatrix,
    weight: &Weight,
) -> Option<ConditionedSeparator> {
    let scale = raw.frobenius_norm();
    if !(scale > 0.0) || !scale.is_finite() {
        return None;
    }
    if !(weight.lambda_min > 0.0 && weight.adjoint_min > 0.0) {
        return None;
    }
    let b = raw.scale(1.0 / scale);
    let margin = -x.frobenius_inner(&b);
    if !(margin > 0.0) {
        return None;
    }
    let eig = hermitian_eig(&b).ok()?;
    let neg_b = (-eig.min()).max(0.0);
    let mut neg_adj: f64 = 0.0;
    for blk in op.frobenius_adjoint(&b) {
        neg_adj = neg_adj.max(-hermitian_eig(&blk).ok()?.min());
    }
    let need = (2.0 * neg_b / weight.lambda_min).max(2.0 * neg_adj / weight.adjoint_min);
    let floor = 1e-6 * eig.max().max(0.0) / weight.lambda_max;
    let xw = x.frobenius_inner(&weight.w);
    let cap = if xw > 0.0 {
        0.5 * margin / xw
    } else {
        f64::INFINITY
    };
    if need > cap {
        return None;
    }
    let eta = need.max(floor).min(cap);
    if !(eta > 0.0) {
        return None;
    }
    let mut out = b;
    out.axpy(eta, &weight.w);
    let s = out.frobenius_norm();
    let out = out.scale(1.0 / s);
    let margin = -x.frobenius_inner(&out);
    Some(ConditionedSeparator {
        b: out,
        margin,
        eta: eta / s,
    })
}

/// Restrict to the face spanned by the dominant eigenvectors of each block
/// and solve `L(V M V*) = X` for the minimum-norm correction of `M`.
fn polish<O: ConeOperator + ?Sized>(
    op: &O,
    x: &HermMatrix,
    blocks: &[HermMatrix],
    theta: f64,
) -> Option<Vec<HermMatrix>> {
    let eigs: Vec<_> = blocks
        .iter()
        .map(hermitian_eig)
        .collect::<Result<Vec<_>>>()
        .ok()?;
    let global_max = eigs.iter().map(|e| e.max()).fold(0.0, f64::max);
    let faces: Vec<CMatrix> = eigs
        .iter()
        .map(|e| {
            let keep: Vec<usize> = (0..e.values.len())
                .filter(|&k| e.values[k] > theta * global_max)
                .collect();
            e.vectors.select_columns(&keep)
        })
        .collect();
    let lift = |m: &[HermMatrix]| -> Vec<HermMatrix> {
        faces
            .iter()
            .zip(m)
            .map(|(v, mj)| HermMatrix::new(v.matmul(mj.as_matrix()).matmul(&v.adjoint())))
            .collect()
    };
    let compress = |r: &HermMatrix| -> Vec<HermMatrix> {
        op.frobenius_adjoint(r)
            .iter()
            .zip(&faces)
            .map(|(g, v)| HermMatrix::new(v.adjoint_mul(&g.as_matrix().matmul(v))))
            .collect()
    };
    let m0: Vec<HermMatrix> = faces
        .iter()
        .zip(blocks)
        .map(|(v, a)| HermMatrix::new(v.adjoint_mul(&a.as_matrix().matmul(v))))
        .collect();
    let r0 = x - &op.apply(&lift(&m0));
    let stop = 1e-15 * (1.0 + x.frobenius_norm());

    // CG on K K* y = r0, then delta = K* y.
    let n = x.n();
    let mut y = HermMatrix::zeros(n);
    let mut r = r0.clone();
    let mut p = r.clone();
    let mut rs = r.frobenius_inner(&r);
    let max_cg = 4 * n * n + 50;
    for _ in 0..max_cg {
        if rs.sqrt() <= stop {
            break;
        }
        let q = op.apply(&lift(&compress(&p)));
        let pq = p.frobenius_inner(&q);
        if !(pq > 0.0) {
            break;
        }
        let alpha = rs / pq;
        y.axpy(alpha, &p);
        r.axpy(-alpha, &q);
        let rs_new = r.frobenius_inner(&r);
        let beta = rs_new / rs;
        rs = rs_new;
        let mut next = r.clone();
        next.axpy(beta, &p);
        p = next;
    }
    let delta = compress(&y);
    let m: Vec<HermMatrix> = m0.iter().zip(&delta).map(|(a, b)| a + b).collect();
    Some(lift(&m))
}

/// Accelerated projected gradient on `1/2 |L(A) - X|_F^2` over PSD blocks.
///
/// `accept_certificate` is offered candidate blocks and returns a verified
/// certificate or `None`; `accept_separator` does the same for conditioned
/// dual directions. Neither verdict is produced without their approval.
pub fn solve<O, C, S>(
    op: &O,
    x: &HermMatrix,
    opts: &SolverOptions,
    mut accept_certificate: impl FnMut(&[HermMatrix]) -> Option<C>,
    mut accept_separator: impl FnMut(&ConditionedSeparator) -> Option<S>,
) -> Outcome<C, S>
where
    O: ConeOperator + ?Sized,
{
    let d = op.num_blocks();
    let weight = Weight::new(op).ok();
    let mut lip = 1.05 * lipschitz_estimate(op);
    let xnorm = x.frobenius_norm();

    let mut a: Vec<HermMatrix> = (0..d)
        .map(|j| HermMatrix::zeros(op.block_size(j)))
        .collect();
    let mut la = HermMatrix::zeros(x.n());
    let mut a_prev = a.clone();
    let mut la_prev = la.clone();
    let mut f = 0.5 * xnorm * xnorm;
    let mut t: f64 = 1.0;
    let mut t_prev: f64 = 1.0;
    let mut warm: Vec<Option<CMatrix>> = vec![None; d];

    let mut history = Vec::new();
    let mut f_checks: Vec<(usize, f64)> = Vec::new();
    let mut last_polish = f64::INFINITY;
    let mut last_polish_iter = 0usize;

    if let Some(c) = accept_certificate(&a) {
        return Outcome::Feasible(c);
    }

    let mut iter = 0usize;
    while iter < opts.max_iters {
        iter += 1;
        let beta = (t_prev - 1.0) / t;
        let (y, ly) = if beta > 0.0 {
            let y: Vec<HermMatrix> = a
                .iter()
                .zip(&a_prev)
                .map(|(cur, old)| {
                    let mut m = cur.clone();
                    m.axpy(beta, &(cur - old));
                    m
                })
                .collect();
            let mut ly = la.clone();
            ly.axpy(beta, &(&la - &la_prev));
            (y, ly)
        } else {
            (a.clone(), la.clone())
        };
        let grad = op.frobenius_adjoint(&(&ly - x));
        let mut z = Vec::with_capacity(d);
        let mut failed = false;
        for j in 0..d {
            let mut step = y[j].clone();
            step.axpy(-1.0 / lip, &grad[j]);
            match psd_project_warm(&step, warm[j].as_ref()) {
                Ok((proj, v)) => {
                    warm[j] = Some(v);
                    z.push(proj);
                }
                Err(_) => {
                    failed = true;
                    break;
                }
            }
        }
        if failed {
            return Outcome::Undecided(Diagnostics {
                iterations: iter,
                residual: (2.0 * f).sqrt(),
                history,
                reason: "eigensolver failure during projection".into(),
            });
        }
        let lz = op.apply(&z);
        let fz = 0.5 * (&lz - x).frobenius_norm().powi(2);
        let slack = 1e-14 * (f + 0.5 * xnorm * xnorm) + 1e-300;
        if fz > f + slack {
            if beta > 0.0 {
                // restart momentum
                t = 1.0;
                t_prev = 1.0;
            } else {
                lip *= 2.0;
            }
        } else {
            a_prev = std::mem::replace(&mut a, z);
            la_prev = std::mem::replace(&mut la, lz);
            f = fz;
            t_prev = t;
            t = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        }

        if !iter.is_multiple_of(opts.check_every) && iter != opts.max_iters {
            continue;
        }
        let residual = (2.0 * f).sqrt();
        history.push(residual);

        if residual <= opts.tol {
            if let Some(c) = accept_certificate(&a) {
                return Outcome::Feasible(c);
            }
        }
        let rel = residual / (1.0 + xnorm);
        if rel <= opts.polish_below
            && (residual <= 0.5 * last_polish || iter >= last_polish_iter + 10 * opts.check_every)
        {
            last_polish = residual;
            last_polish_iter = iter;
            for theta in [1e-10, 1e-6, 1e-3] {
                if let Some(candidate) = polish(op, x, &a, theta) {
                    if let Some(c) = accept_certificate(&candidate) {
                        return Outcome::Feasible(c);
                    }
                }
            }
        }
        if let Some(w) = &weight {
            let raw = &la - x;
            if let Some(cs) = condition_separator(op, x, &raw, w) {
                if let Some(s) = accept_separator(&cs) {
                    return Outcome::Infeasible(s);
                }
            }
        }

        f_checks.push((iter, f));
        if let Some(&(_, f_old)) = f_checks
            .iter()
            .rev()
            .find(|(k, _)| iter - k >= opts.stagnation_window)
        {
            let decrease = (f_old - f) / f_old.max(1e-300);
            if f_old == 0.0 || decrease < opts.stagnation_rel {
                return Outcome::Undecided(Diagnostics {
                    iterations: iter,
                    residual,
                    history,
                    reason: "stagnation".into(),
                });
            }
        }
    }
    Outcome::Undecided(Diagnostics {
        iterations: iter,
        residual: (2.0 * f).sqrt(),
        history,
        reason: "iteration cap reached".into(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// `L(A) = A` on a single block: the projection of `X` onto the PSD cone.
    struct Identity(usize);

    impl ConeOperator for Identity {
        fn target_size(&self) -> usize {
            self.0
        }
        fn num_blocks(&self) -> usize {
            1
        }
        fn block_size(&self, _: usize) -> usize {
            self.0
        }
        fn apply(&self, blocks: &[HermMatrix]) -> HermMatrix {
            blocks[0].clone()
        }
        fn frobenius_adjoint(&self, r: &HermMatrix) -> Vec<HermMatrix> {
            vec![r.clone()]
        }
        fn interior_weight(&self) -> HermMatrix {
            HermMatrix::identity(self.0)
        }
    }

    #[test]
    fn identity_cone_feasible() {
        let x = HermMatrix::diag_real(&[1.0, 2.0]);
        let out: Outcome<Vec<HermMatrix>, ()> = solve(
            &Identity(2),
            &x,
            &SolverOptions::default(),
            |a| ((&a[0] - &x).frobenius_norm() < 1e-10).then(|| a.to_vec()),
            |_| None,
        );
        assert!(matches!(out, Outcome::Feasible(_)));
    }

    #[test]
    fn identity_cone_separates_negative_direction() {
        let x = HermMatrix::diag_real(&[1.0, -0.5]);
        let out: Outcome<(), ConditionedSeparator> = solve(
            &Identity(2),
            &x,
            &SolverOptions::default(),
            |_| None,
            |s| Some(s.clone()),
        );
        match out {
            Outcome::Infeasible(s) => {
                assert!(s.margin > 0.0);
                let eig = hermitian_eig(&s.b).unwrap();
                assert!(eig.min() > 0.0);
            }
            other => panic!("expected separator, got {}", other.verdict()),
        }
    }

    #[test]
    fn lipschitz_of_identity_is_one() {
        assert!((lipschitz_estimate(&Identity(3)) - 1.0).abs() < 1e-12);
    }
}
