//! Classical examples and derived workflows: the Kaijser-Varopoulos
//! violation, the `(1+z)/2` Toeplitz curve, torus sup norms, truncated
//! Agler norm bisection and witness search.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::cfcert::solve_poly;
use crate::conic::{Outcome, SolverOptions};
use crate::error::{Error, Result};
use crate::niltuple::{apply_poly, canonical_simple_nilpotent, OperatorTuple, TupleKind};
use crate::numkernel::{operator_norm, CMatrix, C64, ONE};
use crate::poly::{truncate, Poly, TaylorSource};

/// Largest number of grid evaluations `sup_norm_torus` will attempt.
pub const TORUS_GRID_CAP: u128 = 20_000_000;

#[derive(Clone, Debug)]
pub struct GalleryEntry {
    pub name: String,
    pub polynomial: Poly,
    pub tuple: Option<OperatorTuple>,
    pub values: BTreeMap<String, f64>,
    pub notes: Vec<String>,
}

/// `z1^2 + z2^2 + z3^2 - 2 z1 z2 - 2 z2 z3 - 2 z3 z1`.
pub fn kv_polynomial() -> Poly {
    Poly::from_real_terms(
        3,
        &[
            (&[2, 0, 0], 1.0),
            (&[0, 2, 0], 1.0),
            (&[0, 0, 2], 1.0),
            (&[1, 1, 0], -2.0),
            (&[0, 1, 1], -2.0),
            (&[1, 0, 1], -2.0),
        ],
    )
    .expect("fixed coefficients")
}

/// Contractions on `C^5`: `T_i e0 = e_i`, `T_i e_j = u_ij e4` with
/// `u_ii = 1/sqrt(3)`, `u_ij = -1/sqrt(3)`, `T_i e4 = 0`.
pub fn kv_tuple() -> OperatorTuple {
    let s = 1.0 / 3f64.sqrt();
    let matrices = (1..=3)
        .map(|i| {
            let mut t = CMatrix::zeros(5, 5);
            t[(i, 0)] = ONE;
            for j in 1..=3 {
                t[(4, j)] = C64::new(if i == j { s } else { -s }, 0.0);
            }
            t
        })
        .collect();
    OperatorTuple::new(matrices, TupleKind::General).expect("fixed shapes")
}

pub fn kv_example() -> Result<GalleryEntry> {
    let p = kv_polynomial();
    let t = kv_tuple().validated(Some(2), 1e-12);
    let pt = apply_poly(&p, &t)?;
    let sup = sup_norm_torus(&p, 64, 30)?;
    let mut values = BTreeMap::new();
    values.insert("tuple_norm".into(), operator_norm(&pt));
    values.insert("e0_column_entry".into(), pt[(4, 0)].norm());
    values.insert("sup_norm_torus".into(), sup.value);
    values.insert("sup_norm_error_estimate".into(), sup.error_estimate);
    if let Some(diag) = t.residuals() {
        values.insert("commutator_residual".into(), diag.commutator);
        values.insert("contraction_residual".into(), diag.contraction);
    }
    Ok(GalleryEntry {
        name: "kaijser-varopoulos".into(),
        polynomial: p,
        tuple: Some(t),
        values,
        notes: vec![
            "coefficients and the 5x5 tuple are the classical construction, hard-coded".into(),
            "tuple_norm exceeds sup_norm_torus: von Neumann's inequality fails for d = 3".into(),
        ],
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SupNormEstimate {
    /// Best value found; a lower bound for the true sup.
    pub value: f64,
    /// Improvement made by the last refinement round.
    pub error_estimate: f64,
    /// Angles of the best point.
    pub angles: Vec<f64>,
    pub grid_best: f64,
}

fn torus_value(p: &Poly, angles: &[f64]) -> f64 {
    let z: Vec<C64> = angles.iter().map(|&t| C64::from_polar(1.0, t)).collect();
    p.eval(&z).map(|v| v.norm()).unwrap_or(0.0)
}

/// Estimate `sup |p|` on the torus: grid search followed by
/// coordinate-wise golden-section refinement from the best cells.
pub fn sup_norm_torus(
    p: &Poly,
    grid_per_dim: usize,
    refine_steps: usize,
) -> Result<SupNormEstimate> {
    let d = p.dim();
    if d > 4 {
        return Err(Error::InvalidArgument(format!(
            "torus sup norm supports d <= 4, got d = {d}"
        )));
    }
    let grid = grid_per_dim.max(1);
    let total = (grid as u128).pow(d as u32);
    if total > TORUS_GRID_CAP {
        return Err(Error::ResourceCap {
            what: "torus grid points",
            requested: total,
            cap: TORUS_GRID_CAP,
        });
    }
    let h = 2.0 * PI / grid as f64;
    // keep the few best grid points as refinement seeds
    let mut seeds: Vec<(f64, Vec<f64>)> = Vec::new();
    let keep = 4;
    let mut idx = vec![0usize; d];
    for _ in 0..total {
        let angles: Vec<f64> = idx.iter().map(|&k| k as f64 * h).collect();
        let v = torus_value(p, &angles);
        if seeds.len() < keep || v > seeds[seeds.len() - 1].0 {
            seeds.push((v, angles));
            seeds.sort_by(|a, b| b.0.total_cmp(&a.0));
            seeds.truncate(keep);
        }
        for k in idx.iter_mut() {
            *k += 1;
            if *k < grid {
                break;
            }
            *k = 0;
        }
    }
    let grid_best = seeds.first().map(|s| s.0).unwrap_or(0.0);
    let mut best = (
        grid_best,
        seeds.first().map(|s| s.1.clone()).unwrap_or_default(),
    );
    let mut error_estimate: f64 = 0.0;
    for (v0, start) in seeds {
        let mut angles = start;
        let mut value = v0;
        let mut last_gain = 0.0;
        for _round in 0..4 {
            let before = value;
            for j in 0..d {
                let (t, v) = golden_max(
                    |t| {
                        let mut a = angles.clone();
                        a[j] = t;
                        torus_value(p, &a)
                    },
                    angles[j] - h,
                    angles[j] + h,
                    refine_steps,
                );
                if v > value {
                    value = v;
                    angles[j] = t;
                }
            }
            last_gain = value - before;
        }
        if value > best.0 {
            best = (value, angles);
            error_estimate = last_gain;
        }
    }
    Ok(SupNormEstimate {
        value: best.0,
        error_estimate,
        angles: best.1,
        grid_best,
    })
}

fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, steps: usize) -> (f64, f64) {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - g * (b - a);
    let mut x2 = a + g * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..steps {
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = f(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = f(x1);
        }
    }
    if f1 >= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// `(k, |(I + J_k)/2|)` for `k = 1..=n_max`, with `J_k` the `k x k` shift.
pub fn hartz_curve(n_max: usize) -> Result<Vec<(usize, f64)>> {
    if n_max == 0 {
        return Err(Error::InvalidArgument("n_max must be >= 1".into()));
    }
    (1..=n_max)
        .map(|k| {
            let t = canonical_simple_nilpotent(1, k - 1)?;
            let m = (&CMatrix::identity(k) + t.matrix(0)).scale_real(0.5);
            Ok((k, operator_norm(&m)))
        })
        .collect()
}

pub fn hartz_csv(curve: &[(usize, f64)]) -> String {
    let mut out = String::from("k,norm\n");
    for (k, v) in curve {
        let _ = writeln!(out, "{k},{v}");
    }
    out
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AglerNormOptions {
    pub bisect_tol: f64,
    pub max_probes: usize,
    pub solver: SolverOptions,
}

impl Default for AglerNormOptions {
    fn default() -> Self {
        Self {
            bisect_tol: 1e-4,
            max_probes: 64,
            solver: SolverOptions {
                max_iters: 20_000,
                ..SolverOptions::default()
            },
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TraceRow {
    pub c: f64,
    pub verdict: String,
    pub c_lo: f64,
    pub c_hi: f64,
    #[serde(rename = "N")]
    pub order: usize,
}

#[derive(Clone, Debug)]
pub struct NormInterval {
    pub lo: f64,
    pub hi: f64,
    pub order: usize,
    pub trace: Vec<TraceRow>,
    /// Scales where the solver could not decide.
    pub undecided: Vec<f64>,
    /// Tuple attaining the lower edge, when it came from a solve.
    pub witness: Option<OperatorTuple>,
}

impl NormInterval {
    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, v: f64) -> bool {
        self.lo <= v && v <= self.hi
    }
}

/// Bisection on `c` over the feasibility of `p / c` at order `N`.
///
/// Feasible scales bound the norm from above. Infeasible scales give a
/// tuple `T` and the rigorous lower bound `|p(T)|`. Undecided scales stay
/// inside the returned interval.
pub fn truncated_agler_norm(
    p: &Poly,
    order: usize,
    opts: &AglerNormOptions,
) -> Result<NormInterval> {
    if p.degree() > order {
        return Err(Error::DegreeOverflow {
            degree: p.degree(),
            order,
        });
    }
    let canonical = canonical_simple_nilpotent(p.dim(), order)?;
    let mut lo = operator_norm(&apply_poly(p, &canonical)?);
    let mut hi = p.l1_norm();
    let mut trace = Vec::new();
    let mut undecided: Vec<f64> = Vec::new();
    let mut witness = None;
    let tol = opts.bisect_tol;
    for _ in 0..opts.max_probes {
        if hi - lo <= tol || hi <= 0.0 {
            break;
        }
        let c = match (
            undecided.iter().copied().reduce(f64::min),
            undecided.iter().copied().reduce(f64::max),
        ) {
            (Some(ulo), Some(uhi)) => {
                if hi - uhi > 0.5 * tol {
                    0.5 * (uhi + hi)
                } else if ulo - lo > 0.5 * tol {
                    0.5 * (lo + ulo)
                } else {
                    break;
                }
            }
            _ => 0.5 * (lo + hi),
        };
        let outcome = solve_poly(&p.scale_real(1.0 / c), order, &opts.solver)?;
        match &outcome {
            Outcome::Feasible(_) => hi = hi.min(c),
            Outcome::Infeasible(sep) => {
                let bound = c * sep.witness_norm;
                if bound > lo {
                    lo = bound;
                    witness = Some(sep.witness.clone());
                }
            }
            Outcome::Undecided(_) => undecided.push(c),
        }
        undecided.retain(|&u| u > lo && u < hi);
        trace.push(TraceRow {
            c,
            verdict: outcome.verdict().into(),
            c_lo: lo,
            c_hi: hi,
            order,
        });
    }
    Ok(NormInterval {
        lo,
        hi,
        order,
        trace,
        undecided,
        witness,
    })
}

pub fn trace_csv(trace: &[TraceRow]) -> String {
    let mut out = String::from("c_lo,c_hi,N\n");
    for row in trace {
        let _ = writeln!(out, "{},{},{}", row.c_lo, row.c_hi, row.order);
    }
    out
}

#[derive(Clone, Debug)]
pub struct WitnessHit {
    pub order: usize,
    pub tuple: OperatorTuple,
    /// `|f(T)|`; exceeds `c`.
    pub norm: f64,
}

/// First order `N <= n_max` at which the degree-`N` truncation of `f`,
/// divided by `c`, admits a violating tuple.
pub fn witness_search<S: TaylorSource + ?Sized>(
    f: &S,
    c: f64,
    n_max: usize,
    opts: &SolverOptions,
) -> Result<Option<WitnessHit>> {
    if !(c > 0.0) {
        return Err(Error::InvalidArgument("c must be positive".into()));
    }
    for order in 1..=n_max {
        let fn_trunc = truncate(f, order)?;
        if let Outcome::Infeasible(sep) = solve_poly(&fn_trunc.scale_real(1.0 / c), order, opts)? {
            let norm = operator_norm(&apply_poly(&fn_trunc, &sep.witness)?);
            return Ok(Some(WitnessHit {
                order,
                tuple: sep.witness,
                norm,
            }));
        }
    }
    Ok(None)
}
