use std::path::Path;

use aglerlab::cfcert::{
    build_X, certificate_to_sos, solve_feasibility, toeplitz_cf_check, verify_certificate,
    verify_separator, Certificate, CertificateFile, SeparatorFile, TargetMatrix,
};
use aglerlab::conic::{Diagnostics, Outcome};
use aglerlab::gallery::{
    hartz_csv, hartz_curve, kv_polynomial, kv_tuple, sup_norm_torus, trace_csv,
    truncated_agler_norm, witness_search, AglerNormOptions,
};
use aglerlab::lattice::lattice_size;
use aglerlab::niltuple::{
    apply_poly, canonical_simple_nilpotent, validate_tuple, OperatorTuple, TupleFile,
};
use aglerlab::numkernel::{herm_from_json, operator_norm};
use aglerlab::pick::{
    diag_tuple_checks, pick_separator_to_tuple, pick_solve, pick_verify, pick_verify_separator,
    PickCertificate, PickCertificateFile, PickFile, PickProblem, PickSeparatorFile,
};
use aglerlab::realization::{
    build_colligation, check_agler_identity, transfer_taylor, Colligation, ColligationFile,
};
use aglerlab::{IndexLattice, Poly, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{json, Value};

use crate::error::CliError;
use crate::report::{Report, Verdict};
use crate::{Command, GalleryCommand, PolyArgs, RunConfig, VerifyArgs};

/// Largest `|U*U - I|` accepted for a stored colligation.
pub const UNITARY_TOL: f64 = 1e-10;
/// Largest Taylor coefficient mismatch accepted for a colligation.
pub const TAYLOR_TOL: f64 = 1e-6;
/// Sample radius for the Agler identity check.
const SAMPLE_RADIUS: f64 = 0.95;

pub fn dispatch(cmd: &Command, cfg: &RunConfig) -> Result<Report, CliError> {
    match cmd {
        Command::Lattice { d, degree } => lattice(*d, *degree, cfg),
        Command::CfCheck {
            poly,
            cert_out,
            witness_out,
        } => cf_check(poly, cert_out, witness_out, cfg),
        Command::Verify(args) => verify(args, cfg),
        Command::Realize {
            poly,
            colligation_out,
            witness_out,
            samples,
        } => realize(poly, colligation_out, witness_out, *samples, cfg),
        Command::NilNorm { poly } => nil_norm(poly),
        Command::Toeplitz { poly } => toeplitz(poly),
        Command::Pick {
            problem,
            cert_out,
            witness_out,
        } => pick(problem, cert_out, witness_out, cfg),
        Command::Gallery { which } => match which {
            GalleryCommand::Kv { tuple_out, grid } => gallery_kv(tuple_out.as_deref(), *grid),
            GalleryCommand::Hartz { n_max, csv } => gallery_hartz(*n_max, csv.as_deref()),
        },
        Command::AglerNorm {
            poly,
            bisect_tol,
            max_probes,
            probe_iters,
            trace_csv,
            witness_out,
        } => agler_norm(
            poly,
            *bisect_tol,
            *max_probes,
            *probe_iters,
            trace_csv.as_deref(),
            witness_out.as_deref(),
            cfg,
        ),
        Command::Witness {
            poly,
            c,
            n_max,
            witness_out,
        } => witness(poly, *c, *n_max, witness_out, cfg),
    }
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|e| CliError::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).expect("artifact types serialize") + "\n";
    write_text(path, &text)
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|source| CliError::Write {
        path: path.to_path_buf(),
        source,
    })
}

fn display(path: &Path) -> String {
    path.display().to_string()
}

fn read_poly(path: &Path) -> Result<Poly, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    Poly::from_json_str(&text).map_err(|e| CliError::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

fn read_problem(path: &Path) -> Result<PickProblem, CliError> {
    let file: PickFile = read_json(path)?;
    PickProblem::from_json(&file).map_err(|e| CliError::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

fn read_tuple(path: &Path, file: &TupleFile) -> Result<OperatorTuple, CliError> {
    OperatorTuple::from_json(file).map_err(|e| CliError::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

/// `d`/`N` resolved against the lattice cap; `Err(report)` carries an
/// undecided verdict when the cap is exceeded.
fn capped_lattice(
    command: &str,
    d: usize,
    order: usize,
    cfg: &RunConfig,
) -> Result<Result<IndexLattice, Report>, CliError> {
    match IndexLattice::with_cap(d, order, cfg.lattice_cap) {
        Ok(l) => Ok(Ok(l)),
        Err(e @ aglerlab::Error::ResourceCap { .. }) => {
            let mut r = Report::new(command, Verdict::Undecided);
            r.field("reason", e.to_string());
            r.line(e.to_string());
            r.line("raise --lattice-cap or lower --degree");
            Ok(Err(r))
        }
        Err(e) => Err(e.into()),
    }
}

fn target_for(
    p: &PolyArgs,
    command: &str,
    cfg: &RunConfig,
) -> Result<Result<TargetMatrix, Report>, CliError> {
    let poly = read_poly(&p.poly)?;
    let lattice = match capped_lattice(command, poly.dim(), p.degree, cfg)? {
        Ok(l) => l,
        Err(r) => return Ok(Err(r)),
    };
    Ok(Ok(build_X(&poly, &lattice)?))
}

fn lattice(d: usize, order: usize, cfg: &RunConfig) -> Result<Report, CliError> {
    let lattice = match capped_lattice("lattice", d, order, cfg)? {
        Ok(l) => l,
        Err(r) => return Ok(r),
    };
    let members: Vec<Value> = lattice
        .members()
        .iter()
        .map(|m| json!(m.entries()))
        .collect();
    let mut r = Report::new("lattice", Verdict::Done);
    r.field("d", d)
        .field("N", order)
        .field("size", lattice.len())
        .field("members", members);
    r.line(format!(
        "|[N]| = {} for d = {d}, N = {order}",
        lattice.len()
    ));
    Ok(r)
}

fn undecided(command: &str, diag: &Diagnostics) -> Report {
    let mut r = Report::new(command, Verdict::Undecided);
    let tail: Vec<f64> = diag.history.iter().rev().take(5).rev().copied().collect();
    r.field("iterations", diag.iterations)
        .field("residual", diag.residual)
        .field("reason", diag.reason.clone())
        .field("residual_history_tail", tail.clone());
    r.line(format!(
        "stopped after {} iterations: {}",
        diag.iterations, diag.reason
    ));
    let shown: Vec<String> = tail.iter().map(|v| format!("{v:.3e}")).collect();
    r.line(format!("residual history tail: [{}]", shown.join(", ")));
    r.line("try a larger --max-iters, a looser --tol, or a scale away from the boundary");
    r
}

fn cert_fields(r: &mut Report, cert: &Certificate, target: &TargetMatrix, tol: f64) -> bool {
    let report = verify_certificate(target, cert, tol);
    let mins: Vec<f64> = cert
        .blocks
        .iter()
        .map(|b| aglerlab::numkernel::min_eigenvalue(b).unwrap_or(f64::NAN))
        .collect();
    r.field("residual", cert.residual)
        .field("block_min_eigenvalues", mins.clone())
        .field(
            "checks",
            serde_json::to_value(&report).expect("report serializes"),
        );
    r.line(format!("residual |L(A) - X|_F = {:.3e}", cert.residual));
    for (j, m) in mins.iter().enumerate() {
        r.line(format!("block {}: min eigenvalue {m:.3e}", j + 1));
    }
    report.passed
}

fn cf_check(
    p: &PolyArgs,
    cert_out: &Path,
    witness_out: &Path,
    cfg: &RunConfig,
) -> Result<Report, CliError> {
    let target = match target_for(p, "cf-check", cfg)? {
        Ok(t) => t,
        Err(r) => return Ok(r),
    };
    match solve_feasibility(&target, &cfg.solver()) {
        Outcome::Feasible(cert) => {
            let mut r = Report::new("cf-check", Verdict::Feasible);
            cert_fields(&mut r, &cert, &target, cfg.tol);
            write_json(cert_out, &cert.to_json(&target.lattice))?;
            r.artifact(&display(cert_out));
            Ok(r)
        }
        Outcome::Infeasible(sep) => {
            let mut r = Report::new("cf-check", Verdict::Infeasible);
            r.field("margin", sep.margin)
                .field("witness_norm", sep.witness_norm)
                .field("witness_size", sep.witness.size())
                .field("d", sep.witness.dim())
                .field("lower_bound", sep.lower_bound);
            r.line(format!(
                "witness |p(T)| = {:.9} with {} tuple of {}x{} matrices",
                sep.witness_norm,
                sep.witness.dim(),
                sep.witness.size(),
                sep.witness.size()
            ));
            r.line(format!("separator margin -<X,B> = {:.3e}", sep.margin));
            write_json(witness_out, &sep.to_json(&target.lattice))?;
            r.artifact(&display(witness_out));
            Ok(r)
        }
        Outcome::Undecided(diag) => Ok(undecided("cf-check", &diag)),
    }
}

fn verify(args: &VerifyArgs, cfg: &RunConfig) -> Result<Report, CliError> {
    if let Some(problem) = &args.problem {
        let prob = read_problem(problem)?;
        if let Some(path) = &args.certificate {
            return verify_pick_certificate(&prob, path, cfg);
        }
        if let Some(path) = &args.separator {
            return verify_pick_separator(&prob, path, cfg);
        }
        return Err(CliError::Usage(
            "verify --problem needs --certificate or --separator".into(),
        ));
    }
    if let Some(path) = &args.tuple {
        return verify_tuple(path, args, cfg);
    }
    let (Some(poly), Some(degree)) = (&args.poly, args.degree) else {
        return Err(CliError::Usage("verify needs --poly and --degree".into()));
    };
    let pa = PolyArgs {
        poly: poly.clone(),
        degree,
    };
    let target = match target_for(&pa, "verify", cfg)? {
        Ok(t) => t,
        Err(r) => return Ok(r),
    };
    if let Some(path) = &args.certificate {
        let file: CertificateFile = read_json(path)?;
        let cert = Certificate::from_json(&file, &target).map_err(|e| CliError::Parse {
            path: path.clone(),
            message: e.to_string(),
        })?;
        let mut r = Report::new("verify", Verdict::Passed);
        r.field("artifact", "certificate");
        if !cert_fields(&mut r, &cert, &target, cfg.verify_tol) {
            r.verdict = Verdict::Failed;
        }
        return Ok(r);
    }
    if let Some(path) = &args.separator {
        return verify_separator_file(path, &target, cfg);
    }
    if let Some(path) = &args.colligation {
        return verify_colligation(path, &target.poly, degree, cfg);
    }
    Err(CliError::Usage(
        "verify needs one of --certificate, --separator, --tuple, --colligation".into(),
    ))
}

fn verify_separator_file(
    path: &Path,
    target: &TargetMatrix,
    cfg: &RunConfig,
) -> Result<Report, CliError> {
    let file: SeparatorFile = read_json(path)?;
    if file.d != target.dim() || file.order != target.order() {
        return Err(CliError::Parse {
            path: path.to_path_buf(),
            message: format!(
                "separator is for d={}, N={} but the target has d={}, N={}",
                file.d,
                file.order,
                target.dim(),
                target.order()
            ),
        });
    }
    let b = herm_from_json(&file.b).map_err(|e| CliError::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    let tuple = read_tuple(path, &file.witness)?;
    let sep = verify_separator(target, &b, cfg.verify_tol);
    let diag = validate_tuple(&tuple, Some(target.order()), cfg.verify_tol);
    let norm = operator_norm(&apply_poly(&target.poly, &tuple)?);
    let passed = sep.passed && diag.passed && norm > 1.0;
    let mut r = Report::new(
        "verify",
        if passed {
            Verdict::Passed
        } else {
            Verdict::Failed
        },
    );
    r.field("artifact", "separator")
        .field(
            "separator_checks",
            serde_json::to_value(&sep).expect("report serializes"),
        )
        .field(
            "tuple_checks",
            serde_json::to_value(diag).expect("report serializes"),
        )
        .field("witness_norm", norm)
        .field("stored_witness_norm", file.witness_norm);
    r.line(format!(
        "separator: psd {:.3e}, adjoint psd {:.3e}, <X,B> = {:.3e}",
        sep.psd.value, sep.adjoint_psd.value, sep.pairing.value
    ));
    r.line(format!(
        "witness |p(T)| = {norm:.9} with {} tuple of {}x{} matrices",
        tuple.dim(),
        tuple.size(),
        tuple.size()
    ));
    Ok(r)
}

fn verify_tuple(path: &Path, args: &VerifyArgs, cfg: &RunConfig) -> Result<Report, CliError> {
    let file: TupleFile = read_json(path)?;
    let tuple = read_tuple(path, &file)?;
    let diag = validate_tuple(&tuple, args.degree, cfg.verify_tol);
    let mut r = Report::new(
        "verify",
        if diag.passed {
            Verdict::Passed
        } else {
            Verdict::Failed
        },
    );
    r.field("artifact", "tuple")
        .field(
            "tuple_checks",
            serde_json::to_value(diag).expect("report serializes"),
        )
        .field("size", tuple.size())
        .field("d", tuple.dim());
    r.line(format!(
        "commutator {:.3e}, contraction excess {:.3e}",
        diag.commutator, diag.contraction
    ));
    if let Some(poly) = &args.poly {
        let p = read_poly(poly)?;
        let norm = operator_norm(&apply_poly(&p, &tuple)?);
        r.field("poly_norm", norm);
        r.line(format!("|p(T)| = {norm:.9}"));
    }
    Ok(r)
}

fn verify_colligation(
    path: &Path,
    p: &Poly,
    degree: usize,
    cfg: &RunConfig,
) -> Result<Report, CliError> {
    let file: ColligationFile = read_json(path)?;
    let col = Colligation::from_json(&file).map_err(|e| CliError::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    if col.dim() != p.dim() {
        return Err(CliError::Parse {
            path: path.to_path_buf(),
            message: format!(
                "colligation has d = {} but the polynomial has d = {}",
                col.dim(),
                p.dim()
            ),
        });
    }
    let unitary = col.unitarity_residual();
    let taylor = transfer_taylor(&col, degree)?.max_coeff_diff(p);
    let agler = check_agler_identity(&col, &sample_pairs(p.dim(), 100, cfg.seed))?;
    let passed =
        unitary <= UNITARY_TOL && taylor <= TAYLOR_TOL && agler.identity_residual <= cfg.verify_tol;
    let mut r = Report::new(
        "verify",
        if passed {
            Verdict::Passed
        } else {
            Verdict::Failed
        },
    );
    r.field("artifact", "colligation")
        .field("unitarity_residual", unitary)
        .field("taylor_mismatch", taylor)
        .field(
            "agler",
            serde_json::to_value(&agler).expect("report serializes"),
        );
    r.line(format!(
        "|U*U - I| = {unitary:.3e}, Taylor mismatch {taylor:.3e}"
    ));
    r.line(format!(
        "identity residual {:.3e} over {} pairs",
        agler.identity_residual, agler.samples
    ));
    Ok(r)
}

fn sample_pairs(d: usize, count: usize, seed: u64) -> Vec<(Vec<C64>, Vec<C64>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let point = |rng: &mut ChaCha8Rng| -> Vec<C64> {
        (0..d)
            .map(|_| {
                let r = SAMPLE_RADIUS * rng.gen::<f64>().sqrt();
                C64::from_polar(r, rng.gen_range(0.0..std::f64::consts::TAU))
            })
            .collect()
    };
    (0..count)
        .map(|_| {
            let z = point(&mut rng);
            let w = point(&mut rng);
            (z, w)
        })
        .collect()
}

fn realize(
    p: &PolyArgs,
    colligation_out: &Path,
    witness_out: &Path,
    samples: usize,
    cfg: &RunConfig,
) -> Result<Report, CliError> {
    let target = match target_for(p, "realize", cfg)? {
        Ok(t) => t,
        Err(r) => return Ok(r),
    };
    let cert = match solve_feasibility(&target, &cfg.solver()) {
        Outcome::Feasible(c) => c,
        Outcome::Infeasible(sep) => {
            let mut r = Report::new("realize", Verdict::Infeasible);
            r.field("witness_norm", sep.witness_norm)
                .field("witness_size", sep.witness.size());
            r.line(format!(
                "no realization: witness |p(T)| = {:.9} with {}x{} matrices",
                sep.witness_norm,
                sep.witness.size(),
                sep.witness.size()
            ));
            write_json(witness_out, &sep.to_json(&target.lattice))?;
            r.artifact(&display(witness_out));
            return Ok(r);
        }
        Outcome::Undecided(diag) => return Ok(undecided("realize", &diag)),
    };
    let sos = certificate_to_sos(&cert, &target.lattice, cfg.rank_tol)?;
    let sos_residual = sos.identity_residual(&target.poly)?;
    let (col, orientation) = build_colligation(&target.poly, &sos, cfg.verify_tol)?;
    let unitary = col.unitarity_residual();
    let taylor = transfer_taylor(&col, p.degree)?.max_coeff_diff(&target.poly);
    let agler = check_agler_identity(&col, &sample_pairs(target.dim(), samples, cfg.seed))?;
    let passed =
        unitary <= UNITARY_TOL && taylor <= TAYLOR_TOL && agler.identity_residual <= cfg.verify_tol;
    let mut r = Report::new(
        "realize",
        if passed {
            Verdict::Feasible
        } else {
            Verdict::Failed
        },
    );
    r.field("sos_ranks", sos.ranks())
        .field("sos_identity_residual", sos_residual)
        .field("partition", col.partition().to_vec())
        .field("orientation", format!("{orientation:?}").to_lowercase())
        .field("unitarity_residual", unitary)
        .field("taylor_mismatch", taylor)
        .field(
            "agler",
            serde_json::to_value(&agler).expect("report serializes"),
        );
    r.line(format!(
        "SOS ranks {:?}, identity residual {sos_residual:.3e}",
        sos.ranks()
    ));
    r.line(format!(
        "|U*U - I| = {unitary:.3e}, Taylor mismatch {taylor:.3e}"
    ));
    r.line(format!(
        "identity residual {:.3e} over {} pairs, torus deviation {:.3e}",
        agler.identity_residual, agler.samples, agler.torus_deviation
    ));
    write_json(colligation_out, &col.to_json())?;
    r.artifact(&display(colligation_out));
    Ok(r)
}

fn nil_norm(p: &PolyArgs) -> Result<Report, CliError> {
    let poly = read_poly(&p.poly)?;
    if poly.degree() > p.degree {
        return Err(aglerlab::Error::DegreeOverflow {
            degree: poly.degree(),
            order: p.degree,
        }
        .into());
    }
    let s = canonical_simple_nilpotent(poly.dim(), p.degree)?;
    let norm = operator_norm(&apply_poly(&poly, &s)?);
    let mut r = Report::new("nil-norm", Verdict::Done);
    r.field("norm", norm).field("size", s.size());
    r.line(format!(
        "|p(S)| = {norm:.9} on the canonical tuple of size {}",
        s.size()
    ));
    Ok(r)
}

fn toeplitz(p: &PolyArgs) -> Result<Report, CliError> {
    let poly = read_poly(&p.poly)?;
    let (contractive, norm) = toeplitz_cf_check(&poly, p.degree)?;
    let mut r = Report::new(
        "toeplitz",
        if contractive {
            Verdict::Feasible
        } else {
            Verdict::Infeasible
        },
    );
    r.field("norm", norm).field("contractive", contractive);
    r.line(format!("Toeplitz operator norm {norm:.9}"));
    Ok(r)
}

fn pick(
    problem: &Path,
    cert_out: &Path,
    witness_out: &Path,
    cfg: &RunConfig,
) -> Result<Report, CliError> {
    let prob = read_problem(problem)?;
    match pick_solve(&prob, &cfg.solver()) {
        Outcome::Feasible(cert) => {
            let rep = pick_verify(&prob, &cert, cfg.tol);
            let mut r = Report::new("pick", Verdict::Feasible);
            r.field("residual", cert.residual).field(
                "checks",
                serde_json::to_value(&rep).expect("report serializes"),
            );
            r.line(format!(
                "residual {:.3e}, min eigenvalue {:.3e}",
                cert.residual, rep.psd.value
            ));
            write_json(cert_out, &cert.to_json())?;
            r.artifact(&display(cert_out));
            Ok(r)
        }
        Outcome::Infeasible(sep) => {
            let mut r = Report::new("pick", Verdict::Infeasible);
            r.field("witness_norm", sep.witness_norm)
                .field("margin", sep.margin)
                .field("witness_size", sep.witness.size())
                .field(
                    "checks",
                    serde_json::to_value(&sep.checks).expect("report serializes"),
                );
            r.line(format!(
                "witness |f(T)| = {:.9} with {}x{} matrices",
                sep.witness_norm,
                sep.witness.size(),
                sep.witness.size()
            ));
            write_json(witness_out, &sep.to_json())?;
            r.artifact(&display(witness_out));
            Ok(r)
        }
        Outcome::Undecided(diag) => Ok(undecided("pick", &diag)),
    }
}

fn verify_pick_certificate(
    prob: &PickProblem,
    path: &Path,
    cfg: &RunConfig,
) -> Result<Report, CliError> {
    let file: PickCertificateFile = read_json(path)?;
    let cert = PickCertificate::from_json(&file, prob).map_err(|e| CliError::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    let rep = pick_verify(prob, &cert, cfg.verify_tol);
    let mut r = Report::new(
        "verify",
        if rep.passed {
            Verdict::Passed
        } else {
            Verdict::Failed
        },
    );
    r.field("artifact", "pick-certificate").field(
        "checks",
        serde_json::to_value(&rep).expect("report serializes"),
    );
    r.line(format!(
        "min eigenvalue {:.3e}, identity residual {:.3e}",
        rep.psd.value, rep.identity.value
    ));
    Ok(r)
}

fn verify_pick_separator(
    prob: &PickProblem,
    path: &Path,
    cfg: &RunConfig,
) -> Result<Report, CliError> {
    let file: PickSeparatorFile = read_json(path)?;
    let b = herm_from_json(&file.b).map_err(|e| CliError::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    let stored = read_tuple(path, &file.witness)?;
    let sep = pick_verify_separator(prob, &b, cfg.verify_tol);
    let stored_checks = diag_tuple_checks(&stored, prob.points(), cfg.verify_tol);
    let (norm, rebuilt) = match pick_separator_to_tuple(prob, &b, cfg.verify_tol) {
        Ok((t, _, norm)) => (
            norm,
            diag_tuple_checks(&t, prob.points(), cfg.verify_tol).passed,
        ),
        Err(_) => (f64::NAN, false),
    };
    let passed = sep.passed && stored_checks.passed && rebuilt && norm > 1.0;
    let mut r = Report::new(
        "verify",
        if passed {
            Verdict::Passed
        } else {
            Verdict::Failed
        },
    );
    r.field("artifact", "pick-separator")
        .field(
            "separator_checks",
            serde_json::to_value(&sep).expect("report serializes"),
        )
        .field(
            "tuple_checks",
            serde_json::to_value(stored_checks).expect("report serializes"),
        )
        .field("witness_norm", norm)
        .field("stored_witness_norm", file.witness_norm);
    r.line(format!(
        "separator: psd {:.3e}, adjoint psd {:.3e}, <Y,B> = {:.3e}",
        sep.psd.value, sep.adjoint_psd.value, sep.pairing.value
    ));
    r.line(format!("witness |f(T)| = {norm:.9}"));
    Ok(r)
}

fn gallery_kv(tuple_out: Option<&Path>, grid: usize) -> Result<Report, CliError> {
    let p = kv_polynomial();
    let t = kv_tuple();
    let diag = validate_tuple(&t, Some(2), 1e-12);
    let pt = apply_poly(&p, &t)?;
    let norm = operator_norm(&pt);
    let sup = sup_norm_torus(&p, grid, 30)?;
    let mut r = Report::new("gallery kv", Verdict::Done);
    r.field(
        "polynomial",
        serde_json::to_value(p.to_json()).expect("poly serializes"),
    )
    .field("tuple_norm", norm)
    .field("three_sqrt_three", 3.0 * 3f64.sqrt())
    .field("sup_norm_torus", sup.value)
    .field("sup_norm_error_estimate", sup.error_estimate)
    .field(
        "tuple_checks",
        serde_json::to_value(diag).expect("report serializes"),
    )
    .field(
        "tuple",
        serde_json::to_value(t.to_json()).expect("tuple serializes"),
    );
    r.line(format!(
        "|p(T)| = {norm:.9} (3 sqrt 3 = {:.9})",
        3.0 * 3f64.sqrt()
    ));
    r.line(format!("sup over the torus ~ {:.9}", sup.value));
    if let Some(path) = tuple_out {
        write_json(path, &t.to_json())?;
        r.artifact(&display(path));
    }
    Ok(r)
}

fn gallery_hartz(n_max: usize, csv: Option<&Path>) -> Result<Report, CliError> {
    let curve = hartz_curve(n_max)?;
    let rows: Vec<Value> = curve
        .iter()
        .map(|&(k, v)| json!({"k": k, "norm": v}))
        .collect();
    let mut r = Report::new("gallery hartz", Verdict::Done);
    r.field("curve", rows);
    if let Some(&(k, v)) = curve.last() {
        r.line(format!("k = {k}: |(1+S)/2| = {v:.9}"));
    }
    if let Some(path) = csv {
        write_text(path, &hartz_csv(&curve))?;
        r.artifact(&display(path));
    }
    Ok(r)
}

#[allow(clippy::too_many_arguments)]
fn agler_norm(
    p: &PolyArgs,
    bisect_tol: f64,
    max_probes: usize,
    probe_iters: usize,
    trace_path: Option<&Path>,
    witness_out: Option<&Path>,
    cfg: &RunConfig,
) -> Result<Report, CliError> {
    if !(bisect_tol > 0.0) {
        return Err(CliError::Usage("--bisect-tol must be positive".into()));
    }
    let poly = read_poly(&p.poly)?;
    if let Err(r) = capped_lattice("agler-norm", poly.dim(), p.degree, cfg)? {
        return Ok(r);
    }
    let opts = AglerNormOptions {
        bisect_tol,
        max_probes,
        solver: aglerlab::conic::SolverOptions {
            tol: cfg.tol,
            max_iters: probe_iters,
            ..Default::default()
        },
    };
    let iv = truncated_agler_norm(&poly, p.degree, &opts)?;
    let verdict = if iv.width() <= bisect_tol {
        Verdict::Done
    } else {
        Verdict::Undecided
    };
    let mut r = Report::new("agler-norm", verdict);
    r.field("lo", iv.lo)
        .field("hi", iv.hi)
        .field("width", iv.width())
        .field("N", iv.order)
        .field("undecided_scales", iv.undecided.clone())
        .field("probes", iv.trace.len());
    r.line(format!(
        "truncated norm in [{:.9}, {:.9}] at N = {}",
        iv.lo, iv.hi, iv.order
    ));
    if !iv.undecided.is_empty() {
        r.line(format!(
            "{} undecided probes kept inside the interval",
            iv.undecided.len()
        ));
    }
    if let Some(path) = trace_path {
        write_text(path, &trace_csv(&iv.trace))?;
        r.artifact(&display(path));
    }
    if let (Some(path), Some(t)) = (witness_out, &iv.witness) {
        write_json(path, &t.to_json())?;
        r.artifact(&display(path));
    }
    Ok(r)
}

fn witness(
    poly: &Path,
    c: f64,
    n_max: usize,
    witness_out: &Path,
    cfg: &RunConfig,
) -> Result<Report, CliError> {
    let f = read_poly(poly)?;
    if let Some(n) = lattice_size(f.dim(), n_max) {
        if n > cfg.lattice_cap as u128 {
            let mut r = Report::new("witness", Verdict::Undecided);
            r.field(
                "reason",
                format!("lattice size {n} exceeds cap {}", cfg.lattice_cap),
            );
            r.line("raise --lattice-cap or lower --n-max");
            return Ok(r);
        }
    }
    match witness_search(&f, c, n_max, &cfg.solver())? {
        Some(hit) => {
            let mut r = Report::new("witness", Verdict::Infeasible);
            r.field("N", hit.order)
                .field("witness_norm", hit.norm)
                .field("witness_size", hit.tuple.size());
            r.line(format!(
                "N = {}: witness |f_N(T)| = {:.9} > {c} with {}x{} matrices",
                hit.order,
                hit.norm,
                hit.tuple.size(),
                hit.tuple.size()
            ));
            write_json(witness_out, &hit.tuple.to_json())?;
            r.artifact(&display(witness_out));
            Ok(r)
        }
        None => {
            let mut r = Report::new("witness", Verdict::Feasible);
            r.field("n_max", n_max);
            r.line(format!("no violating tuple found for N <= {n_max}"));
            Ok(r)
        }
    }
}
