use std::path::{Path, PathBuf};

use pqlap::continuation::{estimate_limit, multiplicity_solve, trace_branch, Branch};
use pqlap::reference::{qlap_eigenvalue, spectrum_csv};
use pqlap::solvers::{
    solve_first_global, solve_first_nehari, solve_fixed_rho, solve_w_equation, EigenPair,
    FirstOutcome,
};
use pqlap::verify::{run_criteria, VerifyConfig};
use pqlap::{Error, Formulation, PQParams, Regime};
use rayon::prelude::*;

use crate::config::RunConfig;
use crate::error::CliError;
use crate::output::{write_atomic, Cell, Csv};
use crate::svg::{self, Diagram, Series};

pub fn spectrum_ref(
    q: f64,
    k_max: usize,
    length: f64,
    output: Option<&Path>,
) -> Result<(), CliError> {
    let csv = spectrum_csv(q, k_max, length)?;
    if let Some(path) = output {
        let dir = path
            .parent()
            .filter(|d| !d.as_os_str().is_empty())
            .unwrap_or(Path::new("."));
        let name = path
            .file_name()
            .and_then(|n| n.to_str())
            .ok_or_else(|| CliError::Config(format!("invalid output path {}", path.display())))?;
        write_atomic(dir, name, &csv)?;
    }
    print!("{csv}");
    Ok(())
}

pub enum SolveTarget {
    Lambda(f64),
    Rho(f64),
}

fn report(key: &str, value: impl std::fmt::Display) {
    println!("{key}={value}");
}

fn report_f(key: &str, value: f64) {
    println!("{key}={value:?}");
}

fn pair_row(csv: &mut Csv, outcome: &str, e: &EigenPair) {
    csv.row(&[
        Cell::Text(outcome),
        Cell::Num(e.lambda),
        Cell::Num(e.rho),
        Cell::Num(e.level),
        Cell::Num(e.residual),
        Cell::Int(e.sign_changes),
        Cell::Int(e.iterations),
    ]);
}

const PAIR_COLUMNS: [&str; 7] = [
    "outcome",
    "lambda",
    "rho",
    "level",
    "residual",
    "sign_changes",
    "iterations",
];

fn eigenfunction_csv(e: &EigenPair, pq: PQParams) -> Csv {
    let u = e.original_function(pq);
    let nodes = e.u.mesh().nodes();
    match e.formulation {
        Formulation::Direct => {
            let mut csv = Csv::new(&["x", "u"]);
            for (i, &x) in nodes.iter().enumerate() {
                csv.row(&[Cell::Num(x), Cell::Num(u.node_value(i))]);
            }
            csv
        }
        Formulation::Transformed => {
            let mut csv = Csv::new(&["x", "u", "w"]);
            for (i, &x) in nodes.iter().enumerate() {
                csv.row(&[
                    Cell::Num(x),
                    Cell::Num(u.node_value(i)),
                    Cell::Num(e.u.node_value(i)),
                ]);
            }
            csv
        }
    }
}

fn print_pair(e: &EigenPair) {
    report_f("lambda", e.lambda);
    report_f("rho", e.rho);
    report_f("level", e.level);
    report_f("residual", e.residual);
    report("sign_changes", e.sign_changes);
    report("iterations", e.iterations);
}

fn emit_pair(cfg: &RunConfig, pq: PQParams, e: &EigenPair) -> Result<(), CliError> {
    let mut csv = Csv::new(&PAIR_COLUMNS);
    pair_row(&mut csv, "Eigen", e);
    let a = write_atomic(&cfg.output_dir, "solve.csv", csv.as_str())?;
    let b = write_atomic(
        &cfg.output_dir,
        "eigenfunction.csv",
        eigenfunction_csv(e, pq).as_str(),
    )?;
    report("outcome", "Eigen");
    print_pair(e);
    report("files", format!("{},{}", a.display(), b.display()));
    Ok(())
}

fn emit_no_solution(cfg: &RunConfig, outcome: &str, lambda: f64) -> Result<(), CliError> {
    let mut csv = Csv::new(&PAIR_COLUMNS);
    csv.row(&[
        Cell::Text(outcome),
        Cell::Num(lambda),
        Cell::Num(0.0),
        Cell::Num(0.0),
        Cell::Num(f64::NAN),
        Cell::Int(0),
        Cell::Int(0),
    ]);
    let path = write_atomic(&cfg.output_dir, "solve.csv", csv.as_str())?;
    report("outcome", outcome);
    report_f("lambda", lambda);
    report("files", path.display());
    Ok(())
}

pub fn solve(
    cfg: &RunConfig,
    target: SolveTarget,
    mode: usize,
    direct: bool,
    perturbation: f64,
) -> Result<(), CliError> {
    cfg.validate()?;
    if mode == 0 {
        return Err(CliError::Config("mode indices start at 1".into()));
    }
    let pq = cfg.pq()?;
    let mesh = cfg.mesh()?;
    let solver = pqlap::SolverConfig {
        perturbation,
        ..cfg.solver()
    };
    match target {
        SolveTarget::Rho(rho) => {
            let e = if direct || pq.regime() == Regime::FromZero {
                solve_fixed_rho(mode, rho, pq, &mesh, &solver)?
            } else {
                solve_w_equation(mode, rho, pq, &mesh, &solver)?
            };
            emit_pair(cfg, pq, &e)
        }
        SolveTarget::Lambda(lambda) if mode == 1 => match pq.regime() {
            Regime::FromZero => match solve_first_global(lambda, pq, &mesh, &solver)? {
                FirstOutcome::Eigen(e) => emit_pair(cfg, pq, &e),
                FirstOutcome::ConvergedToZero { norm_1p, .. } => {
                    emit_no_solution(cfg, "ConvergedToZero", lambda)?;
                    report_f("norm1p", norm_1p);
                    Ok(())
                }
            },
            Regime::FromInfinity => match solve_first_nehari(lambda, pq, &mesh, &solver) {
                Ok(e) => emit_pair(cfg, pq, &e),
                Err(Error::NotProjectable { .. })
                    if lambda <= qlap_eigenvalue(1, pq.q(), mesh.length())? =>
                {
                    emit_no_solution(cfg, "NotProjectable", lambda)
                }
                Err(e) => Err(e.into()),
            },
        },
        SolveTarget::Lambda(lambda) => {
            let mut modes = multiplicity_solve(lambda, pq, &mesh, &solver)?;
            if modes.len() < mode {
                return Err(CliError::NonConvergence(format!(
                    "λ = {lambda} does not exceed λ_{mode}({}) = {}: no mode-{mode} solution",
                    pq.q(),
                    qlap_eigenvalue(mode, pq.q(), mesh.length())?
                )));
            }
            let e = modes.swap_remove(mode - 1)?;
            emit_pair(cfg, pq, &e)
        }
    }
}

const BRANCH_COLUMNS: [&str; 8] = [
    "rho",
    "lambda",
    "level",
    "norm1p",
    "norm1q",
    "sign_changes",
    "iterations",
    "residual",
];

fn branch_csv(b: &Branch) -> Csv {
    let mut csv = Csv::new(&BRANCH_COLUMNS);
    for pt in &b.points {
        csv.row(&[
            Cell::Num(pt.rho),
            Cell::Num(pt.lambda),
            Cell::Num(pt.level),
            Cell::Num(pt.norm1p),
            Cell::Num(pt.norm1q),
            Cell::Int(pt.sign_changes),
            Cell::Int(pt.iterations),
            Cell::Num(pt.residual),
        ]);
    }
    csv
}

/// A traced branch, partial when the trace broke.
struct Traced {
    mode: usize,
    branch: Option<Branch>,
    error: Option<String>,
}

fn trace(cfg: &RunConfig, mode: usize) -> Result<Traced, CliError> {
    let (pq, mesh, grid) = (cfg.pq()?, cfg.mesh()?, cfg.grid()?);
    Ok(match trace_branch(mode, pq, &grid, &mesh, &cfg.solver()) {
        Ok(b) => Traced {
            mode,
            branch: Some(b),
            error: None,
        },
        Err(Error::BranchBroken {
            index,
            rho,
            partial,
            source,
        }) => {
            if matches!(*source, Error::InfeasibleNodalPattern { .. }) {
                return Err((*source).into());
            }
            Traced {
                mode,
                branch: (!partial.points.is_empty()).then_some(*partial),
                error: Some(format!(
                    "branch broken at point {index} (rho = {rho:e}): {source}"
                )),
            }
        }
        Err(e @ Error::InfeasibleNodalPattern { .. }) => return Err(e.into()),
        Err(e) => Traced {
            mode,
            branch: None,
            error: Some(e.to_string()),
        },
    })
}

fn write_branch(cfg: &RunConfig, t: &Traced) -> Result<Option<PathBuf>, CliError> {
    match &t.branch {
        Some(b) => Ok(Some(write_atomic(
            &cfg.output_dir,
            &format!("branch_k{}.csv", t.mode),
            branch_csv(b).as_str(),
        )?)),
        None => Ok(None),
    }
}

pub fn branch(cfg: &RunConfig, mode: Option<usize>) -> Result<(), CliError> {
    cfg.validate()?;
    let mode = mode.unwrap_or(cfg.modes[0]);
    if mode == 0 {
        return Err(CliError::Config("mode indices start at 1".into()));
    }
    let t = trace(cfg, mode)?;
    let path = write_branch(cfg, &t)?;
    report("mode", mode);
    if let Some(b) = &t.branch {
        report("points", b.points.len());
        match estimate_limit(b) {
            Ok(est) => {
                report_f("limit", est.limit);
                report_f("limit_uncertainty", est.uncertainty);
                report_f("limit_exponent", est.exponent);
            }
            Err(e) => report("limit", format!("unavailable ({e})")),
        }
        let pq = cfg.pq()?;
        report_f("reference", qlap_eigenvalue(mode, pq.q(), cfg.b - cfg.a)?);
    }
    if let Some(p) = path {
        report("files", p.display());
    }
    match t.error {
        Some(e) => Err(CliError::NonConvergence(format!("mode {mode}: {e}"))),
        None => Ok(()),
    }
}

pub fn diagram(cfg: &RunConfig) -> Result<(), CliError> {
    cfg.validate()?;
    let pq = cfg.pq()?;
    let length = cfg.b - cfg.a;
    let traced: Vec<Traced> = cfg
        .modes
        .par_iter()
        .map(|&k| trace(cfg, k))
        .collect::<Result<_, _>>()?;
    let mut series = Vec::new();
    let mut complete = 0;
    for t in &traced {
        if let Some(p) = write_branch(cfg, t)? {
            report("files", p.display());
        }
        match &t.error {
            Some(e) => eprintln!("warning: mode {}: {e}", t.mode),
            None => complete += 1,
        }
        if let Some(b) = &t.branch {
            series.push(Series {
                label: format!("k = {}", t.mode),
                points: b
                    .points
                    .iter()
                    .map(|pt| (pt.lambda, pt.bifurcation_norm(pq)))
                    .collect(),
            });
        }
    }
    let asymptotes = cfg
        .modes
        .iter()
        .map(|&k| Ok((format!("λ{k}"), qlap_eigenvalue(k, pq.q(), length)?)))
        .collect::<Result<Vec<_>, Error>>()?;
    let r = pq.p().max(pq.q());
    let d = Diagram {
        title: format!(
            "(p, q) = ({}, {}) on ({}, {})",
            pq.p(),
            pq.q(),
            cfg.a,
            cfg.b
        ),
        y_label: format!("‖u‖ in W^(1,{r})"),
        log_y: pq.regime() == Regime::FromInfinity,
        series,
        asymptotes,
    };
    let path = write_atomic(&cfg.output_dir, "diagram.svg", &svg::render(&d))?;
    report("files", path.display());
    report("complete_branches", complete);
    if complete == 0 {
        return Err(CliError::NonConvergence("no branch completed".into()));
    }
    Ok(())
}

pub fn multiplicity(cfg: &RunConfig, lambda: f64) -> Result<(), CliError> {
    cfg.validate()?;
    let (pq, mesh) = (cfg.pq()?, cfg.mesh()?);
    let modes = multiplicity_solve(lambda, pq, &mesh, &cfg.solver())?;
    let mut csv = Csv::new(&[
        "mode",
        "status",
        "lambda",
        "rho",
        "level",
        "residual",
        "sign_changes",
        "iterations",
    ]);
    let mut failed = Vec::new();
    for (i, r) in modes.iter().enumerate() {
        let k = i + 1;
        match r {
            Ok(e) => {
                csv.row(&[
                    Cell::Int(k),
                    Cell::Text("ok"),
                    Cell::Num(e.lambda),
                    Cell::Num(e.rho),
                    Cell::Num(e.level),
                    Cell::Num(e.residual),
                    Cell::Int(e.sign_changes),
                    Cell::Int(e.iterations),
                ]);
                write_atomic(
                    &cfg.output_dir,
                    &format!("multiplicity_mode{k}.csv"),
                    eigenfunction_csv(e, pq).as_str(),
                )?;
                println!(
                    "mode={k} rho={:?} level={:?} residual={:?} sign_changes={}",
                    e.rho, e.level, e.residual, e.sign_changes
                );
            }
            Err(e) => {
                csv.row(&[
                    Cell::Int(k),
                    Cell::Text(&e.to_string()),
                    Cell::Num(lambda),
                    Cell::Num(f64::NAN),
                    Cell::Num(f64::NAN),
                    Cell::Num(f64::NAN),
                    Cell::Int(0),
                    Cell::Int(0),
                ]);
                println!("mode={k} error={e}");
                failed.push(k);
            }
        }
    }
    let path = write_atomic(&cfg.output_dir, "multiplicity.csv", csv.as_str())?;
    report("modes", modes.len());
    report("files", path.display());
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::NonConvergence(format!("modes {failed:?} failed")))
    }
}

pub fn verify(cfg: &RunConfig, only: &[String]) -> Result<(), CliError> {
    cfg.validate()?;
    let vc = VerifyConfig {
        elements: cfg.elements,
        fine_elements: 4 * cfg.elements,
        seed: cfg.seed,
        solver: cfg.solver(),
    };
    let reports = run_criteria(&vc, only)?;
    let mut csv = Csv::new(&["index", "criterion", "status", "detail"]);
    for r in &reports {
        let status = if r.passed { "pass" } else { "fail" };
        csv.row(&[
            Cell::Int(r.index),
            Cell::Text(r.name),
            Cell::Text(status),
            Cell::Text(&r.detail),
        ]);
    }
    write_atomic(&cfg.output_dir, "verify.csv", csv.as_str())?;
    print!("{}", csv.as_str());
    let failed = reports.iter().filter(|r| !r.passed).count();
    if failed > 0 {
        for r in reports.iter().filter(|r| !r.passed) {
            eprintln!("failed: {} ({})", r.name, r.detail);
        }
        return Err(CliError::Verification(failed));
    }
    Ok(())
}
