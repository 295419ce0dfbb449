use std::path::Path;

use chebquad::bounds::{
    bound_report, kane_sup, r_interval, r_trig, stretched_exp_scaling, BoundReport, BoundsError, KaneOptions,
    ReportOptions, ScalingReport,
};
use chebquad::construct::{
    brute_force_min_n, kane_construct_with, solve_quadrature_with, transfer_nodes, verify as verify_rule,
    ConstructError, FaithfulOptions, Quadrature, SolveOptions, VerifyReport, BRUTE_CANDIDATES, BRUTE_TOL,
};
use chebquad::fit::{power_law, LinearFit};
use chebquad::weight::{Domain, WeightSpec, WINDOW_MASS_TOL};
use rayon::prelude::*;
use serde::Serialize;

use crate::output::{self, format_for, SCHEMA};
use crate::{BoundsArgs, BruteArgs, CliError, ConstructArgs, Format, ScalingArgs, VerifyArgs};

fn bounds_err(op: &'static str) -> impl Fn(BoundsError) -> CliError {
    move |e| match e {
        BoundsError::InvalidInput(_) => CliError::Usage(format!("{op}: {e}")),
        e => CliError::Numeric { op, message: e.to_string() },
    }
}

fn construct_err(op: &'static str) -> impl Fn(ConstructError) -> CliError {
    move |e| match e {
        ConstructError::InvalidInput(_)
        | ConstructError::DomainMismatch { .. }
        | ConstructError::Parse(_)
        | ConstructError::Bounds(BoundsError::InvalidInput(_)) => CliError::Usage(format!("{op}: {e}")),
        e => CliError::Numeric { op, message: e.to_string() },
    }
}

/// `--weight` takes inline JSON when the argument starts with `{`, a file path otherwise.
fn load_weight(arg: &str) -> Result<WeightSpec, CliError> {
    let text = if arg.trim_start().starts_with('{') {
        arg.to_string()
    } else {
        output::read_text(Path::new(arg))?
    };
    WeightSpec::from_json(&text).map_err(|e| CliError::Usage(format!("weight spec: {e}")))
}

fn check_degrees(n: &[usize]) -> Result<(), CliError> {
    if n.is_empty() {
        return Err(CliError::Usage("--n needs at least one degree".into()));
    }
    if n[0] == 0 || n.windows(2).any(|w| w[0] >= w[1]) {
        return Err(CliError::Usage(format!(
            "--n must be positive and strictly increasing, got {n:?}"
        )));
    }
    Ok(())
}

fn circle_weight(weight: &WeightSpec) -> Result<WeightSpec, CliError> {
    match weight.domain() {
        Domain::Circle => Ok(weight.clone()),
        Domain::Interval => weight.lift_to_circle().map_err(|e| CliError::Numeric {
            op: "lift_to_circle",
            message: e.to_string(),
        }),
    }
}

fn write_rows<J: Serialize, C: Serialize>(
    out: Option<&std::path::PathBuf>,
    format: Format,
    json: &J,
    csv_rows: &[C],
) -> Result<(), CliError> {
    let bytes = match format {
        Format::Json => output::json(json)?,
        Format::Csv => output::csv(csv_rows)?,
    };
    output::emit(out, &bytes)
}

#[derive(Serialize)]
struct Document<'a, T: Serialize> {
    schema: u32,
    weight: &'a WeightSpec,
    rows: &'a [T],
}

#[derive(Serialize)]
struct BoundsJsonRow<'a> {
    #[serde(flatten)]
    report: &'a BoundReport,
    tol: f64,
    budget: &'a str,
}

/// Fixed CSV layout of `bounds`; `upper` is `inf` when the weight vanishes off the exceptional set.
#[derive(Serialize)]
struct BoundsCsvRow {
    schema: u32,
    n: usize,
    r_value: f64,
    kane_sup: f64,
    kane_bound: u64,
    kane_low_confidence: bool,
    chain_bound: u64,
    upper: f64,
    lower_cert: Option<u64>,
    cert_ell: Option<u32>,
    doubling: Option<f64>,
    minimizer_x: f64,
    tol: f64,
    budget: String,
}

pub fn bounds(a: &BoundsArgs) -> Result<(), CliError> {
    check_degrees(&a.n)?;
    let weight = load_weight(&a.common.weight)?;
    let opts = ReportOptions {
        eta: a.eta,
        ell: a.ell,
        kane: KaneOptions {
            restarts: a.restarts,
            seed: a.common.seed,
            ..KaneOptions::default()
        },
        ..ReportOptions::default()
    };
    let budget = format!("{}x{}", opts.kane.restarts, opts.kane.iters);
    let reports: Vec<BoundReport> = a
        .n
        .par_iter()
        .map(|&n| bound_report(&weight, n, &opts))
        .collect::<Result<_, _>>()
        .map_err(bounds_err("bound_report"))?;
    let format = format_for(a.common.format, a.common.out.as_deref(), Format::Csv);
    let json_rows: Vec<BoundsJsonRow> = reports
        .iter()
        .map(|report| BoundsJsonRow {
            report,
            tol: WINDOW_MASS_TOL,
            budget: &budget,
        })
        .collect();
    let csv_rows: Vec<BoundsCsvRow> = reports
        .iter()
        .map(|r| BoundsCsvRow {
            schema: SCHEMA,
            n: r.n,
            r_value: r.r_value,
            kane_sup: r.kane_sup_estimate,
            kane_bound: r.kane_node_bound,
            kane_low_confidence: r.kane_low_confidence,
            chain_bound: r.chain_node_bound,
            upper: r.general_upper_bound.unwrap_or(f64::INFINITY),
            lower_cert: r.certificate_lower_bound,
            cert_ell: r.certificate_ell,
            doubling: r.doubling_estimate,
            minimizer_x: r.minimizer_x,
            tol: WINDOW_MASS_TOL,
            budget: budget.clone(),
        })
        .collect();
    let doc = Document {
        schema: SCHEMA,
        weight: &weight,
        rows: &json_rows,
    };
    write_rows(a.common.out.as_ref(), format, &doc, &csv_rows)
}

#[derive(Serialize)]
struct ConstructJson<'a> {
    schema: u32,
    #[serde(flatten)]
    quadrature: &'a Quadrature,
    node_count: usize,
    method: &'static str,
    tol: f64,
    budget: &'a str,
    residual: f64,
}

#[derive(Serialize)]
struct ConstructCsvRow {
    schema: u32,
    n: usize,
    node_count: usize,
    index: usize,
    node: f64,
    weight: f64,
    method: &'static str,
    tol: f64,
    budget: String,
    residual: f64,
}

struct Built {
    quadrature: Quadrature,
    residual: f64,
}

/// Builds a rule for the circle weight; interval rules are the cosine image of a rule for the lift.
fn build(a: &ConstructArgs, weight: &WeightSpec, circle: &WeightSpec, n: usize, tol: f64) -> Result<Built, CliError> {
    let kane = KaneOptions {
        seed: a.common.seed,
        ..KaneOptions::default()
    };
    let nodes = match a.nodes {
        Some(nodes) => nodes,
        None => {
            let report = kane_sup(circle, n, &kane).map_err(bounds_err("kane_sup"))?;
            report.node_bound as usize
        }
    };
    let rule = if a.faithful {
        let opts = FaithfulOptions {
            starts: a.restarts,
            seed: a.common.seed,
            tol,
            kane,
            ..FaithfulOptions::default()
        };
        kane_construct_with(circle, n, nodes, &opts)
            .map_err(construct_err("kane_construct"))?
            .quadrature
    } else {
        let opts = SolveOptions {
            restarts: a.restarts,
            seed: a.common.seed,
            tol,
            ..SolveOptions::default()
        };
        solve_quadrature_with(circle, n, nodes, None, &opts).map_err(construct_err("solve_quadrature"))?
    };
    let quadrature = match weight.domain() {
        Domain::Circle => rule,
        Domain::Interval => transfer_nodes(&rule),
    };
    let report = verify_rule(&quadrature, weight, tol).map_err(construct_err("verify"))?;
    if !report.accepted {
        return Err(CliError::Rejected(format!(
            "constructed rule for n = {n} failed verification (residual {:e} > {tol:e})",
            report.max_residual
        )));
    }
    Ok(Built {
        quadrature,
        residual: report.max_residual,
    })
}

pub fn construct(a: &ConstructArgs) -> Result<(), CliError> {
    check_degrees(&a.n)?;
    let weight = load_weight(&a.common.weight)?;
    let circle = circle_weight(&weight)?;
    let (method, tol, budget) = if a.faithful {
        let d = FaithfulOptions::default();
        ("hull", a.tol.unwrap_or(d.tol), format!("{}x{}", a.restarts, d.max_doublings))
    } else {
        let d = SolveOptions::default();
        ("least_squares", a.tol.unwrap_or(d.tol), format!("{}x{}", a.restarts, d.max_iter))
    };
    let built: Vec<Built> = a
        .n
        .par_iter()
        .map(|&n| build(a, &weight, &circle, n, tol))
        .collect::<Result<_, _>>()?;
    let docs: Vec<ConstructJson> = built
        .iter()
        .map(|b| ConstructJson {
            schema: SCHEMA,
            quadrature: &b.quadrature,
            node_count: b.quadrature.node_count(),
            method,
            tol,
            budget: &budget,
            residual: b.residual,
        })
        .collect();
    let csv_rows: Vec<ConstructCsvRow> = built
        .iter()
        .flat_map(|b| {
            let q = &b.quadrature;
            let budget = &budget;
            q.nodes().iter().enumerate().map(move |(index, &node)| ConstructCsvRow {
                schema: SCHEMA,
                n: q.degree(),
                node_count: q.node_count(),
                index,
                node,
                weight: q.equal_weight(),
                method,
                tol,
                budget: budget.clone(),
                residual: b.residual,
            })
        })
        .collect();
    let format = format_for(a.common.format, a.common.out.as_deref(), Format::Json);
    let out = a.common.out.as_ref();
    match (format, docs.as_slice()) {
        (Format::Json, [single]) => output::emit(out, &output::json(single)?),
        _ => write_rows(out, format, &docs, &csv_rows),
    }
}

fn parse_rules(text: &str) -> Result<Vec<Quadrature>, CliError> {
    let value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| CliError::Usage(format!("quadrature file: {e}")))?;
    let items = match value {
        serde_json::Value::Array(items) => items,
        v => vec![v],
    };
    if items.is_empty() {
        return Err(CliError::Usage("quadrature file holds no rules".into()));
    }
    items
        .into_iter()
        .map(|v| serde_json::from_value(v).map_err(|e| CliError::Usage(format!("quadrature file: {e}"))))
        .collect()
}

#[derive(Serialize)]
struct VerifyJson<'a> {
    schema: u32,
    reports: &'a [VerifyReport],
}

#[derive(Serialize)]
struct VerifyCsvRow {
    schema: u32,
    index: usize,
    degree: usize,
    node_count: usize,
    max_residual: f64,
    accepted: bool,
    tol: f64,
}

pub fn verify(a: &VerifyArgs) -> Result<(), CliError> {
    let weight = load_weight(&a.common.weight)?;
    let rules = parse_rules(&output::read_text(&a.quadrature)?)?;
    let reports: Vec<VerifyReport> = rules
        .iter()
        .map(|q| verify_rule(q, &weight, a.tol))
        .collect::<Result<_, _>>()
        .map_err(construct_err("verify"))?;
    let csv_rows: Vec<VerifyCsvRow> = rules
        .iter()
        .zip(&reports)
        .enumerate()
        .map(|(index, (q, r))| VerifyCsvRow {
            schema: SCHEMA,
            index,
            degree: r.degree,
            node_count: q.node_count(),
            max_residual: r.max_residual,
            accepted: r.accepted,
            tol: r.tol,
        })
        .collect();
    let format = format_for(a.common.format, a.common.out.as_deref(), Format::Json);
    let doc = VerifyJson {
        schema: SCHEMA,
        reports: &reports,
    };
    write_rows(a.common.out.as_ref(), format, &doc, &csv_rows)?;
    let rejected: Vec<usize> = reports
        .iter()
        .enumerate()
        .filter(|(_, r)| !r.accepted)
        .map(|(i, _)| i)
        .collect();
    if rejected.is_empty() {
        Ok(())
    } else {
        Err(CliError::Rejected(format!(
            "verify rejected rule(s) {rejected:?} at tolerance {:e}",
            a.tol
        )))
    }
}

#[derive(Serialize)]
struct StretchedCsvRow {
    schema: u32,
    alpha: f64,
    n: usize,
    log_n_hat: f64,
    m: usize,
    r: u32,
    node_forced: bool,
    predicted_exponent: f64,
    fitted_exponent: f64,
}

#[derive(Serialize)]
struct GrowthJson<'a> {
    schema: u32,
    weight: &'a WeightSpec,
    functional: &'static str,
    fitted_exponent: f64,
    fit: LinearFit,
    points: &'a [GrowthCsvRow],
}

#[derive(Clone, Serialize)]
struct GrowthCsvRow {
    schema: u32,
    n: usize,
    r_value: f64,
    minimizer_x: f64,
    fitted_exponent: f64,
    r_squared: f64,
    tol: f64,
}

pub fn scaling(a: &ScalingArgs) -> Result<(), CliError> {
    check_degrees(&a.n)?;
    if a.n.len() < 2 {
        return Err(CliError::Usage("an exponent fit needs at least two degrees".into()));
    }
    let format = format_for(a.format, a.out.as_deref(), Format::Csv);
    match (a.alpha, &a.weight) {
        (Some(alpha), None) => {
            let report = stretched_exp_scaling(alpha, &a.n).map_err(bounds_err("stretched_exp_scaling"))?;
            let rows: Vec<StretchedCsvRow> = report
                .points
                .iter()
                .map(|p| StretchedCsvRow {
                    schema: SCHEMA,
                    alpha,
                    n: p.n,
                    log_n_hat: p.log_n_hat,
                    m: p.m,
                    r: p.r,
                    node_forced: p.node_forced,
                    predicted_exponent: report.predicted_exponent,
                    fitted_exponent: report.fitted_exponent,
                })
                .collect();
            #[derive(Serialize)]
            struct Doc<'a> {
                schema: u32,
                #[serde(flatten)]
                report: &'a ScalingReport,
            }
            let doc = Doc {
                schema: SCHEMA,
                report: &report,
            };
            write_rows(a.out.as_ref(), format, &doc, &rows)
        }
        (None, Some(w)) => {
            let weight = load_weight(w)?;
            let (functional, values) = match weight.domain() {
                Domain::Circle => ("r_trig", a.n.par_iter().map(|&n| r_trig(&weight, n)).collect::<Result<Vec<_>, _>>()),
                Domain::Interval => (
                    "r_interval",
                    a.n.par_iter().map(|&n| r_interval(&weight, n)).collect::<Result<Vec<_>, _>>(),
                ),
            };
            let values = values.map_err(bounds_err(functional))?;
            let x: Vec<f64> = a.n.iter().map(|&n| n as f64).collect();
            let y: Vec<f64> = values.iter().map(|r| r.value).collect();
            let fit = power_law(&x, &y).map_err(|e| CliError::Numeric {
                op: "power_law",
                message: e.to_string(),
            })?;
            let rows: Vec<GrowthCsvRow> = a
                .n
                .iter()
                .zip(&values)
                .map(|(&n, r)| GrowthCsvRow {
                    schema: SCHEMA,
                    n,
                    r_value: r.value,
                    minimizer_x: r.minimizer,
                    fitted_exponent: fit.slope,
                    r_squared: fit.r_squared,
                    tol: WINDOW_MASS_TOL,
                })
                .collect();
            let doc = GrowthJson {
                schema: SCHEMA,
                weight: &weight,
                functional,
                fitted_exponent: fit.slope,
                fit,
                points: &rows,
            };
            write_rows(a.out.as_ref(), format, &doc, &rows)
        }
        _ => Err(CliError::Usage("scaling takes exactly one of --alpha and --weight".into())),
    }
}

#[derive(Clone, Serialize)]
struct BruteRow {
    schema: u32,
    n: usize,
    brute_min_n: Option<usize>,
    kane_bound: u64,
    n_max: usize,
    grid: usize,
    tol: f64,
    budget: usize,
}

pub fn brute(a: &BruteArgs) -> Result<(), CliError> {
    check_degrees(&a.n)?;
    let weight = load_weight(&a.common.weight)?;
    let circle = circle_weight(&weight)?;
    let kane = KaneOptions {
        seed: a.common.seed,
        ..KaneOptions::default()
    };
    let rows: Vec<BruteRow> = a
        .n
        .par_iter()
        .map(|&n| {
            let found = brute_force_min_n(&circle, n, a.nodes, a.grid).map_err(construct_err("brute_force_min_n"))?;
            let bound = kane_sup(&circle, n, &kane).map_err(bounds_err("kane_sup"))?;
            Ok(BruteRow {
                schema: SCHEMA,
                n,
                brute_min_n: found,
                kane_bound: bound.node_bound,
                n_max: a.nodes,
                grid: a.grid,
                tol: BRUTE_TOL,
                budget: BRUTE_CANDIDATES,
            })
        })
        .collect::<Result<_, CliError>>()?;
    let format = format_for(a.common.format, a.common.out.as_deref(), Format::Csv);
    let doc = Document {
        schema: SCHEMA,
        weight: &weight,
        rows: &rows,
    };
    write_rows(a.common.out.as_ref(), format, &doc, &rows)
}
