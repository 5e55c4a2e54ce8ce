//! One function per subcommand.

use infoacq::bellman::{bellman_residual, envelope_check, policy_gap, value_iteration, GridConfig};
use infoacq::simulate::{simulate_paths, SimConfig};
use infoacq::statics::statics_report;
use infoacq::{steady_report, trace_policy, Params, Report};
use serde::Serialize;

use crate::args::{Axis, Command, Format, RunConfig, SweepSpec};
use crate::output::{emit, num, opt_num, to_csv, to_json, write_atomic};
use crate::svg::{render, Panel};
use crate::CliError;

/// Relative step for the finite-difference statics.
pub const FD_STEP: f64 = 1e-6;
/// Largest accepted analytic-vs-FD relative discrepancy.
pub const FD_TOLERANCE: f64 = 1e-4;
/// Envelope-slope tolerance away from the kink.
pub const ENVELOPE_TOLERANCE: f64 = 1e-3;
/// Relative tolerance on `Psi(P*) = C*/(1 - delta)`.
pub const VALUE_IDENTITY_TOLERANCE: f64 = 1e-3;
/// Greedy policy must sit within this many grid spacings of `min(P, V*)`.
pub const POLICY_SPACINGS: f64 = 5.0;

/// What a command produced. `failure` is set when the command ran to
/// completion but a check it performs did not pass.
#[derive(Debug)]
pub struct CommandOutput {
    pub stdout: Option<String>,
    pub failure: Option<CliError>,
}

impl CommandOutput {
    fn ok(stdout: Option<String>) -> Self {
        Self { stdout, failure: None }
    }
}

pub fn execute(cfg: &RunConfig) -> Result<CommandOutput, CliError> {
    match cfg.command {
        Command::Solve => cmd_solve(cfg),
        Command::Trace => cmd_trace(cfg),
        Command::Simulate => cmd_simulate(cfg),
        Command::Statics => cmd_statics(cfg),
        Command::Verify => cmd_verify(cfg),
        Command::Sweep => cmd_sweep(cfg),
    }
}

const REPORT_HEADER: [&str; 9] = [
    "v_star",
    "x_star",
    "p_star",
    "c_star",
    "rho_star",
    "t_star",
    "v_zero",
    "cost_bound",
    "assumption_holds",
];

pub fn cmd_solve(cfg: &RunConfig) -> Result<CommandOutput, CliError> {
    let rep = steady_report(&cfg.params, cfg.options.tol)?;
    let text = match cfg.options.format {
        Format::Json => to_json(&rep)?,
        Format::Csv => to_csv(
            &REPORT_HEADER,
            [vec![
                num(rep.v_star),
                num(rep.x_star),
                num(rep.p_star),
                num(rep.c_star),
                num(rep.rho_star),
                rep.t_star.map(|t| t.to_string()).unwrap_or_default(),
                num(rep.v_zero),
                num(rep.cost_bound),
                rep.assumption_holds.to_string(),
            ]],
        )?,
    };
    Ok(CommandOutput::ok(emit(cfg.options.out.as_deref(), text)?))
}

pub fn cmd_trace(cfg: &RunConfig) -> Result<CommandOutput, CliError> {
    let trace = trace_policy(&cfg.params, cfg.options.horizon, cfg.options.tol)?;
    let text = match cfg.options.format {
        Format::Json => to_json(&trace)?,
        Format::Csv => to_csv(
            &["t", "p_t", "v_t", "x_t", "cost_t"],
            trace
                .rows
                .iter()
                .map(|r| vec![r.t.to_string(), num(r.p_t), num(r.v_t), num(r.x_t), num(r.cost_t)]),
        )?,
    };
    Ok(CommandOutput::ok(emit(cfg.options.out.as_deref(), text)?))
}

pub fn cmd_simulate(cfg: &RunConfig) -> Result<CommandOutput, CliError> {
    let sim = SimConfig {
        horizon: cfg.options.horizon,
        n_paths: cfg.options.paths,
        seed: cfg.options.seed,
    };
    let stats = simulate_paths(&cfg.params, &sim)?;
    let text = match cfg.options.format {
        Format::Json => to_json(&stats)?,
        Format::Csv => to_csv(
            &["t", "p_t", "v_t", "x_t", "cost_t", "mse_emp", "mse_se", "cost_emp"],
            stats.per_period.iter().map(|s| {
                vec![
                    s.t.to_string(),
                    num(s.p_t),
                    num(s.v_t),
                    num(s.x_t),
                    num(s.cost_t),
                    num(s.mse_emp),
                    opt_num(s.mse_se),
                    num(s.cost_emp),
                ]
            }),
        )?,
    };
    Ok(CommandOutput::ok(emit(cfg.options.out.as_deref(), text)?))
}

pub fn cmd_statics(cfg: &RunConfig) -> Result<CommandOutput, CliError> {
    let rep = statics_report(&cfg.params, FD_STEP)?;
    let text = match cfg.options.format {
        Format::Json => to_json(&StaticsDoc::from(&rep))?,
        Format::Csv => to_csv(
            &["quantity", "primitive", "analytic", "finite_diff", "rel_discrepancy", "pass"],
            rep.analytic.iter().map(|(q, p, a)| {
                vec![
                    q.name().to_string(),
                    p.name().to_string(),
                    num(a),
                    num(rep.finite_diff.get(q, p)),
                    num(rep.rel_discrepancy.get(q, p)),
                    (rep.rel_discrepancy.get(q, p) <= FD_TOLERANCE).to_string(),
                ]
            }),
        )?,
    };
    let stdout = emit(cfg.options.out.as_deref(), text)?;
    let mut problems: Vec<String> = rep
        .sign_audit
        .iter()
        .filter(|v| !v.pass)
        .map(|v| format!("{} (value {}, expected {})", v.clause, v.value, v.expected))
        .collect();
    if rep.max_rel_discrepancy > FD_TOLERANCE {
        problems.push(format!(
            "analytic vs finite difference discrepancy {} > {FD_TOLERANCE}",
            rep.max_rel_discrepancy
        ));
    }
    Ok(CommandOutput {
        stdout,
        failure: (!problems.is_empty()).then(|| CliError::Check(problems.join("; "))),
    })
}

/// Flat, named form of the statics report for JSON output.
#[derive(Serialize)]
struct StaticsDoc {
    step: f64,
    max_rel_discrepancy: f64,
    entries: Vec<StaticsEntry>,
    sign_audit: Vec<infoacq::statics::SignVerdict<f64>>,
}

#[derive(Serialize)]
struct StaticsEntry {
    quantity: &'static str,
    primitive: &'static str,
    analytic: f64,
    finite_diff: f64,
    rel_discrepancy: f64,
    pass: bool,
}

impl From<&infoacq::Statics> for StaticsDoc {
    fn from(r: &infoacq::Statics) -> Self {
        Self {
            step: r.step,
            max_rel_discrepancy: r.max_rel_discrepancy,
            entries: r
                .analytic
                .iter()
                .map(|(q, p, a)| StaticsEntry {
                    quantity: q.name(),
                    primitive: p.name(),
                    analytic: a,
                    finite_diff: r.finite_diff.get(q, p),
                    rel_discrepancy: r.rel_discrepancy.get(q, p),
                    pass: r.rel_discrepancy.get(q, p) <= FD_TOLERANCE,
                })
                .collect(),
            sign_audit: r.sign_audit.clone(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub name: &'static str,
    pub value: Option<f64>,
    pub threshold: Option<f64>,
    pub pass: bool,
    pub note: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifySummary {
    pub grid_points: usize,
    pub iterations_used: usize,
    pub final_sweep_delta: f64,
    pub checks: Vec<CheckResult>,
}

/// Runs value iteration and compares it against the closed form.
pub fn verify_summary(params: &Params, grid_points: usize, tol: f64) -> Result<VerifySummary, CliError> {
    let rep = steady_report(params, tol)?;
    let gcfg = GridConfig::for_params(params, grid_points);
    let grid = value_iteration(params, &gcfg)?;
    let d = params.delta();
    let h = grid.spacing();
    let mut checks = Vec::new();

    let residual = bellman_residual(params, &grid);
    let bound = gcfg.sweep_tol * (1.0 + d / (1.0 - d));
    checks.push(CheckResult {
        name: "bellman_residual",
        value: Some(residual),
        threshold: Some(bound),
        pass: residual <= bound,
        note: "max |T(Psi) - Psi| over nodes".into(),
    });

    let probes: Vec<f64> = (0..=400).map(|i| gcfg.p_min + (gcfg.p_max - gcfg.p_min) * i as f64 / 400.0).collect();
    let gap = policy_gap(&grid, rep.v_star, &probes)?;
    checks.push(CheckResult {
        name: "policy_agreement",
        value: Some(gap),
        threshold: Some(POLICY_SPACINGS * h),
        pass: gap <= POLICY_SPACINGS * h,
        note: "max |greedy(P) - min(P, V*)| over 401 probes".into(),
    });

    match envelope_check(params, &grid, rep.v_star) {
        Some(e) => checks.push(CheckResult {
            name: "envelope",
            value: Some(e),
            threshold: Some(ENVELOPE_TOLERANCE),
            pass: e < ENVELOPE_TOLERANCE,
            note: "max relative error of Psi' vs c/P^2 for P > 1.05 V*".into(),
        }),
        None => checks.push(CheckResult {
            name: "envelope",
            value: None,
            threshold: Some(ENVELOPE_TOLERANCE),
            pass: true,
            note: "skipped: no interior node above 1.05 V*".into(),
        }),
    }

    if rep.assumption_holds && rep.p_star >= gcfg.p_min && rep.p_star <= gcfg.p_max {
        let psi = grid.psi_at(params, rep.p_star);
        let err = (psi - rep.c_star / (1.0 - d)).abs() / psi;
        checks.push(CheckResult {
            name: "value_identity",
            value: Some(err),
            threshold: Some(VALUE_IDENTITY_TOLERANCE),
            pass: err <= VALUE_IDENTITY_TOLERANCE,
            note: "relative gap between Psi(P*) and C*/(1 - delta)".into(),
        });
    } else {
        checks.push(CheckResult {
            name: "value_identity",
            value: None,
            threshold: Some(VALUE_IDENTITY_TOLERANCE),
            pass: true,
            note: "skipped: cost bound fails, no interior steady state".into(),
        });
    }

    Ok(VerifySummary {
        grid_points,
        iterations_used: grid.iterations_used,
        final_sweep_delta: grid.final_sweep_delta,
        checks,
    })
}

pub fn cmd_verify(cfg: &RunConfig) -> Result<CommandOutput, CliError> {
    let summary = verify_summary(&cfg.params, cfg.options.grid, cfg.options.tol)?;
    let mut text = String::new();
    for c in &summary.checks {
        text.push_str(&format!(
            "{} {:<17} value={} threshold={} ({})\n",
            if c.pass { "PASS" } else { "FAIL" },
            c.name,
            c.value.map(|v| format!("{v:.3e}")).unwrap_or_else(|| "-".into()),
            c.threshold.map(|v| format!("{v:.3e}")).unwrap_or_else(|| "-".into()),
            c.note
        ));
    }
    if let Some(path) = &cfg.options.out {
        let doc = match cfg.options.format {
            Format::Json => to_json(&summary)?,
            Format::Csv => to_csv(
                &["check", "value", "threshold", "pass"],
                summary
                    .checks
                    .iter()
                    .map(|c| vec![c.name.to_string(), opt_num(c.value), opt_num(c.threshold), c.pass.to_string()]),
            )?,
        };
        write_atomic(path, doc.as_bytes())?;
    }
    let failed: Vec<&str> = summary.checks.iter().filter(|c| !c.pass).map(|c| c.name).collect();
    Ok(CommandOutput {
        stdout: Some(text),
        failure: (!failed.is_empty()).then(|| CliError::Check(failed.join(", "))),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub value: f64,
    pub v_star: f64,
    pub x_star: f64,
    pub c_star: f64,
    pub assumption_holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepTable {
    pub axis: &'static str,
    pub rows: Vec<SweepRow>,
}

fn set_axis(params: &Params, axis: Axis, value: f64) -> Result<Params, CliError> {
    params
        .with(|raw| match axis {
            Axis::Rho => raw.rho = value,
            Axis::Delta => raw.delta = value,
            Axis::C => raw.c = value,
            Axis::SigmaSq => raw.sigma_sq = value,
        })
        .map_err(|e| CliError::Usage(format!("sweep value {value} for {} out of range: {e}", axis.name())))
}

/// Steady state at `steps` evenly spaced values of one primitive, others held
/// fixed. Every point is validated before anything is solved.
pub fn sweep_table(params: &Params, spec: &SweepSpec, tol: f64) -> Result<SweepTable, CliError> {
    let n = spec.steps;
    let values: Vec<f64> = (0..n)
        .map(|i| {
            if i + 1 == n {
                spec.to
            } else {
                spec.from + (spec.to - spec.from) * i as f64 / (n - 1) as f64
            }
        })
        .collect();
    let points = values
        .iter()
        .map(|&v| set_axis(params, spec.axis, v))
        .collect::<Result<Vec<_>, _>>()?;
    let rows = values
        .iter()
        .zip(&points)
        .map(|(&value, p)| {
            let r: Report = steady_report(p, tol)?;
            Ok(SweepRow {
                value,
                v_star: r.v_star,
                x_star: r.x_star,
                c_star: r.c_star,
                assumption_holds: r.assumption_holds,
            })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    Ok(SweepTable { axis: spec.axis.name(), rows })
}

/// One chart per output column, solid where the cost bound holds.
pub fn sweep_svg(table: &SweepTable) -> String {
    let series = |f: fn(&SweepRow) -> f64| table.rows.iter().map(|r| (r.value, f(r), r.assumption_holds)).collect();
    render(&[
        Panel { title: "Steady-state posterior variance", x_label: table.axis, y_label: "v_star", points: series(|r| r.v_star) },
        Panel { title: "Steady-state precision", x_label: table.axis, y_label: "x_star", points: series(|r| r.x_star) },
        Panel { title: "Steady-state cost", x_label: table.axis, y_label: "c_star", points: series(|r| r.c_star) },
    ])
}

pub fn cmd_sweep(cfg: &RunConfig) -> Result<CommandOutput, CliError> {
    let spec = cfg
        .options
        .sweep
        .as_ref()
        .ok_or_else(|| CliError::Usage("sweep needs --axis, --from and --to".into()))?;
    let table = sweep_table(&cfg.params, spec, cfg.options.tol)?;
    let text = match cfg.options.format {
        Format::Json => to_json(&table)?,
        Format::Csv => to_csv(
            &[table.axis, "v_star", "x_star", "c_star", "assumption_holds"],
            table.rows.iter().map(|r| {
                vec![num(r.value), num(r.v_star), num(r.x_star), num(r.c_star), r.assumption_holds.to_string()]
            }),
        )?,
    };
    if let Some(path) = &cfg.options.svg {
        write_atomic(path, sweep_svg(&table).as_bytes())?;
    }
    Ok(CommandOutput::ok(emit(cfg.options.out.as_deref(), text)?))
}
