use std::fmt;
use std::io;

use rayon::prelude::*;
use serde_json::json;

use sqs_core::metrology::{
    fisher_information, fisher_vs_squeezing as squeezing_sweep, qfi_disordered, qfi_equilibrium,
    qfi_ness, QfiResult, SqueezeBranch, PROBABILITY_FLOOR, SWEEP_TAIL_THRESHOLD,
};
use sqs_core::model::{ness_critical_gs, phase_diagram as classify_grid, solve_ness, DiagramMode, Phase};
use sqs_core::numerics::DiffConfig;
use sqs_core::validation::{run_all, Level as CheckLevel};

use crate::table::{Cell, Manifest, Sink, Table};
use crate::{Branch, FisherArgs, Level, Mode, PhaseDiagramArgs, QfiArgs, SqueezingArgs, Status, ValidateArgs};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Io(io::Error),
}

impl CliError {
    pub fn status(&self) -> Status {
        match self {
            CliError::Usage(_) => Status::Usage,
            CliError::Io(_) => Status::PartialFailure,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(msg) => write!(f, "{msg}"),
            CliError::Io(e) => write!(f, "cannot write output: {e}"),
        }
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Io(e)
    }
}

type Outcome = Result<Status, CliError>;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn finish(sink: &Sink, table: &Table, manifest: Manifest) -> Outcome {
    let failures = manifest.failures;
    sink.write(table)?;
    sink.write_manifest(&manifest)?;
    if failures > 0 {
        log::warn!("{failures} point(s) failed; see the error column");
        Ok(Status::PartialFailure)
    } else {
        Ok(Status::Ok)
    }
}

fn positive(name: &str, values: &[f64]) -> Result<(), CliError> {
    if values.iter().any(|v| !(*v > 0.0)) {
        return Err(usage(format!("{name} values must be positive")));
    }
    Ok(())
}

pub fn phase_diagram(args: &PhaseDiagramArgs, tol: f64, sink: &Sink) -> Outcome {
    let (mode, axis2) = match args.mode {
        Mode::Equilibrium => (DiagramMode::Equilibrium, args.t.as_ref()),
        Mode::Ness => (DiagramMode::Ness, args.gamma.as_ref()),
    };
    let axis2 = axis2.ok_or_else(|| usage(format!("--{} is required", mode.axis2_name().to_lowercase())))?;
    if args.mode == Mode::Ness && args.t.is_some() {
        return Err(usage("--t applies to equilibrium mode only"));
    }
    let grid = classify_grid(mode, &args.g.points(), &axis2.points(), tol).map_err(|e| usage(e.to_string()))?;

    let mut table = Table::new(vec!["g", "axis2", "phase", "omega", "h", "alpha"]);
    let mut failures = 0;
    for rec in &grid.records {
        match &rec.state {
            Ok(s) => table.push(vec![
                Cell::Num(rec.g),
                Cell::Num(rec.axis2),
                Cell::Text(s.phase.as_str().into()),
                Cell::Num(s.omega),
                Cell::Num(s.h),
                Cell::Num(s.alpha),
            ]),
            Err(e) => {
                log::warn!("{e}");
                failures += 1;
                table.push(vec![
                    Cell::Num(rec.g),
                    Cell::Num(rec.axis2),
                    Cell::Text("error".into()),
                    Cell::Empty,
                    Cell::Empty,
                    Cell::Empty,
                ]);
            }
        }
    }
    let mut line = Table::new(vec!["g", "axis2"]);
    for p in &grid.critical_line {
        line.push(vec![Cell::Num(p.g), Cell::Num(p.axis2)]);
    }
    sink.write_companion("critical_line", &line)?;
    let manifest = Manifest::new(
        "phase-diagram",
        json!(args),
        json!({ "root": tol, "critical": sqs_core::model::CRITICAL_TOL }),
        failures,
    );
    finish(sink, &table, manifest)
}

fn qfi_cells(g: f64, q: &QfiResult, phase: Phase) -> Vec<Cell> {
    vec![
        Cell::Num(g),
        Cell::Num(q.value),
        Cell::Num(q.term_displacement),
        Cell::Num(q.term_squeezing),
        Cell::Text(phase.as_str().into()),
    ]
}

fn divergent_cells(g: f64) -> Vec<Cell> {
    vec![
        Cell::Num(g),
        Cell::Num(f64::INFINITY),
        Cell::Num(f64::INFINITY),
        Cell::Empty,
        Cell::Text(Phase::Critical.as_str().into()),
    ]
}

fn zero_cells(g: f64, phase: Phase) -> Vec<Cell> {
    vec![Cell::Num(g), Cell::Num(0.0), Cell::Num(0.0), Cell::Num(0.0), Cell::Text(phase.as_str().into())]
}

fn error_cells(g: f64) -> Vec<Cell> {
    vec![Cell::Num(g), Cell::Empty, Cell::Empty, Cell::Empty, Cell::Text("error".into())]
}

fn qfi_equilibrium_row(g: f64, tol: f64) -> (Vec<Cell>, bool) {
    if (g - 4.0).abs() <= tol {
        return (divergent_cells(g), false);
    }
    let result = if g < 4.0 { qfi_equilibrium(g) } else { qfi_disordered(g) };
    match result {
        Ok(q) if g < 4.0 => (qfi_cells(g, &q, Phase::Ordered), false),
        Ok(q) => (qfi_cells(g, &q, Phase::Disordered), false),
        Err(e) => {
            log::warn!("qfi at g = {g}: {e}");
            (error_cells(g), true)
        }
    }
}

fn qfi_ness_row(g: f64, gamma: f64, tol: f64) -> (Vec<Cell>, bool) {
    if let Ok((lo, hi)) = ness_critical_gs(gamma) {
        if (g - lo).abs() <= tol || (g - hi).abs() <= tol {
            return (divergent_cells(g), false);
        }
    }
    if 4.0 * g <= gamma * gamma {
        return (zero_cells(g, Phase::Disordered), false);
    }
    let outcome = solve_ness(g, gamma).and_then(|s| match s.phase {
        Phase::Ordered => qfi_ness(g, gamma).map(Some),
        _ => Ok(None),
    });
    match outcome {
        Ok(Some(q)) => (qfi_cells(g, &q, Phase::Ordered), false),
        Ok(None) => match solve_ness(g, gamma).map(|s| s.phase) {
            Ok(Phase::Critical) => (divergent_cells(g), false),
            _ => (zero_cells(g, Phase::Disordered), false),
        },
        Err(e) => {
            log::warn!("qfi at g = {g}, gamma = {gamma}: {e}");
            (error_cells(g), true)
        }
    }
}

pub fn qfi(args: &QfiArgs, tol: f64, sink: &Sink) -> Outcome {
    let gs = args.g.points();
    positive("g", &gs)?;
    let (mut table, rows): (Table, Vec<(Vec<Cell>, bool)>) = match args.mode {
        Mode::Equilibrium => {
            if args.gamma.is_some() {
                return Err(usage("--gamma applies to ness mode only"));
            }
            let table = Table::new(vec!["g", "qfi", "term_displacement", "term_squeezing", "phase"]);
            (table, gs.par_iter().map(|&g| qfi_equilibrium_row(g, tol)).collect())
        }
        Mode::Ness => {
            let gammas = args.gamma.as_ref().ok_or_else(|| usage("--gamma is required in ness mode"))?.points();
            if gammas.iter().any(|v| !(*v >= 0.0)) {
                return Err(usage("gamma values must be non-negative"));
            }
            let table = Table::new(vec!["g", "qfi", "term_displacement", "term_squeezing", "phase", "gamma"]);
            let pairs: Vec<(f64, f64)> = gammas.iter().flat_map(|&gm| gs.iter().map(move |&g| (gm, g))).collect();
            let rows = pairs
                .par_iter()
                .map(|&(gamma, g)| {
                    let (mut cells, failed) = qfi_ness_row(g, gamma, tol);
                    cells.push(Cell::Num(gamma));
                    (cells, failed)
                })
                .collect();
            (table, rows)
        }
    };
    let mut failures = 0;
    for (cells, failed) in rows {
        failures += failed as usize;
        table.push(cells);
    }
    let manifest = Manifest::new("qfi", json!(args), json!({ "critical": tol }), failures);
    finish(sink, &table, manifest)
}

pub fn fisher(args: &FisherArgs, sink: &Sink) -> Outcome {
    let gs = args.g.points();
    let omegas = args.omega.points();
    if gs.iter().any(|g| !(*g > 0.0 && *g < 4.0)) {
        return Err(usage("fisher needs every g inside the ordered phase (0, 4)"));
    }
    positive("omega", &omegas)?;
    if !(args.tail > 0.0 && args.tail < 1.0) {
        return Err(usage("--tail must lie in (0, 1)"));
    }
    let pairs: Vec<(f64, f64)> = gs.iter().flat_map(|&g| omegas.iter().map(move |&om| (g, om))).collect();
    let rows: Vec<(Vec<Cell>, bool)> = pairs
        .par_iter()
        .map(|&(g, om)| {
            match fisher_information(g, om, DiffConfig::default_at(g), args.tail) {
                Ok(f) => (
                    vec![
                        Cell::Num(g),
                        Cell::Num(om),
                        Cell::Num(f.value),
                        Cell::Num(f.value / f.normalized),
                        Cell::Num(f.normalized),
                        Cell::Empty,
                    ],
                    false,
                ),
                Err(e) => {
                    log::warn!("fisher at g = {g}, Omega = {om}: {e}");
                    (
                        vec![Cell::Num(g), Cell::Num(om), Cell::Empty, Cell::Empty, Cell::Empty, Cell::Text(e.to_string())],
                        true,
                    )
                }
            }
        })
        .collect();
    let mut table = Table::new(vec!["g", "omega_meas", "fisher", "qfi", "normalized", "error"]);
    let mut failures = 0;
    for (cells, failed) in rows {
        failures += failed as usize;
        table.push(cells);
    }
    let manifest = Manifest::new(
        "fisher",
        json!(args),
        json!({ "tail": args.tail, "probability_floor": PROBABILITY_FLOOR }),
        failures,
    );
    finish(sink, &table, manifest)
}

pub fn fisher_vs_squeezing(args: &SqueezingArgs, sink: &Sink) -> Outcome {
    if !(args.g > 0.0 && args.g < 4.0) {
        return Err(usage("g must lie inside the ordered phase (0, 4)"));
    }
    let rs = args.r.points();
    if rs.iter().any(|r| !(*r >= 0.0)) {
        return Err(usage("r values must be non-negative"));
    }
    let branch = match args.branch {
        Branch::Below => SqueezeBranch::Below,
        Branch::Above => SqueezeBranch::Above,
    };
    let rows: Vec<(Vec<Cell>, bool)> = rs
        .par_iter()
        .map(|&r| match squeezing_sweep(args.g, &[r], branch) {
            Ok(pts) => (
                vec![Cell::Num(r), Cell::Num(pts[0].omega_meas), Cell::Num(pts[0].fisher), Cell::Empty],
                false,
            ),
            Err(e) => {
                log::warn!("fisher at g = {}, r = {r}: {e}", args.g);
                (vec![Cell::Num(r), Cell::Empty, Cell::Empty, Cell::Text(e.to_string())], true)
            }
        })
        .collect();
    let mut table = Table::new(vec!["r", "omega_meas", "fisher", "error"]);
    let mut failures = 0;
    for (cells, failed) in rows {
        failures += failed as usize;
        table.push(cells);
    }
    let manifest = Manifest::new(
        "fisher-vs-squeezing",
        json!(args),
        json!({ "tail": SWEEP_TAIL_THRESHOLD, "probability_floor": PROBABILITY_FLOOR }),
        failures,
    );
    finish(sink, &table, manifest)
}

pub fn validate(args: &ValidateArgs, sink: &Sink) -> Outcome {
    let level = match args.level {
        Level::Quick => CheckLevel::Quick,
        Level::Full => CheckLevel::Full,
    };
    let outcomes = run_all(level);
    let mut table = Table::new(vec!["id", "name", "status", "detail"]);
    let mut failed = 0;
    for o in &outcomes {
        let status = if o.passed { "PASS" } else { "FAIL" };
        eprintln!("{status} {:>2} {:<28} {}", o.id, o.name, o.detail);
        failed += (!o.passed) as usize;
        table.push(vec![
            Cell::Text(o.id.to_string()),
            Cell::Text(o.name.into()),
            Cell::Text(status.into()),
            Cell::Text(o.detail.clone()),
        ]);
    }
    eprintln!("{} of {} checks passed", outcomes.len() - failed, outcomes.len());
    if sink.out.is_some() {
        sink.write(&table)?;
        sink.write_manifest(&Manifest::new("validate", json!(args), json!({}), failed))?;
    }
    Ok(if failed == 0 { Status::Ok } else { Status::ValidationFailed })
}
