//! Command-line front end.
//!
//! Exit codes: 0 success, 1 input error (I/O, schema, flags), 2 physics-check
//! failure or anomalous post-selection.

use std::fs;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;

use crate::analysis::{
    coherence, decompose, kd_distribution, negativity, path_weak_value, population_difference,
    postselection_basis, pps_operator, weak_value_sum_check, PpsEnsemble,
};
use crate::circuit::three_box::{self, BS1, BS2, BS3, BS4};
use crate::circuit::Circuit;
use crate::error::Error;
use crate::montecarlo::{
    coupling_sweep, sample_detections, weak_pointer_run, PointerConfig, PointerRunResult, ShotConfig,
    DEFAULT_COUPLING, DEFAULT_SHOTS, DEFAULT_WIDTH,
};
use crate::qcore::{inner, Operator, TOL};
use crate::report::Report;
use crate::scenario::{Scenario, ScenarioFile};

#[derive(Debug, Parser)]
#[command(name = "tribox", version, about = "Pre/post-selected interferometer analysis")]
pub struct Cli {
    #[command(flatten)]
    pub output: OutputArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    /// Output format.
    #[arg(long, value_enum, default_value_t = Format::Table, global = true)]
    pub format: Format,
    /// Write the report to a file instead of standard output.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Table,
    Json,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Reproduce and self-check the three-box interferometer numbers.
    Paradox,
    /// Exact analysis of a scenario file.
    Analyze(AnalyzeArgs),
    /// Monte Carlo detection and weak-pointer simulation.
    Mc(McArgs),
    /// Print the built-in three-box scenario as JSON.
    ExportScenario,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    pub scenario: PathBuf,
    /// Stage at which to evaluate (defaults to the input stage).
    #[arg(long)]
    pub stage: Option<String>,
    /// Weak values of every rail projector at the stage, and their sum.
    #[arg(long)]
    pub weak_values: bool,
    /// Kirkwood-Dirac table: stage rails against output rails.
    #[arg(long)]
    pub kd: bool,
    /// Decompose `--operator` over the rail bases of stages LEFT and RIGHT.
    #[arg(long, num_args = 2, value_names = ["LEFT", "RIGHT"])]
    pub decompose: Option<Vec<String>>,
    /// Operator for `--decompose`: `pps`, `identity` or `proj:RAIL`.
    #[arg(long, default_value = "pps")]
    pub operator: String,
    /// Normalized pre/post-selected operator in the stage's rail basis.
    #[arg(long)]
    pub pps: bool,
}

#[derive(Debug, Args)]
pub struct McArgs {
    pub scenario: PathBuf,
    #[arg(long, default_value_t = DEFAULT_SHOTS)]
    pub shots: u64,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
    /// Pointer coupling strength.
    #[arg(long, default_value_t = DEFAULT_COUPLING)]
    pub g: f64,
    /// Pointer width.
    #[arg(long, default_value_t = DEFAULT_WIDTH)]
    pub sigma: f64,
    /// Rail whose projector the pointer probes.
    #[arg(long)]
    pub path: Option<String>,
    /// Stage of `--path` (defaults to the first interior stage naming it).
    #[arg(long)]
    pub stage: Option<String>,
    /// Comma-separated ascending couplings; replaces `--g`.
    #[arg(long, value_delimiter = ',')]
    pub sweep: Option<Vec<f64>>,
}

/// A failed command with its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
    /// Report produced before the failure was detected, if any.
    pub report: Option<Report>,
}

fn input_error(message: impl std::fmt::Display) -> Failure {
    Failure {
        code: 1,
        message: message.to_string(),
        report: None,
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::AnomalousPostselection { .. } => 2,
            _ => 1,
        };
        Failure {
            code,
            message: e.to_string(),
            report: None,
        }
    }
}

/// What a successful command prints.
pub enum Output {
    Report(Report),
    Text(String),
}

pub fn execute(cli: &Cli) -> Result<Output, Failure> {
    match &cli.command {
        Command::Paradox => check_paradox(&three_box::circuit()).map(Output::Report),
        Command::Analyze(args) => analyze(args).map(Output::Report),
        Command::Mc(args) => montecarlo(args).map(Output::Report),
        Command::ExportScenario => Ok(Output::Text(ScenarioFile::three_box().to_json() + "\n")),
    }
}

/// Parse arguments, run, print and return the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let (output, code) = match execute(&cli) {
        Ok(output) => (Some(output), 0),
        Err(failure) => {
            eprintln!("error: {}", failure.message);
            (failure.report.map(Output::Report), failure.code)
        }
    };
    if let Some(output) = output {
        let text = match output {
            Output::Report(r) => match cli.output.format {
                Format::Table => r.render_table(),
                Format::Json => r.to_json() + "\n",
            },
            Output::Text(t) => t,
        };
        match &cli.output.out {
            Some(path) => {
                if let Err(e) = fs::write(path, text) {
                    eprintln!("error: writing {}: {e}", path.display());
                    return 1;
                }
            }
            None => print!("{text}"),
        }
    }
    code
}

/// Run [`paradox_report`] on `c`; any missed target is an exit-code-2 failure.
pub fn check_paradox(c: &Circuit) -> Result<Report, Failure> {
    let report = paradox_report(c)?;
    if report.all_pass() {
        return Ok(report);
    }
    let names: Vec<_> = report.failures().map(|e| e.quantity.clone()).collect();
    Err(Failure {
        code: 2,
        message: format!("self-check failed: {}", names.join(", ")),
        report: Some(report),
    })
}

fn c64(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// Every analytic number of the three-box interferometer, each checked
/// against its target. Takes the circuit so that a miswired build can be fed
/// through the same checks.
pub fn paradox_report(c: &Circuit) -> Result<Report, Error> {
    let mut r = Report::new("paradox");
    let psi = three_box::psi(c);
    let f = three_box::f(c);
    let third: f64 = 1.0 / 3.0;
    let sqrt2 = 2f64.sqrt();

    let after_bs1 = c.propagate(&psi, BS1)?;
    for (rail, expected) in [("1", third.sqrt()), ("S1", (2.0 * third).sqrt())] {
        let i = c.rail(BS1, rail)?.index;
        r.check(format!("eq1.amplitude.{rail}"), BS1, after_bs1.amp(i), c64(expected), TOL);
    }

    let d2 = c.rail_state(BS3, "D2")?;
    r.check("eq2.overlap.D2_psi", BS3, inner(&d2, &c.propagate(&psi, BS3)?)?, c64(0.0), TOL);
    let s1 = c.rail_state(BS1, "S1")?;
    r.check("eq3.overlap.f_S1", BS1, inner(&c.back_propagate(&f, BS1)?, &s1)?, c64(0.0), TOL);

    let e = PpsEnsemble::new(c.clone(), psi, f)?;
    r.check("overlap.f_psi", BS2, e.transition_amplitude(), c64(third), TOL);

    let mut sum = Complex64::new(0.0, 0.0);
    for (tag, rail, expected) in [("eq4", "1", 1.0), ("eq6", "2", 1.0), ("eq5", "3", -1.0)] {
        let w = path_weak_value(&e, BS2, rail)?.value;
        sum += w;
        r.check(format!("{tag}.weak_value.path{rail}"), BS2, w, c64(expected), TOL);
    }
    r.check("fig2.weak_value.sum", BS2, sum, c64(1.0), TOL);

    let eq7_lhs = c.transport_operator(&population_difference(c, BS2, "2", "3")?, BS2, BS1)?;
    let eq7_rhs = coherence(c, BS1, "D1", "S1")?;
    r.check_real("eq7.identity.residual", BS1, eq7_lhs.max_abs_diff(&eq7_rhs)?, 0.0, TOL);
    let eq8_lhs = c.transport_operator(&population_difference(c, BS2, "1", "3")?, BS2, BS3)?;
    let eq8_rhs = coherence(c, BS3, "D2", "S2")?;
    r.check_real("eq8.identity.residual", BS3, eq8_lhs.max_abs_diff(&eq8_rhs)?, 0.0, TOL);

    let tables = [
        ("eq9", BS1, ["1", "S1", "D1"], ["1", "D1", "S1"], ("1", "S1", "D1")),
        ("eq10", BS3, ["2", "S2", "D2"], ["2", "D2", "S2"], ("2", "S2", "D2")),
    ];
    for (tag, stage, left_order, right_order, (path, ghost_l, ghost_r)) in tables {
        let left = ordered_basis(c, stage, &left_order)?;
        let right = ordered_basis(c, stage, &right_order)?;
        let d = decompose(&pps_operator(&e, stage)?, &left, &right)?;
        for (l, rr, coeff) in d.cells() {
            let expected = match (l, rr) {
                (l, rr) if l == path && rr == path => 1.0,
                (l, rr) if l == ghost_l && rr == path => sqrt2,
                (l, rr) if l == path && rr == ghost_r => sqrt2,
                (l, rr) if l == ghost_l && rr == ghost_r => 2.0,
                _ => 0.0,
            };
            r.check(format!("{tag}.coeff.{l}_{rr}"), stage, coeff, c64(expected), TOL);
        }
    }
    let eq9_op = pps_operator(&e, BS1)?;
    let carried = c.transport_operator(&eq9_op, BS1, BS3)?;
    r.check_real(
        "eq9_to_eq10.transport.residual",
        BS3,
        carried.max_abs_diff(&pps_operator(&e, BS3)?)?,
        0.0,
        TOL,
    );

    let paths = c.rail_basis(BS2, BS2)?;
    let post = postselection_basis(&e, BS2)?;
    let kd = kd_distribution(&e, &paths, &post, BS2)?;
    for (a, b, expected) in [
        ("1", "f", 1.0 / 9.0),
        ("2", "f", 1.0 / 9.0),
        ("3", "f", -1.0 / 9.0),
        ("1", "not_f.psi", 2.0 / 9.0),
        ("2", "not_f.psi", 2.0 / 9.0),
        ("3", "not_f.psi", 4.0 / 9.0),
        ("1", "not_f.0", 0.0),
        ("2", "not_f.0", 0.0),
        ("3", "not_f.0", 0.0),
    ] {
        // a miswired circuit can change the post-selection basis; record a miss
        let q = kd.q(a, b).unwrap_or(Complex64::new(f64::NAN, f64::NAN));
        r.check(format!("kd.q.{a}_{b}"), BS2, q, c64(expected), TOL);
    }
    r.check("kd.total", BS2, kd.total(), c64(1.0), TOL);
    r.check_real("kd.negativity", BS2, negativity(&kd), 1.0 / 9.0, TOL);
    r.check_real("kd.imaginarity", BS2, kd.imaginarity(), 0.0, TOL);

    let ports = c.rail_basis(BS4, BS2)?;
    let kd_ports = kd_distribution(&e, &paths, &ports, BS2)?;
    r.check_real("kd.output_ports.negativity", BS2, negativity(&kd_ports), 2.0 / 9.0, TOL);
    Ok(r)
}

fn ordered_basis(c: &Circuit, stage: &str, order: &[&str]) -> Result<crate::qcore::Basis, Error> {
    let elements = order
        .iter()
        .map(|name| Ok((name.to_string(), c.rail_state(stage, name)?)))
        .collect::<Result<Vec<_>, Error>>()?;
    crate::qcore::Basis::new(stage, elements)
}

fn load_scenario(path: &PathBuf) -> Result<Scenario, Failure> {
    let text = fs::read_to_string(path).map_err(|e| input_error(format!("{}: {e}", path.display())))?;
    ScenarioFile::from_json(&text)
        .and_then(|f| f.build())
        .map_err(input_error)
}

fn analyze(args: &AnalyzeArgs) -> Result<Report, Failure> {
    let s = load_scenario(&args.scenario)?;
    let c = &s.circuit;
    let stage = args
        .stage
        .clone()
        .unwrap_or_else(|| s.psi.stage().unwrap_or(c.first_stage()).to_string());
    c.stage_index(&stage)
        .map_err(|_| input_error(format!("--stage: unknown stage `{stage}`")))?;
    let e = PpsEnsemble::new(c.clone(), s.psi.clone(), s.f.clone())?;

    let mut r = Report::new("analyze");
    r.value("overlap.f_psi", &stage, e.transition_amplitude(), TOL);
    r.real("postselection.probability", &stage, e.success_probability(), TOL);

    let nothing_requested = !args.weak_values && !args.kd && !args.pps && args.decompose.is_none();
    if args.weak_values || nothing_requested {
        for rail in c.labels(&stage)? {
            let w = path_weak_value(&e, &stage, rail)?;
            r.value(format!("weak_value.path{rail}"), &stage, w.value, TOL);
        }
        let basis = c.rail_basis(&stage, &stage)?;
        r.value("weak_value.sum", &stage, weak_value_sum_check(&e, &basis, &stage)?, TOL);
    }
    if args.pps || nothing_requested {
        let basis = c.rail_basis(&stage, &stage)?;
        let d = decompose(&pps_operator(&e, &stage)?, &basis, &basis)?;
        for (l, rr, coeff) in d.cells() {
            r.value(format!("pps.coeff.{l}_{rr}"), &stage, coeff, TOL);
        }
    }
    if let Some(stages) = &args.decompose {
        let op = select_operator(&e, &args.operator, &stage)?;
        let basis_at = |s: &String| {
            c.rail_basis(s, &stage)
                .map_err(|_| input_error(format!("--decompose: unknown stage `{s}`")))
        };
        let left = basis_at(&stages[0])?;
        let right = basis_at(&stages[1])?;
        let d = decompose(&op, &left, &right)?;
        for (l, rr, coeff) in d.cells() {
            r.value(format!("decompose.{}.{l}_{rr}", args.operator), &stage, coeff, TOL);
        }
        r.real(
            "decompose.reconstruction.residual",
            &stage,
            d.reconstruct().max_abs_diff(&op)?,
            TOL,
        );
    }
    if args.kd {
        let paths = c.rail_basis(&stage, &stage)?;
        let ports = c.rail_basis(c.last_stage(), &stage)?;
        let kd = kd_distribution(&e, &paths, &ports, &stage)?;
        for a in kd.intermediate_labels() {
            for b in kd.final_labels() {
                r.value(format!("kd.q.{a}_{b}"), &stage, kd.q(a, b).expect("labels"), TOL);
            }
        }
        r.value("kd.total", &stage, kd.total(), TOL);
        r.real("kd.negativity", &stage, negativity(&kd), TOL);
        r.real("kd.imaginarity", &stage, kd.imaginarity(), TOL);
        let post = postselection_basis(&e, &stage)?;
        let kd_post = kd_distribution(&e, &paths, &post, &stage)?;
        r.real("kd.postselection.negativity", &stage, negativity(&kd_post), TOL);
    }
    Ok(r)
}

fn select_operator(e: &PpsEnsemble, name: &str, stage: &str) -> Result<Operator, Failure> {
    let c = e.circuit();
    match name {
        "pps" => Ok(pps_operator(e, stage)?),
        "identity" => Ok(Operator::identity(c.rails())),
        _ => match name.strip_prefix("proj:") {
            Some(rail) => c
                .projector(stage, rail)
                .map_err(|err| input_error(format!("--operator: {err}"))),
            None => Err(input_error(format!(
                "--operator: expected `pps`, `identity` or `proj:RAIL`, got `{name}`"
            ))),
        },
    }
}

fn montecarlo(args: &McArgs) -> Result<Report, Failure> {
    let s = load_scenario(&args.scenario)?;
    let c = &s.circuit;
    let cfg = ShotConfig::new(args.shots, args.seed).with_workers(args.workers);
    let mut r = Report::new("mc");
    let last = c.last_stage();

    let counts = sample_detections(c, &s.psi, &cfg)?;
    let n = counts.shots as f64;
    for ((label, &count), &p) in counts.labels.iter().zip(&counts.counts).zip(&counts.probabilities) {
        r.real(format!("detect.count.{label}"), last, count as f64, 0.0);
        let tol = 3.0 * (p * (1.0 - p) / n).sqrt();
        r.check_real(format!("detect.fraction.{label}"), last, count as f64 / n, p, tol);
    }
    let (chi2, dof) = counts.chi_squared();
    r.real("detect.chi2", last, chi2, 0.0);
    r.real("detect.chi2.dof", last, dof as f64, 0.0);

    let Some(path) = &args.path else {
        return Ok(r);
    };
    let stage = match &args.stage {
        Some(st) => st.clone(),
        None => interior_stage_with(c, &s, path)?,
    };
    let pc = PointerConfig::path(c, &stage, path, args.g, args.sigma)
        .map_err(|e| input_error(format!("--path: {e}")))?;
    let e = PpsEnsemble::new(c.clone(), s.psi.clone(), s.f.clone())?;
    match &args.sweep {
        None => {
            let run = weak_pointer_run(&e, &pc, &cfg).map_err(config_failure)?;
            pointer_rows(&mut r, "pointer", &run);
        }
        Some(gs) => {
            let runs = coupling_sweep(&e, &pc, gs, &cfg).map_err(config_failure)?;
            for (i, run) in runs.iter().enumerate() {
                pointer_rows(&mut r, &format!("sweep[{i}]"), run);
            }
        }
    }
    Ok(r)
}

fn config_failure(e: Error) -> Failure {
    match e {
        Error::InvalidConfig(m) => input_error(m),
        other => other.into(),
    }
}

fn interior_stage_with(c: &Circuit, s: &Scenario, rail: &str) -> Result<String, Failure> {
    let first = c.stage_index(s.psi.stage().unwrap_or(c.first_stage()))?;
    let last = c.stage_index(s.f.stage().unwrap_or(c.last_stage()))?;
    c.stage_names()
        .enumerate()
        .filter(|&(i, _)| first < i && i < last)
        .find(|(_, st)| c.rail(st, rail).is_ok())
        .map(|(_, st)| st.to_string())
        .ok_or_else(|| input_error(format!("--path: no interior stage has a rail named `{rail}`")))
}

fn pointer_rows(r: &mut Report, prefix: &str, run: &PointerRunResult) {
    let stage = run.config.stage.as_str();
    r.real(format!("{prefix}.g"), stage, run.config.coupling, 0.0);
    r.real(format!("{prefix}.sigma"), stage, run.config.width, 0.0);
    r.real(format!("{prefix}.accepted_shots"), stage, run.accepted_shots as f64, 0.0);
    r.real(format!("{prefix}.mean_shift"), stage, run.mean_shift, 0.0);
    r.real(format!("{prefix}.stderr"), stage, run.stderr, 0.0);
    let tol = (3.0 * run.estimate_stderr).max(1e-3);
    if run.weak_regime {
        r.check_real(format!("{prefix}.estimate"), stage, run.estimate, run.exact_weak_value, tol);
    } else {
        r.check_real(format!("{prefix}.estimate"), stage, run.estimate, run.exact_estimate, tol);
    }
    r.real(format!("{prefix}.estimate_stderr"), stage, run.estimate_stderr, 0.0);
    r.real(format!("{prefix}.exact_weak_value"), stage, run.exact_weak_value, TOL);
    r.real(format!("{prefix}.exact_estimate"), stage, run.exact_estimate, TOL);
    let acc_tol = 3.0 * (run.exact_acceptance * (1.0 - run.exact_acceptance) / run.shots as f64).sqrt();
    r.check_real(
        format!("{prefix}.acceptance"),
        stage,
        run.accepted_fraction(),
        run.exact_acceptance,
        acc_tol,
    );
}
