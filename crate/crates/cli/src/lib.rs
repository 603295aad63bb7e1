//! `kinship-lr`: evaluates identification scenarios (name-frequency and
//! lineage-marker evidence) into likelihood ratios, sweeps their parameters,
//! compares candidate pedigrees and runs the inference oracle.
//!
//! [`run`] is the whole program; `main` only forwards the process arguments.

pub mod evaluate;
pub mod problem;
pub mod report;
pub mod resolve;
pub mod scenario;

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use kinship_core::evidence::{sweep, SweepAxis};
use kinship_core::factor::oracle::{check_case, random_case, GeneratorConfig, OracleCase};
use kinship_core::oobn::{document_from_network, print};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::evaluate::{evaluate, pedigree_posterior};
use crate::problem::{CliError, Problem};
use crate::report::{
    render_human, AxisValue, HypothesesReport, NamedLr, Report, SweepReport, SweepRowReport,
    Warnings, SCHEMA,
};
use crate::resolve::{resolve, resolve_scenario, Resolved};
use crate::scenario::{load, parse_axis, set_path, AxisSpec, Loaded, Scenario};

/// Absolute tolerance of the oracle comparison.
pub const ORACLE_TOLERANCE: f64 = 1e-9;

#[derive(Parser, Debug)]
#[command(
    name = "kinship-lr",
    version,
    about = "Likelihood ratios for identification evidence"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Output {
    /// Also write the full report as JSON to this path.
    #[arg(long, value_name = "PATH")]
    machine: Option<PathBuf>,
    /// Print a generation time in the human-readable report.
    #[arg(long)]
    timestamps: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check a scenario and every file it references.
    Validate { scenario: PathBuf },
    /// Evaluate a scenario's evidence items and their combination.
    Eval {
        scenario: PathBuf,
        #[command(flatten)]
        output: Output,
    },
    /// Evaluate over the Cartesian product of parameter grids.
    Sweep {
        scenario: PathBuf,
        /// `path=v1,v2,...`; repeatable. Defaults to the scenario's [[sweep]] axes.
        #[arg(long = "axis", value_name = "PATH=V1,V2,...")]
        axes: Vec<String>,
        #[command(flatten)]
        output: Output,
    },
    /// Posterior over the scenario's candidate pedigrees.
    Pedigrees {
        scenario: PathBuf,
        #[command(flatten)]
        output: Output,
    },
    /// Compare variable elimination with enumeration on random networks.
    Oracle {
        /// Where to write the first counterexample as a `.oobn` fixture.
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u64).range(1..))]
        count: u64,
        /// Also write a JSON summary to this path.
        #[arg(long, value_name = "PATH")]
        machine: Option<PathBuf>,
    },
}

/// Runs the program and returns its exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{text}");
                    0
                }
                _ => {
                    let _ = write!(err, "{text}");
                    1
                }
            };
        }
    };
    match dispatch(cli.command, out, err) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "{e}");
            e.exit_code()
        }
    }
}

fn dispatch(cmd: Command, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, CliError> {
    match cmd {
        Command::Validate { scenario } => {
            let loaded = load(&scenario)?;
            let (_, problems) = resolve(&loaded)?;
            print_problems(err, &problems);
            let _ = writeln!(out, "{}: ok", loaded.display);
            Ok(0)
        }
        Command::Eval { scenario, output } => {
            let loaded = load(&scenario)?;
            let report = eval_report(&loaded, err)?;
            emit(&report, &output, out)
        }
        Command::Sweep {
            scenario,
            axes,
            output,
        } => {
            let loaded = load(&scenario)?;
            let axes = if axes.is_empty() {
                loaded.scenario.sweep.clone()
            } else {
                axes.iter()
                    .map(|a| parse_axis(a))
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(CliError::Usage)?
            };
            let report = sweep_report(&loaded, &axes, err)?;
            emit(&report, &output, out)
        }
        Command::Pedigrees { scenario, output } => {
            let loaded = load(&scenario)?;
            let (resolved, problems) = resolve(&loaded)?;
            print_problems(err, &problems);
            let (peds, warnings) = pedigree_posterior(&resolved)?;
            let mut report = base_report("pedigrees", &loaded, &resolved, warnings);
            report.pedigrees = Some(peds);
            emit(&report, &output, out)
        }
        Command::Oracle {
            out: fixture,
            seed,
            count,
            machine,
        } => oracle(seed, count, fixture.as_deref(), machine.as_deref(), out),
    }
}

fn print_problems(err: &mut dyn Write, problems: &[Problem]) {
    for p in problems {
        let _ = writeln!(err, "{p}");
    }
}

fn base_report(command: &str, loaded: &Loaded, r: &Resolved, warnings: Warnings) -> Report {
    Report {
        schema: SCHEMA,
        command: command.to_string(),
        scenario_file: loaded.display.clone(),
        scenario: loaded.scenario.clone(),
        hypotheses: HypothesesReport {
            null_label: r.hypotheses.null_label.clone(),
            alt_label: r.hypotheses.alt_label.clone(),
            prior_odds: r.hypotheses.prior_odds,
            prior_odds_default: r.prior_odds_default,
            conditionally_independent: r.independent,
        },
        evaluation: None,
        pedigrees: None,
        sweep: None,
        warnings,
    }
}

/// Loads, resolves and evaluates a scenario into an `eval` report.
pub fn eval_report(loaded: &Loaded, err: &mut dyn Write) -> Result<Report, CliError> {
    let (resolved, problems) = resolve(loaded)?;
    print_problems(err, &problems);
    let (evaluation, warnings) = evaluate(&resolved, &loaded.scenario)?;
    let mut report = base_report("eval", loaded, &resolved, warnings);
    report.evaluation = Some(evaluation);
    Ok(report)
}

/// Evaluates the scenario at every point of the grid spanned by `axes`.
pub fn sweep_report(
    loaded: &Loaded,
    axes: &[AxisSpec],
    err: &mut dyn Write,
) -> Result<Report, CliError> {
    if axes.is_empty() {
        return Err(CliError::Usage(
            "sweep needs at least one --axis path=v1,v2,... (or [[sweep]] axes in the scenario)"
                .into(),
        ));
    }
    for a in axes {
        if a.values.is_empty() {
            return Err(CliError::Usage(format!("axis `{}` has no values", a.path)));
        }
        let mut probe = loaded.tree.clone();
        set_path(&mut probe, &a.path, a.values[0].clone()).map_err(CliError::Usage)?;
    }
    let (resolved, problems) = resolve(loaded)?;
    print_problems(err, &problems);

    let grid: Vec<SweepAxis<toml::Value>> = axes
        .iter()
        .map(|a| SweepAxis {
            path: a.path.clone(),
            values: a.values.clone(),
        })
        .collect();
    let rows = sweep(
        &grid,
        |point: &[(String, toml::Value)]| -> Result<_, CliError> {
            let mut tree = loaded.tree.clone();
            for (path, value) in point {
                set_path(&mut tree, path, value.clone()).map_err(CliError::Usage)?;
            }
            let scenario: Scenario =
                toml::Value::Table(tree)
                    .try_into()
                    .map_err(|e: toml::de::Error| {
                        CliError::Usage(format!("at sweep point {point:?}: {}", e.message()))
                    })?;
            let (r, _) = resolve_scenario(loaded, &scenario)?;
            evaluate(&r, &scenario)
        },
    )?;

    let mut warnings = resolved.warnings.clone();
    let mut table = Vec::with_capacity(rows.len());
    for row in rows {
        let (ev, w) = row.result;
        warnings.extend(&w);
        table.push(SweepRowReport {
            indices: row.indices,
            point: row
                .point
                .into_iter()
                .map(|(path, value)| AxisValue { path, value })
                .collect(),
            items: ev
                .items
                .iter()
                .map(|i| NamedLr {
                    id: i.id.clone(),
                    lr: i.lr,
                })
                .collect(),
            overall: ev.overall,
        });
    }
    let mut report = base_report("sweep", loaded, &resolved, warnings);
    report.sweep = Some(SweepReport {
        axes: axes.to_vec(),
        rows: table,
    });
    Ok(report)
}

fn emit(report: &Report, output: &Output, out: &mut dyn Write) -> Result<i32, CliError> {
    let ts = output
        .timestamps
        .then(|| chrono::Utc::now().format("%Y-%m-%dT%H:%M:%SZ").to_string());
    let _ = write!(out, "{}", render_human(report, ts.as_deref()));
    if let Some(path) = &output.machine {
        write_file(path, &report.to_json())?;
    }
    Ok(0)
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| {
        CliError::Problems(vec![Problem::error(
            &path.display().to_string(),
            problem::ProblemKind::Io,
            kinship_core::Location::new(1, 1),
            "E_IO",
            format!("cannot write: {e}"),
        )])
    })
}

#[derive(Serialize)]
struct Counterexample {
    case: u64,
    what: String,
    elimination: f64,
    enumeration: f64,
    fixture: String,
}

#[derive(Serialize)]
struct OracleReport {
    schema: &'static str,
    command: &'static str,
    seed: u64,
    count: u64,
    checked: u64,
    passed: bool,
    counterexample: Option<Counterexample>,
}

/// A failing case as a loadable document, with the query in comments.
pub fn counterexample_fixture(case: &OracleCase, header: &str) -> String {
    let net = &case.network;
    let name = |v: kinship_core::VarId| net.variable(v).name.replace('.', "_");
    let evidence: Vec<String> = case
        .evidence
        .iter()
        .map(|(v, s)| format!("{}={}", name(v), net.variable(v).states[s]))
        .collect();
    let targets: Vec<String> = case.targets.iter().map(|&t| name(t)).collect();
    format!(
        "# {header}\n# evidence: {}\n# targets: {}\n{}",
        evidence.join(", "),
        targets.join(", "),
        print(&document_from_network(net, "Counterexample"))
    )
}

fn oracle(
    seed: u64,
    count: u64,
    fixture: Option<&Path>,
    machine: Option<&Path>,
    out: &mut dyn Write,
) -> Result<i32, CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cfg = GeneratorConfig::default();
    let mut failure = None;
    let mut checked = 0;
    for i in 0..count {
        let case = random_case(&mut rng, &cfg);
        checked += 1;
        let found = check_case(&case, ORACLE_TOLERANCE)
            .map_err(|e| CliError::Evaluation(format!("oracle case {i}: {e}")))?;
        if let Some(m) = found {
            let header = format!(
                "oracle counterexample: seed {seed}, case {i}; {} by elimination {} vs enumeration {}",
                m.what, m.elimination, m.enumeration
            );
            failure = Some(Counterexample {
                case: i,
                what: m.what,
                elimination: m.elimination,
                enumeration: m.enumeration,
                fixture: counterexample_fixture(&case, &header),
            });
            break;
        }
    }
    match &failure {
        None => {
            let _ = writeln!(out, "oracle: {count} random networks from seed {seed}: elimination agrees with enumeration");
        }
        Some(c) => {
            let _ = write!(out, "{}", c.fixture);
            if let Some(p) = fixture {
                write_file(p, &c.fixture)?;
            }
        }
    }
    if let Some(p) = machine {
        let report = OracleReport {
            schema: SCHEMA,
            command: "oracle",
            seed,
            count,
            checked,
            passed: failure.is_none(),
            counterexample: failure.as_ref().map(|c| Counterexample {
                case: c.case,
                what: c.what.clone(),
                elimination: c.elimination,
                enumeration: c.enumeration,
                fixture: c.fixture.clone(),
            }),
        };
        let mut text = serde_json::to_string_pretty(&report).expect("oracle report serializes");
        text.push('\n');
        write_file(p, &text)?;
    }
    Ok(if failure.is_none() { 0 } else { 1 })
}
