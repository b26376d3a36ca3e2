use std::fs;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::Value;

use lincontrol::model::sample_csv;
use lincontrol::oct::{build_lq, regular_order1_analytic, singular_solution, solve_regular};
use lincontrol::report::{error_json, summary_json, sweep_lambda, table1, table2, validate, DEFAULT_SWEEP};
use lincontrol::sta::{solve_family, FamilyKind};
use lincontrol::{ControlProblem, Error, ProtocolSolution, Result};

#[derive(Parser, Debug)]
#[command(name = "lincontrol", version, about = "Control protocols for a damped linear system")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Basis size N of an ansatz family.
    #[arg(long, global = true)]
    order: Option<usize>,

    /// Order n of the boundary conditions.
    #[arg(long, global = true)]
    n: Option<usize>,

    /// Regularization weight; a comma-separated list for `sweep-lambda`.
    #[arg(long, global = true)]
    lambda: Option<String>,

    /// Rate of the exponential family.
    #[arg(long, global = true)]
    k: Option<f64>,

    /// Protocol duration.
    #[arg(long = "T", global = true, default_value_t = 1.0)]
    horizon: f64,

    /// Number of trajectory samples.
    #[arg(long, global = true, default_value_t = 1001)]
    points: usize,

    /// Output prefix; writes `<prefix>.csv` and `<prefix>.json`.
    #[arg(long, global = true)]
    out: Option<String>,

    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Inverse-engineered protocol over a fixed basis.
    Sta {
        #[arg(value_enum)]
        family: StaFamily,
    },
    /// Pontryagin-optimal protocol.
    Oct {
        #[arg(value_enum)]
        mode: OctMode,
    },
    /// Optimal free parameters of the basis families.
    Table1,
    /// Costs of the optimal and basis-family protocols.
    Table2,
    /// Regularized cost against λ with a power-law fit of the gap.
    SweepLambda,
    /// Run every reproduction and invariant check.
    Validate,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum StaFamily {
    Poly,
    Trig,
    Exp,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum OctMode {
    Singular,
    Regular,
    Higher,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq)]
enum Format {
    Csv,
    Json,
}

/// Files are collected and written only after all computation succeeds.
struct Output {
    json: Value,
    csv: String,
    exit: ExitCode,
}

fn parse_lambdas(raw: &str) -> Result<Vec<f64>> {
    raw.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| Error::InvalidArgument(format!("cannot parse λ value {s:?}")))
        })
        .collect()
}

fn single_lambda(cli: &Cli) -> Result<Option<f64>> {
    match &cli.lambda {
        None => Ok(None),
        Some(raw) => match parse_lambdas(raw)?.as_slice() {
            [v] => Ok(Some(*v)),
            _ => Err(Error::InvalidArgument("expected a single λ value".into())),
        },
    }
}

fn solution_output(cli: &Cli, sol: &ProtocolSolution) -> Result<Output> {
    Ok(Output {
        json: summary_json(sol),
        csv: sample_csv(sol, cli.points)?,
        exit: ExitCode::SUCCESS,
    })
}

fn cmd_sta(cli: &Cli, family: StaFamily) -> Result<Output> {
    let order = || {
        cli.order
            .ok_or_else(|| Error::InvalidArgument("--order is required for this family".into()))
    };
    let kind = match family {
        StaFamily::Poly => FamilyKind::Polynomial(order()?),
        StaFamily::Trig => FamilyKind::Trigonometric(order()?),
        StaFamily::Exp => FamilyKind::Exponential(cli.k.unwrap_or(100.0)),
    };
    let lambda = single_lambda(cli)?.unwrap_or(0.0);
    let problem = ControlProblem::new(cli.horizon, 1, lambda)?;
    solution_output(cli, &solve_family(kind, &problem)?)
}

fn cmd_oct(cli: &Cli, mode: OctMode) -> Result<Output> {
    let n = cli.n.unwrap_or(1);
    let sol = match mode {
        OctMode::Singular => singular_solution(cli.horizon)?,
        OctMode::Regular => {
            let lambda = single_lambda(cli)?.unwrap_or(1e-4);
            if n == 1 {
                regular_order1_analytic(lambda, cli.horizon)?
            } else {
                solve_regular(&build_lq(n, lambda, cli.horizon)?)?
            }
        }
        OctMode::Higher => {
            let lambda = match single_lambda(cli)? {
                Some(v) => v,
                None => match n {
                    1 => 1e-5,
                    2 => 5e-7,
                    3 => 5e-9,
                    _ => {
                        return Err(Error::InvalidArgument(format!(
                            "no default λ for n = {n}; pass --lambda"
                        )))
                    }
                },
            };
            solve_regular(&build_lq(n, lambda, cli.horizon)?)?
        }
    };
    solution_output(cli, &sol)
}

fn run(cli: &Cli) -> Result<Output> {
    if cli.points < 2 {
        return Err(Error::InvalidArgument("--points must be at least 2".into()));
    }
    match cli.command {
        Command::Sta { family } => cmd_sta(cli, family),
        Command::Oct { mode } => cmd_oct(cli, mode),
        Command::Table1 | Command::Table2 => {
            let t = if matches!(cli.command, Command::Table1) {
                table1()
            } else {
                table2()
            };
            Ok(Output {
                json: t.to_json(),
                csv: t.to_csv(),
                exit: ExitCode::SUCCESS,
            })
        }
        Command::SweepLambda => {
            let lambdas = match &cli.lambda {
                Some(raw) => parse_lambdas(raw)?,
                None => DEFAULT_SWEEP.to_vec(),
            };
            let r = sweep_lambda(&lambdas, cli.horizon);
            Ok(Output {
                json: r.to_json(),
                csv: r.to_csv(),
                exit: ExitCode::SUCCESS,
            })
        }
        Command::Validate => {
            let r = validate();
            Ok(Output {
                json: r.to_json(),
                csv: String::new(),
                exit: if r.pass() { ExitCode::SUCCESS } else { ExitCode::from(1) },
            })
        }
    }
}

fn render(json: &Value) -> String {
    let mut s = serde_json::to_string_pretty(json).expect("JSON values always serialize");
    s.push('\n');
    s
}

fn emit(cli: &Cli, out: &Output) -> std::io::Result<()> {
    let json = render(&out.json);
    match &cli.out {
        Some(prefix) => {
            if !out.csv.is_empty() {
                fs::write(format!("{prefix}.csv"), &out.csv)?;
            }
            fs::write(format!("{prefix}.json"), &json)
        }
        None => {
            if cli.format == Format::Csv && !out.csv.is_empty() {
                print!("{}", out.csv);
            } else {
                print!("{json}");
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(out) => match emit(&cli, &out) {
            Ok(()) => out.exit,
            Err(e) => {
                let err = serde_json::json!({"error": "Io", "message": e.to_string()});
                eprint!("{}", render(&err));
                ExitCode::from(2)
            }
        },
        Err(e) => {
            eprint!("{}", render(&error_json(&e)));
            ExitCode::from(2)
        }
    }
}
