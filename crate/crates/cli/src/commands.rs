use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use posgain::lti::{simulate, Signal, StateSpace};
use posgain::numkernel::SymMatrix;
use posgain::posnorm::{bound_sweep, hinf_norm};
use posgain::rnn::{certify_with, region_sweep, simulate_rnn, CellClass, CertifyOptions, GridAxis, Outcome, RnnModel, SsgResult};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::files::SystemFile;
use crate::report::{fmt_num, fmt_opt, Table};
use crate::{exit, CliError};

/// Bounds on the l2 gain of linear systems over nonnegative inputs, and
/// small-gain stability tests for ReLU recurrent networks.
#[derive(Debug, Parser)]
#[command(name = "posgain", version)]
pub struct Cli {
    /// Relative accuracy demanded of each solve.
    #[arg(long, global = true, default_value_t = 1e-6)]
    pub tol: f64,
    /// Seed for randomized inputs.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Suppress informational messages on stderr.
    #[arg(long, short, global = true)]
    pub quiet: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print the H-infinity norm of a state-space system.
    Norm { file: PathBuf },
    /// Upper and lower bounds on the positive norm for lifting orders 1..=nmax.
    Bounds {
        file: PathBuf,
        #[arg(long, default_value_t = 20)]
        nmax: usize,
    },
    /// Small-gain tests and certified gain of a ReLU network.
    RnnCheck {
        file: PathBuf,
        /// Lifting order of the positive-norm estimate.
        #[arg(long, default_value_t = 4)]
        lift: usize,
    },
    /// Classify a two-parameter family of networks over a grid.
    Sweep {
        file: PathBuf,
        /// Grid for the offset parameter, `lo:hi:steps`.
        #[arg(long, value_parser = parse_axis, allow_hyphen_values = true)]
        a: Option<GridAxis>,
        /// Grid for the replacement parameter, `lo:hi:steps`.
        #[arg(long, value_parser = parse_axis, allow_hyphen_values = true)]
        b: Option<GridAxis>,
    },
    /// Simulate a system or network and write the trajectory.
    Simulate {
        file: PathBuf,
        #[arg(long, value_enum, default_value_t = InputKind::Impulse)]
        input: InputKind,
        #[arg(long, default_value_t = 50)]
        steps: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InputKind {
    /// Unit pulse at step 0 on every channel.
    Impulse,
    /// Ones on every channel.
    Step,
    /// Uniform on [0, 1), seeded.
    Random,
}

fn parse_axis(s: &str) -> Result<GridAxis, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let [lo, hi, steps] = parts.as_slice() else {
        return Err(format!("expected lo:hi:steps, got {s:?}"));
    };
    let lo: f64 = lo.parse().map_err(|e| format!("lo: {e}"))?;
    let hi: f64 = hi.parse().map_err(|e| format!("hi: {e}"))?;
    let steps: usize = steps.parse().map_err(|e| format!("steps: {e}"))?;
    GridAxis::new(lo, hi, steps).map_err(|e| e.to_string())
}

/// Runs the command and returns the process exit code.
pub fn run(cli: &Cli) -> i32 {
    let result = match &cli.command {
        Command::Norm { file } => cmd_norm(cli, file),
        Command::Bounds { file, nmax } => cmd_bounds(cli, file, *nmax),
        Command::RnnCheck { file, lift } => cmd_rnn_check(cli, file, *lift),
        Command::Sweep { file, a, b } => cmd_sweep(cli, file, *a, *b),
        Command::Simulate { file, input, steps } => cmd_simulate(cli, file, *input, *steps),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn info(cli: &Cli, msg: impl AsRef<str>) {
    if !cli.quiet {
        eprintln!("{}", msg.as_ref());
    }
}

fn load_state_space(path: &Path) -> Result<StateSpace, CliError> {
    match SystemFile::load(path)? {
        SystemFile::StateSpace(s) => s.to_model(),
        SystemFile::Rnn(_) => Err(CliError::Invalid("expected a statespace file".into())),
    }
}

fn cmd_norm(cli: &Cli, file: &Path) -> Result<i32, CliError> {
    let sys = load_state_space(file)?;
    let value = hinf_norm(&sys, cli.tol)?;
    println!("hinf = {value:.9}");
    Ok(exit::OK)
}

fn cmd_bounds(cli: &Cli, file: &Path, nmax: usize) -> Result<i32, CliError> {
    let sys = load_state_space(file)?;
    let report = bound_sweep(&sys, nmax, cli.tol)?;
    let mut table = Table::new(["N", "upper", "lower", "hinf"]);
    for row in &report.rows {
        table.push(vec![
            row.order.to_string(),
            fmt_opt(row.upper),
            fmt_opt(row.lower),
            fmt_num(report.hinf),
        ]);
    }
    table.comments = report.warnings.iter().map(|w| format!("warning: {w}")).collect();
    table.emit(cli.out.as_deref())?;
    let arg_min = |f: fn(&posgain::posnorm::BoundRow) -> Option<f64>, best: Option<f64>| {
        report.rows.iter().find(|r| f(r) == best).map(|r| r.order)
    };
    let summary = format!(
        "best upper = {} (N = {})\nbest lower = {} (N = {})",
        fmt_opt(report.best_upper),
        arg_min(|r| r.upper, report.best_upper).map_or("-".into(), |n| n.to_string()),
        fmt_opt(report.best_lower),
        arg_min(|r| r.lower, report.best_lower).map_or("-".into(), |n| n.to_string()),
    );
    if cli.out.is_some() {
        println!("{summary}");
    } else {
        info(cli, summary);
    }
    for w in &report.warnings {
        info(cli, format!("warning: {w}"));
    }
    Ok(exit::OK)
}

fn load_rnn(path: &Path) -> Result<crate::files::RnnFile, CliError> {
    match SystemFile::load(path)? {
        SystemFile::Rnn(r) => Ok(r),
        SystemFile::StateSpace(_) => Err(CliError::Invalid("expected an rnn file".into())),
    }
}

fn describe(result: &SsgResult) -> String {
    let margin = result.margin.map(|m| format!(" (margin {m:.3e})")).unwrap_or_default();
    match result.outcome {
        Outcome::Feasible => format!("feasible{margin}"),
        Outcome::Infeasible => format!("infeasible{margin}"),
        Outcome::Indeterminate => format!(
            "indeterminate{}",
            result.message.as_ref().map(|m| format!(" ({m})")).unwrap_or_default()
        ),
    }
}

fn dump_witnesses(table: &mut Table, test: &str, result: &SsgResult) {
    let Some(w) = &result.witness else {
        return;
    };
    let mut push_sym = |name: &str, s: &SymMatrix| {
        for i in 0..s.dim() {
            for j in i..s.dim() {
                table.push(vec![test.into(), name.into(), i.to_string(), j.to_string(), fmt_num(s[(i, j)])]);
            }
        }
    };
    push_sym("P", &w.p);
    push_sym("S", &SymMatrix::diag(&w.s));
    push_sym("Q1", &w.q_psd);
    push_sym("Q2", &w.q_nn);
}

fn cmd_rnn_check(cli: &Cli, file: &Path, lift: usize) -> Result<i32, CliError> {
    let rnn = load_rnn(file)?.to_model()?;
    if lift == 0 {
        return Err(posgain::Error::InvalidOrder.into());
    }
    let verdict = certify_with(
        &rnn,
        &CertifyOptions {
            lift_order: lift,
            gain_estimates: true,
            tol: cli.tol,
        },
    );
    println!("SSG: {}", describe(&verdict.ssg));
    println!("SSG+COP: {}", describe(&verdict.ssg_cop));
    let show = |v: Option<f64>| v.map_or("unavailable".to_string(), |v| format!("{v:.6}"));
    println!("gamma0+ (N = {lift}): {}", show(verdict.gamma0_plus));
    println!("gamma1: {}", show(verdict.gamma1));
    match (&verdict.certified_gain, &verdict.scaling) {
        (Some(g), Some(d)) => println!(
            "certified gain: {g:.6} (channel scaling {})",
            d.iter().map(|v| format!("{v:.4}")).collect::<Vec<_>>().join(" ")
        ),
        (Some(g), None) => println!("certified gain: {g:.6}"),
        (None, _) => println!("certified gain: unavailable"),
    }
    for note in &verdict.notes {
        info(cli, format!("note: {note}"));
    }
    if let Some(out) = &cli.out {
        let mut table = Table::new(["test", "matrix", "row", "col", "value"]);
        dump_witnesses(&mut table, "ssg", &verdict.ssg);
        dump_witnesses(&mut table, "ssg_cop", &verdict.ssg_cop);
        table.emit(Some(out))?;
    }
    Ok(match verdict.ssg_cop.outcome {
        Outcome::Feasible => exit::OK,
        Outcome::Infeasible => exit::INFEASIBLE,
        Outcome::Indeterminate => exit::SOLVER,
    })
}

fn cmd_sweep(cli: &Cli, file: &Path, a: Option<GridAxis>, b: Option<GridAxis>) -> Result<i32, CliError> {
    let rnn_file = load_rnn(file)?;
    let template = rnn_file.to_template()?;
    let (da, db) = rnn_file.default_axes()?;
    let fallback = GridAxis::new(-8.0, 8.0, 17).expect("valid default grid");
    let a = a.or(da).unwrap_or(fallback);
    let b = b.or(db).unwrap_or(fallback);
    let cells = region_sweep(&template, &a, &b);
    let mut table = Table::new(["a", "b", "classification"]);
    for c in &cells {
        table.push(vec![fmt_num(c.a), fmt_num(c.b), c.class.as_str().into()]);
    }
    table.emit(cli.out.as_deref())?;
    let count = |k: CellClass| cells.iter().filter(|c| c.class == k).count();
    info(
        cli,
        format!(
            "both {}, cop_only {}, neither {}, indeterminate {}",
            count(CellClass::Both),
            count(CellClass::CopOnly),
            count(CellClass::Neither),
            count(CellClass::Indeterminate)
        ),
    );
    Ok(exit::OK)
}

fn make_input(kind: InputKind, channels: usize, len: usize, rng: &mut ChaCha8Rng) -> Signal {
    match kind {
        InputKind::Impulse => {
            let mut s = Signal::zeros(channels, len);
            if len > 0 {
                s.step_mut(0).fill(1.0);
            }
            s
        }
        InputKind::Step => {
            let mut s = Signal::zeros(channels, len);
            for k in 0..len {
                s.step_mut(k).fill(1.0);
            }
            s
        }
        InputKind::Random => {
            let mut s = Signal::zeros(channels, len);
            for k in 0..len {
                s.step_mut(k).iter_mut().for_each(|v| *v = rng.gen_range(0.0..1.0));
            }
            s
        }
    }
}

fn columns(prefix: &str, n: usize) -> Vec<String> {
    (0..n).map(|i| format!("{prefix}{i}")).collect()
}

fn trajectory_table(parts: &[(&str, &Signal)], steps: usize) -> Table {
    let header: Vec<String> = std::iter::once("k".to_string())
        .chain(parts.iter().flat_map(|(p, s)| columns(p, s.channels())))
        .collect();
    let mut table = Table::new(header);
    for k in 0..steps {
        let mut row = vec![k.to_string()];
        for (_, s) in parts {
            row.extend(s.step(k).iter().map(|&v| fmt_num(v)));
        }
        table.push(row);
    }
    table
}

fn cmd_simulate(cli: &Cli, file: &Path, input: InputKind, steps: usize) -> Result<i32, CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(cli.seed);
    let table = match SystemFile::load(file)? {
        SystemFile::StateSpace(s) => {
            let sys = s.to_model()?;
            let w = make_input(input, sys.inputs(), steps, &mut rng);
            let traj = simulate(&sys, &w, steps)?;
            trajectory_table(&[("w", &w), ("z", &traj.z), ("x", &traj.x)], steps)
        }
        SystemFile::Rnn(r) => {
            let rnn: RnnModel = r.to_model()?;
            let s = make_input(input, rnn.channels(), steps, &mut rng);
            let v = make_input(input, rnn.states(), steps, &mut rng);
            let traj = simulate_rnn(&rnn, &s, &v, steps)?;
            trajectory_table(
                &[("s", &s), ("v", &v), ("x", &traj.x), ("z", &traj.z), ("w", &traj.w)],
                steps,
            )
        }
    };
    table.emit(cli.out.as_deref())?;
    Ok(exit::OK)
}
