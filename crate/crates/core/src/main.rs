use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};

use soundabs::golog::Program;
use soundabs::logic::{read_formula, Scope};
use soundabs::oracle::{check_validity_finite, parse_instance, StateSpace};
use soundabs::pipeline::{verify, Inputs, VerifyOptions};
use soundabs::smt::{AxiomLevel, SolverConfig};

/// Verify that a QNP abstraction is a sound abstraction of a
/// generalized-planning problem.
#[derive(Parser)]
#[command(name = "soundabs", version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate and discharge all verification tasks.
    Verify(VerifyArgs),
    /// Check a closed formula on the reachable states of a finite instance.
    Oracle(OracleArgs),
}

#[derive(Args)]
struct InputArgs {
    #[arg(long)]
    domain: PathBuf,
    #[arg(long)]
    qnp: PathBuf,
    #[arg(long)]
    map: PathBuf,
    #[arg(long)]
    constraints: PathBuf,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    inputs: InputArgs,
    /// Solver command line; the script is sent on standard input.
    #[arg(long, env = "SOUNDABS_SOLVER", default_value = SolverConfig::DEFAULT_COMMAND)]
    solver_cmd: String,
    /// Per-task time limit.
    #[arg(long, default_value_t = 10.0)]
    timeout_secs: f64,
    #[arg(long)]
    jobs: Option<usize>,
    /// Emit only the basic closure axioms.
    #[arg(long)]
    basic_axioms: bool,
    /// Directory for the SMT-LIB2 scripts.
    #[arg(long)]
    emit_smt: Option<PathBuf>,
    /// Directory for the generated task formulas.
    #[arg(long)]
    emit_tasks: Option<PathBuf>,
    /// Write the JSON report here instead of standard output.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct OracleArgs {
    #[arg(long)]
    domain: PathBuf,
    #[arg(long)]
    instance: PathBuf,
    /// Closed formula to check, in the domain's vocabulary.
    #[arg(long)]
    check: String,
    /// Explore states reached by the refinement programs of this mapping
    /// instead of by single low-level actions.
    #[arg(long, requires = "qnp")]
    map: Option<PathBuf>,
    #[arg(long, requires = "map")]
    qnp: Option<PathBuf>,
    #[arg(long)]
    depth: Option<usize>,
}

fn run_verify(a: VerifyArgs) -> Result<ExitCode, String> {
    let i = &a.inputs;
    let inputs = Inputs::load(&i.domain, &i.qnp, &i.map, &i.constraints).map_err(|e| e.to_string())?;
    if a.timeout_secs.is_nan() || a.timeout_secs <= 0.0 {
        return Err("--timeout-secs must be positive".into());
    }
    let mut opts = VerifyOptions {
        solver: SolverConfig::new(&a.solver_cmd, Duration::from_secs_f64(a.timeout_secs)),
        emit_smt: a.emit_smt,
        emit_tasks: a.emit_tasks,
        ..VerifyOptions::default()
    };
    if let Some(j) = a.jobs {
        opts.jobs = j.max(1);
    }
    if a.basic_axioms {
        opts.level = AxiomLevel::Basic;
    }
    let report = verify(&inputs, &opts).map_err(|e| e.to_string())?;
    match &a.report {
        Some(p) => {
            std::fs::write(p, report.to_json()).map_err(|e| format!("{}: {e}", p.display()))?;
        }
        None => println!("{}", report.to_json()),
    }
    eprint!("{}", report.summary());
    Ok(ExitCode::from(report.aggregate.exit_code() as u8))
}

fn run_oracle(a: OracleArgs) -> Result<ExitCode, String> {
    let read = |p: &PathBuf| std::fs::read_to_string(p).map_err(|e| format!("{}: {e}", p.display()));
    let theory = soundabs::bat::compile_domain(&read(&a.domain)?).map_err(|e| format!("{}: {e}", a.domain.display()))?;
    let inst = parse_instance(&read(&a.instance)?, &theory).map_err(|e| format!("{}: {e}", a.instance.display()))?;
    let expr = soundabs::sexpr::parse_one(&a.check).map_err(|e| format!("--check: {e}"))?;
    let phi = read_formula(&expr, &mut Scope::new(&theory.symbols)).map_err(|e| format!("--check: {e}"))?;
    let programs: Vec<Program> = match (&a.map, &a.qnp) {
        (Some(m), Some(q)) => {
            let qnp = soundabs::qnp::parse_qnp(&read(q)?).map_err(|e| format!("{}: {e}", q.display()))?;
            let map = soundabs::golog::parse_mapping(&read(m)?, &theory.symbols).map_err(|e| format!("{}: {e}", m.display()))?;
            qnp.actions
                .iter()
                .map(|act| map.map_action(&act.name, &[]))
                .collect::<Result<_, _>>()
                .map_err(|e| e.to_string())?
        }
        _ => Vec::new(),
    };
    let space = if a.map.is_some() {
        StateSpace::Programs(&programs)
    } else {
        StateSpace::LowLevel
    };
    let v = check_validity_finite(&theory, &phi, std::slice::from_ref(&inst), &space, a.depth).map_err(|e| e.to_string())?;
    match &v.witness {
        None => println!("valid in all {} reachable states", v.checked_states),
        Some(w) => println!("violated: {w}"),
    }
    Ok(if v.valid { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let r = match cli.command {
        Cmd::Verify(a) => run_verify(a),
        Cmd::Oracle(a) => run_oracle(a),
    };
    r.unwrap_or_else(|e| {
        eprintln!("error: {e}");
        ExitCode::from(3)
    })
}
