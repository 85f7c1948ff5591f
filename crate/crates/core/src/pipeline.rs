//! End-to-end verification: load inputs, generate tasks, discharge them
//! with the solver and aggregate a report.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use serde::Serialize;
use thiserror::Error;

use crate::bat::{compile_domain, parse_constraints, BasicActionTheory, BatError};
use crate::golog::{parse_mapping, MappingError, RefinementMapping};
use crate::qnp::{parse_qnp, QnpProblem};
use crate::sexpr::SyntaxError;
use crate::smt::{classify, encode, run_solver, AxiomLevel, Classification, SmtError, SolverConfig, TaskResult};
use crate::vcgen::{generate_tasks, TaskSuite, VcError};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Domain { path: String, source: BatError },
    #[error("{path}: {source}")]
    Qnp { path: String, source: SyntaxError },
    #[error("{path}: {source}")]
    Mapping { path: String, source: MappingError },
    #[error(transparent)]
    Vc(#[from] VcError),
    #[error(transparent)]
    Smt(#[from] SmtError),
}

/// A parsed verification problem.
#[derive(Debug, Clone)]
pub struct Inputs {
    pub theory: BasicActionTheory,
    pub qnp: QnpProblem,
    pub mapping: RefinementMapping,
}

pub struct InputTexts<'a> {
    pub domain: &'a str,
    pub qnp: &'a str,
    pub mapping: &'a str,
    pub constraints: &'a str,
}

impl Inputs {
    pub fn from_texts(t: &InputTexts<'_>) -> Result<Inputs, PipelineError> {
        Self::from_named_texts(t, ["domain", "qnp", "map", "constraints"])
    }

    fn from_named_texts(t: &InputTexts<'_>, names: [&str; 4]) -> Result<Inputs, PipelineError> {
        let theory = compile_domain(t.domain).map_err(|source| PipelineError::Domain {
            path: names[0].to_string(),
            source,
        })?;
        let constraints = parse_constraints(t.constraints, &theory.symbols).map_err(|source| PipelineError::Domain {
            path: names[3].to_string(),
            source,
        })?;
        let theory = theory.with_constraints(constraints);
        let qnp = parse_qnp(t.qnp).map_err(|source| PipelineError::Qnp {
            path: names[1].to_string(),
            source,
        })?;
        let mapping = parse_mapping(t.mapping, &theory.symbols).map_err(|source| PipelineError::Mapping {
            path: names[2].to_string(),
            source,
        })?;
        Ok(Inputs { theory, qnp, mapping })
    }

    pub fn load(domain: &Path, qnp: &Path, mapping: &Path, constraints: &Path) -> Result<Inputs, PipelineError> {
        let read = |p: &Path| {
            std::fs::read_to_string(p).map_err(|source| PipelineError::Io {
                path: p.to_path_buf(),
                source,
            })
        };
        let (d, q, m, c) = (read(domain)?, read(qnp)?, read(mapping)?, read(constraints)?);
        let names = [domain, qnp, mapping, constraints].map(|p| p.display().to_string());
        Self::from_named_texts(
            &InputTexts {
                domain: &d,
                qnp: &q,
                mapping: &m,
                constraints: &c,
            },
            [&names[0], &names[1], &names[2], &names[3]],
        )
    }

    /// Loads `domain.sexp`, `qnp.sexp`, `map.sexp` and `constraints.sexp`
    /// from one directory.
    pub fn load_dir(dir: &Path) -> Result<Inputs, PipelineError> {
        Self::load(
            &dir.join("domain.sexp"),
            &dir.join("qnp.sexp"),
            &dir.join("map.sexp"),
            &dir.join("constraints.sexp"),
        )
    }

    pub fn tasks(&self) -> Result<TaskSuite, PipelineError> {
        Ok(generate_tasks(&self.theory, &self.qnp, &self.mapping)?)
    }
}

#[derive(Debug, Clone)]
pub struct VerifyOptions {
    pub solver: SolverConfig,
    pub jobs: usize,
    pub level: AxiomLevel,
    pub emit_smt: Option<PathBuf>,
    pub emit_tasks: Option<PathBuf>,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            solver: SolverConfig::default(),
            jobs: std::thread::available_parallelism().map_or(1, |n| n.get()),
            level: AxiomLevel::default(),
            emit_smt: None,
            emit_tasks: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Aggregate {
    True,
    False,
    Unknown,
}

impl Aggregate {
    pub fn exit_code(self) -> i32 {
        match self {
            Aggregate::True => 0,
            Aggregate::False => 1,
            Aggregate::Unknown => 2,
        }
    }

    pub fn of(results: &[TaskResult]) -> Aggregate {
        if results.iter().any(|r| r.classification == Classification::Refuted) {
            Aggregate::False
        } else if results.iter().all(|r| r.classification == Classification::Valid) {
            Aggregate::True
        } else {
            Aggregate::Unknown
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Totals {
    pub wall_ms: u64,
    /// Abstract actions.
    pub actions: usize,
    /// Abstract numeric variables.
    pub nums: usize,
    /// Abstract boolean features.
    pub bools: usize,
    pub tasks: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerdictReport {
    pub domain: String,
    pub abstraction: String,
    pub aggregate: Aggregate,
    pub totals: Totals,
    pub tasks: Vec<TaskResult>,
    /// State constraints are assumed, not checked.
    pub trusted_constraints: usize,
}

impl VerdictReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report is serializable")
    }

    /// One row in the style of the usual results table, followed by one line
    /// per task that is not valid.
    pub fn summary(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{:<12} {:>3} {:>3} {:>3} {:>9}  Result", "Domain", "#A", "#F", "#P", "T(s)");
        let _ = writeln!(
            s,
            "{:<12} {:>3} {:>3} {:>3} {:>9.4}  {:?}",
            self.domain,
            self.totals.actions,
            self.totals.nums,
            self.totals.bools,
            self.totals.wall_ms as f64 / 1000.0,
            self.aggregate
        );
        for t in &self.tasks {
            if t.classification != Classification::Valid {
                let _ = write!(s, "  {} {:?} (solver: {:?}", t.id, t.classification, t.verdict.status);
                if t.downgraded {
                    s.push_str(", downgraded");
                }
                s.push(')');
                if let Some(n) = &t.note {
                    let _ = write!(s, ": {n}");
                }
                if let Some(m) = &t.verdict.message {
                    let _ = write!(s, ": {m}");
                }
                s.push('\n');
            }
        }
        s
    }
}

fn emit(dir: &Path, file: String, text: &str) -> Result<(), PipelineError> {
    std::fs::create_dir_all(dir).map_err(|source| PipelineError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let path = dir.join(file.replace(':', "_"));
    std::fs::write(&path, text).map_err(|source| PipelineError::Io { path, source })
}

/// Generates, encodes and discharges every task of `inputs`.
pub fn verify(inputs: &Inputs, opts: &VerifyOptions) -> Result<VerdictReport, PipelineError> {
    let start = Instant::now();
    let suite = inputs.tasks()?;
    let mut encodings = Vec::with_capacity(suite.tasks.len());
    for t in &suite.tasks {
        encodings.push(encode(t, &inputs.theory.symbols, opts.level)?);
    }
    if let Some(dir) = &opts.emit_tasks {
        for t in &suite.tasks {
            emit(dir, format!("{}.txt", t.id), &format!("; {}\n{}\n", t.provenance, t.formula))?;
        }
    }
    if let Some(dir) = &opts.emit_smt {
        for (t, e) in suite.tasks.iter().zip(&encodings) {
            emit(dir, format!("{}.smt2", t.id), &e.script)?;
        }
    }

    let slots: Vec<Mutex<Option<TaskResult>>> = suite.tasks.iter().map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    std::thread::scope(|scope| {
        for _ in 0..opts.jobs.clamp(1, suite.tasks.len().max(1)) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                let Some(task) = suite.tasks.get(i) else { break };
                let verdict = run_solver(&encodings[i].script, &opts.solver, true);
                let result = classify(task, &encodings[i], verdict, &inputs.theory);
                *slots[i].lock().unwrap() = Some(result);
            });
        }
    });
    let tasks: Vec<TaskResult> = slots.into_iter().map(|m| m.into_inner().unwrap().expect("every task ran")).collect();

    Ok(VerdictReport {
        domain: inputs.theory.name.clone(),
        abstraction: inputs.qnp.name.clone(),
        aggregate: Aggregate::of(&tasks),
        totals: Totals {
            wall_ms: start.elapsed().as_millis() as u64,
            actions: inputs.qnp.actions.len(),
            nums: inputs.qnp.nums.len(),
            bools: inputs.qnp.bools.len(),
            tasks: tasks.len(),
        },
        tasks,
        trusted_constraints: inputs.theory.constraints.formulas.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn aggregate_rules() {
        assert_eq!(Aggregate::of(&[]), Aggregate::True);
        assert_eq!(Aggregate::True.exit_code(), 0);
        assert_eq!(Aggregate::Unknown.exit_code(), 2);
    }
}
