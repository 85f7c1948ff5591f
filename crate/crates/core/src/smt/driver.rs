use std::io::{Read, Write};
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

use serde::Serialize;
use wait_timeout::ChildExt;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SolverConfig {
    pub command: Vec<String>,
    pub timeout: Duration,
}

impl SolverConfig {
    pub const DEFAULT_COMMAND: &'static str = "z3 -in";

    pub fn new(command: &str, timeout: Duration) -> Self {
        SolverConfig {
            command: command.split_whitespace().map(str::to_string).collect(),
            timeout,
        }
    }
}

impl Default for SolverConfig {
    fn default() -> Self {
        let cmd = std::env::var("SOUNDABS_SOLVER").unwrap_or_else(|_| Self::DEFAULT_COMMAND.to_string());
        SolverConfig::new(&cmd, Duration::from_secs(10))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverStatus {
    Unsat,
    Sat,
    Unknown,
    Timeout,
    Error,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SolverVerdict {
    pub status: SolverStatus,
    /// Everything the solver printed after the status line.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
    pub wall_ms: u64,
}

impl SolverVerdict {
    fn error(message: String, start: Instant) -> Self {
        SolverVerdict {
            status: SolverStatus::Error,
            model: None,
            message: Some(message),
            wall_ms: start.elapsed().as_millis() as u64,
        }
    }
}

/// Runs one solver process on `script`. With `want_model`, `(get-model)` is
/// sent after the script so a `sat` answer comes with a model.
pub fn run_solver(script: &str, cfg: &SolverConfig, want_model: bool) -> SolverVerdict {
    let start = Instant::now();
    let Some((prog, args)) = cfg.command.split_first() else {
        return SolverVerdict::error("empty solver command".into(), start);
    };
    let mut child = match Command::new(prog)
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
    {
        Ok(c) => c,
        Err(e) => return SolverVerdict::error(format!("cannot start {prog}: {e}"), start),
    };

    let mut input = script.to_string();
    if want_model {
        input.push_str("(get-model)\n");
    }
    input.push_str("(exit)\n");
    let mut stdin = child.stdin.take().expect("piped stdin");
    let writer = std::thread::spawn(move || {
        // The solver may exit early; a broken pipe is not an error here.
        let _ = stdin.write_all(input.as_bytes());
    });
    let mut stdout = child.stdout.take().expect("piped stdout");
    let reader = std::thread::spawn(move || {
        let mut out = String::new();
        let _ = stdout.read_to_string(&mut out);
        out
    });
    let mut stderr = child.stderr.take().expect("piped stderr");
    let err_reader = std::thread::spawn(move || {
        let mut out = String::new();
        let _ = stderr.read_to_string(&mut out);
        out
    });

    let waited = child.wait_timeout(cfg.timeout);
    let timed_out = matches!(waited, Ok(None));
    if timed_out {
        let _ = child.kill();
        let _ = child.wait();
    }
    let _ = writer.join();
    let out = reader.join().unwrap_or_default();
    let err = err_reader.join().unwrap_or_default();
    let wall_ms = start.elapsed().as_millis() as u64;
    if let Err(e) = waited {
        return SolverVerdict::error(format!("waiting for solver: {e}"), start);
    }
    if timed_out {
        return SolverVerdict {
            status: SolverStatus::Timeout,
            model: None,
            message: Some(format!("no answer within {:?}", cfg.timeout)),
            wall_ms,
        };
    }

    let mut lines = out.lines().skip_while(|l| l.trim().is_empty());
    let first = lines.next().unwrap_or("").trim();
    let rest: String = lines.collect::<Vec<_>>().join("\n");
    let status = match first {
        "unsat" => SolverStatus::Unsat,
        "sat" => SolverStatus::Sat,
        "unknown" => SolverStatus::Unknown,
        "timeout" => SolverStatus::Timeout,
        _ => {
            let detail = if first.is_empty() { err.trim() } else { first };
            return SolverVerdict {
                status: SolverStatus::Error,
                model: None,
                message: Some(format!("unexpected solver output: {detail}")),
                wall_ms,
            };
        }
    };
    SolverVerdict {
        status,
        model: (status == SolverStatus::Sat && !rest.trim().is_empty()).then_some(rest),
        message: None,
        wall_ms,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn z3() -> SolverConfig {
        SolverConfig::new("z3 -in", Duration::from_secs(10))
    }

    #[test]
    fn trivial_scripts() {
        assert_eq!(run_solver("(assert false)(check-sat)\n", &z3(), false).status, SolverStatus::Unsat);
        let v = run_solver("(assert true)(check-sat)\n", &z3(), true);
        assert_eq!(v.status, SolverStatus::Sat);
    }

    #[test]
    fn missing_solver_is_an_error() {
        let cfg = SolverConfig::new("/nonexistent/solver", Duration::from_secs(1));
        let v = run_solver("(check-sat)", &cfg, false);
        assert_eq!(v.status, SolverStatus::Error);
        assert!(v.message.unwrap().contains("cannot start"));
    }

    #[test]
    fn slow_solver_times_out() {
        let cfg = SolverConfig::new("sleep 5", Duration::from_millis(100));
        let v = run_solver("(check-sat)", &cfg, false);
        assert_eq!(v.status, SolverStatus::Timeout);
        assert!(v.wall_ms < 4000);
    }

    #[test]
    fn garbage_output_is_an_error() {
        let cfg = SolverConfig::new("echo hello", Duration::from_secs(5));
        assert_eq!(run_solver("", &cfg, false).status, SolverStatus::Error);
    }
}
