use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, ChildStdout, Command, Stdio};
use std::sync::Mutex;

use super::GameProblem;
use crate::error::{invalid, Error, Result};

struct Session {
    child: Child,
    stdin: ChildStdin,
    stdout: BufReader<ChildStdout>,
}

/// A problem served by an external executable.
///
/// The process is started on first use and kept alive. For every
/// evaluation it receives one line `x_1 … x_d` on stdin and must answer
/// with one line `y_1 … y_p` on stdout.
pub struct ExternalProblem {
    command: Vec<String>,
    block_dims: Vec<usize>,
    bounds: Vec<(f64, f64)>,
    session: Mutex<Option<Session>>,
}

impl ExternalProblem {
    pub fn new(command: Vec<String>, block_dims: Vec<usize>, bounds: Vec<(f64, f64)>) -> Result<Self> {
        if command.is_empty() {
            return Err(invalid("external problem command is empty"));
        }
        if block_dims.is_empty() || block_dims.iter().sum::<usize>() != bounds.len() {
            return Err(invalid("bounds must cover every decision variable"));
        }
        Ok(Self {
            command,
            block_dims,
            bounds,
            session: Mutex::new(None),
        })
    }

    fn spawn(&self) -> Result<Session> {
        let mut child = Command::new(&self.command[0])
            .args(&self.command[1..])
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = BufReader::new(child.stdout.take().expect("piped stdout"));
        Ok(Session {
            child,
            stdin,
            stdout,
        })
    }
}

impl GameProblem for ExternalProblem {
    fn name(&self) -> String {
        format!("external:{}", self.command.join(" "))
    }

    fn block_dims(&self) -> Vec<usize> {
        self.block_dims.clone()
    }

    fn bounds(&self) -> Vec<(f64, f64)> {
        self.bounds.clone()
    }

    fn evaluate(&self, x: &[f64]) -> Result<Vec<f64>> {
        let fail = |message: String| Error::Evaluation {
            x: x.to_vec(),
            message,
        };
        if x.len() != self.bounds.len() {
            return Err(invalid(format!(
                "external problem takes {} inputs, got {}",
                self.bounds.len(),
                x.len()
            )));
        }
        let mut guard = self.session.lock().unwrap_or_else(|e| e.into_inner());
        if guard.is_none() {
            *guard = Some(self.spawn()?);
        }
        let session = guard.as_mut().expect("spawned above");
        let line = x.iter().map(f64::to_string).collect::<Vec<_>>().join(" ");
        writeln!(session.stdin, "{line}")
            .and_then(|_| session.stdin.flush())
            .map_err(|e| fail(format!("writing to the external process: {e}")))?;
        let mut reply = String::new();
        let n = session
            .stdout
            .read_line(&mut reply)
            .map_err(|e| fail(format!("reading from the external process: {e}")))?;
        if n == 0 {
            *guard = None;
            return Err(fail("external process closed its output".into()));
        }
        let y = reply
            .split_whitespace()
            .map(|t| t.parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| fail(format!("unparsable reply {:?}: {e}", reply.trim_end())))?;
        if y.len() != self.block_dims.len() {
            return Err(fail(format!(
                "expected {} values, got {}",
                self.block_dims.len(),
                y.len()
            )));
        }
        Ok(y)
    }
}

impl Drop for ExternalProblem {
    fn drop(&mut self) {
        if let Some(mut s) = self.session.get_mut().ok().and_then(Option::take) {
            drop(s.stdin);
            let _ = s.child.wait();
        }
    }
}
