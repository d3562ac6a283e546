//! External-process oracle speaking line-delimited JSON.
//!
//! The engine spawns the configured command once and keeps it alive for the
//! whole table sweep. Requests and responses are one JSON object per line:
//!
//! ```text
//! -> {"id":0,"masks":[0,1,2],"x":[1.0,0.0],"r":[0.0,0.0]}
//! <- {"id":0,"values":[0.0,1.0,0.0]}
//! ```
//!
//! The process is single-flight: requests are serialized and batched; a
//! non-zero exit or a malformed response line aborts the run.

use super::{Flight, OracleError, Sample, ValueOracle};
use crate::lattice::VariableSet;
use serde::{Deserialize, Serialize};
use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, ChildStdout, Command, Stdio};
use std::sync::Mutex;

#[derive(Serialize)]
struct Request<'a> {
    id: u64,
    masks: &'a [u32],
    x: &'a [f64],
    r: &'a [f64],
}

#[derive(Deserialize)]
struct Response {
    id: u64,
    values: Vec<f64>,
}

/// Parses one response line of the oracle protocol.
pub fn parse_response_line(line: &str) -> Result<(u64, Vec<f64>), OracleError> {
    let resp: Response =
        serde_json::from_str(line).map_err(|e| OracleError::Process { message: format!("malformed response: {e}") })?;
    if resp.values.iter().any(|v| !v.is_finite()) {
        return Err(OracleError::Process { message: "non-finite value in response".into() });
    }
    Ok((resp.id, resp.values))
}

struct ProcIo {
    child: Child,
    stdin: ChildStdin,
    stdout: BufReader<ChildStdout>,
    next_id: u64,
}

/// Spawns and drives an external oracle process.
pub struct SubprocessOracle {
    command: String,
    x: Vec<f64>,
    r: Vec<f64>,
    io: Mutex<ProcIo>,
}

impl SubprocessOracle {
    /// Spawns `command` (split on whitespace, no shell) with piped stdio.
    pub fn spawn(command: &str, sample: &Sample, baseline_r: &[f64]) -> Result<Self, OracleError> {
        if sample.n() != baseline_r.len() {
            return Err(OracleError::DimensionMismatch { expected: sample.n(), got: baseline_r.len() });
        }
        let mut parts = command.split_whitespace();
        let program = parts
            .next()
            .ok_or_else(|| OracleError::InvalidParameter("empty subprocess command".into()))?;
        let mut child = Command::new(program)
            .args(parts)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| OracleError::Process { message: format!("failed to spawn '{command}': {e}") })?;
        let stdin = child.stdin.take().expect("stdin was piped");
        let stdout = BufReader::new(child.stdout.take().expect("stdout was piped"));
        Ok(Self {
            command: command.to_owned(),
            x: sample.values().to_vec(),
            r: baseline_r.to_vec(),
            io: Mutex::new(ProcIo { child, stdin, stdout, next_id: 0 }),
        })
    }

    fn exchange(&self, masks: &[u32]) -> Result<Vec<f64>, OracleError> {
        let mut io = self.io.lock().expect("oracle mutex poisoned");
        let id = io.next_id;
        io.next_id += 1;

        let line = serde_json::to_string(&Request { id, masks, x: &self.x, r: &self.r })?;
        let offending = masks[0];
        let fail = |message: String| OracleError::Backend { mask: offending, message };

        io.stdin
            .write_all(line.as_bytes())
            .and_then(|_| io.stdin.write_all(b"\n"))
            .and_then(|_| io.stdin.flush())
            .map_err(|e| fail(format!("write to oracle failed: {e}")))?;

        let mut reply = String::new();
        let read = io
            .stdout
            .read_line(&mut reply)
            .map_err(|e| fail(format!("read from oracle failed: {e}")))?;
        if read == 0 {
            let status = io
                .child
                .try_wait()
                .ok()
                .flatten()
                .map(|s| s.to_string())
                .unwrap_or_else(|| "still running".into());
            return Err(fail(format!("oracle closed its output (process {status})")));
        }
        let (resp_id, values) = parse_response_line(reply.trim_end()).map_err(|e| fail(e.to_string()))?;
        if resp_id != id {
            return Err(fail(format!("response id {resp_id} does not match request id {id}")));
        }
        if values.len() != masks.len() {
            return Err(fail(format!("expected {} values, got {}", masks.len(), values.len())));
        }
        Ok(values)
    }
}

impl ValueOracle for SubprocessOracle {
    fn n(&self) -> usize {
        self.x.len()
    }

    fn value(&self, s: VariableSet) -> Result<f64, OracleError> {
        Ok(self.exchange(&[s.bits()])?[0])
    }

    fn value_batch(&self, masks: &[VariableSet]) -> Result<Vec<f64>, OracleError> {
        if masks.is_empty() {
            return Ok(Vec::new());
        }
        let bits: Vec<u32> = masks.iter().map(|m| m.bits()).collect();
        self.exchange(&bits)
    }

    fn flight(&self) -> Flight {
        Flight::SingleFlight
    }

    fn describe(&self) -> String {
        format!("subprocess({})", self.command)
    }
}

impl Drop for SubprocessOracle {
    fn drop(&mut self) {
        if let Ok(mut io) = self.io.lock() {
            let _ = io.child.kill();
            let _ = io.child.wait();
        }
    }
}
