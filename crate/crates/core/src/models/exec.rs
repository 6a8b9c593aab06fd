//! Client side of the newline-delimited JSON scoring bridge.
//!
//! ```text
//! -> {"type":"hello","protocol":1}
//! <- {"type":"ready","protocol":1}
//! -> {"type":"score","id":0,"instances":[[1.0,"NY"],[2.0,"CA"]]}
//! <- {"type":"scores","id":0,"scores":[0.25,0.75]}
//! ```
//!
//! Requests are never pipelined. An `error` reply, a dead child, or a reply
//! slower than the configured timeout fails the call and poisons the handle.

use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::thread;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::{check_scores, Model};
use crate::error::{Error, Result};
use crate::instance::{FeatureValue, Instance};

pub const PROTOCOL_VERSION: u32 = 1;

#[derive(Serialize)]
#[serde(tag = "type", rename_all = "lowercase")]
enum Request<'a> {
    Hello {
        protocol: u32,
    },
    Score {
        id: u64,
        instances: Vec<&'a [FeatureValue]>,
    },
}

#[derive(Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
enum Reply {
    Ready {
        protocol: u32,
    },
    Scores {
        id: u64,
        scores: Vec<f64>,
    },
    Error {
        #[serde(default)]
        id: Option<u64>,
        message: String,
    },
}

pub struct ExecModel {
    command: String,
    child: Child,
    stdin: Option<ChildStdin>,
    lines: Receiver<std::io::Result<String>>,
    timeout: Duration,
    next_id: u64,
    poisoned: bool,
}

impl std::fmt::Debug for ExecModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ExecModel")
            .field("command", &self.command)
            .field("next_id", &self.next_id)
            .finish()
    }
}

impl ExecModel {
    /// Starts `command` through `sh -c` and performs the hello/ready handshake.
    pub fn spawn(command: &str, timeout: Duration) -> Result<Self> {
        let mut child = Command::new("sh")
            .arg("-c")
            .arg(command)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|source| Error::Spawn {
                command: command.to_owned(),
                source,
            })?;
        let stdout = child.stdout.take().expect("stdout is piped");
        let stdin = child.stdin.take();

        let (tx, rx) = mpsc::channel();
        thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                let stop = line.is_err();
                if tx.send(line).is_err() || stop {
                    break;
                }
            }
        });

        let mut model = ExecModel {
            command: command.to_owned(),
            child,
            stdin,
            lines: rx,
            timeout,
            next_id: 0,
            poisoned: false,
        };
        model.handshake()?;
        Ok(model)
    }

    fn handshake(&mut self) -> Result<()> {
        self.send(&Request::Hello {
            protocol: PROTOCOL_VERSION,
        })
        .map_err(|e| Error::Handshake(e.to_string()))?;
        let line = self.recv().map_err(|e| match e {
            Error::BridgeTimeout(_) => e,
            other => Error::Handshake(other.to_string()),
        })?;
        match serde_json::from_str::<Reply>(&line) {
            Ok(Reply::Ready { protocol }) if protocol == PROTOCOL_VERSION => Ok(()),
            Ok(Reply::Ready { protocol }) => Err(Error::Handshake(format!(
                "bridge speaks protocol {protocol}, expected {PROTOCOL_VERSION}"
            ))),
            Ok(Reply::Error { message, .. }) => Err(Error::Handshake(message)),
            Ok(_) => Err(Error::Handshake("expected a `ready` reply".into())),
            Err(e) => Err(Error::Handshake(format!("malformed reply `{line}`: {e}"))),
        }
    }

    fn send(&mut self, request: &Request<'_>) -> Result<()> {
        let stdin = self
            .stdin
            .as_mut()
            .ok_or_else(|| Error::Protocol("bridge stdin is closed".into()))?;
        let mut line = serde_json::to_string(request).expect("requests serialize");
        line.push('\n');
        stdin
            .write_all(line.as_bytes())
            .and_then(|_| stdin.flush())
            .map_err(|e| Error::Protocol(format!("cannot write to bridge: {e}")))
    }

    fn recv(&mut self) -> Result<String> {
        let deadline = Instant::now() + self.timeout;
        loop {
            let remaining = deadline.saturating_duration_since(Instant::now());
            match self.lines.recv_timeout(remaining) {
                Ok(Ok(line)) if line.trim().is_empty() => continue,
                Ok(Ok(line)) => return Ok(line),
                Ok(Err(e)) => return Err(Error::Protocol(format!("cannot read from bridge: {e}"))),
                Err(RecvTimeoutError::Timeout) => {
                    return Err(Error::BridgeTimeout(self.timeout.as_millis() as u64))
                }
                Err(RecvTimeoutError::Disconnected) => {
                    return Err(Error::Protocol("bridge closed its output".into()))
                }
            }
        }
    }

    fn round_trip(&mut self, instances: &[Instance]) -> Result<Vec<f64>> {
        let id = self.next_id;
        self.next_id += 1;
        self.send(&Request::Score {
            id,
            instances: instances.iter().map(Instance::values).collect(),
        })?;
        let line = self.recv()?;
        let reply: Reply = serde_json::from_str(&line)
            .map_err(|e| Error::Protocol(format!("malformed reply `{line}`: {e}")))?;
        match reply {
            Reply::Scores { id: got, scores } if got == id => {
                check_scores(&scores, instances.len())?;
                Ok(scores)
            }
            Reply::Scores { id: got, .. } => Err(Error::Protocol(format!(
                "reply id {got} does not match request id {id}"
            ))),
            Reply::Error { id: got, message } => Err(Error::Bridge {
                id: got.unwrap_or(id),
                message,
            }),
            Reply::Ready { .. } => Err(Error::Protocol("unexpected `ready` reply".into())),
        }
    }
}

impl Model for ExecModel {
    fn score_batch(&mut self, instances: &[Instance]) -> Result<Vec<f64>> {
        if self.poisoned {
            return Err(Error::Protocol("bridge failed earlier in this run".into()));
        }
        if instances.is_empty() {
            return Ok(Vec::new());
        }
        let result = self.round_trip(instances);
        if result.is_err() {
            self.poisoned = true;
        }
        result
    }
}

impl Drop for ExecModel {
    fn drop(&mut self) {
        // closing stdin is the bridge's EOF signal
        drop(self.stdin.take());
        let deadline = Instant::now() + Duration::from_millis(500);
        while Instant::now() < deadline {
            match self.child.try_wait() {
                Ok(Some(_)) => return,
                Ok(None) => thread::sleep(Duration::from_millis(5)),
                Err(_) => break,
            }
        }
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}
