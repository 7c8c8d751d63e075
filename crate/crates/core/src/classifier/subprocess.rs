use std::io::BufReader;
use std::process::{Child, ChildStdin, ChildStdout, Command, Stdio};
use std::sync::Mutex;

use super::protocol::{exchange, Request};
use super::{Backend, RawScores};
use crate::error::{Error, Result};
use crate::imagery::Shape;

struct Peer {
    child: Child,
    stdin: ChildStdin,
    stdout: BufReader<ChildStdout>,
    next_id: u64,
}

/// Long-lived child process; batches are serialised through one pipe pair.
pub(crate) struct SubprocessBackend {
    peer: Mutex<Peer>,
    command: String,
}

impl SubprocessBackend {
    pub fn spawn(command: &[String]) -> Result<Self> {
        let (program, args) = command
            .split_first()
            .ok_or_else(|| Error::Config("subprocess command is empty".into()))?;
        let mut child = Command::new(program)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| Error::Backend(format!("cannot start {program:?}: {e}")))?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = BufReader::new(child.stdout.take().expect("piped stdout"));
        Ok(SubprocessBackend {
            peer: Mutex::new(Peer { child, stdin, stdout, next_id: 0 }),
            command: command.join(" "),
        })
    }
}

impl Backend for SubprocessBackend {
    fn infer(&self, shape: Shape, tensors: &[Vec<f32>]) -> Result<Vec<RawScores>> {
        let mut guard = self
            .peer
            .lock()
            .map_err(|_| Error::Backend("classifier process handle poisoned".into()))?;
        let peer = &mut *guard;
        let first = peer.next_id;
        peer.next_id += tensors.len() as u64;
        let requests: Vec<Request> = tensors
            .iter()
            .enumerate()
            .map(|(i, t)| Request::new(first + i as u64, shape, t))
            .collect();
        let responses = exchange(&mut peer.stdout, &mut peer.stdin, &requests).map_err(|e| {
            let status = match peer.child.try_wait() {
                Ok(Some(s)) => format!(" (process exited: {s})"),
                _ => String::new(),
            };
            match e {
                Error::Backend(m) => Error::Backend(format!("{}: {m}{status}", self.command)),
                other => other,
            }
        })?;
        responses
            .into_iter()
            .map(|r| {
                if r.confidences.iter().any(|c| !c.is_finite()) {
                    return Err(Error::Protocol(format!("non-finite confidence in response {}", r.id)));
                }
                Ok(RawScores {
                    reported_label: Some(r.label as usize),
                    scores: r.confidences.iter().map(|c| *c as f64).collect(),
                })
            })
            .collect()
    }
}

impl Drop for SubprocessBackend {
    fn drop(&mut self) {
        if let Ok(peer) = self.peer.get_mut() {
            let _ = peer.child.kill();
            let _ = peer.child.wait();
        }
    }
}
