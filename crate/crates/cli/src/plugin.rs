//! Black boxes backed by an external process speaking a line protocol.
//!
//! Each query writes the queried subset as one line of space-separated,
//! sorted element identifiers (an empty line for ∅). The plugin answers with
//! one line holding a decimal real. Closing stdin ends the session.

use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::thread;
use std::time::Duration;

use pwrap::{Error, Evaluator, SubsetRef};

pub struct PluginEvaluator {
    child: Child,
    stdin: Option<ChildStdin>,
    replies: Receiver<String>,
    timeout: Duration,
    failure: Option<String>,
}

impl PluginEvaluator {
    /// Starts `command` through `sh -c` in its own process group.
    pub fn spawn(command: &str, timeout: Duration) -> std::io::Result<Self> {
        let mut cmd = Command::new("sh");
        cmd.arg("-c").arg(command).stdin(Stdio::piped()).stdout(Stdio::piped()).stderr(Stdio::inherit());
        #[cfg(unix)]
        {
            use std::os::unix::process::CommandExt;
            cmd.process_group(0);
        }
        let mut child = cmd.spawn()?;
        let stdin = child.stdin.take();
        let stdout = child.stdout.take().expect("stdout is piped");
        let (tx, replies) = mpsc::channel();
        // The reader thread may outlive a hung plugin; it exits once the pipe closes.
        thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                let Ok(line) = line else { break };
                if tx.send(line).is_err() {
                    break;
                }
            }
        });
        Ok(PluginEvaluator { child, stdin, replies, timeout, failure: None })
    }

    fn fail(&mut self, msg: String) -> Error {
        self.terminate();
        self.failure = Some(msg.clone());
        Error::Plugin(msg)
    }

    fn terminate(&mut self) {
        self.stdin = None;
        #[cfg(unix)]
        unsafe {
            // Negative pid: signal the whole process group the plugin leads.
            libc::kill(-(self.child.id() as i32), libc::SIGKILL);
        }
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

impl Evaluator for PluginEvaluator {
    fn evaluate(&mut self, z: &SubsetRef<'_>) -> pwrap::Result<f64> {
        if let Some(msg) = &self.failure {
            return Err(Error::Plugin(msg.clone()));
        }
        let line = z.elements().map(|e| e.to_string()).collect::<Vec<_>>().join(" ");
        let Some(stdin) = self.stdin.as_mut() else {
            return Err(self.fail("plugin stdin is closed".into()));
        };
        if let Err(e) = writeln!(stdin, "{line}").and_then(|()| stdin.flush()) {
            return Err(self.fail(format!("cannot send query: {e}")));
        }
        match self.replies.recv_timeout(self.timeout) {
            Ok(reply) => match reply.trim().parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                _ => Err(self.fail(format!("malformed reply {reply:?}"))),
            },
            Err(RecvTimeoutError::Timeout) => Err(self.fail(format!("no reply within {:.3}s", self.timeout.as_secs_f64()))),
            Err(RecvTimeoutError::Disconnected) => Err(self.fail("plugin exited before replying".into())),
        }
    }
}

impl Drop for PluginEvaluator {
    fn drop(&mut self) {
        if self.failure.is_none() {
            self.terminate();
        }
    }
}
