//! Line-delimited JSON request/response over a child process's stdio.

use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, ChildStdout, Command, Stdio};
use std::sync::Mutex;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, ProviderError};

struct Pipes {
    stdin: ChildStdin,
    stdout: BufReader<ChildStdout>,
}

/// A long-running helper process. Each request is one JSON line on stdin,
/// answered by one JSON line on stdout. A response object carrying an
/// `"error"` string is surfaced as a protocol error.
pub struct JsonLineProcess {
    service: String,
    child: Mutex<Child>,
    pipes: Mutex<Pipes>,
}

impl JsonLineProcess {
    pub fn spawn(service: &str, program: &str, args: &[String]) -> Result<Self, Error> {
        let mut child = Command::new(program)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| ProviderError::transport(service, format!("cannot start {program}: {e}")))?;
        let stdin = child.stdin.take().expect("stdin is piped");
        let stdout = BufReader::new(child.stdout.take().expect("stdout is piped"));
        Ok(JsonLineProcess {
            service: service.to_owned(),
            child: Mutex::new(child),
            pipes: Mutex::new(Pipes { stdin, stdout }),
        })
    }

    pub fn request<Req: Serialize, Resp: DeserializeOwned>(&self, request: &Req) -> Result<Resp, ProviderError> {
        let value = self.request_value(request)?;
        serde_json::from_value(value).map_err(|e| ProviderError::protocol(&self.service, e))
    }

    pub fn request_value<Req: Serialize>(&self, request: &Req) -> Result<serde_json::Value, ProviderError> {
        let mut line = serde_json::to_string(request).map_err(|e| ProviderError::protocol(&self.service, e))?;
        line.push('\n');
        let mut pipes = self.pipes.lock().unwrap_or_else(|p| p.into_inner());
        pipes
            .stdin
            .write_all(line.as_bytes())
            .and_then(|_| pipes.stdin.flush())
            .map_err(|e| ProviderError::transport(&self.service, e))?;
        let mut reply = String::new();
        let read = pipes.stdout.read_line(&mut reply).map_err(|e| ProviderError::transport(&self.service, e))?;
        if read == 0 {
            return Err(ProviderError::transport(&self.service, "process closed its output"));
        }
        let value: serde_json::Value =
            serde_json::from_str(&reply).map_err(|e| ProviderError::protocol(&self.service, e))?;
        if let Some(msg) = value.get("error").and_then(|e| e.as_str()) {
            return Err(ProviderError::protocol(&self.service, msg));
        }
        Ok(value)
    }
}

impl Drop for JsonLineProcess {
    fn drop(&mut self) {
        if let Ok(mut child) = self.child.lock() {
            let _ = child.kill();
            let _ = child.wait();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips_through_a_shell_echo_loop() {
        let script = r#"while IFS= read -r line; do printf '%s\n' "$line"; done"#;
        let p = JsonLineProcess::spawn("echo", "sh", &["-c".into(), script.into()]).unwrap();
        let v: serde_json::Value = p.request(&serde_json::json!({"text": "Buddhist monks"})).unwrap();
        assert_eq!(v["text"], "Buddhist monks");
    }

    #[test]
    fn error_field_becomes_protocol_error() {
        let script = r#"while IFS= read -r line; do echo '{"error":"boom"}'; done"#;
        let p = JsonLineProcess::spawn("svc", "sh", &["-c".into(), script.into()]).unwrap();
        let err = p.request_value(&1).unwrap_err();
        assert!(matches!(err, ProviderError::Protocol { .. }));
    }

    #[test]
    fn missing_program_is_transport_error() {
        let err = JsonLineProcess::spawn("svc", "/nonexistent/program", &[]).err().unwrap();
        assert!(matches!(err, Error::Provider(ProviderError::Transport { .. })));
    }
}
