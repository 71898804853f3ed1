//! Blocking JSON-over-HTTP helper for the remote adapters.

use std::time::Duration;

use serde::Serialize;
use serde_json::Value;

use crate::error::ProviderError;

#[derive(Clone)]
pub struct JsonHttp {
    agent: ureq::Agent,
    service: String,
}

impl JsonHttp {
    pub fn new(service: impl Into<String>, timeout: Duration) -> Self {
        let config = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(false)
            .build();
        JsonHttp { agent: ureq::Agent::new_with_config(config), service: service.into() }
    }

    fn decode(&self, mut resp: ureq::http::Response<ureq::Body>) -> Result<Option<Value>, ProviderError> {
        let status = resp.status().as_u16();
        if status == 404 {
            return Ok(None);
        }
        if !(200..300).contains(&status) {
            let body = resp.body_mut().read_to_string().unwrap_or_default();
            return Err(ProviderError::transport(&self.service, format!("HTTP {status}: {body}")));
        }
        resp.body_mut().read_json::<Value>().map(Some).map_err(|e| ProviderError::protocol(&self.service, e))
    }

    /// GET a JSON document; a 404 is reported as `Ok(None)`.
    pub fn get(&self, url: &str) -> Result<Option<Value>, ProviderError> {
        let resp = self.agent.get(url).call().map_err(|e| ProviderError::transport(&self.service, e))?;
        self.decode(resp)
    }

    pub fn post<B: Serialize>(&self, url: &str, body: &B) -> Result<Value, ProviderError> {
        let resp = self.agent.post(url).send_json(body).map_err(|e| ProviderError::transport(&self.service, e))?;
        self.decode(resp)?
            .ok_or_else(|| ProviderError::transport(&self.service, format!("HTTP 404 from {url}")))
    }
}

/// Percent-encode a path segment or query value.
pub fn encode_component(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for b in s.bytes() {
        match b {
            b'A'..=b'Z' | b'a'..=b'z' | b'0'..=b'9' | b'-' | b'_' | b'.' | b'~' => out.push(b as char),
            _ => out.push_str(&format!("%{b:02X}")),
        }
    }
    out
}


#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn get_post_and_not_found() {
        let server = mock::serve(|target, body| match target {
            "GET /ok" => (200, r#"{"a":1}"#.into()),
            "POST /echo" => (200, body.to_owned()),
            "GET /fail" => (500, "oops".into()),
            _ => (404, "{}".into()),
        });
        let http = JsonHttp::new("test", Duration::from_secs(5));
        assert_eq!(http.get(&format!("{}/ok", server.url)).unwrap().unwrap()["a"], 1);
        assert_eq!(http.get(&format!("{}/missing", server.url)).unwrap(), None);
        assert!(matches!(http.get(&format!("{}/fail", server.url)), Err(ProviderError::Transport { .. })));
        let echoed = http.post(&format!("{}/echo", server.url), &serde_json::json!({"x": "y"})).unwrap();
        assert_eq!(echoed["x"], "y");
    }

    #[test]
    fn unreachable_host_is_transport_error() {
        let http = JsonHttp::new("test", Duration::from_millis(500));
        assert!(matches!(http.get("http://127.0.0.1:1/x"), Err(ProviderError::Transport { .. })));
    }

    #[test]
    fn percent_encoding() {
        assert_eq!(encode_component("Notre-Dame de Paris"), "Notre-Dame%20de%20Paris");
        assert_eq!(encode_component("Café"), "Caf%C3%A9");
    }
}
