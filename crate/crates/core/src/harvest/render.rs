//! Page capture through a browser's remote-debugging WebSocket.
//!
//! Only a handful of commands are used: viewport emulation, navigation,
//! one script evaluation that returns the layout as JSON, and a screenshot.

use std::net::{TcpStream, ToSocketAddrs};
use std::path::Path;
use std::time::{Duration, Instant};

use base64::Engine;
use serde_json::{json, Value};
use thiserror::Error;
use tungstenite::{Message, WebSocket};

use super::snapshot::{PageLayout, RenderedPageSnapshot};
use crate::geometry::PixelDims;

pub const DEFAULT_NAV_TIMEOUT: Duration = Duration::from_secs(30);

#[derive(Debug, Error)]
pub enum RenderError {
    #[error("cannot reach renderer at {endpoint}: {message}")]
    Connection { endpoint: String, message: String },
    #[error("timed out after {0:?} waiting for {1}")]
    Timeout(Duration, String),
    #[error("protocol error: {0}")]
    Protocol(String),
    #[error("{url} served {mime}, not HTML")]
    UnsupportedContent { url: String, mime: String },
    #[error("navigation to {url} failed: {message}")]
    Navigation { url: String, message: String },
    #[error("cannot write screenshot: {0}")]
    Output(String),
}

impl RenderError {
    /// Whether retrying the same page may succeed.
    pub fn is_retryable(&self) -> bool {
        matches!(
            self,
            RenderError::Connection { .. }
                | RenderError::Timeout(..)
                | RenderError::Navigation { .. }
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RendererConfig {
    /// `host:port` of the debugging HTTP endpoint, or a `ws://` target URL.
    pub endpoint: String,
    pub timeout: Duration,
    pub viewport: PixelDims,
}

impl RendererConfig {
    pub fn new(endpoint: impl Into<String>) -> Self {
        Self {
            endpoint: endpoint.into(),
            timeout: DEFAULT_NAV_TIMEOUT,
            viewport: PixelDims {
                width: 1920,
                height: 1080,
            },
        }
    }
}

/// Collects every element's viewport box, rendered text, title attribute and
/// visibility, in document order. Boxes are clipped to the viewport.
pub const LAYOUT_SCRIPT: &str = r#"(() => {
  const W = window.innerWidth, H = window.innerHeight;
  const clip = (v, hi) => Math.min(Math.max(v, 0), hi);
  const nodes = [];
  let id = 0;
  for (const el of document.body ? document.body.querySelectorAll('*') : []) {
    const r = el.getBoundingClientRect();
    const cs = getComputedStyle(el);
    let text = '';
    for (const c of el.childNodes) if (c.nodeType === 3) text += c.textContent;
    const l = clip(r.left, W), t = clip(r.top, H), rr = clip(r.right, W), d = clip(r.bottom, H);
    const shown = cs.display !== 'none' && cs.visibility !== 'hidden' && parseFloat(cs.opacity) > 0;
    nodes.push({id: id++, bbox: [l, t, Math.max(l, rr), Math.max(t, d)],
                text: text.trim(), title: el.getAttribute('title') || '',
                visible: shown && rr > l && d > t});
  }
  return JSON.stringify({url: location.href, width: W, height: H, nodes});
})()"#;

fn websocket_url(cfg: &RendererConfig) -> Result<String, RenderError> {
    if cfg.endpoint.starts_with("ws://") {
        return Ok(cfg.endpoint.clone());
    }
    let base = cfg
        .endpoint
        .trim_start_matches("http://")
        .trim_end_matches('/');
    let url = format!("http://{base}/json/new?about:blank");
    let conn = |message: String| RenderError::Connection {
        endpoint: cfg.endpoint.clone(),
        message,
    };
    let agent: ureq::Agent = ureq::Agent::config_builder()
        .timeout_global(Some(cfg.timeout))
        .build()
        .into();
    let mut resp = agent
        .put(&url)
        .send_empty()
        .map_err(|e| conn(e.to_string()))?;
    let v: Value = resp
        .body_mut()
        .read_json()
        .map_err(|e| RenderError::Protocol(format!("target list: {e}")))?;
    v.get("webSocketDebuggerUrl")
        .and_then(Value::as_str)
        .map(str::to_string)
        .ok_or_else(|| RenderError::Protocol("new target has no webSocketDebuggerUrl".into()))
}

/// One DevTools session over a WebSocket.
pub struct CdpSession {
    ws: WebSocket<TcpStream>,
    next_id: u64,
    events: Vec<Value>,
}

impl CdpSession {
    pub fn connect(ws_url: &str, timeout: Duration) -> Result<Self, RenderError> {
        let conn = |message: String| RenderError::Connection {
            endpoint: ws_url.to_string(),
            message,
        };
        let hostport = ws_url
            .trim_start_matches("ws://")
            .split('/')
            .next()
            .unwrap_or_default()
            .to_string();
        let addr = hostport
            .to_socket_addrs()
            .map_err(|e| conn(e.to_string()))?
            .next()
            .ok_or_else(|| conn("address did not resolve".into()))?;
        let stream = TcpStream::connect_timeout(&addr, timeout).map_err(|e| conn(e.to_string()))?;
        stream
            .set_read_timeout(Some(Duration::from_millis(200)))
            .map_err(|e| conn(e.to_string()))?;
        let (ws, _) = tungstenite::client(ws_url, stream).map_err(|e| conn(e.to_string()))?;
        Ok(Self {
            ws,
            next_id: 1,
            events: Vec::new(),
        })
    }

    fn read_message(
        &mut self,
        deadline: Instant,
        waiting_for: &str,
        limit: Duration,
    ) -> Result<Value, RenderError> {
        loop {
            if Instant::now() >= deadline {
                return Err(RenderError::Timeout(limit, waiting_for.to_string()));
            }
            match self.ws.read() {
                Ok(Message::Text(t)) => {
                    return serde_json::from_str(t.as_str())
                        .map_err(|e| RenderError::Protocol(format!("bad message: {e}")))
                }
                Ok(Message::Close(_)) => {
                    return Err(RenderError::Protocol("renderer closed the session".into()))
                }
                Ok(_) => continue,
                Err(tungstenite::Error::Io(e))
                    if matches!(
                        e.kind(),
                        std::io::ErrorKind::WouldBlock | std::io::ErrorKind::TimedOut
                    ) =>
                {
                    continue
                }
                Err(e) => return Err(RenderError::Protocol(e.to_string())),
            }
        }
    }

    /// Sends a command and waits for its result, buffering events.
    pub fn call(
        &mut self,
        method: &str,
        params: Value,
        timeout: Duration,
    ) -> Result<Value, RenderError> {
        let id = self.next_id;
        self.next_id += 1;
        let msg = json!({"id": id, "method": method, "params": params});
        self.ws
            .send(Message::text(msg.to_string()))
            .map_err(|e| RenderError::Protocol(e.to_string()))?;
        let deadline = Instant::now() + timeout;
        loop {
            let v = self.read_message(deadline, method, timeout)?;
            if v.get("id").and_then(Value::as_u64) == Some(id) {
                if let Some(err) = v.get("error") {
                    return Err(RenderError::Protocol(format!("{method}: {err}")));
                }
                return Ok(v.get("result").cloned().unwrap_or(Value::Null));
            }
            if v.get("method").is_some() {
                self.events.push(v);
            }
        }
    }

    /// Waits for an event named `method`, returning it and every event seen
    /// before it.
    pub fn wait_event(
        &mut self,
        method: &str,
        timeout: Duration,
    ) -> Result<Vec<Value>, RenderError> {
        let deadline = Instant::now() + timeout;
        loop {
            if let Some(pos) = self.events.iter().position(|e| e["method"] == method) {
                return Ok(self.events.drain(..=pos).collect());
            }
            let v = self.read_message(deadline, method, timeout)?;
            if v.get("method").is_some() {
                self.events.push(v);
            }
        }
    }
}

fn is_html(mime: &str) -> bool {
    matches!(
        mime.split(';').next().unwrap_or("").trim(),
        "text/html" | "application/xhtml+xml"
    )
}

/// Loads `url` in the renderer, writes the screenshot to `screenshot_out`
/// and returns the snapshot.
pub fn render_page(
    url: &str,
    cfg: &RendererConfig,
    screenshot_out: &Path,
) -> Result<RenderedPageSnapshot, RenderError> {
    let ws_url = websocket_url(cfg)?;
    let mut s = CdpSession::connect(&ws_url, cfg.timeout)?;
    let t = cfg.timeout;
    s.call(
        "Emulation.setDeviceMetricsOverride",
        json!({"width": cfg.viewport.width, "height": cfg.viewport.height, "deviceScaleFactor": 1, "mobile": false}),
        t,
    )?;
    s.call("Page.enable", json!({}), t)?;
    s.call("Network.enable", json!({}), t)?;
    let nav = s.call("Page.navigate", json!({"url": url}), t)?;
    if let Some(msg) = nav
        .get("errorText")
        .and_then(Value::as_str)
        .filter(|m| !m.is_empty())
    {
        return Err(RenderError::Navigation {
            url: url.to_string(),
            message: msg.to_string(),
        });
    }
    let events = s.wait_event("Page.loadEventFired", t)?;
    let doc_mime = events
        .iter()
        .filter(|e| e["method"] == "Network.responseReceived" && e["params"]["type"] == "Document")
        .filter_map(|e| e["params"]["response"]["mimeType"].as_str())
        .next_back();
    if let Some(mime) = doc_mime.filter(|m| !is_html(m)) {
        return Err(RenderError::UnsupportedContent {
            url: url.to_string(),
            mime: mime.to_string(),
        });
    }
    let eval = s.call(
        "Runtime.evaluate",
        json!({"expression": LAYOUT_SCRIPT, "returnByValue": true}),
        t,
    )?;
    let layout_json = eval["result"]["value"]
        .as_str()
        .ok_or_else(|| RenderError::Protocol("layout script returned no string".into()))?;
    let layout: PageLayout = serde_json::from_str(layout_json)
        .map_err(|e| RenderError::Protocol(format!("layout: {e}")))?;
    let shot = s.call("Page.captureScreenshot", json!({"format": "png"}), t)?;
    let png = base64::engine::general_purpose::STANDARD
        .decode(shot["data"].as_str().unwrap_or_default())
        .map_err(|e| RenderError::Protocol(format!("screenshot: {e}")))?;
    if let Some(parent) = screenshot_out.parent() {
        std::fs::create_dir_all(parent).map_err(|e| RenderError::Output(e.to_string()))?;
    }
    std::fs::write(screenshot_out, png).map_err(|e| RenderError::Output(e.to_string()))?;
    RenderedPageSnapshot::from_layout(layout, screenshot_out.to_path_buf())
        .map_err(|e| RenderError::Protocol(e.to_string()))
}
