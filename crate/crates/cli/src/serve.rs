//! Local HTTP server for running trial sessions in a browser.
//!
//! Serves static files from a root directory plus the session manifest at
//! `/manifest.json`, and accepts completed sessions as `POST /results`.
//! There is no authentication: bind it to a loopback or lab-only address.

use std::fs::{self, OpenOptions};
use std::io::{Read, Write};
use std::path::{Component, Path, PathBuf};

use anyhow::{anyhow, Context, Result};
use tiny_http::{Header, Method, Request, Response, Server};
use vizent_core::experiment::{TrialManifest, TrialResults};

const MAX_BODY: u64 = 8 * 1024 * 1024;

pub struct TrialServer {
    server: Server,
    root: PathBuf,
    manifest: TrialManifest,
    manifest_json: String,
    results_dir: PathBuf,
}

struct Reply {
    status: u16,
    content_type: &'static str,
    body: Vec<u8>,
}

impl Reply {
    fn json(status: u16, value: serde_json::Value) -> Self {
        Self { status, content_type: "application/json", body: value.to_string().into_bytes() }
    }

    fn error(status: u16, message: impl Into<String>) -> Self {
        Self::json(status, serde_json::json!({ "error": message.into() }))
    }
}

impl TrialServer {
    pub fn bind(addr: &str, root: &Path, manifest: TrialManifest, results_dir: &Path) -> Result<Self> {
        manifest.validate()?;
        let root = root.canonicalize().with_context(|| format!("static root {}", root.display()))?;
        fs::create_dir_all(results_dir).with_context(|| format!("creating {}", results_dir.display()))?;
        let server = Server::http(addr).map_err(|e| anyhow!("binding {addr}: {e}"))?;
        let manifest_json = manifest.to_json()?;
        Ok(Self { server, root, manifest, manifest_json, results_dir: results_dir.to_path_buf() })
    }

    pub fn local_addr(&self) -> String {
        self.server.server_addr().to_string()
    }

    /// Handles requests until the process is stopped.
    pub fn run(&self) -> Result<()> {
        for mut request in self.server.incoming_requests() {
            let reply = self.handle(&mut request);
            let header = Header::from_bytes("Content-Type", reply.content_type).expect("static header is valid");
            let response = Response::from_data(reply.body).with_status_code(reply.status).with_header(header);
            if let Err(e) = request.respond(response) {
                eprintln!("warning: failed to send response: {e}");
            }
        }
        Ok(())
    }

    fn handle(&self, request: &mut Request) -> Reply {
        let path = request.url().split(['?', '#']).next().unwrap_or("/").to_string();
        match (request.method(), path.as_str()) {
            (Method::Get, "/manifest.json") => Reply {
                status: 200,
                content_type: "application/json",
                body: self.manifest_json.clone().into_bytes(),
            },
            (Method::Post, "/results") => self.save_results(request),
            (Method::Get, "/") => self.static_file("index.html"),
            (Method::Get, p) => self.static_file(&p[1..]),
            _ => Reply::error(405, "method not allowed"),
        }
    }

    fn static_file(&self, relative: &str) -> Reply {
        let Some(path) = self.resolve(relative) else {
            return Reply::error(404, "not found");
        };
        match fs::read(&path) {
            Ok(body) => Reply { status: 200, content_type: content_type(&path), body },
            Err(_) => Reply::error(404, "not found"),
        }
    }

    /// Maps a URL path onto a file under the root, refusing anything that
    /// would leave it.
    fn resolve(&self, relative: &str) -> Option<PathBuf> {
        if relative.contains(['%', '\\', '\0']) {
            return None;
        }
        let candidate = Path::new(relative);
        if !candidate.components().all(|c| matches!(c, Component::Normal(_))) {
            return None;
        }
        let full = self.root.join(candidate).canonicalize().ok()?;
        (full.starts_with(&self.root) && full.is_file()).then_some(full)
    }

    fn save_results(&self, request: &mut Request) -> Reply {
        let mut body = String::new();
        if request.as_reader().take(MAX_BODY + 1).read_to_string(&mut body).is_err() {
            return Reply::error(400, "body is not UTF-8");
        }
        if body.len() as u64 > MAX_BODY {
            return Reply::error(413, "body too large");
        }
        let results = match TrialResults::from_json(&body) {
            Ok(r) => r,
            Err(e) => return Reply::error(400, e.to_string()),
        };
        if results.participant_id != self.manifest.participant_id {
            return Reply::error(400, format!("participant {} does not match the manifest", results.participant_id));
        }
        if let Err(e) = results.validate_against(&self.manifest) {
            return Reply::error(400, e.to_string());
        }
        match self.write_new(&results) {
            Ok(name) => Reply::json(201, serde_json::json!({ "saved": name })),
            Err(e) => Reply::error(500, e.to_string()),
        }
    }

    fn write_new(&self, results: &TrialResults) -> Result<String> {
        let id: String = results
            .participant_id
            .chars()
            .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
            .collect();
        let stamp = results.completed_at.format("%Y%m%dT%H%M%SZ");
        let json = results.to_json()?;
        for attempt in 0..1000 {
            let name = if attempt == 0 { format!("{id}-{stamp}.json") } else { format!("{id}-{stamp}-{attempt}.json") };
            match OpenOptions::new().write(true).create_new(true).open(self.results_dir.join(&name)) {
                Ok(mut f) => {
                    f.write_all(json.as_bytes())?;
                    f.write_all(b"\n")?;
                    return Ok(name);
                }
                Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => continue,
                Err(e) => return Err(e.into()),
            }
        }
        Err(anyhow!("no free file name for participant {id}"))
    }
}

fn content_type(path: &Path) -> &'static str {
    match path.extension().and_then(|e| e.to_str()).unwrap_or("") {
        "html" | "htm" => "text/html; charset=utf-8",
        "js" | "mjs" => "text/javascript; charset=utf-8",
        "css" => "text/css; charset=utf-8",
        "json" => "application/json",
        "svg" => "image/svg+xml",
        "png" => "image/png",
        "jpg" | "jpeg" => "image/jpeg",
        _ => "application/octet-stream",
    }
}
