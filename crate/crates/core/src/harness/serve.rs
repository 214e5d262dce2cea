//! JSON-over-HTTP backend for interactive exploration of one dataset.
//!
//! Routing lives in [`ServeState::handle`], a pure function of the request
//! target, so it can be exercised without a socket. Every bandwidth is
//! rounded to 1e-6 before use and results are cached under that key.

use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, Mutex};
use std::thread;

use serde::Serialize;
use serde_json::json;

use crate::bandwidth::{select, BandwidthChoice, Selector};
use crate::density::Sample;
use crate::error::{Error, Result};
use crate::hdr::threshold_from_densities;
use crate::pipeline::{filtration, Filtration, PipelineConfig};

use super::export::{angle_grid, ccluster_row, tree_document, CoresDoc, default_inv_h2_grid, scluster_frame, DEFAULT_ANGLE_RESOLUTION, DEFAULT_DISK_RESOLUTION};

const H_SCALE: f64 = 1e6;
const CACHE_LIMIT: usize = 256;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Response {
    pub status: u16,
    pub body: String,
}

impl Response {
    fn ok<T: Serialize>(value: &T) -> Self {
        match serde_json::to_string(value) {
            Ok(body) => Response { status: 200, body },
            Err(e) => Response::error(500, &e.to_string()),
        }
    }

    fn error(status: u16, message: &str) -> Self {
        Response { status, body: json!({ "error": message }).to_string() }
    }
}

#[derive(Debug, Clone)]
pub struct ServeOptions {
    pub pipeline: PipelineConfig,
    pub angle_resolution: usize,
    pub disk_resolution: usize,
}

impl Default for ServeOptions {
    fn default() -> Self {
        ServeOptions {
            pipeline: PipelineConfig::default(),
            angle_resolution: DEFAULT_ANGLE_RESOLUTION,
            disk_resolution: DEFAULT_DISK_RESOLUTION,
        }
    }
}

pub struct ServeState {
    sample: Sample,
    options: ServeOptions,
    selectors: BTreeMap<String, f64>,
    unavailable: BTreeMap<String, String>,
    filtrations: Mutex<HashMap<i64, Arc<Filtration>>>,
    bodies: Mutex<HashMap<(&'static str, i64), Arc<Response>>>,
}

enum Failure {
    BadRequest(String),
    Unprocessable(String),
    Internal(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::WrongDim { .. } | Error::UnsupportedDim(_) | Error::DimMismatch { .. } => {
                Failure::Unprocessable(e.to_string())
            }
            Error::InvalidArgument(_) => Failure::BadRequest(e.to_string()),
            _ => Failure::Internal(e.to_string()),
        }
    }
}

type Handled = std::result::Result<Response, Failure>;

impl ServeState {
    /// Runs every selector that applies to the sample's dimension up front.
    pub fn new(sample: Sample, options: ServeOptions) -> Self {
        let mut selectors = BTreeMap::new();
        let mut unavailable = BTreeMap::new();
        for sel in Selector::ALL {
            if !sel.supports_dim(sample.dim()) {
                continue;
            }
            match select(&sample, sel, options.pipeline.range) {
                Ok(r) => {
                    selectors.insert(sel.id().to_string(), r.h);
                }
                Err(e) => {
                    unavailable.insert(sel.id().to_string(), e.to_string());
                }
            }
        }
        ServeState {
            sample,
            options,
            selectors,
            unavailable,
            filtrations: Mutex::new(HashMap::new()),
            bodies: Mutex::new(HashMap::new()),
        }
    }

    pub fn sample(&self) -> &Sample {
        &self.sample
    }

    pub fn selector_bandwidths(&self) -> &BTreeMap<String, f64> {
        &self.selectors
    }

    /// Response for a GET of `target` (path plus optional query string).
    pub fn handle(&self, target: &str) -> Response {
        let (path, query) = target.split_once('?').unwrap_or((target, ""));
        let params: HashMap<String, String> = form_urlencoded::parse(query.as_bytes()).into_owned().collect();
        let result = match path {
            "/api/meta" => Ok(self.meta()),
            "/api/density" => self.cached("density", &params, |s, key| s.density(key)),
            "/api/tree" => self.cached("tree", &params, |s, key| s.tree(key)),
            "/api/cores" => self.cached("cores", &params, |s, key| s.cores(key)),
            "/api/hdr" => self.hdr(&params),
            _ => return Response::error(404, &format!("no route for {path}")),
        };
        match result {
            Ok(r) => r,
            Err(Failure::BadRequest(m)) => Response::error(400, &m),
            Err(Failure::Unprocessable(m)) => Response::error(422, &m),
            Err(Failure::Internal(m)) => Response::error(500, &m),
        }
    }

    fn meta(&self) -> Response {
        let d = self.sample.dim();
        Response::ok(&json!({
            "n": self.sample.len(),
            "d": d,
            "selectors": self.selectors,
            "unavailable_selectors": self.unavailable,
            "taus": self.options.pipeline.taus.taus(),
            "inv_h2_grid": if d == 2 { Some(default_inv_h2_grid()) } else { None },
            "angle_resolution": self.options.angle_resolution,
            "disk_resolution": self.options.disk_resolution,
            "neighborhood": self.options.pipeline.graph.neighborhood(self.sample.len()),
        }))
    }

    /// Cache key of the `h` parameter: a literal bandwidth or a selector id.
    fn h_key(&self, params: &HashMap<String, String>) -> std::result::Result<i64, Failure> {
        let raw = params.get("h").ok_or_else(|| Failure::BadRequest("missing parameter h".into()))?;
        let h = match raw.parse::<BandwidthChoice>() {
            Ok(BandwidthChoice::Fixed(h)) => h,
            Ok(BandwidthChoice::Select(sel)) => *self.selectors.get(sel.id()).ok_or_else(|| {
                Failure::Unprocessable(format!("selector {} is not available for this dataset", sel.id()))
            })?,
            Err(e) => return Err(Failure::BadRequest(e.to_string())),
        };
        let key = (h * H_SCALE).round();
        if !(key >= 1.0 && key < i64::MAX as f64) {
            return Err(Failure::BadRequest(format!("bandwidth {h} is out of range")));
        }
        Ok(key as i64)
    }

    fn cached(
        &self,
        kind: &'static str,
        params: &HashMap<String, String>,
        compute: impl FnOnce(&Self, i64) -> Handled,
    ) -> Handled {
        let key = self.h_key(params)?;
        if let Some(r) = self.bodies.lock().expect("cache lock").get(&(kind, key)) {
            return Ok((**r).clone());
        }
        let r = compute(self, key)?;
        let mut cache = self.bodies.lock().expect("cache lock");
        if cache.len() >= CACHE_LIMIT {
            cache.clear();
        }
        cache.insert((kind, key), Arc::new(r.clone()));
        Ok(r)
    }

    fn filtration(&self, key: i64) -> std::result::Result<Arc<Filtration>, Failure> {
        if let Some(f) = self.filtrations.lock().expect("cache lock").get(&key) {
            return Ok(Arc::clone(f));
        }
        let f = Arc::new(filtration(&self.sample, key as f64 / H_SCALE, &self.options.pipeline)?);
        let mut cache = self.filtrations.lock().expect("cache lock");
        if cache.len() >= CACHE_LIMIT {
            cache.clear();
        }
        cache.insert(key, Arc::clone(&f));
        Ok(f)
    }

    fn density(&self, key: i64) -> Handled {
        let h = key as f64 / H_SCALE;
        let taus = &self.options.pipeline.taus;
        match self.sample.dim() {
            2 => {
                let angles = angle_grid(self.options.angle_resolution);
                let row = ccluster_row(&self.sample, 1.0 / (h * h), &angles, taus)?;
                Ok(Response::ok(&json!({ "h": h, "angles": angles, "taus": taus.taus(), "row": row })))
            }
            3 => {
                let frame = scluster_frame(&self.sample, h, self.options.disk_resolution, taus)?;
                Ok(Response::ok(&json!({ "h": h, "taus": taus.taus(), "frame": frame })))
            }
            d => Err(Failure::Unprocessable(format!("density views exist for d = 2 or 3, not {d}"))),
        }
    }

    fn tree(&self, key: i64) -> Handled {
        let f = self.filtration(key)?;
        Ok(Response::ok(&tree_document(&f)))
    }

    fn cores(&self, key: i64) -> Handled {
        let f = self.filtration(key)?;
        Ok(Response::ok(&CoresDoc { h: f.h, cores: f.cores.clone() }))
    }

    fn hdr(&self, params: &HashMap<String, String>) -> Handled {
        let key = self.h_key(params)?;
        let tau = params
            .get("tau")
            .ok_or_else(|| Failure::BadRequest("missing parameter tau".into()))?
            .parse::<f64>()
            .map_err(|e| Failure::BadRequest(format!("tau: {e}")))?;
        if !(tau > 0.0 && tau < 1.0) {
            return Err(Failure::BadRequest(format!("tau must lie in (0, 1), got {tau}")));
        }
        let f = self.filtration(key)?;
        let dens = f.tree.vertex_density();
        let threshold = threshold_from_densities(dens, tau)?;
        let mask: Vec<bool> = dens.iter().map(|&v| v >= threshold).collect();
        Ok(Response::ok(&json!({ "h": f.h, "tau": tau, "threshold": threshold, "mask": mask })))
    }
}

pub fn bind(addr: &str) -> Result<tiny_http::Server> {
    tiny_http::Server::http(addr).map_err(|e| Error::Io(e.to_string()))
}

/// Answers requests on `server` with `workers` threads until the server is dropped.
pub fn run(server: Arc<tiny_http::Server>, state: Arc<ServeState>, workers: usize) {
    let handles: Vec<_> = (0..workers.max(1))
        .map(|_| {
            let server = Arc::clone(&server);
            let state = Arc::clone(&state);
            thread::spawn(move || {
                for request in server.incoming_requests() {
                    let response = if *request.method() == tiny_http::Method::Get {
                        state.handle(request.url())
                    } else {
                        Response::error(405, "only GET is supported")
                    };
                    let http = tiny_http::Response::from_string(response.body)
                        .with_status_code(response.status)
                        .with_header(header("Content-Type", "application/json"))
                        .with_header(header("Access-Control-Allow-Origin", "*"));
                    // a client that hung up is not our problem
                    let _ = request.respond(http);
                }
            })
        })
        .collect();
    for h in handles {
        let _ = h.join();
    }
}

fn header(name: &str, value: &str) -> tiny_http::Header {
    tiny_http::Header::from_bytes(name.as_bytes(), value.as_bytes()).expect("static header is valid")
}
