//! In-memory session manager exposing the explorer over JSON.

mod http;

use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant, SystemTime, UNIX_EPOCH};

use parking_lot::{FairMutex, RwLock};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

use crate::checker::CheckError;
use crate::egs::{self, CellValue, CompileOptions, CompiledModel, EgsError, PropertyError};
use crate::explorer::{self, EnabledType, ExploreError, Init, Mode, Op, Session};
use crate::lks::Lasso;

pub use http::{router, serve};

pub const DEFAULT_BOUND: usize = 10;

#[derive(Clone, Debug)]
pub struct ServiceConfig {
    /// Sessions untouched for this long are dropped.
    pub idle_expiry: Duration,
    /// Process-wide cap on concurrently running checker queries.
    pub query_threads: usize,
    pub state_cap: usize,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            idle_expiry: Duration::from_secs(30 * 60),
            query_threads: std::thread::available_parallelism().map_or(4, |n| n.get()),
            state_cap: CompileOptions::default().state_cap,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WireMode {
    #[default]
    #[serde(alias = "ce")]
    Counterexample,
    Witness,
}

impl From<WireMode> for Mode {
    fn from(m: WireMode) -> Self {
        match m {
            WireMode::Counterexample => Mode::CounterExample,
            WireMode::Witness => Mode::Witness,
        }
    }
}

fn default_bound() -> usize {
    DEFAULT_BOUND
}

#[derive(Clone, Debug, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct CreateRequest {
    /// Model source text.
    pub model: String,
    /// An assertion name or a formula.
    pub property: String,
    #[serde(default = "default_bound")]
    pub bound: usize,
    #[serde(default)]
    pub mode: WireMode,
    #[serde(default)]
    pub add_idle: bool,
    #[serde(default)]
    pub strict_type_switch: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct SessionHandle {
    pub id: String,
    /// Seconds since the Unix epoch.
    pub created: u64,
    pub model: String,
    pub property: String,
    pub bound: usize,
    pub mode: WireMode,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StatePayload {
    pub id: String,
    pub props: Map<String, Value>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EventPayload {
    pub name: String,
    pub args: Vec<String>,
    #[serde(rename = "type")]
    pub ty: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct TracePayload {
    pub states: Vec<StatePayload>,
    pub events: Vec<EventPayload>,
    pub loop_start: usize,
    pub focus: usize,
    /// The focus folded into `states`.
    pub display_focus: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "result", rename_all = "camelCase")]
pub enum CreateResponse {
    Session {
        session: SessionHandle,
        revision: u64,
        trace: TracePayload,
    },
    PropertyHolds {
        bound: usize,
    },
}

#[derive(Clone, Debug, PartialEq, Eq, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case", deny_unknown_fields)]
pub enum OpRequest {
    Forward,
    Backward,
    AltState,
    AltEvent,
    SetType {
        #[serde(rename = "type")]
        ty: String,
    },
}

impl From<OpRequest> for Op {
    fn from(r: OpRequest) -> Self {
        match r {
            OpRequest::Forward => Op::Forward,
            OpRequest::Backward => Op::Backward,
            OpRequest::AltState => Op::AltState,
            OpRequest::AltEvent => Op::AltEvent,
            OpRequest::SetType { ty } => Op::SetType(ty),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "result", rename_all = "camelCase")]
pub enum OpResponse {
    /// `trace` is present when the counter-example changed.
    Applied {
        focus: usize,
        revision: u64,
        #[serde(skip_serializing_if = "Option::is_none")]
        trace: Option<TracePayload>,
    },
    NoAlternative {
        focus: usize,
        revision: u64,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct TraceResponse {
    pub revision: u64,
    pub trace: TracePayload,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TypeStatus {
    pub enabled: bool,
    pub ms: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EnabledPayload {
    pub revision: u64,
    /// Keyed by type name, in type-id order.
    pub types: Map<String, Value>,
}

impl EnabledPayload {
    pub fn new(revision: u64, results: &[EnabledType]) -> Self {
        let types = results
            .iter()
            .map(|r| {
                let status = TypeStatus {
                    enabled: r.enabled,
                    ms: r.ms,
                };
                (
                    r.name.clone(),
                    serde_json::to_value(status).expect("plain struct"),
                )
            })
            .collect();
        Self { revision, types }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Location {
    pub line: usize,
    pub column: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ErrorPayload {
    pub code: &'static str,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub location: Option<Location>,
}

#[derive(Clone, Debug, Error, PartialEq)]
pub enum ServiceError {
    #[error("model: {0}")]
    Model(#[from] EgsError),
    #[error(transparent)]
    Property(#[from] PropertyError),
    #[error("unknown session `{0}`")]
    UnknownSession(String),
    #[error(transparent)]
    Explore(#[from] ExploreError),
    #[error("{0}")]
    BadRequest(String),
}

impl ServiceError {
    pub fn code(&self) -> &'static str {
        match self {
            ServiceError::Model(_) => "model_error",
            ServiceError::Property(_) => "property_error",
            ServiceError::UnknownSession(_) => "unknown_session",
            ServiceError::Explore(ExploreError::Boundary) => "boundary",
            ServiceError::Explore(ExploreError::NoAlternative) => "no_alternative",
            ServiceError::Explore(ExploreError::UnknownType(_)) => "unknown_type",
            ServiceError::Explore(ExploreError::Check(CheckError::Malformed(_))) => {
                "malformed_model"
            }
            ServiceError::Explore(ExploreError::Check(_)) | ServiceError::BadRequest(_) => {
                "bad_request"
            }
        }
    }

    /// HTTP status code.
    pub fn status(&self) -> u16 {
        match self.code() {
            "unknown_session" => 404,
            "boundary" | "no_alternative" => 409,
            "bad_request" => 400,
            _ => 422,
        }
    }

    pub fn location(&self) -> Option<Location> {
        let (line, column) = match self {
            ServiceError::Model(e) => e.location()?,
            ServiceError::Property(e) => e.location()?,
            _ => return None,
        };
        Some(Location { line, column })
    }

    pub fn payload(&self) -> ErrorPayload {
        ErrorPayload {
            code: self.code(),
            message: self.to_string(),
            location: self.location(),
        }
    }
}

/// Renders the counter-example of `session` for the client.
pub fn render_trace(model: &CompiledModel, session: &Session) -> TracePayload {
    let lks = &model.lks;
    let pi: &Lasso = session.lasso();
    let states = pi
        .states
        .iter()
        .map(|&s| StatePayload {
            id: lks.state_name(s).to_string(),
            props: model
                .cell_values(s)
                .into_iter()
                .map(|(name, v)| {
                    let v = match v {
                        CellValue::Bool(b) => Value::Bool(b),
                        CellValue::Const(c) => Value::String(c),
                    };
                    (name, v)
                })
                .collect(),
        })
        .collect();
    let events = pi
        .events
        .iter()
        .map(|&e| {
            let info = lks.event(e);
            EventPayload {
                name: info.base.clone(),
                args: info.args.clone(),
                ty: lks.type_name(info.ty).to_string(),
            }
        })
        .collect();
    TracePayload {
        states,
        events,
        loop_start: pi.loop_start,
        focus: session.focus(),
        display_focus: session.display_focus(),
    }
}

struct Slot {
    session: Session,
    enabled: Option<EnabledPayload>,
}

struct Entry {
    handle: SessionHandle,
    model: Arc<CompiledModel>,
    slot: FairMutex<Slot>,
    /// Milliseconds since the manager started.
    last_used: AtomicU64,
}

/// Owns every live session. Calls block; run them off async executors.
pub struct SessionManager {
    config: ServiceConfig,
    sessions: RwLock<HashMap<String, Arc<Entry>>>,
    next_id: AtomicU64,
    epoch: Instant,
    pool: rayon::ThreadPool,
}

impl SessionManager {
    pub fn new(config: ServiceConfig) -> Self {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(config.query_threads.max(1))
            .thread_name(|i| format!("selx-query-{i}"))
            .build()
            .expect("thread pool");
        Self {
            config,
            sessions: RwLock::new(HashMap::new()),
            next_id: AtomicU64::new(1),
            epoch: Instant::now(),
            pool,
        }
    }

    pub fn config(&self) -> &ServiceConfig {
        &self.config
    }

    fn now_ms(&self) -> u64 {
        self.epoch.elapsed().as_millis() as u64
    }

    fn entry(&self, id: &str) -> Result<Arc<Entry>, ServiceError> {
        self.sweep();
        let e = self
            .sessions
            .read()
            .get(id)
            .cloned()
            .ok_or_else(|| ServiceError::UnknownSession(id.to_string()))?;
        e.last_used.store(self.now_ms(), Ordering::Relaxed);
        Ok(e)
    }

    /// Drops sessions idle for longer than the configured expiry.
    pub fn sweep(&self) {
        let limit = self.config.idle_expiry.as_millis() as u64;
        let now = self.now_ms();
        self.sessions
            .write()
            .retain(|_, e| now.saturating_sub(e.last_used.load(Ordering::Relaxed)) <= limit);
    }

    pub fn len(&self) -> usize {
        self.sessions.read().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn create(&self, req: CreateRequest) -> Result<CreateResponse, ServiceError> {
        if req.bound == 0 {
            return Err(ServiceError::BadRequest(
                "the bound must be at least 1".into(),
            ));
        }
        let sys = egs::parse_model(&req.model)?;
        let opts = CompileOptions {
            add_idle: req.add_idle,
            state_cap: self.config.state_cap,
        };
        let model = Arc::new(egs::compile_lks(&sys, opts)?);
        let phi = model.property(&req.property)?;
        let lks = Arc::new(model.lks.clone());
        let init = self
            .pool
            .install(|| explorer::init_session(lks, phi, req.bound, req.mode.into()))?;
        let mut session = match init {
            Init::PropertyHolds(bound) => return Ok(CreateResponse::PropertyHolds { bound }),
            Init::Session(s) => *s,
        };
        session.set_strict_type_switch(req.strict_type_switch);
        let n = self.next_id.fetch_add(1, Ordering::Relaxed);
        let created = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map_or(0, |d| d.as_secs());
        let handle = SessionHandle {
            id: format!("{:x}-{n}", self.epoch_nonce()),
            created,
            model: model.system.name.clone(),
            property: req.property.trim().to_string(),
            bound: req.bound,
            mode: req.mode,
        };
        let response = CreateResponse::Session {
            session: handle.clone(),
            revision: session.revision(),
            trace: render_trace(&model, &session),
        };
        let entry = Entry {
            handle: handle.clone(),
            model,
            slot: FairMutex::new(Slot {
                session,
                enabled: None,
            }),
            last_used: AtomicU64::new(self.now_ms()),
        };
        self.sweep();
        self.sessions.write().insert(handle.id, Arc::new(entry));
        Ok(response)
    }

    /// Per-process prefix keeping ids distinct across restarts.
    fn epoch_nonce(&self) -> u64 {
        let start = SystemTime::now() - self.epoch.elapsed();
        start
            .duration_since(UNIX_EPOCH)
            .map_or(0, |d| d.as_nanos() as u64)
            & 0xffff_ffff
    }

    pub fn handle(&self, id: &str) -> Result<SessionHandle, ServiceError> {
        Ok(self.entry(id)?.handle.clone())
    }

    pub fn delete(&self, id: &str) -> Result<(), ServiceError> {
        self.sessions
            .write()
            .remove(id)
            .map(drop)
            .ok_or_else(|| ServiceError::UnknownSession(id.to_string()))
    }

    pub fn apply(&self, id: &str, op: OpRequest) -> Result<OpResponse, ServiceError> {
        let e = self.entry(id)?;
        let mut slot = e.slot.lock();
        let before = slot.session.lasso().clone();
        let session = &mut slot.session;
        let result = self.pool.install(|| session.apply(&op.into()));
        let s = &slot.session;
        match result {
            Ok(()) => Ok(OpResponse::Applied {
                focus: s.focus(),
                revision: s.revision(),
                trace: (s.lasso() != &before).then(|| render_trace(&e.model, s)),
            }),
            Err(ExploreError::NoAlternative) => Ok(OpResponse::NoAlternative {
                focus: s.focus(),
                revision: s.revision(),
            }),
            Err(err) => Err(err.into()),
        }
    }

    pub fn trace(&self, id: &str) -> Result<TraceResponse, ServiceError> {
        let e = self.entry(id)?;
        let slot = e.slot.lock();
        Ok(TraceResponse {
            revision: slot.session.revision(),
            trace: render_trace(&e.model, &slot.session),
        })
    }

    /// The enabled-type map of the current revision, and whether it came
    /// from the cache.
    pub fn enabled(&self, id: &str) -> Result<(EnabledPayload, bool), ServiceError> {
        self.enabled_each(id, |_, _| {})
    }

    /// As [`SessionManager::enabled`], also passing each type's result to
    /// `on_result` as soon as it is known.
    pub fn enabled_each(
        &self,
        id: &str,
        on_result: impl Fn(&str, &TypeStatus) + Sync,
    ) -> Result<(EnabledPayload, bool), ServiceError> {
        let e = self.entry(id)?;
        let mut slot = e.slot.lock();
        let revision = slot.session.revision();
        if let Some(cached) = slot.enabled.as_ref().filter(|c| c.revision == revision) {
            for (name, v) in &cached.types {
                let status = TypeStatus {
                    enabled: v["enabled"].as_bool().unwrap_or(false),
                    ms: v["ms"].as_f64().unwrap_or(0.0),
                };
                on_result(name, &status);
            }
            return Ok((cached.clone(), true));
        }
        let session = &slot.session;
        let results = self.pool.install(|| {
            session.enabled_types_each(|r| {
                on_result(
                    &r.name,
                    &TypeStatus {
                        enabled: r.enabled,
                        ms: r.ms,
                    },
                )
            })
        });
        let payload = EnabledPayload::new(revision, &results);
        slot.enabled = Some(payload.clone());
        Ok((payload, false))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::TOGGLE;

    fn manager() -> SessionManager {
        SessionManager::new(ServiceConfig {
            query_threads: 2,
            ..Default::default()
        })
    }

    fn request(property: &str, bound: usize) -> CreateRequest {
        CreateRequest {
            model: TOGGLE.to_string(),
            property: property.to_string(),
            bound,
            mode: WireMode::Counterexample,
            add_idle: false,
            strict_type_switch: false,
        }
    }

    fn open(m: &SessionManager) -> (String, TracePayload) {
        match m.create(request("G !p", 4)).unwrap() {
            CreateResponse::Session { session, trace, .. } => (session.id, trace),
            other => panic!("{other:?}"),
        }
    }

    fn enabled_flags(p: &EnabledPayload) -> Vec<(String, bool)> {
        p.types
            .iter()
            .map(|(k, v)| (k.clone(), v["enabled"].as_bool().unwrap()))
            .collect()
    }

    #[test]
    fn create_renders_trace() {
        let m = manager();
        let (id, trace) = open(&m);
        assert_eq!(trace.states.len(), 2);
        assert_eq!(trace.loop_start, 1);
        assert_eq!(trace.focus, 0);
        assert_eq!(trace.states[0].props["p"], Value::Bool(false));
        assert_eq!(trace.events[0].name, "Set");
        assert_eq!(trace.events[0].args, ["A"]);
        assert_eq!(trace.events[0].ty, "Set");
        let h = m.handle(&id).unwrap();
        assert_eq!((h.model.as_str(), h.bound), ("toggle", 4));
        assert_eq!(
            m.create(request("F p", 6)).unwrap(),
            CreateResponse::PropertyHolds { bound: 6 }
        );
    }

    #[test]
    fn create_errors() {
        let m = manager();
        let mut r = request("G !p", 4);
        r.model = "model m\nvar p: bool\nbogus".into();
        let e = m.create(r).unwrap_err();
        assert_eq!((e.code(), e.status()), ("model_error", 422));
        assert!(e.payload().location.is_some());
        let e = m.create(request("G (", 4)).unwrap_err();
        assert_eq!(e.code(), "property_error");
        assert_eq!(e.payload().location, Some(Location { line: 1, column: 4 }));
        assert_eq!(m.create(request("p", 0)).unwrap_err().status(), 400);
        assert!(m.is_empty());
    }

    #[test]
    fn ops() {
        let m = manager();
        let (id, _) = open(&m);
        let r = m.apply(&id, OpRequest::Forward).unwrap();
        assert_eq!(
            r,
            OpResponse::Applied {
                focus: 1,
                revision: 1,
                trace: None
            }
        );
        m.apply(&id, OpRequest::Backward).unwrap();
        let e = m.apply(&id, OpRequest::Backward).unwrap_err();
        assert_eq!((e.code(), e.status()), ("boundary", 409));
        match m.apply(&id, OpRequest::AltEvent).unwrap() {
            OpResponse::Applied { trace: Some(t), .. } => assert_eq!(t.events[0].args, ["B"]),
            other => panic!("{other:?}"),
        }
        let r = m
            .apply(&id, OpRequest::SetType { ty: "Unset".into() })
            .unwrap();
        assert_eq!(
            r,
            OpResponse::NoAlternative {
                focus: 0,
                revision: 3
            }
        );
        let e = m
            .apply(&id, OpRequest::SetType { ty: "Jump".into() })
            .unwrap_err();
        assert_eq!(e.code(), "unknown_type");
        assert_eq!(
            m.apply("nope", OpRequest::Forward).unwrap_err().status(),
            404
        );
    }

    #[test]
    fn enabled_is_cached_per_revision() {
        let m = manager();
        let (id, _) = open(&m);
        let (first, cached) = m.enabled(&id).unwrap();
        assert!(!cached);
        assert_eq!(
            enabled_flags(&first),
            [
                ("Set".into(), true),
                ("Stay".into(), false),
                ("Unset".into(), false)
            ]
        );
        let (second, cached) = m.enabled(&id).unwrap();
        assert!(cached);
        assert_eq!(
            serde_json::to_string(&first).unwrap(),
            serde_json::to_string(&second).unwrap()
        );
        m.apply(&id, OpRequest::Forward).unwrap();
        let (third, cached) = m.enabled(&id).unwrap();
        assert!(!cached);
        assert_eq!(
            enabled_flags(&third),
            [
                ("Set".into(), false),
                ("Stay".into(), true),
                ("Unset".into(), true)
            ]
        );
    }

    #[test]
    fn replay_is_byte_identical() {
        let ops = || {
            [
                OpRequest::AltEvent,
                OpRequest::Forward,
                OpRequest::SetType { ty: "Unset".into() },
                OpRequest::Forward,
                OpRequest::AltState,
            ]
        };
        let run = || {
            let m = manager();
            let (id, _) = open(&m);
            let mut out = Vec::new();
            for op in ops() {
                out.push(serde_json::to_string(&m.apply(&id, op).unwrap()).unwrap());
            }
            out.push(serde_json::to_string(&m.trace(&id).unwrap()).unwrap());
            out
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn idle_sessions_expire() {
        let m = SessionManager::new(ServiceConfig {
            idle_expiry: Duration::ZERO,
            query_threads: 1,
            ..Default::default()
        });
        let (id, _) = open(&m);
        std::thread::sleep(Duration::from_millis(5));
        assert!(matches!(m.trace(&id), Err(ServiceError::UnknownSession(_))));
    }

    #[test]
    fn wire_formats() {
        let op: OpRequest = serde_json::from_str(r#"{"op":"set_type","type":"Stay"}"#).unwrap();
        assert_eq!(op, OpRequest::SetType { ty: "Stay".into() });
        let op: OpRequest = serde_json::from_str(r#"{"op":"alt_state"}"#).unwrap();
        assert_eq!(op, OpRequest::AltState);
        let r: CreateRequest =
            serde_json::from_str(r#"{"model":"m","property":"p","mode":"ce"}"#).unwrap();
        assert_eq!((r.bound, r.mode), (DEFAULT_BOUND, WireMode::Counterexample));
        let e = ServiceError::UnknownSession("x".into()).payload();
        assert_eq!(
            serde_json::to_value(e).unwrap(),
            serde_json::json!({"code": "unknown_session", "message": "unknown session `x`"})
        );
    }
}
