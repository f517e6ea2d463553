use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use statebuddy_core::engine::{AutopilotOutcome, DispatchOutcome, FireOrigin};
use statebuddy_core::helper::{HelperDoc, HelperMode};
use statebuddy_core::report::TimingReport;
use statebuddy_core::workflow::export_diagram;
use statebuddy_core::IntentDecision;

use crate::error::{engine_body, ApiError, ErrorBody};
use crate::{Service, SessionSummary};

pub fn router(service: Service) -> Router {
    Router::new()
        .route("/health", get(|| async { Json(json!({"status": "ok"})) }))
        .route("/workflows", get(list_workflows))
        .route("/workflows/{id}", get(get_workflow))
        .route("/diagnostics", get(diagnostics))
        .route("/sessions", get(list_sessions).post(create_session))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/utterance", post(submit_utterance))
        .route("/sessions/{id}/transitions/{trigger}", post(fire_transition))
        .route("/sessions/{id}/autopilot", post(set_autopilot))
        .route("/sessions/{id}/end", post(end_session))
        .route("/sessions/{id}/helper", get(helper))
        .route("/sessions/{id}/report", get(report))
        .route("/sessions/{id}/events", get(crate::ws::events))
        .with_state(service)
}

#[derive(Serialize)]
struct WorkflowEntry {
    id: String,
    title: String,
    description: String,
    initial_state: String,
    states: Vec<String>,
    terminal_states: Vec<String>,
    transitions: usize,
    jump_states: Vec<String>,
}

async fn list_workflows(State(svc): State<Service>) -> Json<Vec<WorkflowEntry>> {
    let list = svc
        .deployment()
        .catalog
        .iter()
        .map(|w| WorkflowEntry {
            id: w.id.clone(),
            title: w.title().to_string(),
            description: w.metadata.get("description").cloned().unwrap_or_default(),
            initial_state: w.initial_state.clone(),
            states: w.states.iter().map(|s| s.id.clone()).collect(),
            terminal_states: w.terminal_states.iter().cloned().collect(),
            transitions: w.transitions.len(),
            jump_states: w.jump_states.iter().map(|j| j.trigger.clone()).collect(),
        })
        .collect();
    Json(list)
}

#[derive(Deserialize)]
struct FormatQuery {
    format: Option<String>,
}

async fn get_workflow(
    State(svc): State<Service>,
    Path(id): Path<String>,
    Query(q): Query<FormatQuery>,
) -> Result<Response, ApiError> {
    let w = svc.deployment().catalog.get(&id).cloned().ok_or_else(|| {
        ApiError::new(StatusCode::NOT_FOUND, "unknown_workflow", format!("workflow `{id}` is not in the catalog"))
    })?;
    match q.format.as_deref() {
        None | Some("json") => Ok(Json(w.as_ref()).into_response()),
        Some("dot") => Ok(([(header::CONTENT_TYPE, "text/vnd.graphviz; charset=utf-8")], export_diagram(&w)).into_response()),
        Some(other) => Err(ApiError::new(StatusCode::BAD_REQUEST, "bad_format", format!("unknown format `{other}`"))),
    }
}

async fn diagnostics(State(svc): State<Service>) -> Json<Value> {
    Json(json!({
        "workflows": svc.catalog_diagnostics(),
        "logs": svc.recovery_issues(),
    }))
}

async fn list_sessions(State(svc): State<Service>) -> Result<Json<Vec<SessionSummary>>, ApiError> {
    let mut out = Vec::new();
    for id in svc.session_ids() {
        out.push(svc.session(&id)?.summary().await?);
    }
    Ok(Json(out))
}

#[derive(Deserialize)]
struct CreateSession {
    workflow: String,
    session_id: Option<String>,
}

async fn create_session(
    State(svc): State<Service>,
    Json(body): Json<CreateSession>,
) -> Result<(StatusCode, Json<SessionSummary>), ApiError> {
    let s = svc.create_session(&body.workflow, body.session_id).await?;
    Ok((StatusCode::CREATED, Json(s)))
}

async fn get_session(State(svc): State<Service>, Path(id): Path<String>) -> Result<Json<SessionSummary>, ApiError> {
    Ok(Json(svc.session(&id)?.summary().await?))
}

#[derive(Deserialize)]
struct UtteranceBody {
    utterance: String,
}

#[derive(Serialize)]
struct UtteranceResponse {
    decision: IntentDecision,
    #[serde(skip_serializing_if = "Option::is_none")]
    dispatch: Option<DispatchOutcome>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<ErrorBody>,
    session: SessionSummary,
}

/// A rejected or failed command still answers 200: the decision was made and
/// logged, and the error travels in the body next to the unchanged state.
async fn submit_utterance(
    State(svc): State<Service>,
    Path(id): Path<String>,
    Json(body): Json<UtteranceBody>,
) -> Result<Json<UtteranceResponse>, ApiError> {
    let live = svc.session(&id)?;
    let matcher = svc.deployment().matcher.clone();
    let log = live.log.clone();
    let (outcome, session) = live
        .call(move |s| {
            let out = s.submit_utterance(&body.utterance, &matcher);
            (out, crate::summarize(s, log))
        })
        .await?;
    let outcome = outcome?;
    let (dispatch, error) = match outcome.dispatch {
        Some(Ok(d)) => (Some(d), None),
        Some(Err(e)) => (None, Some(engine_body(&e))),
        None => (None, None),
    };
    Ok(Json(UtteranceResponse {
        decision: outcome.decision,
        dispatch,
        error,
        session,
    }))
}

#[derive(Serialize)]
struct FireResponse {
    dispatch: DispatchOutcome,
    session: SessionSummary,
}

async fn fire_transition(
    State(svc): State<Service>,
    Path((id, trigger)): Path<(String, String)>,
) -> Result<Json<FireResponse>, ApiError> {
    let live = svc.session(&id)?;
    let log = live.log.clone();
    let (r, session) = live
        .call(move |s| {
            let r = s.dispatch(&trigger, FireOrigin::Direct);
            (r, crate::summarize(s, log))
        })
        .await?;
    Ok(Json(FireResponse { dispatch: r?, session }))
}

#[derive(Deserialize)]
struct AutopilotBody {
    enabled: bool,
}

#[derive(Serialize)]
struct AutopilotResponse {
    #[serde(skip_serializing_if = "Option::is_none")]
    autopilot: Option<AutopilotOutcome>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<ErrorBody>,
    session: SessionSummary,
}

async fn set_autopilot(
    State(svc): State<Service>,
    Path(id): Path<String>,
    Json(body): Json<AutopilotBody>,
) -> Result<Json<AutopilotResponse>, ApiError> {
    let live = svc.session(&id)?;
    let log = live.log.clone();
    let (r, session) = live
        .call(move |s| {
            let r = s.set_autopilot(body.enabled).and_then(|()| {
                if body.enabled {
                    s.run_autopilot().map(Some)
                } else {
                    Ok(None)
                }
            });
            (r, crate::summarize(s, log))
        })
        .await?;
    let (autopilot, error) = match r {
        Ok(a) => (a, None),
        Err(statebuddy_core::EngineError::SessionEnded) => return Err(statebuddy_core::EngineError::SessionEnded.into()),
        Err(e) => (None, Some(engine_body(&e))),
    };
    Ok(Json(AutopilotResponse { autopilot, error, session }))
}

#[derive(Deserialize)]
struct EndBody {
    reason: Option<String>,
}

async fn end_session(
    State(svc): State<Service>,
    Path(id): Path<String>,
    body: Option<Json<Option<EndBody>>>,
) -> Result<Json<SessionSummary>, ApiError> {
    let live = svc.session(&id)?;
    let reason = body.and_then(|b| b.0).and_then(|b| b.reason).unwrap_or_else(|| "ended by client".into());
    let log = live.log.clone();
    let (r, session) = live
        .call(move |s| {
            let r = s.end(&reason);
            (r, crate::summarize(s, log))
        })
        .await?;
    r?;
    Ok(Json(session))
}

#[derive(Deserialize)]
struct HelperQuery {
    mode: Option<String>,
}

#[derive(Serialize)]
struct HelperResponse {
    workflow: String,
    state: String,
    mode: HelperMode,
    slide: usize,
    documents: Vec<HelperDoc>,
    #[serde(skip_serializing_if = "Option::is_none")]
    current: Option<HelperDoc>,
    #[serde(skip_serializing_if = "Option::is_none")]
    notice: Option<String>,
}

/// Documents for the active state. `mode` overrides the session's own mode
/// for this request only.
async fn helper(
    State(svc): State<Service>,
    Path(id): Path<String>,
    Query(q): Query<HelperQuery>,
) -> Result<Json<HelperResponse>, ApiError> {
    let mode: Option<HelperMode> = q
        .mode
        .as_deref()
        .map(str::parse)
        .transpose()
        .map_err(|e: String| ApiError::new(StatusCode::BAD_REQUEST, "bad_mode", e))?;
    let live = svc.session(&id)?;
    let (cursor, top, def) = live
        .call(|s| (s.state().helper, s.state().top().cloned(), s.current_state_def()))
        .await?;
    let top = top.ok_or_else(|| ApiError::internal("session has no active frame"))?;
    let mode = mode.unwrap_or(cursor.mode);
    let extra = def.as_ref().and_then(|d| d.helper_doc.as_deref());
    let documents = svc.deployment().helper.documents(&top.state, extra, mode);
    let notice = documents
        .is_empty()
        .then(|| format!("no helper documents for state `{}`", top.state));
    let current = (!documents.is_empty()).then(|| documents[cursor.slide.min(documents.len() - 1)].clone());
    Ok(Json(HelperResponse {
        workflow: top.workflow,
        state: top.state,
        mode,
        slide: cursor.slide,
        documents,
        current,
        notice,
    }))
}

async fn report(State(svc): State<Service>, Path(id): Path<String>) -> Result<Json<TimingReport>, ApiError> {
    let live = svc.session(&id)?;
    let r = live.call(|s| TimingReport::from_events(s.events())).await?;
    r.map(Json).map_err(|e| ApiError::internal(e.to_string()))
}
