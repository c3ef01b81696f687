//! JSON API over one ranking table.
//!
//! The table, its extension and the default weights are loaded once and
//! shared read-only; every request computes a fresh aggregate.

use std::collections::BTreeMap;
use std::sync::Arc;

use anyhow::{Context, Result};
use axum::extract::State;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use log::info;
use rhoagg::aggregation::weighted_aggregate;
use rhoagg::ingest::{parse_ranking_csv, RankingTable};
use rhoagg::learning::ExpertWeights;
use rhoagg::{Direction, RankMatrix};
use serde::{Deserialize, Serialize};

use crate::commands::matrix_rho;
use crate::ServeArgs;

#[derive(Debug)]
pub struct ServeState {
    pub table: RankingTable,
    pub extended: RankMatrix,
    pub default_weights: ExpertWeights,
    /// Multivariate rho of the extended sources.
    pub rho: Option<f64>,
}

impl ServeState {
    pub fn new(table: RankingTable, direction: Direction) -> rhoagg::Result<Self> {
        let extended = table.extended(direction)?;
        let rho = matrix_rho(&extended);
        Ok(ServeState {
            default_weights: ExpertWeights::uniform(table.sources.clone()),
            table,
            extended,
            rho,
        })
    }
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct Meta {
    pub experts: Vec<String>,
    pub items: usize,
    pub default_weights: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct ItemRanks {
    pub item: String,
    /// Rank per source, `null` where the source is silent.
    pub known: Vec<Option<u32>>,
    /// Non-informative extension per source, in `(0, 1)`.
    pub extended: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct Rankings {
    pub experts: Vec<String>,
    pub items: Vec<ItemRanks>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct AggregateRequest {
    pub weights: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct AggregateResponse {
    /// Items best first.
    pub order: Vec<String>,
    /// Weighted log-product per item; smaller is better.
    pub raw_scores: BTreeMap<String, f64>,
    /// Multivariate rho of the extended sources.
    pub rho: Option<f64>,
    /// Multivariate rho of the sources together with this consensus.
    pub consensus_rho: Option<f64>,
}

#[derive(Debug, Serialize)]
struct ApiError {
    error: String,
}

fn bad_request(msg: impl Into<String>) -> Response {
    (StatusCode::BAD_REQUEST, Json(ApiError { error: msg.into() })).into_response()
}

pub fn router(state: Arc<ServeState>) -> Router {
    Router::new()
        .route("/api/meta", get(meta))
        .route("/api/rankings", get(rankings))
        .route("/api/aggregate", post(aggregate))
        .with_state(state)
}

async fn meta(State(s): State<Arc<ServeState>>) -> Json<Meta> {
    Json(Meta {
        experts: s.table.sources.clone(),
        items: s.table.n(),
        default_weights: s.default_weights.weights.clone(),
    })
}

async fn rankings(State(s): State<Arc<ServeState>>) -> Json<Rankings> {
    let items = s
        .table
        .items
        .iter()
        .zip(&s.table.cells)
        .zip(s.extended.rows())
        .map(|((id, known), ext)| ItemRanks {
            item: id.to_string(),
            known: known.clone(),
            extended: ext.to_vec(),
        })
        .collect();
    Json(Rankings {
        experts: s.table.sources.clone(),
        items,
    })
}

/// Aggregate for one weight vector. Weights are exponents used as given.
pub fn aggregate_with(s: &ServeState, weights: &[f64]) -> rhoagg::Result<AggregateResponse> {
    let w = ExpertWeights {
        expert_names: s.table.sources.clone(),
        weights: weights.to_vec(),
        bias: 0.0,
    };
    let agg = weighted_aggregate(&s.extended, &w)?;
    let consensus = s.extended.with_column("consensus", &agg.ranking)?;
    Ok(AggregateResponse {
        order: agg
            .order(s.extended.objects())
            .iter()
            .map(ToString::to_string)
            .collect(),
        raw_scores: agg.raw_scores.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
        rho: s.rho,
        consensus_rho: matrix_rho(&consensus),
    })
}

async fn aggregate(State(s): State<Arc<ServeState>>, Json(req): Json<AggregateRequest>) -> Response {
    if req.weights.len() != s.table.d() {
        return bad_request(format!(
            "expected {} weights, got {}",
            s.table.d(),
            req.weights.len()
        ));
    }
    match aggregate_with(&s, &req.weights) {
        Ok(r) => Json(r).into_response(),
        Err(e) => bad_request(e.to_string()),
    }
}

pub fn serve(a: &ServeArgs) -> Result<()> {
    let table = parse_ranking_csv(&a.input)?;
    let state = Arc::new(ServeState::new(table, a.direction.into())?);
    let addr = format!("{}:{}", a.host, a.port);
    let rt = tokio::runtime::Runtime::new().context("starting runtime")?;
    rt.block_on(async move {
        let listener = tokio::net::TcpListener::bind(&addr)
            .await
            .with_context(|| format!("binding {addr}"))?;
        info!("serving {} items on http://{addr}", state.table.n());
        axum::serve(listener, router(state))
            .await
            .context("server stopped")
    })
}
