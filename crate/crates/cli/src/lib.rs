//! JSON planning service under `/v1`.
//!
//! Stateless: every handler is a pure function of its request. Nothing in
//! this module can open household microdata.

use axum::body::Bytes;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::json;

use hhtab_core::domain::{GeoLevel, IterLevel, TableVariant, Thresholds};
use hhtab_core::engine::{select_ht_variant, select_t_variant};
use hhtab_core::planner::{
    evaluate_plan, reference_levels, z_for_confidence, FieldError, PlanRequest, DEFAULT_CONFIDENCE,
    MAX_RACE_MULTIPLICITY,
};

pub const API_VERSION: &str = "v1";

#[derive(Debug, Serialize)]
pub struct ApiError {
    pub error: &'static str,
    pub details: Vec<FieldError>,
}

struct Failure(StatusCode, ApiError);

impl IntoResponse for Failure {
    fn into_response(self) -> Response {
        (self.0, Json(self.1)).into_response()
    }
}

fn malformed(e: serde_json::Error) -> Failure {
    Failure(
        StatusCode::BAD_REQUEST,
        ApiError {
            error: "malformed_request",
            details: vec![FieldError {
                field: "body".into(),
                message: e.to_string(),
            }],
        },
    )
}

fn invalid(details: Vec<FieldError>) -> Failure {
    Failure(
        StatusCode::UNPROCESSABLE_ENTITY,
        ApiError {
            error: "validation_failed",
            details,
        },
    )
}

pub fn router() -> Router {
    Router::new()
        .route("/v1/metadata", get(metadata))
        .route("/v1/plan", post(plan))
        .route("/v1/variants", post(variants))
}

async fn metadata() -> Json<serde_json::Value> {
    let z = |c: f64| z_for_confidence(c).expect("valid confidence");
    let levels: Vec<_> = GeoLevel::ALL
        .into_iter()
        .flat_map(|g| [(g, IterLevel::Detailed), (g, IterLevel::Regional)])
        .filter(|&(g, i)| !(g == GeoLevel::Aiannh && i == IterLevel::Regional))
        .map(|(g, i)| json!({"geo_level": g, "iter_level": i, "name": format!("{g}-{i}")}))
        .collect();
    let reference: Vec<_> = reference_levels()
        .into_iter()
        .map(|(g, i, moe)| json!({"geo_level": g, "iter_level": i, "moe": moe}))
        .collect();
    let variants: Vec<_> = TableVariant::ALL
        .into_iter()
        .map(|v| json!({"name": v.name(), "table_class": v.class(), "basis": v.basis()}))
        .collect();
    Json(json!({
        "api_version": API_VERSION,
        "levels": levels,
        "max_race_multiplicity": MAX_RACE_MULTIPLICITY,
        "default_confidence": DEFAULT_CONFIDENCE,
        "z": {"0.90": z(0.90), "0.95": z(0.95), "0.99": z(0.99)},
        "default_thresholds": Thresholds::PLACEHOLDER,
        "default_thresholds_normative": false,
        "reference_moe_targets": reference,
        "table_variants": variants,
    }))
}

async fn plan(body: Bytes) -> Result<Json<serde_json::Value>, Failure> {
    let req: PlanRequest = serde_json::from_slice(&body).map_err(malformed)?;
    let result = evaluate_plan(&req).map_err(invalid)?;
    Ok(Json(serde_json::to_value(result).expect("plan serializes")))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct VariantRequest {
    count: i64,
    #[serde(default)]
    thresholds: Option<Thresholds>,
}

async fn variants(body: Bytes) -> Result<Json<serde_json::Value>, Failure> {
    let req: VariantRequest = serde_json::from_slice(&body).map_err(malformed)?;
    let th = req.thresholds.unwrap_or_default();
    // serde bypasses Thresholds::new, so re-check the ordering here
    Thresholds::new(th.theta1, th.theta2, th.theta3, th.psi1).map_err(|e| {
        invalid(vec![FieldError {
            field: "thresholds".into(),
            message: e.to_string(),
        }])
    })?;
    let ht = select_ht_variant(req.count, &th);
    let t = select_t_variant(req.count, &th);
    Ok(Json(json!({
        "count": req.count,
        "thresholds": th,
        "household_type": {"variant": ht.name(), "basis": ht.basis()},
        "tenure": {"variant": t.name(), "basis": t.basis()},
    })))
}
