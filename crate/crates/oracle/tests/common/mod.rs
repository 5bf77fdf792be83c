#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::sync::Arc;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use chrono::{DateTime, Duration, NaiveDate, Utc};
use http_body_util::BodyExt;
use marketcast_oracle::clock::ManualClock;
use marketcast_oracle::{router, OracleService, ServiceConfig};
use serde_json::Value;
use tower::ServiceExt;

pub const ADMIN: &str = "admin-secret";

pub fn date(s: &str) -> NaiveDate {
    s.parse().unwrap()
}

pub fn at(s: &str) -> DateTime<Utc> {
    date(s).and_hms_opt(12, 0, 0).unwrap().and_utc()
}

pub struct App {
    pub router: Router,
    pub service: Arc<OracleService>,
    pub clock: Arc<ManualClock>,
    pub log: PathBuf,
}

pub fn config() -> ServiceConfig {
    ServiceConfig {
        admin_token: ADMIN.into(),
        ..ServiceConfig::default()
    }
}

impl App {
    pub fn open(log: &Path, clock: Arc<ManualClock>, config: ServiceConfig) -> Self {
        let service = Arc::new(OracleService::open(log, config, clock.clone()).unwrap());
        Self {
            router: router(service.clone()),
            service,
            clock,
            log: log.to_path_buf(),
        }
    }

    pub fn new(dir: &Path, start: &str) -> Self {
        let clock = Arc::new(ManualClock::new(at(start)));
        Self::open(&dir.join("events.ndjson"), clock, config())
    }

    pub fn from_service(service: OracleService, clock: Arc<ManualClock>, log: &Path) -> Self {
        let service = Arc::new(service);
        Self {
            router: router(service.clone()),
            service,
            clock,
            log: log.to_path_buf(),
        }
    }

    pub fn advance_days(&self, days: i64) {
        self.clock.advance(Duration::days(days));
    }

    pub async fn call(&self, method: &str, uri: &str, token: Option<&str>, body: Option<Value>) -> (StatusCode, Value) {
        let mut req = Request::builder().method(method).uri(uri);
        if let Some(t) = token {
            req = req.header("authorization", format!("Bearer {t}"));
        }
        let body = match body {
            Some(v) => {
                req = req.header("content-type", "application/json");
                Body::from(v.to_string())
            }
            None => Body::empty(),
        };
        let resp = self.router.clone().oneshot(req.body(body).unwrap()).await.unwrap();
        let status = resp.status();
        let bytes = resp.into_body().collect().await.unwrap().to_bytes();
        let value = if bytes.is_empty() {
            Value::Null
        } else {
            serde_json::from_slice(&bytes).unwrap_or_else(|_| Value::String(String::from_utf8_lossy(&bytes).into()))
        };
        (status, value)
    }

    /// Registers `handle` and returns (id, token).
    pub async fn register(&self, handle: &str) -> (String, String) {
        let (s, v) = self.call("POST", "/users", None, Some(serde_json::json!({ "handle": handle }))).await;
        assert_eq!(s, StatusCode::CREATED, "{v}");
        (v["id"].as_str().unwrap().into(), v["token"].as_str().unwrap().into())
    }

    pub async fn predict(&self, token: &str, symbol: &str, target: &str, price: &str) -> (StatusCode, Value) {
        self.call(
            "POST",
            "/predictions",
            Some(token),
            Some(serde_json::json!({ "symbol": symbol, "target_date": target, "predicted_price": price })),
        )
        .await
    }

    pub async fn resolve(&self, symbol: &str, day: &str, price: &str) -> (StatusCode, Value) {
        self.call(
            "POST",
            "/resolutions",
            Some(ADMIN),
            Some(serde_json::json!({ "symbol": symbol, "date": day, "actual_price": price })),
        )
        .await
    }
}
