mod common;

use std::sync::Arc;

use axum::http::StatusCode;
use common::{at, date, App};
use marketcast_core::arima::{fit, ArimaOrder};
use marketcast_core::checkpoint::SavedModel;
use marketcast_core::series::{PricePoint, PriceSeries};
use marketcast_oracle::clock::ManualClock;
use marketcast_oracle::ml::MlLeg;
use marketcast_oracle::OracleService;
use serde_json::json;

#[tokio::test]
async fn registration_rules() {
    let dir = tempfile::tempdir().unwrap();
    let app = App::new(dir.path(), "2024-03-04");
    let (s, v) = app.call("POST", "/users", None, Some(json!({ "handle": "alice" }))).await;
    assert_eq!(s, StatusCode::CREATED);
    assert_eq!(v["handle"], "alice");
    assert!(v["id"].as_str().is_some_and(|id| !id.is_empty()));
    assert_eq!(v["token"].as_str().unwrap().len(), 64);

    let (s, v) = app.call("POST", "/users", None, Some(json!({ "handle": "ALICE" }))).await;
    assert_eq!(s, StatusCode::CONFLICT);
    assert_eq!(v["code"], "conflict");
    let (s, v) = app.call("POST", "/users", None, Some(json!({ "handle": "  " }))).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    assert_eq!(v["code"], "validation");
    let long = "x".repeat(65);
    let (s, _) = app.call("POST", "/users", None, Some(json!({ "handle": long }))).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    let (s, _) = app.call("POST", "/users", None, Some(json!({ "handle": "x".repeat(64) }))).await;
    assert_eq!(s, StatusCode::CREATED);
    let (s, v) = app.call("POST", "/users", None, Some(json!({ "name": "bob" }))).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    assert_eq!(v["code"], "validation");
}

#[tokio::test]
async fn submission_rules() {
    let dir = tempfile::tempdir().unwrap();
    let app = App::new(dir.path(), "2024-03-04");
    let (_, token) = app.register("alice").await;

    let (s, v) = app.predict(&token, "nifty", "2024-03-05", "22100.5").await;
    assert_eq!(s, StatusCode::CREATED, "{v}");
    assert_eq!(v["predicted_price"], "22100.5");
    assert_eq!(v["symbol"], "NIFTY");
    assert_eq!(v["status"], "open");
    assert!(v["id"].is_string());

    let (s, _) = app.predict(&token, "NIFTY", "2024-03-04", "100").await;
    assert_eq!(s, StatusCode::BAD_REQUEST, "same-day target is hindsight");
    let (s, _) = app.predict(&token, "NIFTY", "2024-03-05", "0").await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    let (s, _) = app.predict(&token, "NIFTY", "2024-03-05", "-3").await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    let (s, v) = app.predict("wrong", "NIFTY", "2024-03-05", "1").await;
    assert_eq!((s, v["code"].as_str()), (StatusCode::UNAUTHORIZED, Some("unauthorized")));
    let (s, _) = app
        .call("POST", "/predictions", None, Some(json!({ "symbol": "X", "target_date": "2024-03-05", "predicted_price": "1" })))
        .await;
    assert_eq!(s, StatusCode::UNAUTHORIZED);

    // numbers are accepted as well as strings; the newer submission wins
    let (s, v) = app
        .call(
            "POST",
            "/predictions",
            Some(&token),
            Some(json!({ "symbol": "NIFTY", "target_date": "2024-03-05", "predicted_price": 22000 })),
        )
        .await;
    assert_eq!(s, StatusCode::CREATED);
    assert_eq!(v["predicted_price"], "22000");
    let open: Vec<_> = app.service.leaderboard(None, None, Some(1)).unwrap();
    assert!(open.is_empty());

    let (s, v) = app.resolve("NIFTY", "2024-03-05", "22000").await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v["resolved_count"], 1);
}

#[tokio::test]
async fn resolution_rules() {
    let dir = tempfile::tempdir().unwrap();
    let app = App::new(dir.path(), "2024-03-04");
    let (_, a) = app.register("a").await;
    let (_, b) = app.register("b").await;
    app.predict(&a, "X", "2024-03-06", "100").await;
    app.predict(&b, "X", "2024-03-06", "120").await;

    let (s, _) = app
        .call("POST", "/resolutions", Some(&a), Some(json!({ "symbol": "X", "date": "2024-03-06", "actual_price": "110" })))
        .await;
    assert_eq!(s, StatusCode::UNAUTHORIZED);

    let (s, v) = app.resolve("X", "2024-03-05", "110").await;
    assert_eq!((s, v["resolved_count"].as_u64()), (StatusCode::OK, Some(0)));
    let (s, v) = app.resolve("X", "2024-03-06", "110").await;
    assert_eq!((s, v["resolved_count"].as_u64()), (StatusCode::OK, Some(2)));
    let (s, v) = app.resolve("X", "2024-03-06", "110").await;
    assert_eq!((s, v["resolved_count"].as_u64()), (StatusCode::OK, Some(0)));
    let (s, v) = app.resolve("X", "2024-03-06", "111").await;
    assert_eq!((s, v["code"].as_str()), (StatusCode::CONFLICT, Some("conflict")));
    let (s, _) = app.predict(&a, "X", "2024-03-06", "100").await;
    assert_eq!(s, StatusCode::CONFLICT, "no predictions on resolved days");

    let (s, board) = app.call("GET", "/leaderboard?min_resolved=1", None, None).await;
    assert_eq!(s, StatusCode::OK);
    let rows = board.as_array().unwrap();
    assert_eq!(rows.len(), 2);
    // both are 10 away from 110
    assert_eq!(rows[0]["rank"], 1);
    assert_eq!(rows[1]["rank"], 1);
    let pct = rows[0]["mean_pct_error"].as_f64().unwrap();
    assert!((pct - 10.0 / 110.0).abs() < 1e-12);
}

#[tokio::test]
async fn leaderboard_queries() {
    let dir = tempfile::tempdir().unwrap();
    let app = App::new(dir.path(), "2024-03-01");
    let (a_id, a) = app.register("a").await;
    let (_, b) = app.register("b").await;
    // a misses by 1% and 2%, b by 5% three times
    for (day, pa, pb) in [("2024-03-04", "101", "105"), ("2024-03-05", "102", "95"), ("2024-03-06", "", "105")] {
        if !pa.is_empty() {
            app.predict(&a, "X", day, pa).await;
        }
        app.predict(&b, "X", day, pb).await;
        app.resolve("X", day, "100").await;
    }
    let (_, v) = app.call("GET", "/leaderboard?min_resolved=2", None, None).await;
    let rows = v.as_array().unwrap();
    assert_eq!(rows[0]["user_id"], a_id);
    assert_eq!(rows[0]["handle"], "a");
    assert_eq!((rows[0]["rank"].as_u64(), rows[1]["rank"].as_u64()), (Some(1), Some(2)));
    assert_eq!(rows[0]["resolved_count"], 2);

    let (_, v) = app.call("GET", "/leaderboard", None, None).await;
    assert_eq!(v.as_array().unwrap().len(), 1, "default minimum of 3 drops a");

    let (_, v) = app.call("GET", "/leaderboard?from=2024-03-05&to=2024-03-06&min_resolved=1", None, None).await;
    let rows = v.as_array().unwrap();
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0]["window_id"], "2024-03-05..2024-03-06");

    let (s, v) = app.call("GET", "/leaderboard?from=yesterday", None, None).await;
    assert_eq!((s, v["code"].as_str()), (StatusCode::BAD_REQUEST, Some("validation")));
    let (s, _) = app.call("GET", "/leaderboard?from=2024-03-06&to=2024-03-05", None, None).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn superforecaster_flag_over_weeks() {
    let dir = tempfile::tempdir().unwrap();
    let app = App::new(dir.path(), "2024-01-01");
    let mut tokens = Vec::new();
    for i in 0..4 {
        tokens.push(app.register(&format!("user{i}")).await);
    }
    // three consecutive weeks with three resolved days each; user0 is always closest
    for week in 0..3 {
        for day in 0..3 {
            let d = date("2024-01-02") + chrono::Days::new(week * 7 + day);
            let ds = d.to_string();
            for (i, (_, t)) in tokens.iter().enumerate() {
                let price = format!("{}", 100 + 2 * i);
                let (s, v) = app.predict(t, "X", &ds, &price).await;
                assert_eq!(s, StatusCode::CREATED, "{v}");
            }
            app.resolve("X", &ds, "100").await;
        }
    }
    let (s, v) = app.call("GET", "/superforecasters", None, None).await;
    assert_eq!(s, StatusCode::OK);
    let rows = v.as_array().unwrap();
    assert_eq!(rows.len(), 4);
    let flagged: Vec<_> = rows.iter().filter(|r| r["flagged"] == true).collect();
    assert_eq!(flagged.len(), 1);
    assert_eq!(flagged[0]["handle"], "user0");
    assert_eq!(flagged[0]["consecutive_top_windows"], 3);
}

fn constant_leg(level: f64) -> MlLeg {
    let start = date("2024-01-01");
    let points: Vec<PricePoint> = (0..40)
        .map(|i| PricePoint {
            date: start + chrono::Days::new(i),
            close: level,
        })
        .collect();
    let series = PriceSeries::new("X", points).unwrap();
    let model = fit(&series.closes(), ArimaOrder::new(0, 0, 0)).unwrap();
    MlLeg::new("X", SavedModel::Arima { model }, &series).unwrap()
}

#[tokio::test]
async fn augmented_forecast_endpoint() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("events.ndjson");
    let clock = Arc::new(ManualClock::new(at("2024-02-01")));
    let service = OracleService::open(&log, common::config(), clock.clone())
        .unwrap()
        .with_ml(constant_leg(100.0));
    let app = App::from_service(service, clock, &log);

    // model only: humans absent, weight reported as 1
    let (s, v) = app.call("GET", "/forecast/x?target_date=2024-02-20&weight=0.3", None, None).await;
    assert_eq!(s, StatusCode::OK, "{v}");
    assert_eq!(v["ml_value"], "100");
    assert_eq!(v["combined"], "100");
    assert_eq!(v["weight"], 1.0);
    assert!(v["human_consensus"].is_null());
    assert_eq!(v["consensus_source"], "none");

    let (_, t1) = app.register("h1").await;
    let (_, t2) = app.register("h2").await;
    app.predict(&t1, "X", "2024-02-20", "105").await;
    app.predict(&t2, "X", "2024-02-20", "115").await;
    for (w, expect) in [("0", "110"), ("0.5", "105"), ("1", "100")] {
        let (s, v) = app
            .call("GET", &format!("/forecast/X?target_date=2024-02-20&weight={w}"), None, None)
            .await;
        assert_eq!(s, StatusCode::OK);
        assert_eq!(v["combined"], expect, "weight {w}");
        assert_eq!(v["human_consensus"], "110");
        assert_eq!(v["consensus_source"], "all_users");
        assert_eq!(v["human_count"], 2);
    }
    let (_, v) = app.call("GET", "/forecast/X?target_date=2024-02-20", None, None).await;
    assert_eq!(v["weight"], 0.5);

    let (s, _) = app.call("GET", "/forecast/X?target_date=2024-02-20&weight=1.5", None, None).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    let (s, _) = app.call("GET", "/forecast/X", None, None).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    let (s, v) = app.call("GET", "/forecast/OTHER?target_date=2024-02-20", None, None).await;
    assert_eq!((s, v["code"].as_str()), (StatusCode::NOT_FOUND, Some("not_found")));
}

#[tokio::test]
async fn forecast_without_checkpoint_uses_humans_only() {
    let dir = tempfile::tempdir().unwrap();
    let app = App::new(dir.path(), "2024-02-01");
    let (_, t) = app.register("h").await;
    app.predict(&t, "X", "2024-02-03", "123.25").await;
    let (s, v) = app.call("GET", "/forecast/X?target_date=2024-02-03&weight=0.9", None, None).await;
    assert_eq!(s, StatusCode::OK);
    assert!(v["ml_value"].is_null());
    assert_eq!(v["combined"], "123.25");
    assert_eq!(v["weight"], 0.0);
}
