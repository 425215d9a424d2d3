#[path = "support/mock_server.rs"]
mod mock_server;

use std::time::{Duration as StdDuration, Instant};

use chrono::{Duration, NaiveDate};
use impact_bsts_ingest::{Cache, Client, ClientOptions, FetchError, PageviewQuery};
use mock_server::{items_body, MockServer};

fn d(y: i32, m: u32, day: u32) -> NaiveDate {
    NaiveDate::from_ymd_opt(y, m, day).unwrap()
}

fn options(server: &MockServer, cache: Option<Cache>) -> ClientOptions {
    ClientOptions {
        base_url: server.base_url.clone(),
        min_delay: StdDuration::from_millis(20),
        backoff: StdDuration::from_millis(10),
        cache,
        ..ClientOptions::default()
    }
}

/// Answers each chunk with one item per day of the requested range,
/// views = day of month.
fn full_range(path: &str) -> String {
    let parts: Vec<&str> = path.rsplit('/').take(2).collect();
    let end = NaiveDate::parse_from_str(&parts[0][..8], "%Y%m%d").unwrap();
    let start = NaiveDate::parse_from_str(&parts[1][..8], "%Y%m%d").unwrap();
    let days: Vec<(String, u64)> = start
        .iter_days()
        .take_while(|x| *x <= end)
        .map(|x| (x.format("%Y%m%d").to_string(), chrono::Datelike::day(&x) as u64))
        .collect();
    let borrowed: Vec<(&str, u64)> = days.iter().map(|(s, v)| (s.as_str(), *v)).collect();
    items_body(&borrowed)
}

#[test]
fn warm_cache_skips_the_network_and_returns_the_same_series() {
    let server = MockServer::start(|path, _| (200, full_range(path)));
    let dir = tempfile::tempdir().unwrap();
    let query = PageviewQuery::new("en.wikipedia", d(2021, 3, 1), d(2021, 3, 10));

    let first = Client::new(options(&server, Some(Cache::new(dir.path()))))
        .unwrap()
        .fetch_aggregate(&query)
        .unwrap();
    assert_eq!(server.request_count(), 1);

    let client = Client::new(options(&server, Some(Cache::new(dir.path())))).unwrap();
    let second = client.fetch_aggregate(&query).unwrap();
    assert_eq!(server.request_count(), 1);
    assert_eq!(client.stats().cache_hits, 1);
    assert_eq!(client.stats().network_requests, 0);
    assert_eq!(first, second);
    assert_eq!(first.len(), 10);
    assert_eq!(first.values()[9], Some(10.0));
}

#[test]
fn requests_carry_the_path_and_a_user_agent() {
    let server = MockServer::start(|path, _| (200, full_range(path)));
    let query = PageviewQuery::new("de.wikipedia", d(2021, 1, 1), d(2021, 1, 2));
    Client::new(options(&server, None)).unwrap().fetch_aggregate(&query).unwrap();
    let requests = server.requests.lock().unwrap();
    assert_eq!(
        requests[0].path,
        "/metrics/pageviews/aggregate/de.wikipedia/all-access/user/daily/2021010100/2021010200"
    );
    assert!(requests[0].user_agent.as_deref().unwrap().starts_with("impact-bsts/"));
}

#[test]
fn missing_interior_day_becomes_a_missing_value() {
    let server = MockServer::start(|_, _| {
        (200, items_body(&[("20210101", 5), ("20210102", 6), ("20210104", 8)]))
    });
    let query = PageviewQuery::new("en.wikipedia", d(2021, 1, 1), d(2021, 1, 4));
    let s = Client::new(options(&server, None)).unwrap().fetch_aggregate(&query).unwrap();
    assert_eq!(s.values(), &[Some(5.0), Some(6.0), None, Some(8.0)]);
}

#[test]
fn long_ranges_are_split_into_year_chunks() {
    let server = MockServer::start(|path, _| (200, full_range(path)));
    let query = PageviewQuery::new("en.wikipedia", d(2019, 1, 1), d(2021, 6, 30));
    let s = Client::new(options(&server, None)).unwrap().fetch_aggregate(&query).unwrap();
    assert_eq!(server.request_count(), 3);
    assert_eq!(s.len() as i64, (query.end - query.start).num_days() + 1);
    assert!(s.is_complete());
    assert_eq!(s.get(query.start + Duration::days(400)), Some(5.0));
}

#[test]
fn server_errors_are_retried_three_times() {
    let server = MockServer::start(|path, i| if i < 2 { (503, String::new()) } else { (200, full_range(path)) });
    let query = PageviewQuery::new("en.wikipedia", d(2021, 1, 1), d(2021, 1, 3));
    let s = Client::new(options(&server, None)).unwrap().fetch_aggregate(&query).unwrap();
    assert_eq!(server.request_count(), 3);
    assert_eq!(s.len(), 3);

    let failing = MockServer::start(|_, _| (500, String::new()));
    let err = Client::new(options(&failing, None)).unwrap().fetch_aggregate(&query).unwrap_err();
    assert!(matches!(err, FetchError::Http { status: 500, .. }));
    assert_eq!(failing.request_count(), 3);
}

#[test]
fn client_errors_are_not_retried() {
    let server = MockServer::start(|_, _| (404, "{}".to_string()));
    let query = PageviewQuery::new("en.wikipedia", d(2021, 1, 1), d(2021, 1, 3));
    let err = Client::new(options(&server, None)).unwrap().fetch_aggregate(&query).unwrap_err();
    assert!(matches!(err, FetchError::Http { status: 404, .. }));
    assert_eq!(server.request_count(), 1);
}

#[test]
fn requests_are_spaced_by_the_minimum_delay() {
    let server = MockServer::start(|path, _| (200, full_range(path)));
    let query = PageviewQuery::new("en.wikipedia", d(2018, 1, 1), d(2021, 12, 31));
    let client = Client::new(ClientOptions {
        min_delay: StdDuration::from_millis(100),
        ..options(&server, None)
    })
    .unwrap();
    let t = Instant::now();
    client.fetch_aggregate(&query).unwrap();
    assert_eq!(server.request_count(), 5);
    assert!(t.elapsed() >= StdDuration::from_millis(400));
}

#[test]
fn reversed_range_fails_before_any_request() {
    let server = MockServer::start(|path, _| (200, full_range(path)));
    let query = PageviewQuery::new("en.wikipedia", d(2021, 1, 5), d(2021, 1, 1));
    let err = Client::new(options(&server, None)).unwrap().fetch_aggregate(&query).unwrap_err();
    assert!(matches!(err, FetchError::InvalidRange { .. }));
    assert_eq!(server.request_count(), 0);
}

#[test]
fn malformed_body_is_a_parse_error() {
    let server = MockServer::start(|_, _| (200, "not json".to_string()));
    let query = PageviewQuery::new("en.wikipedia", d(2021, 1, 1), d(2021, 1, 1));
    let err = Client::new(options(&server, None)).unwrap().fetch_aggregate(&query).unwrap_err();
    assert!(matches!(err, FetchError::Parse { .. }));
}
