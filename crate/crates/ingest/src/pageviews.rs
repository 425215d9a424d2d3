//! Client for the Wikimedia pageviews aggregate endpoint.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::{Duration as StdDuration, Instant};

use chrono::{Duration, NaiveDate, SecondsFormat, Utc};
use impact_bsts::series::{DateIndexedSeries, SeriesError};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cache::{Cache, CacheEntry};

pub const DEFAULT_BASE_URL: &str = "https://wikimedia.org/api/rest_v1";
pub const DEFAULT_USER_AGENT: &str = concat!(
    "impact-bsts/",
    env!("CARGO_PKG_VERSION"),
    " (causal impact analysis of daily pageviews; set a contact address via ClientOptions::user_agent)"
);
/// Longest span requested in one call.
pub const CHUNK_DAYS: i64 = 365;
/// Longest span accepted by [`Client::fetch_aggregate`], split into chunks.
pub const MAX_RANGE_DAYS: i64 = 30 * 366;

#[derive(Debug, Error)]
pub enum FetchError {
    #[error("invalid query: start {start} is after end {end}")]
    InvalidRange { start: NaiveDate, end: NaiveDate },
    #[error("range of {days} days exceeds the {max}-day limit")]
    RangeTooLarge { days: i64, max: i64 },
    #[error("HTTP {status} from {url}")]
    Http { status: u16, url: String },
    #[error("request to {url} failed: {source}")]
    Transport {
        url: String,
        #[source]
        source: reqwest::Error,
    },
    #[error("cannot parse response from {url}: {message}")]
    Parse { url: String, message: String },
    #[error("cannot write cache: {0}")]
    Cache(#[from] std::io::Error),
    #[error(transparent)]
    Series(#[from] SeriesError),
}

impl FetchError {
    fn retryable(&self) -> bool {
        match self {
            FetchError::Http { status, .. } => *status == 429 || *status >= 500,
            FetchError::Transport { .. } => true,
            _ => false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Access {
    #[default]
    AllAccess,
    Desktop,
    MobileWeb,
    MobileApp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Agent {
    AllAgents,
    #[default]
    User,
    Spider,
    Automated,
}

impl fmt::Display for Access {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Access::AllAccess => "all-access",
            Access::Desktop => "desktop",
            Access::MobileWeb => "mobile-web",
            Access::MobileApp => "mobile-app",
        })
    }
}

impl fmt::Display for Agent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Agent::AllAgents => "all-agents",
            Agent::User => "user",
            Agent::Spider => "spider",
            Agent::Automated => "automated",
        })
    }
}

/// Daily aggregate views of one project. Both dates are inclusive.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PageviewQuery {
    pub project: String,
    #[serde(default)]
    pub access: Access,
    #[serde(default)]
    pub agent: Agent,
    pub start: NaiveDate,
    pub end: NaiveDate,
}

impl PageviewQuery {
    pub fn new(project: impl Into<String>, start: NaiveDate, end: NaiveDate) -> Self {
        Self {
            project: project.into(),
            access: Access::default(),
            agent: Agent::default(),
            start,
            end,
        }
    }

    pub fn validate(&self) -> Result<(), FetchError> {
        if self.start > self.end {
            return Err(FetchError::InvalidRange {
                start: self.start,
                end: self.end,
            });
        }
        let days = (self.end - self.start).num_days() + 1;
        if days > MAX_RANGE_DAYS {
            return Err(FetchError::RangeTooLarge {
                days,
                max: MAX_RANGE_DAYS,
            });
        }
        Ok(())
    }

    /// Path below the API root for the given inclusive sub-range.
    pub fn path(&self, start: NaiveDate, end: NaiveDate) -> String {
        format!(
            "/metrics/pageviews/aggregate/{}/{}/{}/daily/{}00/{}00",
            self.project,
            self.access,
            self.agent,
            start.format("%Y%m%d"),
            end.format("%Y%m%d")
        )
    }

    /// Consecutive sub-ranges of at most [`CHUNK_DAYS`] days.
    pub fn chunks(&self) -> Vec<(NaiveDate, NaiveDate)> {
        let mut out = Vec::new();
        let mut from = self.start;
        while from <= self.end {
            let to = (from + Duration::days(CHUNK_DAYS - 1)).min(self.end);
            out.push((from, to));
            from = to + Duration::days(1);
        }
        out
    }

    /// Default series name, e.g. `en.wikipedia/all-access/user`.
    pub fn label(&self) -> String {
        format!("{}/{}/{}", self.project, self.access, self.agent)
    }
}

#[derive(Debug, Clone)]
pub struct ClientOptions {
    pub base_url: String,
    pub user_agent: String,
    /// Minimum gap between the starts of two network requests.
    pub min_delay: StdDuration,
    pub attempts: u32,
    /// First retry delay; doubles on each further attempt.
    pub backoff: StdDuration,
    pub timeout: StdDuration,
    /// `None` disables caching.
    pub cache: Option<Cache>,
}

impl Default for ClientOptions {
    fn default() -> Self {
        Self {
            base_url: DEFAULT_BASE_URL.to_string(),
            user_agent: DEFAULT_USER_AGENT.to_string(),
            min_delay: StdDuration::from_millis(200),
            attempts: 3,
            backoff: StdDuration::from_millis(500),
            timeout: StdDuration::from_secs(30),
            cache: Some(Cache::from_env()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct FetchStats {
    pub network_requests: usize,
    pub cache_hits: usize,
}

/// Blocking client. Network requests are serialized and spaced by
/// `min_delay`; cache reads bypass the gate.
pub struct Client {
    http: reqwest::blocking::Client,
    options: ClientOptions,
    gate: Mutex<Option<Instant>>,
    requests: AtomicUsize,
    hits: AtomicUsize,
}

#[derive(Deserialize)]
struct Response {
    items: Vec<Item>,
}

#[derive(Deserialize)]
struct Item {
    timestamp: String,
    views: u64,
}

impl Client {
    pub fn new(options: ClientOptions) -> Result<Self, FetchError> {
        let http = reqwest::blocking::Client::builder()
            .user_agent(options.user_agent.clone())
            .timeout(options.timeout)
            .build()
            .map_err(|source| FetchError::Transport {
                url: options.base_url.clone(),
                source,
            })?;
        Ok(Self {
            http,
            options,
            gate: Mutex::new(None),
            requests: AtomicUsize::new(0),
            hits: AtomicUsize::new(0),
        })
    }

    pub fn stats(&self) -> FetchStats {
        FetchStats {
            network_requests: self.requests.load(Ordering::Relaxed),
            cache_hits: self.hits.load(Ordering::Relaxed),
        }
    }

    /// Fetches the query as one daily series named [`PageviewQuery::label`].
    /// Days the API leaves out become missing values.
    pub fn fetch_aggregate(&self, query: &PageviewQuery) -> Result<DateIndexedSeries, FetchError> {
        query.validate()?;
        let mut views = BTreeMap::new();
        for (from, to) in query.chunks() {
            let url = format!("{}{}", self.options.base_url.trim_end_matches('/'), query.path(from, to));
            let body = self.cached_get(&url)?;
            for (date, v) in parse_items(&url, &body)? {
                if date >= from && date <= to && views.insert(date, v).is_some() {
                    return Err(FetchError::Parse {
                        url,
                        message: format!("duplicate entry for {date}"),
                    });
                }
            }
        }
        let n = (query.end - query.start).num_days() + 1;
        let values: Vec<Option<f64>> = (0..n)
            .map(|i| views.get(&(query.start + Duration::days(i))).copied())
            .collect();
        let missing = values.iter().filter(|v| v.is_none()).count();
        if missing > 0 {
            log::warn!("{}: {missing} day(s) absent from the response", query.label());
        }
        Ok(DateIndexedSeries::new(query.label(), query.start, values)?)
    }

    fn cached_get(&self, url: &str) -> Result<String, FetchError> {
        if let Some(entry) = self.options.cache.as_ref().and_then(|c| c.get(url)) {
            log::info!("cache hit: {url}");
            self.hits.fetch_add(1, Ordering::Relaxed);
            return Ok(entry.payload);
        }
        let body = self.get_with_retries(url)?;
        if let Some(cache) = &self.options.cache {
            cache.put(&CacheEntry {
                key: url.to_string(),
                fetched_at: Utc::now().to_rfc3339_opts(SecondsFormat::Secs, true),
                payload: body.clone(),
            })?;
        }
        Ok(body)
    }

    fn get_with_retries(&self, url: &str) -> Result<String, FetchError> {
        let mut delay = self.options.backoff;
        let mut attempt = 1;
        loop {
            match self.get_once(url) {
                Err(e) if e.retryable() && attempt < self.options.attempts => {
                    log::warn!("attempt {attempt} failed ({e}); retrying in {delay:?}");
                    std::thread::sleep(delay);
                    delay *= 2;
                    attempt += 1;
                }
                other => return other,
            }
        }
    }

    fn get_once(&self, url: &str) -> Result<String, FetchError> {
        {
            let mut last = self.gate.lock().unwrap_or_else(|e| e.into_inner());
            if let Some(prev) = *last {
                let wait = self.options.min_delay.saturating_sub(prev.elapsed());
                std::thread::sleep(wait);
            }
            *last = Some(Instant::now());
        }
        log::info!("GET {url}");
        self.requests.fetch_add(1, Ordering::Relaxed);
        let transport = |source| FetchError::Transport {
            url: url.to_string(),
            source,
        };
        let response = self.http.get(url).send().map_err(transport)?;
        let status = response.status();
        if !status.is_success() {
            return Err(FetchError::Http {
                status: status.as_u16(),
                url: url.to_string(),
            });
        }
        response.text().map_err(transport)
    }
}

fn parse_items(url: &str, body: &str) -> Result<Vec<(NaiveDate, f64)>, FetchError> {
    let parse_err = |message: String| FetchError::Parse {
        url: url.to_string(),
        message,
    };
    let response: Response = serde_json::from_str(body).map_err(|e| parse_err(e.to_string()))?;
    response
        .items
        .into_iter()
        .map(|item| {
            let day = item.timestamp.get(..8).unwrap_or("");
            let date = NaiveDate::parse_from_str(day, "%Y%m%d")
                .map_err(|_| parse_err(format!("bad timestamp `{}`", item.timestamp)))?;
            Ok((date, item.views as f64))
        })
        .collect()
}
