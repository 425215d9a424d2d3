//! Data acquisition: a Wikimedia pageviews client with an on-disk cache and
//! a loader for the CSV series format.
//!
//! The public API only exposes project-wide aggregates. Referrer-split or
//! region-split series have to be exported elsewhere and loaded from CSV.

pub mod cache;
pub mod csv_series;
pub mod pageviews;

pub use cache::{Cache, CacheEntry, CACHE_ENV};
pub use csv_series::{load_csv, read_csv, CsvError};
pub use pageviews::{Access, Agent, Client, ClientOptions, FetchError, FetchStats, PageviewQuery};
