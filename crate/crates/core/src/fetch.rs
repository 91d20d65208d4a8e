//! Live validator sets from a Cosmos-SDK staking REST endpoint.
//!
//! Pages of bonded validators are requested with
//! `status=BOND_STATUS_BONDED&pagination.limit=N` and followed through
//! `pagination.next_key` until it comes back empty.

use std::collections::HashSet;
use std::thread;
use std::time::Duration;

use chrono::Utc;
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::ingest::parse_stake;
use crate::model::{Validator, ValidatorSnapshot};

/// Environment variable holding the default endpoint URL for the CLI.
pub const ENDPOINT_ENV: &str = "STAKEWEIGHT_ENDPOINT";
pub const DEFAULT_VALIDATORS_PATH: &str = "/cosmos/staking/v1beta1/validators";
const BONDED: &str = "BOND_STATUS_BONDED";
const MAX_PAGES: usize = 10_000;

#[derive(Debug, Clone, PartialEq)]
pub struct ChainAdapter {
    pub name: String,
    pub endpoint_url: String,
    pub pagination_limit: u32,
    pub path: String,
    pub timeout: Duration,
    pub attempts: u32,
    /// Delay before the first retry; doubled for each further one.
    pub backoff: Duration,
}

impl ChainAdapter {
    pub fn cosmos(name: impl Into<String>, endpoint_url: impl Into<String>) -> Self {
        ChainAdapter {
            name: name.into(),
            endpoint_url: endpoint_url.into(),
            pagination_limit: 100,
            path: DEFAULT_VALIDATORS_PATH.to_string(),
            timeout: Duration::from_secs(10),
            attempts: 3,
            backoff: Duration::from_millis(500),
        }
    }

    fn url(&self) -> String {
        format!(
            "{}/{}",
            self.endpoint_url.trim_end_matches('/'),
            self.path.trim_start_matches('/')
        )
    }
}

#[derive(Deserialize)]
struct Page {
    validators: Vec<RestValidator>,
    #[serde(default)]
    pagination: Option<Pagination>,
}

#[derive(Deserialize)]
struct RestValidator {
    operator_address: String,
    tokens: String,
    #[serde(default)]
    status: Option<String>,
    #[serde(default)]
    description: Option<Description>,
}

#[derive(Deserialize)]
struct Description {
    #[serde(default)]
    moniker: Option<String>,
}

#[derive(Deserialize)]
struct Pagination {
    #[serde(default)]
    next_key: Option<String>,
}

/// Fetches every page of bonded validators and returns them as a snapshot
/// stamped with the fetch time.
pub fn fetch_validators(adapter: &ChainAdapter) -> Result<ValidatorSnapshot> {
    if adapter.pagination_limit == 0 {
        return Err(Error::InvalidParameter {
            name: "pagination_limit",
            reason: "must be positive".into(),
        });
    }
    let agent: ureq::Agent = ureq::Agent::config_builder()
        .timeout_global(Some(adapter.timeout))
        .build()
        .into();
    let url = adapter.url();
    let mut validators = Vec::new();
    let mut seen_keys = HashSet::new();
    let mut key: Option<String> = None;

    for _ in 0..MAX_PAGES {
        let body = get_with_retry(&agent, adapter, &url, key.as_deref())?;
        let page: Page = serde_json::from_str(&body)
            .map_err(|e| Error::MalformedResponse(format!("page body: {e}")))?;
        let page_len = page.validators.len();
        for v in page.validators {
            if v.status.as_deref().is_some_and(|s| s != BONDED) {
                continue;
            }
            let stake = parse_stake(&v.tokens, &v.operator_address, "tokens").map_err(|_| {
                Error::MalformedResponse(format!(
                    "validator `{}` has token amount `{}`",
                    v.operator_address, v.tokens
                ))
            })?;
            if num_traits::Zero::is_zero(&stake) {
                continue;
            }
            validators.push(Validator {
                address: v.operator_address,
                stake,
                moniker: v.description.and_then(|d| d.moniker).filter(|m| !m.is_empty()),
            });
        }
        match page.pagination.and_then(|p| p.next_key).filter(|k| !k.is_empty()) {
            None => {
                return ValidatorSnapshot::new(adapter.name.clone(), Utc::now(), validators)
                    .map_err(|e| match e {
                        Error::DuplicateAddress(a) => {
                            Error::Pagination(format!("validator `{a}` returned on two pages"))
                        }
                        other => other,
                    });
            }
            Some(next) => {
                if page_len == 0 {
                    return Err(Error::Pagination("empty page with a continuation key".into()));
                }
                if !seen_keys.insert(next.clone()) {
                    return Err(Error::Pagination(format!("continuation key `{next}` repeats")));
                }
                key = Some(next);
            }
        }
    }
    Err(Error::Pagination(format!("more than {MAX_PAGES} pages")))
}

fn get_with_retry(
    agent: &ureq::Agent,
    adapter: &ChainAdapter,
    url: &str,
    key: Option<&str>,
) -> Result<String> {
    let attempts = adapter.attempts.max(1);
    let mut last = String::new();
    for attempt in 0..attempts {
        if attempt > 0 {
            thread::sleep(adapter.backoff * 2u32.pow(attempt - 1));
        }
        let mut req = agent
            .get(url)
            .query("status", BONDED)
            .query("pagination.limit", adapter.pagination_limit.to_string());
        if let Some(k) = key {
            req = req.query("pagination.key", k);
        }
        match req.call() {
            Ok(mut resp) => match resp.body_mut().read_to_string() {
                Ok(body) => return Ok(body),
                Err(e) => last = e.to_string(),
            },
            Err(ureq::Error::StatusCode(code)) if code < 500 => {
                return Err(Error::Network(format!("{url}: http status {code}")));
            }
            Err(e) => last = e.to_string(),
        }
    }
    Err(Error::Network(format!("{url}: {last} (after {attempts} attempts)")))
}
