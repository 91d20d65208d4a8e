//! Snapshot files.
//!
//! Two on-disk formats:
//!
//! * a JSON document (`schema_version` 1) carrying chain label, capture time
//!   and validators with stakes as decimal strings;
//! * CSV with header `address,stake,moniker` (the `moniker` column is
//!   optional), which carries validators only.

use std::fs;
use std::path::Path;

use chrono::{DateTime, SecondsFormat, Utc};
use num_bigint::BigUint;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Validator, ValidatorSnapshot};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotFile {
    pub schema_version: u32,
    pub chain: String,
    pub captured_at: String,
    pub validators: Vec<ValidatorRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidatorRecord {
    pub address: String,
    pub stake: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub moniker: Option<String>,
}

impl From<&ValidatorSnapshot> for SnapshotFile {
    fn from(s: &ValidatorSnapshot) -> Self {
        SnapshotFile {
            schema_version: SCHEMA_VERSION,
            chain: s.chain.clone(),
            captured_at: s.captured_at.to_rfc3339_opts(SecondsFormat::AutoSi, true),
            validators: s
                .validators()
                .iter()
                .map(|v| ValidatorRecord {
                    address: v.address.clone(),
                    stake: v.stake.to_string(),
                    moniker: v.moniker.clone(),
                })
                .collect(),
        }
    }
}

/// Parses a base-unit stake: ASCII digits only, arbitrary length.
pub(crate) fn parse_stake(raw: &str, address: &str, field: &str) -> Result<BigUint> {
    let s = raw.trim();
    if let Some(rest) = s.strip_prefix('-') {
        if !rest.is_empty() && rest.bytes().all(|b| b.is_ascii_digit()) {
            return Err(Error::NegativeStake(address.to_string()));
        }
    }
    if s.is_empty() || !s.bytes().all(|b| b.is_ascii_digit()) {
        return Err(Error::schema(field, format!("`{raw}` is not a decimal integer")));
    }
    BigUint::parse_bytes(s.as_bytes(), 10)
        .ok_or_else(|| Error::schema(field, format!("`{raw}` is not a decimal integer")))
}

fn check_address(address: &str, field: String) -> Result<()> {
    if address.trim().is_empty() {
        return Err(Error::schema(field, "address is empty"));
    }
    if address.trim() != address {
        return Err(Error::schema(field, "address has surrounding whitespace"));
    }
    Ok(())
}

impl SnapshotFile {
    pub fn into_snapshot(self) -> Result<ValidatorSnapshot> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::schema(
                "schema_version",
                format!("unsupported version {}", self.schema_version),
            ));
        }
        let captured_at = DateTime::parse_from_rfc3339(&self.captured_at)
            .map_err(|e| Error::schema("captured_at", e.to_string()))?
            .with_timezone(&Utc);
        if self.validators.is_empty() {
            return Err(Error::EmptySet);
        }
        let validators = self
            .validators
            .into_iter()
            .enumerate()
            .map(|(i, r)| {
                check_address(&r.address, format!("validators[{i}].address"))?;
                let stake = parse_stake(&r.stake, &r.address, &format!("validators[{i}].stake"))?;
                Ok(Validator {
                    address: r.address,
                    stake,
                    moniker: r.moniker,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        ValidatorSnapshot::new(self.chain, captured_at, validators)
    }
}

/// Parses either format. Input starting with `{` (after whitespace) is read
/// as a JSON document; anything else as CSV labelled `unknown` at the Unix
/// epoch.
pub fn parse_snapshot(bytes: &[u8]) -> Result<ValidatorSnapshot> {
    let text = std::str::from_utf8(bytes).map_err(|e| Error::schema("<input>", e.to_string()))?;
    if text.trim_start().starts_with('{') {
        let doc: SnapshotFile =
            serde_json::from_str(text).map_err(|e| Error::schema("<document>", e.to_string()))?;
        doc.into_snapshot()
    } else {
        parse_snapshot_csv(bytes, "unknown", DateTime::<Utc>::UNIX_EPOCH)
    }
}

pub fn parse_snapshot_csv(
    bytes: &[u8],
    chain: &str,
    captured_at: DateTime<Utc>,
) -> Result<ValidatorSnapshot> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::Headers)
        .from_reader(bytes);
    let headers = reader
        .headers()
        .map_err(|e| Error::schema("<header>", e.to_string()))?
        .clone();
    let names: Vec<&str> = headers.iter().collect();
    if !(names == ["address", "stake"] || names == ["address", "stake", "moniker"]) {
        return Err(Error::schema(
            "<header>",
            format!("expected `address,stake[,moniker]`, got `{}`", names.join(",")),
        ));
    }
    let mut validators = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let row = row.map_err(|e| Error::schema(format!("row {}", i + 1), e.to_string()))?;
        if row.len() < 2 || row.len() > 3 {
            return Err(Error::schema(
                format!("row {}", i + 1),
                format!("expected 2 or 3 columns, got {}", row.len()),
            ));
        }
        let address = row[0].to_string();
        check_address(&address, format!("row {}.address", i + 1))?;
        let stake = parse_stake(row[1].trim(), &address, &format!("row {}.stake", i + 1))?;
        let moniker = row.get(2).filter(|m| !m.is_empty()).map(str::to_string);
        validators.push(Validator {
            address,
            stake,
            moniker,
        });
    }
    if validators.is_empty() {
        return Err(Error::EmptySet);
    }
    ValidatorSnapshot::new(chain, captured_at, validators)
}

pub fn to_document_string(snapshot: &ValidatorSnapshot) -> String {
    let mut s = serde_json::to_string_pretty(&SnapshotFile::from(snapshot))
        .expect("snapshot documents always serialize");
    s.push('\n');
    s
}

pub fn to_csv_string(snapshot: &ValidatorSnapshot) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["address", "stake", "moniker"])?;
    for v in snapshot.validators() {
        w.write_record([
            v.address.as_str(),
            &v.stake.to_string(),
            v.moniker.as_deref().unwrap_or(""),
        ])?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output of UTF-8 fields is UTF-8"))
}

/// Writes CSV when `path` ends in `.csv`, the JSON document otherwise.
pub fn write_snapshot(snapshot: &ValidatorSnapshot, path: &Path) -> Result<()> {
    if snapshot.is_empty() {
        return Err(Error::EmptySet);
    }
    let is_csv = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("csv"));
    let body = if is_csv {
        to_csv_string(snapshot)?
    } else {
        to_document_string(snapshot)
    };
    fs::write(path, body)?;
    Ok(())
}

/// Reads a snapshot file. CSV files (by extension) take their chain label
/// from the file stem.
pub fn read_snapshot(path: &Path) -> Result<ValidatorSnapshot> {
    let bytes = fs::read(path)?;
    let is_csv = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("csv"));
    if is_csv {
        let chain = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "unknown".into());
        parse_snapshot_csv(&bytes, &chain, DateTime::<Utc>::UNIX_EPOCH)
    } else {
        parse_snapshot(&bytes)
    }
}
