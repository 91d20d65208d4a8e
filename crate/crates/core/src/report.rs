//! Per-snapshot reports, linear-vs-SRSW comparison and their renderings.
//!
//! Every rendering (table, JSON, CSV) is derived from the same report value.

use std::fmt::Write as _;

use serde::Serialize;

use crate::error::Result;
use crate::metrics::{full_report, MetricsReport};
use crate::model::{apply_weights, ValidatorSnapshot, WeightScheme};

pub const DEFAULT_DELTAS: [u8; 2] = [0, 50];

pub fn analyze(snapshot: &ValidatorSnapshot, scheme: WeightScheme, deltas: &[u8]) -> Result<MetricsReport> {
    full_report(&apply_weights(snapshot, scheme), deltas)
}

/// Scientific notation with six fractional digits and a signed two-digit
/// exponent, e.g. `2.470500e+02`.
pub fn format_sci(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    let s = format!("{x:.6e}");
    let (mantissa, exp) = s.split_once('e').expect("`e` formatting always has an exponent");
    let exp: i32 = exp.parse().expect("exponent is an integer");
    let sign = if exp < 0 { '-' } else { '+' };
    format!("{mantissa}e{sign}{:02}", exp.abs())
}

/// `ρ (N)` with ρ at two decimals.
pub fn format_rho(rho: f64, n: usize) -> String {
    format!("{rho:.2} ({n})")
}

/// The data row: `m  G  ρ_L (N_L)  ρ_S (N_S)  ε...`.
pub fn metrics_row(r: &MetricsReport) -> String {
    let mut cols = vec![
        r.m.to_string(),
        format!("{:.2}", r.gini),
        format_rho(r.rho_liveness, r.nakamoto_liveness),
        format_rho(r.rho_safety, r.nakamoto_safety),
    ];
    cols.extend(r.epsilon_by_delta.values().map(|&e| format_sci(e)));
    cols.join("  ")
}

pub fn render_metrics_table(r: &MetricsReport) -> String {
    let mut header = vec![
        "m".to_string(),
        "G".to_string(),
        "rho_NL (N_L)".to_string(),
        "rho_NS (N_S)".to_string(),
    ];
    header.extend(r.epsilon_by_delta.keys().map(|d| format!("eps(m,e,{d})")));
    format!(
        "chain: {}  scheme: {}\n{}\n{}\n",
        r.chain,
        r.scheme,
        header.join("  "),
        metrics_row(r)
    )
}

pub fn render_metrics_json(r: &MetricsReport) -> String {
    let mut s = serde_json::to_string_pretty(r).expect("reports always serialize");
    s.push('\n');
    s
}

pub fn render_metrics_csv(r: &MetricsReport) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<String> = [
        "chain", "scheme", "m", "gini", "nakamoto_liveness", "rho_liveness", "nakamoto_safety", "rho_safety",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    header.extend(r.epsilon_by_delta.keys().map(|d| format!("epsilon_delta_{d}")));
    w.write_record(&header)?;
    let mut row = vec![
        r.chain.clone(),
        r.scheme.to_string(),
        r.m.to_string(),
        r.gini.to_string(),
        r.nakamoto_liveness.to_string(),
        r.rho_liveness.to_string(),
        r.nakamoto_safety.to_string(),
        r.rho_safety.to_string(),
    ];
    row.extend(r.epsilon_by_delta.values().map(|e| e.to_string()));
    w.write_record(&row)?;
    let bytes = w.into_inner().map_err(|e| crate::Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv of UTF-8 fields is UTF-8"))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub chain: String,
    pub m: usize,
    pub linear: MetricsReport,
    pub srsw: MetricsReport,
    /// `(G - G*) / G * 100`; zero when `G` is zero.
    pub gini_pct_decrease: f64,
    /// `(N_L* - N_L) / N_L * 100`
    pub nl_pct_increase: f64,
    pub ns_pct_increase: f64,
}

impl ComparisonRow {
    pub fn new(linear: MetricsReport, srsw: MetricsReport) -> Self {
        let gini_pct_decrease = if linear.gini > 0.0 {
            (linear.gini - srsw.gini) / linear.gini * 100.0
        } else {
            0.0
        };
        let pct = |after: usize, before: usize| (after as f64 - before as f64) / before as f64 * 100.0;
        ComparisonRow {
            chain: linear.chain.clone(),
            m: linear.m,
            gini_pct_decrease,
            nl_pct_increase: pct(srsw.nakamoto_liveness, linear.nakamoto_liveness),
            ns_pct_increase: pct(srsw.nakamoto_safety, linear.nakamoto_safety),
            linear,
            srsw,
        }
    }
}

pub fn compare_snapshot(snapshot: &ValidatorSnapshot, deltas: &[u8]) -> Result<ComparisonRow> {
    Ok(ComparisonRow::new(
        analyze(snapshot, WeightScheme::Linear, deltas)?,
        analyze(snapshot, WeightScheme::Srsw, deltas)?,
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub rows: Vec<ComparisonRow>,
    pub mean_gini_pct_decrease: f64,
    pub mean_nl_pct_increase: f64,
    pub mean_ns_pct_increase: f64,
}

impl ComparisonReport {
    pub fn from_rows(rows: Vec<ComparisonRow>) -> Self {
        let mean = |f: fn(&ComparisonRow) -> f64| {
            if rows.is_empty() {
                0.0
            } else {
                rows.iter().map(f).sum::<f64>() / rows.len() as f64
            }
        };
        ComparisonReport {
            mean_gini_pct_decrease: mean(|r| r.gini_pct_decrease),
            mean_nl_pct_increase: mean(|r| r.nl_pct_increase),
            mean_ns_pct_increase: mean(|r| r.ns_pct_increase),
            rows,
        }
    }

    pub fn render_table(&self) -> String {
        let width = self
            .rows
            .iter()
            .map(|r| r.chain.len())
            .chain(["chain".len(), "mean".len()])
            .max()
            .unwrap_or(5);
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<width$}  {:>5}  {:>5}  {:>5}  {:>4}  {:>4}  {:>4}  {:>4}  {:>10}  {:>10}  {:>10}",
            "chain", "m", "G", "G*", "N_L", "N_L*", "N_S", "N_S*", "G %dec", "N_L %inc", "N_S %inc"
        );
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{:<width$}  {:>5}  {:>5.2}  {:>5.2}  {:>4}  {:>4}  {:>4}  {:>4}  {:>10.2}  {:>10.2}  {:>10.2}",
                r.chain,
                r.m,
                r.linear.gini,
                r.srsw.gini,
                r.linear.nakamoto_liveness,
                r.srsw.nakamoto_liveness,
                r.linear.nakamoto_safety,
                r.srsw.nakamoto_safety,
                r.gini_pct_decrease,
                r.nl_pct_increase,
                r.ns_pct_increase
            );
        }
        let _ = writeln!(
            out,
            "{:<width$}  {:>5}  {:>5}  {:>5}  {:>4}  {:>4}  {:>4}  {:>4}  {:>10.2}  {:>10.2}  {:>10.2}",
            "mean", "", "", "", "", "", "", "", self.mean_gini_pct_decrease, self.mean_nl_pct_increase, self.mean_ns_pct_increase
        );
        out
    }

    pub fn render_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports always serialize");
        s.push('\n');
        s
    }

    pub fn render_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "chain", "m", "gini", "gini_srsw", "nakamoto_liveness", "nakamoto_liveness_srsw",
            "nakamoto_safety", "nakamoto_safety_srsw", "gini_pct_decrease", "nl_pct_increase", "ns_pct_increase",
        ])?;
        for r in &self.rows {
            w.write_record([
                r.chain.clone(),
                r.m.to_string(),
                r.linear.gini.to_string(),
                r.srsw.gini.to_string(),
                r.linear.nakamoto_liveness.to_string(),
                r.srsw.nakamoto_liveness.to_string(),
                r.linear.nakamoto_safety.to_string(),
                r.srsw.nakamoto_safety.to_string(),
                r.gini_pct_decrease.to_string(),
                r.nl_pct_increase.to_string(),
                r.ns_pct_increase.to_string(),
            ])?;
        }
        w.write_record([
            "mean".to_string(),
            String::new(),
            String::new(),
            String::new(),
            String::new(),
            String::new(),
            String::new(),
            String::new(),
            self.mean_gini_pct_decrease.to_string(),
            self.mean_nl_pct_increase.to_string(),
            self.mean_ns_pct_increase.to_string(),
        ])?;
        let bytes = w.into_inner().map_err(|e| crate::Error::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv of UTF-8 fields is UTF-8"))
    }
}
