//! CSV and JSON result files.
//!
//! Sweep CSV:
//!
//! ```text
//! voltage_V,mean_c1,std_c1,mean_c2,std_c2,p1_analytic,p2_analytic
//! 0,254.1500,16.2106,3.1000,1.6190,1.000000000000,0.000000000000
//! ...
//! # summary
//! # repetitions=20
//! # visibility_voltage_V=0
//! # visibility=0.976303
//! ...
//! ```
//!
//! The summary is always computed from the rows as written, so re-analyzing
//! a file reproduces it exactly. JSON files carry the same rows and summary
//! plus `schema_version`.

use anyhow::{bail, Context, Result};
use sagnac_core::experiment::{summarize, ExperimentResult, SettingStats, Summary};
use sagnac_core::netlist::format_number;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

pub const SCHEMA_VERSION: u32 = 1;
pub const SWEEP_HEADER: &str = "voltage_V,mean_c1,std_c1,mean_c2,std_c2,p1_analytic,p2_analytic";
pub const DELAY_HEADER: &str = "delay_s,mean_c1,std_c1,phi_cw,phi_ccw";
const SWEEP_COLUMNS: [&str; 7] = [
    "voltage_V",
    "mean_c1",
    "std_c1",
    "mean_c2",
    "std_c2",
    "p1_analytic",
    "p2_analytic",
];

fn counts(x: f64) -> String {
    format!("{x:.4}")
}

fn prob(x: f64) -> String {
    format!("{x:.12}")
}

fn sweep_cells(r: &SettingStats) -> [String; 7] {
    [
        format_number(r.voltage),
        counts(r.mean_c1),
        counts(r.std_c1),
        counts(r.mean_c2),
        counts(r.std_c2),
        prob(r.p1_analytic),
        prob(r.p2_analytic),
    ]
}

fn num(cell: &str, column: &str, line: usize) -> Result<f64> {
    cell.trim()
        .parse::<f64>()
        .ok()
        .filter(|x| x.is_finite())
        .with_context(|| format!("line {line}: `{column}` value `{cell}` is not a finite number"))
}

fn row_from_values(v: [f64; 7]) -> SettingStats {
    SettingStats {
        voltage: v[0],
        delay: 0.0,
        phi_cw: 0.0,
        phi_ccw: 0.0,
        mean_c1: v[1],
        std_c1: v[2],
        mean_c2: v[3],
        std_c2: v[4],
        p1_analytic: v[5],
        p2_analytic: v[6],
    }
}

/// Rows rounded exactly as they are written.
pub fn rounded_rows(rows: &[SettingStats]) -> Vec<SettingStats> {
    rows.iter()
        .map(|r| {
            let cells = sweep_cells(r);
            let mut v = [0.0; 7];
            for (x, c) in v.iter_mut().zip(&cells) {
                *x = c.parse().expect("formatted number parses");
            }
            SettingStats {
                delay: r.delay,
                phi_cw: r.phi_cw,
                phi_ccw: r.phi_ccw,
                ..row_from_values(v)
            }
        })
        .collect()
}

/// Summary entries in file order, already formatted.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryBlock {
    pub entries: Vec<(&'static str, String)>,
    pub fit_error: Option<String>,
}

impl SummaryBlock {
    pub fn new(summary: &Summary, repetitions: usize) -> Self {
        let f6 = |x: f64| fmt_float(x, 6);
        let f4 = |x: f64| fmt_float(x, 4);
        let mut entries = vec![
            ("repetitions", repetitions.to_string()),
            ("visibility_voltage_V", format_number(summary.voltage)),
            ("visibility", f6(summary.visibility)),
            ("visibility_stderr", f6(summary.visibility_stderr)),
            ("extinction_db", f4(summary.extinction_db)),
        ];
        let fit_error = match &summary.fit {
            Ok(fit) => {
                entries.push(("v_pi_fit", f6(fit.v_pi)));
                entries.push(("fit_visibility", f6(fit.visibility)));
                entries.push(("fit_offset", f4(fit.offset)));
                entries.push(("fit_residual", f4(fit.residual_norm)));
                None
            }
            Err(e) => Some(e.to_string()),
        };
        Self { entries, fit_error }
    }

    pub fn from_rows(rows: &[SettingStats], repetitions: usize) -> Result<Self> {
        let summary = summarize(rows, repetitions).context("cannot summarize rows")?;
        Ok(Self::new(&summary, repetitions))
    }

    pub fn to_text(&self) -> String {
        let mut out = String::from("# summary\n");
        for (k, v) in &self.entries {
            out.push_str(&format!("# {k}={v}\n"));
        }
        if let Some(e) = &self.fit_error {
            out.push_str(&format!("# fit_error={e}\n"));
        }
        out
    }

    pub fn to_json(&self) -> Value {
        let mut m = Map::new();
        for (k, v) in &self.entries {
            let value = v
                .parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .map_or(Value::Null, |x| json!(x));
            m.insert((*k).to_string(), value);
        }
        m.insert(
            "fit_error".into(),
            self.fit_error.clone().map_or(Value::Null, Value::String),
        );
        Value::Object(m)
    }
}

fn fmt_float(x: f64, digits: usize) -> String {
    if x.is_finite() {
        format!("{x:.digits$}")
    } else if x > 0.0 {
        "inf".into()
    } else if x < 0.0 {
        "-inf".into()
    } else {
        "nan".into()
    }
}

/// Writes the rounded rows and the summary computed from them.
pub fn sweep_csv(result: &ExperimentResult) -> Result<String> {
    let rows = rounded_rows(&result.settings);
    let summary = SummaryBlock::from_rows(&rows, result.repetitions)?;
    let mut out = format!("{SWEEP_HEADER}\n");
    for r in &rows {
        out.push_str(&sweep_cells(r).join(","));
        out.push('\n');
    }
    out.push_str(&summary.to_text());
    Ok(out)
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct JsonRow {
    #[serde(rename = "voltage_V")]
    voltage_v: f64,
    mean_c1: f64,
    std_c1: f64,
    mean_c2: f64,
    std_c2: f64,
    p1_analytic: f64,
    p2_analytic: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct JsonSweep {
    schema_version: u32,
    kind: String,
    repetitions: usize,
    integration_time_s: f64,
    rows: Vec<JsonRow>,
    summary: Value,
}

const SWEEP_KIND: &str = "voltage_sweep";

pub fn sweep_json(result: &ExperimentResult) -> Result<String> {
    let rows = rounded_rows(&result.settings);
    let summary = SummaryBlock::from_rows(&rows, result.repetitions)?;
    let doc = JsonSweep {
        schema_version: SCHEMA_VERSION,
        kind: SWEEP_KIND.into(),
        repetitions: result.repetitions,
        integration_time_s: result.integration_time,
        rows: rows
            .iter()
            .map(|r| JsonRow {
                voltage_v: r.voltage,
                mean_c1: r.mean_c1,
                std_c1: r.std_c1,
                mean_c2: r.mean_c2,
                std_c2: r.std_c2,
                p1_analytic: r.p1_analytic,
                p2_analytic: r.p2_analytic,
            })
            .collect(),
        summary: summary.to_json(),
    };
    let mut text = serde_json::to_string_pretty(&doc)?;
    text.push('\n');
    Ok(text)
}

/// Rows of a sweep file and its recorded repetition count (1 if absent).
#[derive(Debug, Clone, PartialEq)]
pub struct SweepFile {
    pub rows: Vec<SettingStats>,
    pub repetitions: usize,
    pub json: bool,
}

pub fn parse_sweep(text: &str) -> Result<SweepFile> {
    if text.trim_start().starts_with('{') {
        parse_sweep_json(text)
    } else {
        parse_sweep_csv(text)
    }
}

fn parse_sweep_json(text: &str) -> Result<SweepFile> {
    let doc: JsonSweep = serde_json::from_str(text).context("not a sweep JSON document")?;
    if doc.schema_version != SCHEMA_VERSION || doc.kind != SWEEP_KIND {
        bail!(
            "unsupported document: schema_version {} kind `{}` (expected {SCHEMA_VERSION} `{SWEEP_KIND}`)",
            doc.schema_version,
            doc.kind
        );
    }
    let rows = doc
        .rows
        .iter()
        .map(|r| {
            row_from_values([
                r.voltage_v,
                r.mean_c1,
                r.std_c1,
                r.mean_c2,
                r.std_c2,
                r.p1_analytic,
                r.p2_analytic,
            ])
        })
        .collect();
    Ok(SweepFile {
        rows,
        repetitions: doc.repetitions.max(1),
        json: true,
    })
}

fn parse_sweep_csv(text: &str) -> Result<SweepFile> {
    let mut lines = text.lines().enumerate();
    let header = lines
        .by_ref()
        .find(|(_, l)| !l.trim().is_empty())
        .map(|(_, l)| l.trim())
        .unwrap_or("");
    if header != SWEEP_HEADER {
        bail!("line 1: expected header `{SWEEP_HEADER}`, found `{header}`");
    }
    let mut rows = Vec::new();
    let mut repetitions = 1;
    for (i, line) in lines {
        let n = i + 1;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            if let Some(r) = comment.trim().strip_prefix("repetitions=") {
                repetitions = r
                    .parse::<usize>()
                    .ok()
                    .filter(|&r| r > 0)
                    .with_context(|| format!("line {n}: invalid repetitions `{r}`"))?;
            }
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != SWEEP_COLUMNS.len() {
            bail!(
                "line {n}: expected {} columns, found {}",
                SWEEP_COLUMNS.len(),
                cells.len()
            );
        }
        let mut v = [0.0; 7];
        for ((x, c), col) in v.iter_mut().zip(&cells).zip(SWEEP_COLUMNS) {
            *x = num(c, col, n)?;
        }
        rows.push(row_from_values(v));
    }
    if rows.is_empty() {
        bail!("no data rows");
    }
    Ok(SweepFile {
        rows,
        repetitions,
        json: false,
    })
}

pub fn delay_csv(result: &ExperimentResult) -> String {
    let mut out = format!("{DELAY_HEADER}\n");
    for r in &result.settings {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            format_number(r.delay),
            counts(r.mean_c1),
            counts(r.std_c1),
            prob(r.phi_cw),
            prob(r.phi_ccw)
        ));
    }
    out
}

pub fn delay_json(result: &ExperimentResult) -> Result<String> {
    let rows: Vec<Value> = result
        .settings
        .iter()
        .map(|r| {
            json!({
                "delay_s": format_number(r.delay).parse::<f64>().expect("formatted"),
                "mean_c1": counts(r.mean_c1).parse::<f64>().expect("formatted"),
                "std_c1": counts(r.std_c1).parse::<f64>().expect("formatted"),
                "phi_cw": prob(r.phi_cw).parse::<f64>().expect("formatted"),
                "phi_ccw": prob(r.phi_ccw).parse::<f64>().expect("formatted"),
            })
        })
        .collect();
    let doc = json!({
        "schema_version": SCHEMA_VERSION,
        "kind": "delay_scan",
        "repetitions": result.repetitions,
        "integration_time_s": result.integration_time,
        "voltage_V": result.settings.first().map_or(0.0, |r| r.voltage),
        "rows": rows,
    });
    let mut text = serde_json::to_string_pretty(&doc)?;
    text.push('\n');
    Ok(text)
}

/// Text between the `# summary` marker and the end of a sweep CSV.
#[cfg(test)]
fn embedded_summary(text: &str) -> Option<&str> {
    text.find("# summary\n").map(|i| &text[i..])
}
