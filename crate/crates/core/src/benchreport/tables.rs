use serde::{Deserialize, Serialize};

use super::ApproachResult;
use crate::error::EvalError;
use crate::mapmetrics::Metric;
use crate::stats::DeviationStats;

pub const TABLE_SCHEMA_VERSION: u32 = 1;

const NA: &str = "n/a";

/// Display unit of a table row. Values are held internally in meters,
/// gigabytes and hours.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Unit {
    Centimeters,
    Gigabytes,
    Hours,
}

impl Unit {
    pub fn symbol(self) -> &'static str {
        match self {
            Unit::Centimeters => "cm",
            Unit::Gigabytes => "GB",
            Unit::Hours => "h",
        }
    }

    /// Shortest decimal that parses back to exactly `v` through [`Unit::decode`].
    pub fn encode(self, v: f64) -> String {
        match self {
            Unit::Centimeters => shift_decimal(v, 2),
            Unit::Gigabytes | Unit::Hours => format!("{v}"),
        }
    }

    pub fn decode(self, s: &str) -> Option<f64> {
        if s == NA {
            return None;
        }
        match self {
            Unit::Centimeters => format!("{s}e-2").parse().ok(),
            Unit::Gigabytes | Unit::Hours => s.parse().ok(),
        }
    }
}

/// Moves the decimal point of the shortest representation of `v` by
/// `places` digits, without passing through a rounded multiplication.
fn shift_decimal(v: f64, places: i32) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let sci = format!("{v:e}");
    let (mantissa, exp) = sci.split_once('e').expect("LowerExp has an exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    let (sign, mantissa) = match mantissa.strip_prefix('-') {
        Some(m) => ("-", m),
        None => ("", mantissa),
    };
    let digits: String = mantissa.chars().filter(|c| *c != '.').collect();
    let n = digits.len() as i32;
    let pos = exp + places + 1;
    let body = if pos <= 0 {
        format!("0.{}{digits}", "0".repeat((-pos) as usize))
    } else if pos >= n {
        format!("{digits}{}", "0".repeat((pos - n) as usize))
    } else {
        format!("{}.{}", &digits[..pos as usize], &digits[pos as usize..])
    };
    format!("{sign}{body}")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub label: String,
    pub unit: Unit,
    /// One entry per column; `None` renders as "n/a".
    pub values: Vec<Option<f64>>,
}

/// Approaches as columns, statistics as rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub name: String,
    pub title: String,
    pub columns: Vec<String>,
    pub rows: Vec<TableRow>,
    /// Put the unit into column headers (single-unit tables) instead of
    /// row labels.
    pub unit_in_header: Option<Unit>,
}

#[derive(Serialize)]
struct JsonTable<'a> {
    schema_version: u32,
    name: &'a str,
    title: &'a str,
    columns: &'a [String],
    rows: Vec<JsonRow<'a>>,
}

#[derive(Serialize)]
struct JsonRow<'a> {
    label: &'a str,
    unit: &'a str,
    values: Vec<Option<serde_json::Value>>,
}

impl Table {
    fn header(&self) -> Vec<String> {
        let mut h = vec!["statistic".to_string()];
        h.extend(self.columns.iter().map(|c| match self.unit_in_header {
            Some(u) => format!("{c} [{}]", u.symbol()),
            None => c.clone(),
        }));
        h
    }

    fn row_label(&self, r: &TableRow) -> String {
        match self.unit_in_header {
            Some(_) => r.label.clone(),
            None => format!("{} [{}]", r.label, r.unit.symbol()),
        }
    }

    fn cells(r: &TableRow) -> Vec<String> {
        r.values
            .iter()
            .map(|v| v.map_or_else(|| NA.to_string(), |v| r.unit.encode(v)))
            .collect()
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        w.write_record(self.header()).expect("in-memory write");
        for r in &self.rows {
            let mut rec = vec![self.row_label(r)];
            rec.extend(Self::cells(r));
            w.write_record(rec).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 fields")
    }

    /// Numbers are written in display units with the same digits as the CSV.
    pub fn to_json(&self) -> String {
        let rows = self
            .rows
            .iter()
            .map(|r| JsonRow {
                label: &r.label,
                unit: r.unit.symbol(),
                values: Self::cells(r)
                    .into_iter()
                    .map(|c| (c != NA).then(|| serde_json::from_str(&c).expect("numeric cell")))
                    .collect(),
            })
            .collect();
        let t = JsonTable {
            schema_version: TABLE_SCHEMA_VERSION,
            name: &self.name,
            title: &self.title,
            columns: &self.columns,
            rows,
        };
        serde_json::to_string_pretty(&t).expect("table serializes") + "\n"
    }
}

/// Reads a CSV written by [`Table::to_csv`] back into header and cell text.
pub fn parse_table_csv(text: &str) -> Result<(Vec<String>, Vec<Vec<String>>), EvalError> {
    let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
    let header = r
        .headers()
        .map_err(|e| EvalError::InvalidInput(format!("table csv: {e}")))?
        .iter()
        .map(String::from)
        .collect();
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| EvalError::InvalidInput(format!("table csv: {e}")))?;
        rows.push(rec.iter().map(String::from).collect());
    }
    Ok((header, rows))
}

fn stats_rows(stats: &[Option<&DeviationStats>]) -> Vec<TableRow> {
    type Pick = (&'static str, fn(&DeviationStats) -> f64);
    let pick: [Pick; 4] = [
        ("Average", |s| s.average),
        ("Median", |s| s.median),
        ("MAX", |s| s.max),
        ("MIN", |s| s.min),
    ];
    pick.iter()
        .map(|(label, f)| TableRow {
            label: label.to_string(),
            unit: Unit::Centimeters,
            values: stats.iter().map(|s| s.map(f)).collect(),
        })
        .collect()
}

fn computed(m: &Metric<DeviationStats>) -> Option<&DeviationStats> {
    m.value()
}

/// Geometric verification, localization deviations and effort overview,
/// one column per result in input order.
pub fn emit_tables(results: &[ApproachResult]) -> Vec<Table> {
    let columns: Vec<String> = results.iter().map(|r| r.approach.clone()).collect();
    let geo: Vec<_> = results.iter().map(|r| computed(&r.map_quality.geometric)).collect();
    let loc: Vec<_> = results.iter().map(|r| computed(&r.localization)).collect();
    let effort_row = |label: &str, unit, f: fn(&ApproachResult) -> f64| TableRow {
        label: label.to_string(),
        unit,
        values: results.iter().map(|r| Some(f(r))).collect(),
    };
    vec![
        Table {
            name: "table1_geometric".into(),
            title: "Results of geometric verification".into(),
            columns: columns.clone(),
            rows: stats_rows(&geo),
            unit_in_header: Some(Unit::Centimeters),
        },
        Table {
            name: "table2_localization".into(),
            title: "Localization deviations in each map".into(),
            columns: columns.clone(),
            rows: stats_rows(&loc),
            unit_in_header: Some(Unit::Centimeters),
        },
        Table {
            name: "table3_effort".into(),
            title: "Overview procedure-based evaluation".into(),
            columns,
            rows: vec![
                effort_row("Used Data", Unit::Gigabytes, |r| r.effort.data_volume_gb),
                effort_row("Gross Time", Unit::Hours, |r| r.effort.gross_time_h),
                effort_row("Net Time", Unit::Hours, |r| r.effort.net_time_h),
            ],
            unit_in_header: None,
        },
    ]
}
