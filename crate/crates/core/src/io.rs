//! Text formats: population and stratified inputs, the strata sidecar, and
//! experiment reports.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Read;
use std::path::Path;

use serde::Deserialize;

use crate::design::FinitePopulation;
use crate::error::{Error, Result};
use crate::experiment::{ExperimentReport, RelativeEfficiency, Scenario};
use crate::stratified::{StratifiedSample, Stratum};

pub const REPORT_COLUMNS: [&str; 9] = [
    "scenario",
    "n",
    "rho_or_transform",
    "mse_lr",
    "mse_ds",
    "re_percent",
    "skipped",
    "samples",
    "rho_xy",
];

fn reader<R: Read>(input: R, delimiter: u8) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .has_headers(false)
        .delimiter(delimiter)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(input)
}

fn csv_error(err: csv::Error) -> Error {
    let line = err.position().map_or(0, |p| p.line());
    Error::Parse {
        line,
        column: 0,
        message: err.to_string(),
    }
}

fn parse_field(record: &csv::StringRecord, column: usize) -> Result<f64> {
    let line = record.position().map_or(0, |p| p.line());
    let raw = record.get(column).ok_or_else(|| Error::Parse {
        line,
        column: column + 1,
        message: "missing field".into(),
    })?;
    raw.parse::<f64>().map_err(|_| Error::Parse {
        line,
        column: column + 1,
        message: format!("'{raw}' is not a number"),
    })
}

/// Reads `(y, x)` rows. A first line whose numeric columns do not parse is
/// taken as a header.
pub fn parse_population<R: Read>(input: R, delimiter: u8) -> Result<FinitePopulation> {
    let mut y = Vec::new();
    let mut x = Vec::new();
    for (i, record) in reader(input, delimiter).records().enumerate() {
        let record = record.map_err(csv_error)?;
        if i == 0 && record.iter().take(2).any(|f| f.parse::<f64>().is_err()) {
            continue;
        }
        y.push(parse_field(&record, 0)?);
        x.push(parse_field(&record, 1)?);
    }
    FinitePopulation::new(y, x)
}

pub fn read_population(path: &Path, delimiter: u8) -> Result<FinitePopulation> {
    parse_population(std::fs::File::open(path)?, delimiter)
}

/// One value per line (blank lines and `#` comments ignored).
pub fn read_values(path: &Path) -> Result<Vec<f64>> {
    let text = std::fs::read_to_string(path)?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        out.push(line.parse::<f64>().map_err(|_| Error::Parse {
            line: i as u64 + 1,
            column: 1,
            message: format!("'{line}' is not a number"),
        })?);
    }
    Ok(out)
}

/// Stratum sizes and optional known population x variances, keyed by label.
///
/// ```toml
/// [sizes]
/// north = 120
/// south = 80
///
/// [population_x_variance]
/// north = 4.2
/// south = 3.9
/// ```
#[derive(Clone, Debug, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct StrataSidecar {
    pub sizes: BTreeMap<String, usize>,
    #[serde(default)]
    pub population_x_variance: BTreeMap<String, f64>,
}

impl StrataSidecar {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(format!("strata sidecar: {e}")))
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }
}

/// Reads `(label, y, x)` rows; strata keep the order of first appearance.
pub fn parse_stratified<R: Read>(
    input: R,
    delimiter: u8,
    sidecar: &StrataSidecar,
) -> Result<StratifiedSample> {
    let mut strata: Vec<Stratum> = Vec::new();
    for (i, record) in reader(input, delimiter).records().enumerate() {
        let record = record.map_err(csv_error)?;
        if i == 0
            && record
                .iter()
                .skip(1)
                .take(2)
                .any(|f| f.parse::<f64>().is_err())
        {
            continue;
        }
        let line = record.position().map_or(0, |p| p.line());
        let label = record.get(0).unwrap_or_default().to_string();
        let y = parse_field(&record, 1)?;
        let x = parse_field(&record, 2)?;
        match strata.iter_mut().find(|s| s.label == label) {
            Some(s) => {
                s.y.push(y);
                s.x.push(x);
            }
            None => {
                let size = *sidecar.sizes.get(&label).ok_or_else(|| Error::Parse {
                    line,
                    column: 1,
                    message: format!("stratum '{label}' has no size in the sidecar"),
                })?;
                strata.push(Stratum {
                    label,
                    population_size: size,
                    y: vec![y],
                    x: vec![x],
                });
            }
        }
    }
    StratifiedSample::new(strata)
}

/// Known population x variances in the sample's stratum order.
pub fn sidecar_x_variances(sample: &StratifiedSample, sidecar: &StrataSidecar) -> Result<Vec<f64>> {
    sample
        .strata()
        .iter()
        .map(|s| {
            sidecar
                .population_x_variance
                .get(&s.label)
                .copied()
                .ok_or_else(|| {
                    Error::Config(format!(
                        "no population_x_variance for stratum '{}'",
                        s.label
                    ))
                })
        })
        .collect()
}

/// 17 significant digits, enough to round-trip any `f64`.
pub fn machine_number(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else {
        format!("{v:.16e}")
    }
}

fn scenario_fields(s: &Scenario) -> (&'static str, String) {
    match s {
        Scenario::Enumeration { transform } => ("enumeration", transform.to_string()),
        Scenario::MonteCarlo { rho } => ("monte-carlo", format!("{rho}")),
    }
}

fn re_field(re: RelativeEfficiency) -> String {
    match re {
        RelativeEfficiency::Finite(v) => machine_number(v),
        RelativeEfficiency::Infinite => "inf".into(),
        RelativeEfficiency::Undefined => "undef".into(),
    }
}

/// Delimiter-separated report with a header row.
pub fn write_report(reports: &[ExperimentReport], delimiter: char) -> String {
    let sep = delimiter.to_string();
    let mut out = REPORT_COLUMNS.join(&sep);
    out.push('\n');
    for r in reports {
        let (scenario, param) = scenario_fields(&r.scenario);
        let fields = [
            scenario.to_string(),
            r.n.to_string(),
            param,
            machine_number(r.mse_lr),
            machine_number(r.mse_ds),
            re_field(r.re),
            r.skipped.to_string(),
            r.sample_count.to_string(),
            r.rho_xy.map(machine_number).unwrap_or_default(),
        ];
        out.push_str(&fields.join(&sep));
        out.push('\n');
    }
    out
}

/// Aligned table with two decimals, for reading rather than parsing.
pub fn write_table(reports: &[ExperimentReport]) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<12} {:>5} {:>10} {:>14} {:>14} {:>12} {:>8} {:>10} {:>8}",
        "scenario", "n", "param", "mse_lr", "mse_ds", "re_percent", "skipped", "samples", "rho_xy"
    );
    for r in reports {
        let (scenario, param) = scenario_fields(&r.scenario);
        let re = match r.re {
            RelativeEfficiency::Finite(v) => format!("{v:.2}"),
            RelativeEfficiency::Infinite => "inf".into(),
            RelativeEfficiency::Undefined => "undef".into(),
        };
        let rho = r
            .rho_xy
            .map(|v| format!("{v:.3}"))
            .unwrap_or_else(|| "-".into());
        let _ = writeln!(
            out,
            "{:<12} {:>5} {:>10} {:>14.2} {:>14.2} {:>12} {:>8} {:>10} {:>8}",
            scenario, r.n, param, r.mse_lr, r.mse_ds, re, r.skipped, r.sample_count, rho
        );
    }
    out
}

/// Inverse of [`write_report`].
pub fn parse_report(text: &str, delimiter: u8) -> Result<Vec<ExperimentReport>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .delimiter(delimiter)
        .from_reader(text.as_bytes());
    let headers = rdr.headers().map_err(csv_error)?.clone();
    if headers.iter().ne(REPORT_COLUMNS.iter().copied()) {
        return Err(Error::Parse {
            line: 1,
            column: 1,
            message: "unexpected report header".into(),
        });
    }
    let mut out = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(csv_error)?;
        let line = record.position().map_or(0, |p| p.line());
        let bad = |column: usize, what: &str| Error::Parse {
            line,
            column: column + 1,
            message: format!("invalid {what}"),
        };
        let num = |column: usize| -> Result<f64> {
            record[column]
                .parse::<f64>()
                .map_err(|_| bad(column, REPORT_COLUMNS[column]))
        };
        let int = |column: usize| -> Result<u64> {
            record[column]
                .parse::<u64>()
                .map_err(|_| bad(column, REPORT_COLUMNS[column]))
        };
        let scenario = match &record[0] {
            "enumeration" => Scenario::Enumeration {
                transform: record[2].parse().map_err(|_| bad(2, "transformation"))?,
            },
            "monte-carlo" => Scenario::MonteCarlo { rho: num(2)? },
            _ => return Err(bad(0, "scenario")),
        };
        let re = match &record[5] {
            "inf" => RelativeEfficiency::Infinite,
            "undef" => RelativeEfficiency::Undefined,
            _ => RelativeEfficiency::Finite(num(5)?),
        };
        out.push(ExperimentReport {
            scenario,
            n: int(1)? as usize,
            mse_lr: num(3)?,
            mse_ds: num(4)?,
            re,
            skipped: int(6)?,
            sample_count: int(7)?,
            rho_xy: if record[8].is_empty() {
                None
            } else {
                Some(num(8)?)
            },
        });
    }
    Ok(out)
}
