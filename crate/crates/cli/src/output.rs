use std::cmp::Ordering;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

/// One metric of one trial.  Columns are written in field order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsvRow {
    pub experiment: String,
    pub n: usize,
    #[serde(rename = "P")]
    pub power: f64,
    #[serde(rename = "N")]
    pub noise: f64,
    pub delta: f64,
    pub seed: u64,
    pub trial: u64,
    pub metric_name: String,
    pub metric_value: f64,
    pub mode: String,
    /// JSON object with experiment-specific fields.
    pub extra: String,
}

/// Orders rows by trial, then metric name.
pub fn sort_rows(rows: &mut [CsvRow]) {
    rows.sort_by(|a, b| match a.trial.cmp(&b.trial) {
        Ordering::Equal => a.metric_name.cmp(&b.metric_name),
        o => o,
    });
}

/// Writes the comment header followed by the CSV table.  The column
/// header is written even when there are no rows.
pub fn write_csv<W: Write>(mut out: W, comment: &str, rows: &[CsvRow]) -> csv::Result<()> {
    out.write_all(comment.as_bytes())?;
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record([
        "experiment",
        "n",
        "P",
        "N",
        "delta",
        "seed",
        "trial",
        "metric_name",
        "metric_value",
        "mode",
        "extra",
    ])?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads rows back, skipping `#` comment lines.
pub fn read_csv<R: BufRead>(input: R) -> csv::Result<Vec<CsvRow>> {
    let mut r = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(input);
    r.deserialize().collect()
}
