use std::collections::BTreeMap;
use std::fmt::Write as _;

use listlab_core::trial_rng;
use rayon::prelude::*;

use crate::config::ExperimentConfig;
use crate::experiments::{run_trial, TrialRows};
use crate::output::{sort_rows, write_csv, CsvRow};

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("trial {trial}: {source}")]
    Trial {
        trial: u64,
        source: listlab_core::Error,
    },
    #[error("cannot build worker pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub header: String,
    pub rows: Vec<CsvRow>,
}

impl RunOutput {
    /// Whether any trial ran out of budget.
    pub fn budget_exceeded(&self) -> bool {
        self.rows.iter().any(|r| r.metric_name == "budget_exceeded")
    }

    pub fn to_csv_bytes(&self) -> Vec<u8> {
        let mut buf = Vec::new();
        write_csv(&mut buf, &self.header, &self.rows).expect("writing to memory cannot fail");
        buf
    }

    /// Count, median and interquartile range of every metric.
    pub fn summary(&self) -> String {
        let mut by_metric: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
        for r in &self.rows {
            by_metric
                .entry(&r.metric_name)
                .or_default()
                .push(r.metric_value);
        }
        let mut s = String::new();
        if let Some(r) = self.rows.first() {
            let _ = writeln!(
                s,
                "{} n={} P={} N={} delta={}",
                r.experiment, r.n, r.power, r.noise, r.delta
            );
        }
        let _ = writeln!(
            s,
            "{:<28} {:>6} {:>14} {:>14}",
            "metric", "count", "median", "iqr"
        );
        for (name, mut vals) in by_metric {
            vals.retain(|v| !v.is_nan());
            vals.sort_by(f64::total_cmp);
            let (med, iqr) = if vals.is_empty() {
                (f64::NAN, f64::NAN)
            } else {
                (
                    quantile(&vals, 0.5),
                    quantile(&vals, 0.75) - quantile(&vals, 0.25),
                )
            };
            let _ = writeln!(s, "{name:<28} {:>6} {med:>14.6} {iqr:>14.6}", vals.len());
        }
        s
    }
}

/// Linear-interpolation quantile of sorted data.
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    let pos = p * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    quantile(&v, 0.5)
}

fn one_trial(cfg: &ExperimentConfig, trial: u64) -> Result<Vec<CsvRow>, RunError> {
    let mut rng = trial_rng(cfg.seed, cfg.experiment.name(), trial);
    let mut out = TrialRows::new(cfg, trial);
    match run_trial(cfg, &mut out, &mut rng) {
        Ok(()) => {}
        Err(e) if e.is_budget() => {
            log::warn!("trial {trial}: {e}");
            out.push_budget(&e);
        }
        Err(source) => return Err(RunError::Trial { trial, source }),
    }
    Ok(out.rows)
}

/// Runs every trial on a pool of `cfg.workers` threads.  Each trial draws
/// from its own generator, so the rows do not depend on the schedule.
pub fn run(cfg: &ExperimentConfig) -> Result<RunOutput, RunError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()?;
    let per_trial: Vec<Vec<CsvRow>> = pool.install(|| {
        (0..cfg.trials)
            .into_par_iter()
            .map(|t| one_trial(cfg, t))
            .collect::<Result<_, _>>()
    })?;
    let mut rows: Vec<CsvRow> = per_trial.into_iter().flatten().collect();
    sort_rows(&mut rows);
    Ok(RunOutput {
        header: cfg.echo(),
        rows,
    })
}
