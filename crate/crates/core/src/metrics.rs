//! Per-slot metric records and their CSV form.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::env::SlotOutcome;
use crate::error::{IsacError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SlotRecord {
    pub slot: u64,
    pub live: usize,
    pub dwell_fractions: Vec<f64>,
    pub tau_c: f64,
    pub sum_rate: f64,
    pub rates: Vec<f64>,
    pub reward: f64,
    pub lambda: f64,
    pub distances: Vec<f64>,
    pub sigma_theta: Vec<f64>,
}

impl SlotRecord {
    pub fn new(outcome: SlotOutcome, reward: f64, lambda: f64) -> Self {
        Self {
            slot: outcome.slot,
            live: outcome.live,
            dwell_fractions: outcome.dwell_fractions,
            tau_c: outcome.tau_c,
            sum_rate: outcome.sum_rate,
            rates: outcome.rates,
            reward,
            lambda,
            distances: outcome.distances,
            sigma_theta: outcome.sigma_theta,
        }
    }

    pub fn dwell_sum_fraction(&self) -> f64 {
        self.dwell_fractions.iter().sum()
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct EpisodeMetrics {
    pub records: Vec<SlotRecord>,
}

impl EpisodeMetrics {
    pub fn mean_sum_rate(&self) -> f64 {
        mean(self.records.iter().map(|r| r.sum_rate))
    }

    /// Mean total dwell time (s) over slots `[from, to)`.
    pub fn mean_dwell_sum(&self, t0: f64, from: usize, to: usize) -> f64 {
        let to = to.min(self.records.len());
        mean(self.records[from.min(to)..to].iter().map(|r| r.dwell_sum_fraction() * t0))
    }
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

pub fn csv_header(n_targets: usize) -> String {
    let mut cols = vec!["slot".to_string(), "live".to_string()];
    let per = |name: &'static str| (0..n_targets).map(move |i| format!("{name}_{i}"));
    cols.extend(per("dwell"));
    cols.push("tau_c".into());
    cols.push("sum_rate".into());
    cols.extend(per("rate"));
    cols.push("reward".into());
    cols.push("lambda".into());
    cols.extend(per("distance"));
    cols.extend(per("sigma_theta"));
    cols.join(",")
}

/// Ten significant digits.
fn num(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else {
        format!("{v:.9e}")
    }
}

pub fn csv_text(metrics: &EpisodeMetrics, n_targets: usize) -> String {
    let mut out = csv_header(n_targets);
    out.push('\n');
    for r in &metrics.records {
        let _ = write!(out, "{},{}", r.slot, r.live);
        let mut push = |v: f64| {
            out.push(',');
            out.push_str(&num(v));
        };
        r.dwell_fractions.iter().for_each(|&v| push(v));
        push(r.tau_c);
        push(r.sum_rate);
        r.rates.iter().for_each(|&v| push(v));
        push(r.reward);
        push(r.lambda);
        r.distances.iter().for_each(|&v| push(v));
        r.sigma_theta.iter().for_each(|&v| push(v));
        out.push('\n');
    }
    out
}

pub fn export_csv(metrics: &EpisodeMetrics, n_targets: usize, path: &Path) -> Result<()> {
    fs::write(path, csv_text(metrics, n_targets)).map_err(|e| IsacError::io(path, e))
}

/// Header names and numeric rows of a metrics CSV.
pub fn read_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let text = fs::read_to_string(path).map_err(|e| IsacError::io(path, e))?;
    let origin = path.display().to_string();
    let mut lines = text.lines();
    let header: Vec<String> = lines
        .next()
        .ok_or_else(|| IsacError::Parse {
            path: origin.clone(),
            line: 1,
            msg: "missing header".into(),
        })?
        .split(',')
        .map(str::to_string)
        .collect();
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let row = line
            .split(',')
            .map(|f| f.parse::<f64>())
            .collect::<std::result::Result<Vec<f64>, _>>()
            .map_err(|e| IsacError::Parse {
                path: origin.clone(),
                line: i + 2,
                msg: e.to_string(),
            })?;
        if row.len() != header.len() {
            return Err(IsacError::Parse {
                path: origin.clone(),
                line: i + 2,
                msg: format!("{} fields, header has {}", row.len(), header.len()),
            });
        }
        rows.push(row);
    }
    Ok((header, rows))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn record(slot: u64, x: f64) -> SlotRecord {
        SlotRecord {
            slot,
            live: 2,
            dwell_fractions: vec![0.1, 0.0],
            tau_c: 2.7,
            sum_rate: x,
            rates: vec![x, 0.0],
            reward: x / 3.0,
            lambda: 100.0,
            distances: vec![812.345678912345, 0.0],
            sigma_theta: vec![1.23456789e-5, 0.0],
        }
    }

    #[test]
    fn empty_metrics_is_header_only() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.csv");
        export_csv(&EpisodeMetrics::default(), 4, &p).unwrap();
        let text = fs::read_to_string(&p).unwrap();
        assert_eq!(text.lines().count(), 1);
        assert_eq!(text.trim_end().split(',').count(), 2 + 4 + 2 + 4 + 2 + 4 + 4);
        let (h, rows) = read_csv(&p).unwrap();
        assert_eq!(h[0], "slot");
        assert!(rows.is_empty());
    }

    #[test]
    fn line_count_is_header_plus_rows() {
        let m = EpisodeMetrics {
            records: (0..7000).map(|s| record(s, s as f64)).collect(),
        };
        assert_eq!(csv_text(&m, 2).lines().count(), 7001);
    }

    #[test]
    fn unwritable_path_reports_it() {
        let err = export_csv(&EpisodeMetrics::default(), 1, Path::new("/nonexistent/dir/m.csv")).unwrap_err();
        assert!(err.to_string().contains("/nonexistent/dir/m.csv"));
    }

    #[test]
    fn window_means() {
        let mut m = EpisodeMetrics::default();
        assert_eq!(m.mean_sum_rate(), 0.0);
        m.records = vec![record(0, 1.0), record(1, 3.0)];
        assert_eq!(m.mean_sum_rate(), 2.0);
        assert!((m.mean_dwell_sum(3.0, 0, 10) - 0.3).abs() < 1e-12);
        assert_eq!(m.mean_dwell_sum(3.0, 5, 10), 0.0);
    }

    proptest! {
        #[test]
        fn round_trip_ten_digits(x in -1e9f64..1e9) {
            let dir = tempfile::tempdir().unwrap();
            let p = dir.path().join("m.csv");
            let m = EpisodeMetrics { records: vec![record(3, x)] };
            export_csv(&m, 2, &p).unwrap();
            let (_, rows) = read_csv(&p).unwrap();
            let back = rows[0][5];
            prop_assert!((back - x).abs() <= 1e-9 * x.abs());
            prop_assert_eq!(rows[0][0], 3.0);
            prop_assert!((rows[0][10] - 812.345678912345).abs() < 1e-6);
        }
    }
}
