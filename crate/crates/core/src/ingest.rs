//! Snapshot ingestion: load timestamped like/retweet counts per message,
//! difference them into per-interval increments, fit a Weibull law to the
//! increments and append the results to a JSON Lines store.

use std::collections::HashSet;
use std::fmt::{self, Write as _};
use std::fs::{File, OpenOptions};
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::IngestError;
use crate::fit::{fit_least_squares, WeibullParams};
use crate::histogram::Histogram;
use crate::model::ModelParams;
use crate::par::{self, Execution};
use crate::sim::simulate_ensemble;

/// Message id used for fits across messages (`finals` mode).
pub const ALL_MESSAGES: &str = "*";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TimelineRecord {
    pub message_id: String,
    /// Seconds since the Unix epoch, UTC.
    pub timestamp: i64,
    pub cumulative_likes: u64,
    pub cumulative_retweets: u64,
    pub text: Option<String>,
    /// 1-based line number in the source file.
    pub row: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Timeline {
    pub message_id: String,
    pub records: Vec<TimelineRecord>,
}

/// Result of a lenient load: valid timelines plus the messages (or rows)
/// that were rejected.
#[derive(Debug, Default)]
pub struct LoadReport {
    pub timelines: Vec<Timeline>,
    pub rejected: Vec<IngestError>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IngestMetric {
    Likes,
    Retweets,
}

impl fmt::Display for IngestMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            IngestMetric::Likes => "likes",
            IngestMetric::Retweets => "retweets",
        })
    }
}

/// What gets fitted: per-interval increments of each message, or the final
/// cumulative counts across messages.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IngestMode {
    Increments,
    Finals,
}

impl fmt::Display for IngestMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            IngestMode::Increments => "increments",
            IngestMode::Finals => "finals",
        })
    }
}

impl FromStr for IngestMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "increments" => Ok(IngestMode::Increments),
            "finals" => Ok(IngestMode::Finals),
            other => Err(format!("unknown mode `{other}` (expected increments or finals)")),
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> IngestError + '_ {
    move |source| IngestError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Strict load: the first bad row fails the whole file.
pub fn load_timeline(path: &Path) -> Result<Vec<Timeline>, IngestError> {
    let file = File::open(path).map_err(io_err(path))?;
    let report = parse_timeline(file, path)?;
    match report.rejected.into_iter().next() {
        Some(err) => Err(err),
        None => Ok(report.timelines),
    }
}

/// Lenient load: a bad row rejects only its message.
pub fn load_timeline_lenient(path: &Path) -> Result<LoadReport, IngestError> {
    let file = File::open(path).map_err(io_err(path))?;
    parse_timeline(file, path)
}

/// Parses `message_id,timestamp,likes,retweets[,text]`. File-level problems
/// (unreadable file, bad header) are returned as `Err`; row problems are
/// collected in [`LoadReport::rejected`], ordered by row.
pub fn parse_timeline<R: Read>(reader: R, path: &Path) -> Result<LoadReport, IngestError> {
    let mut rdr = csv::ReaderBuilder::new()
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers().map_err(|_| IngestError::Header {
        path: path.to_path_buf(),
    })?;
    let names: Vec<&str> = headers.iter().collect();
    let ok_header = names.len() >= 4
        && names[..4] == ["message_id", "timestamp", "likes", "retweets"]
        && (names.len() == 4 || (names.len() == 5 && names[4] == "text"));
    if !ok_header {
        return Err(IngestError::Header {
            path: path.to_path_buf(),
        });
    }

    let mut order: Vec<String> = Vec::new();
    let mut groups: std::collections::HashMap<String, Vec<TimelineRecord>> = Default::default();
    let mut bad: std::collections::HashMap<String, IngestError> = Default::default();
    let mut orphans = Vec::new();

    for rec in rdr.records() {
        let rec = match rec {
            Ok(r) => r,
            Err(e) => {
                let row = e.position().map_or(0, |p| p.line());
                orphans.push(IngestError::MalformedRow {
                    row,
                    reason: e.to_string(),
                });
                continue;
            }
        };
        let row = rec.position().map_or(0, |p| p.line());
        let id = rec.get(0).unwrap_or("").to_string();
        if id.is_empty() {
            orphans.push(IngestError::MalformedRow {
                row,
                reason: "empty message_id".into(),
            });
            continue;
        }
        if !groups.contains_key(&id) && !bad.contains_key(&id) {
            order.push(id.clone());
            groups.insert(id.clone(), Vec::new());
        }
        if bad.contains_key(&id) {
            continue;
        }
        match parse_row(&rec, row, &id).and_then(|r| check_monotone(groups[&id].last(), r)) {
            Ok(r) => groups.get_mut(&id).expect("group exists").push(r),
            Err(e) => {
                groups.remove(&id);
                bad.insert(id, e);
            }
        }
    }

    let mut rejected: Vec<IngestError> = orphans;
    let mut timelines = Vec::new();
    for id in order {
        if let Some(err) = bad.remove(&id) {
            rejected.push(err);
        } else if let Some(records) = groups.remove(&id) {
            timelines.push(Timeline {
                message_id: id,
                records,
            });
        }
    }
    rejected.sort_by_key(error_row);
    Ok(LoadReport { timelines, rejected })
}

fn error_row(e: &IngestError) -> u64 {
    match e {
        IngestError::MalformedRow { row, .. } | IngestError::NonMonotone { row, .. } => *row,
        _ => 0,
    }
}

fn parse_row(rec: &csv::StringRecord, row: u64, id: &str) -> Result<TimelineRecord, IngestError> {
    if rec.len() < 4 || rec.len() > 5 {
        return Err(IngestError::MalformedRow {
            row,
            reason: format!("message `{id}`: expected 4 or 5 fields, found {}", rec.len()),
        });
    }
    let field = |i: usize, name: &str| -> Result<&str, IngestError> {
        rec.get(i)
            .filter(|s| !s.is_empty())
            .ok_or_else(|| IngestError::MalformedRow {
                row,
                reason: format!("message `{id}`: missing {name}"),
            })
    };
    let num = |i: usize, name: &str| -> Result<u64, IngestError> {
        let s = field(i, name)?;
        s.parse::<u64>().map_err(|_| IngestError::MalformedRow {
            row,
            reason: format!("message `{id}`: {name} `{s}` is not a nonnegative integer"),
        })
    };
    let ts = field(1, "timestamp")?;
    let timestamp = ts.parse::<i64>().map_err(|_| IngestError::MalformedRow {
        row,
        reason: format!("message `{id}`: timestamp `{ts}` is not an integer"),
    })?;
    Ok(TimelineRecord {
        message_id: id.to_string(),
        timestamp,
        cumulative_likes: num(2, "likes")?,
        cumulative_retweets: num(3, "retweets")?,
        text: rec.get(4).filter(|s| !s.is_empty()).map(str::to_string),
        row,
    })
}

fn check_monotone(prev: Option<&TimelineRecord>, r: TimelineRecord) -> Result<TimelineRecord, IngestError> {
    let Some(p) = prev else { return Ok(r) };
    let reason = if r.timestamp <= p.timestamp {
        Some(format!(
            "timestamp {} does not increase after {}",
            r.timestamp, p.timestamp
        ))
    } else if r.cumulative_likes < p.cumulative_likes {
        Some(format!(
            "likes drop from {} to {}",
            p.cumulative_likes, r.cumulative_likes
        ))
    } else if r.cumulative_retweets < p.cumulative_retweets {
        Some(format!(
            "retweets drop from {} to {}",
            p.cumulative_retweets, r.cumulative_retweets
        ))
    } else {
        None
    };
    match reason {
        Some(reason) => Err(IngestError::NonMonotone {
            message_id: r.message_id,
            row: r.row,
            reason,
        }),
        None => Ok(r),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Interval {
    pub index: usize,
    pub delta_likes: u64,
    pub delta_retweets: u64,
    pub seconds: i64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IncrementSeries {
    pub message_id: String,
    pub start_timestamp: i64,
    pub start_likes: u64,
    pub start_retweets: u64,
    pub intervals: Vec<Interval>,
}

impl IncrementSeries {
    /// Fewer than two snapshots: nothing to difference.
    pub fn insufficient(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn deltas(&self, metric: IngestMetric) -> Vec<u64> {
        self.intervals
            .iter()
            .map(|iv| match metric {
                IngestMetric::Likes => iv.delta_likes,
                IngestMetric::Retweets => iv.delta_retweets,
            })
            .collect()
    }

    fn start(&self, metric: IngestMetric) -> u64 {
        match metric {
            IngestMetric::Likes => self.start_likes,
            IngestMetric::Retweets => self.start_retweets,
        }
    }

    /// `(hours since the first snapshot, cumulative count)` rebuilt from the
    /// deltas.
    pub fn cumulative(&self, metric: IngestMetric) -> Vec<(f64, u64)> {
        let mut t = 0i64;
        let mut c = self.start(metric);
        let mut out = vec![(0.0, c)];
        for (iv, d) in self.intervals.iter().zip(self.deltas(metric)) {
            t += iv.seconds;
            c += d;
            out.push((t as f64 / 3600.0, c));
        }
        out
    }

    /// SHA-256 over everything a fit depends on.
    pub fn digest(&self, metric: IngestMetric) -> String {
        let mut h = Sha256::new();
        h.update(format!(
            "{}\n{}\n{}\n{}\n",
            self.message_id,
            metric,
            self.start_timestamp,
            self.start(metric)
        ));
        for (iv, d) in self.intervals.iter().zip(self.deltas(metric)) {
            h.update(format!("{},{}\n", iv.seconds, d));
        }
        hex::encode(h.finalize())
    }
}

pub fn compute_increments(timeline: &Timeline) -> IncrementSeries {
    let first = timeline.records.first();
    IncrementSeries {
        message_id: timeline.message_id.clone(),
        start_timestamp: first.map_or(0, |r| r.timestamp),
        start_likes: first.map_or(0, |r| r.cumulative_likes),
        start_retweets: first.map_or(0, |r| r.cumulative_retweets),
        intervals: timeline
            .records
            .windows(2)
            .enumerate()
            .map(|(index, w)| Interval {
                index,
                delta_likes: w[1].cumulative_likes - w[0].cumulative_likes,
                delta_retweets: w[1].cumulative_retweets - w[0].cumulative_retweets,
                seconds: w[1].timestamp - w[0].timestamp,
            })
            .collect(),
    }
}

/// One line of the store.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoredResult {
    pub message_id: String,
    pub metric: IngestMetric,
    pub k: f64,
    pub lambda: f64,
    pub ks: f64,
    pub growth_rate_per_hour: f64,
    pub n_intervals: usize,
    pub input_digest: String,
    pub fitted_at: String,
}

impl StoredResult {
    pub fn params(&self) -> WeibullParams {
        WeibullParams {
            k: self.k,
            lambda: self.lambda,
        }
    }

    fn key(&self) -> (String, IngestMetric, String) {
        (self.message_id.clone(), self.metric, self.input_digest.clone())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum FitOutcome {
    Fitted(StoredResult),
    Skipped {
        message_id: String,
        metric: IngestMetric,
        reason: String,
    },
}

/// Minimum number of nonzero intervals for a per-message fit.
pub const MIN_NONZERO_INTERVALS: usize = 3;

/// Ordinary least-squares slope of `y` on `x`. `None` when `x` has no spread.
pub fn ols_slope(points: &[(f64, f64)]) -> Option<f64> {
    let n = points.len() as f64;
    if points.len() < 2 {
        return None;
    }
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

fn growth_rate(series: &IncrementSeries, metric: IngestMetric) -> f64 {
    let pts: Vec<(f64, f64)> = series
        .cumulative(metric)
        .into_iter()
        .map(|(t, c)| (t, c as f64))
        .collect();
    ols_slope(&pts).unwrap_or(0.0)
}

/// Least-squares Weibull fit of one message's per-interval increments.
pub fn fit_message(series: &IncrementSeries, metric: IngestMetric, fitted_at: &str) -> FitOutcome {
    let skip = |reason: String| FitOutcome::Skipped {
        message_id: series.message_id.clone(),
        metric,
        reason,
    };
    if series.insufficient() {
        return skip("fewer than two snapshots".into());
    }
    let deltas = series.deltas(metric);
    let nonzero = deltas.iter().filter(|d| **d > 0).count();
    if nonzero < MIN_NONZERO_INTERVALS {
        return skip(format!("{nonzero} nonzero intervals, need {MIN_NONZERO_INTERVALS}"));
    }
    let hist = Histogram::from_counts(deltas.iter().copied());
    match fit_least_squares(&hist) {
        Ok(report) => FitOutcome::Fitted(StoredResult {
            message_id: series.message_id.clone(),
            metric,
            k: report.params.k,
            lambda: report.params.lambda,
            ks: report.ks,
            growth_rate_per_hour: growth_rate(series, metric),
            n_intervals: deltas.len(),
            input_digest: series.digest(metric),
            fitted_at: fitted_at.to_string(),
        }),
        Err(e) => skip(e.to_string()),
    }
}

/// Least-squares fit of the final cumulative counts across messages.
pub fn fit_finals(timelines: &[Timeline], metric: IngestMetric, fitted_at: &str) -> FitOutcome {
    let skip = |reason: String| FitOutcome::Skipped {
        message_id: ALL_MESSAGES.into(),
        metric,
        reason,
    };
    let finals: Vec<u64> = timelines
        .iter()
        .filter_map(|t| t.records.last())
        .map(|r| match metric {
            IngestMetric::Likes => r.cumulative_likes,
            IngestMetric::Retweets => r.cumulative_retweets,
        })
        .collect();
    let hist = Histogram::from_counts(finals.iter().copied());
    let report = match fit_least_squares(&hist) {
        Ok(r) => r,
        Err(e) => return skip(e.to_string()),
    };

    let series: Vec<IncrementSeries> = timelines.iter().map(compute_increments).collect();
    let rates: Vec<f64> = series.iter().map(|s| growth_rate(s, metric)).collect();
    let mut h = Sha256::new();
    for s in &series {
        h.update(s.digest(metric));
    }
    FitOutcome::Fitted(StoredResult {
        message_id: ALL_MESSAGES.into(),
        metric,
        k: report.params.k,
        lambda: report.params.lambda,
        ks: report.ks,
        growth_rate_per_hour: if rates.is_empty() {
            0.0
        } else {
            rates.iter().sum::<f64>() / rates.len() as f64
        },
        n_intervals: finals.len(),
        input_digest: hex::encode(h.finalize()),
        fitted_at: fitted_at.to_string(),
    })
}

fn existing_keys(text: &str) -> HashSet<(String, IngestMetric, String)> {
    // torn or foreign lines are ignored
    text.lines()
        .filter_map(|l| serde_json::from_str::<StoredResult>(l).ok())
        .map(|r| r.key())
        .collect()
}

/// Appends results not already present (by message, metric and input
/// digest) as JSON Lines. The batch goes out in a single write.
pub fn store_results(results: &[StoredResult], path: &Path) -> Result<usize, IngestError> {
    let existing = match std::fs::read_to_string(path) {
        Ok(s) => s,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => String::new(),
        Err(e) => return Err(io_err(path)(e)),
    };
    let mut seen = existing_keys(&existing);

    let mut buf = String::new();
    if !existing.is_empty() && !existing.ends_with('\n') {
        buf.push('\n');
    }
    let mut written = 0;
    for (line, r) in results.iter().enumerate() {
        if !seen.insert(r.key()) {
            continue;
        }
        let json = serde_json::to_string(r).map_err(|source| IngestError::Encode { line, source })?;
        let _ = writeln!(buf, "{json}");
        written += 1;
    }
    if written == 0 {
        return Ok(0);
    }

    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(io_err(path))?;
    }
    let mut f = OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(io_err(path))?;
    f.write_all(buf.as_bytes()).map_err(io_err(path))?;
    f.sync_data().map_err(io_err(path))?;
    Ok(written)
}

/// Everything one pipeline run produced.
#[derive(Debug, Default)]
pub struct PipelineSummary {
    pub fitted: Vec<StoredResult>,
    pub skipped: Vec<(String, String)>,
    pub rejected: Vec<String>,
    pub written: usize,
}

/// load → increments → fit → store. Row errors reject only their message;
/// fits run per message under `exec`, stores are serialized.
pub fn run_pipeline(
    input: &Path,
    store: &Path,
    mode: IngestMode,
    metric: IngestMetric,
    fitted_at: &str,
    exec: Execution,
) -> Result<PipelineSummary, IngestError> {
    let load = load_timeline_lenient(input)?;
    let outcomes = match mode {
        IngestMode::Increments => par::map_slice(exec, &load.timelines, |t| {
            fit_message(&compute_increments(t), metric, fitted_at)
        }),
        IngestMode::Finals => vec![fit_finals(&load.timelines, metric, fitted_at)],
    };

    let mut summary = PipelineSummary {
        rejected: load.rejected.iter().map(|e| e.to_string()).collect(),
        ..Default::default()
    };
    for o in outcomes {
        match o {
            FitOutcome::Fitted(r) => summary.fitted.push(r),
            FitOutcome::Skipped { message_id, reason, .. } => summary.skipped.push((message_id, reason)),
        }
    }
    summary.written = store_results(&summary.fitted, store)?;
    Ok(summary)
}

/// Snapshot CSV for `messages` synthetic messages with `intervals` scans
/// each, 900 s apart starting at `start`. Interval `j` of message `m` adds
/// the likes and reposts of simulated agent `m * intervals + j`.
pub fn synthetic_timelines(params: &ModelParams, messages: usize, intervals: usize, seed: u64, start: i64) -> String {
    let outcomes = simulate_ensemble(params, messages * intervals, seed, Execution::default());
    let mut out = String::from("message_id,timestamp,likes,retweets,text\n");
    for m in 0..messages {
        let id = format!("msg-{:03}", m + 1);
        let (mut likes, mut retweets) = (0u64, 0u64);
        let _ = writeln!(out, "{id},{start},0,0,synthetic message {}", m + 1);
        for j in 0..intervals {
            let o = &outcomes[m * intervals + j];
            likes += o.likes as u64;
            retweets += o.reposts as u64;
            let _ = writeln!(out, "{id},{},{likes},{retweets},", start + 900 * (j as i64 + 1));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fit::sample_weibull;

    fn parse(text: &str) -> LoadReport {
        parse_timeline(text.as_bytes(), Path::new("mem.csv")).unwrap()
    }

    fn timeline(id: &str, likes: &[u64], step: i64) -> Timeline {
        Timeline {
            message_id: id.into(),
            records: likes
                .iter()
                .enumerate()
                .map(|(i, &l)| TimelineRecord {
                    message_id: id.into(),
                    timestamp: i as i64 * step,
                    cumulative_likes: l,
                    cumulative_retweets: 0,
                    text: None,
                    row: i as u64 + 2,
                })
                .collect(),
        }
    }

    #[test]
    fn two_rows_one_increment() {
        let rep = parse("message_id,timestamp,likes,retweets\na,0,5,1\na,900,7,1\n");
        assert!(rep.rejected.is_empty());
        assert_eq!(rep.timelines.len(), 1);
        let s = compute_increments(&rep.timelines[0]);
        assert_eq!(s.deltas(IngestMetric::Likes), vec![2]);
        assert_eq!(s.intervals[0].seconds, 900);
    }

    #[test]
    fn dropping_count_is_rejected_with_row() {
        let rep = parse("message_id,timestamp,likes,retweets\na,0,5,1\na,900,4,1\nb,0,1,1\n");
        assert_eq!(rep.timelines.len(), 1);
        assert_eq!(rep.timelines[0].message_id, "b");
        let msg = rep.rejected[0].to_string();
        assert!(msg.contains("row 3") && msg.contains("`a`"), "{msg}");
    }

    #[test]
    fn malformed_and_non_increasing_rows() {
        let rep = parse("message_id,timestamp,likes,retweets,text\na,0,x,1,hi\nb,10,1,1,\nb,10,2,1,\n");
        assert!(rep.timelines.is_empty());
        assert!(rep.rejected[0].to_string().contains("row 2"));
        assert!(rep.rejected[1].to_string().contains("row 4"));
        assert!(matches!(rep.rejected[1], IngestError::NonMonotone { .. }));
    }

    #[test]
    fn bad_header_is_a_file_error() {
        assert!(parse_timeline("id,ts\n".as_bytes(), Path::new("x")).is_err());
    }

    #[test]
    fn strict_load_reports_first_error() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.csv");
        std::fs::write(&p, "message_id,timestamp,likes,retweets\na,0,5,1\na,900,4,1\n").unwrap();
        let err = load_timeline(&p).unwrap_err();
        assert!(err.to_string().contains("row 3"));
        assert!(load_timeline(&dir.path().join("missing.csv")).is_err());
    }

    #[test]
    fn differencing_examples() {
        let s = compute_increments(&timeline("m", &[0, 3, 3, 10], 900));
        assert_eq!(s.deltas(IngestMetric::Likes), vec![3, 0, 7]);
        let s = compute_increments(&timeline("m", &[4, 4, 4], 900));
        assert_eq!(s.deltas(IngestMetric::Likes), vec![0, 0]);
        let s = compute_increments(&timeline("m", &[4], 900));
        assert!(s.insufficient());
        assert!(matches!(
            fit_message(&s, IngestMetric::Likes, "t"),
            FitOutcome::Skipped { .. }
        ));
    }

    #[test]
    fn zero_deltas_are_skipped() {
        let s = compute_increments(&timeline("m", &[4; 50], 900));
        let FitOutcome::Skipped { reason, .. } = fit_message(&s, IngestMetric::Likes, "t") else {
            panic!("expected skip")
        };
        assert!(reason.contains("0 nonzero"));
    }

    #[test]
    fn linear_growth_rate() {
        // 6 likes per 15-minute interval = 24 per hour
        let likes: Vec<u64> = (0..20).map(|i| 6 * i).collect();
        let s = compute_increments(&timeline("m", &likes, 900));
        assert!((growth_rate(&s, IngestMetric::Likes) - 24.0).abs() < 1e-9);
        assert_eq!(ols_slope(&[(1.0, 2.0)]), None);
    }

    #[test]
    fn weibull_increments_are_recovered() {
        // integer part of Weibull(1.7, 4.6) draws, the continuity-corrected
        // histogram centers sit at n + 0.5
        let draws = sample_weibull(&WeibullParams { k: 1.7, lambda: 4.6 }, 77, 10_000);
        let mut cum = vec![0u64];
        for d in &draws {
            let last = *cum.last().unwrap();
            cum.push(last + d.floor() as u64);
        }
        let s = compute_increments(&timeline("w", &cum, 900));
        let FitOutcome::Fitted(r) = fit_message(&s, IngestMetric::Likes, "t") else {
            panic!("expected fit")
        };
        assert!((r.k / 1.7 - 1.0).abs() < 0.10, "k = {}", r.k);
        assert_eq!(r.n_intervals, 10_000);
    }

    fn result(id: &str, digest: &str) -> StoredResult {
        StoredResult {
            message_id: id.into(),
            metric: IngestMetric::Likes,
            k: 1.5,
            lambda: 2.0,
            ks: 0.01,
            growth_rate_per_hour: 3.0,
            n_intervals: 10,
            input_digest: digest.into(),
            fitted_at: "2026-01-01T00:00:00Z".into(),
        }
    }

    #[test]
    fn store_is_idempotent() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("nested/store.jsonl");
        let batch = [result("a", "1"), result("b", "2"), result("c", "3")];
        assert_eq!(store_results(&batch, &p).unwrap(), 3);
        assert_eq!(store_results(&batch, &p).unwrap(), 0);
        let mixed = [result("a", "1"), result("d", "4"), result("a", "9")];
        assert_eq!(store_results(&mixed, &p).unwrap(), 2);
        let text = std::fs::read_to_string(&p).unwrap();
        assert_eq!(text.lines().count(), 5);
        assert!(text.lines().all(|l| serde_json::from_str::<StoredResult>(l).is_ok()));
    }

    #[test]
    fn store_recovers_from_torn_tail() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.jsonl");
        std::fs::write(&p, "{\"message_id\":\"a\"").unwrap();
        assert_eq!(store_results(&[result("a", "1")], &p).unwrap(), 1);
        let text = std::fs::read_to_string(&p).unwrap();
        let last = text.lines().last().unwrap();
        assert!(serde_json::from_str::<StoredResult>(last).is_ok());
    }

    #[test]
    fn store_reports_unwritable_path() {
        let dir = tempfile::tempdir().unwrap();
        // a directory cannot be opened for append
        assert!(store_results(&[result("a", "1")], dir.path()).is_err());
    }

    #[test]
    fn store_line_schema() {
        let v = serde_json::to_value(result("a", "d")).unwrap();
        let keys: Vec<&str> = v.as_object().unwrap().keys().map(String::as_str).collect();
        let mut expected = vec![
            "message_id",
            "metric",
            "k",
            "lambda",
            "ks",
            "growth_rate_per_hour",
            "n_intervals",
            "input_digest",
            "fitted_at",
        ];
        expected.sort();
        let mut keys = keys;
        keys.sort();
        assert_eq!(keys, expected);
    }

    #[test]
    fn digest_ignores_fit_time_but_tracks_data() {
        let a = compute_increments(&timeline("m", &[0, 3, 5], 900));
        let b = compute_increments(&timeline("m", &[0, 3, 6], 900));
        assert_eq!(a.digest(IngestMetric::Likes), a.digest(IngestMetric::Likes));
        assert_ne!(a.digest(IngestMetric::Likes), b.digest(IngestMetric::Likes));
        assert_ne!(a.digest(IngestMetric::Likes), a.digest(IngestMetric::Retweets));
    }

    #[test]
    fn synthetic_fixture_shape() {
        let csv = synthetic_timelines(&ModelParams::reference(), 2, 5, 3, 1_700_000_000);
        let rep = parse(&csv);
        assert!(rep.rejected.is_empty());
        assert_eq!(rep.timelines.len(), 2);
        assert_eq!(rep.timelines[0].records.len(), 6);
        let s = compute_increments(&rep.timelines[1]);
        assert!(s.intervals.iter().all(|iv| iv.seconds == 900));
    }
}
