//! CSV/JSON artifacts written to a run's output directory.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::lls::ReferenceMode;
use crate::metrics::{RmseAccumulator, RunMetrics, StepOutcome};
use crate::selection::Algorithm;

use super::experiment::{ExperimentReport, TraceRow, TrialSink};

pub const REPORT_JSON: &str = "report.json";
pub const RMSE_SERIES_CSV: &str = "rmse_series.csv";
pub const CDF_CSV: &str = "cdf.csv";
pub const SUMMARY_CSV: &str = "summary.csv";
pub const TRIAL_LOG_CSV: &str = "trial_errors.csv";
pub const MEASUREMENTS_CSV: &str = "measurements.csv";

const MISSING: &str = "-";

/// Shortest round-trip form; switches to exponent notation for tiny or huge values.
fn num(x: f64) -> String {
    format!("{x:?}")
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| MISSING.to_string(), num)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

/// Writes `algorithm,mode,index,flight_dist_m,rmse_m` rows.
pub fn write_rmse_series<W: Write>(report: &ExperimentReport, out: W) -> Result<()> {
    let spacing = report.config.spacing;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["algorithm", "mode", "index", "flight_dist_m", "rmse_m"])?;
    for r in &report.results {
        for p in &r.metrics.rmse_series {
            w.write_record([
                r.algorithm.as_str().to_string(),
                r.mode.to_string(),
                p.index.to_string(),
                num(spacing * (p.index - 1) as f64),
                num(p.rmse),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Writes `algorithm,mode,error_m,prob` rows.
pub fn write_cdf<W: Write>(report: &ExperimentReport, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["algorithm", "mode", "error_m", "prob"])?;
    for r in &report.results {
        for (e, p) in &r.cdf {
            w.write_record([r.algorithm.as_str().to_string(), r.mode.to_string(), num(*e), num(*p)])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Writes one row per algorithm/mode with the summary-table columns.
pub fn write_summary<'a, W, I>(rows: I, out: W) -> Result<()>
where
    W: Write,
    I: IntoIterator<Item = (Algorithm, ReferenceMode, &'a RunMetrics<f64>)>,
{
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["algorithm", "mode", "accuracy_m", "variance_m2", "flight_dist_m", "reliability", "violations"])?;
    for (alg, mode, m) in rows {
        w.write_record([
            alg.as_str().to_string(),
            mode.to_string(),
            opt(m.long_term_rmse),
            opt(m.long_term_variance),
            opt(m.min_flight_distance),
            opt(m.reliability),
            m.violation_count.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Writes `N_tilde,algorithm,upsilon,reference,residual`; `upsilon` is `;`-separated.
pub fn write_trace<'a, W: Write>(rows: impl IntoIterator<Item = &'a TraceRow>, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["N_tilde", "algorithm", "upsilon", "reference", "residual"])?;
    for r in rows {
        let ups: Vec<String> = r.upsilon.iter().map(usize::to_string).collect();
        w.write_record([
            r.n_tilde.to_string(),
            r.algorithm.as_str().to_string(),
            ups.join(";"),
            r.reference.to_string(),
            opt(r.residual),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Writes every report artifact into `dir` (created if needed).
pub fn write_report(report: &ExperimentReport, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut json = create(&dir.join(REPORT_JSON))?;
    serde_json::to_writer_pretty(&mut json, report)?;
    json.write_all(b"\n")?;
    json.flush()?;
    write_rmse_series(report, create(&dir.join(RMSE_SERIES_CSV))?)?;
    write_cdf(report, create(&dir.join(CDF_CSV))?)?;
    write_summary(
        report.results.iter().map(|r| (r.algorithm, r.mode, &r.metrics)),
        create(&dir.join(SUMMARY_CSV))?,
    )?;
    for mode in ReferenceMode::ALL {
        let rows: Vec<&TraceRow> = report.traces.iter().filter(|t| t.mode == mode).collect();
        if !rows.is_empty() {
            let name = format!("selection_trace_{}.csv", mode.as_str().to_ascii_lowercase());
            write_trace(rows, create(&dir.join(name))?)?;
        }
    }
    if !report.traced_measurements.is_empty() {
        crate::channel::write_measurements_csv(&report.traced_measurements, create(&dir.join(MEASUREMENTS_CSV))?)?;
    }
    Ok(())
}

/// Streams per-trial outcomes as
/// `algorithm,mode,target_id,trial,index,status,error_m`.
pub struct TrialLog<W: Write> {
    writer: csv::Writer<W>,
}

impl<W: Write> TrialLog<W> {
    pub fn new(out: W) -> Result<Self> {
        let mut writer = csv::Writer::from_writer(out);
        writer.write_record(["algorithm", "mode", "target_id", "trial", "index", "status", "error_m"])?;
        Ok(Self { writer })
    }

    pub fn finish(mut self) -> Result<W> {
        self.writer.flush()?;
        self.writer.into_inner().map_err(|e| Error::Io(e.into_error()))
    }
}

impl<W: Write> TrialSink for TrialLog<W> {
    fn record(
        &mut self,
        target_id: usize,
        trial: usize,
        combos: &[(Algorithm, ReferenceMode)],
        outcomes: &[Vec<StepOutcome<f64>>],
    ) -> Result<()> {
        let (t, k) = (target_id.to_string(), trial.to_string());
        for (&(alg, mode), row) in combos.iter().zip(outcomes) {
            for (i, o) in row.iter().enumerate() {
                let (status, err) = match o {
                    StepOutcome::NotLocalizable => ("warmup", String::new()),
                    StepOutcome::Invalid => ("invalid", String::new()),
                    StepOutcome::Error(e) => ("ok", num(*e)),
                };
                self.writer.write_record([alg.as_str(), mode.as_str(), &t, &k, &(i + 1).to_string(), status, &err])?;
            }
        }
        Ok(())
    }
}

type ComboKey = (Algorithm, ReferenceMode);

/// Rebuilds summary metrics from a trial log and the run's report.
///
/// Rows must be in the order the run wrote them, so sums accumulate in the
/// same sequence and the result matches the original summary bit for bit.
pub fn summarize_from_log<R: std::io::Read>(report: &ExperimentReport, log: R) -> Result<Vec<(Algorithm, ReferenceMode, RunMetrics<f64>)>> {
    let cfg = &report.config;
    let trajectory = cfg.trajectory()?;
    let params = cfg.metric_params()?;
    let n = trajectory.len();
    let single_target = report.targets.len() == 1;

    let mut order: Vec<ComboKey> = Vec::new();
    let mut totals: BTreeMap<ComboKey, RmseAccumulator<f64>> = BTreeMap::new();
    let mut samples: BTreeMap<ComboKey, Vec<f64>> = BTreeMap::new();
    let mut per_target: BTreeMap<ComboKey, RmseAccumulator<f64>> = BTreeMap::new();
    let mut current_target: Option<usize> = None;
    let mut trial_rows: BTreeMap<ComboKey, Vec<StepOutcome<f64>>> = BTreeMap::new();

    let flush_target = |per_target: &mut BTreeMap<ComboKey, RmseAccumulator<f64>>,
                        totals: &mut BTreeMap<ComboKey, RmseAccumulator<f64>>,
                        samples: &mut BTreeMap<ComboKey, Vec<f64>>| {
        for (key, acc) in std::mem::take(per_target) {
            if !single_target {
                if let Some(r) = acc.rmse_at(n) {
                    samples.entry(key).or_default().push(r);
                }
            }
            totals.entry(key).or_insert_with(|| RmseAccumulator::new(n)).merge(&acc);
        }
    };

    let mut rdr = csv::Reader::from_reader(log);
    for rec in rdr.records() {
        let rec = rec?;
        let field = |k: usize| rec.get(k).ok_or_else(|| Error::Malformed(format!("short trial-log row {rec:?}")));
        let alg: Algorithm = field(0)?.parse()?;
        let mode: ReferenceMode = field(1)?.parse()?;
        let target_id: usize = field(2)?.parse().map_err(|_| Error::Malformed("target_id".into()))?;
        let index: usize = field(4)?.parse().map_err(|_| Error::Malformed("index".into()))?;
        let outcome = match field(5)? {
            "warmup" => StepOutcome::NotLocalizable,
            "invalid" => StepOutcome::Invalid,
            "ok" => StepOutcome::Error(field(6)?.parse().map_err(|_| Error::Malformed("error_m".into()))?),
            other => return Err(Error::Malformed(format!("unknown status '{other}'"))),
        };
        if current_target != Some(target_id) {
            flush_target(&mut per_target, &mut totals, &mut samples);
            current_target = Some(target_id);
        }
        let key = (alg, mode);
        if !order.contains(&key) {
            order.push(key);
        }
        let row = trial_rows.entry(key).or_default();
        if index != row.len() + 1 {
            return Err(Error::Malformed(format!("trial log out of order at {alg} {mode} index {index}")));
        }
        row.push(outcome);
        if index == n {
            let row = trial_rows.remove(&key).expect("row present");
            if single_target {
                if let Some(e) = row[n - 1].error() {
                    samples.entry(key).or_default().push(e);
                }
            }
            per_target.entry(key).or_insert_with(|| RmseAccumulator::new(n)).push_trial(&row);
        }
    }
    flush_target(&mut per_target, &mut totals, &mut samples);
    if !trial_rows.is_empty() {
        return Err(Error::Malformed("trial log ends mid-trial".into()));
    }
    if order.is_empty() {
        return Err(Error::EmptyInput("trial log"));
    }

    Ok(order
        .into_iter()
        .map(|key| {
            let acc = &totals[&key];
            let s = samples.get(&key).map(Vec::as_slice).unwrap_or(&[]);
            (key.0, key.1, RunMetrics::compute(acc, s, &trajectory, &params))
        })
        .collect())
}

/// Regenerates `summary.csv` in `dir` from `report.json` and the trial log.
pub fn summarize_dir(dir: &Path) -> Result<()> {
    let report: ExperimentReport = serde_json::from_reader(std::io::BufReader::new(
        File::open(dir.join(REPORT_JSON)).map_err(|e| Error::Config(format!("cannot open report.json: {e}")))?,
    ))?;
    let log = File::open(dir.join(TRIAL_LOG_CSV))
        .map_err(|e| Error::Config(format!("cannot open {TRIAL_LOG_CSV}: {e}")))?;
    let rows = summarize_from_log(&report, std::io::BufReader::new(log))?;
    write_summary(rows.iter().map(|(a, m, r)| (*a, *m, r)), create(&dir.join(SUMMARY_CSV))?)
}
