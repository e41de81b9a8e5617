//! Accuracy, flight-distance and reliability criteria.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::trajectory::Trajectory;

/// Localization outcome at one trajectory index of one trial.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum StepOutcome<T> {
    /// The algorithm cannot form an anchor set yet.
    NotLocalizable,
    /// An anchor set was formed but the solve was degenerate.
    Invalid,
    /// 3D position error in meters.
    Error(T),
}

impl<T: Scalar> StepOutcome<T> {
    pub fn error(self) -> Option<T> {
        match self {
            StepOutcome::Error(e) => Some(e),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricParams<T> {
    /// RMSE threshold for "localized", meters.
    pub theta: T,
    /// Acceptable RMSE rise between consecutive indices, meters.
    pub beta: T,
}

impl<T: Scalar> MetricParams<T> {
    pub fn new(theta: T, beta: T) -> Result<Self> {
        if !(theta > T::zero()) || !(beta >= T::zero()) {
            return Err(Error::InvalidArgument(format!("need theta > 0 and beta >= 0, got {theta}, {beta}")));
        }
        Ok(Self { theta, beta })
    }
}

impl<T: Scalar> Default for MetricParams<T> {
    fn default() -> Self {
        Self { theta: T::lit(20.0), beta: T::one() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RmsePoint<T> {
    /// 1-based waypoint index.
    pub index: usize,
    pub rmse: T,
    /// Errors that entered the mean.
    pub valid: usize,
    /// Degenerate solves excluded from the mean.
    pub invalid: usize,
}

/// Running sums of squared error per trajectory index.
#[derive(Debug, Clone, PartialEq)]
pub struct RmseAccumulator<T> {
    sum_sq: Vec<T>,
    valid: Vec<usize>,
    invalid: Vec<usize>,
}

impl<T: Scalar> RmseAccumulator<T> {
    pub fn new(len: usize) -> Self {
        Self { sum_sq: vec![T::zero(); len], valid: vec![0; len], invalid: vec![0; len] }
    }

    pub fn len(&self) -> usize {
        self.sum_sq.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sum_sq.is_empty()
    }

    /// Adds one trial; `outcomes[k]` belongs to index `k + 1`.
    pub fn push_trial(&mut self, outcomes: &[StepOutcome<T>]) {
        assert_eq!(outcomes.len(), self.len(), "trial length mismatch");
        for (k, o) in outcomes.iter().enumerate() {
            match *o {
                StepOutcome::Error(e) => {
                    self.sum_sq[k] = self.sum_sq[k] + e * e;
                    self.valid[k] += 1;
                }
                StepOutcome::Invalid => self.invalid[k] += 1,
                StepOutcome::NotLocalizable => {}
            }
        }
    }

    /// Adds another accumulator's sums index by index.
    pub fn merge(&mut self, other: &Self) {
        assert_eq!(other.len(), self.len(), "accumulator length mismatch");
        for k in 0..self.len() {
            self.sum_sq[k] = self.sum_sq[k] + other.sum_sq[k];
            self.valid[k] += other.valid[k];
            self.invalid[k] += other.invalid[k];
        }
    }

    /// RMSE at 1-based `index`, if any valid error was recorded there.
    pub fn rmse_at(&self, index: usize) -> Option<T> {
        let k = index.checked_sub(1)?;
        let n = *self.valid.get(k)?;
        (n > 0).then(|| (self.sum_sq[k] / T::lit(n as f64)).sqrt())
    }

    pub fn invalid_total(&self) -> usize {
        self.invalid.iter().sum()
    }

    /// Points at every index with at least one valid error.
    pub fn series(&self) -> Vec<RmsePoint<T>> {
        (0..self.len())
            .filter(|&k| self.valid[k] > 0)
            .map(|k| RmsePoint {
                index: k + 1,
                rmse: (self.sum_sq[k] / T::lit(self.valid[k] as f64)).sqrt(),
                valid: self.valid[k],
                invalid: self.invalid[k],
            })
            .collect()
    }
}

/// Per-index RMSE over trials (rows) of per-index outcomes (columns).
pub fn rmse_series<T: Scalar>(trials: &[Vec<StepOutcome<T>>]) -> Result<Vec<RmsePoint<T>>> {
    let first = trials.first().ok_or(Error::EmptyInput("error matrix"))?;
    let mut acc = RmseAccumulator::new(first.len());
    for t in trials {
        if t.len() != acc.len() {
            return Err(Error::Malformed("ragged error matrix".into()));
        }
        acc.push_trial(t);
    }
    let series = acc.series();
    if series.is_empty() {
        return Err(Error::EmptyInput("no valid localization errors"));
    }
    Ok(series)
}

/// Flight distance at the first index from which the RMSE stays below `theta`
/// through the end of the series; `None` if that never happens.
pub fn min_flight_distance<T: Scalar>(series: &[RmsePoint<T>], trajectory: &Trajectory<T>, theta: T) -> Option<T> {
    let mut start = None;
    for (pos, p) in series.iter().enumerate().rev() {
        if p.rmse < theta {
            start = Some(pos);
        } else {
            break;
        }
    }
    start.and_then(|pos| trajectory.flight_distance(series[pos].index).ok())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Reliability<T> {
    pub gamma: T,
    pub violations: usize,
}

/// Counts rises of at least `beta` between consecutive series points;
/// `gamma = 1 / max(1, violations)`.
pub fn reliability<T: Scalar>(series: &[RmsePoint<T>], beta: T) -> Result<Reliability<T>> {
    if series.len() < 2 {
        return Err(Error::InvalidArgument(format!("reliability needs at least 2 points, got {}", series.len())));
    }
    let violations = series.windows(2).filter(|w| w[1].rmse >= w[0].rmse + beta).count();
    Ok(Reliability { gamma: T::one() / T::lit(violations.max(1) as f64), violations })
}

/// Empirical CDF as `(value, k/n)` steps, ascending; tied values collapse to one step.
pub fn long_term_cdf<T: Scalar>(values: &[T]) -> Result<Vec<(T, T)>> {
    if values.is_empty() {
        return Err(Error::EmptyInput("long-term errors"));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let n = T::lit(sorted.len() as f64);
    let mut out: Vec<(T, T)> = Vec::with_capacity(sorted.len());
    for (k, &v) in sorted.iter().enumerate() {
        let p = T::lit((k + 1) as f64) / n;
        match out.last_mut() {
            Some(last) if last.0 == v => last.1 = p,
            _ => out.push((v, p)),
        }
    }
    Ok(out)
}

/// Population variance; `None` for an empty slice.
pub fn variance<T: Scalar>(values: &[T]) -> Option<T> {
    if values.is_empty() {
        return None;
    }
    let n = T::lit(values.len() as f64);
    let mean = values.iter().copied().sum::<T>() / n;
    Some(values.iter().map(|&v| (v - mean) * (v - mean)).sum::<T>() / n)
}

/// Summary of one algorithm/reference-mode run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics<T> {
    pub rmse_series: Vec<RmsePoint<T>>,
    /// RMSE at the last trajectory index; `None` if no valid estimate exists there.
    pub long_term_rmse: Option<T>,
    /// Variance of the long-term samples (see [`RunMetrics::compute`]).
    pub long_term_variance: Option<T>,
    pub min_flight_distance: Option<T>,
    pub reliability: Option<T>,
    pub violation_count: usize,
    /// Degenerate solves excluded from all RMSE values.
    pub excluded: usize,
}

impl<T: Scalar> RunMetrics<T> {
    /// `long_term_samples` are the per-unit long-term errors the variance is taken over.
    pub fn compute(
        acc: &RmseAccumulator<T>,
        long_term_samples: &[T],
        trajectory: &Trajectory<T>,
        params: &MetricParams<T>,
    ) -> Self {
        let series = acc.series();
        let rel = reliability(&series, params.beta).ok();
        Self {
            long_term_rmse: acc.rmse_at(trajectory.len()),
            long_term_variance: variance(long_term_samples),
            min_flight_distance: min_flight_distance(&series, trajectory, params.theta),
            reliability: rel.map(|r| r.gamma),
            violation_count: rel.map_or(0, |r| r.violations),
            excluded: acc.invalid_total(),
            rmse_series: series,
        }
    }
}
