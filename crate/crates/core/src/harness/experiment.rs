//! Seeded Monte-Carlo runs over fixed targets and target grids.
//!
//! Each (target, trial) pair owns a ChaCha8 stream derived from the config
//! seed with stream id `target_id * trials + trial`. A trial draws one
//! measurement per waypoint and every algorithm/mode combination reuses it.
//! Trials run in parallel; reduction is always in (target, trial) order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{measure_trajectory, ChannelParams, Measurement};
use crate::error::{Error, Result};
use crate::lls::{localize_set, ReferenceMode};
use crate::metrics::{long_term_cdf, MetricParams, RmseAccumulator, RunMetrics, StepOutcome};
use crate::scalar::Vec3;
use crate::selection::{Algorithm, SelectionPlan, Selector};
use crate::trajectory::Trajectory;

use super::config::{SimConfig, TargetKind};

/// One row of a per-step anchor-selection trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub n_tilde: usize,
    pub algorithm: Algorithm,
    pub mode: ReferenceMode,
    pub upsilon: Vec<usize>,
    pub reference: usize,
    /// `None` when the solve was degenerate.
    pub residual: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgorithmReport {
    pub algorithm: Algorithm,
    pub mode: ReferenceMode,
    pub metrics: RunMetrics<f64>,
    /// Long-term error samples: per-target long-term RMSE on grids, per-trial
    /// final error for a single target.
    pub long_term_samples: Vec<f64>,
    pub cdf: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub version: String,
    pub seed: u64,
    /// The configuration text exactly as supplied.
    pub config_echo: String,
    /// Configuration after defaults and overrides.
    pub config: SimConfig,
    pub targets: Vec<[f64; 3]>,
    pub results: Vec<AlgorithmReport>,
    pub traces: Vec<TraceRow>,
    /// Measurements of the traced trial, when tracing.
    pub traced_measurements: Vec<Measurement<f64>>,
}

impl ExperimentReport {
    pub fn result(&self, algorithm: Algorithm, mode: ReferenceMode) -> Option<&AlgorithmReport> {
        self.results.iter().find(|r| r.algorithm == algorithm && r.mode == mode)
    }
}

/// Receives every trial's outcomes in (target, trial) order.
pub trait TrialSink {
    fn record(&mut self, target_id: usize, trial: usize, combos: &[(Algorithm, ReferenceMode)], outcomes: &[Vec<StepOutcome<f64>>]) -> Result<()>;
}

struct TrialResult {
    outcomes: Vec<Vec<StepOutcome<f64>>>,
    trace: Vec<TraceRow>,
    measurements: Vec<Measurement<f64>>,
}

/// Reusable simulation context for one configuration.
pub struct Simulation {
    config: SimConfig,
    trajectory: Trajectory<f64>,
    channel: ChannelParams<f64>,
    metric_params: MetricParams<f64>,
    plan: SelectionPlan,
    combos: Vec<(Algorithm, ReferenceMode)>,
}

impl Simulation {
    pub fn new(config: SimConfig) -> Result<Self> {
        config.validate()?;
        let trajectory = config.trajectory()?;
        let channel = config.channel().map_err(|e| Error::Config(e.to_string()))?;
        let metric_params = config.metric_params().map_err(|e| Error::Config(e.to_string()))?;
        let plan = SelectionPlan::new(&trajectory)?;
        let mut combos = Vec::new();
        for mode in config.modes() {
            for &alg in &config.algorithms {
                if !combos.contains(&(alg, mode)) {
                    combos.push((alg, mode));
                }
            }
        }
        Ok(Self { config, trajectory, channel, metric_params, plan, combos })
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    pub fn trajectory(&self) -> &Trajectory<f64> {
        &self.trajectory
    }

    pub fn combos(&self) -> &[(Algorithm, ReferenceMode)] {
        &self.combos
    }

    /// Random stream for one (target, trial) pair.
    pub fn rng_for(&self, target_id: usize, trial: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.config.seed);
        rng.set_stream((target_id * self.config.trials + trial) as u64);
        rng
    }

    /// Walks the whole trajectory for every algorithm/mode combination.
    fn run_trial(&self, target: Vec3<f64>, target_id: usize, trial: usize, traced: bool) -> Result<TrialResult> {
        let mut rng = self.rng_for(target_id, trial);
        let measurements = measure_trajectory(target, &self.trajectory, &self.channel, &mut rng)?;
        let n = self.trajectory.len();
        let mut outcomes = Vec::with_capacity(self.combos.len());
        let mut trace = Vec::new();
        for &(alg, mode) in &self.combos {
            let mut selector = Selector::new(alg);
            let mut row = Vec::with_capacity(n);
            for n_tilde in 1..=n {
                let seen = &measurements[..n_tilde];
                let anchors = match selector.select(n_tilde, Some(&self.plan), seen, &self.trajectory, mode) {
                    Ok(a) => a,
                    Err(Error::NotLocalizable { .. }) => {
                        row.push(StepOutcome::NotLocalizable);
                        continue;
                    }
                    Err(e) => return Err(e),
                };
                let est = localize_set(anchors, seen, &self.trajectory, n_tilde);
                if traced {
                    let a = est.anchors.as_ref().expect("set formed");
                    trace.push(TraceRow {
                        n_tilde,
                        algorithm: alg,
                        mode,
                        upsilon: a.upsilon().to_vec(),
                        reference: a.reference(),
                        residual: est.is_valid().then_some(est.residual),
                    });
                }
                row.push(if est.is_valid() {
                    StepOutcome::Error(est.location.distance(target))
                } else {
                    StepOutcome::Invalid
                });
            }
            outcomes.push(row);
        }
        Ok(TrialResult { outcomes, trace, measurements: if traced { measurements } else { Vec::new() } })
    }

    pub fn run(&self, config_echo: &str, mut sink: Option<&mut dyn TrialSink>) -> Result<ExperimentReport> {
        let targets = self.config.targets();
        let n = self.trajectory.len();
        let trials = self.config.trials;
        let mut totals: Vec<RmseAccumulator<f64>> = vec![RmseAccumulator::new(n); self.combos.len()];
        let mut samples: Vec<Vec<f64>> = vec![Vec::new(); self.combos.len()];
        let mut traces = Vec::new();
        let mut traced_measurements = Vec::new();

        for (target_id, &target) in targets.iter().enumerate() {
            let results: Vec<TrialResult> = (0..trials)
                .into_par_iter()
                .map(|trial| self.run_trial(target, target_id, trial, self.config.trace && target_id == 0 && trial == 0))
                .collect::<Result<_>>()?;

            let mut per_target: Vec<RmseAccumulator<f64>> = vec![RmseAccumulator::new(n); self.combos.len()];
            for (trial, res) in results.into_iter().enumerate() {
                if let Some(s) = sink.as_deref_mut() {
                    s.record(target_id, trial, &self.combos, &res.outcomes)?;
                }
                for (c, row) in res.outcomes.iter().enumerate() {
                    per_target[c].push_trial(row);
                    if targets.len() == 1 {
                        if let Some(e) = row[n - 1].error() {
                            samples[c].push(e);
                        }
                    }
                }
                traces.extend(res.trace);
                if !res.measurements.is_empty() {
                    traced_measurements = res.measurements;
                }
            }
            for (c, acc) in per_target.iter().enumerate() {
                if targets.len() > 1 {
                    if let Some(r) = acc.rmse_at(n) {
                        samples[c].push(r);
                    }
                }
                totals[c].merge(acc);
            }
        }

        let results = self
            .combos
            .iter()
            .zip(totals.iter().zip(samples))
            .map(|(&(algorithm, mode), (acc, long_term_samples))| {
                let metrics = RunMetrics::compute(acc, &long_term_samples, &self.trajectory, &self.metric_params);
                let cdf = long_term_cdf(&long_term_samples).unwrap_or_default();
                AlgorithmReport { algorithm, mode, metrics, long_term_samples, cdf }
            })
            .collect();

        Ok(ExperimentReport {
            version: env!("CARGO_PKG_VERSION").to_string(),
            seed: self.config.seed,
            config_echo: config_echo.to_string(),
            config: self.config.clone(),
            targets: targets.iter().map(|t| t.to_array()).collect(),
            results,
            traces,
            traced_measurements,
        })
    }
}

/// Runs whichever experiment the config's target kind selects.
pub fn run_experiment(config: &SimConfig, config_echo: &str, sink: Option<&mut dyn TrialSink>) -> Result<ExperimentReport> {
    Simulation::new(config.clone())?.run(config_echo, sink)
}

/// Fixed-target comparison; rejects grid configs.
pub fn run_fixed_target(config: &SimConfig) -> Result<ExperimentReport> {
    if config.target != TargetKind::Fixed {
        return Err(Error::Config("run_fixed_target needs target = \"fixed\"".into()));
    }
    run_experiment(config, &config.to_toml_string(), None)
}

/// Target-grid averaging; rejects fixed-target configs.
pub fn run_target_grid(config: &SimConfig) -> Result<ExperimentReport> {
    if config.target != TargetKind::Grid {
        return Err(Error::Config("run_target_grid needs target = \"grid\"".into()));
    }
    run_experiment(config, &config.to_toml_string(), None)
}
