use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::channel::ChannelParams;
use crate::error::{Error, Result};
use crate::lls::ReferenceMode;
use crate::metrics::MetricParams;
use crate::scalar::Vec3;
use crate::selection::Algorithm;
use crate::trajectory::Trajectory;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TargetKind {
    Fixed,
    Grid,
}

/// Which linearization references to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModeChoice {
    #[serde(rename = "SRL")]
    Srl,
    #[serde(rename = "DRL")]
    Drl,
    #[serde(rename = "both")]
    Both,
}

impl std::str::FromStr for ModeChoice {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        if s.trim().eq_ignore_ascii_case("both") {
            return Ok(ModeChoice::Both);
        }
        Ok(match s.parse::<ReferenceMode>()? {
            ReferenceMode::Static => ModeChoice::Srl,
            ReferenceMode::Dynamic => ModeChoice::Drl,
        })
    }
}

/// Flat experiment configuration, read from TOML.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub area_side: f64,
    pub spacing: f64,
    pub altitude: f64,
    pub frequency_hz: f64,
    pub bandwidth_hz: f64,
    pub sigma_db: f64,
    pub alpha: f64,
    pub d0: f64,
    pub trials: usize,
    pub seed: u64,
    pub theta: f64,
    pub beta: f64,
    pub algorithms: Vec<Algorithm>,
    /// Defaults to both modes for a fixed target and DRL for a grid.
    pub reference_mode: Option<ModeChoice>,
    pub target: TargetKind,
    pub target_position: [f64; 3],
    pub grid_n: usize,
    /// Record the per-step anchor selection of the first trial of the first target.
    pub trace: bool,
    /// Write per-trial errors; defaults to on for fixed targets and off for grids.
    pub trial_log: Option<bool>,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            area_side: 300.0,
            spacing: 30.0,
            altitude: 50.0,
            frequency_hz: 2.4e9,
            bandwidth_hz: 20e6,
            sigma_db: 3.0,
            alpha: 2.0,
            d0: 1.0,
            trials: 100,
            seed: 1,
            theta: 20.0,
            beta: 1.0,
            algorithms: Algorithm::ALL.to_vec(),
            reference_mode: None,
            target: TargetKind::Fixed,
            target_position: [150.0, 150.0, 0.0],
            grid_n: 11,
            trace: false,
            trial_log: None,
        }
    }
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub sigma_db: Option<f64>,
    pub seed: Option<u64>,
    pub algorithms: Option<Vec<Algorithm>>,
    pub reference_mode: Option<ModeChoice>,
    pub trials: Option<usize>,
    pub trial_log: Option<bool>,
}

impl SimConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: SimConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<(Self, String)> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        Ok((Self::from_toml_str(&text)?, text))
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// The 11×11 target-grid experiment, DRL by default.
    pub fn default_grid() -> Self {
        Self { target: TargetKind::Grid, ..Self::default() }
    }

    pub fn apply(&mut self, o: &Overrides) -> Result<()> {
        if let Some(v) = o.sigma_db {
            self.sigma_db = v;
        }
        if let Some(v) = o.seed {
            self.seed = v;
        }
        if let Some(v) = &o.algorithms {
            self.algorithms = v.clone();
        }
        if let Some(v) = o.reference_mode {
            self.reference_mode = Some(v);
        }
        if let Some(v) = o.trials {
            self.trials = v;
        }
        if let Some(v) = o.trial_log {
            self.trial_log = Some(v);
        }
        self.validate()
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("area_side", self.area_side),
            ("spacing", self.spacing),
            ("altitude", self.altitude),
            ("frequency_hz", self.frequency_hz),
            ("alpha", self.alpha),
            ("d0", self.d0),
            ("theta", self.theta),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        for (name, v) in [("sigma_db", self.sigma_db), ("beta", self.beta), ("bandwidth_hz", self.bandwidth_hz)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::Config(format!("{name} must be non-negative, got {v}")));
            }
        }
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if self.algorithms.is_empty() {
            return Err(Error::Config("algorithms must not be empty".into()));
        }
        if self.target == TargetKind::Grid && self.grid_n < 2 {
            return Err(Error::Config(format!("grid_n must be at least 2, got {}", self.grid_n)));
        }
        if self.target_position.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("target_position must be finite".into()));
        }
        self.trajectory().map_err(|e| Error::Config(e.to_string()))?;
        Ok(())
    }

    pub fn modes(&self) -> Vec<ReferenceMode> {
        let choice = self.reference_mode.unwrap_or(match self.target {
            TargetKind::Fixed => ModeChoice::Both,
            TargetKind::Grid => ModeChoice::Drl,
        });
        match choice {
            ModeChoice::Srl => vec![ReferenceMode::Static],
            ModeChoice::Drl => vec![ReferenceMode::Dynamic],
            ModeChoice::Both => ReferenceMode::ALL.to_vec(),
        }
    }

    pub fn writes_trial_log(&self) -> bool {
        self.trial_log.unwrap_or(self.target == TargetKind::Fixed)
    }

    pub fn trajectory(&self) -> Result<Trajectory<f64>> {
        Trajectory::generate_parallel_track(self.area_side, self.spacing, self.altitude)
    }

    pub fn channel(&self) -> Result<ChannelParams<f64>> {
        ChannelParams::free_space(self.frequency_hz, self.bandwidth_hz, self.d0, self.alpha, self.sigma_db)
    }

    pub fn metric_params(&self) -> Result<MetricParams<f64>> {
        MetricParams::new(self.theta, self.beta)
    }

    /// Target positions in run order.
    pub fn targets(&self) -> Vec<Vec3<f64>> {
        match self.target {
            TargetKind::Fixed => vec![Vec3::from_array(self.target_position)],
            TargetKind::Grid => {
                let step = self.area_side / (self.grid_n - 1) as f64;
                let mut out = Vec::with_capacity(self.grid_n * self.grid_n);
                for iy in 0..self.grid_n {
                    for ix in 0..self.grid_n {
                        out.push(Vec3::new(ix as f64 * step, iy as f64 * step, 0.0));
                    }
                }
                out
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        SimConfig::default().validate().unwrap();
        SimConfig::default_grid().validate().unwrap();
        assert_eq!(SimConfig::default().modes(), ReferenceMode::ALL.to_vec());
        assert_eq!(SimConfig::default_grid().modes(), vec![ReferenceMode::Dynamic]);
    }

    #[test]
    fn parses_flat_toml() {
        let cfg = SimConfig::from_toml_str(
            r#"
            sigma_db = 0.0
            trials = 5
            seed = 99
            algorithms = ["CUM", "CLS"]
            reference_mode = "DRL"
            target = "grid"
            grid_n = 3
            "#,
        )
        .unwrap();
        assert_eq!(cfg.trials, 5);
        assert_eq!(cfg.algorithms, vec![Algorithm::Cum, Algorithm::Cls]);
        assert_eq!(cfg.modes(), vec![ReferenceMode::Dynamic]);
        assert_eq!(cfg.targets().len(), 9);
        assert_eq!(cfg.area_side, 300.0);
    }

    #[test]
    fn rejects_bad_config() {
        assert!(SimConfig::from_toml_str("trials = 0").is_err());
        assert!(SimConfig::from_toml_str("spacing = 35.0").is_err());
        assert!(SimConfig::from_toml_str("bogus_key = 1").is_err());
        assert!(SimConfig::from_toml_str("target = \"grid\"\ngrid_n = 1").is_err());
        assert!(SimConfig::from_toml_str("algorithms = [\"XYZ\"]").is_err());
        assert!(SimConfig::from_toml_str("sigma_db = -1.0").is_err());
    }

    #[test]
    fn grid_targets_cover_corners_and_center() {
        let t = SimConfig::default_grid().targets();
        assert_eq!(t.len(), 121);
        for p in [[0.0, 0.0, 0.0], [150.0, 150.0, 0.0], [300.0, 300.0, 0.0]] {
            assert!(t.contains(&Vec3::from_array(p)));
        }
    }

    #[test]
    fn overrides_take_precedence() {
        let mut cfg = SimConfig::default();
        cfg.apply(&Overrides { sigma_db: Some(0.0), trials: Some(3), reference_mode: Some(ModeChoice::Srl), ..Default::default() })
            .unwrap();
        assert_eq!((cfg.sigma_db, cfg.trials), (0.0, 3));
        assert_eq!(cfg.modes(), vec![ReferenceMode::Static]);
        assert!(cfg.apply(&Overrides { trials: Some(0), ..Default::default() }).is_err());
    }

    #[test]
    fn toml_round_trip() {
        let cfg = SimConfig::default_grid();
        assert_eq!(SimConfig::from_toml_str(&cfg.to_toml_string()).unwrap(), cfg);
    }
}
