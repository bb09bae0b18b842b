//! Run configuration: one JSON file drives environment, policy, schedule,
//! and metric settings. Every field has a default; unknown keys are
//! rejected. Lengths are given in millimeters and angles in degrees here
//! (the human-facing boundary); everything is converted to meters/radians
//! internally.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::env::EnvConfig;
use crate::error::{Error, Result};
use crate::geometry::PlanarPose;
use crate::grid::{AxisGrid, GridSpec};
use crate::metrics::SuccessThresholds;
use crate::policy::{Activation, PolicyArchitecture};
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    pub xy_half_range_mm: f64,
    pub xy_step_mm: f64,
    pub yaw_half_range_deg: f64,
    pub yaw_step_deg: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            xy_half_range_mm: 10.0,
            xy_step_mm: 2.0,
            yaw_half_range_deg: 4.0,
            yaw_step_deg: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TargetConfig {
    pub x_mm: f64,
    pub y_mm: f64,
    pub yaw_deg: f64,
}

impl Default for TargetConfig {
    fn default() -> Self {
        Self { x_mm: 0.0, y_mm: 0.0, yaw_deg: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseConfig {
    pub obs_pos_mm: f64,
    pub obs_yaw_deg: f64,
    pub exec_pos_mm: f64,
    pub exec_yaw_deg: f64,
    pub feature: f64,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self {
            obs_pos_mm: 0.5,
            obs_yaw_deg: 0.2,
            exec_pos_mm: 0.5,
            exec_yaw_deg: 0.2,
            feature: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnvSection {
    pub grid: GridConfig,
    pub target: TargetConfig,
    pub noise: NoiseConfig,
    pub feature_dim: usize,
    pub steps_per_scene: usize,
}

impl Default for EnvSection {
    fn default() -> Self {
        Self {
            grid: GridConfig::default(),
            target: TargetConfig::default(),
            noise: NoiseConfig::default(),
            feature_dim: 16,
            steps_per_scene: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PolicySection {
    pub hidden_dims: Vec<usize>,
    pub activation: Activation,
    pub init_range: f64,
}

impl Default for PolicySection {
    fn default() -> Self {
        Self {
            hidden_dims: vec![64, 64],
            activation: Activation::Tanh,
            init_range: 0.3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScheduleSection {
    pub total_scenes: usize,
    /// Offline epochs over each scene's fresh labels.
    pub scene_epochs: usize,
    /// Run a replay pass over the whole dataset every this many scenes.
    pub replay_interval: usize,
    pub replay_epochs: usize,
    pub batch_size: usize,
    pub lr_online: f64,
    pub lr_offline: f64,
    /// Replay-buffer baseline capacity (transitions).
    pub buffer_capacity: usize,
    /// Transitions replayed per online step in the replay-buffer baseline.
    pub replay_batch: usize,
}

impl Default for ScheduleSection {
    fn default() -> Self {
        Self {
            total_scenes: 60,
            scene_epochs: 3,
            replay_interval: 5,
            replay_epochs: 2,
            batch_size: 16,
            lr_online: 0.01,
            lr_offline: 0.1,
            buffer_capacity: 512,
            replay_batch: 16,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PretrainSection {
    pub samples: usize,
    pub epochs: usize,
}

impl Default for PretrainSection {
    fn default() -> Self {
        Self { samples: 200, epochs: 100 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MetricsSection {
    /// Reward threshold for the tenth-exceedance step metric. Sits just
    /// below the converged plateau of the simulated task.
    pub tau: f64,
    pub ema_alpha: f64,
    pub success_trans_mm: f64,
    pub success_rot_deg: f64,
    pub eval_scenes: usize,
}

impl Default for MetricsSection {
    fn default() -> Self {
        Self {
            tau: 0.997,
            ema_alpha: 0.1,
            success_trans_mm: 3.0,
            success_rot_deg: 1.0,
            eval_scenes: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub seed: u64,
    pub out_dir: String,
    pub env: EnvSection,
    pub policy: PolicySection,
    pub schedule: ScheduleSection,
    pub pretrain: PretrainSection,
    pub metrics: MetricsSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            out_dir: "out".into(),
            env: EnvSection::default(),
            policy: PolicySection::default(),
            schedule: ScheduleSection::default(),
            pretrain: PretrainSection::default(),
            metrics: MetricsSection::default(),
        }
    }
}

const MM: f64 = 1e-3;

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let config: RunConfig =
            serde_json::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_json_pretty(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("config serializes");
        s.push('\n');
        s
    }

    pub fn validate(&self) -> Result<()> {
        let g = &self.env.grid;
        for (name, v) in [
            ("env.grid.xy_half_range_mm", g.xy_half_range_mm),
            ("env.grid.yaw_half_range_deg", g.yaw_half_range_deg),
        ] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidConfig(format!("{name} must be finite and >= 0")));
            }
        }
        for (name, v) in [
            ("env.grid.xy_step_mm", g.xy_step_mm),
            ("env.grid.yaw_step_deg", g.yaw_step_deg),
        ] {
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::InvalidConfig(format!("{name} must be finite and > 0")));
            }
        }
        let n = &self.env.noise;
        for (name, v) in [
            ("env.noise.obs_pos_mm", n.obs_pos_mm),
            ("env.noise.obs_yaw_deg", n.obs_yaw_deg),
            ("env.noise.exec_pos_mm", n.exec_pos_mm),
            ("env.noise.exec_yaw_deg", n.exec_yaw_deg),
            ("env.noise.feature", n.feature),
        ] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidConfig(format!("{name} must be finite and >= 0")));
            }
        }
        if self.env.feature_dim == 0 {
            return Err(Error::InvalidConfig("env.feature_dim must be >= 1".into()));
        }
        if self.env.steps_per_scene == 0 {
            return Err(Error::InvalidConfig("env.steps_per_scene must be >= 1".into()));
        }
        if self.policy.hidden_dims.contains(&0) {
            return Err(Error::InvalidConfig("policy.hidden_dims entries must be >= 1".into()));
        }
        if !self.policy.init_range.is_finite() || self.policy.init_range <= 0.0 {
            return Err(Error::InvalidConfig("policy.init_range must be finite and > 0".into()));
        }
        let s = &self.schedule;
        for (name, v) in [
            ("schedule.total_scenes", s.total_scenes),
            ("schedule.scene_epochs", s.scene_epochs),
            ("schedule.replay_interval", s.replay_interval),
            ("schedule.replay_epochs", s.replay_epochs),
            ("schedule.batch_size", s.batch_size),
            ("schedule.replay_batch", s.replay_batch),
        ] {
            if v == 0 {
                return Err(Error::InvalidConfig(format!("{name} must be >= 1")));
            }
        }
        if s.replay_interval > s.total_scenes {
            return Err(Error::InvalidConfig(
                "schedule.replay_interval must not exceed schedule.total_scenes".into(),
            ));
        }
        for (name, v) in [("schedule.lr_online", s.lr_online), ("schedule.lr_offline", s.lr_offline)] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidConfig(format!("{name} must be finite and >= 0")));
            }
        }
        if self.pretrain.samples == 0 {
            return Err(Error::InvalidConfig("pretrain.samples must be >= 1".into()));
        }
        let m = &self.metrics;
        if !(m.tau > 0.0 && m.tau < 1.0) {
            return Err(Error::InvalidConfig("metrics.tau must lie in (0, 1)".into()));
        }
        if !(m.ema_alpha > 0.0 && m.ema_alpha <= 1.0) {
            return Err(Error::InvalidConfig("metrics.ema_alpha must lie in (0, 1]".into()));
        }
        for (name, v) in [
            ("metrics.success_trans_mm", m.success_trans_mm),
            ("metrics.success_rot_deg", m.success_rot_deg),
        ] {
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::InvalidConfig(format!("{name} must be finite and > 0")));
            }
        }
        if m.eval_scenes == 0 {
            return Err(Error::InvalidConfig("metrics.eval_scenes must be >= 1".into()));
        }
        Ok(())
    }

    pub fn grid_spec<T: Real>(&self) -> Result<GridSpec<T>> {
        let g = &self.env.grid;
        Ok(GridSpec::new(
            AxisGrid::symmetric(T::of(g.xy_half_range_mm * MM), T::of(g.xy_step_mm * MM))?,
            AxisGrid::symmetric(T::of(g.xy_half_range_mm * MM), T::of(g.xy_step_mm * MM))?,
            AxisGrid::symmetric(
                T::of(g.yaw_half_range_deg.to_radians()),
                T::of(g.yaw_step_deg.to_radians()),
            )?,
        ))
    }

    pub fn env_config<T: Real>(&self) -> Result<EnvConfig<T>> {
        let t = &self.env.target;
        let n = &self.env.noise;
        Ok(EnvConfig {
            grid: self.grid_spec()?,
            target: PlanarPose::new(
                T::of(t.x_mm * MM),
                T::of(t.y_mm * MM),
                T::of(t.yaw_deg.to_radians()),
            ),
            sigma_obs_pos: T::of(n.obs_pos_mm * MM),
            sigma_obs_yaw: T::of(n.obs_yaw_deg.to_radians()),
            sigma_exec_pos: T::of(n.exec_pos_mm * MM),
            sigma_exec_yaw: T::of(n.exec_yaw_deg.to_radians()),
            sigma_feature: T::of(n.feature),
            feature_dim: self.env.feature_dim,
            steps_per_scene: self.env.steps_per_scene,
        })
    }

    pub fn architecture(&self) -> Result<PolicyArchitecture> {
        let grid: GridSpec<f64> = self.grid_spec()?;
        let arch = PolicyArchitecture {
            input_dim: 3 + self.env.feature_dim,
            hidden_dims: self.policy.hidden_dims.clone(),
            head_sizes: grid.head_sizes(),
            activation: self.policy.activation,
        };
        arch.validate()?;
        Ok(arch)
    }

    pub fn success_thresholds<T: Real>(&self) -> SuccessThresholds<T> {
        SuccessThresholds {
            trans_mm: T::of(self.metrics.success_trans_mm),
            rot_deg: T::of(self.metrics.success_rot_deg),
        }
    }
}
