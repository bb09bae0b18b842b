//! Simulated one-step pick-and-place environment.
//!
//! Each scene hides a systematic perception bias. The pose estimate handed
//! to the policy carries that bias (plus per-step noise), so the executed
//! pick inherits it: `final = estimate + action + execution noise`. Undoing
//! the observed offset, `action = -(estimate - target)`, drives the final
//! pose onto the target. The synthetic feature vector is a fixed random
//! linear image of the bias, standing in for an image embedding: it encodes
//! the scene's systematic error, which is what the policy must learn to
//! invert.

use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::{compose_pick_pose, reward, rotation_error, translation_error, wrap_angle, PlanarPose};
use crate::grid::{ActionIndex, GridSpec};
use crate::rng::{normal, stream_rng, uniform_symmetric, Stream};
use crate::scalar::Real;

/// Environment parameters. Lengths in meters, angles in radians.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvConfig<T> {
    pub grid: GridSpec<T>,
    pub target: PlanarPose<T>,
    pub sigma_obs_pos: T,
    pub sigma_obs_yaw: T,
    pub sigma_exec_pos: T,
    pub sigma_exec_yaw: T,
    pub sigma_feature: T,
    pub feature_dim: usize,
    pub steps_per_scene: usize,
}

impl<T: Real> EnvConfig<T> {
    pub fn validate(&self) -> Result<()> {
        for (name, sigma) in [
            ("sigma_obs_pos", self.sigma_obs_pos),
            ("sigma_obs_yaw", self.sigma_obs_yaw),
            ("sigma_exec_pos", self.sigma_exec_pos),
            ("sigma_exec_yaw", self.sigma_exec_yaw),
            ("sigma_feature", self.sigma_feature),
        ] {
            if !sigma.is_finite() || sigma < T::zero() {
                return Err(Error::InvalidConfig(format!("{name} must be finite and >= 0")));
            }
        }
        if !self.target.is_finite() {
            return Err(Error::NonFinite("target pose"));
        }
        if self.feature_dim == 0 {
            return Err(Error::InvalidConfig("feature_dim must be >= 1".into()));
        }
        if self.steps_per_scene == 0 {
            return Err(Error::InvalidConfig("steps_per_scene must be >= 1".into()));
        }
        Ok(())
    }
}

/// A scene: shared initial conditions for a group of consecutive steps.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneSpec<T> {
    pub scene_id: u64,
    /// Hidden systematic offset between estimated and true pick pose.
    pub bias: PlanarPose<T>,
    pub target: PlanarPose<T>,
}

/// What the policy sees: the biased pose estimate plus a synthetic feature.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation<T> {
    pub est_pose: PlanarPose<T>,
    pub feature: Vec<T>,
}

/// One executed step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome<T> {
    pub observation: Observation<T>,
    pub action_index: ActionIndex,
    pub final_pose: PlanarPose<T>,
    pub reward: T,
}

/// Environment instance; owns its RNG stream.
#[derive(Debug, Clone)]
pub struct Env<T> {
    cfg: EnvConfig<T>,
    rng: ChaCha8Rng,
    /// feature_dim x 3 map from bias to feature, rows scaled so feature
    /// entries are order one across the bias range. Drawn once per run
    /// seed, so training, pretraining, and evaluation instances of the
    /// same run observe the same encoding.
    feature_matrix: Vec<[T; 3]>,
    next_scene_id: u64,
}

impl<T: Real> Env<T> {
    /// Builds an env whose scene/noise randomness comes from `(seed,
    /// stream)` and whose feature matrix comes from the run seed alone.
    pub fn new(cfg: EnvConfig<T>, seed: u64, stream: Stream) -> Result<Self> {
        cfg.validate()?;
        let half = [
            cfg.grid.x.half_range(),
            cfg.grid.y.half_range(),
            cfg.grid.yaw.half_range(),
        ];
        let mut map_rng = stream_rng(seed, Stream::FeatureMap);
        let feature_matrix = (0..cfg.feature_dim)
            .map(|_| {
                let mut row = [T::zero(); 3];
                for (w, h) in row.iter_mut().zip(half) {
                    let g = normal(&mut map_rng, T::one());
                    *w = if h > T::zero() { g / h } else { g };
                }
                row
            })
            .collect();
        Ok(Self {
            cfg,
            rng: stream_rng(seed, stream),
            feature_matrix,
            next_scene_id: 0,
        })
    }

    pub fn config(&self) -> &EnvConfig<T> {
        &self.cfg
    }

    /// Samples a fresh scene: bias uniform within the grid half-ranges.
    pub fn new_scene(&mut self) -> SceneSpec<T> {
        let bias = PlanarPose::new(
            uniform_symmetric(&mut self.rng, self.cfg.grid.x.half_range()),
            uniform_symmetric(&mut self.rng, self.cfg.grid.y.half_range()),
            uniform_symmetric(&mut self.rng, self.cfg.grid.yaw.half_range()),
        );
        let scene_id = self.next_scene_id;
        self.next_scene_id += 1;
        SceneSpec {
            scene_id,
            bias,
            target: self.cfg.target,
        }
    }

    /// Draws a noisy observation of the scene.
    pub fn observe(&mut self, scene: &SceneSpec<T>) -> Observation<T> {
        let est_pose = PlanarPose::new(
            scene.target.x + scene.bias.x + normal(&mut self.rng, self.cfg.sigma_obs_pos),
            scene.target.y + scene.bias.y + normal(&mut self.rng, self.cfg.sigma_obs_pos),
            wrap_angle(scene.target.psi + scene.bias.psi + normal(&mut self.rng, self.cfg.sigma_obs_yaw)),
        );
        let bias = [scene.bias.x, scene.bias.y, scene.bias.psi];
        let feature = self
            .feature_matrix
            .iter()
            .map(|row| {
                let signal = row[0] * bias[0] + row[1] * bias[1] + row[2] * bias[2];
                signal + normal(&mut self.rng, self.cfg.sigma_feature)
            })
            .collect();
        Observation { est_pose, feature }
    }

    /// Executes the picked adjustment against the observation it was chosen
    /// from and scores the resulting final pose.
    pub fn step(
        &mut self,
        scene: &SceneSpec<T>,
        observation: &Observation<T>,
        action_index: ActionIndex,
    ) -> Result<StepOutcome<T>> {
        let adjustment = self.cfg.grid.value(action_index)?;
        let pick = compose_pick_pose(observation.est_pose, adjustment);
        let final_pose = PlanarPose::new(
            pick.x + normal(&mut self.rng, self.cfg.sigma_exec_pos),
            pick.y + normal(&mut self.rng, self.cfg.sigma_exec_pos),
            wrap_angle(pick.psi + normal(&mut self.rng, self.cfg.sigma_exec_yaw)),
        );
        Ok(StepOutcome {
            observation: observation.clone(),
            action_index,
            final_pose,
            reward: reward(final_pose, scene.target),
        })
    }

    /// The grid triple minimizing the noise-free error terms; earliest index
    /// per axis on ties. Separable because the translation error is monotone
    /// in each squared component and the yaw span stays below a half turn.
    pub fn best_grid_action(&self, scene: &SceneSpec<T>) -> ActionIndex {
        ActionIndex::new(
            self.cfg.grid.x.nearest_index(-scene.bias.x),
            self.cfg.grid.y.nearest_index(-scene.bias.y),
            self.cfg.grid.yaw.nearest_index(-scene.bias.psi),
        )
    }

    /// Noise-free error sum for a hypothetical action, used by tests and
    /// the evaluation oracle.
    pub fn noise_free_error(&self, scene: &SceneSpec<T>, action_index: ActionIndex) -> Result<T> {
        let adjustment = self.cfg.grid.value(action_index)?;
        let est = PlanarPose::new(
            scene.target.x + scene.bias.x,
            scene.target.y + scene.bias.y,
            wrap_angle(scene.target.psi + scene.bias.psi),
        );
        let final_pose = compose_pick_pose(est, adjustment);
        Ok(translation_error(final_pose, scene.target) + rotation_error(final_pose, scene.target))
    }
}
