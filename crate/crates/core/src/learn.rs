//! Training procedures: plain policy-gradient, policy-gradient with a
//! replay buffer, role-model training (online policy-gradient steps with
//! per-scene self-labeling and offline supervised passes), and the
//! pretrained variant.
//!
//! Within a scene, every step shares the hidden initial conditions. The
//! step whose action scored the best reward becomes the scene's role model,
//! and its action indices label all of the scene's observations. Those
//! labels feed a cross-entropy pass right after the scene and periodic
//! replay passes over the whole accumulated dataset.

use std::collections::VecDeque;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::config::RunConfig;
use crate::datasets::{DatasetRecord, Phase};
use crate::env::{Env, Observation, SceneSpec, StepOutcome};
use crate::error::{Error, Result};
use crate::grid::ActionIndex;
use crate::policy::{apply_update, ce_gradient, forward, pg_gradient, sample, PolicyParams};
use crate::rng::{stream_rng, Stream};
use crate::scalar::Real;

/// Training method selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Standard,
    Replay,
    RmRl,
    PretrainedRmRl,
}

impl Method {
    pub const ALL: [Method; 4] = [
        Method::Standard,
        Method::Replay,
        Method::RmRl,
        Method::PretrainedRmRl,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Standard => "standard",
            Method::Replay => "replay",
            Method::RmRl => "rmrl",
            Method::PretrainedRmRl => "pretrained-rmrl",
        }
    }

    /// Whether the run produces a labeled dataset.
    pub fn labels_scenes(self) -> bool {
        matches!(self, Method::RmRl | Method::PretrainedRmRl)
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "standard" => Ok(Method::Standard),
            "replay" => Ok(Method::Replay),
            "rmrl" => Ok(Method::RmRl),
            "pretrained-rmrl" => Ok(Method::PretrainedRmRl),
            other => Err(Error::InvalidConfig(format!(
                "unknown method {other:?} (expected standard, replay, rmrl, pretrained-rmrl)"
            ))),
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One logged step of a scene.
#[derive(Debug, Clone, PartialEq)]
pub struct LoggedStep<T> {
    pub observation: Observation<T>,
    pub action: ActionIndex,
    pub reward: T,
}

/// All steps sharing one scene's initial conditions.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneLog<T> {
    pub scene_id: u64,
    pub steps: Vec<LoggedStep<T>>,
}

/// Observation labeled with its scene's role-model action.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledRecord<T> {
    pub observation: Observation<T>,
    pub label: ActionIndex,
}

/// Action of the step with the highest reward; earliest step on ties.
pub fn select_role_model<T: Real>(log: &SceneLog<T>) -> Result<ActionIndex> {
    let mut best: Option<&LoggedStep<T>> = None;
    for step in &log.steps {
        if best.is_none_or(|b| step.reward > b.reward) {
            best = Some(step);
        }
    }
    best.map(|b| b.action).ok_or(Error::EmptySceneLog)
}

/// Labels every step of the scene (the role-model step included) with the
/// scene's role-model action.
pub fn label_scene<T: Real>(log: &SceneLog<T>) -> Result<Vec<LabeledRecord<T>>> {
    let label = select_role_model(log)?;
    Ok(log
        .steps
        .iter()
        .map(|step| LabeledRecord {
            observation: step.observation.clone(),
            label,
        })
        .collect())
}

/// One online interaction: sample an action from the current policy,
/// execute it, and take a policy-gradient step on the surrogate loss.
pub fn online_step<T: Real, R: Rng + ?Sized>(
    params: &PolicyParams<T>,
    env: &mut Env<T>,
    scene: &SceneSpec<T>,
    rng: &mut R,
    lr: T,
) -> Result<(PolicyParams<T>, StepOutcome<T>)> {
    let obs = env.observe(scene);
    let dist = forward(params, &obs)?;
    let action = sample(&dist, rng);
    let outcome = env.step(scene, &obs, action)?;
    let grad = pg_gradient(params, &obs, action, outcome.reward)?;
    let updated = apply_update(params, &grad, lr)?;
    Ok((updated, outcome))
}

/// Result of an offline pass.
#[derive(Debug, Clone)]
pub struct OfflineOutcome<T> {
    pub params: PolicyParams<T>,
    pub grad_steps: usize,
    /// Mean cross-entropy over the final epoch; `None` when epochs == 0.
    pub final_epoch_mean_loss: Option<T>,
}

/// Minibatch cross-entropy SGD over labeled records with per-epoch
/// shuffling.
pub fn offline_train<T: Real, R: Rng + ?Sized>(
    params: &PolicyParams<T>,
    records: &[LabeledRecord<T>],
    epochs: usize,
    batch_size: usize,
    lr: T,
    rng: &mut R,
) -> Result<OfflineOutcome<T>> {
    if records.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if batch_size == 0 {
        return Err(Error::InvalidConfig("batch size must be >= 1".into()));
    }
    let mut params = params.clone();
    let mut grad_steps = 0;
    let mut final_epoch_mean_loss = None;
    let mut order: Vec<usize> = (0..records.len()).collect();
    for _ in 0..epochs {
        order.shuffle(rng);
        let mut epoch_loss = T::zero();
        for chunk in order.chunks(batch_size) {
            let mut grad_sum = vec![T::zero(); params.values().len()];
            for &i in chunk {
                let record = &records[i];
                let (loss, grad) = ce_gradient(&params, &record.observation, record.label)?;
                epoch_loss += loss;
                for (acc, g) in grad_sum.iter_mut().zip(&grad) {
                    *acc += *g;
                }
            }
            let scale = T::one() / T::of(chunk.len() as f64);
            for g in grad_sum.iter_mut() {
                *g *= scale;
            }
            params = apply_update(&params, &grad_sum, lr)?;
            grad_steps += 1;
        }
        final_epoch_mean_loss = Some(epoch_loss / T::of(records.len() as f64));
    }
    Ok(OfflineOutcome {
        params,
        grad_steps,
        final_epoch_mean_loss,
    })
}

/// Stored transition for the replay-buffer baseline. Rewards are frozen at
/// insertion; replaying them through the surrogate loss reproduces the
/// stale-data mismatch this baseline is meant to exhibit.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplayTransition<T> {
    pub observation: Observation<T>,
    pub action: ActionIndex,
    pub reward: T,
    pub inserted_step: u64,
}

/// Bounded FIFO of past transitions with uniform with-replacement sampling.
#[derive(Debug, Clone)]
pub struct ReplayBuffer<T> {
    transitions: VecDeque<ReplayTransition<T>>,
    capacity: usize,
}

impl<T: Real> ReplayBuffer<T> {
    pub fn new(capacity: usize) -> Self {
        Self {
            transitions: VecDeque::new(),
            capacity,
        }
    }

    pub fn len(&self) -> usize {
        self.transitions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transitions.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &ReplayTransition<T>> {
        self.transitions.iter()
    }

    pub fn push(&mut self, transition: ReplayTransition<T>) {
        if self.capacity == 0 {
            return;
        }
        if self.transitions.len() == self.capacity {
            self.transitions.pop_front();
        }
        self.transitions.push_back(transition);
    }

    /// Uniform sample of `batch` transitions with replacement; when fewer
    /// than `batch` are stored, every stored transition is used once and no
    /// randomness is consumed.
    pub fn sample<R: Rng + ?Sized>(&self, batch: usize, rng: &mut R) -> Vec<&ReplayTransition<T>> {
        if self.transitions.len() <= batch {
            self.transitions.iter().collect()
        } else {
            (0..batch)
                .map(|_| &self.transitions[rng.random_range(0..self.transitions.len())])
                .collect()
        }
    }
}

/// One trace entry: an online environment step.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceStep<T> {
    pub step: u64,
    pub scene_id: u64,
    pub reward: T,
    pub phase: Phase,
}

/// Everything a run produces.
#[derive(Debug, Clone)]
pub struct RunResult<T> {
    pub trace: Vec<TraceStep<T>>,
    pub params: PolicyParams<T>,
    /// Labeled dataset rows (empty for methods that do not label).
    pub dataset: Vec<DatasetRecord>,
    pub offline_scene_grad_steps: usize,
    pub offline_replay_grad_steps: usize,
}

impl<T: Real> RunResult<T> {
    pub fn rewards(&self) -> Vec<T> {
        self.trace.iter().map(|s| s.reward).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Mode {
    Standard,
    Replay,
    RoleModel,
}

fn record_from<T: Real>(
    scene_id: u64,
    step: u64,
    logged: &LoggedStep<T>,
    label: ActionIndex,
) -> DatasetRecord {
    DatasetRecord {
        scene_id,
        step,
        est_pose: [
            logged.observation.est_pose.x.to_f64_lossy(),
            logged.observation.est_pose.y.to_f64_lossy(),
            logged.observation.est_pose.psi.to_f64_lossy(),
        ],
        feature: logged.observation.feature.iter().map(|f| f.to_f64_lossy()).collect(),
        action: logged.action.as_array(),
        reward: logged.reward.to_f64_lossy(),
        label: label.as_array(),
    }
}

fn replay_update<T: Real, R: Rng + ?Sized>(
    params: PolicyParams<T>,
    buffer: &ReplayBuffer<T>,
    batch: usize,
    lr: T,
    rng: &mut R,
) -> Result<PolicyParams<T>> {
    if buffer.is_empty() {
        return Ok(params);
    }
    let picks = buffer.sample(batch, rng);
    let mut grad_sum = vec![T::zero(); params.values().len()];
    for t in &picks {
        let grad = pg_gradient(&params, &t.observation, t.action, t.reward)?;
        for (acc, g) in grad_sum.iter_mut().zip(&grad) {
            *acc += *g;
        }
    }
    let scale = T::one() / T::of(picks.len() as f64);
    for g in grad_sum.iter_mut() {
        *g *= scale;
    }
    apply_update(&params, &grad_sum, lr)
}

fn run_core<T: Real>(
    cfg: &RunConfig,
    seed: u64,
    mode: Mode,
    init: Option<PolicyParams<T>>,
) -> Result<RunResult<T>> {
    cfg.validate()?;
    let arch = cfg.architecture()?;
    let mut env = Env::new(cfg.env_config::<T>()?, seed, Stream::Env)?;
    let mut train_rng = stream_rng(seed, Stream::Train);

    let mut params = match init {
        Some(p) => {
            if p.arch() != &arch {
                return Err(Error::ArchMismatch(format!(
                    "initial params {:?}, run {:?}",
                    p.arch(),
                    arch
                )));
            }
            p
        }
        None => PolicyParams::init_uniform(
            arch,
            T::of(cfg.policy.init_range),
            &mut stream_rng(seed, Stream::PolicyInit),
        )?,
    };

    let schedule = &cfg.schedule;
    let steps_per_scene = cfg.env.steps_per_scene;
    let lr_online = T::of(schedule.lr_online);
    let lr_offline = T::of(schedule.lr_offline);

    let mut trace = Vec::with_capacity(schedule.total_scenes * steps_per_scene);
    let mut dataset = Vec::new();
    let mut all_labeled: Vec<LabeledRecord<T>> = Vec::new();
    let mut buffer = ReplayBuffer::new(schedule.buffer_capacity);
    let mut offline_scene_grad_steps = 0;
    let mut offline_replay_grad_steps = 0;
    let mut global_step: u64 = 0;

    for scene_number in 1..=schedule.total_scenes {
        let scene = env.new_scene();
        let mut log = SceneLog {
            scene_id: scene.scene_id,
            steps: Vec::with_capacity(steps_per_scene),
        };
        let first_step = global_step + 1;

        for _ in 0..steps_per_scene {
            global_step += 1;
            let (updated, outcome) = online_step(&params, &mut env, &scene, &mut train_rng, lr_online)?;
            params = updated;
            trace.push(TraceStep {
                step: global_step,
                scene_id: scene.scene_id,
                reward: outcome.reward,
                phase: Phase::Online,
            });
            match mode {
                Mode::Replay => {
                    // Replay strictly stale data: update first, insert after.
                    params = replay_update(params, &buffer, schedule.replay_batch, lr_online, &mut train_rng)?;
                    buffer.push(ReplayTransition {
                        observation: outcome.observation,
                        action: outcome.action_index,
                        reward: outcome.reward,
                        inserted_step: global_step,
                    });
                }
                Mode::RoleModel => {
                    log.steps.push(LoggedStep {
                        observation: outcome.observation,
                        action: outcome.action_index,
                        reward: outcome.reward,
                    });
                }
                Mode::Standard => {}
            }
        }

        if mode == Mode::RoleModel {
            let scene_records = label_scene(&log)?;
            let label = scene_records[0].label;
            for (i, logged) in log.steps.iter().enumerate() {
                dataset.push(record_from(scene.scene_id, first_step + i as u64, logged, label));
            }

            let outcome = offline_train(
                &params,
                &scene_records,
                schedule.scene_epochs,
                schedule.batch_size,
                lr_offline,
                &mut train_rng,
            )?;
            params = outcome.params;
            offline_scene_grad_steps += outcome.grad_steps;
            all_labeled.extend(scene_records);

            if scene_number % schedule.replay_interval == 0 {
                let outcome = offline_train(
                    &params,
                    &all_labeled,
                    schedule.replay_epochs,
                    schedule.batch_size,
                    lr_offline,
                    &mut train_rng,
                )?;
                params = outcome.params;
                offline_replay_grad_steps += outcome.grad_steps;
            }
        }
    }

    Ok(RunResult {
        trace,
        params,
        dataset,
        offline_scene_grad_steps,
        offline_replay_grad_steps,
    })
}

/// Plain policy-gradient training.
pub fn run_standard_rl<T: Real>(cfg: &RunConfig, seed: u64) -> Result<RunResult<T>> {
    run_core(cfg, seed, Mode::Standard, None)
}

/// Policy-gradient training plus per-step replay of stored transitions
/// through the surrogate loss, with their stale rewards.
pub fn run_replay_buffer_rl<T: Real>(cfg: &RunConfig, seed: u64) -> Result<RunResult<T>> {
    run_core(cfg, seed, Mode::Replay, None)
}

/// Role-model training from a fresh initialization.
pub fn run_rm_rl<T: Real>(cfg: &RunConfig, seed: u64) -> Result<RunResult<T>> {
    run_core(cfg, seed, Mode::RoleModel, None)
}

/// Role-model training from the given initial parameters.
pub fn run_rm_rl_from<T: Real>(cfg: &RunConfig, seed: u64, init: PolicyParams<T>) -> Result<RunResult<T>> {
    run_core(cfg, seed, Mode::RoleModel, Some(init))
}

/// Output of the pretraining stage.
#[derive(Debug, Clone)]
pub struct PretrainOutcome<T> {
    pub params: PolicyParams<T>,
    pub dataset: Vec<DatasetRecord>,
}

/// Generates role-model-labeled records from scripted scenes, then trains a
/// fresh policy on them. The script plays the noise-free best grid action
/// jittered by up to one grid step per axis, mimicking data collected by a
/// previously tuned loop; the per-scene role-model pass then picks the best
/// of those, so labels are the oracle action up to role-model noise.
pub fn pretrain<T: Real>(cfg: &RunConfig, seed: u64) -> Result<PretrainOutcome<T>> {
    pretrain_with(cfg, seed, cfg.pretrain.samples)
}

pub fn pretrain_with<T: Real>(cfg: &RunConfig, seed: u64, n_samples: usize) -> Result<PretrainOutcome<T>> {
    cfg.validate()?;
    if n_samples == 0 {
        return Err(Error::EmptyDataset);
    }
    let arch = cfg.architecture()?;
    let mut env = Env::new(cfg.env_config::<T>()?, seed, Stream::PretrainEnv)?;
    let mut rng = stream_rng(seed, Stream::PretrainTrain);
    let sizes = env.config().grid.head_sizes();
    let jitter = |center: usize, len: usize, rng: &mut ChaCha8Rng| -> usize {
        let lo = center.saturating_sub(1);
        let hi = (center + 1).min(len - 1);
        rng.random_range(lo..=hi)
    };

    let mut dataset = Vec::with_capacity(n_samples);
    let mut labeled = Vec::with_capacity(n_samples);
    let mut produced = 0usize;
    let mut step: u64 = 0;
    while produced < n_samples {
        let scene = env.new_scene();
        let best = env.best_grid_action(&scene);
        let take = cfg.env.steps_per_scene.min(n_samples - produced);
        let mut log = SceneLog {
            scene_id: scene.scene_id,
            steps: Vec::with_capacity(take),
        };
        for _ in 0..take {
            step += 1;
            let obs = env.observe(&scene);
            let action = ActionIndex::new(
                jitter(best.x, sizes[0], &mut rng),
                jitter(best.y, sizes[1], &mut rng),
                jitter(best.yaw, sizes[2], &mut rng),
            );
            let outcome = env.step(&scene, &obs, action)?;
            log.steps.push(LoggedStep {
                observation: outcome.observation,
                action: outcome.action_index,
                reward: outcome.reward,
            });
        }
        let scene_records = label_scene(&log)?;
        let label = scene_records[0].label;
        let first_step = step - take as u64 + 1;
        for (i, logged) in log.steps.iter().enumerate() {
            dataset.push(record_from(scene.scene_id, first_step + i as u64, logged, label));
        }
        labeled.extend(scene_records);
        produced += take;
    }

    let init = PolicyParams::init_uniform(
        arch,
        T::of(cfg.policy.init_range),
        &mut stream_rng(seed, Stream::PolicyInit),
    )?;
    let params = if cfg.pretrain.epochs == 0 {
        init
    } else {
        offline_train(
            &init,
            &labeled,
            cfg.pretrain.epochs,
            cfg.schedule.batch_size,
            T::of(cfg.schedule.lr_offline),
            &mut rng,
        )?
        .params
    };
    Ok(PretrainOutcome { params, dataset })
}

/// Runs the named method end to end.
pub fn run_method<T: Real>(cfg: &RunConfig, seed: u64, method: Method) -> Result<RunResult<T>> {
    run_method_with_init(cfg, seed, method, None)
}

/// Like [`run_method`], starting from the given parameters when provided.
/// For the pretrained variant an explicit initialization replaces the
/// built-in pretraining stage.
pub fn run_method_with_init<T: Real>(
    cfg: &RunConfig,
    seed: u64,
    method: Method,
    init: Option<PolicyParams<T>>,
) -> Result<RunResult<T>> {
    match method {
        Method::Standard => run_core(cfg, seed, Mode::Standard, init),
        Method::Replay => run_core(cfg, seed, Mode::Replay, init),
        Method::RmRl => run_core(cfg, seed, Mode::RoleModel, init),
        Method::PretrainedRmRl => {
            let init = match init {
                Some(params) => params,
                None => pretrain::<T>(cfg, seed)?.params,
            };
            run_core(cfg, seed, Mode::RoleModel, Some(init))
        }
    }
}
