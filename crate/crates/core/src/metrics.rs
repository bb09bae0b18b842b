//! Run evaluation: the tenth-exceedance convergence step, reward averages,
//! EMA smoothing, and greedy-policy evaluation with millimeter/degree error
//! reporting.

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::env::{Env, Observation, SceneSpec};
use crate::error::Result;
use crate::geometry::{translation_error, wrap_angle};
use crate::grid::ActionIndex;
use crate::policy::{forward, greedy, PolicyParams};
use crate::scalar::Real;

/// Step at which a reward trace exceeded the threshold for the tenth time.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TTau {
    Reached(usize),
    NotReached,
}

impl TTau {
    pub fn is_reached(self) -> bool {
        matches!(self, TTau::Reached(_))
    }
}

impl PartialOrd for TTau {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for TTau {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        match (self, other) {
            (TTau::Reached(a), TTau::Reached(b)) => a.cmp(b),
            (TTau::Reached(_), TTau::NotReached) => std::cmp::Ordering::Less,
            (TTau::NotReached, TTau::Reached(_)) => std::cmp::Ordering::Greater,
            (TTau::NotReached, TTau::NotReached) => std::cmp::Ordering::Equal,
        }
    }
}

impl Serialize for TTau {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            TTau::Reached(t) => serializer.serialize_u64(*t as u64),
            TTau::NotReached => serializer.serialize_str("not-reached"),
        }
    }
}

impl<'de> Deserialize<'de> for TTau {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(u64),
            Text(String),
        }
        match Raw::deserialize(deserializer)? {
            Raw::Num(t) => Ok(TTau::Reached(t as usize)),
            Raw::Text(s) if s == "not-reached" => Ok(TTau::NotReached),
            Raw::Text(s) => Err(D::Error::custom(format!("invalid t_tau_10 value: {s}"))),
        }
    }
}

impl std::fmt::Display for TTau {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            TTau::Reached(t) => write!(f, "{t}"),
            TTau::NotReached => write!(f, "not-reached"),
        }
    }
}

/// Smallest 1-based step index by which the trace has strictly exceeded
/// `tau` ten times; `NotReached` if it never accumulates ten exceedances.
pub fn t_tau_10<T: Real>(trace: &[T], tau: T) -> TTau {
    let mut count = 0;
    for (i, &r) in trace.iter().enumerate() {
        if r > tau {
            count += 1;
            if count == 10 {
                return TTau::Reached(i + 1);
            }
        }
    }
    TTau::NotReached
}

/// Exponential moving average with `s_0 = r_0`.
pub fn ema<T: Real>(trace: &[T], alpha: T) -> Vec<T> {
    let mut out = Vec::with_capacity(trace.len());
    let mut state = T::zero();
    for (i, &r) in trace.iter().enumerate() {
        state = if i == 0 { r } else { alpha * r + (T::one() - alpha) * state };
        out.push(state);
    }
    out
}

/// Arithmetic mean and population standard deviation.
pub fn summarize<T: Real>(trace: &[T]) -> (T, T) {
    assert!(!trace.is_empty(), "summarize requires a nonempty trace");
    let n = T::of(trace.len() as f64);
    let mean = trace.iter().copied().sum::<T>() / n;
    let var = trace
        .iter()
        .map(|&r| (r - mean) * (r - mean))
        .sum::<T>()
        / n;
    (mean, var.sqrt())
}

/// Success tolerances at the reporting boundary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SuccessThresholds<T> {
    pub trans_mm: T,
    pub rot_deg: T,
}

/// Greedy-evaluation summary over fresh scenes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalSummary<T> {
    pub mean_reward: T,
    pub std_reward: T,
    pub e_trans_mm: T,
    pub e_rot_deg: T,
    pub success_rate: T,
}

/// Evaluates an arbitrary action chooser over `n_scenes` fresh scenes.
pub fn evaluate_with<T: Real, F>(
    env: &mut Env<T>,
    n_scenes: usize,
    thresholds: SuccessThresholds<T>,
    mut choose: F,
) -> Result<EvalSummary<T>>
where
    F: FnMut(&SceneSpec<T>, &Observation<T>) -> Result<ActionIndex>,
{
    assert!(n_scenes >= 1, "evaluation needs at least one scene");
    let mm = T::of(1e3);
    let mut rewards = Vec::with_capacity(n_scenes);
    let mut trans_sum = T::zero();
    let mut rot_sum = T::zero();
    let mut successes = 0usize;
    for _ in 0..n_scenes {
        let scene = env.new_scene();
        let obs = env.observe(&scene);
        let action = choose(&scene, &obs)?;
        let out = env.step(&scene, &obs, action)?;
        rewards.push(out.reward);
        let e_trans_mm = translation_error(out.final_pose, scene.target) * mm;
        let e_rot_deg = wrap_angle(out.final_pose.psi - scene.target.psi).abs().to_degrees();
        trans_sum += e_trans_mm;
        rot_sum += e_rot_deg;
        if e_trans_mm <= thresholds.trans_mm && e_rot_deg <= thresholds.rot_deg {
            successes += 1;
        }
    }
    let (mean_reward, std_reward) = summarize(&rewards);
    let n = T::of(n_scenes as f64);
    Ok(EvalSummary {
        mean_reward,
        std_reward,
        e_trans_mm: trans_sum / n,
        e_rot_deg: rot_sum / n,
        success_rate: T::of(successes as f64) / n,
    })
}

/// Evaluates a policy greedily (argmax per head) over fresh scenes.
pub fn evaluate_policy<T: Real>(
    params: &PolicyParams<T>,
    env: &mut Env<T>,
    n_scenes: usize,
    thresholds: SuccessThresholds<T>,
) -> Result<EvalSummary<T>> {
    evaluate_with(env, n_scenes, thresholds, |_, obs| {
        Ok(greedy(&forward(params, obs)?))
    })
}

/// Full per-run report: training-trace metrics plus greedy evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub t_tau_10: TTau,
    pub avg_reward: f64,
    pub std_reward: f64,
    pub e_trans_mm: f64,
    pub e_rot_deg: f64,
    pub success_rate: f64,
}

impl MetricReport {
    pub fn from_parts<T: Real>(trace: &[T], tau: T, eval: &EvalSummary<T>) -> Self {
        let (avg, std) = summarize(trace);
        Self {
            t_tau_10: t_tau_10(trace, tau),
            avg_reward: avg.to_f64_lossy(),
            std_reward: std.to_f64_lossy(),
            e_trans_mm: eval.e_trans_mm.to_f64_lossy(),
            e_rot_deg: eval.e_rot_deg.to_f64_lossy(),
            success_rate: eval.success_rate.to_f64_lossy(),
        }
    }
}

/// Median of f64 samples: mean of the two middle order statistics.
pub fn median_f64(values: &[f64]) -> f64 {
    assert!(!values.is_empty());
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

/// Median convergence step: the lower middle order statistic, with
/// `NotReached` sorting greater than every reached value.
pub fn median_t_tau(values: &[TTau]) -> TTau {
    assert!(!values.is_empty());
    let mut sorted = values.to_vec();
    sorted.sort();
    sorted[(sorted.len() - 1) / 2]
}
