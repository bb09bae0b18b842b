//! Stochastic adjustment policy: an MLP trunk feeding three independent
//! categorical heads over the x/y/yaw grids, with forward evaluation,
//! sampling, log-probabilities, and analytic gradients.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::env::Observation;
use crate::error::{Error, Result};
use crate::grid::ActionIndex;
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Tanh,
    Relu,
}

impl Activation {
    fn apply<T: Real>(self, z: T) -> T {
        match self {
            Activation::Tanh => z.tanh(),
            Activation::Relu => z.max(T::zero()),
        }
    }

    /// Derivative expressed through the activation output.
    fn derivative_from_output<T: Real>(self, a: T) -> T {
        match self {
            Activation::Tanh => T::one() - a * a,
            Activation::Relu => {
                if a > T::zero() {
                    T::one()
                } else {
                    T::zero()
                }
            }
        }
    }
}

/// Shape of the policy network.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolicyArchitecture {
    pub input_dim: usize,
    pub hidden_dims: Vec<usize>,
    pub head_sizes: [usize; 3],
    pub activation: Activation,
}

impl PolicyArchitecture {
    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 {
            return Err(Error::InvalidConfig("input_dim must be >= 1".into()));
        }
        if self.hidden_dims.contains(&0) {
            return Err(Error::InvalidConfig("hidden dims must be >= 1".into()));
        }
        if self.head_sizes.contains(&0) {
            return Err(Error::InvalidConfig("head sizes must be >= 1".into()));
        }
        Ok(())
    }

    fn trunk_dims(&self) -> Vec<usize> {
        let mut dims = Vec::with_capacity(self.hidden_dims.len() + 1);
        dims.push(self.input_dim);
        dims.extend_from_slice(&self.hidden_dims);
        dims
    }

    fn trunk_out_dim(&self) -> usize {
        *self.trunk_dims().last().unwrap()
    }

    pub fn param_count(&self) -> usize {
        let dims = self.trunk_dims();
        let trunk: usize = dims.windows(2).map(|w| w[1] * (w[0] + 1)).sum();
        let last = self.trunk_out_dim();
        let heads: usize = self.head_sizes.iter().map(|&n| n * (last + 1)).sum();
        trunk + heads
    }
}

/// Flat parameter vector paired with its architecture.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyParams<T> {
    arch: PolicyArchitecture,
    values: Vec<T>,
}

impl<T: Real> PolicyParams<T> {
    pub fn from_values(arch: PolicyArchitecture, values: Vec<T>) -> Result<Self> {
        arch.validate()?;
        if values.len() != arch.param_count() {
            return Err(Error::DimensionMismatch {
                expected: arch.param_count(),
                got: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("policy parameter"));
        }
        Ok(Self { arch, values })
    }

    /// Uniform init in [-range, range].
    pub fn init_uniform<R: Rng + ?Sized>(arch: PolicyArchitecture, range: T, rng: &mut R) -> Result<Self> {
        arch.validate()?;
        let n = arch.param_count();
        let values = (0..n)
            .map(|_| range * T::of(2.0 * rng.random::<f64>() - 1.0))
            .collect();
        Ok(Self { arch, values })
    }

    pub fn arch(&self) -> &PolicyArchitecture {
        &self.arch
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }
}

/// Per-head probabilities with their log-space counterparts.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionDistribution<T> {
    probs: [Vec<T>; 3],
    log_probs: [Vec<T>; 3],
}

impl<T: Real> ActionDistribution<T> {
    fn from_logits(logits: [Vec<T>; 3]) -> Self {
        let mut probs: [Vec<T>; 3] = [Vec::new(), Vec::new(), Vec::new()];
        let mut log_probs: [Vec<T>; 3] = [Vec::new(), Vec::new(), Vec::new()];
        for (h, head_logits) in logits.into_iter().enumerate() {
            let max = head_logits
                .iter()
                .fold(T::neg_infinity(), |acc, &v| acc.max(v));
            let sum_exp: T = head_logits.iter().map(|&v| (v - max).exp()).sum();
            let log_z = max + sum_exp.ln();
            log_probs[h] = head_logits.iter().map(|&v| v - log_z).collect();
            probs[h] = log_probs[h].iter().map(|&lp| lp.exp()).collect();
        }
        Self { probs, log_probs }
    }

    pub fn probs(&self) -> &[Vec<T>; 3] {
        &self.probs
    }

    pub fn log_probs(&self) -> &[Vec<T>; 3] {
        &self.log_probs
    }

    fn check_index(&self, a: ActionIndex) -> Result<()> {
        for (axis, (&idx, head)) in ["x", "y", "yaw"]
            .iter()
            .zip(a.as_array().iter().zip(&self.probs))
            .map(|(axis, rest)| (*axis, rest))
        {
            if idx >= head.len() {
                return Err(Error::IndexOutOfRange {
                    axis,
                    index: idx,
                    len: head.len(),
                });
            }
        }
        Ok(())
    }
}

fn input_vector<T: Real>(arch: &PolicyArchitecture, obs: &Observation<T>) -> Result<Vec<T>> {
    let got = 3 + obs.feature.len();
    if got != arch.input_dim {
        return Err(Error::DimensionMismatch {
            expected: arch.input_dim,
            got,
        });
    }
    let mut input = Vec::with_capacity(got);
    input.push(obs.est_pose.x);
    input.push(obs.est_pose.y);
    input.push(obs.est_pose.psi);
    input.extend_from_slice(&obs.feature);
    Ok(input)
}

/// Parameter slice offsets for one architecture.
struct Layout {
    trunk: Vec<(std::ops::Range<usize>, std::ops::Range<usize>)>,
    heads: [(std::ops::Range<usize>, std::ops::Range<usize>); 3],
}

impl Layout {
    fn of(arch: &PolicyArchitecture) -> Self {
        let dims = arch.trunk_dims();
        let mut offset = 0;
        let mut trunk = Vec::with_capacity(dims.len() - 1);
        for w in dims.windows(2) {
            let (n_in, n_out) = (w[0], w[1]);
            let weights = offset..offset + n_out * n_in;
            offset = weights.end;
            let biases = offset..offset + n_out;
            offset = biases.end;
            trunk.push((weights, biases));
        }
        let last = *dims.last().unwrap();
        let heads = std::array::from_fn(|h| {
            let n_out = arch.head_sizes[h];
            let weights = offset..offset + n_out * last;
            offset = weights.end;
            let biases = offset..offset + n_out;
            offset = biases.end;
            (weights, biases)
        });
        Self { trunk, heads }
    }
}

fn affine<T: Real>(weights: &[T], biases: &[T], input: &[T]) -> Vec<T> {
    let n_in = input.len();
    biases
        .iter()
        .enumerate()
        .map(|(j, &b)| {
            let row = &weights[j * n_in..(j + 1) * n_in];
            row.iter().zip(input).fold(b, |acc, (&w, &x)| acc + w * x)
        })
        .collect()
}

struct ForwardPass<T> {
    /// Input followed by each trunk layer's post-activation output.
    activations: Vec<Vec<T>>,
    logits: [Vec<T>; 3],
}

fn forward_pass<T: Real>(params: &PolicyParams<T>, input: Vec<T>) -> ForwardPass<T> {
    let layout = Layout::of(&params.arch);
    let values = &params.values;
    let mut activations = Vec::with_capacity(layout.trunk.len() + 1);
    activations.push(input);
    for (weights, biases) in &layout.trunk {
        let z = affine(
            &values[weights.clone()],
            &values[biases.clone()],
            activations.last().unwrap(),
        );
        activations.push(z.into_iter().map(|v| params.arch.activation.apply(v)).collect());
    }
    let trunk_out = activations.last().unwrap();
    let logits = std::array::from_fn(|h| {
        let (weights, biases) = &layout.heads[h];
        affine(&values[weights.clone()], &values[biases.clone()], trunk_out)
    });
    ForwardPass { activations, logits }
}

/// Evaluates the policy on an observation.
pub fn forward<T: Real>(params: &PolicyParams<T>, obs: &Observation<T>) -> Result<ActionDistribution<T>> {
    let input = input_vector(&params.arch, obs)?;
    Ok(ActionDistribution::from_logits(forward_pass(params, input).logits))
}

/// Samples one index per head by inverse CDF.
pub fn sample<T: Real, R: Rng + ?Sized>(dist: &ActionDistribution<T>, rng: &mut R) -> ActionIndex {
    let mut draw = |head: &[T]| -> usize {
        let u: f64 = rng.random();
        let mut cum = 0.0;
        for (i, &p) in head.iter().enumerate() {
            cum += p.to_f64_lossy();
            if u < cum {
                return i;
            }
        }
        head.len() - 1
    };
    ActionIndex::new(draw(&dist.probs[0]), draw(&dist.probs[1]), draw(&dist.probs[2]))
}

/// Most likely index per head; earliest on ties.
pub fn greedy<T: Real>(dist: &ActionDistribution<T>) -> ActionIndex {
    let argmax = |head: &[T]| -> usize {
        let mut best = 0;
        for (i, &p) in head.iter().enumerate().skip(1) {
            if p > head[best] {
                best = i;
            }
        }
        best
    };
    ActionIndex::new(
        argmax(&dist.probs[0]),
        argmax(&dist.probs[1]),
        argmax(&dist.probs[2]),
    )
}

/// Joint log-probability of an index triple, computed in log space.
pub fn log_prob<T: Real>(dist: &ActionDistribution<T>, a: ActionIndex) -> Result<T> {
    dist.check_index(a)?;
    Ok(dist.log_probs[0][a.x] + dist.log_probs[1][a.y] + dist.log_probs[2][a.yaw])
}

/// Shared backward pass: gradient of `sum_h w_h * (-log p_h[target_h])`.
fn weighted_nll_gradient<T: Real>(
    params: &PolicyParams<T>,
    obs: &Observation<T>,
    target: ActionIndex,
    weights: [T; 3],
) -> Result<(T, Vec<T>)> {
    let input = input_vector(&params.arch, obs)?;
    let pass = forward_pass(params, input);
    let dist = ActionDistribution::from_logits(pass.logits.clone());
    dist.check_index(target)?;

    let layout = Layout::of(&params.arch);
    let values = &params.values;
    let mut grad = vec![T::zero(); values.len()];

    let loss = -(weights[0] * dist.log_probs[0][target.x]
        + weights[1] * dist.log_probs[1][target.y]
        + weights[2] * dist.log_probs[2][target.yaw]);

    let trunk_out = pass.activations.last().unwrap();
    let targets = target.as_array();
    let mut trunk_grad = vec![T::zero(); trunk_out.len()];
    for h in 0..3 {
        let (w_range, b_range) = &layout.heads[h];
        let head_weights = &values[w_range.clone()];
        let n_in = trunk_out.len();
        for (j, &p) in dist.probs[h].iter().enumerate() {
            let indicator = if j == targets[h] { T::one() } else { T::zero() };
            let d = weights[h] * (p - indicator);
            grad[b_range.start + j] = d;
            let row = w_range.start + j * n_in;
            for (k, &a) in trunk_out.iter().enumerate() {
                grad[row + k] = d * a;
            }
            for (k, tg) in trunk_grad.iter_mut().enumerate() {
                *tg += d * head_weights[j * n_in + k];
            }
        }
    }

    // Trunk layers, deepest first.
    let mut upstream = trunk_grad;
    for (l, (w_range, b_range)) in layout.trunk.iter().enumerate().rev() {
        let output = &pass.activations[l + 1];
        let input = &pass.activations[l];
        let n_in = input.len();
        let layer_weights = &values[w_range.clone()];
        let mut next_upstream = vec![T::zero(); n_in];
        for (j, (&a, &up)) in output.iter().zip(&upstream).enumerate() {
            let dz = up * params.arch.activation.derivative_from_output(a);
            grad[b_range.start + j] = dz;
            let row = w_range.start + j * n_in;
            for (k, &x) in input.iter().enumerate() {
                grad[row + k] = dz * x;
            }
            for (k, nu) in next_upstream.iter_mut().enumerate() {
                *nu += dz * layer_weights[j * n_in + k];
            }
        }
        upstream = next_upstream;
    }

    Ok((loss, grad))
}

/// Gradient of the one-step surrogate loss `-log pi(a|s) * reward`.
pub fn pg_gradient<T: Real>(
    params: &PolicyParams<T>,
    obs: &Observation<T>,
    a: ActionIndex,
    reward: T,
) -> Result<Vec<T>> {
    if !reward.is_finite() {
        return Err(Error::NonFinite("reward"));
    }
    let (_, grad) = weighted_nll_gradient(params, obs, a, [reward; 3])?;
    Ok(grad)
}

/// Cross-entropy loss against a one-hot label triple and its gradient.
pub fn ce_gradient<T: Real>(
    params: &PolicyParams<T>,
    obs: &Observation<T>,
    label: ActionIndex,
) -> Result<(T, Vec<T>)> {
    weighted_nll_gradient(params, obs, label, [T::one(); 3])
}

/// One SGD step: `theta - lr * grad`, returned as fresh params.
pub fn apply_update<T: Real>(params: &PolicyParams<T>, gradient: &[T], learning_rate: T) -> Result<PolicyParams<T>> {
    if gradient.len() != params.values.len() {
        return Err(Error::DimensionMismatch {
            expected: params.values.len(),
            got: gradient.len(),
        });
    }
    if gradient.iter().any(|g| !g.is_finite()) {
        return Err(Error::NonFinite("gradient"));
    }
    let values = params
        .values
        .iter()
        .zip(gradient)
        .map(|(&v, &g)| v - learning_rate * g)
        .collect();
    PolicyParams::from_values(params.arch.clone(), values)
}
