//! Seeding helpers. All randomness in a run flows from one `u64` seed,
//! fanned out into fixed, documented ChaCha streams.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::scalar::Real;

/// Roles a run draws randomness for. Each role gets its own stream so the
/// consumption pattern of one stage cannot perturb another.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    /// Scene generation, observation/execution noise, feature matrix.
    Env = 0,
    /// Policy parameter initialization.
    PolicyInit = 1,
    /// Action sampling and minibatch shuffling during training.
    Train = 2,
    /// Scenes and noise for pretraining data generation.
    PretrainEnv = 3,
    /// Action draws and shuffling during pretraining.
    PretrainTrain = 4,
    /// Fresh scenes for policy evaluation.
    Eval = 5,
    /// The run-wide feature matrix, shared by every env instance of a run.
    FeatureMap = 6,
}

/// RNG for one role of a run.
pub fn stream_rng(seed: u64, stream: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream as u64);
    rng
}

/// Standard normal draw via Box-Muller, sampled in f64.
pub fn std_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    let u1: f64 = 1.0 - rng.random::<f64>();
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// Gaussian draw with the given standard deviation.
pub fn normal<T: Real, R: Rng + ?Sized>(rng: &mut R, sigma: T) -> T {
    sigma * T::of(std_normal(rng))
}

/// Uniform draw in [-half_range, half_range).
pub fn uniform_symmetric<T: Real, R: Rng + ?Sized>(rng: &mut R, half_range: T) -> T {
    half_range * T::of(2.0 * rng.random::<f64>() - 1.0)
}
