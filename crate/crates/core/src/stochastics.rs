//! Log-normal moment matching and labelled, reproducible random streams.
//!
//! Every random draw in the simulator comes from an [`RngStream`] derived
//! from the master seed plus a label path such as
//! `("scenario-1", 2030, 17, "trip")`. Streams never depend on scheduling
//! order, so a run produces the same bytes on one thread or many.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Log-space parameters of a log-normal distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogNormalParams {
    pub mu: f64,
    pub sigma: f64,
}

impl LogNormalParams {
    pub fn new(mu: f64, sigma: f64) -> Result<Self> {
        if !mu.is_finite() {
            return Err(Error::invalid("mu", format!("must be finite, got {mu}")));
        }
        if !(sigma.is_finite() && sigma >= 0.0) {
            return Err(Error::invalid(
                "sigma",
                format!("must be finite and >= 0, got {sigma}"),
            ));
        }
        Ok(LogNormalParams { mu, sigma })
    }

    /// Mean of the distribution, `exp(mu + sigma^2 / 2)`.
    pub fn mean(&self) -> f64 {
        (self.mu + 0.5 * self.sigma * self.sigma).exp()
    }

    pub fn variance(&self) -> f64 {
        let s2 = self.sigma * self.sigma;
        s2.exp_m1() * (2.0 * self.mu + s2).exp()
    }
}

/// Matches a log-normal to a given arithmetic mean and standard deviation:
///
/// ```text
/// mu      = ln(m / sqrt(1 + v/m^2))
/// sigma^2 = ln(1 + v/m^2)          with v = s^2
/// ```
pub fn lognormal_from_moments(mean: f64, stdev: f64) -> Result<LogNormalParams> {
    if !(mean.is_finite() && mean > 0.0) {
        return Err(Error::invalid(
            "mean",
            format!("must be finite and > 0, got {mean}"),
        ));
    }
    if !(stdev.is_finite() && stdev >= 0.0) {
        return Err(Error::invalid(
            "stdev",
            format!("must be finite and >= 0, got {stdev}"),
        ));
    }
    let ratio = stdev / mean;
    // ln_1p keeps precision when the coefficient of variation is small
    let sigma2 = (ratio * ratio).ln_1p();
    Ok(LogNormalParams {
        mu: mean.ln() - 0.5 * sigma2,
        sigma: sigma2.sqrt(),
    })
}

/// Draws `exp(mu + sigma * Z)` with `Z` standard normal.
pub fn sample_lognormal(p: LogNormalParams, stream: &mut RngStream) -> f64 {
    let z = stream.standard_normal();
    (p.mu + p.sigma * z).exp()
}

/// One element of a stream label path.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Label<'a> {
    Str(&'a str),
    Int(i64),
}

impl<'a> From<&'a str> for Label<'a> {
    fn from(s: &'a str) -> Self {
        Label::Str(s)
    }
}

impl From<i64> for Label<'_> {
    fn from(v: i64) -> Self {
        Label::Int(v)
    }
}

impl From<i32> for Label<'_> {
    fn from(v: i32) -> Self {
        Label::Int(v.into())
    }
}

impl From<u32> for Label<'_> {
    fn from(v: u32) -> Self {
        Label::Int(v.into())
    }
}

/// An independent pseudo-random sequence identified by `(seed, labels)`.
#[derive(Debug, Clone)]
pub struct RngStream {
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn from_seed_bytes(seed: [u8; 32]) -> Self {
        RngStream {
            rng: ChaCha8Rng::from_seed(seed),
        }
    }

    /// Uniform in `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    /// Uniform in `[lo, hi]`; returns `lo` when the interval is empty.
    pub fn uniform_between(&mut self, lo: f64, hi: f64) -> f64 {
        if hi <= lo {
            return lo;
        }
        (lo + (hi - lo) * self.uniform()).min(hi)
    }

    /// Uniform index in `0..n`.
    pub fn index(&mut self, n: usize) -> usize {
        self.rng.random_range(0..n)
    }

    pub fn standard_normal(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}

/// Derives a stream by hashing the master seed and a typed, length-prefixed
/// encoding of the label path. Distinct paths give unrelated ChaCha keys.
pub fn derive_stream(master_seed: u64, labels: &[Label<'_>]) -> RngStream {
    let mut h = Sha256::new();
    h.update(b"freightsim/stream/v1");
    h.update(master_seed.to_le_bytes());
    for label in labels {
        match *label {
            Label::Str(s) => {
                h.update([0x01]);
                h.update((s.len() as u64).to_le_bytes());
                h.update(s.as_bytes());
            }
            Label::Int(v) => {
                h.update([0x02]);
                h.update(v.to_le_bytes());
            }
        }
    }
    let digest = h.finalize();
    let mut seed = [0u8; 32];
    seed.copy_from_slice(&digest);
    RngStream::from_seed_bytes(seed)
}
