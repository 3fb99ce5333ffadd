//! Seeded, time-varying Poisson arrivals with sinusoidal modulation and burst spikes.
//!
//! Randomness comes from ChaCha8 keyed by `(seed, stream)`. Its output is specified
//! independently of platform and word size, so identical `(seed, stream, call sequence)`
//! gives identical draws everywhere. Only `u64` and `f64` draws are used on top of it.

use std::f64::consts::PI;

use rand::{Rng as _, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::scenario::ScenarioConfig;
use crate::types::{NodeState, Slot};

/// Stream ids. Traffic streams are keyed by run seed only, never by policy.
pub const STREAM_ARRIVALS: u64 = 1;
pub const STREAM_BURSTS: u64 = 2;
pub const STREAM_POLICY: u64 = 3;

/// Amplitude and period of the sinusoidal rate modulation.
const MODULATION_DEPTH: f64 = 0.75;
const MODULATION_PERIOD: f64 = 50.0;

/// Rates above this are sampled as a sum of independent chunks so `exp(-rate)` never underflows.
const POISSON_CHUNK: f64 = 30.0;

/// Deterministic PRNG addressed by `(seed, stream)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rng {
    inner: ChaCha8Rng,
}

impl Rng {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        Self { inner }
    }

    /// Uniform in `[0, 1)` with 53 bits of precision.
    pub fn next_f64(&mut self) -> f64 {
        self.inner.gen::<f64>()
    }

    /// Uniform in `[0, bound)`. `bound` must be positive.
    pub fn below(&mut self, bound: u64) -> u64 {
        self.inner.gen_range(0..bound)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }
}

/// Additive burst term: Bernoulli(`probability`) gate, then uniform amplitude.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BurstProfile {
    pub probability: f64,
    pub amplitude: [f64; 2],
}

impl BurstProfile {
    pub fn from_config(cfg: &ScenarioConfig) -> Self {
        Self {
            probability: cfg.burst_probability,
            amplitude: cfg.burst_amplitude_range,
        }
    }

    /// Long-run mean of the burst term.
    pub fn mean(&self) -> f64 {
        self.probability * 0.5 * (self.amplitude[0] + self.amplitude[1])
    }
}

/// Per-node arrival counts for one slot.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArrivalBatch(pub Vec<u32>);

impl ArrivalBatch {
    pub fn total(&self) -> u64 {
        self.0.iter().map(|&c| c as u64).sum()
    }
}

/// The two traffic streams of one run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrafficStreams {
    pub arrivals: Rng,
    pub bursts: Rng,
}

impl TrafficStreams {
    pub fn new(seed: u64) -> Self {
        Self::with_offset(seed, 0)
    }

    /// Streams shifted by `offset`; used to give each policy its own traffic when runs are not paired.
    pub fn with_offset(seed: u64, offset: u64) -> Self {
        Self {
            arrivals: Rng::new(seed, STREAM_ARRIVALS + 16 * offset),
            bursts: Rng::new(seed, STREAM_BURSTS + 16 * offset),
        }
    }
}

/// Smooth part of the rate: `lambda_base * (1 + 0.75 sin(2 pi t / 50))`.
pub fn modulated_rate(lambda_base: f64, t: Slot) -> f64 {
    lambda_base * (1.0 + MODULATION_DEPTH * (2.0 * PI * t as f64 / MODULATION_PERIOD).sin())
}

/// Instantaneous rate of `node` at slot `t`. Draws from `bursts` only for burst nodes.
pub fn arrival_rate(node: &NodeState, t: Slot, burst: &BurstProfile, bursts: &mut Rng) -> f64 {
    let mut rate = modulated_rate(node.lambda_base, t);
    if node.is_burst_node && bursts.next_f64() < burst.probability {
        let [lo, hi] = burst.amplitude;
        rate += lo + (hi - lo) * bursts.next_f64();
    }
    rate.max(0.0)
}

/// Poisson draw by the multiplicative (Knuth) method.
pub fn sample_poisson(rng: &mut Rng, rate: f64) -> u32 {
    if rate <= 0.0 || !rate.is_finite() {
        return 0;
    }
    let mut remaining = rate;
    let mut total = 0u32;
    while remaining > 0.0 {
        let chunk = remaining.min(POISSON_CHUNK);
        remaining -= chunk;
        let limit = (-chunk).exp();
        let mut prod = rng.next_f64();
        while prod > limit {
            total += 1;
            prod *= rng.next_f64();
        }
    }
    total
}

/// Arrivals for every node at slot `t`, drawn in ascending node order.
pub fn generate_arrivals(
    cfg: &ScenarioConfig,
    nodes: &[NodeState],
    t: Slot,
    streams: &mut TrafficStreams,
) -> ArrivalBatch {
    let burst = BurstProfile::from_config(cfg);
    ArrivalBatch(
        nodes
            .iter()
            .map(|node| {
                let rate = arrival_rate(node, t, &burst, &mut streams.bursts);
                sample_poisson(&mut streams.arrivals, rate)
            })
            .collect(),
    )
}

/// Analytic mean of the per-slot rate of `node` over slots `0..steps`.
pub fn mean_rate(node: &NodeState, steps: Slot, burst: &BurstProfile) -> f64 {
    let smooth: f64 = (0..steps).map(|t| modulated_rate(node.lambda_base, t)).sum::<f64>() / steps as f64;
    if node.is_burst_node {
        smooth + burst.mean()
    } else {
        smooth
    }
}
