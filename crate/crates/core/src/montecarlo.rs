//! Seeded Monte Carlo validation of the analytic link model.
//!
//! Reproducibility contract: results are bit-identical for a fixed
//! `(master_seed, trials)` regardless of `chunk_size` or worker count. Two
//! mechanisms provide this:
//!
//! * every trial draws from its own counter-derived streams — a ChaCha8
//!   generator keyed by the master seed with stream id `trial·4 + channel`,
//!   one channel each for (fog 1, pointing 1, fog 2, pointing 2) — so the
//!   randomness never depends on work partitioning, and mode comparisons at
//!   equal seeds reuse identical channel draws;
//! * accumulation runs over fixed-size internal blocks folded in index
//!   order, so float-sum grouping never changes either.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};
use rayon::prelude::*;

use crate::channel::{fog_gain_from_attenuation, pointing_gain_from_radius, FogParams, LinkParams};
use crate::geometry::PointingParams;
use crate::{Error, Result};

/// End-to-end SNR combiner simulated per trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SimMode {
    /// Single link, no relay.
    Direct,
    /// γ1·γ2/(γ1 + γ2 + 1), the full AF expression.
    RelayTrue,
    /// γ1·γ2/(γ1 + γ2), the half-harmonic-mean form.
    RelayHarmonic,
    /// min(γ1, γ2), the analytic upper bound.
    RelayMin,
}

/// Simulation request.
#[derive(Debug, Clone, Copy)]
pub struct SimSpec {
    pub trials: u64,
    pub master_seed: u64,
    /// Parallel work granularity; has no effect on the numbers.
    pub chunk_size: u64,
    pub mode: SimMode,
    /// Outage threshold, linear.
    pub gamma_th: f64,
}

impl SimSpec {
    pub fn new(trials: u64, master_seed: u64, chunk_size: u64, mode: SimMode, gamma_th: f64) -> Result<Self> {
        if trials == 0 {
            return Err(Error::Domain("trials must be >= 1".into()));
        }
        if chunk_size == 0 {
            return Err(Error::Domain("chunk_size must be >= 1".into()));
        }
        if !(gamma_th > 0.0 && gamma_th.is_finite()) {
            return Err(Error::Domain(format!(
                "gamma_th must be positive and finite, got {gamma_th}"
            )));
        }
        Ok(Self {
            trials,
            master_seed,
            chunk_size,
            mode,
            gamma_th,
        })
    }
}

/// One hop as the simulator sees it.
#[derive(Debug, Clone, Copy)]
pub struct SimChannel {
    pub link: LinkParams<f64>,
    pub pointing: PointingParams<f64>,
}

/// What to simulate: a single link or a two-hop relay.
#[derive(Debug, Clone, Copy)]
pub enum SimTarget {
    Direct(SimChannel),
    Relay(SimChannel, SimChannel),
}

/// Estimates with uncertainty.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimResult {
    pub outage_hat: f64,
    /// Wilson 95% interval for the outage estimate.
    pub outage_lo: f64,
    pub outage_hi: f64,
    pub avg_snr_hat: f64,
    pub avg_snr_se: f64,
    /// Mean of log2(1 + γ) with its standard error.
    pub rate_hat: f64,
    pub rate_se: f64,
    pub trials_used: u64,
}

/// Gamma(shape k, scale θ) variate.
pub fn gamma_variate(shape: f64, scale: f64, rng: &mut impl Rng) -> f64 {
    Gamma::new(shape, scale)
        .expect("positive gamma parameters")
        .sample(rng)
}

/// Rayleigh(σ) variate by inverse transform.
pub fn rayleigh_variate(sigma: f64, rng: &mut impl Rng) -> f64 {
    let u: f64 = rng.gen();
    sigma * (-2.0 * (1.0 - u).ln()).sqrt()
}

/// Wilson 95% score interval for `successes` out of `trials`.
pub fn wilson_interval(successes: u64, trials: u64) -> (f64, f64) {
    const Z: f64 = 1.959963984540054;
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = Z * Z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = Z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

const STREAMS_PER_TRIAL: u64 = 4;
const FOG1: u64 = 0;
const POINT1: u64 = 1;
const FOG2: u64 = 2;
const POINT2: u64 = 3;

/// Fixed internal accumulation block; independent of `chunk_size`.
const BLOCK: u64 = 4096;

fn channel_rng(base: &ChaCha8Rng, trial: u64, channel: u64) -> ChaCha8Rng {
    let mut rng = base.clone();
    rng.set_stream(trial * STREAMS_PER_TRIAL + channel);
    rng
}

fn hop_snr(base: &ChaCha8Rng, trial: u64, fog_channel: u64, point_channel: u64, hop: &SimChannel, fog: &FogParams<f64>) -> f64 {
    let mut frng = channel_rng(base, trial, fog_channel);
    let x = gamma_variate(fog.k, fog.beta, &mut frng);
    let hf = fog_gain_from_attenuation(x, hop.link.d_km);

    let mut prng = channel_rng(base, trial, point_channel);
    let w_zeq = hop.pointing.w_zeq;
    let sigma_s = w_zeq / (2.0 * hop.pointing.rho);
    let r = rayleigh_variate(sigma_s, &mut prng);
    let hp = pointing_gain_from_radius(r, hop.pointing.a0, w_zeq);

    let h = hf * hp;
    hop.link.gamma0 * h * h
}

/// End-to-end SNR for one trial under the given combiner.
fn trial_snr(base: &ChaCha8Rng, trial: u64, mode: SimMode, target: &SimTarget, fog: &FogParams<f64>) -> f64 {
    match (mode, target) {
        (SimMode::Direct, SimTarget::Direct(ch)) => hop_snr(base, trial, FOG1, POINT1, ch, fog),
        (mode, SimTarget::Relay(h1, h2)) => {
            let g1 = hop_snr(base, trial, FOG1, POINT1, h1, fog);
            let g2 = hop_snr(base, trial, FOG2, POINT2, h2, fog);
            match mode {
                SimMode::RelayTrue => g1 * g2 / (g1 + g2 + 1.0),
                SimMode::RelayHarmonic => g1 * g2 / (g1 + g2),
                SimMode::RelayMin => g1.min(g2),
                SimMode::Direct => unreachable!(),
            }
        }
        _ => f64::NAN,
    }
}

#[derive(Default, Clone, Copy)]
struct BlockSum {
    below: u64,
    snr: f64,
    snr2: f64,
    rate: f64,
    rate2: f64,
}

/// Run the simulation described by `spec` on `target`.
pub fn simulate(spec: &SimSpec, target: &SimTarget, fog: &FogParams<f64>) -> Result<SimResult> {
    match (spec.mode, target) {
        (SimMode::Direct, SimTarget::Direct(_)) => {}
        (SimMode::Direct, _) | (_, SimTarget::Direct(_)) => {
            return Err(Error::Domain(
                "simulation mode and target disagree (direct vs relay)".into(),
            ))
        }
        _ => {}
    }
    let base = ChaCha8Rng::seed_from_u64(spec.master_seed);
    let n_blocks = ((spec.trials + BLOCK - 1) / BLOCK) as usize;
    let min_len = ((spec.chunk_size + BLOCK - 1) / BLOCK).max(1) as usize;

    let partials: Vec<BlockSum> = (0..n_blocks)
        .into_par_iter()
        .with_min_len(min_len)
        .map(|b| {
            let start = b as u64 * BLOCK;
            let end = (start + BLOCK).min(spec.trials);
            let mut acc = BlockSum::default();
            for trial in start..end {
                let g = trial_snr(&base, trial, spec.mode, target, fog);
                if g < spec.gamma_th {
                    acc.below += 1;
                }
                let r = (1.0 + g).log2();
                acc.snr += g;
                acc.snr2 += g * g;
                acc.rate += r;
                acc.rate2 += r * r;
            }
            acc
        })
        .collect();

    let mut total = BlockSum::default();
    for p in partials {
        total.below += p.below;
        total.snr += p.snr;
        total.snr2 += p.snr2;
        total.rate += p.rate;
        total.rate2 += p.rate2;
    }

    let n = spec.trials as f64;
    let mean_snr = total.snr / n;
    let mean_rate = total.rate / n;
    let var = |sum2: f64, mean: f64| ((sum2 / n - mean * mean).max(0.0)) * n / (n - 1.0).max(1.0);
    let (outage_lo, outage_hi) = wilson_interval(total.below, spec.trials);

    Ok(SimResult {
        outage_hat: total.below as f64 / n,
        outage_lo,
        outage_hi,
        avg_snr_hat: mean_snr,
        avg_snr_se: (var(total.snr2, mean_snr) / n).sqrt(),
        rate_hat: mean_rate,
        rate_se: (var(total.rate2, mean_rate) / n).sqrt(),
        trials_used: spec.trials,
    })
}

/// Draw `trials` single-hop SNR samples from the channel's own streams.
/// Used for distribution-level validation against the analytic CDF.
pub fn single_hop_snr_samples(
    trials: u64,
    master_seed: u64,
    channel: &SimChannel,
    fog: &FogParams<f64>,
) -> Vec<f64> {
    let base = ChaCha8Rng::seed_from_u64(master_seed);
    (0..trials as usize)
        .into_par_iter()
        .map(|t| hop_snr(&base, t as u64, FOG1, POINT1, channel, fog))
        .collect()
}

/// Kolmogorov–Smirnov statistic of `samples` against `cdf`.
pub fn ks_statistic(samples: &mut [f64], cdf: impl Fn(f64) -> f64 + Sync) -> f64 {
    samples.sort_by(|a, b| a.partial_cmp(b).expect("finite samples"));
    let n = samples.len() as f64;
    samples
        .par_iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            let lo = f - i as f64 / n;
            let hi = (i + 1) as f64 / n - f;
            lo.max(hi)
        })
        .reduce(|| 0.0, f64::max)
}

/// Count trials violating γ_true <= γ_harmonic <= γ_min under shared draws.
pub fn coupled_ordering_violations(
    trials: u64,
    master_seed: u64,
    target: &SimTarget,
    fog: &FogParams<f64>,
) -> u64 {
    let base = ChaCha8Rng::seed_from_u64(master_seed);
    let n_blocks = ((trials + BLOCK - 1) / BLOCK) as usize;
    (0..n_blocks)
        .into_par_iter()
        .map(|b| {
            let start = b as u64 * BLOCK;
            let end = (start + BLOCK).min(trials);
            let mut bad = 0u64;
            for trial in start..end {
                let t = trial_snr(&base, trial, SimMode::RelayTrue, target, fog);
                let h = trial_snr(&base, trial, SimMode::RelayHarmonic, target, fog);
                let m = trial_snr(&base, trial, SimMode::RelayMin, target, fog);
                if !(t <= h && h <= m) {
                    bad += 1;
                }
            }
            bad
        })
        .sum()
}
