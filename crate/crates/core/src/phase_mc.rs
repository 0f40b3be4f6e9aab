//! Monte-Carlo estimate of the differential phase statistics.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::interferometer::{differential_trajectory, InterferometerParams};
use crate::langevin::{run, SimConfig};
use crate::noise_model::NoiseParams;

/// Above this variance `e^{−σ²/2}` is lost in sampling noise.
pub const HOPELESS_VARIANCE: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhaseSample {
    pub delta_phi: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McResult {
    pub n: usize,
    pub mean: f64,
    pub variance: f64,
    /// Gaussian formula `var·√(2/(n−1))`.
    pub variance_std_error: f64,
    pub re_dephasing: f64,
    pub im_dephasing: f64,
    pub re_dephasing_std_error: f64,
    pub im_dephasing_std_error: f64,
    pub excess_kurtosis: f64,
    /// Set when `variance ≥ 4`, where the dephasing estimate is meaningless.
    pub dephasing_unresolved: bool,
    #[serde(skip)]
    pub samples: Vec<PhaseSample>,
}

impl McResult {
    pub fn dephasing_factor_estimate(&self) -> Complex64 {
        Complex64::new(self.re_dephasing, self.im_dephasing)
    }

    pub fn mean_std_error(&self) -> f64 {
        (self.variance / self.n as f64).sqrt()
    }
}

/// Samples per interferometer period.
pub fn samples_per_period(p: &InterferometerParams, dt: f64) -> usize {
    (p.period() / dt).round() as usize
}

/// `δφ = (m/ħ) ∫₀^T [δa_x Δx + δa_y Δy] dt` by the trapezoidal rule, with
/// the window starting at the first sample.
pub fn accumulate_phase(
    dax: &[f64],
    day: &[f64],
    dt: f64,
    p: &InterferometerParams,
) -> Result<f64> {
    if dax.len() != day.len() {
        return Err(Error::LengthMismatch(dax.len(), day.len()));
    }
    let n_int = samples_per_period(p, dt);
    if n_int < 2 || dax.len() < n_int + 1 {
        return Err(Error::SeriesTooShort {
            needed: n_int.max(2) + 1,
            got: dax.len(),
        });
    }
    let mut acc = 0.0;
    for j in 0..=n_int {
        let (dx, dy) = differential_trajectory(p, j as f64 * dt);
        let f = dax[j] * dx + day[j] * dy;
        acc += if j == 0 || j == n_int { 0.5 * f } else { f };
    }
    Ok(p.m() / p.hbar() * acc * dt)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of realization `index`, a counter-based hash of the master seed.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    splitmix64(splitmix64(master) ^ index.wrapping_mul(0xD6E8_FEB8_6659_FD93))
}

/// One realization: simulate from rest, skip the burn-in, then integrate over
/// one period starting at a uniformly random later sample.
pub fn phase_realization(
    p: &InterferometerParams,
    n: &NoiseParams,
    c: &SimConfig,
    seed: u64,
) -> Result<PhaseSample> {
    c.validate(n)?;
    let burn = c.burn_in_for(n);
    let n_int = samples_per_period(p, c.dt);
    let available = c.n_steps - burn;
    if available < n_int + 1 {
        return Err(Error::SeriesTooShort {
            needed: burn + n_int + 1,
            got: c.n_steps,
        });
    }
    let mut offset_rng = ChaCha8Rng::seed_from_u64(seed);
    offset_rng.set_stream(2);
    let start = burn + offset_rng.gen_range(0..=available - (n_int + 1));
    let end = start + n_int + 1;

    let truncated = SimConfig {
        n_steps: end,
        burn_in: Some(0),
        seed,
        record_noise: false,
        ..*c
    };
    let (mut dax, mut day) = (Vec::with_capacity(n_int + 1), Vec::with_capacity(n_int + 1));
    run(n, &truncated, |j, _, acc, _| {
        if j >= start {
            dax.push(-acc[0]);
            day.push(-acc[1]);
        }
    })?;
    Ok(PhaseSample {
        delta_phi: accumulate_phase(&dax, &day, c.dt, p)?,
        seed,
    })
}

/// Ensemble statistics of `δφ` over independent realizations seeded from
/// `c.seed`. Realizations run in parallel and are merged in index order.
pub fn mc_sigma2(
    p: &InterferometerParams,
    n: &NoiseParams,
    c: &SimConfig,
    realizations: usize,
) -> Result<McResult> {
    if realizations < 2 {
        return Err(Error::invalid("mc.realizations", "must be at least 2"));
    }
    c.validate(n)?;
    let samples = (0..realizations as u64)
        .into_par_iter()
        .map(|i| phase_realization(p, n, c, derive_seed(c.seed, i)))
        .collect::<Result<Vec<_>>>()?;
    Ok(summarize(samples))
}

pub fn summarize(samples: Vec<PhaseSample>) -> McResult {
    let n = samples.len();
    let nf = n as f64;
    let phi: Vec<f64> = samples.iter().map(|s| s.delta_phi).collect();
    let mean = phi.iter().sum::<f64>() / nf;
    let m2 = phi.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / nf;
    let m4 = phi.iter().map(|v| (v - mean).powi(4)).sum::<f64>() / nf;
    let variance = m2 * nf / (nf - 1.0);
    let excess_kurtosis = if m2 > 0.0 { m4 / (m2 * m2) - 3.0 } else { 0.0 };

    let moments = |f: fn(f64) -> f64| {
        let vals: Vec<f64> = phi.iter().map(|&v| f(v)).collect();
        let m = vals.iter().sum::<f64>() / nf;
        let var = vals.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (nf - 1.0);
        (m, (var / nf).sqrt())
    };
    let (re, re_se) = moments(f64::cos);
    let (im, im_se) = moments(f64::sin);
    McResult {
        n,
        mean,
        variance,
        variance_std_error: variance * (2.0 / (nf - 1.0)).sqrt(),
        re_dephasing: re,
        im_dephasing: im,
        re_dephasing_std_error: re_se,
        im_dephasing_std_error: im_se,
        excess_kurtosis,
        dephasing_unresolved: variance >= HOPELESS_VARIANCE,
        samples,
    }
}
