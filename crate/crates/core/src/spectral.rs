//! Welch estimates of auto- and cross-spectra.
//!
//! Normalized to the two-sided angular-frequency convention, so white noise
//! of per-sample variance `2π S0 / dt` estimates flat at `S0`.

use std::f64::consts::PI;
use std::str::FromStr;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::langevin::{acceleration_series, TrajectoryRecord};
use crate::noise_model::CONVENTION;

/// Shortest usable segment.
pub const MIN_SEGMENT: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Window {
    Hann,
    Rectangular,
}

impl FromStr for Window {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hann" => Ok(Window::Hann),
            "rectangular" => Ok(Window::Rectangular),
            _ => Err(Error::invalid(
                "welch.window",
                "expected hann or rectangular",
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WelchConfig {
    pub n_segments: usize,
    pub overlap_fraction: f64,
    pub window: Window,
}

impl Default for WelchConfig {
    fn default() -> Self {
        Self {
            n_segments: 10,
            overlap_fraction: 0.5,
            window: Window::Hann,
        }
    }
}

impl WelchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_segments < 1 {
            return Err(Error::invalid("welch.n_segments", "must be >= 1"));
        }
        if !(0.0..=0.9).contains(&self.overlap_fraction) {
            return Err(Error::invalid(
                "welch.overlap_fraction",
                "must lie in [0, 0.9]",
            ));
        }
        Ok(())
    }

    /// `(segment length, hop, segment count)` for a series of `len` samples.
    ///
    /// The segment is the largest power of two such that `n_segments`
    /// overlapping segments fit; every further segment that fits is used too.
    pub fn layout(&self, len: usize) -> Result<(usize, usize, usize)> {
        self.validate()?;
        let span = 1.0 + (self.n_segments - 1) as f64 * (1.0 - self.overlap_fraction);
        let target = (len as f64 / span).floor() as usize;
        if target < MIN_SEGMENT {
            return Err(Error::SeriesTooShort {
                needed: (MIN_SEGMENT as f64 * span).ceil() as usize,
                got: len,
            });
        }
        let seg = 1usize << (usize::BITS - 1 - target.leading_zeros());
        let hop = ((seg as f64 * (1.0 - self.overlap_fraction)).round() as usize).max(1);
        let count = (len - seg) / hop + 1;
        Ok((seg, hop, count))
    }
}

/// `w[j] = ½(1 − cos(2πj/(n−1)))`.
pub fn hann_window(n: usize) -> Result<Vec<f64>> {
    if n < 2 {
        return Err(Error::invalid("window length", "must be >= 2"));
    }
    let m = (n - 1) as f64;
    Ok((0..n)
        .map(|j| 0.5 * (1.0 - (2.0 * PI * j as f64 / m).cos()))
        .collect())
}

fn window_coefficients(w: Window, n: usize) -> Result<Vec<f64>> {
    match w {
        Window::Hann => hann_window(n),
        Window::Rectangular => Ok(vec![1.0; n]),
    }
}

/// One-sided (`ω ≥ 0`) view of a two-sided estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimatedSpectrum {
    pub omega: Vec<f64>,
    pub sxx: Vec<f64>,
    pub syy: Vec<f64>,
    pub sxy: Vec<Complex64>,
    /// Standard errors of `Re sxy` and `Im sxy` from the scatter across segments.
    pub sxy_re_std_error: Vec<f64>,
    pub sxy_im_std_error: Vec<f64>,
    pub n_averages: usize,
    pub segment_length: usize,
    pub convention: &'static str,
}

impl EstimatedSpectrum {
    pub fn bin_width(&self) -> f64 {
        self.omega.get(1).copied().unwrap_or(0.0)
    }

    /// Bins where `|sxy|² > sxx·syy` beyond round-off.
    pub fn schwarz_excess(&self) -> Vec<usize> {
        (0..self.omega.len())
            .filter(|&j| self.sxy[j].norm_sqr() > self.sxx[j] * self.syy[j] * (1.0 + 1e-12))
            .collect()
    }

    /// Full two-sided estimate on `−ω_N … ω_N`, using `S(−ω) = S(ω)*`.
    pub fn two_sided(&self) -> (Vec<f64>, Vec<f64>, Vec<f64>, Vec<Complex64>) {
        let m = self.omega.len();
        let nyquist_bin = self.segment_length / 2;
        // The Nyquist bin appears once in a two-sided DFT.
        let negatives: Vec<usize> = (1..m).rev().filter(|&j| j != nyquist_bin).collect();
        let mut omega = Vec::with_capacity(2 * m);
        let mut sxx = Vec::with_capacity(2 * m);
        let mut syy = Vec::with_capacity(2 * m);
        let mut sxy = Vec::with_capacity(2 * m);
        for &j in &negatives {
            omega.push(-self.omega[j]);
            sxx.push(self.sxx[j]);
            syy.push(self.syy[j]);
            sxy.push(self.sxy[j].conj());
        }
        omega.extend_from_slice(&self.omega);
        sxx.extend_from_slice(&self.sxx);
        syy.extend_from_slice(&self.syy);
        sxy.extend_from_slice(&self.sxy);
        (omega, sxx, syy, sxy)
    }

    /// `Σ sxx Δω` over the two-sided grid.
    pub fn total_power_x(&self) -> f64 {
        let (_, sxx, _, _) = self.two_sided();
        sxx.iter().sum::<f64>() * self.bin_width()
    }
}

#[derive(Clone)]
struct Accumulator {
    xx: Vec<f64>,
    yy: Vec<f64>,
    xy: Vec<Complex64>,
    re2: Vec<f64>,
    im2: Vec<f64>,
}

impl Accumulator {
    fn zeros(bins: usize) -> Self {
        Self {
            xx: vec![0.0; bins],
            yy: vec![0.0; bins],
            xy: vec![Complex64::new(0.0, 0.0); bins],
            re2: vec![0.0; bins],
            im2: vec![0.0; bins],
        }
    }

    fn add(&mut self, other: &Accumulator) {
        for j in 0..self.xx.len() {
            self.xx[j] += other.xx[j];
            self.yy[j] += other.yy[j];
            self.xy[j] += other.xy[j];
            self.re2[j] += other.re2[j];
            self.im2[j] += other.im2[j];
        }
    }
}

const CHUNK: usize = 8;

/// Welch cross-spectral estimate of two equally long series sampled at `dt`.
///
/// Each segment is mean-removed, windowed and transformed with the forward
/// (`e^{−iωt}`) DFT; the cross term is accumulated as `X̂·Ŷ*`, which matches
/// `E[x(t)y(t+τ)] = ∫ S_xy e^{−iωτ} dω`. Segments run in parallel and are
/// summed in order.
pub fn cross_psd_welch(
    x: &[f64],
    y: &[f64],
    dt: f64,
    cfg: &WelchConfig,
) -> Result<EstimatedSpectrum> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch(x.len(), y.len()));
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::invalid("sim.dt", "must be positive and finite"));
    }
    let (seg, hop, count) = cfg.layout(x.len())?;
    let w = window_coefficients(cfg.window, seg)?;
    let w_power: f64 = w.iter().map(|v| v * v).sum();
    let bins = seg / 2 + 1;
    let fft = FftPlanner::<f64>::new().plan_fft_forward(seg);

    let transform = |series: &[f64], start: usize, buf: &mut Vec<Complex64>| {
        let s = &series[start..start + seg];
        let mean = s.iter().sum::<f64>() / seg as f64;
        buf.clear();
        buf.extend(
            s.iter()
                .zip(&w)
                .map(|(v, wj)| Complex64::new((v - mean) * wj, 0.0)),
        );
        fft.process(buf);
    };

    let mut total = Accumulator::zeros(bins);
    let starts: Vec<usize> = (0..count).map(|i| i * hop).collect();
    // Fixed chunking keeps the summation order independent of the thread count.
    {
        let parts: Vec<Accumulator> = starts
            .par_chunks(CHUNK)
            .map(|chunk| {
                let mut acc = Accumulator::zeros(bins);
                let (mut bx, mut by) = (Vec::with_capacity(seg), Vec::with_capacity(seg));
                for &start in chunk {
                    transform(x, start, &mut bx);
                    transform(y, start, &mut by);
                    for j in 0..bins {
                        let cross = bx[j] * by[j].conj();
                        acc.xx[j] += bx[j].norm_sqr();
                        acc.yy[j] += by[j].norm_sqr();
                        acc.xy[j] += cross;
                        acc.re2[j] += cross.re * cross.re;
                        acc.im2[j] += cross.im * cross.im;
                    }
                }
                acc
            })
            .collect();
        for p in &parts {
            total.add(p);
        }
    }

    let k = count as f64;
    let scale = dt / (2.0 * PI * w_power);
    let std_error = |sum: f64, sum2: f64| {
        if count < 2 {
            return f64::NAN;
        }
        let mean = sum / k;
        let var = ((sum2 - k * mean * mean) / (k - 1.0)).max(0.0);
        scale * (var / k).sqrt()
    };
    let d_omega = 2.0 * PI / (seg as f64 * dt);
    Ok(EstimatedSpectrum {
        omega: (0..bins).map(|j| j as f64 * d_omega).collect(),
        sxx: total.xx.iter().map(|v| scale * v / k).collect(),
        syy: total.yy.iter().map(|v| scale * v / k).collect(),
        sxy: total.xy.iter().map(|v| v * (scale / k)).collect(),
        sxy_re_std_error: (0..bins)
            .map(|j| std_error(total.xy[j].re, total.re2[j]))
            .collect(),
        sxy_im_std_error: (0..bins)
            .map(|j| std_error(total.xy[j].im, total.im2[j]))
            .collect(),
        n_averages: count,
        segment_length: seg,
        convention: CONVENTION,
    })
}

/// Welch estimate over the noise channels `δa = −(Ẍ, Ÿ)` of a record.
pub fn estimate_noise_spectra(
    rec: &TrajectoryRecord,
    cfg: &WelchConfig,
) -> Result<EstimatedSpectrum> {
    let (dx, dy) = acceleration_series(rec);
    cross_psd_welch(&dx, &dy, rec.dt, cfg)
}
