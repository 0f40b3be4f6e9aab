//! Phase variance `σ²` of the differential phase.
//!
//! Three routes are provided: the residue closed form fed with spectral
//! values at `ω0` and `0` ([`sigma2_generic`]), the explicit normal-mode
//! Lorentzian form for the inertial noise model ([`sigma2_closed`]), and
//! direct quadrature of the transfer-function integral
//! ([`sigma2_quadrature`]), which uses no residues at all.

use std::f64::consts::{FRAC_PI_4, PI};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::interferometer::{signal_phase, transfer_f0, InterferometerParams};
use crate::noise_model::{cross_spectra_at, Coupling, NoiseParams};
use crate::quadrature::{integrate, QuadOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    ClosedForm,
    Quadrature,
    MonteCarlo,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DephasingResult {
    /// Phase variance [rad²].
    pub sigma2: f64,
    /// Contribution of the spectrum at `ω0`; `None` for quadrature.
    pub term_resonant: Option<f64>,
    /// Contribution of the spectrum at `ω → 0`; `None` for quadrature.
    pub term_zero_freq: Option<f64>,
    /// `exp(−σ²/2)`.
    pub dephasing_factor: f64,
    pub method: Method,
}

impl DephasingResult {
    fn new(sigma2: f64, terms: Option<(f64, f64)>, method: Method) -> Self {
        Self {
            sigma2,
            term_resonant: terms.map(|t| t.0),
            term_zero_freq: terms.map(|t| t.1),
            dephasing_factor: (-sigma2 / 2.0).exp(),
            method,
        }
    }
}

/// Residue closed form for isotropic noise (`S_xx = S_yy = S`), given the
/// auto-spectrum and co-spectrum at `ω0` and in the `ω → 0` limit.
pub fn sigma2_generic(
    p: &InterferometerParams,
    s_at_omega0: f64,
    sbar_at_omega0: f64,
    s_at_zero: f64,
    sbar_at_zero: f64,
) -> Result<DephasingResult> {
    let sin2 = (2.0 * p.theta()).sin();
    let resonant = s_at_omega0 + sin2 * sbar_at_omega0;
    let zero = 2.0 * (s_at_zero + sin2 * sbar_at_zero);
    let bracket = resonant + zero;
    let scale =
        s_at_omega0.abs() + sbar_at_omega0.abs() + 2.0 * (s_at_zero.abs() + sbar_at_zero.abs());
    if bracket < -1e-12 * scale || !bracket.is_finite() {
        return Err(Error::SchwarzViolation { bracket });
    }
    let prefactor = 8.0 * PI * PI * p.phase_scale_sq() / p.omega0();
    let term_resonant = prefactor * resonant.max(0.0);
    let term_zero = prefactor * zero.max(0.0);
    let sigma2 = (prefactor * bracket).max(0.0);
    Ok(DephasingResult::new(
        sigma2,
        Some((term_resonant, term_zero)),
        Method::ClosedForm,
    ))
}

/// `(D₊, D₋) = ((Ω0² ± k − ω0²)² + ω0²γ²)`.
fn lorentzian_denominators(omega0: f64, n: &NoiseParams, k: f64) -> (f64, f64) {
    let detune = n.omega0() * n.omega0() - omega0 * omega0;
    let damp2 = omega0 * omega0 * n.gamma() * n.gamma();
    (
        (detune + k) * (detune + k) + damp2,
        (detune - k) * (detune - k) + damp2,
    )
}

/// Closed-form variance for inertial noise.
///
/// For direct coupling this is the normal-mode form
/// `8π²(mA0/ħ)² S0 ω0³ [cos²(θ+π/4)/D₊ + sin²(θ+π/4)/D₋]`. For the
/// Coriolis model the co-spectrum vanishes and only `S_aa(ω0)` enters.
pub fn sigma2_closed(p: &InterferometerParams, n: &NoiseParams) -> Result<DephasingResult> {
    let w0 = p.omega0();
    match n.coupling() {
        Coupling::Coriolis { .. } => {
            let s = cross_spectra_at(n, w0).sxx;
            if !s.is_finite() {
                return Err(Error::UndampedResonance { sign: '±' });
            }
            sigma2_generic(p, s, 0.0, 0.0, 0.0)
        }
        _ => {
            let k = n.direct_k().unwrap_or(0.0);
            let (d_plus, d_minus) = lorentzian_denominators(w0, n, k);
            let (u, v) = ((p.theta() + FRAC_PI_4).sin(), (p.theta() + FRAC_PI_4).cos());
            if n.s0() > 0.0 {
                if d_plus == 0.0 && v != 0.0 {
                    return Err(Error::UndampedResonance { sign: '+' });
                }
                if d_minus == 0.0 && u != 0.0 {
                    return Err(Error::UndampedResonance { sign: '-' });
                }
            }
            let term = |proj: f64, d: f64| if proj == 0.0 { 0.0 } else { proj * proj / d };
            let bracket = term(v, d_plus) + term(u, d_minus);
            let sigma2 = 8.0 * PI * PI * p.phase_scale_sq() * n.s0() * w0.powi(3) * bracket;
            Ok(DephasingResult::new(
                sigma2,
                Some((sigma2, 0.0)),
                Method::ClosedForm,
            ))
        }
    }
}

/// Integration setup for [`sigma2_quadrature`].
#[derive(Debug, Clone)]
pub struct SpectralQuadrature {
    /// Upper integration limit; the remainder is covered by a tail bound.
    pub omega_max: f64,
    /// Extra interior split points (resonances).
    pub breakpoints: Vec<f64>,
    pub rel_tol: f64,
}

impl SpectralQuadrature {
    /// `Ω_max = 200·scale` where `scale` is the largest frequency in play.
    pub fn for_scale(scale: f64) -> Self {
        Self {
            omega_max: 200.0 * scale,
            breakpoints: Vec::new(),
            rel_tol: 1e-9,
        }
    }

    /// Setup for the inertial noise model, splitting at its resonances.
    pub fn for_noise(p: &InterferometerParams, n: &NoiseParams) -> Self {
        let mut q = Self::for_scale(p.omega0().max(n.omega0()));
        let g = n.gamma();
        let modes: Vec<f64> = match n.coupling() {
            Coupling::Coriolis { omega_r } => {
                let centre = (n.omega0() * n.omega0() + omega_r * omega_r).sqrt();
                vec![centre + omega_r.abs(), centre - omega_r.abs()]
            }
            _ => {
                let k = n.direct_k().unwrap_or(0.0);
                vec![
                    (n.omega0() * n.omega0() - k).sqrt(),
                    (n.omega0() * n.omega0() + k).sqrt(),
                ]
            }
        };
        for m in modes {
            for off in [-10.0, -1.0, 0.0, 1.0, 10.0] {
                q.breakpoints.push(m + off * g);
            }
        }
        q.breakpoints.push(p.omega0());
        q
    }
}

/// `σ² = 4(mA0/ħ)² ∫_ℝ [S_aa(ω) + sin2θ S̄(ω)] F0(ω) dω`, computed by
/// adaptive quadrature over `[0, Ω_max]` (the integrand is even) plus an
/// analytic bound on the remaining tail.
///
/// `spectra` returns `(S_aa, co-spectrum)` at a non-negative frequency and
/// is assumed to stay bounded by its values sampled beyond `Ω_max`.
pub fn sigma2_quadrature<F>(
    p: &InterferometerParams,
    spectra: F,
    setup: &SpectralQuadrature,
) -> Result<DephasingResult>
where
    F: Fn(f64) -> (f64, f64),
{
    let w0 = p.omega0();
    let w_max = setup.omega_max;
    if !(w_max > w0) {
        return Err(Error::InvalidBounds(format!(
            "omega_max {w_max} must exceed omega0 {w0}"
        )));
    }
    let sin2 = (2.0 * p.theta()).sin();
    let integrand = |w: f64| {
        let (s, sbar) = spectra(w);
        (s + sin2 * sbar) * transfer_f0(w, w0)
    };

    let mut points = vec![0.0, w_max];
    let mut octave = w0;
    while octave < w_max {
        points.push(octave);
        octave *= 2.0;
    }
    points.extend(
        setup
            .breakpoints
            .iter()
            .copied()
            .filter(|&b| b > 0.0 && b < w_max),
    );
    points.sort_by(f64::total_cmp);
    points.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * w_max);

    let opts = QuadOptions {
        rel_tol: setup.rel_tol,
        abs_tol: 0.0,
        max_intervals: 50_000,
    };
    let half = integrate(integrand, &points, opts)?;

    // Tail: |S + sin2θ S̄| ≤ sup, and F0 ≤ 4ω0⁴ / (ω²(ω² − ω0²)²).
    let sup = (0..=10)
        .map(|j| {
            let (s, sbar) = spectra(w_max * f64::from(1u32 << j));
            s.abs() + sbar.abs()
        })
        .fold(0.0, f64::max);
    let rho = w0 / w_max;
    let tail = sup * 4.0 * w0.powi(4) / (5.0 * w_max.powi(5) * (1.0 - rho * rho).powi(2));
    let tolerance = setup.rel_tol * half.value.abs();
    if tail > tolerance && tail > 0.0 {
        return Err(Error::QuadratureNotConverged {
            estimated_error: tail + half.error_estimate,
            tolerance,
        });
    }

    let sigma2 = 8.0 * p.phase_scale_sq() * half.value;
    Ok(DephasingResult::new(
        sigma2.max(0.0),
        None,
        Method::Quadrature,
    ))
}

/// [`sigma2_quadrature`] applied to the analytic inertial spectra.
pub fn sigma2_quadrature_inertial(
    p: &InterferometerParams,
    n: &NoiseParams,
) -> Result<DephasingResult> {
    let setup = SpectralQuadrature::for_noise(p, n);
    sigma2_quadrature(
        p,
        |w| {
            let s = cross_spectra_at(n, w);
            (s.sxx, s.co_spectrum())
        },
        &setup,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SnrResult {
    pub signal_phase: f64,
    pub sigma: f64,
    pub snr: f64,
}

/// Gravimeter signal-to-noise ratio `φ_diff / σ` with `σ` from [`sigma2_closed`].
pub fn snr(p: &InterferometerParams, n: &NoiseParams, g: f64) -> Result<SnrResult> {
    let sigma = sigma2_closed(p, n)?.sigma2.sqrt();
    if sigma == 0.0 {
        return Err(Error::NoiselessSnr);
    }
    let signal = signal_phase(p, g);
    Ok(SnrResult {
        signal_phase: signal,
        sigma,
        snr: signal / sigma,
    })
}

/// SNR at the optimal Bloch angle, where only the better normal mode
/// contributes: `(g cos θ / ω0²) √(D / (2 S0 ω0))`, `D = max(D₊, D₋)`.
pub fn snr_at_optimal_theta(p: &InterferometerParams, n: &NoiseParams, g: f64) -> Result<f64> {
    let k = n.require_direct("optimal-angle SNR defined only for direct coupling")?;
    let w0 = p.omega0();
    let (d_plus, d_minus) = lorentzian_denominators(w0, n, k);
    let d = d_plus.max(d_minus);
    if n.s0() == 0.0 {
        return Err(Error::NoiselessSnr);
    }
    Ok(g * p.theta().cos() / (w0 * w0) * (d / (2.0 * n.s0() * w0)).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Vary {
    Theta,
    K,
    Gamma,
}

impl std::str::FromStr for Vary {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "theta" => Ok(Vary::Theta),
            "k" => Ok(Vary::K),
            "gamma" => Ok(Vary::Gamma),
            other => Err(Error::invalid(
                "optimize.vary",
                format!("unknown parameter '{other}' (expected theta, k or gamma)"),
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Optimum {
    pub argmin: f64,
    pub min_sigma2: f64,
    /// The objective is constant over the bounds to 1e-12 relative.
    pub flat_objective: bool,
}

const SCAN_POINTS: usize = 65;
const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// Minimizes the closed-form `σ²` over one parameter within `bounds` by a
/// coarse scan followed by golden-section refinement.
pub fn optimize(
    p: &InterferometerParams,
    n: &NoiseParams,
    vary: Vary,
    bounds: (f64, f64),
) -> Result<Optimum> {
    let (lo, hi) = bounds;
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(Error::InvalidBounds(format!(
            "[{lo}, {hi}] is empty or not finite"
        )));
    }
    match vary {
        Vary::K => {
            n.require_direct("k optimisation requires direct coupling")?;
            let limit = n.omega0() * n.omega0();
            if !(lo > -limit && hi < limit) {
                return Err(Error::InvalidBounds(format!(
                    "k bounds must lie strictly within (-Omega0^2, Omega0^2) = (-{limit}, {limit})"
                )));
            }
        }
        Vary::Gamma if lo < 0.0 => {
            return Err(Error::InvalidBounds("gamma bounds must be >= 0".into()));
        }
        _ => {}
    }

    let objective = |x: f64| -> Result<f64> {
        let r = match vary {
            Vary::Theta => sigma2_closed(&p.with_theta(x)?, n)?,
            Vary::K => sigma2_closed(p, &n.with_coupling(Coupling::DirectCoupling { k: x })?)?,
            Vary::Gamma => sigma2_closed(p, &n.with_gamma(x)?)?,
        };
        Ok(r.sigma2)
    };

    let step = (hi - lo) / (SCAN_POINTS - 1) as f64;
    let xs: Vec<f64> = (0..SCAN_POINTS)
        .map(|i| {
            if i + 1 == SCAN_POINTS {
                hi
            } else {
                lo + step * i as f64
            }
        })
        .collect();
    let fs = xs
        .iter()
        .map(|&x| objective(x))
        .collect::<Result<Vec<_>>>()?;
    let (best, &fbest) = fs
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("scan is non-empty");
    let fmax = fs.iter().copied().fold(f64::MIN, f64::max);
    let flat = fmax - fbest <= 1e-12 * fmax.abs().max(f64::MIN_POSITIVE);
    if flat {
        return Ok(Optimum {
            argmin: xs[best],
            min_sigma2: fbest,
            flat_objective: true,
        });
    }

    let mut a = xs[best.saturating_sub(1)];
    let mut b = xs[(best + 1).min(SCAN_POINTS - 1)];
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = objective(c)?;
    let mut fd = objective(d)?;
    for _ in 0..200 {
        if (b - a).abs() <= 1e-14 * (1.0 + a.abs().max(b.abs())) {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = objective(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = objective(d)?;
        }
    }
    let mut candidates = vec![(xs[best], fbest), (c, fc), (d, fd)];
    let mid = 0.5 * (a + b);
    candidates.push((mid, objective(mid)?));
    let (argmin, min_sigma2) = candidates
        .into_iter()
        .min_by(|x, y| x.1.total_cmp(&y.1))
        .expect("non-empty");
    Ok(Optimum {
        argmin,
        min_sigma2,
        flat_objective: false,
    })
}
