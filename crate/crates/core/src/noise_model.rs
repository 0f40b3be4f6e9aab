//! Spectral theory of the vibrating apparatus.
//!
//! The apparatus is a damped 2-D oscillator driven by isotropic white
//! noise, with either a direct `kXY` coupling or a Coriolis coupling between
//! the axes. All spectra use the two-sided angular-frequency convention
//! `E[a(t₁)a(t₂)] = ∫ S(ω) e^{−iω(t₂−t₁)} dω`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::log_grid_per_decade;

pub const CONVENTION: &str = "two-sided, angular-frequency, correlation = ∫S e^{−iωτ}dω";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum Coupling {
    Uncoupled,
    /// `H = kXY`, `k` in rad²/s².
    DirectCoupling {
        k: f64,
    },
    /// Coriolis rate `Ω_r` in rad/s.
    Coriolis {
        omega_r: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseParams {
    omega0: f64,
    gamma: f64,
    s0: f64,
    coupling: Coupling,
}

impl NoiseParams {
    /// `omega0` is the apparatus frequency Ω₀, `s0` the white-noise level.
    pub fn new(omega0: f64, gamma: f64, s0: f64, coupling: Coupling) -> Result<Self> {
        if !(omega0 > 0.0 && omega0.is_finite()) {
            return Err(Error::invalid("noise.Omega0", "Omega0 must be > 0"));
        }
        if !(gamma >= 0.0 && gamma.is_finite()) {
            return Err(Error::invalid("noise.gamma", "gamma must be >= 0"));
        }
        if !(s0 >= 0.0 && s0.is_finite()) {
            return Err(Error::invalid("noise.S0", "S0 must be >= 0"));
        }
        match coupling {
            Coupling::DirectCoupling { k } if !(k.abs() < omega0 * omega0) => {
                return Err(Error::invalid("noise.k", "|k| must be < Omega0^2"));
            }
            Coupling::Coriolis { omega_r } if !omega_r.is_finite() => {
                return Err(Error::invalid("noise.Omega_r", "Omega_r must be finite"));
            }
            _ => {}
        }
        Ok(Self {
            omega0,
            gamma,
            s0,
            coupling,
        })
    }

    pub fn direct(omega0: f64, gamma: f64, s0: f64, k: f64) -> Result<Self> {
        Self::new(omega0, gamma, s0, Coupling::DirectCoupling { k })
    }

    pub fn coriolis(omega0: f64, gamma: f64, s0: f64, omega_r: f64) -> Result<Self> {
        Self::new(omega0, gamma, s0, Coupling::Coriolis { omega_r })
    }

    pub fn omega0(&self) -> f64 {
        self.omega0
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn s0(&self) -> f64 {
        self.s0
    }

    pub fn coupling(&self) -> Coupling {
        self.coupling
    }

    /// Direct coupling constant; `Uncoupled` counts as `k = 0`.
    pub fn direct_k(&self) -> Option<f64> {
        match self.coupling {
            Coupling::Uncoupled => Some(0.0),
            Coupling::DirectCoupling { k } => Some(k),
            Coupling::Coriolis { .. } => None,
        }
    }

    pub(crate) fn require_direct(&self, what: &'static str) -> Result<f64> {
        self.direct_k().ok_or(Error::WrongVariant(what))
    }

    pub fn with_gamma(self, gamma: f64) -> Result<Self> {
        Self::new(self.omega0, gamma, self.s0, self.coupling)
    }

    pub fn with_s0(self, s0: f64) -> Result<Self> {
        Self::new(self.omega0, self.gamma, s0, self.coupling)
    }

    pub fn with_coupling(self, coupling: Coupling) -> Result<Self> {
        Self::new(self.omega0, self.gamma, self.s0, coupling)
    }

    /// Largest undamped mode frequency; used for step-size guards.
    pub fn max_mode_frequency(&self) -> f64 {
        match self.coupling {
            Coupling::Uncoupled => self.omega0,
            Coupling::DirectCoupling { k } => (self.omega0 * self.omega0 + k.abs()).sqrt(),
            Coupling::Coriolis { omega_r } => self.omega0 + 2.0 * omega_r.abs(),
        }
    }
}

/// 2×2 complex matrix, row-major.
pub type Matrix2 = [[Complex64; 2]; 2];

/// Off-diagonal entries `(T₁₂, T₂₁)` of the dynamical matrix at complex ω.
fn off_diagonal(n: &NoiseParams, omega: Complex64) -> (Complex64, Complex64) {
    match n.coupling {
        Coupling::Uncoupled => (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)),
        Coupling::DirectCoupling { k } => (Complex64::new(k, 0.0), Complex64::new(k, 0.0)),
        Coupling::Coriolis { omega_r } => {
            let c = Complex64::i() * omega * (2.0 * omega_r);
            (c, -c)
        }
    }
}

fn diagonal(n: &NoiseParams, omega: Complex64) -> Complex64 {
    n.omega0 * n.omega0 - omega * omega + Complex64::i() * omega * n.gamma
}

/// `det T` at a complex frequency; zero exactly at the poles.
pub fn det_t(n: &NoiseParams, omega: Complex64) -> Complex64 {
    let a = diagonal(n, omega);
    let (t12, t21) = off_diagonal(n, omega);
    a * a - t12 * t21
}

/// Mechanical susceptibility `χ(ω) = T / det T`, mapping forcing to displacement.
pub fn susceptibility(n: &NoiseParams, omega: f64) -> Matrix2 {
    let w = Complex64::new(omega, 0.0);
    let a = diagonal(n, w);
    let (t12, t21) = off_diagonal(n, w);
    let det = a * a - t12 * t21;
    [[a / det, t12 / det], [t21 / det, a / det]]
}

/// Acceleration auto- and cross-spectra at one frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralPoint {
    pub sxx: f64,
    pub syy: f64,
    pub sxy: Complex64,
}

impl SpectralPoint {
    /// Real part of the cross-spectrum.
    pub fn co_spectrum(&self) -> f64 {
        self.sxy.re
    }
}

/// Closed-form `ω⁴ S₀ χχ†` at one frequency.
pub fn cross_spectra_at(n: &NoiseParams, omega: f64) -> SpectralPoint {
    let w2 = omega * omega;
    let detune = n.omega0 * n.omega0 - w2;
    let damp2 = w2 * n.gamma * n.gamma;
    let scale = w2 * w2 * n.s0;
    match n.coupling {
        Coupling::Uncoupled | Coupling::DirectCoupling { .. } => {
            let k = n.direct_k().unwrap_or(0.0);
            let d_minus = (detune - k) * (detune - k) + damp2;
            let d_plus = (detune + k) * (detune + k) + damp2;
            let det2 = d_minus * d_plus;
            let s = scale * (detune * detune + damp2 + k * k) / det2;
            let c = scale * 2.0 * k * detune / det2;
            SpectralPoint {
                sxx: s,
                syy: s,
                sxy: Complex64::new(c, 0.0),
            }
        }
        Coupling::Coriolis { omega_r } => {
            let rot2 = 4.0 * w2 * omega_r * omega_r;
            let re_det = detune * detune - damp2 - rot2;
            let im_det = 2.0 * omega * n.gamma * detune;
            let det2 = re_det * re_det + im_det * im_det;
            let s = scale * (detune * detune + damp2 + rot2) / det2;
            let q = scale * 4.0 * omega * omega_r * detune / det2;
            SpectralPoint {
                sxx: s,
                syy: s,
                sxy: Complex64::new(0.0, q),
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrossSpectralMatrix {
    pub omega: Vec<f64>,
    pub sxx: Vec<f64>,
    pub syy: Vec<f64>,
    pub sxy: Vec<Complex64>,
    pub convention: &'static str,
}

pub fn analytic_cross_spectra(n: &NoiseParams, grid: &[f64]) -> CrossSpectralMatrix {
    let points: Vec<_> = grid.iter().map(|&w| cross_spectra_at(n, w)).collect();
    CrossSpectralMatrix {
        omega: grid.to_vec(),
        sxx: points.iter().map(|p| p.sxx).collect(),
        syy: points.iter().map(|p| p.syy).collect(),
        sxy: points.iter().map(|p| p.sxy).collect(),
        convention: CONVENTION,
    }
}

/// Position PSDs `(S_UU, S_VV)` of the normal modes `U, V = (X ± Y)/√2`.
pub fn normal_mode_spectra(n: &NoiseParams, omega: f64) -> Result<(f64, f64)> {
    let k = n.require_direct("normal modes defined only for direct coupling")?;
    let w2 = omega * omega;
    let damp2 = w2 * n.gamma * n.gamma;
    let du = n.omega0 * n.omega0 - k - w2;
    let dv = n.omega0 * n.omega0 + k - w2;
    Ok((n.s0 / (du * du + damp2), n.s0 / (dv * dv + damp2)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoleSet {
    /// `ω₁, ω₂` (U mode) then `ω₃, ω₄` (V mode).
    pub poles: [Complex64; 4],
}

pub fn poles(n: &NoiseParams) -> Result<PoleSet> {
    let k = n.require_direct("poles defined only for direct coupling")?;
    let g = n.gamma;
    let pair = |stiffness: f64| {
        let root = Complex64::new(4.0 * stiffness - g * g, 0.0).sqrt() * 0.5;
        let centre = Complex64::new(0.0, 0.5 * g);
        (centre + root, centre - root)
    };
    let (w1, w2) = pair(n.omega0 * n.omega0 - k);
    let (w3, w4) = pair(n.omega0 * n.omega0 + k);
    Ok(PoleSet {
        poles: [w1, w2, w3, w4],
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PeakDetection {
    Analytic,
    GridSearch,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PeakInfo {
    pub peak_frequencies: Vec<f64>,
    /// `None` when `γ = 0`.
    pub q_factors: Vec<Option<f64>>,
    pub detection: PeakDetection,
}

/// The analytic damped-frequency reading and the grid-located maxima of
/// `S_aa` are reported side by side; they disagree in the overdamped regime.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PeakReport {
    pub analytic: PeakInfo,
    pub grid_search: PeakInfo,
}

/// Default grid for [`peaks_and_q`]: 2048 log points per decade over
/// `[1e-2 Ω₀, 1e2 Ω₀]`.
pub fn default_peak_grid(omega0: f64) -> Vec<f64> {
    log_grid_per_decade(1e-2 * omega0, 1e2 * omega0, 2048)
}

pub fn peaks_and_q(n: &NoiseParams, grid: &[f64]) -> Result<PeakReport> {
    let k = n.require_direct("peaks defined only for direct coupling")?;
    let g = n.gamma;
    let q = |peak: f64| (g > 0.0).then(|| peak / g);

    let mut analytic = Vec::new();
    for stiffness in [n.omega0 * n.omega0 - k, n.omega0 * n.omega0 + k] {
        let radicand = stiffness - g * g / 4.0;
        if radicand > 0.0 {
            let peak = radicand.sqrt();
            let duplicate = analytic
                .iter()
                .any(|&p: &f64| (p - peak).abs() <= 1e-12 * peak);
            if !duplicate {
                analytic.push(peak);
            }
        }
    }

    let sxx: Vec<f64> = grid.iter().map(|&w| cross_spectra_at(n, w).sxx).collect();
    let located: Vec<f64> = (1..sxx.len().saturating_sub(1))
        .filter(|&i| sxx[i] > sxx[i - 1] && sxx[i] > sxx[i + 1])
        .map(|i| grid[i])
        .collect();

    Ok(PeakReport {
        analytic: PeakInfo {
            q_factors: analytic.iter().map(|&p| q(p)).collect(),
            peak_frequencies: analytic,
            detection: PeakDetection::Analytic,
        },
        grid_search: PeakInfo {
            q_factors: located.iter().map(|&p| q(p)).collect(),
            peak_frequencies: located,
            detection: PeakDetection::GridSearch,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn fig3(gamma: f64) -> NoiseParams {
        NoiseParams::direct(1.0, gamma, 1.0, 0.9).unwrap()
    }

    #[test]
    fn construction_rejects_supercritical_k() {
        let err = NoiseParams::direct(1.0, 0.1, 1.0, 1.0).unwrap_err();
        assert_eq!(err.to_string(), "noise.k: |k| must be < Omega0^2");
        assert!(NoiseParams::direct(2.0, 0.1, 1.0, -3.9).is_ok());
        assert!(NoiseParams::direct(1.0, -0.1, 1.0, 0.0).is_err());
        assert!(NoiseParams::direct(1.0, 0.1, -1.0, 0.0).is_err());
    }

    #[test]
    fn susceptibility_static_limits() {
        let chi = susceptibility(&fig3(0.37), 0.0);
        assert_relative_eq!(chi[0][0].re, 1.0 / 0.19, max_relative = 1e-14);
        assert_relative_eq!(chi[0][1].re, 0.9 / 0.19, max_relative = 1e-14);
        assert_relative_eq!(chi[0][0].re, 5.2632, epsilon = 1e-4);
        assert_relative_eq!(chi[1][0].re, 4.7368, epsilon = 1e-4);

        let n = NoiseParams::direct(2.0, 0.1, 1.0, 0.0).unwrap();
        let chi = susceptibility(&n, 0.0);
        assert_relative_eq!(chi[0][0].re, 0.25);
        assert_eq!(chi[0][1], Complex64::new(0.0, 0.0));

        let n = NoiseParams::coriolis(2.0, 0.1, 1.0, 0.3).unwrap();
        let chi = susceptibility(&n, 0.0);
        assert_relative_eq!(chi[1][1].re, 0.25);
        assert_eq!(chi[0][1].norm(), 0.0);
    }

    #[test]
    #[allow(clippy::needless_range_loop)]
    fn susceptibility_inverts_equations_of_motion() {
        // Frequency-domain equations of motion M·(X, Y) = (A_X, A_Y).
        let w = 0.8;
        let a = Complex64::new(1.0 - w * w, w * 0.2);
        let k = 0.9;
        let direct: Matrix2 = [[a, (-k).into()], [(-k).into(), a]];
        let rot = Complex64::new(0.0, 2.0 * w * 0.15);
        let coriolis: Matrix2 = [[a, -rot], [rot, a]];
        for (n, m) in [
            (fig3(0.2), direct),
            (
                NoiseParams::coriolis(1.0, 0.2, 1.0, 0.15).unwrap(),
                coriolis,
            ),
        ] {
            let chi = susceptibility(&n, w);
            for i in 0..2 {
                for j in 0..2 {
                    let v = m[i][0] * chi[0][j] + m[i][1] * chi[1][j];
                    let expect = if i == j { 1.0 } else { 0.0 };
                    assert!((v - expect).norm() < 1e-12, "{i}{j}: {v}");
                }
            }
        }
    }

    #[test]
    fn closed_form_matches_chi_chi_dagger() {
        for n in [
            fig3(0.05),
            fig3(1.5),
            NoiseParams::coriolis(1.3, 0.2, 2.0, 0.4).unwrap(),
        ] {
            for &w in &[0.05, 0.3, 1.0, 1.37, 4.0] {
                let chi = susceptibility(&n, w);
                let s = n.s0() * w.powi(4);
                let xx = s * (chi[0][0].norm_sqr() + chi[0][1].norm_sqr());
                let xy = (chi[0][0] * chi[1][0].conj() + chi[0][1] * chi[1][1].conj()) * s;
                let p = cross_spectra_at(&n, w);
                assert_relative_eq!(p.sxx, xx, max_relative = 1e-11);
                assert!((p.sxy - xy).norm() <= 1e-11 * xx);
            }
        }
    }

    #[test]
    fn spectra_examples() {
        let n = fig3(0.01);
        let p = cross_spectra_at(&n, 1.0);
        assert_eq!(p.sxy.re, 0.0);
        assert_relative_eq!(p.sxx, 0.8101 / (0.8101 * 0.8101), max_relative = 1e-12);
        assert_relative_eq!(p.sxx, 1.23442, epsilon = 1e-5);

        // ω⁴ at low frequency, S₀ at high frequency.
        let lo1 = cross_spectra_at(&n, 1e-3).sxx;
        let lo2 = cross_spectra_at(&n, 2e-3).sxx;
        assert_relative_eq!(lo2 / lo1, 16.0, max_relative = 1e-4);
        assert_relative_eq!(cross_spectra_at(&n, 1e4).sxx, 1.0, max_relative = 1e-6);
    }

    #[test]
    fn co_spectrum_sign_change_at_omega0() {
        let n = fig3(0.1);
        for &w in &[0.1, 0.5, 0.99] {
            assert!(cross_spectra_at(&n, w).co_spectrum() > 0.0);
        }
        for &w in &[1.01, 1.5, 10.0] {
            assert!(cross_spectra_at(&n, w).co_spectrum() < 0.0);
        }
    }

    #[test]
    fn coriolis_co_spectrum_vanishes() {
        let n = NoiseParams::coriolis(1.0, 0.1, 1.0, 0.2).unwrap();
        let grid = default_peak_grid(1.0);
        let m = analytic_cross_spectra(&n, &grid);
        assert!(m.sxy.iter().all(|c| c.re == 0.0));
        assert!(m.sxy.iter().any(|c| c.im != 0.0));
    }

    #[test]
    fn normal_modes() {
        let n = NoiseParams::direct(1.0, 0.2, 1.0, 0.0).unwrap();
        for &w in &[0.1, 1.0, 3.0] {
            let (u, v) = normal_mode_spectra(&n, w).unwrap();
            assert_eq!(u, v);
        }
        let n = fig3(0.01);
        let (u, _) = normal_mode_spectra(&n, 0.1f64.sqrt()).unwrap();
        assert_relative_eq!(u, 1e5, max_relative = 1e-12);

        let cor = NoiseParams::coriolis(1.0, 0.2, 1.0, 0.1).unwrap();
        let err = normal_mode_spectra(&cor, 1.0).unwrap_err();
        assert_eq!(
            err.to_string(),
            "normal modes defined only for direct coupling"
        );
    }

    #[test]
    fn pole_examples() {
        let p = poles(&fig3(0.01)).unwrap().poles;
        assert_relative_eq!(p[0].re, 0.316188, epsilon = 1e-6);
        assert_relative_eq!(p[0].im, 0.005, epsilon = 1e-15);
        assert_relative_eq!(p[2].re, 1.378396, epsilon = 1e-6);
        assert_relative_eq!(p[2].im, 0.005, epsilon = 1e-15);

        let p = poles(&NoiseParams::direct(1.5, 0.0, 1.0, 0.0).unwrap())
            .unwrap()
            .poles;
        assert_eq!(p[0], Complex64::new(1.5, 0.0));
        assert_eq!(p[1], Complex64::new(-1.5, 0.0));
        assert_eq!(p[2], p[0]);

        // Overdamped U pair sits on the positive imaginary axis.
        let p = poles(&fig3(1.5)).unwrap().poles;
        assert_eq!((p[0].re, p[1].re), (0.0, 0.0));
        assert!(p[0].im > 0.0 && p[1].im > 0.0);
    }

    #[test]
    fn poles_are_roots_of_det() {
        for gamma in [0.01, 0.3, 1.5] {
            for k in [-0.9, 0.0, 0.5, 0.9] {
                let n = NoiseParams::direct(1.0, gamma, 1.0, k).unwrap();
                let set = poles(&n).unwrap();
                for w in set.poles {
                    assert!(det_t(&n, w).norm() < 1e-9, "γ={gamma} k={k} ω={w}");
                    // Quadruplet symmetry ω → −ω*.
                    let mirror = -w.conj();
                    assert!(set.poles.iter().any(|p| (p - mirror).norm() < 1e-12));
                }
                if gamma * gamma < 4.0 * (1.0 - k.abs()) {
                    assert!(set.poles.iter().all(|p| (p.im - gamma / 2.0).abs() < 1e-15));
                }
            }
        }
    }

    #[test]
    fn peak_examples() {
        let r = peaks_and_q(&fig3(0.01), &default_peak_grid(1.0)).unwrap();
        let a = &r.analytic;
        assert_eq!(a.peak_frequencies.len(), 2);
        assert_relative_eq!(a.peak_frequencies[0], 0.316188, epsilon = 1e-6);
        assert_relative_eq!(a.peak_frequencies[1], 1.378396, epsilon = 1e-6);
        assert_relative_eq!(a.q_factors[0].unwrap(), 31.62, epsilon = 5e-3);
        assert_relative_eq!(a.q_factors[1].unwrap(), 137.84, epsilon = 5e-3);
        assert_eq!(r.grid_search.peak_frequencies.len(), 2);
        for (g, a) in r
            .grid_search
            .peak_frequencies
            .iter()
            .zip(&a.peak_frequencies)
        {
            assert!((g / a - 1.0).abs() < 2e-3);
        }

        // Heavy damping: one analytic entry survives, no visible resonance.
        let r = peaks_and_q(&fig3(1.5), &default_peak_grid(1.0)).unwrap();
        assert_eq!(r.analytic.peak_frequencies.len(), 1);
        assert_relative_eq!(r.analytic.peak_frequencies[0], 1.156, epsilon = 1e-3);
        assert!(r.grid_search.peak_frequencies.is_empty());

        // Degenerate, undamped.
        let n = NoiseParams::direct(1.0, 0.0, 1.0, 0.0).unwrap();
        let r = peaks_and_q(&n, &[0.5, 1.0, 1.5]).unwrap();
        assert_eq!(r.analytic.peak_frequencies, vec![1.0]);
        assert_eq!(r.analytic.q_factors, vec![None]);

        let n = NoiseParams::direct(1.0, 0.0, 1.0, 0.5).unwrap();
        let r = peaks_and_q(&n, &[]).unwrap();
        assert_eq!(
            r.analytic.peak_frequencies,
            vec![0.5f64.sqrt(), 1.5f64.sqrt()]
        );
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn any_noise() -> impl Strategy<Value = NoiseParams> {
            (
                0.2f64..3.0,
                0.0f64..2.0,
                0.0f64..5.0,
                -0.99f64..0.99,
                -1.0f64..1.0,
                any::<bool>(),
            )
                .prop_map(|(o, g, s, kf, r, cor)| {
                    if cor {
                        NoiseParams::coriolis(o, g, s, r).unwrap()
                    } else {
                        NoiseParams::direct(o, g, s, kf * o * o).unwrap()
                    }
                })
        }

        proptest! {
            #[test]
            fn hermitian_and_schwarz(n in any_noise(), w in 0.0f64..20.0) {
                let p = cross_spectra_at(&n, w);
                let m = cross_spectra_at(&n, -w);
                prop_assert!(p.sxx >= 0.0 && p.syy >= 0.0);
                prop_assert_eq!(m.sxy, p.sxy.conj());
                prop_assert!(p.sxy.norm() <= (p.sxx * p.syy).sqrt() * (1.0 + 1e-12));
            }

            #[test]
            fn normal_mode_reconstruction(o in 0.2f64..3.0, g in 0.001f64..2.0, kf in -0.99f64..0.99, w in 0.01f64..10.0) {
                let n = NoiseParams::direct(o, g, 1.3, kf * o * o).unwrap();
                let (u, v) = normal_mode_spectra(&n, w).unwrap();
                let p = cross_spectra_at(&n, w);
                let w4 = w.powi(4);
                prop_assert!((w4 * (u + v) / 2.0 - p.sxx).abs() <= 1e-12 * p.sxx);
                prop_assert!((w4 * (u - v) / 2.0 - p.sxy.re).abs() <= 1e-12 * p.sxx);
            }
        }
    }
}
