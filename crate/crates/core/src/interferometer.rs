//! Noise-free interferometer geometry.
//!
//! Both arms oscillate harmonically in the trap, displaced in opposite
//! directions along the Bloch-axis direction `(cos θ, sin θ)`. The
//! differential trajectory over one trap period fixes the transfer functions
//! that map an acceleration noise spectrum onto phase variance.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Reduced Planck constant [J·s].
pub const HBAR_SI: f64 = 1.054_571_817e-34;

/// Relative distance to a removable singularity of `F0` below which the
/// series form is used.
pub const F0_SERIES_THRESHOLD: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InterferometerParams {
    /// Test mass [kg].
    m: f64,
    /// Trap angular frequency [rad/s].
    omega0: f64,
    /// Qubit–position coupling [N].
    gc: f64,
    /// Bloch-axis deflection angle [rad].
    theta: f64,
    hbar: f64,
}

impl InterferometerParams {
    pub fn new(m: f64, omega0: f64, gc: f64, theta: f64, hbar: f64) -> Result<Self> {
        if !(m > 0.0 && m.is_finite()) {
            return Err(Error::invalid("interferometer.m", "m must be > 0"));
        }
        if !(omega0 > 0.0 && omega0.is_finite()) {
            return Err(Error::invalid(
                "interferometer.omega0",
                "omega0 must be > 0",
            ));
        }
        if !(gc >= 0.0 && gc.is_finite()) {
            return Err(Error::invalid("interferometer.gc", "gc must be >= 0"));
        }
        if !theta.is_finite() {
            return Err(Error::invalid(
                "interferometer.theta",
                "theta must be finite",
            ));
        }
        if !(hbar > 0.0 && hbar.is_finite()) {
            return Err(Error::invalid("interferometer.hbar", "hbar must be > 0"));
        }
        Ok(Self {
            m,
            omega0,
            gc,
            theta,
            hbar,
        })
    }

    /// Normalized units: `m = ħ = 1`.
    pub fn normalized(omega0: f64, gc: f64, theta: f64) -> Result<Self> {
        Self::new(1.0, omega0, gc, theta, 1.0)
    }

    /// Normalized units with the coupling chosen so that `A0` equals `a0`.
    pub fn normalized_with_amplitude(omega0: f64, a0: f64, theta: f64) -> Result<Self> {
        Self::normalized(omega0, a0 * omega0 * omega0, theta)
    }

    pub fn m(&self) -> f64 {
        self.m
    }

    pub fn omega0(&self) -> f64 {
        self.omega0
    }

    pub fn gc(&self) -> f64 {
        self.gc
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    /// Oscillation amplitude `A0 = gc / (m ω0²)` [m].
    pub fn a0(&self) -> f64 {
        self.gc / (self.m * self.omega0 * self.omega0)
    }

    /// Interferometer period `2π/ω0` [s].
    pub fn period(&self) -> f64 {
        2.0 * PI / self.omega0
    }

    pub fn with_theta(self, theta: f64) -> Result<Self> {
        Self::new(self.m, self.omega0, self.gc, theta, self.hbar)
    }

    pub fn with_omega0(self, omega0: f64) -> Result<Self> {
        Self::new(self.m, omega0, self.gc, self.theta, self.hbar)
    }

    /// `(m A0 / ħ)²`, the common prefactor of every variance formula.
    pub(crate) fn phase_scale_sq(&self) -> f64 {
        let s = self.m * self.a0() / self.hbar;
        s * s
    }
}

/// Arm separation `(x₊ − x₋, y₊ − y₋)` at time `t` within one period.
pub fn differential_trajectory(p: &InterferometerParams, t: f64) -> (f64, f64) {
    let envelope = 2.0 * p.a0() * (1.0 - (p.omega0 * t).cos());
    let (s, c) = p.theta.sin_cos();
    (envelope * c, envelope * s)
}

/// Dimensionless transfer function `|∫₀^{2π/ω0} (1 − cos ω0 t) e^{iωt} dt|²` [s²].
///
/// Even in `omega`; the removable singularities at `0` and `±omega0` are
/// evaluated from their series expansions.
pub fn transfer_f0(omega: f64, omega0: f64) -> f64 {
    let x = omega.abs() / omega0;
    let plateau = 4.0 * PI * PI / (omega0 * omega0);
    if x < F0_SERIES_THRESHOLD {
        let y = PI * x;
        let sinc = 1.0 - y * y / 6.0;
        let den = 1.0 - x * x;
        plateau * sinc * sinc / (den * den)
    } else if (x - 1.0).abs() < F0_SERIES_THRESHOLD {
        let d = x - 1.0;
        let y = PI * d;
        let sinc = 1.0 - y * y / 6.0;
        let den = x * (x + 1.0);
        plateau * sinc * sinc / (den * den)
    } else {
        // sin²(πx) is 1-periodic; reducing first keeps the phase exact.
        let s = (PI * (x - x.round())).sin();
        let den = x * (x - 1.0) * (x + 1.0);
        4.0 * s * s / (omega0 * omega0 * den * den)
    }
}

/// Transfer-function values at one angular frequency [s²].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TransferMatrix {
    pub fxx: f64,
    pub fyy: f64,
    /// Also `F_yx`.
    pub fxy: f64,
}

pub fn transfer_matrix(p: &InterferometerParams, omega: f64) -> TransferMatrix {
    let a0 = p.a0();
    let scale = 4.0 * a0 * a0 * transfer_f0(omega, p.omega0);
    let (s, c) = p.theta.sin_cos();
    TransferMatrix {
        fxx: scale * c * c,
        fyy: scale * s * s,
        fxy: scale * s * c,
    }
}

/// Gravimeter signal `φ_diff = 2π m g A0 cos θ / (ħ ω0)` [rad].
pub fn signal_phase(p: &InterferometerParams, g: f64) -> f64 {
    2.0 * PI * p.m * g * p.a0() * p.theta.cos() / (p.hbar * p.omega0)
}
