//! Time-domain simulation of the apparatus.
//!
//! Fourth-order Runge–Kutta with the noise held at the average of its two
//! endpoint samples for both midpoint stages. Frequencies are angular.

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::noise_model::{Coupling, NoiseParams};

/// Upper bound on `dt · (fastest mode frequency)`.
pub const STABILITY_LIMIT: f64 = 0.1;

/// `(X, Y, vX, vY)`.
pub type State = [f64; 4];

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimConfig {
    pub dt: f64,
    pub n_steps: usize,
    /// Leading samples discarded; `None` means ten damping times, capped at half the run.
    pub burn_in: Option<usize>,
    pub seed: u64,
    pub record_noise: bool,
}

impl SimConfig {
    pub fn new(dt: f64, n_steps: usize, seed: u64) -> Self {
        Self {
            dt,
            n_steps,
            burn_in: None,
            seed,
            record_noise: false,
        }
    }

    pub fn burn_in_for(&self, n: &NoiseParams) -> usize {
        match self.burn_in {
            Some(b) => b,
            None => {
                let half = self.n_steps / 2;
                if n.gamma() > 0.0 {
                    let ten_tau = (10.0 / (n.gamma() * self.dt)).ceil();
                    if ten_tau < half as f64 {
                        return ten_tau as usize;
                    }
                }
                half
            }
        }
    }

    pub fn validate(&self, n: &NoiseParams) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::invalid("sim.dt", "must be positive and finite"));
        }
        if self.n_steps < 2 {
            return Err(Error::invalid("sim.n_steps", "must be at least 2"));
        }
        if self.burn_in_for(n) >= self.n_steps {
            return Err(Error::invalid(
                "sim.burn_in",
                "must be smaller than n_steps",
            ));
        }
        let fastest = n.max_mode_frequency();
        if self.dt * fastest >= STABILITY_LIMIT {
            return Err(Error::invalid(
                "sim.dt",
                format!(
                    "dt * max mode frequency = {} must be < {STABILITY_LIMIT}",
                    self.dt * fastest
                ),
            ));
        }
        Ok(())
    }
}

/// Gaussian white-noise generator with independent `X`/`Y` streams.
pub struct WhiteNoise {
    x: ChaCha8Rng,
    y: ChaCha8Rng,
    sigma: f64,
}

impl WhiteNoise {
    /// Per-sample standard deviation `√(2π S0 / dt)`.
    pub fn new(s0: f64, dt: f64, seed: u64) -> Self {
        let mut x = ChaCha8Rng::seed_from_u64(seed);
        let mut y = x.clone();
        x.set_stream(0);
        y.set_stream(1);
        Self {
            x,
            y,
            sigma: (2.0 * PI * s0 / dt).sqrt(),
        }
    }

    pub fn sample(&mut self) -> [f64; 2] {
        if self.sigma == 0.0 {
            return [0.0, 0.0];
        }
        let ax: f64 = StandardNormal.sample(&mut self.x);
        let ay: f64 = StandardNormal.sample(&mut self.y);
        [self.sigma * ax, self.sigma * ay]
    }
}

pub fn white_noise_series(s0: f64, dt: f64, n: usize, seed: u64) -> (Vec<f64>, Vec<f64>) {
    let mut src = WhiteNoise::new(s0, dt, seed);
    let mut ax = Vec::with_capacity(n);
    let mut ay = Vec::with_capacity(n);
    for _ in 0..n {
        let [a, b] = src.sample();
        ax.push(a);
        ay.push(b);
    }
    (ax, ay)
}

/// Accelerations `(Ẍ, Ÿ)` for a state under forcing `a`.
pub fn accelerations(n: &NoiseParams, s: &State, a: [f64; 2]) -> [f64; 2] {
    let [x, y, vx, vy] = *s;
    let w2 = n.omega0() * n.omega0();
    let g = n.gamma();
    match n.coupling() {
        Coupling::Uncoupled => [-w2 * x - g * vx + a[0], -w2 * y - g * vy + a[1]],
        Coupling::DirectCoupling { k } => [
            -w2 * x + k * y - g * vx + a[0],
            -w2 * y + k * x - g * vy + a[1],
        ],
        Coupling::Coriolis { omega_r } => [
            -w2 * x + 2.0 * omega_r * vy - g * vx + a[0],
            -w2 * y - 2.0 * omega_r * vx - g * vy + a[1],
        ],
    }
}

fn derivative(n: &NoiseParams, s: &State, a: [f64; 2]) -> State {
    let [ax, ay] = accelerations(n, s, a);
    [s[2], s[3], ax, ay]
}

fn shifted(s: &State, k: &State, h: f64) -> State {
    [
        s[0] + h * k[0],
        s[1] + h * k[1],
        s[2] + h * k[2],
        s[3] + h * k[3],
    ]
}

pub fn rk4_step(n: &NoiseParams, s: &State, a_now: [f64; 2], a_next: [f64; 2], dt: f64) -> State {
    let a_mid = [0.5 * (a_now[0] + a_next[0]), 0.5 * (a_now[1] + a_next[1])];
    let k1 = derivative(n, s, a_now);
    let k2 = derivative(n, &shifted(s, &k1, 0.5 * dt), a_mid);
    let k3 = derivative(n, &shifted(s, &k2, 0.5 * dt), a_mid);
    let k4 = derivative(n, &shifted(s, &k3, dt), a_next);
    let mut out = *s;
    for i in 0..4 {
        out[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    out
}

/// Runs the recurrence from rest and hands every sample `j` (state, its
/// acceleration and the forcing `A_j`) to `visit`.
pub fn run<F>(n: &NoiseParams, c: &SimConfig, mut visit: F) -> Result<()>
where
    F: FnMut(usize, &State, [f64; 2], [f64; 2]),
{
    c.validate(n)?;
    let mut noise = WhiteNoise::new(n.s0(), c.dt, c.seed);
    let mut state: State = [0.0; 4];
    let mut a_now = noise.sample();
    for j in 0..c.n_steps {
        visit(j, &state, accelerations(n, &state, a_now), a_now);
        if j + 1 < c.n_steps {
            let a_next = noise.sample();
            state = rk4_step(n, &state, a_now, a_next, c.dt);
            a_now = a_next;
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrajectoryRecord {
    pub dt: f64,
    pub t: Vec<f64>,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub vx: Vec<f64>,
    pub vy: Vec<f64>,
    pub ax: Vec<f64>,
    pub ay: Vec<f64>,
    /// Injected forcing, when recorded.
    pub noise: Option<(Vec<f64>, Vec<f64>)>,
}

impl TrajectoryRecord {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }
}

/// Simulates from rest and keeps samples after the burn-in, at `t_j = j·dt`.
pub fn simulate(n: &NoiseParams, c: &SimConfig) -> Result<TrajectoryRecord> {
    c.validate(n)?;
    let burn = c.burn_in_for(n);
    let kept = c.n_steps - burn;
    let alloc = || Vec::with_capacity(kept);
    let mut rec = TrajectoryRecord {
        dt: c.dt,
        t: alloc(),
        x: alloc(),
        y: alloc(),
        vx: alloc(),
        vy: alloc(),
        ax: alloc(),
        ay: alloc(),
        noise: c.record_noise.then(|| (alloc(), alloc())),
    };
    run(n, c, |j, s, acc, forcing| {
        if j < burn {
            return;
        }
        rec.t.push(j as f64 * c.dt);
        rec.x.push(s[0]);
        rec.y.push(s[1]);
        rec.vx.push(s[2]);
        rec.vy.push(s[3]);
        rec.ax.push(acc[0]);
        rec.ay.push(acc[1]);
        if let Some((nx, ny)) = rec.noise.as_mut() {
            nx.push(forcing[0]);
            ny.push(forcing[1]);
        }
    })?;
    Ok(rec)
}

/// Noise accelerations on the test mass, `δa = −(Ẍ, Ÿ)`.
pub fn acceleration_series(rec: &TrajectoryRecord) -> (Vec<f64>, Vec<f64>) {
    (
        rec.ax.iter().map(|a| -a).collect(),
        rec.ay.iter().map(|a| -a).collect(),
    )
}

/// Noise accelerations only, without storing the full trajectory.
pub fn simulate_accelerations(n: &NoiseParams, c: &SimConfig) -> Result<(Vec<f64>, Vec<f64>)> {
    let burn = c.burn_in_for(n);
    let kept = c.n_steps.saturating_sub(burn);
    let (mut dx, mut dy) = (Vec::with_capacity(kept), Vec::with_capacity(kept));
    run(n, c, |j, _, acc, _| {
        if j >= burn {
            dx.push(-acc[0]);
            dy.push(-acc[1]);
        }
    })?;
    Ok((dx, dy))
}
