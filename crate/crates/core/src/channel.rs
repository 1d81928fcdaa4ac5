//! Geometry-based stochastic mmWave channel over a uniform planar array.

use std::f64::consts::{FRAC_PI_4, PI};

use rand::Rng;
use rand_distr::StandardNormal;

use crate::config::SystemConfig;
use crate::linalg::{CMat, CVec, C64};
use crate::seed;

/// Departure angles of one propagation path, shared by all users.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RayAngles {
    pub azimuth: f64,
    pub elevation: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSet {
    /// `N_T × K`; column `k` is `h_k`.
    pub h: CMat,
    pub angles: Vec<RayAngles>,
    /// `K × N_ray` complex path gains `ρ_ki`.
    pub gains: CMat,
    pub seed: u64,
}

impl ChannelSet {
    pub fn n_users(&self) -> usize {
        self.h.ncols()
    }

    pub fn n_tx(&self) -> usize {
        self.h.nrows()
    }

    pub fn user(&self, k: usize) -> CVec {
        self.h.column(k).into_owned()
    }

    /// Array responses of every path, one unit-norm column per ray.
    pub fn ray_responses(&self, cfg: &SystemConfig) -> CMat {
        let cols: Vec<CVec> = self
            .angles
            .iter()
            .map(|a| array_response(a.azimuth, a.elevation, cfg))
            .collect();
        CMat::from_columns(&cols)
    }
}

/// Planar-array response toward `(azimuth, elevation)`. Antennas are
/// enumerated row-major over the `M × N_cols` grid; the result has unit norm.
pub fn array_response(azimuth: f64, elevation: f64, cfg: &SystemConfig) -> CVec {
    let (rows, cols) = cfg.array_dims();
    let n = rows * cols;
    let amp = 1.0 / (n as f64).sqrt();
    let k = 2.0 * PI * cfg.spacing_over_lambda;
    let row_step = azimuth.sin() * elevation.sin();
    let col_step = elevation.cos();
    CVec::from_fn(n, |idx, _| {
        let (m, c) = (idx / cols, idx % cols);
        C64::from_polar(amp, k * (m as f64 * row_step + c as f64 * col_step))
    })
}

/// Builds `h_k = √(N_T ε / N_ray) Σ_i ρ_ki u(θ_i, ϑ_i)` from explicit paths.
pub fn channel_from_rays(
    cfg: &SystemConfig,
    angles: Vec<RayAngles>,
    gains: CMat,
    seed: u64,
) -> ChannelSet {
    let n_rays = angles.len();
    let scale = (cfg.n_tx as f64 * cfg.path_gain() / n_rays as f64).sqrt();
    let responses: Vec<CVec> = angles
        .iter()
        .map(|a| array_response(a.azimuth, a.elevation, cfg))
        .collect();
    let mut h = CMat::zeros(cfg.n_tx, gains.nrows());
    for k in 0..gains.nrows() {
        let mut col = h.column_mut(k);
        for (i, u) in responses.iter().enumerate() {
            col.axpy(gains[(k, i)] * scale, u, C64::new(1.0, 0.0));
        }
    }
    ChannelSet {
        h,
        angles,
        gains,
        seed,
    }
}

/// Draws one channel realization: azimuths uniform on `[0, 2π)`, elevations
/// uniform on `[π/4, 3π/4]`, gains i.i.d. `CN(0, 1)`. Deterministic in `seed`.
pub fn sample_channel(cfg: &SystemConfig, seed: u64) -> ChannelSet {
    let mut rng = seed::rng(seed);
    let angles: Vec<RayAngles> = (0..cfg.n_rays)
        .map(|_| RayAngles {
            azimuth: rng.random_range(0.0..2.0 * PI),
            elevation: rng.random_range(FRAC_PI_4..=3.0 * FRAC_PI_4),
        })
        .collect();
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let gains = CMat::from_fn(cfg.n_users, cfg.n_rays, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        C64::new(re * s, im * s)
    });
    channel_from_rays(cfg, angles, gains, seed)
}
