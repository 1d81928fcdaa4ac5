//! Per-user SINR rates and the sum rate.

use crate::channel::ChannelSet;
use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::linalg::CMat;
use crate::precoder::Precoder;

/// Signal and interference-plus-noise seen by each user.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkBudget {
    pub signal: Vec<f64>,
    /// `Σ_{j≠k} |h_kᴴ b_j|² + σ²`.
    pub interference_noise: Vec<f64>,
}

/// Evaluates `|h_kᴴ b_j|²` for all pairs through `G = Hᴴ B`.
pub fn link_budget(h: &CMat, b: &CMat, noise: f64) -> LinkBudget {
    let g = h.adjoint() * b;
    let k = g.nrows();
    let mut signal = Vec::with_capacity(k);
    let mut interference_noise = Vec::with_capacity(k);
    for user in 0..k {
        let total: f64 = g.row(user).iter().map(|z| z.norm_sqr()).sum();
        let s = g[(user, user)].norm_sqr();
        signal.push(s);
        interference_noise.push((total - s).max(0.0) + noise);
    }
    LinkBudget {
        signal,
        interference_noise,
    }
}

/// Per-user rates in bit/s for an effective precoder `b` (`N_T × K`).
pub fn rates(h: &CMat, b: &CMat, cfg: &SystemConfig) -> Vec<f64> {
    let lb = link_budget(h, b, cfg.noise_power_w());
    lb.signal
        .iter()
        .zip(&lb.interference_noise)
        .map(|(s, d)| cfg.bandwidth_hz * (s / d).ln_1p() / std::f64::consts::LN_2)
        .collect()
}

/// Rate of user `k` in bit/s.
pub fn user_rate(
    ch: &ChannelSet,
    precoder: &impl Precoder,
    k: usize,
    cfg: &SystemConfig,
) -> Result<f64> {
    if k >= ch.n_users() {
        return Err(Error::UserIndex {
            index: k,
            users: ch.n_users(),
        });
    }
    Ok(rates(&ch.h, &precoder.effective(), cfg)[k])
}

/// Sum of the per-user rates, bit/s.
pub fn sum_rate(ch: &ChannelSet, precoder: &impl Precoder, cfg: &SystemConfig) -> f64 {
    rates(&ch.h, &precoder.effective(), cfg).iter().sum()
}
