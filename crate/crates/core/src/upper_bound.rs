//! Fully-digital energy-efficiency ascent.
//!
//! Replacing `B_RF B_BB` by an unconstrained digital precoder `B` gives the
//! relaxed efficiency `η̄(B) = R̄(B) / P̄(B)`, whose maximizer upper-bounds what
//! any hybrid factorization can reach. Stationary points satisfy
//! `φ_k⁻¹ ψ_k b_k = b_k` for every user, where the real gradient with respect
//! to column `b_k` is `(ψ_k − φ_k) b_k / P̄²` with
//!
//! ```text
//! c   = P̄ − ρ R̄                      (ρ: Watt per bit/s of coding + baseband work)
//! φ_k = (2R̄/α) I + 2c·(W/ln2) Σ_{i≠k} S_i / (δ_i (S_i + δ_i)) · h_i h_iᴴ
//! ψ_k = 2c·(W/ln2) · h_k h_kᴴ / (S_k + δ_k)
//! ```
//!
//! `S_i = |h_iᴴ b_i|²` and `δ_i = Σ_{j≠i} |h_iᴴ b_j|² + σ²`. The ascent moves
//! every column toward `φ_k⁻¹ ψ_k b_k` with a shared step length picked from
//! a grid that includes zero, so the efficiency never decreases.

use crate::channel::ChannelSet;
use crate::config::{Structure, SystemConfig};
use crate::error::{Error, Result};
use crate::linalg::{frob2, hermitian_cholesky, CMat, CVec, C64};
use crate::power::{phone_complexity, PowerModel};
use crate::precoder::DigitalPrecoder;
use crate::rate::link_budget;
use crate::seed;
use rand::Rng;
use rand_distr::StandardNormal;
use std::f64::consts::LN_2;

/// Relaxed-problem state at one iterate.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationState {
    /// Per-user rates, bit/s.
    pub rates: Vec<f64>,
    pub p_total: f64,
    pub ee: f64,
    pub iter: usize,
}

impl IterationState {
    pub fn sum_rate(&self) -> f64 {
        self.rates.iter().sum()
    }
}

/// One line of the ascent diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AscentRecord {
    pub iter: usize,
    pub ee: f64,
    pub step_norm: f64,
    pub mu: f64,
}

#[derive(Debug, Clone)]
pub struct DigitalOutcome {
    pub precoder: DigitalPrecoder,
    pub state: IterationState,
    pub trace: Vec<AscentRecord>,
    /// False when `max_iters` was hit with the last step still above `ε1`.
    pub converged: bool,
}

/// The relaxed objective bound to one channel draw.
#[derive(Debug, Clone)]
pub struct RelaxedObjective<'a> {
    h: &'a CMat,
    model: PowerModel,
    noise: f64,
    /// `W / ln 2`.
    rate_scale: f64,
}

/// Per-user quantities shared by the stationarity matrices.
struct Terms {
    signal: Vec<f64>,
    denom: Vec<f64>,
    /// `c = P̄ − ρ R̄`.
    non_rate_power: f64,
    sum_rate: f64,
    p_total: f64,
}

impl<'a> RelaxedObjective<'a> {
    /// Power accounting is that of the partially-connected transmitter
    /// running the two-stage optimizer.
    pub fn new(ch: &'a ChannelSet, cfg: &'a SystemConfig) -> Result<Self> {
        let model = PowerModel::new(cfg, Structure::Partial, phone_complexity(cfg))?;
        Ok(RelaxedObjective {
            h: &ch.h,
            model,
            noise: cfg.noise_power_w(),
            rate_scale: cfg.bandwidth_hz / LN_2,
        })
    }

    pub fn model(&self) -> &PowerModel {
        &self.model
    }

    pub fn state(&self, b: &CMat, iter: usize) -> IterationState {
        let lb = link_budget(self.h, b, self.noise);
        let rates: Vec<f64> = lb
            .signal
            .iter()
            .zip(&lb.interference_noise)
            .map(|(s, d)| self.rate_scale * (s / d).ln_1p())
            .collect();
        let sum: f64 = rates.iter().sum();
        let p_total = self.model.total(frob2(b), sum);
        IterationState {
            rates,
            p_total,
            ee: sum / p_total,
            iter,
        }
    }

    pub fn ee(&self, b: &CMat) -> f64 {
        self.state(b, 0).ee
    }

    fn terms(&self, b: &CMat) -> Terms {
        let lb = link_budget(self.h, b, self.noise);
        let sum_rate: f64 = lb
            .signal
            .iter()
            .zip(&lb.interference_noise)
            .map(|(s, d)| self.rate_scale * (s / d).ln_1p())
            .sum();
        let p = frob2(b);
        Terms {
            non_rate_power: self.model.inv_alpha * p + self.model.static_w,
            p_total: self.model.total(p, sum_rate),
            signal: lb.signal,
            denom: lb.interference_noise,
            sum_rate,
        }
    }

    /// Interference weight `S_i / (δ_i (S_i + δ_i))` scaled by `2c·W/ln2`.
    fn interference_weights(&self, t: &Terms) -> Vec<f64> {
        let c = 2.0 * t.non_rate_power * self.rate_scale;
        t.signal
            .iter()
            .zip(&t.denom)
            .map(|(s, d)| c * s / (d * (s + d)))
            .collect()
    }

    fn phi_identity(&self, t: &Terms) -> f64 {
        2.0 * t.sum_rate * self.model.inv_alpha
    }

    /// Explicit `(φ_k, ψ_k)` for every user.
    pub fn stationarity_matrices(&self, b: &CMat) -> Vec<(CMat, CMat)> {
        let t = self.terms(b);
        let n = self.h.nrows();
        let k_users = self.h.ncols();
        let weights = self.interference_weights(&t);
        let a = self.phi_identity(&t);
        let c = 2.0 * t.non_rate_power * self.rate_scale;
        let outer: Vec<CMat> = (0..k_users)
            .map(|i| {
                let h = self.h.column(i);
                &h * h.adjoint()
            })
            .collect();
        (0..k_users)
            .map(|k| {
                let mut phi = CMat::identity(n, n) * C64::new(a, 0.0);
                for i in (0..k_users).filter(|&i| i != k) {
                    phi += &outer[i] * C64::new(weights[i], 0.0);
                }
                let psi = &outer[k] * C64::new(c / (t.signal[k] + t.denom[k]), 0.0);
                (phi, psi)
            })
            .collect()
    }

    /// Real gradient of `η̄`: entry `(i,k)` is `∂η̄/∂Re B_ik + j ∂η̄/∂Im B_ik`.
    pub fn gradient(&self, b: &CMat) -> CMat {
        let t = self.terms(b);
        let weights = self.interference_weights(&t);
        let a = self.phi_identity(&t);
        let c = 2.0 * t.non_rate_power * self.rate_scale;
        let hb = self.h.adjoint() * b; // (i, k) = h_iᴴ b_k
        let p2 = t.p_total * t.p_total;
        let mut grad = CMat::zeros(b.nrows(), b.ncols());
        for k in 0..b.ncols() {
            // ψ_k b_k − φ_k b_k
            let mut col = b.column(k) * C64::new(-a, 0.0);
            let own = c / (t.signal[k] + t.denom[k]);
            col += self.h.column(k) * (hb[(k, k)] * own);
            for i in (0..b.ncols()).filter(|&i| i != k) {
                col -= self.h.column(i) * (hb[(i, k)] * weights[i]);
            }
            grad.set_column(k, &(col / C64::new(p2, 0.0)));
        }
        grad
    }

    /// Fixed-point targets `φ_k⁻¹ ψ_k b_k` for all columns.
    ///
    /// `φ_k` is a scaled identity plus a rank-(K−1) term, so the solve goes
    /// through the `(K−1)`-dimensional capacitance matrix.
    pub fn fixed_point_targets(&self, b: &CMat) -> Result<CMat> {
        let t = self.terms(b);
        let weights = self.interference_weights(&t);
        let a = self.phi_identity(&t);
        if !(a > 0.0) {
            return Err(Error::NotPositiveDefinite("phi_k"));
        }
        let c = 2.0 * t.non_rate_power * self.rate_scale;
        let hb = self.h.adjoint() * b;
        let k_users = b.ncols();
        let mut out = CMat::zeros(b.nrows(), k_users);
        for k in 0..k_users {
            let rhs: CVec =
                self.h.column(k) * (hb[(k, k)] * C64::new(c / (t.signal[k] + t.denom[k]), 0.0));
            let others: Vec<usize> = (0..k_users)
                .filter(|&i| i != k && weights[i] > 0.0)
                .collect();
            let x = if others.is_empty() {
                rhs / C64::new(a, 0.0)
            } else {
                let u = CMat::from_columns(
                    &others.iter().map(|&i| self.h.column(i)).collect::<Vec<_>>(),
                );
                let mut cap = u.adjoint() * &u;
                for (d, &i) in others.iter().enumerate() {
                    cap[(d, d)] += C64::new(a / weights[i], 0.0);
                }
                let chol = hermitian_cholesky(&cap, "phi_k capacitance")?;
                let inner = chol.solve(&(u.adjoint() * &rhs));
                (rhs - u * inner) / C64::new(a, 0.0)
            };
            out.set_column(k, &x);
        }
        Ok(out)
    }
}

/// `δ_i = Σ_{j≠i} |h_iᴴ b_j|² + σ²`.
pub fn interference_denominator(
    b: &DigitalPrecoder,
    ch: &ChannelSet,
    i: usize,
    cfg: &SystemConfig,
) -> Result<f64> {
    if i >= ch.n_users() {
        return Err(Error::UserIndex {
            index: i,
            users: ch.n_users(),
        });
    }
    Ok(link_budget(&ch.h, &b.b, cfg.noise_power_w()).interference_noise[i])
}

/// Relaxed efficiency `η̄(B)`, bit/Joule.
pub fn relaxed_ee(b: &DigitalPrecoder, ch: &ChannelSet, cfg: &SystemConfig) -> Result<f64> {
    Ok(RelaxedObjective::new(ch, cfg)?.ee(&b.b))
}

/// `(φ_k, ψ_k)` for all users at `b`. Every `φ_k` must admit a Hermitian
/// factorization; `state` must describe `b`.
pub fn stationarity_matrices(
    b: &DigitalPrecoder,
    ch: &ChannelSet,
    cfg: &SystemConfig,
    state: &IterationState,
) -> Result<Vec<(CMat, CMat)>> {
    let obj = RelaxedObjective::new(ch, cfg)?;
    let check = obj.state(&b.b, state.iter);
    if (check.ee - state.ee).abs() > 1e-9 * check.ee.abs().max(f64::MIN_POSITIVE) {
        return Err(Error::Dimension(
            "iteration state does not describe this precoder".into(),
        ));
    }
    let mats = obj.stationarity_matrices(&b.b);
    for (phi, _) in &mats {
        hermitian_cholesky(phi, "phi_k")?;
    }
    Ok(mats)
}

/// Real gradient of `η̄` with respect to every column of `B`.
pub fn ee_gradient(b: &DigitalPrecoder, ch: &ChannelSet, cfg: &SystemConfig) -> Result<CMat> {
    Ok(RelaxedObjective::new(ch, cfg)?.gradient(&b.b))
}

/// Random complex Gaussian start scaled to half the power budget.
pub fn initial_precoder(cfg: &SystemConfig, seed: u64) -> CMat {
    let mut rng = seed::rng(seed);
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let b = CMat::from_fn(cfg.n_tx, cfg.n_users, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        C64::new(re * s, im * s)
    });
    let target = 0.5 * cfg.p_max_w();
    &b * C64::new((target / frob2(&b)).sqrt(), 0.0)
}

fn project(b: CMat, p_max: f64) -> CMat {
    let p = frob2(&b);
    if p > p_max {
        b * C64::new((p_max / p).sqrt(), 0.0)
    } else {
        b
    }
}

/// Runs the ascent from a random start drawn from `seed`.
pub fn optimize_digital(ch: &ChannelSet, cfg: &SystemConfig, seed: u64) -> Result<DigitalOutcome> {
    optimize_digital_from(ch, cfg, initial_precoder(cfg, seed))
}

/// Runs the ascent from a given start.
pub fn optimize_digital_from(
    ch: &ChannelSet,
    cfg: &SystemConfig,
    start: CMat,
) -> Result<DigitalOutcome> {
    let obj = RelaxedObjective::new(ch, cfg)?;
    let p_max = cfg.p_max_w();
    let eps1 = cfg.eps1();
    let steps = (1.0 / cfg.step_interval).round().max(1.0) as usize;

    let mut b = project(start, p_max);
    let mut state = obj.state(&b, 0);
    let mut trace = vec![AscentRecord {
        iter: 0,
        ee: state.ee,
        step_norm: f64::NAN,
        mu: f64::NAN,
    }];
    let mut converged = false;

    for iter in 1..=cfg.max_iters {
        let target = obj.fixed_point_targets(&b)?;
        let direction = &target - &b;
        let mut best = (0.0, b.clone(), state.clone());
        for s in 1..=steps {
            let mu = (s as f64 * cfg.step_interval).min(1.0);
            let candidate = project(&b + &direction * C64::new(mu, 0.0), p_max);
            let cand_state = obj.state(&candidate, iter);
            if cand_state.ee > best.2.ee {
                best = (mu, candidate, cand_state);
            }
        }
        let (mu, next, mut next_state) = best;
        let step_norm = (&next - &b).norm();
        next_state.iter = iter;
        b = next;
        state = next_state;
        trace.push(AscentRecord {
            iter,
            ee: state.ee,
            step_norm,
            mu,
        });
        if step_norm <= eps1 {
            converged = true;
            break;
        }
    }

    Ok(DigitalOutcome {
        precoder: DigitalPrecoder { b },
        state,
        trace,
        converged,
    })
}
