//! Transmitter power budget, hardware cost and the efficiency metrics.
//!
//! Total power splits into communication power (power amplifiers and RF
//! chains), computation power (channel estimation, channel coding, baseband
//! and RF linear processing, and running the precoding algorithm) and a fixed
//! overhead. Phase shifters are booked under RF linear processing.

use crate::config::{log_exact, GainModel, Structure, SystemConfig};
use crate::error::{Error, Result};
use crate::linalg::frob2;
use crate::precoder::Precoder;

/// Itemized power, all in Watt.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PowerBreakdown {
    pub p_pa: f64,
    pub p_rf: f64,
    pub p_ce: f64,
    pub p_cd: f64,
    pub p_lp_bb: f64,
    pub p_lp_rf: f64,
    pub p_complex: f64,
    pub p_fix: f64,
    pub p_total: f64,
}

impl PowerBreakdown {
    pub fn communication(&self) -> f64 {
        self.p_pa + self.p_rf
    }

    pub fn computation(&self) -> f64 {
        self.p_ce + self.p_cd + self.p_lp_bb + self.p_lp_rf + self.p_complex
    }
}

/// Computation power components, Watt.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ComputationComponents {
    pub p_ce: f64,
    pub p_cd: f64,
    pub p_lp_bb: f64,
    pub p_lp_rf: f64,
    pub p_complex: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostBreakdown {
    pub c_hardware: f64,
    pub c_power: f64,
    pub c_total: f64,
}

/// `(1/α) Σ_k ‖B_RF b_BB,k‖²`.
pub fn pa_power(precoder: &impl Precoder, cfg: &SystemConfig) -> f64 {
    frob2(&precoder.effective()) / cfg.pa_efficiency
}

pub fn rf_chain_power(cfg: &SystemConfig) -> f64 {
    cfg.n_rf as f64 * cfg.p_one_rf_w
}

/// Beam-training channel estimation power. Independent of the precoder.
pub fn channel_estimation_power(cfg: &SystemConfig) -> Result<f64> {
    let stages = log_exact(cfg.n_aod, cfg.kappa).ok_or_else(|| {
        Error::ChannelEstimation(format!(
            "n_aod = {} is not a power of kappa = {}",
            cfg.n_aod, cfg.kappa
        ))
    })?;
    let kappa = cfg.kappa as f64;
    let bracket = (kappa * kappa - 1.0) * stages as f64 / cfg.delta_err - 2.0;
    if bracket < 0.0 {
        return Err(Error::ChannelEstimation(format!(
            "training factor is negative ({bracket}); delta_err = {} is inconsistent",
            cfg.delta_err
        )));
    }
    let n_tx = cfg.n_tx as f64;
    let inverse_gain: f64 = (1..=stages)
        .map(|s| {
            let g = match cfg.ce_gain {
                GainModel::Capped => kappa.powi(s as i32).min(n_tx),
                GainModel::FullArray => n_tx,
            };
            1.0 / g
        })
        .sum();
    Ok(cfg.ce_scale
        * cfg.n_users as f64
        * cfg.n_rays as f64
        * kappa
        * kappa
        * (2.0 / cfg.avg_snr())
        * bracket
        * inverse_gain)
}

/// Watt per bit/s of sum rate spent on coding and baseband precoding.
pub fn rate_power_coefficient(cfg: &SystemConfig) -> f64 {
    cfg.p_cod_w_per_bps + 2.0 * cfg.n_rf as f64 / (cfg.bits_per_symbol * cfg.l_tr_flops_per_w)
}

pub fn computation_power(
    cfg: &SystemConfig,
    sum_rate: f64,
    structure: Structure,
    theta_flops: f64,
) -> Result<ComputationComponents> {
    if !cfg.computation_included() {
        return Ok(ComputationComponents::default());
    }
    Ok(ComputationComponents {
        p_ce: channel_estimation_power(cfg)?,
        p_cd: cfg.p_cod_w_per_bps * sum_rate,
        p_lp_bb: 2.0 * sum_rate * cfg.n_rf as f64 / (cfg.bits_per_symbol * cfg.l_tr_flops_per_w),
        p_lp_rf: cfg.n_shifters(structure) as f64 * cfg.p_shifter_w,
        p_complex: theta_flops * cfg.c_cmplx / cfg.l_tr_flops_per_w,
    })
}

fn assemble(p_pa: f64, p_rf: f64, c: ComputationComponents, p_fix: f64) -> PowerBreakdown {
    PowerBreakdown {
        p_pa,
        p_rf,
        p_ce: c.p_ce,
        p_cd: c.p_cd,
        p_lp_bb: c.p_lp_bb,
        p_lp_rf: c.p_lp_rf,
        p_complex: c.p_complex,
        p_fix,
        p_total: p_pa + p_rf + c.p_ce + c.p_cd + c.p_lp_bb + c.p_lp_rf + c.p_complex + p_fix,
    }
}

/// Full budget for a precoder operating at `sum_rate` with wiring `structure`.
pub fn total_power(
    cfg: &SystemConfig,
    precoder: &impl Precoder,
    sum_rate: f64,
    structure: Structure,
    theta_flops: f64,
) -> Result<PowerBreakdown> {
    let comp = computation_power(cfg, sum_rate, structure, theta_flops)?;
    Ok(assemble(
        pa_power(precoder, cfg),
        rf_chain_power(cfg),
        comp,
        cfg.p_fix_w,
    ))
}

/// Bit per Joule.
pub fn energy_efficiency(sum_rate: f64, pb: &PowerBreakdown) -> f64 {
    sum_rate / pb.p_total
}

pub fn cost(cfg: &SystemConfig, pb: &PowerBreakdown, structure: Structure) -> CostBreakdown {
    let c_hardware = cfg.beta_t * cfg.n_tx as f64
        + cfg.beta_shifter * cfg.n_shifters(structure) as f64
        + cfg.beta_rf * cfg.n_rf as f64
        + cfg.beta_bb;
    let c_power = cfg.beta_power * pb.p_total;
    CostBreakdown {
        c_hardware,
        c_power,
        c_total: c_hardware + c_power,
    }
}

/// Sum rate per unit of total cost.
pub fn cost_efficiency(
    cfg: &SystemConfig,
    sum_rate: f64,
    pb: &PowerBreakdown,
    structure: Structure,
) -> f64 {
    sum_rate / cost(cfg, pb, structure).c_total
}

/// Flop count charged to the two-stage optimizer: `N_T³ + K^3.5`.
pub fn phone_complexity(cfg: &SystemConfig) -> f64 {
    (cfg.n_tx as f64).powi(3) + (cfg.n_users as f64).powf(3.5)
}

/// Flop count charged to OMP: the dictionary correlations `N_RF·N_ray·N_T·K`.
pub fn omp_complexity(cfg: &SystemConfig) -> f64 {
    (cfg.n_rf * cfg.n_rays * cfg.n_tx * cfg.n_users) as f64
}

/// Power as an affine function of transmit power and sum rate, for a fixed
/// configuration, wiring and algorithm complexity:
/// `P = ‖B‖²/α + rate_coeff·R + static`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerModel {
    pub inv_alpha: f64,
    pub rate_coeff: f64,
    pub static_w: f64,
}

impl PowerModel {
    pub fn new(cfg: &SystemConfig, structure: Structure, theta_flops: f64) -> Result<Self> {
        let at_zero = computation_power(cfg, 0.0, structure, theta_flops)?;
        let rate_coeff = if cfg.computation_included() {
            rate_power_coefficient(cfg)
        } else {
            0.0
        };
        Ok(PowerModel {
            inv_alpha: 1.0 / cfg.pa_efficiency,
            rate_coeff,
            static_w: rf_chain_power(cfg)
                + at_zero.p_ce
                + at_zero.p_lp_rf
                + at_zero.p_complex
                + cfg.p_fix_w,
        })
    }

    pub fn total(&self, transmit_power: f64, sum_rate: f64) -> f64 {
        self.inv_alpha * transmit_power + self.rate_coeff * sum_rate + self.static_w
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ComputationPower;
    use crate::linalg::{CMat, C64};
    use crate::precoder::HybridPrecoder;
    use approx::assert_relative_eq;

    fn table_cfg() -> SystemConfig {
        SystemConfig::default()
    }

    #[test]
    fn pa_power_of_one_watt() {
        let cfg = table_cfg();
        let b = CMat::from_element(1, 1, C64::new(1.0, 0.0));
        assert_relative_eq!(pa_power(&b, &cfg), 2.631578947368421, epsilon = 1e-12);
        assert_eq!(pa_power(&CMat::zeros(4, 2), &cfg), 0.0);
    }

    #[test]
    fn partial_pa_power_uses_block_sizes() {
        let cfg = SystemConfig {
            n_tx: 16,
            n_rf: 4,
            n_users: 2,
            ..table_cfg()
        };
        let phases: Vec<f64> = (0..16).map(|i| 0.3 * i as f64).collect();
        let b_bb = CMat::from_fn(4, 2, |r, c| C64::new(0.2 * r as f64, 0.1 + c as f64));
        let p = HybridPrecoder::partial_from_antenna_phases(&phases, b_bb.clone());
        let expected = 4.0 * frob2(&b_bb) / cfg.pa_efficiency;
        assert_relative_eq!(pa_power(&p, &cfg), expected, max_relative = 1e-12);
        let materialized = p.rf_matrix() * &b_bb;
        assert_relative_eq!(
            pa_power(&materialized, &cfg),
            expected,
            max_relative = 1e-12
        );
    }

    #[test]
    fn rf_chain_power_values() {
        let mut cfg = table_cfg();
        assert_relative_eq!(rf_chain_power(&cfg), 64.5, epsilon = 1e-12);
        cfg.n_rf = 14;
        assert_relative_eq!(rf_chain_power(&cfg), 180.6, epsilon = 1e-12);
        cfg.n_rf = 0;
        assert_eq!(rf_chain_power(&cfg), 0.0);
    }

    #[test]
    fn channel_estimation_reference_value() {
        // Σ 1/min(2^s, 64) over s = 1..6 is 0.984375; bracket (3·6)/0.1 − 2 = 178.
        let cfg = SystemConfig {
            avg_snr: Some(1e4),
            ..table_cfg()
        };
        let expected = 5.0 * 20.0 * 4.0 * 2e-4 * 178.0 * 0.984375;
        assert_relative_eq!(
            channel_estimation_power(&cfg).unwrap(),
            expected,
            max_relative = 1e-12
        );
        assert_relative_eq!(expected, 14.0175, epsilon = 1e-4);

        let doubled = SystemConfig {
            n_users: 10,
            n_rf: 10,
            ..cfg.clone()
        };
        assert_eq!(
            channel_estimation_power(&doubled).unwrap(),
            2.0 * channel_estimation_power(&cfg).unwrap()
        );
        let quiet = SystemConfig {
            avg_snr: Some(f64::INFINITY),
            ..cfg.clone()
        };
        assert_eq!(channel_estimation_power(&quiet).unwrap(), 0.0);
    }

    #[test]
    fn channel_estimation_errors() {
        let cfg = SystemConfig {
            n_aod: 48,
            ..table_cfg()
        };
        assert!(channel_estimation_power(&cfg).is_err());
        // (κ²−1)·log_κ(n)/δ − 2 < 0 needs log_κ(n) = 0 (n_aod = 1)
        let cfg = SystemConfig {
            n_aod: 1,
            ..table_cfg()
        };
        assert!(channel_estimation_power(&cfg).is_err());
    }

    #[test]
    fn computation_components() {
        let cfg = table_cfg();
        let c = computation_power(&cfg, 1e7, Structure::Partial, 0.0).unwrap();
        assert_relative_eq!(c.p_cd, 1e-3, max_relative = 1e-12);
        assert_relative_eq!(c.p_lp_bb, 7.8125e-3, max_relative = 1e-12);
        assert_relative_eq!(c.p_lp_rf, 5.632, max_relative = 1e-12);
        assert_eq!(c.p_complex, 0.0);
        let full = computation_power(&cfg, 1e7, Structure::Full, 0.0).unwrap();
        assert_relative_eq!(full.p_lp_rf, 5.0 * 5.632, max_relative = 1e-12);
    }

    #[test]
    fn total_power_static_terms() {
        let cfg = SystemConfig {
            avg_snr: Some(f64::INFINITY),
            ..table_cfg()
        };
        let zero = CMat::zeros(64, 5);
        let pb = total_power(&cfg, &zero, 0.0, Structure::Partial, 0.0).unwrap();
        assert_relative_eq!(pb.p_total, 64.5 + 64.0 * 0.088 + 1.0, max_relative = 1e-12);
        let full = total_power(&cfg, &zero, 0.0, Structure::Full, 0.0).unwrap();
        assert_relative_eq!(
            full.p_total - pb.p_total,
            4.0 * 64.0 * 0.088,
            max_relative = 1e-12
        );
    }

    #[test]
    fn excluded_computation_zeroes_components() {
        let cfg = SystemConfig {
            computation: ComputationPower::Excluded,
            ..table_cfg()
        };
        let pb = total_power(&cfg, &CMat::zeros(64, 5), 1e7, Structure::Full, 1e9).unwrap();
        assert_eq!(pb.computation(), 0.0);
        assert_relative_eq!(pb.p_total, 64.5 + 1.0, max_relative = 1e-12);
    }

    #[test]
    fn hardware_cost_reference() {
        let cfg = table_cfg();
        let pb = PowerBreakdown::default();
        let c = cost(&cfg, &pb, Structure::Partial);
        assert_relative_eq!(c.c_hardware, 173_032.0, epsilon = 1e-9);
        assert_eq!(cost_efficiency(&cfg, 0.0, &pb, Structure::Partial), 0.0);
    }

    #[test]
    fn efficiency_division() {
        let pb = PowerBreakdown {
            p_total: 100.0,
            ..Default::default()
        };
        assert_eq!(energy_efficiency(1e7, &pb), 1e5);
        assert_eq!(energy_efficiency(0.0, &pb), 0.0);
    }

    #[test]
    fn power_model_matches_breakdown() {
        let cfg = table_cfg();
        let b = CMat::from_fn(64, 5, |r, c| C64::new(0.01 * r as f64, 0.02 * c as f64));
        let theta = phone_complexity(&cfg);
        let pb = total_power(&cfg, &b, 3.3e7, Structure::Partial, theta).unwrap();
        let model = PowerModel::new(&cfg, Structure::Partial, theta).unwrap();
        assert_relative_eq!(
            model.total(frob2(&b), 3.3e7),
            pb.p_total,
            max_relative = 1e-12
        );
    }
}
