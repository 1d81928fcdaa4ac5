//! System parameters for one simulation run.
//!
//! Defaults follow the usual mmWave massive-MIMO setup: 5 users, 5 RF
//! chains, a 64-element planar array, 200 kHz per user, 33 dBm transmit
//! budget and the component power and cost figures listed on
//! [`SystemConfig::default`].

use std::fmt;
use std::str::FromStr;

use crate::error::ConfigError;

/// RF front-end wiring.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Structure {
    /// Every RF chain drives its own disjoint sub-array.
    Partial,
    /// Every RF chain drives every antenna.
    Full,
}

impl Structure {
    pub fn as_str(self) -> &'static str {
        match self {
            Structure::Partial => "partial",
            Structure::Full => "full",
        }
    }
}

impl fmt::Display for Structure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Per-stage beam-training gain used by the channel estimation power.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GainModel {
    /// `G(s) = min(κˢ, N_T)`.
    Capped,
    /// `G(s) = N_T` at every stage.
    FullArray,
}

/// Whether the computation-power terms enter the power budget.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ComputationPower {
    Included,
    /// Communication-only accounting: estimation, coding, linear processing,
    /// phase shifters and algorithm power are all zero.
    Excluded,
}

/// Reference precoder the OMP baselines approximate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OmpTarget {
    ZeroForcing,
    UpperBound,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SystemConfig {
    pub n_users: usize,
    pub n_tx: usize,
    pub n_rf: usize,
    pub n_rays: usize,
    /// Planar array rows; `None` picks the nearest-square factorization.
    pub array_rows: Option<usize>,
    pub array_cols: Option<usize>,
    pub spacing_over_lambda: f64,

    pub bandwidth_hz: f64,
    pub noise_psd_dbm_hz: f64,
    pub p_max_dbm: f64,
    pub pa_efficiency: f64,
    pub p_one_rf_w: f64,
    pub p_shifter_w: f64,
    pub p_fix_w: f64,
    /// Channel coding power, W per bit/s.
    pub p_cod_w_per_bps: f64,
    /// Transmitter computation efficiency, flops per Joule.
    pub l_tr_flops_per_w: f64,
    pub bits_per_symbol: f64,
    pub c_cmplx: f64,
    pub kappa: u32,
    pub n_aod: u32,
    pub delta_err: f64,
    /// Linear average channel SNR; `None` derives it from the link budget.
    pub avg_snr: Option<f64>,
    /// Linear large-scale gain shared by all users; `None` calibrates it so
    /// the per-user SNR at an equal `P_max/K` split is `calibration_snr_db`.
    pub path_gain: Option<f64>,
    pub calibration_snr_db: f64,
    pub ce_scale: f64,
    pub ce_gain: GainModel,
    pub computation: ComputationPower,
    /// Unused legacy parameter kept for completeness of the parameter table.
    pub tau: f64,

    pub beta_power: f64,
    pub beta_t: f64,
    pub beta_shifter: f64,
    pub beta_rf: f64,
    pub beta_bb: f64,

    /// Line-search spacing of the digital ascent step length.
    pub step_interval: f64,
    /// Digital ascent stopping threshold; `None` means `1e-3·√P_max`.
    pub eps1: Option<f64>,
    pub max_iters: usize,
    /// Factorization stopping threshold relative to `‖B_opt‖_F`.
    pub eps2_rel: f64,
    pub max_alternations: usize,
    pub n_randomizations: usize,
    pub sdp_tol: f64,
    pub omp_target: OmpTarget,
}

impl Default for SystemConfig {
    fn default() -> Self {
        SystemConfig {
            n_users: 5,
            n_tx: 64,
            n_rf: 5,
            n_rays: 20,
            array_rows: None,
            array_cols: None,
            spacing_over_lambda: 0.5,
            bandwidth_hz: 200e3,
            noise_psd_dbm_hz: -174.0,
            p_max_dbm: 33.0,
            pa_efficiency: 0.38,
            p_one_rf_w: 12.9,
            p_shifter_w: 0.088,
            p_fix_w: 1.0,
            p_cod_w_per_bps: 0.1e-9,
            l_tr_flops_per_w: 12.8e9,
            bits_per_symbol: 1.0,
            c_cmplx: 1.0,
            kappa: 2,
            n_aod: 64,
            delta_err: 0.1,
            avg_snr: None,
            path_gain: None,
            calibration_snr_db: 40.0,
            ce_scale: 1.0,
            ce_gain: GainModel::Capped,
            computation: ComputationPower::Included,
            tau: 1.0,
            beta_power: 0.9,
            beta_t: 188.0,
            beta_shifter: 1800.0,
            beta_rf: 7800.0,
            beta_bb: 6800.0,
            step_interval: 0.1,
            eps1: None,
            max_iters: 200,
            eps2_rel: 1e-2,
            max_alternations: 50,
            n_randomizations: 100,
            sdp_tol: 1e-7,
            omp_target: OmpTarget::ZeroForcing,
        }
    }
}

fn dbm_to_watt(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

/// Largest divisor of `n` not exceeding `√n`, paired with its cofactor.
pub fn nearest_square_dims(n: usize) -> (usize, usize) {
    let mut rows = (n as f64).sqrt().floor() as usize;
    while rows > 1 && n % rows != 0 {
        rows -= 1;
    }
    let rows = rows.max(1);
    (rows, n / rows)
}

impl SystemConfig {
    pub fn p_max_w(&self) -> f64 {
        dbm_to_watt(self.p_max_dbm)
    }

    /// Noise power over one user's bandwidth, W.
    pub fn noise_power_w(&self) -> f64 {
        dbm_to_watt(self.noise_psd_dbm_hz) * self.bandwidth_hz
    }

    pub fn path_gain(&self) -> f64 {
        self.path_gain.unwrap_or_else(|| {
            let snr = 10f64.powf(self.calibration_snr_db / 10.0);
            snr * self.noise_power_w() * self.n_users as f64 / self.p_max_w()
        })
    }

    pub fn avg_snr(&self) -> f64 {
        self.avg_snr.unwrap_or_else(|| {
            self.p_max_w() / self.n_users as f64 * self.path_gain() / self.noise_power_w()
        })
    }

    pub fn eps1(&self) -> f64 {
        self.eps1.unwrap_or_else(|| 1e-3 * self.p_max_w().sqrt())
    }

    pub fn array_dims(&self) -> (usize, usize) {
        match (self.array_rows, self.array_cols) {
            (Some(r), Some(c)) => (r, c),
            (Some(r), None) => (r, self.n_tx / r.max(1)),
            (None, Some(c)) => (self.n_tx / c.max(1), c),
            (None, None) => nearest_square_dims(self.n_tx),
        }
    }

    pub fn computation_included(&self) -> bool {
        self.computation == ComputationPower::Included
    }

    /// Number of phase shifters for the given wiring.
    pub fn n_shifters(&self, structure: Structure) -> usize {
        match structure {
            Structure::Partial => self.n_tx,
            Structure::Full => self.n_tx * self.n_rf,
        }
    }

    /// RF chain (0-based) that owns antenna `antenna` (0-based) in the
    /// partially-connected wiring: chain `⌈i·N_RF/N_T⌉` for 1-based `i`.
    pub fn owning_chain(&self, antenna: usize) -> usize {
        owning_chain(antenna, self.n_tx, self.n_rf)
    }

    /// Antenna index range driven by each RF chain (partial wiring).
    pub fn subarrays(&self) -> Vec<std::ops::Range<usize>> {
        subarrays(self.n_tx, self.n_rf)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let err = |k: &str, m: String| Err(ConfigError::new(k, m));
        if self.n_users == 0 {
            return err("n_users", "must be at least 1".into());
        }
        if self.n_rf < self.n_users {
            return err(
                "n_rf",
                format!(
                    "{} RF chains cannot serve {} users",
                    self.n_rf, self.n_users
                ),
            );
        }
        if self.n_rf > self.n_tx {
            return err(
                "n_rf",
                format!("{} RF chains exceed {} antennas", self.n_rf, self.n_tx),
            );
        }
        if self.n_rays == 0 {
            return err("n_rays", "must be at least 1".into());
        }
        let (rows, cols) = self.array_dims();
        if rows * cols != self.n_tx {
            return err(
                "array_rows",
                format!("{rows}x{cols} array does not hold {} antennas", self.n_tx),
            );
        }
        let positive = [
            ("spacing_over_lambda", self.spacing_over_lambda),
            ("bandwidth_hz", self.bandwidth_hz),
            ("pa_efficiency", self.pa_efficiency),
            ("p_one_rf_w", self.p_one_rf_w),
            ("p_shifter_w", self.p_shifter_w),
            ("p_fix_w", self.p_fix_w),
            ("p_cod_w_per_bps", self.p_cod_w_per_bps),
            ("l_tr_flops_per_w", self.l_tr_flops_per_w),
            ("bits_per_symbol", self.bits_per_symbol),
            ("c_cmplx", self.c_cmplx),
            ("ce_scale", self.ce_scale),
            ("step_interval", self.step_interval),
            ("eps2_rel", self.eps2_rel),
            ("sdp_tol", self.sdp_tol),
        ];
        for (key, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return err(key, format!("must be positive and finite, got {v}"));
            }
        }
        for (key, v) in [
            ("path_gain", self.path_gain),
            ("avg_snr", self.avg_snr),
            ("eps1", self.eps1),
        ] {
            if let Some(v) = v {
                if !(v.is_finite() && v > 0.0) {
                    return err(key, format!("must be positive and finite, got {v}"));
                }
            }
        }
        for (key, v) in [
            ("beta_power", self.beta_power),
            ("beta_t", self.beta_t),
            ("beta_shifter", self.beta_shifter),
            ("beta_rf", self.beta_rf),
            ("beta_bb", self.beta_bb),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return err(key, format!("must be non-negative, got {v}"));
            }
        }
        if self.pa_efficiency > 1.0 {
            return err("pa_efficiency", "must lie in (0, 1]".into());
        }
        if self.step_interval > 1.0 {
            return err("step_interval", "must lie in (0, 1]".into());
        }
        if !(self.delta_err > 0.0 && self.delta_err < 1.0) {
            return err("delta_err", "must lie in (0, 1)".into());
        }
        if self.kappa < 2 {
            return err("kappa", "must be at least 2".into());
        }
        if log_exact(self.n_aod, self.kappa).is_none() {
            return err(
                "n_aod",
                format!("{} is not a power of kappa = {}", self.n_aod, self.kappa),
            );
        }
        if self.max_iters == 0 {
            return err("max_iters", "must be at least 1".into());
        }
        if self.n_randomizations == 0 {
            return err("n_randomizations", "must be at least 1".into());
        }
        if !self.p_max_dbm.is_finite() || !self.noise_psd_dbm_hz.is_finite() {
            return err("p_max_dbm", "power levels must be finite".into());
        }
        Ok(())
    }

    /// Effective configuration as `key = value` lines, derived values resolved.
    pub fn to_key_values(&self) -> Vec<(&'static str, String)> {
        let (rows, cols) = self.array_dims();
        vec![
            ("n_users", self.n_users.to_string()),
            ("n_tx", self.n_tx.to_string()),
            ("n_rf", self.n_rf.to_string()),
            ("n_rays", self.n_rays.to_string()),
            ("array_rows", rows.to_string()),
            ("array_cols", cols.to_string()),
            ("spacing_over_lambda", self.spacing_over_lambda.to_string()),
            ("bandwidth_hz", self.bandwidth_hz.to_string()),
            ("noise_psd_dbm_hz", self.noise_psd_dbm_hz.to_string()),
            ("p_max_dbm", self.p_max_dbm.to_string()),
            ("pa_efficiency", self.pa_efficiency.to_string()),
            ("p_one_rf_w", self.p_one_rf_w.to_string()),
            ("p_shifter_w", self.p_shifter_w.to_string()),
            ("p_fix_w", self.p_fix_w.to_string()),
            ("p_cod_w_per_bps", self.p_cod_w_per_bps.to_string()),
            ("l_tr_flops_per_w", self.l_tr_flops_per_w.to_string()),
            ("bits_per_symbol", self.bits_per_symbol.to_string()),
            ("c_cmplx", self.c_cmplx.to_string()),
            ("kappa", self.kappa.to_string()),
            ("n_aod", self.n_aod.to_string()),
            ("delta_err", self.delta_err.to_string()),
            ("avg_snr", self.avg_snr().to_string()),
            ("path_gain", self.path_gain().to_string()),
            ("calibration_snr_db", self.calibration_snr_db.to_string()),
            ("ce_scale", self.ce_scale.to_string()),
            (
                "ce_gain_model",
                match self.ce_gain {
                    GainModel::Capped => "capped",
                    GainModel::FullArray => "full_array",
                }
                .into(),
            ),
            (
                "include_computation_power",
                self.computation_included().to_string(),
            ),
            ("tau", self.tau.to_string()),
            ("beta_power", self.beta_power.to_string()),
            ("beta_t", self.beta_t.to_string()),
            ("beta_shifter", self.beta_shifter.to_string()),
            ("beta_rf", self.beta_rf.to_string()),
            ("beta_bb", self.beta_bb.to_string()),
            ("step_interval", self.step_interval.to_string()),
            ("eps1", self.eps1().to_string()),
            ("max_iters", self.max_iters.to_string()),
            ("eps2_rel", self.eps2_rel.to_string()),
            ("max_alternations", self.max_alternations.to_string()),
            ("n_randomizations", self.n_randomizations.to_string()),
            ("sdp_tol", self.sdp_tol.to_string()),
            (
                "omp_target",
                match self.omp_target {
                    OmpTarget::ZeroForcing => "zf",
                    OmpTarget::UpperBound => "upper_bound",
                }
                .into(),
            ),
        ]
    }

    /// Applies one `key = value` assignment.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        fn num<T: FromStr>(key: &str, value: &str) -> Result<T, ConfigError> {
            value
                .parse()
                .map_err(|_| ConfigError::new(key, format!("cannot parse `{value}`")))
        }
        fn flag(key: &str, value: &str) -> Result<bool, ConfigError> {
            match value {
                "true" | "1" | "yes" => Ok(true),
                "false" | "0" | "no" => Ok(false),
                _ => Err(ConfigError::new(
                    key,
                    format!("expected a boolean, got `{value}`"),
                )),
            }
        }
        match key {
            "n_users" | "k" => self.n_users = num(key, value)?,
            "n_tx" | "nt" => {
                self.n_tx = num(key, value)?;
            }
            "n_rf" | "nrf" => self.n_rf = num(key, value)?,
            "n_rays" => self.n_rays = num(key, value)?,
            "array_rows" => self.array_rows = Some(num(key, value)?),
            "array_cols" => self.array_cols = Some(num(key, value)?),
            "spacing_over_lambda" => self.spacing_over_lambda = num(key, value)?,
            "bandwidth_hz" => self.bandwidth_hz = num(key, value)?,
            "noise_psd_dbm_hz" => self.noise_psd_dbm_hz = num(key, value)?,
            "p_max_dbm" => self.p_max_dbm = num(key, value)?,
            "pa_efficiency" => self.pa_efficiency = num(key, value)?,
            "p_one_rf_w" => self.p_one_rf_w = num(key, value)?,
            "p_shifter_w" => self.p_shifter_w = num(key, value)?,
            "p_fix_w" => self.p_fix_w = num(key, value)?,
            "p_cod_w_per_bps" => self.p_cod_w_per_bps = num(key, value)?,
            "l_tr_flops_per_w" => self.l_tr_flops_per_w = num(key, value)?,
            "bits_per_symbol" => self.bits_per_symbol = num(key, value)?,
            "c_cmplx" => self.c_cmplx = num(key, value)?,
            "kappa" => self.kappa = num(key, value)?,
            "n_aod" => self.n_aod = num(key, value)?,
            "delta_err" => self.delta_err = num(key, value)?,
            "avg_snr" => self.avg_snr = Some(num(key, value)?),
            "path_gain" => self.path_gain = Some(num(key, value)?),
            "calibration_snr_db" => self.calibration_snr_db = num(key, value)?,
            "ce_scale" => self.ce_scale = num(key, value)?,
            "ce_gain_model" => {
                self.ce_gain = match value {
                    "capped" => GainModel::Capped,
                    "full_array" => GainModel::FullArray,
                    _ => {
                        return Err(ConfigError::new(
                            key,
                            format!("expected `capped` or `full_array`, got `{value}`"),
                        ))
                    }
                }
            }
            "include_computation_power" => {
                self.computation = if flag(key, value)? {
                    ComputationPower::Included
                } else {
                    ComputationPower::Excluded
                }
            }
            "tau" => self.tau = num(key, value)?,
            "beta_power" => self.beta_power = num(key, value)?,
            "beta_t" => self.beta_t = num(key, value)?,
            "beta_shifter" => self.beta_shifter = num(key, value)?,
            "beta_rf" => self.beta_rf = num(key, value)?,
            "beta_bb" => self.beta_bb = num(key, value)?,
            "step_interval" => self.step_interval = num(key, value)?,
            "eps1" => self.eps1 = Some(num(key, value)?),
            "max_iters" => self.max_iters = num(key, value)?,
            "eps2_rel" => self.eps2_rel = num(key, value)?,
            "max_alternations" => self.max_alternations = num(key, value)?,
            "n_randomizations" => self.n_randomizations = num(key, value)?,
            "sdp_tol" => self.sdp_tol = num(key, value)?,
            "omp_target" => {
                self.omp_target = match value {
                    "zf" => OmpTarget::ZeroForcing,
                    "upper_bound" => OmpTarget::UpperBound,
                    _ => {
                        return Err(ConfigError::new(
                            key,
                            format!("expected `zf` or `upper_bound`, got `{value}`"),
                        ))
                    }
                }
            }
            _ => return Err(ConfigError::new(key, "unknown key")),
        }
        Ok(())
    }

    /// Substitutes a new antenna count, re-deriving the array shape unless it
    /// was pinned.
    pub fn with_n_tx(&self, n_tx: usize) -> Self {
        SystemConfig {
            n_tx,
            array_rows: None,
            array_cols: None,
            ..self.clone()
        }
    }
}

/// `log_base(n)` when `n` is an exact non-negative integer power of `base`.
pub fn log_exact(n: u32, base: u32) -> Option<u32> {
    if n == 0 || base < 2 {
        return None;
    }
    let mut p = 0;
    let mut v = n;
    while v % base == 0 {
        v /= base;
        p += 1;
    }
    (v == 1).then_some(p)
}

pub fn owning_chain(antenna: usize, n_tx: usize, n_rf: usize) -> usize {
    ((antenna + 1) * n_rf).div_ceil(n_tx) - 1
}

pub fn subarrays(n_tx: usize, n_rf: usize) -> Vec<std::ops::Range<usize>> {
    let mut out = vec![0..0; n_rf];
    let mut start = 0;
    for (j, range) in out.iter_mut().enumerate() {
        let mut end = start;
        while end < n_tx && owning_chain(end, n_tx, n_rf) == j {
            end += 1;
        }
        *range = start..end;
        start = end;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        let cfg = SystemConfig::default();
        cfg.validate().unwrap();
        assert_eq!(cfg.array_dims(), (8, 8));
        assert!((cfg.p_max_w() - 1.99526).abs() < 1e-5);
        assert!((cfg.avg_snr() - 1e4).abs() < 1e-6);
    }

    #[test]
    fn ceiling_rule_partition() {
        // N_T=4, N_RF=2: antennas 1,2 -> chain 1; 3,4 -> chain 2 (1-based)
        let owners: Vec<_> = (0..4).map(|i| owning_chain(i, 4, 2)).collect();
        assert_eq!(owners, vec![0, 0, 1, 1]);
        let parts = subarrays(64, 5);
        assert_eq!(parts.len(), 5);
        assert_eq!(parts.iter().map(|r| r.len()).sum::<usize>(), 64);
        assert!(parts.iter().all(|r| r.len() == 12 || r.len() == 13));
        for (j, r) in parts.iter().enumerate() {
            for i in r.clone() {
                assert_eq!(owning_chain(i, 64, 5), j);
            }
        }
    }

    #[test]
    fn square_dims() {
        assert_eq!(nearest_square_dims(100), (10, 10));
        assert_eq!(nearest_square_dims(56), (7, 8));
        assert_eq!(nearest_square_dims(13), (1, 13));
    }

    #[test]
    fn log_exact_powers() {
        assert_eq!(log_exact(64, 2), Some(6));
        assert_eq!(log_exact(1, 2), Some(0));
        assert_eq!(log_exact(48, 2), None);
        assert_eq!(log_exact(81, 3), Some(4));
    }

    #[test]
    fn rejects_bad_values() {
        let mut cfg = SystemConfig::default();
        cfg.n_rf = 4;
        assert_eq!(cfg.validate().unwrap_err().key, "n_rf");
        let mut cfg = SystemConfig::default();
        cfg.n_aod = 48;
        assert_eq!(cfg.validate().unwrap_err().key, "n_aod");
        let mut cfg = SystemConfig::default();
        cfg.array_rows = Some(7);
        cfg.array_cols = Some(7);
        assert_eq!(cfg.validate().unwrap_err().key, "array_rows");
    }
}
