//! Hybrid (RF × baseband) and fully-digital precoders.

use crate::config::{subarrays, Structure};
use crate::linalg::{cis, frob2, CMat, RMat, RVec, C64};

/// Anything that yields the `N_T × K` matrix actually applied to the symbols.
pub trait Precoder {
    fn effective(&self) -> CMat;
}

/// Phase-shifter settings.
#[derive(Debug, Clone, PartialEq)]
pub enum RfPhases {
    /// One phase vector per RF chain, covering that chain's sub-array.
    Partial(Vec<RVec>),
    /// `N_T × N_RF` phases.
    Full(RMat),
}

#[derive(Debug, Clone, PartialEq)]
pub struct HybridPrecoder {
    pub n_tx: usize,
    pub rf: RfPhases,
    /// `N_RF × K`.
    pub b_bb: CMat,
}

impl HybridPrecoder {
    pub fn structure(&self) -> Structure {
        match self.rf {
            RfPhases::Partial(_) => Structure::Partial,
            RfPhases::Full(_) => Structure::Full,
        }
    }

    pub fn n_rf(&self) -> usize {
        self.b_bb.nrows()
    }

    pub fn n_users(&self) -> usize {
        self.b_bb.ncols()
    }

    /// Builds a partial-structure precoder from per-antenna phases.
    pub fn partial_from_antenna_phases(phases: &[f64], b_bb: CMat) -> Self {
        let n_tx = phases.len();
        let chains = subarrays(n_tx, b_bb.nrows())
            .into_iter()
            .map(|r| RVec::from_iterator(r.len(), phases[r].iter().copied()))
            .collect();
        HybridPrecoder {
            n_tx,
            rf: RfPhases::Partial(chains),
            b_bb,
        }
    }

    /// Materialized `B_RF` (`N_T × N_RF`).
    pub fn rf_matrix(&self) -> CMat {
        let n_rf = self.n_rf();
        match &self.rf {
            RfPhases::Partial(chains) => {
                let mut m = CMat::zeros(self.n_tx, n_rf);
                for (j, range) in subarrays(self.n_tx, n_rf).into_iter().enumerate() {
                    for (offset, i) in range.enumerate() {
                        m[(i, j)] = cis(chains[j][offset]);
                    }
                }
                m
            }
            RfPhases::Full(phases) => phases.map(cis),
        }
    }

    /// `‖B_RF B_BB‖_F²`, the radiated power.
    pub fn transmit_power(&self) -> f64 {
        frob2(&self.effective())
    }

    /// Scales the baseband matrix so the radiated power does not exceed `p_max`.
    pub fn clamp_power(&mut self, p_max: f64) {
        let p = self.transmit_power();
        if p > p_max {
            self.b_bb *= C64::new((p_max / p).sqrt(), 0.0);
        }
    }

    /// Checks the structural and power invariants; returns the first violation.
    pub fn check(&self, p_max: f64) -> Result<(), String> {
        let rf = self.rf_matrix();
        let n_rf = self.n_rf();
        if rf.nrows() != self.n_tx || rf.ncols() != n_rf {
            return Err("RF matrix has wrong shape".into());
        }
        let tol = 1e-9;
        match self.structure() {
            Structure::Partial => {
                let parts = subarrays(self.n_tx, n_rf);
                for i in 0..self.n_tx {
                    for (j, range) in parts.iter().enumerate() {
                        let z = rf[(i, j)];
                        if range.contains(&i) {
                            if (z.norm() - 1.0).abs() > tol {
                                return Err(format!("entry ({i},{j}) has modulus {}", z.norm()));
                            }
                        } else if z != C64::new(0.0, 0.0) {
                            return Err(format!("entry ({i},{j}) outside its block is nonzero"));
                        }
                    }
                }
            }
            Structure::Full => {
                if let Some(z) = rf.iter().find(|z| (z.norm() - 1.0).abs() > tol) {
                    return Err(format!("entry with modulus {}", z.norm()));
                }
            }
        }
        if self
            .b_bb
            .iter()
            .any(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            return Err("baseband matrix has non-finite entries".into());
        }
        let p = self.transmit_power();
        if p > p_max * (1.0 + 1e-9) {
            return Err(format!("transmit power {p} exceeds {p_max}"));
        }
        Ok(())
    }
}

impl Precoder for HybridPrecoder {
    fn effective(&self) -> CMat {
        match &self.rf {
            RfPhases::Partial(chains) => {
                let k = self.n_users();
                let mut out = CMat::zeros(self.n_tx, k);
                for (j, range) in subarrays(self.n_tx, self.n_rf()).into_iter().enumerate() {
                    for (offset, i) in range.enumerate() {
                        let w = cis(chains[j][offset]);
                        for c in 0..k {
                            out[(i, c)] = w * self.b_bb[(j, c)];
                        }
                    }
                }
                out
            }
            RfPhases::Full(_) => self.rf_matrix() * &self.b_bb,
        }
    }
}

/// Fully-digital precoder `B` (`N_T × K`).
#[derive(Debug, Clone, PartialEq)]
pub struct DigitalPrecoder {
    pub b: CMat,
}

impl DigitalPrecoder {
    pub fn power(&self) -> f64 {
        frob2(&self.b)
    }
}

impl Precoder for DigitalPrecoder {
    fn effective(&self) -> CMat {
        self.b.clone()
    }
}

impl Precoder for CMat {
    fn effective(&self) -> CMat {
        self.clone()
    }
}
