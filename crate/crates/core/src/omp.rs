//! Orthogonal matching pursuit hybrid precoders over the ray-response
//! dictionary, and the zero-forcing target they approximate.

use crate::channel::ChannelSet;
use crate::config::{subarrays, Structure, SystemConfig};
use crate::error::{Error, Result};
use crate::linalg::{frob2, hermitian_cholesky, CMat, RMat, C64};
use crate::precoder::{DigitalPrecoder, HybridPrecoder, RfPhases};

/// `H (HᴴH)⁻¹` with every column scaled to power `P_max / K`, so that
/// `HᴴB` is diagonal.
pub fn zf_target(ch: &ChannelSet, cfg: &SystemConfig) -> Result<DigitalPrecoder> {
    let h = &ch.h;
    let k = h.ncols();
    let mut gram = h.adjoint() * h;
    let chol = match hermitian_cholesky(&gram, "channel Gram matrix") {
        Ok(c) => c,
        Err(_) => {
            let trace: f64 = (0..k).map(|i| gram[(i, i)].re).sum();
            let jitter = 1e-10 * trace / k as f64;
            for i in 0..k {
                gram[(i, i)] += C64::new(jitter, 0.0);
            }
            hermitian_cholesky(&gram, "channel Gram matrix")?
        }
    };
    let mut b = h * chol.inverse();
    let per_user = cfg.p_max_w() / k as f64;
    for mut col in b.column_iter_mut() {
        let norm = col.norm();
        if norm > 0.0 {
            col *= C64::new(per_user.sqrt() / norm, 0.0);
        }
    }
    Ok(DigitalPrecoder { b })
}

#[derive(Debug, Clone)]
pub struct OmpOutcome {
    pub precoder: HybridPrecoder,
    /// Dictionary columns in selection order; chain `j` uses `selected[j]`.
    pub selected: Vec<usize>,
    /// `‖target − B_RF B_BB‖_F` after each selection (full wiring, before
    /// masking and power scaling).
    pub residuals: Vec<f64>,
}

fn least_squares(b_rf: &CMat, target: &CMat) -> Result<CMat> {
    let gram = b_rf.adjoint() * b_rf;
    let chol = hermitian_cholesky(&gram, "selected RF columns")?;
    Ok(chol.solve(&(b_rf.adjoint() * target)))
}

pub fn omp_hybrid(
    ch: &ChannelSet,
    target: &DigitalPrecoder,
    cfg: &SystemConfig,
    structure: Structure,
) -> Result<HybridPrecoder> {
    Ok(omp_detailed(ch, target, cfg, structure)?.precoder)
}

/// Greedy selection of `N_RF` ray responses by residual correlation with a
/// least-squares baseband refit after each pick.
pub fn omp_detailed(
    ch: &ChannelSet,
    target: &DigitalPrecoder,
    cfg: &SystemConfig,
    structure: Structure,
) -> Result<OmpOutcome> {
    let dict = ch.ray_responses(cfg);
    let (n_tx, n_rays) = (dict.nrows(), dict.ncols());
    let n_rf = cfg.n_rf;
    if n_rays < n_rf {
        return Err(Error::DictionaryTooSmall {
            columns: n_rays,
            chains: n_rf,
        });
    }
    let f = &target.b;
    let amp = (n_tx as f64).sqrt();

    let mut selected: Vec<usize> = Vec::with_capacity(n_rf);
    let mut residuals = Vec::with_capacity(n_rf);
    let mut residual = f.clone();
    let mut b_rf = CMat::zeros(n_tx, 0);
    let mut b_bb = CMat::zeros(0, f.ncols());
    for _ in 0..n_rf {
        let corr = dict.adjoint() * &residual;
        let pick = (0..n_rays)
            .filter(|l| !selected.contains(l))
            .map(|l| (l, corr.row(l).norm_squared()))
            .fold((usize::MAX, f64::NEG_INFINITY), |best, cand| {
                if cand.1 > best.1 {
                    cand
                } else {
                    best
                }
            })
            .0;
        selected.push(pick);
        b_rf = CMat::from_fn(n_tx, selected.len(), |i, j| dict[(i, selected[j])] * amp);
        b_bb = least_squares(&b_rf, f)?;
        residual = f - &b_rf * &b_bb;
        residuals.push(residual.norm());
    }

    let mut precoder = match structure {
        Structure::Full => HybridPrecoder {
            n_tx,
            rf: RfPhases::Full(RMat::from_fn(n_tx, n_rf, |i, j| b_rf[(i, j)].arg())),
            b_bb,
        },
        Structure::Partial => {
            let mut phases = vec![0.0; n_tx];
            for (j, range) in subarrays(n_tx, n_rf).into_iter().enumerate() {
                for i in range {
                    phases[i] = b_rf[(i, j)].arg();
                }
            }
            let shell = HybridPrecoder::partial_from_antenna_phases(&phases, CMat::zeros(n_rf, 0));
            let masked = HybridPrecoder {
                n_tx,
                rf: shell.rf,
                b_bb: CMat::zeros(n_rf, f.ncols()),
            };
            let b_bb = least_squares(&masked.rf_matrix(), f)?;
            HybridPrecoder { b_bb, ..masked }
        }
    };
    precoder.clamp_power(cfg.p_max_w());
    debug_assert!(frob2(&precoder.b_bb).is_finite());
    Ok(OmpOutcome {
        precoder,
        selected,
        residuals,
    })
}
