//! Hybrid factorization `B_opt ≈ B_RF · B_BB` and the composed two-stage
//! optimizer.
//!
//! The baseband step is a least-squares fit under a power ball. It is written
//! as a homogeneous real QCQP in `x = [Re vec B_BB; Im vec B_BB; t]`, relaxed
//! to a semidefinite program and rounded back by Gaussian randomization. The
//! RF step sets every phase shifter to the argument of the matching row inner
//! product.

use std::f64::consts::TAU;

use rand::Rng;

use crate::channel::ChannelSet;
use crate::config::{owning_chain, Structure, SystemConfig};
use crate::error::{Error, Result};
use crate::linalg::{frob2, CMat, RMat, RVec, C64};
use crate::precoder::{DigitalPrecoder, HybridPrecoder, Precoder, RfPhases};
use crate::sdp::{randomize_rank1, solve_sdp, SdpStatus, TraceSdp};
use crate::seed;
use crate::upper_bound::{optimize_digital, DigitalOutcome};

/// Relative decrease a new iterate must achieve to be accepted.
const ACCEPT_REL: f64 = 1e-6;
/// Extra randomization rounds tried before the alternation gives up.
const RETRIES: usize = 3;
/// `λ₂ ≤ RANK_ONE_TOL · λ₁` counts as rank one.
const RANK_ONE_TOL: f64 = 1e-6;
const PSD_TOL: f64 = 1e-7;

#[derive(Debug, Clone)]
pub struct FactorizationProblem {
    pub b_opt: CMat,
    pub structure: Structure,
    pub n_rf: usize,
    pub p_max: f64,
    pub eps2: f64,
    pub max_alternations: usize,
    pub n_randomizations: usize,
    pub sdp_tol: f64,
}

impl FactorizationProblem {
    pub fn new(b_opt: &DigitalPrecoder, cfg: &SystemConfig, structure: Structure) -> Self {
        FactorizationProblem {
            b_opt: b_opt.b.clone(),
            structure,
            n_rf: cfg.n_rf,
            p_max: cfg.p_max_w(),
            eps2: cfg.eps2_rel * b_opt.b.norm(),
            max_alternations: cfg.max_alternations,
            n_randomizations: cfg.n_randomizations,
            sdp_tol: cfg.sdp_tol,
        }
    }

    pub fn n_tx(&self) -> usize {
        self.b_opt.nrows()
    }

    pub fn n_users(&self) -> usize {
        self.b_opt.ncols()
    }

    pub fn distance(&self, p: &HybridPrecoder) -> f64 {
        (&self.b_opt - p.effective()).norm()
    }
}

/// Real homogeneous form of the baseband fit for a fixed RF matrix:
/// `‖B_opt − B_RF B_BB‖_F² = xᵀ T x` when `t = 1`, power `xᵀ Γ₁ x ≤ bound`,
/// and `xᵀ Γ₂ x = t² = 1`.
#[derive(Debug, Clone)]
pub struct RealQcqpEmbedding {
    /// `2·K·N_RF + 1`.
    pub n: usize,
    pub t: RMat,
    pub gamma1: RMat,
    pub gamma2: RMat,
    pub power_bound: f64,
    n_rf: usize,
    n_users: usize,
    b_rf: CMat,
    b_opt: CMat,
}

impl RealQcqpEmbedding {
    pub fn new(prob: &FactorizationProblem, b_rf: &CMat) -> Self {
        let n_rf = b_rf.ncols();
        let k = prob.n_users();
        let m = n_rf * k;
        let n = 2 * m + 1;
        let gram = b_rf.adjoint() * b_rf;
        let corr = b_rf.adjoint() * &prob.b_opt;

        // Q = real form of I_K ⊗ BᴴB, q = real form of vec(Bᴴ B_opt)
        let mut t = RMat::zeros(n, n);
        for c in 0..k {
            for i in 0..n_rf {
                for j in 0..n_rf {
                    let g = gram[(i, j)];
                    let (r, s) = (c * n_rf + i, c * n_rf + j);
                    t[(r, s)] = g.re;
                    t[(m + r, m + s)] = g.re;
                    t[(r, m + s)] = -g.im;
                    t[(m + r, s)] = g.im;
                }
                let q = corr[(i, c)];
                let r = c * n_rf + i;
                t[(r, n - 1)] = -q.re;
                t[(n - 1, r)] = -q.re;
                t[(m + r, n - 1)] = -q.im;
                t[(n - 1, m + r)] = -q.im;
            }
        }
        t[(n - 1, n - 1)] = frob2(&prob.b_opt);

        let scale = match prob.structure {
            Structure::Partial => n_rf as f64 / prob.n_tx() as f64,
            Structure::Full => 1.0,
        };
        let mut gamma1 = RMat::zeros(n, n);
        gamma1
            .view_mut((0, 0), (2 * m, 2 * m))
            .copy_from(&(t.view((0, 0), (2 * m, 2 * m)) * scale));
        let mut gamma2 = RMat::zeros(n, n);
        gamma2[(n - 1, n - 1)] = 1.0;

        RealQcqpEmbedding {
            n,
            t,
            gamma1,
            gamma2,
            power_bound: prob.p_max * scale,
            n_rf,
            n_users: k,
            b_rf: b_rf.clone(),
            b_opt: prob.b_opt.clone(),
        }
    }

    /// `x` for a baseband matrix with `t = 1`.
    pub fn embed(&self, b_bb: &CMat) -> RVec {
        let m = self.n_rf * self.n_users;
        let mut x = RVec::zeros(self.n);
        for c in 0..self.n_users {
            for j in 0..self.n_rf {
                let z = b_bb[(j, c)];
                x[c * self.n_rf + j] = z.re;
                x[m + c * self.n_rf + j] = z.im;
            }
        }
        x[self.n - 1] = 1.0;
        x
    }

    /// Baseband matrix from `x / t`; `None` when `t` vanishes.
    pub fn de_embed(&self, x: &RVec) -> Option<CMat> {
        let t = x[self.n - 1];
        if t.abs() <= f64::MIN_POSITIVE || !t.is_finite() {
            return None;
        }
        let m = self.n_rf * self.n_users;
        Some(CMat::from_fn(self.n_rf, self.n_users, |j, c| {
            C64::new(x[c * self.n_rf + j], x[m + c * self.n_rf + j]) / t
        }))
    }

    pub fn quadratic(&self, m: &RMat, x: &RVec) -> f64 {
        x.dot(&(m * x))
    }

    /// Real form of `I_K ⊗ B_RF`.
    pub fn zeta(&self) -> RMat {
        let n_tx = self.b_rf.nrows();
        let (rows, cols) = (n_tx * self.n_users, self.n_rf * self.n_users);
        let mut z = RMat::zeros(2 * rows, 2 * cols);
        for c in 0..self.n_users {
            for i in 0..n_tx {
                for j in 0..self.n_rf {
                    let v = self.b_rf[(i, j)];
                    let (r, s) = (c * n_tx + i, c * self.n_rf + j);
                    z[(r, s)] = v.re;
                    z[(rows + r, cols + s)] = v.re;
                    z[(r, cols + s)] = -v.im;
                    z[(rows + r, s)] = v.im;
                }
            }
        }
        z
    }

    /// `[Re vec B_opt; Im vec B_opt]`.
    pub fn b_real(&self) -> RVec {
        let len = self.b_opt.len();
        RVec::from_fn(2 * len, |i, _| {
            let z = self.b_opt[i % len];
            if i < len {
                z.re
            } else {
                z.im
            }
        })
    }

    pub fn sdp(&self) -> TraceSdp {
        TraceSdp {
            objective: self.t.clone(),
            equalities: vec![(self.gamma2.clone(), 1.0)],
            inequalities: vec![(self.gamma1.clone(), self.power_bound)],
        }
    }
}

#[derive(Debug, Clone)]
pub struct BasebandStep {
    pub b_bb: CMat,
    /// `xᵀ T x` of the selected candidate, i.e. the squared distance.
    pub rounded_objective: f64,
    pub sdr_objective: f64,
    pub sdr_status: SdpStatus,
    pub rank_one: bool,
    /// True when no candidate met the power bound and the best one was
    /// scaled onto it.
    pub rescaled: bool,
}

/// Solves the relaxation for fixed `b_rf` and rounds it to a power-feasible
/// baseband matrix.
pub fn baseband_step(prob: &FactorizationProblem, b_rf: &CMat, seed: u64) -> Result<BasebandStep> {
    let emb = RealQcqpEmbedding::new(prob, b_rf);
    let sol = solve_sdp(&emb.sdp(), prob.sdp_tol)?;
    if sol.status == SdpStatus::Infeasible {
        return Err(Error::Dimension(
            "baseband relaxation reported infeasible".into(),
        ));
    }
    let mut x = sol.x.clone();
    crate::linalg::symmetrize(&mut x);
    let eig = x.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..emb.n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let l1 = eig.eigenvalues[order[0]].max(0.0);
    let l2 = order.get(1).map_or(0.0, |&i| eig.eigenvalues[i].max(0.0));
    let rank_one = l2 <= RANK_ONE_TOL * l1;
    let principal = eig.eigenvectors.column(order[0]) * l1.sqrt();

    let mut candidates = vec![principal];
    if let Some(kkt) = kkt_candidate(&emb, -sol.y[1]) {
        candidates.push(kkt);
    }
    if !rank_one {
        candidates.extend(randomize_rank1(&x, prob.n_randomizations, seed, PSD_TOL)?);
    }

    let mut best_feasible: Option<(f64, RVec)> = None;
    let mut best_any: Option<(f64, RVec)> = None;
    for cand in candidates {
        let t = cand[emb.n - 1];
        if t.abs() <= f64::MIN_POSITIVE || !t.is_finite() {
            continue;
        }
        let xn = cand / t;
        let obj = emb.quadratic(&emb.t, &xn);
        let power = emb.quadratic(&emb.gamma1, &xn);
        if !obj.is_finite() {
            continue;
        }
        if power <= emb.power_bound && best_feasible.as_ref().is_none_or(|(o, _)| obj < *o) {
            best_feasible = Some((obj, xn.clone()));
        }
        if best_any.as_ref().is_none_or(|(o, _)| obj < *o) {
            best_any = Some((obj, xn));
        }
    }

    let (rescaled, xn) = match (best_feasible, best_any) {
        (Some((_, xn)), _) => (false, xn),
        (None, Some((_, mut xn))) => {
            let power = emb.quadratic(&emb.gamma1, &xn);
            let s = (emb.power_bound / power).sqrt();
            let last = emb.n - 1;
            xn.rows_mut(0, last).scale_mut(s);
            (true, xn)
        }
        (None, None) => {
            // every draw had t = 0; the zero baseband matrix is feasible
            let mut xn = RVec::zeros(emb.n);
            xn[emb.n - 1] = 1.0;
            (true, xn)
        }
    };
    let b_bb = emb.de_embed(&xn).expect("t normalized to one");
    Ok(BasebandStep {
        rounded_objective: emb.quadratic(&emb.t, &xn),
        b_bb,
        sdr_objective: sol.objective,
        sdr_status: sol.status,
        rank_one,
        rescaled,
    })
}

/// Primal point recovered from the power multiplier `λ ≥ 0`: the minimizer
/// of `xᵀ(T + λΓ₁)x` with `t = 1`, pulled onto the power bound if needed.
fn kkt_candidate(emb: &RealQcqpEmbedding, lambda: f64) -> Option<RVec> {
    let m2 = emb.n - 1;
    let lambda = lambda.max(0.0);
    let lhs = emb.t.view((0, 0), (m2, m2)) + emb.gamma1.view((0, 0), (m2, m2)) * lambda;
    let rhs = -emb.t.view((0, m2), (m2, 1)).clone_owned();
    let v = lhs.cholesky()?.solve(&rhs);
    let mut x = RVec::zeros(emb.n);
    x.rows_mut(0, m2).copy_from(&v.column(0));
    x[m2] = 1.0;
    let power = emb.quadratic(&emb.gamma1, &x);
    if power > emb.power_bound {
        x.rows_mut(0, m2)
            .scale_mut((emb.power_bound / power).sqrt());
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}

fn row_phase(b_opt: &CMat, b_bb: &CMat, i: usize, j: usize) -> f64 {
    let mut acc = C64::new(0.0, 0.0);
    for c in 0..b_opt.ncols() {
        acc += b_opt[(i, c)] * b_bb[(j, c)].conj();
    }
    if acc.norm() == 0.0 {
        0.0
    } else {
        acc.arg()
    }
}

/// Phase update: antenna `i` on chain `j` gets `arg(B_opt(i,:) · B_BB(j,:)ᴴ)`.
/// Under the partial wiring only the owning chain of each antenna is set.
pub fn rf_step(b_opt: &CMat, b_bb: &CMat, structure: Structure) -> RfPhases {
    let n_tx = b_opt.nrows();
    let n_rf = b_bb.nrows();
    match structure {
        Structure::Partial => {
            let phases: Vec<f64> = (0..n_tx)
                .map(|i| row_phase(b_opt, b_bb, i, owning_chain(i, n_tx, n_rf)))
                .collect();
            HybridPrecoder::partial_from_antenna_phases(&phases, b_bb.clone()).rf
        }
        Structure::Full => RfPhases::Full(RMat::from_fn(n_tx, n_rf, |i, j| {
            row_phase(b_opt, b_bb, i, j)
        })),
    }
}

fn random_rf(n_tx: usize, n_rf: usize, structure: Structure, seed: u64) -> RfPhases {
    let mut rng = seed::rng(seed);
    match structure {
        Structure::Partial => {
            let phases: Vec<f64> = (0..n_tx).map(|_| rng.random::<f64>() * TAU).collect();
            HybridPrecoder::partial_from_antenna_phases(&phases, CMat::zeros(n_rf, 0)).rf
        }
        Structure::Full => {
            RfPhases::Full(RMat::from_fn(n_tx, n_rf, |_, _| rng.random::<f64>() * TAU))
        }
    }
}

/// One alternation attempt.
#[derive(Debug, Clone, PartialEq)]
pub struct AlternationRecord {
    pub alternation: usize,
    pub attempt: usize,
    pub distance: f64,
    pub sdr_objective: f64,
    /// Rounded objective minus the relaxation's objective.
    pub rounding_gap: f64,
    pub accepted: bool,
}

#[derive(Debug, Clone)]
pub struct FactorizationOutcome {
    pub precoder: HybridPrecoder,
    pub distance: f64,
    pub trace: Vec<AlternationRecord>,
    /// True when the distance fell below `ε2`.
    pub converged: bool,
}

impl FactorizationOutcome {
    pub fn accepted_distances(&self) -> Vec<f64> {
        self.trace
            .iter()
            .filter(|r| r.accepted)
            .map(|r| r.distance)
            .collect()
    }
}

/// Alternates baseband and RF updates from random phases, keeping only
/// iterates that reduce the distance.
pub fn factorize(prob: &FactorizationProblem, seed: u64) -> Result<FactorizationOutcome> {
    let n_tx = prob.n_tx();
    let k = prob.n_users();
    if prob.n_rf == 0 || prob.n_rf > n_tx {
        return Err(Error::Dimension(format!(
            "{} RF chains for {n_tx} antennas",
            prob.n_rf
        )));
    }
    let mut current = HybridPrecoder {
        n_tx,
        rf: random_rf(n_tx, prob.n_rf, prob.structure, seed::derive(&[seed, 0])),
        b_bb: CMat::zeros(prob.n_rf, k),
    };
    let mut best = prob.distance(&current);
    let mut trace = Vec::new();
    let mut converged = best < prob.eps2;

    'outer: for alternation in 1..=prob.max_alternations {
        if converged {
            break;
        }
        let b_rf = current.rf_matrix();
        let mut accepted = false;
        for attempt in 0..=RETRIES {
            let step_seed = seed::derive(&[seed, alternation as u64, attempt as u64]);
            let step = baseband_step(prob, &b_rf, step_seed)?;

            let after_bb = HybridPrecoder {
                n_tx,
                rf: current.rf.clone(),
                b_bb: step.b_bb.clone(),
            };
            let mut after_rf = HybridPrecoder {
                n_tx,
                rf: rf_step(&prob.b_opt, &step.b_bb, prob.structure),
                b_bb: step.b_bb.clone(),
            };
            after_rf.clamp_power(prob.p_max);
            let (d_bb, d_rf) = (prob.distance(&after_bb), prob.distance(&after_rf));
            let (cand, d) = if d_rf <= d_bb {
                (after_rf, d_rf)
            } else {
                (after_bb, d_bb)
            };

            let ok = d < best * (1.0 - ACCEPT_REL);
            trace.push(AlternationRecord {
                alternation,
                attempt,
                distance: d,
                sdr_objective: step.sdr_objective,
                rounding_gap: step.rounded_objective - step.sdr_objective,
                accepted: ok,
            });
            if ok {
                current = cand;
                best = d;
                accepted = true;
                converged = best < prob.eps2;
                break;
            }
            if step.rank_one {
                break;
            }
        }
        if !accepted {
            break 'outer;
        }
    }

    current.clamp_power(prob.p_max);
    Ok(FactorizationOutcome {
        distance: prob.distance(&current),
        precoder: current,
        trace,
        converged,
    })
}

#[derive(Debug, Clone)]
pub struct PhoneOutcome {
    pub digital: DigitalOutcome,
    pub factorization: FactorizationOutcome,
}

impl PhoneOutcome {
    pub fn precoder(&self) -> &HybridPrecoder {
        &self.factorization.precoder
    }

    pub fn converged(&self) -> bool {
        self.digital.converged && self.factorization.converged
    }
}

/// Digital ascent followed by partially-connected factorization.
pub fn phone(ch: &ChannelSet, cfg: &SystemConfig, seed: u64) -> Result<PhoneOutcome> {
    phone_with_structure(ch, cfg, seed, Structure::Partial)
}

pub fn phone_with_structure(
    ch: &ChannelSet,
    cfg: &SystemConfig,
    seed: u64,
    structure: Structure,
) -> Result<PhoneOutcome> {
    let digital = optimize_digital(ch, cfg, seed::derive(&[seed, 1]))?;
    let prob = FactorizationProblem::new(&digital.precoder, cfg, structure);
    let factorization = factorize(&prob, seed::derive(&[seed, 2]))?;
    Ok(PhoneOutcome {
        digital,
        factorization,
    })
}
