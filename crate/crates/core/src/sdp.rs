//! Small dense semidefinite programs in trace form and Gaussian
//! randomization.
//!
//! ```text
//! minimize    Tr(C X)
//! subject to  Tr(A_i X) = b_i      (equalities)
//!             Tr(F_j X) ≤ d_j      (inequalities)
//!             X ⪰ 0
//! ```
//!
//! Solved by an infeasible-start primal-dual interior point method with
//! Nesterov-Todd scaling and a Mehrotra predictor-corrector. Inequalities get
//! nonnegative slacks. The problems met here are tiny (`n ≈ 2·K·N_RF + 1`,
//! two constraints), so every iteration works with dense `n × n` matrices.

use faer::Side;
use nalgebra::{Cholesky, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::{eye, symmetrize, RMat, RVec};
use crate::seed;

#[derive(Debug, Clone, PartialEq)]
pub struct TraceSdp {
    pub objective: RMat,
    pub equalities: Vec<(RMat, f64)>,
    pub inequalities: Vec<(RMat, f64)>,
}

impl TraceSdp {
    pub fn dim(&self) -> usize {
        self.objective.nrows()
    }

    fn validate(&self, cap: usize) -> Result<()> {
        let n = self.dim();
        if n == 0 || self.objective.ncols() != n {
            return Err(Error::Dimension(
                "objective must be square and non-empty".into(),
            ));
        }
        if n > cap {
            return Err(Error::SdpTooLarge { n, cap });
        }
        let mats = std::iter::once(&self.objective)
            .chain(self.equalities.iter().map(|(a, _)| a))
            .chain(self.inequalities.iter().map(|(a, _)| a));
        for m in mats {
            if m.nrows() != n || m.ncols() != n {
                return Err(Error::Dimension(format!(
                    "constraint is {}x{}, expected {n}x{n}",
                    m.nrows(),
                    m.ncols()
                )));
            }
            if (m - m.transpose()).amax() > 1e-12 * m.amax().max(1.0) {
                return Err(Error::Dimension("matrices must be symmetric".into()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SdpStatus {
    Optimal,
    MaxIter,
    Infeasible,
}

#[derive(Debug, Clone)]
pub struct SdpSolution {
    pub x: RMat,
    /// Dual multipliers, equalities first then inequalities (`≤ 0`).
    pub y: Vec<f64>,
    /// `Tr(C X)`.
    pub objective: f64,
    pub dual_objective: f64,
    /// `(Tr(XZ) + sᵀz) / (1 + |primal| + |dual|)`.
    pub duality_gap: f64,
    /// Relative primal residual `‖b − A(X) − s‖ / (1 + ‖b‖)`.
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub status: SdpStatus,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SdpOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Largest accepted matrix dimension.
    pub max_dim: usize,
    /// Fraction of the distance to the cone boundary taken per step.
    pub step_fraction: f64,
}

impl Default for SdpOptions {
    fn default() -> Self {
        SdpOptions {
            tol: 1e-7,
            max_iter: 100,
            max_dim: 512,
            step_fraction: 0.95,
        }
    }
}

pub fn solve_sdp(prob: &TraceSdp, tol: f64) -> Result<SdpSolution> {
    solve_sdp_with(
        prob,
        &SdpOptions {
            tol,
            ..SdpOptions::default()
        },
    )
}

// Dense kernels run on faer; the public interface stays on nalgebra.
type FMat = faer::Mat<f64>;

fn to_faer(m: &RMat) -> FMat {
    FMat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

fn to_nalgebra(m: &FMat) -> RMat {
    RMat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

fn fdot(a: &FMat, b: &FMat) -> f64 {
    let mut acc = 0.0;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            acc += a[(i, j)] * b[(i, j)];
        }
    }
    acc
}

fn fnorm(a: &FMat) -> f64 {
    fdot(a, a).sqrt()
}

fn fsym(a: &mut FMat) {
    let n = a.nrows();
    for j in 0..n {
        for i in (j + 1)..n {
            let v = 0.5 * (a[(i, j)] + a[(j, i)]);
            a[(i, j)] = v;
            a[(j, i)] = v;
        }
    }
}

/// `a += s·b`
fn axpy(a: &mut FMat, s: f64, b: &FMat) {
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            a[(i, j)] += s * b[(i, j)];
        }
    }
}

fn scaled(a: &FMat, s: f64) -> FMat {
    FMat::from_fn(a.nrows(), a.ncols(), |i, j| s * a[(i, j)])
}

fn eigenvalues(a: &FMat) -> Option<Vec<f64>> {
    a.self_adjoint_eigenvalues(Side::Lower).ok()
}

fn cholesky_factor(a: &FMat) -> Option<FMat> {
    a.llt(Side::Lower).ok().map(|f| f.L().to_owned())
}

/// Largest `α` with `Σ + α Δ ⪰ 0` for diagonal `Σ = diag(σ)`.
fn scaled_cone_step(inv_sqrt: &[f64], delta: &FMat) -> f64 {
    let n = delta.nrows();
    let mut m = FMat::from_fn(n, n, |i, j| inv_sqrt[i] * delta[(i, j)] * inv_sqrt[j]);
    fsym(&mut m);
    match eigenvalues(&m).and_then(|e| e.first().copied()) {
        Some(lmin) if lmin < 0.0 => -1.0 / lmin,
        Some(_) => f64::INFINITY,
        None => 0.0,
    }
}

fn orthant_step(v: &[f64], dv: &[f64]) -> f64 {
    v.iter()
        .zip(dv)
        .filter(|(_, d)| **d < 0.0)
        .map(|(x, d)| -x / d)
        .fold(f64::INFINITY, f64::min)
}

struct Direction {
    dx: FMat,
    dy: DVector<f64>,
    dz: FMat,
    ds: Vec<f64>,
    dzl: Vec<f64>,
}

pub fn solve_sdp_with(prob: &TraceSdp, opts: &SdpOptions) -> Result<SdpSolution> {
    prob.validate(opts.max_dim)?;
    faer::set_global_parallelism(faer::Par::Seq);
    let n = prob.dim();
    let c = to_faer(&prob.objective);

    // All constraints in one list; inequality i gets slack index slack[i].
    let mut a: Vec<FMat> = Vec::new();
    let mut b: Vec<f64> = Vec::new();
    let mut slack: Vec<Option<usize>> = Vec::new();
    for (m, v) in &prob.equalities {
        a.push(to_faer(m));
        b.push(*v);
        slack.push(None);
    }
    for (l, (m, v)) in prob.inequalities.iter().enumerate() {
        a.push(to_faer(m));
        b.push(*v);
        slack.push(Some(l));
    }
    let m = a.len();
    let nl = prob.inequalities.len();
    let b_vec = DVector::from_vec(b.clone());
    let b_norm = b_vec.norm();
    let c_norm = fnorm(&c);

    let nf = n as f64;
    let xi = a
        .iter()
        .zip(&b)
        .map(|(ai, bi)| nf * (1.0 + bi.abs()) / (1.0 + fnorm(ai)))
        .fold(10f64.max(nf.sqrt()), f64::max);
    let eta = a
        .iter()
        .map(fnorm)
        .fold(10f64.max(nf.sqrt()).max(c_norm), f64::max);

    let mut x = scaled(&FMat::identity(n, n), xi);
    let mut z = scaled(&FMat::identity(n, n), eta);
    let mut s = vec![xi; nl];
    let mut zl = vec![eta; nl];
    let mut y = DVector::<f64>::zeros(m);

    let mut status = SdpStatus::MaxIter;
    let mut iterations = 0;
    let (mut pobj, mut dobj, mut rel_gap, mut pinf, mut dinf);

    loop {
        // residuals
        let mut r_p = DVector::<f64>::zeros(m);
        for i in 0..m {
            r_p[i] = b[i] - fdot(&a[i], &x) - slack[i].map_or(0.0, |l| s[l]);
        }
        let mut r_d = &c - &z;
        for i in 0..m {
            axpy(&mut r_d, -y[i], &a[i]);
        }
        let mut r_dl = vec![0.0; nl];
        for i in 0..m {
            if let Some(l) = slack[i] {
                r_dl[l] = -y[i] - zl[l];
            }
        }
        pobj = fdot(&c, &x);
        dobj = b_vec.dot(&y);
        let lp_comp: f64 = s.iter().zip(&zl).map(|(p, q)| p * q).sum();
        let comp = fdot(&x, &z) + lp_comp;
        rel_gap = comp / (1.0 + pobj.abs() + dobj.abs());
        pinf = r_p.norm() / (1.0 + b_norm);
        let rdl2: f64 = r_dl.iter().map(|v| v * v).sum();
        dinf = (fdot(&r_d, &r_d) + rdl2).sqrt() / (1.0 + c_norm);

        if rel_gap <= opts.tol && pinf <= opts.tol && dinf <= opts.tol {
            status = SdpStatus::Optimal;
            break;
        }
        if iterations >= 5 && dobj > 0.0 && pinf > opts.tol {
            // Farkas certificate: Σ ȳ_i A_i ⪯ 0, ȳ ≤ 0 on slacks, bᵀȳ = 1.
            let ybar = &y / dobj;
            let mut cert = FMat::zeros(n, n);
            for i in 0..m {
                axpy(&mut cert, ybar[i], &a[i]);
            }
            fsym(&mut cert);
            let lmax = eigenvalues(&cert)
                .and_then(|e| e.last().copied())
                .unwrap_or(f64::INFINITY);
            let slack_ok = (0..m).all(|i| slack[i].is_none() || ybar[i] <= opts.tol);
            if lmax <= opts.tol && slack_ok {
                status = SdpStatus::Infeasible;
                break;
            }
        }
        if iterations >= opts.max_iter {
            break;
        }
        iterations += 1;

        // Nesterov-Todd scaling point. With Z = RRᵀ and RᵀXR = U Σ² Uᵀ:
        // G = X R U Σ^{-3/2}, G⁻¹ = Σ^{-1/2} Uᵀ Rᵀ, W = GGᵀ, so that
        // G⁻¹XG⁻ᵀ = GᵀZG = Σ.
        let (Some(_), Some(rz)) = (cholesky_factor(&x), cholesky_factor(&z)) else {
            break;
        };
        let xr = &x * &rz;
        let mut rxr = rz.transpose() * &xr;
        fsym(&mut rxr);
        let Ok(eig) = rxr.self_adjoint_eigen(Side::Lower) else {
            break;
        };
        let lam = eig.S().column_vector();
        if (0..n).any(|i| !(lam[i] > 0.0)) {
            break;
        }
        let sigma: Vec<f64> = (0..n).map(|i| lam[i].sqrt()).collect();
        let inv_sqrt: Vec<f64> = sigma.iter().map(|v| 1.0 / v.sqrt()).collect();
        let u = eig.U();
        let mut g = &xr * u;
        for j in 0..n {
            let f = inv_sqrt[j] / sigma[j];
            for i in 0..n {
                g[(i, j)] *= f;
            }
        }
        let mut g_inv = u.transpose() * rz.transpose();
        for i in 0..n {
            for j in 0..n {
                g_inv[(i, j)] *= inv_sqrt[i];
            }
        }
        let mut w = &g * g.transpose();
        fsym(&mut w);

        let waw: Vec<FMat> = a.iter().map(|ai| &w * ai * &w).collect();
        let wrw = &w * &r_d * &w;
        let mut schur = RMat::zeros(m, m);
        for i in 0..m {
            for j in i..m {
                let mut v = fdot(&a[i], &waw[j]);
                if let (Some(li), Some(lj)) = (slack[i], slack[j]) {
                    if li == lj {
                        v += s[li] / zl[li];
                    }
                }
                schur[(i, j)] = v;
                schur[(j, i)] = v;
            }
        }
        let schur_chol = match Cholesky::new(schur.clone()) {
            Some(ch) => ch,
            None => {
                let ridge = 1e-14 * schur.diagonal().amax().max(1e-300);
                match Cholesky::new(schur + eye(m) * ridge) {
                    Some(ch) => ch,
                    None => break,
                }
            }
        };

        // Newton system for a scaled complementarity target `rc`
        // (ΔX̃ + ΔZ̃ = D with Σ∘D = rc) and slack target `rcl`.
        let solve = |rc: &FMat, rcl: &[f64]| -> Direction {
            let d = FMat::from_fn(n, n, |i, j| 2.0 * rc[(i, j)] / (sigma[i] + sigma[j]));
            let gdg = &g * &d * g.transpose();
            let mut rhs = DVector::<f64>::zeros(m);
            for i in 0..m {
                rhs[i] = r_p[i] - fdot(&a[i], &gdg) + fdot(&a[i], &wrw);
                if let Some(l) = slack[i] {
                    rhs[i] -= rcl[l] / zl[l] - s[l] / zl[l] * r_dl[l];
                }
            }
            let dy = schur_chol.solve(&rhs);
            let mut dz = r_d.clone();
            let mut dx = &gdg - &wrw;
            for j in 0..m {
                axpy(&mut dz, -dy[j], &a[j]);
                axpy(&mut dx, dy[j], &waw[j]);
            }
            fsym(&mut dx);
            fsym(&mut dz);
            let mut dzl = vec![0.0; nl];
            let mut ds = vec![0.0; nl];
            for i in 0..m {
                if let Some(l) = slack[i] {
                    dzl[l] = r_dl[l] - dy[i];
                    ds[l] = (rcl[l] - s[l] * dzl[l]) / zl[l];
                }
            }
            Direction {
                dx,
                dy,
                dz,
                ds,
                dzl,
            }
        };
        // directions mapped into the scaled space
        let scale_dirs = |dir: &Direction| -> (FMat, FMat) {
            (
                &g_inv * &dir.dx * g_inv.transpose(),
                g.transpose() * &dir.dz * &g,
            )
        };
        let steps = |dx_t: &FMat, dz_t: &FMat, dir: &Direction| -> (f64, f64) {
            let ap = scaled_cone_step(&inv_sqrt, dx_t).min(orthant_step(&s, &dir.ds));
            let ad = scaled_cone_step(&inv_sqrt, dz_t).min(orthant_step(&zl, &dir.dzl));
            (ap, ad)
        };

        let mu = comp / (n + nl) as f64;

        // predictor
        let rc_aff = FMat::from_fn(n, n, |i, j| if i == j { -sigma[i] * sigma[i] } else { 0.0 });
        let rcl_aff: Vec<f64> = s.iter().zip(&zl).map(|(p, q)| -p * q).collect();
        let aff = solve(&rc_aff, &rcl_aff);
        let (dx_t, dz_t) = scale_dirs(&aff);
        let (ap, ad) = steps(&dx_t, &dz_t, &aff);
        let (ap, ad) = (ap.min(1.0), ad.min(1.0));
        // ⟨X + αΔX, Z + βΔZ⟩ in scaled coordinates
        let mut xz_aff = 0.0;
        for j in 0..n {
            for i in 0..n {
                let diag = if i == j { sigma[i] } else { 0.0 };
                xz_aff += (diag + ap * dx_t[(i, j)]) * (diag + ad * dz_t[(i, j)]);
            }
        }
        let lp_aff: f64 = (0..nl)
            .map(|l| (s[l] + ap * aff.ds[l]) * (zl[l] + ad * aff.dzl[l]))
            .sum();
        let mu_aff = (xz_aff + lp_aff) / (n + nl) as f64;
        let centering = (mu_aff / mu).clamp(0.0, 1.0).powi(3);

        // corrector
        let mut rc = &dx_t * &dz_t;
        for j in 0..n {
            for i in 0..=j {
                let v = -0.5 * (rc[(i, j)] + rc[(j, i)]);
                rc[(i, j)] = v;
                rc[(j, i)] = v;
            }
        }
        for i in 0..n {
            rc[(i, i)] += centering * mu - sigma[i] * sigma[i];
        }
        let rcl: Vec<f64> = (0..nl)
            .map(|l| centering * mu - s[l] * zl[l] - aff.ds[l] * aff.dzl[l])
            .collect();
        let dir = solve(&rc, &rcl);
        let (dx_t, dz_t) = scale_dirs(&dir);
        let (ap, ad) = steps(&dx_t, &dz_t, &dir);
        let ap = (opts.step_fraction * ap).min(1.0);
        let ad = (opts.step_fraction * ad).min(1.0);

        axpy(&mut x, ap, &dir.dx);
        axpy(&mut z, ad, &dir.dz);
        y += &dir.dy * ad;
        for l in 0..nl {
            s[l] += ap * dir.ds[l];
            zl[l] += ad * dir.dzl[l];
        }
        fsym(&mut x);
        fsym(&mut z);
    }

    Ok(SdpSolution {
        x: to_nalgebra(&x),
        y: y.iter().copied().collect(),
        objective: pobj,
        dual_objective: dobj,
        duality_gap: rel_gap,
        primal_residual: pinf,
        dual_residual: dinf,
        status,
        iterations,
    })
}

/// Draws `count` vectors `x = U Σ^{1/2} v`, `v ~ N(0, I)`, from the
/// eigendecomposition `X = U Σ Uᵀ`, so that `E[x xᵀ] = X`. Eigenvalues in
/// `[−psd_tol, 0)` are treated as zero.
pub fn randomize_rank1(x: &RMat, count: usize, seed: u64, psd_tol: f64) -> Result<Vec<RVec>> {
    let factor = psd_factor(x, psd_tol)?;
    let n = x.nrows();
    let mut rng = seed::rng(seed);
    Ok((0..count)
        .map(|_| {
            let v = RVec::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
            &factor * v
        })
        .collect())
}

/// `U Σ^{1/2}` for a PSD matrix.
pub fn psd_factor(x: &RMat, psd_tol: f64) -> Result<RMat> {
    let mut sym = x.clone();
    symmetrize(&mut sym);
    let eig = sym.symmetric_eigen();
    if let Some(&lmin) = eig.eigenvalues.iter().min_by(|a, b| a.total_cmp(b)) {
        if lmin < -psd_tol {
            return Err(Error::NotPsd {
                value: lmin,
                tol: psd_tol,
            });
        }
    }
    // eigenvalues at roundoff level relative to the largest are zero
    let lmax = eig.eigenvalues.amax();
    let floor = x.nrows() as f64 * f64::EPSILON * lmax;
    let mut factor = eig.eigenvectors;
    for (j, lambda) in eig.eigenvalues.iter().enumerate() {
        let sq = if *lambda > floor { lambda.sqrt() } else { 0.0 };
        factor.column_mut(j).scale_mut(sq);
    }
    Ok(factor)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit(n: usize, i: usize) -> RMat {
        let mut m = RMat::zeros(n, n);
        m[(i, i)] = 1.0;
        m
    }

    #[test]
    fn decoupled_diagonal() {
        let prob = TraceSdp {
            objective: RMat::from_diagonal(&RVec::from_vec(vec![1.0, 0.0])),
            equalities: vec![(unit(2, 1), 1.0)],
            inequalities: vec![],
        };
        let sol = solve_sdp(&prob, 1e-7).unwrap();
        assert_eq!(sol.status, SdpStatus::Optimal);
        assert!(sol.objective.abs() < 1e-6);
        assert!((sol.x[(1, 1)] - 1.0).abs() < 1e-6);
        assert!(sol.x[(0, 0)].abs() < 1e-6);
    }

    #[test]
    fn inequality_binds() {
        // min −X₀₀ s.t. X₁₁ = 1, X₀₀ ≤ 2
        let prob = TraceSdp {
            objective: unit(2, 0) * -1.0,
            equalities: vec![(unit(2, 1), 1.0)],
            inequalities: vec![(unit(2, 0), 2.0)],
        };
        let sol = solve_sdp(&prob, 1e-8).unwrap();
        assert_eq!(sol.status, SdpStatus::Optimal);
        assert!((sol.objective + 2.0).abs() < 1e-6);
    }

    #[test]
    fn infeasible_is_detected() {
        let prob = TraceSdp {
            objective: eye(2),
            equalities: vec![(unit(2, 0), -1.0)],
            inequalities: vec![],
        };
        let sol = solve_sdp(&prob, 1e-7).unwrap();
        assert_eq!(sol.status, SdpStatus::Infeasible);
    }

    #[test]
    fn rejects_oversized_and_asymmetric() {
        let prob = TraceSdp {
            objective: eye(600),
            equalities: vec![],
            inequalities: vec![],
        };
        assert!(matches!(
            solve_sdp(&prob, 1e-7),
            Err(Error::SdpTooLarge { n: 600, cap: 512 })
        ));
        let mut c = eye(2);
        c[(0, 1)] = 1.0;
        let prob = TraceSdp {
            objective: c,
            equalities: vec![],
            inequalities: vec![],
        };
        assert!(solve_sdp(&prob, 1e-7).is_err());
    }

    #[test]
    fn rank_one_randomization_is_collinear() {
        let e = RVec::from_vec(vec![1.0, -2.0, 0.5]);
        let x = &e * e.transpose();
        for v in randomize_rank1(&x, 20, 3, 1e-9).unwrap() {
            let scale = v.dot(&e) / e.norm_squared();
            assert!((v - &e * scale).norm() < 1e-10 * e.norm().max(1.0));
        }
    }

    #[test]
    fn randomization_rejects_indefinite() {
        let x = RMat::from_diagonal(&RVec::from_vec(vec![1.0, -0.1]));
        assert!(matches!(
            randomize_rank1(&x, 5, 0, 1e-9),
            Err(Error::NotPsd { .. })
        ));
        let tiny = RMat::from_diagonal(&RVec::from_vec(vec![1.0, -1e-12]));
        assert!(randomize_rank1(&tiny, 5, 0, 1e-9).is_ok());
    }

    #[test]
    fn randomization_is_deterministic() {
        let x = RMat::from_diagonal(&RVec::from_vec(vec![2.0, 1.0, 0.5]));
        assert_eq!(
            randomize_rank1(&x, 4, 77, 1e-9).unwrap(),
            randomize_rank1(&x, 4, 77, 1e-9).unwrap()
        );
    }

    fn diag(v: &[f64]) -> RMat {
        RMat::from_diagonal(&RVec::from_row_slice(v))
    }

    /// Minimum of `c·d` over `a·d = b, g·d ≤ h, d ≥ 0` by enumerating the
    /// vertices of the 3-dimensional polytope.
    fn lp_vertex_min(c: &[f64; 3], a: &[f64; 3], b: f64, g: &[f64; 3], h: f64) -> f64 {
        let mut rows: Vec<([f64; 3], f64)> = vec![(*g, h)];
        for i in 0..3 {
            let mut e = [0.0; 3];
            e[i] = 1.0;
            rows.push((e, 0.0));
        }
        let mut best = f64::INFINITY;
        for i in 0..rows.len() {
            for j in i + 1..rows.len() {
                let m = RMat::from_row_slice(
                    3,
                    3,
                    &[
                        a[0],
                        a[1],
                        a[2],
                        rows[i].0[0],
                        rows[i].0[1],
                        rows[i].0[2],
                        rows[j].0[0],
                        rows[j].0[1],
                        rows[j].0[2],
                    ],
                );
                let Some(inv) = m.try_inverse() else { continue };
                let d = inv * RVec::from_vec(vec![b, rows[i].1, rows[j].1]);
                let feasible = d.iter().all(|&x| x >= -1e-12)
                    && g.iter().zip(d.iter()).map(|(p, q)| p * q).sum::<f64>() <= h + 1e-12;
                if feasible {
                    best = best.min(c.iter().zip(d.iter()).map(|(p, q)| p * q).sum());
                }
            }
        }
        best
    }

    #[test]
    fn diagonal_problems_match_lp_vertices() {
        let mut rng = seed::rng(41);
        for _ in 0..20 {
            let mut draw =
                |lo: f64, hi: f64| -> [f64; 3] { [0; 3].map(|_| rng.random_range(lo..hi)) };
            let (c, a, g) = (draw(-1.0, 1.0), draw(0.2, 1.0), draw(0.2, 1.0));
            let (b, h) = (1.0, 2.0);
            let oracle = lp_vertex_min(&c, &a, b, &g, h);
            let prob = TraceSdp {
                objective: diag(&c),
                equalities: vec![(diag(&a), b)],
                inequalities: vec![(diag(&g), h)],
            };
            let sol = solve_sdp(&prob, 1e-9).unwrap();
            assert_eq!(sol.status, SdpStatus::Optimal);
            assert!(
                (sol.objective - oracle).abs() <= 1e-6 * (1.0 + oracle.abs()),
                "{} vs {oracle}",
                sol.objective
            );
        }
    }

    #[test]
    fn randomization_reproduces_covariance() {
        let l = RMat::from_row_slice(3, 3, &[1.0, 0.0, 0.0, 0.5, 1.2, 0.0, -0.3, 0.4, 0.8]);
        let x = &l * l.transpose();
        let draws = randomize_rank1(&x, 100_000, 5, 1e-9).unwrap();
        let mut cov = RMat::zeros(3, 3);
        for v in &draws {
            cov += v * v.transpose();
        }
        cov /= draws.len() as f64;
        assert!((&cov - &x).norm() <= 0.02 * x.norm());
    }
}
