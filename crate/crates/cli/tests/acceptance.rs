//! End-to-end acceptance checks, one test per criterion. Each writes a
//! single `criterion N PASS|FAIL: ...` line to stdout, uncaptured, before
//! asserting.

use std::f64::consts::PI;
use std::io::Write;
use std::path::PathBuf;
use std::process::Command;

use phone_core::config::ComputationPower;
use phone_core::factorization::{baseband_step, FactorizationProblem};
use phone_core::linalg::{CMat, RMat, C64};
use phone_core::omp::{omp_hybrid, zf_target};
use phone_core::precoder::{DigitalPrecoder, HybridPrecoder, RfPhases};
use phone_core::runner::{evaluate, power_saving_ratio, run_sweep, Algorithm};
use phone_core::upper_bound::{ee_gradient, initial_precoder, optimize_digital, relaxed_ee};
use phone_core::{phone, sample_channel, seed, Structure, SweepParam, SweepSpec, SystemConfig};
use rand::Rng;

fn report(criterion: u32, pass: bool, detail: String) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    let mut out = std::io::stdout().lock();
    writeln!(out, "criterion {criterion} {verdict}: {detail}").unwrap();
    out.flush().unwrap();
    assert!(pass, "criterion {criterion}: {detail}");
}

fn small(n_tx: usize, n_rf: usize, k: usize) -> SystemConfig {
    SystemConfig {
        n_rf,
        n_users: k,
        ..SystemConfig::default().with_n_tx(n_tx)
    }
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn sci(xs: &[f64]) -> String {
    let parts: Vec<String> = xs.iter().map(|x| format!("{x:.4e}")).collect();
    format!("[{}]", parts.join(", "))
}

/// Least-squares slope of `ys` against `xs`.
fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let (mx, my) = (mean(xs), mean(ys));
    let num: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let den: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    num / den
}

/// Mean EE of `algorithm` at each sweep value, in value order.
fn mean_ee(cfg: &SystemConfig, spec: &SweepSpec, algorithm: Algorithm) -> Vec<f64> {
    let rows = run_sweep(cfg, spec);
    let values = spec.resolved_values(cfg);
    values
        .iter()
        .map(|&v| {
            let ee: Vec<f64> = rows
                .iter()
                .filter(|r| r.algorithm == algorithm && r.value == v)
                .map(|r| {
                    assert!(r.error.is_none(), "{:?}", r.error);
                    r.ee
                })
                .collect();
            mean(&ee)
        })
        .collect()
}

/// One-sided exact sign test: P(X ≥ wins) for X ~ Bin(n, 1/2).
fn sign_test_p(wins: usize, n: usize) -> f64 {
    let mut total = 0.0;
    let mut coeff = 1.0f64; // C(n, 0)
    for i in 0..=n {
        if i >= wins {
            total += coeff;
        }
        coeff = coeff * (n - i) as f64 / (i + 1) as f64;
    }
    total / 2f64.powi(n as i32)
}

#[test]
fn criterion_01_feasibility() {
    let mut rng = seed::rng(101);
    let mut violations = Vec::new();
    let mut checked = 0;
    for case in 0..200u64 {
        let n_tx = rng.random_range(8..=64usize);
        let divisors: Vec<usize> = (1..=8).filter(|d| n_tx % d == 0).collect();
        let n_rf = divisors[rng.random_range(0..divisors.len())];
        let k = rng.random_range(1..=n_rf.min(4));
        let cfg = small(n_tx, n_rf, k);
        let ch = sample_channel(&cfg, seed::derive(&[101, case]));
        let p_max = cfg.p_max_w();
        let mut outputs: Vec<(&str, HybridPrecoder)> = Vec::new();
        outputs.push((
            "phone",
            phone(&ch, &cfg, case).unwrap().factorization.precoder,
        ));
        let target = zf_target(&ch, &cfg).unwrap();
        for (name, s) in [
            ("omp_full", Structure::Full),
            ("omp_partial", Structure::Partial),
        ] {
            outputs.push((name, omp_hybrid(&ch, &target, &cfg, s).unwrap()));
        }
        for (name, p) in outputs {
            checked += 1;
            let expected = if name == "omp_full" {
                Structure::Full
            } else {
                Structure::Partial
            };
            let power = p.transmit_power();
            if let Err(e) = p.check(p_max) {
                violations.push(format!("{name} N_T={n_tx} N_RF={n_rf} K={k}: {e}"));
            } else if p.structure() != expected || power > p_max * (1.0 + 1e-9) {
                violations.push(format!("{name} N_T={n_tx}: power {power} > {p_max}"));
            }
        }
    }
    report(
        1,
        violations.is_empty(),
        format!(
            "{checked} precoders, {} violations {:?}",
            violations.len(),
            violations.first()
        ),
    );
}

#[test]
fn criterion_02_gradient() {
    let cfg = small(8, 2, 2);
    let mut worst: f64 = 0.0;
    for point in 0..20u64 {
        let ch = sample_channel(&cfg, seed::derive(&[202, point]));
        let b = DigitalPrecoder {
            b: initial_precoder(&cfg, seed::derive(&[203, point])),
        };
        let g = ee_gradient(&b, &ch, &cfg).unwrap();
        let f = |m: &CMat| relaxed_ee(&DigitalPrecoder { b: m.clone() }, &ch, &cfg).unwrap();
        let h = 1e-6 * b.b.norm();
        let mut fd = CMat::zeros(8, 2);
        for i in 0..8 {
            for k in 0..2 {
                let mut parts = [0.0; 2];
                for (slot, dir) in [C64::new(1.0, 0.0), C64::new(0.0, 1.0)].iter().enumerate() {
                    let (mut plus, mut minus) = (b.b.clone(), b.b.clone());
                    plus[(i, k)] += dir * h;
                    minus[(i, k)] -= dir * h;
                    parts[slot] = (f(&plus) - f(&minus)) / (2.0 * h);
                }
                fd[(i, k)] = C64::new(parts[0], parts[1]);
            }
        }
        worst = worst.max((&fd - &g).norm() / g.norm());
    }
    report(
        2,
        worst <= 1e-4,
        format!("max relative error {worst:.3e} over 20 points"),
    );
}

#[test]
fn criterion_03_monotone_ascent() {
    let mut rng = seed::rng(303);
    let mut worst_drop: f64 = 0.0;
    for inst in 0..50u64 {
        let n_tx = [8, 16, 32, 64][rng.random_range(0..4)];
        let k = rng.random_range(1..=5usize);
        let cfg = small(n_tx, k, k);
        let ch = sample_channel(&cfg, seed::derive(&[303, inst]));
        let out = optimize_digital(&ch, &cfg, inst).unwrap();
        for w in out.trace.windows(2) {
            worst_drop = worst_drop.max((w[0].ee - w[1].ee) / w[0].ee.abs());
        }
    }
    report(
        3,
        worst_drop <= 1e-9,
        format!("largest relative decrease {worst_drop:.3e} over 50 instances"),
    );
}

#[test]
fn criterion_04_scalar_oracle() {
    let cfg = small(1, 1, 1);
    let mut worst: f64 = 0.0;
    for draw in 0..5u64 {
        let ch = sample_channel(&cfg, seed::derive(&[404, draw]));
        let out = optimize_digital(&ch, &cfg, draw).unwrap();
        let p_max = cfg.p_max_w();
        let grid = 200_000;
        let best = (1..=grid)
            .map(|i| {
                let b = CMat::from_element(
                    1,
                    1,
                    C64::new((p_max * i as f64 / grid as f64).sqrt(), 0.0),
                );
                relaxed_ee(&DigitalPrecoder { b }, &ch, &cfg).unwrap()
            })
            .fold(f64::NEG_INFINITY, f64::max);
        worst = worst.max((out.state.ee - best).abs() / best);
    }
    report(
        4,
        worst <= 0.01,
        format!("max relative gap to grid optimum {worst:.3e}"),
    );
}

#[test]
fn criterion_05_sdr_lower_bound() {
    let mut rng = seed::rng(505);
    let mut worst: f64 = f64::INFINITY;
    for step in 0..50u64 {
        let n_rf = rng.random_range(1..=4usize);
        let n_tx = n_rf * rng.random_range(2..=8usize);
        let k = rng.random_range(1..=n_rf);
        let structure = if step % 2 == 0 {
            Structure::Partial
        } else {
            Structure::Full
        };
        let cfg = small(n_tx, n_rf, k);
        let ch = sample_channel(&cfg, seed::derive(&[505, step]));
        let digital = optimize_digital(&ch, &cfg, step).unwrap();
        let prob = FactorizationProblem::new(&digital.precoder, &cfg, structure);
        let shell = match structure {
            Structure::Partial => {
                let phases = random_phases(&mut rng, n_tx, 1);
                HybridPrecoder::partial_from_antenna_phases(phases.as_slice(), CMat::zeros(n_rf, k))
            }
            Structure::Full => HybridPrecoder {
                n_tx,
                rf: RfPhases::Full(random_phases(&mut rng, n_tx, n_rf)),
                b_bb: CMat::zeros(n_rf, k),
            },
        };
        let out = baseband_step(&prob, &shell.rf_matrix(), step).unwrap();
        let margin = out.rounded_objective - (out.sdr_objective - 1e-6 * out.sdr_objective.abs());
        worst = worst.min(margin / out.sdr_objective.abs().max(f64::MIN_POSITIVE));
    }
    report(
        5,
        worst >= 0.0,
        format!("smallest normalized margin (rounded - bound) {worst:.3e} over 50 steps"),
    );
}

fn random_phases(rng: &mut impl Rng, n_tx: usize, n_rf: usize) -> RMat {
    RMat::from_fn(n_tx, n_rf, |_, _| rng.random_range(-PI..PI))
}

#[test]
fn criterion_06_upper_bound_dominance() {
    let cfg = SystemConfig::default();
    let mut violations = 0;
    let mut worst_ratio: f64 = 0.0;
    for draw in 0..30u64 {
        let ch = sample_channel(&cfg, seed::derive(&[606, draw]));
        let out = phone(&ch, &cfg, draw).unwrap();
        let (_, _, ee, _, _) = evaluate(&ch, &cfg, Algorithm::Phone, out.precoder()).unwrap();
        let bound = out.digital.state.ee;
        worst_ratio = worst_ratio.max(ee / bound);
        if ee > bound * (1.0 + 1e-6) {
            violations += 1;
        }
    }
    report(
        6,
        violations == 0,
        format!("{violations}/30 draws above the bound; max EE/bound {worst_ratio:.4}"),
    );
}

fn validated(spec: SweepSpec, cfg: &SystemConfig) -> SweepSpec {
    spec.validate(cfg).unwrap();
    spec
}

fn ntx_sweep(cfg: &SystemConfig, base_seed: u64) -> SweepSpec {
    validated(
        SweepSpec {
            param: SweepParam::NTx,
            values: vec![25, 50, 75, 100],
            trials: 30,
            base_seed,
            algorithms: vec![Algorithm::Phone],
            parallel: false,
        },
        cfg,
    )
}

#[test]
fn criterion_07_ee_falls_with_antennas() {
    let cfg = SystemConfig::default();
    let spec = ntx_sweep(&cfg, 707);
    let ee = mean_ee(&cfg, &spec, Algorithm::Phone);
    let xs: Vec<f64> = spec.values.iter().map(|&v| v as f64).collect();
    let s = slope(&xs, &ee);
    report(
        7,
        s < 0.0 && ee[3] < ee[0],
        format!(
            "PHONE mean EE at N_T=25,50,75,100: {}; slope {s:.4e}",
            sci(&ee)
        ),
    );
}

#[test]
fn criterion_08_ee_falls_with_rf_chains() {
    let cfg = SystemConfig::default().with_n_tx(56);
    let spec = validated(
        SweepSpec {
            param: SweepParam::NRf,
            values: vec![5, 8, 11, 14],
            trials: 10,
            base_seed: 808,
            algorithms: Algorithm::ALL.to_vec(),
            parallel: false,
        },
        &cfg,
    );
    let rows = run_sweep(&cfg, &spec);
    let xs: Vec<f64> = spec.values.iter().map(|&v| v as f64).collect();
    let mut pass = true;
    let mut detail = Vec::new();
    for alg in Algorithm::ALL {
        let ee: Vec<f64> = spec
            .values
            .iter()
            .map(|&v| {
                let e: Vec<f64> = rows
                    .iter()
                    .filter(|r| r.algorithm == alg && r.value == v)
                    .map(|r| r.ee)
                    .collect();
                mean(&e)
            })
            .collect();
        let s = slope(&xs, &ee);
        pass &= s < 0.0;
        detail.push(format!("{alg} slope {s:.4e} means {}", sci(&ee)));
    }
    report(8, pass, detail.join("; "));
}

#[test]
fn criterion_09_ordering_and_power_saving() {
    let cfg = SystemConfig::default();
    let spec = validated(
        SweepSpec {
            param: SweepParam::NRf,
            values: vec![cfg.n_rf],
            trials: 30,
            base_seed: 909,
            algorithms: Algorithm::ALL.to_vec(),
            parallel: false,
        },
        &cfg,
    );
    let rows = run_sweep(&cfg, &spec);
    let ee_of = |alg: Algorithm| -> Vec<f64> {
        rows.iter()
            .filter(|r| r.algorithm == alg)
            .map(|r| r.ee)
            .collect()
    };
    let phone_ee = ee_of(Algorithm::Phone);
    let mut pass = true;
    let mut detail = vec![format!("PHONE mean EE {:.4e}", mean(&phone_ee))];
    for alg in [Algorithm::OmpFull, Algorithm::OmpPartial] {
        let other = ee_of(alg);
        let wins = phone_ee.iter().zip(&other).filter(|(a, b)| a > b).count();
        let p = sign_test_p(wins, phone_ee.len());
        let ok = mean(&phone_ee) > mean(&other) && p < 0.05;
        pass &= ok;
        detail.push(format!(
            "vs {alg}: mean {:.4e}, PHONE wins {wins}/30, sign-test p {p:.3e}",
            mean(&other)
        ));
    }

    let saving_spec = validated(
        SweepSpec {
            param: SweepParam::NRf,
            values: vec![6, 10, 14],
            trials: 10,
            base_seed: 919,
            algorithms: vec![Algorithm::Phone, Algorithm::OmpPartial],
            parallel: false,
        },
        &cfg,
    );
    let saving = power_saving_ratio(
        &run_sweep(&cfg, &saving_spec),
        Algorithm::OmpPartial,
        Algorithm::Phone,
    );
    let ratios: Vec<f64> = saving.iter().map(|s| s.ratio.unwrap_or(f64::NAN)).collect();
    let positive = ratios.iter().all(|&r| r > 0.0);
    let rising = ratios.windows(2).all(|w| w[1] >= w[0]);
    pass &= positive && rising;
    detail.push(format!(
        "power saving vs omp_partial at N_RF=6,10,14: {ratios:.4?}"
    ));
    report(9, pass, detail.join("; "));
}

#[test]
fn criterion_10_communication_only_ablation() {
    let cfg = SystemConfig {
        computation: ComputationPower::Excluded,
        ..SystemConfig::default()
    };
    let spec = ntx_sweep(&cfg, 1010);
    let ee = mean_ee(&cfg, &spec, Algorithm::Phone);
    let xs: Vec<f64> = spec.values.iter().map(|&v| v as f64).collect();
    let s = slope(&xs, &ee);
    report(
        10,
        s >= 0.0,
        format!(
            "PHONE mean EE without computation power at N_T=25,50,75,100: {}; slope {s:.4e}",
            sci(&ee)
        ),
    );
}

#[test]
fn criterion_11_cli_determinism() {
    let dir = std::env::temp_dir().join(format!("phone-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let run = |name: &str, parallel: bool| -> Vec<u8> {
        let out: PathBuf = dir.join(name);
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_phone"));
        cmd.args(["sweep", "--param", "k", "--values", "2,3", "--trials", "2"])
            .args(["--algorithms", "phone,omp_full,omp_partial", "--seed", "11"])
            .arg("--out")
            .arg(&out);
        if parallel {
            cmd.arg("--parallel");
        }
        let status = cmd.status().unwrap();
        assert!(status.success(), "sweep exited with {status}");
        std::fs::read(&out).unwrap()
    };
    let first = run("a.csv", false);
    let second = run("b.csv", false);
    let parallel = run("c.csv", true);
    std::fs::remove_dir_all(&dir).ok();
    let lines = first.iter().filter(|&&c| c == b'\n').count();
    report(
        11,
        first == second && first == parallel && lines == 13,
        format!(
            "{lines} lines; repeat identical: {}, parallel identical: {}",
            first == second,
            first == parallel
        ),
    );
}
