//! Monte Carlo sweeps: configuration files, paired channel draws, per-trial
//! metrics and their CSV form.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;

use crate::channel::{sample_channel, ChannelSet};
use crate::config::{OmpTarget, Structure, SystemConfig};
use crate::error::{ConfigError, Error, Result};
use crate::factorization::phone;
use crate::omp::{omp_hybrid, zf_target};
use crate::power::{
    cost, energy_efficiency, omp_complexity, phone_complexity, total_power, PowerBreakdown,
};
use crate::precoder::HybridPrecoder;
use crate::rate::sum_rate;
use crate::seed;
use crate::upper_bound::optimize_digital;

pub const CSV_HEADER: [&str; 21] = [
    "algorithm",
    "structure",
    "param",
    "value",
    "trial",
    "seed",
    "sum_rate_bps",
    "p_pa_w",
    "p_rf_w",
    "p_ce_w",
    "p_cd_w",
    "p_lp_bb_w",
    "p_lp_rf_w",
    "p_complex_w",
    "p_fix_w",
    "p_total_w",
    "ee_bit_per_joule",
    "se_bit_per_s_per_hz",
    "cost_total",
    "cost_eff",
    "converged",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SweepParam {
    NTx,
    NRf,
    NUsers,
}

impl SweepParam {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepParam::NTx => "n_tx",
            SweepParam::NRf => "n_rf",
            SweepParam::NUsers => "n_users",
        }
    }

    pub fn current(self, cfg: &SystemConfig) -> usize {
        match self {
            SweepParam::NTx => cfg.n_tx,
            SweepParam::NRf => cfg.n_rf,
            SweepParam::NUsers => cfg.n_users,
        }
    }

    pub fn apply(self, cfg: &SystemConfig, value: usize) -> SystemConfig {
        match self {
            SweepParam::NTx => cfg.with_n_tx(value),
            SweepParam::NRf => SystemConfig {
                n_rf: value,
                ..cfg.clone()
            },
            SweepParam::NUsers => SystemConfig {
                n_users: value,
                ..cfg.clone()
            },
        }
    }
}

impl fmt::Display for SweepParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SweepParam {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "nt" | "n_tx" => Ok(SweepParam::NTx),
            "nrf" | "n_rf" => Ok(SweepParam::NRf),
            "k" | "n_users" => Ok(SweepParam::NUsers),
            _ => Err(format!("unknown sweep parameter `{s}` (nt, nrf, k)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Algorithm {
    Phone,
    OmpFull,
    OmpPartial,
}

impl Algorithm {
    pub const ALL: [Algorithm; 3] = [Algorithm::Phone, Algorithm::OmpFull, Algorithm::OmpPartial];

    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::Phone => "phone",
            Algorithm::OmpFull => "omp_full",
            Algorithm::OmpPartial => "omp_partial",
        }
    }

    pub fn structure(self) -> Structure {
        match self {
            Algorithm::Phone | Algorithm::OmpPartial => Structure::Partial,
            Algorithm::OmpFull => Structure::Full,
        }
    }

    /// Flops charged to the algorithm in the power model.
    pub fn complexity(self, cfg: &SystemConfig) -> f64 {
        match self {
            Algorithm::Phone => phone_complexity(cfg),
            Algorithm::OmpFull | Algorithm::OmpPartial => omp_complexity(cfg),
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "phone" => Ok(Algorithm::Phone),
            "omp_full" => Ok(Algorithm::OmpFull),
            "omp_partial" => Ok(Algorithm::OmpPartial),
            _ => Err(format!(
                "unknown algorithm `{s}` (phone, omp_full, omp_partial)"
            )),
        }
    }
}

pub fn parse_list<T: FromStr>(s: &str) -> std::result::Result<Vec<T>, String>
where
    T::Err: fmt::Display,
{
    s.split(',')
        .map(str::trim)
        .filter(|v| !v.is_empty())
        .map(|v| v.parse::<T>().map_err(|e| format!("`{v}`: {e}")))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub param: SweepParam,
    /// Empty means the configured value of `param`.
    pub values: Vec<usize>,
    pub trials: usize,
    pub base_seed: u64,
    pub algorithms: Vec<Algorithm>,
    pub parallel: bool,
}

impl Default for SweepSpec {
    fn default() -> Self {
        SweepSpec {
            param: SweepParam::NTx,
            values: Vec::new(),
            trials: 1,
            base_seed: 0,
            algorithms: Algorithm::ALL.to_vec(),
            parallel: false,
        }
    }
}

impl SweepSpec {
    pub fn resolved_values(&self, cfg: &SystemConfig) -> Vec<usize> {
        if self.values.is_empty() {
            vec![self.param.current(cfg)]
        } else {
            self.values.clone()
        }
    }

    /// Checks that every sweep point yields a valid configuration.
    pub fn validate(&self, cfg: &SystemConfig) -> std::result::Result<(), ConfigError> {
        if self.trials == 0 {
            return Err(ConfigError::new("trials", "must be at least 1"));
        }
        if self.algorithms.is_empty() {
            return Err(ConfigError::new("algorithms", "no algorithm selected"));
        }
        for v in self.resolved_values(cfg) {
            self.param.apply(cfg, v).validate().map_err(|e| {
                ConfigError::new("sweep_values", format!("{} = {v}: {}", self.param, e))
            })?;
        }
        Ok(())
    }

    fn set(&mut self, key: &str, value: &str) -> std::result::Result<bool, ConfigError> {
        let bad = |e: String| ConfigError::new(key, e);
        match key {
            "sweep_param" => self.param = value.parse().map_err(bad)?,
            "sweep_values" => self.values = parse_list(value).map_err(bad)?,
            "trials" => {
                self.trials = value
                    .parse()
                    .map_err(|_| bad(format!("cannot parse `{value}`")))?
            }
            "seed" => {
                self.base_seed = value
                    .parse()
                    .map_err(|_| bad(format!("cannot parse `{value}`")))?
            }
            "algorithms" => self.algorithms = parse_list(value).map_err(bad)?,
            "parallel" => {
                self.parallel = match value {
                    "true" | "1" | "yes" => true,
                    "false" | "0" | "no" => false,
                    _ => return Err(bad(format!("expected a boolean, got `{value}`"))),
                }
            }
            _ => return Ok(false),
        }
        Ok(true)
    }
}

/// Parses flat `key = value` text; `#` starts a comment.
pub fn parse_config(text: &str) -> std::result::Result<(SystemConfig, SweepSpec), ConfigError> {
    let mut cfg = SystemConfig::default();
    let mut spec = SweepSpec::default();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(ConfigError::new(line, "expected `key = value`").at_line(line_no));
        };
        let (key, value) = (key.trim(), value.trim());
        if key.is_empty() {
            return Err(ConfigError::new("", "empty key").at_line(line_no));
        }
        match spec.set(key, value) {
            Ok(true) => {}
            Ok(false) => cfg.set(key, value).map_err(|e| e.at_line(line_no))?,
            Err(e) => return Err(e.at_line(line_no)),
        }
    }
    cfg.validate()?;
    Ok((cfg, spec))
}

pub fn load_config(path: impl AsRef<Path>) -> Result<(SystemConfig, SweepSpec)> {
    let text = fs::read_to_string(path)?;
    Ok(parse_config(&text)?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRecord {
    pub algorithm: Algorithm,
    pub structure: Structure,
    pub param: SweepParam,
    pub value: usize,
    pub trial: usize,
    /// Channel seed of the `(value, trial)` cell.
    pub seed: u64,
    pub sum_rate: f64,
    pub power: PowerBreakdown,
    pub ee: f64,
    pub se: f64,
    pub cost_total: f64,
    pub cost_eff: f64,
    pub converged: bool,
    /// Set when the row failed; metrics are then NaN.
    pub error: Option<String>,
}

impl MetricsRecord {
    fn failed(
        algorithm: Algorithm,
        param: SweepParam,
        value: usize,
        trial: usize,
        seed: u64,
        error: String,
    ) -> Self {
        let nan = f64::NAN;
        MetricsRecord {
            algorithm,
            structure: algorithm.structure(),
            param,
            value,
            trial,
            seed,
            sum_rate: nan,
            power: PowerBreakdown {
                p_pa: nan,
                p_rf: nan,
                p_ce: nan,
                p_cd: nan,
                p_lp_bb: nan,
                p_lp_rf: nan,
                p_complex: nan,
                p_fix: nan,
                p_total: nan,
            },
            ee: nan,
            se: nan,
            cost_total: nan,
            cost_eff: nan,
            converged: false,
            error: Some(error),
        }
    }

    /// `key=value` lines in CSV column order.
    pub fn to_key_values(&self) -> Vec<(&'static str, String)> {
        CSV_HEADER.iter().copied().zip(self.csv_fields()).collect()
    }

    fn csv_fields(&self) -> Vec<String> {
        let p = &self.power;
        let mut out = vec![
            self.algorithm.to_string(),
            self.structure.to_string(),
            self.param.to_string(),
            self.value.to_string(),
            self.trial.to_string(),
            self.seed.to_string(),
        ];
        out.extend(
            [
                self.sum_rate,
                p.p_pa,
                p.p_rf,
                p.p_ce,
                p.p_cd,
                p.p_lp_bb,
                p.p_lp_rf,
                p.p_complex,
                p.p_fix,
                p.p_total,
                self.ee,
                self.se,
                self.cost_total,
                self.cost_eff,
            ]
            .iter()
            .map(f64::to_string),
        );
        out.push(self.converged.to_string());
        out
    }
}

/// Channel seed of one sweep cell.
pub fn cell_seed(base_seed: u64, value: usize, trial: usize) -> u64 {
    seed::derive(&[base_seed, value as u64, trial as u64])
}

/// Seed for the randomized parts of an algorithm within a cell.
pub fn algorithm_seed(cell: u64, algorithm: Algorithm) -> u64 {
    seed::derive(&[cell, 0x5eed, algorithm as u64])
}

/// One iteration of an algorithm's inner loop, for `--trace` output.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub algorithm: Algorithm,
    pub value: usize,
    pub trial: usize,
    pub seed: u64,
    /// `ascent` (digital EE iterations) or `factorization` (alternations).
    pub stage: &'static str,
    pub iteration: usize,
    pub attempt: usize,
    /// Relaxed EE for the ascent, Frobenius distance for the factorization.
    pub objective: f64,
    pub accepted: bool,
}

pub const TRACE_HEADER: [&str; 9] = [
    "algorithm",
    "value",
    "trial",
    "seed",
    "stage",
    "iteration",
    "attempt",
    "objective",
    "accepted",
];

/// Precoder, convergence flag and inner-loop trace of one algorithm run.
#[derive(Debug, Clone)]
pub struct AlgorithmRun {
    pub precoder: HybridPrecoder,
    pub converged: bool,
    /// `(stage, iteration, attempt, objective, accepted)`.
    pub trace: Vec<(&'static str, usize, usize, f64, bool)>,
}

/// Runs one algorithm on one channel draw.
pub fn run_algorithm(
    ch: &ChannelSet,
    cfg: &SystemConfig,
    algorithm: Algorithm,
    seed: u64,
) -> Result<AlgorithmRun> {
    match algorithm {
        Algorithm::Phone => {
            let out = phone(ch, cfg, seed)?;
            let converged = out.converged();
            let mut trace: Vec<_> = out
                .digital
                .trace
                .iter()
                .map(|r| ("ascent", r.iter, 0, r.ee, true))
                .collect();
            trace.extend(out.factorization.trace.iter().map(|r| {
                (
                    "factorization",
                    r.alternation,
                    r.attempt,
                    r.distance,
                    r.accepted,
                )
            }));
            Ok(AlgorithmRun {
                precoder: out.factorization.precoder,
                converged,
                trace,
            })
        }
        Algorithm::OmpFull | Algorithm::OmpPartial => {
            let target = match cfg.omp_target {
                OmpTarget::ZeroForcing => zf_target(ch, cfg)?,
                OmpTarget::UpperBound => optimize_digital(ch, cfg, seed)?.precoder,
            };
            Ok(AlgorithmRun {
                precoder: omp_hybrid(ch, &target, cfg, algorithm.structure())?,
                converged: true,
                trace: Vec::new(),
            })
        }
    }
}

/// Metrics of a precoder under the algorithm's wiring and complexity:
/// `(sum_rate, power, ee, cost_total, cost_eff)`.
pub fn evaluate(
    ch: &ChannelSet,
    cfg: &SystemConfig,
    algorithm: Algorithm,
    precoder: &HybridPrecoder,
) -> Result<(f64, PowerBreakdown, f64, f64, f64)> {
    let structure = algorithm.structure();
    let rate = sum_rate(ch, precoder, cfg);
    let pb = total_power(cfg, precoder, rate, structure, algorithm.complexity(cfg))?;
    let c = cost(cfg, &pb, structure);
    Ok((
        rate,
        pb,
        energy_efficiency(rate, &pb),
        c.c_total,
        rate / c.c_total,
    ))
}

type CellOutput = (Vec<MetricsRecord>, Vec<TraceRow>);

fn run_cell(cfg: &SystemConfig, spec: &SweepSpec, value: usize, trial: usize) -> CellOutput {
    let cell_cfg = spec.param.apply(cfg, value);
    let seed = cell_seed(spec.base_seed, value, trial);
    let ch = sample_channel(&cell_cfg, seed);
    let mut records = Vec::with_capacity(spec.algorithms.len());
    let mut traces = Vec::new();
    for &alg in &spec.algorithms {
        let run = run_algorithm(&ch, &cell_cfg, alg, algorithm_seed(seed, alg)).and_then(|run| {
            let metrics = evaluate(&ch, &cell_cfg, alg, &run.precoder)?;
            Ok((run, metrics))
        });
        let record = match run {
            Ok((run, (rate, pb, ee, cost_total, cost_eff))) => {
                traces.extend(
                    run.trace
                        .iter()
                        .map(|&(stage, it, att, obj, acc)| TraceRow {
                            algorithm: alg,
                            value,
                            trial,
                            seed,
                            stage,
                            iteration: it,
                            attempt: att,
                            objective: obj,
                            accepted: acc,
                        }),
                );
                MetricsRecord {
                    algorithm: alg,
                    structure: alg.structure(),
                    param: spec.param,
                    value,
                    trial,
                    seed,
                    sum_rate: rate,
                    power: pb,
                    ee,
                    se: rate / cell_cfg.bandwidth_hz,
                    cost_total,
                    cost_eff,
                    converged: run.converged,
                    error: None,
                }
            }
            Err(e) => MetricsRecord::failed(alg, spec.param, value, trial, seed, e.to_string()),
        };
        records.push(record);
    }
    (records, traces)
}

/// Every `(value, trial, algorithm)` row, ordered by sweep value position,
/// trial, then algorithm position in the spec.
pub fn run_sweep(cfg: &SystemConfig, spec: &SweepSpec) -> Vec<MetricsRecord> {
    run_sweep_traced(cfg, spec).0
}

/// [`run_sweep`] plus the inner-loop traces, in the same order.
pub fn run_sweep_traced(cfg: &SystemConfig, spec: &SweepSpec) -> CellOutput {
    let values = spec.resolved_values(cfg);
    let cells: Vec<(usize, usize)> = (0..values.len())
        .flat_map(|v| (0..spec.trials).map(move |t| (v, t)))
        .collect();
    let work = |&(v, t): &(usize, usize)| run_cell(cfg, spec, values[v], t);
    let mut per_cell: Vec<((usize, usize), CellOutput)> = if spec.parallel {
        cells.par_iter().map(|c| (*c, work(c))).collect()
    } else {
        cells.iter().map(|c| (*c, work(c))).collect()
    };
    per_cell.sort_by_key(|(c, _)| *c);
    let mut records = Vec::new();
    let mut traces = Vec::new();
    for (_, (r, t)) in per_cell {
        records.extend(r);
        traces.extend(t);
    }
    (records, traces)
}

/// Per-bit power of one algorithm relative to a reference at one sweep value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerSaving {
    pub value: usize,
    /// `p̄/r̄` of the reference, Joule per bit.
    pub reference_per_bit: f64,
    pub algorithm_per_bit: f64,
    /// `None` when the reference has zero mean rate.
    pub ratio: Option<f64>,
}

/// `(p̄_ref/r̄_ref − p̄_alg/r̄_alg) / (p̄_ref/r̄_ref)` per sweep value, from
/// trial means of total power and sum rate. Failed rows are skipped.
pub fn power_saving_ratio(
    records: &[MetricsRecord],
    reference: Algorithm,
    algorithm: Algorithm,
) -> Vec<PowerSaving> {
    let mut sums: BTreeMap<usize, [(f64, f64, usize); 2]> = BTreeMap::new();
    for r in records.iter().filter(|r| r.error.is_none()) {
        let entry = sums.entry(r.value).or_insert([(0.0, 0.0, 0); 2]);
        for (slot, alg) in [reference, algorithm].into_iter().enumerate() {
            if r.algorithm == alg {
                let e = &mut entry[slot];
                e.0 += r.power.p_total;
                e.1 += r.sum_rate;
                e.2 += 1;
            }
        }
    }
    sums.into_iter()
        .map(|(value, [re, al])| {
            let per_bit = |(p, r, n): (f64, f64, usize)| {
                let n = n.max(1) as f64;
                (p / n) / (r / n)
            };
            let (rp, ap) = (per_bit(re), per_bit(al));
            let ratio = (re.1 > 0.0 && re.2 > 0).then(|| (rp - ap) / rp);
            PowerSaving {
                value,
                reference_per_bit: rp,
                algorithm_per_bit: ap,
                ratio,
            }
        })
        .collect()
}

pub fn write_csv_to<W: Write>(records: &[MetricsRecord], writer: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(writer);
    w.write_record(CSV_HEADER)?;
    for r in records {
        w.write_record(r.csv_fields())?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_csv(records: &[MetricsRecord], path: impl AsRef<Path>) -> Result<()> {
    let file = fs::File::create(path)?;
    write_csv_to(records, std::io::BufWriter::new(file))
}

pub fn write_trace_csv(rows: &[TraceRow], path: impl AsRef<Path>) -> Result<()> {
    let file = std::io::BufWriter::new(fs::File::create(path)?);
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(file);
    w.write_record(TRACE_HEADER)?;
    for r in rows {
        w.write_record([
            r.algorithm.to_string(),
            r.value.to_string(),
            r.trial.to_string(),
            r.seed.to_string(),
            r.stage.to_string(),
            r.iteration.to_string(),
            r.attempt.to_string(),
            r.objective.to_string(),
            r.accepted.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn field<T: FromStr>(rec: &csv::StringRecord, i: usize) -> Result<T> {
    let raw = rec.get(i).unwrap_or("");
    raw.parse()
        .map_err(|_| Error::Dimension(format!("column `{}`: cannot parse `{raw}`", CSV_HEADER[i])))
}

fn parse_with<T>(rec: &csv::StringRecord, i: usize) -> Result<T>
where
    T: FromStr<Err = String>,
{
    let raw = rec.get(i).unwrap_or("");
    raw.parse().map_err(Error::Dimension)
}

/// Reads rows written by [`write_csv`]; the error text of failed rows is
/// not stored and comes back as an empty string.
pub fn read_csv(path: impl AsRef<Path>) -> Result<Vec<MetricsRecord>> {
    let mut r = csv::Reader::from_path(path)?;
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header != CSV_HEADER {
        return Err(Error::Dimension("unexpected CSV header".into()));
    }
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let structure = match rec.get(1) {
            Some("partial") => Structure::Partial,
            Some("full") => Structure::Full,
            other => return Err(Error::Dimension(format!("bad structure {other:?}"))),
        };
        let f = |i| field::<f64>(&rec, i);
        let power = PowerBreakdown {
            p_pa: f(7)?,
            p_rf: f(8)?,
            p_ce: f(9)?,
            p_cd: f(10)?,
            p_lp_bb: f(11)?,
            p_lp_rf: f(12)?,
            p_complex: f(13)?,
            p_fix: f(14)?,
            p_total: f(15)?,
        };
        let sum_rate = f(6)?;
        out.push(MetricsRecord {
            algorithm: parse_with(&rec, 0)?,
            structure,
            param: parse_with(&rec, 2)?,
            value: field(&rec, 3)?,
            trial: field(&rec, 4)?,
            seed: field(&rec, 5)?,
            error: sum_rate.is_nan().then(String::new),
            sum_rate,
            power,
            ee: f(16)?,
            se: f(17)?,
            cost_total: f(18)?,
            cost_eff: f(19)?,
            converged: field(&rec, 20)?,
        });
    }
    Ok(out)
}

/// Effective configuration, sweep and baseline settings as `key = value`.
pub fn metadata(cfg: &SystemConfig, spec: &SweepSpec) -> String {
    let mut s = String::new();
    for (k, v) in cfg.to_key_values() {
        s.push_str(&format!("{k} = {v}\n"));
    }
    let values: Vec<String> = spec
        .resolved_values(cfg)
        .iter()
        .map(usize::to_string)
        .collect();
    let algs: Vec<&str> = spec.algorithms.iter().map(|a| a.as_str()).collect();
    s.push_str(&format!("sweep_param = {}\n", spec.param));
    s.push_str(&format!("sweep_values = {}\n", values.join(",")));
    s.push_str(&format!("trials = {}\n", spec.trials));
    s.push_str(&format!("seed = {}\n", spec.base_seed));
    s.push_str(&format!("algorithms = {}\n", algs.join(",")));
    s.push_str("# omp: dictionary = true ray responses; partial wiring masks each\n");
    s.push_str("# selected column to its chain's sub-array and refits the baseband\n");
    s.push_str("# by least squares; output scaled onto the power budget if needed\n");
    s
}

pub fn write_metadata(cfg: &SystemConfig, spec: &SweepSpec, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, metadata(cfg, spec))?;
    Ok(())
}
