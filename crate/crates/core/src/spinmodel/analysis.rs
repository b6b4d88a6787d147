//! Partial information plots, redundancy and consensus time series.

use std::sync::Arc;

use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use super::model::{sample_couplings, SpinModelParams, SpinRealization};
use super::reduced::SpinSnapshot;
use crate::error::{QdcError, Result};
use crate::infotheory::{
    measured_cmi, mutual_information, quantum_cmi, system_entropy, MIN_SYSTEM_ENTROPY,
};
use crate::measurement::Measurement;
use crate::par::{self, ExecMode};
use crate::qstate::SubsystemSpec;
use crate::rng::{rng_from_seed, sub_seed};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum FragmentSampler {
    /// `F_m = {1..m}`.
    #[default]
    Contiguous,
    /// `samples` uniformly random `m`-subsets of the environment.
    Random { samples: usize, seed: u64 },
}

impl FragmentSampler {
    fn fragments(&self, n_env: usize, m: usize) -> Vec<SubsystemSpec> {
        match *self {
            FragmentSampler::Contiguous => vec![SubsystemSpec::block(1, m)],
            FragmentSampler::Random { samples, seed } => {
                let mut rng = rng_from_seed(sub_seed(seed, m as u64));
                (0..samples.max(1))
                    .map(|_| sample(&mut rng, n_env, m).iter().map(|i| i + 1).collect())
                    .collect()
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PipPoint {
    pub m: usize,
    pub mean: f64,
    pub std: f64,
}

/// `I(S:F_m)` averaged over sampled fragments of each size.
pub fn pip(snap: &SpinSnapshot, sizes: &[usize], sampler: FragmentSampler) -> Result<Vec<PipPoint>> {
    let n = snap.realization().n_env();
    let s = SubsystemSpec::system();
    sizes
        .iter()
        .map(|&m| {
            if m > n {
                return Err(QdcError::InvalidSubsystem(format!("fragment of {m} qubits in {n}")));
            }
            let vals = sampler
                .fragments(n, m)
                .iter()
                .map(|f| mutual_information(snap, &s, f))
                .collect::<Result<Vec<f64>>>()?;
            let k = vals.len() as f64;
            let mean = vals.iter().sum::<f64>() / k;
            let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / k;
            Ok(PipPoint { m, mean, std: var.sqrt() })
        })
        .collect()
}

/// `R_δ = N / m_δ`, where `m_δ ≤ N/2` is the smallest fragment size whose mean
/// `I(S:F_m)` reaches `(1 − δ) H_S`; `1` when no such size exists or the
/// system carries no entropy.
pub fn redundancy(snap: &SpinSnapshot, delta: f64, sampler: FragmentSampler) -> Result<f64> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(QdcError::DomainError(format!("δ = {delta} outside (0, 1)")));
    }
    let n = snap.realization().n_env();
    let h_s = system_entropy(snap)?;
    if h_s < MIN_SYSTEM_ENTROPY {
        return Ok(1.0);
    }
    for m in 1..=n / 2 {
        let point = pip(snap, &[m], sampler)?[0];
        if point.mean >= (1.0 - delta) * h_s {
            return Ok(n as f64 / m as f64);
        }
    }
    Ok(1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FragmentAssignment {
    pub f: Vec<usize>,
    pub f_prime: Vec<usize>,
}

impl FragmentAssignment {
    /// `F = {1..m}`, `F′ = {m+1..2m}`.
    pub fn contiguous(m: usize) -> Self {
        FragmentAssignment { f: (1..=m).collect(), f_prime: (m + 1..=2 * m).collect() }
    }

    fn specs(&self) -> (SubsystemSpec, SubsystemSpec) {
        (self.f.iter().copied().collect(), self.f_prime.iter().copied().collect())
    }

    fn validate(&self, n_env: usize) -> Result<()> {
        let (a, b) = self.specs();
        if a.len() != self.f.len() || b.len() != self.f_prime.len() || !a.is_disjoint(&b) {
            return Err(QdcError::InvalidPartition("fragments repeat or overlap".into()));
        }
        if a.iter().chain(b.iter()).any(|i| i == 0 || i > n_env) {
            return Err(QdcError::InvalidPartition(format!("fragment qubits must lie in 1..={n_env}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeriesSpec {
    pub times: Vec<f64>,
    pub fragments: Vec<FragmentAssignment>,
    pub mus: Vec<f64>,
    pub delta_target: f64,
    #[serde(default)]
    pub sampler: FragmentSampler,
    /// Also report the entropic `I(F:F′|S)`.
    #[serde(default)]
    pub quantum_cmi: bool,
}

impl TimeSeriesSpec {
    pub fn validate(&self, n_env: usize) -> Result<()> {
        if self.times.is_empty() {
            return Err(QdcError::DomainError("empty time grid".into()));
        }
        if self.times.windows(2).any(|w| w[1] < w[0]) || self.times.iter().any(|t| !t.is_finite()) {
            return Err(QdcError::DomainError("times must be finite and sorted".into()));
        }
        if self.mus.is_empty() {
            return Err(QdcError::DomainError("no measurement tilts".into()));
        }
        self.fragments.iter().try_for_each(|f| f.validate(n_env))
    }
}

/// Logarithmic grid of `n` times over `[t0, t1]`.
pub fn log_time_grid(t0: f64, t1: f64, n: usize) -> Vec<f64> {
    if n <= 1 {
        return vec![t0];
    }
    let (a, b) = (t0.ln(), t1.ln());
    (0..n).map(|k| (a + (b - a) * k as f64 / (n - 1) as f64).exp()).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsensusRow {
    pub t: f64,
    pub m: usize,
    pub m_prime: usize,
    pub mu: f64,
    pub h_s: f64,
    pub i_sf: f64,
    pub i_sf_prime: f64,
    pub i_ff: f64,
    pub i_cond: f64,
    pub i_cond_quantum: Option<f64>,
    pub refined: f64,
    pub big_c: f64,
    pub r_delta: f64,
}

fn rows_at(snap: &SpinSnapshot, spec: &TimeSeriesSpec) -> Result<Vec<ConsensusRow>> {
    let s = SubsystemSpec::system();
    let h_s = system_entropy(snap)?;
    let r_delta = redundancy(snap, spec.delta_target, spec.sampler)?;
    let mut rows = Vec::new();
    for frag in &spec.fragments {
        let (a, b) = frag.specs();
        let i_sf = mutual_information(snap, &s, &a)?;
        let i_sf_prime = mutual_information(snap, &s, &b)?;
        let i_ff = mutual_information(snap, &a, &b)?;
        let i_cond_quantum = if spec.quantum_cmi { Some(quantum_cmi(snap, &a, &b, &s)?) } else { None };
        for &mu in &spec.mus {
            let i_cond = measured_cmi(snap, &a, &b, &Measurement::tilted(mu))?;
            let refined = i_ff - i_cond;
            let big_c = if h_s > MIN_SYSTEM_ENTROPY { refined / h_s } else { 0.0 };
            rows.push(ConsensusRow {
                t: snap.time(),
                m: a.len(),
                m_prime: b.len(),
                mu,
                h_s,
                i_sf,
                i_sf_prime,
                i_ff,
                i_cond,
                i_cond_quantum,
                refined,
                big_c,
                r_delta,
            });
        }
    }
    Ok(rows)
}

/// Rows ordered by time, then fragment assignment, then tilt. At `t = 0`, or
/// whenever `H_S` vanishes, `ℭ` is reported as 0.
pub fn consensus_timeseries(
    real: &Arc<SpinRealization>,
    spec: &TimeSeriesSpec,
    mode: ExecMode,
) -> Result<Vec<ConsensusRow>> {
    spec.validate(real.n_env())?;
    let per_time = par::try_map_range(mode, spec.times.len(), |k| {
        rows_at(&SpinSnapshot::new(real.clone(), spec.times[k]), spec)
    })?;
    Ok(per_time.into_iter().flatten().collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleResult {
    pub seeds: Vec<u64>,
    pub mean: Vec<ConsensusRow>,
    pub std_err: Vec<ConsensusRow>,
    pub per_realization: Vec<Vec<ConsensusRow>>,
}

/// Runs realization `i` with seed `sub_seed(params.seed, i)` and averages
/// every numeric column pointwise.
pub fn ensemble_average(
    params: &SpinModelParams,
    n_real: usize,
    spec: &TimeSeriesSpec,
    mode: ExecMode,
) -> Result<EnsembleResult> {
    if n_real == 0 {
        return Err(QdcError::DomainError("ensemble needs at least one realization".into()));
    }
    let seeds: Vec<u64> = (0..n_real as u64).map(|i| sub_seed(params.seed, i)).collect();
    // parallelism goes over realizations; each inner series runs sequentially
    let per_realization = par::try_map_range(mode, n_real, |i| {
        let real = Arc::new(sample_couplings(&params.with_seed(seeds[i]))?);
        consensus_timeseries(&real, spec, ExecMode::Sequential)
    })?;
    let (mean, std_err) = pointwise_stats(&per_realization);
    Ok(EnsembleResult { seeds, mean, std_err, per_realization })
}

fn pointwise_stats(runs: &[Vec<ConsensusRow>]) -> (Vec<ConsensusRow>, Vec<ConsensusRow>) {
    let k = runs.len() as f64;
    let first = &runs[0];
    let mut mean = Vec::with_capacity(first.len());
    let mut err = Vec::with_capacity(first.len());
    for (idx, row) in first.iter().enumerate() {
        let col = |f: &dyn Fn(&ConsensusRow) -> f64| -> (f64, f64) {
            let vals: Vec<f64> = runs.iter().map(|r| f(&r[idx])).collect();
            let m = vals.iter().sum::<f64>() / k;
            let se = if runs.len() > 1 {
                (vals.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (k - 1.0) / k).sqrt()
            } else {
                0.0
            };
            (m, se)
        };
        let h_s = col(&|r| r.h_s);
        let i_sf = col(&|r| r.i_sf);
        let i_sf_prime = col(&|r| r.i_sf_prime);
        let i_ff = col(&|r| r.i_ff);
        let i_cond = col(&|r| r.i_cond);
        let quantum = row.i_cond_quantum.map(|_| col(&|r| r.i_cond_quantum.unwrap_or(0.0)));
        let refined = col(&|r| r.refined);
        let big_c = col(&|r| r.big_c);
        let r_delta = col(&|r| r.r_delta);
        let build = |pick: fn((f64, f64)) -> f64| ConsensusRow {
            t: row.t,
            m: row.m,
            m_prime: row.m_prime,
            mu: row.mu,
            h_s: pick(h_s),
            i_sf: pick(i_sf),
            i_sf_prime: pick(i_sf_prime),
            i_ff: pick(i_ff),
            i_cond: pick(i_cond),
            i_cond_quantum: quantum.map(pick),
            refined: pick(refined),
            big_c: pick(big_c),
            r_delta: pick(r_delta),
        };
        mean.push(build(|x| x.0));
        err.push(build(|x| x.1));
    }
    (mean, err)
}

/// First time at which `R_δ ≥ 2`.
pub fn decoherence_time(rows: &[ConsensusRow]) -> Option<f64> {
    rows.iter().find(|r| r.r_delta >= 2.0).map(|r| r.t)
}

/// Peak of `ℭ` over time for one `(m, μ)` curve and the first later time at
/// which it falls below half the peak. Returns `(t_peak, peak, t_relax)`.
pub fn relaxation_time(rows: &[ConsensusRow], m: usize, mu: f64) -> Option<(f64, f64, Option<f64>)> {
    let curve: Vec<&ConsensusRow> = rows.iter().filter(|r| r.m == m && (r.mu - mu).abs() < 1e-12).collect();
    let (ip, peak) = curve.iter().enumerate().fold(None, |best: Option<(usize, f64)>, (i, r)| match best {
        Some((_, b)) if b >= r.big_c => best,
        _ => Some((i, r.big_c)),
    })?;
    let relax = curve[ip..].iter().find(|r| r.big_c < 0.5 * peak).map(|r| r.t);
    Some((curve[ip].t, peak, relax))
}
