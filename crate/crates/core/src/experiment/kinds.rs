//! Parameter schemas and table builders for each experiment kind.

use std::f64::consts::{FRAC_PI_4, FRAC_PI_8};
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, ExperimentKind, Tolerances};
use super::table::{Cell, Column, ResultTable};
use super::RunError;
use crate::cmaybe::{self, CMaybeParams, FragmentPair};
use crate::error::QdcError;
use crate::infotheory::{
    default_tilt_grid, lemma1_check, mutual_information, random_branching_state, refined_mi,
    system_entropy, measured_cmi, Records, MIN_SYSTEM_ENTROPY,
};
use crate::measurement::{random_povm_dim, Measurement};
use crate::par::{self, ExecMode};
use crate::qstate::SubsystemSpec;
use crate::rng::{rng_from_seed, sub_seed};
use crate::spinmodel::{
    ensemble_average, log_time_grid, pip, redundancy, sample_couplings, ConsensusRow, FragmentAssignment,
    FragmentSampler, SpinModelParams, SpinSnapshot, TimeSeriesSpec,
};

pub(crate) fn dispatch(cfg: &ExperimentConfig, mode: ExecMode) -> Result<ResultTable, RunError> {
    match cfg.kind {
        ExperimentKind::CmaybeScan => cmaybe_scan(cfg, &cfg.params()?, mode),
        ExperimentKind::CmaybeConsensus => cmaybe_consensus(cfg, &cfg.params()?, mode),
        ExperimentKind::HolevoTilt => holevo_tilt(cfg, &cfg.params()?, mode),
        ExperimentKind::SpinEvolve => spin_evolve(cfg, &cfg.params()?, mode),
        ExperimentKind::Pip => pip_table(cfg, &cfg.params()?, mode),
        ExperimentKind::Redundancy => redundancy_table(cfg, &cfg.params()?, mode),
        ExperimentKind::Theorem1 => theorem1(cfg, &cfg.params()?, mode),
        ExperimentKind::Lemma1 => lemma1(cfg, &cfg.params()?, mode),
        ExperimentKind::Theorem2Stress => theorem2(cfg, &cfg.params()?, mode),
    }
}

/// Domain errors found while checking parameters are config errors.
fn invalid(e: QdcError) -> RunError {
    RunError::Config(e.to_string())
}

fn nonempty<T>(name: &str, v: &[T]) -> Result<(), RunError> {
    if v.is_empty() {
        return Err(RunError::Config(format!("'{name}' must not be empty")));
    }
    Ok(())
}

fn columns(cols: &[(&str, &str)]) -> Vec<Column> {
    [("experiment", ""), ("seed", "")]
        .iter()
        .chain(cols)
        .map(|(n, u)| Column::new(n, u))
        .collect()
}

fn row(cfg: &ExperimentConfig, cells: Vec<Cell>) -> Vec<Cell> {
    let mut r = vec![Cell::text(cfg.kind.name()), Cell::UInt(cfg.seed)];
    r.extend(cells);
    r
}

fn fill(mut table: ResultTable, cfg: &ExperimentConfig, rows: Vec<Vec<Cell>>) -> Result<ResultTable, RunError> {
    for r in rows {
        table.push(row(cfg, r))?;
    }
    Ok(table)
}

/// A ratio to `H_S`, left empty when the system carries no entropy.
fn ratio(x: f64, h_s: f64) -> Cell {
    if h_s <= MIN_SYSTEM_ENTROPY {
        Cell::Empty
    } else {
        Cell::info(x / h_s)
    }
}

fn cmaybe_grid(n: usize, ps: &[f64], ss: &[f64]) -> Result<Vec<CMaybeParams>, RunError> {
    nonempty("p", ps)?;
    nonempty("s", ss)?;
    let mut out = Vec::new();
    for &p in ps {
        for &s in ss {
            out.push(CMaybeParams::new(n, p, s).map_err(invalid)?);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CmaybeScanParams {
    pub n: usize,
    pub p: Vec<f64>,
    pub s: Vec<f64>,
    /// Fragment sizes; `1..=n` when absent.
    pub m: Option<Vec<usize>>,
}

impl Default for CmaybeScanParams {
    fn default() -> Self {
        CmaybeScanParams { n: 20, p: vec![0.4], s: vec![0.1, 0.3, 0.5, 0.8], m: None }
    }
}

fn sizes_or(m: &Option<Vec<usize>>, default: impl Iterator<Item = usize>, limit: usize) -> Result<Vec<usize>, RunError> {
    let sizes: Vec<usize> = m.clone().unwrap_or_else(|| default.collect());
    nonempty("m", &sizes)?;
    if let Some(bad) = sizes.iter().find(|&&k| k > limit) {
        return Err(RunError::Config(format!("fragment size {bad} exceeds {limit}")));
    }
    Ok(sizes)
}

fn cmaybe_scan(cfg: &ExperimentConfig, p: &CmaybeScanParams, mode: ExecMode) -> Result<ResultTable, RunError> {
    let grid = cmaybe_grid(p.n, &p.p, &p.s)?;
    let sizes = sizes_or(&p.m, 1..=p.n, p.n)?;
    let points: Vec<(CMaybeParams, usize)> = grid.iter().flat_map(|g| sizes.iter().map(move |&m| (*g, m))).collect();
    let rows = par::try_map_range(mode, points.len(), |i| -> Result<Vec<Cell>, RunError> {
        let (g, m) = points[i];
        let h_s = g.h_s();
        let i_sf = cmaybe::mi_sf_exact(&g, m)?;
        let plateau = cmaybe::plateau_expansions(&g, FragmentPair::new(m, 0)).i_sf;
        let h_dec = g.h_s_decohered();
        Ok(vec![
            Cell::uint(g.n),
            Cell::Float(g.p),
            Cell::Float(g.s),
            Cell::uint(m),
            Cell::info(h_s),
            Cell::info(i_sf),
            ratio(i_sf, h_s),
            Cell::info(plateau),
            ratio(plateau, h_dec),
        ])
    })?;
    let table = ResultTable::new(columns(&[
        ("n", ""),
        ("p", "1"),
        ("s", "1"),
        ("m", ""),
        ("h_s", "bits"),
        ("i_sf", "bits"),
        ("c_fs", "1"),
        ("i_sf_plateau", "bits"),
        ("c_fs_plateau", "1"),
    ]));
    fill(table, cfg, rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CmaybeConsensusParams {
    pub n: usize,
    pub p: Vec<f64>,
    pub s: Vec<f64>,
    /// Sizes of `F`; `1..=n/2` when absent.
    pub m: Option<Vec<usize>>,
    /// Size of `F′`; equal to `m` when absent.
    pub m_prime: Option<usize>,
    pub mu: Vec<f64>,
}

impl Default for CmaybeConsensusParams {
    fn default() -> Self {
        CmaybeConsensusParams {
            n: 100,
            p: vec![0.3, 0.5],
            s: vec![0.3, 0.5, 0.8],
            m: None,
            m_prime: None,
            mu: vec![0.0, FRAC_PI_8, FRAC_PI_4],
        }
    }
}

const CONSENSUS_COLUMNS: [(&str, &str); 15] = [
    ("h_s", "bits"),
    ("i_sf", "bits"),
    ("i_sf_prime", "bits"),
    ("i_ff", "bits"),
    ("holevo_f", "bits"),
    ("cmi_measured", "bits"),
    ("cmi_quantum", "bits"),
    ("refined", "bits"),
    ("c_fs", "1"),
    ("c_slambda_f", "1"),
    ("c_ff", "1"),
    ("big_c", "1"),
    ("delta", "1"),
    ("delta_prime", "1"),
    ("delta_tilde", "1"),
];

fn consensus_rows(
    points: &[(CMaybeParams, FragmentPair, f64)],
    mode: ExecMode,
) -> Result<Vec<Vec<Cell>>, RunError> {
    par::try_map_range(mode, points.len(), |i| -> Result<Vec<Cell>, RunError> {
        let (g, pair, mu) = points[i];
        let r = cmaybe::consensus(&g, pair, &Measurement::tilted(mu))?;
        Ok(vec![
            Cell::uint(g.n),
            Cell::Float(g.p),
            Cell::Float(g.s),
            Cell::uint(pair.m),
            Cell::uint(pair.m_prime),
            Cell::Float(mu),
            Cell::info(r.h_s),
            Cell::info(r.i_sf),
            Cell::info(r.i_sf_prime),
            Cell::info(r.i_ff),
            Cell::info(r.holevo_f),
            Cell::info(r.cmi_measured),
            Cell::info(r.cmi_quantum),
            Cell::info(r.refined),
            Cell::info(r.c_fs),
            Cell::info(r.c_slambda_f),
            Cell::info(r.c_ff),
            Cell::info(r.big_c),
            Cell::info(r.delta),
            Cell::info(r.delta_prime),
            Cell::info(r.delta_tilde),
        ])
    })
}

fn consensus_table(cols: &[(&str, &str)]) -> ResultTable {
    let all: Vec<(&str, &str)> = cols.iter().chain(CONSENSUS_COLUMNS.iter()).copied().collect();
    ResultTable::new(columns(&all))
}

fn cmaybe_consensus(cfg: &ExperimentConfig, p: &CmaybeConsensusParams, mode: ExecMode) -> Result<ResultTable, RunError> {
    let grid = cmaybe_grid(p.n, &p.p, &p.s)?;
    nonempty("mu", &p.mu)?;
    let sizes = sizes_or(&p.m, 1..=p.n / 2, p.n)?;
    let mut points = Vec::new();
    for g in &grid {
        for &m in &sizes {
            let pair = FragmentPair::new(m, p.m_prime.unwrap_or(m));
            pair.validate(g).map_err(invalid)?;
            for &mu in &p.mu {
                points.push((*g, pair, mu));
            }
        }
    }
    let rows = consensus_rows(&points, mode)?;
    let table = consensus_table(&[("n", ""), ("p", "1"), ("s", "1"), ("m", ""), ("m_prime", ""), ("mu", "rad")]);
    fill(table, cfg, rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HolevoTiltParams {
    pub n: usize,
    pub p: f64,
    pub s: f64,
    pub m: Vec<usize>,
    pub m_prime: Option<usize>,
    /// Tilt angles; `kπ/48` for `k = 0..24` when absent.
    pub mu: Option<Vec<f64>>,
}

impl Default for HolevoTiltParams {
    fn default() -> Self {
        HolevoTiltParams { n: 20, p: 0.4, s: 0.5, m: vec![1, 2, 4], m_prime: None, mu: None }
    }
}

fn holevo_tilt(cfg: &ExperimentConfig, p: &HolevoTiltParams, mode: ExecMode) -> Result<ResultTable, RunError> {
    let g = CMaybeParams::new(p.n, p.p, p.s).map_err(invalid)?;
    nonempty("m", &p.m)?;
    let mus = p.mu.clone().unwrap_or_else(default_tilt_grid);
    nonempty("mu", &mus)?;
    let mut points = Vec::new();
    for &m in &p.m {
        let pair = FragmentPair::new(m, p.m_prime.unwrap_or(m));
        pair.validate(&g).map_err(invalid)?;
        for &mu in &mus {
            points.push((g, pair, mu));
        }
    }
    let rows = consensus_rows(&points, mode)?;
    let table = consensus_table(&[("n", ""), ("p", "1"), ("s", "1"), ("m", ""), ("m_prime", ""), ("mu", "rad")]);
    fill(table, cfg, rows)
}

/// Log-spaced times `t0..=t1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeGrid {
    pub t0: f64,
    pub t1: f64,
    pub points: usize,
}

impl TimeGrid {
    fn resolve(times: &Option<Vec<f64>>, grid: &TimeGrid) -> Result<Vec<f64>, RunError> {
        let t = match times {
            Some(t) if t.is_empty() => return Err(RunError::Config("empty times vector".into())),
            Some(t) => t.clone(),
            None => {
                if !(grid.t0 > 0.0 && grid.t1 >= grid.t0 && grid.t1.is_finite() && grid.points >= 1) {
                    return Err(RunError::Config(format!("invalid time grid {grid:?}")));
                }
                log_time_grid(grid.t0, grid.t1, grid.points)
            }
        };
        if t.iter().any(|x| !x.is_finite() || *x < 0.0) || t.windows(2).any(|w| w[1] < w[0]) {
            return Err(RunError::Config("times must be finite, nonnegative and sorted".into()));
        }
        Ok(t)
    }
}

fn spin_params(n: usize, delta_d: f64, delta_g: f64, seed: u64) -> Result<SpinModelParams, RunError> {
    let params = SpinModelParams { n, delta_d, delta_g, seed };
    params.validate().map_err(invalid)?;
    Ok(params)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnsembleParams {
    pub n: usize,
    pub delta_d: f64,
    pub delta_g: f64,
    pub realizations: usize,
    pub times: Option<Vec<f64>>,
    pub time_grid: TimeGrid,
    /// Fragment sizes; `F = {1..m}`, `F′ = {m+1..2m}`.
    pub m: Vec<usize>,
    pub mu: Vec<f64>,
    pub delta: f64,
    pub sampler: FragmentSampler,
    pub quantum_cmi: bool,
    /// Also emit one row block per realization.
    pub per_realization: bool,
}

impl Default for EnsembleParams {
    fn default() -> Self {
        EnsembleParams {
            n: 16,
            delta_d: 1.0,
            delta_g: 0.01,
            realizations: 10,
            times: None,
            time_grid: TimeGrid { t0: 0.05, t1: 500.0, points: 40 },
            m: vec![4],
            mu: vec![0.0, FRAC_PI_4],
            delta: 0.1,
            sampler: FragmentSampler::Contiguous,
            quantum_cmi: false,
            per_realization: false,
        }
    }
}

impl EnsembleParams {
    pub fn series_spec(&self) -> Result<TimeSeriesSpec, RunError> {
        nonempty("m", &self.m)?;
        nonempty("mu", &self.mu)?;
        if let Some(bad) = self.m.iter().find(|&&m| m == 0 || 2 * m > self.n) {
            return Err(RunError::Config(format!("fragment size {bad} needs 1 ≤ 2m ≤ {}", self.n)));
        }
        if self.realizations == 0 {
            return Err(RunError::Config("'realizations' must be positive".into()));
        }
        let spec = TimeSeriesSpec {
            times: TimeGrid::resolve(&self.times, &self.time_grid)?,
            fragments: self.m.iter().map(|&m| FragmentAssignment::contiguous(m)).collect(),
            mus: self.mu.clone(),
            delta_target: self.delta,
            sampler: self.sampler,
            quantum_cmi: self.quantum_cmi,
        };
        spec.validate(self.n).map_err(invalid)?;
        Ok(spec)
    }
}

fn series_cells(r: &ConsensusRow) -> Vec<Cell> {
    vec![
        Cell::Float(r.t),
        Cell::uint(r.m),
        Cell::uint(r.m_prime),
        Cell::Float(r.mu),
        Cell::info(r.h_s),
        Cell::info(r.i_sf),
        Cell::info(r.i_sf_prime),
        Cell::info(r.i_ff),
        Cell::info(r.i_cond),
        r.i_cond_quantum.map_or(Cell::Empty, Cell::info),
        Cell::info(r.refined),
        Cell::info(r.big_c),
        Cell::Float(r.r_delta),
    ]
}

fn spin_evolve(cfg: &ExperimentConfig, p: &EnsembleParams, mode: ExecMode) -> Result<ResultTable, RunError> {
    let params = spin_params(p.n, p.delta_d, p.delta_g, cfg.seed)?;
    let spec = p.series_spec()?;
    let ens = ensemble_average(&params, p.realizations, &spec, mode)?;
    let mut rows = Vec::new();
    let mut block = |stat: &str, real: Cell, seed: Cell, series: &[ConsensusRow]| {
        for r in series {
            let mut cells = vec![Cell::text(stat), real.clone(), seed.clone()];
            cells.extend(series_cells(r));
            rows.push(cells);
        }
    };
    block("mean", Cell::Empty, Cell::Empty, &ens.mean);
    block("std_err", Cell::Empty, Cell::Empty, &ens.std_err);
    if p.per_realization {
        for (i, series) in ens.per_realization.iter().enumerate() {
            block("realization", Cell::uint(i), Cell::UInt(ens.seeds[i]), series);
        }
    }
    let table = ResultTable::new(columns(&[
        ("stat", ""),
        ("realization", ""),
        ("realization_seed", ""),
        ("t", "time"),
        ("m", ""),
        ("m_prime", ""),
        ("mu", "rad"),
        ("h_s", "bits"),
        ("i_sf", "bits"),
        ("i_sf_prime", "bits"),
        ("i_ff", "bits"),
        ("i_cond", "bits"),
        ("i_cond_quantum", "bits"),
        ("refined", "bits"),
        ("big_c", "1"),
        ("r_delta", "1"),
    ]));
    fill(table, cfg, rows)
}

/// Realization `i`'s couplings and its seed `sub_seed(master, i)`.
fn realizations(params: &SpinModelParams, count: usize) -> Result<Vec<(u64, Arc<crate::spinmodel::SpinRealization>)>, RunError> {
    if count == 0 {
        return Err(RunError::Config("'realizations' must be positive".into()));
    }
    (0..count as u64)
        .map(|i| {
            let seed = sub_seed(params.seed, i);
            Ok((seed, Arc::new(sample_couplings(&params.with_seed(seed))?)))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipParams {
    pub n: usize,
    pub delta_d: f64,
    pub delta_g: f64,
    pub realizations: usize,
    pub times: Option<Vec<f64>>,
    pub time_grid: TimeGrid,
    /// Fragment sizes; `0..=n` when absent.
    pub m: Option<Vec<usize>>,
    pub sampler: FragmentSampler,
}

impl Default for PipParams {
    fn default() -> Self {
        PipParams {
            n: 12,
            delta_d: 1.0,
            delta_g: 0.01,
            realizations: 1,
            times: None,
            time_grid: TimeGrid { t0: 0.1, t1: 100.0, points: 4 },
            m: None,
            sampler: FragmentSampler::Contiguous,
        }
    }
}

fn pip_table(cfg: &ExperimentConfig, p: &PipParams, mode: ExecMode) -> Result<ResultTable, RunError> {
    let params = spin_params(p.n, p.delta_d, p.delta_g, cfg.seed)?;
    let times = TimeGrid::resolve(&p.times, &p.time_grid)?;
    let sizes = sizes_or(&p.m, 0..=p.n, p.n)?;
    let reals = realizations(&params, p.realizations)?;
    let nt = times.len();
    let blocks = par::try_map_range(mode, reals.len() * nt, |k| -> Result<Vec<Vec<Cell>>, RunError> {
        let (i, t) = (k / nt, times[k % nt]);
        let (seed, real) = &reals[i];
        let points = pip(&SpinSnapshot::new(real.clone(), t), &sizes, p.sampler)?;
        Ok(points
            .iter()
            .map(|pt| {
                vec![
                    Cell::uint(i),
                    Cell::UInt(*seed),
                    Cell::Float(t),
                    Cell::uint(pt.m),
                    Cell::info(pt.mean),
                    Cell::info(pt.std),
                ]
            })
            .collect())
    })?;
    let table = ResultTable::new(columns(&[
        ("realization", ""),
        ("realization_seed", ""),
        ("t", "time"),
        ("m", ""),
        ("i_sf_mean", "bits"),
        ("i_sf_std", "bits"),
    ]));
    fill(table, cfg, blocks.into_iter().flatten().collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RedundancyParams {
    pub n: usize,
    pub delta_d: f64,
    pub delta_g: f64,
    pub realizations: usize,
    pub times: Option<Vec<f64>>,
    pub time_grid: TimeGrid,
    pub delta: Vec<f64>,
    pub sampler: FragmentSampler,
}

impl Default for RedundancyParams {
    fn default() -> Self {
        RedundancyParams {
            n: 12,
            delta_d: 1.0,
            delta_g: 0.01,
            realizations: 1,
            times: None,
            time_grid: TimeGrid { t0: 0.05, t1: 500.0, points: 20 },
            delta: vec![0.1],
            sampler: FragmentSampler::Contiguous,
        }
    }
}

fn redundancy_table(cfg: &ExperimentConfig, p: &RedundancyParams, mode: ExecMode) -> Result<ResultTable, RunError> {
    let params = spin_params(p.n, p.delta_d, p.delta_g, cfg.seed)?;
    let times = TimeGrid::resolve(&p.times, &p.time_grid)?;
    nonempty("delta", &p.delta)?;
    if let Some(bad) = p.delta.iter().find(|d| !(**d > 0.0 && **d < 1.0)) {
        return Err(RunError::Config(format!("δ = {bad} outside (0, 1)")));
    }
    let reals = realizations(&params, p.realizations)?;
    let nt = times.len();
    let blocks = par::try_map_range(mode, reals.len() * nt, |k| -> Result<Vec<Vec<Cell>>, RunError> {
        let (i, t) = (k / nt, times[k % nt]);
        let (seed, real) = &reals[i];
        let snap = SpinSnapshot::new(real.clone(), t);
        let h_s = system_entropy(&snap)?;
        p.delta
            .iter()
            .map(|&d| {
                Ok(vec![
                    Cell::uint(i),
                    Cell::UInt(*seed),
                    Cell::Float(t),
                    Cell::Float(d),
                    Cell::info(h_s),
                    Cell::Float(redundancy(&snap, d, p.sampler)?),
                ])
            })
            .collect()
    })?;
    let table = ResultTable::new(columns(&[
        ("realization", ""),
        ("realization_seed", ""),
        ("t", "time"),
        ("delta", "1"),
        ("h_s", "bits"),
        ("r_delta", "1"),
    ]));
    fill(table, cfg, blocks.into_iter().flatten().collect())
}

/// Shared by the theorem1 and lemma1 kinds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TheoremParams {
    pub instances: usize,
    /// System dimensions, cycled over instances.
    pub d_s: Vec<usize>,
}

impl Default for TheoremParams {
    fn default() -> Self {
        TheoremParams { instances: 100, d_s: vec![2, 3, 4] }
    }
}

fn check_dims(d_s: &[usize]) -> Result<(), RunError> {
    nonempty("d_s", d_s)?;
    if let Some(bad) = d_s.iter().find(|&&d| !(2..=16).contains(&d)) {
        return Err(RunError::Config(format!("system dimension {bad} outside 2..=16")));
    }
    Ok(())
}

fn deficit_ok(delta: f64, delta_prime: f64, delta_tilde: f64, tol: f64) -> bool {
    delta_tilde >= -tol && delta_tilde <= delta.min(delta_prime) + tol
}

/// Instance `i` draws from `sub_seed(seed, i)`: `F`, `F′` random records,
/// remainder orthogonal.
fn theorem1(cfg: &ExperimentConfig, p: &TheoremParams, mode: ExecMode) -> Result<ResultTable, RunError> {
    check_dims(&p.d_s)?;
    let tol: Tolerances = cfg.tolerances;
    let rows = par::try_map_range(mode, p.instances, |i| -> Result<Vec<Cell>, RunError> {
        let d = p.d_s[i % p.d_s.len()];
        let mut rng = rng_from_seed(sub_seed(cfg.seed, i as u64));
        let bs = random_branching_state(&mut rng, d, &[Records::Random, Records::Random, Records::Orthogonal])?;
        let (f, fp) = (SubsystemSpec::new([1]), SubsystemSpec::new([2]));
        let r = crate::infotheory::theorem1_check(&bs, &f, &fp)?;
        Ok(vec![
            Cell::uint(i),
            Cell::uint(d),
            Cell::info(r.h_s),
            Cell::info(r.delta),
            Cell::info(r.delta_prime),
            Cell::info(r.delta_tilde),
            Cell::info(r.delta_hat),
            Cell::info(r.i_ff),
            Cell::Float(r.identity_residual),
            Cell::Bool(r.identity_residual <= tol.identity),
            Cell::Bool(deficit_ok(r.delta, r.delta_prime, r.delta_tilde, tol.bound)),
        ])
    })?;
    let table = ResultTable::new(columns(&[
        ("instance", ""),
        ("d_s", ""),
        ("h_s", "bits"),
        ("delta", "1"),
        ("delta_prime", "1"),
        ("delta_tilde", "1"),
        ("delta_hat", "1"),
        ("i_ff", "bits"),
        ("identity_residual", "bits"),
        ("identity_ok", ""),
        ("bound_ok", ""),
    ]));
    fill(table, cfg, rows)
}

/// Instance `i` draws from `sub_seed(seed, i)`: all three parties random, so
/// the remainder keeps some coherence.
fn lemma1(cfg: &ExperimentConfig, p: &TheoremParams, mode: ExecMode) -> Result<ResultTable, RunError> {
    check_dims(&p.d_s)?;
    let tol = cfg.tolerances;
    let rows = par::try_map_range(mode, p.instances, |i| -> Result<Vec<Cell>, RunError> {
        let d = p.d_s[i % p.d_s.len()];
        let mut rng = rng_from_seed(sub_seed(cfg.seed, i as u64));
        let bs = random_branching_state(&mut rng, d, &[Records::Random, Records::Random, Records::Random])?;
        let (f, fp) = (SubsystemSpec::new([1]), SubsystemSpec::new([2]));
        let r = lemma1_check(&bs, &f, &fp)?;
        let x = &r.deficits;
        let joint = x.delta_tilde + r.epsilon_tilde;
        let bound = joint <= (x.delta + r.epsilon).min(x.delta_prime + r.epsilon_prime) + tol.bound;
        Ok(vec![
            Cell::uint(i),
            Cell::uint(d),
            Cell::info(x.h_s),
            Cell::info(x.delta),
            Cell::info(x.delta_prime),
            Cell::info(x.delta_tilde),
            Cell::info(r.epsilon),
            Cell::info(r.epsilon_prime),
            Cell::info(r.epsilon_tilde),
            Cell::info(r.epsilon_hat),
            Cell::info(x.i_ff),
            Cell::Float(r.decomposition_residual),
            Cell::Bool(r.decomposition_residual <= tol.identity),
            Cell::Bool(bound),
        ])
    })?;
    let table = ResultTable::new(columns(&[
        ("instance", ""),
        ("d_s", ""),
        ("h_s", "bits"),
        ("delta", "1"),
        ("delta_prime", "1"),
        ("delta_tilde", "1"),
        ("epsilon", "1"),
        ("epsilon_prime", "1"),
        ("epsilon_tilde", "1"),
        ("epsilon_hat", "1"),
        ("i_ff", "bits"),
        ("decomposition_residual", "bits"),
        ("decomposition_ok", ""),
        ("bound_ok", ""),
    ]));
    fill(table, cfg, rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Theorem2Params {
    pub instances: usize,
    pub povms: usize,
    pub d_s: Vec<usize>,
    pub min_outcomes: usize,
    pub max_outcomes: usize,
}

impl Default for Theorem2Params {
    fn default() -> Self {
        Theorem2Params { instances: 200, povms: 5, d_s: vec![2, 3, 4], min_outcomes: 2, max_outcomes: 6 }
    }
}

/// Instance `i`: `F` orthogonal, `F′` random, remainder orthogonal, then
/// `povms` random POVMs whose outcome counts and seeds come from the same
/// stream.
fn theorem2(cfg: &ExperimentConfig, p: &Theorem2Params, mode: ExecMode) -> Result<ResultTable, RunError> {
    check_dims(&p.d_s)?;
    if !(2 <= p.min_outcomes && p.min_outcomes <= p.max_outcomes && p.max_outcomes <= 6) {
        return Err(RunError::Config(format!(
            "outcome range {}..={} outside 2..=6",
            p.min_outcomes, p.max_outcomes
        )));
    }
    let tol = cfg.tolerances;
    let blocks = par::try_map_range(mode, p.instances, |i| -> Result<Vec<Vec<Cell>>, RunError> {
        let d = p.d_s[i % p.d_s.len()];
        let mut rng = rng_from_seed(sub_seed(cfg.seed, i as u64));
        let bs = random_branching_state(&mut rng, d, &[Records::Orthogonal, Records::Random, Records::Orthogonal])?;
        let (f, fp) = (SubsystemSpec::new([1]), SubsystemSpec::new([2]));
        let i_ff = mutual_information(&bs, &f, &fp)?;
        (0..p.povms)
            .map(|j| {
                let outcomes = rng.random_range(p.min_outcomes..=p.max_outcomes);
                let povm_seed: u64 = rng.random();
                let meas = Measurement::Povm(random_povm_dim(povm_seed, d, outcomes)?);
                let cmi = measured_cmi(&bs, &f, &fp, &meas)?;
                let refined = refined_mi(&bs, &f, &fp, &meas)?;
                Ok(vec![
                    Cell::uint(i),
                    Cell::uint(j),
                    Cell::uint(d),
                    Cell::uint(outcomes),
                    Cell::UInt(povm_seed),
                    Cell::info(i_ff),
                    Cell::info(cmi),
                    Cell::Float(refined),
                    Cell::Bool(refined >= -tol.nonnegativity),
                ])
            })
            .collect()
    })?;
    let table = ResultTable::new(columns(&[
        ("instance", ""),
        ("povm", ""),
        ("d_s", ""),
        ("outcomes", ""),
        ("povm_seed", ""),
        ("i_ff", "bits"),
        ("cmi_measured", "bits"),
        ("refined", "bits"),
        ("nonneg_ok", ""),
    ]));
    fill(table, cfg, blocks.into_iter().flatten().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiment::run;
    use serde_json::json;

    fn config(kind: ExperimentKind, params: serde_json::Value) -> ExperimentConfig {
        let mut c = ExperimentConfig::new(kind);
        c.params = params;
        c
    }

    fn bools(t: &ResultTable, name: &str) -> Vec<bool> {
        t.column(name).unwrap().iter().map(|c| c.as_bool().unwrap()).collect()
    }

    #[test]
    fn cmaybe_scan_default_shape() {
        let t = run(&config(ExperimentKind::CmaybeScan, json!({})), ExecMode::auto()).unwrap();
        assert_eq!(t.rows.len(), 80);
        assert_eq!(t.columns[0].name, "experiment");
        let c = t.column("c_fs").unwrap();
        let last = c.last().unwrap().as_f64().unwrap();
        // the whole environment holds all of H_S twice over
        assert!((last - 2.0).abs() < 1e-12);
    }

    #[test]
    fn theorem1_rows_pass() {
        let t = run(&config(ExperimentKind::Theorem1, json!({})), ExecMode::auto()).unwrap();
        assert_eq!(t.rows.len(), 100);
        assert!(bools(&t, "bound_ok").iter().all(|&b| b));
        assert!(bools(&t, "identity_ok").iter().all(|&b| b));
    }

    #[test]
    fn lemma_and_theorem2_rows_pass() {
        let t = run(&config(ExperimentKind::Lemma1, json!({"instances": 30})), ExecMode::auto()).unwrap();
        assert!(bools(&t, "decomposition_ok").iter().all(|&b| b));
        let t = run(&config(ExperimentKind::Theorem2Stress, json!({"instances": 10})), ExecMode::auto()).unwrap();
        assert_eq!(t.rows.len(), 50);
        assert!(bools(&t, "nonneg_ok").iter().all(|&b| b));
    }

    #[test]
    fn spin_kinds_run_small() {
        let spin = json!({"n": 6, "realizations": 2, "times": [0.0, 0.5, 2.0], "m": [2], "per_realization": true});
        let t = run(&config(ExperimentKind::SpinEvolve, spin), ExecMode::auto()).unwrap();
        // mean, std_err and two realizations, each 3 times × 2 tilts
        assert_eq!(t.rows.len(), 4 * 6);
        let t = run(&config(ExperimentKind::Pip, json!({"n": 6, "times": [1.0]})), ExecMode::auto()).unwrap();
        assert_eq!(t.rows.len(), 7);
        let t = run(&config(ExperimentKind::Redundancy, json!({"n": 6, "times": [0.0, 1.0]})), ExecMode::auto()).unwrap();
        assert_eq!(t.rows.len(), 2);
    }

    #[test]
    fn holevo_and_consensus_kinds() {
        let t = run(&config(ExperimentKind::HolevoTilt, json!({"m": [2]})), ExecMode::auto()).unwrap();
        assert_eq!(t.rows.len(), 24);
        let t = run(
            &config(ExperimentKind::CmaybeConsensus, json!({"n": 10, "p": [0.5], "s": [0.5], "mu": [0.0]})),
            ExecMode::auto(),
        )
        .unwrap();
        assert_eq!(t.rows.len(), 5);
    }

    #[test]
    fn config_errors() {
        for (kind, params) in [
            (ExperimentKind::SpinEvolve, json!({"times": []})),
            (ExperimentKind::Pip, json!({"times": []})),
            (ExperimentKind::CmaybeScan, json!({"p": [1.5]})),
            (ExperimentKind::CmaybeScan, json!({"bogus": 1})),
            (ExperimentKind::CmaybeConsensus, json!({"n": 10, "m": [6]})),
            (ExperimentKind::Theorem1, json!({"d_s": [1]})),
            (ExperimentKind::Theorem2Stress, json!({"max_outcomes": 7})),
            (ExperimentKind::SpinEvolve, json!({"n": 6, "m": [4]})),
        ] {
            let e = run(&config(kind, params.clone()), ExecMode::Sequential).unwrap_err();
            assert!(matches!(e, RunError::Config(_)), "{kind} {params}: {e:?}");
        }
    }

    #[test]
    fn output_is_independent_of_exec_mode() {
        let c = config(ExperimentKind::Theorem2Stress, json!({"instances": 6}));
        let a = run(&c, ExecMode::Sequential).unwrap();
        let b = run(&c, ExecMode::Parallel).unwrap();
        assert_eq!(a.data_section().unwrap(), b.data_section().unwrap());
    }
}
