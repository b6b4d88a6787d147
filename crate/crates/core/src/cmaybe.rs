//! The c-maybe model: a system qubit `√p|0⟩ + √q|1⟩` imprinted on `N`
//! environment qubits by an imperfect CNOT. Each environment qubit ends in
//! `|0⟩` or `s|0⟩ + c|1⟩`, so every reduced state has rank at most two and
//! all measures have closed or two-by-two forms.

use std::f64::consts::LN_2;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{QdcError, Result};
use crate::infotheory::{two_branch_gram, BranchingState, ConsensusReport};
use crate::linalg::{real, CMatrix};
use crate::measurement::Measurement;
use crate::qstate::{binary_entropy, PureState, SubsystemSpec, MAX_QUBITS};

/// Below this `|q − p|` the deficit coefficient uses its `p = q` limit.
pub const SYMMETRIC_SWITCH: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CMaybeParams {
    pub n: usize,
    pub p: f64,
    pub s: f64,
}

impl CMaybeParams {
    pub fn new(n: usize, p: f64, s: f64) -> Result<Self> {
        if n == 0 {
            return Err(QdcError::DomainError("c-maybe needs at least one environment qubit".into()));
        }
        if !(0.0..=1.0).contains(&p) {
            return Err(QdcError::DomainError(format!("p = {p} outside [0, 1]")));
        }
        check_s(s)?;
        Ok(CMaybeParams { n, p, s })
    }

    pub fn q(&self) -> f64 {
        1.0 - self.p
    }

    pub fn c(&self) -> f64 {
        (1.0 - self.s * self.s).max(0.0).sqrt()
    }

    /// `h(p)`, the system entropy once it is fully decohered.
    pub fn h_s_decohered(&self) -> f64 {
        binary_entropy(self.p).unwrap_or(0.0)
    }

    /// `h(λ⁺_N)`, the exact system entropy.
    pub fn h_s(&self) -> f64 {
        h_lambda(self.n, self.p, self.s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FragmentPair {
    pub m: usize,
    pub m_prime: usize,
}

impl FragmentPair {
    pub fn new(m: usize, m_prime: usize) -> Self {
        FragmentPair { m, m_prime }
    }

    pub fn validate(&self, params: &CMaybeParams) -> Result<()> {
        if self.m + self.m_prime > params.n {
            return Err(QdcError::DomainError(format!(
                "fragments of {} and {} qubits in an environment of {}",
                self.m, self.m_prime, params.n
            )));
        }
        Ok(())
    }

    /// Qubit labels of `F` (environment qubits `1..=m`) and `F′` (the next
    /// `m′`).
    pub fn labels(&self) -> (SubsystemSpec, SubsystemSpec) {
        (SubsystemSpec::block(1, self.m), SubsystemSpec::block(1 + self.m, self.m_prime))
    }
}

fn check_s(s: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&s) {
        return Err(QdcError::DomainError(format!("s = {s} outside [0, 1]")));
    }
    Ok(())
}

/// Two-qubit gate on `|control target⟩`: identity when the control is `|0⟩`,
/// `|0⟩ ↦ s|0⟩ + c|1⟩`, `|1⟩ ↦ c|0⟩ − s|1⟩` on the target otherwise.
pub fn cmaybe_gate(s: f64) -> Result<CMatrix> {
    check_s(s)?;
    let c = (1.0 - s * s).max(0.0).sqrt();
    let mut g = CMatrix::identity(4, 4);
    g[(2, 2)] = real(s);
    g[(2, 3)] = real(c);
    g[(3, 2)] = real(c);
    g[(3, 3)] = real(-s);
    Ok(g)
}

/// Dense state `√p|0⟩|0…0⟩ + √q|1⟩(s|0⟩ + c|1⟩)^{⊗N}`.
pub fn build_cmaybe_state(params: &CMaybeParams) -> Result<PureState> {
    let n = params.n;
    if n + 1 > MAX_QUBITS {
        return Err(QdcError::RegisterTooLarge { requested: n + 1, limit: MAX_QUBITS });
    }
    let dim = 1usize << n;
    let mut amps = vec![Complex64::default(); 2 * dim];
    amps[0] = real(params.p.sqrt());
    let (s, c) = (params.s, params.c());
    let sq = params.q().sqrt();
    for (x, a) in amps[dim..].iter_mut().enumerate() {
        let ones = x.count_ones() as i32;
        *a = real(sq * c.powi(ones) * s.powi(n as i32 - ones));
    }
    PureState::system_env(n, amps)
}

/// `λ±_{k,p} = ½(1 ± √((q−p)² + 4 s^{2k} p q))`.
pub fn lambda_pm(k: usize, p: f64, s: f64) -> Result<(f64, f64)> {
    if !(0.0..=1.0).contains(&p) {
        return Err(QdcError::DomainError(format!("p = {p} outside [0, 1]")));
    }
    check_s(s)?;
    let q = 1.0 - p;
    let r = ((q - p).powi(2) + 4.0 * overlap(s, 2 * k) * p * q).sqrt().min(1.0);
    Ok((0.5 * (1.0 + r), 0.5 * (1.0 - r)))
}

fn overlap(s: f64, k: usize) -> f64 {
    s.powi(k as i32)
}

fn h_lambda(k: usize, p: f64, s: f64) -> f64 {
    lambda_pm(k, p, s).map(|(lp, _)| binary_entropy(lp).unwrap_or(0.0)).unwrap_or(0.0)
}

/// `I(S:F_m) = h(λ⁺_N) + h(λ⁺_m) − h(λ⁺_{N−m})`.
pub fn mi_sf_exact(params: &CMaybeParams, m: usize) -> Result<f64> {
    mi_sf_with(params, m, lambda_pm)
}

/// [`mi_sf_exact`] with the eigenvalue formula supplied by the caller.
pub fn mi_sf_with<L>(params: &CMaybeParams, m: usize, lambda: L) -> Result<f64>
where
    L: Fn(usize, f64, f64) -> Result<(f64, f64)>,
{
    if m > params.n {
        return Err(QdcError::DomainError(format!("fragment of {m} qubits in {}", params.n)));
    }
    let (n, p, s) = (params.n, params.p, params.s);
    let h = |k: usize| -> Result<f64> { binary_entropy(lambda(k, p, s)?.0) };
    Ok(h(n)? + h(m)? - h(n - m)?)
}

/// Exact `I(F:F′)` at finite `N`.
pub fn mi_ff_exact(params: &CMaybeParams, pair: FragmentPair) -> Result<f64> {
    pair.validate(params)?;
    let bs = gram_reduce(params, &[pair.m, pair.m_prime])?;
    crate::infotheory::mutual_information(&bs, &SubsystemSpec::new([1]), &SubsystemSpec::new([2]))
}

/// `I(F:F′) = h(λ⁺_m) + h(λ⁺_{m′}) − h(λ⁺_{m+m′})` once the rest of the
/// environment has fully decohered the system.
pub fn mi_ff_decohered(params: &CMaybeParams, pair: FragmentPair) -> f64 {
    let (p, s) = (params.p, params.s);
    h_lambda(pair.m, p, s) + h_lambda(pair.m_prime, p, s) - h_lambda(pair.m + pair.m_prime, p, s)
}

/// Coefficient `K` of the near-plateau deficit `H_S − I ≈ K s^{2m}`:
/// `(pq/|q−p|)|log₂(q/p)|`, tending to `1/(2 ln 2)` as `p → q`.
pub fn deficit_coefficient(p: f64) -> f64 {
    let q = 1.0 - p;
    if p <= 0.0 || q <= 0.0 {
        return 0.0;
    }
    if (q - p).abs() < SYMMETRIC_SWITCH {
        return 1.0 / (2.0 * LN_2);
    }
    p * q / (q - p).abs() * (q / p).log2().abs()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlateauExpansion {
    pub i_sf: f64,
    pub i_sf_prime: f64,
    pub i_ff: f64,
}

/// Leading-order forms in `s^{2m}` around the classical plateau, with
/// `H_S = h(p)`.
pub fn plateau_expansions(params: &CMaybeParams, pair: FragmentPair) -> PlateauExpansion {
    let h = params.h_s_decohered();
    let k = deficit_coefficient(params.p);
    let a = overlap(params.s, 2 * pair.m);
    let b = overlap(params.s, 2 * pair.m_prime);
    PlateauExpansion {
        i_sf: h - k * a,
        i_sf_prime: h - k * b,
        i_ff: h - k * (a + b - a * b),
    }
}

/// `(δ, δ′, δ̃)` from the near-plateau forms, relative to `H_S = h(p)`.
pub fn deficits(params: &CMaybeParams, pair: FragmentPair) -> Result<(f64, f64, f64)> {
    let h = params.h_s_decohered();
    if h <= crate::infotheory::MIN_SYSTEM_ENTROPY {
        return Err(QdcError::DegenerateSystem(h));
    }
    let k = deficit_coefficient(params.p) / h;
    let s = params.s;
    Ok((
        k * overlap(s, 2 * pair.m),
        k * overlap(s, 2 * pair.m_prime),
        k * overlap(s, 2 * (pair.m + pair.m_prime)),
    ))
}

/// Leading-order `(ε, ε′, ε̃)` with `H_SX = (1 − ε_X) H_S` for a finite
/// environment: `ε = K (s^{2(N−m)} − s^{2N}) / H_S`, relative to the exact
/// `H_S = h(λ⁺_N)`. All three are nonnegative.
pub fn finite_size_epsilons(params: &CMaybeParams, pair: FragmentPair) -> Result<(f64, f64, f64)> {
    pair.validate(params)?;
    let h = params.h_s();
    if h <= crate::infotheory::MIN_SYSTEM_ENTROPY {
        return Err(QdcError::DegenerateSystem(h));
    }
    let k = deficit_coefficient(params.p) / h;
    let (n, s) = (params.n, params.s);
    let eps = |size: usize| k * (overlap(s, 2 * (n - size)) - overlap(s, 2 * n));
    Ok((eps(pair.m), eps(pair.m_prime), eps(pair.m + pair.m_prime)))
}

/// Two-branch reduction: one environment party per entry of `sizes`
/// (overlap `s^size`), followed by the remainder as the last party.
pub fn gram_reduce(params: &CMaybeParams, sizes: &[usize]) -> Result<BranchingState> {
    let used: usize = sizes.iter().sum();
    if used > params.n {
        return Err(QdcError::InvalidPartition(format!(
            "parties of {used} qubits in an environment of {}",
            params.n
        )));
    }
    let grams = sizes
        .iter()
        .chain(std::iter::once(&(params.n - used)))
        .map(|&k| two_branch_gram(overlap(params.s, k)))
        .collect();
    BranchingState::new(vec![params.p, params.q()], grams)
}

/// Consensus measures for `F`, `F′` under `meas`, through the reduction.
pub fn consensus(params: &CMaybeParams, pair: FragmentPair, meas: &Measurement) -> Result<ConsensusReport> {
    pair.validate(params)?;
    let bs = gram_reduce(params, &[pair.m, pair.m_prime])?;
    crate::infotheory::consensus_report(&bs, &SubsystemSpec::new([1]), &SubsystemSpec::new([2]), meas)
}
