//! Dense pure states and density matrices over labeled qubits.
//!
//! Register convention: the qubit at position `j` of an `n`-qubit register is
//! bit `n - 1 - j` of the amplitude index, so the system (position 0) is the
//! most significant bit and `|s⟩ ⊗ |e_1⟩ ⊗ … ⊗ |e_N⟩` flattens in Kronecker
//! order.

use std::collections::BTreeSet;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{QdcError, Result};
use crate::linalg::{self, real, CMatrix, NEG_EIG_TOL};

/// Largest register the dense engine will allocate.
pub const MAX_QUBITS: usize = 24;

/// Label index reserved for the system qubit.
pub const SYSTEM: usize = 0;

const NORM_TOL: f64 = 1e-12;
const HERMITIAN_TOL: f64 = 1e-10;
const TRACE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Role {
    System,
    Environment,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct QubitLabel {
    pub index: usize,
    pub role: Role,
}

impl QubitLabel {
    pub fn system() -> Self {
        QubitLabel { index: SYSTEM, role: Role::System }
    }

    pub fn env(index: usize) -> Self {
        QubitLabel { index, role: Role::Environment }
    }
}

/// `[S, E_1, …, E_n]` with indices `0..=n`.
pub fn system_env_labels(n_env: usize) -> Vec<QubitLabel> {
    std::iter::once(QubitLabel::system())
        .chain((1..=n_env).map(QubitLabel::env))
        .collect()
}

/// A set of label indices to keep.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct SubsystemSpec {
    pub kept: BTreeSet<usize>,
}

impl SubsystemSpec {
    pub fn new<I: IntoIterator<Item = usize>>(kept: I) -> Self {
        SubsystemSpec { kept: kept.into_iter().collect() }
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn system() -> Self {
        Self::new([SYSTEM])
    }

    /// Environment qubits `first..first + len`.
    pub fn block(first: usize, len: usize) -> Self {
        Self::new(first..first + len)
    }

    pub fn len(&self) -> usize {
        self.kept.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kept.is_empty()
    }

    pub fn contains(&self, index: usize) -> bool {
        self.kept.contains(&index)
    }

    pub fn union(&self, other: &SubsystemSpec) -> SubsystemSpec {
        SubsystemSpec { kept: self.kept.union(&other.kept).copied().collect() }
    }

    pub fn is_disjoint(&self, other: &SubsystemSpec) -> bool {
        self.kept.is_disjoint(&other.kept)
    }

    pub fn with_system(&self) -> SubsystemSpec {
        self.union(&SubsystemSpec::system())
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.kept.iter().copied()
    }
}

impl FromIterator<usize> for SubsystemSpec {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        SubsystemSpec::new(iter)
    }
}

fn validate_labels(labels: &[QubitLabel]) -> Result<()> {
    if labels.len() > MAX_QUBITS {
        return Err(QdcError::RegisterTooLarge { requested: labels.len(), limit: MAX_QUBITS });
    }
    let mut seen = BTreeSet::new();
    for l in labels {
        if !seen.insert(l.index) {
            return Err(QdcError::InvalidSubsystem(format!("duplicate label index {}", l.index)));
        }
    }
    Ok(())
}

/// Positions of `keep` in `labels`, in register order.
fn kept_positions(labels: &[QubitLabel], keep: &SubsystemSpec) -> Result<Vec<usize>> {
    for idx in keep.iter() {
        if !labels.iter().any(|l| l.index == idx) {
            return Err(QdcError::InvalidSubsystem(format!("label {idx} not in register")));
        }
    }
    Ok(labels
        .iter()
        .enumerate()
        .filter(|(_, l)| keep.contains(l.index))
        .map(|(p, _)| p)
        .collect())
}

/// For each value of the selected bits (big-endian in `positions` order),
/// the register index with those bits set and all others clear.
fn deposit_table(n: usize, positions: &[usize]) -> Vec<usize> {
    let k = positions.len();
    (0..1usize << k)
        .map(|v| {
            positions.iter().enumerate().fold(0usize, |acc, (r, &p)| {
                if (v >> (k - 1 - r)) & 1 == 1 {
                    acc | (1 << (n - 1 - p))
                } else {
                    acc
                }
            })
        })
        .collect()
}

fn complement_positions(n: usize, kept: &[usize]) -> Vec<usize> {
    (0..n).filter(|p| !kept.contains(p)).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    labels: Vec<QubitLabel>,
    amplitudes: Vec<Complex64>,
}

impl PureState {
    /// Validated constructor: unique labels, exactly one system qubit at
    /// position 0, `2^n` amplitudes of unit norm.
    pub fn new(labels: Vec<QubitLabel>, amplitudes: Vec<Complex64>) -> Result<Self> {
        let s = Self::unnormalized(labels, amplitudes)?;
        let norm = s.norm_sqr().sqrt();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(QdcError::InvalidState(format!("norm {norm} differs from 1")));
        }
        Ok(s)
    }

    pub(crate) fn unnormalized(labels: Vec<QubitLabel>, amplitudes: Vec<Complex64>) -> Result<Self> {
        validate_labels(&labels)?;
        let systems = labels.iter().filter(|l| l.role == Role::System).count();
        if systems != 1 || labels[0].role != Role::System {
            return Err(QdcError::InvalidState(
                "register needs exactly one system qubit, at position 0".into(),
            ));
        }
        if amplitudes.len() != 1usize << labels.len() {
            return Err(QdcError::InvalidState(format!(
                "{} amplitudes for {} qubits",
                amplitudes.len(),
                labels.len()
            )));
        }
        Ok(PureState { labels, amplitudes })
    }

    /// System plus `n_env` environment qubits labeled `0..=n_env`.
    pub fn system_env(n_env: usize, amplitudes: Vec<Complex64>) -> Result<Self> {
        if n_env + 1 > MAX_QUBITS {
            return Err(QdcError::RegisterTooLarge { requested: n_env + 1, limit: MAX_QUBITS });
        }
        Self::new(system_env_labels(n_env), amplitudes)
    }

    /// Tensor product of single-qubit states, system first.
    pub fn product(qubits: &[[Complex64; 2]]) -> Result<Self> {
        if qubits.is_empty() {
            return Err(QdcError::InvalidState("empty product".into()));
        }
        if qubits.len() > MAX_QUBITS {
            return Err(QdcError::RegisterTooLarge { requested: qubits.len(), limit: MAX_QUBITS });
        }
        let mut amps = vec![real(1.0)];
        for q in qubits {
            amps = amps.iter().flat_map(|a| [a * q[0], a * q[1]]).collect();
        }
        Self::system_env(qubits.len() - 1, amps)
    }

    pub fn labels(&self) -> &[QubitLabel] {
        &self.labels
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn n_qubits(&self) -> usize {
        self.labels.len()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn all_labels(&self) -> SubsystemSpec {
        self.labels.iter().map(|l| l.index).collect()
    }

    pub fn inner(&self, other: &PureState) -> Complex64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// `(K ⊗ I)|ψ⟩` for a 2x2 operator on the system qubit; not renormalized.
    pub(crate) fn apply_system_operator(&self, k: &CMatrix) -> PureState {
        let half = self.amplitudes.len() / 2;
        let (lo, hi) = self.amplitudes.split_at(half);
        let mut out = vec![Complex64::default(); self.amplitudes.len()];
        for i in 0..half {
            out[i] = k[(0, 0)] * lo[i] + k[(0, 1)] * hi[i];
            out[half + i] = k[(1, 0)] * lo[i] + k[(1, 1)] * hi[i];
        }
        PureState { labels: self.labels.clone(), amplitudes: out }
    }

    pub(crate) fn scaled(mut self, factor: f64) -> PureState {
        self.amplitudes.iter_mut().for_each(|a| *a *= factor);
        self
    }

    /// Applies a 4x4 gate to the qubits at register positions `(first, second)`,
    /// with `first` the more significant bit of the gate's basis `|ab⟩`.
    pub fn apply_two_qubit(&mut self, gate: &CMatrix, first: usize, second: usize) -> Result<()> {
        let n = self.n_qubits();
        if first >= n || second >= n || first == second {
            return Err(QdcError::InvalidSubsystem(format!("positions {first}, {second}")));
        }
        let bf = 1usize << (n - 1 - first);
        let bs = 1usize << (n - 1 - second);
        for base in 0..self.amplitudes.len() {
            if base & (bf | bs) != 0 {
                continue;
            }
            let idx = [base, base | bs, base | bf, base | bf | bs];
            let v: Vec<Complex64> = idx.iter().map(|&i| self.amplitudes[i]).collect();
            for (r, &i) in idx.iter().enumerate() {
                self.amplitudes[i] = (0..4).map(|c| gate[(r, c)] * v[c]).sum();
            }
        }
        Ok(())
    }

    /// Reshapes into `M[a][b]` with `a` the kept qubits and `b` the rest.
    fn bipartite_matrix(&self, kept: &[usize]) -> CMatrix {
        let n = self.n_qubits();
        let rest = complement_positions(n, kept);
        let ka = deposit_table(n, kept);
        let kb = deposit_table(n, &rest);
        CMatrix::from_fn(ka.len(), kb.len(), |a, b| self.amplitudes[ka[a] | kb[b]])
    }
}

/// A Hermitian, unit-trace, positive semidefinite operator on labeled qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    labels: Vec<QubitLabel>,
    matrix: CMatrix,
}

impl DensityMatrix {
    pub fn new(labels: Vec<QubitLabel>, matrix: CMatrix) -> Result<Self> {
        validate_labels(&labels)?;
        let dim = 1usize << labels.len();
        if matrix.nrows() != dim || matrix.ncols() != dim {
            return Err(QdcError::InvalidState(format!(
                "{}x{} matrix for {} qubits",
                matrix.nrows(),
                matrix.ncols(),
                labels.len()
            )));
        }
        let herm = linalg::hermiticity_defect(&matrix);
        if herm > HERMITIAN_TOL {
            return Err(QdcError::InvalidState(format!("not Hermitian (defect {herm:e})")));
        }
        let tr = linalg::trace(&matrix);
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return Err(QdcError::InvalidState(format!("trace {tr} differs from 1")));
        }
        Ok(DensityMatrix { labels, matrix })
    }

    pub(crate) fn from_parts(labels: Vec<QubitLabel>, matrix: CMatrix) -> Self {
        DensityMatrix { labels, matrix }
    }

    pub fn from_pure(state: &PureState) -> Self {
        let v = nalgebra::DVector::from_column_slice(state.amplitudes());
        DensityMatrix { labels: state.labels.clone(), matrix: &v * v.adjoint() }
    }

    pub fn labels(&self) -> &[QubitLabel] {
        &self.labels
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn n_qubits(&self) -> usize {
        self.labels.len()
    }

    pub fn all_labels(&self) -> SubsystemSpec {
        self.labels.iter().map(|l| l.index).collect()
    }

    /// `ρ_A ⊗ ρ_B` with `other`'s qubits appended after `self`'s.
    pub fn kron(&self, other: &DensityMatrix) -> Result<DensityMatrix> {
        let mut labels = self.labels.clone();
        labels.extend_from_slice(&other.labels);
        validate_labels(&labels)?;
        Ok(DensityMatrix { labels, matrix: self.matrix.kronecker(&other.matrix) })
    }
}

/// Reduction onto a subset of the register.
pub trait PartialTrace {
    fn partial_trace(&self, keep: &SubsystemSpec) -> Result<DensityMatrix>;
}

impl PartialTrace for PureState {
    fn partial_trace(&self, keep: &SubsystemSpec) -> Result<DensityMatrix> {
        let kept = kept_positions(&self.labels, keep)?;
        let m = self.bipartite_matrix(&kept);
        let labels = kept.iter().map(|&p| self.labels[p]).collect();
        Ok(DensityMatrix { labels, matrix: &m * m.adjoint() })
    }
}

impl PartialTrace for DensityMatrix {
    fn partial_trace(&self, keep: &SubsystemSpec) -> Result<DensityMatrix> {
        let n = self.n_qubits();
        let kept = kept_positions(&self.labels, keep)?;
        let labels: Vec<QubitLabel> = kept.iter().map(|&p| self.labels[p]).collect();
        if kept.len() == n {
            return Ok(DensityMatrix { labels, matrix: self.matrix.clone() });
        }
        let rest = complement_positions(n, &kept);
        let ka = deposit_table(n, &kept);
        let kb = deposit_table(n, &rest);
        let out = CMatrix::from_fn(ka.len(), ka.len(), |a, a2| {
            kb.iter().map(|&b| self.matrix[(ka[a] | b, ka[a2] | b)]).sum()
        });
        Ok(DensityMatrix { labels, matrix: out })
    }
}

pub fn partial_trace<T: PartialTrace + ?Sized>(state: &T, keep: &SubsystemSpec) -> Result<DensityMatrix> {
    state.partial_trace(keep)
}

/// Clamps a raw spectrum into `[0, 1]`, rejecting values below `-1e-9`.
pub fn clamp_spectrum(mut vals: Vec<f64>) -> Result<Vec<f64>> {
    if let Some(&min) = vals.iter().min_by(|a, b| a.total_cmp(b)) {
        if min < -NEG_EIG_TOL {
            return Err(QdcError::NotPositiveSemidefinite(min));
        }
    }
    vals.iter_mut().for_each(|v| *v = v.clamp(0.0, 1.0));
    vals.sort_by(|a, b| b.total_cmp(a));
    Ok(vals)
}

/// Eigenvalues of a density matrix, sorted descending and clamped to `[0, 1]`.
pub fn eigenvalues_hermitian(dm: &DensityMatrix) -> Result<Vec<f64>> {
    let vals = linalg::hermitian_eigenvalues(&dm.matrix);
    let sum: f64 = vals.iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(QdcError::InvalidState(format!("eigenvalues sum to {sum}")));
    }
    clamp_spectrum(vals)
}

/// `-Σ λ log₂ λ` with `0 log 0 = 0`.
pub fn entropy_of_spectrum(vals: &[f64]) -> f64 {
    let h: f64 = vals
        .iter()
        .filter(|&&v| v > 0.0)
        .map(|&v| -v * v.log2())
        .sum();
    h.max(0.0)
}

/// Von Neumann entropy in bits.
pub fn von_neumann_entropy(dm: &DensityMatrix) -> Result<f64> {
    Ok(entropy_of_spectrum(&eigenvalues_hermitian(dm)?))
}

/// `h(x) = -x log₂ x - (1-x) log₂(1-x)`.
pub fn binary_entropy(x: f64) -> Result<f64> {
    if !(-1e-12..=1.0 + 1e-12).contains(&x) || x.is_nan() {
        return Err(QdcError::DomainError(format!("binary entropy argument {x}")));
    }
    let x = x.clamp(0.0, 1.0);
    Ok(entropy_of_spectrum(&[x, 1.0 - x]))
}

/// Anything that can report the entropy of one of its subsystems.
pub trait EntropySource {
    /// Von Neumann entropy (bits) of the reduced state on `part`.
    fn entropy(&self, part: &SubsystemSpec) -> Result<f64>;
}

impl<T: EntropySource + ?Sized> EntropySource for &T {
    fn entropy(&self, part: &SubsystemSpec) -> Result<f64> {
        (**self).entropy(part)
    }
}

/// Entropy of a normalized spectrum given as unnormalized PSD matrix `m` with
/// trace `norm`.
pub(crate) fn entropy_of_gram(m: &CMatrix, norm: f64) -> Result<f64> {
    let vals: Vec<f64> = linalg::hermitian_eigenvalues(m).into_iter().map(|v| v / norm).collect();
    Ok(entropy_of_spectrum(&clamp_spectrum(vals)?))
}

impl EntropySource for PureState {
    /// Diagonalizes whichever side of the cut is smaller; both share the
    /// nonzero spectrum of a pure state. The state need not be normalized.
    fn entropy(&self, part: &SubsystemSpec) -> Result<f64> {
        let kept = kept_positions(&self.labels, part)?;
        let n = self.n_qubits();
        if kept.is_empty() || kept.len() == n {
            return Ok(0.0);
        }
        let m = self.bipartite_matrix(&kept);
        let gram = if 2 * kept.len() <= n { &m * m.adjoint() } else { m.adjoint() * &m };
        entropy_of_gram(&gram, self.norm_sqr())
    }
}

impl EntropySource for DensityMatrix {
    fn entropy(&self, part: &SubsystemSpec) -> Result<f64> {
        if part.is_empty() {
            kept_positions(&self.labels, part)?;
            return Ok(0.0);
        }
        let reduced = self.partial_trace(part)?;
        let norm = linalg::trace(&reduced.matrix).re;
        entropy_of_gram(&reduced.matrix, norm)
    }
}
