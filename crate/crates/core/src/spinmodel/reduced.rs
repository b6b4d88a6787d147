//! Reduced states of the evolved spin model without building the global
//! state.
//!
//! Since `H` is diagonal, tracing out qubits `B` from `e^{−iHt}|+⟩^{⊗n}` gives
//! `ρ_K(u, u′) = 2^{−|K|} e^{−it(E_K(u) − E_K(u′))} Π_{b∈B} cos(t (h_b(u) − h_b(u′)))`
//! with `h_b(u) = Σ_{a∈K} J_ab u_a`. The product depends on `(u, u′)` only via
//! `w = (u − u′)/2 ∈ {−1, 0, 1}^K`, so it is tabulated once over `3^|K|` entries.

use std::sync::Arc;

use num_complex::Complex64;

use super::model::{spin, SpinRealization};
use crate::error::{QdcError, Result};
use crate::linalg::CMatrix;
use crate::measurement::{condition_block, Conditionable, Measurement, MIN_OUTCOME_PROB};
use crate::qstate::{entropy_of_gram, system_env_labels, DensityMatrix, EntropySource, SubsystemSpec, SYSTEM};

/// Largest subsystem whose reduced density matrix is built explicitly.
pub const FRAGMENT_CAP: usize = 12;

fn check_keep(real: &SpinRealization, keep: &SubsystemSpec) -> Result<Vec<usize>> {
    let n = real.n_qubits();
    if let Some(bad) = keep.iter().find(|&a| a >= n) {
        return Err(QdcError::InvalidSubsystem(format!("qubit {bad} outside 0..{n}")));
    }
    if keep.len() > FRAGMENT_CAP {
        return Err(QdcError::FragmentTooLarge { requested: keep.len(), limit: FRAGMENT_CAP });
    }
    Ok(keep.iter().collect())
}

/// Unnormalized-free, exact `ρ_K(t)` for any `N`, with `|K| ≤ 12`.
pub fn reduced_dm_factorized(real: &SpinRealization, t: f64, keep: &SubsystemSpec) -> Result<DensityMatrix> {
    let kept = check_keep(real, keep)?;
    let k = kept.len();
    let all_labels = system_env_labels(real.n_env());
    let labels = kept.iter().map(|&a| all_labels[a]).collect();
    if k == 0 {
        return Ok(DensityMatrix::from_parts(labels, CMatrix::identity(1, 1)));
    }
    let j = real.coupling_matrix();
    let n = real.n_qubits();
    let traced: Vec<usize> = (0..n).filter(|a| !keep.contains(*a)).collect();

    // pow3[a] = 3^(bit index of kept qubit a), bit 0 being the last kept qubit
    let pow3: Vec<usize> = (0..k).map(|bit| 3usize.pow(bit as u32)).collect();
    let size3 = 3usize.pow(k as u32);
    let mut table = vec![1.0f64; size3];
    let mut phase = vec![0.0f64; size3];
    for &b in &traced {
        // phase[w] = 2t Σ_a J_ab w_a, filled one trit at a time
        phase[0] = 0.0;
        let mut filled = 1;
        for bit in 0..k {
            let a = kept[k - 1 - bit];
            let step = 2.0 * t * j[a][b];
            for w in 0..filled {
                phase[w + filled] = phase[w] + step;
                phase[w + 2 * filled] = phase[w] - step;
            }
            filled *= 3;
        }
        for (f, p) in table.iter_mut().zip(&phase) {
            *f *= p.cos();
        }
    }
    let dim = 1usize << k;
    // trit index of a bit mask: Σ 3^bit
    let tri: Vec<usize> = (0..dim)
        .map(|mask| (0..k).filter(|&bit| mask >> bit & 1 == 1).map(|bit| pow3[bit]).sum())
        .collect();
    let local: Vec<Complex64> = (0..dim)
        .map(|u| {
            let mut e = 0.0;
            for x in 0..k {
                for y in x + 1..k {
                    e += j[kept[x]][kept[y]] * spin(u, k, x) * spin(u, k, y);
                }
            }
            Complex64::from_polar(1.0, -t * e)
        })
        .collect();
    let norm = 1.0 / dim as f64;
    let m = CMatrix::from_fn(dim, dim, |u, v| {
        let x = u ^ v;
        // w_a = +1 where u has bit 0 (z = +1) and v has bit 1; trit 1 encodes +1
        let idx = tri[x & !u] + 2 * tri[x & u];
        local[u] * local[v].conj() * (norm * table[idx])
    });
    Ok(DensityMatrix::from_parts(labels, m))
}

/// The evolved model at one time, answering entropy queries through
/// factorized reduced states. Uses the complement of a subsystem when that is
/// smaller, since the global state is pure.
#[derive(Debug, Clone)]
pub struct SpinSnapshot {
    real: Arc<SpinRealization>,
    t: f64,
}

impl SpinSnapshot {
    pub fn new(real: Arc<SpinRealization>, t: f64) -> Self {
        SpinSnapshot { real, t }
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn realization(&self) -> &SpinRealization {
        &self.real
    }

    pub fn reduced_dm(&self, keep: &SubsystemSpec) -> Result<DensityMatrix> {
        reduced_dm_factorized(&self.real, self.t, keep)
    }

    fn all(&self) -> SubsystemSpec {
        (0..self.real.n_qubits()).collect()
    }
}

fn dm_entropy(dm: &DensityMatrix) -> Result<f64> {
    entropy_of_gram(dm.matrix(), 1.0)
}

impl EntropySource for SpinSnapshot {
    fn entropy(&self, part: &SubsystemSpec) -> Result<f64> {
        let n = self.real.n_qubits();
        if let Some(bad) = part.iter().find(|&a| a >= n) {
            return Err(QdcError::InvalidSubsystem(format!("qubit {bad} outside 0..{n}")));
        }
        if part.is_empty() || part.len() == n {
            return Ok(0.0);
        }
        if part.len() <= n - part.len() {
            dm_entropy(&self.reduced_dm(part)?)
        } else {
            let rest: SubsystemSpec = self.all().iter().filter(|&a| !part.contains(a)).collect();
            dm_entropy(&self.reduced_dm(&rest)?)
        }
    }
}

/// The environment after one outcome of a system measurement. Entropies of
/// environment subsystems come from `tr_S[(E ⊗ I) ρ_{SX}] / p`.
#[derive(Debug, Clone)]
pub struct ConditionedSnapshot {
    snap: SpinSnapshot,
    effect: CMatrix,
}

impl EntropySource for ConditionedSnapshot {
    fn entropy(&self, part: &SubsystemSpec) -> Result<f64> {
        if part.contains(SYSTEM) {
            return Err(QdcError::InvalidPartition("conditional state excludes the system".into()));
        }
        if part.is_empty() {
            return Ok(0.0);
        }
        let rho = self.snap.reduced_dm(&part.with_system())?;
        let (p, block) = condition_block(rho.matrix(), &self.effect);
        entropy_of_gram(&block, p)
    }
}

impl Conditionable for SpinSnapshot {
    type Conditioned = ConditionedSnapshot;

    fn condition_on_system(&self, meas: &Measurement) -> Result<Vec<(f64, ConditionedSnapshot)>> {
        if meas.dim() != 2 {
            return Err(QdcError::InvalidMeasurement(format!(
                "{}-dimensional measurement on a qubit system",
                meas.dim()
            )));
        }
        let rho_s = self.reduced_dm(&SubsystemSpec::system())?;
        let mut out = Vec::new();
        let mut total = 0.0;
        for e in meas.effects() {
            let p = (e.transpose().component_mul(rho_s.matrix())).sum().re;
            total += p;
            if p > MIN_OUTCOME_PROB {
                out.push((p, ConditionedSnapshot { snap: self.clone(), effect: e }));
            }
        }
        if (total - 1.0).abs() > 1e-10 {
            return Err(QdcError::InvalidMeasurement(format!("outcome probabilities sum to {total}")));
        }
        Ok(out)
    }
}
