use std::f64::consts::PI;
use std::sync::{Arc, OnceLock};

use num_complex::Complex64;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{QdcError, Result};
use crate::par::{self, ExecMode};
use crate::qstate::{PureState, MAX_QUBITS};
use crate::rng::rng_from_seed;

/// Gray-code chunks cover this many low bits.
const CHUNK_BITS: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpinModelParams {
    pub n: usize,
    pub delta_d: f64,
    pub delta_g: f64,
    pub seed: u64,
}

impl Default for SpinModelParams {
    fn default() -> Self {
        SpinModelParams { n: 20, delta_d: 1.0, delta_g: 0.01, seed: 0 }
    }
}

impl SpinModelParams {
    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(QdcError::DomainError(format!("N = {} (need at least 2)", self.n)));
        }
        if !(self.delta_d > 0.0) || !self.delta_d.is_finite() {
            return Err(QdcError::DomainError(format!("Δ_d = {}", self.delta_d)));
        }
        if !(self.delta_g >= 0.0) || !self.delta_g.is_finite() {
            return Err(QdcError::DomainError(format!("Δ_g = {}", self.delta_g)));
        }
        Ok(())
    }

    pub fn with_seed(self, seed: u64) -> Self {
        SpinModelParams { seed, ..self }
    }
}

/// One draw of the couplings of `H = σ_z^S Σ_i d_i σ_z^i + Σ_{j<k} g_jk σ_z^j σ_z^k`.
///
/// Qubit positions are `0` for the system and `1..=N` for the environment.
#[derive(Debug, Clone)]
pub struct SpinRealization {
    params: SpinModelParams,
    d: Vec<f64>,
    /// Full symmetric coupling matrix over positions `0..=N`, zero diagonal.
    j: Vec<Vec<f64>>,
    energies: Arc<OnceLock<Vec<f64>>>,
}

impl PartialEq for SpinRealization {
    fn eq(&self, other: &Self) -> bool {
        self.params == other.params && self.d == other.d && self.j == other.j
    }
}

/// Draws `d_i ~ N(0, Δ_d²)` then `g_jk ~ N(0, Δ_g²)` for `j < k` in row-major
/// order, from a ChaCha8 stream seeded with `params.seed`.
pub fn sample_couplings(params: &SpinModelParams) -> Result<SpinRealization> {
    params.validate()?;
    let n = params.n;
    let mut rng = rng_from_seed(params.seed);
    let nd = Normal::new(0.0, params.delta_d).map_err(|e| QdcError::DomainError(e.to_string()))?;
    let d: Vec<f64> = (0..n).map(|_| nd.sample(&mut rng)).collect();
    let mut g = vec![vec![0.0; n]; n];
    if params.delta_g > 0.0 {
        let ng = Normal::new(0.0, params.delta_g).map_err(|e| QdcError::DomainError(e.to_string()))?;
        for a in 0..n {
            for b in a + 1..n {
                let x = ng.sample(&mut rng);
                g[a][b] = x;
                g[b][a] = x;
            }
        }
    }
    SpinRealization::from_couplings(*params, d, g)
}

impl SpinRealization {
    /// `d` has length `N`; `g` is `N×N` over environment qubits, symmetric with
    /// zero diagonal.
    pub fn from_couplings(params: SpinModelParams, d: Vec<f64>, g: Vec<Vec<f64>>) -> Result<Self> {
        let n = params.n;
        if d.len() != n || g.len() != n || g.iter().any(|r| r.len() != n) {
            return Err(QdcError::DomainError(format!("coupling shapes do not match N = {n}")));
        }
        for a in 0..n {
            if g[a][a] != 0.0 {
                return Err(QdcError::DomainError("intra-environment coupling diagonal must be zero".into()));
            }
            for b in 0..a {
                if g[a][b] != g[b][a] {
                    return Err(QdcError::DomainError("intra-environment couplings must be symmetric".into()));
                }
            }
        }
        let mut j = vec![vec![0.0; n + 1]; n + 1];
        for i in 0..n {
            j[0][i + 1] = d[i];
            j[i + 1][0] = d[i];
            for k in 0..n {
                j[i + 1][k + 1] = g[i][k];
            }
        }
        Ok(SpinRealization { params, d, j, energies: Arc::new(OnceLock::new()) })
    }

    pub fn params(&self) -> &SpinModelParams {
        &self.params
    }

    pub fn n_env(&self) -> usize {
        self.params.n
    }

    pub fn n_qubits(&self) -> usize {
        self.params.n + 1
    }

    pub fn d(&self) -> &[f64] {
        &self.d
    }

    /// `g_jk` for environment qubits `j, k` in `1..=N`.
    pub fn g(&self, j: usize, k: usize) -> f64 {
        self.j[j][k]
    }

    /// Coupling between register positions `a` and `b` (system is `0`).
    pub fn coupling(&self, a: usize, b: usize) -> f64 {
        self.j[a][b]
    }

    pub(crate) fn coupling_matrix(&self) -> &[Vec<f64>] {
        &self.j
    }

    /// `E(z) = Σ_{a<b} J_ab z_a z_b` with `z = +1` for bit 0; register
    /// position `a` is bit `n − 1 − a` of `x`.
    pub fn energy(&self, x: usize) -> f64 {
        let n = self.n_qubits();
        let z: Vec<f64> = (0..n).map(|a| spin(x, n, a)).collect();
        let mut e = 0.0;
        for a in 0..n {
            for b in a + 1..n {
                e += self.j[a][b] * z[a] * z[b];
            }
        }
        e
    }

    /// Energies of every basis configuration, computed once and cached.
    pub fn energies(&self, mode: ExecMode) -> Result<&[f64]> {
        let n = self.n_qubits();
        if n > MAX_QUBITS {
            return Err(QdcError::RegisterTooLarge { requested: n, limit: MAX_QUBITS });
        }
        Ok(self.energies.get_or_init(|| self.compute_energies(mode)))
    }

    /// Walks each chunk of low bits in Gray-code order, updating the energy
    /// from per-qubit local fields at `O(n)` per configuration.
    fn compute_energies(&self, mode: ExecMode) -> Vec<f64> {
        let n = self.n_qubits();
        let low = n.min(CHUNK_BITS);
        let chunk = 1usize << low;
        let mut out = vec![0.0; 1 << n];
        par::for_each_chunk_mut(mode, &mut out, chunk, |ci, slot| {
            let base = ci * chunk;
            let mut z: Vec<f64> = (0..n).map(|a| spin(base, n, a)).collect();
            let mut field: Vec<f64> = (0..n).map(|a| (0..n).map(|b| self.j[a][b] * z[b]).sum()).collect();
            let mut e = self.energy(base);
            slot[0] = e;
            for k in 1..chunk {
                let bit = k.trailing_zeros() as usize;
                let a = n - 1 - bit;
                e -= 2.0 * z[a] * field[a];
                let dz = -2.0 * z[a];
                z[a] = -z[a];
                for (b, f) in field.iter_mut().enumerate() {
                    *f += self.j[b][a] * dz;
                }
                let gray = k ^ (k >> 1);
                slot[gray] = e;
            }
        });
        out
    }

    /// `e^{−iHt}|+⟩^{⊗(N+1)}`.
    pub fn evolve(&self, t: f64, mode: ExecMode) -> Result<PureState> {
        let e = self.energies(mode)?;
        let n = self.n_qubits();
        let amp = (0.5f64).powf(n as f64 / 2.0);
        let amps = par::map_range(mode, e.len(), |x| Complex64::from_polar(amp, -t * e[x]));
        PureState::system_env(n - 1, amps)
    }

    /// First time `π / (4 max|d_i|)`: with uniform `d` this is when every
    /// single-qubit record is orthogonal.
    pub fn uniform_decoherence_time(d: f64) -> f64 {
        PI / (4.0 * d.abs())
    }
}

/// `z_a ∈ {±1}` of register position `a` in configuration `x`.
pub(crate) fn spin(x: usize, n: usize, a: usize) -> f64 {
    if x >> (n - 1 - a) & 1 == 0 {
        1.0
    } else {
        -1.0
    }
}
