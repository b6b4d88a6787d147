use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{QdcError, Result};
use crate::measurement::{Conditionable, Measurement};
use crate::qstate::{EntropySource, SubsystemSpec, SYSTEM};

/// Below this the system carries no information to normalize by.
pub const MIN_SYSTEM_ENTROPY: f64 = 1e-12;

/// Values this close to zero are reported as exactly zero.
pub const ZERO_SNAP: f64 = 1e-10;

pub fn snap_zero(x: f64) -> f64 {
    if x.abs() <= ZERO_SNAP {
        0.0
    } else {
        x
    }
}

fn disjoint(parts: &[&SubsystemSpec]) -> Result<()> {
    for (i, a) in parts.iter().enumerate() {
        for b in &parts[i + 1..] {
            if !a.is_disjoint(b) {
                return Err(QdcError::InvalidPartition(format!("{:?} overlaps {:?}", a.kept, b.kept)));
            }
        }
    }
    Ok(())
}

fn excludes_system(parts: &[&SubsystemSpec]) -> Result<()> {
    if parts.iter().any(|p| p.contains(SYSTEM)) {
        return Err(QdcError::InvalidPartition("fragment contains the system".into()));
    }
    Ok(())
}

pub fn system_entropy<T: EntropySource + ?Sized>(x: &T) -> Result<f64> {
    x.entropy(&SubsystemSpec::system())
}

/// `I(A:B) = H_A + H_B − H_AB`.
pub fn mutual_information<T: EntropySource + ?Sized>(
    joint: &T,
    a: &SubsystemSpec,
    b: &SubsystemSpec,
) -> Result<f64> {
    disjoint(&[a, b])?;
    Ok(joint.entropy(a)? + joint.entropy(b)? - joint.entropy(&a.union(b))?)
}

/// `I(A:B|C) = H_AC + H_BC − H_C − H_ABC`.
pub fn quantum_cmi<T: EntropySource + ?Sized>(
    joint: &T,
    a: &SubsystemSpec,
    b: &SubsystemSpec,
    c: &SubsystemSpec,
) -> Result<f64> {
    disjoint(&[a, b, c])?;
    let ac = a.union(c);
    let bc = b.union(c);
    Ok(joint.entropy(&ac)? + joint.entropy(&bc)? - joint.entropy(c)? - joint.entropy(&ac.union(b))?)
}

/// Holevo quantity `χ(F:S_Λ) = H_F − Σ p_i H(ρ_F^(i))`.
pub fn holevo<T: Conditionable + ?Sized>(state: &T, frag: &SubsystemSpec, meas: &Measurement) -> Result<f64> {
    excludes_system(&[frag])?;
    let h_f = state.entropy(frag)?;
    let mut cond = 0.0;
    for (p, s) in state.condition_on_system(meas)? {
        cond += p * s.entropy(frag)?;
    }
    Ok(h_f - cond)
}

/// `Σ p_i I(A:B)_{ρ^(i)}` over outcomes of `meas` on the system.
pub fn measured_cmi<T: Conditionable + ?Sized>(
    state: &T,
    a: &SubsystemSpec,
    b: &SubsystemSpec,
    meas: &Measurement,
) -> Result<f64> {
    excludes_system(&[a, b])?;
    disjoint(&[a, b])?;
    let mut total = 0.0;
    for (p, s) in state.condition_on_system(meas)? {
        total += p * mutual_information(&s, a, b)?;
    }
    Ok(total)
}

/// Refined mutual information `𝕴(A:B|S_Λ) = I(A:B) − I(A:B|S_Λ)`. Can be
/// negative for states that are not branching.
pub fn refined_mi<T: Conditionable + ?Sized>(
    state: &T,
    a: &SubsystemSpec,
    b: &SubsystemSpec,
    meas: &Measurement,
) -> Result<f64> {
    Ok(mutual_information(state, a, b)? - measured_cmi(state, a, b, meas)?)
}

/// Default tilt grid `kπ/48` for `k = 0..24`, covering every real-rotated
/// qubit basis once (`μ` and `μ + π/2` give the same basis).
pub fn default_tilt_grid() -> Vec<f64> {
    (0..24).map(|k| k as f64 * PI / 48.0).collect()
}

/// `max_μ 𝕴(A:B|S_μ)` over a grid of tilted bases; returns `(value, μ*)`.
pub fn optimal_refined_mi<T: Conditionable + ?Sized>(
    state: &T,
    a: &SubsystemSpec,
    b: &SubsystemSpec,
    grid: &[f64],
) -> Result<(f64, f64)> {
    if grid.is_empty() {
        return Err(QdcError::InvalidMeasurement("empty tilt grid".into()));
    }
    let i_ab = mutual_information(state, a, b)?;
    let mut best = (f64::NEG_INFINITY, grid[0]);
    for &mu in grid {
        let v = i_ab - measured_cmi(state, a, b, &Measurement::tilted(mu))?;
        if v > best.0 {
            best = (v, mu);
        }
    }
    Ok(best)
}

fn normalize(value: f64, h_s: f64) -> Result<f64> {
    if h_s <= MIN_SYSTEM_ENTROPY {
        return Err(QdcError::DegenerateSystem(h_s));
    }
    Ok(value / h_s)
}

/// `𝔠(F:S) = I(S:F)/H_S`, in `[0, 2]`.
pub fn consensus_c_fs(i_sf: f64, h_s: f64) -> Result<f64> {
    normalize(i_sf, h_s)
}

/// `𝔠(S_Λ:F) = χ(F:S_Λ)/H_S`, in `[0, 1]`.
pub fn consensus_c_slambda_f(chi: f64, h_s: f64) -> Result<f64> {
    normalize(chi, h_s)
}

/// `𝔠(F:F′) = I(F:F′)/H_S`.
pub fn consensus_c_ff(i_ff: f64, h_s: f64) -> Result<f64> {
    normalize(i_ff, h_s)
}

/// `ℭ(F:F′|S_Λ) = 𝕴(F:F′|S_Λ)/H_S`.
pub fn consensus_big_c<T: Conditionable + ?Sized>(
    state: &T,
    a: &SubsystemSpec,
    b: &SubsystemSpec,
    meas: &Measurement,
) -> Result<f64> {
    normalize(refined_mi(state, a, b, meas)?, system_entropy(state)?)
}

/// Information deficit `δ = 1 − I/H_S`.
pub fn information_deficit(i: f64, h_s: f64) -> Result<f64> {
    Ok(1.0 - normalize(i, h_s)?)
}

/// Every consensus measure for one `(state, F, F′, Λ)` configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsensusReport {
    pub h_s: f64,
    pub i_sf: f64,
    pub i_sf_prime: f64,
    pub i_ff: f64,
    pub holevo_f: f64,
    pub cmi_measured: f64,
    pub cmi_quantum: f64,
    pub refined: f64,
    pub c_fs: f64,
    pub c_slambda_f: f64,
    pub c_ff: f64,
    pub big_c: f64,
    pub delta: f64,
    pub delta_prime: f64,
    pub delta_tilde: f64,
}

impl ConsensusReport {
    /// Information quantities with near-zero noise snapped to zero.
    pub fn snapped(&self) -> ConsensusReport {
        let mut r = self.clone();
        for v in [
            &mut r.i_sf,
            &mut r.i_sf_prime,
            &mut r.i_ff,
            &mut r.holevo_f,
            &mut r.cmi_measured,
            &mut r.cmi_quantum,
            &mut r.refined,
            &mut r.c_fs,
            &mut r.c_slambda_f,
            &mut r.c_ff,
            &mut r.big_c,
            &mut r.delta,
            &mut r.delta_prime,
            &mut r.delta_tilde,
        ] {
            *v = snap_zero(*v);
        }
        r
    }
}

pub fn consensus_report<T: Conditionable + ?Sized>(
    state: &T,
    a: &SubsystemSpec,
    b: &SubsystemSpec,
    meas: &Measurement,
) -> Result<ConsensusReport> {
    excludes_system(&[a, b])?;
    disjoint(&[a, b])?;
    let s = SubsystemSpec::system();
    let h_s = system_entropy(state)?;
    let i_sf = mutual_information(state, &s, a)?;
    let i_sf_prime = mutual_information(state, &s, b)?;
    let i_sff = mutual_information(state, &s, &a.union(b))?;
    let i_ff = mutual_information(state, a, b)?;
    let holevo_f = holevo(state, a, meas)?;
    let cmi_measured = measured_cmi(state, a, b, meas)?;
    let cmi_quantum = quantum_cmi(state, a, b, &s)?;
    let refined = i_ff - cmi_measured;
    Ok(ConsensusReport {
        h_s,
        i_sf,
        i_sf_prime,
        i_ff,
        holevo_f,
        cmi_measured,
        cmi_quantum,
        refined,
        c_fs: consensus_c_fs(i_sf, h_s)?,
        c_slambda_f: consensus_c_slambda_f(holevo_f, h_s)?,
        c_ff: consensus_c_ff(i_ff, h_s)?,
        big_c: normalize(refined, h_s)?,
        delta: information_deficit(i_sf, h_s)?,
        delta_prime: information_deficit(i_sf_prime, h_s)?,
        delta_tilde: information_deficit(i_sff, h_s)?,
    })
}
