//! Measurements on the system and the conditional fragment states they
//! induce.

use nalgebra::DVector;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{QdcError, Result};
use crate::linalg::{self, real, CMatrix};
use crate::qstate::{DensityMatrix, EntropySource, PartialTrace, PureState, SubsystemSpec, SYSTEM};

const COMPLETENESS_TOL: f64 = 1e-10;
const PSD_TOL: f64 = 1e-10;

/// Outcomes with smaller probability are dropped from conditional ensembles.
pub const MIN_OUTCOME_PROB: f64 = 1e-14;

/// Orthonormal qubit basis `|+⟩ = cos μ|0⟩ + sin μ|1⟩`, `|−⟩ = sin μ|0⟩ − cos μ|1⟩`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectiveBasis {
    pub mu: f64,
    pub vectors: [[Complex64; 2]; 2],
}

impl ProjectiveBasis {
    pub fn projectors(&self) -> [CMatrix; 2] {
        self.vectors.map(|v| {
            let x = DVector::from_column_slice(&v);
            &x * x.adjoint()
        })
    }
}

pub fn tilted_basis(mu: f64) -> ProjectiveBasis {
    let (s, c) = mu.sin_cos();
    ProjectiveBasis { mu, vectors: [[real(c), real(s)], [real(s), real(-c)]] }
}

pub fn pointer_basis() -> ProjectiveBasis {
    tilted_basis(0.0)
}

/// Effects `E_i ⪰ 0` with `Σ E_i = I` on a `d`-dimensional system.
#[derive(Debug, Clone, PartialEq)]
pub struct Povm {
    effects: Vec<CMatrix>,
}

impl Povm {
    pub fn new(effects: Vec<CMatrix>) -> Result<Self> {
        let Some(first) = effects.first() else {
            return Err(QdcError::InvalidMeasurement("no effects".into()));
        };
        let d = first.nrows();
        let mut sum = CMatrix::zeros(d, d);
        for e in &effects {
            if e.nrows() != d || e.ncols() != d {
                return Err(QdcError::InvalidMeasurement("effects differ in dimension".into()));
            }
            if linalg::hermiticity_defect(e) > PSD_TOL {
                return Err(QdcError::InvalidMeasurement("effect is not Hermitian".into()));
            }
            let min = linalg::hermitian_eigenvalues(e).last().copied().unwrap_or(0.0);
            if min < -PSD_TOL {
                return Err(QdcError::InvalidMeasurement(format!("effect eigenvalue {min:e}")));
            }
            sum += e;
        }
        let residual = linalg::max_abs_diff(&sum, &CMatrix::identity(d, d));
        if residual > COMPLETENESS_TOL {
            return Err(QdcError::InvalidMeasurement(format!("completeness residual {residual:e}")));
        }
        Ok(Povm { effects })
    }

    pub fn effects(&self) -> &[CMatrix] {
        &self.effects
    }

    pub fn dim(&self) -> usize {
        self.effects[0].nrows()
    }

    pub fn completeness_residual(&self) -> f64 {
        let d = self.dim();
        let sum = self.effects.iter().fold(CMatrix::zeros(d, d), |acc, e| acc + e);
        linalg::max_abs_diff(&sum, &CMatrix::identity(d, d))
    }
}

/// An observable `Λ` of the system: a projective basis or a general POVM.
#[derive(Debug, Clone, PartialEq)]
pub enum Measurement {
    Projective(ProjectiveBasis),
    Povm(Povm),
}

impl Measurement {
    pub fn tilted(mu: f64) -> Self {
        Measurement::Projective(tilted_basis(mu))
    }

    pub fn pointer() -> Self {
        Self::tilted(0.0)
    }

    pub fn dim(&self) -> usize {
        match self {
            Measurement::Projective(_) => 2,
            Measurement::Povm(p) => p.dim(),
        }
    }

    /// Effects in the pointer basis of the system.
    pub fn effects(&self) -> Vec<CMatrix> {
        match self {
            Measurement::Projective(b) => b.projectors().to_vec(),
            Measurement::Povm(p) => p.effects.clone(),
        }
    }

    /// `√E_i` for each outcome.
    pub fn kraus(&self) -> Result<Vec<CMatrix>> {
        match self {
            Measurement::Projective(b) => Ok(b.projectors().to_vec()),
            Measurement::Povm(p) => p.effects.iter().map(linalg::psd_sqrt).collect(),
        }
    }
}

/// Random POVM on a qubit from a Haar-random Stinespring dilation.
pub fn random_povm(seed: u64, n_outcomes: usize) -> Result<Povm> {
    random_povm_dim(seed, 2, n_outcomes)
}

/// Random `n_outcomes`-element POVM on a `dim`-dimensional system.
///
/// A Haar unitary `U` on system ⊗ ancilla (ancilla dimension `n_outcomes`,
/// prepared in `|0⟩`) is followed by a projective ancilla readout. With
/// `K_i = (I ⊗ ⟨i|) U (I ⊗ |0⟩)` the effects are `E_i = K_i† K_i`.
pub fn random_povm_dim(seed: u64, dim: usize, n_outcomes: usize) -> Result<Povm> {
    if !(2..=6).contains(&n_outcomes) {
        return Err(QdcError::InvalidMeasurement(format!("{n_outcomes} outcomes (allowed 2..=6)")));
    }
    if dim < 1 {
        return Err(QdcError::InvalidMeasurement("zero-dimensional system".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let u = linalg::haar_unitary(&mut rng, dim * n_outcomes);
    // Row index = s' * n_outcomes + i, column index = s * n_outcomes + a, ancilla a = 0.
    let effects = (0..n_outcomes)
        .map(|i| {
            let k = CMatrix::from_fn(dim, dim, |sp, s| u[(sp * n_outcomes + i, s * n_outcomes)]);
            let e = k.adjoint() * k;
            // exact Hermitian symmetrization
            (&e + e.adjoint()) * real(0.5)
        })
        .collect();
    // Completeness holds to rounding of the unitary; validate loosely so
    // generator noise cannot be mistaken for a defect.
    let povm = Povm { effects };
    if povm.completeness_residual() > COMPLETENESS_TOL {
        return Err(QdcError::InvalidMeasurement("dilation lost completeness".into()));
    }
    Ok(povm)
}

/// States that can be conditioned on the outcome of a measurement of the
/// system.
pub trait Conditionable: EntropySource {
    type Conditioned: EntropySource;

    /// `(p_i, state after outcome i)` for every outcome with nonzero
    /// probability. Conditioned states answer entropy queries on subsets that
    /// exclude the system.
    fn condition_on_system(&self, meas: &Measurement) -> Result<Vec<(f64, Self::Conditioned)>>;
}

fn check_qubit(meas: &Measurement) -> Result<()> {
    if meas.dim() != 2 {
        return Err(QdcError::InvalidMeasurement(format!(
            "{}-dimensional measurement on a qubit system",
            meas.dim()
        )));
    }
    Ok(())
}

fn check_probabilities(probs: &[f64]) -> Result<()> {
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > COMPLETENESS_TOL {
        return Err(QdcError::InvalidMeasurement(format!("outcome probabilities sum to {total}")));
    }
    Ok(())
}

impl Conditionable for PureState {
    type Conditioned = PureState;

    /// Applies `√E_i` to the system qubit; the post-measurement global state
    /// stays pure, which keeps fragment entropies on the cheaper side of the
    /// cut.
    fn condition_on_system(&self, meas: &Measurement) -> Result<Vec<(f64, PureState)>> {
        check_qubit(meas)?;
        let mut all = Vec::new();
        for k in meas.kraus()? {
            let post = self.apply_system_operator(&k);
            let p = post.norm_sqr();
            all.push((p, post));
        }
        check_probabilities(&all.iter().map(|(p, _)| *p).collect::<Vec<_>>())?;
        Ok(all
            .into_iter()
            .filter(|(p, _)| *p > MIN_OUTCOME_PROB)
            .map(|(p, s)| (p, s.scaled(1.0 / p.sqrt())))
            .collect())
    }
}

impl Conditionable for DensityMatrix {
    type Conditioned = DensityMatrix;

    /// Requires the system at position 0. Returns the conditional states of
    /// everything else, `tr_S[(√E ⊗ I) ρ (√E ⊗ I)] / p`.
    fn condition_on_system(&self, meas: &Measurement) -> Result<Vec<(f64, DensityMatrix)>> {
        check_qubit(meas)?;
        if self.labels().first().map(|l| l.index) != Some(SYSTEM) {
            return Err(QdcError::InvalidSubsystem("system qubit is not at position 0".into()));
        }
        let labels = self.labels()[1..].to_vec();
        let all: Vec<(f64, CMatrix)> = meas.effects().iter().map(|e| condition_block(self.matrix(), e)).collect();
        check_probabilities(&all.iter().map(|(p, _)| *p).collect::<Vec<_>>())?;
        Ok(all
            .into_iter()
            .filter(|(p, _)| *p > MIN_OUTCOME_PROB)
            .map(|(p, out)| (p, DensityMatrix::from_parts(labels.clone(), out / real(p))))
            .collect())
    }
}

/// `tr_S[(E ⊗ I) ρ]` for a qubit effect `E` on the most significant qubit of
/// `m`, with its trace.
pub(crate) fn condition_block(m: &CMatrix, e: &CMatrix) -> (f64, CMatrix) {
    let half = m.nrows() / 2;
    let mut out = CMatrix::zeros(half, half);
    for s in 0..2 {
        for s2 in 0..2 {
            let w = e[(s2, s)];
            if w.norm() == 0.0 {
                continue;
            }
            out += m.view((s * half, s2 * half), (half, half)) * w;
        }
    }
    (linalg::trace(&out).re, out)
}

/// `(p_i, ρ_F^(i))` for a measurement of the system of a pure global state.
pub fn conditional_states(
    state: &PureState,
    frag: &SubsystemSpec,
    meas: &Measurement,
) -> Result<Vec<(f64, DensityMatrix)>> {
    if frag.contains(SYSTEM) {
        return Err(QdcError::InvalidPartition("fragment contains the system".into()));
    }
    state
        .condition_on_system(meas)?
        .into_iter()
        .map(|(p, s)| Ok((p, s.partial_trace(frag)?)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::max_abs_diff;
    use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, FRAC_PI_4, PI};

    fn ghz(n_env: usize) -> PureState {
        let mut a = vec![real(0.0); 1 << (n_env + 1)];
        a[0] = real(FRAC_1_SQRT_2);
        *a.last_mut().unwrap() = real(FRAC_1_SQRT_2);
        PureState::system_env(n_env, a).unwrap()
    }

    #[test]
    fn tilted_basis_special_angles() {
        let b = tilted_basis(0.0);
        assert_eq!(b.vectors, [[real(1.0), real(0.0)], [real(0.0), real(-1.0)]]);
        let h = tilted_basis(FRAC_PI_4);
        for (v, sign) in h.vectors.iter().zip([1.0, -1.0]) {
            assert!((v[0].re - FRAC_1_SQRT_2).abs() < 1e-15);
            assert!((v[1].re - sign * FRAC_1_SQRT_2).abs() < 1e-15);
        }
        // Bloch vector of |+⟩ at mu = π/12 sits π/6 away from +z.
        let v = tilted_basis(PI / 12.0).vectors[0];
        let z = v[0].norm_sqr() - v[1].norm_sqr();
        assert!((z.acos() - PI / 6.0).abs() < 1e-12);
    }

    #[test]
    fn tilted_basis_orthonormal_and_quarter_turn_symmetric() {
        for k in 0..24 {
            let mu = k as f64 * PI / 12.0 - 1.0;
            let b = tilted_basis(mu);
            let ov: Complex64 = b.vectors[0].iter().zip(&b.vectors[1]).map(|(x, y)| x.conj() * y).sum();
            assert!(ov.norm() < 1e-12);
            let [p0, p1] = b.projectors();
            let [q0, q1] = tilted_basis(mu + FRAC_PI_2).projectors();
            assert!(max_abs_diff(&p0, &q1) < 1e-12 && max_abs_diff(&p1, &q0) < 1e-12);
        }
    }

    #[test]
    fn random_povm_is_complete_and_seeded() {
        for n in 2..=6 {
            let p = random_povm(42, n).unwrap();
            assert_eq!(p.effects().len(), n);
            assert!(p.completeness_residual() <= 1e-12);
            assert!(Povm::new(p.effects().to_vec()).is_ok());
        }
        assert_eq!(random_povm(7, 3).unwrap(), random_povm(7, 3).unwrap());
        assert_ne!(random_povm(7, 3).unwrap(), random_povm(8, 3).unwrap());
        assert!(random_povm(1, 7).is_err());
        assert!(random_povm(1, 1).is_err());
    }

    #[test]
    fn povm_validation() {
        let half = CMatrix::identity(2, 2) * real(0.5);
        assert!(Povm::new(vec![half.clone(), half.clone()]).is_ok());
        assert!(Povm::new(vec![half.clone()]).is_err());
        let neg = CMatrix::from_diagonal(&DVector::from_vec(vec![real(1.2), real(1.0)]));
        let neg2 = CMatrix::from_diagonal(&DVector::from_vec(vec![real(-0.2), real(0.0)]));
        assert!(Povm::new(vec![neg, neg2]).is_err());
    }

    #[test]
    fn pointer_conditioning_selects_branches() {
        let s = ghz(2);
        let frag = SubsystemSpec::new([1]);
        let cs = conditional_states(&s, &frag, &Measurement::pointer()).unwrap();
        assert_eq!(cs.len(), 2);
        for (p, rho) in &cs {
            assert!((p - 0.5).abs() < 1e-15);
            assert!(crate::qstate::von_neumann_entropy(rho).unwrap() < 1e-12);
        }
    }

    #[test]
    fn no_signalling_for_random_povms() {
        let s = ghz(3);
        let frag = SubsystemSpec::new([1, 2]);
        let rho_f = s.partial_trace(&frag).unwrap();
        for seed in 0..5 {
            let m = Measurement::Povm(random_povm(seed, 2 + (seed as usize) % 5).unwrap());
            let cs = conditional_states(&s, &frag, &m).unwrap();
            let avg = cs.iter().fold(CMatrix::zeros(4, 4), |acc, (p, r)| acc + r.matrix() * real(*p));
            assert!(max_abs_diff(&avg, rho_f.matrix()) < 1e-9);
            let total: f64 = cs.iter().map(|(p, _)| p).sum();
            assert!((total - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn density_and_pure_conditioning_agree() {
        let s = ghz(2);
        let dm = DensityMatrix::from_pure(&s);
        let m = Measurement::Povm(random_povm(5, 3).unwrap());
        let a = s.condition_on_system(&m).unwrap();
        let b = dm.condition_on_system(&m).unwrap();
        assert_eq!(a.len(), b.len());
        let frag = SubsystemSpec::new([1, 2]);
        for ((pa, sa), (pb, sb)) in a.iter().zip(&b) {
            assert!((pa - pb).abs() < 1e-12);
            assert!((sa.entropy(&frag).unwrap() - sb.entropy(&frag).unwrap()).abs() < 1e-10);
        }
    }

    #[test]
    fn fragment_must_exclude_system() {
        let err = conditional_states(&ghz(1), &SubsystemSpec::new([0, 1]), &Measurement::pointer());
        assert!(matches!(err, Err(QdcError::InvalidPartition(_))));
    }
}
