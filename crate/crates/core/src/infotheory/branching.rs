//! Branching states `Σ_n √q_n |s_n⟩ ⊗_X |X_n⟩` stored by their per-party
//! overlap (Gram) matrices instead of dense amplitudes.
//!
//! Party 0 is the system; parties `1..` are environment subsystems (for
//! example a fragment, a second fragment and the remainder). A
//! [`SubsystemSpec`] over a branching state names party indices, not qubits.
//!
//! For a union of parties `A` with complement `B`, the reduced state is
//! `ρ_A = Σ_{n,n'} √q_n √q_n' ⟨B_n'|B_n⟩ |A_n⟩⟨A_n'|`, whose nonzero spectrum is
//! that of the `D×D` matrix `G_A^{1/2} (Q^{1/2} G_Bᵀ Q^{1/2}) G_A^{1/2}`, where
//! `G_X` is the elementwise product of the Gram matrices of the parties in
//! `X`. Cost depends only on the number of branches.

use nalgebra::DVector;
use num_complex::Complex64;

use crate::error::{QdcError, Result};
use crate::linalg::{self, real, CMatrix};
use crate::measurement::{Conditionable, Measurement, MIN_OUTCOME_PROB};
use crate::qstate::{
    entropy_of_gram, system_env_labels, EntropySource, PureState, SubsystemSpec, MAX_QUBITS, SYSTEM,
};

const PROB_TOL: f64 = 1e-12;
const GRAM_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct BranchingState {
    weights: Vec<f64>,
    grams: Vec<CMatrix>,
    norm: f64,
}

/// Validates `q` and the environment Gram matrices and builds the state.
/// The system's pointer states are orthonormal.
pub fn make_branching_state(q: Vec<f64>, overlaps: Vec<CMatrix>) -> Result<BranchingState> {
    BranchingState::new(q, overlaps)
}

impl BranchingState {
    pub fn new(q: Vec<f64>, overlaps: Vec<CMatrix>) -> Result<Self> {
        let d = q.len();
        if d == 0 {
            return Err(QdcError::InvalidState("no branches".into()));
        }
        if q.iter().any(|&x| !(x >= 0.0)) {
            return Err(QdcError::InvalidState("negative branch probability".into()));
        }
        let total: f64 = q.iter().sum();
        if (total - 1.0).abs() > PROB_TOL {
            return Err(QdcError::InvalidState(format!("branch probabilities sum to {total}")));
        }
        for (k, g) in overlaps.iter().enumerate() {
            validate_gram(g, d).map_err(|e| QdcError::InvalidOverlaps(format!("party {}: {e}", k + 1)))?;
        }
        let mut grams = Vec::with_capacity(overlaps.len() + 1);
        grams.push(CMatrix::identity(d, d));
        grams.extend(overlaps);
        Ok(BranchingState { weights: q, grams, norm: 1.0 })
    }

    pub fn branch_probs(&self) -> &[f64] {
        &self.weights
    }

    pub fn n_branches(&self) -> usize {
        self.weights.len()
    }

    /// Number of parties including the system.
    pub fn n_parties(&self) -> usize {
        self.grams.len()
    }

    pub fn gram(&self, party: usize) -> &CMatrix {
        &self.grams[party]
    }

    pub fn environment_parties(&self) -> SubsystemSpec {
        (1..self.n_parties()).collect()
    }

    fn check_parts(&self, part: &SubsystemSpec) -> Result<()> {
        if let Some(bad) = part.iter().find(|&p| p >= self.n_parties()) {
            return Err(QdcError::InvalidSubsystem(format!("party {bad} out of {}", self.n_parties())));
        }
        Ok(())
    }

    fn joint_gram<I: Iterator<Item = usize>>(&self, parties: I) -> CMatrix {
        let d = self.n_branches();
        parties.fold(CMatrix::from_element(d, d, real(1.0)), |acc, p| {
            linalg::hadamard(&acc, &self.grams[p])
        })
    }

    /// Elementwise product of the Gram matrices of the parties in `part`.
    pub fn gram_of(&self, part: &SubsystemSpec) -> Result<CMatrix> {
        self.check_parts(part)?;
        Ok(self.joint_gram(part.iter()))
    }

    /// Overlap matrix of the environment outside `a ∪ b`.
    pub fn remainder_gram(&self, a: &SubsystemSpec, b: &SubsystemSpec) -> Result<CMatrix> {
        self.check_parts(a)?;
        self.check_parts(b)?;
        Ok(self.joint_gram((1..self.n_parties()).filter(|p| !a.contains(*p) && !b.contains(*p))))
    }

    pub fn remainder_is_orthogonal(&self, a: &SubsystemSpec, b: &SubsystemSpec, tol: f64) -> Result<bool> {
        let g = self.remainder_gram(a, b)?;
        let d = self.n_branches();
        Ok(linalg::max_abs_diff(&g, &CMatrix::identity(d, d)) <= tol)
    }

    /// Nonnegative spectrum of the reduced state on `part`.
    pub fn spectrum(&self, part: &SubsystemSpec) -> Result<Vec<f64>> {
        let m = self.reduced_gram(part)?;
        let vals = linalg::hermitian_eigenvalues(&m).into_iter().map(|v| v / self.norm).collect();
        crate::qstate::clamp_spectrum(vals)
    }

    fn reduced_gram(&self, part: &SubsystemSpec) -> Result<CMatrix> {
        self.check_parts(part)?;
        let ga = self.joint_gram(part.iter());
        let gb = self.joint_gram((0..self.n_parties()).filter(|p| !part.contains(*p)));
        let sq = DVector::from_iterator(self.n_branches(), self.weights.iter().map(|q| real(q.sqrt())));
        let dq = CMatrix::from_diagonal(&sq);
        let w = &dq * gb.transpose() * &dq;
        let root = linalg::psd_sqrt(&ga)?;
        let m = &root * w * &root;
        Ok((&m + m.adjoint()) * real(0.5))
    }
}

fn validate_gram(g: &CMatrix, d: usize) -> std::result::Result<(), String> {
    if g.nrows() != d || g.ncols() != d {
        return Err(format!("{}x{} Gram matrix for {d} branches", g.nrows(), g.ncols()));
    }
    if linalg::hermiticity_defect(g) > GRAM_TOL {
        return Err("not Hermitian".into());
    }
    if (0..d).any(|i| (g[(i, i)] - real(1.0)).norm() > GRAM_TOL) {
        return Err("diagonal is not 1".into());
    }
    let min = linalg::hermitian_eigenvalues(g).last().copied().unwrap_or(0.0);
    if min < -GRAM_TOL {
        return Err(format!("not PSD (eigenvalue {min:e})"));
    }
    Ok(())
}

impl EntropySource for BranchingState {
    fn entropy(&self, part: &SubsystemSpec) -> Result<f64> {
        let m = self.reduced_gram(part)?;
        entropy_of_gram(&m, self.norm)
    }
}

impl Conditionable for BranchingState {
    type Conditioned = BranchingState;

    /// Replaces the system's pointer-state Gram matrix `⟨s_m|s_n⟩` by
    /// `⟨s_m|E_i|s_n⟩`; the result has norm `p_i`.
    fn condition_on_system(&self, meas: &Measurement) -> Result<Vec<(f64, BranchingState)>> {
        let d = self.n_branches();
        if meas.dim() != d {
            return Err(QdcError::InvalidMeasurement(format!(
                "{}-dimensional measurement on {d} pointer states",
                meas.dim()
            )));
        }
        let rest = self.joint_gram(1..self.n_parties());
        let mut out = Vec::new();
        let mut total = 0.0;
        for e in meas.effects() {
            let mut grams = self.grams.clone();
            grams[SYSTEM] = e;
            let full = linalg::hadamard(&grams[SYSTEM], &rest);
            let mut p = Complex64::default();
            for m in 0..d {
                for n in 0..d {
                    p += full[(m, n)] * (self.weights[m] * self.weights[n]).sqrt();
                }
            }
            let raw = p.re;
            let p = raw / self.norm;
            total += p;
            if p > MIN_OUTCOME_PROB {
                out.push((p, BranchingState { weights: self.weights.clone(), grams, norm: raw }));
            }
        }
        if (total - 1.0).abs() > 1e-10 {
            return Err(QdcError::InvalidMeasurement(format!("outcome probabilities sum to {total}")));
        }
        Ok(out)
    }
}

/// Dense embedding of a branching state plus the qubit labels of each party.
#[derive(Debug, Clone)]
pub struct DenseRealization {
    pub state: PureState,
    /// `parties[k]` holds the qubit labels realizing party `k` (`parties[0]` is
    /// the system).
    pub parties: Vec<SubsystemSpec>,
}

impl DenseRealization {
    pub fn qubits_of(&self, party_set: &SubsystemSpec) -> SubsystemSpec {
        party_set.iter().fold(SubsystemSpec::empty(), |acc, p| acc.union(&self.parties[p]))
    }
}

/// Embeds every environment party's branch vectors, obtained by factoring its
/// Gram matrix, into the fewest qubits that hold its rank. Only one- or
/// two-branch states fit the single system qubit of the dense engine.
pub fn realize_dense(bs: &BranchingState) -> Result<DenseRealization> {
    let d = bs.n_branches();
    if d > 2 {
        return Err(QdcError::InvalidState(format!(
            "dense realization needs a qubit system, got {d} pointer states"
        )));
    }
    // per party: branch vectors (columns), padded to 2^k
    let mut factors: Vec<(usize, CMatrix)> = Vec::new();
    for p in 1..bs.n_parties() {
        let f = linalg::gram_factor(bs.gram(p), 1e-13)?;
        let nq = (f.nrows() as f64).log2().ceil().max(1.0) as usize;
        let mut padded = CMatrix::zeros(1 << nq, d);
        padded.view_mut((0, 0), (f.nrows(), d)).copy_from(&f);
        factors.push((nq, padded));
    }
    let total: usize = 1 + factors.iter().map(|(nq, _)| nq).sum::<usize>();
    if total > MAX_QUBITS {
        return Err(QdcError::RegisterTooLarge { requested: total, limit: MAX_QUBITS });
    }
    let mut amps = vec![Complex64::default(); 1 << total];
    for n in 0..d {
        let mut branch = vec![real(0.0); 2];
        branch[n] = real(bs.weights[n].sqrt());
        for (_, f) in &factors {
            let col: Vec<Complex64> = f.column(n).iter().copied().collect();
            branch = branch.iter().flat_map(|a| col.iter().map(move |x| a * x)).collect();
        }
        amps.iter_mut().zip(&branch).for_each(|(a, b)| *a += b);
    }
    let state = PureState::new(system_env_labels(total - 1), amps)?;
    let mut parties = vec![SubsystemSpec::system()];
    let mut next = 1;
    for (nq, _) in &factors {
        parties.push(SubsystemSpec::block(next, *nq));
        next += nq;
    }
    Ok(DenseRealization { state, parties })
}

/// Gram matrix of two branches with real overlap `x`.
pub fn two_branch_gram(x: f64) -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[real(1.0), real(x), real(x), real(1.0)])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::infotheory::measures::mutual_information;
    use crate::measurement::{random_povm, Measurement};
    use crate::qstate::{PartialTrace, SubsystemSpec};

    fn lambda_plus(k: i32, p: f64, s: f64) -> f64 {
        let q = 1.0 - p;
        0.5 * (1.0 + ((q - p).powi(2) + 4.0 * s.powi(2 * k) * p * q).sqrt())
    }

    #[test]
    fn single_branch_is_product() {
        let bs = make_branching_state(vec![1.0], vec![CMatrix::identity(1, 1)]).unwrap();
        let all = SubsystemSpec::new([0, 1]);
        assert_eq!(bs.entropy(&all).unwrap(), 0.0);
        assert!(bs.entropy(&SubsystemSpec::new([1])).unwrap().abs() < 1e-14);
        let dense = realize_dense(&bs).unwrap();
        assert!(dense.state.entropy(&dense.parties[1]).unwrap() < 1e-14);
    }

    #[test]
    fn orthogonal_records_give_one_bit() {
        let bs = make_branching_state(vec![0.5, 0.5], vec![CMatrix::identity(2, 2)]).unwrap();
        let i = mutual_information(&bs, &SubsystemSpec::system(), &SubsystemSpec::new([1])).unwrap();
        assert!((i - 2.0).abs() < 1e-12);
        let bs = make_branching_state(vec![0.5, 0.5], vec![CMatrix::identity(2, 2), CMatrix::identity(2, 2)])
            .unwrap();
        let i = mutual_information(&bs, &SubsystemSpec::system(), &SubsystemSpec::new([1])).unwrap();
        assert!((i - 1.0).abs() < 1e-12);
    }

    #[test]
    fn fragment_spectrum_matches_lambda() {
        // q = (0.3, 0.7), fragment overlap s^m with s = 0.5, m = 2
        let bs = make_branching_state(vec![0.3, 0.7], vec![two_branch_gram(0.25), CMatrix::identity(2, 2)])
            .unwrap();
        let spec = bs.spectrum(&SubsystemSpec::new([1])).unwrap();
        let lp = lambda_plus(2, 0.3, 0.5);
        assert!((spec[0] - lp).abs() < 1e-13 && (spec[1] - (1.0 - lp)).abs() < 1e-13);

        let dense = realize_dense(&bs).unwrap();
        let rho = dense.state.partial_trace(&dense.parties[1]).unwrap();
        let ev = crate::qstate::eigenvalues_hermitian(&rho).unwrap();
        assert!((ev[0] - lp).abs() < 1e-12);
    }

    #[test]
    fn dense_realization_reproduces_overlaps() {
        let g = CMatrix::from_row_slice(2, 2, &[real(1.0), Complex64::new(0.3, 0.4), Complex64::new(0.3, -0.4), real(1.0)]);
        let bs = make_branching_state(vec![0.4, 0.6], vec![g.clone(), two_branch_gram(0.1)]).unwrap();
        let dense = realize_dense(&bs).unwrap();
        for part in [vec![0], vec![1], vec![2], vec![0, 1], vec![1, 2]] {
            let spec = SubsystemSpec::new(part);
            let a = bs.entropy(&spec).unwrap();
            let b = dense.state.entropy(&dense.qubits_of(&spec)).unwrap();
            assert!((a - b).abs() < 1e-10, "{spec:?}: {a} vs {b}");
        }
    }

    #[test]
    fn conditioning_matches_dense() {
        let bs = make_branching_state(vec![0.35, 0.65], vec![two_branch_gram(0.4), two_branch_gram(0.2)]).unwrap();
        let dense = realize_dense(&bs).unwrap();
        let m = Measurement::Povm(random_povm(9, 4).unwrap());
        let a = bs.condition_on_system(&m).unwrap();
        let b = dense.state.condition_on_system(&m).unwrap();
        assert_eq!(a.len(), b.len());
        let f = SubsystemSpec::new([1, 2]);
        for ((pa, sa), (pb, sb)) in a.iter().zip(&b) {
            assert!((pa - pb).abs() < 1e-12);
            let ha = sa.entropy(&f).unwrap();
            let hb = sb.entropy(&dense.qubits_of(&f)).unwrap();
            assert!((ha - hb).abs() < 1e-10);
        }
    }

    #[test]
    fn bad_inputs_rejected() {
        assert!(matches!(
            make_branching_state(vec![0.5, 0.5], vec![two_branch_gram(1.5)]),
            Err(QdcError::InvalidOverlaps(_))
        ));
        let off = CMatrix::from_row_slice(2, 2, &[real(0.9), real(0.0), real(0.0), real(1.0)]);
        assert!(matches!(make_branching_state(vec![0.5, 0.5], vec![off]), Err(QdcError::InvalidOverlaps(_))));
        assert!(make_branching_state(vec![0.5, 0.6], vec![]).is_err());
        let bs = make_branching_state(vec![0.5, 0.5], vec![two_branch_gram(0.0)]).unwrap();
        assert!(matches!(bs.entropy(&SubsystemSpec::new([3])), Err(QdcError::InvalidSubsystem(_))));
    }
}
