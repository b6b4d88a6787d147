//! Deficit decompositions for pairs of fragments and random branching-state
//! generators used to check them.

use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use super::branching::BranchingState;
use super::measures::{information_deficit, mutual_information, system_entropy, MIN_SYSTEM_ENTROPY};
use crate::error::{QdcError, Result};
use crate::linalg::{c, real, CMatrix};
use crate::qstate::{EntropySource, SubsystemSpec, SYSTEM};

/// Slack on the deficit inequalities.
pub const BOUND_TOL: f64 = 1e-9;

/// Remainder overlaps farther than this from the identity are not decohered.
pub const ORTHOGONAL_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeficitReport {
    pub delta: f64,
    pub delta_prime: f64,
    pub delta_tilde: f64,
    /// `δ + δ′ − δ̃`.
    pub delta_hat: f64,
    pub h_s: f64,
    pub i_ff: f64,
    /// `|I(F:F′) − (1 − δ − δ′ + δ̃) H_S|`.
    pub identity_residual: f64,
    pub bound_ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LemmaReport {
    pub deficits: DeficitReport,
    pub epsilon: f64,
    pub epsilon_prime: f64,
    pub epsilon_tilde: f64,
    /// `ε + ε′ − ε̃`.
    pub epsilon_hat: f64,
    /// `|I(F:F′) − (1 − δ̂ − ε̂) H_S|`.
    pub decomposition_residual: f64,
    pub bound_ok: bool,
}

fn check_fragments(a: &SubsystemSpec, b: &SubsystemSpec) -> Result<()> {
    if a.contains(SYSTEM) || b.contains(SYSTEM) {
        return Err(QdcError::InvalidPartition("fragment contains the system".into()));
    }
    if !a.is_disjoint(b) {
        return Err(QdcError::InvalidPartition("fragments overlap".into()));
    }
    Ok(())
}

/// Deficits of `F`, `F′` and `FF′` together with the residual of
/// `I(F:F′) = (1 − δ − δ′ + δ̃) H_S`. The residual is only expected to vanish
/// when the rest of the environment has fully decohered the branches.
pub fn deficit_report<T: EntropySource + ?Sized>(
    x: &T,
    a: &SubsystemSpec,
    b: &SubsystemSpec,
) -> Result<DeficitReport> {
    check_fragments(a, b)?;
    let s = SubsystemSpec::system();
    let h_s = system_entropy(x)?;
    let delta = information_deficit(mutual_information(x, &s, a)?, h_s)?;
    let delta_prime = information_deficit(mutual_information(x, &s, b)?, h_s)?;
    let delta_tilde = information_deficit(mutual_information(x, &s, &a.union(b))?, h_s)?;
    let i_ff = mutual_information(x, a, b)?;
    let identity_residual = (i_ff - (1.0 - delta - delta_prime + delta_tilde) * h_s).abs();
    Ok(DeficitReport {
        delta,
        delta_prime,
        delta_tilde,
        delta_hat: delta + delta_prime - delta_tilde,
        h_s,
        i_ff,
        identity_residual,
        bound_ok: delta_tilde >= -BOUND_TOL && delta_tilde <= delta.min(delta_prime) + BOUND_TOL,
    })
}

/// Deficit identity for a branching state whose remainder records are
/// orthogonal. Use [`lemma1_check`] otherwise.
pub fn theorem1_check(bs: &BranchingState, a: &SubsystemSpec, b: &SubsystemSpec) -> Result<DeficitReport> {
    check_fragments(a, b)?;
    if !bs.remainder_is_orthogonal(a, b, ORTHOGONAL_TOL)? {
        return Err(QdcError::PreconditionViolated(
            "remainder records are not orthogonal".into(),
        ));
    }
    deficit_report(bs, a, b)
}

/// Decomposition with finite-remainder corrections `ε = 1 − H_SF/H_S`,
/// `ε′ = 1 − H_SF′/H_S`, `ε̃ = 1 − H_SFF′/H_S`.
pub fn lemma1_check<T: EntropySource + ?Sized>(x: &T, a: &SubsystemSpec, b: &SubsystemSpec) -> Result<LemmaReport> {
    let deficits = deficit_report(x, a, b)?;
    let h_s = deficits.h_s;
    if h_s <= MIN_SYSTEM_ENTROPY {
        return Err(QdcError::DegenerateSystem(h_s));
    }
    let eps = |part: &SubsystemSpec| -> Result<f64> { Ok(1.0 - x.entropy(&part.with_system())? / h_s) };
    let epsilon = eps(a)?;
    let epsilon_prime = eps(b)?;
    let epsilon_tilde = eps(&a.union(b))?;
    let epsilon_hat = epsilon + epsilon_prime - epsilon_tilde;
    let decomposition_residual = (deficits.i_ff - (1.0 - deficits.delta_hat - epsilon_hat) * h_s).abs();
    let joint = deficits.delta_tilde + epsilon_tilde;
    let bound_ok = joint
        <= (deficits.delta + epsilon).min(deficits.delta_prime + epsilon_prime) + BOUND_TOL;
    Ok(LemmaReport {
        deficits,
        epsilon,
        epsilon_prime,
        epsilon_tilde,
        epsilon_hat,
        decomposition_residual,
        bound_ok,
    })
}

/// How the records of one environment party are drawn.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Records {
    /// Perfect records: identity Gram matrix.
    Orthogonal,
    /// Random partially distinguishable records.
    Random,
}

/// Branch probabilities drawn uniformly from the simplex.
pub fn random_branch_probs<R: Rng + ?Sized>(rng: &mut R, d: usize) -> Vec<f64> {
    let mut q: Vec<f64> = (0..d).map(|_| Exp1.sample(rng)).collect();
    let total: f64 = q.iter().sum();
    q.iter_mut().for_each(|x| *x /= total);
    q
}

/// `(1 − w) I + w G` where `G` is the Gram matrix of `d` random unit vectors
/// in a space of random dimension `1..=d`, and `w` is uniform in `[0, 1]`.
pub fn random_gram<R: Rng + ?Sized>(rng: &mut R, d: usize) -> CMatrix {
    let rank = rng.random_range(1..=d);
    let vecs: Vec<Vec<num_complex::Complex64>> = (0..d)
        .map(|_| {
            let v: Vec<_> = (0..rank)
                .map(|_| c(rng.sample(StandardNormal), rng.sample(StandardNormal)))
                .collect();
            let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            v.into_iter().map(|z| z / n).collect()
        })
        .collect();
    let w: f64 = rng.random();
    CMatrix::from_fn(d, d, |i, j| {
        if i == j {
            real(1.0)
        } else {
            let g: num_complex::Complex64 = vecs[i].iter().zip(&vecs[j]).map(|(x, y)| x.conj() * y).sum();
            g * w
        }
    })
}

/// Random branching state with `d` branches and one environment party per
/// entry of `parties`.
pub fn random_branching_state<R: Rng + ?Sized>(rng: &mut R, d: usize, parties: &[Records]) -> Result<BranchingState> {
    let q = random_branch_probs(rng, d);
    let grams = parties
        .iter()
        .map(|r| match r {
            Records::Orthogonal => CMatrix::identity(d, d),
            Records::Random => random_gram(rng, d),
        })
        .collect();
    BranchingState::new(q, grams)
}

/// Parties `F = {1}`, `F′ = {2}` of a three-party environment.
pub fn fragment_pair() -> (SubsystemSpec, SubsystemSpec) {
    (SubsystemSpec::new([1]), SubsystemSpec::new([2]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::infotheory::branching::{realize_dense, two_branch_gram};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn orthogonal_records_have_no_deficit() {
        let id = CMatrix::identity(3, 3);
        let bs = BranchingState::new(vec![0.2, 0.3, 0.5], vec![id.clone(), id.clone(), id]).unwrap();
        let (f, fp) = fragment_pair();
        let r = theorem1_check(&bs, &f, &fp).unwrap();
        assert!(r.delta.abs() < 1e-12 && r.delta_prime.abs() < 1e-12 && r.delta_tilde.abs() < 1e-12);
        assert!((r.i_ff - r.h_s).abs() < 1e-12);
        assert!(r.bound_ok);
    }

    #[test]
    fn two_branch_example_matches_dense() {
        // overlaps s^m with s = 0.5, m = m' = 2
        let bs = BranchingState::new(
            vec![0.4, 0.6],
            vec![two_branch_gram(0.25), two_branch_gram(0.25), CMatrix::identity(2, 2)],
        )
        .unwrap();
        let (f, fp) = fragment_pair();
        let r = theorem1_check(&bs, &f, &fp).unwrap();
        assert!(r.identity_residual < 1e-9 && r.bound_ok);
        let dense = realize_dense(&bs).unwrap();
        let rd = deficit_report(&dense.state, &dense.qubits_of(&f), &dense.qubits_of(&fp)).unwrap();
        assert!(rd.identity_residual < 1e-9);
        assert!((rd.i_ff - r.i_ff).abs() < 1e-10 && (rd.delta_tilde - r.delta_tilde).abs() < 1e-10);
    }

    #[test]
    fn random_decohered_states_satisfy_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let (f, fp) = fragment_pair();
        for k in 0..40 {
            let d = 2 + k % 3;
            let bs = random_branching_state(&mut rng, d, &[Records::Random, Records::Random, Records::Orthogonal])
                .unwrap();
            let r = theorem1_check(&bs, &f, &fp).unwrap();
            assert!(r.identity_residual < 1e-9, "{r:?}");
            assert!(r.bound_ok, "{r:?}");
        }
    }

    #[test]
    fn coherent_remainder_is_rejected() {
        let bs = BranchingState::new(
            vec![0.5, 0.5],
            vec![two_branch_gram(0.1), two_branch_gram(0.1), two_branch_gram(0.3)],
        )
        .unwrap();
        let (f, fp) = fragment_pair();
        assert!(matches!(theorem1_check(&bs, &f, &fp), Err(QdcError::PreconditionViolated(_))));
        let l = lemma1_check(&bs, &f, &fp).unwrap();
        assert!(l.decomposition_residual < 1e-9 && l.bound_ok);
        assert!(l.epsilon > 0.0);
    }

    #[test]
    fn lemma_reduces_to_theorem_when_decohered() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let bs = random_branching_state(&mut rng, 3, &[Records::Random, Records::Random, Records::Orthogonal]).unwrap();
        let (f, fp) = fragment_pair();
        let l = lemma1_check(&bs, &f, &fp).unwrap();
        for e in [l.epsilon, l.epsilon_prime, l.epsilon_tilde] {
            assert!(e.abs() < 1e-10);
        }
    }

    #[test]
    fn random_gram_is_valid() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for d in 2..6 {
            let g = random_gram(&mut rng, d);
            assert!(crate::linalg::hermiticity_defect(&g) < 1e-14);
            assert!(*crate::linalg::hermitian_eigenvalues(&g).last().unwrap() > -1e-12);
        }
    }
}
