//! Property tests for entropic inequalities and model identities.

use std::sync::Arc;

use num_complex::Complex64;
use proptest::prelude::*;
use qdc_core::cmaybe::{self, build_cmaybe_state, mi_sf_exact, CMaybeParams, FragmentPair};
use qdc_core::experiment::{apply_override, Cell};
use qdc_core::infotheory::{
    holevo, measured_cmi, mutual_information, quantum_cmi, random_branching_state, refined_mi, system_entropy,
    theorem1_check, Records,
};
use qdc_core::linalg::max_abs_diff;
use qdc_core::measurement::{random_povm, random_povm_dim, Measurement};
use qdc_core::par::ExecMode;
use qdc_core::qstate::{EntropySource, PartialTrace, PureState, SubsystemSpec};
use qdc_core::rng::{rng_from_seed, sub_seed};
use qdc_core::spinmodel::{reduced_dm_factorized, sample_couplings, SpinModelParams, SpinSnapshot};
use rand::Rng;
use rand_distr::StandardNormal;

const EPS: f64 = 1e-9;

fn random_state(seed: u64, n: usize) -> PureState {
    let mut rng = rng_from_seed(seed);
    let mut amps: Vec<Complex64> =
        (0..1usize << n).map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))).collect();
    let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    amps.iter_mut().for_each(|a| *a /= norm);
    PureState::system_env(n - 1, amps).unwrap()
}

fn subset(mask: u32, n: usize) -> SubsystemSpec {
    (0..n).filter(|i| mask >> i & 1 == 1).collect()
}

fn env_subset(mask: u32, n: usize) -> SubsystemSpec {
    (1..n).filter(|i| mask >> i & 1 == 1).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn pure_state_complements_share_entropy(seed: u64, n in 2usize..7, mask: u32) {
        let psi = random_state(seed, n);
        let a = subset(mask, n);
        let rest: SubsystemSpec = (0..n).filter(|i| !a.contains(*i)).collect();
        let (ha, hr) = (psi.entropy(&a).unwrap(), psi.entropy(&rest).unwrap());
        prop_assert!((ha - hr).abs() < EPS);
        prop_assert!(ha >= 0.0 && ha <= a.len().min(rest.len()) as f64 + EPS);
    }

    #[test]
    fn strong_subadditivity_and_mi_bounds(seed: u64, n in 3usize..7, ma: u32, mb: u32) {
        let psi = random_state(seed, n);
        let a = env_subset(ma, n);
        let b: SubsystemSpec = env_subset(mb, n).iter().filter(|i| !a.contains(*i)).collect();
        let s = SubsystemSpec::system();
        prop_assert!(quantum_cmi(&psi, &a, &b, &s).unwrap() >= -EPS);
        let i = mutual_information(&psi, &s, &a).unwrap();
        let h = system_entropy(&psi).unwrap();
        prop_assert!(i >= -EPS && i <= 2.0 * h.min(psi.entropy(&a).unwrap()) + EPS);
    }

    #[test]
    fn holevo_is_bounded_by_mutual_information(seed: u64, n in 2usize..6, mask: u32, mu in 0.0..1.6f64) {
        let psi = random_state(seed, n);
        let f = env_subset(mask | 2, n);
        let chi = holevo(&psi, &f, &Measurement::tilted(mu)).unwrap();
        let i = mutual_information(&psi, &SubsystemSpec::system(), &f).unwrap();
        prop_assert!(chi >= -EPS && chi <= i + EPS && chi <= 1.0 + EPS);
    }

    #[test]
    fn povm_measured_cmi_is_nonnegative(seed: u64, n in 3usize..6, k in 2usize..7) {
        let psi = random_state(seed, n);
        let povm = random_povm(sub_seed(seed, 1), k).unwrap();
        prop_assert!(povm.completeness_residual() < 1e-12);
        let v = measured_cmi(&psi, &SubsystemSpec::new([1]), &SubsystemSpec::new([2]), &Measurement::Povm(povm)).unwrap();
        prop_assert!(v >= -EPS);
    }

    #[test]
    fn closed_form_matches_dense(n in 1usize..9, p in 0.01..0.99f64, s in 0.0..1.0f64, m_frac in 0.0..1.0f64) {
        let params = CMaybeParams::new(n, p, s).unwrap();
        let m = ((n as f64) * m_frac).round() as usize;
        let psi = build_cmaybe_state(&params).unwrap();
        let dense = mutual_information(&psi, &SubsystemSpec::system(), &SubsystemSpec::block(1, m)).unwrap();
        prop_assert!((mi_sf_exact(&params, m).unwrap() - dense).abs() < 1e-8);
    }

    #[test]
    fn cmaybe_mi_grows_with_fragment(n in 2usize..40, p in 0.01..0.99f64, s in 0.0..0.99f64) {
        let params = CMaybeParams::new(n, p, s).unwrap();
        let curve: Vec<f64> = (0..=n).map(|m| mi_sf_exact(&params, m).unwrap()).collect();
        prop_assert!(curve.windows(2).all(|w| w[1] >= w[0] - EPS));
        // I(S:F) + I(S:F̄) = 2 H_S
        for m in 0..=n {
            prop_assert!((curve[m] + curve[n - m] - 2.0 * params.h_s()).abs() < 1e-9);
        }
    }

    #[test]
    fn reduction_consensus_is_consistent(n in 2usize..60, p in 0.05..0.95f64, s in 0.0..0.95f64, mu in 0.0..1.6f64) {
        let params = CMaybeParams::new(n, p, s).unwrap();
        let m = (n / 3).max(1);
        let r = cmaybe::consensus(&params, FragmentPair::new(m, m.min(n - m)), &Measurement::tilted(mu)).unwrap();
        prop_assert!((r.refined - (r.i_ff - r.cmi_measured)).abs() < 1e-12);
        prop_assert!(r.holevo_f <= r.i_sf + EPS);
        prop_assert!(r.cmi_measured >= -EPS);
    }

    #[test]
    fn decohered_branching_identity(seed: u64, d in 2usize..5) {
        let mut rng = rng_from_seed(seed);
        let bs = random_branching_state(&mut rng, d, &[Records::Random, Records::Random, Records::Orthogonal]).unwrap();
        let r = theorem1_check(&bs, &SubsystemSpec::new([1]), &SubsystemSpec::new([2])).unwrap();
        prop_assert!(r.identity_residual < 1e-9);
        prop_assert!(r.bound_ok);
    }

    #[test]
    fn singly_branching_refined_mi_is_nonnegative(seed: u64, d in 2usize..5, k in 2usize..7) {
        let mut rng = rng_from_seed(seed);
        let bs = random_branching_state(&mut rng, d, &[Records::Orthogonal, Records::Random, Records::Orthogonal]).unwrap();
        let povm = random_povm_dim(sub_seed(seed, 7), d, k).unwrap();
        let v = refined_mi(&bs, &SubsystemSpec::new([1]), &SubsystemSpec::new([2]), &Measurement::Povm(povm)).unwrap();
        prop_assert!(v >= -EPS);
    }

    #[test]
    fn factorized_spin_states_match_dense(seed: u64, n in 2usize..8, t in 0.0..30.0f64, mask: u32) {
        let real = sample_couplings(&SpinModelParams { n, delta_d: 1.0, delta_g: 0.2, seed }).unwrap();
        let keep = subset(mask, n + 1);
        let psi = real.evolve(t, ExecMode::Sequential).unwrap();
        let a = reduced_dm_factorized(&real, t, &keep).unwrap();
        let b = psi.partial_trace(&keep).unwrap();
        prop_assert!(max_abs_diff(a.matrix(), b.matrix()) < 1e-10);
    }

    #[test]
    fn spin_snapshot_complement_identity(seed: u64, n in 2usize..14, t in 0.0..50.0f64) {
        let real = Arc::new(sample_couplings(&SpinModelParams { n, delta_d: 1.0, delta_g: 0.05, seed }).unwrap());
        let snap = SpinSnapshot::new(real, t);
        let s = SubsystemSpec::system();
        let h = system_entropy(&snap).unwrap();
        let m = n / 2;
        let sum = mutual_information(&snap, &s, &SubsystemSpec::block(1, m)).unwrap()
            + mutual_information(&snap, &s, &SubsystemSpec::block(1 + m, n - m)).unwrap();
        prop_assert!((sum - 2.0 * h).abs() < 1e-8);
    }

    #[test]
    fn table_floats_round_trip(x in proptest::num::f64::NORMAL | proptest::num::f64::SUBNORMAL | proptest::num::f64::ZERO) {
        let text = Cell::Float(x).to_string();
        prop_assert_eq!(text.parse::<f64>().unwrap().to_bits(), x.to_bits());
    }

    #[test]
    fn overrides_land_where_asked(key in "[a-z]{1,6}(\\.[a-z]{1,6}){0,2}", v: i64) {
        let mut root = serde_json::json!({});
        apply_override(&mut root, &format!("{key}={v}")).unwrap();
        let ptr = format!("/{}", key.replace('.', "/"));
        prop_assert_eq!(root.pointer(&ptr).unwrap(), &serde_json::json!(v));
    }

    #[test]
    fn sub_seeds_are_reproducible(master: u64, i: u64) {
        prop_assert_eq!(sub_seed(master, i), sub_seed(master, i));
        prop_assert_ne!(sub_seed(master, i), sub_seed(master, i.wrapping_add(1)));
    }
}
