//! Reference values computed independently with a NumPy state-vector
//! implementation, plus textbook states with known answers.

#![allow(clippy::excessive_precision)]

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_4, FRAC_PI_8};

use num_complex::Complex64;
use qdc_core::cmaybe::{self, build_cmaybe_state, gram_reduce, CMaybeParams, FragmentPair};
use qdc_core::infotheory::{holevo, measured_cmi, mutual_information, quantum_cmi, refined_mi, system_entropy};
use qdc_core::measurement::Measurement;
use qdc_core::qstate::{PureState, SubsystemSpec};
use qdc_core::spinmodel::{SpinModelParams, SpinRealization, SpinSnapshot};

const TOL: f64 = 1e-12;

fn spec(v: &[usize]) -> SubsystemSpec {
    SubsystemSpec::new(v.iter().copied())
}

fn close(a: f64, b: f64, what: &str) {
    assert!((a - b).abs() < TOL, "{what}: {a} vs {b}");
}

#[test]
fn cmaybe_reference_values() {
    let params = CMaybeParams::new(4, 0.3, 0.5).unwrap();
    let psi = build_cmaybe_state(&params).unwrap();
    let s = SubsystemSpec::system();
    close(system_entropy(&psi).unwrap(), 0.87878244331002742, "H_S");
    close(mutual_information(&psi, &s, &spec(&[1, 2])).unwrap(), 0.87878244331002775, "I(S:F2)");
    close(mutual_information(&psi, &spec(&[1]), &spec(&[2, 3])).unwrap(), 0.6830990724508188, "I(F:F′)");
    close(holevo(&psi, &spec(&[1, 2]), &Measurement::pointer()).unwrap(), 0.84076263547917895, "χ(z)");
    close(holevo(&psi, &spec(&[1, 2]), &Measurement::tilted(FRAC_PI_8)).unwrap(), 0.35348161652276788, "χ(π/8)");
    let (f, fp) = (spec(&[1]), spec(&[2]));
    close(measured_cmi(&psi, &f, &fp, &Measurement::tilted(FRAC_PI_8)).unwrap(), 0.3666855623481805, "I(F:F′|S_π/8)");
    close(measured_cmi(&psi, &f, &fp, &Measurement::pointer()).unwrap(), 0.0, "I(F:F′|S_z)");

    // the same numbers through the two-branch reduction
    let bs = gram_reduce(&params, &[1, 2]).unwrap();
    close(mutual_information(&bs, &spec(&[1]), &spec(&[2])).unwrap(), 0.6830990724508188, "reduced I(F:F′)");
    let r = cmaybe::consensus(&params, FragmentPair::new(1, 1), &Measurement::tilted(FRAC_PI_8)).unwrap();
    close(r.cmi_measured, 0.3666855623481805, "reduced I(F:F′|S_π/8)");
}

#[test]
fn spin_reference_values() {
    let params = SpinModelParams { n: 3, delta_d: 1.0, delta_g: 0.1, seed: 0 };
    let g = vec![vec![0.0, 0.2, -0.1], vec![0.2, 0.0, 0.3], vec![-0.1, 0.3, 0.0]];
    let real = SpinRealization::from_couplings(params, vec![0.5, -0.8, 1.1], g).unwrap();
    let snap = SpinSnapshot::new(std::sync::Arc::new(real), 0.7);
    let s = SubsystemSpec::system();
    close(system_entropy(&snap).unwrap(), 0.99992405547043617, "H_S");
    close(mutual_information(&snap, &s, &spec(&[1, 2])).unwrap(), 1.0472015995346793, "I(S:F)");
    close(mutual_information(&snap, &spec(&[1]), &spec(&[2])).unwrap(), 0.41895714267961703, "I(F:F′)");
    close(
        measured_cmi(&snap, &spec(&[1]), &spec(&[2]), &Measurement::tilted(FRAC_PI_4)).unwrap(),
        0.53912776625184522,
        "I(F:F′|S_π/4)",
    );
    close(quantum_cmi(&snap, &spec(&[1]), &spec(&[2]), &s).unwrap(), 0.33162275498179805, "I(F:F′|S)");
}

#[test]
fn ghz_state() {
    // (|000⟩ + |111⟩)/√2: perfect records in z, none in x
    let mut amps = vec![Complex64::default(); 8];
    amps[0] = Complex64::new(FRAC_1_SQRT_2, 0.0);
    amps[7] = Complex64::new(FRAC_1_SQRT_2, 0.0);
    let psi = PureState::system_env(2, amps).unwrap();
    let (f, fp) = (spec(&[1]), spec(&[2]));
    close(mutual_information(&psi, &SubsystemSpec::system(), &f).unwrap(), 1.0, "I(S:F)");
    close(mutual_information(&psi, &f, &fp).unwrap(), 1.0, "I(F:F′)");
    close(refined_mi(&psi, &f, &fp, &Measurement::pointer()).unwrap(), 1.0, "𝕴(z)");
    // an x readout leaves a Bell pair on the environment
    close(refined_mi(&psi, &f, &fp, &Measurement::tilted(FRAC_PI_4)).unwrap(), -1.0, "𝕴(x)");
    close(holevo(&psi, &f, &Measurement::tilted(FRAC_PI_4)).unwrap(), 0.0, "χ(x)");
}

#[test]
fn bell_pair() {
    let h = Complex64::new(FRAC_1_SQRT_2, 0.0);
    let psi = PureState::system_env(1, vec![h, Complex64::default(), Complex64::default(), h]).unwrap();
    close(mutual_information(&psi, &SubsystemSpec::system(), &spec(&[1])).unwrap(), 2.0, "I(S:E)");
}
