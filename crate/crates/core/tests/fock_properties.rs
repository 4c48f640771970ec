mod common;

use common::*;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use railbridge::fock::{embed_operator, loss_channel, EIGENVALUE_FLOOR};
use railbridge::{ModeRegister, PureState};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn loss_preserves_trace_and_positivity(amps in complex_vec(25), eta in 0.0..=1.0f64) {
        let rho = density_from("m", 4, &amps);
        let out = rho.apply_channel(&loss_channel(eta, 4).unwrap(), &["m"]).unwrap();
        prop_assert!((out.trace().re - 1.0).abs() < 1e-10);
        prop_assert!(out.hermiticity_error() < 1e-12);
        prop_assert!(min_eigenvalue(&out) >= EIGENVALUE_FLOOR);
    }

    #[test]
    fn loss_on_one_mode_of_two(amps in complex_vec(9), eta in 0.0..=1.0f64) {
        let psi = pure_from(&["a", "b"], 2, &amps).unwrap();
        let rho = psi.to_density().unwrap();
        let out = rho.apply_channel(&loss_channel(eta, 2).unwrap(), &["b"]).unwrap();
        prop_assert!((out.trace().re - 1.0).abs() < 1e-10);
        prop_assert!(min_eigenvalue(&out) >= EIGENVALUE_FLOOR);
        // Loss on b leaves the reduced state of a untouched.
        let before = rho.partial_trace(&["a"]).unwrap();
        let after = out.partial_trace(&["a"]).unwrap();
        prop_assert!((before.matrix() - after.matrix()).norm() < 1e-12);
    }

    #[test]
    fn tensor_then_project_recovers_factor(x in complex_vec(9), y in complex_vec(3)) {
        let x = pure_from(&["a", "b"], 2, &x).unwrap();
        let y = pure_from(&["c"], 2, &y).unwrap();
        let (back, p) = x.tensor(&y).unwrap().project(&y).unwrap();
        prop_assert!((p - 1.0).abs() < 1e-12);
        prop_assert!((back.overlap(&x).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sparse_and_dense_application_agree(amps in complex_vec(27), op in complex_vec(9), which in 0usize..3) {
        let labels = ["a", "b", "c"];
        let psi = pure_from(&labels, 2, &amps).unwrap();
        let op = DMatrix::from_fn(3, 3, |i, j| op[i * 3 + j]);
        let mode = [labels[which]];
        let sparse = psi.apply_local(&mode, &op).unwrap().to_dense().unwrap();
        let full = embed_operator(psi.register(), &mode, &op).unwrap();
        let dense: DVector<_> = full * psi.to_dense().unwrap();
        prop_assert!((sparse - dense).norm() < 1e-12);
    }

    #[test]
    fn normalize_fixes_norm_and_phase(amps in complex_vec(9)) {
        let psi = pure_from(&["a", "b"], 2, &amps).unwrap();
        prop_assert!((psi.norm_sqr() - 1.0).abs() < 1e-12);
        let (_, first) = psi.terms().next().unwrap();
        prop_assert!(first.im.abs() < 1e-15 && first.re >= 0.0);
    }

    #[test]
    fn reduced_density_is_valid(amps in complex_vec(27)) {
        let psi = pure_from(&["a", "b", "c"], 2, &amps).unwrap();
        let rho = psi.reduced_density(&["c", "a"]).unwrap();
        prop_assert!(rho.validate().is_ok());
        prop_assert_eq!(rho.register().labels(), &["c".to_string(), "a".to_string()][..]);
    }
}

#[test]
fn vacuum_register_basis_is_lexicographic() {
    let reg = ModeRegister::new(["a", "b"], 2).unwrap();
    let psi = PureState::basis(reg.clone(), &[1, 2]).unwrap();
    let v = psi.to_dense().unwrap();
    assert_eq!(v.iter().position(|z| z.re == 1.0), Some(reg.index_of(&[1, 2])));
    assert_eq!(reg.index_of(&[1, 2]), 5);
}
