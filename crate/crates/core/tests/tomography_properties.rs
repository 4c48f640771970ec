mod common;

use common::*;
use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;
use railbridge::homodyne::{apply_detector_loss, quadrature_pdf, sample, PhaseMode};
use railbridge::tomography::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn povm_expectation_is_the_lossy_density(
        amps in complex_vec(16),
        eta in 0.05..=1.0f64,
        theta in 0.0..6.3f64,
        x in -4.0..4.0f64,
    ) {
        let rho = density_from("m", 3, &amps);
        let pi = quadrature_povm(theta, x, eta, 3).unwrap();
        let lhs = (rho.matrix() * pi).trace();
        let rhs = quadrature_pdf(&apply_detector_loss(&rho, eta).unwrap(), theta).unwrap().density(x);
        prop_assert!(lhs.im.abs() < 1e-12);
        prop_assert!((lhs.re - rhs).abs() < 1e-10);
    }

    #[test]
    fn fidelity_is_symmetric_and_bounded(a in complex_vec(16), b in complex_vec(16)) {
        let (r, s) = (density_from("m", 3, &a), density_from("m", 3, &b));
        let f = fidelity(&r, &s).unwrap();
        prop_assert!((-1e-12..=1.0 + 1e-9).contains(&f));
        prop_assert!((f - fidelity(&s, &r).unwrap()).abs() < 1e-8);
        prop_assert!((fidelity(&r, &r).unwrap() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn wigner_marginal_is_the_position_density(amps in complex_vec(25), q in -3.0..3.0f64) {
        let rho = density_from("m", 4, &amps);
        // Trapezoid over p; the integrand decays like e^{−p²}.
        let (a, n) = (8.0, 800);
        let h = 2.0 * a / n as f64;
        let marginal: f64 = (0..=n)
            .map(|i| {
                let w = wigner_point(rho.matrix(), q, -a + i as f64 * h);
                if i == 0 || i == n { 0.5 * w } else { w }
            })
            .sum::<f64>()
            * h;
        let pdf = quadrature_pdf(&rho, 0.0).unwrap().density(q);
        prop_assert!((marginal - pdf).abs() < 1e-4, "{marginal} vs {pdf}");
    }
}

#[test]
fn pure_fidelity_agrees_with_general_fidelity() {
    let mut r = rng(8);
    for _ in 0..10 {
        let rho = random_density("m", 3, &mut r);
        let psi = random_pure_single("m", 3, &mut r);
        let general = fidelity(&rho, &psi.to_density().unwrap()).unwrap();
        assert!((general - fidelity_to_pure(&rho, &psi).unwrap()).abs() < 1e-8);
    }
}

#[test]
fn diluted_steps_never_lower_the_likelihood() {
    let mut r = rng(21);
    for case in 0..8 {
        let rho = random_density("m", 3, &mut r);
        let eta = [1.0, 0.7][case % 2];
        let data = sample(&rho, 400, PhaseMode::Uniform, eta, case as u64).unwrap();
        let problem = MaxLikProblem::new(&data, eta, 3).unwrap();
        let mut current = DMatrix::<Complex64>::identity(4, 4) / Complex64::new(4.0, 0.0);
        let mut ll = problem.loglik(&current).unwrap();
        for _ in 0..30 {
            current = problem.step(&current, 0.5).unwrap();
            let next = problem.loglik(&current).unwrap();
            assert!(next >= ll - 1e-9, "case {case}: {ll} -> {next}");
            ll = next;
        }
    }
}

#[test]
fn reconstruction_recovers_a_lossy_photon() {
    let rho = railbridge::DensityMatrix::fock("m", 3, 1).unwrap();
    let data = sample(&rho, 20_000, PhaseMode::Uniform, 0.6, 9).unwrap();
    let raw = maxlik_reconstruct(
        &data,
        &ReconstructionOptions {
            cutoff: 3,
            ..Default::default()
        },
    )
    .unwrap();
    let corrected = maxlik_reconstruct(
        &data,
        &ReconstructionOptions {
            cutoff: 3,
            eta: 0.6,
            ..Default::default()
        },
    )
    .unwrap();
    let one = railbridge::PureState::basis(railbridge::ModeRegister::single("m", 3).unwrap(), &[1]).unwrap();
    assert!((fidelity_to_pure(&raw.rho, &one).unwrap() - 0.6).abs() < 0.03);
    assert!(fidelity_to_pure(&corrected.rho, &one).unwrap() > 0.95);
    assert!(raw.loglik_trace.windows(2).all(|w| w[1] >= w[0]));
    assert!(corrected.rho.validate().is_ok());
}

#[test]
fn wigner_of_vacuum_and_photon_at_origin() {
    let vac = railbridge::DensityMatrix::fock("m", 3, 0).unwrap();
    let one = railbridge::DensityMatrix::fock("m", 3, 1).unwrap();
    let pi = std::f64::consts::PI;
    assert!((wigner_point(vac.matrix(), 0.0, 0.0) - 1.0 / pi).abs() < 1e-12);
    assert!((wigner_point(one.matrix(), 0.0, 0.0) + 1.0 / pi).abs() < 1e-12);
    let grid = wigner(&one, &linspace(-6.0, 6.0, 121), &linspace(-6.0, 6.0, 121)).unwrap();
    assert!((grid.integral() - 1.0).abs() < 1e-6);
}

#[test]
fn witness_of_product_states_is_at_most_half() {
    let mut r = rng(3);
    for _ in 0..10 {
        let pol = random_density("p", 1, &mut r);
        let fock = random_density("m", 2, &mut r);
        let hybrid = HybridDensity::new(2, pol.matrix().kronecker(fock.matrix())).unwrap();
        assert!(entanglement_witness(&hybrid).unwrap().fidelity <= 0.5 + 1e-12);
    }
    let bell = HybridDensity::max_entangled(2, 0.4).unwrap();
    let w = entanglement_witness(&bell).unwrap();
    assert!((w.fidelity - 1.0).abs() < 1e-12 && (w.phase - 0.4).abs() < 1e-12);
}

#[test]
fn joint_reconstruction_recovers_the_entangled_target() {
    use railbridge::{DensityMatrix, ModeRegister, Polarisation};
    use std::collections::BTreeMap;
    let target = HybridDensity::max_entangled(2, 0.0).unwrap();
    let mut sets = BTreeMap::new();
    for (i, pol) in Polarisation::ALL.iter().enumerate() {
        let block = target.conditional(&pol.qubit());
        let tr = block.trace();
        let rho = DensityMatrix::new(ModeRegister::single("B.V", 2).unwrap(), block / tr).unwrap();
        sets.insert(
            *pol,
            sample(&rho, 10_000, PhaseMode::Uniform, 1.0, 40 + i as u64).unwrap(),
        );
    }
    let opts = ReconstructionOptions {
        cutoff: 2,
        ..Default::default()
    };
    let r = joint_reconstruct_swapped(&sets, &opts).unwrap();
    let w = entanglement_witness(&r.state).unwrap();
    assert!(w.fidelity >= 0.98, "{w:?}");
    assert!(w.phase.abs() < 0.1);
}
