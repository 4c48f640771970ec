mod common;

use common::*;
use proptest::prelude::*;
use railbridge::homodyne::{QuadratureDataset, QuadratureSample};
use railbridge::io::*;
use railbridge::Error;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn density_json_round_trip_is_exact(amps in complex_vec(16)) {
        let rho = density_from("B.V", 3, &amps);
        let back = density_from_json(&density_to_json(&rho).unwrap()).unwrap();
        prop_assert_eq!(back.matrix(), rho.matrix());
        prop_assert_eq!(back.register(), rho.register());
    }

    #[test]
    fn two_mode_json_round_trip(amps in complex_vec(9)) {
        let rho = pure_from(&["a", "b"], 2, &amps).unwrap().to_density().unwrap();
        let back = density_from_json(&density_to_json(&rho).unwrap()).unwrap();
        prop_assert_eq!(back.matrix(), rho.matrix());
    }

    #[test]
    fn quadrature_csv_round_trip_is_exact(
        points in prop::collection::vec((0.0..6.3f64, -10.0..10.0f64), 1..200),
    ) {
        let samples = points.into_iter().map(|(theta, x)| QuadratureSample { theta, x }).collect();
        let data = QuadratureDataset::new(samples, 0.8, "m");
        let text = quadratures_to_csv(&data).unwrap();
        let back = read_quadratures(text.as_bytes(), 0.8, "m").unwrap();
        prop_assert_eq!(back, data);
    }
}

#[test]
fn csv_errors_report_lines() {
    let cases: [(&str, usize); 4] = [
        ("", 1),
        ("theta,x\n0,1\n", 1),
        ("theta_rad,x\n0,1\n0.5,abc\n", 3),
        ("theta_rad,x\n0,1\n0,1\n0,1,2\n", 4),
    ];
    for (text, expected) in cases {
        match read_quadratures(text.as_bytes(), 1.0, "m") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, expected, "{text:?}"),
            other => panic!("{text:?}: {other:?}"),
        }
    }
    assert!(matches!(
        read_quadratures("theta_rad,x\n".as_bytes(), 1.0, "m"),
        Err(Error::EmptyDataset)
    ));
}

#[test]
fn density_json_rejects_ragged_rows() {
    let text = r#"{"labels":["m"],"cutoff":1,"re":[[1,0],[0]],"im":[[0,0],[0,0]]}"#;
    assert!(matches!(density_from_json(text), Err(Error::InvalidDensity(_))));
    let bad = r#"{"labels":["m"],"cutoff":1,"re":[[1,0],[0,0]],"im":[[0,0],[0,0]"#;
    assert!(matches!(density_from_json(bad), Err(Error::Parse { .. })));
}
