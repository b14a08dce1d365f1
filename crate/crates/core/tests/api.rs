//! End-to-end use of the public API.

use nonstretch_core::partitions::enumerate_kstretch;
use nonstretch_core::states::{custom_state, PureStateFile};
use nonstretch_core::{
    evaluate, ghz_qudit, threshold_p, MSource, MonotoneFunction, Quantity, RChoice, StateInput, SymmetricMeasurement,
    C64,
};
use proptest::prelude::*;

#[test]
fn measurement_json_round_trip_recertifies() {
    let m = SymmetricMeasurement::gell_mann(3, 4, 3, RChoice::Max).unwrap();
    let back = SymmetricMeasurement::from_json(&m.to_json().unwrap()).unwrap();
    assert_eq!((back.d(), back.s(), back.t()), (3, 4, 3));
    assert_eq!(back.r(), m.r());
    assert!(back.certify().passed());
}

#[test]
fn tampered_measurement_json_is_rejected() {
    let m = SymmetricMeasurement::gell_mann(2, 1, 4, RChoice::Max).unwrap();
    let mut doc: serde_json::Value = serde_json::from_str(&m.to_json().unwrap()).unwrap();
    doc["chi"] = serde_json::json!(0.9);
    assert!(SymmetricMeasurement::from_json(&doc.to_string()).is_err());
}

#[test]
fn custom_ghz_matches_built_in_family() {
    let (d, n) = (3usize, 4usize);
    let mut amps = vec![C64::new(0.0, 0.0); d.pow(n as u32)];
    let stride: usize = (0..n).map(|i| d.pow(i as u32)).sum();
    for i in 0..d {
        amps[i * stride] = C64::new(1.0 / (d as f64).sqrt(), 0.0);
    }
    let file = PureStateFile {
        site_dims: vec![d; n],
        amplitudes: amps.iter().map(|a| [a.re, a.im]).collect(),
    };
    let custom = file.into_family().unwrap();
    let ghz = ghz_qudit(d, n).unwrap();
    let m = SymmetricMeasurement::gell_mann(3, 1, 9, RChoice::Value(0.0129)).unwrap();
    for p in [0.2, 0.9] {
        let a = evaluate(StateInput::Isotropic { family: &custom, p }, &m, MonotoneFunction::Qfi, -1, MSource::Enumeration).unwrap();
        let b = evaluate(StateInput::Isotropic { family: &ghz, p }, &m, MonotoneFunction::Qfi, -1, MSource::Enumeration).unwrap();
        assert!((a.lhs_skew - b.lhs_skew).abs() < 1e-10);
        assert!((a.lhs_var - b.lhs_var).abs() < 1e-10);
        let rho = custom.materialize_dense(p).unwrap();
        let c = evaluate(StateInput::Dense(&rho), &m, MonotoneFunction::Qfi, -1, MSource::Enumeration).unwrap();
        assert!((a.lhs_skew - c.lhs_skew).abs() < 1e-9);
    }
}

#[test]
fn pure_state_file_loads_from_disk() {
    let dir = std::env::temp_dir().join(format!("nonstretch-api-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("bell.json");
    let h = std::f64::consts::FRAC_1_SQRT_2;
    std::fs::write(&path, format!(r#"{{"site_dims":[2,2],"amplitudes":[[{h},0],[0,0],[0,0],[{h},0]]}}"#)).unwrap();
    let fam = PureStateFile::load(&path).unwrap().into_family().unwrap();
    assert_eq!((fam.d(), fam.n()), (2, 2));
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn unnormalized_custom_state_is_rejected() {
    let amps = vec![C64::new(1.0, 0.0); 4];
    assert!(custom_state(2, 2, amps).is_err());
}

#[test]
fn thresholds_shrink_with_n() {
    let m = SymmetricMeasurement::gell_mann(3, 1, 9, RChoice::Value(0.0129)).unwrap();
    let q = Quantity::Skew(MonotoneFunction::Qfi);
    let mut last = 1.0;
    for n in [10usize, 20, 30] {
        let p = threshold_p(&ghz_qudit(3, n).unwrap(), &m, q, 3 - n as i64, MSource::Enumeration)
            .unwrap()
            .unwrap();
        assert!(p < last);
        last = p;
    }
}

proptest! {
    #[test]
    fn enumerated_partitions_are_k_stretchable(n in 1usize..16, k_off in 0i64..30) {
        let k = 1 - n as i64 + k_off % (2 * n as i64 - 1).max(1);
        let en = enumerate_kstretch(n, k).unwrap();
        prop_assert!(!en.partitions.is_empty());
        for p in &en.partitions {
            prop_assert_eq!(p.n(), n);
            prop_assert!(p.stretchability() <= k);
            prop_assert!(p.parts().windows(2).all(|w| w[0] >= w[1]));
        }
        let mut sorted = en.partitions.clone();
        sorted.dedup();
        prop_assert_eq!(sorted.len(), en.partitions.len());
    }
}
