use num_bigint::BigInt;
use num_rational::BigRational;
use proptest::prelude::*;

use fjwb_core::certifier::{pipeline, verify, CertError, CertRequest, Certificate, Mode, Status};
use fjwb_core::group::IntMatrix;

fn request(rows: &[&[i64]], window: u64, samples: usize, seed: u64) -> CertRequest {
    let a = IntMatrix::from_i64(rows).unwrap();
    let n = a.dim();
    let mut req = CertRequest::new(a, window, BigRational::new(1.into(), 2.into()), CertRequest::standard_gens(n));
    req.samples = samples;
    req.seed = seed;
    req
}

#[test]
fn certificate_survives_json_and_replays() {
    let cert = pipeline(&request(&[&[2, 1], &[1, 1]], 2, 8, 3)).unwrap();
    assert_eq!(cert.status, Status::Passed);
    let json = serde_json::to_value(&cert).unwrap();
    // big integers travel as decimal strings
    assert_eq!(json["setup"]["k_product"], "5");
    assert!(json["schema"].as_str().unwrap().ends_with("/1"));
    let back: Certificate = serde_json::from_value(json).unwrap();
    assert!(verify(&back).unwrap().ok);
}

#[test]
fn timings_are_not_compared() {
    let mut cert = pipeline(&request(&[&[2, 1], &[1, 1]], 2, 4, 1)).unwrap();
    cert.timings.coset_checks_ms += 1_000_000;
    assert!(verify(&cert).unwrap().ok);
}

#[test]
fn forged_status_is_caught() {
    let mut cert = pipeline(&request(&[&[2, 1], &[1, 1]], 2, 4, 2)).unwrap();
    cert.subgroups[0].passed = false;
    cert.status = Status::Failed;
    let report = verify(&cert).unwrap();
    assert!(!report.ok);
    assert!(!report.mismatches.is_empty());
}

#[test]
fn small_window_fails_honestly_in_dimension_three() {
    // det 1 and x³ − 2x² + x − 1 has no root of unity; L = 1 gives primes 2, 3,
    // too small for the line map to reach ε = 1/2
    let rows: &[&[i64]] = &[&[1, 1, 0], &[0, 1, 1], &[1, 0, 0]];
    let cert = pipeline(&request(rows, 1, 3, 0)).unwrap();
    assert_eq!(cert.setup.primes, [2, 3]);
    assert_eq!(cert.status, Status::Failed);
    assert!(cert.subgroups.iter().all(|s| !s.passed));
    let report = verify(&cert).unwrap();
    assert!(!report.ok);
    assert!(report.mismatches.is_empty(), "{:?}", report.mismatches);
    // L = 2 gives s = 341 and an r far beyond the default cap
    let err = pipeline(&request(rows, 2, 3, 0)).unwrap_err();
    assert!(matches!(&err, CertError::CapExceeded(m) if m.starts_with("r = 6772260")), "{err}");
}

#[test]
fn exhaustive_mode_hits_the_cap() {
    let mut req = request(&[&[2, 1], &[1, 1]], 2, 0, 0);
    req.mode = Mode::Exhaustive;
    let err = pipeline(&req).unwrap_err();
    assert_eq!(err.exit_code(), 3);
}

#[test]
fn root_of_unity_is_a_usage_error() {
    for rows in [&[&[0i64, -1][..], &[1, 0]][..], &[&[1, 1], &[0, 1]], &[&[-1, 0], &[0, -1]]] {
        let err = pipeline(&request(rows, 2, 4, 0)).unwrap_err();
        assert_eq!(err, CertError::EigenvalueRootOfUnity);
        assert_eq!(err.exit_code(), 1);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(4))]

    #[test]
    fn any_seed_yields_a_replayable_certificate(seed in 0u64..1000) {
        let cert = pipeline(&request(&[&[2, 1], &[1, 1]], 2, 4, seed)).unwrap();
        prop_assert_eq!(cert.status, Status::Passed);
        prop_assert_eq!(cert.setup.s, 341);
        prop_assert_eq!(cert.setup.r % 341, 0);
        prop_assert_eq!(&cert.l_min, &BigInt::from(4));
        prop_assert!(verify(&cert).unwrap().ok);
    }
}
