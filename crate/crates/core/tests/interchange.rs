//! JSON interchange: everything written out must read back to the same
//! object, and tampered files must be caught.

use std::path::PathBuf;

use proptest::prelude::*;
use serde_json::Value;
use sumprod::plane::{membership, min_splitting, sharp_witness, KPlane, PlaneJson};
use sumprod::prodrank::{certificate, replay, verify_decomposition, Decomposition, DecompositionJson, LinearCheck, RankCertificate, Step, Target};
use sumprod::search::sample_member_plane;
use sumprod::FieldCtx;

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name)
}

fn round_trip(l: &KPlane) -> KPlane {
    let text = serde_json::to_string(&l.to_json()).unwrap();
    let back: PlaneJson = serde_json::from_str(&text).unwrap();
    KPlane::from_json(&back).unwrap()
}

#[test]
fn witness_planes_survive_json() {
    for ctx in [FieldCtx::rationals(), FieldCtx::prime(7).unwrap()] {
        for (r, d) in [(2, 3), (4, 3), (5, 3), (4, 4)] {
            let w = sharp_witness(ctx, r, d).unwrap();
            let back = round_trip(&w);
            assert_eq!(back.matrix(), w.matrix());
            assert_eq!(back.k(), w.k());
            assert!(membership(&back));
            assert_eq!(min_splitting(&back).unwrap(), min_splitting(&w).unwrap());
        }
    }
}

#[test]
fn plane_json_ignores_a_schema_field() {
    let w = sharp_witness(FieldCtx::rationals(), 4, 3).unwrap();
    let mut v = serde_json::to_value(w.to_json()).unwrap();
    v["schema"] = "sumprod.plane/1".into();
    let j: PlaneJson = serde_json::from_value(v).unwrap();
    assert_eq!(KPlane::from_json(&j).unwrap().matrix(), w.matrix());
}

#[test]
fn malformed_plane_json_is_rejected() {
    let w = sharp_witness(FieldCtx::rationals(), 4, 3).unwrap();
    let mut j = w.to_json();
    j.k += 1;
    assert!(KPlane::from_json(&j).is_err());
}

#[test]
fn shipped_decomposition_verifies_and_a_tampered_one_does_not() {
    let text = std::fs::read_to_string(data("det3_decomposition.json")).unwrap();
    let j: DecompositionJson = serde_json::from_str(&text).unwrap();
    assert!(verify_decomposition(&Decomposition::from_json(&j).unwrap()));

    let mut v: Value = serde_json::from_str(&text).unwrap();
    v["parts"][0]["scalar"] = "2".into();
    let bad: DecompositionJson = serde_json::from_value(v).unwrap();
    assert!(!verify_decomposition(&Decomposition::from_json(&bad).unwrap()));
}

#[test]
fn certificates_replay_after_serialization() {
    for t in [Target::Det3, Target::Det4, Target::Pf6, Target::Perm4] {
        let cert = certificate(t).unwrap();
        let text = serde_json::to_string_pretty(&cert).unwrap();
        let back: RankCertificate = serde_json::from_str(&text).unwrap();
        assert_eq!(back, cert);
        assert!(replay(&back).unwrap().all_checks_pass(), "{t:?}");
    }
}

#[test]
fn tampered_certificate_fails_replay() {
    let mut cert = certificate(Target::Perm4).unwrap();
    let step = cert
        .steps
        .iter_mut()
        .find_map(|s| match s {
            Step::LinearAlgebraCheck { check: LinearCheck::Contained { dim, .. }, .. } => Some(dim),
            _ => None,
        })
        .expect("a containment step");
    *step += 1;
    assert!(!replay(&cert).unwrap().all_checks_pass());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn sampled_planes_survive_json(seed in any::<u64>(), sharp in any::<bool>(), shape in 0usize..3) {
        let (r, d, k) = [(4, 3, 5), (5, 3, 6), (3, 3, 3)][shape];
        let ctx = FieldCtx::prime(101).unwrap();
        if let Some(l) = sample_member_plane(ctx, r, d, k, sharp, seed).unwrap() {
            prop_assert!(membership(&l));
            let back = round_trip(&l);
            prop_assert_eq!(back.matrix(), l.matrix());
            prop_assert_eq!(min_splitting(&back).unwrap(), min_splitting(&l).unwrap());
        }
    }
}
