mod common;

use common::repo_path;
use common::topology::{check_snf, gcd_of_minors, snf_suite};
use num_bigint::BigInt;
use proptest::prelude::*;
use tdsim::topology::{format_groups, ChainComplex};

fn fixture(name: &str) -> ChainComplex {
    ChainComplex::from_json(&std::fs::read_to_string(repo_path(&format!("fixtures/{name}"))).unwrap()).unwrap()
}

#[test]
fn snf_matches_minor_oracle() {
    let rep = snf_suite(1000, 11);
    assert!(rep.ok(), "{rep:?}");
}

#[test]
fn minor_oracle_on_known_matrix() {
    let f = gcd_of_minors(2, 2, &[2, 4, 6, 8]);
    assert_eq!(f, vec![BigInt::from(2), BigInt::from(4)]);
}

#[test]
fn klein_fixture_homology() {
    let c = fixture("klein.json");
    assert_eq!(format_groups(&c.homology().unwrap(), false), "H0=Z; H1=Z/2; H2=0; H3=Z");
    let z2 = c.homology_with_coefficients(2).unwrap();
    assert!(z2.iter().all(|g| g.rank_mod(2) == 1 && !g.is_trivial()));
    assert_eq!(z2.len(), 4);
}

#[test]
fn cellular_klein_bottle() {
    let c = fixture("klein_cw.json");
    assert_eq!(format_groups(&c.homology().unwrap(), false), "H0=Z; H1=Z + Z/2; H2=0");
}

#[test]
fn inconsistent_rp3_is_rejected() {
    let c = ChainComplex::from_json(&std::fs::read_to_string(repo_path("fixtures/rp3_paper.json")).unwrap());
    let err = c.and_then(|c| c.homology()).unwrap_err().to_string();
    assert!(err.contains("[2]"), "{err}");
}

proptest! {
    #[test]
    fn snf_invariants(rows in 1usize..=4, cols in 1usize..=4, seed in any::<u64>()) {
        let data: Vec<i64> = (0..rows * cols).map(|i| ((seed >> (i % 60)) as i64 ^ i as i64).rem_euclid(11) - 5).collect();
        let (f, p, u, n) = check_snf(rows, cols, &data);
        prop_assert!(f && p && u && n);
    }
}
