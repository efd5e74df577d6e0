mod common;

use lipsel::nagata::{
    same_parity_separation, tree_nagata_cover, validate_nagata, CoverProvider, Covering, TREE_C, TREE_D,
};
use proptest::prelude::*;

#[test]
fn large_random_trees_validate() {
    for seed in 0..6 {
        let mut rng = common::rng(seed);
        let t = common::real_tree(&mut rng, 200, 0.05, 3.0);
        let s = common::tree_space(&t);
        for scale in [1.0, 3.7, 64.0] {
            let c = tree_nagata_cover(&t, scale, 0).unwrap();
            let rep = validate_nagata(&c, &s, scale, TREE_D, TREE_C).unwrap();
            assert!(rep.ok, "seed {seed}, s = {scale}: {rep:?}");
            assert!(c.parts.iter().all(|p| !p.points.is_empty()));
        }
    }
}

#[test]
fn provider_sweeps_dyadic_scales() {
    let mut rng = common::rng(40);
    let t = common::real_tree(&mut rng, 100, 0.01, 2.0);
    let s = common::tree_space(&t);
    let p = CoverProvider::tree(&t, 0).unwrap();
    for k in -10..=10 {
        let scale = 2f64.powi(k);
        let c = p.cover(scale).unwrap();
        assert!(validate_nagata(&c, &s, scale, p.d, p.c).unwrap().ok, "k = {k}");
    }
}

#[test]
fn same_parity_parts_are_separated() {
    for seed in 0..8 {
        let mut rng = common::rng(100 + seed);
        let t = common::real_tree(&mut rng, 120, 0.1, 2.5);
        let s = common::tree_space(&t);
        for scale in [0.5, 2.0, 9.0] {
            let c = tree_nagata_cover(&t, scale, 0).unwrap();
            assert!(same_parity_separation(&c, &s) >= scale / 8.0 * (1.0 - 1e-12));
        }
    }
}

#[test]
fn merging_far_parts_is_caught() {
    let mut rng = common::rng(7);
    let t = common::real_tree(&mut rng, 80, 0.5, 2.0);
    let s = common::tree_space(&t);
    let mut c = tree_nagata_cover(&t, 1.0, 0).unwrap();
    // Merge the two parts whose points are furthest apart.
    let (mut bi, mut bj, mut best) = (0, 1, 0.0);
    for i in 0..c.parts.len() {
        for j in i + 1..c.parts.len() {
            let d = s.d(c.parts[i].points[0], c.parts[j].points[0]);
            if d > best {
                (bi, bj, best) = (i, j, d);
            }
        }
    }
    let moved = c.parts[bj].points.clone();
    c.parts[bi].points.extend(moved);
    c.parts.remove(bj);
    let rep = validate_nagata(&c, &s, 1.0, TREE_D, TREE_C).unwrap();
    assert!(!rep.ok);
    assert!(rep.max_diameter > 1.0);
}

#[test]
fn dropped_point_breaks_coverage() {
    let mut rng = common::rng(8);
    let t = common::real_tree(&mut rng, 20, 0.5, 2.0);
    let s = common::tree_space(&t);
    let mut c: Covering = tree_nagata_cover(&t, 2.0, 0).unwrap();
    c.parts.retain(|p| !p.points.contains(&5));
    let rep = validate_nagata(&c, &s, 2.0, TREE_D, TREE_C).unwrap();
    assert!(!rep.covers_all && !rep.ok);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn every_origin_gives_a_valid_cover(seed in any::<u64>(), n in 1usize..60, k in -4i32..6, origin in any::<prop::sample::Index>()) {
        let mut rng = common::rng(seed);
        let t = common::real_tree(&mut rng, n, 0.05, 4.0);
        let s = common::tree_space(&t);
        let scale = 1.7f64.powi(k);
        let c = tree_nagata_cover(&t, scale, origin.index(n)).unwrap();
        let covered: usize = c.parts.iter().map(|p| p.points.len()).sum();
        prop_assert_eq!(covered, n);
        prop_assert!(validate_nagata(&c, &s, scale, TREE_D, TREE_C).unwrap().ok);
    }
}
