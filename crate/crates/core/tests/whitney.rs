mod common;

use lipsel::metric::{MetricTree, PseudoSpace};
use lipsel::nagata::CoverProvider;
use lipsel::norm::NormTag;
use lipsel::patch::{measure_constants, patch, PatchAtom};
use lipsel::whitney::{build_whitney, measure_partition, rooted_lengthscale, Lengthscale, WhitneyPartition, DEFAULT_BIG_A};
use lipsel::Error;
use rand::Rng;

fn tree_partition(t: &MetricTree) -> (PseudoSpace, Lengthscale, WhitneyPartition) {
    let s = common::tree_space(t);
    let ls = rooted_lengthscale(&s, 0);
    let p = CoverProvider::tree(t, 0).unwrap();
    let w = build_whitney(&s, &p, &ls, 1.0 / (4.0 * ls.c_ls), DEFAULT_BIG_A).unwrap();
    (s, ls, w)
}

fn check_bullets(s: &PseudoSpace, ls: &Lengthscale, w: &WhitneyPartition) {
    let n = s.len();
    let mut sum = vec![0.0; n];
    let mut count = vec![0usize; n];
    let mut whole = vec![false; n];
    for at in &w.atoms {
        assert_eq!(at.r, ls.r[at.center]);
        let phi = at.phi_dense(n);
        let theta = at.theta_dense(n);
        for x in 0..n {
            assert!(phi[x] >= 0.0);
            if phi[x] > 0.0 {
                assert!(s.d(x, at.center) < w.a * at.r);
                count[x] += 1;
            }
            sum[x] += phi[x];
            for y in 0..n {
                let d = s.d(x, y);
                if d > 0.0 {
                    assert!((phi[x] - phi[y]).abs() <= w.c_wh * d / at.r * (1.0 + 1e-12));
                }
            }
        }
        for &x in &at.part {
            assert_eq!(theta[x], 1.0);
            whole[x] = true;
        }
    }
    assert!(sum.iter().all(|v| (v - 1.0).abs() <= 1e-9));
    assert!(count.iter().all(|&c| c <= w.d_star));
    assert!(w.d_star <= 64);
    assert!(w.c_wh.is_finite());
    assert!(whole.iter().all(|&b| b), "some point lies in no relevant part");
    assert!(w.theta_sum_range.0 >= 1.0);
    assert!(w.max_scale_ratio.is_finite());
}

#[test]
fn hundred_node_tree_bullets() {
    let mut rng = common::rng(21);
    let t = common::real_tree(&mut rng, 100, 0.1, 3.0);
    let (s, ls, w) = tree_partition(&t);
    check_bullets(&s, &ls, &w);
    let m = measure_partition(&w, &s);
    assert_eq!((m.d_star, m.c_wh), (w.d_star, w.c_wh));
    assert!(m.sum_err <= 1e-9);
}

#[test]
fn rebuild_is_deterministic() {
    let mut rng = common::rng(22);
    let t = common::real_tree(&mut rng, 60, 0.1, 3.0);
    let (_, _, a) = tree_partition(&t);
    let (_, _, b) = tree_partition(&t);
    assert_eq!(a, b);
}

#[test]
fn two_point_closed_form() {
    let t = MetricTree::from_edges(2, &[(0, 1, 1.0)]);
    let s = common::tree_space(&t);
    let ls = Lengthscale { r: vec![10.0, 10.0], c_ls: 1.0 };
    let p = CoverProvider::tree(&t, 0).unwrap();
    let w = build_whitney(&s, &p, &ls, 0.25, DEFAULT_BIG_A).unwrap();
    // Scales lie in [10/A^3, 10/A] so every part is a singleton and θ
    // reaches at most c·s/256 < 1 from it: each point sees only its own parts.
    for at in &w.atoms {
        assert_eq!(at.part.len(), 1);
        assert_eq!(at.phi.len(), 1);
        assert_eq!(at.phi[0].0, at.center);
    }
    let m = measure_partition(&w, &s);
    assert!(m.sum_err <= 1e-12);
}

fn random_patch_case(seed: u64) -> (PseudoSpace, Vec<PatchAtom>, f64) {
    let mut rng = common::rng(seed);
    let n = rng.gen_range(10..40);
    let t = common::real_tree(&mut rng, n, 0.2, 2.0);
    let (s, ls, w) = tree_partition(&t);
    // A 1-Lipschitz global map plus a bounded per-atom offset.
    let g: Vec<f64> = (0..n).map(|x| s.d(x, 0) * if x % 2 == 0 { 0.5 } else { 1.0 }).collect();
    let atoms = w
        .atoms
        .iter()
        .map(|at| {
            let off = rng.gen_range(-0.5..0.5) * at.r;
            let ball = s.ball(at.center, at.r);
            let mut local = vec![None; n];
            for &x in &ball {
                local[x] = Some(vec![g[x] + off]);
            }
            PatchAtom { center: at.center, r: at.r, theta: at.phi_dense(n), eta: vec![g[at.center] + off], local }
        })
        .collect();
    (s, atoms, ls.c_ls)
}

#[test]
fn patched_maps_meet_the_tracked_bound() {
    for seed in 0..10 {
        let (s, atoms, c_ls) = random_patch_case(300 + seed);
        let k = measure_constants(&s, &atoms, c_ls, NormTag::Linf);
        let out = patch(&s, &atoms, &k, NormTag::Linf).unwrap();
        assert!(out.c_out <= out.bound, "seed {seed}: {} > {}", out.c_out, out.bound);
        // Pointwise convex combination of the active local values.
        for x in 0..s.len() {
            let vals: Vec<f64> = atoms
                .iter()
                .filter(|a| a.theta[x] > 0.0)
                .map(|a| a.local[x].as_ref().unwrap()[0])
                .collect();
            let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            assert!(lo - 1e-12 <= out.f[x][0] && out.f[x][0] <= hi + 1e-12);
        }
    }
}

#[test]
fn two_constant_atoms_bound() {
    let s = PseudoSpace::new(vec![vec![0.0, 2.0], vec![2.0, 0.0]]).unwrap();
    let (e1, e2) = (vec![1.0, -1.0], vec![2.5, 0.0]);
    let atoms = vec![
        PatchAtom { center: 0, r: 40.0, theta: vec![0.75, 0.25], eta: e1.clone(), local: vec![Some(e1.clone()), Some(e1.clone())] },
        PatchAtom { center: 1, r: 40.0, theta: vec![0.25, 0.75], eta: e2.clone(), local: vec![Some(e2.clone()), Some(e2.clone())] },
    ];
    let k = measure_constants(&s, &atoms, 1.0, NormTag::L1);
    let out = patch(&s, &atoms, &k, NormTag::L1).unwrap();
    // F(x) - F(y) = (θ1(x) - θ1(y)) (η1 - η2), so the quotient is 0.5·‖η1-η2‖/d.
    let expected = 0.5 * NormTag::L1.dist(&e1, &e2) / 2.0;
    assert!((out.c_out - expected).abs() < 1e-12);
    assert!(out.c_out <= NormTag::L1.dist(&e1, &e2) / 2.0);
}

#[test]
fn corrupted_weights_are_rejected() {
    let (s, mut atoms, c_ls) = random_patch_case(400);
    let k = measure_constants(&s, &atoms, c_ls, NormTag::Linf);
    let c = atoms[0].center;
    atoms[0].theta[c] *= 0.5;
    assert!(matches!(patch(&s, &atoms, &k, NormTag::Linf), Err(Error::Patch { .. })));
}
