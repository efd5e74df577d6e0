mod common;

use lipsel::convex::{contains_polytope, inflate, Polytope};
use lipsel::cores::{
    approx_core, candidate_trees, certify_core_lipschitz, core_directions, core_from_trees, extend_with_leaf,
    glue_trees, o_membership, pullback_problem, CoreBudget, PlacedTree,
};
use lipsel::metric::PseudoSpace;
use lipsel::norm::NormTag;
use lipsel::selection::optimal_lambda;
use lipsel::SelectionProblem;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

fn instance(rng: &mut ChaCha8Rng, n: usize, m: usize) -> SelectionProblem {
    let space = common::int_metric(rng, n, 3);
    let p = common::int_problem(rng, space, m, 1.0);
    let lam = optimal_lambda(&p).unwrap().lambda_star;
    p.with_lambda(lam.max(0.25))
}

fn grid_points(p: &Polytope, step: f64) -> Vec<Vec<f64>> {
    let (lo, hi) = (-8.0, 8.0);
    let k = ((hi - lo) / step) as usize;
    let axis: Vec<f64> = (0..=k).map(|i| lo + step * i as f64).collect();
    let pts: Vec<Vec<f64>> = if p.dim == 1 {
        axis.iter().map(|&a| vec![a]).collect()
    } else {
        axis.iter().flat_map(|&a| axis.iter().map(move |&b| vec![a, b])).collect()
    };
    pts.into_iter().filter(|q| p.contains(q, 0.0)).collect()
}

#[test]
fn glued_membership_restricts_to_parts() {
    let mut rng = common::rng(600);
    let mut positive = 0;
    for case in 0..100 {
        let p = instance(&mut rng, 4, 1 + case % 2);
        let x = rng.gen_range(0..4);
        let trees = candidate_trees(&p, x, 3);
        let parts: Vec<PlacedTree> = (0..rng.gen_range(2..=3)).map(|_| trees.choose(&mut rng).unwrap().clone()).collect();
        let glued = glue_trees(&parts).unwrap();
        let gamma_hat = rng.gen_range(1.0..3.0);
        let mut pts = grid_points(&p.f[x], 0.5);
        pts.shuffle(&mut rng);
        for xi in pts.iter().take(6) {
            if o_membership(&p, &glued, gamma_hat, xi).unwrap() {
                positive += 1;
                for l in &parts {
                    assert!(o_membership(&p, l, gamma_hat, xi).unwrap());
                }
            }
        }
    }
    assert!(positive > 100, "{positive}");
}

#[test]
fn glue_node_count() {
    let mut rng = common::rng(601);
    for _ in 0..100 {
        let p = instance(&mut rng, 5, 1);
        let x = rng.gen_range(0..5);
        let trees = candidate_trees(&p, x, 4);
        let parts: Vec<PlacedTree> = (0..rng.gen_range(1..=4)).map(|_| trees.choose(&mut rng).unwrap().clone()).collect();
        let glued = glue_trees(&parts).unwrap();
        let expected: usize = parts.iter().map(|l| l.len() - 1).sum::<usize>() + 1;
        assert_eq!(glued.len(), expected);
        assert_eq!(glued.edges.len(), expected - 1);
        assert_eq!(glued.base(), x);
        // A valid tree pulls back without error.
        pullback_problem(&p, &glued).unwrap();
    }
}

#[test]
fn glue_of_single_edges_is_a_star() {
    let parts = vec![PlacedTree::path(&[0, 1]), PlacedTree::path(&[0, 2]), PlacedTree::path(&[0, 1])];
    let g = glue_trees(&parts).unwrap();
    assert_eq!(g, PlacedTree::star(0, &[1, 2, 1]));
    assert!(glue_trees(&[PlacedTree::single(0), PlacedTree::single(1)]).is_err());
}

/// `O(x; L)` for m = 1 as an interval, from the two support values.
fn o_interval(p: &SelectionProblem, l: &PlacedTree, gamma_hat: f64) -> (f64, f64) {
    let est = core_from_trees(p, l.base(), gamma_hat, std::slice::from_ref(l), &[vec![1.0], vec![-1.0]]).unwrap();
    let v = lipsel::convex::vertices(&est.outer).unwrap();
    (v[0][0], v[v.len() - 1][0])
}

#[test]
fn extension_stays_near_the_old_root_set() {
    let mut rng = common::rng(602);
    let mut checked = 0;
    for _ in 0..60 {
        let p = instance(&mut rng, 4, 1);
        let x = rng.gen_range(0..4);
        let y = (x + rng.gen_range(1..4)) % 4;
        let gamma_hat = 2.0;
        let trees = candidate_trees(&p, x, 3);
        let l = trees.choose(&mut rng).unwrap().clone();
        let ext = extend_with_leaf(&p, &l, y).unwrap();
        let (lo, hi) = o_interval(&p, &l, gamma_hat);
        let slack = gamma_hat * p.lambda * p.space.d(x, y);
        for eta in grid_points(&p.f[y], 0.25) {
            if o_membership(&p, &ext, gamma_hat, &eta).unwrap() {
                checked += 1;
                assert!(eta[0] >= lo - slack - 1e-9 && eta[0] <= hi + slack + 1e-9);
            }
        }
    }
    assert!(checked > 100);
    let p = instance(&mut common::rng(3), 3, 1);
    assert!(extend_with_leaf(&p, &PlacedTree::single(0), 0).is_err());
}

#[test]
fn more_trees_never_grow_the_estimate() {
    let mut rng = common::rng(603);
    for _ in 0..15 {
        let p = instance(&mut rng, 4, 2);
        let x = rng.gen_range(0..4);
        let trees = candidate_trees(&p, x, 3);
        let dirs = core_directions(&p, 16);
        let mut prev: Option<Polytope> = None;
        for k in [1, 3, 6, 10, trees.len()] {
            let est = core_from_trees(&p, x, 3.0, &trees[..k.min(trees.len())], &dirs).unwrap();
            assert!(contains_polytope(&p.f[x], &est.outer, 1e-9).unwrap());
            if let Some(big) = &prev {
                assert!(contains_polytope(big, &est.outer, 1e-9).unwrap());
            }
            prev = Some(est.outer);
        }
    }
}

#[test]
fn back_and_forth_path_distances() {
    let space = PseudoSpace::new(vec![vec![0.0, 2.5], vec![2.5, 0.0]]).unwrap();
    let p = SelectionProblem::new(space, None, 1, NormTag::Linf, vec![Polytope::cube(&[0.0], &[1.0]); 2], 1.0).unwrap();
    let q = pullback_problem(&p, &PlacedTree::path(&[0, 1, 0])).unwrap();
    assert_eq!((q.space.d(0, 1), q.space.d(1, 2), q.space.d(0, 2)), (2.5, 2.5, 5.0));
    assert!(pullback_problem(&p, &PlacedTree::path(&[0, 0])).is_err());
}

#[test]
fn single_edge_o_set_closed_form() {
    let mut rng = common::rng(604);
    for _ in 0..20 {
        let p = instance(&mut rng, 2, 2);
        let l = PlacedTree::path(&[0, 1]);
        let gamma_hat = rng.gen_range(1.0..2.5);
        let closed = inflate(&p.f[1], gamma_hat * p.lambda * p.space.d(0, 1), p.norm).unwrap().intersect(&p.f[0]).unwrap();
        for xi in grid_points(&p.f[0], 0.25) {
            if closed.violation(&xi).abs() < 1e-9 {
                continue;
            }
            assert_eq!(o_membership(&p, &l, gamma_hat, &xi).unwrap(), closed.contains(&xi, 0.0));
        }
    }
}

#[test]
fn two_point_core_in_one_dimension_is_exact() {
    let mut rng = common::rng(605);
    for _ in 0..20 {
        let p = instance(&mut rng, 2, 1);
        let budget = CoreBudget { max_nodes: 2, max_trees: 8, directions: 2 };
        let est = approx_core(&p, 0, 2.0, budget).unwrap();
        let closed = inflate(&p.f[1], 2.0 * p.lambda * p.space.d(0, 1), p.norm).unwrap().intersect(&p.f[0]).unwrap();
        assert!(contains_polytope(&est.outer, &closed, 1e-9).unwrap());
        assert!(contains_polytope(&closed, &est.outer, 1e-9).unwrap());
    }
}

#[test]
fn single_point_core_is_f() {
    let space = PseudoSpace::new(vec![vec![0.0]]).unwrap();
    let f = Polytope::cube(&[0.0, 1.0], &[2.0, 3.0]);
    let p = SelectionProblem::new(space, None, 2, NormTag::Linf, vec![f.clone()], 1.0).unwrap();
    let est = approx_core(&p, 0, 1.0, CoreBudget::default()).unwrap();
    assert!(contains_polytope(&est.outer, &f, 1e-12).unwrap());
}

#[test]
fn certificate_examples() {
    let space = PseudoSpace::new(vec![vec![0.0, 2.0], vec![2.0, 0.0]]).unwrap();
    let same = vec![Polytope::cube(&[0.0, 0.0], &[1.0, 1.0]); 2];
    let p = SelectionProblem::new(space.clone(), None, 2, NormTag::Linf, same, 1.0).unwrap();
    let est: Vec<_> = (0..2).map(|x| approx_core(&p, x, 2.0, CoreBudget::default()).unwrap()).collect();
    assert!(certify_core_lipschitz(&est, &p, 2.0).unwrap().max_ratio < 1e-12);

    let pts = vec![Polytope::point(&[0.0, 0.0]), Polytope::point(&[3.0, 1.0])];
    let p = SelectionProblem::new(space, None, 2, NormTag::Linf, pts, 1.5).unwrap();
    let est: Vec<_> = (0..2).map(|x| approx_core(&p, x, 2.0, CoreBudget::default()).unwrap()).collect();
    let cert = certify_core_lipschitz(&est, &p, 2.0).unwrap();
    assert!((cert.max_ratio - 1.0).abs() < 1e-9, "{cert:?}");
}
