mod common;

use proptest::prelude::*;
use rand::Rng;

use common::{close_rel, random_frame, rng};
use tubeloc::appearance::{
    appearance_affinity, hough_vote, match_confidence, phi_appearance, region_saliency, standout,
    strictly_contained, RegionSet,
};
use tubeloc::synth::brute_force_phm;
use tubeloc::Config;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn production_matches_naive_phm(seed in any::<u64>()) {
        let mut r = rng(seed);
        let (nt, nu) = (r.random_range(1..=12), r.random_range(1..=12));
        let ft = random_frame(&mut r, nt, 8);
        let fu = random_frame(&mut r, nu, 8);
        let (rt, ru) = (RegionSet::whole(&ft), RegionSet::whole(&fu));
        let config = Config::default();
        let oracle = brute_force_phm(&rt, &ru, &config).unwrap();
        let grid = hough_vote(&rt, &ru, &config).unwrap();
        let table = match_confidence(&rt, &ru, &config).unwrap();
        for (a, b) in grid.votes.iter().zip(&oracle.grid.votes) {
            prop_assert!(close_rel(*a, *b, 1e-12), "vote {a} vs {b}");
        }
        for (a, b) in table.scores.iter().zip(&oracle.table.scores) {
            prop_assert!(close_rel(*a, *b, 1e-12), "confidence {a} vs {b}");
        }
    }

    #[test]
    fn confidence_is_symmetric_under_swap(seed in any::<u64>()) {
        let mut r = rng(seed);
        let (nt, nu) = (r.random_range(1..=8), r.random_range(1..=8));
        let ft = random_frame(&mut r, nt, 8);
        let fu = random_frame(&mut r, nu, 8);
        let config = Config::default();
        let ab = match_confidence(&RegionSet::whole(&ft), &RegionSet::whole(&fu), &config).unwrap();
        let ba = match_confidence(&RegionSet::whole(&fu), &RegionSet::whole(&ft), &config).unwrap();
        for i in 0..nt {
            for j in 0..nu {
                prop_assert!(close_rel(ab.get(i, j), ba.get(j, i), 1e-12));
            }
        }
    }

    #[test]
    fn saliency_grows_with_neighbors(seed in any::<u64>()) {
        let mut r = rng(seed);
        let q = random_frame(&mut r, 6, 8);
        let n1 = random_frame(&mut r, 5, 8);
        let n2 = random_frame(&mut r, 7, 8);
        let config = Config::default();
        let query = RegionSet::whole(&q);
        let one = region_saliency(&query, &[RegionSet::whole(&n1)], &config).unwrap();
        let two = region_saliency(&query, &[RegionSet::whole(&n1), RegionSet::whole(&n2)], &config).unwrap();
        for (a, b) in one.iter().zip(&two) {
            prop_assert!(*a >= 0.0 && b >= a);
        }
    }

    #[test]
    fn phi_is_rescaled_per_frame(seed in any::<u64>()) {
        let mut r = rng(seed);
        let n = r.random_range(1..=10);
        let q = random_frame(&mut r, n, 8);
        let nb = random_frame(&mut r, 6, 8);
        let s = phi_appearance(&RegionSet::whole(&q), &[RegionSet::whole(&nb)], &Config::default()).unwrap();
        let lo = s.phi.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = s.phi.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(s.phi.iter().all(|v| (0.0..=1.0).contains(v)));
        let degenerate = s.standout.iter().all(|v| *v == s.standout[0]);
        if degenerate {
            prop_assert!(s.phi.iter().all(|v| *v == 0.0));
        } else {
            prop_assert_eq!((lo, hi), (0.0, 1.0));
        }
    }

    #[test]
    fn box_is_never_its_own_container(seed in any::<u64>()) {
        let mut r = rng(seed);
        let f = random_frame(&mut r, 1, 4);
        let b = f.proposals[0].bbox;
        let config = Config::default();
        prop_assert!(!strictly_contained(&b, &b, &config));
        prop_assert_eq!(standout(&[b, b], &[3.0, 1.0], &config), vec![3.0, 1.0]);
    }
}

#[test]
fn single_pair_closed_form() {
    let mut r = rng(11);
    let config = Config::default();
    for _ in 0..20 {
        let ft = random_frame(&mut r, 1, 8);
        let fu = random_frame(&mut r, 1, 8);
        let (a, b) = (&ft.proposals[0], &fu.proposals[0]);
        let affinity =
            appearance_affinity(a.descriptor.as_slice(), b.descriptor.as_slice(), 1.0).unwrap();
        let loc = |f: &tubeloc::Frame, p: &tubeloc::Proposal| {
            let (cx, cy) = p.bbox.center();
            [
                cx / f.width,
                cy / f.height,
                0.5 * (p.bbox.area() / (f.width * f.height)).ln(),
            ]
        };
        let (la, lb) = (loc(&ft, a), loc(&fu, b));
        let off = [la[0] - lb[0], la[1] - lb[1], la[2] - lb[2]];
        let bw = config.hough.bandwidth();
        let centers = config.hough.axis_centers();
        let mut sum_sq = 0.0;
        for &u in &centers[0] {
            for &v in &centers[1] {
                for &s in &centers[2] {
                    let q = ((off[0] - u) / bw[0]).powi(2)
                        + ((off[1] - v) / bw[1]).powi(2)
                        + ((off[2] - s) / bw[2]).powi(2);
                    sum_sq += (-q).exp();
                }
            }
        }
        let expected = affinity * affinity * sum_sq;
        let got = match_confidence(&RegionSet::whole(&ft), &RegionSet::whole(&fu), &config)
            .unwrap()
            .get(0, 0);
        assert!(close_rel(got, expected, 1e-12), "{got} vs {expected}");
    }
}

#[test]
fn zero_affinity_pairs_contribute_nothing() {
    let mut r = rng(5);
    let ft = random_frame(&mut r, 3, 8);
    let fu = random_frame(&mut r, 4, 8);
    let config = Config {
        affinity_gamma: 1e6,
        ..Config::default()
    };
    let oracle = brute_force_phm(&RegionSet::whole(&ft), &RegionSet::whole(&fu), &config).unwrap();
    assert!(oracle.grid.votes.iter().all(|v| *v == 0.0));
    assert!(oracle.table.scores.iter().all(|v| *v == 0.0));
}

#[test]
fn oracle_guard() {
    let mut r = rng(1);
    let ft = random_frame(&mut r, 101, 2);
    let fu = random_frame(&mut r, 100, 2);
    let err = brute_force_phm(
        &RegionSet::whole(&ft),
        &RegionSet::whole(&fu),
        &Config::default(),
    )
    .unwrap_err();
    assert!(matches!(err, tubeloc::Error::OracleGuard(_)));
}
