mod common;

use proptest::prelude::*;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use common::{random_box, rng};
use tubeloc::consistency::{psi_appearance, psi_motion};
use tubeloc::motion::{cluster_weight, motion_coherence, FrameTracks, TrackPoint};
use tubeloc::BBox;

fn random_tracks(r: &mut ChaCha8Rng, w: f64, h: f64) -> FrameTracks {
    let n = r.random_range(0..60);
    FrameTracks::new(
        (0..n)
            .map(|i| TrackPoint {
                track_id: i,
                cluster: r.random_range(0..4),
                x: r.random_range(0.0..=w),
                y: r.random_range(0.0..=h),
            })
            .collect(),
    )
}

fn scale_box(b: &BBox, s: f64) -> BBox {
    BBox::new(b.x_min * s, b.y_min * s, b.width * s, b.height * s).unwrap()
}

fn point_in(r: &mut ChaCha8Rng, b: &BBox) -> (f64, f64) {
    (
        b.x_min + r.random_range(0.01..0.99) * b.width,
        b.y_min + r.random_range(0.01..0.99) * b.height,
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn weights_and_coherence_in_range(seed in any::<u64>()) {
        let mut r = rng(seed);
        let tracks = random_tracks(&mut r, 320.0, 240.0);
        let b = random_box(&mut r, 320.0, 240.0);
        for l in 0..5 {
            let w = cluster_weight(l, &b, &tracks);
            prop_assert!((0.0..=1.0).contains(&w));
        }
        let phi = motion_coherence(&b, &tracks);
        prop_assert!((0.0..=4.0).contains(&phi));
    }

    #[test]
    fn enlarging_never_lowers_weights(seed in any::<u64>()) {
        let mut r = rng(seed);
        let tracks = random_tracks(&mut r, 320.0, 240.0);
        let b = random_box(&mut r, 320.0, 240.0);
        let (dl, dt) = (r.random_range(0.0..=b.x_min), r.random_range(0.0..=b.y_min));
        let big = BBox::new(
            b.x_min - dl,
            b.y_min - dt,
            b.width + dl + r.random_range(0.0..=(320.0 - b.x_max())),
            b.height + dt + r.random_range(0.0..=(240.0 - b.y_max())),
        )
        .unwrap();
        for l in 0..4 {
            prop_assert!(cluster_weight(l, &big, &tracks) >= cluster_weight(l, &b, &tracks));
        }
    }

    #[test]
    fn coherence_invariant_to_uniform_scaling(seed in any::<u64>(), k in -3i32..=3) {
        let mut r = rng(seed);
        let tracks = random_tracks(&mut r, 320.0, 240.0);
        let b = random_box(&mut r, 320.0, 240.0);
        let s = 2f64.powi(k);
        let scaled = FrameTracks::new(
            tracks.points.iter().map(|p| TrackPoint { x: p.x * s, y: p.y * s, ..*p }).collect(),
        );
        prop_assert_eq!(motion_coherence(&b, &tracks), motion_coherence(&scale_box(&b, s), &scaled));
    }

    #[test]
    fn cluster_outside_box_contributes_nothing(seed in any::<u64>()) {
        let mut r = rng(seed);
        let tracks = random_tracks(&mut r, 320.0, 240.0);
        let b = random_box(&mut r, 320.0, 240.0);
        let moved = FrameTracks::new(
            tracks
                .points
                .iter()
                .map(|p| if p.cluster == 1 { TrackPoint { x: p.x + 1000.0, ..*p } } else { *p })
                .collect(),
        );
        prop_assert_eq!(cluster_weight(1, &b, &moved), 0.0);
    }

    #[test]
    fn psi_motion_range(seed in any::<u64>()) {
        let mut r = rng(seed);
        let a = random_box(&mut r, 320.0, 240.0);
        let b = random_box(&mut r, 320.0, 240.0);
        let n = r.random_range(0..10);
        let pairs: Vec<_> = (0..n).map(|_| (point_in(&mut r, &a), point_in(&mut r, &b))).collect();
        let psi = psi_motion(&a, &b, pairs.iter().copied(), -2.0);
        if n == 0 {
            prop_assert_eq!(psi, -2.0);
        } else {
            prop_assert!((-1.0..=0.0).contains(&psi));
        }
    }

    #[test]
    fn psi_motion_affine_invariant(seed in any::<u64>()) {
        let mut r = rng(seed);
        let a = random_box(&mut r, 320.0, 240.0);
        let b = random_box(&mut r, 320.0, 240.0);
        let n = r.random_range(1..10);
        let pairs: Vec<_> = (0..n).map(|_| (point_in(&mut r, &a), point_in(&mut r, &b))).collect();
        let mut map = || {
            let (sx, sy) = (r.random_range(0.1..10.0), r.random_range(0.1..10.0));
            let (tx, ty) = (r.random_range(-500.0..500.0), r.random_range(-500.0..500.0));
            move |(x, y): (f64, f64)| (sx * x + tx, sy * y + ty)
        };
        let (fa, fb) = (map(), map());
        let warp = |b: &BBox, f: &dyn Fn((f64, f64)) -> (f64, f64)| {
            let (x0, y0) = f((b.x_min, b.y_min));
            let (x1, y1) = f((b.x_max(), b.y_max()));
            BBox { x_min: x0, y_min: y0, width: x1 - x0, height: y1 - y0 }
        };
        let moved: Vec<_> = pairs.iter().map(|&(p, q)| (fa(p), fb(q))).collect();
        let before = psi_motion(&a, &b, pairs.iter().copied(), -2.0);
        let after = psi_motion(&warp(&a, &fa), &warp(&b, &fb), moved, -2.0);
        prop_assert!((before - after).abs() < 1e-9);
    }

    #[test]
    fn psi_motion_symmetric(seed in any::<u64>()) {
        let mut r = rng(seed);
        let a = random_box(&mut r, 320.0, 240.0);
        let b = random_box(&mut r, 320.0, 240.0);
        let n = r.random_range(0..10);
        let pairs: Vec<_> = (0..n).map(|_| (point_in(&mut r, &a), point_in(&mut r, &b))).collect();
        let fwd = psi_motion(&a, &b, pairs.iter().copied(), -2.0);
        let back = psi_motion(&b, &a, pairs.iter().map(|&(p, q)| (q, p)), -2.0);
        prop_assert_eq!(fwd, back);
    }

    #[test]
    fn psi_appearance_rescaled(raw in prop::collection::vec(-2.0f64..0.0, 1..40)) {
        let s = psi_appearance(&raw);
        prop_assert!(s.iter().all(|v| (0.0..=1.0).contains(v)));
    }
}
