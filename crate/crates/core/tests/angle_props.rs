mod common;

use fermat_plasticity::angles::AngleSystem;
use fermat_plasticity::geom::Point;
use proptest::prelude::*;

/// Junction and 4 or 5 vertices in general position.
fn rays(seed: u64, n: usize) -> (Point, Vec<Point>) {
    let mut rng = common::rng(seed);
    loop {
        let a0 = common::cube_point(&mut rng, 0.5);
        let v: Vec<Point> = (0..n).map(|_| a0 + common::unit(&mut rng)).collect();
        let u: Vec<Point> = v.iter().map(|p| *p - a0).collect();
        let sin12 = u[0].cross(&u[1]).norm();
        let off_plane = u[2..].iter().all(|w| (w.dot(&u[0].cross(&u[1])) / sin12).abs() > 0.05);
        if sin12 > 0.1 && off_plane {
            return (a0, v);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn measured_angles_reconstruct_the_rays(seed in any::<u64>(), five in any::<bool>()) {
        let (a0, v) = rays(seed, if five { 5 } else { 4 });
        let (system, bits) = AngleSystem::measure(a0, &v).unwrap();
        let rebuilt = system.reconstruct_rays(&bits).unwrap();
        let direct: Vec<Point> = v.iter().map(|p| (*p - a0) * (1.0 / p.distance(&a0))).collect();
        for i in 0..v.len() {
            for j in 0..v.len() {
                let d = rebuilt.directions[i].dot(&rebuilt.directions[j]) - direct[i].dot(&direct[j]);
                prop_assert!(d.abs() < 1e-9, "pair ({i},{j}) off by {d}");
            }
        }
    }

    #[test]
    fn resolved_roots_solve_the_quadratic(seed in any::<u64>()) {
        let (a0, v) = rays(seed, 5);
        let (system, bits) = AngleSystem::measure(a0, &v).unwrap();
        let cos = system.resolve_root(2, 3, &bits).unwrap();
        let residual = system.quadratic_residual(2, 3, cos).unwrap();
        prop_assert!(residual.abs() < 1e-9);
        let (a, b) = system.candidate_cosines(2, 3).unwrap();
        prop_assert!(system.quadratic_residual(2, 3, a).unwrap().abs() < 1e-9);
        prop_assert!(system.quadratic_residual(2, 3, b).unwrap().abs() < 1e-9);
    }

    #[test]
    fn flipping_a_bit_swaps_the_roots(seed in any::<u64>()) {
        let (a0, v) = rays(seed, 5);
        let (system, bits) = AngleSystem::measure(a0, &v).unwrap();
        let (a, b) = system.candidate_cosines(2, 3).unwrap();
        let same = system.resolve_root(2, 3, &bits).unwrap();
        let mut other = bits.clone();
        other[1] = -other[1];
        let flipped = system.resolve_root(2, 3, &other).unwrap();
        let pair_matches = ((same - a).abs() < 1e-12 && (flipped - b).abs() < 1e-12)
            || ((same - b).abs() < 1e-12 && (flipped - a).abs() < 1e-12);
        prop_assert!(pair_matches);
    }

    #[test]
    fn resolved_root_is_the_dot_product(seed in any::<u64>()) {
        let (a0, v) = rays(seed, 5);
        let (system, bits) = AngleSystem::measure(a0, &v).unwrap();
        let u: Vec<Point> = v.iter().map(|p| (*p - a0) * (1.0 / p.distance(&a0))).collect();
        for (i, j) in [(2, 3), (2, 4), (3, 4)] {
            prop_assert!((system.resolve_root(i, j, &bits).unwrap() - u[i].dot(&u[j])).abs() < 1e-9);
        }
    }

    #[test]
    fn swapping_the_last_two_labels_keeps_their_roots(seed in any::<u64>()) {
        let (a0, mut v) = rays(seed, 5);
        let (system, _) = AngleSystem::measure(a0, &v).unwrap();
        v.swap(3, 4);
        let (swapped, _) = AngleSystem::measure(a0, &v).unwrap();
        let (a, b) = system.candidate_cosines(3, 4).unwrap();
        let (c, d) = swapped.candidate_cosines(3, 4).unwrap();
        prop_assert!((a - c).abs() < 1e-12 && (b - d).abs() < 1e-12);
    }

    #[test]
    fn polar_offsets_lie_in_unit_range(seed in any::<u64>()) {
        let (a0, v) = rays(seed, 4);
        let (system, _) = AngleSystem::measure(a0, &v).unwrap();
        for cos2 in (2..4).map(|r| system.polar_cos2(r)) {
            prop_assert!((-1e-12..=1.0 + 1e-12).contains(&cos2));
        }
    }
}
