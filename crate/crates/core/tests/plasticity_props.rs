mod common;

use fermat_plasticity::angles::RaySystem;
use fermat_plasticity::forward::{self, BoundaryConfiguration, SolverOptions};
use fermat_plasticity::geom::{self, PlaneFrame, Point};
use fermat_plasticity::inverse;
use fermat_plasticity::plasticity::{self, PlasticityError};
use proptest::prelude::*;
use rand::Rng;

fn solve_point(config: &BoundaryConfiguration) -> Point {
    forward::solve(config, SolverOptions::default()).unwrap().point
}

fn budget(rng: &mut rand_chacha::ChaCha8Rng) -> (f64, f64) {
    let c = rng.gen_range(0.5..2.0);
    (c, rng.gen_range(-0.5..0.5) * c)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn hexahedron_sweep_keeps_the_junction(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let (c, residual) = budget(&mut rng);
        let split = plasticity::equal_split(residual);
        let (v, a0) = common::hexahedron(&mut rng, c, residual);
        let iv = plasticity::feasible_b5_interval(&v, a0, c, residual, split).unwrap();
        for b5 in iv.samples(20, c) {
            let state = plasticity::hexahedron_plasticity(&v, a0, c, residual, split, b5).unwrap();
            prop_assert!(solve_point(&state.configuration(&v).unwrap()).distance(&a0) < 1e-6);
            let fixed = state.conserving();
            prop_assert!(fixed.budget_defect().abs() <= 1e-12 * c);
            prop_assert!(fixed.balance_defect().abs() <= 1e-12 * c);
            prop_assert!((fixed.weights[3] - (c - fixed.residual) / 2.0).abs() <= 1e-12 * c);
            prop_assert!(solve_point(&fixed.configuration(&v).unwrap()).distance(&a0) < 1e-6);
        }
    }

    #[test]
    fn quadrilateral_sweep_keeps_the_junction(seed in any::<u64>(), c in 0.5..2.0f64) {
        let mut rng = common::rng(seed);
        let (v, a0) = common::quadrilateral(&mut rng);
        let iv = plasticity::feasible_b4_interval(&v, a0, c).unwrap();
        let samples = iv.samples(20, c);
        prop_assert_eq!(samples.len(), 20);
        for b4 in samples {
            let state = plasticity::quadrilateral_plasticity(&v, a0, c, b4).unwrap();
            prop_assert!(solve_point(&state.configuration(&v).unwrap()).distance(&a0) < 1e-6);
            prop_assert!(state.budget_defect().abs() <= 1e-12 * c);
            prop_assert!(state.balance_defect().abs() <= 1e-12 * c);
        }
    }

    #[test]
    fn zero_fifth_weight_is_the_tetrahedron(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let (c, residual) = budget(&mut rng);
        let split = plasticity::equal_split(residual);
        let (v, a0) = common::hexahedron(&mut rng, c, residual);
        let rays = RaySystem::from_points(a0, &v[..4]).unwrap();
        let Ok(tetra) = inverse::mixed_inverse_tetrahedron(&rays, c, residual) else {
            // the junction is outside A₁A₂A₃A₄, where the tetrahedron has no inverse
            return Ok(());
        };
        let state = plasticity::hexahedron_plasticity(&v, a0, c, residual, split, 0.0).unwrap();
        prop_assert_eq!(state.weights[4], 0.0);
        for (h, t) in state.weights.iter().zip(&tetra.weights) {
            prop_assert!((h - t).abs() <= 1e-9 * c, "{h} vs {t}");
        }
    }

    #[test]
    fn residual_split_does_not_change_weights(seed in any::<u64>(), t in 0.0..1.0f64) {
        let mut rng = common::rng(seed);
        let (c, residual) = budget(&mut rng);
        let (v, a0) = common::hexahedron(&mut rng, c, residual);
        let even = plasticity::equal_split(residual);
        let skew = [residual * t, residual * (1.0 - t) / 2.0, residual * (1.0 - t) / 2.0];
        let iv = plasticity::feasible_b5_interval(&v, a0, c, residual, even).unwrap();
        let b5 = iv.samples(1, c)[0];
        let a = plasticity::hexahedron_plasticity(&v, a0, c, residual, even, b5).unwrap();
        let b = plasticity::hexahedron_plasticity(&v, a0, c, residual, skew, b5).unwrap();
        for (x, y) in a.weights.iter().zip(&b.weights) {
            prop_assert!((x - y).abs() <= 1e-12 * c);
        }
    }

    #[test]
    fn mirroring_the_fifth_vertex_flips_its_sign(seed in any::<u64>(), plane in 0usize..3) {
        let mut rng = common::rng(seed);
        let (c, residual) = budget(&mut rng);
        let split = plasticity::equal_split(residual);
        let (v, a0) = common::hexahedron(&mut rng, c, residual);
        let (j, k) = [(1, 2), (0, 2), (0, 1)][plane];
        let before = plasticity::feasible_b5_interval(&v, a0, c, residual, split).unwrap();
        let b5 = before.samples(1, c)[0];
        let state = plasticity::hexahedron_plasticity(&v, a0, c, residual, split, b5).unwrap();
        let frame = PlaneFrame::new(a0, v[j], v[k], j, k).unwrap();
        let mut mirrored = v;
        mirrored[4] = frame.reflect(v[4]);
        let flipped = match plasticity::feasible_b5_interval(&mirrored, a0, c, residual, split) {
            Ok(iv) if !iv.is_empty() => iv,
            // mirrored data can leave the junction outside the hull or
            // with no positive weights; nothing to compare then
            Ok(_) | Err(PlasticityError::NotInterior) | Err(PlasticityError::SignDegenerate { .. }) => return Ok(()),
            Err(e) => return Err(TestCaseError::fail(e.to_string())),
        };
        let b5 = flipped.samples(1, c)[0];
        let other = plasticity::hexahedron_plasticity(&mirrored, a0, c, residual, split, b5).unwrap();
        prop_assert_eq!(other.signs.get(4, j, k), state.signs.get(4, j, k).map(|s| -s));
        prop_assert!(solve_point(&other.configuration(&mirrored).unwrap()).distance(&a0) < 1e-6);
    }

    #[test]
    fn transport_keeps_directions_and_junction(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let config = common::floating_configuration(&mut rng);
        let scales: Vec<f64> = (0..config.len()).map(|_| rng.gen_range(0.5..2.0)).collect();
        let t = plasticity::geometric_plasticity_transport(&config, &scales, SolverOptions::default()).unwrap();
        prop_assert!(t.deviation < 1e-7);
        for (a, b) in config.vertices().iter().zip(t.config.vertices()) {
            let u = geom::unit_vector(t.junction, *a).unwrap();
            let w = geom::unit_vector(t.junction, *b).unwrap();
            prop_assert!((u.components() - w.components()).norm() < 1e-12);
        }
    }
}
