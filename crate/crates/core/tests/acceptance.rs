//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line for
//! each, and exits nonzero if any fails.

mod common;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use fermat_plasticity::angles::{AngleSystem, RaySystem};
use fermat_plasticity::forward::{self, BoundaryConfiguration, FtCase, SolverOptions};
use fermat_plasticity::geom::Point;
use fermat_plasticity::inverse::{self, DistanceElimination};
use fermat_plasticity::oracle;
use fermat_plasticity::plasticity;
use rand::Rng;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

fn opts() -> SolverOptions {
    SolverOptions::default()
}

fn solve_point(vertices: &[Point], weights: &[f64]) -> Point {
    let config = BoundaryConfiguration::new(vertices.to_vec(), weights.to_vec()).expect("valid configuration");
    forward::solve(&config, opts()).expect("solver converges").point
}

/// Regular simplex: weights 1/4 at residual 1/2 and roots {−1/3, 1}.
fn simplex_fixed_point() -> Outcome {
    let start = Instant::now();
    let a = (-1.0f64 / 3.0).acos();
    let sys = AngleSystem::tetrahedral(a, a, a, a, a).unwrap();
    let rays = sys.reconstruct_rays(&[1, -1]).unwrap();
    let set = inverse::mixed_inverse_tetrahedron(&rays, 1.0, 0.5).unwrap();
    let (r1, r2) = sys.candidate_cosines(2, 3).unwrap();
    let elapsed = start.elapsed();

    let w_err = set.weights.iter().map(|w| (w - 0.25).abs()).fold(0.0, f64::max);
    let mut roots = [r1, r2];
    roots.sort_by(f64::total_cmp);
    let r_err = (roots[0] + 1.0 / 3.0).abs().max((roots[1] - 1.0).abs());
    outcome(
        w_err <= 1e-12 && r_err <= 1e-12 && elapsed < Duration::from_millis(1),
        format!("weight err {w_err:.1e}, root err {r_err:.1e}, {elapsed:?}"),
    )
}

/// Symmetric triangle: weights 1/3 at residual 1/3.
fn triangle_fixed_point() -> Outcome {
    let start = Instant::now();
    let a = 120f64.to_radians();
    let set = inverse::mixed_inverse_triangle(a, a, 1.0, 1.0 / 3.0).unwrap();
    let elapsed = start.elapsed();
    let err = set.weights.iter().map(|w| (w - 1.0 / 3.0).abs()).fold(0.0, f64::max);
    outcome(err <= 1e-12 && elapsed < Duration::from_millis(1), format!("weight err {err:.1e}, {elapsed:?}"))
}

/// The conserving residual turns the mixed inverse into the classical one.
fn unique_residual_equivalence() -> Outcome {
    let mut rng = common::rng(3);
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let (v, a0) = common::tetrahedron_with_interior(&mut rng);
        let c = rng.gen_range(0.5..5.0);
        let rays = RaySystem::from_points(a0, &v).unwrap();
        let r = inverse::residual_for_unique_inverse_tetra(&rays, c).unwrap();
        let mixed = inverse::mixed_inverse_tetrahedron(&rays, c, r).unwrap();
        let classical = inverse::classical_inverse_tetrahedron(&rays, c).unwrap();
        for (m, k) in mixed.weights.iter().zip(classical) {
            worst = worst.max((m - k).abs() / c);
        }
    }
    for _ in 0..200 {
        let (v, a0) = common::triangle_with_interior(&mut rng);
        let c = rng.gen_range(0.5..5.0);
        let (a102, a103, a203) = inverse::triangle_angles(a0, &v).unwrap();
        let r = inverse::residual_for_unique_inverse_triangle(a102, a103, c).unwrap();
        let mixed = inverse::mixed_inverse_triangle(a102, a103, c, r).unwrap();
        let classical = inverse::classical_inverse_triangle(a102, a103, a203, c).unwrap();
        for (m, k) in mixed.weights.iter().zip(classical) {
            worst = worst.max((m - k).abs() / c);
        }
    }
    outcome(worst <= 1e-10, format!("max weight difference {worst:.1e} over 200 + 200 instances"))
}

/// Inverse weights put the forward solution back on the junction.
fn inverse_round_trip() -> Outcome {
    let start = Instant::now();
    let mut rng = common::rng(4);
    let (mut tetra, mut tri): (f64, f64) = (0.0, 0.0);
    for _ in 0..500 {
        let (v, a0) = common::tetrahedron_with_interior(&mut rng);
        let rays = RaySystem::from_points(a0, &v).unwrap();
        let set = inverse::inverse_tetrahedron(&rays, 1.0).unwrap();
        tetra = tetra.max(solve_point(&v, &set.weights).distance(&a0));
    }
    for _ in 0..500 {
        let (v, a0) = common::triangle_with_interior(&mut rng);
        let (a102, a103, _) = inverse::triangle_angles(a0, &v).unwrap();
        let r = inverse::residual_for_unique_inverse_triangle(a102, a103, 1.0).unwrap();
        let set = inverse::mixed_inverse_triangle(a102, a103, 1.0, r).unwrap();
        tri = tri.max(solve_point(&v, &set.weights).distance(&a0));
    }
    let elapsed = start.elapsed();
    outcome(
        tetra <= 1e-7 && tri <= 1e-8 && elapsed < Duration::from_secs(60),
        format!("tetrahedra {tetra:.1e}, triangles {tri:.1e}, {elapsed:.2?}"),
    )
}

/// Closed-form partial derivatives against the elimination function.
fn derivative_identities() -> Outcome {
    let mut rng = common::rng(5);
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let (v, a0) = common::tetrahedron_with_interior(&mut rng);
        let elim = DistanceElimination::new(&v, a0).unwrap();
        let x = [a0.distance(&v[0]), a0.distance(&v[1]), a0.distance(&v[2])];
        let fd = oracle::finite_diff(|d| elim.distance(3, d[0], d[1], d[2]), &x, oracle::DEFAULT_STEP).unwrap();
        let closed = inverse::partial_distance_derivatives(&v, a0).unwrap();
        for (a, b) in fd.iter().zip(closed) {
            worst = worst.max((a - b).abs());
        }
    }
    outcome(worst <= 1e-6, format!("max |closed form − finite difference| {worst:.1e}"))
}

/// The junction stays fixed across free-weight sweeps.
fn plasticity_invariance() -> Outcome {
    let mut rng = common::rng(6);
    let (mut hexa, mut quad): (f64, f64) = (0.0, 0.0);
    for _ in 0..50 {
        let c = rng.gen_range(0.5..2.0);
        let residual = rng.gen_range(-0.5..0.5) * c;
        let split = plasticity::equal_split(residual);
        let (v, a0) = common::hexahedron(&mut rng, c, residual);
        let iv = plasticity::feasible_b5_interval(&v, a0, c, residual, split).unwrap();
        let samples = iv.samples(20, c);
        assert_eq!(samples.len(), 20);
        for b5 in samples {
            let state = plasticity::hexahedron_plasticity(&v, a0, c, residual, split, b5).unwrap();
            hexa = hexa.max(solve_point(&v, &state.weights).distance(&a0));
        }
    }
    for _ in 0..50 {
        let c = rng.gen_range(0.5..2.0);
        let (v, a0) = common::quadrilateral(&mut rng);
        let iv = plasticity::feasible_b4_interval(&v, a0, c).unwrap();
        let samples = iv.samples(20, c);
        assert_eq!(samples.len(), 20);
        for b4 in samples {
            let state = plasticity::quadrilateral_plasticity(&v, a0, c, b4).unwrap();
            quad = quad.max(solve_point(&v, &state.weights).distance(&a0));
        }
    }
    outcome(hexa <= 1e-6 && quad <= 1e-8, format!("hexahedra {hexa:.1e}, quadrilaterals {quad:.1e} (50 × 20 each)"))
}

/// Sliding vertices along their rays keeps the junction.
fn geometric_plasticity() -> Outcome {
    let mut rng = common::rng(7);
    let mut worst: f64 = 0.0;
    let mut failures = 0;
    for _ in 0..200 {
        let config = common::floating_configuration(&mut rng);
        let scales: Vec<f64> = (0..config.len()).map(|_| rng.gen_range(0.5..2.0)).collect();
        match plasticity::geometric_plasticity_transport(&config, &scales, opts()) {
            Ok(t) => worst = worst.max(t.deviation),
            Err(_) => failures += 1,
        }
    }
    outcome(worst <= 1e-7 && failures == 0, format!("max junction shift {worst:.1e}, {failures} failures"))
}

/// Floating/absorbed decisions against the brute-force oracle.
fn classification_vs_oracle() -> Outcome {
    let mut rng = common::rng(8);
    let mut agree = 0;
    let mut absorbed = 0;
    let total = 500;
    for k in 0..total {
        let n = 3 + k % 3;
        let config = common::configuration(&mut rng, n, k % 5 == 0);
        let case = forward::classify(&config, 1e-12);
        let result = oracle::brute_force_min(&config, 8, k as u64);
        if oracle::classify_by_oracle(&config, &result) == case {
            agree += 1;
        }
        if case != FtCase::Floating {
            absorbed += 1;
        }
    }
    outcome(agree == total, format!("{agree}/{total} agree ({absorbed} absorbed)"))
}

/// Root formulas against dot products of the rays they came from.
fn angle_algebra() -> Outcome {
    let mut rng = common::rng(9);
    let mut worst: f64 = 0.0;
    for k in 0..1000 {
        let n = 4 + k % 2;
        let dirs: Vec<Point> = (0..n).map(|_| common::unit(&mut rng)).collect();
        let (sys, bits) = AngleSystem::measure(Point::ORIGIN, &dirs).unwrap();
        let rebuilt = sys.reconstruct_rays(&bits).unwrap();
        let original = RaySystem::from_points(Point::ORIGIN, &dirs).unwrap();
        for i in 0..n {
            for j in i + 1..n {
                let direct = rebuilt.directions[i].dot(&rebuilt.directions[j]);
                let from_table = rebuilt.angle(i, j).cos();
                let truth = original.directions[i].dot(&original.directions[j]);
                worst = worst.max((direct - from_table).abs()).max((direct - truth).abs());
                if i >= 2 {
                    let root = sys.resolve_root(i, j, &bits).unwrap();
                    worst = worst.max((root - truth).abs());
                    let (r1, r2) = sys.candidate_cosines(i, j).unwrap();
                    for r in [r1, r2] {
                        worst = worst.max(sys.quadratic_residual(i, j, r).unwrap().abs());
                    }
                }
            }
        }
    }
    outcome(worst <= 1e-9, format!("max discrepancy {worst:.1e} over 1000 systems"))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("regular simplex mixed inverse and candidate roots", simplex_fixed_point),
        ("symmetric triangle mixed inverse", triangle_fixed_point),
        ("conserving residual reproduces classical inverse", unique_residual_equivalence),
        ("inverse to forward round trip", inverse_round_trip),
        ("partial derivatives vs finite differences", derivative_identities),
        ("plasticity sweeps keep the junction", plasticity_invariance),
        ("geometric plasticity keeps the junction", geometric_plasticity),
        ("classification agrees with oracle", classification_vs_oracle),
        ("angle algebra vs direct dot products", angle_algebra),
    ];
    let mut all = true;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = std::panic::catch_unwind(run).unwrap_or_else(|e| {
            let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
            outcome(false, format!("panicked: {}", msg.unwrap_or_default()))
        });
        all &= result.passed;
        println!(
            "{} criterion {}: {name}: {} [{:.2?}]",
            if result.passed { "PASS" } else { "FAIL" },
            k + 1,
            result.detail,
            start.elapsed()
        );
    }
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
