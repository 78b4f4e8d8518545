//! Weights that make a chosen point the junction, with and without a
//! residual weight left there.

use fermat_plasticity::angles::RaySystem;
use fermat_plasticity::forward::{self, BoundaryConfiguration, SolverOptions};
use fermat_plasticity::geom::Point;
use fermat_plasticity::inverse;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let vertices = [
        Point::new(1.2, 0.1, -0.3),
        Point::new(-0.8, 1.0, 0.2),
        Point::new(-0.5, -1.1, 0.4),
        Point::new(0.1, 0.2, 1.5),
    ];
    let a0 = Point::new(0.05, 0.0, 0.3);
    let rays = RaySystem::from_points(a0, &vertices)?;
    let c = 1.0;

    for residual in [-0.2, 0.0, 0.4] {
        let set = inverse::mixed_inverse_tetrahedron(&rays, c, residual)?;
        let config = BoundaryConfiguration::new(vertices.to_vec(), set.weights.clone())?;
        let back = forward::solve(&config, SolverOptions::default())?.point;
        println!(
            "residual {residual:+.1}: weights {:.6?}, sum {:.6}, junction error {:.1e}",
            set.weights,
            set.sum(),
            back.distance(&a0)
        );
    }

    let unique = inverse::residual_for_unique_inverse_tetra(&rays, c)?;
    let set = inverse::mixed_inverse_tetrahedron(&rays, c, unique)?;
    println!("budget-conserving residual {unique:.9}: weights {:.9?}", set.weights);
    println!("classical inverse:                   {:.9?}", inverse::classical_inverse_tetrahedron(&rays, c)?);
    println!("∂a₀₄/∂a₀ᵢ: {:.9?}", inverse::partial_distance_derivatives(&vertices, a0)?);
    Ok(())
}
