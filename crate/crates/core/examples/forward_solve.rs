//! Weighted Fermat-Torricelli point of a tetrahedron, and an absorbed case.

use fermat_plasticity::forward::{self, BoundaryConfiguration, SolverOptions};
use fermat_plasticity::geom::Point;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let vertices = vec![
        Point::new(1.0, 1.0, 1.0),
        Point::new(1.0, -1.0, -1.0),
        Point::new(-1.0, 1.0, -1.0),
        Point::new(-1.0, -1.0, 1.0),
    ];
    let config = BoundaryConfiguration::new(vertices.clone(), vec![1.0, 2.0, 1.5, 1.0])?;
    let s = forward::solve(&config, SolverOptions::default())?;
    println!("junction {} ({:?}), cost {:.12}, kkt {:.1e}", s.point, s.case, s.objective, s.kkt_residual);

    // a heavy vertex pulls the junction onto itself
    let heavy = config.with_weights(vec![4.0, 1.0, 1.0, 1.0])?;
    let s = forward::solve(&heavy, SolverOptions::default())?;
    println!("heavy first vertex: {:?} at {}", s.case, s.point);
    Ok(())
}
