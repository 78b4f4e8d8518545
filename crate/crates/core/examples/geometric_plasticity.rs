//! Slide the vertices along their rays; the junction does not move.

use fermat_plasticity::forward::{BoundaryConfiguration, SolverOptions};
use fermat_plasticity::geom::Point;
use fermat_plasticity::plasticity;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let config = BoundaryConfiguration::new(
        vec![
            Point::new(1.0, 0.2, 0.0),
            Point::new(-0.6, 1.0, 0.3),
            Point::new(-0.7, -0.9, -0.2),
            Point::new(0.1, 0.0, 1.4),
            Point::new(0.2, -0.1, -1.1),
        ],
        vec![1.0, 1.2, 0.9, 1.1, 1.0],
    )?;
    for scales in [[0.5, 1.0, 2.0, 1.5, 0.7], [2.0, 2.0, 0.5, 0.5, 1.0]] {
        let t = plasticity::geometric_plasticity_transport(&config, &scales, SolverOptions::default())?;
        println!("scales {scales:?}: junction {} moved {:.1e}", t.junction, t.deviation);
    }
    Ok(())
}
