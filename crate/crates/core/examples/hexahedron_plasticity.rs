//! Sweep the free fifth weight of a five-point network and watch the
//! junction stay put.

use fermat_plasticity::forward::{self, SolverOptions};
use fermat_plasticity::geom::Point;
use fermat_plasticity::plasticity;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let vertices = [
        Point::new(1.0, 0.0, 0.0),
        Point::new(-0.5, 0.9, 0.1),
        Point::new(-0.4, -0.8, -0.1),
        Point::new(0.1, 0.2, 1.0),
        Point::new(-0.1, 0.1, -1.2),
    ];
    let a0 = Point::new(0.02, 0.03, 0.01);
    let (c, residual) = (1.0, 0.1);
    let split = plasticity::equal_split(residual);
    let interval = plasticity::feasible_b5_interval(&vertices, a0, c, residual, split)?;
    println!("feasible B5 in ({:.6}, {:.6})", interval.lo, interval.hi);
    for b5 in interval.samples(5, c) {
        let state = plasticity::hexahedron_plasticity(&vertices, a0, c, residual, split, b5)?;
        let moved = forward::solve(&state.configuration(&vertices)?, SolverOptions::default())?.point;
        println!("B5 {b5:.4}: weights {:.5?}, junction shift {:.1e}", state.weights, moved.distance(&a0));
    }
    Ok(())
}
