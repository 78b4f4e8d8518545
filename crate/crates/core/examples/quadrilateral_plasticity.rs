//! Planar four-point network: the free weight B4 fixes the others and the
//! residual left at the junction.

use fermat_plasticity::forward::{self, SolverOptions};
use fermat_plasticity::geom::Point;
use fermat_plasticity::plasticity;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let vertices = [
        Point::planar(1.5, 0.2),
        Point::planar(-0.3, 1.1),
        Point::planar(-1.2, -0.4),
        Point::planar(0.4, -1.3),
    ];
    let a0 = Point::planar(0.1, -0.05);
    let c = 1.0;
    let interval = plasticity::feasible_b4_interval(&vertices, a0, c)?;
    println!("feasible B4 in ({:.6}, {:.6})", interval.lo, interval.hi);
    for b4 in interval.samples(5, c) {
        let state = plasticity::quadrilateral_plasticity(&vertices, a0, c, b4)?;
        let moved = forward::solve(&state.configuration(&vertices)?, SolverOptions::default())?.point;
        println!(
            "B4 {b4:.4}: weights {:.5?}, residual {:+.5}, junction shift {:.1e}",
            state.weights,
            state.residual,
            moved.distance(&a0)
        );
    }
    Ok(())
}
