//! Cross-check the solver with the derivative-free brute-force search.

use fermat_plasticity::forward::{self, BoundaryConfiguration, SolverOptions};
use fermat_plasticity::geom::Point;
use fermat_plasticity::oracle;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let config = BoundaryConfiguration::new(
        vec![Point::planar(0.0, 0.0), Point::planar(3.0, 0.0), Point::planar(1.0, 2.5), Point::planar(-0.5, 1.5)],
        vec![1.0, 1.3, 0.8, 1.1],
    )?;
    let s = forward::solve(&config, SolverOptions::default())?;
    let o = oracle::brute_force_min(&config, 8, 7);
    println!("solver {} cost {:.12} ({:?})", s.point, s.objective, s.case);
    println!("oracle {} cost {:.12} ({:?})", o.minimizer, o.objective, oracle::classify_by_oracle(&config, &o));
    println!("gap {:.1e}, distance {:.1e}", o.objective - s.objective, o.minimizer.distance(&s.point));

    let f = |x: &[f64]| Ok::<_, std::convert::Infallible>(forward::objective(&config, Point::planar(x[0], x[1])));
    let g = oracle::finite_diff(f, &[s.point.x, s.point.y], oracle::DEFAULT_STEP)?;
    println!("numerical gradient at the solution {g:?}");
    Ok(())
}
