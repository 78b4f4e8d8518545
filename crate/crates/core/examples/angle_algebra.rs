//! Rebuild five rays from their defining angles and compare the algebraic
//! roots with the measured cosines.

use fermat_plasticity::angles::AngleSystem;
use fermat_plasticity::geom::Point;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let a0 = Point::new(0.1, -0.2, 0.05);
    let vertices = [
        Point::new(1.0, 0.0, 0.0),
        Point::new(-0.4, 0.9, 0.1),
        Point::new(-0.3, -0.7, 0.8),
        Point::new(0.2, 0.1, -1.1),
        Point::new(-0.9, -0.2, -0.3),
    ];
    let (system, bits) = AngleSystem::measure(a0, &vertices)?;
    println!("hemisphere bits {bits:?}");
    println!("elevations above the first plane (rad) {:?}", system.polar_offsets());
    for (i, j) in [(2, 3), (2, 4), (3, 4)] {
        let (opposite, same) = system.candidate_cosines(i, j)?;
        let resolved = system.resolve_root(i, j, &bits)?;
        let u = |k: usize| (vertices[k] - a0) * (1.0 / vertices[k].distance(&a0));
        println!(
            "cos α({i},{j}): roots {opposite:.12} / {same:.12}, picked {resolved:.12}, measured {:.12}",
            u(i).dot(&u(j))
        );
    }
    Ok(())
}
