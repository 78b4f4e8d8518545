//! Random instance generators shared by the integration tests.
//!
//! Generators reject near-degenerate draws (flat tetrahedra, junctions
//! hugging a face, nearly coplanar rays) so that a failure points at the
//! code rather than at floating-point conditioning.

#![allow(dead_code)]

use fermat_plasticity::angles::RaySystem;
use fermat_plasticity::forward::{self, BoundaryConfiguration, FtCase};
use fermat_plasticity::geom::{self, Point};
use fermat_plasticity::plasticity;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn cube_point(rng: &mut ChaCha8Rng, half: f64) -> Point {
    Point::new(rng.gen_range(-half..half), rng.gen_range(-half..half), rng.gen_range(-half..half))
}

pub fn unit(rng: &mut ChaCha8Rng) -> Point {
    loop {
        let p = cube_point(rng, 1.0);
        let n = p.norm();
        if n > 0.1 && n <= 1.0 {
            return p * (1.0 / n);
        }
    }
}

/// Convex combination with every coefficient at least `floor`.
pub fn barycentric(rng: &mut ChaCha8Rng, points: &[Point], floor: f64) -> Point {
    let n = points.len() as f64;
    let raw: Vec<f64> = points.iter().map(|_| rng.gen_range(0.0..1.0)).collect();
    let sum: f64 = raw.iter().sum();
    let mut p = Point::ORIGIN;
    for (q, r) in points.iter().zip(&raw) {
        p += *q * (floor + (1.0 - n * floor) * r / sum);
    }
    p
}

/// A rotation matrix from a random unit quaternion.
pub fn rotation(rng: &mut ChaCha8Rng) -> [[f64; 3]; 3] {
    let (w, x, y, z) = loop {
        let q: [f64; 4] = [0; 4].map(|_| rng.gen_range(-1.0..1.0));
        let n = q.iter().map(|v| v * v).sum::<f64>().sqrt();
        if n > 0.1 && n <= 1.0 {
            break (q[0] / n, q[1] / n, q[2] / n, q[3] / n);
        }
    };
    [
        [1.0 - 2.0 * (y * y + z * z), 2.0 * (x * y - w * z), 2.0 * (x * z + w * y)],
        [2.0 * (x * y + w * z), 1.0 - 2.0 * (x * x + z * z), 2.0 * (y * z - w * x)],
        [2.0 * (x * z - w * y), 2.0 * (y * z + w * x), 1.0 - 2.0 * (x * x + y * y)],
    ]
}

pub fn rotate(r: &[[f64; 3]; 3], p: Point) -> Point {
    let a = p.as_array();
    let row = |i: usize| r[i][0] * a[0] + r[i][1] * a[1] + r[i][2] * a[2];
    Point::new(row(0), row(1), row(2))
}

fn tetra_volume(v: &[Point; 4]) -> f64 {
    (v[1] - v[0]).cross(&(v[2] - v[0])).dot(&(v[3] - v[0])).abs() / 6.0
}

/// A tetrahedron of reasonable shape with a junction well inside it.
pub fn tetrahedron_with_interior(rng: &mut ChaCha8Rng) -> ([Point; 4], Point) {
    loop {
        let v = [0; 4].map(|_| cube_point(rng, 1.0));
        let diam = geom::diameter(&v);
        if tetra_volume(&v) < 0.02 * diam.powi(3) {
            continue;
        }
        let a0 = barycentric(rng, &v, 0.05);
        let rays = RaySystem::from_points(a0, &v).expect("distinct points");
        if well_separated(&rays) {
            return (v, a0);
        }
    }
}

/// Every ray is at least a little off the plane of any two others.
fn well_separated(rays: &RaySystem) -> bool {
    let n = rays.len();
    for i in 0..n {
        for j in 0..n {
            for k in j + 1..n {
                if i == j || i == k {
                    continue;
                }
                let c = rays.directions[j].components().cross(&rays.directions[k].components());
                if c.norm() < 0.05 || (rays.directions[i].components().dot(&c) / c.norm()).abs() < 0.02 {
                    return false;
                }
            }
        }
    }
    true
}

/// A planar triangle with a junction well inside it.
pub fn triangle_with_interior(rng: &mut ChaCha8Rng) -> ([Point; 3], Point) {
    loop {
        let v = [0; 3].map(|_| {
            let p = cube_point(rng, 1.0);
            Point::planar(p.x, p.y)
        });
        let area = (v[1] - v[0]).cross(&(v[2] - v[0])).norm() / 2.0;
        if area < 0.05 * geom::diameter(&v).powi(2) {
            continue;
        }
        return (v, barycentric(rng, &v, 0.05));
    }
}

/// Five points around an interior junction, with nonzero side signs and a
/// nonempty interval for the free weight.
pub fn hexahedron(rng: &mut ChaCha8Rng, c: f64, residual: f64) -> ([Point; 5], Point) {
    loop {
        let a0 = cube_point(rng, 0.5);
        let v = [0; 5].map(|_| a0 + unit(rng) * rng.gen_range(0.5..2.0));
        if !geom::strictly_inside_hull(a0, &v, 1e-3) {
            continue;
        }
        let rays = RaySystem::from_points(a0, &v).expect("distinct points");
        if !well_separated(&rays) {
            continue;
        }
        let split = plasticity::equal_split(residual);
        match plasticity::feasible_b5_interval(&v, a0, c, residual, split) {
            Ok(iv) if !iv.is_empty() && (iv.hi.min(iv.lo + c) - iv.lo) > 1e-3 * c => return (v, a0),
            _ => continue,
        }
    }
}

/// A convex quadrilateral (in a randomly placed plane) with a junction
/// inside it.
pub fn quadrilateral(rng: &mut ChaCha8Rng) -> ([Point; 4], Point) {
    loop {
        let mut angles = [0; 4].map(|_| rng.gen_range(0.0..std::f64::consts::TAU));
        angles.sort_by(f64::total_cmp);
        let planar = angles.map(|t| {
            let r = rng.gen_range(0.5..2.0);
            Point::planar(r * t.cos(), r * t.sin())
        });
        let convex = (0..4).all(|i| {
            let (a, b, c) = (planar[i], planar[(i + 1) % 4], planar[(i + 2) % 4]);
            (b - a).cross(&(c - b)).z > 0.05
        });
        if !convex || !geom::strictly_inside_hull(Point::ORIGIN, &planar, 1e-3) {
            continue;
        }
        let r = rotation(rng);
        let shift = cube_point(rng, 1.0);
        let place = |p: Point| rotate(&r, p) + shift;
        let us: Vec<Point> = planar.iter().map(|p| *p * (1.0 / p.norm())).collect();
        if (0..4).any(|i| (i + 1..4).any(|j| us[i].cross(&us[j]).norm() < 0.05)) {
            continue;
        }
        return (planar.map(place), place(Point::ORIGIN));
    }
}

/// A random configuration of 3 to 5 points, planar or spatial.
pub fn configuration(rng: &mut ChaCha8Rng, n: usize, planar: bool) -> BoundaryConfiguration {
    loop {
        let v: Vec<Point> = (0..n)
            .map(|_| {
                let p = cube_point(rng, 1.0);
                if planar {
                    Point::planar(p.x, p.y)
                } else {
                    p
                }
            })
            .collect();
        let w: Vec<f64> = (0..n).map(|_| rng.gen_range(0.1..3.0)).collect();
        if let Ok(c) = BoundaryConfiguration::new(v, w) {
            return c;
        }
    }
}

/// A floating configuration.
pub fn floating_configuration(rng: &mut ChaCha8Rng) -> BoundaryConfiguration {
    loop {
        let n = rng.gen_range(3..=5);
        let planar = rng.gen_bool(0.3);
        let c = configuration(rng, n, planar);
        if forward::classify(&c, 1e-12) == FtCase::Floating {
            return c;
        }
    }
}
