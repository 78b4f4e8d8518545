//! Brute-force checks that share no machinery with the solvers: a
//! multi-start grid/pattern search for the minimum of `Σ B_i |x − A_i|`,
//! and central finite differences.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::forward::{self, BoundaryConfiguration, FtCase};
use crate::geom::Point;

/// Grid cells per axis on the first level.
const INITIAL_CELLS: usize = 16;
/// Best grid nodes kept as starts.
const GRID_STARTS: usize = 4;
/// Random starts drawn from the seed.
const RANDOM_STARTS: usize = 4;
/// Each level divides the step by this.
const SHRINK: f64 = 4.0;
/// Golden-section steps per axis; enough to shrink any bracket to rounding.
const GOLDEN_ITERS: usize = 64;
/// Improvements smaller than this do not move a search.
const TIE_TOL: f64 = 1e-15;

/// Default step for [`finite_diff`].
pub const DEFAULT_STEP: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    pub minimizer: Point,
    pub objective: f64,
    pub levels: usize,
    /// Axis-aligned box containing every searched point.
    pub bounding_box: (Point, Point),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("function evaluation failed at {point:?}: {reason}")]
    EvaluationFailed { point: Vec<f64>, reason: String },
}

/// Orthonormal frame of the affine hull of the vertices.
struct Frame {
    origin: Point,
    axes: Vec<Point>,
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl Frame {
    fn new(vertices: &[Point]) -> Self {
        let origin = vertices[0];
        let scale = vertices.iter().map(|v| v.distance(&origin)).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
        let mut axes: Vec<Point> = Vec::new();
        for v in vertices {
            let mut d = *v - origin;
            for a in &axes {
                d = d - *a * d.dot(a);
            }
            if d.norm() > 1e-9 * scale && axes.len() < 3 {
                axes.push(d * (1.0 / d.norm()));
            }
        }
        let coords: Vec<Vec<f64>> =
            vertices.iter().map(|v| axes.iter().map(|a| (*v - origin).dot(a)).collect()).collect();
        let dim = axes.len();
        let lo = (0..dim).map(|k| coords.iter().map(|c| c[k]).fold(f64::INFINITY, f64::min)).collect();
        let hi = (0..dim).map(|k| coords.iter().map(|c| c[k]).fold(f64::NEG_INFINITY, f64::max)).collect();
        Self { origin, axes, lo, hi }
    }

    fn dim(&self) -> usize {
        self.axes.len()
    }

    fn point(&self, t: &[f64]) -> Point {
        let mut p = self.origin;
        for (a, x) in self.axes.iter().zip(t) {
            p += *a * *x;
        }
        p
    }

    fn clamp(&self, t: &mut [f64]) {
        for (k, x) in t.iter_mut().enumerate() {
            *x = x.clamp(self.lo[k], self.hi[k]);
        }
    }

    fn world_box(&self) -> (Point, Point) {
        let d = self.dim();
        let mut lo = Point::new(f64::INFINITY, f64::INFINITY, f64::INFINITY);
        let mut hi = Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
        for corner in 0..(1usize << d) {
            let t: Vec<f64> = (0..d).map(|k| if corner >> k & 1 == 1 { self.hi[k] } else { self.lo[k] }).collect();
            let p = self.point(&t);
            lo = Point::new(lo.x.min(p.x), lo.y.min(p.y), lo.z.min(p.z));
            hi = Point::new(hi.x.max(p.x), hi.y.max(p.y), hi.z.max(p.z));
        }
        (lo, hi)
    }
}

/// Offsets of the `3^d − 1` neighbours in lexicographic order.
fn stencil(dim: usize) -> Vec<Vec<f64>> {
    let mut out = Vec::new();
    for code in 0..3usize.pow(dim as u32) {
        let mut c = code;
        let mut v = vec![0.0; dim];
        for slot in v.iter_mut().rev() {
            *slot = (c % 3) as f64 - 1.0;
            c /= 3;
        }
        if v.iter().any(|x| *x != 0.0) {
            out.push(v);
        }
    }
    out
}

/// Global minimizer of the weighted distance sum by grid search and
/// pattern refinement in the affine hull of the vertices.
///
/// Starts are the best nodes of a coarse grid over the bounding box, a few
/// seeded random points, and the vertices themselves. Each start moves to
/// the best improving stencil neighbour until none improves, then the step
/// shrinks by 4; `levels` steps are used in total. A nested golden-section
/// search over the box then replaces the result if it does strictly
/// better. Deterministic for a given seed.
pub fn brute_force_min(config: &BoundaryConfiguration, levels: usize, seed: u64) -> OracleResult {
    let frame = Frame::new(config.vertices());
    let dim = frame.dim();
    let eval = |t: &[f64]| forward::objective(config, frame.point(t));
    let h0: Vec<f64> = (0..dim).map(|k| (frame.hi[k] - frame.lo[k]) / INITIAL_CELLS as f64).collect();

    // coarse grid, lexicographic order; the sort is stable so ties keep it
    let nodes = (INITIAL_CELLS + 1).pow(dim as u32);
    let mut grid: Vec<(f64, Vec<f64>)> = (0..nodes)
        .map(|code| {
            let mut c = code;
            let mut t = vec![0.0; dim];
            for k in (0..dim).rev() {
                t[k] = frame.lo[k] + h0[k] * (c % (INITIAL_CELLS + 1)) as f64;
                c /= INITIAL_CELLS + 1;
            }
            (eval(&t), t)
        })
        .collect();
    grid.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut starts: Vec<Vec<f64>> = grid.into_iter().take(GRID_STARTS).map(|(_, t)| t).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..RANDOM_STARTS {
        starts.push((0..dim).map(|k| rng.gen_range(frame.lo[k]..=frame.hi[k])).collect());
    }
    for v in config.vertices() {
        starts.push(frame.axes.iter().map(|a| (*v - frame.origin).dot(a)).collect());
    }

    let moves = stencil(dim);
    let mut best: Option<(f64, Vec<f64>)> = None;
    for start in starts {
        let mut t = start;
        let mut f = eval(&t);
        let mut h = h0.clone();
        for _ in 0..levels.max(1) {
            loop {
                let mut step: Option<(f64, Vec<f64>)> = None;
                for m in &moves {
                    let mut cand: Vec<f64> = t.iter().zip(m).zip(&h).map(|((x, d), s)| x + d * s).collect();
                    frame.clamp(&mut cand);
                    let fc = eval(&cand);
                    if fc < f - TIE_TOL && step.as_ref().is_none_or(|(fs, _)| fc < *fs) {
                        step = Some((fc, cand));
                    }
                }
                match step {
                    Some((fc, cand)) => {
                        f = fc;
                        t = cand;
                    }
                    None => break,
                }
            }
            h.iter_mut().for_each(|s| *s /= SHRINK);
        }
        if best.as_ref().is_none_or(|(fb, _)| f < *fb - TIE_TOL) {
            best = Some((f, t));
        }
    }
    let (mut objective, mut t) = best.expect("at least one start");

    // The objective is convex, and so is every partial minimum of it, so
    // nested golden-section searches over the box reach the global minimum
    // even inside narrow valleys where the stencil stalls.
    let nested_t = nested_argmin(&eval, &frame.lo, &frame.hi);
    let f = eval(&nested_t);
    if f < objective - TIE_TOL {
        objective = f;
        t = nested_t;
    }
    OracleResult { minimizer: frame.point(&t), objective, levels: levels.max(1), bounding_box: frame.world_box() }
}

/// Minimum over the remaining axes with the leading coordinates fixed to
/// `prefix`.
fn partial_min(eval: &dyn Fn(&[f64]) -> f64, lo: &[f64], hi: &[f64], prefix: &mut Vec<f64>) -> f64 {
    let k = prefix.len();
    if k == lo.len() {
        return eval(prefix);
    }
    let mut best = f64::INFINITY;
    golden_section(lo[k], hi[k], |x| {
        prefix.push(x);
        let v = partial_min(eval, lo, hi, prefix);
        prefix.pop();
        best = best.min(v);
        v
    });
    best
}

/// Fixes one axis at a time at the minimizer of the partial minimum over
/// the remaining ones.
fn nested_argmin(eval: &dyn Fn(&[f64]) -> f64, lo: &[f64], hi: &[f64]) -> Vec<f64> {
    let mut t = Vec::with_capacity(lo.len());
    for k in 0..lo.len() {
        let x = golden_section(lo[k], hi[k], |x| {
            t.push(x);
            let v = partial_min(eval, lo, hi, &mut t);
            t.pop();
            v
        });
        t.push(x);
    }
    t
}

/// Golden-section search of a convex function on `[lo, hi]`, endpoints
/// included. Returns the best abscissa seen.
fn golden_section(lo: f64, hi: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
    const R: f64 = 0.618_033_988_749_894_9;
    let (mut a, mut b) = (lo, hi);
    let (mut c, mut d) = (b - R * (b - a), a + R * (b - a));
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..GOLDEN_ITERS {
        if b - a <= f64::EPSILON * (a.abs() + b.abs()) {
            break;
        }
        if fc <= fd {
            (b, d, fd) = (d, c, fc);
            c = b - R * (b - a);
            fc = f(c);
        } else {
            (a, c, fc) = (c, d, fd);
            d = a + R * (b - a);
            fd = f(d);
        }
    }
    [(lo, f(lo)), (hi, f(hi)), (d, fd)].into_iter().fold((c, fc), |best, cur| if cur.1 < best.1 { cur } else { best }).0
}

/// The case the oracle supports: absorbed at the best vertex when no
/// searched point beats it, floating otherwise.
pub fn classify_by_oracle(config: &BoundaryConfiguration, result: &OracleResult) -> FtCase {
    let (vertex, f) = config
        .vertices()
        .iter()
        .enumerate()
        .map(|(i, v)| (i, forward::objective(config, *v)))
        .fold((0, f64::INFINITY), |best, cur| if cur.1 < best.1 { cur } else { best });
    if f <= result.objective + TIE_TOL * f.abs().max(1.0) {
        FtCase::Absorbed(vertex)
    } else {
        FtCase::Floating
    }
}

/// Fourth-order central differences
/// `(−f(x + 2h e_i) + 8f(x + h e_i) − 8f(x − h e_i) + f(x − 2h e_i)) / 12h`.
///
/// The truncation error is `O(h⁴)`, which keeps the estimate tight even
/// where the function has large higher derivatives.
pub fn finite_diff<F, E>(mut f: F, x: &[f64], h: f64) -> Result<Vec<f64>, OracleError>
where
    F: FnMut(&[f64]) -> Result<f64, E>,
    E: std::fmt::Display,
{
    let mut at = |p: &[f64]| match f(p) {
        Ok(v) if v.is_finite() => Ok(v),
        Ok(v) => Err(OracleError::EvaluationFailed { point: p.to_vec(), reason: format!("value {v}") }),
        Err(e) => Err(OracleError::EvaluationFailed { point: p.to_vec(), reason: e.to_string() }),
    };
    let mut out = Vec::with_capacity(x.len());
    let mut p = x.to_vec();
    for i in 0..x.len() {
        let mut eval = |offset: f64| {
            p[i] = x[i] + offset;
            at(&p)
        };
        let (up2, up, down, down2) = (eval(2.0 * h)?, eval(h)?, eval(-h)?, eval(-2.0 * h)?);
        p[i] = x[i];
        out.push((down2 - up2 + 8.0 * (up - down)) / (12.0 * h));
    }
    Ok(out)
}
