//! Forward weighted Fermat-Torricelli problem for three to five points.
//!
//! Minimizes `f(x) = Σ B_i |x − A_i|`. The optimum is classified first: if
//! some vertex satisfies `‖Σ_{j≠i} B_j u(A_i,A_j)‖ ≤ B_i` it is the
//! minimizer (absorbed case). Otherwise the minimizer is the unique point
//! where the weighted unit vectors cancel, located by reciprocal-distance
//! averaging with safeguarded Newton steps.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::{self, Point};

pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_ITER: usize = 10_000;

/// Distance (relative to the configuration scale) at which an iterate is
/// considered to sit on a vertex.
const VERTEX_SNAP: f64 = 1e-12;

/// Newton steps taken after the stopping test is met.
const POLISH_STEPS: usize = 3;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolverError {
    #[error("invalid configuration: {0}")]
    InvalidConfiguration(String),
    #[error("no convergence after {iterations} iterations (best {best}, KKT residual {residual:e})")]
    MaxIterationsExceeded { iterations: usize, best: Point, residual: f64 },
    #[error("point coincides with vertex {0}")]
    AtVertex(usize),
    #[error("tolerance must be positive, got {0}")]
    BadTolerance(f64),
}

/// Boundary vertices with nonnegative weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryConfiguration {
    vertices: Vec<Point>,
    weights: Vec<f64>,
}

impl BoundaryConfiguration {
    /// Validates 3–5 finite vertices with nonnegative weights, whose
    /// positively weighted vertices are not collinear.
    pub fn new(vertices: Vec<Point>, weights: Vec<f64>) -> Result<Self, SolverError> {
        let bad = |m: String| Err(SolverError::InvalidConfiguration(m));
        if !(3..=5).contains(&vertices.len()) {
            return bad(format!("expected 3 to 5 vertices, got {}", vertices.len()));
        }
        if weights.len() != vertices.len() {
            return bad(format!("{} weights for {} vertices", weights.len(), vertices.len()));
        }
        if let Some(i) = vertices.iter().position(|v| !v.is_finite()) {
            return bad(format!("vertex {i} has a non-finite coordinate"));
        }
        if let Some(i) = weights.iter().position(|w| !w.is_finite() || *w < 0.0) {
            return bad(format!("weight {i} = {} is not a nonnegative number", weights[i]));
        }
        let support: Vec<Point> = vertices.iter().zip(&weights).filter(|(_, w)| **w > 0.0).map(|(v, _)| *v).collect();
        if support.len() < 2 {
            return bad("at least two weights must be positive".into());
        }
        if geom::affine_dimension(&support) < 2 {
            return bad("positively weighted vertices are collinear".into());
        }
        Ok(Self { vertices, weights })
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Same vertices, different weights.
    pub fn with_weights(&self, weights: Vec<f64>) -> Result<Self, SolverError> {
        Self::new(self.vertices.clone(), weights)
    }

    fn scale(&self) -> f64 {
        geom::diameter(&self.vertices).max(f64::MIN_POSITIVE)
    }

    fn vertex_at(&self, x: Point) -> Option<usize> {
        let snap = VERTEX_SNAP * self.scale();
        self.vertices.iter().position(|v| v.distance(&x) <= snap)
    }

    /// Like `vertex_at`, ignoring zero-weight vertices (the objective is
    /// smooth there).
    fn weighted_vertex_at(&self, x: Point) -> Option<usize> {
        self.vertex_at(x).filter(|&i| self.weights[i] > 0.0)
    }

    fn terms(&self) -> impl Iterator<Item = (Point, f64)> + '_ {
        self.vertices.iter().copied().zip(self.weights.iter().copied()).filter(|(_, b)| *b > 0.0)
    }

    /// `Σ_{j≠i} B_j u(A_i, A_j)`: the pull exerted on vertex `i`.
    pub fn vertex_pull(&self, i: usize) -> Point {
        let ai = self.vertices[i];
        let mut pull = Point::ORIGIN;
        for (j, (aj, bj)) in self.vertices.iter().zip(&self.weights).enumerate() {
            if j != i && *bj > 0.0 {
                if let Ok(u) = geom::unit_vector(ai, *aj) {
                    pull += u.components() * *bj;
                }
            }
        }
        pull
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "case", content = "vertex")]
pub enum FtCase {
    /// The minimizer is not a vertex; weighted unit vectors cancel there.
    Floating,
    /// The minimizer is the vertex with this (0-based) index.
    Absorbed(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FtSolution {
    pub point: Point,
    pub case: FtCase,
    pub objective: f64,
    /// Distance from zero to the subdifferential of the objective at `point`.
    pub kkt_residual: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { tol: DEFAULT_TOL, max_iter: DEFAULT_MAX_ITER }
    }
}

/// `Σ B_i |x − A_i|`.
pub fn objective(config: &BoundaryConfiguration, x: Point) -> f64 {
    weighted_distance_sum(&config.vertices, &config.weights, x)
}

/// `Σ B_i |x − A_i|` over raw slices, with no validation of the inputs.
pub fn weighted_distance_sum(vertices: &[Point], weights: &[f64], x: Point) -> f64 {
    vertices.iter().zip(weights).map(|(a, b)| b * x.distance(a)).sum()
}

/// `‖Σ B_i u(x, A_i)‖` for `x` away from every vertex.
pub fn kkt_residual(config: &BoundaryConfiguration, x: Point) -> Result<f64, SolverError> {
    if let Some(i) = config.vertex_at(x) {
        return Err(SolverError::AtVertex(i));
    }
    Ok(unit_sum(config, x).norm())
}

fn unit_sum(config: &BoundaryConfiguration, x: Point) -> Point {
    let mut s = Point::ORIGIN;
    for (a, b) in config.terms() {
        let d = x.distance(&a);
        if d > 0.0 {
            s += (a - x) * (b / d);
        }
    }
    s
}

/// Floating vs absorbed: returns `Absorbed(i)` for the vertex with
/// `‖Σ_{j≠i} B_j u(A_i,A_j)‖ ≤ B_i + tol`, if any.
pub fn classify(config: &BoundaryConfiguration, tol: f64) -> FtCase {
    let mut best: Option<(usize, f64)> = None;
    for i in 0..config.len() {
        let slack = config.vertex_pull(i).norm() - config.weights[i];
        if slack <= tol && best.is_none_or(|(_, s)| slack < s) {
            best = Some((i, slack));
        }
    }
    match best {
        Some((i, _)) => FtCase::Absorbed(i),
        None => FtCase::Floating,
    }
}

/// Solves from the weighted centroid of the vertices.
pub fn solve(config: &BoundaryConfiguration, opts: SolverOptions) -> Result<FtSolution, SolverError> {
    let total = config.total_weight();
    let mut start = Point::ORIGIN;
    for (a, b) in config.vertices.iter().zip(&config.weights) {
        start += *a * (b / total);
    }
    solve_from(config, start, opts)
}

/// Solves from an explicit starting point.
pub fn solve_from(config: &BoundaryConfiguration, start: Point, opts: SolverOptions) -> Result<FtSolution, SolverError> {
    if !(opts.tol > 0.0) {
        return Err(SolverError::BadTolerance(opts.tol));
    }
    let tol = opts.tol * config.total_weight().max(1.0);
    if let FtCase::Absorbed(i) = classify(config, tol) {
        let point = config.vertices[i];
        let slack = config.vertex_pull(i).norm() - config.weights[i];
        return Ok(FtSolution {
            point,
            case: FtCase::Absorbed(i),
            objective: objective(config, point),
            kkt_residual: slack.max(0.0),
            iterations: 0,
        });
    }

    let mut x = start;
    let mut fx = objective(config, x);
    let mut best = (x, f64::INFINITY);
    for iter in 0..opts.max_iter {
        if let Some(i) = config.weighted_vertex_at(x) {
            // not absorbed, so the pull on the vertex exceeds its weight and
            // the direction of the pull is a descent direction
            x = step_off_vertex(config, i);
            fx = objective(config, x);
            continue;
        }
        let g = unit_sum(config, x);
        let residual = g.norm();
        if residual < best.1 {
            best = (x, residual);
        }
        if residual <= tol {
            let (point, kkt_residual) = polish(config, x, g);
            return Ok(FtSolution {
                point,
                case: FtCase::Floating,
                objective: objective(config, point),
                kkt_residual,
                iterations: iter,
            });
        }
        let candidate = newton_step(config, x, g)
            .and_then(|step| backtrack(config, x, fx, step))
            .unwrap_or_else(|| weiszfeld_step(config, x));
        let fc = objective(config, candidate);
        if candidate == x {
            break;
        }
        x = candidate;
        fx = fc;
    }
    Err(SolverError::MaxIterationsExceeded { iterations: opts.max_iter, best: best.0, residual: best.1 })
}

/// A few full Newton steps past the stopping test, kept while the residual
/// keeps shrinking. Near the minimum Newton converges quadratically, so this
/// reaches the rounding floor even where the objective is weakly curved.
fn polish(config: &BoundaryConfiguration, mut x: Point, mut g: Point) -> (Point, f64) {
    for _ in 0..POLISH_STEPS {
        let Some(step) = newton_step(config, x, g) else { break };
        let c = x + step;
        if config.weighted_vertex_at(c).is_some() {
            break;
        }
        let gc = unit_sum(config, c);
        if !(gc.norm() < g.norm()) {
            break;
        }
        x = c;
        g = gc;
    }
    (x, g.norm())
}

/// One reciprocal-distance averaging step.
fn weiszfeld_step(config: &BoundaryConfiguration, x: Point) -> Point {
    let mut num = Point::ORIGIN;
    let mut den = 0.0;
    for (a, b) in config.terms() {
        let d = x.distance(&a);
        num += a * (b / d);
        den += b / d;
    }
    num * (1.0 / den)
}

/// Newton direction for the smooth part of the objective, `H δ = g` where
/// `g = Σ B_i u(x, A_i)` is the negative gradient and
/// `H = Σ B_i (I − u uᵀ) / d_i`. Planar configurations make `H` singular
/// along the plane normal; a small diagonal shift handles that.
fn newton_step(config: &BoundaryConfiguration, x: Point, g: Point) -> Option<Point> {
    let mut h = [[0.0; 3]; 3];
    for (a, b) in config.terms() {
        let r = a - x;
        let d = r.norm();
        let u = (r * (1.0 / d)).as_array();
        for (p, row) in h.iter_mut().enumerate() {
            for (q, cell) in row.iter_mut().enumerate() {
                let id = if p == q { 1.0 } else { 0.0 };
                *cell += b / d * (id - u[p] * u[q]);
            }
        }
    }
    let trace = h[0][0] + h[1][1] + h[2][2];
    for (p, row) in h.iter_mut().enumerate() {
        row[p] += 1e-12 * trace;
    }
    solve3(h, g.as_array()).map(Point::from)
}

fn backtrack(config: &BoundaryConfiguration, x: Point, fx: f64, step: Point) -> Option<Point> {
    let mut t = 1.0;
    for _ in 0..40 {
        let c = x + step * t;
        if objective(config, c) < fx {
            return Some(c);
        }
        t *= 0.5;
    }
    None
}

/// Moves off vertex `i` along its pull, by the step that would be optimal
/// for the linearized objective.
fn step_off_vertex(config: &BoundaryConfiguration, i: usize) -> Point {
    let ai = config.vertices[i];
    let pull = config.vertex_pull(i);
    let excess = pull.norm() - config.weights[i];
    let mut curvature = 0.0;
    for (j, (aj, bj)) in config.vertices.iter().zip(&config.weights).enumerate() {
        if j != i {
            curvature += bj / ai.distance(aj);
        }
    }
    let dir = pull * (1.0 / pull.norm());
    ai + dir * (excess.max(0.0) / curvature).max(1e-6 * config.scale())
}

/// Solves a 3x3 linear system by Cramer's rule.
pub(crate) fn solve3(m: [[f64; 3]; 3], rhs: [f64; 3]) -> Option<[f64; 3]> {
    let det = |m: &[[f64; 3]; 3]| {
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    };
    let d = det(&m);
    if d == 0.0 || !d.is_finite() {
        return None;
    }
    let mut out = [0.0; 3];
    for (c, o) in out.iter_mut().enumerate() {
        let mut mc = m;
        for r in 0..3 {
            mc[r][c] = rhs[r];
        }
        *o = det(&mc) / d;
    }
    Some(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn equilateral() -> Vec<Point> {
        vec![
            Point::planar(1.0, 0.0),
            Point::planar(-0.5, 3f64.sqrt() / 2.0),
            Point::planar(-0.5, -(3f64.sqrt()) / 2.0),
        ]
    }

    fn regular_tetra() -> Vec<Point> {
        vec![
            Point::new(1.0, 1.0, 1.0),
            Point::new(1.0, -1.0, -1.0),
            Point::new(-1.0, 1.0, -1.0),
            Point::new(-1.0, -1.0, 1.0),
        ]
    }

    #[test]
    fn equilateral_triangle_is_floating_at_centroid() {
        let cfg = BoundaryConfiguration::new(equilateral(), vec![1.0; 3]).unwrap();
        assert_eq!(classify(&cfg, 1e-10), FtCase::Floating);
        let sol = solve(&cfg, SolverOptions::default()).unwrap();
        assert_eq!(sol.case, FtCase::Floating);
        assert!(sol.point.norm() < 1e-12);
        let v = cfg.vertices();
        for (i, j) in [(0, 1), (0, 2), (1, 2)] {
            let a = geom::angle_at(sol.point, v[i], v[j]).unwrap();
            assert!((a.to_degrees() - 120.0).abs() < 1e-9);
        }
    }

    #[test]
    fn regular_tetrahedron_centroid() {
        let cfg = BoundaryConfiguration::new(regular_tetra(), vec![1.0; 4]).unwrap();
        let sol = solve(&cfg, SolverOptions::default()).unwrap();
        assert!(sol.point.norm() < 1e-12);
        let a = geom::angle_at(sol.point, cfg.vertices()[0], cfg.vertices()[3]).unwrap();
        assert!((a - (-1.0f64 / 3.0).acos()).abs() < 1e-12);
        assert!(kkt_residual(&cfg, sol.point).unwrap() <= 1e-10);
    }

    #[test]
    fn heavy_vertex_absorbs() {
        let v = equilateral();
        let cfg = BoundaryConfiguration::new(v.clone(), vec![1.0, 1.0, 5.0]).unwrap();
        assert_eq!(classify(&cfg, 1e-10), FtCase::Absorbed(2));
        let sol = solve(&cfg, SolverOptions::default()).unwrap();
        assert_eq!(sol.case, FtCase::Absorbed(2));
        assert_eq!(sol.point, v[2]);
        assert_eq!(sol.objective, v[2].distance(&v[0]) + v[2].distance(&v[1]));
    }

    #[test]
    fn objective_examples() {
        let v = equilateral();
        assert_eq!(weighted_distance_sum(&v, &[1.0, 0.0, 0.0], v[0]), 0.0);
        let seg = [Point::ORIGIN, Point::planar(1.0, 0.0)];
        assert_eq!(weighted_distance_sum(&seg, &[1.0, 1.0], Point::planar(0.5, 0.0)), 1.0);

        let cfg = BoundaryConfiguration::new(v.clone(), vec![0.3, 1.7, 2.2]).unwrap();
        let x = Point::new(0.1, -0.4, 0.9);
        let mut expected = 0.0;
        for i in 0..3 {
            let d = v[i] - x;
            expected += cfg.weights()[i] * (d.x * d.x + d.y * d.y + d.z * d.z).sqrt();
        }
        assert!((objective(&cfg, x) - expected).abs() < 1e-14);
    }

    #[test]
    fn kkt_examples() {
        let cfg = BoundaryConfiguration::new(equilateral(), vec![1.0; 3]).unwrap();
        assert!(kkt_residual(&cfg, Point::ORIGIN).unwrap() < 1e-15);
        let far = kkt_residual(&cfg, Point::new(0.0, 0.0, 1e8)).unwrap();
        assert!((far - 3.0).abs() < 1e-12);
        assert_eq!(kkt_residual(&cfg, cfg.vertices()[1]), Err(SolverError::AtVertex(1)));
    }

    #[test]
    fn rejects_invalid_configs() {
        assert!(BoundaryConfiguration::new(equilateral()[..2].to_vec(), vec![1.0; 2]).is_err());
        assert!(BoundaryConfiguration::new(equilateral(), vec![1.0, -1.0, 1.0]).is_err());
        let collinear = vec![Point::ORIGIN, Point::planar(1.0, 0.0), Point::planar(2.0, 0.0)];
        assert!(BoundaryConfiguration::new(collinear, vec![1.0; 3]).is_err());
        let cfg = BoundaryConfiguration::new(equilateral(), vec![1.0; 3]).unwrap();
        assert!(matches!(
            solve(&cfg, SolverOptions { tol: 0.0, max_iter: 10 }),
            Err(SolverError::BadTolerance(_))
        ));
    }

    #[test]
    fn start_on_vertex_steps_off() {
        let cfg = BoundaryConfiguration::new(equilateral(), vec![1.0, 1.2, 0.9]).unwrap();
        let a = solve(&cfg, SolverOptions::default()).unwrap();
        let b = solve_from(&cfg, cfg.vertices()[0], SolverOptions::default()).unwrap();
        assert!(a.point.distance(&b.point) < 1e-9);
    }

    #[test]
    fn iteration_cap_reports_best() {
        let cfg = BoundaryConfiguration::new(regular_tetra(), vec![1.0, 2.0, 1.5, 1.2]).unwrap();
        match solve_from(&cfg, Point::new(5.0, 5.0, 5.0), SolverOptions { tol: 1e-10, max_iter: 1 }) {
            Err(SolverError::MaxIterationsExceeded { residual, .. }) => assert!(residual.is_finite()),
            other => panic!("expected iteration cap, got {other:?}"),
        }
    }
}
