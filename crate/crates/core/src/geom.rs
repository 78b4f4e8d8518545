//! Tolerance-disciplined Euclidean primitives in R³.
//!
//! Planar inputs are embedded with `z = 0` and go through the same code
//! paths as spatial ones. Nothing here uses exact arithmetic: every
//! degeneracy predicate compares against a scale-relative threshold.

use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Relative tolerance for collinearity / coplanarity predicates.
pub const REL_TOL: f64 = 1e-9;

/// Relative tolerance below which two points are treated as coincident.
pub const COINCIDENCE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum GeomError {
    #[error("segment endpoints coincide")]
    DegenerateSegment,
    #[error("plane is degenerate: the three points are collinear")]
    DegeneratePlane,
    #[error("edge endpoints coincide")]
    DegenerateEdge,
    #[error("point lies on the edge line")]
    PointOnEdge,
    #[error("non-finite coordinate")]
    NonFinite,
}

/// A point (or free vector) in R³.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Point {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point {
    pub const ORIGIN: Point = Point { x: 0.0, y: 0.0, z: 0.0 };

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    /// Embeds a planar point with `z = 0`.
    pub const fn planar(x: f64, y: f64) -> Self {
        Self { x, y, z: 0.0 }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn dot(&self, other: &Point) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn cross(&self, other: &Point) -> Point {
        Point::new(
            self.y * other.z - self.z * other.y,
            self.z * other.x - self.x * other.z,
            self.x * other.y - self.y * other.x,
        )
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn distance(&self, other: &Point) -> f64 {
        (*other - *self).norm()
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }
}

impl From<[f64; 3]> for Point {
    fn from(c: [f64; 3]) -> Self {
        Point::new(c[0], c[1], c[2])
    }
}

/// Two coordinates give a point in the plane `z = 0`.
impl TryFrom<Vec<f64>> for Point {
    type Error = String;

    fn try_from(c: Vec<f64>) -> Result<Self, String> {
        match c[..] {
            [x, y] => Ok(Point::planar(x, y)),
            [x, y, z] => Ok(Point::new(x, y, z)),
            _ => Err(format!("a point needs 2 or 3 coordinates, got {}", c.len())),
        }
    }
}

impl From<Point> for Vec<f64> {
    fn from(p: Point) -> Self {
        vec![p.x, p.y, p.z]
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.x, self.y, self.z)
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, o: Point) -> Point {
        Point::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl AddAssign for Point {
    fn add_assign(&mut self, o: Point) {
        self.x += o.x;
        self.y += o.y;
        self.z += o.z;
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, o: Point) -> Point {
        Point::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Mul<f64> for Point {
    type Output = Point;
    fn mul(self, s: f64) -> Point {
        Point::new(self.x * s, self.y * s, self.z * s)
    }
}

impl Neg for Point {
    type Output = Point;
    fn neg(self) -> Point {
        Point::new(-self.x, -self.y, -self.z)
    }
}

/// A direction with Euclidean norm 1 (to within 1e-12).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitVector(Point);

impl UnitVector {
    /// Normalizes `v`; fails when `v` is (numerically) zero.
    pub fn normalize(v: Point) -> Result<Self, GeomError> {
        if !v.is_finite() {
            return Err(GeomError::NonFinite);
        }
        let n = v.norm();
        if n <= f64::MIN_POSITIVE {
            return Err(GeomError::DegenerateSegment);
        }
        Ok(UnitVector(v * (1.0 / n)))
    }

    /// Wraps a vector the caller guarantees to be unit length.
    pub(crate) fn new_unchecked(v: Point) -> Self {
        debug_assert!((v.norm() - 1.0).abs() < 1e-9);
        UnitVector(v)
    }

    pub fn components(&self) -> Point {
        self.0
    }

    pub fn dot(&self, other: &UnitVector) -> f64 {
        self.0.dot(&other.0)
    }
}

fn scale_of(points: &[Point]) -> f64 {
    points
        .iter()
        .map(|p| p.x.abs().max(p.y.abs()).max(p.z.abs()))
        .fold(1.0, f64::max)
}

fn coincident(p: &Point, q: &Point) -> bool {
    p.distance(q) <= COINCIDENCE_TOL * scale_of(&[*p, *q])
}

/// Unit vector with direction from `p` to `q`.
pub fn unit_vector(p: Point, q: Point) -> Result<UnitVector, GeomError> {
    if !p.is_finite() || !q.is_finite() {
        return Err(GeomError::NonFinite);
    }
    if coincident(&p, &q) {
        return Err(GeomError::DegenerateSegment);
    }
    UnitVector::normalize(q - p)
}

/// Angle between two unit vectors, in `[0, π]`.
///
/// Uses `atan2(|u×v|, u·v)`, which equals `arccos(u·v)` but keeps full
/// precision near 0 and π.
pub fn angle_between(u: &UnitVector, v: &UnitVector) -> f64 {
    let a = u.components();
    let b = v.components();
    a.cross(&b).norm().atan2(a.dot(&b))
}

/// The angle `∠ A_i A₀ A_j`.
pub fn angle_at(a0: Point, ai: Point, aj: Point) -> Result<f64, GeomError> {
    let ui = unit_vector(a0, ai)?;
    let uj = unit_vector(a0, aj)?;
    Ok(angle_between(&ui, &uj))
}

/// Unit normal of the plane spanned by two directions, `normalize(u × v)`.
fn plane_normal(u: &UnitVector, v: &UnitVector) -> Result<UnitVector, GeomError> {
    let n = u.components().cross(&v.components());
    if n.norm() <= REL_TOL {
        return Err(GeomError::DegeneratePlane);
    }
    UnitVector::normalize(n)
}

/// Angle between `u` and its orthogonal projection onto the plane with unit
/// normal `n`, in `[0, π/2]`.
pub(crate) fn elevation(u: &UnitVector, n: &UnitVector) -> f64 {
    let along = u.dot(n);
    let in_plane = (u.components() - n.components() * along).norm();
    along.abs().atan2(in_plane)
}

/// Angle between `A₀A_i` and its orthogonal projection onto the plane
/// `A_j A₀ A_k`, in `[0, π/2]`.
///
/// The side of the plane is not encoded here; see [`plane_side_sign`].
pub fn projected_angle(a0: Point, ai: Point, aj: Point, ak: Point) -> Result<f64, GeomError> {
    let uj = unit_vector(a0, aj).map_err(|_| GeomError::DegeneratePlane)?;
    let uk = unit_vector(a0, ak).map_err(|_| GeomError::DegeneratePlane)?;
    let n = plane_normal(&uj, &uk)?;
    let ui = unit_vector(a0, ai)?;
    Ok(elevation(&ui, &n))
}

/// Oriented frame of the plane `A_j A₀ A_k` with normal
/// `N = normalize(u(A₀,A_j) × u(A₀,A_k))`.
///
/// The orientation follows the order in which `j` and `k` are supplied.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlaneFrame {
    pub origin: Point,
    pub j: usize,
    pub k: usize,
    pub normal: UnitVector,
}

impl PlaneFrame {
    pub fn new(origin: Point, aj: Point, ak: Point, j: usize, k: usize) -> Result<Self, GeomError> {
        let uj = unit_vector(origin, aj).map_err(|_| GeomError::DegeneratePlane)?;
        let uk = unit_vector(origin, ak).map_err(|_| GeomError::DegeneratePlane)?;
        Self::from_directions(origin, &uj, &uk, j, k)
    }

    pub fn from_directions(
        origin: Point,
        uj: &UnitVector,
        uk: &UnitVector,
        j: usize,
        k: usize,
    ) -> Result<Self, GeomError> {
        Ok(Self { origin, j, k, normal: plane_normal(uj, uk)? })
    }

    /// Signed distance of `p` from the plane along the normal.
    pub fn signed_distance(&self, p: Point) -> f64 {
        (p - self.origin).dot(&self.normal.components())
    }

    /// Mirror image of `p` across the plane.
    pub fn reflect(&self, p: Point) -> Point {
        p - self.normal.components() * (2.0 * self.signed_distance(p))
    }
}

/// Side of `A_i` relative to the frame plane: `+1` on the normal's side,
/// `-1` on the other, `0` when `|(A_i − A₀)·N| ≤ tol·|A_i − A₀|`.
pub fn plane_side_sign(ai: Point, frame: &PlaneFrame, tol: f64) -> i8 {
    let d = frame.signed_distance(ai);
    if d.abs() <= tol * (ai - frame.origin).norm() {
        0
    } else if d > 0.0 {
        1
    } else {
        -1
    }
}

/// Dihedral angles along the edge `A₁A₂`: for each point in `others`, the
/// angle in `[0, π]` between the half-plane through it and the half-plane
/// through `apex`.
pub fn dihedral_angles(a1: Point, a2: Point, apex: Point, others: &[Point]) -> Result<Vec<f64>, GeomError> {
    let axis = unit_vector(a1, a2).map_err(|_| GeomError::DegenerateEdge)?;
    let reference = edge_normal_direction(a1, &axis, apex)?;
    others
        .iter()
        .map(|&p| {
            let w = edge_normal_direction(a1, &axis, p)?;
            Ok(angle_between(&reference, &w))
        })
        .collect()
}

/// Signed dihedral angle in `(−π, π]` from the half-plane through `from` to
/// the half-plane through `to`, measured positively about `axis`.
pub(crate) fn signed_dihedral(a1: Point, axis: &UnitVector, from: Point, to: Point) -> Result<f64, GeomError> {
    let w0 = edge_normal_direction(a1, axis, from)?.components();
    let w1 = edge_normal_direction(a1, axis, to)?.components();
    let sin = w0.cross(&w1).dot(&axis.components());
    Ok(sin.atan2(w0.dot(&w1)))
}

/// Unit vector from the edge line towards `p`, orthogonal to the edge.
fn edge_normal_direction(a1: Point, axis: &UnitVector, p: Point) -> Result<UnitVector, GeomError> {
    let rel = p - a1;
    let t = axis.components();
    let perp = rel - t * rel.dot(&t);
    if perp.norm() <= REL_TOL * scale_of(&[a1, p]).max(rel.norm()) {
        return Err(GeomError::PointOnEdge);
    }
    UnitVector::normalize(perp)
}

/// Distance from `A₀` to the line `A_iA_j` and the foot of the perpendicular.
pub fn height_to_segment(a0: Point, ai: Point, aj: Point) -> Result<(f64, Point), GeomError> {
    let t = unit_vector(ai, aj)?.components();
    let foot = ai + t * (a0 - ai).dot(&t);
    Ok((a0.distance(&foot), foot))
}

/// Unsigned distance from `A₀` to the plane `A_iA_jA_k`.
pub fn height_to_plane(a0: Point, ai: Point, aj: Point, ak: Point) -> Result<f64, GeomError> {
    let e1 = aj - ai;
    let e2 = ak - ai;
    let n = e1.cross(&e2);
    if n.norm() <= REL_TOL * e1.norm() * e2.norm() || n.norm() == 0.0 {
        return Err(GeomError::DegeneratePlane);
    }
    Ok(((a0 - ai).dot(&n) / n.norm()).abs())
}

/// Affine dimension (0..=3) of a point set, with relative tolerance.
pub fn affine_dimension(points: &[Point]) -> usize {
    let Some(&base) = points.first() else {
        return 0;
    };
    let diam = diameter(points);
    if diam == 0.0 {
        return 0;
    }
    let tol = REL_TOL * diam;
    let Some(far) = points.iter().max_by(|a, b| base.distance(a).total_cmp(&base.distance(b))) else {
        return 0;
    };
    let e1 = *far - base;
    let e1u = e1 * (1.0 / e1.norm());
    let off_line = |p: &Point| {
        let r = *p - base;
        (r - e1u * r.dot(&e1u)).norm()
    };
    let Some(second) = points.iter().max_by(|a, b| off_line(a).total_cmp(&off_line(b))) else {
        return 1;
    };
    if off_line(second) <= tol {
        return 1;
    }
    let n = e1.cross(&(*second - base));
    let nu = n * (1.0 / n.norm());
    let off_plane = points.iter().map(|p| (*p - base).dot(&nu).abs()).fold(0.0, f64::max);
    if off_plane <= tol {
        2
    } else {
        3
    }
}

pub fn diameter(points: &[Point]) -> f64 {
    let mut d: f64 = 0.0;
    for (i, p) in points.iter().enumerate() {
        for q in &points[i + 1..] {
            d = d.max(p.distance(q));
        }
    }
    d
}

/// Whether `p` lies strictly inside the convex hull of `points`.
///
/// The hull may be three-dimensional, or planar with `p` in its plane; in
/// the planar case "inside" means the relative interior. Supporting planes
/// (lines) are enumerated from point triples (pairs), which is exact for
/// the small point sets used here. `tol` is relative to the hull diameter.
pub fn strictly_inside_hull(p: Point, points: &[Point], tol: f64) -> bool {
    let diam = diameter(points);
    if diam == 0.0 || !p.is_finite() {
        return false;
    }
    let eps = tol * diam;
    match affine_dimension(points) {
        3 => {
            let n = points.len();
            for i in 0..n {
                for j in i + 1..n {
                    for k in j + 1..n {
                        let normal = (points[j] - points[i]).cross(&(points[k] - points[i]));
                        if normal.norm() <= REL_TOL * diam * diam {
                            continue;
                        }
                        let nu = normal * (1.0 / normal.norm());
                        if !supporting_side_contains(p, points, points[i], nu, eps) {
                            return false;
                        }
                    }
                }
            }
            true
        }
        2 => {
            let plane_normal = planar_normal(points);
            if (p - points[0]).dot(&plane_normal).abs() > eps {
                return false;
            }
            let n = points.len();
            for i in 0..n {
                for j in i + 1..n {
                    let edge = points[j] - points[i];
                    if edge.norm() <= REL_TOL * diam {
                        continue;
                    }
                    let m = plane_normal.cross(&edge);
                    let mu = m * (1.0 / m.norm());
                    if !supporting_side_contains(p, points, points[i], mu, eps) {
                        return false;
                    }
                }
            }
            true
        }
        _ => false,
    }
}

/// If the plane through `base` with normal `nu` supports `points`, checks
/// that `p` is strictly on the occupied side; non-supporting planes pass.
fn supporting_side_contains(p: Point, points: &[Point], base: Point, nu: Point, eps: f64) -> bool {
    let mut pos = false;
    let mut neg = false;
    for q in points {
        let d = (*q - base).dot(&nu);
        if d > eps {
            pos = true;
        } else if d < -eps {
            neg = true;
        }
    }
    let dp = (p - base).dot(&nu);
    match (pos, neg) {
        (true, false) => dp > eps,
        (false, true) => dp < -eps,
        _ => true,
    }
}

/// Unit normal of a planar point set (largest-area triple).
pub(crate) fn planar_normal(points: &[Point]) -> Point {
    let mut best = Point::ORIGIN;
    let n = points.len();
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                let c = (points[j] - points[i]).cross(&(points[k] - points[i]));
                if c.norm() > best.norm() {
                    best = c;
                }
            }
        }
    }
    if best.norm() == 0.0 {
        return Point::new(0.0, 0.0, 1.0);
    }
    best * (1.0 / best.norm())
}
