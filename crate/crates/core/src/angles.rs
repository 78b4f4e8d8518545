//! Angle algebra for rays meeting at a common point `A₀`.
//!
//! Given the five angles `α₁₀₂, α₁₀₃, α₁₀₄, α₂₀₃, α₂₀₄` (four rays) or the
//! seven angles that add `α₁₀₅, α₂₀₅` (five rays), every remaining mutual
//! angle is fixed up to the side of the plane `A₁A₀A₂` on which each ray
//! `i ≥ 3` lies. That side is carried as an explicit hemisphere bit.
//!
//! Indices in this module are 0-based: ray 0 is `A₀A₁`, ray 1 is `A₀A₂`,
//! and so on.

use thiserror::Error;

use crate::geom::{self, GeomError, PlaneFrame, Point, UnitVector};

/// Tolerance for accepting a cos² value slightly above 1.
const COS2_SLACK: f64 = 1e-12;
/// Radicands in `[-RADICAND_CLIP, 0)` are treated as 0.
const RADICAND_CLIP: f64 = 1e-12;
/// Roots within this distance outside `[-1, 1]` are clamped.
const ROOT_CLAMP: f64 = 1e-10;
/// Tolerance for matching a candidate root against a reconstructed dot product.
pub const ROOT_MATCH_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AngleError {
    #[error("angle {name} = {value} is outside (0, π)")]
    OutOfRange { name: String, value: f64 },
    #[error("angle system is not realizable: ray {ray} has cos² of its polar offset = {cos2}")]
    Unrealizable { ray: usize, cos2: f64 },
    #[error("candidate root {root} lies outside [-1, 1]")]
    RootOutOfRange { root: f64 },
    #[error("neither root ({root_a}, {root_b}) matches the reconstructed value {measured}")]
    NoMatchingRoot { root_a: f64, root_b: f64, measured: f64 },
    #[error("ray pair ({0}, {1}) is not a pair of rays beyond the reference plane")]
    InvalidPair(usize, usize),
    #[error("expected {expected} hemisphere bits in {{-1, +1}}, got {got:?}")]
    BadBits { expected: usize, got: Vec<i8> },
    #[error("projected angle is undefined: {0}")]
    Projection(String),
    #[error(transparent)]
    Geom(#[from] GeomError),
}

/// The defining angles of four (five given angles) or five (seven given
/// angles) rays at `A₀`.
#[derive(Debug, Clone, PartialEq)]
pub struct AngleSystem {
    a102: f64,
    /// `α_{1,0,i}` for rays `i = 3..=n` (1-based labels).
    from_first: Vec<f64>,
    /// `α_{2,0,i}` for rays `i = 3..=n`.
    from_second: Vec<f64>,
}

impl AngleSystem {
    /// Four rays from `α₁₀₂, α₁₀₃, α₁₀₄, α₂₀₃, α₂₀₄`.
    pub fn tetrahedral(a102: f64, a103: f64, a104: f64, a203: f64, a204: f64) -> Result<Self, AngleError> {
        Self::new(a102, vec![a103, a104], vec![a203, a204])
    }

    /// Five rays from `α₁₀₂, α₁₀₃, α₁₀₄, α₁₀₅, α₂₀₃, α₂₀₄, α₂₀₅`.
    #[allow(clippy::too_many_arguments)]
    pub fn hexahedral(
        a102: f64,
        a103: f64,
        a104: f64,
        a105: f64,
        a203: f64,
        a204: f64,
        a205: f64,
    ) -> Result<Self, AngleError> {
        Self::new(a102, vec![a103, a104, a105], vec![a203, a204, a205])
    }

    /// Validates range and realizability eagerly.
    pub fn new(a102: f64, from_first: Vec<f64>, from_second: Vec<f64>) -> Result<Self, AngleError> {
        if from_first.len() != from_second.len() || !(2..=3).contains(&from_first.len()) {
            return Err(AngleError::Projection(format!(
                "expected 2 or 3 angles per reference ray, got {} and {}",
                from_first.len(),
                from_second.len()
            )));
        }
        check_open_range("α102", a102)?;
        for (i, (&a, &b)) in from_first.iter().zip(&from_second).enumerate() {
            check_open_range(&format!("α10{}", i + 3), a)?;
            check_open_range(&format!("α20{}", i + 3), b)?;
        }
        if a102.sin().abs() <= geom::REL_TOL {
            return Err(AngleError::OutOfRange { name: "α102".into(), value: a102 });
        }
        let sys = Self { a102, from_first, from_second };
        for ray in 2..sys.ray_count() {
            let cos2 = sys.polar_cos2(ray);
            if cos2 > 1.0 + COS2_SLACK {
                return Err(AngleError::Unrealizable { ray, cos2 });
            }
        }
        Ok(sys)
    }

    /// Measures the defining angles of rays `A₀A_i` and the hemisphere bits
    /// relative to the oriented plane `A₁A₀A₂`.
    pub fn measure(a0: Point, vertices: &[Point]) -> Result<(Self, Vec<i8>), AngleError> {
        if !(4..=5).contains(&vertices.len()) {
            return Err(AngleError::Projection(format!("expected 4 or 5 vertices, got {}", vertices.len())));
        }
        let a102 = geom::angle_at(a0, vertices[0], vertices[1])?;
        let mut first = Vec::new();
        let mut second = Vec::new();
        let frame = PlaneFrame::new(a0, vertices[0], vertices[1], 0, 1)?;
        let mut bits = Vec::new();
        for &v in &vertices[2..] {
            first.push(geom::angle_at(a0, vertices[0], v)?);
            second.push(geom::angle_at(a0, vertices[1], v)?);
            bits.push(if geom::plane_side_sign(v, &frame, 0.0) < 0 { -1 } else { 1 });
        }
        Ok((Self::new(a102, first, second)?, bits))
    }

    pub fn ray_count(&self) -> usize {
        self.from_first.len() + 2
    }

    /// Mutual angle between ray 0 or 1 and any ray, or `None` for pairs that
    /// are not given directly.
    pub fn given_angle(&self, i: usize, j: usize) -> Option<f64> {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        match (i, j) {
            (0, 0) | (1, 1) => Some(0.0),
            (0, 1) => Some(self.a102),
            (0, j) if j < self.ray_count() => Some(self.from_first[j - 2]),
            (1, j) if j < self.ray_count() => Some(self.from_second[j - 2]),
            _ => None,
        }
    }

    fn cosines(&self, ray: usize) -> (f64, f64, f64) {
        (self.a102.cos(), self.from_first[ray - 2].cos(), self.from_second[ray - 2].cos())
    }

    /// In-plane components of ray `ray` in the frame with ray 0 on the x-axis
    /// and ray 1 in the upper half of the xy-plane.
    fn in_plane(&self, ray: usize) -> (f64, f64) {
        let (c12, c1i, c2i) = self.cosines(ray);
        let s12 = self.a102.sin();
        (c1i, (c2i - c12 * c1i) / s12)
    }

    /// `cos² α_{i,102}`: squared cosine of the angle between ray `i` and the
    /// plane `A₁A₀A₂`.
    pub fn polar_cos2(&self, ray: usize) -> f64 {
        let (c12, c1i, c2i) = self.cosines(ray);
        let s2 = self.a102.sin().powi(2);
        (c2i * c2i + c1i * c1i - 2.0 * c2i * c1i * c12) / s2
    }

    /// Polar offsets `α_{i,102} ∈ [0, π/2]` for rays `i ≥ 3`.
    pub fn polar_offsets(&self) -> Vec<f64> {
        (2..self.ray_count())
            .map(|ray| {
                let cos2 = self.polar_cos2(ray).clamp(0.0, 1.0);
                (1.0 - cos2).sqrt().atan2(cos2.sqrt())
            })
            .collect()
    }

    /// The radicand factor of ray `i` under the square root `b`:
    /// `1 + cos 2α₁₀₂ + cos 2α₁₀ᵢ + cos 2α₂₀ᵢ − 4 cos α₁₀₂ cos α₁₀ᵢ cos α₂₀ᵢ`.
    pub fn radicand(&self, ray: usize) -> f64 {
        let (c12, c1i, c2i) = self.cosines(ray);
        1.0 + (2.0 * self.a102).cos() + (2.0 * self.from_first[ray - 2]).cos() + (2.0 * self.from_second[ray - 2]).cos()
            - 4.0 * c12 * c1i * c2i
    }

    fn check_pair(&self, i: usize, j: usize) -> Result<(), AngleError> {
        let n = self.ray_count();
        if i < 2 || j < 2 || i >= n || j >= n || i == j {
            return Err(AngleError::InvalidPair(i, j));
        }
        Ok(())
    }

    /// The two candidate values of `cos α_{i0j}` for rays `i, j ≥ 3`.
    ///
    /// The first root has the square-root term subtracted (rays on opposite
    /// sides of the plane `A₁A₀A₂`), the second has it added (same side).
    pub fn candidate_cosines(&self, i: usize, j: usize) -> Result<(f64, f64), AngleError> {
        self.check_pair(i, j)?;
        let c12 = self.a102.cos();
        let (c1i, c2i) = (self.from_first[i - 2].cos(), self.from_second[i - 2].cos());
        let (c1j, c2j) = (self.from_first[j - 2].cos(), self.from_second[j - 2].cos());
        let csc2 = 1.0 / self.a102.sin().powi(2);

        let mut prod = self.radicand(i) * self.radicand(j);
        if (-RADICAND_CLIP..0.0).contains(&prod) {
            prod = 0.0;
        }
        if prod < 0.0 {
            let ray = if self.radicand(i) > 0.0 { i } else { j };
            return Err(AngleError::Unrealizable { ray, cos2: self.polar_cos2(ray) });
        }
        let b = prod.sqrt();

        let root_a = -0.25 * (2.0 * b + 4.0 * c12 * (c1j * c2i + c1i * c2j) - 4.0 * (c1i * c1j + c2i * c2j)) * csc2;
        let root_b = 0.25 * (4.0 * c1i * (c1j - c12 * c2j) + 2.0 * (b + 2.0 * c2i * (-c12 * c1j + c2j))) * csc2;
        Ok((clamp_root(root_a)?, clamp_root(root_b)?))
    }

    /// Residual of the quadratic in `cos α_{i0j}` obtained by eliminating the
    /// azimuths and squaring.
    pub fn quadratic_residual(&self, i: usize, j: usize, cos_ij: f64) -> Result<f64, AngleError> {
        self.check_pair(i, j)?;
        let c12 = self.a102.cos();
        let (c1i, c2i) = (self.from_first[i - 2].cos(), self.from_second[i - 2].cos());
        let (c1j, c2j) = (self.from_first[j - 2].cos(), self.from_second[j - 2].cos());
        let csc2 = 1.0 / self.a102.sin().powi(2);
        let lhs = (-c1i * c1j + cos_ij - (-c12 * c1i + c2i) * (-c12 * c1j + c2j) * csc2).powi(2);
        let rhs = (1.0 - self.polar_cos2(i)) * (1.0 - self.polar_cos2(j));
        Ok(lhs - rhs)
    }

    fn check_bits(&self, bits: &[i8]) -> Result<(), AngleError> {
        if bits.len() != self.ray_count() - 2 || bits.iter().any(|b| b.abs() != 1) {
            return Err(AngleError::BadBits { expected: self.ray_count() - 2, got: bits.to_vec() });
        }
        Ok(())
    }

    /// Unit directions with `u₁ = (1,0,0)`, `u₂ = (cos α₁₀₂, sin α₁₀₂, 0)`
    /// and `uᵢ` for `i ≥ 3` placed in the hemisphere chosen by `bits[i-3]`.
    pub fn directions(&self, bits: &[i8]) -> Result<Vec<UnitVector>, AngleError> {
        self.check_bits(bits)?;
        let mut out = vec![
            UnitVector::new_unchecked(Point::new(1.0, 0.0, 0.0)),
            UnitVector::new_unchecked(Point::new(self.a102.cos(), self.a102.sin(), 0.0)),
        ];
        for ray in 2..self.ray_count() {
            let (x, y) = self.in_plane(ray);
            let z = (1.0 - x * x - y * y).max(0.0).sqrt() * f64::from(bits[ray - 2]);
            out.push(UnitVector::normalize(Point::new(x, y, z))?);
        }
        Ok(out)
    }

    /// Picks the candidate root for `cos α_{i0j}` that matches the
    /// configuration selected by `bits`.
    pub fn resolve_root(&self, i: usize, j: usize, bits: &[i8]) -> Result<f64, AngleError> {
        let (root_a, root_b) = self.candidate_cosines(i, j)?;
        let dirs = self.directions(bits)?;
        let measured = dirs[i].dot(&dirs[j]);
        let (da, db) = ((root_a - measured).abs(), (root_b - measured).abs());
        let best = if da <= db { (root_a, da) } else { (root_b, db) };
        if best.1 <= ROOT_MATCH_TOL {
            Ok(best.0)
        } else {
            Err(AngleError::NoMatchingRoot { root_a, root_b, measured })
        }
    }

    /// Rebuilds the ray system: directions from the spherical construction,
    /// mutual angles from the given angles and the resolved roots.
    pub fn reconstruct_rays(&self, bits: &[i8]) -> Result<RaySystem, AngleError> {
        let directions = self.directions(bits)?;
        let n = self.ray_count();
        let mut angles = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                angles[i][j] = match self.given_angle(i, j) {
                    Some(a) => a,
                    None => self.resolve_root(i.min(j), i.max(j), bits)?.clamp(-1.0, 1.0).acos(),
                };
            }
        }
        Ok(RaySystem { origin: Point::ORIGIN, directions, angles, bits: Some(bits.to_vec()) })
    }
}

fn check_open_range(name: &str, value: f64) -> Result<(), AngleError> {
    if value.is_finite() && value > 0.0 && value < std::f64::consts::PI {
        Ok(())
    } else {
        Err(AngleError::OutOfRange { name: name.to_string(), value })
    }
}

fn clamp_root(root: f64) -> Result<f64, AngleError> {
    if !root.is_finite() || root.abs() > 1.0 + ROOT_CLAMP {
        return Err(AngleError::RootOutOfRange { root });
    }
    Ok(root.clamp(-1.0, 1.0))
}

/// `α_{i,k0m}` from the three mutual angles `α_{k0m}`, `α_{m0i}`, `α_{k0i}`.
///
/// `cos² α_{i,k0m} = (cos² α_{m0i} + cos² α_{k0i} − 2 cos α_{m0i} cos α_{k0i} cos α_{k0m}) / sin² α_{k0m}`;
/// the result lies in `[0, π/2]`.
pub fn projected_angle_from_angles(a_k0m: f64, a_m0i: f64, a_k0i: f64) -> Result<f64, AngleError> {
    let s2 = a_k0m.sin().powi(2);
    if s2 <= geom::REL_TOL * geom::REL_TOL {
        return Err(AngleError::Projection(format!("sin α_k0m = 0 for α_k0m = {a_k0m}")));
    }
    let (cmi, cki, ckm) = (a_m0i.cos(), a_k0i.cos(), a_k0m.cos());
    let cos2 = (cmi * cmi + cki * cki - 2.0 * cmi * cki * ckm) / s2;
    if !(-COS2_SLACK..=1.0 + COS2_SLACK).contains(&cos2) {
        return Err(AngleError::Projection(format!("cos² = {cos2} outside [0, 1]")));
    }
    let cos2 = cos2.clamp(0.0, 1.0);
    Ok((1.0 - cos2).sqrt().atan2(cos2.sqrt()))
}

/// Rays meeting at `A₀`, with their table of mutual angles.
///
/// Built either from a concrete configuration (angles measured) or from an
/// [`AngleSystem`] plus hemisphere bits (angles derived algebraically).
#[derive(Debug, Clone, PartialEq)]
pub struct RaySystem {
    pub origin: Point,
    pub directions: Vec<UnitVector>,
    angles: Vec<Vec<f64>>,
    pub bits: Option<Vec<i8>>,
}

impl RaySystem {
    pub fn from_points(a0: Point, vertices: &[Point]) -> Result<Self, AngleError> {
        let directions = vertices
            .iter()
            .map(|&v| geom::unit_vector(a0, v))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self::from_directions(a0, directions))
    }

    pub fn from_directions(origin: Point, directions: Vec<UnitVector>) -> Self {
        let n = directions.len();
        let mut angles = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    angles[i][j] = geom::angle_between(&directions[i], &directions[j]);
                }
            }
        }
        Self { origin, directions, angles, bits: None }
    }

    pub fn len(&self) -> usize {
        self.directions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.directions.is_empty()
    }

    /// The rays with the given indices, in that order.
    pub fn subset(&self, indices: &[usize]) -> RaySystem {
        RaySystem {
            origin: self.origin,
            directions: indices.iter().map(|&i| self.directions[i]).collect(),
            angles: indices.iter().map(|&i| indices.iter().map(|&j| self.angles[i][j]).collect()).collect(),
            bits: None,
        }
    }

    /// `α_{i0j}`.
    pub fn angle(&self, i: usize, j: usize) -> f64 {
        self.angles[i][j]
    }

    /// `α_{i,k0m}` evaluated from the mutual-angle table.
    pub fn projected_angle(&self, i: usize, k: usize, m: usize) -> Result<f64, AngleError> {
        projected_angle_from_angles(self.angle(k, m), self.angle(m, i), self.angle(k, i))
    }

    /// Whether `A₀` is strictly inside the convex hull of points placed on
    /// the rays, i.e. the rays admit a strictly positive balancing
    /// combination.
    pub fn positively_spanning(&self) -> bool {
        let tips: Vec<Point> = self.directions.iter().map(|u| u.components()).collect();
        geom::strictly_inside_hull(Point::ORIGIN, &tips, geom::REL_TOL)
    }

    /// Side (`±1`, or 0 when in-plane) of ray `i` relative to the oriented
    /// plane spanned by rays `j` and `k`.
    pub fn side(&self, i: usize, j: usize, k: usize) -> Result<i8, AngleError> {
        let frame = PlaneFrame::from_directions(Point::ORIGIN, &self.directions[j], &self.directions[k], j, k)?;
        Ok(geom::plane_side_sign(self.directions[i].components(), &frame, geom::REL_TOL))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn simplex_angle() -> f64 {
        (-1.0f64 / 3.0).acos()
    }

    fn simplex5() -> AngleSystem {
        let a = simplex_angle();
        AngleSystem::tetrahedral(a, a, a, a, a).unwrap()
    }

    #[test]
    fn regular_simplex_polar_offset() {
        // cos² = (1/9 + 1/9 + 2/27) / (8/9) = 1/3
        let sys = simplex5();
        assert!((sys.polar_cos2(2) - 1.0 / 3.0).abs() < 1e-14);
        let off = sys.polar_offsets();
        assert!((off[0] - 0.9553166181245093).abs() < 1e-12);
        assert!((off[1] - off[0]).abs() < 1e-15);
    }

    #[test]
    fn coplanar_ray_has_zero_offset() {
        let sys = AngleSystem::tetrahedral(1.0, 0.7, 0.9, 1.7, 1.2).unwrap();
        assert!((sys.polar_cos2(2) - 1.0).abs() < 1e-14);
        assert!(sys.polar_offsets()[0].abs() < 1e-7);
    }

    #[test]
    fn regular_simplex_roots() {
        let (a, b) = simplex5().candidate_cosines(2, 3).unwrap();
        assert!((a + 1.0 / 3.0).abs() < 1e-12);
        assert!((b - 1.0).abs() < 1e-12);
    }

    #[test]
    fn coincident_rays_give_unit_root() {
        let sys = AngleSystem::tetrahedral(1.3, 1.1, 1.1, 1.4, 1.4).unwrap();
        let (_, b) = sys.candidate_cosines(2, 3).unwrap();
        assert!((b - 1.0).abs() < 1e-12);
        assert!((sys.resolve_root(2, 3, &[1, 1]).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn regular_simplex_resolution() {
        let sys = simplex5();
        assert!((sys.resolve_root(2, 3, &[1, -1]).unwrap() + 1.0 / 3.0).abs() < 1e-12);
        let rays = sys.reconstruct_rays(&[1, -1]).unwrap();
        assert!((rays.angle(2, 3) - simplex_angle()).abs() < 1e-12);
        let d = rays.directions[2].dot(&rays.directions[3]);
        assert!((d + 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(
            AngleSystem::tetrahedral(0.0, 1.0, 1.0, 1.0, 1.0),
            Err(AngleError::OutOfRange { .. })
        ));
        // α103 + α102 < α203 is impossible on the sphere
        assert!(matches!(
            AngleSystem::tetrahedral(0.5, 0.5, 1.0, 2.0, 1.0),
            Err(AngleError::Unrealizable { ray: 2, .. })
        ));
        let sys = simplex5();
        assert!(matches!(sys.candidate_cosines(1, 3), Err(AngleError::InvalidPair(1, 3))));
        assert!(matches!(sys.directions(&[1]), Err(AngleError::BadBits { .. })));
        assert!(matches!(sys.directions(&[1, 0]), Err(AngleError::BadBits { .. })));
    }

    #[test]
    fn planar_system_stays_planar() {
        // rays at 0, 1.0, 2.5 and 4.0 radians in the plane
        let sys = AngleSystem::tetrahedral(1.0, 2.5, 2.0 * PI - 4.0, 1.5, 3.0).unwrap();
        for u in sys.directions(&[1, 1]).unwrap() {
            assert!(u.components().z.abs() < 1e-7);
        }
    }

    #[test]
    fn extended_pairs_relabel() {
        let sys = AngleSystem::hexahedral(1.2, 1.9, 1.7, 1.7, 2.0, 1.6, 1.6).unwrap();
        let r34 = sys.candidate_cosines(2, 3).unwrap();
        let r35 = sys.candidate_cosines(2, 4).unwrap();
        assert!((r34.0 - r35.0).abs() < 1e-15 && (r34.1 - r35.1).abs() < 1e-15);

        let a = simplex_angle();
        let all = AngleSystem::hexahedral(a, a, a, a, a, a, a).unwrap();
        for (i, j) in [(2, 3), (2, 4), (3, 4)] {
            let (ra, rb) = all.candidate_cosines(i, j).unwrap();
            assert!((ra + 1.0 / 3.0).abs() < 1e-12 && (rb - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn projected_from_angles_examples() {
        // ray coincident with ray k lies in the plane
        assert!(projected_angle_from_angles(1.1, 1.1, 0.0).unwrap().abs() < 1e-7);
        // orthonormal triple: ray along the normal
        let p = projected_angle_from_angles(FRAC_PI_2, FRAC_PI_2, FRAC_PI_2).unwrap();
        assert!((p - FRAC_PI_2).abs() < 1e-15);
        let o = Point::ORIGIN;
        let g = geom::projected_angle(o, Point::new(0.0, 0.0, 1.0), Point::new(1.0, 0.0, 0.0), Point::new(0.0, 1.0, 0.0))
            .unwrap();
        assert!((p - g).abs() < 1e-15);
        assert!(projected_angle_from_angles(PI, 1.0, 1.0).is_err());
    }
}
