//! Plasticity: families of weights, or of vertex positions, that keep the
//! weighted Fermat-Torricelli point fixed.
//!
//! * Geometric: sliding each vertex along its ray from `A₀` leaves every
//!   unit vector, and hence the balance at `A₀`, unchanged.
//! * Closed hexahedra (five boundary points in space): `B̄₄ = (c − B̄₀)/2` is
//!   fixed by the mass budget, `B̄₅` is free, and `B̄₁, B̄₂, B̄₃` follow from
//!   balancing the pulls normal to the planes `A₂A₀A₃`, `A₁A₀A₃` and
//!   `A₁A₀A₂`. Each normal balance is a ratio of two sub-tetrahedron weight
//!   ratios with the side signs of the vertices.
//! * Quadrilaterals (four coplanar boundary points): `B̄₄` is free and the
//!   rest follow from sub-triangle ratios and `Σ B̄_i = c`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::angles::{AngleError, RaySystem};
use crate::forward::{self, BoundaryConfiguration, FtCase, SolverError, SolverOptions};
use crate::geom::{self, GeomError, Point};
use crate::inverse::{self, InverseError, MixedWeightSet};

/// Coplanarity tolerance for quadrilaterals, after scaling the diameter to 1.
pub const COPLANAR_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PlasticityError {
    #[error("A₀ is not strictly interior to the convex hull of the boundary points")]
    NotInterior,
    #[error("points are not coplanar (out-of-plane distance {deviation:e} relative to the diameter)")]
    NotCoplanar { deviation: f64 },
    #[error("total mass c = {c} must exceed the residual weight {residual}")]
    InvalidMassBudget { c: f64, residual: f64 },
    #[error("residual split {split:?} must be nonnegative and sum to the residual {residual}")]
    InvalidSplit { split: [f64; 3], residual: f64 },
    #[error("weight {index} = {value} is not positive")]
    NonpositiveWeight { index: usize, value: f64 },
    #[error("vertex {vertex} lies in the plane through A₀ and vertices {plane:?}")]
    SignDegenerate { vertex: usize, plane: (usize, usize) },
    #[error("the sub-triangle ratios are degenerate ({0})")]
    Degenerate(String),
    #[error("expected {expected} points, got {got}")]
    WrongPointCount { expected: usize, got: usize },
    #[error("scale {index} = {value} is not a positive finite number")]
    InvalidScale { index: usize, value: f64 },
    #[error("configuration is not floating: vertex {vertex} absorbs the junction")]
    FloatingViolated { vertex: usize },
    #[error("the junction moved by {deviation:e} after transport")]
    JunctionMoved { deviation: f64 },
    #[error(transparent)]
    Inverse(#[from] InverseError),
    #[error(transparent)]
    Angle(#[from] AngleError),
    #[error(transparent)]
    Geom(#[from] GeomError),
    #[error(transparent)]
    Solver(#[from] SolverError),
}

/// Side signs `sgn_{i,j0k}` of the vertices used by the hexahedron
/// equations, relative to the plane through `A₀, A_j, A_k` oriented by
/// `u_j × u_k`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SignConfiguration {
    pub entries: Vec<SignEntry>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SignEntry {
    pub vertex: usize,
    pub plane: (usize, usize),
    pub sign: i8,
}

impl SignConfiguration {
    pub fn get(&self, vertex: usize, j: usize, k: usize) -> Option<i8> {
        self.entries.iter().find(|e| e.vertex == vertex && e.plane == (j, k)).map(|e| e.sign)
    }
}

/// An open interval of feasible values for the free weight. `hi` may be
/// infinite; the interval is empty when `lo >= hi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeasibleInterval {
    pub lo: f64,
    pub hi: f64,
}

impl FeasibleInterval {
    pub fn is_empty(&self) -> bool {
        !(self.lo < self.hi)
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo < x && x < self.hi
    }

    /// `n` evenly spaced interior points. An unbounded interval is sampled
    /// over `(lo, lo + fallback_width)`.
    pub fn samples(&self, n: usize, fallback_width: f64) -> Vec<f64> {
        if self.is_empty() {
            return Vec::new();
        }
        let hi = if self.hi.is_finite() { self.hi } else { self.lo + fallback_width };
        (1..=n).map(|k| self.lo + (hi - self.lo) * k as f64 / (n + 1) as f64).collect()
    }
}

/// Output of the hexahedron equations for one value of `B̄₅`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlasticityState {
    /// `(B̄₁, ..., B̄₅)`.
    pub weights: [f64; 5],
    pub residual: f64,
    pub residual_split: [f64; 3],
    pub total: f64,
    /// Mixed weights of `A₁A₂A₃A₄`, `A₂A₃A₄A₅`, `A₁A₃A₄A₅`, `A₁A₂A₄A₅`
    /// (vertex labels in that order), with the full residual on the first
    /// and the split residual on the others.
    pub sub_tetrahedra: Vec<SubTetrahedron>,
    pub signs: SignConfiguration,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubTetrahedron {
    pub vertices: [usize; 4],
    pub weights: MixedWeightSet,
}

impl PlasticityState {
    /// `Σ B̄_i − c`.
    pub fn budget_defect(&self) -> f64 {
        self.weights.iter().sum::<f64>() - self.total
    }

    /// `B̄₁ + B̄₂ + B̄₃ + B̄₅ − B̄₀ − B̄₄`.
    pub fn balance_defect(&self) -> f64 {
        let w = &self.weights;
        w[0] + w[1] + w[2] + w[4] - self.residual - w[3]
    }

    /// The rescaled weights with `Σ B̄_i = c` and the residual from the
    /// balance; the junction is unchanged. Both invariants then hold and
    /// `B̄₄ = (c − B̄₀)/2`.
    pub fn conserving(&self) -> PlasticityState {
        let scale = self.total / self.weights.iter().sum::<f64>();
        let mut out = self.clone();
        out.weights = self.weights.map(|w| w * scale);
        let w = &out.weights;
        out.residual = w[0] + w[1] + w[2] + w[4] - w[3];
        out
    }

    pub fn configuration(&self, vertices: &[Point; 5]) -> Result<BoundaryConfiguration, SolverError> {
        BoundaryConfiguration::new(vertices.to_vec(), self.weights.to_vec())
    }
}

/// The weights as affine functions of `B̄₅`, before positivity checks.
struct HexaSystem {
    offset: [f64; 5],
    slope: [f64; 5],
    sub_tetrahedra: Vec<SubTetrahedron>,
    signs: SignConfiguration,
}

fn check_budget(c: f64, residual: f64) -> Result<(), PlasticityError> {
    if !(c.is_finite() && residual.is_finite() && c > residual) {
        return Err(PlasticityError::InvalidMassBudget { c, residual });
    }
    Ok(())
}

fn check_split(split: [f64; 3], residual: f64) -> Result<(), PlasticityError> {
    let sum: f64 = split.iter().sum();
    let ok = split.iter().all(|s| s.is_finite())
        && (sum - residual).abs() <= 1e-12 * residual.abs().max(1.0)
        && (residual < 0.0 || split.iter().all(|s| *s >= 0.0))
        && (residual >= 0.0 || split.iter().all(|s| *s <= 0.0));
    if !ok {
        return Err(PlasticityError::InvalidSplit { split, residual });
    }
    Ok(())
}

/// The default split: equal thirds.
pub fn equal_split(residual: f64) -> [f64; 3] {
    [residual / 3.0; 3]
}

fn hexa_system(
    vertices: &[Point; 5],
    a0: Point,
    c: f64,
    residual: f64,
    split: [f64; 3],
) -> Result<HexaSystem, PlasticityError> {
    check_budget(c, residual)?;
    check_split(split, residual)?;
    if !geom::strictly_inside_hull(a0, vertices, geom::REL_TOL) {
        return Err(PlasticityError::NotInterior);
    }
    let rays = RaySystem::from_points(a0, vertices)?;

    // (unknown vertex, plane pair): the balance normal to plane j0k
    // determines B̄_unknown from B̄₄ and B̄₅.
    const EQUATIONS: [(usize, (usize, usize)); 3] = [(0, (1, 2)), (1, (0, 2)), (2, (0, 1))];
    let mut entries = Vec::new();
    for &(unknown, (j, k)) in &EQUATIONS {
        for vertex in [unknown, 3, 4] {
            let sign = rays.side(vertex, j, k)?;
            if sign == 0 && vertex != 4 {
                return Err(PlasticityError::SignDegenerate { vertex, plane: (j, k) });
            }
            entries.push(SignEntry { vertex, plane: (j, k), sign });
        }
    }
    let signs = SignConfiguration { entries };

    // A₁A₂A₃A₄ with outflow A₄ gives (B̄_i/B̄₄) = sin α_{4,j0k}/sin α_{i,j0k}.
    let main = inverse::tetra_formula_weights(&rays.subset(&[0, 1, 2, 3]), 3, c, residual)?;
    let mut sub_tetrahedra = vec![SubTetrahedron { vertices: [0, 1, 2, 3], weights: main.clone() }];

    let half = (c - residual) / 2.0;
    let mut offset = [0.0, 0.0, 0.0, half, 0.0];
    let mut slope = [0.0, 0.0, 0.0, 0.0, 1.0];
    for (n, &(unknown, (j, k))) in EQUATIONS.iter().enumerate() {
        // Sub-tetrahedron A_jA_kA₄A₅ with outflow A₅ gives
        // (B̄₄/B̄₅) = sin α_{5,j0k}/sin α_{4,j0k}.
        let labels = [j, k, 3, 4];
        let sub = inverse::tetra_formula_weights(&rays.subset(&labels), 3, c, split[n])?;
        let q = sub.weights[2] / sub.weights[3];
        sub_tetrahedra.push(SubTetrahedron { vertices: labels, weights: sub });

        let r = main.weights[unknown] / main.weights[3];
        let s_unknown = f64::from(signs.get(unknown, j, k).unwrap_or(0));
        let s4 = f64::from(signs.get(3, j, k).unwrap_or(0));
        let s5 = f64::from(signs.get(4, j, k).unwrap_or(0));
        // B̄_u = −(s₄/s_u) r (B̄₄ + (s₅/s₄) q B̄₅)
        let factor = -(s4 / s_unknown) * r;
        offset[unknown] = factor * half;
        slope[unknown] = factor * (s5 / s4) * q;
    }
    // listed in the order A₂A₃A₄A₅, A₁A₃A₄A₅, A₁A₂A₄A₅
    Ok(HexaSystem { offset, slope, sub_tetrahedra, signs })
}

/// Weights of a five-point network with prescribed interior junction `a0`,
/// mass budget `c`, residual `B̄₀` split over the sub-tetrahedra, and free
/// weight `B̄₅`.
///
/// The weights balance exactly at `a0`. The budget and flow balance hold
/// for the member returned by [`PlasticityState::conserving`].
pub fn hexahedron_plasticity(
    vertices: &[Point; 5],
    a0: Point,
    c: f64,
    residual: f64,
    residual_split: [f64; 3],
    b5: f64,
) -> Result<PlasticityState, PlasticityError> {
    let sys = hexa_system(vertices, a0, c, residual, residual_split)?;
    let mut weights = [0.0; 5];
    for (i, w) in weights.iter_mut().enumerate() {
        *w = sys.offset[i] + sys.slope[i] * b5;
    }
    // B̄₅ = 0 is allowed: it reduces the network to A₁A₂A₃A₄
    let nonpositive = |(i, w): &(usize, &f64)| !(**w > 0.0 || (*i == 4 && **w == 0.0));
    if let Some((index, &value)) = weights.iter().enumerate().find(nonpositive) {
        return Err(PlasticityError::NonpositiveWeight { index, value });
    }
    Ok(PlasticityState {
        weights,
        residual,
        residual_split,
        total: c,
        sub_tetrahedra: sys.sub_tetrahedra,
        signs: sys.signs,
    })
}

/// The open interval of `B̄₅` for which all five hexahedron weights are
/// strictly positive.
pub fn feasible_b5_interval(
    vertices: &[Point; 5],
    a0: Point,
    c: f64,
    residual: f64,
    residual_split: [f64; 3],
) -> Result<FeasibleInterval, PlasticityError> {
    let sys = hexa_system(vertices, a0, c, residual, residual_split)?;
    Ok(affine_interval(&sys.offset, &sys.slope))
}

/// `{t : offset_i + slope_i t > 0 for all i}`.
fn affine_interval(offset: &[f64], slope: &[f64]) -> FeasibleInterval {
    let mut lo = f64::NEG_INFINITY;
    let mut hi = f64::INFINITY;
    for (&a, &b) in offset.iter().zip(slope) {
        if b > 0.0 {
            lo = lo.max(-a / b);
        } else if b < 0.0 {
            hi = hi.min(-a / b);
        } else if !(a > 0.0) {
            return FeasibleInterval { lo: 0.0, hi: 0.0 };
        }
    }
    FeasibleInterval { lo, hi }
}

/// Output of the quadrilateral equations for one value of `B̄₄`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadPlasticityState {
    /// `(B̄₁, B̄₂, B̄₃, B̄₄)`, summing to `c`.
    pub weights: [f64; 4],
    /// `B̄₀ = B̄₁ + B̄₂ + B̄₃ − B̄₄`.
    pub residual: f64,
    pub total: f64,
    pub ratios: QuadRatios,
}

/// Signed sub-triangle weight ratios `(B̄_i/B̄_j)_{ijk}` from three-ray
/// balances `B̄_i u_i + B̄_j u_j + B̄_k u_k = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadRatios {
    /// `(B̄₂/B̄₁)₂₁₃`.
    pub r21: f64,
    /// `(B̄₃/B̄₁)₃₁₂`.
    pub r31: f64,
    /// `(B̄₂/B̄₄)₂₄₃`.
    pub s24: f64,
    /// `(B̄₃/B̄₄)₃₄₂`.
    pub s34: f64,
    /// `(B̄₁/B̄₄)₁₄₃`; undefined when `A₁, A₀, A₃` are collinear.
    pub q134: Option<f64>,
    /// `(B̄₁/B̄₄)₁₄₂`; undefined when `A₁, A₀, A₂` are collinear.
    pub q124: Option<f64>,
}

impl QuadPlasticityState {
    pub fn budget_defect(&self) -> f64 {
        self.weights.iter().sum::<f64>() - self.total
    }

    /// `B̄₁ + B̄₂ + B̄₃ − B̄₀ − B̄₄`.
    pub fn balance_defect(&self) -> f64 {
        let w = &self.weights;
        w[0] + w[1] + w[2] - self.residual - w[3]
    }

    pub fn configuration(&self, vertices: &[Point; 4]) -> Result<BoundaryConfiguration, SolverError> {
        BoundaryConfiguration::new(vertices.to_vec(), self.weights.to_vec())
    }
}

struct QuadSystem {
    offset: [f64; 4],
    slope: [f64; 4],
    ratios: QuadRatios,
}

fn quad_system(vertices: &[Point; 4], a0: Point, c: f64) -> Result<QuadSystem, PlasticityError> {
    if !c.is_finite() || c <= 0.0 {
        return Err(PlasticityError::InvalidMassBudget { c, residual: f64::NAN });
    }
    let mut all = vertices.to_vec();
    all.push(a0);
    if !all.iter().all(Point::is_finite) {
        return Err(GeomError::NonFinite.into());
    }
    let diam = geom::diameter(&all);
    if diam == 0.0 || geom::affine_dimension(vertices) < 2 {
        return Err(PlasticityError::NotInterior);
    }
    let normal = geom::planar_normal(vertices);
    let deviation = all.iter().map(|p| (*p - vertices[0]).dot(&normal).abs()).fold(0.0, f64::max) / diam;
    if deviation > COPLANAR_TOL {
        return Err(PlasticityError::NotCoplanar { deviation });
    }
    if !geom::strictly_inside_hull(a0, vertices, geom::REL_TOL) {
        return Err(PlasticityError::NotInterior);
    }
    let u: Vec<_> = vertices.iter().map(|v| geom::unit_vector(a0, *v)).collect::<Result<_, _>>()?;
    let ratio = |i: usize, j: usize, k: usize| inverse::triangle_weight_ratio(&u[i], &u[j], &u[k]);
    let degenerate = |e| match e {
        InverseError::DegenerateProjection { .. } => {
            PlasticityError::Degenerate("A₂, A₀ and A₃ are collinear".into())
        }
        other => other.into(),
    };
    let ratios = QuadRatios {
        r21: ratio(1, 0, 2).map_err(degenerate)?,
        r31: ratio(2, 0, 1).map_err(degenerate)?,
        s24: ratio(1, 3, 2).map_err(degenerate)?,
        s34: ratio(2, 3, 1).map_err(degenerate)?,
        q134: ratio(0, 3, 2).ok(),
        q124: ratio(0, 3, 1).ok(),
    };
    let QuadRatios { r21, r31, s24, s34, .. } = ratios;

    // B̄₂ = r21 (B̄₁ − B̄₄ q134) = r21 B̄₁ + s24 B̄₄, likewise for B̄₃, and
    // Σ B̄_i = c fixes B̄₁. The product form stays finite when a q is not.
    let denom = 1.0 + r21 + r31;
    if denom.abs() <= 1e-12 * (1.0 + r21.abs() + r31.abs()) {
        return Err(PlasticityError::Degenerate(format!("1 + r21 + r31 = {denom:e}")));
    }
    let b1 = (c / denom, -(1.0 + s24 + s34) / denom);
    let offset = [b1.0, r21 * b1.0, r31 * b1.0, 0.0];
    let slope = [b1.1, r21 * b1.1 + s24, r31 * b1.1 + s34, 1.0];
    Ok(QuadSystem { offset, slope, ratios })
}

/// Weights of a four-point planar network with prescribed interior
/// junction `a0`, budget `c` and free weight `B̄₄`. The residual is then
/// fixed by the flow balance.
pub fn quadrilateral_plasticity(
    vertices: &[Point; 4],
    a0: Point,
    c: f64,
    b4: f64,
) -> Result<QuadPlasticityState, PlasticityError> {
    let sys = quad_system(vertices, a0, c)?;
    let mut weights = [0.0; 4];
    for (i, w) in weights.iter_mut().enumerate() {
        *w = sys.offset[i] + sys.slope[i] * b4;
    }
    if let Some((index, &value)) = weights.iter().enumerate().find(|(_, w)| !(**w > 0.0)) {
        return Err(PlasticityError::NonpositiveWeight { index, value });
    }
    let residual = weights[0] + weights[1] + weights[2] - weights[3];
    Ok(QuadPlasticityState { weights, residual, total: c, ratios: sys.ratios })
}

/// The open interval of `B̄₄` for which all four quadrilateral weights are
/// strictly positive.
pub fn feasible_b4_interval(vertices: &[Point; 4], a0: Point, c: f64) -> Result<FeasibleInterval, PlasticityError> {
    let sys = quad_system(vertices, a0, c)?;
    Ok(affine_interval(&sys.offset, &sys.slope))
}

/// Result of sliding the vertices along their rays.
#[derive(Debug, Clone, PartialEq)]
pub struct Transported {
    pub config: BoundaryConfiguration,
    /// The junction of the original configuration.
    pub junction: Point,
    /// Distance between the junction and the solved junction of `config`.
    pub deviation: f64,
}

/// Moves each vertex to `A₀ + scale_i (A_i − A₀)` with unchanged weights
/// and checks that the junction stays put.
pub fn geometric_plasticity_transport(
    config: &BoundaryConfiguration,
    scales: &[f64],
    opts: SolverOptions,
) -> Result<Transported, PlasticityError> {
    if scales.len() != config.len() {
        return Err(PlasticityError::WrongPointCount { expected: config.len(), got: scales.len() });
    }
    if let Some((index, &value)) = scales.iter().enumerate().find(|(_, s)| !(s.is_finite() && **s > 0.0)) {
        return Err(PlasticityError::InvalidScale { index, value });
    }
    if let FtCase::Absorbed(vertex) = forward::classify(config, opts.tol) {
        return Err(PlasticityError::FloatingViolated { vertex });
    }
    let a0 = forward::solve(config, opts)?.point;
    let moved: Vec<Point> = config.vertices().iter().zip(scales).map(|(v, s)| a0 + (*v - a0) * *s).collect();
    let out = BoundaryConfiguration::new(moved, config.weights().to_vec())?;
    if let FtCase::Absorbed(vertex) = forward::classify(&out, opts.tol) {
        return Err(PlasticityError::FloatingViolated { vertex });
    }
    let deviation = forward::solve(&out, opts)?.point.distance(&a0);
    let scale = geom::diameter(config.vertices()).max(1.0);
    if deviation > 1e-6 * scale {
        return Err(PlasticityError::JunctionMoved { deviation });
    }
    Ok(Transported { config: out, junction: a0, deviation })
}
