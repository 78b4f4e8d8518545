//! Inverse and mixed-inverse weighted Fermat-Torricelli problems.
//!
//! Given a prescribed interior junction `A₀` (or only the rays through it),
//! these recover weights `B̄_i` under which `A₀` is the weighted
//! Fermat-Torricelli point. In the mixed variant a residual weight `B̄₀`
//! stays at the junction and the outflow vertex `m` carries
//! `B̄_m = (c − B̄₀)/2`; the other weights follow from ratios of projected
//! angle sines. The family is affine in `B̄₀`, and the junction is the same
//! for every member. Exactly one residual also satisfies the total budget
//! `Σ B̄_i = c`, which recovers the classical (unique) inverse weights.
//!
//! Ray and vertex indices are 0-based.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::angles::{AngleError, RaySystem};
use crate::forward::{self, BoundaryConfiguration, FtCase};
use crate::geom::{self, GeomError, Point, UnitVector};

/// Below this a projected-angle sine is treated as zero.
const SINE_FLOOR: f64 = 1e-12;

/// Tolerance for the absorbed-case tests.
const ABSORB_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum InverseError {
    #[error("A₀ is not strictly interior: {0}")]
    NotInterior(String),
    #[error("total mass c = {c} must exceed the residual weight {residual}; admissible residuals are (-inf, {c})")]
    InvalidMassBudget { c: f64, residual: f64 },
    #[error("weight {index} = {value} is not positive")]
    NonpositiveWeight { index: usize, value: f64 },
    #[error("projected angle of ray {ray} onto the plane of rays ({k}, {m}) has zero sine")]
    DegenerateProjection { ray: usize, k: usize, m: usize },
    #[error("weights sum to {sum} instead of c = {total} (balance defect {balance_defect:e}); the conserving residual is {consistent_residual}")]
    BudgetInconsistent { sum: f64, total: f64, balance_defect: f64, consistent_residual: f64 },
    #[error("infeasible flow split: {0}")]
    InfeasibleSplit(String),
    #[error("expected {expected} rays, got {got}")]
    RayCount { expected: usize, got: usize },
    #[error("distance elimination is outside its domain: {0}")]
    EliminationDomain(String),
    #[error(transparent)]
    Angle(#[from] AngleError),
    #[error(transparent)]
    Geom(#[from] GeomError),
}

/// Weights of a mixed network: `B̄_1..B̄_n`, the residual `B̄₀` left at the
/// junction, the mass budget `c`, and the outflow vertex `m`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixedWeightSet {
    pub weights: Vec<f64>,
    pub residual: f64,
    pub total: f64,
    pub outflow: usize,
}

impl MixedWeightSet {
    pub fn sum(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// `Σ B̄_i − c`.
    pub fn budget_defect(&self) -> f64 {
        self.sum() - self.total
    }

    /// `Σ_{i≠m} B̄_i − B̄₀ − B̄_m`.
    pub fn balance_defect(&self) -> f64 {
        self.inflow_sum() - self.residual - self.weights[self.outflow]
    }

    fn inflow_sum(&self) -> f64 {
        self.weights.iter().enumerate().filter(|(i, _)| *i != self.outflow).map(|(_, w)| w).sum()
    }

    /// Checks `Σ B̄_i = c` and the flow balance, relative to `c`.
    pub fn check_conservation(&self, rel_tol: f64) -> Result<(), InverseError> {
        let scale = self.total.abs().max(f64::MIN_POSITIVE);
        if self.budget_defect().abs() <= rel_tol * scale && self.balance_defect().abs() <= rel_tol * scale {
            Ok(())
        } else {
            Err(InverseError::BudgetInconsistent {
                sum: self.sum(),
                total: self.total,
                balance_defect: self.balance_defect(),
                consistent_residual: self.conserving().residual,
            })
        }
    }

    /// The member of the same ray of weight vectors with `Σ B̄_i = c`, with
    /// its residual taken from the flow balance.
    ///
    /// Rescaling leaves the weighted Fermat-Torricelli point unchanged.
    pub fn conserving(&self) -> MixedWeightSet {
        let scale = self.total / self.sum();
        let weights: Vec<f64> = self.weights.iter().map(|w| w * scale).collect();
        let mut out = MixedWeightSet { weights, residual: 0.0, total: self.total, outflow: self.outflow };
        out.residual = out.inflow_sum() - out.weights[out.outflow];
        out
    }
}

fn check_budget(c: f64, residual: f64) -> Result<(), InverseError> {
    if !(c.is_finite() && residual.is_finite() && c > residual) {
        return Err(InverseError::InvalidMassBudget { c, residual });
    }
    Ok(())
}

fn check_rays(rays: &RaySystem, expected: usize) -> Result<(), InverseError> {
    if rays.len() != expected {
        return Err(InverseError::RayCount { expected, got: rays.len() });
    }
    Ok(())
}

fn others(n: usize, skip: &[usize]) -> Vec<usize> {
    (0..n).filter(|i| !skip.contains(i)).collect()
}

/// `sin α_{i,k0m}`, from the mutual-angle table of `rays`.
pub(crate) fn projected_sine(rays: &RaySystem, i: usize, k: usize, m: usize) -> Result<f64, InverseError> {
    Ok(rays.projected_angle(i, k, m)?.sin())
}

fn nonzero_sine(rays: &RaySystem, i: usize, k: usize, m: usize) -> Result<f64, InverseError> {
    let s = projected_sine(rays, i, k, m)?;
    if s <= SINE_FLOOR {
        return Err(InverseError::DegenerateProjection { ray: i, k, m });
    }
    Ok(s)
}

/// Weight ratios `B̄_i / B̄_m` for four rays with outflow ray `m`:
/// `sin α_{m,k0l} / sin α_{i,k0l}` where `k, l` are the remaining rays.
/// The entry for `m` itself is 1.
pub fn tetra_ratios(rays: &RaySystem, outflow: usize) -> Result<[f64; 4], InverseError> {
    check_rays(rays, 4)?;
    let mut out = [1.0; 4];
    for i in others(4, &[outflow]) {
        let kl = others(4, &[outflow, i]);
        let num = projected_sine(rays, outflow, kl[0], kl[1])?;
        let den = nonzero_sine(rays, i, kl[0], kl[1])?;
        out[i] = num / den;
    }
    Ok(out)
}

/// Mixed inverse for four rays with the conventional outflow ray (the last).
pub fn mixed_inverse_tetrahedron(rays: &RaySystem, c: f64, residual: f64) -> Result<MixedWeightSet, InverseError> {
    mixed_inverse_tetrahedron_with_outflow(rays, c, residual, 3)
}

/// Mixed inverse for four rays: `B̄_m = (c − B̄₀)/2` and
/// `B̄_i = (sin α_{m,k0l} / sin α_{i,k0l}) (c − B̄₀)/2`.
pub fn mixed_inverse_tetrahedron_with_outflow(
    rays: &RaySystem,
    c: f64,
    residual: f64,
    outflow: usize,
) -> Result<MixedWeightSet, InverseError> {
    check_rays(rays, 4)?;
    check_budget(c, residual)?;
    if outflow >= 4 {
        return Err(InverseError::RayCount { expected: 4, got: outflow + 1 });
    }
    if !rays.positively_spanning() {
        return Err(InverseError::NotInterior("the four rays lie in a closed half-space".into()));
    }
    let set = tetra_formula_weights(rays, outflow, c, residual)?;
    positive(set)
}

/// The weight formulas without the interiority and positivity checks.
pub(crate) fn tetra_formula_weights(
    rays: &RaySystem,
    outflow: usize,
    c: f64,
    residual: f64,
) -> Result<MixedWeightSet, InverseError> {
    let half = (c - residual) / 2.0;
    let weights = tetra_ratios(rays, outflow)?.iter().map(|r| r * half).collect();
    Ok(MixedWeightSet { weights, residual, total: c, outflow })
}

fn positive(set: MixedWeightSet) -> Result<MixedWeightSet, InverseError> {
    if let Some((index, &value)) = set.weights.iter().enumerate().find(|(_, w)| !(**w > 0.0)) {
        return Err(InverseError::NonpositiveWeight { index, value });
    }
    Ok(set)
}

/// The residual for which the mixed solution also meets `Σ B̄_i = c`:
/// `B̄₀ = c (1 − 2 / (1 + Σ_{i≠m} sin α_{m,k0l} / sin α_{i,k0l}))`.
pub fn residual_for_unique_inverse_tetra(rays: &RaySystem, c: f64) -> Result<f64, InverseError> {
    check_rays(rays, 4)?;
    if !rays.positively_spanning() {
        return Err(InverseError::NotInterior("the four rays lie in a closed half-space".into()));
    }
    let ratios = tetra_ratios(rays, 3)?;
    let s: f64 = ratios[..3].iter().sum();
    Ok(c * (1.0 - 2.0 / (1.0 + s)))
}

/// Classical inverse for four rays through the mixed formulas at the
/// conserving residual.
pub fn inverse_tetrahedron(rays: &RaySystem, c: f64) -> Result<MixedWeightSet, InverseError> {
    let residual = residual_for_unique_inverse_tetra(rays, c)?;
    mixed_inverse_tetrahedron(rays, c, residual)
}

/// Classical inverse weights for four rays, each computed directly:
/// `B̄_i = c / (1 + sin α_{i,j0k}/sin α_{l,j0k} + sin α_{i,j0l}/sin α_{k,j0l} + sin α_{i,k0l}/sin α_{j,k0l})`.
pub fn classical_inverse_tetrahedron(rays: &RaySystem, c: f64) -> Result<[f64; 4], InverseError> {
    check_rays(rays, 4)?;
    if !rays.positively_spanning() {
        return Err(InverseError::NotInterior("the four rays lie in a closed half-space".into()));
    }
    let mut out = [0.0; 4];
    for (i, w) in out.iter_mut().enumerate() {
        let rest = others(4, &[i]);
        let mut denom = 1.0;
        // for each other ray, the plane is spanned by the remaining two
        for &other in &rest {
            let plane = others(4, &[i, other]);
            denom += projected_sine(rays, i, plane[0], plane[1])? / nonzero_sine(rays, other, plane[0], plane[1])?;
        }
        *w = c / denom;
    }
    Ok(out)
}

fn check_triangle_angles(a102: f64, a103: f64) -> Result<(), InverseError> {
    use std::f64::consts::PI;
    let ok = |a: f64| a.is_finite() && a > 0.0 && a < PI;
    if !ok(a102) || !ok(a103) {
        return Err(InverseError::NotInterior(format!("angles ({a102}, {a103}) must lie in (0, π)")));
    }
    let sum = a102 + a103;
    if !(sum > PI && sum < 2.0 * PI) {
        return Err(InverseError::NotInterior(format!("α102 + α103 = {sum} must lie in (π, 2π)")));
    }
    Ok(())
}

/// Triangle mixed inverse with outflow vertex 3 (index 2):
/// `B̄₁ = −(sin(α₁₀₃+α₁₀₂)/sin α₁₀₂)(c − B̄₀)/2`,
/// `B̄₂ = (sin α₁₀₃/sin α₁₀₂)(c − B̄₀)/2`, `B̄₃ = (c − B̄₀)/2`.
pub fn mixed_inverse_triangle(a102: f64, a103: f64, c: f64, residual: f64) -> Result<MixedWeightSet, InverseError> {
    check_triangle_angles(a102, a103)?;
    check_budget(c, residual)?;
    let half = (c - residual) / 2.0;
    let s = a102.sin();
    let weights = vec![-(a103 + a102).sin() / s * half, a103.sin() / s * half, half];
    positive(MixedWeightSet { weights, residual, total: c, outflow: 2 })
}

/// `B̄₀ = c (1 − 2 / (1 − sin(α₁₀₃+α₁₀₂)/sin α₁₀₂ + sin α₁₀₃/sin α₁₀₂))`.
///
/// As `α₁₀₂ → π` the sine ratios blow up and the residual tends to `c`.
pub fn residual_for_unique_inverse_triangle(a102: f64, a103: f64, c: f64) -> Result<f64, InverseError> {
    check_triangle_angles(a102, a103)?;
    let s = a102.sin();
    Ok(c * (1.0 - 2.0 / (1.0 - (a103 + a102).sin() / s + a103.sin() / s)))
}

/// Classical inverse weights of a triangle from the three angles at `A₀`:
/// `B̄_i = c / (1 + sin α_{j0i}/sin α_{j0k} + sin α_{k0i}/sin α_{j0k})`.
pub fn classical_inverse_triangle(a102: f64, a103: f64, a203: f64, c: f64) -> Result<[f64; 3], InverseError> {
    check_triangle_angles(a102, a103)?;
    // angle[i][j] = α_{i0j}
    let angle = [[0.0, a102, a103], [a102, 0.0, a203], [a103, a203, 0.0]];
    let mut out = [0.0; 3];
    for (i, w) in out.iter_mut().enumerate() {
        let (j, k) = ((i + 1) % 3, (i + 2) % 3);
        let sjk = angle[j][k].sin();
        *w = c / (1.0 + angle[j][i].sin() / sjk + angle[k][i].sin() / sjk);
    }
    Ok(out)
}

/// The angles `(α₁₀₂, α₁₀₃, α₂₀₃)` at `A₀` of a triangle.
pub fn triangle_angles(a0: Point, vertices: &[Point; 3]) -> Result<(f64, f64, f64), InverseError> {
    Ok((
        geom::angle_at(a0, vertices[0], vertices[1])?,
        geom::angle_at(a0, vertices[0], vertices[2])?,
        geom::angle_at(a0, vertices[1], vertices[2])?,
    ))
}

/// Signed weight ratio `B_i / B_j` for three coplanar rays that balance,
/// `B_i u_i + B_j u_j + B_k u_k = 0`. Negative when no positive balance
/// exists, i.e. when `A₀` is outside the triangle.
pub fn triangle_weight_ratio(ui: &UnitVector, uj: &UnitVector, uk: &UnitVector) -> Result<f64, InverseError> {
    let (i, j, k) = (ui.components(), uj.components(), uk.components());
    let num = j.cross(&k);
    let den = i.cross(&k);
    if den.norm() <= SINE_FLOOR {
        return Err(InverseError::DegenerateProjection { ray: 0, k: 2, m: 2 });
    }
    // both cross products are parallel to the common plane normal
    Ok(-num.dot(&den) / den.dot(&den))
}

/// Whether `weights` (and the same set with `B̄_v` raised by `delta`) put
/// the minimizer of the triangle at vertex `v`, showing that the absorbed
/// solution does not fix the weights.
pub fn check_absorbed_family(triangle: &[Point; 3], vertex: usize, weights: &MixedWeightSet, delta: f64) -> bool {
    if vertex >= 3 || weights.weights.len() != 3 || !(delta >= 0.0) {
        return false;
    }
    let absorbed = |w: &[f64]| {
        let mut pull = Point::ORIGIN;
        for j in 0..3 {
            if j != vertex {
                match geom::unit_vector(triangle[vertex], triangle[j]) {
                    Ok(u) => pull += u.components() * w[j],
                    Err(_) => return false,
                }
            }
        }
        let tol = ABSORB_TOL * w.iter().map(|x| x.abs()).sum::<f64>().max(1.0);
        if pull.norm() > w[vertex] + tol {
            return false;
        }
        match BoundaryConfiguration::new(triangle.to_vec(), w.to_vec()) {
            Ok(cfg) => forward::classify(&cfg, tol) == FtCase::Absorbed(vertex),
            Err(_) => false,
        }
    };
    let mut raised = weights.weights.clone();
    raised[vertex] += delta;
    absorbed(&weights.weights) && absorbed(&raised)
}

/// Free parameters of a two-way flow: the return flows `B̃_i` on the
/// non-outflow vertices (in index order) and the returned residual `B̃₀`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowSplit {
    pub return_flows: Vec<f64>,
    pub residual_return: f64,
}

impl FlowSplit {
    /// One-way flow: nothing returns, `B̃₀ = 0`.
    pub fn one_way(n: usize) -> Self {
        Self { return_flows: vec![0.0; n.saturating_sub(1)], residual_return: 0.0 }
    }
}

/// `B̄_i = B_i + B̃_i` with `Σ_{i≠m} B_i = B_m + B₀`,
/// `Σ_{i≠m} B̃_i + B̃₀ = B̃_m` and `B̄₀ = B₀ − B̃₀`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowDecomposition {
    /// `B_i`: towards `A₀` for `i ≠ m`, away from `A₀` for `m`.
    pub forward: Vec<f64>,
    /// `B̃_i`: away from `A₀` for `i ≠ m`, towards `A₀` for `m`.
    pub returned: Vec<f64>,
    pub residual: f64,
    pub residual_return: f64,
    pub outflow: usize,
}

pub fn flow_decompose(set: &MixedWeightSet, split: &FlowSplit) -> Result<FlowDecomposition, InverseError> {
    let n = set.weights.len();
    let m = set.outflow;
    if split.return_flows.len() + 1 != n {
        return Err(InverseError::InfeasibleSplit(format!(
            "expected {} return flows, got {}",
            n - 1,
            split.return_flows.len()
        )));
    }
    let scale = set.total.abs().max(set.sum().abs()).max(f64::MIN_POSITIVE);
    if set.balance_defect().abs() > 1e-10 * scale {
        return Err(InverseError::InfeasibleSplit(format!(
            "weights are not balanced (defect {:e})",
            set.balance_defect()
        )));
    }
    if split.return_flows.iter().chain([&split.residual_return]).any(|f| !(*f >= 0.0)) {
        return Err(InverseError::InfeasibleSplit("return flows must be nonnegative".into()));
    }
    let mut returned = vec![0.0; n];
    for (slot, &r) in others(n, &[m]).into_iter().zip(&split.return_flows) {
        returned[slot] = r;
    }
    returned[m] = split.return_flows.iter().sum::<f64>() + split.residual_return;
    let forward: Vec<f64> = set.weights.iter().zip(&returned).map(|(w, r)| w - r).collect();
    if let Some(i) = forward.iter().position(|f| *f < -1e-15 * scale) {
        return Err(InverseError::InfeasibleSplit(format!(
            "return flow at vertex {i} exceeds its weight (forward flow {})",
            forward[i]
        )));
    }
    let residual = others(n, &[m]).iter().map(|&i| forward[i]).sum::<f64>() - forward[m];
    Ok(FlowDecomposition { forward, returned, residual, residual_return: split.residual_return, outflow: m })
}

/// Closed-form partial derivatives `∂a₀₄/∂a₀₁, ∂a₀₄/∂a₀₂, ∂a₀₄/∂a₀₃` for
/// a junction inside the tetrahedron: `−sin α_{4,j0k} / sin α_{i,j0k}` with
/// `j, k` the other two of the first three vertices.
pub fn partial_distance_derivatives(vertices: &[Point; 4], a0: Point) -> Result<[f64; 3], InverseError> {
    let rays = RaySystem::from_points(a0, vertices)?;
    let mut out = [0.0; 3];
    for (i, d) in out.iter_mut().enumerate() {
        let jk = others(3, &[i]);
        *d = -projected_sine(&rays, 3, jk[0], jk[1])? / nonzero_sine(&rays, i, jk[0], jk[1])?;
    }
    Ok(out)
}

/// Expresses `a₀ᵢ` (for vertices beyond the third) through `a₀₁, a₀₂, a₀₃`
/// with the boundary vertices fixed, by eliminating the dihedral angle
/// between the planes `A₁A₂A₃` and `A₁A₂A₀`.
///
/// With `p` the signed distance from `A₂` to the foot of the height of
/// `A₀A₁A₂`, `h` that height, and `X` the cosine of the eliminated dihedral
/// angle,
/// `a₀ᵢ² = a₀₂² + a₂ᵢ² − 2a₂ᵢ[p cos α₁₂ᵢ + h sin α₁₂ᵢ (cos α_gᵢ X + sin α_gᵢ √(1 − X²))]`.
#[derive(Debug, Clone)]
pub struct DistanceElimination {
    a12: f64,
    a23: f64,
    cos123: f64,
    sin123: f64,
    targets: Vec<EliminationTarget>,
}

#[derive(Debug, Clone)]
struct EliminationTarget {
    a2i: f64,
    cos12i: f64,
    sin12i: f64,
    cos_g: f64,
    sin_g: f64,
}

impl DistanceElimination {
    /// `vertices` are `A₁..A_n` (n = 4 or 5); `reference` fixes on which
    /// side of the plane `A₁A₂A₃` the junction sits.
    pub fn new(vertices: &[Point], reference: Point) -> Result<Self, InverseError> {
        if !(4..=5).contains(&vertices.len()) {
            return Err(InverseError::RayCount { expected: 4, got: vertices.len() });
        }
        let (a1, a2, a3) = (vertices[0], vertices[1], vertices[2]);
        let mut axis = geom::unit_vector(a2, a1)?;
        if geom::signed_dihedral(a2, &axis, a3, reference)? < 0.0 {
            axis = geom::unit_vector(a1, a2)?;
        }
        let a123 = geom::angle_at(a2, a1, a3)?;
        let mut targets = Vec::new();
        for &ai in &vertices[3..] {
            let a12i = geom::angle_at(a2, a1, ai)?;
            let g = geom::signed_dihedral(a2, &axis, a3, ai)?;
            targets.push(EliminationTarget {
                a2i: a2.distance(&ai),
                cos12i: a12i.cos(),
                sin12i: a12i.sin(),
                cos_g: g.cos(),
                sin_g: g.sin(),
            });
        }
        Ok(Self {
            a12: a1.distance(&a2),
            a23: a2.distance(&a3),
            cos123: a123.cos(),
            sin123: a123.sin(),
            targets,
        })
    }

    /// `a₀ᵢ(a₀₁, a₀₂, a₀₃)` for vertex index `target` (3 or 4).
    pub fn distance(&self, target: usize, a01: f64, a02: f64, a03: f64) -> Result<f64, InverseError> {
        let t = target
            .checked_sub(3)
            .and_then(|k| self.targets.get(k))
            .ok_or(InverseError::RayCount { expected: self.targets.len() + 3, got: target + 1 })?;
        let p = (a02 * a02 + self.a12 * self.a12 - a01 * a01) / (2.0 * self.a12);
        let h2 = a02 * a02 - p * p;
        if !(h2 > 0.0) {
            return Err(InverseError::EliminationDomain(format!("height² = {h2}")));
        }
        let h = h2.sqrt();
        let x = ((a02 * a02 + self.a23 * self.a23 - a03 * a03) / (2.0 * self.a23) - p * self.cos123) / (h * self.sin123);
        if !(x.abs() <= 1.0) {
            return Err(InverseError::EliminationDomain(format!("cos of the dihedral angle = {x}")));
        }
        let sin_alpha = (1.0 - x * x).sqrt();
        let bracket = p * t.cos12i + h * t.sin12i * (t.cos_g * x + t.sin_g * sin_alpha);
        let sq = a02 * a02 + t.a2i * t.a2i - 2.0 * t.a2i * bracket;
        if sq < 0.0 {
            return Err(InverseError::EliminationDomain(format!("a₀ᵢ² = {sq}")));
        }
        Ok(sq.sqrt())
    }
}
