//! JSON documents and command dispatch for the `fermat` binary.
//!
//! Every command reads a [`ProblemDocument`], calls into the library and
//! writes a [`ResultDocument`] (or CSV rows for a plasticity sweep).
//! Failures are reported as a JSON object on stderr with exit code 2 for
//! invalid input and 3 for numerical failure.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;

use crate::angles::{AngleError, AngleSystem, RaySystem};
use crate::forward::{self, BoundaryConfiguration, FtCase, SolverError, SolverOptions};
use crate::geom::{GeomError, Point};
use crate::inverse::{self, InverseError, MixedWeightSet};
use crate::oracle::{self, OracleError};
use crate::plasticity::{self, FeasibleInterval, PlasticityError, SignConfiguration};

pub const FORMAT_VERSION: &str = "1";

/// Oracle refinement levels when a document does not say.
pub const DEFAULT_ORACLE_LEVELS: usize = 8;

/// Subcommands; each handles one [`ProblemKind`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Solve,
    Inverse,
    MixedInverse,
    PlasticityHexa,
    PlasticityQuad,
    Angles,
    Verify,
}

impl Command {
    pub const ALL: [Command; 7] = [
        Command::Solve,
        Command::Inverse,
        Command::MixedInverse,
        Command::PlasticityHexa,
        Command::PlasticityQuad,
        Command::Angles,
        Command::Verify,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::Solve => "solve",
            Command::Inverse => "inverse",
            Command::MixedInverse => "mixed-inverse",
            Command::PlasticityHexa => "plasticity-hexa",
            Command::PlasticityQuad => "plasticity-quad",
            Command::Angles => "angles",
            Command::Verify => "verify",
        }
    }

    pub fn kind(self) -> ProblemKind {
        match self {
            Command::Solve => ProblemKind::Forward,
            Command::Inverse => ProblemKind::Inverse,
            Command::MixedInverse => ProblemKind::MixedInverse,
            Command::PlasticityHexa => ProblemKind::PlasticityHexa,
            Command::PlasticityQuad => ProblemKind::PlasticityQuad,
            Command::Angles => ProblemKind::Angles,
            Command::Verify => ProblemKind::Verify,
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Command {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Command::ALL.into_iter().find(|c| c.name() == s).ok_or_else(|| format!("unknown command `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProblemKind {
    Forward,
    Inverse,
    MixedInverse,
    PlasticityHexa,
    PlasticityQuad,
    Angles,
    Verify,
}

/// Angles at `A₀`: `α₁₀₂`, then `α₁₀ᵢ` and `α₂₀ᵢ` for `i ≥ 3`.
///
/// One entry in `from_first` describes a triangle (`α₁₀₃`, with `α₂₀₃`
/// optional); two or three describe four or five rays in space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AngleInput {
    pub a102: f64,
    pub from_first: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub from_second: Vec<f64>,
    /// Hemisphere of each ray beyond the second relative to the plane
    /// `A₁A₀A₂`, `+1` or `-1`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bits: Option<Vec<i8>>,
}

impl AngleInput {
    fn to_radians(&self) -> AngleInput {
        let r = |a: f64| a.to_radians();
        AngleInput {
            a102: r(self.a102),
            from_first: self.from_first.iter().map(|a| r(*a)).collect(),
            from_second: self.from_second.iter().map(|a| r(*a)).collect(),
            bits: self.bits.clone(),
        }
    }
}

/// Input document. Only the fields a command needs are required.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemDocument {
    #[serde(default = "default_version")]
    pub version: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<ProblemKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vertices: Option<Vec<Point>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
    /// The prescribed junction `A₀`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub junction: Option<Point>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub angles: Option<AngleInput>,
    /// Mass budget.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    /// Residual weight `B̄₀` left at the junction.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub residual: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub residual_split: Option<[f64; 3]>,
    /// `B̄₅` for hexahedra, `B̄₄` for quadrilaterals.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub free_weight: Option<f64>,
    /// Outflow vertex of a tetrahedral mixed inverse (0-based).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outflow: Option<usize>,
    /// Angles are in degrees.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub degrees: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Oracle refinement levels.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub levels: Option<usize>,
}

fn default_version() -> String {
    FORMAT_VERSION.to_string()
}

impl ProblemDocument {
    pub fn new(kind: ProblemKind) -> Self {
        Self {
            version: default_version(),
            kind: Some(kind),
            vertices: None,
            weights: None,
            junction: None,
            angles: None,
            c: None,
            residual: None,
            residual_split: None,
            free_weight: None,
            outflow: None,
            degrees: false,
            tol: None,
            seed: None,
            levels: None,
        }
    }
}

/// An interval endpoint of `null` means unbounded.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: Option<f64>,
    pub hi: Option<f64>,
}

impl From<FeasibleInterval> for Interval {
    fn from(iv: FeasibleInterval) -> Self {
        let finite = |x: f64| x.is_finite().then_some(x);
        Interval { lo: finite(iv.lo), hi: finite(iv.hi) }
    }
}

/// Candidate values of `cos α_{i0j}` for a pair of rays beyond the second.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RootPair {
    pub i: usize,
    pub j: usize,
    /// Rays on opposite sides of the plane `A₁A₀A₂`.
    pub opposite: f64,
    /// Rays on the same side.
    pub same: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resolved: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Outputs {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub point: Option<Point>,
    #[serde(default, skip_serializing_if = "Option::is_none", flatten)]
    pub case: Option<FtCase>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub objective: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub residual: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub total: Option<f64>,
    /// The budget-conserving member of a mixed weight family.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub conserving_weights: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub conserving_residual: Option<f64>,
    /// The residual at which the mixed weights sum to `c`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unique_residual: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub free_weight: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub interval: Option<Interval>,
    /// `α_{i0j}` for all pairs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub angles: Option<Vec<Vec<f64>>>,
    /// `cos² α_{i,102}` for rays beyond the second.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub polar_cos2: Option<Vec<f64>>,
    /// `α_{i,102}`, in the output angle unit.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub polar_offsets: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub roots: Option<Vec<RootPair>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub directions: Option<Vec<Point>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bits: Option<Vec<i8>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub signs: Option<SignConfiguration>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle_point: Option<Point>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle_case: Option<FtCase>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kkt_residual: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iterations: Option<usize>,
    /// Oracle objective minus solver objective; never much below zero.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle_gap: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle_distance: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget_defect: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub balance_defect: Option<f64>,
    /// Distance from the prescribed junction to the forward-solved one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub junction_deviation: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultDocument {
    pub version: String,
    pub command: String,
    pub input: ProblemDocument,
    pub outputs: Outputs,
    pub diagnostics: Diagnostics,
    /// Unit of `outputs.angles`.
    pub angle_unit: AngleUnit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AngleUnit {
    Radians,
    Degrees,
}

/// Command-line overrides; each takes precedence over the document.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Flags {
    pub tol: Option<f64>,
    pub seed: Option<u64>,
    pub sweep: Option<usize>,
    pub oracle: bool,
    pub degrees: bool,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CliError {
    #[error("{message}")]
    Validation { message: String, pointer: Option<String> },
    #[error("{message}")]
    Numerical { message: String, detail: Option<serde_json::Value> },
    #[error("the feasible interval of the free weight is empty")]
    EmptyFeasibleInterval,
}

impl CliError {
    fn invalid(message: impl Into<String>, pointer: &str) -> Self {
        CliError::Validation { message: message.into(), pointer: Some(pointer.to_string()) }
    }

    fn numerical(message: impl Into<String>) -> Self {
        CliError::Numerical { message: message.into(), detail: None }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation { .. } => 2,
            CliError::Numerical { .. } | CliError::EmptyFeasibleInterval => 3,
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        let kind = if self.exit_code() == 2 { "validation" } else { "numerical" };
        let mut body = json!({ "kind": kind, "message": self.to_string() });
        match self {
            CliError::Validation { pointer: Some(p), .. } => body["pointer"] = json!(p),
            CliError::Numerical { detail: Some(d), .. } => body["detail"] = d.clone(),
            _ => {}
        }
        json!({ "error": body })
    }
}

impl From<SolverError> for CliError {
    fn from(e: SolverError) -> Self {
        match e {
            SolverError::InvalidConfiguration(_) | SolverError::BadTolerance(_) => {
                CliError::Validation { message: e.to_string(), pointer: None }
            }
            SolverError::MaxIterationsExceeded { iterations, best, residual } => CliError::Numerical {
                message: e.to_string(),
                detail: Some(json!({ "iterations": iterations, "best": best, "kkt_residual": residual })),
            },
            SolverError::AtVertex(_) => CliError::numerical(e.to_string()),
        }
    }
}

impl From<GeomError> for CliError {
    fn from(e: GeomError) -> Self {
        CliError::Validation { message: e.to_string(), pointer: None }
    }
}

impl From<AngleError> for CliError {
    fn from(e: AngleError) -> Self {
        match e {
            AngleError::RootOutOfRange { .. } | AngleError::NoMatchingRoot { .. } => CliError::numerical(e.to_string()),
            AngleError::BadBits { .. } => CliError::invalid(e.to_string(), "/angles/bits"),
            _ => CliError::Validation { message: e.to_string(), pointer: None },
        }
    }
}

impl From<InverseError> for CliError {
    fn from(e: InverseError) -> Self {
        match e {
            InverseError::Angle(a) => a.into(),
            InverseError::Geom(g) => g.into(),
            InverseError::InvalidMassBudget { .. } => CliError::invalid(e.to_string(), "/residual"),
            InverseError::DegenerateProjection { .. }
            | InverseError::EliminationDomain(_)
            | InverseError::BudgetInconsistent { .. } => CliError::numerical(e.to_string()),
            _ => CliError::Validation { message: e.to_string(), pointer: None },
        }
    }
}

impl From<PlasticityError> for CliError {
    fn from(e: PlasticityError) -> Self {
        match e {
            PlasticityError::Inverse(i) => i.into(),
            PlasticityError::Angle(a) => a.into(),
            PlasticityError::Geom(g) => g.into(),
            PlasticityError::Solver(s) => s.into(),
            PlasticityError::InvalidMassBudget { .. } => CliError::invalid(e.to_string(), "/residual"),
            PlasticityError::InvalidSplit { .. } => CliError::invalid(e.to_string(), "/residual_split"),
            PlasticityError::NotInterior | PlasticityError::NotCoplanar { .. } => {
                CliError::invalid(e.to_string(), "/junction")
            }
            PlasticityError::NonpositiveWeight { .. } => CliError::invalid(e.to_string(), "/free_weight"),
            PlasticityError::Degenerate(_) | PlasticityError::JunctionMoved { .. } => {
                CliError::numerical(e.to_string())
            }
            _ => CliError::Validation { message: e.to_string(), pointer: None },
        }
    }
}

impl From<OracleError> for CliError {
    fn from(e: OracleError) -> Self {
        CliError::numerical(e.to_string())
    }
}

/// Parses a document, reporting the JSON pointer of the offending field.
pub fn parse_document(text: &str) -> Result<ProblemDocument, CliError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let pointer = json_pointer(e.path());
        CliError::Validation { message: e.inner().to_string(), pointer: Some(pointer) }
    })
}

fn json_pointer(path: &serde_path_to_error::Path) -> String {
    use serde_path_to_error::Segment;
    let mut out = String::new();
    for seg in path.iter() {
        out.push('/');
        match seg {
            Segment::Seq { index } => out.push_str(&index.to_string()),
            Segment::Map { key } => out.push_str(&key.replace('~', "~0").replace('/', "~1")),
            Segment::Enum { variant } => out.push_str(variant),
            Segment::Unknown => out.push('?'),
        }
    }
    out
}

fn require<T: Clone>(field: &Option<T>, pointer: &str) -> Result<T, CliError> {
    field.clone().ok_or_else(|| CliError::invalid(format!("missing field `{}`", &pointer[1..]), pointer))
}

fn finite(x: f64, pointer: &str) -> Result<f64, CliError> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(CliError::invalid(format!("{x} is not a finite number"), pointer))
    }
}

fn fixed<const N: usize>(points: Vec<Point>, pointer: &str) -> Result<[Point; N], CliError> {
    let got = points.len();
    points.try_into().map_err(|_| CliError::invalid(format!("expected {N} points, got {got}"), pointer))
}

/// A document after unit conversion and flag overrides.
struct Context {
    doc: ProblemDocument,
    angles: Option<AngleInput>,
    opts: SolverOptions,
    seed: u64,
    degrees: bool,
    flags: Flags,
}

impl Context {
    fn new(doc: ProblemDocument, flags: &Flags) -> Result<Self, CliError> {
        let degrees = flags.degrees || doc.degrees;
        let angles = doc.angles.as_ref().map(|a| if degrees { a.to_radians() } else { a.clone() });
        let tol = flags.tol.or(doc.tol).unwrap_or(forward::DEFAULT_TOL);
        if !(tol.is_finite() && tol > 0.0) {
            return Err(CliError::invalid(format!("tolerance {tol} must be positive"), "/tol"));
        }
        let opts = SolverOptions { tol, ..SolverOptions::default() };
        let seed = flags.seed.or(doc.seed).unwrap_or(0);
        Ok(Self { doc, angles, opts, seed, degrees, flags: flags.clone() })
    }

    fn config(&self) -> Result<BoundaryConfiguration, CliError> {
        let vertices = require(&self.doc.vertices, "/vertices")?;
        let weights = require(&self.doc.weights, "/weights")?;
        if weights.len() != vertices.len() {
            return Err(CliError::invalid(
                format!("{} weights for {} vertices", weights.len(), vertices.len()),
                "/weights",
            ));
        }
        BoundaryConfiguration::new(vertices, weights).map_err(|e| CliError::invalid(e.to_string(), "/weights"))
    }

    fn c(&self) -> Result<f64, CliError> {
        finite(require(&self.doc.c, "/c")?, "/c")
    }

    fn angle_out(&self, a: f64) -> f64 {
        if self.degrees {
            a.to_degrees()
        } else {
            a
        }
    }

    fn angle_table(&self, rays: &RaySystem) -> Vec<Vec<f64>> {
        (0..rays.len()).map(|i| (0..rays.len()).map(|j| self.angle_out(rays.angle(i, j))).collect()).collect()
    }

    fn junction_deviation(&self, vertices: &[Point], weights: &[f64], a0: Point) -> Result<f64, CliError> {
        let config = BoundaryConfiguration::new(vertices.to_vec(), weights.to_vec())?;
        Ok(forward::solve(&config, self.opts)?.point.distance(&a0))
    }

    fn result(&self, command: Command, outputs: Outputs, diagnostics: Diagnostics) -> ResultDocument {
        ResultDocument {
            version: FORMAT_VERSION.to_string(),
            command: command.name().to_string(),
            input: self.doc.clone(),
            outputs,
            diagnostics,
            angle_unit: if self.degrees { AngleUnit::Degrees } else { AngleUnit::Radians },
        }
    }
}

/// The geometry an inverse command works on.
enum InverseGeometry {
    Triangle { a102: f64, a103: f64, a203: Option<f64> },
    Rays(RaySystem),
}

fn inverse_geometry(ctx: &Context) -> Result<(InverseGeometry, Option<(Vec<Point>, Point)>), CliError> {
    match (&ctx.angles, &ctx.doc.vertices) {
        (Some(a), None) => {
            for (k, v) in std::iter::once(&a.a102).chain(&a.from_first).chain(&a.from_second).enumerate() {
                finite(*v, &format!("/angles/{k}"))?;
            }
            if a.from_first.len() == 1 {
                Ok((InverseGeometry::Triangle { a102: a.a102, a103: a.from_first[0], a203: a.from_second.first().copied() }, None))
            } else {
                let sys = AngleSystem::new(a.a102, a.from_first.clone(), a.from_second.clone())?;
                let bits = a.bits.clone().unwrap_or_else(|| default_bits(sys.ray_count()));
                Ok((InverseGeometry::Rays(sys.reconstruct_rays(&bits)?), None))
            }
        }
        (None, Some(vertices)) => {
            let a0 = require(&ctx.doc.junction, "/junction")?;
            match vertices.len() {
                3 => {
                    let tri: [Point; 3] = fixed(vertices.clone(), "/vertices")?;
                    let (a102, a103, a203) = inverse::triangle_angles(a0, &tri)?;
                    Ok((InverseGeometry::Triangle { a102, a103, a203: Some(a203) }, Some((vertices.clone(), a0))))
                }
                4 => Ok((InverseGeometry::Rays(RaySystem::from_points(a0, vertices)?), Some((vertices.clone(), a0)))),
                n => Err(CliError::invalid(format!("expected 3 or 4 vertices, got {n}"), "/vertices")),
            }
        }
        (Some(_), Some(_)) => Err(CliError::invalid("give either angles or vertices, not both", "/angles")),
        (None, None) => Err(CliError::invalid("missing field `vertices` (or `angles`)", "/vertices")),
    }
}

/// Rays beyond the second alternate sides, as for a simplex.
fn default_bits(rays: usize) -> Vec<i8> {
    (0..rays - 2).map(|k| if k % 2 == 0 { 1 } else { -1 }).collect()
}

fn run_solve(ctx: &Context) -> Result<ResultDocument, CliError> {
    let config = ctx.config()?;
    let sol = forward::solve(&config, ctx.opts)?;
    let mut outputs = Outputs {
        point: Some(sol.point),
        case: Some(sol.case),
        objective: Some(sol.objective),
        ..Outputs::default()
    };
    if sol.case == FtCase::Floating {
        let rays = RaySystem::from_points(sol.point, config.vertices())?;
        outputs.angles = Some(ctx.angle_table(&rays));
    }
    let mut diagnostics =
        Diagnostics { kkt_residual: Some(sol.kkt_residual), iterations: Some(sol.iterations), ..Diagnostics::default() };
    if ctx.flags.oracle {
        attach_oracle(ctx, &config, sol.point, sol.objective, &mut outputs, &mut diagnostics);
    }
    Ok(ctx.result(Command::Solve, outputs, diagnostics))
}

fn attach_oracle(
    ctx: &Context,
    config: &BoundaryConfiguration,
    point: Point,
    objective: f64,
    outputs: &mut Outputs,
    diagnostics: &mut Diagnostics,
) -> FtCase {
    let levels = ctx.doc.levels.unwrap_or(DEFAULT_ORACLE_LEVELS);
    let result = oracle::brute_force_min(config, levels, ctx.seed);
    let case = oracle::classify_by_oracle(config, &result);
    outputs.oracle_point = Some(result.minimizer);
    outputs.oracle_case = Some(case);
    diagnostics.oracle_gap = Some(result.objective - objective);
    diagnostics.oracle_distance = Some(result.minimizer.distance(&point));
    case
}

fn run_inverse(ctx: &Context) -> Result<ResultDocument, CliError> {
    let c = ctx.c()?;
    let (geometry, points) = inverse_geometry(ctx)?;
    let mut outputs = Outputs { total: Some(c), ..Outputs::default() };
    match geometry {
        InverseGeometry::Triangle { a102, a103, a203 } => {
            let a203 = a203.unwrap_or(2.0 * PI - a102 - a103);
            outputs.weights = Some(inverse::classical_inverse_triangle(a102, a103, a203, c)?.to_vec());
            outputs.unique_residual = Some(inverse::residual_for_unique_inverse_triangle(a102, a103, c)?);
        }
        InverseGeometry::Rays(rays) => {
            outputs.weights = Some(inverse::classical_inverse_tetrahedron(&rays, c)?.to_vec());
            outputs.unique_residual = Some(inverse::residual_for_unique_inverse_tetra(&rays, c)?);
            outputs.angles = Some(ctx.angle_table(&rays));
        }
    }
    let mut diagnostics = Diagnostics {
        budget_defect: outputs.weights.as_ref().map(|w| w.iter().sum::<f64>() - c),
        ..Diagnostics::default()
    };
    if let (Some((vertices, a0)), Some(w)) = (points, &outputs.weights) {
        diagnostics.junction_deviation = Some(ctx.junction_deviation(&vertices, w, a0)?);
    }
    Ok(ctx.result(Command::Inverse, outputs, diagnostics))
}

fn weight_set_outputs(set: &MixedWeightSet, outputs: &mut Outputs, diagnostics: &mut Diagnostics) {
    let fixed = set.conserving();
    outputs.weights = Some(set.weights.clone());
    outputs.residual = Some(set.residual);
    outputs.total = Some(set.total);
    outputs.conserving_weights = Some(fixed.weights);
    outputs.conserving_residual = Some(fixed.residual);
    diagnostics.budget_defect = Some(set.budget_defect());
    diagnostics.balance_defect = Some(set.balance_defect());
}

fn run_mixed_inverse(ctx: &Context) -> Result<ResultDocument, CliError> {
    let c = ctx.c()?;
    let residual = finite(require(&ctx.doc.residual, "/residual")?, "/residual")?;
    let (geometry, points) = inverse_geometry(ctx)?;
    let mut outputs = Outputs::default();
    let mut diagnostics = Diagnostics::default();
    let set = match geometry {
        InverseGeometry::Triangle { a102, a103, .. } => {
            if ctx.doc.outflow.is_some_and(|m| m != 2) {
                return Err(CliError::invalid("the triangle outflow vertex is 2", "/outflow"));
            }
            outputs.unique_residual = Some(inverse::residual_for_unique_inverse_triangle(a102, a103, c)?);
            inverse::mixed_inverse_triangle(a102, a103, c, residual)?
        }
        InverseGeometry::Rays(rays) => {
            let outflow = ctx.doc.outflow.unwrap_or(3);
            if outflow == 3 {
                outputs.unique_residual = Some(inverse::residual_for_unique_inverse_tetra(&rays, c)?);
            }
            outputs.angles = Some(ctx.angle_table(&rays));
            inverse::mixed_inverse_tetrahedron_with_outflow(&rays, c, residual, outflow)?
        }
    };
    weight_set_outputs(&set, &mut outputs, &mut diagnostics);
    if let Some((vertices, a0)) = points {
        diagnostics.junction_deviation = Some(ctx.junction_deviation(&vertices, &set.weights, a0)?);
    }
    Ok(ctx.result(Command::MixedInverse, outputs, diagnostics))
}

/// Hexahedron inputs: vertices, junction, budget, residual and split.
struct HexaInput {
    vertices: [Point; 5],
    a0: Point,
    c: f64,
    residual: f64,
    split: [f64; 3],
}

fn hexa_input(ctx: &Context) -> Result<HexaInput, CliError> {
    let vertices = fixed(require(&ctx.doc.vertices, "/vertices")?, "/vertices")?;
    let a0 = require(&ctx.doc.junction, "/junction")?;
    let c = ctx.c()?;
    let residual = finite(ctx.doc.residual.unwrap_or(0.0), "/residual")?;
    let split = ctx.doc.residual_split.unwrap_or_else(|| plasticity::equal_split(residual));
    Ok(HexaInput { vertices, a0, c, residual, split })
}

fn run_plasticity_hexa(ctx: &Context) -> Result<ResultDocument, CliError> {
    let h = hexa_input(ctx)?;
    let interval = plasticity::feasible_b5_interval(&h.vertices, h.a0, h.c, h.residual, h.split)?;
    let b5 = match ctx.doc.free_weight {
        Some(b) => finite(b, "/free_weight")?,
        None => *interval.samples(1, h.c).first().ok_or(CliError::EmptyFeasibleInterval)?,
    };
    let state = plasticity::hexahedron_plasticity(&h.vertices, h.a0, h.c, h.residual, h.split, b5)?;
    let fixed = state.conserving();
    let outputs = Outputs {
        weights: Some(state.weights.to_vec()),
        residual: Some(state.residual),
        total: Some(h.c),
        conserving_weights: Some(fixed.weights.to_vec()),
        conserving_residual: Some(fixed.residual),
        free_weight: Some(b5),
        interval: Some(interval.into()),
        signs: Some(state.signs.clone()),
        ..Outputs::default()
    };
    let diagnostics = Diagnostics {
        budget_defect: Some(state.budget_defect()),
        balance_defect: Some(state.balance_defect()),
        junction_deviation: Some(ctx.junction_deviation(&h.vertices, &state.weights, h.a0)?),
        ..Diagnostics::default()
    };
    Ok(ctx.result(Command::PlasticityHexa, outputs, diagnostics))
}

fn quad_input(ctx: &Context) -> Result<([Point; 4], Point, f64), CliError> {
    if ctx.doc.residual.is_some() {
        return Err(CliError::invalid(
            "a quadrilateral's residual is fixed by the flow balance; choose `free_weight` instead",
            "/residual",
        ));
    }
    let vertices = fixed(require(&ctx.doc.vertices, "/vertices")?, "/vertices")?;
    let a0 = require(&ctx.doc.junction, "/junction")?;
    Ok((vertices, a0, ctx.c()?))
}

fn run_plasticity_quad(ctx: &Context) -> Result<ResultDocument, CliError> {
    let (vertices, a0, c) = quad_input(ctx)?;
    let interval = plasticity::feasible_b4_interval(&vertices, a0, c)?;
    let b4 = match ctx.doc.free_weight {
        Some(b) => finite(b, "/free_weight")?,
        None => *interval.samples(1, c).first().ok_or(CliError::EmptyFeasibleInterval)?,
    };
    let state = plasticity::quadrilateral_plasticity(&vertices, a0, c, b4)?;
    let outputs = Outputs {
        weights: Some(state.weights.to_vec()),
        residual: Some(state.residual),
        total: Some(c),
        free_weight: Some(b4),
        interval: Some(interval.into()),
        ..Outputs::default()
    };
    let diagnostics = Diagnostics {
        budget_defect: Some(state.budget_defect()),
        balance_defect: Some(state.balance_defect()),
        junction_deviation: Some(ctx.junction_deviation(&vertices, &state.weights, a0)?),
        ..Diagnostics::default()
    };
    Ok(ctx.result(Command::PlasticityQuad, outputs, diagnostics))
}

fn run_angles(ctx: &Context) -> Result<ResultDocument, CliError> {
    let (sys, bits) = match (&ctx.angles, &ctx.doc.vertices) {
        (Some(a), None) => (AngleSystem::new(a.a102, a.from_first.clone(), a.from_second.clone())?, a.bits.clone()),
        (None, Some(vertices)) => {
            let a0 = require(&ctx.doc.junction, "/junction")?;
            let (sys, bits) = AngleSystem::measure(a0, vertices)?;
            (sys, Some(bits))
        }
        (Some(_), Some(_)) => return Err(CliError::invalid("give either angles or vertices, not both", "/angles")),
        (None, None) => return Err(CliError::invalid("missing field `angles` (or `vertices`)", "/angles")),
    };
    let n = sys.ray_count();
    let mut roots = Vec::new();
    for i in 2..n {
        for j in i + 1..n {
            let (opposite, same) = sys.candidate_cosines(i, j)?;
            let resolved = bits.as_ref().map(|b| sys.resolve_root(i, j, b)).transpose()?;
            roots.push(RootPair { i, j, opposite, same, resolved });
        }
    }
    let mut outputs = Outputs {
        polar_cos2: Some((2..n).map(|ray| sys.polar_cos2(ray)).collect()),
        polar_offsets: Some(sys.polar_offsets().into_iter().map(|a| ctx.angle_out(a)).collect()),
        roots: Some(roots),
        ..Outputs::default()
    };
    if let Some(b) = &bits {
        let rays = sys.reconstruct_rays(b)?;
        outputs.directions = Some(rays.directions.iter().map(|u| u.components()).collect());
        outputs.angles = Some(ctx.angle_table(&rays));
        outputs.bits = Some(b.clone());
    }
    Ok(ctx.result(Command::Angles, outputs, Diagnostics::default()))
}

fn run_verify(ctx: &Context) -> Result<ResultDocument, CliError> {
    let config = ctx.config()?;
    let sol = forward::solve(&config, ctx.opts)?;
    let mut outputs =
        Outputs { point: Some(sol.point), case: Some(sol.case), objective: Some(sol.objective), ..Outputs::default() };
    let mut diagnostics =
        Diagnostics { kkt_residual: Some(sol.kkt_residual), iterations: Some(sol.iterations), ..Diagnostics::default() };
    let oracle_case = attach_oracle(ctx, &config, sol.point, sol.objective, &mut outputs, &mut diagnostics);
    let gap = diagnostics.oracle_gap.unwrap_or(0.0);
    let scale = config.total_weight() * forward::objective(&config, sol.point).max(1.0);
    if oracle_case != sol.case || gap < -1e-9 * scale {
        return Err(CliError::Numerical {
            message: "solver and oracle disagree".into(),
            detail: Some(serde_json::to_value(ctx.result(Command::Verify, outputs, diagnostics)).unwrap_or_default()),
        });
    }
    Ok(ctx.result(Command::Verify, outputs, diagnostics))
}

/// Dispatches `command` on a parsed document.
pub fn run(command: Command, flags: &Flags, doc: ProblemDocument) -> Result<ResultDocument, CliError> {
    if let Some(kind) = doc.kind {
        if kind != command.kind() {
            return Err(CliError::invalid(format!("document kind {kind:?} does not match `{command}`"), "/kind"));
        }
    }
    if doc.version != FORMAT_VERSION {
        return Err(CliError::invalid(format!("unsupported version `{}`", doc.version), "/version"));
    }
    let ctx = Context::new(doc, flags)?;
    match command {
        Command::Solve => run_solve(&ctx),
        Command::Inverse => run_inverse(&ctx),
        Command::MixedInverse => run_mixed_inverse(&ctx),
        Command::PlasticityHexa => run_plasticity_hexa(&ctx),
        Command::PlasticityQuad => run_plasticity_quad(&ctx),
        Command::Angles => run_angles(&ctx),
        Command::Verify => run_verify(&ctx),
    }
}

/// CSV rows over `samples` free-weight values spread across the feasible
/// interval: the free weight, all weights, and the distance from the
/// forward-solved junction to the prescribed one.
pub fn emit_sweep(command: Command, flags: &Flags, doc: ProblemDocument, samples: usize) -> Result<String, CliError> {
    if samples == 0 {
        return Err(CliError::invalid("--sweep needs at least one sample", "/sweep"));
    }
    let ctx = Context::new(doc, flags)?;
    let mut rows: Vec<(f64, Vec<f64>)> = Vec::new();
    let a0;
    let vertices: Vec<Point>;
    match command {
        Command::PlasticityHexa => {
            let h = hexa_input(&ctx)?;
            let iv = plasticity::feasible_b5_interval(&h.vertices, h.a0, h.c, h.residual, h.split)?;
            for b5 in iv.samples(samples, h.c) {
                let s = plasticity::hexahedron_plasticity(&h.vertices, h.a0, h.c, h.residual, h.split, b5)?;
                rows.push((b5, s.weights.to_vec()));
            }
            a0 = h.a0;
            vertices = h.vertices.to_vec();
        }
        Command::PlasticityQuad => {
            let (v, p, c) = quad_input(&ctx)?;
            let iv = plasticity::feasible_b4_interval(&v, p, c)?;
            for b4 in iv.samples(samples, c) {
                rows.push((b4, plasticity::quadrilateral_plasticity(&v, p, c, b4)?.weights.to_vec()));
            }
            a0 = p;
            vertices = v.to_vec();
        }
        other => return Err(CliError::invalid(format!("`{other}` has no free weight to sweep"), "/kind")),
    }
    if rows.is_empty() {
        return Err(CliError::EmptyFeasibleInterval);
    }
    let mut out = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["free_weight".to_string()];
    header.extend((1..=vertices.len()).map(|i| format!("b{i}")));
    header.push("deviation".into());
    let csv_err = |e: csv::Error| CliError::numerical(e.to_string());
    out.write_record(&header).map_err(csv_err)?;
    for (free, weights) in rows {
        let deviation = ctx.junction_deviation(&vertices, &weights, a0)?;
        let mut record = vec![free.to_string()];
        record.extend(weights.iter().map(f64::to_string));
        record.push(deviation.to_string());
        out.write_record(&record).map_err(csv_err)?;
    }
    let bytes = out.into_inner().map_err(|e| CliError::numerical(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| CliError::numerical(e.to_string()))
}

/// What the binary prints and returns.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub stdout: String,
    pub stderr: String,
    pub code: i32,
}

/// Parses `input`, runs `command` and formats the result or error.
pub fn run_text(command: Command, flags: &Flags, input: &str) -> Outcome {
    let result = parse_document(input).and_then(|doc| match flags.sweep {
        Some(n) => emit_sweep(command, flags, doc, n),
        None => run(command, flags, doc).and_then(|r| {
            serde_json::to_string_pretty(&r).map(|s| s + "\n").map_err(|e| CliError::numerical(e.to_string()))
        }),
    });
    match result {
        Ok(stdout) => Outcome { stdout, stderr: String::new(), code: 0 },
        Err(e) => Outcome { stdout: String::new(), stderr: format!("{}\n", e.to_json()), code: e.exit_code() },
    }
}
