//! Weighted Fermat-Torricelli networks with three to five boundary points:
//! forward solving, inverse and mixed-inverse weight recovery with a
//! residual weight at the junction, and the plasticity families of weights
//! (or vertex positions) that leave the junction point fixed.

pub mod angles;
pub mod cli;
pub mod forward;
pub mod geom;
pub mod inverse;
pub mod oracle;
pub mod plasticity;

pub use angles::{AngleError, AngleSystem, RaySystem};
pub use forward::{BoundaryConfiguration, FtCase, FtSolution, SolverError, SolverOptions};
pub use geom::{GeomError, Point, UnitVector};
