//! Numerical toolkit for thin elastic membranes with cohesive fracture under
//! determinant constraints.
//!
//! The crate is organized around the pipeline used by the `memfrac` binary:
//!
//! * [`linalg`] / [`quad`] / [`membrane`] — small dense matrices, prism
//!   quadrature grids and the piecewise-affine cracked-membrane data model;
//! * [`density`] / [`validate`] — bulk and surface energy densities together
//!   with sampled validators for their structural hypotheses;
//! * [`reduce`] — reduced membrane densities obtained by minimizing out the
//!   third gradient column (bulk) and the out-of-plane normal slot (surface);
//! * [`envelope`] — lamination (Kohn–Strang) iteration, finite-element
//!   quasiconvexification upper estimates and interface competitor tests;
//! * [`maps`] — tilt isometry blends, their volume-preserving correction,
//!   incompressible thickness extensions, crack-opening maps and
//!   variable-kernel smoothing;
//! * [`recovery`] / [`energy`] — assembly of thin recovery deformations and
//!   quadrature evaluation of the rescaled 3D and limit 2D functionals;
//! * [`config`] / [`cli`] — reproducible command-line front end.

pub mod cli;
pub mod config;
pub mod density;
pub mod energy;
pub mod envelope;
pub mod linalg;
pub mod maps;
pub mod membrane;
pub mod opt;
pub mod quad;
pub mod recovery;
pub mod reduce;
pub mod validate;

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// A sample point landed on a cell boundary; the caller should re-sample
    /// with a jitter (piecewise gradients are defined a.e. only).
    #[error("point ({0}, {1}) lies on a cell boundary")]
    BoundaryHit(f64, f64),
    /// A point that should lie inside the membrane domain does not.
    #[error("point ({0}, {1}) is outside every cell")]
    OutsideDomain(f64, f64),
    /// Jump amplitude z = 0 is outside the domain of a surface density.
    #[error("surface density evaluated at zero jump amplitude")]
    ZeroJump,
    /// Determinant constraint violated at construction time.
    #[error("determinant constraint violated in cell {cell}: det = {det}")]
    ConstraintViolation { cell: usize, det: f64 },
    /// A degenerate (rank <= 1) gradient where a rank-2 one is required.
    #[error("rank-deficient planar gradient in cell {0}")]
    RankDeficient(usize),
    /// Precondition `det grad >= 1/2` for the volume-preserving correction
    /// failed at the reported point.
    #[error("det grad = {det} < 1/2 at ({x}, {y}, {z}); use a smaller thickness")]
    DeterminantTooSmall { det: f64, x: f64, y: f64, z: f64 },
    /// Newton inversion failed to converge; thickness parameter too large.
    #[error("map inversion did not converge at ({x}, {y}, {z}); use a smaller thickness")]
    InversionFailed { x: f64, y: f64, z: f64 },
    /// Degenerate tangent pair in a surface integral.
    #[error("degenerate surface tangents at parameter ({0}, {1})")]
    DegenerateTangents(f64, f64),
    /// Requested jump partition is infeasible.
    #[error("partition with n = {requested} infeasible; at most {max_feasible} sub-segments fit")]
    PartitionInfeasible { requested: usize, max_feasible: usize },
    /// Scene or config file rejected.
    #[error("{0}")]
    Parse(String),
    /// Scene semantic validation failed.
    #[error("invalid scene: {0}")]
    InvalidScene(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
