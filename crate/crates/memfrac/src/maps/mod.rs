//! Constraint-compatible map families: tilt isometry blends and their
//! volume-preserving correction, incompressible thickness extensions,
//! crack-opening maps, and variable-kernel smoothing.

pub mod crack;
pub mod extend;
pub mod mollify;
pub mod ode;
pub mod tilt;

pub use crack::{CrackOpening, Poly};
pub use extend::{incompressible_extend, FiberField, ThickExtension};
pub use mollify::{AnalyticField, Field2, GradientSplit, GridField, Smoothed, SmoothingKernel};
pub use tilt::{
    build_o_rho, incompressible_correct, invert_map, CorrectedTilt, GluedTilts, Tilt, TiltMap,
};
