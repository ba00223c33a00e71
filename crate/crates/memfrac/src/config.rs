//! Run configuration: a structured-text (TOML) document selecting the
//! subcommand, densities, numerics and output. Unknown keys are rejected;
//! parse errors carry line/column positions.

use crate::density::{bulk_by_name, surface_by_name, BulkDensity, SurfaceDensity};
use crate::linalg::{Matrix32, Matrix33};
use crate::{Error, Result};
use serde::Deserialize;

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// One of reduce | envelope | maps | recover | sweep | validate.
    pub command: String,
    /// Scene path for recover/sweep.
    #[serde(default)]
    pub scene: Option<String>,
    #[serde(default)]
    pub bulk: Option<DensitySection>,
    #[serde(default)]
    pub surface: Option<DensitySection>,
    #[serde(default)]
    pub numeric: NumericSection,
    #[serde(default)]
    pub output: OutputSection,
    /// Planar gradients for reduce/envelope, 3x2 row-major.
    #[serde(default, rename = "matrix")]
    pub matrices: Vec<MatrixEntry>,
    /// Jump data (z, nu_alpha) for the surface reduction table.
    #[serde(default, rename = "jump_datum")]
    pub jump_data: Vec<JumpDatum>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensitySection {
    pub family: String,
    #[serde(default = "default_p")]
    pub p: f64,
    /// Quadratic form for the surf_quad family (3x3, symmetric positive
    /// definite).
    #[serde(default)]
    pub q: Option<[[f64; 3]; 3]>,
    #[serde(default = "default_phi_cap")]
    pub phi_cap: f64,
}

fn default_p() -> f64 {
    2.0
}
fn default_phi_cap() -> f64 {
    1.0
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NumericSection {
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Planar resolution of the prism quadrature grid.
    #[serde(default = "default_grid_n")]
    pub grid_n: usize,
    /// Thickness resolution.
    #[serde(default = "default_grid_m")]
    pub grid_m: usize,
    /// Thickness list, strictly decreasing.
    #[serde(default = "default_rhos")]
    pub rho: Vec<f64>,
    #[serde(default = "default_partition_n")]
    pub partition_n: usize,
    #[serde(default = "default_partition_eps")]
    pub partition_eps: f64,
    /// Determinant tolerance of constrained quadrature.
    #[serde(default = "default_det_tol")]
    pub det_tol: f64,
    /// Lamination depth for the envelope command.
    #[serde(default = "default_depth")]
    pub depth: usize,
    /// Mesh of the quasiconvexification estimate.
    #[serde(default = "default_mesh")]
    pub mesh: usize,
    /// Validator sample budget.
    #[serde(default = "default_samples")]
    pub samples: usize,
    /// Tilt parameter for the maps diagnostics.
    #[serde(default = "default_zeta")]
    pub zeta: f64,
}

fn default_seed() -> u64 {
    42
}
fn default_grid_n() -> usize {
    64
}
fn default_grid_m() -> usize {
    16
}
fn default_rhos() -> Vec<f64> {
    vec![0.1, 0.05, 0.025, 0.0125]
}
fn default_partition_n() -> usize {
    1
}
fn default_partition_eps() -> f64 {
    0.6
}
fn default_det_tol() -> f64 {
    1e-6
}
fn default_depth() -> usize {
    2
}
fn default_mesh() -> usize {
    8
}
fn default_samples() -> usize {
    10_000
}
fn default_zeta() -> f64 {
    1.0
}

impl Default for NumericSection {
    fn default() -> Self {
        toml::from_str("").expect("defaults are total")
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default)]
    pub path: Option<String>,
    /// csv | text.
    #[serde(default = "default_format")]
    pub format: String,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection {
            path: None,
            format: default_format(),
        }
    }
}

fn default_format() -> String {
    "csv".into()
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixEntry {
    pub entries: [[f64; 2]; 3],
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JumpDatum {
    pub z: [f64; 3],
    pub nu: [f64; 2],
}

impl MatrixEntry {
    pub fn matrix(&self) -> Matrix32 {
        Matrix32(self.entries)
    }
}

pub const COMMANDS: &[&str] = &["reduce", "envelope", "maps", "recover", "sweep", "validate"];

/// Parse and range-check a configuration document.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let cfg: RunConfig =
        toml::from_str(text).map_err(|e| Error::Parse(format!("config: {e}")))?;
    if !COMMANDS.contains(&cfg.command.as_str()) {
        return Err(Error::Parse(format!(
            "unknown command '{}'; expected one of {}",
            cfg.command,
            COMMANDS.join(", ")
        )));
    }
    let n = &cfg.numeric;
    for (name, v) in [
        ("numeric.det_tol", n.det_tol),
        ("numeric.partition_eps", n.partition_eps),
    ] {
        if v <= 0.0 {
            return Err(Error::Parse(format!("{name} must be positive, got {v}")));
        }
    }
    if n.rho.is_empty() || n.rho.iter().any(|&r| r <= 0.0) {
        return Err(Error::Parse("numeric.rho must be positive".into()));
    }
    if n.rho.windows(2).any(|p| p[1] >= p[0]) {
        return Err(Error::Parse("numeric.rho must be strictly decreasing".into()));
    }
    if n.grid_n < 2 || n.grid_m < 2 {
        return Err(Error::Parse("numeric.grid_n and grid_m must be >= 2".into()));
    }
    if n.samples == 0 {
        return Err(Error::Parse("numeric.samples must be >= 1".into()));
    }
    if let Some(b) = &cfg.bulk {
        if bulk_by_name(&b.family, b.p).is_none() {
            return Err(Error::Parse(format!(
                "unknown bulk density '{}'; catalog: {}",
                b.family,
                crate::density::BULK_CATALOG.join(", ")
            )));
        }
        if b.p <= 1.0 {
            return Err(Error::Parse(format!("bulk.p must exceed 1, got {}", b.p)));
        }
    }
    if let Some(s) = &cfg.surface {
        if surface_by_name(&s.family, s.q.map(Matrix33), s.phi_cap).is_none() {
            return Err(Error::Parse(format!(
                "unknown surface density '{}'; catalog: {}",
                s.family,
                crate::density::SURFACE_CATALOG.join(", ")
            )));
        }
    }
    Ok(cfg)
}

impl RunConfig {
    pub fn bulk_density(&self) -> Result<BulkDensity> {
        let b = self
            .bulk
            .as_ref()
            .ok_or_else(|| Error::Parse("missing [bulk] section".into()))?;
        bulk_by_name(&b.family, b.p)
            .ok_or_else(|| Error::Parse(format!("unknown bulk density '{}'", b.family)))
    }

    pub fn surface_density(&self) -> Result<SurfaceDensity> {
        let s = self
            .surface
            .as_ref()
            .ok_or_else(|| Error::Parse("missing [surface] section".into()))?;
        surface_by_name(&s.family, s.q.map(Matrix33), s.phi_cap)
            .ok_or_else(|| Error::Parse(format!("unknown surface density '{}'", s.family)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_sweep_config_gets_documented_defaults() {
        let cfg = parse_config("command = \"sweep\"\n").unwrap();
        assert_eq!(cfg.numeric.grid_n, 64);
        assert_eq!(cfg.numeric.grid_m, 16);
        assert_eq!(cfg.numeric.rho, vec![0.1, 0.05, 0.025, 0.0125]);
        assert_eq!(cfg.numeric.seed, 42);
        assert_eq!(cfg.output.format, "csv");
    }

    #[test]
    fn negative_tolerance_is_a_range_error() {
        let err = parse_config("command = \"sweep\"\n[numeric]\ndet_tol = -1.0\n").unwrap_err();
        let msg = format!("{err}");
        assert!(msg.contains("det_tol"), "{msg}");
    }

    #[test]
    fn unknown_density_lists_catalog() {
        let err = parse_config(
            "command = \"reduce\"\n[bulk]\nfamily = \"bogus\"\n",
        )
        .unwrap_err();
        let msg = format!("{err}");
        assert!(msg.contains("incomp_power") && msg.contains("orient_power"), "{msg}");
    }

    #[test]
    fn unknown_keys_are_rejected_with_position() {
        let err = parse_config("command = \"sweep\"\nbogus_key = 1\n").unwrap_err();
        let msg = format!("{err}");
        // toml reports line/column of the offending key
        assert!(msg.contains("line"), "{msg}");
    }

    #[test]
    fn increasing_rho_rejected() {
        let err =
            parse_config("command = \"sweep\"\n[numeric]\nrho = [0.05, 0.1]\n").unwrap_err();
        assert!(format!("{err}").contains("decreasing"));
    }
}
