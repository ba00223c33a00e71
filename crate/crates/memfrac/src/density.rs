//! Bulk and surface energy densities.
//!
//! Bulk densities are extended-real valued with a constraint mode
//! (unconstrained, orientation-preserving, incompressible); surface densities
//! act on (jump amplitude, normal) pairs and are extended to all of R^3 in
//! the normal slot by positive 1-homogeneity.

use crate::linalg::{det3, sym_eigenvalues, Matrix33, Vec3};
use crate::{Error, Result};
use std::sync::Arc;

/// Extended real used for constrained energies. Arithmetic paths never see a
/// floating-point infinity; the infinite state is an explicit tag.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ExtReal {
    Finite(f64),
    Infinite,
}

impl ExtReal {
    pub fn is_finite(self) -> bool {
        matches!(self, ExtReal::Finite(_))
    }
    pub fn finite(self) -> Option<f64> {
        match self {
            ExtReal::Finite(v) => Some(v),
            ExtReal::Infinite => None,
        }
    }
    /// Finite value or panic; for paths that have already checked.
    pub fn unwrap_finite(self) -> f64 {
        self.finite().expect("unexpected infinite energy")
    }
    pub fn min(self, other: ExtReal) -> ExtReal {
        match (self, other) {
            (ExtReal::Finite(a), ExtReal::Finite(b)) => ExtReal::Finite(a.min(b)),
            (ExtReal::Finite(a), _) | (_, ExtReal::Finite(a)) => ExtReal::Finite(a),
            _ => ExtReal::Infinite,
        }
    }
    pub fn map(self, f: impl FnOnce(f64) -> f64) -> ExtReal {
        match self {
            ExtReal::Finite(v) => ExtReal::Finite(f(v)),
            ExtReal::Infinite => ExtReal::Infinite,
        }
    }
}

impl std::ops::Add for ExtReal {
    type Output = ExtReal;
    fn add(self, o: ExtReal) -> ExtReal {
        match (self, o) {
            (ExtReal::Finite(a), ExtReal::Finite(b)) => ExtReal::Finite(a + b),
            _ => ExtReal::Infinite,
        }
    }
}

impl std::fmt::Display for ExtReal {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ExtReal::Finite(v) => write!(f, "{v}"),
            ExtReal::Infinite => write!(f, "inf"),
        }
    }
}

/// Determinant constraint carried by a bulk density.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConstraintMode {
    Unconstrained,
    /// det F > 0 required; +inf otherwise.
    OrientationPreserving,
    /// det F = 1 required; +inf otherwise.
    Incompressible,
}

type BulkFn = Arc<dyn Fn(&Matrix33) -> ExtReal + Send + Sync>;

#[derive(Clone)]
enum BulkKernel {
    /// |F|^p + 1/det F on det F > 0.
    OrientPower,
    /// |F|^p on det F = 1.
    IncompPower,
    Custom(BulkFn),
}

/// Stored bulk energy density W with its structural metadata.
#[derive(Clone)]
pub struct BulkDensity {
    pub name: String,
    pub mode: ConstraintMode,
    /// Growth exponent p > 1.
    pub p: f64,
    /// C1 in the coercivity bound (orientation-preserving) or c in the
    /// two-sided growth bound (incompressible).
    pub coercivity: f64,
    /// Growth witness delta -> c_delta for the conditional upper bound in
    /// orientation-preserving mode.
    growth: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    kernel: BulkKernel,
}

impl BulkDensity {
    /// W(F) = |F|^p + 1/det F for det F > 0, +inf otherwise.
    ///
    /// Passes the orientation-preserving hypotheses with C1 = 1/2 and
    /// c_delta = 2 + 1/delta.
    pub fn orient_power(p: f64) -> Self {
        assert!(p > 1.0);
        BulkDensity {
            name: format!("orient_power(p={p})"),
            mode: ConstraintMode::OrientationPreserving,
            p,
            coercivity: 0.5,
            growth: Arc::new(|delta| 2.0 + 1.0 / delta),
            kernel: BulkKernel::OrientPower,
        }
    }

    /// W(F) = |F|^p on det F = 1, +inf otherwise. Two-sided growth constant
    /// c = 1.
    pub fn incomp_power(p: f64) -> Self {
        assert!(p > 1.0);
        BulkDensity {
            name: format!("incomp_power(p={p})"),
            mode: ConstraintMode::Incompressible,
            p,
            coercivity: 1.0,
            growth: Arc::new(|_| 1.0),
            kernel: BulkKernel::IncompPower,
        }
    }

    /// Arbitrary evaluator, for validator tests and counterexamples.
    pub fn custom(
        name: &str,
        mode: ConstraintMode,
        p: f64,
        coercivity: f64,
        f: impl Fn(&Matrix33) -> ExtReal + Send + Sync + 'static,
    ) -> Self {
        BulkDensity {
            name: name.into(),
            mode,
            p,
            coercivity,
            growth: Arc::new(|delta| 2.0 + 1.0 / delta),
            kernel: BulkKernel::Custom(Arc::new(f)),
        }
    }

    /// The exact extended-real evaluator. In incompressible mode the
    /// constraint is an exact comparison at the representation level;
    /// numeric membership with a tolerance goes through [`Self::eval_tol`].
    pub fn eval(&self, f: &Matrix33) -> ExtReal {
        match &self.kernel {
            BulkKernel::OrientPower => {
                let d = det3(f);
                if d > 0.0 {
                    ExtReal::Finite(self.finite_branch(f))
                } else {
                    ExtReal::Infinite
                }
            }
            BulkKernel::IncompPower => {
                if det3(f) == 1.0 {
                    ExtReal::Finite(self.finite_branch(f))
                } else {
                    ExtReal::Infinite
                }
            }
            BulkKernel::Custom(g) => g(f),
        }
    }

    /// Evaluator with the determinant constraint checked up to `det_tol`
    /// (quadrature paths; gradients are only numerically on the constraint
    /// set).
    pub fn eval_tol(&self, f: &Matrix33, det_tol: f64) -> ExtReal {
        match self.mode {
            ConstraintMode::Incompressible => {
                if (det3(f) - 1.0).abs() <= det_tol {
                    ExtReal::Finite(self.finite_branch(f))
                } else {
                    ExtReal::Infinite
                }
            }
            _ => self.eval(f),
        }
    }

    /// The finite branch of the built-in kernels, ignoring the constraint.
    pub fn finite_branch(&self, f: &Matrix33) -> f64 {
        match &self.kernel {
            BulkKernel::OrientPower => f.norm_sq().powf(0.5 * self.p) + 1.0 / det3(f),
            BulkKernel::IncompPower => f.norm_sq().powf(0.5 * self.p),
            BulkKernel::Custom(g) => match g(f) {
                ExtReal::Finite(v) => v,
                ExtReal::Infinite => f64::NAN,
            },
        }
    }

    /// c_delta for the conditional growth bound W(F) <= c_delta (1 + |F|^p)
    /// on { det F >= delta }.
    pub fn growth_witness(&self, delta: f64) -> f64 {
        (self.growth)(delta)
    }

    /// True for the built-in isotropic kernels, whose dependence on F factors
    /// through (|F|, det F). Reduction exploits this with a 1-D search.
    pub fn is_isotropic_builtin(&self) -> bool {
        matches!(self.kernel, BulkKernel::OrientPower | BulkKernel::IncompPower)
    }

    /// Finite branch expressed in (|F|^2, det F) for the isotropic kernels.
    pub fn isotropic_value(&self, norm_sq: f64, det: f64) -> f64 {
        match &self.kernel {
            BulkKernel::OrientPower => norm_sq.powf(0.5 * self.p) + 1.0 / det,
            BulkKernel::IncompPower => norm_sq.powf(0.5 * self.p),
            BulkKernel::Custom(_) => unreachable!("isotropic_value on custom kernel"),
        }
    }
}

type SurfFn = Arc<dyn Fn(Vec3, Vec3) -> f64 + Send + Sync>;
type PhiFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
type QOfZ = Arc<dyn Fn(Vec3) -> Matrix33 + Send + Sync>;

#[derive(Clone)]
enum SurfKernel {
    /// phi(|z|) * sqrt(nu^T Q nu) with Q symmetric positive definite.
    Quad { q: Matrix33 },
    /// Same with a z-dependent Q(z) = Q(-z). Hook only; no catalog entry
    /// ships with it.
    QuadVar { q_of: QOfZ },
    /// |nu| (amplitude-independent; degenerate cohesive case).
    Griffith,
    /// |z| |nu|: violates the lower coupled-growth bound near z = 0.
    AmplitudeNorm,
    Custom(SurfFn),
}

/// Surface energy density psi(z, nu), positively 1-homogeneous in nu.
#[derive(Clone)]
pub struct SurfaceDensity {
    pub name: String,
    /// Jump-monotonicity constant.
    pub c2: f64,
    /// Coupled growth constants c3 <= c4 against phi.
    pub c3: f64,
    pub c4: f64,
    phi: PhiFn,
    /// Declared continuity modulus for the amplitude slot.
    sigma: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    kernel: SurfKernel,
}

/// phi(t) = 1 + min(t, cap) / 2, the 1/2-Lipschitz capped profile used by the
/// quadratic-form family (phi(1) = 1.5 at the default cap 1).
pub fn capped_phi(cap: f64) -> PhiFn {
    Arc::new(move |t: f64| 1.0 + 0.5 * t.min(cap))
}

impl SurfaceDensity {
    /// psi(z, nu) = phi(|z|) |M nu| with M = Q^{1/2}, evaluated as
    /// sqrt(nu^T Q nu). `q` must be symmetric positive definite.
    pub fn quad(q: Matrix33, phi_cap: f64) -> Self {
        let ev = sym_eigenvalues(&q);
        assert!(ev[0] > 0.0, "Q must be positive definite");
        SurfaceDensity {
            name: "surf_quad".into(),
            c2: 2.0,
            c3: ev[0].sqrt(),
            c4: ev[2].sqrt(),
            phi: capped_phi(phi_cap),
            sigma: Arc::new(|d: f64| 0.5 * d.min(1.0)),
            kernel: SurfKernel::Quad { q },
        }
    }

    /// Hook for a z-dependent quadratic form. Unused by the catalog.
    pub fn quad_var(q_of: impl Fn(Vec3) -> Matrix33 + Send + Sync + 'static, phi_cap: f64) -> Self {
        SurfaceDensity {
            name: "surf_quad_var".into(),
            c2: 2.0,
            c3: 1.0,
            c4: 1.0,
            phi: capped_phi(phi_cap),
            sigma: Arc::new(|d: f64| 0.5 * d.min(1.0)),
            kernel: SurfKernel::QuadVar { q_of: Arc::new(q_of) },
        }
    }

    /// psi(z, nu) = |nu|; amplitude-independent interface energy.
    pub fn griffith() -> Self {
        SurfaceDensity {
            name: "griffith".into(),
            c2: 1.0,
            c3: 1.0,
            c4: 1.0,
            phi: Arc::new(|_| 1.0),
            sigma: Arc::new(|_| 0.0),
            kernel: SurfKernel::Griffith,
        }
    }

    /// psi(z, nu) = |z| |nu|; the activation threshold degenerates as z -> 0,
    /// so the coupled lower growth bound fails. Validator counterexample.
    pub fn amplitude_norm() -> Self {
        SurfaceDensity {
            name: "amplitude_norm".into(),
            c2: 2.0,
            c3: 0.5,
            c4: 1.0,
            phi: capped_phi(1.0),
            sigma: Arc::new(|d: f64| 0.5 * d.min(1.0)),
            kernel: SurfKernel::AmplitudeNorm,
        }
    }

    pub fn custom(
        name: &str,
        c2: f64,
        c3: f64,
        c4: f64,
        f: impl Fn(Vec3, Vec3) -> f64 + Send + Sync + 'static,
    ) -> Self {
        SurfaceDensity {
            name: name.into(),
            c2,
            c3,
            c4,
            phi: capped_phi(1.0),
            sigma: Arc::new(|d: f64| 0.5 * d.min(1.0)),
            kernel: SurfKernel::Custom(Arc::new(f)),
        }
    }

    /// New density with the same constants and profiles but a replaced
    /// kernel (evaluated on unit normals). Used for reduced densities, which
    /// inherit every structural constant of the base.
    pub fn derive(
        &self,
        name: String,
        kernel: impl Fn(Vec3, Vec3) -> f64 + Send + Sync + 'static,
    ) -> Self {
        SurfaceDensity {
            name,
            c2: self.c2,
            c3: self.c3,
            c4: self.c4,
            phi: self.phi.clone(),
            sigma: self.sigma.clone(),
            kernel: SurfKernel::Custom(Arc::new(kernel)),
        }
    }

    /// Evaluate on a unit normal.
    fn eval_unit(&self, z: Vec3, nu: Vec3) -> f64 {
        match &self.kernel {
            SurfKernel::Quad { q } => (self.phi)(z.norm()) * q.apply(nu).dot(nu).max(0.0).sqrt(),
            SurfKernel::QuadVar { q_of } => {
                (self.phi)(z.norm()) * q_of(z).apply(nu).dot(nu).max(0.0).sqrt()
            }
            SurfKernel::Griffith => 1.0,
            SurfKernel::AmplitudeNorm => z.norm(),
            SurfKernel::Custom(f) => f(z, nu),
        }
    }

    /// psi(z, nu) for arbitrary nu via the 1-homogeneous extension
    /// (psi(z, 0) = 0).
    pub fn eval(&self, z: Vec3, nu: Vec3) -> Result<f64> {
        if z.norm() == 0.0 {
            return Err(Error::ZeroJump);
        }
        let n = nu.norm();
        if n == 0.0 {
            return Ok(0.0);
        }
        Ok(n * self.eval_unit(z, nu * (1.0 / n)))
    }

    /// Declared amplitude profile phi(z).
    pub fn phi(&self, z: Vec3) -> f64 {
        (self.phi)(z.norm())
    }

    /// Declared continuity modulus sigma(d).
    pub fn sigma(&self, d: f64) -> f64 {
        (self.sigma)(d)
    }
}

/// Rescaled surface density: psi(z, nu_alpha, nu_3 / rho).
///
/// This is the surface integrand of the rescaled thin-film functional; the
/// third normal slot is amplified by 1/rho.
pub fn eval_psi_rho(psi: &SurfaceDensity, z: Vec3, nu: Vec3, rho: f64) -> Result<f64> {
    assert!(rho > 0.0, "rho must be positive");
    psi.eval(z, Vec3 { x: nu.x, y: nu.y, z: nu.z / rho })
}

/// Catalog lookup used by the CLI. `p` applies to bulk families, `q` and
/// `phi_cap` to the quadratic surface family.
pub fn bulk_by_name(name: &str, p: f64) -> Option<BulkDensity> {
    match name {
        "orient_power" => Some(BulkDensity::orient_power(p)),
        "incomp_power" => Some(BulkDensity::incomp_power(p)),
        _ => None,
    }
}

pub fn surface_by_name(name: &str, q: Option<Matrix33>, phi_cap: f64) -> Option<SurfaceDensity> {
    match name {
        "surf_quad" => Some(SurfaceDensity::quad(
            q.unwrap_or(Matrix33::IDENTITY),
            phi_cap,
        )),
        "griffith" => Some(SurfaceDensity::griffith()),
        "amplitude_norm" => Some(SurfaceDensity::amplitude_norm()),
        _ => None,
    }
}

pub const BULK_CATALOG: &[&str] = &["orient_power", "incomp_power"];
pub const SURFACE_CATALOG: &[&str] = &["surf_quad", "griffith", "amplitude_norm"];

/// The anisotropic quadratic form used by the reference fixtures.
pub fn fixture_q() -> Matrix33 {
    Matrix33([[2.0, 0.0, 1.0], [0.0, 1.0, 0.0], [1.0, 0.0, 1.0]])
}
