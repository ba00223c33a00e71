//! Python bindings for the membrane fracture toolkit: the small matrix
//! operations, the density catalog, reductions, tilt maps and scene-level
//! limit energies.

use memfrac::density::{self, ExtReal};
use memfrac::linalg::{v2, v3, Matrix32, Matrix33};
use memfrac::maps::tilt::{build_o_rho, incompressible_correct, TiltMap};
use memfrac::membrane;
use memfrac::reduce::{self, ReduceOpts};
use memfrac::validate;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

fn mat33(rows: Vec<Vec<f64>>) -> PyResult<Matrix33> {
    if rows.len() != 3 || rows.iter().any(|r| r.len() != 3) {
        return Err(PyValueError::new_err("expected a 3x3 row list"));
    }
    Ok(Matrix33([
        [rows[0][0], rows[0][1], rows[0][2]],
        [rows[1][0], rows[1][1], rows[1][2]],
        [rows[2][0], rows[2][1], rows[2][2]],
    ]))
}

fn mat32(rows: Vec<Vec<f64>>) -> PyResult<Matrix32> {
    if rows.len() != 3 || rows.iter().any(|r| r.len() != 2) {
        return Err(PyValueError::new_err("expected a 3x2 row list"));
    }
    Ok(Matrix32([
        [rows[0][0], rows[0][1]],
        [rows[1][0], rows[1][1]],
        [rows[2][0], rows[2][1]],
    ]))
}

/// Determinant of a 3x3 matrix (cofactor expansion).
#[pyfunction]
fn det3(rows: Vec<Vec<f64>>) -> PyResult<f64> {
    Ok(memfrac::linalg::det3(&mat33(rows)?))
}

/// Cross product of the two columns of a 3x2 matrix.
#[pyfunction]
fn cross_columns(rows: Vec<Vec<f64>>) -> PyResult<(f64, f64, f64)> {
    let n = memfrac::linalg::cross_columns(&mat32(rows)?);
    Ok((n.x, n.y, n.z))
}

/// The tilt rotation as a 3x3 row list.
#[pyfunction]
fn tilt_rotation(kappa: (f64, f64), zeta: f64, rho: f64) -> PyResult<Vec<Vec<f64>>> {
    let k = v2(kappa.0, kappa.1);
    if (k.norm() - 1.0).abs() > 1e-10 {
        return Err(PyValueError::new_err("kappa must be a unit vector"));
    }
    let o = build_o_rho(k, zeta, rho);
    Ok(o.0.iter().map(|r| r.to_vec()).collect())
}

/// Bulk energy density with a determinant constraint mode.
#[pyclass(name = "BulkDensity")]
struct PyBulkDensity {
    inner: density::BulkDensity,
}

#[pymethods]
impl PyBulkDensity {
    /// |F|^p + 1/det F on det F > 0.
    #[staticmethod]
    fn orient_power(p: f64) -> Self {
        PyBulkDensity {
            inner: density::BulkDensity::orient_power(p),
        }
    }

    /// |F|^p on det F = 1.
    #[staticmethod]
    fn incomp_power(p: f64) -> Self {
        PyBulkDensity {
            inner: density::BulkDensity::incomp_power(p),
        }
    }

    /// Evaluate; None encodes the infinite (constraint-violating) state.
    fn eval(&self, rows: Vec<Vec<f64>>) -> PyResult<Option<f64>> {
        Ok(match self.inner.eval(&mat33(rows)?) {
            ExtReal::Finite(v) => Some(v),
            ExtReal::Infinite => None,
        })
    }

    /// Reduced membrane density: (value, optimal third column), value None
    /// when the planar gradient is rank deficient.
    fn reduce(&self, rows: Vec<Vec<f64>>) -> PyResult<(Option<f64>, Option<(f64, f64, f64)>)> {
        let r = reduce::reduce_bulk(&self.inner, &mat32(rows)?, &ReduceOpts::default());
        Ok((
            r.value.finite(),
            r.minimizer.map(|x| (x.x, x.y, x.z)),
        ))
    }

    /// Sampled hypothesis checks: list of (code, passed, worst_margin).
    fn validate(&self, samples: usize, seed: u64) -> Vec<(String, bool, f64)> {
        validate::validate_bulk(&self.inner, samples, seed)
            .hypotheses
            .iter()
            .map(|h| (h.code.to_string(), h.passed, h.worst_margin))
            .collect()
    }
}

/// Surface energy density on (jump amplitude, normal).
#[pyclass(name = "SurfaceDensity")]
struct PySurfaceDensity {
    inner: density::SurfaceDensity,
}

#[pymethods]
impl PySurfaceDensity {
    /// phi(|z|) sqrt(nu^T Q nu) with Q symmetric positive definite.
    #[staticmethod]
    fn quad(q: Vec<Vec<f64>>, phi_cap: f64) -> PyResult<Self> {
        Ok(PySurfaceDensity {
            inner: density::SurfaceDensity::quad(mat33(q)?, phi_cap),
        })
    }

    #[staticmethod]
    fn griffith() -> Self {
        PySurfaceDensity {
            inner: density::SurfaceDensity::griffith(),
        }
    }

    #[staticmethod]
    fn amplitude_norm() -> Self {
        PySurfaceDensity {
            inner: density::SurfaceDensity::amplitude_norm(),
        }
    }

    fn eval(&self, z: (f64, f64, f64), nu: (f64, f64, f64)) -> PyResult<f64> {
        self.inner
            .eval(v3(z.0, z.1, z.2), v3(nu.0, nu.1, nu.2))
            .map_err(|e| PyValueError::new_err(e.to_string()))
    }

    /// Rescaled density psi(z, nu_alpha, nu_3 / rho).
    fn psi_rho(&self, z: (f64, f64, f64), nu: (f64, f64, f64), rho: f64) -> PyResult<f64> {
        density::eval_psi_rho(&self.inner, v3(z.0, z.1, z.2), v3(nu.0, nu.1, nu.2), rho)
            .map_err(|e| PyValueError::new_err(e.to_string()))
    }

    /// Reduced membrane fracture density: (value, optimal tilt).
    fn reduce(&self, z: (f64, f64, f64), nu: (f64, f64)) -> PyResult<(f64, f64)> {
        let r = reduce::reduce_surface(
            &self.inner,
            v3(z.0, z.1, z.2),
            v2(nu.0, nu.1),
            &ReduceOpts::default(),
        )
        .map_err(|e| PyValueError::new_err(e.to_string()))?;
        Ok((r.value, r.zeta_star))
    }

    fn validate(&self, samples: usize, seed: u64) -> Vec<(String, bool, f64)> {
        validate::validate_surface(&self.inner, samples, seed, false)
            .hypotheses
            .iter()
            .map(|h| (h.code.to_string(), h.passed, h.worst_margin))
            .collect()
    }
}

/// Tilt map: identity-to-isometry blend rotating a jump normal out of plane.
#[pyclass(name = "TiltMap")]
struct PyTiltMap {
    inner: TiltMap,
}

#[pymethods]
impl PyTiltMap {
    #[new]
    fn new(
        center: (f64, f64),
        kappa: (f64, f64),
        zeta: f64,
        rho: f64,
        r_inner: f64,
        r_outer: f64,
    ) -> PyResult<Self> {
        let k = v2(kappa.0, kappa.1);
        if (k.norm() - 1.0).abs() > 1e-10 {
            return Err(PyValueError::new_err("kappa must be a unit vector"));
        }
        Ok(PyTiltMap {
            inner: TiltMap::new(v2(center.0, center.1), k, zeta, rho, r_inner, r_outer),
        })
    }

    fn value(&self, x: (f64, f64, f64)) -> (f64, f64, f64) {
        let v = self.inner.value(v3(x.0, x.1, x.2));
        (v.x, v.y, v.z)
    }

    fn jacobian(&self, x: (f64, f64, f64)) -> Vec<Vec<f64>> {
        let j = self.inner.jacobian(v3(x.0, x.1, x.2));
        j.0.iter().map(|r| r.to_vec()).collect()
    }

    /// Worst |det - 1| of the volume-corrected map over an n x n x 5 grid
    /// spanning the support.
    fn corrected_det_residual(&self, n: usize, ode_tol: f64) -> PyResult<f64> {
        let corr = incompressible_correct(self.inner.clone(), ode_tol)
            .map_err(|e| PyValueError::new_err(e.to_string()))?;
        let c = self.inner.center;
        let r = self.inner.cutoff.r_outer * 1.05;
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                for k in 0..5 {
                    let x = v3(
                        c.x - r + 2.0 * r * (i as f64 + 0.5) / n as f64,
                        c.y - r + 2.0 * r * (j as f64 + 0.5) / n as f64,
                        -0.5 + (k as f64 + 0.5) / 5.0,
                    );
                    let (_, jac) = corr.value_jacobian(x);
                    worst = worst.max((memfrac::linalg::det3(&jac) - 1.0).abs());
                }
            }
        }
        Ok(worst)
    }
}

/// Piecewise-affine cracked membrane loaded from a scene document.
#[pyclass(name = "Membrane")]
struct PyMembrane {
    inner: membrane::CrackedMembrane,
}

#[pymethods]
impl PyMembrane {
    #[staticmethod]
    fn from_scene(text: &str) -> PyResult<Self> {
        let m = membrane::parse_scene(text).map_err(|e| PyValueError::new_err(e.to_string()))?;
        m.validate(1e-9)
            .map_err(|e| PyValueError::new_err(e.to_string()))?;
        Ok(PyMembrane { inner: m })
    }

    fn cell_count(&self) -> usize {
        self.inner.cells.len()
    }

    fn jump_length(&self) -> f64 {
        self.inner.jump_length()
    }

    /// Limit membrane functional: (bulk, surface, total); bulk None when a
    /// cell is rank deficient in a constrained mode.
    fn limit_energy(
        &self,
        bulk: &PyBulkDensity,
        surface: &PySurfaceDensity,
    ) -> PyResult<(Option<f64>, f64, Option<f64>)> {
        let l = memfrac::energy::limit_energy(
            &self.inner,
            &bulk.inner,
            &surface.inner,
            &ReduceOpts::default(),
        )
        .map_err(|e| PyValueError::new_err(e.to_string()))?;
        Ok((l.bulk.finite(), l.surface, l.total.finite()))
    }
}

#[pymodule]
fn memfrac_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(det3, m)?)?;
    m.add_function(wrap_pyfunction!(cross_columns, m)?)?;
    m.add_function(wrap_pyfunction!(tilt_rotation, m)?)?;
    m.add_class::<PyBulkDensity>()?;
    m.add_class::<PySurfaceDensity>()?;
    m.add_class::<PyTiltMap>()?;
    m.add_class::<PyMembrane>()?;
    Ok(())
}
