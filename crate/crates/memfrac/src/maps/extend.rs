//! Incompressible thickness extension: from a planar deformation u and a
//! fiber field b with det(grad u | b) = 1, build v(x_alpha, x3) =
//! u(x_alpha) + G(x_alpha, x3) b(x_alpha) with det(grad v) = 1 exactly.

use super::tilt::newton_cubic;
use crate::linalg::{det_cols, v3, Matrix32, Matrix33, Vec2, Vec3};
use crate::membrane::CrackedMembrane;
use crate::{Error, Result};

/// Per-cell fiber field, at most affine in the planar coordinates.
#[derive(Clone, Copy, Debug)]
pub enum FiberField {
    Constant(Vec3),
    /// b(x) = b0 + x bx + y by.
    Affine { b0: Vec3, bx: Vec3, by: Vec3 },
}

impl FiberField {
    pub fn value(&self, x: Vec2) -> Vec3 {
        match *self {
            FiberField::Constant(b) => b,
            FiberField::Affine { b0, bx, by } => b0 + bx * x.x + by * x.y,
        }
    }
    pub fn gradient(&self) -> (Vec3, Vec3) {
        match *self {
            FiberField::Constant(_) => (v3(0.0, 0.0, 0.0), v3(0.0, 0.0, 0.0)),
            FiberField::Affine { bx, by, .. } => (bx, by),
        }
    }
}

/// The extension of a piecewise-affine membrane by per-cell fiber fields.
#[derive(Clone, Debug)]
pub struct ThickExtension {
    pub membrane: CrackedMembrane,
    pub fibers: Vec<FiberField>,
}

/// Coefficients of det(grad w)(t) = d0 + p t + q t^2 at a planar point,
/// for w = u + t b.
#[derive(Clone, Copy, Debug)]
pub struct DetCoeffs {
    pub d0: f64,
    pub p: f64,
    pub q: f64,
}

impl ThickExtension {
    /// Checks det(grad u | b) = 1 on every cell (at the vertices, which
    /// suffices for affine data).
    pub fn new(membrane: CrackedMembrane, fibers: Vec<FiberField>) -> Result<Self> {
        assert_eq!(membrane.cells.len(), fibers.len());
        for (i, (cell, fib)) in membrane.cells.iter().zip(&fibers).enumerate() {
            for &vtx in &cell.polygon {
                let det = det_cols(
                    cell.gradient.col(0),
                    cell.gradient.col(1),
                    fib.value(vtx),
                );
                if (det - 1.0).abs() > 1e-10 {
                    return Err(Error::ConstraintViolation { cell: i, det });
                }
            }
        }
        Ok(ThickExtension { membrane, fibers })
    }

    pub fn det_coeffs(&self, cell: usize, xa: Vec2) -> DetCoeffs {
        let a = &self.membrane.cells[cell].gradient;
        let fib = &self.fibers[cell];
        let b = fib.value(xa);
        let (bx, by) = fib.gradient();
        DetCoeffs {
            d0: det_cols(a.col(0), a.col(1), b),
            p: det_cols(bx, a.col(1), b) + det_cols(a.col(0), by, b),
            q: det_cols(bx, by, b),
        }
    }

    fn locate(&self, xa: Vec2) -> Result<(Vec2, usize)> {
        self.membrane.gradient_jittered(xa)
    }

    /// The thickness reparameterization G(x_alpha, x3).
    pub fn thickness_reparam(&self, xa: Vec2, x3: f64) -> Result<f64> {
        let (xa, cell) = self.locate(xa)?;
        let c = self.det_coeffs(cell, xa);
        Ok(if c.p == 0.0 && c.q == 0.0 {
            x3 / c.d0
        } else {
            newton_cubic(c.d0, c.p, c.q, x3)
        })
    }

    pub fn value(&self, xa: Vec2, x3: f64) -> Result<Vec3> {
        let (xa, cell) = self.locate(xa)?;
        let c = self.det_coeffs(cell, xa);
        let g = if c.p == 0.0 && c.q == 0.0 {
            x3 / c.d0
        } else {
            newton_cubic(c.d0, c.p, c.q, x3)
        };
        let u = self.membrane.cells[cell].value(xa);
        Ok(u + self.fibers[cell].value(xa) * g)
    }

    /// Full 3x3 gradient of the extension.
    pub fn gradient(&self, xa: Vec2, x3: f64) -> Result<Matrix33> {
        let (xa, cell) = self.locate(xa)?;
        let a = &self.membrane.cells[cell].gradient;
        let fib = &self.fibers[cell];
        let b = fib.value(xa);
        let (bx, by) = fib.gradient();
        let c = self.det_coeffs(cell, xa);
        let g = if c.p == 0.0 && c.q == 0.0 {
            x3 / c.d0
        } else {
            newton_cubic(c.d0, c.p, c.q, x3)
        };
        let dg = c.d0 + c.p * g + c.q * g * g;
        let dg3 = 1.0 / dg;
        // planar derivatives of the det coefficients are exact for affine
        // fibers; d_i q = det(bx, by, b_i) vanishes by repetition
        let dd0 = [
            det_cols(a.col(0), a.col(1), bx),
            det_cols(a.col(0), a.col(1), by),
        ];
        let dp = [
            det_cols(bx, a.col(1), bx) + det_cols(a.col(0), by, bx),
            det_cols(bx, a.col(1), by) + det_cols(a.col(0), by, by),
        ];
        let db = [bx, by];
        let mut cols = [v3(0.0, 0.0, 0.0); 3];
        for i in 0..2 {
            let dgi = -(dd0[i] * g + dp[i] * g * g / 2.0) * dg3;
            cols[i] = a.col(i) + db[i] * g + b * dgi;
        }
        cols[2] = b * dg3;
        Ok(Matrix33::from_columns(cols[0], cols[1], cols[2]))
    }

    /// The planar-plus-fiber matrix (grad u | b), the target of the error
    /// law |grad v - (grad u | b)| <= C |x3|.
    pub fn flat_gradient(&self, xa: Vec2) -> Result<Matrix33> {
        let (xa, cell) = self.locate(xa)?;
        let a = &self.membrane.cells[cell].gradient;
        Ok(a.extend(self.fibers[cell].value(xa)))
    }
}

/// Fiber field from a per-cell constant third column (the usual case: the
/// optimal column of the reduced bulk density).
pub fn constant_fibers(columns: &[Vec3]) -> Vec<FiberField> {
    columns.iter().map(|&b| FiberField::Constant(b)).collect()
}

/// Extend a membrane whose cells carry constant optimal columns.
pub fn incompressible_extend(
    membrane: &CrackedMembrane,
    columns: &[Vec3],
) -> Result<ThickExtension> {
    ThickExtension::new(membrane.clone(), constant_fibers(columns))
}

#[allow(dead_code)]
fn unused(_: &Matrix32) {}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{det3, v2, Matrix32};
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn id32() -> Matrix32 {
        Matrix32([[1.0, 0.0], [0.0, 1.0], [0.0, 0.0]])
    }

    #[test]
    fn constant_fiber_is_exact_prism() {
        // b = n / |n|^2 constant: det coefficients collapse and G = x3
        let m = CrackedMembrane::single_cell([0.0, 0.0, 1.0, 1.0], id32());
        let ext = incompressible_extend(&m, &[v3(0.0, 0.0, 1.0)]).unwrap();
        let g = ext.thickness_reparam(v2(0.3, 0.4), 0.21).unwrap();
        assert!((g - 0.21).abs() < 1e-14);
        let grad = ext.gradient(v2(0.3, 0.4), 0.21).unwrap();
        assert!((det3(&grad) - 1.0).abs() < 1e-14);
        assert!((ext.value(v2(0.3, 0.4), 0.0).unwrap() - v3(0.3, 0.4, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn constraint_violation_names_cell() {
        let m = CrackedMembrane::split_fixture([0.0, 0.0, 1.0, 1.0], 0.5, id32(), v3(0.0, 0.0, 1.0))
            .unwrap();
        let err = incompressible_extend(&m, &[v3(0.0, 0.0, 1.0), v3(0.0, 0.0, 2.0)]).unwrap_err();
        match err {
            Error::ConstraintViolation { cell, det } => {
                assert_eq!(cell, 1);
                assert!((det - 2.0).abs() < 1e-12);
            }
            other => panic!("unexpected error {other}"),
        }
    }

    /// Fixture with a linearly varying fiber: b = e3 + x e1 keeps
    /// b . e3 = 1 while p = det(e1, e2, b) = 1 is nonzero.
    fn varying_fixture() -> ThickExtension {
        let m = CrackedMembrane::split_fixture(
            [0.0, 0.0, 1.0, 1.0],
            0.5,
            id32(),
            v3(0.0, 0.0, 1.0),
        )
        .unwrap();
        let fibers = vec![
            FiberField::Affine {
                b0: v3(0.0, 0.0, 1.0),
                bx: v3(1.0, 0.0, 0.0),
                by: v3(0.0, 0.0, 0.0),
            },
            FiberField::Constant(v3(0.0, 0.0, 1.0)),
        ];
        ThickExtension::new(m, fibers).unwrap()
    }

    #[test]
    fn varying_fiber_reparam_closed_form() {
        // d0 = 1, p = 1, q = 0: G + G^2/2 = x3
        let ext = varying_fixture();
        for x3 in [-0.3, -0.1, 0.2, 0.45] {
            let g = ext.thickness_reparam(v2(0.25, 0.5), x3).unwrap();
            let exact = -1.0 + (1.0f64 + 2.0 * x3).sqrt();
            assert!((g - exact).abs() < 1e-12, "{g} vs {exact}");
        }
    }

    #[test]
    fn determinant_one_across_fixture() {
        let ext = varying_fixture();
        let mut rng = ChaCha8Rng::seed_from_u64(51);
        for _ in 0..1000 {
            let xa = v2(rng.random_range(0.01..0.99), rng.random_range(0.01..0.99));
            let x3 = rng.random_range(-0.49..0.49);
            let grad = ext.gradient(xa, x3).unwrap();
            let d = det3(&grad);
            assert!((d - 1.0).abs() <= 1e-8, "det = {d} at {xa:?} {x3}");
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let ext = varying_fixture();
        let xa = v2(0.3, 0.6);
        let x3 = 0.25;
        let g = ext.gradient(xa, x3).unwrap();
        let h = 1e-6;
        let fd0 = (ext.value(xa + v2(h, 0.0), x3).unwrap()
            - ext.value(xa - v2(h, 0.0), x3).unwrap())
            * (1.0 / (2.0 * h));
        let fd1 = (ext.value(xa + v2(0.0, h), x3).unwrap()
            - ext.value(xa - v2(0.0, h), x3).unwrap())
            * (1.0 / (2.0 * h));
        let fd2 = (ext.value(xa, x3 + h).unwrap() - ext.value(xa, x3 - h).unwrap())
            * (1.0 / (2.0 * h));
        assert!((fd0 - g.col(0)).norm() < 1e-8);
        assert!((fd1 - g.col(1)).norm() < 1e-8);
        assert!((fd2 - g.col(2)).norm() < 1e-8);
    }

    #[test]
    fn error_law_is_first_order_in_thickness() {
        // max |grad v - (grad u | b)| over the grid scales like |x3|:
        // log-log slope >= 0.95 over dyadic heights
        let ext = varying_fixture();
        let heights: Vec<f64> = (3..=8).map(|k| 2.0f64.powi(-k)).collect();
        let mut logs = Vec::new();
        for &x3 in &heights {
            let mut worst: f64 = 0.0;
            for i in 0..20 {
                for j in 0..20 {
                    let xa = v2(0.025 + 0.95 * i as f64 / 19.0, 0.025 + 0.95 * j as f64 / 19.0);
                    let g = ext.gradient(xa, x3).unwrap();
                    let flat = ext.flat_gradient(xa).unwrap();
                    worst = worst.max((g - flat).max_abs());
                }
            }
            logs.push((x3.ln(), worst.ln()));
        }
        let n = logs.len() as f64;
        let sx: f64 = logs.iter().map(|p| p.0).sum();
        let sy: f64 = logs.iter().map(|p| p.1).sum();
        let sxx: f64 = logs.iter().map(|p| p.0 * p.0).sum();
        let sxy: f64 = logs.iter().map(|p| p.0 * p.1).sum();
        let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
        assert!(slope >= 0.95, "slope = {slope}");
        // the normalized max error is bounded by a constant
        for (lx, ly) in &logs {
            assert!((ly - lx).exp() < 10.0);
        }
    }
}
