//! Tilt maps: globally defined blends between the identity and a thin-film
//! isometry that rotates a jump normal out of plane, plus the ODE-based
//! volume-preserving correction.

use super::ode::integrate_to;
use crate::linalg::{det3, det_cols, v2, v3, Matrix33, Vec2, Vec3};
use crate::{Error, Result};

/// The rotation sending the planar normal (kappa, 0) to
/// (kappa / s, rho zeta / s) with s = sqrt(1 + rho^2 zeta^2), fixing the
/// tangent (-kappa_2, kappa_1, 0).
///
/// Row/column layout follows the closed form: with lambda = 1/s - 1,
///
/// ```text
/// | 1 + k1^2 l    k1 k2 l    -rho k1 zeta / s |
/// | k1 k2 l       1 + k2^2 l -rho k2 zeta / s |
/// | rho k1 zeta/s rho k2 zeta/s      1 / s    |
/// ```
pub fn build_o_rho(kappa: Vec2, zeta: f64, rho: f64) -> Matrix33 {
    assert!(rho > 0.0, "rho must be positive");
    let s = (1.0 + rho * rho * zeta * zeta).sqrt();
    let l = 1.0 / s - 1.0;
    let (k1, k2) = (kappa.x, kappa.y);
    let t = rho * zeta / s;
    Matrix33([
        [1.0 + k1 * k1 * l, k1 * k2 * l, -k1 * t],
        [k1 * k2 * l, 1.0 + k2 * k2 * l, -k2 * t],
        [k1 * t, k2 * t, 1.0 / s],
    ])
}

/// Quintic smoothstep value and first three derivatives at t in [0, 1].
fn smoothstep5(t: f64) -> (f64, f64, f64, f64) {
    let t2 = t * t;
    let t3 = t2 * t;
    let s = t3 * (10.0 - 15.0 * t + 6.0 * t2);
    let ds = 30.0 * t2 * (1.0 - t) * (1.0 - t);
    let d2s = 60.0 * t * (2.0 * t - 1.0) * (t - 1.0);
    let d3s = 360.0 * t2 - 360.0 * t + 60.0;
    (s, ds, d2s, d3s)
}

/// Radial cutoff: 1 inside r_inner, 0 outside r_outer, quintic in between.
#[derive(Clone, Copy, Debug)]
pub struct Cutoff {
    pub r_inner: f64,
    pub r_outer: f64,
}

impl Cutoff {
    /// (phi, phi', phi'') as functions of the radius.
    pub fn eval(&self, r: f64) -> (f64, f64, f64) {
        if r <= self.r_inner {
            (1.0, 0.0, 0.0)
        } else if r >= self.r_outer {
            (0.0, 0.0, 0.0)
        } else {
            let w = self.r_outer - self.r_inner;
            let t = (r - self.r_inner) / w;
            let (s, ds, d2s, _) = smoothstep5(t);
            (1.0 - s, -ds / w, -d2s / (w * w))
        }
    }
}

/// The blended map x + phi(x_alpha) (T(x) - x), where T is the isometry
/// x -> c + O (x - c) around the lifted center c = (center, 0).
///
/// Exactly the identity outside the vertical cylinder of radius r_outer
/// (early-out on the cutoff), and exactly the isometry T inside r_inner.
#[derive(Clone, Debug)]
pub struct TiltMap {
    pub center: Vec2,
    /// Unit jump normal kappa (planar).
    pub kappa: Vec2,
    /// Out-of-plane optimization parameter zeta.
    pub zeta: f64,
    /// Thickness parameter rho > 0.
    pub rho: f64,
    pub cutoff: Cutoff,
    rotation: Matrix33,
}

impl TiltMap {
    pub fn new(center: Vec2, kappa: Vec2, zeta: f64, rho: f64, r_inner: f64, r_outer: f64) -> Self {
        assert!((kappa.norm() - 1.0).abs() < 1e-10, "kappa must be unit");
        assert!(0.0 < r_inner && r_inner < r_outer);
        TiltMap {
            center,
            kappa,
            zeta,
            rho,
            cutoff: Cutoff { r_inner, r_outer },
            rotation: build_o_rho(kappa, zeta, rho),
        }
    }

    pub fn rotation(&self) -> &Matrix33 {
        &self.rotation
    }

    fn lifted_center(&self) -> Vec3 {
        v3(self.center.x, self.center.y, 0.0)
    }

    /// phi and its planar gradient/Hessian at x_alpha.
    fn cutoff_planar(&self, xa: Vec2) -> (f64, Vec2, [[f64; 2]; 2]) {
        let d = xa - self.center;
        let r = d.norm();
        if r <= self.cutoff.r_inner || r >= self.cutoff.r_outer {
            let (phi, _, _) = self.cutoff.eval(r);
            return (phi, v2(0.0, 0.0), [[0.0; 2]; 2]);
        }
        let (phi, dphi, d2phi) = self.cutoff.eval(r);
        let rhat = d * (1.0 / r);
        let grad = rhat * dphi;
        // Hessian = phi'' rhat (x) rhat + (phi'/r)(I - rhat (x) rhat)
        let pr = dphi / r;
        let mut h = [[0.0; 2]; 2];
        let rh = [rhat.x, rhat.y];
        for i in 0..2 {
            for j in 0..2 {
                h[i][j] = d2phi * rh[i] * rh[j] + pr * ((i == j) as usize as f64 - rh[i] * rh[j]);
            }
        }
        (phi, grad, h)
    }

    pub fn value(&self, x: Vec3) -> Vec3 {
        let (phi, _, _) = self.cutoff.eval((x.planar() - self.center).norm());
        if phi == 0.0 {
            return x;
        }
        let c = self.lifted_center();
        let t = c + self.rotation.apply(x - c);
        x + (t - x) * phi
    }

    pub fn jacobian(&self, x: Vec3) -> Matrix33 {
        self.value_jacobian(x).1
    }

    pub fn value_jacobian(&self, x: Vec3) -> (Vec3, Matrix33) {
        let (phi, grad, _) = self.cutoff_planar(x.planar());
        if phi == 0.0 && grad == v2(0.0, 0.0) {
            return (x, Matrix33::IDENTITY);
        }
        let c = self.lifted_center();
        let shift = c + self.rotation.apply(x - c) - x;
        let value = x + shift * phi;
        // grad f = I + (T - x) (x) grad phi + phi (O - I)
        let mut j = Matrix33::IDENTITY;
        let g = [grad.x, grad.y, 0.0];
        let s = [shift.x, shift.y, shift.z];
        for r in 0..3 {
            for cidx in 0..3 {
                j.0[r][cidx] += s[r] * g[cidx]
                    + phi * (self.rotation.0[r][cidx] - ((r == cidx) as usize as f64));
            }
        }
        (value, j)
    }

    /// Second derivatives: hessian[i] is the matrix d_k d_j f_i.
    pub fn hessian(&self, x: Vec3) -> [[[f64; 3]; 3]; 3] {
        let (_, grad, hphi) = self.cutoff_planar(x.planar());
        let c = self.lifted_center();
        let shift = c + self.rotation.apply(x - c) - x;
        let s = [shift.x, shift.y, shift.z];
        let g = [grad.x, grad.y, 0.0];
        let mut out = [[[0.0; 3]; 3]; 3];
        let o = &self.rotation.0;
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    let h2 = if j < 2 && k < 2 { hphi[j][k] } else { 0.0 };
                    let oi_k = o[i][k] - ((i == k) as usize as f64);
                    let oi_j = o[i][j] - ((i == j) as usize as f64);
                    out[i][j][k] = h2 * s[i] + g[j] * oi_k + g[k] * oi_j;
                }
            }
        }
        out
    }
}

/// Damped Newton inversion of a near-identity map.
pub fn invert_map(
    value_jacobian: &dyn Fn(Vec3) -> (Vec3, Matrix33),
    y: Vec3,
    tol: f64,
) -> Result<Vec3> {
    let mut x = y;
    for _ in 0..60 {
        let (fx, jx) = value_jacobian(x);
        let r = fx - y;
        if r.norm() <= tol {
            return Ok(x);
        }
        let d = det3(&jx);
        if d.abs() < 1e-8 {
            break;
        }
        let step = jx.inverse().apply(r);
        // damping keeps the iterate in the contraction region
        let lim = 0.5 * (1.0 + x.norm());
        let sn = step.norm();
        let damp = if sn > lim { lim / sn } else { 1.0 };
        x = x - step * damp;
    }
    Err(Error::InversionFailed {
        x: y.x,
        y: y.y,
        z: y.z,
    })
}

/// Mid-plane data of a tilt map at a planar point: the curve u, the scaled
/// fiber b = d3 g / det(grad g), and their planar derivatives.
struct MidplaneData {
    u: Vec3,
    du: [Vec3; 2],
    b: Vec3,
    db: [Vec3; 2],
    /// det(du | b); equals one up to rounding.
    d0: f64,
    /// Coefficients of det(grad w)(t) = d0 + p t + q t^2 for
    /// w = u + t b.
    p: f64,
    q: f64,
}

fn midplane(map: &TiltMap, xa: Vec2) -> MidplaneData {
    let x = v3(xa.x, xa.y, 0.0);
    let (u, j) = map.value_jacobian(x);
    let h = map.hessian(x);
    let det = det3(&j);
    let col = |m: &Matrix33, c: usize| m.col(c);
    let g3 = col(&j, 2);
    let b = g3 * (1.0 / det);
    // d_i of det(grad g) via the adjugate: d_i det = tr(adj(J) H_i)
    let adj = j.inverse() * det;
    let mut du = [v3(0.0, 0.0, 0.0); 2];
    let mut db = [v3(0.0, 0.0, 0.0); 2];
    for i in 0..2 {
        du[i] = col(&j, i);
        // H_i = d_i grad g as a matrix (rows: component, cols: direction)
        let hi = Matrix33([
            [h[0][0][i], h[0][1][i], h[0][2][i]],
            [h[1][0][i], h[1][1][i], h[1][2][i]],
            [h[2][0][i], h[2][1][i], h[2][2][i]],
        ]);
        let ddet: f64 = (0..3)
            .map(|r| (0..3).map(|c| adj.0[c][r] * hi.0[r][c]).sum::<f64>())
            .sum();
        let dg3 = hi.col(2);
        db[i] = dg3 * (1.0 / det) - g3 * (ddet / (det * det));
    }
    let d0 = det_cols(du[0], du[1], b);
    let p = det_cols(db[0], du[1], b) + det_cols(du[0], db[1], b);
    let q = det_cols(db[0], db[1], b);
    MidplaneData {
        u,
        du,
        b,
        db,
        d0,
        p,
        q,
    }
}

/// Volume-preserving correction of a tilt map.
///
/// Replaces the vertical fibers by u(x_alpha) + G(x_alpha, x3) b(x_alpha),
/// where G solves d3 G = 1 / det(grad w)(x_alpha, G), G(x_alpha, 0) = 0. The
/// corrected determinant is identically one; the tilt properties (isometry
/// on the inner cylinder, identity outside the outer one, the tilt bound)
/// survive because both regions have det(grad w) = 1 and G = x3 there.
#[derive(Clone, Debug)]
pub struct CorrectedTilt {
    pub base: TiltMap,
    pub ode_tol: f64,
}

impl CorrectedTilt {
    /// Thickness reparameterization G(x_alpha, x3) by adaptive integration.
    pub fn thickness_reparam(&self, xa: Vec2, x3: f64) -> f64 {
        let m = midplane(&self.base, xa);
        if m.p.abs() < 1e-14 && m.q.abs() < 1e-14 {
            return x3 / m.d0;
        }
        let rhs = move |_t: f64, g: f64| 1.0 / (m.d0 + m.p * g + m.q * g * g);
        integrate_to(&rhs, 0.0, 0.0, x3, self.ode_tol)
    }

    /// Root of d0 G + p G^2/2 + q G^3/3 = x3 by Newton; independent of the
    /// adaptive integrator, used as a cross-check.
    pub fn thickness_reparam_newton(&self, xa: Vec2, x3: f64) -> f64 {
        let m = midplane(&self.base, xa);
        newton_cubic(m.d0, m.p, m.q, x3)
    }

    pub fn value(&self, x: Vec3) -> Vec3 {
        let xa = x.planar();
        let (phi, _, _) = self.base.cutoff.eval((xa - self.base.center).norm());
        if phi == 0.0 {
            return x;
        }
        let m = midplane(&self.base, xa);
        let g = self.reparam_from(&m, x.z);
        m.u + m.b * g
    }

    pub fn value_jacobian(&self, x: Vec3) -> (Vec3, Matrix33) {
        let xa = x.planar();
        let (phi, grad_phi, _) = self.base.cutoff_planar(xa);
        if phi == 0.0 && grad_phi == v2(0.0, 0.0) {
            return (x, Matrix33::IDENTITY);
        }
        let m = midplane(&self.base, xa);
        let g = self.reparam_from(&m, x.z);
        let value = m.u + m.b * g;
        let dg3 = 1.0 / (m.d0 + m.p * g + m.q * g * g);
        // planar partials of G from the integral identity
        // 0 = d_i d0 G + d_i p G^2/2 + d_i q G^3/3 + D(G) d_i G
        let hstep = 1e-5;
        let mut cols = [v3(0.0, 0.0, 0.0); 3];
        for i in 0..2 {
            let e = if i == 0 { v2(1.0, 0.0) } else { v2(0.0, 1.0) };
            let mp = midplane(&self.base, xa + e * hstep);
            let mm = midplane(&self.base, xa - e * hstep);
            let dd0 = (mp.d0 - mm.d0) / (2.0 * hstep);
            let dp = (mp.p - mm.p) / (2.0 * hstep);
            let dq = (mp.q - mm.q) / (2.0 * hstep);
            let dgi = -(dd0 * g + dp * g * g / 2.0 + dq * g * g * g / 3.0) * dg3;
            cols[i] = m.du[i] + m.db[i] * g + m.b * dgi;
        }
        cols[2] = m.b * dg3;
        (value, Matrix33::from_columns(cols[0], cols[1], cols[2]))
    }

    fn reparam_from(&self, m: &MidplaneData, x3: f64) -> f64 {
        if m.p.abs() < 1e-14 && m.q.abs() < 1e-14 {
            return x3 / m.d0;
        }
        let rhs = move |_t: f64, g: f64| 1.0 / (m.d0 + m.p * g + m.q * g * g);
        integrate_to(&rhs, 0.0, 0.0, x3, self.ode_tol)
    }
}

/// Newton solve of d0 g + p g^2/2 + q g^3/3 = x3.
pub fn newton_cubic(d0: f64, p: f64, q: f64, x3: f64) -> f64 {
    let mut g = x3 / d0;
    for _ in 0..60 {
        let f = d0 * g + 0.5 * p * g * g + q * g * g * g / 3.0 - x3;
        let df = d0 + p * g + q * g * g;
        let step = f / df;
        g -= step;
        if step.abs() < 1e-15 * (1.0 + g.abs()) {
            break;
        }
    }
    g
}

/// Check det(grad g) >= 1/2 over the blend cylinder, the precondition for
/// the correction and for Newton inversion.
///
/// Sampling is polar with extra radii packed into the blend annulus, where
/// the cutoff gradient concentrates; a cartesian lattice can miss a thin
/// annulus entirely. The thickness range covers the evaluation slab with a
/// margin for the inverse map.
pub fn correction_precondition(map: &TiltMap, n_angles: usize, n_thick: usize) -> Result<()> {
    let mut radii = vec![0.0, 0.5 * map.cutoff.r_inner, map.cutoff.r_inner * 0.999];
    for k in 0..=24 {
        let t = k as f64 / 24.0;
        radii.push(map.cutoff.r_inner + t * (map.cutoff.r_outer - map.cutoff.r_inner));
    }
    for &r in &radii {
        for a in 0..n_angles {
            let th = std::f64::consts::TAU * a as f64 / n_angles as f64;
            let xa = v2(map.center.x + r * th.cos(), map.center.y + r * th.sin());
            for k in 0..n_thick {
                let x3 = -0.8 + 1.6 * (k as f64 + 0.5) / n_thick as f64;
                let x = v3(xa.x, xa.y, x3);
                let d = det3(&map.jacobian(x));
                if d < 0.5 {
                    return Err(Error::DeterminantTooSmall {
                        det: d,
                        x: x.x,
                        y: x.y,
                        z: x.z,
                    });
                }
            }
        }
    }
    Ok(())
}

/// Correct a tilt map so that its Jacobian determinant is identically one.
pub fn incompressible_correct(map: TiltMap, ode_tol: f64) -> Result<CorrectedTilt> {
    correction_precondition(&map, 24, 9)?;
    Ok(CorrectedTilt { base: map, ode_tol })
}

/// A tilt map in either variant, plus glued families.
#[derive(Clone, Debug)]
pub enum Tilt {
    Plain(TiltMap),
    Corrected(CorrectedTilt),
}

impl Tilt {
    pub fn base(&self) -> &TiltMap {
        match self {
            Tilt::Plain(t) => t,
            Tilt::Corrected(c) => &c.base,
        }
    }
    pub fn value(&self, x: Vec3) -> Vec3 {
        match self {
            Tilt::Plain(t) => t.value(x),
            Tilt::Corrected(c) => c.value(x),
        }
    }
    pub fn value_jacobian(&self, x: Vec3) -> (Vec3, Matrix33) {
        match self {
            Tilt::Plain(t) => t.value_jacobian(x),
            Tilt::Corrected(c) => c.value_jacobian(x),
        }
    }
}

/// Finitely many tilt maps with pairwise disjoint supports, glued with the
/// identity.
#[derive(Clone, Debug, Default)]
pub struct GluedTilts {
    pub tilts: Vec<Tilt>,
}

impl GluedTilts {
    pub fn new(tilts: Vec<Tilt>) -> Self {
        for (i, a) in tilts.iter().enumerate() {
            for b in tilts.iter().skip(i + 1) {
                let (ba, bb) = (a.base(), b.base());
                let gap = (ba.center - bb.center).norm();
                assert!(
                    gap >= ba.cutoff.r_outer + bb.cutoff.r_outer,
                    "tilt supports overlap"
                );
            }
        }
        GluedTilts { tilts }
    }

    fn active(&self, xa: Vec2) -> Option<&Tilt> {
        self.tilts
            .iter()
            .find(|t| (xa - t.base().center).norm() < t.base().cutoff.r_outer)
    }

    pub fn value(&self, x: Vec3) -> Vec3 {
        match self.active(x.planar()) {
            Some(t) => t.value(x),
            None => x,
        }
    }

    pub fn value_jacobian(&self, x: Vec3) -> (Vec3, Matrix33) {
        match self.active(x.planar()) {
            Some(t) => t.value_jacobian(x),
            None => (x, Matrix33::IDENTITY),
        }
    }

    /// Newton inverse (the glued map is a near-identity diffeomorphism).
    pub fn inverse(&self, y: Vec3, tol: f64) -> Result<Vec3> {
        invert_map(&|x| self.value_jacobian(x), y, tol)
    }
}
