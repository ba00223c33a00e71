//! Assembly of thin recovery deformations for a cracked membrane: jump-set
//! partitioning, optimal third columns and tilts, and the glued composition
//! u(x) = w(g(x)) with g the inverse of the tilt family.

use crate::density::{BulkDensity, ConstraintMode, SurfaceDensity};
use crate::linalg::{cross_columns, det_cols, v3, Matrix33, Vec2, Vec3};
use crate::maps::extend::incompressible_extend;
use crate::maps::tilt::{incompressible_correct, GluedTilts, Tilt, TiltMap};
use crate::maps::ThickExtension;
use crate::membrane::CrackedMembrane;
use crate::reduce::{reduce_bulk, reduce_surface, ReduceOpts, RANK_EPS};
use crate::{Error, Result};

/// One sub-segment of the jump partition with its tilt neighborhoods.
#[derive(Clone, Debug)]
pub struct SubSegment {
    pub segment: usize,
    /// Arclength interval of the kept sub-segment (alpha'): midpoint and
    /// half length.
    pub s_mid: f64,
    pub half_len: f64,
    /// Disc radii of the inner (isometry) and outer (support) neighborhood.
    pub r_inner: f64,
    pub r_outer: f64,
    pub center: Vec2,
    /// False when the support disc would leave the domain: the sub-segment
    /// keeps an untilted (identity) map and its excess is reported in the
    /// boundary budget.
    pub tilt_allowed: bool,
}

#[derive(Clone, Debug)]
pub struct JumpPartition {
    pub subs: Vec<SubSegment>,
    /// Requested discard budget per component.
    pub epsilon: f64,
    /// Total length of gaps and discarded corner pieces.
    pub discarded_length: f64,
    /// Total alpha' length whose tilt was suppressed at the boundary.
    pub boundary_length: f64,
}

/// Equal-length partition of every jump component into `n` sub-segments,
/// shrunk symmetrically so that consecutive kept pieces are separated by
/// eps/n and the total discarded length per component stays below eps.
///
/// Corner components (two segments sharing an endpoint) lose a ball of
/// radius eps around the corner; each arm is then partitioned on its own.
pub fn partition_jump(
    membrane: &CrackedMembrane,
    n: usize,
    epsilon: f64,
) -> Result<JumpPartition> {
    assert!(n >= 1 && epsilon > 0.0);
    // separation floor: kept pieces are eps/n apart, which must stay above
    // the geometric resolution
    const MIN_GAP: f64 = 1e-4;
    if epsilon / (n as f64) < MIN_GAP {
        return Err(Error::PartitionInfeasible {
            requested: n,
            max_feasible: (epsilon / MIN_GAP).floor().max(1.0) as usize,
        });
    }
    let mut subs = Vec::new();
    let mut discarded = 0.0;
    let mut boundary = 0.0;
    let [dx0, dy0, dx1, dy1] = membrane.domain;

    let ncomp = membrane
        .jumps
        .iter()
        .map(|j| j.component)
        .max()
        .map_or(0, |m| m + 1);

    for comp in 0..ncomp {
        let members: Vec<usize> = membrane
            .jumps
            .iter()
            .enumerate()
            .filter(|(_, j)| j.component == comp)
            .map(|(k, _)| k)
            .collect();
        let corner: Option<Vec2> = if members.len() == 2 {
            let a = &membrane.jumps[members[0]];
            let b = &membrane.jumps[members[1]];
            a.endpoints
                .iter()
                .flat_map(|p| b.endpoints.iter().map(move |q| (*p, *q)))
                .find(|(p, q)| (*p - *q).norm() < 1e-12)
                .map(|(p, _)| p)
        } else {
            None
        };

        for &k in &members {
            let seg = &membrane.jumps[k];
            let len = seg.length();
            let dir = seg.direction();
            // corner ball discarded from the touching end
            let (lo, hi) = match corner {
                Some(c) => {
                    let at_start = (seg.endpoints[0] - c).norm() < 1e-12;
                    if at_start {
                        (epsilon.min(len), len)
                    } else {
                        (0.0, (len - epsilon).max(0.0))
                    }
                }
                None => (0.0, len),
            };
            let effective = hi - lo;
            discarded += len - effective;
            if effective <= 0.0 {
                continue;
            }
            let piece = effective / n as f64;
            let kept = piece - epsilon / n as f64;
            if kept <= 0.0 {
                let max_feasible = (effective / epsilon).floor().max(1.0) as usize;
                return Err(Error::PartitionInfeasible {
                    requested: n,
                    max_feasible,
                });
            }
            // the blend annulus takes nearly the whole slack between kept
            // pieces: a thin annulus would concentrate the cutoff gradient
            // and destroy the determinant margin at finite thickness
            let slack = 0.5 * epsilon / n as f64;
            let r_inner = 0.5 * kept + 0.02 * slack;
            let r_outer = 0.5 * kept + 0.98 * slack;
            discarded += effective - kept * n as f64;
            for i in 0..n {
                let s_mid = lo + (i as f64 + 0.5) * piece;
                let center = seg.endpoints[0] + dir * s_mid;
                let margin = (center.x - dx0)
                    .min(dx1 - center.x)
                    .min(center.y - dy0)
                    .min(dy1 - center.y);
                let tilt_allowed = margin > r_outer * 1.0001;
                if !tilt_allowed {
                    boundary += kept;
                }
                subs.push(SubSegment {
                    segment: k,
                    s_mid,
                    half_len: 0.5 * kept,
                    r_inner,
                    r_outer,
                    center,
                    tilt_allowed,
                });
            }
        }
    }

    // supports of distinct tilts must stay disjoint (arms of a corner can
    // collide near the discarded ball)
    for (i, a) in subs.iter().enumerate() {
        for b in subs.iter().skip(i + 1) {
            if !a.tilt_allowed || !b.tilt_allowed {
                continue;
            }
            if (a.center - b.center).norm() < a.r_outer + b.r_outer {
                let max_feasible = if n > 1 { n - 1 } else { 1 };
                return Err(Error::PartitionInfeasible {
                    requested: n,
                    max_feasible,
                });
            }
        }
    }

    Ok(JumpPartition {
        subs,
        epsilon,
        discarded_length: discarded,
        boundary_length: boundary,
    })
}

/// Optimal third column of every cell with its determinant certificate.
#[derive(Clone, Debug)]
pub struct ThirdColumns {
    pub columns: Vec<Vec3>,
    pub dets: Vec<f64>,
    /// beta with min_cells det(A | b) >= 1/beta.
    pub beta: f64,
    /// Tangential/normal decomposition coefficients per cell (incompressible
    /// mode): b = lambda A^1 + Lambda A^2 + n / |n|^2.
    pub tangential: Vec<(f64, f64)>,
    pub values: Vec<f64>,
}

pub fn optimal_third_column(
    w: &BulkDensity,
    membrane: &CrackedMembrane,
    opts: &ReduceOpts,
) -> Result<ThirdColumns> {
    let mut columns = Vec::with_capacity(membrane.cells.len());
    let mut dets = Vec::new();
    let mut tangential = Vec::new();
    let mut values = Vec::new();
    for (i, cell) in membrane.cells.iter().enumerate() {
        let a = &cell.gradient;
        let n = cross_columns(a);
        if n.norm() < RANK_EPS {
            return Err(Error::RankDeficient(i));
        }
        let r = reduce_bulk(w, a, opts);
        let b = r.minimizer.ok_or(Error::RankDeficient(i))?;
        let det = det_cols(a.col(0), a.col(1), b);
        if w.mode == ConstraintMode::Incompressible && (det - 1.0).abs() > 1e-10 {
            return Err(Error::ConstraintViolation { cell: i, det });
        }
        // tangential coefficients from the Gram system
        let t = b - n * (det / n.dot(n));
        let g11 = a.col(0).dot(a.col(0));
        let g12 = a.col(0).dot(a.col(1));
        let g22 = a.col(1).dot(a.col(1));
        let rhs = (a.col(0).dot(t), a.col(1).dot(t));
        let den = g11 * g22 - g12 * g12;
        tangential.push((
            (rhs.0 * g22 - rhs.1 * g12) / den,
            (rhs.1 * g11 - rhs.0 * g12) / den,
        ));
        values.push(r.value.finite().unwrap_or(f64::INFINITY));
        columns.push(b);
        dets.push(det);
    }
    let min_det = dets.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(ThirdColumns {
        columns,
        dets,
        beta: 1.0 / min_det,
        tangential,
        values,
    })
}

/// Optimal out-of-plane tilt for a jump datum, with the growth-derived
/// safety bound K.
#[derive(Clone, Copy, Debug)]
pub struct TiltChoice {
    pub zeta: f64,
    pub value: f64,
    pub bound: f64,
}

pub fn optimal_tilt(
    psi: &SurfaceDensity,
    z: Vec3,
    nu: Vec2,
    opts: &ReduceOpts,
) -> Result<TiltChoice> {
    let r = reduce_surface(psi, z, nu, opts)?;
    let bound = psi.c4 / psi.c3 * (1.0 + z.norm());
    debug_assert!(r.zeta_star.abs() <= bound + 1e-9);
    Ok(TiltChoice {
        zeta: r.zeta_star,
        value: r.value,
        bound,
    })
}

/// The assembled recovery deformation u(x) = w(g(x)).
pub struct RecoveryDeformation {
    pub membrane: CrackedMembrane,
    pub columns: ThirdColumns,
    pub partition: JumpPartition,
    pub tilts: GluedTilts,
    /// Tilt parameters per sub-segment (zeta = 0 for suppressed ones).
    pub tilt_choices: Vec<TiltChoice>,
    pub rho: f64,
    pub mode: ConstraintMode,
    /// Thickness extension (incompressible mode).
    pub extension: Option<ThickExtension>,
    pub newton_tol: f64,
}

/// Build the recovery deformation for a validated membrane and density pair.
pub fn assemble_recovery(
    membrane: &CrackedMembrane,
    w: &BulkDensity,
    psi: &SurfaceDensity,
    rho: f64,
    partition: JumpPartition,
    opts: &ReduceOpts,
) -> Result<RecoveryDeformation> {
    assert!(rho > 0.0);
    let columns = optimal_third_column(w, membrane, opts)?;
    let mut tilts = Vec::new();
    let mut tilt_choices = Vec::with_capacity(partition.subs.len());
    for sub in &partition.subs {
        let seg = &membrane.jumps[sub.segment];
        let z = seg.jump(sub.s_mid);
        if z.norm() == 0.0 {
            return Err(Error::ZeroJump);
        }
        let choice = if sub.tilt_allowed {
            optimal_tilt(psi, z, seg.normal, opts)?
        } else {
            TiltChoice {
                zeta: 0.0,
                value: psi.eval(z, seg.normal.lift())?,
                bound: psi.c4 / psi.c3 * (1.0 + z.norm()),
            }
        };
        tilt_choices.push(choice);
        if sub.tilt_allowed && choice.zeta != 0.0 {
            let map = TiltMap::new(
                sub.center,
                seg.normal,
                choice.zeta,
                rho,
                sub.r_inner,
                sub.r_outer,
            );
            let tilt = match w.mode {
                ConstraintMode::Incompressible => {
                    Tilt::Corrected(incompressible_correct(map, 1e-10)?)
                }
                _ => {
                    // Newton inversion needs the same determinant margin
                    crate::maps::tilt::correction_precondition(&map, 24, 9)?;
                    Tilt::Plain(map)
                }
            };
            tilts.push(tilt);
        }
    }
    let extension = if w.mode == ConstraintMode::Incompressible {
        Some(incompressible_extend(membrane, &columns.columns)?)
    } else {
        None
    };
    Ok(RecoveryDeformation {
        membrane: membrane.clone(),
        columns,
        partition,
        tilts: GluedTilts::new(tilts),
        tilt_choices,
        rho,
        mode: w.mode,
        extension,
        newton_tol: 1e-12,
    })
}

impl RecoveryDeformation {
    /// The thin profile w(x) = u(x_alpha) + rho x3 b(x_alpha) (or its
    /// incompressible extension evaluated at height rho x3).
    pub fn profile_value(&self, xa: Vec2, x3: f64) -> Result<Vec3> {
        match &self.extension {
            Some(ext) => ext.value(xa, self.rho * x3),
            None => {
                let (xa, cell) = self.membrane.gradient_jittered(xa)?;
                let u = self.membrane.cells[cell].value(xa);
                Ok(u + self.columns.columns[cell] * (self.rho * x3))
            }
        }
    }

    /// Full gradient of w with respect to (x_alpha, x3).
    pub fn profile_gradient(&self, xa: Vec2, x3: f64) -> Result<Matrix33> {
        match &self.extension {
            Some(ext) => {
                let g = ext.gradient(xa, self.rho * x3)?;
                Ok(Matrix33::from_columns(
                    g.col(0),
                    g.col(1),
                    g.col(2) * self.rho,
                ))
            }
            None => {
                let (_, cell) = self.membrane.gradient_jittered(xa)?;
                let a = &self.membrane.cells[cell].gradient;
                Ok(a.extend(self.columns.columns[cell] * self.rho))
            }
        }
    }

    /// u(x) = w(g(x)).
    pub fn value(&self, x: Vec3) -> Result<Vec3> {
        let g = self.tilts.inverse(x, self.newton_tol)?;
        self.profile_value(g.planar(), g.z)
    }

    /// Rescaled gradient (grad_alpha u | (1/rho) d3 u) at x.
    pub fn rescaled_gradient(&self, x: Vec3) -> Result<Matrix33> {
        let g = self.tilts.inverse(x, self.newton_tol)?;
        let (_, jf) = self.tilts.value_jacobian(g);
        let jg = jf.inverse();
        let jw = self.profile_gradient(g.planar(), g.z)?;
        let full = jw.matmul(&jg);
        Ok(Matrix33::from_columns(
            full.col(0),
            full.col(1),
            full.col(2) * (1.0 / self.rho),
        ))
    }

    /// Jump of the fiber column [b] across segment `seg` at arclength s.
    pub fn fiber_jump(&self, seg: usize, s: f64) -> Vec3 {
        let j = &self.membrane.jumps[seg];
        let p = j.point_at(s);
        let probe = 1e-7;
        let plus = self.membrane.cell_at(p + j.normal * probe);
        let minus = self.membrane.cell_at(p - j.normal * probe);
        match (plus, minus) {
            (Ok(cp), Ok(cm)) => self.columns.columns[cp] - self.columns.columns[cm],
            _ => v3(0.0, 0.0, 0.0),
        }
    }

    /// Jump amplitude of w on segment `seg` at arclength s and height x3:
    /// [w] = [u] + rho x3 [b].
    pub fn jump_at(&self, seg: usize, s: f64, x3: f64) -> Vec3 {
        let z = self.membrane.jumps[seg].jump(s);
        z + self.fiber_jump(seg, s) * (self.rho * x3)
    }

    /// Region of a planar point relative to the tilt neighborhoods.
    pub fn region_of(&self, xa: Vec2) -> Region {
        for sub in &self.partition.subs {
            if !sub.tilt_allowed {
                continue;
            }
            let d = (xa - sub.center).norm();
            if d < sub.r_inner {
                return Region::TiltCore;
            }
            if d < sub.r_outer {
                return Region::Annulus;
            }
        }
        Region::Identity
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Region {
    /// Inside an inner disc: the map is an isometry.
    TiltCore,
    /// The cutoff blend.
    Annulus,
    /// The map is the identity (gaps, boundary strip, bulk of the domain).
    Identity,
}
