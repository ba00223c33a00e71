//! Quadrature evaluation of the rescaled thin-film functional and of the 2D
//! limit functional, and the thickness-sweep driver comparing the two.

use crate::density::{BulkDensity, ExtReal, SurfaceDensity};
use crate::envelope::{quasiconvex_upper_estimate, QcOpts};
use crate::linalg::{v3, Vec3};
use crate::membrane::CrackedMembrane;
use crate::quad::{gauss_on_interval, tree_sum, PrismGrid};
use crate::recovery::{
    assemble_recovery, partition_jump, RecoveryDeformation, Region,
};
use crate::reduce::{reduce_bulk, reduce_surface, ReduceOpts, ReducedBulk};
use crate::{Error, Result};
use rayon::prelude::*;

/// Per-region decomposition of an energy integral against its flat target.
#[derive(Clone, Copy, Debug, Default)]
pub struct RegionSums {
    pub identity: f64,
    pub core: f64,
    pub annulus: f64,
    /// Integral of the target density over the same region (reduced bulk
    /// density of the cell gradient, or the reduced surface density).
    pub identity_ideal: f64,
    pub core_ideal: f64,
    pub annulus_ideal: f64,
}

impl RegionSums {
    pub fn total(&self) -> f64 {
        self.identity + self.core + self.annulus
    }
    /// Measured excess over the target in the tilt neighborhoods (the
    /// epsilon-budget contribution of this integral).
    pub fn neighborhood_excess(&self) -> f64 {
        (self.core - self.core_ideal) + (self.annulus - self.annulus_ideal)
    }
    /// Excess on the identity region (gaps and boundary strip for the
    /// surface part; zero for the bulk part by construction).
    pub fn identity_excess(&self) -> f64 {
        self.identity - self.identity_ideal
    }
}

#[derive(Clone, Debug)]
pub struct BulkOutcome {
    pub value: ExtReal,
    pub regions: RegionSums,
    /// First quadrature point with an infinite integrand, if any.
    pub offending: Option<(Vec3, f64)>,
}

/// Gauss quadrature of W on the rescaled gradient of a recovery deformation
/// over the unit-thickness slab. The integrand is infinite exactly when the
/// determinant constraint fails beyond `det_tol`; the first offending point
/// is reported.
pub fn bulk_energy(
    def: &RecoveryDeformation,
    w: &BulkDensity,
    grid: &PrismGrid,
    det_tol: f64,
) -> Result<BulkOutcome> {
    let points = grid.points();
    let evals: Vec<Result<(f64, f64, Region, Option<f64>)>> = points
        .par_iter()
        .map(|p| {
            let x = v3(p.pos.x, p.pos.y, p.x3);
            let a = def.rescaled_gradient(x)?;
            let (_, cell) = def.membrane.gradient_jittered(p.pos)?;
            let ideal = def.columns.values[cell];
            let region = def.region_of(p.pos);
            match w.eval_tol(&a, det_tol) {
                ExtReal::Finite(v) => Ok((p.weight * v, p.weight * ideal, region, None)),
                ExtReal::Infinite => Ok((0.0, 0.0, region, Some(crate::linalg::det3(&a)))),
            }
        })
        .collect();

    let mut contributions = Vec::with_capacity(points.len());
    let mut regions = RegionSums::default();
    let mut offending = None;
    for (p, e) in points.iter().zip(evals) {
        let (c, ideal, region, bad) = e?;
        if let Some(det) = bad {
            offending = Some((v3(p.pos.x, p.pos.y, p.x3), det));
            break;
        }
        contributions.push(c);
        match region {
            Region::Identity => {
                regions.identity += c;
                regions.identity_ideal += ideal;
            }
            Region::TiltCore => {
                regions.core += c;
                regions.core_ideal += ideal;
            }
            Region::Annulus => {
                regions.annulus += c;
                regions.annulus_ideal += ideal;
            }
        }
    }
    if let Some((x, det)) = offending {
        return Ok(BulkOutcome {
            value: ExtReal::Infinite,
            regions,
            offending: Some((x, det)),
        });
    }
    Ok(BulkOutcome {
        value: ExtReal::Finite(tree_sum(&contributions)),
        regions,
        offending: None,
    })
}

#[derive(Clone, Debug)]
pub struct SurfaceOutcome {
    pub value: f64,
    pub regions: RegionSums,
    /// Plain area of the pushed jump surface (psi = 1 integrand).
    pub area: f64,
}

#[derive(Clone, Copy, Debug)]
pub struct SurfaceQuad {
    /// Gauss sub-intervals per unit arclength within each smooth piece.
    pub s_per_unit: usize,
    /// Thickness sub-intervals.
    pub t_sub: usize,
}

impl Default for SurfaceQuad {
    fn default() -> Self {
        SurfaceQuad {
            s_per_unit: 16,
            t_sub: 4,
        }
    }
}

/// Integrate the rescaled surface density over the pushed jump surface
/// f(J x (-1/2, 1/2)), using tangent cross products for the area element and
/// normal, with jump values pulled back through the inverse map.
pub fn surface_energy(
    def: &RecoveryDeformation,
    psi: &SurfaceDensity,
    quad: &SurfaceQuad,
    opts: &ReduceOpts,
) -> Result<SurfaceOutcome> {
    let mut value_parts = Vec::new();
    let mut area_parts = Vec::new();
    let mut regions = RegionSums::default();

    for (k, seg) in def.membrane.jumps.iter().enumerate() {
        let len = seg.length();
        let dir = seg.direction();
        let dir3 = v3(dir.x, dir.y, 0.0);
        let nu3 = seg.normal.lift();

        // orientation: the raw cross product of the parameterization either
        // aligns with +nu everywhere or with -nu everywhere
        let flip = {
            let raw = dir3.cross(v3(0.0, 0.0, 1.0));
            if raw.dot(nu3) >= 0.0 {
                1.0
            } else {
                -1.0
            }
        };

        // smooth pieces: split at every disc radius crossing
        let mut breaks = vec![0.0, len];
        for sub in def.partition.subs.iter().filter(|s| s.segment == k) {
            for r in [sub.r_inner, sub.r_outer] {
                for s in [sub.s_mid - r, sub.s_mid + r] {
                    if s > 1e-12 && s < len - 1e-12 {
                        breaks.push(s);
                    }
                }
            }
        }
        breaks.sort_by(|a, b| a.partial_cmp(b).unwrap());
        breaks.dedup_by(|a, b| (*a - *b).abs() < 1e-12);

        let t_rule: Vec<(f64, f64)> = {
            let mut pts = Vec::new();
            for i in 0..quad.t_sub {
                let t0 = -0.5 + i as f64 / quad.t_sub as f64;
                pts.extend(gauss_on_interval(3, t0, t0 + 1.0 / quad.t_sub as f64));
            }
            pts
        };

        for piece in breaks.windows(2) {
            let (lo, hi) = (piece[0], piece[1]);
            let nsub = ((hi - lo) * quad.s_per_unit as f64).ceil().max(1.0) as usize;
            for i in 0..nsub {
                let a = lo + (hi - lo) * i as f64 / nsub as f64;
                let b = lo + (hi - lo) * (i + 1) as f64 / nsub as f64;
                for (s, ws) in gauss_on_interval(4, a, b) {
                    let p = seg.point_at(s);
                    let z = seg.jump(s);
                    let region = def.region_of(p);
                    // reduced target for the budget decomposition
                    let ideal = reduce_surface(psi, z, seg.normal, opts)?.value;
                    let db = def.fiber_jump(k, s);
                    for &(t, wt) in &t_rule {
                        let x = v3(p.x, p.y, t);
                        let (_, jf) = def.tilts.value_jacobian(x);
                        let rs = jf.apply(dir3);
                        let rt = jf.apply(v3(0.0, 0.0, 1.0));
                        let cross = rs.cross(rt);
                        let area = cross.norm();
                        if area < 1e-10 {
                            return Err(Error::DegenerateTangents(s, t));
                        }
                        let normal = cross * (flip / area);
                        let jump = z + db * (def.rho * t);
                        let integrand =
                            crate::density::eval_psi_rho(psi, jump, normal, def.rho)?;
                        let c = ws * wt * area * integrand;
                        let ci = ws * wt * ideal;
                        value_parts.push(c);
                        area_parts.push(ws * wt * area);
                        match region {
                            Region::Identity => {
                                regions.identity += c;
                                regions.identity_ideal += ci;
                            }
                            Region::TiltCore => {
                                regions.core += c;
                                regions.core_ideal += ci;
                            }
                            Region::Annulus => {
                                regions.annulus += c;
                                regions.annulus_ideal += ci;
                            }
                        }
                    }
                }
            }
        }
    }

    Ok(SurfaceOutcome {
        value: tree_sum(&value_parts),
        regions,
        area: tree_sum(&area_parts),
    })
}

/// The limit membrane functional: reduced bulk density integrated over the
/// cells plus the reduced surface density integrated over the jump set.
#[derive(Clone, Debug)]
pub struct LimitEnergy {
    pub bulk: ExtReal,
    pub surface: f64,
    pub total: ExtReal,
    /// Per-cell reduced values.
    pub cell_values: Vec<f64>,
}

pub fn limit_energy(
    membrane: &CrackedMembrane,
    w: &BulkDensity,
    psi: &SurfaceDensity,
    opts: &ReduceOpts,
) -> Result<LimitEnergy> {
    let mut bulk = ExtReal::Finite(0.0);
    let mut cell_values = Vec::with_capacity(membrane.cells.len());
    for cell in &membrane.cells {
        let r = reduce_bulk(w, &cell.gradient, opts);
        cell_values.push(r.value.finite().unwrap_or(f64::INFINITY));
        bulk = bulk + r.value.map(|v| v * cell.area());
    }
    let mut surface = 0.0;
    for seg in &membrane.jumps {
        let len = seg.length();
        for (s, ws) in gauss_on_interval(8, 0.0, len) {
            let z = seg.jump(s);
            surface += ws * reduce_surface(psi, z, seg.normal, opts)?.value;
        }
    }
    Ok(LimitEnergy {
        bulk,
        surface,
        total: bulk + ExtReal::Finite(surface),
        cell_values,
    })
}

/// Lower-bound estimate of the relaxed limit functional: quasiconvex upper
/// estimate of the reduced bulk density per cell (an upper bound for the
/// quasiconvex envelope), plus the reduced surface integral.
pub fn limit_energy_qc_estimate(
    membrane: &CrackedMembrane,
    w: &BulkDensity,
    psi: &SurfaceDensity,
    opts: &ReduceOpts,
    qc: &QcOpts,
) -> Result<f64> {
    let reduced = ReducedBulk::new(w.clone());
    let mut bulk = 0.0;
    for cell in &membrane.cells {
        let est = quasiconvex_upper_estimate(&reduced, &cell.gradient, qc);
        bulk += est.value * cell.area();
    }
    let mut surface = 0.0;
    for seg in &membrane.jumps {
        let len = seg.length();
        for (s, ws) in gauss_on_interval(8, 0.0, len) {
            let z = seg.jump(s);
            surface += ws * reduce_surface(psi, z, seg.normal, opts)?.value;
        }
    }
    Ok(bulk + surface)
}

/// Full evaluation of one thickness: energies, region decomposition and the
/// explicit epsilon-budget.
#[derive(Clone, Debug)]
pub struct EnergyBreakdown {
    pub bulk: f64,
    pub surface: f64,
    pub total: f64,
    pub bulk_regions: RegionSums,
    pub surface_regions: RegionSums,
    /// Measured surface excess on gaps, boundary strip and annuli.
    pub budget_surface: f64,
    /// Measured bulk excess on the tilt neighborhoods.
    pub budget_bulk: f64,
    pub budget: f64,
    /// |E(grid) - E(coarser grid)| from a half-resolution bulk pass.
    pub quad_error: f64,
}

#[derive(Clone, Debug)]
pub struct SweepRow {
    pub rho: f64,
    pub energy: f64,
    pub target: f64,
    pub gap: f64,
    pub breakdown: EnergyBreakdown,
    pub lower_estimate: f64,
    pub lower_ok: bool,
    pub runtime: f64,
}

#[derive(Clone, Debug)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    pub target: f64,
    pub lower_estimate: f64,
    /// Gap nonincreasing along the sweep (None for a single row).
    pub monotone: Option<bool>,
}

pub struct SweepConfig {
    pub rhos: Vec<f64>,
    pub partition_n: usize,
    pub partition_eps: f64,
    pub grid: PrismGrid,
    pub surface_quad: SurfaceQuad,
    pub det_tol: f64,
    pub reduce: ReduceOpts,
    pub qc: QcOpts,
}

/// Evaluate one recovery deformation completely.
pub fn evaluate_deformation(
    def: &RecoveryDeformation,
    w: &BulkDensity,
    psi: &SurfaceDensity,
    grid: &PrismGrid,
    surf_quad: &SurfaceQuad,
    det_tol: f64,
    opts: &ReduceOpts,
) -> Result<EnergyBreakdown> {
    let bulk = bulk_energy(def, w, grid, det_tol)?;
    let bulk_v = match bulk.value {
        ExtReal::Finite(v) => v,
        ExtReal::Infinite => {
            let (x, det) = bulk.offending.unwrap_or((v3(0.0, 0.0, 0.0), f64::NAN));
            return Err(Error::ConstraintViolation {
                cell: usize::MAX,
                det,
            })
            .map_err(|_| Error::Parse(format!(
                "infinite bulk integrand at ({}, {}, {}): det = {det}",
                x.x, x.y, x.z
            )));
        }
    };
    let coarse = PrismGrid::new(grid.rect, (grid.n / 2).max(2), (grid.m / 2).max(2))
        .with_gauss(grid.gauss);
    let bulk_half = bulk_energy(def, w, &coarse, det_tol)?;
    let quad_error = match bulk_half.value {
        ExtReal::Finite(v) => (v - bulk_v).abs(),
        ExtReal::Infinite => f64::NAN,
    };
    let surface = surface_energy(def, psi, surf_quad, opts)?;
    let budget_surface =
        surface.regions.identity_excess().max(0.0) + surface.regions.neighborhood_excess().max(0.0);
    let budget_bulk = bulk.regions.neighborhood_excess().max(0.0);
    Ok(EnergyBreakdown {
        bulk: bulk_v,
        surface: surface.value,
        total: bulk_v + surface.value,
        bulk_regions: bulk.regions,
        surface_regions: surface.regions,
        budget_surface,
        budget_bulk,
        budget: budget_surface + budget_bulk,
        quad_error,
    })
}

/// Sweep the thickness list, comparing the rescaled energy of the recovery
/// deformation against the limit functional.
pub fn convergence_sweep(
    membrane: &CrackedMembrane,
    w: &BulkDensity,
    psi: &SurfaceDensity,
    cfg: &SweepConfig,
) -> Result<SweepResult> {
    assert!(
        cfg.rhos.windows(2).all(|p| p[1] < p[0]),
        "rho list must be decreasing"
    );
    let limit = limit_energy(membrane, w, psi, &cfg.reduce)?;
    let target = limit
        .total
        .finite()
        .ok_or_else(|| Error::Parse("limit energy is infinite".into()))?;
    let lower_estimate = limit_energy_qc_estimate(membrane, w, psi, &cfg.reduce, &cfg.qc)?;

    let mut rows = Vec::with_capacity(cfg.rhos.len());
    for &rho in &cfg.rhos {
        let start = std::time::Instant::now();
        let partition = partition_jump(membrane, cfg.partition_n, cfg.partition_eps)?;
        let def = assemble_recovery(membrane, w, psi, rho, partition, &cfg.reduce)?;
        let breakdown = evaluate_deformation(
            &def,
            w,
            psi,
            &cfg.grid,
            &cfg.surface_quad,
            cfg.det_tol,
            &cfg.reduce,
        )?;
        let gap = (breakdown.total - target).abs();
        let lower_ok = breakdown.total >= lower_estimate - breakdown.budget - 1e-9;
        rows.push(SweepRow {
            rho,
            energy: breakdown.total,
            target,
            gap,
            breakdown,
            lower_estimate,
            lower_ok,
            runtime: start.elapsed().as_secs_f64(),
        });
    }
    let monotone = if rows.len() >= 2 {
        Some(rows.windows(2).all(|p| p[1].gap <= p[0].gap + 1e-6))
    } else {
        None
    };
    Ok(SweepResult {
        rows,
        target,
        lower_estimate,
        monotone,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::fixture_q;
    use crate::linalg::{Matrix32, Matrix33};
    use crate::membrane::CrackedMembrane;

    fn id32() -> Matrix32 {
        Matrix32([[1.0, 0.0], [0.0, 1.0], [0.0, 0.0]])
    }

    fn fixture() -> CrackedMembrane {
        CrackedMembrane::split_fixture([0.0, 0.0, 1.0, 1.0], 0.5, id32(), v3(0.0, 0.0, 1.0))
            .unwrap()
    }

    #[test]
    fn limit_energy_of_standard_fixture_is_four_point_five() {
        let m = fixture();
        let w = BulkDensity::incomp_power(2.0);
        let psi = SurfaceDensity::quad(fixture_q(), 1.0);
        let l = limit_energy(&m, &w, &psi, &ReduceOpts::default()).unwrap();
        assert!((l.bulk.unwrap_finite() - 3.0).abs() < 1e-8);
        assert!((l.surface - 1.5).abs() < 1e-8);
        assert!((l.total.unwrap_finite() - 4.5).abs() < 1e-8);
    }

    #[test]
    fn limit_energy_without_jumps_is_bulk_only() {
        let m = CrackedMembrane::single_cell([0.0, 0.0, 1.0, 1.0], id32());
        let w = BulkDensity::incomp_power(2.0);
        let psi = SurfaceDensity::quad(fixture_q(), 1.0);
        let l = limit_energy(&m, &w, &psi, &ReduceOpts::default()).unwrap();
        assert_eq!(l.surface, 0.0);
        assert!((l.total.unwrap_finite() - 3.0).abs() < 1e-8);
    }

    #[test]
    fn constant_integrand_bulk_matches_reduced_value() {
        // no tilt maps (isotropic surface): the integrand is exactly W0
        let m = fixture();
        let w = BulkDensity::incomp_power(2.0);
        let psi = SurfaceDensity::quad(Matrix33::IDENTITY, 1.0);
        let part = partition_jump(&m, 1, 0.42).unwrap();
        let def = assemble_recovery(&m, &w, &psi, 0.05, part, &ReduceOpts::default()).unwrap();
        let grid = PrismGrid::new(m.domain, 16, 4);
        let out = bulk_energy(&def, &w, &grid, 1e-6).unwrap();
        assert!((out.value.unwrap_finite() - 3.0).abs() < 1e-8);
    }

    #[test]
    fn wrong_fiber_is_flagged_infinite() {
        let m = fixture();
        let w = BulkDensity::incomp_power(2.0);
        let psi = SurfaceDensity::quad(Matrix33::IDENTITY, 1.0);
        let part = partition_jump(&m, 1, 0.42).unwrap();
        let mut def =
            assemble_recovery(&m, &w, &psi, 0.05, part, &ReduceOpts::default()).unwrap();
        // tamper: det(A | b) = 2 violates the constraint everywhere
        def.extension = None;
        def.columns.columns = vec![v3(0.0, 0.0, 2.0); 2];
        let grid = PrismGrid::new(m.domain, 8, 2);
        let out = bulk_energy(&def, &w, &grid, 1e-6).unwrap();
        assert_eq!(out.value, ExtReal::Infinite);
        let (_, det) = out.offending.unwrap();
        assert!((det - 2.0).abs() < 1e-9);
    }

    #[test]
    fn flat_surface_measure_and_value() {
        // identity maps: the pushed surface is the vertical plane; its area
        // is the jump length and the integrand is psi(z, nu, 0)
        let m = fixture();
        let w = BulkDensity::incomp_power(2.0);
        let psi = SurfaceDensity::quad(Matrix33::IDENTITY, 1.0);
        let part = partition_jump(&m, 1, 0.42).unwrap();
        let def = assemble_recovery(&m, &w, &psi, 0.05, part, &ReduceOpts::default()).unwrap();
        let out =
            surface_energy(&def, &psi, &SurfaceQuad::default(), &ReduceOpts::default()).unwrap();
        assert!((out.area - 1.0).abs() < 1e-8, "area = {}", out.area);
        // psi(z, e1, 0) = phi(1) = 1.5 for the isotropic form
        assert!((out.value - 1.5).abs() < 1e-8, "value = {}", out.value);
    }

    #[test]
    fn tilted_surface_matches_closed_form() {
        let m = fixture();
        let w = BulkDensity::incomp_power(2.0);
        let psi = SurfaceDensity::quad(fixture_q(), 1.0);
        let rho = 0.05;
        let part = partition_jump(&m, 1, 0.42).unwrap();
        let def = assemble_recovery(&m, &w, &psi, rho, part, &ReduceOpts::default()).unwrap();
        let out =
            surface_energy(&def, &psi, &SurfaceQuad::default(), &ReduceOpts::default()).unwrap();

        // closed form on the isometric core: length * psi(z, nu, zeta*) / s
        let sub = &def.partition.subs[0];
        let zeta = def.tilt_choices[0].zeta;
        let s = (1.0 + rho * rho * zeta * zeta).sqrt();
        let core_len = 2.0 * sub.r_inner;
        let core_expect = core_len * 1.5 / s;
        let measured_core = def_core_energy(&def, &psi, sub.s_mid - sub.r_inner, sub.s_mid + sub.r_inner);
        assert!(
            (measured_core - core_expect).abs() < 1e-6 * core_expect,
            "core: {measured_core} vs {core_expect}"
        );
        // flat end pieces contribute psi(z, nu, 0) = 1.5 sqrt(2) per length
        let flat = out.regions.identity;
        let flat_len = 1.0 - 2.0 * sub.r_outer;
        assert!((flat - flat_len * 1.5 * 2f64.sqrt()).abs() < 1e-6);
    }

    /// Independent fine quadrature of the core contribution.
    fn def_core_energy(
        def: &RecoveryDeformation,
        psi: &SurfaceDensity,
        s_lo: f64,
        s_hi: f64,
    ) -> f64 {
        let seg = &def.membrane.jumps[0];
        let dir = seg.direction();
        let dir3 = v3(dir.x, dir.y, 0.0);
        let mut total = 0.0;
        for (s, ws) in gauss_on_interval(16, s_lo, s_hi) {
            let p = seg.point_at(s);
            let z = seg.jump(s);
            for (t, wt) in gauss_on_interval(16, -0.5, 0.5) {
                let x = v3(p.x, p.y, t);
                let (_, jf) = def.tilts.value_jacobian(x);
                let cross = jf.apply(dir3).cross(jf.apply(v3(0.0, 0.0, 1.0)));
                let area = cross.norm();
                let normal = cross * (1.0 / area);
                total += ws
                    * wt
                    * area
                    * crate::density::eval_psi_rho(psi, z, normal, def.rho).unwrap();
            }
        }
        total
    }

    #[test]
    fn doubling_grid_changes_bulk_little() {
        let m = fixture();
        let w = BulkDensity::incomp_power(2.0);
        let psi = SurfaceDensity::quad(fixture_q(), 1.0);
        let part = partition_jump(&m, 1, 0.5).unwrap();
        let def = assemble_recovery(&m, &w, &psi, 0.05, part, &ReduceOpts::default()).unwrap();
        let a = bulk_energy(&def, &w, &PrismGrid::new(m.domain, 16, 4), 1e-6)
            .unwrap()
            .value
            .unwrap_finite();
        let b = bulk_energy(&def, &w, &PrismGrid::new(m.domain, 32, 8), 1e-6)
            .unwrap()
            .value
            .unwrap_finite();
        assert!((a - b).abs() <= 1e-3 * a.abs(), "{a} vs {b}");
    }

    #[test]
    fn sweep_rows_behave() {
        let m = fixture();
        let w = BulkDensity::incomp_power(2.0);
        let psi = SurfaceDensity::quad(fixture_q(), 1.0);
        let cfg = SweepConfig {
            rhos: vec![0.1, 0.05],
            partition_n: 1,
            partition_eps: 0.6,
            grid: PrismGrid::new(m.domain, 24, 6),
            surface_quad: SurfaceQuad::default(),
            det_tol: 1e-6,
            reduce: ReduceOpts::default(),
            qc: QcOpts {
                mesh: 4,
                sweeps: 4,
                ..Default::default()
            },
        };
        let sweep = convergence_sweep(&m, &w, &psi, &cfg).unwrap();
        assert!((sweep.target - 4.5).abs() < 1e-8);
        assert!(sweep.lower_estimate <= sweep.target + 1e-9);
        assert_eq!(sweep.rows.len(), 2);
        for row in &sweep.rows {
            assert!(row.lower_ok);
            assert!(row.breakdown.budget >= 0.0);
        }
        assert_eq!(sweep.monotone, Some(sweep.rows[1].gap <= sweep.rows[0].gap + 1e-6));
    }

    #[test]
    fn single_row_sweep_has_no_verdict() {
        let m = fixture();
        let w = BulkDensity::incomp_power(2.0);
        let psi = SurfaceDensity::quad(Matrix33::IDENTITY, 1.0);
        let cfg = SweepConfig {
            rhos: vec![0.05],
            partition_n: 1,
            partition_eps: 0.42,
            grid: PrismGrid::new(m.domain, 8, 2),
            surface_quad: SurfaceQuad::default(),
            det_tol: 1e-6,
            reduce: ReduceOpts::default(),
            qc: QcOpts {
                mesh: 4,
                sweeps: 2,
                ..Default::default()
            },
        };
        let sweep = convergence_sweep(&m, &w, &psi, &cfg).unwrap();
        assert_eq!(sweep.rows.len(), 1);
        assert!(sweep.monotone.is_none());
    }
}
