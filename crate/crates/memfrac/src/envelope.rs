//! Relaxation machinery for planar gradients: the lamination (Kohn–Strang)
//! iteration approaching the rank-one convex envelope from above, a
//! finite-element upper estimate of the quasiconvex envelope, and
//! piecewise-constant competitor tests against interface ellipticity.

use crate::density::{ExtReal, SurfaceDensity};
use crate::linalg::{v2, v3, Matrix32, Vec2, Vec3};
use crate::opt::pattern_search;
use dashmap::DashMap;
use rayon::prelude::*;

/// Extended-real density of a planar gradient.
pub trait Density32: Sync {
    fn eval(&self, f: &Matrix32) -> ExtReal;
}

impl<F> Density32 for F
where
    F: Fn(&Matrix32) -> ExtReal + Sync,
{
    fn eval(&self, m: &Matrix32) -> ExtReal {
        self(m)
    }
}

impl Density32 for crate::reduce::ReducedBulk {
    fn eval(&self, m: &Matrix32) -> ExtReal {
        crate::reduce::ReducedBulk::eval(self, m)
    }
}

/// Search grids for one lamination step.
#[derive(Clone, Debug)]
pub struct SearchOpts {
    /// Angles of the planar direction a on [0, pi).
    pub angles: usize,
    /// Directions for the amplitude b in R^3.
    pub dirs: Vec<Vec3>,
    /// Magnitudes |b|, scaled by `mag_scale`.
    pub mags: Vec<f64>,
    pub mag_scale: f64,
    /// Number of interior convex weights (k/(n+1), k = 1..=n).
    pub lambdas: usize,
    /// Pattern-search refinement iterations (0 disables).
    pub refine_iters: usize,
}

impl Default for SearchOpts {
    fn default() -> Self {
        SearchOpts {
            angles: 64,
            dirs: axis_directions(),
            mags: vec![0.25, 0.5, 1.0, 2.0, 4.0],
            mag_scale: 1.0,
            lambdas: 7,
            refine_iters: 80,
        }
    }
}

impl SearchOpts {
    /// Small search for deep recursions; monotonicity of the iteration is
    /// structural and holds at any budget.
    pub fn coarse() -> Self {
        SearchOpts {
            angles: 8,
            dirs: vec![
                v3(1.0, 0.0, 0.0),
                v3(0.0, 1.0, 0.0),
                v3(0.0, 0.0, 1.0),
                v3(-1.0, 0.0, 0.0),
                v3(0.0, -1.0, 0.0),
                v3(0.0, 0.0, -1.0),
            ],
            mags: vec![0.5, 1.0, 2.0],
            mag_scale: 1.0,
            lambdas: 3,
            refine_iters: 0,
        }
    }

    /// Minimal search for depth >= 2 recursions, where the cost is the
    /// product of the per-level candidate counts.
    pub fn micro() -> Self {
        SearchOpts {
            angles: 4,
            dirs: vec![v3(1.0, 0.0, 0.0), v3(0.0, 1.0, 0.0), v3(0.0, 0.0, 1.0)],
            mags: vec![0.5, 1.0],
            mag_scale: 1.0,
            lambdas: 1,
            refine_iters: 0,
        }
    }

    /// Nested refinement of the default grids by an integer factor: the
    /// candidate set contains the default one, so the grid-phase value can
    /// only improve.
    pub fn dense(factor: usize) -> Self {
        let base = SearchOpts::default();
        let angles = base.angles * factor;
        let lambdas = (base.lambdas + 1) * factor - 1;
        let mut mags = Vec::new();
        // 2^{k/factor} spans the default powers of two
        for k in -(2 * factor as i64)..=(2 * factor as i64) {
            mags.push(2f64.powf(k as f64 / factor as f64));
        }
        SearchOpts {
            angles,
            dirs: base.dirs,
            mags,
            mag_scale: 1.0,
            lambdas,
            refine_iters: 0,
        }
    }
}

/// The 26 nonzero sign patterns in {-1, 0, 1}^3, normalized.
fn axis_directions() -> Vec<Vec3> {
    let mut dirs = Vec::with_capacity(26);
    for sx in -1..=1 {
        for sy in -1..=1 {
            for sz in -1..=1 {
                if sx == 0 && sy == 0 && sz == 0 {
                    continue;
                }
                let v = v3(sx as f64, sy as f64, sz as f64);
                dirs.push(v * (1.0 / v.norm()));
            }
        }
    }
    dirs
}

/// A lamination split (lambda, a, b) in the barycentric convention
/// (1 - lambda) (F + lambda b x a) + lambda (F - (1 - lambda) b x a) = F.
#[derive(Clone, Copy, Debug)]
pub struct SplitInfo {
    pub lambda: f64,
    pub a: Vec2,
    pub b: Vec3,
    pub value: f64,
}

fn split_value(f: &dyn Density32, m: &Matrix32, lambda: f64, a: Vec2, b: Vec3) -> f64 {
    let rank_one = Matrix32::outer(b, a);
    let plus = *m + rank_one * lambda;
    let minus = *m - rank_one * (1.0 - lambda);
    match (f.eval(&plus), f.eval(&minus)) {
        (ExtReal::Finite(vp), ExtReal::Finite(vm)) => (1.0 - lambda) * vp + lambda * vm,
        _ => f64::INFINITY,
    }
}

/// One lamination step: the infimum over splits of the convex combination,
/// clamped by the unsplit value (b = 0 is admissible, so the step never
/// increases the density).
pub fn kohn_strang_step(
    f: &dyn Density32,
    m: &Matrix32,
    search: &SearchOpts,
) -> (ExtReal, Option<SplitInfo>) {
    let base = f.eval(m);
    let base_v = base.finite().unwrap_or(f64::INFINITY);

    let scan_angle = |ai: usize| -> (usize, f64) {
        let theta = std::f64::consts::PI * ai as f64 / search.angles as f64;
        let a = v2(theta.cos(), theta.sin());
        let mut best = (usize::MAX, f64::INFINITY);
        let mut idx = ai * search.dirs.len() * search.mags.len() * search.lambdas;
        for dir in &search.dirs {
            for &mag in &search.mags {
                let b = *dir * (mag * search.mag_scale);
                for li in 1..=search.lambdas {
                    let lambda = li as f64 / (search.lambdas + 1) as f64;
                    let v = split_value(f, m, lambda, a, b);
                    if v < best.1 {
                        best = (idx, v);
                    }
                    idx += 1;
                }
            }
        }
        (best.0, best.1)
    };
    // parallelism only pays off for the big searches
    let candidates: Vec<(usize, f64)> = if search.angles >= 16 {
        (0..search.angles)
            .collect::<Vec<_>>()
            .par_iter()
            .map(|&ai| scan_angle(ai))
            .collect()
    } else {
        (0..search.angles).map(scan_angle).collect()
    };

    // deterministic winner: smallest value, ties by candidate index
    let mut winner: Option<(usize, f64)> = None;
    for &(idx, v) in &candidates {
        let better = match winner {
            None => v < f64::INFINITY,
            Some((wi, wv)) => v < wv || (v == wv && idx < wi),
        };
        if better {
            winner = Some((idx, v));
        }
    }

    let Some((idx, mut best_v)) = winner else {
        return (base, None);
    };

    // decode the winning grid candidate
    let per_angle = search.dirs.len() * search.mags.len() * search.lambdas;
    let ai = idx / per_angle;
    let rem = idx % per_angle;
    let di = rem / (search.mags.len() * search.lambdas);
    let rem = rem % (search.mags.len() * search.lambdas);
    let mi = rem / search.lambdas;
    let li = rem % search.lambdas + 1;
    let theta0 = std::f64::consts::PI * ai as f64 / search.angles as f64;
    let b0 = search.dirs[di] * (search.mags[mi] * search.mag_scale);
    let lambda0 = li as f64 / (search.lambdas + 1) as f64;

    let mut best_split = SplitInfo {
        lambda: lambda0,
        a: v2(theta0.cos(), theta0.sin()),
        b: b0,
        value: best_v,
    };

    if search.refine_iters > 0 && best_v.is_finite() {
        let obj = |q: &[f64]| {
            let lambda = q[4].clamp(0.01, 0.99);
            split_value(f, m, lambda, v2(q[0].cos(), q[0].sin()), v3(q[1], q[2], q[3]))
        };
        let start = [theta0, b0.x, b0.y, b0.z, lambda0];
        let (q, v) = pattern_search(&start, 0.1, 1e-9, search.refine_iters, obj);
        if v < best_v {
            best_v = v;
            best_split = SplitInfo {
                lambda: q[4].clamp(0.01, 0.99),
                a: v2(q[0].cos(), q[0].sin()),
                b: v3(q[1], q[2], q[3]),
                value: v,
            };
        }
    }

    // an improvement below rounding scale is no improvement: convex
    // densities must report no split
    if best_v < base_v - 1e-13 * (1.0 + base_v.abs()) {
        (ExtReal::Finite(best_v), Some(best_split))
    } else {
        (base, None)
    }
}

type MemoKey = (u32, [i64; 6]);

fn quantize(m: &Matrix32) -> ([i64; 6], Matrix32) {
    const STEP: f64 = 1e-3;
    let mut key = [0i64; 6];
    let mut q = [[0.0; 2]; 3];
    for r in 0..3 {
        for c in 0..2 {
            let k = (m.0[r][c] / STEP).round();
            key[r * 2 + c] = k as i64;
            q[r][c] = k * STEP;
        }
    }
    (key, Matrix32(q))
}

/// Iterated lamination estimate of the rank-one convex envelope.
///
/// Depth 0 is the density itself (evaluated at the exact input); deeper
/// levels quantize their evaluation points to a 1e-3 lattice and memoize.
/// The value sequence is nonincreasing in the depth by construction.
pub struct RankOneEnvelope<'a> {
    pub density: &'a dyn Density32,
    pub search: SearchOpts,
    memo: DashMap<MemoKey, f64>,
}

impl<'a> RankOneEnvelope<'a> {
    pub fn new(density: &'a dyn Density32, search: SearchOpts) -> Self {
        RankOneEnvelope {
            density,
            search,
            memo: DashMap::new(),
        }
    }

    pub fn eval(&self, m: &Matrix32, depth: usize) -> ExtReal {
        if depth == 0 {
            return self.density.eval(m);
        }
        let inner = QuantizedLevel {
            env: self,
            depth: depth - 1,
        };
        let step = kohn_strang_step(&inner, m, &self.search).0;
        step.min(self.density.eval(m))
    }
}

/// Density view of one recursion level, with lattice quantization.
struct QuantizedLevel<'b, 'a> {
    env: &'b RankOneEnvelope<'a>,
    depth: usize,
}

impl Density32 for QuantizedLevel<'_, '_> {
    fn eval(&self, m: &Matrix32) -> ExtReal {
        let (key, q) = quantize(m);
        let full_key = (self.depth as u32, key);
        if let Some(v) = self.env.memo.get(&full_key) {
            return if v.is_finite() {
                ExtReal::Finite(*v)
            } else {
                ExtReal::Infinite
            };
        }
        let clamped = if self.depth == 0 {
            self.env.density.eval(&q)
        } else {
            let inner = QuantizedLevel {
                env: self.env,
                depth: self.depth - 1,
            };
            let stepped = kohn_strang_step(&inner, &q, &self.env.search).0;
            stepped.min(self.env.density.eval(&q))
        };
        let raw = clamped.finite().unwrap_or(f64::INFINITY);
        self.env.memo.insert(full_key, raw);
        clamped
    }
}

/// Convenience wrapper: lamination estimate of depth `k` at `m`.
pub fn rank_one_envelope(
    f: &dyn Density32,
    m: &Matrix32,
    depth: usize,
    search: &SearchOpts,
) -> ExtReal {
    RankOneEnvelope::new(f, search.clone()).eval(m, depth)
}

// ---------------------------------------------------------------------------
// finite-element quasiconvexification estimate
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
pub struct QcOpts {
    /// Cells per side of the unit-square mesh.
    pub mesh: usize,
    /// Coordinate-descent sweeps.
    pub sweeps: usize,
    /// Per-dof line-search trial step (in units of the mesh width).
    pub step: f64,
    /// Extra seed fields (nodal values, row-major (mesh+1)^2; boundary
    /// entries are forced to zero).
    pub seeds: Vec<Vec<Vec3>>,
}

impl Default for QcOpts {
    fn default() -> Self {
        QcOpts {
            mesh: 8,
            sweeps: 30,
            step: 0.25,
            seeds: Vec::new(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct QcEstimate {
    pub value: f64,
    pub mesh: usize,
    /// Best energy after each descent sweep; nonincreasing.
    pub history: Vec<f64>,
    pub stalled: bool,
    /// Nodal values of the best test field found.
    pub field: Vec<Vec3>,
}

struct P1Mesh {
    n: usize,
    /// triangle -> (node indices, shape-function gradients)
    tris: Vec<([usize; 3], [[f64; 2]; 3])>,
    node_tris: Vec<Vec<usize>>,
}

impl P1Mesh {
    fn new(n: usize) -> Self {
        let nn = n + 1;
        let h = 1.0 / n as f64;
        let mut tris = Vec::with_capacity(2 * n * n);
        let mut node_tris = vec![Vec::new(); nn * nn];
        let id = |i: usize, j: usize| j * nn + i;
        for j in 0..n {
            for i in 0..n {
                // cell split along the main diagonal
                for tri in [
                    [id(i, j), id(i + 1, j), id(i + 1, j + 1)],
                    [id(i, j), id(i + 1, j + 1), id(i, j + 1)],
                ] {
                    let t = tris.len();
                    let coords =
                        |nid: usize| v2((nid % nn) as f64 * h, (nid / nn) as f64 * h);
                    let p0 = coords(tri[0]);
                    let d1 = coords(tri[1]) - p0;
                    let d2 = coords(tri[2]) - p0;
                    let det = d1.x * d2.y - d1.y * d2.x;
                    let g1 = v2(d2.y / det, -d2.x / det);
                    let g2 = v2(-d1.y / det, d1.x / det);
                    let g0 = v2(-g1.x - g2.x, -g1.y - g2.y);
                    tris.push((tri, [[g0.x, g0.y], [g1.x, g1.y], [g2.x, g2.y]]));
                    for &nid in &tri {
                        node_tris[nid].push(t);
                    }
                }
            }
        }
        P1Mesh { n, tris, node_tris }
    }

    fn is_boundary(&self, nid: usize) -> bool {
        let nn = self.n + 1;
        let (i, j) = (nid % nn, nid / nn);
        i == 0 || j == 0 || i == self.n || j == self.n
    }

    fn tri_gradient(&self, t: usize, values: &[Vec3]) -> Matrix32 {
        let (nodes, g) = &self.tris[t];
        let mut m = [[0.0; 2]; 3];
        for (k, &nid) in nodes.iter().enumerate() {
            let v = values[nid];
            let comp = [v.x, v.y, v.z];
            for r in 0..3 {
                for c in 0..2 {
                    m[r][c] += comp[r] * g[k][c];
                }
            }
        }
        Matrix32(m)
    }
}

/// Upper estimate of the quasiconvex envelope at `m`: minimize the mean of
/// f(m + grad phi) over piecewise-affine fields phi vanishing on the
/// boundary of the unit square. Coordinate descent on nodal values from the
/// zero field and any provided seeds; the zero field keeps the estimate at
/// or below f(m).
pub fn quasiconvex_upper_estimate(f: &dyn Density32, m: &Matrix32, opts: &QcOpts) -> QcEstimate {
    let mesh = P1Mesh::new(opts.mesh);
    let area = 0.5 / (opts.mesh * opts.mesh) as f64;
    let nn = (opts.mesh + 1) * (opts.mesh + 1);

    let zero = vec![v3(0.0, 0.0, 0.0); nn];
    let mut starts = vec![zero];
    for s in &opts.seeds {
        assert_eq!(s.len(), nn, "seed field has wrong node count");
        let mut s = s.clone();
        for (nid, v) in s.iter_mut().enumerate() {
            if mesh.is_boundary(nid) {
                *v = v3(0.0, 0.0, 0.0);
            }
        }
        starts.push(s);
    }

    let tri_energy = |grad: &Matrix32| -> f64 {
        match f.eval(&(*m + *grad)) {
            ExtReal::Finite(v) => v,
            ExtReal::Infinite => f64::INFINITY,
        }
    };

    let mut best_value = f64::INFINITY;
    let mut history = Vec::new();
    let mut stalled = false;
    let mut best_field = vec![v3(0.0, 0.0, 0.0); nn];

    for mut values in starts {
        let mut tri_e: Vec<f64> = (0..mesh.tris.len())
            .map(|t| tri_energy(&mesh.tri_gradient(t, &values)))
            .collect();
        let mut total: f64 = tri_e.iter().sum::<f64>() * area;
        let mut local_hist = vec![total];
        for _sweep in 0..opts.sweeps {
            let before = total;
            for nid in 0..nn {
                if mesh.is_boundary(nid) {
                    continue;
                }
                let incident = mesh.node_tris[nid].clone();
                for comp in 0..3 {
                    let local = |values: &[Vec3]| -> f64 {
                        incident
                            .iter()
                            .map(|&t| tri_energy(&mesh.tri_gradient(t, values)))
                            .sum()
                    };
                    let base = local(&values);
                    let get = |v: &Vec3| match comp {
                        0 => v.x,
                        1 => v.y,
                        _ => v.z,
                    };
                    let set = |v: &mut Vec3, x: f64| match comp {
                        0 => v.x = x,
                        1 => v.y = x,
                        _ => v.z = x,
                    };
                    let x0 = get(&values[nid]);
                    let mut bx = x0;
                    let mut bv = base;
                    let mut step = opts.step / (opts.mesh as f64);
                    for _ in 0..18 {
                        let mut improved = false;
                        for s in [step, -step] {
                            set(&mut values[nid], bx + s);
                            let v = local(&values);
                            if v < bv {
                                bv = v;
                                bx += s;
                                improved = true;
                            }
                        }
                        if !improved {
                            step *= 0.5;
                            if step < 1e-10 {
                                break;
                            }
                        }
                    }
                    set(&mut values[nid], bx);
                    if bv < base {
                        for &t in &incident {
                            tri_e[t] = tri_energy(&mesh.tri_gradient(t, &values));
                        }
                    }
                }
            }
            // recompute to control drift of the incremental sum
            total = tri_e.iter().sum::<f64>() * area;
            local_hist.push(total);
            if (before - total).abs() <= 1e-12 * (1.0 + total.abs()) {
                break;
            }
        }
        if local_hist.len() > 1 && *local_hist.last().unwrap() >= local_hist[0] - 1e-12 {
            stalled = true;
        }
        if total < best_value {
            best_value = total;
            history = local_hist;
            best_field = values;
        }
    }

    QcEstimate {
        value: best_value,
        mesh: opts.mesh,
        history,
        stalled,
        field: best_field,
    }
}

/// Nodal seed for a vertical laminate: phi(x) = b s(x1) t(x2) with s a
/// sawtooth of `periods` periods and slopes +-`slope`, and t a boundary
/// taper of `taper` cells.
pub fn laminate_seed(mesh: usize, periods: usize, b: Vec3, slope: f64, taper: usize) -> Vec<Vec3> {
    let nn = mesh + 1;
    let mut out = vec![v3(0.0, 0.0, 0.0); nn * nn];
    let p = 1.0 / periods as f64;
    let saw = |x: f64| {
        let u = (x / p).fract();
        let tri = if u < 0.5 { u } else { 1.0 - u };
        2.0 * slope * p * tri
    };
    let tw = (taper as f64 / mesh as f64).max(1e-12);
    for j in 0..nn {
        let y = j as f64 / mesh as f64;
        let t = (y / tw).min((1.0 - y) / tw).min(1.0).max(0.0);
        for i in 0..nn {
            let x = i as f64 / mesh as f64;
            out[j * nn + i] = b * (saw(x) * t);
        }
    }
    out
}

// ---------------------------------------------------------------------------
// interface competitor tests
// ---------------------------------------------------------------------------

/// A piecewise-constant competitor on the unit square oriented by a planar
/// normal: the flat interface is replaced by the polyline through the given
/// interior points (coordinates in the (tangent, normal) frame: .x along
/// the interface, .y the offset).
#[derive(Clone, Debug)]
pub struct Competitor {
    /// Interior chain vertices between the fixed endpoints (-1/2, 0) and
    /// (1/2, 0) of the flat trace.
    pub chain: Vec<Vec2>,
    pub label: String,
}

#[derive(Clone, Debug)]
pub struct CompetitorResult {
    pub label: String,
    pub integral: f64,
    pub ratio: f64,
}

#[derive(Clone, Debug)]
pub struct BvReport {
    /// Reference energy of the flat interface.
    pub base: f64,
    pub results: Vec<CompetitorResult>,
    pub min_ratio: f64,
    /// Ratios below 1 - tol: each certifies the density is not interface
    /// elliptic at this datum and improves the envelope upper bound there.
    pub violations: usize,
}

/// Evaluate the jump integral of each competitor against the flat-interface
/// energy psi(z, nu).
pub fn bv_ellipticity_test(
    psi: &SurfaceDensity,
    z: Vec3,
    nu: Vec2,
    competitors: &[Competitor],
    tol: f64,
) -> BvReport {
    let tangent = nu.perp();
    let base = psi.eval(z, nu.lift()).expect("nonzero jump");
    let mut results = Vec::with_capacity(competitors.len());
    let mut min_ratio = f64::INFINITY;
    let mut violations = 0;
    for comp in competitors {
        let mut pts = Vec::with_capacity(comp.chain.len() + 2);
        pts.push(v2(-0.5, 0.0));
        pts.extend(comp.chain.iter().copied());
        pts.push(v2(0.5, 0.0));
        let mut integral = 0.0;
        for w in pts.windows(2) {
            let d = w[1] - w[0];
            let len = d.norm();
            if len < 1e-15 {
                continue;
            }
            let dir_world = tangent * (d.x / len) + nu * (d.y / len);
            let n_world = dir_world.perp();
            let n_world = if n_world.dot(nu) >= 0.0 { n_world } else { -n_world };
            integral += len * psi.eval(z, n_world.lift()).expect("nonzero jump");
        }
        let ratio = integral / base;
        if ratio < min_ratio {
            min_ratio = ratio;
        }
        if ratio < 1.0 - tol {
            violations += 1;
        }
        results.push(CompetitorResult {
            label: comp.label.clone(),
            integral,
            ratio,
        });
    }
    BvReport {
        base,
        results,
        min_ratio,
        violations,
    }
}

/// Two-segment wedge family: apex at (t, h) over a parameter grid, plus the
/// flat (identity) competitor.
pub fn wedge_family(nt: usize, nh: usize, hmax: f64) -> Vec<Competitor> {
    let mut out = Vec::with_capacity(nt * nh + 1);
    out.push(Competitor {
        chain: vec![],
        label: "flat".into(),
    });
    for i in 0..nt {
        let t = -0.45 + 0.9 * i as f64 / (nt.max(2) - 1) as f64;
        for j in 1..=nh {
            let h = hmax * j as f64 / nh as f64;
            out.push(Competitor {
                chain: vec![v2(t, h)],
                label: format!("wedge({t:.2},{h:.2})"),
            });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::{fixture_q, BulkDensity};
    use crate::reduce::{reduced_surface_density, ReducedBulk};
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn convex_density_admits_no_split() {
        let f = |m: &Matrix32| ExtReal::Finite(m.norm_sq());
        let m = Matrix32([[0.3, -0.2], [0.1, 0.8], [0.5, 0.0]]);
        let (v, split) = kohn_strang_step(&f, &m, &SearchOpts::default());
        assert_eq!(v, ExtReal::Finite(m.norm_sq()));
        assert!(split.is_none());
    }

    /// Two-well density with zero-valued wells at 0 and b x a.
    fn two_well(a: Vec2, b: Vec3) -> impl Fn(&Matrix32) -> ExtReal + Sync {
        let well = Matrix32::outer(b, a);
        move |m: &Matrix32| {
            let d0 = m.norm_sq();
            let d1 = (*m - well).norm_sq();
            ExtReal::Finite(d0.min(d1))
        }
    }

    #[test]
    fn two_well_midpoint_laminates_to_zero() {
        let a = v2(1.0, 0.0);
        let b = v3(0.0, 0.0, 1.0);
        let f = two_well(a, b);
        let mid = Matrix32::outer(b, a) * 0.5;
        let (v, split) = kohn_strang_step(&f, &mid, &SearchOpts::default());
        let val = v.unwrap_finite();
        assert!(val <= 1e-8, "laminate value {val}");
        let s = split.unwrap();
        assert!((s.lambda - 0.5).abs() < 1e-6);
    }

    #[test]
    fn depth_zero_is_identity() {
        let w = ReducedBulk::new(BulkDensity::orient_power(2.0));
        let m = Matrix32([[1.0, 0.0], [0.0, 1.0], [0.0, 0.0]]);
        let direct = w.eval(&m);
        let env = rank_one_envelope(&w, &m, 0, &SearchOpts::coarse());
        assert_eq!(direct, env);
    }

    #[test]
    fn iteration_is_monotone_in_depth() {
        let mut rng = ChaCha8Rng::seed_from_u64(71);
        let w = ReducedBulk::new(BulkDensity::orient_power(2.0));
        let env = RankOneEnvelope::new(&w, SearchOpts::micro());
        for _ in 0..50 {
            let m = Matrix32([
                [rng.random_range(-1.5..1.5), rng.random_range(-1.5..1.5)],
                [rng.random_range(-1.5..1.5), rng.random_range(-1.5..1.5)],
                [rng.random_range(-1.5..1.5), rng.random_range(-1.5..1.5)],
            ]);
            let mut prev = f64::INFINITY;
            for depth in 0..=3 {
                let v = env.eval(&m, depth).finite().unwrap_or(f64::INFINITY);
                assert!(v <= prev + 1e-12, "depth {depth}: {v} > {prev}");
                prev = v;
            }
        }
    }

    #[test]
    fn convex_density_is_fixed_point_at_depth_two() {
        let f = |m: &Matrix32| ExtReal::Finite(m.norm_sq());
        let m = Matrix32([[0.4, 0.1], [-0.3, 0.9], [0.2, -0.5]]);
        let v = rank_one_envelope(&f, &m, 2, &SearchOpts::micro());
        assert!((v.unwrap_finite() - m.norm_sq()).abs() <= 1e-8);
    }

    #[test]
    fn step_improves_reduced_orientation_density() {
        // lamination can only go down from W0, and a 10x denser nested grid
        // (no refinement on either side) can only go further down
        let w = ReducedBulk::new(BulkDensity::orient_power(2.0));
        let m = Matrix32([[1.0, 0.0], [0.0, 0.25], [0.0, 0.0]]);
        let w0 = w.eval(&m).unwrap_finite();
        let coarse_opts = SearchOpts {
            refine_iters: 0,
            ..Default::default()
        };
        let (vc, _) = kohn_strang_step(&w, &m, &coarse_opts);
        let (vd, _) = kohn_strang_step(&w, &m, &SearchOpts::dense(10));
        let vc = vc.unwrap_finite();
        let vd = vd.unwrap_finite();
        assert!(vc <= w0 + 1e-12);
        assert!(vd <= vc + 1e-12, "dense {vd} vs coarse {vc}");
    }

    #[test]
    fn qc_estimate_of_convex_density_is_exact() {
        let f = |m: &Matrix32| ExtReal::Finite(m.norm_sq());
        let m = Matrix32([[0.5, 0.0], [0.0, -0.4], [0.3, 0.2]]);
        let est = quasiconvex_upper_estimate(&f, &m, &QcOpts::default());
        assert!((est.value - m.norm_sq()).abs() < 1e-6);
        assert!(est.value <= m.norm_sq() + 1e-9);
        assert!(est.value >= 0.0);
    }

    #[test]
    fn qc_estimate_history_is_nonincreasing() {
        let a = v2(1.0, 0.0);
        let b = v3(0.0, 0.0, 1.0);
        let f = two_well(a, b);
        let mid = Matrix32::outer(b, a) * 0.5;
        let est = quasiconvex_upper_estimate(
            &f,
            &mid,
            &QcOpts {
                mesh: 16,
                sweeps: 10,
                ..Default::default()
            },
        );
        for w in est.history.windows(2) {
            assert!(w[1] <= w[0] + 1e-12);
        }
        assert!(est.value >= 0.0);
    }

    #[test]
    fn qc_estimate_reaches_laminate_on_adapted_mesh() {
        // the truncated laminate is an admissible seed, so the estimate
        // lands within 5% of f(mid) above the depth-one lamination value
        // (which is 0 here)
        let a = v2(1.0, 0.0);
        let b = v3(0.0, 0.0, 1.0);
        let f = two_well(a, b);
        let mid = Matrix32::outer(b, a) * 0.5;
        let mesh = 128;
        let seed = laminate_seed(mesh, 64, b, 0.5, 1);
        let est = quasiconvex_upper_estimate(
            &f,
            &mid,
            &QcOpts {
                mesh,
                sweeps: 4,
                step: 0.5,
                seeds: vec![seed],
            },
        );
        let r1 = rank_one_envelope(&f, &mid, 1, &SearchOpts::default()).unwrap_finite();
        let unsplit = f(&mid).unwrap_finite();
        assert!(
            est.value <= r1 + 0.05 * unsplit,
            "qc = {}, laminate = {r1}, f(mid) = {unsplit}",
            est.value
        );
    }

    #[test]
    fn qc_of_laminated_density_is_consistent() {
        // the estimator applied to a lamination output stays at or below
        // the estimate on the density itself (lamination is pointwise below
        // and the same descent paths are available)
        let mut rng = ChaCha8Rng::seed_from_u64(72);
        let w = ReducedBulk::new(BulkDensity::orient_power(2.0));
        let env = RankOneEnvelope::new(&w, SearchOpts::micro());
        let opts = QcOpts {
            mesh: 4,
            sweeps: 4,
            ..Default::default()
        };
        for _ in 0..20 {
            let m = Matrix32([
                [rng.random_range(-1.2..1.2), rng.random_range(-1.2..1.2)],
                [rng.random_range(-1.2..1.2), rng.random_range(-1.2..1.2)],
                [rng.random_range(-1.2..1.2), rng.random_range(-1.2..1.2)],
            ]);
            let on_density = quasiconvex_upper_estimate(&w, &m, &opts);
            // both relaxation estimates stay below the density itself
            if let ExtReal::Finite(w0) = w.eval(&m) {
                assert!(on_density.value <= w0 + 1e-9);
                let r1 = env.eval(&m, 1).finite().unwrap_or(f64::INFINITY);
                assert!(r1 <= w0 + 1e-9);
            }
            let laminated = |g: &Matrix32| env.eval(g, 1);
            // seed with the argmin field of the density run: lamination is
            // pointwise below, so the seeded estimate cannot exceed it
            let seeded = QcOpts {
                seeds: vec![on_density.field.clone()],
                ..opts.clone()
            };
            let on_laminated = quasiconvex_upper_estimate(&laminated, &m, &seeded);
            assert!(
                on_laminated.value <= on_density.value + 1e-9,
                "{} vs {}",
                on_laminated.value,
                on_density.value
            );
        }
    }

    #[test]
    fn griffith_wedges_never_beat_the_flat_cut() {
        let psi = SurfaceDensity::griffith();
        let z = v3(0.0, 0.0, 1.0);
        let comps = wedge_family(10, 10, 0.45);
        let report = bv_ellipticity_test(&psi, z, v2(1.0, 0.0), &comps, 1e-9);
        assert!(report.min_ratio >= 1.0 - 1e-12, "{}", report.min_ratio);
        assert_eq!(report.violations, 0);
        // the identity competitor has ratio exactly one
        assert!((report.results[0].ratio - 1.0).abs() < 1e-15);
    }

    #[test]
    fn reduced_quad_density_wedge_scan_reports_ratio() {
        let psi = SurfaceDensity::quad(fixture_q(), 1.0);
        let psi0 = reduced_surface_density(&psi);
        let z = v3(0.6, 0.0, 0.8);
        let comps = wedge_family(32, 32, 0.45);
        assert!(comps.len() > 1000);
        let report = bv_ellipticity_test(&psi0, z, v2(1.0, 0.0), &comps, 1e-9);
        // no ground truth asserted; the scan must produce a finite positive
        // minimal ratio and the flat competitor stays admissible
        assert!(report.min_ratio.is_finite() && report.min_ratio > 0.0);
        assert!(report.min_ratio <= 1.0 + 1e-12);
    }
}
