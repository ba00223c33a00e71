//! Sampled validators for the structural hypotheses of bulk and surface
//! densities.
//!
//! The hypotheses are universally quantified, so no finite procedure decides
//! them; each validator draws a documented budget of seeded samples and
//! reports per-hypothesis margins. Failures are report entries, not faults.

use crate::density::{BulkDensity, ConstraintMode, ExtReal, SurfaceDensity};
use crate::linalg::{det3, v3, Matrix33, Vec3};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// Outcome of one hypothesis check.
#[derive(Clone, Debug)]
pub struct HypothesisReport {
    pub code: &'static str,
    pub description: &'static str,
    pub passed: bool,
    pub checked: usize,
    /// Smallest slack observed; negative means a violation.
    pub worst_margin: f64,
    pub witness: Option<String>,
}

#[derive(Clone, Debug)]
pub struct ValidationReport {
    pub density: String,
    pub seed: u64,
    pub samples: usize,
    pub hypotheses: Vec<HypothesisReport>,
}

impl ValidationReport {
    pub fn all_passed(&self) -> bool {
        self.hypotheses.iter().all(|h| h.passed)
    }
    pub fn get(&self, code: &str) -> Option<&HypothesisReport> {
        self.hypotheses.iter().find(|h| h.code == code)
    }
}

impl std::fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(
            f,
            "validation of {} ({} samples, seed {})",
            self.density, self.samples, self.seed
        )?;
        for h in &self.hypotheses {
            writeln!(
                f,
                "  {:4} {:4} margin {:+.3e} ({} checks) {} {}",
                h.code,
                if h.passed { "pass" } else { "FAIL" },
                h.worst_margin,
                h.checked,
                h.description,
                h.witness.as_deref().unwrap_or("")
            )?;
        }
        Ok(())
    }
}

/// Accumulates the worst margin and its witness across samples.
struct Margin {
    worst: f64,
    checked: usize,
    witness: Option<String>,
}

impl Margin {
    fn new() -> Self {
        Margin {
            worst: f64::INFINITY,
            checked: 0,
            witness: None,
        }
    }
    fn note(&mut self, margin: f64, witness: impl FnOnce() -> String) {
        self.checked += 1;
        if margin < self.worst {
            self.worst = margin;
            if margin < 0.0 {
                self.witness = Some(witness());
            }
        }
    }
    fn merge(mut self, other: Margin) -> Margin {
        self.checked += other.checked;
        if other.worst < self.worst {
            self.worst = other.worst;
            self.witness = other.witness;
        }
        self
    }
    fn report(self, code: &'static str, description: &'static str) -> HypothesisReport {
        HypothesisReport {
            code,
            description,
            passed: self.worst >= 0.0 && self.checked > 0,
            checked: self.checked,
            worst_margin: if self.checked == 0 { f64::NAN } else { self.worst },
            witness: self.witness,
        }
    }
}

fn rand_matrix(rng: &mut ChaCha8Rng, scale: f64) -> Matrix33 {
    let mut m = [[0.0; 3]; 3];
    for row in &mut m {
        for a in row.iter_mut() {
            *a = rng.random_range(-scale..scale);
        }
    }
    Matrix33(m)
}

/// Random matrix on SL(3) up to floating-point rounding.
fn rand_sl3(rng: &mut ChaCha8Rng) -> Matrix33 {
    loop {
        let mut m = rand_matrix(rng, 1.5);
        let d = det3(&m);
        if d.abs() < 1e-3 {
            continue;
        }
        if d < 0.0 {
            for row in &mut m.0 {
                row[0] = -row[0];
            }
        }
        let s = det3(&m).powf(-1.0 / 3.0);
        return m * s;
    }
}

fn rand_unit3(rng: &mut ChaCha8Rng) -> Vec3 {
    loop {
        let v = v3(
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        );
        let n = v.norm();
        if n > 1e-3 && n <= 1.0 {
            return v * (1.0 / n);
        }
    }
}

/// Jump amplitude with log-uniform magnitude in [1e-6, 10]; small values
/// probe activation-threshold behavior near z = 0.
fn rand_jump(rng: &mut ChaCha8Rng) -> Vec3 {
    let mag = 10f64.powf(rng.random_range(-6.0..1.0));
    rand_unit3(rng) * mag
}

/// Sampled check of the bulk-density hypotheses appropriate to the density's
/// constraint mode.
pub fn validate_bulk(w: &BulkDensity, samples: usize, seed: u64) -> ValidationReport {
    assert!(samples >= 1);
    let chunks: Vec<(u64, usize)> = (0..16u64).map(|c| (c, samples / 16 + 1)).collect();

    let run = |check: &(dyn Fn(&mut ChaCha8Rng, &mut Margin) + Sync)| -> Margin {
        chunks
            .par_iter()
            .map(|&(c, n)| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (c.wrapping_mul(0x9e37_79b9)));
                let mut m = Margin::new();
                for _ in 0..n {
                    check(&mut rng, &mut m);
                }
                m
            })
            .reduce(Margin::new, Margin::merge)
    };

    let p = w.p;
    let c = w.coercivity;
    let mut hyps = Vec::new();

    match w.mode {
        ConstraintMode::OrientationPreserving | ConstraintMode::Unconstrained => {
            // continuity, probed by shrinking perturbation pairs
            hyps.push(
                run(&|rng, m| {
                    let f = rand_matrix(rng, 1.5);
                    if det3(&f) < 0.2 {
                        return;
                    }
                    let g = rand_matrix(rng, 1.0);
                    let h = 1e-5;
                    let base = w.eval(&f);
                    let d1 = w.eval(&(f + g * h));
                    let d2 = w.eval(&(f + g * (0.1 * h)));
                    if let (ExtReal::Finite(v0), ExtReal::Finite(v1), ExtReal::Finite(v2)) =
                        (base, d1, d2)
                    {
                        let big = (v1 - v0).abs();
                        let small = (v2 - v0).abs();
                        m.note(0.3 * big + 1e-9 * (1.0 + v0.abs()) - small, || {
                            format!("jump {big:.3e} persists at shrunken step near {:?}", f.0)
                        });
                    }
                })
                .report("A1", "continuity under shrinking perturbations"),
            );
            // sign of the determinant decides finiteness
            hyps.push(
                run(&|rng, m| {
                    let f = rand_matrix(rng, 1.5);
                    let d = det3(&f);
                    if d.abs() < 1e-8 {
                        return;
                    }
                    let val = w.eval(&f);
                    let ok = if d > 0.0 { val.is_finite() } else { !val.is_finite() };
                    m.note(if ok { 1.0 } else { -1.0 }, || {
                        format!("det = {d:.3e} but value = {val}")
                    });
                })
                .report("A2", "finite iff det F > 0"),
            );
            // p-coercivity with the declared C1
            hyps.push(
                run(&|rng, m| {
                    let f = rand_matrix(rng, 2.0);
                    if let ExtReal::Finite(v) = w.eval(&f) {
                        let bound = c * f.norm().powf(p) - 1.0 / c;
                        m.note(v - bound, || format!("W = {v:.6} < {bound:.6}"));
                    }
                })
                .report("A3", "coercivity W >= C1 |F|^p - 1/C1"),
            );
            // conditional growth with the declared witness c_delta
            hyps.push(
                run(&|rng, m| {
                    for delta in [0.1, 0.5, 1.0] {
                        let f = rand_matrix(rng, 2.0);
                        if det3(&f) < delta {
                            continue;
                        }
                        if let ExtReal::Finite(v) = w.eval(&f) {
                            let cd = w.growth_witness(delta);
                            m.note(cd * (1.0 + f.norm().powf(p)) - v, || {
                                format!("delta = {delta}: W = {v:.6} above c_delta bound")
                            });
                        }
                    }
                })
                .report("A4", "growth W <= c_delta (1 + |F|^p) on det >= delta"),
            );
        }
        ConstraintMode::Incompressible => {
            hyps.push(
                run(&|rng, m| {
                    let f = rand_sl3(rng);
                    let g = rand_matrix(rng, 1.0);
                    let h = 1e-5;
                    // renormalized perturbations stay on the constraint set
                    let perturb = |t: f64| {
                        let q = f + g * t;
                        q * det3(&q).abs().powf(-1.0 / 3.0)
                    };
                    let base = w.eval_tol(&f, 1e-10);
                    let d1 = w.eval_tol(&perturb(h), 1e-10);
                    let d2 = w.eval_tol(&perturb(0.1 * h), 1e-10);
                    if let (ExtReal::Finite(v0), ExtReal::Finite(v1), ExtReal::Finite(v2)) =
                        (base, d1, d2)
                    {
                        let big = (v1 - v0).abs();
                        let small = (v2 - v0).abs();
                        m.note(0.3 * big + 1e-9 * (1.0 + v0.abs()) - small, || {
                            format!("jump {big:.3e} persists at shrunken step")
                        });
                    }
                })
                .report("At1", "continuity on SL(3)"),
            );
            hyps.push(
                run(&|rng, m| {
                    let f = rand_sl3(rng);
                    match w.eval_tol(&f, 1e-10) {
                        ExtReal::Finite(v) => {
                            let np = f.norm().powf(p);
                            let lo = np / c - c;
                            let hi = c * np + c;
                            m.note((v - lo).min(hi - v), || {
                                format!("W = {v:.6} outside [{lo:.6}, {hi:.6}]")
                            });
                        }
                        ExtReal::Infinite => {
                            m.note(-1.0, || "infinite on an SL(3) sample".into());
                        }
                    }
                    // off-constraint matrices must be infinite
                    let off = rand_matrix(rng, 1.5);
                    if (det3(&off) - 1.0).abs() > 1e-6 && w.eval(&off).is_finite() {
                        m.note(-1.0, || format!("finite at det = {}", det3(&off)));
                    }
                })
                .report("At2", "two-sided p-growth on SL(3), infinite elsewhere"),
            );
        }
    }

    ValidationReport {
        density: w.name.clone(),
        seed,
        samples,
        hypotheses: hyps,
    }
}

/// Sampled check of the surface-density hypotheses, including the positive
/// 1-homogeneous extension.
///
/// `planar_normals` restricts the normal sampler to the plane (used when
/// validating reduced surface densities, which are defined on planar
/// normals).
pub fn validate_surface(
    psi: &SurfaceDensity,
    samples: usize,
    seed: u64,
    planar_normals: bool,
) -> ValidationReport {
    assert!(samples >= 1);
    let chunks: Vec<(u64, usize)> = (0..16u64).map(|c| (c, samples / 16 + 1)).collect();
    let normal = move |rng: &mut ChaCha8Rng| -> Vec3 {
        let mut n = rand_unit3(rng);
        if planar_normals {
            n.z = 0.0;
            let l = n.norm();
            if l < 1e-6 {
                return v3(1.0, 0.0, 0.0);
            }
            n = n * (1.0 / l);
        }
        n
    };

    let run = |check: &(dyn Fn(&mut ChaCha8Rng, &mut Margin) + Sync)| -> Margin {
        chunks
            .par_iter()
            .map(|&(c, n)| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (c.wrapping_mul(0x85eb_ca6b)));
                let mut m = Margin::new();
                for _ in 0..n {
                    check(&mut rng, &mut m);
                }
                m
            })
            .reduce(Margin::new, Margin::merge)
    };

    let mut hyps = Vec::new();

    // (B1) relative continuity in the amplitude with the declared modulus
    hyps.push(
        run(&|rng, m| {
            let z1 = rand_jump(rng);
            let d = 10f64.powf(rng.random_range(-4.0..0.3));
            let z2 = z1 + rand_unit3(rng) * d;
            if z2.norm() < 1e-9 {
                return;
            }
            let nu = normal(rng);
            let p1 = psi.eval(z1, nu).unwrap();
            let p2 = psi.eval(z2, nu).unwrap();
            let gap = (z1 - z2).norm();
            m.note(
                psi.sigma(gap) * (p1 + p2) + 1e-12 * (1.0 + p1 + p2) - (p1 - p2).abs(),
                || format!("|z1-z2| = {gap:.3e}: |psi1-psi2| = {:.3e}", (p1 - p2).abs()),
            );
        })
        .report("B1", "amplitude modulus |psi1 - psi2| <= sigma (psi1 + psi2)"),
    );

    // (B2) both monotonicity clauses, independently
    hyps.push(
        run(&|rng, m| {
            let z2 = rand_jump(rng);
            let nu = normal(rng);
            let z1 = rand_unit3(rng) * (z2.norm() * rng.random_range(0.0001..1.0));
            if z1.norm() == 0.0 {
                return;
            }
            let p1 = psi.eval(z1, nu).unwrap();
            let p2 = psi.eval(z2, nu).unwrap();
            m.note(psi.c2 * p2 + 1e-12 * (1.0 + p2) - p1, || {
                format!("psi({:.2e}) = {p1:.4} > C2 psi({:.2e}) = {:.4}", z1.norm(), z2.norm(), psi.c2 * p2)
            });
        })
        .report("B2a", "psi(z1) <= C2 psi(z2) when |z1| <= |z2|"),
    );
    hyps.push(
        run(&|rng, m| {
            let z2 = rand_jump(rng);
            let nu = normal(rng);
            let z1 = rand_unit3(rng) * (z2.norm() / psi.c2 * rng.random_range(0.0001..1.0));
            if z1.norm() == 0.0 {
                return;
            }
            let p1 = psi.eval(z1, nu).unwrap();
            let p2 = psi.eval(z2, nu).unwrap();
            m.note(p2 + 1e-12 * (1.0 + p2) - p1, || {
                format!("psi({:.2e}) = {p1:.4} > psi({:.2e}) = {p2:.4}", z1.norm(), z2.norm())
            });
        })
        .report("B2b", "psi(z1) <= psi(z2) when C2 |z1| <= |z2|"),
    );

    // (B3) coupled growth against the declared phi
    hyps.push(
        run(&|rng, m| {
            let z = rand_jump(rng);
            let nu = normal(rng);
            let p = psi.eval(z, nu).unwrap();
            let phi = psi.phi(z);
            let mut worst = phi - 1.0;
            worst = worst.min(1.0 + z.norm() - phi);
            worst = worst.min(p - psi.c3 * phi);
            worst = worst.min(psi.c4 * phi - p);
            m.note(worst + 1e-12 * (1.0 + p), || {
                format!(
                    "|z| = {:.3e}: psi = {p:.4e} vs [C3 phi, C4 phi] = [{:.4e}, {:.4e}]",
                    z.norm(),
                    psi.c3 * phi,
                    psi.c4 * phi
                )
            });
        })
        .report("B3", "1 <= phi <= 1 + |z| and C3 phi <= psi <= C4 phi"),
    );

    // (B4) joint sign symmetry
    hyps.push(
        run(&|rng, m| {
            let z = rand_jump(rng);
            let nu = normal(rng);
            let a = psi.eval(z, nu).unwrap();
            let b = psi.eval(-z, -nu).unwrap();
            m.note(1e-12 * (1.0 + a) - (a - b).abs(), || {
                format!("psi(z,nu) = {a:.6e} vs psi(-z,-nu) = {b:.6e}")
            });
        })
        .report("B4", "psi(z, nu) = psi(-z, -nu)"),
    );

    // (B5) upper semicontinuity, probed by shrinking joint perturbations.
    // Steps scale with |z|: near z = 0 the amplitude profile has curvature
    // ~ 1/|z|, and an absolute step would alias it into a fake jump.
    hyps.push(
        run(&|rng, m| {
            let z = rand_jump(rng);
            let nu = normal(rng);
            let dz = rand_unit3(rng);
            let dn = rand_unit3(rng);
            let h = 1e-5;
            let v0 = psi.eval(z, nu).unwrap();
            let probe = |t: f64| {
                let n = nu + dn * t;
                let n = n * (1.0 / n.norm());
                psi.eval(z + dz * (t * z.norm()), n).unwrap()
            };
            let big = (probe(h) - v0).abs();
            let small = (probe(0.1 * h) - v0).abs();
            m.note(0.3 * big + 1e-8 * (1.0 + v0) - small, || {
                format!("persistent jump {big:.3e} near |z| = {:.3e}", z.norm())
            });
        })
        .report("B5", "upper semicontinuity (continuity probe)"),
    );

    // homogeneous extension psi(z, t nu) = t psi(z, nu)
    hyps.push(
        run(&|rng, m| {
            let z = rand_jump(rng);
            let nu = normal(rng);
            let base = psi.eval(z, nu).unwrap();
            for t in [0.0, 0.5, 1.0, 3.0] {
                let v = psi.eval(z, nu * t).unwrap();
                m.note(1e-12 * (1.0 + t * base) - (v - t * base).abs(), || {
                    format!("t = {t}: psi = {v:.6e} vs {:.6e}", t * base)
                });
            }
        })
        .report("hom", "positive 1-homogeneity in the normal slot"),
    );

    ValidationReport {
        density: psi.name.clone(),
        seed,
        samples,
        hypotheses: hyps,
    }
}
