//! Variable-kernel smoothing: mollification whose translation length
//! vanishes near a crack set, so smoothing never bridges the discontinuity.

use crate::linalg::{v2, Vec2};

/// Scalar field on the plane with a gradient.
pub trait Field2: Sync {
    fn value(&self, x: Vec2) -> f64;
    fn gradient(&self, x: Vec2) -> Vec2;
    /// Rectangle outside which evaluation needs clamping, if any.
    fn rect(&self) -> Option<[f64; 4]> {
        None
    }
}

/// Field backed by closures (test fields are trigonometric polynomials).
pub struct AnalyticField<F, G>
where
    F: Fn(Vec2) -> f64 + Sync,
    G: Fn(Vec2) -> Vec2 + Sync,
{
    pub f: F,
    pub grad: G,
}

impl<F, G> Field2 for AnalyticField<F, G>
where
    F: Fn(Vec2) -> f64 + Sync,
    G: Fn(Vec2) -> Vec2 + Sync,
{
    fn value(&self, x: Vec2) -> f64 {
        (self.f)(x)
    }
    fn gradient(&self, x: Vec2) -> Vec2 {
        (self.grad)(x)
    }
}

/// Grid samples with C^1 cubic-convolution (Catmull–Rom) interpolation.
/// Values outside the rectangle clamp to the boundary.
pub struct GridField {
    pub rect: [f64; 4],
    pub nx: usize,
    pub ny: usize,
    pub data: Vec<f64>,
}

impl GridField {
    pub fn sample(rect: [f64; 4], nx: usize, ny: usize, f: impl Fn(Vec2) -> f64) -> Self {
        let mut data = vec![0.0; nx * ny];
        for j in 0..ny {
            for i in 0..nx {
                let x = rect[0] + (rect[2] - rect[0]) * i as f64 / (nx - 1) as f64;
                let y = rect[1] + (rect[3] - rect[1]) * j as f64 / (ny - 1) as f64;
                data[j * nx + i] = f(v2(x, y));
            }
        }
        GridField { rect, nx, ny, data }
    }

    fn at(&self, i: isize, j: isize) -> f64 {
        let i = i.clamp(0, self.nx as isize - 1) as usize;
        let j = j.clamp(0, self.ny as isize - 1) as usize;
        self.data[j * self.nx + i]
    }

    /// Catmull–Rom weights and their derivatives in the local coordinate.
    fn cubic(t: f64) -> ([f64; 4], [f64; 4]) {
        let t2 = t * t;
        let t3 = t2 * t;
        let w = [
            0.5 * (-t3 + 2.0 * t2 - t),
            0.5 * (3.0 * t3 - 5.0 * t2 + 2.0),
            0.5 * (-3.0 * t3 + 4.0 * t2 + t),
            0.5 * (t3 - t2),
        ];
        let dw = [
            0.5 * (-3.0 * t2 + 4.0 * t - 1.0),
            0.5 * (9.0 * t2 - 10.0 * t),
            0.5 * (-9.0 * t2 + 8.0 * t + 1.0),
            0.5 * (3.0 * t2 - 2.0 * t),
        ];
        (w, dw)
    }

    fn local(&self, x: Vec2) -> (isize, isize, f64, f64, f64, f64) {
        let hx = (self.rect[2] - self.rect[0]) / (self.nx - 1) as f64;
        let hy = (self.rect[3] - self.rect[1]) / (self.ny - 1) as f64;
        let fx = ((x.x - self.rect[0]) / hx).clamp(0.0, (self.nx - 1) as f64 - 1e-12);
        let fy = ((x.y - self.rect[1]) / hy).clamp(0.0, (self.ny - 1) as f64 - 1e-12);
        let i = fx.floor() as isize;
        let j = fy.floor() as isize;
        (i, j, fx - i as f64, fy - j as f64, hx, hy)
    }
}

impl Field2 for GridField {
    fn value(&self, x: Vec2) -> f64 {
        let (i, j, tx, ty, _, _) = self.local(x);
        let (wx, _) = Self::cubic(tx);
        let (wy, _) = Self::cubic(ty);
        let mut s = 0.0;
        for b in 0..4 {
            for a in 0..4 {
                s += wx[a] * wy[b] * self.at(i + a as isize - 1, j + b as isize - 1);
            }
        }
        s
    }

    fn gradient(&self, x: Vec2) -> Vec2 {
        let (i, j, tx, ty, hx, hy) = self.local(x);
        let (wx, dwx) = Self::cubic(tx);
        let (wy, dwy) = Self::cubic(ty);
        let mut gx = 0.0;
        let mut gy = 0.0;
        for b in 0..4 {
            for a in 0..4 {
                let v = self.at(i + a as isize - 1, j + b as isize - 1);
                gx += dwx[a] * wy[b] * v;
                gy += wx[a] * dwy[b] * v;
            }
        }
        v2(gx / hx, gy / hy)
    }

    fn rect(&self) -> Option<[f64; 4]> {
        Some(self.rect)
    }
}

/// Smooth ramp h with h = 0 (to second order) at 0 and h = 1 for t >= 2.
/// Quintic profile: |h'| <= 15/16, |h''| <= 1.44.
pub fn ramp(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else if t >= 2.0 {
        1.0
    } else {
        let s = t / 2.0;
        s * s * s * (10.0 - 15.0 * s + 6.0 * s * s)
    }
}

pub fn ramp_deriv(t: f64) -> f64 {
    if t <= 0.0 || t >= 2.0 {
        0.0
    } else {
        let s = t / 2.0;
        15.0 * s * s * (1.0 - s) * (1.0 - s)
    }
}

/// Distance to a segment.
fn segment_distance(p: Vec2, a: Vec2, b: Vec2) -> (f64, Vec2) {
    let ab = b - a;
    let t = ((p - a).dot(ab) / ab.dot(ab)).clamp(0.0, 1.0);
    let proj = a + ab * t;
    let d = (p - proj).norm();
    let grad = if d > 1e-300 {
        (p - proj) * (1.0 / d)
    } else {
        v2(0.0, 0.0)
    };
    (d, grad)
}

/// Variable-kernel smoothing data: crack set, translation scale, ramp and
/// mollifier quadrature. Immutable.
pub struct SmoothingKernel {
    pub crack: Vec<[Vec2; 2]>,
    pub sigma: f64,
    /// Disc quadrature nodes (y, normalized weight including the mollifier).
    nodes: Vec<(Vec2, f64)>,
}

/// Result of a smoothed evaluation; `clamped` reports that some translated
/// point left the field rectangle and was extended by the nearest value.
#[derive(Clone, Copy, Debug)]
pub struct Smoothed {
    pub value: f64,
    pub clamped: bool,
}

#[derive(Clone, Copy, Debug)]
pub struct GradientSplit {
    /// Convolved gradient (grad u)_sigma.
    pub grad_conv: Vec2,
    /// Correction field xi^sigma: grad(u_sigma) = (grad u)_sigma + sigma xi.
    pub xi: Vec2,
    pub clamped: bool,
}

impl SmoothingKernel {
    pub fn new(crack: Vec<[Vec2; 2]>, sigma: f64) -> Self {
        assert!(sigma > 0.0 && sigma < 0.5, "sigma must lie in (0, 1/2)");
        Self::with_quadrature(crack, sigma, 24, 48)
    }

    pub fn with_quadrature(crack: Vec<[Vec2; 2]>, sigma: f64, nr: usize, nt: usize) -> Self {
        // polar tensor rule; weights normalized so the discrete mollifier
        // mass is exactly one
        let mut nodes = Vec::with_capacity(nr * nt);
        let radial = crate::quad::gauss_on_interval(nr, 0.0, 1.0);
        let mut total = 0.0;
        for &(r, wr) in &radial {
            for k in 0..nt {
                let th = std::f64::consts::TAU * (k as f64 + 0.5) / nt as f64;
                let y = v2(r * th.cos(), r * th.sin());
                let w = wr * (std::f64::consts::TAU / nt as f64) * r * bump(y);
                nodes.push((y, w));
                total += w;
            }
        }
        for n in &mut nodes {
            n.1 /= total;
        }
        SmoothingKernel {
            crack,
            sigma,
            nodes,
        }
    }

    /// Regularized crack distance: dist/2 <= d <= dist via a power softmin
    /// over the segments.
    pub fn distance(&self, x: Vec2) -> f64 {
        if self.crack.is_empty() {
            return f64::MAX / 4.0;
        }
        if self.crack.len() == 1 {
            return segment_distance(x, self.crack[0][0], self.crack[0][1]).0;
        }
        const Q: f64 = 8.0;
        let mut s = 0.0;
        for seg in &self.crack {
            let (d, _) = segment_distance(x, seg[0], seg[1]);
            if d <= 1e-300 {
                return 0.0;
            }
            s += d.powf(-Q);
        }
        s.powf(-1.0 / Q)
    }

    /// Gradient of the regularized distance; |grad d| <= 1.
    pub fn distance_gradient(&self, x: Vec2) -> Vec2 {
        if self.crack.len() == 1 {
            return segment_distance(x, self.crack[0][0], self.crack[0][1]).1;
        }
        const Q: f64 = 8.0;
        let d = self.distance(x);
        if d <= 1e-300 || d >= f64::MAX / 8.0 {
            return v2(0.0, 0.0);
        }
        let mut g = v2(0.0, 0.0);
        for seg in &self.crack {
            let (di, gi) = segment_distance(x, seg[0], seg[1]);
            g = g + gi * di.powf(-Q - 1.0);
        }
        g * d.powf(Q + 1.0)
    }

    /// Generalized translation T(x, y) = x - sigma h(d(x)) y.
    pub fn translate(&self, x: Vec2, y: Vec2) -> Vec2 {
        x - y * (self.sigma * ramp(self.distance(x)))
    }

    /// Discrete mollifier mass recomputed with an independent, finer rule;
    /// should be 1 within 1e-10.
    pub fn mass_check(&self) -> f64 {
        let fine = SmoothingKernel::with_quadrature(vec![], 0.1, 48, 96);
        let coarse_total: f64 = self.nodes.iter().map(|n| n.1).sum();
        let ratio: f64 = fine.nodes.iter().map(|n| n.1).sum();
        coarse_total / ratio
    }

    /// u_sigma(x): mollification along the variable translations.
    pub fn convolve(&self, field: &dyn Field2, x: Vec2) -> Smoothed {
        let reach = self.sigma * ramp(self.distance(x));
        let mut value = 0.0;
        let mut clamped = false;
        for &(y, w) in &self.nodes {
            let t = x - y * reach;
            if let Some(r) = field.rect() {
                if t.x < r[0] || t.x > r[2] || t.y < r[1] || t.y > r[3] {
                    clamped = true;
                }
            }
            value += w * field.value(t);
        }
        Smoothed { value, clamped }
    }

    /// Convolved gradient and the translation-correction field xi, so that
    /// grad(u_sigma) = (grad u)_sigma + sigma xi up to quadrature error.
    pub fn gradient_split(&self, field: &dyn Field2, x: Vec2) -> GradientSplit {
        let d = self.distance(x);
        let reach = self.sigma * ramp(d);
        let hp = ramp_deriv(d);
        let gd = self.distance_gradient(x);
        let mut grad_conv = v2(0.0, 0.0);
        let mut moment = 0.0;
        let mut clamped = false;
        for &(y, w) in &self.nodes {
            let t = x - y * reach;
            if let Some(r) = field.rect() {
                if t.x < r[0] || t.x > r[2] || t.y < r[1] || t.y > r[3] {
                    clamped = true;
                }
            }
            let g = field.gradient(t);
            grad_conv = grad_conv + g * w;
            moment += w * g.dot(y);
        }
        GradientSplit {
            grad_conv,
            xi: gd * (-hp * moment),
            clamped,
        }
    }
}

/// The standard radial bump, unnormalized.
fn bump(y: Vec2) -> f64 {
    let r2 = y.dot(y);
    if r2 >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - r2)).exp()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn kernel(sigma: f64) -> SmoothingKernel {
        SmoothingKernel::new(vec![[v2(0.3, 0.5), v2(0.7, 0.5)]], sigma)
    }

    /// Random C^infinity trigonometric field.
    fn trig_field(rng: &mut ChaCha8Rng) -> AnalyticField<impl Fn(Vec2) -> f64 + Sync, impl Fn(Vec2) -> Vec2 + Sync> {
        let terms: Vec<(f64, f64, f64, f64)> = (0..5)
            .map(|_| {
                (
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-3.0..3.0),
                    rng.random_range(-3.0..3.0),
                    rng.random_range(0.0..std::f64::consts::TAU),
                )
            })
            .collect();
        let t2 = terms.clone();
        AnalyticField {
            f: move |x: Vec2| {
                terms
                    .iter()
                    .map(|&(a, kx, ky, ph)| a * (kx * x.x + ky * x.y + ph).cos())
                    .sum()
            },
            grad: move |x: Vec2| {
                let mut g = v2(0.0, 0.0);
                for &(a, kx, ky, ph) in &t2 {
                    let s = -a * (kx * x.x + ky * x.y + ph).sin();
                    g = g + v2(kx * s, ky * s);
                }
                g
            },
        }
    }

    #[test]
    fn mollifier_mass_is_one() {
        let k = kernel(0.1);
        assert!((k.mass_check() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn constant_field_is_reproduced() {
        let k = kernel(0.2);
        let field = AnalyticField {
            f: |_| 3.25,
            grad: |_| v2(0.0, 0.0),
        };
        for x in [v2(0.1, 0.1), v2(0.5, 0.52), v2(0.9, 0.9)] {
            let s = k.convolve(&field, x);
            assert!((s.value - 3.25).abs() < 1e-10);
        }
    }

    #[test]
    fn distance_bounds_and_gradient() {
        let k = SmoothingKernel::new(
            vec![
                [v2(0.0, 0.0), v2(1.0, 0.0)],
                [v2(0.0, 0.4), v2(1.0, 0.8)],
                [v2(0.5, -0.2), v2(0.5, 0.3)],
            ],
            0.1,
        );
        let mut rng = ChaCha8Rng::seed_from_u64(61);
        for _ in 0..500 {
            let x = v2(rng.random_range(-1.0..2.0), rng.random_range(-1.0..2.0));
            let exact = k
                .crack
                .iter()
                .map(|s| segment_distance(x, s[0], s[1]).0)
                .fold(f64::INFINITY, f64::min);
            let d = k.distance(x);
            assert!(d <= exact + 1e-12);
            assert!(d >= 0.5 * exact - 1e-12, "d = {d}, exact = {exact}");
            assert!(k.distance_gradient(x).norm() <= 1.0 + 1e-9);
        }
    }

    #[test]
    fn distance_derivative_bounds_on_far_region() {
        // |grad d| <= 2 and |grad^2 d| <= 2 by finite differences where
        // d >= 1 (curvature of the distance scales like 1/d near the
        // endpoints, so the bound only holds away from the crack)
        let k = kernel(0.1);
        let h = 1e-4;
        let mut rng = ChaCha8Rng::seed_from_u64(62);
        let mut checked = 0;
        while checked < 200 {
            let x = v2(rng.random_range(-3.0..4.0), rng.random_range(-3.0..4.0));
            if k.distance(x) < 1.0 {
                continue;
            }
            checked += 1;
            let d0 = k.distance(x);
            let dx = (k.distance(x + v2(h, 0.0)) - k.distance(x - v2(h, 0.0))) / (2.0 * h);
            let dy = (k.distance(x + v2(0.0, h)) - k.distance(x - v2(0.0, h))) / (2.0 * h);
            assert!(v2(dx, dy).norm() <= 2.0);
            let dxx = (k.distance(x + v2(h, 0.0)) - 2.0 * d0 + k.distance(x - v2(h, 0.0))) / (h * h);
            let dyy = (k.distance(x + v2(0.0, h)) - 2.0 * d0 + k.distance(x - v2(0.0, h))) / (h * h);
            assert!(dxx.abs() <= 2.0 && dyy.abs() <= 2.0);
        }
    }

    #[test]
    fn ramp_bounds() {
        let mut max_d1: f64 = 0.0;
        let mut max_d2: f64 = 0.0;
        let h = 1e-5;
        for i in 0..4000 {
            let t = 2.2 * i as f64 / 3999.0;
            let d1 = (ramp(t + h) - ramp(t - h)) / (2.0 * h);
            let d2 = (ramp(t + h) - 2.0 * ramp(t) + ramp(t - h)) / (h * h);
            max_d1 = max_d1.max(d1.abs());
            max_d2 = max_d2.max(d2.abs());
            assert!((0.0..=1.0).contains(&ramp(t)));
            assert!((d1 - ramp_deriv(t)).abs() < 1e-5);
        }
        assert!(max_d1 <= 1.0);
        assert!(max_d2 <= 1.5);
        assert_eq!(ramp(0.0), 0.0);
        assert_eq!(ramp(2.0), 1.0);
    }

    #[test]
    fn lp_norm_bound_on_smooth_fields() {
        // ||u_sigma||_p <= 2 ||u||_p over the domain, p in {1, 2}
        let k = kernel(0.1);
        let mut rng = ChaCha8Rng::seed_from_u64(63);
        for _ in 0..20 {
            let field = trig_field(&mut rng);
            let n = 40;
            let mut norm1 = (0.0, 0.0);
            let mut norm2 = (0.0, 0.0);
            for i in 0..n {
                for j in 0..n {
                    let x = v2((i as f64 + 0.5) / n as f64, (j as f64 + 0.5) / n as f64);
                    let w = 1.0 / (n * n) as f64;
                    let us = k.convolve(&field, x).value;
                    let u = field.value(x);
                    norm1.0 += w * us.abs();
                    norm1.1 += w * u.abs();
                    norm2.0 += w * us * us;
                    norm2.1 += w * u * u;
                }
            }
            // the reference norm lives on the enlarged domain; the domain
            // quadrature already under-estimates it, so the factor 2 has
            // margin
            assert!(norm1.0 <= 2.0 * norm1.1 + 1e-9);
            assert!(norm2.0.sqrt() <= 2.0 * norm2.1.sqrt() + 1e-9);
        }
    }

    #[test]
    fn smoothing_converges_as_sigma_shrinks() {
        let mut rng = ChaCha8Rng::seed_from_u64(64);
        let field = trig_field(&mut rng);
        let mut last = f64::INFINITY;
        for sigma in [0.2, 0.1, 0.05] {
            let k = kernel(sigma);
            let n = 30;
            let mut err = 0.0;
            for i in 0..n {
                for j in 0..n {
                    let x = v2((i as f64 + 0.5) / n as f64, (j as f64 + 0.5) / n as f64);
                    let us = k.convolve(&field, x).value;
                    err += (us - field.value(x)).powi(2) / (n * n) as f64;
                }
            }
            let err = err.sqrt();
            assert!(err < last, "sigma = {sigma}: {err} vs {last}");
            last = err;
        }
    }

    #[test]
    fn gradient_split_identity_and_bound() {
        let k = kernel(0.1);
        let mut rng = ChaCha8Rng::seed_from_u64(65);
        for _ in 0..20 {
            let field = trig_field(&mut rng);
            // sup |grad u| estimate on the enlarged domain
            let mut sup_grad: f64 = 0.0;
            for i in 0..40 {
                for j in 0..40 {
                    let x = v2(-0.1 + 1.2 * i as f64 / 39.0, -0.1 + 1.2 * j as f64 / 39.0);
                    sup_grad = sup_grad.max(field.gradient(x).norm());
                }
            }
            for _ in 0..10 {
                let x = v2(rng.random_range(0.1..0.9), rng.random_range(0.1..0.9));
                let split = k.gradient_split(&field, x);
                // xi bound
                assert!(split.xi.norm() <= 2.0 * sup_grad + 1e-3);
                // identity against finite differences of u_sigma
                let h = 1e-5;
                let fd = v2(
                    (k.convolve(&field, x + v2(h, 0.0)).value
                        - k.convolve(&field, x - v2(h, 0.0)).value)
                        / (2.0 * h),
                    (k.convolve(&field, x + v2(0.0, h)).value
                        - k.convolve(&field, x - v2(0.0, h)).value)
                        / (2.0 * h),
                );
                let recon = split.grad_conv + split.xi * k.sigma;
                assert!(
                    (fd - recon).norm() <= 1e-6 * (1.0 + sup_grad),
                    "fd = {fd:?}, recon = {recon:?}"
                );
            }
        }
    }

    #[test]
    fn ramp_saturated_kills_xi() {
        // far from the crack (d >= 2) the translation is constant and the
        // correction vanishes
        let k = SmoothingKernel::new(vec![[v2(-8.0, 0.0), v2(-7.0, 0.0)]], 0.2);
        let field = AnalyticField {
            f: |x: Vec2| 1.0 + 2.0 * x.x - 0.5 * x.y,
            grad: |_| v2(2.0, -0.5),
        };
        let split = k.gradient_split(&field, v2(0.5, 0.5));
        assert!(split.xi.norm() == 0.0);
        assert!((split.grad_conv - v2(2.0, -0.5)).norm() < 1e-12);
    }

    #[test]
    fn grid_field_matches_analytic_source() {
        let f = |x: Vec2| (2.0 * x.x).sin() * (1.5 * x.y).cos();
        let grid = GridField::sample([-0.5, -0.5, 1.5, 1.5], 160, 160, f);
        let mut rng = ChaCha8Rng::seed_from_u64(66);
        for _ in 0..100 {
            let x = v2(rng.random_range(0.0..1.0), rng.random_range(0.0..1.0));
            assert!((grid.value(x) - f(x)).abs() < 1e-5);
            let g = grid.gradient(x);
            let exact = v2(
                2.0 * (2.0 * x.x).cos() * (1.5 * x.y).cos(),
                -1.5 * (2.0 * x.x).sin() * (1.5 * x.y).sin(),
            );
            assert!((g - exact).norm() < 1e-3);
        }
    }

    #[test]
    fn clamped_evaluation_is_flagged() {
        let f = |x: Vec2| x.x + x.y;
        let grid = GridField::sample([0.0, 0.0, 1.0, 1.0], 32, 32, f);
        let k = SmoothingKernel::new(vec![[v2(0.5, -9.0), v2(0.6, -9.0)]], 0.3);
        // near the corner the translations leave the grid
        let s = k.convolve(&grid, v2(0.001, 0.001));
        assert!(s.clamped);
    }
}
