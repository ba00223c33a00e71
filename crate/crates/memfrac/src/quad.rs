//! Quadrature: Gauss–Legendre rules, prism grids over the rescaled slab, and
//! a deterministic pairwise-tree summation used by all parallel reductions.

use crate::linalg::{v2, Vec2};

/// Gauss–Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre(order: usize) -> (Vec<f64>, Vec<f64>) {
    match order {
        1 => (vec![0.0], vec![2.0]),
        2 => {
            let a = 1.0 / 3.0f64.sqrt();
            (vec![-a, a], vec![1.0, 1.0])
        }
        3 => {
            let a = (3.0f64 / 5.0).sqrt();
            (vec![-a, 0.0, a], vec![5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0])
        }
        4 => {
            let a = (3.0 / 7.0 - 2.0 / 7.0 * (6.0f64 / 5.0).sqrt()).sqrt();
            let b = (3.0 / 7.0 + 2.0 / 7.0 * (6.0f64 / 5.0).sqrt()).sqrt();
            let wa = (18.0 + 30.0f64.sqrt()) / 36.0;
            let wb = (18.0 - 30.0f64.sqrt()) / 36.0;
            (vec![-b, -a, a, b], vec![wb, wa, wa, wb])
        }
        5 => {
            let a = (5.0 - 2.0 * (10.0f64 / 7.0).sqrt()).sqrt() / 3.0;
            let b = (5.0 + 2.0 * (10.0f64 / 7.0).sqrt()).sqrt() / 3.0;
            let wa = (322.0 + 13.0 * 70.0f64.sqrt()) / 900.0;
            let wb = (322.0 - 13.0 * 70.0f64.sqrt()) / 900.0;
            (
                vec![-b, -a, 0.0, a, b],
                vec![wb, wa, 128.0 / 225.0, wa, wb],
            )
        }
        n => {
            // Newton on Legendre polynomials for higher orders.
            let mut nodes = vec![0.0; n];
            let mut weights = vec![0.0; n];
            for i in 0..n {
                let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
                for _ in 0..100 {
                    let (p, dp) = legendre(n, x);
                    let dx = p / dp;
                    x -= dx;
                    if dx.abs() < 1e-15 {
                        break;
                    }
                }
                let (_, dp) = legendre(n, x);
                nodes[n - 1 - i] = x;
                weights[n - 1 - i] = 2.0 / ((1.0 - x * x) * dp * dp);
            }
            (nodes, weights)
        }
    }
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Gauss points of a rule mapped to the interval [a, b], weights included.
pub fn gauss_on_interval(order: usize, a: f64, b: f64) -> Vec<(f64, f64)> {
    let (nodes, weights) = gauss_legendre(order);
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    nodes
        .iter()
        .zip(&weights)
        .map(|(&x, &w)| (mid + half * x, w * half))
        .collect()
}

/// One quadrature point of a prism grid: planar position, thickness
/// coordinate in (-1/2, 1/2) and total weight.
#[derive(Clone, Copy, Debug)]
pub struct PrismPoint {
    pub pos: Vec2,
    pub x3: f64,
    pub weight: f64,
}

/// Tensor-product Gauss grid over rect x (-1/2, 1/2).
///
/// The planar rectangle is split n x n, the thickness interval into m
/// sub-intervals, each carrying a `gauss` x `gauss` (x `gauss`) point layout.
#[derive(Clone, Debug)]
pub struct PrismGrid {
    pub rect: [f64; 4],
    pub n: usize,
    pub m: usize,
    pub gauss: usize,
}

impl PrismGrid {
    pub fn new(rect: [f64; 4], n: usize, m: usize) -> Self {
        assert!(n >= 2 && m >= 2, "prism grid needs n, m >= 2");
        PrismGrid {
            rect,
            n,
            m,
            gauss: 2,
        }
    }

    pub fn with_gauss(mut self, order: usize) -> Self {
        self.gauss = order;
        self
    }

    pub fn planar_cell_size(&self) -> (f64, f64) {
        (
            (self.rect[2] - self.rect[0]) / self.n as f64,
            (self.rect[3] - self.rect[1]) / self.n as f64,
        )
    }

    /// All quadrature points of the full prism.
    pub fn points(&self) -> Vec<PrismPoint> {
        let planar = self.planar_points();
        let thick = self.thickness_points();
        let mut out = Vec::with_capacity(planar.len() * thick.len());
        for &(pos, wp) in &planar {
            for &(x3, wt) in &thick {
                out.push(PrismPoint {
                    pos,
                    x3,
                    weight: wp * wt,
                });
            }
        }
        out
    }

    /// Planar quadrature points with weights summing to the rect area.
    pub fn planar_points(&self) -> Vec<(Vec2, f64)> {
        let (hx, hy) = self.planar_cell_size();
        let mut out = Vec::with_capacity(self.n * self.n * self.gauss * self.gauss);
        for i in 0..self.n {
            let x0 = self.rect[0] + i as f64 * hx;
            for (x, wx) in gauss_on_interval(self.gauss, x0, x0 + hx) {
                for j in 0..self.n {
                    let y0 = self.rect[1] + j as f64 * hy;
                    for (y, wy) in gauss_on_interval(self.gauss, y0, y0 + hy) {
                        out.push((v2(x, y), wx * wy));
                    }
                }
            }
        }
        out
    }

    /// Thickness quadrature points over (-1/2, 1/2).
    pub fn thickness_points(&self) -> Vec<(f64, f64)> {
        let h = 1.0 / self.m as f64;
        let mut out = Vec::with_capacity(self.m * self.gauss);
        for k in 0..self.m {
            let t0 = -0.5 + k as f64 * h;
            out.extend(gauss_on_interval(self.gauss, t0, t0 + h));
        }
        out
    }
}

/// Pairwise-tree sum in fixed index order.
///
/// The reduction order depends only on the slice length, never on thread
/// count, so parallel producers feeding a buffer get bit-stable totals.
pub fn tree_sum(values: &[f64]) -> f64 {
    match values.len() {
        0 => 0.0,
        1 => values[0],
        2 => values[0] + values[1],
        n => {
            let mid = n / 2;
            tree_sum(&values[..mid]) + tree_sum(&values[mid..])
        }
    }
}
