//! Crack-opening maps: near-identity homeomorphisms of the plane minus a
//! graph curve onto the complement of a thin lens, opening the crack.

use crate::linalg::{v2, Vec2};

/// Polynomial in one variable, ascending coefficients.
#[derive(Clone, Debug)]
pub struct Poly(pub Vec<f64>);

impl Poly {
    pub fn eval(&self, x: f64) -> f64 {
        self.0.iter().rev().fold(0.0, |acc, c| acc * x + c)
    }
    pub fn deriv(&self) -> Poly {
        Poly(
            self.0
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, c)| k as f64 * c)
                .collect(),
        )
    }
}

/// Opening map around the graph S = { (t, g(t)) : t in [a, b] }.
///
/// Points with 0 < (x2 - g) / f < delta are pushed upward so that the open
/// crack becomes the lens between g and g + delta^2 f; everything at
/// parameter distance >= delta, below the graph, or horizontally outside
/// [a, b] stays put bitwise.
#[derive(Clone, Debug)]
pub struct CrackOpening {
    pub span: (f64, f64),
    pub graph: Poly,
    graph_d: Poly,
    /// Opening profile, positive inside the span, vanishing at its ends
    /// with nonzero slopes.
    pub profile: Poly,
    profile_d: Poly,
    pub delta: f64,
}

impl CrackOpening {
    /// Standard profile c (t - a)(b - t) with c = 1/(b - a), so the maximal
    /// opening height is (b - a)/4.
    pub fn new(span: (f64, f64), graph: Poly, delta: f64) -> Self {
        let (a, b) = span;
        assert!(b > a && delta > 0.0 && delta < 0.5);
        let c = 1.0 / (b - a);
        let profile = Poly(vec![-c * a * b, c * (a + b), -c]);
        let graph_d = graph.deriv();
        let profile_d = profile.deriv();
        CrackOpening {
            span,
            graph,
            graph_d,
            profile,
            profile_d,
            delta,
        }
    }

    /// The piecewise interpolation of the parameter: identity off (0, delta),
    /// affine with slope 1 - delta and offset delta^2 inside.
    pub fn interp(&self, t: f64) -> f64 {
        if t > 0.0 && t < self.delta {
            (1.0 - self.delta) * t + self.delta * self.delta
        } else {
            t
        }
    }

    fn param(&self, x: Vec2) -> Option<(f64, f64, f64)> {
        if x.x <= self.span.0 || x.x >= self.span.1 {
            return None;
        }
        let f = self.profile.eval(x.x);
        if f <= 1e-300 {
            return None;
        }
        let g = self.graph.eval(x.x);
        Some(((x.y - g) / f, f, g))
    }

    pub fn value(&self, x: Vec2) -> Vec2 {
        match self.param(x) {
            Some((t, f, g)) if t > 0.0 && t < self.delta => {
                v2(x.x, self.interp(t) * f + g)
            }
            _ => x,
        }
    }

    /// Jacobian rows [[1, 0], [d1, d2]].
    pub fn jacobian(&self, x: Vec2) -> [[f64; 2]; 2] {
        match self.param(x) {
            Some((t, _f, _g)) if t > 0.0 && t < self.delta => {
                let dg = self.graph_d.eval(x.x);
                let df = self.profile_d.eval(x.x);
                let slope = 1.0 - self.delta;
                // d1 of interp(t) f + g with t = (x2 - g)/f
                let d1 = slope * (-dg - t * df) + self.interp(t) * df + dg;
                [[1.0, 0.0], [d1, slope]]
            }
            _ => [[1.0, 0.0], [0.0, 1.0]],
        }
    }

    /// Inverse; `None` when y lies inside the opened lens (not in the
    /// image).
    pub fn inverse(&self, y: Vec2) -> Option<Vec2> {
        match self.param(y) {
            Some((tp, f, g)) => {
                let d2 = self.delta * self.delta;
                if tp > 0.0 && tp <= d2 {
                    None
                } else if tp > d2 && tp < self.delta {
                    let t = (tp - d2) / (1.0 - self.delta);
                    Some(v2(y.x, t * f + g))
                } else {
                    Some(y)
                }
            }
            None => Some(y),
        }
    }

    /// sup |Psi - Id| and sup |grad Psi - I| over a sample grid of the strip.
    pub fn distance_to_identity(&self, n: usize) -> (f64, f64) {
        let (a, b) = self.span;
        let mut sup_v: f64 = 0.0;
        let mut sup_j: f64 = 0.0;
        for i in 0..n {
            let x1 = a + (b - a) * (i as f64 + 0.5) / n as f64;
            let g = self.graph.eval(x1);
            let f = self.profile.eval(x1);
            for k in 0..n {
                let t = self.delta * (k as f64 + 0.5) / n as f64;
                let x = v2(x1, g + t * f);
                let v = self.value(x);
                sup_v = sup_v.max((v - x).norm());
                let j = self.jacobian(x);
                let dj = ((j[0][0] - 1.0).powi(2)
                    + j[0][1].powi(2)
                    + j[1][0].powi(2)
                    + (j[1][1] - 1.0).powi(2))
                .sqrt();
                sup_j = sup_j.max(dj);
            }
        }
        (sup_v, sup_j)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn opening(delta: f64) -> CrackOpening {
        // graph g(t) = 0.1 + 0.2 t over [0, 1]
        CrackOpening::new((0.0, 1.0), Poly(vec![0.1, 0.2]), delta)
    }

    #[test]
    fn identity_below_graph_and_outside() {
        let m = opening(0.1);
        // below the graph: parameter negative, bitwise identity
        let x = v2(0.5, 0.1);
        assert_eq!(m.value(x), x);
        // outside the span
        let x = v2(1.5, 0.3);
        assert_eq!(m.value(x), x);
        // above the strip: t >= delta
        let x = v2(0.5, 0.5);
        assert_eq!(m.value(x), x);
    }

    #[test]
    fn middle_branch_displacement() {
        // at t = delta / 2 the second coordinate moves by
        // (interp(t) - t) f = (delta^2 - delta t) f = delta^2 f / 2
        let delta = 0.1;
        let m = opening(delta);
        let x1 = 0.4;
        let f = m.profile.eval(x1);
        let g = m.graph.eval(x1);
        let t = delta / 2.0;
        let x = v2(x1, g + t * f);
        let v = m.value(x);
        assert!((v.y - x.y - delta * delta * f / 2.0).abs() < 1e-15);
        assert_eq!(v.x, x.x);
    }

    #[test]
    fn crack_opens_to_lens() {
        // limits from above land on g + delta^2 f, from below on g
        let delta = 0.2;
        let m = opening(delta);
        let x1 = 0.6;
        let f = m.profile.eval(x1);
        let g = m.graph.eval(x1);
        let above = m.value(v2(x1, g + 1e-12 * f));
        assert!((above.y - (g + delta * delta * f)).abs() < 1e-10);
        let below = m.value(v2(x1, g - 1e-12 * f));
        assert!((below.y - (g - 1e-12 * f)).abs() < 1e-15);
    }

    #[test]
    fn inverse_roundtrip_and_lens_gap() {
        let delta = 0.15;
        let m = opening(delta);
        for (x1, tfrac) in [(0.3, 0.2), (0.5, 0.7), (0.8, 0.95), (0.2, -0.5), (0.6, 1.5)] {
            let f = m.profile.eval(x1);
            let g = m.graph.eval(x1);
            let x = v2(x1, g + tfrac * delta * f);
            let y = m.value(x);
            let back = m.inverse(y).expect("image point must invert");
            assert!((back - x).norm() < 1e-12, "{x:?}");
        }
        // a point strictly inside the lens has no preimage
        let x1 = 0.5;
        let f = m.profile.eval(x1);
        let g = m.graph.eval(x1);
        let inside = v2(x1, g + 0.5 * delta * delta * f);
        assert!(m.inverse(inside).is_none());
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let m = opening(0.12);
        let x = v2(0.45, m.graph.eval(0.45) + 0.06 * m.profile.eval(0.45));
        let j = m.jacobian(x);
        let h = 1e-7;
        let d1 = (m.value(x + v2(h, 0.0)) - m.value(x - v2(h, 0.0))) * (1.0 / (2.0 * h));
        let d2 = (m.value(x + v2(0.0, h)) - m.value(x - v2(0.0, h))) * (1.0 / (2.0 * h));
        assert!((d1.y - j[1][0]).abs() < 1e-6);
        assert!((d2.y - j[1][1]).abs() < 1e-9);
        assert!((d1.x - 1.0).abs() < 1e-9);
    }

    #[test]
    fn distance_to_identity_decreases_with_delta() {
        let mut last = f64::INFINITY;
        for delta in [0.1, 0.05, 0.025] {
            let m = opening(delta);
            let (dv, dj) = m.distance_to_identity(64);
            let total = dv + dj;
            assert!(total < last, "delta = {delta}: {total} vs {last}");
            last = total;
        }
    }
}
