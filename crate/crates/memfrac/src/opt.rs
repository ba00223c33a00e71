//! Derivative-free minimizers shared by the reduction and envelope searches:
//! golden-section on an interval, Nelder–Mead in low dimension, and a simple
//! shrinking pattern search.

/// Golden-section search on [a, b]; returns (argmin, min).
pub fn golden_section(mut a: f64, mut b: f64, tol: f64, f: impl Fn(f64) -> f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    if fc < fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Coarse scan of `n` evenly spaced points on [a, b] followed by a
/// golden-section refinement around the best bracket.
pub fn scan_then_golden(a: f64, b: f64, n: usize, tol: f64, f: impl Fn(f64) -> f64) -> (f64, f64) {
    let h = (b - a) / (n - 1) as f64;
    let mut best_i = 0;
    let mut best = f64::INFINITY;
    for i in 0..n {
        let v = f(a + h * i as f64);
        if v < best {
            best = v;
            best_i = i;
        }
    }
    let lo = a + h * best_i.saturating_sub(1) as f64;
    let hi = (a + h * (best_i + 1) as f64).min(b);
    let (x, v) = golden_section(lo, hi, tol, f);
    if v < best {
        (x, v)
    } else {
        (a + h * best_i as f64, best)
    }
}

/// Nelder–Mead with standard coefficients; returns (argmin, min, iterations).
pub fn nelder_mead(
    start: &[f64],
    scale: f64,
    max_iter: usize,
    tol: f64,
    f: impl Fn(&[f64]) -> f64,
) -> (Vec<f64>, f64, usize) {
    let n = start.len();
    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    simplex.push(start.to_vec());
    for i in 0..n {
        let mut p = start.to_vec();
        p[i] += scale;
        simplex.push(p);
    }
    let mut values: Vec<f64> = simplex.iter().map(|p| f(p)).collect();
    let mut iter = 0;
    while iter < max_iter {
        iter += 1;
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&i, &j| values[i].partial_cmp(&values[j]).unwrap());
        let (best, worst, second_worst) = (order[0], order[n], order[n - 1]);
        if (values[worst] - values[best]).abs() <= tol * (1.0 + values[best].abs()) {
            break;
        }
        // centroid excluding worst
        let mut centroid = vec![0.0; n];
        for (k, p) in simplex.iter().enumerate() {
            if k != worst {
                for i in 0..n {
                    centroid[i] += p[i] / n as f64;
                }
            }
        }
        let dir: Vec<f64> = (0..n)
            .map(|i| centroid[i] - simplex[worst][i])
            .collect();
        let at = |t: f64| -> Vec<f64> { (0..n).map(|i| centroid[i] + t * dir[i]).collect() };
        let reflected = at(1.0);
        let fr = f(&reflected);
        if fr < values[best] {
            let expanded = at(2.0);
            let fe = f(&expanded);
            if fe < fr {
                simplex[worst] = expanded;
                values[worst] = fe;
            } else {
                simplex[worst] = reflected;
                values[worst] = fr;
            }
        } else if fr < values[second_worst] {
            simplex[worst] = reflected;
            values[worst] = fr;
        } else {
            let contracted = if fr < values[worst] { at(0.5) } else { at(-0.5) };
            let fc = f(&contracted);
            if fc < values[worst].min(fr) {
                simplex[worst] = contracted;
                values[worst] = fc;
            } else {
                // shrink towards best
                let b = simplex[best].clone();
                for (k, p) in simplex.iter_mut().enumerate() {
                    if k != best {
                        for i in 0..n {
                            p[i] = 0.5 * (p[i] + b[i]);
                        }
                    }
                }
                for k in 0..=n {
                    if k != best {
                        values[k] = f(&simplex[k]);
                    }
                }
            }
        }
    }
    let mut bi = 0;
    for k in 1..=n {
        if values[k] < values[bi] {
            bi = k;
        }
    }
    (simplex[bi].clone(), values[bi], iter)
}

/// Coordinate pattern search with shrinking steps; robust on nonsmooth
/// objectives. Returns (argmin, min).
pub fn pattern_search(
    start: &[f64],
    mut step: f64,
    min_step: f64,
    max_iter: usize,
    f: impl Fn(&[f64]) -> f64,
) -> (Vec<f64>, f64) {
    let mut x = start.to_vec();
    let mut fx = f(&x);
    let n = x.len();
    let mut iter = 0;
    while step > min_step && iter < max_iter {
        iter += 1;
        let mut improved = false;
        for i in 0..n {
            for s in [step, -step] {
                let old = x[i];
                x[i] = old + s;
                let v = f(&x);
                if v < fx {
                    fx = v;
                    improved = true;
                } else {
                    x[i] = old;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    (x, fx)
}
