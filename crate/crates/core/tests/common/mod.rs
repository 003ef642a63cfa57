//! Independent reference computations used by the integration tests.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};

/// Loss values written out directly, without going through the library.
pub fn loss(kind: &str, tau: f64, t: f64, y: f64) -> f64 {
    match kind {
        "hinge" => (1.0 - y * t).max(0.0),
        "logistic" => {
            let z = -y * t;
            if z > 0.0 {
                z + (-z).exp().ln_1p()
            } else {
                z.exp().ln_1p()
            }
        }
        "quantile" => {
            let u = y - t;
            if u > 0.0 {
                tau * u
            } else {
                (tau - 1.0) * u
            }
        }
        "squared" => 0.5 * (t - y) * (t - y),
        _ => panic!("unknown loss {kind}"),
    }
}

/// Minimizes a convex scalar function on `[lo, hi]` by a dense grid scan
/// followed by ternary search around the best grid point.
pub fn grid_minimize(f: impl Fn(f64) -> f64, lo: f64, hi: f64, points: usize) -> (f64, f64) {
    let h = (hi - lo) / points as f64;
    let mut best = (lo, f(lo));
    for k in 1..=points {
        let x = lo + h * k as f64;
        let v = f(x);
        if v < best.1 {
            best = (x, v);
        }
    }
    let (mut a, mut b) = ((best.0 - h).max(lo), (best.0 + h).min(hi));
    for _ in 0..200 {
        let x1 = a + (b - a) / 3.0;
        let x2 = b - (b - a) / 3.0;
        if f(x1) <= f(x2) {
            b = x2;
        } else {
            a = x1;
        }
    }
    let x = 0.5 * (a + b);
    let v = f(x);
    if v < best.1 {
        (x, v)
    } else {
        best
    }
}

/// Polar factor `U Vᵀ` over the singular values above `eps`.
fn polar(x: &DMatrix<f64>, eps: f64) -> DMatrix<f64> {
    let svd = x.clone().svd(true, true);
    let u = svd.u.unwrap();
    let vt = svd.v_t.unwrap();
    let mut g = DMatrix::zeros(x.nrows(), x.ncols());
    for (i, s) in svd.singular_values.iter().enumerate() {
        if *s > eps {
            g += u.column(i) * vt.row(i);
        }
    }
    g
}

pub fn nuclear(x: &DMatrix<f64>) -> f64 {
    x.clone().singular_values().sum()
}

/// Subgradient descent on `½‖X − M‖²_F + a‖X‖_{S₁}` with step `1/k`,
/// returning the average of the final tenth of the iterates.
pub fn svt_oracle(m: &DMatrix<f64>, a: f64, iters: usize) -> DMatrix<f64> {
    let mut x = m.clone();
    let tail = iters - iters / 10;
    let mut avg = DMatrix::zeros(m.nrows(), m.ncols());
    for k in 1..=iters {
        let g = &x - m + polar(&x, 0.0) * a;
        x -= g / k as f64;
        if k > tail {
            avg += &x;
        }
    }
    avg / (iters - tail) as f64
}

/// Sorted-ℓ1 prox by exhaustive search.
///
/// For each permutation `π` of the coordinates the prox restricted to the
/// cone `|x_{π(1)}| ≥ … ≥ |x_{π(p)}|` with signs of `v` is a separable
/// quadratic over a polyhedral cone; it is solved by enumerating every
/// partition of the ordered coordinates into consecutive blocks with equal
/// magnitude (including a zero tail), and keeping the best feasible point.
pub fn slope_oracle(v: &[f64], w: &[f64]) -> Vec<f64> {
    let p = v.len();
    let abs: Vec<f64> = v.iter().map(|x| x.abs()).collect();
    let objective = |x: &[f64]| {
        let mut sorted: Vec<f64> = x.iter().map(|t| t.abs()).collect();
        sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
        let pen: f64 = sorted.iter().zip(w).map(|(s, wi)| s * wi).sum();
        0.5 * x.iter().zip(v).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() + pen
    };
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut perm: Vec<usize> = (0..p).collect();
    permutations(&mut perm, 0, &mut |order| {
        // cut positions: bit i set means a block boundary after position i
        for cuts in 0..(1u32 << p.saturating_sub(1)) {
            let mut blocks = Vec::new();
            let mut start = 0;
            for i in 0..p {
                if i + 1 == p || cuts & (1 << i) != 0 {
                    blocks.push((start, i + 1));
                    start = i + 1;
                }
            }
            // every suffix of blocks may be forced to zero
            for zero_from in 0..=blocks.len() {
                let mut mags = vec![0.0; p];
                let mut ok = true;
                let mut prev = f64::INFINITY;
                for (bi, &(s, e)) in blocks.iter().enumerate() {
                    if bi >= zero_from {
                        break;
                    }
                    let n = (e - s) as f64;
                    let sum_v: f64 = (s..e).map(|k| abs[order[k]]).sum();
                    let sum_w: f64 = (s..e).map(|k| w[k]).sum();
                    let level = (sum_v - sum_w) / n;
                    if level < 0.0 || level > prev + 1e-15 {
                        ok = false;
                        break;
                    }
                    prev = level;
                    for k in s..e {
                        mags[order[k]] = level;
                    }
                }
                if !ok {
                    continue;
                }
                let x: Vec<f64> = (0..p).map(|i| mags[i] * v[i].signum()).collect();
                let val = objective(&x);
                if best.as_ref().is_none_or(|(b, _)| val < *b) {
                    best = Some((val, x));
                }
            }
        }
    });
    best.map(|(_, x)| x).unwrap_or_default()
}

fn permutations(items: &mut Vec<usize>, k: usize, visit: &mut impl FnMut(&[usize])) {
    if k == items.len() {
        visit(items);
        return;
    }
    for i in k..items.len() {
        items.swap(k, i);
        permutations(items, k + 1, visit);
        items.swap(k, i);
    }
}

/// Matrix completion instance as plain triplets.
pub struct Instance {
    pub rows: usize,
    pub cols: usize,
    pub entries: Vec<(usize, usize, f64)>,
    pub kind: &'static str,
    pub tau: f64,
    pub lambda: f64,
    pub bound: Option<f64>,
}

impl Instance {
    pub fn objective(&self, x: &DMatrix<f64>) -> f64 {
        let n = self.entries.len() as f64;
        let risk: f64 = self
            .entries
            .iter()
            .map(|&(r, c, y)| loss(self.kind, self.tau, x[(r, c)], y))
            .sum::<f64>()
            / n;
        risk + self.lambda * nuclear(x)
    }

    fn subgradient(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let n = self.entries.len() as f64;
        let mut g = polar(x, 1e-12) * self.lambda;
        for &(r, c, y) in &self.entries {
            let t = x[(r, c)];
            let d = match self.kind {
                "hinge" => {
                    if y * t < 1.0 {
                        -y
                    } else {
                        0.0
                    }
                }
                "logistic" => -y / (1.0 + (y * t).exp()),
                "quantile" => {
                    if t < y {
                        -self.tau
                    } else {
                        1.0 - self.tau
                    }
                }
                _ => t - y,
            };
            g[(r, c)] += d / n;
        }
        g
    }

    fn project(&self, x: &mut DMatrix<f64>) {
        if let Some(b) = self.bound {
            x.apply(|v| *v = v.clamp(-b, b));
        }
    }

    /// Best objective seen by projected subgradient descent from `start`
    /// with steps `step0/√k`.
    pub fn subgradient_descent(&self, start: DMatrix<f64>, step0: f64, iters: usize) -> (f64, DMatrix<f64>) {
        let mut x = start;
        self.project(&mut x);
        let mut best = (self.objective(&x), x.clone());
        for k in 1..=iters {
            let g = self.subgradient(&x);
            let gn = g.norm();
            if gn == 0.0 {
                break;
            }
            x -= g * (step0 / (k as f64).sqrt() / gn.max(1.0));
            self.project(&mut x);
            let v = self.objective(&x);
            if v < best.0 {
                best = (v, x.clone());
            }
        }
        best
    }

    /// Long-run oracle: a sequence of restarted subgradient runs with
    /// shrinking initial steps, each started from the best point so far.
    pub fn oracle(&self, iters_per_stage: usize) -> f64 {
        let mut point = DMatrix::zeros(self.rows, self.cols);
        let mut best = f64::INFINITY;
        let mut step = 1.0;
        for _ in 0..6 {
            let (v, x) = self.subgradient_descent(point, step, iters_per_stage);
            best = best.min(v);
            point = x;
            step *= 0.1;
        }
        best
    }
}

/// Cyclic coordinate minimization for logistic LASSO. Each coordinate is
/// minimized exactly by bisection on its one-sided derivatives.
pub fn logistic_lasso_cd(x: &DMatrix<f64>, y: &DVector<f64>, lambda: f64, sweeps: usize) -> (DVector<f64>, f64) {
    let (n, p) = x.shape();
    let mut t = DVector::zeros(p);
    let margins = |t: &DVector<f64>| x * t;
    let risk_deriv = |z: &DVector<f64>, j: usize| -> f64 {
        (0..n).map(|i| -y[i] * x[(i, j)] / (1.0 + (y[i] * z[i]).exp())).sum::<f64>() / n as f64
    };
    for _ in 0..sweeps {
        let mut moved = 0.0f64;
        for j in 0..p {
            let old = t[j];
            let deriv_at = |s: f64, t: &DVector<f64>| {
                let mut tt = t.clone();
                tt[j] = s;
                risk_deriv(&margins(&tt), j)
            };
            let d0 = deriv_at(0.0, &t);
            let new = if d0.abs() <= lambda {
                0.0
            } else {
                // root of risk' + λ sign(s) on the side where it changes sign
                let (sign, target) = if d0 > lambda { (-1.0, -lambda) } else { (1.0, lambda) };
                let g = |s: f64| deriv_at(s, &t) + target;
                let mut lo = 0.0;
                let mut hi = sign;
                while g(hi) * sign < 0.0 {
                    hi *= 2.0;
                }
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if g(mid) * sign < 0.0 {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                0.5 * (lo + hi)
            };
            t[j] = new;
            moved = moved.max((new - old).abs());
        }
        if moved < 1e-14 {
            break;
        }
    }
    let z = margins(&t);
    let obj = (0..n).map(|i| loss("logistic", 0.0, z[i], y[i])).sum::<f64>() / n as f64
        + lambda * t.iter().map(|v| v.abs()).sum::<f64>();
    (t, obj)
}
