//! Gauss–Legendre rules and a small adaptive panel integrator shared by the
//! contour and theta modules.

use crate::C64;
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

/// Nodes and weights on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    fn compute(n: usize) -> Self {
        assert!(n >= 1);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = (n + 1) / 2;
        for i in 0..m {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for j in 2..=n {
                    let p2 = ((2 * j - 1) as f64 * x * p1 - (j - 1) as f64 * p0) / j as f64;
                    p0 = p1;
                    p1 = p2;
                }
                let (p, pm1) = if n == 1 { (x, 1.0) } else { (p1, p0) };
                dp = n as f64 * (x * p - pm1) / (x * x - 1.0);
                let dx = p / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        GaussLegendre { nodes, weights }
    }

    /// Cached rule with `n` points.
    pub fn get(n: usize) -> Arc<GaussLegendre> {
        static CACHE: OnceLock<Mutex<HashMap<usize, Arc<GaussLegendre>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let mut guard = cache.lock().expect("gauss-legendre cache poisoned");
        guard
            .entry(n)
            .or_insert_with(|| Arc::new(GaussLegendre::compute(n)))
            .clone()
    }

    /// Integrate `f` over `[a, b]`.
    pub fn integrate<F: FnMut(f64) -> C64>(&self, a: f64, b: f64, mut f: F) -> C64 {
        let h = 0.5 * (b - a);
        let c = 0.5 * (b + a);
        let mut s = C64::new(0.0, 0.0);
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            s += f(c + h * x) * *w;
        }
        s * h
    }
}

/// Adaptive Gauss–Legendre on `[a, b]`: accept a panel when the `n` and `2n`
/// point rules agree to `tol_abs`, otherwise bisect (depth-capped).
/// Returns `(value, error_estimate)`.
pub fn adaptive<F: FnMut(f64) -> C64>(
    f: &mut F,
    a: f64,
    b: f64,
    n: usize,
    tol_abs: f64,
) -> (C64, f64) {
    let lo = GaussLegendre::get(n);
    let hi = GaussLegendre::get(2 * n);
    let mut stack = vec![(a, b, 0u32)];
    let mut total = C64::new(0.0, 0.0);
    let mut err = 0.0;
    let width = (b - a).abs().max(f64::MIN_POSITIVE);
    while let Some((x0, x1, depth)) = stack.pop() {
        let i1 = lo.integrate(x0, x1, &mut *f);
        let i2 = hi.integrate(x0, x1, &mut *f);
        let e = (i2 - i1).norm();
        let share = tol_abs * (x1 - x0).abs() / width;
        // the second test is a roundoff floor: without it, panels whose
        // integral is dominated by cancellation would be bisected forever
        if e <= share.max(1e-300) || e <= 1e-13 * i2.norm() || depth >= 40 {
            total += i2;
            err += e.min(e * 1e-3 + 1e-16 * i2.norm());
        } else {
            let mid = 0.5 * (x0 + x1);
            stack.push((mid, x1, depth + 1));
            stack.push((x0, mid, depth + 1));
        }
    }
    (total, err)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_sum_to_two() {
        for n in [1, 2, 5, 16, 24, 48, 64] {
            let g = GaussLegendre::get(n);
            let s: f64 = g.weights.iter().sum();
            assert!((s - 2.0).abs() < 1e-13, "n={n} sum={s}");
        }
    }

    #[test]
    fn integrates_polynomials_exactly() {
        let g = GaussLegendre::get(8);
        // degree 15 is integrated exactly by 8 points
        let v = g.integrate(0.0, 1.0, |x| C64::new(x.powi(15), 0.0));
        assert!((v.re - 1.0 / 16.0).abs() < 1e-15);
    }

    #[test]
    fn adaptive_handles_peaks() {
        let mut f = |x: f64| C64::new(1.0 / (1e-4 + x * x), 0.0);
        let (v, _) = adaptive(&mut f, -1.0, 1.0, 16, 1e-10);
        let want = 2.0 * (1.0f64 / 1e-2).atan() / 1e-2;
        assert!((v.re - want).abs() < 1e-8 * want);
    }
}
