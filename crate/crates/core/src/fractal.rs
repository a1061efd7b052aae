//! Fractal analysis of an orbit: the gap sequence `ε_n = (x_{n−1} − x_n)/2`,
//! counting and tube functions, Minkowski data, the fractal theta function
//! `Σ e^{−s τ(ε_n)}`, the geometric zeta function `Σ ε_n^s`, and the critical
//! time `T(ε)` with `T(ε_n) = n`.

use crate::error::{Error, Result};
use crate::fatou::{FatouConfig, FatouEvaluator};
use crate::germ::{GermKind, Orbit, ParabolicGerm};
use crate::quad::adaptive;
use crate::series::TruncSeries;
use crate::theta::ThetaEvaluator;
use crate::C64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// Smallest `Re s` accepted by [`fractal_theta`].
pub const DIRECT_MIN: f64 = 0.05;
/// Required distance of `Re s` from the abscissa of [`geometric_zeta`].
pub const ZETA_MARGIN: f64 = 0.05;

/// The gap sequence of an orbit.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FractalString {
    /// `ε_1 … ε_M`.
    pub epsilons: Vec<C64>,
    pub orbit: Orbit,
    pub k: u32,
    pub a: C64,
    /// All `ε_n` are real and positive.
    pub real_flag: bool,
    /// Index from which the real sequence is non-increasing.
    mono_start: usize,
}

/// The gap sequence `ε_n = (x_{n−1} − x_n)/2 = −(f(x_{n−1}) − x_{n−1})/2`,
/// evaluated through the displacement to avoid cancellation.
pub fn epsilons(orbit: &Orbit) -> Result<FractalString> {
    if orbit.len() < 2 {
        return Err(Error::input("orbit", "needs at least two points"));
    }
    let g = &orbit.germ;
    let eps: Vec<C64> = orbit.points[..orbit.len() - 1]
        .iter()
        .map(|x| -g.displacement(*x) * 0.5)
        .collect();
    let real_flag = orbit.is_real() && eps.iter().all(|e| e.re > 0.0);
    let mut mono_start = 0;
    if real_flag {
        for n in 1..eps.len() {
            if eps[n].re > eps[n - 1].re {
                mono_start = n;
            }
        }
    }
    Ok(FractalString {
        epsilons: eps,
        orbit: orbit.clone(),
        k: g.k(),
        a: g.a(),
        real_flag,
        mono_start,
    })
}

impl FractalString {
    pub fn len(&self) -> usize {
        self.epsilons.len()
    }

    pub fn is_empty(&self) -> bool {
        self.epsilons.is_empty()
    }

    /// `ε_n` for `n ≥ 1`.
    pub fn eps(&self, n: usize) -> C64 {
        self.epsilons[n - 1]
    }

    fn require_real(&self) -> Result<()> {
        if self.real_flag {
            Ok(())
        } else {
            Err(Error::pre(
                "counting and tube functions need a real, positive ε-sequence",
            ))
        }
    }
}

/// Value of the counting function with a flag for orbit truncation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Count {
    pub n: usize,
    /// `eps ≤ ε_M`: every available gap was counted, the true count may be larger.
    pub truncated: bool,
}

/// `n(ε) = max{n : ε_n ≥ ε}` (0 when `ε_1 < ε`).
pub fn counting_function(s: &FractalString, eps: f64) -> Result<Count> {
    s.require_real()?;
    if !(eps > 0.0) {
        return Err(Error::input("eps", "must be positive"));
    }
    let e = &s.epsilons;
    let m = e.len();
    // monotone tail: binary search for the last index with ε ≥ eps
    let tail = &e[s.mono_start..];
    let cnt = tail.partition_point(|z| z.re >= eps);
    let n = if cnt > 0 {
        s.mono_start + cnt
    } else {
        e[..s.mono_start]
            .iter()
            .rposition(|z| z.re >= eps)
            .map_or(0, |i| i + 1)
    };
    Ok(Count {
        n,
        truncated: n == m,
    })
}

/// Tube function `V(ε) = 2ε·n(ε) + x_{n(ε)}`: length of the
/// ε-neighbourhood of the real orbit.
pub fn tube_function(s: &FractalString, eps: f64) -> Result<f64> {
    let n = counting_function(s, eps)?.n;
    Ok(2.0 * eps * n as f64 + s.orbit.points[n].re)
}

/// `2∫_0^ε n(ξ) dξ`, integrating the step function exactly between its
/// breakpoints down to `ε_M`; below `ε_M` the unseen gaps contribute
/// `2(M ε_M + Σ_{m>M} ε_m)` with `Σ_{m>M} ε_m = x_M/2`.
pub fn counting_integral(s: &FractalString, eps: f64) -> Result<f64> {
    s.require_real()?;
    if !(eps > 0.0) {
        return Err(Error::input("eps", "must be positive"));
    }
    let e = &s.epsilons;
    let m = e.len();
    let floor = e[m - 1].re;
    let mut pts: Vec<f64> = e
        .iter()
        .map(|z| z.re)
        .filter(|v| *v > floor && *v < eps)
        .collect();
    pts.push(floor);
    pts.push(eps.max(floor));
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    pts.dedup();
    let mut acc = 0.0;
    for w in pts.windows(2) {
        let mid = 0.5 * (w[0] + w[1]);
        acc += counting_function(s, mid)?.n as f64 * (w[1] - w[0]);
    }
    let below = if eps >= floor {
        m as f64 * floor + 0.5 * s.orbit.points[m].re
    } else {
        return Err(Error::pre("eps is below the smallest available gap"));
    };
    Ok(2.0 * (acc + below))
}

/// `τ(ε) = (1/2k)(−2/a)^{1/(k+1)} ε^{−k/(k+1)}` with principal powers.
pub fn tau_kernel(eps: C64, k: u32, a: C64) -> Result<C64> {
    if eps.norm() == 0.0 {
        return Err(Error::input("eps", "must be nonzero"));
    }
    if k == 0 || a.norm() == 0.0 {
        return Err(Error::input("k/a", "k must be positive and a nonzero"));
    }
    let kf = k as f64;
    Ok((-2.0 / a).powf(1.0 / (kf + 1.0)) * eps.powf(-kf / (kf + 1.0)) / (2.0 * kf))
}

/// `Θ̃(s) = Σ_{n≥1} e^{−s τ(ε_n)}` over the available gaps, with the
/// geometric tail bound. Returns `(value, error)`.
pub fn fractal_theta(s: &FractalString, sv: C64) -> Result<(C64, f64)> {
    if !(sv.re >= DIRECT_MIN) {
        return Err(Error::pre(format!(
            "fractal theta sum needs Re s >= {DIRECT_MIN}, got {sv}"
        )));
    }
    let r = (-sv.re).exp();
    let factor = r / (1.0 - r);
    let mut sum = c(0.0);
    let mut abs_sum = 0.0;
    for e in &s.epsilons {
        let v = (-sv * tau_kernel(*e, s.k, s.a)?).exp();
        sum += v;
        abs_sum += v.norm();
        let bound = v.norm() * factor;
        if bound <= 1e-17 * abs_sum {
            return Ok((sum, bound + 1e-16 * abs_sum));
        }
    }
    Err(Error::Tolerance(format!(
        "fractal theta at s = {sv}: the tail bound is not reached with {} gaps",
        s.len()
    )))
}

/// `ζ(s) = Σ_{n≥1} ε_n^s` (principal powers). The gaps beyond the stored
/// orbit are summed by Euler–Maclaurin in the Fatou coordinate, where
/// consecutive gaps are unit steps apart. Returns `(value, error)`.
pub fn geometric_zeta(s: &FractalString, sv: C64) -> Result<(C64, f64)> {
    let kf = s.k as f64;
    let abscissa = kf / (kf + 1.0);
    if !(sv.re > abscissa + ZETA_MARGIN) {
        return Err(Error::pre(format!(
            "geometric zeta diverges for Re s <= {abscissa:.4} (margin {ZETA_MARGIN}); got {sv}"
        )));
    }
    let g = &s.orbit.germ;
    let direct: C64 = s.epsilons.iter().map(|e| e.powc(sv)).sum();
    // tail: gaps ε(x) = −(f(x) − x)/2 at x = x_M, x_{M+1}, …
    let xm = s.orbit.last();
    let (tail, err) = zeta_tail(g, xm, sv)?;
    Ok((direct + tail, err + 1e-15 * direct.norm()))
}

fn zeta_tail(g: &ParabolicGerm, xm: C64, sv: C64) -> Result<(C64, f64)> {
    let k = g.k() as i32;
    let kf = k as f64;
    let a = g.a();
    let formal = crate::fatou::FormalFatou::new(g)?;
    let center = g.attracting_direction(g.petal_of(xm));
    let depth = formal.tail_len().min(20);
    let eps_at = |x: C64| -g.displacement(x) * 0.5;
    let d_ratio = |x: C64| g.displacement(x) / x.powi(k + 1);
    let e_m = eps_at(xm);
    let f_m = e_m.powc(sv);
    let d_m = d_ratio(xm);
    let (_, dpsi_m) = formal.eval_with_derivative(xm, depth, center);
    // ∫_{x_M}^0 ε(x)^s ψ'(x) dx with x = x_M e^{−y}
    let pre = -f_m / (a * xm.powi(k));
    let rate = c(kf) - sv * (kf + 1.0);
    let integrand = |y: f64| -> C64 {
        let x = xm * (-y).exp();
        let (ratio, gt) = if x.norm() < 1e-25 {
            (a / d_m, c(1.0))
        } else {
            let (_, dpsi) = formal.eval_with_derivative(x, depth, center);
            (d_ratio(x) / d_m, dpsi * a * x.powi(k + 1))
        };
        pre * (rate * y).exp() * ratio.powc(sv) * gt
    };
    let decay = -rate.re;
    let ymax = 40.0 / decay;
    let mut f = integrand;
    let (integral, ierr) = adaptive(&mut f, 0.0, ymax, 24, 1e-15 * f_m.norm().max(1e-300));
    // Euler–Maclaurin: Σ_{j≥0} h(j) = ∫ h + h(0)/2 − h'(0)/12 + …
    let deps = -(g.derivative(xm) - 1.0) * 0.5;
    let dh = sv * e_m.powc(sv - 1.0) * deps / dpsi_m;
    let tail = integral + f_m * 0.5 - dh / 12.0;
    // the next Euler–Maclaurin term is smaller than h'(0) by about 1/n² ~ |x_M|^{2k}
    Ok((tail, ierr + dh.norm() / 12.0 * xm.norm().powi(2 * k)))
}

/// Result of the Minkowski fit.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MinkowskiFit {
    /// Estimated Minkowski dimension `D`.
    pub d_est: f64,
    /// Estimated Minkowski content `M`.
    pub m_est: f64,
    /// Coefficient `c` of the correction term `c ε^D`.
    pub correction: f64,
    /// `D` and `M` from the plain two-parameter fit (no correction term).
    pub d_plain: f64,
    pub m_plain: f64,
    /// RMS residual of the corrected log-log fit.
    pub residual: f64,
    /// Fit window `[eps_lo, eps_hi]`.
    pub eps_lo: f64,
    pub eps_hi: f64,
    pub points: usize,
}

/// Fit of `log V(ε) = log M + (1 − D) log ε + c ε^D` on the ladder
/// `ε = ε_1 2^{−i/4}`, dropping the largest and the smallest decade.
///
/// The tube volume of an orbit is `M ε^{1−D}(1 + O(ε^D))`: the number of
/// points `n(ε)` and the position `x_{n(ε)}` both carry relative corrections
/// of order `1/n(ε) ~ ε^D`. Left out, that term biases the slope enough to
/// move `M` by several percent for `k = 1`. The exponent of the correction is
/// taken self-consistently from the current estimate of `D`.
pub fn minkowski_fit(s: &FractalString, residual_tol: f64) -> Result<MinkowskiFit> {
    s.require_real()?;
    if s.len() < 10_000 {
        return Err(Error::pre("Minkowski fit needs at least 10^4 orbit points"));
    }
    let e1 = s.eps(1).re;
    let em = s.eps(s.len()).re;
    let hi = e1 / 10.0;
    let lo = em * 10.0;
    if !(lo < hi / 100.0) {
        return Err(Error::pre("the ε-range is too short for a fit window"));
    }
    let mut eps_pts = Vec::new();
    let mut ys = Vec::new();
    let step = 0.5f64.powf(0.25);
    let mut eps = hi;
    while eps >= lo {
        eps_pts.push(eps);
        ys.push(tube_function(s, eps)?.ln());
        eps *= step;
    }
    let xs: Vec<f64> = eps_pts.iter().map(|e| e.ln()).collect();
    let plain = least_squares(&[&vec![1.0; xs.len()], &xs], &ys)?;
    let mut d = 1.0 - plain[1];
    let mut coef = plain.clone();
    for _ in 0..50 {
        let corr: Vec<f64> = eps_pts.iter().map(|e| e.powf(d)).collect();
        coef = least_squares(&[&vec![1.0; xs.len()], &xs, &corr], &ys)?;
        let next = 1.0 - coef[1];
        let done = (next - d).abs() < 1e-12;
        d = next;
        if done {
            break;
        }
    }
    if !(0.0..1.0).contains(&d) {
        return Err(Error::conv(format!("Minkowski fit gave D = {d}")));
    }
    let n = xs.len() as f64;
    let residual = (xs
        .iter()
        .zip(&eps_pts)
        .zip(&ys)
        .map(|((x, e), y)| (y - coef[0] - coef[1] * x - coef[2] * e.powf(d)).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    if residual > residual_tol {
        return Err(Error::Tolerance(format!(
            "Minkowski fit residual {residual:e} exceeds {residual_tol:e}"
        )));
    }
    Ok(MinkowskiFit {
        d_est: d,
        m_est: coef[0].exp(),
        correction: coef[2],
        d_plain: 1.0 - plain[1],
        m_plain: plain[0].exp(),
        residual,
        eps_lo: lo,
        eps_hi: hi,
        points: xs.len(),
    })
}

/// Ordinary least squares `min ‖Σ_j c_j cols_j − y‖` via normal equations on
/// centered-and-scaled columns (the systems here have at most three unknowns).
fn least_squares(cols: &[&Vec<f64>], y: &[f64]) -> Result<Vec<f64>> {
    let m = cols.len();
    let scale: Vec<f64> = cols
        .iter()
        .map(|c| {
            c.iter()
                .fold(0.0f64, |a, v| a.max(v.abs()))
                .max(f64::MIN_POSITIVE)
        })
        .collect();
    let mut a = vec![vec![0.0; m + 1]; m];
    for i in 0..m {
        for j in 0..m {
            a[i][j] = cols[i]
                .iter()
                .zip(cols[j].iter())
                .map(|(u, v)| u * v)
                .sum::<f64>()
                / (scale[i] * scale[j]);
        }
        a[i][m] = cols[i].iter().zip(y).map(|(u, v)| u * v).sum::<f64>() / scale[i];
    }
    for p in 0..m {
        let piv = (p..m)
            .max_by(|&r, &q| a[r][p].abs().total_cmp(&a[q][p].abs()))
            .unwrap_or(p);
        a.swap(p, piv);
        if a[p][p].abs() < 1e-300 {
            return Err(Error::conv("singular least-squares system"));
        }
        for r in 0..m {
            if r != p {
                let f = a[r][p] / a[p][p];
                for cidx in p..=m {
                    a[r][cidx] -= f * a[p][cidx];
                }
            }
        }
    }
    Ok((0..m).map(|i| a[i][m] / a[i][i] / scale[i]).collect())
}

/// The orbit `φ(x_n)` of the conjugated germ `φ∘f∘φ^{−1}`, where
/// `a φ^{k+1} = f − x` (tangent to the identity). Its dynamic theta function is
/// the fractal theta function of the original orbit.
pub fn conjugated_orbit(orbit: &Orbit) -> Result<Orbit> {
    let (conj, phi) = conjugated_germ(&orbit.germ)?;
    let points: Vec<C64> = orbit.points.iter().map(|x| phi.eval(*x)).collect();
    let t_values = points.iter().map(|x| conj.t(*x)).collect();
    Ok(Orbit {
        petal: conj.petal_of(points[0]),
        x0: points[0],
        germ: conj,
        points,
        t_values,
    })
}

/// The germ `f̃ = φ ∘ f ∘ φ^{−1}` whose displacement is exactly the model one,
/// together with `φ`. The germ is widened first so that the conjugate keeps
/// enough terms.
pub fn conjugated_germ(g: &ParabolicGerm) -> Result<(ParabolicGerm, TruncSeries)> {
    let wide_n = WIDE_TRUNCATION.max(g.truncation());
    let wide = match g.kind() {
        GermKind::Model => ParabolicGerm::model_of(g.k(), g.a(), wide_n)?,
        GermKind::Polynomial => ParabolicGerm::from_coefficients(g.series().coeffs(), wide_n)?,
        GermKind::Truncated => g.clone(),
    }
    .with_eval_radius(g.eval_radius());
    let phi = wide.conjugacy_phi()?;
    let conj = wide.conjugate(&phi)?;
    Ok((conj, phi))
}

/// Truncation used when a germ is conjugated by a full series.
const WIDE_TRUNCATION: usize = 47;

/// The critical time `T(ε) = ψ_𝔸(g^{−1}(2ε)) + 1` with `g(x) = x − f(x)`,
/// normalized so that `T(ε_n) = n`.
#[derive(Clone, Debug)]
pub struct CriticalTime {
    pub fatou: FatouEvaluator,
}

impl CriticalTime {
    pub fn new(orbit: &Orbit, config: FatouConfig) -> Result<Self> {
        Ok(CriticalTime {
            fatou: FatouEvaluator::from_orbit(orbit, config)?,
        })
    }

    /// `g^{−1}(2ε)` on the orbit's petal.
    pub fn preimage(&self, eps: C64) -> Result<C64> {
        gap_preimage(self.fatou.germ(), self.fatou.petal, eps)
    }

    pub fn eval(&self, eps: C64) -> Result<C64> {
        Ok(self.fatou.eval(self.preimage(eps)?)? + 1.0)
    }
}

/// Solve `x − f(x) = 2ε` for `x` in attracting petal `l`, starting from the
/// root of the leading term `−a x^{k+1} = 2ε` closest to the petal axis.
pub fn gap_preimage(g: &ParabolicGerm, l: usize, eps: C64) -> Result<C64> {
    if eps.norm() == 0.0 || !eps.re.is_finite() || !eps.im.is_finite() {
        return Err(Error::input("eps", "must be finite and nonzero"));
    }
    let k = g.k();
    let kf = k as f64;
    let axis = g.attracting_direction(l);
    let base = (-2.0 * eps / g.a()).powf(1.0 / (kf + 1.0));
    let mut x = (0..=k)
        .map(|j| base * C64::from_polar(1.0, 2.0 * PI * j as f64 / (kf + 1.0)))
        .min_by(|p, q| {
            let dp = (p * C64::from_polar(1.0, -axis)).arg().abs();
            let dq = (q * C64::from_polar(1.0, -axis)).arg().abs();
            dp.partial_cmp(&dq).unwrap()
        })
        .unwrap();
    let target = 2.0 * eps;
    let mut ok = false;
    for _ in 0..80 {
        let r = -g.displacement(x) - target;
        let d = 1.0 - g.derivative(x);
        let dx = r / d;
        x -= dx;
        if dx.norm() <= 1e-16 * x.norm() {
            ok = true;
            break;
        }
    }
    if !ok {
        let r = (-g.displacement(x) - target).norm();
        if r > 1e-13 * target.norm() {
            return Err(Error::conv(format!(
                "g^(-1)(2ε) at ε = {eps} did not converge"
            )));
        }
    }
    let sector = (-g.a() * x.powu(k)).arg().abs();
    if sector >= PI / 2.0 || g.petal_of(x) != l || x.norm() > g.eval_radius() {
        return Err(Error::pre(format!(
            "ε = {eps} is outside the range of g/2 on petal {l} (preimage {x})"
        )));
    }
    Ok(x)
}

/// `T(ε)` for a single value (builds a Fatou evaluator).
pub fn critical_time(orbit: &Orbit, eps: C64) -> Result<C64> {
    CriticalTime::new(orbit, FatouConfig::precise())?.eval(eps)
}

/// Recovery of the critical time from the fractal theta function.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct CriticalRecovery {
    /// `(1/2πi) ∮ Θ̃(s)/s · e^{s τ(ε)} ds`.
    pub value: C64,
    pub critical_time: C64,
    /// `value − critical_time`.
    pub constant: C64,
    pub error: f64,
}

/// Hankel transform of the fractal theta function at the kernel value
/// `τ(ε)`, compared with `T(ε)`. `e` must be built by
/// [`ThetaEvaluator::fractal`].
pub fn recover_critical_time(e: &ThetaEvaluator, eps: C64) -> Result<CriticalRecovery> {
    if e.weight_kind() != crate::theta::Weight::Fractal {
        return Err(Error::input("evaluator", "needs the fractal weight"));
    }
    let x = gap_preimage(e.fatou().germ(), e.fatou().petal, eps)?;
    let rec = e.recover_fatou(x)?;
    let t = rec.psi + 1.0;
    Ok(CriticalRecovery {
        value: rec.value,
        critical_time: t,
        constant: rec.value - t,
        error: rec.error,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::germ::iterate_orbit;
    use crate::theta::ThetaConfig;
    use proptest::prelude::*;

    fn model_string(m: usize) -> FractalString {
        let g = ParabolicGerm::model_of(1, c(-1.0), 8).unwrap();
        epsilons(&iterate_orbit(&g, c(1.0), m).unwrap()).unwrap()
    }

    #[test]
    fn epsilon_examples() {
        let s = model_string(100);
        assert!((s.eps(1) - 0.25).norm() < 1e-15);
        assert!((s.eps(2) - 1.0 / 12.0).norm() < 1e-15);
        assert!((s.eps(3) - 1.0 / 24.0).norm() < 1e-15);
        for n in 1..100 {
            let p = &s.orbit.points;
            assert!((s.eps(n) - (p[n - 1] - p[n]) * 0.5).norm() < 1e-13);
        }
        assert!(s.real_flag);
        let g = ParabolicGerm::polynomial(&[1.0, -1.0]).unwrap();
        let z = epsilons(&iterate_orbit(&g, C64::new(0.1, 0.05), 50).unwrap()).unwrap();
        assert!(!z.real_flag && z.eps(3).im != 0.0);
        assert!(counting_function(&z, 1e-3).unwrap_err().is_input());
    }

    #[test]
    fn counting_and_tube_examples() {
        let s = model_string(1000);
        assert_eq!(counting_function(&s, 1.0 / 12.0).unwrap().n, 2);
        assert_eq!(counting_function(&s, 0.3).unwrap().n, 0);
        let all = counting_function(&s, 1e-12).unwrap();
        assert!(all.truncated && all.n == 1000);
        assert!((tube_function(&s, 1.0 / 12.0).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert!((tube_function(&s, 0.3).unwrap() - 1.0).abs() < 1e-15);
        // continuity across a breakpoint
        let e5 = s.eps(5).re;
        let left = tube_function(&s, e5).unwrap();
        let right = tube_function(&s, e5 * (1.0 + 1e-15)).unwrap();
        assert!((left - right).abs() < 1e-12);
    }

    #[test]
    fn tau_examples() {
        assert!((tau_kernel(c(0.5), 1, c(-1.0)).unwrap() - 1.0).norm() < 1e-15);
        let s = model_string(100);
        for n in 0..50usize {
            let v = tau_kernel(s.eps(n + 1), 1, c(-1.0)).unwrap();
            assert!((v - (((n + 1) * (n + 2)) as f64).sqrt()).norm() < 1e-12 * v.norm());
        }
        let (l, e) = (3.7, C64::new(0.01, 0.002));
        let lhs = tau_kernel(e * l, 2, c(-1.0)).unwrap();
        let rhs = tau_kernel(e, 2, c(-1.0)).unwrap() * l.powf(-2.0 / 3.0);
        assert!((lhs - rhs).norm() < 1e-13 * lhs.norm());
    }

    #[test]
    fn fractal_theta_examples() {
        let s = model_string(2000);
        let (v, _) = fractal_theta(&s, c(1.0)).unwrap();
        let oracle: f64 = (1..200)
            .map(|n| (-((n * (n + 1)) as f64).sqrt()).exp())
            .sum();
        assert!((v - oracle).norm() < 1e-14);
        let (v, _) = fractal_theta(&s, c(40.0)).unwrap();
        let lead = (-40.0 * tau_kernel(s.eps(1), 1, c(-1.0)).unwrap()).exp();
        assert!((v / lead - 1.0).norm() < 1e-6);
        assert!(fractal_theta(&s, c(0.01)).unwrap_err().is_input());
        let short = model_string(10);
        assert!(matches!(
            fractal_theta(&short, c(0.1)),
            Err(Error::Tolerance(_))
        ));
    }

    #[test]
    fn zeta_examples() {
        let s = model_string(10_000);
        let (z, _) = geometric_zeta(&s, c(1.0)).unwrap();
        assert!((z - 0.5).norm() < 1e-10, "{z}");
        let (z2, _) = geometric_zeta(&s, c(2.0)).unwrap();
        let oracle: f64 = (1..200_000u64)
            .map(|n| {
                let v = n as f64 * (n as f64 + 1.0);
                1.0 / (4.0 * v * v)
            })
            .sum();
        assert!((z2 - oracle).norm() < 1e-12, "{z2} vs {oracle}");
        assert!(geometric_zeta(&s, c(0.4)).unwrap_err().is_input());
        let (z3, _) = geometric_zeta(&s, C64::new(0.8, 1.0)).unwrap();
        let longer = model_string(40_000);
        let (z4, _) = geometric_zeta(&longer, C64::new(0.8, 1.0)).unwrap();
        assert!((z3 - z4).norm() < 1e-9, "{z3} vs {z4}");
    }

    #[test]
    fn counting_integral_matches_tube() {
        let g = ParabolicGerm::polynomial(&[1.0, -1.0, 0.2]).unwrap();
        let s = epsilons(&iterate_orbit(&g, c(0.3), 3000).unwrap()).unwrap();
        for i in 0..50 {
            let eps = s.eps(1).re * (0.8f64).powi(i);
            let v = tube_function(&s, eps).unwrap();
            let w = counting_integral(&s, eps).unwrap();
            assert!((v - w).abs() < 1e-12, "{eps}: {v} vs {w}");
        }
    }

    #[test]
    fn critical_time_hits_integers() {
        let g = ParabolicGerm::polynomial(&[1.0, -1.0, 0.2]).unwrap();
        let orbit = iterate_orbit(&g, c(0.2), 100).unwrap();
        let s = epsilons(&orbit).unwrap();
        let ct = CriticalTime::new(&orbit, FatouConfig::precise()).unwrap();
        for n in 1..=50 {
            let t = ct.eval(s.eps(n)).unwrap();
            assert!((t - n as f64).norm() < 1e-7, "{n}: {t}");
        }
        // model closed form: ψ = t − t0 with t = 1/x, x = g^{-1}(2ε)
        let m = ParabolicGerm::model_of(1, c(-1.0), 8).unwrap();
        let mo = iterate_orbit(&m, c(0.5), 10).unwrap();
        let ctm = CriticalTime::new(&mo, FatouConfig::precise()).unwrap();
        let eps: f64 = 0.01;
        // x²/(1+x) = 2ε
        let x = (2.0 * eps + (4.0 * eps * eps + 8.0 * eps).sqrt()) / 2.0;
        let want = 1.0 / x - 2.0 + 1.0;
        assert!((ctm.eval(c(eps)).unwrap() - want).norm() < 1e-12);
        assert!(ct.preimage(c(-0.01)).is_err());
    }

    #[test]
    fn minkowski_fit_recovers_model_constants() {
        for k in [1u32, 2] {
            let g = ParabolicGerm::model_of(k, c(-1.0), 8).unwrap();
            let s = epsilons(&iterate_orbit(&g, c(0.5), 100_000).unwrap()).unwrap();
            let fit = minkowski_fit(&s, 1e-2).unwrap();
            let kf = k as f64;
            let d = kf / (kf + 1.0);
            let m = (kf + 1.0) / kf * 2f64.powf(1.0 / (kf + 1.0));
            assert!((fit.d_est - d).abs() < 1e-3, "k={k}: {fit:?}");
            assert!((fit.m_est / m - 1.0).abs() < 1e-2, "k={k}: {fit:?}");
        }
        assert!(minkowski_fit(&model_string(100), 1e-2)
            .unwrap_err()
            .is_input());
    }

    #[test]
    fn fractal_theta_is_theta_of_conjugated_orbit() {
        let g = ParabolicGerm::polynomial(&[1.0, -1.0, 0.2]).unwrap();
        let o = iterate_orbit(&g, c(0.1), 4000).unwrap();
        let s = epsilons(&o).unwrap();
        let co = conjugated_orbit(&o).unwrap();
        // the displacement of f at x_n is the model displacement at φ(x_n)
        for n in [0, 10, 1000] {
            let x = o.points[n];
            let d = g.eval(x) - x;
            let y = co.points[n];
            assert!((d + y * y).norm() < 1e-13 * d.norm(), "{n}: {d} {y}");
        }
        for n in 0..1000 {
            let tau = tau_kernel(s.eps(n + 1), 1, g.a()).unwrap();
            assert!((tau - co.t_values[n]).norm() < 1e-13 * co.t_values[n].norm());
        }
        let ce = ThetaEvaluator::new(&co, ThetaConfig::default()).unwrap();
        for sv in [c(1.0), C64::new(2.0, 1.0), C64::new(0.5, -3.0)] {
            let a = fractal_theta(&s, sv).unwrap().0;
            let b = ce.theta_direct(sv).unwrap();
            assert!((a - b).norm() < 1e-12 * (1.0 + b.norm()), "{sv}: {a} {b}");
        }
    }

    #[test]
    fn critical_time_recovery_and_fractal_residue() {
        let g = ParabolicGerm::polynomial(&[1.0, -1.0, 0.2]).unwrap();
        let o = iterate_orbit(&g, c(0.1), 4000).unwrap();
        let s = epsilons(&o).unwrap();
        let fe = ThetaEvaluator::fractal(&o, ThetaConfig::default()).unwrap();
        let (res, err) = fe.residue_at_zero(0.5).unwrap();
        assert!((res - 1.0).norm() < 1e-12 && err < 1e-10, "{res} {err}");
        for eps in [s.eps(3).re, 1e-3, 5e-4] {
            let r = recover_critical_time(&fe, c(eps)).unwrap();
            assert!((r.constant + 0.5).norm() < 1e-9, "{eps}: {r:?}");
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn counting_is_monotone(e1 in 1e-7f64..0.3, e2 in 1e-7f64..0.3) {
            let s = model_string(3000);
            let (lo, hi) = if e1 < e2 { (e1, e2) } else { (e2, e1) };
            prop_assert!(counting_function(&s, lo).unwrap().n >= counting_function(&s, hi).unwrap().n);
        }
    }
}
