//! Formal and sectorial Fatou coordinates, and term-wise Borel transforms.
//!
//! The formal coordinate is `ψ̂ = ∫ 1/ξ` for the infinitesimal generator `ξ`:
//!
//! `ψ̂(x) = r_{−k}x^{−k} + … + r_{−1}x^{−1} + ρ log x + C + Σ_{j≥1} r_j x^j`.
//!
//! Sectorial coordinates are computed by the accelerated Abel limit
//! `ψ(x) = ψ̂^{(J)}(F^{∘n}(x)) − σ n`, where `F = f` (σ = +1) on attracting
//! petals and `F = f^{−1}` (σ = −1) on repelling ones, stopping once the first
//! omitted tail term is below the tolerance.

use crate::error::{Error, Result};
use crate::germ::{Orbit, ParabolicGerm};
use crate::series::TruncSeries;
use crate::special::{gamma, rgamma};
use crate::C64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::sync::Arc;

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// Logarithm with the cut opposite to the direction `center`:
/// `ln|x| + i(center + Arg(x e^{−i center}))`.
pub fn log_branch(x: C64, center: f64) -> C64 {
    let rel = (x * C64::from_polar(1.0, -center)).arg();
    C64::new(x.norm().ln(), center + rel)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FormalFatou {
    pub k: u32,
    pub a: C64,
    /// `r_{−k}, …, r_{−1}`.
    pub principal: Vec<C64>,
    pub rho: C64,
    pub constant: C64,
    /// `Σ_{j≥1} r_j x^j`.
    pub tail: TruncSeries,
    /// Largest relative Abel residual found by the construction check.
    pub abel_residual: f64,
}

impl FormalFatou {
    /// `ψ̂ = ∫ 1/ξ`, with the Abel equation checked on the formal level.
    pub fn new(f: &ParabolicGerm) -> Result<Self> {
        let k = f.k() as i64;
        let xi = f.infinitesimal_generator()?;
        let inv = xi.reciprocal()?;
        let principal: Vec<C64> = (1..=k)
            .rev()
            .map(|j| -inv.coeff(-j - 1) / j as f64)
            .collect();
        let rho = inv.coeff(-1);
        let top = inv.truncation_order() + 1;
        let tail_cs: Vec<C64> = (1..top).map(|j| inv.coeff(j - 1) / j as f64).collect();
        let tail = if tail_cs.is_empty() {
            TruncSeries::zero(1)
        } else {
            TruncSeries::new(1, tail_cs)
        };
        let mut ff = FormalFatou {
            k: f.k(),
            a: f.a(),
            principal,
            rho,
            constant: c(0.0),
            tail,
            abel_residual: 0.0,
        };
        let rho_check = f.residual_invariant();
        if (rho_check - rho).norm() > 1e-8 * (1.0 + rho.norm()) {
            return Err(Error::Tolerance(format!(
                "log coefficient {rho} disagrees with the iterative residue {rho_check}"
            )));
        }
        ff.abel_residual = ff.abel_check(f)?;
        if ff.abel_residual > 1e-9 {
            return Err(Error::Tolerance(format!(
                "formal Abel residual {:e} exceeds tolerance",
                ff.abel_residual
            )));
        }
        Ok(ff)
    }

    /// Largest coefficient of `ψ̂∘f − ψ̂ − 1`, relative to the size of the
    /// terms that cancel at that order. For the tail composition that size is
    /// bounded by the coefficients of `|t|∘|f|` (coefficient-wise moduli),
    /// which grow much faster than those of `t∘f` itself.
    fn abel_check(&self, f: &ParabolicGerm) -> Result<f64> {
        let k = self.k as i64;
        let order = self.tail.truncation_order().min(f.work_order());
        let fs = f.formal_series(order + k + 1);
        let p = TruncSeries::new(-k, self.principal.clone()).pad_to(order);
        let pf = p.compose(&fs)?;
        let logpart = fs.shift(-1).log()?.scale(self.rho);
        let t = self.tail.truncate(order);
        let tf = t.compose(&fs)?;
        let modulus = |x: &TruncSeries| {
            let cs = x.coeffs().iter().map(|v| c(v.norm())).collect();
            TruncSeries::new(x.lowest_exponent(), cs)
        };
        let tf_bound = modulus(&t).compose(&modulus(&fs))?;
        let resid =
            &(&(&(&pf - &p) + &logpart) + &(&tf - &t)) - &TruncSeries::constant(c(1.0), order);
        let hi = resid.truncation_order().min(order - k);
        let mut worst: f64 = 0.0;
        for e in -k..hi {
            let scale = 1.0
                + pf.coeff(e).norm()
                + p.coeff(e).norm()
                + logpart.coeff(e).norm()
                + tf_bound.coeff(e).norm()
                + t.coeff(e).norm();
            worst = worst.max(resid.coeff(e).norm() / scale);
        }
        Ok(worst)
    }

    /// `r_j` for `j ≥ 1` (zero when unknown).
    pub fn r(&self, j: i64) -> C64 {
        if j >= 1 {
            self.tail.coeff(j)
        } else if j < 0 && -j <= self.k as i64 {
            self.principal[(self.k as i64 + j) as usize]
        } else {
            c(0.0)
        }
    }

    /// Number of reliable tail coefficients.
    pub fn tail_len(&self) -> usize {
        (self.tail.truncation_order() - 1).max(0) as usize
    }

    /// The model Fatou coordinate has no corrections.
    pub fn is_trivial(&self) -> bool {
        self.rho.norm() == 0.0
            && self.principal[1..].iter().all(|z| z.norm() == 0.0)
            && self.tail.is_zero()
    }

    /// `ψ̂^{(J)}(x)` and its derivative, log branch centered at `center`.
    pub fn eval_with_derivative(&self, x: C64, j: usize, center: f64) -> (C64, C64) {
        let k = self.k as i64;
        let xinv = x.inv();
        let mut v = self.constant + self.rho * log_branch(x, center);
        let mut d = self.rho * xinv;
        for (i, r) in self.principal.iter().enumerate() {
            let e = -(k - i as i64);
            let p = xinv.powi(-e as i32);
            v += r * p;
            d += r * p * xinv * e as f64;
        }
        let jmax = j.min(self.tail_len());
        let mut acc = c(0.0);
        let mut dacc = c(0.0);
        for e in (1..=jmax as i64).rev() {
            let r = self.tail.coeff(e);
            dacc = dacc * x + acc;
            acc = acc * x + r;
        }
        // acc = Σ r_e x^{e−1}; value x·acc, derivative acc + x·dacc
        v += acc * x;
        d += acc + dacc * x;
        (v, d)
    }

    /// `ψ̂^{(J)}(x)`: principal part + `ρ log x` + `C` + first `J` tail terms.
    pub fn eval_truncated(&self, x: C64, j: usize, center: f64) -> Result<C64> {
        if x.norm() == 0.0 {
            return Err(Error::input(
                "x",
                "formal Fatou coordinate is singular at 0",
            ));
        }
        let rel = (x * C64::from_polar(1.0, -center)).arg();
        if (rel.abs() - PI).abs() < 1e-14 {
            return Err(Error::input("x", "point lies on the log cut"));
        }
        Ok(self.eval_with_derivative(x, j, center).0)
    }

    /// Constant of the expansion in `t`: `ψ̂ = t − (ρ/k) log t + C' + o(1)`
    /// on the sector whose axis is `axis` (log centered there):
    /// `C' = C + (ρ/k)(ln(1/(|a|k)) + i k axis)` for attracting axes; the
    /// same formula with `log(−t)` bookkeeping holds on repelling axes.
    pub fn c_prime(&self, axis: f64) -> C64 {
        let kf = self.k as f64;
        let l = C64::new((1.0 / (self.a.norm() * kf)).ln(), kf * axis);
        self.constant + self.rho / kf * l
    }

    /// Bound on `|r_{J+1} x^{J+1}|`, the first omitted tail term.
    pub fn omitted_term(&self, x: C64, j: usize) -> f64 {
        if j >= self.tail_len() {
            return f64::INFINITY;
        }
        let e = j as i32 + 1;
        let r1 = self.tail.coeff(e as i64).norm();
        let r2 = if (j + 1) < self.tail_len() {
            self.tail.coeff(e as i64 + 1).norm() * x.norm()
        } else {
            0.0
        };
        (r1 + r2) * x.norm().powi(e)
    }
}

/// Which petal family a sectorial coordinate lives on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Attracting,
    Repelling,
}

/// Tunables of the accelerated Abel limit.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct FatouConfig {
    /// Tail terms used (`J`).
    pub depth: usize,
    /// Iteration cap.
    pub n_max: usize,
    /// Target absolute error.
    pub tol: f64,
}

impl Default for FatouConfig {
    fn default() -> Self {
        FatouConfig {
            depth: 6,
            n_max: 100_000,
            tol: 1e-9,
        }
    }
}

impl FatouConfig {
    /// Tighter settings used where theta quadrature needs near machine precision.
    pub fn precise() -> Self {
        FatouConfig {
            depth: 20,
            n_max: 100_000,
            tol: 1e-14,
        }
    }
}

/// A sectorial Fatou coordinate without additive normalization: it agrees
/// with `ψ̂` (constant `C = 0`) asymptotically on its sector.
#[derive(Clone, Debug)]
pub struct SectorialCoord {
    pub germ: ParabolicGerm,
    pub formal: Arc<FormalFatou>,
    pub direction: Direction,
    /// Direction of the petal axis; also the center of the log branch.
    pub axis: f64,
    pub config: FatouConfig,
    r_min: f64,
}

impl SectorialCoord {
    pub fn new(
        germ: &ParabolicGerm,
        formal: Arc<FormalFatou>,
        direction: Direction,
        axis: f64,
        config: FatouConfig,
    ) -> Self {
        let depth = config.depth.min(formal.tail_len().saturating_sub(2));
        let config = FatouConfig { depth, ..config };
        let r_min = (2.0f64).max((depth as f64 + 1.0) / PI);
        SectorialCoord {
            germ: germ.clone(),
            formal,
            direction,
            axis,
            config,
            r_min,
        }
    }

    fn sigma(&self) -> f64 {
        match self.direction {
            Direction::Attracting => 1.0,
            Direction::Repelling => -1.0,
        }
    }

    fn exact(&self) -> bool {
        self.germ.is_model()
    }

    /// One step of the dynamics that pushes points toward 0 on this petal.
    fn forward(&self, x: C64) -> Result<C64> {
        match self.direction {
            Direction::Attracting => Ok(self.germ.eval(x)),
            Direction::Repelling => self.germ.inverse(x),
        }
    }

    /// Inverse of [`forward`](Self::forward).
    fn backward(&self, y: C64) -> Result<C64> {
        match self.direction {
            Direction::Attracting => self.germ.inverse(y),
            Direction::Repelling => Ok(self.germ.eval(y)),
        }
    }

    /// Derivative of `forward` at `x` given `y = forward(x)`.
    fn forward_derivative(&self, x: C64, y: C64) -> C64 {
        match self.direction {
            Direction::Attracting => self.germ.derivative(x),
            Direction::Repelling => self.germ.derivative(y).inv(),
        }
    }

    fn in_asymptotic_region(&self, y: C64) -> bool {
        let st = self.germ.t(y) * self.sigma();
        st.re >= self.r_min
            && st.re >= 0.5 * st.norm()
            && self.formal.omitted_term(y, self.config.depth) < self.config.tol / 10.0
    }

    /// `t` on this petal's branch.
    pub fn t_inverse(&self, t: C64) -> C64 {
        let kf = self.germ.k() as f64;
        let q = -C64::from_polar(1.0, -kf * self.axis) / (self.germ.a() * kf * t);
        C64::from_polar(1.0, self.axis) * q.powf(1.0 / kf)
    }

    /// Raw value and derivative.
    pub fn eval_with_derivative(&self, x: C64) -> Result<(C64, C64)> {
        if !(x.norm() > 0.0) || !x.re.is_finite() || !x.im.is_finite() {
            return Err(Error::input("x", "must be finite and nonzero"));
        }
        if self.exact() {
            let kf = self.germ.k() as f64;
            let t = self.germ.t(x);
            return Ok((t, -t * kf / x));
        }
        let mut y = x;
        let mut dprod = c(1.0);
        let mut n = 0usize;
        while !self.in_asymptotic_region(y) {
            if n >= self.config.n_max {
                return Err(Error::conv(format!(
                    "Fatou iteration from {x} did not reach the asymptotic region in {} steps",
                    self.config.n_max
                )));
            }
            let z = self.forward(y)?;
            if !(z.norm() < y.norm() * 1.5 + 1e-300) || !z.re.is_finite() {
                return Err(Error::pre(format!("point {x} is outside the petal")));
            }
            dprod *= self.forward_derivative(y, z);
            y = z;
            n += 1;
        }
        let (v, d) = self
            .formal
            .eval_with_derivative(y, self.config.depth, self.axis);
        Ok((v - self.sigma() * n as f64, d * dprod))
    }

    pub fn eval(&self, x: C64) -> Result<C64> {
        self.eval_with_derivative(x).map(|p| p.0)
    }

    /// Point `x` with raw value `tau`.
    pub fn inverse(&self, tau: C64) -> Result<C64> {
        let sigma = self.sigma();
        let kf = self.germ.k() as f64;
        let rho_k = self.formal.rho / kf;
        let cp = self.formal.c_prime(self.axis);
        // model-type seed: solve σ-oriented  t − (ρ/k) log(σ t) + C' = τ'
        let seed = |tp: C64| -> C64 {
            let mut t = tp - cp;
            for _ in 0..4 {
                let lt = (t * sigma).ln();
                t = tp - cp + rho_k * lt;
            }
            self.t_inverse(t)
        };
        if self.exact() {
            return Ok(self.t_inverse(tau));
        }
        let mut n = 0usize;
        let mut y;
        loop {
            let tp = tau + sigma * n as f64;
            y = seed(tp);
            if (tp * sigma).re > 0.0 && self.in_asymptotic_region(y) {
                break;
            }
            n = if n == 0 { 1 } else { (n * 3) / 2 + 1 };
            if n > self.config.n_max {
                return Err(Error::conv(format!(
                    "no asymptotic shift found for tau = {tau}"
                )));
            }
        }
        let tp = tau + sigma * n as f64;
        for _ in 0..60 {
            let (v, d) = self
                .formal
                .eval_with_derivative(y, self.config.depth, self.axis);
            let dy = (v - tp) / d;
            let mut step = dy;
            if step.norm() > 0.5 * y.norm() {
                step *= 0.5 * y.norm() / step.norm();
            }
            y -= step;
            if dy.norm() <= 1e-15 * y.norm() {
                break;
            }
        }
        let mut x = y;
        for _ in 0..n {
            x = self.backward(x)?;
        }
        // polish on the full coordinate
        for _ in 0..3 {
            let (v, d) = self.eval_with_derivative(x)?;
            let r = v - tau;
            if r.norm() <= self.config.tol * 0.1 {
                break;
            }
            x -= r / d;
        }
        let (v, _) = self.eval_with_derivative(x)?;
        if (v - tau).norm() > 100.0 * self.config.tol.max(1e-13 * tau.norm()) {
            return Err(Error::conv(format!(
                "Fatou inverse at {tau} left residual {:e}",
                (v - tau).norm()
            )));
        }
        Ok(x)
    }
}

/// The normalized attracting Fatou coordinate `ψ_𝔸` with `ψ_𝔸(x0) = 0`.
#[derive(Clone, Debug)]
pub struct FatouEvaluator {
    pub coord: SectorialCoord,
    pub x0: C64,
    /// Raw value at `x0` (subtracted to normalize).
    pub offset: C64,
    pub petal: usize,
}

impl FatouEvaluator {
    pub fn new(germ: &ParabolicGerm, x0: C64, config: FatouConfig) -> Result<Self> {
        let formal = Arc::new(FormalFatou::new(germ)?);
        Self::with_formal(germ, formal, x0, config)
    }

    pub fn with_formal(
        germ: &ParabolicGerm,
        formal: Arc<FormalFatou>,
        x0: C64,
        config: FatouConfig,
    ) -> Result<Self> {
        let petal = germ.petal_of(x0);
        let axis = germ.attracting_direction(petal);
        let coord = SectorialCoord::new(germ, formal, Direction::Attracting, axis, config);
        let offset = coord.eval(x0)?;
        Ok(FatouEvaluator {
            coord,
            x0,
            offset,
            petal,
        })
    }

    pub fn from_orbit(orbit: &Orbit, config: FatouConfig) -> Result<Self> {
        Self::new(&orbit.germ, orbit.x0, config)
    }

    pub fn germ(&self) -> &ParabolicGerm {
        &self.coord.germ
    }

    pub fn formal(&self) -> &FormalFatou {
        &self.coord.formal
    }

    /// `ψ_𝔸(x)`.
    pub fn eval(&self, x: C64) -> Result<C64> {
        Ok(self.coord.eval(x)? - self.offset)
    }

    /// `ψ_𝔸'(x)` by the chain rule along the orbit.
    pub fn derivative(&self, x: C64) -> Result<C64> {
        Ok(self.coord.eval_with_derivative(x)?.1)
    }

    pub fn eval_with_derivative(&self, x: C64) -> Result<(C64, C64)> {
        let (v, d) = self.coord.eval_with_derivative(x)?;
        Ok((v - self.offset, d))
    }

    /// `ψ_𝔸^{−1}(τ)`.
    pub fn inverse(&self, tau: C64) -> Result<C64> {
        self.coord.inverse(tau + self.offset)
    }

    /// `C'_𝔸`: `ψ_𝔸 = t − (ρ/k) log t + C'_𝔸 + o(1)`.
    pub fn c_prime(&self) -> C64 {
        self.coord.formal.c_prime(self.coord.axis) - self.offset
    }
}

/// Result of a term-wise Borel transform.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BorelValue {
    Value(C64),
    /// `scale · δ₀^{(order)}`: not a function value.
    Dirac {
        order: u32,
        scale: C64,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BorelKind {
    Minor,
    Major,
}

/// `log s` with the cut along the ray `e^{iα} ℝ_{≥0}`.
pub fn log_cut(s: C64, alpha: f64) -> C64 {
    log_branch(s, alpha + PI)
}

/// Term-wise Borel transform of `x^ν` with weight `t(x) = −x^{−k}/(ak)`.
///
/// * minor: `(1/(ak Γ(ν/k))) (s/(ak))^{ν/k−1}`, or a Dirac tag when `ν/k ∈ ℤ_{≤0}`;
/// * major: `−Γ(1−ν/k)/(2πi ak) (−s/(ak))^{ν/k−1}`, or
///   `(1/(2πi ak Γ(ν/k))) (s/(ak))^{ν/k−1} log s` when `ν/k ∈ ℤ_{>0}`.
///
/// Powers and logs are cut along `e^{iα} ℝ_{≥0}`; the minor transform lives on
/// that ray and is evaluated with the branch continuous across it.
pub fn borel_monomial(
    nu: C64,
    s: C64,
    alpha: f64,
    k: u32,
    a: C64,
    kind: BorelKind,
) -> Result<BorelValue> {
    let kf = k as f64;
    let ak = a * kf;
    let p = nu / kf;
    let is_int = p.im == 0.0 && p.re == p.re.round();
    let log_ak = ak.ln();
    match kind {
        BorelKind::Minor => {
            if is_int && p.re <= 0.0 {
                let order = (-p.re) as u32;
                return Ok(BorelValue::Dirac {
                    order,
                    scale: ak.powc(-p),
                });
            }
            // continuous across the ray: log centered on it
            let ls = log_branch(s, alpha);
            let pow = ((p - 1.0) * (ls - log_ak)).exp();
            Ok(BorelValue::Value(rgamma(p) / ak * pow))
        }
        BorelKind::Major => {
            let ls = log_cut(s, alpha);
            if is_int && p.re > 0.0 {
                let pow = ((p - 1.0) * (ls - log_ak)).exp();
                return Ok(BorelValue::Value(
                    pow * ls * rgamma(p) / (ak * C64::new(0.0, 2.0 * PI)),
                ));
            }
            // −s has its cut on −e^{iα}ℝ_{≥0} ⇔ s on the ray
            let lms = log_branch(-s, alpha);
            let pow = ((p - 1.0) * (lms - log_ak)).exp();
            Ok(BorelValue::Value(
                -gamma(1.0 - p) / (C64::new(0.0, 2.0 * PI) * ak) * pow,
            ))
        }
    }
}

/// Truncated minor Borel transform of the tail `Σ r_j x^j` near `s = 0`.
/// Returns `(value, error_estimate)`.
pub fn borel_tail(f: &FormalFatou, s: C64, alpha: f64, terms: usize) -> Result<(C64, f64)> {
    let n = terms.min(f.tail_len());
    if n == 0 || f.tail.is_zero() {
        return Ok((c(0.0), 0.0));
    }
    let mut sum = c(0.0);
    let mut mags = Vec::with_capacity(n);
    for j in 1..=n {
        let r = f.tail.coeff(j as i64);
        if r.norm() == 0.0 {
            mags.push(0.0);
            continue;
        }
        match borel_monomial(c(j as f64), s, alpha, f.k, f.a, BorelKind::Minor)? {
            BorelValue::Value(v) => {
                sum += r * v;
                mags.push((r * v).norm());
            }
            BorelValue::Dirac { .. } => unreachable!("positive exponents are never Dirac"),
        }
    }
    let m = mags.len();
    let last = mags[m - 1].max(if m > 1 { mags[m - 2] } else { 0.0 });
    let first = mags.iter().cloned().fold(0.0, f64::max);
    if m >= 4 && last > 0.5 * first && last > 1e-300 {
        return Err(Error::pre(format!(
            "|s| = {} is beyond the truncation-validity radius of the Borel tail",
            s.norm()
        )));
    }
    Ok((sum, last))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::germ::iterate_orbit;
    use crate::quad::adaptive;
    use crate::special::expint_e1;
    use proptest::prelude::*;

    fn near(a: C64, b: C64, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    fn model11() -> ParabolicGerm {
        ParabolicGerm::model_of(1, c(-1.0), 8).unwrap()
    }

    #[test]
    fn formal_examples() {
        let f = FormalFatou::new(&model11()).unwrap();
        assert!(near(f.principal[0], c(1.0), 1e-15));
        assert!(f.is_trivial());
        assert!(near(
            f.eval_truncated(c(0.5), 5, 0.0).unwrap(),
            c(2.0),
            1e-15
        ));
        let g = ParabolicGerm::polynomial(&[1.0, 1.0]).unwrap();
        let f = FormalFatou::new(&g).unwrap();
        assert!(near(f.principal[0], c(-1.0), 1e-15));
        assert!(near(f.rho, c(1.0), 1e-13));
        // 1/ξ = x^{-2}(1 + x − x²/2 + …) ⇒ r_1 = −1/2
        assert!(near(f.r(1), c(-0.5), 1e-13));
        assert!(f.abel_residual < 1e-12);
        let x = C64::new(-0.05, 0.01);
        let d = f.eval_truncated(x, 2, PI).unwrap() - f.eval_truncated(x, 0, PI).unwrap();
        assert!(d.norm() < 2.0 * x.norm());
    }

    #[test]
    fn formal_log_cut_is_rejected() {
        let g = ParabolicGerm::polynomial(&[1.0, 1.0]).unwrap();
        let f = FormalFatou::new(&g).unwrap();
        assert!(f.eval_truncated(c(0.1), 3, PI).is_err());
        assert!(f.eval_truncated(c(0.0), 3, PI).is_err());
    }

    #[test]
    fn model_sectorial_is_t_shift() {
        let m = model11();
        let e = FatouEvaluator::new(&m, c(1.0), FatouConfig::default()).unwrap();
        assert!(near(e.eval(c(1.0 / 3.0)).unwrap(), c(2.0), 1e-14));
        assert!(near(e.derivative(c(0.5)).unwrap(), c(-4.0), 1e-14));
        assert!(near(e.inverse(c(3.0)).unwrap(), c(0.25), 1e-15));
    }

    #[test]
    fn formal_and_sectorial_agree_near_zero() {
        let g = ParabolicGerm::polynomial(&[1.0, 1.0]).unwrap();
        let f = Arc::new(FormalFatou::new(&g).unwrap());
        let att = SectorialCoord::new(
            &g,
            f.clone(),
            Direction::Attracting,
            PI,
            FatouConfig::default(),
        );
        let x = c(-0.05);
        let d = att.eval(x).unwrap() - f.eval_truncated(x, 5, PI).unwrap();
        assert!(d.norm() < 1e-6, "{d}");
        let rep = SectorialCoord::new(
            &g,
            f.clone(),
            Direction::Repelling,
            0.0,
            FatouConfig::default(),
        );
        let x = c(0.05);
        let d = rep.eval(x).unwrap() - f.eval_truncated(x, 5, 0.0).unwrap();
        assert!(d.norm() < 1e-6, "{d}");
    }

    fn petal_points(g: &ParabolicGerm, n: usize) -> Vec<C64> {
        let th = g.attracting_direction(0);
        let k = g.k() as f64;
        (0..n)
            .map(|i| {
                let r = 0.04 + 0.1 * (i % 5) as f64 / 4.0;
                let ang = th
                    + (i / 5) as f64 / 3.0
                        * 0.9
                        * (PI / (2.0 * k))
                        * if i % 2 == 0 { 1.0 } else { -1.0 };
                C64::from_polar(r.powf(1.0 / k).min(0.35), ang)
            })
            .collect()
    }

    #[test]
    fn abel_equation_and_orbit_normalization() {
        let g = ParabolicGerm::polynomial(&[1.0, 1.0]).unwrap();
        let e = FatouEvaluator::new(&g, c(-0.1), FatouConfig::default()).unwrap();
        for x in petal_points(&g, 20) {
            let r = e.eval(g.eval(x)).unwrap() - e.eval(x).unwrap() - 1.0;
            assert!(r.norm() < 1e-8, "x={x} r={r}");
        }
        let o = iterate_orbit(&g, c(-0.1), 100).unwrap();
        for (n, x) in o.points.iter().enumerate() {
            assert!(near(e.eval(*x).unwrap(), c(n as f64), 1e-8));
        }
    }

    #[test]
    fn depth_consistency() {
        let g = ParabolicGerm::polynomial(&[1.0, -1.0, 0.2]).unwrap();
        let x0 = c(0.1);
        let cfg = FatouConfig::default();
        let e6 = FatouEvaluator::new(&g, x0, cfg).unwrap();
        let e8 = FatouEvaluator::new(&g, x0, FatouConfig { depth: 8, ..cfg }).unwrap();
        for x in petal_points(&g, 10) {
            assert!(near(e6.eval(x).unwrap(), e8.eval(x).unwrap(), 1e-8));
        }
    }

    #[test]
    fn inverse_round_trip_and_reconstruction() {
        let g = ParabolicGerm::polynomial(&[1.0, -1.0, 0.2]).unwrap();
        let e = FatouEvaluator::new(&g, c(0.1), FatouConfig::default()).unwrap();
        for re in [-3.0, 0.0, 2.5, 10.0] {
            for im in [-4.0, 0.0, 3.0] {
                let tau = C64::new(re, im);
                let x = e.inverse(tau).unwrap();
                assert!(near(e.eval(x).unwrap(), tau, 1e-9), "tau={tau}");
            }
        }
        for x in petal_points(&g, 8) {
            let y = e.inverse(e.eval(x).unwrap() + 1.0).unwrap();
            assert!(near(y, g.eval(x), 1e-8 * x.norm().max(1e-2)));
        }
    }

    #[test]
    fn derivative_checks() {
        let g = ParabolicGerm::polynomial(&[1.0, -1.0, 0.3, -0.1]).unwrap();
        let e = FatouEvaluator::new(&g, c(0.1), FatouConfig::default()).unwrap();
        for x in petal_points(&g, 6) {
            let h = 1e-6 * x.norm();
            let fd = (e.eval(x + h).unwrap() - e.eval(x - h).unwrap()) / (2.0 * h);
            let d = e.derivative(x).unwrap();
            assert!((fd - d).norm() < 1e-6 * d.norm(), "x={x}");
            let lhs = e.derivative(g.eval(x)).unwrap() * g.derivative(x);
            assert!((lhs - d).norm() < 1e-8 * d.norm());
        }
    }

    #[test]
    fn borel_monomial_examples() {
        let a = C64::new(-1.0, 0.3);
        for k in [1u32, 2] {
            let ak = a * k as f64;
            let s = C64::new(-0.7, 0.2);
            let v = borel_monomial(c(k as f64), s, PI, k, a, BorelKind::Minor).unwrap();
            let BorelValue::Value(v) = v else { panic!() };
            assert!(near(v, ak.inv(), 1e-14));
            let BorelValue::Value(v) =
                borel_monomial(c(2.0 * k as f64), s, PI, k, a, BorelKind::Minor).unwrap()
            else {
                panic!()
            };
            assert!(near(v, s / (ak * ak), 1e-14));
        }
        let v = borel_monomial(c(-1.0), c(-0.5), PI, 1, c(-1.0), BorelKind::Minor).unwrap();
        assert!(matches!(v, BorelValue::Dirac { order: 1, .. }));
    }

    #[test]
    fn minor_is_jump_of_major() {
        // across the ray e^{iα}ℝ_{≥0} the major transform jumps by the minor
        // one: value on the right of the outgoing ray minus value on its left
        let (k, a, alpha) = (1u32, c(-1.0), PI);
        for nu in [C64::new(0.5, 0.0), C64::new(1.3, 0.4), C64::new(2.0, 0.0)] {
            let s = c(-0.8);
            let eps = 1e-9;
            let up = borel_monomial(
                nu,
                s * C64::from_polar(1.0, -eps),
                alpha,
                k,
                a,
                BorelKind::Major,
            )
            .unwrap();
            let dn = borel_monomial(
                nu,
                s * C64::from_polar(1.0, eps),
                alpha,
                k,
                a,
                BorelKind::Major,
            )
            .unwrap();
            let minor = borel_monomial(nu, s, alpha, k, a, BorelKind::Minor).unwrap();
            let (BorelValue::Value(u), BorelValue::Value(d), BorelValue::Value(m)) =
                (up, dn, minor)
            else {
                panic!()
            };
            assert!(near(u - d, m, 1e-7), "nu={nu}: {} vs {m}", u - d);
        }
    }

    #[test]
    fn borel_tail_examples() {
        let f = FormalFatou::new(&model11()).unwrap();
        assert_eq!(borel_tail(&f, c(-0.1), PI, 10).unwrap().0, c(0.0));
        let g = ParabolicGerm::polynomial(&[1.0, 1.0]).unwrap();
        let f = FormalFatou::new(&g).unwrap();
        let (v, err) = borel_tail(&f, c(0.1), 0.0, 20).unwrap();
        assert!(err < 1e-12);
        // leading term: r_1 / (a Γ(1)) = −1/2
        assert!(near(v, c(-0.5), 0.1));
        let mut f2 = f.clone();
        f2.tail = f.tail.scale(c(2.0));
        let (v2, _) = borel_tail(&f2, c(0.1), 0.0, 20).unwrap();
        assert!(near(v2, v * 2.0, 1e-14));
        assert!(borel_tail(&f, c(30.0), 0.0, 30).is_err());
    }

    #[test]
    fn major_borel_of_log_t_is_e1() {
        // (1/2πi)∫_{1+ℝ≥0} log t e^{−st} dt = E₁(s)/(2πi s), direction α = π
        for s in [c(1.0), C64::new(0.7, 0.5), C64::new(2.0, -1.0)] {
            let mut f = |u: f64| {
                let t = c(1.0 + u);
                t.ln() * (-s * t).exp()
            };
            let mut tot = c(0.0);
            let mut lo = 0.0;
            while lo < 80.0 / s.re {
                let (v, _) = adaptive(&mut f, lo, lo + 4.0, 16, 1e-14);
                tot += v;
                lo += 4.0;
            }
            let want = expint_e1(s) / s;
            assert!(near(tot, want, 1e-8 * want.norm().max(1.0)), "s={s}");
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn formal_abel_residual_small(c2 in -1.0f64..1.0, c3 in -1.0f64..1.0, k2 in proptest::bool::ANY) {
            let g = if k2 {
                ParabolicGerm::polynomial(&[1.0, 0.0, -1.0, c2, c3, 0.0])
            } else {
                ParabolicGerm::polynomial(&[1.0, -1.0, c2, c3])
            }.unwrap();
            let f = FormalFatou::new(&g).unwrap();
            prop_assert!(f.abel_residual < 1e-10);
            prop_assert!(near(f.principal[0], -(g.a() * g.k() as f64).inv(), 1e-14));
        }
    }
}
