//! Parabolic germs `f(x) = x + a x^{k+1} + …`, their orbits, and formal
//! invariants (iterative residue, prenormal form, conjugacy φ, generator).

use crate::error::{Error, Result};
use crate::series::TruncSeries;
use crate::C64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Truncation order (first unknown exponent) used for formal computations on
/// germs whose series is known exactly (polynomials and models).
pub const WORK_ORDER: i64 = 48;

/// Default radius inside which germ series are evaluated.
pub const DEFAULT_EVAL_RADIUS: f64 = 1.0;

/// How the germ's series should be read.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GermKind {
    /// `f` is exactly the stored polynomial (unknown coefficients are zero).
    Polynomial,
    /// Only the stored coefficients are known; formal work stops at `N`.
    Truncated,
    /// The time-one flow of `a x^{k+1} d/dx`, evaluated in closed form.
    Model,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParabolicGerm {
    k: u32,
    a: C64,
    series: TruncSeries,
    truncation: usize,
    kind: GermKind,
    eval_radius: f64,
}

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// `ln(1+z)` accurate for small `z`.
pub(crate) fn ln1p(z: C64) -> C64 {
    if z.norm() < 0.5 {
        let w = z / (z + 2.0);
        let w2 = w * w;
        let mut term = w;
        let mut sum = w;
        for n in 1..60 {
            term *= w2;
            let add = term / (2 * n + 1) as f64;
            sum += add;
            if add.norm() < 1e-18 * sum.norm() {
                break;
            }
        }
        sum * 2.0
    } else {
        (z + 1.0).ln()
    }
}

/// `e^z − 1` accurate for small `z`.
pub(crate) fn expm1(z: C64) -> C64 {
    if z.norm() < 0.5 {
        let mut term = z;
        let mut sum = z;
        for n in 2..40 {
            term *= z / n as f64;
            sum += term;
            if term.norm() < 1e-18 * sum.norm() {
                break;
            }
        }
        sum
    } else {
        z.exp() - 1.0
    }
}

impl ParabolicGerm {
    /// The time-one map of `a x^{k+1} d/dx`: `x / (1 − a k x^k)^{1/k}`.
    pub fn model_of(k: u32, a: C64, n: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::input("k", "must be positive"));
        }
        if a.norm() == 0.0 || !a.re.is_finite() || !a.im.is_finite() {
            return Err(Error::input("a", "must be nonzero and finite"));
        }
        if n < 2 * k as usize + 2 {
            return Err(Error::input(
                "truncation",
                format!("need N >= 2k+2 = {}", 2 * k + 2),
            ));
        }
        let series = model_series(k, a, n as i64 + 1);
        Ok(ParabolicGerm {
            k,
            a,
            series,
            truncation: n,
            kind: GermKind::Model,
            eval_radius: DEFAULT_EVAL_RADIUS,
        })
    }

    /// Germ from the coefficients of `x¹ … x^N` (first entry must be 1).
    /// The germ is treated as the exact polynomial.
    pub fn from_coefficients(coeffs: &[C64], n: usize) -> Result<Self> {
        Self::from_coefficients_kind(coeffs, n, GermKind::Polynomial)
    }

    fn from_coefficients_kind(coeffs: &[C64], n: usize, kind: GermKind) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::input("coeffs", "empty coefficient list"));
        }
        if coeffs
            .iter()
            .any(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            return Err(Error::input("coeffs", "non-finite coefficient"));
        }
        if (coeffs[0] - c(1.0)).norm() > 1e-14 {
            return Err(Error::input(
                "coeffs",
                "f'(0) must be 1 (first coefficient is the x^1 term)",
            ));
        }
        let mut cs = coeffs.to_vec();
        cs.truncate(n);
        cs.resize(n, c(0.0));
        let first = cs
            .iter()
            .enumerate()
            .skip(1)
            .find(|(_, z)| z.norm() != 0.0)
            .map(|(i, z)| (i, *z));
        let (idx, a) = first.ok_or_else(|| {
            Error::input(
                "coeffs",
                "all nonlinear coefficients vanish (identity germ)",
            )
        })?;
        let k = idx as u32;
        if n < 2 * k as usize + 2 {
            return Err(Error::input(
                "truncation",
                format!("need N >= 2k+2 = {}", 2 * k + 2),
            ));
        }
        cs[0] = c(1.0);
        let series = TruncSeries::new(1, cs);
        Ok(ParabolicGerm {
            k,
            a,
            series,
            truncation: n,
            kind,
            eval_radius: DEFAULT_EVAL_RADIUS,
        })
    }

    /// Convenience: real polynomial coefficients of `x¹ … x^d`, truncation `max(d, 2k+2)`.
    pub fn polynomial(coeffs: &[f64]) -> Result<Self> {
        let cs: Vec<C64> = coeffs.iter().map(|&v| c(v)).collect();
        let k = cs
            .iter()
            .skip(1)
            .position(|z| z.norm() != 0.0)
            .map(|i| i + 1)
            .unwrap_or(1);
        Self::from_coefficients(&cs, cs.len().max(2 * k + 2))
    }

    pub fn with_eval_radius(mut self, r: f64) -> Self {
        self.eval_radius = r;
        self
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn a(&self) -> C64 {
        self.a
    }

    pub fn kind(&self) -> GermKind {
        self.kind
    }

    pub fn truncation(&self) -> usize {
        self.truncation
    }

    pub fn eval_radius(&self) -> f64 {
        self.eval_radius
    }

    /// Stored coefficients of `x¹ … x^N`.
    pub fn series(&self) -> &TruncSeries {
        &self.series
    }

    pub fn is_model(&self) -> bool {
        self.kind == GermKind::Model
    }

    /// The series of `f` known to (at most) truncation order `order`.
    pub fn formal_series(&self, order: i64) -> TruncSeries {
        match self.kind {
            GermKind::Polynomial => self.series.pad_to(order).truncate(order),
            GermKind::Model => model_series(self.k, self.a, order),
            GermKind::Truncated => self.series.truncate(order),
        }
    }

    /// Default order for formal computations.
    pub fn work_order(&self) -> i64 {
        match self.kind {
            GermKind::Truncated => self.series.truncation_order(),
            _ => WORK_ORDER.max(self.truncation as i64 + 1),
        }
    }

    /// `f(x)`.
    pub fn eval(&self, x: C64) -> C64 {
        match self.kind {
            GermKind::Model => x * self.model_factor(x, -1.0 / self.k as f64),
            _ => self.series.eval(x),
        }
    }

    /// `f(x) − x`, evaluated without cancellation.
    pub fn displacement(&self, x: C64) -> C64 {
        match self.kind {
            GermKind::Model => {
                let u = self.a * self.k as f64 * x.powu(self.k);
                x * expm1(-ln1p(-u) / self.k as f64)
            }
            _ => {
                let cs = self.series.coeffs();
                let mut acc = c(0.0);
                for z in cs[1..].iter().rev() {
                    acc = acc * x + z;
                }
                acc * x * x
            }
        }
    }

    /// `f'(x)`.
    pub fn derivative(&self, x: C64) -> C64 {
        match self.kind {
            GermKind::Model => self.model_factor(x, -1.0 - 1.0 / self.k as f64),
            _ => self.series.eval_with_derivative(x).1,
        }
    }

    fn model_factor(&self, x: C64, p: f64) -> C64 {
        let u = self.a * self.k as f64 * x.powu(self.k);
        (ln1p(-u) * p).exp()
    }

    /// `f^{-1}(y)` near 0: closed form for models, Newton otherwise.
    pub fn inverse(&self, y: C64) -> Result<C64> {
        if self.kind == GermKind::Model {
            let u = self.a * self.k as f64 * y.powu(self.k);
            return Ok(y * (ln1p(u) * (-1.0 / self.k as f64)).exp());
        }
        let t = self.t(y);
        let mut x = y * (ln1p(-t.inv()) * (-1.0 / self.k as f64)).exp();
        if !x.re.is_finite() || !x.im.is_finite() {
            x = y;
        }
        for _ in 0..60 {
            let r = self.eval(x) - y;
            let d = self.derivative(x);
            let dx = r / d;
            x -= dx;
            if dx.norm() <= 1e-16 * x.norm() {
                return Ok(x);
            }
        }
        let r = (self.eval(x) - y).norm();
        if r <= 1e-13 * y.norm() {
            Ok(x)
        } else {
            Err(Error::conv(format!(
                "inverse step at {y} left residual {r:e}"
            )))
        }
    }

    /// Model Fatou weight `t(x) = −x^{−k}/(a k)`.
    pub fn t(&self, x: C64) -> C64 {
        -(x.powu(self.k) * self.a * self.k as f64).inv()
    }

    /// Attracting direction `θ_l = (π − arg a + 2πl)/k`.
    pub fn attracting_direction(&self, l: usize) -> f64 {
        (PI - self.a.arg() + 2.0 * PI * l as f64) / self.k as f64
    }

    /// Repelling direction between attracting directions `l` and `l+1`.
    pub fn repelling_direction(&self, l: usize) -> f64 {
        self.attracting_direction(l) + PI / self.k as f64
    }

    /// Index of the attracting direction closest to `arg x`.
    pub fn petal_of(&self, x: C64) -> usize {
        let k = self.k as usize;
        (0..k)
            .min_by(|&i, &j| {
                let di = angle_dist(x.arg(), self.attracting_direction(i));
                let dj = angle_dist(x.arg(), self.attracting_direction(j));
                di.partial_cmp(&dj).unwrap()
            })
            .unwrap_or(0)
    }

    /// Inverse of `t` on the branch of attracting petal `l`:
    /// `x = e^{iθ_l} (|a| k t)^{−1/k}`.
    pub fn t_inverse(&self, t: C64, l: usize) -> C64 {
        let th = self.attracting_direction(l);
        C64::from_polar(1.0, th) * (t * (self.a.norm() * self.k as f64)).powf(-1.0 / self.k as f64)
    }

    /// Iterative residue `ρ = res_{x=0} 1/(f(x)−x) + (k+1)/2`.
    pub fn residual_invariant(&self) -> C64 {
        let order = (2 * self.k as i64 + 2).max(self.work_order().min(2 * self.k as i64 + 8));
        let f = self.formal_series(order);
        let g = &f - &TruncSeries::identity(order);
        let r = g
            .reciprocal()
            .expect("f - x is nonzero for a parabolic germ");
        r.residue() + c((self.k as f64 + 1.0) / 2.0)
    }

    /// Tangent-to-identity `φ` with `a φ^{k+1} = f − x`.
    pub fn conjugacy_phi(&self) -> Result<TruncSeries> {
        let order = self.work_order();
        let f = self.formal_series(order);
        let g = (&f - &TruncSeries::identity(order)).scale(self.a.inv());
        let phi = g.nth_root(self.k + 1)?;
        // principal root of a leading coefficient 1 is 1, so φ = x + …
        Ok(phi)
    }

    /// `h ∘ f ∘ h^{-1}` for tangent-to-identity `h`.
    pub fn conjugate(&self, h: &TruncSeries) -> Result<Self> {
        if h.lowest_exponent() != 1 || (h.coeffs()[0] - c(1.0)).norm() > 1e-14 {
            return Err(Error::pre("conjugate: h must be tangent to the identity"));
        }
        let order = self.truncation as i64 + 1;
        let h = h.truncate(order);
        if h.coeffs().iter().skip(1).all(|z| *z == c(0.0)) {
            return Ok(self.clone());
        }
        let f = self.formal_series(order);
        let hinv = h.pad_to(order).reversion()?;
        let g = h.compose(&f.compose(&hinv)?)?;
        let cs: Vec<C64> = (1..order).map(|e| g.coeff(e)).collect();
        let mut out = Self::from_coefficients_kind(&cs, self.truncation, GermKind::Truncated)?;
        out.eval_radius = self.eval_radius;
        Ok(out)
    }

    /// Conjugate to the prenormal form `x + a x^{k+1} + a²((k+1)/2 − ρ) x^{2k+1} + …`.
    /// Returns the conjugated germ and the change of variable `h`.
    pub fn prenormalize(&self) -> Result<(Self, TruncSeries)> {
        let order = self.truncation as i64 + 1;
        let k = self.k as i64;
        let mut h = TruncSeries::identity(order);
        let mut g = self.clone();
        for m in 2..=k {
            let b = g.formal_series(order).coeff(k + m);
            if b.norm() == 0.0 {
                continue;
            }
            let cm = -b / (self.a * (m - k - 1) as f64);
            let step = TruncSeries::identity(order) + TruncSeries::monomial(cm, m, order);
            g = g.conjugate(&step)?;
            h = step.compose(&h)?;
        }
        Ok((g, h))
    }

    /// Formal infinitesimal generator `ξ` with `exp(L_ξ) x = f`.
    ///
    /// Solved as the unique vector field invariant under `f`,
    /// `ξ∘f = f'·ξ`, with `ξ = a x^{k+1} + …`: at order `x^{j+k}` the unknown
    /// `ξ_j` enters with the factor `(j − k − 1) a`, so the system is
    /// triangular. The result is known to `x^{order−k−1}`.
    pub fn infinitesimal_generator(&self) -> Result<TruncSeries> {
        let order = self.work_order();
        let k = self.k as i64;
        if self.kind == GermKind::Model {
            return Ok(TruncSeries::monomial(self.a, k + 1, order - k));
        }
        let f = self.formal_series(order);
        let n = order as usize;
        // powers[m][o] = [x^o] f^m
        let mut powers = vec![vec![c(0.0); n]; n];
        let base: Vec<C64> = (0..n as i64).map(|e| f.coeff(e)).collect();
        powers[1] = base.clone();
        for m in 2..n {
            let mut row = vec![c(0.0); n];
            for (i, p) in powers[m - 1].iter().enumerate() {
                if *p == c(0.0) {
                    continue;
                }
                for (j, q) in base.iter().enumerate().take(n - i) {
                    row[i + j] += p * q;
                }
            }
            powers[m] = row;
        }
        let fp: Vec<C64> = (0..n as i64).map(|e| f.derivative().coeff(e)).collect();
        let top = (order - k) as usize;
        let mut xi = vec![c(0.0); top];
        xi[(k + 1) as usize] = self.a;
        for j in (k as usize + 2)..top {
            let o = j + k as usize;
            let mut r = c(0.0);
            for m in (k as usize + 1)..j {
                r += xi[m] * (powers[m][o] - fp[o - m]);
            }
            xi[j] = -r / (self.a * (j as f64 - k as f64 - 1.0));
        }
        Ok(TruncSeries::new(0, xi))
    }
}

/// Time-one flow `Σ Lⁿ x / n!` with `L g = ξ g'`.
pub fn flow(xi: &TruncSeries, order: i64) -> TruncSeries {
    let mut term = TruncSeries::identity(order);
    let mut acc = term.clone();
    for n in 1..(order as usize + 2) {
        term = xi
            .product(&term.derivative())
            .scale(c(1.0 / n as f64))
            .truncate(order);
        if term.is_zero() || term.max_abs() == 0.0 {
            break;
        }
        acc = &acc + &term;
    }
    acc
}

fn angle_dist(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(2.0 * PI);
    d.min(2.0 * PI - d)
}

/// Coefficients of `x (1 − a k x^k)^{−1/k}` up to truncation order `order`:
/// the coefficient at `x^{1+kn}` is `(1/k)_n / n! · (ak)^n`.
pub fn model_series(k: u32, a: C64, order: i64) -> TruncSeries {
    let len = (order - 1).max(0) as usize;
    let mut cs = vec![c(0.0); len];
    let kf = k as f64;
    let mut coef = c(1.0);
    let mut n = 0usize;
    while 1 + k as usize * n <= len {
        cs[k as usize * n] = coef;
        coef *= a * kf * ((1.0 / kf + n as f64) / (n as f64 + 1.0));
        n += 1;
    }
    TruncSeries::new(1, cs)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Orbit {
    pub germ: ParabolicGerm,
    pub x0: C64,
    pub points: Vec<C64>,
    pub t_values: Vec<C64>,
    pub petal: usize,
}

impl Orbit {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn last(&self) -> C64 {
        *self.points.last().expect("orbit has at least x0")
    }

    /// The orbit with its first point removed (`𝔸 ∖ {x0}`).
    pub fn shifted(&self) -> Result<Orbit> {
        if self.points.len() < 2 {
            return Err(Error::pre("cannot drop the only point of an orbit"));
        }
        Ok(Orbit {
            germ: self.germ.clone(),
            x0: self.points[1],
            points: self.points[1..].to_vec(),
            t_values: self.t_values[1..].to_vec(),
            petal: self.petal,
        })
    }

    /// Real orbit: all points (numerically) real.
    pub fn is_real(&self) -> bool {
        self.points
            .iter()
            .all(|z| z.im.abs() <= 1e-14 * z.re.abs().max(1e-300))
    }
}

/// Forward orbit `x_0 … x_M`.
pub fn iterate_orbit(f: &ParabolicGerm, x0: C64, m: usize) -> Result<Orbit> {
    if !(x0.norm() > 0.0) || !x0.re.is_finite() || !x0.im.is_finite() {
        return Err(Error::input("x0", "must be finite and nonzero"));
    }
    if x0.norm() > f.eval_radius * (1.0 + 1e-12) {
        return Err(Error::input(
            "x0",
            format!(
                "|x0| = {} exceeds the evaluation radius {}",
                x0.norm(),
                f.eval_radius
            ),
        ));
    }
    let lead = -f.a * x0.powu(f.k);
    if lead.arg().abs() > PI / 2.0 + 1e-9 {
        return Err(Error::pre(format!(
            "x0 = {x0} is not in an attracting petal: arg(-a x0^k) = {:.4}",
            lead.arg()
        )));
    }
    let petal = f.petal_of(x0);
    let mut points = Vec::with_capacity(m + 1);
    let mut t_values = Vec::with_capacity(m + 1);
    points.push(x0);
    let t0 = f.t(x0);
    t_values.push(t0);
    if f.is_model() {
        for n in 1..=m {
            let t = t0 + n as f64;
            points.push(f.t_inverse(t, petal));
            t_values.push(t);
        }
    } else {
        let mut x = x0;
        let mut growing = 0;
        for _ in 0..m {
            let y = f.eval(x);
            if !(y.norm() <= f.eval_radius) {
                return Err(Error::pre(format!(
                    "orbit escaped the evaluation radius at {y}"
                )));
            }
            if y.norm() >= x.norm() {
                growing += 1;
                if growing >= 10 {
                    return Err(Error::pre(
                        "orbit not attracted: |x_n| non-decreasing for 10 steps",
                    ));
                }
            } else {
                growing = 0;
            }
            points.push(y);
            t_values.push(f.t(y));
            x = y;
        }
    }
    Ok(Orbit {
        germ: f.clone(),
        x0,
        points,
        t_values,
        petal,
    })
}

/// Estimates of `k` and `a` from a long orbit.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ModelEstimate {
    pub k_est: f64,
    pub a_est: C64,
    pub k_rounded: u32,
    pub spread: f64,
}

/// Read `k` and `a` off the decay of an orbit.
///
/// On a dyadic ladder `m_i`, `k` is estimated from successive ratios
/// `−ln 2 / ln|x_{2m}/x_m|` (which removes the `ln|ak|` offset), and `a` from
/// `−x_m^{−k}/(k m)` with one Richardson step in `1/m`.
pub fn estimate_model_from_orbit(points: &[C64], spread_bound: f64) -> Result<ModelEstimate> {
    if points.len() < 1000 {
        return Err(Error::input("points", "need at least 1000 orbit points"));
    }
    let mmax = points.len() - 1;
    let mut ladder = Vec::new();
    let mut m = 8usize;
    while 2 * m <= mmax {
        ladder.push(m);
        m *= 2;
    }
    let k_of =
        |m: usize| -> f64 { -(2.0f64).ln() / (points[2 * m].norm() / points[m].norm()).ln() };
    let ks: Vec<f64> = ladder.iter().map(|&m| k_of(m)).collect();
    let n = ks.len();
    let k_est = ks[n - 1];
    let spread = (ks[n - 1] - ks[n - 2]).abs() / k_est.abs();
    if !(spread <= spread_bound) {
        return Err(Error::conv(format!(
            "k ladder spread {spread:e} above bound {spread_bound:e}"
        )));
    }
    let kr = k_est.round().max(1.0) as u32;
    let a_of = |m: usize| -> C64 { -(points[m].powu(kr) * (kr as f64 * m as f64)).inv() };
    let m1 = *ladder.last().unwrap();
    let a_est = a_of(2 * m1) * 2.0 - a_of(m1);
    Ok(ModelEstimate {
        k_est,
        a_est,
        k_rounded: kr,
        spread,
    })
}

/// JSON germ description: `{ "k", "a", "coeffs": [[re,im],…], "truncation" }`.
/// With `"model": true` and no coefficients, the model germ for `k, a` is built.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GermSpec {
    #[serde(default)]
    pub k: Option<u32>,
    #[serde(default)]
    pub a: Option<[f64; 2]>,
    #[serde(default)]
    pub coeffs: Option<Vec<[f64; 2]>>,
    #[serde(default)]
    pub truncation: Option<usize>,
    #[serde(default)]
    pub model: bool,
    #[serde(default)]
    pub eval_radius: Option<f64>,
}

impl GermSpec {
    pub fn build(&self) -> Result<ParabolicGerm> {
        let g = if self.model {
            let k = self
                .k
                .ok_or_else(|| Error::input("k", "required for a model germ"))?;
            let a = self
                .a
                .ok_or_else(|| Error::input("a", "required for a model germ"))?;
            let n = self.truncation.unwrap_or(2 * k as usize + 2);
            ParabolicGerm::model_of(k, C64::new(a[0], a[1]), n)?
        } else {
            let cs = self
                .coeffs
                .as_ref()
                .ok_or_else(|| Error::input("coeffs", "missing coefficient list"))?;
            let cs: Vec<C64> = cs.iter().map(|p| C64::new(p[0], p[1])).collect();
            // a polynomial is exact at any truncation; default to the
            // smallest one the Fatou machinery accepts
            let k_implied = cs
                .iter()
                .skip(1)
                .position(|z| z.norm() != 0.0)
                .map_or(1, |p| p + 1);
            let n = self.truncation.unwrap_or(cs.len().max(2 * k_implied + 2));
            if n < cs.len() && cs[n..].iter().any(|z| z.norm() != 0.0) {
                return Err(Error::input(
                    "truncation",
                    "smaller than the coefficient list",
                ));
            }
            let mut g = ParabolicGerm::from_coefficients(&cs, n)?;
            if let Some(k) = self.k {
                if k != g.k {
                    return Err(Error::input(
                        "k",
                        format!("given {k}, coefficients imply {}", g.k),
                    ));
                }
            }
            if let Some(a) = self.a {
                if (C64::new(a[0], a[1]) - g.a).norm() > 1e-12 * g.a.norm() {
                    return Err(Error::input("a", "does not match the x^{k+1} coefficient"));
                }
            }
            g.truncation = n;
            g
        };
        Ok(match self.eval_radius {
            Some(r) if r > 0.0 => g.with_eval_radius(r),
            Some(_) => return Err(Error::input("eval_radius", "must be positive")),
            None => g,
        })
    }
}
