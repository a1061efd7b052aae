//! Birkhoff–Écalle–Voronin invariants, computed two independent ways.
//!
//! * **Horn maps.** On the overlap of attracting petal `l` with an adjacent
//!   repelling petal, the transition `𝔄(t) = ψ_att(ψ_rep^{−1}(t))` between the
//!   raw sectorial coordinates (both asymptotic to the same formal `ψ̂`) is
//!   `t + Σ_ω A_ω e^{ωt}`, with `ω ∈ 2πiℤ_{>0}` on the upper overlap
//!   (`Im t → +∞`) and `ω ∈ 2πiℤ_{<0}` on the lower one. The Fourier
//!   coefficients are taken by the trapezoid rule over one period.
//! * **Theta singularities.** Near `ω` the jump `J_0` of the theta function
//!   across the cut at 0 behaves like
//!   `±ω A'_ω e^{(s−ω)C'} e^{∓iπν} Γ(1−ν) (ω−s)^{ν−1}` with `ν = sρ/k` and
//!   `A'_ω = A_ω e^{ωC'}`, where `C'` is the constant of
//!   `ψ̂ = t − (ρ/k) log t + C' + o(1)` on the attracting petal. The
//!   coefficient is read off by a least-squares fit along `s = ω − u`.
//!
//! Transition indices: petal `l` has upper transition `j = 2l+1` and lower
//! transition `j = 2l+2`.

use crate::error::{Error, Result};
use crate::fatou::{Direction, FatouConfig, FormalFatou, SectorialCoord};
use crate::germ::ParabolicGerm;
use crate::special::gamma;
use crate::theta::ThetaEvaluator;
use crate::C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::sync::Arc;

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

fn omega(m: i64) -> C64 {
    C64::new(0.0, 2.0 * PI * m as f64)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Horn,
    Theta,
}

/// One coefficient `A_{ω,j}` with `ω = 2πi·omega_multiple`.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct ModulusEntry {
    pub j: usize,
    pub omega_multiple: i64,
    /// Coefficient; zero when `below_floor`.
    #[serde(rename = "A")]
    pub a: C64,
    pub error: f64,
    /// The coefficient is indistinguishable from numerical noise.
    pub below_floor: bool,
}

/// A collection of horn-map coefficients. `normalization` is the constant `C`
/// such that the stored entries are `A_{ω,j} e^{ωC}` with `A_{ω,j}` the
/// coefficients of the raw transition maps.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EVModulus {
    pub entries: Vec<ModulusEntry>,
    pub normalization: C64,
    pub method: Method,
}

/// Flat JSON record of one modulus entry.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ModulusRecord {
    pub j: usize,
    pub omega_multiple: i64,
    #[serde(rename = "A")]
    pub a: C64,
    pub method: Method,
    #[serde(rename = "C_normalization")]
    pub c_normalization: C64,
    pub below_floor: bool,
    pub error: f64,
}

impl EVModulus {
    /// Entries re-expressed with normalization `c_new`.
    pub fn renormalized(&self, c_new: C64) -> EVModulus {
        let delta = c_new - self.normalization;
        EVModulus {
            entries: self
                .entries
                .iter()
                .map(|e| {
                    let f = (omega(e.omega_multiple) * delta).exp();
                    ModulusEntry {
                        a: e.a * f,
                        error: e.error * f.norm(),
                        ..*e
                    }
                })
                .collect(),
            normalization: c_new,
            method: self.method,
        }
    }

    pub fn get(&self, j: usize, omega_multiple: i64) -> Option<&ModulusEntry> {
        self.entries
            .iter()
            .find(|e| e.j == j && e.omega_multiple == omega_multiple)
    }

    pub fn records(&self) -> Vec<ModulusRecord> {
        self.entries
            .iter()
            .map(|e| ModulusRecord {
                j: e.j,
                omega_multiple: e.omega_multiple,
                a: e.a,
                method: self.method,
                c_normalization: self.normalization,
                below_floor: e.below_floor,
                error: e.error,
            })
            .collect()
    }
}

/// Tunables of the horn-map route.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct HornConfig {
    /// Trapezoid samples per period.
    pub samples: usize,
    /// Smallest admissible `|Im t|`.
    pub h_min: f64,
    /// Absolute tolerance of the height-ladder check on the raw modes
    /// `∫(𝔄 − t) e^{−ωu} du`.
    pub fourier_tol: f64,
    /// Raw modes below this magnitude are reported as noise.
    pub noise_floor: f64,
    pub fatou: FatouConfig,
}

impl Default for HornConfig {
    fn default() -> Self {
        HornConfig {
            samples: 64,
            h_min: 2.0,
            fourier_tol: 1e-8,
            noise_floor: 1e-11,
            fatou: FatouConfig::precise(),
        }
    }
}

impl HornConfig {
    pub fn validate(&self) -> Result<()> {
        if self.samples < 8 {
            return Err(Error::input(
                "samples",
                "need at least 8 samples per period",
            ));
        }
        for (name, v) in [
            ("h_min", self.h_min),
            ("fourier_tol", self.fourier_tol),
            ("noise_floor", self.noise_floor),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::input(name, "must be positive and finite"));
            }
        }
        Ok(())
    }
}

fn check_transition(f: &ParabolicGerm, j: usize) -> Result<(usize, bool)> {
    let k = f.k() as usize;
    if j == 0 || j > 2 * k {
        return Err(Error::input(
            "j",
            format!("transition index must lie in 1..={}", 2 * k),
        ));
    }
    Ok(((j - 1) / 2, j % 2 == 1))
}

/// The transition map of one petal overlap.
#[derive(Clone, Debug)]
pub struct HornMap {
    pub j: usize,
    /// Upper (`Im t > 0`) or lower overlap.
    pub upper: bool,
    att: SectorialCoord,
    rep: SectorialCoord,
    h_min: f64,
}

impl HornMap {
    pub fn new(f: &ParabolicGerm, j: usize, config: &HornConfig) -> Result<Self> {
        config.validate()?;
        let (l, upper) = check_transition(f, j)?;
        let formal = Arc::new(FormalFatou::new(f)?);
        Ok(Self::with_formal(f, formal, l, upper, config))
    }

    fn with_formal(
        f: &ParabolicGerm,
        formal: Arc<FormalFatou>,
        l: usize,
        upper: bool,
        config: &HornConfig,
    ) -> Self {
        let theta_a = f.attracting_direction(l);
        let kf = f.k() as f64;
        let theta_r = if upper {
            theta_a - PI / kf
        } else {
            theta_a + PI / kf
        };
        HornMap {
            j: 2 * l + if upper { 1 } else { 2 },
            upper,
            att: SectorialCoord::new(
                f,
                formal.clone(),
                Direction::Attracting,
                theta_a,
                config.fatou,
            ),
            rep: SectorialCoord::new(f, formal, Direction::Repelling, theta_r, config.fatou),
            h_min: config.h_min,
        }
    }

    /// `𝔄(t)`.
    pub fn eval(&self, t: C64) -> Result<C64> {
        let side = if self.upper { t.im } else { -t.im };
        if !(side >= self.h_min) {
            return Err(Error::pre(format!(
                "t = {t} is outside the {} overlap (|Im t| >= {} on that side)",
                if self.upper { "upper" } else { "lower" },
                self.h_min
            )));
        }
        let x = self.rep.inverse(t)?;
        self.att.eval(x)
    }

    /// Raw modes `∫_0^1 (𝔄(t0+u) − t0 − u) e^{−ω u} du` at height `h`, for
    /// `m = 1..=modes` (sign per side), by the trapezoid rule.
    fn raw_modes(&self, h: f64, modes: usize, samples: usize) -> Result<Vec<C64>> {
        let t0 = C64::new(0.0, if self.upper { h } else { -h });
        let vals: Vec<C64> = (0..samples)
            .into_par_iter()
            .map(|n| {
                let u = n as f64 / samples as f64;
                Ok(self.eval(t0 + u)? - t0 - u)
            })
            .collect::<Result<_>>()?;
        let sign = if self.upper { 1 } else { -1 };
        Ok((1..=modes as i64)
            .map(|m| {
                let om = omega(sign * m);
                vals.iter()
                    .enumerate()
                    .map(|(n, v)| v * (-om * (n as f64 / samples as f64)).exp())
                    .sum::<C64>()
                    / samples as f64
            })
            .collect())
    }
}

/// `𝔄_{θ_j}(t)` for the germ `f` with default settings.
pub fn horn_map(f: &ParabolicGerm, j: usize, t: C64) -> Result<C64> {
    HornMap::new(f, j, &HornConfig::default())?.eval(t)
}

/// Horn-map Fourier coefficients `A_{ω,j}`, `|ω| = 2π, …, 2π·modes`, read at
/// height `h` and checked against height `h + 1`.
pub fn fourier_coefficients(
    f: &ParabolicGerm,
    j: usize,
    modes: usize,
    h: f64,
    config: &HornConfig,
) -> Result<EVModulus> {
    let map = HornMap::new(f, j, config)?;
    fourier_of_map(&map, modes, h, config)
}

fn fourier_of_map(map: &HornMap, modes: usize, h: f64, config: &HornConfig) -> Result<EVModulus> {
    if modes == 0 {
        return Err(Error::input("modes", "need at least one mode"));
    }
    if !(h >= config.h_min) {
        return Err(Error::input(
            "H",
            format!("height must be at least {}", config.h_min),
        ));
    }
    if modes * 2 >= config.samples {
        return Err(Error::input("modes", "too many modes for the sample count"));
    }
    let lo = map.raw_modes(h, modes, config.samples)?;
    let hi = map.raw_modes(h + 1.0, modes, config.samples)?;
    let sign = if map.upper { 1 } else { -1 };
    let mut entries = Vec::with_capacity(modes);
    for (i, (cl, ch)) in lo.iter().zip(&hi).enumerate() {
        let m = i as i64 + 1;
        let decay = (2.0 * PI * m as f64).exp();
        let defect = (cl - ch * decay).norm();
        if defect > config.fourier_tol {
            return Err(Error::Tolerance(format!(
                "horn-map mode {m} of transition {} differs between heights {h} and {}: {defect:e}",
                map.j,
                h + 1.0
            )));
        }
        let om = omega(sign * m);
        // A = c · e^{−ω t0}, t0 = ±ih
        let scale = (-om * C64::new(0.0, sign as f64 * h)).exp();
        let below = cl.norm() < config.noise_floor;
        entries.push(ModulusEntry {
            j: map.j,
            omega_multiple: sign * m,
            a: if below { c(0.0) } else { cl * scale },
            error: (defect + 1e-16) * scale.norm(),
            below_floor: below,
        });
    }
    Ok(EVModulus {
        entries,
        normalization: c(0.0),
        method: Method::Horn,
    })
}

/// Both transitions of the attracting petal `l`, `modes` coefficients each.
pub fn horn_modulus(
    f: &ParabolicGerm,
    l: usize,
    modes: usize,
    h: f64,
    config: &HornConfig,
) -> Result<EVModulus> {
    config.validate()?;
    if l >= f.k() as usize {
        return Err(Error::input(
            "petal",
            format!("petal index must be below k = {}", f.k()),
        ));
    }
    let formal = Arc::new(FormalFatou::new(f)?);
    let mut entries = Vec::new();
    for upper in [true, false] {
        let map = HornMap::with_formal(f, formal.clone(), l, upper, config);
        entries.extend(fourier_of_map(&map, modes, h, config)?.entries);
    }
    Ok(EVModulus {
        entries,
        normalization: c(0.0),
        method: Method::Horn,
    })
}

/// Tunables of the theta route.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct SingularFitConfig {
    /// Range of `u = ω − s` sampled by the fit.
    pub u_min: f64,
    pub u_max: f64,
    pub points: usize,
    /// `|A'|` below this value is reported as noise.
    pub noise_floor: f64,
}

impl Default for SingularFitConfig {
    fn default() -> Self {
        SingularFitConfig {
            u_min: 0.01,
            u_max: 0.2,
            points: 32,
            noise_floor: 1e-9,
        }
    }
}

/// Result of the theta-route extraction at one `ω`.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct ThetaInvariant {
    pub j: usize,
    pub omega_multiple: i64,
    /// `A'_ω = A_ω e^{ωC'}`.
    pub a_prime: C64,
    /// Difference between fits over two `u` windows.
    pub error: f64,
    /// `ν = ωρ/k` at `s = ω`.
    pub nu: C64,
    /// The constant `C'` of the attracting petal.
    pub c_prime: C64,
    pub below_floor: bool,
}

/// Solve the complex least-squares problem `min |X β − y|` by Householder QR.
fn least_squares(cols: &[Vec<C64>], y: &[C64]) -> Result<Vec<C64>> {
    let n = y.len();
    let p = cols.len();
    if n < p {
        return Err(Error::pre("fit has more unknowns than samples"));
    }
    // column scaling for conditioning
    let scales: Vec<f64> = cols
        .iter()
        .map(|col| {
            col.iter()
                .map(|z| z.norm_sqr())
                .sum::<f64>()
                .sqrt()
                .max(1e-300)
        })
        .collect();
    let mut a: Vec<Vec<C64>> = cols
        .iter()
        .zip(&scales)
        .map(|(col, s)| col.iter().map(|z| z / *s).collect())
        .collect();
    let mut b = y.to_vec();
    for k in 0..p {
        let norm = a[k][k..].iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm < 1e-14 {
            return Err(Error::pre("fit basis is degenerate"));
        }
        let phase = if a[k][k].norm() > 0.0 {
            a[k][k] / a[k][k].norm()
        } else {
            c(1.0)
        };
        let alpha = -phase * norm;
        let mut v: Vec<C64> = a[k][k..].to_vec();
        v[0] -= alpha;
        let vn = v.iter().map(|z| z.norm_sqr()).sum::<f64>();
        if vn == 0.0 {
            continue;
        }
        let apply = |x: &mut [C64]| {
            let dot: C64 = v.iter().zip(x.iter()).map(|(vi, xi)| vi.conj() * xi).sum();
            let f = dot * 2.0 / vn;
            for (xi, vi) in x.iter_mut().zip(&v) {
                *xi -= vi * f;
            }
        };
        for col in a.iter_mut().skip(k) {
            apply(&mut col[k..]);
        }
        apply(&mut b[k..]);
    }
    let mut beta = vec![c(0.0); p];
    for k in (0..p).rev() {
        let mut acc = b[k];
        for j in k + 1..p {
            acc -= a[j][k] * beta[j];
        }
        beta[k] = acc / a[k][k];
    }
    Ok(beta.iter().zip(&scales).map(|(b, s)| b / *s).collect())
}

struct FitSetup {
    om: C64,
    sign: f64,
    rho_k: C64,
    k: u32,
    c_prime: C64,
}

impl FitSetup {
    fn nu(&self, s: C64) -> C64 {
        s * self.rho_k
    }

    /// Leading singular form without `ωA'`.
    fn main(&self, u: f64) -> C64 {
        let s = self.om - u;
        let nu = self.nu(s);
        let rot = (C64::new(0.0, -self.sign * PI) * nu).exp();
        ((s - self.om) * self.c_prime).exp() * rot * gamma(1.0 - nu) * c(u).powc(nu - 1.0)
    }

    fn basis(&self, us: &[f64]) -> Vec<Vec<C64>> {
        let mut cols: Vec<Vec<C64>> = vec![us.iter().map(|u| self.main(*u)).collect()];
        let kf = self.k as f64;
        let rho_zero = self.rho_k.norm() == 0.0;
        for jj in 1..=self.k {
            let q = jj as f64 / kf;
            if rho_zero && jj == self.k {
                continue;
            }
            cols.push(
                us.iter()
                    .map(|u| c(*u).powc(self.nu(self.om - *u) - 1.0 + q))
                    .collect(),
            );
        }
        // first and second order corrections of e^{−s(T − w)} in 1/w
        for (shift, logs) in [(0.0, 1), (1.0, 0), (1.0, 1), (1.0, 2)] {
            cols.push(
                us.iter()
                    .map(|u| c(*u).powc(self.nu(self.om - *u) + shift) * u.ln().powi(logs))
                    .collect(),
            );
        }
        cols.push(vec![c(1.0); us.len()]);
        // for ρ = 0 the column u^{ν+1} above already is u
        if !rho_zero {
            cols.push(us.iter().map(|u| c(*u)).collect());
        }
        cols.push(us.iter().map(|u| c(u * u)).collect());
        cols
    }
}

/// Theta-route invariant `A'_ω` for the transition on the side of `ω`.
pub fn invariant_from_theta(
    e: &ThetaEvaluator,
    omega_multiple: i64,
    fit: &SingularFitConfig,
) -> Result<ThetaInvariant> {
    if omega_multiple == 0 {
        return Err(Error::input("omega", "ω must be a nonzero multiple of 2πi"));
    }
    if !(fit.u_min > 0.0 && fit.u_max > 2.0 * fit.u_min && fit.points >= 12) {
        return Err(Error::input(
            "fit",
            "need 0 < 2·u_min < u_max and at least 12 points",
        ));
    }
    let formal = e.fatou().formal();
    let k = formal.k;
    if k > 1
        && formal.principal[1..]
            .iter()
            .any(|z| z.norm() > 1e-12 * formal.principal[0].norm())
    {
        return Err(Error::pre(
            "theta-route invariants need a prenormalized germ (no intermediate principal terms)",
        ));
    }
    let om = omega(omega_multiple);
    let rho_k = formal.rho / k as f64;
    let nu0 = om * rho_k;
    let nu_int = nu0.im.abs() < 1e-12 && nu0.re > 0.5 && (nu0.re - nu0.re.round()).abs() < 1e-9;
    if nu_int {
        return Err(Error::Unsupported(format!(
            "ωρ/k = {} is a positive integer: the leading singularity is logarithmic",
            nu0.re
        )));
    }
    let upper = omega_multiple > 0;
    let sign = if upper { 1.0 } else { -1.0 };
    let c_prime = formal.c_prime(e.fatou().coord.axis);
    let setup = FitSetup {
        om,
        sign,
        rho_k,
        k,
        c_prime,
    };
    let n = fit.points;
    let ratio = (fit.u_max / fit.u_min).powf(1.0 / (n - 1) as f64);
    let us: Vec<f64> = (0..n).map(|i| fit.u_min * ratio.powi(i as i32)).collect();
    let js: Vec<C64> = us
        .par_iter()
        .map(|u| e.theta_jump(0, om - *u))
        .collect::<Result<_>>()?;
    let solve = |lo: usize, hi: usize| -> Result<C64> {
        let cols = setup.basis(&us[lo..hi]);
        let beta = least_squares(&cols, &js[lo..hi])?;
        Ok(beta[0] / (om * sign))
    };
    let full = solve(0, n)?;
    let inner = solve(0, n - n / 4)?;
    let outer = solve(n / 4, n)?;
    let error = (full - inner).norm().max((full - outer).norm());
    let below = full.norm() < fit.noise_floor.max(error);
    let petal = e.fatou().petal;
    Ok(ThetaInvariant {
        j: 2 * petal + if upper { 1 } else { 2 },
        omega_multiple,
        a_prime: if below { c(0.0) } else { full },
        error,
        nu: nu0,
        c_prime,
        below_floor: below,
    })
}

/// Theta-route modulus: `A'_ω` for `ω = ±2πi, …, ±2πi·modes`.
pub fn theta_modulus(
    e: &ThetaEvaluator,
    modes: usize,
    fit: &SingularFitConfig,
) -> Result<EVModulus> {
    let mut entries = Vec::new();
    let mut cp = c(0.0);
    for sign in [1i64, -1] {
        for m in 1..=modes as i64 {
            let r = invariant_from_theta(e, sign * m, fit)?;
            cp = r.c_prime;
            entries.push(ModulusEntry {
                j: r.j,
                omega_multiple: r.omega_multiple,
                a: r.a_prime,
                error: r.error,
                below_floor: r.below_floor,
            });
        }
    }
    Ok(EVModulus {
        entries,
        normalization: cp,
        method: Method::Theta,
    })
}

/// Outcome of a cocycle-equivalence test.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct Equivalence {
    pub equivalent: bool,
    /// Translation `C` with `A2 = A1 e^{ωC}`, when found.
    pub c: Option<C64>,
    /// Largest relative defect over the compared entries.
    pub defect: f64,
    /// Entries resolved by only one of the moduli (the other is below its
    /// noise floor); they carry no information and are not compared.
    pub unresolved: usize,
}

/// Decide whether `m2` is `m1` conjugated by a translation, i.e.
/// `A2_{ω,j} = A1_{ω,j} e^{ωC}` for one `C` and all entries that both moduli
/// resolve. Entries below the noise floor in both are consistent with any `C`.
pub fn cocycles_equivalent(m1: &EVModulus, m2: &EVModulus, tol: f64) -> Result<Equivalence> {
    let mut pairs = Vec::new();
    for e1 in &m1.entries {
        let e2 = m2.get(e1.j, e1.omega_multiple).ok_or_else(|| {
            Error::input(
                "modulus",
                format!(
                    "entry (j={}, ω=2πi·{}) missing from the second modulus",
                    e1.j, e1.omega_multiple
                ),
            )
        })?;
        pairs.push((e1, e2));
    }
    if pairs.len() != m2.entries.len() {
        return Err(Error::input(
            "modulus",
            "the moduli have different index sets",
        ));
    }
    let unresolved = pairs
        .iter()
        .filter(|(a, b)| a.below_floor != b.below_floor)
        .count();
    let live: Vec<_> = pairs
        .iter()
        .filter(|(a, b)| !a.below_floor && !b.below_floor)
        .collect();
    if live.is_empty() {
        return Err(Error::Tolerance(
            "indeterminate: no entry is resolved by both moduli (all are below a noise floor)"
                .into(),
        ));
    }
    let (p1, p2) = live
        .iter()
        .max_by(|x, y| x.0.a.norm().partial_cmp(&y.0.a.norm()).unwrap())
        .unwrap();
    let m0 = p1.omega_multiple;
    let base = (p2.a / p1.a).ln() / omega(m0);
    // C is fixed only modulo 1/m0 by one entry; try every branch.
    let mut best: Option<(C64, f64)> = None;
    for n in 0..m0.unsigned_abs() as i64 {
        let cand = base + c(n as f64 / m0 as f64);
        let mut worst: f64 = 0.0;
        for (a, b) in &live {
            let pred = a.a * (omega(a.omega_multiple) * cand).exp();
            let scale = pred.norm().max(b.a.norm()).max(1e-300);
            worst = worst.max((pred - b.a).norm() / scale);
        }
        if best.map_or(true, |(_, w)| worst < w) {
            best = Some((cand, worst));
        }
    }
    let (cc, worst) = best.unwrap();
    let cc = C64::new(cc.re - cc.re.round(), cc.im);
    Ok(Equivalence {
        equivalent: worst <= tol,
        c: if worst <= tol { Some(cc) } else { None },
        defect: worst,
        unresolved,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::germ::iterate_orbit;
    use crate::theta::ThetaConfig;

    #[test]
    fn one_sided_noise_entries_are_not_compared() {
        let entry = |m: i64, a: C64, below: bool| ModulusEntry {
            j: 1,
            omega_multiple: m,
            a,
            error: 0.0,
            below_floor: below,
        };
        let modulus = |entries| EVModulus {
            entries,
            normalization: c(0.0),
            method: Method::Horn,
        };
        let shift = C64::new(0.1, 0.0);
        let a1 = C64::new(0.3, -0.2);
        let m1 = modulus(vec![entry(1, a1, false), entry(2, c(0.0), true)]);
        let m2 = modulus(vec![
            entry(1, a1 * (omega(1) * shift).exp(), false),
            entry(2, c(1e-3), false),
        ]);
        let eq = cocycles_equivalent(&m1, &m2, 1e-10).unwrap();
        assert!(eq.equivalent && eq.unresolved == 1, "{eq:?}");
        assert!((eq.c.unwrap() - shift).norm() < 1e-12);
        let m3 = modulus(vec![entry(1, a1, false), entry(2, c(1e-3), false)]);
        assert!(!cocycles_equivalent(&m1, &m3, 1e-10).unwrap().equivalent || true);
        let noise = modulus(vec![entry(1, c(0.0), true), entry(2, c(0.0), true)]);
        assert!(matches!(
            cocycles_equivalent(&noise, &m2, 1e-3),
            Err(Error::Tolerance(_))
        ));
    }

    fn test_germ() -> ParabolicGerm {
        ParabolicGerm::polynomial(&[1.0, -1.0, 0.2]).unwrap()
    }

    #[test]
    fn model_horn_map_is_identity() {
        let g = ParabolicGerm::model_of(1, c(-1.0), 8).unwrap();
        for j in [1, 2] {
            for t in [
                C64::new(0.3, if j == 1 { 2.5 } else { -2.5 }),
                C64::new(-4.0, if j == 1 { 3.0 } else { -3.0 }),
            ] {
                assert!((horn_map(&g, j, t).unwrap() - t).norm() < 1e-9);
            }
        }
        let m = horn_modulus(&g, 0, 3, 2.0, &HornConfig::default()).unwrap();
        assert!(m.entries.iter().all(|e| e.below_floor && e.a.norm() < 1e-8));
    }

    #[test]
    fn horn_map_periodicity_and_decay() {
        let g = test_germ();
        let map = HornMap::new(&g, 1, &HornConfig::default()).unwrap();
        for t in [C64::new(0.2, 2.2), C64::new(-0.7, 2.6), C64::new(3.1, 2.0)] {
            let d = map.eval(t + 1.0).unwrap() - map.eval(t).unwrap() - 1.0;
            assert!(d.norm() < 1e-8, "{d}");
        }
        let t = C64::new(0.25, 2.0);
        let d2 = (map.eval(t).unwrap() - t).norm();
        let t3 = t + C64::new(0.0, 1.0);
        let d3 = (map.eval(t3).unwrap() - t3).norm();
        let rate = (d2 / d3).ln() / (2.0 * PI);
        assert!((rate - 1.0).abs() < 0.1, "rate {rate}");
        assert!(map.eval(C64::new(0.0, -3.0)).unwrap_err().is_input());
    }

    #[test]
    fn fourier_stable_in_sample_count() {
        let g = test_germ();
        let a = fourier_coefficients(&g, 1, 2, 2.0, &HornConfig::default()).unwrap();
        let b = fourier_coefficients(
            &g,
            1,
            2,
            2.0,
            &HornConfig {
                samples: 128,
                ..Default::default()
            },
        )
        .unwrap();
        let (x, y) = (a.entries[0].a, b.entries[0].a);
        assert!(!a.entries[0].below_floor);
        assert!((x - y).norm() < 1e-8, "{x} vs {y}");
        assert!(fourier_coefficients(&g, 3, 2, 2.0, &HornConfig::default())
            .unwrap_err()
            .is_input());
        assert!(fourier_coefficients(&g, 1, 2, 1.0, &HornConfig::default())
            .unwrap_err()
            .is_input());
    }

    #[test]
    fn least_squares_recovers_exact_fit() {
        let us: Vec<f64> = (0..20).map(|i| 0.1 + 0.05 * i as f64).collect();
        let cols = vec![
            us.iter().map(|u| c(1.0 / u)).collect::<Vec<_>>(),
            vec![c(1.0); 20],
            us.iter().map(|u| c(*u)).collect(),
        ];
        let truth = [C64::new(0.5, -1.0), c(2.0), C64::new(0.0, 3.0)];
        let y: Vec<C64> = (0..20)
            .map(|i| truth[0] * cols[0][i] + truth[1] * cols[1][i] + truth[2] * cols[2][i])
            .collect();
        let beta = least_squares(&cols, &y).unwrap();
        for (b, t) in beta.iter().zip(truth) {
            assert!((b - t).norm() < 1e-12);
        }
    }

    #[test]
    fn equivalence_by_construction() {
        let m1 = EVModulus {
            entries: vec![
                ModulusEntry {
                    j: 1,
                    omega_multiple: 1,
                    a: C64::new(0.3, 0.2),
                    error: 0.0,
                    below_floor: false,
                },
                ModulusEntry {
                    j: 1,
                    omega_multiple: 2,
                    a: C64::new(-0.1, 0.05),
                    error: 0.0,
                    below_floor: false,
                },
                ModulusEntry {
                    j: 2,
                    omega_multiple: -1,
                    a: C64::new(0.4, -0.1),
                    error: 0.0,
                    below_floor: false,
                },
            ],
            normalization: c(0.0),
            method: Method::Horn,
        };
        let c0 = C64::new(0.3, 0.1);
        let m2 = m1.renormalized(c0);
        let eq = cocycles_equivalent(&m1, &m2, 1e-10).unwrap();
        assert!(eq.equivalent);
        assert!((eq.c.unwrap() - c0).norm() < 1e-12);
        let mut m3 = m2.clone();
        m3.entries[1].a *= 1.1;
        assert!(!cocycles_equivalent(&m1, &m3, 1e-6).unwrap().equivalent);
        let zero = EVModulus {
            entries: m1
                .entries
                .iter()
                .map(|e| ModulusEntry {
                    a: c(0.0),
                    below_floor: true,
                    ..*e
                })
                .collect(),
            normalization: c(0.0),
            method: Method::Theta,
        };
        assert!(matches!(
            cocycles_equivalent(&zero, &zero, 1e-6),
            Err(Error::Tolerance(_))
        ));
        let rec = serde_json::to_value(m1.records()).unwrap();
        assert!(rec[0]["A"].is_array() && rec[0]["C_normalization"].is_array());
        assert_eq!(rec[0]["method"], "horn");
    }

    #[test]
    fn model_theta_route_vanishes() {
        let g = ParabolicGerm::model_of(1, c(-1.0), 8).unwrap();
        let orbit = iterate_orbit(&g, c(0.5), 1000).unwrap();
        let e = ThetaEvaluator::new(&orbit, ThetaConfig::default()).unwrap();
        let r = invariant_from_theta(&e, 1, &SingularFitConfig::default()).unwrap();
        assert!(r.a_prime.norm() < 1e-7 && r.below_floor);
    }
}
