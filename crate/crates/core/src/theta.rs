//! The dynamic theta function `Θ_𝔸(s) = Σ_n e^{−s t(x_n)}` of an orbit: direct
//! sums, strip-wise analytic continuation, jumps across the cuts at `2πiℤ`,
//! sheet bookkeeping, and the Hankel transforms that give back the Fatou
//! coordinate.
//!
//! Notation: `ψ = ψ_𝔸` is the attracting Fatou coordinate with `ψ(x0) = 0` and
//! `T(w) = t(ψ^{−1}(w))`, so that `Θ(s) = Σ_{n≥0} e^{−s T(n)}`.
//!
//! * **Strips.** With cuts along `ω + e^{iα}ℝ_{≥0}` and the kernel
//!   `B_m(w) = e^{2πimw}/(e^{2πiw} − 1)` (residue `1/2πi` at every integer),
//!   `Θ(s) = ∫_L B_m(w) e^{−sT(w)} dw` over the line `L = b + i e^{−iα}ℝ`.
//!   The integral converges for `s` between the lines through `2πi(m−1)` and
//!   `2πim`, which is strip `m`. Tilting `L` by up to 60° keeps the same
//!   analytic function and is used to improve decay near the cuts.
//! * **Jumps.** `B_{m+1} − B_m = e^{ωw}` with `ω = 2πim`, so the jump across
//!   the cut at `ω` is `J_ω(s) = ∫_H e^{ωw} e^{−sT(w)} dw`. Here `H` is a
//!   clockwise hairpin around the negative real `w`-axis: in along
//!   `Im w = +h`, down the segment `Re w = b`, out along `Im w = −h`. The legs
//!   are integrated one unit cell at a time, using
//!   `T(w − 1) = t(f^{−1}(ψ^{−1}(w)))` and `e^{ω(w−n)} = e^{ωw}`. One leg is
//!   larger than the result by about `e^{2π|m|h}`, so rounding error grows
//!   with `|m|`; the reported error estimate includes this cancellation.
//! * **Near 0.** `J_0` equals `2πi` times the minor Borel transform of
//!   `dψ̂/dt`. This gives a convergent series in `(−s)^{1/k}` that is used on
//!   small circles around the origin.

use crate::contour::{hankel_integral, ContourSpec};
use crate::error::{Error, Result};
use crate::fatou::{FatouConfig, FatouEvaluator, FormalFatou};
use crate::germ::Orbit;
use crate::quad::GaussLegendre;
use crate::special::rgamma;
use crate::C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, Mutex, RwLock};

const TWO_PI_I: C64 = C64 {
    re: 0.0,
    im: 2.0 * PI,
};

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// Relative size below which quadrature terms are treated as negligible.
const NEGLIGIBLE: f64 = 1e-17;

/// Tunables of the theta evaluator.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct ThetaConfig {
    /// Cut direction `α ∈ ]π/2, 3π/2[`.
    pub alpha: f64,
    /// Base point of the strip lines, `b ∈ ]−1, 0[`.
    pub b: f64,
    /// Smallest `Re s` at which the direct sum is used.
    pub direct_min: f64,
    pub quad_tol: f64,
    /// Width in the line parameter of a Gauss–Legendre panel.
    pub panel_width: f64,
    /// Gauss–Legendre points per panel.
    pub nodes: usize,
    /// Cap on the line parameter `|u|` of strip integrals.
    pub max_extent: f64,
    /// Half-height `h` of the jump hairpin.
    pub hairpin_height: f64,
    /// Cap on the number of unit cells per hairpin leg.
    pub max_cells: usize,
    /// Cap on the number of cut crossings of a sheet point.
    pub max_crossings: usize,
    /// Loop radius of the Hankel contours used by the transforms.
    pub loop_radius: f64,
    pub fatou: FatouConfig,
}

impl Default for ThetaConfig {
    fn default() -> Self {
        ThetaConfig {
            alpha: PI,
            b: -0.5,
            direct_min: 0.05,
            quad_tol: 1e-10,
            panel_width: 0.5,
            nodes: 24,
            max_extent: 200.0,
            hairpin_height: 0.5,
            max_cells: 20_000,
            max_crossings: 8,
            loop_radius: 0.5,
            fatou: FatouConfig::precise(),
        }
    }
}

impl ThetaConfig {
    pub fn validate(&self) -> Result<()> {
        let rel = (self.alpha - PI + PI).rem_euclid(2.0 * PI) - PI;
        if !(rel.abs() < PI / 2.0) {
            return Err(Error::input("alpha", "must lie in ]π/2, 3π/2[ mod 2π"));
        }
        if !(self.b > -1.0 && self.b < 0.0) {
            return Err(Error::input("b", "must lie strictly between -1 and 0"));
        }
        let positive = [
            ("direct_min", self.direct_min),
            ("quad_tol", self.quad_tol),
            ("panel_width", self.panel_width),
            ("max_extent", self.max_extent),
            ("hairpin_height", self.hairpin_height),
            ("loop_radius", self.loop_radius),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::input(name, "must be positive and finite"));
            }
        }
        if self.nodes < 4 {
            return Err(Error::input("nodes", "must be at least 4"));
        }
        if self.loop_radius >= PI {
            return Err(Error::input("loop_radius", "must be smaller than π"));
        }
        Ok(())
    }
}

/// One crossing of the cut at `ω = 2πi·omega_multiple`: `ccw` is the
/// counterclockwise direction around `ω`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Crossing {
    pub omega_multiple: i64,
    pub ccw: bool,
}

/// A point of the universal cover of `ℂ ∖ 2πiℤ`: the endpoint `s` of a path
/// that starts on the main sheet, with the cuts it crossed in order.
///
/// Text form: `"s_re,s_im"` or `"s_re,s_im;crossings=+2,-0,+-1"`. In each
/// token the first character is the direction (`+` counterclockwise, `-`
/// clockwise) and the rest is the multiple of `2πi` naming the cut.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SheetPoint {
    pub s: C64,
    pub crossings: Vec<Crossing>,
}

impl SheetPoint {
    pub fn main(s: C64) -> Self {
        SheetPoint {
            s,
            crossings: Vec::new(),
        }
    }

    /// Append a crossing of the cut at `2πi·m`.
    pub fn cross(mut self, m: i64, ccw: bool) -> Self {
        self.crossings.push(Crossing {
            omega_multiple: m,
            ccw,
        });
        self
    }
}

impl fmt::Display for SheetPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{}", self.s.re, self.s.im)?;
        if !self.crossings.is_empty() {
            let toks: Vec<String> = self
                .crossings
                .iter()
                .map(|c| format!("{}{}", if c.ccw { '+' } else { '-' }, c.omega_multiple))
                .collect();
            write!(f, ";crossings={}", toks.join(","))?;
        }
        Ok(())
    }
}

impl FromStr for SheetPoint {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let text = text.replace('\u{2212}', "-");
        let mut parts = text.splitn(2, ';');
        let head = parts.next().unwrap_or("").trim();
        let nums: Vec<&str> = head.split(',').map(str::trim).collect();
        if nums.len() != 2 {
            return Err(Error::input("s", format!("expected 're,im', got '{head}'")));
        }
        let parse = |v: &str| {
            v.parse::<f64>()
                .map_err(|_| Error::input("s", format!("'{v}' is not a number")))
        };
        let s = C64::new(parse(nums[0])?, parse(nums[1])?);
        let mut point = SheetPoint::main(s);
        if let Some(tail) = parts.next() {
            let tail = tail.trim();
            let list = tail.strip_prefix("crossings=").ok_or_else(|| {
                Error::input("crossings", format!("expected 'crossings=…', got '{tail}'"))
            })?;
            for tok in list.split(',').map(str::trim).filter(|t| !t.is_empty()) {
                let (dir, rest) = tok.split_at(1);
                let ccw = match dir {
                    "+" => true,
                    "-" => false,
                    _ => {
                        return Err(Error::input(
                            "crossings",
                            format!("token '{tok}' must start with + or -"),
                        ))
                    }
                };
                let m = rest.parse::<i64>().map_err(|_| {
                    Error::input(
                        "crossings",
                        format!("token '{tok}' has no integer multiple"),
                    )
                })?;
                point = point.cross(m, ccw);
            }
        }
        Ok(point)
    }
}

/// Gauss–Legendre panel on a strip line: nodes, weights times `dw/du`, and `T`.
struct Panel {
    w: Vec<C64>,
    wt: Vec<C64>,
    t: Vec<C64>,
}

/// Lazily extended panels of one (tilted) strip line; side 0 is `u > 0`.
struct LineCache {
    tilt: f64,
    d: C64,
    sides: [RwLock<Vec<Arc<Panel>>>; 2],
}

/// Backward orbits of the cell nodes of one hairpin leg: `t[n][i]` is
/// `T(v_i − n ± ih)`.
#[derive(Clone, Default)]
struct CellLeg {
    t: Vec<Arc<Vec<C64>>>,
    x: Vec<C64>,
}

struct Hairpin {
    cell_v: Vec<f64>,
    cell_wt: Vec<f64>,
    vertical: Panel,
    legs: [RwLock<Arc<CellLeg>>; 2],
}

/// Result of the Fatou-recovery transform at one point.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct Recovered {
    /// `(1/2πi) ∮ Θ(s)/s · e^{s t(x)} ds`.
    pub value: C64,
    /// `ψ_𝔸(x)` from the sectorial evaluator.
    pub psi: C64,
    /// `value − psi`.
    pub constant: C64,
    pub error: f64,
}

/// Both sides of the boundary-value identity at `ω ≠ 0`.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct BvCheck {
    pub lhs: C64,
    pub rhs: C64,
    pub defect: f64,
}

/// The weight `x ↦ t` summed over the orbit.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Weight {
    /// `t(x) = −x^{−k}/(ak)`: the dynamic theta function.
    Model,
    /// `t(φ(x))` with `a φ^{k+1} = f − x`, i.e. the kernel `τ(ε)` at
    /// `ε = (x − f(x))/2`: the fractal theta function
    /// `Σ_{n≥1} e^{−s τ(ε_n)}`.
    Fractal,
}

/// `φ(x) = x ((f(x) − x)/(a x^{k+1}))^{1/(k+1)}`, the root continuous at 0.
pub fn conjugacy_point(g: &crate::germ::ParabolicGerm, x: C64) -> C64 {
    let k = g.k() as i32;
    let ratio = g.displacement(x) / (g.a() * x.powi(k + 1));
    x * ratio.powf(1.0 / (k + 1) as f64)
}

/// Immutable evaluator of `Θ_𝔸` and its continuation for one orbit. Internal
/// caches of `T` values are filled on demand and shared between threads.
pub struct ThetaEvaluator {
    orbit: Orbit,
    fatou: FatouEvaluator,
    config: ThetaConfig,
    weight: Weight,
    /// Weights of the stored orbit points.
    t_values: Vec<C64>,
    /// For model germs with model weight `T(w) = w + shift` exactly.
    exact_shift: Option<C64>,
    /// Formal Fatou coordinate in the weight variable when it differs from
    /// the germ's own (fractal weight).
    weight_formal: Option<FormalFatou>,
    lines: Vec<LineCache>,
    hairpin: Mutex<Option<Arc<Hairpin>>>,
    memo: Mutex<HashMap<[u64; 4], C64>>,
}

impl fmt::Debug for ThetaEvaluator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ThetaEvaluator")
            .field("x0", &self.orbit.x0)
            .field("orbit_len", &self.orbit.len())
            .field("config", &self.config)
            .finish()
    }
}

impl ThetaEvaluator {
    pub fn new(orbit: &Orbit, config: ThetaConfig) -> Result<Self> {
        config.validate()?;
        if orbit.len() < 2 {
            return Err(Error::input("orbit", "needs at least two points"));
        }
        let fatou = FatouEvaluator::from_orbit(orbit, config.fatou)?;
        Ok(Self::assemble(orbit, fatou, config, Weight::Model))
    }

    /// Evaluator of the fractal theta function of the orbit (weight
    /// `τ(ε)` instead of `t`).
    pub fn fractal(orbit: &Orbit, config: ThetaConfig) -> Result<Self> {
        config.validate()?;
        if orbit.len() < 2 {
            return Err(Error::input("orbit", "needs at least two points"));
        }
        let fatou = FatouEvaluator::from_orbit(orbit, config.fatou)?;
        let (conj, _) = crate::fractal::conjugated_germ(&orbit.germ)?;
        let mut e = Self::assemble(orbit, fatou, config, Weight::Fractal);
        e.weight_formal = Some(FormalFatou::new(&conj)?);
        Ok(e)
    }

    /// Reuse an existing Fatou evaluator (it must belong to the orbit's germ
    /// and be normalized at the orbit's first point).
    pub fn with_fatou(orbit: &Orbit, fatou: FatouEvaluator, config: ThetaConfig) -> Result<Self> {
        config.validate()?;
        if orbit.len() < 2 {
            return Err(Error::input("orbit", "needs at least two points"));
        }
        if (fatou.x0 - orbit.x0).norm() > 1e-15 * orbit.x0.norm() {
            return Err(Error::input(
                "fatou",
                "evaluator is not normalized at the orbit start",
            ));
        }
        Ok(Self::assemble(orbit, fatou, config, Weight::Model))
    }

    fn assemble(orbit: &Orbit, fatou: FatouEvaluator, config: ThetaConfig, weight: Weight) -> Self {
        let t_values = match weight {
            Weight::Model => orbit.t_values.clone(),
            Weight::Fractal => orbit
                .points
                .iter()
                .map(|x| orbit.germ.t(conjugacy_point(&orbit.germ, *x)))
                .collect(),
        };
        let exact_shift = if orbit.germ.is_model() && weight == Weight::Model {
            Some(fatou.offset)
        } else {
            None
        };
        let step = 7.5f64.to_radians();
        let mut tilts: Vec<f64> = (-8..=8)
            .map(|i| i as f64 * step)
            .filter(|phi| {
                let rel = (config.alpha + phi - PI + PI).rem_euclid(2.0 * PI) - PI;
                rel.abs() < PI / 2.0 - 1e-9
            })
            .collect();
        tilts.sort_by(|a, b| {
            a.abs()
                .partial_cmp(&b.abs())
                .unwrap()
                .then(a.partial_cmp(b).unwrap())
        });
        let lines = tilts
            .into_iter()
            .map(|tilt| LineCache {
                tilt,
                d: C64::i() * C64::from_polar(1.0, -(config.alpha + tilt)),
                sides: [RwLock::new(Vec::new()), RwLock::new(Vec::new())],
            })
            .collect();
        ThetaEvaluator {
            orbit: orbit.clone(),
            fatou,
            config,
            weight,
            t_values,
            exact_shift,
            weight_formal: None,
            lines,
            hairpin: Mutex::new(None),
            memo: Mutex::new(HashMap::new()),
        }
    }

    pub fn orbit(&self) -> &Orbit {
        &self.orbit
    }

    pub fn fatou(&self) -> &FatouEvaluator {
        &self.fatou
    }

    pub fn config(&self) -> &ThetaConfig {
        &self.config
    }

    pub fn weight_kind(&self) -> Weight {
        self.weight
    }

    /// Weights `t(x_n)` (or `τ(ε_{n+1})`) of the stored orbit.
    pub fn t_values(&self) -> &[C64] {
        &self.t_values
    }

    /// The weight of a point.
    pub fn weight(&self, x: C64) -> C64 {
        let g = &self.orbit.germ;
        match self.weight {
            Weight::Model => g.t(x),
            Weight::Fractal => g.t(conjugacy_point(g, x)),
        }
    }

    /// `T(w) = t(ψ_𝔸^{−1}(w))`.
    pub fn big_t(&self, w: C64) -> Result<C64> {
        if let Some(sh) = self.exact_shift {
            return Ok(w + sh);
        }
        let x = self.fatou.inverse(w)?;
        Ok(self.weight(x))
    }

    /// Index of the strip of the base direction `α` containing `s`.
    pub fn strip_index(&self, s: C64) -> i64 {
        let a = self.config.alpha;
        let q = (s * C64::from_polar(1.0, -a)).im / (2.0 * PI * a.cos());
        q.floor() as i64 + 1
    }

    // ------------------------------------------------------------------
    // direct sum

    /// `Θ(s)` by the direct sum (requires `Re s ≥ direct_min`).
    pub fn theta_direct(&self, s: C64) -> Result<C64> {
        Ok(self.direct_scaled(s, c(0.0))?.0)
    }

    /// `(Θ(s)·e^{s·shift}, error)` by the direct sum.
    pub fn direct_scaled(&self, s: C64, shift: C64) -> Result<(C64, f64)> {
        if !(s.re >= self.config.direct_min) {
            return Err(Error::pre(format!(
                "direct theta sum needs Re s >= {}, got {s}; use the continuation",
                self.config.direct_min
            )));
        }
        let ratio = (-s.re).exp();
        let tail_factor = ratio / (1.0 - ratio);
        let mut sum = c(0.0);
        let mut abs_sum = 0.0;
        let mut last = 0.0;
        let term = |t: C64| (-s * (t - shift)).exp();
        let mut stopped = false;
        for &t in &self.t_values {
            let v = term(t);
            sum += v;
            abs_sum += v.norm();
            last = v.norm();
            if last * tail_factor <= NEGLIGIBLE * sum.norm().max(abs_sum * 1e-3) {
                stopped = true;
                break;
            }
        }
        if !stopped {
            // continue past the stored orbit
            let g = &self.orbit.germ;
            let mut x = self.orbit.last();
            let t_first = self.t_values[0];
            let exact = g.is_model() && self.weight == Weight::Model;
            let mut n = self.orbit.len();
            let cap = 10_000_000usize;
            loop {
                let t = if exact {
                    t_first + n as f64
                } else {
                    x = g.eval(x);
                    self.weight(x)
                };
                let v = term(t);
                sum += v;
                abs_sum += v.norm();
                last = v.norm();
                n += 1;
                if last * tail_factor <= NEGLIGIBLE * sum.norm().max(abs_sum * 1e-3) {
                    break;
                }
                if n >= cap {
                    return Err(Error::conv(format!(
                        "direct theta sum at {s} did not reach its tail bound"
                    )));
                }
            }
        }
        let err = last * tail_factor + 1e-16 * abs_sum;
        Ok((sum, err))
    }

    // ------------------------------------------------------------------
    // strips

    /// Decay rates of the strip-`m` integrand at both ends of a line with
    /// direction `d` (positive means decaying).
    fn strip_rates(s: C64, m: i64, d: C64) -> [f64; 2] {
        let mut out = [0.0; 2];
        for (idx, e) in [1.0, -1.0].into_iter().enumerate() {
            let de = d * e;
            let om = if de.im < 0.0 {
                TWO_PI_I * (m - 1) as f64
            } else {
                TWO_PI_I * m as f64
            };
            out[idx] = -((om - s) * de).re;
        }
        out
    }

    fn min_rate(&self) -> f64 {
        42.0 / self.config.max_extent
    }

    /// Best tilted line for strip `m` at `s`: index and decay rates.
    fn best_line(&self, s: C64, m: i64) -> Option<(usize, [f64; 2])> {
        let mut best: Option<(usize, [f64; 2])> = None;
        for (i, line) in self.lines.iter().enumerate() {
            let r = Self::strip_rates(s, m, line.d);
            let score = r[0].min(r[1]);
            match best {
                Some((_, br)) if br[0].min(br[1]) >= score => {}
                _ => best = Some((i, r)),
            }
        }
        best.filter(|(_, r)| r[0].min(r[1]) >= self.min_rate())
    }

    fn build_panels(
        &self,
        li: usize,
        side: usize,
        from: usize,
        to: usize,
    ) -> Result<Vec<Arc<Panel>>> {
        let line = &self.lines[li];
        let gl = GaussLegendre::get(self.config.nodes);
        let h = self.config.panel_width;
        let sign = if side == 0 { 1.0 } else { -1.0 };
        let n = gl.nodes.len();
        let mut ws = Vec::with_capacity((to - from) * n);
        let mut wts = Vec::with_capacity((to - from) * n);
        for p in from..to {
            for j in 0..n {
                let u = sign * (p as f64 * h + 0.5 * h * (1.0 + gl.nodes[j]));
                ws.push(c(self.config.b) + line.d * u);
                wts.push(line.d * (gl.weights[j] * 0.5 * h));
            }
        }
        let ts: Vec<Result<C64>> = ws.par_iter().map(|w| self.big_t(*w)).collect();
        let mut out = Vec::with_capacity(to - from);
        let mut it_w = ws.into_iter();
        let mut it_wt = wts.into_iter();
        let mut it_t = ts.into_iter();
        for _ in from..to {
            let mut panel = Panel {
                w: Vec::with_capacity(n),
                wt: Vec::with_capacity(n),
                t: Vec::with_capacity(n),
            };
            for _ in 0..n {
                panel.w.push(it_w.next().unwrap());
                panel.wt.push(it_wt.next().unwrap());
                panel.t.push(it_t.next().unwrap()?);
            }
            out.push(Arc::new(panel));
        }
        Ok(out)
    }

    /// The first `upto` panels of a line side, extending the cache if needed.
    /// Panels are computed without holding the lock (the computation itself is
    /// parallel and must not block on the cache).
    fn line_panels(&self, li: usize, side: usize, upto: usize) -> Result<Vec<Arc<Panel>>> {
        let have = {
            let g = self.lines[li].sides[side]
                .read()
                .expect("line cache poisoned");
            if g.len() >= upto {
                return Ok(g[..upto].to_vec());
            }
            g.len()
        };
        let fresh = self.build_panels(li, side, have, upto)?;
        let mut g = self.lines[li].sides[side]
            .write()
            .expect("line cache poisoned");
        if g.len() < upto {
            let skip = g.len() - have;
            g.extend(fresh.into_iter().skip(skip));
        }
        Ok(g[..upto].to_vec())
    }

    /// `(Θ_m(s)·e^{s·shift}, error)`: strip-`m` representation.
    pub fn strip_scaled(&self, s: C64, m: i64, shift: C64) -> Result<(C64, f64)> {
        let (li, rates) = self.best_line(s, m).ok_or_else(|| {
            Error::pre(format!(
                "s = {s} is outside strip {m} (or within {:.3} of its singular points)",
                self.min_rate()
            ))
        })?;
        let h = self.config.panel_width;
        let max_panels = (self.config.max_extent / h).ceil() as usize;
        let two_pi_i_m = TWO_PI_I * m as f64;
        let mut total = c(0.0);
        let mut abs_sum = 0.0;
        let mut tail = 0.0;
        for (side, rate) in rates.into_iter().enumerate() {
            let mut target = (((30.0 / rate) / h).ceil() as usize).clamp(8, max_panels);
            let mut done = 0usize;
            let mut maxmag: f64 = 0.0;
            let mut quiet = 0usize;
            let mut converged = false;
            let mut last_mag = 0.0;
            while !converged {
                let panels = self.line_panels(li, side, target)?;
                for p in &panels[done..] {
                    let mut pmax: f64 = 0.0;
                    for j in 0..p.w.len() {
                        let w = p.w[j];
                        let (ex, den) = if w.im >= 0.0 {
                            (two_pi_i_m * w, (TWO_PI_I * w).exp() - 1.0)
                        } else {
                            (two_pi_i_m * w - TWO_PI_I * w, 1.0 - (-TWO_PI_I * w).exp())
                        };
                        let v = (ex - s * (p.t[j] - shift)).exp() / den * p.wt[j];
                        total += v;
                        abs_sum += v.norm();
                        pmax = pmax.max(v.norm());
                    }
                    if !pmax.is_finite() {
                        return Err(Error::conv(format!("strip integrand overflow at s = {s}")));
                    }
                    maxmag = maxmag.max(pmax);
                    last_mag = pmax;
                    if pmax <= NEGLIGIBLE * maxmag {
                        quiet += 1;
                        if quiet >= 3 {
                            converged = true;
                            break;
                        }
                    } else {
                        quiet = 0;
                    }
                }
                done = panels.len();
                if converged {
                    break;
                }
                if target >= max_panels {
                    if last_mag <= 1e-13 * maxmag {
                        break;
                    }
                    return Err(Error::conv(format!(
                        "strip {m} integrand at s = {s} did not decay within |u| <= {}",
                        self.config.max_extent
                    )));
                }
                target = (target * 3 / 2 + 8).min(max_panels);
            }
            tail += last_mag * h;
        }
        let _ = self.lines[li].tilt;
        Ok((total, tail + 1e-15 * abs_sum))
    }

    /// Strip-`m` representation of `Θ` at `s` (its analytic continuation when
    /// `s` is slightly beyond the strip).
    pub fn theta_strip(&self, s: C64, m: i64) -> Result<C64> {
        Ok(self.strip_scaled(s, m, c(0.0))?.0)
    }

    /// Main-sheet value with scaling: direct sum when `Re s ≥ direct_min`,
    /// otherwise the strip containing `s`.
    pub fn main_scaled(&self, s: C64, shift: C64) -> Result<(C64, f64)> {
        if s.re >= self.config.direct_min {
            self.direct_scaled(s, shift)
        } else {
            self.strip_scaled(s, self.strip_index(s), shift)
        }
    }

    fn main_scaled_memo(&self, s: C64, shift: C64) -> Result<C64> {
        let key = [
            s.re.to_bits(),
            s.im.to_bits(),
            shift.re.to_bits(),
            shift.im.to_bits(),
        ];
        if let Some(v) = self.memo.lock().expect("memo poisoned").get(&key) {
            return Ok(*v);
        }
        let v = self.main_scaled(s, shift)?.0;
        self.memo.lock().expect("memo poisoned").insert(key, v);
        Ok(v)
    }

    /// `Θ(s)` on the main sheet.
    pub fn theta(&self, s: C64) -> Result<C64> {
        Ok(self.main_scaled(s, c(0.0))?.0)
    }

    // ------------------------------------------------------------------
    // jumps

    fn build_hairpin(&self) -> Result<Hairpin> {
        let cfg = &self.config;
        let gl = GaussLegendre::get(cfg.nodes);
        let b = cfg.b;
        let hh = cfg.hairpin_height;
        // two panels per unit cell [b−1, b]
        let mut cell_v = Vec::new();
        let mut cell_wt = Vec::new();
        for p in 0..2 {
            let lo = b - 1.0 + 0.5 * p as f64;
            for (x, w) in gl.nodes.iter().zip(&gl.weights) {
                cell_v.push(lo + 0.25 * (1.0 + x));
                cell_wt.push(0.25 * w);
            }
        }
        // vertical segment b + ih → b − ih
        let np = ((2.0 * hh) / cfg.panel_width).ceil().max(2.0) as usize;
        let ph = 2.0 * hh / np as f64;
        let mut vw = Vec::new();
        let mut vwt = Vec::new();
        for p in 0..np {
            let lo = -hh + p as f64 * ph;
            for (x, w) in gl.nodes.iter().zip(&gl.weights) {
                let y = lo + 0.5 * ph * (1.0 + x);
                vw.push(C64::new(b, -y));
                vwt.push(C64::new(0.0, -0.5 * ph * w));
            }
        }
        let vt: Vec<C64> = vw
            .par_iter()
            .map(|w| self.big_t(*w))
            .collect::<Result<_>>()?;
        let mut legs = Vec::new();
        for sgn in [1.0, -1.0] {
            let base: Vec<C64> = cell_v.iter().map(|v| C64::new(*v, sgn * hh)).collect();
            let leg = if self.exact_shift.is_some() {
                CellLeg::default()
            } else {
                let xs: Vec<C64> = base
                    .par_iter()
                    .map(|w| self.fatou.inverse(*w))
                    .collect::<Result<_>>()?;
                CellLeg {
                    t: vec![Arc::new(xs.iter().map(|x| self.weight(*x)).collect())],
                    x: xs,
                }
            };
            legs.push(RwLock::new(Arc::new(leg)));
        }
        let lower = legs.pop().unwrap();
        let upper = legs.pop().unwrap();
        Ok(Hairpin {
            cell_v,
            cell_wt,
            vertical: Panel {
                w: vw,
                wt: vwt,
                t: vt,
            },
            legs: [upper, lower],
        })
    }

    fn hairpin(&self) -> Result<Arc<Hairpin>> {
        if let Some(h) = self.hairpin.lock().expect("hairpin poisoned").as_ref() {
            return Ok(h.clone());
        }
        let built = Arc::new(self.build_hairpin()?);
        let mut g = self.hairpin.lock().expect("hairpin poisoned");
        if g.is_none() {
            *g = Some(built);
        }
        Ok(g.as_ref().unwrap().clone())
    }

    /// Rows `T(v_i − n ± ih)` for `n < upto` on hairpin leg `leg`.
    fn leg_rows(&self, hp: &Hairpin, leg: usize, upto: usize) -> Result<Arc<CellLeg>> {
        let sgn = if leg == 0 { 1.0 } else { -1.0 };
        let hh = self.config.hairpin_height;
        if let Some(sh) = self.exact_shift {
            // closed form, no caching needed
            let rows = (0..upto)
                .map(|n| {
                    Arc::new(
                        hp.cell_v
                            .iter()
                            .map(|v| C64::new(v - n as f64, sgn * hh) + sh)
                            .collect(),
                    )
                })
                .collect();
            return Ok(Arc::new(CellLeg {
                t: rows,
                x: Vec::new(),
            }));
        }
        let snapshot = hp.legs[leg].read().expect("leg cache poisoned").clone();
        if snapshot.t.len() >= upto {
            return Ok(snapshot);
        }
        let have = snapshot.t.len();
        let extra = upto - have;
        let g = &self.orbit.germ;
        let columns: Vec<(Vec<C64>, C64)> = snapshot
            .x
            .par_iter()
            .map(|x0| {
                let mut x = *x0;
                let mut col = Vec::with_capacity(extra);
                for _ in 0..extra {
                    x = g.inverse(x)?;
                    col.push(self.weight(x));
                }
                Ok((col, x))
            })
            .collect::<Result<_>>()?;
        let mut next = (*snapshot).clone();
        for r in 0..extra {
            next.t
                .push(Arc::new(columns.iter().map(|(col, _)| col[r]).collect()));
        }
        next.x = columns.iter().map(|(_, x)| *x).collect();
        let next = Arc::new(next);
        let mut guard = hp.legs[leg].write().expect("leg cache poisoned");
        if guard.t.len() < next.t.len() {
            *guard = next.clone();
        }
        Ok(guard.clone())
    }

    /// `(J_ω(s)·e^{s·shift}, error)` with `ω = 2πi·m`, for `Re s < 0`.
    pub fn jump_scaled(&self, m: i64, s: C64, shift: C64) -> Result<(C64, f64)> {
        if !(s.re < 0.0) {
            return Err(Error::pre(format!(
                "theta_jump needs Re s < 0 (hairpin legs along Re w → −∞), got {s}"
            )));
        }
        let hp = self.hairpin()?;
        let om = TWO_PI_I * m as f64;
        let hh = self.config.hairpin_height;
        let mut total = c(0.0);
        let mut abs_sum = 0.0;
        let vt = &hp.vertical;
        for j in 0..vt.w.len() {
            let v = (om * vt.w[j] - s * (vt.t[j] - shift)).exp() * vt.wt[j];
            total += v;
            abs_sum += v.norm();
        }
        let mut tail = 0.0;
        for (leg, sgn, orient) in [(0usize, 1.0, 1.0), (1usize, -1.0, -1.0)] {
            let phase: Vec<C64> = hp
                .cell_v
                .iter()
                .map(|v| om * C64::new(*v, sgn * hh))
                .collect();
            let mut target = ((40.0 / -s.re).ceil() as usize + 4).clamp(16, self.config.max_cells);
            let mut done = 0usize;
            let mut maxmag: f64 = 0.0;
            let mut quiet = 0usize;
            let mut last = 0.0;
            loop {
                let rows = self.leg_rows(&hp, leg, target)?;
                let mut converged = false;
                for row in &rows.t[done..target] {
                    let mut cell = c(0.0);
                    let mut cmax: f64 = 0.0;
                    for i in 0..row.len() {
                        let v = (phase[i] - s * (row[i] - shift)).exp() * hp.cell_wt[i];
                        cell += v;
                        cmax = cmax.max(v.norm());
                    }
                    if !cmax.is_finite() {
                        return Err(Error::conv(format!("jump integrand overflow at s = {s}")));
                    }
                    total += cell * orient;
                    abs_sum += cell.norm();
                    maxmag = maxmag.max(cmax);
                    last = cmax;
                    if cmax <= NEGLIGIBLE * maxmag {
                        quiet += 1;
                        if quiet >= 3 {
                            converged = true;
                            break;
                        }
                    } else {
                        quiet = 0;
                    }
                }
                done = target;
                if converged {
                    break;
                }
                if target >= self.config.max_cells {
                    return Err(Error::conv(format!(
                        "jump legs at s = {s} did not decay within {} cells",
                        self.config.max_cells
                    )));
                }
                target = (target * 2).min(self.config.max_cells);
            }
            tail += last;
        }
        Ok((total, tail + 1e-15 * abs_sum))
    }

    /// `J_ω(s)`, the jump `strip_{m+1} − strip_m` across the cut at `ω = 2πi·m`.
    pub fn theta_jump(&self, m: i64, s: C64) -> Result<C64> {
        Ok(self.jump_scaled(m, s, c(0.0))?.0)
    }

    /// Formal Fatou coordinate as a series in the weight variable.
    fn series_formal(&self) -> &FormalFatou {
        self.weight_formal
            .as_ref()
            .unwrap_or_else(|| self.fatou.formal())
    }

    /// Coefficients `c_p` of `J_0(s) = 2πi Σ c_p (−s)^p / Γ(p)` (plus `ρ/k`):
    /// pairs `(p, c_p)` with `p = j/k`.
    fn jump_zero_terms(&self) -> Vec<(f64, C64)> {
        let ff = self.series_formal();
        let k = ff.k as i64;
        let kf = k as f64;
        let axis = self.fatou.coord.axis;
        let ak = ff.a.norm() * kf;
        let mut out = Vec::new();
        let js = ((-k + 1)..=-1).chain(1..=ff.tail_len() as i64);
        for j in js {
            let r = ff.r(j);
            if r.norm() == 0.0 {
                continue;
            }
            let p = j as f64 / kf;
            out.push((p, r * C64::from_polar(ak.powf(-p), j as f64 * axis)));
        }
        out
    }

    /// `J_0(s)` from the convergent Borel series of `dψ̂/dt` (small `|s|`,
    /// off the ray `s ≥ 0`). Returns `(value, error)`.
    pub fn jump_zero_series(&self, s: C64) -> Result<(C64, f64)> {
        if s.im == 0.0 && s.re >= 0.0 {
            return Err(Error::pre("J_0 series is cut along s >= 0"));
        }
        if s.norm() > 2.0 {
            return Err(Error::pre(format!(
                "|s| = {} is too large for the J_0 series",
                s.norm()
            )));
        }
        let ff = self.series_formal();
        let mut sum = ff.rho / ff.k as f64;
        let ms = -s;
        let mut mags = Vec::new();
        for (p, cp) in self.jump_zero_terms() {
            let v = cp * ms.powf(p) * rgamma(c(p));
            sum += v;
            mags.push(v.norm());
        }
        let err = mags.iter().rev().take(2).fold(0.0, |a, b| a + b);
        Ok((TWO_PI_I * sum, 2.0 * PI * err))
    }

    /// `∫ J_0 ds` along the cut from `r e^{iα}` to 0, term by term.
    fn jump_zero_cut_integral(&self, r: f64) -> C64 {
        let ff = self.series_formal();
        let e = -C64::from_polar(1.0, self.config.alpha);
        let mut sum = ff.rho / ff.k as f64 * e * r;
        for (p, cp) in self.jump_zero_terms() {
            let q = p + 1.0;
            sum += cp * (e * r).powf(q) / q * rgamma(c(p));
        }
        TWO_PI_I * sum
    }

    // ------------------------------------------------------------------
    // sheets

    /// Value on the universal cover: main-sheet value plus one signed jump per
    /// crossing.
    pub fn theta_continue(&self, p: &SheetPoint) -> Result<C64> {
        if p.crossings.len() > self.config.max_crossings {
            return Err(Error::input(
                "crossings",
                format!(
                    "at most {} crossings are supported",
                    self.config.max_crossings
                ),
            ));
        }
        let mut v = self.theta(p.s)?;
        for cr in &p.crossings {
            let j = self.theta_jump(cr.omega_multiple, p.s)?;
            if cr.ccw {
                v += j;
            } else {
                v -= j;
            }
        }
        Ok(v)
    }

    // ------------------------------------------------------------------
    // transforms

    /// `(1/2πi) ∮_{Circ(0)} Θ ds` in keyhole form: the circle of radius `r`
    /// cut at the ray `e^{iα}ℝ_{≥0}`, plus the integral of the jump `J_0` along
    /// the cut. Returns `(value, error)`.
    pub fn residue_at_zero(&self, r: f64) -> Result<(C64, f64)> {
        let circle = |panels: usize| -> Result<C64> {
            let gl = GaussLegendre::get(self.config.nodes);
            let a0 = self.config.alpha - 2.0 * PI;
            let width = 2.0 * PI / panels as f64;
            let mut pts = Vec::new();
            for p in 0..panels {
                for (x, w) in gl.nodes.iter().zip(&gl.weights) {
                    let th = a0 + width * (p as f64 + 0.5 * (1.0 + x));
                    pts.push((th, 0.5 * width * w));
                }
            }
            let vals: Vec<C64> = pts
                .par_iter()
                .map(|(th, w)| {
                    let s = C64::from_polar(r, *th);
                    Ok(self.theta(s)? * s * C64::i() * *w)
                })
                .collect::<Result<_>>()?;
            Ok(vals.iter().sum())
        };
        let fine = circle(16)?;
        let coarse = circle(8)?;
        let cut = self.jump_zero_cut_integral(r);
        let v = (fine + cut) / TWO_PI_I;
        Ok((v, (fine - coarse).norm() / (2.0 * PI)))
    }

    /// `(1/2πi) ∮ Θ(s)/s · e^{s t} ds` around the cut at `anchor`.
    fn hankel_transform(&self, anchor: C64, t: C64) -> Result<(C64, f64)> {
        let t_ref = self.t_values[1];
        let slot: Mutex<Option<Error>> = Mutex::new(None);
        let f = |s: C64| -> C64 {
            match self.main_scaled_memo(s, t_ref) {
                Ok(v) => v * (s * (t - t_ref)).exp() / s,
                Err(e) => {
                    let mut g = slot.lock().expect("error slot poisoned");
                    if g.is_none() {
                        *g = Some(e);
                    }
                    C64::new(f64::NAN, f64::NAN)
                }
            }
        };
        let spec = ContourSpec {
            radius: self.config.loop_radius,
            quad_tol: self.config.quad_tol,
            ..ContourSpec::hankel(anchor, self.config.alpha)
        };
        let res = hankel_integral(&f, &spec);
        if let Some(e) = slot.into_inner().expect("error slot poisoned") {
            return Err(e);
        }
        let (v, e) = res?;
        if !v.re.is_finite() || !v.im.is_finite() {
            return Err(Error::conv("Hankel transform produced a non-finite value"));
        }
        Ok((v / TWO_PI_I, e / (2.0 * PI)))
    }

    fn check_transform_point(&self, x: C64) -> Result<(C64, C64)> {
        let psi = self.fatou.eval(x)?;
        if !(psi.re > -0.5) {
            return Err(Error::pre(format!(
                "x = {x} has Re ψ = {:.3}; the Hankel legs decay only for Re ψ > −1 (−0.5 required)",
                psi.re
            )));
        }
        Ok((psi, self.weight(x)))
    }

    /// Fatou coordinate recovered from `Θ` by the Hankel transform around the
    /// cut at 0, together with the additive constant relative to `ψ_𝔸`.
    pub fn recover_fatou(&self, x: C64) -> Result<Recovered> {
        let (psi, t) = self.check_transform_point(x)?;
        let (value, error) = self.hankel_transform(c(0.0), t)?;
        Ok(Recovered {
            value,
            psi,
            constant: value - psi,
            error,
        })
    }

    /// The boundary-value identity at `ω = 2πi·m ≠ 0`: the Hankel transform
    /// around the cut at `ω` against `e^{ωψ_𝔸(x)}/ω`.
    pub fn verify_bv_identity(&self, m: i64, x: C64) -> Result<BvCheck> {
        if m == 0 {
            return Err(Error::input(
                "omega",
                "the boundary-value identity needs ω ≠ 0",
            ));
        }
        let om = TWO_PI_I * m as f64;
        let (psi, t) = self.check_transform_point(x)?;
        let (lhs, _) = self.hankel_transform(om, t)?;
        let rhs = (om * psi).exp() / om;
        Ok(BvCheck {
            lhs,
            rhs,
            defect: (lhs - rhs).norm(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::germ::{iterate_orbit, ParabolicGerm};

    fn model_eval(k: u32, a: C64, t0: f64) -> ThetaEvaluator {
        let g = ParabolicGerm::model_of(k, a, 8).unwrap();
        let x0 = g.t_inverse(c(t0), 0);
        let orbit = iterate_orbit(&g, x0, 2000).unwrap();
        ThetaEvaluator::new(&orbit, ThetaConfig::default()).unwrap()
    }

    fn closed(s: C64, t0: f64) -> C64 {
        (-s * t0).exp() / (1.0 - (-s).exp())
    }

    #[test]
    fn direct_examples() {
        let e = model_eval(1, c(-1.0), 1.0);
        let v = e.theta_direct(c(1.0)).unwrap();
        assert!((v - 0.581_976_706_869_326_4).norm() < 1e-12);
        let s = C64::new(2.0, 3.0);
        assert!((e.theta_direct(s).unwrap() - closed(s, 1.0)).norm() < 1e-10);
        let r = e.theta_direct(c(50.0)).unwrap() / (-50.0f64).exp();
        assert!((r - 1.0).norm() < 1e-12);
        assert!(e.theta_direct(C64::new(0.01, 1.0)).is_err());
    }

    #[test]
    fn strip_examples() {
        let e = model_eval(1, c(-1.0), 1.0);
        let s = C64::new(-1.0, PI);
        let v = e.theta_strip(s, 1).unwrap();
        assert!((v - (-1.0 / (1.0 + (-1.0f64).exp()))).norm() < 1e-10, "{v}");
        let s = C64::new(0.5, PI);
        assert!((e.theta_strip(s, 1).unwrap() - e.theta_direct(s).unwrap()).norm() < 1e-10);
        for (s, m) in [
            (C64::new(-3.0, -2.0), 0),
            (C64::new(-0.7, 9.0), 2),
            (C64::new(-2.0, -9.0), -1),
        ] {
            assert!(
                (e.theta_strip(s, m).unwrap() - closed(s, 1.0)).norm() < 1e-9,
                "s={s}"
            );
        }
        assert!(e.theta_strip(C64::new(-1.0, PI), 3).is_err());
    }

    #[test]
    fn model_jumps_vanish() {
        let e = model_eval(1, c(-1.0), 1.7);
        for (m, s) in [
            (0, C64::new(-0.5, 0.1)),
            (1, C64::new(-1.0, 2.0 * PI - 0.2)),
            (-1, C64::new(-0.3, -7.0)),
        ] {
            assert!(e.theta_jump(m, s).unwrap().norm() < 1e-9);
        }
        let (j, _) = e.jump_zero_series(C64::new(-0.2, 0.1)).unwrap();
        assert!(j.norm() < 1e-15);
    }

    #[test]
    fn model_residue_and_transforms() {
        let e = model_eval(1, c(-1.0), 1.0);
        let (r, _) = e.residue_at_zero(0.5).unwrap();
        assert!((r - 1.0).norm() < 1e-10, "{r}");
        let x = e.fatou().inverse(C64::new(2.3, 0.2)).unwrap();
        let rec = e.recover_fatou(x).unwrap();
        assert!((rec.constant - 0.5).norm() < 1e-8, "{:?}", rec);
        let bv = e.verify_bv_identity(1, x).unwrap();
        assert!(bv.defect < 1e-9, "{:?}", bv);
    }

    #[test]
    fn sheet_point_round_trip() {
        let p: SheetPoint = "-1.5,2;crossings=+2,\u{2212}1,--3,+0".parse().unwrap();
        assert_eq!(p.s, C64::new(-1.5, 2.0));
        assert_eq!(p.crossings.len(), 4);
        assert_eq!(
            p.crossings[1],
            Crossing {
                omega_multiple: 1,
                ccw: false
            }
        );
        assert_eq!(
            p.crossings[2],
            Crossing {
                omega_multiple: -3,
                ccw: false
            }
        );
        let q: SheetPoint = p.to_string().parse().unwrap();
        assert_eq!(p, q);
        assert!("1".parse::<SheetPoint>().is_err());
        assert!("1,2;crossings=*1".parse::<SheetPoint>().is_err());
        assert!("1,2;cross=+1".parse::<SheetPoint>().is_err());
    }

    #[test]
    fn perturbed_strip_matches_direct_and_gluing() {
        let g = ParabolicGerm::polynomial(&[1.0, -1.0, 0.2]).unwrap();
        let orbit = iterate_orbit(&g, c(0.1), 4000).unwrap();
        let e = ThetaEvaluator::new(&orbit, ThetaConfig::default()).unwrap();
        let s = C64::new(0.5, PI);
        let d = e.theta_direct(s).unwrap();
        let st = e.theta_strip(s, 1).unwrap();
        assert!((d - st).norm() < 1e-8, "{d} vs {st}");
        let s = C64::new(-1.0, 0.05);
        let diff = e.theta_strip(s, 1).unwrap() - e.theta_strip(s, 0).unwrap();
        let j = e.theta_jump(0, s).unwrap();
        assert!((diff - j).norm() < 1e-7, "{diff} vs {j}");
        let (js, _) = e.jump_zero_series(s).unwrap();
        assert!((js - j).norm() < 1e-8, "{js} vs {j}");
    }

    fn perturbed() -> ThetaEvaluator {
        let g = ParabolicGerm::polynomial(&[1.0, -1.0, 0.2]).unwrap();
        let orbit = iterate_orbit(&g, c(0.1), 4000).unwrap();
        ThetaEvaluator::new(&orbit, ThetaConfig::default()).unwrap()
    }

    #[test]
    fn jump_zero_matches_borel_tail() {
        // k = 1: J_0(s) = 2πi (ρ + s·B[tail](s)); the principal term is a Dirac.
        let e = perturbed();
        let ff = e.fatou().formal();
        for s in [
            C64::new(-0.2, 0.0),
            C64::new(-0.1, 0.15),
            C64::new(-0.25, -0.1),
        ] {
            let (bt, _) = crate::fatou::borel_tail(ff, s, PI, 30).unwrap();
            let oracle = TWO_PI_I * (ff.rho + s * bt);
            let j = e.theta_jump(0, s).unwrap();
            assert!((j - oracle).norm() < 1e-4, "{j} vs {oracle}");
        }
    }

    #[test]
    fn start_point_shift() {
        let e = perturbed();
        let e2 =
            ThetaEvaluator::new(&e.orbit().shifted().unwrap(), ThetaConfig::default()).unwrap();
        let t0 = e.orbit().t_values[0];
        for s in [
            C64::new(0.7, 1.0),
            C64::new(-0.8, 2.0),
            C64::new(-0.4, -1.0),
        ] {
            let d = e.theta(s).unwrap() - e2.theta(s).unwrap() - (-s * t0).exp();
            assert!(
                d.norm() < 1e-10 * (-s * t0).exp().norm().max(1.0),
                "{s}: {d}"
            );
        }
        for (m, s) in [(0, C64::new(-0.5, 0.3)), (1, C64::new(-0.6, 5.5))] {
            let d = e.theta_jump(m, s).unwrap() - e2.theta_jump(m, s).unwrap();
            assert!(d.norm() < 1e-8, "{d}");
        }
    }

    #[test]
    fn monodromy_and_model_sheets() {
        let e = perturbed();
        let s = C64::new(-0.7, 0.4);
        let main = e.theta(s).unwrap();
        let back = e
            .theta_continue(&SheetPoint::main(s).cross(0, true).cross(0, false))
            .unwrap();
        assert!((main - back).norm() < 1e-8);
        let m = model_eval(1, c(-1.0), 1.0);
        let plain = m.theta(s).unwrap();
        let far = m
            .theta_continue(&SheetPoint::main(s).cross(1, true).cross(-1, false))
            .unwrap();
        assert!((plain - far).norm() < 1e-9);
        let many = SheetPoint {
            s,
            crossings: vec![
                Crossing {
                    omega_multiple: 0,
                    ccw: true
                };
                9
            ],
        };
        assert!(m.theta_continue(&many).unwrap_err().is_input());
    }

    #[test]
    fn bv_reflection_for_real_orbits() {
        let e = perturbed();
        let x = e.fatou().inverse(c(1.5)).unwrap();
        let p = e.verify_bv_identity(1, x).unwrap();
        let q = e.verify_bv_identity(-1, x).unwrap();
        assert!((p.lhs - q.lhs.conj()).norm() < 1e-9);
        assert!(p.defect < 1e-8 && q.defect < 1e-8);
    }

    #[test]
    fn config_validation() {
        let bad = [
            ThetaConfig {
                alpha: 0.3,
                ..Default::default()
            },
            ThetaConfig {
                b: 0.0,
                ..Default::default()
            },
            ThetaConfig {
                quad_tol: -1.0,
                ..Default::default()
            },
        ];
        for cfg in bad {
            assert!(cfg.validate().unwrap_err().is_input());
        }
        assert!(ThetaConfig {
            alpha: PI + 1.0,
            ..Default::default()
        }
        .validate()
        .is_ok());
    }
}
