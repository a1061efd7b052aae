//! The acceptance suite behind `parabolic verify`.
//!
//! Twelve corpus-level criteria (closed forms, Abel equation, iterative
//! residue, Fatou recovery, boundary values, residues, strip gluing,
//! cross-method invariants, Minkowski data, the fractal/dynamic theta
//! identity, fractal-string identities and quadrature self-tests), plus the
//! per-germ checks that `verify` also runs on a user-supplied germ.
//!
//! Every check reports the worst measured defect next to its tolerance, so a
//! failure says by how much it failed.

use crate::contour::{hankel_integral, ContourSpec};
use crate::error::{Error, Result};
use crate::fatou::{FatouConfig, FatouEvaluator};
use crate::fractal::{
    conjugated_orbit, counting_integral, epsilons, fractal_theta, minkowski_fit,
    recover_critical_time, tau_kernel, tube_function, CriticalTime,
};
use crate::germ::{iterate_orbit, Orbit, ParabolicGerm};
use crate::invariants::{
    horn_modulus, invariant_from_theta, theta_modulus, HornConfig, SingularFitConfig,
};
use crate::special::rgamma;
use crate::theta::{ThetaConfig, ThetaEvaluator};
use crate::C64;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::time::Instant;

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// Outcome of one check.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Check {
    /// `"1"`–`"12"` for the corpus criteria, `"G1"`, … for per-germ checks.
    pub id: String,
    pub name: String,
    pub passed: bool,
    /// Worst defect observed (same units as `tolerance`).
    pub measured: f64,
    pub tolerance: f64,
    pub seconds: f64,
    pub detail: String,
}

/// Numerical settings shared by the checks.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct SuiteConfig {
    pub theta: ThetaConfig,
    pub fatou: FatouConfig,
    pub horn: HornConfig,
    pub fit: SingularFitConfig,
    /// Orbit length used for the theta checks.
    pub orbit_len: usize,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            theta: ThetaConfig::default(),
            fatou: FatouConfig::default(),
            horn: HornConfig::default(),
            fit: SingularFitConfig::default(),
            orbit_len: 4000,
        }
    }
}

/// A germ of the test corpus with a starting point in petal 0.
#[derive(Clone, Debug)]
pub struct CorpusGerm {
    pub name: &'static str,
    pub germ: ParabolicGerm,
    pub x0: C64,
}

/// Models `k = 1, 2`; `x+x²`; `x−x²+0.2x³`; `x−x²+0.3x³−0.1x⁴`; and the
/// perturbed `k = 2` germ `x−x³+0.3x⁴`.
pub fn corpus() -> Result<Vec<CorpusGerm>> {
    Ok(vec![
        CorpusGerm {
            name: "model k=1",
            germ: ParabolicGerm::model_of(1, c(-1.0), 8)?,
            x0: c(0.1),
        },
        CorpusGerm {
            name: "model k=2",
            germ: ParabolicGerm::model_of(2, c(-1.0), 8)?,
            x0: c(0.3),
        },
        CorpusGerm {
            name: "x+x^2",
            germ: ParabolicGerm::polynomial(&[1.0, 1.0])?,
            x0: c(-0.1),
        },
        CorpusGerm {
            name: "x-x^2+0.2x^3",
            germ: ParabolicGerm::polynomial(&[1.0, -1.0, 0.2])?,
            x0: c(0.1),
        },
        CorpusGerm {
            name: "x-x^2+0.3x^3-0.1x^4",
            germ: ParabolicGerm::polynomial(&[1.0, -1.0, 0.3, -0.1])?,
            x0: c(0.1),
        },
        CorpusGerm {
            name: "x-x^3+0.3x^4",
            germ: ParabolicGerm::polynomial(&[1.0, 0.0, -1.0, 0.3])?,
            x0: c(0.3),
        },
    ])
}

/// Number and title of the corpus criteria.
pub const CRITERIA: [(u32, &str); 12] = [
    (1, "model theta closed form"),
    (2, "Abel equation on the corpus"),
    (3, "iterative residue and its conjugation invariance"),
    (4, "Fatou coordinate recovered from theta"),
    (5, "boundary-value identity at omega != 0"),
    (6, "residue of theta at s = 0"),
    (7, "strip gluing and jumps"),
    (8, "invariants: theta route vs horn maps"),
    (9, "Minkowski dimension and content"),
    (10, "fractal theta = theta of the conjugated orbit"),
    (11, "counting integral and critical time"),
    (12, "quadrature self-test"),
];

/// Worst defect and a free-form note.
type Measured = (f64, String);

fn finish(
    id: String,
    name: &str,
    tol: f64,
    limit: Option<f64>,
    start: Instant,
    r: Result<Measured>,
) -> Check {
    let seconds = start.elapsed().as_secs_f64();
    match r {
        Ok((m, mut detail)) => {
            let mut passed = m <= tol;
            if let Some(lim) = limit {
                if seconds > lim {
                    passed = false;
                    detail = format!("{detail}; runtime {seconds:.1} s exceeds {lim} s");
                }
            }
            Check {
                id,
                name: name.to_string(),
                passed,
                measured: m,
                tolerance: tol,
                seconds,
                detail,
            }
        }
        Err(e) => Check {
            id,
            name: name.to_string(),
            passed: false,
            measured: f64::NAN,
            tolerance: tol,
            seconds,
            detail: format!("error ({}): {e}", e.kind()),
        },
    }
}

/// Run one corpus criterion.
pub fn criterion(id: u32, cfg: &SuiteConfig) -> Check {
    let name = CRITERIA
        .iter()
        .find(|(i, _)| *i == id)
        .map(|(_, n)| *n)
        .unwrap_or("unknown criterion");
    let start = Instant::now();
    let (tol, limit, r) = match id {
        1 => (1e-9, Some(10.0), c1_model_closed_form(cfg)),
        2 => (1e-8, Some(30.0), c2_abel(cfg)),
        3 => (1e-10, None, c3_residue()),
        4 => (1e-6, None, c4_recover(cfg)),
        5 => (1e-6, None, c5_bv(cfg)),
        6 => (1e-8, None, c6_residue(cfg)),
        7 => (1e-7, None, c7_gluing(cfg)),
        8 => (1e-3, None, c8_invariants(cfg)),
        9 => (1.0, Some(60.0), c9_minkowski()),
        10 => (1e-9, None, c10_prop13()),
        11 => (1.0, None, c11_fractal_identities()),
        12 => (1e-9, None, c12_quadrature()),
        _ => (
            0.0,
            None,
            Err(Error::input("criteria", format!("no criterion {id}"))),
        ),
    };
    finish(id.to_string(), name, tol, limit, start, r)
}

/// Run the listed criteria (all when `ids` is empty), in order.
pub fn run_criteria(ids: &[u32], cfg: &SuiteConfig) -> Vec<Check> {
    let all: Vec<u32> = CRITERIA.iter().map(|(i, _)| *i).collect();
    let ids = if ids.is_empty() { &all[..] } else { ids };
    ids.iter().map(|i| criterion(*i, cfg)).collect()
}

// ----------------------------------------------------------------------
// sample points

/// `n` points of attracting petal 0 at moderate radius.
pub fn petal_points(g: &ParabolicGerm, n: usize) -> Vec<C64> {
    let th = g.attracting_direction(0);
    let k = g.k() as f64;
    let scale = g.a().norm().powf(-1.0 / k);
    (0..n)
        .map(|i| {
            let r = 0.04 + 0.1 * (i % 5) as f64 / 4.0;
            let side = if i % 2 == 0 { 1.0 } else { -1.0 };
            let ang = th + (i / 5) as f64 / 3.0 * 0.9 * (PI / (2.0 * k)) * side;
            C64::from_polar((r.powf(1.0 / k) * scale).min(0.35), ang)
        })
        .collect()
}

/// Points `ψ^{−1}(τ)` for a grid of `τ` well inside the petal.
fn fatou_points(e: &ThetaEvaluator, n: usize) -> Result<Vec<C64>> {
    (0..n)
        .map(|i| {
            let tau = C64::new(1.0 + 0.35 * i as f64, 0.6 * ((i % 5) as f64 - 2.0));
            e.fatou().inverse(tau)
        })
        .collect()
}

fn theta_evaluator(g: &ParabolicGerm, x0: C64, cfg: &SuiteConfig) -> Result<ThetaEvaluator> {
    let orbit = iterate_orbit(g, x0, cfg.orbit_len)?;
    ThetaEvaluator::new(&orbit, cfg.theta)
}

fn worst<I: IntoIterator<Item = f64>>(it: I) -> f64 {
    it.into_iter().fold(0.0, f64::max)
}

// ----------------------------------------------------------------------
// per-germ checks

/// `max |ψ(f(x)) − ψ(x) − 1|` over 20 petal points.
pub fn abel_defect(g: &ParabolicGerm, x0: C64, fatou: FatouConfig) -> Result<f64> {
    let e = FatouEvaluator::new(g, x0, fatou)?;
    let mut d: f64 = 0.0;
    for x in petal_points(g, 20) {
        d = d.max((e.eval(g.eval(x))? - e.eval(x)? - 1.0).norm());
    }
    Ok(d)
}

/// Spread of `recover_fatou − ψ` over 20 points, and the mean constant.
pub fn recover_spread(e: &ThetaEvaluator) -> Result<(f64, C64)> {
    let xs = fatou_points(e, 20)?;
    let consts: Vec<C64> = xs
        .iter()
        .map(|x| e.recover_fatou(*x).map(|r| r.constant))
        .collect::<Result<_>>()?;
    let mean = consts.iter().sum::<C64>() / consts.len() as f64;
    Ok((worst(consts.iter().map(|k| (k - mean).norm())), mean))
}

/// Worst boundary-value defect at 5 points for `ω = ±2πi`.
pub fn bv_defect(e: &ThetaEvaluator) -> Result<f64> {
    let xs = fatou_points(e, 5)?;
    let mut d: f64 = 0.0;
    for m in [1, -1] {
        for x in &xs {
            d = d.max(e.verify_bv_identity(m, *x)?.defect);
        }
    }
    Ok(d)
}

/// `|res_0 Θ − 1|`.
pub fn residue_defect(e: &ThetaEvaluator) -> Result<f64> {
    Ok((e.residue_at_zero(0.5)?.0 - 1.0).norm())
}

/// Worst `|strip_{m+1} − strip_m − J_{2πim}|` at 10 points along each of the
/// cuts `m ∈ {0, ±1}`, at distance 0.5–1.4 from the branch point (farther
/// out `|Θ| ~ e^{−Re s·t(x0)}` grows so fast that an absolute tolerance
/// measures only rounding).
pub fn gluing_defect(e: &ThetaEvaluator) -> Result<f64> {
    let dir = C64::from_polar(1.0, e.config().alpha);
    let mut d: f64 = 0.0;
    for m in [-1i64, 0, 1] {
        let om = C64::new(0.0, 2.0 * PI * m as f64);
        for i in 0..10 {
            let r = 0.5 + 0.1 * i as f64;
            let side = if i % 2 == 0 { 0.1 } else { -0.1 };
            let s = om + dir * r + dir * C64::new(0.0, side);
            let diff = e.theta_strip(s, m + 1)? - e.theta_strip(s, m)?;
            d = d.max((diff - e.theta_jump(m, s)?).norm());
        }
    }
    Ok(d)
}

/// The checks `verify` runs on a single germ and starting point.
pub fn germ_checks(g: &ParabolicGerm, x0: C64, cfg: &SuiteConfig) -> Vec<Check> {
    let mut out = Vec::new();
    let start = Instant::now();
    let r = abel_defect(g, x0, cfg.fatou).map(|d| (d, "20 petal points".to_string()));
    out.push(finish("G1".into(), "Abel equation", 1e-8, None, start, r));
    let start = Instant::now();
    let e = theta_evaluator(g, x0, cfg);
    out.push(finish(
        "G2".into(),
        "theta residue at s = 0",
        1e-8,
        None,
        start,
        e.as_ref()
            .map_err(Clone::clone)
            .and_then(residue_defect)
            .map(|d| (d, String::new())),
    ));
    let start = Instant::now();
    let r = e.as_ref().map_err(Clone::clone).and_then(|e| {
        let (spread, mean) = recover_spread(e)?;
        Ok((
            spread,
            format!("constant {:.12} {:+.3e}i", mean.re, mean.im),
        ))
    });
    out.push(finish(
        "G3".into(),
        "recovered Fatou coordinate",
        1e-6,
        None,
        start,
        r,
    ));
    let start = Instant::now();
    let r = e
        .as_ref()
        .map_err(Clone::clone)
        .and_then(bv_defect)
        .map(|d| (d, "omega = ±2πi, 5 points".to_string()));
    out.push(finish(
        "G4".into(),
        "boundary-value identity",
        1e-6,
        None,
        start,
        r,
    ));
    let start = Instant::now();
    let r = e
        .as_ref()
        .map_err(Clone::clone)
        .and_then(gluing_defect)
        .map(|d| (d, "m in {-1,0,1}, 10 points per cut".to_string()));
    out.push(finish("G5".into(), "strip gluing", 1e-7, None, start, r));
    out
}

// ----------------------------------------------------------------------
// corpus criteria

fn c1_model_closed_form(cfg: &SuiteConfig) -> Result<Measured> {
    let mut d: f64 = 0.0;
    let mut count = 0usize;
    for k in [1u32, 2] {
        for a in [c(-1.0), C64::new(-1.0, 0.3)] {
            let g = ParabolicGerm::model_of(k, a, 8)?;
            for t0 in [1.0, 1.7] {
                let x0 = g.t_inverse(c(t0), 0);
                let orbit = iterate_orbit(&g, x0, cfg.orbit_len)?;
                let e = ThetaEvaluator::new(&orbit, cfg.theta)?;
                let closed = |s: C64| (-s * t0).exp() / (1.0 - (-s).exp());
                // direct sum on the right half plane
                for i in 0..50 {
                    let s = C64::new(
                        [0.1, 0.3, 0.6, 1.0, 2.0][i % 5],
                        -9.0 + 2.0 * (i / 5) as f64,
                    );
                    d = d.max((e.theta_direct(s)? - closed(s)).norm());
                    count += 1;
                }
                // strips 0, 1, 2 (between the cuts through 2πi(m−1) and 2πim)
                for m in [0i64, 1, 2] {
                    for i in 0..50 {
                        let re = [-1.0, -0.5, 0.1, 0.6, 1.5][i % 5];
                        let im = 2.0 * PI * (m - 1) as f64
                            + 0.3
                            + (2.0 * PI - 0.6) * (i / 5) as f64 / 9.0;
                        let s = C64::new(re, im);
                        d = d.max((e.theta_strip(s, m)? - closed(s)).norm());
                        count += 1;
                    }
                }
            }
        }
    }
    Ok((d, format!("{count} evaluations")))
}

fn c2_abel(cfg: &SuiteConfig) -> Result<Measured> {
    let mut d: f64 = 0.0;
    let mut notes = Vec::new();
    for cg in corpus()? {
        let x = abel_defect(&cg.germ, cg.x0, cfg.fatou)?;
        notes.push(format!("{}: {x:.1e}", cg.name));
        d = d.max(x);
    }
    Ok((d, notes.join(", ")))
}

fn c3_residue() -> Result<Measured> {
    let quad = ParabolicGerm::polynomial(&[1.0, 1.0])?;
    let model = ParabolicGerm::model_of(1, c(-1.0), 8)?;
    let model2 = ParabolicGerm::model_of(2, C64::new(-1.0, 0.3), 8)?;
    let d_oracle = (quad.residual_invariant() - 1.0)
        .norm()
        .max(model.residual_invariant().norm())
        .max(model2.residual_invariant().norm());
    if d_oracle > 1e-12 {
        return Ok((
            d_oracle,
            "closed-form residues off by more than 1e-12".into(),
        ));
    }
    let mut rng = StdRng::seed_from_u64(0x5eed);
    let bases = [
        ParabolicGerm::polynomial(&[1.0, -1.0, 0.2])?,
        ParabolicGerm::polynomial(&[1.0, 0.0, -1.0, 0.3])?,
    ];
    let mut d: f64 = 0.0;
    for _ in 0..10 {
        let mut coeffs = vec![c(1.0)];
        for _ in 0..4 {
            coeffs.push(C64::new(rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5)));
        }
        let h = crate::series::TruncSeries::new(1, coeffs);
        for f in &bases {
            let r0 = f.residual_invariant();
            let r1 = f.conjugate(&h)?.residual_invariant();
            d = d.max((r1 - r0).norm() / r0.norm().max(1.0));
        }
    }
    Ok((
        d,
        format!("closed-form residues within {d_oracle:.1e}; 10 random conjugations"),
    ))
}

fn c4_recover(cfg: &SuiteConfig) -> Result<Measured> {
    let mut d: f64 = 0.0;
    let mut notes = Vec::new();
    for cg in corpus()? {
        let e = theta_evaluator(&cg.germ, cg.x0, cfg)?;
        let (spread, mean) = recover_spread(&e)?;
        d = d.max(spread);
        if cg.germ.is_model() {
            // the additive constant of the model is 1/2
            d = d.max((mean - 0.5).norm());
        }
        notes.push(format!("{}: C = {:.10}", cg.name, mean.re));
    }
    Ok((d, notes.join(", ")))
}

fn c5_bv(cfg: &SuiteConfig) -> Result<Measured> {
    let mut d: f64 = 0.0;
    let mut notes = Vec::new();
    for cg in corpus()? {
        let e = theta_evaluator(&cg.germ, cg.x0, cfg)?;
        let x = bv_defect(&e)?;
        // the model identity is exact: its defect must be at rounding level
        let scaled = if cg.germ.is_model() { x * 1e4 } else { x };
        d = d.max(scaled);
        notes.push(format!("{}: {x:.1e}", cg.name));
    }
    Ok((
        d,
        format!(
            "{} (model defects scaled by 1e4 against 1e-10)",
            notes.join(", ")
        ),
    ))
}

fn c6_residue(cfg: &SuiteConfig) -> Result<Measured> {
    let mut d: f64 = 0.0;
    let mut notes = Vec::new();
    for cg in corpus()? {
        let e = theta_evaluator(&cg.germ, cg.x0, cfg)?;
        let x = residue_defect(&e)?;
        d = d.max(x);
        notes.push(format!("{}: {x:.1e}", cg.name));
    }
    Ok((d, notes.join(", ")))
}

fn c7_gluing(cfg: &SuiteConfig) -> Result<Measured> {
    let mut d: f64 = 0.0;
    let mut notes = Vec::new();
    for cg in corpus()? {
        let e = theta_evaluator(&cg.germ, cg.x0, cfg)?;
        let x = gluing_defect(&e)?;
        d = d.max(x);
        notes.push(format!("{}: {x:.1e}", cg.name));
    }
    Ok((d, notes.join(", ")))
}

fn c8_invariants(cfg: &SuiteConfig) -> Result<Measured> {
    let g = ParabolicGerm::polynomial(&[1.0, -1.0, 0.2])?;
    let e = theta_evaluator(&g, c(0.1), cfg)?;
    let theta = theta_modulus(&e, 1, &cfg.fit)?;
    let horn = horn_modulus(&g, 0, 1, 2.0, &cfg.horn)?.renormalized(theta.normalization);
    let mut d: f64 = 0.0;
    for t in &theta.entries {
        let h = horn
            .get(t.j, t.omega_multiple)
            .ok_or_else(|| Error::pre("horn modulus lacks an entry"))?;
        d = d.max((t.a - h.a).norm() / h.a.norm());
    }
    // start-point invariance: rebuild from the orbit without its first point
    let shifted = ThetaEvaluator::new(&e.orbit().shifted()?, cfg.theta)?;
    let mut drift: f64 = 0.0;
    for m in [1, -1] {
        let a = invariant_from_theta(&e, m, &cfg.fit)?.a_prime;
        let b = invariant_from_theta(&shifted, m, &cfg.fit)?.a_prime;
        drift = drift.max((a - b).norm() / a.norm());
    }
    // the start-point tolerance is 1e−6; express it on the 1e−3 scale
    let measured = d.max(drift * 1e3);
    Ok((
        measured,
        format!("relative defect {d:.2e} (tol 1e-3), start-point drift {drift:.2e} (tol 1e-6)"),
    ))
}

fn c9_minkowski() -> Result<Measured> {
    let mut worst_ratio: f64 = 0.0;
    let mut notes = Vec::new();
    for k in [1u32, 2] {
        let g = ParabolicGerm::model_of(k, c(-1.0), 8)?;
        let s = epsilons(&iterate_orbit(&g, c(0.5), 100_000)?)?;
        let fit = minkowski_fit(&s, 1e-2)?;
        let kf = k as f64;
        let d_want = kf / (kf + 1.0);
        let m_want = (kf + 1.0) / kf * 2f64.powf(1.0 / (kf + 1.0));
        let dd = (fit.d_est - d_want).abs();
        let dm = (fit.m_est / m_want - 1.0).abs();
        // both tolerances mapped to 1: D within 0.02, M within 5 %
        worst_ratio = worst_ratio.max(dd / 0.02).max(dm / 0.05);
        notes.push(format!(
            "k={k}: D={:.4} (want {d_want:.4}), M={:.4} (want {m_want:.4})",
            fit.d_est, fit.m_est
        ));
    }
    Ok((worst_ratio, notes.join("; ")))
}

fn c10_prop13() -> Result<Measured> {
    let mut rng = StdRng::seed_from_u64(13);
    let mut d: f64 = 0.0;
    let mut d_tau: f64 = 0.0;
    for cg in corpus()? {
        let orbit: Orbit = iterate_orbit(&cg.germ, cg.x0, 4000)?;
        let s = epsilons(&orbit)?;
        let co = conjugated_orbit(&orbit)?;
        let ce = ThetaEvaluator::new(&co, ThetaConfig::default())?;
        for _ in 0..10 {
            let sv = C64::new(rng.gen_range(0.5..3.0), rng.gen_range(-10.0..10.0));
            let a = fractal_theta(&s, sv)?.0;
            let b = ce.theta_direct(sv)?;
            d = d.max((a - b).norm() / b.norm().max(1.0));
        }
        for n in 0..=1000 {
            let tau = tau_kernel(s.eps(n + 1), cg.germ.k(), cg.germ.a())?;
            d_tau = d_tau.max((tau - co.t_values[n]).norm() / co.t_values[n].norm());
        }
    }
    // τ tolerance is 1e−10; express it on the 1e−9 scale
    Ok((
        d.max(d_tau * 10.0),
        format!("theta defect {d:.1e} (tol 1e-9), tau defect {d_tau:.1e} (tol 1e-10)"),
    ))
}

fn c11_fractal_identities() -> Result<Measured> {
    let g = ParabolicGerm::polynomial(&[1.0, -1.0, 0.2])?;
    let orbit = iterate_orbit(&g, c(0.2), 5000)?;
    let s = epsilons(&orbit)?;
    // V(ε) = 2∫_0^ε n(ξ) dξ
    let mut d_int: f64 = 0.0;
    for eps in [3e-3, 1e-3, 3e-4, 1e-4, 3e-5, 1e-5] {
        let v = tube_function(&s, eps)?;
        d_int = d_int.max((counting_integral(&s, eps)? - v).abs());
    }
    // continuity of V across the breakpoints ε_n
    let mut d_cont: f64 = 0.0;
    for n in [2usize, 10, 100, 1000] {
        let e = s.eps(n).re;
        let lo = tube_function(&s, e * (1.0 - 1e-13))?;
        let hi = tube_function(&s, e * (1.0 + 1e-13))?;
        d_cont = d_cont.max((hi - lo).abs());
    }
    // T(ε_n) = n
    let ct = CriticalTime::new(&orbit, FatouConfig::precise())?;
    let mut d_t: f64 = 0.0;
    for n in 1..=50 {
        d_t = d_t.max((ct.eval(s.eps(n))? - n as f64).norm());
    }
    // recovery from the fractal theta: constant offset against T
    let fe = ThetaEvaluator::fractal(&orbit, ThetaConfig::default())?;
    let consts: Vec<C64> = [s.eps(3).re, 2e-3, 1e-3, 5e-4, 2e-4]
        .iter()
        .map(|e| recover_critical_time(&fe, c(*e)).map(|r| r.constant))
        .collect::<Result<_>>()?;
    let mean = consts.iter().sum::<C64>() / consts.len() as f64;
    let d_rec = worst(consts.iter().map(|k| (k - mean).norm()));
    let ratio = (d_int / 1e-6)
        .max(d_cont / 1e-12)
        .max(d_t / 1e-7)
        .max(d_rec / 1e-6);
    Ok((
        ratio,
        format!(
            "integral {d_int:.1e} (1e-6), continuity {d_cont:.1e} (1e-12), T(eps_n)=n {d_t:.1e} (1e-7), \
             recovery spread {d_rec:.1e} (1e-6), constant {:.10}",
            mean.re
        ),
    ))
}

fn c12_quadrature() -> Result<Measured> {
    let base = ContourSpec::hankel(c(0.0), PI);
    let variants = [
        ContourSpec {
            node_count: 2 * base.node_count,
            ..base
        },
        ContourSpec {
            radius: base.radius / 2.0,
            ..base
        },
        ContourSpec {
            length: base.length * 1.2,
            ..base
        },
    ];
    let two_pi_i = C64::new(0.0, 2.0 * PI);
    let rg = |z: f64, spec: &ContourSpec| -> Result<C64> {
        let f = |s: C64| s.exp() * s.powf(-z);
        Ok(hankel_integral(&f, spec)?.0 / two_pi_i)
    };
    let mut d: f64 = 0.0;
    let mut d_def: f64 = 0.0;
    for z in [1.0 / 3.0, 0.5, 1.0, 1.5, 2.0, 3.0] {
        let v0 = rg(z, &base)?;
        d = d.max((v0 - rgamma(c(z))).norm());
        for sp in &variants {
            d_def = d_def.max((rg(z, sp)? - v0).norm());
        }
    }
    Ok((
        d.max(d_def),
        format!("1/Gamma defect {d:.1e}, deformation defect {d_def:.1e}"),
    ))
}
