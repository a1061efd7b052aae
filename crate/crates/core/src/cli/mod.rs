//! Batch driver behind the `parabolic` binary.
//!
//! A run is described by a [`RunConfig`] (one JSON document, every field
//! overridable with `--key value`) and a germ given as a [`GermSpec`] file.
//! Grids go to CSV, structured results to JSON, both under `out_dir`; a JSON
//! summary is printed on stdout. Every CSV starts with a comment row holding
//! the SHA-256 of the resolved configuration and the tolerances in force.
//!
//! Exit codes: 0 success, 1 numerical failure (convergence, tolerance, a
//! failed check), 2 invalid input. Errors are printed on stderr as JSON.
//! `PARABOLIC_THREADS` sets the size of the worker pool.

pub mod suite;

use crate::error::{Error, Result};
use crate::fatou::{FatouConfig, FatouEvaluator};
use crate::fractal::{counting_function, epsilons, minkowski_fit, tube_function};
use crate::germ::{iterate_orbit, GermSpec, Orbit, ParabolicGerm};
use crate::invariants::{
    cocycles_equivalent, horn_modulus, theta_modulus, EVModulus, HornConfig, SingularFitConfig,
};
use crate::theta::{SheetPoint, ThetaConfig, ThetaEvaluator};
use crate::C64;
use clap::{Parser, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};
use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

/// Environment variable holding the worker-thread count.
pub const THREADS_ENV: &str = "PARABOLIC_THREADS";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    /// k, a, iterative residue and prenormal form of the germ.
    Analyze,
    /// Orbit points and their weights t(x_n).
    Orbit,
    /// Sectorial Fatou coordinate on a grid, with Abel residuals.
    Fatou,
    /// Theta function on the s-grid (any sheet).
    Theta,
    /// Jumps of theta next to each cut.
    Jumps,
    /// Écalle–Voronin modulus by both routes and their comparison.
    Invariants,
    /// Counting/tube tables, Minkowski fit, fractal theta.
    Fractal,
    /// Acceptance suite plus checks on the configured germ.
    Verify,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Analyze => "analyze",
            Command::Orbit => "orbit",
            Command::Fatou => "fatou",
            Command::Theta => "theta",
            Command::Jumps => "jumps",
            Command::Invariants => "invariants",
            Command::Fractal => "fractal",
            Command::Verify => "verify",
        }
    }
}

/// Everything a run needs. Field names double as command-line flags.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Path of the germ spec (relative paths are resolved against the
    /// directory of the config file).
    pub germ: Option<PathBuf>,
    pub command: Option<Command>,
    /// Relative accuracy of the theta quadratures.
    pub quad_tol: f64,
    /// Target accuracy of the sectorial Fatou coordinates.
    pub fatou_tol: f64,
    /// Tolerance of the horn-map height-ladder check.
    pub fourier_tol: f64,
    /// Orbit start `[re, im]`; default: the point with `t(x0) = 10` on petal 0.
    pub x0: Option<[f64; 2]>,
    /// Number of iterates `M` (the orbit has `M + 1` points).
    pub orbit_len: usize,
    /// Sheet points `"re,im"` or `"re,im;crossings=+0,-1"`.
    pub s_grid: Vec<String>,
    /// ε values of the counting/tube tables.
    pub eps_ladder: Vec<f64>,
    /// Points `[re, im]` for `fatou`; default: 20 points of petal 0.
    pub x_grid: Option<Vec<[f64; 2]>>,
    /// Number of modes per side for `jumps` and `invariants`.
    pub modes: usize,
    /// Height of the horn-map Fourier sampling.
    pub horn_height: f64,
    /// Distances from `ω` along the cut at which `jumps` evaluates.
    pub jump_offsets: Vec<f64>,
    /// Criteria run by `verify` (empty: all).
    pub criteria: Vec<u32>,
    pub out_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            germ: None,
            command: None,
            quad_tol: 1e-10,
            fatou_tol: 1e-14,
            fourier_tol: 1e-8,
            x0: None,
            orbit_len: 4000,
            s_grid: [
                "1,0",
                "0.5,3",
                "0.2,-2",
                "-0.5,1",
                "-1,-3",
                "-0.5,7",
                "-0.5,1;crossings=+0",
                "-0.5,-1;crossings=-0,+1",
            ]
            .iter()
            .map(|s| s.to_string())
            .collect(),
            eps_ladder: vec![1e-2, 3e-3, 1e-3, 3e-4, 1e-4, 3e-5, 1e-5],
            x_grid: None,
            modes: 1,
            horn_height: 2.0,
            jump_offsets: vec![0.1, 0.25, 0.5, 1.0],
            criteria: Vec::new(),
            out_dir: PathBuf::from("out"),
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("quad_tol", self.quad_tol),
            ("fatou_tol", self.fatou_tol),
            ("fourier_tol", self.fourier_tol),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::input(name, "must be positive"));
            }
        }
        if self.orbit_len < 2 {
            return Err(Error::input("orbit_len", "must be at least 2"));
        }
        if self.s_grid.is_empty() {
            return Err(Error::input("s_grid", "must not be empty"));
        }
        for s in &self.s_grid {
            SheetPoint::from_str(s).map_err(|e| Error::input("s_grid", e.to_string()))?;
        }
        if self.eps_ladder.is_empty() || self.eps_ladder.iter().any(|e| !(*e > 0.0)) {
            return Err(Error::input(
                "eps_ladder",
                "must be a non-empty list of positive values",
            ));
        }
        if matches!(&self.x_grid, Some(g) if g.is_empty()) {
            return Err(Error::input("x_grid", "must not be empty"));
        }
        if self.modes == 0 {
            return Err(Error::input("modes", "must be at least 1"));
        }
        if !(self.horn_height >= 2.0) {
            return Err(Error::input("horn_height", "must be at least 2"));
        }
        if self.jump_offsets.is_empty() || self.jump_offsets.iter().any(|u| !(*u > 0.0)) {
            return Err(Error::input(
                "jump_offsets",
                "must be a non-empty list of positive values",
            ));
        }
        if let Some(bad) = self.criteria.iter().find(|i| !(1..=12).contains(*i)) {
            return Err(Error::input("criteria", format!("no criterion {bad}")));
        }
        Ok(())
    }

    fn fatou_config(&self) -> FatouConfig {
        FatouConfig {
            tol: self.fatou_tol,
            ..FatouConfig::precise()
        }
    }

    fn theta_config(&self) -> ThetaConfig {
        ThetaConfig {
            quad_tol: self.quad_tol,
            fatou: self.fatou_config(),
            ..ThetaConfig::default()
        }
    }

    fn horn_config(&self) -> HornConfig {
        HornConfig {
            fourier_tol: self.fourier_tol,
            fatou: self.fatou_config(),
            ..HornConfig::default()
        }
    }
}

/// Command line: a subcommand plus optional overrides of [`RunConfig`].
#[derive(Parser, Debug)]
#[command(
    name = "parabolic",
    version,
    about = "Fatou coordinates, theta functions and invariants of parabolic germs"
)]
struct Args {
    /// Subcommand (may instead be given as `command` in the config file).
    #[arg(value_enum)]
    command: Option<Command>,
    /// JSON run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// JSON germ spec.
    #[arg(long)]
    germ: Option<String>,
    /// Contour quadrature tolerance.
    #[arg(long, alias = "quad_tol")]
    quad_tol: Option<String>,
    /// Target size of the omitted formal Fatou term.
    #[arg(long, alias = "fatou_tol")]
    fatou_tol: Option<String>,
    /// Tolerance of the horn-map Fourier checks.
    #[arg(long, alias = "fourier_tol")]
    fourier_tol: Option<String>,
    /// Orbit start as `re,im` (or `re`).
    #[arg(long, allow_hyphen_values = true)]
    x0: Option<String>,
    /// Number of orbit steps.
    #[arg(long, alias = "orbit_len", alias = "M")]
    orbit_len: Option<String>,
    /// Sheet point; repeat the flag for several points.
    #[arg(long, alias = "s_grid", allow_hyphen_values = true)]
    s_grid: Vec<String>,
    /// Comma-separated ε values.
    #[arg(long, alias = "eps_ladder")]
    eps_ladder: Option<String>,
    /// Point `re,im` for `fatou`; repeat for several points.
    #[arg(long, alias = "x_grid", allow_hyphen_values = true)]
    x_grid: Vec<String>,
    /// Number of modes ±2πi·j in the modulus.
    #[arg(long)]
    modes: Option<String>,
    /// Height of the horn-map sampling line.
    #[arg(long, alias = "horn_height")]
    horn_height: Option<String>,
    /// Comma-separated offsets from each ω along its cut.
    #[arg(long, alias = "jump_offsets")]
    jump_offsets: Option<String>,
    /// Comma-separated criterion numbers for `verify`.
    #[arg(long)]
    criteria: Option<String>,
    /// Directory for the artifacts.
    #[arg(long, alias = "out_dir")]
    out_dir: Option<String>,
}

fn parse_num(field: &str, text: &str) -> Result<Value> {
    let v: f64 = text
        .trim()
        .parse()
        .map_err(|_| Error::input(field, format!("'{text}' is not a number")))?;
    Ok(json!(v))
}

fn parse_count(field: &str, text: &str) -> Result<Value> {
    let v: u64 = text
        .trim()
        .parse()
        .map_err(|_| Error::input(field, format!("'{text}' is not a non-negative integer")))?;
    Ok(json!(v))
}

fn parse_list(field: &str, text: &str, each: fn(&str, &str) -> Result<Value>) -> Result<Value> {
    text.split(',')
        .filter(|t| !t.trim().is_empty())
        .map(|t| each(field, t))
        .collect::<Result<Vec<_>>>()
        .map(Value::Array)
}

fn parse_point(field: &str, text: &str) -> Result<Value> {
    let parts: Vec<&str> = text.split(',').collect();
    let nums = parts
        .iter()
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .map_err(|_| Error::input(field, format!("'{text}' is not 're,im'")))
        })
        .collect::<Result<Vec<_>>>()?;
    match nums[..] {
        [re] => Ok(json!([re, 0.0])),
        [re, im] => Ok(json!([re, im])),
        _ => Err(Error::input(field, format!("'{text}' is not 're,im'"))),
    }
}

/// Read a JSON document, naming the offending field on failure.
fn read_json<T: serde::de::DeserializeOwned>(path: &Path, what: &str) -> Result<T> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::input(what, format!("cannot read {}: {e}", path.display())))?;
    from_json_str(&text, what)
}

fn from_json_str<T: serde::de::DeserializeOwned>(text: &str, what: &str) -> Result<T> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        // a malformed document has no meaningful field path
        let structural = matches!(
            e.inner().classify(),
            serde_json::error::Category::Syntax | serde_json::error::Category::Eof
        );
        let field = if structural || path == "." || path.is_empty() {
            what.to_string()
        } else {
            path
        };
        Error::input(field, e.into_inner().to_string())
    })
}

/// Config file merged with the command-line overrides, and the directory
/// relative paths from the file are resolved against.
fn resolve(args: &Args) -> Result<(RunConfig, PathBuf)> {
    let (mut doc, base) = match &args.config {
        Some(p) => {
            let v: Value = read_json(p, "config")?;
            if !v.is_object() {
                return Err(Error::input("config", "must be a JSON object"));
            }
            let base = p.parent().map(Path::to_path_buf).unwrap_or_default();
            (v, base)
        }
        None => (Value::Object(Map::new()), PathBuf::new()),
    };
    let obj = doc.as_object_mut().expect("checked above");
    let mut set = |k: &str, v: Value| {
        obj.insert(k.to_string(), v);
    };
    if let Some(g) = &args.germ {
        // command-line paths are relative to the working directory
        let p = std::env::current_dir()
            .map(|d| d.join(g))
            .unwrap_or_else(|_| PathBuf::from(g));
        set("germ", json!(p));
    }
    if let Some(c) = args.command {
        set("command", json!(c));
    }
    for (k, v) in [
        ("quad_tol", &args.quad_tol),
        ("fatou_tol", &args.fatou_tol),
        ("fourier_tol", &args.fourier_tol),
        ("horn_height", &args.horn_height),
    ] {
        if let Some(t) = v {
            set(k, parse_num(k, t)?);
        }
    }
    for (k, v) in [("orbit_len", &args.orbit_len), ("modes", &args.modes)] {
        if let Some(t) = v {
            set(k, parse_count(k, t)?);
        }
    }
    if let Some(t) = &args.x0 {
        set("x0", parse_point("x0", t)?);
    }
    if !args.s_grid.is_empty() {
        set("s_grid", json!(args.s_grid));
    }
    if let Some(t) = &args.eps_ladder {
        set("eps_ladder", parse_list("eps_ladder", t, parse_num)?);
    }
    if !args.x_grid.is_empty() {
        let pts = args
            .x_grid
            .iter()
            .map(|t| parse_point("x_grid", t))
            .collect::<Result<Vec<_>>>()?;
        set("x_grid", Value::Array(pts));
    }
    if let Some(t) = &args.jump_offsets {
        set("jump_offsets", parse_list("jump_offsets", t, parse_num)?);
    }
    if let Some(t) = &args.criteria {
        set("criteria", parse_list("criteria", t, parse_count)?);
    }
    if let Some(t) = &args.out_dir {
        set("out_dir", json!(t));
    }
    let cfg: RunConfig = from_json_str(&doc.to_string(), "config")?;
    cfg.validate()?;
    Ok((cfg, base))
}

/// A resolved run: configuration, germ, and the hash stamped on artifacts.
pub struct Run {
    pub command: Command,
    pub config: RunConfig,
    pub germ_spec: Option<GermSpec>,
    pub germ: Option<ParabolicGerm>,
    pub hash: String,
}

impl Run {
    /// Load the germ (if any) and hash the resolved configuration.
    pub fn new(config: RunConfig, base: &Path) -> Result<Self> {
        config.validate()?;
        let command = config
            .command
            .ok_or_else(|| Error::input("command", "no subcommand given"))?;
        let germ_spec: Option<GermSpec> = match &config.germ {
            Some(p) => Some(read_json(&base.join(p), "germ")?),
            None => None,
        };
        let germ = match &germ_spec {
            Some(s) => Some(s.build()?),
            None => None,
        };
        let canonical = json!({ "config": config, "germ_spec": germ_spec }).to_string();
        let hash = format!("{:x}", Sha256::digest(canonical.as_bytes()));
        Ok(Run {
            command,
            config,
            germ_spec,
            germ,
            hash,
        })
    }

    fn germ(&self) -> Result<&ParabolicGerm> {
        self.germ
            .as_ref()
            .ok_or_else(|| Error::input("germ", "this command needs a germ spec"))
    }

    fn x0(&self) -> Result<C64> {
        let g = self.germ()?;
        Ok(match self.config.x0 {
            Some([re, im]) => C64::new(re, im),
            None => g.t_inverse(C64::new(10.0, 0.0), 0),
        })
    }

    fn orbit(&self) -> Result<Orbit> {
        iterate_orbit(self.germ()?, self.x0()?, self.config.orbit_len)
    }

    /// CSV text: a comment row with hash and tolerances, the column header,
    /// then the rows.
    fn csv(&self, columns: &[&str], rows: &[Vec<String>]) -> Result<String> {
        let c = &self.config;
        let mut out = format!(
            "# parabolic {} config_sha256={} quad_tol={:e} fatou_tol={:e} fourier_tol={:e}\n",
            self.command.name(),
            self.hash,
            c.quad_tol,
            c.fatou_tol,
            c.fourier_tol
        );
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(columns).map_err(io_err)?;
        for r in rows {
            w.write_record(r).map_err(io_err)?;
        }
        let bytes = w.into_inner().map_err(|e| io_err(e.into_error()))?;
        out.push_str(
            &String::from_utf8(bytes).map_err(|e| Error::input("out_dir", e.to_string()))?,
        );
        Ok(out)
    }

    fn write(&self, name: &str, text: &str, artifacts: &mut Vec<String>) -> Result<()> {
        let dir = &self.config.out_dir;
        fs::create_dir_all(dir).map_err(io_err)?;
        let path = dir.join(name);
        fs::write(&path, text).map_err(io_err)?;
        artifacts.push(path.display().to_string());
        Ok(())
    }

    /// Execute the command; returns the stdout summary and whether every
    /// check passed (only `verify` can report `false`).
    pub fn execute(&self) -> Result<(Value, bool)> {
        let mut artifacts = Vec::new();
        let (result, ok) = match self.command {
            Command::Analyze => (self.analyze(&mut artifacts)?, true),
            Command::Orbit => (self.orbit_cmd(&mut artifacts)?, true),
            Command::Fatou => (self.fatou(&mut artifacts)?, true),
            Command::Theta => (self.theta(&mut artifacts)?, true),
            Command::Jumps => (self.jumps(&mut artifacts)?, true),
            Command::Invariants => (self.invariants(&mut artifacts)?, true),
            Command::Fractal => (self.fractal(&mut artifacts)?, true),
            Command::Verify => self.verify(&mut artifacts)?,
        };
        Ok((
            json!({
                "command": self.command.name(),
                "config_sha256": self.hash,
                "artifacts": artifacts,
                "result": result,
            }),
            ok,
        ))
    }

    fn analyze(&self, artifacts: &mut Vec<String>) -> Result<Value> {
        let g = self.germ()?;
        let n = g.truncation() as i64;
        let coeffs: Vec<C64> = (1..=n).map(|e| g.series().coeff(e)).collect();
        let (pre, h) = g.prenormalize()?;
        let pre_coeffs: Vec<C64> = (1..=n).map(|e| pre.series().coeff(e)).collect();
        let h_coeffs: Vec<C64> = (1..=n).map(|e| h.coeff(e)).collect();
        let k = g.k();
        let v = json!({
            "k": k,
            "a": g.a(),
            "rho": g.residual_invariant(),
            "kind": format!("{:?}", g.kind()).to_lowercase(),
            "truncation": g.truncation(),
            "coefficients": coeffs,
            "prenormal_coefficients": pre_coeffs,
            "prenormalizing_map": h_coeffs,
            "attracting_directions": (0..k as usize).map(|l| g.attracting_direction(l)).collect::<Vec<_>>(),
            "repelling_directions": (0..k as usize).map(|l| g.repelling_direction(l)).collect::<Vec<_>>(),
        });
        self.write("analyze.json", &pretty(&v), artifacts)?;
        Ok(v)
    }

    fn orbit_cmd(&self, artifacts: &mut Vec<String>) -> Result<Value> {
        let o = self.orbit()?;
        let rows: Vec<Vec<String>> = o
            .points
            .iter()
            .zip(&o.t_values)
            .enumerate()
            .map(|(n, (x, t))| vec![n.to_string(), num(x.re), num(x.im), num(t.re), num(t.im)])
            .collect();
        self.write(
            "orbit.csv",
            &self.csv(&["n", "x_re", "x_im", "t_re", "t_im"], &rows)?,
            artifacts,
        )?;
        Ok(json!({ "points": o.len(), "petal": o.petal, "last": o.last() }))
    }

    fn fatou(&self, artifacts: &mut Vec<String>) -> Result<Value> {
        let g = self.germ()?;
        let e = FatouEvaluator::new(g, self.x0()?, self.config.fatou_config())?;
        let xs: Vec<C64> = match &self.config.x_grid {
            Some(pts) => pts.iter().map(|p| C64::new(p[0], p[1])).collect(),
            None => suite::petal_points(g, 20),
        };
        let mut rows = Vec::new();
        let mut worst: f64 = 0.0;
        for x in xs {
            let psi = e.eval(x)?;
            let abel = (e.eval(g.eval(x))? - psi - 1.0).norm();
            worst = worst.max(abel);
            rows.push(vec![
                num(x.re),
                num(x.im),
                num(psi.re),
                num(psi.im),
                num(abel),
            ]);
        }
        self.write(
            "fatou.csv",
            &self.csv(
                &["x_re", "x_im", "psi_re", "psi_im", "abel_residual"],
                &rows,
            )?,
            artifacts,
        )?;
        Ok(json!({ "points": rows.len(), "max_abel_residual": worst, "c_prime": e.c_prime() }))
    }

    fn theta_rows(&self, e: &ThetaEvaluator) -> Result<Vec<Vec<String>>> {
        let mut rows = Vec::new();
        for tok in &self.config.s_grid {
            let p = SheetPoint::from_str(tok)?;
            let (mut v, mut err) = e.main_scaled(p.s, C64::new(0.0, 0.0))?;
            for cr in &p.crossings {
                let (j, je) = e.jump_scaled(cr.omega_multiple, p.s, C64::new(0.0, 0.0))?;
                v += if cr.ccw { j } else { -j };
                err += je;
            }
            let crossings: Vec<String> = p
                .crossings
                .iter()
                .map(|c| format!("{}{}", if c.ccw { '+' } else { '-' }, c.omega_multiple))
                .collect();
            rows.push(vec![
                num(p.s.re),
                num(p.s.im),
                crossings.join(" "),
                e.strip_index(p.s).to_string(),
                num(v.re),
                num(v.im),
                num(err),
            ]);
        }
        Ok(rows)
    }

    fn theta(&self, artifacts: &mut Vec<String>) -> Result<Value> {
        let e = ThetaEvaluator::new(&self.orbit()?, self.config.theta_config())?;
        let rows = self.theta_rows(&e)?;
        self.write(
            "theta.csv",
            &self.csv(
                &["s_re", "s_im", "crossings", "strip", "re", "im", "err"],
                &rows,
            )?,
            artifacts,
        )?;
        Ok(json!({ "points": rows.len() }))
    }

    fn jumps(&self, artifacts: &mut Vec<String>) -> Result<Value> {
        let e = ThetaEvaluator::new(&self.orbit()?, self.config.theta_config())?;
        let dir = C64::from_polar(1.0, e.config().alpha);
        let m = self.config.modes as i64;
        let mut rows = Vec::new();
        for om in -m..=m {
            for u in &self.config.jump_offsets {
                let s = C64::new(0.0, 2.0 * std::f64::consts::PI * om as f64) + dir * *u;
                let (j, err) = e.jump_scaled(om, s, C64::new(0.0, 0.0))?;
                rows.push(vec![
                    om.to_string(),
                    num(s.re),
                    num(s.im),
                    num(j.re),
                    num(j.im),
                    num(err),
                ]);
            }
        }
        self.write(
            "jumps.csv",
            &self.csv(
                &["omega_multiple", "s_re", "s_im", "re", "im", "err"],
                &rows,
            )?,
            artifacts,
        )?;
        Ok(json!({ "points": rows.len() }))
    }

    fn invariants(&self, artifacts: &mut Vec<String>) -> Result<Value> {
        let g = self.germ()?;
        let x0 = self.x0()?;
        // the theta route needs the prenormal form for k > 1
        let (g, x0, conjugated) = if g.k() > 1 {
            let (pre, h) = g.prenormalize()?;
            let moved =
                (&h - &crate::series::TruncSeries::identity(h.truncation_order())).max_abs() > 0.0;
            (pre, h.eval(x0), moved)
        } else {
            (g.clone(), x0, false)
        };
        let orbit = iterate_orbit(&g, x0, self.config.orbit_len)?;
        let e = ThetaEvaluator::new(&orbit, self.config.theta_config())?;
        let theta = theta_modulus(&e, self.config.modes, &SingularFitConfig::default())?;
        let horn = horn_modulus(
            &g,
            orbit.petal,
            self.config.modes,
            self.config.horn_height,
            &self.config.horn_config(),
        )?;
        let horn_at_theta = horn.renormalized(theta.normalization);
        let equivalence = compare_moduli(&horn, &theta)?;
        let v = json!({
            "prenormalized_by_conjugation": conjugated,
            "horn": horn.records(),
            "theta": theta.records(),
            "horn_at_theta_normalization": horn_at_theta.records(),
            "equivalence": equivalence,
        });
        self.write("invariants.json", &pretty(&v), artifacts)?;
        Ok(v)
    }

    fn fractal(&self, artifacts: &mut Vec<String>) -> Result<Value> {
        let orbit = self.orbit()?;
        let s = epsilons(&orbit)?;
        let mut summary = Map::new();
        summary.insert("gaps".into(), json!(s.len()));
        summary.insert("real".into(), json!(s.real_flag));
        if s.real_flag {
            let mut rows = Vec::new();
            for eps in &self.config.eps_ladder {
                let n = counting_function(&s, *eps)?;
                let v = tube_function(&s, *eps)?;
                rows.push(vec![
                    num(*eps),
                    n.n.to_string(),
                    n.truncated.to_string(),
                    num(v),
                ]);
            }
            self.write(
                "fractal.csv",
                &self.csv(&["eps", "n", "truncated", "tube_volume"], &rows)?,
                artifacts,
            )?;
            let fit = match minkowski_fit(&s, 1e-2) {
                Ok(f) => json!(f),
                Err(e) if e.is_input() => json!({ "skipped": e.to_string() }),
                Err(e) => return Err(e),
            };
            summary.insert("minkowski".into(), fit);
        } else {
            let rows: Vec<Vec<String>> = s
                .epsilons
                .iter()
                .enumerate()
                .map(|(i, e)| vec![(i + 1).to_string(), num(e.re), num(e.im)])
                .collect();
            self.write(
                "fractal_gaps.csv",
                &self.csv(&["n", "eps_re", "eps_im"], &rows)?,
                artifacts,
            )?;
            summary.insert(
                "minkowski".into(),
                json!({ "skipped": "counting and tube functions need a real orbit" }),
            );
        }
        let fe = ThetaEvaluator::fractal(&orbit, self.config.theta_config())?;
        let rows = self.theta_rows(&fe)?;
        self.write(
            "fractal_theta.csv",
            &self.csv(
                &["s_re", "s_im", "crossings", "strip", "re", "im", "err"],
                &rows,
            )?,
            artifacts,
        )?;
        let v = Value::Object(summary);
        self.write("fractal.json", &pretty(&v), artifacts)?;
        Ok(v)
    }

    fn verify(&self, artifacts: &mut Vec<String>) -> Result<(Value, bool)> {
        let cfg = suite::SuiteConfig {
            theta: self.config.theta_config(),
            horn: self.config.horn_config(),
            ..suite::SuiteConfig::default()
        };
        let mut checks = suite::run_criteria(&self.config.criteria, &cfg);
        if self.germ.is_some() {
            let gcfg = suite::SuiteConfig {
                orbit_len: self.config.orbit_len,
                ..cfg
            };
            checks.extend(suite::germ_checks(self.germ()?, self.x0()?, &gcfg));
        }
        let ok = checks.iter().all(|c| c.passed);
        // timings stay out of the CSV so that reruns are byte-identical
        let rows: Vec<Vec<String>> = checks
            .iter()
            .map(|c| {
                vec![
                    c.id.clone(),
                    c.name.clone(),
                    if c.passed { "pass" } else { "fail" }.to_string(),
                    num(c.measured),
                    num(c.tolerance),
                    c.detail.clone(),
                ]
            })
            .collect();
        self.write(
            "verify.csv",
            &self.csv(
                &["id", "name", "status", "measured", "tolerance", "detail"],
                &rows,
            )?,
            artifacts,
        )?;
        let v = json!({ "passed": ok, "checks": checks });
        self.write("verify.json", &pretty(&v), artifacts)?;
        Ok((v, ok))
    }
}

/// Equivalence verdict between the two routes; both moduli vanishing is
/// reported as equivalent (the trivial class) without a translation.
fn compare_moduli(horn: &EVModulus, theta: &EVModulus) -> Result<Value> {
    let trivial = |m: &EVModulus| m.entries.iter().all(|e| e.below_floor);
    if trivial(horn) && trivial(theta) {
        return Ok(
            json!({ "equivalent": true, "c": null, "defect": 0.0, "trivial": true, "unresolved": 0 }),
        );
    }
    let eq = cocycles_equivalent(horn, theta, 1e-3)?;
    Ok(
        json!({ "equivalent": eq.equivalent, "c": eq.c, "defect": eq.defect, "trivial": false, "unresolved": eq.unresolved }),
    )
}

fn num(x: f64) -> String {
    format!("{x:e}")
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON values always serialize");
    s.push('\n');
    s
}

fn io_err(e: impl std::fmt::Display) -> Error {
    Error::input("out_dir", e.to_string())
}

fn error_json(e: &Error) -> Value {
    let field = match e {
        Error::Input { field, .. } => Some(field.clone()),
        _ => None,
    };
    json!({ "error": { "kind": e.kind(), "field": field, "message": e.to_string() } })
}

/// Exit code of an error: 2 for bad input, 1 for numerical failure.
pub fn exit_code(e: &Error) -> i32 {
    if e.is_input() {
        2
    } else {
        1
    }
}

fn configure_threads() -> Result<()> {
    let Ok(text) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize =
        text.trim().parse().ok().filter(|n| *n > 0).ok_or_else(|| {
            Error::input(THREADS_ENV, format!("'{text}' is not a positive integer"))
        })?;
    // a pool may already exist when the driver runs more than once in-process
    let _ = rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global();
    Ok(())
}

/// Entry point of the binary: parse, run, print, and return the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args = match Args::try_parse_from(args) {
        Ok(a) => a,
        Err(e) => {
            use clap::error::{ContextKind, ErrorKind};
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return 0;
            }
            let field = e
                .get(ContextKind::InvalidArg)
                .map(|a| a.to_string())
                .unwrap_or_else(|| "arguments".to_string());
            let err = Error::input(field, e.render().to_string().trim().to_string());
            eprintln!("{}", error_json(&err));
            return 2;
        }
    };
    let outcome = configure_threads()
        .and_then(|_| resolve(&args))
        .and_then(|(cfg, base)| Run::new(cfg, &base))
        .and_then(|run| run.execute());
    match outcome {
        Ok((summary, ok)) => {
            println!("{}", summary);
            if ok {
                0
            } else {
                1
            }
        }
        Err(e) => {
            eprintln!("{}", error_json(&e));
            exit_code(&e)
        }
    }
}
