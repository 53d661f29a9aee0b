//! Scenario files: a versioned TOML description of one verification run.
//!
//! [`Scenario::parse`] does all parsing, so malformed input is rejected
//! before any computation. [`Scenario::run`] never fails: errors raised by a
//! pipeline are embedded in the report and make it fail. Reports are
//! `serde_json` values with sorted keys and no timestamps, so a scenario and
//! a seed determine the report bytes.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use num_traits::Zero;
use serde::Deserialize;
use serde_json::{json, Value};

use crate::bounds::{
    find_power_exponent, nash_equation_close_to_zero, small_positive_function, sup_norm_bounds,
    verify_power_derivative_bound,
};
use crate::calculus::{
    random_polynomial, sweep_faa_di_bruno, sweep_generalized_leibniz, sweep_leibniz_power,
    sweep_multinomial, IdentityReport,
};
use crate::corners::{
    blend_control, build_inward_field, certify_push, check_blend, choose_push_epsilon,
    default_delta, push_family, relative_blend, verify_flow_embedding, CornerManifold,
};
use crate::counterexamples::{
    analytic_obstruction_check, cones_of_t, path_image_in_set, set_t, t_grid, teardrop,
    validate_cones, PathGerm, Verdict,
};
use crate::error::{Error, Result};
use crate::homotopy::{
    check_smooth_endpoints, check_straight_line, clamp_deviation, eta_power, glue_homotopy,
    power_derivatives_at_half, retract_and_check, smooth_endpoints, Retraction,
};
use crate::report::Certificate;
use crate::semialg::{AxisBox, SampleGrid, SemialgebraicSet, Stratum};
use crate::symexpr::{rat, to_f64, Rational, SymFn, SymMap};
use crate::topology::{Control, SeminormReport};

pub const SCHEMA_VERSION: u32 = 1;
pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_DENSITY: usize = 32;
pub const DEFAULT_MU: u32 = 1;
pub const DEFAULT_TOLERANCE: f64 = 1e-12;

/// CSV tables derived from a report, written next to it.
pub const PLOT_TABLES: [&str; 3] = ["trajectories.csv", "seminorm.csv", "path_image.csv"];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    Bounds,
    Push,
    Homotopy,
    Counterexample,
    IdentitySweep,
}

impl Kind {
    fn name(self) -> &'static str {
        match self {
            Kind::Bounds => "bounds",
            Kind::Push => "push",
            Kind::Homotopy => "homotopy",
            Kind::Counterexample => "counterexample",
            Kind::IdentitySweep => "identity-sweep",
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct BoxSpec {
    lo: Vec<String>,
    hi: Vec<String>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    schema_version: u32,
    name: String,
    kind: Kind,
    seed: Option<u64>,
    density: Option<usize>,
    mu: Option<u32>,
    tolerance: Option<f64>,
    bounds: Option<RawBounds>,
    push: Option<RawPush>,
    blend: Option<RawBlend>,
    homotopy: Option<RawHomotopy>,
    counterexample: Option<RawCounter>,
    identities: Option<IdentitySpec>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBounds {
    #[serde(rename = "box")]
    bbox: BoxSpec,
    /// Positive on the open box; the box equation when absent.
    f: Option<String>,
    #[serde(default = "quarter")]
    eps: String,
    /// Centred lattice points per axis; the run density when absent.
    grid: Option<usize>,
    psi: Option<String>,
    power: Option<String>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
enum RawField {
    Auto(String),
    Bump { r: String, k: u32 },
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPush {
    #[serde(rename = "box")]
    bbox: BoxSpec,
    facets: Vec<String>,
    #[serde(default = "auto_field")]
    field: RawField,
    #[serde(default = "tenth")]
    eps_user: String,
    #[serde(default = "default_delta_kind")]
    delta: String,
    #[serde(default = "d64")]
    facet_samples: usize,
    #[serde(default = "d200")]
    boundary_samples: usize,
    #[serde(default = "d800")]
    validation_samples: usize,
    #[serde(default = "d32")]
    t_count: usize,
    #[serde(default = "d8")]
    closeness_density: usize,
    #[serde(default = "d16")]
    embedding_density: usize,
    #[serde(default = "d10000")]
    embedding_pairs: usize,
    #[serde(default = "d16")]
    trajectory_samples: usize,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBlend {
    domain: BoxSpec,
    f: Vec<String>,
    psi: Vec<String>,
    psi_star: Vec<String>,
    /// `phi` vanishes exactly where this function does.
    zero: String,
    #[serde(default = "d200")]
    points: usize,
    #[serde(default = "d400")]
    boundary_samples: usize,
    #[serde(default = "d16")]
    ball_points: usize,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawHomotopy {
    domain: BoxSpec,
    glue: Option<RawGlue>,
    #[serde(default)]
    reparam: Vec<RawReparam>,
    straight_line: Option<RawStraight>,
    smooth: Option<RawSmooth>,
    retract: Option<RawRetract>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGlue {
    psi1: Vec<String>,
    psi2: Vec<String>,
    m: u32,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum RawReparam {
    Power {
        m: u32,
    },
    Clamp {
        delta0: String,
        #[serde(default = "d10000")]
        points: usize,
    },
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawStraight {
    random_pairs: usize,
    #[serde(default = "d3u")]
    degree: u32,
    #[serde(default = "d2")]
    target_dim: usize,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSmooth {
    phi: Vec<String>,
    delta: String,
    eps: Option<String>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRetract {
    phi: Vec<String>,
    center: Option<Vec<String>>,
    radius: Option<String>,
    #[serde(rename = "box")]
    bbox: Option<BoxSpec>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCounter {
    set: String,
    #[serde(default = "quarter_range")]
    t_range: [String; 2],
    #[serde(default = "d1000")]
    t_points: usize,
    #[serde(default = "d720")]
    directions: usize,
    #[serde(default = "milli")]
    radius: f64,
    #[serde(default)]
    points_in: Vec<Vec<String>>,
    #[serde(default)]
    points_out: Vec<Vec<String>>,
    #[serde(default)]
    paths: Vec<RawPath>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPath {
    name: String,
    left: Vec<String>,
    right: Vec<String>,
    #[serde(default = "zero_str")]
    t0: String,
    expect: Verdict,
    /// Gate the verdict on the sampled image lying in the set.
    #[serde(default = "yes")]
    image: bool,
}

/// Sizes of the exact identity sweeps.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IdentitySpec {
    pub multinomial_arity: usize,
    pub multinomial_order: u32,
    pub multinomial_m: usize,
    pub leibniz_polys: usize,
    pub leibniz_order: u32,
    pub leibniz_m: usize,
    pub generalized_pairs: usize,
    pub generalized_order: u32,
    pub faa_fixtures: usize,
    pub faa_order: u32,
    pub points: usize,
}

impl Default for IdentitySpec {
    fn default() -> Self {
        IdentitySpec {
            multinomial_arity: 3,
            multinomial_order: 6,
            multinomial_m: 5,
            leibniz_polys: 25,
            leibniz_order: 5,
            leibniz_m: 4,
            generalized_pairs: 10,
            generalized_order: 4,
            faa_fixtures: 10,
            faa_order: 3,
            points: 20,
        }
    }
}

impl IdentitySpec {
    pub fn run(&self, seed: u64) -> Vec<IdentityReport> {
        let mut out = sweep_multinomial(
            self.multinomial_arity,
            self.multinomial_order,
            self.multinomial_m,
        );
        out.extend(sweep_leibniz_power(
            seed,
            self.leibniz_polys,
            self.leibniz_order,
            self.leibniz_m,
            self.points,
        ));
        out.extend(sweep_generalized_leibniz(
            seed,
            self.generalized_pairs,
            self.generalized_order,
            self.points,
        ));
        out.extend(sweep_faa_di_bruno(
            seed,
            self.faa_fixtures,
            self.faa_order,
            self.points,
        ));
        out
    }
}

fn quarter() -> String {
    "1/4".into()
}
fn tenth() -> String {
    "1/10".into()
}
fn yes() -> bool {
    true
}
fn zero_str() -> String {
    "0".into()
}
fn default_delta_kind() -> String {
    "small".into()
}
fn auto_field() -> RawField {
    RawField::Auto("auto".into())
}
fn quarter_range() -> [String; 2] {
    ["-1/4".into(), "1/4".into()]
}
fn milli() -> f64 {
    1e-3
}
fn d2() -> usize {
    2
}
fn d3u() -> u32 {
    3
}
fn d8() -> usize {
    8
}
fn d16() -> usize {
    16
}
fn d32() -> usize {
    32
}
fn d64() -> usize {
    64
}
fn d200() -> usize {
    200
}
fn d400() -> usize {
    400
}
fn d720() -> usize {
    720
}
fn d800() -> usize {
    800
}
fn d1000() -> usize {
    1000
}
fn d10000() -> usize {
    10_000
}

fn scenario_err(msg: impl Into<String>) -> Error {
    Error::Scenario(msg.into())
}

fn parse_rat(text: &str, what: &str) -> Result<Rational> {
    Rational::from_str(text.trim())
        .map_err(|_| scenario_err(format!("{what}: `{text}` is not a rational")))
}

fn parse_box(b: &BoxSpec, what: &str) -> Result<AxisBox> {
    if b.lo.is_empty() || b.lo.len() != b.hi.len() {
        return Err(scenario_err(format!(
            "{what}: lo and hi need the same nonzero length"
        )));
    }
    let lo =
        b.lo.iter()
            .map(|s| parse_rat(s, what))
            .collect::<Result<Vec<_>>>()?;
    let hi =
        b.hi.iter()
            .map(|s| parse_rat(s, what))
            .collect::<Result<Vec<_>>>()?;
    if lo.iter().zip(&hi).any(|(a, b)| a >= b) {
        return Err(scenario_err(format!("{what}: every lo must be below hi")));
    }
    Ok(AxisBox::new(lo, hi))
}

fn parse_map(exprs: &[String], arity: usize) -> Result<SymMap> {
    let v: Vec<&str> = exprs.iter().map(String::as_str).collect();
    SymMap::parse(&v, arity)
}

fn parse_point(p: &[String], dim: usize) -> Result<Vec<Rational>> {
    if p.len() != dim {
        return Err(scenario_err(format!("point {p:?} needs {dim} coordinates")));
    }
    p.iter().map(|s| parse_rat(s, "point")).collect()
}

fn require<T>(section: Option<T>, name: &str, kind: Kind) -> Result<T> {
    section.ok_or_else(|| scenario_err(format!("kind `{}` needs a [{name}] section", kind.name())))
}

#[derive(Clone, Debug)]
struct PushPlan {
    q: CornerManifold,
    r: Rational,
    k: u32,
    eps_user: Rational,
    delta: Option<Rational>,
    raw: RawPush,
}

#[derive(Clone, Debug)]
struct BlendPlan {
    domain: AxisBox,
    f: SymMap,
    psi: SymMap,
    psi_star: SymMap,
    zero: SymFn,
    raw: RawBlend,
}

#[derive(Clone, Debug)]
struct BoundsPlan {
    domain: AxisBox,
    f: Option<SymFn>,
    eps: Rational,
    grid: Option<usize>,
    psi: Option<SymFn>,
    power: Option<SymFn>,
}

#[derive(Clone, Debug)]
enum ReparamPlan {
    Power(u32),
    Clamp(Rational, usize),
}

#[derive(Clone, Debug)]
enum RetractTarget {
    Ball(Vec<Rational>, Rational),
    Box(AxisBox),
}

#[derive(Clone, Debug)]
struct HomotopyPlan {
    domain: AxisBox,
    glue: Option<(SymMap, SymMap, u32)>,
    reparam: Vec<ReparamPlan>,
    straight: Option<RawStraight>,
    smooth: Option<(SymMap, SymFn, Option<Rational>)>,
    retract: Option<(SymMap, RetractTarget)>,
}

#[derive(Clone, Debug)]
struct PathPlan {
    name: String,
    germ: PathGerm,
    expect: Verdict,
    image: bool,
}

#[derive(Clone, Debug)]
struct CounterPlan {
    set_name: String,
    set: SemialgebraicSet,
    t_range: (Rational, Rational),
    t_points: usize,
    directions: usize,
    radius: f64,
    points_in: Vec<Vec<Rational>>,
    points_out: Vec<Vec<Rational>>,
    paths: Vec<PathPlan>,
}

#[derive(Clone, Debug)]
enum Plan {
    Bounds(BoundsPlan),
    Push(Box<PushPlan>, Option<Box<BlendPlan>>),
    Homotopy(Box<HomotopyPlan>),
    Counterexample(Box<CounterPlan>),
    Identities(IdentitySpec),
}

/// A parsed and validated scenario.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub name: String,
    pub kind: Kind,
    seed: Option<u64>,
    density: Option<usize>,
    mu: Option<u32>,
    tolerance: Option<f64>,
    plan: Plan,
}

/// Command-line overrides; each wins over the scenario file.
#[derive(Clone, Copy, Debug, Default)]
pub struct RunOptions {
    pub seed: Option<u64>,
    pub density: Option<usize>,
    pub mu: Option<u32>,
    pub tolerance: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
struct Settings {
    seed: u64,
    density: usize,
    mu: u32,
    tolerance: f64,
}

#[derive(Clone, Debug)]
pub struct Outcome {
    pub report: Value,
    pub pass: bool,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        if self.pass {
            0
        } else {
            1
        }
    }

    /// Pretty JSON with a trailing newline.
    pub fn report_text(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.report).expect("report serializes");
        s.push('\n');
        s
    }
}

impl Scenario {
    pub fn load(path: &Path) -> Result<Scenario> {
        let text = fs::read_to_string(path)
            .map_err(|e| scenario_err(format!("cannot read {}: {e}", path.display())))?;
        Scenario::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Scenario> {
        let raw: RawScenario = toml::from_str(text).map_err(|e| scenario_err(e.to_string()))?;
        if raw.schema_version != SCHEMA_VERSION {
            return Err(scenario_err(format!(
                "schema_version {} is not supported (expected {SCHEMA_VERSION})",
                raw.schema_version
            )));
        }
        if raw.density == Some(0) {
            return Err(scenario_err("density must be positive"));
        }
        let kind = raw.kind;
        let plan = match kind {
            Kind::Bounds => Plan::Bounds(bounds_plan(require(raw.bounds, "bounds", kind)?)?),
            Kind::Push => {
                let push = push_plan(require(raw.push, "push", kind)?)?;
                let blend = raw.blend.map(blend_plan).transpose()?.map(Box::new);
                Plan::Push(Box::new(push), blend)
            }
            Kind::Homotopy => Plan::Homotopy(Box::new(homotopy_plan(require(
                raw.homotopy,
                "homotopy",
                kind,
            )?)?)),
            Kind::Counterexample => Plan::Counterexample(Box::new(counter_plan(require(
                raw.counterexample,
                "counterexample",
                kind,
            )?)?)),
            Kind::IdentitySweep => Plan::Identities(raw.identities.unwrap_or_default()),
        };
        Ok(Scenario {
            name: raw.name,
            kind,
            seed: raw.seed,
            density: raw.density,
            mu: raw.mu,
            tolerance: raw.tolerance,
            plan,
        })
    }

    fn settings(&self, opts: &RunOptions) -> Settings {
        Settings {
            seed: opts.seed.or(self.seed).unwrap_or(DEFAULT_SEED),
            density: opts
                .density
                .or(self.density)
                .unwrap_or(DEFAULT_DENSITY)
                .max(1),
            mu: opts.mu.or(self.mu).unwrap_or(DEFAULT_MU),
            tolerance: opts
                .tolerance
                .or(self.tolerance)
                .unwrap_or(DEFAULT_TOLERANCE),
        }
    }

    pub fn run(&self, opts: &RunOptions) -> Outcome {
        let s = self.settings(opts);
        let mut run = Run::new(s);
        let result = match &self.plan {
            Plan::Bounds(p) => run_bounds(&mut run, p),
            Plan::Push(p, blend) => run_push(&mut run, p, blend.as_deref()),
            Plan::Homotopy(p) => run_homotopy(&mut run, p),
            Plan::Counterexample(p) => run_counter(&mut run, p),
            Plan::Identities(spec) => run_identities(&mut run, spec),
        };
        let error = result.err().map(|e| error_json(&e));
        let pass = error.is_none()
            && !run.checks.is_empty()
            && run.checks.iter().all(|c| c["pass"] == true);
        let mut report = json!({
            "schema_version": SCHEMA_VERSION,
            "name": self.name,
            "kind": self.kind.name(),
            "settings": {"seed": s.seed, "density": s.density, "mu": s.mu, "tolerance": s.tolerance},
            "status": if pass { "pass" } else { "fail" },
            "checks": run.checks,
            "plot": run.plot,
        });
        if let Some(e) = error {
            report["error"] = e;
        }
        Outcome { report, pass }
    }
}

fn bounds_plan(raw: RawBounds) -> Result<BoundsPlan> {
    let domain = parse_box(&raw.bbox, "bounds.box")?;
    let d = domain.dim();
    let opt = |s: &Option<String>| s.as_deref().map(|t| SymFn::parse(t, d)).transpose();
    Ok(BoundsPlan {
        f: opt(&raw.f)?,
        eps: parse_rat(&raw.eps, "bounds.eps")?,
        grid: raw.grid,
        psi: opt(&raw.psi)?,
        power: opt(&raw.power)?,
        domain,
    })
}

fn push_plan(raw: RawPush) -> Result<PushPlan> {
    let bbox = parse_box(&raw.bbox, "push.box")?;
    let facets: Vec<&str> = raw.facets.iter().map(String::as_str).collect();
    if facets.is_empty() {
        return Err(scenario_err("push.facets must not be empty"));
    }
    let q = CornerManifold::parse(&facets, bbox)?;
    let (r, k) = match &raw.field {
        RawField::Auto(s) if s == "auto" => (rat(1, 4), 2),
        RawField::Auto(s) => return Err(scenario_err(format!("push.field: unknown field `{s}`"))),
        RawField::Bump { r, k } => (parse_rat(r, "push.field.r")?, *k),
    };
    let delta = match raw.delta.as_str() {
        "small" => None,
        c => Some(parse_rat(c, "push.delta")?),
    };
    if raw.t_count == 0 || raw.boundary_samples == 0 {
        return Err(scenario_err(
            "push.t_count and push.boundary_samples must be positive",
        ));
    }
    Ok(PushPlan {
        q,
        r,
        k,
        eps_user: parse_rat(&raw.eps_user, "push.eps_user")?,
        delta,
        raw,
    })
}

fn blend_plan(raw: RawBlend) -> Result<BlendPlan> {
    let domain = parse_box(&raw.domain, "blend.domain")?;
    let d = domain.dim();
    let (f, psi, psi_star) = (
        parse_map(&raw.f, d)?,
        parse_map(&raw.psi, d)?,
        parse_map(&raw.psi_star, d)?,
    );
    if f.dim() != psi.dim() || f.dim() != psi_star.dim() {
        return Err(scenario_err(
            "blend: f, psi and psi_star need the same number of components",
        ));
    }
    Ok(BlendPlan {
        zero: SymFn::parse(&raw.zero, d)?,
        domain,
        f,
        psi,
        psi_star,
        raw,
    })
}

fn homotopy_plan(raw: RawHomotopy) -> Result<HomotopyPlan> {
    let domain = parse_box(&raw.domain, "homotopy.domain")?;
    let d = domain.dim();
    let glue = raw
        .glue
        .map(|g| Ok::<_, Error>((parse_map(&g.psi1, d + 1)?, parse_map(&g.psi2, d + 1)?, g.m)))
        .transpose()?;
    let reparam = raw
        .reparam
        .into_iter()
        .map(|r| match r {
            RawReparam::Power { m } => Ok(ReparamPlan::Power(m)),
            RawReparam::Clamp { delta0, points } => Ok(ReparamPlan::Clamp(
                parse_rat(&delta0, "reparam.delta0")?,
                points,
            )),
        })
        .collect::<Result<Vec<_>>>()?;
    let smooth = raw
        .smooth
        .map(|s| {
            let eps = s
                .eps
                .as_deref()
                .map(|e| parse_rat(e, "smooth.eps"))
                .transpose()?;
            Ok::<_, Error>((parse_map(&s.phi, d + 1)?, SymFn::parse(&s.delta, d)?, eps))
        })
        .transpose()?;
    let retract = raw
        .retract
        .map(|r| {
            let phi = parse_map(&r.phi, d + 1)?;
            let target = match (r.center, r.radius, r.bbox) {
                (Some(c), Some(rad), None) => RetractTarget::Ball(
                    parse_point(&c, phi.dim())?,
                    parse_rat(&rad, "retract.radius")?,
                ),
                (None, None, Some(b)) => RetractTarget::Box(parse_box(&b, "retract.box")?),
                _ => {
                    return Err(scenario_err(
                        "retract: give either center and radius, or box",
                    ))
                }
            };
            Ok((phi, target))
        })
        .transpose()?;
    Ok(HomotopyPlan {
        domain,
        glue,
        reparam,
        straight: raw.straight_line,
        smooth,
        retract,
    })
}

fn counter_plan(raw: RawCounter) -> Result<CounterPlan> {
    let set = match raw.set.as_str() {
        "T" => set_t(),
        "teardrop" => teardrop(),
        other => {
            return Err(scenario_err(format!(
                "counterexample.set: unknown set `{other}`"
            )))
        }
    };
    let paths = raw
        .paths
        .iter()
        .map(|p| {
            let germ = PathGerm::new(
                parse_map(&p.left, 1)?,
                parse_map(&p.right, 1)?,
                parse_rat(&p.t0, "path.t0")?,
                0,
            )?;
            Ok(PathPlan {
                name: p.name.clone(),
                germ,
                expect: p.expect,
                image: p.image,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let pts = |v: &[Vec<String>]| {
        v.iter()
            .map(|p| parse_point(p, set.dim))
            .collect::<Result<Vec<_>>>()
    };
    Ok(CounterPlan {
        t_range: (
            parse_rat(&raw.t_range[0], "t_range")?,
            parse_rat(&raw.t_range[1], "t_range")?,
        ),
        points_in: pts(&raw.points_in)?,
        points_out: pts(&raw.points_out)?,
        set_name: raw.set,
        set,
        t_points: raw.t_points,
        directions: raw.directions,
        radius: raw.radius,
        paths,
    })
}

/// Accumulates checks and plot rows for one run.
struct Run {
    s: Settings,
    checks: Vec<Value>,
    plot: Value,
}

impl Run {
    fn new(s: Settings) -> Self {
        Run {
            s,
            checks: Vec::new(),
            plot: json!({"trajectories": [], "seminorm": [], "paths": []}),
        }
    }

    fn check(&mut self, name: &str, pass: bool, detail: Value) {
        self.checks
            .push(json!({"check": name, "pass": pass, "detail": detail}));
    }

    /// A certificate passes only when its margin also clears the tolerance.
    fn certificate(&mut self, name: &str, c: &Certificate) {
        let clears = c.min_margin.is_none_or(|m| m >= self.s.tolerance);
        let detail = serde_json::to_value(c).expect("certificate serializes");
        self.checks.push(json!({"check": name, "pass": c.passed() && clears, "min_margin": c.min_margin, "detail": detail}));
    }

    /// Exact sign certificates: any positive margin is a pass.
    fn membership(&mut self, name: &str, c: &Certificate) {
        let detail = serde_json::to_value(c).expect("certificate serializes");
        self.checks.push(json!({"check": name, "pass": c.passed(), "min_margin": c.min_margin, "detail": detail}));
    }

    fn seminorm(&mut self, name: &str, r: &SeminormReport) {
        let clears = r.min_margin.is_none_or(|m| m >= self.s.tolerance);
        let detail = serde_json::to_value(r).expect("seminorm report serializes");
        self.checks.push(json!({"check": name, "pass": r.verdict && clears, "min_margin": r.min_margin, "detail": detail}));
        let rows = self.plot["seminorm"].as_array_mut().expect("array");
        for a in &r.alphas {
            rows.push(json!([name, a.alpha.to_string(), a.component, a.max]));
        }
    }
}

fn error_json(e: &Error) -> Value {
    let kind = match e {
        Error::Pole => "pole",
        Error::ZeroDenominator => "zero_denominator",
        Error::Parse(_) => "parse",
        Error::Scenario(_) => "scenario",
        Error::Hypothesis(_) => "hypothesis",
        Error::SearchExhausted(_) => "search_exhausted",
        Error::EmptyStratum(_) => "empty_stratum",
        Error::Degenerate { .. } => "degenerate",
        Error::NonConvergent(_) => "non_convergent",
        Error::Certificate(_) => "certificate",
    };
    let mut v = json!({"kind": kind, "message": e.to_string()});
    if let Error::Degenerate { facet, point, norm } = e {
        v["witness"] = json!({"facet": facet, "point": point, "norm": norm});
    }
    v
}

fn run_bounds(run: &mut Run, p: &BoundsPlan) -> Result<()> {
    let s = run.s;
    let d = p.domain.dim();
    let grid = SampleGrid::lattice(&p.domain, p.grid.unwrap_or(s.density), true);
    if let Some(f) = &p.power {
        let c = sup_norm_bounds(f, &grid, s.mu)?;
        let n = find_power_exponent(&c.c, &c.l, s.mu.max(1))?;
        let r = verify_power_derivative_bound(f, n, s.mu, &grid)?;
        let clears = r.min_margin.is_none_or(|m| m >= s.tolerance);
        run.checks.push(json!({
            "check": "power_derivative_bound",
            "pass": r.pass && r.chain_pass && clears,
            "min_margin": r.min_margin,
            "detail": serde_json::to_value(&r).expect("serializes"),
        }));
    }
    let f =
        p.f.clone()
            .unwrap_or_else(|| crate::bounds::box_equation(&p.domain))
            .with_arity(d);
    let eps = Control::constant(p.eps.clone());
    let sf = small_positive_function(&f, &p.domain, &eps, s.mu, &grid)?;
    let detail = json!({
        "n0": sf.n0, "n0_at_cap": sf.n0_at_cap, "n1": sf.n1, "n2": sf.n2, "n": sf.n,
        "constants": serde_json::to_value(&sf.constants).expect("serializes"),
    });
    run.check("small_function.exponents", true, detail);
    run.certificate("small_function", &sf.certificate);
    run.certificate("small_function.validation", &sf.validation);
    if let Some(psi) = &p.psi {
        let ne = nash_equation_close_to_zero(psi, &eps, s.mu, &p.domain, &grid)?;
        run.certificate("nash_equation", &ne.certificate);
    }
    Ok(())
}

fn run_push(run: &mut Run, p: &PushPlan, blend: Option<&BlendPlan>) -> Result<()> {
    let s = run.s;
    let (q, raw) = (&p.q, &p.raw);
    let d = q.dim();
    let fs = q.facet_samples(s.seed, s.density, raw.facet_samples)?;
    let field = build_inward_field(q, &p.r, p.k, &fs)?;
    run.check(
        "inward_field",
        field.min_margin.is_some_and(|m| m > 0.0),
        json!({"r": p.r.to_string(), "k": p.k, "margins": field.margins, "min_margin": field.min_margin}),
    );
    let bnd = q.set.sample_n(
        Stratum::Boundary,
        s.seed + 1,
        s.density,
        raw.boundary_samples,
    )?;
    let val = q.set.sample_n(
        Stratum::Boundary,
        s.seed + 2,
        2 * s.density,
        raw.validation_samples,
    )?;
    let ch = choose_push_epsilon(q, &field.field, &bnd, &val, raw.t_count, &fs)?;
    run.check(
        "push_epsilon",
        ch.exponent <= 20,
        json!({"eps": ch.eps.to_string(), "exponent": ch.exponent, "diagnostics": ch.diagnostics}),
    );
    run.membership("push_epsilon.samples", &ch.certificate);
    run.membership("push_epsilon.validation", &ch.validation);

    let delta = match &p.delta {
        Some(c) => SymFn::constant(c.clone(), d),
        None => {
            let grid = SampleGrid::lattice(q.bbox(), s.density, true);
            let sf = default_delta(&ch.eps, &field.field, q.bbox(), &p.eps_user, s.mu, &grid)?;
            run.check(
                "delta.exponents",
                true,
                json!({"n0": sf.n0, "n2": sf.n2, "n": sf.n, "control": sf.eps.to_string()}),
            );
            run.certificate("delta", &sf.certificate);
            run.certificate("delta.validation", &sf.validation);
            sf.h
        }
    };
    let fam = push_family(q, &field.field, &ch.eps, &delta);
    let control = Control::constant(p.eps_user.clone());
    let cgrid = SampleGrid::lattice(q.bbox(), raw.closeness_density, true);
    let cert = certify_push(&fam, &bnd, raw.t_count, Some((&control, s.mu, &cgrid)))?;
    run.check(
        "sigma_identity_at_zero",
        cert.identity_at_zero,
        json!({"samples": bnd.len()}),
    );
    run.membership("sigma_interior", &cert.sigma);
    run.membership("psi_interior", &cert.psi);
    if let Some(c) = &cert.closeness {
        run.seminorm("psi_close_to_identity", c);
    }
    let tgrid: Vec<Rational> = (1..=raw.t_count)
        .map(|k| rat(k as i64, raw.t_count as i64))
        .collect();
    let egrid = SampleGrid::lattice(q.bbox(), raw.embedding_density, true);
    let emb = verify_flow_embedding(
        &fam.psi_velocity,
        &egrid,
        &tgrid,
        raw.embedding_pairs,
        s.seed + 3,
    )?;
    run.check(
        "psi_embedding",
        emb.pass,
        serde_json::to_value(&emb).expect("serializes"),
    );

    let rows = run.plot["trajectories"].as_array_mut().expect("array");
    for (i, x) in bnd.points.iter().take(raw.trajectory_samples).enumerate() {
        let v = fam.sigma_velocity.eval(x)?;
        for k in 0..=raw.t_count {
            let t = rat(k as i64, raw.t_count as i64);
            for c in 0..d {
                rows.push(json!([
                    i,
                    to_f64(&t),
                    c + 1,
                    to_f64(&x[c]),
                    to_f64(&(&x[c] + &t * &v[c]))
                ]));
            }
        }
    }
    if let Some(b) = blend {
        run_blend(run, q, b)?;
    }
    Ok(())
}

fn run_blend(run: &mut Run, q: &CornerManifold, b: &BlendPlan) -> Result<()> {
    let s = run.s;
    if b.f.dim() != q.dim() {
        return Err(scenario_err(
            "blend maps must land in the corner body's space",
        ));
    }
    let boundary = q.set.sample_n(
        Stratum::Boundary,
        s.seed + 4,
        s.density,
        b.raw.boundary_samples,
    )?;
    let diff = b.psi.zip_with(&b.psi_star, |u, v| u - v);
    let control = blend_control(&b.f, &diff, boundary.clone());
    let grid = SampleGrid::lattice(&b.domain, b.raw.points, true);
    let ne = nash_equation_close_to_zero(&b.zero, &control, s.mu, &b.domain, &grid)?;
    run.certificate("blend.phi", &ne.certificate);
    let g = relative_blend(&b.f, &b.psi, &b.psi_star, &ne.phi);
    let mut zeros = 0usize;
    let mut agree = true;
    // an odd count puts the box centre on the lattice
    for x in b.domain.lattice_vertices(b.raw.points | 1) {
        if b.zero.eval(&x)?.is_zero() {
            zeros += 1;
            agree &= g.eval(&x)? == b.f.eval(&x)?;
        }
    }
    run.check(
        "blend.fixes_zero_set",
        agree && zeros > 0,
        json!({"zero_set_points": zeros}),
    );
    let r = check_blend(
        &g,
        &b.f,
        &q.set,
        &boundary,
        &grid,
        s.seed + 5,
        b.raw.ball_points,
    )?;
    run.check(
        "blend.inside",
        r.inside && r.ball_pass,
        serde_json::to_value(&r).expect("serializes"),
    );
    Ok(())
}

fn run_homotopy(run: &mut Run, p: &HomotopyPlan) -> Result<()> {
    let s = run.s;
    let d = p.domain.dim();
    let xgrid = p.domain.lattice_vertices(s.density.min(64));
    let tgrid: Vec<Rational> = (0..=s.density)
        .map(|k| rat(k as i64, s.density as i64))
        .collect();
    for r in &p.reparam {
        match r {
            ReparamPlan::Power(m) => {
                let ds = power_derivatives_at_half(*m)?;
                let vanish = ds[..*m as usize - 1].iter().all(Zero::is_zero);
                let top = !ds[*m as usize - 1].is_zero();
                eta_power(*m)?;
                run.check(
                    &format!("eta_power.m{m}"),
                    vanish && top,
                    json!({"derivatives_at_half": ds.iter().map(ToString::to_string).collect::<Vec<_>>()}),
                );
            }
            ReparamPlan::Clamp(d0, n) => {
                let r = clamp_deviation(d0, *n)?;
                run.check(
                    &format!("eta_clamp.{d0}"),
                    r.pass,
                    serde_json::to_value(&r).expect("serializes"),
                );
            }
        }
    }
    if let Some((psi1, psi2, m)) = &p.glue {
        let g = glue_homotopy(psi1, psi2, *m, s.mu, &xgrid)?;
        run.check(
            "glue",
            g.report.pass,
            serde_json::to_value(&g.report).expect("serializes"),
        );
    }
    if let Some(st) = &p.straight {
        let mut rng = crate::semialg::stream_rng(s.seed, 0);
        let mut all = true;
        let mut rows = Vec::new();
        let samples: Vec<Vec<Rational>> = xgrid
            .iter()
            .flat_map(|x| {
                tgrid
                    .iter()
                    .step_by(4)
                    .map(move |t| x.iter().cloned().chain([t.clone()]).collect())
            })
            .collect();
        for _ in 0..st.random_pairs {
            let mk = |rng: &mut rand_chacha::ChaCha8Rng| {
                SymMap::new(
                    (0..st.target_dim)
                        .map(|_| random_polynomial(rng, d, st.degree))
                        .collect(),
                    d,
                )
            };
            let (f, g) = (mk(&mut rng), mk(&mut rng));
            let r = check_straight_line(&f, &g, &samples)?;
            all &= r.identity && r.samples_pass;
            rows.push(serde_json::to_value(&r).expect("serializes"));
        }
        run.check("straight_line", all, json!(rows));
    }
    if let Some((phi, delta, eps)) = &p.smooth {
        let sm = smooth_endpoints(phi, delta);
        let control = eps.clone().map(Control::constant);
        let r = check_smooth_endpoints(&sm, control.as_ref(), s.mu, &xgrid, &tgrid)?;
        let pass = r.delta_valid && r.locked && r.ends_unchanged && r.close.unwrap_or(true);
        let rows = run.plot["seminorm"].as_array_mut().expect("array");
        for (a, m) in &r.trimmed {
            rows.push(json!(["smooth_endpoints", a.to_string(), 0, m]));
        }
        run.check(
            "smooth_endpoints",
            pass,
            serde_json::to_value(&r).expect("serializes"),
        );
    }
    if let Some((phi, target)) = &p.retract {
        let rho = match target {
            RetractTarget::Ball(c, r) => Retraction::Ball {
                center: c.clone(),
                radius: r.clone(),
            },
            RetractTarget::Box(b) => Retraction::Box(b.clone()),
        };
        let r = retract_and_check(phi, &rho, &xgrid, &tgrid)?;
        run.check(
            "retract",
            r.all_inside && r.fixed_points,
            serde_json::to_value(&r).expect("serializes"),
        );
    }
    Ok(())
}

fn run_counter(run: &mut Run, p: &CounterPlan) -> Result<()> {
    let mut membership = Vec::new();
    let mut ok = true;
    for (x, expect) in p
        .points_in
        .iter()
        .map(|x| (x, true))
        .chain(p.points_out.iter().map(|x| (x, false)))
    {
        let got = p.set.contains(x)?;
        ok &= got == expect;
        membership.push(json!({"point": x.iter().map(ToString::to_string).collect::<Vec<_>>(), "member": got, "expected": expect}));
    }
    if !membership.is_empty() {
        run.check(
            "membership",
            ok,
            json!({"set": p.set_name, "points": membership}),
        );
    }
    let cones = cones_of_t();
    if p.set_name == "T" {
        let r = validate_cones(&cones, &p.set, p.directions, p.radius)?;
        run.check(
            "cones",
            r.pass,
            serde_json::to_value(&r).expect("serializes"),
        );
    }
    let grid = t_grid(&p.t_range.0, &p.t_range.1, p.t_points);
    for path in &p.paths {
        let inside = path_image_in_set(&path.germ, &p.set, &grid)?;
        let gate = path.image.then_some((&p.set, grid.as_slice()));
        let r = analytic_obstruction_check(&path.germ, &cones, gate)?;
        let detail = json!({"image_in_set": inside, "expected": path.expect, "report": serde_json::to_value(&r).expect("serializes")});
        run.check(
            &format!("path.{}", path.name),
            r.verdict == path.expect,
            detail,
        );
        let rows = run.plot["paths"].as_array_mut().expect("array");
        for t in grid.iter().step_by((p.t_points / 200).max(1)) {
            let y = path.germ.eval(t)?;
            rows.push(json!([
                path.name,
                to_f64(t),
                to_f64(&y[0]),
                y.get(1).map(to_f64)
            ]));
        }
    }
    Ok(())
}

fn run_identities(run: &mut Run, spec: &IdentitySpec) -> Result<()> {
    let reports = spec.run(run.s.seed);
    let failed: Vec<&IdentityReport> = reports.iter().filter(|r| !r.passed()).collect();
    let mut by_name: std::collections::BTreeMap<&str, (usize, usize)> = Default::default();
    for r in &reports {
        let e = by_name.entry(r.identity.as_str()).or_default();
        e.0 += 1;
        e.1 += r.passed() as usize;
    }
    for (name, (total, passed)) in by_name {
        let fails: Vec<Value> = failed
            .iter()
            .filter(|r| r.identity == name)
            .take(5)
            .map(|r| serde_json::to_value(r).expect("serializes"))
            .collect();
        run.check(
            name,
            total == passed,
            json!({"cases": total, "passed": passed, "failures": fails}),
        );
    }
    Ok(())
}

fn csv_field(v: &Value) -> String {
    match v {
        Value::String(s) if s.contains(',') || s.contains('"') => {
            format!("\"{}\"", s.replace('"', "\"\""))
        }
        Value::String(s) => s.clone(),
        Value::Null => String::new(),
        other => other.to_string(),
    }
}

/// The three plot tables of a report, header-only where it has no rows.
pub fn emit_plot_data(report: &Value) -> Vec<(&'static str, String)> {
    let tables = [
        ("trajectories.csv", "trajectories", "sample,t,coord,x,sigma"),
        ("seminorm.csv", "seminorm", "source,alpha,component,max"),
        ("path_image.csv", "paths", "path,t,x,y"),
    ];
    tables
        .iter()
        .map(|(file, key, header)| {
            let mut out = format!("{header}\n");
            if let Some(rows) = report
                .get("plot")
                .and_then(|p| p.get(*key))
                .and_then(Value::as_array)
            {
                for row in rows.iter().filter_map(Value::as_array) {
                    out.push_str(&row.iter().map(csv_field).collect::<Vec<_>>().join(","));
                    out.push('\n');
                }
            }
            (*file, out)
        })
        .collect()
}

/// Write through a temporary file in the same directory, then rename.
pub fn write_atomic(path: &Path, contents: &str) -> std::io::Result<()> {
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let tmp = dir.join(format!(".{name}.{}.tmp", std::process::id()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents.as_bytes())?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)
}

/// `<out>/<name>.json` plus the plot tables under `<out>/<name>/`.
pub fn write_outputs(out: &Path, name: &str, outcome: &Outcome) -> std::io::Result<Vec<PathBuf>> {
    let report = out.join(format!("{name}.json"));
    write_atomic(&report, &outcome.report_text())?;
    let mut written = vec![report];
    for (file, csv) in emit_plot_data(&outcome.report) {
        let p = out.join(name).join(file);
        write_atomic(&p, &csv)?;
        written.push(p);
    }
    Ok(written)
}
