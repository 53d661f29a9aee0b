//! Explicit semialgebraic sets: sign conditions combined with and/or/not,
//! exact membership at rational points, seeded sampling of strata, and
//! sampled distances.
//!
//! A set carries a bounding box that only serves as a sampling window;
//! membership is decided by the formula alone.

use std::fmt;

use num_bigint::BigInt;
use num_traits::{Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::par;
use crate::symexpr::parse::Parser;
use crate::symexpr::{from_f64, to_f64, ParseError, Rational, SymFn};

/// Proposals allowed per accepted sample before a stratum is declared empty.
pub const PROPOSAL_BUDGET: usize = 1_000_000;
/// Bisection stops once the bracketing interval is this short along the line.
pub const BISECTION_TOL: f64 = 1e-12;
const LINE_SCAN_STEPS: usize = 64;
const DYADIC_BITS: u32 = 30;

/// Seeded stream `stream` of a ChaCha generator; streams are independent, so
/// per-point generation is identical in parallel and sequential sweeps.
pub(crate) fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Axis-aligned closed box `prod [lo_i, hi_i]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AxisBox {
    pub lo: Vec<Rational>,
    pub hi: Vec<Rational>,
}

impl AxisBox {
    pub fn new(lo: Vec<Rational>, hi: Vec<Rational>) -> Self {
        assert_eq!(lo.len(), hi.len());
        assert!(
            lo.iter().zip(&hi).all(|(a, b)| a < b),
            "box sides must have positive width"
        );
        AxisBox { lo, hi }
    }

    pub fn cube(dim: usize, lo: Rational, hi: Rational) -> Self {
        Self::new(vec![lo; dim], vec![hi; dim])
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn width(&self, i: usize) -> Rational {
        &self.hi[i] - &self.lo[i]
    }

    pub fn contains(&self, p: &[Rational]) -> bool {
        p.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .all(|(x, (a, b))| a <= x && x <= b)
    }

    /// Each side widened by `frac` of its width at both ends.
    pub fn enlarged(&self, frac: &Rational) -> AxisBox {
        let (lo, hi) = (0..self.dim())
            .map(|i| {
                let w = self.width(i) * frac;
                (&self.lo[i] - &w, &self.hi[i] + &w)
            })
            .unzip();
        AxisBox { lo, hi }
    }

    fn axis(&self, i: usize, n: usize, centred: bool) -> Vec<Rational> {
        let w = self.width(i);
        (0..n)
            .map(|k| {
                let frac = if centred {
                    Rational::new(BigInt::from(2 * k + 1), BigInt::from(2 * n))
                } else if n == 1 {
                    Rational::new(1.into(), 2.into())
                } else {
                    Rational::new(BigInt::from(k), BigInt::from(n - 1))
                };
                &self.lo[i] + &w * frac
            })
            .collect()
    }

    /// `n` points per axis including both endpoints.
    pub fn lattice_vertices(&self, n: usize) -> Vec<Vec<Rational>> {
        tensor((0..self.dim()).map(|i| self.axis(i, n, false)).collect())
    }

    /// `n` cell centres per axis; every point lies in the open box.
    pub fn lattice_centres(&self, n: usize) -> Vec<Vec<Rational>> {
        tensor((0..self.dim()).map(|i| self.axis(i, n, true)).collect())
    }

    /// Uniform dyadic rational point of the closed box.
    pub(crate) fn random_point(&self, rng: &mut ChaCha8Rng) -> Vec<Rational> {
        let den = BigInt::from(1u64 << DYADIC_BITS);
        (0..self.dim())
            .map(|i| {
                let k: u64 = rng.gen_range(0..=(1u64 << DYADIC_BITS));
                &self.lo[i] + self.width(i) * Rational::new(BigInt::from(k), den.clone())
            })
            .collect()
    }

    pub fn lo_f64(&self) -> Vec<f64> {
        self.lo.iter().map(to_f64).collect()
    }

    pub fn hi_f64(&self) -> Vec<f64> {
        self.hi.iter().map(to_f64).collect()
    }
}

pub(crate) fn tensor(axes: Vec<Vec<Rational>>) -> Vec<Vec<Rational>> {
    let mut out = vec![Vec::new()];
    for axis in axes {
        out = out
            .into_iter()
            .flat_map(|p| {
                axis.iter().map(move |v| {
                    let mut q = p.clone();
                    q.push(v.clone());
                    q
                })
            })
            .collect();
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Relation {
    Ge,
    Gt,
    Eq,
    Ne,
    Le,
    Lt,
}

impl Relation {
    pub fn holds(self, v: &Rational) -> bool {
        match self {
            Relation::Ge => !v.is_negative(),
            Relation::Gt => v.is_positive(),
            Relation::Eq => v.is_zero(),
            Relation::Ne => !v.is_zero(),
            Relation::Le => !v.is_positive(),
            Relation::Lt => v.is_negative(),
        }
    }

    pub fn negate(self) -> Relation {
        match self {
            Relation::Ge => Relation::Lt,
            Relation::Gt => Relation::Le,
            Relation::Eq => Relation::Ne,
            Relation::Ne => Relation::Eq,
            Relation::Le => Relation::Gt,
            Relation::Lt => Relation::Ge,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Relation::Ge => ">=",
            Relation::Gt => ">",
            Relation::Eq => "=",
            Relation::Ne => "!=",
            Relation::Le => "<=",
            Relation::Lt => "<",
        }
    }
}

/// `f REL 0`.
#[derive(Clone, Debug)]
pub struct SignCondition {
    pub f: SymFn,
    pub rel: Relation,
}

impl SignCondition {
    pub fn new(f: SymFn, rel: Relation) -> Self {
        SignCondition { f, rel }
    }

    pub fn holds(&self, p: &[Rational]) -> Result<bool> {
        Ok(self.rel.holds(&self.f.eval(p)?))
    }
}

#[derive(Clone, Debug)]
pub enum Formula {
    Const(bool),
    Atom(SignCondition),
    And(Vec<Formula>),
    Or(Vec<Formula>),
    Not(Box<Formula>),
}

impl Formula {
    pub fn atom(f: SymFn, rel: Relation) -> Self {
        Formula::Atom(SignCondition::new(f, rel))
    }

    pub fn all_nonneg(fs: &[SymFn]) -> Self {
        Formula::And(
            fs.iter()
                .map(|f| Formula::atom(f.clone(), Relation::Ge))
                .collect(),
        )
    }

    /// Exact evaluation; a pole in any evaluated atom is an error.
    pub fn eval(&self, p: &[Rational]) -> Result<bool> {
        match self {
            Formula::Const(b) => Ok(*b),
            Formula::Atom(c) => c.holds(p),
            Formula::And(fs) => {
                for f in fs {
                    if !f.eval(p)? {
                        return Ok(false);
                    }
                }
                Ok(true)
            }
            Formula::Or(fs) => {
                for f in fs {
                    if f.eval(p)? {
                        return Ok(true);
                    }
                }
                Ok(false)
            }
            Formula::Not(f) => Ok(!f.eval(p)?),
        }
    }

    /// Negation normal form with every closed relation made strict. For sets
    /// that are the closure of their interior this describes the interior.
    pub fn strict(&self) -> Formula {
        self.nnf(false).strict_nnf()
    }

    fn nnf(&self, negate: bool) -> Formula {
        match self {
            Formula::Const(b) => Formula::Const(*b != negate),
            Formula::Atom(c) => {
                let rel = if negate { c.rel.negate() } else { c.rel };
                Formula::atom(c.f.clone(), rel)
            }
            Formula::And(fs) | Formula::Or(fs) => {
                let parts = fs.iter().map(|f| f.nnf(negate)).collect();
                match (self, negate) {
                    (Formula::And(_), false) | (Formula::Or(_), true) => Formula::And(parts),
                    _ => Formula::Or(parts),
                }
            }
            Formula::Not(f) => f.nnf(!negate),
        }
    }

    fn strict_nnf(&self) -> Formula {
        match self {
            Formula::Atom(c) => match c.rel {
                Relation::Ge => Formula::atom(c.f.clone(), Relation::Gt),
                Relation::Le => Formula::atom(c.f.clone(), Relation::Lt),
                Relation::Eq => Formula::Const(false),
                _ => self.clone(),
            },
            Formula::And(fs) => Formula::And(fs.iter().map(Formula::strict_nnf).collect()),
            Formula::Or(fs) => Formula::Or(fs.iter().map(Formula::strict_nnf).collect()),
            _ => self.clone(),
        }
    }

    /// The formula with its `j`-th atom (depth-first order) replaced by `true`.
    pub fn without_atom(&self, j: usize) -> Formula {
        let mut counter = 0;
        self.replace_atom(j, &mut counter)
    }

    fn replace_atom(&self, j: usize, counter: &mut usize) -> Formula {
        match self {
            Formula::Atom(_) => {
                *counter += 1;
                if *counter - 1 == j {
                    Formula::Const(true)
                } else {
                    self.clone()
                }
            }
            Formula::And(fs) => {
                Formula::And(fs.iter().map(|f| f.replace_atom(j, counter)).collect())
            }
            Formula::Or(fs) => Formula::Or(fs.iter().map(|f| f.replace_atom(j, counter)).collect()),
            Formula::Not(f) => Formula::Not(Box::new(f.replace_atom(j, counter))),
            Formula::Const(_) => self.clone(),
        }
    }

    /// Atoms in depth-first, left-to-right order.
    pub fn atoms(&self) -> Vec<&SignCondition> {
        let mut out = Vec::new();
        self.collect_atoms(&mut out);
        out
    }

    fn collect_atoms<'a>(&'a self, out: &mut Vec<&'a SignCondition>) {
        match self {
            Formula::Atom(c) => out.push(c),
            Formula::And(fs) | Formula::Or(fs) => fs.iter().for_each(|f| f.collect_atoms(out)),
            Formula::Not(f) => f.collect_atoms(out),
            Formula::Const(_) => {}
        }
    }

    /// Parse `a and (b or not c)` where each atom is `expr REL expr` with
    /// `REL` one of `>= > = != <= <`.
    pub fn parse(text: &str, dim: usize) -> std::result::Result<Formula, ParseError> {
        let mut p = Parser::new(text, dim);
        let f = parse_or(&mut p)?;
        p.skip_ws();
        if !p.at_end() {
            return Err(p.error("unexpected trailing input"));
        }
        Ok(f)
    }
}

fn parse_or(p: &mut Parser) -> std::result::Result<Formula, ParseError> {
    let mut parts = vec![parse_and(p)?];
    while p.eat_keyword("or") {
        parts.push(parse_and(p)?);
    }
    Ok(if parts.len() == 1 {
        parts.pop().unwrap()
    } else {
        Formula::Or(parts)
    })
}

fn parse_and(p: &mut Parser) -> std::result::Result<Formula, ParseError> {
    let mut parts = vec![parse_not(p)?];
    while p.eat_keyword("and") {
        parts.push(parse_not(p)?);
    }
    Ok(if parts.len() == 1 {
        parts.pop().unwrap()
    } else {
        Formula::And(parts)
    })
}

fn parse_not(p: &mut Parser) -> std::result::Result<Formula, ParseError> {
    if p.eat_keyword("not") {
        return Ok(Formula::Not(Box::new(parse_not(p)?)));
    }
    if p.eat_keyword("true") {
        return Ok(Formula::Const(true));
    }
    if p.eat_keyword("false") {
        return Ok(Formula::Const(false));
    }
    let start = p.pos();
    if p.eat("(") {
        // a parenthesised formula, unless it turns out to be the left side of an atom
        if let Ok(f) = parse_or(p) {
            if p.eat(")") && peek_relation(p).is_none() {
                return Ok(f);
            }
        }
        p.set_pos(start);
    }
    parse_atom(p)
}

fn peek_relation(p: &mut Parser) -> Option<Relation> {
    let at = p.pos();
    let rel = eat_relation(p);
    p.set_pos(at);
    rel
}

fn eat_relation(p: &mut Parser) -> Option<Relation> {
    for (tok, rel) in [
        (">=", Relation::Ge),
        ("<=", Relation::Le),
        ("!=", Relation::Ne),
        (">", Relation::Gt),
        ("<", Relation::Lt),
        ("=", Relation::Eq),
    ] {
        if p.eat(tok) {
            return Some(rel);
        }
    }
    None
}

fn parse_atom(p: &mut Parser) -> std::result::Result<Formula, ParseError> {
    let lhs = p.expr()?;
    let rel =
        eat_relation(p).ok_or_else(|| p.error("expected a relation (>=, >, =, !=, <=, <)"))?;
    let rhs = p.expr()?;
    let f = SymFn::from_expr(lhs, p.arity()) - SymFn::from_expr(rhs, p.arity());
    Ok(Formula::atom(f, rel))
}

/// A formula in `dim` variables together with a sampling window.
#[derive(Clone, Debug)]
pub struct SemialgebraicSet {
    pub formula: Formula,
    pub dim: usize,
    pub bbox: AxisBox,
}

/// Which part of a set a grid samples.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Stratum {
    Interior,
    /// Zero set of the `j`-th atom, intersected with the set.
    Facet(usize),
    /// Union of all facet strata.
    Boundary,
}

impl fmt::Display for Stratum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Stratum::Interior => write!(f, "interior"),
            Stratum::Facet(j) => write!(f, "facet {j}"),
            Stratum::Boundary => write!(f, "boundary"),
        }
    }
}

/// Deterministic point set; regenerating from the same inputs is bit-identical.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleGrid {
    pub seed: u64,
    pub density: usize,
    pub stratum: Stratum,
    pub points: Vec<Vec<Rational>>,
}

impl SampleGrid {
    pub fn from_points(
        points: Vec<Vec<Rational>>,
        seed: u64,
        density: usize,
        stratum: Stratum,
    ) -> Self {
        SampleGrid {
            seed,
            density,
            stratum,
            points,
        }
    }

    /// Vertex (`centred = false`) or cell-centre lattice of `n` points per axis.
    pub fn lattice(bbox: &AxisBox, n: usize, centred: bool) -> Self {
        let points = if centred {
            bbox.lattice_centres(n)
        } else {
            bbox.lattice_vertices(n)
        };
        SampleGrid {
            seed: 0,
            density: n,
            stratum: Stratum::Interior,
            points,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points_f64(&self) -> Vec<Vec<f64>> {
        self.points
            .iter()
            .map(|p| p.iter().map(to_f64).collect())
            .collect()
    }

    /// One point per row, columns `x1..xn`, shortest round-trip decimals.
    pub fn to_csv(&self) -> String {
        let dim = self.points.first().map_or(0, Vec::len);
        let mut out = (1..=dim)
            .map(|i| format!("x{i}"))
            .collect::<Vec<_>>()
            .join(",");
        out.push('\n');
        for p in &self.points {
            let row: Vec<String> = p.iter().map(|v| format!("{}", to_f64(v))).collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

impl SemialgebraicSet {
    pub fn new(formula: Formula, bbox: AxisBox) -> Self {
        SemialgebraicSet {
            dim: bbox.dim(),
            formula,
            bbox,
        }
    }

    pub fn parse(text: &str, bbox: AxisBox) -> Result<Self> {
        Ok(Self::new(Formula::parse(text, bbox.dim())?, bbox))
    }

    /// The corner body `{h_1 >= 0, ..., h_s >= 0}`.
    pub fn corner_body(facets: &[SymFn], bbox: AxisBox) -> Self {
        Self::new(Formula::all_nonneg(facets), bbox)
    }

    pub fn contains(&self, p: &[Rational]) -> Result<bool> {
        assert_eq!(p.len(), self.dim, "point dimension");
        self.formula.eval(p)
    }

    /// Membership in the strict (interior) version of the formula.
    pub fn contains_strictly(&self, p: &[Rational]) -> Result<bool> {
        self.formula.strict().eval(p)
    }

    pub fn facet_functions(&self) -> Vec<SymFn> {
        self.formula
            .atoms()
            .into_iter()
            .map(|c| c.f.clone())
            .collect()
    }

    /// Sample `stratum` with `density^k` target points, `k` the stratum dimension.
    pub fn sample(&self, stratum: Stratum, seed: u64, density: usize) -> Result<SampleGrid> {
        let k = match stratum {
            Stratum::Interior => self.dim,
            _ => self.dim.saturating_sub(1),
        };
        self.sample_n(stratum, seed, density, density.pow(k as u32))
    }

    /// Sample with an explicit number of random points (facet strata also
    /// include the exact zeros of a dyadic vertex lattice of `density` per axis).
    pub fn sample_n(
        &self,
        stratum: Stratum,
        seed: u64,
        density: usize,
        count: usize,
    ) -> Result<SampleGrid> {
        let points = match stratum {
            Stratum::Interior => self.sample_interior(seed, count)?,
            Stratum::Facet(j) => self.sample_facet(j, seed, density, count)?,
            Stratum::Boundary => {
                let n = self.formula.atoms().len();
                let mut all = Vec::new();
                for j in 0..n {
                    let each = count.div_ceil(n.max(1));
                    match self.sample_facet(j, seed.wrapping_add(j as u64), density, each) {
                        Ok(pts) => all.extend(pts),
                        Err(Error::EmptyStratum(_)) => {}
                        Err(e) => return Err(e),
                    }
                }
                if all.is_empty() {
                    return Err(Error::EmptyStratum("no facet has sample points".into()));
                }
                all
            }
        };
        Ok(SampleGrid {
            seed,
            density,
            stratum,
            points,
        })
    }

    fn sample_interior(&self, seed: u64, count: usize) -> Result<Vec<Vec<Rational>>> {
        let strict = self.formula.strict();
        par::map_range(count, |i| {
            let mut rng = stream_rng(seed, i as u64);
            for _ in 0..PROPOSAL_BUDGET {
                let p = self.bbox.random_point(&mut rng);
                if strict.eval(&p).unwrap_or(false) {
                    return Ok(p);
                }
            }
            Err(Error::EmptyStratum(format!(
                "interior: no point after {PROPOSAL_BUDGET} proposals"
            )))
        })
        .into_iter()
        .collect()
    }

    fn sample_facet(
        &self,
        j: usize,
        seed: u64,
        density: usize,
        count: usize,
    ) -> Result<Vec<Vec<Rational>>> {
        let atoms = self.formula.atoms();
        let h = atoms
            .get(j)
            .ok_or_else(|| {
                Error::Hypothesis(format!(
                    "facet index {j} out of range ({} atoms)",
                    atoms.len()
                ))
            })?
            .f
            .clone();
        let mut out: Vec<Vec<Rational>> = Vec::new();
        // dyadic lattice so box midpoints (and the origin of symmetric boxes) are included
        let per_axis = density.max(2).next_power_of_two() + 1;
        let lattice = self.bbox.lattice_vertices(per_axis);
        let zeros = par::map(&lattice, |p| {
            (h.eval(p).is_ok_and(|v| v.is_zero()) && self.contains(p).unwrap_or(false))
                .then(|| p.clone())
        });
        out.extend(zeros.into_iter().flatten());
        let rest = self.formula.without_atom(j);
        let lines = par::map_range(count, |i| {
            self.facet_point_on_line(&h, &rest, seed, i as u64)
        });
        for p in lines {
            out.push(p?);
        }
        if out.is_empty() {
            return Err(Error::EmptyStratum(format!("facet {j}")));
        }
        Ok(out)
    }

    /// Random line through the box, scanned for a change between `h > 0` and
    /// `h <= 0` and bisected; the endpoint on the `h > 0` side is kept if it
    /// satisfies the remaining conditions `rest`.
    fn facet_point_on_line(
        &self,
        h: &SymFn,
        rest: &Formula,
        seed: u64,
        index: u64,
    ) -> Result<Vec<Rational>> {
        let mut rng = stream_rng(seed, index);
        let (lo, hi) = (self.bbox.lo_f64(), self.bbox.hi_f64());
        let d = self.dim;
        let eval = |p: &[f64]| h.eval_f64(p).ok().filter(|v| v.is_finite());
        for _ in 0..PROPOSAL_BUDGET / LINE_SCAN_STEPS {
            let base: Vec<f64> = (0..d).map(|i| rng.gen_range(lo[i]..=hi[i])).collect();
            let mut dir: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm < 1e-3 {
                continue;
            }
            dir.iter_mut().for_each(|v| *v /= norm);
            // parameter interval keeping the line inside the box
            let (mut t0, mut t1) = (f64::NEG_INFINITY, f64::INFINITY);
            for i in 0..d {
                if dir[i].abs() < 1e-15 {
                    continue;
                }
                let (a, b) = ((lo[i] - base[i]) / dir[i], (hi[i] - base[i]) / dir[i]);
                t0 = t0.max(a.min(b));
                t1 = t1.min(a.max(b));
            }
            if t0 >= t1 {
                continue;
            }
            // coordinates within rounding of a box face are snapped onto it
            let at = |t: f64| -> Vec<f64> {
                (0..d)
                    .map(|i| {
                        let v = (base[i] + t * dir[i]).clamp(lo[i], hi[i]);
                        let tol = 1e-13 * (hi[i] - lo[i]);
                        if v - lo[i] < tol {
                            lo[i]
                        } else if hi[i] - v < tol {
                            hi[i]
                        } else {
                            v
                        }
                    })
                    .collect()
            };
            let step = (t1 - t0) / LINE_SCAN_STEPS as f64;
            let start = rng.gen_range(0..LINE_SCAN_STEPS);
            for s in 0..LINE_SCAN_STEPS {
                let k = (start + s) % LINE_SCAN_STEPS;
                let (ta, tb) = (t0 + step * k as f64, t0 + step * (k + 1) as f64);
                let (Some(va), Some(vb)) = (eval(&at(ta)), eval(&at(tb))) else {
                    continue;
                };
                if (va > 0.0) == (vb > 0.0) {
                    continue;
                }
                // invariant: h(at(pos)) > 0 >= h(at(neg))
                let (mut pos, mut neg) = if va > 0.0 { (ta, tb) } else { (tb, ta) };
                // stop once both the bracket and the residual are within tolerance
                while (pos - neg).abs() > BISECTION_TOL
                    || eval(&at(pos)).is_none_or(|v| v > BISECTION_TOL)
                {
                    let mid = 0.5 * (pos + neg);
                    if mid == pos || mid == neg {
                        break;
                    }
                    match eval(&at(mid)) {
                        Some(v) if v > 0.0 => pos = mid,
                        Some(_) => neg = mid,
                        None => break,
                    }
                }
                let p: Vec<Rational> = at(pos).into_iter().map(from_f64).collect();
                if self.bbox.contains(&p) && rest.eval(&p).unwrap_or(false) {
                    return Ok(p);
                }
            }
        }
        Err(Error::EmptyStratum(format!(
            "no facet point after {PROPOSAL_BUDGET} proposals"
        )))
    }
}

fn dist_sq_f64(a: &[Rational], b: &[Rational]) -> f64 {
    a.iter().zip(b).map(|(x, y)| to_f64(&(x - y)).powi(2)).sum()
}

/// Exact squared Euclidean distance.
pub fn dist_sq(a: &[Rational], b: &[Rational]) -> Rational {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .fold(Rational::zero(), |s, v| s + v)
}

/// Minimum distance from `p` to the sample points: an upper bound on the
/// true distance to the sampled set.
pub fn distance_to_set(p: &[Rational], samples: &SampleGrid) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::EmptyStratum(
            "distance to an empty sample set".into(),
        ));
    }
    let d2 = par::map(&samples.points, |q| dist_sq_f64(p, q));
    Ok(d2.into_iter().fold(f64::INFINITY, f64::min).sqrt())
}

#[derive(Clone, Debug, Serialize)]
pub struct BallReport {
    pub center: Vec<f64>,
    pub radius: f64,
    pub checked: usize,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Vec<f64>>,
}

/// Sampled check that the open ball of radius `dist(x, boundary)` around an
/// interior point stays in the interior.
pub fn ball_in_interior_check(
    set: &SemialgebraicSet,
    x: &[Rational],
    boundary: &SampleGrid,
    seed: u64,
    ball_points: usize,
) -> Result<BallReport> {
    if !set.contains_strictly(x)? {
        return Err(Error::Hypothesis(
            "center must satisfy every defining inequality strictly".into(),
        ));
    }
    let r = distance_to_set(x, boundary)?;
    let shrunk = r * (1.0 - 1e-6);
    let centre: Vec<f64> = x.iter().map(to_f64).collect();
    let strict = set.formula.strict();
    let d = x.len();
    let results = par::map_range(ball_points, |i| {
        let mut rng = stream_rng(seed, i as u64);
        loop {
            let v: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let n2: f64 = v.iter().map(|a| a * a).sum();
            if n2 > 1.0 || n2 == 0.0 {
                continue;
            }
            let q: Vec<Rational> = (0..d)
                .map(|k| from_f64(centre[k] + shrunk * v[k]))
                .collect();
            if dist_sq_f64(&q, x).sqrt() >= shrunk {
                continue;
            }
            return (!strict.eval(&q).unwrap_or(false)).then_some(q);
        }
    });
    let witness = results
        .into_iter()
        .flatten()
        .next()
        .map(|q| q.iter().map(to_f64).collect());
    Ok(BallReport {
        center: centre,
        radius: r,
        checked: ball_points,
        pass: witness.is_none(),
        witness,
    })
}
