//! Corner bodies `Q = {h_1 >= 0, ..., h_s >= 0}` in a box, the inward push
//! `sigma(x, t) = x + eps t W(x)`, its damped diffeomorphism family
//! `Psi_t(x) = x + eps t delta(x) W(x)` and the relative blend.
//!
//! `Q` is full-dimensional, so the retraction onto the envelope is the
//! identity and every construction is an explicit map of the box.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use rand::Rng;
use serde::Serialize;
use serde_json::json;

use crate::bounds::{box_equation, small_positive_function, SmallFunction};
use crate::error::{Error, Result};
use crate::par;
use crate::report::{Certificate, Status};
use crate::semialg::{
    ball_in_interior_check, dist_sq, distance_to_set, stream_rng, AxisBox, SampleGrid,
    SemialgebraicSet, Stratum,
};
use crate::symexpr::{abs, from_f64, int, rat, to_f64, Rational, SymFn, SymMap};
use crate::topology::{smu_seminorm, trimmed_close, Control, SeminormReport};

/// Facet gradients below this norm are treated as degenerate.
pub const GRADIENT_FLOOR: f64 = 1e-8;
/// Smallest dyadic push scale tried.
pub const MIN_EPS_EXPONENT: u32 = 40;

pub type VectorField = SymMap;

#[derive(Clone, Debug)]
pub struct CornerManifold {
    pub set: SemialgebraicSet,
    pub facets: Vec<SymFn>,
}

impl CornerManifold {
    pub fn new(facets: Vec<SymFn>, bbox: AxisBox) -> Self {
        let d = bbox.dim();
        let facets: Vec<SymFn> = facets.iter().map(|f| f.with_arity(d)).collect();
        CornerManifold {
            set: SemialgebraicSet::corner_body(&facets, bbox),
            facets,
        }
    }

    pub fn parse(facets: &[&str], bbox: AxisBox) -> Result<Self> {
        let d = bbox.dim();
        let fs = facets
            .iter()
            .map(|s| SymFn::parse(s, d))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::new(fs, bbox))
    }

    pub fn dim(&self) -> usize {
        self.set.dim
    }

    pub fn bbox(&self) -> &AxisBox {
        &self.set.bbox
    }

    /// All `h_j > 0`.
    pub fn in_interior(&self, p: &[Rational]) -> Result<bool> {
        for h in &self.facets {
            if !h.eval(p)?.is_positive() {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Samples of each facet stratum; empty facets are skipped.
    pub fn facet_samples(
        &self,
        seed: u64,
        density: usize,
        per_facet: usize,
    ) -> Result<Vec<SampleGrid>> {
        let mut out = Vec::with_capacity(self.facets.len());
        for j in 0..self.facets.len() {
            match self.set.sample_n(
                Stratum::Facet(j),
                seed.wrapping_add(j as u64),
                density,
                per_facet,
            ) {
                Ok(g) => out.push(g),
                Err(Error::EmptyStratum(_)) => out.push(SampleGrid::from_points(
                    Vec::new(),
                    seed,
                    density,
                    Stratum::Facet(j),
                )),
                Err(e) => return Err(e),
            }
        }
        Ok(out)
    }

    /// Nonvanishing gradient of `h_j` at every sample of facet `j`.
    pub fn check_divisorial(&self, facet_samples: &[SampleGrid]) -> Result<()> {
        for (j, grid) in facet_samples.iter().enumerate() {
            let grad = self.facets[j].gradient();
            for p in &grid.points {
                let n2 = grad
                    .iter()
                    .try_fold(Rational::zero(), |acc, g| g.eval(p).map(|v| acc + &v * &v))?;
                let norm = to_f64(&n2).sqrt();
                if norm < GRADIENT_FLOOR {
                    return Err(Error::Degenerate {
                        facet: j,
                        point: p.iter().map(to_f64).collect(),
                        norm,
                    });
                }
            }
        }
        Ok(())
    }
}

/// `{x >= 0, 1 - x >= 0}` in `[0, 1]`.
pub fn unit_interval() -> CornerManifold {
    CornerManifold::parse(&["x", "1 - x"], AxisBox::cube(1, int(0), int(1)))
        .expect("fixture parses")
}

/// `{x >= 0, y >= 0}` sampled in the window `[0, 2]^2`.
pub fn quadrant() -> CornerManifold {
    CornerManifold::parse(&["x", "y"], AxisBox::cube(2, int(0), int(2))).expect("fixture parses")
}

/// `{y >= 0, 1 - x^2 - y^2 >= 0}`.
pub fn half_disc() -> CornerManifold {
    CornerManifold::parse(
        &["y", "1 - x^2 - y^2"],
        AxisBox::new(vec![int(-1), int(0)], vec![int(1), int(1)]),
    )
    .expect("fixture parses")
}

/// `b(s) = 1 / (1 + (s/r)^(2k))`.
pub fn bump(s: &SymFn, r: &Rational, k: u32) -> SymFn {
    let scaled = s.scale(&r.recip());
    (SymFn::one(s.arity()) + scaled.pow(2 * k)).recip()
}

#[derive(Clone, Debug)]
pub struct FieldReport {
    pub field: VectorField,
    /// Per facet, the smallest `<grad h_j, W>` over its samples.
    pub margins: Vec<Option<f64>>,
    pub min_margin: Option<f64>,
}

/// `W = sum_j b(h_j) grad h_j`, certified inward at every facet sample.
pub fn build_inward_field(
    q: &CornerManifold,
    r: &Rational,
    k: u32,
    facet_samples: &[SampleGrid],
) -> Result<FieldReport> {
    if !r.is_positive() || k == 0 {
        return Err(Error::Hypothesis(
            "bump width must be positive and sharpness at least 1".into(),
        ));
    }
    q.check_divisorial(facet_samples)?;
    let d = q.dim();
    let mut comps = vec![SymFn::zero(d); d];
    for h in &q.facets {
        let b = bump(h, r, k);
        for (c, g) in comps.iter_mut().zip(h.gradient()) {
            *c = &*c + &(&b * &g);
        }
    }
    let field = SymMap::new(comps, d);
    let margins = inward_margins(q, &field, facet_samples)?;
    let min_margin = margins.iter().flatten().copied().reduce(f64::min);
    Ok(FieldReport {
        field,
        margins,
        min_margin,
    })
}

fn inward_margins(
    q: &CornerManifold,
    w: &VectorField,
    facet_samples: &[SampleGrid],
) -> Result<Vec<Option<f64>>> {
    let mut margins = Vec::with_capacity(q.facets.len());
    for (j, grid) in facet_samples.iter().enumerate() {
        let pairing = pairing(&q.facets[j], w);
        let values = par::try_map(&grid.points, |p| pairing.eval(p))?;
        let mut min: Option<Rational> = None;
        for (p, v) in grid.points.iter().zip(values) {
            if !v.is_positive() {
                return Err(Error::Certificate(format!(
                    "field is not inward on facet {j}: pairing {} at {:?}",
                    to_f64(&v),
                    p.iter().map(to_f64).collect::<Vec<_>>()
                )));
            }
            if min.as_ref().is_none_or(|m| &v < m) {
                min = Some(v);
            }
        }
        margins.push(min.as_ref().map(to_f64));
    }
    Ok(margins)
}

/// `<grad h, W>`.
pub fn pairing(h: &SymFn, w: &VectorField) -> SymFn {
    h.gradient()
        .iter()
        .zip(w.components())
        .fold(SymFn::zero(w.arity()), |acc, (g, c)| acc + g * c)
}

/// `x + t v(x)` as a map of `(x, t)`, time last.
fn flow_line(v: &VectorField) -> SymMap {
    let d = v.arity();
    let t = SymFn::var(d, d + 1);
    let comps = (0..d)
        .map(|i| SymFn::var(i, d + 1) + &t * &v.component(i).with_arity(d + 1))
        .collect();
    SymMap::new(comps, d + 1)
}

/// `h_j(x + t W(x))` expanded in `t`: the coefficients `c_0, c_1, ...`.
pub fn taylor_coefficients(h: &SymFn, w: &VectorField) -> Result<Vec<SymFn>> {
    let d = w.arity();
    let line = flow_line(w);
    let composed = h.with_arity(d).compose(line.components());
    composed
        .coefficients_in(d)
        .ok_or_else(|| Error::Hypothesis("time enters a denominator of h_j(x + tW)".into()))
}

/// `G_j(x, t) = (h_j(x + tW) - h_j(x) - t <grad h_j, W>) / t^2`, exact.
pub fn taylor_remainder(h: &SymFn, w: &VectorField) -> Result<SymFn> {
    let d = w.arity();
    let coeffs = taylor_coefficients(h, w)?;
    let t = SymFn::var(d, d + 1);
    let mut g = SymFn::zero(d + 1);
    for c in coeffs.iter().skip(2).rev() {
        g = &(&g * &t) + c;
    }
    Ok(g)
}

/// Grid sup of `|G_j|` over `xgrid x tgrid`.
pub fn taylor_remainder_bound(
    h: &SymFn,
    w: &VectorField,
    xgrid: &[Vec<Rational>],
    tgrid: &[Rational],
) -> Result<f64> {
    let g = taylor_remainder(h, w)?;
    let rows = par::try_map(xgrid, |x| -> Result<Rational> {
        let mut best = Rational::zero();
        let mut p = x.clone();
        p.push(Rational::zero());
        for t in tgrid {
            *p.last_mut().unwrap() = t.clone();
            best = best.max(abs(&g.eval(&p)?));
        }
        Ok(best)
    })?;
    Ok(rows.iter().map(to_f64).fold(0.0, f64::max))
}

#[derive(Clone, Debug, Serialize)]
pub struct FacetDiagnostic {
    pub facet: usize,
    /// `min <grad h_j, W>` on the facet samples.
    pub n1: Option<f64>,
    /// `sup |G_j|` over the samples and `t in [0, eps]`.
    pub n2: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct EpsilonChoice {
    #[serde(serialize_with = "ser_rat")]
    pub eps: Rational,
    pub exponent: u32,
    pub diagnostics: Vec<FacetDiagnostic>,
    pub certificate: Certificate,
    pub validation: Certificate,
}

fn ser_rat<S: serde::Serializer>(q: &Rational, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&q.to_string())
}

/// `(point, facet, t, value)` of the first `h_j(x + s W(x)) <= 0` with
/// `s = eps k / steps`, `k = 1..=steps`.
type PushViolation = (Vec<Rational>, usize, Rational, Rational);

struct PushScan {
    min: Option<Rational>,
    violation: Option<PushViolation>,
}

impl PushScan {
    fn empty() -> Self {
        PushScan {
            min: None,
            violation: None,
        }
    }

    // values may be unreduced ratios with positive denominators
    fn record(&mut self, x: &[Rational], j: usize, s: &Rational, v: Rational) {
        if !v.is_positive() && self.violation.is_none() {
            self.violation = Some((x.to_vec(), j, s.clone(), v.clone()));
        }
        if self.min.as_ref().is_none_or(|m| raw_lt(&v, m)) {
            self.min = Some(v);
        }
    }

    fn merge(rows: Vec<PushScan>) -> PushScan {
        let mut out = PushScan::empty();
        for r in rows {
            if out.violation.is_none() {
                out.violation = r.violation;
            }
            if let Some(m) = r.min {
                if out.min.as_ref().is_none_or(|x| raw_lt(&m, x)) {
                    out.min = Some(m);
                }
            }
        }
        let reduce = |q: Rational| Rational::new(q.numer().clone(), q.denom().clone());
        out.min = out.min.map(reduce);
        if let Some(v) = out.violation.as_mut() {
            v.3 = reduce(v.3.clone());
        }
        out
    }
}

fn raw_lt(a: &Rational, b: &Rational) -> bool {
    a.numer() * b.denom() < b.numer() * a.denom()
}

/// A polynomial facet `P / scale` with integer coefficients.
struct IntPoly {
    terms: Vec<(Vec<u32>, BigInt)>,
    degree: u32,
    scale: BigInt,
}

impl IntPoly {
    fn new(h: &SymFn) -> Option<IntPoly> {
        let p = h.to_poly()?;
        let scale = p
            .terms()
            .fold(BigInt::one(), |acc, (_, c)| acc.lcm(c.denom()));
        let terms: Vec<(Vec<u32>, BigInt)> = p
            .terms()
            .map(|(e, c)| (e.clone(), c.numer() * (&scale / c.denom())))
            .collect();
        Some(IntPoly {
            degree: p.total_degree(),
            terms,
            scale,
        })
    }

    /// `P(n / m) / scale` for `m > 0`, left unreduced.
    fn eval(&self, n: &[BigInt], m: &BigInt) -> Rational {
        let deg = self.degree as usize;
        let pows = |b: &BigInt| {
            let mut v = vec![BigInt::one()];
            for k in 0..deg {
                let next = &v[k] * b;
                v.push(next);
            }
            v
        };
        let np: Vec<Vec<BigInt>> = n.iter().map(pows).collect();
        let mp = pows(m);
        let mut sum = BigInt::zero();
        for (e, a) in &self.terms {
            let mut term = a * &mp[deg - e.iter().sum::<u32>() as usize];
            for (i, &k) in e.iter().enumerate() {
                if k > 0 {
                    term *= &np[i][k as usize];
                }
            }
            sum += term;
        }
        Rational::new_raw(sum, &self.scale * &mp[deg])
    }
}

/// Integer numerators over a common positive denominator.
fn common_denominator(q: &[Rational]) -> (Vec<BigInt>, BigInt) {
    let d = q.iter().fold(BigInt::one(), |acc, r| acc.lcm(r.denom()));
    (q.iter().map(|r| r.numer() * (&d / r.denom())).collect(), d)
}

/// Facet values along lines `x + t v`. Polynomial facets are evaluated on
/// integer numerators so that no huge rational is normalised in the sweep.
struct LineScanner<'a> {
    facets: &'a [SymFn],
    polys: Vec<Option<IntPoly>>,
}

impl<'a> LineScanner<'a> {
    fn new(q: &'a CornerManifold) -> Self {
        LineScanner {
            facets: &q.facets,
            polys: q.facets.iter().map(IntPoly::new).collect(),
        }
    }

    /// `times` pairs each `t` with the label reported in a violation.
    fn scan(
        &self,
        x: &[Rational],
        v: &[Rational],
        times: &[(Rational, Rational)],
    ) -> Result<PushScan> {
        let (xn, e) = common_denominator(x);
        let (vn, d) = common_denominator(v);
        let mut scan = PushScan::empty();
        for (t, label) in times {
            let (a, b) = (t.numer(), t.denom());
            let m = &e * &d * b;
            let n: Vec<BigInt> = xn
                .iter()
                .zip(&vn)
                .map(|(xi, vi)| xi * &d * b + a * vi * &e)
                .collect();
            for (j, h) in self.facets.iter().enumerate() {
                let val = match &self.polys[j] {
                    Some(p) => p.eval(&n, &m),
                    None => h.eval(
                        &n.iter()
                            .map(|ni| Rational::new(ni.clone(), m.clone()))
                            .collect::<Vec<_>>(),
                    )?,
                };
                scan.record(x, j, label, val);
            }
        }
        Ok(scan)
    }
}

fn scan_push(
    q: &CornerManifold,
    w: &VectorField,
    points: &[Vec<Rational>],
    eps: &Rational,
    steps: usize,
) -> Result<PushScan> {
    let scanner = LineScanner::new(q);
    let times: Vec<(Rational, Rational)> = (1..=steps)
        .map(|k| {
            let t = rat(k as i64, steps as i64);
            let s = eps * &t;
            (t, s)
        })
        .collect();
    let rows = par::try_map(points, |x| -> Result<PushScan> {
        let v: Vec<Rational> = w.eval(x)?.iter().map(|wi| eps * wi).collect();
        scanner.scan(x, &v, &times)
    })?;
    Ok(PushScan::merge(rows))
}

fn push_certificate(
    op: &str,
    params: serde_json::Value,
    grid: &SampleGrid,
    scan: &PushScan,
) -> Certificate {
    Certificate {
        op: op.into(),
        params,
        grid_seed: grid.seed,
        grid_size: grid.len(),
        min_margin: scan.min.as_ref().map(to_f64),
        status: Status::from_bool(scan.violation.is_none()),
        witness: scan.violation.as_ref().map(|(x, j, s, v)| {
            json!({"point": x.iter().map(to_f64).collect::<Vec<_>>(), "facet": j, "s": to_f64(s), "value": to_f64(v)})
        }),
        notes: Vec::new(),
    }
}

/// Largest `eps = 2^-e`, `e = 1..=40`, with `h_j(x + s W(x)) > 0` for every
/// facet, every sample `x` and `s = eps k / t_steps`; the winner must also
/// pass on `validation` with four times the time steps.
pub fn choose_push_epsilon(
    q: &CornerManifold,
    w: &VectorField,
    samples: &SampleGrid,
    validation: &SampleGrid,
    t_steps: usize,
    facet_samples: &[SampleGrid],
) -> Result<EpsilonChoice> {
    let mut last = None;
    for e in 1..=MIN_EPS_EXPONENT {
        let eps = Rational::new(
            1.into(),
            num_traits::pow(num_bigint::BigInt::from(2), e as usize),
        );
        let scan = scan_push(q, w, &samples.points, &eps, t_steps)?;
        if scan.violation.is_some() {
            last = Some(scan);
            continue;
        }
        let vscan = scan_push(q, w, &validation.points, &eps, 4 * t_steps)?;
        if vscan.violation.is_some() {
            last = Some(vscan);
            continue;
        }
        let params = json!({"eps": eps.to_string(), "t_steps": t_steps});
        let certificate = push_certificate("choose_push_epsilon", params.clone(), samples, &scan);
        let validation =
            push_certificate("choose_push_epsilon.validation", params, validation, &vscan);
        let margins = inward_margins(q, w, facet_samples)?;
        let tgrid: Vec<Rational> = (0..=t_steps)
            .map(|k| &eps * rat(k as i64, t_steps as i64))
            .collect();
        let mut diagnostics = Vec::with_capacity(q.facets.len());
        for (j, h) in q.facets.iter().enumerate() {
            let n2 = taylor_remainder_bound(h, w, &samples.points, &tgrid)?;
            diagnostics.push(FacetDiagnostic {
                facet: j,
                n1: margins[j],
                n2,
            });
        }
        return Ok(EpsilonChoice {
            eps,
            exponent: e,
            diagnostics,
            certificate,
            validation,
        });
    }
    let (x, j, s, v) = last
        .and_then(|s| s.violation)
        .expect("a failed scan leaves a violation");
    Err(Error::SearchExhausted(format!(
        "no push scale >= 2^-{MIN_EPS_EXPONENT}: h_{j} = {} at x = {:?}, s = {}",
        to_f64(&v),
        x.iter().map(to_f64).collect::<Vec<_>>(),
        to_f64(&s)
    )))
}

/// The push `sigma` and the damped family `Psi`, both maps of `(x, t)`.
#[derive(Clone, Debug)]
pub struct PushFamily {
    pub q: CornerManifold,
    pub w: VectorField,
    pub eps: Rational,
    pub delta: SymFn,
    /// `eps W` and `eps delta W`: the families are `x + t v(x)`.
    pub sigma_velocity: VectorField,
    pub psi_velocity: VectorField,
    pub sigma: SymMap,
    pub psi: SymMap,
}

pub fn push_family(
    q: &CornerManifold,
    w: &VectorField,
    eps: &Rational,
    delta: &SymFn,
) -> PushFamily {
    let d = q.dim();
    let eps_fn = SymFn::constant(eps.clone(), d);
    let delta = delta.with_arity(d);
    let sigma_velocity = w.map_components(|c| &eps_fn * c);
    let psi_velocity = w.map_components(|c| &eps_fn * &delta * c);
    PushFamily {
        q: q.clone(),
        w: w.clone(),
        eps: eps.clone(),
        sigma: flow_line(&sigma_velocity),
        psi: flow_line(&psi_velocity),
        sigma_velocity,
        psi_velocity,
        delta,
    }
}

impl PushFamily {
    /// Slice of a family at a fixed time.
    pub fn at_time(map: &SymMap, t: &Rational) -> SymMap {
        let d = map.arity() - 1;
        let mut args: Vec<SymFn> = (0..d).map(|i| SymFn::var(i, d)).collect();
        args.push(SymFn::constant(t.clone(), d));
        map.map_components(|c| c.compose(&args))
    }
}

/// `delta` from the small-function construction on the box enlarged by a
/// quarter, with control `eps_user / max(1, eps 2^mu C_W)` capped at 1/2,
/// where `C_W` is the grid `S^mu` seminorm of `W`.
pub fn default_delta(
    family_eps: &Rational,
    w: &VectorField,
    bbox: &AxisBox,
    eps_user: &Rational,
    mu: u32,
    grid: &SampleGrid,
) -> Result<SmallFunction> {
    let sn = smu_seminorm(w, mu, &grid.points)?;
    let cw = sn.alphas.iter().map(|r| r.max).fold(0.0, f64::max);
    let cw = from_f64(cw) * rat(1_000_001, 1_000_000);
    let denom = (family_eps * num_traits::pow(int(2), mu as usize) * cw).max(Rational::one());
    let control = (eps_user / denom).min(rat(1, 2));
    let domain = bbox.enlarged(&rat(1, 4));
    small_positive_function(
        &box_equation(&domain),
        &domain,
        &Control::constant(control),
        mu,
        grid,
    )
}

#[derive(Clone, Debug, Serialize)]
pub struct PushCertificate {
    /// `sigma(x, 0) = x` exactly at every sample.
    pub identity_at_zero: bool,
    pub sigma: Certificate,
    pub psi: Certificate,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub closeness: Option<SeminormReport>,
}

impl PushCertificate {
    pub fn passed(&self) -> bool {
        self.identity_at_zero
            && self.sigma.passed()
            && self.psi.passed()
            && self.closeness.as_ref().is_none_or(|c| c.verdict)
    }
}

/// Membership of `sigma_t` and `Psi_t` images in `Int(Q)` for `t = k/t_count`,
/// and, when a control is given, trimmed `S^mu` closeness of `Psi` to the
/// identity on `closeness_grid`.
pub fn certify_push(
    family: &PushFamily,
    samples: &SampleGrid,
    t_count: usize,
    closeness: Option<(&Control, u32, &SampleGrid)>,
) -> Result<PushCertificate> {
    let d = family.q.dim();
    let tgrid: Vec<Rational> = (1..=t_count)
        .map(|k| rat(k as i64, t_count as i64))
        .collect();
    let identity_at_zero = par::try_map(&samples.points, |x| -> Result<bool> {
        let mut p = x.clone();
        p.push(Rational::zero());
        Ok(family.sigma.eval(&p)? == *x)
    })?
    .into_iter()
    .all(|b| b);
    let sigma = image_certificate(
        "push.sigma",
        &family.sigma_velocity,
        &family.q,
        samples,
        &tgrid,
    )?;
    let psi = image_certificate("push.psi", &family.psi_velocity, &family.q, samples, &tgrid)?;
    let closeness = match closeness {
        Some((control, mu, grid)) => {
            let id = SymMap::new((0..d).map(|i| SymFn::var(i, d + 1)).collect(), d + 1);
            Some(trimmed_close(
                &family.psi,
                &id,
                control,
                mu,
                &grid.points,
                &tgrid,
            )?)
        }
        None => None,
    };
    Ok(PushCertificate {
        identity_at_zero,
        sigma,
        psi,
        closeness,
    })
}

// `x + t v(x)` is linear in `t`, so `v(x)` is evaluated once per sample.
fn image_certificate(
    op: &str,
    velocity: &VectorField,
    q: &CornerManifold,
    samples: &SampleGrid,
    tgrid: &[Rational],
) -> Result<Certificate> {
    let scanner = LineScanner::new(q);
    let times: Vec<(Rational, Rational)> = tgrid.iter().map(|t| (t.clone(), t.clone())).collect();
    let rows = par::try_map(&samples.points, |x| {
        scanner.scan(x, &velocity.eval(x)?, &times)
    })?;
    let all = PushScan::merge(rows);
    let mut cert = push_certificate(op, json!({"t_count": tgrid.len()}), samples, &all);
    if let Some(w) = cert.witness.as_mut() {
        if let Some(obj) = w.as_object_mut() {
            if let Some(s) = obj.remove("s") {
                obj.insert("t".into(), s);
            }
        }
    }
    Ok(cert)
}

/// Exact determinant by Gaussian elimination over the rationals.
pub fn det_exact(mut a: Vec<Vec<Rational>>) -> Rational {
    let n = a.len();
    let mut det = Rational::one();
    for c in 0..n {
        let Some(piv) = (c..n).find(|&r| !a[r][c].is_zero()) else {
            return Rational::zero();
        };
        if piv != c {
            a.swap(piv, c);
            det = -det;
        }
        let p = a[c][c].clone();
        det *= &p;
        for r in c + 1..n {
            if a[r][c].is_zero() {
                continue;
            }
            let f = &a[r][c] / &p;
            for k in c..n {
                let v = &f * &a[c][k];
                a[r][k] -= v;
            }
        }
    }
    det
}

#[derive(Clone, Debug, Serialize)]
pub struct EmbeddingReport {
    pub times: usize,
    pub pairs_per_time: usize,
    pub min_abs_det: Option<f64>,
    /// Sign of the Jacobian determinant when it is constant, else 0.
    pub det_sign: i8,
    pub collisions: usize,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<serde_json::Value>,
}

/// Jacobian sign and sampled injectivity of `Psi_t` for each `t` in `tgrid`.
pub fn verify_embedding(
    psi: &SymMap,
    grid: &SampleGrid,
    tgrid: &[Rational],
    pairs: usize,
    seed: u64,
) -> Result<EmbeddingReport> {
    let d = psi.arity() - 1;
    let jac: Vec<Vec<SymFn>> = (0..d)
        .map(|i| (0..d).map(|k| psi.component(i).partial(k)).collect())
        .collect();
    embedding_sweep(grid, tgrid, pairs, seed, |t| {
        par::try_map(&grid.points, |x| -> Result<(Rational, Vec<f64>)> {
            let mut p = x.clone();
            p.push(t.clone());
            let m: Vec<Vec<Rational>> = jac
                .iter()
                .map(|row| row.iter().map(|f| f.eval(&p)).collect::<Result<_>>())
                .collect::<Result<_>>()?;
            let image = psi.eval(&p)?.iter().map(to_f64).collect();
            Ok((det_exact(m), image))
        })
    })
}

/// [`verify_embedding`] for `Psi_t(x) = x + t v(x)`: `v` and `Dv` are
/// evaluated once per grid point and `D Psi_t = I + t Dv`.
pub fn verify_flow_embedding(
    velocity: &VectorField,
    grid: &SampleGrid,
    tgrid: &[Rational],
    pairs: usize,
    seed: u64,
) -> Result<EmbeddingReport> {
    let d = velocity.arity();
    let jac: Vec<Vec<SymFn>> = (0..d)
        .map(|i| (0..d).map(|k| velocity.component(i).partial(k)).collect())
        .collect();
    let pre = par::try_map(
        &grid.points,
        |x| -> Result<(Vec<Rational>, Vec<Vec<Rational>>)> {
            let dv = jac
                .iter()
                .map(|row| row.iter().map(|f| f.eval(x)).collect::<Result<_>>())
                .collect::<Result<_>>()?;
            Ok((velocity.eval(x)?, dv))
        },
    )?;
    embedding_sweep(grid, tgrid, pairs, seed, |t| {
        Ok(par::map_range(grid.len(), |i| {
            let (x, (v, dv)) = (&grid.points[i], &pre[i]);
            let m: Vec<Vec<Rational>> = (0..d)
                .map(|r| {
                    (0..d)
                        .map(|c| {
                            if r == c {
                                Rational::one() + t * &dv[r][c]
                            } else {
                                t * &dv[r][c]
                            }
                        })
                        .collect()
                })
                .collect();
            let image = x.iter().zip(v).map(|(a, b)| to_f64(&(a + t * b))).collect();
            (det_exact(m), image)
        }))
    })
}

fn embedding_sweep(
    grid: &SampleGrid,
    tgrid: &[Rational],
    pairs: usize,
    seed: u64,
    rows_at: impl Fn(&Rational) -> Result<Vec<(Rational, Vec<f64>)>>,
) -> Result<EmbeddingReport> {
    let mut report = EmbeddingReport {
        times: tgrid.len(),
        pairs_per_time: pairs,
        min_abs_det: None,
        det_sign: 0,
        collisions: 0,
        pass: true,
        witness: None,
    };
    let mut sign: Option<bool> = None;
    let mut sign_constant = true;
    for (ti, t) in tgrid.iter().enumerate() {
        let rows = rows_at(t)?;
        for (x, (det, _)) in grid.points.iter().zip(&rows) {
            let a = to_f64(&abs(det));
            report.min_abs_det = Some(report.min_abs_det.map_or(a, |m: f64| m.min(a)));
            let s = det.is_positive();
            if det.is_zero() || sign.is_some_and(|prev| prev != s) {
                sign_constant = false;
            }
            if (det.is_zero() || a < 1e-10 || !sign_constant) && report.witness.is_none() {
                report.witness = Some(
                    json!({"t": to_f64(t), "point": x.iter().map(to_f64).collect::<Vec<_>>(), "det": to_f64(det)}),
                );
            }
            sign.get_or_insert(s);
        }
        let n = grid.len();
        if n < 2 {
            continue;
        }
        let mut rng = stream_rng(seed, ti as u64);
        for _ in 0..pairs {
            let i = rng.gen_range(0..n);
            let k = rng.gen_range(0..n);
            if i == k {
                continue;
            }
            let gap: f64 = rows[i]
                .1
                .iter()
                .zip(&rows[k].1)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            if gap <= 1e-12 {
                let sep = to_f64(&dist_sq(&grid.points[i], &grid.points[k])).sqrt();
                if sep > 1e-8 {
                    report.collisions += 1;
                    if report.witness.is_none() {
                        report.witness = Some(
                            json!({"t": to_f64(t), "x": grid.points[i].iter().map(to_f64).collect::<Vec<_>>(), "y": grid.points[k].iter().map(to_f64).collect::<Vec<_>>()}),
                        );
                    }
                }
            }
        }
    }
    report.det_sign = match (sign_constant, sign) {
        (true, Some(true)) => 1,
        (true, Some(false)) => -1,
        _ => 0,
    };
    report.pass =
        sign_constant && report.min_abs_det.is_none_or(|m| m >= 1e-10) && report.collisions == 0;
    Ok(report)
}

/// `G = F + phi (Psi - Psi*)`.
pub fn relative_blend(f: &SymMap, psi: &SymMap, psi_star: &SymMap, phi: &SymFn) -> SymMap {
    let diff = psi.zip_with(psi_star, |a, b| a - b);
    let scaled = diff.map_components(|c| phi * c);
    f.zip_with(&scaled, |a, b| a + b)
}

#[derive(Clone, Debug, Serialize)]
pub struct BlendReport {
    pub checked: usize,
    /// Every `G(x)` satisfies all defining inequalities strictly.
    pub inside: bool,
    /// `|G(x) - F(x)| < dist(F(x), boundary samples)` and the ball around
    /// `F(x)` of that radius passes the interior check.
    pub ball_pass: bool,
    pub max_shift_ratio: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Vec<f64>>,
}

/// Membership of blended images in the target through the ball lemma.
pub fn check_blend(
    g: &SymMap,
    f: &SymMap,
    target: &SemialgebraicSet,
    boundary: &SampleGrid,
    grid: &SampleGrid,
    seed: u64,
    ball_points: usize,
) -> Result<BlendReport> {
    let rows = par::try_map(&grid.points, |x| -> Result<(bool, bool, f64)> {
        let fx = f.eval(x)?;
        let gx = g.eval(x)?;
        let inside = target.contains_strictly(&gx)?;
        let r = distance_to_set(&fx, boundary)?;
        let shift = to_f64(&dist_sq(&fx, &gx)).sqrt();
        let ball = ball_in_interior_check(target, &fx, boundary, seed, ball_points)?;
        Ok((
            inside,
            ball.pass && shift < r,
            if r > 0.0 { shift / r } else { f64::INFINITY },
        ))
    })?;
    let mut report = BlendReport {
        checked: grid.len(),
        inside: true,
        ball_pass: true,
        max_shift_ratio: 0.0,
        witness: None,
    };
    for (x, (inside, ball, ratio)) in grid.points.iter().zip(rows) {
        report.inside &= inside;
        report.ball_pass &= ball;
        report.max_shift_ratio = report.max_shift_ratio.max(ratio);
        if (!inside || !ball) && report.witness.is_none() {
            report.witness = Some(x.iter().map(to_f64).collect());
        }
    }
    Ok(report)
}

/// Control `dist(F(x), boundary) / (2 max(1, |Psi - Psi*|(x)))` for the blend.
pub fn blend_control(f: &SymMap, diff: &SymMap, boundary: SampleGrid) -> Control {
    let (f, diff) = (f.clone(), diff.clone());
    Control::pointwise("dist(F, boundary) / (2 max(1, |Psi - Psi*|))", move |x| {
        let fx = f.eval(x)?;
        let r = from_f64(distance_to_set(&fx, &boundary)?);
        let n = to_f64(
            &diff
                .eval(x)?
                .iter()
                .fold(Rational::zero(), |a, v| a + v * v),
        )
        .sqrt();
        let n = from_f64(n * (1.0 + 1e-9)).max(Rational::one());
        Ok(r / (int(2) * n))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn field_for(q: &CornerManifold, seed: u64) -> (Vec<SampleGrid>, FieldReport) {
        let fs = q.facet_samples(seed, 16, 64).unwrap();
        let fr = build_inward_field(q, &rat(1, 4), 2, &fs).unwrap();
        (fs, fr)
    }

    #[test]
    fn interval_field_values() {
        let q = unit_interval();
        let (_, fr) = field_for(&q, 1);
        let expected = rat(1, 1) - rat(1, 257);
        assert_eq!(fr.field.component(0).eval(&[int(0)]).unwrap(), expected);
        assert_eq!(
            pairing(&q.facets[1], &fr.field).eval(&[int(1)]).unwrap(),
            expected
        );
    }

    #[test]
    fn half_disc_corner_pairing() {
        let q = half_disc();
        let (_, fr) = field_for(&q, 2);
        let corner = [int(1), int(0)];
        assert_eq!(
            pairing(&q.facets[1], &fr.field).eval(&corner).unwrap(),
            int(4)
        );
        assert!(fr.min_margin.unwrap() > 0.0);
        let quad = quadrant();
        let (_, fq) = field_for(&quad, 3);
        let w0 = fq.field.eval(&[int(0), int(0)]).unwrap();
        assert!(w0.iter().all(|v| v.is_positive()));
    }

    #[test]
    fn teardrop_is_degenerate() {
        let q = CornerManifold::parse(
            &["x", "x^2 - x^4 - y^2"],
            AxisBox::new(vec![int(0), rat(-1, 2)], vec![int(1), rat(1, 2)]),
        )
        .unwrap();
        let fs = q.facet_samples(5, 16, 64).unwrap();
        let err = build_inward_field(&q, &rat(1, 4), 2, &fs).unwrap_err();
        assert!(matches!(err, Error::Degenerate { facet: 1, .. }), "{err}");
        assert!(err.to_string().contains("non-divisorial or degenerate"));
    }

    #[test]
    fn taylor_remainder_examples() {
        let w = SymMap::new(vec![SymFn::one(1)], 1);
        let g = taylor_remainder(&SymFn::parse("1 - x^2", 1).unwrap(), &w).unwrap();
        assert!(g.equivalent(&SymFn::from_int(-1, 2), 0));
        let affine = taylor_remainder(&SymFn::parse("3*x - 1", 1).unwrap(), &w).unwrap();
        assert!(affine.equivalent(&SymFn::zero(2), 0));
        let q = half_disc();
        let (_, fr) = field_for(&q, 4);
        let coeffs = taylor_coefficients(&q.facets[1], &fr.field).unwrap();
        assert!(coeffs[1].equivalent(&pairing(&q.facets[1], &fr.field).with_arity(3), 9));
        let xs = q.bbox().lattice_vertices(5);
        let ts: Vec<Rational> = (0..=4).map(|k| rat(k, 4)).collect();
        assert!(taylor_remainder_bound(&q.facets[1], &fr.field, &xs, &ts)
            .unwrap()
            .is_finite());
    }

    #[test]
    fn epsilon_search_and_push() {
        for q in [unit_interval(), quadrant(), half_disc()] {
            let (fs, fr) = field_for(&q, 7);
            let bnd = q.set.sample_n(Stratum::Boundary, 8, 16, 60).unwrap();
            let val = q.set.sample_n(Stratum::Boundary, 9, 32, 240).unwrap();
            let ch = choose_push_epsilon(&q, &fr.field, &bnd, &val, 8, &fs).unwrap();
            assert!(ch.exponent <= 20 && ch.certificate.passed() && ch.validation.passed());
            let fam = push_family(&q, &fr.field, &ch.eps, &SymFn::constant(rat(1, 2), q.dim()));
            let cert = certify_push(&fam, &bnd, 8, None).unwrap();
            assert!(cert.passed(), "{cert:?}");
        }
    }

    #[test]
    fn outward_field_fails() {
        let q = unit_interval();
        let fs = q.facet_samples(1, 8, 8).unwrap();
        let (_, fr) = field_for(&q, 1);
        let out = fr.field.map_components(|c| -c);
        let bnd = q.set.sample_n(Stratum::Boundary, 1, 8, 8).unwrap();
        assert!(matches!(
            choose_push_epsilon(&q, &out, &bnd, &bnd, 4, &fs),
            Err(Error::SearchExhausted(_))
        ));
    }

    #[test]
    fn quadrant_origin_push() {
        let q = quadrant();
        let (_, fr) = field_for(&q, 3);
        let eps = rat(1, 4);
        let fam = push_family(&q, &fr.field, &eps, &SymFn::constant(rat(1, 2), 2));
        let img = fam.psi.eval(&[int(0), int(0), int(1)]).unwrap();
        let w = fr.field.eval(&[int(0), int(0)]).unwrap();
        assert_eq!(img, w.iter().map(|v| v * &eps / int(2)).collect::<Vec<_>>());
        assert!(q.in_interior(&img).unwrap());
    }

    #[test]
    fn embedding_checks() {
        let q = unit_interval();
        let (_, fr) = field_for(&q, 1);
        let grid = SampleGrid::lattice(q.bbox(), 200, false);
        let ts: Vec<Rational> = (1..=4).map(|k| rat(k, 4)).collect();
        let id = push_family(&q, &fr.field, &rat(1, 4), &SymFn::zero(1));
        let r = verify_embedding(&id.psi, &grid, &ts, 500, 1).unwrap();
        assert!(r.pass && r.det_sign == 1 && r.min_abs_det == Some(1.0));
        let small = push_family(&q, &fr.field, &rat(1, 64), &SymFn::constant(rat(1, 2), 1));
        assert!(
            verify_embedding(&small.psi, &grid, &ts, 500, 1)
                .unwrap()
                .pass
        );
        let fold = push_family(&q, &fr.field, &int(10), &SymFn::constant(rat(1, 2), 1));
        let r = verify_embedding(&fold.psi, &grid, &ts, 500, 1).unwrap();
        assert!(!r.pass && r.witness.is_some());
        let fast = verify_flow_embedding(&fold.psi_velocity, &grid, &ts, 500, 1).unwrap();
        assert_eq!(
            serde_json::to_string(&fast).unwrap(),
            serde_json::to_string(&r).unwrap()
        );
        let q2 = half_disc();
        let (_, f2) = field_for(&q2, 2);
        let fam = push_family(
            &q2,
            &f2.field,
            &rat(1, 8),
            &SymFn::parse("1/2 + x*y/4", 2).unwrap(),
        );
        let g2 = SampleGrid::lattice(q2.bbox(), 6, true);
        let slow = verify_embedding(&fam.psi, &g2, &ts, 50, 3).unwrap();
        let fast = verify_flow_embedding(&fam.psi_velocity, &g2, &ts, 50, 3).unwrap();
        assert_eq!(
            serde_json::to_string(&fast).unwrap(),
            serde_json::to_string(&slow).unwrap()
        );
    }

    #[test]
    fn det_examples() {
        assert_eq!(
            det_exact(vec![vec![int(0), int(1)], vec![int(1), int(0)]]),
            int(-1)
        );
        assert_eq!(
            det_exact(vec![vec![int(2), int(4)], vec![int(1), int(2)]]),
            int(0)
        );
        assert_eq!(
            det_exact(vec![
                vec![int(2), int(1), int(0)],
                vec![int(1), int(3), int(1)],
                vec![int(0), int(1), int(4)]
            ]),
            int(18)
        );
    }

    #[test]
    fn blend_examples() {
        let f = SymMap::parse(&["0"], 1).unwrap();
        let one = SymMap::parse(&["1"], 1).unwrap();
        let zero = SymMap::parse(&["0"], 1).unwrap();
        let g = relative_blend(&f, &one, &zero, &SymFn::parse("x^2", 1).unwrap());
        assert!(g
            .component(0)
            .equivalent(&SymFn::parse("x^2", 1).unwrap(), 0));
        let g0 = relative_blend(&one, &one, &zero, &SymFn::zero(1));
        assert!(g0.component(0).equivalent(&SymFn::one(1), 0));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn blend_interpolates_on_zero_set(y in -50i64..50, den in 1i64..40, a in -5i64..5) {
            // phi = x^2 + (y - y0)^2 vanishes only at (0, y0)
            let y0 = rat(y, den);
            let phi = SymFn::parse("x^2", 2).unwrap() + (SymFn::var(1, 2) - SymFn::constant(y0.clone(), 2)).square();
            let f = SymMap::parse(&["x + y", "x*y"], 2).unwrap();
            let psi = SymMap::parse(&["x^3", "y"], 2).unwrap();
            let star = SymMap::new(vec![SymFn::from_int(a, 2), SymFn::parse("y^2", 2).unwrap()], 2);
            let g = relative_blend(&f, &psi, &star, &phi);
            let p = [int(0), y0];
            prop_assert_eq!(g.eval(&p).unwrap(), f.eval(&p).unwrap());
        }

        #[test]
        fn small_perturbations_embed(c in 1i64..40) {
            // |d/dx (eps delta W)| stays well below 1 for eps = 1/64 and constant delta
            let q = unit_interval();
            let fs = q.facet_samples(1, 8, 8).unwrap();
            let fr = build_inward_field(&q, &rat(1, 4), 2, &fs).unwrap();
            let fam = push_family(&q, &fr.field, &rat(1, 64), &SymFn::constant(rat(c, 41), 1));
            let grid = SampleGrid::lattice(q.bbox(), 64, false);
            let r = verify_embedding(&fam.psi, &grid, &[rat(1, 2), int(1)], 100, c as u64).unwrap();
            prop_assert!(r.pass);
        }
    }
}
