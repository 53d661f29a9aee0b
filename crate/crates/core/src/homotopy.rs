//! Time reparameterizations, gluing of homotopies, straight-line homotopies
//! with a retraction onto a convex target, and endpoint locking.
//!
//! Homotopies are maps of `(x, t)` with time as the last variable.

use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::corners::CornerManifold;
use crate::error::{Error, Result};
use crate::par;
use crate::semialg::AxisBox;
use crate::symexpr::{abs, from_f64, int, rat, to_f64, MultiIndex, Rational, SymFn, SymMap};
use crate::topology::Control;

/// One closed piece `[lo, hi]` of a piecewise map of one variable.
#[derive(Clone, Debug)]
pub struct Branch {
    pub lo: Rational,
    pub hi: Rational,
    pub f: SymFn,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Reparameterization {
    Clamp {
        #[serde(serialize_with = "ser_rat")]
        delta0: Rational,
    },
    Power {
        m: u32,
    },
    Local {
        #[serde(serialize_with = "ser_rat")]
        t0: Rational,
        p: u32,
        q: u32,
        mu: u32,
    },
}

fn ser_rat<S: serde::Serializer>(q: &Rational, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&q.to_string())
}

pub fn eta_clamp(delta0: &Rational) -> Result<Reparameterization> {
    if !delta0.is_positive() || delta0 >= &rat(1, 4) {
        return Err(Error::Hypothesis(format!(
            "clamp width must lie in (0, 1/4), got {delta0}"
        )));
    }
    Ok(Reparameterization::Clamp {
        delta0: delta0.clone(),
    })
}

pub fn eta_power(m: u32) -> Result<Reparameterization> {
    if m % 2 == 0 {
        return Err(Error::Hypothesis(format!(
            "power reparameterization needs odd m, got {m}"
        )));
    }
    Ok(Reparameterization::Power { m })
}

pub fn theta_local(t0: &Rational, p: u32, q: u32, mu: u32) -> Result<Reparameterization> {
    if p == 0 || q == 0 {
        return Err(Error::Hypothesis(
            "local orders p, q must be at least 1".into(),
        ));
    }
    Ok(Reparameterization::Local {
        t0: t0.clone(),
        p,
        q,
        mu,
    })
}

impl Reparameterization {
    /// Closed pieces covering the domain (`[0, 1]`, or all of the line for
    /// the local kind, represented by `[t0 - 1, t0 + 1]`).
    pub fn branches(&self) -> Vec<Branch> {
        let t = SymFn::var(0, 1);
        match self {
            Reparameterization::Clamp { delta0 } => {
                let mid = (&t - &SymFn::constant(delta0.clone(), 1))
                    .scale(&(Rational::one() - delta0 * int(2)).recip());
                vec![
                    Branch {
                        lo: int(0),
                        hi: delta0.clone(),
                        f: SymFn::zero(1),
                    },
                    Branch {
                        lo: delta0.clone(),
                        hi: Rational::one() - delta0,
                        f: mid,
                    },
                    Branch {
                        lo: Rational::one() - delta0,
                        hi: int(1),
                        f: SymFn::one(1),
                    },
                ]
            }
            Reparameterization::Power { m } => {
                let f = (t.scale(&int(2)) - SymFn::one(1)).pow(*m).scale(&rat(1, 2))
                    + SymFn::constant(rat(1, 2), 1);
                vec![Branch {
                    lo: int(0),
                    hi: int(1),
                    f,
                }]
            }
            Reparameterization::Local { t0, p, q, mu } => {
                let c = SymFn::constant(t0.clone(), 1);
                let left = &c - &(&c - &t).pow(q * (mu + 1));
                let right = &c + &(&t - &c).pow(p * (mu + 1));
                vec![
                    Branch {
                        lo: t0 - int(1),
                        hi: t0.clone(),
                        f: left,
                    },
                    Branch {
                        lo: t0.clone(),
                        hi: t0 + int(1),
                        f: right,
                    },
                ]
            }
        }
    }

    /// Exact value; the first branch containing `t` wins at seams.
    pub fn eval(&self, t: &Rational) -> Result<Rational> {
        let branches = self.branches();
        let b = branches
            .iter()
            .find(|b| &b.lo <= t && t <= &b.hi)
            .ok_or_else(|| {
                Error::Hypothesis(format!("t = {t} outside the reparameterization domain"))
            })?;
        b.f.eval(std::slice::from_ref(t))
    }
}

/// `eta^(l)(1/2)` for `l = 1..=m`.
pub fn power_derivatives_at_half(m: u32) -> Result<Vec<Rational>> {
    let f = eta_power(m)?.branches().remove(0).f;
    (1..=m)
        .map(|l| f.derivative(&MultiIndex::new(vec![l])).eval(&[rat(1, 2)]))
        .collect()
}

/// One-sided derivatives at the seam `t0` through `order`: `(left, right)`.
pub fn seam_derivatives(
    left: &SymFn,
    right: &SymFn,
    t0: &Rational,
    order: u32,
) -> Result<(Vec<Rational>, Vec<Rational>)> {
    let at = |f: &SymFn| -> Result<Vec<Rational>> {
        (0..=order)
            .map(|l| {
                f.derivative(&MultiIndex::new(vec![l]))
                    .eval(std::slice::from_ref(t0))
            })
            .collect()
    };
    Ok((at(left)?, at(right)?))
}

#[derive(Clone, Debug, Serialize)]
pub struct DeviationReport {
    pub delta0: f64,
    pub points: usize,
    pub max_deviation: f64,
    pub argmax: f64,
    /// `|t - eta(t)| <= delta0` everywhere, strictly off the clamp corners.
    pub pass: bool,
}

/// `max |t - eta_clamp(t)|` over `n` equally spaced points of `[0, 1]`.
pub fn clamp_deviation(delta0: &Rational, n: usize) -> Result<DeviationReport> {
    let eta = eta_clamp(delta0)?;
    let corners = [delta0.clone(), Rational::one() - delta0];
    let rows = par::try_map_range(n, |k| -> Result<(Rational, Rational, bool)> {
        let t = rat(k as i64, (n.max(2) - 1) as i64);
        let dev = abs(&(&t - &eta.eval(&t)?));
        let ok = if corners.contains(&t) {
            &dev <= delta0
        } else {
            &dev < delta0
        };
        Ok((dev, t, ok))
    })?;
    let mut max = Rational::zero();
    let mut arg = Rational::zero();
    let mut pass = true;
    for (dev, t, ok) in rows {
        pass &= ok;
        if dev > max {
            max = dev;
            arg = t;
        }
    }
    Ok(DeviationReport {
        delta0: to_f64(delta0),
        points: n,
        max_deviation: to_f64(&max),
        argmax: to_f64(&arg),
        pass,
    })
}

/// Substitute `eta(t)` for the time variable of a homotopy.
fn reparam_time(map: &SymMap, eta: &SymFn) -> SymMap {
    let arity = map.arity();
    let d = arity - 1;
    let mut args: Vec<SymFn> = (0..d).map(|i| SymFn::var(i, arity)).collect();
    args.push(eta.compose(&[SymFn::var(d, arity)]));
    map.map_components(|c| c.compose(&args))
}

#[derive(Clone, Debug, Serialize)]
pub struct GlueReport {
    pub m: u32,
    pub mu: u32,
    /// `max |Psi1(x, 1/2) - Psi2(x, 1/2)|`.
    pub midpoint_gap: f64,
    /// Per order `0..=mu`, the largest one-sided `|d^l/dt^l Psi*|` gap at `t = 1/2`.
    pub seam_gaps: Vec<f64>,
    pub seam_match: bool,
    pub endpoints: bool,
    pub pass: bool,
}

/// `Psi*` on `[0, 1/2]` and `[1/2, 1]`.
#[derive(Clone, Debug)]
pub struct GluedHomotopy {
    pub left: SymMap,
    pub right: SymMap,
    pub report: GlueReport,
}

impl GluedHomotopy {
    pub fn eval(&self, x: &[Rational], t: &Rational) -> Result<Vec<Rational>> {
        let mut p = x.to_vec();
        p.push(t.clone());
        if t <= &rat(1, 2) {
            self.left.eval(&p)
        } else {
            self.right.eval(&p)
        }
    }
}

/// `Psi*(x, t) = Psi(x, eta_m(t))` for `Psi` glued from `Psi1` on `t <= 1/2`
/// and `Psi2` on `t >= 1/2`.
pub fn glue_homotopy(
    psi1: &SymMap,
    psi2: &SymMap,
    m: u32,
    mu: u32,
    xgrid: &[Vec<Rational>],
) -> Result<GluedHomotopy> {
    if m <= mu {
        return Err(Error::Hypothesis(format!(
            "need m > mu, got m = {m}, mu = {mu}"
        )));
    }
    let eta = eta_power(m)?.branches().remove(0).f;
    let half = rat(1, 2);
    let at = |x: &[Rational], t: &Rational| {
        let mut p = x.to_vec();
        p.push(t.clone());
        p
    };
    let mut gap = Rational::zero();
    for x in xgrid {
        let p = at(x, &half);
        for (a, b) in psi1.eval(&p)?.iter().zip(psi2.eval(&p)?) {
            gap = gap.max(abs(&(a - b)));
        }
    }
    let midpoint_gap = to_f64(&gap);
    if midpoint_gap > 1e-12 {
        return Err(Error::Hypothesis(format!(
            "pieces disagree at t = 1/2 by {midpoint_gap:e}"
        )));
    }
    let left = reparam_time(psi1, &eta);
    let right = reparam_time(psi2, &eta);
    let d = left.arity() - 1;
    let mut seam_gaps = Vec::with_capacity(mu as usize + 1);
    for l in 0..=mu {
        let mut e = vec![0; d];
        e.push(l);
        let alpha = MultiIndex::new(e);
        let (dl, dr) = (left.derivative(&alpha), right.derivative(&alpha));
        let mut g = Rational::zero();
        for x in xgrid {
            let p = at(x, &half);
            for (a, b) in dl.eval(&p)?.iter().zip(dr.eval(&p)?) {
                g = g.max(abs(&(a - b)));
            }
        }
        seam_gaps.push(to_f64(&g));
    }
    let seam_match = seam_gaps.iter().skip(1).all(|g| *g == 0.0);
    let mut endpoints = true;
    for x in xgrid {
        endpoints &= left.eval(&at(x, &int(0)))? == psi1.eval(&at(x, &int(0)))?;
        endpoints &= right.eval(&at(x, &int(1)))? == psi2.eval(&at(x, &int(1)))?;
    }
    let report = GlueReport {
        m,
        mu,
        midpoint_gap,
        seam_gaps,
        seam_match,
        endpoints,
        pass: seam_match && endpoints,
    };
    Ok(GluedHomotopy {
        left,
        right,
        report,
    })
}

/// `Phi(x, t) = (1 - t) f(x) + t g(x)`.
pub fn straight_line_homotopy(f: &SymMap, g: &SymMap) -> SymMap {
    let d = f.arity().max(g.arity());
    let t = SymFn::var(d, d + 1);
    let one_minus = SymFn::one(d + 1) - t.clone();
    let lift = |c: &SymFn| c.with_arity(d + 1);
    SymMap::new(
        f.components()
            .iter()
            .zip(g.components())
            .map(|(a, b)| &(&one_minus * &lift(a)) + &(&t * &lift(b)))
            .collect(),
        d + 1,
    )
}

#[derive(Clone, Debug, Serialize)]
pub struct StraightLineReport {
    /// `|f - Phi_t|^2 = t^2 |f - g|^2` as an identity of expressions.
    pub identity: bool,
    pub samples: usize,
    /// The identity and the endpoint values hold exactly at every sample.
    pub samples_pass: bool,
}

pub fn check_straight_line(
    f: &SymMap,
    g: &SymMap,
    samples: &[Vec<Rational>],
) -> Result<StraightLineReport> {
    let phi = straight_line_homotopy(f, g);
    let d = phi.arity() - 1;
    let lift = |m: &SymMap| m.map_components(|c| c.with_arity(d + 1));
    let (fl, gl) = (lift(f), lift(g));
    let t = SymFn::var(d, d + 1);
    let lhs = fl.zip_with(&phi, |a, b| a - b).norm_squared();
    let rhs = &t.square() * &fl.zip_with(&gl, |a, b| a - b).norm_squared();
    let identity = lhs.equivalent(&rhs, 17);
    let mut samples_pass = true;
    for p in samples {
        samples_pass &= lhs.eval(p)? == rhs.eval(p)?;
        let x = &p[..d];
        let mut p0 = x.to_vec();
        p0.push(int(0));
        let mut p1 = x.to_vec();
        p1.push(int(1));
        samples_pass &= phi.eval(&p0)? == f.eval(x)? && phi.eval(&p1)? == g.eval(x)?;
    }
    Ok(StraightLineReport {
        identity,
        samples: samples.len(),
        samples_pass,
    })
}

/// Nearest-point retraction onto a convex target.
#[derive(Clone, Debug)]
pub enum Retraction {
    Box(AxisBox),
    Ball {
        center: Vec<Rational>,
        radius: Rational,
    },
    /// `{h_j >= 0}` with concave `h_j`; `anchor` is a point of the interior.
    Convex {
        body: CornerManifold,
        anchor: Vec<Rational>,
    },
}

/// Iteration cap of the general convex projection.
pub const PROJECTION_ITERATIONS: usize = 20_000;

impl Retraction {
    pub fn contains(&self, y: &[Rational]) -> Result<bool> {
        match self {
            Retraction::Box(b) => Ok(b.contains(y)),
            Retraction::Ball { center, radius } => {
                Ok(crate::semialg::dist_sq(y, center) <= radius * radius)
            }
            Retraction::Convex { body, .. } => body.set.contains(y),
        }
    }

    /// Points already in the target are returned unchanged.
    pub fn apply(&self, y: &[Rational]) -> Result<Vec<Rational>> {
        if self.contains(y)? {
            return Ok(y.to_vec());
        }
        match self {
            Retraction::Box(b) => Ok(y
                .iter()
                .enumerate()
                .map(|(i, v)| v.clone().max(b.lo[i].clone()).min(b.hi[i].clone()))
                .collect()),
            Retraction::Ball { center, radius } => {
                let n = to_f64(&crate::semialg::dist_sq(y, center)).sqrt();
                let mut s = from_f64(to_f64(radius) / n);
                // round the scale down until the exact image lies in the ball
                loop {
                    let z: Vec<Rational> = y
                        .iter()
                        .zip(center)
                        .map(|(v, c)| c + &s * (v - c))
                        .collect();
                    if self.contains(&z)? {
                        return Ok(z);
                    }
                    s *= rat((1 << 50) - 1, 1 << 50);
                }
            }
            Retraction::Convex { body, anchor } => project_convex(body, anchor, y),
        }
    }
}

/// Dykstra's alternating projections onto the sets `{h_j >= 0}`, each
/// approximated by gradient steps onto its level set; the result is pulled
/// toward `anchor` until exact membership holds.
fn project_convex(
    body: &CornerManifold,
    anchor: &[Rational],
    y: &[Rational],
) -> Result<Vec<Rational>> {
    let d = y.len();
    let fs: Vec<(SymFn, Vec<SymFn>)> = body
        .facets
        .iter()
        .map(|h| (h.clone(), h.gradient()))
        .collect();
    let eval = |f: &SymFn, z: &[f64]| f.eval_f64(z);
    let mut z: Vec<f64> = y.iter().map(to_f64).collect();
    let mut incr = vec![vec![0.0; d]; fs.len()];
    let mut converged = false;
    for _ in 0..PROJECTION_ITERATIONS {
        let prev = z.clone();
        for (j, (h, grad)) in fs.iter().enumerate() {
            let w: Vec<f64> = z.iter().zip(&incr[j]).map(|(a, b)| a + b).collect();
            let mut p = w.clone();
            for _ in 0..50 {
                let v = eval(h, &p)?;
                if v >= 0.0 {
                    break;
                }
                let g: Vec<f64> = grad.iter().map(|gi| eval(gi, &p)).collect::<Result<_>>()?;
                let n2: f64 = g.iter().map(|a| a * a).sum();
                if n2 == 0.0 {
                    return Err(Error::NonConvergent(
                        "vanishing gradient during projection".into(),
                    ));
                }
                for k in 0..d {
                    p[k] -= v * g[k] / n2;
                }
            }
            for k in 0..d {
                incr[j][k] = w[k] - p[k];
            }
            z = p;
        }
        let step = z
            .iter()
            .zip(&prev)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        let feasible = fs
            .iter()
            .all(|(h, _)| eval(h, &z).is_ok_and(|v| v >= -1e-12));
        if step < 1e-12 && feasible {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NonConvergent(format!(
            "projection did not settle within {PROJECTION_ITERATIONS} rounds"
        )));
    }
    let zq: Vec<Rational> = z.iter().map(|v| from_f64(*v)).collect();
    let mut tau = Rational::zero();
    let mut step = rat(1, 1 << 40);
    for _ in 0..64 {
        let cand: Vec<Rational> = zq
            .iter()
            .zip(anchor)
            .map(|(a, c)| a + &tau * (c - a))
            .collect();
        if body.set.contains(&cand)? {
            return Ok(cand);
        }
        tau = step.clone();
        step *= int(2);
        if tau > Rational::one() {
            break;
        }
    }
    Err(Error::NonConvergent(
        "projected point could not be pulled into the target".into(),
    ))
}

#[derive(Clone, Debug, Serialize)]
pub struct RetractReport {
    pub checked: usize,
    pub all_inside: bool,
    /// `rho(Phi) = Phi` wherever `Phi` is already in the target.
    pub fixed_points: bool,
    pub moved: usize,
    pub max_moved: f64,
}

/// `rho o Phi` on `xgrid x tgrid`.
pub fn retract_and_check(
    phi: &SymMap,
    rho: &Retraction,
    xgrid: &[Vec<Rational>],
    tgrid: &[Rational],
) -> Result<RetractReport> {
    let pts: Vec<Vec<Rational>> = xgrid
        .iter()
        .flat_map(|x| {
            tgrid.iter().map(move |t| {
                let mut p = x.clone();
                p.push(t.clone());
                p
            })
        })
        .collect();
    let rows = par::try_map(&pts, |p| -> Result<(bool, bool, Option<f64>)> {
        let y = phi.eval(p)?;
        let was_inside = rho.contains(&y)?;
        let z = rho.apply(&y)?;
        let inside = rho.contains(&z)?;
        let fixed = !was_inside || z == y;
        let moved = (!was_inside).then(|| to_f64(&crate::semialg::dist_sq(&y, &z)).sqrt());
        Ok((inside, fixed, moved))
    })?;
    let mut r = RetractReport {
        checked: pts.len(),
        all_inside: true,
        fixed_points: true,
        moved: 0,
        max_moved: 0.0,
    };
    for (inside, fixed, moved) in rows {
        r.all_inside &= inside;
        r.fixed_points &= fixed;
        if let Some(m) = moved {
            r.moved += 1;
            r.max_moved = r.max_moved.max(m);
        }
    }
    Ok(r)
}

/// `Phi*(x, t) = Phi(x, eta_{delta(x)}(t))`.
#[derive(Clone, Debug)]
pub struct SmoothedHomotopy {
    pub phi: SymMap,
    pub delta: SymFn,
    /// `Phi(x, 0)`, `Phi(x, (t - delta)/(1 - 2 delta))`, `Phi(x, 1)`.
    pub pieces: [SymMap; 3],
}

pub fn smooth_endpoints(phi: &SymMap, delta: &SymFn) -> SmoothedHomotopy {
    let arity = phi.arity();
    let d = arity - 1;
    let delta = delta.with_arity(d);
    let xs: Vec<SymFn> = (0..d).map(|i| SymFn::var(i, arity)).collect();
    let with_time = |t: SymFn| {
        let mut args = xs.clone();
        args.push(t);
        phi.map_components(|c| c.compose(&args))
    };
    let dl = delta.with_arity(arity);
    let t = SymFn::var(d, arity);
    let mid = (&t - &dl)
        .checked_div(&(SymFn::one(arity) - dl.scale(&int(2))))
        .expect("1 - 2 delta is not identically zero");
    let pieces = [
        with_time(SymFn::zero(arity)),
        with_time(mid),
        with_time(SymFn::one(arity)),
    ];
    SmoothedHomotopy {
        phi: phi.clone(),
        delta,
        pieces,
    }
}

impl SmoothedHomotopy {
    fn piece(&self, x: &[Rational], t: &Rational) -> Result<usize> {
        let dv = self.delta.eval(x)?;
        Ok(if t <= &dv {
            0
        } else if t >= &(Rational::one() - dv) {
            2
        } else {
            1
        })
    }

    pub fn eval(&self, x: &[Rational], t: &Rational) -> Result<Vec<Rational>> {
        let k = self.piece(x, t)?;
        let mut p = x.to_vec();
        p.push(t.clone());
        self.pieces[k].eval(&p)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct EndpointReport {
    /// `0 < delta < 1/4` at every sampled `x`.
    pub delta_valid: bool,
    /// Clamped zones reproduce `Phi(x, 0)` and `Phi(x, 1)` exactly.
    pub locked: bool,
    /// `Phi* = Phi` at `t = 0` and `t = 1`.
    pub ends_unchanged: bool,
    /// Per `x`-multi-index, `max |D^alpha (Phi - Phi*)|` over the grid.
    pub trimmed: Vec<(MultiIndex, f64)>,
    pub max_deviation: f64,
    /// Every trimmed difference below the control, when one is supplied.
    pub close: Option<bool>,
}

/// Locking and trimmed closeness of the smoothed homotopy against `Phi`.
pub fn check_smooth_endpoints(
    s: &SmoothedHomotopy,
    eps: Option<&Control>,
    mu: u32,
    xgrid: &[Vec<Rational>],
    tgrid: &[Rational],
) -> Result<EndpointReport> {
    let d = s.phi.arity() - 1;
    let alphas: Vec<MultiIndex> = MultiIndex::up_to_order(d, mu)
        .into_iter()
        .map(|a| {
            let mut e = a.entries().to_vec();
            e.push(0);
            MultiIndex::new(e)
        })
        .collect();
    let diffs: Vec<[SymMap; 3]> = alphas
        .iter()
        .map(|a| {
            let base = s.phi.derivative(a);
            [0, 1, 2].map(|k| base.zip_with(&s.pieces[k].derivative(a), |u, v| u - v))
        })
        .collect();
    let quarter = rat(1, 4);
    struct Row {
        delta_ok: bool,
        locked: bool,
        ends: bool,
        maxima: Vec<Rational>,
        close: bool,
    }
    let rows = par::try_map(xgrid, |x| -> Result<Row> {
        let dv = s.delta.eval(x)?;
        let mut row = Row {
            delta_ok: dv.is_positive() && dv < quarter,
            locked: true,
            ends: true,
            maxima: vec![Rational::zero(); alphas.len()],
            close: true,
        };
        let at = |t: &Rational| {
            let mut p = x.clone();
            p.push(t.clone());
            p
        };
        let start = s.phi.eval(&at(&int(0)))?;
        let end = s.phi.eval(&at(&int(1)))?;
        row.ends = s.eval(x, &int(0))? == start && s.eval(x, &int(1))? == end;
        let cv = match eps {
            Some(c) => Some(c.eval(x)?),
            None => None,
        };
        for t in tgrid {
            let k = s.piece(x, t)?;
            if k == 0 {
                row.locked &= s.eval(x, t)? == start;
            } else if k == 2 {
                row.locked &= s.eval(x, t)? == end;
            }
            let p = at(t);
            for (i, dm) in diffs.iter().enumerate() {
                for v in dm[k].eval(&p)? {
                    let a = abs(&v);
                    if let Some(c) = &cv {
                        row.close &= &a < c;
                    }
                    if a > row.maxima[i] {
                        row.maxima[i] = a;
                    }
                }
            }
        }
        Ok(row)
    })?;
    let mut maxima = vec![Rational::zero(); alphas.len()];
    let mut report = EndpointReport {
        delta_valid: true,
        locked: true,
        ends_unchanged: true,
        trimmed: Vec::new(),
        max_deviation: 0.0,
        close: eps.map(|_| true),
    };
    for r in rows {
        report.delta_valid &= r.delta_ok;
        report.locked &= r.locked;
        report.ends_unchanged &= r.ends;
        if let Some(c) = report.close.as_mut() {
            *c &= r.close;
        }
        for (m, v) in maxima.iter_mut().zip(r.maxima) {
            if v > *m {
                *m = v;
            }
        }
    }
    report.max_deviation = to_f64(&maxima[0]);
    report.trimmed = alphas.into_iter().zip(maxima.iter().map(to_f64)).collect();
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn clamp_examples() {
        let e = eta_clamp(&rat(1, 8)).unwrap();
        assert_eq!(e.eval(&rat(1, 16)).unwrap(), int(0));
        assert_eq!(e.eval(&rat(1, 2)).unwrap(), rat(1, 2));
        assert_eq!(e.eval(&rat(15, 16)).unwrap(), int(1));
        assert!(eta_clamp(&rat(1, 4)).is_err() && eta_clamp(&int(0)).is_err());
        let r = clamp_deviation(&rat(1, 8), 10_001).unwrap();
        assert!(r.pass);
        assert_eq!(r.max_deviation, 0.125);
    }

    #[test]
    fn power_examples() {
        assert!(eta_power(2).is_err());
        let id = eta_power(1).unwrap().branches().remove(0).f;
        assert!(id.equivalent(&SymFn::var(0, 1), 0));
        let three = eta_power(3).unwrap();
        assert_eq!(three.eval(&int(0)).unwrap(), int(0));
        assert_eq!(three.eval(&int(1)).unwrap(), int(1));
        let d1 = three.branches().remove(0).f.partial(0);
        assert!(d1.equivalent(&SymFn::parse("3*(2*x - 1)^2", 1).unwrap(), 0));
        let d5 = power_derivatives_at_half(5).unwrap();
        assert!(d5[..4].iter().all(Zero::is_zero));
        // d^5/dt^5 of (2t - 1)^5 / 2 is 5! 2^5 / 2
        assert_eq!(d5[4], int(120 * 32 / 2));
        for m in [1, 3, 5, 7, 9] {
            let ds = power_derivatives_at_half(m).unwrap();
            assert!(
                ds[..m as usize - 1].iter().all(Zero::is_zero) && !ds[m as usize - 1].is_zero()
            );
        }
    }

    #[test]
    fn local_examples() {
        let th = theta_local(&int(0), 1, 1, 1).unwrap();
        assert_eq!(th.eval(&rat(-1, 2)).unwrap(), rat(-1, 4));
        assert_eq!(th.eval(&rat(1, 2)).unwrap(), rat(1, 4));
        let b = th.branches();
        let (l, r) = seam_derivatives(&b[0].f, &b[1].f, &int(0), 1).unwrap();
        assert_eq!(l, vec![int(0), int(0)]);
        assert_eq!(r, vec![int(0), int(0)]);
        let th = theta_local(&rat(1, 2), 2, 1, 1).unwrap();
        let b = th.branches();
        let (l, r) = seam_derivatives(&b[0].f, &b[1].f, &rat(1, 2), 1).unwrap();
        assert_eq!(l, r);
        assert_eq!(b[0].f.polynomial_degree(), Some(2));
        assert_eq!(b[1].f.polynomial_degree(), Some(4));
    }

    #[test]
    fn glue_fixture() {
        let psi1 = SymMap::parse(&["t*x"], 2).unwrap();
        let psi2 = SymMap::parse(&["x/2 + (t - 1/2)*x^2"], 2).unwrap();
        let xs: Vec<Vec<Rational>> = (-4..=4).map(|k| vec![rat(k, 4)]).collect();
        let g = glue_homotopy(&psi1, &psi2, 3, 2, &xs).unwrap();
        assert!(g.report.pass, "{:?}", g.report);
        for side in [&g.left, &g.right] {
            for l in 1..=2 {
                let d = side.derivative(&MultiIndex::new(vec![0, l]));
                assert!(xs
                    .iter()
                    .all(|x| d.eval(&[x[0].clone(), rat(1, 2)]).unwrap()[0].is_zero()));
            }
        }
        assert!(glue_homotopy(&psi1, &psi2, 3, 3, &xs).is_err());
        let bad = SymMap::parse(&["x + t"], 2).unwrap();
        assert!(matches!(
            glue_homotopy(&psi1, &bad, 3, 2, &xs),
            Err(Error::Hypothesis(_))
        ));
    }

    #[test]
    fn straight_line_examples() {
        let f = SymMap::parse(&["0"], 1).unwrap();
        let g = SymMap::parse(&["1"], 1).unwrap();
        let phi = straight_line_homotopy(&f, &g);
        assert_eq!(phi.eval(&[int(3), rat(1, 2)]).unwrap(), vec![rat(1, 2)]);
        let f2 = SymMap::parse(&["x^2 - y", "x*y"], 2).unwrap();
        let g2 = SymMap::parse(&["1/(1 + x^2)", "y^3"], 2).unwrap();
        let pts = crate::symexpr::random_points(3, 10, 3, 16);
        let r = check_straight_line(&f2, &g2, &pts).unwrap();
        assert!(r.identity && r.samples_pass);
    }

    #[test]
    fn retraction_examples() {
        let unit = Retraction::Box(AxisBox::cube(1, int(0), int(1)));
        assert_eq!(unit.apply(&[rat(6, 5)]).unwrap(), vec![int(1)]);
        assert_eq!(unit.apply(&[rat(1, 3)]).unwrap(), vec![rat(1, 3)]);
        let disc = Retraction::Ball {
            center: vec![int(0), int(0)],
            radius: int(1),
        };
        assert_eq!(disc.apply(&[int(2), int(0)]).unwrap(), vec![int(1), int(0)]);
        let z = disc.apply(&[int(3), int(4)]).unwrap();
        assert!(disc.contains(&z).unwrap() && (to_f64(&z[0]) - 0.6).abs() < 1e-12);
        let hd = crate::corners::half_disc();
        let convex = Retraction::Convex {
            body: hd,
            anchor: vec![int(0), rat(1, 2)],
        };
        let p = convex.apply(&[int(0), int(2)]).unwrap();
        assert!(convex.contains(&p).unwrap());
        assert!((to_f64(&p[1]) - 1.0).abs() < 1e-9 && to_f64(&p[0]).abs() < 1e-9);
        let below = convex.apply(&[rat(1, 2), int(-1)]).unwrap();
        assert!((to_f64(&below[0]) - 0.5).abs() < 1e-9 && to_f64(&below[1]).abs() < 1e-9);
    }

    #[test]
    fn retract_straight_line() {
        let f = SymMap::parse(&["x"], 1).unwrap();
        let g = SymMap::parse(&["2 - x"], 1).unwrap();
        let phi = straight_line_homotopy(&f, &g);
        let xs: Vec<Vec<Rational>> = (0..=10).map(|k| vec![rat(k, 5)]).collect();
        let ts: Vec<Rational> = (0..=8).map(|k| rat(k, 8)).collect();
        let r = retract_and_check(
            &phi,
            &Retraction::Box(AxisBox::cube(1, int(0), int(1))),
            &xs,
            &ts,
        )
        .unwrap();
        assert!(r.all_inside && r.fixed_points && r.moved > 0);
    }

    #[test]
    fn endpoint_locking() {
        let phi = SymMap::parse(&["t"], 2).unwrap();
        let s = smooth_endpoints(&phi, &SymFn::constant(rat(1, 8), 1));
        assert_eq!(s.eval(&[int(0)], &rat(1, 16)).unwrap(), vec![int(0)]);
        let xs: Vec<Vec<Rational>> = (0..=4).map(|k| vec![rat(k, 4)]).collect();
        let ts: Vec<Rational> = (0..=64).map(|k| rat(k, 64)).collect();
        let r =
            check_smooth_endpoints(&s, Some(&Control::constant(rat(1, 4))), 0, &xs, &ts).unwrap();
        assert!(r.locked && r.ends_unchanged && r.delta_valid && r.close == Some(true));
        assert_eq!(r.max_deviation, 0.125);
        let tiny = smooth_endpoints(&phi, &SymFn::constant(rat(1, 64), 1));
        let r = check_smooth_endpoints(&tiny, None, 0, &xs, &ts).unwrap();
        assert!(r.max_deviation <= 1.0 / 64.0);
    }

    #[test]
    fn reparameterization_breaks_higher_closeness() {
        // a steep x-dependent clamp width: C^0-close, far in the trimmed C^1 sense
        let phi = SymMap::parse(&["t"], 2).unwrap();
        let delta = SymFn::parse("1/8 * x^2 / (x^2 + 1/10000)", 1).unwrap()
            + SymFn::constant(rat(1, 1000), 1);
        let s = smooth_endpoints(&phi, &delta);
        let xs: Vec<Vec<Rational>> = (-20..=20).map(|k| vec![rat(k, 1000)]).collect();
        let ts: Vec<Rational> = (0..=32).map(|k| rat(k, 32)).collect();
        let r = check_smooth_endpoints(&s, None, 1, &xs, &ts).unwrap();
        assert!(r.max_deviation <= 0.126);
        assert!(r.trimmed[1].1 > 1.0, "{:?}", r.trimmed);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn clamp_deviation_bound(k in 1i64..250, n in 0i64..1000) {
            let d0 = rat(k, 1000);
            let e = eta_clamp(&d0).unwrap();
            let t = rat(n, 999);
            prop_assert!(abs(&(&t - &e.eval(&t).unwrap())) <= d0);
        }

        #[test]
        fn endpoints_never_move(a in -20i64..20, b in 1i64..20, k in 1i64..24) {
            let phi = SymMap::parse(&["x^2*t + (1 - t)*x", "t^3 - x"], 2).unwrap();
            let s = smooth_endpoints(&phi, &SymFn::constant(rat(k, 100), 1));
            let x = [rat(a, b)];
            prop_assert_eq!(s.eval(&x, &int(0)).unwrap(), phi.eval(&[x[0].clone(), int(0)]).unwrap());
            prop_assert_eq!(s.eval(&x, &int(1)).unwrap(), phi.eval(&[x[0].clone(), int(1)]).unwrap());
        }
    }
}
