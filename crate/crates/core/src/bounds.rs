//! Sup-norm constants, the power-exponent search, strictly positive
//! functions close to zero, and equations of zero sets close to zero.
//!
//! Constants are grid maxima of exact rational evaluations. Every claim is
//! re-checked on the grid it was derived from and on a denser validation
//! lattice.

use num_traits::{One, Signed, Zero};
use serde::{Serialize, Serializer};
use serde_json::json;

use crate::error::{Error, Result};
use crate::par;
use crate::report::{Certificate, Status};
use crate::semialg::{AxisBox, SampleGrid};
use crate::symexpr::{abs, int, rat, to_f64, MultiIndex, Rational, SymFn, SymMap};
use crate::topology::{smu_close, Control};

/// Default cap of the power-exponent search.
pub const POWER_SEARCH_CAP: u64 = 1_000_000;
/// Cap of the `N0` search.
pub const N0_CAP: u32 = 64;
/// Above this exponent the inequality is checked in log space.
const EXACT_POWER_LIMIT: u64 = 4096;

fn ser_rat<S: Serializer>(q: &Rational, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&q.to_string())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundConstants {
    #[serde(serialize_with = "ser_rat")]
    pub c: Rational,
    #[serde(serialize_with = "ser_rat")]
    pub l: Rational,
    pub mu: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m: Option<u64>,
}

/// `C = 1 + max |D^alpha f|` over `|alpha| <= mu`, `L = max |f|`, both over the grid.
pub fn sup_norm_bounds(f: &SymFn, grid: &SampleGrid, mu: u32) -> Result<BoundConstants> {
    let alphas = MultiIndex::up_to_order(f.arity(), mu);
    let derivs: Vec<SymFn> = par::map(&alphas, |a| f.derivative(a));
    let rows = par::try_map(&grid.points, |p| -> Result<(Rational, Rational)> {
        let v = abs(&f.eval(p)?);
        if v >= Rational::one() {
            return Err(Error::Hypothesis(format!(
                "|f| >= 1 at grid point {:?}",
                to_f64_vec(p)
            )));
        }
        let mut d = Rational::zero();
        for g in &derivs {
            let w = abs(&g.eval(p)?);
            if w > d {
                d = w;
            }
        }
        Ok((v, d))
    })?;
    let mut l = Rational::zero();
    let mut d = Rational::zero();
    for (v, w) in rows {
        l = l.max(v);
        d = d.max(w);
    }
    Ok(BoundConstants {
        c: Rational::one() + d,
        l,
        mu,
        m: None,
    })
}

/// `(C N)^mu L^(N - mu - 1)`, exact. Requires `N > mu`.
pub fn power_inequality_value(c: &Rational, l: &Rational, mu: u32, n: u64) -> Rational {
    assert!(n > mu as u64, "N must exceed mu");
    let cn = c * Rational::from_integer(n.into());
    let e = usize::try_from(n - mu as u64 - 1).expect("exponent fits usize");
    num_traits::pow(cn, mu as usize) * num_traits::pow(l.clone(), e)
}

fn inequality_holds(c: &Rational, l: &Rational, mu: u32, n: u64) -> bool {
    if n <= EXACT_POWER_LIMIT {
        return power_inequality_value(c, l, mu, n) < Rational::one();
    }
    log_value(to_f64(c), to_f64(l), mu, n) < 0.0
}

fn log_value(c: f64, l: f64, mu: u32, n: u64) -> f64 {
    let tail = (n - mu as u64 - 1) as f64;
    let lpart = if tail == 0.0 { 0.0 } else { tail * l.ln() };
    mu as f64 * (c * n as f64).ln() + lpart
}

/// Minimal `M > mu` with `(C M)^mu L^(M - mu - 1) < 1`.
pub fn find_power_exponent(c: &Rational, l: &Rational, mu: u32) -> Result<u64> {
    find_power_exponent_capped(c, l, mu, POWER_SEARCH_CAP)
}

pub fn find_power_exponent_capped(c: &Rational, l: &Rational, mu: u32, cap: u64) -> Result<u64> {
    if c < &Rational::one() || l.is_negative() || l >= &Rational::one() {
        return Err(Error::Hypothesis(format!(
            "need C >= 1 and 0 <= L < 1, got C = {c}, L = {l}"
        )));
    }
    let first = mu as u64 + 1;
    if l.is_zero() {
        return Ok(first);
    }
    // The log of the left side is concave in N and positive at N = mu + 1,
    // so the first N where it turns negative starts a tail where it stays so.
    let (cf, lf) = (to_f64(c), to_f64(l));
    let mut m = first;
    while log_value(cf, lf, mu, m) >= 0.0 {
        m += 1;
        if m > cap {
            return Err(Error::SearchExhausted(format!(
                "no exponent M <= {cap} for C = {c}, L = {l}, mu = {mu}"
            )));
        }
    }
    // float screening can be off by one near a tie
    while !inequality_holds(c, l, mu, m) {
        m += 1;
        if m > cap {
            return Err(Error::SearchExhausted(format!(
                "no exponent M <= {cap} for C = {c}, L = {l}, mu = {mu}"
            )));
        }
    }
    while m > first && inequality_holds(c, l, mu, m - 1) {
        m -= 1;
    }
    if let Some(bad) = (m + 1..=m + 50).find(|&n| !inequality_holds(c, l, mu, n)) {
        return Err(Error::Certificate(format!(
            "inequality fails again at N = {bad} after M = {m}"
        )));
    }
    Ok(m)
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct PowerWitness {
    pub point: Vec<f64>,
    pub alpha: MultiIndex,
    pub derivative: f64,
    pub bound: f64,
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct PowerBoundReport {
    pub n: u64,
    pub mu: u32,
    pub constants: BoundConstants,
    /// `|D^alpha f^N| < |f|` where `f != 0`, and `D^alpha f^N = 0` where `f = 0`.
    pub pass: bool,
    /// `|D^alpha f^N| <= (C N)^mu L^(N - mu - 1) |f|` everywhere.
    pub chain_pass: bool,
    /// Smallest `|f| - |D^alpha f^N|` over points with `f != 0`.
    pub min_margin: Option<f64>,
    pub grid_size: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<PowerWitness>,
}

/// Check the conclusion of the power lemma for `f^N` on a grid.
pub fn verify_power_derivative_bound(
    f: &SymFn,
    n: u64,
    mu: u32,
    grid: &SampleGrid,
) -> Result<PowerBoundReport> {
    if n <= mu as u64 {
        return Err(Error::Hypothesis(format!(
            "need N > mu, got N = {n}, mu = {mu}"
        )));
    }
    let k = u32::try_from(n).map_err(|_| Error::Hypothesis(format!("exponent {n} too large")))?;
    let constants = sup_norm_bounds(f, grid, mu)?;
    let factor = power_inequality_value(&constants.c, &constants.l, mu, n);
    let power = f.pow(k);
    let alphas = MultiIndex::up_to_order(f.arity(), mu);
    let derivs: Vec<SymFn> = par::map(&alphas, |a| power.derivative(a));

    struct Scan {
        margin: Option<Rational>,
        chain: bool,
        witness: Option<PowerWitness>,
    }
    let scans = par::try_map(&grid.points, |p| -> Result<Scan> {
        let fv = abs(&f.eval(p)?);
        let chain_bound = &factor * &fv;
        let mut scan = Scan {
            margin: None,
            chain: true,
            witness: None,
        };
        for (a, d) in alphas.iter().zip(&derivs) {
            let dv = abs(&d.eval(p)?);
            if dv > chain_bound {
                scan.chain = false;
            }
            let ok = if fv.is_zero() { dv.is_zero() } else { dv < fv };
            if !fv.is_zero() {
                let m = &fv - &dv;
                if scan.margin.as_ref().is_none_or(|x| &m < x) {
                    scan.margin = Some(m);
                }
            }
            if !ok && scan.witness.is_none() {
                scan.witness = Some(PowerWitness {
                    point: to_f64_vec(p),
                    alpha: a.clone(),
                    derivative: to_f64(&dv),
                    bound: to_f64(&fv),
                });
            }
        }
        Ok(scan)
    })?;
    let mut report = PowerBoundReport {
        n,
        mu,
        constants: BoundConstants {
            m: Some(n),
            ..constants
        },
        pass: true,
        chain_pass: true,
        min_margin: None,
        grid_size: grid.len(),
        witness: None,
    };
    let mut margin: Option<Rational> = None;
    for s in scans {
        report.chain_pass &= s.chain;
        if let Some(w) = s.witness {
            report.pass = false;
            report.witness.get_or_insert(w);
        }
        if let Some(m) = s.margin {
            if margin.as_ref().is_none_or(|x| &m < x) {
                margin = Some(m);
            }
        }
    }
    report.min_margin = margin.as_ref().map(to_f64);
    Ok(report)
}

/// A strictly positive function below a control, with its derivatives.
#[derive(Clone, Debug)]
pub struct SmallFunction {
    pub h: SymFn,
    pub g: SymFn,
    pub eps: Control,
    pub mu: u32,
    pub domain: AxisBox,
    pub n0: u32,
    /// `N0` hit the search cap; the control decays about as fast as `g^64`.
    pub n0_at_cap: bool,
    pub n1: u32,
    pub n2: u64,
    pub n: u32,
    /// Constants of `F = g^(2(N0 + N1))`, whose power `F^N2` is `h`.
    pub constants: BoundConstants,
    pub certificate: Certificate,
    pub validation: Certificate,
}

impl SmallFunction {
    pub fn passed(&self) -> bool {
        self.certificate.passed() && self.validation.passed()
    }
}

/// Per-axis count of a lattice with about four times the points of `grid`.
pub fn validation_density(grid: &SampleGrid, dim: usize) -> usize {
    let base = if grid.density > 0 {
        grid.density
    } else {
        (grid.len() as f64).powf(1.0 / dim as f64).ceil() as usize
    };
    ((base as f64) * 4f64.powf(1.0 / dim.max(1) as f64)).ceil() as usize
}

/// `h = g^N` with `g = f / (2(1 + f^2))`, strictly positive on the open
/// domain where `f` does not vanish, and `S^mu`-below `eps`.
pub fn small_positive_function(
    f: &SymFn,
    domain: &AxisBox,
    eps: &Control,
    mu: u32,
    grid: &SampleGrid,
) -> Result<SmallFunction> {
    let arity = domain.dim();
    let f = f.with_arity(arity);
    let g = f.checked_div(&(f.square() + SymFn::one(arity)).scale(&int(2)))?;

    // N0: |g|^N0 <= eps on the grid, with the constant fixed to 1
    let per_point = par::try_map(&grid.points, |p| -> Result<u32> {
        let gv = abs(&g.eval(p)?);
        if gv.is_zero() {
            return Err(Error::Hypothesis(format!(
                "f vanishes at grid point {:?}",
                to_f64_vec(p)
            )));
        }
        let e = eps.eval(p)?;
        if !e.is_positive() {
            return Err(Error::Hypothesis(format!(
                "control is not positive at {:?}",
                to_f64_vec(p)
            )));
        }
        let mut acc = gv.clone();
        for k in 1..=N0_CAP {
            if acc <= e {
                return Ok(k);
            }
            acc *= &gv;
        }
        Ok(N0_CAP + 1)
    })?;
    let n0 = per_point.into_iter().max().unwrap_or(1);
    if n0 > N0_CAP {
        return Err(Error::SearchExhausted(format!(
            "no N0 <= {N0_CAP} with |g|^N0 <= eps on the grid; the control decays faster than a power of g"
        )));
    }
    // C / 2^N1 < 1 with C = 1
    let n1 = 1u32;
    let big_f = g.pow(2 * (n0 + n1));
    let constants = sup_norm_bounds(&big_f, grid, mu)?;
    let n2 = find_power_exponent(&constants.c, &constants.l, mu.max(1))?;
    let n = u32::try_from(2 * n2 * (n0 + n1) as u64).map_err(|_| {
        Error::SearchExhausted(format!("exponent 2 N2 (N0 + N1) overflows for N2 = {n2}"))
    })?;
    let h = g.pow(n);

    let params = json!({
        "f": f.to_string(),
        "eps": eps.to_string(),
        "mu": mu,
        "n0": n0,
        "n1": n1,
        "n2": n2,
        "n": n,
        "domain": {"lo": domain.lo_f64(), "hi": domain.hi_f64()},
    });
    let certificate = certify_small(&h, eps, mu, grid, "small_positive_function", params.clone())?;
    let vgrid = SampleGrid::lattice(domain, validation_density(grid, arity), true);
    let validation = certify_small(
        &h,
        eps,
        mu,
        &vgrid,
        "small_positive_function.validation",
        params,
    )?;
    Ok(SmallFunction {
        h,
        g,
        eps: eps.clone(),
        mu,
        domain: domain.clone(),
        n0,
        n0_at_cap: n0 == N0_CAP,
        n1,
        n2,
        n,
        constants: BoundConstants {
            m: Some(n2),
            ..constants
        },
        certificate,
        validation,
    })
}

/// `0 < h < 1` and `|D^alpha h| < eps` for `|alpha| <= mu` on the grid.
fn certify_small(
    h: &SymFn,
    eps: &Control,
    mu: u32,
    grid: &SampleGrid,
    op: &str,
    params: serde_json::Value,
) -> Result<Certificate> {
    let arity = h.arity();
    let range = par::try_map(&grid.points, |p| -> Result<Option<Vec<f64>>> {
        let v = h.eval(p)?;
        Ok((!(v.is_positive() && v < Rational::one())).then(|| to_f64_vec(p)))
    })?;
    let range_bad = range.into_iter().flatten().next();
    let close = smu_close(
        &SymMap::new(vec![h.clone()], arity),
        &SymMap::new(vec![SymFn::zero(arity)], arity),
        eps,
        mu,
        &grid.points,
    )?;
    let ok = range_bad.is_none() && close.verdict;
    let witness = match (&range_bad, &close.witness) {
        (Some(p), _) => Some(json!({"point": p, "violation": "h not in (0, 1)"})),
        (None, Some(w)) => Some(serde_json::to_value(w).expect("witness serializes")),
        _ => None,
    };
    Ok(Certificate {
        op: op.to_string(),
        params,
        grid_seed: grid.seed,
        grid_size: grid.len(),
        min_margin: close.min_margin,
        status: Status::from_bool(ok),
        witness,
        notes: Vec::new(),
    })
}

/// An equation `phi >= 0` of the zero set of `psi`, `S^mu`-below `eps`.
#[derive(Clone, Debug)]
pub struct NashEquation {
    pub phi: SymFn,
    /// `psi^2 / (1 + psi^2)`.
    pub psi_normalized: SymFn,
    pub small: SmallFunction,
    pub certificate: Certificate,
}

/// `phi = f psi'` with `psi' = psi^2 / (1 + psi^2)` and `f` a small positive
/// function for the control `eps* = eps' / (max(m,2)^(mu+1) max(e,1))`,
/// where `eps' = min(eps, 1/2)` and `e = max |D^alpha psi'|`.
pub fn nash_equation_close_to_zero(
    psi: &SymFn,
    eps: &Control,
    mu: u32,
    domain: &AxisBox,
    grid: &SampleGrid,
) -> Result<NashEquation> {
    let m = domain.dim();
    let psi = psi.with_arity(m);
    let psi2 = psi.square();
    let normalized = psi2.checked_div(&(psi2.clone() + SymFn::one(m)))?;
    let alphas = MultiIndex::up_to_order(m, mu);
    let derivs: Vec<SymFn> = par::map(&alphas, |a| normalized.derivative(a));
    let scale = num_traits::pow(int(m.max(2) as i64), mu as usize + 1);
    let outer = eps.clone();
    let eps_star = Control::pointwise(&format!("eps*({eps})"), move |p| {
        let e = outer.eval(p)?.min(rat(1, 2));
        let mut sup = Rational::one();
        for d in &derivs {
            sup = sup.max(abs(&d.eval(p)?));
        }
        Ok(e / (&scale * sup))
    });
    let boundary = box_equation(domain);
    let small = small_positive_function(&boundary, domain, &eps_star, mu, grid)?;
    let phi = &small.h * &normalized;

    let sign_bad = par::try_map(&grid.points, |p| -> Result<Option<Vec<f64>>> {
        let pv = phi.eval(p)?;
        let zero_matches = pv.is_zero() == psi.eval(p)?.is_zero();
        Ok((pv.is_negative() || !zero_matches).then(|| to_f64_vec(p)))
    })?
    .into_iter()
    .flatten()
    .next();
    let close = smu_close(
        &SymMap::new(vec![phi.clone()], m),
        &SymMap::new(vec![SymFn::zero(m)], m),
        eps,
        mu,
        &grid.points,
    )?;
    let ok = sign_bad.is_none() && close.verdict && small.passed();
    let witness = match (&sign_bad, &close.witness) {
        (Some(p), _) => {
            Some(json!({"point": p, "violation": "sign of phi differs from zero set of psi"}))
        }
        (None, Some(w)) => Some(serde_json::to_value(w).expect("witness serializes")),
        _ => None,
    };
    let certificate = Certificate {
        op: "nash_equation_close_to_zero".into(),
        params: json!({"psi": psi.to_string(), "eps": eps.to_string(), "mu": mu, "n": small.n}),
        grid_seed: grid.seed,
        grid_size: grid.len(),
        min_margin: close.min_margin,
        status: Status::from_bool(ok),
        witness,
        notes: Vec::new(),
    };
    Ok(NashEquation {
        phi,
        psi_normalized: normalized,
        small,
        certificate,
    })
}

/// `prod (x_i - lo_i)(hi_i - x_i)`, positive exactly on the open box.
pub fn box_equation(domain: &AxisBox) -> SymFn {
    let m = domain.dim();
    let mut acc = SymFn::one(m);
    for i in 0..m {
        let x = SymFn::var(i, m);
        let lo = SymFn::constant(domain.lo[i].clone(), m);
        let hi = SymFn::constant(domain.hi[i].clone(), m);
        acc = acc * ((&x - &lo) * (&hi - &x));
    }
    acc
}

fn to_f64_vec(p: &[Rational]) -> Vec<f64> {
    p.iter().map(to_f64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn interval(lo: i64, hi: i64) -> AxisBox {
        AxisBox::new(vec![int(lo)], vec![int(hi)])
    }

    fn f1(s: &str) -> SymFn {
        SymFn::parse(s, 1).unwrap()
    }

    #[test]
    fn sup_norm_examples() {
        let g = SampleGrid::lattice(&interval(-1, 1), 101, false);
        let z = sup_norm_bounds(&SymFn::zero(1), &g, 1).unwrap();
        assert_eq!((z.c, z.l), (int(1), int(0)));
        let b = sup_norm_bounds(&f1("x/2"), &g, 1).unwrap();
        assert_eq!((b.c, b.l), (rat(3, 2), rat(1, 2)));
        let sq = AxisBox::cube(2, int(-1), int(1));
        let b2 = sup_norm_bounds(
            &SymFn::parse("x*y/2", 2).unwrap(),
            &SampleGrid::lattice(&sq, 11, false),
            1,
        )
        .unwrap();
        assert_eq!((b2.c, b2.l), (rat(3, 2), rat(1, 2)));
        assert!(matches!(
            sup_norm_bounds(&f1("x"), &g, 1),
            Err(Error::Hypothesis(_))
        ));
    }

    #[test]
    fn power_exponent_examples() {
        assert_eq!(find_power_exponent(&int(1), &int(0), 1).unwrap(), 2);
        assert_eq!(find_power_exponent(&int(2), &rat(1, 2), 1).unwrap(), 6);
        assert_eq!(power_inequality_value(&int(2), &rat(1, 2), 1, 5), rat(5, 4));
        assert_eq!(power_inequality_value(&int(2), &rat(1, 2), 1, 6), rat(3, 4));
        assert_eq!(find_power_exponent(&rat(3, 2), &rat(1, 2), 1).unwrap(), 5);
        assert_eq!(
            power_inequality_value(&rat(3, 2), &rat(1, 2), 1, 5),
            rat(15, 16)
        );
        assert!(find_power_exponent(&rat(1, 2), &rat(1, 2), 1).is_err());
        assert!(matches!(
            find_power_exponent_capped(&int(2), &rat(999, 1000), 3, 100),
            Err(Error::SearchExhausted(_))
        ));
    }

    #[test]
    fn large_exponent_uses_log_space() {
        let m = find_power_exponent(&int(3), &rat(9999, 10000), 2).unwrap();
        assert!(m > EXACT_POWER_LIMIT);
        assert!(log_value(3.0, 0.9999, 2, m) < 0.0 && log_value(3.0, 0.9999, 2, m - 1) >= 0.0);
    }

    #[test]
    fn power_bound_examples() {
        let open = SampleGrid::lattice(&interval(-1, 1), 1000, true);
        let r = verify_power_derivative_bound(&f1("x/2"), 5, 1, &open).unwrap();
        assert!(r.pass && r.chain_pass, "{r:?}");
        let zero = verify_power_derivative_bound(&SymFn::zero(1), 2, 1, &open).unwrap();
        assert!(zero.pass && zero.min_margin.is_none());
        let f = f1("(1 - x^2)/2");
        let c = sup_norm_bounds(&f, &open, 2).unwrap();
        let n = find_power_exponent(&c.c, &c.l, 2).unwrap();
        let r = verify_power_derivative_bound(&f, n, 2, &open).unwrap();
        assert!(
            r.pass && r.chain_pass && r.min_margin.unwrap() >= 1e-12,
            "{r:?}"
        );
    }

    #[test]
    fn power_bound_reports_violation() {
        // N too small for the lemma: |D (x/2)^2| = |x|/2 equals |f|
        let open = SampleGrid::lattice(&interval(-1, 1), 10, true);
        let r = verify_power_derivative_bound(&f1("x/2"), 2, 1, &open).unwrap();
        assert!(!r.pass && r.witness.is_some());
    }

    #[test]
    fn small_function_on_interval() {
        let dom = interval(-1, 1);
        let grid = SampleGrid::lattice(&dom, 1000, true);
        let s = small_positive_function(
            &f1("1 - x^2"),
            &dom,
            &Control::constant(rat(1, 4)),
            1,
            &grid,
        )
        .unwrap();
        assert_eq!((s.n0, s.n1), (1, 1));
        assert_eq!(s.n % 2, 0);
        assert!(s.passed(), "{:?} {:?}", s.certificate, s.validation);
        assert_eq!(s.validation.grid_size, 4000);
    }

    #[test]
    fn small_function_examples() {
        let unit = interval(0, 1);
        let grid = SampleGrid::lattice(&unit, 200, true);
        let s = small_positive_function(&f1("x"), &unit, &Control::constant(rat(1, 4)), 1, &grid)
            .unwrap();
        assert!(s.passed());
        let big = small_positive_function(&f1("x"), &unit, &Control::constant(int(10)), 1, &grid)
            .unwrap();
        assert_eq!(big.n0, 1);
        assert!(big.passed());
        let through_zero = SampleGrid::lattice(&unit, 5, false);
        assert!(matches!(
            small_positive_function(
                &f1("x - 1/2"),
                &unit,
                &Control::constant(rat(1, 4)),
                1,
                &through_zero
            ),
            Err(Error::Hypothesis(_))
        ));
    }

    #[test]
    fn nash_equations() {
        let dom = interval(-1, 1);
        let grid = SampleGrid::lattice(&dom, 101, false);
        let inner: Vec<_> = grid
            .points
            .iter()
            .filter(|p| dom.lo[0] < p[0] && p[0] < dom.hi[0])
            .cloned()
            .collect();
        let grid = SampleGrid::from_points(inner, 0, 101, crate::semialg::Stratum::Interior);
        let e =
            nash_equation_close_to_zero(&f1("x"), &Control::constant(rat(1, 4)), 1, &dom, &grid)
                .unwrap();
        assert!(e.certificate.passed(), "{:?}", e.certificate);
        assert!(e.phi.eval(&[int(0)]).unwrap().is_zero());
        let one = nash_equation_close_to_zero(
            &SymFn::one(1),
            &Control::constant(rat(1, 2)),
            1,
            &dom,
            &grid,
        )
        .unwrap();
        assert!(grid
            .points
            .iter()
            .all(|p| one.phi.eval(p).unwrap().is_positive()));
        let sq = AxisBox::cube(2, int(-1), int(1));
        let g2 = SampleGrid::lattice(&sq, 16, true);
        let circle = SymFn::parse("x^2 + y^2 - 1/4", 2).unwrap();
        let c = nash_equation_close_to_zero(&circle, &Control::constant(rat(1, 2)), 1, &sq, &g2)
            .unwrap();
        assert!(c.certificate.passed(), "{:?}", c.certificate);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]
        #[test]
        fn exponent_is_minimal(cn in 2i64..40, ln in 1i64..19, mu in 1u32..4) {
            let c = rat(cn, 2);
            let l = rat(ln, 20);
            let m = find_power_exponent(&c, &l, mu).unwrap();
            prop_assert!(m > mu as u64);
            prop_assert!(power_inequality_value(&c, &l, mu, m) < Rational::one());
            if m > mu as u64 + 1 {
                prop_assert!(power_inequality_value(&c, &l, mu, m - 1) >= Rational::one());
            }
            for n in m..=m + 50 {
                prop_assert!(inequality_holds(&c, &l, mu, n));
            }
        }
    }
}
