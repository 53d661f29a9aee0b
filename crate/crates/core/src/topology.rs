//! Seminorm engines for the strong Whitney topology and its trimmed variant,
//! plus the closed-form embeddings and the least-squares plumbing.
//!
//! Domains are open boxes, so iterated tangent fields are coordinate
//! partials and a seminorm is a table of `max |D^alpha g|` over a grid.

use std::fmt;
use std::sync::Arc;

use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::par;
use crate::symexpr::{abs, int, to_f64, MultiIndex, Rational, SymFn, SymMap};

type PointFn = dyn Fn(&[Rational]) -> Result<Rational> + Send + Sync;

/// A strictly positive control function.
#[derive(Clone)]
pub enum Control {
    Expr(SymFn),
    Pointwise(Arc<PointFn>, String),
}

impl Control {
    pub fn constant(c: Rational) -> Self {
        Control::Expr(SymFn::constant(c, 0))
    }

    pub fn pointwise(
        name: &str,
        f: impl Fn(&[Rational]) -> Result<Rational> + Send + Sync + 'static,
    ) -> Self {
        Control::Pointwise(Arc::new(f), name.to_string())
    }

    pub fn eval(&self, p: &[Rational]) -> Result<Rational> {
        match self {
            Control::Expr(f) => f.eval(p),
            Control::Pointwise(f, _) => f(p),
        }
    }

    pub fn as_constant(&self) -> Option<&Rational> {
        match self {
            Control::Expr(f) => f.as_constant(),
            Control::Pointwise(..) => None,
        }
    }
}

impl fmt::Display for Control {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Control::Expr(e) => write!(f, "{e}"),
            Control::Pointwise(_, name) => write!(f, "{name}"),
        }
    }
}

impl fmt::Debug for Control {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Control({self})")
    }
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct AlphaRow {
    pub alpha: MultiIndex,
    pub component: usize,
    pub max: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub control_min: Option<f64>,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct SeminormReport {
    pub mu: u32,
    pub control: Option<String>,
    pub alphas: Vec<AlphaRow>,
    /// Smallest `control - |D^alpha g|` over the grid, when a control is set.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min_margin: Option<f64>,
    pub verdict: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct Witness {
    pub alpha: MultiIndex,
    pub component: usize,
    pub point: Vec<f64>,
    pub value: f64,
    pub control: f64,
}

impl SeminormReport {
    /// Grid maximum of `|D^alpha g_component|`.
    pub fn max_of(&self, alpha: &MultiIndex, component: usize) -> Option<f64> {
        self.alphas
            .iter()
            .find(|r| &r.alpha == alpha && r.component == component)
            .map(|r| r.max)
    }

    /// `(alpha, component, max)` rows as CSV.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("alpha,component,max\n");
        for r in &self.alphas {
            out.push_str(&format!("\"{}\",{},{}\n", r.alpha, r.component, r.max));
        }
        out
    }
}

struct Cell {
    max: Rational,
    control_min: Option<Rational>,
    margin: Option<Rational>,
    witness: Option<(Vec<Rational>, Rational, Rational)>,
}

/// Core sweep: for each `(component, alpha)`, exact values of `|D^alpha g|`
/// at each grid point (and of the control, when given).
fn sweep(
    g: &SymMap,
    alphas: &[MultiIndex],
    derive: impl Fn(&SymFn, &MultiIndex) -> SymFn + Sync,
    grid: &[Vec<Rational>],
    values_at: impl Fn(&SymFn, &[Rational]) -> Result<Rational> + Sync,
    control: Option<&Control>,
    control_at: impl Fn(&[Rational]) -> Vec<Rational> + Sync,
    mu: u32,
) -> Result<SeminormReport> {
    let jobs: Vec<(usize, MultiIndex)> = (0..g.dim())
        .flat_map(|k| alphas.iter().map(move |a| (k, a.clone())))
        .collect();
    let derivs: Vec<SymFn> = par::map(&jobs, |(k, a)| derive(g.component(*k), a));
    let cells = par::map_range(jobs.len(), |j| -> Result<Cell> {
        let d = &derivs[j];
        let mut cell = Cell {
            max: Rational::zero(),
            control_min: None,
            margin: None,
            witness: None,
        };
        for p in grid {
            let v = abs(&values_at(d, p)?);
            if let Some(c) = control {
                let cv = c.eval(&control_at(p))?;
                let margin = &cv - &v;
                if cell.control_min.as_ref().is_none_or(|m| &cv < m) {
                    cell.control_min = Some(cv.clone());
                }
                if cell.margin.as_ref().is_none_or(|m| &margin < m) {
                    if !margin.is_positive() && cell.witness.is_none() {
                        cell.witness = Some((p.clone(), v.clone(), cv.clone()));
                    }
                    cell.margin = Some(margin);
                }
            }
            if v > cell.max {
                cell.max = v;
            }
        }
        Ok(cell)
    });
    let mut rows = Vec::with_capacity(jobs.len());
    let mut min_margin: Option<Rational> = None;
    let mut witness = None;
    for ((k, alpha), cell) in jobs.into_iter().zip(cells) {
        let cell = cell?;
        let pass = cell.margin.as_ref().is_none_or(Rational::is_positive);
        if let Some(m) = &cell.margin {
            if min_margin.as_ref().is_none_or(|x| m < x) {
                min_margin = Some(m.clone());
            }
        }
        if witness.is_none() {
            if let Some((p, v, c)) = &cell.witness {
                witness = Some(Witness {
                    alpha: alpha.clone(),
                    component: k,
                    point: p.iter().map(to_f64).collect(),
                    value: to_f64(v),
                    control: to_f64(c),
                });
            }
        }
        rows.push(AlphaRow {
            alpha,
            component: k,
            max: to_f64(&cell.max),
            control_min: cell.control_min.as_ref().map(to_f64),
            pass,
        });
    }
    let verdict = rows.iter().all(|r| r.pass);
    Ok(SeminormReport {
        mu,
        control: control.map(|c| c.to_string()),
        alphas: rows,
        min_margin: min_margin.as_ref().map(to_f64),
        verdict,
        witness,
    })
}

/// Grid maxima of `|D^alpha g_k|` for all `|alpha| <= mu` and components `k`.
pub fn smu_seminorm(g: &SymMap, mu: u32, grid: &[Vec<Rational>]) -> Result<SeminormReport> {
    let alphas = MultiIndex::up_to_order(g.arity(), mu);
    sweep(
        g,
        &alphas,
        |f, a| f.derivative(a),
        grid,
        |f, p| f.eval(p),
        None,
        |p| p.to_vec(),
        mu,
    )
}

/// `|D^alpha (f - g)| < eps` at every grid point for all `|alpha| <= mu`.
pub fn smu_close(
    f: &SymMap,
    g: &SymMap,
    eps: &Control,
    mu: u32,
    grid: &[Vec<Rational>],
) -> Result<SeminormReport> {
    assert_eq!(f.dim(), g.dim(), "target dimensions differ");
    let diff = f.zip_with(g, |a, b| a - b);
    let alphas = MultiIndex::up_to_order(diff.arity(), mu);
    sweep(
        &diff,
        &alphas,
        |h, a| h.derivative(a),
        grid,
        |h, p| h.eval(p),
        Some(eps),
        |p| p.to_vec(),
        mu,
    )
}

/// Trimmed closeness for maps on `X x [0,1]` (time is the last variable):
/// only `x`-derivatives enter, and the control depends on `x` alone.
pub fn trimmed_close(
    h1: &SymMap,
    h2: &SymMap,
    eps: &Control,
    mu: u32,
    xgrid: &[Vec<Rational>],
    tgrid: &[Rational],
) -> Result<SeminormReport> {
    assert_eq!(h1.dim(), h2.dim(), "target dimensions differ");
    let diff = h1.zip_with(h2, |a, b| a - b);
    let n = diff.arity() - 1;
    let alphas: Vec<MultiIndex> = MultiIndex::up_to_order(n, mu)
        .into_iter()
        .map(|a| {
            let mut e = a.entries().to_vec();
            e.push(0);
            MultiIndex::new(e)
        })
        .collect();
    let grid: Vec<Vec<Rational>> = xgrid
        .iter()
        .flat_map(|x| {
            tgrid.iter().map(move |t| {
                let mut p = x.clone();
                p.push(t.clone());
                p
            })
        })
        .collect();
    sweep(
        &diff,
        &alphas,
        |h, a| h.derivative(a),
        &grid,
        |h, p| h.eval(p),
        Some(eps),
        |p| p[..n].to_vec(),
        mu,
    )
}

#[derive(Clone, Debug, PartialEq)]
pub struct FiberMin {
    pub x: Vec<Rational>,
    pub min: Rational,
    pub argmin: Rational,
}

/// Per-`x` minimum over the `t`-grid of `eps(x, t)`; `t` is the last variable.
pub fn min_over_fiber(
    eps: &SymFn,
    xgrid: &[Vec<Rational>],
    tgrid: &[Rational],
) -> Result<Vec<FiberMin>> {
    par::map(xgrid, |x| {
        let mut best: Option<(Rational, Rational)> = None;
        for t in tgrid {
            let mut p = x.clone();
            p.push(t.clone());
            let v = eps.eval(&p)?;
            if !v.is_positive() {
                return Err(Error::Hypothesis(format!(
                    "control is not positive at {p:?}"
                )));
            }
            if best.as_ref().is_none_or(|(m, _)| &v < m) {
                best = Some((v, t.clone()));
            }
        }
        let (min, argmin) = best.ok_or_else(|| Error::Hypothesis("empty t-grid".into()))?;
        Ok(FiberMin {
            x: x.clone(),
            min,
            argmin,
        })
    })
    .into_iter()
    .collect()
}

/// `x -> (x, 1/h(x))`, closing up a locally closed set along `{h = 0}`.
pub fn mostowski_embed(h: &SymFn) -> SymMap {
    let n = h.arity();
    let mut comps: Vec<SymFn> = (0..n).map(|i| SymFn::var(i, n)).collect();
    comps.push(h.recip());
    SymMap::from_components(comps)
}

#[derive(Clone, Debug, Serialize)]
pub struct MostowskiReport {
    pub samples: usize,
    pub graph_identity_exact: bool,
    pub projection_inverts: bool,
    pub norms_increasing: bool,
}

/// Check the image on `samples` (ordered so they approach `{h = 0}`).
pub fn mostowski_check(h: &SymFn, samples: &[Vec<Rational>]) -> Result<MostowskiReport> {
    let embed = mostowski_embed(h);
    let n = h.arity();
    let mut identity = true;
    let mut inverts = true;
    let mut norms = Vec::with_capacity(samples.len());
    for x in samples {
        let hv = h.eval(x)?;
        if hv.is_zero() {
            return Err(Error::Hypothesis(format!("h vanishes at sample {x:?}")));
        }
        let img = embed.eval(x)?;
        identity &= (&img[n] * &hv).is_one();
        inverts &= img[..n] == x[..];
        norms.push(img.iter().fold(Rational::zero(), |s, v| s + v * v));
    }
    let increasing = norms.windows(2).all(|w| w[0] < w[1]);
    Ok(MostowskiReport {
        samples: samples.len(),
        graph_identity_exact: identity,
        projection_inverts: inverts,
        norms_increasing: increasing,
    })
}

/// Inverse stereographic projection `R^k -> S^k`:
/// `x -> (2x/(1+|x|^2), (|x|^2-1)/(1+|x|^2))`.
pub fn stereographic(k: usize) -> SymMap {
    let x = SymMap::identity(k);
    let r2 = x.norm_squared();
    let den = SymFn::one(k) + &r2;
    let mut comps: Vec<SymFn> = x
        .components()
        .iter()
        .map(|xi| (xi.scale(&int(2))).checked_div(&den).unwrap())
        .collect();
    comps.push((&r2 - SymFn::one(k)).checked_div(&den).unwrap());
    SymMap::from_components(comps)
}

/// `S^k minus the north pole -> R^k`, `y -> y_i/(1 - y_{k+1})`.
pub fn stereographic_inverse(k: usize) -> SymMap {
    let n = k + 1;
    let den = SymFn::one(n) - SymFn::var(k, n);
    SymMap::from_components(
        (0..k)
            .map(|i| SymFn::var(i, n).checked_div(&den).unwrap())
            .collect(),
    )
}

/// Solve `A c = b` exactly; `None` when `A` is singular.
pub fn solve_exact(mut a: Vec<Vec<Rational>>, mut b: Vec<Rational>) -> Option<Vec<Rational>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n).find(|&r| !a[r][col].is_zero())?;
        a.swap(col, pivot);
        b.swap(col, pivot);
        let inv = a[col][col].recip();
        for r in 0..n {
            if r == col || a[r][col].is_zero() {
                continue;
            }
            let factor = &a[r][col] * &inv;
            for c in col..n {
                let delta = &factor * &a[col][c];
                a[r][c] -= delta;
            }
            let delta = &factor * &b[col];
            b[r] -= delta;
        }
    }
    Some((0..n).map(|i| &b[i] / &a[i][i]).collect())
}

#[derive(Clone, Debug, Serialize)]
pub struct FitReport {
    pub degree: u32,
    pub basis_size: usize,
    pub residual_sq: f64,
    pub sup_error: f64,
    pub seminorm: SeminormReport,
}

/// Least-squares polynomial of total degree `degree` fitted to `f` on the
/// grid, via exactly solved normal equations. The report is the deliverable;
/// no closeness is asserted.
pub fn approximate_by_polynomial(
    f: &SymFn,
    degree: u32,
    mu: u32,
    grid: &[Vec<Rational>],
) -> Result<(SymFn, FitReport)> {
    let n = f.arity();
    let basis = MultiIndex::up_to_order(n, degree);
    let monomial = |a: &MultiIndex, p: &[Rational]| -> Rational {
        a.entries()
            .iter()
            .zip(p)
            .fold(Rational::one(), |acc, (&e, x)| {
                acc * num_traits::pow(x.clone(), e as usize)
            })
    };
    let rows: Vec<(Vec<Rational>, Rational)> = par::try_map(grid, |p| -> Result<_> {
        Ok((basis.iter().map(|a| monomial(a, p)).collect(), f.eval(p)?))
    })?;
    let m = basis.len();
    let mut ata = vec![vec![Rational::zero(); m]; m];
    let mut atb = vec![Rational::zero(); m];
    for (row, y) in &rows {
        for i in 0..m {
            if row[i].is_zero() {
                continue;
            }
            for j in i..m {
                ata[i][j] += &row[i] * &row[j];
            }
            atb[i] += &row[i] * y;
        }
    }
    for i in 0..m {
        for j in 0..i {
            ata[i][j] = ata[j][i].clone();
        }
    }
    let coeffs = solve_exact(ata, atb).ok_or_else(|| {
        Error::Hypothesis(format!(
            "degenerate normal system: {} grid points for {m} monomials",
            grid.len()
        ))
    })?;
    let mut fit = SymFn::zero(n);
    for (a, c) in basis.iter().zip(&coeffs) {
        let mut term = SymFn::constant(c.clone(), n);
        for (i, &e) in a.entries().iter().enumerate() {
            if e > 0 {
                term = term * SymFn::var(i, n).pow(e);
            }
        }
        fit = fit + term;
    }
    let mut residual = Rational::zero();
    let mut sup = Rational::zero();
    for (p, (_, y)) in grid.iter().zip(&rows) {
        let r = fit.eval(p)? - y;
        residual += &r * &r;
        let ar = abs(&r);
        if ar > sup {
            sup = ar;
        }
    }
    let seminorm = smu_seminorm(&SymMap::from_components(vec![f - &fit]), mu, grid)?;
    let report = FitReport {
        degree,
        basis_size: m,
        residual_sq: to_f64(&residual),
        sup_error: to_f64(&sup),
        seminorm,
    };
    Ok((fit, report))
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;
    use crate::semialg::AxisBox;
    use crate::symexpr::{random_points, rat};

    fn map(texts: &[&str], n: usize) -> SymMap {
        SymMap::from_components(texts.iter().map(|t| SymFn::parse(t, n).unwrap()).collect())
    }

    fn grid1(n: usize) -> Vec<Vec<Rational>> {
        AxisBox::cube(1, int(-1), int(1)).lattice_vertices(n)
    }

    fn mi(v: &[u32]) -> MultiIndex {
        MultiIndex::new(v.to_vec())
    }

    #[test]
    fn seminorm_examples() {
        let r = smu_seminorm(&map(&["x^2"], 1), 1, &grid1(21)).unwrap();
        assert_eq!(r.max_of(&mi(&[0]), 0), Some(1.0));
        assert_eq!(r.max_of(&mi(&[1]), 0), Some(2.0));
        let r = smu_seminorm(&map(&["0"], 1), 2, &grid1(5)).unwrap();
        assert!(r.alphas.iter().all(|row| row.max == 0.0));
        let g2 = AxisBox::cube(2, int(-1), int(1)).lattice_vertices(5);
        let r = smu_seminorm(&map(&["x*y"], 2), 2, &g2).unwrap();
        let maxima: Vec<f64> = r.alphas.iter().map(|row| row.max).collect();
        assert_eq!(maxima, vec![1.0, 1.0, 1.0, 0.0, 1.0, 0.0]);
    }

    #[test]
    fn closeness_examples() {
        let g = grid1(41);
        let f = map(&["x"], 1);
        assert!(
            smu_close(&f, &f, &Control::constant(rat(1, 1000)), 2, &g)
                .unwrap()
                .verdict
        );
        let shifted = map(&["x + 1/10"], 1);
        assert!(
            smu_close(&f, &shifted, &Control::constant(rat(1, 5)), 0, &g)
                .unwrap()
                .verdict
        );
        let r = smu_close(&f, &shifted, &Control::constant(rat(1, 20)), 0, &g).unwrap();
        assert!(!r.verdict);
        assert!(r.witness.is_some());
        let bent = map(&["x + x^2/10"], 1);
        assert!(
            smu_close(&f, &bent, &Control::constant(rat(1, 4)), 1, &g)
                .unwrap()
                .verdict
        );
    }

    #[test]
    fn trimmed_examples() {
        let xg = grid1(9);
        let tg: Vec<Rational> = (0..=20).map(|k| rat(k, 20)).collect();
        let h1 = map(&["x*t"], 2);
        let h2 = map(&["x*t + t*(1-t)/10"], 2);
        assert!(
            trimmed_close(&h1, &h1, &Control::constant(rat(1, 100)), 1, &xg, &tg)
                .unwrap()
                .verdict
        );
        let r = trimmed_close(&h1, &h2, &Control::constant(rat(1, 20)), 1, &xg, &tg).unwrap();
        assert!(r.verdict);
        assert_eq!(r.max_of(&mi(&[0, 0]), 0), Some(1.0 / 40.0));
        assert!(r.alphas.iter().all(|row| row.alpha.entries()[1] == 0));
        assert!(
            !trimmed_close(&h1, &h2, &Control::constant(rat(1, 50)), 1, &xg, &tg)
                .unwrap()
                .verdict
        );
    }

    #[test]
    fn fiber_minimum_examples() {
        let xg = grid1(5);
        let tg: Vec<Rational> = (0..=10).map(|k| rat(k, 10)).collect();
        let e = SymFn::parse("1 + x^2 + t", 2).unwrap();
        for m in min_over_fiber(&e, &xg, &tg).unwrap() {
            assert_eq!(m.min, int(1) + &m.x[0] * &m.x[0]);
            assert_eq!(m.argmin, int(0));
        }
        let e = SymFn::parse("1 + (t - 1/2)^2", 2).unwrap();
        assert!(min_over_fiber(&e, &xg, &tg)
            .unwrap()
            .iter()
            .all(|m| m.min == int(1)));
        let e = SymFn::parse("2 - t", 2).unwrap();
        assert!(min_over_fiber(&e, &xg, &tg)
            .unwrap()
            .iter()
            .all(|m| m.min == int(1)));
        let e = SymFn::parse("t - 1/2", 2).unwrap();
        assert!(min_over_fiber(&e, &xg, &tg).is_err());
    }

    #[test]
    fn mostowski_examples() {
        let h = SymFn::parse("x", 1).unwrap();
        let m = mostowski_embed(&h);
        assert_eq!(m.eval(&[int(1)]).unwrap(), vec![int(1), int(1)]);
        assert_eq!(m.eval(&[rat(1, 10)]).unwrap(), vec![rat(1, 10), int(10)]);
        let seq: Vec<Vec<Rational>> = (0..=20)
            .map(|k| vec![Rational::new(1.into(), num_bigint::BigInt::from(1u64 << k))])
            .collect();
        let r = mostowski_check(&h, &seq).unwrap();
        assert!(r.graph_identity_exact && r.projection_inverts && r.norms_increasing);
        assert!(mostowski_check(&h, &[vec![int(0)]]).is_err());
    }

    #[test]
    fn stereographic_examples() {
        let phi = stereographic(1);
        assert_eq!(phi.eval(&[int(0)]).unwrap(), vec![int(0), int(-1)]);
        assert_eq!(phi.eval(&[int(1)]).unwrap(), vec![int(1), int(0)]);
        let x = vec![rat(3, 4), rat(-1, 5)];
        let y = stereographic(2).eval(&x).unwrap();
        assert_eq!(stereographic_inverse(2).eval(&y).unwrap(), x);
        assert_eq!(
            stereographic_inverse(1).eval(&[int(0), int(1)]),
            Err(Error::Pole)
        );
        // |phi_k|^2 = 1 as an identity
        for k in 1..=3 {
            assert!(stereographic(k)
                .norm_squared()
                .equivalent(&SymFn::one(k), 3));
        }
    }

    #[test]
    fn fit_examples() {
        let g = grid1(33);
        let cubic = SymFn::parse("1 - 2*x + x^3/3", 1).unwrap();
        let (fit, rep) = approximate_by_polynomial(&cubic, 4, 1, &g).unwrap();
        assert!(fit.equivalent(&cubic, 1));
        assert_eq!(rep.residual_sq, 0.0);
        let runge = SymFn::parse("1/(1+x^2)", 1).unwrap();
        let (_, r8) = approximate_by_polynomial(&runge, 8, 0, &g).unwrap();
        let (_, r4) = approximate_by_polynomial(&runge, 4, 0, &g).unwrap();
        assert!(r8.sup_error < r4.sup_error);
        let (c, _) = approximate_by_polynomial(&runge, 0, 0, &g).unwrap();
        let mean = g
            .iter()
            .map(|p| runge.eval(p).unwrap())
            .fold(Rational::zero(), |a, b| a + b)
            / int(33);
        assert_eq!(c.as_constant(), Some(&mean));
        assert!(approximate_by_polynomial(&runge, 5, 0, &grid1(3)).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(50))]

        #[test]
        fn stereographic_round_trip(seed in any::<u64>(), k in 1usize..4) {
            for x in random_points(seed, 5, k, 50) {
                let y = stereographic(k).eval(&x).unwrap();
                prop_assert_eq!(stereographic_inverse(k).eval(&y).unwrap(), x);
            }
        }

        #[test]
        fn closeness_is_symmetric_and_monotone(a in -20i64..20, b in -20i64..20, e in 1i64..40) {
            let g = grid1(11);
            let f = map(&["x^2"], 1);
            let h = SymMap::from_components(vec![SymFn::parse("x^2", 1).unwrap() + SymFn::parse("x", 1).unwrap().scale(&rat(a, 100)) + SymFn::constant(rat(b, 100), 1)]);
            let eps = Control::constant(rat(e, 100));
            let fwd = smu_close(&f, &h, &eps, 1, &g).unwrap().verdict;
            prop_assert_eq!(fwd, smu_close(&h, &f, &eps, 1, &g).unwrap().verdict);
            if fwd {
                prop_assert!(smu_close(&f, &h, &Control::constant(rat(e + 7, 100)), 1, &g).unwrap().verdict);
            }
        }

        #[test]
        fn trimming_ignores_pure_time_errors(c in 1i64..10) {
            // a t-only perturbation of size below eps never changes the verdict
            let xg = grid1(5);
            let tg: Vec<Rational> = (0..=8).map(|k| rat(k, 8)).collect();
            let h1 = map(&["x*t"], 2);
            let h2 = SymMap::from_components(vec![SymFn::parse("x*t", 2).unwrap() + SymFn::parse("t^3", 2).unwrap().scale(&rat(c, 100))]);
            let eps = Control::constant(rat(1, 10));
            prop_assert!(trimmed_close(&h1, &h2, &eps, 2, &xg, &tg).unwrap().verdict);
        }

        #[test]
        fn fiber_minimum_is_attained(s in 0i64..10) {
            let xg = grid1(4);
            let tg: Vec<Rational> = (0..=6).map(|k| rat(k, 6)).collect();
            let e = SymFn::parse("1 + x^2*t + (t - 1/3)^2", 2).unwrap() + SymFn::constant(rat(s, 3), 2);
            for m in min_over_fiber(&e, &xg, &tg).unwrap() {
                let mut hit = false;
                for t in &tg {
                    let mut p = m.x.clone();
                    p.push(t.clone());
                    let v = e.eval(&p).unwrap();
                    prop_assert!(m.min <= v);
                    hit |= m.min == v;
                }
                prop_assert!(hit);
            }
        }
    }
}
