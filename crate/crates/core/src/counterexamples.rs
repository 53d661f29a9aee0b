//! Pathological fixtures: the two-wedge set `T`, the teardrop, and the
//! cone-mismatch obstruction for paths through the origin of `T`.
//!
//! The obstruction test only certifies one mechanism: the two one-sided
//! tangent directions of a path at the seam fall into cones whose union of
//! lines meets only at the origin.

use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par;
use crate::semialg::{AxisBox, Formula, SemialgebraicSet};
use crate::symexpr::{from_f64, int, rat, to_f64, Rational, SymFn, SymMap};

/// `{(4x^2 - y^2)(4y^2 - x^2) >= 0, y >= 0, x^2 + y^2 <= 4}`
/// union `{4x^2 - y^2 <= 0, (x^2 + y^2 - 1)(x^2 + y^2 - 4) <= 0, y >= 0}`.
pub fn set_t() -> SemialgebraicSet {
    SemialgebraicSet::parse(
        "((4*x^2 - y^2)*(4*y^2 - x^2) >= 0 and y >= 0 and x^2 + y^2 <= 4) \
         or (4*x^2 - y^2 <= 0 and (x^2 + y^2 - 1)*(x^2 + y^2 - 4) <= 0 and y >= 0)",
        AxisBox::new(vec![int(-2), int(-2)], vec![int(2), int(2)]),
    )
    .expect("fixture parses")
}

/// `{x >= 0, y^2 <= x^2 - x^4}`.
pub fn teardrop() -> SemialgebraicSet {
    SemialgebraicSet::parse(
        "x >= 0 and x^2 - x^4 - y^2 >= 0",
        AxisBox::new(vec![int(-1), int(-1)], vec![int(2), int(1)]),
    )
    .expect("fixture parses")
}

/// A path through `t0` given by one polynomial branch on each side.
#[derive(Clone, Debug)]
pub struct PathGerm {
    pub left: SymMap,
    pub right: SymMap,
    pub t0: Rational,
    pub mu: u32,
}

impl PathGerm {
    pub fn new(left: SymMap, right: SymMap, t0: Rational, mu: u32) -> Result<Self> {
        if left.dim() != right.dim() || left.arity() > 1 || right.arity() > 1 {
            return Err(Error::Hypothesis(
                "branches must be maps of one variable with equal target dimension".into(),
            ));
        }
        let (left, right) = (
            left.map_components(|c| c.with_arity(1)),
            right.map_components(|c| c.with_arity(1)),
        );
        if left.eval(std::slice::from_ref(&t0))? != right.eval(std::slice::from_ref(&t0))? {
            return Err(Error::Hypothesis("branches disagree at the seam".into()));
        }
        Ok(PathGerm {
            left,
            right,
            t0,
            mu,
        })
    }

    /// One analytic expression on both sides.
    pub fn analytic(map: SymMap) -> Result<Self> {
        Self::new(map.clone(), map, int(0), 0)
    }

    /// `t -> (t^(2mu+1), |t| t^(2mu))` on `[-1, 1]`.
    pub fn signed_power(mu: u32) -> Self {
        let t = SymFn::var(0, 1);
        let odd = t.pow(2 * mu + 1);
        let left = SymMap::new(vec![odd.clone(), -&odd], 1);
        let right = SymMap::new(vec![odd.clone(), odd], 1);
        Self::new(left, right, int(0), mu).expect("branches agree at 0")
    }

    pub fn eval(&self, t: &Rational) -> Result<Vec<Rational>> {
        let branch = if t < &self.t0 {
            &self.left
        } else {
            &self.right
        };
        branch.eval(std::slice::from_ref(t))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Tangent {
    pub side: Side,
    /// Lowest vanishing order of `alpha - alpha(t0)` at the seam.
    pub k: u32,
    /// `lim (alpha(t) - alpha(t0)) / |t - t0|^k`, exact.
    #[serde(serialize_with = "ser_rats")]
    pub leading: Vec<Rational>,
    pub direction: Vec<f64>,
}

fn ser_rats<S: serde::Serializer>(v: &[Rational], s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(v.iter().map(|q| q.to_string()))
}

/// One-sided tangent direction at the seam, normalized by `|t - t0|^k`.
pub fn one_sided_tangent(alpha: &PathGerm, side: Side) -> Result<Tangent> {
    let branch = match side {
        Side::Left => &alpha.left,
        Side::Right => &alpha.right,
    };
    let shift = [SymFn::var(0, 1) + SymFn::constant(alpha.t0.clone(), 1)];
    let mut coeffs: Vec<Vec<Rational>> = Vec::with_capacity(branch.dim());
    for c in branch.components() {
        let cs = c
            .compose(&shift)
            .coefficients_in(0)
            .ok_or_else(|| Error::Hypothesis("path branch is not polynomial".into()))?;
        coeffs.push(
            cs.iter()
                .map(|f| f.eval(&[int(0)]))
                .collect::<Result<_>>()?,
        );
    }
    let k = coeffs
        .iter()
        .filter_map(|cs| {
            cs.iter()
                .enumerate()
                .skip(1)
                .find(|(_, v)| !v.is_zero())
                .map(|(i, _)| i)
        })
        .min()
        .ok_or_else(|| Error::Hypothesis(format!("{side:?} branch is constant")))?;
    let sign = if side == Side::Left && k % 2 == 1 {
        -int(1)
    } else {
        int(1)
    };
    let leading: Vec<Rational> = coeffs
        .iter()
        .map(|cs| cs.get(k).cloned().unwrap_or_else(Rational::zero) * &sign)
        .collect();
    let norm = leading
        .iter()
        .map(|v| to_f64(v).powi(2))
        .sum::<f64>()
        .sqrt();
    let direction = leading.iter().map(|v| to_f64(v) / norm).collect();
    Ok(Tangent {
        side,
        k: k as u32,
        leading,
        direction,
    })
}

/// Two closed double cones in the plane.
#[derive(Clone, Debug)]
pub struct ConePair {
    pub c1: Formula,
    pub c2: Formula,
}

/// The lines through the left and right wedges of `T` at the origin.
pub fn cones_of_t() -> ConePair {
    let c1 =
        Formula::parse("x*y <= 0 and (4*x^2 - y^2)*(4*y^2 - x^2) >= 0", 2).expect("cone parses");
    let c2 =
        Formula::parse("x*y >= 0 and (4*x^2 - y^2)*(4*y^2 - x^2) >= 0", 2).expect("cone parses");
    ConePair { c1, c2 }
}

#[derive(Clone, Debug, Serialize)]
pub struct ConeReport {
    pub directions: usize,
    pub in_c1: usize,
    pub in_c2: usize,
    pub overlaps: usize,
    /// Points of `T` on the small circle lie in the cone of their half-plane.
    pub matches_set: bool,
    pub pass: bool,
}

/// Trivial intersection on `n` unit directions, and agreement with `T` on
/// the circle of the given radius.
pub fn validate_cones(
    cones: &ConePair,
    set: &SemialgebraicSet,
    n: usize,
    radius: f64,
) -> Result<ConeReport> {
    let rows = par::try_map_range(n, |i| -> Result<(bool, bool, bool)> {
        let a = std::f64::consts::TAU * i as f64 / n as f64;
        let d = [from_f64(a.cos()), from_f64(a.sin())];
        let (in1, in2) = (cones.c1.eval(&d)?, cones.c2.eval(&d)?);
        let p = [from_f64(radius * a.cos()), from_f64(radius * a.sin())];
        let ok = if set.contains(&p)? {
            if p[0].is_negative() {
                in1
            } else if p[0].is_positive() {
                in2
            } else {
                in1 || in2
            }
        } else {
            true
        };
        Ok((in1, in2, ok))
    })?;
    let mut r = ConeReport {
        directions: n,
        in_c1: 0,
        in_c2: 0,
        overlaps: 0,
        matches_set: true,
        pass: false,
    };
    for (a, b, ok) in rows {
        r.in_c1 += a as usize;
        r.in_c2 += b as usize;
        r.overlaps += (a && b) as usize;
        r.matches_set &= ok;
    }
    r.pass = r.overlaps == 0 && r.matches_set;
    Ok(r)
}

/// Sampled membership of the path image: `alpha(t)` in `S` for all `t`.
pub fn path_image_in_set(
    alpha: &PathGerm,
    set: &SemialgebraicSet,
    tgrid: &[Rational],
) -> Result<bool> {
    Ok(par::try_map(tgrid, |t| set.contains(&alpha.eval(t)?))?
        .into_iter()
        .all(|b| b))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    Obstructed,
    NotObstructed,
    NotApplicable,
}

#[derive(Clone, Debug, Serialize)]
pub struct ObstructionReport {
    pub verdict: Verdict,
    pub left: Tangent,
    pub right: Tangent,
    pub reason: String,
}

/// Cone-mismatch test. When `image` is given, a path leaving the set on the
/// grid is `NOT_APPLICABLE`; one tangent line on both sides is
/// `NOT_OBSTRUCTED`; directions in opposite cones are `OBSTRUCTED`.
pub fn analytic_obstruction_check(
    alpha: &PathGerm,
    cones: &ConePair,
    image: Option<(&SemialgebraicSet, &[Rational])>,
) -> Result<ObstructionReport> {
    let left = one_sided_tangent(alpha, Side::Left)?;
    let right = one_sided_tangent(alpha, Side::Right)?;
    let report = |verdict, reason: &str| ObstructionReport {
        verdict,
        left: left.clone(),
        right: right.clone(),
        reason: reason.into(),
    };
    if let Some((set, grid)) = image {
        if !path_image_in_set(alpha, set, grid)? {
            return Ok(report(
                Verdict::NotApplicable,
                "path leaves the set on the sample grid",
            ));
        }
    }
    let (l, r) = (&left.leading, &right.leading);
    if l.len() == 2 && &l[0] * &r[1] == &l[1] * &r[0] {
        return Ok(report(
            Verdict::NotObstructed,
            "both sides share one tangent line",
        ));
    }
    let side_cones =
        |v: &[Rational]| -> Result<(bool, bool)> { Ok((cones.c1.eval(v)?, cones.c2.eval(v)?)) };
    let (l1, l2) = side_cones(l)?;
    let (r1, r2) = side_cones(r)?;
    if !(l1 || l2) || !(r1 || r2) {
        return Err(Error::Hypothesis(
            "a tangent direction lies in neither cone".into(),
        ));
    }
    if (l1 && r2) || (l2 && r1) {
        Ok(report(
            Verdict::Obstructed,
            "one-sided tangents lie in cones meeting only at the origin",
        ))
    } else {
        Ok(report(
            Verdict::NotObstructed,
            "both tangents lie in the same cone",
        ))
    }
}

/// `n` equally spaced points of `[lo, hi]`.
pub fn t_grid(lo: &Rational, hi: &Rational, n: usize) -> Vec<Rational> {
    let steps = (n.max(2) - 1) as i64;
    (0..n as i64)
        .map(|k| lo + (hi - lo) * rat(k, steps))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn t_membership() {
        let t = set_t();
        assert!(t.contains(&[int(0), int(0)]).unwrap());
        assert!(t.contains(&[rat(1, 10), rat(1, 10)]).unwrap());
        assert!(!t.contains(&[int(0), rat(1, 2)]).unwrap());
        assert!(t.contains(&[int(0), rat(3, 2)]).unwrap());
    }

    #[test]
    fn teardrop_membership() {
        let s = teardrop();
        assert!(s.contains(&[rat(1, 2), int(0)]).unwrap());
        assert!(s.contains(&[int(1), int(0)]).unwrap());
        assert!(!s.contains(&[int(2), int(0)]).unwrap());
    }

    #[test]
    fn tangents() {
        let p = PathGerm::signed_power(1);
        let r = one_sided_tangent(&p, Side::Right).unwrap();
        assert_eq!((r.k, r.leading.clone()), (3, vec![int(1), int(1)]));
        let l = one_sided_tangent(&p, Side::Left).unwrap();
        assert_eq!(l.leading, vec![int(-1), int(1)]);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert!((l.direction[0] + s).abs() < 1e-15 && (l.direction[1] - s).abs() < 1e-15);
        let line = PathGerm::analytic(SymMap::parse(&["x", "0"], 1).unwrap()).unwrap();
        for side in [Side::Left, Side::Right] {
            let tg = one_sided_tangent(&line, side).unwrap();
            assert_eq!(
                (tg.k, tg.leading.clone()),
                (
                    1,
                    vec![if side == Side::Left { int(-1) } else { int(1) }, int(0)]
                )
            );
        }
        let constant = PathGerm::analytic(SymMap::parse(&["1", "2"], 1).unwrap()).unwrap();
        assert!(one_sided_tangent(&constant, Side::Right).is_err());
    }

    #[test]
    fn obstruction_verdicts() {
        let t = set_t();
        let cones = cones_of_t();
        let grid = t_grid(&rat(-1, 4), &rat(1, 4), 1000);
        for mu in 1..=3 {
            let p = PathGerm::signed_power(mu);
            assert!(path_image_in_set(&p, &t, &grid).unwrap());
            let r = analytic_obstruction_check(&p, &cones, Some((&t, &grid))).unwrap();
            assert_eq!(r.verdict, Verdict::Obstructed);
        }
        let cube = PathGerm::analytic(SymMap::parse(&["x^3", "x^3"], 1).unwrap()).unwrap();
        assert_eq!(
            analytic_obstruction_check(&cube, &cones, None)
                .unwrap()
                .verdict,
            Verdict::NotObstructed
        );
        let diag = PathGerm::analytic(SymMap::parse(&["x", "x"], 1).unwrap()).unwrap();
        assert_eq!(
            analytic_obstruction_check(&diag, &cones, Some((&t, &grid)))
                .unwrap()
                .verdict,
            Verdict::NotApplicable
        );
        let steep = PathGerm::analytic(SymMap::parse(&["x", "2*x"], 1).unwrap()).unwrap();
        assert!(!path_image_in_set(&steep, &t, &grid).unwrap());
        let still = PathGerm::analytic(SymMap::parse(&["0", "3/2 + x^2"], 1).unwrap()).unwrap();
        assert!(path_image_in_set(&still, &t, &t_grid(&rat(-1, 10), &rat(1, 10), 50)).unwrap());
    }

    #[test]
    fn cone_pair_is_valid() {
        let r = validate_cones(&cones_of_t(), &set_t(), 720, 1e-3).unwrap();
        assert!(r.pass, "{r:?}");
        assert!(r.in_c1 > 0 && r.in_c2 > 0);
    }

    proptest! {
        #[test]
        fn tangent_scale_invariant(num in 1i64..50, den in 1i64..50, mu in 1u32..4) {
            let c = SymFn::constant(rat(num, den), 1);
            let p = PathGerm::signed_power(mu);
            let scaled = PathGerm::new(
                p.left.map_components(|f| &c * f),
                p.right.map_components(|f| &c * f),
                int(0),
                mu,
            ).unwrap();
            for side in [Side::Left, Side::Right] {
                let a = one_sided_tangent(&p, side).unwrap();
                let b = one_sided_tangent(&scaled, side).unwrap();
                prop_assert_eq!(a.k, b.k);
                prop_assert!(a.direction.iter().zip(&b.direction).all(|(u, v)| (u - v).abs() < 1e-15));
            }
        }
    }
}
