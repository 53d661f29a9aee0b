//! Combinatorial derivative identities, each paired with an exact checker.
//!
//! The closed forms here are the right-hand sides; [`SymFn::derivative`] is
//! the oracle they are compared against.

use std::collections::HashMap;

use num_bigint::BigUint;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::error::Error;
use crate::par;
use crate::symexpr::{enumerate_compositions, int, random_points, MultiIndex, Rational, SymFn};

/// `sum over beta_1+..+beta_m = alpha of alpha!/(beta_1!..beta_m!)`, by enumeration.
pub fn multinomial_sum(alpha: &MultiIndex, m: usize) -> BigUint {
    let af = alpha.factorial();
    enumerate_compositions(alpha, m)
        .iter()
        .map(|betas| {
            &af / betas
                .iter()
                .fold(BigUint::one(), |acc, b| acc * b.factorial())
        })
        .sum()
}

fn ratio(num: BigUint, den: BigUint) -> Rational {
    Rational::new(num.into(), den.into())
}

/// `D^beta f` for every `beta <= alpha`, each built from a one-step-smaller entry.
pub fn derivative_table(f: &SymFn, alpha: &MultiIndex) -> HashMap<MultiIndex, SymFn> {
    let mut table: HashMap<MultiIndex, SymFn> = HashMap::new();
    for beta in alpha.lower_set() {
        let d = match beta.entries().iter().position(|&b| b > 0) {
            None => f.clone(),
            Some(i) => {
                let prev = beta
                    .checked_sub(&MultiIndex::unit(i, beta.arity()))
                    .unwrap();
                table[&prev].partial(i)
            }
        };
        table.insert(beta, d);
    }
    table
}

/// Leibniz rule for `D^alpha (f^m)` as a sum over ordered compositions of `alpha`.
pub fn leibniz_power(f: &SymFn, m: usize, alpha: &MultiIndex) -> SymFn {
    assert!(m >= 1);
    let table = derivative_table(f, alpha);
    let af = alpha.factorial();
    let mut acc = SymFn::zero(f.arity());
    for betas in enumerate_compositions(alpha, m) {
        let den = betas.iter().fold(BigUint::one(), |d, b| d * b.factorial());
        let mut term = SymFn::constant(ratio(af.clone(), den), f.arity());
        for b in &betas {
            term = term * &table[b];
        }
        acc = acc + term;
    }
    acc
}

/// `D^alpha (g h) = sum_{beta <= alpha} C(alpha, beta) D^beta g D^(alpha-beta) h`.
pub fn generalized_leibniz(g: &SymFn, h: &SymFn, alpha: &MultiIndex) -> SymFn {
    assert_eq!(g.arity(), h.arity(), "arity mismatch");
    let tg = derivative_table(g, alpha);
    let th = derivative_table(h, alpha);
    let af = alpha.factorial();
    let mut acc = SymFn::zero(g.arity());
    for beta in alpha.lower_set() {
        let rest = alpha.checked_sub(&beta).unwrap();
        let c = ratio(af.clone(), beta.factorial() * rest.factorial());
        acc = acc + SymFn::constant(c, g.arity()) * &tg[&beta] * &th[&rest];
    }
    acc
}

/// One element `(l_1..l_s; kappa_1..kappa_s)` of the partition index set.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Partition {
    pub multiplicities: Vec<u32>,
    pub parts: Vec<MultiIndex>,
}

/// All partitions of `alpha` into `k` nonzero parts, `kappa` strictly
/// increasing in lexicographic order, each with multiplicity `l_j > 0`.
pub fn faa_di_bruno_partitions(alpha: &MultiIndex, k: u32) -> Vec<Partition> {
    let candidates: Vec<MultiIndex> = alpha
        .lower_set()
        .into_iter()
        .filter(|b| !b.is_zero())
        .collect();
    let mut out = Vec::new();
    let mut stack = Partition {
        multiplicities: vec![],
        parts: vec![],
    };
    partitions_rec(&candidates, 0, alpha.clone(), k, &mut stack, &mut out);
    for p in &out {
        debug_assert_eq!(p.multiplicities.iter().sum::<u32>(), k);
        debug_assert_eq!(
            p.parts
                .iter()
                .zip(&p.multiplicities)
                .fold(MultiIndex::zeros(alpha.arity()), |a, (kp, &l)| a
                    .add(&kp.scale(l))),
            *alpha
        );
    }
    out
}

fn partitions_rec(
    candidates: &[MultiIndex],
    start: usize,
    rest: MultiIndex,
    k: u32,
    cur: &mut Partition,
    out: &mut Vec<Partition>,
) {
    if rest.is_zero() {
        if k == 0 {
            out.push(cur.clone());
        }
        return;
    }
    if k == 0 {
        return;
    }
    for (idx, kappa) in candidates.iter().enumerate().skip(start) {
        let mut remaining = rest.clone();
        for l in 1..=k {
            match remaining.checked_sub(kappa) {
                Some(r) => remaining = r,
                None => break,
            }
            cur.multiplicities.push(l);
            cur.parts.push(kappa.clone());
            partitions_rec(candidates, idx + 1, remaining.clone(), k - l, cur, out);
            cur.multiplicities.pop();
            cur.parts.pop();
        }
    }
}

/// `D^alpha (1 - 2 Delta)^{-1}` by the multivariate Faa di Bruno formula.
pub fn faa_di_bruno_reciprocal(delta: &SymFn, alpha: &MultiIndex) -> SymFn {
    let n = delta.arity();
    let u = SymFn::one(n) - delta.scale(&int(2));
    let inv = u.recip();
    if alpha.is_zero() {
        return inv;
    }
    let table = derivative_table(delta, alpha);
    let af = alpha.factorial();
    let mut acc = SymFn::zero(n);
    for k in 1..=alpha.order() {
        let mut inner = SymFn::zero(n);
        for p in faa_di_bruno_partitions(alpha, k) {
            let mut den = BigUint::one();
            let mut term = SymFn::one(n);
            for (kappa, &l) in p.parts.iter().zip(&p.multiplicities) {
                den *= crate::symexpr::factorial_u32(l) * kappa.factorial().pow(l);
                term = term * table[kappa].scale(&int(-2)).pow(l);
            }
            inner = inner + term.scale(&ratio(af.clone(), den));
        }
        let kf = crate::symexpr::factorial_u32(k);
        let sign = if k % 2 == 0 {
            Rational::one()
        } else {
            -Rational::one()
        };
        let coeff = SymFn::constant(sign * Rational::from_integer(kf.into()), n);
        acc = acc + coeff * inv.pow(k + 1) * inner;
    }
    acc
}

/// Outcome of one exact identity check.
#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct IdentityReport {
    pub identity: String,
    pub params: Value,
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub left: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub right: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness_point: Option<Vec<String>>,
}

pub use crate::report::Status;

impl IdentityReport {
    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("serializable")
    }
}

/// Compare two expressions exactly at `points`. Points where both sides have
/// a pole are skipped; a one-sided pole is a failure.
pub fn check_identity(
    name: &str,
    params: Value,
    lhs: &SymFn,
    rhs: &SymFn,
    points: &[Vec<Rational>],
) -> IdentityReport {
    let mut report = IdentityReport {
        identity: name.into(),
        params,
        status: Status::Pass,
        left: None,
        right: None,
        witness_point: None,
    };
    for p in points {
        let (l, r) = (lhs.eval(p), rhs.eval(p));
        let mismatch = match (&l, &r) {
            (Ok(a), Ok(b)) => a != b,
            (Err(Error::Pole), Err(Error::Pole)) => false,
            _ => true,
        };
        if mismatch {
            let show = |v: &Result<Rational, Error>| {
                v.as_ref()
                    .map_or_else(|e| e.to_string(), Rational::to_string)
            };
            report.status = Status::Fail;
            report.left = Some(show(&l));
            report.right = Some(show(&r));
            report.witness_point = Some(p.iter().map(Rational::to_string).collect());
            break;
        }
    }
    report
}

/// Dense random polynomial with integer coefficients in `[-3, 3]`.
pub fn random_polynomial(rng: &mut ChaCha8Rng, arity: usize, degree: u32) -> SymFn {
    let mut acc = SymFn::zero(arity);
    for alpha in MultiIndex::up_to_order(arity, degree) {
        let c: i64 = rng.gen_range(-3..=3);
        if c == 0 {
            continue;
        }
        let mut term = SymFn::from_int(c, arity);
        for (i, &e) in alpha.entries().iter().enumerate() {
            if e > 0 {
                term = term * SymFn::var(i, arity).pow(e);
            }
        }
        acc = acc + term;
    }
    acc
}

/// `multinomial_sum(alpha, m) == m^|alpha|` over every `alpha` of the given
/// arity with `|alpha| <= max_order` and every `1 <= m <= max_m`.
pub fn sweep_multinomial(arity: usize, max_order: u32, max_m: usize) -> Vec<IdentityReport> {
    let cases: Vec<(MultiIndex, usize)> = MultiIndex::up_to_order(arity, max_order)
        .into_iter()
        .flat_map(|a| (1..=max_m).map(move |m| (a.clone(), m)))
        .collect();
    par::map(&cases, |(alpha, m)| {
        let lhs = multinomial_sum(alpha, *m);
        let rhs = BigUint::from(*m).pow(alpha.order());
        let ok = lhs == rhs;
        IdentityReport {
            identity: "multinomial_sum".into(),
            params: json!({ "alpha": alpha, "m": m }),
            status: if ok { Status::Pass } else { Status::Fail },
            left: Some(lhs.to_string()),
            right: Some(rhs.to_string()),
            witness_point: None,
        }
    })
}

/// Random polynomial fixtures: arity cycles through `1..=3`, degree through `1..=3`.
pub fn polynomial_fixtures(seed: u64, count: usize) -> Vec<SymFn> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|i| random_polynomial(&mut rng, 1 + i % 3, 1 + (i / 3) as u32 % 3))
        .collect()
}

pub fn sweep_leibniz_power(
    seed: u64,
    polys: usize,
    max_order: u32,
    max_m: usize,
    points: usize,
) -> Vec<IdentityReport> {
    let fixtures = polynomial_fixtures(seed, polys);
    let cases: Vec<(usize, MultiIndex, usize)> = fixtures
        .iter()
        .enumerate()
        .flat_map(|(i, f)| {
            MultiIndex::up_to_order(f.arity(), max_order)
                .into_iter()
                .flat_map(move |a| (1..=max_m).map(move |m| (i, a.clone(), m)))
        })
        .collect();
    par::map(&cases, |(i, alpha, m)| {
        let f = &fixtures[*i];
        let pts = random_points(seed ^ (*i as u64) << 8, points, f.arity(), 16);
        let lhs = leibniz_power(f, *m, alpha);
        let rhs = f.pow(*m as u32).derivative(alpha);
        check_identity(
            "leibniz_power",
            json!({ "f": f.to_string(), "m": m, "alpha": alpha }),
            &lhs,
            &rhs,
            &pts,
        )
    })
}

pub fn sweep_generalized_leibniz(
    seed: u64,
    pairs: usize,
    max_order: u32,
    points: usize,
) -> Vec<IdentityReport> {
    let fixtures = polynomial_fixtures(seed, 2 * pairs);
    let cases: Vec<(usize, MultiIndex)> = (0..pairs)
        .flat_map(|i| {
            let arity = fixtures[2 * i].arity().max(fixtures[2 * i + 1].arity());
            MultiIndex::up_to_order(arity, max_order)
                .into_iter()
                .map(move |a| (i, a))
        })
        .collect();
    par::map(&cases, |(i, alpha)| {
        let n = alpha.arity();
        let g = fixtures[2 * i].with_arity(n);
        // a rational factor so the quotient rule is exercised too
        let h = (SymFn::one(n) + fixtures[2 * i + 1].with_arity(n).square()).recip();
        let pts = random_points(seed ^ (*i as u64) << 8, points, n, 16);
        let lhs = generalized_leibniz(&g, &h, alpha);
        let rhs = (&g * &h).derivative(alpha);
        check_identity(
            "generalized_leibniz",
            json!({ "g": g.to_string(), "h": h.to_string(), "alpha": alpha }),
            &lhs,
            &rhs,
            &pts,
        )
    })
}

pub fn sweep_faa_di_bruno(
    seed: u64,
    fixtures: usize,
    max_order: u32,
    points: usize,
) -> Vec<IdentityReport> {
    let deltas: Vec<SymFn> = polynomial_fixtures(seed, fixtures)
        .into_iter()
        .map(|f| f.scale(&Rational::new(1.into(), 8.into())))
        .collect();
    let cases: Vec<(usize, MultiIndex)> = deltas
        .iter()
        .enumerate()
        .flat_map(|(i, d)| {
            MultiIndex::up_to_order(d.arity(), max_order)
                .into_iter()
                .map(move |a| (i, a))
        })
        .collect();
    par::map(&cases, |(i, alpha)| {
        let delta = &deltas[*i];
        let u = SymFn::one(delta.arity()) - delta.scale(&int(2));
        let pts: Vec<Vec<Rational>> =
            random_points(seed ^ (*i as u64) << 8, 4 * points, delta.arity(), 16)
                .into_iter()
                .filter(|p| !u.eval(p).map_or(true, |v| v.is_zero()))
                .take(points)
                .collect();
        let lhs = faa_di_bruno_reciprocal(delta, alpha);
        let rhs = u.recip().derivative(alpha);
        check_identity(
            "faa_di_bruno_reciprocal",
            json!({ "delta": delta.to_string(), "alpha": alpha }),
            &lhs,
            &rhs,
            &pts,
        )
    })
}
