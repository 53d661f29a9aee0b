//! Exact expression algebra over named variables.
//!
//! A [`SymFn`] is an immutable DAG of rational constants, variables, sums,
//! products, quotients and non-negative integer powers. Nodes are shared
//! through `Arc`, so derivatives and substitutions reuse subexpressions and
//! evaluation visits each distinct node once.

mod multi_index;
pub(crate) mod parse;
mod poly;
mod program;

pub(crate) use multi_index::factorial as factorial_u32;
pub use multi_index::{enumerate_compositions, MultiIndex};
pub use parse::{parse, variable_name, ParseError};
pub use poly::Poly;
pub use program::Program;

use std::collections::HashMap;
use std::fmt;
use std::ops;
use std::sync::{Arc, OnceLock};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Exact arbitrary-precision rational.
pub type Rational = BigRational;

/// Shorthand for the rational `num/den`.
pub fn rat(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// Exact conversion of a finite `f64` (every finite double is a dyadic rational).
pub fn from_f64(x: f64) -> Rational {
    Rational::from_float(x).expect("finite float")
}

pub fn to_f64(q: &Rational) -> f64 {
    if let Some(x) = q
        .to_f64()
        .filter(|x| x.is_finite() && (*x != 0.0 || q.is_zero()))
    {
        return x;
    }
    let shift = q.numer().bits() as i64 - q.denom().bits() as i64;
    if shift > 1100 {
        return if q.is_negative() {
            f64::NEG_INFINITY
        } else {
            f64::INFINITY
        };
    }
    if shift < -1100 {
        return 0.0;
    }
    let two = Rational::from_integer(BigInt::from(2));
    let scaled = if shift >= 0 {
        q / num_traits::pow(two, shift as usize)
    } else {
        q * num_traits::pow(two, (-shift) as usize)
    };
    scaled.to_f64().unwrap_or(0.0) * 2f64.powi(shift as i32)
}

#[derive(Debug)]
pub(crate) enum Node {
    Const(Rational),
    Var(usize),
    Add(Expr, Expr),
    Mul(Expr, Expr),
    Div(Expr, Expr),
    Pow(Expr, u32),
    Neg(Expr),
}

#[derive(Debug)]
pub(crate) struct NodeData {
    pub(crate) node: Node,
    /// Bit i set when variable i occurs below this node (bit 63 covers i >= 63).
    pub(crate) vars: u64,
}

pub(crate) type Expr = Arc<NodeData>;

fn var_bit(i: usize) -> u64 {
    1u64 << i.min(63)
}

fn mk(node: Node) -> Expr {
    let vars = match &node {
        Node::Const(_) => 0,
        Node::Var(i) => var_bit(*i),
        Node::Add(a, b) | Node::Mul(a, b) | Node::Div(a, b) => a.vars | b.vars,
        Node::Pow(a, _) | Node::Neg(a) => a.vars,
    };
    Arc::new(NodeData { node, vars })
}

fn as_const(e: &Expr) -> Option<&Rational> {
    match &e.node {
        Node::Const(c) => Some(c),
        _ => None,
    }
}

fn e_const(c: Rational) -> Expr {
    mk(Node::Const(c))
}

fn e_add(a: &Expr, b: &Expr) -> Expr {
    match (as_const(a), as_const(b)) {
        (Some(x), Some(y)) => e_const(x + y),
        (Some(x), _) if x.is_zero() => b.clone(),
        (_, Some(y)) if y.is_zero() => a.clone(),
        _ => mk(Node::Add(a.clone(), b.clone())),
    }
}

fn e_neg(a: &Expr) -> Expr {
    match &a.node {
        Node::Const(c) => e_const(-c),
        Node::Neg(inner) => inner.clone(),
        _ => mk(Node::Neg(a.clone())),
    }
}

fn e_sub(a: &Expr, b: &Expr) -> Expr {
    e_add(a, &e_neg(b))
}

fn e_mul(a: &Expr, b: &Expr) -> Expr {
    match (as_const(a), as_const(b)) {
        (Some(x), Some(y)) => e_const(x * y),
        (Some(x), _) if x.is_zero() => a.clone(),
        (_, Some(y)) if y.is_zero() => b.clone(),
        (Some(x), _) if x.is_one() => b.clone(),
        (_, Some(y)) if y.is_one() => a.clone(),
        (Some(x), _) if (-x).is_one() => e_neg(b),
        (_, Some(y)) if (-y).is_one() => e_neg(a),
        _ => mk(Node::Mul(a.clone(), b.clone())),
    }
}

fn e_div(a: &Expr, b: &Expr) -> Result<Expr> {
    match (as_const(a), as_const(b)) {
        (_, Some(y)) if y.is_zero() => Err(Error::ZeroDenominator),
        (Some(x), Some(y)) => Ok(e_const(x / y)),
        (Some(x), _) if x.is_zero() => Ok(a.clone()),
        (_, Some(y)) if y.is_one() => Ok(a.clone()),
        (_, Some(y)) => Ok(e_mul(&e_const(y.recip()), a)),
        _ => Ok(mk(Node::Div(a.clone(), b.clone()))),
    }
}

fn e_pow(a: &Expr, k: u32) -> Expr {
    match (k, as_const(a)) {
        (0, _) => e_const(Rational::one()),
        (1, _) => a.clone(),
        (_, Some(c)) => e_const(num_traits::pow(c.clone(), k as usize)),
        _ => mk(Node::Pow(a.clone(), k)),
    }
}

/// A rational-function expression in `arity` variables.
#[derive(Clone)]
pub struct SymFn {
    pub(crate) root: Expr,
    arity: usize,
    program: Arc<OnceLock<Program>>,
}

impl fmt::Debug for SymFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SymFn[{}]({})", self.arity, self)
    }
}

impl SymFn {
    pub(crate) fn from_expr(root: Expr, arity: usize) -> Self {
        SymFn {
            root,
            arity,
            program: Arc::new(OnceLock::new()),
        }
    }

    pub fn constant(c: Rational, arity: usize) -> Self {
        Self::from_expr(e_const(c), arity)
    }

    pub fn from_int(n: i64, arity: usize) -> Self {
        Self::constant(int(n), arity)
    }

    pub fn zero(arity: usize) -> Self {
        Self::constant(Rational::zero(), arity)
    }

    pub fn one(arity: usize) -> Self {
        Self::constant(Rational::one(), arity)
    }

    /// The coordinate function `x_{i+1}` (zero-based index `i`).
    pub fn var(i: usize, arity: usize) -> Self {
        assert!(
            i < arity,
            "variable index {i} out of range for arity {arity}"
        );
        Self::from_expr(mk(Node::Var(i)), arity)
    }

    /// Parse the textual grammar with the given number of variables.
    pub fn parse(text: &str, arity: usize) -> Result<Self> {
        parse(text, arity).map_err(Error::from)
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    /// Same expression viewed as a function of `arity` variables.
    pub fn with_arity(&self, arity: usize) -> Self {
        assert!(arity >= self.max_var_index().map_or(0, |i| i + 1));
        Self::from_expr(self.root.clone(), arity)
    }

    fn join_arity(&self, other: &SymFn) -> usize {
        self.arity.max(other.arity)
    }

    pub fn as_constant(&self) -> Option<&Rational> {
        as_const(&self.root)
    }

    pub fn is_zero_expr(&self) -> bool {
        self.as_constant().is_some_and(Zero::is_zero)
    }

    pub fn depends_on(&self, i: usize) -> bool {
        if i >= 63 {
            return self.root.vars & var_bit(63) != 0;
        }
        self.root.vars & var_bit(i) != 0
    }

    fn max_var_index(&self) -> Option<usize> {
        let mask = self.root.vars;
        if mask == 0 {
            return None;
        }
        if mask & var_bit(63) == 0 {
            return Some(63 - mask.leading_zeros() as usize);
        }
        let mut best = None;
        visit(&self.root, &mut |n| {
            if let Node::Var(i) = n.node {
                best = Some(best.map_or(i, |b: usize| b.max(i)));
            }
        });
        best
    }

    pub fn checked_div(&self, other: &SymFn) -> Result<SymFn> {
        Ok(Self::from_expr(
            e_div(&self.root, &other.root)?,
            self.join_arity(other),
        ))
    }

    pub fn pow(&self, k: u32) -> SymFn {
        Self::from_expr(e_pow(&self.root, k), self.arity)
    }

    pub fn scale(&self, c: &Rational) -> SymFn {
        Self::from_expr(e_mul(&e_const(c.clone()), &self.root), self.arity)
    }

    /// `1/self`; panics when `self` is the literal zero.
    pub fn recip(&self) -> SymFn {
        SymFn::one(self.arity)
            .checked_div(self)
            .expect("reciprocal of the zero expression")
    }

    pub fn square(&self) -> SymFn {
        self.pow(2)
    }

    /// Partial derivative with respect to variable `i` (zero-based).
    pub fn partial(&self, i: usize) -> SymFn {
        let mut memo = HashMap::new();
        Self::from_expr(diff(&self.root, i, &mut memo), self.arity)
    }

    /// `D^alpha self`. `|alpha| = 0` returns a clone of `self`.
    pub fn derivative(&self, alpha: &MultiIndex) -> SymFn {
        assert_eq!(alpha.arity(), self.arity, "multi-index arity mismatch");
        let mut root = self.root.clone();
        for (i, &k) in alpha.entries().iter().enumerate() {
            for _ in 0..k {
                if root.vars & var_bit(i) == 0 && i < 63 {
                    return SymFn::zero(self.arity);
                }
                let mut memo = HashMap::new();
                root = diff(&root, i, &mut memo);
            }
        }
        Self::from_expr(root, self.arity)
    }

    pub fn gradient(&self) -> Vec<SymFn> {
        (0..self.arity).map(|i| self.partial(i)).collect()
    }

    /// Replace variable `i` by `args[i]`; the result has the arity of the arguments.
    pub fn compose(&self, args: &[SymFn]) -> SymFn {
        assert!(
            args.len() >= self.arity,
            "compose needs one argument per variable"
        );
        let arity = args.iter().map(SymFn::arity).max().unwrap_or(0);
        let mut memo = HashMap::new();
        let exprs: Vec<Expr> = args.iter().map(|a| a.root.clone()).collect();
        Self::from_expr(subst(&self.root, &exprs, &mut memo), arity)
    }

    pub fn program(&self) -> &Program {
        self.program.get_or_init(|| Program::compile(&self.root))
    }

    /// Exact evaluation; `Err(Pole)` when a denominator vanishes.
    pub fn eval(&self, point: &[Rational]) -> Result<Rational> {
        assert!(point.len() >= self.arity, "point has too few coordinates");
        self.program().eval_exact(point)
    }

    /// Lossy floating evaluation for sampling code.
    pub fn eval_f64(&self, point: &[f64]) -> Result<f64> {
        self.program().eval_f64(point)
    }

    /// Expand into a sparse polynomial; `None` if a non-constant denominator occurs.
    pub fn to_poly(&self) -> Option<Poly> {
        let mut memo: HashMap<*const NodeData, Option<Poly>> = HashMap::new();
        to_poly(&self.root, self.arity, &mut memo)
    }

    /// Coefficients `c_0, c_1, ...` with `self = sum c_k x_var^k`, each free of
    /// `x_var`. `None` when `x_var` occurs in a denominator.
    pub fn coefficients_in(&self, var: usize) -> Option<Vec<SymFn>> {
        let mut memo = HashMap::new();
        let coeffs = coeffs_in(&self.root, var, &mut memo)?;
        Some(
            coeffs
                .into_iter()
                .map(|e| SymFn::from_expr(e, self.arity))
                .collect(),
        )
    }

    /// Number of distinct nodes in the DAG.
    pub fn node_count(&self) -> usize {
        let mut n = 0;
        visit(&self.root, &mut |_| n += 1);
        n
    }

    /// Total degree when `self` is a polynomial.
    pub fn polynomial_degree(&self) -> Option<u32> {
        self.to_poly().map(|p| p.total_degree())
    }

    /// Decide `self == other` as functions.
    ///
    /// Polynomials are compared on a full tensor grid of `(deg+1)^arity`
    /// points; other expressions at 20 seeded random rational points (poles
    /// on either side are skipped, a one-sided pole is a mismatch).
    pub fn equivalent(&self, other: &SymFn, seed: u64) -> bool {
        let arity = self.join_arity(other);
        let (a, b) = (self.with_arity(arity), other.with_arity(arity));
        if let (Some(pa), Some(pb)) = (a.to_poly(), b.to_poly()) {
            let deg = pa.total_degree().max(pb.total_degree()) as usize;
            let diff = &pa - &pb;
            let axis: Vec<Rational> = (0..=deg as i64).map(|k| int(k)).collect();
            return tensor_points(&axis, arity).all(|p| diff.eval(&p).is_zero());
        }
        let pts = random_points(seed, 20, arity, 64);
        pts.iter().all(|p| match (a.eval(p), b.eval(p)) {
            (Ok(x), Ok(y)) => x == y,
            (Err(_), Err(_)) => true,
            _ => false,
        })
    }
}

/// Iterate all points of `axis^arity`.
pub(crate) fn tensor_points(
    axis: &[Rational],
    arity: usize,
) -> impl Iterator<Item = Vec<Rational>> + '_ {
    let n = axis.len();
    let total = n.checked_pow(arity as u32).unwrap_or(usize::MAX);
    (0..total).map(move |mut idx| {
        (0..arity)
            .map(|_| {
                let q = axis[idx % n].clone();
                idx /= n;
                q
            })
            .collect()
    })
}

/// Seeded rational points with coordinates `p/q`, `|p/q| <= 2`, `q <= max_den`.
pub fn random_points(seed: u64, count: usize, arity: usize, max_den: i64) -> Vec<Vec<Rational>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            (0..arity)
                .map(|_| {
                    let den = rng.gen_range(1..=max_den);
                    let num = rng.gen_range(-2 * den..=2 * den);
                    rat(num, den)
                })
                .collect()
        })
        .collect()
}

fn visit(root: &Expr, f: &mut dyn FnMut(&NodeData)) {
    let mut seen = std::collections::HashSet::new();
    let mut stack = vec![root.clone()];
    while let Some(e) = stack.pop() {
        if !seen.insert(Arc::as_ptr(&e)) {
            continue;
        }
        f(&e);
        match &e.node {
            Node::Add(a, b) | Node::Mul(a, b) | Node::Div(a, b) => {
                stack.push(a.clone());
                stack.push(b.clone());
            }
            Node::Pow(a, _) | Node::Neg(a) => stack.push(a.clone()),
            Node::Const(_) | Node::Var(_) => {}
        }
    }
}

fn diff(e: &Expr, i: usize, memo: &mut HashMap<*const NodeData, Expr>) -> Expr {
    if i < 63 && e.vars & var_bit(i) == 0 {
        return e_const(Rational::zero());
    }
    let key = Arc::as_ptr(e);
    if let Some(d) = memo.get(&key) {
        return d.clone();
    }
    let d = match &e.node {
        Node::Const(_) => e_const(Rational::zero()),
        Node::Var(j) => e_const(if *j == i {
            Rational::one()
        } else {
            Rational::zero()
        }),
        Node::Add(a, b) => {
            let (da, db) = (diff(a, i, memo), diff(b, i, memo));
            e_add(&da, &db)
        }
        Node::Neg(a) => e_neg(&diff(a, i, memo)),
        Node::Mul(a, b) => {
            let (da, db) = (diff(a, i, memo), diff(b, i, memo));
            e_add(&e_mul(&da, b), &e_mul(a, &db))
        }
        Node::Div(a, b) => {
            let (da, db) = (diff(a, i, memo), diff(b, i, memo));
            if as_const(&db).is_some_and(Zero::is_zero) {
                e_div(&da, b).expect("non-zero denominator")
            } else {
                let num = e_sub(&e_mul(&da, b), &e_mul(a, &db));
                e_div(&num, &e_pow(b, 2)).expect("non-zero denominator")
            }
        }
        Node::Pow(a, k) => {
            let da = diff(a, i, memo);
            let coeff = e_const(int(*k as i64));
            e_mul(&e_mul(&coeff, &e_pow(a, k - 1)), &da)
        }
    };
    memo.insert(key, d.clone());
    d
}

fn subst(e: &Expr, args: &[Expr], memo: &mut HashMap<*const NodeData, Expr>) -> Expr {
    let key = Arc::as_ptr(e);
    if let Some(r) = memo.get(&key) {
        return r.clone();
    }
    let r = match &e.node {
        Node::Const(_) => e.clone(),
        Node::Var(j) => args[*j].clone(),
        Node::Add(a, b) => e_add(&subst(a, args, memo), &subst(b, args, memo)),
        Node::Mul(a, b) => e_mul(&subst(a, args, memo), &subst(b, args, memo)),
        Node::Div(a, b) => {
            let (na, nb) = (subst(a, args, memo), subst(b, args, memo));
            // a denominator folding to literal zero keeps the pole explicit
            e_div(&na, &nb).unwrap_or_else(|_| mk(Node::Div(na, nb)))
        }
        Node::Pow(a, k) => e_pow(&subst(a, args, memo), *k),
        Node::Neg(a) => e_neg(&subst(a, args, memo)),
    };
    memo.insert(key, r.clone());
    r
}

fn to_poly(
    e: &Expr,
    arity: usize,
    memo: &mut HashMap<*const NodeData, Option<Poly>>,
) -> Option<Poly> {
    let key = Arc::as_ptr(e);
    if let Some(p) = memo.get(&key) {
        return p.clone();
    }
    let p = match &e.node {
        Node::Const(c) => Some(Poly::constant(c.clone(), arity)),
        Node::Var(j) => Some(Poly::var(*j, arity)),
        Node::Add(a, b) => Some(&to_poly(a, arity, memo)? + &to_poly(b, arity, memo)?),
        Node::Mul(a, b) => Some(&to_poly(a, arity, memo)? * &to_poly(b, arity, memo)?),
        Node::Neg(a) => Some(-&to_poly(a, arity, memo)?),
        Node::Pow(a, k) => Some(to_poly(a, arity, memo)?.pow(*k)),
        Node::Div(a, b) => {
            let pb = to_poly(b, arity, memo)?;
            let c = pb.as_constant()?;
            if c.is_zero() {
                None
            } else {
                Some(to_poly(a, arity, memo)?.scale(&c.recip()))
            }
        }
    };
    memo.insert(key, p.clone());
    p
}

fn poly_add(a: &[Expr], b: &[Expr]) -> Vec<Expr> {
    let n = a.len().max(b.len());
    let zero = e_const(Rational::zero());
    (0..n)
        .map(|k| e_add(a.get(k).unwrap_or(&zero), b.get(k).unwrap_or(&zero)))
        .collect()
}

fn poly_mul(a: &[Expr], b: &[Expr]) -> Vec<Expr> {
    let mut out = vec![e_const(Rational::zero()); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] = e_add(&out[i + j], &e_mul(x, y));
        }
    }
    out
}

fn coeffs_in(
    e: &Expr,
    var: usize,
    memo: &mut HashMap<*const NodeData, Option<Vec<Expr>>>,
) -> Option<Vec<Expr>> {
    if var < 63 && e.vars & var_bit(var) == 0 {
        return Some(vec![e.clone()]);
    }
    let key = Arc::as_ptr(e);
    if let Some(c) = memo.get(&key) {
        return c.clone();
    }
    let c = match &e.node {
        Node::Const(_) => Some(vec![e.clone()]),
        Node::Var(j) if *j == var => {
            Some(vec![e_const(Rational::zero()), e_const(Rational::one())])
        }
        Node::Var(_) => Some(vec![e.clone()]),
        Node::Add(a, b) => Some(poly_add(
            &coeffs_in(a, var, memo)?,
            &coeffs_in(b, var, memo)?,
        )),
        Node::Mul(a, b) => Some(poly_mul(
            &coeffs_in(a, var, memo)?,
            &coeffs_in(b, var, memo)?,
        )),
        Node::Neg(a) => Some(coeffs_in(a, var, memo)?.iter().map(e_neg).collect()),
        Node::Pow(a, k) => {
            let base = coeffs_in(a, var, memo)?;
            let mut acc = vec![e_const(Rational::one())];
            for _ in 0..*k {
                acc = poly_mul(&acc, &base);
            }
            Some(acc)
        }
        Node::Div(a, b) => {
            if var >= 63 || b.vars & var_bit(var) != 0 {
                None
            } else {
                let ca = coeffs_in(a, var, memo)?;
                ca.iter().map(|x| e_div(x, b).ok()).collect()
            }
        }
    };
    memo.insert(key, c.clone());
    c
}

macro_rules! binop {
    ($tr:ident, $method:ident, $build:expr) => {
        impl ops::$tr<&SymFn> for &SymFn {
            type Output = SymFn;
            fn $method(self, rhs: &SymFn) -> SymFn {
                let build: fn(&Expr, &Expr) -> Expr = $build;
                SymFn::from_expr(build(&self.root, &rhs.root), self.join_arity(rhs))
            }
        }
        impl ops::$tr<SymFn> for SymFn {
            type Output = SymFn;
            fn $method(self, rhs: SymFn) -> SymFn {
                ops::$tr::$method(&self, &rhs)
            }
        }
        impl ops::$tr<&SymFn> for SymFn {
            type Output = SymFn;
            fn $method(self, rhs: &SymFn) -> SymFn {
                ops::$tr::$method(&self, rhs)
            }
        }
        impl ops::$tr<SymFn> for &SymFn {
            type Output = SymFn;
            fn $method(self, rhs: SymFn) -> SymFn {
                ops::$tr::$method(self, &rhs)
            }
        }
    };
}

binop!(Add, add, e_add);
binop!(Sub, sub, e_sub);
binop!(Mul, mul, e_mul);
binop!(Div, div, |a, b| e_div(a, b)
    .expect("division by the zero expression"));

impl ops::Neg for &SymFn {
    type Output = SymFn;
    fn neg(self) -> SymFn {
        SymFn::from_expr(e_neg(&self.root), self.arity)
    }
}

impl ops::Neg for SymFn {
    type Output = SymFn;
    fn neg(self) -> SymFn {
        -&self
    }
}

/// Operator precedence used by the printer.
fn prec(n: &Node) -> u8 {
    match n {
        Node::Add(..) => 1,
        Node::Neg(_) => 2,
        Node::Mul(..) | Node::Div(..) => 3,
        Node::Pow(..) => 4,
        Node::Const(c) if !c.is_integer() || c.is_negative() => 3,
        Node::Const(_) | Node::Var(_) => 5,
    }
}

struct Printer {
    arity: usize,
}

impl Printer {
    fn write(&self, e: &Expr, out: &mut String) {
        match &e.node {
            Node::Const(c) => {
                if c.is_integer() {
                    out.push_str(&c.numer().to_string());
                } else {
                    out.push_str(&format!("{}/{}", c.numer(), c.denom()));
                }
            }
            Node::Var(i) => out.push_str(&variable_name(*i, self.arity)),
            Node::Add(a, b) => {
                self.write_prec(a, 1, out);
                if let Node::Neg(inner) = &b.node {
                    out.push_str(" - ");
                    self.write_prec(inner, 2, out);
                } else {
                    out.push_str(" + ");
                    self.write_prec(b, 2, out);
                }
            }
            Node::Neg(a) => {
                out.push('-');
                self.write_prec(a, 3, out);
            }
            Node::Mul(a, b) => {
                self.write_prec(a, 3, out);
                out.push('*');
                self.write_prec(b, 4, out);
            }
            Node::Div(a, b) => {
                self.write_prec(a, 3, out);
                out.push('/');
                self.write_prec(b, 4, out);
            }
            Node::Pow(a, k) => {
                self.write_prec(a, 5, out);
                out.push_str(&format!("^{k}"));
            }
        }
    }

    fn write_prec(&self, e: &Expr, min: u8, out: &mut String) {
        if prec(&e.node) < min {
            out.push('(');
            self.write(e, out);
            out.push(')');
        } else {
            self.write(e, out);
        }
    }
}

impl fmt::Display for SymFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        Printer { arity: self.arity }.write(&self.root, &mut s);
        f.write_str(&s)
    }
}

/// A vector-valued map with [`SymFn`] components sharing one domain arity.
#[derive(Clone, Debug)]
pub struct SymMap {
    components: Vec<SymFn>,
    arity: usize,
}

impl SymMap {
    pub fn new(components: Vec<SymFn>, arity: usize) -> Self {
        let components = components
            .into_iter()
            .map(|c| c.with_arity(arity))
            .collect();
        SymMap { components, arity }
    }

    /// Arity taken as the largest component arity.
    pub fn from_components(components: Vec<SymFn>) -> Self {
        let arity = components.iter().map(SymFn::arity).max().unwrap_or(0);
        Self::new(components, arity)
    }

    pub fn identity(arity: usize) -> Self {
        Self::new((0..arity).map(|i| SymFn::var(i, arity)).collect(), arity)
    }

    pub fn parse(exprs: &[&str], arity: usize) -> Result<Self> {
        let comps = exprs
            .iter()
            .map(|s| SymFn::parse(s, arity))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::new(comps, arity))
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn components(&self) -> &[SymFn] {
        &self.components
    }

    pub fn component(&self, k: usize) -> &SymFn {
        &self.components[k]
    }

    pub fn eval(&self, point: &[Rational]) -> Result<Vec<Rational>> {
        self.components.iter().map(|c| c.eval(point)).collect()
    }

    pub fn eval_f64(&self, point: &[f64]) -> Result<Vec<f64>> {
        self.components.iter().map(|c| c.eval_f64(point)).collect()
    }

    pub fn derivative(&self, alpha: &MultiIndex) -> SymMap {
        SymMap {
            components: self
                .components
                .iter()
                .map(|c| c.derivative(alpha))
                .collect(),
            arity: self.arity,
        }
    }

    /// `self ∘ inner`.
    pub fn compose(&self, inner: &SymMap) -> SymMap {
        let comps = self
            .components
            .iter()
            .map(|c| c.compose(inner.components()))
            .collect();
        SymMap {
            components: comps,
            arity: inner.arity,
        }
    }

    pub fn map_components(&self, f: impl Fn(&SymFn) -> SymFn) -> SymMap {
        SymMap::new(self.components.iter().map(f).collect(), self.arity)
    }

    pub fn zip_with(&self, other: &SymMap, f: impl Fn(&SymFn, &SymFn) -> SymFn) -> SymMap {
        assert_eq!(self.dim(), other.dim(), "component count mismatch");
        let arity = self.arity.max(other.arity);
        SymMap::new(
            self.components
                .iter()
                .zip(&other.components)
                .map(|(a, b)| f(a, b))
                .collect(),
            arity,
        )
    }

    /// Squared Euclidean norm as a scalar expression.
    pub fn norm_squared(&self) -> SymFn {
        self.components
            .iter()
            .fold(SymFn::zero(self.arity), |acc, c| acc + c.square())
    }

    pub fn jacobian(&self) -> Vec<Vec<SymFn>> {
        self.components.iter().map(SymFn::gradient).collect()
    }
}

impl fmt::Display for SymMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.components.iter().map(ToString::to_string).collect();
        write!(f, "({})", parts.join(", "))
    }
}

pub(crate) fn abs(q: &Rational) -> Rational {
    q.abs()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str, n: usize) -> SymFn {
        SymFn::parse(s, n).unwrap()
    }

    #[test]
    fn power_rule() {
        let f = p("x^2", 1);
        let d = f.derivative(&MultiIndex::new(vec![1]));
        assert!(d.equivalent(&p("2*x", 1), 0));
    }

    #[test]
    fn mixed_partial_of_bilinear() {
        let d = p("x*y", 2).derivative(&MultiIndex::new(vec![1, 1]));
        assert_eq!(d.as_constant(), Some(&int(1)));
    }

    #[test]
    fn cube_of_sum_matches_expanded_polynomial() {
        let f = p("(x+y)^3", 2);
        let alpha = MultiIndex::new(vec![2, 1]);
        let oracle = f.to_poly().unwrap().derivative(&alpha);
        let d = f.derivative(&alpha);
        for pt in random_points(7, 30, 2, 9) {
            assert_eq!(d.eval(&pt).unwrap(), oracle.eval(&pt));
        }
        // (x+y)^3 -> D_x^2 D_y = 6
        assert_eq!(oracle.as_constant(), Some(int(6)));
    }

    #[test]
    fn zero_order_derivative_is_identity() {
        let f = p("x/(1+y^2)", 2);
        let d = f.derivative(&MultiIndex::zeros(2));
        assert!(Arc::ptr_eq(&d.root, &f.root));
    }

    #[test]
    fn evaluation_examples() {
        assert!(matches!(p("1/x", 1).eval(&[int(0)]), Err(Error::Pole)));
        assert_eq!(
            p("x^2+y^2", 2).eval(&[rat(1, 2), rat(1, 2)]).unwrap(),
            rat(1, 2)
        );
        assert_eq!(
            p("(1-2*x)^(1)", 1).recip().eval(&[rat(1, 4)]).unwrap(),
            int(2)
        );
        assert_eq!(p("1/(1-2*x)", 1).eval(&[rat(1, 4)]).unwrap(), int(2));
    }

    #[test]
    fn literal_zero_denominator_rejected() {
        assert!(matches!(
            p("x", 1).checked_div(&SymFn::zero(1)),
            Err(Error::ZeroDenominator)
        ));
        assert!(SymFn::parse("x/(1-1)", 1).is_err());
    }

    #[test]
    fn quotient_derivative_matches_oracle() {
        // d/dx x^2/(1+x) = (x^2 + 2x)/(1+x)^2
        let d = p("x^2/(1+x)", 1).partial(0);
        assert!(d.equivalent(&p("(x^2+2*x)/(1+x)^2", 1), 3));
    }

    #[test]
    fn compose_and_coefficients() {
        // h(x + t w) with h = 1 - x^2, w = 1
        let h = p("1 - x^2", 1);
        let shifted = h.compose(&[p("x + y", 2)]);
        let c = shifted.coefficients_in(1).unwrap();
        assert_eq!(c.len(), 3);
        assert!(c[0].equivalent(&p("1 - x^2", 2), 0));
        assert!(c[1].equivalent(&p("-2*x", 2), 0));
        assert_eq!(c[2].eval(&[int(3), int(0)]).unwrap(), int(-1));
        assert!(p("1/(1+y)", 2).coefficients_in(1).is_none());
    }

    #[test]
    fn display_round_trips_through_parser() {
        for s in [
            "x^2 - 3/4*y",
            "(x+y)^3/(1 - 2*x)",
            "-(x - y)*z",
            "x1*x2 - x3^2",
        ] {
            let f = p(s, 3);
            let g = p(&f.to_string(), 3);
            assert!(f.equivalent(&g, 11), "{s} printed as {f}");
        }
    }

    #[test]
    fn large_rational_to_f64() {
        let big = Rational::new(BigInt::one() << 2000usize, BigInt::from(3) << 1990usize);
        assert!((to_f64(&big) - 1024.0 / 3.0).abs() < 1e-9);
    }
}
