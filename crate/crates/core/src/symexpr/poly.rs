use std::collections::btree_map::Entry;
use std::collections::BTreeMap;
use std::ops;

use num_traits::{One, Zero};

use super::{MultiIndex, Rational, SymFn};

/// Sparse multivariate polynomial with exact rational coefficients.
///
/// Used as the fully expanded normal form of polynomial expressions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Poly {
    arity: usize,
    terms: BTreeMap<Vec<u32>, Rational>,
}

impl Poly {
    pub fn zero(arity: usize) -> Self {
        Poly {
            arity,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(c: Rational, arity: usize) -> Self {
        let mut p = Self::zero(arity);
        if !c.is_zero() {
            p.terms.insert(vec![0; arity], c);
        }
        p
    }

    pub fn var(i: usize, arity: usize) -> Self {
        let mut e = vec![0; arity];
        e[i] = 1;
        Poly {
            arity,
            terms: BTreeMap::from([(e, Rational::one())]),
        }
    }

    pub fn from_terms(arity: usize, terms: impl IntoIterator<Item = (Vec<u32>, Rational)>) -> Self {
        let mut p = Self::zero(arity);
        for (e, c) in terms {
            assert_eq!(e.len(), arity);
            p.add_term(e, c);
        }
        p
    }

    fn add_term(&mut self, e: Vec<u32>, c: Rational) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(e) {
            Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
            Entry::Vacant(v) => {
                v.insert(c);
            }
        }
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<u32>, &Rational)> {
        self.terms.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn as_constant(&self) -> Option<Rational> {
        match self.terms.len() {
            0 => Some(Rational::zero()),
            1 => {
                let (e, c) = self.terms.iter().next().unwrap();
                e.iter().all(|&k| k == 0).then(|| c.clone())
            }
            _ => None,
        }
    }

    pub fn total_degree(&self) -> u32 {
        self.terms.keys().map(|e| e.iter().sum()).max().unwrap_or(0)
    }

    pub fn degree_in(&self, var: usize) -> u32 {
        self.terms.keys().map(|e| e[var]).max().unwrap_or(0)
    }

    pub fn scale(&self, c: &Rational) -> Poly {
        if c.is_zero() {
            return Poly::zero(self.arity);
        }
        Poly {
            arity: self.arity,
            terms: self.terms.iter().map(|(e, v)| (e.clone(), v * c)).collect(),
        }
    }

    pub fn pow(&self, k: u32) -> Poly {
        let mut acc = Poly::constant(Rational::one(), self.arity);
        for _ in 0..k {
            acc = &acc * self;
        }
        acc
    }

    /// Term-by-term `D^alpha`.
    pub fn derivative(&self, alpha: &MultiIndex) -> Poly {
        let mut out = Poly::zero(self.arity);
        'terms: for (e, c) in &self.terms {
            let mut coeff = c.clone();
            let mut ne = e.clone();
            for (i, &a) in alpha.entries().iter().enumerate() {
                if e[i] < a {
                    continue 'terms;
                }
                for j in 0..a {
                    coeff *= Rational::from_integer((e[i] - j).into());
                }
                ne[i] -= a;
            }
            out.add_term(ne, coeff);
        }
        out
    }

    pub fn eval(&self, point: &[Rational]) -> Rational {
        self.terms
            .iter()
            .map(|(e, c)| {
                e.iter().enumerate().fold(c.clone(), |acc, (i, &k)| {
                    acc * num_traits::pow(point[i].clone(), k as usize)
                })
            })
            .fold(Rational::zero(), |a, b| a + b)
    }

    /// Coefficient polynomials of `x_var^k`, `k = 0..=deg`.
    pub fn coefficients_in(&self, var: usize) -> Vec<Poly> {
        let deg = self.degree_in(var) as usize;
        let mut out = vec![Poly::zero(self.arity); deg + 1];
        for (e, c) in &self.terms {
            let mut ne = e.clone();
            ne[var] = 0;
            out[e[var] as usize].add_term(ne, c.clone());
        }
        out
    }

    pub fn to_symfn(&self) -> SymFn {
        let mut acc = SymFn::zero(self.arity);
        for (e, c) in &self.terms {
            let mut term = SymFn::constant(c.clone(), self.arity);
            for (i, &k) in e.iter().enumerate() {
                if k > 0 {
                    term = term * SymFn::var(i, self.arity).pow(k);
                }
            }
            acc = acc + term;
        }
        acc
    }
}

impl ops::Add for &Poly {
    type Output = Poly;
    fn add(self, rhs: &Poly) -> Poly {
        let mut out = self.clone();
        out.arity = self.arity.max(rhs.arity);
        for (e, c) in &rhs.terms {
            out.add_term(e.clone(), c.clone());
        }
        out
    }
}

impl ops::Neg for &Poly {
    type Output = Poly;
    fn neg(self) -> Poly {
        self.scale(&-Rational::one())
    }
}

impl ops::Sub for &Poly {
    type Output = Poly;
    fn sub(self, rhs: &Poly) -> Poly {
        self + &(-rhs)
    }
}

impl ops::Mul for &Poly {
    type Output = Poly;
    fn mul(self, rhs: &Poly) -> Poly {
        let mut out = Poly::zero(self.arity.max(rhs.arity));
        for (ea, ca) in &self.terms {
            for (eb, cb) in &rhs.terms {
                let e: Vec<u32> = ea.iter().zip(eb).map(|(a, b)| a + b).collect();
                out.add_term(e, ca * cb);
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symexpr::{int, rat};

    #[test]
    fn expansion_and_derivative() {
        let f = SymFn::parse("(x+y)^2 - 2*x*y", 2).unwrap();
        let p = f.to_poly().unwrap();
        assert_eq!(
            p,
            Poly::from_terms(2, [(vec![2, 0], int(1)), (vec![0, 2], int(1))])
        );
        let d = p.derivative(&MultiIndex::new(vec![1, 0]));
        assert_eq!(d.eval(&[rat(3, 2), int(7)]), int(3));
    }

    #[test]
    fn cancellation_removes_terms() {
        let p = &Poly::var(0, 1) - &Poly::var(0, 1);
        assert!(p.is_zero());
        assert_eq!(p.total_degree(), 0);
    }

    #[test]
    fn coefficients_in_variable() {
        let p = SymFn::parse("1 - (x + y)^2", 2).unwrap().to_poly().unwrap();
        let c = p.coefficients_in(1);
        assert_eq!(c.len(), 3);
        assert_eq!(c[2].as_constant(), Some(int(-1)));
        assert_eq!(c[1], Poly::var(0, 2).scale(&int(-2)));
    }
}
