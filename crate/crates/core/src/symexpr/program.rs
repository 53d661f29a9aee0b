use std::collections::HashMap;
use std::sync::Arc;

use num_traits::{One, Zero};

use super::{Expr, Node, NodeData, Rational};
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
enum Op {
    Const(usize),
    Var(usize),
    Add(usize, usize),
    Mul(usize, usize),
    Div(usize, usize),
    Pow(usize, u32),
    Neg(usize),
}

/// A DAG flattened into a straight-line program, one slot per distinct node.
#[derive(Debug, Clone)]
pub struct Program {
    ops: Vec<Op>,
    consts: Vec<Rational>,
    consts_f64: Vec<f64>,
}

impl Program {
    pub(crate) fn compile(root: &Expr) -> Program {
        let mut prog = Program {
            ops: Vec::new(),
            consts: Vec::new(),
            consts_f64: Vec::new(),
        };
        let mut slots: HashMap<*const NodeData, usize> = HashMap::new();
        // iterative post-order so deep sums do not overflow the stack
        let mut stack: Vec<(Expr, bool)> = vec![(root.clone(), false)];
        while let Some((e, expanded)) = stack.pop() {
            let key = Arc::as_ptr(&e);
            if slots.contains_key(&key) {
                continue;
            }
            let children: Vec<&Expr> = match &e.node {
                Node::Add(a, b) | Node::Mul(a, b) | Node::Div(a, b) => vec![a, b],
                Node::Pow(a, _) | Node::Neg(a) => vec![a],
                Node::Const(_) | Node::Var(_) => vec![],
            };
            if !expanded && !children.is_empty() {
                stack.push((e.clone(), true));
                for c in children {
                    if !slots.contains_key(&Arc::as_ptr(c)) {
                        stack.push((c.clone(), false));
                    }
                }
                continue;
            }
            let slot = |x: &Expr| slots[&Arc::as_ptr(x)];
            let op = match &e.node {
                Node::Const(c) => {
                    prog.consts.push(c.clone());
                    prog.consts_f64.push(super::to_f64(c));
                    Op::Const(prog.consts.len() - 1)
                }
                Node::Var(i) => Op::Var(*i),
                Node::Add(a, b) => Op::Add(slot(a), slot(b)),
                Node::Mul(a, b) => Op::Mul(slot(a), slot(b)),
                Node::Div(a, b) => Op::Div(slot(a), slot(b)),
                Node::Pow(a, k) => Op::Pow(slot(a), *k),
                Node::Neg(a) => Op::Neg(slot(a)),
            };
            prog.ops.push(op);
            slots.insert(key, prog.ops.len() - 1);
        }
        prog
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn eval_exact(&self, point: &[Rational]) -> Result<Rational> {
        let mut vals: Vec<Rational> = Vec::with_capacity(self.ops.len());
        for op in &self.ops {
            let v = match *op {
                Op::Const(c) => self.consts[c].clone(),
                Op::Var(i) => point[i].clone(),
                Op::Add(a, b) => &vals[a] + &vals[b],
                Op::Mul(a, b) => {
                    if vals[a].is_zero() || vals[b].is_zero() {
                        Rational::zero()
                    } else {
                        &vals[a] * &vals[b]
                    }
                }
                Op::Div(a, b) => {
                    if vals[b].is_zero() {
                        return Err(Error::Pole);
                    }
                    &vals[a] / &vals[b]
                }
                Op::Pow(a, k) => {
                    if vals[a].is_zero() || vals[a].is_one() {
                        vals[a].clone()
                    } else {
                        num_traits::pow(vals[a].clone(), k as usize)
                    }
                }
                Op::Neg(a) => -&vals[a],
            };
            vals.push(v);
        }
        Ok(vals.pop().unwrap_or_else(Rational::zero))
    }

    pub fn eval_f64(&self, point: &[f64]) -> Result<f64> {
        let mut vals: Vec<f64> = Vec::with_capacity(self.ops.len());
        for op in &self.ops {
            let v = match *op {
                Op::Const(c) => self.consts_f64[c],
                Op::Var(i) => point[i],
                Op::Add(a, b) => vals[a] + vals[b],
                Op::Mul(a, b) => vals[a] * vals[b],
                Op::Div(a, b) => {
                    if vals[b] == 0.0 {
                        return Err(Error::Pole);
                    }
                    vals[a] / vals[b]
                }
                Op::Pow(a, k) => vals[a].powi(k as i32),
                Op::Neg(a) => -vals[a],
            };
            vals.push(v);
        }
        Ok(vals.pop().unwrap_or(0.0))
    }
}
