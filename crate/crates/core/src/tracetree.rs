//! Trivalent trace trees: vertices carry three Farey-labelled regions and
//! their values, and an edge crossing replaces one region by its reflection.
//!
//! Two move rules are supported. The Markoff move `w -> uv - w` preserves
//! `u^2 + v^2 + w^2 - uvw`; the S-tree move `w -> 2 - uv - w` preserves
//! `u^2 + v^2 + w^2 + uvw - 2(u + v + w) + 1`.

use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;

use crate::farey::{checked_reflect, reflect, Rational};
use crate::poly::IntPoly;

/// Scalars a tree can carry.
pub trait TraceValue:
    Clone + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self>
{
    fn from_i64(n: i64) -> Self;
}

impl TraceValue for Complex64 {
    fn from_i64(n: i64) -> Self {
        Complex64::new(n as f64, 0.0)
    }
}

impl TraceValue for IntPoly {
    fn from_i64(n: i64) -> Self {
        IntPoly::constant(n as i128)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MoveRule {
    Markoff,
    STree,
}

impl MoveRule {
    /// Value of the region across the edge between `u` and `v`, opposite `w`.
    pub fn replace<S: TraceValue>(self, u: &S, v: &S, w: &S) -> S {
        let uv = u.clone() * v.clone();
        match self {
            MoveRule::Markoff => uv - w.clone(),
            MoveRule::STree => S::from_i64(2) - uv - w.clone(),
        }
    }

    /// Next value in a boundary walk round a region of value `centre`.
    pub fn step<S: TraceValue>(self, centre: &S, cur: &S, prev: &S) -> S {
        self.replace(centre, cur, prev)
    }
}

/// `u^2 + v^2 + w^2 - uvw`.
pub fn mu_invariant<S: TraceValue>(u: &S, v: &S, w: &S) -> S {
    u.clone() * u.clone() + v.clone() * v.clone() + w.clone() * w.clone()
        - u.clone() * v.clone() * w.clone()
}

/// `u^2 + v^2 + w^2 + uvw - 2(u + v + w) + 1`; zero on every S-tree vertex
/// reached from `(x, 2, 1 - x)`.
pub fn s_tree_relation<S: TraceValue>(u: &S, v: &S, w: &S) -> S {
    u.clone() * u.clone() + v.clone() * v.clone() + w.clone() * w.clone()
        + u.clone() * v.clone() * w.clone()
        - S::from_i64(2) * (u.clone() + v.clone() + w.clone())
        + S::from_i64(1)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TreeVertex<S> {
    pub regions: [Rational; 3],
    pub values: [S; 3],
}

impl<S: TraceValue> TreeVertex<S> {
    pub fn new(regions: [Rational; 3], values: [S; 3]) -> Self {
        TreeVertex { regions, values }
    }

    /// Root at the base triangle `(0/1, 1/0, 1/1)`.
    pub fn base(values: [S; 3]) -> Self {
        Self::new([Rational::ZERO, Rational::INFINITY, Rational::ONE], values)
    }

    pub fn map<T>(&self, f: impl Fn(&S) -> T) -> TreeVertex<T> {
        TreeVertex {
            regions: self.regions,
            values: [f(&self.values[0]), f(&self.values[1]), f(&self.values[2])],
        }
    }

    pub fn value_of(&self, r: Rational) -> Option<&S> {
        self.regions.iter().position(|&x| x == r).map(|k| &self.values[k])
    }

    fn others(edge: usize) -> (usize, usize) {
        ((edge + 1) % 3, (edge + 2) % 3)
    }

    /// Value the move would put in slot `edge`, without building the vertex.
    pub fn replacement(&self, edge: usize, rule: MoveRule) -> S {
        let (j, k) = Self::others(edge);
        rule.replace(&self.values[j], &self.values[k], &self.values[edge])
    }

    /// Like [`cross_edge`] but returns `None` when the new label overflows.
    pub fn checked_cross(&self, edge: usize, rule: MoveRule) -> Option<Self> {
        let (j, k) = Self::others(edge);
        let label = checked_reflect(self.regions[j], self.regions[k], self.regions[edge])?;
        let mut out = self.clone();
        out.values[edge] = self.replacement(edge, rule);
        out.regions[edge] = label;
        Some(out)
    }
}

/// Moves to the adjacent vertex that shares every region except slot `edge`.
pub fn cross_edge<S: TraceValue>(v: &TreeVertex<S>, edge: usize, rule: MoveRule) -> TreeVertex<S> {
    assert!(edge < 3, "edge index {edge} out of range");
    let (j, k) = TreeVertex::<S>::others(edge);
    let mut out = v.clone();
    out.values[edge] = v.replacement(edge, rule);
    out.regions[edge] = reflect(v.regions[j], v.regions[k], v.regions[edge]);
    out
}

/// `t` lies on the arc of the circle between `a` and `b` that avoids `c`.
fn on_arc(a: Rational, b: Rational, c: Rational, t: Rational) -> bool {
    let (lo, hi) = if a < b { (a, b) } else { (b, a) };
    let inside = |x: Rational| lo < x && x < hi;
    inside(t) != inside(c)
}

/// Walks from `root` towards the vertex bordering region `target`, returning
/// that vertex and the slot holding `target`.
pub fn navigate_to<S: TraceValue>(
    target: Rational,
    root: &TreeVertex<S>,
    rule: MoveRule,
) -> (TreeVertex<S>, usize) {
    let mut v = root.clone();
    loop {
        if let Some(k) = v.regions.iter().position(|&x| x == target) {
            return (v, k);
        }
        let [a, b, c] = v.regions;
        let edge = if on_arc(b, c, a, target) {
            0
        } else if on_arc(c, a, b, target) {
            1
        } else {
            2
        };
        v = cross_edge(&v, edge, rule);
    }
}

/// The value at region `r` of the tree generated from `root`.
pub fn label_at<S: TraceValue>(r: Rational, root: &TreeVertex<S>, rule: MoveRule) -> S {
    let (v, k) = navigate_to(r, root, rule);
    v.values[k].clone()
}

/// Values of the regions round the boundary of a fixed region, extending a
/// seed pair of adjacent neighbours in both directions. `next` walks forward
/// from the seed (`v0, v1, v2, ...`), `next_back` walks backward
/// (`v-1, v-2, ...`).
#[derive(Debug, Clone)]
pub struct BoundaryValues<S> {
    centre: S,
    rule: MoveRule,
    front: (S, S),
    back: (S, S),
    started: bool,
}

pub fn boundary_values<S: TraceValue>(centre: S, seed: (S, S), rule: MoveRule) -> BoundaryValues<S> {
    BoundaryValues {
        centre,
        rule,
        back: (seed.1.clone(), seed.0.clone()),
        front: seed,
        started: false,
    }
}

impl<S: TraceValue> Iterator for BoundaryValues<S> {
    type Item = S;

    fn next(&mut self) -> Option<S> {
        if !self.started {
            self.started = true;
            return Some(self.front.0.clone());
        }
        let out = self.front.1.clone();
        let next = self.rule.step(&self.centre, &self.front.1, &self.front.0);
        self.front = (self.front.1.clone(), next);
        Some(out)
    }
}

impl<S: TraceValue> DoubleEndedIterator for BoundaryValues<S> {
    fn next_back(&mut self) -> Option<S> {
        let next = self.rule.step(&self.centre, &self.back.1, &self.back.0);
        self.back = (self.back.1.clone(), next.clone());
        Some(next)
    }
}
