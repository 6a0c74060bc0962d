//! Membership in the Bowditch set for Markoff maps.
//!
//! A query descends the Markoff tree along strictly decreasing arrows to a
//! sink vertex, then explores the attracting subtree `T` by depth-first
//! search. A finite `T` within budget means the triple is in the set.

use std::collections::HashSet;

use num_complex::Complex64;
use thiserror::Error;

use crate::farey::Rational;
use crate::tracetree::{mu_invariant, MoveRule, TreeVertex};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BowditchError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BowditchParams {
    pub max_descent_steps: usize,
    pub max_sink_edges: usize,
    pub tol_real_segment: f64,
    pub enable_mu0_heuristic: bool,
}

impl Default for BowditchParams {
    fn default() -> Self {
        BowditchParams {
            max_descent_steps: 20_000,
            max_sink_edges: 50_000,
            tol_real_segment: 1e-12,
            enable_mu0_heuristic: true,
        }
    }
}

impl BowditchParams {
    pub fn validate(&self) -> Result<(), BowditchError> {
        if self.max_descent_steps == 0 || self.max_sink_edges == 0 {
            return Err(BowditchError::InvalidParams("budgets must be at least 1".into()));
        }
        if self.tol_real_segment.is_nan() || self.tol_real_segment < 0.0 {
            return Err(BowditchError::InvalidParams(
                "tol_real_segment must be non-negative".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Phase {
    Descent,
    Exploration,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Verdict {
    InSet { sink_vertices: usize, sink_edges: usize },
    Indecisive(Phase),
    NotInSet { witness: Rational },
    NotApplicable,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum VerdictKind {
    InSet,
    Indecisive,
    NotInSet,
    NotApplicable,
}

impl Verdict {
    pub fn kind(&self) -> VerdictKind {
        match self {
            Verdict::InSet { .. } => VerdictKind::InSet,
            Verdict::Indecisive(_) => VerdictKind::Indecisive,
            Verdict::NotInSet { .. } => VerdictKind::NotInSet,
            Verdict::NotApplicable => VerdictKind::NotApplicable,
        }
    }

    pub fn is_in_set(&self) -> bool {
        matches!(self, Verdict::InSet { .. })
    }
}

const HEURISTIC_RADIUS: f64 = 0.5;

/// `x` in `[-2, 2]` or at `+-sqrt(mu)`, up to `tol`.
pub fn in_exceptional_set(x: Complex64, mu: Complex64, tol: f64) -> bool {
    if x.im.abs() <= tol && x.re >= -2.0 - tol && x.re <= 2.0 + tol {
        return true;
    }
    let root = mu.sqrt();
    (x - root).norm().min((x + root).norm()) <= tol
}

/// Bound on `|phi(V)|` for neighbours `V` of a region with value `x` that
/// can lie in the attracting subtree.
pub fn h_mu(x: Complex64, mu: Complex64) -> f64 {
    h_mu_tol(x, mu, BowditchParams::default().tol_real_segment)
}

pub fn h_mu_tol(x: Complex64, mu: Complex64, tol: f64) -> f64 {
    if in_exceptional_set(x, mu, tol) {
        return f64::INFINITY;
    }
    let disc = (x * x - 4.0).sqrt();
    let l1 = (x + disc) / 2.0;
    let l2 = (x - disc) / 2.0;
    let lambda = l1.norm().max(l2.norm());
    let x2 = x * x;
    let ratio = ((x2 - mu) / (x2 - 4.0)).norm().sqrt();
    let bound = ratio * 2.0 * lambda * lambda / (lambda - 1.0);
    if bound.is_nan() {
        f64::INFINITY
    } else {
        bound.max(2.0)
    }
}

/// Whether the edge between regions of values `phi_u`, `phi_v` lies in `T`.
pub fn edge_in_t(phi_u: Complex64, phi_v: Complex64, mu: Complex64) -> bool {
    edge_in_t_tol(phi_u, phi_v, mu, BowditchParams::default().tol_real_segment)
}

fn edge_in_t_tol(phi_u: Complex64, phi_v: Complex64, mu: Complex64, tol: f64) -> bool {
    let (mu_, mv) = (phi_u.norm(), phi_v.norm());
    (mu_ <= 2.0 && mv <= h_mu_tol(phi_u, mu, tol)) || (mv <= 2.0 && mu_ <= h_mu_tol(phi_v, mu, tol))
}

fn others(edge: usize) -> (usize, usize) {
    ((edge + 1) % 3, (edge + 2) % 3)
}

/// Edge whose crossing most decreases the replaced modulus, if any does.
fn steepest_move(v: &TreeVertex<Complex64>) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for e in 0..3 {
        let drop = v.values[e].norm() - v.replacement(e, MoveRule::Markoff).norm();
        if drop > 0.0 && best.is_none_or(|(_, d)| drop > d) {
            best = Some((e, drop));
        }
    }
    best.map(|(e, _)| e)
}

fn descend_with(
    root: &TreeVertex<Complex64>,
    params: &BowditchParams,
    mut on_region: impl FnMut(Rational, Complex64) -> Option<Verdict>,
) -> Result<TreeVertex<Complex64>, Verdict> {
    let indecisive = Verdict::Indecisive(Phase::Descent);
    let mut v = root.clone();
    for step in 0..=params.max_descent_steps {
        let Some(e) = steepest_move(&v) else {
            return Ok(v);
        };
        if step == params.max_descent_steps {
            break;
        }
        v = v.checked_cross(e, MoveRule::Markoff).ok_or(indecisive)?;
        if let Some(verdict) = on_region(v.regions[e], v.values[e]) {
            return Err(verdict);
        }
    }
    Err(indecisive)
}

/// Follows strictly decreasing arrows to a sink vertex.
pub fn descend(
    root: &TreeVertex<Complex64>,
    params: &BowditchParams,
) -> Result<TreeVertex<Complex64>, Verdict> {
    descend_with(root, params, |_, _| None)
}

/// What an exploration touched, for inspection and tests.
#[derive(Debug, Clone, Default)]
pub struct SinkRecord {
    pub sink: Option<TreeVertex<Complex64>>,
    pub vertices: Vec<TreeVertex<Complex64>>,
    /// Each explored edge as the pair of regions it separates.
    pub edges: Vec<(Rational, Rational)>,
}

struct Search<'a> {
    mu: Complex64,
    params: &'a BowditchParams,
    quotient: bool,
}

impl Search<'_> {
    fn check_region(&self, label: Rational, value: Complex64) -> Option<Verdict> {
        if self.quotient && label.is_infinite() {
            return None;
        }
        let tol = self.params.tol_real_segment;
        if !value.is_finite() {
            return None;
        }
        if self.params.enable_mu0_heuristic
            && self.mu.norm() <= tol
            && value.norm() <= HEURISTIC_RADIUS
        {
            return Some(Verdict::NotInSet { witness: label });
        }
        // exact zeros are structural (a region fixed by a hyperelliptic
        // symmetry), not numerical certificates
        if value != Complex64::new(0.0, 0.0) && in_exceptional_set(value, self.mu, tol) {
            return Some(Verdict::NotInSet { witness: label });
        }
        None
    }

    fn in_t(&self, v: &TreeVertex<Complex64>, e: usize) -> bool {
        let (j, k) = others(e);
        edge_in_t_tol(v.values[j], v.values[k], self.mu, self.params.tol_real_segment)
    }

    fn run(&self, root: TreeVertex<Complex64>, mut record: Option<&mut SinkRecord>) -> Verdict {
        if (self.mu - 4.0).norm() <= self.params.tol_real_segment {
            return Verdict::NotApplicable;
        }
        if root.values.iter().any(|z| !z.is_finite()) {
            return Verdict::Indecisive(Phase::Descent);
        }
        for k in 0..3 {
            if let Some(v) = self.check_region(root.regions[k], root.values[k]) {
                return v;
            }
        }
        let sink = match descend_with(&root, self.params, |r, z| self.check_region(r, z)) {
            Ok(v) => v,
            Err(verdict) => return verdict,
        };
        if let Some(rec) = record.as_deref_mut() {
            rec.sink = Some(sink.clone());
            rec.vertices.push(sink.clone());
        }
        if self.quotient {
            self.explore_quotient(sink, record)
        } else {
            self.explore(sink, record)
        }
    }

    fn explore(&self, sink: TreeVertex<Complex64>, mut record: Option<&mut SinkRecord>) -> Verdict {
        let indecisive = Verdict::Indecisive(Phase::Exploration);
        let mut stack = vec![(sink, None::<usize>)];
        let (mut vertices, mut edges) = (1usize, 0usize);
        while let Some((v, back)) = stack.pop() {
            for e in 0..3 {
                if Some(e) == back || !self.in_t(&v, e) {
                    continue;
                }
                edges += 1;
                if edges > self.params.max_sink_edges {
                    return indecisive;
                }
                let Some(w) = v.checked_cross(e, MoveRule::Markoff) else {
                    return indecisive;
                };
                if let Some(verdict) = self.check_region(w.regions[e], w.values[e]) {
                    return verdict;
                }
                vertices += 1;
                if let Some(rec) = record.as_deref_mut() {
                    let (j, k) = others(e);
                    rec.edges.push((v.regions[j], v.regions[k]));
                    rec.vertices.push(w.clone());
                }
                stack.push((w, Some(e)));
            }
        }
        Verdict::InSet {
            sink_vertices: vertices,
            sink_edges: edges,
        }
    }

    fn explore_quotient(
        &self,
        sink: TreeVertex<Complex64>,
        mut record: Option<&mut SinkRecord>,
    ) -> Verdict {
        let indecisive = Verdict::Indecisive(Phase::Exploration);
        let mut seen_vertices = HashSet::new();
        let mut seen_edges = HashSet::new();
        let Some(key) = quotient_key(&sink.regions) else {
            return indecisive;
        };
        seen_vertices.insert(key);
        let mut stack = vec![sink];
        let mut edges = 0usize;
        while let Some(v) = stack.pop() {
            for e in 0..3 {
                if !self.in_t(&v, e) {
                    continue;
                }
                let (j, k) = others(e);
                let Some(key) = quotient_key(&[v.regions[j], v.regions[k]]) else {
                    return indecisive;
                };
                if !seen_edges.insert(key) {
                    continue;
                }
                edges += 1;
                if edges > self.params.max_sink_edges {
                    return indecisive;
                }
                let Some(w) = v.checked_cross(e, MoveRule::Markoff) else {
                    return indecisive;
                };
                if let Some(rec) = record.as_deref_mut() {
                    rec.edges.push((v.regions[j], v.regions[k]));
                }
                let Some(key) = quotient_key(&w.regions) else {
                    return indecisive;
                };
                if !seen_vertices.insert(key) {
                    continue;
                }
                if let Some(verdict) = self.check_region(w.regions[e], w.values[e]) {
                    return verdict;
                }
                if let Some(rec) = record.as_deref_mut() {
                    rec.vertices.push(w.clone());
                }
                stack.push(w);
            }
        }
        Verdict::InSet {
            sink_vertices: seen_vertices.len(),
            sink_edges: edges,
        }
    }
}

/// Key identifying a set of regions up to translation by 2; `None` if the
/// labels are too large to shift.
fn quotient_key<const N: usize>(regions: &[Rational; N]) -> Option<[Rational; N]> {
    let anchor = regions
        .iter()
        .filter(|r| !r.is_infinite())
        .max_by(|a, b| a.denom().cmp(&b.denom()).then(b.cmp(a)))
        .copied();
    let mut out = *regions;
    if let Some(anchor) = anchor {
        let shift = anchor.numer().div_euclid(anchor.denom().checked_mul(2)?);
        for r in out.iter_mut() {
            *r = r.checked_shift(shift.checked_mul(-2)?)?;
        }
    }
    out.sort();
    Some(out)
}

fn root_of(triple: [Complex64; 3]) -> TreeVertex<Complex64> {
    TreeVertex::base(triple)
}

/// Bowditch membership of the Markoff map with root values `(a, b, c)` at
/// regions `(0/1, 1/0, 1/1)`.
pub fn membership(triple: [Complex64; 3], params: &BowditchParams) -> Verdict {
    let [a, b, c] = &triple;
    Search {
        mu: mu_invariant(a, b, c),
        params,
        quotient: false,
    }
    .run(root_of(triple), None)
}

/// Membership for a map whose value at `1/0` is zero, on the tree modulo the
/// translation `r -> r + 2` (which preserves every modulus). The zero region
/// itself is never a witness. A nonzero middle value falls back to
/// [`membership`].
pub fn membership_quotient(triple: [Complex64; 3], params: &BowditchParams) -> Verdict {
    if triple[1] != Complex64::new(0.0, 0.0) {
        return membership(triple, params);
    }
    let [a, b, c] = &triple;
    Search {
        mu: mu_invariant(a, b, c),
        params,
        quotient: true,
    }
    .run(root_of(triple), None)
}

/// [`membership`] or [`membership_quotient`] with a record of the explored
/// subtree.
pub fn membership_recorded(
    triple: [Complex64; 3],
    params: &BowditchParams,
    quotient: bool,
) -> (Verdict, SinkRecord) {
    let [a, b, c] = &triple;
    let mut record = SinkRecord::default();
    let quotient = quotient && triple[1] == Complex64::new(0.0, 0.0);
    let verdict = Search {
        mu: mu_invariant(a, b, c),
        params,
        quotient,
    }
    .run(root_of(triple), Some(&mut record));
    (verdict, record)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tracetree::{boundary_values, cross_edge, label_at};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn diag(x: Complex64) -> [Complex64; 3] {
        [x, x, x]
    }

    fn small_budget() -> BowditchParams {
        BowditchParams {
            max_descent_steps: 2_000,
            max_sink_edges: 5_000,
            ..Default::default()
        }
    }

    #[test]
    fn exceptional_set_examples() {
        let tol = 1e-12;
        let mu = c(3.125, 0.0);
        assert!(in_exceptional_set(c(1.5, 0.0), mu, tol));
        assert!(in_exceptional_set(c(3.125f64.sqrt(), 0.0), mu, tol));
        assert!(in_exceptional_set(c(-(3.125f64.sqrt()), 0.0), mu, tol));
        assert!(!in_exceptional_set(c(3.0, 0.0), c(0.0, 0.0), tol));
        assert!(!in_exceptional_set(c(1.5, 1e-6), mu, tol));
    }

    #[test]
    fn h_mu_examples() {
        assert_eq!(h_mu(c(1.0, 0.0), c(0.0, 0.0)), f64::INFINITY);
        assert_eq!(h_mu(c(-2.0, 0.0), c(5.0, 1.0)), f64::INFINITY);

        // independent evaluation of the closed form for real x > 2
        let oracle = |x: f64, mu: f64| {
            let l = (x + (x * x - 4.0).sqrt()) / 2.0;
            (((x * x - mu) / (x * x - 4.0)).abs().sqrt() * 2.0 * l * l / (l - 1.0)).max(2.0)
        };
        let h = h_mu(c(4.0, 0.0), c(0.0, 0.0));
        assert!((h - 11.7735).abs() < 1e-3, "{h}");
        assert!((h - oracle(4.0, 0.0)).abs() < 1e-12);
        let h = h_mu(c(10.0, 0.0), c(3.0, 0.0));
        let l = (10.0 + 96f64.sqrt()) / 2.0;
        let expected = ((97.0f64 / 96.0).sqrt() * 2.0 * l * l / (l - 1.0)).max(2.0);
        assert!((h - expected).abs() < 1e-10);
        // the bound is symmetric under x -> -x and conjugation
        let x = c(2.3, -1.4);
        let mu = c(0.7, 0.2);
        assert!((h_mu(x, mu) - h_mu(-x, mu)).abs() < 1e-12);
        assert!((h_mu(x, mu) - h_mu(x.conj(), mu.conj())).abs() < 1e-12);
    }

    #[test]
    fn edge_examples() {
        let mu = c(3.125, 0.0);
        assert!(edge_in_t(c(1.5, 0.0), c(3.0, 0.0), mu));
        assert!(!edge_in_t(c(5.0, 0.0), c(6.0, 0.0), mu));
        assert!(!edge_in_t(c(2.5, 0.0), c(2.5, 0.0), mu));
    }

    #[test]
    fn descent_examples() {
        let p = BowditchParams::default();
        for x in [2.5, 3.0] {
            let root = TreeVertex::base(diag(c(x, 0.0)));
            assert_eq!(descend(&root, &p).unwrap(), root);
        }
        let root = TreeVertex::base(diag(c(0.1, 0.0)));
        let p = BowditchParams {
            max_descent_steps: 50,
            ..Default::default()
        };
        let sink = descend(&root, &p);
        // near the origin the values shrink towards zero; any sink found must
        // be non-increasing in every direction
        if let Ok(v) = sink {
            assert!(steepest_move(&v).is_none());
        }
        // 0.1 is itself in [-2, 2]
        assert_eq!(
            membership(diag(c(0.1, 0.0)), &p),
            Verdict::NotInSet {
                witness: Rational::ZERO
            }
        );
        assert_eq!(
            membership(diag(c(0.1, 0.05)), &p).kind(),
            VerdictKind::Indecisive
        );
    }

    #[test]
    fn descent_decreases_sum_of_moduli() {
        let root = TreeVertex::base([c(40.0, 3.0), c(-7.0, 1.0), c(0.5, 12.0)]);
        let sink = descend(&root, &BowditchParams::default()).unwrap();
        let sum = |v: &TreeVertex<Complex64>| v.values.iter().map(|z| z.norm()).sum::<f64>();
        assert!(sum(&sink) <= sum(&root));
        for e in 0..3 {
            let w = cross_edge(&sink, e, MoveRule::Markoff);
            assert!(w.values[e].norm() >= sink.values[e].norm());
        }
        for k in 0..3 {
            let from_root = label_at(sink.regions[k], &root, MoveRule::Markoff);
            assert!((from_root - sink.values[k]).norm() < 1e-9 * (1.0 + from_root.norm()));
        }
    }

    #[test]
    fn membership_examples() {
        let p = BowditchParams::default();
        for x in [2.5, 2.1, 2.9] {
            assert_eq!(
                membership(diag(c(x, 0.0)), &p),
                Verdict::InSet {
                    sink_vertices: 1,
                    sink_edges: 0
                },
                "x = {x}"
            );
        }
        assert_eq!(
            membership(diag(c(0.0, 0.0)), &p),
            Verdict::NotInSet {
                witness: Rational::ZERO
            }
        );
        let off = BowditchParams {
            enable_mu0_heuristic: false,
            ..p
        };
        assert_eq!(
            membership(diag(c(0.0, 0.0)), &off),
            Verdict::Indecisive(Phase::Exploration)
        );
        assert!(membership(diag(c(10.0, 10.0)), &p).is_in_set());
        // mu = 4: (2, 2, 2) and (x, 2, x)
        assert_eq!(membership(diag(c(2.0, 0.0)), &p), Verdict::NotApplicable);
        assert_eq!(
            membership([c(5.0, 1.0), c(2.0, 0.0), c(5.0, 1.0)], &p),
            Verdict::NotApplicable
        );
    }

    #[test]
    fn quotient_examples() {
        let p = BowditchParams::default();
        let x = c(10.0, 10.0);
        let torus = [(-x + 2.0).sqrt(), c(0.0, 0.0), (x + 1.0).sqrt()];
        let v = membership_quotient(torus, &p);
        assert!(v.is_in_set(), "{v:?}");

        let x = c(-0.1, 0.0);
        let riley = [(-x).sqrt(), c(0.0, 0.0), x.sqrt()];
        assert!(matches!(
            membership_quotient(riley, &p),
            Verdict::NotInSet { .. } | Verdict::Indecisive(_)
        ));

        let v = membership_quotient([c(2.0, 0.0), c(0.0, 0.0), c(7.0, 3.0)], &p);
        assert_eq!(v, Verdict::NotInSet { witness: Rational::ZERO });
    }

    #[test]
    fn quotient_keys_are_translation_invariant() {
        let r = |p, q| Rational::new(p, q).unwrap();
        let tri = [r(1, 2), r(2, 3), r(1, 1)];
        let shifted = tri.map(|x| x.shift(6));
        assert_eq!(quotient_key(&tri), quotient_key(&shifted));
        let tri = [r(3, 1), Rational::INFINITY, r(4, 1)];
        assert_eq!(quotient_key(&tri), quotient_key(&tri.map(|x| x.shift(-8))));
        assert_ne!(
            quotient_key(&[r(0, 1), Rational::INFINITY, r(1, 1)]),
            quotient_key(&[r(1, 1), Rational::INFINITY, r(2, 1)])
        );
        // translation by 1 is not an identification
        assert_ne!(quotient_key(&tri), quotient_key(&tri.map(|x| x.shift(1))));
    }

    /// Breadth-first enumeration of every vertex within `depth` moves of the
    /// root, collecting edges that satisfy the subtree condition.
    fn brute_force_t_edges(
        triple: [Complex64; 3],
        depth: usize,
    ) -> HashSet<(Rational, Rational)> {
        let [a, b, cc] = &triple;
        let mu = mu_invariant(a, b, cc);
        let mut out = HashSet::new();
        let mut layer = vec![(TreeVertex::base(triple), None::<usize>)];
        for _ in 0..depth {
            let mut next = Vec::new();
            for (v, back) in layer {
                for e in 0..3 {
                    if Some(e) == back {
                        continue;
                    }
                    let (j, k) = others(e);
                    if edge_in_t(v.values[j], v.values[k], mu) {
                        out.insert(ordered(v.regions[j], v.regions[k]));
                    }
                    next.push((cross_edge(&v, e, MoveRule::Markoff), Some(e)));
                }
            }
            layer = next;
        }
        out
    }

    fn ordered(a: Rational, b: Rational) -> (Rational, Rational) {
        if a < b {
            (a, b)
        } else {
            (b, a)
        }
    }

    fn random_in_set(rng: &mut ChaCha8Rng, count: usize) -> Vec<([Complex64; 3], SinkRecord)> {
        let p = small_budget();
        let mut out = Vec::new();
        while out.len() < count {
            let triple = [0; 3].map(|_| {
                Complex64::from_polar(rng.gen_range(0.5..5.0), rng.gen_range(-3.2..3.2))
            });
            let (v, rec) = membership_recorded(triple, &p, false);
            if v.is_in_set() {
                out.push((triple, rec));
            }
        }
        out
    }

    #[test]
    fn explored_subtree_is_all_of_t() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for (triple, rec) in random_in_set(&mut rng, 40) {
            let explored: HashSet<_> = rec.edges.iter().map(|&(a, b)| ordered(a, b)).collect();
            for edge in brute_force_t_edges(triple, 10) {
                assert!(explored.contains(&edge), "{triple:?}: {edge:?} missing");
            }
        }
    }

    #[test]
    fn boundary_segments_are_finite_and_match_exploration() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        for (triple, rec) in random_in_set(&mut rng, 50) {
            let [a, b, cc] = &triple;
            let mu = mu_invariant(a, b, cc);
            for v in &rec.vertices {
                for u in 0..3 {
                    let phi_u = v.values[u];
                    if phi_u.norm() > 2.0 {
                        continue;
                    }
                    let h = h_mu(phi_u, mu);
                    let (j, k) = others(u);
                    let walk = boundary_values(phi_u, (v.values[j], v.values[k]), MoveRule::Markoff);
                    // walk each way until the values are far beyond the bound
                    let until_escaped = |it: &mut dyn Iterator<Item = Complex64>| {
                        let mut out = Vec::new();
                        for z in it.take(200_000) {
                            out.push(z.norm());
                            if z.norm() > 1e6 * h && out.len() > 2 {
                                return Some(out);
                            }
                        }
                        None
                    };
                    let (Some(fwd), Some(bwd)) =
                        (until_escaped(&mut walk.clone()), until_escaped(&mut walk.rev()))
                    else {
                        panic!("boundary values round {} do not escape", v.regions[u]);
                    };
                    // neighbours within the bound form one contiguous run
                    let seq: Vec<bool> = bwd.iter().rev().chain(fwd.iter()).map(|&m| m <= h).collect();
                    let first = seq.iter().position(|&b| b);
                    let last = seq.iter().rposition(|&b| b);
                    if let (Some(f), Some(l)) = (first, last) {
                        assert!(seq[f..=l].iter().all(|&b| b), "gap round {}", v.regions[u]);
                        assert!(f > 0 && l < seq.len() - 1, "run reaches the walk ends");
                        let explored = rec
                            .edges
                            .iter()
                            .filter(|&&(x, y)| x == v.regions[u] || y == v.regions[u])
                            .count();
                        assert_eq!(explored, l - f + 1, "round {}", v.regions[u]);
                    }
                }
            }
        }
    }

    #[test]
    fn quotient_exploration_is_finite_on_torus_slice() {
        let p = BowditchParams::default();
        for x in [c(10.0, 10.0), c(-8.0, 3.0), c(6.0, -9.0)] {
            let torus = [(-x + 2.0).sqrt(), c(0.0, 0.0), (x + 1.0).sqrt()];
            let plain = membership(torus, &BowditchParams {
                max_sink_edges: 2_000,
                ..p
            });
            assert_eq!(plain, Verdict::Indecisive(Phase::Exploration));
            let (v, rec) = membership_recorded(torus, &p, true);
            assert!(v.is_in_set(), "{x}: {v:?}");
            // both classes of edges round the zero region are explored
            let round_zero = rec
                .edges
                .iter()
                .filter(|&&(a, b)| a.is_infinite() || b.is_infinite())
                .count();
            assert_eq!(round_zero, 2);
        }
    }

    fn arb_triple() -> impl Strategy<Value = [Complex64; 3]> {
        prop::array::uniform3((-4.0f64..4.0, -4.0f64..4.0).prop_map(|(a, b)| c(a, b)))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn deterministic(t in arb_triple()) {
            let p = small_budget();
            prop_assert_eq!(membership(t, &p), membership(t, &p));
        }

        #[test]
        fn conjugation_equivariant(t in arb_triple()) {
            let p = small_budget();
            let conj = t.map(|z| z.conj());
            let (a, b) = (membership(t, &p), membership(conj, &p));
            prop_assert_eq!(a.kind(), b.kind());
            if let (Verdict::InSet { sink_vertices: v1, sink_edges: e1 },
                    Verdict::InSet { sink_vertices: v2, sink_edges: e2 }) = (a, b) {
                prop_assert_eq!((v1, e1), (v2, e2));
            }
        }

        #[test]
        fn larger_budgets_keep_in_set(t in arb_triple()) {
            let small = BowditchParams { max_descent_steps: 200, max_sink_edges: 300, ..Default::default() };
            let large = BowditchParams { max_descent_steps: 5_000, max_sink_edges: 10_000, ..Default::default() };
            let a = membership(t, &small);
            if a.is_in_set() {
                prop_assert_eq!(a, membership(t, &large));
            }
        }

        #[test]
        fn explored_edges_connect_to_sink(t in arb_triple()) {
            let (v, rec) = membership_recorded(t, &small_budget(), false);
            if v.is_in_set() {
                // every explored vertex after the sink is entered through an
                // explored edge whose regions it contains
                for (w, &(x, y)) in rec.vertices.iter().skip(1).zip(rec.edges.iter()) {
                    prop_assert!(w.regions.contains(&x) && w.regions.contains(&y));
                }
                let [a, b, cc] = &t;
                let mu = mu_invariant(a, b, cc);
                for w in &rec.vertices {
                    for e in 0..3 {
                        let (j, k) = others(e);
                        if edge_in_t(w.values[j], w.values[k], mu) {
                            let pair = ordered(w.regions[j], w.regions[k]);
                            prop_assert!(rec.edges.iter().any(|&(x, y)| ordered(x, y) == pair));
                        }
                    }
                }
            }
        }
    }
}
