//! Trace polynomials of the curves `gamma_{p/q}` and their pleating rays.
//!
//! `f_{p/q}(x)` is the S-tree label at `p/q` from the root `(x, 2, 1 - x)`
//! at `(0/1, 1/0, 1/1)`. A ray is a component of the locus where
//! `f_{p/q}` is real and at most `-2`; it runs in from infinity along
//! `arg x = pi (q - p) / q` (or its conjugate) and ends at the cusp
//! `f = -2`.

use std::f64::consts::PI;
use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;
use rayon::prelude::*;
use thiserror::Error;

use crate::farey::{canonical_classes, Rational};
use crate::poly::IntPoly;
use crate::representations::{self, RepresentationError};
use crate::tracetree::{label_at, MoveRule, TraceValue, TreeVertex};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PleatingError {
    #[error("Newton continuation stalled on {pq} near trace {target}")]
    NewtonStall { pq: Rational, target: f64 },
    #[error("{0} has no pleating ray")]
    NoRay(Rational),
    #[error(transparent)]
    Representation(#[from] RepresentationError),
}

/// `f_{p/q}` with exact integer coefficients. Any label is accepted;
/// non-canonical labels give the same polynomial as their class.
pub fn trace_polynomial(r: Rational) -> IntPoly {
    let root = TreeVertex::base([
        IntPoly::x(),
        IntPoly::constant(2),
        IntPoly::new(vec![1, -1]),
    ]);
    label_at(r, &root, MoveRule::STree)
}

/// Coefficients `(x^q, x^{q-1})` predicted for canonical `0 <= p <= q`.
pub fn predicted_top_terms(r: Rational) -> (i128, i128) {
    let (p, q) = (r.numer() as i128, r.denom() as i128);
    let sign = if (p - q - 1).rem_euclid(2) == 0 { 1 } else { -1 };
    (sign, -sign * p)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PolySymmetryReport {
    pub pq: Rational,
    /// `f_{p/q} = f_{(p+2q)/q}`.
    pub translation: bool,
    /// `f_{p/q} = f_{-p/q}`.
    pub reflection: bool,
    /// `f_{p/q}(x) = f_{(p+q)/q}(1 - x)`.
    pub half_turn: bool,
}

impl PolySymmetryReport {
    pub fn all_hold(&self) -> bool {
        self.translation && self.reflection && self.half_turn
    }
}

pub fn poly_symmetry_checks(r: Rational) -> PolySymmetryReport {
    let f = trace_polynomial(r);
    PolySymmetryReport {
        pq: r,
        translation: f == trace_polynomial(r.shift(2)),
        reflection: f == trace_polynomial(r.neg()),
        half_turn: f == trace_polynomial(r.shift(1)).reflect_half(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TorusConsistency {
    pub pq: Rational,
    pub f: Complex64,
    pub g_matrix: Complex64,
    pub g_tree: Complex64,
    /// `|-f - (g^2 - 2)|` with `g` from matrix products.
    pub residual_matrix: f64,
    /// Same with `g` from the Markoff tree.
    pub residual_tree: f64,
    /// `|g_tree - g_matrix|`.
    pub tree_matrix_gap: f64,
}

/// Compares `f_{p/q}(x(zeta))` with the torus trace `g_{p/q}(zeta)`.
pub fn torus_consistency(r: Rational, zeta: Complex64) -> Result<TorusConsistency, PleatingError> {
    let model = representations::build(zeta)?;
    let x = representations::zeta_to_x(zeta);
    let f = trace_polynomial(r).eval(x);
    let g_matrix = representations::matrix_trace_of_word(r, &model)?;
    let root = TreeVertex::base(representations::torus_triple(zeta));
    let g_tree = label_at(r, &root, MoveRule::Markoff);
    let residual = |g: Complex64| (-f - (g * g - 2.0)).norm();
    Ok(TorusConsistency {
        pq: r,
        f,
        g_matrix,
        g_tree,
        residual_matrix: residual(g_matrix),
        residual_tree: residual(g_tree),
        tree_matrix_gap: (g_tree - g_matrix).norm(),
    })
}

/// Value and derivative carried together.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dual {
    pub value: Complex64,
    pub deriv: Complex64,
}

impl Add for Dual {
    type Output = Dual;

    fn add(self, o: Dual) -> Dual {
        Dual {
            value: self.value + o.value,
            deriv: self.deriv + o.deriv,
        }
    }
}

impl Sub for Dual {
    type Output = Dual;

    fn sub(self, o: Dual) -> Dual {
        Dual {
            value: self.value - o.value,
            deriv: self.deriv - o.deriv,
        }
    }
}

impl Mul for Dual {
    type Output = Dual;

    fn mul(self, o: Dual) -> Dual {
        Dual {
            value: self.value * o.value,
            deriv: self.value * o.deriv + self.deriv * o.value,
        }
    }
}

impl TraceValue for Dual {
    fn from_i64(n: i64) -> Self {
        Dual {
            value: Complex64::new(n as f64, 0.0),
            deriv: Complex64::new(0.0, 0.0),
        }
    }
}

/// A trace function whose real locus below `-2` carries the rays.
pub trait TraceFn: Sync {
    /// `(F(x), F'(x))`.
    fn eval(&self, x: Complex64) -> (Complex64, Complex64);

    /// Radius at which the leading term dominates.
    fn start_radius(&self) -> f64;
}

/// The diagonal slice: `F = f_{p/q}`.
#[derive(Debug, Clone)]
pub struct DiagonalTrace {
    pub poly: IntPoly,
}

impl DiagonalTrace {
    pub fn new(r: Rational) -> Self {
        DiagonalTrace {
            poly: trace_polynomial(r),
        }
    }
}

impl TraceFn for DiagonalTrace {
    fn eval(&self, x: Complex64) -> (Complex64, Complex64) {
        self.poly.eval_with_derivative(x)
    }

    fn start_radius(&self) -> f64 {
        MIN_START_RADIUS.max(2.0 * (1.0 + self.poly.max_abs_coeff() as f64))
    }
}

/// The Riley slice: `F = 2 - g^2` with `g` the Markoff-tree label from the
/// root `(sqrt(-x), 0, sqrt(x))`, principal branches.
#[derive(Debug, Clone, Copy)]
pub struct RileyTrace {
    pub pq: Rational,
}

impl RileyTrace {
    pub fn g(&self, x: Complex64) -> Dual {
        let a = (-x).sqrt();
        let c = x.sqrt();
        let root = TreeVertex::base([
            Dual {
                value: a,
                deriv: -0.5 / a,
            },
            Dual::from_i64(0),
            Dual {
                value: c,
                deriv: 0.5 / c,
            },
        ]);
        label_at(self.pq, &root, MoveRule::Markoff)
    }
}

impl TraceFn for RileyTrace {
    fn eval(&self, x: Complex64) -> (Complex64, Complex64) {
        let g = self.g(x);
        (2.0 - g.value * g.value, -2.0 * g.value * g.deriv)
    }

    fn start_radius(&self) -> f64 {
        MIN_START_RADIUS * self.pq.denom().max(1) as f64
    }
}

const MIN_START_RADIUS: f64 = 100.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Branch {
    /// `Im x > 0`.
    Upper,
    /// Conjugate of `Upper`.
    Lower,
    /// The two branches coincide on the real axis.
    Real,
}

impl Branch {
    pub fn as_str(self) -> &'static str {
        match self {
            Branch::Upper => "upper",
            Branch::Lower => "lower",
            Branch::Real => "real",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RayPolyline {
    pub pq: Rational,
    pub branch: Branch,
    /// From the far end in towards the cusp.
    pub points: Vec<Complex64>,
    /// Target trace value at each point, increasing to `-2`.
    pub trace_values: Vec<f64>,
    /// Point with `F = -2`, if the continuation got there.
    pub cusp: Option<Complex64>,
    pub stall: Option<PleatingError>,
}

impl RayPolyline {
    pub fn is_complete(&self) -> bool {
        self.stall.is_none() && self.cusp.is_some()
    }

    fn conjugate(&self, branch: Branch) -> RayPolyline {
        RayPolyline {
            branch,
            points: self.points.iter().map(|z| z.conj()).collect(),
            cusp: self.cusp.map(|z| z.conj()),
            ..self.clone()
        }
    }

    /// The sample whose target trace equals `t`, if scheduled.
    pub fn sample_at(&self, t: f64) -> Option<Complex64> {
        self.trace_values
            .iter()
            .position(|&v| v == t)
            .map(|k| self.points[k])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RayOptions {
    /// Overrides the trace function's own starting radius.
    pub r_start: Option<f64>,
    pub t_samples: usize,
    pub newton_tol: f64,
    pub newton_max_iter: usize,
    pub max_halvings: usize,
    /// Trace values always included in the schedule when in range.
    pub extra_targets: Vec<f64>,
}

impl Default for RayOptions {
    fn default() -> Self {
        RayOptions {
            r_start: None,
            t_samples: 400,
            newton_tol: 1e-12,
            newton_max_iter: 50,
            max_halvings: 8,
            extra_targets: vec![-10.0],
        }
    }
}

const CUSP_TRACE: f64 = -2.0;
const MAX_SUBDIVISIONS: usize = 24;

/// Asymptotic direction of the upper (or real) branch.
pub fn asymptotic_angle(r: Rational) -> f64 {
    PI * (r.denom() - r.numer()) as f64 / r.denom() as f64
}

/// Trace values from `t0` up to `-2`, geometric in `-2 - t`.
fn schedule(t0: f64, opts: &RayOptions) -> Vec<f64> {
    let s0 = CUSP_TRACE - t0;
    let n = opts.t_samples.max(2);
    let mut ts: Vec<f64> = (0..n)
        .map(|k| {
            let frac = 1.0 - k as f64 / (n - 1) as f64;
            CUSP_TRACE - ((s0 + 1.0).powf(frac) - 1.0)
        })
        .collect();
    ts[0] = t0;
    ts[n - 1] = CUSP_TRACE;
    for &t in &opts.extra_targets {
        if t > t0 && t < CUSP_TRACE && !ts.contains(&t) {
            ts.push(t);
        }
    }
    ts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    ts.dedup();
    ts
}

struct Tracer<'a, F: TraceFn> {
    f: &'a F,
    opts: &'a RayOptions,
    upper: bool,
}

impl<F: TraceFn> Tracer<'_, F> {
    fn residual_ok(&self, fx: Complex64, t: f64) -> bool {
        (fx - t).norm() <= self.opts.newton_tol * t.abs().max(1.0)
    }

    fn admissible(&self, x: Complex64) -> bool {
        !self.upper || x.im > 0.0
    }

    /// Newton's method for `F(x) = t` with step halving.
    fn solve(&self, mut x: Complex64, t: f64) -> Option<Complex64> {
        for _ in 0..self.opts.newton_max_iter {
            let (fx, dfx) = self.f.eval(x);
            if !fx.is_finite() || !dfx.is_finite() {
                return None;
            }
            let res = (fx - t).norm();
            if self.residual_ok(fx, t) {
                return Some(self.polish(x, fx, dfx, t));
            }
            if dfx.norm() < 1e-12 {
                return None;
            }
            let step = (fx - t) / dfx;
            let mut lam = 1.0;
            let mut moved = false;
            for _ in 0..=self.opts.max_halvings {
                let xn = x - step * lam;
                let fn_ = self.f.eval(xn).0;
                if (fn_ - t).norm() < res {
                    x = xn;
                    moved = true;
                    break;
                }
                lam *= 0.5;
            }
            if !moved {
                // stagnation at rounding level counts as converged
                return ((fx - t).norm() <= 1e-9 * t.abs().max(1.0)).then_some(x);
            }
        }
        let fx = self.f.eval(x).0;
        self.residual_ok(fx, t).then_some(x)
    }

    /// One more Newton step, kept only if it helps.
    fn polish(&self, x: Complex64, fx: Complex64, dfx: Complex64, t: f64) -> Complex64 {
        let xn = x - (fx - t) / dfx;
        let fxn = self.f.eval(xn).0;
        if self.admissible(xn) && (fxn - t).norm() < (fx - t).norm() {
            xn
        } else {
            x
        }
    }

    fn advance(&self, x: Complex64, from: f64, to: f64, depth: usize) -> Option<Complex64> {
        let (_, dfx) = self.f.eval(x);
        let predictor = x + (to - from) / dfx;
        let jump = (predictor - x).norm();
        if let Some(xn) = self.solve(predictor, to) {
            let correction = (xn - predictor).norm();
            if self.admissible(xn) && correction <= 0.5 * jump + 1e-9 * (1.0 + x.norm()) {
                return Some(xn);
            }
        }
        if depth >= MAX_SUBDIVISIONS {
            return None;
        }
        let mid = 0.5 * (from + to);
        let xm = self.advance(x, from, mid, depth + 1)?;
        self.advance(xm, mid, to, depth + 1)
    }

    fn trace(&self, pq: Rational, angle: f64, branch: Branch) -> RayPolyline {
        let radius = self.opts.r_start.unwrap_or_else(|| self.f.start_radius());
        let x0 = if branch == Branch::Real {
            Complex64::new(radius * angle.cos().signum(), 0.0)
        } else {
            Complex64::from_polar(radius, angle)
        };
        let mut ray = RayPolyline {
            pq,
            branch,
            points: Vec::new(),
            trace_values: Vec::new(),
            cusp: None,
            stall: None,
        };
        let t0 = self.f.eval(x0).0.re;
        let stall = |t: f64| PleatingError::NewtonStall { pq, target: t };
        if t0.is_nan() || t0 >= CUSP_TRACE {
            ray.stall = Some(stall(t0));
            return ray;
        }
        let Some(mut x) = self.solve(x0, t0).filter(|&x| self.admissible(x)) else {
            ray.stall = Some(stall(t0));
            return ray;
        };
        let ts = schedule(t0, self.opts);
        ray.points.push(x);
        ray.trace_values.push(t0);
        for w in ts.windows(2) {
            match self.advance(x, w[0], w[1], 0) {
                Some(xn) => {
                    x = xn;
                    ray.points.push(x);
                    ray.trace_values.push(w[1]);
                }
                None => {
                    ray.stall = Some(stall(w[1]));
                    return ray;
                }
            }
        }
        ray.cusp = Some(x);
        ray
    }
}

fn is_real_ray(r: Rational) -> bool {
    r == Rational::ZERO || r == Rational::ONE
}

/// Traces the rays of class `r` for a given trace function. The classes
/// `0/1` and `1/1` give one real ray; every other class gives an upper
/// branch and its conjugate.
pub fn trace_ray_with<F: TraceFn>(
    r: Rational,
    f: &F,
    opts: &RayOptions,
) -> Result<Vec<RayPolyline>, PleatingError> {
    if r.is_infinite() || r.is_negative() || r > Rational::ONE {
        return Err(PleatingError::NoRay(r));
    }
    let angle = asymptotic_angle(r);
    if is_real_ray(r) {
        let tracer = Tracer {
            f,
            opts,
            upper: false,
        };
        return Ok(vec![tracer.trace(r, angle, Branch::Real)]);
    }
    let tracer = Tracer {
        f,
        opts,
        upper: true,
    };
    let upper = tracer.trace(r, angle, Branch::Upper);
    let lower = upper.conjugate(Branch::Lower);
    Ok(vec![upper, lower])
}

/// Diagonal-slice rays of the canonical class `r` in `[0, 1]`.
pub fn trace_ray(r: Rational, opts: &RayOptions) -> Result<Vec<RayPolyline>, PleatingError> {
    trace_ray_with(r, &DiagonalTrace::new(r), opts)
}

/// Riley-slice rays of the canonical class `r` in `[0, 1]`.
pub fn trace_riley_ray(r: Rational, opts: &RayOptions) -> Result<Vec<RayPolyline>, PleatingError> {
    trace_ray_with(r, &RileyTrace { pq: r }, opts)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RaySlice {
    Diagonal,
    Riley,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CuspRow {
    pub pq: Rational,
    pub branch: Branch,
    pub cusp: Complex64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RayBatch {
    pub rays: Vec<RayPolyline>,
    pub cusps: Vec<CuspRow>,
}

impl RayBatch {
    pub fn stalled(&self) -> impl Iterator<Item = &RayPolyline> {
        self.rays.iter().filter(|r| r.stall.is_some())
    }
}

/// All rays with `q <= max_q`, in class order, traced in parallel.
pub fn rays_batch(max_q: i64, slice: RaySlice, opts: &RayOptions) -> RayBatch {
    let classes = canonical_classes(max_q.max(1));
    let rays: Vec<RayPolyline> = classes
        .par_iter()
        .map(|&r| {
            let traced = match slice {
                RaySlice::Diagonal => trace_ray(r, opts),
                RaySlice::Riley => trace_riley_ray(r, opts),
            };
            traced.expect("canonical classes always have rays")
        })
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect();
    let cusps = rays
        .iter()
        .filter_map(|ray| {
            ray.cusp.map(|cusp| CuspRow {
                pq: ray.pq,
                branch: ray.branch,
                cusp,
            })
        })
        .collect();
    RayBatch { rays, cusps }
}
