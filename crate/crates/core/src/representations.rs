//! Explicit SL(2,C) models of the slice groups, parametrised by `zeta`.
//!
//! The three involutions `P`, `Q`, `R` rotate by pi about the lines
//! `[zeta, -zeta]`, `[i zeta, -i zeta]` and `[1, -3]`. Everything else is a
//! word in them.

use std::f64::consts::PI;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use thiserror::Error;

use crate::farey::{primitive_word, FareyError, Rational};

const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RepresentationError {
    #[error("line endpoints coincide at {0}")]
    DegenerateLine(Complex64),
    #[error("invalid parameter zeta = {0}")]
    InvalidParameter(Complex64),
    #[error(transparent)]
    Farey(#[from] FareyError),
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// `[[a, b], [c, d]]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat2 {
    pub a: Complex64,
    pub b: Complex64,
    pub c: Complex64,
    pub d: Complex64,
}

impl Mat2 {
    pub const IDENTITY: Mat2 = Mat2 {
        a: Complex64::new(1.0, 0.0),
        b: Complex64::new(0.0, 0.0),
        c: Complex64::new(0.0, 0.0),
        d: Complex64::new(1.0, 0.0),
    };

    pub fn new(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> Self {
        Mat2 { a, b, c, d }
    }

    pub fn det(&self) -> Complex64 {
        self.a * self.d - self.b * self.c
    }

    pub fn trace(&self) -> Complex64 {
        self.a + self.d
    }

    pub fn scale(&self, s: Complex64) -> Mat2 {
        Mat2::new(self.a * s, self.b * s, self.c * s, self.d * s)
    }

    pub fn inverse(&self) -> Mat2 {
        Mat2::new(self.d, -self.b, -self.c, self.a).scale(self.det().inv())
    }

    /// `self * other * self^-1`.
    pub fn conjugate(&self, other: &Mat2) -> Mat2 {
        *self * *other * self.inverse()
    }

    pub fn commutator(&self, other: &Mat2) -> Mat2 {
        *self * *other * self.inverse() * other.inverse()
    }

    pub fn pow(&self, n: u32) -> Mat2 {
        (0..n).fold(Mat2::IDENTITY, |acc, _| acc * *self)
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn distance(&self, other: &Mat2) -> f64 {
        let diff = *self - *other;
        [diff.a, diff.b, diff.c, diff.d]
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }
}

impl Mul for Mat2 {
    type Output = Mat2;

    fn mul(self, o: Mat2) -> Mat2 {
        Mat2::new(
            self.a * o.a + self.b * o.c,
            self.a * o.b + self.b * o.d,
            self.c * o.a + self.d * o.c,
            self.c * o.b + self.d * o.d,
        )
    }
}

impl Add for Mat2 {
    type Output = Mat2;

    fn add(self, o: Mat2) -> Mat2 {
        Mat2::new(self.a + o.a, self.b + o.b, self.c + o.c, self.d + o.d)
    }
}

impl Sub for Mat2 {
    type Output = Mat2;

    fn sub(self, o: Mat2) -> Mat2 {
        Mat2::new(self.a - o.a, self.b - o.b, self.c - o.c, self.d - o.d)
    }
}

impl Neg for Mat2 {
    type Output = Mat2;

    fn neg(self) -> Mat2 {
        self.scale(c(-1.0, 0.0))
    }
}

impl fmt::Display for Mat2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[[{}, {}], [{}, {}]]", self.a, self.b, self.c, self.d)
    }
}

/// Half-turn about the geodesic with endpoints `u`, `u2`.
pub fn line_matrix(u: Complex64, u2: Complex64) -> Result<Mat2, RepresentationError> {
    if u == u2 {
        return Err(RepresentationError::DegenerateLine(u));
    }
    let s = I / (u - u2);
    let sum = u + u2;
    Ok(Mat2::new(sum, -2.0 * u * u2, c(2.0, 0.0), -sum).scale(s))
}

/// All named elements of the group at one parameter value.
#[derive(Debug, Clone)]
pub struct GroupModel {
    pub zeta: Complex64,
    pub p: Mat2,
    pub q: Mat2,
    pub r: Mat2,
    pub k0: Mat2,
    pub k1: Mat2,
    pub k2: Mat2,
    pub k3: Mat2,
    pub x_gen: Mat2,
    pub y_gen: Mat2,
    pub a: Mat2,
    pub b: Mat2,
    /// Trace of `x_gen`.
    pub x: Complex64,
    pub degenerate: Degeneracy,
}

/// Boundary parameters that are kept but flagged.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Degeneracy {
    /// `|zeta| = sqrt 3`.
    pub on_fuchsian_circle: bool,
    /// `Tr A` real and in `[-2, 2]`.
    pub a_not_loxodromic: bool,
}

const DEGENERACY_TOL: f64 = 1e-10;

pub fn build(zeta: Complex64) -> Result<GroupModel, RepresentationError> {
    if zeta == c(0.0, 0.0) || !zeta.is_finite() {
        return Err(RepresentationError::InvalidParameter(zeta));
    }
    let p = line_matrix(zeta, -zeta)?;
    let q = line_matrix(I * zeta, -I * zeta)?;
    let r = line_matrix(c(1.0, 0.0), c(-3.0, 0.0))?;
    let mut k0 = r * q * p;
    if k0.pow(3).distance(&Mat2::IDENTITY) > k0.pow(3).distance(&-Mat2::IDENTITY) {
        k0 = -k0;
    }
    let k1 = p.conjugate(&k0);
    let k2 = q.conjugate(&k0);
    let k3 = r.conjugate(&k0);
    let x_gen = k0 * k1;
    let y_gen = k1 * k0;
    let a = r * q;
    let b = p * q;
    let tr_a = a.trace();
    let degenerate = Degeneracy {
        on_fuchsian_circle: (zeta.norm() - 3f64.sqrt()).abs() <= DEGENERACY_TOL,
        a_not_loxodromic: tr_a.im.abs() <= DEGENERACY_TOL && tr_a.re.abs() <= 2.0 + DEGENERACY_TOL,
    };
    Ok(GroupModel {
        zeta,
        p,
        q,
        r,
        k0,
        k1,
        k2,
        k3,
        x: x_gen.trace(),
        x_gen,
        y_gen,
        a,
        b,
        degenerate,
    })
}

pub fn zeta_to_x(zeta: Complex64) -> Complex64 {
    let z2 = zeta * zeta;
    z2 / 4.0 + 9.0 / (4.0 * z2) + 0.5
}

/// The four `zeta` with `zeta_to_x(zeta) = x`, as `[s, -s, t, -t]` with
/// `s^2 t^2 = 9`.
pub fn x_to_zetas(x: Complex64) -> [Complex64; 4] {
    // zeta^2 solves w^2 - (4x - 2) w + 9 = 0
    let half_b = 2.0 * x - 1.0;
    let disc = (half_b * half_b - 9.0).sqrt();
    let w1 = half_b + disc;
    let w2 = half_b - disc;
    let (s, t) = (w1.sqrt(), w2.sqrt());
    [s, -s, t, -t]
}

/// Trace of `A` as a closed form in `zeta`.
pub fn trace_a(zeta: Complex64) -> Complex64 {
    3.0 * I / (2.0 * zeta) - I * zeta / 2.0
}

/// Trace of `AB` as a closed form in `zeta`.
pub fn trace_ab(zeta: Complex64) -> Complex64 {
    -zeta / 2.0 - 3.0 / (2.0 * zeta)
}

/// `(Tr A, Tr B, Tr AB)`.
pub fn torus_triple(zeta: Complex64) -> [Complex64; 3] {
    [trace_a(zeta), c(0.0, 0.0), trace_ab(zeta)]
}

#[derive(Debug, Clone, PartialEq)]
pub struct IdentityCheck {
    pub name: &'static str,
    pub residual: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IdentityReport {
    pub zeta: Complex64,
    pub tol: f64,
    pub checks: Vec<IdentityCheck>,
}

impl IdentityReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &IdentityCheck> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

impl fmt::Display for IdentityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "zeta = {}, tol = {:e}", self.zeta, self.tol)?;
        for check in &self.checks {
            writeln!(
                f,
                "  {:<28} {:>10.3e}  {}",
                check.name,
                check.residual,
                if check.passed { "ok" } else { "FAIL" }
            )?;
        }
        let failed = self.checks.iter().filter(|c| !c.passed).count();
        if failed == 0 {
            write!(f, "all {} identities pass", self.checks.len())
        } else {
            write!(f, "{failed} of {} identities FAIL", self.checks.len())
        }
    }
}

pub fn verify_identities(m: &GroupModel, tol: f64) -> IdentityReport {
    let id = Mat2::IDENTITY;
    let minus_id = -id;
    let x = zeta_to_x(m.zeta);
    let mut checks = Vec::new();
    let mut push = |name: &'static str, residual: f64| {
        checks.push(IdentityCheck {
            name,
            residual,
            passed: residual <= tol,
        });
    };
    let worst_det = [
        m.p, m.q, m.r, m.k0, m.k1, m.k2, m.k3, m.x_gen, m.y_gen, m.a, m.b,
    ]
    .iter()
    .map(|g| (g.det() - 1.0).norm())
    .fold(0.0, f64::max);
    push("det = 1", worst_det);
    push("P^2 = -I", (m.p * m.p).distance(&minus_id));
    push("Q^2 = -I", (m.q * m.q).distance(&minus_id));
    push("R^2 = -I", (m.r * m.r).distance(&minus_id));
    push("PQ = -QP", (m.p * m.q).distance(&-(m.q * m.p)));
    push("K0^3 = I", m.k0.pow(3).distance(&id));
    push("K0 K3 K1 K2 = I", (m.k0 * m.k3 * m.k1 * m.k2).distance(&id));
    let k0_inv = m.k0.inverse();
    push("K0^-1 X K0 = Y", (k0_inv * m.x_gen * m.k0).distance(&m.y_gen));
    push(
        "K0^-1 Y K0 = (XY)^-1",
        (k0_inv * m.y_gen * m.k0).distance(&(m.x_gen * m.y_gen).inverse()),
    );
    push("Tr X = x", (m.x_gen.trace() - x).norm());
    push("Tr Y = x", (m.y_gen.trace() - x).norm());
    push("Tr XY = x", ((m.x_gen * m.y_gen).trace() - x).norm());
    push("B^2 = -I", (m.b * m.b).distance(&minus_id));
    push("AB = RP", (m.a * m.b).distance(&(m.r * m.p)));
    push("A^2 = -K0 K1", (m.a * m.a).distance(&-(m.k0 * m.k1)));
    push("[A,B] = -K0^2", m.a.commutator(&m.b).distance(&-(m.k0 * m.k0)));
    push("Tr [A,B] = 1", (m.a.commutator(&m.b).trace() - 1.0).norm());
    push("Tr A closed form", (m.a.trace() - trace_a(m.zeta)).norm());
    push("Tr B = 0", m.b.trace().norm());
    push("Tr AB closed form", ((m.a * m.b).trace() - trace_ab(m.zeta)).norm());
    IdentityReport {
        zeta: m.zeta,
        tol,
        checks,
    }
}

/// Trace of the primitive word for `r`, with `a -> A` and `b -> B`.
pub fn matrix_trace_of_word(r: Rational, m: &GroupModel) -> Result<Complex64, RepresentationError> {
    let word = primitive_word(r)?;
    let product = word.chars().fold(Mat2::IDENTITY, |acc, ch| {
        acc * if ch == 'a' { m.a } else { m.b }
    });
    Ok(product.trace())
}

/// Strictly outside the ellipse `(2u - 1)^2 / 25 + v^2 / 4 = 1`.
pub fn ellipse_exterior(x: Complex64) -> bool {
    let u = 2.0 * x.re - 1.0;
    u * u / 25.0 + x.im * x.im / 4.0 > 1.0
}

/// Signed complex distance between the axes of `K0` and `K1`.
pub fn axis_distance(zeta: Complex64) -> Complex64 {
    2.0 * (3f64.sqrt() / zeta).ln() - c(0.0, PI)
}

/// `cosh sigma = -(2x - 1) / 3` with `sigma` from [`axis_distance`].
pub fn cosh_sigma_check(m: &GroupModel, tol: f64) -> bool {
    let sigma = axis_distance(m.zeta);
    (sigma.cosh() + (2.0 * m.x - 1.0) / 3.0).norm() <= tol
}

/// Images of `zeta` under the parameter symmetries and the induced action on
/// torus traces.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetryImages {
    pub negate: Complex64,
    pub invert: Complex64,
    pub rotate: Complex64,
    /// `(Tr A, Tr B, Tr AB)` at `rotate`; equals `(-Tr AB, -Tr B, Tr A)` at
    /// the original parameter.
    pub rotated_triple: [Complex64; 3],
}

pub fn symmetry_action(zeta: Complex64) -> Result<SymmetryImages, RepresentationError> {
    if zeta == c(0.0, 0.0) {
        return Err(RepresentationError::InvalidParameter(zeta));
    }
    let rotate = I * zeta;
    Ok(SymmetryImages {
        negate: -zeta,
        invert: -3.0 / zeta,
        rotate,
        rotated_triple: torus_triple(rotate),
    })
}
