//! Grid scans of Bowditch membership, image output, ray overlays and
//! data export.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::bowditch::{membership_quotient, BowditchError, BowditchParams, Verdict, VerdictKind};
use crate::expr::Expr;
use crate::pleating::RayPolyline;
use crate::representations::{torus_triple, x_to_zetas, zeta_to_x};

#[derive(Debug, Error)]
pub enum RasterError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("rays live in the x-plane but the grid is in the {0} plane")]
    PlaneMismatch(Plane),
    #[error("the {slice} slice is not defined on the {plane} plane")]
    SliceUnavailable { slice: &'static str, plane: Plane },
    #[error(transparent)]
    Bowditch(#[from] BowditchError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Png(#[from] png::EncodingError),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Plane {
    X,
    Zeta,
}

impl fmt::Display for Plane {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Plane::X => "x",
            Plane::Zeta => "zeta",
        })
    }
}

impl FromStr for Plane {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "x" => Ok(Plane::X),
            "zeta" | "z" => Ok(Plane::Zeta),
            _ => Err(format!("unknown plane {s:?}, expected x or zeta")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridSpec {
    #[serde(serialize_with = "ser_complex")]
    pub center: Complex64,
    pub width: f64,
    pub height: f64,
    pub nx: usize,
    pub ny: usize,
    pub plane: Plane,
}

fn ser_complex<S: serde::Serializer>(z: &Complex64, s: S) -> Result<S::Ok, S::Error> {
    [z.re, z.im].serialize(s)
}

impl GridSpec {
    /// Default window: `0.5 + 0i`, 12 by 8 in the x-plane; `[-4,4]^2` in the zeta-plane.
    pub fn default_for(plane: Plane, nx: usize, ny: usize) -> Self {
        match plane {
            Plane::X => GridSpec {
                center: Complex64::new(0.5, 0.0),
                width: 12.0,
                height: 8.0,
                nx,
                ny,
                plane,
            },
            Plane::Zeta => GridSpec {
                center: Complex64::new(0.0, 0.0),
                width: 8.0,
                height: 8.0,
                nx,
                ny,
                plane,
            },
        }
    }

    pub fn validate(&self) -> Result<(), RasterError> {
        if self.nx == 0 || self.ny == 0 {
            return Err(RasterError::InvalidGrid(format!(
                "resolution {}x{} must be at least 1x1",
                self.nx, self.ny
            )));
        }
        if !(self.width > 0.0 && self.height > 0.0) || !self.width.is_finite() || !self.height.is_finite() {
            return Err(RasterError::InvalidGrid(format!(
                "width {} and height {} must be positive",
                self.width, self.height
            )));
        }
        if !self.center.is_finite() {
            return Err(RasterError::InvalidGrid("center must be finite".into()));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Centre of pixel `(i, j)`; row 0 is the top (largest imaginary part).
    pub fn sample(&self, i: usize, j: usize) -> Complex64 {
        let (nx, ny) = (self.nx as f64, self.ny as f64);
        let re = self.center.re + (2.0 * i as f64 + 1.0 - nx) * self.width / (2.0 * nx);
        let im = self.center.im + (ny - 1.0 - 2.0 * j as f64) * self.height / (2.0 * ny);
        Complex64::new(re, im)
    }

    /// Fractional pixel coordinates of `z`, inverse of `sample`.
    pub fn pixel_coords(&self, z: Complex64) -> (f64, f64) {
        let (nx, ny) = (self.nx as f64, self.ny as f64);
        let i = ((z.re - self.center.re) * 2.0 * nx / self.width + nx - 1.0) / 2.0;
        let j = (ny - 1.0 - (z.im - self.center.im) * 2.0 * ny / self.height) / 2.0;
        (i, j)
    }

    /// Nearest pixel containing `z`, if inside the window.
    pub fn pixel_of(&self, z: Complex64) -> Option<(usize, usize)> {
        let (i, j) = self.pixel_coords(z);
        let (i, j) = (i.round(), j.round());
        (i >= 0.0 && j >= 0.0 && i < self.nx as f64 && j < self.ny as f64).then_some((i as usize, j as usize))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CustomSlice {
    pub a: Expr,
    pub b: Expr,
    pub c: Expr,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SliceKind {
    /// `(x, x, x)`.
    Diagonal,
    /// `(Tr A, 0, Tr AB)`.
    TorusZeta,
    /// `(sqrt(-x), 0, sqrt(x))`.
    Riley,
    Custom(CustomSlice),
}

impl SliceKind {
    pub fn name(&self) -> &'static str {
        match self {
            SliceKind::Diagonal => "diagonal",
            SliceKind::TorusZeta => "torus-zeta",
            SliceKind::Riley => "riley",
            SliceKind::Custom(_) => "custom",
        }
    }

    fn check_plane(&self, plane: Plane) -> Result<(), RasterError> {
        if matches!(self, SliceKind::Riley) && plane == Plane::Zeta {
            return Err(RasterError::SliceUnavailable {
                slice: self.name(),
                plane,
            });
        }
        Ok(())
    }

    /// Trace triple at a sample point of the given plane.
    pub fn triple(&self, sample: Complex64, plane: Plane) -> [Complex64; 3] {
        let zero = Complex64::new(0.0, 0.0);
        let x = match plane {
            Plane::X => sample,
            Plane::Zeta => zeta_to_x(sample),
        };
        match self {
            SliceKind::Diagonal => [x; 3],
            SliceKind::TorusZeta => match plane {
                Plane::Zeta => torus_triple(sample),
                Plane::X => [(2.0 - x).sqrt(), zero, (x + 1.0).sqrt()],
            },
            SliceKind::Riley => [(-x).sqrt(), zero, x.sqrt()],
            SliceKind::Custom(s) => {
                let zeta = match plane {
                    Plane::X => x_to_zetas(x)[0],
                    Plane::Zeta => sample,
                };
                [s.a.eval(x, zeta), s.b.eval(x, zeta), s.c.eval(x, zeta)]
            }
        }
    }
}

/// Membership at one sample. Triples with a zero middle value are
/// searched on the quotient tree.
pub fn verdict_at(sample: Complex64, plane: Plane, slice: &SliceKind, params: &BowditchParams) -> Verdict {
    membership_quotient(slice.triple(sample, plane), params)
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerdictGrid {
    pub grid: GridSpec,
    /// Row-major, top row first.
    pub verdicts: Vec<Verdict>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct Counts {
    pub in_set: usize,
    pub indecisive: usize,
    pub not_in_set: usize,
    pub not_applicable: usize,
}

impl VerdictGrid {
    pub fn get(&self, i: usize, j: usize) -> &Verdict {
        &self.verdicts[j * self.grid.nx + i]
    }

    pub fn kinds(&self) -> Vec<VerdictKind> {
        self.verdicts.iter().map(Verdict::kind).collect()
    }

    pub fn counts(&self) -> Counts {
        let mut c = Counts::default();
        for v in &self.verdicts {
            match v.kind() {
                VerdictKind::InSet => c.in_set += 1,
                VerdictKind::Indecisive => c.indecisive += 1,
                VerdictKind::NotInSet => c.not_in_set += 1,
                VerdictKind::NotApplicable => c.not_applicable += 1,
            }
        }
        c
    }
}

/// Evaluates every pixel in parallel; the result does not depend on the
/// number of worker threads.
pub fn scan(grid: &GridSpec, slice: &SliceKind, params: &BowditchParams) -> Result<VerdictGrid, RasterError> {
    grid.validate()?;
    params.validate()?;
    slice.check_plane(grid.plane)?;
    let verdicts = (0..grid.len())
        .into_par_iter()
        .map(|k| verdict_at(grid.sample(k % grid.nx, k / grid.nx), grid.plane, slice, params))
        .collect();
    Ok(VerdictGrid { grid: *grid, verdicts })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Image {
    pub width: usize,
    pub height: usize,
    /// RGB, row-major, top row first.
    pub pixels: Vec<[u8; 3]>,
}

impl Image {
    pub fn pixel(&self, i: usize, j: usize) -> [u8; 3] {
        self.pixels[j * self.width + i]
    }

    fn put(&mut self, i: usize, j: usize, rgb: [u8; 3]) {
        self.pixels[j * self.width + i] = rgb;
    }

    pub fn to_ppm(&self) -> Vec<u8> {
        let mut out = format!("P6\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.reserve(3 * self.pixels.len());
        for p in &self.pixels {
            out.extend_from_slice(p);
        }
        out
    }

    pub fn write_png<W: Write>(&self, w: W) -> Result<(), RasterError> {
        let mut encoder = png::Encoder::new(w, self.width as u32, self.height as u32);
        encoder.set_color(png::ColorType::Rgb);
        encoder.set_depth(png::BitDepth::Eight);
        let mut writer = encoder.write_header()?;
        let data: Vec<u8> = self.pixels.iter().flatten().copied().collect();
        writer.write_image_data(&data)?;
        Ok(())
    }
}

/// Grey level for an in-set pixel: larger sinks are darker.
pub fn sink_grey(sink_edges: usize) -> u8 {
    let g = 255.0 - 20.0 * (1.0 + sink_edges as f64).log2();
    g.clamp(40.0, 255.0).round() as u8
}

pub fn render(grid: &VerdictGrid) -> Image {
    let pixels = grid
        .verdicts
        .iter()
        .map(|v| match v {
            Verdict::InSet { sink_edges, .. } => [sink_grey(*sink_edges); 3],
            _ => [0, 0, 0],
        })
        .collect();
    Image {
        width: grid.grid.nx,
        height: grid.grid.ny,
        pixels,
    }
}

pub const RAY_COLOUR: [u8; 3] = [220, 30, 30];

/// Clips the segment to the box `[lo, hi]` in both coordinates.
fn clip(p: (f64, f64), q: (f64, f64), lo: (f64, f64), hi: (f64, f64)) -> Option<((f64, f64), (f64, f64))> {
    let (dx, dy) = (q.0 - p.0, q.1 - p.1);
    let mut t0: f64 = 0.0;
    let mut t1: f64 = 1.0;
    for (den, num) in [
        (-dx, p.0 - lo.0),
        (dx, hi.0 - p.0),
        (-dy, p.1 - lo.1),
        (dy, hi.1 - p.1),
    ] {
        if den == 0.0 {
            if num < 0.0 {
                return None;
            }
        } else {
            let t = num / den;
            if den < 0.0 {
                t0 = t0.max(t);
            } else {
                t1 = t1.min(t);
            }
        }
    }
    if t0 > t1 {
        return None;
    }
    Some(((p.0 + t0 * dx, p.1 + t0 * dy), (p.0 + t1 * dx, p.1 + t1 * dy)))
}

fn bresenham(img: &mut Image, from: (i64, i64), to: (i64, i64), rgb: [u8; 3]) {
    let (mut x, mut y) = from;
    let dx = (to.0 - x).abs();
    let dy = -(to.1 - y).abs();
    let sx = if x < to.0 { 1 } else { -1 };
    let sy = if y < to.1 { 1 } else { -1 };
    let mut err = dx + dy;
    loop {
        if x >= 0 && y >= 0 && (x as usize) < img.width && (y as usize) < img.height {
            img.put(x as usize, y as usize, rgb);
        }
        if (x, y) == to {
            break;
        }
        let e2 = 2 * err;
        if e2 >= dy {
            err += dy;
            x += sx;
        }
        if e2 <= dx {
            err += dx;
            y += sy;
        }
    }
}

/// Draws each ray as 1-pixel segments between consecutive samples.
pub fn overlay_rays(image: &Image, rays: &[RayPolyline], grid: &GridSpec) -> Result<Image, RasterError> {
    if grid.plane != Plane::X {
        return Err(RasterError::PlaneMismatch(grid.plane));
    }
    let mut out = image.clone();
    let lo = (-0.5, -0.5);
    let hi = (grid.nx as f64 - 0.5, grid.ny as f64 - 0.5);
    for ray in rays {
        let pts: Vec<(f64, f64)> = ray.points.iter().map(|&z| grid.pixel_coords(z)).collect();
        if pts.len() == 1 {
            if let Some((i, j)) = grid.pixel_of(ray.points[0]) {
                out.put(i, j, RAY_COLOUR);
            }
        }
        for w in pts.windows(2) {
            if let Some((p, q)) = clip(w[0], w[1], lo, hi) {
                let round = |c: (f64, f64)| {
                    (
                        c.0.round().clamp(0.0, hi.0 - 0.5) as i64,
                        c.1.round().clamp(0.0, hi.1 - 0.5) as i64,
                    )
                };
                bresenham(&mut out, round(p), round(q), RAY_COLOUR);
            }
        }
    }
    Ok(out)
}

/// One row per ray sample, then one cusp row with `index = -1`.
pub fn write_rays_csv<W: Write>(w: W, rays: &[RayPolyline]) -> Result<(), RasterError> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["p", "q", "branch", "index", "re_x", "im_x", "trace"])?;
    for ray in rays {
        let (p, q) = (ray.pq.numer(), ray.pq.denom());
        let branch = ray.branch.as_str();
        for (k, (z, t)) in ray.points.iter().zip(&ray.trace_values).enumerate() {
            out.serialize((p, q, branch, k as i64, z.re, z.im, t))?;
        }
        if let Some(z) = ray.cusp {
            out.serialize((p, q, branch, -1i64, z.re, z.im, -2.0))?;
        }
    }
    out.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct Budgets {
    pub descent: usize,
    pub sink: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub grid: GridSpec,
    pub slice: &'static str,
    pub budgets: Budgets,
    pub counts: Counts,
    pub wall_ms: u128,
}

impl Manifest {
    pub fn new(grid: &VerdictGrid, slice: &SliceKind, params: &BowditchParams, wall_ms: u128) -> Self {
        Manifest {
            grid: grid.grid,
            slice: slice.name(),
            budgets: Budgets {
                descent: params.max_descent_steps,
                sink: params.max_sink_edges,
            },
            counts: grid.counts(),
            wall_ms,
        }
    }

    pub fn to_json(&self) -> Result<String, RasterError> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::farey::Rational;
    use crate::pleating::{trace_ray, RayOptions};
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn grid(center: Complex64, w: f64, h: f64, nx: usize, ny: usize, plane: Plane) -> GridSpec {
        GridSpec {
            center,
            width: w,
            height: h,
            nx,
            ny,
            plane,
        }
    }

    #[test]
    fn small_scans() {
        let params = BowditchParams::default();
        let g = scan(&grid(c(2.5, 0.0), 0.2, 0.2, 3, 3, Plane::X), &SliceKind::Diagonal, &params).unwrap();
        for v in &g.verdicts {
            assert_eq!(*v, Verdict::InSet { sink_vertices: 1, sink_edges: 0 });
        }
        let g = scan(&grid(c(0.0, 0.0), 0.2, 0.2, 3, 3, Plane::X), &SliceKind::Diagonal, &params).unwrap();
        assert_eq!(g.counts().in_set, 0);
    }

    #[test]
    fn zeta_scan_is_symmetric_under_negation() {
        let params = BowditchParams::default();
        let g = scan(&GridSpec::default_for(Plane::Zeta, 24, 24), &SliceKind::Diagonal, &params).unwrap();
        for j in 0..24 {
            for i in 0..24 {
                assert_eq!(g.get(i, j).kind(), g.get(23 - i, 23 - j).kind());
            }
        }
    }

    #[test]
    fn invalid_input() {
        let params = BowditchParams::default();
        let bad = grid(c(0.0, 0.0), 0.0, 1.0, 4, 4, Plane::X);
        assert!(matches!(scan(&bad, &SliceKind::Diagonal, &params), Err(RasterError::InvalidGrid(_))));
        let bad = grid(c(0.0, 0.0), 1.0, 1.0, 0, 4, Plane::X);
        assert!(matches!(scan(&bad, &SliceKind::Diagonal, &params), Err(RasterError::InvalidGrid(_))));
        let z = GridSpec::default_for(Plane::Zeta, 2, 2);
        assert!(matches!(
            scan(&z, &SliceKind::Riley, &params),
            Err(RasterError::SliceUnavailable { .. })
        ));
    }

    #[test]
    fn render_examples() {
        let g = grid(c(0.0, 0.0), 1.0, 1.0, 2, 1, Plane::X);
        let vg = VerdictGrid {
            grid: g,
            verdicts: vec![
                Verdict::InSet { sink_vertices: 1, sink_edges: 0 },
                Verdict::Indecisive(crate::bowditch::Phase::Descent),
            ],
        };
        let img = render(&vg);
        let ppm = img.to_ppm();
        let header = b"P6\n2 1\n255\n";
        assert_eq!(&ppm[..header.len()], header);
        assert_eq!(&ppm[header.len()..], &[255, 255, 255, 0, 0, 0]);
        assert_eq!(sink_grey(0), 255);
        assert_eq!(sink_grey(1), 235);
        assert_eq!(sink_grey(1 << 20), 40);
    }

    #[test]
    fn png_round_trip_header() {
        let img = Image {
            width: 3,
            height: 2,
            pixels: vec![[1, 2, 3]; 6],
        };
        let mut buf = Vec::new();
        img.write_png(&mut buf).unwrap();
        assert_eq!(&buf[..8], b"\x89PNG\r\n\x1a\n");
    }

    #[test]
    fn overlay_examples() {
        let g = grid(c(-2.0, 0.0), 8.0, 4.0, 80, 41, Plane::X);
        let blank = Image {
            width: 80,
            height: 41,
            pixels: vec![[0, 0, 0]; 80 * 41],
        };
        assert_eq!(overlay_rays(&blank, &[], &g).unwrap(), blank);

        let opts = RayOptions::default();
        let ray = trace_ray(Rational::ZERO, &opts).unwrap();
        let img = overlay_rays(&blank, &ray, &g).unwrap();
        let (_, mid) = g.pixel_of(c(-3.0, 0.0)).unwrap();
        let (cusp_i, _) = g.pixel_of(c(-2.0, 0.0)).unwrap();
        for j in 0..41 {
            for i in 0..80 {
                let lit = img.pixel(i, j) == RAY_COLOUR;
                assert_eq!(lit, j == mid && i <= cusp_i, "pixel {i},{j}");
            }
        }

        let half = trace_ray(Rational::new(1, 2).unwrap(), &opts).unwrap();
        let g = grid(c(0.5, 0.0), 6.0, 6.0, 61, 61, Plane::X);
        let img = overlay_rays(&blank_of(61, 61), &half, &g).unwrap();
        let mut lit = 0;
        for j in 0..61 {
            for i in 0..61 {
                assert_eq!(img.pixel(i, j), img.pixel(i, 60 - j));
                lit += (img.pixel(i, j) == RAY_COLOUR) as usize;
            }
        }
        assert!(lit > 20);

        let z = GridSpec::default_for(Plane::Zeta, 4, 4);
        assert!(matches!(overlay_rays(&blank_of(4, 4), &half, &z), Err(RasterError::PlaneMismatch(_))));
    }

    fn blank_of(w: usize, h: usize) -> Image {
        Image {
            width: w,
            height: h,
            pixels: vec![[0, 0, 0]; w * h],
        }
    }

    #[test]
    fn csv_layout() {
        let rays = trace_ray(Rational::ONE, &RayOptions::default()).unwrap();
        let mut buf = Vec::new();
        write_rays_csv(&mut buf, &rays).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "p,q,branch,index,re_x,im_x,trace");
        assert_eq!(lines.len(), rays[0].points.len() + 2);
        assert_eq!(*lines.last().unwrap(), "1,1,real,-1,3.0,0.0,-2.0");
    }

    #[test]
    fn manifest_json() {
        let params = BowditchParams::default();
        let g = scan(&grid(c(2.5, 0.0), 0.2, 0.2, 2, 2, Plane::X), &SliceKind::Diagonal, &params).unwrap();
        let json = Manifest::new(&g, &SliceKind::Diagonal, &params, 7).to_json().unwrap();
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(v["slice"], "diagonal");
        assert_eq!(v["counts"]["in_set"], 4);
        assert_eq!(v["grid"]["nx"], 2);
        assert_eq!(v["grid"]["plane"], "x");
        assert_eq!(v["budgets"]["descent"], params.max_descent_steps);
        assert_eq!(v["wall_ms"], 7);
    }

    #[test]
    fn custom_slice_matches_builtin() {
        let custom = SliceKind::Custom(CustomSlice {
            a: "3i/(2*z) - i*z/2".parse().unwrap(),
            b: "0".parse().unwrap(),
            c: "-z/2 - 3/(2*z)".parse().unwrap(),
        });
        let z = c(1.1, 0.4);
        let builtin = SliceKind::TorusZeta.triple(z, Plane::Zeta);
        let mine = custom.triple(z, Plane::Zeta);
        for k in 0..3 {
            assert!((builtin[k] - mine[k]).norm() < 1e-14);
        }
    }

    proptest! {
        #[test]
        fn pixel_mapping_round_trips(
            cr in -10.0f64..10.0, ci in -10.0f64..10.0,
            w in 0.1f64..50.0, h in 0.1f64..50.0,
            nx in 1usize..300, ny in 1usize..300,
            fi in 0.0f64..1.0, fj in 0.0f64..1.0,
        ) {
            let g = grid(c(cr, ci), w, h, nx, ny, Plane::X);
            let i = ((fi * nx as f64) as usize).min(nx - 1);
            let j = ((fj * ny as f64) as usize).min(ny - 1);
            let z = g.sample(i, j);
            let (pi, pj) = g.pixel_coords(z);
            prop_assert!((pi - i as f64).abs() < 0.5 && (pj - j as f64).abs() < 0.5);
            prop_assert_eq!(g.pixel_of(z), Some((i, j)));
        }

        #[test]
        fn mirror_pixels_are_conjugate(nx in 1usize..100, ny in 1usize..100, j in 0usize..100) {
            let g = grid(c(0.5, 0.0), 12.0, 8.0, nx, ny, Plane::X);
            let j = j % ny;
            prop_assert_eq!(g.sample(0, j).conj(), g.sample(0, ny - 1 - j));
        }
    }
}
